from fractions import Fraction

import pytest

from snum.hilbert import (
    CapacityError,
    DyadicCube,
    HilbertOrdering,
    check_face_adjacency,
    check_prefix_nesting,
    decode,
    encode,
    hilbert_order,
)


class TestDyadicCube:
    def test_geometry(self):
        c = DyadicCube(2, (1, 3))
        assert c.side == Fraction(1, 4)
        assert c.volume == Fraction(1, 16)
        assert c.center() == (Fraction(3, 8), Fraction(7, 8))

    def test_coordinate_range_checked(self):
        with pytest.raises(ValueError):
            DyadicCube(1, (0, 2))

    def test_ancestor(self):
        c = DyadicCube(3, (5, 6))
        assert c.ancestor(1).coords == (1, 1)


class TestGenerator:
    def test_one_dimensional_scan(self):
        ordering = hilbert_order(1, 2)
        assert [c.coords for c in ordering.index_to_cube] == [(0,), (1,), (2,), (3,)]

    def test_first_order_u_shape(self):
        ordering = hilbert_order(2, 1)
        assert [c.coords for c in ordering.index_to_cube] == [
            (0, 0), (0, 1), (1, 1), (1, 0),
        ]

    @pytest.mark.parametrize("dim,order", [(2, 3), (3, 3), (2, 6)])
    def test_structural_checks(self, dim, order):
        ordering = hilbert_order(dim, order)
        assert check_face_adjacency(ordering) == (True, None)
        assert check_prefix_nesting(ordering) == (True, None)

    @pytest.mark.parametrize("dim,orders", [(2, range(1, 6)), (3, range(1, 4))])
    def test_bijectivity_exhaustive(self, dim, orders):
        for order in orders:
            total = 1 << (dim * order)
            seen = set()
            for i in range(total):
                coords = decode(i, dim, order)
                assert encode(coords, dim, order) == i
                seen.add(coords)
            assert len(seen) == total

    def test_index_lookup_roundtrip(self):
        ordering = hilbert_order(2, 3)
        for idx in (1, 17, 64):
            assert ordering.index_of(ordering.cube(idx)) == idx
        with pytest.raises(IndexError):
            ordering.cube(0)
        with pytest.raises(IndexError):
            ordering.cube(65)

    def test_self_similarity_exact(self):
        # blocks of 2^d consecutive cubes trace the coarser curve exactly
        for dim, order in [(2, 4), (3, 2)]:
            fine = hilbert_order(dim, order)
            coarse = hilbert_order(dim, order - 1)
            block = 1 << dim
            parents = [
                fine.index_to_cube[i * block].ancestor(order - 1).coords
                for i in range(len(fine) // block)
            ]
            assert parents == [c.coords for c in coarse.index_to_cube]

    def test_consecutive_center_distance(self):
        # locality: consecutive cube centers are exactly one side length apart
        ordering = hilbert_order(2, 4)
        side = Fraction(1, 16)
        for a, b in zip(ordering.index_to_cube, ordering.index_to_cube[1:]):
            delta = [abs(x - y) for x, y in zip(a.center(), b.center())]
            assert sorted(delta) == [0, side]

    def test_capacity_error(self):
        with pytest.raises(CapacityError):
            hilbert_order(2, 12)

    def test_argument_validation(self):
        with pytest.raises(ValueError):
            hilbert_order(0, 1)
        with pytest.raises(ValueError):
            hilbert_order(2, 0)


class TestCheckers:
    def test_row_major_fails_adjacency(self):
        cells = [DyadicCube(1, (i, j)) for i in range(2) for j in range(2)]
        ordering = HilbertOrdering(2, 1, cells)
        ok, where = check_face_adjacency(ordering)
        assert not ok and where == 2  # wrap from (0,1) to (1,0)

    def test_boustrophedon_fails_nesting(self):
        # serpentine rows at order 2: the second coarse quadrant is revisited
        cells = []
        for x in range(4):
            ys = range(4) if x % 2 == 0 else range(3, -1, -1)
            cells.extend(DyadicCube(2, (x, y)) for y in ys)
        ordering = HilbertOrdering(2, 2, cells)
        assert check_face_adjacency(ordering)[0]
        ok, cube = check_prefix_nesting(ordering)
        assert not ok and cube.level == 1

    def test_order_one_nesting_trivially_true(self):
        cells = [DyadicCube(1, (i, j)) for i in range(2) for j in range(2)]
        ordering = HilbertOrdering(2, 1, cells)  # not even face-adjacent
        assert check_prefix_nesting(ordering)[0]

    def test_duplicate_cube_rejected(self):
        cells = [DyadicCube(1, (0, 0))] * 4
        with pytest.raises(ValueError):
            HilbertOrdering(2, 1, cells)
