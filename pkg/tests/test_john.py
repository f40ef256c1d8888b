import math
from fractions import Fraction

import numpy as np
import pytest

from snum.hilbert import DyadicCube, HilbertOrdering, hilbert_order
from snum.john import (
    CertificateInvalidError,
    ConstructionError,
    john_bound_constructive,
    oscillation_check,
    segment_domain,
    uniform_john_constant,
    verify_john_certificate,
)
from snum.spaces import GridFunction, GridMismatchError


@pytest.fixture(scope="module")
def ordering_k3():
    return hilbert_order(2, 3)


class TestSegmentDomain:
    def test_single_cube_center_distance(self, ordering_k3):
        omega = segment_domain(ordering_k3, 5, 5)
        center = np.array([float(c) for c in omega.cubes[0].center()])
        assert omega.boundary_distance([center])[0] == pytest.approx(1 / 16, abs=0)

    def test_full_cube(self, ordering_k3):
        omega = segment_domain(ordering_k3, 1, 64)
        assert omega.boundary_distance([[0.5, 0.5]])[0] == pytest.approx(0.5, abs=0)
        assert omega.volume() == 1

    def test_four_cell_union_connected(self):
        ordering = hilbert_order(2, 2)
        omega = segment_domain(ordering, 2, 5)
        assert omega.cube_count == 4
        assert omega.is_connected
        assert omega.volume() == Fraction(4, 16)

    def test_index_range_checked(self, ordering_k3):
        with pytest.raises(IndexError):
            segment_domain(ordering_k3, 0, 5)
        with pytest.raises(IndexError):
            segment_domain(ordering_k3, 5, 65)
        with pytest.raises(IndexError):
            segment_domain(ordering_k3, 7, 6)

    def test_membership_includes_faces(self, ordering_k3):
        omega = segment_domain(ordering_k3, 1, 4)  # the first coarse quadrant
        assert omega.contains([0.0, 0.0])
        assert omega.contains([0.25, 0.25])
        assert not omega.contains([0.75, 0.75])

    def test_boundary_distance_exact_on_l_shape(self):
        # three cells of the first-order curve: (0,0),(0,1),(1,1)
        ordering = hilbert_order(2, 1)
        omega = segment_domain(ordering, 1, 3)
        # nearest boundary piece from (0.4, 0.4) is the face of the missing
        # cell at x = 1/2; from (0.4, 0.6), diagonally across the re-entrant
        # corner, the distance is to the corner point itself
        assert omega.boundary_distance([[0.4, 0.4]])[0] == pytest.approx(0.1, rel=1e-12)
        assert omega.boundary_distance([[0.25, 0.25]])[0] == pytest.approx(0.25, abs=0)
        assert omega.boundary_distance([[0.4, 0.6]])[0] == pytest.approx(
            math.hypot(0.1, 0.1), rel=1e-12
        )

    def test_random_points_inside(self, ordering_k3):
        omega = segment_domain(ordering_k3, 3, 17)
        rng = np.random.default_rng(0)
        for p in omega.random_points(rng, 200):
            assert omega.contains(p)

    def test_cell_mask_needs_nested_grid(self, ordering_k3):
        omega = segment_domain(ordering_k3, 1, 8)
        with pytest.raises(GridMismatchError):
            omega.cell_mask(12)
        mask = omega.cell_mask(16)
        assert mask.sum() == 8 * 4  # 4 fine cells per member cube


class TestConstructiveCertificate:
    def test_single_cube_profile_is_diagonal_ratio(self, ordering_k3):
        cert = john_bound_constructive(segment_domain(ordering_k3, 7, 7))
        assert cert.profile_bound == pytest.approx(math.sqrt(2), rel=1e-12)

    def test_full_cube_collapses_to_single_generation(self, ordering_k3):
        cert = john_bound_constructive(segment_domain(ordering_k3, 1, 64))
        assert len(cert.blocks) == 1 and cert.blocks[0].level == 0
        assert cert.profile_bound == pytest.approx(math.sqrt(2), rel=1e-12)
        assert np.allclose(cert.center, [0.5, 0.5])

    def test_constant_shared_across_random_pairs(self):
        ordering = hilbert_order(2, 4)
        rng = np.random.default_rng(42)
        constants = set()
        for _ in range(500):
            i = int(rng.integers(1, 257))
            j = int(rng.integers(i, 257))
            cert = john_bound_constructive(segment_domain(ordering, i, j))
            constants.add(cert.constant)
            assert cert.profile_bound <= cert.constant + 1e-9
        assert constants == {uniform_john_constant(2)}

    def test_run_length_bounds_exhaustive(self):
        # per curve direction: first-generation extras <= 2(2^d - 2),
        # later generations <= 2^d - 1
        for order in (2, 3, 4):
            ordering = hilbert_order(2, order)
            total = len(ordering)
            for i in range(1, total + 1):
                for j in range(i, total + 1):
                    cert = john_bound_constructive(segment_domain(ordering, i, j))
                    top = cert.blocks[cert.center_block].level
                    for runs in (cert.runs_left, cert.runs_right):
                        for pos, (level, count) in enumerate(runs):
                            if pos == 0 and level == top:
                                assert count <= 2 * (2**2 - 2)
                            else:
                                assert count <= 2**2 - 1

    def test_requires_structured_ordering(self):
        cells = [DyadicCube(1, (i, j)) for i in range(2) for j in range(2)]
        row_major = HilbertOrdering(2, 1, cells)
        omega = segment_domain(row_major, 1, 4)
        with pytest.raises(ConstructionError):
            john_bound_constructive(omega)

    def test_polyline_starts_at_x_and_ends_at_center(self, ordering_k3):
        omega = segment_domain(ordering_k3, 3, 30)
        cert = john_bound_constructive(omega)
        x = np.array([float(c) for c in omega.cubes[-1].center()])
        path = cert.polyline(x)
        assert np.allclose(path[0], x)
        assert np.allclose(path[-1], cert.center)
        for p in path:
            assert omega.contains(p)


class TestVerification:
    def test_single_cube_straight_segment(self, ordering_k3):
        omega = segment_domain(ordering_k3, 11, 11)
        cert = john_bound_constructive(omega)
        ok, worst = verify_john_certificate(omega, cert, 2000)
        assert ok
        assert worst <= math.sqrt(2) + 1e-9

    def test_wrong_constant_fails(self):
        ordering = hilbert_order(2, 1)
        omega = segment_domain(ordering, 1, 3)  # L-shaped
        cert = john_bound_constructive(omega)
        cert.constant = 1.0
        ok, worst = verify_john_certificate(omega, cert, 5000)
        assert not ok and worst > 1.0

    def test_sample_budget_validated(self, ordering_k3):
        omega = segment_domain(ordering_k3, 1, 4)
        cert = john_bound_constructive(omega)
        with pytest.raises(ValueError):
            verify_john_certificate(omega, cert, 0)

    def test_foreign_certificate_rejected(self, ordering_k3):
        inside = segment_domain(ordering_k3, 1, 4)
        outside = segment_domain(ordering_k3, 40, 50)
        cert = john_bound_constructive(outside)
        with pytest.raises(CertificateInvalidError):
            verify_john_certificate(inside, cert, 100)

    def test_exhaustive_order_two(self):
        ordering = hilbert_order(2, 2)
        rng = np.random.default_rng(5)
        for i in range(1, 17):
            for j in range(i, 17):
                omega = segment_domain(ordering, i, j)
                cert = john_bound_constructive(omega)
                ok, _ = verify_john_certificate(omega, cert, 2000, rng=rng)
                assert ok, (i, j)


class TestOscillationCheck:
    def test_constant_function_passes(self, ordering_k3):
        omega = segment_domain(ordering_k3, 2, 9)
        u = GridFunction(2, 16, np.full((17, 17), 2.5))
        holds, osc, bound = oscillation_check(omega, u)
        assert holds and osc == 0.0 and bound == 0.0

    def test_hat_in_one_cube(self, ordering_k3):
        omega = segment_domain(ordering_k3, 5, 12)
        cube = omega.cubes[0]
        center = [float(c) for c in cube.center()]
        r = float(cube.side) / 2

        def hat(x, y):
            return np.maximum(0.0, r - np.hypot(x - center[0], y - center[1]))

        u = GridFunction.from_callable(hat, 2, 64)
        holds, osc, bound = oscillation_check(omega, u)
        assert holds
        assert osc == pytest.approx(r, rel=1e-12)  # oscillation = cone height
        assert bound > osc  # slack from the certified constant

    def test_random_boundary_zero_trials(self, ordering_k3):
        rng = np.random.default_rng(17)
        for _ in range(100):
            i = int(rng.integers(1, 65))
            j = int(rng.integers(i, 65))
            omega = segment_domain(ordering_k3, i, j)
            u = GridFunction.random_interior(rng, 2, 16)
            holds, osc, bound = oscillation_check(omega, u)
            assert holds, (i, j, osc, bound)

    def test_dimension_mismatch(self, ordering_k3):
        omega = segment_domain(ordering_k3, 1, 4)
        u = GridFunction(3, 8, np.zeros((9, 9, 9)))
        with pytest.raises(GridMismatchError):
            oscillation_check(omega, u)

    def test_equal_resolution_grid(self, ordering_k3):
        # one grid cell per member cube is the coarsest nested resolution
        omega = segment_domain(ordering_k3, 3, 20)
        rng = np.random.default_rng(2)
        u = GridFunction.random_interior(rng, 2, 8)
        holds, osc, bound = oscillation_check(omega, u)
        assert holds

    def test_three_dimensional_union(self):
        ordering = hilbert_order(3, 2)
        omega = segment_domain(ordering, 5, 40)
        rng = np.random.default_rng(6)
        u = GridFunction.random_interior(rng, 3, 8)
        holds, osc, bound = oscillation_check(omega, u)
        assert holds and bound >= osc


def test_uniform_constant_values():
    assert uniform_john_constant(2) == pytest.approx(4 * (6 + 0.5 + 2.5 * math.sqrt(2)))
    assert uniform_john_constant(3) == pytest.approx(4 * (14 + 0.5 + 2.5 * math.sqrt(3)))
