"""Hilbert-curve numbering of the dyadic cube families of the unit cube.

The generator is the classic reflect/rotate recursion expressed through
Gray-code "travel" frames: at each refinement level the local step sequence is
a rotated, reflected copy of the canonical Gray code.  The top-level frame is
fixed (independent of the order), which makes the self-similarity across
orders an exact identity: the level-(k-1) block order induced by the order-k
curve equals the order-(k-1) curve.

The two checkers below are the actual contract; any generator passing both is
interchangeable with this one.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

MAX_CUBES = 1 << 22


class CapacityError(ValueError):
    """The requested table of 2^(dim*order) cubes exceeds the supported size."""


@dataclass(frozen=True)
class DyadicCube:
    """The open cube 2^-level * (coords + (0,1)^d); side 2^-level."""

    level: int
    coords: tuple

    def __post_init__(self):
        if self.level < 0:
            raise ValueError("level must be >= 0")
        for z in self.coords:
            if not 0 <= z < (1 << self.level):
                raise ValueError("coords outside the level's index range")

    @property
    def dim(self) -> int:
        return len(self.coords)

    @property
    def side(self) -> Fraction:
        return Fraction(1, 1 << self.level)

    @property
    def volume(self) -> Fraction:
        return self.side**self.dim

    def center(self) -> tuple:
        return tuple(Fraction(2 * z + 1, 1 << (self.level + 1)) for z in self.coords)

    def box(self):
        """(lows, highs) as exact dyadic floats."""
        h = 1.0 / (1 << self.level)
        lows = tuple(z * h for z in self.coords)
        highs = tuple((z + 1) * h for z in self.coords)
        return lows, highs

    def ancestor(self, level: int) -> "DyadicCube":
        if level > self.level:
            raise ValueError("ancestor level must be coarser")
        shift = self.level - level
        return DyadicCube(level, tuple(z >> shift for z in self.coords))


# -- Gray-code travel frames --------------------------------------------------


def _gray(i: int) -> int:
    return i ^ (i >> 1)


def _gray_inverse(g: int) -> int:
    i = g
    shift = 1
    while (g >> shift) > 0:
        i ^= g >> shift
        shift += 1
    return i


def _travel(start: int, end: int, mask: int, i: int) -> int:
    # Gray code rotated so that step 0 is `start` and step `mask` is `end`
    travel_bit = start ^ end
    modulus = mask + 1
    g = _gray(i) * (travel_bit * 2)
    return ((g | (g // modulus)) & mask) ^ start

def _travel_inverse(start: int, end: int, mask: int, cell: int) -> int:
    travel_bit = start ^ end
    modulus = mask + 1
    rg = (cell ^ start) * (modulus // (travel_bit * 2))
    return _gray_inverse((rg | (rg // modulus)) & mask)


def _child_frame(start: int, end: int, mask: int, i: int):
    start_i = max(0, (i - 1) & ~1)  # largest even number <= i, clipped at 0
    end_i = min(mask, (i + 1) | 1)  # smallest odd number >= i, clipped at mask
    return (
        _travel(start, end, mask, start_i),
        _travel(start, end, mask, end_i),
    )


def _initial_frame(dim: int):
    return 0, 1 << (dim - 1)


def decode(index0: int, dim: int, order: int) -> tuple:
    """Zero-based curve position -> cube coordinates at the given order."""
    mask = (1 << dim) - 1
    start, end = _initial_frame(dim)
    coords = [0] * dim
    for level in range(order):
        chunk = (index0 >> (dim * (order - 1 - level))) & mask
        cell = _travel(start, end, mask, chunk)
        for a in range(dim):
            coords[a] = (coords[a] << 1) | ((cell >> (dim - 1 - a)) & 1)
        start, end = _child_frame(start, end, mask, chunk)
    return tuple(coords)


def encode(coords, dim: int, order: int) -> int:
    """Cube coordinates -> zero-based curve position (inverse of decode)."""
    mask = (1 << dim) - 1
    start, end = _initial_frame(dim)
    index0 = 0
    for level in range(order):
        cell = 0
        for a in range(dim):
            cell = (cell << 1) | ((coords[a] >> (order - 1 - level)) & 1)
        chunk = _travel_inverse(start, end, mask, cell)
        index0 = (index0 << dim) | chunk
        start, end = _child_frame(start, end, mask, chunk)
    return index0


class HilbertOrdering:
    """A bijective numbering {1, ..., 2^(dim*order)} -> cubes of the order-th
    dyadic generation, face-connected and prefix-nested."""

    def __init__(self, dim: int, order: int, index_to_cube):
        self.dim = dim
        self.order = order
        self.index_to_cube = list(index_to_cube)
        self.cube_to_index = {
            cube.coords: i + 1 for i, cube in enumerate(self.index_to_cube)
        }
        if len(self.cube_to_index) != len(self.index_to_cube):
            raise ValueError("numbering is not injective")

    def __len__(self) -> int:
        return len(self.index_to_cube)

    def cube(self, index: int) -> DyadicCube:
        if not 1 <= index <= len(self):
            raise IndexError(f"index {index} outside 1..{len(self)}")
        return self.index_to_cube[index - 1]

    def index_of(self, cube: DyadicCube) -> int:
        return self.cube_to_index[cube.coords]

    @cached_property
    def is_face_adjacent(self) -> bool:
        return check_face_adjacency(self)[0]

    @cached_property
    def is_prefix_nested(self) -> bool:
        return check_prefix_nesting(self)[0]


def hilbert_order(dim: int, order: int) -> HilbertOrdering:
    """Materialize the order-th curve approximation as an ordering table."""
    if dim < 1 or order < 1:
        raise ValueError("need dim >= 1 and order >= 1")
    total = 1 << (dim * order)
    if total > MAX_CUBES:
        raise CapacityError(f"2^(dim*order) = {total} exceeds {MAX_CUBES}")
    cubes = [DyadicCube(order, decode(i, dim, order)) for i in range(total)]
    return HilbertOrdering(dim, order, cubes)


def check_face_adjacency(ordering: HilbertOrdering):
    """True iff consecutive cubes differ by 1 in exactly one coordinate.

    Returns ``(ok, first_violation_index)`` where the index (1-based) points at
    the first pair (index, index+1) violating adjacency.
    """
    cubes = ordering.index_to_cube
    for i in range(len(cubes) - 1):
        a, b = cubes[i].coords, cubes[i + 1].coords
        if sum(abs(x - y) for x, y in zip(a, b)) != 1:
            return False, i + 1
    return True, None


def check_prefix_nesting(ordering: HilbertOrdering):
    """True iff every coarser cube's descendants occupy one contiguous block.

    Returns ``(ok, first_violating_cube)``.
    """
    k = ordering.order
    cubes = ordering.index_to_cube
    for level in range(k):
        seen = set()
        shift = k - level
        current = None
        for cube in cubes:
            anc = tuple(z >> shift for z in cube.coords)
            if anc == current:
                continue
            if anc in seen:
                return False, DyadicCube(level, anc)
            seen.add(anc)
            current = anc
    return True, None
