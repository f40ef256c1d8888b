"""Segment domains along the curve ordering, and constructive John
certificates with a dimension-only constant.

A segment domain is a union of consecutively numbered level-k cubes.  Under a
prefix-nested ordering its index interval decomposes canonically into maximal
filled dyadic cubes whose sizes are unimodal along the curve; the certificate
walks block centers from any start point toward the center of the middle-most
largest block, crossing shared faces at their midpoints.  Summing the segment
lengths with geometric series gives a constant depending only on the
dimension, never on the resolution or the index range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from itertools import product

import numpy as np

from .hilbert import DyadicCube, HilbertOrdering
from .spaces import GridFunction, GridMismatchError, LorentzParams, grid_gradient_lorentz_norm


class ConstructionError(ValueError):
    """The ordering does not support the certificate construction."""


class CertificateInvalidError(ValueError):
    """The certificate's curve leaves the domain it claims to certify."""


def uniform_john_constant(dim: int) -> float:
    """Dimension-only constant: 4 * (2(2^d - 1) + 1/2 + (5/2) sqrt(d)).

    The bracket bounds |x - gamma(t)| / 2^-g for a curve point inside a filled
    generation-g cube (same-generation hops, face-midpoint entries, and the
    center legs, each summed as a geometric series); the factor 4 converts the
    boundary-distance lower bound 2^-(g+2).
    """
    return 4.0 * (2.0 * (2**dim - 1) + 0.5 + 2.5 * math.sqrt(dim))


class CubeUnion:
    """Closed union of the cubes numbered i..j (1-based, inclusive)."""

    def __init__(self, ordering: HilbertOrdering, i: int, j: int):
        if not 1 <= i <= j <= len(ordering):
            raise IndexError(f"need 1 <= i <= j <= {len(ordering)}, got ({i}, {j})")
        self.ordering = ordering
        self.i = i
        self.j = j
        self.dim = ordering.dim
        self.level = ordering.order
        self.cubes = ordering.index_to_cube[i - 1 : j]
        self.coord_set = frozenset(c.coords for c in self.cubes)

    @property
    def cube_count(self) -> int:
        return self.j - self.i + 1

    def volume(self) -> Fraction:
        return self.cube_count * Fraction(1, 1 << (self.dim * self.level))

    def contains(self, point, tol: float = 1e-9) -> bool:
        """Membership in the closed union (faces belong)."""
        n = 1 << self.level
        candidates = []
        for x in point:
            s = float(x) * n
            base = math.floor(s + tol)
            cands = {min(max(base, 0), n - 1)}
            if abs(s - base) <= tol and base - 1 >= 0:
                cands.add(base - 1)
            candidates.append(cands)
        return any(c in self.coord_set for c in product(*candidates))

    @cached_property
    def is_connected(self) -> bool:
        if not self.cubes:
            return False
        todo = [self.cubes[0].coords]
        seen = {self.cubes[0].coords}
        while todo:
            z = todo.pop()
            for a in range(self.dim):
                for step in (-1, 1):
                    nb = z[:a] + (z[a] + step,) + z[a + 1 :]
                    if nb in self.coord_set and nb not in seen:
                        seen.add(nb)
                        todo.append(nb)
        return len(seen) == len(self.coord_set)

    @cached_property
    def _face_arrays(self):
        """Boundary faces as axis-aligned boxes (lows, highs), one degenerate axis."""
        lows, highs = [], []
        side = 1.0 / (1 << self.level)
        for cube in self.cubes:
            z = cube.coords
            for a in range(self.dim):
                for step in (-1, 1):
                    nb = z[:a] + (z[a] + step,) + z[a + 1 :]
                    if nb in self.coord_set:
                        continue
                    lo = [zz * side for zz in z]
                    hi = [(zz + 1) * side for zz in z]
                    plane = (z[a] + (1 if step == 1 else 0)) * side
                    lo[a] = hi[a] = plane
                    lows.append(lo)
                    highs.append(hi)
        return np.array(lows), np.array(highs)

    def boundary_distance(self, points) -> np.ndarray:
        """Exact Euclidean distance to the boundary, via the face decomposition."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        lows, highs = self._face_arrays
        out = np.empty(len(pts))
        chunk = max(1, int(4_000_000 // max(len(lows), 1)))
        for s in range(0, len(pts), chunk):
            blk = pts[s : s + chunk][:, None, :]
            delta = np.maximum(lows[None] - blk, blk - highs[None])
            np.maximum(delta, 0.0, out=delta)
            out[s : s + chunk] = np.sqrt((delta**2).sum(axis=2)).min(axis=1)
        return out

    def random_points(self, rng, count: int) -> np.ndarray:
        """Uniform samples from the union."""
        side = 1.0 / (1 << self.level)
        picks = rng.integers(0, self.cube_count, size=count)
        anchors = np.array([self.cubes[p].coords for p in picks], dtype=float) * side
        return anchors + rng.uniform(0.0, side, size=(count, self.dim))

    def cell_mask(self, cells_per_side: int) -> np.ndarray:
        """Boolean mask over the cells of a nested uniform grid."""
        k = self.level
        if cells_per_side % (1 << k):
            raise GridMismatchError(
                f"grid with {cells_per_side} cells per side is not nested "
                f"in the level-{k} cube family"
            )
        idx = (np.arange(cells_per_side) << k) // cells_per_side
        member = np.zeros((1 << k,) * self.dim, dtype=bool)
        for z in self.coord_set:
            member[z] = True
        return member[np.ix_(*([idx] * self.dim))]


def segment_domain(ordering: HilbertOrdering, i: int, j: int) -> CubeUnion:
    """The union of the cubes numbered i..j along the ordering."""
    return CubeUnion(ordering, i, j)


def _maximal_blocks(lo: int, hi: int, base: int):
    """Canonical tiling of the integer interval [lo, hi] by maximal aligned
    base**t blocks; block sizes are unimodal along the interval."""
    blocks = []
    pos = lo
    while pos <= hi:
        size = 1
        while pos % (size * base) == 0 and pos + size * base - 1 <= hi:
            size *= base
        blocks.append((pos, size))
        pos += size
    return blocks


def _gate(a: DyadicCube, b: DyadicCube):
    """Midpoint of the shared face rectangle of two face-adjacent boxes."""
    alo, ahi = a.box()
    blo, bhi = b.box()
    gate = []
    for lo1, hi1, lo2, hi2 in zip(alo, ahi, blo, bhi):
        lo, hi = max(lo1, lo2), min(hi1, hi2)
        if hi < lo:
            raise ConstructionError("blocks are not adjacent")
        gate.append(0.5 * (lo + hi))
    return gate


@dataclass
class JohnCertificate:
    """Certified curve construction: for sampled x and curve parameter t,
    dist(gamma(t), boundary) >= constant^-1 |x - gamma(t)|."""

    union: CubeUnion
    center: np.ndarray
    constant: float
    profile_bound: float
    blocks: list
    center_block: int
    runs_left: list
    runs_right: list
    _block_starts: list = field(repr=False, default_factory=list)
    _chains: dict = field(repr=False, default_factory=dict)

    def block_of_index(self, index: int) -> int:
        """Maximal-block position of the 1-based cube index."""
        pos = index - 1
        lo, hi = 0, len(self.blocks) - 1
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if self._block_starts[mid] <= pos:
                lo = mid
            else:
                hi = mid - 1
        return lo

    def chain_vertices(self, block_idx: int) -> np.ndarray:
        """Polyline from the block's center to the domain center x0."""
        if block_idx in self._chains:
            return self._chains[block_idx]
        step = 1 if block_idx < self.center_block else -1
        path = [np.array([float(c) for c in self.blocks[block_idx].center()])]
        b = block_idx
        while b != self.center_block:
            nxt = b + step
            path.append(np.array(_gate(self.blocks[b], self.blocks[nxt])))
            path.append(np.array([float(c) for c in self.blocks[nxt].center()]))
            b = nxt
        chain = np.array(path)
        self._chains[block_idx] = chain
        return chain

    def polyline(self, x) -> np.ndarray:
        """John curve from x to the center: x, block centers, face midpoints."""
        x = np.asarray(x, dtype=float)
        n = 1 << self.union.level
        cell = tuple(min(int(v * n), n - 1) for v in x)
        if cell not in self.union.coord_set:
            if not self.union.contains(x):
                raise CertificateInvalidError("start point outside the domain")
            for cand in self.union.coord_set:  # boundary point: any incident cell
                if all(c / n <= v <= (c + 1) / n for c, v in zip(cand, x)):
                    cell = cand
                    break
        index = self.union.ordering.cube_to_index[cell]
        chain = self.chain_vertices(self.block_of_index(index))
        return np.vstack([x[None, :], chain])


def john_bound_constructive(omega: CubeUnion) -> JohnCertificate:
    """Certificate from the maximal-block labeling along the curve.

    The central point is the center of the middle-most largest filled cube;
    per curve direction the same-generation run lengths then satisfy
    m_1 <= 2(2^d - 2) and m_l <= 2^d - 1, and the summed chain gives the
    uniform constant of :func:`uniform_john_constant`, independent of the
    resolution and of the index range.
    """
    ordering = omega.ordering
    if not (ordering.is_face_adjacent and ordering.is_prefix_nested):
        raise ConstructionError(
            "construction needs a face-adjacent, prefix-nested ordering"
        )
    d, k = omega.dim, omega.level
    base = 1 << d
    raw = _maximal_blocks(omega.i - 1, omega.j - 1, base)
    blocks = []
    for pos, size in raw:
        t = (size.bit_length() - 1) // d  # size = (2^d)^t
        blocks.append(omega.ordering.index_to_cube[pos].ancestor(k - t))

    min_level = min(c.level for c in blocks)
    oldest = [idx for idx, c in enumerate(blocks) if c.level == min_level]
    if oldest != list(range(oldest[0], oldest[-1] + 1)):
        raise ConstructionError("largest filled cubes are not consecutive")
    center_block = oldest[0] + (len(oldest) - 1) // 2
    x0 = np.array([float(c) for c in blocks[center_block].center()])

    def runs(indices):
        out = []
        for idx in indices:
            lvl = blocks[idx].level
            if out and out[-1][0] == lvl:
                out[-1] = (lvl, out[-1][1] + 1)
            else:
                out.append((lvl, 1))
        return out

    runs_left = runs(range(center_block - 1, -1, -1))
    runs_right = runs(range(center_block + 1, len(blocks)))

    cert = JohnCertificate(
        union=omega,
        center=x0,
        constant=uniform_john_constant(d),
        profile_bound=0.0,
        blocks=blocks,
        center_block=center_block,
        runs_left=runs_left,
        runs_right=runs_right,
        _block_starts=[pos for pos, _ in raw],
    )
    cert.profile_bound = _profile_bound(cert)
    return cert


def _profile_bound(cert: JohnCertificate) -> float:
    """The chain estimate evaluated on the actual generation profile.

    A single block (a cube, or the full cube after the generations collapse)
    yields sqrt(d), the straight-segment diagonal/side ratio; otherwise the
    maximum over start/target block pairs of 4 * (half-diagonal legs plus the
    connecting path length) / (target side).
    """
    d = cert.union.dim
    bound = math.sqrt(d)
    sides = [
        range(cert.center_block - 1, -1, -1),
        range(cert.center_block + 1, len(cert.blocks)),
    ]
    for side in sides:
        idxs = [cert.center_block, *side]
        # path length from each block's center to x0
        pref = [0.0]
        for inner, outer in zip(idxs, idxs[1:]):
            a, b = cert.blocks[outer], cert.blocks[inner]
            ca = np.array([float(c) for c in a.center()])
            cb = np.array([float(c) for c in b.center()])
            g = np.array(_gate(a, b))
            pref.append(pref[-1] + float(np.linalg.norm(ca - g) + np.linalg.norm(g - cb)))
        for t_pos in range(len(idxs)):  # gamma(t) inside this block
            h_t = float(cert.blocks[idxs[t_pos]].side)
            for x_pos in range(t_pos, len(idxs)):  # x in this or an outer block
                h_x = float(cert.blocks[idxs[x_pos]].side)
                reach = (
                    0.5 * math.sqrt(d) * h_x
                    + (pref[x_pos] - pref[t_pos])
                    + 0.5 * math.sqrt(d) * h_t
                )
                if x_pos > t_pos:
                    bound = max(bound, 4.0 * reach / h_t)
    return bound


def verify_john_certificate(omega: CubeUnion, cert: JohnCertificate, samples: int, rng=None):
    """Sample start points and curve parameters; report the worst ratio.

    ``samples`` counts evaluated (start point, curve point) pairs.  Start
    points are all member-cube centers plus uniform interior points until the
    budget is met; curve points are the polyline vertices and segment
    midpoints.  Passes iff max |x - gamma(t)| / dist(gamma(t), boundary) stays
    within the certified constant.
    """
    if samples < 1:
        raise ValueError("need samples >= 1")
    if rng is None:
        rng = np.random.default_rng(0)
    nblocks = len(cert.blocks)

    shared_pts, shared_dist = [], []
    for b in range(nblocks):
        W = cert.chain_vertices(b)
        pts = W if len(W) == 1 else np.vstack([W, 0.5 * (W[:-1] + W[1:])])
        for p in pts:
            if not omega.contains(p):
                raise CertificateInvalidError("polyline exits the domain")
        shared_pts.append(pts)
        shared_dist.append(omega.boundary_distance(pts))

    # start points: member-cube centers first, then random interior fills
    centers = np.array(
        [[float(c) for c in cube.center()] for cube in omega.cubes]
    )
    blocks_of_cells = np.array(
        [cert.block_of_index(idx) for idx in range(omega.i, omega.j + 1)]
    )
    xs = [centers]
    x_blocks = [blocks_of_cells]
    pair_cost = np.array([len(p) + 1 for p in shared_pts])
    total = int(pair_cost[blocks_of_cells].sum())
    while total < samples:
        need = max(64, (samples - total) // (int(pair_cost.mean()) + 1) + 1)
        extra = omega.random_points(rng, need)
        n = 1 << omega.level
        cells = np.minimum((extra * n).astype(int), n - 1)
        idxs = np.array(
            [omega.ordering.cube_to_index[tuple(c)] for c in cells]
        )
        eb = np.array([cert.block_of_index(i) for i in idxs])
        xs.append(extra)
        x_blocks.append(eb)
        total += int(pair_cost[eb].sum())

    X = np.vstack(xs)
    XB = np.concatenate(x_blocks)
    worst = 0.0
    for b in range(nblocks):
        sel = XB == b
        if not sel.any():
            continue
        pts_x = X[sel]
        P, D = shared_pts[b], shared_dist[b]
        diff = pts_x[:, None, :] - P[None, :, :]
        ratios = np.sqrt((diff**2).sum(axis=2)) / D[None, :]
        worst = max(worst, float(ratios.max()))
        head = cert.chain_vertices(b)[0]
        mid = 0.5 * (pts_x + head)
        dq = omega.boundary_distance(mid)
        worst = max(worst, float((np.linalg.norm(pts_x - mid, axis=1) / dq).max()))
    return worst <= cert.constant * (1 + 1e-9), worst


def oscillation_check(omega: CubeUnion, u: GridFunction, certificate: JohnCertificate | None = None):
    """Check osc(u; Omega) <= constant * ||gradient||_{d,1} on the subdomain.

    The oscillation of the interpolant over the closed union is the node range
    over member cells; the gradient norm restricts to member cells (extension
    by zero).  Returns ``(holds, oscillation, bound)``.
    """
    if certificate is None:
        certificate = john_bound_constructive(omega)
    if u.dim != omega.dim:
        raise GridMismatchError("dimension mismatch between function and domain")
    mask = omega.cell_mask(u.cells_per_side)
    node_mask = np.zeros((u.cells_per_side + 1,) * u.dim, dtype=bool)
    for offsets in product((0, 1), repeat=u.dim):
        view = node_mask[
            tuple(slice(o, u.cells_per_side + o) for o in offsets)
        ]
        view |= mask
    vals = u.nodal_values[node_mask]
    osc = float(vals.max() - vals.min())
    norm = grid_gradient_lorentz_norm(u, LorentzParams(u.dim, 1), cell_mask=mask)
    bound = certificate.constant * norm
    return osc <= bound + 1e-12, osc, bound
