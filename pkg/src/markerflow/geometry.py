"""Interface geometry: top-two regions, tie-set extraction, distances.

Tie sets {phi_i = phi_j} are contoured by marching squares with linear edge
interpolation on the periodic grid (contours may close across the boundary).
All distances use the periodic metric of the torus, never the covering plane.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gating import MarkerSet
from .spectral import Grid, gradient


class DegenerateContourError(ValueError):
    """The difference field vanishes identically: a fat tie set."""


@dataclass
class TieSetNetwork:
    """Per-pair polyline approximations of the tie sets {phi_i = phi_j}."""

    pairs: list  # (i, j, list of (m, 2) arrays), i < j
    restricted: bool

    def all_points(self, spacing: float) -> np.ndarray:
        """All pair polylines resampled at the given spacing, stacked."""
        chunks = [
            resample_polylines(polys, spacing) for _, _, polys in self.pairs if polys
        ]
        chunks = [c for c in chunks if len(c)]
        if not chunks:
            return np.empty((0, 2))
        return np.concatenate(chunks, axis=0)


def top_two_mask(m: MarkerSet, i: int, j: int) -> np.ndarray:
    """True where phi_i and phi_j both dominate every other marker (ties
    count as dominating)."""
    if i == j:
        raise ValueError("need two distinct phases")
    others = [k for k in range(m.k) if k != i and k != j]
    if not others:
        return np.ones_like(m.phi[0], dtype=bool)
    rest = np.max(m.phi[others], axis=0)
    return (m.phi[i] >= rest) & (m.phi[j] >= rest)


def _periodic_delta(a: np.ndarray, b: np.ndarray, length: float) -> np.ndarray:
    d = np.abs(a - b) % length
    return np.minimum(d, length - d)


def periodic_distance(p: np.ndarray, q: np.ndarray, length: float) -> np.ndarray:
    dx = _periodic_delta(p[..., 0], q[..., 0], length)
    dy = _periodic_delta(p[..., 1], q[..., 1], length)
    return np.hypot(dx, dy)


def _edge_point(p0, p1, v0, v1):
    # linear interpolation of the zero crossing along one cell edge
    t = v0 / (v0 - v1)
    return (p0[0] + t * (p1[0] - p0[0]), p0[1] + t * (p1[1] - p0[1]))


def marching_squares_periodic(grid: Grid, f: np.ndarray,
                              cell_mask: np.ndarray | None = None) -> list[np.ndarray]:
    """Zero contours of f on the periodic grid as a list of polylines.

    Cells are (i, i+1 mod n) x (j, j+1 mod n); a cell is processed when any
    corner lies in `cell_mask` (all cells when mask is None). Ambiguous saddle
    cells are resolved by the sign of the cell-center average. Points with
    f >= 0 count as the positive phase, so a fat zero set raises.
    """
    n, h, L = grid.n, grid.h, grid.length
    if np.all(f == 0):
        raise DegenerateContourError("difference field is identically zero")

    pos = f >= 0.0
    pos_r = np.roll(pos, -1, axis=0)
    pos_u = np.roll(pos, -1, axis=1)
    pos_ru = np.roll(pos_r, -1, axis=1)
    # cells whose corners are not all one sign
    s = pos.astype(np.int8) + pos_r + pos_u + pos_ru
    active = (s > 0) & (s < 4)
    if cell_mask is not None:
        corner_ok = cell_mask | np.roll(cell_mask, -1, 0) | np.roll(cell_mask, -1, 1) \
            | np.roll(np.roll(cell_mask, -1, 0), -1, 1)
        active &= corner_ok

    f_r = np.roll(f, -1, axis=0)
    f_u = np.roll(f, -1, axis=1)
    f_ru = np.roll(f_r, -1, axis=1)

    segments = []
    for i, j in zip(*np.nonzero(active)):
        # corners of the cell, counterclockwise from (i, j)
        v00, v10, v11, v01 = f[i, j], f_r[i, j], f_ru[i, j], f_u[i, j]
        x0, y0 = i * h, j * h
        p00, p10 = (x0, y0), (x0 + h, y0)
        p11, p01 = (x0 + h, y0 + h), (x0, y0 + h)
        crossings = []
        for (pa, pb, va, vb) in (
            (p00, p10, v00, v10),  # bottom
            (p10, p11, v10, v11),  # right
            (p01, p11, v01, v11),  # top
            (p00, p01, v00, v01),  # left
        ):
            if (va >= 0) != (vb >= 0):
                crossings.append(_edge_point(pa, pb, va, vb))
        if len(crossings) == 2:
            segments.append((crossings[0], crossings[1]))
        elif len(crossings) == 4:
            # saddle cell: pair crossings by the sign of the center value
            center = 0.25 * (v00 + v10 + v11 + v01)
            bottom, right, top, left = crossings
            if (center >= 0) == (v00 >= 0):
                segments.append((bottom, right))
                segments.append((left, top))
            else:
                segments.append((bottom, left))
                segments.append((right, top))

    return _chain_segments(segments, L)


def _chain_segments(segments, length: float) -> list[np.ndarray]:
    """Join segments that share endpoints into ordered polylines."""
    if not segments:
        return []

    def key(p):
        return (round(p[0] % length, 9) % length, round(p[1] % length, 9) % length)

    adjacency: dict = {}
    for idx, (a, b) in enumerate(segments):
        for p in (a, b):
            adjacency.setdefault(key(p), []).append(idx)

    used = [False] * len(segments)
    polylines = []
    for start in range(len(segments)):
        if used[start]:
            continue
        a, b = segments[start]
        used[start] = True
        chain = [a, b]
        # extend forward from b, then backward from a
        for endpoint, append in ((b, True), (a, False)):
            current = endpoint
            while True:
                nxt = None
                for idx in adjacency.get(key(current), []):
                    if not used[idx]:
                        nxt = idx
                        break
                if nxt is None:
                    break
                used[nxt] = True
                sa, sb = segments[nxt]
                current = sb if key(sa) == key(current) else sa
                if append:
                    chain.append(current)
                else:
                    chain.insert(0, current)
        pts = np.array(chain, dtype=float)
        pts %= length
        polylines.append(pts)
    return polylines


def extract_tie_set(m: MarkerSet, i: int, j: int, restricted: bool = True) -> list[np.ndarray]:
    """Polylines of {phi_i = phi_j}; when restricted, cells fully outside the
    top-two region of (i, j) are skipped."""
    if i == j:
        raise ValueError("need two distinct phases")
    f = m.phi[i] - m.phi[j]
    mask = top_two_mask(m, i, j) if restricted else None
    return marching_squares_periodic(m.grid, f, cell_mask=mask)


def tie_network(m: MarkerSet, restricted: bool = True) -> TieSetNetwork:
    """All pairwise tie sets, skipping pairs with no zero crossings."""
    pairs = []
    for i in range(m.k):
        for j in range(i + 1, m.k):
            pairs.append((i, j, extract_tie_set(m, i, j, restricted=restricted)))
    return TieSetNetwork(pairs=pairs, restricted=restricted)


def resample_polylines(polylines, spacing: float, length: float = 2 * np.pi) -> np.ndarray:
    """Points along the polylines at arclength spacing <= `spacing`.

    Each segment is traversed along the shortest periodic displacement
    (segments are at most one grid cell long, so this is the true segment).
    """
    if spacing <= 0:
        raise ValueError("spacing must be positive")
    pts_out = []
    for poly in polylines:
        if len(poly) == 0:
            continue
        pts_out.append(np.asarray(poly[0], dtype=float) % length)
        for a, b in zip(poly[:-1], poly[1:]):
            step = (b - a + 0.5 * length) % length - 0.5 * length
            seg_len = float(np.hypot(step[0], step[1]))
            pieces = max(1, int(np.ceil(seg_len / spacing)))
            for p in range(1, pieces + 1):
                pts_out.append((a + step * (p / pieces)) % length)
    return np.array(pts_out) if pts_out else np.empty((0, 2))


def distance_to_set(grid: Grid, pts: np.ndarray) -> np.ndarray:
    """Per-grid-point minimum periodic distance to the point set.

    Empty set -> field of +inf (sentinel)."""
    pts = np.asarray(pts, dtype=float)
    if pts.size == 0:
        return np.full((grid.n, grid.n), np.inf)
    gx = grid.x.ravel()
    gy = grid.y.ravel()
    out = np.empty(gx.shape[0])
    # chunk the grid side of the pairwise distance matrix
    chunk = max(1, 8_000_000 // max(1, pts.shape[0]))
    for s in range(0, gx.shape[0], chunk):
        dx = _periodic_delta(gx[s:s + chunk, None], pts[None, :, 0], grid.length)
        dy = _periodic_delta(gy[s:s + chunk, None], pts[None, :, 1], grid.length)
        out[s:s + chunk] = np.sqrt(dx * dx + dy * dy).min(axis=1)
    return out.reshape(grid.n, grid.n)


def _directed_hausdorff(a: np.ndarray, b: np.ndarray, length: float) -> float:
    best = 0.0
    chunk = max(1, 8_000_000 // max(1, b.shape[0]))
    for s in range(0, a.shape[0], chunk):
        dx = _periodic_delta(a[s:s + chunk, None, 0], b[None, :, 0], length)
        dy = _periodic_delta(a[s:s + chunk, None, 1], b[None, :, 1], length)
        best = max(best, float(np.sqrt(dx * dx + dy * dy).min(axis=1).max()))
    return best


def hausdorff(a: np.ndarray, b: np.ndarray, length: float = 2 * np.pi,
              method: str = "bucket") -> float:
    """Hausdorff distance between two point sets under the periodic metric.

    `method` = "brute" is the O(|a| |b|) definition; "bucket" uses a grid-
    bucket early-exit accelerator and returns the identical value. Empty
    inputs give the +inf sentinel.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size == 0 or b.size == 0:
        return np.inf
    if method == "brute":
        return max(_directed_hausdorff(a, b, length), _directed_hausdorff(b, a, length))
    if method == "bucket":
        return max(_directed_hausdorff_bucket(a, b, length),
                   _directed_hausdorff_bucket(b, a, length))
    raise ValueError(f"unknown method {method!r}")


def _directed_hausdorff_bucket(a: np.ndarray, b: np.ndarray, length: float) -> float:
    """sup_{p in a} inf_{q in b} d(p, q), with b bucketed on a coarse grid.

    For each query point, buckets are scanned in expanding rings and the scan
    stops once the remaining rings cannot beat the current minimum; the
    distances themselves are computed by the same formula as the brute force,
    so the value is bitwise identical.
    """
    nb = max(1, min(64, int(np.sqrt(b.shape[0]))))
    w = length / nb
    bi = np.minimum((b[:, 0] % length) / w, nb - 1).astype(int)
    bj = np.minimum((b[:, 1] % length) / w, nb - 1).astype(int)
    buckets: dict = {}
    for idx, (i, j) in enumerate(zip(bi, bj)):
        buckets.setdefault((i, j), []).append(idx)
    buckets = {k: b[v] for k, v in buckets.items()}

    max_ring = nb // 2 + 1
    best_sup = 0.0
    for p in a:
        ci = min(int((p[0] % length) / w), nb - 1)
        cj = min(int((p[1] % length) / w), nb - 1)
        best = np.inf
        for ring in range(max_ring + 1):
            # once every point of the next ring is provably farther, stop
            if best < (ring - 1) * w:
                break
            cells = []
            if ring == 0:
                cells.append((ci, cj))
            else:
                for di in range(-ring, ring + 1):
                    for dj in (-ring, ring):
                        cells.append(((ci + di) % nb, (cj + dj) % nb))
                for dj in range(-ring + 1, ring):
                    for di in (-ring, ring):
                        cells.append(((ci + di) % nb, (cj + dj) % nb))
            for cell in cells:
                q = buckets.get(cell)
                if q is None:
                    continue
                dx = _periodic_delta(p[0], q[:, 0], length)
                dy = _periodic_delta(p[1], q[:, 1], length)
                d = float(np.sqrt(dx * dx + dy * dy).min())
                if d < best:
                    best = d
        if best > best_sup:
            best_sup = best
    return best_sup


class TrigInterp:
    """Point evaluation of a grid field through its Fourier interpolant
    (exact off-grid values for band-limited fields)."""

    def __init__(self, grid: Grid, f: np.ndarray):
        self.grid = grid
        self.f_hat = grid.fft(f) / grid.n**2
        self.k1 = grid.kx[:, 0]

    def _phases(self, p):
        return np.exp(1j * self.k1 * p[0]), np.exp(1j * self.k1 * p[1])

    def value(self, p) -> float:
        ex, ey = self._phases(p)
        return float((ex @ self.f_hat @ ey).real)

    def grad(self, p) -> np.ndarray:
        ex, ey = self._phases(p)
        row = ex * 1j * self.k1
        return np.array([(row @ self.f_hat @ ey).real,
                         (ex @ self.f_hat @ (1j * self.k1 * ey)).real])

    def hess(self, p) -> np.ndarray:
        ex, ey = self._phases(p)
        kx, ky = self.k1, self.k1
        fxx = ((ex * (1j * kx) ** 2) @ self.f_hat @ ey).real
        fyy = (ex @ self.f_hat @ ((1j * ky) ** 2 * ey)).real
        fxy = ((ex * 1j * kx) @ self.f_hat @ (1j * ky * ey)).real
        return np.array([[fxx, fxy], [fxy, fyy]])


def _refine_strip_minimum(interp: TrigInterp, start: np.ndarray, delta: float,
                          radius: float) -> tuple[np.ndarray, float] | None:
    """Minimize |grad f|^2 subject to |f| <= delta near `start`; returns
    (point, |grad f|) or None when the solver leaves the trust region."""
    from scipy.optimize import minimize

    def objective(p):
        g = interp.grad(p)
        H = interp.hess(p)
        return float(g @ g), 2.0 * H @ g

    constraints = [
        {"type": "ineq", "fun": lambda p: delta - interp.value(p),
         "jac": lambda p: -interp.grad(p)},
        {"type": "ineq", "fun": lambda p: delta + interp.value(p),
         "jac": lambda p: interp.grad(p)},
    ]
    res = minimize(objective, start, jac=True, method="SLSQP",
                   constraints=constraints,
                   options={"maxiter": 60, "ftol": 1e-16})
    p = res.x
    if not np.all(np.isfinite(p)):
        return None
    moved = np.hypot(*(((p - start) + 0.5 * interp.grid.length) % interp.grid.length
                       - 0.5 * interp.grid.length))
    if moved > radius or abs(interp.value(p)) > delta * (1 + 1e-9) + 1e-12:
        return None
    return p, float(np.hypot(*interp.grad(p)))


def min_gradient_on_strip(m: MarkerSet, i: int, j: int, delta: float,
                          refine: bool = True) -> float:
    """min |grad(phi_i - phi_j)| over the strip {|phi_i - phi_j| <= delta}
    intersected with the top-two region; +inf when the strip is empty.

    The grid scan is followed by a sub-grid constrained minimization on the
    Fourier interpolant (exact for band-limited markers), so the value does
    not carry the O(h) bias of pure grid sampling. Refined points must stay
    inside the top-two region and within a few cells of their seed, else the
    grid value stands.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    grid = m.grid
    f = m.phi[i] - m.phi[j]
    mask = top_two_mask(m, i, j)
    strip = (np.abs(f) <= delta) & mask
    if not strip.any():
        return np.inf
    fx, fy = gradient(grid, f)
    gnorm = np.hypot(fx, fy)
    grid_min = float(gnorm[strip].min())
    if not refine:
        return grid_min

    # seed the refinement from the best strip points, spread over the grid
    masked = np.where(strip, gnorm, np.inf)
    flat_order = np.argsort(masked, axis=None)[:32]
    seeds = []
    for idx in flat_order:
        ii, jj = np.unravel_index(idx, masked.shape)
        if not np.isfinite(masked[ii, jj]):
            break
        p = np.array([ii * grid.h, jj * grid.h])
        if all(periodic_distance(p, q, grid.length) > 3 * grid.h for q in seeds):
            seeds.append(p)
        if len(seeds) >= 6:
            break

    interp = TrigInterp(grid, f)
    others = [TrigInterp(grid, m.phi[i] - m.phi[l]) for l in range(m.k) if l not in (i, j)]
    others += [TrigInterp(grid, m.phi[j] - m.phi[l]) for l in range(m.k) if l not in (i, j)]
    best = grid_min
    for seed in seeds:
        refined = _refine_strip_minimum(interp, seed, delta, radius=4 * grid.h)
        if refined is None:
            continue
        p, val = refined
        # the top-two restriction must still hold at the refined point
        if any(o.value(p) < -1e-9 for o in others):
            continue
        best = min(best, val)
    return best
