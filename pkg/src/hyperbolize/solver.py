"""Discrete conformal cell map by neighbor averaging.

A square grid of spacing `delta` is laid over the hyperbolic cell.  Every
active point repeatedly becomes the average of its four neighbors' image
positions; neighbors outside the cell are read through "ghost rules" that
fold the neighbor into the cell, bilinearly interpolate the map there, and
unfold the value with the matching Euclidean motion.  The iteration is a
plain double-buffered (Jacobi) sweep and converges to the discrete
conformal map between the two cells.
"""

from __future__ import annotations

import dataclasses
import math
import time
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

import numpy as np

from .geometry import CellSpec, GeometryKind, Motion, quad_family
from .symmetry import (
    FoldError,
    GroupWord,
    ReflectionGroup,
    corresponding_word,
    locate,
    reflection_group,
)

__all__ = [
    "GridError",
    "SolveError",
    "GridIndex",
    "GhostRule",
    "SolverState",
    "SolveReport",
    "ConformalityStats",
    "build_grid",
    "build_ghost_rules",
    "init_state",
    "sweep",
    "solve",
    "interpolate",
    "extended_map_value",
    "conformality_report",
    "conformal_energy",
    "modulus_search",
]


class GridError(ValueError):
    pass


class SolveError(RuntimeError):
    pass


class GridIndex(NamedTuple):
    i: int
    j: int


@dataclass(frozen=True)
class GhostRule:
    """How to synthesize the image of an out-of-cell grid point."""

    source: GridIndex
    fold_word: GroupWord
    cell_corner: GridIndex
    weights: tuple[float, float, float, float]
    back_motion: Motion


@dataclass(frozen=True)
class SolveReport:
    iterations: int
    final_residual: float
    conformality_median: float
    wall_time: float
    converged: bool
    residual_history: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class ConformalityStats:
    angle_deviation: np.ndarray  # radians away from a right angle, per point
    ratio_deviation: np.ndarray  # |d2|/|d1| - 1, per point
    median_angle: float
    median_ratio: float

    @property
    def count(self) -> int:
        return len(self.angle_deviation)


@dataclass
class SolverState:
    """Grid index sets, their image vector and the ghost-rule tables.

    Point k of the canonical ordering (ascending (j, i)) sits at
    delta * (index[k,0] + 1j*index[k,1]) and its current image is p[k].
    """

    delta: float
    cell_hyp: CellSpec
    cell_euc: CellSpec | None
    index: np.ndarray        # (m, 2) int64, canonical order
    is_inner: np.ndarray     # (m,) bool
    pos: np.ndarray          # (m,) complex128 plane coordinates
    p: np.ndarray            # (m,) complex128 image positions
    iteration_count: int = 0
    residual: float = math.inf

    # dense (j, i) -> row lookup over the grid bounding box
    _row_of: np.ndarray | None = None
    _i0: int = 0
    _j0: int = 0

    # ghost tables (filled by build_ghost_rules)
    _ghost_index: np.ndarray | None = None    # (R, 2) int64 source grid index
    _ghost_corners: np.ndarray | None = None  # (R, 4) int64 rows of the cell corners
    _ghost_weights: np.ndarray | None = None  # (R, 4) float64
    _ghost_rot: np.ndarray | None = None      # (R,) complex128
    _ghost_shift: np.ndarray | None = None    # (R,) complex128
    _ghost_conj: np.ndarray | None = None     # (R,) bool
    _ghost_words: list[GroupWord] | None = None
    # per neighbor slot (+1, -1, +i, -i): positions and sources
    _nb_inner_pos: list[np.ndarray] | None = None
    _nb_inner_src: list[np.ndarray] | None = None
    _nb_ghost_pos: list[np.ndarray] | None = None
    _nb_ghost_src: list[np.ndarray] | None = None

    # ------------------------------------------------------------------
    @property
    def size(self) -> int:
        return len(self.index)

    @property
    def ghosts_built(self) -> bool:
        return self._ghost_corners is not None

    @property
    def diam_target(self) -> float:
        cell = self.cell_euc if self.cell_euc is not None else self.cell_hyp
        return cell.diameter()

    def row_of(self, i: int, j: int) -> int:
        """Row index of grid point (i, j), or -1."""
        g = self._row_of
        jj, ii = j - self._j0, i - self._i0
        if g is None or not (0 <= jj < g.shape[0] and 0 <= ii < g.shape[1]):
            return -1
        return int(g[jj, ii])

    @property
    def inner(self) -> frozenset[GridIndex]:
        return frozenset(GridIndex(int(i), int(j)) for i, j in self.index[self.is_inner])

    @property
    def boundary(self) -> frozenset[GridIndex]:
        return frozenset(GridIndex(int(i), int(j)) for i, j in self.index[~self.is_inner])

    @property
    def ghost_rules(self) -> dict[GridIndex, GhostRule]:
        if not self.ghosts_built:
            return {}
        rules = {}
        for k in range(len(self._ghost_index)):
            gi = GridIndex(int(self._ghost_index[k, 0]), int(self._ghost_index[k, 1]))
            corner_row = self._ghost_corners[k, 0]
            ci, cj = (int(v) for v in self.index[corner_row])
            rot = complex(self._ghost_rot[k])
            shift = complex(self._ghost_shift[k])
            motion = Motion.from_coefficients(rot, shift, 0.0, 1.0, bool(self._ghost_conj[k]))
            rules[gi] = GhostRule(
                source=gi,
                fold_word=self._ghost_words[k],
                cell_corner=GridIndex(ci, cj),
                weights=tuple(float(w) for w in self._ghost_weights[k]),
                back_motion=motion,
            )
        return rules

    def image_of(self, idx: GridIndex) -> complex:
        row = self.row_of(*idx)
        if row < 0:
            raise GridError(f"grid point {idx} is not active")
        return complex(self.p[row])


# ---------------------------------------------------------------------------
# grid construction


def _cell_bbox(cell: CellSpec) -> tuple[float, float, float, float]:
    xs = [v.real for v in cell.vertices]
    ys = [v.imag for v in cell.vertices]
    for e, va, vb in _edge_spans(cell):
        if e is None:
            continue
        m, r, th_a, th_b = e
        for k, ang in enumerate((0.0, 0.5 * math.pi, math.pi, 1.5 * math.pi)):
            if _angle_in_arc(ang, th_a, th_b):
                pt = m + r * complex(math.cos(ang), math.sin(ang))
                xs.append(pt.real)
                ys.append(pt.imag)
    return min(xs), max(xs), min(ys), max(ys)


def _edge_spans(cell: CellSpec):
    """Yield (arc-data-or-None, va, vb) per edge; arc data is (center, radius,
    angle_a, angle_b) for circular edges."""
    from .geometry import Circle

    n = cell.size
    for i, e in enumerate(cell.edges):
        va, vb = cell.vertices[i], cell.vertices[(i + 1) % n]
        if isinstance(e, Circle):
            th_a = math.atan2((va - e.center).imag, (va - e.center).real)
            th_b = math.atan2((vb - e.center).imag, (vb - e.center).real)
            yield (e.center, e.radius, th_a, th_b), va, vb
        else:
            yield None, va, vb


def _angle_in_arc(theta: float, th_a: float, th_b: float) -> bool:
    """Is theta on the minor arc from th_a to th_b (span < pi)?"""
    span = (th_b - th_a + math.pi) % (2.0 * math.pi) - math.pi
    d = (theta - th_a + math.pi) % (2.0 * math.pi) - math.pi
    if span >= 0:
        return -1e-12 <= d <= span + 1e-12
    return span - 1e-12 <= d <= 1e-12


def _mark_crossings(active: np.ndarray, cell: CellSpec, delta: float, i0: int, j0: int):
    """Mark grid cells whose boundary is crossed by a cell edge."""
    nj, ni = active.shape

    def mark(ci: int, cj: int):
        if 0 <= cj - j0 < nj and 0 <= ci - i0 < ni:
            active[cj - j0, ci - i0] = True

    def mark_point_cells(x: float, y: float, vertical: bool):
        # crossing point sits on a grid line; mark the cells on both sides
        if vertical:
            k = round(x / delta)
            jf = math.floor(y / delta)
            for cj in (jf, jf - 1) if abs(y / delta - round(y / delta)) < 1e-9 else (jf,):
                mark(k - 1, cj)
                mark(k, cj)
        else:
            k = round(y / delta)
            if_ = math.floor(x / delta)
            for ci in (if_, if_ - 1) if abs(x / delta - round(x / delta)) < 1e-9 else (if_,):
                mark(ci, k - 1)
                mark(ci, k)

    for arc, va, vb in _edge_spans(cell):
        if arc is None:
            dx, dy = (vb - va).real, (vb - va).imag
            # vertical grid lines
            if abs(dx) > 1e-15:
                k_lo = math.ceil(min(va.real, vb.real) / delta - 1e-12)
                k_hi = math.floor(max(va.real, vb.real) / delta + 1e-12)
                for k in range(k_lo, k_hi + 1):
                    t = (k * delta - va.real) / dx
                    if -1e-12 <= t <= 1 + 1e-12:
                        mark_point_cells(k * delta, va.imag + t * dy, vertical=True)
            if abs(dy) > 1e-15:
                k_lo = math.ceil(min(va.imag, vb.imag) / delta - 1e-12)
                k_hi = math.floor(max(va.imag, vb.imag) / delta + 1e-12)
                for k in range(k_lo, k_hi + 1):
                    t = (k * delta - va.imag) / dy
                    if -1e-12 <= t <= 1 + 1e-12:
                        mark_point_cells(va.real + t * dx, k * delta, vertical=False)
        else:
            m, r, th_a, th_b = arc
            x_lo, x_hi = m.real - r, m.real + r
            for k in range(math.ceil(x_lo / delta - 1e-12), math.floor(x_hi / delta + 1e-12) + 1):
                dx = k * delta - m.real
                h2 = r * r - dx * dx
                if h2 < 0:
                    continue
                h = math.sqrt(h2)
                for y in (m.imag - h, m.imag + h):
                    if _angle_in_arc(math.atan2(y - m.imag, dx), th_a, th_b):
                        mark_point_cells(k * delta, y, vertical=True)
            y_lo, y_hi = m.imag - r, m.imag + r
            for k in range(math.ceil(y_lo / delta - 1e-12), math.floor(y_hi / delta + 1e-12) + 1):
                dy = k * delta - m.imag
                h2 = r * r - dy * dy
                if h2 < 0:
                    continue
                h = math.sqrt(h2)
                for x in (m.real - h, m.real + h):
                    if _angle_in_arc(math.atan2(dy, x - m.real), th_a, th_b):
                        mark_point_cells(x, k * delta, vertical=False)


def build_grid(cell_hyp: CellSpec, delta: float) -> SolverState:
    """Active index set over the source cell: inner points are grid points
    strictly inside; the rest of the corners of every grid cell meeting the
    source cell form the boundary set."""
    if not (delta > 0 and math.isfinite(delta)):
        raise GridError("delta must be positive")
    xmin, xmax, ymin, ymax = _cell_bbox(cell_hyp)
    i0 = math.floor(xmin / delta) - 2
    i1 = math.ceil(xmax / delta) + 2
    j0 = math.floor(ymin / delta) - 2
    j1 = math.ceil(ymax / delta) + 2
    ni_pts, nj_pts = i1 - i0 + 1, j1 - j0 + 1
    if ni_pts * nj_pts > 80_000_000:
        raise GridError("delta too small for this cell (grid would be huge)")

    ii = np.arange(i0, i1 + 1)
    jj = np.arange(j0, j1 + 1)
    pts = delta * (ii[None, :] + 1j * jj[:, None])
    clear = cell_hyp.clearances(pts)
    closed = (clear >= -1e-12).all(axis=0)
    strict = (clear > 1e-12).all(axis=0)

    active = np.zeros((nj_pts - 1, ni_pts - 1), dtype=bool)
    active |= closed[:-1, :-1] | closed[:-1, 1:] | closed[1:, :-1] | closed[1:, 1:]
    for v in cell_hyp.vertices:
        fi, fj = math.floor(v.real / delta), math.floor(v.imag / delta)
        for ci in (fi - 1, fi):
            for cj in (fj - 1, fj):
                if ci * delta <= v.real <= (ci + 1) * delta + 1e-12 and cj * delta <= v.imag <= (cj + 1) * delta + 1e-12:
                    if 0 <= cj - j0 < active.shape[0] and 0 <= ci - i0 < active.shape[1]:
                        active[cj - j0, ci - i0] = True
    _mark_crossings(active, cell_hyp, delta, i0, j0)

    member = np.zeros((nj_pts, ni_pts), dtype=bool)
    member[:-1, :-1] |= active
    member[:-1, 1:] |= active
    member[1:, :-1] |= active
    member[1:, 1:] |= active

    jm, im = np.nonzero(member)  # nonzero iterates row-major: ascending (j, i)
    index = np.stack([im + i0, jm + j0], axis=1).astype(np.int64)
    pos = delta * (index[:, 0] + 1j * index[:, 1])
    is_inner = strict[jm, im]

    if not is_inner.any():
        raise GridError("grid too coarse")
    inner_pos = pos[is_inner]
    for v in cell_hyp.vertices:
        near = np.abs(inner_pos - v) <= 6.0 * delta
        if near.sum() < 4:
            raise GridError("grid too coarse")

    row_of = np.full((nj_pts, ni_pts), -1, dtype=np.int64)
    row_of[jm, im] = np.arange(len(im))

    return SolverState(
        delta=float(delta),
        cell_hyp=cell_hyp,
        cell_euc=None,
        index=index,
        is_inner=is_inner,
        pos=pos,
        p=np.zeros(len(index), dtype=complex),
        _row_of=row_of,
        _i0=i0,
        _j0=j0,
    )


# ---------------------------------------------------------------------------
# ghost rules

_NEIGHBOR_STEPS = ((1, 0), (-1, 0), (0, 1), (0, -1))  # +1, -1, +i, -i


def _interp_cell(state: SolverState, z: complex):
    """Rows and weights of the interpolation cell containing plane point z."""
    g = z / state.delta
    fi, fj = math.floor(g.real), math.floor(g.imag)
    lam, mu = g.real - fi, g.imag - fj
    # on-gridline points may floor into a cell missing from the active set;
    # shift to the neighboring cell that carries the same interpolant
    if state.row_of(fi + 1, fj) < 0 and lam < 1e-9:
        fi, lam = fi - 1, lam + 1.0
    if state.row_of(fi, fj + 1) < 0 and mu < 1e-9:
        fj, mu = fj - 1, mu + 1.0
    rows = (
        state.row_of(fi, fj),
        state.row_of(fi + 1, fj),
        state.row_of(fi, fj + 1),
        state.row_of(fi + 1, fj + 1),
    )
    if min(rows) < 0:
        return None
    w = (
        (1.0 - lam) * (1.0 - mu),
        lam * (1.0 - mu),
        (1.0 - lam) * mu,
        lam * mu,
    )
    return GridIndex(fi, fj), rows, w


def build_ghost_rules(
    state: SolverState, group_hyp: ReflectionGroup, group_euc: ReflectionGroup
) -> SolverState:
    """Create one fold-interpolate-unfold rule per non-inner neighbor of the
    active set and wire up the per-slot neighbor tables."""
    if group_hyp.edge_labels != group_euc.edge_labels:
        raise GridError("groups must share edge labels")
    word_cap = 2 * max(state.cell_hyp.corner_orders) + 4

    m = state.size
    ghost_ids: dict[tuple[int, int], int] = {}
    g_index: list[tuple[int, int]] = []
    g_corners: list[tuple[int, int, int, int]] = []
    g_weights: list[tuple[float, float, float, float]] = []
    g_rot: list[complex] = []
    g_shift: list[complex] = []
    g_conj: list[bool] = []
    g_words: list[GroupWord] = []

    def ghost_id(gi: int, gj: int) -> int:
        key = (gi, gj)
        hit = ghost_ids.get(key)
        if hit is not None:
            return hit
        z = state.delta * complex(gi, gj)
        try:
            word, folded = locate(group_hyp, z, max_len=word_cap)
        except FoldError:
            raise GridError("grid too coarse near corner") from None
        if len(set(word.labels)) > 2:
            raise GridError("grid too coarse near corner")
        cellref = _interp_cell(state, folded)
        if cellref is None:
            raise GridError("grid too coarse near corner")
        corner, rows, w = cellref
        back = corresponding_word(word, group_euc).inverse()
        rot, shift = back.affine_parts()
        rot /= abs(rot)  # Euclidean isometry: snap the scale factor
        k = len(g_index)
        ghost_ids[key] = k
        g_index.append(key)
        g_corners.append(rows)
        g_weights.append(w)
        g_rot.append(rot)
        g_shift.append(shift)
        g_conj.append(back.conjugating)
        g_words.append(word)
        return k

    nb_inner_pos = [[] for _ in range(4)]
    nb_inner_src = [[] for _ in range(4)]
    nb_ghost_pos = [[] for _ in range(4)]
    nb_ghost_src = [[] for _ in range(4)]

    idx = state.index
    for s, (di, dj) in enumerate(_NEIGHBOR_STEPS):
        for k in range(m):
            wi, wj = int(idx[k, 0]) + di, int(idx[k, 1]) + dj
            row = state.row_of(wi, wj)
            if row >= 0 and state.is_inner[row]:
                nb_inner_pos[s].append(k)
                nb_inner_src[s].append(row)
            else:
                nb_ghost_pos[s].append(k)
                nb_ghost_src[s].append(ghost_id(wi, wj))
    # boundary members always carry a rule even if nothing reads them yet
    for k in np.nonzero(~state.is_inner)[0]:
        ghost_id(int(idx[k, 0]), int(idx[k, 1]))

    out = dataclasses.replace(
        state,
        _ghost_index=np.array(g_index, dtype=np.int64).reshape(-1, 2),
        _ghost_corners=np.array(g_corners, dtype=np.int64).reshape(-1, 4),
        _ghost_weights=np.array(g_weights, dtype=float).reshape(-1, 4),
        _ghost_rot=np.array(g_rot, dtype=complex),
        _ghost_shift=np.array(g_shift, dtype=complex),
        _ghost_conj=np.array(g_conj, dtype=bool),
        _ghost_words=g_words,
        _nb_inner_pos=[np.array(a, dtype=np.int64) for a in nb_inner_pos],
        _nb_inner_src=[np.array(a, dtype=np.int64) for a in nb_inner_src],
        _nb_ghost_pos=[np.array(a, dtype=np.int64) for a in nb_ghost_pos],
        _nb_ghost_src=[np.array(a, dtype=np.int64) for a in nb_ghost_src],
    )
    return out


# ---------------------------------------------------------------------------
# initialization


def _barycentric_init(pos: np.ndarray, src: CellSpec, dst: CellSpec) -> np.ndarray:
    v0, v1, v2 = src.vertices
    e1, e2 = v1 - v0, v2 - v0
    det = e1.real * e2.imag - e1.imag * e2.real
    d = pos - v0
    l1 = (d.real * e2.imag - d.imag * e2.real) / det
    l2 = (e1.real * d.imag - e1.imag * d.real) / det
    w0, w1, w2 = dst.vertices
    return (1.0 - l1 - l2) * w0 + l1 * w1 + l2 * w2


def _inverse_bilinear(pos: np.ndarray, quad: tuple[complex, ...]) -> tuple[np.ndarray, np.ndarray]:
    """(s, u) with pos = bilinear(s, u) over the quad corners, via Newton."""
    h0, h1, h2, h3 = quad
    s = np.full(pos.shape, 0.5)
    u = np.full(pos.shape, 0.5)
    for _ in range(40):
        f = ((1 - s) * (1 - u)) * h0 + (s * (1 - u)) * h1 + (s * u) * h2 + ((1 - s) * u) * h3 - pos
        fs = (1 - u) * (h1 - h0) + u * (h2 - h3)
        fu = (1 - s) * (h3 - h0) + s * (h2 - h1)
        det = fs.real * fu.imag - fs.imag * fu.real
        det = np.where(np.abs(det) < 1e-300, 1e-300, det)
        ds = (f.real * fu.imag - f.imag * fu.real) / det
        du = (fs.real * f.imag - fs.imag * f.real) / det
        s = s - ds
        u = u - du
        if max(np.max(np.abs(ds)), np.max(np.abs(du))) < 1e-14:
            break
    return s, u


def init_state(state: SolverState, cell_hyp: CellSpec, cell_euc: CellSpec) -> SolverState:
    """Seed the image vector with the corner-matching affine (triangle) or
    bilinear (quadrilateral) map evaluated at every active point."""
    if cell_hyp.size != cell_euc.size:
        raise GridError("cells must have the same number of corners")
    if cell_hyp.size == 3:
        p = _barycentric_init(state.pos, cell_hyp, cell_euc)
    else:
        s, u = _inverse_bilinear(state.pos, cell_hyp.vertices)
        e0, e1, e2, e3 = cell_euc.vertices
        p = ((1 - s) * (1 - u)) * e0 + (s * (1 - u)) * e1 + (s * u) * e2 + ((1 - s) * u) * e3
        bad = ~(np.isfinite(p.real) & np.isfinite(p.imag))
        if bad.any():
            # least-squares affine w = alpha*z + beta*conj(z) + gamma through the corners
            hv = np.array(cell_hyp.vertices)
            ev = np.array(cell_euc.vertices)
            basis = np.stack([hv, hv.conj(), np.ones(4, dtype=complex)], axis=1)
            coef, *_ = np.linalg.lstsq(basis, ev, rcond=None)
            zb = state.pos[bad]
            p[bad] = coef[0] * zb + coef[1] * zb.conj() + coef[2]
    return dataclasses.replace(
        state, cell_euc=cell_euc, p=np.asarray(p, dtype=complex), iteration_count=0,
        residual=math.inf,
    )


# ---------------------------------------------------------------------------
# the averaging sweep


def _ghost_values(state: SolverState, p: np.ndarray) -> np.ndarray:
    w = state._ghost_weights
    pc = p[state._ghost_corners]
    s = (w * pc).sum(axis=1)
    conj = state._ghost_conj
    s = np.where(conj, s.conj(), s)
    return state._ghost_rot * s + state._ghost_shift


def _neighbor_values(state: SolverState, p: np.ndarray) -> np.ndarray:
    """(4, m) neighbor reads in the fixed +1, -1, +i, -i order."""
    mu = _ghost_values(state, p)
    v = np.empty((4, state.size), dtype=complex)
    for s in range(4):
        v[s][state._nb_inner_pos[s]] = p[state._nb_inner_src[s]]
        v[s][state._nb_ghost_pos[s]] = mu[state._nb_ghost_src[s]]
    return v


def sweep(state: SolverState, relaxation: float = 1.0, _reverse_sum: bool = False) -> SolverState:
    """One double-buffered averaging step over all active points."""
    if not state.ghosts_built:
        raise SolveError("ghost rules not built")
    p = state.p
    v = _neighbor_values(state, p)
    if _reverse_sum:
        new = v[3] + v[2]
        new += v[1]
        new += v[0]
    else:
        new = v[0] + v[1]
        new += v[2]
        new += v[3]
    new *= 0.25
    if relaxation != 1.0:
        new = p + relaxation * (new - p)
    residual = float(np.max(np.abs(new - p))) / state.diam_target
    return dataclasses.replace(
        state, p=new, iteration_count=state.iteration_count + 1, residual=residual
    )


def solve(
    cell_hyp: CellSpec,
    cell_euc: CellSpec,
    delta: float,
    tol: float = 1e-8,
    max_sweeps: int = 500_000,
    relaxation: float = 1.0,
) -> tuple[SolverState, SolveReport]:
    """Build the grid and iterate sweeps until the per-sweep displacement
    (in units of the target diameter) drops below tol."""
    if not (1.0 <= relaxation < 1.95):
        raise SolveError("relaxation must lie in [1, 1.95)")
    t_start = time.perf_counter()
    state = build_grid(cell_hyp, delta)
    g_h = reflection_group(cell_hyp)
    g_e = reflection_group(cell_euc)
    state = build_ghost_rules(state, g_h, g_e)
    state = init_state(state, cell_hyp, cell_euc)

    history = np.empty(max_sweeps, dtype=float)
    converged = False
    n = 0
    for n in range(1, max_sweeps + 1):
        state = sweep(state, relaxation=relaxation)
        history[n - 1] = state.residual
        if state.residual <= tol:
            converged = True
            break
    history = history[:n]

    stats = conformality_report(state)
    report = SolveReport(
        iterations=state.iteration_count,
        final_residual=state.residual,
        conformality_median=stats.median_angle,
        wall_time=time.perf_counter() - t_start,
        converged=converged,
        residual_history=history,
    )
    return state, report


# ---------------------------------------------------------------------------
# evaluation


def interpolate(state: SolverState, z):
    """Map value at plane point(s) z inside the covered region (bilinear)."""
    if np.isscalar(z) or np.ndim(z) == 0:
        ref = _interp_cell(state, complex(z))
        if ref is None:
            raise GridError("outside interpolation domain")
        _, rows, w = ref
        return sum(wk * state.p[r] for wk, r in zip(w, rows))
    z = np.asarray(z, dtype=complex)
    g = z / state.delta
    fi = np.floor(g.real).astype(np.int64)
    fj = np.floor(g.imag).astype(np.int64)
    lam = g.real - fi
    mu = g.imag - fj

    def rows_at(di, dj):
        jj = fj + dj - state._j0
        ii = fi + di - state._i0
        ok = (jj >= 0) & (jj < state._row_of.shape[0]) & (ii >= 0) & (ii < state._row_of.shape[1])
        r = np.where(ok, state._row_of[np.clip(jj, 0, None), np.clip(ii, 0, None)], -1)
        return r

    # nudge on-gridline points whose floor cell is not active
    shift_i = (rows_at(1, 0) < 0) & (lam < 1e-9)
    fi = fi - shift_i
    lam = lam + shift_i
    shift_j = (rows_at(0, 1) < 0) & (mu < 1e-9)
    fj = fj - shift_j
    mu = mu + shift_j

    r00, r10, r01, r11 = rows_at(0, 0), rows_at(1, 0), rows_at(0, 1), rows_at(1, 1)
    if min(r00.min(), r10.min(), r01.min(), r11.min()) < 0:
        raise GridError("outside interpolation domain")
    p = state.p
    return (
        ((1 - lam) * (1 - mu)) * p[r00]
        + (lam * (1 - mu)) * p[r10]
        + ((1 - lam) * mu) * p[r01]
        + (lam * mu) * p[r11]
    )


def extended_map_value(
    state: SolverState,
    group_hyp: ReflectionGroup,
    group_euc: ReflectionGroup,
    z: complex,
    max_len: int = 64,
) -> complex:
    """Map value at an arbitrary point: fold into the cell, interpolate,
    unfold with the corresponding Euclidean motion."""
    word, folded = locate(group_hyp, complex(z), max_len=max_len)
    value = interpolate(state, folded)
    back = corresponding_word(word, group_euc).inverse()
    return back.apply(value)


def _difference_vectors(state: SolverState, exclusion: float):
    v = _neighbor_values(state, state.p)
    d1 = 0.5 * (v[0] - v[1])
    d2 = 0.5 * (v[2] - v[3])
    mask = state.is_inner.copy()
    for vert in state.cell_hyp.vertices:
        mask &= np.abs(state.pos - vert) > exclusion
    return d1, d2, mask


def conformality_report(
    state: SolverState, corner_exclusion_radius: float | None = None
) -> ConformalityStats:
    """Right-angle and stretch-ratio deviations of the two central
    difference vectors, away from the cell corners."""
    excl = 5.0 * state.delta if corner_exclusion_radius is None else corner_exclusion_radius
    d1, d2, mask = _difference_vectors(state, excl)
    d1, d2 = d1[mask], d2[mask]
    ok = (np.abs(d1) > 0) & (np.abs(d2) > 0)
    d1, d2 = d1[ok], d2[ok]
    angle = np.angle(d2 / d1) - 0.5 * math.pi
    angle = (angle + math.pi) % (2.0 * math.pi) - math.pi
    ratio = np.abs(d2) / np.abs(d1) - 1.0
    med_a = float(np.median(np.abs(angle))) if len(angle) else 0.0
    med_r = float(np.median(np.abs(ratio))) if len(ratio) else 0.0
    return ConformalityStats(angle, ratio, med_a, med_r)


def conformal_energy(state: SolverState, corner_exclusion_radius: float | None = None) -> float:
    """Mean squared anti-conformal residual |d1 + i d2|^2 / (|d1|^2 + |d2|^2)."""
    excl = 5.0 * state.delta if corner_exclusion_radius is None else corner_exclusion_radius
    d1, d2, mask = _difference_vectors(state, excl)
    d1, d2 = d1[mask], d2[mask]
    denom = np.abs(d1) ** 2 + np.abs(d2) ** 2
    ok = denom > 0
    res = np.abs(d1[ok] + 1j * d2[ok]) ** 2 / denom[ok]
    return float(res.mean())


# ---------------------------------------------------------------------------
# conformal-modulus search for quadrilateral targets

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def modulus_search(
    quad_orders,
    cell_euc: CellSpec,
    delta: float,
    tol: float = 1e-3,
    solve_tol: float = 1e-8,
    max_sweeps: int = 300_000,
    probes: int = 9,
) -> tuple[float, SolverState]:
    """Pick the member of the quadrilateral family whose solved map has
    minimal anti-conformal energy (golden-section over the family
    parameter)."""
    if cell_euc.size != 4 or cell_euc.kind is not GeometryKind.EUCLIDEAN:
        raise SolveError("modulus search needs a Euclidean quadrilateral target")
    fam = quad_family(tuple(int(o) for o in quad_orders))
    cache: dict[float, float] = {}

    def energy(t: float) -> float:
        key = round(t, 12)
        if key in cache:
            return cache[key]
        cell_h = fam.cell(t)
        st, rep = solve(cell_h, cell_euc, delta, tol=solve_tol, max_sweeps=max_sweeps)
        if not rep.converged:
            raise SolveError("modulus search failed; refine grid (solve did not converge)")
        val = conformal_energy(st)
        cache[key] = val
        return val

    ts = np.linspace(0.0, 1.0, probes + 2)[1:-1]
    es = [energy(float(t)) for t in ts]
    k = int(np.argmin(es))
    if k == 0 or k == len(ts) - 1:
        raise SolveError("modulus search failed; refine grid (no interior bracket)")
    a, b = float(ts[k - 1]), float(ts[k + 1])
    x1 = b - _GOLDEN * (b - a)
    x2 = a + _GOLDEN * (b - a)
    f1, f2 = energy(x1), energy(x2)
    while b - a > tol:
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - _GOLDEN * (b - a)
            f1 = energy(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + _GOLDEN * (b - a)
            f2 = energy(x2)
    t_star = 0.5 * (a + b)
    cell_h = fam.cell(t_star)
    st, rep = solve(cell_h, cell_euc, delta, tol=solve_tol, max_sweeps=max_sweeps)
    if not rep.converged:
        raise SolveError("modulus search failed; refine grid (final solve)")
    return t_star, st
