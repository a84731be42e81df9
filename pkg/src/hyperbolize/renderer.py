"""Disk rendering: pull a wallpaper ornament back through the solved map.

Every output pixel center is folded into the source cell by the
hyperbolic reflection group while the matching word of Euclidean edge
reflections is accumulated; the solved map is interpolated at the folded
point and unfolded, and the ornament is sampled there.  Ornament samplers
take a per-sample footprint (the Euclidean size one pixel covers) so the
pattern can be low-passed analytically where cells shrink toward the rim;
grid-line widths and checker transitions widen accordingly instead of
aliasing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from PIL import Image, PngImagePlugin
from scipy.ndimage import gaussian_filter
from scipy.special import erf

from .geometry import CellSpec, Motion
from .solver import SolverState, _inverse_bilinear
from .symmetry import ReflectionGroup

__all__ = [
    "RenderError",
    "RenderConfig",
    "OrnamentSampler",
    "RasterOrnamentSampler",
    "ProceduralOrnament",
    "TranslatedSampler",
    "ConstantSampler",
    "synthesize_test_ornament",
    "render",
    "fold_disk_points",
    "symmetry_check",
    "symmetry_check_detail",
    "word_length_map",
    "write_png",
    "read_png",
    "srgb_to_linear",
    "linear_to_srgb",
]

_ON_EDGE_EPS = 1e-12


class RenderError(RuntimeError):
    pass


@dataclass(frozen=True)
class RenderConfig:
    resolution: int = 1024
    supersampling: int = 2
    max_word_length: int = 200
    background: tuple[float, float, float] = (1.0, 1.0, 1.0)
    disk_margin: float = 0.0

    def __post_init__(self):
        if self.resolution < 16:
            raise RenderError("resolution must be at least 16")
        if self.supersampling not in (1, 2, 4):
            raise RenderError("supersampling must be 1, 2 or 4")
        if self.max_word_length < 1:
            raise RenderError("max_word_length must be at least 1")


# ---------------------------------------------------------------------------
# vectorized folding


def _affine_reflections(group: ReflectionGroup) -> tuple[np.ndarray, np.ndarray]:
    rots, shifts = [], []
    for gen in group.generators:
        rot, shift = gen.affine_parts()
        rots.append(rot / abs(rot))
        shifts.append(shift)
    return np.array(rots, dtype=complex), np.array(shifts, dtype=complex)


def fold_disk_points(
    group_fold: ReflectionGroup,
    z: np.ndarray,
    max_len: int,
    group_track: ReflectionGroup | None = None,
):
    """Fold points into group_fold's cell, nearest violated edge first.

    Returns (folded, word_length, ok, rot, shift, conj, scale): rot,
    shift, conj describe the inverse of the corresponding word in
    `group_track` as the affine map w -> rot * (w or conj w) + shift,
    accumulated one reflection at a time; `scale` is |d fold / dz|, the
    accumulated derivative magnitude of the folding motion.  `ok` marks
    points folded within max_len reflections.
    """
    from .geometry import Circle

    cell = group_fold.cell
    z = np.array(z, dtype=complex)
    n = z.size
    length = np.zeros(n, dtype=np.int32)
    scale = np.ones(n, dtype=float)
    if group_track is not None:
        t_rot, t_shift = _affine_reflections(group_track)
        rot = np.ones(n, dtype=complex)
        shift = np.zeros(n, dtype=complex)
        conj = np.zeros(n, dtype=bool)
    else:
        rot = shift = conj = None

    active = np.arange(n)
    while active.size:
        clear = cell.clearances(z[active])
        violated = clear < -_ON_EDGE_EPS
        outside = violated.any(axis=0)
        clear = clear[:, outside]
        active = active[outside]
        if active.size == 0:
            break
        # points at the word cap stay outside and are reported as failed
        capped = length[active] >= max_len
        if capped.any():
            clear = clear[:, ~capped]
            active = active[~capped]
            if active.size == 0:
                break
        dist = np.where(clear < -_ON_EDGE_EPS, -clear, np.inf)
        choice = np.argmin(dist, axis=0)
        for e in range(cell.size):
            sel = active[choice == e]
            if sel.size == 0:
                continue
            edge = cell.edges[e]
            if isinstance(edge, Circle):
                scale[sel] *= edge.radius**2 / np.abs(z[sel] - edge.center) ** 2
            z[sel] = edge.reflect(z[sel])
            length[sel] += 1
            if group_track is not None:
                # accumulated = accumulated o reflection_e
                re, se = t_rot[e], t_shift[e]
                c = conj[sel]
                rr = rot[sel]
                rot[sel] = np.where(c, rr * np.conj(re), rr * re)
                shift[sel] = np.where(c, rr * np.conj(se), rr * se) + shift[sel]
                conj[sel] = ~c

    ok = cell.contains(z, tol=1e-9) & (length <= max_len)
    return z, length, ok, rot, shift, conj, scale


def word_length_map(group: ReflectionGroup, z: np.ndarray, max_len: int) -> np.ndarray:
    """Reflection counts needed to fold each point (max_len+1 if exceeded)."""
    _, length, ok, *_ = fold_disk_points(group, z, max_len)
    length = length.astype(np.int32)
    length[~ok] = max_len + 1
    return length


def _map_gradient(state: SolverState, rows10, rows00, rows01, rows11) -> np.ndarray:
    """Local derivative magnitude of the map from one interpolation cell."""
    p = state.p
    gx = 0.5 * ((p[rows10] - p[rows00]) + (p[rows11] - p[rows01])) / state.delta
    gy = 0.5 * ((p[rows01] - p[rows00]) + (p[rows11] - p[rows10])) / state.delta
    return np.sqrt(0.5 * (np.abs(gx) ** 2 + np.abs(gy) ** 2))


# ---------------------------------------------------------------------------
# ornament samplers


class OrnamentSampler:
    """Color field on the Euclidean plane; values are linear RGB in [0,1].

    `footprint` is the spatial radius (in plane units) a sample should be
    low-passed with; samplers widen their features accordingly.
    """

    def sample(self, points: np.ndarray, footprint: np.ndarray | None = None) -> np.ndarray:
        raise NotImplementedError

    def mean_color(self) -> np.ndarray:
        return np.array([0.5, 0.5, 0.5])


class ConstantSampler(OrnamentSampler):
    def __init__(self, color):
        self.color = np.asarray(color, dtype=float)

    def sample(self, points, footprint=None):
        return np.broadcast_to(self.color, (np.size(points), 3)).copy()

    def mean_color(self):
        return self.color.copy()


class TranslatedSampler(OrnamentSampler):
    """Reads the wrapped sampler at points + offset (negative control)."""

    def __init__(self, inner: OrnamentSampler, offset: complex):
        self.inner = inner
        self.offset = complex(offset)

    def sample(self, points, footprint=None):
        return self.inner.sample(np.asarray(points) + self.offset, footprint)

    def mean_color(self):
        return self.inner.mean_color()


def _fold_into_cell(group: ReflectionGroup, points: np.ndarray) -> np.ndarray:
    folded, _, ok, *_ = fold_disk_points(group, points.ravel(), max_len=256)
    if not ok.all():
        # distant points that failed to fold read as the pattern mean
        folded[~ok] = group.cell.vertices[0]
    return folded


def _filtered_square_wave(u: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """Gaussian-filtered unit square wave (period 1, values ~ +-1)."""
    out = np.zeros_like(u, dtype=float)
    for k in (1, 3, 5, 7):
        damp = np.exp(-2.0 * (math.pi * k * rho) ** 2)
        out += (4.0 / (math.pi * k)) * damp * np.sin(2.0 * math.pi * k * u)
    return np.clip(out, -1.0, 1.0)


def _filtered_pulse_train(u: np.ndarray, half_width: float, rho: np.ndarray) -> np.ndarray:
    """Gaussian-filtered periodic pulse train: period 1, pulses of
    half-width `half_width` centered on the integers; values in [0,1]."""
    duty = 2.0 * half_width
    out = np.full_like(u, duty, dtype=float)
    for k in range(1, 9):
        damp = np.exp(-2.0 * (math.pi * k * rho) ** 2)
        out += (2.0 / (math.pi * k)) * math.sin(2.0 * math.pi * k * half_width) * damp * np.cos(
            2.0 * math.pi * k * u
        )
    return np.clip(out, 0.0, 1.0)


class ProceduralOrnament(OrnamentSampler):
    """Exactly group-symmetric synthetic pattern: every sample is folded
    into the fundamental cell first, so invariance holds by construction."""

    def __init__(self, group: ReflectionGroup, kind: str):
        self.group = group
        self.kind = kind
        cell = group.cell
        self.cell = cell
        verts = np.array(cell.vertices)
        n = cell.size
        edge_len = [abs(verts[(i + 1) % n] - verts[i]) for i in range(n)]
        self.min_edge = float(min(edge_len))
        self.diam = cell.diameter()
        self.centroid = complex(verts.mean())
        if cell.size == 3:
            # altitudes give the barycentric gradient scale
            v0, v1, v2 = cell.vertices
            e1, e2 = v1 - v0, v2 - v0
            self._bary_det = e1.real * e2.imag - e1.imag * e2.real
            area = abs(self._bary_det) / 2.0
            self.altitudes = [2.0 * area / edge_len[(i + 1) % 3] for i in range(3)]

    # -- coordinates ----------------------------------------------------

    def _barycentric(self, y: np.ndarray):
        v0, v1, v2 = self.cell.vertices
        d = y - v0
        e1, e2 = v1 - v0, v2 - v0
        det = self._bary_det
        l1 = (d.real * e2.imag - d.imag * e2.real) / det
        l2 = (e1.real * d.imag - e1.imag * d.real) / det
        return np.stack([1.0 - l1 - l2, l1, l2])

    # -- patterns ---------------------------------------------------------

    def sample(self, points, footprint=None):
        pts = np.asarray(points, dtype=complex).ravel()
        if footprint is None:
            fp = np.zeros(pts.shape, dtype=float)
        else:
            fp = np.broadcast_to(np.asarray(footprint, dtype=float), pts.shape)
        y = _fold_into_cell(self.group, pts)
        if self.kind == "checkerboard":
            return self._checkerboard(y, fp)
        if self.kind == "coordinate_grid":
            return self._coordinate_grid(y, fp)
        if self.kind == "corner_labels":
            return self._corner_labels(y, fp)
        raise RenderError(f"unknown ornament kind: {self.kind}")

    def _checkerboard(self, y, fp):
        period = 0.8 * self.min_edge
        rho = np.maximum(fp / period, 0.02)
        u = (y.real - self.centroid.real) / period
        v = (y.imag - self.centroid.imag) / period
        q = _filtered_square_wave(u, rho) * _filtered_square_wave(v, rho)
        val = 0.5 + 0.5 * q
        return np.repeat(val[:, None], 3, axis=1)

    def _coordinate_grid(self, y, fp):
        n_div = 6
        half_width = 0.012 * self.diam
        if self.cell.size == 3:
            coords = self._barycentric(y)
            scales = self.altitudes
        else:
            s, u = _inverse_bilinear(y, self.cell.vertices)
            coords = np.stack([s, u])
            verts = self.cell.vertices
            scales = [
                0.5 * (abs(verts[1] - verts[0]) + abs(verts[2] - verts[3])),
                0.5 * (abs(verts[3] - verts[0]) + abs(verts[2] - verts[1])),
            ]
        ink = np.zeros(y.shape, dtype=float)
        keep = np.ones_like(ink)
        for c, alt in zip(coords, scales):
            spacing = alt / n_div  # isoline spacing in plane units
            cov = _filtered_pulse_train(c * n_div, half_width / spacing, fp / spacing)
            keep *= 1.0 - cov
        ink = 1.0 - keep
        white = np.array([1.0, 1.0, 1.0])
        blue = np.array([0.12, 0.18, 0.45])
        return white[None, :] + ink[:, None] * (blue - white)[None, :]

    def _corner_labels(self, y, fp):
        base = np.array([0.92, 0.92, 0.92])
        palette = [
            np.array([0.85, 0.1, 0.1]),
            np.array([0.1, 0.55, 0.15]),
            np.array([0.15, 0.25, 0.8]),
            np.array([0.9, 0.7, 0.05]),
        ]
        out = np.repeat(base[None, :], y.size, axis=0)
        n = self.cell.size
        verts = self.cell.vertices
        for k in range(n):
            adj = min(
                abs(verts[k] - verts[(k + 1) % n]), abs(verts[k] - verts[(k - 1) % n])
            )
            w = 0.22 * adj
            d2 = np.abs(y - verts[k]) ** 2
            var = w * w + fp * fp
            bump = (w * w / var) * np.exp(-d2 / (2.0 * var))
            out += bump[:, None] * (palette[k % 4] - base)[None, :]
        return np.clip(out, 0.0, 1.0)

    def mean_color(self):
        if self.kind == "checkerboard":
            return np.array([0.5, 0.5, 0.5])
        if self.kind == "coordinate_grid":
            return np.array([0.95, 0.95, 0.97])
        return np.array([0.92, 0.92, 0.92])


_KIND_ALIASES = {
    "checkerboard": "checkerboard",
    "checker": "checkerboard",
    "grid": "coordinate_grid",
    "coordinate_grid": "coordinate_grid",
    "corners": "corner_labels",
    "corner_labels": "corner_labels",
}


def synthesize_test_ornament(kind: str, group_euc: ReflectionGroup) -> ProceduralOrnament:
    """Procedural ornament with the exact symmetry of the Euclidean group."""
    canonical = _KIND_ALIASES.get(kind)
    if canonical is None:
        raise RenderError(f"unknown ornament kind: {kind}")
    return ProceduralOrnament(group_euc, canonical)


class RasterOrnamentSampler(OrnamentSampler):
    """Wallpaper image sampler.

    `cell_placement` maps image pixel coordinates (x right, y up, in
    pixels) to the Euclidean ornament plane.  Wrap mode "tile" repeats the
    raster periodically; "fold" folds sample points into the fundamental
    cell of `group` first (exact symmetry regardless of the raster).
    A Gaussian pyramid provides footprint-matched low-pass reads.
    """

    def __init__(
        self,
        image: np.ndarray,
        cell_placement: Motion,
        wrap: str = "tile",
        group: ReflectionGroup | None = None,
    ):
        if image.ndim != 3 or image.shape[2] not in (3, 4):
            raise RenderError("image must be HxWx3 or HxWx4")
        if wrap not in ("tile", "fold"):
            raise RenderError("wrap must be 'tile' or 'fold'")
        if wrap == "fold" and group is None:
            raise RenderError("fold wrap needs the Euclidean group")
        self.image = np.ascontiguousarray(image[:, :, :3], dtype=float)
        self.placement = cell_placement
        self.inv_placement = cell_placement.inverse()
        rot, _ = cell_placement.affine_parts()
        self.pixel_scale = abs(rot)  # plane units per image pixel
        self.wrap = wrap
        self.group = group
        levels = [self.image]
        max_level = max(1, int(math.ceil(math.log2(max(image.shape[:2])))))
        for k in range(1, max_level + 1):
            levels.append(
                gaussian_filter(self.image, sigma=(2.0 ** k * 0.5, 2.0 ** k * 0.5, 0), mode="wrap")
            )
        self.levels = levels
        self._mean = self.image.reshape(-1, 3).mean(axis=0)

    def _read_level(self, level: np.ndarray, x: np.ndarray, yy: np.ndarray) -> np.ndarray:
        h, w = level.shape[:2]
        x = np.mod(x, w)
        yy = np.mod(yy, h)
        x0 = np.floor(x).astype(np.int64)
        y0 = np.floor(yy).astype(np.int64)
        fx = (x - x0)[:, None]
        fy = (yy - y0)[:, None]
        x1 = (x0 + 1) % w
        y1 = (y0 + 1) % h
        c00 = level[y0, x0]
        c10 = level[y0, x1]
        c01 = level[y1, x0]
        c11 = level[y1, x1]
        return (1 - fx) * (1 - fy) * c00 + fx * (1 - fy) * c10 + (1 - fx) * fy * c01 + fx * fy * c11

    def sample(self, points, footprint=None):
        pts = np.asarray(points, dtype=complex).ravel()
        if self.wrap == "fold":
            pts = _fold_into_cell(self.group, pts)
        pix = self.inv_placement.apply(pts)
        x = pix.real
        yy = (self.image.shape[0] - 1) - pix.imag  # image rows grow downward
        if footprint is None:
            return self._read_level(self.levels[0], x, yy)
        fp_px = np.broadcast_to(np.asarray(footprint, dtype=float), pts.shape) / self.pixel_scale
        lv = np.clip(np.log2(np.maximum(fp_px, 1e-9)), 0.0, len(self.levels) - 1.001)
        out = np.empty((pts.size, 3), dtype=float)
        lv0 = np.floor(lv).astype(int)
        frac = (lv - lv0)[:, None]
        for L in np.unique(lv0):
            selm = lv0 == L
            a = self._read_level(self.levels[L], x[selm], yy[selm])
            b = self._read_level(self.levels[L + 1], x[selm], yy[selm])
            out[selm] = a + frac[selm] * (b - a)
        return out

    def mean_color(self):
        return self._mean.copy()


# ---------------------------------------------------------------------------
# rendering


def _interpolate_masked(state: SolverState, z: np.ndarray):
    """Bilinear map values, validity mask, and local gradient magnitude."""
    g = np.asarray(z, dtype=complex) / state.delta
    fi = np.floor(g.real).astype(np.int64)
    fj = np.floor(g.imag).astype(np.int64)
    lam = g.real - fi
    mu = g.imag - fj
    grid = state._row_of
    nj, ni = grid.shape

    def rows_at(fi, fj, di, dj):
        jj = fj + dj - state._j0
        ii = fi + di - state._i0
        ok = (jj >= 0) & (jj < nj) & (ii >= 0) & (ii < ni)
        return np.where(ok, grid[np.clip(jj, 0, nj - 1), np.clip(ii, 0, ni - 1)], -1)

    shift_i = (rows_at(fi, fj, 1, 0) < 0) & (lam < 1e-9)
    fi = fi - shift_i
    lam = lam + shift_i
    shift_j = (rows_at(fi, fj, 0, 1) < 0) & (mu < 1e-9)
    fj = fj - shift_j
    mu = mu + shift_j
    r00 = rows_at(fi, fj, 0, 0)
    r10 = rows_at(fi, fj, 1, 0)
    r01 = rows_at(fi, fj, 0, 1)
    r11 = rows_at(fi, fj, 1, 1)
    valid = (r00 >= 0) & (r10 >= 0) & (r01 >= 0) & (r11 >= 0)
    p = state.p
    vals = np.zeros(z.shape, dtype=complex)
    grad = np.zeros(z.shape, dtype=float)
    v = valid
    vals[v] = (
        ((1 - lam[v]) * (1 - mu[v])) * p[r00[v]]
        + (lam[v] * (1 - mu[v])) * p[r10[v]]
        + ((1 - lam[v]) * mu[v]) * p[r01[v]]
        + (lam[v] * mu[v]) * p[r11[v]]
    )
    grad[v] = _map_gradient(state, r10[v], r00[v], r01[v], r11[v])
    return vals, valid, grad


def render(
    solved: SolverState,
    group_hyp: ReflectionGroup,
    group_euc: ReflectionGroup,
    sampler: OrnamentSampler,
    cfg: RenderConfig,
    converged: bool = True,
    force: bool = False,
) -> np.ndarray:
    """Render the disk image (resolution x resolution x 3, linear RGB)."""
    if not converged and not force:
        raise RenderError("map not converged; pass force=True to render anyway")
    res = cfg.resolution
    ss = cfg.supersampling
    bg = np.asarray(cfg.background, dtype=float)
    out = np.empty((res, res, 3), dtype=float)
    px = 2.0 / res
    limit = 1.0 - cfg.disk_margin

    # supersample offsets within a pixel, in disk units
    offs = (np.arange(ss) + 0.5) / ss  # in [0,1)
    rows_per_block = max(1, int(250_000 // (res * ss * ss)))
    for r0 in range(0, res, rows_per_block):
        r1 = min(res, r0 + rows_per_block)
        rows = np.arange(r0, r1)
        # disk coordinates: x right, y up, row 0 on top
        xs = -1.0 + (np.arange(res)[None, :, None, None] + offs[None, None, :, None]) * px
        ys = 1.0 - (rows[:, None, None, None] + offs[None, None, None, :]) * px
        zz = (xs + 1j * ys).reshape(-1)  # (nrows*res*ss*ss)
        nb = zz.size
        colors = np.repeat(bg[None, :], nb, axis=0)
        in_disk = np.abs(zz) < limit
        if in_disk.any():
            zd = zz[in_disk]
            folded, length, okf, rot, shf, cj, scale = fold_disk_points(
                group_hyp, zd, cfg.max_word_length, group_track=group_euc
            )
            vals, okv, grad = _interpolate_masked(solved, folded)
            good = okf & okv
            w = np.where(cj, np.conj(vals), vals) * rot + shf
            # footprint: half a pixel through the local derivative of the
            # composed map (fold derivative times interpolated-map gradient)
            fp = 0.5 * px * scale * grad
            sampled = sampler.sample(w[good], fp[good])
            tmp_c = np.repeat(bg[None, :], zd.size, axis=0)
            tmp_c[good] = sampled
            colors[in_disk] = tmp_c
        block = colors.reshape(len(rows), res, ss, ss, 3).mean(axis=(2, 3))
        out[r0:r1] = block
    return np.clip(out, 0.0, 1.0)


# ---------------------------------------------------------------------------
# symmetry checking


def _bilinear_image(image: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Bilinear read of a rendered disk image at disk coordinates z."""
    res = image.shape[0]
    x = (z.real + 1.0) * 0.5 * res - 0.5
    yy = (1.0 - z.imag) * 0.5 * res - 0.5
    x0 = np.clip(np.floor(x).astype(np.int64), 0, res - 2)
    y0 = np.clip(np.floor(yy).astype(np.int64), 0, res - 2)
    fx = np.clip(x - x0, 0.0, 1.0)[:, None]
    fy = np.clip(yy - y0, 0.0, 1.0)[:, None]
    c00 = image[y0, x0]
    c10 = image[y0, x0 + 1]
    c01 = image[y0 + 1, x0]
    c11 = image[y0 + 1, x0 + 1]
    return (1 - fx) * (1 - fy) * c00 + fx * (1 - fy) * c10 + (1 - fx) * fy * c01 + fx * fy * c11


def symmetry_check_detail(
    image: np.ndarray,
    generators,
    samples: int = 10_000,
    seed: int = 0,
    rim_exclude_pixels: float = 2.0,
) -> dict:
    """Compare the rendered image at z and phi(z) for each generator phi.

    Probes are area-uniform in the disk; pairs with either point within
    the given number of output pixels of the rim are skipped.
    """
    res = image.shape[0]
    rng = np.random.default_rng(seed)
    r = np.sqrt(rng.uniform(0.0, 1.0, samples))
    th = rng.uniform(0.0, 2.0 * math.pi, samples)
    z = r * np.exp(1j * th)
    limit = 1.0 - rim_exclude_pixels * (2.0 / res)
    diffs = []
    used = 0
    for gen in generators:
        zg = gen.apply(z)
        keep = (np.abs(z) < limit) & (np.abs(zg) < limit)
        if not keep.any():
            continue
        a = _bilinear_image(image, z[keep])
        b = _bilinear_image(image, zg[keep])
        diffs.append(np.abs(a - b).max(axis=1))
        used += int(keep.sum())
    if not diffs:
        return {"max": 0.0, "median": 0.0, "p99": 0.0, "pairs": 0}
    d = np.concatenate(diffs)
    return {
        "max": float(d.max()),
        "median": float(np.median(d)),
        "p99": float(np.quantile(d, 0.99)),
        "pairs": used,
    }


def symmetry_check(image: np.ndarray, generators, samples: int = 10_000, seed: int = 0) -> float:
    """Max per-channel color mismatch between z and phi(z) over the probes."""
    return symmetry_check_detail(image, generators, samples, seed)["max"]


# ---------------------------------------------------------------------------
# PNG input/output (sRGB)


def srgb_to_linear(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    return np.where(v <= 0.04045, v / 12.92, ((v + 0.055) / 1.055) ** 2.4)


def linear_to_srgb(v: np.ndarray) -> np.ndarray:
    v = np.clip(np.asarray(v, dtype=float), 0.0, 1.0)
    return np.where(v <= 0.0031308, v * 12.92, 1.055 * v ** (1.0 / 2.4) - 0.055)


def write_png(path, image_linear: np.ndarray, metadata: dict | None = None) -> None:
    """Write a linear-RGB float image as an 8-bit sRGB PNG with text metadata."""
    srgb = linear_to_srgb(image_linear)
    data = (np.round(srgb * 255.0)).astype(np.uint8)
    img = Image.fromarray(data, mode="RGB")
    info = PngImagePlugin.PngInfo()
    for key, value in (metadata or {}).items():
        info.add_text(str(key), str(value))
    img.save(path, format="PNG", pnginfo=info)


def read_png(path) -> np.ndarray:
    """Read a PNG as linear-RGB float (8- or 16-bit, alpha dropped)."""
    img = Image.open(path)
    if img.mode in ("I;16", "I"):
        arr = np.asarray(img, dtype=float) / 65535.0
        arr = np.repeat(arr[:, :, None], 3, axis=2)
    else:
        rgb = img.convert("RGB")
        arr = np.asarray(rgb, dtype=float) / 255.0
    return srgb_to_linear(arr)
