"""Finite samples of limit sets, chordal Hausdorff distance, and rasterization."""

from __future__ import annotations

import io
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree

from . import constants
from .families import Representation
from .moebius import (
    EPS_PAR,
    act_h3_arrays,
    from_sphere_arrays,
    origin_distance_arrays,
    to_ball_arrays,
    to_sphere_arrays,
)
from .words import BallTree, cyclic_reduce, inverse

log = logging.getLogger(__name__)


class LimitSetError(ValueError):
    pass


@dataclass
class LimitSample:
    points: np.ndarray  # complex, inf allowed
    words: list[str]
    depths: np.ndarray  # word length (fixed-point mode) or d(O, g.O) (orbit mode)
    depth: int
    mode: str
    dedup_tol: float = constants.DEDUP_TOL
    skipped: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.points)

    @property
    def xyz(self) -> np.ndarray:
        return to_sphere_arrays(self.points)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("re,im,isInf,depth,word\n")
        for z, d, w in zip(self.points, self.depths, self.words):
            inf = bool(np.isinf(z))
            re, im = (0.0, 0.0) if inf else (float(z.real), float(z.imag))
            buf.write(f"{re!r},{im!r},{int(inf)},{float(d)!r},{w}\n")
        return buf.getvalue()


def dedup(xyz: np.ndarray, tol: float) -> np.ndarray:
    """Indices of points kept: the first of every cluster closer than tol (in input order)."""
    if len(xyz) == 0:
        return np.zeros(0, dtype=np.int64)
    # stage 1: one representative per grid cell of side tol/2 (cell diameter < tol)
    cells = np.floor(xyz / (tol / 2)).astype(np.int64)
    _, first = np.unique(cells, axis=0, return_index=True)
    first = np.sort(first)
    # stage 2: greedy exact pass over the representatives
    kept = first[_greedy(xyz[first], tol)]
    return kept


def _greedy(xyz: np.ndarray, tol: float) -> np.ndarray:
    tree = cKDTree(xyz)
    pairs = tree.query_pairs(tol, output_type="ndarray")
    drop = np.zeros(len(xyz), dtype=bool)
    if len(pairs):
        pairs = pairs[np.lexsort((pairs[:, 1], pairs[:, 0]))]
        # greedy in input order: a point is dropped if an earlier kept point is close
        neighbours: dict[int, list[int]] = {}
        for i, j in pairs:
            neighbours.setdefault(int(j), []).append(int(i))
        for j in sorted(neighbours):
            if any(not drop[i] for i in neighbours[j]):
                drop[j] = True
    return np.flatnonzero(~drop)


def _fixed_points_arrays(m: np.ndarray, parabolic: np.ndarray):
    """Attracting and repelling fixed points of a stack of SL2 matrices (repelling nan if parabolic)."""
    a, b, c, d = m[:, 0, 0], m[:, 0, 1], m[:, 1, 0], m[:, 1, 1]
    scale = np.abs(m).max(axis=(1, 2))
    small_c = np.abs(c) <= 1e-12 * scale
    cs = np.where(small_c, 1.0, c)
    disc = np.sqrt((a - d) ** 2 + 4 * b * c)
    z1 = ((a - d) + disc) / (2 * cs)
    z2 = ((a - d) - disc) / (2 * cs)
    swap = np.abs(c * z1 + d) < np.abs(c * z2 + d)
    att = np.where(swap, z2, z1)
    rep = np.where(swap, z1, z2)
    par_pt = (a - d) / (2 * cs)
    # upper triangular case
    with np.errstate(divide="ignore", invalid="ignore"):
        finite = b / (d - a)
    inf = complex(np.inf, 0)
    ut_att = np.where(np.abs(a) > np.abs(d), inf, finite)
    ut_rep = np.where(np.abs(a) > np.abs(d), finite, inf)
    att = np.where(small_c, ut_att, att)
    rep = np.where(small_c, ut_rep, rep)
    par_pt = np.where(small_c, inf, par_pt)
    att = np.where(parabolic, par_pt, att)
    rep = np.where(parabolic, np.nan, rep)
    return att, rep


def sample_fixed_points(
    rep: Representation,
    depth: int,
    repelling: bool = True,
    dedup_tol: float = constants.DEDUP_TOL,
    cap: int = constants.MAX_DEPTH,
) -> LimitSample:
    """Fixed points of rho(w) for cyclically reduced words 1 <= |w| <= depth."""
    tree = BallTree.build(rep.alphabet, depth, cap)
    mats = tree.matrices(rep.symbol_array())
    pts, words, depths = [], [], []
    skipped = {"elliptic": 0, "identity": 0}
    par_words = {cyclic_reduce(p)[1] for p in rep.parabolics}
    par_words |= {inverse(p) for p in par_words}
    for j in range(1, depth + 1):
        mask = tree.cyclically_reduced_mask(j)
        idx = np.flatnonzero(mask)
        m = mats[j][idx]
        tr2 = (m[:, 0, 0] + m[:, 1, 1]) ** 2
        ident = np.minimum(np.abs(m - np.eye(2)).max(axis=(1, 2)), np.abs(m + np.eye(2)).max(axis=(1, 2))) < 1e-9
        par = np.abs(tr2 - 4) < EPS_PAR
        if par_words:
            wl = tree.words(j)
            flagged = np.array([wl[i] in par_words or _is_power_of(wl[i], par_words) for i in idx])
            par |= flagged
        else:
            wl = None
        ell = ~par & ~ident & (np.abs(tr2.imag) < EPS_PAR) & (tr2.real >= 0) & (tr2.real < 4)
        skipped["elliptic"] += int(ell.sum())
        skipped["identity"] += int(ident.sum())
        ok = ~ell & ~ident
        att, repl = _fixed_points_arrays(m[ok], par[ok])
        if wl is None:
            wl = tree.words(j)
        okw = [wl[i] for i in idx[ok]]
        pts.append(att)
        words.extend(w + "+" for w in okw)
        depths.append(np.full(len(att), j))
        if repelling:
            keep = ~par[ok]
            pts.append(repl[keep])
            words.extend(w + "-" for w, k in zip(okw, keep) if k)
            depths.append(np.full(int(keep.sum()), j))
    if skipped["elliptic"]:
        log.warning("skipped %d elliptic words (torsion or non-discrete group)", skipped["elliptic"])
    points = np.concatenate(pts) if pts else np.zeros(0, complex)
    depth_arr = np.concatenate(depths) if depths else np.zeros(0)
    keep = dedup(to_sphere_arrays(points), dedup_tol)
    return LimitSample(points[keep], [words[i] for i in keep], depth_arr[keep], depth, "fixed-point", dedup_tol, skipped)


def _is_power_of(w: str, bases: set[str]) -> bool:
    for p in bases:
        if len(w) % len(p) == 0 and w == p * (len(w) // len(p)):
            return True
    return False


def sample_orbit(rep: Representation, depth: int, dedup_tol: float = constants.DEDUP_TOL, cap: int = constants.ORBIT_DEPTH) -> LimitSample:
    """Radial shadows (from O) of the orbit points rho(w).O with |w| = depth."""
    if all(np.allclose(g.to_array(), np.eye(2)) for g in rep.generators):
        raise LimitSetError("identity representation is not faithful")
    tree = BallTree.build(rep.alphabet, depth, cap)
    m = tree.matrices(rep.symbol_array())[depth]
    a, b, c, d = m[:, 0, 0], m[:, 0, 1], m[:, 1, 0], m[:, 1, 1]
    z, t = act_h3_arrays(a, b, c, d, 0j, 1.0)
    q = to_ball_arrays(z, t)
    norm = np.linalg.norm(q, axis=-1, keepdims=True)
    pts = from_sphere_arrays(q / np.where(norm == 0, 1, norm))
    dist = origin_distance_arrays(a, b, c, d)
    words = tree.words(depth)
    keep = dedup(to_sphere_arrays(pts), dedup_tol)
    return LimitSample(pts[keep], [words[i] for i in keep], dist[keep], depth, "orbit", dedup_tol)


def hausdorff_chordal(s1: LimitSample | np.ndarray, s2: LimitSample | np.ndarray) -> float:
    """Chordal Hausdorff distance between two finite point sets."""
    x1 = s1.xyz if isinstance(s1, LimitSample) else to_sphere_arrays(s1)
    x2 = s2.xyz if isinstance(s2, LimitSample) else to_sphere_arrays(s2)
    if len(x1) == 0 or len(x2) == 0:
        raise LimitSetError("empty sample")
    d12 = cKDTree(x2).query(x1)[0].max()
    d21 = cKDTree(x1).query(x2)[0].max()
    h = float(max(d12, d21))
    return 0.0 if h < 1e-15 else h


# ---------------------------------------------------------------------------
# rendering


@dataclass(frozen=True)
class ImageSpec:
    width: int = 512
    height: int = 512
    projection: str = "plane"  # or "sphere" (azimuthal equal-area view of the southern hemisphere)
    window: tuple[float, float, float, float] = (-2.0, 2.0, -2.0, 2.0)
    background: tuple[int, int, int] = (0, 0, 0)
    near_color: tuple[int, int, int] = (255, 220, 120)
    far_color: tuple[int, int, int] = (60, 120, 255)


def render(sample: LimitSample, spec: ImageSpec = ImageSpec()) -> np.ndarray:
    """Rasterize to an (height, width, 3) uint8 array, coloured by depth."""
    if len(sample) == 0:
        raise LimitSetError("empty sample")
    img = np.empty((spec.height, spec.width, 3), dtype=np.uint8)
    img[:] = spec.background
    if spec.projection == "plane":
        z = sample.points
        finite = np.isfinite(z)
        x0, x1, y0, y1 = spec.window
        px = np.floor((z.real - x0) / (x1 - x0) * spec.width)
        py = np.floor((y1 - z.imag) / (y1 - y0) * spec.height)
    elif spec.projection == "sphere":
        xyz = sample.xyz
        finite = np.ones(len(xyz), dtype=bool)
        # Lambert azimuthal equal-area around the south pole (z = 0), unit disk covers the sphere
        k = np.sqrt(np.maximum(0.0, 1.0 + xyz[:, 2])) / np.sqrt(2.0)
        rxy = np.hypot(xyz[:, 0], xyz[:, 1])
        s = np.where(rxy > 0, k / np.where(rxy > 0, rxy, 1), 0)
        u, v = xyz[:, 0] * s, xyz[:, 1] * s
        px = np.floor((u + 1) / 2 * spec.width)
        py = np.floor((1 - v) / 2 * spec.height)
    else:
        raise LimitSetError(f"unknown projection {spec.projection!r}")
    with np.errstate(invalid="ignore"):
        inside = finite & (px >= 0) & (px < spec.width) & (py >= 0) & (py < spec.height)
    dep = np.asarray(sample.depths, dtype=float)
    span = dep.max() - dep.min()
    frac = (dep - dep.min()) / span if span > 0 else np.zeros_like(dep)
    near, far = np.array(spec.near_color, float), np.array(spec.far_color, float)
    colors = np.rint(near[None] * (1 - frac[:, None]) + far[None] * frac[:, None]).astype(np.uint8)
    order = np.argsort(-dep, kind="stable")  # shallow points drawn last
    order = order[inside[order]]
    img[py[order].astype(int), px[order].astype(int)] = colors[order]
    return img


def ppm_bytes(img: np.ndarray) -> bytes:
    h, w, _ = img.shape
    return f"P6\n{w} {h}\n255\n".encode("ascii") + img.tobytes()


def write_image(img: np.ndarray, path: str | Path, fmt: str = "ppm") -> Path:
    path = Path(path)
    if fmt == "ppm":
        path.write_bytes(ppm_bytes(img))
    elif fmt == "png":
        from PIL import Image

        Image.fromarray(img).save(path, format="PNG")
    else:
        raise LimitSetError(f"unknown image format {fmt!r}")
    return path
