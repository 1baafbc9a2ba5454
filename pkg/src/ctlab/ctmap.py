"""Cannon-Thurston map evaluation and the convergence diagnostics built on it."""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import constants
from .families import Representation, RepSequence
from .hypgeo import (
    ThinPartSystem,
    ThinPart,
    geodesic_thinpart_crossing,
    geodesic_through,
    margulis_horoball,
    margulis_tube,
    segment_distance_arrays,
)
from .moebius import (
    Kind,
    MoebiusMap,
    act_boundary,
    act_h3_arrays,
    chordal_dist,
    classify,
    fixed_points,
    from_sphere_arrays,
    is_inf,
    dist_h3,
    dist_h3_arrays,
    orbit_point,
    origin_distance_arrays,
    to_ball_arrays,
)
from .words import (
    BallTree,
    BoundaryWordPath,
    ParabolicBlock,
    ball_size,
    cyclic_reduce,
    inverse,
    inverse_letter,
    multiply,
    parse_parabolic_blocks,
    segment_min_length,
)


class CTError(RuntimeError):
    def __init__(self, message: str, spread: float = math.nan):
        super().__init__(message)
        self.spread = spread


# ---------------------------------------------------------------------------
# tables


@dataclass
class DiagnosticsTable:
    index_name: str
    index: list
    columns: dict[str, list] = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    def column(self, name: str) -> list:
        return self.columns[name]

    def to_csv(self) -> str:
        buf = io.StringIO()
        names = list(self.columns)
        buf.write(",".join([self.index_name] + names) + "\n")
        for i, key in enumerate(self.index):
            row = [_fmt(key)] + [_fmt(self.columns[c][i]) for c in names]
            buf.write(",".join(row) + "\n")
        return buf.getvalue()

    def to_json(self) -> str:
        payload = {
            "metadata": _clean(self.metadata),
            "index_name": self.index_name,
            "index": _clean(self.index),
            "columns": {k: _clean(v) for k, v in self.columns.items()},
        }
        return json.dumps(payload, sort_keys=True, indent=2, allow_nan=False) + "\n"


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return "" if math.isnan(x) else repr(x)
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return str(x)


def _clean(x):
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, np.ndarray)):
        return [_clean(v) for v in x]
    if isinstance(x, (complex, np.complexfloating)):
        return None if is_inf(x) else [float(x.real), float(x.imag)]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return None if (math.isnan(x) or math.isinf(x)) else x
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


# ---------------------------------------------------------------------------
# evaluation helpers


def evaluate_many(rep: Representation, words: Sequence[str]) -> np.ndarray:
    """Matrices rho(w) for a batch of words, shape (len(words), 2, 2)."""
    gens = np.concatenate([rep.symbol_array(), np.eye(2, dtype=complex)[None]])
    syms = {s: i for i, s in enumerate(rep.alphabet.symbols)}
    pad = len(gens) - 1
    L = max((len(w) for w in words), default=0)
    idx = np.full((len(words), L), pad, dtype=np.int64)
    for i, w in enumerate(words):
        idx[i, : len(w)] = [syms[s] for s in w]
    out = np.broadcast_to(np.eye(2, dtype=complex), (len(words), 2, 2)).copy()
    for j in range(L):
        out = out @ gens[idx[:, j]]
    return out


def origin_distances(mats: np.ndarray) -> np.ndarray:
    return origin_distance_arrays(mats[:, 0, 0], mats[:, 0, 1], mats[:, 1, 0], mats[:, 1, 1])


def orbit_points(mats: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return act_h3_arrays(mats[:, 0, 0], mats[:, 0, 1], mats[:, 1, 0], mats[:, 1, 1], 0j, 1.0)


def _shadow(a, b, c, d) -> complex:
    """Radial shadow of M.O; M may be any scalar multiple of an SL2 matrix."""
    s2 = abs(c) ** 2 + abs(d) ** 2
    z = (b * d.conjugate() + a * c.conjugate()) / s2
    t = abs(a * d - b * c) / s2
    if t < 1e-300:
        return z
    q = to_ball_arrays(z, t)
    n = np.linalg.norm(q)
    if n == 0:
        return 0j
    return complex(from_sphere_arrays(q / n))


def fixed_point_path(w: str, depth: int) -> BoundaryWordPath:
    """Word path [1, w+): prefixes of u c c c ... where w = u c u^-1."""
    w = multiply(w)
    if not w:
        raise CTError("identity has no fixed point")
    u, c = cyclic_reduce(w)
    body = u + c * (depth // len(c) + 2)
    words = [body[:r] for r in range(1, len(u) + depth + 1)]
    return BoundaryWordPath(words, math.nan, len(words), power_of=w)


@dataclass
class CTEvaluation:
    xi: complex
    words: list[str]
    shadows: list[complex]
    eta: complex
    residual: float
    branch: str = "path"  # "path", "accelerated" or "parabolic"


def _parabolic_base(w: str, reps: Sequence[Representation]) -> str | None:
    _, c = cyclic_reduce(w)
    for rep in reps:
        for p in rep.parabolics:
            for q in (p, inverse(p)):
                if len(c) % len(q) == 0 and c == q * (len(c) // len(q)):
                    return q
    return None


def ct_eval(
    src: Representation,
    dst: Representation,
    xi: complex,
    path: BoundaryWordPath,
    depth: int | None = None,
    tol: float = constants.TOL_CT,
    tail: int = constants.CT_TAIL,
    accelerate: bool = True,
    max_doublings: int = 60,
) -> CTEvaluation:
    """Limit of rho_dst(g_r).O along the word path [1, xi) given for rho_src."""
    w = path.power_of
    if w is not None:
        u, c = cyclic_reduce(multiply(w))
        p = _parabolic_base(c, [dst]) or _parabolic_base(c, [src])
        if p is not None:
            pm = dst.evaluate(p)
            if p in dst.parabolics or inverse(p) in dst.parabolics or classify(pm).kind is Kind.PARABOLIC:
                cm = dst.evaluate(c)
                fp = fixed_points(cm, parabolic=True).attracting
                eta = act_boundary(dst.evaluate(u), fp)
                return CTEvaluation(xi, [], [], eta, 0.0, "parabolic")
    words = path.words if depth is None else path.words[:depth]
    if not words:
        raise CTError("path too short")
    shadows = []
    a, b, cc, d = 1 + 0j, 0j, 0j, 1 + 0j
    prev = ""
    for g in words:
        if not g.startswith(prev) or len(g) != len(prev) + 1:
            raise CTError("path vertices must extend by one letter")
        s = dst.symbol_map(g[-1])
        a, b, cc, d = a * s.a + b * s.c, a * s.b + b * s.d, cc * s.a + d * s.c, cc * s.b + d * s.d
        m = max(abs(a), abs(b), abs(cc), abs(d))
        if m > 1e100:
            a, b, cc, d = a / m, b / m, cc / m, d / m
        shadows.append(_shadow(a, b, cc, d))
        prev = g
    spread = _spread(shadows[-tail:])
    if spread < tol:
        return CTEvaluation(xi, list(words), shadows, shadows[-1], spread)
    if accelerate and w is not None:
        # powers c^(2^k) conjugated by u: a subsequence of the same path
        u, c = cyclic_reduce(multiply(w))
        U = dst.evaluate(u)
        C = dst.evaluate(c).to_array()
        acc = []
        for _ in range(max_doublings):
            C = C @ C
            C = C / np.abs(C).max()
            M = U.to_array() @ C
            acc.append(_shadow(M[0, 0], M[0, 1], M[1, 0], M[1, 1]))
            if len(acc) >= 3 and _spread(acc[-3:]) < tol * 1e-3:
                break
        spread = _spread(acc[-3:])
        if spread < tol:
            return CTEvaluation(xi, list(words), shadows + acc, acc[-1], spread, "accelerated")
    raise CTError(f"no convergence at depth {len(words)} (tail spread {spread:.3e})", spread)


def _spread(points: Sequence[complex]) -> float:
    last = points[-1]
    return max(chordal_dist(p, last) for p in points)


def ct_eval_word(src: Representation, dst: Representation, w: str, depth: int = 40, **kw) -> CTEvaluation:
    """CT image of the attracting fixed point of rho_src(w), along the path [1, w+)."""
    fp = fixed_points(src.evaluate(multiply(w)), parabolic=_parabolic_base(w, [src]) is not None).attracting
    return ct_eval(src, dst, fp, fixed_point_path(w, depth), **kw)


def equivariance_check(
    src: Representation,
    dst: Representation,
    group_words: Sequence[str],
    point_words: Sequence[str],
    depth: int = 40,
) -> float:
    """max over pairs (g, w) of d(î(g.w+), rho_dst(g) î(w+))."""
    worst = 0.0
    for g, w in zip(group_words, point_words):
        if not g:
            continue
        base = ct_eval_word(src, dst, w, depth)
        moved = ct_eval_word(src, dst, multiply(g, w, inverse(g)), depth)
        worst = max(worst, chordal_dist(moved.eta, act_boundary(dst.evaluate(g), base.eta)))
    return worst


# ---------------------------------------------------------------------------
# Floyd constants


@dataclass
class FloydFit:
    a: float
    b: float
    k: float | None
    depth: int
    min_ratio: list[float]
    max_ratio: list[float]
    min_distance: list[float]
    parabolic: bool

    def holds(self, lengths: np.ndarray, dists: np.ndarray) -> bool:
        upper = np.all(dists <= self.a * lengths + 1e-9)
        if self.parabolic:
            lower = np.all(dists[lengths >= 2] >= 2 * np.log(lengths[lengths >= 2]) - self.k - 1e-9)
        else:
            lower = np.all(dists >= self.b * lengths - 1e-9)
        return bool(upper and lower)


def ball_distances(rep: Representation, depth: int) -> list[np.ndarray]:
    tree = BallTree.build(rep.alphabet, depth)
    return [origin_distances(m) for m in tree.matrices(rep.symbol_array())]


def floyd_fit(rep: Representation, depth: int, parabolic: bool | None = None) -> FloydFit:
    """Fit the constants of b|g| <= d(O, gO) <= a|g| (or 2 log|g| - k <= d) over |g| <= depth."""
    if parabolic is None:
        parabolic = bool(rep.parabolics)
    per_level = ball_distances(rep, depth)
    mins = [float(per_level[j].min() / j) for j in range(1, depth + 1)]
    maxs = [float(per_level[j].max() / j) for j in range(1, depth + 1)]
    min_d = [float(per_level[j].min()) for j in range(1, depth + 1)]
    a, b = max(maxs), min(mins)
    k = None
    if parabolic:
        k = max((2 * math.log(j) - min_d[j - 1] for j in range(2, depth + 1)), default=0.0)
    elif depth >= 4:
        lo = depth // 2
        L = np.arange(lo, depth + 1)
        slope = np.polyfit(np.log(L), np.log(np.array(mins[lo - 1 :])), 1)[0]
        if slope < -0.5:
            raise ValueError(f"family mistagged or non-discrete (min ratio decays with slope {slope:.2f})")
    return FloydFit(a, b, k, depth, mins, maxs, min_d, parabolic)


# ---------------------------------------------------------------------------
# orbit pools: exhaustive enumeration then a beam of the closest orbit points


def _exhaustive_depth(rank: int, cap: int, budget: int = 200_000) -> int:
    j = 0
    while j < cap and ball_size(rank, j + 1) <= budget:
        j += 1
    return j


def min_distance_by_length(rep: Representation, depth_cap: int, beam_width: int = 64, budget: int = 200_000):
    """For each length L <= depth_cap: (min d(O, rho(g)O) over the pool, the beam words of length L).

    Lengths up to the exhaustive depth are exact; beyond it the pool is a
    beam of the ``beam_width`` words closest to O, extended one letter at a time.
    """
    ex = _exhaustive_depth(rep.rank, depth_cap, budget)
    tree = BallTree.build(rep.alphabet, ex, cap=max(ex, constants.MAX_DEPTH))
    mats = tree.matrices(rep.symbol_array())
    mins = [0.0]
    beams: list[list[str]] = [[""]]
    for j in range(1, ex + 1):
        d = origin_distances(mats[j])
        mins.append(float(d.min()))
        order = np.argsort(d, kind="stable")[:beam_width]
        words = tree.words(j) if len(d) <= 4 * beam_width else [tree.word(j, int(i)) for i in order]
        beams.append([words[int(i)] for i in order] if len(d) <= 4 * beam_width else words)
    syms = rep.alphabet.symbols
    for j in range(ex + 1, depth_cap + 1):
        cands = sorted({g + s for g in beams[-1] for s in syms if not g or s != inverse_letter(g[-1])})
        d = origin_distances(evaluate_many(rep, cands))
        order = np.argsort(d, kind="stable")[:beam_width]
        mins.append(float(d[order[0]]))
        beams.append([cands[int(i)] for i in order])
    return mins, beams


def uep_table(
    seq: RepSequence,
    n_max_N: int,
    depth_cap: int,
    beam_width: int = 64,
    extra_words: dict[int, list[str]] | None = None,
) -> DiagnosticsTable:
    """u_N = min over n and N < |g| <= depth_cap of d(rho_n(g).O, O)."""
    if n_max_N >= depth_cap:
        raise ValueError("insufficient depth: need depth_cap > N_max")
    extra = seq.extra_words if extra_words is None else extra_words
    per_n = []
    for n in range(1, len(seq) + 1):
        rep = seq[n]
        mins, _ = min_distance_by_length(rep, depth_cap, beam_width)
        ex = [(len(w), float(origin_distances(evaluate_many(rep, [w]))[0])) for w in extra.get(n, [])]
        per_n.append((mins, ex))
    u = []
    for N in range(n_max_N + 1):
        best = math.inf
        for mins, ex in per_n:
            best = min(best, min(mins[N + 1 :]))
            for L, dv in ex:
                if L > N:
                    best = min(best, dv)
        u.append(best)
    flag = growth_flag(u)
    return DiagnosticsTable(
        "N",
        list(range(n_max_N + 1)),
        {"u_N": u},
        {"depth_cap": depth_cap, "beam_width": beam_width, "indices": len(seq), "flag": flag,
         "sequence": seq.name, "extra_words": {str(k): [len(w) for w in v] for k, v in sorted(extra.items())}},
    )


def growth_flag(values: Sequence[float], min_growth: float = 1.0) -> str:
    v = list(values)
    mid = v[len(v) // 2]
    nondecreasing = all(y >= x - 1e-12 for x, y in zip(v, v[1:]))
    if nondecreasing and v[-1] - mid >= min_growth:
        return "consistent"
    return "violating"


def _segment_pool(rep: Representation, n_max_N: int, delta: int, samples: int, rng: np.random.Generator, beam_width: int = 32):
    """Sampled Cayley-graph segments [u, v] with their meet length (min |g| along them)."""
    _, beams = min_distance_by_length(rep, n_max_N + 1, beam_width)
    syms = rep.alphabet.symbols
    pairs = []
    for N in range(n_max_N + 1):
        prefixes = beams[N + 1]
        for _ in range(samples):
            pre = prefixes[int(rng.integers(len(prefixes)))]
            u = _extend(pre, int(rng.integers(0, delta)), syms, rng)
            v = _extend(pre, int(rng.integers(0, delta)), syms, rng)
            pairs.append((u, v))
    return pairs


def _extend(w: str, k: int, syms: str, rng: np.random.Generator) -> str:
    out = list(w)
    while len(out) < len(w) + k:
        s = syms[int(rng.integers(len(syms)))]
        if out and s == inverse_letter(out[-1]):
            continue
        out.append(s)
    return "".join(out)


def _segment_distances(rep: Representation, pairs: Sequence[tuple[str, str]]) -> np.ndarray:
    mu = evaluate_many(rep, [u for u, _ in pairs])
    mv = evaluate_many(rep, [v for _, v in pairs])
    z1, t1 = orbit_points(mu)
    z2, t2 = orbit_points(mv)
    return segment_distance_arrays(0j, 1.0, z1, t1, z2, t2)


def exclusion_profile(
    rep: Representation, n_max_N: int, delta: int = 4, samples: int = 64, seed: int = 0
) -> DiagnosticsTable:
    """f(N): min distance from O to [j(u), j(v)] over sampled segments outside B(1; N)."""
    rng = np.random.default_rng(seed)
    pairs = _segment_pool(rep, n_max_N, delta, samples, rng)
    meet = np.array([segment_min_length(u, v) for u, v in pairs])
    dist = _segment_distances(rep, pairs)
    f, count = [], []
    for N in range(n_max_N + 1):
        sel = meet > N
        f.append(float(dist[sel].min()) if sel.any() else math.nan)
        count.append(int(sel.sum()))
    return DiagnosticsTable("N", list(range(n_max_N + 1)), {"f_N": f, "samples": count},
                            {"delta": delta, "samples_per_level": samples, "seed": seed})


def uepp_table(
    seq: RepSequence, n_max_N: int, delta: int = 4, samples: int = 32, seed: int = 0
) -> DiagnosticsTable:
    """v_N: exclusion profile minimized over the whole sequence."""
    v = [math.inf] * (n_max_N + 1)
    for n in range(1, len(seq) + 1):
        prof = exclusion_profile(seq[n], n_max_N, delta, samples, seed + n)
        v = [min(x, y) for x, y in zip(v, prof.column("f_N"))]
    return DiagnosticsTable("N", list(range(n_max_N + 1)), {"v_N": v},
                            {"delta": delta, "samples_per_level": samples, "seed": seed,
                             "indices": len(seq), "flag": growth_flag(v), "sequence": seq.name})


# ---------------------------------------------------------------------------
# pointwise diagnostics


def classify_path(words: Sequence[str], parabolics: Sequence[str], k0: int = 2) -> str:
    """Sort a path into the three cases: bounded blocks, growing blocks, infinite block."""
    if not words:
        raise ValueError("path too short")
    w = words[-1]
    items = parse_parabolic_blocks(w, parabolics, k0)
    blocks = [(i, x) for i, x in enumerate(items) if isinstance(x, ParabolicBlock)]
    if not blocks:
        return "bounded-blocks"
    last_i, last = blocks[-1]
    tail = "".join(x if isinstance(x, str) else x.expand() for x in items[last_i + 1 :])
    if last_i == len(items) - 1 or (not tail and not last.remainder):
        if len(last.expand()) >= len(w) / 2:
            return "infinite-block"
    lengths = [b.length for _, b in blocks]
    half = len(lengths) // 2
    if len(lengths) >= 2 and max(lengths[half:]) > max(lengths[: max(half, 1)]) and max(lengths) >= 2 * k0:
        return "growing-blocks"
    return "bounded-blocks"


def ep_diagnostic(seq: RepSequence, path: BoundaryWordPath, n_max_N: int, k0: int = 2) -> DiagnosticsTable:
    """Per-point escape profile along [1, xi): columns f_xi(N) and M_xi(N)."""
    words = path.words
    if len(words) <= n_max_N:
        raise ValueError("path too short")
    parabolics = seq.limit.parabolics
    case = classify_path(words, parabolics, k0)
    meta = {"case": case, "path_length": len(words), "sequence": seq.name}
    if case == "infinite-block":
        meta["skipped"] = "parabolic point: follows from algebraic convergence"
        return DiagnosticsTable("N", [], {"f_xi": [], "M_xi": []}, meta)
    dists = np.array([origin_distances(evaluate_many(seq[n], words)) for n in range(1, len(seq) + 1)])
    limit = origin_distances(evaluate_many(seq.limit, words))
    f, M = [], []
    n_total = len(seq)
    for N in range(n_max_N + 1):
        target = float(limit[N:].min()) / 2
        tail_min = dists[:, N:].min(axis=1)
        Mx = n_total + 1
        for m in range(n_total, 0, -1):
            if tail_min[m - 1] >= target:
                Mx = m
            else:
                break
        f.append(float(tail_min[Mx - 1 :].min()) if Mx <= n_total else math.nan)
        M.append(Mx)
    return DiagnosticsTable("N", list(range(n_max_N + 1)), {"f_xi": f, "M_xi": M}, meta)


# ---------------------------------------------------------------------------
# convergence of CT maps along a sequence


VERDICTS = ("uniform-consistent", "pointwise-only-consistent", "inconsistent")


def _decreasing_tail(values: Sequence[float], window: int, tol: float) -> bool:
    tail = list(values[-window:])
    if max(tail) < tol:
        return True
    return all(y < x for x, y in zip(tail, tail[1:]))


def _report_row(task) -> tuple[list[float], int]:
    src, dst, grid, limit_vals, depth = task
    out, fails = [], 0
    for w, ref in zip(grid, limit_vals):
        if ref is None:
            out.append(math.nan)
            fails += 1
            continue
        try:
            out.append(chordal_dist(ct_eval_word(src, dst, w, depth).eta, ref))
        except CTError:
            out.append(math.nan)
            fails += 1
    return out, fails


def convergence_report(
    seq: RepSequence,
    grid: Sequence[str],
    depth: int = 40,
    tol: float = constants.TOL_CT,
    window: int = 5,
    jobs: int = 1,
) -> DiagnosticsTable:
    """Pointwise distances d(î_n(xi), î_inf(xi)) for xi = w+ over grid words w."""
    src = seq.limit
    limit_vals = []
    for w in grid:
        try:
            limit_vals.append(ct_eval_word(src, seq.limit, w, depth).eta)
        except CTError:
            limit_vals.append(None)

    indices = list(range(1, len(seq) + 1))
    tasks = [(src, seq[n], list(grid), limit_vals, depth) for n in indices]
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(jobs) as ex:
            rows = list(ex.map(_report_row, tasks))
    else:
        rows = [_report_row(t) for t in tasks]
    matrix = np.array([r for r, _ in rows], dtype=float)
    fails = [f for _, f in rows]
    sup = [float(np.nanmax(r)) if np.isfinite(r).any() else math.nan for r in matrix]
    uniform = _decreasing_tail(sup, window, tol)
    cols_ok = all(
        _decreasing_tail(matrix[:, j], window, tol) for j in range(matrix.shape[1]) if np.isfinite(matrix[:, j]).all()
    )
    verdict = VERDICTS[0] if uniform else (VERDICTS[1] if cols_ok else VERDICTS[2])
    return DiagnosticsTable(
        "n",
        indices,
        {"sup_distance": sup, "failures": fails},
        {"verdict": verdict, "grid": list(grid), "depth": depth, "tol": tol, "window": window,
         "pointwise": matrix.tolist(), "sequence": seq.name},
    )


# ---------------------------------------------------------------------------
# geometric limits and thin parts


@dataclass
class LimitMatch:
    candidate: int
    word: str | None
    distance: float
    violations: list[str]


def geometric_limit_match(
    seq: RepSequence,
    n: int,
    candidates: Sequence[MoebiusMap],
    delta0: float,
    depth_cap: int,
) -> list[LimitMatch]:
    """For each h, the words g (|g| <= depth_cap) with d(rho_n(g).O, h.O) < delta0."""
    rep = seq[n]
    if rep.rank == 1:
        words = [""] + [s * j for j in range(1, depth_cap + 1) for s in "aA"]
        mats = evaluate_many(rep, words) if depth_cap <= 64 else _cyclic_powers(rep, depth_cap)
    else:
        tree = BallTree.build(rep.alphabet, depth_cap, cap=max(depth_cap, constants.MAX_DEPTH))
        words = [w for j in range(depth_cap + 1) for w in tree.words(j)]
        mats = np.concatenate(tree.matrices(rep.symbol_array()))
    z, t = orbit_points(mats)
    out = []
    for i, h in enumerate(candidates):
        p = orbit_point(h)
        d = dist_h3_arrays(z, t, p.z, p.t)
        hits = np.flatnonzero(d < delta0)
        if len(hits) == 0:
            out.append(LimitMatch(i, None, float(d.min()), []))
            continue
        best = hits[np.argmin(d[hits])]
        out.append(LimitMatch(i, words[best], float(d[best]), [words[j] for j in hits if j != best]))
    return out


def _cyclic_powers(rep: Representation, depth_cap: int) -> np.ndarray:
    A = rep.generators[0].to_array()
    Ai = rep.generators[0].inverse().to_array()
    out = [np.eye(2, dtype=complex)]
    P, Q = np.eye(2, dtype=complex), np.eye(2, dtype=complex)
    for _ in range(depth_cap):
        P = P @ A
        Q = Q @ Ai
        out.extend([P.copy(), Q.copy()])
    return np.array(out)


def thin_part_system(rep: Representation, words: Sequence[str], eps: float = constants.MARGULIS_EPS) -> ThinPartSystem:
    """Horoballs (parabolic words) and Margulis tubes (loxodromic words) for the given words."""
    system = ThinPartSystem([], eps)
    for w in words:
        m = rep.evaluate(w)
        if w in rep.parabolics or classify(m).kind is Kind.PARABOLIC:
            system.parts.append(ThinPart(margulis_horoball(m, eps), w, eps))
        elif classify(m).kind is Kind.LOXODROMIC:
            tube = margulis_tube(m, eps)
            if tube is not None:
                system.parts.append(ThinPart(tube, w, eps))
    return system


def penetration_witness(
    seq: RepSequence,
    block: ParabolicBlock,
    n: int,
    D: float = 1.0,
    eps: float = constants.MARGULIS_EPS,
    thin_parts: ThinPartSystem | None = None,
) -> bool:
    """Does the geodesic from j_n(1) to j_n(p^k y) cross the thin part of p?"""
    if block.exponent == 0:
        return False
    rep = seq[n]
    system = thin_parts if thin_parts is not None else thin_part_system(rep, [block.base], eps)
    part = system.for_word(block.base)
    start = orbit_point(rep.evaluate(""))
    end = orbit_point(rep.evaluate(block.expand()))
    if start == end:
        return False
    crossing = geodesic_thinpart_crossing(geodesic_through(start, end), part.region)
    if not crossing.hit:
        return False
    # the crossing must lie on the segment between the flanking orbit points, up to D
    total = dist_h3(start, end)
    for x in (crossing.entry, crossing.exit):
        if x is not None and dist_h3(start, x) + dist_h3(x, end) <= total + D:
            return True
    return False
