"""Monte-Carlo samplers for the distortion estimates, and the one-off calibration sweep.

Run ``python -m ctlab.calibrate`` to print the values frozen in
:mod:`ctlab.constants`.  The samplers are also used by the test-suite.
"""

from __future__ import annotations

import argparse
import math
from dataclasses import dataclass

import numpy as np

from .hypgeo import segment_distance_arrays
from .moebius import act_h3_arrays, dist_h3_arrays, random_su2, to_ball_arrays


def _rotate(rng, z, t):
    """Apply one random rotation about O to a batch of points."""
    k = random_su2(rng)
    return act_h3_arrays(k.a, k.b, k.c, k.d, z, t)


def ball_gap(z1, t1, z2, t2) -> np.ndarray:
    return np.linalg.norm(to_ball_arrays(z1, t1) - to_ball_arrays(z2, t2), axis=-1)


# ---------------------------------------------------------------------------
# boundary gap of a segment staying outside B(O; R)


def far_segment_gaps(rng: np.random.Generator, R: float, n: int, spread: float = 6.0) -> np.ndarray:
    """Ball-model gaps |X - Y| for X, Y on a geodesic whose nearest point to O is at distance R."""
    beta = rng.uniform(0, 2 * math.pi, n)
    s = rng.uniform(-spread, spread, (2, n))
    er = math.exp(R)
    z = er * np.tanh(s) * np.exp(1j * beta)
    t = er / np.cosh(s)
    zr, tr = _rotate(rng, z.ravel(), t.ravel())
    return ball_gap(zr[:n], tr[:n], zr[n:], tr[n:])


# ---------------------------------------------------------------------------
# orbit point versus attracting fixed point


def orbit_fixed_gaps(rng: np.random.Generator, R: float, n: int, max_ell: float = 0.5) -> np.ndarray:
    """|A.O - A+| in the ball model for maps A with d(O, A.O) = R and translation length <= max_ell."""
    ell = rng.uniform(0, max_ell, n)
    ell[0] = 0.0  # always include the parabolic case
    tau = np.sqrt(np.maximum(2 * math.cosh(R) - 2 * np.cosh(ell), 0)) * np.exp(1j * rng.uniform(0, 2 * math.pi, n))
    # A = [[e^(l/2), tau], [0, e^(-l/2)]] fixes infinity (attracting) and moves O to (tau e^(l/2), e^l)
    z, t = tau * np.exp(ell / 2), np.exp(ell)
    q = to_ball_arrays(z, t)
    north = np.array([0.0, 0.0, 1.0])
    return np.linalg.norm(q - north, axis=-1)


def log_slope(rs: np.ndarray, values: np.ndarray) -> float:
    return float(np.polyfit(rs, np.log(values), 1)[0])


# ---------------------------------------------------------------------------
# tube surface length against exp(d/2)


def tube_length_ratios(
    rng: np.random.Generator, n: int, r0: float = 0.5, h0: float = 2.0, d0: float = 0.5, r_max: float = 8.0
) -> np.ndarray:
    R = rng.uniform(r0, r_max, n)
    h = rng.uniform(0, h0, n)
    phi = rng.uniform(0, math.pi, n)
    sr, cr = np.sinh(R), np.cosh(R)
    z1, t1 = sr + 0j, np.ones(n)
    z2, t2 = np.exp(h) * sr * np.exp(1j * phi), np.exp(h)
    d = dist_h3_arrays(z1, t1, z2, t2)
    l = np.hypot(phi * sr, h * cr)
    keep = d >= d0
    return l[keep] / np.exp(d[keep] / 2)


# ---------------------------------------------------------------------------
# penetration of horoballs and tubes


@dataclass
class PenetrationBatch:
    N: np.ndarray
    min_dist: np.ndarray
    rejected: int = 0

    def margin(self) -> np.ndarray:
        """N/4 - min_dist: positive entries are what the constant c must absorb."""
        return self.N / 4 - self.min_dist


def horoball_configs(rng: np.random.Generator, n: int, depth: float = 3.0, spread: float = 8.0) -> PenetrationBatch:
    """H = {t >= 1}, O = (0, t0) with t0 <= 1, P1, P2 on the horosphere."""
    t0 = np.exp(-rng.uniform(0, depth, n))
    r = np.exp(rng.uniform(-2, spread, (2, n)))
    ang = rng.uniform(0, 2 * math.pi, (2, n))
    p = r * np.exp(1j * ang)
    oz = np.zeros(n, complex)
    d1 = dist_h3_arrays(oz, t0, p[0], np.ones(n))
    d2 = dist_h3_arrays(oz, t0, p[1], np.ones(n))
    seg = segment_distance_arrays(oz, t0, p[0], np.ones(n), p[1], np.ones(n))
    return PenetrationBatch(np.minimum(d1, d2), seg)


def _surface_path_min(R, u1, a1, u2, a2, oz, ot, num: int = 65) -> np.ndarray:
    """Min distance to O along the flat-metric geodesic on the tube boundary."""
    da = np.angle(np.exp(1j * (a2 - a1)))  # shorter angular direction
    s = np.linspace(0, 1, num)[:, None]
    u = u1 + s * (u2 - u1)
    a = a1 + s * da
    t = np.exp(u)
    z = t * np.sinh(R) * np.exp(1j * a)
    return dist_h3_arrays(z, t, oz, ot).min(axis=0)


def tube_configs(
    rng: np.random.Generator, n: int, r_range=(0.2, 4.0), far: float = 6.0, height: float = 8.0
) -> PenetrationBatch:
    """Axis over 0, O at distance r >= R from the axis; keeps only configurations meeting the path hypothesis."""
    R = rng.uniform(*r_range, n)
    r = R + rng.uniform(0, far, n)
    oz, ot = np.sinh(r) + 0j, np.ones(n)
    u = rng.uniform(-height, height, (2, n))
    a = rng.uniform(-math.pi, math.pi, (2, n))
    t = np.exp(u)
    pz = t * np.sinh(R) * np.exp(1j * a)
    d1 = dist_h3_arrays(oz, ot, pz[0], t[0])
    d2 = dist_h3_arrays(oz, ot, pz[1], t[1])
    N = np.minimum(d1, d2)
    path_min = _surface_path_min(R, u[0], a[0], u[1], a[1], oz, ot)
    ok = path_min >= N - 1e-9 * np.maximum(1.0, N)
    seg = segment_distance_arrays(oz[ok], ot[ok], pz[0][ok], t[0][ok], pz[1][ok], t[1][ok])
    return PenetrationBatch(N[ok], seg, int((~ok).sum()))


def admissible_tube_configs(rng: np.random.Generator, n: int, **kw) -> PenetrationBatch:
    """Draw until n configurations satisfy the surface-path hypothesis."""
    Ns, ds, rejected = [], [], 0
    have = 0
    while have < n:
        b = tube_configs(rng, max(2 * (n - have), 1000), **kw)
        Ns.append(b.N)
        ds.append(b.min_dist)
        rejected += b.rejected
        have += len(b.N)
    return PenetrationBatch(np.concatenate(Ns)[:n], np.concatenate(ds)[:n], rejected)


# ---------------------------------------------------------------------------
# the sweep


def standard_path_ratio(depth: int = 12) -> float:
    """Largest quasi-geodesic ratio of tracked paths on the test families."""
    from .families import punctured_torus, symmetric_schottky
    from .moebius import fixed_points
    from .words import standard_path_to

    worst = 0.0
    for rep in (symmetric_schottky(3.0), punctured_torus(3, 3)):
        for w in ("a", "b", "A", "B", "aB", "ab", "aab", "abb", "aabAB", "bbaBA", "aaBAb", "abbaB"):
            xi = fixed_points(rep.evaluate(w)).attracting
            worst = max(worst, standard_path_to(rep, xi, depth).qg_ratio)
    return worst


def sweep(seed: int = 20240601, n: int = 200_000) -> dict:
    rng = np.random.default_rng(seed)
    horo = horoball_configs(rng, n)
    tube = admissible_tube_configs(rng, n)
    ratios = tube_length_ratios(rng, n)
    return {
        "horoball_max_margin": float(horo.margin().max()),
        "tube_max_margin": float(tube.margin().max()),
        "tube_rejected": tube.rejected,
        "tube_ratio_min": float(ratios.min()),
        "tube_ratio_max": float(ratios.max()),
        "standard_path_ratio": standard_path_ratio(),
    }


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description="Calibrate the frozen distortion constants.")
    ap.add_argument("--seed", type=int, default=20240601)
    ap.add_argument("--samples", type=int, default=200_000)
    args = ap.parse_args(argv)
    res = sweep(args.seed, args.samples)
    for k, v in res.items():
        print(f"{k} = {v!r}")
    print(f"HOROBALL_PENETRATION_C = {2 * max(res['horoball_max_margin'], 0.0)!r}")
    print(f"TUBE_PENETRATION_C = {2 * max(res['tube_max_margin'], 0.0)!r}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
