"""Seeded invariant suites run by ``ctlab verify``.

Each check returns a witness dict on failure (the inputs that broke it) so
that failures can be replayed.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import constants
from .calibrate import admissible_tube_configs, horoball_configs, tube_length_ratios
from .ctmap import evaluate_many, floyd_fit, origin_distances
from .families import punctured_torus, symmetric_schottky
from .hypgeo import Geodesic, Horoball, geodesic_thinpart_crossing, horoball_surface_dist
from .moebius import (
    H3Point,
    Kind,
    act_boundary,
    act_h3,
    chordal_dist,
    classify,
    compose,
    dist_h3,
    fixed_points,
    from_ball,
    is_identity,
    origin_distance,
    random_moebius,
    to_ball,
)
from .words import sample_word

log = logging.getLogger(__name__)


@dataclass
class SuiteResult:
    suite: str
    trials: int
    checks: dict[str, int] = field(default_factory=dict)  # check name -> failures
    witnesses: list[dict] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not any(self.checks.values())

    def record(self, check: str, ok: bool, witness: dict | None = None) -> None:
        self.checks.setdefault(check, 0)
        if not ok:
            self.checks[check] += 1
            if len(self.witnesses) < 20:
                self.witnesses.append({"check": check, **(witness or {})})

    def as_dict(self) -> dict:
        return {
            "suite": self.suite,
            "trials": self.trials,
            "passed": self.passed,
            "checks": self.checks,
            "witnesses": self.witnesses,
        }


def _entries(m) -> list:
    return [[z.real, z.imag] for z in (m.a, m.b, m.c, m.d)]


def _random_point(rng) -> H3Point:
    return H3Point(complex(*rng.normal(0, 2, 2)), float(math.exp(rng.normal(0, 1))))


def suite_moebius(seed: int, trials: int) -> SuiteResult:
    rng = np.random.default_rng(seed)
    res = SuiteResult("moebius", trials)
    for _ in range(trials):
        m, g = random_moebius(rng), random_moebius(rng)
        res.record("inverse", is_identity(compose(m, m.inverse()), 1e-8), {"m": _entries(m)})
        res.record("det", abs(m.det - 1) < 1e-9, {"m": _entries(m)})
        p, q = _random_point(rng), _random_point(rng)
        d0 = dist_h3(p, q)
        d1 = dist_h3(act_h3(g, p), act_h3(g, q))
        res.record("isometry", abs(d0 - d1) < 1e-8 * max(1.0, d0), {"g": _entries(g), "d0": d0, "d1": d1})
        back = from_ball(to_ball(p))
        res.record("ball-roundtrip", dist_h3(p, back) < 1e-9, {"z": [p.z.real, p.z.imag], "t": p.t})
        if classify(m).kind is Kind.LOXODROMIC:
            fp = fixed_points(m)
            err = max(chordal_dist(act_boundary(m, fp.attracting), fp.attracting),
                      chordal_dist(act_boundary(m, fp.repelling), fp.repelling))
            res.record("fixed-points", err < 1e-8, {"m": _entries(m), "error": err})
    return res


def _horosphere_pair(rng) -> tuple[Horoball, H3Point, H3Point]:
    h = Horoball(complex(*rng.normal(0, 1, 2)), float(math.exp(rng.normal(0, 1))))
    m, height = h.normalizer()
    inv = m.inverse()
    p1 = act_h3(inv, H3Point(complex(*rng.normal(0, 3, 2)) * height, height))
    p2 = act_h3(inv, H3Point(complex(*rng.normal(0, 3, 2)) * height, height))
    return h, p1, p2


def suite_hypgeo(seed: int, trials: int) -> SuiteResult:
    rng = np.random.default_rng(seed)
    res = SuiteResult("hypgeo", trials)
    done = 0
    while done < trials:
        h, p1, p2 = _horosphere_pair(rng)
        d = dist_h3(p1, p2)
        if d < 0.5:
            continue
        done += 1
        l = horoball_surface_dist(h, p1, p2)
        rel = abs(l - 2 * math.sinh(d / 2)) / l
        res.record("horosphere-length", rel < 1e-10, {"base": [h.base.real, h.base.imag], "size": h.size, "rel": rel})
    if trials:
        horo = horoball_configs(rng, trials)
        bad = np.flatnonzero(horo.min_dist < horo.N / 4 - constants.HOROBALL_PENETRATION_C)
        res.checks["horoball-penetration"] = len(bad)
        for i in bad[:5]:
            res.witnesses.append({"check": "horoball-penetration", "N": horo.N[i], "min_dist": horo.min_dist[i]})
        tube = admissible_tube_configs(rng, trials)
        bad = np.flatnonzero(tube.min_dist < tube.N / 4 - constants.TUBE_PENETRATION_C)
        res.checks["tube-penetration"] = len(bad)
        for i in bad[:5]:
            res.witnesses.append({"check": "tube-penetration", "N": tube.N[i], "min_dist": tube.min_dist[i]})
        r = tube_length_ratios(rng, trials)
        bad = np.flatnonzero((r < constants.TUBE_RATIO_LOW) | (r > constants.TUBE_RATIO_HIGH))
        res.checks["tube-length-window"] = len(bad)
        for i in bad[:5]:
            res.witnesses.append({"check": "tube-length-window", "ratio": r[i]})
    ball = Horoball(complex("inf"), 1.0)
    for _ in range(min(trials, 1000)):
        p, q = sorted(rng.normal(0, 2, 2))
        c = geodesic_thinpart_crossing(Geodesic(complex(p), complex(q)), ball)
        if c.hit:
            err = max(abs(c.entry.t - 1), abs(c.exit.t - 1))
            res.record("crossing-on-surface", err < 1e-9, {"p": p, "q": q, "error": err})
    return res


def suite_floyd(seed: int, trials: int) -> SuiteResult:
    rng = np.random.default_rng(seed)
    res = SuiteResult("floyd", trials)
    if not trials:
        return res
    rep = symmetric_schottky(3.0)
    fit = floyd_fit(rep, 8)
    words = [sample_word(rng, rep.alphabet, int(rng.integers(1, 13))) for _ in range(trials)]
    d = origin_distances(evaluate_many(rep, words))
    L = np.array([len(w) for w in words])
    bad = np.flatnonzero((d > fit.a * L * 1.1) | (d < fit.b * L * 0.9))
    res.checks["schottky-window"] = len(bad)
    for i in bad[:5]:
        res.witnesses.append({"check": "schottky-window", "word": words[i], "distance": d[i]})
    torus = punctured_torus(3, 3)
    j = np.arange(10, 10 + min(trials, 991))
    resid = np.array([_parabolic_distance(torus, int(k)) for k in j]) - 2 * np.log(j)
    spread = float(resid.max() - resid.min())
    res.record("parabolic-log-growth", spread < 3, {"spread": spread})
    return res


def _parabolic_distance(rep, j: int) -> float:
    return origin_distance(rep.evaluate("abAB") ** j)


SUITES = {"moebius": suite_moebius, "hypgeo": suite_hypgeo, "floyd": suite_floyd}


def run_suites(names: list[str], seed: int, trials: int) -> list[SuiteResult]:
    if trials == 0:
        log.warning("trials = 0: suites pass vacuously")
    return [SUITES[n](seed, trials) for n in names]
