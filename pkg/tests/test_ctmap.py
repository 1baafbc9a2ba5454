import json
import math

import numpy as np
import pytest

from ctlab import constants
from ctlab.ctmap import (
    CTError,
    DiagnosticsTable,
    ball_distances,
    classify_path,
    convergence_report,
    ct_eval,
    ct_eval_word,
    ep_diagnostic,
    equivariance_check,
    evaluate_many,
    exclusion_profile,
    fixed_point_path,
    floyd_fit,
    geometric_limit_match,
    growth_flag,
    origin_distances,
    penetration_witness,
    thin_part_system,
    uep_table,
    uepp_table,
)
from ctlab.families import (
    constant_sequence,
    cyclic_limits,
    cyclic_sequence,
    geometric_schedule,
    punctured_torus,
    strong_sequence,
    symmetric_schottky,
)
from ctlab.hypgeo import GeometryError
from ctlab.moebius import chordal_dist, fixed_points, origin_distance
from ctlab.words import BoundaryWordPath, ParabolicBlock, power_path

WORDS = ["a", "b", "A", "aB", "ab", "abb", "aabAB"]


@pytest.fixture(scope="module")
def deformed():
    return punctured_torus(3, 3 + 0.1j)


@pytest.fixture(scope="module")
def strong16():
    return strong_sequence(symmetric_schottky(3.0), symmetric_schottky(4.0), 16, geometric_schedule(2 ** -0.25))


# -- ct_eval -----------------------------------------------------------------


@pytest.mark.parametrize("w", WORDS)
def test_identity_ct_map(torus, w):
    xi = fixed_points(torus.evaluate(w)).attracting
    assert chordal_dist(ct_eval_word(torus, torus, w).eta, xi) < 1e-9


@pytest.mark.parametrize("w", WORDS)
def test_fixed_point_compatibility(torus, deformed, w):
    res = ct_eval_word(torus, deformed, w)
    assert res.residual < constants.TOL_CT
    assert chordal_dist(res.eta, fixed_points(deformed.evaluate(w)).attracting) < 1e-6


def test_parabolic_branch(torus, deformed):
    res = ct_eval_word(torus, deformed, "abAB")
    assert res.branch == "parabolic"
    target = fixed_points(deformed.evaluate("abAB"), parabolic=True).attracting
    assert chordal_dist(res.eta, target) < 1e-9


def test_conjugated_parabolic_branch(torus, deformed):
    res = ct_eval_word(torus, deformed, "babABB")
    target = fixed_points(deformed.evaluate("babABB"), parabolic=True).attracting
    assert res.branch == "parabolic" and chordal_dist(res.eta, target) < 1e-9


def test_nonconvergence_reports_spread(torus, deformed):
    xi = fixed_points(torus.evaluate("ab")).attracting
    path = BoundaryWordPath(power_path("ab", 4), xi, 4)
    with pytest.raises(CTError) as info:
        ct_eval(torus, deformed, xi, path)
    assert info.value.spread > constants.TOL_CT


def test_path_must_extend_by_letters(torus):
    path = BoundaryWordPath(["a", "ab", "b"], 0j, 3)
    with pytest.raises(CTError, match="extend"):
        ct_eval(torus, torus, 0j, path, tol=0.0)


def test_fixed_point_path_prefixes():
    path = fixed_point_path("bab" + "A" + "B", 6)
    assert path.words[:3] == ["b", "ba", "bab"]
    assert all(len(v) == len(u) + 1 and v.startswith(u) for u, v in zip(path.words, path.words[1:]))


def test_equivariance(torus, deformed):
    rng = np.random.default_rng(0)
    gs = ["".join(rng.choice(list("ab"), 3)) for _ in range(20)]
    ws = [WORDS[i % len(WORDS)] for i in range(20)]
    assert equivariance_check(torus, torus, gs, ws) < 1e-9
    assert equivariance_check(torus, deformed, gs, ws) < 1e-5
    assert equivariance_check(torus, deformed, [""], ["ab"]) == 0


# -- Floyd -------------------------------------------------------------------


def test_floyd_schottky_window(schottky):
    gen_min = min(origin_distance(g) for g in schottky.generators)
    fits = [floyd_fit(schottky, N) for N in (6, 8, 10)]
    for fit in fits:
        assert fit.b >= 0.5 * gen_min
    assert max(f.b for f in fits) / min(f.b for f in fits) < 1.1
    assert max(f.a for f in fits) / min(f.a for f in fits) < 1.1


def test_floyd_depth_one(torus, schottky):
    for rep in (torus, schottky):
        assert abs(floyd_fit(rep, 1).a - max(origin_distance(g) for g in rep.generators)) < 1e-12


def test_floyd_fit_holds_on_its_ball(torus):
    fit = floyd_fit(torus, 8)
    per = ball_distances(torus, 8)
    L = np.concatenate([np.full(len(d), j) for j, d in enumerate(per)][1:])
    d = np.concatenate(per[1:])
    assert fit.parabolic and fit.holds(L, d)


def test_floyd_parabolic_growth(torus):
    j = np.arange(10, 200)
    d = origin_distances(evaluate_many(torus, ["abAB" * int(k) for k in j]))
    resid = d - 2 * np.log(j)
    assert np.ptp(resid) < 3


def test_floyd_mistag(torus):
    with pytest.raises(ValueError, match="mistagged"):
        floyd_fit(torus, 12, parabolic=False)


# -- tables ------------------------------------------------------------------


def test_table_serialization():
    t = DiagnosticsTable("N", [0, 1], {"x": [1.5, math.nan], "k": [1, 2]}, {"z": 1 + 2j, "inf": math.inf})
    assert t.to_csv() == "N,x,k\n0,1.5,1\n1,,2\n"
    payload = json.loads(t.to_json())
    assert payload["columns"]["x"] == [1.5, None]
    assert payload["metadata"] == {"inf": None, "z": [1.0, 2.0]}


def test_growth_flag():
    assert growth_flag([1, 2, 3, 4, 5]) == "consistent"
    assert growth_flag([1, 1, 1, 1]) == "violating"
    assert growth_flag([1, 3, 2, 5]) == "violating"


def test_exclusion_profile(schottky):
    a = exclusion_profile(schottky, 8, seed=3)
    f = a.column("f_N")
    assert all(y >= x for x, y in zip(f, f[1:]))
    assert f[-1] > f[0] + 10
    assert a.to_csv() == exclusion_profile(schottky, 8, seed=3).to_csv()
    assert min(a.column("samples")) > 0


def test_uep_constant_schottky_linear(schottky):
    u = uep_table(constant_sequence(schottky, 2), 10, 11).column("u_N")
    steps = np.diff(u)
    assert np.all(steps > 2) and np.all(steps < 4)


def test_uep_insufficient_depth(schottky):
    with pytest.raises(ValueError, match="insufficient depth"):
        uep_table(constant_sequence(schottky, 2), 10, 10)


def test_uep_cyclic_bounded():
    t = uep_table(cyclic_sequence(12), 10, 11)
    assert t.metadata["flag"] == "violating"
    assert max(t.column("u_N")) < 1.0


def test_uepp_below_uep(strong16):
    u = uep_table(strong16, 6, 7).column("u_N")
    t = uepp_table(strong16, 6, samples=8)
    v = t.column("v_N")
    assert all(x <= y + 1.0 for x, y in zip(v, u))
    assert t.to_csv() == uepp_table(strong16, 6, samples=8).to_csv()
    assert t.metadata["flag"] == "consistent"


# -- EP ----------------------------------------------------------------------


def test_classify_path_cases():
    assert classify_path(power_path("ab", 12), ["abAB"]) == "bounded-blocks"
    assert classify_path(power_path("abAB", 16), ["abAB"]) == "infinite-block"
    w = "b" + "abAB" * 2 + "b" + "abAB" * 3 + "b" + "abAB" * 6 + "b"
    assert classify_path([w[:r] for r in range(1, len(w) + 1)], ["abAB"]) == "growing-blocks"
    with pytest.raises(ValueError):
        classify_path([], ["abAB"])


def test_ep_strong_sequence(strong16):
    path = fixed_point_path("a", 12)
    t = ep_diagnostic(strong16, path, 10)
    assert t.metadata["case"] == "bounded-blocks"
    assert t.column("M_xi") == [1] * 11
    f = t.column("f_xi")
    assert all(y > x for x, y in zip(f, f[1:]))
    with pytest.raises(ValueError, match="too short"):
        ep_diagnostic(strong16, fixed_point_path("a", 5), 10)


def test_ep_parabolic_point_skipped(torus):
    t = ep_diagnostic(constant_sequence(torus, 3), fixed_point_path("abAB", 16), 8)
    assert t.metadata["case"] == "infinite-block" and t.index == []


# -- convergence -------------------------------------------------------------


def test_convergence_constant(torus):
    t = convergence_report(constant_sequence(torus, 6), ["a", "b", "ab", "aB"], window=5)
    assert max(t.column("sup_distance")) < constants.TOL_CT
    assert t.metadata["verdict"] == "uniform-consistent"


def test_convergence_strong(strong16):
    t = convergence_report(strong16, ["a", "b", "A", "ab", "aB", "abb"])
    sup = t.column("sup_distance")
    assert t.metadata["verdict"] == "uniform-consistent"
    assert sup[15] < sup[7] / 1.5


def test_convergence_cyclic_pointwise():
    t = convergence_report(cyclic_sequence(16), ["a", "A"])
    col = np.array(t.metadata["pointwise"])
    assert np.all(np.diff(col[-5:], axis=0) < 0)
    assert col[-1].max() < 0.05


def test_convergence_parallel_matches(strong16):
    grid = ["a", "b", "ab"]
    assert convergence_report(strong16, grid, jobs=2).to_json() == convergence_report(strong16, grid).to_json()


# -- geometric limits --------------------------------------------------------


def test_limit_match_generators(strong16):
    # rho_16 is still about 1.2 away from the limit at the generator orbit points
    m = geometric_limit_match(strong16, 16, strong16.limit.generators, 2.0, 3)
    assert [x.word for x in m] == ["a", "b"]
    assert all(not x.violations for x in m)


def test_limit_match_coarse_violations(strong16):
    m = geometric_limit_match(strong16, 16, strong16.limit.generators, 10.0, 3)
    assert all(x.violations for x in m)


def test_limit_match_cyclic():
    seq = cyclic_sequence(20)
    P, Q = cyclic_limits()
    m = geometric_limit_match(seq, 20, [Q, P], 0.5, 500)
    assert m[0].word == "a" * 400
    assert m[1].word == "a"


# -- thin parts --------------------------------------------------------------


def test_penetration_witness(torus):
    seq = constant_sequence(torus, 2)
    assert not penetration_witness(seq, ParabolicBlock("abAB", 0), 1)
    assert penetration_witness(seq, ParabolicBlock("abAB", 100), 1)
    assert penetration_witness(seq, ParabolicBlock("abAB", 1000), 1)


def test_penetration_needs_thin_part(torus):
    seq = constant_sequence(torus, 2)
    empty = thin_part_system(torus, [])
    with pytest.raises(GeometryError, match="no thin part"):
        penetration_witness(seq, ParabolicBlock("abAB", 5), 1, thin_parts=empty)


def test_thin_part_system(torus):
    system = thin_part_system(torus, ["abAB", "ab"])
    assert system.for_word("abAB").region.__class__.__name__ == "Horoball"
