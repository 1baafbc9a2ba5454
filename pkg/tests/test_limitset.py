import numpy as np
import pytest

from ctlab.families import Representation, punctured_torus, symmetric_schottky
from ctlab.limitset import (
    ImageSpec,
    LimitSample,
    LimitSetError,
    dedup,
    hausdorff_chordal,
    ppm_bytes,
    render,
    sample_fixed_points,
    sample_orbit,
)
from ctlab.moebius import INF, MoebiusMap, act_boundary, to_sphere_arrays

DIAG = Representation((MoebiusMap.from_entries(2, 0, 0, 0.5),))


@pytest.fixture(scope="module")
def torus_samples():
    rep = punctured_torus(3, 3)
    return {N: (sample_fixed_points(rep, N), sample_orbit(rep, N)) for N in (4, 6, 8, 10)}


def pts(*zs):
    return np.array(zs, dtype=complex)


def test_cyclic_fixed_points():
    s = sample_fixed_points(DIAG, 4)
    assert len(s) == 2
    assert hausdorff_chordal(s, pts(0, INF)) == 0


def test_fuchsian_limit_set_is_real(torus_samples):
    f, o = torus_samples[8]
    assert np.all(np.abs(f.points[np.isfinite(f.points)].imag) < 1e-8)
    assert np.all(np.abs(o.points[np.isfinite(o.points)].imag) < 1e-8)


def test_schottky_points_in_disks(schottky):
    s = sample_fixed_points(schottky, 6)
    z = s.points
    near = np.zeros(len(z), dtype=bool)
    for c in (3, -3, 3j, -3j):
        near |= np.abs(z - c) <= 1 + 1e-9
    assert near.all()


def test_cyclic_orbit_clusters():
    s = sample_orbit(DIAG, 10)
    assert hausdorff_chordal(s, pts(0, INF)) < 1e-5


def test_identity_representation_rejected():
    with pytest.raises(LimitSetError, match="not faithful"):
        sample_orbit(Representation((MoebiusMap.identity(), MoebiusMap.identity())), 3)


def test_hausdorff_examples():
    s = sample_fixed_points(symmetric_schottky(3.0), 4)
    assert hausdorff_chordal(s, s) == 0
    assert abs(hausdorff_chordal(pts(0), pts(INF)) - 2) < 1e-12
    assert abs(hausdorff_chordal(pts(0, INF), pts(0)) - 2) < 1e-12
    with pytest.raises(LimitSetError):
        hausdorff_chordal(pts(), pts(0))


def test_hausdorff_symmetric():
    rng = np.random.default_rng(0)
    a = rng.normal(size=50) + 1j * rng.normal(size=50)
    b = rng.normal(size=70) + 1j * rng.normal(size=70)
    assert hausdorff_chordal(a, b) == hausdorff_chordal(b, a)


def test_hausdorff_matches_brute_force():
    rng = np.random.default_rng(1)
    a = rng.normal(size=300) + 1j * rng.normal(size=300)
    b = rng.normal(size=200) + 1j * rng.normal(size=200)
    d = np.linalg.norm(to_sphere_arrays(a)[:, None] - to_sphere_arrays(b)[None], axis=-1)
    assert abs(hausdorff_chordal(a, b) - max(d.min(1).max(), d.min(0).max())) < 1e-15


def test_dedup_keeps_first():
    xyz = to_sphere_arrays(pts(0, 1e-9, 1, 1 + 1e-9))
    assert list(dedup(xyz, 1e-6)) == [0, 2]


def test_fixed_point_monotone(schottky):
    small, big = sample_fixed_points(schottky, 4), sample_fixed_points(schottky, 5)
    # every depth-4 point appears at depth 5
    d = np.linalg.norm(small.xyz[:, None] - big.xyz[None], axis=-1).min(1)
    assert d.max() < 1e-6


def test_fixed_points_equivariant(schottky):
    small, big = sample_fixed_points(schottky, 4), sample_fixed_points(schottky, 6)
    for g in schottky.generators:
        moved = np.array([act_boundary(g, z) for z in small.points])
        d = np.linalg.norm(to_sphere_arrays(moved)[:, None] - big.xyz[None], axis=-1).min(1)
        assert d.max() < 1e-6


def test_deterministic(torus):
    a, b = sample_fixed_points(torus, 6), sample_fixed_points(torus, 6)
    assert a.to_csv() == b.to_csv()


def test_orbit_against_fixed_points_decreasing(torus_samples):
    # the gap closes slowly for this cusped group: 0.44, 0.37, 0.28 at N = 6, 8, 10
    h = [hausdorff_chordal(*torus_samples[N]) for N in (4, 6, 8, 10)]
    assert all(b < a for a, b in zip(h, h[1:]))


def test_csv_columns(torus):
    text = sample_fixed_points(torus, 3).to_csv().splitlines()
    assert text[0] == "re,im,isInf,depth,word"
    re, im, inf, depth, word = text[1].split(",")
    float(re), float(im)
    assert inf in ("0", "1") and word


# -- rendering ---------------------------------------------------------------


def lit(img):
    return np.argwhere(img.any(axis=2))


def test_render_two_points():
    s = LimitSample(pts(0.5, -0.5 + 1j), ["a", "b"], np.array([1, 1]), 1, "fixed-point")
    img = render(s, ImageSpec(64, 64))
    assert len(lit(img)) == 2


def test_render_fuchsian_hugs_real_axis(torus_samples):
    spec = ImageSpec(256, 256)
    img = render(torus_samples[8][0], spec)
    rows = lit(img)[:, 0]
    assert len(rows) > 0
    axis_row = spec.height / 2
    assert np.all(np.abs(rows + 0.5 - axis_row) <= 1)


def test_render_sphere_projection(schottky):
    img = render(sample_fixed_points(schottky, 5), ImageSpec(128, 128, "sphere"))
    assert len(lit(img)) > 10


def test_render_empty_rejected():
    empty = LimitSample(pts(), [], np.array([]), 1, "fixed-point")
    with pytest.raises(LimitSetError):
        render(empty)


def test_render_deterministic(schottky):
    s = sample_fixed_points(schottky, 5)
    assert ppm_bytes(render(s)) == ppm_bytes(render(s))
    assert ppm_bytes(render(s)).startswith(b"P6\n512 512\n255\n")
