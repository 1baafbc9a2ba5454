"""PSL(2,C) arithmetic, the action on the Riemann sphere and on upper half-space.

Boundary points are plain Python complex numbers; the point at infinity is
any complex value with an infinite component (``INF`` is the canonical one).
Points of H^3 are :class:`H3Point` in upper half-space coordinates.  The
ball-model centre O corresponds to ``H3Point(0, 1)``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

INF = complex(math.inf, 0.0)

EPS_NORM = 1e-12
EPS_PAR = 1e-9
EPS_EQ = 1e-9
# entries beyond this mean the double-precision product is badly conditioned
CONDITION_LIMIT = 1e12


class MoebiusError(ValueError):
    pass


def is_inf(z) -> bool:
    return cmath.isinf(z)


@dataclass(frozen=True)
class MoebiusMap:
    """Element of PSL(2,C) stored with determinant one."""

    a: complex
    b: complex
    c: complex
    d: complex

    @classmethod
    def from_entries(cls, a, b, c, d) -> "MoebiusMap":
        a, b, c, d = complex(a), complex(b), complex(c), complex(d)
        det = a * d - b * c
        # rounding in a*d - b*c is of order eps * scale^2
        scale2 = max(1.0, abs(a) ** 2, abs(b) ** 2, abs(c) ** 2, abs(d) ** 2)
        if abs(det) <= 1e-14 * scale2:
            if scale2 > 1e8:
                # determinant lost to cancellation; the entries are still good
                return cls(a, b, c, d)
            raise MoebiusError("singular matrix")
        if abs(det - 1) > EPS_NORM * scale2:
            s = cmath.sqrt(det)
            a, b, c, d = a / s, b / s, c / s, d / s
        return cls(a, b, c, d)

    @classmethod
    def identity(cls) -> "MoebiusMap":
        return cls(1 + 0j, 0j, 0j, 1 + 0j)

    @classmethod
    def from_array(cls, m) -> "MoebiusMap":
        m = np.asarray(m, dtype=complex)
        return cls.from_entries(m[0, 0], m[0, 1], m[1, 0], m[1, 1])

    def to_array(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]], dtype=complex)

    @property
    def trace(self) -> complex:
        return self.a + self.d

    @property
    def det(self) -> complex:
        return self.a * self.d - self.b * self.c

    def __matmul__(self, other: "MoebiusMap") -> "MoebiusMap":
        return compose(self, other)

    def inverse(self) -> "MoebiusMap":
        return MoebiusMap(self.d, -self.b, -self.c, self.a)

    def __pow__(self, k: int) -> "MoebiusMap":
        if k < 0:
            return self.inverse() ** (-k)
        result = MoebiusMap.identity()
        base = self
        while k:
            if k & 1:
                result = compose(result, base)
            base = compose(base, base)
            k >>= 1
        return result

    def max_entry(self) -> float:
        return max(abs(self.a), abs(self.b), abs(self.c), abs(self.d))

    @property
    def ill_conditioned(self) -> bool:
        return self.max_entry() > CONDITION_LIMIT

    def __call__(self, z):
        return act_boundary(self, z)

    def is_close(self, other: "MoebiusMap", tol: float = EPS_EQ) -> bool:
        return projective_distance(self, other) < tol


def compose(m: MoebiusMap, n: MoebiusMap) -> MoebiusMap:
    return MoebiusMap.from_entries(
        m.a * n.a + m.b * n.c,
        m.a * n.b + m.b * n.d,
        m.c * n.a + m.d * n.c,
        m.c * n.b + m.d * n.d,
    )


def conjugate(m: MoebiusMap, by: MoebiusMap) -> MoebiusMap:
    """Return ``by * m * by^-1``."""
    return compose(compose(by, m), by.inverse())


def commutator(m: MoebiusMap, n: MoebiusMap) -> MoebiusMap:
    return compose(compose(m, n), compose(m.inverse(), n.inverse()))


def projective_distance(m: MoebiusMap, n: MoebiusMap) -> float:
    """Entrywise max-distance between M and +-N."""
    x, y = m.to_array(), n.to_array()
    return float(min(np.abs(x - y).max(), np.abs(x + y).max()))


def is_identity(m: MoebiusMap, tol: float = EPS_EQ) -> bool:
    return projective_distance(m, MoebiusMap.identity()) < tol


class Kind(str, Enum):
    IDENTITY = "identity"
    PARABOLIC = "parabolic"
    ELLIPTIC = "elliptic"
    LOXODROMIC = "loxodromic"


@dataclass(frozen=True)
class MapClass:
    kind: Kind
    multiplier: complex | None = None

    @property
    def translation_length(self) -> float | None:
        if self.multiplier is None:
            return None
        return math.log(abs(self.multiplier))

    @property
    def rotation(self) -> float | None:
        if self.multiplier is None:
            return None
        return cmath.phase(self.multiplier)


def _eigenvalues(m: MoebiusMap) -> tuple[complex, complex]:
    """Eigenvalues ordered by decreasing modulus."""
    tr = m.trace
    disc = cmath.sqrt(tr * tr - 4)
    e1, e2 = (tr + disc) / 2, (tr - disc) / 2
    if abs(e2) > abs(e1):
        e1, e2 = e2, e1
    return e1, e2


def classify(m: MoebiusMap, eps_par: float = EPS_PAR, parabolic: bool = False) -> MapClass:
    """Classify by the squared trace.

    ``parabolic=True`` marks an element that is parabolic by construction and
    skips the numerical threshold.
    """
    if is_identity(m):
        return MapClass(Kind.IDENTITY)
    tr2 = m.trace**2
    if parabolic or abs(tr2 - 4) < eps_par:
        return MapClass(Kind.PARABOLIC)
    if abs(tr2.imag) < eps_par and 0 <= tr2.real < 4:
        return MapClass(Kind.ELLIPTIC)
    e1, e2 = _eigenvalues(m)
    return MapClass(Kind.LOXODROMIC, e1 / e2)


@dataclass(frozen=True)
class FixedPoints:
    attracting: complex
    repelling: complex | None
    labelled: bool = True


def fixed_points(m: MoebiusMap, eps_par: float = EPS_PAR, parabolic: bool = False) -> FixedPoints:
    """Fixed points on the sphere; the attracting one is picked by eigenvalue modulus.

    For an elliptic map both points are returned with ``labelled=False``.
    """
    cls = classify(m, eps_par, parabolic)
    if cls.kind is Kind.IDENTITY:
        raise MoebiusError("no isolated fixed points")
    a, b, c, d = m.a, m.b, m.c, m.d
    if cls.kind is Kind.PARABOLIC:
        if abs(c) <= EPS_NORM * m.max_entry():
            return FixedPoints(INF, None)
        return FixedPoints((a - d) / (2 * c), None)
    if abs(c) <= EPS_NORM * m.max_entry():
        # upper triangular: z -> (a z + b)/d fixes infinity and b/(d - a)
        finite = b / (d - a)
        if abs(a) > abs(d):
            return FixedPoints(INF, finite, cls.kind is Kind.LOXODROMIC)
        return FixedPoints(finite, INF, cls.kind is Kind.LOXODROMIC)
    disc = cmath.sqrt((a - d) ** 2 + 4 * b * c)
    z1 = ((a - d) + disc) / (2 * c)
    z2 = ((a - d) - disc) / (2 * c)
    # eigenvector (z, 1) has eigenvalue c z + d
    if abs(c * z1 + d) >= abs(c * z2 + d):
        return FixedPoints(z1, z2, cls.kind is Kind.LOXODROMIC)
    return FixedPoints(z2, z1, cls.kind is Kind.LOXODROMIC)


def act_boundary(m: MoebiusMap, z: complex) -> complex:
    a, b, c, d = m.a, m.b, m.c, m.d
    if is_inf(z):
        return INF if c == 0 else a / c
    num = a * z + b
    den = c * z + d
    if den == 0:
        return INF
    return num / den


def isometric_circle(m: MoebiusMap) -> tuple[complex, float]:
    if abs(m.c) <= EPS_NORM * m.max_entry():
        raise MoebiusError("fixes infinity; no isometric circle")
    return -m.d / m.c, 1.0 / abs(m.c)


# ---------------------------------------------------------------------------
# upper half-space


@dataclass(frozen=True)
class H3Point:
    z: complex
    t: float

    def __post_init__(self):
        if not self.t > 0:
            raise ValueError(f"height must be positive, got {self.t}")


ORIGIN = H3Point(0j, 1.0)


def act_h3(m: MoebiusMap, p: H3Point) -> H3Point:
    z, t = act_h3_arrays(m.a, m.b, m.c, m.d, p.z, p.t)
    return H3Point(complex(z), float(t))


def act_h3_arrays(a, b, c, d, z, t):
    """Poincare extension, vectorized over numpy arrays of entries and/or points."""
    w = c * z + d
    tt = t * t
    denom = np.abs(w) ** 2 + np.abs(c) ** 2 * tt
    zn = ((a * z + b) * np.conj(w) + a * np.conj(c) * tt) / denom
    return zn, t / denom


def orbit_point(m: MoebiusMap) -> H3Point:
    """Image of O = (0, 1)."""
    denom = abs(m.c) ** 2 + abs(m.d) ** 2
    return H3Point((m.b * m.d.conjugate() + m.a * m.c.conjugate()) / denom, 1.0 / denom)


def dist_h3_arrays(z1, t1, z2, t2):
    num = np.sqrt(np.abs(z1 - z2) ** 2 + (t1 - t2) ** 2)
    return 2.0 * np.arcsinh(num / (2.0 * np.sqrt(t1 * t2)))


def dist_h3(p: H3Point, q: H3Point) -> float:
    return float(dist_h3_arrays(p.z, p.t, q.z, q.t))


def origin_distance_arrays(a, b, c, d):
    """d(O, M.O) from matrix entries: 2 cosh d = |a|^2+|b|^2+|c|^2+|d|^2."""
    s = np.abs(a) ** 2 + np.abs(b) ** 2 + np.abs(c) ** 2 + np.abs(d) ** 2
    return np.arccosh(np.maximum(s / 2.0, 1.0))


def origin_distance(m: MoebiusMap) -> float:
    return float(origin_distance_arrays(m.a, m.b, m.c, m.d))


# ---------------------------------------------------------------------------
# sphere at infinity and ball model


def to_sphere_arrays(z):
    """Stereographic image on the unit sphere; infinity goes to the north pole."""
    z = np.asarray(z, dtype=complex)
    inf = np.isinf(z)
    zz = np.where(inf, 0, z)
    r2 = np.abs(zz) ** 2
    xyz = np.stack([2 * zz.real, 2 * zz.imag, r2 - 1], axis=-1) / (r2 + 1)[..., None]
    xyz[inf] = (0.0, 0.0, 1.0)
    return xyz


def from_sphere_arrays(xyz):
    xyz = np.asarray(xyz, dtype=float)
    x, y, w = xyz[..., 0], xyz[..., 1], xyz[..., 2]
    den = 1.0 - w
    with np.errstate(divide="ignore", invalid="ignore"):
        z = (x + 1j * y) / den
    return np.where(den <= 1e-300, INF, z)


def chordal_dist(p: complex, q: complex) -> float:
    pi, qi = is_inf(p), is_inf(q)
    if pi and qi:
        return 0.0
    if pi:
        return 2.0 / math.sqrt(1 + abs(q) ** 2)
    if qi:
        return 2.0 / math.sqrt(1 + abs(p) ** 2)
    return 2 * abs(p - q) / math.sqrt((1 + abs(p) ** 2) * (1 + abs(q) ** 2))


def chordal_dist_arrays(p, q):
    return np.linalg.norm(to_sphere_arrays(p) - to_sphere_arrays(q), axis=-1)


def to_ball_arrays(z, t):
    """Upper half-space (z, t) to the unit ball; (0, 1) goes to the centre."""
    r2 = np.abs(z) ** 2
    den = r2 + (t + 1) ** 2
    return np.stack([2 * np.real(z), 2 * np.imag(z), r2 + t * t - 1], axis=-1) / np.asarray(den)[..., None]


def from_ball_arrays(q):
    q = np.asarray(q, dtype=float)
    u, v, w = q[..., 0], q[..., 1], q[..., 2]
    den = u * u + v * v + (1 - w) ** 2
    return 2 * (u + 1j * v) / den, (1 - (u * u + v * v + w * w)) / den


def to_ball(p: H3Point) -> np.ndarray:
    return to_ball_arrays(p.z, p.t)


def from_ball(q) -> H3Point:
    z, t = from_ball_arrays(q)
    return H3Point(complex(z), float(t))


def boundary_to_ball(z: complex) -> np.ndarray:
    return to_sphere_arrays(z)


def shadow(p: H3Point) -> complex:
    """Radial projection from O of a point of H^3 to the sphere at infinity."""
    q = to_ball(p)
    return complex(from_sphere_arrays(q / np.linalg.norm(q)))


def shadow_arrays(z, t):
    q = to_ball_arrays(z, t)
    return from_sphere_arrays(q / np.linalg.norm(q, axis=-1, keepdims=True))


def mobius_to_vertical(p: complex, q: complex) -> MoebiusMap:
    """A map sending p to 0 and q to infinity."""
    if is_inf(q):
        return MoebiusMap.from_entries(1, -p, 0, 1)
    if is_inf(p):
        return MoebiusMap.from_entries(0, 1, 1, -q)
    return MoebiusMap.from_entries(1, -p, 1, -q)


def random_su2(rng: np.random.Generator) -> MoebiusMap:
    """Uniformly random rotation about O (Haar measure on SU(2))."""
    x = rng.standard_normal(4)
    x /= np.linalg.norm(x)
    a = complex(x[0], x[1])
    b = complex(x[2], x[3])
    return MoebiusMap.from_entries(a, b, -b.conjugate(), a.conjugate())


def random_moebius(rng: np.random.Generator, scale: float = 1.0) -> MoebiusMap:
    while True:
        e = rng.standard_normal(8) * scale
        m = np.array([[e[0] + 1j * e[1], e[2] + 1j * e[3]], [e[4] + 1j * e[5], e[6] + 1j * e[7]]])
        if abs(np.linalg.det(m)) > 1e-3:
            return MoebiusMap.from_array(m)


def loxodromic_with_displacement(R: float, rng: np.random.Generator) -> MoebiusMap:
    """Random loxodromic element moving O a hyperbolic distance exactly R."""
    k1, k2 = random_su2(rng), random_su2(rng)
    s = math.exp(R / 2)
    while True:
        m = compose(compose(k1, MoebiusMap(s + 0j, 0j, 0j, 1 / s + 0j)), k2)
        if classify(m).kind is Kind.LOXODROMIC:
            return m
        k2 = random_su2(rng)
