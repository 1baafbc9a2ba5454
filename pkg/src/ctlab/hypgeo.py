"""Geodesics, horoballs and equidistant tubes in upper half-space.

Most computations move the configuration by an isometry into a normal form
(geodesic = vertical line over 0, horoball based at infinity) where the
geometry is explicit, then move the answer back.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import constants
from .moebius import (
    H3Point,
    MoebiusMap,
    act_boundary,
    act_h3,
    act_h3_arrays,
    dist_h3,
    dist_h3_arrays,
    is_inf,
    mobius_to_vertical,
)

TANGENCY_TOL = 1e-9
SURFACE_TOL = 1e-9


class GeometryError(ValueError):
    pass


class CoplanarMidpointError(GeometryError):
    """The surface path between the two tube points enters the ball around O."""


@dataclass(frozen=True)
class Geodesic:
    p: complex
    q: complex

    def __post_init__(self):
        same = (is_inf(self.p) and is_inf(self.q)) or (
            not is_inf(self.p) and not is_inf(self.q) and abs(self.p - self.q) < 1e-15
        )
        if same:
            raise GeometryError("geodesic endpoints coincide")

    def normalizer(self) -> MoebiusMap:
        """Isometry taking this geodesic to the vertical line over 0 (p -> 0)."""
        return mobius_to_vertical(self.p, self.q)

    def image(self, m: MoebiusMap) -> "Geodesic":
        return Geodesic(act_boundary(m, self.p), act_boundary(m, self.q))


@dataclass(frozen=True)
class Horoball:
    """Base at infinity: region t >= size.  Finite base: Euclidean ball of diameter size."""

    base: complex
    size: float

    def __post_init__(self):
        if not self.size > 0:
            raise GeometryError("horoball size must be positive")

    def normalizer(self) -> tuple[MoebiusMap, float]:
        """Isometry sending the base to infinity, and the height of the image."""
        if is_inf(self.base):
            return MoebiusMap.identity(), self.size
        return MoebiusMap.from_entries(0, -1, 1, -self.base), 1.0 / self.size

    def signed_offset(self, p: H3Point) -> float:
        """Signed hyperbolic distance from the horosphere, positive inside."""
        m, h = self.normalizer()
        return math.log(act_h3(m, p).t / h)

    def contains(self, p: H3Point) -> bool:
        return self.signed_offset(p) > 0

    def image(self, m: MoebiusMap) -> "Horoball":
        # a point of the horosphere and the new base determine the image
        n, h = self.normalizer()
        top = act_h3(n.inverse(), H3Point(0j, h))
        top = act_h3(m, top)
        base = act_boundary(m, self.base)
        if is_inf(base):
            return Horoball(base, top.t)
        # ball tangent at base through top: radius r with |z-base|^2 + (t-r)^2 = r^2
        r = (abs(top.z - base) ** 2 + top.t**2) / (2 * top.t)
        return Horoball(base, 2 * r)


@dataclass(frozen=True)
class Tube:
    axis: Geodesic
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise GeometryError("tube radius must be positive")

    def distance_to_axis(self, p: H3Point) -> float:
        return point_to_geodesic(p, self.axis)[0]

    def contains(self, p: H3Point) -> bool:
        return self.distance_to_axis(p) < self.radius


@dataclass
class ThinPart:
    region: Horoball | Tube
    word: str
    epsilon: float


@dataclass
class ThinPartSystem:
    parts: list[ThinPart] = field(default_factory=list)
    epsilon: float = constants.MARGULIS_EPS

    def for_word(self, word: str) -> ThinPart:
        for part in self.parts:
            if part.word == word:
                return part
        raise GeometryError(f"no thin part constructed for {word!r}")

    def min_separation(self) -> float | None:
        """Smallest distance between two horoball parts (tubes are not compared)."""
        balls = [p.region for p in self.parts if isinstance(p.region, Horoball)]
        best = None
        for i in range(len(balls)):
            for j in range(i + 1, len(balls)):
                d = horoball_distance(balls[i], balls[j])
                best = d if best is None else min(best, d)
        return best


def horoball_distance(h1: Horoball, h2: Horoball) -> float:
    """Hyperbolic distance between two horoballs (0 if they meet)."""
    m, h = h1.normalizer()
    other = h2.image(m)
    if is_inf(other.base):
        return 0.0
    return max(0.0, math.log(h / other.size))


# ---------------------------------------------------------------------------


def geodesic_through(p1: H3Point, p2: H3Point) -> Geodesic:
    """The complete geodesic through two points, oriented from p1 towards p2."""
    dz = p2.z - p1.z
    D = abs(dz)
    if D < 1e-14 * max(1.0, abs(p1.z)):
        if p1.t > p2.t:
            return Geodesic(complex(math.inf, 0), p1.z)
        return Geodesic(p1.z, complex(math.inf, 0))
    u = dz / D
    c = (D * D + p2.t**2 - p1.t**2) / (2 * D)
    r = math.hypot(c, p1.t)
    m = p1.z + c * u
    return Geodesic(m - r * u, m + r * u)


def point_to_geodesic(p: H3Point, g: Geodesic) -> tuple[float, H3Point]:
    n = g.normalizer()
    q = act_h3(n, p)
    rho = abs(q.z)
    dist = math.asinh(rho / q.t)
    foot = H3Point(0j, math.hypot(rho, q.t))
    return dist, act_h3(n.inverse(), foot)


def segment_points(p1: H3Point, p2: H3Point, num: int) -> list[H3Point]:
    """Points along the geodesic segment, equally spaced in arclength."""
    g = geodesic_through(p1, p2)
    n = g.normalizer()
    inv = n.inverse()
    s1, s2 = act_h3(n, p1).t, act_h3(n, p2).t
    heights = np.exp(np.linspace(math.log(s1), math.log(s2), num))
    zs, ts = act_h3_arrays(inv.a, inv.b, inv.c, inv.d, np.zeros(num, complex), heights)
    return [H3Point(complex(z), float(t)) for z, t in zip(zs, ts)]


def segment_distance(o: H3Point, p1: H3Point, p2: H3Point) -> float:
    """Distance from o to the geodesic segment [p1, p2]."""
    if dist_h3(p1, p2) < 1e-14:
        return dist_h3(o, p1)
    g = geodesic_through(p1, p2)
    n = g.normalizer()
    q = act_h3(n, o)
    s1, s2 = act_h3(n, p1).t, act_h3(n, p2).t
    foot = math.hypot(abs(q.z), q.t)
    h = min(max(foot, min(s1, s2)), max(s1, s2))
    return float(dist_h3_arrays(q.z, q.t, 0j, h))


def segment_distance_arrays(oz, ot, z1, t1, z2, t2):
    """Vectorized distance from points O to segments [P1, P2] (all in upper half-space)."""
    oz, ot, z1, t1, z2, t2 = np.broadcast_arrays(
        np.asarray(oz, complex), np.asarray(ot, float), np.asarray(z1, complex),
        np.asarray(t1, float), np.asarray(z2, complex), np.asarray(t2, float),
    )
    dz = z2 - z1
    D = np.abs(dz)
    vertical = D < 1e-14 * np.maximum(1.0, np.abs(z1))
    Ds = np.where(vertical, 1.0, D)
    u = np.where(vertical, 1.0, dz / Ds)
    c = (Ds * Ds + t2**2 - t1**2) / (2 * Ds)
    r = np.hypot(c, t1)
    m = z1 + c * u
    p = m - r * u
    q = m + r * u
    # normalizer z -> (z - p)/(z - q); vertical case z -> z - z1
    a = np.ones_like(z1)
    b = np.where(vertical, -z1, -p)
    cc = np.where(vertical, 0, 1).astype(complex)
    d = np.where(vertical, 1, -q).astype(complex)
    det = a * d - b * cc
    s = np.sqrt(det)
    a, b, cc, d = a / s, b / s, cc / s, d / s
    qz, qt = act_h3_arrays(a, b, cc, d, oz, ot)
    _, s1 = act_h3_arrays(a, b, cc, d, z1, t1)
    _, s2 = act_h3_arrays(a, b, cc, d, z2, t2)
    foot = np.hypot(np.abs(qz), qt)
    h = np.clip(foot, np.minimum(s1, s2), np.maximum(s1, s2))
    out = dist_h3_arrays(qz, qt, 0, h)
    same = dist_h3_arrays(z1, t1, z2, t2) < 1e-14
    return np.where(same, dist_h3_arrays(oz, ot, z1, t1), out)


# ---------------------------------------------------------------------------
# surface metrics


def horoball_surface_dist(h: Horoball, p1: H3Point, p2: H3Point) -> float:
    """Length of the shortest path on the horosphere (Euclidean in the normal form)."""
    for p in (p1, p2):
        off = h.signed_offset(p)
        if abs(off) > SURFACE_TOL:
            raise GeometryError(f"point not on the horosphere (offset {off:.3e})")
    m, height = h.normalizer()
    q1, q2 = act_h3(m, p1), act_h3(m, p2)
    return abs(q1.z - q2.z) / height


def _tube_coords(tube: Tube, p: H3Point) -> tuple[float, float]:
    """(log of Euclidean distance to the axis foot, angle) in the normal form."""
    n = tube.axis.normalizer()
    q = act_h3(n, p)
    dist = math.asinh(abs(q.z) / q.t)
    if abs(dist - tube.radius) > SURFACE_TOL * max(1.0, tube.radius):
        raise GeometryError(f"point not on the tube boundary (offset {dist - tube.radius:.3e})")
    return math.log(math.hypot(abs(q.z), q.t)), math.atan2(q.z.imag, q.z.real)


def tube_point(tube: Tube, height: float, angle: float) -> H3Point:
    """Point on the tube boundary at axial log-coordinate ``height`` and angle."""
    R = tube.radius
    rad = math.exp(height)
    q = H3Point(rad * math.cos(math.atan(1 / math.sinh(R))) * complex(math.cos(angle), math.sin(angle)),
                rad * math.sin(math.atan(1 / math.sinh(R))))
    return act_h3(tube.axis.normalizer().inverse(), q)


def tube_surface_length(tube: Tube, p1: H3Point, p2: H3Point) -> tuple[float, float, float]:
    """Shortest path on the tube boundary in the flat metric sinh^2R dθ^2 + cosh^2R du^2.

    Returns (length, axial distance h, rotation angle φ in [0, π]).
    """
    u1, a1 = _tube_coords(tube, p1)
    u2, a2 = _tube_coords(tube, p2)
    h = abs(u2 - u1)
    phi = abs(math.remainder(a2 - a1, 2 * math.pi))
    R = tube.radius
    return math.hypot(phi * math.sinh(R), h * math.cosh(R)), h, phi


def tube_surface_path(tube: Tube, p1: H3Point, p2: H3Point, num: int = 65) -> list[H3Point]:
    """Sample points of the flat-metric shortest path on the tube boundary."""
    u1, a1 = _tube_coords(tube, p1)
    u2, a2 = _tube_coords(tube, p2)
    da = math.remainder(a2 - a1, 2 * math.pi)
    return [tube_point(tube, u1 + s * (u2 - u1), a1 + s * da) for s in np.linspace(0, 1, num)]


# ---------------------------------------------------------------------------
# crossings


@dataclass(frozen=True)
class Crossing:
    entry: H3Point | None
    exit: H3Point | None
    flag: str  # "crossing", "none", "tangent", "contained", "asymptotic"

    @property
    def hit(self) -> bool:
        return self.flag in ("crossing", "asymptotic")


def _semicircle(p: complex, q: complex) -> tuple[complex, float, complex]:
    return (p + q) / 2, abs(q - p) / 2, (q - p) / abs(q - p)


def geodesic_thinpart_crossing(g: Geodesic, region: Horoball | Tube) -> Crossing:
    """Points where the geodesic meets the boundary of a horoball or tube, in order along g."""
    if isinstance(region, Horoball):
        n, h = region.normalizer()
        gg = g.image(n)
        inv = n.inverse()
        if is_inf(gg.p) or is_inf(gg.q):
            finite = gg.q if is_inf(gg.p) else gg.p
            pt = act_h3(inv, H3Point(finite, h))
            return Crossing(pt, None, "asymptotic") if is_inf(gg.q) else Crossing(None, pt, "asymptotic")
        m, r, u = _semicircle(gg.p, gg.q)
        if abs(r - h) <= TANGENCY_TOL * max(1.0, h):
            return Crossing(None, None, "tangent")
        if r < h:
            return Crossing(None, None, "none")
        w = math.sqrt(r * r - h * h)
        return Crossing(act_h3(inv, H3Point(m - w * u, h)), act_h3(inv, H3Point(m + w * u, h)), "crossing")

    n = region.axis.normalizer()
    inv = n.inverse()
    gg = g.image(n)
    S = math.sinh(region.radius)
    ends = [gg.p, gg.q]
    axis_ends = [e for e in ends if is_inf(e) or abs(e) < 1e-15]
    if len(axis_ends) == 2:
        return Crossing(None, None, "contained")
    if any(is_inf(e) for e in ends):
        finite = gg.q if is_inf(gg.p) else gg.p
        pt = act_h3(inv, H3Point(finite, abs(finite) / S))
        return Crossing(pt, None, "asymptotic") if is_inf(gg.q) else Crossing(None, pt, "asymptotic")
    m, r, u = _semicircle(gg.p, gg.q)
    # point m + r x u at height r sqrt(1 - x^2) with |z| = S t
    A = r * r * (1 + S * S)
    B = 2 * r * (m * u.conjugate()).real
    C = abs(m) ** 2 - S * S * r * r
    disc = B * B - 4 * A * C
    if abs(disc) <= TANGENCY_TOL * max(1.0, B * B, abs(4 * A * C)):
        return Crossing(None, None, "tangent")
    if disc < 0:
        return Crossing(None, None, "none")
    roots = sorted(((-B - math.sqrt(disc)) / (2 * A), (-B + math.sqrt(disc)) / (2 * A)))
    pts = [act_h3(inv, H3Point(m + r * x * u, r * math.sqrt(max(0.0, 1 - x * x)))) for x in roots if -1 < x < 1]
    if len(pts) == 2:
        return Crossing(pts[0], pts[1], "crossing")
    if len(pts) == 1:
        # one endpoint of g sits on the axis end, so g stays inside beyond the crossing
        inside_at_p = any(abs(e) < 1e-15 for e in [gg.p])
        return Crossing(None, pts[0], "asymptotic") if inside_at_p else Crossing(pts[0], None, "asymptotic")
    return Crossing(None, None, "none")


# ---------------------------------------------------------------------------
# penetration estimates


def horoball_penetration_check(
    h: Horoball, o: H3Point, p1: H3Point, p2: H3Point, c: float = constants.HOROBALL_PENETRATION_C
) -> tuple[float, float]:
    """Distance from o to [p1, p2] together with the lower bound N/4 - c."""
    if h.signed_offset(o) > SURFACE_TOL:
        raise GeometryError("basepoint lies inside the horoball")
    for p in (p1, p2):
        if abs(h.signed_offset(p)) > SURFACE_TOL:
            raise GeometryError("segment endpoint not on the horosphere")
    N = min(dist_h3(o, p1), dist_h3(o, p2))
    return segment_distance(o, p1, p2), N / 4 - c


def tube_penetration_check(
    tube: Tube,
    o: H3Point,
    p1: H3Point,
    p2: H3Point,
    surface_path_min: float | None = None,
    c: float = constants.TUBE_PENETRATION_C,
) -> tuple[float, float]:
    """Tube analogue of :func:`horoball_penetration_check`.

    Needs the shortest surface path from p1 to p2 to stay at distance >= N
    from o; it is sampled when ``surface_path_min`` is not supplied.
    """
    if tube.distance_to_axis(o) < tube.radius - SURFACE_TOL:
        raise GeometryError("basepoint lies inside the tube")
    N = min(dist_h3(o, p1), dist_h3(o, p2))
    if surface_path_min is None:
        surface_path_min = min(dist_h3(o, x) for x in tube_surface_path(tube, p1, p2))
    if surface_path_min < N - 1e-9 * max(1.0, N):
        raise CoplanarMidpointError(
            f"coplanar midpoint configuration: surface path comes within {surface_path_min:.4f} of O (N = {N:.4f})"
        )
    return segment_distance(o, p1, p2), N / 4 - c


# ---------------------------------------------------------------------------
# thin parts


def margulis_horoball(parabolic: MoebiusMap, eps: float = constants.MARGULIS_EPS) -> Horoball:
    """Horoball {x : d(x, P x) <= eps} for a parabolic P."""
    from .moebius import fixed_points

    base = fixed_points(parabolic, parabolic=True).attracting
    n = MoebiusMap.identity() if is_inf(base) else MoebiusMap.from_entries(0, -1, 1, -base)
    pn = n @ parabolic @ n.inverse()
    tau = abs(pn.b / pn.d)
    height = tau / (2 * math.sinh(eps / 2))
    return Horoball(base, height) if is_inf(base) else Horoball(base, 1 / height)


def margulis_tube(lox: MoebiusMap, eps: float = constants.MARGULIS_EPS, max_power: int = 10**6) -> Tube | None:
    """Tube {x : d(x, A^j x) <= eps for some j != 0} around the axis of a loxodromic A."""
    from .moebius import classify, fixed_points

    cls = classify(lox)
    ell, theta = cls.translation_length, cls.rotation
    fp = fixed_points(lox)
    j = np.arange(1, max_power + 1, dtype=float)
    jl = j * ell
    ok = jl < eps
    if not ok.any():
        return None
    j, jl = j[ok], jl[ok]
    num = math.cosh(eps) - np.cosh(jl)
    den = np.cosh(jl) - np.cos(j * theta)
    s2 = np.where(den > 0, num / np.where(den > 0, den, 1), np.inf)
    best = float(np.max(s2))
    if not np.isfinite(best) or best <= 0:
        return None
    return Tube(Geodesic(fp.repelling, fp.attracting), math.asinh(math.sqrt(best)))
