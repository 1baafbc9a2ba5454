"""Explicit marked Kleinian groups and sequences of representations."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .moebius import (
    INF,
    Kind,
    MoebiusMap,
    act_boundary,
    classify,
    commutator,
    compose,
    is_identity,
    origin_distance,
    projective_distance,
)
from .words import Alphabet, BallTree, inverse

PING_PONG_SLACK = 1e-9


class FamilyError(ValueError):
    def __init__(self, message: str, index: int | None = None, witness=None):
        super().__init__(message if index is None else f"{message} (index {index})")
        self.index = index
        self.witness = witness


@dataclass(frozen=True)
class Disk:
    center: complex
    radius: float

    def contains(self, z: complex, slack: float = 0.0) -> bool:
        return abs(z - self.center) < self.radius + slack


@dataclass
class PingPongCertificate:
    disks: list[tuple[Disk, Disk]]
    samples: int
    max_boundary_error: float


@dataclass
class Representation:
    """Generators a, b, ... of a free group sent to Moebius maps."""

    generators: tuple[MoebiusMap, ...]
    parabolics: tuple[str, ...] = ()
    family: str = "custom"
    params: dict = field(default_factory=dict)
    evidence: dict = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)

    @property
    def alphabet(self) -> Alphabet:
        return Alphabet(len(self.generators), self.parabolics)

    @property
    def rank(self) -> int:
        return len(self.generators)

    def symbol_map(self, s: str) -> MoebiusMap:
        m = self.generators[ord(s.lower()) - ord("a")]
        return m.inverse() if s.isupper() else m

    def evaluate(self, word: str) -> MoebiusMap:
        m = MoebiusMap.identity()
        for s in word:
            m = compose(m, self.symbol_map(s))
        return m

    def symbol_array(self) -> np.ndarray:
        """(2*rank, 2, 2) generator matrices in symbol order a, A, b, B, ..."""
        out = []
        for g in self.generators:
            out.append(g.to_array())
            out.append(g.inverse().to_array())
        return np.array(out)

    def is_parabolic_word(self, word: str) -> bool:
        return word in self.parabolics or inverse(word) in self.parabolics

    def describe(self) -> dict:
        return {"family": self.family, "params": _jsonable(self.params), "evidence": self.evidence}


def _jsonable(x):
    if isinstance(x, complex):
        return [x.real, x.imag]
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


@dataclass
class RepSequence:
    reps: list[Representation]
    limit: Representation
    mode: str = "strong-claimed"
    extra_words: dict[int, list[str]] = field(default_factory=dict)
    name: str = "sequence"

    def __post_init__(self):
        if any(r.rank != self.limit.rank for r in self.reps):
            raise FamilyError("all representations must share one alphabet")

    def __len__(self) -> int:
        return len(self.reps)

    def __getitem__(self, n: int) -> Representation:
        """1-based index, as in rho_n."""
        return self.reps[n - 1]

    def algebraic_distances(self) -> list[float]:
        """max over generators of the projective distance rho_n(e) to rho_inf(e)."""
        return [
            max(projective_distance(g, h) for g, h in zip(r.generators, self.limit.generators)) for r in self.reps
        ]


# ---------------------------------------------------------------------------
# Schottky groups


def pairing_map(d1: Disk, d2: Disk, twist: complex = -1) -> MoebiusMap:
    """z -> c2 + twist r1 r2 / (z - c1): exterior of d1 onto interior of d2."""
    k = twist * d1.radius * d2.radius
    return MoebiusMap.from_entries(d2.center, k - d1.center * d2.center, 1, -d1.center)


def verify_ping_pong(pairs: Sequence[tuple[Disk, Disk]], maps: Sequence[MoebiusMap], samples: int = 64) -> PingPongCertificate:
    disks = [d for pair in pairs for d in pair]
    for i in range(len(disks)):
        for j in range(i + 1, len(disks)):
            a, b = disks[i], disks[j]
            gap = abs(a.center - b.center) - a.radius - b.radius
            if gap <= 0:
                raise FamilyError("disks overlap", witness=(a, b, gap))
    worst = 0.0
    angles = np.linspace(0, 2 * math.pi, samples, endpoint=False)
    for (d1, d2), m in zip(pairs, maps):
        for th in angles:
            z = d1.center + d1.radius * cmath.exp(1j * th)
            w = act_boundary(m, z)
            err = abs(abs(w - d2.center) - d2.radius)
            worst = max(worst, err)
            if err > PING_PONG_SLACK * max(1.0, d2.radius):
                raise FamilyError("mapping condition fails", witness=(z, w))
        # the exterior point infinity must land inside the partner disk
        w = act_boundary(m, INF)
        if cmath.isinf(w) or not d2.contains(w, -PING_PONG_SLACK):
            raise FamilyError("mapping condition fails", witness=(INF, w))
    return PingPongCertificate(list(pairs), samples, worst)


def schottky(pairs: Sequence[tuple[Disk, Disk]], maps: Sequence[MoebiusMap] | None = None, **meta) -> Representation:
    """Schottky group; generator i maps the exterior of pairs[i][0] onto the interior of pairs[i][1]."""
    if maps is None:
        maps = [pairing_map(d1, d2) for d1, d2 in pairs]
    cert = verify_ping_pong(pairs, maps)
    return Representation(
        tuple(maps),
        (),
        meta.pop("family", "schottky"),
        meta.pop("params", {}),
        {"kind": "ping-pong", "samples": cert.samples, "max_boundary_error": cert.max_boundary_error},
    )


def symmetric_schottky(center: float = 3.0, radius: float = 1.0) -> Representation:
    """Disks at -c, +c paired by a and at -ci, +ci paired by b."""
    pairs = [
        (Disk(complex(-center), radius), Disk(complex(center), radius)),
        (Disk(complex(0, -center), radius), Disk(complex(0, center), radius)),
    ]
    return schottky(pairs, family="schottky-symmetric", params={"center": center, "radius": radius})


# ---------------------------------------------------------------------------
# once-punctured torus groups


def jorgensen_value(a: MoebiusMap, b: MoebiusMap) -> float:
    return abs(a.trace**2 - 4) + abs(commutator(a, b).trace - 2)


def jorgensen_filter(a: MoebiusMap, b: MoebiusMap) -> tuple[str, float]:
    """'pass', 'fail' or 'elementary' together with the Jorgensen quantity."""
    value = jorgensen_value(a, b)
    if is_identity(a) or is_identity(b) or abs(commutator(a, b).trace - 2) < 1e-9:
        return "elementary", value
    return ("fail" if value < 1 - 1e-9 else "pass"), value


def markov_roots(x: complex, y: complex) -> tuple[complex, complex]:
    """Roots z of x^2 + y^2 + z^2 = xyz, smaller modulus first."""
    disc = cmath.sqrt((x * y) ** 2 - 4 * (x * x + y * y))
    z1, z2 = (x * y - disc) / 2, (x * y + disc) / 2
    return (z1, z2) if abs(z1) <= abs(z2) else (z2, z1)


def punctured_torus(x: complex, y: complex, root: str = "smaller") -> Representation:
    x, y = complex(x), complex(y)
    small, large = markov_roots(x, y)
    z = small if root == "smaller" else large
    zeta = (-z + cmath.sqrt(z * z - 4)) / 2
    A = MoebiusMap.from_entries(x, 1, -1, 0)
    B = MoebiusMap.from_entries(0, zeta, -1 / zeta, y)
    scale = max(1.0, abs(x), abs(y), abs(z))
    checks = {
        "tr A": abs(A.trace - x),
        "tr B": abs(B.trace - y),
        "tr AB": abs(compose(A, B).trace - z),
        "tr [A,B]": abs(commutator(A, B).trace + 2),
    }
    bad = {k: v for k, v in checks.items() if v > 1e-9 * scale**2}
    if bad:
        raise FamilyError(f"trace verification failed: {bad}")
    status, value = jorgensen_filter(A, B)
    warnings = []
    if status == "fail":
        warnings.append("likely non-discrete")
    return Representation(
        (A, B),
        ("abAB",),
        "punctured-torus",
        {"x": x, "y": y, "z": z, "root": root},
        {"kind": "jorgensen", "status": status, "value": value, "markov_residual": abs(x * x + y * y + z * z - x * y * z)},
        warnings,
    )


# ---------------------------------------------------------------------------
# loxodromics converging to a parabolic, powers converging to another


@dataclass(frozen=True)
class CyclicSchedule:
    """m_n = n^power, eps_n = eps_coeff / m_n, θ_n = 2π/m_n, ℓ_n = 2 σ / m_n^2.

    Then A_n -> P: z -> z/(1 - iπ z/eps_coeff)  (|c| = π/eps_coeff) and
    A_n^{m_n} -> Q with lower-left entry of modulus σ/eps_coeff, both fixing 0.
    """

    power: int = 2
    sigma: float = 1.0
    eps_coeff: float = 1.0

    def m(self, n: int) -> int:
        return n**self.power

    def eps(self, n: int) -> float:
        return self.eps_coeff / self.m(n)

    def theta(self, n: int) -> float:
        return 2 * math.pi / self.m(n)

    def ell(self, n: int) -> float:
        return 2 * self.sigma / self.m(n) ** 2

    def validate(self, n_probe: Sequence[int] = (10, 100, 1000)) -> None:
        eps = [self.eps(n) for n in n_probe]
        if not all(e2 < e1 for e1, e2 in zip(eps, eps[1:])) or eps[-1] > 1e-2:
            raise FamilyError("schedule must have eps_n -> 0")
        mell = [self.m(n) * self.ell(n) for n in n_probe]
        if not all(v < 10 for v in mell):
            raise FamilyError("schedule must keep m_n * ell_n bounded")
        if self.power < 1 or self.sigma == 0:
            raise FamilyError("need power >= 1 and sigma != 0")


def _fixed_point_frame(eps: float) -> tuple[np.ndarray, np.ndarray]:
    s = np.array([[1, -eps], [1, eps]], dtype=complex) / cmath.sqrt(2 * eps)
    return s, np.linalg.inv(s)


def cyclic_power(n: int, j: int, schedule: CyclicSchedule = CyclicSchedule()) -> MoebiusMap:
    """A_n^j in closed form: cosh(jλ/2) I + sinh(jλ/2) [[0, -eps], [-1/eps, 0]]."""
    lam = complex(schedule.ell(n), schedule.theta(n))
    eps = schedule.eps(n)
    ch, sh = cmath.cosh(j * lam / 2), cmath.sinh(j * lam / 2)
    return MoebiusMap.from_entries(ch, -eps * sh, -sh / eps, ch)


def cyclic_divergent_family(n: int, schedule: CyclicSchedule = CyclicSchedule()) -> tuple[MoebiusMap, int]:
    """A_n with fixed points +-eps_n and multiplier exp(ℓ_n + iθ_n), and the power m_n."""
    schedule.validate()
    lam = complex(schedule.ell(n), schedule.theta(n))
    s, sinv = _fixed_point_frame(schedule.eps(n))
    mu = cmath.exp(lam / 2)
    A = sinv @ np.diag([mu, 1 / mu]) @ s
    return MoebiusMap.from_array(A), schedule.m(n)


def cyclic_limits(schedule: CyclicSchedule = CyclicSchedule()) -> tuple[MoebiusMap, MoebiusMap]:
    """(P, Q): the algebraic limit of A_n and the geometric limit of A_n^{m_n}."""
    e = schedule.eps_coeff
    P = MoebiusMap.from_entries(1, 0, -1j * math.pi / e, 1)
    # m λ/2 = iπ + σ/m, so cosh -> -1 and sinh/eps -> -σ/e
    Q = MoebiusMap.from_entries(-1, 0, schedule.sigma / e, -1)
    return P, Q


def cyclic_representation(n: int | None, schedule: CyclicSchedule = CyclicSchedule()) -> Representation:
    if n is None:
        P, _ = cyclic_limits(schedule)
        return Representation((P,), ("a",), "cyclic-remark57", {"n": "inf"}, {"kind": "parabolic-limit"})
    A, m = cyclic_divergent_family(n, schedule)
    return Representation((A,), (), "cyclic-remark57", {"n": n, "m": m}, {"kind": "elementary"})


def cyclic_sequence(n_max: int, schedule: CyclicSchedule = CyclicSchedule(), n_min: int = 1) -> RepSequence:
    reps = [cyclic_representation(n, schedule) for n in range(n_min, n_max + 1)]
    extra = {i + 1: ["a" * schedule.m(n)] for i, n in enumerate(range(n_min, n_max + 1))}
    return RepSequence(reps, cyclic_representation(None, schedule), "algebraic-only-claimed", extra, "cyclic-remark57")


# ---------------------------------------------------------------------------
# sequences


BUILDERS: dict[str, Callable[..., Representation]] = {
    "schottky-symmetric": symmetric_schottky,
    "punctured-torus": lambda x, y, root="smaller": punctured_torus(x, y, root),
}


def geometric_schedule(rate: float) -> Callable[[int, int], float]:
    """t_n = 1 - rate^(n-1): starts at the base and approaches the target."""
    return lambda n, total: 1 - rate ** (n - 1)


def linear_schedule() -> Callable[[int, int], float]:
    return lambda n, total: (n - 1) / max(total - 1, 1)


def interpolate_params(base: dict, target: dict, t: float) -> dict:
    out = {}
    for k, v in base.items():
        w = target[k]
        out[k] = v + t * (w - v) if isinstance(v, (int, float, complex)) and not isinstance(v, bool) else v
    return out


def strong_sequence(
    base: Representation,
    target: Representation,
    n_max: int = 32,
    schedule: Callable[[int, int], float] | None = None,
) -> RepSequence:
    """rho_n on the parameter path from base to target, rho_inf = target."""
    if base.family != target.family or base.family not in BUILDERS:
        raise FamilyError(f"cannot interpolate between {base.family!r} and {target.family!r}")
    schedule = schedule or geometric_schedule(2 ** -0.25)
    build = BUILDERS[base.family]
    reps = []
    for n in range(1, n_max + 1):
        params = interpolate_params(base.params, target.params, schedule(n, n_max))
        params = {k: v for k, v in params.items() if k != "z"}
        try:
            rep = build(**params)
        except FamilyError as exc:
            raise FamilyError(f"discreteness evidence fails: {exc}", index=n) from exc
        if rep.evidence.get("status") == "fail":
            raise FamilyError("Jorgensen filter fails", index=n)
        reps.append(rep)
    return RepSequence(reps, target, "strong-claimed", name=f"{base.family}-strong")


def constant_sequence(rep: Representation, n_max: int = 8) -> RepSequence:
    return RepSequence([rep] * n_max, rep, "strong-claimed", name="constant")


def word_check_nonidentity(rep: Representation, depth: int = 8) -> float:
    """Smallest projective distance from +-I over nontrivial words of length <= depth."""
    tree = BallTree.build(rep.alphabet, depth)
    mats = tree.matrices(rep.symbol_array())
    best = math.inf
    eye = np.eye(2)
    for j in range(1, depth + 1):
        m = mats[j]
        d = np.minimum(np.abs(m - eye).max(axis=(1, 2)), np.abs(m + eye).max(axis=(1, 2)))
        best = min(best, float(d.min()))
    return best


def parabolic_generator_check(rep: Representation) -> dict[str, str]:
    return {w: classify(rep.evaluate(w)).kind.value for w in rep.parabolics}


def orbit_displacement(m: MoebiusMap) -> float:
    return origin_distance(m)


__all__ = [
    "CyclicSchedule",
    "Disk",
    "FamilyError",
    "Kind",
    "Representation",
    "RepSequence",
    "constant_sequence",
    "cyclic_divergent_family",
    "cyclic_limits",
    "cyclic_power",
    "cyclic_representation",
    "cyclic_sequence",
    "jorgensen_filter",
    "punctured_torus",
    "schottky",
    "strong_sequence",
    "symmetric_schottky",
]
