"""Free-group words: reduction, Cayley-graph balls, geodesics and parabolic blocks.

Words are strings: generators are ``a``, ``b``, ... and their inverses the
corresponding capitals.  The empty string is the identity.
"""

from __future__ import annotations

import string
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .constants import BLOCK_REMAINDER, MAX_DEPTH


class WordError(ValueError):
    pass


def inverse_letter(s: str) -> str:
    return s.lower() if s.isupper() else s.upper()


def inverse(w: str) -> str:
    return "".join(inverse_letter(s) for s in reversed(w))


def reduce(raw: Sequence[str] | str) -> str:
    out: list[str] = []
    for s in raw:
        if s not in string.ascii_letters:
            raise WordError(f"bad symbol {s!r}")
        if out and out[-1] == inverse_letter(s):
            out.pop()
        else:
            out.append(s)
    return "".join(out)


def multiply(*words: str) -> str:
    return reduce("".join(words))


def cyclic_reduce(w: str) -> tuple[str, str]:
    """Split a reduced word as u c u^-1 with c cyclically reduced; returns (u, c)."""
    i = 0
    while i < len(w) - 1 - i and w[i] == inverse_letter(w[-1 - i]):
        i += 1
    return w[:i], w[i : len(w) - i]


def is_cyclically_reduced(w: str) -> bool:
    return len(w) < 2 or w[0] != inverse_letter(w[-1])


@dataclass(frozen=True)
class Alphabet:
    rank: int
    parabolics: tuple[str, ...] = ()

    def __post_init__(self):
        if not 1 <= self.rank <= 26:
            raise WordError("rank must be between 1 and 26")
        for p in self.parabolics:
            if reduce(p) != p or not p or any(s.lower() not in self.generators for s in p):
                raise WordError(f"bad parabolic word {p!r}")

    @property
    def generators(self) -> str:
        return string.ascii_lowercase[: self.rank]

    @property
    def symbols(self) -> str:
        """Symbol order used for enumeration: a, A, b, B, ..."""
        return "".join(g + g.upper() for g in self.generators)

    def check(self, w: str) -> str:
        if any(s.lower() not in self.generators for s in w):
            raise WordError(f"word {w!r} uses letters outside {self.symbols}")
        return reduce(w)


def sphere_size(rank: int, n: int) -> int:
    return 1 if n == 0 else 2 * rank * (2 * rank - 1) ** (n - 1)


def ball_size(rank: int, n: int) -> int:
    return sum(sphere_size(rank, j) for j in range(n + 1))


@dataclass
class BallTree:
    """Reduced words of length <= depth, stored level by level as (parent, symbol index).

    Level j holds the words of length j in length-lexicographic order
    (symbol order of the alphabet).
    """

    alphabet: Alphabet
    depth: int
    parents: list[np.ndarray] = field(default_factory=list)
    letters: list[np.ndarray] = field(default_factory=list)

    @classmethod
    def build(cls, alphabet: Alphabet, depth: int, cap: int = MAX_DEPTH) -> "BallTree":
        if depth > cap:
            raise WordError(f"depth {depth} exceeds the cap {cap}")
        if depth < 0:
            raise WordError("negative depth")
        ns = 2 * alphabet.rank
        inv = np.array([i ^ 1 for i in range(ns)])
        tree = cls(alphabet, depth, [np.zeros(1, dtype=np.int64)], [np.full(1, -1, dtype=np.int64)])
        for _ in range(depth):
            last = tree.letters[-1]
            n = len(last)
            par = np.repeat(np.arange(n, dtype=np.int64), ns)
            let = np.tile(np.arange(ns, dtype=np.int64), n)
            keep = (last[par] < 0) | (let != inv[np.maximum(last[par], 0)])
            tree.parents.append(par[keep])
            tree.letters.append(let[keep])
        return tree

    def level_size(self, j: int) -> int:
        return len(self.letters[j])

    def word(self, level: int, index: int) -> str:
        syms = self.alphabet.symbols
        out = []
        while level > 0:
            out.append(syms[self.letters[level][index]])
            index = self.parents[level][index]
            level -= 1
        return "".join(reversed(out))

    def words(self, level: int) -> list[str]:
        if level == 0:
            return [""]
        prev = self.words(level - 1)
        syms = self.alphabet.symbols
        return [prev[p] + syms[s] for p, s in zip(self.parents[level], self.letters[level])]

    def first_letters(self, level: int) -> np.ndarray:
        idx = np.arange(self.level_size(level))
        for j in range(level, 1, -1):
            idx = self.parents[j][idx]
        return self.letters[1][idx] if level >= 1 else np.full(1, -1)

    def cyclically_reduced_mask(self, level: int) -> np.ndarray:
        if level < 2:
            return np.ones(self.level_size(level), dtype=bool)
        return self.first_letters(level) != (self.letters[level] ^ 1)

    def matrices(self, gens: np.ndarray) -> list[np.ndarray]:
        """Per-level arrays of shape (n, 2, 2) with the product of generator matrices.

        ``gens`` has shape (2*rank, 2, 2) in symbol order (a, A, b, B, ...) and
        determinant one.  Products are not renormalized: for long words the
        computed determinant suffers cancellation and is less accurate than
        the product itself.
        """
        out = [np.eye(2, dtype=complex)[None]]
        for j in range(1, self.depth + 1):
            out.append(out[-1][self.parents[j]] @ gens[self.letters[j]])
        return out


def enumerate_ball(alphabet: Alphabet, n: int, cap: int = MAX_DEPTH) -> Iterator[str]:
    """All reduced words of length <= n, shortlex order, each once."""
    tree = BallTree.build(alphabet, n, cap)
    for j in range(n + 1):
        yield from tree.words(j)


def geodesic_word(u: str, v: str) -> list[str]:
    """Vertices of the Cayley-graph geodesic from u to v."""
    step = multiply(inverse(u), v)
    return [multiply(u, step[:i]) for i in range(len(step) + 1)]


def word_distance(u: str, v: str) -> int:
    return len(multiply(inverse(u), v))


def common_prefix_length(u: str, v: str) -> int:
    n = 0
    for x, y in zip(u, v):
        if x != y:
            break
        n += 1
    return n


def segment_min_length(u: str, v: str) -> int:
    """min |g| over the vertices g of the geodesic from u to v (the tree meet point)."""
    return common_prefix_length(u, v)


@dataclass(frozen=True)
class ParabolicBlock:
    base: str
    exponent: int
    remainder: str = ""

    @property
    def length(self) -> int:
        return abs(self.exponent)

    def expand(self) -> str:
        p = self.base if self.exponent > 0 else inverse(self.base)
        return p * abs(self.exponent) + self.remainder


def _run_length(w: str, i: int, p: str) -> int:
    k = 0
    n = len(p)
    while w.startswith(p, i + k * n):
        k += 1
    return k


def parse_parabolic_blocks(
    w: str, parabolics: Sequence[str], k0: int = 1, remainder_bound: int = BLOCK_REMAINDER
) -> list[ParabolicBlock | str]:
    """Split w into maximal runs p^k (|k| >= k0, p in parabolics) and gap strings.

    A run may absorb a trailing proper prefix of p of length <= remainder_bound.
    """
    if k0 < 1:
        raise WordError("k0 must be at least 1")
    items: list[ParabolicBlock | str] = []
    gap: list[str] = []
    i = 0
    while i < len(w):
        best = None
        for p in parabolics:
            for sign, q in ((1, p), (-1, inverse(p))):
                k = _run_length(w, i, q)
                if k >= k0 and (best is None or k * len(q) > best[1] * len(best[2])):
                    best = (sign, k, q, p)
        if best is None:
            gap.append(w[i])
            i += 1
            continue
        sign, k, q, p = best
        j = i + k * len(q)
        rem = ""
        for r in range(min(remainder_bound, len(q) - 1), 0, -1):
            if w.startswith(q[:r], j):
                rem = q[:r]
                break
        if gap:
            items.append("".join(gap))
            gap = []
        items.append(ParabolicBlock(p, sign * k, rem))
        i = j + len(rem)
    if gap:
        items.append("".join(gap))
    return items


def recompose(items: Sequence[ParabolicBlock | str]) -> str:
    return "".join(x if isinstance(x, str) else x.expand() for x in items)


def power_path(w: str, depth: int) -> list[str]:
    """Prefixes of the infinite word w w w ... for a cyclically reduced w."""
    if not w:
        raise WordError("empty word has no power path")
    if not is_cyclically_reduced(w):
        raise WordError(f"{w!r} is not cyclically reduced")
    long = w * (depth // len(w) + 1)
    return [long[:r] for r in range(1, depth + 1)]


def sample_word(rng: np.random.Generator, alphabet: Alphabet, length: int, prefix: str = "") -> str:
    syms = alphabet.symbols
    w = list(prefix)
    while len(w) < length:
        s = syms[rng.integers(len(syms))]
        if w and w[-1] == inverse_letter(s):
            continue
        w.append(s)
    return "".join(w)


# ---------------------------------------------------------------------------
# paths towards boundary points


@dataclass
class BoundaryWordPath:
    """Vertices g_1, g_2, ... of the path [1, xi), each one letter longer than the last."""

    words: list[str]
    target: complex
    depth: int
    qg_ratio: float = 1.0
    final_distance: float = float("nan")
    power_of: str | None = None

    def __len__(self) -> int:
        return len(self.words)


def _ray_coordinates(n, p):
    """(distance to the line, signed position along it) for points given in the normal frame."""
    import math

    rho = abs(p.z)
    return math.asinh(rho / p.t), math.log(math.hypot(rho, p.t))


# orbit points closer than this to the target are beyond double precision
RESOLUTION = 1e-13


def _lookahead(rep, frame, m, last: str, pos: float, k: int) -> list:
    """Keys (not forward, distance to the ray) of all reduced descendants up to k letters below m."""
    if k <= 0:
        return []
    from .moebius import act_h3, compose, orbit_point

    out = []
    for s in rep.alphabet.symbols:
        if s == inverse_letter(last):
            continue
        mm = compose(m, rep.symbol_map(s))
        d, x = _ray_coordinates(frame, act_h3(frame, orbit_point(mm)))
        out.append((x <= pos, d))
        out.extend(_lookahead(rep, frame, mm, s, pos, k - 1))
    return out


def standard_path_to(rep, xi: complex, depth: int, cap: int = 64, lookahead: int = 4) -> BoundaryWordPath:
    """Greedy word path whose orbit points track the ray from O to xi.

    At each step the one-letter extension whose orbit point lies closest to
    the ray is taken among those that move forward along it (ties broken by
    symbol order).  Each letter is scored by its best descendant up to
    ``lookahead`` letters further on, so near-ties do not lead the walk into
    a subtree that misses xi.  The walk stops early once the orbit point is within
    double-precision resolution of xi.  Raises if no extension
    makes progress along the ray for 2*rank consecutive steps.
    """
    import math

    from .moebius import (
        act_h3,
        chordal_dist,
        compose,
        dist_h3,
        from_sphere_arrays,
        mobius_to_vertical,
        orbit_point,
        shadow,
        to_sphere_arrays,
    )

    if depth > cap:
        raise WordError(f"depth {depth} exceeds the cap {cap}")
    if depth == 0:
        return BoundaryWordPath([], xi, 0, 1.0, float("nan"))
    antipode = complex(from_sphere_arrays(-to_sphere_arrays(xi)))
    frame = mobius_to_vertical(antipode, xi)
    syms = rep.alphabet.symbols
    origin_pos = _ray_coordinates(frame, act_h3(frame, orbit_point(rep.evaluate(""))))[1]
    g, m, pos = "", rep.evaluate(""), origin_pos
    words, points = [], [orbit_point(m)]
    stall = 0
    for _ in range(depth):
        best = None
        for s in syms:
            if g and s == inverse_letter(g[-1]):
                continue
            mm = compose(m, rep.symbol_map(s))
            p = orbit_point(mm)
            d, x = _ray_coordinates(frame, act_h3(frame, p))
            if x < origin_pos:
                d = dist_h3(p, points[0])
            key = (x <= pos, d)
            look = min([key] + _lookahead(rep, frame, mm, s, pos, lookahead - 1))
            if best is None or (look, key) < best[0]:
                best = ((look, key), x, s, mm, p)
        _, x, s, m, p = best
        stall = 0 if x > pos else stall + 1
        if stall >= 2 * rep.rank:
            raise WordError("not reachable at this depth")
        pos = max(pos, x)
        g += s
        words.append(g)
        points.append(p)
        if chordal_dist(shadow(p), xi) < RESOLUTION:
            break
    ratio = 1.0
    for i in range(len(points)):
        for j in range(i + 1, len(points)):
            dh = dist_h3(points[i], points[j])
            k = j - i
            ratio = max(ratio, k / dh if dh > 0 else math.inf, dh / k)
    final = chordal_dist(shadow(points[-1]), xi)
    return BoundaryWordPath(words, xi, len(words), ratio, final)


def power_word_path(w: str, xi: complex, depth: int) -> BoundaryWordPath:
    return BoundaryWordPath(power_path(w, depth), xi, depth, power_of=w)
