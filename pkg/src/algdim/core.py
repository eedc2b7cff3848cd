"""Exact substrate: bit strings, dyadic interval reals, prefix tries and measures.

Bit strings are plain ``str`` objects over the alphabet ``{'0', '1'}``, most
significant (first) bit leftmost.  The empty string plays the role of lambda.
Rational quantities are :class:`fractions.Fraction` values, which are always
normalized, so structural equality is numerical equality.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from pathlib import Path
from typing import Callable, Iterable, Iterator, Optional, Sequence

__all__ = [
    "ApproxReal",
    "Measure",
    "PrefixSetFormatError",
    "PrefixTrie",
    "ValidationReport",
    "all_strings",
    "as_fraction",
    "bernoulli_measure",
    "check_bits",
    "compare_lazy",
    "cylinder_measure",
    "floor_log2",
    "integer_root",
    "is_prefix",
    "kraft_sum",
    "lebesgue",
    "minimal_prefix_set",
    "pow2_interval",
    "prefixes",
    "read_prefix_set",
    "validate_measure",
    "write_prefix_set",
]

DEFAULT_PRECISION = 64
PRECISION_CAP = 256

_BITS = frozenset("01")


def check_bits(w: str) -> str:
    """Return ``w`` unchanged if it is a valid bit string, else raise ValueError."""
    if not isinstance(w, str):
        raise TypeError(f"bit string must be str, got {type(w).__name__}")
    if not _BITS.issuperset(w):
        bad = next(i for i, ch in enumerate(w) if ch not in _BITS)
        raise ValueError(f"invalid character {w[bad]!r} at position {bad} in bit string")
    return w


def as_fraction(x) -> Fraction:
    """Coerce ints, Fractions and strings like ``'1/4'`` to a Fraction.

    Floats are rejected: every rational in this package must be exact.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise TypeError("bool is not a rational")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x.strip())
    raise TypeError(f"expected an exact rational, got {type(x).__name__} {x!r}")


def is_prefix(v: str, w: str) -> bool:
    """True iff ``v`` is a (not necessarily proper) prefix of ``w``."""
    return w.startswith(v)


def prefixes(w: str) -> Iterator[str]:
    """Yield ``w[:0], w[:1], ..., w`` (lambda first)."""
    for i in range(len(w) + 1):
        yield w[:i]


def all_strings(n: int) -> Iterator[str]:
    """All bit strings of length ``n`` in lexicographic order."""
    if n == 0:
        yield ""
        return
    for t in itertools.product("01", repeat=n):
        yield "".join(t)


def floor_log2(r) -> int:
    """Exact ``floor(log2 r)`` for a positive rational ``r``."""
    r = as_fraction(r)
    if r <= 0:
        raise ValueError(f"floor_log2 needs a positive argument, got {r}")
    n, d = r.numerator, r.denominator
    k = n.bit_length() - d.bit_length()
    # 2^k <= r  <=>  n >= d * 2^k
    if k >= 0:
        return k if n >= d << k else k - 1
    return k if n << -k >= d else k - 1


def integer_root(n: int, q: int) -> int:
    """Largest integer ``z`` with ``z**q <= n``."""
    if n < 0 or q < 1:
        raise ValueError("integer_root needs n >= 0 and q >= 1")
    if n < 2 or q == 1:
        return n
    # float estimate of n**(1/q), nudged upward so Newton descends monotonically
    bl = n.bit_length()
    drop = max(0, bl - 64)
    r = (math.log2(n >> drop) + drop) / q
    a = math.floor(r)
    if a < 60:
        z = int(2.0 ** r * (1 + 2.0 ** -30)) + 2
    else:
        z = (int(2.0 ** (r - a) * 2.0 ** 60 * (1 + 2.0 ** -30)) + 2) << (a - 60)
    if z ** q <= n:
        z = 1 << -(-bl // q)
    while True:
        y = ((q - 1) * z + n // z ** (q - 1)) // q
        if y >= z:
            break
        z = y
    while z ** q > n:
        z -= 1
    while (z + 1) ** q <= n:
        z += 1
    return z


@dataclass(frozen=True)
class ApproxReal:
    """A closed interval ``[lower, upper]`` of dyadic rationals enclosing a real.

    ``precision`` records the number of relative bits the enclosure was built
    with; ``lower == upper`` means the value is known exactly.
    """

    lower: Fraction
    upper: Fraction
    precision: int = 0

    def __post_init__(self):
        if self.lower > self.upper:
            raise ValueError(f"empty interval [{self.lower}, {self.upper}]")

    @classmethod
    def exact(cls, x) -> "ApproxReal":
        x = as_fraction(x)
        return cls(x, x, PRECISION_CAP)

    @property
    def is_exact(self) -> bool:
        return self.lower == self.upper

    @property
    def width(self) -> Fraction:
        return self.upper - self.lower

    def contains(self, x) -> bool:
        x = as_fraction(x)
        return self.lower <= x <= self.upper

    def __add__(self, other: "ApproxReal") -> "ApproxReal":
        if not isinstance(other, ApproxReal):
            other = ApproxReal.exact(other)
        return ApproxReal(self.lower + other.lower, self.upper + other.upper,
                          min(self.precision, other.precision))

    __radd__ = __add__

    def scale(self, c) -> "ApproxReal":
        """Multiply by a nonnegative rational."""
        c = as_fraction(c)
        if c < 0:
            raise ValueError("scale factor must be nonnegative")
        return ApproxReal(self.lower * c, self.upper * c, self.precision)

    def __float__(self) -> float:
        return float((self.lower + self.upper) / 2)

    def __repr__(self) -> str:
        if self.is_exact:
            return f"ApproxReal({self.lower})"
        return f"ApproxReal([{float(self.lower):.12g}, {float(self.upper):.12g}])"


@lru_cache(maxsize=65536)
def pow2_interval(x, precision: int = DEFAULT_PRECISION) -> ApproxReal:
    """Rigorous enclosure of ``2**x`` for rational ``x`` with ``precision`` relative bits.

    Exact whenever ``x`` is an integer.
    """
    x = as_fraction(x)
    if x.denominator == 1:
        v = Fraction(2) ** int(x)
        return ApproxReal(v, v, PRECISION_CAP)
    p, q = x.numerator, x.denominator
    shift = precision - math.floor(x)
    # floor(2^(x + shift)) = integer q-th root of 2^(p + q*shift)
    e = p + q * shift
    z = integer_root(1 << e, q)
    scale = Fraction(1, 1 << shift) if shift >= 0 else Fraction(1 << -shift)
    lo = z * scale
    if z ** q == 1 << e:
        return ApproxReal(lo, lo, precision)
    return ApproxReal(lo, (z + 1) * scale, precision)


def compare_lazy(f: Callable[[int], ApproxReal], g: Callable[[int], ApproxReal],
                 start: int = DEFAULT_PRECISION, cap: int = PRECISION_CAP) -> Optional[int]:
    """Compare two lazily refinable reals.

    ``f`` and ``g`` map a precision to an enclosure.  Precision doubles until the
    intervals separate; returns -1, 0 (both exact and equal) or 1, or ``None``
    when still overlapping at ``cap``.
    """
    prec = start
    while True:
        a, b = f(prec), g(prec)
        if a.upper < b.lower:
            return -1
        if a.lower > b.upper:
            return 1
        if a.is_exact and b.is_exact:
            return 0
        if prec >= cap:
            return None
        prec = min(2 * prec, cap)


def minimal_prefix_set(strings: Iterable[str]) -> list[str]:
    """The prefix-minimal members of ``strings``, sorted by (length, value).

    The result is prefix free and its cylinders cover the same set of sequences.
    """
    kept: set[str] = set()
    out = []
    for w in sorted(set(strings), key=lambda s: (len(s), s)):
        check_bits(w)
        if not any(w[:i] in kept for i in range(len(w) + 1)):
            kept.add(w)
            out.append(w)
    return out


def kraft_sum(strings: Iterable[str]) -> Fraction:
    """``sum(2**-|w|)`` over the given strings."""
    return sum((Fraction(1, 1 << len(w)) for w in strings), Fraction(0))


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of an exhaustive finite-depth check.

    ``violation`` is the first offending node in breadth-first order, if any.
    """

    ok: bool
    depth: int
    checked: int
    violation: Optional[str] = None
    detail: str = ""
    notes: tuple = ()

    def to_dict(self) -> dict:
        return {"ok": self.ok, "depth": self.depth, "checked": self.checked,
                "violation": self.violation, "detail": self.detail,
                "notes": list(self.notes)}


class Measure:
    """A probability measure on Cantor space given by its cylinder values."""

    def __init__(self, func: Callable[[str], Fraction], name: str = "measure"):
        self._func = func
        self.name = name

    def __call__(self, w: str) -> Fraction:
        return as_fraction(self._func(w))

    def __repr__(self) -> str:
        return f"Measure({self.name})"


def lebesgue() -> Measure:
    return Measure(lambda w: Fraction(1, 1 << len(w)), name="lebesgue")


def bernoulli_measure(p) -> Measure:
    """Product measure with ``P(bit = 1) = p``."""
    p = as_fraction(p)
    if not 0 <= p <= 1:
        raise ValueError(f"p must lie in [0, 1], got {p}")

    def mu(w):
        ones = w.count("1")
        return p ** ones * (1 - p) ** (len(w) - ones)

    return Measure(mu, name=f"bernoulli({p})")


def cylinder_measure(mu: Measure, w: str) -> Fraction:
    """``mu(C_w)``, exactly."""
    return mu(check_bits(w))


def validate_measure(mu: Measure, depth: int) -> ValidationReport:
    """Check ``mu(lambda) = 1`` and additivity ``mu(w) = mu(w0) + mu(w1)``.

    Additivity is checked for every ``w`` with ``|w| < depth``, so every node of
    length at most ``depth`` is evaluated.  Violations are reported, not raised.
    """
    if depth < 0:
        raise ValueError("depth must be >= 0")
    root = mu("")
    if root != 1:
        return ValidationReport(False, depth, 1, "", f"mu(lambda) = {root} != 1")
    checked = 1
    for n in range(depth):
        for w in all_strings(n):
            a, b, c = mu(w), mu(w + "0"), mu(w + "1")
            checked += 1
            if b < 0 or c < 0:
                return ValidationReport(False, depth, checked, w, "negative child measure")
            if b + c != a:
                return ValidationReport(False, depth, checked, w, f"{b} + {c} != {a}")
    return ValidationReport(True, depth, checked)


class PrefixTrie:
    """The finite trie of all prefixes of a set of depth-``n`` strings.

    Presence is closed under taking parents, and the depth-``n`` slice is
    exactly the set of present depth-``n`` nodes.
    """

    def __init__(self, leaves: Iterable[str], depth: int):
        if depth < 0:
            raise ValueError("depth must be >= 0")
        leafset = frozenset(leaves)
        for w in leafset:
            check_bits(w)
            if len(w) != depth:
                raise ValueError(f"leaf {w!r} has length {len(w)}, expected {depth}")
        self.depth = depth
        self.leaves = leafset
        nodes = set()
        for w in leafset:
            for i in range(depth, -1, -1):
                v = w[:i]
                if v in nodes:
                    break
                nodes.add(v)
        self.nodes = frozenset(nodes)

    @classmethod
    def from_cylinders(cls, strings: Iterable[str], depth: int) -> "PrefixTrie":
        """Slice at ``depth`` of the union of cylinders ``C_w``.

        Strings longer than ``depth`` are truncated to their depth prefix.
        """
        leaves = set()
        for w in minimal_prefix_set(strings):
            if len(w) >= depth:
                leaves.add(w[:depth])
            else:
                leaves.update(w + t for t in all_strings(depth - len(w)))
        return cls(leaves, depth)

    @classmethod
    def full(cls, depth: int) -> "PrefixTrie":
        return cls(all_strings(depth), depth)

    @classmethod
    def path(cls, w: str) -> "PrefixTrie":
        return cls([check_bits(w)], len(w))

    @classmethod
    def from_branching(cls, depth: int, branches: Callable[[int], bool]) -> "PrefixTrie":
        """Trie in which a node at depth ``d`` has two children iff ``branches(d)``,
        otherwise the single child obtained by appending ``0``."""
        level = [""]
        for d in range(depth):
            if branches(d):
                level = [w + b for w in level for b in "01"]
            else:
                level = [w + "0" for w in level]
        return cls(level, depth)

    def __contains__(self, w: str) -> bool:
        return w in self.nodes

    def __len__(self) -> int:
        return len(self.leaves)

    def __bool__(self) -> bool:
        return bool(self.leaves)

    def __eq__(self, other) -> bool:
        return isinstance(other, PrefixTrie) and (self.depth, self.leaves) == (other.depth, other.leaves)

    def __hash__(self) -> int:
        return hash((self.depth, self.leaves))

    def __repr__(self) -> str:
        return f"PrefixTrie(depth={self.depth}, leaves={len(self.leaves)})"

    def children(self, w: str) -> list[str]:
        return [c for c in (w + "0", w + "1") if c in self.nodes]

    def slice(self, n: int) -> list[str]:
        """Present nodes of length ``n``, sorted."""
        if not 0 <= n <= self.depth:
            raise ValueError(f"slice depth {n} outside [0, {self.depth}]")
        return sorted(w for w in self.nodes if len(w) == n)

    def slice_counts(self) -> list[int]:
        counts = [0] * (self.depth + 1)
        for w in self.nodes:
            counts[len(w)] += 1
        return counts


class PrefixSetFormatError(ValueError):
    def __init__(self, path, line: int, msg: str):
        super().__init__(f"{path}:{line}: {msg}")
        self.path = path
        self.line = line


def read_prefix_set(path) -> list[str]:
    """Read a prefix-set file: one bit string per line, ``#`` comments, blank lines ignored."""
    out = []
    text = Path(path).read_text(encoding="utf-8")
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        bad = [ch for ch in line if ch not in _BITS]
        if bad:
            raise PrefixSetFormatError(path, lineno, f"invalid character {bad[0]!r}")
        out.append(line)
    return out


def write_prefix_set(path, strings: Sequence[str], header: str = "") -> None:
    lines = [f"# {h}" for h in header.splitlines()] if header else []
    for w in strings:
        if not check_bits(w):
            raise ValueError("the empty string has no line representation in a prefix-set file")
        lines.append(w)
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
