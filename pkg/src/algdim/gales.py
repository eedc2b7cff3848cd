"""Exact martingales, s-gales in base-martingale form, and their verifiers.

A martingale is exposed two ways: as a callable ``d(w) -> Fraction`` and as a
walker (``start`` / ``step``) that carries a :class:`Capital` along a path so
long traces cost one multiplication per bit instead of one product per prefix.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .core import (
    ApproxReal,
    ValidationReport,
    all_strings,
    Measure,
    as_fraction,
    check_bits,
    compare_lazy,
    floor_log2,
    integer_root,
    pow2_interval,
)

__all__ = [
    "Capital",
    "FunctionMartingale",
    "KolmogorovReport",
    "Martingale",
    "Order",
    "OrderTrace",
    "ProductMartingale",
    "SGale",
    "all_in_on_zero",
    "bernoulli_likelihood_martingale",
    "constant_martingale",
    "order_success_trace",
    "random_structured_martingale",
    "sgale_value",
    "structured_martingale",
    "validate_gale",
    "validate_martingale",
    "verify_kolmogorov_inequality",
]


def _split_pow2(f: Fraction) -> tuple[int, Fraction]:
    """Write a positive rational as ``2**k * r`` with odd numerator and denominator."""
    n, d = f.numerator, f.denominator
    a = (n & -n).bit_length() - 1
    b = (d & -d).bit_length() - 1
    return a - b, Fraction(n >> a, d >> b)


class Capital:
    """Exact nonnegative rational kept as ``2**exp2 * prod(f**c)`` over odd factors.

    The factored form makes ``floor(log2 .)`` cheap: a float estimate decides
    unless it lands within rounding distance of an integer, in which case the
    exact value is built and compared.
    """

    __slots__ = ("exp2", "odd", "zero")

    def __init__(self, exp2: int = 0, odd: tuple = (), zero: bool = False):
        self.exp2 = exp2
        self.odd = odd
        self.zero = zero

    @classmethod
    def of(cls, value) -> "Capital":
        value = as_fraction(value)
        if value < 0:
            raise ValueError(f"capital must be nonnegative, got {value}")
        if value == 0:
            return ZERO
        k, r = _split_pow2(value)
        return cls(k, () if r == 1 else ((r, 1),))

    def times(self, factor: Fraction) -> "Capital":
        if self.zero:
            return self
        if factor == 0:
            return ZERO
        k, r = _split_pow2(factor)
        if r == 1:
            return Capital(self.exp2 + k, self.odd)
        odd = dict(self.odd)
        odd[r] = odd.get(r, 0) + 1
        return Capital(self.exp2 + k, tuple(odd.items()))

    def value(self) -> Fraction:
        if self.zero:
            return Fraction(0)
        v = Fraction(2) ** self.exp2
        for r, c in self.odd:
            v *= r ** c
        return v

    def _log2_parts(self) -> tuple[float, float]:
        est = 0.0
        mag = 0.0
        for r, c in self.odd:
            lg = math.log2(r.numerator) - math.log2(r.denominator)
            est += c * lg
            mag += c * abs(lg)
        return est, mag

    def log2(self) -> float:
        """Float ``log2`` of the capital; ``-inf`` for zero capital."""
        if self.zero:
            return -math.inf
        return self.exp2 + self._log2_parts()[0]

    def floor_log2(self) -> Optional[int]:
        """Exact ``floor(log2 capital)``, or ``None`` for zero capital."""
        if self.zero:
            return None
        if not self.odd:
            return self.exp2
        est, mag = self._log2_parts()
        fl = math.floor(est)
        eps = 1e-9 * (1.0 + mag)
        if est - fl > eps and fl + 1 - est > eps:
            return self.exp2 + fl
        return floor_log2(self.value())

    def compare_pow2(self, x: Fraction) -> int:
        """Sign of ``capital - 2**x`` for rational ``x``, decided exactly."""
        if self.zero:
            return -1
        x = as_fraction(x)
        est, mag = self._log2_parts()
        diff = self.exp2 + est - float(x)
        if abs(diff) > 1e-9 * (1.0 + mag + abs(float(x))):
            return 1 if diff > 0 else -1
        p, q = x.numerator, x.denominator
        # capital >= 2^(p/q)  <=>  capital^q >= 2^p
        lhs = self.value() ** q
        rhs = Fraction(2) ** p
        return (lhs > rhs) - (lhs < rhs)

    def __eq__(self, other) -> bool:
        if isinstance(other, Capital):
            return self.value() == other.value()
        return self.value() == other

    def __hash__(self):
        return hash(self.value())

    def __repr__(self) -> str:
        return f"Capital({self.value()})"


ZERO = Capital(zero=True)


class Martingale:
    """Base class: a capital function ``d`` on bit strings.

    Subclasses implement :meth:`start` and :meth:`step`; walker states are
    immutable tuples whose last entry is the :class:`Capital` at that node.
    """

    name = "martingale"

    def start(self):
        raise NotImplementedError

    def step(self, state, bit: int):
        raise NotImplementedError

    @staticmethod
    def capital(state) -> Capital:
        return state[-1]

    def __call__(self, w: str) -> Fraction:
        return self._eval(check_bits(w))

    def _eval(self, w: str) -> Fraction:
        state = self.start()
        for ch in w:
            state = self.step(state, 1 if ch == "1" else 0)
        return self.capital(state).value()

    @property
    def initial_capital(self) -> Fraction:
        return self.capital(self.start()).value()

    def capitals(self, bits) -> list[Capital]:
        """Capital at every prefix of ``bits`` (lambda first)."""
        state = self.start()
        out = [self.capital(state)]
        for b in bits:
            state = self.step(state, int(b))
            out.append(self.capital(state))
        return out

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.name})"


class FunctionMartingale(Martingale):
    """Martingale given directly by an evaluator ``w -> rational`` (memoized).

    Nothing is assumed about the evaluator; use :func:`validate_martingale`.
    """

    def __init__(self, func: Callable[[str], object], name: str = "function", cache_size: int = 1 << 18):
        self.name = name
        self._func = func
        self._cached = lru_cache(maxsize=cache_size)(lambda w: as_fraction(func(w)))

    def _eval(self, w: str) -> Fraction:
        return self._cached(w)

    def start(self):
        return ("", Capital.of(self._cached("")))

    def step(self, state, bit):
        w = state[0] + ("1" if bit else "0")
        return (w, Capital.of(self._cached(w)))


class ProductMartingale(Martingale):
    """Capital multiplies by ``factor(position, bit)`` at each step.

    Fairness holds iff ``factor(i, 0) + factor(i, 1) == 2`` for every position.
    """

    def __init__(self, factor: Callable[[int, int], Fraction], name: str, initial=1):
        self.name = name
        self._factor = factor
        self._initial = Capital.of(initial)

    def factor(self, position: int, bit: int) -> Fraction:
        return self._factor(position, bit)

    def start(self):
        return (0, self._initial)

    def step(self, state, bit):
        pos, cap = state
        return (pos + 1, cap.times(self._factor(pos, bit)))

    def _eval(self, w: str) -> Fraction:
        v = self._initial.value()
        for i, ch in enumerate(w):
            if v == 0:
                break
            v *= self._factor(i, 1 if ch == "1" else 0)
        return v


def constant_martingale(c=1) -> ProductMartingale:
    """``d(w) = c`` everywhere."""
    one = Fraction(1)
    return ProductMartingale(lambda i, b: one, name=f"constant({as_fraction(c)})", initial=c)


def bernoulli_likelihood_martingale(p) -> ProductMartingale:
    """Likelihood ratio of Bernoulli(p) against the fair coin.

    ``d(w) = prod(2p if bit == 1 else 2(1 - p))``.
    """
    p = as_fraction(p)
    if not 0 < p < 1:
        raise ValueError(f"p must lie strictly between 0 and 1, got {p}")
    f1, f0 = 2 * p, 2 * (1 - p)
    return ProductMartingale(lambda i, b: f1 if b else f0, name=f"bernoulli(p={p})")


BetSchedule = Union[Callable[[int], tuple], Sequence[tuple]]


def structured_martingale(schedule: BetSchedule, name: str = "") -> ProductMartingale:
    """Gambler that stakes a fraction of its capital on a predicted bit.

    ``schedule`` is either a callable ``position -> (stake, predicted_bit)`` or a
    finite sequence of such pairs repeated periodically.  A correct prediction
    multiplies capital by ``1 + stake``, a wrong one by ``1 - stake``.
    """
    if callable(schedule):
        get = schedule
        label = name or "structured"
    else:
        table = [(as_fraction(st), int(b)) for st, b in schedule]
        if not table:
            raise ValueError("schedule must be nonempty")
        for st, b in table:
            if not 0 <= st <= 1 or b not in (0, 1):
                raise ValueError(f"bad schedule entry ({st}, {b})")
        period = len(table)
        get = lambda i: table[i % period]  # noqa: E731
        label = name or "structured[" + ",".join(f"{st}@{b}" for st, b in table) + "]"

    one = Fraction(1)

    def factor(i, bit):
        stake, pred = get(i)
        stake = as_fraction(stake)
        if not 0 <= stake <= 1:
            raise ValueError(f"stake {stake} at position {i} outside [0, 1]")
        return one + stake if bit == pred else one - stake

    return ProductMartingale(factor, name=label)


def all_in_on_zero() -> ProductMartingale:
    """``d(w) = 2**|w|`` on prefixes of 0^omega, 0 elsewhere."""
    return structured_martingale([(Fraction(1), 0)], name="all-in-on-0")


_STAKES = tuple(Fraction(i, 4) for i in range(5))


def random_structured_martingale(seed: int, period: int = 5) -> ProductMartingale:
    """Seeded periodic structured martingale with stakes drawn from {0, 1/4, ..., 1}."""
    rng = random.Random(seed)
    table = [(rng.choice(_STAKES), rng.randrange(2)) for _ in range(period)]
    return structured_martingale(table, name=f"random-structured(seed={seed},period={period})")


def validate_martingale(d: Martingale, depth: int) -> ValidationReport:
    """Exact fairness and nonnegativity check at every node up to ``depth``.

    An exception raised while evaluating ``d`` propagates as
    :class:`MartingaleEvaluationError`, distinct from a reported violation.
    """
    if depth < 0:
        raise ValueError("depth must be >= 0")

    def ev(w):
        try:
            return d(w)
        except Exception as exc:  # surfaced distinctly from violations
            raise MartingaleEvaluationError(w, exc) from exc

    if isinstance(d, Martingale) and not isinstance(d, FunctionMartingale):
        return _validate_walker(d, depth)
    checked = 0
    for n in range(depth + 1):
        for w in all_strings(n):
            v = ev(w)
            checked += 1
            if v < 0:
                return ValidationReport(False, depth, checked, w, f"d({w!r}) = {v} < 0")
            if n < depth:
                a, b = ev(w + "0"), ev(w + "1")
                if a + b != 2 * v:
                    return ValidationReport(False, depth, checked, w,
                                            f"d(w0) + d(w1) = {a + b} != 2 d(w) = {2 * v}")
    return ValidationReport(True, depth, checked)


def _validate_walker(d: Martingale, depth: int) -> ValidationReport:
    """Same check as :func:`validate_martingale`, stepping walker states instead of
    re-evaluating every node from lambda."""
    def value(st, w):
        try:
            return d.capital(st).value()
        except Exception as exc:
            raise MartingaleEvaluationError(w, exc) from exc

    def step(st, w, bit):
        try:
            return d.step(st, bit)
        except Exception as exc:
            raise MartingaleEvaluationError(w + str(bit), exc) from exc

    try:
        root = d.start()
    except Exception as exc:
        raise MartingaleEvaluationError("", exc) from exc
    checked = 0
    stack = [("", root, value(root, ""))]
    while stack:
        w, st, v = stack.pop()
        checked += 1
        if v < 0:
            return ValidationReport(False, depth, checked, w, f"d({w!r}) = {v} < 0")
        if len(w) == depth:
            continue
        s0, s1 = step(st, w, 0), step(st, w, 1)
        a, b = value(s0, w + "0"), value(s1, w + "1")
        if a + b != 2 * v:
            return ValidationReport(False, depth, checked, w,
                                    f"d(w0) + d(w1) = {a + b} != 2 d(w) = {2 * v}")
        stack.append((w + "1", s1, b))
        stack.append((w + "0", s0, a))
    return ValidationReport(True, depth, checked)


class MartingaleEvaluationError(RuntimeError):
    def __init__(self, w: str, exc: Exception):
        super().__init__(f"evaluating martingale at {w!r} failed: {exc!r}")
        self.w = w


def validate_gale(d: Callable[[str], object], s, depth: int, mu: Optional[Measure] = None) -> ValidationReport:
    """Check ``d(w) mu(w)^s = d(w0) mu(w0)^s + d(w1) mu(w1)^s`` for ``|w| < depth``.

    Under Lebesgue measure the condition is ``d(w0) + d(w1) = 2^s d(w)``, decided
    exactly through ``q``-th powers for ``s = p/q``.  For other measures and
    non-integral ``s`` both sides are compared as intervals; nodes that stay
    indistinguishable at the precision cap are listed in ``notes``, not failed.
    """
    s = as_fraction(s)
    if s < 0:
        raise ValueError("s must be nonnegative")
    p, q = s.numerator, s.denominator
    two_p = Fraction(2) ** p
    undecided = []
    checked = 0
    for n in range(depth):
        for w in all_strings(n):
            v, a, b = (as_fraction(d(x)) for x in (w, w + "0", w + "1"))
            checked += 1
            if min(v, a, b) < 0:
                return ValidationReport(False, depth, checked, w, "negative capital")
            if mu is None:
                total = a + b
                ok = total == 0 if v == 0 else (total / v) ** q == two_p
                if not ok:
                    return ValidationReport(False, depth, checked, w,
                                            f"d(w0) + d(w1) = {total} != 2^{s} * {v}")
                continue
            lhs = _scaled_power(v, mu(w), s)
            left, right = _scaled_power(a, mu(w + "0"), s), _scaled_power(b, mu(w + "1"), s)
            c = compare_lazy(lhs, lambda prec: left(prec) + right(prec))
            if c is None:
                undecided.append(w)
            elif c != 0:
                return ValidationReport(False, depth, checked, w, "gale condition violated")
    return ValidationReport(True, depth, checked, notes=tuple(f"indistinguishable at {w!r}" for w in undecided))


def _scaled_power(c: Fraction, m: Fraction, s: Fraction):
    """Lazy enclosure of ``c * m**s`` for rationals ``c, m >= 0``."""
    def f(prec):
        if s == 0:
            return ApproxReal.exact(c)
        if c == 0 or m == 0:
            return ApproxReal.exact(0)
        if s.denominator == 1:
            return ApproxReal.exact(c * m ** int(s))
        p, q = s.numerator, s.denominator
        # floor(x^(1/q) * 2^prec) for x = numerator^p and x = denominator^p
        lo_n = integer_root(m.numerator ** p << (q * prec), q)
        lo_d = integer_root(m.denominator ** p << (q * prec), q)
        return ApproxReal(c * Fraction(lo_n, lo_d + 1), c * Fraction(lo_n + 1, lo_d), prec)
    return f


@dataclass(frozen=True)
class SGale:
    """s-gale ``d(w) = base(w) * 2**((s - 1)|w|)`` stored as (martingale, exponent).

    It is an s-gale exactly when ``base`` is a martingale, so every decision
    about ``d`` reduces to exact arithmetic on ``base``.
    """

    base: Martingale
    s: Fraction

    def __post_init__(self):
        object.__setattr__(self, "s", as_fraction(self.s))
        if self.s < 0:
            raise ValueError("s must be nonnegative")

    def with_exponent(self, s) -> "SGale":
        """Gale swap: the s'-gale ``d'`` with ``d(w) 2^{-s|w|} = d'(w) 2^{-s'|w|}``."""
        return SGale(self.base, as_fraction(s))

    def __call__(self, w: str, precision: int = 64):
        return sgale_value(self, w, precision)


def sgale_value(g: SGale, w: str, precision: int = 64):
    """``base(w) * 2**((s - 1)|w|)``: a Fraction when the exponent is integral,
    otherwise an :class:`ApproxReal` enclosure."""
    b = g.base(check_bits(w))
    e = (g.s - 1) * len(w)
    if e.denominator == 1:
        return b * Fraction(2) ** int(e)
    return pow2_interval(e, precision).scale(b)


@dataclass(frozen=True)
class Order:
    """The order ``h(n) = 2**((1 - s) n)``."""

    s: Fraction

    def __post_init__(self):
        object.__setattr__(self, "s", as_fraction(self.s))

    def exponent(self, n: int) -> Fraction:
        return (1 - self.s) * n

    def value(self, n: int, precision: int = 64):
        e = self.exponent(n)
        if e.denominator == 1:
            return Fraction(2) ** int(e)
        return pow2_interval(e, precision)

    def compare(self, capital: Capital, n: int) -> int:
        """Sign of ``capital - h(n)``, exact."""
        return capital.compare_pow2(self.exponent(n))


@dataclass
class OrderTrace:
    """``log2 d(X|n) - (1 - s) n`` for ``n = 0..horizon``.

    Zero capital is recorded as ``-inf`` (the path is dead for good).
    """

    s: Fraction
    values: np.ndarray
    tail_fraction: float
    running_max: np.ndarray = field(repr=False)
    running_min: np.ndarray = field(repr=False)
    tail_max: float = 0.0
    tail_min: float = 0.0
    final_sign: int = 0

    @property
    def horizon(self) -> int:
        return len(self.values) - 1

    def normalized(self) -> np.ndarray:
        """``values[n] / n`` for ``n >= 1``."""
        n = np.arange(1, len(self.values))
        return self.values[1:] / n

    def summary(self) -> dict:
        return {"horizon": self.horizon, "s": str(self.s), "tail_fraction": self.tail_fraction,
                "tail_max": _json_float(self.tail_max), "tail_min": _json_float(self.tail_min),
                "final_sign": self.final_sign}


def _json_float(x: float):
    return x if math.isfinite(x) else ("-inf" if x < 0 else "inf")


def _tail_start(horizon: int, tail_fraction: float) -> int:
    if not 0 < tail_fraction <= 1:
        raise ValueError("tail_fraction must lie in (0, 1]")
    return max(1, horizon - int(math.floor(tail_fraction * horizon)))


def order_success_trace(d: Union[SGale, Martingale], X, horizon: int, s=None,
                        tail_fraction: float = 0.5) -> OrderTrace:
    """Trace a martingale against the order ``2**((1 - s) n)`` along ``X``.

    Pass either an :class:`SGale` (its base and exponent are used) or a
    martingale together with ``s``.  ``final_sign`` compares ``d(X|horizon)``
    with ``h(horizon)`` exactly.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    if isinstance(d, SGale):
        base, s = d.base, d.s
    else:
        if s is None:
            raise ValueError("s is required when passing a bare martingale")
        base, s = d, as_fraction(s)
    order = Order(s)
    bits = _prefix_bits(X, horizon)
    slope = float(1 - s)
    vals = np.empty(horizon + 1)
    state = base.start()
    cap = base.capital(state)
    vals[0] = cap.log2()
    for i, b in enumerate(bits, start=1):
        state = base.step(state, b)
        cap = base.capital(state)
        vals[i] = cap.log2() - slope * i
    start = _tail_start(horizon, tail_fraction)
    tail = vals[start:]
    return OrderTrace(s=s, values=vals, tail_fraction=tail_fraction,
                      running_max=np.maximum.accumulate(vals),
                      running_min=np.minimum.accumulate(vals),
                      tail_max=float(tail.max()), tail_min=float(tail.min()),
                      final_sign=order.compare(cap, horizon))


def _prefix_bits(X, n: int) -> list[int]:
    if isinstance(X, str):
        check_bits(X)
        if len(X) < n:
            raise ValueError(f"sequence has only {len(X)} bits, need {n}")
        return [1 if ch == "1" else 0 for ch in X[:n]]
    if hasattr(X, "bits"):
        return X.bits(n).tolist()
    arr = list(X)[:n]
    if len(arr) < n:
        raise ValueError(f"sequence has only {len(arr)} bits, need {n}")
    return [int(b) for b in arr]


@dataclass
class KolmogorovLevel:
    n: int
    size: int
    measure: Fraction
    bound: Fraction
    antichain: list

    @property
    def ok(self) -> bool:
        return self.measure <= self.bound

    @property
    def slack(self) -> Fraction:
        return self.bound - self.measure

    def to_dict(self) -> dict:
        return {"n": self.n, "size": self.size, "measure": str(self.measure),
                "bound": str(self.bound), "slack": str(self.slack), "ok": self.ok}


@dataclass
class KolmogorovReport:
    depth: int
    levels: list

    @property
    def ok(self) -> bool:
        return all(lv.ok for lv in self.levels)

    @property
    def first_violation(self) -> Optional[KolmogorovLevel]:
        return next((lv for lv in self.levels if not lv.ok), None)

    def to_dict(self) -> dict:
        return {"depth": self.depth, "ok": self.ok, "levels": [lv.to_dict() for lv in self.levels]}


def verify_kolmogorov_inequality(d: Martingale, depth: int, partition_depth: int = 0,
                                 keep_antichains: bool = True) -> KolmogorovReport:
    """Exhaustive finite form of Kolmogorov's inequality.

    For each ``n <= depth``, ``B_n`` collects the strings (length <= depth) where
    ``d(w) / d(lambda)`` reaches ``2**n`` for the first time along their path,
    and its cylinder measure is compared exactly with ``2**-n``.  The cube is
    optionally scanned in ``2**partition_depth`` independent subtrees whose
    partial results are merged in prefix order.
    """
    if depth < 0:
        raise ValueError("depth must be >= 0")
    initial = d.initial_capital
    if initial <= 0:
        raise ValueError("initial capital must be positive")
    # counts[n] accumulates 2^(depth - |w|) over w in B_n
    counts = [0] * (depth + 1)
    chains: list[list[str]] = [[] for _ in range(depth + 1)]
    counts[0] = 1 << depth
    chains[0].append("")
    inv = 1 / initial

    root_state = d.start()
    roots = [("", root_state, 0)]
    split = min(partition_depth, depth)
    for _ in range(split):
        nxt = []
        for w, st, lvl in roots:
            for bit in (0, 1):
                st2 = d.step(st, bit)
                w2 = w + str(bit)
                lvl2 = _record(d, st2, w2, lvl, inv, depth, counts, chains, keep_antichains)
                nxt.append((w2, st2, lvl2))
        roots = nxt
    for w0, st0, lvl0 in roots:
        stack = [(w0, st0, lvl0)]
        while stack:
            w, st, lvl = stack.pop()
            if len(w) == depth:
                continue
            for bit in (1, 0):
                st2 = d.step(st, bit)
                w2 = w + str(bit)
                lvl2 = _record(d, st2, w2, lvl, inv, depth, counts, chains, keep_antichains)
                stack.append((w2, st2, lvl2))
    levels = []
    for n in range(depth + 1):
        chain = sorted(chains[n], key=lambda s: (len(s), s)) if keep_antichains else []
        levels.append(KolmogorovLevel(n, len(chains[n]) if keep_antichains else -1,
                                      Fraction(counts[n], 1 << depth), Fraction(1, 1 << n), chain))
    return KolmogorovReport(depth, levels)


def _record(d, state, w, level, inv, depth, counts, chains, keep):
    cap = d.capital(state)
    if cap.zero:
        return level
    fl = cap.times(inv).floor_log2() if inv != 1 else cap.floor_log2()
    if fl <= level:
        return level
    weight = 1 << (depth - len(w))
    for n in range(level + 1, min(fl, depth) + 1):
        counts[n] += weight
        if keep:
            chains[n].append(w)
    return fl
