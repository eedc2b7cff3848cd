"""Learning functions on bit strings and the machinery built around them.

A learner answers yes/no on every finite string.  Like martingales, learners
are walkers: ``start()`` returns ``(state, answer at lambda)`` and
``step(state, bit)`` returns ``(state, answer at the extended string)``.  States
are immutable, so exhaustive scans branch on them freely.

Yes-counts always include the answer at lambda, so ``yes_count(w)`` counts yes
answers over all ``|w| + 1`` prefixes of ``w``.
"""

from __future__ import annotations

import math
from functools import lru_cache
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Optional, Union

import numpy as np

from .core import all_strings, check_bits, floor_log2
from .gales import Capital, Martingale, _prefix_bits, _tail_start

__all__ = [
    "CostOracle",
    "DelayReport",
    "DelayedLearner",
    "DensityTrace",
    "DoublingLearner",
    "FunctionLearner",
    "Learner",
    "MeasureReport",
    "StagedMartingale",
    "UnionLearner",
    "avg_witness",
    "build_doubling_learner",
    "compare_doubling_rules",
    "constant_learner",
    "delay_learner",
    "detection_report",
    "learner_from_yes_set",
    "literal_doubling_positions",
    "path_average",
    "staged_cap",
    "union_learners",
    "verify_delay",
    "verify_measure_condition",
]


class Learner:
    """Base learning function.  Subclasses implement ``start`` and ``step``."""

    name = "learner"
    measure_verified = False

    def start(self):
        raise NotImplementedError

    def step(self, state, bit: int):
        raise NotImplementedError

    def answers(self, w: str) -> list[bool]:
        """Answers at every prefix of ``w``, lambda first."""
        check_bits(w)
        state, yes = self.start()
        out = [yes]
        for ch in w:
            state, yes = self.step(state, 1 if ch == "1" else 0)
            out.append(yes)
        return out

    def __call__(self, w: str) -> bool:
        return self.answers(w)[-1]

    def yes_count(self, w: str) -> int:
        return sum(self.answers(w))

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.name})"


class FunctionLearner(Learner):
    """Learner backed by an arbitrary predicate on strings."""

    def __init__(self, func: Callable[[str], bool], name: str = "function"):
        self._func = func
        self.name = name

    def __call__(self, w: str) -> bool:
        return bool(self._func(check_bits(w)))

    def start(self):
        return "", bool(self._func(""))

    def step(self, state, bit):
        w = state + ("1" if bit else "0")
        return w, bool(self._func(w))


def constant_learner(answer: bool) -> FunctionLearner:
    return FunctionLearner(lambda w: answer, name="yes" if answer else "no")


def learner_from_yes_set(yes: Iterable[str], name: str = "") -> FunctionLearner:
    """Learner answering yes exactly on the given strings."""
    ys = frozenset(check_bits(w) for w in yes)
    return FunctionLearner(ys.__contains__, name=name or f"yes-set({len(ys)})")


class DoublingLearner(Learner):
    """Milestone learner of a martingale: yes whenever the running maximum of the
    capital reaches a new power of two (at least 2).

    The yes-count at ``w`` is ``max(0, floor(log2 max_{v <= w} d(v)))``.
    """

    measure_verified = True

    def __init__(self, d: Martingale):
        if d.initial_capital != 1:
            raise ValueError(f"doubling learner needs d(lambda) = 1, got {d.initial_capital}")
        self.martingale = d
        self.name = f"doubling({d.name})"

    def start(self):
        return (self.martingale.start(), 0), False

    def step(self, state, bit):
        mstate, level = state
        mstate = self.martingale.step(mstate, bit)
        fl = self.martingale.capital(mstate).floor_log2()
        if fl is not None and fl > level:
            return (mstate, fl), True
        return (mstate, level), False

    def level(self, w: str) -> int:
        """``max(0, floor(log2 running max))`` at ``w``."""
        state, _ = self.start()
        for ch in check_bits(w):
            state, _ = self.step(state, 1 if ch == "1" else 0)
        return state[1]


def build_doubling_learner(d: Martingale) -> DoublingLearner:
    return DoublingLearner(d)


def literal_doubling_positions(capitals) -> list[int]:
    """Yes positions of the doubling rule read literally off a capital path.

    Position ``m`` fires iff ``d(X|m) >= 2 d(X|j)`` for some proper prefix length
    ``j`` that is not before the last firing position.  Used only to compare
    against the milestone rule.
    """
    caps = [c.value() if isinstance(c, Capital) else Fraction(c) for c in capitals]
    out = []
    window_min = None
    for m, v in enumerate(caps):
        fire = window_min is not None and v >= 2 * window_min
        if fire:
            out.append(m)
            window_min = v
        else:
            window_min = v if window_min is None else min(window_min, v)
    return out


def compare_doubling_rules(d: Martingale, bits) -> dict:
    """Yes positions under the milestone rule and the literal rule along ``bits``."""
    caps = d.capitals(bits)
    milestone = []
    level = 0
    for m, c in enumerate(caps):
        fl = c.floor_log2()
        if m > 0 and fl is not None and fl > level:
            milestone.append(m)
            level = fl
    literal = literal_doubling_positions(caps)
    return {"milestone": milestone, "literal": literal, "agree": milestone == literal}


def path_average(l: Learner, w: str) -> Fraction:
    """Sum of answers over the ``|w| + 1`` prefixes of ``w``, divided by ``|w|``.

    Defined as 0 at lambda.  Can exceed 1 when the learner says yes at lambda.
    """
    if w == "":
        return Fraction(0)
    return Fraction(l.yes_count(w), len(w))


@dataclass
class MeasureLevel:
    n: int
    count: int
    measure: Fraction
    bound: Fraction

    @property
    def ok(self) -> bool:
        return self.measure <= self.bound

    @property
    def slack(self) -> Fraction:
        return self.bound - self.measure

    def to_dict(self) -> dict:
        return {"n": self.n, "count": self.count, "measure": str(self.measure),
                "bound": str(self.bound), "slack": str(self.slack), "ok": self.ok}


@dataclass
class MeasureReport:
    """Per-``n`` exact measures of ``{Y : at least n yes answers up to depth}``."""

    depth: int
    histogram: list
    levels: list
    witness: Optional[list] = None

    @property
    def ok(self) -> bool:
        return all(lv.ok for lv in self.levels)

    @property
    def first_violation(self) -> Optional[MeasureLevel]:
        return next((lv for lv in self.levels if not lv.ok), None)

    def to_dict(self) -> dict:
        v = self.first_violation
        return {"depth": self.depth, "ok": self.ok,
                "first_violation": None if v is None else v.n,
                "witness": self.witness,
                "levels": [lv.to_dict() for lv in self.levels]}


def _yes_histogram(l: Learner, depth: int, partition_depth: int = 0) -> list[int]:
    """hist[c] = number of length-``depth`` strings with exactly ``c`` yes answers."""
    hist = [0] * (depth + 2)
    state, yes = l.start()
    roots = [(state, int(yes), 0)]
    split = min(partition_depth, depth)
    for _ in range(split):
        roots = [(st2, c + y2, m + 1)
                 for st, c, m in roots
                 for st2, y2 in (l.step(st, 0), l.step(st, 1))]
    for root in roots:
        stack = [root]
        while stack:
            st, c, m = stack.pop()
            if m == depth:
                hist[c] += 1
                continue
            for bit in (1, 0):
                st2, y = l.step(st, bit)
                stack.append((st2, c + y, m + 1))
    return hist


def _first_hits(l: Learner, depth: int, n: int) -> list[str]:
    """Minimal strings (length <= depth) whose yes-count reaches ``n``."""
    out = []
    state, yes = l.start()
    stack = [("", state, int(yes))]
    while stack:
        w, st, c = stack.pop()
        if c >= n:
            out.append(w)
            continue
        if len(w) == depth:
            continue
        for bit in (1, 0):
            st2, y = l.step(st, bit)
            stack.append((w + str(bit), st2, c + y))
    return sorted(out, key=lambda s: (len(s), s))


def verify_measure_condition(l: Learner, depth: int, partition_depth: int = 0) -> MeasureReport:
    """Exact check of ``lambda({Y : #yes >= n}) <= 2**-n`` using prefixes up to ``depth``.

    Counts only grow with the horizon, so a failure here is a definitive
    refutation, while a pass is a necessary condition at this depth.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    hist = _yes_histogram(l, depth, partition_depth)
    total = 1 << depth
    levels = []
    tail = sum(hist)
    for n in range(depth + 2):
        if n > 0:
            tail -= hist[n - 1]
        levels.append(MeasureLevel(n, tail, Fraction(tail, total), Fraction(1, 1 << n)))
    report = MeasureReport(depth, hist, levels)
    bad = report.first_violation
    if bad is not None:
        report.witness = _first_hits(l, depth, bad.n)
    return report


class CostOracle:
    """Step count at which a learner's evaluator first reports yes at a string.

    Wraps a mapping or a callable; a missing value at a yes-point is an error.
    """

    def __init__(self, costs: Union[Mapping[str, int], Callable[[str], Optional[int]]], name: str = "oracle"):
        self._get = costs.get if isinstance(costs, Mapping) else costs
        self.name = name

    def __call__(self, w: str) -> int:
        t = self._get(w)
        if t is None:
            raise MissingCostError(w)
        if int(t) < 1:
            raise ValueError(f"cost at {w!r} must be a positive integer, got {t}")
        return int(t)

    @classmethod
    def prefix_evaluations(cls) -> "CostOracle":
        """Charge ``|w| + 1``: the number of prefix evaluations a walker makes to answer at ``w``."""
        return cls(lambda w: len(w) + 1, name="prefix-evaluations")


class MissingCostError(KeyError):
    def __init__(self, w: str):
        super().__init__(f"cost oracle has no value at yes-point {w!r}")
        self.w = w


class DelayedLearner(Learner):
    """Answers yes at ``w`` iff some proper prefix ``v`` had ``l(v) = yes`` and
    ``tau(v) == |w| - |v|``.  Coinciding firing lengths merge into one yes."""

    def __init__(self, l: Learner, tau: CostOracle):
        self.inner = l
        self.tau = tau
        self.name = f"delay({l.name},{tau.name})"
        self.measure_verified = l.measure_verified

    def start(self):
        st, yes = self.inner.start()
        pending = frozenset([self.tau("")]) if yes else frozenset()
        return (st, "", pending), False

    def step(self, state, bit):
        st, w, pending = state
        w = w + ("1" if bit else "0")
        m = len(w)
        fire = m in pending
        if fire:
            pending = pending - {m}
        st, yes = self.inner.step(st, bit)
        if yes:
            pending = pending | {m + self.tau(w)}
        return (st, w, pending), fire


def delay_learner(l: Learner, tau: Optional[CostOracle] = None) -> DelayedLearner:
    return DelayedLearner(l, tau or CostOracle.prefix_evaluations())


@dataclass
class DelayReport:
    """Exhaustive comparison of a learner and its delayed version up to ``depth``.

    ``increases`` counts strings where the delayed learner has more yes answers
    than the original; ``mismatches`` counts strings where its count differs from
    the number of original yes-points whose firing length is within ``depth``;
    ``collisions`` counts strings on which two yes-points share a firing length.
    """

    depth: int
    checked: int
    increases: int
    mismatches: int
    collisions: int
    witness: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.increases == 0 and self.mismatches == 0

    def to_dict(self) -> dict:
        return {"depth": self.depth, "checked": self.checked, "increases": self.increases,
                "mismatches": self.mismatches, "collisions": self.collisions,
                "witness": self.witness, "ok": self.ok}


def verify_delay(l: Learner, tau: CostOracle, depth: int) -> DelayReport:
    """Walk every string of length ``depth`` through ``l`` and its delayed version.

    Mismatches on strings with a collision are expected (merged answers) and
    are not counted.
    """
    dl = DelayedLearner(l, tau)
    report = DelayReport(depth, 0, 0, 0, 0)
    ist, iy = l.start()
    dst, dy = dl.start()
    fires = (tau(""),) if iy else ()
    stack = [("", ist, dst, int(iy), int(dy), fires)]
    while stack:
        w, ist, dst, ic, dc, fires = stack.pop()
        if len(w) == depth:
            report.checked += 1
            due = [f for f in fires if f <= depth]
            collided = len(set(due)) < len(due)
            report.collisions += collided
            bad = False
            if dc > ic:
                report.increases += 1
                bad = True
            if not collided and dc != len(due):
                report.mismatches += 1
                bad = True
            if bad and report.witness is None:
                report.witness = w
            continue
        for bit in (1, 0):
            v = w + str(bit)
            ist2, iy2 = l.step(ist, bit)
            dst2, dy2 = dl.step(dst, bit)
            f2 = fires + (len(v) + tau(v),) if iy2 else fires
            stack.append((v, ist2, dst2, ic + iy2, dc + dy2, f2))
    return report


class UnionLearner(Learner):
    """Union of two learners.

    ``mode="paper"``: yes when either learner says yes, except the first yes of
    each learner along the path, which is suppressed.

    ``mode="decimated"``: number the firings of the pointwise union along the
    path 1, 2, 3, ...; answer yes at firings 3, 5, 7, ...  Having ``n`` yes answers
    then forces ``2n + 1`` union firings, so one of the two learners fired at
    least ``n + 1`` times and ``lambda(#yes >= n) <= 2 * 2**-(n+1) = 2**-n``.
    """

    def __init__(self, l1: Learner, l2: Learner, mode: str = "paper"):
        if mode not in ("paper", "decimated"):
            raise ValueError(f"unknown union mode {mode!r}")
        self.l1, self.l2, self.mode = l1, l2, mode
        self.name = f"union[{mode}]({l1.name},{l2.name})"
        self.measure_verified = mode == "decimated" and l1.measure_verified and l2.measure_verified

    def _answer(self, seen1, seen2, fired, y1, y2):
        if self.mode == "paper":
            yes = (y1 and seen1) or (y2 and seen2)
            return yes, (seen1 or y1, seen2 or y2, fired)
        if y1 or y2:
            fired += 1
            return fired >= 3 and fired % 2 == 1, (seen1, seen2, fired)
        return False, (seen1, seen2, fired)

    def start(self):
        s1, y1 = self.l1.start()
        s2, y2 = self.l2.start()
        yes, flags = self._answer(False, False, 0, y1, y2)
        return (s1, s2) + flags, yes

    def step(self, state, bit):
        s1, s2, seen1, seen2, fired = state
        s1, y1 = self.l1.step(s1, bit)
        s2, y2 = self.l2.step(s2, bit)
        yes, flags = self._answer(seen1, seen2, fired, y1, y2)
        return (s1, s2) + flags, yes


def union_learners(l1: Learner, l2: Learner, mode: str = "paper") -> UnionLearner:
    return UnionLearner(l1, l2, mode)


class StagedMartingale:
    """Monotone approximation ``(w, k) -> rational`` from below of a capital function.

    ``limit``, when given, is the exact function being approximated.
    """

    def __init__(self, func: Callable[[str, int], Fraction], limit: Optional[Callable[[str], Fraction]] = None,
                 name: str = "staged"):
        self._func = func
        self.limit = limit
        self.name = name

    def __call__(self, w: str, k: int) -> Fraction:
        return Fraction(self._func(w, k))

    def is_monotone(self, depth: int, stages: int) -> bool:
        """Check ``dk(w, k) <= dk(w, k + 1)`` (and ``<= limit`` if known) exhaustively."""
        for n in range(depth + 1):
            for w in all_strings(n):
                vals = [self(w, k) for k in range(stages + 1)]
                if any(a > b for a, b in zip(vals, vals[1:])):
                    return False
                if self.limit is not None and vals[-1] > self.limit(w):
                    return False
        return True


def staged_cap(d: Martingale) -> StagedMartingale:
    """``dk(w, k) = min(d(w), 2**k)``: exact from stage ``|w|`` on for fair martingales with ``d(lambda) = 1``."""
    value = lru_cache(maxsize=1 << 16)(d)

    def capped(w, k):
        v = value(w)
        return v if v.numerator < v.denominator << k else Fraction(1 << k)

    return StagedMartingale(capped, limit=d, name=f"cap({d.name})")


def avg_witness(dk: StagedMartingale, w: str, k: int) -> Fraction:
    """Stage-``k`` lower approximation of the doubling learner's path average.

    ``max(0, max_{v <= w} floor(log2 dk(v, k))) / |w|``; nondecreasing in ``k``.
    """
    check_bits(w)
    if not w:
        raise ValueError("avg_witness needs |w| >= 1")
    best = 0
    for i in range(len(w) + 1):
        v = dk(w[:i], k)
        if v > 0:
            best = max(best, floor_log2(v))
    return Fraction(best, len(w))


@dataclass
class DensityTrace:
    """Per-``n`` yes counts and path averages of a learner along a sequence.

    ``yes_count[n]`` counts yes answers at the prefixes of lengths ``0..n``; the
    path average at ``n >= 1`` is ``yes_count[n] / n`` and 0 at ``n = 0``.
    """

    learner: str
    mode: str
    yes_count: np.ndarray
    yes_positions: np.ndarray
    tail_fraction: float
    tail_max: float
    tail_min: float

    @property
    def horizon(self) -> int:
        return len(self.yes_count) - 1

    @property
    def total_yes(self) -> int:
        return int(self.yes_count[-1])

    @property
    def s_weak(self) -> float:
        return 1.0 - self.tail_max

    @property
    def s_strong(self) -> float:
        return 1.0 - self.tail_min

    def average(self, n: int) -> Fraction:
        return Fraction(int(self.yes_count[n]), n) if n else Fraction(0)

    def averages(self) -> np.ndarray:
        n = np.arange(len(self.yes_count), dtype=float)
        out = np.zeros(len(self.yes_count))
        out[1:] = self.yes_count[1:] / n[1:]
        return out

    def yes_after(self, n: int) -> int:
        """Number of yes answers at prefix lengths strictly greater than ``n``."""
        return int(self.yes_count[-1] - self.yes_count[min(n, self.horizon)])

    def summary(self) -> dict:
        return {"horizon": self.horizon, "tail_fraction": self.tail_fraction,
                "tail_max": self.tail_max, "tail_min": self.tail_min,
                "s_weak": self.s_weak, "s_strong": self.s_strong}

    def write_csv(self, path, every: int = 1) -> None:
        """CSV ``n,yes_count,avg_num,avg_den,avg_float`` (every ``every``-th row plus the last)."""
        avgs = self.averages()
        rows = ["n,yes_count,avg_num,avg_den,avg_float"]
        idx = list(range(0, self.horizon + 1, max(1, every)))
        if idx[-1] != self.horizon:
            idx.append(self.horizon)
        for n in idx:
            f = self.average(n)
            rows.append(f"{n},{int(self.yes_count[n])},{f.numerator},{f.denominator},{avgs[n]:.10g}")
        with open(path, "w", encoding="ascii") as fh:
            fh.write("\n".join(rows) + "\n")


def detection_report(l: Learner, X, horizon: int, mode: str = "s_learn",
                     tail_fraction: float = 0.5) -> DensityTrace:
    """Run ``l`` along ``X`` up to ``horizon`` and summarize its yes answers.

    The tail window is the last ``tail_fraction`` of the horizon; its max and min
    path averages stand in for the limsup and liminf.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    if mode not in ("weak", "s_learn"):
        raise ValueError(f"unknown mode {mode!r}")
    bits = _prefix_bits(X, horizon)
    counts = np.empty(horizon + 1, dtype=np.int64)
    state, yes = l.start()
    c = int(yes)
    counts[0] = c
    positions = [0] if yes else []
    step = l.step
    for m, b in enumerate(bits, start=1):
        state, yes = step(state, b)
        if yes:
            c += 1
            positions.append(m)
        counts[m] = c
    start = _tail_start(horizon, tail_fraction)
    tail = counts[start:] / np.arange(start, horizon + 1)
    return DensityTrace(learner=l.name, mode=mode, yes_count=counts,
                        yes_positions=np.array(positions, dtype=np.int64),
                        tail_fraction=tail_fraction,
                        tail_max=float(tail.max()), tail_min=float(tail.min()))
