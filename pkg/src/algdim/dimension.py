"""Finite-scale dimension computations.

Cover costs ``sum(2**(-s |w|))`` are handled in an exact algebra: for
``s = p/q`` every term ``2**(-s d)`` is ``2**-a * y**r`` with ``y = 2**(-1/q)``
and ``0 <= r < q``.  Because ``x**q - 2`` is irreducible over the rationals
(Eisenstein at 2), ``1, y, ..., y**(q-1)`` are linearly independent, so a cost
difference is zero exactly when every residue coefficient vanishes.  Nonzero
differences are signed by a float pass with a safety margin and, failing that,
by interval refinement of ``2**(-r/q)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence, Union

import numpy as np

from .coding import ArithmeticCodec, CoderRoundTripError
from .core import (
    DEFAULT_PRECISION,
    PRECISION_CAP,
    ApproxReal,
    PrefixTrie,
    as_fraction,
    check_bits,
    pow2_interval,
)
from .gales import _prefix_bits, _tail_start
from .learners import Learner

__all__ = [
    "BoxDimensionSummary",
    "CompressionEstimate",
    "CoverSolution",
    "LearnerCover",
    "SliceCoder",
    "SliceSet",
    "box_dimension_estimate",
    "brute_force_min_cover",
    "compare_cover_costs",
    "compression_dim_estimate",
    "cover_cost",
    "enumerate_slice",
    "extract_learner_cover",
    "hausdorff_estimate",
    "min_cover_cost",
    "slice_decode",
    "slice_encode",
]


class _PowerSums:
    """Exact arithmetic on ``sum(c_d * 2**(-s d)) + constant`` for a fixed rational ``s``."""

    def __init__(self, s, cap: int = PRECISION_CAP):
        s = as_fraction(s)
        if s < 0:
            raise ValueError("s must be nonnegative")
        self.s = s
        self.p, self.q = s.numerator, s.denominator
        self.cap = cap
        self.integral = self.q == 1

    def unit(self, d: int):
        if self.integral:
            return Fraction(1, 1 << (self.p * d))
        a, r = divmod(self.p * d, self.q)
        return {r: Fraction(1, 1 << a)}

    def const(self, c):
        c = as_fraction(c)
        return c if self.integral else ({0: c} if c else {})

    def zero(self):
        return Fraction(0) if self.integral else {}

    def add(self, x, y, sign: int = 1):
        if self.integral:
            return x + sign * y
        out = dict(x)
        for r, c in y.items():
            v = out.get(r, 0) + sign * c
            if v:
                out[r] = v
            else:
                out.pop(r, None)
        return out

    def unit_float(self, d: int) -> float:
        return 2.0 ** (-float(self.s) * d)

    def _residue_interval(self, r: int, prec: int) -> ApproxReal:
        return pow2_interval(Fraction(-r, self.q), prec)

    def sign(self, x) -> Optional[int]:
        """Sign of an exact element; ``None`` only if undecided at the precision cap."""
        if self.integral:
            return (x > 0) - (x < 0)
        if not x:
            return 0
        terms = sorted(x.items())
        mag = sum(abs(float(c)) * 2.0 ** (-r / self.q) for r, c in terms)
        est = math.fsum(float(c) * 2.0 ** (-r / self.q) for r, c in terms)
        if abs(est) > 1e-9 * mag:
            return 1 if est > 0 else -1
        prec = DEFAULT_PRECISION
        while True:
            lo = hi = Fraction(0)
            for r, c in terms:
                iv = self._residue_interval(r, prec)
                if c > 0:
                    lo += c * iv.lower
                    hi += c * iv.upper
                else:
                    lo += c * iv.upper
                    hi += c * iv.lower
            if lo > 0:
                return 1
            if hi < 0:
                return -1
            if prec >= self.cap:
                return None
            prec = min(2 * prec, self.cap)

    def interval(self, x, prec: int = DEFAULT_PRECISION) -> ApproxReal:
        if self.integral:
            return ApproxReal.exact(x)
        lo = hi = Fraction(0)
        for r, c in x.items():
            iv = self._residue_interval(r, prec)
            lo += c * (iv.lower if c > 0 else iv.upper)
            hi += c * (iv.upper if c > 0 else iv.lower)
        return ApproxReal(lo, hi, prec)


def cover_cost(strings: Sequence[str], s, prec: int = DEFAULT_PRECISION) -> ApproxReal:
    """``sum(2**(-s |w|))`` as an exact value (integer ``s``) or enclosure."""
    alg = _PowerSums(s)
    total = alg.zero()
    for w in strings:
        total = alg.add(total, alg.unit(len(w)))
    return alg.interval(total, prec)


@dataclass
class CoverSolution:
    """A prefix-free cover of a trie slice by strings of length at least ``k``."""

    antichain: list
    s: Fraction
    k: int
    cost: ApproxReal

    @property
    def depth_counts(self) -> dict:
        out: dict = {}
        for w in self.antichain:
            out[len(w)] = out.get(len(w), 0) + 1
        return dict(sorted(out.items()))

    def to_dict(self) -> dict:
        return {"s": str(self.s), "k": self.k,
                "cost_lo": float(self.cost.lower), "cost_hi": float(self.cost.upper),
                "antichain": list(self.antichain)}


class _CoverDP:
    """Bottom-up optimum cover of a trie for one exponent ``s``."""

    def __init__(self, gamma: PrefixTrie, k: int, s):
        if not gamma:
            raise ValueError("cannot cover an empty trie")
        if k > gamma.depth:
            raise ValueError(f"k = {k} exceeds trie depth {gamma.depth}: no admissible cover")
        if k < 0:
            raise ValueError("k must be >= 0")
        self.gamma, self.k = gamma, k
        self.alg = _PowerSums(s)
        self.value: dict = {}   # float estimate of the optimum at each node
        self.self_cover: dict = {}
        self._exact: dict = {}
        self.undecided = 0
        for w in sorted(gamma.nodes, key=len, reverse=True):
            self._solve(w)

    def _solve(self, w: str) -> None:
        d = len(w)
        kids = self.gamma.children(w)
        if not kids:
            self.self_cover[w] = True
            self.value[w] = self.alg.unit_float(d)
            return
        split = sum(self.value[c] for c in kids)
        if d < self.k:
            self.self_cover[w] = False
            self.value[w] = split
            return
        own = self.alg.unit_float(d)
        if abs(own - split) > 1e-9 * (own + split):
            take = own < split
        else:
            # near tie: decide exactly; equal or undecidable -> shallower cover
            self.self_cover[w] = False
            diff = self.alg.add(self.exact(w), self.alg.unit(d), sign=-1)
            sg = self.alg.sign(diff)
            if sg is None:
                self.undecided += 1
            take = sg is None or sg >= 0
            self._exact.pop(w, None)
        self.self_cover[w] = take
        self.value[w] = own if take else split

    def exact(self, w: str):
        """Exact cost of the current choice at ``w``."""
        if w in self._exact:
            return self._exact[w]
        if self.self_cover.get(w, False):
            v = self.alg.unit(len(w))
        else:
            v = self.alg.zero()
            for c in self.gamma.children(w):
                v = self.alg.add(v, self.exact(c))
        self._exact[w] = v
        return v

    def antichain(self) -> list:
        out, stack = [], [""]
        while stack:
            w = stack.pop()
            if self.self_cover[w]:
                out.append(w)
            else:
                stack.extend(reversed(self.gamma.children(w)))
        return sorted(out)


def min_cover_cost(gamma: PrefixTrie, k: int, s, prec: int = DEFAULT_PRECISION) -> CoverSolution:
    """Minimum of ``sum(2**(-s |w|))`` over prefix-free covers of the depth-``n``
    slice of ``gamma`` by strings of length at least ``k``.

    Ties (exact, or undecidable at the precision cap) go to the shallower cover.
    """
    dp = _CoverDP(gamma, k, s)
    cover = dp.antichain()
    return CoverSolution(cover, dp.alg.s, k, dp.alg.interval(_histogram_cost(dp.alg, cover), prec))


def _histogram_cost(alg: _PowerSums, strings):
    counts: dict = {}
    for w in strings:
        counts[len(w)] = counts.get(len(w), 0) + 1
    total = alg.zero()
    for d, c in counts.items():
        u = alg.unit(d)
        total = alg.add(total, u * c if alg.integral else {r: v * c for r, v in u.items()})
    return total


def compare_cover_costs(a: Sequence[str], b: Sequence[str], s) -> Optional[int]:
    """Exact sign of ``cost(a) - cost(b)`` at exponent ``s`` (``None`` only if
    undecided at the precision cap)."""
    alg = _PowerSums(s)
    return alg.sign(alg.add(_histogram_cost(alg, a), _histogram_cost(alg, b), sign=-1))


def _cost_vs_one(gamma: PrefixTrie, k: int, s) -> Optional[int]:
    dp = _CoverDP(gamma, k, s)
    return dp.alg.sign(dp.alg.add(dp.exact(""), dp.alg.const(1), sign=-1))


def hausdorff_estimate(gamma: PrefixTrie, k: int, tol=Fraction(1, 1024)) -> tuple:
    """Bracket ``(lo, hi)`` of width ``<= tol`` around the root of ``H^s_k(gamma) = 1``.

    The minimum cover cost is nonincreasing in ``s``; the bracket is found by
    bisection over dyadic rationals.  Returns ``(r, r)`` when a probe hits the
    root exactly.  This is a fixed-``k`` surrogate of Hausdorff dimension.
    """
    tol = as_fraction(tol)
    if tol <= 0:
        raise ValueError("tol must be positive")
    lo = Fraction(0)
    c = _cost_vs_one(gamma, k, lo)
    if c is not None and c <= 0:
        return lo, lo
    hi = Fraction(1)
    while True:
        c = _cost_vs_one(gamma, k, hi)
        if c == 0:
            return hi, hi
        if c is not None and c < 0:
            break
        lo, hi = hi, 2 * hi
        if hi > 64:
            raise ValueError("cover cost does not drop below 1; is k = 0?")
    while hi - lo > tol:
        mid = (lo + hi) / 2
        c = _cost_vs_one(gamma, k, mid)
        if c == 0:
            return mid, mid
        if c is None or c > 0:
            lo = mid
        else:
            hi = mid
    return lo, hi


def brute_force_min_cover(gamma: PrefixTrie, k: int, s, dps: int = 60) -> tuple:
    """Reference optimum by enumerating every admissible cut and pricing it with
    mpmath at ``dps`` decimal digits.

    A cut's cost depends only on how many of its strings sit at each depth, so
    cuts are enumerated up to that histogram (one representative each).
    Exponential; for tiny tries only.  Returns ``(cost, cut)``.
    """
    import mpmath

    depth = gamma.depth

    def add(h1, h2):
        return tuple(a + b for a, b in zip(h1, h2))

    def cuts(w):
        options = {}
        if len(w) >= k:
            h = [0] * (depth + 1)
            h[len(w)] = 1
            options[tuple(h)] = (w,)
        kids = gamma.children(w)
        if kids:
            combos = {tuple([0] * (depth + 1)): ()}
            for c in kids:
                sub = cuts(c)
                combos = {add(h1, h2): c1 + c2 for h1, c1 in combos.items() for h2, c2 in sub.items()}
            for h, cut in combos.items():
                options.setdefault(h, cut)
        return options

    if not gamma:
        raise ValueError("cannot cover an empty trie")
    s = as_fraction(s)
    with mpmath.workdps(dps):
        s_mp = mpmath.mpf(s.numerator) / s.denominator
        unit = [mpmath.power(2, -s_mp * d) for d in range(depth + 1)]
        best, best_cut = None, None
        for h, cut in sorted(cuts("").items()):
            val = mpmath.fsum(c * u for c, u in zip(h, unit) if c)
            if best is None or val < best:
                best, best_cut = val, cut
    if best is None:
        raise ValueError(f"k = {k} exceeds trie depth {depth}: no admissible cover")
    return best, sorted(best_cut)


@dataclass
class BoxDimensionSummary:
    values: dict
    n_min: int

    @property
    def estimate(self) -> float:
        """Max of ``log2 |slice_n| / n`` over ``n >= n_min`` (finite limsup surrogate)."""
        tail = [v for n, v in self.values.items() if n >= self.n_min]
        if not tail:
            raise ValueError("no slice counts at or beyond n_min")
        return max(tail)

    def to_dict(self) -> dict:
        return {"n_min": self.n_min, "estimate": self.estimate,
                "values": {str(n): v for n, v in self.values.items()}}


def box_dimension_estimate(gamma: Union[PrefixTrie, Sequence[int]], n_min: int = 1) -> BoxDimensionSummary:
    """Per-depth ``log2 |gamma|n| / n`` from a trie or a slice-count sequence
    (``counts[n]`` for ``n = 0, 1, ...``)."""
    counts = gamma.slice_counts() if isinstance(gamma, PrefixTrie) else list(gamma)
    if any(c < 1 for c in counts[1:]):
        raise ValueError("slice counts must be positive")
    values = {n: math.log2(counts[n]) / n for n in range(max(1, n_min), len(counts))}
    return BoxDimensionSummary(values, max(1, n_min))


@dataclass
class LearnerCover:
    """First-hitting strings with ``#yes(w) >= r + (1 - s)|w|`` and ``k <= |w| <= depth``."""

    antichain: list
    s: Fraction
    k: int
    r: int
    depth: int
    cost: ApproxReal
    bound: Fraction
    within_bound: Optional[bool]

    def to_dict(self) -> dict:
        return {"s": str(self.s), "k": self.k, "r": self.r, "depth": self.depth,
                "cost_lo": float(self.cost.lower), "cost_hi": float(self.cost.upper),
                "bound": str(self.bound), "within_bound": self.within_bound,
                "antichain": list(self.antichain)}


def extract_learner_cover(l: Learner, k: int, r: int, s, depth: int) -> LearnerCover:
    """Cover built from a learner's yes-counts, priced against the bound ``2**-r``.

    ``within_bound=False`` is a diagnostic: the cover costs more than ``2**-r``.
    """
    if k > depth:
        raise ValueError("k must not exceed depth")
    s = as_fraction(s)
    slope = 1 - s
    out = []
    state, yes = l.start()
    stack = [("", state, int(yes))]
    while stack:
        w, st, c = stack.pop()
        if len(w) >= k and c >= r + slope * len(w):
            out.append(w)
            continue
        if len(w) == depth:
            continue
        for bit in (1, 0):
            st2, y = l.step(st, bit)
            stack.append((w + str(bit), st2, c + y))
    out.sort(key=lambda x: (len(x), x))
    alg = _PowerSums(s)
    total = alg.zero()
    for w in out:
        total = alg.add(total, alg.unit(len(w)))
    bound = Fraction(1, 1 << r) if r >= 0 else Fraction(1 << -r)
    sg = alg.sign(alg.add(total, alg.const(bound), sign=-1))
    return LearnerCover(out, s, k, r, depth, alg.interval(total), bound,
                        None if sg is None else sg <= 0)


@dataclass
class SliceSet:
    """Length-``n`` strings whose path average is at least ``1 - s``."""

    n: int
    s: Fraction
    members: list
    within_bound: bool

    @property
    def bound_exponent(self) -> Fraction:
        return self.s * self.n

    def to_dict(self) -> dict:
        return {"n": self.n, "s": str(self.s), "size": len(self.members),
                "bound": f"2^({self.s * self.n})", "within_bound": self.within_bound}


class SliceCardinalityError(AssertionError):
    def __init__(self, slice_set: SliceSet):
        super().__init__(f"|T_{slice_set.n}| = {len(slice_set.members)} exceeds "
                         f"2^({slice_set.s * slice_set.n}) for a measure-verified learner")
        self.slice = slice_set


def _pow2_at_least(count: int, x: Fraction) -> bool:
    """``count <= 2**x`` exactly, for rational ``x >= 0``."""
    p, q = x.numerator, x.denominator
    return count ** q <= 1 << p


def enumerate_slice(l: Learner, n: int, s, verified: Optional[bool] = None) -> SliceSet:
    """All length-``n`` strings ``w`` with ``AVG_l(w) >= 1 - s``, lexicographically.

    For a measure-verified learner (``verified``, defaulting to the learner's
    ``measure_verified`` flag) a slice larger than ``2**(s n)`` raises
    :class:`SliceCardinalityError` carrying the offending slice.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    s = as_fraction(s)
    if s < 0:
        raise ValueError("s must be nonnegative")
    need = (1 - s) * n
    members = []
    state, yes = l.start()
    stack = [("", state, int(yes))]
    while stack:
        w, st, c = stack.pop()
        if len(w) == n:
            if c >= need:
                members.append(w)
            continue
        # remaining prefixes can add at most n - |w| more yes answers
        if c + n - len(w) < need:
            continue
        for bit in (1, 0):
            st2, y = l.step(st, bit)
            stack.append((w + str(bit), st2, c + y))
    ok = _pow2_at_least(len(members), s * n)
    result = SliceSet(n, s, members, ok)
    if (l.measure_verified if verified is None else verified) and not ok:
        raise SliceCardinalityError(result)
    return result


class SliceCoder:
    """Codes members of ``T_n`` by their index in ``T_n``, in exactly ``ceil(s n)`` bits."""

    def __init__(self, l: Learner, s):
        self.learner = l
        self.s = as_fraction(s)
        self._slices: dict = {}

    def code_length(self, n: int) -> int:
        return math.ceil(self.s * n)

    def slice(self, n: int) -> list:
        if n not in self._slices:
            self._slices[n] = enumerate_slice(self.learner, n, self.s, verified=False).members
        return self._slices[n]

    def encode(self, w: str) -> str:
        check_bits(w)
        members = self.slice(len(w))
        i = _bisect_index(members, w)
        if i is None:
            raise ValueError(f"{w!r} is not in the slice T_{len(w)} at s = {self.s}")
        width = self.code_length(len(w))
        if i >= 1 << width:
            raise ValueError(f"T_{len(w)} has {len(members)} members; {width} bits cannot index them")
        return format(i, "b").zfill(width) if width else ""

    def decode(self, n: int, code: str) -> str:
        check_bits(code)
        if len(code) != self.code_length(n):
            raise ValueError(f"code for n = {n} must have {self.code_length(n)} bits, got {len(code)}")
        i = int(code, 2) if code else 0
        members = self.slice(n)
        if i >= len(members):
            raise ValueError(f"index {i} out of range for T_{n} of size {len(members)}")
        return members[i]


def _bisect_index(sorted_list: list, x: str) -> Optional[int]:
    import bisect
    i = bisect.bisect_left(sorted_list, x)
    return i if i < len(sorted_list) and sorted_list[i] == x else None


def slice_encode(l: Learner, s, w: str) -> str:
    return SliceCoder(l, s).encode(w)


def slice_decode(l: Learner, s, n: int, code: str) -> str:
    return SliceCoder(l, s).decode(n, code)


@dataclass
class CompressionEstimate:
    """Code-length ratios ``codelen(X|n) / n`` and their tail extremes.

    Code lengths are achievable lengths of a real code, so every ratio
    upper-bounds the (uncomputable) plain complexity ratio up to an additive
    ``O(log n) / n`` for describing ``n``.
    """

    coder: str
    mode: str
    codelen: np.ndarray
    tail_fraction: float
    liminf: float
    limsup: float
    note: str = "upper bound: coder lengths over-approximate Kolmogorov complexity"

    @property
    def horizon(self) -> int:
        return len(self.codelen) - 1

    @property
    def estimate(self) -> float:
        return self.liminf if self.mode == "liminf" else self.limsup

    def ratios(self) -> np.ndarray:
        n = np.arange(1, len(self.codelen))
        return self.codelen[1:] / n

    def summary(self) -> dict:
        return {"coder": self.coder, "mode": self.mode, "horizon": self.horizon,
                "tail_fraction": self.tail_fraction, "estimate": self.estimate,
                "liminf": self.liminf, "limsup": self.limsup, "note": self.note}

    def write_csv(self, path, every: int = 1) -> None:
        rows = ["n,codelen,ratio"]
        idx = list(range(1, self.horizon + 1, max(1, every)))
        if idx[-1] != self.horizon:
            idx.append(self.horizon)
        for n in idx:
            rows.append(f"{n},{int(self.codelen[n])},{self.codelen[n] / n:.10g}")
        with open(path, "w", encoding="ascii") as fh:
            fh.write("\n".join(rows) + "\n")


def compression_dim_estimate(X, coder: Optional[ArithmeticCodec] = None, horizon: int = 1,
                             mode: str = "liminf", tail_fraction: float = 0.5,
                             verify: bool = True) -> CompressionEstimate:
    """Estimate ``liminf`` (``dim``) or ``limsup`` (``Dim``) of ``codelen(X|n)/n``.

    ``X`` is encoded once; termination-inclusive code lengths of every prefix are
    read off the encoder.  With ``verify`` the full code is decoded and any
    mismatch raises :class:`CoderRoundTripError`.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    if mode not in ("liminf", "limsup"):
        raise ValueError(f"unknown mode {mode!r}")
    coder = coder or ArithmeticCodec()
    bits = np.asarray(_prefix_bits(X, horizon), dtype=np.uint8)
    code, lengths = coder.encode(bits, checkpoints=True)
    if verify:
        coder.roundtrip(bits, code)
    start = _tail_start(horizon, tail_fraction)
    ratios = lengths[start:] / np.arange(start, horizon + 1)
    return CompressionEstimate(coder=coder.name, mode=mode, codelen=lengths,
                               tail_fraction=tail_fraction,
                               liminf=float(ratios.min()), limsup=float(ratios.max()))
