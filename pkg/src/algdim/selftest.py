"""The invariant suite behind ``algdim selftest``.

Each property returns how many cases it checked and whether all held.  Depth
controls the exhaustive checks; the sampled checks use fixed seeds.
"""

from __future__ import annotations

import random
import tempfile
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable

import numpy as np

from .coding import ArithmeticCodec
from .core import (PrefixTrie, all_strings, bernoulli_measure, kraft_sum, lebesgue,
                   minimal_prefix_set, validate_measure)
from .dimension import (SliceCoder, brute_force_min_cover, compression_dim_estimate,
                        enumerate_slice, extract_learner_cover, min_cover_cost)
from .gales import (SGale, all_in_on_zero, bernoulli_likelihood_martingale, constant_martingale,
                    random_structured_martingale, validate_gale, validate_martingale,
                    verify_kolmogorov_inequality)
from .learners import (CostOracle, DoublingLearner, avg_witness, constant_learner, delay_learner,
                       staged_cap, union_learners, verify_delay, verify_measure_condition)
from .sequences import bernoulli_seq, periodic, read_sequence, write_sequence

__all__ = ["PropertyResult", "martingale_suite", "run_selftest"]


@dataclass
class PropertyResult:
    name: str
    passed: bool
    count: int
    seconds: float = 0.0
    detail: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "count": self.count,
                "detail": self.detail}


def martingale_suite(n_random: int = 10):
    """d = 1, all-in-on-0, Bernoulli(1/4) likelihood, and seeded random structured gamblers."""
    return ([constant_martingale(), all_in_on_zero(), bernoulli_likelihood_martingale(Fraction(1, 4))]
            + [random_structured_martingale(seed) for seed in range(n_random)])


def _measures(depth):
    ok = all(validate_measure(mu, depth).ok for mu in (lebesgue(), bernoulli_measure(Fraction(1, 3))))
    return ok, 2, {}


def _fairness(depth, suite):
    bad = [d.name for d in suite if not validate_martingale(d, depth).ok]
    return not bad, len(suite), {"failed": bad}


def _gales(depth, suite):
    depth = min(depth, 8)
    # integral exponents keep gale values exact
    bad = [f"{d.name}@s={s}" for d in suite[:5] for s in (0, 1, 2)
           if not validate_gale(SGale(d, s), s, depth).ok]
    return not bad, 15, {"failed": bad}


def _kolmogorov(depth, suite):
    bad = [d.name for d in suite if not verify_kolmogorov_inequality(d, depth, keep_antichains=False).ok]
    tight = verify_kolmogorov_inequality(all_in_on_zero(), depth, keep_antichains=False)
    equal = all(lv.slack == 0 for lv in tight.levels)
    return not bad and equal, len(suite), {"failed": bad, "all_in_on_0_tight": equal}


def _measure_condition(depth, suite):
    bad = [d.name for d in suite if not verify_measure_condition(DoublingLearner(d), depth).ok]
    rep = verify_measure_condition(constant_learner(True), depth)
    root_fails = rep.first_violation is not None and rep.first_violation.n == 1
    return not bad and root_fails, len(suite) + 1, {"failed": bad, "yes_at_root_fails_at_1": root_fails}


def _yes_count_identity(depth, suite):
    n = 0
    for d in suite[:5]:
        l = DoublingLearner(d)
        for m in range(min(depth, 8) + 1):
            for w in all_strings(m):
                n += 1
                if l.yes_count(w) != l.level(w):
                    return False, n, {"witness": w, "martingale": d.name}
    return True, n, {}


def _delay(depth, suite):
    tau = CostOracle.prefix_evaluations()
    for d in suite:
        l = DoublingLearner(d)
        rep = verify_delay(l, tau, depth)
        if not rep.ok or not verify_measure_condition(delay_learner(l, tau), depth).ok:
            return False, len(suite), {"martingale": d.name, **rep.to_dict()}
    return True, len(suite), {}


def _union(depth, suite):
    learners = [DoublingLearner(d) for d in suite[1:5]]
    pairs = [(a, b) for i, a in enumerate(learners) for b in learners[i + 1:]]
    for a, b in pairs:
        if not verify_measure_condition(union_learners(a, b, "decimated"), depth).ok:
            return False, len(pairs), {"pair": [a.name, b.name]}
    return True, len(pairs), {}


def _avg_witness(depth, suite):
    depth = min(depth, 8)
    n = 0
    for d in suite:
        dk, l = staged_cap(d), DoublingLearner(d)
        for m in range(1, depth + 1):
            for w in all_strings(m):
                vals = [avg_witness(dk, w, k) for k in range(m + 1)]
                n += 1
                if any(a > b for a, b in zip(vals, vals[1:])) or vals[-1] != Fraction(l.yes_count(w), m):
                    return False, n, {"martingale": d.name, "witness": w}
    return True, n, {}


def _slices(depth, suite):
    n_checked = 0
    for d in suite:
        l = DoublingLearner(d)
        for s in (Fraction(1, 4), Fraction(1, 2), Fraction(3, 4)):
            coder = SliceCoder(l, s)
            for n in range(1, depth + 1):
                sl = enumerate_slice(l, n, s)
                n_checked += 1
                if not sl.within_bound:
                    return False, n_checked, {"martingale": d.name, "s": str(s), "n": n}
                for w in sl.members:
                    code = coder.encode(w)
                    if len(code) > coder.code_length(n) or coder.decode(n, code) != w:
                        return False, n_checked, {"martingale": d.name, "witness": w}
    return True, n_checked, {}


def _learner_cover(depth, suite):
    depth = min(depth, 10)
    n = 0
    for d in suite:
        l = DoublingLearner(d)
        for s in (Fraction(1, 4), Fraction(1, 2), Fraction(3, 4)):
            for r in range(3):
                for k in range(4):
                    n += 1
                    if extract_learner_cover(l, k, r, s, depth).within_bound is False:
                        return False, n, {"martingale": d.name, "s": str(s), "r": r, "k": k}
    return True, n, {}


def _cover_dp(depth):
    rng = random.Random(12)
    n = 0
    for _ in range(30):
        leaves = [w for w in all_strings(3) if rng.random() < 0.5] or ["000"]
        g = PrefixTrie(leaves, 3)
        for s in (0, Fraction(1, 2), 1, Fraction(3, 2)):
            for k in range(4):
                n += 1
                sol = min_cover_cost(g, k, s)
                best, _ = brute_force_min_cover(g, k, s)
                if not _encloses(sol.cost, best):
                    return False, n, {"leaves": sorted(leaves), "s": str(s), "k": k}
    return True, n, {}


def _encloses(iv, x, eps_digits: int = 40) -> bool:
    """``x`` (an mpf) lies in the interval ``iv`` widened by ``10**-eps_digits``."""
    import mpmath
    with mpmath.workdps(eps_digits + 20):
        lo = mpmath.mpf(iv.lower.numerator) / iv.lower.denominator
        hi = mpmath.mpf(iv.upper.numerator) / iv.upper.denominator
        eps = mpmath.mpf(10) ** -eps_digits
        return lo - eps <= x <= hi + eps


def _kraft(depth):
    rng = random.Random(5)
    for i in range(200):
        strings = ["".join(rng.choice("01") for _ in range(rng.randint(1, depth))) for _ in range(rng.randint(1, 20))]
        if kraft_sum(minimal_prefix_set(strings)) > 1:
            return False, i + 1, {"strings": strings}
    return True, 200, {}


def _coder(depth):
    codec = ArithmeticCodec()
    codec1 = ArithmeticCodec(1)
    rng = np.random.default_rng(3)
    for i in range(20):
        bits = (rng.random(rng.integers(1, 2000)) < rng.random()).astype(np.uint8)
        codec.roundtrip(bits)
        codec1.roundtrip(bits)
    return True, 40, {}


def _sequences(depth):
    with tempfile.TemporaryDirectory() as tmp:
        X = bernoulli_seq(Fraction(1, 4), 7, 10_000)
        for packed in (False, True):
            path = Path(tmp) / f"seq{int(packed)}"
            write_sequence(path, X, 10_000, packed=packed)
            if not np.array_equal(read_sequence(path).bits(10_000), X.bits(10_000)):
                return False, 1, {"packed": packed}
    same = np.array_equal(bernoulli_seq(Fraction(1, 3), 9).bits(1000), bernoulli_seq(Fraction(1, 3), 9).bits(1000))
    return same, 3, {}


def _estimator_order(depth):
    seqs = [bernoulli_seq(Fraction(1, 4), 7, 20_000), periodic("01"), periodic("0")]
    for X in seqs:
        lo = compression_dim_estimate(X, ArithmeticCodec(), 20_000, "liminf")
        if lo.liminf > lo.limsup:
            return False, len(seqs), {"sequence": X.provenance}
    return True, len(seqs), {}


def run_selftest(depth: int = 12) -> list[PropertyResult]:
    """Run every property; exceptions are reported as failures."""
    if depth < 1:
        raise ValueError("depth must be >= 1")
    suite = martingale_suite()
    checks: list[tuple[str, Callable]] = [
        ("measure_validity", lambda: _measures(depth)),
        ("martingale_fairness", lambda: _fairness(depth, suite)),
        ("gale_validity", lambda: _gales(depth, suite)),
        ("kolmogorov_inequality", lambda: _kolmogorov(depth, suite)),
        ("measure_condition", lambda: _measure_condition(depth, suite)),
        ("yes_count_identity", lambda: _yes_count_identity(depth, suite)),
        ("delay_preserves_counts", lambda: _delay(depth, suite)),
        ("decimated_union_measure", lambda: _union(depth, suite)),
        ("avg_witness_stages", lambda: _avg_witness(depth, suite)),
        ("slice_bound_and_codes", lambda: _slices(depth, suite)),
        ("learner_cover_bound", lambda: _learner_cover(depth, suite)),
        ("cover_dp_optimality", lambda: _cover_dp(depth)),
        ("kraft_inequality", lambda: _kraft(depth)),
        ("coder_round_trip", lambda: _coder(depth)),
        ("sequence_round_trip", lambda: _sequences(depth)),
        ("estimator_ordering", lambda: _estimator_order(depth)),
    ]
    out = []
    for name, fn in checks:
        t0 = time.perf_counter()
        try:
            ok, count, detail = fn()
        except Exception as exc:  # reported, not raised
            ok, count, detail = False, 0, {"error": f"{type(exc).__name__}: {exc}"}
        out.append(PropertyResult(name, bool(ok), count, time.perf_counter() - t0, detail))
    return out
