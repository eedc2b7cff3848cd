from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from algdim.core import all_strings
from algdim.gales import (Capital, FunctionMartingale, MartingaleEvaluationError, Order, SGale,
                          all_in_on_zero, bernoulli_likelihood_martingale, constant_martingale,
                          order_success_trace, random_structured_martingale, sgale_value,
                          structured_martingale, validate_gale, validate_martingale,
                          verify_kolmogorov_inequality)
from algdim.sequences import bernoulli_seq, periodic


def test_validate_martingale_examples():
    assert validate_martingale(constant_martingale(), 10).ok
    assert validate_martingale(all_in_on_zero(), 8).ok
    bad = FunctionMartingale(lambda w: {"": 1, "0": 2, "1": 1}.get(w, 0))
    rep = validate_martingale(bad, 1)
    assert not rep.ok and rep.violation == ""


def test_evaluation_failure_is_distinct():
    def boom(w):
        if len(w) == 2:
            raise RuntimeError("no")
        return 1

    with pytest.raises(MartingaleEvaluationError):
        validate_martingale(FunctionMartingale(boom), 3)


def test_sgale_value_examples():
    d = bernoulli_likelihood_martingale(Fraction(1, 3))
    assert sgale_value(SGale(d, 1), "0110") == d("0110")
    assert sgale_value(SGale(constant_martingale(), Fraction(1, 2)), "01") == Fraction(1, 2)
    v = sgale_value(SGale(all_in_on_zero(), Fraction(1, 2)), "000")
    assert Fraction(2828, 1000) <= v.lower and v.upper <= Fraction(2829, 1000)


def test_bernoulli_likelihood_examples():
    assert all(bernoulli_likelihood_martingale(Fraction(1, 2))(w) == 1 for w in all_strings(5))
    d = bernoulli_likelihood_martingale(Fraction(1, 4))
    assert d("111") == Fraction(1, 8)
    assert d("000") == Fraction(27, 8)
    with pytest.raises(ValueError):
        bernoulli_likelihood_martingale(Fraction(1))


def test_structured_martingale_examples():
    assert all(structured_martingale([(0, 0)])(w) == 1 for w in all_strings(6))
    assert all(structured_martingale([(1, 0)])(w) == all_in_on_zero()(w) for w in all_strings(6))
    d = structured_martingale([(1, 0), (0, 0)])
    for w in all_strings(4):
        x = "".join("0" + b for b in w)  # zeros at even positions
        assert d(x) == 2 ** len(w)


@given(st.integers(0, 2**32), st.integers(1, 7))
@settings(max_examples=25, deadline=None)
def test_structured_martingales_are_valid(seed, period):
    assert validate_martingale(random_structured_martingale(seed, period), 10).ok


@given(st.integers(0, 1000), st.integers(0, 9))
@settings(max_examples=20, deadline=None)
def test_averaging_conservation(seed, n):
    d = random_structured_martingale(seed)
    assert sum(d(w) for w in all_strings(n)) / 2 ** n == d("")


def test_gale_swap_round_trip():
    g = SGale(bernoulli_likelihood_martingale(Fraction(1, 5)), Fraction(2, 3))
    back = g.with_exponent(Fraction(7, 4)).with_exponent(Fraction(2, 3))
    assert back == g
    assert all(back.base(w) == g.base(w) for w in all_strings(5))


def test_validate_gale():
    d = bernoulli_likelihood_martingale(Fraction(1, 4))
    assert validate_gale(SGale(d, 2), 2, 6).ok
    assert not validate_gale(d, 2, 3).ok
    # constant 1 is a 1-gale but not a 1/2-gale: 1 + 1 != 2^(1/2)
    assert validate_gale(lambda w: 1, 1, 4).ok
    assert not validate_gale(lambda w: 1, Fraction(1, 2), 2).ok


def test_kolmogorov_examples():
    rep = verify_kolmogorov_inequality(constant_martingale(), 8)
    assert rep.ok and all(lv.size == 0 for lv in rep.levels[1:])
    rep = verify_kolmogorov_inequality(all_in_on_zero(), 10)
    assert all(lv.antichain == ["0" * lv.n] and lv.slack == 0 for lv in rep.levels)
    rep = verify_kolmogorov_inequality(bernoulli_likelihood_martingale(Fraction(1, 4)), 16)
    assert rep.ok and all(lv.slack > 0 for lv in rep.levels[1:])


def test_kolmogorov_independent_of_partition():
    d = random_structured_martingale(4)
    a = verify_kolmogorov_inequality(d, 10)
    b = verify_kolmogorov_inequality(d, 10, partition_depth=3)
    assert a.to_dict() == b.to_dict()
    assert [lv.antichain for lv in a.levels] == [lv.antichain for lv in b.levels]


def test_kolmogorov_normalizes_initial_capital():
    rep = verify_kolmogorov_inequality(constant_martingale(5), 6)
    assert rep.ok and rep.levels[1].size == 0


def test_capital_floor_log2_and_compare():
    c = Capital.of(Fraction(27, 8))
    assert c.floor_log2() == 1
    assert c.compare_pow2(Fraction(3, 2)) == 1  # (27/8)^2 = 729/64 > 2^3
    assert Capital.of(0).floor_log2() is None


def test_order_success_trace_examples():
    t = order_success_trace(constant_martingale(), periodic("01"), 50, s=1)
    assert (t.values == 0).all()
    t = order_success_trace(SGale(all_in_on_zero(), 0), periodic("0"), 50)
    assert (t.values == 0).all() and t.final_sign == 0
    assert Order(Fraction(1, 2)).value(4) == 4


def test_order_success_trace_entropy():
    p = Fraction(1, 4)
    from math import log2
    h = -(0.25 * log2(0.25) + 0.75 * log2(0.75))
    d = bernoulli_likelihood_martingale(p)
    # s = H(1/4) approximated by a nearby rational
    s = Fraction(h).limit_denominator(10**6)
    t = order_success_trace(d, bernoulli_seq(p, 7, 100_000), 100_000, s=s)
    assert abs(t.values[-1] / 100_000) <= 0.02


def test_order_trace_dead_path_sentinel():
    t = order_success_trace(all_in_on_zero(), periodic("01"), 5, s=1)
    assert t.values[2] == float("-inf")
    assert t.summary()["tail_min"] == "-inf"
