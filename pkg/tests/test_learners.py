from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from algdim.core import all_strings, floor_log2
from algdim.gales import (all_in_on_zero, bernoulli_likelihood_martingale, constant_martingale,
                          random_structured_martingale)
from algdim.learners import (CostOracle, DoublingLearner, FunctionLearner, MissingCostError,
                             StagedMartingale, avg_witness, compare_doubling_rules, constant_learner,
                             delay_learner, detection_report, learner_from_yes_set,
                             literal_doubling_positions, path_average, staged_cap, union_learners,
                             verify_delay, verify_measure_condition)
from algdim.sequences import bernoulli_seq, periodic


def yes_lengths(l, w):
    return [i for i, a in enumerate(l.answers(w)) if a]


def test_doubling_learner_examples():
    assert not any(DoublingLearner(constant_martingale())(w) for w in all_strings(6))
    l = DoublingLearner(all_in_on_zero())
    assert yes_lengths(l, "0" * 6) == [1, 2, 3, 4, 5, 6]
    assert l.yes_count("0" * 6) == 6
    assert yes_lengths(DoublingLearner(bernoulli_likelihood_martingale(Fraction(1, 4))), "00000") == [2, 4]
    with pytest.raises(ValueError):
        DoublingLearner(constant_martingale(2))


@given(st.integers(0, 500))
@settings(max_examples=15, deadline=None)
def test_yes_count_identity(seed):
    d = random_structured_martingale(seed)
    l = DoublingLearner(d)
    for w in all_strings(7):
        running = max(d(w[:i]) for i in range(len(w) + 1))
        expect = max(0, floor_log2(running)) if running > 0 else 0
        assert l.yes_count(w) == expect == l.level(w)


def test_doubling_rule_comparator():
    assert literal_doubling_positions([1, 3, 5]) == [1]
    cmp = compare_doubling_rules(all_in_on_zero(), [0, 0, 0])
    assert cmp["milestone"] == [1, 2, 3] and cmp["agree"]
    assert literal_doubling_positions([1, Fraction(1, 2), 1, Fraction(1, 2), 1]) == [2, 4]


def test_path_average_examples():
    assert path_average(constant_learner(False), "0101") == 0
    assert path_average(constant_learner(True), "0101") == Fraction(5, 4)
    assert path_average(DoublingLearner(all_in_on_zero()), "0000") == 1
    assert path_average(constant_learner(True), "") == 0


def test_measure_condition_examples():
    assert verify_measure_condition(constant_learner(False), 8).ok
    rep = verify_measure_condition(constant_learner(True), 8)
    assert rep.first_violation.n == 1 and rep.witness == [""]
    rep = verify_measure_condition(DoublingLearner(all_in_on_zero()), 16)
    assert rep.ok
    assert all(lv.measure == Fraction(1, 2 ** lv.n) for lv in rep.levels if lv.n <= 16)


def test_measure_condition_partition_invariant():
    l = DoublingLearner(random_structured_martingale(9))
    a = verify_measure_condition(l, 12)
    b = verify_measure_condition(l, 12, partition_depth=8)
    assert a.to_dict() == b.to_dict()


def test_delay_examples():
    assert not any(delay_learner(constant_learner(False))(w) for w in all_strings(5))
    l = learner_from_yes_set(["01"])
    dl = delay_learner(l, CostOracle({"01": 3}))
    for w in all_strings(7):
        expect = [5] if w.startswith("01") else []
        assert yes_lengths(dl, w) == expect
    assert verify_measure_condition(dl, 7).levels[1].measure == Fraction(1, 4)


def test_delay_collision_merges():
    # 0 (tau 2) and 01 (tau 1) both fire at length |0| + 2 = |01| + 1 = 3
    l = learner_from_yes_set(["0", "01"])
    dl = delay_learner(l, CostOracle({"0": 2, "01": 1}))
    assert yes_lengths(dl, "0110") == [3]
    assert l.yes_count("0110") == 2 and dl.yes_count("0110") == 1
    rep = verify_delay(l, CostOracle({"0": 2, "01": 1}), 4)
    assert rep.increases == 0 and rep.collisions > 0


def test_delay_missing_cost():
    dl = delay_learner(learner_from_yes_set(["1"]), CostOracle({}))
    with pytest.raises(MissingCostError):
        dl.answers("10")


@given(st.sets(st.text(alphabet="01", min_size=1, max_size=6), max_size=12), st.integers(1, 4))
@settings(max_examples=60, deadline=None)
def test_delay_never_increases(yes, t):
    l = learner_from_yes_set(yes)
    rep = verify_delay(l, CostOracle(lambda w: t + len(w) % 2), 8)
    assert rep.increases == 0
    assert rep.collisions > 0 or rep.mismatches == 0


def _zero_path_learner(pred):
    return FunctionLearner(lambda w: bool(w) and "1" not in w and pred(len(w)))


def test_union_paper_example():
    l1 = _zero_path_learner(lambda n: n % 2 == 0)
    l2 = _zero_path_learner(lambda n: n % 3 == 0)
    u = union_learners(l1, l2, "paper")
    assert yes_lengths(u, "0" * 12) == [4, 6, 8, 9, 10, 12]


def test_union_decimated_example():
    l1 = _zero_path_learner(lambda n: n % 2 == 0)
    l2 = _zero_path_learner(lambda n: n % 3 == 0)
    u = union_learners(l1, l2, "decimated")
    # pointwise union 2,3,4,6,8,9,10,12,14,15,16; drop 2,3 then every second
    assert yes_lengths(u, "0" * 16) == [4, 8, 10, 14, 16]
    assert not any(union_learners(constant_learner(False), constant_learner(False))(w) for w in all_strings(4))


def test_decimated_union_measure():
    a = DoublingLearner(all_in_on_zero())
    b = DoublingLearner(bernoulli_likelihood_martingale(Fraction(1, 4)))
    u = union_learners(a, b, "decimated")
    assert u.measure_verified and verify_measure_condition(u, 12).ok


def test_avg_witness_examples():
    const = StagedMartingale(lambda w, k: Fraction(1))
    assert all(avg_witness(const, "0110", k) == 0 for k in range(5))
    dk = staged_cap(all_in_on_zero())
    assert avg_witness(dk, "0" * 8, 3) == Fraction(3, 8)
    assert avg_witness(dk, "0" * 8, 10) == 1
    with pytest.raises(ValueError):
        avg_witness(dk, "", 3)


def test_staged_martingale_monotone():
    assert staged_cap(bernoulli_likelihood_martingale(Fraction(1, 3))).is_monotone(6, 8)
    assert not StagedMartingale(lambda w, k: Fraction(1, k + 1)).is_monotone(1, 2)


def test_detection_report_examples(tmp_path):
    t = detection_report(constant_learner(False), periodic("01"), 100)
    assert t.total_yes == 0 and t.s_weak == 1 and t.s_strong == 1
    t = detection_report(DoublingLearner(all_in_on_zero()), periodic("0"), 1000)
    assert t.s_weak == 0 and t.average(1000) == 1
    t.write_csv(tmp_path / "t.csv", every=250)
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[0] == "n,yes_count,avg_num,avg_den,avg_float"
    assert lines[-1].startswith("1000,1000,1,1,")
    assert set(t.summary()) == {"horizon", "tail_fraction", "tail_max", "tail_min", "s_weak", "s_strong"}
    weak = detection_report(DoublingLearner(all_in_on_zero()), periodic("0"), 10, mode="weak")
    assert weak.yes_positions.tolist() == list(range(1, 11))


def test_detection_report_increments():
    l = DoublingLearner(bernoulli_likelihood_martingale(Fraction(1, 4)))
    t = detection_report(l, bernoulli_seq(Fraction(1, 4), 3, 5000), 5000)
    diffs = t.yes_count[1:] - t.yes_count[:-1]
    assert set(diffs.tolist()) <= {0, 1}


def test_equal_functions_equal_traces():
    l1 = learner_from_yes_set(["0", "00", "010"])
    l2 = FunctionLearner(lambda w: w in ("0", "00", "010"))
    X = bernoulli_seq(Fraction(1, 4), 1, 200)
    assert (detection_report(l1, X, 200).yes_count == detection_report(l2, X, 200).yes_count).all()
