import json

import pytest

from algdim.cli import main, parse_learner, parse_martingale, parse_sequence, parse_trie
from algdim.core import write_prefix_set


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip() else None)


def test_dim_est_example(capsys):
    code, rep = run(capsys, "dim-est", "--seq", "bernoulli:p=1/4,seed=7,len=200000", "--method", "kt")
    assert code == 0 and rep["schema"] == 1
    assert 0.80 <= rep["result"]["estimate"] <= 0.82


def test_measure_check_example(capsys):
    code, rep = run(capsys, "measure-check", "--learner", "doubling:bernoulli,p=1/4", "--depth", "16")
    assert code == 0 and all(lv["ok"] for lv in rep["result"]["levels"])


def test_violation_exit_code(capsys):
    code, rep = run(capsys, "measure-check", "--learner", "yes", "--depth", "4")
    assert code == 1 and rep["result"]["first_violation"] == 1 and rep["result"]["witness"] == [""]


def test_usage_and_io_errors(capsys, tmp_path):
    assert main(["cover", "--trie", "bogus", "--k", "1"]) == 2
    assert main(["verify-martingale", "--martingale", "bernoulli:p=2"]) == 2
    assert main(["dim-est", "--seq", f"file:path={tmp_path}/missing"]) == 3
    bad = tmp_path / "bad.txt"
    bad.write_text("01\n0z\n")
    assert main(["boxdim", "--trie", f"file:path={bad}"]) == 3
    with pytest.raises(SystemExit) as exc:
        main(["no-such-command"])
    assert exc.value.code == 2


def test_reports_deterministic_and_atomic(tmp_path, capsys):
    args = ["learner-trace", "--learner", "doubling:all-in-on-0", "--seq", "zeros", "--horizon", "100"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b")]) == 0
    for name in ("learner-trace.json", "learner-trace.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    meta = json.loads((tmp_path / "a" / "learner-trace.meta.json").read_text())
    assert "created" in meta
    assert not list((tmp_path / "a").glob("*.tmp"))


def test_spec_file_and_override(tmp_path, capsys):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"command": "cover", "trie": "full:depth=3", "k": 1, "s": "1"}))
    code, rep = run(capsys, "cover", "--spec", str(spec))
    assert code == 0 and rep["result"]["antichain"] == ["0", "1"]
    code, rep = run(capsys, "cover", "--spec", str(spec), "--k", "3")
    assert rep["result"]["k"] == 3 and len(rep["result"]["antichain"]) == 8
    spec.write_text(json.dumps({"command": "boxdim"}))
    assert main(["cover", "--spec", str(spec)]) == 2


def test_martingale_file(tmp_path, capsys):
    f = tmp_path / "m.json"
    f.write_text(json.dumps({"type": "structured", "period": 2, "stakes": ["1/2", "0"], "predict": [0, 1]}))
    code, rep = run(capsys, "verify-martingale", "--martingale", f"@{f}", "--depth", "6")
    assert code == 0 and rep["result"]["ok"]
    f.write_text(json.dumps({"type": "bernoulli", "p": "1/4"}))
    assert parse_martingale(f"file:path={f}")("111") == parse_martingale("bernoulli:p=1/4")("111")


def test_descriptors():
    assert parse_martingale("structured:schedule=1@0")("000") == 8
    assert parse_learner("doubling:random,seed=3").name.startswith("doubling(random-structured(seed=3")
    assert parse_sequence("periodic:pattern=1,dilute=3").prefix(6) == "100100"
    assert parse_trie("even:depth=4").slice_counts() == [1, 2, 2, 4, 4]


@pytest.mark.parametrize("argv", [
    ["kolmogorov", "--martingale", "all-in-on-0", "--depth", "8"],
    ["delay", "--learner", "doubling:bernoulli,p=1/4", "--depth", "8"],
    ["union", "--learner", "doubling:all-in-on-0", "--learner2", "doubling:bernoulli,p=1/4",
     "--depth", "8", "--seq", "zeros", "--horizon", "200", "--burn-in", "100"],
    ["hausdorff", "--trie", "full:depth=8", "--k", "2:4"],
    ["boxdim", "--trie", "path:w=0110"],
    ["slices", "--learner", "doubling:all-in-on-0", "--n", "8", "--s", "1/2", "--list"],
    ["code", "--learner", "doubling:all-in-on-0", "--s", "1/2", "--string", "00000000"],
    ["code", "--learner", "doubling:all-in-on-0", "--s", "1/2", "--decode", "0000", "--n", "8"],
])
def test_subcommands_pass(capsys, argv):
    code, rep = run(capsys, *argv)
    assert code == 0 and rep["ok"] and rep["schema"] == 1


def test_slices_writes_prefix_set(tmp_path, capsys):
    assert main(["slices", "--learner", "doubling:all-in-on-0", "--n", "8", "--out", str(tmp_path)]) == 0
    from algdim.core import read_prefix_set
    assert len(read_prefix_set(tmp_path / "slices.txt")) == 16


def test_trie_file(tmp_path, capsys):
    f = tmp_path / "g.txt"
    write_prefix_set(f, ["0", "10"])
    code, rep = run(capsys, "cover", "--trie", f"file:path={f},depth=3", "--k", "1", "--s", "1")
    assert rep["result"]["antichain"] == ["0", "10"]


def test_selftest(capsys):
    code, rep = run(capsys, "selftest", "--depth", "6")
    assert code == 0
    props = rep["result"]["properties"]
    assert len(props) >= 15 and all(p["passed"] and p["count"] > 0 for p in props)
