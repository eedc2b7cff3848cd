"""Command-line experiment driver.

Every subcommand builds its inputs from short descriptors, runs one verifier or
estimator, prints a one-line human summary and, with ``--out``, writes a JSON
report (``schema: 1``) atomically next to any trace CSV.  Reports contain no
timestamps; run metadata goes to a sibling ``*.meta.json``.

Options may also come from a JSON spec file (``--spec``); explicit flags win.

Descriptors::

    martingale  constant | all-in-on-0 | bernoulli:p=1/4 | random:seed=3,period=5
                | structured:schedule=1/2@0;0@1 | file:path=m.json | @m.json
    learner     yes | no | doubling:<martingale, first ',' read as ':'>
                e.g. doubling:bernoulli,p=1/4
    sequence    bernoulli:p=1/4,seed=7,len=200000 | periodic:pattern=01
                | zeros | file:path=x.txt   (any of them may add dilute=K)
    trie        full:depth=14 | path:w=010 | even:depth=14 | file:path=g.txt,depth=8
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import os
import sys
import tempfile
from fractions import Fraction
from pathlib import Path
from typing import Optional

from . import __version__
from .coding import ArithmeticCodec
from .core import PrefixSetFormatError, PrefixTrie, as_fraction, read_prefix_set, write_prefix_set
from .dimension import (SliceCoder, box_dimension_estimate, compression_dim_estimate,
                        enumerate_slice, hausdorff_estimate, min_cover_cost)
from .gales import (Martingale, all_in_on_zero, bernoulli_likelihood_martingale, constant_martingale,
                    random_structured_martingale, structured_martingale, validate_martingale,
                    verify_kolmogorov_inequality)
from .learners import (CostOracle, DoublingLearner, Learner, constant_learner, delay_learner,
                       detection_report, union_learners, verify_delay, verify_measure_condition)
from .selftest import run_selftest
from .sequences import SequenceFormatError, SequenceSource, bernoulli_seq, dilute, periodic, read_sequence

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3
SCHEMA = 1


class UsageError(ValueError):
    pass


# descriptors ---------------------------------------------------------------

def _split(desc: str) -> tuple[str, dict]:
    name, _, rest = desc.partition(":")
    params = {}
    if rest:
        for item in rest.split(","):
            key, eq, val = item.partition("=")
            if not eq:
                raise UsageError(f"expected key=value in {desc!r}, got {item!r}")
            params[key.strip()] = val.strip()
    return name.strip(), params


def _frac(params: dict, key: str, desc: str) -> Fraction:
    if key not in params:
        raise UsageError(f"{desc!r} needs {key}=...")
    try:
        return as_fraction(params[key])
    except (ValueError, TypeError, ZeroDivisionError) as exc:
        raise UsageError(f"bad {key} in {desc!r}: {exc}") from None


def _int(params: dict, key: str, desc: str, default: Optional[int] = None) -> int:
    if key not in params:
        if default is None:
            raise UsageError(f"{desc!r} needs {key}=...")
        return default
    try:
        return int(params[key])
    except ValueError:
        raise UsageError(f"bad {key} in {desc!r}: {params[key]!r}") from None


def martingale_from_json(obj: dict) -> Martingale:
    """``{"type": "bernoulli", "p": "1/4"}`` or
    ``{"type": "structured", "stakes": ["1/2", "0"], "predict": [0, 1]}``."""
    kind = obj.get("type")
    if kind == "bernoulli":
        return bernoulli_likelihood_martingale(as_fraction(str(obj["p"])))
    if kind == "structured":
        stakes, predict = obj["stakes"], obj["predict"]
        if len(stakes) != len(predict) or ("period" in obj and int(obj["period"]) != len(stakes)):
            raise UsageError("structured spec: stakes, predict and period must agree")
        return structured_martingale([(as_fraction(str(s)), int(b)) for s, b in zip(stakes, predict)])
    raise UsageError(f"unknown martingale type {kind!r}")


def parse_martingale(desc: str) -> Martingale:
    if desc.startswith("@"):
        desc = "file:path=" + desc[1:]
    name, params = _split(desc)
    try:
        if name == "constant":
            return constant_martingale()
        if name in ("all-in-on-0", "all-in-0"):
            return all_in_on_zero()
        if name == "bernoulli":
            return bernoulli_likelihood_martingale(_frac(params, "p", desc))
        if name == "random":
            return random_structured_martingale(_int(params, "seed", desc), _int(params, "period", desc, 5))
        if name == "structured":
            table = []
            for entry in params.get("schedule", "").split(";"):
                stake, at, bit = entry.partition("@")
                if not at:
                    raise UsageError(f"schedule entries look like 1/2@0, got {entry!r}")
                table.append((as_fraction(stake), int(bit)))
            return structured_martingale(table)
        if name == "file":
            path = params.get("path")
            if not path:
                raise UsageError("file martingale needs path=...")
            return martingale_from_json(json.loads(Path(path).read_text(encoding="utf-8")))
    except (ValueError, KeyError) as exc:
        if isinstance(exc, UsageError):
            raise
        raise UsageError(f"bad martingale {desc!r}: {exc}") from None
    raise UsageError(f"unknown martingale {name!r}")


def parse_learner(desc: str) -> Learner:
    name, _, rest = desc.partition(":")
    if name == "yes":
        return constant_learner(True)
    if name == "no":
        return constant_learner(False)
    if name == "doubling":
        if not rest:
            raise UsageError("doubling learner needs a martingale, e.g. doubling:bernoulli,p=1/4")
        head, sep, tail = rest.partition(",")
        return DoublingLearner(parse_martingale(head + (":" + tail if sep else "")))
    raise UsageError(f"unknown learner {name!r}")


def parse_sequence(desc: str) -> SequenceSource:
    name, params = _split(desc)
    k = _int(params, "dilute", desc, 1)
    length = _int(params, "len", desc, 0) or None
    if name == "bernoulli":
        X = bernoulli_seq(_frac(params, "p", desc), _int(params, "seed", desc, 0), length)
    elif name == "periodic":
        if not params.get("pattern"):
            raise UsageError("periodic needs pattern=...")
        X = periodic(params["pattern"])
    elif name == "zeros":
        X = periodic("0")
    elif name == "file":
        X = read_sequence(params["path"])
    else:
        raise UsageError(f"unknown sequence {name!r}")
    return dilute(X, k) if k != 1 else X


def parse_trie(desc: str) -> PrefixTrie:
    name, params = _split(desc)
    if name == "full":
        return PrefixTrie.full(_int(params, "depth", desc))
    if name == "path":
        return PrefixTrie.path(params.get("w", ""))
    if name == "even":
        return PrefixTrie.from_branching(_int(params, "depth", desc), lambda d: d % 2 == 0)
    if name == "file":
        strings = read_prefix_set(params["path"])
        depth = _int(params, "depth", desc, max((len(w) for w in strings), default=0))
        return PrefixTrie.from_cylinders(strings, depth)
    raise UsageError(f"unknown trie {name!r}")


# reports -------------------------------------------------------------------

def _jsonable(x):
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if hasattr(x, "item"):
        return x.item()
    return x


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(args, ok: bool, result: dict, summary: str, extra_files: Optional[dict] = None) -> int:
    spec = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "out", "spec") and v is not None}
    report = {"schema": SCHEMA, "command": args.command, "spec": spec, "ok": ok, "result": result}
    text = json.dumps(_jsonable(report), indent=2, sort_keys=True) + "\n"
    if args.out:
        out = Path(args.out)
        base = out / args.command
        write_atomic(base.with_suffix(".json"), text)
        meta = {"schema": SCHEMA, "version": __version__,
                "created": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")}
        write_atomic(base.with_suffix(".meta.json"), json.dumps(meta, indent=2) + "\n")
        for suffix, writer in (extra_files or {}).items():
            target = out / f"{args.command}{suffix}"
            with tempfile.TemporaryDirectory(dir=out) as tmp:
                tmp_path = Path(tmp) / target.name
                writer(tmp_path)
                os.replace(tmp_path, target)
    else:
        sys.stdout.write(text)
    print(("PASS " if ok else "FAIL ") + summary, file=sys.stderr)
    return EXIT_OK if ok else EXIT_VIOLATION


# subcommands ---------------------------------------------------------------

def cmd_verify_martingale(args) -> int:
    d = parse_martingale(args.martingale)
    rep = validate_martingale(d, args.depth)
    return _emit(args, rep.ok, {"martingale": d.name, **rep.to_dict()},
                 f"{d.name}: fairness checked on {rep.checked} nodes to depth {args.depth}")


def cmd_kolmogorov(args) -> int:
    d = parse_martingale(args.martingale)
    rep = verify_kolmogorov_inequality(d, args.depth, partition_depth=args.partition_depth,
                                       keep_antichains=False)
    v = rep.first_violation
    return _emit(args, rep.ok, {"martingale": d.name, **rep.to_dict()},
                 f"{d.name}: " + ("all levels within 2^-n" if v is None else f"level {v.n} exceeds 2^-{v.n}"))


def cmd_measure_check(args) -> int:
    l = parse_learner(args.learner)
    rep = verify_measure_condition(l, args.depth, args.partition_depth)
    v = rep.first_violation
    return _emit(args, rep.ok, {"learner": l.name, **rep.to_dict()},
                 f"{l.name}: " + ("all n pass" if v is None else f"fails at n={v.n}"))


def cmd_learner_trace(args) -> int:
    l = parse_learner(args.learner)
    X = parse_sequence(args.seq)
    trace = detection_report(l, X, args.horizon, args.mode, args.tail_fraction)
    result = {"learner": l.name, "sequence": X.provenance, "total_yes": trace.total_yes, **trace.summary()}
    return _emit(args, True, result, f"{l.name}: s_weak={trace.s_weak:.6f} s_strong={trace.s_strong:.6f}",
                 {".csv": lambda p: trace.write_csv(p, args.every)})


def _cost_oracle(desc: str) -> CostOracle:
    name, params = _split(desc)
    if name == "prefix":
        return CostOracle.prefix_evaluations()
    if name == "const":
        t = _int(params, "t", desc)
        return CostOracle(lambda w: t, name=f"const({t})")
    raise UsageError(f"unknown cost oracle {name!r}")


def cmd_delay(args) -> int:
    l = parse_learner(args.learner)
    tau = _cost_oracle(args.cost)
    rep = verify_delay(l, tau, args.depth)
    mc = verify_measure_condition(delay_learner(l, tau), args.depth)
    ok = rep.increases == 0 and (rep.collisions > 0 or rep.ok) and (mc.ok or not l.measure_verified)
    return _emit(args, ok, {"learner": l.name, "cost": tau.name, "delay": rep.to_dict(),
                            "measure_condition": mc.ok},
                 f"delay({l.name}): {rep.checked} paths, increases={rep.increases}, collisions={rep.collisions}")


def cmd_union(args) -> int:
    l1, l2 = parse_learner(args.learner), parse_learner(args.learner2)
    u = union_learners(l1, l2, args.mode)
    mc = verify_measure_condition(u, args.depth)
    result = {"union": u.name, "mode": args.mode, "measure_condition": mc.to_dict()}
    ok = mc.ok or args.mode == "paper"
    if args.seq:
        trace = detection_report(u, parse_sequence(args.seq), args.horizon)
        result["yes_after_burn_in"] = trace.yes_after(args.burn_in)
        ok = ok and result["yes_after_burn_in"] >= 1
    status = "holds" if mc.ok else f"fails at level {mc.first_violation.n} (reported; not an error in paper mode)"
    return _emit(args, ok, result, f"{u.name}: measure condition {status}, depth {args.depth}")


def cmd_cover(args) -> int:
    g = parse_trie(args.trie)
    sol = min_cover_cost(g, args.k, as_fraction(args.s))
    return _emit(args, True, sol.to_dict(), f"cover of {len(g)} leaves: {len(sol.antichain)} strings, cost {float(sol.cost):.6g}")


def cmd_hausdorff(args) -> int:
    g = parse_trie(args.trie)
    rows = []
    for k in _k_values(args.k):
        lo, hi = hausdorff_estimate(g, k, as_fraction(args.tol))
        rows.append({"k": k, "lo": str(lo), "hi": str(hi), "mid": float((lo + hi) / 2)})
    return _emit(args, True, {"estimates": rows}, "  ".join(f"k={r['k']}: {r['mid']:.6f}" for r in rows))


def _k_values(spec: str) -> list[int]:
    a, colon, b = str(spec).partition(":")
    try:
        return list(range(int(a), int(b) + 1)) if colon else [int(a)]
    except ValueError:
        raise UsageError(f"bad k {spec!r}; use K or A:B") from None


def cmd_boxdim(args) -> int:
    summary = box_dimension_estimate(parse_trie(args.trie), args.n_min)
    return _emit(args, True, summary.to_dict(), f"box estimate {summary.estimate:.6f}")


def cmd_slices(args) -> int:
    l = parse_learner(args.learner)
    s = as_fraction(args.s)
    sl = enumerate_slice(l, args.n, s, verified=False)
    result = {"learner": l.name, **sl.to_dict(), "members": sl.members if args.list else None}
    ok = sl.within_bound or not l.measure_verified
    return _emit(args, ok, result, f"|T_{args.n}| = {len(sl.members)} vs 2^({s * args.n})",
                 {".txt": lambda p: write_prefix_set(p, sl.members, header=f"T_{args.n} of {l.name} at s={s}")})


def cmd_code(args) -> int:
    l = parse_learner(args.learner)
    coder = SliceCoder(l, as_fraction(args.s))
    if args.decode is not None:
        if args.n is None:
            raise UsageError("--decode needs --n")
        w = coder.decode(args.n, args.decode)
        return _emit(args, True, {"n": args.n, "code": args.decode, "string": w}, f"decoded {w}")
    if args.string is None:
        raise UsageError("code needs --string or --decode")
    code = coder.encode(args.string)
    back = coder.decode(len(args.string), code)
    ok = back == args.string and len(code) <= coder.code_length(len(args.string))
    return _emit(args, ok, {"string": args.string, "code": code, "length": len(code),
                            "bound": coder.code_length(len(args.string))},
                 f"{args.string} -> {code!r} ({len(code)} bits)")


_METHODS = {"kt": 0, "kt-order1": 1, "kt-order2": 2}


def cmd_dim_est(args) -> int:
    X = parse_sequence(args.seq)
    horizon = args.horizon or X.length
    if horizon is None:
        raise UsageError("infinite sequence: give --horizon")
    if args.method not in _METHODS:
        raise UsageError(f"unknown method {args.method!r}; choose from {sorted(_METHODS)}")
    est = compression_dim_estimate(X, ArithmeticCodec(_METHODS[args.method]), horizon, args.mode, args.tail_fraction)
    return _emit(args, True, {"sequence": X.provenance, **est.summary()},
                 f"{est.coder} {args.mode} estimate {est.estimate:.6f} at n={horizon}",
                 {".csv": lambda p: est.write_csv(p, args.every)})


def cmd_selftest(args) -> int:
    results = run_selftest(args.depth)
    ok = all(r.passed for r in results)
    failed = [r.name for r in results if not r.passed]
    return _emit(args, ok, {"depth": args.depth, "properties": [r.to_dict() for r in results]},
                 f"{sum(r.passed for r in results)}/{len(results)} properties" + (f"; failed: {failed}" if failed else ""))


# parser --------------------------------------------------------------------

DEFAULTS = {"depth": 12, "partition_depth": 0, "horizon": None, "mode": None, "tail_fraction": 0.5,
            "k": "6", "s": "1/2", "tol": "1/1024", "n_min": 1, "every": 1, "cost": "prefix",
            "burn_in": 0, "method": "kt"}
MODE_DEFAULTS = {"learner-trace": "s_learn", "union": "decimated", "dim-est": "liminf"}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="algdim", description="Learning-function experiments on algorithmic dimension.")
    p.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--spec", help="JSON file of option values; flags override it")
    common.add_argument("--out", help="directory for report files (default: JSON to stdout)")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, func, *opts, help_text=""):
        sp = sub.add_parser(name, parents=[common], help=help_text)
        for o in opts:
            o(sp)
        sp.set_defaults(func=func)
        return sp

    mart = lambda sp: sp.add_argument("--martingale")  # noqa: E731
    learner = lambda sp: sp.add_argument("--learner")  # noqa: E731
    seq = lambda sp: sp.add_argument("--seq")  # noqa: E731
    trie = lambda sp: sp.add_argument("--trie")  # noqa: E731
    depth = lambda sp: sp.add_argument("--depth", type=int)  # noqa: E731
    part = lambda sp: sp.add_argument("--partition-depth", type=int)  # noqa: E731
    horizon = lambda sp: sp.add_argument("--horizon", type=int)  # noqa: E731
    tail = lambda sp: sp.add_argument("--tail-fraction", type=float)  # noqa: E731
    every = lambda sp: sp.add_argument("--every", type=int, help="CSV row stride")  # noqa: E731
    s_opt = lambda sp: sp.add_argument("--s")  # noqa: E731

    add("verify-martingale", cmd_verify_martingale, mart, depth, help_text="exact fairness check")
    add("kolmogorov", cmd_kolmogorov, mart, depth, part, help_text="exhaustive Kolmogorov inequality")
    add("measure-check", cmd_measure_check, learner, depth, part, help_text="measure condition of a learner")
    add("learner-trace", cmd_learner_trace, learner, seq, horizon, tail, every,
        lambda sp: sp.add_argument("--mode", choices=["s_learn", "weak"]), help_text="yes-density trace")
    add("delay", cmd_delay, learner, depth, lambda sp: sp.add_argument("--cost"), help_text="delayed learner check")
    add("union", cmd_union, learner, depth, seq, horizon,
        lambda sp: sp.add_argument("--learner2"),
        lambda sp: sp.add_argument("--mode", choices=["paper", "decimated"]),
        lambda sp: sp.add_argument("--burn-in", type=int), help_text="union of two learners")
    add("cover", cmd_cover, trie, s_opt, lambda sp: sp.add_argument("--k", type=int), help_text="optimal cover")
    add("hausdorff", cmd_hausdorff, trie, lambda sp: sp.add_argument("--k", help="K or A:B"),
        lambda sp: sp.add_argument("--tol"), help_text="cover-cost root estimate")
    add("boxdim", cmd_boxdim, trie, lambda sp: sp.add_argument("--n-min", type=int), help_text="box counting")
    add("slices", cmd_slices, learner, s_opt, lambda sp: sp.add_argument("--n", type=int),
        lambda sp: sp.add_argument("--list", action="store_true", default=None), help_text="enumerate T_n")
    add("code", cmd_code, learner, s_opt, lambda sp: sp.add_argument("--string"),
        lambda sp: sp.add_argument("--decode"), lambda sp: sp.add_argument("--n", type=int),
        help_text="slice coding")
    add("dim-est", cmd_dim_est, seq, horizon, tail, every,
        lambda sp: sp.add_argument("--method"),
        lambda sp: sp.add_argument("--mode", choices=["liminf", "limsup"]), help_text="compression estimate")
    add("selftest", cmd_selftest, depth, help_text="run the invariant suite")
    return p


_REQUIRED = {"verify-martingale": ["martingale"], "kolmogorov": ["martingale"], "measure-check": ["learner"],
             "learner-trace": ["learner", "seq"], "delay": ["learner"], "union": ["learner", "learner2"],
             "cover": ["trie", "k"], "hausdorff": ["trie"], "boxdim": ["trie"], "slices": ["learner", "n"],
             "code": ["learner"], "dim-est": ["seq"]}


def _merge_spec(args, parser) -> None:
    if args.spec:
        data = json.loads(Path(args.spec).read_text(encoding="utf-8"))
        if not isinstance(data, dict):
            raise UsageError(f"{args.spec}: spec file must hold a JSON object")
        if data.get("command", args.command) != args.command:
            raise UsageError(f"{args.spec}: spec is for {data['command']!r}, not {args.command!r}")
        for key, val in data.items():
            key = key.replace("-", "_")
            if key == "command":
                continue
            if not hasattr(args, key):
                raise UsageError(f"{args.spec}: unknown option {key!r} for {args.command}")
            if getattr(args, key) is None:
                setattr(args, key, val)
    for key, val in DEFAULTS.items():
        if hasattr(args, key) and getattr(args, key) is None:
            setattr(args, key, val)
    if hasattr(args, "mode") and args.mode is None:
        args.mode = MODE_DEFAULTS.get(args.command)
    if hasattr(args, "list") and args.list is None:
        args.list = False
    if args.command == "learner-trace" and args.horizon is None:
        raise UsageError("learner-trace needs --horizon")
    if args.command == "union" and args.seq and args.horizon is None:
        raise UsageError("union with --seq needs --horizon")
    for key in _REQUIRED.get(args.command, []):
        if getattr(args, key, None) is None:
            raise UsageError(f"{args.command} needs --{key.replace('_', '-')}")


def main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _merge_spec(args, parser)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SequenceFormatError, PrefixSetFormatError, json.JSONDecodeError, OSError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
