"""Command line interface: ``capmod <command> [flags]``."""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import studies
from .capacity import brute_force_capacity, capacity
from .l0cap import dcap
from .module import (check_module_axioms, check_parallelogram, check_quotient, factor_through,
                     pr_bar, random_field)
from .quasicontinuity import dqu_detail, qcr, regime
from .report import Report, _plain
from .sobolev import MClass
from .space import (Space, grid_1d, grid_2d, load_space, shortest_path_metric, space_to_json)
from .suites import SUITES, run_suite

METHODS = {"exact": "exact_scan", "brute": "brute_force", "upper": "upper_bound"}
STUDIES = {
    "refine-1d": studies.study_refine_1d,
    "refine-2d": studies.study_refine_2d,
    "dominated": studies.scenario_dominated_convergence_failure,
    "capae": studies.scenario_capae_vs_dcap,
}


def _read_function(space: Space, path: str, allow_missing: bool = False) -> np.ndarray:
    obj = json.loads(Path(path).read_text())
    if isinstance(obj, dict) and "values" in obj and set(obj) <= {"values", "canonical"}:
        obj = obj["values"]
    if isinstance(obj, list):
        return space.function(obj)
    unknown = set(obj) - set(space.index)
    if unknown:
        raise ValueError(f"unknown vertex id(s) {sorted(unknown)}")
    out = np.full(space.n, np.nan)
    for k, v in obj.items():
        out[space.index[k]] = np.nan if v is None else float(v)
    if not allow_missing and np.isnan(out).any():
        missing = [space.ids[i] for i in np.flatnonzero(np.isnan(out))]
        raise ValueError(f"function undefined at {missing}")
    return out


def _as_map(space: Space, values) -> dict:
    return {v: float(x) for v, x in zip(space.ids, values)}


def _emit(obj: dict | Report, fmt: str, out) -> None:
    if isinstance(obj, Report):
        out.write(obj.to_json() if fmt == "json" else obj.to_csv())
        return
    if fmt == "json":
        out.write(json.dumps(_plain(obj), sort_keys=True, indent=2) + "\n")
        return
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["key", "value"])
    for k in sorted(obj):
        w.writerow([k, json.dumps(_plain(obj[k]), sort_keys=True)])
    out.write(buf.getvalue())


def _load(args) -> Space:
    return load_space(args.space)


# -- commands -----------------------------------------------------------------------

def cmd_space(args):
    if args.grid_1d:
        lo, hi, n = args.grid_1d
        space = grid_1d(float(lo), float(hi), int(n))
    elif args.grid_2d:
        lo, hi, n = args.grid_2d
        space = grid_2d(float(lo), float(hi), int(n))
    elif args.space:
        space = _load(args)
    else:
        raise ValueError("give --space, --grid-1d or --grid-2d")
    if not args.summary:
        return space_to_json(space), True
    d = shortest_path_metric(space).distances
    finite = d[np.isfinite(d)]
    return {
        "vertices": space.n,
        "edges": space.n_edges,
        "total_mass": space.total_mass,
        "exhaustion_sets": len(space.exhaustion),
        "cap_null": [space.ids[i] for i in np.flatnonzero(space.cap_null)],
        "m_null": [space.ids[i] for i in np.flatnonzero(space.m_null)],
        "regime": regime(space).value,
        "diameter": float(finite.max()) if finite.size else 0.0,
        "connected": bool(np.isfinite(d).all()),
    }, True


def cmd_cap(args):
    space = _load(args)
    ids = [s for s in args.set.split(",") if s] if args.set else []
    res = capacity(space, ids, solver=args.solver)
    out = {"value": res.value, "potential": _as_map(space, res.potential), "kkt_ok": res.kkt_ok,
           "solver": res.solver}
    ok = res.kkt_ok
    if args.oracle:
        oracle = brute_force_capacity(space, ids, seed=args.seed)
        out["oracle"] = oracle
        out["oracle_agrees"] = abs(oracle - res.value) <= 1e-6
        ok &= out["oracle_agrees"]
    return out, ok


def _function_files(path: str) -> list[Path]:
    return sorted(Path(path).glob("*.json"))


def cmd_dcap(args):
    space = _load(args)
    if args.f_dir or args.g_dir:
        if not (args.f_dir and args.g_dir):
            raise ValueError("batch mode needs both --f-dir and --g-dir")
        rows = []
        for fp in _function_files(args.f_dir):
            f = _read_function(space, str(fp))
            for gp in _function_files(args.g_dir):
                rows.append((fp.name, gp.name, dcap(space, f, _read_function(space, str(gp)))))
        return {"rows": rows}, True
    f, g = _read_function(space, args.f), _read_function(space, args.g)
    return {"dcap": dcap(space, f, g)}, True


def cmd_dqu(args):
    space = _load(args)
    f, g = _read_function(space, args.f), _read_function(space, args.g)
    import warnings
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        r = dqu_detail(space, f, g, METHODS[args.method])
    return {"dqu": r.value, "method": r.method, "downgraded": r.downgraded,
            "exceptional_set": [space.ids[i] for i in np.flatnonzero(r.exceptional)]}, True


def cmd_qcr(args):
    space = _load(args)
    vals = _read_function(space, args.class_, allow_missing=True)
    live = ~space.m_null
    if np.isnan(vals[live]).any():
        raise ValueError("the class must be given at every vertex of positive mass")
    q = qcr(space, MClass(space, vals))
    return {"values": _as_map(space, q.values), "canonical": True}, True


def cmd_module(args):
    space = _load(args)
    rng = np.random.default_rng(np.random.SeedSequence(args.seed))
    if args.suite == "axioms":
        rep = check_module_axioms(space, rng, trials=args.trials)
    elif args.suite == "hilbert":
        rep = Report("hilbert", "pointwise parallelogram identity", {"trials": args.trials})
        for k in range(args.trials):
            rep.extend(check_parallelogram(random_field(space, rng), random_field(space, rng)), f"t{k}")
    elif args.suite == "quotient":
        rep = check_quotient(space, rng, trials=args.trials)
    else:
        E = (rng.random(space.n) < 0.5).astype(float)
        tests = [random_field(space, rng) for _ in range(args.trials)]
        rep = factor_through(space, lambda v: pr_bar(v.scale(E)), tests, rng).report
    rep.parameters.update(seed=args.seed, space=str(args.space))
    return rep, rep.passed


def cmd_study(args):
    fn = STUDIES[args.name]
    kw = {}
    if args.name == "refine-1d":
        kw = {"L": args.L, "n_list": args.n or (251, 501, 1001, 2001)}
    elif args.name == "refine-2d":
        kw = {"n_list": args.n or (16, 32, 64)}
    else:
        kw = {"n": (args.n or [1001])[0], "count": args.count}
    rep = fn(**kw)
    return rep, rep.passed


def cmd_verify(args):
    rep = run_suite(args.suite, args.seed, args.report)
    return rep, rep.passed


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--seed", type=int, default=0, help="seed for every random choice")
    common.add_argument("--timing", action="store_true", help="include runtime in reports")

    p = argparse.ArgumentParser(prog="capmod", description="Capacity calculus on weighted graphs.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("space", parents=[common], help="build, validate or summarise a space")
    s.add_argument("--space")
    s.add_argument("--grid-1d", nargs=3, metavar=("LO", "HI", "N"))
    s.add_argument("--grid-2d", nargs=3, metavar=("LO", "HI", "N"))
    s.add_argument("--summary", action="store_true")
    s.set_defaults(func=cmd_space)

    s = sub.add_parser("cap", parents=[common], help="capacity of a vertex set")
    s.add_argument("--space", required=True)
    s.add_argument("--set", default="", help="comma separated vertex ids")
    s.add_argument("--solver", choices=("auto", "iterative"), default="auto")
    s.add_argument("--oracle", action="store_true", help="also run the brute force oracle")
    s.set_defaults(func=cmd_cap)

    s = sub.add_parser("dcap", parents=[common], help="L0(Cap) distance")
    s.add_argument("--space", required=True)
    s.add_argument("--f")
    s.add_argument("--g")
    s.add_argument("--f-dir")
    s.add_argument("--g-dir")
    s.set_defaults(func=cmd_dcap)

    s = sub.add_parser("dqu", parents=[common], help="quasi-uniform distance")
    s.add_argument("--space", required=True)
    s.add_argument("--f", required=True)
    s.add_argument("--g", required=True)
    s.add_argument("--method", choices=sorted(METHODS), default="exact")
    s.set_defaults(func=cmd_dqu)

    s = sub.add_parser("qcr", parents=[common], help="canonical representative of an m-class")
    s.add_argument("--space", required=True)
    s.add_argument("--class", dest="class_", required=True)
    s.set_defaults(func=cmd_qcr)

    s = sub.add_parser("module", parents=[common], help="tangent module checks")
    s.add_argument("action", choices=("verify",))
    s.add_argument("--space", required=True)
    s.add_argument("--suite", choices=("axioms", "hilbert", "quotient", "factor"), default="axioms")
    s.add_argument("--trials", type=int, default=20)
    s.set_defaults(func=cmd_module)

    s = sub.add_parser("study", parents=[common], help="refinement studies and scenarios")
    s.add_argument("name", choices=sorted(STUDIES))
    s.add_argument("--n", type=int, nargs="+")
    s.add_argument("--L", type=float, default=10.0)
    s.add_argument("--count", type=int, default=10)
    s.set_defaults(func=cmd_study)

    s = sub.add_parser("verify", parents=[common], help="run property suites")
    s.add_argument("--suite", choices=SUITES + ("all",), default="all")
    s.add_argument("--report", help="write the JSON report here and a CSV beside it")
    s.set_defaults(func=cmd_verify)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        result, ok = args.func(args)
    except (ValueError, OSError, KeyError) as exc:
        print(f"capmod: error: {exc}", file=sys.stderr)
        return 2
    if isinstance(result, Report):
        if args.format == "json":
            sys.stdout.write(result.to_json(timing=args.timing))
        else:
            sys.stdout.write(result.to_csv())
    elif "rows" in result:
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(["f", "g", "dcap"])
        w.writerows(result["rows"])
    else:
        _emit(result, args.format, sys.stdout)
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
