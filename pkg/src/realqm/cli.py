"""Command-line front end.

Exit codes: 0 success, 1 acceptance failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig, load_config, load_expected

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

log = logging.getLogger("realqm")


class UsageError(Exception):
    pass


def _jsonify(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonify(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonify(obj.tolist())
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, float) and not np.isfinite(obj):
        return str(obj)
    return obj


def _to_csv(result) -> str:
    rows = result if isinstance(result, list) else [result]
    if not rows or not all(isinstance(r, dict) for r in rows):
        raise UsageError("this result has no tabular form; use --format json")
    keys = list(dict.fromkeys(k for r in rows for k in r))
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: json.dumps(_jsonify(v)) if isinstance(v, (list, dict)) else v for k, v in r.items()})
    return buf.getvalue()


def emit(result, cfg: RunConfig, command: str) -> None:
    if cfg.format == "csv":
        text = _to_csv(_jsonify(result))
    else:
        payload = {"meta": {"command": command, "version": __version__, "seed": cfg.seed},
                   "result": _jsonify(result)}
        text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if cfg.output:
        Path(cfg.output).write_text(text)
    else:
        sys.stdout.write(text)


def _read_json(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read {path}: {exc}") from None


# ---------------------------------------------------------------------------
# handlers


def cmd_bell(args, cfg: RunConfig):
    from .bellnet import (Behavior, bell_score, behavior_from_strategy, build_optimal_complex_strategy,
                          local_maximum)
    if args.action == "score":
        if args.behavior:
            beh = Behavior.from_json_dict(_read_json(args.behavior))
        else:
            beh = behavior_from_strategy(build_optimal_complex_strategy())
        rep = bell_score(beh)
        out = rep.to_json_dict()
        out["chsh"] = rep.chsh()
        out["bob_marginal"] = rep.bob_marginal
        return out
    if args.action == "optimal":
        s = build_optimal_complex_strategy()
        if args.save_strategy:
            Path(args.save_strategy).write_text(json.dumps(s.to_json_dict()))
        return {"strategy": s.to_json_dict(), "score": bell_score(behavior_from_strategy(s)).total}
    if args.action == "local":
        return {"local_maximum": local_maximum()}
    from .seesaw import seesaw_best
    seeds = range(cfg.seed, cfg.seed + (args.seeds or cfg.seeds))
    best, results = seesaw_best(args.field, tuple(args.dims), seeds=seeds, iters=args.iters, jobs=cfg.jobs)
    out = {"field": args.field, "dims": list(args.dims), "best_score": best.score, "best_seed": best.seed,
           "scores": [r.score for r in results], "converged": [r.converged for r in results]}
    if args.save_strategy:
        Path(args.save_strategy).write_text(json.dumps(best.strategy.to_json_dict()))
    return out


def _load_state(path):
    from .qmat import from_json_dict
    try:
        return from_json_dict(_read_json(path))
    except (KeyError, ValueError) as exc:
        raise UsageError(f"{path}: not a valid state: {exc}") from None


def cmd_measures(args, cfg: RunConfig):
    from . import measures as m
    if args.action == "linear-bound":
        return {"value": m.linear_bound_epsilon(args.score)}
    if args.action == "monotonicity":
        rep = m.monotonicity_harness(args.measure, trials=args.trials or cfg.trials, seed=cfg.seed,
                                     mode=args.mode, jobs=cfg.jobs)
        return {"measure": rep.measure, "mode": rep.mode, "trials": rep.trials,
                "violations": rep.violations, "max_violation": rep.max_violation}
    if not args.state:
        raise UsageError(f"measures {args.action} needs --state")
    rho = _load_state(args.state)
    if args.action == "dsep":
        r = m.dsep_two_rebit(rho)
        from .qmat import to_json_dict
        return {"value": r.distance, "certificate": {"witness": to_json_dict(r.witness),
                                                     "status": r.certificate.status,
                                                     "residuals": r.certificate.residuals}}
    if args.action == "dind":
        br = m.dind_bounds(rho, seed=cfg.seed)
        return {"value": [br.lower, br.upper], "certificate": {"starts": br.starts}}
    if args.action == "ef":
        return {"value": m.ef_two_rebit(rho)}
    if args.action == "pure":
        r = m.pure_state_sep_distance(rho)
        return {"value": r.value, "certificate": {"schmidt": r.schmidt, "exact": r.exact}}
    raise UsageError(f"unknown measures action {args.action}")


def cmd_sim(args, cfg: RunConfig):
    from . import realsim as rs
    from .qmat import to_json_dict
    if args.action == "lift":
        if not args.state:
            raise UsageError("sim lift needs --state")
        s = rs.lift_state(_load_state(args.state), args.frame)
        return to_json_dict(s.carrier)
    if args.action == "broadcast":
        return to_json_dict(rs.broadcast(rs.frame_state(args.n), args.site))
    if args.action == "frame":
        return to_json_dict(rs.frame_state(args.n))
    from .bellnet import bell_score, build_optimal_complex_strategy, load_strategy
    strat = load_strategy(args.strategy) if args.strategy else build_optimal_complex_strategy()
    res = rs.simulate_network(strat)
    if args.audit:
        Path(args.audit).write_text(json.dumps([e.to_json_dict() for e in res.audit], indent=2))
    return {"behavior": res.behavior.to_json_dict(), "score": bell_score(res.behavior).total,
            "audit": [e.to_json_dict() for e in res.audit], "locality_ok": res.locality_ok,
            "frame_marginal_error": res.source_marginal_error}


def cmd_hierarchy(args, cfg: RunConfig):
    from .bellnet import load_behavior
    from .hierarchy import build_moment_problem, solve_hierarchy
    fixed = load_behavior(args.fixed_behavior) if args.fixed_behavior else None
    mp = build_moment_problem(args.level, args.eps, fixed)
    if args.action == "build":
        out = mp.summary()
        if args.export:
            rep = solve_hierarchy(mp, "export", path=args.export)
            out["path"] = rep.path
        return out
    backend = args.backend
    kwargs = {"tol": args.tol} if args.tol else {}
    if backend == "interior":
        kwargs["cap"] = cfg.cap
    elif backend == "splitting":
        kwargs["max_iters"] = args.max_iters
    elif backend == "export":
        if not args.export:
            raise UsageError("--backend export needs --export PATH")
        kwargs["path"] = args.export
    return solve_hierarchy(mp, backend, **kwargs).to_json_dict()


def cmd_bound(args, cfg: RunConfig):
    from .measures import LinearBoundInputs, linear_bound_epsilon, percent_half_up
    out = []
    for b in args.score:
        inp = LinearBoundInputs(b, args.set_sup, args.all_sup, args.all_inf)
        e = linear_bound_epsilon(inp)
        out.append({"score": b, "eps": e, "eps_percent": str(percent_half_up(e))})
    return out


def cmd_table1(args, cfg: RunConfig):
    from .reproduce import table1_eps2
    exp = load_expected(cfg.expected)
    return table1_eps2(exp["table1_scores"])


def cmd_experiments(args, cfg: RunConfig):
    from .reproduce import experiments
    exp = load_expected(cfg.expected)
    scores = args.score or exp["experiment_scores"]
    return experiments(scores, args.hierarchy_file)


def cmd_reproduce(args, cfg: RunConfig):
    from .reproduce import rows_to_csv, rows_to_json, run
    exp = load_expected(cfg.expected)
    try:
        rows = run(args.only, cfg, exp, extended=args.extended, echo=lambda s: print(s, file=sys.stderr))
    except KeyError as exc:
        raise UsageError(f"unknown criterion or module {exc}") from None
    failed = [r for r in rows if not r.passed]
    if cfg.format == "csv":
        text = rows_to_csv(rows)
        if cfg.output:
            Path(cfg.output).write_text(text)
        else:
            sys.stdout.write(text)
    else:
        emit({"rows": rows_to_json(rows), "failed": [f"{r.criterion} {r.name}" for r in failed]}, cfg,
             "reproduce")
    for r in failed:
        print(f"FAILED: criterion {r.criterion} {r.name}", file=sys.stderr)
    return EXIT_FAIL if failed else EXIT_OK


HANDLERS = {
    "bell": cmd_bell, "measures": cmd_measures, "sim": cmd_sim, "hierarchy": cmd_hierarchy,
    "bound": cmd_bound, "table1": cmd_table1, "experiments": cmd_experiments, "reproduce": cmd_reproduce,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="RNG seed (default 0)")
    common.add_argument("--jobs", type=int, default=argparse.SUPPRESS, help="worker processes")
    common.add_argument("--format", choices=["json", "csv"], default=argparse.SUPPRESS)
    common.add_argument("--config", default=argparse.SUPPRESS, help="flat key = value file")
    common.add_argument("--output", "-o", default=argparse.SUPPRESS, help="write here instead of stdout")
    common.add_argument("--expected", default=argparse.SUPPRESS, help="expected-values JSON")
    common.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)

    p = argparse.ArgumentParser(prog="realqm", parents=[common],
                                description="Real versus complex quantum theory in network Bell tests.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("bell", parents=[common], help="Bell functional and strategies")
    b.add_argument("action", choices=["score", "seesaw", "optimal", "local"])
    b.add_argument("--behavior")
    b.add_argument("--field", choices=["real", "complex"], default="complex")
    b.add_argument("--dims", type=int, nargs=3, default=[2, 2, 2])
    b.add_argument("--seeds", type=int)
    b.add_argument("--iters", type=int, default=200)
    b.add_argument("--save-strategy")

    m = sub.add_parser("measures", parents=[common], help="distances and entanglement")
    m.add_argument("action", choices=["dsep", "dind", "ef", "pure", "linear-bound", "monotonicity"])
    m.add_argument("--state")
    m.add_argument("--score", type=float, default=8.09)
    m.add_argument("--measure", default="dsep", choices=["dsep", "dind-upper", "trace-distance"])
    m.add_argument("--mode", default="local", choices=["local", "replace", "global"])
    m.add_argument("--trials", type=int)

    s = sub.add_parser("sim", parents=[common], help="real simulation with a reference frame")
    s.add_argument("action", choices=["lift", "broadcast", "frame", "network"])
    s.add_argument("--state")
    s.add_argument("--frame", type=int, default=1)
    s.add_argument("--n", type=int, default=1)
    s.add_argument("--site", type=int, default=0)
    s.add_argument("--strategy")
    s.add_argument("--audit", help="also write the audit list here")

    h = sub.add_parser("hierarchy", parents=[common], help="moment-matrix bounds")
    h.add_argument("action", choices=["build", "solve"])
    h.add_argument("--level", type=int, default=1)
    h.add_argument("--eps", type=float, default=0.0)
    h.add_argument("--backend", choices=["interior", "splitting", "export"], default="interior")
    h.add_argument("--export")
    h.add_argument("--fixed-behavior")
    h.add_argument("--tol", type=float)
    h.add_argument("--max-iters", type=int, default=20000)

    bd = sub.add_parser("bound", parents=[common], help="linear bound on the distance from a score")
    bd.add_argument("--score", type=float, nargs="+", required=True)
    bd.add_argument("--set-sup", type=float, default=7.66)
    bd.add_argument("--all-sup", type=float, default=6 * np.sqrt(2))
    bd.add_argument("--all-inf", type=float, default=-6 * np.sqrt(2))

    sub.add_parser("table1", parents=[common], help="eps2 row of the bound table")

    e = sub.add_parser("experiments", parents=[common], help="bounds for measured scores")
    e.add_argument("--score", type=float, nargs="+")
    e.add_argument("--hierarchy-file", help="JSON list of saved bound reports")

    r = sub.add_parser("reproduce", parents=[common], help="acceptance table")
    r.add_argument("--only", nargs="+", help="criterion ids or module names")
    r.add_argument("--extended", action="store_true", help="include the level-2 splitting solve (minutes)")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(getattr(args, "config", None), seed=getattr(args, "seed", None),
                          jobs=getattr(args, "jobs", None), format=getattr(args, "format", None),
                          output=getattr(args, "output", None), expected=getattr(args, "expected", None))
        result = HANDLERS[args.command](args, cfg)
        if args.command == "reproduce":
            return result
        emit(result, cfg, args.command)
        return EXIT_OK
    except (ConfigError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
