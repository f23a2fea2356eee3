"""Acceptance table: every desk-scale number recomputed and compared with expected values."""

from __future__ import annotations

import csv
import io
import math
import tempfile
import time
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable, Iterable

import numpy as np

from .config import RunConfig, load_expected

PASS, FAIL, SKIP = "pass", "fail", "skip"


@dataclass
class Row:
    criterion: str
    module: str
    name: str
    measured: object
    expected: object
    tol: float | None
    status: str
    seconds: float = 0.0
    note: str = ""

    @property
    def passed(self) -> bool:
        return self.status != FAIL

    def line(self) -> str:
        tol = "" if self.tol is None else f" tol={self.tol:g}"
        note = f" ({self.note})" if self.note else ""
        return (f"[{self.status.upper()}] {self.criterion} {self.name}: measured={_short(self.measured)} "
                f"expected={_short(self.expected)}{tol} {self.seconds:.1f}s{note}")


def _short(v) -> str:
    if isinstance(v, float):
        return f"{v:.10g}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_short(x) for x in v) + "]"
    return str(v)


def _close(a: float, b: float, tol: float) -> bool:
    return bool(np.isfinite(a)) and abs(a - b) <= tol


class _Timer:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.seconds = time.perf_counter() - self.t0


# ---------------------------------------------------------------------------
# criteria


def c1_optimum(exp: dict, cfg: RunConfig) -> list[Row]:
    from .bellnet import bell_score, behavior_from_strategy, build_optimal_complex_strategy
    from .seesaw import seesaw_best
    tol = exp["tolerances"]["optimum"]
    with _Timer() as t:
        built = bell_score(behavior_from_strategy(build_optimal_complex_strategy())).total
    rows = [Row("1", "bell", "optimal complex strategy score", built, exp["optimum"], tol,
                PASS if _close(built, exp["optimum"], tol) else FAIL, t.seconds)]
    with _Timer() as t:
        best, _ = seesaw_best("complex", (2, 2, 2), seeds=range(cfg.seed, cfg.seed + cfg.seeds),
                              jobs=cfg.jobs)
    ok = _close(best.score, exp["optimum"], tol) and t.seconds < 60
    rows.append(Row("1", "bell", f"complex see-saw best of {cfg.seeds} seeds", best.score, exp["optimum"],
                    tol, PASS if ok else FAIL, t.seconds, "runtime limit 60s"))
    return rows


def c2_rho_bar(exp: dict, cfg: RunConfig) -> list[Row]:
    from .measures import dind_bounds, dsep_two_rebit, rho_bar
    with _Timer() as t:
        d = dsep_two_rebit(rho_bar()).distance
    rows = [Row("2", "measures", "dsep of rho_bar", d, exp["dsep_rho_bar"], exp["tolerances"]["dsep"],
                PASS if _close(d, exp["dsep_rho_bar"], exp["tolerances"]["dsep"]) else FAIL, t.seconds)]
    tol = exp["tolerances"]["dind"]
    with _Timer() as t:
        br = dind_bounds(rho_bar(), seed=cfg.seed)
    lo, hi = exp["dind_rho_bar"]
    ok = _close(br.lower, lo, tol) and _close(br.upper, hi, tol) and t.seconds < 5
    rows.append(Row("2", "measures", "dind bracket of rho_bar", [br.lower, br.upper], [lo, hi], tol,
                    PASS if ok else FAIL, t.seconds, "runtime limit 5s"))
    return rows


def c3_ef(exp: dict, cfg: RunConfig) -> list[Row]:
    from .measures import ef_two_rebit, rho_bar
    from .qmat import DensityMatrix, ket, proj
    tol = exp["tolerances"]["ef"]
    with _Timer() as t:
        a = ef_two_rebit(rho_bar())
        b = ef_two_rebit(DensityMatrix(proj(ket(0, 0)), (2, 2)))
    return [Row("3", "measures", "E_F of rho_bar", a, exp["ef_rho_bar"], tol,
                PASS if _close(a, exp["ef_rho_bar"], tol) else FAIL, t.seconds),
            Row("3", "measures", "E_F of |00>", b, exp["ef_00"], tol,
                PASS if _close(b, exp["ef_00"], tol) else FAIL, t.seconds)]


def c4_table1(exp: dict, cfg: RunConfig) -> list[Row]:
    from . import measures  # noqa: F401  (import cost is not part of the computation)
    with _Timer() as t:
        got = table1_eps2(exp["table1_scores"])
    vals = [r["eps2_percent"] for r in got]
    ok = vals == exp["table1_eps2"] and t.seconds < 1
    return [Row("4", "table1", "eps2 row (percent, one decimal)", vals, exp["table1_eps2"], None,
                PASS if ok else FAIL, t.seconds)]


def c5_bell_states(exp: dict, cfg: RunConfig) -> list[Row]:
    from .measures import bell_state, dsep_two_rebit
    tol = exp["tolerances"]["dsep"]
    rows = []
    for name in ("phi+", "phi-", "psi+", "psi-"):
        with _Timer() as t:
            d = dsep_two_rebit(bell_state(name)).distance
        rows.append(Row("5", "measures", f"dsep of {name}", d, exp["bell_state_dsep"], tol,
                        PASS if _close(d, exp["bell_state_dsep"], tol) else FAIL, t.seconds))
    return rows


def random_lift_instances(n: int, seed: int):
    """(state, POVM, measured subsystems, frame size, site) with system dims <= (4, 4)."""
    from .qmat import random_povm, random_state
    rng = np.random.default_rng(seed)
    for _ in range(n):
        dims = tuple(int(d) for d in rng.integers(1, 5, size=2))
        rho = random_state(dims, rng, field="complex")
        sub = [int(rng.integers(0, 2))] if rng.random() < 0.7 else [0, 1]
        d = int(np.prod([dims[i] for i in sub]))
        povm = random_povm(d, int(rng.integers(2, 5)), rng)
        frame = int(rng.integers(1, 3))
        yield rho, povm, sub, frame, int(rng.integers(0, frame))


def c6_simulation(exp: dict, cfg: RunConfig) -> list[Row]:
    from .bellnet import bell_score, build_optimal_complex_strategy
    from .measures import rho_bar
    from .realsim import complex_born, lift_state, simulate_measurement, simulate_network
    tol = exp["tolerances"]["born"]
    with _Timer() as t:
        worst = 0.0
        for rho, povm, sub, n, site in random_lift_instances(1000, cfg.seed):
            p, _ = simulate_measurement(lift_state(rho, n), povm, sub, site)
            q, _ = complex_born(rho, povm, sub)
            worst = max(worst, float(np.max(np.abs(p - q))))
    rows = [Row("6", "sim", "lifted vs complex Born, 1000 instances", worst, 0.0, tol,
                PASS if worst <= tol else FAIL, t.seconds)]
    with _Timer() as t:
        res = simulate_network(build_optimal_complex_strategy())
        score = bell_score(res.behavior).total
        dev = float(np.max(np.abs(res.source_state - rho_bar().mat)))
    tol1 = exp["tolerances"]["optimum"]
    rows.append(Row("6", "sim", "network simulation score", score, exp["optimum"], tol1,
                    PASS if _close(score, exp["optimum"], tol1) and res.locality_ok else FAIL, t.seconds,
                    "audit locality " + ("ok" if res.locality_ok else "violated")))
    tol2 = exp["tolerances"]["network_state"]
    rows.append(Row("6", "sim", "pre-shared source state vs rho_bar", dev, 0.0, tol2,
                    PASS if dev <= tol2 else FAIL, t.seconds))
    return rows


def c7_broadcast(exp: dict, cfg: RunConfig) -> list[Row]:
    from .qmat import random_state
    from .realsim import broadcast, frame_state, lift_state
    tol = exp["tolerances"]["broadcast"]
    rng = np.random.default_rng(cfg.seed)
    with _Timer() as t:
        fix = 0.0
        lifted = 0.0
        for n in range(1, 7):
            nxt = frame_state(n + 1).mat
            for site in range(n):
                fix = max(fix, float(np.max(np.abs(broadcast(frame_state(n), site).mat - nxt))))
            if n <= 4:
                rho = random_state((2,), rng, field="complex")
                target = lift_state(rho, n + 1).carrier.mat
                for site in range(n):
                    got = broadcast(lift_state(rho, n), site).carrier.mat
                    lifted = max(lifted, float(np.max(np.abs(got - target))))
    return [Row("7", "sim", "broadcast fixpoint n=1..6, all sites", fix, 0.0, tol,
                PASS if fix <= tol else FAIL, t.seconds),
            Row("7", "sim", "broadcast commutes with lifting", lifted, 0.0, tol,
                PASS if lifted <= tol else FAIL, t.seconds)]


def c8_frame(exp: dict, cfg: RunConfig) -> list[Row]:
    from .realsim import frame_state, lift_state, simulate_measurement
    tol = exp["tolerances"]["frame"]
    with _Timer() as t:
        worst = 0.0
        kept = True
        for rho, povm, sub, n, site in random_lift_instances(200, cfg.seed + 1):
            s = lift_state(rho, n)
            _, posts = simulate_measurement(s, povm, sub, site)
            target = frame_state(n).mat
            for post in posts:
                if post is None:
                    continue
                kept &= post.n == n
                worst = max(worst, float(np.max(np.abs(post.frame_marginal() - target))))
    return [Row("8", "sim", "frame marginal after measurement", worst, 0.0, tol,
                PASS if worst <= tol and kept else FAIL, t.seconds)]


def c9_monotonicity(exp: dict, cfg: RunConfig) -> list[Row]:
    from .measures import monotonicity_harness
    rows = []
    for measure, key in (("trace-distance", "trace_monotone"), ("dsep", "dsep_monotone")):
        tol = exp["tolerances"][key]
        with _Timer() as t:
            rep = monotonicity_harness(measure, trials=cfg.trials, seed=cfg.seed, mode="local", tol=tol,
                                       jobs=cfg.jobs)
        rows.append(Row("9", "measures", f"{measure} monotone, {cfg.trials} trials", rep.violations, 0, tol,
                        PASS if rep.violations == 0 else FAIL, t.seconds,
                        f"max increase {rep.max_violation:.2e}"))
    return rows


def c10_complexification(exp: dict, cfg: RunConfig) -> list[Row]:
    from .qmat import random_channel
    from .realsim import complexify_and_check_cp
    tol = exp["tolerances"]["choi"]
    rng = np.random.default_rng(cfg.seed)
    with _Timer() as t:
        worst = math.inf
        for _ in range(cfg.trials):
            din, dout = (int(d) for d in rng.integers(1, 5, size=2))
            ch = random_channel(din, dout, rng, n_kraus=int(rng.integers(1, 5)), field="real")
            worst = min(worst, complexify_and_check_cp(ch)[1])
        neg = complexify_and_check_cp(lambda x: x.T, 2)[1]
    return [Row("10", "sim", f"complexified Choi min eigenvalue, {cfg.trials} maps", worst, 0.0, tol,
                PASS if worst >= -tol else FAIL, t.seconds),
            Row("10", "sim", "transpose flagged non-CP", neg, "< 0", tol,
                PASS if neg < -tol else FAIL, t.seconds)]


def c11_hierarchy(exp: dict, cfg: RunConfig) -> list[Row]:
    from .bellnet import behavior_from_strategy, build_optimal_complex_strategy, no_signalling_box
    from .hierarchy import build_basis, build_moment_problem, solve_hierarchy
    from .sdp import inspect_sdpa
    t_all = time.perf_counter()
    rows = []
    with _Timer() as t:
        sizes = [len(build_basis(p, n)) for p, n in (("alice", 1), ("alice", 2), ("charlie", 1), ("charlie", 2))]
    rows.append(Row("11", "hierarchy", "basis sizes", sizes, exp["basis_sizes"], None,
                    PASS if sizes == exp["basis_sizes"] else FAIL, t.seconds))
    with _Timer() as t:
        mp2 = build_moment_problem(2, 0.0)
        moment = mp2.block_sizes[:5]
    ok = moment == [exp["level2_block"]] * 5 and mp2.block_sizes[5] == 2 * exp["level2_block"]
    rows.append(Row("11", "hierarchy", "level-2 moment block sides", moment, [exp["level2_block"]] * 5, None,
                    PASS if ok else FAIL, t.seconds))
    del mp2
    lo, hi = exp["level1_interval"]
    bounds = []
    with _Timer() as t:
        for eps in exp["eps_grid"]:
            rep = solve_hierarchy(build_moment_problem(1, eps), "interior", tol=cfg.tol)
            bounds.append(rep.bound if rep.bound is not None else math.nan)
    b0 = bounds[0]
    rows.append(Row("11", "hierarchy", "level-1 bound at eps=0", b0, [lo, hi], None,
                    PASS if lo <= b0 <= hi else FAIL, t.seconds / len(bounds)))
    mono = all(b2 >= b1 - exp["tolerances"]["level_monotone"] for b1, b2 in zip(bounds, bounds[1:]))
    rows.append(Row("11", "hierarchy", "level-1 bound nondecreasing on eps grid", bounds, "nondecreasing",
                    exp["tolerances"]["level_monotone"], PASS if mono else FAIL, t.seconds))
    beh = behavior_from_strategy(build_optimal_complex_strategy())
    with _Timer() as t:
        rep1 = solve_hierarchy(build_moment_problem(1, 0.0, beh), "interior", tol=cfg.tol)
    rows.append(Row("11", "hierarchy", "level-1 feasibility of the 6sqrt2 behavior at eps=0",
                    {True: "feasible", False: "infeasible", None: "undecided"}[rep1.feasible],
                    "informational", None, SKIP, t.seconds,
                    "level 1 is too loose to reject; rejection goes through the level-2 export"))
    with _Timer() as t:
        rep_ns = solve_hierarchy(build_moment_problem(1, 0.0, no_signalling_box()), "interior", tol=cfg.tol)
    rows.append(Row("11", "hierarchy", "level-1 feasibility rejects the score-12 no-signalling box",
                    {True: "feasible", False: "infeasible", None: "undecided"}[rep_ns.feasible], "infeasible",
                    None, PASS if rep_ns.feasible is False else FAIL, t.seconds))
    with _Timer() as t, tempfile.TemporaryDirectory() as tmp:
        mpf = build_moment_problem(2, 0.0, beh)
        path = Path(tmp) / "feasibility-l2.dat-s"
        solve_hierarchy(mpf, "export", path=path)
        info = inspect_sdpa(path)
        ok = (not info["errors"] and [abs(s) for s in info["sizes"]] == mpf.block_sizes
              and info["m"] == mpf.n_variables)
    rows.append(Row("11", "hierarchy", "level-2 feasibility instance exported", [abs(s) for s in info["sizes"]],
                    mpf.block_sizes, None, PASS if ok else FAIL, t.seconds,
                    "structure verified; infeasibility decided by an external solver"))
    total = time.perf_counter() - t_all
    rows.append(Row("11", "hierarchy", "criterion runtime", total, "< 600s", None,
                    PASS if total < 600 else FAIL, total))
    return rows


def c12_level2(exp: dict, cfg: RunConfig, extended: bool = False) -> list[Row]:
    from .hierarchy import build_moment_problem, solve_hierarchy
    from .sdp import inspect_sdpa
    rows = []
    with _Timer() as t, tempfile.TemporaryDirectory() as tmp:
        mp = build_moment_problem(2, 0.0)
        path = Path(tmp) / "level2.dat-s"
        solve_hierarchy(mp, "export", path=path)
        info = inspect_sdpa(path)
        declared = [abs(s) for s in info["sizes"]]
        ok = not info["errors"] and declared == mp.block_sizes and info["m"] == mp.n_variables
    rows.append(Row("12a", "hierarchy", "level-2 SDPA export structure", declared, mp.block_sizes, None,
                    PASS if ok else FAIL, t.seconds, f"{info['m']} constraints, {info['entries']} entries"))
    if not extended:
        rows.append(Row("12b", "hierarchy", "level-2 splitting solve at eps=0", "not run",
                        exp.get("level2_target", 7.66), exp["tolerances"]["level2"], SKIP, 0.0,
                        "extended, about 11 minutes on one core; enable with --extended"))
        return rows
    tol = exp["tolerances"]["level2"]
    with _Timer() as t:
        rep = solve_hierarchy(mp, "splitting", tol=1e-3, max_iters=20000)
    b = rep.bound if rep.bound is not None else math.nan
    rows.append(Row("12b", "hierarchy", "level-2 splitting solve at eps=0", b, exp.get("level2_target", 7.66),
                    tol, PASS if _close(b, exp.get("level2_target", 7.66), tol) else FAIL, t.seconds,
                    f"status {rep.status}"))
    return rows


def c13_experiments(exp: dict, cfg: RunConfig) -> list[Row]:
    tol = exp["tolerances"]["experiment"]
    rows = []
    with _Timer() as t:
        got = experiments(exp["experiment_scores"])
    for r, want in zip(got, exp["experiment_bounds"]):
        rows.append(Row("13", "bound", f"linear bound at B={r['score']}", r["linear_bound"], want, tol,
                        PASS if _close(r["linear_bound"], want, tol) else FAIL, t.seconds))
    return rows


CRITERIA: dict[str, Callable] = {
    "1": c1_optimum, "2": c2_rho_bar, "3": c3_ef, "4": c4_table1, "5": c5_bell_states,
    "6": c6_simulation, "7": c7_broadcast, "8": c8_frame, "9": c9_monotonicity,
    "10": c10_complexification, "11": c11_hierarchy, "12": c12_level2, "13": c13_experiments,
}
MODULES = {
    "bell": ["1"], "measures": ["2", "3", "5", "9"], "table1": ["4"], "sim": ["6", "7", "8", "10"],
    "hierarchy": ["11", "12"], "bound": ["13"],
}


# ---------------------------------------------------------------------------
# table helpers shared with the CLI


def table1_eps2(scores: Iterable[float]) -> list[dict]:
    from .measures import linear_bound_epsilon, percent_half_up
    return [{"score": float(b), "eps2": linear_bound_epsilon(b),
             "eps2_percent": str(percent_half_up(linear_bound_epsilon(b)))} for b in scores]


def experiments(scores: Iterable[float], hierarchy_file: str | Path | None = None) -> list[dict]:
    """Linear bound per score, plus a bracket from saved level/eps/bound reports when given."""
    import json
    from .measures import linear_bound_epsilon
    grid = []
    if hierarchy_file is not None and Path(hierarchy_file).exists():
        data = json.loads(Path(hierarchy_file).read_text())
        grid = sorted((float(r["eps"]), float(r["bound"])) for r in data if r.get("bound") is not None)
    out = []
    for b in scores:
        row = {"score": float(b), "linear_bound": linear_bound_epsilon(b), "linear_bound_method": "operator norm"}
        if grid:
            # smallest eps whose bound is at least the score: D_Sep exceeds every eps with bound < score
            below = [e for e, bound in grid if bound < b]
            row["hierarchy_lower"] = max(below) if below else 0.0
            row["hierarchy_method"] = "moment relaxation grid"
        out.append(row)
    return out


def run(only: Iterable[str] | None = None, cfg: RunConfig | None = None, expected: dict | None = None,
        extended: bool = False, echo: Callable[[str], None] | None = None) -> list[Row]:
    """Run selected criteria (ids or module names); ``expected`` defaults to the packaged file."""
    cfg = cfg or RunConfig()
    exp = expected if expected is not None else load_expected(cfg.expected)
    ids = list(CRITERIA)
    if only:
        ids = []
        for key in only:
            if key in CRITERIA:
                ids.append(key)
            elif key in MODULES:
                ids.extend(MODULES[key])
            else:
                raise KeyError(key)
    rows = []
    for cid in dict.fromkeys(ids):
        fn = CRITERIA[cid]
        got = fn(exp, cfg, extended) if cid == "12" else fn(exp, cfg)
        for r in got:
            if echo:
                echo(r.line())
        rows.extend(got)
    return rows


def rows_to_csv(rows: list[Row]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["criterion", "module", "name", "measured", "expected", "tol", "status", "note"])
    for r in rows:
        w.writerow([r.criterion, r.module, r.name, _short(r.measured), _short(r.expected),
                    "" if r.tol is None else r.tol, r.status, r.note])
    return buf.getvalue()


def rows_to_json(rows: list[Row]) -> list[dict]:
    out = []
    for r in rows:
        d = asdict(r)
        d.pop("seconds")
        d["measured"] = _jsonable(d["measured"])
        d["expected"] = _jsonable(d["expected"])
        out.append(d)
    return out


def _jsonable(v):
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    return v
