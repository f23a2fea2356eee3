"""Write level-2 instances in SDPA sparse format for an external solver.

Two files: the bound problem at the requested eps, and the feasibility
problem with the behavior of the optimal complex strategy pinned.
"""

import argparse
from pathlib import Path

from realqm.bellnet import behavior_from_strategy, build_optimal_complex_strategy
from realqm.hierarchy import build_moment_problem, solve_hierarchy
from realqm.sdp import inspect_sdpa


def export(mp, path: Path) -> None:
    solve_hierarchy(mp, "export", path=path)
    info = inspect_sdpa(path)
    status = "ok" if not info["errors"] else "; ".join(info["errors"][:3])
    print(f"{path}: {info['m']} constraints, blocks {mp.block_sizes}, {info['entries']} entries, {status}")


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--eps", type=float, default=0.0)
    p.add_argument("--outdir", default=".")
    args = p.parse_args()
    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    export(build_moment_problem(2, args.eps), out / f"level2-eps{args.eps:g}.dat-s")
    beh = behavior_from_strategy(build_optimal_complex_strategy())
    export(build_moment_problem(2, args.eps, beh), out / f"level2-feasibility-eps{args.eps:g}.dat-s")


if __name__ == "__main__":
    main()
