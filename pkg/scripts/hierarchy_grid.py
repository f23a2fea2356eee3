"""Level-1 bounds on an eps grid, saved as a JSON list of bound reports.

The output can be passed to ``realqm experiments --hierarchy-file``.
"""

import argparse
import json
import time

from realqm.hierarchy import build_moment_problem, solve_hierarchy


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--level", type=int, default=1)
    p.add_argument("--eps", type=float, nargs="+", default=[0.0, 0.1, 0.3, 0.5])
    p.add_argument("--backend", choices=["interior", "splitting"], default="interior")
    p.add_argument("--tol", type=float)
    p.add_argument("-o", "--output", default="hierarchy_grid.json")
    args = p.parse_args()
    reports = []
    for eps in args.eps:
        t0 = time.perf_counter()
        rep = solve_hierarchy(build_moment_problem(args.level, eps), args.backend, tol=args.tol)
        reports.append(rep.to_json_dict())
        print(f"eps={eps:<5} bound={rep.bound} status={rep.status} ({time.perf_counter() - t0:.0f}s)", flush=True)
    with open(args.output, "w") as fh:
        json.dump(reports, fh, indent=2)
    print(f"wrote {args.output}")


if __name__ == "__main__":
    main()
