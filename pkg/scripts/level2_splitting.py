"""Level-2 bound with the splitting solver (about 11 minutes at tol 1e-3 on one core)."""

import argparse
import json
import logging
import time

from realqm.hierarchy import build_moment_problem, solve_hierarchy


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--eps", type=float, default=0.0)
    p.add_argument("--tol", type=float, default=1e-3)
    p.add_argument("--max-iters", type=int, default=20000)
    p.add_argument("-o", "--output", default="level2_splitting.json")
    args = p.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")
    mp = build_moment_problem(2, args.eps)
    t0 = time.perf_counter()
    rep = solve_hierarchy(mp, "splitting", tol=args.tol, max_iters=args.max_iters, verbose=True)
    d = rep.to_json_dict()
    d["elapsed"] = time.perf_counter() - t0
    d["iterations"] = rep.info.get("iterations")
    print(json.dumps(d, indent=2))
    with open(args.output, "w") as fh:
        json.dump(d, fh, indent=2)


if __name__ == "__main__":
    main()
