"""See-saw over seeds and local dimensions, complex and real."""

import argparse

from realqm.seesaw import seesaw_best


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--seeds", type=int, default=20)
    p.add_argument("--iters", type=int, default=200)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--dims", nargs="+", default=["2,2,2", "2,4,2", "4,1,4"],
                   help="comma-separated (dA, dB, dC) triples")
    args = p.parse_args()
    for fld in ("complex", "real"):
        for spec in args.dims:
            dims = tuple(int(d) for d in spec.split(","))
            best, runs = seesaw_best(fld, dims, seeds=range(args.seeds), iters=args.iters, jobs=args.jobs)
            conv = sum(r.converged for r in runs)
            print(f"{fld:7} dims={dims}: best {best.score:.6f} (seed {best.seed}), "
                  f"{conv}/{len(runs)} converged", flush=True)


if __name__ == "__main__":
    main()
