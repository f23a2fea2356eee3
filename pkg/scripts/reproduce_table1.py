"""Print the eps2 row: linear lower bounds on the distance for each listed score."""

import argparse

from realqm.config import load_expected
from realqm.reproduce import table1_eps2


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--scores", type=float, nargs="+", help="override the packaged score list")
    args = p.parse_args()
    scores = args.scores or load_expected()["table1_scores"]
    print(f"{'B':>6}  {'eps2':>10}  {'%':>5}")
    for row in table1_eps2(scores):
        print(f"{row['score']:6.2f}  {row['eps2']:10.6f}  {row['eps2_percent']:>5}")


if __name__ == "__main__":
    main()
