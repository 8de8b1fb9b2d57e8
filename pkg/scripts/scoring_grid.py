#!/usr/bin/env python3
"""Run the full 8-way learn/replay/test scoring grid on a 2-stage split.

Every combination of dot/cosine scoring for the three roles is trained and
the final accuracy plus bias diagnostics are printed as one table row per
triple — the sign pattern of the norm and bias columns is the point:

    python3 scripts/scoring_grid.py --buffer 200 --seeds 0,1,2
"""

import argparse
import sys

from uer.cli import main as uer_main


def parse_args():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--seeds", default=None,
                   help="comma-separated seeds (default 0,1,2)")
    p.add_argument("--buffer", type=int, default=None,
                   help="buffer capacity (default 200)")
    p.add_argument("--out", default=None, help="output directory override")
    return p.parse_args()


def main() -> int:
    args = parse_args()
    argv = ["table1"]
    if args.seeds:
        argv += ["--seed", args.seeds]
    if args.buffer is not None:
        argv += ["--buffer", str(args.buffer)]
    if args.out:
        argv += ["--out", args.out]
    return uer_main(argv)


if __name__ == "__main__":
    sys.exit(main())
