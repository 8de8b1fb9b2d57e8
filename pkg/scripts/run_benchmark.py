#!/usr/bin/env python3
"""Train the stock presets on the 10-class Gaussian split benchmark.

Writes one metrics file per method/seed plus a summary.json, and prints
the final average-accuracy table. The generated config file is saved next
to the results so the run can be repeated or edited by hand:

    python3 scripts/run_benchmark.py --seeds 0,1,2,3,4 --out results/benchmark
"""

import argparse
import sys
from pathlib import Path

from uer.cli import main as uer_main

CONFIG = """\
# generated by scripts/run_benchmark.py
dataset.kind = split-gauss-10
stream.stages = {stages}
stream.classes_per_stage = {classes_per_stage}
run.methods = {methods}
run.seeds = {seeds}
run.out = {out}
"""


def parse_args():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--methods", default="uer,uer-a,er,lucir,finetune",
                   help="comma-separated preset names")
    p.add_argument("--seeds", default="0,1,2,3,4")
    p.add_argument("--stages", type=int, default=5)
    p.add_argument("--classes-per-stage", type=int, default=2)
    p.add_argument("--buffer", type=int, default=None,
                   help="buffer capacity for every replay method (default 500)")
    p.add_argument("--out", default="results/benchmark")
    return p.parse_args()


def main() -> int:
    args = parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cfg_path = out / "benchmark.cfg"
    cfg_path.write_text(CONFIG.format(stages=args.stages,
                                      classes_per_stage=args.classes_per_stage,
                                      methods=args.methods, seeds=args.seeds,
                                      out=out))
    argv = ["run", "--config", str(cfg_path)]
    if args.buffer is not None:
        argv += ["--buffer", str(args.buffer)]
    return uer_main(argv)


if __name__ == "__main__":
    sys.exit(main())
