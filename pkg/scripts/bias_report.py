#!/usr/bin/env python3
"""Per-stage bias diagnostics for replay methods side by side.

Trains the requested presets and prints, for each stage, the accumulated
parameter movement, the scorer norms and biases of previous vs current
classes, and the average posterior mass each group receives:

    python3 scripts/bias_report.py --methods uer,er --seed 0
"""

import argparse
import sys
from pathlib import Path

from uer.cli import main as uer_main

CONFIG = """\
# generated by scripts/bias_report.py
dataset.kind = split-gauss-10
stream.stages = {stages}
stream.classes_per_stage = {classes_per_stage}
run.methods = {methods}
run.seeds = {seed}
run.out = {out}
"""


def parse_args():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--methods", default="uer,er")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--stages", type=int, default=5)
    p.add_argument("--classes-per-stage", type=int, default=2)
    p.add_argument("--buffer", type=int, default=None)
    p.add_argument("--out", default="results/bias_report")
    return p.parse_args()


def main() -> int:
    args = parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cfg_path = out / "diag.cfg"
    cfg_path.write_text(CONFIG.format(stages=args.stages,
                                      classes_per_stage=args.classes_per_stage,
                                      methods=args.methods, seed=args.seed,
                                      out=out))
    argv = ["diag", "--config", str(cfg_path)]
    if args.buffer is not None:
        argv += ["--buffer", str(args.buffer)]
    return uer_main(argv)


if __name__ == "__main__":
    sys.exit(main())
