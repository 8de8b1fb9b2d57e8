#!/usr/bin/env python3
"""Sweep the replay mixing weight and tabulate its effect.

Reruns the decomposed-scoring method once per weight on a short 2-stage
split, printing average / previous-class / current-class accuracy and
writing alpha_sweep.json into the output directory:

    python3 scripts/alpha_sweep.py --alphas 0,0.25,0.5,0.75,1 --seeds 0,1,2
"""

import argparse
import sys
from pathlib import Path

from uer.cli import main as uer_main

CONFIG = """\
# generated by scripts/alpha_sweep.py
dataset.kind = split-gauss-10
stream.stages = {stages}
stream.classes_per_stage = {classes_per_stage}
run.methods = uer
run.seeds = {seeds}
run.out = {out}
method.uer.buffer = {buffer}
"""


def parse_args():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--alphas", default="0,0.25,0.5,0.75,1",
                   help="comma-separated mixing weights in [0,1]")
    p.add_argument("--seeds", default="0,1,2")
    p.add_argument("--stages", type=int, default=2)
    p.add_argument("--classes-per-stage", type=int, default=5)
    p.add_argument("--buffer", type=int, default=200)
    p.add_argument("--out", default="results/alpha_sweep")
    return p.parse_args()


def main() -> int:
    args = parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cfg_path = out / "sweep.cfg"
    cfg_path.write_text(CONFIG.format(stages=args.stages,
                                      classes_per_stage=args.classes_per_stage,
                                      seeds=args.seeds, out=out,
                                      buffer=args.buffer))
    return uer_main(["sweep-alpha", "--config", str(cfg_path),
                     "--alpha", args.alphas])


if __name__ == "__main__":
    sys.exit(main())
