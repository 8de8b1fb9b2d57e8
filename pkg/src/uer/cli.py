"""Command-line driver.

Subcommands:

    run          train every configured method across its seeds
    sweep-alpha  rerun the uer method once per requested alpha
    table1       the 8-way learn/replay/test grid on a 2-stage split
    diag         per-stage bias diagnostics for the configured methods

Exit codes: 0 success, 1 bad configuration or flags, 2 at least one run
failed. Per-run metrics land in "<out>/<method>_seed<seed>.metrics.jsonl"
with a "summary.json" next to them; reruns with the same config and seeds
reproduce every output byte.
"""

from __future__ import annotations

import argparse
import json
import sys
import traceback
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .config import ConfigError, ExperimentConfig, build_dataset, parse_config
from .evaluation import posterior_group_means, write_metrics
from .trainer import ExperimentResult, TABLE1_GRID, run_experiment, triple_method, uer_method


@dataclass
class RunSummary:
    """Final average accuracy per method per seed, plus file locations."""
    methods: dict  # name -> {"per_seed": {seed: A}, "mean": .., "std": .., "files": [..]}

    def to_json(self) -> str:
        return json.dumps({"methods": self.methods}, indent=2) + "\n"


@dataclass
class RunOutcome:
    summary: RunSummary
    failures: list[str]
    results: dict  # (method name, seed) -> ExperimentResult


def _final_accuracy(result: ExperimentResult) -> float:
    return result.metrics[-1].average_accuracy


def _seed_std(values: list[float]) -> float:
    if len(values) < 2:
        return 0.0
    return float(np.std(values, ddof=1))


def run_config(cfg: ExperimentConfig, echo=print) -> RunOutcome:
    """Run methods x seeds, write metrics files, and collect the summary.

    A failing run is reported and skipped; the remaining runs still go.
    """
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    methods_summary: dict = {}
    failures: list[str] = []
    results: dict = {}
    for method in cfg.methods:
        seeds = method.seeds if method.seeds is not None else cfg.seeds
        per_seed: dict = {}
        files: list[str] = []
        for seed in seeds:
            try:
                dataset = build_dataset(cfg.dataset, seed)
                result = run_experiment(dataset, method, cfg.stream, seed)
            except Exception as err:  # noqa: BLE001 - isolate per-run failures
                failures.append(f"{method.name} seed {seed}: {err}")
                echo(f"FAILED {method.name} seed {seed}: {err}", file=sys.stderr)
                continue
            path = out / f"{method.name}_seed{seed}.metrics.jsonl"
            write_metrics(path, result.metrics)
            results[(method.name, int(seed))] = result
            per_seed[str(seed)] = _final_accuracy(result)
            files.append(str(path))
        values = list(per_seed.values())
        methods_summary[method.name] = {
            "per_seed": per_seed,
            "mean": float(np.mean(values)) if values else None,
            "std": _seed_std(values),
            "files": files,
        }
    summary = RunSummary(methods=methods_summary)
    with open(out / "summary.json", "wb") as fh:
        fh.write(summary.to_json().encode("utf-8"))
    return RunOutcome(summary=summary, failures=failures, results=results)


def _print_summary(summary: RunSummary, echo=print) -> None:
    echo(f"{'method':<14} {'mean A':>8} {'std':>8}  per-seed")
    for name, info in summary.methods.items():
        mean = "n/a" if info["mean"] is None else f"{info['mean']:.4f}"
        per_seed = " ".join(f"{s}:{a:.4f}" for s, a in info["per_seed"].items())
        echo(f"{name:<14} {mean:>8} {info['std']:>8.4f}  {per_seed}")


def _apply_flag_overrides(cfg: ExperimentConfig, args) -> ExperimentConfig:
    if getattr(args, "seed", None):
        seeds = tuple(int(s) for s in args.seed.split(","))
        cfg = replace(cfg, seeds=seeds,
                      methods=tuple(replace(m, seeds=None) for m in cfg.methods))
    if getattr(args, "out", None):
        cfg = replace(cfg, out_dir=args.out)
    if getattr(args, "buffer", None) is not None:
        cfg = replace(cfg, methods=tuple(
            replace(m, buffer_capacity=args.buffer) if m.replay_enabled else m
            for m in cfg.methods))
    return cfg


def cmd_run(args) -> int:
    cfg = _apply_flag_overrides(parse_config(args.config), args)
    outcome = run_config(cfg)
    _print_summary(outcome.summary)
    return 2 if outcome.failures else 0


def cmd_sweep_alpha(args) -> int:
    cfg = _apply_flag_overrides(parse_config(args.config), args)
    base = next((m for m in cfg.methods if m.name == "uer"), None)
    if base is None:
        raise ConfigError("sweep-alpha needs the uer method in run.methods")
    try:
        alphas = [float(a) for a in args.alpha.split(",")]
    except ValueError:
        raise ConfigError(f"bad --alpha list {args.alpha!r}") from None
    rows = []
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    seeds = base.seeds if base.seeds is not None else cfg.seeds
    for alpha in alphas:
        method = uer_method(alpha=alpha, name=f"uer_alpha{alpha:g}",
                            gamma=base.gamma, lr=base.lr,
                            buffer_capacity=base.buffer_capacity,
                            hidden_dims=base.hidden_dims)
        finals, prevs, currs = [], [], []
        for seed in seeds:
            dataset = build_dataset(cfg.dataset, seed)
            result = run_experiment(dataset, method, cfg.stream, seed)
            write_metrics(out / f"{method.name}_seed{seed}.metrics.jsonl", result.metrics)
            last = result.metrics[-1]
            finals.append(last.average_accuracy)
            prevs.append(last.acc_previous if last.acc_previous is not None else float("nan"))
            currs.append(last.acc_current)
        rows.append({
            "alpha": alpha,
            "mean_average_accuracy": float(np.mean(finals)),
            "mean_acc_previous": float(np.mean(prevs)),
            "mean_acc_current": float(np.mean(currs)),
        })
    with open(out / "alpha_sweep.json", "wb") as fh:
        fh.write((json.dumps(rows, indent=2) + "\n").encode("utf-8"))
    print(f"{'alpha':>6} {'A':>8} {'prev':>8} {'curr':>8}")
    for r in rows:
        print(f"{r['alpha']:>6g} {r['mean_average_accuracy']:>8.4f} "
              f"{r['mean_acc_previous']:>8.4f} {r['mean_acc_current']:>8.4f}")
    return 0


_TABLE1_CONFIG = """
dataset.kind = split-gauss-10
stream.stages = 2
stream.classes_per_stage = 5
run.methods = uer
run.seeds = 0,1,2
run.out = results/table1
"""


def cmd_table1(args) -> int:
    if args.config:
        cfg = parse_config(args.config)
    else:
        from .config import parse_config_text
        cfg = parse_config_text(_TABLE1_CONFIG)
    cfg = _apply_flag_overrides(cfg, args)
    buffer = args.buffer if args.buffer is not None else 200
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    header = (f"{'learn':<8} {'replay':<8} {'test':<8} {'A_all':>7} {'A_prev':>7} "
              f"{'A_curr':>7} {'|W_p|':>7} {'|W_c|':>7} {'w_p':>7} {'w_c':>7} "
              f"{'b_p':>7} {'b_c':>7}")
    print(header)
    for learn, replay, test in TABLE1_GRID:
        name = f"{learn}-{replay}-{test}"
        method = triple_method(name, learn, replay, test, buffer_capacity=buffer)
        cols = []
        for seed in cfg.seeds:
            dataset = build_dataset(cfg.dataset, seed)
            result = run_experiment(dataset, method, cfg.stream, seed)
            write_metrics(out / f"{name}_seed{seed}.metrics.jsonl", result.metrics)
            m = result.metrics[-1]
            cols.append([m.average_accuracy, m.acc_previous, m.acc_current,
                         m.norm_prev, m.norm_curr, m.mean_w_prev, m.mean_w_curr,
                         m.mean_b_prev, m.mean_b_curr])
        mean = np.mean(np.asarray(cols, dtype=np.float64), axis=0)
        print(f"{learn:<8} {replay:<8} {test:<8} " + " ".join(f"{v:>7.3f}" for v in mean))
    return 0


def cmd_diag(args) -> int:
    cfg = _apply_flag_overrides(parse_config(args.config), args)
    outcome = run_config(cfg)
    for method in cfg.methods:
        seeds = method.seeds if method.seeds is not None else cfg.seeds
        seed = int(seeds[0])
        if (method.name, seed) not in outcome.results:
            continue
        result = outcome.results[(method.name, seed)]
        print(f"\n{method.name} (seed {seed})")
        print(f"{'stage':>5} {'dW_L1':>10} {'|W_p|':>7} {'|W_c|':>7} {'b_p':>8} "
              f"{'b_c':>8} {'post_p':>8} {'post_c':>8}")
        for m in result.metrics:
            prev_post, curr_post = posterior_group_means(m)
            fmt = lambda v, w=7: " " * (w - 3) + "n/a" if v is None else f"{v:>{w}.3f}"
            print(f"{m.stage:>5} {m.accumulated_param_change:>10.3f} "
                  f"{fmt(m.norm_prev)} {fmt(m.norm_curr)} "
                  f"{fmt(m.mean_b_prev, 8)} {fmt(m.mean_b_curr, 8)} "
                  f"{fmt(prev_post, 8)} {curr_post:>8.3f}")
    return 2 if outcome.failures else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="uer", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required,
                       help="experiment config file" + ("" if config_required
                                                        else " (optional)"))
        p.add_argument("--seed", help="comma-separated seed override")
        p.add_argument("--out", help="output directory override")
        p.add_argument("--buffer", type=int, help="buffer capacity override")

    common(sub.add_parser("run", help="train configured methods"))
    p = sub.add_parser("sweep-alpha", help="rerun uer across replay mix weights")
    common(p)
    p.add_argument("--alpha", required=True, help="comma-separated alpha values")
    common(sub.add_parser("table1", help="8-way scoring grid"), config_required=False)
    common(sub.add_parser("diag", help="per-stage bias diagnostics"))
    return parser


COMMANDS = {
    "run": cmd_run,
    "sweep-alpha": cmd_sweep_alpha,
    "table1": cmd_table1,
    "diag": cmd_diag,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits on usage errors and --help; fold --help into success
        return 0 if exc.code in (0, None) else 1
    try:
        return COMMANDS[args.command](args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 1
    except Exception as err:  # noqa: BLE001 - the CLI boundary reports, not raises
        traceback.print_exc()
        print(f"run failed: {err}", file=sys.stderr)
        return 2


def entry() -> None:
    sys.exit(main())
