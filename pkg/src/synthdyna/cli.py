"""Command-line entry point: run experiments, grid searches, and exports.

Subcommands: run, compare, grid, oracle, demo-theorem, gradcheck. Defaults can
come from an INI config file (one section per algorithm plus [experiment]);
explicit flags win over the file.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import sys
from dataclasses import fields, replace
from pathlib import Path

import numpy as np

from . import autodiff, harness, hallway, synthmodel
from .harness import ALGORITHMS, TrialConfig

HYPER_FLAGS = {
    # flag name -> (config key, type)
    "alpha": ("alpha", float),
    "beta": ("beta", float),
    "zeta": ("zeta", float),
    "k": ("k", int),
    "hidden": ("hidden_dim", int),
    "noise_dim": ("noise_dim", int),
    "batch": ("batch_size", int),
    "meta_lr": ("meta_lr", float),
    "meta_every": ("meta_every", int),
    "episodes": ("episodes", int),
    "regime_period": ("regime_period", int),
}

NONNEGATIVE_KEYS = {"alpha", "beta"}  # zero = degenerate no-learning settings
POSITIVE_KEYS = {"zeta", "meta_lr", "episodes", "batch_size", "meta_every"}


def _add_hyper_flags(p: argparse.ArgumentParser):
    p.add_argument("--alpha", type=float, help="veridical TD step size")
    p.add_argument("--beta", type=float, help="planning step size")
    p.add_argument("--zeta", type=float, help="inner meta-loss step size")
    p.add_argument("--k", type=int, help="planning updates per environment step")
    p.add_argument("--hidden", type=int, help="generator hidden width")
    p.add_argument("--noise-dim", type=int, help="generator noise dimension")
    p.add_argument("--batch", type=int, help="meta minibatch size")
    p.add_argument("--meta-lr", type=float, help="Adam step size for the meta update")
    p.add_argument("--meta-every", type=int, help="meta update frequency in steps")
    p.add_argument("--episodes", type=int, help="episodes per trial")
    p.add_argument("--regime-period", type=int, help="episodes between reward switches (0 = stationary)")


def _add_run_flags(p: argparse.ArgumentParser, multi_algo: bool = False):
    if not multi_algo:
        p.add_argument("--algo", choices=ALGORITHMS, required=True)
    p.add_argument("--trials", type=int, default=30)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--config", type=Path, help="INI config file")
    p.add_argument("--window", type=int, default=600, help="scoring window (episodes)")
    p.add_argument("--show-config", action="store_true",
                   help="print the effective configuration before running")
    _add_hyper_flags(p)


def load_config_file(path: Path, algorithm: str) -> dict:
    parser = configparser.ConfigParser()
    if not parser.read(path):
        raise FileNotFoundError(f"config file not found: {path}")
    merged: dict = {}
    for section in ("experiment", algorithm):
        if parser.has_section(section):
            for key, raw in parser.items(section):
                if key not in {f.name for f in fields(TrialConfig)}:
                    raise ValueError(f"config file: unknown key '{key}' in [{section}]")
                kind = TrialConfig.__dataclass_fields__[key].type
                merged[key] = int(raw) if kind == "int" else float(raw)
    return merged


def build_config(args, algorithm: str) -> TrialConfig:
    cfg = TrialConfig(algorithm=algorithm, base_seed=args.seed)
    if args.config:
        cfg = replace(cfg, **load_config_file(args.config, algorithm))
    overrides = {}
    for flag, (key, _) in HYPER_FLAGS.items():
        value = getattr(args, flag, None)
        if value is not None:
            overrides[key] = value
    if overrides:
        cfg = replace(cfg, **overrides)
    for key in POSITIVE_KEYS:
        if getattr(cfg, key) <= 0:
            raise SystemExit(f"error: --{key.replace('_', '-')} must be positive")
    for key in NONNEGATIVE_KEYS:
        if getattr(cfg, key) < 0:
            raise SystemExit(f"error: --{key.replace('_', '-')} must not be negative")
    if cfg.k < 0:
        raise SystemExit("error: --k must be non-negative")
    return cfg


def _print_config(cfg: TrialConfig, trials: int, workers: int):
    print(f"# algorithm={cfg.algorithm} trials={trials} workers={workers}")
    for f in fields(cfg):
        print(f"{f.name} = {getattr(cfg, f.name)}")


def cmd_run(args) -> int:
    cfg = build_config(args, args.algo)
    if args.show_config:
        _print_config(cfg, args.trials, args.workers)
    records = harness.run_trials(cfg, args.trials, args.workers)
    harness.write_metrics_csv(args.out, records)
    summary = harness.summarize({cfg.algorithm: records}, window=args.window, pairs=[])
    summary_path = args.summary_out or Path(args.out).with_suffix("").as_posix() + "_summary.json"
    harness.write_summary_json(summary_path, summary)
    print(f"wrote {args.out} ({len(records)} rows) and {summary_path}")
    return 0


def cmd_compare(args) -> int:
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    per_algo = {}
    for algo in ALGORITHMS:
        cfg = build_config(args, algo)
        if args.show_config:
            _print_config(cfg, args.trials, args.workers)
        records = harness.run_trials(cfg, args.trials, args.workers)
        per_algo[algo] = records
        harness.write_metrics_csv(outdir / f"{algo}.csv", records)
        print(f"{algo}: wrote {outdir / (algo + '.csv')}")
    summary = harness.summarize(per_algo, window=args.window)
    harness.write_summary_json(outdir / "summary.json", summary)
    for test in summary["pairwise_tests"]:
        print(f"{test['algo_a']} vs {test['algo_b']}: t={test['t']:.4f} p={test['p']:.4g}")
    return 0


def _parse_grid(specs: list[str]) -> dict:
    grid = {}
    valid = {f.name for f in fields(TrialConfig)}
    for spec in specs:
        if "=" not in spec:
            raise SystemExit(f"error: --vary expects key=v1,v2,... got '{spec}'")
        key, _, values = spec.partition("=")
        key = key.strip()
        if key not in valid:
            raise SystemExit(f"error: --vary: unknown hyperparameter '{key}'")
        kind = int if TrialConfig.__dataclass_fields__[key].type == "int" else float
        grid[key] = [kind(v) for v in values.split(",") if v]
        if not grid[key]:
            raise SystemExit(f"error: --vary: no values for '{key}'")
    return grid


def cmd_grid(args) -> int:
    cfg = build_config(args, args.algo)
    grid = _parse_grid(args.vary)
    best, cells = harness.grid_search(cfg, grid, trials=args.trials,
                                      window=args.window, workers=args.workers)
    harness.write_grid_csv(args.out, cells)
    print(f"wrote {args.out} ({len(cells)} cells)")
    print(f"best: {best.settings} score={best.score!r}")
    return 0


def cmd_oracle(args) -> int:
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["regime", "row", "col", "value"])
        for regime, r, c, v in hallway.oracle_rows():
            writer.writerow([regime, r, c, repr(v)])
    print(f"wrote {args.out}")
    return 0


def cmd_demo_theorem(args) -> int:
    result = harness.theorem_demo(args.k, args.alpha, args.eps)
    lines = [
        f"duplicate states k={args.k} alpha={args.alpha} eps={args.eps}",
        f"env_calls={result.env_model_calls}",
        f"agg_calls={result.aggregated_model_calls}",
        f"env_final_error={result.env_model_error!r}",
        f"agg_final_error={result.aggregated_model_error!r}",
    ]
    report = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(report, encoding="utf-8")
    sys.stdout.write(report)
    return 0


def cmd_gradcheck(args) -> int:
    rng = np.random.default_rng(args.seed)
    worst_prim = autodiff.check_primitives(rng, trials=args.trials)
    ok_prim = worst_prim < 1e-6
    print(f"primitives: worst relative error {worst_prim:.3e} "
          f"({'ok' if ok_prim else 'FAIL'}, tolerance 1e-06)")

    gen = synthmodel.init_generator(rng)
    sample = synthmodel.MetaSample(theta_p=rng.normal(size=hallway.FEATURE_DIM),
                                   phi=hallway.features(hallway.GridState(1, 2)),
                                   reward=0.0,
                                   next_phi=hallway.features(hallway.GridState(0, 3)))
    noise = rng.standard_normal((5, gen.noise_dim, 1))

    def loss_fn(values):
        p = synthmodel.GeneratorParams.from_dict(values)
        return synthmodel.meta_loss_grads(p, [sample], 5, 0.05, noise)

    worst_meta = autodiff.grad_check(loss_fn, gen.as_dict(), h=1e-6)
    ok_meta = worst_meta < 1e-4
    print(f"meta-loss (k=5): worst relative error {worst_meta:.3e} "
          f"({'ok' if ok_meta else 'FAIL'}, tolerance 1e-04)")
    return 0 if ok_prim and ok_meta else 1


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="synthdyna",
        description="Non-stationary windy hallway prediction lab: SynthDyna and replay baselines.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one algorithm for N trials, write metrics CSV + summary JSON")
    _add_run_flags(p)
    p.add_argument("--out", type=Path, required=True, help="metrics CSV path")
    p.add_argument("--summary-out", type=Path, help="summary JSON path (default: <out>_summary.json)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compare", help="run all four algorithms, write per-algorithm CSVs + pairwise tests")
    _add_run_flags(p, multi_algo=True)
    p.add_argument("--outdir", type=Path, required=True)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("grid", help="grid search over hyperparameters")
    _add_run_flags(p)
    p.add_argument("--vary", action="append", default=[], required=True,
                   metavar="KEY=V1,V2,...", help="grid axis, repeatable")
    p.add_argument("--out", type=Path, required=True, help="grid report CSV path")
    p.set_defaults(func=cmd_grid)

    p = sub.add_parser("oracle", help="export the true-value table as CSV")
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("demo-theorem", help="aggregated-model vs one-hot-model call counts")
    p.add_argument("--k", type=int, default=4, help="number of duplicated states")
    p.add_argument("--alpha", type=float, default=0.1)
    p.add_argument("--eps", type=float, default=0.01)
    p.add_argument("--out", type=Path, help="optional report file")
    p.set_defaults(func=cmd_demo_theorem)

    p = sub.add_parser("gradcheck", help="finite-difference verification of the autodiff engine")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=5)
    p.set_defaults(func=cmd_gradcheck)

    return parser


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (harness.TrialError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
