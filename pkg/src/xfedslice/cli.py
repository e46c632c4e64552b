"""Command line entry points.

Four subcommands cover the whole workflow:

* generate - sample the per-station datasets into <out>/datasets plus a
  manifest,
* train    - run the federated experiment on generated data and write
  every artifact (metrics, models, reports) under <out>,
* explain  - attribute a saved model over a dataset CSV and evaluate
  the masked log-odds curve,
* report   - summarise a metrics CSV per slice.

Exit codes: 0 on success, 2 for configuration, input or file format
problems, 3 for numeric failures during training (including a client
aborting a round).  All outputs are deterministic: the same command on
the same inputs writes byte-identical files.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import ExperimentConfig, parse_config_file
from .errors import (
    AggregationError,
    ClientFailure,
    ConfigurationError,
    InputError,
    NumericError,
    ParseError,
    UndefinedRecallError,
)
from .explain import attribution_matrix, save_attributions_csv
from .federation import (
    MANIFEST_HEADER,
    load_metrics_csv,
    run_experiment,
)
from .metrics import log_odds_curve, save_logodds_curve_csv
from .nn import load_weights
from .synthdata import (
    Scaler,
    load_csv,
    save_csv,
)

USAGE_ERROR = 2
NUMERIC_ERROR = 3


def dataset_filename(slice_name, bs_id):
    return f"dataset_{slice_name}_k{bs_id}.csv"


def _load_config(args):
    cfg = (
        parse_config_file(args.config)
        if args.config
        else ExperimentConfig()
    )
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "out", None) is not None:
        overrides["out"] = args.out
    if getattr(args, "mode", None) is not None:
        overrides["mode"] = args.mode
    if overrides:
        from dataclasses import replace

        cfg = replace(cfg, **overrides)
    return cfg


def cmd_generate(args):
    """Sample every (slice, station) table and write the manifest."""
    cfg = _load_config(args)
    data_dir = cfg.data_dir
    data_dir.mkdir(parents=True, exist_ok=True)
    datasets = cfg.build_datasets()
    manifest = [MANIFEST_HEADER]
    for slice_name in cfg.slices:
        for bs_id, dataset in enumerate(datasets[slice_name]):
            name = dataset_filename(slice_name, bs_id)
            save_csv(dataset, data_dir / name)
            manifest.append(
                f"datasets/{name},{dataset.slice_id},{bs_id},"
                f"{dataset.size},{cfg.seed}"
            )
    with open(data_dir / "manifest.csv", "w") as fh:
        fh.write("\n".join(manifest) + "\n")
    print(
        f"wrote {len(manifest) - 1} station datasets to {data_dir} "
        f"(seed {cfg.seed})"
    )
    return 0


def _load_generated(cfg):
    manifest_path = cfg.data_dir / "manifest.csv"
    if not manifest_path.exists():
        raise InputError(
            f"no manifest at {manifest_path}; run 'generate' with this "
            "config first"
        )
    datasets = {name: [] for name in cfg.slices}
    for slice_name in cfg.slices:
        for bs_id in range(cfg.clients):
            path = cfg.data_dir / dataset_filename(slice_name, bs_id)
            if not path.exists():
                raise InputError(
                    f"missing dataset {path}; the generated data does "
                    "not match this config"
                )
            datasets[slice_name].append(load_csv(path))
    return datasets


def cmd_train(args):
    """Run the federated experiment and write artifacts under out/."""
    cfg = _load_config(args)
    datasets = _load_generated(cfg)
    result = run_experiment(
        cfg.federation_config(),
        datasets,
        out_dir=cfg.out_dir,
        write_traces=args.traces,
    )
    for slice_name in cfg.slices:
        rows = result.slices[slice_name].metrics
        if not rows:
            print(f"{slice_name}: no rounds run")
            continue
        last = rows[-1]
        line = (
            f"{slice_name}: round {last.round_index} "
            f"loss {last.train_loss:.4f} recall {last.mean_recall:.4f}"
        )
        if last.mean_log_odds is not None:
            line += (
                f" log_odds {last.mean_log_odds:.4f} "
                f"feasible {last.feasible_fraction:.2f}"
            )
        print(line)
    print(f"artifacts in {cfg.out_dir}")
    return 0


def cmd_explain(args):
    """Attribute a saved model over a dataset and score the masking."""
    weights = load_weights(args.model)
    dataset = load_csv(args.data)
    if args.scaler:
        scaler = Scaler.load(args.scaler)
    else:
        # Without a saved scaler, standardize with this dataset's own
        # statistics; fine for a quick look, not for cross-station use.
        scaler = Scaler.fit(dataset.features)
    features = scaler.transform(dataset.features)
    attrs = attribution_matrix(weights, features, steps=args.steps)
    save_attributions_csv(args.out, weights, attrs, features, dataset.labels)
    try:
        p_values = [float(p) for p in args.top_p.split(",")]
    except ValueError as exc:
        raise InputError(f"--top-p: {exc}") from exc
    curve = log_odds_curve(weights, features, attrs.values, p_values)
    for p, theta in curve:
        print(f"top_p={p:g} log_odds={theta:.6f}")
    if args.curve_out:
        save_logodds_curve_csv(args.curve_out, curve)
    print(f"attributions in {args.out}")
    return 0


def cmd_report(args):
    """Summarise a metrics CSV: final round per slice."""
    rows = load_metrics_csv(args.metrics)
    if not rows:
        print("metrics file holds no rounds")
        return 0
    slices = []
    for row in rows:
        if row.slice_name not in slices:
            slices.append(row.slice_name)
    print(f"{'slice':8} {'mode':12} {'rounds':>6} {'loss':>9} "
          f"{'recall':>8} {'log_odds':>9} {'feasible':>9}")
    for slice_name in slices:
        history = [r for r in rows if r.slice_name == slice_name]
        last = history[-1]
        logodds = (
            f"{last.mean_log_odds:9.4f}"
            if last.mean_log_odds is not None
            else f"{'-':>9}"
        )
        feasible = (
            f"{last.feasible_fraction:9.2f}"
            if last.feasible_fraction is not None
            else f"{'-':>9}"
        )
        print(
            f"{slice_name:8} {last.mode:12} {len(history):6d} "
            f"{last.train_loss:9.4f} {last.mean_recall:8.4f} "
            f"{logodds} {feasible}"
        )
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="xfedslice",
        description=(
            "Simulate constrained federated training of per-slice "
            "traffic drop classifiers."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="sample station datasets")
    gen.add_argument("--config", help="key = value config file")
    gen.add_argument("--seed", type=int, help="override the config seed")
    gen.add_argument("--out", help="override the output directory")
    gen.set_defaults(func=cmd_generate)

    train = sub.add_parser("train", help="run the federated experiment")
    train.add_argument("--config", help="key = value config file")
    train.add_argument("--seed", type=int, help="override the config seed")
    train.add_argument("--out", help="override the output directory")
    train.add_argument(
        "--mode", choices=("constrained", "vanilla"),
        help="override the config mode",
    )
    train.add_argument(
        "--traces", action="store_true",
        help="also write per-client epoch traces",
    )
    train.set_defaults(func=cmd_train)

    explain = sub.add_parser(
        "explain", help="attribute a saved model over a dataset"
    )
    explain.add_argument("--model", required=True, help=".xfsw snapshot")
    explain.add_argument("--data", required=True, help="dataset CSV")
    explain.add_argument(
        "--scaler", help="scaler CSV from training (recommended)"
    )
    explain.add_argument("--out", required=True, help="attribution CSV path")
    explain.add_argument(
        "--curve-out", help="also write the log-odds curve CSV here"
    )
    explain.add_argument(
        "--top-p", default="0,33,66,100",
        help="comma separated masking percentages (default 0,33,66,100)",
    )
    explain.add_argument(
        "--steps", type=int, default=300,
        help="integration steps (default 300)",
    )
    explain.set_defaults(func=cmd_explain)

    report = sub.add_parser("report", help="summarise a metrics CSV")
    report.add_argument("--metrics", required=True, help="metrics.csv path")
    report.set_defaults(func=cmd_report)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (
        ConfigurationError,
        InputError,
        ParseError,
        UndefinedRecallError,
        FileNotFoundError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except (ClientFailure, NumericError, AggregationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return NUMERIC_ERROR


if __name__ == "__main__":
    sys.exit(main())
