"""Federated orchestration: rounds, averaging, metrics, artifacts.

Each slice is an independent federation of K base stations sharing one
model.  A round sends the global weights to every station, runs the
local constrained game for L epochs, and averages the returned models
weighted by local dataset size.  Any client failure aborts the round
with enough context to find the culprit; silently averaging a partial
federation would bias the result.

Evaluation uses a per-station holdout split made before any training:
the split indices and the per-slice feature scaler (fitted on the train
union only) are frozen up front, so every round's metrics are measured
on the same standardized data.  Reported per round and slice:

* train_loss        - cross entropy of the new global model on the
                      train union,
* mean_recall       - recall of the global model on the test union,
* mean_log_odds     - masked log-odds on the test union (constrained
                      mode only; the unconstrained baseline computes
                      attributions once after the final round instead),
* feasible_fraction - share of clients whose last local epoch ended
                      with both constraints satisfied.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import (
    AggregationError,
    ClientFailure,
    ConfigurationError,
    InputError,
    ParseError,
    SimulationError,
)
from .explain import attribution_matrix, save_attributions_csv
from .game import (
    ConstraintSpec,
    DEFAULT_BATCH_SIZE,
    DEFAULT_ETA_LAMBDA,
    DEFAULT_IG_STEPS,
    local_train,
)
from .metrics import (
    correlation_matrix,
    log_odds,
    log_odds_curve,
    recall,
    save_correlation_csv,
    save_logodds_curve_csv,
)
from .nn import (
    ModelWeights,
    add_scaled,
    bce_loss,
    forward_batch,
    init_weights,
    save_weights,
    zeros_like_weights,
)
from .synthdata import SLICE_NAMES, Scaler

MODES = ("constrained", "vanilla")

LAYER_SIZES = (3, 10, 10, 1)

METRICS_HEADER = (
    "round,slice,mode,train_loss,mean_recall,mean_log_odds,feasible_fraction"
)
TRACE_HEADER = "epoch,loss,recall,log_odds,g1,g2,lambda0,lambda1,lambda2"
TRACE_HEADER_PLAIN = "epoch,loss"
MANIFEST_HEADER = "path,slice_id,bs_id,size,seed"

CURVE_P_VALUES = (0, 33, 66, 100)

# Fixed salts keep the independent random streams (splits, init, local
# training) from colliding while staying reproducible from one seed.
_SPLIT_SALT = 101
_INIT_SALT = 7
_TRAIN_SALT = 17


@dataclass(frozen=True)
class FederationConfig:
    """Everything the training loop needs besides the data itself."""

    clients: int
    rounds: int
    local_epochs: int
    specs: dict  # slice name -> ConstraintSpec
    mode: str = "constrained"
    seed: int = 0
    lr: float = 0.1
    r_lambda: float = 1e-5
    eta_lambda: float = DEFAULT_ETA_LAMBDA
    ig_steps: int = DEFAULT_IG_STEPS
    batch_size: int = DEFAULT_BATCH_SIZE
    test_fraction: float = 0.2

    def __post_init__(self):
        if self.clients < 1:
            raise ConfigurationError(
                f"clients must be at least 1, got {self.clients}"
            )
        if self.rounds < 0:
            raise ConfigurationError(
                f"rounds must be non-negative, got {self.rounds}"
            )
        if self.local_epochs < 1:
            raise ConfigurationError(
                f"local_epochs must be at least 1, got {self.local_epochs}"
            )
        if self.mode not in MODES:
            raise ConfigurationError(
                f"mode must be one of {MODES}, got {self.mode!r}"
            )
        if not self.specs:
            raise ConfigurationError("at least one slice spec is required")
        for name in self.specs:
            if name not in SLICE_NAMES:
                raise ConfigurationError(
                    f"unknown slice {name!r}, expected one of {SLICE_NAMES}"
                )
        if self.lr <= 0:
            raise ConfigurationError(f"lr must be positive, got {self.lr}")
        if self.r_lambda < 0:
            raise ConfigurationError(
                f"r_lambda must be non-negative, got {self.r_lambda}"
            )
        if self.eta_lambda <= 0:
            raise ConfigurationError(
                f"eta_lambda must be positive, got {self.eta_lambda}"
            )
        if self.ig_steps < 1:
            raise ConfigurationError(
                f"ig_steps must be at least 1, got {self.ig_steps}"
            )
        if self.batch_size < 1:
            raise ConfigurationError(
                f"batch_size must be at least 1, got {self.batch_size}"
            )
        if not 0.0 < self.test_fraction < 1.0:
            raise ConfigurationError(
                f"test_fraction must lie strictly in (0, 1), "
                f"got {self.test_fraction}"
            )

    @property
    def slice_names(self):
        return tuple(n for n in SLICE_NAMES if n in self.specs)

    @property
    def effective_r_lambda(self):
        return 0.0 if self.mode == "vanilla" else self.r_lambda


@dataclass
class RoundMetrics:
    """One metrics row; None fields are written as empty CSV cells."""

    round_index: int
    slice_name: str
    mode: str
    train_loss: float
    mean_recall: float
    mean_log_odds: Optional[float] = None
    feasible_fraction: Optional[float] = None


@dataclass
class SliceResult:
    """Everything one slice's federation produced."""

    slice_name: str
    model: ModelWeights
    scaler: Scaler
    metrics: list
    traces: list  # per client: list of EpochRecord across all rounds
    attributions: object
    correlation: object
    curve: list
    test_features: np.ndarray
    test_labels: np.ndarray


@dataclass
class ExperimentResult:
    config: FederationConfig
    slices: dict = field(default_factory=dict)

    @property
    def metrics(self):
        rows = []
        for name in self.config.slice_names:
            rows.extend(self.slices[name].metrics)
        return rows


def fedavg(client_models):
    """Dataset-size weighted average of client models.

    Clients are combined in the order given (the round uses ascending
    client id), so the result is reproducible to the bit.  A single
    client, or identical copies, come back exactly unchanged up to
    floating point summation.
    """
    if not client_models:
        raise AggregationError("cannot average zero client models")
    sizes = [size for _, size in client_models]
    if any(s <= 0 for s in sizes):
        raise AggregationError(f"client dataset sizes must be positive: {sizes}")
    reference = client_models[0][0]
    shapes = [tuple(W.shape for W, _ in w.layers) for w, _ in client_models]
    if any(s != shapes[0] for s in shapes):
        raise AggregationError(
            f"client architectures disagree: {sorted(set(shapes))}"
        )
    total = float(sum(sizes))
    accumulator = zeros_like_weights(reference)
    for weights, size in client_models:
        add_scaled(accumulator, weights, size / total)
    return ModelWeights(accumulator).check_finite(context="fedavg")


def split_train_test(dataset, test_fraction, seed):
    """Deterministic per-station holdout split.

    Returns (train_dataset, test_dataset); both keep at least one row.
    """
    size = dataset.size
    if size < 2:
        raise InputError(
            f"station {dataset.bs_id} has {size} rows, cannot split"
        )
    n_test = int(round(size * test_fraction))
    n_test = min(max(n_test, 1), size - 1)
    order = np.random.default_rng(
        (seed, _SPLIT_SALT, dataset.slice_id, dataset.bs_id)
    ).permutation(size)
    return dataset.subset(order[n_test:]), dataset.subset(order[:n_test])


@dataclass
class SlicePlumbing:
    """Frozen evaluation context for one slice: splits and scaler."""

    scaler: Scaler
    train_sets: list  # standardized per-client training data
    train_features: np.ndarray  # standardized train union
    train_labels: np.ndarray
    test_features: np.ndarray  # standardized test union
    test_labels: np.ndarray


def prepare_slice(datasets, test_fraction, seed):
    """Split every station, fit the scaler on the train union only,
    and standardize everything with it."""
    if not datasets:
        raise InputError("a slice needs at least one station dataset")
    splits = [split_train_test(d, test_fraction, seed) for d in datasets]
    train_union = np.vstack([train.features for train, _ in splits])
    scaler = Scaler.fit(train_union)
    train_sets = [
        train.replace_features(scaler.transform(train.features))
        for train, _ in splits
    ]
    test_features = scaler.transform(
        np.vstack([test.features for _, test in splits])
    )
    test_labels = np.concatenate([test.labels for _, test in splits])
    return SlicePlumbing(
        scaler=scaler,
        train_sets=train_sets,
        train_features=np.vstack([d.features for d in train_sets]),
        train_labels=np.concatenate([d.labels for d in train_sets]),
        test_features=test_features,
        test_labels=test_labels,
    )


def run_round(global_weights, plumbing, spec, cfg, slice_name, round_index):
    """One federated round for one slice.

    Returns (new global weights, per-client epoch records).  The first
    client that fails aborts the whole round, wrapped with its station
    index and the round number.
    """
    slice_id = SLICE_NAMES.index(slice_name)
    trained = []
    client_records = []
    for k, dataset in enumerate(plumbing.train_sets):
        try:
            weights, records = local_train(
                global_weights,
                dataset,
                spec,
                cfg.local_epochs,
                lr=cfg.lr,
                r_lambda=cfg.effective_r_lambda,
                eta_lambda=cfg.eta_lambda,
                ig_steps=cfg.ig_steps,
                batch_size=cfg.batch_size,
                seed=(cfg.seed, _TRAIN_SALT, slice_id, k, round_index),
            )
        except SimulationError as exc:
            raise ClientFailure(slice_name, k, round_index, exc) from exc
        trained.append((weights, dataset.size))
        client_records.append(records)
    return fedavg(trained), client_records


def _round_metrics(weights, plumbing, spec, cfg, slice_name, round_index,
                   client_records):
    train_loss = bce_loss(
        plumbing.train_labels, forward_batch(weights, plumbing.train_features)
    )
    test_probs = forward_batch(weights, plumbing.test_features)
    mean_recall = recall(
        (test_probs >= 0.5).astype(np.int64), plumbing.test_labels
    )
    if cfg.effective_r_lambda > 0.0:
        attrs = attribution_matrix(
            weights, plumbing.test_features, steps=cfg.ig_steps
        )
        theta = log_odds(
            weights, plumbing.test_features, attrs.values, spec.top_p
        )
        feasible = float(
            np.mean([records[-1].feasible for records in client_records])
        )
    else:
        theta = None
        feasible = None
    return RoundMetrics(
        round_index=round_index,
        slice_name=slice_name,
        mode=cfg.mode,
        train_loss=train_loss,
        mean_recall=mean_recall,
        mean_log_odds=theta,
        feasible_fraction=feasible,
    )


def _fmt(value):
    return "" if value is None else "%.17g" % value


def write_metrics_csv(path, rows):
    lines = [METRICS_HEADER]
    for m in rows:
        lines.append(
            ",".join(
                [
                    str(m.round_index),
                    m.slice_name,
                    m.mode,
                    _fmt(m.train_loss),
                    _fmt(m.mean_recall),
                    _fmt(m.mean_log_odds),
                    _fmt(m.feasible_fraction),
                ]
            )
        )
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_metrics_csv(path):
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != METRICS_HEADER:
        raise ParseError(f"expected header {METRICS_HEADER!r}", path=path, line=1)
    rows = []
    for number, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        fields = line.split(",")
        if len(fields) != 7:
            raise ParseError(
                f"expected 7 fields, got {len(fields)}", path=path, line=number
            )
        try:
            rows.append(
                RoundMetrics(
                    round_index=int(fields[0]),
                    slice_name=fields[1],
                    mode=fields[2],
                    train_loss=float(fields[3]),
                    mean_recall=float(fields[4]),
                    mean_log_odds=float(fields[5]) if fields[5] else None,
                    feasible_fraction=float(fields[6]) if fields[6] else None,
                )
            )
        except ValueError as exc:
            raise ParseError(str(exc), path=path, line=number) from exc
    return rows


def write_trace_csv(path, records, local_epochs):
    """Per-client trace; epoch numbers run cumulatively across rounds."""
    constrained = records and records[0].recall is not None
    lines = [TRACE_HEADER if constrained else TRACE_HEADER_PLAIN]
    for r in records:
        if constrained:
            lines.append(
                ",".join(
                    [
                        str(r.epoch),
                        _fmt(r.loss),
                        _fmt(r.recall),
                        _fmt(r.log_odds),
                        _fmt(r.g_recall),
                        _fmt(r.g_logodds),
                        _fmt(r.lam[0]),
                        _fmt(r.lam[1]),
                        _fmt(r.lam[2]),
                    ]
                )
            )
        else:
            lines.append(f"{r.epoch},{_fmt(r.loss)}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def run_experiment(cfg, datasets, out_dir=None, write_traces=False):
    """Train every slice for the configured number of rounds.

    datasets maps slice name -> list of raw (unstandardized) station
    datasets.  When out_dir is given, all artifacts (metrics, scalers,
    model snapshots per round, attribution and correlation reports,
    log-odds curves, optional per-client traces) are written there; the
    same inputs always produce byte-identical files.
    """
    missing = [n for n in cfg.slice_names if n not in datasets]
    if missing:
        raise InputError(f"no datasets supplied for slices {missing}")
    for name in cfg.slice_names:
        if len(datasets[name]) != cfg.clients:
            raise InputError(
                f"slice {name} has {len(datasets[name])} station datasets, "
                f"config expects {cfg.clients}"
            )

    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "models").mkdir(exist_ok=True)
        if write_traces:
            (out_dir / "traces").mkdir(exist_ok=True)

    result = ExperimentResult(config=cfg)
    for slice_name in cfg.slice_names:
        slice_id = SLICE_NAMES.index(slice_name)
        spec = cfg.specs[slice_name]
        plumbing = prepare_slice(
            datasets[slice_name], cfg.test_fraction, cfg.seed
        )
        weights = init_weights(
            LAYER_SIZES, seed=(cfg.seed, _INIT_SALT, slice_id)
        )
        metrics = []
        traces = [[] for _ in range(cfg.clients)]
        for round_index in range(cfg.rounds):
            weights, client_records = run_round(
                weights, plumbing, spec, cfg, slice_name, round_index
            )
            for k, records in enumerate(client_records):
                for r in records:
                    r.epoch = round_index * cfg.local_epochs + r.epoch
                traces[k].extend(records)
            metrics.append(
                _round_metrics(
                    weights, plumbing, spec, cfg, slice_name, round_index,
                    client_records,
                )
            )
            if out_dir is not None:
                save_weights(
                    weights,
                    out_dir / "models" / f"model_{slice_name}_{round_index}.xfsw",
                )

        # Final explainability reports come from the held-out union; in
        # vanilla mode this is the only place attributions are computed.
        attrs = attribution_matrix(
            weights, plumbing.test_features, steps=cfg.ig_steps
        )
        test_probs = forward_batch(weights, plumbing.test_features)
        correlation = correlation_matrix(
            attrs.values, test_probs, plumbing.test_labels
        )
        curve = log_odds_curve(
            weights, plumbing.test_features, attrs.values, CURVE_P_VALUES
        )
        result.slices[slice_name] = SliceResult(
            slice_name=slice_name,
            model=weights,
            scaler=plumbing.scaler,
            metrics=metrics,
            traces=traces,
            attributions=attrs,
            correlation=correlation,
            curve=curve,
            test_features=plumbing.test_features,
            test_labels=plumbing.test_labels,
        )

        if out_dir is not None:
            plumbing.scaler.save(out_dir / f"scaler_{slice_name}.csv")
            save_attributions_csv(
                out_dir / f"attributions_{slice_name}.csv",
                weights,
                attrs,
                plumbing.test_features,
                plumbing.test_labels,
            )
            save_correlation_csv(
                correlation, out_dir / f"correlation_{slice_name}.csv"
            )
            save_logodds_curve_csv(
                out_dir / f"logodds_curve_{slice_name}.csv", curve
            )
            if write_traces:
                for k, records in enumerate(traces):
                    write_trace_csv(
                        out_dir / "traces" / f"trace_{slice_name}_k{k}.csv",
                        records,
                        cfg.local_epochs,
                    )

    if out_dir is not None:
        write_metrics_csv(out_dir / "metrics.csv", result.metrics)
    return result
