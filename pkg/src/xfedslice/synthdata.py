"""Synthetic per-base-station traffic datasets, one slice flavour each.

Every base station draws three features per sample (average PRB
utilisation, latency in ms, channel quality), Gaussian around means
that are shifted per station to make the federation non-IID.  A planted
logistic rule on the standardized features produces a drop probability,
a small fraction of rows gets its probability flipped as label noise,
and the binary label is the tau threshold of the result.

The per-station shift comes from a seed-rotated Kronecker sequence
rather than an independent uniform draw: consecutive station ids are
pushed to well separated points of [-1, 1]^3, so "clients differ" is a
guarantee instead of a coin flip.  The three coordinates are not
independent: stations sit along a load axis, and a busy station shows
high PRB utilisation, high latency and a degraded channel at once,
the way congested cells do.  The shift is expressed in units of the
feature standard deviation and scaled by the skew knob (0 = IID,
1 = full shift).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, InputError, ParseError

FEATURE_NAMES = ("avg_prb", "latency_ms", "channel_quality")
SLICE_NAMES = ("embb", "urllc", "mmtc")
DEFAULT_TAU = 0.5

CSV_HEADER = "bs_id,slice_id,avg_prb,latency_ms,channel_quality,drop_prob,label"

# Fractional parts of the golden ratio, sqrt(2) and sqrt(3).  Multiples
# of an irrational mod 1 never repeat, and these three give adjacent
# integers a minimum circle distance of about 0.38 in every coordinate.
_ROTATION_STEPS = (
    0.6180339887498949,
    0.41421356237309515,
    0.7320508075688772,
)
_ROTATION_SALT = 977

# How strongly the per-station load axis drives latency and channel
# quality.  1 would collapse stations onto a line, 0 would make the
# three coordinates independent and produce stations whose surviving
# features contradict their own labels once the channel column is
# masked out.
_LOAD_MIX = 0.7


@dataclass(frozen=True)
class SliceProfile:
    """Distribution template for one network slice.

    ground_truth_weights act on standardized features, so their
    magnitudes are comparable; channel quality must dominate because
    that is the planted signal the attribution checks look for.
    """

    slice_name: str
    feature_means: tuple
    feature_stds: tuple
    ground_truth_weights: tuple
    ground_truth_bias: float
    label_noise: float = 0.02

    def __post_init__(self):
        if self.slice_name not in SLICE_NAMES:
            raise ConfigurationError(
                f"slice_name must be one of {SLICE_NAMES}, "
                f"got {self.slice_name!r}"
            )
        for field in ("feature_means", "feature_stds", "ground_truth_weights"):
            value = getattr(self, field)
            if len(value) != len(FEATURE_NAMES):
                raise ConfigurationError(
                    f"{field} needs {len(FEATURE_NAMES)} entries, "
                    f"got {len(value)}"
                )
        if any(s <= 0 for s in self.feature_stds):
            raise ConfigurationError("feature_stds must be positive")
        if not 0.0 <= self.label_noise < 0.5:
            raise ConfigurationError(
                f"label_noise must lie in [0, 0.5), got {self.label_noise}"
            )
        weights = np.abs(np.asarray(self.ground_truth_weights))
        if not weights[2] > max(weights[0], weights[1]):
            raise ConfigurationError(
                "channel quality must carry the largest ground-truth weight"
            )

    @property
    def slice_id(self):
        return SLICE_NAMES.index(self.slice_name)


# Means and spreads are loosely calibrated to the usual slice stories:
# embb is throughput heavy, urllc is latency critical with tight
# spreads, mmtc is many cheap devices with poor radio conditions.
DEFAULT_PROFILES = {
    "embb": SliceProfile(
        slice_name="embb",
        feature_means=(80.0, 20.0, 15.0),
        feature_stds=(15.0, 8.0, 6.0),
        ground_truth_weights=(0.8, 0.6, -2.0),
        ground_truth_bias=0.4,
        label_noise=0.02,
    ),
    "urllc": SliceProfile(
        slice_name="urllc",
        feature_means=(30.0, 2.0, 18.0),
        feature_stds=(10.0, 0.8, 5.0),
        ground_truth_weights=(0.6, 0.7, -2.0),
        ground_truth_bias=0.4,
        label_noise=0.02,
    ),
    "mmtc": SliceProfile(
        slice_name="mmtc",
        feature_means=(45.0, 50.0, 6.0),
        feature_stds=(12.0, 15.0, 4.0),
        ground_truth_weights=(0.7, 0.9, -2.5),
        ground_truth_bias=0.4,
        label_noise=0.02,
    ),
}


@dataclass
class LocalDataset:
    """One base station's table: features, drop probabilities, labels."""

    bs_id: int
    slice_id: int
    features: np.ndarray
    drop_prob: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.drop_prob = np.asarray(self.drop_prob, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.features.ndim != 2 or self.features.shape[1] != len(
            FEATURE_NAMES
        ):
            raise InputError(
                f"features must be (rows, {len(FEATURE_NAMES)}), "
                f"got {self.features.shape}"
            )
        rows = self.features.shape[0]
        if rows == 0:
            raise InputError(
                f"dataset for bs {self.bs_id} has no rows; every local "
                "dataset needs at least one sample"
            )
        if self.drop_prob.shape != (rows,) or self.labels.shape != (rows,):
            raise InputError(
                f"column lengths disagree: {rows} feature rows, "
                f"{self.drop_prob.shape[0]} drop_prob, "
                f"{self.labels.shape[0]} labels"
            )
        if not np.all(np.isfinite(self.features)):
            raise InputError("features contain non-finite values")
        if np.any(self.drop_prob < 0) or np.any(self.drop_prob > 1):
            raise InputError("drop_prob entries must lie in [0, 1]")
        if not np.all((self.labels == 0) | (self.labels == 1)):
            raise InputError("labels must be 0 or 1")

    @property
    def size(self):
        return self.features.shape[0]

    @property
    def positive_fraction(self):
        return float(self.labels.mean())

    def check_threshold(self, tau):
        """Verify label == (drop_prob >= tau) for every row."""
        expected = threshold_labels(self.drop_prob, tau)
        if not np.array_equal(expected, self.labels):
            bad = int(np.flatnonzero(expected != self.labels)[0])
            raise InputError(
                f"row {bad}: label {self.labels[bad]} disagrees with "
                f"drop_prob {self.drop_prob[bad]!r} at tau={tau}"
            )
        return self

    def replace_features(self, features):
        """Same table with transformed features (e.g. standardized)."""
        return LocalDataset(
            bs_id=self.bs_id,
            slice_id=self.slice_id,
            features=features,
            drop_prob=self.drop_prob,
            labels=self.labels,
        )

    def subset(self, indices):
        indices = np.asarray(indices)
        return LocalDataset(
            bs_id=self.bs_id,
            slice_id=self.slice_id,
            features=self.features[indices],
            drop_prob=self.drop_prob[indices],
            labels=self.labels[indices],
        )


def threshold_labels(drop_probs, tau):
    """Binary labels: 1 where drop_prob >= tau (boundary is positive)."""
    if not 0.0 < tau < 1.0:
        raise ConfigurationError(f"tau must lie strictly in (0, 1), got {tau}")
    p = np.asarray(drop_probs, dtype=np.float64)
    return (p >= tau).astype(np.int64)


def bs_offset(bs_id, seed):
    """Deterministic mean shift for one base station, in [-1, 1]^3.

    Point number bs_id of a Kronecker sequence with a seed-dependent
    rotation: raw_q = 2 frac(bs_id * alpha_q + u_q) - 1.  Distinct ids
    land at least 2 * d(|i - j| * alpha_q) apart on some axis, where d
    is distance to the nearest integer, so nearby stations are
    guaranteed to be separated instead of merely likely to be.

    The first raw coordinate acts as the station's load level; the
    latency and channel coordinates mix it with their own jitter so
    that heavily loaded stations run slow and noisy while lightly
    loaded ones run clean.  Channel quality gets the opposite sign:
    more load, worse radio.  Every coordinate stays a convex mix of
    values in [-1, 1].
    """
    if bs_id < 0:
        raise ConfigurationError(f"bs_id must be non-negative, got {bs_id}")
    rotation = np.random.default_rng((seed, _ROTATION_SALT)).random(3)
    steps = np.asarray(_ROTATION_STEPS)
    raw = 2.0 * ((bs_id * steps + rotation) % 1.0) - 1.0
    load = raw[0]
    return np.array(
        [
            load,
            _LOAD_MIX * load + (1.0 - _LOAD_MIX) * raw[1],
            -(_LOAD_MIX * load + (1.0 - _LOAD_MIX) * raw[2]),
        ]
    )


def _sigmoid(z):
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def generate_local_dataset(profile, bs_id, size, skew, seed, tau=DEFAULT_TAU):
    """Sample one base station's local dataset.

    skew in [0, 1] scales the per-station mean shift in std units;
    skew = 0 gives identically distributed stations.  The same
    arguments always reproduce the same table bit for bit.
    """
    if size < 1:
        raise ConfigurationError(f"size must be at least 1, got {size}")
    if not 0.0 <= skew <= 1.0:
        raise ConfigurationError(f"skew must lie in [0, 1], got {skew}")
    if not 0.0 < tau < 1.0:
        raise ConfigurationError(f"tau must lie strictly in (0, 1), got {tau}")

    means = np.asarray(profile.feature_means)
    stds = np.asarray(profile.feature_stds)
    shifted = means + skew * bs_offset(bs_id, seed) * stds

    rng = np.random.default_rng((seed, profile.slice_id, bs_id))
    features = rng.normal(loc=shifted, scale=stds, size=(size, 3))

    standardized = (features - means) / stds
    logits = standardized @ np.asarray(profile.ground_truth_weights)
    drop = _sigmoid(logits + profile.ground_truth_bias)
    flips = rng.random(size) < profile.label_noise
    drop = np.where(flips, 1.0 - drop, drop)

    return LocalDataset(
        bs_id=bs_id,
        slice_id=profile.slice_id,
        features=features,
        drop_prob=drop,
        labels=threshold_labels(drop, tau),
    )


def save_csv(dataset, path):
    """Write one local dataset with 17 significant digits per float."""
    lines = [CSV_HEADER]
    for row in range(dataset.size):
        x = dataset.features[row]
        lines.append(
            "%d,%d,%.17g,%.17g,%.17g,%.17g,%d"
            % (
                dataset.bs_id,
                dataset.slice_id,
                x[0],
                x[1],
                x[2],
                dataset.drop_prob[row],
                dataset.labels[row],
            )
        )
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_csv(path):
    """Read a dataset written by save_csv; exact float round trip.

    Problems are reported with the 1-based line they occur on.  A file
    holding several stations or slices is rejected: one table is one
    (station, slice) pair.
    """
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != CSV_HEADER:
        raise ParseError(
            f"expected header {CSV_HEADER!r}", path=path, line=1
        )
    bs_ids, slice_ids = set(), set()
    features, drops, labels = [], [], []
    for number, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        fields = line.split(",")
        if len(fields) != 7:
            raise ParseError(
                f"expected 7 fields, got {len(fields)}", path=path, line=number
            )
        try:
            bs_ids.add(int(fields[0]))
            slice_ids.add(int(fields[1]))
            features.append([float(v) for v in fields[2:5]])
            drops.append(float(fields[5]))
            labels.append(int(fields[6]))
        except ValueError as exc:
            raise ParseError(str(exc), path=path, line=number) from exc
    if not features:
        raise ParseError("no data rows after the header", path=path, line=1)
    if len(bs_ids) != 1 or len(slice_ids) != 1:
        raise ParseError(
            f"a dataset file must hold one station and one slice, found "
            f"stations {sorted(bs_ids)} and slices {sorted(slice_ids)}",
            path=path,
        )
    return LocalDataset(
        bs_id=bs_ids.pop(),
        slice_id=slice_ids.pop(),
        features=np.array(features),
        drop_prob=np.array(drops),
        labels=np.array(labels),
    )


@dataclass(frozen=True)
class Scaler:
    """Per-feature standardization fitted on training data only."""

    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, features):
        X = np.asarray(features, dtype=np.float64)
        if X.ndim != 2 or X.shape[0] < 2:
            raise InputError(
                f"need a (rows >= 2, features) matrix to fit, got {X.shape}"
            )
        mean = X.mean(axis=0)
        std = X.std(axis=0)
        # A constant feature carries no signal; mapping it to zero via
        # unit std beats dividing by zero.
        std = np.where(std == 0.0, 1.0, std)
        return cls(mean=mean, std=std)

    def transform(self, features):
        return (np.asarray(features, dtype=np.float64) - self.mean) / self.std

    def save(self, path):
        lines = ["feature,mean,std"]
        for name, m, s in zip(FEATURE_NAMES, self.mean, self.std):
            lines.append("%s,%.17g,%.17g" % (name, m, s))
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            lines = fh.read().splitlines()
        if not lines or lines[0] != "feature,mean,std":
            raise ParseError("expected header 'feature,mean,std'", path=path, line=1)
        means, stds = {}, {}
        for number, line in enumerate(lines[1:], start=2):
            if not line.strip():
                continue
            fields = line.split(",")
            if len(fields) != 3:
                raise ParseError(
                    f"expected 3 fields, got {len(fields)}",
                    path=path,
                    line=number,
                )
            try:
                means[fields[0]] = float(fields[1])
                stds[fields[0]] = float(fields[2])
            except ValueError as exc:
                raise ParseError(str(exc), path=path, line=number) from exc
        missing = [n for n in FEATURE_NAMES if n not in means]
        if missing:
            raise ParseError(f"missing features {missing}", path=path)
        return cls(
            mean=np.array([means[n] for n in FEATURE_NAMES]),
            std=np.array([stds[n] for n in FEATURE_NAMES]),
        )


def positive_fraction_bounds(datasets, lower=0.2, upper=0.8):
    """Check the pooled positive rate of a slice stays informative.

    Training a recall-constrained classifier on nearly one-sided data
    is meaningless, so generation is expected to land inside (lower,
    upper) and callers may assert it.
    """
    total = sum(d.size for d in datasets)
    positives = sum(int(d.labels.sum()) for d in datasets)
    fraction = positives / total
    return lower <= fraction <= upper, fraction
