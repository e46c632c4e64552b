"""Experiment configuration: flat key = value files with strict checks.

The format is deliberately small: one `key = value` pair per line,
blank lines and `#` comments ignored, lists written comma separated.
Unknown keys and malformed values are rejected with the offending line
number, and every range error names the field it concerns, so a typo
in a sweep script fails loudly instead of training something else.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from pathlib import Path

from .errors import ConfigurationError, ParseError
from .federation import MODES, FederationConfig
from .game import ConstraintSpec
from .synthdata import DEFAULT_PROFILES, SLICE_NAMES, generate_local_dataset


@dataclass(frozen=True)
class ExperimentConfig:
    """Desk-scale defaults; a config file overrides any subset."""

    clients: int = 10
    slices: tuple = SLICE_NAMES
    rounds: int = 20
    local_epochs: int = 20
    samples: int = 400
    seed: int = 0
    mode: str = "constrained"
    out: str = "runs/desk"
    alpha: tuple = (0.9, 0.95, 0.95)
    beta: tuple = (-0.01, -0.01, -0.01)
    top_p: tuple = (33.0, 33.0, 33.0)
    lr: float = 0.1
    r_lambda: float = 1e-5
    eta_lambda: float = 0.02
    batch_size: int = 64
    ig_steps: int = 300
    test_fraction: float = 0.2
    skew: float = 0.9
    tau: float = 0.5
    label_noise: float = -1.0  # negative means "use the profile default"

    def __post_init__(self):
        if not self.slices:
            raise ConfigurationError("slices must name at least one slice")
        for name in self.slices:
            if name not in SLICE_NAMES:
                raise ConfigurationError(
                    f"slices: unknown slice {name!r}, expected a subset "
                    f"of {SLICE_NAMES}"
                )
        if len(set(self.slices)) != len(self.slices):
            raise ConfigurationError("slices contains duplicates")
        n = len(self.slices)
        for field_name in ("alpha", "beta", "top_p"):
            values = getattr(self, field_name)
            if len(values) != n:
                raise ConfigurationError(
                    f"{field_name} has {len(values)} entries for "
                    f"{n} slices"
                )
        if self.samples < 2:
            raise ConfigurationError(
                f"samples must be at least 2, got {self.samples}"
            )
        if not 0.0 <= self.skew <= 1.0:
            raise ConfigurationError(
                f"skew must lie in [0, 1], got {self.skew}"
            )
        if not 0.0 < self.tau < 1.0:
            raise ConfigurationError(
                f"tau must lie strictly in (0, 1), got {self.tau}"
            )
        if self.label_noise != -1.0 and not 0.0 <= self.label_noise < 0.5:
            raise ConfigurationError(
                f"label_noise must lie in [0, 0.5) or be -1 for the "
                f"profile default, got {self.label_noise}"
            )
        if self.mode not in MODES:
            raise ConfigurationError(
                f"mode must be one of {MODES}, got {self.mode!r}"
            )
        # Delegate the rest so the error text is identical everywhere.
        self.federation_config()

    def constraint_specs(self):
        specs = {}
        for i, name in enumerate(self.slices):
            try:
                specs[name] = ConstraintSpec(
                    alpha=self.alpha[i],
                    beta=self.beta[i],
                    top_p=self.top_p[i],
                )
            except ConfigurationError as exc:
                raise ConfigurationError(f"slice {name}: {exc}") from exc
        return specs

    def federation_config(self):
        return FederationConfig(
            clients=self.clients,
            rounds=self.rounds,
            local_epochs=self.local_epochs,
            specs=self.constraint_specs(),
            mode=self.mode,
            seed=self.seed,
            lr=self.lr,
            r_lambda=self.r_lambda,
            eta_lambda=self.eta_lambda,
            ig_steps=self.ig_steps,
            batch_size=self.batch_size,
            test_fraction=self.test_fraction,
        )

    def profiles(self):
        """Slice profiles with the optional label_noise override."""
        out = {}
        for name in self.slices:
            profile = DEFAULT_PROFILES[name]
            if self.label_noise >= 0.0:
                profile = replace(profile, label_noise=self.label_noise)
            out[name] = profile
        return out

    def build_datasets(self):
        """Generate every station's local dataset for this config."""
        profiles = self.profiles()
        return {
            name: [
                generate_local_dataset(
                    profiles[name],
                    bs,
                    self.samples,
                    self.skew,
                    self.seed,
                    self.tau,
                )
                for bs in range(self.clients)
            ]
            for name in self.slices
        }

    @classmethod
    def full_scale(cls, **overrides):
        """Production-scale preset: 50 stations with 800 rows each,
        50 rounds of 100 local epochs.  Expect a long run; the class
        defaults are the desk profile that finishes in minutes."""
        merged = dict(
            clients=50,
            samples=800,
            rounds=50,
            local_epochs=100,
            out="runs/full",
        )
        merged.update(overrides)
        return cls(**merged)

    @property
    def out_dir(self):
        return Path(self.out)

    @property
    def data_dir(self):
        return Path(self.out) / "datasets"


_INT_KEYS = {
    "clients", "rounds", "local_epochs", "samples", "seed",
    "batch_size", "ig_steps",
}
_FLOAT_KEYS = {
    "lr", "r_lambda", "eta_lambda", "test_fraction", "skew", "tau",
    "label_noise",
}
_STR_KEYS = {"mode", "out"}
_STR_LIST_KEYS = {"slices"}
_FLOAT_LIST_KEYS = {"alpha", "beta", "top_p"}

_ALL_KEYS = (
    _INT_KEYS | _FLOAT_KEYS | _STR_KEYS | _STR_LIST_KEYS | _FLOAT_LIST_KEYS
)
assert _ALL_KEYS == {f.name for f in fields(ExperimentConfig)}


def _convert(key, raw, path, line):
    try:
        if key in _INT_KEYS:
            return int(raw)
        if key in _FLOAT_KEYS:
            return float(raw)
        if key in _STR_LIST_KEYS:
            return tuple(part.strip() for part in raw.split(","))
        if key in _FLOAT_LIST_KEYS:
            return tuple(float(part) for part in raw.split(","))
        return raw
    except ValueError as exc:
        raise ParseError(
            f"value for {key!r}: {exc}", path=path, line=line
        ) from exc


def parse_config_file(path):
    """Read a key = value file into an ExperimentConfig."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    overrides = {}
    for number, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ParseError(
                "expected 'key = value'", path=path, line=number
            )
        key, _, raw = stripped.partition("=")
        key = key.strip()
        raw = raw.strip()
        if key not in _ALL_KEYS:
            raise ParseError(
                f"unknown key {key!r}", path=path, line=number
            )
        if key in overrides:
            raise ParseError(
                f"duplicate key {key!r}", path=path, line=number
            )
        if not raw:
            raise ParseError(
                f"empty value for {key!r}", path=path, line=number
            )
        overrides[key] = _convert(key, raw, path, number)
    return ExperimentConfig(**overrides)
