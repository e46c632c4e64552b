"""Desk-scale simulator of constrained federated training for RAN slices.

The package trains one small MLP per network slice with federated
averaging over synthetic per-station datasets, prices an explainability
constraint (masked log-odds) and a sensitivity constraint (recall) into
the local steps through a two-player multiplier game, and reports
integrated-gradients attributions for the result.

Entry points:

- :func:`xfedslice.config.ExperimentConfig` holds every knob; its
  defaults are the desk profile, ``full_scale()`` the production one.
- :func:`xfedslice.federation.run_experiment` runs the federation and
  returns per-slice models, metrics, attributions and curves.
- ``python3 -m xfedslice`` (or the ``xfedslice`` script) wraps the same
  flow into ``generate`` / ``train`` / ``explain`` / ``report``.
"""

from .config import ExperimentConfig, parse_config_file
from .errors import ConfigurationError, NumericError, ParseError, SimulationError
from .explain import attribution_matrix, completeness_gap, integrated_gradients_batch
from .federation import (
    FederationConfig,
    RoundMetrics,
    SliceResult,
    fedavg,
    run_experiment,
)
from .game import local_train
from .metrics import correlation_matrix, log_odds, log_odds_curve, recall
from .nn import ModelWeights, forward_batch, init_weights, load_weights, save_weights
from .synthdata import (
    LocalDataset,
    Scaler,
    SliceProfile,
    generate_local_dataset,
    load_csv,
    save_csv,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigurationError",
    "ExperimentConfig",
    "FederationConfig",
    "LocalDataset",
    "ModelWeights",
    "NumericError",
    "ParseError",
    "RoundMetrics",
    "Scaler",
    "SimulationError",
    "SliceProfile",
    "SliceResult",
    "attribution_matrix",
    "completeness_gap",
    "correlation_matrix",
    "fedavg",
    "forward_batch",
    "generate_local_dataset",
    "init_weights",
    "integrated_gradients_batch",
    "load_csv",
    "load_weights",
    "local_train",
    "log_odds",
    "log_odds_curve",
    "parse_config_file",
    "recall",
    "run_experiment",
    "save_csv",
    "save_weights",
    "__version__",
]
