"""Shared run artifacts for the figure tests.

One constrained and one vanilla run of the simulator, shrunk from the
desk profile so the suite stays fast, written once per session.  Every
figure kind consumes only the CSVs these runs leave behind, which is
the whole point: the view layer never sees a live model.
"""

from dataclasses import replace

import pytest
from xfedslice.config import ExperimentConfig
from xfedslice.federation import run_experiment


@pytest.fixture(scope="session")
def run_dirs(tmp_path_factory):
    base = replace(
        ExperimentConfig(seed=4),
        clients=3,
        rounds=6,
        local_epochs=6,
        samples=120,
        batch_size=32,
        ig_steps=50,
    )
    dirs = {}
    for mode in ("constrained", "vanilla"):
        out = tmp_path_factory.mktemp(mode)
        cfg = replace(base, mode=mode)
        run_experiment(cfg.federation_config(), cfg.build_datasets(),
                       out_dir=out)
        dirs[mode] = out
    return dirs
