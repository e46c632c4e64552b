"""
The two-player constraint game, watched epoch by epoch
======================================================

Constrained local training is a game: the model takes gradient steps on
a multiplier-weighted objective while a column-stochastic switch matrix
absorbs the observed payoffs (loss and the two constraint violations)
and re-weights the multiplier.  This script traces both players on one
station, then shows the matrix mechanics in isolation.
"""

import numpy as np

from xfedslice.game import (
    ConstraintSpec,
    exponentiated_update,
    initial_switch_matrix,
    local_train,
    top_eigenvector,
)
from xfedslice.nn import init_weights
from xfedslice.synthdata import DEFAULT_PROFILES, Scaler, generate_local_dataset

dataset = generate_local_dataset(DEFAULT_PROFILES["urllc"], 1, 400, 0.9, 0, 0.5)
scaler = Scaler.fit(dataset.features)
scaled = dataset.replace_features(scaler.transform(dataset.features))

spec = ConstraintSpec(alpha=0.95, beta=-0.01, top_p=33.0)
net = init_weights([3, 10, 10, 1], seed=3)

# A deliberately large constraint radius so the multiplier visibly
# responds to violations within a short trace: lambda leans on the
# violated recall row until the model satisfies it, then hands the
# weight back to the objective.
net, records = local_train(
    net, scaled, spec, 60, lr=0.1, r_lambda=1.0, eta_lambda=0.2, seed=3
)

print("epoch  loss   recall  theta   g_rec   g_theta  lam0  lam1  lam2  feasible")
for rec in records[::6]:
    lam = rec.lam
    print(
        f"{rec.epoch:5d}  {rec.loss:.3f}  {rec.recall:.3f}  "
        f"{rec.log_odds:+.3f}  {rec.g_recall:+.3f}  {rec.g_logodds:+.3f}  "
        f"{lam[0]:.2f}  {lam[1]:.2f}  {lam[2]:.2f}  {str(rec.feasible):5s}"
    )

# The lambda-player in isolation: positive payoff on a constraint row
# shifts mass toward that constraint's multiplier.
print("\nswitch matrix mechanics:")
A = initial_switch_matrix()
print("uniform start, lam =", np.array2string(top_eigenvector(A), precision=3))
for step in range(30):
    A = exponentiated_update(A, np.array([0.1, 0.8, -0.2]), 0.2)
lam = top_eigenvector(A)
print("after 30 updates rewarding the recall row, lam =",
      np.array2string(lam, precision=3))
print("columns still sum to one:",
      np.allclose(A.sum(axis=0), 1.0, atol=1e-12))
