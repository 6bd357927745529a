"""
Restoring a conserved norm with a metric
========================================

A non-Hermitian generator with real spectrum admits a positive metric eta;
the eta-norm is conserved even though the plain norm oscillates.
"""

import numpy as np

from clockframes import EffectiveHamiltonian, evolve, find_metric, metric_norm_trajectory
from clockframes.operators import Ket, Operator, SpaceLayout

layout = SpaceLayout.single("M", 2)
h = Operator(layout, np.array([[0.0, 1.0], [0.5, 0.0]]))
report = find_metric(h)
print(report.classification)
print("eta =\n", np.round(report.eta.matrix.real, 6))

traj = evolve(EffectiveHamiltonian(h, "A", "demo"), Ket(layout, np.array([1.0, 0.0])), np.linspace(0, 10, 11))
print("plain norm:", np.round(traj.norms, 4))
print("eta-norm:  ", np.round(metric_norm_trajectory(traj, report.eta), 10))

# imaginary eigenvalues rule out any positive metric
ghost = find_metric(Operator(layout, np.array([[0.0, 1.0], [-1.0, 0.0]])))
print(ghost.classification, ghost.offending)
