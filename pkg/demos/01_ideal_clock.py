"""
An ideal finite clock
=====================

A d-level clock whose time states are the discrete Fourier transform of its
energy states. The clock Hamiltonian shifts one time state to the next.
"""

import numpy as np

from clockframes import make_ideal_clock, time_operator
from clockframes.operators import matrix_exponential

clock = make_ideal_clock(8, 0.25)
print("readings:", clock.readings)
print("energies:", np.round(clock.energies, 4))

# one tick of evolution moves |t_0> onto |t_1>
step = matrix_exponential(clock.hamiltonian, -1j * clock.tick).matrix
states = clock.time_states()
print("overlap <t_1| U |t_0> =", np.round(np.vdot(states[:, 1], step @ states[:, 0]), 12))

# the time operator is diagonal in the time basis
t = time_operator(clock).operator.matrix
print("diag of T in the time basis:", np.round(np.diag(states.conj().T @ t @ states).real, 12))
