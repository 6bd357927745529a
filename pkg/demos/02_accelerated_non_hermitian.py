"""
Accelerated particle: the effective Hamiltonian is not Hermitian
================================================================

A two-site particle whose clock runs at a position-dependent rate. Seen
from that clock the generator is (1 + f)^{-1} H_M.
"""

import numpy as np

from clockframes import (
    add_external_clock,
    build_accelerated,
    effective_hamiltonian,
    hermiticity_defect,
    make_ideal_clock,
    make_particle,
    potential_profile,
)

clock = make_ideal_clock(4, 1.0)
particle = make_particle("M", [0.0, 1.0], hamiltonian=np.array([[0.0, 1.0], [1.0, 0.0]]))

# f = diag(0, 1): the clock on site 1 ticks at a different rate
scenario = build_accelerated(clock, particle, potential_profile(lambda x: x))
heff = effective_hamiltonian(scenario, "A").at(0.0)
print(heff.matrix.real)
print("relative defect:", hermiticity_defect(heff))

# a constant f only rescales H_M
flat = build_accelerated(clock, particle, potential_profile(lambda x: 0.3 + 0 * x))
print("constant f defect:", hermiticity_defect(effective_hamiltonian(flat, "A").at(0.0)))

# an uncoupled lab clock sees the full H, which is Hermitian
lab = add_external_clock(scenario, make_ideal_clock(3, 1.0, label="B"))
print("lab clock defect:", hermiticity_defect(effective_hamiltonian(lab, "B").at(0.0)))
