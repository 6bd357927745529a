"""
Two clocks in each other's gravitational field
==============================================

Each particle carries a clock; the coupling makes both perspectives
non-Hermitian. The defect grows linearly with G in the weak field.
"""

import numpy as np

from clockframes import (
    PhysicalConstants,
    build_gravitational,
    effective_hamiltonian,
    hermiticity_defect,
    make_ideal_clock,
    make_particle,
)

clock_a = make_ideal_clock(3, 1.0)
clock_b = make_ideal_clock(3, 1.0, label="B")
m = make_particle("M", [-1.0, 1.0], hamiltonian=np.array([[0.0, 0.5], [0.5, 0.0]]))
n = make_particle("N", [1.0, 1.5, 2.0, 2.5], mass=1.0)

for G in (0.0, 1e-4, 1e-3, 1e-2, 0.2):
    sc = build_gravitational(clock_a, m, clock_b, n, constants=PhysicalConstants(G=G))
    da = hermiticity_defect(effective_hamiltonian(sc, "A").at(0.0))
    db = hermiticity_defect(effective_hamiltonian(sc, "B").at(0.0))
    print(f"G = {G:<7g} defect A = {da:.3e}   defect B = {db:.3e}")
