"""
Norm decay under a clock-time acceleration
==========================================

With g(t) = 0.1 t the conditional state loses norm as 1 - g(t), whatever
the shape of the wavepacket.
"""

import numpy as np

from clockframes import (
    EffectiveHamiltonian,
    analytic_gaussian_norm,
    effective_hamiltonian_ideal_timeparam,
    evolve,
    gaussian_wavepacket,
    make_particle,
)

particle = make_particle("M", np.linspace(-32, 32, 128, endpoint=False))
g = lambda t: 0.1 * t  # noqa: E731
dg = lambda t: 0.1  # noqa: E731
heff = EffectiveHamiltonian(
    lambda t: effective_hamiltonian_ideal_timeparam(g, particle.hamiltonian, t, dg=dg), "A", "ideal")

readings = np.linspace(0.0, 1.0, 6)
print("   t   analytic   width 0.5   width 2.0")
runs = [evolve(heff, gaussian_wavepacket(particle, w), readings).norms for w in (0.5, 2.0)]
for i, t in enumerate(readings):
    print(f"{t:4.1f}   {analytic_gaussian_norm(g, t, dg):.6f}   {runs[0][i]:.6f}    {runs[1][i]:.6f}")

# the plot is optional
try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    plt = None
if plt is not None:
    plt.plot(readings, runs[0], "o-", label="numerical")
    plt.plot(readings, 1 - g(readings), "--", label="1 - g(t)")
    plt.xlabel("clock reading")
    plt.ylabel("<psi|psi>")
    plt.legend()
    plt.savefig("norm_decay.png", dpi=100)
    print("wrote norm_decay.png")
