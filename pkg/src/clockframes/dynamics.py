"""Effective dynamics seen from a clock, and the tools to integrate and check it.

Conditioning a physical state on the readings of an internal clock gives a
Schrödinger equation ``i hbar d/dt psi = H_eff psi`` whose generator need
not be Hermitian. Nothing here renormalizes states: the norm of the
conditional state is the quantity of interest.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np
from scipy import integrate

from .clocks import numerical_derivative, time_operator
from .constraint import ConditionalState, time_derivative
from .errors import (
    DomainError,
    HorizonError,
    IntegratorBlowupError,
    PreconditionError,
)
from .operators import (
    Ket,
    Operator,
    commutator,
    embed,
    hermiticity_defect,
    inverse,
    matrix_exponential,
)
from .scenarios import PhysicalConstants, interaction_kernel

__all__ = [
    "EffectiveHamiltonian",
    "Trajectory",
    "effective_hamiltonian",
    "effective_hamiltonian_ideal_timeparam",
    "evolve",
    "generalized_equation_residual",
    "analytic_gaussian_norm",
    "norm_trajectory",
    "normalized_expectation",
    "time_dilation_rate",
    "gaussian_wavepacket",
    "HORIZON_TOL",
    "BLOWUP_FACTOR",
]

HORIZON_TOL = 1e-6
BLOWUP_FACTOR = 1e6


@dataclass(frozen=True, eq=False)
class EffectiveHamiltonian:
    """Generator of conditional-state evolution from one clock's perspective.

    ``generator`` is either an :class:`Operator` or a callable returning one
    for a given clock reading.
    """

    generator: Union[Operator, Callable]
    perspective: str
    kind: str
    hbar: float = 1.0

    @property
    def time_dependent(self):
        return not isinstance(self.generator, Operator)

    def at(self, t):
        if self.time_dependent:
            return self.generator(t)
        return self.generator


def effective_hamiltonian(scenario, perspective, clock_sign=-1):
    """Effective Hamiltonian of the non-clock factors with respect to clock ``perspective``.

    For couplings of the form ``H = F H_clock + R`` this is ``F^{-1} R``;
    an uncoupled clock (``F = I``) gives back the rest of ``H`` exactly. For
    the time-parametrized coupling with an ideal clock the generator is
    time dependent, ``[1 - g(t)]^{-1} (R - i hbar g'(t) / 2)`` (see
    :func:`effective_hamiltonian_ideal_timeparam` for ``clock_sign``).

    Raises
    ------
    SingularOperatorError
        When ``F`` is not invertible.
    """
    split = scenario.split(perspective)
    hbar = scenario.constants.hbar
    if split.factor is not None:
        if scenario.coupling == "accelerated" and perspective == scenario.clocks[0].label:
            kind = "accelerated"
        elif scenario.coupling == "gravitational":
            kind = f"gravitational-{perspective}"
        else:
            kind = "external"
        f = split.factor
        if np.array_equal(f.matrix, np.eye(f.dim)):
            return EffectiveHamiltonian(split.rest, perspective, kind, hbar)
        return EffectiveHamiltonian(inverse(f) @ split.rest, perspective, kind, hbar)
    clock = scenario.clock(perspective)
    if not clock.ideal:
        raise DomainError("the time-parametrized effective Hamiltonian is available for ideal clocks only")
    g, dg = split.g, split.dg
    rest = split.rest
    constants = scenario.constants

    def generator(t):
        return effective_hamiltonian_ideal_timeparam(g, rest, t, constants, dg=dg, period=clock.period,
                                                     clock_sign=clock_sign)

    return EffectiveHamiltonian(generator, perspective, "time-parametrized-ideal", hbar)


def effective_hamiltonian_ideal_timeparam(g, h_m, t, constants=None, dg=None, period=1.0, clock_sign=-1):
    """``[1 - g(t)]^{-1} (H_M - (i hbar / 2) g'(t) I)`` for an ideal clock.

    ``g'`` falls back to a central difference with step ``1e-6 * period``.
    Raises :class:`HorizonError` when ``|1 - g(t)| < 1e-6``.

    ``clock_sign=+1`` replaces the prefactor by ``[1 + g(t)]^{-1}``. That is
    the generator followed by conditional states of the Weyl-ordered
    constraint built with :func:`build_time_parametrized` (where
    ``<t|H_A = -i hbar d/dt <t|``); their norm decays as ``1 / (1 + g)``
    rather than ``1 - g``.
    """
    constants = constants or PhysicalConstants()
    if clock_sign not in (-1, 1):
        raise DomainError("clock_sign must be -1 or +1")
    denom = 1.0 + clock_sign * g(t)
    if not abs(denom) >= HORIZON_TOL:
        raise HorizonError(f"1 - g(t) = {denom:.3e} at t = {t}: horizon reached", abs(denom))
    slope = dg(t) if dg is not None else numerical_derivative(g, t, 1e-6 * period)
    shift = -0.5j * constants.hbar * slope
    return Operator(h_m.layout, (h_m.matrix + shift * np.eye(h_m.dim)) / denom)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Conditional states on a grid of clock readings.

    ``states`` has one row per reading. ``expectations`` maps observable
    names to complex normalized expectation values per reading.
    """

    readings: np.ndarray
    states: np.ndarray
    layout: object
    clock_label: str
    expectations: dict = field(default_factory=dict)
    defects: np.ndarray = None

    @property
    def norms(self):
        return np.einsum("ij,ij->i", self.states.conj(), self.states).real

    def state(self, i):
        return ConditionalState(Ket(self.layout, self.states[i]), self.clock_label, float(self.readings[i]))

    def __len__(self):
        return len(self.readings)


def _rk4_step(h_at, psi, t, dt, hbar):
    c = -1j / hbar

    def rhs(tt, y):
        return c * (h_at(tt) @ y)

    k1 = rhs(t, psi)
    k2 = rhs(t + 0.5 * dt, psi + 0.5 * dt * k1)
    k3 = rhs(t + 0.5 * dt, psi + 0.5 * dt * k2)
    k4 = rhs(t + dt, psi + dt * k3)
    return psi + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def evolve(heff, initial, readings, method="rk4", dt=None, observables=None):
    """Integrate ``i hbar d/dt psi = H_eff(t) psi`` and record ``psi`` at each reading.

    Parameters
    ----------
    heff : EffectiveHamiltonian
    initial : ConditionalState or Ket
        State at ``readings[0]``.
    readings : array_like
        Strictly increasing clock readings.
    method : {"rk4", "midpoint-exponential"}
        Classical fourth-order Runge-Kutta, or ``exp(-i H(t_mid) dt / hbar)``
        per step (second order; exact for constant Hermitian generators).
    dt : float, optional
        Largest internal step. Defaults to 1/16 of the smallest reading spacing.
    observables : dict, optional
        Name to :class:`Operator`; normalized expectations are recorded.

    Raises
    ------
    IntegratorBlowupError
        When the norm grows by more than ``1e6`` relative to the initial norm.
    """
    ket = initial.ket if isinstance(initial, ConditionalState) else initial
    readings = np.asarray(readings, dtype=float)
    if readings.ndim != 1 or len(readings) < 1:
        raise DomainError("readings must be a non-empty 1-d grid")
    if len(readings) > 1 and not np.all(np.diff(readings) > 0):
        raise DomainError("readings must be strictly increasing")
    if method not in ("rk4", "midpoint-exponential"):
        raise DomainError(f"unknown integrator {method!r}")
    if dt is None:
        dt = np.min(np.diff(readings)) / 16.0 if len(readings) > 1 else 1.0
    hbar = heff.hbar
    cache = {}

    def h_at(t):
        if not heff.time_dependent:
            if "const" not in cache:
                cache["const"] = heff.generator.matrix
            return cache["const"]
        return heff.at(t).matrix

    def propagator(t_mid, step):
        if heff.time_dependent:
            return matrix_exponential(Operator(ket.layout, h_at(t_mid)), -1j * step / hbar).matrix
        key = ("exp", step)
        if key not in cache:
            cache[key] = matrix_exponential(heff.generator, -1j * step / hbar).matrix
        return cache[key]

    psi = np.array(ket.vector, dtype=complex)
    start = np.vdot(psi, psi).real
    limit = BLOWUP_FACTOR * max(start, np.finfo(float).tiny)
    out = np.empty((len(readings), len(psi)), dtype=complex)
    out[0] = psi
    for i in range(1, len(readings)):
        t0, t1 = readings[i - 1], readings[i]
        n = max(1, int(np.ceil((t1 - t0) / dt - 1e-9)))
        h = (t1 - t0) / n
        for j in range(n):
            t = t0 + j * h
            if method == "rk4":
                psi = _rk4_step(h_at, psi, t, h, hbar)
            else:
                psi = propagator(t + 0.5 * h, h) @ psi
        norm = np.vdot(psi, psi).real
        if not np.isfinite(norm) or norm > limit:
            raise IntegratorBlowupError(
                f"norm grew to {norm:.3e} (from {start:.3e}) by t = {t1}; reduce dt (currently {dt:g})"
            )
        out[i] = psi
    expectations = {}
    for name, obs in (observables or {}).items():
        m = obs.matrix
        num = np.einsum("ij,jk,ik->i", out.conj(), m, out)
        den = np.einsum("ij,ij->i", out.conj(), out).real
        with np.errstate(invalid="ignore", divide="ignore"):
            expectations[name] = num / den
    defects = np.array([hermiticity_defect(heff.at(t)) for t in readings])
    return Trajectory(readings, out, ket.layout, heff.perspective, expectations, defects)


def generalized_equation_residual(scenario, trajectory, clock):
    """Max over interior readings of ``|| i hbar dpsi/dt - R psi_j - sum_k tick K(t_j, t_k) psi_k ||``.

    ``R`` is the clock-independent part of ``H`` and ``K`` the interaction
    kernel. The trajectory must sit on the clock's own reading grid.
    """
    d = clock.dimension
    if len(trajectory) < 3:
        raise DomainError("need at least 3 readings")
    if len(trajectory) != d or not np.allclose(trajectory.readings, clock.readings, rtol=0, atol=1e-12 * clock.period):
        raise DomainError("trajectory must be given on the clock's full reading grid")
    psi = trajectory.states
    if not np.any(psi):
        return 0.0
    hbar = scenario.constants.hbar
    split = scenario.split(clock.label)
    kernel = interaction_kernel(scenario, clock.label)
    dpsi = time_derivative(psi, clock.tick)
    memory = clock.tick * np.einsum("jkab,kb->ja", kernel, psi)
    res = 1j * hbar * dpsi - psi @ split.rest.matrix.T - memory
    return float(np.max(np.linalg.norm(res[1:-1], axis=1)))


def _g_prime(g, dg, t):
    return dg(t) if dg is not None else numerical_derivative(g, t, 1e-6 * max(1.0, abs(t)))


def analytic_gaussian_norm(g, t, dg=None):
    """``exp(-integral_0^t g'(s) / (1 - g(s)) ds)``, the norm of a Gaussian packet under the ideal-clock generator.

    Independent of the packet width and the mass.
    """
    t = float(t)
    if t == 0.0:
        return 1.0
    probe = np.linspace(0.0, t, 2049)
    gap = np.array([1.0 - g(s) for s in probe])
    if np.min(np.abs(gap)) < HORIZON_TOL:
        raise HorizonError(f"1 - g vanishes on [0, {t}]", float(np.min(np.abs(gap))))
    sign = np.sign(gap)
    if np.any(sign != sign[0]):
        raise HorizonError(f"1 - g changes sign on [0, {t}]", 0.0)

    def integrand(s):
        return _g_prime(g, dg, s) / (1.0 - g(s))

    val, _ = integrate.quad(integrand, 0.0, t, epsabs=1e-13, epsrel=1e-13, limit=200)
    return float(np.exp(-val))


def norm_trajectory(trajectory):
    return trajectory.norms


def normalized_expectation(state, obs, tol=1e-12):
    """``<psi|O|psi> / <psi|psi>`` for Hermitian ``O``."""
    ket = state.ket if isinstance(state, ConditionalState) else state
    den = ket.norm_squared()
    if den == 0.0:
        raise DomainError("expectation value in the zero state")
    if hermiticity_defect(obs) > tol:
        raise DomainError("observable must be Hermitian")
    return float(np.vdot(ket.vector, obs.matrix @ ket.vector).real / den)


def time_dilation_rate(scenario, state, clock_label=None, external_label=None, boundary_weight=1e-3):
    """Rate ``d T_A / d t_B`` of an accelerated clock seen from an uncoupled external clock.

    Evaluates the normalized expectation of ``(i/hbar) [H_eff^B, T_A]`` in
    ``state``, a state on the factors other than the external clock.
    """
    if scenario.coupling != "accelerated":
        raise DomainError("time dilation rate is defined for accelerated scenarios")
    if len(scenario.clocks) < 2:
        raise DomainError("scenario needs an external clock (see add_external_clock)")
    clock_a = scenario.clock(clock_label or scenario.clocks[0].label)
    clock_b = scenario.clock(external_label or scenario.clocks[-1].label)
    ket = state.ket if isinstance(state, ConditionalState) else state
    heff = effective_hamiltonian(scenario, clock_b.label).at(0.0)
    if ket.layout != heff.layout:
        raise DomainError(f"state layout {ket.layout} does not match {heff.layout}")
    v = ket.vector
    weights = (np.abs(v.reshape(ket.layout.dims)) ** 2)
    axis = ket.layout.index(clock_a.label)
    marginal = np.moveaxis(weights, axis, 0).reshape(clock_a.dimension, -1).sum(axis=1)
    total = marginal.sum()
    if total == 0.0:
        raise DomainError("zero state")
    if (marginal[0] + marginal[-1]) / total > boundary_weight:
        raise PreconditionError("state has weight on the wrap-around time bins of the clock")
    t_a = embed(time_operator(clock_a).operator, heff.layout)
    rate = (1j / scenario.constants.hbar) * commutator(heff, t_a)
    return normalized_expectation(ket, rate)


def gaussian_wavepacket(particle, width, hbar=1.0):
    """Momentum-space Gaussian ``(2 width^2/pi)^{1/4} exp(-width^2 p^2)`` on the particle's momentum grid.

    Renormalized after discretization; returned in the position basis.
    """
    if not width > 0:
        raise DomainError("wavepacket width must be positive")
    p = particle.momentum_grid(hbar)
    amp = (2.0 * width**2 / np.pi) ** 0.25 * np.exp(-(width**2) * p**2)
    amp = amp / np.linalg.norm(amp)
    return Ket(particle.layout, particle.momentum_basis() @ amp)
