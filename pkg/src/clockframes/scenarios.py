"""Constrained clock + particle Hamiltonians.

Three couplings are supported:

* ``accelerated``: a position-dependent potential couples to the clock
  energy through the mass-energy correction, ``H = H_A + H_M + H_A f(X_M)``.
* ``gravitational``: two particles with internal clocks, the lighter one
  held at the origin, ``H = [I + f(X_N, H_B)] H_A + H_B + H_M + H_N``.
* ``time-parametrized``: the acceleration is a function of the clock
  reading, ``H_int = 1/2 (H_A g(T_A) + g(T_A) H_A)`` (Weyl ordered).

Each :class:`Scenario` records, for every clock, how the total Hamiltonian
splits into a clock-independent part and the terms that involve the clock
(:class:`ClockSplit`). The dynamics module derives effective Hamiltonians
from that split.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np
from scipy import integrate

from .clocks import function_of_time, numerical_derivative
from .errors import DomainError, LayoutError, SingularOperatorError
from .operators import (
    SINGULAR_RTOL,
    Operator,
    SpaceLayout,
    embed,
    identity,
    tensor_product,
    zeros,
)

__all__ = [
    "PhysicalConstants",
    "ParticleModel",
    "AccelerationProfile",
    "ClockSplit",
    "Scenario",
    "make_particle",
    "position_profile",
    "time_profile",
    "potential_profile",
    "build_accelerated",
    "build_gravitational",
    "build_time_parametrized",
    "interaction_kernel",
    "add_external_clock",
    "add_spectator",
]


@dataclass(frozen=True)
class PhysicalConstants:
    hbar: float = 1.0
    c: float = 1.0
    G: float = 0.0

    def __post_init__(self):
        for name in ("hbar", "c", "G"):
            value = getattr(self, name)
            if not np.isfinite(value):
                raise DomainError(f"{name} must be finite")
        if self.hbar <= 0 or self.c <= 0 or self.G < 0:
            raise DomainError("require hbar > 0, c > 0, G >= 0")


@dataclass(frozen=True, eq=False)
class ParticleModel:
    """External degree of freedom on a position grid."""

    label: str
    grid: np.ndarray
    mass: float
    position: Operator
    momentum: Optional[Operator]
    hamiltonian: Operator

    @property
    def layout(self):
        return self.position.layout

    @property
    def dimension(self):
        return len(self.grid)

    def momentum_grid(self, hbar=1.0):
        """Momenta ``hbar k`` matching the columns of :meth:`momentum_basis`."""
        n = len(self.grid)
        dx = self.grid[1] - self.grid[0]
        return hbar * 2.0 * np.pi * np.fft.fftfreq(n, d=dx)

    def momentum_basis(self):
        """Plane waves ``exp(i k x) / sqrt(n)`` as columns."""
        n = len(self.grid)
        k = self.momentum_grid(1.0)
        return np.exp(1j * np.outer(self.grid, k)) / np.sqrt(n)

    def shifted(self, offset):
        """Same particle with the free Hamiltonian shifted by ``-offset``."""
        h = self.hamiltonian - offset * identity(self.layout)
        return replace(self, hamiltonian=h)


def make_particle(label, grid, mass=1.0, hbar=1.0, hamiltonian=None):
    """Particle with ``X`` diagonal on ``grid``.

    With ``hamiltonian=None`` the free Hamiltonian is ``P^2 / 2m`` with ``P``
    the periodic spectral derivative on the (uniform) grid. Otherwise
    ``hamiltonian`` is a Hermitian matrix in the position basis and ``P`` is
    still built when the grid is uniform.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or len(grid) < 1:
        raise DomainError("grid must be a non-empty 1-d array")
    if not np.all(np.isfinite(grid)):
        raise DomainError("grid must be finite")
    layout = SpaceLayout.single(label, len(grid))
    x = Operator(layout, np.diag(grid))
    p = None
    uniform = len(grid) >= 2 and np.allclose(np.diff(grid), grid[1] - grid[0], rtol=1e-9, atol=0)
    if uniform and grid[1] > grid[0]:
        k = 2.0 * np.pi * np.fft.fftfreq(len(grid), d=grid[1] - grid[0])
        f = np.exp(1j * np.outer(grid, k)) / np.sqrt(len(grid))
        p = Operator(layout, (f * (hbar * k)) @ f.conj().T)
    if hamiltonian is None:
        if p is None:
            raise DomainError("kinetic Hamiltonian needs a uniform increasing grid with >= 2 points")
        if not mass > 0:
            raise DomainError("kinetic Hamiltonian needs mass > 0")
        h = (p @ p) / (2.0 * mass)
        h = Operator(layout, 0.5 * (h.matrix + h.matrix.conj().T))
    else:
        h = Operator(layout, hamiltonian)
        if np.max(np.abs(h.matrix - h.matrix.conj().T), initial=0.0) > 1e-13 * max(1.0, np.abs(h.matrix).max()):
            raise DomainError("particle Hamiltonian must be Hermitian")
    if mass < 0:
        raise DomainError("mass must be non-negative")
    return ParticleModel(label, grid, float(mass), x, p, h)


@dataclass(frozen=True, eq=False)
class AccelerationProfile:
    """Acceleration as a function of position or of clock time.

    For the position kind, ``f(x) = -(1/c^2) * integral_{x0}^{x} a``; the
    potential kind takes the dimensionless ``f`` directly (``potential``).
    The time kind carries ``g(t)`` and optionally its derivative ``dg``.
    """

    kind: str
    a: Optional[Callable] = None
    x0: float = 0.0
    g: Optional[Callable] = None
    dg: Optional[Callable] = None
    name: str = ""
    potential: Optional[Callable] = None

    def f(self, x, c=1.0):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if self.kind == "potential":
            return np.asarray(self.potential(x), dtype=float) * np.ones_like(x)
        if self.kind != "position":
            raise DomainError("f is defined for position-parametrized profiles only")
        out = np.empty_like(x)
        for i, xi in enumerate(x):
            val, _ = integrate.quad(self.a, self.x0, xi, epsabs=1e-13, epsrel=1e-13, limit=200)
            out[i] = -val / c**2
        return out

    def derivative(self, period=1.0):
        if self.dg is not None:
            return self.dg
        step = 1e-6 * period
        g = self.g
        return lambda t: numerical_derivative(g, t, step)


def position_profile(a, x0=0.0, name=""):
    return AccelerationProfile("position", a=a, x0=float(x0), name=name)


def potential_profile(f, name=""):
    """Profile given by the dimensionless coupling ``f(x)`` itself."""
    return AccelerationProfile("potential", potential=f, name=name)


def time_profile(g, dg=None, name=""):
    return AccelerationProfile("time", g=g, dg=dg, name=name)


@dataclass(frozen=True, eq=False)
class ClockSplit:
    """Decomposition of ``H`` with respect to one clock factor.

    ``H = H_clock ⊗ I + I ⊗ rest + interaction``. For couplings of product
    form ``interaction = H_clock ⊗ (factor - I)`` and ``factor`` is set.
    For the time-parametrized coupling ``g``/``dg`` are set instead.
    """

    rest: Operator
    interaction: Operator
    factor: Optional[Operator] = None
    g: Optional[Callable] = None
    dg: Optional[Callable] = None


@dataclass(frozen=True, eq=False)
class Scenario:
    constants: PhysicalConstants
    clocks: tuple
    particles: tuple
    coupling: str
    hamiltonian: Operator
    splits: dict
    profile: Optional[AccelerationProfile] = None
    include_rest_mass: bool = False
    ordering: str = "weyl"
    potential: Optional[Operator] = None
    extras: dict = field(default_factory=dict)

    @property
    def layout(self):
        return self.hamiltonian.layout

    def clock(self, label):
        for c in self.clocks:
            if c.label == label:
                return c
        raise LayoutError(f"scenario has no clock {label!r}")

    def particle(self, label):
        for p in self.particles:
            if p.label == label:
                return p
        raise LayoutError(f"scenario has no particle {label!r}")

    def split(self, label):
        try:
            return self.splits[label]
        except KeyError:
            raise LayoutError(f"scenario has no clock {label!r}") from None


def _diag_operator(layout, values):
    return Operator(layout, np.diag(np.asarray(values, dtype=complex)))


def _check_invertible(values, what, rtol=SINGULAR_RTOL):
    values = np.asarray(values, dtype=float)
    scale = np.max(np.abs(values))
    worst = np.min(np.abs(values))
    if scale == 0.0 or worst <= rtol * scale:
        raise SingularOperatorError(f"{what} is not invertible (min |1 + f| = {worst:.3e})", worst)


def build_accelerated(clock, particle, profile, constants=None, include_rest_mass=False):
    """Accelerated particle with an internal clock.

    ``H = H_A ⊗ I + I ⊗ H_M + H_A ⊗ f(X_M)``, plus ``m f(X_M)`` when
    ``include_rest_mass`` is set.
    """
    constants = constants or PhysicalConstants()
    if profile.kind not in ("position", "potential"):
        raise DomainError("build_accelerated needs a position-parametrized profile")
    if clock.label == particle.label:
        raise LayoutError("clock and particle labels must differ")
    fx = profile.f(particle.grid, constants.c)
    _check_invertible(1.0 + fx, "I + f(X_M)")
    layout = clock.layout.concat(particle.layout)
    h_a = clock.hamiltonian
    f_op = _diag_operator(particle.layout, fx)
    one_m = identity(particle.layout)
    rest = particle.hamiltonian
    if include_rest_mass:
        rest = rest + particle.mass * f_op
    interaction = tensor_product(h_a, f_op)
    h = tensor_product(h_a, one_m) + embed(rest, layout) + interaction
    split = ClockSplit(rest=rest, interaction=interaction, factor=one_m + f_op)
    return Scenario(constants, (clock,), (particle,), "accelerated", h, {clock.label: split},
                    profile=profile, include_rest_mass=include_rest_mass, potential=f_op)


def _inverse_distance(grid, softening):
    grid = np.asarray(grid, dtype=float)
    if softening is None:
        softening = 0.5 * np.min(np.abs(np.diff(grid))) if len(grid) > 1 else 0.0
    bad = np.abs(grid) < softening
    if np.any(bad) or np.any(grid == 0.0):
        raise SingularOperatorError(
            f"grid points {grid[bad | (grid == 0.0)]} lie within softening {softening:g} of the origin", 0.0
        )
    return 1.0 / np.abs(grid)


def build_gravitational(clock_a, particle_m, clock_b, particle_n, constants=None,
                        softening=None, two_body=False):
    """Two massive particles with internal clocks, layout ``{A, M, B, N}``.

    The coupling is ``f(X_N, H_B) = -(G / 2c^4) H_B |X_N|^{-1}`` multiplying
    ``H_A``. With ``two_body`` the distance ``|X_N - X_M|`` replaces
    ``|X_N|`` (an extension; the default keeps particle M static at the origin).
    """
    constants = constants or PhysicalConstants()
    layout = SpaceLayout(clock_a.layout.factors + particle_m.layout.factors
                         + clock_b.layout.factors + particle_n.layout.factors)
    lam = constants.G / (2.0 * constants.c**4)
    h_a, h_b = clock_a.hamiltonian, clock_b.hamiltonian
    if two_body:
        xm = particle_m.grid[:, None]
        xn = particle_n.grid[None, :]
        dist = np.abs(xn - xm).ravel()
        if softening is None:
            softening = 0.5 * np.min(np.abs(np.diff(particle_n.grid))) if len(particle_n.grid) > 1 else 0.0
        if np.any(dist < softening) or np.any(dist == 0.0):
            raise SingularOperatorError("two-body distance grid passes through zero", 0.0)
        inv = _diag_operator(particle_m.layout.concat(particle_n.layout), 1.0 / dist)
    else:
        inv = _diag_operator(particle_n.layout, _inverse_distance(particle_n.grid, softening))

    f_b = -lam * tensor_product(h_b, inv)  # on {B, N}, or {B, M, N} for two_body
    f_a = -lam * tensor_product(h_a, inv)
    h = (embed(h_a, layout) @ embed(identity(f_b.layout) + f_b, layout)
         + embed(h_b, layout) + embed(particle_m.hamiltonian, layout)
         + embed(particle_n.hamiltonian, layout))

    splits = {}
    for own, other_clock, f in ((clock_a, clock_b, f_b), (clock_b, clock_a, f_a)):
        rest_layout = layout.without(own.label)
        rest = (embed(other_clock.hamiltonian, rest_layout) + embed(particle_m.hamiltonian, rest_layout)
                + embed(particle_n.hamiltonian, rest_layout))
        factor = identity(rest_layout) + embed(f, rest_layout)
        interaction = embed(own.hamiltonian, layout) @ embed(f, layout)
        splits[own.label] = ClockSplit(rest=rest, interaction=interaction, factor=factor)
    extras = {"coupling_strength": lam, "f_B": f_b, "f_A": f_a, "two_body": two_body}
    return Scenario(constants, (clock_a, clock_b), (particle_m, particle_n), "gravitational", h,
                    splits, extras=extras)


def build_time_parametrized(clock, particle, g, constants=None, dg=None, ordering="weyl",
                            include_rest_mass=False):
    """Acceleration parametrized by clock readings.

    ``g(T_A) = sum_k g(t_k) E_k`` with ``E_k`` the clock's time-state
    effects (projectors for an ideal clock). The coupling to ``H_A`` is
    ``1/2 (H_A g + g H_A)`` for ``ordering="weyl"``, ``g H_A`` for
    ``"left"`` and ``H_A g`` for ``"right"``; only the Weyl form is
    Hermitian.
    """
    constants = constants or PhysicalConstants()
    if ordering not in ("weyl", "left", "right"):
        raise DomainError(f"unknown ordering {ordering!r}")
    layout = clock.layout.concat(particle.layout)
    h_a = clock.hamiltonian
    g_op = function_of_time(clock, g)
    if ordering == "weyl":
        h_int = 0.5 * (h_a @ g_op + g_op @ h_a)
    elif ordering == "left":
        h_int = g_op @ h_a
    else:
        h_int = h_a @ g_op
    if include_rest_mass:
        h_int = h_int + particle.mass * g_op
    interaction = embed(h_int, layout)
    rest = particle.hamiltonian
    h = embed(h_a, layout) + embed(rest, layout) + interaction
    profile = time_profile(g, dg)
    split = ClockSplit(rest=rest, interaction=interaction, g=g, dg=profile.derivative(clock.period))
    return Scenario(constants, (clock,), (particle,), "time-parametrized", h, {clock.label: split},
                    profile=profile, include_rest_mass=include_rest_mass, ordering=ordering,
                    extras={"clock_interaction": h_int})


def interaction_kernel(scenario, clock_label):
    """``K[j, k] = <t_j| H_int |t_k> / tick`` as an array of shape ``(d, d, n, n)``.

    Each ``K[j, k]`` is an operator on the non-clock factors (in the order of
    ``scenario.layout`` without the clock). Dividing by the tick makes
    ``sum_k tick * K[j, k] psi_k`` the discrete stand-in for the kernel
    integral over clock time.
    """
    clock = scenario.clock(clock_label)
    split = scenario.split(clock_label)
    states = clock.time_states()
    d = clock.dimension
    layout = scenario.layout
    picked = layout.index(clock_label)
    rest_idx = [i for i in range(len(layout)) if i != picked]
    dims = layout.dims
    n = len(dims)
    order = [picked] + rest_idx
    t = split.interaction.matrix.reshape(dims + dims).transpose(order + [n + i for i in order])
    r = layout.dim // d
    t = t.reshape(d, r, d, r)
    out = np.einsum("ij,iakb,kl->jlab", states.conj(), t, states, optimize=True)
    return out / clock.tick


def _rebuild_split(split, old_rest_layout, new_rest_layout, new_layout, extra):
    rest = embed(split.rest, new_rest_layout) + embed(extra, new_rest_layout)
    interaction = embed(split.interaction, new_layout)
    factor = None if split.factor is None else embed(split.factor, new_rest_layout)
    return ClockSplit(rest=rest, interaction=interaction, factor=factor, g=split.g, dg=split.dg)


def add_external_clock(scenario, clock_b):
    """Append a clock that couples to nothing: ``H' = H + H_B``."""
    if clock_b.label in scenario.layout:
        raise LayoutError(f"label {clock_b.label!r} already used")
    new_layout = scenario.layout.concat(clock_b.layout)
    h = embed(scenario.hamiltonian, new_layout) + embed(clock_b.hamiltonian, new_layout)
    splits = {}
    for label, split in scenario.splits.items():
        rest_layout = new_layout.without(label)
        splits[label] = _rebuild_split(split, scenario.layout.without(label), rest_layout, new_layout,
                                       clock_b.hamiltonian)
    splits[clock_b.label] = ClockSplit(rest=scenario.hamiltonian, interaction=zeros(new_layout),
                                       factor=identity(scenario.layout))
    extras = {**scenario.extras, "inner_hamiltonian": scenario.hamiltonian}
    return replace(scenario, clocks=scenario.clocks + (clock_b,), hamiltonian=h, splits=splits, extras=extras)


def add_spectator(scenario, label, hamiltonian):
    """Append a system ``S`` coupled to nothing, with Hamiltonian ``H_S`` (matrix)."""
    h_s = Operator(SpaceLayout.single(label, np.asarray(hamiltonian).shape[0]), hamiltonian)
    if label in scenario.layout:
        raise LayoutError(f"label {label!r} already used")
    new_layout = scenario.layout.concat(h_s.layout)
    h = embed(scenario.hamiltonian, new_layout) + embed(h_s, new_layout)
    splits = {}
    for clock_label, split in scenario.splits.items():
        splits[clock_label] = _rebuild_split(split, scenario.layout.without(clock_label),
                                             new_layout.without(clock_label), new_layout, h_s)
    extras = dict(scenario.extras)
    extras.setdefault("spectators", {})
    extras["spectators"] = {**extras["spectators"], label: h_s}
    return replace(scenario, hamiltonian=h, splits=splits, extras=extras)
