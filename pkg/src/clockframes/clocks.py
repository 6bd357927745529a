"""Finite-dimensional quantum clocks.

A clock is a ``d``-level system with Hamiltonian ``H_A`` and a family of
time states generated covariantly, ``|t + s> = exp(-i H_A s / hbar) |t>``.
The computational basis of the clock factor is the set of ideal time states
(time bins) ``|k>``, ``k = 0 .. d-1``; ``H_A`` is the discrete Fourier
generator that shifts ``|k> -> |k+1>`` cyclically in one tick.

The ideal clock uses the bins themselves as time states. The Gaussian clock
keeps the same ``H_A`` but starts from an energy-filtered ``|t_0>``, so its
time states overlap and time is read with a POVM.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import (
    ClockConstructionError,
    DegenerateClockError,
    DomainError,
    PreconditionError,
)
from .operators import Ket, Operator, SpaceLayout, commutator

__all__ = [
    "ClockModel",
    "TimeOperator",
    "make_ideal_clock",
    "make_gaussian_clock",
    "make_custom_clock",
    "generator_residual",
    "time_operator",
    "commutator_identity_residual",
    "gaussian_time_probe",
    "numerical_derivative",
    "function_of_time",
]


def fourier_energies(d, tick, hbar=1.0):
    """Symmetric energy window ``2 pi hbar n / (d tick)`` for ``n = ceil(-d/2) .. floor((d-1)/2)``."""
    n = np.arange(-(d // 2), (d - 1) // 2 + 1)
    return 2.0 * np.pi * hbar * n / (d * tick)


def numerical_derivative(g, t, step):
    return (g(t + step) - g(t - step)) / (2.0 * step)


@dataclass(frozen=True, eq=False)
class ClockModel:
    """A clock factor: Hamiltonian, time states and tick.

    ``energy_basis`` holds the eigenvectors of ``H_A`` as columns (in the bin
    basis) and ``energies`` the matching eigenvalues. ``initial_amplitudes``
    are the components of ``|t_0>`` in the energy basis; every other time
    state follows from them, including states at off-grid readings.
    """

    label: str
    dimension: int
    tick: float
    hbar: float
    energies: np.ndarray
    energy_basis: np.ndarray
    initial_amplitudes: np.ndarray
    ideal: bool
    width: Optional[float] = None
    cyclic: bool = True

    @property
    def layout(self):
        return SpaceLayout.single(self.label, self.dimension)

    @property
    def period(self):
        return self.dimension * self.tick

    @property
    def readings(self):
        return self.tick * np.arange(self.dimension)

    @property
    def hamiltonian(self):
        v = self.energy_basis
        return Operator(self.layout, (v * self.energies) @ v.conj().T)

    def time_state(self, t):
        """``|t> = exp(-i H_A t / hbar) |t_0>`` for any real reading ``t``."""
        phases = np.exp(-1j * self.energies * t / self.hbar)
        return Ket(self.layout, self.energy_basis @ (phases * self.initial_amplitudes))

    def time_states(self):
        """Matrix whose column ``k`` is ``|t_k>``."""
        phases = np.exp(-1j * np.outer(self.energies, self.readings) / self.hbar)
        return self.energy_basis @ (phases * self.initial_amplitudes[:, None])

    def overlaps(self):
        """Gram matrix ``<t_j|t_k>``."""
        s = self.time_states()
        return s.conj().T @ s

    def frame_operator(self):
        """``N = sum_k |t_k><t_k|``; diagonal in the energy basis for cyclic clocks."""
        if self.cyclic:
            v = self.energy_basis
            weights = self.dimension * np.abs(self.initial_amplitudes) ** 2
            return Operator(self.layout, (v * weights) @ v.conj().T)
        s = self.time_states()
        return Operator(self.layout, s @ s.conj().T)

    def effects(self):
        """POVM effects ``N^{-1/2} |t_k><t_k| N^{-1/2}``, stacked along axis 0."""
        s = self.normalized_time_states()
        return np.einsum("ik,jk->kij", s, s.conj())

    def normalized_time_states(self):
        """Columns ``N^{-1/2} |t_k>``; equal to the time states for an ideal clock."""
        if not self.cyclic:
            w, u = np.linalg.eigh(self.frame_operator().matrix)
            if w[0] <= 1e-12 * w[-1]:
                raise DegenerateClockError("time states do not span the clock space")
            root = (u / np.sqrt(w)) @ u.conj().T
            return root @ self.time_states()
        a = self.initial_amplitudes
        scaled = a / (np.sqrt(self.dimension) * np.abs(a))
        phases = np.exp(-1j * np.outer(self.energies, self.readings) / self.hbar)
        return self.energy_basis @ (phases * scaled[:, None])


def _fourier_basis(d, tick, hbar):
    energies = fourier_energies(d, tick, hbar)
    k = np.arange(d)
    # <k|E_n> = exp(+i E_n t_k / hbar) / sqrt(d), so exp(-i H tick/hbar) |k> = |k+1>
    basis = np.exp(1j * np.outer(k * tick, energies) / hbar) / np.sqrt(d)
    return energies, basis


def make_ideal_clock(d, tick, label="A", hbar=1.0):
    """Cyclic clock with orthonormal time states (the time bins)."""
    if int(d) != d or d < 2:
        raise DomainError(f"clock dimension must be an integer >= 2, got {d}")
    if not tick > 0:
        raise DomainError(f"tick must be positive, got {tick}")
    d = int(d)
    energies, basis = _fourier_basis(d, tick, hbar)
    amplitudes = np.full(d, 1.0 / np.sqrt(d), dtype=complex)
    return ClockModel(label, d, float(tick), float(hbar), energies, basis, amplitudes, True)


def make_gaussian_clock(d, tick, width, label="A", hbar=1.0):
    """Non-ideal clock: ``|t_0>`` has energy amplitudes ``exp(-E^2 width^2 / 2 hbar^2)``.

    Raises
    ------
    DegenerateClockError
        If an energy amplitude underflows to zero, so the time states no
        longer span the clock space.
    """
    if int(d) != d or d < 2:
        raise DomainError(f"clock dimension must be an integer >= 2, got {d}")
    if not tick > 0 or not width > 0:
        raise DomainError("tick and width must be positive")
    d = int(d)
    energies, basis = _fourier_basis(d, tick, hbar)
    amplitudes = np.exp(-(energies * width / hbar) ** 2 / 2.0)
    if not np.all(amplitudes > 0.0):
        raise DegenerateClockError(
            f"width {width} underflows energy amplitudes of |t_0> for d={d}, tick={tick}"
        )
    amplitudes = amplitudes / np.linalg.norm(amplitudes)
    return ClockModel(label, d, float(tick), float(hbar), energies, basis,
                      amplitudes.astype(complex), False, float(width))


def make_custom_clock(hamiltonian, tick, label="A", hbar=1.0, initial=None):
    """Clock from an arbitrary Hermitian ``H_A`` given as a matrix in the bin basis.

    ``|t_0>`` defaults to the uniform superposition of energy eigenstates.
    ``ideal`` is set when the ``d`` generated time states are orthonormal.
    """
    h = np.asarray(hamiltonian, dtype=complex)
    if h.ndim != 2 or h.shape[0] != h.shape[1] or h.shape[0] < 2:
        raise DomainError("clock Hamiltonian must be a square matrix of size >= 2")
    if np.linalg.norm(h - h.conj().T) > 1e-12 * max(1.0, np.linalg.norm(h)):
        raise DomainError("clock Hamiltonian must be Hermitian")
    d = h.shape[0]
    energies, basis = np.linalg.eigh(h)
    if initial is None:
        amplitudes = np.full(d, 1.0 / np.sqrt(d), dtype=complex)
    else:
        amplitudes = basis.conj().T @ np.asarray(initial, dtype=complex)
        amplitudes = amplitudes / np.linalg.norm(amplitudes)
    clock = ClockModel(label, d, float(tick), float(hbar), energies, basis, amplitudes, False, cyclic=False)
    gram = clock.overlaps()
    ideal = bool(np.max(np.abs(gram - np.eye(d))) <= 1e-12)
    return ClockModel(label, d, float(tick), float(hbar), energies, basis, amplitudes, ideal, cyclic=False)


def generator_residual(clock, k, dt):
    """``|| (|t_k + dt> - |t_k>)/dt + (i/hbar) H_A |t_k> ||``; first order in ``dt``."""
    if not 0 < dt <= clock.tick:
        raise DomainError(f"dt must satisfy 0 < dt <= tick, got {dt}")
    t = k * clock.tick
    now = clock.time_state(t).vector
    later = clock.time_state(t + dt).vector
    h = clock.hamiltonian.matrix
    return float(np.linalg.norm((later - now) / dt + 1j / clock.hbar * (h @ now)))


@dataclass(frozen=True, eq=False)
class TimeOperator:
    operator: Operator
    kind: str  # "projective" or "first-moment-of-POVM"


def time_operator(clock, completeness_tol=1e-8):
    """``T_A = sum_k t_k E_k`` with projective (ideal) or normalized POVM effects."""
    effects = clock.effects()
    total = effects.sum(axis=0)
    err = np.max(np.abs(total - np.eye(clock.dimension)))
    if err > completeness_tol:
        raise ClockConstructionError(f"time-state effects do not resolve the identity (error {err:.2e})")
    t = np.tensordot(clock.readings, effects, axes=1)
    t = 0.5 * (t + t.conj().T)
    kind = "projective" if clock.ideal else "first-moment-of-POVM"
    return TimeOperator(Operator(clock.layout, t), kind)


def function_of_time(clock, g):
    """``g(T_A) = sum_k g(t_k) E_k`` over the clock's time-state effects."""
    values = np.array([g(t) for t in clock.readings], dtype=float)
    if not np.all(np.isfinite(values)):
        raise DomainError("function of time is not finite on the clock readings")
    return Operator(clock.layout, np.tensordot(values, clock.effects(), axes=1))


def commutator_identity_residual(clock, g, probe, dg=None, boundary_weight=1e-3):
    """Relative size of ``([H_A, g(T_A)] + i hbar g'(T_A)) |probe>``.

    The identity is exact only for infinite-dimensional conjugate pairs; on
    the cyclic clock it holds for probes kept away from the wrap-around bin.

    Parameters
    ----------
    g : callable
        Smooth real function of the clock reading.
    probe : Ket
        State on the clock factor, at most ``boundary_weight`` of its weight
        on bins ``0`` and ``d - 1``.
    dg : callable, optional
        Derivative of ``g``; central differences are used when omitted.
    """
    v = probe.vector
    total = np.vdot(v, v).real
    if total == 0.0:
        raise PreconditionError("probe state is zero")
    edge = (abs(v[0]) ** 2 + abs(v[-1]) ** 2) / total
    if edge > boundary_weight:
        raise PreconditionError(f"probe has {edge:.2e} of its weight on the wrap-around bins")
    if dg is None:
        step = 1e-6 * clock.period
        dg = lambda t: numerical_derivative(g, t, step)  # noqa: E731
    # [H_A, g] ignores constant shifts; removing the mean keeps g = const exact
    mean = float(np.mean([g(t) for t in clock.readings]))
    gt = function_of_time(clock, lambda t: g(t) - mean)
    dgt = function_of_time(clock, dg)
    lhs = commutator(clock.hamiltonian, gt) + 1j * clock.hbar * dgt
    return float(np.linalg.norm(lhs.matrix @ v) / np.sqrt(total))


def gaussian_time_probe(clock, center=None, width=None):
    """Real Gaussian over time bins, centred at ``center`` with standard deviation ``width`` (time units)."""
    if center is None:
        center = 0.5 * clock.period
    if width is None:
        width = 0.08 * clock.period
    t = clock.readings
    amp = np.exp(-((t - center) ** 2) / (4.0 * width**2))
    return Ket(clock.layout, amp / np.linalg.norm(amp))
