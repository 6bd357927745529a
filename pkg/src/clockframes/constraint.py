"""Physical states of the constraint ``H |Psi>> = 0`` and conditioning on clock readings."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DimensionCapError, DomainError, LayoutError
from .operators import MAX_DIMENSION, Ket, partial_inner, reorder

__all__ = [
    "JointState",
    "ConditionalState",
    "condition_on_time",
    "condition_at",
    "assemble_physical_state",
    "constraint_residual",
    "solve_physical_states",
    "nearest_physical_state",
    "physical_inner_product",
    "derivation_residual",
    "time_derivative",
]


@dataclass(frozen=True, eq=False)
class JointState:
    """Candidate physical state on the scenario's full layout."""

    ket: Ket

    @property
    def layout(self):
        return self.ket.layout

    def __add__(self, other):
        return JointState(self.ket + other.ket)

    def __mul__(self, scalar):
        return JointState(scalar * self.ket)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class ConditionalState:
    """``|psi(t)> = <t|Psi>>`` on the factors other than the conditioning clock."""

    ket: Ket
    clock_label: str
    reading: float

    @property
    def layout(self):
        return self.ket.layout


def condition_at(psi, clock, t):
    """Condition on the (possibly off-grid) reading ``t`` of ``clock``."""
    if clock.label not in psi.layout:
        raise LayoutError(f"clock {clock.label!r} not in layout {psi.layout}")
    bra = clock.time_state(t)
    return ConditionalState(partial_inner(bra, psi.ket), clock.label, float(t))


def condition_on_time(psi, clock, k):
    return condition_at(psi, clock, k * clock.tick)


def assemble_physical_state(clock, trajectory, layout=None):
    """``|Psi>> = sum_k tick |t_k> ⊗ |psi(t_k)>``.

    The clock factor is placed first unless a target ``layout`` is given.
    """
    if len(trajectory) != clock.dimension:
        raise DomainError(f"trajectory has {len(trajectory)} readings, clock has {clock.dimension}")
    rest = trajectory[0].layout
    for state in trajectory:
        if state.layout != rest:
            raise LayoutError("conditional states have inconsistent layouts")
    states = clock.time_states()
    psi = np.stack([s.ket.vector for s in trajectory])  # (d, n)
    vec = clock.tick * np.einsum("ak,kn->an", states, psi).reshape(-1)
    ket = Ket(clock.layout.concat(rest), vec)
    return JointState(ket if layout is None else reorder(ket, layout))


def constraint_residual(scenario, psi):
    """``||H psi|| / ||psi||`` in the kinematical norm."""
    h = _hamiltonian(scenario)
    norm = psi.ket.norm()
    if norm == 0.0:
        raise DomainError("constraint residual of the zero state")
    return float(np.linalg.norm(h.matrix @ psi.ket.vector) / norm)


def _hamiltonian(scenario):
    return getattr(scenario, "hamiltonian", scenario)


def _eigh(scenario):
    h = _hamiltonian(scenario)
    if h.dim > MAX_DIMENSION:
        raise DimensionCapError(f"joint dimension {h.dim} exceeds cap {MAX_DIMENSION}")
    herm = h.matrix
    if np.max(np.abs(herm - herm.conj().T), initial=0.0) > 1e-10 * max(1.0, np.abs(herm).max()):
        raise DomainError("constraint Hamiltonian must be Hermitian to solve for physical states")
    return scipy.linalg.eigh(0.5 * (herm + herm.conj().T))


def solve_physical_states(scenario, tolerance=None):
    """``scenario`` may also be a bare Hermitian :class:`Operator`.

    Orthonormal basis of the eigenvectors of ``H`` with ``|E| <= tolerance``.

    ``tolerance`` defaults to ``1e-8 * ||H||_2``.
    """
    w, v = _eigh(scenario)
    if tolerance is None:
        tolerance = 1e-8 * max(np.max(np.abs(w)), 1e-300)
    layout = _hamiltonian(scenario).layout
    return [JointState(Ket(layout, v[:, i])) for i in np.flatnonzero(np.abs(w) <= tolerance)]


def nearest_physical_state(scenario):
    """Unit eigenvector of ``H`` whose eigenvalue is closest to zero, with that eigenvalue.

    Shifting a free Hamiltonian by the returned eigenvalue (see
    :meth:`ParticleModel.shifted`) makes the state an exact physical state.
    """
    w, v = _eigh(scenario)
    i = int(np.argmin(np.abs(w)))
    return JointState(Ket(_hamiltonian(scenario).layout, v[:, i])), float(w[i])


def physical_inner_product(psi, phi, clock, k):
    """``<<Psi| (|t_k><t_k| ⊗ I) |Phi>>``."""
    if psi.layout != phi.layout:
        raise LayoutError("states live on different layouts")
    a = condition_on_time(psi, clock, k).ket
    b = condition_on_time(phi, clock, k).ket
    return a.inner(b)


def time_derivative(values, step):
    """Second-order finite differences along axis 0: central inside, one-sided at the ends."""
    values = np.asarray(values)
    if values.shape[0] < 3:
        raise DomainError("need at least 3 readings for a time derivative")
    out = np.empty_like(values)
    out[1:-1] = (values[2:] - values[:-2]) / (2.0 * step)
    out[0] = (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * step)
    out[-1] = (3.0 * values[-1] - 4.0 * values[-2] + values[-3]) / (2.0 * step)
    return out


def derivation_residual(scenario, psi, clock, step=None, count=None, form="constraint"):
    """Per-reading residual of the conditioned constraint in effective-equation form.

    For readings ``t_j = j * step`` this evaluates
    ``|| F (-i hbar d/dt psi)(t_j) + R psi(t_j) ||`` where ``F`` is the factor
    multiplying the clock Hamiltonian and ``R`` the clock-independent part
    of ``H``; with ``form="effective"`` it evaluates the same quantity as
    ``|| F (-i hbar d/dt psi + F^{-1} R psi) ||``. The time derivative uses
    second-order finite differences, so the residual of an exact physical
    state is pure truncation error.

    Returns
    -------
    readings, residuals : ndarray
    """
    split = scenario.split(clock.label)
    if split.factor is None:
        raise DomainError("derivation residual needs a product-form coupling (accelerated or gravitational)")
    if step is None:
        step = clock.tick
    if count is None:
        count = int(round(clock.period / step))
    if count < 3:
        raise DomainError("need at least 3 readings")
    readings = step * np.arange(count)
    cond = np.stack([condition_at(psi, clock, t).ket.vector for t in readings])
    hbar = scenario.constants.hbar
    dpsi = time_derivative(cond, step)
    f = split.factor.matrix
    r = split.rest.matrix
    if form == "constraint":
        res = (-1j * hbar) * dpsi @ f.T + cond @ r.T
    elif form == "effective":
        heff = np.linalg.solve(f, r)
        res = ((-1j * hbar) * dpsi + cond @ heff.T) @ f.T
    else:
        raise DomainError(f"unknown form {form!r}")
    return readings, np.linalg.norm(res, axis=1)
