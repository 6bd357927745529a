"""Positive metrics that make a non-Hermitian generator norm-preserving.

For a diagonalizable ``H`` with real spectrum and eigenvector matrix ``S``,
``eta = (S S†)^{-1}`` satisfies ``eta H = H† eta`` and the norm
``<psi|eta|psi>`` is conserved by ``exp(-i H t)``. Complex eigenvalues rule
out any positive-definite metric; states then acquire indefinite norms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DefectiveOperatorError, DomainError
from .operators import Operator, hermiticity_defect

__all__ = ["MetricReport", "find_metric", "metric_norm_trajectory"]

POSITIVE = "positive-definite"
NO_POSITIVE = "no-positive-metric"


@dataclass(frozen=True, eq=False)
class MetricReport:
    classification: str
    eigenvalues: np.ndarray
    eta: Operator = None
    offending: tuple = ()
    condition_number: float = 1.0

    @property
    def positive(self):
        return self.classification == POSITIVE


def find_metric(heff, max_condition=1e8, imag_tol=1e-10):
    """Metric operator for ``heff`` (unit trace), or the eigenvalues that forbid one.

    Raises
    ------
    DefectiveOperatorError
        If the eigenvector matrix has condition number above ``max_condition``.
    """
    h = heff.matrix
    if not np.all(np.isfinite(h)):
        raise DomainError("operator has non-finite entries")
    if hermiticity_defect(heff) <= 1e-13:
        w, s = scipy.linalg.eigh(0.5 * (h + h.conj().T))
        w = w.astype(complex)
    else:
        w, s = scipy.linalg.eig(h)
    cond = float(np.linalg.cond(s))
    if not np.isfinite(cond) or cond > max_condition:
        raise DefectiveOperatorError(f"eigenvector matrix condition number {cond:.3e} exceeds {max_condition:.1e}")
    scale = max(1.0, float(np.max(np.abs(w))))
    bad = np.abs(w.imag) > imag_tol * scale
    if np.any(bad):
        offending = tuple(sorted((complex(x) for x in w[bad]), key=lambda z: (z.real, z.imag)))
        return MetricReport(NO_POSITIVE, w, None, offending, cond)
    s_inv = np.linalg.inv(s)
    eta = s_inv.conj().T @ s_inv
    eta = 0.5 * (eta + eta.conj().T)
    eta = eta / np.trace(eta).real
    return MetricReport(POSITIVE, w.real.astype(complex), Operator(heff.layout, eta), (), cond)


def metric_norm_trajectory(trajectory, eta):
    """``<psi(t_k)|eta|psi(t_k)>`` per reading; ``eta`` must be positive definite."""
    m = eta.matrix
    if np.max(np.abs(m - m.conj().T), initial=0.0) > 1e-12 * max(1.0, np.abs(m).max()):
        raise DomainError("metric must be Hermitian")
    if np.min(np.linalg.eigvalsh(0.5 * (m + m.conj().T))) <= 0.0:
        raise DomainError("metric is not positive definite")
    psi = trajectory.states
    return np.einsum("ij,jk,ik->i", psi.conj(), m, psi).real
