"""Dense operator algebra over labeled tensor-product spaces.

Every operator and ket carries a :class:`SpaceLayout`, the ordered list of
``(label, dimension)`` tensor factors it acts on. Factors are combined with
:func:`tensor_product` and lifted to larger spaces with :func:`embed`; the
layout bookkeeping makes it impossible to silently add operators that live
on different spaces.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import prod
from numbers import Number

import numpy as np
import scipy.linalg

from .errors import LayoutError, NumericError, SingularOperatorError

__all__ = [
    "SpaceLayout",
    "Operator",
    "Ket",
    "identity",
    "zeros",
    "tensor_product",
    "ket_product",
    "reorder",
    "embed",
    "matrix_exponential",
    "inverse",
    "commutator",
    "hermiticity_defect",
    "allclose",
    "partial_inner",
    "partial_matrix_element",
    "SINGULAR_RTOL",
    "EQUALITY_ATOL",
]

SINGULAR_RTOL = 1e-10
EQUALITY_ATOL = 1e-12
MAX_DIMENSION = 4096


@dataclass(frozen=True)
class SpaceLayout:
    """Ordered tensor factors ``((label, dim), ...)``."""

    factors: tuple

    def __post_init__(self):
        factors = tuple((str(label), int(dim)) for label, dim in self.factors)
        labels = [label for label, _ in factors]
        if len(set(labels)) != len(labels):
            raise LayoutError(f"duplicate factor labels in {labels}")
        for label, dim in factors:
            if dim < 1:
                raise LayoutError(f"factor {label!r} has dimension {dim} < 1")
        object.__setattr__(self, "factors", factors)

    @classmethod
    def single(cls, label, dim):
        return cls(((label, dim),))

    @property
    def labels(self):
        return tuple(label for label, _ in self.factors)

    @property
    def dims(self):
        return tuple(dim for _, dim in self.factors)

    @property
    def dim(self):
        return prod(self.dims)

    def __contains__(self, label):
        return label in self.labels

    def __len__(self):
        return len(self.factors)

    def index(self, label):
        try:
            return self.labels.index(label)
        except ValueError:
            raise LayoutError(f"factor {label!r} not in layout {self.labels}") from None

    def dim_of(self, label):
        return self.factors[self.index(label)][1]

    def without(self, *labels):
        for label in labels:
            self.index(label)
        return SpaceLayout(tuple(f for f in self.factors if f[0] not in labels))

    def restricted(self, labels):
        """Sub-layout with the given labels, in this layout's order."""
        for label in labels:
            self.index(label)
        return SpaceLayout(tuple(f for f in self.factors if f[0] in labels))

    def concat(self, other):
        clash = set(self.labels) & set(other.labels)
        if clash:
            raise LayoutError(f"label collision: {sorted(clash)}")
        return SpaceLayout(self.factors + other.factors)

    def __str__(self):
        return " ⊗ ".join(f"{label}[{dim}]" for label, dim in self.factors)


def _as_layout(layout):
    if isinstance(layout, SpaceLayout):
        return layout
    return SpaceLayout(tuple(layout))


@dataclass(frozen=True, eq=False)
class Operator:
    """Dense complex square matrix acting on ``layout``."""

    layout: SpaceLayout
    matrix: np.ndarray

    def __post_init__(self):
        layout = _as_layout(self.layout)
        matrix = np.array(self.matrix, dtype=complex)
        n = layout.dim
        if matrix.shape != (n, n):
            raise LayoutError(f"matrix shape {matrix.shape} does not match layout {layout} (dim {n})")
        matrix.setflags(write=False)
        object.__setattr__(self, "layout", layout)
        object.__setattr__(self, "matrix", matrix)

    @property
    def dim(self):
        return self.layout.dim

    def dag(self):
        return Operator(self.layout, self.matrix.conj().T)

    def _check(self, other):
        if other.layout != self.layout:
            raise LayoutError(f"layout mismatch: {self.layout} vs {other.layout}")

    def __add__(self, other):
        if isinstance(other, Operator):
            self._check(other)
            return Operator(self.layout, self.matrix + other.matrix)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, Operator):
            self._check(other)
            return Operator(self.layout, self.matrix - other.matrix)
        return NotImplemented

    def __neg__(self):
        return Operator(self.layout, -self.matrix)

    def __mul__(self, scalar):
        if isinstance(scalar, Number):
            return Operator(self.layout, scalar * self.matrix)
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        if isinstance(scalar, Number):
            return Operator(self.layout, self.matrix / scalar)
        return NotImplemented

    def __matmul__(self, other):
        if isinstance(other, Operator):
            self._check(other)
            return Operator(self.layout, self.matrix @ other.matrix)
        if isinstance(other, Ket):
            if other.layout != self.layout:
                raise LayoutError(f"layout mismatch: {self.layout} vs {other.layout}")
            return Ket(self.layout, self.matrix @ other.vector)
        return NotImplemented

    def __repr__(self):
        return f"Operator({self.layout}, dim={self.dim})"


@dataclass(frozen=True, eq=False)
class Ket:
    """Complex vector on ``layout``. Unnormalized kets are allowed."""

    layout: SpaceLayout
    vector: np.ndarray

    def __post_init__(self):
        layout = _as_layout(self.layout)
        vector = np.array(self.vector, dtype=complex).reshape(-1)
        if vector.shape != (layout.dim,):
            raise LayoutError(f"vector length {vector.shape[0]} does not match layout {layout}")
        vector.setflags(write=False)
        object.__setattr__(self, "layout", layout)
        object.__setattr__(self, "vector", vector)

    def norm(self):
        return float(np.linalg.norm(self.vector))

    def norm_squared(self):
        return float(np.vdot(self.vector, self.vector).real)

    def inner(self, other):
        """``<self|other>``."""
        if other.layout != self.layout:
            raise LayoutError(f"layout mismatch: {self.layout} vs {other.layout}")
        return complex(np.vdot(self.vector, other.vector))

    def __add__(self, other):
        if isinstance(other, Ket):
            if other.layout != self.layout:
                raise LayoutError(f"layout mismatch: {self.layout} vs {other.layout}")
            return Ket(self.layout, self.vector + other.vector)
        return NotImplemented

    def __sub__(self, other):
        return self + (-1.0) * other

    def __mul__(self, scalar):
        if isinstance(scalar, Number):
            return Ket(self.layout, scalar * self.vector)
        return NotImplemented

    __rmul__ = __mul__

    def __repr__(self):
        return f"Ket({self.layout}, norm={self.norm():.6g})"


def identity(layout):
    layout = _as_layout(layout)
    return Operator(layout, np.eye(layout.dim, dtype=complex))


def zeros(layout):
    layout = _as_layout(layout)
    return Operator(layout, np.zeros((layout.dim, layout.dim), dtype=complex))


def tensor_product(a, b):
    """Kronecker product ``a ⊗ b`` on the concatenated layout."""
    layout = a.layout.concat(b.layout)
    return Operator(layout, np.kron(a.matrix, b.matrix))


def ket_product(u, v):
    layout = u.layout.concat(v.layout)
    return Ket(layout, np.kron(u.vector, v.vector))


def reorder(ket, target):
    """The same ket with its factors arranged in the order of ``target``."""
    target = _as_layout(target)
    if sorted(ket.layout.factors) != sorted(target.factors):
        raise LayoutError(f"layouts {ket.layout} and {target} hold different factors")
    order = [ket.layout.index(label) for label in target.labels]
    t = ket.vector.reshape(ket.layout.dims).transpose(order)
    return Ket(target, t.reshape(-1))


def _permute(matrix, dims, order):
    """Reorder tensor factors of a square matrix; ``order[i]`` is the source factor of target slot ``i``."""
    n = len(dims)
    t = matrix.reshape(dims + dims)
    axes = list(order) + [n + i for i in order]
    new_dims = tuple(dims[i] for i in order)
    return t.transpose(axes).reshape(prod(new_dims), prod(new_dims))


def embed(op, target):
    """Extend ``op`` by the identity on every factor of ``target`` it does not act on.

    The result acts on ``target`` with its factor order. Each label of ``op``
    must be present in ``target`` with the same dimension.
    """
    target = _as_layout(target)
    for label, dim in op.layout.factors:
        if label not in target:
            raise LayoutError(f"factor {label!r} missing from target layout {target}")
        if target.dim_of(label) != dim:
            raise LayoutError(f"factor {label!r} has dimension {dim}, target expects {target.dim_of(label)}")
    if op.layout == target:
        return op
    absent = [f for f in target.factors if f[0] not in op.layout]
    rest_dim = prod(d for _, d in absent)
    matrix = np.kron(op.matrix, np.eye(rest_dim, dtype=complex))
    source = op.layout.factors + tuple(absent)
    source_labels = [label for label, _ in source]
    order = [source_labels.index(label) for label in target.labels]
    dims = tuple(d for _, d in source)
    return Operator(target, _permute(matrix, dims, order))


def matrix_exponential(op, scale=1.0):
    """``exp(scale * op)`` by scaling and squaring with Padé approximants."""
    a = complex(scale) * op.matrix
    if not np.all(np.isfinite(a)):
        raise NumericError("matrix exponential of an operator with non-finite entries")
    return Operator(op.layout, scipy.linalg.expm(a))


def inverse(op, rtol=SINGULAR_RTOL):
    """Inverse of ``op``; raises :class:`SingularOperatorError` below ``rtol * sigma_max``."""
    if not np.all(np.isfinite(op.matrix)):
        raise NumericError("inverse of an operator with non-finite entries")
    s = scipy.linalg.svdvals(op.matrix)
    smax, smin = s[0], s[-1]
    if smax == 0.0 or smin <= rtol * smax:
        raise SingularOperatorError(
            f"operator is singular: smallest singular value {smin:.3e} "
            f"<= {rtol:.1e} x largest {smax:.3e}",
            singular_value=float(smin),
        )
    return Operator(op.layout, np.linalg.inv(op.matrix))


def commutator(a, b):
    return a @ b - b @ a


def hermiticity_defect(op):
    """Relative Frobenius norm ``||op - op†|| / ||op||``; zero for the zero operator."""
    scale = np.linalg.norm(op.matrix)
    if scale == 0.0:
        return 0.0
    return float(np.linalg.norm(op.matrix - op.matrix.conj().T) / scale)


def allclose(a, b, atol=EQUALITY_ATOL):
    """Entrywise equality of two operators on the same layout."""
    if a.layout != b.layout:
        return False
    return bool(np.max(np.abs(a.matrix - b.matrix), initial=0.0) <= atol)


def _split_axes(layout, labels):
    """Indices of ``labels`` in ``layout`` and of the remaining factors."""
    picked = [layout.index(label) for label in labels]
    rest = [i for i in range(len(layout)) if i not in picked]
    return picked, rest


def partial_inner(bra, ket):
    """``(<bra| ⊗ I) |ket>``: contract the factors of ``bra`` out of ``ket``.

    ``bra`` is given as a ket on a sub-layout of ``ket.layout``; its complex
    conjugate is used. The result lives on the remaining factors.
    """
    picked, rest = _split_axes(ket.layout, bra.layout.labels)
    dims = ket.layout.dims
    t = ket.vector.reshape(dims).transpose(picked + rest)
    t = t.reshape(bra.layout.dim, -1)
    sub = SpaceLayout(tuple(ket.layout.factors[i] for i in picked))
    if sub != bra.layout:
        raise LayoutError(f"bra layout {bra.layout} does not match factors {sub}")
    out = bra.vector.conj() @ t
    return Ket(SpaceLayout(tuple(ket.layout.factors[i] for i in rest)), out)


def partial_matrix_element(bra, op, ket):
    """``(<bra| ⊗ I) op (|ket> ⊗ I)``: an operator on the factors not covered by ``bra``/``ket``."""
    if bra.layout != ket.layout:
        raise LayoutError("bra and ket must share a layout")
    picked, rest = _split_axes(op.layout, bra.layout.labels)
    sub = SpaceLayout(tuple(op.layout.factors[i] for i in picked))
    if sub != bra.layout:
        raise LayoutError(f"bra layout {bra.layout} does not match factors {sub}")
    dims = op.layout.dims
    n = len(dims)
    order = picked + rest
    t = op.matrix.reshape(dims + dims).transpose(order + [n + i for i in order])
    d = bra.layout.dim
    r = op.layout.dim // d
    t = t.reshape(d, r, d, r)
    out = np.einsum("i,iajb,j->ab", bra.vector.conj(), t, ket.vector)
    return Operator(SpaceLayout(tuple(op.layout.factors[i] for i in rest)), out)
