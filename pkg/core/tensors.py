"""
Dense third-order tensors and the multilinear algebra primitives the solvers use.

Tensors are float64 ``numpy.ndarray`` objects of shape (I1, I2, I3) stored
Fortran-ordered (first index fastest), so the mode-1 unfolding is a reshape.
Modes are numbered 1, 2, 3 in every public function.

Unfolding convention (1-based): element (i1, i2, i3) of the mode-n unfolding
sits in row i_n and column 1 + sum_{m != n} (i_m - 1) * J_m with
J_m = prod_{l < m, l != n} I_l. With it X_(1) = A1 G_(1) (A3 kron A2)^T holds.
"""

from dataclasses import dataclass
from typing import Iterator, Tuple

import numpy as np
import tensorly as tl
from tensorly import tenalg

from core.errors import TensorArgumentError

MODES = (1, 2, 3)


def _check_mode(mode):
    if mode not in MODES:
        raise TensorArgumentError(f"mode must be one of {MODES}, got {mode!r}")
    return mode - 1


def as_tensor3(data, name="tensor", allow_nonfinite=False):
    """
    Validate and convert ``data`` to a Fortran-ordered float64 third-order tensor.

    Args:
        data: array-like with three dimensions, all extents >= 1
        name (str): Name used in error messages
        allow_nonfinite (bool): Skip the finiteness check

    Returns:
        numpy.ndarray: The tensor (a copy only when conversion is needed)
    """
    arr = np.asfortranarray(data, dtype=np.float64)
    if arr.ndim != 3:
        raise TensorArgumentError(f"{name} must be third-order, got shape {arr.shape}")
    if min(arr.shape) < 1:
        raise TensorArgumentError(f"{name} extents must be >= 1, got {arr.shape}")
    if not allow_nonfinite and not np.all(np.isfinite(arr)):
        raise TensorArgumentError(f"{name} contains non-finite values")
    return arr


def as_matrix(data, name="matrix"):
    """Validate and convert ``data`` to a finite float64 matrix."""
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim != 2:
        raise TensorArgumentError(f"{name} must be a matrix, got shape {arr.shape}")
    if min(arr.shape) < 1:
        raise TensorArgumentError(f"{name} must be nonempty, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise TensorArgumentError(f"{name} contains non-finite values")
    return arr


def check_dims(dims, name="dims"):
    """Return ``dims`` as a tuple of three positive ints."""
    try:
        dims = tuple(int(d) for d in dims)
    except (TypeError, ValueError):
        raise TensorArgumentError(f"{name} must be three positive integers, got {dims!r}")
    if len(dims) != 3 or min(dims) < 1:
        raise TensorArgumentError(f"{name} must be three positive integers, got {dims!r}")
    return dims


def unfold(t, mode):
    """
    Mode-n unfolding X_(n) of shape I_n x prod_{m != n} I_m.

    Args:
        t: Third-order tensor
        mode (int): 1, 2 or 3

    Returns:
        numpy.ndarray: The unfolded matrix (a view for mode 1 on Fortran data)
    """
    axis = _check_mode(mode)
    t = np.asarray(t, dtype=np.float64)
    if t.ndim != 3:
        raise TensorArgumentError(f"unfold expects a third-order tensor, got shape {t.shape}")
    return np.reshape(np.moveaxis(t, axis, 0), (t.shape[axis], -1), order='F')


def fold(m, mode, dims):
    """
    Inverse of :func:`unfold` under the same index map.

    Args:
        m: Matrix of shape I_n x prod_{m != n} I_m
        mode (int): 1, 2 or 3
        dims: Target extents (I1, I2, I3)

    Returns:
        numpy.ndarray: Fortran-ordered tensor of shape ``dims``
    """
    axis = _check_mode(mode)
    dims = check_dims(dims)
    m = np.asarray(m, dtype=np.float64)
    others = [d for i, d in enumerate(dims) if i != axis]
    expected = (dims[axis], others[0] * others[1])
    if m.shape != expected:
        raise TensorArgumentError(
            f"fold along mode {mode} into {dims} needs shape {expected}, got {m.shape}"
        )
    full = np.reshape(m, (dims[axis], *others), order='F')
    return np.asfortranarray(np.moveaxis(full, 0, axis))


def khatri_rao(a, b):
    """
    Column-wise Kronecker product: column l is kron(a[:, l], b[:, l]).

    Rows are ordered with the row index of ``b`` varying fastest.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2:
        raise TensorArgumentError("khatri_rao expects two matrices")
    if a.shape[1] != b.shape[1]:
        raise TensorArgumentError(
            f"khatri_rao needs equal column counts, got {a.shape[1]} and {b.shape[1]}"
        )
    return np.asfortranarray(tenalg.khatri_rao([a, b]))


def kronecker(a, b):
    """Kronecker product of two matrices."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2:
        raise TensorArgumentError("kronecker expects two matrices")
    return np.kron(a, b)


@dataclass(frozen=True)
class FactorSet:
    """
    The three CPD factor matrices B1 (I1 x L), B2 (I2 x L), B3 (I3 x L).

    The arrays are read-only; use :meth:`replace` to build an updated set.
    """

    b1: np.ndarray
    b2: np.ndarray
    b3: np.ndarray

    def __post_init__(self):
        mats = []
        for k, b in enumerate((self.b1, self.b2, self.b3), start=1):
            b = np.array(as_matrix(b, name=f"B{k}"), dtype=np.float64, order='F')
            b.setflags(write=False)
            mats.append(b)
        widths = {b.shape[1] for b in mats}
        if len(widths) != 1:
            raise TensorArgumentError(
                f"factor matrices must share the column count L, got {[b.shape[1] for b in mats]}"
            )
        for name, b in zip(("b1", "b2", "b3"), mats):
            object.__setattr__(self, name, b)

    @property
    def L(self) -> int:
        return self.b1.shape[1]

    @property
    def dims(self) -> Tuple[int, int, int]:
        return (self.b1.shape[0], self.b2.shape[0], self.b3.shape[0])

    def factor(self, k) -> np.ndarray:
        """Return B_k for k in 1, 2, 3."""
        return (self.b1, self.b2, self.b3)[_check_mode(k)]

    def replace(self, k, matrix) -> "FactorSet":
        """Return a new set with B_k replaced by ``matrix``."""
        mats = [self.b1, self.b2, self.b3]
        mats[_check_mode(k)] = matrix
        return FactorSet(*mats)

    def __iter__(self) -> Iterator[np.ndarray]:
        return iter((self.b1, self.b2, self.b3))


def kr_complement(factors, skip):
    """
    Khatri-Rao product of the factors other than ``skip``, highest mode first.

    For skip=k this is B3 (.) ... B(k+1) (.) B(k-1) (.) ... (.) B1, so that
    unfold(cpd_reconstruct(F), k) == B_k @ kr_complement(F, k).T.
    """
    _check_mode(skip)
    rest = [factors.factor(h) for h in (3, 2, 1) if h != skip]
    return khatri_rao(rest[0], rest[1])


def cpd_reconstruct(factors):
    """Sum over l of the outer products B1[:, l] o B2[:, l] o B3[:, l]."""
    weights = np.ones(factors.L)
    return np.asfortranarray(tl.cp_to_tensor((weights, list(factors))))


def mode_product(t, m, mode):
    """
    Mode-n product t x_n m, replacing extent I_n by m.shape[0].

    Args:
        t: Third-order tensor
        m: Matrix with m.shape[1] == t.shape[mode - 1]
        mode (int): 1, 2 or 3
    """
    axis = _check_mode(mode)
    t = np.asarray(t, dtype=np.float64)
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[1] != t.shape[axis]:
        raise TensorArgumentError(
            f"mode-{mode} product needs a matrix with {t.shape[axis]} columns, got {m.shape}"
        )
    return np.asfortranarray(tenalg.mode_dot(t, m, axis))


def tucker_reconstruct(core, a1, a2, a3):
    """Tucker model G x_1 A1 x_2 A2 x_3 A3."""
    core = as_tensor3(core, name="core")
    mats = []
    for mode, a in enumerate((a1, a2, a3), start=1):
        a = as_matrix(a, name=f"A{mode}")
        if a.shape[1] != core.shape[mode - 1]:
            raise TensorArgumentError(
                f"A{mode} has {a.shape[1]} columns but the core extent is {core.shape[mode - 1]}"
            )
        mats.append(a)
    return np.asfortranarray(tl.tucker_to_tensor((core, mats)))


@dataclass(frozen=True)
class ObservationMask:
    """
    Binary indicator tensor of observed entries.

    Build with :meth:`from_indicator` (rejects empty masks) or :meth:`full`.
    """

    indicator: np.ndarray

    def __post_init__(self):
        ind = np.array(as_tensor3(self.indicator, name="mask"), order='F')
        if not np.all((ind == 0.0) | (ind == 1.0)):
            raise TensorArgumentError("mask entries must be exactly 0 or 1")
        ind.setflags(write=False)
        object.__setattr__(self, "indicator", ind)

    @classmethod
    def from_indicator(cls, indicator, allow_empty=False):
        mask = cls(np.asarray(indicator, dtype=np.float64))
        if not allow_empty and mask.observed_count == 0:
            raise TensorArgumentError("mask has no observed entries")
        return mask

    @classmethod
    def full(cls, dims):
        return cls(np.ones(check_dims(dims), order='F'))

    @property
    def dims(self) -> Tuple[int, int, int]:
        return self.indicator.shape

    @property
    def observed_count(self) -> int:
        return int(self.indicator.sum())

    @property
    def sampling_ratio(self) -> float:
        return self.observed_count / self.indicator.size

    @property
    def observed(self) -> np.ndarray:
        """Boolean view of the indicator."""
        return self.indicator.astype(bool)

    def complement(self) -> np.ndarray:
        """Indicator of the unobserved entries (may be all zeros)."""
        return 1.0 - self.indicator


def masked_residual(y, x, o):
    """Half the squared Frobenius norm of (y - x) restricted to observed entries."""
    y = np.asarray(y, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if y.shape != x.shape or y.shape != o.dims:
        raise TensorArgumentError(
            f"masked_residual needs matching dims, got {y.shape}, {x.shape} and mask {o.dims}"
        )
    diff = (y - x) * o.indicator
    return 0.5 * float(np.vdot(diff, diff))
