"""Dense complex linear algebra for n-qubit networks.

Matrices are plain ``numpy`` arrays of dtype ``complex128``. Validated
objects (:class:`DensityOp`, :class:`PureState`) hold read-only copies so
they can be shared freely between threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np

from .errors import DimensionCapError, NotHermitian, NotNormalized, NotPSD, TraceNotOne

# Validation tolerances. Downstream probability guarantees depend on these, so
# they are fixed here rather than exposed as keyword arguments.
HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
PSD_TOL = 1e-9
# Exponentials of dense generators accumulate rounding; evolved states get this much slack.
EVOLVED_PSD_TOL = 1e-7
UNIT_NORM_TOL = 1e-12
PROJECTOR_NORM_TOL = 1e-9

MAX_QUBITS = 6
# Largest matrix side we will build: the realified generator is 4^n x 4^n.
MAX_DIM = 4**MAX_QUBITS


def check_qubits(n: int) -> int:
    """Return ``n`` if it is an admissible qubit count, else raise."""
    if int(n) != n or n < 1:
        raise ValueError(f"qubit count must be a positive integer, got {n!r}")
    if n > MAX_QUBITS:
        raise DimensionCapError(
            f"n={n} qubits exceeds the dense cap of {MAX_QUBITS} "
            f"(generator would be {4**n}x{4**n})"
        )
    return int(n)


def _frozen(a) -> np.ndarray:
    out = np.array(a, dtype=complex, copy=True)
    out.setflags(write=False)
    return out


def as_matrix(m) -> np.ndarray:
    """Coerce ``m`` to a 2-D complex array (DensityOp is unwrapped)."""
    if isinstance(m, DensityOp):
        return m.matrix
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise ValueError(f"expected a non-empty 2-D matrix, got shape {a.shape}")
    return a


def tensor_product(*factors) -> np.ndarray:
    """Kronecker product of one or more matrices, left to right.

    Raises :class:`DimensionCapError` if the result would exceed ``MAX_DIM``
    on either side.
    """
    if not factors:
        raise ValueError("tensor_product needs at least one factor")
    mats = [as_matrix(f) for f in factors]
    rows = int(np.prod([m.shape[0] for m in mats]))
    cols = int(np.prod([m.shape[1] for m in mats]))
    if rows > MAX_DIM or cols > MAX_DIM:
        raise DimensionCapError(f"tensor product of shape {rows}x{cols} exceeds cap {MAX_DIM}")
    return reduce(np.kron, mats)


@dataclass(frozen=True)
class PureState:
    """A unit-norm state vector."""

    amplitudes: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        norm = np.linalg.norm(v)
        if abs(norm - 1.0) > UNIT_NORM_TOL:
            raise NotNormalized(f"state norm {norm!r} differs from 1 by more than {UNIT_NORM_TOL}")
        object.__setattr__(self, "amplitudes", _frozen(v))

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    @classmethod
    def normalized(cls, amplitudes) -> "PureState":
        v = np.asarray(amplitudes, dtype=complex).reshape(-1)
        return cls(v / np.linalg.norm(v))


def projector(state) -> np.ndarray:
    """Rank-one projector ``|v><v|``.

    ``state`` may be a :class:`PureState` or any vector whose norm is within
    ``PROJECTOR_NORM_TOL`` of one.
    """
    v = state.amplitudes if isinstance(state, PureState) else np.asarray(state, dtype=complex).reshape(-1)
    norm = np.linalg.norm(v)
    if abs(norm - 1.0) > PROJECTOR_NORM_TOL:
        raise NotNormalized(f"cannot build a projector from a vector of norm {norm!r}")
    return np.outer(v, v.conj())


def hermitian_residual(m) -> float:
    a = as_matrix(m)
    return float(np.max(np.abs(a - a.conj().T)))


def is_hermitian(m, tol: float = HERMITIAN_TOL) -> bool:
    a = as_matrix(m)
    return a.shape[0] == a.shape[1] and hermitian_residual(a) <= tol


@dataclass(frozen=True)
class DensityOp:
    """A validated density operator. Construct through :func:`validate_density`."""

    matrix: np.ndarray

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def diagonal(self) -> np.ndarray:
        return self.matrix.diagonal().real.copy()


def validate_density(m, *, evolved: bool = False) -> DensityOp:
    """Check Hermiticity, unit trace and positivity; return a :class:`DensityOp`.

    Nothing is normalized. With ``evolved=True`` the PSD tolerance is relaxed
    to ``EVOLVED_PSD_TOL`` to absorb rounding from dense exponentials.
    """
    a = as_matrix(m)
    if a.shape[0] != a.shape[1]:
        raise ValueError(f"density operator must be square, got {a.shape}")
    herm = hermitian_residual(a)
    if herm > HERMITIAN_TOL:
        raise NotHermitian(f"max |rho - rho^dagger| = {herm:.3e} exceeds {HERMITIAN_TOL}", herm)
    tr = complex(np.trace(a))
    if abs(tr - 1.0) > TRACE_TOL:
        raise TraceNotOne(f"trace = {tr.real:.12g} differs from 1", tr.real)
    lam_min = float(np.linalg.eigvalsh((a + a.conj().T) / 2)[0])
    psd_tol = EVOLVED_PSD_TOL if evolved else PSD_TOL
    if lam_min < -psd_tol:
        raise NotPSD(f"minimum eigenvalue {lam_min:.3e} is below -{psd_tol}", lam_min)
    return DensityOp(_frozen(a))


def maximally_mixed(dim: int) -> DensityOp:
    return DensityOp(_frozen(np.eye(dim) / dim))


def basis_ket(index: int, dim: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return v
