"""Lindblad models and their realification in a generalized Gell-Mann basis.

A density operator on an N-dimensional space is written as
``rho = sum_k r_k sigma_k`` with ``r_k = tr(rho sigma_k)`` over an
orthonormal Hermitian basis. In these coordinates the master equation
``d rho/ds = -i[H, rho] + sum_d D[V_d] rho`` becomes the real linear ODE
``dr/ds = W r``.

Basis layout (0-based slot ``k = a + b*N``, i.e. the column-stacked position
of ``|a><b|``):

* ``a < b``: symmetric element ``(|a><b| + |b><a|)/sqrt(2)``
* ``a > b``: antisymmetric element ``(-i|b><a| + i|a><b|)/sqrt(2)``
* ``a == b < N-1``: traceless diagonal element number ``a + 1``
* ``a == b == N-1``: the identity completion ``I/sqrt(N)`` (the trace slot)
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import ImaginaryResidueError
from .hilbert import (
    HERMITIAN_TOL,
    MAX_DIM,
    DensityOp,
    DimensionCapError,
    as_matrix,
    check_qubits,
    hermitian_residual,
    tensor_product,
    validate_density,
)

COORD_IMAG_TOL = 1e-8
GENERATOR_IMAG_TOL = 1e-10
TRACE_ROW_TOL = 1e-10
# Eigenvalues of W with |lambda| below this (relative to ||W||) count as kernel.
KERNEL_TOL = 1e-10
RELAX_MARGIN = 1e-10


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class LindbladModel:
    hamiltonian: np.ndarray
    dissipators: tuple = ()

    def __post_init__(self):
        h = as_matrix(self.hamiltonian)
        if h.shape[0] != h.shape[1]:
            raise ValueError(f"Hamiltonian must be square, got {h.shape}")
        res = hermitian_residual(h)
        if res > HERMITIAN_TOL:
            raise ValueError(f"Hamiltonian is not Hermitian (residual {res:.3e})")
        vs = []
        for v in self.dissipators:
            v = as_matrix(v)
            if v.shape != h.shape:
                raise ValueError(f"dissipator shape {v.shape} does not match Hamiltonian {h.shape}")
            vs.append(_readonly(v))
        object.__setattr__(self, "hamiltonian", _readonly(h))
        object.__setattr__(self, "dissipators", tuple(vs))

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]

    def rhs(self, rho) -> np.ndarray:
        """Evaluate the master-equation right-hand side on a matrix."""
        rho = as_matrix(rho)
        h = self.hamiltonian
        out = -1j * (h @ rho - rho @ h)
        for v in self.dissipators:
            vd = v.conj().T
            vdv = vd @ v
            out = out + v @ rho @ vd - 0.5 * (vdv @ rho + rho @ vdv)
        return out


@dataclass(frozen=True)
class HermitianBasis:
    """Orthonormal Hermitian basis stored as an ``(N*N, N, N)`` array."""

    dim: int
    elements: np.ndarray

    @property
    def size(self) -> int:
        return self.elements.shape[0]

    @property
    def identity_index(self) -> int:
        return self.dim * self.dim - 1

    def __len__(self):
        return self.size

    def __getitem__(self, k):
        return self.elements[k]


def gell_mann_basis(N: int) -> HermitianBasis:
    """Generalized Gell-Mann basis of dimension ``N`` plus ``I/sqrt(N)``."""
    N = int(N)
    if N < 2:
        raise ValueError(f"basis dimension must be at least 2, got {N}")
    if N * N > MAX_DIM:
        raise DimensionCapError(f"basis of dimension {N} exceeds cap (N^2 = {N * N} > {MAX_DIM})")
    s = 1.0 / np.sqrt(2.0)
    el = np.zeros((N * N, N, N), dtype=complex)
    for b in range(N):
        for a in range(N):
            k = a + b * N
            if a < b:
                el[k, a, b] = s
                el[k, b, a] = s
            elif a > b:
                # p = b, q = a in the 0-based pair p < q
                el[k, b, a] = -1j * s
                el[k, a, b] = 1j * s
            elif a < N - 1:
                p = a + 1
                c = 1.0 / np.sqrt(p + p * p)
                el[k, np.arange(p), np.arange(p)] = c
                el[k, p, p] = -p * c
            else:
                el[k] = np.eye(N) / np.sqrt(N)
    return HermitianBasis(N, _readonly(el))


def _flat(stack: np.ndarray) -> np.ndarray:
    return stack.reshape(stack.shape[0], -1)


def _pair_traces(left: np.ndarray, right: np.ndarray) -> np.ndarray:
    """``T[m, n] = tr(left[m] @ right[n])`` for stacks of square matrices."""
    return _flat(left) @ _flat(np.swapaxes(right, 1, 2)).T


def to_coordinates(rho, basis: HermitianBasis) -> np.ndarray:
    """Real coordinates ``r_k = tr(rho sigma_k)``."""
    a = as_matrix(rho)
    if a.shape != (basis.dim, basis.dim):
        raise ValueError(f"matrix shape {a.shape} does not match basis dimension {basis.dim}")
    r = np.einsum("ab,kba->k", a, basis.elements)
    imag = float(np.max(np.abs(r.imag)))
    if imag > COORD_IMAG_TOL:
        raise ImaginaryResidueError(
            f"coordinate with imaginary part {imag:.3e}; input is not Hermitian or basis is corrupt"
        )
    return r.real.copy()


def from_coordinates(r, basis: HermitianBasis) -> np.ndarray:
    r = np.asarray(r, dtype=float).reshape(-1)
    if r.shape[0] != basis.size:
        raise ValueError(f"coordinate vector has length {r.shape[0]}, expected {basis.size}")
    return np.tensordot(r, basis.elements, axes=1)


@dataclass(frozen=True)
class RealGenerator:
    """Realified master-equation generator ``W = L + sum_d D^(d)``."""

    matrix: np.ndarray
    hamiltonian_part: np.ndarray
    dissipator_parts: tuple = field(default_factory=tuple)

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    @property
    def dim(self) -> int:
        return int(round(np.sqrt(self.size)))


def build_generator(model: LindbladModel, basis: HermitianBasis) -> RealGenerator:
    """Assemble ``W`` entrywise from the Hamiltonian and dissipator trace formulas.

    ``L[m, n] = tr(i H [s_m, s_n])`` and
    ``D[m, n] = tr(V^+ s_m V s_n) - 1/2 tr(V^+ V {s_m, s_n})``.
    """
    if model.dim != basis.dim:
        raise ValueError(f"model dimension {model.dim} does not match basis dimension {basis.dim}")
    sig = basis.elements
    h = model.hamiltonian

    # tr(H s_m s_n) - tr(H s_n s_m)
    t = _pair_traces(h @ sig, sig)
    lc = 1j * (t - t.T)
    parts = []
    for v in model.dissipators:
        vd = v.conj().T
        jump = _pair_traces(vd @ sig @ v, sig)
        b = _pair_traces((vd @ v) @ sig, sig)
        parts.append(jump - 0.5 * (b + b.T))

    scale = max(1.0, float(np.max(np.abs(lc))) if lc.size else 0.0, *(float(np.max(np.abs(p))) for p in parts))
    for name, m in [("Hamiltonian", lc)] + [(f"dissipator {d}", p) for d, p in enumerate(parts)]:
        imag = float(np.max(np.abs(m.imag)))
        if imag > GENERATOR_IMAG_TOL * scale:
            raise ImaginaryResidueError(f"{name} block has imaginary residue {imag:.3e}")

    lr = lc.real
    dr = tuple(_readonly(p.real) for p in parts)
    w = lr + sum(dr, np.zeros_like(lr))
    trace_row = float(np.max(np.abs(w[basis.identity_index])))
    if trace_row > TRACE_ROW_TOL * scale:
        raise ArithmeticError(f"trace row of W is not zero (max {trace_row:.3e}); generator is not trace preserving")
    return RealGenerator(_readonly(w), _readonly(lr), dr)


def _as_real_square(a) -> np.ndarray:
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return a


def matrix_exp(a) -> np.ndarray:
    """Matrix exponential by scaling and squaring with a Pade approximant.

    Backed by :func:`scipy.linalg.expm` (Al-Mohy & Higham, degree up to 13).
    """
    return scipy.linalg.expm(_as_real_square(a))


def symmetric_matrix_exp(a, t: float = 1.0) -> np.ndarray:
    """``exp(t*A)`` for real symmetric ``A`` through its eigendecomposition."""
    a = _as_real_square(a)
    lam, vec = np.linalg.eigh((a + a.T) / 2)
    return (vec * np.exp(t * lam)) @ vec.T


def _generator_matrix(w) -> np.ndarray:
    return w.matrix if isinstance(w, RealGenerator) else np.asarray(w, dtype=float)


def propagator(w, tau: float) -> np.ndarray:
    """``exp(W tau)`` for ``tau >= 0``."""
    if tau < 0:
        raise ValueError(f"propagation time must be non-negative, got {tau}")
    wm = _generator_matrix(w)
    if tau == 0:
        return np.eye(wm.shape[0])
    return matrix_exp(wm * tau)


def propagate(w, r, tau: float) -> np.ndarray:
    """Evolve coordinates: ``exp(W tau) @ r``."""
    r = np.asarray(r, dtype=float)
    return propagator(w, tau) @ r


@dataclass(frozen=True)
class SteadyStateReport:
    kernel_dimension: int
    steady_coordinate: np.ndarray | None
    is_relaxing: bool
    spectral_abscissa_nonzero_modes: float

    def steady_density(self, basis: HermitianBasis) -> DensityOp | None:
        if self.steady_coordinate is None:
            return None
        return validate_density(from_coordinates(self.steady_coordinate, basis), evolved=True)


def steady_state(w) -> SteadyStateReport:
    """Eigen-analysis of ``W``: kernel, unique steady state and relaxation.

    The steady coordinate is the kernel vector rescaled so that its trace
    slot equals ``1/sqrt(N)``; it is only reported when the kernel is
    one-dimensional. ``spectral_abscissa_nonzero_modes`` is the largest real
    part over the non-kernel eigenvalues (``-inf`` when there are none).
    """
    wm = _generator_matrix(w)
    size = wm.shape[0]
    N = int(round(np.sqrt(size)))
    scale = max(1.0, float(np.linalg.norm(wm, 2)))
    try:
        sv = np.linalg.svd(wm, compute_uv=False)
        lam = np.linalg.eigvals(wm)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise ArithmeticError(f"eigen-solver failed: {exc}") from exc

    kdim = int(np.sum(sv <= KERNEL_TOL * scale))
    order = np.argsort(np.abs(lam))
    nonzero = lam[order[kdim:]]
    abscissa = float(np.max(nonzero.real)) if nonzero.size else float("-inf")
    relaxing = kdim == 1 and abscissa < -RELAX_MARGIN

    coord = None
    if kdim == 1:
        _, _, vh = np.linalg.svd(wm)
        k = vh[-1]
        ident = k[size - 1]
        if abs(ident) > KERNEL_TOL:
            coord = _readonly(k * (1.0 / np.sqrt(N)) / ident)
    return SteadyStateReport(kdim, coord, relaxing, abscissa)


def amplitude_damping(n: int, gamma: float) -> LindbladModel:
    """Independent decay ``|1> -> |0>`` at rate ``gamma`` on each of ``n`` qubits."""
    return LindbladModel(np.zeros((2**n, 2**n)), tuple(np.sqrt(gamma) * op for op in _local_ops(n, _LOWER)))


def depolarizing(n: int, gamma: float) -> LindbladModel:
    """Per-qubit depolarizing: each Bloch vector shrinks toward 0 at rate ``gamma``."""
    c = np.sqrt(gamma / 4.0)
    ops = []
    for pauli in (_X, _Y, _Z):
        ops.extend(c * op for op in _local_ops(n, pauli))
    return LindbladModel(np.zeros((2**n, 2**n)), tuple(ops))


_LOWER = np.array([[0, 1], [0, 0]], dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def _local_ops(n: int, op: np.ndarray):
    check_qubits(n)
    eye = np.eye(2, dtype=complex)
    for q in range(n):
        yield tensor_product(*[op if k == q else eye for k in range(n)])
