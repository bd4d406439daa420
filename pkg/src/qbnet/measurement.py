"""Single-qubit measurement bases, network projectors and the Theta matrix.

Boolean outcome vectors use qubit 1 as the most significant bit. Two index
conventions coexist: ``btoi``/``itob`` are 1-based (matching the usual
``sum_k i_k 2^(n-k) + 1`` formula) while ``state_index``/``index_bits`` are
their 0-based twins used for array indexing. Interfaces that leave the
library use bit strings only.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from .hilbert import PureState, check_qubits, projector, tensor_product
from .lindblad import HermitianBasis, gell_mann_basis, to_coordinates

ORTHOGONALITY_TOL = 1e-12
THETA_TOL = 1e-10


@dataclass(frozen=True)
class QubitMeasurement:
    """Orthonormal pair ``(v0, v1)``; labels are carried as metadata only."""

    v0: PureState
    v1: PureState
    labels: tuple = (0.0, 1.0)

    def __post_init__(self):
        if self.v0.dim != 2 or self.v1.dim != 2:
            raise ValueError("qubit measurement vectors must be 2-dimensional")
        overlap = abs(np.vdot(self.v0.amplitudes, self.v1.amplitudes))
        if overlap > ORTHOGONALITY_TOL:
            raise ValueError(f"measurement vectors are not orthogonal (|<v0|v1>| = {overlap:.3e})")

    @property
    def projectors(self) -> tuple:
        return projector(self.v0), projector(self.v1)

    def observable(self) -> np.ndarray:
        p0, p1 = self.projectors
        return self.labels[0] * p0 + self.labels[1] * p1


def qubit_basis_from_angles(theta: float, phi: float) -> QubitMeasurement:
    """Measurement basis whose ``v0`` sits at Bloch angles ``(theta, phi)``.

    ``v0 = cos(theta/2)|0> + e^{i phi} sin(theta/2)|1>`` and
    ``v1 = -e^{-i phi} sin(theta/2)|0> + cos(theta/2)|1>``.
    """
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    v0 = PureState(np.array([c, np.exp(1j * phi) * s]))
    v1 = PureState(np.array([-np.exp(-1j * phi) * s, c]))
    return QubitMeasurement(v0, v1)


COMPUTATIONAL = qubit_basis_from_angles(0.0, 0.0)


def _check_bits(bits) -> tuple:
    bits = tuple(int(b) for b in bits)
    if not bits:
        raise ValueError("a Boolean state needs at least one bit")
    if any(b not in (0, 1) for b in bits):
        raise ValueError(f"bits must be 0 or 1, got {bits}")
    return bits


def state_index(bits) -> int:
    """0-based index of a bit vector, most significant bit first."""
    out = 0
    for b in _check_bits(bits):
        out = 2 * out + b
    return out


def index_bits(index: int, n: int) -> tuple:
    """Inverse of :func:`state_index`."""
    if not 0 <= index < 2**n:
        raise ValueError(f"index {index} out of range for n={n}")
    return tuple((index >> (n - 1 - k)) & 1 for k in range(n))


def btoi(bits) -> int:
    """1-based index ``sum_k i_k 2^(n-k) + 1``."""
    return state_index(bits) + 1


def itob(i: int, n: int) -> tuple:
    """Inverse of :func:`btoi`; ``i`` ranges over ``1..2^n``."""
    if not 1 <= i <= 2**n:
        raise ValueError(f"index {i} out of range 1..{2**n}")
    return index_bits(i - 1, n)


def bitstring(bits) -> str:
    return "".join(str(b) for b in _check_bits(bits))


def parse_bits(text: str) -> tuple:
    text = text.strip()
    if not text or set(text) - {"0", "1"}:
        raise ValueError(f"not a bit string: {text!r}")
    return tuple(int(c) for c in text)


def state_labels(n: int) -> list:
    """Bit-string labels of all ``2^n`` outcomes in index order."""
    return ["".join(map(str, b)) for b in product((0, 1), repeat=n)]


def network_projectors(m: QubitMeasurement, n: int) -> list:
    """Product projectors ``P_{i1} x ... x P_{in}`` ordered by outcome index."""
    check_qubits(n)
    single = m.projectors
    return [tensor_product(*(single[b] for b in bits)) for bits in product((0, 1), repeat=n)]


@dataclass(frozen=True)
class ThetaMatrix:
    """``(N^2, N)`` matrix whose column ``i`` holds the coordinates of projector ``i``."""

    matrix: np.ndarray
    identity_index: int

    def __post_init__(self):
        t = np.array(self.matrix, dtype=float, copy=True)
        size, N = t.shape
        if size != N * N:
            raise ValueError(f"Theta must be N^2 x N, got {t.shape}")
        gram = np.max(np.abs(t.T @ t - np.eye(N)))
        if gram > THETA_TOL:
            raise ValueError(f"Theta columns are not orthonormal (residual {gram:.3e})")
        trace_row = np.max(np.abs(t[self.identity_index] - 1 / np.sqrt(N)))
        if trace_row > THETA_TOL:
            raise ValueError(f"Theta trace row deviates from 1/sqrt(N) by {trace_row:.3e}")
        t.setflags(write=False)
        object.__setattr__(self, "matrix", t)

    @property
    def n_states(self) -> int:
        return self.matrix.shape[1]

    def column(self, i: int) -> np.ndarray:
        return self.matrix[:, i]


def theta_matrix(projectors, basis: HermitianBasis) -> ThetaMatrix:
    cols = [to_coordinates(p, basis) for p in projectors]
    return ThetaMatrix(np.column_stack(cols), basis.identity_index)


def measurement_setup(n: int, m: QubitMeasurement = COMPUTATIONAL):
    """Convenience: ``(basis, projectors, Theta)`` for an n-qubit network."""
    check_qubits(n)
    basis = gell_mann_basis(2**n)
    projs = network_projectors(m, n)
    return basis, projs, theta_matrix(projs, basis)
