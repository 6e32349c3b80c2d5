"""Dense statevector and density-matrix simulation for a handful of qubits.

Qubit ordering is little-endian: qubit 0 is the least-significant bit of the
basis-state index. For multi-qubit gates the first target is the most
significant bit of the gate's own 2^k basis, so a controlled gate applied
with ``targets=(control, target)`` has the block form
``|0><0| (x) I + |1><1| (x) U``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import LengthMismatchError, OutOfRangeError, QFuzzyError, UnknownLabelError

UNITARY_TOL = 1e-12
NORM_TOL = 1e-10

_SQRT2_INV = 1.0 / math.sqrt(2.0)
_T_PHASE = np.exp(1j * math.pi / 4)

_STANDARD_1Q = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
    "H": np.array([[1, 1], [1, -1]], dtype=complex) * _SQRT2_INV,
    "S": np.array([[1, 0], [0, 1j]], dtype=complex),
    "Sdg": np.array([[1, 0], [0, -1j]], dtype=complex),
    "T": np.array([[1, 0], [0, _T_PHASE]], dtype=complex),
    "Tdg": np.array([[1, 0], [0, np.conj(_T_PHASE)]], dtype=complex),
}
_STANDARD_2Q = {
    "CZ": np.diag([1, 1, 1, -1]).astype(complex),
    "CX": np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex),
}
STANDARD_GATES = tuple(_STANDARD_1Q) + tuple(_STANDARD_2Q)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Gate:
    arity: int
    matrix: np.ndarray = field(repr=False)
    label: str = ""

    def __post_init__(self):
        m = _frozen(self.matrix)
        dim = 2**self.arity
        if self.arity not in (1, 2) or m.shape != (dim, dim):
            raise QFuzzyError(f"gate {self.label!r}: bad shape {m.shape} for arity {self.arity}")
        if not is_unitary(m):
            raise QFuzzyError(f"gate {self.label!r} is not unitary")
        object.__setattr__(self, "matrix", m)


@dataclass(frozen=True)
class StateVector:
    n_qubits: int
    amps: np.ndarray = field(repr=False)

    def __post_init__(self):
        a = _frozen(self.amps).reshape(-1)
        if self.n_qubits < 1 or a.shape != (2**self.n_qubits,):
            raise LengthMismatchError(f"expected {2**self.n_qubits} amplitudes, got {a.shape}")
        object.__setattr__(self, "amps", a)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))


@dataclass(frozen=True)
class DensityMatrix:
    n_qubits: int
    entries: np.ndarray = field(repr=False)

    def __post_init__(self):
        e = _frozen(self.entries)
        d = 2**self.n_qubits
        if self.n_qubits < 1 or e.shape != (d, d):
            raise LengthMismatchError(f"expected {d}x{d} density matrix, got {e.shape}")
        object.__setattr__(self, "entries", e)

    @property
    def trace(self) -> float:
        return float(np.real(np.trace(self.entries)))

    def purity(self) -> float:
        return float(np.real(np.trace(self.entries @ self.entries)))


def is_unitary(m: np.ndarray, tol: float = UNITARY_TOL) -> bool:
    m = np.asarray(m)
    return bool(np.allclose(m.conj().T @ m, np.eye(m.shape[0]), atol=tol, rtol=0))


def make_standard_gate(label: str) -> Gate:
    if label in _STANDARD_1Q:
        return Gate(1, _STANDARD_1Q[label], label)
    if label in _STANDARD_2Q:
        return Gate(2, _STANDARD_2Q[label], label)
    raise UnknownLabelError(f"unknown gate label {label!r}")


def _check_angle(theta: float) -> float:
    theta = float(theta)
    if not math.isfinite(theta):
        raise QFuzzyError(f"non-finite angle {theta}", code="non-finite-angle")
    return theta


def rotation_matrix(axis: str, theta) -> np.ndarray:
    """Rotation matrices for a scalar or an array of angles (shape (..., 2, 2))."""
    t = np.asarray(theta, dtype=float)
    c = np.cos(t / 2)
    s = np.sin(t / 2)
    out = np.empty(t.shape + (2, 2), dtype=complex)
    if axis == "x":
        out[..., 0, 0] = c
        out[..., 0, 1] = -1j * s
        out[..., 1, 0] = -1j * s
        out[..., 1, 1] = c
    elif axis == "y":
        out[..., 0, 0] = c
        out[..., 0, 1] = -s
        out[..., 1, 0] = s
        out[..., 1, 1] = c
    elif axis == "z":
        out[..., 0, 0] = np.exp(-0.5j * t)
        out[..., 0, 1] = 0
        out[..., 1, 0] = 0
        out[..., 1, 1] = np.exp(0.5j * t)
    else:
        raise UnknownLabelError(f"unknown rotation axis {axis!r}")
    return out


def make_rotation(axis: str, theta: float) -> Gate:
    theta = _check_angle(theta)
    return Gate(1, rotation_matrix(axis, theta), f"R{axis.upper()}({theta:g})")


def make_controlled_rotation(axis: str, theta: float) -> Gate:
    theta = _check_angle(theta)
    m = np.eye(4, dtype=complex)
    m[2:, 2:] = rotation_matrix(axis, theta)
    return Gate(2, m, f"CR{axis.upper()}({theta:g})")


# -- batched kernel ---------------------------------------------------------


def apply_matrix(states: np.ndarray, matrix: np.ndarray, targets: Sequence[int], n_qubits: int) -> np.ndarray:
    """Apply a k-qubit matrix to a batch of statevectors.

    ``states`` has shape (B, 2^n). ``matrix`` is either one (2^k, 2^k) matrix
    shared by the batch or a stack of shape (B, 2^k, 2^k).
    """
    k = len(targets)
    batch = states.shape[0]
    tensor = states.reshape((batch,) + (2,) * n_qubits)
    axes = [1 + (n_qubits - 1 - q) for q in targets]
    dest = list(range(n_qubits + 1 - k, n_qubits + 1))
    moved = np.moveaxis(tensor, axes, dest)
    shape = moved.shape
    flat = moved.reshape(batch, -1, 2**k)
    if matrix.ndim == 2:
        flat = flat @ matrix.T
    else:
        flat = np.einsum("bij,bkj->bki", matrix, flat)
    return np.moveaxis(flat.reshape(shape), dest, axes).reshape(batch, -1)


def apply_matrix_density(rhos: np.ndarray, matrix: np.ndarray, targets: Sequence[int], n_qubits: int) -> np.ndarray:
    """rho -> M rho M^dagger for a batch of density matrices of shape (B, d, d)."""
    batch, d, _ = rhos.shape
    if matrix.ndim == 3:
        matrix = np.repeat(matrix, d, axis=0)
    # columns of rho are statevectors: left-multiply
    left = apply_matrix(rhos.transpose(0, 2, 1).reshape(batch * d, d), matrix, targets, n_qubits)
    left = left.reshape(batch, d, d).transpose(0, 2, 1)
    # (M A M^+) = (M (M A)^+)^+
    right = apply_matrix(left.conj().reshape(batch * d, d), matrix, targets, n_qubits)
    return right.reshape(batch, d, d).conj()


def z_signs(n_qubits: int, qubit: int) -> np.ndarray:
    idx = np.arange(2**n_qubits)
    return 1.0 - 2.0 * ((idx >> qubit) & 1)


# -- single-state API -------------------------------------------------------


def zero_state(n_qubits: int) -> StateVector:
    return basis_state(n_qubits, 0)


def basis_state(n_qubits: int, index: int) -> StateVector:
    if not 0 <= index < 2**n_qubits:
        raise OutOfRangeError(f"basis index {index} out of range for {n_qubits} qubits")
    amps = np.zeros(2**n_qubits, dtype=complex)
    amps[index] = 1.0
    return StateVector(n_qubits, amps)


def _check_targets(targets: Sequence[int], n_qubits: int, arity: int | None = None) -> tuple[int, ...]:
    targets = tuple(int(t) for t in targets)
    if arity is not None and len(targets) != arity:
        raise QFuzzyError(f"gate arity {arity} does not match {len(targets)} targets", code="arity-mismatch")
    if len(set(targets)) != len(targets):
        raise QFuzzyError(f"targets {targets} are not distinct", code="duplicate-target")
    for t in targets:
        if not 0 <= t < n_qubits:
            raise OutOfRangeError(f"qubit {t} out of range for {n_qubits} qubits")
    return targets


def apply_gate(state: StateVector, gate: Gate, targets: Sequence[int]) -> StateVector:
    targets = _check_targets(targets, state.n_qubits, gate.arity)
    out = apply_matrix(state.amps[None, :], gate.matrix, targets, state.n_qubits)[0]
    return StateVector(state.n_qubits, out)


def measurement_probabilities(state: StateVector) -> np.ndarray:
    return np.abs(state.amps) ** 2


def expectation_z(state: StateVector, qubit: int) -> float:
    _check_targets([qubit], state.n_qubits)
    return float(measurement_probabilities(state) @ z_signs(state.n_qubits, qubit))


def to_density(state: StateVector) -> DensityMatrix:
    return DensityMatrix(state.n_qubits, np.outer(state.amps, state.amps.conj()))


def apply_gate_density(rho: DensityMatrix, gate: Gate, targets: Sequence[int]) -> DensityMatrix:
    targets = _check_targets(targets, rho.n_qubits, gate.arity)
    out = apply_matrix_density(rho.entries[None], gate.matrix, targets, rho.n_qubits)[0]
    return DensityMatrix(rho.n_qubits, out)


def expectation_z_density(rho: DensityMatrix, qubit: int) -> float:
    _check_targets([qubit], rho.n_qubits)
    return float(np.real(np.diag(rho.entries)) @ z_signs(rho.n_qubits, qubit))
