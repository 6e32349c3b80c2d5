"""Single-qubit Kraus noise channels and their insertion into circuits."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import circuit as circ
from . import qsim
from .errors import OutOfRangeError, QFuzzyError, UnknownLabelError

CHANNEL_LABELS = ("BF", "PF", "BPF", "DP", "AD", "PD")
PLACEMENT_MODES = ("after_each_layer", "after_each_gate", "final_only")
DEFAULT_GRID = tuple(round(0.1 * i, 1) for i in range(10))

_I = np.eye(2, dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)


@dataclass(frozen=True)
class KrausChannel:
    label: str
    p: float
    operators: tuple[np.ndarray, ...] = field(repr=False)

    def completeness_error(self) -> float:
        total = sum(k.conj().T @ k for k in self.operators)
        return float(np.max(np.abs(total - _I)))


@dataclass(frozen=True)
class NoisePlacement:
    mode: str = "after_each_layer"
    qubits: str | tuple[int, ...] = "all"

    def __post_init__(self):
        if self.mode not in PLACEMENT_MODES:
            raise UnknownLabelError(f"unknown noise placement {self.mode!r}")
        if self.qubits != "all":
            object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))

    def validate(self, n_qubits: int) -> None:
        if self.qubits == "all":
            return
        for q in self.qubits:
            if not 0 <= q < n_qubits:
                raise OutOfRangeError(f"noise qubit {q} invalid for {n_qubits} qubits")


def make_channel(label: str, p: float) -> KrausChannel:
    p = float(p)
    if not 0.0 <= p <= 1.0 or math.isnan(p):
        raise QFuzzyError(f"noise parameter {p} outside [0, 1]", code="p-out-of-range")
    label = label.upper()
    if label in ("BF", "PF", "BPF"):
        pauli = {"BF": _X, "PF": _Z, "BPF": _Y}[label]
        ops = [math.sqrt(1 - p) * _I, math.sqrt(p) * pauli]
    elif label == "DP":
        ops = [math.sqrt(1 - 3 * p / 4) * _I] + [math.sqrt(p / 4) * s for s in (_X, _Y, _Z)]
    elif label == "AD":
        ops = [np.array([[1, 0], [0, math.sqrt(1 - p)]], dtype=complex),
               np.array([[0, math.sqrt(p)], [0, 0]], dtype=complex)]
    elif label == "PD":
        ops = [np.array([[1, 0], [0, math.sqrt(1 - p)]], dtype=complex),
               np.array([[0, 0], [0, math.sqrt(p)]], dtype=complex)]
    else:
        raise UnknownLabelError(f"unknown channel {label!r}; expected one of {CHANNEL_LABELS}")
    # zero-weight operators carry no information; p=0 flip channels reduce to {I}
    ops = [k for k in ops if np.any(k != 0)]
    for k in ops:
        k.setflags(write=False)
    return KrausChannel(label, p, tuple(ops))


def apply_channel(rho: qsim.DensityMatrix, ch: KrausChannel, qubit: int) -> qsim.DensityMatrix:
    if not 0 <= qubit < rho.n_qubits:
        raise OutOfRangeError(f"qubit {qubit} out of range for {rho.n_qubits} qubits")
    out = np.zeros_like(rho.entries)
    for k in ch.operators:
        out = out + qsim.apply_matrix_density(rho.entries[None], k, (qubit,), rho.n_qubits)[0]
    return qsim.DensityMatrix(rho.n_qubits, out)


def noisy_expectation(circuit: circ.Circuit, params: Sequence[float], input_angles: Sequence[float],
                      ch: KrausChannel, placement: NoisePlacement, qubit_observed: int = 0) -> float:
    placement.validate(circuit.n_qubits)
    values = circ.expectations(circuit, params, np.atleast_2d(input_angles), (qubit_observed,),
                               noise=(ch, placement))
    return float(values[0, 0])
