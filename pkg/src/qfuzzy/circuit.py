"""Parameterized circuit descriptions and a batched evaluation engine.

A :class:`Circuit` is a flat list of :class:`Op`. Rotation ops read their
angle either from the trainable vector (``source="theta"``) or from the
per-sample input vector (``source="input"``). A parameter may drive several
ops; gradients sum over every occurrence.

The engine resolves all angles into a (batch, n_ops) table first, so a
parameter-shift gradient is just the same circuit run on a stacked table
where one column at a time is moved by +/- pi/2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import qsim
from .errors import OutOfRangeError, QFuzzyError

ROTATIONS = {"RX": "x", "RY": "y", "RZ": "z"}
SHIFT = math.pi / 2


@dataclass(frozen=True)
class Op:
    gate: str
    qubits: tuple[int, ...]
    source: str | None = None  # "theta" | "input" | None
    index: int = 0
    layer: int = 0

    @property
    def parameterized(self) -> bool:
        return self.source is not None


@dataclass(frozen=True)
class Circuit:
    n_qubits: int
    ops: tuple[Op, ...]
    n_params: int
    n_inputs: int

    def __post_init__(self):
        for op in self.ops:
            for q in op.qubits:
                if not 0 <= q < self.n_qubits:
                    raise OutOfRangeError(f"op {op} acts outside {self.n_qubits} qubits")
            if op.parameterized:
                if op.gate not in ROTATIONS:
                    raise QFuzzyError(f"parameterized op must be a rotation, got {op.gate}",
                                      code="non-rotation-parameter")
                bound = self.n_params if op.source == "theta" else self.n_inputs
                if not 0 <= op.index < bound:
                    raise OutOfRangeError(f"op {op} refers past {op.source} length {bound}")
            elif op.gate not in qsim.STANDARD_GATES:
                raise QFuzzyError(f"unknown fixed gate {op.gate}", code="unknown-label")

    def occurrences(self, source: str, index: int) -> list[int]:
        return [i for i, op in enumerate(self.ops) if op.source == source and op.index == index]

    def layer_ends(self) -> set[int]:
        ends = set()
        for i, op in enumerate(self.ops):
            if i + 1 == len(self.ops) or self.ops[i + 1].layer != op.layer:
                ends.add(i)
        return ends


_FIXED = {}


def _fixed_matrix(name: str) -> np.ndarray:
    if name not in _FIXED:
        _FIXED[name] = qsim.make_standard_gate(name).matrix
    return _FIXED[name]


def _as_batch(thetas, inputs, circuit: Circuit) -> tuple[np.ndarray, np.ndarray]:
    inputs = np.zeros((1, 0)) if inputs is None else np.atleast_2d(np.asarray(inputs, dtype=float))
    batch = inputs.shape[0]
    thetas = np.asarray(thetas if thetas is not None else np.zeros(circuit.n_params), dtype=float)
    if thetas.ndim == 1:
        thetas = np.broadcast_to(thetas, (batch, thetas.shape[0]))
    if thetas.shape[1] != circuit.n_params or inputs.shape[1] != circuit.n_inputs:
        raise QFuzzyError(
            f"circuit wants {circuit.n_params} params / {circuit.n_inputs} inputs, "
            f"got {thetas.shape[1]} / {inputs.shape[1]}",
            code="length-mismatch",
        )
    if not (np.all(np.isfinite(thetas)) and np.all(np.isfinite(inputs))):
        raise QFuzzyError("non-finite circuit angle", code="non-finite-angle")
    return thetas, inputs


def resolve_angles(circuit: Circuit, thetas, inputs) -> np.ndarray:
    """Angle table of shape (B, n_ops); zero for unparameterized ops."""
    thetas, inputs = _as_batch(thetas, inputs, circuit)
    table = np.zeros((inputs.shape[0], len(circuit.ops)))
    for i, op in enumerate(circuit.ops):
        if op.source == "theta":
            table[:, i] = thetas[:, op.index]
        elif op.source == "input":
            table[:, i] = inputs[:, op.index]
    return table


def _op_matrix(op: Op, angles: np.ndarray) -> np.ndarray:
    if op.parameterized:
        return qsim.rotation_matrix(ROTATIONS[op.gate], angles)
    return _fixed_matrix(op.gate)


def run_statevector(circuit: Circuit, table: np.ndarray) -> np.ndarray:
    """Evolve |0...0> through the circuit for every row of the angle table."""
    batch = table.shape[0]
    states = np.zeros((batch, 2**circuit.n_qubits), dtype=complex)
    states[:, 0] = 1.0
    for i, op in enumerate(circuit.ops):
        states = qsim.apply_matrix(states, _op_matrix(op, table[:, i]), op.qubits, circuit.n_qubits)
    return states


def _noise_targets(placement, op: Op | None, n_qubits: int) -> list[int]:
    allowed = range(n_qubits) if placement.qubits == "all" else placement.qubits
    if op is None:
        return list(allowed)
    return [q for q in op.qubits if q in allowed]


def run_density(circuit: Circuit, table: np.ndarray, noise=None) -> np.ndarray:
    """Density-matrix evolution; ``noise`` is a ``(channel, placement)`` pair or None."""
    batch = table.shape[0]
    d = 2**circuit.n_qubits
    rhos = np.zeros((batch, d, d), dtype=complex)
    rhos[:, 0, 0] = 1.0
    channel, placement = noise if noise is not None else (None, None)
    ends = circuit.layer_ends()

    def inject(targets):
        nonlocal rhos
        for q in targets:
            out = np.zeros_like(rhos)
            for k in channel.operators:
                out += qsim.apply_matrix_density(rhos, k, (q,), circuit.n_qubits)
            rhos = out

    for i, op in enumerate(circuit.ops):
        rhos = qsim.apply_matrix_density(rhos, _op_matrix(op, table[:, i]), op.qubits, circuit.n_qubits)
        if channel is None:
            continue
        if placement.mode == "after_each_gate":
            inject(_noise_targets(placement, op, circuit.n_qubits))
        elif placement.mode == "after_each_layer" and i in ends:
            inject(_noise_targets(placement, None, circuit.n_qubits))
    if channel is not None and placement.mode == "final_only":
        inject(_noise_targets(placement, None, circuit.n_qubits))
    return rhos


def _z_matrix(n_qubits: int, observed: Sequence[int]) -> np.ndarray:
    for q in observed:
        if not 0 <= q < n_qubits:
            raise OutOfRangeError(f"observed qubit {q} out of range")
    return np.stack([qsim.z_signs(n_qubits, q) for q in observed], axis=1)


def expectations_from_table(circuit: Circuit, table: np.ndarray, observed=(0,), noise=None,
                            density: bool = False) -> np.ndarray:
    signs = _z_matrix(circuit.n_qubits, observed)
    if noise is not None or density:
        rhos = run_density(circuit, table, noise)
        probs = np.real(np.diagonal(rhos, axis1=1, axis2=2))
    else:
        probs = np.abs(run_statevector(circuit, table)) ** 2
    return probs @ signs


def expectations(circuit: Circuit, thetas, inputs, observed=(0,), noise=None, density: bool = False) -> np.ndarray:
    """Z expectations, shape (B, len(observed))."""
    table = resolve_angles(circuit, thetas, inputs)
    return expectations_from_table(circuit, table, observed, noise, density)


def shift_gradients(circuit: Circuit, thetas, inputs, observed=(0,), noise=None,
                    wrt_inputs: bool = True, density: bool = False):
    """Exact parameter-shift gradients of the Z expectations.

    Returns ``(E, dE_dtheta, dE_dinput)`` with shapes (B, O), (B, O, P) and
    (B, O, I). Each rotation occurrence is shifted on its own and the
    contributions are summed per parameter.
    """
    table = resolve_angles(circuit, thetas, inputs)
    batch = table.shape[0]
    n_obs = len(observed)
    shifted = [i for i, op in enumerate(circuit.ops)
               if op.source == "theta" or (wrt_inputs and op.source == "input")]
    stacks = [table]
    for i in shifted:
        for delta in (SHIFT, -SHIFT):
            t = table.copy()
            t[:, i] += delta
            stacks.append(t)
    values = expectations_from_table(circuit, np.concatenate(stacks), observed, noise, density)
    values = values.reshape(1 + 2 * len(shifted), batch, n_obs)
    base = values[0]
    d_theta = np.zeros((batch, n_obs, circuit.n_params))
    d_input = np.zeros((batch, n_obs, circuit.n_inputs))
    for j, i in enumerate(shifted):
        g = 0.5 * (values[1 + 2 * j] - values[2 + 2 * j])
        op = circuit.ops[i]
        target = d_theta if op.source == "theta" else d_input
        target[:, :, op.index] += g
    return base, d_theta, d_input


class CircuitExpectation:
    """Callable ``theta -> <Z_qubit>`` for one input sample.

    Exposes per-occurrence shifted evaluation so shared parameters can be
    differentiated exactly.
    """

    def __init__(self, circuit: Circuit, inputs=None, qubit: int = 0, noise=None):
        self.circuit = circuit
        self.inputs = np.zeros((1, circuit.n_inputs)) if inputs is None else np.atleast_2d(inputs)
        self.qubit = qubit
        self.noise = noise

    def __call__(self, params) -> float:
        return float(expectations(self.circuit, params, self.inputs, (self.qubit,), self.noise)[0, 0])

    def occurrences(self, index: int) -> list[int]:
        return self.circuit.occurrences("theta", index)

    def eval_shifted(self, params, op_index: int, delta: float) -> float:
        op = self.circuit.ops[op_index]
        if op.gate not in ROTATIONS:
            raise QFuzzyError(f"op {op_index} is not a rotation", code="non-rotation-parameter")
        table = resolve_angles(self.circuit, params, self.inputs)
        table[:, op_index] += delta
        return float(expectations_from_table(self.circuit, table, (self.qubit,), self.noise)[0, 0])


def simulate_single(circuit: Circuit, thetas, inputs) -> qsim.StateVector:
    """Reference path: one sample through qsim's gate-by-gate API."""
    table = resolve_angles(circuit, thetas, inputs)[0]
    state = qsim.zero_state(circuit.n_qubits)
    for i, op in enumerate(circuit.ops):
        if op.parameterized:
            gate = qsim.make_rotation(ROTATIONS[op.gate], table[i])
        else:
            gate = qsim.make_standard_gate(op.gate)
        state = qsim.apply_gate(state, gate, op.qubits)
    return state
