"""QFNN circuit, quantum fuzzy measurement, hybrid quantum/fuzzy networks and
the ANN / CF baselines.

Every trainable model is exposed through a small adapter with a flat
parameter vector (``init_params``, ``scores``, ``loss_grad``) so one ADAM
loop drives them all.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Sequence

import numpy as np

from . import circuit as circ
from . import qsim
from .circuit import Circuit, Op
from .errors import LengthMismatchError, QFuzzyError
from .fuzzy import FuzzyRule, build_grid_rulebase, cf_score

PARAMS_FORMAT = "qfuzzy-params/1"


def sigmoid(z):
    return 1.0 / (1.0 + np.exp(-np.asarray(z, dtype=float)))


def relu(z):
    return np.maximum(0.0, np.asarray(z, dtype=float))


def _finite(x, what: str) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise QFuzzyError(f"non-finite {what}", code="non-finite-input")
    return x


# -- QFNN -------------------------------------------------------------------


@dataclass(frozen=True)
class QfnnCircuitSpec:
    embedding_axis: str = "x"
    fuzzy_block_count: int = 4
    cz_after_each_fuzzy_block: bool = True
    # compatibility variant: extra RY(theta_2) on qubit 1 inside layer 2
    layer2_extra_ry: bool = False

    n_qubits = 2

    def __post_init__(self):
        if self.embedding_axis not in ("x", "y"):
            raise QFuzzyError(f"embedding axis must be x or y, got {self.embedding_axis!r}")
        if self.fuzzy_block_count < 1:
            raise QFuzzyError("need at least one fuzzy block")

    @property
    def n_params(self) -> int:
        return 4 + self.fuzzy_block_count


@dataclass(frozen=True)
class QfnnParams:
    theta: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "theta", _finite(self.theta, "QFNN parameter").reshape(-1).copy())


def build_qfnn_circuit(spec: QfnnCircuitSpec = QfnnCircuitSpec()) -> Circuit:
    embed = "RX" if spec.embedding_axis == "x" else "RY"
    ops = [Op(embed, (0,), "input", 0, layer=0), Op(embed, (1,), "input", 1, layer=0)]
    ops += [Op("RX", (0,), "theta", 0, 1), Op("RY", (1,), "theta", 1, 1), Op("CZ", (0, 1), layer=1)]
    ops += [Op("RX", (0,), "theta", 2, 2), Op("RY", (1,), "theta", 3, 2)]
    if spec.layer2_extra_ry:
        ops.append(Op("RY", (1,), "theta", 1, 2))
    ops.append(Op("CZ", (0, 1), layer=2))
    for k in range(spec.fuzzy_block_count):
        layer = 3 + k
        ops += [Op("RX", (0,), "theta", 4 + k, layer), Op("RY", (1,), "theta", 4 + k, layer)]
        if spec.cz_after_each_fuzzy_block:
            ops.append(Op("CZ", (0, 1), layer=layer))
    return Circuit(2, tuple(ops), spec.n_params, 2)


def qfnn_forward(spec: QfnnCircuitSpec, params: QfnnParams | Sequence[float], angles: Sequence[float]) -> tuple[float, float]:
    """Expectation of Z on qubit 0 and its sigmoid score, one gate at a time."""
    theta = params.theta if isinstance(params, QfnnParams) else QfnnParams(params).theta
    angles = _finite(angles, "input angle")
    if theta.shape != (spec.n_params,) or angles.shape != (2,):
        raise LengthMismatchError(f"QFNN wants {spec.n_params} params and 2 angles")
    state = circ.simulate_single(build_qfnn_circuit(spec), theta, angles[None])
    e = qsim.expectation_z(state, 0)
    return e, float(sigmoid(e))


def qfm_probabilities(state: qsim.StateVector, memberships: Sequence[float]) -> tuple[float, float]:
    """Class probabilities from membership-weighted projectors on qubit 0.

    For class i the weighted projector mu_i |i><i| gives
    ``<psi|P'_i|psi> = mu_i * P(qubit0 = i)``; its square is the raw class
    weight and the pair is normalized to sum 1.
    """
    mu = np.asarray(memberships, dtype=float)
    if mu.shape != (2,) or np.any(mu < 0) or not np.all(np.isfinite(mu)):
        raise QFuzzyError(f"memberships must be two non-negative numbers, got {memberships}")
    if mu.sum() <= 0:
        raise QFuzzyError("memberships sum to zero", code="zero-total-membership")
    probs = qsim.measurement_probabilities(state)
    p1 = float(probs @ (1 - qsim.z_signs(state.n_qubits, 0)) / 2)
    raw = (mu * np.array([1.0 - p1, p1])) ** 2
    total = raw.sum()
    if total <= 0:
        raise QFuzzyError("state has no weight on any membership-carrying class", code="zero-total-membership")
    return float(raw[0] / total), float(raw[1] / total)


# -- hybrid (4-qubit) -------------------------------------------------------

HYBRID_QUBITS = 4
ANSATZ_PARAMS = 16
_PAIRS = tuple(combinations(range(HYBRID_QUBITS), 2))
_ANGLES_PER_REP = HYBRID_QUBITS + len(_PAIRS)


def _feature_map_ops(reps: int, layer0: int = 0) -> list[Op]:
    ops = []
    idx = 0
    for r in range(reps):
        layer = layer0 + r
        ops += [Op("H", (q,), layer=layer) for q in range(HYBRID_QUBITS)]
        for q in range(HYBRID_QUBITS):
            ops.append(Op("RZ", (q,), "input", idx, layer))
            idx += 1
        for i, j in _PAIRS:
            ops += [Op("CX", (i, j), layer=layer), Op("RZ", (j,), "input", idx, layer), Op("CX", (i, j), layer=layer)]
            idx += 1
    return ops


def _ansatz_ops(layer0: int = 0) -> list[Op]:
    ops = []
    for rep in range(2):
        for q in range(HYBRID_QUBITS):
            base = rep * 2 * HYBRID_QUBITS + 2 * q
            ops += [Op("RY", (q,), "theta", base, layer0 + rep), Op("RZ", (q,), "theta", base + 1, layer0 + rep)]
        if rep == 0:
            ops += [Op("CX", (q, q + 1), layer=layer0) for q in range(HYBRID_QUBITS - 1)]
    return ops


def build_hybrid_circuit(reps: int = 3) -> Circuit:
    """Feature map then ansatz; inputs are the resolved feature-map angles."""
    ops = _feature_map_ops(reps) + _ansatz_ops(layer0=reps)
    return Circuit(HYBRID_QUBITS, tuple(ops), ANSATZ_PARAMS, reps * _ANGLES_PER_REP)


def feature_map_angles(x, reps: int = 3) -> np.ndarray:
    """Rotation angles of the second-order ZZ map: 2*x_i, then 2*(pi-x_i)(pi-x_j)."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    single = 2 * x
    pair = np.stack([2 * (math.pi - x[:, i]) * (math.pi - x[:, j]) for i, j in _PAIRS], axis=1)
    return np.tile(np.concatenate([single, pair], axis=1), (1, reps))


def feature_map_jacobian(x, reps: int = 3) -> np.ndarray:
    """d(angles)/dx, shape (B, reps*10, 4)."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    batch = x.shape[0]
    jac = np.zeros((batch, _ANGLES_PER_REP, HYBRID_QUBITS))
    for q in range(HYBRID_QUBITS):
        jac[:, q, q] = 2.0
    for n, (i, j) in enumerate(_PAIRS):
        jac[:, HYBRID_QUBITS + n, i] = -2 * (math.pi - x[:, j])
        jac[:, HYBRID_QUBITS + n, j] = -2 * (math.pi - x[:, i])
    return np.tile(jac, (1, reps, 1))


def _run_ops(state: qsim.StateVector, ops: Sequence[Op], thetas, inputs) -> qsim.StateVector:
    for op in ops:
        if op.parameterized:
            angle = (thetas if op.source == "theta" else inputs)[op.index]
            gate = qsim.make_rotation(circ.ROTATIONS[op.gate], angle)
        else:
            gate = qsim.make_standard_gate(op.gate)
        state = qsim.apply_gate(state, gate, op.qubits)
    return state


def hybrid_feature_map(angles: Sequence[float], reps: int = 3) -> qsim.StateVector:
    angles = _finite(angles, "feature-map angle")
    if angles.shape != (HYBRID_QUBITS,):
        raise LengthMismatchError(f"feature map takes {HYBRID_QUBITS} angles")
    return _run_ops(qsim.zero_state(HYBRID_QUBITS), _feature_map_ops(reps), (), feature_map_angles(angles, reps)[0])


def hybrid_ansatz(state: qsim.StateVector, params: Sequence[float]) -> qsim.StateVector:
    params = _finite(params, "ansatz parameter").reshape(-1)
    if params.shape != (ANSATZ_PARAMS,):
        raise LengthMismatchError(f"ansatz takes exactly {ANSATZ_PARAMS} parameters, got {params.size}")
    if state.n_qubits != HYBRID_QUBITS:
        raise LengthMismatchError(f"ansatz acts on {HYBRID_QUBITS} qubits")
    return _run_ops(state, _ansatz_ops(), params, ())


@dataclass(frozen=True)
class HybridSpec:
    dense_weights: np.ndarray  # (4, 8)
    dense_bias: np.ndarray  # (4,)
    ansatz_params: np.ndarray  # (16,)
    head_weights: np.ndarray  # (4,)
    head_bias: float = 0.0
    fuzzy_centers: np.ndarray | None = None
    fuzzy_widths: np.ndarray | None = None
    feature_map_reps: int = 3

    n_qubits = HYBRID_QUBITS
    entanglement = "full"

    def __post_init__(self):
        shapes = {"dense_weights": (4, 8), "dense_bias": (4,), "ansatz_params": (ANSATZ_PARAMS,),
                  "head_weights": (4,)}
        for name, shape in shapes.items():
            value = _finite(getattr(self, name), name)
            if value.shape != shape:
                raise LengthMismatchError(f"{name} must have shape {shape}, got {value.shape}")
            object.__setattr__(self, name, value)
        if (self.fuzzy_centers is None) != (self.fuzzy_widths is None):
            raise QFuzzyError("fuzzy layer needs both centers and widths")
        if self.fuzzy_centers is not None:
            c = _finite(self.fuzzy_centers, "fuzzy center").reshape(-1)
            w = _finite(self.fuzzy_widths, "fuzzy width").reshape(-1)
            if c.shape != (4,) or w.shape != (4,):
                raise LengthMismatchError("fuzzy layer needs one center and width per feature")
            if np.any(w <= 0):
                raise QFuzzyError("fuzzy widths must be positive")
            object.__setattr__(self, "fuzzy_centers", c)
            object.__setattr__(self, "fuzzy_widths", w)

    @property
    def has_fuzzy_layer(self) -> bool:
        return self.fuzzy_centers is not None


def gaussian_memberships(features, centers, widths) -> np.ndarray:
    f = np.asarray(features, dtype=float)
    return np.exp(-((f - centers) ** 2) / (2 * np.asarray(widths) ** 2))


def _hybrid_single(spec: HybridSpec, z: np.ndarray) -> float:
    pre = math.pi * sigmoid(spec.dense_weights @ z + spec.dense_bias)
    state = hybrid_ansatz(hybrid_feature_map(pre, spec.feature_map_reps), spec.ansatz_params)
    e = np.array([qsim.expectation_z(state, q) for q in range(HYBRID_QUBITS)])
    return float(sigmoid(spec.head_weights @ e + spec.head_bias))


def hqnn_forward(spec: HybridSpec, features: Sequence[float]) -> float:
    f = _finite(features, "feature")
    if f.shape != (4,):
        raise LengthMismatchError("hybrid models take 4 features")
    return _hybrid_single(spec, np.concatenate([f, 1 - f]))


def hfnn_forward(spec: HybridSpec, features: Sequence[float]) -> float:
    if not spec.has_fuzzy_layer:
        raise QFuzzyError("HFNN needs a fuzzy layer", code="missing-fuzzy-layer")
    f = _finite(features, "feature")
    if f.shape != (4,):
        raise LengthMismatchError("hybrid models take 4 features")
    m = gaussian_memberships(f, spec.fuzzy_centers, spec.fuzzy_widths)
    return _hybrid_single(spec, np.concatenate([m, 1 - m]))


# -- ANN --------------------------------------------------------------------


@dataclass(frozen=True)
class AnnParams:
    hidden_weights: np.ndarray  # (2, 4)
    hidden_bias: np.ndarray  # (4,)
    output_weights: np.ndarray  # (4,)
    output_bias: float = 0.0

    def __post_init__(self):
        for name, shape in (("hidden_weights", (2, 4)), ("hidden_bias", (4,)), ("output_weights", (4,))):
            value = _finite(getattr(self, name), name)
            if value.shape != shape:
                raise LengthMismatchError(f"{name} must have shape {shape}")
            object.__setattr__(self, name, value)
        object.__setattr__(self, "output_bias", float(_finite(self.output_bias, "output_bias")))


def ann_forward(params: AnnParams, features: Sequence[float]) -> float:
    x = _finite(features, "feature")
    hidden = np.tanh(x @ params.hidden_weights + params.hidden_bias)
    return float(sigmoid(hidden @ params.output_weights + params.output_bias))


# -- loss -------------------------------------------------------------------

LOSSES = ("mse", "cross_entropy")


def loss_value(scores: np.ndarray, targets: np.ndarray, kind: str = "mse") -> float:
    if kind == "mse":
        return float(np.mean((scores - targets) ** 2))
    if kind == "cross_entropy":
        s = np.clip(scores, 1e-12, 1 - 1e-12)
        return float(-np.mean(targets * np.log(s) + (1 - targets) * np.log(1 - s)))
    raise QFuzzyError(f"unknown loss {kind!r}", code="unknown-label")


def loss_score_grad(scores: np.ndarray, targets: np.ndarray, kind: str = "mse") -> np.ndarray:
    n = len(scores)
    if kind == "mse":
        return 2 * (scores - targets) / n
    s = np.clip(scores, 1e-12, 1 - 1e-12)
    return (s - targets) / (s * (1 - s)) / n


# -- trainable adapters -----------------------------------------------------


class QfnnModel:
    name = "qfnn"
    input_dim = 2

    def __init__(self, spec: QfnnCircuitSpec = QfnnCircuitSpec(), noise=None):
        self.spec = spec
        self.circuit = build_qfnn_circuit(spec)
        self.noise = noise

    @property
    def n_params(self) -> int:
        return self.spec.n_params

    def init_params(self, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(0.0, math.pi, self.n_params)

    def expectations(self, params, X, noise=None, density: bool = False) -> np.ndarray:
        angles = math.pi * np.clip(np.asarray(X, dtype=float), 0.0, 1.0)
        noise = noise if noise is not None else self.noise
        return circ.expectations(self.circuit, params, angles, (0,), noise, density)[:, 0]

    def scores(self, params, X, noise=None) -> np.ndarray:
        return sigmoid(self.expectations(params, X, noise))

    def loss_grad(self, params, X, y, loss: str = "mse") -> tuple[float, np.ndarray]:
        angles = math.pi * np.clip(np.asarray(X, dtype=float), 0.0, 1.0)
        e, d_theta, _ = circ.shift_gradients(self.circuit, params, angles, (0,), self.noise, wrt_inputs=False)
        s = sigmoid(e[:, 0])
        d_e = loss_score_grad(s, y, loss) * s * (1 - s)
        return loss_value(s, y, loss), d_e @ d_theta[:, 0, :]

    def tensors(self, params) -> dict[str, np.ndarray]:
        return {"theta": np.asarray(params, dtype=float)}

    def from_tensors(self, tensors: dict[str, np.ndarray]) -> np.ndarray:
        return np.asarray(tensors["theta"], dtype=float).reshape(-1)

    def options(self) -> dict[str, str]:
        s = self.spec
        return {"embedding_axis": s.embedding_axis, "fuzzy_block_count": str(s.fuzzy_block_count),
                "cz_after_each_fuzzy_block": str(s.cz_after_each_fuzzy_block).lower(),
                "layer2_extra_ry": str(s.layer2_extra_ry).lower()}


_HYBRID_LAYOUT = (("dense_weights", (4, 8)), ("dense_bias", (4,)), ("ansatz_params", (16,)),
                  ("head_weights", (4,)), ("head_bias", (1,)))
_FUZZY_LAYOUT = (("fuzzy_centers", (4,)), ("fuzzy_widths", (4,)))
MIN_WIDTH = 1e-3


def _unpack(flat: np.ndarray, layout) -> dict[str, np.ndarray]:
    out, pos = {}, 0
    for name, shape in layout:
        size = int(np.prod(shape))
        out[name] = flat[pos:pos + size].reshape(shape)
        pos += size
    if pos != flat.size:
        raise LengthMismatchError(f"expected {pos} parameters, got {flat.size}")
    return out


class HybridModel:
    """HQNN (``fuzzy=False``) or HFNN (``fuzzy=True``) on 4 features."""

    input_dim = 4

    def __init__(self, fuzzy: bool = False, reps: int = 3):
        self.fuzzy = fuzzy
        self.reps = reps
        self.name = "hfnn" if fuzzy else "hqnn"
        self.circuit = build_hybrid_circuit(reps)
        self.layout = _HYBRID_LAYOUT + (_FUZZY_LAYOUT if fuzzy else ())

    @property
    def n_params(self) -> int:
        return sum(int(np.prod(s)) for _, s in self.layout)

    def init_params(self, rng: np.random.Generator) -> np.ndarray:
        parts = {
            "dense_weights": rng.uniform(-0.5, 0.5, (4, 8)),
            "dense_bias": np.zeros(4),
            "ansatz_params": rng.uniform(0.0, math.pi, ANSATZ_PARAMS),
            "head_weights": rng.uniform(-0.5, 0.5, 4),
            "head_bias": np.zeros(1),
        }
        if self.fuzzy:
            parts["fuzzy_centers"] = rng.uniform(0.0, 1.0, 4)
            parts["fuzzy_widths"] = np.full(4, 0.5)
        return np.concatenate([parts[name].reshape(-1) for name, _ in self.layout])

    def unpack(self, params) -> dict[str, np.ndarray]:
        return _unpack(np.asarray(params, dtype=float), self.layout)

    def to_spec(self, params) -> HybridSpec:
        p = self.unpack(params)
        return HybridSpec(p["dense_weights"], p["dense_bias"], p["ansatz_params"], p["head_weights"],
                          float(p["head_bias"][0]), p.get("fuzzy_centers"), p.get("fuzzy_widths"), self.reps)

    def project(self, params: np.ndarray) -> np.ndarray:
        if not self.fuzzy:
            return params
        params = np.array(params, dtype=float)
        widths = self.unpack(params)["fuzzy_widths"]  # view into params
        np.maximum(widths, MIN_WIDTH, out=widths)
        return params

    def _forward(self, p, X):
        f = np.asarray(X, dtype=float)
        m = gaussian_memberships(f, p["fuzzy_centers"], p["fuzzy_widths"]) if self.fuzzy else f
        z = np.concatenate([m, 1 - m], axis=1)
        a = z @ p["dense_weights"].T + p["dense_bias"]
        x = math.pi * sigmoid(a)
        return f, m, z, a, x

    def scores(self, params, X) -> np.ndarray:
        p = self.unpack(params)
        *_, x = self._forward(p, X)
        e = circ.expectations(self.circuit, p["ansatz_params"], feature_map_angles(x, self.reps),
                              tuple(range(HYBRID_QUBITS)))
        return sigmoid(e @ p["head_weights"] + p["head_bias"][0])

    def loss_grad(self, params, X, y, loss: str = "mse") -> tuple[float, np.ndarray]:
        p = self.unpack(params)
        f, m, z, a, x = self._forward(p, X)
        e, d_theta, d_phi = circ.shift_gradients(self.circuit, p["ansatz_params"], feature_map_angles(x, self.reps),
                                                 tuple(range(HYBRID_QUBITS)))
        s = sigmoid(e @ p["head_weights"] + p["head_bias"][0])
        d_o = loss_score_grad(s, y, loss) * s * (1 - s)  # (B,)
        grads = {"head_weights": d_o @ e, "head_bias": np.array([d_o.sum()])}
        d_e = d_o[:, None] * p["head_weights"][None, :]  # (B, 4)
        grads["ansatz_params"] = np.einsum("bo,bop->p", d_e, d_theta)
        d_angles = np.einsum("bo,boi->bi", d_e, d_phi)
        d_x = np.einsum("bi,bik->bk", d_angles, feature_map_jacobian(x, self.reps))
        sa = sigmoid(a)
        d_a = d_x * math.pi * sa * (1 - sa)
        grads["dense_weights"] = d_a.T @ z
        grads["dense_bias"] = d_a.sum(axis=0)
        if self.fuzzy:
            d_z = d_a @ p["dense_weights"]
            d_m = d_z[:, :4] - d_z[:, 4:]
            c, w = p["fuzzy_centers"], p["fuzzy_widths"]
            grads["fuzzy_centers"] = np.sum(d_m * m * (f - c) / w**2, axis=0)
            grads["fuzzy_widths"] = np.sum(d_m * m * (f - c) ** 2 / w**3, axis=0)
        flat = np.concatenate([grads[name].reshape(-1) for name, _ in self.layout])
        return loss_value(s, y, loss), flat

    def tensors(self, params) -> dict[str, np.ndarray]:
        return self.unpack(params)

    def from_tensors(self, tensors) -> np.ndarray:
        return np.concatenate([np.asarray(tensors[name], dtype=float).reshape(-1) for name, _ in self.layout])

    def options(self) -> dict[str, str]:
        return {"feature_map_reps": str(self.reps)}


_ANN_LAYOUT = (("hidden_weights", (2, 4)), ("hidden_bias", (4,)), ("output_weights", (4,)), ("output_bias", (1,)))


class AnnModel:
    name = "ann"
    input_dim = 2
    layout = _ANN_LAYOUT
    n_params = 17

    def init_params(self, rng: np.random.Generator) -> np.ndarray:
        return np.concatenate([rng.uniform(-1.0, 1.0, 8), np.zeros(4), rng.uniform(-1.0, 1.0, 4), np.zeros(1)])

    def unpack(self, params) -> dict[str, np.ndarray]:
        return _unpack(np.asarray(params, dtype=float), self.layout)

    def to_params(self, params) -> AnnParams:
        p = self.unpack(params)
        return AnnParams(p["hidden_weights"], p["hidden_bias"], p["output_weights"], float(p["output_bias"][0]))

    def scores(self, params, X) -> np.ndarray:
        p = self.unpack(params)
        h = np.tanh(np.asarray(X, dtype=float) @ p["hidden_weights"] + p["hidden_bias"])
        return sigmoid(h @ p["output_weights"] + p["output_bias"][0])

    def loss_grad(self, params, X, y, loss: str = "mse") -> tuple[float, np.ndarray]:
        p = self.unpack(params)
        X = np.asarray(X, dtype=float)
        h = np.tanh(X @ p["hidden_weights"] + p["hidden_bias"])
        s = sigmoid(h @ p["output_weights"] + p["output_bias"][0])
        d_o = loss_score_grad(s, y, loss) * s * (1 - s)
        d_h = d_o[:, None] * p["output_weights"][None, :] * (1 - h**2)
        flat = np.concatenate([(X.T @ d_h).reshape(-1), d_h.sum(axis=0), d_o @ h, [d_o.sum()]])
        return loss_value(s, y, loss), flat

    def tensors(self, params) -> dict[str, np.ndarray]:
        return self.unpack(params)

    def from_tensors(self, tensors) -> np.ndarray:
        return np.concatenate([np.asarray(tensors[name], dtype=float).reshape(-1) for name, _ in self.layout])

    def options(self) -> dict[str, str]:
        return {}


@dataclass
class CfModel:
    """Grid-rule Mamdani-style classifier; fitted by counting, not by gradients."""

    rulebase: list[FuzzyRule] = field(default_factory=list)
    and_op: str = "min"

    name = "cf"
    input_dim = 2

    def fit(self, X, y) -> "CfModel":
        self.rulebase = build_grid_rulebase(np.asarray(X, dtype=float), y)
        return self

    def scores(self, X) -> np.ndarray:
        return np.array([cf_score(x, self.rulebase, self.and_op) for x in np.asarray(X, dtype=float)])


def make_model(name: str, qfnn_spec: QfnnCircuitSpec = QfnnCircuitSpec(), noise=None):
    if name == "qfnn":
        return QfnnModel(qfnn_spec, noise)
    if name == "hqnn":
        return HybridModel(fuzzy=False)
    if name == "hfnn":
        return HybridModel(fuzzy=True)
    if name == "ann":
        return AnnModel()
    if name == "cf":
        return CfModel()
    raise QFuzzyError(f"unknown model {name!r}", code="unknown-model")


# -- checkpoint format ------------------------------------------------------


def dump_params(model_name: str, tensors: dict[str, np.ndarray], options: dict[str, str] | None = None) -> str:
    """Plain-text checkpoint.

    ``format`` and ``model`` header lines, optional ``option <key> <value>``
    lines, then per tensor a ``tensor <name> <comma-separated shape>`` line
    followed by one line of row-major values.
    """
    lines = [f"format {PARAMS_FORMAT}", f"model {model_name}"]
    for key, value in (options or {}).items():
        lines.append(f"option {key} {value}")
    for name, value in tensors.items():
        arr = np.asarray(value, dtype=float)
        lines.append(f"tensor {name} {','.join(str(d) for d in arr.shape)}")
        lines.append(" ".join(repr(float(v)) for v in arr.reshape(-1)))
    return "\n".join(lines) + "\n"


def load_params(text: str) -> tuple[str, dict[str, str], dict[str, np.ndarray]]:
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    if not lines or lines[0].split() != ["format", PARAMS_FORMAT]:
        raise QFuzzyError("not a parameter checkpoint", code="schema-mismatch")
    model_name = ""
    options: dict[str, str] = {}
    tensors: dict[str, np.ndarray] = {}
    it = iter(lines[1:])
    for line in it:
        head, _, rest = line.partition(" ")
        if head == "model":
            model_name = rest.strip()
        elif head == "option":
            key, _, value = rest.partition(" ")
            options[key] = value.strip()
        elif head == "tensor":
            name, shape_text = rest.split()
            shape = tuple(int(d) for d in shape_text.split(","))
            values = np.array([float(v) for v in next(it).split()])
            tensors[name] = values.reshape(shape)
        else:
            raise QFuzzyError(f"unexpected checkpoint line {line!r}", code="schema-mismatch")
    return model_name, options, tensors
