"""Loss, gradients and the ADAM training loop."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .circuit import SHIFT
from .errors import DatasetError, LengthMismatchError, QFuzzyError
from .models import CfModel, loss_value

GRADIENT_MODES = ("parameter_shift", "finite_difference")
LEARNING_RATES = (0.1, 0.01, 0.001)
EPOCH_PRESETS = (20, 30, 100)


def mse_loss(predictions: Sequence[float], targets: Sequence[float]) -> float:
    p = np.asarray(predictions, dtype=float)
    t = np.asarray(targets, dtype=float)
    if p.shape != t.shape or p.size == 0:
        raise LengthMismatchError(f"{p.size} predictions vs {t.size} targets")
    return float(np.mean((p - t) ** 2))


def parameter_shift_grad(circuit_eval: Callable, params: Sequence[float], index: int) -> float:
    """Exact derivative of a rotation-parameterized expectation.

    ``circuit_eval`` maps a parameter vector to an expectation. When it also
    exposes ``occurrences(index)`` and ``eval_shifted(params, op, delta)``
    (see :class:`qfuzzy.circuit.CircuitExpectation`), each gate that shares
    the parameter is shifted on its own and the halves are summed.
    """
    params = np.asarray(params, dtype=float)
    if not 0 <= index < params.size:
        raise QFuzzyError(f"parameter index {index} out of range", code="index-out-of-range")
    if hasattr(circuit_eval, "occurrences"):
        ops = circuit_eval.occurrences(index)
        if not ops:
            raise QFuzzyError(f"parameter {index} drives no rotation gate", code="non-rotation-parameter")
        return sum(0.5 * (circuit_eval.eval_shifted(params, op, SHIFT) - circuit_eval.eval_shifted(params, op, -SHIFT))
                   for op in ops)
    plus = params.copy()
    minus = params.copy()
    plus[index] += SHIFT
    minus[index] -= SHIFT
    return 0.5 * (circuit_eval(plus) - circuit_eval(minus))


def finite_difference_grad(f: Callable, params: Sequence[float], index: int, h: float = 1e-4) -> float:
    params = np.asarray(params, dtype=float)
    plus = params.copy()
    minus = params.copy()
    plus[index] += h
    minus[index] -= h
    return (f(plus) - f(minus)) / (2 * h)


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    step: int = 0
    lr: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros(cls, n: int, lr: float = 0.01, **kw) -> "AdamState":
        return cls(np.zeros(n), np.zeros(n), 0, lr, **kw)


def adam_step(state: AdamState, params, grads) -> tuple[AdamState, np.ndarray]:
    params = np.asarray(params, dtype=float)
    g = np.asarray(grads, dtype=float)
    if params.shape != g.shape or state.m.shape != g.shape:
        raise LengthMismatchError(f"params {params.shape}, grads {g.shape}, moments {state.m.shape}")
    step = state.step + 1
    m = state.beta1 * state.m + (1 - state.beta1) * g
    v = state.beta2 * state.v + (1 - state.beta2) * g * g
    m_hat = m / (1 - state.beta1**step)
    v_hat = v / (1 - state.beta2**step)
    new_params = params - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return replace(state, m=m, v=v, step=step), new_params


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 20
    batch_size: int = 32
    lr: float = 0.01
    seed: int = 0
    gradient_mode: str = "parameter_shift"
    loss: str = "mse"
    allow_any_lr: bool = False

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise QFuzzyError("epochs and batch_size must be at least 1", code="bad-config")
        if self.gradient_mode not in GRADIENT_MODES:
            raise QFuzzyError(f"unknown gradient mode {self.gradient_mode!r}", code="bad-config")
        if self.loss not in ("mse", "cross_entropy"):
            raise QFuzzyError(f"unknown loss {self.loss!r}", code="bad-config")
        if self.lr < 0 or not math.isfinite(self.lr):
            raise QFuzzyError(f"learning rate must be finite and non-negative, got {self.lr}", code="bad-config")
        if not self.allow_any_lr and self.lr not in LEARNING_RATES and self.lr != 0:
            raise QFuzzyError(f"learning rate {self.lr} not in {LEARNING_RATES} (set allow_any_lr)",
                              code="bad-config")


@dataclass
class TrainResult:
    params: np.ndarray | None
    history: list[dict] = field(default_factory=list)
    model: object = None


def _fd_loss_grad(model, params, X, y, loss: str, h: float = 1e-4) -> tuple[float, np.ndarray]:
    def f(p):
        return loss_value(model.scores(p, X), y, loss)

    return f(params), np.array([finite_difference_grad(f, params, k, h) for k in range(params.size)])


def accuracy(scores, labels) -> float:
    return float(np.mean((np.asarray(scores) >= 0.5) == (np.asarray(labels) == 1)))


def _check_dataset(X, y) -> tuple[np.ndarray, np.ndarray]:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or len(X) == 0:
        raise DatasetError("training set is empty", code="empty-dataset")
    if len(X) != len(y):
        raise LengthMismatchError(f"{len(X)} samples vs {len(y)} labels")
    if not np.isin(y, (0, 1)).all():
        raise DatasetError("labels must be 0 or 1", code="non-binary-labels")
    return X, y


def train(model, X, y, cfg: TrainConfig, X_test=None, y_test=None, params=None) -> TrainResult:
    """Seeded mini-batch ADAM on a flat parameter vector.

    Each epoch reshuffles with the run's generator; the recorded loss is the
    mean of the batch losses weighted by batch size, so a short final batch
    does not skew it. ``CfModel`` is fitted once by counting and
    reports a single history row.
    """
    X, y = _check_dataset(X, y)
    has_test = X_test is not None and len(X_test) > 0
    if isinstance(model, CfModel):
        model.fit(X, y)
        s = model.scores(X)
        row = {"epoch": 1, "loss": loss_value(s, y, cfg.loss), "train_acc": accuracy(s, y)}
        row["test_acc"] = accuracy(model.scores(X_test), y_test) if has_test else float("nan")
        return TrainResult(None, [row], model)

    rng = np.random.default_rng(cfg.seed)
    params = model.init_params(rng) if params is None else np.asarray(params, dtype=float).copy()
    state = AdamState.zeros(params.size, cfg.lr)
    project = getattr(model, "project", None)
    history = []
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(len(X))
        batch_losses, batch_sizes = [], []
        for start in range(0, len(X), cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            if cfg.gradient_mode == "parameter_shift":
                loss, grad = model.loss_grad(params, X[idx], y[idx], cfg.loss)
            else:
                loss, grad = _fd_loss_grad(model, params, X[idx], y[idx], cfg.loss)
            state, params = adam_step(state, params, grad)
            if project is not None:
                params = project(params)
            batch_losses.append(loss)
            batch_sizes.append(len(idx))
        row = {"epoch": epoch, "loss": float(np.average(batch_losses, weights=batch_sizes)),
               "train_acc": accuracy(model.scores(params, X), y)}
        row["test_acc"] = accuracy(model.scores(params, X_test), y_test) if has_test else float("nan")
        history.append(row)
    return TrainResult(params, history, model)
