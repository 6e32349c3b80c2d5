"""Fuzzy-logic primitives and the classical fuzzy (CF) baseline classifier."""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import LengthMismatchError, OutOfRangeError, QFuzzyError, ZeroActivationError

RULEBASE_FORMAT = "qfuzzy-rulebase/1"


@dataclass(frozen=True)
class MembershipFunction:
    shape: str  # "triangular" | "gaussian"
    params: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        if self.shape == "triangular":
            a, b, c = self.params
            if not a < b < c:
                raise QFuzzyError(f"triangular needs a < b < c, got {self.params}")
        elif self.shape == "gaussian":
            center, width = self.params
            if width <= 0:
                raise QFuzzyError(f"gaussian width must be positive, got {width}")
        else:
            raise QFuzzyError(f"unknown membership shape {self.shape!r}", code="unknown-label")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.shape == "triangular":
            a, b, c = self.params
            return np.clip(np.minimum((x - a) / (b - a), (c - x) / (c - b)), 0.0, 1.0)
        center, width = self.params
        return np.exp(-((x - center) ** 2) / (2 * width**2))

    def __str__(self):
        return f"{self.shape}({','.join(repr(p) for p in self.params)})"


def triangular(a: float, b: float, c: float) -> MembershipFunction:
    return MembershipFunction("triangular", (a, b, c))


def gaussian(center: float, width: float) -> MembershipFunction:
    return MembershipFunction("gaussian", (center, width))


@dataclass(frozen=True)
class FuzzyRule:
    antecedents: tuple[tuple[int, MembershipFunction], ...]
    consequent: float

    def __post_init__(self):
        if not self.antecedents:
            raise QFuzzyError("a fuzzy rule needs at least one antecedent")
        object.__setattr__(self, "antecedents", tuple((int(i), mf) for i, mf in self.antecedents))


def t_norm(values, op: str = "min") -> float:
    """Combine membership degrees with a fuzzy AND (min or product)."""
    values = np.asarray(values, dtype=float)
    if op == "min":
        return float(values.min())
    if op == "product":
        return float(values.prod())
    raise QFuzzyError(f"unknown AND operator {op!r}", code="unknown-label")


def t_conorm(values, op: str = "max") -> float:
    """Combine membership degrees with a fuzzy OR (max or probabilistic sum)."""
    values = np.asarray(values, dtype=float)
    if op == "max":
        return float(values.max())
    if op == "probsum":
        return float(1.0 - np.prod(1.0 - values))
    raise QFuzzyError(f"unknown OR operator {op!r}", code="unknown-label")


def rule_activation(rule: FuzzyRule, inputs: Sequence[float], and_op: str = "min") -> float:
    degrees = []
    for idx, mf in rule.antecedents:
        if not 0 <= idx < len(inputs):
            raise OutOfRangeError(f"antecedent input {idx} out of range for {len(inputs)} inputs")
        degrees.append(float(mf(inputs[idx])))
    return t_norm(degrees, and_op)


def defuzzify(activations: Sequence[float], consequents: Sequence[float]) -> float:
    """Activation-weighted average of rule consequents."""
    a = np.asarray(activations, dtype=float)
    c = np.asarray(consequents, dtype=float)
    if a.shape != c.shape or a.size == 0:
        raise LengthMismatchError(f"{a.size} activations vs {c.size} consequents")
    total = a.sum()
    if total <= 0:
        raise ZeroActivationError("no rule fired")
    return float(np.dot(a, c) / total)


@dataclass(frozen=True)
class WordSentimentTable:
    """Per-word association with each class, F(word, class) in [0, 1]."""

    assoc: Mapping[str, tuple[float, float]]

    def __post_init__(self):
        for word, pair in self.assoc.items():
            if any(not math.isfinite(v) or v < 0 for v in pair):
                raise QFuzzyError(f"bad association for {word!r}: {pair}")

    @classmethod
    def from_counts(cls, class_freq: Mapping[str, tuple[int, int]]) -> "WordSentimentTable":
        assoc = {}
        for word, (c0, c1) in class_freq.items():
            total = c0 + c1
            if total > 0:
                assoc[word] = (c0 / total, c1 / total)
        return cls(assoc)

    def association(self, word: str, cls: int) -> float:
        pair = self.assoc.get(word)
        return 0.0 if pair is None else pair[cls]


def fuzzy_membership_score(words: Sequence[str], table: WordSentimentTable, cls: int,
                           weights: Sequence[float]) -> float:
    if len(words) != len(weights):
        raise LengthMismatchError(f"{len(words)} words vs {len(weights)} weights")
    if cls not in (0, 1):
        raise QFuzzyError(f"class must be 0 or 1, got {cls}", code="unknown-label")
    return float(sum(table.association(w, cls) * wt for w, wt in zip(words, weights)))


# -- CF baseline ------------------------------------------------------------

GRID_TERMS = (triangular(-0.5, 0.0, 0.5), triangular(0.0, 0.5, 1.0), triangular(0.5, 1.0, 1.5))
NEUTRAL = 0.5


def cf_score(features: Sequence[float], rulebase: Sequence[FuzzyRule], and_op: str = "min") -> float:
    if not rulebase:
        raise QFuzzyError("empty rulebase", code="empty-rulebase")
    activations = [rule_activation(r, features, and_op) for r in rulebase]
    try:
        return defuzzify(activations, [r.consequent for r in rulebase])
    except ZeroActivationError:
        return NEUTRAL


def cf_classify(features: Sequence[float], rulebase: Sequence[FuzzyRule], and_op: str = "min") -> tuple[int, float]:
    """Label and defuzzified score for a 2-feature input; ties go to class 1."""
    score = cf_score(features, rulebase, and_op)
    return int(score >= 0.5), score


def build_grid_rulebase(features: np.ndarray, labels: Sequence[int],
                        terms: Sequence[MembershipFunction] = GRID_TERMS) -> list[FuzzyRule]:
    """One rule per cell of a terms x terms grid, consequent = majority class.

    Each training point is counted in the cell of its strongest membership
    per feature. Empty cells get the neutral consequent 0.5; majority ties
    go to class 1.
    """
    features = np.asarray(features, dtype=float)
    labels = np.asarray(labels, dtype=int)
    if features.ndim != 2 or features.shape[1] != 2:
        raise LengthMismatchError(f"CF expects 2 features, got shape {features.shape}")
    k = len(terms)
    degrees = [np.stack([mf(features[:, j]) for mf in terms], axis=1) for j in range(2)]
    cell0 = np.argmax(degrees[0], axis=1)
    cell1 = np.argmax(degrees[1], axis=1)
    rules = []
    for i in range(k):
        for j in range(k):
            mask = (cell0 == i) & (cell1 == j)
            if not mask.any():
                consequent = NEUTRAL
            else:
                ones = int(labels[mask].sum())
                consequent = 1.0 if ones >= mask.sum() - ones else 0.0
            rules.append(FuzzyRule(((0, terms[i]), (1, terms[j])), consequent))
    return rules


def dump_rulebase(rules: Iterable[FuzzyRule], and_op: str = "min") -> str:
    """Serialize as ``key = value`` lines.

    ``rule.N = <input>:<shape>(<params>) ... => <consequent>``
    """
    lines = [f"format = {RULEBASE_FORMAT}", f"and_operator = {and_op}"]
    for n, rule in enumerate(rules):
        lhs = " ".join(f"{idx}:{mf}" for idx, mf in rule.antecedents)
        lines.append(f"rule.{n} = {lhs} => {rule.consequent!r}")
    return "\n".join(lines) + "\n"


_ANTECEDENT = re.compile(r"(\d+):(\w+)\(([^)]*)\)")


def load_rulebase(text: str) -> tuple[list[FuzzyRule], str]:
    values = {}
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise QFuzzyError(f"malformed rulebase line: {raw!r}", code="schema-mismatch")
        values[key.strip()] = value.strip()
    if values.get("format") != RULEBASE_FORMAT:
        raise QFuzzyError(f"unsupported rulebase format {values.get('format')!r}", code="schema-mismatch")
    keys = sorted((k for k in values if k.startswith("rule.")), key=lambda k: int(k.split(".")[1]))
    rules = []
    for key in keys:
        lhs, _, rhs = values[key].partition("=>")
        ants = [(int(i), MembershipFunction(shape, tuple(float(p) for p in params.split(","))))
                for i, shape, params in _ANTECEDENT.findall(lhs)]
        rules.append(FuzzyRule(tuple(ants), float(rhs)))
    return rules, values.get("and_operator", "min")
