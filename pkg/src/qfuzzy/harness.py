"""Experiment orchestration: ingest, split, featurize, train, evaluate, export."""
from __future__ import annotations

import csv
import dataclasses
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import channels as ch
from . import metrics as mt
from . import models as md
from . import textprep as tp
from .errors import DatasetError, QFuzzyError
from .fuzzy import dump_rulebase, load_rulebase
from .optim import TrainConfig, accuracy, train

MODELS = ("qfnn", "hqnn", "hfnn", "ann", "cf")
TEST_FRACTIONS = (0.2, 0.3, 0.5)
METRICS_FORMAT = "qfuzzy-metrics/1"
HISTORY_FORMAT = "qfuzzy-history/1"
PREDICTIONS_FORMAT = "qfuzzy-predictions/1"
ROC_FORMAT = "qfuzzy-roc/1"
SWEEP_FORMAT = "qfuzzy-sweep/1"
DATASET_FORMAT = "qfuzzy-dataset/1"


@dataclass(frozen=True)
class ExperimentConfig:
    model: str = "qfnn"
    dataset: str = ""
    scheme: str = "synthetic"
    text_column: str = "text"
    label_column: str = "sentiment"
    keep_negations: bool = True
    test_fraction: float = 0.5
    allow_any_fraction: bool = False
    train_cap: int = 1000
    test_cap: int = 500
    epochs: int = 20
    batch_size: int = 32
    lr: float = 0.01
    seed: int = 0
    gradient_mode: str = "parameter_shift"
    loss: str = "mse"
    embedding_axis: str = "x"
    fuzzy_block_count: int = 4
    layer2_extra_ry: bool = False
    synthetic_n: int = 200
    synthetic_margin: float = 0.2
    noise_channels: tuple[str, ...] = ch.CHANNEL_LABELS
    noise_placement: str = "after_each_layer"
    noise_qubits: str = "all"
    noise_grid: tuple[float, ...] = ch.DEFAULT_GRID
    noise_mode: str = "eval"  # "eval": train clean, evaluate noisy; "train": train and evaluate noisy
    output_dir: str = "runs/latest"

    def __post_init__(self):
        if self.model not in MODELS:
            raise QFuzzyError(f"unknown model {self.model!r}; expected one of {MODELS}", code="bad-config")
        if self.scheme not in tp.DATASET_SCHEMES:
            raise QFuzzyError(f"unknown scheme {self.scheme!r}", code="bad-config")
        if self.train_cap < 1 or self.test_cap < 1:
            raise QFuzzyError("caps must be positive", code="bad-config")
        if not 0 < self.test_fraction < 1:
            raise QFuzzyError("test_fraction must lie in (0, 1)", code="bad-config")
        if not self.allow_any_fraction and self.test_fraction not in TEST_FRACTIONS:
            raise QFuzzyError(f"test_fraction must be one of {TEST_FRACTIONS} unless allow_any_fraction is set",
                              code="bad-config")
        if self.noise_mode not in ("eval", "train"):
            raise QFuzzyError(f"noise_mode must be eval or train, got {self.noise_mode!r}", code="bad-config")
        if self.scheme != "synthetic" and not self.dataset:
            raise QFuzzyError(f"scheme {self.scheme} needs a dataset path", code="bad-config")
        for label in self.noise_channels:
            if label not in ch.CHANNEL_LABELS:
                raise QFuzzyError(f"unknown noise channel {label!r}", code="bad-config")

    @property
    def feature_dim(self) -> int:
        return 4 if self.model in ("hqnn", "hfnn") else 2

    def train_config(self) -> TrainConfig:
        return TrainConfig(self.epochs, self.batch_size, self.lr, self.seed, self.gradient_mode, self.loss)

    def qfnn_spec(self) -> md.QfnnCircuitSpec:
        return md.QfnnCircuitSpec(self.embedding_axis, self.fuzzy_block_count, True, self.layer2_extra_ry)

    def placement(self) -> ch.NoisePlacement:
        qubits = "all" if self.noise_qubits == "all" else tuple(int(q) for q in self.noise_qubits.split(","))
        return ch.NoisePlacement(self.noise_placement, qubits)

    def to_text(self) -> str:
        return "".join(f"{f.name} = {_format_value(getattr(self, f.name))}\n" for f in dataclasses.fields(self))

    @classmethod
    def from_mapping(cls, values: dict[str, str], base: "ExperimentConfig | None" = None) -> "ExperimentConfig":
        base = base or cls()
        known = {f.name: f for f in dataclasses.fields(cls)}
        updates = {}
        for key, raw in values.items():
            key = key.strip().replace("-", "_")
            if key not in known:
                raise QFuzzyError(f"unknown config key {key!r}", code="bad-config")
            updates[key] = _coerce(getattr(base, key), str(raw).strip(), key)
        return dataclasses.replace(base, **updates)

    @classmethod
    def from_file(cls, path: str | Path, overrides: dict[str, str] | None = None) -> "ExperimentConfig":
        values = parse_key_values(Path(path).read_text(encoding="utf-8"))
        values.update(overrides or {})
        return cls.from_mapping(values)


def parse_key_values(text: str) -> dict[str, str]:
    values = {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise QFuzzyError(f"config line {n} is not key = value: {raw!r}", code="bad-config")
        values[key.strip()] = value.strip()
    return values


def _format_value(v: Any) -> str:
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, tuple):
        return ",".join(_format_value(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _coerce(template: Any, raw: str, key: str) -> Any:
    try:
        if isinstance(template, bool):
            if raw.lower() not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(raw)
            return raw.lower() in ("true", "1", "yes")
        if isinstance(template, int):
            return int(raw)
        if isinstance(template, float):
            return float(raw)
        if isinstance(template, tuple):
            items = [x.strip() for x in raw.split(",") if x.strip()]
            if template and isinstance(template[0], float):
                return tuple(float(x) for x in items)
            return tuple(x.upper() for x in items)
        return raw
    except ValueError:
        raise QFuzzyError(f"bad value for {key}: {raw!r}", code="bad-config") from None


# -- data -------------------------------------------------------------------


@dataclass
class Dataset:
    """Usable rows after label mapping and cleaning; ``ids`` index the source file."""

    ids: np.ndarray
    labels: np.ndarray
    tokens: list[list[str]] | None = None
    features: np.ndarray | None = None
    dropped: dict[str, int] = field(default_factory=dict)


def gen_synthetic(n: int = 200, margin: float = 0.2, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Balanced 2-feature points with ``|f1 - f0| >= margin``; label 1 iff f1 > f0."""
    if n < 10 or n % 2 or not 0 < margin < 0.5:
        raise QFuzzyError("gen_synthetic needs even n >= 10 and margin in (0, 0.5)", code="invalid-args")
    rng = np.random.default_rng(seed)
    per_class = n // 2
    pools: dict[int, list[np.ndarray]] = {0: [], 1: []}
    while min(len(p) for p in pools.values()) < per_class:
        for pt in rng.random((4 * n, 2)):
            diff = pt[1] - pt[0]
            if abs(diff) >= margin:
                pool = pools[int(diff > 0)]
                if len(pool) < per_class:
                    pool.append(pt)
    X = np.concatenate([np.array(pools[0]), np.array(pools[1])])
    y = np.repeat([0, 1], per_class)
    order = rng.permutation(n)
    return X[order], y[order]


POSITIVE_WORDS = ("great", "love", "happy", "excellent", "wonderful", "amazing", "good", "best", "awesome",
                  "enjoy", "hope", "thank", "brilliant", "safe", "support")
NEGATIVE_WORDS = ("bad", "terrible", "awful", "hate", "worst", "horrible", "sad", "poor", "angry", "fear",
                  "panic", "crisis", "scary", "broken", "death")
FILLER_WORDS = ("covid", "vaccine", "store", "today", "people", "home", "news", "week", "price", "market",
                "food", "online", "shop", "town", "work")
_CVTD_LABELS = {0: ("Negative", "Extremely Negative"), 1: ("Positive", "Extremely Positive")}


def gen_synthetic_text(n: int = 200, seed: int = 0, scheme: str = "generic",
                       neutral_fraction: float = 0.0) -> list[tuple[str, str]]:
    """Synthetic tweets from two disjoint sentiment vocabularies plus shared filler.

    ``n`` counts the polar rows (balanced); neutral rows (filler only) are
    added on top for the CVTD scheme.
    """
    if n < 10 or n % 2:
        raise QFuzzyError("gen_synthetic_text needs even n >= 10", code="invalid-args")
    rng = np.random.default_rng(seed)
    rows = []
    labels = np.repeat([0, 1], n // 2)[rng.permutation(n)]
    for label in labels:
        vocab = POSITIVE_WORDS if label == 1 else NEGATIVE_WORDS
        words = list(rng.choice(vocab, size=rng.integers(2, 6)))
        words += list(rng.choice(FILLER_WORDS, size=rng.integers(1, 5)))
        words = [words[i] for i in rng.permutation(len(words))]
        text = "the " + " ".join(words) + ("!" if rng.random() < 0.5 else ".")
        if scheme == "CVTD":
            tag = str(rng.choice(_CVTD_LABELS[int(label)]))
        else:
            tag = str(int(label))
        rows.append((text, tag))
    if scheme == "CVTD":
        for _ in range(int(round(neutral_fraction * n))):
            words = rng.choice(FILLER_WORDS, size=rng.integers(2, 6))
            rows.insert(int(rng.integers(0, len(rows) + 1)), ("just " + " ".join(words), "Neutral"))
    return rows


def write_text_csv(path: str | Path, rows: Sequence[tuple[str, str]], text_column="text", label_column="sentiment"):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([text_column, label_column])
        writer.writerows(rows)


def write_numeric_csv(path: str | Path, X: np.ndarray, y: np.ndarray):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([f"f{i}" for i in range(X.shape[1])] + ["label"])
        for row, label in zip(X, y):
            writer.writerow([repr(float(v)) for v in row] + [int(label)])


def _read_rows(path: str | Path) -> list[dict[str, str]]:
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            lines = (ln for ln in fh if not ln.startswith("#"))
            return list(csv.DictReader(lines))
    except OSError as exc:
        raise DatasetError(f"cannot read {path}: {exc}", code="io-error") from exc
    except UnicodeDecodeError as exc:
        raise DatasetError(f"{path} is not UTF-8: {exc}", code="io-error") from exc


def load_dataset(cfg: ExperimentConfig) -> Dataset:
    if cfg.scheme == "synthetic":
        if cfg.dataset:
            rows = _read_rows(cfg.dataset)
            if not rows or "label" not in rows[0]:
                raise DatasetError("synthetic CSV needs f0..fk and label columns", code="schema-mismatch")
            cols = sorted((c for c in rows[0] if c.startswith("f") and c[1:].isdigit()), key=lambda c: int(c[1:]))
            X = np.array([[float(r[c]) for c in cols] for r in rows])
            y = np.array([tp.binarize_label(r["label"], "synthetic") for r in rows])
        else:
            X, y = gen_synthetic(cfg.synthetic_n, cfg.synthetic_margin, cfg.seed)
        if X.shape[1] < cfg.feature_dim:
            # numeric benchmark for the 4-input hybrids: repeat the two features
            X = np.tile(X, (1, math.ceil(cfg.feature_dim / X.shape[1])))[:, :cfg.feature_dim]
        return Dataset(np.arange(len(y)), y.astype(int), features=X[:, :cfg.feature_dim])

    rows = _read_rows(cfg.dataset)
    if rows and (cfg.text_column not in rows[0] or cfg.label_column not in rows[0]):
        raise DatasetError(f"expected columns {cfg.text_column!r} and {cfg.label_column!r}, got {list(rows[0])}",
                           code="schema-mismatch")
    ids, labels, tokens = [], [], []
    dropped = {"neutral": 0, "empty_text": 0}
    for i, row in enumerate(rows):
        label = tp.binarize_label(row[cfg.label_column], cfg.scheme)
        if label is None:
            dropped["neutral"] += 1
            continue
        toks = tp.preprocess(row[cfg.text_column] or "", cfg.keep_negations)
        if not toks:
            dropped["empty_text"] += 1
            continue
        ids.append(i)
        labels.append(label)
        tokens.append(toks)
    return Dataset(np.array(ids, dtype=int), np.array(labels, dtype=int), tokens=tokens, dropped=dropped)


def split_indices(n: int, test_fraction: float, seed: int, train_cap: int, test_cap: int) -> tuple[np.ndarray, np.ndarray]:
    """Seeded shuffle, split, then cap each side to its first rows."""
    order = np.random.default_rng(seed).permutation(n)
    n_test = int(round(n * test_fraction))
    return order[n_test:][:train_cap], order[:n_test][:test_cap]


@dataclass
class Prepared:
    X_train: np.ndarray
    y_train: np.ndarray
    X_test: np.ndarray
    y_test: np.ndarray
    train_ids: np.ndarray
    test_ids: np.ndarray
    stats: tp.CorpusStats | None
    dropped: dict[str, int]


def prepare(cfg: ExperimentConfig, data: Dataset | None = None) -> Prepared:
    data = load_dataset(cfg) if data is None else data
    train_idx, test_idx = split_indices(len(data.labels), cfg.test_fraction, cfg.seed, cfg.train_cap, cfg.test_cap)
    y_train, y_test = data.labels[train_idx], data.labels[test_idx]
    for name, y in (("train", y_train), ("test", y_test)):
        if len(np.unique(y)) < 2:
            raise DatasetError(f"{name} split has {len(y)} rows but only one class present", code="empty-class")
    stats = None
    if data.tokens is not None:
        train_tokens = [data.tokens[i] for i in train_idx]
        stats = tp.fit_corpus_stats(train_tokens, y_train, cfg.feature_dim)
        X_train = np.array([tp.extract_features(t, stats) for t in train_tokens])
        X_test = np.array([tp.extract_features(data.tokens[i], stats) for i in test_idx])
    else:
        X_train, X_test = data.features[train_idx], data.features[test_idx]
    return Prepared(X_train, y_train, X_test, y_test, data.ids[train_idx], data.ids[test_idx], stats, data.dropped)


# -- running ----------------------------------------------------------------


@dataclass
class RunResult:
    config: ExperimentConfig
    history: list[dict]
    metrics: dict
    roc: mt.RocCurve | None
    seconds: float
    sweep: list[dict] | None = None
    output_dir: Path | None = None
    params: np.ndarray | None = None
    prepared: Prepared | None = None


def _fit(cfg: ExperimentConfig, prep: Prepared, noise=None):
    model = md.make_model(cfg.model, cfg.qfnn_spec(), noise)
    result = train(model, prep.X_train, prep.y_train, cfg.train_config(), prep.X_test, prep.y_test)
    return model, result


def _scores(model, params, X, noise=None) -> np.ndarray:
    if isinstance(model, md.CfModel):
        return model.scores(X)
    if noise is not None:
        return model.scores(params, X, noise=noise)
    return model.scores(params, X)


def evaluate_scores(scores, labels) -> tuple[dict, mt.RocCurve | None]:
    counts = mt.confusion(scores, labels, 0.5)
    summ = mt.summary(counts)
    roc = mt.roc_auc(scores, labels) if len(np.unique(labels)) == 2 else None
    out = {
        "format": METRICS_FORMAT,
        "threshold": 0.5,
        "n": counts.total,
        "confusion": dataclasses.asdict(counts),
        "metrics": {k: summ[k] for k in mt.SUMMARY_FIELDS},
        "undefined": summ["undefined"],
        "auc": roc.auc if roc is not None else None,
    }
    return out, roc


def _write_csv(path: Path, tag: str, header: Sequence[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# format: {tag}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _fmt(v) -> str:
    return repr(float(v)) if isinstance(v, (float, np.floating)) else str(v)


def save_model(path: Path, model, params) -> None:
    if isinstance(model, md.CfModel):
        path.write_text(dump_rulebase(model.rulebase, model.and_op), encoding="utf-8")
    else:
        path.write_text(md.dump_params(model.name, model.tensors(params), model.options()), encoding="utf-8")


def load_model(path: Path):
    text = Path(path).read_text(encoding="utf-8")
    if text.startswith("format = "):
        rules, and_op = load_rulebase(text)
        return md.CfModel(rules, and_op), None
    name, options, tensors = md.load_params(text)
    if name == "qfnn":
        spec = md.QfnnCircuitSpec(options.get("embedding_axis", "x"), int(options.get("fuzzy_block_count", 4)),
                                  options.get("cz_after_each_fuzzy_block", "true") == "true",
                                  options.get("layer2_extra_ry", "false") == "true")
        model = md.QfnnModel(spec)
    else:
        model = md.make_model(name)
    return model, model.from_tensors(tensors)


def _export(out: Path, cfg: ExperimentConfig, prep: Prepared, model, params, history, scores, metrics, roc):
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.txt").write_text(cfg.to_text(), encoding="utf-8")
    (out / "metrics.json").write_text(json.dumps(metrics, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    keys = ("epoch", "loss", "train_acc", "test_acc")
    _write_csv(out / "history.csv", HISTORY_FORMAT, keys, ([_fmt(row[k]) for k in keys] for row in history))
    preds = (scores >= 0.5).astype(int)
    _write_csv(out / "predictions.csv", PREDICTIONS_FORMAT, ("row_id", "label", "score", "prediction"),
               ([int(i), int(lab), _fmt(s), int(p)] for i, lab, s, p in zip(prep.test_ids, prep.y_test, scores, preds)))
    if roc is not None:
        _write_csv(out / "roc.csv", ROC_FORMAT, ("fpr", "tpr"), ([_fmt(f), _fmt(t)] for f, t in roc.points))
    save_model(out / "model.txt", model, params)
    if prep.stats is not None:
        (out / "corpus.json").write_text(json.dumps(prep.stats.to_json(), sort_keys=True) + "\n", encoding="utf-8")


def run_experiment(cfg: ExperimentConfig, write: bool = True) -> RunResult:
    start = time.perf_counter()
    prep = prepare(cfg)
    model, result = _fit(cfg, prep)
    scores = _scores(model, result.params, prep.X_test)
    metrics, roc = evaluate_scores(scores, prep.y_test)
    metrics.update(model=cfg.model, scheme=cfg.scheme, n_train=int(len(prep.y_train)), n_test=int(len(prep.y_test)),
                   dropped=prep.dropped)
    out = Path(cfg.output_dir)
    if write:
        _export(out, cfg, prep, model, result.params, result.history, scores, metrics, roc)
    seconds = time.perf_counter() - start
    if write:
        (out / "run_info.json").write_text(json.dumps({"seconds": seconds}) + "\n", encoding="utf-8")
    return RunResult(cfg, result.history, metrics, roc, seconds, None, out if write else None, result.params, prep)


def run_noise_sweep(cfg: ExperimentConfig, write: bool = True) -> RunResult:
    """Accuracy of the QFNN for every (channel, p) in the configured grid."""
    if cfg.model != "qfnn":
        raise QFuzzyError(f"noise sweeps need the qfnn model, got {cfg.model}", code="unsupported-model")
    start = time.perf_counter()
    placement = cfg.placement()
    placement.validate(2)
    prep = prepare(cfg)
    model, result = _fit(cfg, prep)
    clean = _scores(model, result.params, prep.X_test)
    metrics, roc = evaluate_scores(clean, prep.y_test)
    rows = []
    for label in cfg.noise_channels:
        for p in cfg.noise_grid:
            noise = (ch.make_channel(label, p), placement)
            params = result.params
            if cfg.noise_mode == "train":
                params = _fit(cfg, prep, noise)[1].params
            noisy = model.scores(params, prep.X_test, noise=noise)
            rows.append({"channel": label, "p": float(p), "accuracy": accuracy(noisy, prep.y_test)})
    metrics.update(model=cfg.model, scheme=cfg.scheme, n_train=int(len(prep.y_train)), n_test=int(len(prep.y_test)),
                   dropped=prep.dropped, noise_mode=cfg.noise_mode, noise_placement=cfg.noise_placement)
    out = Path(cfg.output_dir)
    if write:
        _export(out, cfg, prep, model, result.params, result.history, clean, metrics, roc)
        _write_csv(out / "sweep.csv", SWEEP_FORMAT, ("channel", "p", "accuracy"),
                   ([r["channel"], _fmt(r["p"]), _fmt(r["accuracy"])] for r in rows))
    seconds = time.perf_counter() - start
    if write:
        (out / "run_info.json").write_text(json.dumps({"seconds": seconds}) + "\n", encoding="utf-8")
    return RunResult(cfg, result.history, metrics, roc, seconds, rows, out if write else None, result.params, prep)


def evaluate_run(run_dir: str | Path, cfg: ExperimentConfig) -> tuple[dict, np.ndarray, Dataset]:
    """Score every usable row of ``cfg.dataset`` with a saved model."""
    run_dir = Path(run_dir)
    model, params = load_model(run_dir / "model.txt")
    data = load_dataset(cfg)
    if data.tokens is not None:
        corpus = run_dir / "corpus.json"
        if not corpus.exists():
            raise DatasetError(f"{corpus} missing; text datasets need the training corpus stats", code="io-error")
        stats = tp.CorpusStats.from_json(json.loads(corpus.read_text(encoding="utf-8")))
        X = np.array([tp.extract_features(t, stats) for t in data.tokens])
    else:
        X = data.features
    if X.shape[1] != model.input_dim:
        raise DatasetError(f"model takes {model.input_dim} features, data has {X.shape[1]}", code="schema-mismatch")
    scores = _scores(model, params, X)
    metrics, _ = evaluate_scores(scores, data.labels)
    metrics.update(model=model.name, n=int(len(data.labels)), dropped=data.dropped)
    return metrics, scores, data


def write_preprocessed(path: str | Path, cfg: ExperimentConfig) -> Prepared:
    """Tokens and features for both splits, stats fitted on the training split."""
    data = load_dataset(cfg)
    if data.tokens is None:
        raise QFuzzyError("preprocess works on text schemes", code="bad-config")
    prep = prepare(cfg, data)
    dim = cfg.feature_dim
    pos = {int(i): k for k, i in enumerate(data.ids)}
    rows = []
    for split, ids, X, y in (("train", prep.train_ids, prep.X_train, prep.y_train),
                             ("test", prep.test_ids, prep.X_test, prep.y_test)):
        for i, feats, label in zip(ids, X, y):
            rows.append([" ".join(data.tokens[pos[int(i)]])] + [_fmt(v) for v in feats] + [int(label), split])
    _write_csv(Path(path), DATASET_FORMAT, ["token_list"] + [f"f{i}" for i in range(dim)] + ["label", "split"], rows)
    return prep
