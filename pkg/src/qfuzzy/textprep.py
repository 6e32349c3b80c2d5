"""Text cleaning, TF-IDF and per-class word-frequency features."""
from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DatasetError, QFuzzyError, UnknownLabelError
from .fuzzy import WordSentimentTable, fuzzy_membership_score

NEGATIONS = frozenset({"not", "no", "never", "nor", "cannot"})

STOPWORDS = frozenset("""
a about above after again against all am an and any are as at be because been before being below
between both but by can could did do does doing down during each few for from further had has have
having he her here hers herself him himself his how i if in into is it its itself just let me more most
my myself no nor not of off on once only or other our ours ourselves out over own same she should so
some such than that the their theirs them themselves then there these they this those through to too
under until up very was we were what when where which while who whom why will with would you your
yours yourself yourselves also us get got im ive may might must shall via amp rt never cannot
""".split())

CONTRACTIONS = {
    "can't": "cannot", "won't": "will not", "shan't": "shall not", "ain't": "is not",
    "let's": "let us", "i'm": "i am", "it's": "it is", "that's": "that is", "what's": "what is",
    "there's": "there is", "he's": "he is", "she's": "she is", "who's": "who is",
    "y'all": "you all", "ma'am": "madam", "o'clock": "of the clock",
}
_SUFFIX_CONTRACTIONS = (("n't", " not"), ("'re", " are"), ("'ve", " have"), ("'ll", " will"),
                        ("'d", " would"), ("'m", " am"), ("'s", ""))

_URL = re.compile(r"(https?://\S+|www\.\S+)")
_MENTION = re.compile(r"@\w+")
_APOS = re.compile(r"[‘’ʼ`]")
_WORD_WITH_APOS = re.compile(r"[a-z]+(?:'[a-z]+)+")
_NON_ALPHA = re.compile(r"[^a-z]+")
_VOWEL = re.compile(r"[aeiouy]")

DATASET_SCHEMES = ("CVTD", "GSTD", "generic", "synthetic")
FEATURE_DIMS = (2, 4)


@dataclass(frozen=True)
class RawRecord:
    text: str
    label: str


def _expand(match: re.Match) -> str:
    word = match.group(0)
    if word in CONTRACTIONS:
        return CONTRACTIONS[word]
    for suffix, repl in _SUFFIX_CONTRACTIONS:
        if word.endswith(suffix):
            return word[: -len(suffix)] + repl
    return word.replace("'", "")


def _strip_double(word: str) -> str:
    if len(word) > 3 and word[-1] == word[-2] and word[-1] not in "aeioulsz":
        return word[:-1]
    return word


def _stem_once(word: str) -> str:
    if word in NEGATIONS:
        return word
    if word.endswith("sses"):
        return word[:-2]
    if word.endswith("ies") and len(word) > 4:
        return word[:-3] + "y"
    if word.endswith("s") and not word.endswith(("ss", "us", "is")) and len(word) > 3:
        return word[:-1]
    if word.endswith("ing") and len(word) > 5 and _VOWEL.search(word[:-3]):
        return _strip_double(word[:-3])
    if word.endswith("ed") and len(word) > 4 and _VOWEL.search(word[:-2]):
        return _strip_double(word[:-2])
    if word.endswith("ly") and len(word) > 4:
        return word[:-2]
    return word


def stem(word: str) -> str:
    """Suffix-stripping stemmer (plural / -ed / -ing / -ly), iterated to a fixpoint."""
    while True:
        nxt = _stem_once(word)
        if nxt == word:
            return word
        word = nxt


def _is_stopword(word: str, keep_negations: bool) -> bool:
    if keep_negations and word in NEGATIONS:
        return False
    return word in STOPWORDS or len(word) < 2


def preprocess(raw: RawRecord | str, keep_negations: bool = True) -> list[str]:
    """Clean, expand, drop stopwords and stem; token order is preserved."""
    text = raw.text if isinstance(raw, RawRecord) else raw
    text = _APOS.sub("'", text.lower())
    text = _URL.sub(" ", text)
    text = _MENTION.sub(" ", text)
    text = _WORD_WITH_APOS.sub(_expand, text)
    text = _NON_ALPHA.sub(" ", text)
    tokens = []
    for word in text.split():
        if _is_stopword(word, keep_negations):
            continue
        word = stem(word)
        if not _is_stopword(word, keep_negations):
            tokens.append(word)
    return tokens


def term_frequency(token: str, tokens: Sequence[str]) -> float:
    if not tokens:
        raise QFuzzyError("term frequency of an empty document", code="empty-token-list")
    return tokens.count(token) / len(tokens)


@dataclass(frozen=True)
class CorpusStats:
    """Document and class counts from the training split.

    Build with :func:`fit_corpus_stats`; the feature range is only known
    after a fit, so instances are not meant to be assembled by hand.
    """

    doc_count: int
    doc_freq: Mapping[str, int]
    class_freq: Mapping[str, tuple[int, int]]
    dim: int
    feature_min: tuple[float, ...]
    feature_max: tuple[float, ...]
    max_length: int
    table: WordSentimentTable = field(repr=False)

    def to_json(self) -> dict:
        return {
            "format": "qfuzzy-corpus/1",
            "doc_count": self.doc_count,
            "dim": self.dim,
            "max_length": self.max_length,
            "feature_min": list(self.feature_min),
            "feature_max": list(self.feature_max),
            "doc_freq": dict(sorted(self.doc_freq.items())),
            "class_freq": {w: list(c) for w, c in sorted(self.class_freq.items())},
        }

    @classmethod
    def from_json(cls, data: dict) -> "CorpusStats":
        if data.get("format") != "qfuzzy-corpus/1":
            raise QFuzzyError(f"unsupported corpus format {data.get('format')!r}", code="schema-mismatch")
        class_freq = {w: (int(c[0]), int(c[1])) for w, c in data["class_freq"].items()}
        return cls(int(data["doc_count"]), {w: int(v) for w, v in data["doc_freq"].items()}, class_freq,
                   int(data["dim"]), tuple(data["feature_min"]), tuple(data["feature_max"]),
                   int(data["max_length"]), WordSentimentTable.from_counts(class_freq))


def _idf(token: str, doc_count: int, doc_freq: Mapping[str, int]) -> float:
    if doc_count < 1:
        raise QFuzzyError("IDF needs at least one document", code="empty-dataset")
    # add-1 smoothing keeps unseen tokens finite; clamp keeps ubiquitous ones at 0
    return max(0.0, math.log(doc_count / (1 + doc_freq.get(token, 0))))


def inverse_document_frequency(token: str, stats: CorpusStats) -> float:
    return _idf(token, stats.doc_count, stats.doc_freq)


def _tfidf(tokens: Sequence[str], doc_count: int, doc_freq: Mapping[str, int]) -> dict[str, float]:
    return {t: term_frequency(t, tokens) * _idf(t, doc_count, doc_freq) for t in dict.fromkeys(tokens)}


def tfidf(tokens: Sequence[str], stats: CorpusStats) -> dict[str, float]:
    return _tfidf(tokens, stats.doc_count, stats.doc_freq) if tokens else {}


def _word_weights(tokens: Sequence[str], doc_count: int, doc_freq: Mapping[str, int]) -> list[float]:
    scores = _tfidf(tokens, doc_count, doc_freq)
    per_token = [scores[t] / tokens.count(t) for t in tokens]
    total = sum(per_token)
    if total <= 0:
        return [1.0 / len(tokens)] * len(tokens)
    return [w / total for w in per_token]


def word_weights(tokens: Sequence[str], stats: CorpusStats) -> list[float]:
    """Per-position weights: TF-IDF normalized to sum 1 over the utterance."""
    return _word_weights(tokens, stats.doc_count, stats.doc_freq) if tokens else []


def _raw_features(tokens: Sequence[str], doc_count: int, doc_freq, table, dim: int, max_length: int) -> np.ndarray:
    out = np.zeros(dim)
    if not tokens:
        return out
    weights = _word_weights(tokens, doc_count, doc_freq)
    out[0] = fuzzy_membership_score(tokens, table, 0, weights)
    out[1] = fuzzy_membership_score(tokens, table, 1, weights)
    if dim == 4:
        out[2] = len(tokens) / max(1, max_length)
        out[3] = float(np.mean([_idf(t, doc_count, doc_freq) for t in tokens]))
    return out


def fit_corpus_stats(token_lists: Sequence[Sequence[str]], labels: Sequence[int], dim: int = 2) -> CorpusStats:
    if dim not in FEATURE_DIMS:
        raise QFuzzyError(f"feature dim must be one of {FEATURE_DIMS}", code="bad-dim")
    if len(token_lists) != len(labels):
        raise QFuzzyError("tokens and labels differ in length", code="length-mismatch")
    if not token_lists:
        raise DatasetError("cannot fit corpus statistics on an empty split", code="empty-dataset")
    doc_freq: Counter = Counter()
    class_counts: dict[str, list[int]] = {}
    for tokens, label in zip(token_lists, labels):
        doc_freq.update(set(tokens))
        for t in tokens:
            class_counts.setdefault(t, [0, 0])[int(label)] += 1
    class_freq = {w: (c[0], c[1]) for w, c in class_counts.items()}
    table = WordSentimentTable.from_counts(class_freq)
    max_length = max(len(t) for t in token_lists)
    raw = np.array([_raw_features(t, len(token_lists), doc_freq, table, dim, max_length) for t in token_lists])
    return CorpusStats(len(token_lists), dict(doc_freq), class_freq, dim,
                       tuple(float(v) for v in raw.min(axis=0)), tuple(float(v) for v in raw.max(axis=0)),
                       max_length, table)


def extract_features(tokens: Sequence[str], stats: CorpusStats, dim: int | None = None) -> np.ndarray:
    """Min-max normalized features; an empty token list gives the zero vector."""
    dim = stats.dim if dim is None else dim
    if dim != stats.dim:
        raise QFuzzyError(f"stats were fitted for dim {stats.dim}, asked for {dim}", code="bad-dim")
    if not tokens:
        return np.zeros(dim)
    raw = _raw_features(tokens, stats.doc_count, stats.doc_freq, stats.table, dim, stats.max_length)
    lo = np.array(stats.feature_min)
    hi = np.array(stats.feature_max)
    span = np.where(hi > lo, hi - lo, 1.0)
    return (raw - lo) / span


def to_angles(features) -> np.ndarray:
    return math.pi * np.clip(np.asarray(features, dtype=float), 0.0, 1.0)


_CVTD = {"extremely negative": 0, "negative": 0, "positive": 1, "extremely positive": 1, "neutral": None}
_GSTD = {"negative": 0, "0": 0, "positive": 1, "1": 1, "4": 1, "neutral": None, "2": None}
_GENERIC = {"0": 0, "1": 1}


def binarize_label(source: str, scheme: str) -> int | None:
    """Map a source label to 0/1, or None when the row is dropped (neutral)."""
    key = str(source).strip().lower()
    if scheme == "CVTD":
        table = _CVTD
    elif scheme == "GSTD":
        table = _GSTD
    elif scheme in ("generic", "synthetic"):
        table = _GENERIC
        key = key.removesuffix(".0")
    else:
        raise UnknownLabelError(f"unknown dataset scheme {scheme!r}")
    if key not in table:
        raise UnknownLabelError(f"label {source!r} not valid for scheme {scheme}", code="unknown-label-value")
    return table[key]


@dataclass(frozen=True)
class FeatureRecord:
    tokens: tuple[str, ...]
    tfidf: Mapping[str, float]
    features: np.ndarray
    angles: np.ndarray
    label: int


def featurize(token_lists: Iterable[Sequence[str]], labels: Iterable[int], stats: CorpusStats) -> list[FeatureRecord]:
    out = []
    for tokens, label in zip(token_lists, labels):
        feats = extract_features(tokens, stats)
        out.append(FeatureRecord(tuple(tokens), tfidf(tokens, stats), feats, to_angles(feats), int(label)))
    return out
