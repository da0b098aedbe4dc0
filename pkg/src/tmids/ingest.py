"""Trace and KDD-style record ingestion, frequency matrices, synthetic data."""

from __future__ import annotations

import csv
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import IO, Iterable, Mapping, Sequence

import numpy as np

from .errors import ConfigError, ParseError, ValidationError

ABSENT_LABEL = "-"
MODES = ("count", "binary", "normalized", "real")

KDD_FEATURES = (
    # intrinsic
    "duration", "protocol_type", "service", "flag", "src_bytes", "dst_bytes",
    "land", "wrong_fragment", "urgent",
    # content
    "hot", "num_failed_logins", "logged_in", "num_compromised", "root_shell",
    "su_attempted", "num_root", "num_file_creations", "num_shells",
    "num_access_files", "num_outbound_cmds", "is_host_login", "is_guest_login",
    # traffic
    "count", "srv_count", "serror_rate", "srv_serror_rate", "rerror_rate",
    "srv_rerror_rate", "same_srv_rate", "diff_srv_rate", "srv_diff_host_rate",
    "dst_host_count", "dst_host_srv_count", "dst_host_same_srv_rate",
    "dst_host_diff_srv_rate", "dst_host_same_src_port_rate",
    "dst_host_srv_diff_host_rate", "dst_host_serror_rate",
    "dst_host_srv_serror_rate", "dst_host_rerror_rate",
    "dst_host_srv_rerror_rate",
)
KDD_FEATURE_KINDS = ("intrinsic",) * 9 + ("content",) * 13 + ("traffic",) * 19
KDD_SYMBOLIC = (1, 2, 3)
KDD_FIELDS = len(KDD_FEATURES) + 1


@dataclass(frozen=True)
class SyscallTrace:
    trace_id: str
    label: str | None
    calls: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "calls", tuple(self.calls))
        if not self.calls:
            raise ValidationError(f"trace {self.trace_id!r} has no calls")
        if any(not c for c in self.calls):
            raise ValidationError(f"trace {self.trace_id!r} has an empty token")


@dataclass(frozen=True)
class SyscallVocabulary:
    """Sorted, duplicate-free token list with a token -> column lookup."""

    tokens: tuple[str, ...]
    index: Mapping[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        tokens = tuple(self.tokens)
        if len(set(tokens)) != len(tokens):
            raise ValidationError("vocabulary contains duplicate tokens")
        if list(tokens) != sorted(tokens):
            raise ValidationError("vocabulary tokens must be in lexicographic order")
        object.__setattr__(self, "tokens", tokens)
        object.__setattr__(self, "index", {t: i for i, t in enumerate(tokens)})

    @classmethod
    def from_tokens(cls, tokens: Iterable[str]) -> "SyscallVocabulary":
        return cls(tuple(sorted(set(tokens))))

    def __len__(self):
        return len(self.tokens)

    def __contains__(self, token):
        return token in self.index

    def subset(self, columns: Sequence[int]) -> "SyscallVocabulary":
        return SyscallVocabulary(tuple(self.tokens[j] for j in sorted(columns)))


@dataclass(frozen=True, eq=False)
class FrequencyMatrix:
    """Samples x syscalls matrix.

    ``mode`` is one of ``count``, ``binary``, ``normalized`` or ``real``; the
    last holds arbitrary non-negative features such as coded KDD records.
    ``dropped`` counts tokens that fell outside a fixed vocabulary.
    """

    rows: tuple[str, ...]
    vocab: SyscallVocabulary
    mode: str
    values: np.ndarray
    labels: tuple[str | None, ...] | None = None
    dropped: Mapping[str, int] = field(default_factory=dict)

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 2:
            values = values.reshape(len(self.rows), len(self.vocab))
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "rows", tuple(self.rows))
        if self.labels is not None:
            object.__setattr__(self, "labels", tuple(self.labels))
        self._check()

    def _check(self):
        v = self.values
        if self.mode not in MODES:
            raise ValidationError(f"unknown matrix mode {self.mode!r}")
        if v.shape != (len(self.rows), len(self.vocab)):
            raise ValidationError(
                f"values shape {v.shape} does not match "
                f"{len(self.rows)} rows x {len(self.vocab)} columns")
        if self.labels is not None and len(self.labels) != len(self.rows):
            raise ValidationError("labels length does not match row count")
        if len(set(self.rows)) != len(self.rows):
            raise ValidationError("duplicate sample identifiers")
        if not np.all(np.isfinite(v)) or np.any(v < 0):
            raise ValidationError("matrix values must be finite and non-negative")
        if self.mode == "count" and np.any(v != np.round(v)):
            raise ValidationError("count matrix has non-integer entries")
        if self.mode == "binary" and np.any((v != 0) & (v != 1)):
            raise ValidationError("binary matrix has entries outside {0, 1}")
        if self.mode == "normalized" and v.size:
            sums = v.sum(axis=1)
            nz = sums > 0
            if np.any(np.abs(sums[nz] - 1.0) > 1e-9):
                raise ValidationError("normalized rows must sum to 1")

    @property
    def shape(self):
        return self.values.shape

    def zero_rows(self) -> list[str]:
        return [r for r, s in zip(self.rows, self.values.sum(axis=1)) if s == 0]

    def label_list(self) -> list[str | None]:
        return list(self.labels) if self.labels is not None else [None] * len(self.rows)

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "vocab": list(self.vocab.tokens),
            "rows": list(self.rows),
            "labels": list(self.labels) if self.labels is not None else None,
            "values": self.values.tolist(),
            "dropped": dict(sorted(self.dropped.items())),
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "FrequencyMatrix":
        vocab = SyscallVocabulary(tuple(d["vocab"]))
        values = np.array(d["values"], dtype=float).reshape(len(d["rows"]), len(vocab))
        return cls(tuple(d["rows"]), vocab, d["mode"], values,
                   None if d.get("labels") is None else tuple(d["labels"]),
                   dict(d.get("dropped") or {}))


@dataclass(frozen=True, eq=False)
class LabeledRecordSet:
    record_ids: tuple[str, ...]
    features: np.ndarray
    labels: tuple[str, ...]
    feature_kinds: tuple[str, ...] = KDD_FEATURE_KINDS
    feature_names: tuple[str, ...] = KDD_FEATURES
    codings: Mapping[str, Mapping[str, int]] = field(default_factory=dict)

    def __post_init__(self):
        kinds = Counter(self.feature_kinds)
        if (kinds["intrinsic"], kinds["content"], kinds["traffic"]) != (9, 13, 19):
            raise ValidationError("feature kinds must be 9 intrinsic, 13 content, 19 traffic")
        if self.features.shape != (len(self.labels), len(self.feature_kinds)):
            raise ValidationError("feature matrix shape does not match labels")
        if len(set(self.labels)) > 5:
            raise ValidationError(
                f"at most 5 classes allowed, got {sorted(set(self.labels))}")

    def to_matrix(self) -> FrequencyMatrix:
        """View the records as a ``real``-mode matrix.

        Columns are named ``fNN_<feature>`` so lexicographic vocabulary order
        keeps the original feature order.
        """
        names = tuple(f"f{j:02d}_{n}" for j, n in enumerate(self.feature_names))
        return FrequencyMatrix(self.record_ids, SyscallVocabulary(names), "real",
                               self.features, self.labels)


# -- trace format -----------------------------------------------------------

def parse_trace_file(stream: IO[str]) -> list[SyscallTrace]:
    """Parse ``<trace_id> <label|-> <token> [<token> ...]`` lines."""
    traces = []
    seen = {}
    for lineno, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) < 3:
            raise ParseError(
                f"expected '<trace_id> <label|-> <token> ...', got {len(parts)} field(s)",
                lineno)
        tid, label, calls = parts[0], parts[1], parts[2:]
        if tid in seen:
            raise ValidationError(
                f"duplicate trace_id {tid!r} on lines {seen[tid]} and {lineno}")
        seen[tid] = lineno
        traces.append(SyscallTrace(tid, None if label == ABSENT_LABEL else label, tuple(calls)))
    return traces


def format_trace(trace: SyscallTrace) -> str:
    label = ABSENT_LABEL if trace.label is None else trace.label
    return " ".join((trace.trace_id, label, *trace.calls))


def write_trace_file(traces: Iterable[SyscallTrace], stream: IO[str]) -> None:
    for t in traces:
        stream.write(format_trace(t) + "\n")


# -- KDD-style CSV ----------------------------------------------------------

def _strip_label(label: str) -> str:
    label = label.strip()
    return label[:-1] if label.endswith(".") else label


def parse_kdd_csv(stream: IO[str], category_map: Mapping[str, str] | None = None,
                  codings: Mapping[str, Mapping[str, int]] | None = None,
                  id_prefix: str = "r") -> LabeledRecordSet:
    """Parse 42-field KDD-Cup-99-style rows.

    Symbolic columns (protocol, service, flag) are coded 1, 2, ... in order of
    first appearance, so every coded value counts as present. Labels lose a
    trailing period and pass through ``category_map`` (identity when None).
    Pass the ``codings`` of an earlier set to code a second file (e.g. a test
    split) consistently with it.
    """
    cmap = None
    if category_map is not None:
        cmap = {_strip_label(k): v for k, v in category_map.items()}
    codings = {KDD_FEATURES[j]: dict((codings or {}).get(KDD_FEATURES[j], {}))
               for j in KDD_SYMBOLIC}
    rows, labels = [], []
    unknown = set()
    for rowno, fields in enumerate(csv.reader(stream), start=1):
        if not fields or (len(fields) == 1 and not fields[0].strip()):
            continue
        if len(fields) != KDD_FIELDS:
            raise ParseError(f"expected {KDD_FIELDS} fields, got {len(fields)}", rowno)
        vals = []
        for j, raw in enumerate(fields[:-1]):
            raw = raw.strip()
            if j in KDD_SYMBOLIC:
                table = codings[KDD_FEATURES[j]]
                vals.append(float(table.setdefault(raw, len(table) + 1)))
                continue
            try:
                x = float(raw)
            except ValueError:
                raise ParseError(f"field {j + 1} ({KDD_FEATURES[j]}) is not numeric: {raw!r}",
                                 rowno) from None
            if not math.isfinite(x) or x < 0:
                raise ParseError(f"field {j + 1} ({KDD_FEATURES[j]}) must be finite and >= 0",
                                 rowno)
            vals.append(x)
        label = _strip_label(fields[-1])
        if cmap is not None:
            if label not in cmap:
                unknown.add(label)
                continue
            label = cmap[label]
        rows.append(vals)
        labels.append(label)
    if unknown:
        raise ValidationError(f"labels missing from category map: {sorted(unknown)}")
    if not rows:
        raise ParseError("no records")
    features = np.array(rows, dtype=float)
    ids = tuple(f"{id_prefix}{i:06d}" for i in range(1, len(rows) + 1))
    return LabeledRecordSet(ids, features, tuple(labels), codings=codings)


# -- matrix construction ----------------------------------------------------

def build_matrix(traces: Sequence[SyscallTrace], mode: str = "count",
                 vocab: SyscallVocabulary | None = None) -> FrequencyMatrix:
    if not traces:
        raise ValidationError("no traces")
    if mode not in ("count", "binary", "normalized"):
        raise ValidationError(f"unsupported trace matrix mode {mode!r}")
    if vocab is None:
        vocab = SyscallVocabulary.from_tokens(c for t in traces for c in t.calls)
    values = np.zeros((len(traces), len(vocab)))
    dropped = Counter()
    for i, t in enumerate(traces):
        for tok, n in Counter(t.calls).items():
            j = vocab.index.get(tok)
            if j is None:
                dropped[tok] += n
            else:
                values[i, j] = n
    if mode == "binary":
        values = (values > 0).astype(float)
    elif mode == "normalized":
        sums = values.sum(axis=1, keepdims=True)
        values = np.divide(values, sums, out=np.zeros_like(values), where=sums > 0)
    return FrequencyMatrix(tuple(t.trace_id for t in traces), vocab, mode, values,
                           tuple(t.label for t in traces), dict(dropped))


# -- synthetic traces -------------------------------------------------------

@dataclass(frozen=True)
class TokenProfile:
    rate: float  # per-trace probability that the token appears at all
    weight: float = 1.0  # mean relative frequency once present


@dataclass(frozen=True)
class GeneratorConfig:
    """Per-class syscall profiles for :func:`generate_synthetic`.

    ``jitter`` scales the Gaussian noise applied to each token weight per
    trace.
    """

    classes: Mapping[str, Mapping[str, TokenProfile]]
    samples_per_class: Mapping[str, int]
    length_range: tuple[int, int] = (20, 40)
    jitter: float = 0.1

    @classmethod
    def from_dict(cls, d: Mapping) -> "GeneratorConfig":
        try:
            raw_classes = d["classes"]
        except (KeyError, TypeError):
            raise ConfigError("generator config needs a 'classes' table") from None
        if not raw_classes:
            raise ConfigError("generator config declares zero classes")
        classes = {}
        for label, profile in raw_classes.items():
            tokens = {}
            for tok, spec in profile.items():
                if isinstance(spec, Mapping):
                    tokens[tok] = TokenProfile(float(spec["rate"]), float(spec.get("weight", 1.0)))
                else:
                    tokens[tok] = TokenProfile(float(spec))
            classes[label] = tokens
        spc = d.get("samples_per_class", 10)
        if isinstance(spc, Mapping):
            spc = {label: int(spc.get(label, 0)) for label in classes}
        else:
            spc = {label: int(spc) for label in classes}
        lo, hi = d.get("length", (20, 40))
        cfg = cls(classes, spc, (int(lo), int(hi)), float(d.get("jitter", 0.1)))
        cfg.validate()
        return cfg

    def to_dict(self) -> dict:
        return {
            "classes": {
                label: {t: {"rate": p.rate, "weight": p.weight} for t, p in prof.items()}
                for label, prof in self.classes.items()
            },
            "samples_per_class": dict(self.samples_per_class),
            "length": list(self.length_range),
            "jitter": self.jitter,
        }

    def validate(self):
        if not self.classes:
            raise ConfigError("generator config declares zero classes")
        if sum(self.samples_per_class.values()) <= 0:
            raise ConfigError("generator config requests zero samples")
        lo, hi = self.length_range
        if not 1 <= lo <= hi:
            raise ConfigError(f"bad trace length range {self.length_range}")
        if self.jitter < 0:
            raise ConfigError("jitter must be >= 0")
        for label, prof in self.classes.items():
            if not label or label == ABSENT_LABEL or any(ch.isspace() for ch in label):
                raise ConfigError(f"bad class label {label!r}")
            if self.samples_per_class.get(label, 0) < 0:
                raise ConfigError(f"negative sample count for {label!r}")
            if not any(p.rate > 0 and p.weight > 0 for p in prof.values()):
                if self.samples_per_class.get(label, 0) > 0:
                    raise ConfigError(f"class {label!r} can never emit a call")
            for tok, p in prof.items():
                if not tok or any(ch.isspace() for ch in tok):
                    raise ConfigError(f"bad token {tok!r} in class {label!r}")
                if not 0 <= p.rate <= 1 or p.weight < 0:
                    raise ConfigError(f"token {tok!r} in class {label!r}: "
                                      "rate must be in [0, 1] and weight >= 0")


def generate_synthetic(config: GeneratorConfig | Mapping, seed: int) -> list[SyscallTrace]:
    """Draw labeled traces from per-class token profiles; pure in (config, seed)."""
    if not isinstance(config, GeneratorConfig):
        config = GeneratorConfig.from_dict(config)
    config.validate()
    rng = np.random.default_rng(seed)
    lo, hi = config.length_range
    traces = []
    for label, profile in config.classes.items():
        tokens = sorted(t for t, p in profile.items() if p.weight > 0)
        rates = np.array([profile[t].rate for t in tokens])
        weights = np.array([profile[t].weight for t in tokens])
        for j in range(config.samples_per_class[label]):
            length = int(rng.integers(lo, hi + 1))
            present = rng.random(len(tokens)) < rates
            noise = rng.standard_normal(len(tokens))
            if not present.any():
                # keep traces non-empty: fall back to the most likely token
                present[int(np.argmax(rates))] = True
            w = np.where(present, weights * np.maximum(0.0, 1.0 + config.jitter * noise), 0.0)
            if w.sum() == 0:
                w = np.where(present, weights, 0.0)
            idx = list(np.flatnonzero(present))
            extra = max(0, length - len(idx))
            idx += list(rng.choice(len(tokens), size=extra, p=w / w.sum()))
            order = rng.permutation(len(idx))
            calls = tuple(tokens[idx[o]] for o in order)
            traces.append(SyscallTrace(f"{label}-{j:04d}", label, calls))
    return traces


def stratified_split(items: Sequence, labels: Sequence, test_fraction: float, seed: int
                     ) -> tuple[list[int], list[int]]:
    """Seeded per-class split; returns sorted (train, test) index lists."""
    if not 0 < test_fraction < 1:
        raise ConfigError(f"test fraction {test_fraction} must lie in (0, 1)")
    if len(items) != len(labels):
        raise ValidationError("items and labels differ in length")
    rng = np.random.default_rng(seed)
    by_class = {}
    for i, lab in enumerate(labels):
        by_class.setdefault(lab, []).append(i)
    train, test = [], []
    for lab in sorted(by_class, key=lambda x: (x is None, x or "")):
        idx = np.array(by_class[lab])
        perm = idx[rng.permutation(len(idx))]
        n_test = int(round(test_fraction * len(idx)))
        if len(idx) > 1:
            n_test = min(max(n_test, 1), len(idx) - 1)
        else:
            n_test = 0
        test.extend(int(i) for i in perm[:n_test])
        train.extend(int(i) for i in perm[n_test:])
    return sorted(train), sorted(test)
