"""Experiment configuration, the fitted pipeline, grid execution, rendering.

A config file is flat ``key = value`` text. Keys before the first
``[experiment]`` header are defaults; each ``[experiment]`` block starts a
new grid entry inheriting those defaults. Blank lines and ``#`` comments are
ignored. The same text format round-trips losslessly through
parse_config_text/serialize_configs.
"""

from __future__ import annotations

import hashlib
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy import sparse

from . import persistence
from .cnn import (
    CnnModel,
    SequenceEncoder,
    TrainConfig,
    encode,
    init_cnn,
    predict_cnn,
    train_cnn,
    forward as cnn_forward,
)
from .corpus import Corpus, Label
from .metrics import EvalReport, confusion, format4, summarize
from .preprocess import PreprocessConfig, PreprocessedDoc, Resources, preprocess_corpus
from .selection import SelectionMask, apply_mask, chi2_scores, select_k_best
from .svm import (
    KernelParams,
    SvmModel,
    decision_function,
    labels_to_signs,
    predict_svm,
    train_svm,
)
from .vectorize import NgramSpec, TfIdfModel, Vocabulary, build_vocabulary, fit_tfidf, transform


class ConfigError(ValueError):
    pass


class PipelineError(RuntimeError):
    """Wraps a stage failure with the stage name attached."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage '{stage}': {cause}")
        self.stage = stage
        self.cause = cause


@dataclass(frozen=True)
class ExperimentConfig:
    name: str = "default"
    seed: int = 0
    classifier: str = "svm"  # "svm" | "cnn"
    preprocess: PreprocessConfig = field(default_factory=PreprocessConfig)
    word_orders: tuple[int, ...] = (1, 2, 3, 4)
    char_orders: tuple[int, ...] = (2, 3, 4, 5, 6)
    k_best: int = 20000
    svm_c: float = 1.0
    svm_gamma: float | None = None  # None -> 1 / n_selected_features
    svm_coef0: float = 0.0
    svm_degree: int = 1
    svm_tol: float = 1e-3
    svm_max_passes: int = 200
    cnn_unit: str = "word"
    cnn_channels: tuple[int, ...] = (1, 2, 3, 4)
    cnn_epochs: int = 7
    cnn_batch_size: int = 16
    cnn_learning_rate: float = 1e-3
    cnn_max_len: int | None = None  # None -> longest training doc, capped
    cnn_embedding_dropout: float = 0.0

    def __post_init__(self) -> None:
        if self.classifier not in ("svm", "cnn"):
            raise ConfigError(f"classifier must be 'svm' or 'cnn', got {self.classifier!r}")

    def ngram_spec(self) -> NgramSpec:
        return NgramSpec(frozenset(self.word_orders), frozenset(self.char_orders))

    def digest(self) -> str:
        return hashlib.sha256(serialize_configs([self]).encode("utf-8")).hexdigest()[:12]


_BOOL_KEYS = ("remove_diacritics", "normalize", "remove_stopwords", "lemmatize")
_DEFAULTS = ExperimentConfig()


def _parse_bool(value: str, key: str) -> bool:
    v = value.strip().lower()
    if v in ("true", "yes", "1"):
        return True
    if v in ("false", "no", "0"):
        return False
    raise ConfigError(f"{key}: expected true/false, got {value!r}")


def _parse_int_tuple(value: str, key: str) -> tuple[int, ...]:
    value = value.strip()
    if not value or value == "-":
        return ()
    try:
        return tuple(int(tok) for tok in value.split(","))
    except ValueError as exc:
        raise ConfigError(f"{key}: expected comma-separated integers, got {value!r}") from exc


def _apply_key(fields: dict, key: str, value: str) -> None:
    value = value.strip()
    if key == "name":
        fields["name"] = value
    elif key == "seed":
        fields["seed"] = int(value)
    elif key == "classifier":
        fields["classifier"] = value
    elif key in _BOOL_KEYS:
        pp = fields.get("preprocess", _DEFAULTS.preprocess)
        fields["preprocess"] = replace(pp, **{key: _parse_bool(value, key)})
    elif key in ("word_orders", "char_orders"):
        fields[key] = _parse_int_tuple(value, key)
    elif key in ("k_best", "svm_max_passes", "cnn_epochs", "cnn_batch_size", "svm_degree"):
        fields[key] = int(value)
    elif key in ("svm_c", "svm_coef0", "svm_tol", "cnn_learning_rate", "cnn_embedding_dropout"):
        fields[key] = float(value)
    elif key == "svm_gamma":
        fields[key] = None if value.lower() == "auto" else float(value)
    elif key == "cnn_max_len":
        fields[key] = None if value.lower() == "auto" else int(value)
    elif key == "cnn_unit":
        fields[key] = value
    elif key == "cnn_channels":
        fields[key] = _parse_int_tuple(value, key)
    else:
        raise ConfigError(f"unknown config key {key!r}")


def parse_config_text(text: str) -> list[ExperimentConfig]:
    defaults: dict = {}
    blocks: list[dict] = []
    current: dict | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line == "[experiment]":
            current = dict(defaults)
            blocks.append(current)
            continue
        if line.startswith("["):
            raise ConfigError(f"line {lineno}: unknown section {line!r}")
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        try:
            _apply_key(current if current is not None else defaults, key, value)
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: {exc}") from exc
    if current is None:
        blocks = [dict(defaults)]
    return [ExperimentConfig(**blk) for blk in blocks]


def parse_config_file(path: str | Path) -> list[ExperimentConfig]:
    return parse_config_text(Path(path).read_text(encoding="utf-8"))


def _format_value(key: str, value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ",".join(str(v) for v in value) if value else "-"
    if value is None:
        return "auto"
    return str(value)


def serialize_configs(configs: list[ExperimentConfig]) -> str:
    lines: list[str] = []
    for cfg in configs:
        lines.append("[experiment]")
        lines.append(f"name = {cfg.name}")
        lines.append(f"seed = {cfg.seed}")
        lines.append(f"classifier = {cfg.classifier}")
        for key in _BOOL_KEYS:
            lines.append(f"{key} = {_format_value(key, getattr(cfg.preprocess, key))}")
        for key in (
            "word_orders", "char_orders", "k_best",
            "svm_c", "svm_gamma", "svm_coef0", "svm_degree", "svm_tol", "svm_max_passes",
            "cnn_unit", "cnn_channels", "cnn_epochs", "cnn_batch_size",
            "cnn_learning_rate", "cnn_max_len", "cnn_embedding_dropout",
        ):
            lines.append(f"{key} = {_format_value(key, getattr(cfg, key))}")
        lines.append("")
    return "\n".join(lines)


@dataclass
class FittedPipeline:
    """Everything fitted on the training split, enough to predict new text."""

    config: ExperimentConfig
    kind: str  # "svm" | "cnn"
    vocabulary: Vocabulary | None = None
    tfidf: TfIdfModel | None = None
    mask: SelectionMask | None = None
    svm: SvmModel | None = None
    encoder: SequenceEncoder | None = None
    cnn: CnnModel | None = None
    history: list | None = None  # per-epoch stats (cnn only, not persisted)

    @property
    def total_features(self) -> int:
        if self.kind == "svm":
            return self.vocabulary.size
        return len(self.encoder.term_to_id)

    @property
    def selected_features(self) -> int:
        if self.kind == "svm":
            return self.mask.n_kept
        return len(self.encoder.term_to_id)

    def _docs(self, corpus: Corpus, resources: Resources) -> list[PreprocessedDoc]:
        return preprocess_corpus(corpus, self.config.preprocess, resources)

    def decision_values(self, corpus: Corpus, resources: Resources) -> np.ndarray:
        """Signed margin for SVM; Fake probability for CNN."""
        docs = self._docs(corpus, resources)
        if self.kind == "svm":
            X = apply_mask(transform(docs, self.tfidf, self.config.ngram_spec()), self.mask)
            return decision_function(self.svm, X)
        return cnn_forward(self.cnn, encode(docs, self.encoder))

    def predict(self, corpus: Corpus, resources: Resources) -> list[Label]:
        docs = self._docs(corpus, resources)
        if self.kind == "svm":
            X = apply_mask(transform(docs, self.tfidf, self.config.ngram_spec()), self.mask)
            return predict_svm(self.svm, X)
        return predict_cnn(self.cnn, encode(docs, self.encoder))


def fit_pipeline(train: Corpus, config: ExperimentConfig, resources: Resources) -> FittedPipeline:
    """Fit every stage on the training corpus only."""

    def stage(name, fn, *args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except Exception as exc:
            raise PipelineError(name, exc) from exc

    docs = stage("preprocess", preprocess_corpus, train, config.preprocess, resources)
    gold = [d.label for d in train]
    if config.classifier == "svm":
        spec = config.ngram_spec()
        vocab = stage("build_vocabulary", build_vocabulary, docs, spec)
        tfidf = stage("fit_tfidf", fit_tfidf, docs, vocab)
        X = stage("transform", transform, docs, tfidf, spec)
        y_signs = labels_to_signs(gold)
        scores = stage("chi2_scores", chi2_scores, X, y_signs)
        mask = stage("select_k_best", select_k_best, scores, config.k_best)
        X_sel = stage("apply_mask", apply_mask, X, mask)
        gamma = config.svm_gamma if config.svm_gamma is not None else 1.0 / max(1, mask.n_kept)
        params = KernelParams(degree=config.svm_degree, gamma=gamma, coef0=config.svm_coef0)
        model = stage(
            "train_svm", train_svm, X_sel, y_signs,
            params=params, C=config.svm_c, tol=config.svm_tol, max_passes=config.svm_max_passes,
        )
        return FittedPipeline(config=config, kind="svm", vocabulary=vocab,
                              tfidf=tfidf, mask=mask, svm=model)

    encoder = stage("fit_encoder", SequenceEncoder.fit, docs,
                    unit=config.cnn_unit, max_len=config.cnn_max_len)
    X_ids = stage("encode", encode, docs, encoder)
    cnn = stage(
        "init_cnn", init_cnn, encoder.vocab_size, encoder.max_len,
        config.cnn_channels, config.seed,
    )
    train_cfg = TrainConfig(
        epochs=config.cnn_epochs,
        batch_size=config.cnn_batch_size,
        learning_rate=config.cnn_learning_rate,
        seed=config.seed,
        embedding_dropout=config.cnn_embedding_dropout,
    )
    cnn, history = stage("train_cnn", train_cnn, cnn, X_ids, gold, train_cfg)
    return FittedPipeline(config=config, kind="cnn", encoder=encoder, cnn=cnn,
                          history=history)


@dataclass(frozen=True)
class ResultRow:
    sn: int
    name: str
    digest: str
    block: str
    k_best: int
    v_total: int
    k_selected: int
    report: EvalReport | None
    seconds: float
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


def run_config(
    train: Corpus, test: Corpus, config: ExperimentConfig, resources: Resources, sn: int = 1
) -> ResultRow:
    """Fit on train, predict on test, evaluate with Fake as positive class."""
    start = time.perf_counter()
    fitted = fit_pipeline(train, config, resources)
    predictions = fitted.predict(test, resources)
    report = summarize(confusion([d.label for d in test], predictions))
    elapsed = time.perf_counter() - start
    return ResultRow(
        sn=sn,
        name=config.name,
        digest=config.digest(),
        block=config.ngram_spec().describe() if config.classifier == "svm"
        else f"cnn {config.cnn_unit} channels {','.join(map(str, config.cnn_channels))}",
        k_best=config.k_best if config.classifier == "svm" else 0,
        v_total=fitted.total_features,
        k_selected=fitted.selected_features,
        report=report,
        seconds=elapsed,
    )


def run_grid(
    train: Corpus, test: Corpus, configs: list[ExperimentConfig], resources: Resources
) -> list[ResultRow]:
    """Run every config in order; a failing row is recorded, the grid continues."""
    if not configs:
        raise ConfigError("experiment grid is empty")
    rows: list[ResultRow] = []
    for sn, config in enumerate(configs, start=1):
        try:
            rows.append(run_config(train, test, config, resources, sn=sn))
        except Exception as exc:
            rows.append(
                ResultRow(
                    sn=sn, name=config.name, digest=config.digest(),
                    block="", k_best=config.k_best, v_total=0, k_selected=0,
                    report=None, seconds=0.0, error=str(exc),
                )
            )
    return rows


RESULTS_TSV_COLUMNS = (
    "sn", "name", "block", "k_best", "v_total", "k_selected",
    "prec_fake", "recall_fake", "f1_fake",
    "prec_real", "recall_real", "f1_real",
    "f1_macro", "accuracy", "status", "error", "digest",
)


def _macro_ranks(rows: list[ResultRow]) -> dict[int, int]:
    """sn -> rank (1..3) of the three best f1_macro values among ok rows."""
    scored = sorted(
        (r for r in rows if r.ok), key=lambda r: (-r.report.f1_macro, r.sn)
    )
    return {r.sn: i + 1 for i, r in enumerate(scored[:3])}


def render_results_tsv(rows: list[ResultRow]) -> str:
    """Deterministic TSV: 4-dp metric presentation, no timing columns."""
    lines = ["\t".join(RESULTS_TSV_COLUMNS)]
    for r in rows:
        if r.ok:
            rep = r.report.as_dict()
            metrics = [format4(rep[c]) for c in (
                "precision_fake", "recall_fake", "f1_fake",
                "precision_real", "recall_real", "f1_real", "f1_macro", "accuracy")]
            status, error = "ok", ""
        else:
            metrics = [""] * 8
            status, error = "error", r.error.replace("\t", " ").replace("\n", " ")
        lines.append("\t".join(
            [str(r.sn), r.name, r.block, str(r.k_best), str(r.v_total), str(r.k_selected)]
            + metrics + [status, error, r.digest]
        ))
    return "\n".join(lines) + "\n"


def render_results_md(rows: list[ResultRow]) -> str:
    """Aligned table with the best three macro-F1 scores flagged."""
    ranks = _macro_ranks(rows)
    flags = {1: "**", 2: "*", 3: "_"}
    header = ["SN", "Name", "Features", "K", "V", "PrecF", "RecF", "F1F",
              "PrecR", "RecR", "F1R", "F1Macro", "Acc", "Time(s)"]
    body: list[list[str]] = []
    for r in rows:
        if r.ok:
            rep = r.report.as_dict()
            f1m = format4(rep["f1_macro"])
            mark = flags.get(ranks.get(r.sn, 0), "")
            body.append([
                str(r.sn), r.name, r.block, str(r.k_best), str(r.v_total),
                format4(rep["precision_fake"]), format4(rep["recall_fake"]),
                format4(rep["f1_fake"]), format4(rep["precision_real"]),
                format4(rep["recall_real"]), format4(rep["f1_real"]),
                f"{mark}{f1m}{mark}" if mark else f1m,
                format4(rep["accuracy"]), f"{r.seconds:.1f}",
            ])
        else:
            body.append([str(r.sn), r.name, f"ERROR: {r.error}"] + [""] * 11)
    widths = [max(len(header[i]), *(len(row[i]) for row in body)) if body else len(header[i])
              for i in range(len(header))]
    sep = ["-" * w for w in widths]
    out = []
    for row in (header, sep, *body):
        out.append("| " + " | ".join(c.ljust(w) for c, w in zip(row, widths)) + " |")
    return "\n".join(out) + "\n"


def save_model(path: str | Path, fitted: FittedPipeline) -> None:
    """Persist a fitted pipeline; loading reproduces its predictions exactly."""
    cfg = fitted.config
    meta = {
        "kind": fitted.kind,
        "config": serialize_configs([cfg]),
    }
    arrays: dict[str, np.ndarray] = {}
    texts: dict[str, str] = {}
    if fitted.kind == "svm":
        arrays["idf"] = fitted.tfidf.idf
        arrays["doc_freq"] = fitted.vocabulary.doc_freq
        arrays["mask.kept"] = fitted.mask.kept
        arrays["mask.k"] = np.asarray([fitted.mask.k], dtype=np.int64)
        arrays["vocab.n_docs"] = np.asarray([fitted.vocabulary.n_docs], dtype=np.int64)
        arrays.update(persistence.csr_to_blobs("svm.sv", fitted.svm.support_vectors))
        arrays["svm.dual_coef"] = fitted.svm.dual_coef
        arrays["svm.scalars"] = np.asarray(
            [fitted.svm.bias, fitted.svm.C, fitted.svm.kernel.gamma,
             fitted.svm.kernel.coef0, float(fitted.svm.kernel.degree),
             1.0 if fitted.svm.converged else 0.0, float(fitted.svm.n_features)],
            dtype=np.float64,
        )
        texts["vocab.terms"] = "\n".join(fitted.vocabulary.terms_by_index())
    else:
        arrays["cnn.embedding"] = fitted.cnn.embedding
        for k in fitted.cnn.channels:
            arrays[f"cnn.conv_w.{k}"] = fitted.cnn.conv_w[k]
            arrays[f"cnn.conv_b.{k}"] = fitted.cnn.conv_b[k]
        arrays["cnn.dense_w"] = fitted.cnn.dense_w
        arrays["cnn.dense_b"] = fitted.cnn.dense_b
        arrays["cnn.out_w"] = fitted.cnn.out_w
        arrays["cnn.out_b"] = fitted.cnn.out_b
        arrays["cnn.channels"] = np.asarray(fitted.cnn.channels, dtype=np.int64)
        arrays["cnn.max_len"] = np.asarray([fitted.cnn.max_len], dtype=np.int64)
        meta["encoder.unit"] = fitted.encoder.unit
        meta["encoder.max_len"] = fitted.encoder.max_len
        texts["encoder.terms"] = "\n".join(
            term for term, _ in sorted(fitted.encoder.term_to_id.items(), key=lambda kv: kv[1])
        )
    persistence.write_container(path, meta, arrays, texts)


def load_model(path: str | Path) -> FittedPipeline:
    meta, arrays, texts = persistence.read_container(path)
    config = parse_config_text(meta["config"])[0]
    kind = meta["kind"]
    if kind == "svm":
        terms = texts["vocab.terms"].split("\n") if texts["vocab.terms"] else []
        vocab = Vocabulary(
            term_to_index={t: i for i, t in enumerate(terms)},
            doc_freq=arrays["doc_freq"],
            n_docs=int(arrays["vocab.n_docs"][0]),
        )
        tfidf = TfIdfModel(idf=arrays["idf"], vocabulary=vocab)
        mask = SelectionMask(kept=arrays["mask.kept"], k=int(arrays["mask.k"][0]))
        s = arrays["svm.scalars"]
        model = SvmModel(
            support_vectors=persistence.csr_from_blobs("svm.sv", arrays),
            dual_coef=arrays["svm.dual_coef"],
            bias=float(s[0]),
            C=float(s[1]),
            kernel=KernelParams(degree=int(s[4]), gamma=float(s[2]), coef0=float(s[3])),
            converged=bool(s[5]),
            n_features=int(s[6]),
        )
        return FittedPipeline(config=config, kind="svm", vocabulary=vocab,
                              tfidf=tfidf, mask=mask, svm=model)
    if kind == "cnn":
        channels = tuple(int(k) for k in arrays["cnn.channels"])
        cnn = CnnModel(
            embedding=arrays["cnn.embedding"],
            conv_w={k: arrays[f"cnn.conv_w.{k}"] for k in channels},
            conv_b={k: arrays[f"cnn.conv_b.{k}"] for k in channels},
            dense_w=arrays["cnn.dense_w"],
            dense_b=arrays["cnn.dense_b"],
            out_w=arrays["cnn.out_w"],
            out_b=arrays["cnn.out_b"],
            channels=channels,
            max_len=int(arrays["cnn.max_len"][0]),
        )
        terms = texts["encoder.terms"].split("\n") if texts["encoder.terms"] else []
        encoder = SequenceEncoder(
            unit=meta["encoder.unit"],
            term_to_id={t: i + 1 for i, t in enumerate(terms)},
            max_len=int(meta["encoder.max_len"]),
        )
        return FittedPipeline(config=config, kind="cnn", encoder=encoder, cnn=cnn)
    raise persistence.ModelFormatError(f"unknown pipeline kind {kind!r}")
