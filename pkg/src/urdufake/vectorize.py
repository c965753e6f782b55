"""Combined word/char n-gram bag-of-words with TF-IDF weighting.

Terms are namespaced ("w2:..." for word bigrams, "c3:..." for character
trigrams) so word and character features can never collide. Column indices
are assigned by lexicographic term order, making the whole downstream
pipeline reproducible independent of document order.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy import sparse

from .preprocess import PreprocessedDoc


class VectorizeError(ValueError):
    pass


WORD_ORDER_RANGE = range(1, 5)
CHAR_ORDER_RANGE = range(2, 7)


@dataclass(frozen=True)
class NgramSpec:
    """Which n-gram orders to extract: word n in 1..4, char n in 2..6."""

    word_orders: frozenset[int] = frozenset()
    char_orders: frozenset[int] = frozenset()

    def __post_init__(self) -> None:
        object.__setattr__(self, "word_orders", frozenset(self.word_orders))
        object.__setattr__(self, "char_orders", frozenset(self.char_orders))
        if not self.word_orders and not self.char_orders:
            raise VectorizeError("at least one of word_orders/char_orders must be non-empty")
        bad_w = self.word_orders - set(WORD_ORDER_RANGE)
        if bad_w:
            raise VectorizeError(f"word orders {sorted(bad_w)} outside supported range 1..4")
        bad_c = self.char_orders - set(CHAR_ORDER_RANGE)
        if bad_c:
            raise VectorizeError(f"char orders {sorted(bad_c)} outside supported range 2..6")

    def describe(self) -> str:
        w = ",".join(str(n) for n in sorted(self.word_orders)) or "-"
        c = ",".join(str(n) for n in sorted(self.char_orders)) or "-"
        return f"word n={w} char n={c}"


def word_ngrams(tokens: Sequence[str], orders: Iterable[int]) -> list[str]:
    """All contiguous n-token windows, space-joined, prefixed "w{n}:".

    Generation order: ascending n, then left to right.
    """
    out: list[str] = []
    for n in sorted(set(orders)):
        prefix = f"w{n}:"
        for i in range(len(tokens) - n + 1):
            out.append(prefix + " ".join(tokens[i : i + n]))
    return out


def char_ngrams(char_stream: str, orders: Iterable[int]) -> list[str]:
    """All contiguous n-codepoint windows of the stream, prefixed "c{n}:".

    The stream is the space-joined token sequence, so windows cross token
    boundaries and include the separating spaces.
    """
    out: list[str] = []
    for n in sorted(set(orders)):
        prefix = f"c{n}:"
        for i in range(len(char_stream) - n + 1):
            out.append(prefix + char_stream[i : i + n])
    return out


def doc_terms(doc: PreprocessedDoc, spec: NgramSpec) -> list[str]:
    terms: list[str] = []
    if spec.word_orders:
        terms.extend(word_ngrams(doc.tokens, spec.word_orders))
    if spec.char_orders:
        terms.extend(char_ngrams(doc.char_stream, spec.char_orders))
    return terms


@dataclass(frozen=True)
class Vocabulary:
    """Dense term->column map with per-term document frequencies.

    Indices run 0..V-1 in lexicographic term order.
    """

    term_to_index: dict[str, int]
    doc_freq: np.ndarray  # int64, indexed by column
    n_docs: int

    @property
    def size(self) -> int:
        return len(self.term_to_index)

    def terms_by_index(self) -> list[str]:
        out = [""] * self.size
        for term, idx in self.term_to_index.items():
            out[idx] = term
        return out


def build_vocabulary(docs: Sequence[PreprocessedDoc], spec: NgramSpec) -> Vocabulary:
    """Union of all distinct namespaced terms with document frequencies."""
    if not docs:
        raise VectorizeError("cannot build a vocabulary from an empty corpus")
    df: Counter[str] = Counter()
    for doc in docs:
        df.update(set(doc_terms(doc, spec)))
    if not df:
        raise VectorizeError("all documents produced zero terms")
    terms = sorted(df)
    term_to_index = {t: i for i, t in enumerate(terms)}
    doc_freq = np.fromiter((df[t] for t in terms), dtype=np.int64, count=len(terms))
    return Vocabulary(term_to_index=term_to_index, doc_freq=doc_freq, n_docs=len(docs))


@dataclass(frozen=True)
class TfIdfModel:
    """Smoothed idf weights: idf[t] = ln((1 + N) / (1 + df[t])) + 1."""

    idf: np.ndarray
    vocabulary: Vocabulary


def fit_tfidf(docs: Sequence[PreprocessedDoc], vocabulary: Vocabulary) -> TfIdfModel:
    if len(docs) != vocabulary.n_docs:
        raise VectorizeError(
            f"vocabulary was built from {vocabulary.n_docs} docs, got {len(docs)}"
        )
    n = vocabulary.n_docs
    idf = np.log((1.0 + n) / (1.0 + vocabulary.doc_freq.astype(np.float64))) + 1.0
    return TfIdfModel(idf=idf, vocabulary=vocabulary)


def transform(
    docs: Sequence[PreprocessedDoc], model: TfIdfModel, spec: NgramSpec
) -> sparse.csr_matrix:
    """Raw term counts x idf, L2-normalized per row.

    Terms absent from the vocabulary are ignored (test-time OOV); documents
    with no in-vocabulary terms become all-zero rows.
    """
    vocab = model.vocabulary.term_to_index
    idf = model.idf
    indptr = [0]
    indices: list[int] = []
    data: list[float] = []
    for doc in docs:
        counts = Counter(doc_terms(doc, spec))
        cols = sorted(vocab[t] for t in counts if t in vocab)
        if cols:
            vals = np.empty(len(cols), dtype=np.float64)
            terms_by_col = {vocab[t]: c for t, c in counts.items() if t in vocab}
            for k, col in enumerate(cols):
                vals[k] = terms_by_col[col] * idf[col]
            norm = math.sqrt(float(np.dot(vals, vals)))
            if norm > 0.0:
                vals /= norm
            indices.extend(cols)
            data.extend(vals.tolist())
        indptr.append(len(indices))
    X = sparse.csr_matrix(
        (np.asarray(data, dtype=np.float64),
         np.asarray(indices, dtype=np.int64),
         np.asarray(indptr, dtype=np.int64)),
        shape=(len(docs), model.vocabulary.size),
    )
    X.eliminate_zeros()
    return X


def write_vocabulary_tsv(vocabulary: Vocabulary, path: str | Path) -> None:
    """Dump as TSV (term, index, df), sorted by index."""
    terms = vocabulary.terms_by_index()
    with open(path, "w", encoding="utf-8") as fh:
        for idx, term in enumerate(terms):
            fh.write(f"{term}\t{idx}\t{int(vocabulary.doc_freq[idx])}\n")
