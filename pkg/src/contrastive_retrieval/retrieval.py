"""Document scoring and exact top-K retrieval.

The ranking function is the contrastive score

    S(d) = cos(d, H_plus) - lambda * cos(d, H_minus)

which, for unit-norm document embeddings, equals the dot product of d with
the shifted query vector ``H_plus - lambda * H_minus`` (deliberately not
renormalized: renormalizing rescales every score by the same positive factor
and cannot change the ranking, while leaving it raw keeps the two forms
numerically identical).

Retrieval is an exhaustive scan: no approximate index, scores sorted
descending with ties broken by ascending document id, so every result list
is a deterministic function of its inputs.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass, field, replace

import numpy as np

from .backends import EmbedderBackend
from .errors import (
    DimensionMismatchError,
    DuplicateIdError,
    EmptyCorpusError,
    MissingEmbeddingError,
    UnknownDocIdError,
    ZeroVectorError,
)
from .hypotheses import HypothesisPair, QAItem
from .vectors import ZERO_NORM_EPS, as_vector, mean_embedding, normalize

METHOD_STANDARD = "standard"
METHOD_HYDE = "hyde"
METHOD_QUERY2DOC = "query2doc"
METHOD_CHR = "chr"
METHOD_H_PLUS_ONLY = "h_plus_only"
METHODS = (METHOD_STANDARD, METHOD_HYDE, METHOD_QUERY2DOC, METHOD_CHR, METHOD_H_PLUS_ONLY)

# Blank line between the question stem and the appended pseudo-document.
QUERY2DOC_SEPARATOR = "\n\n"


@dataclass(frozen=True)
class Document:
    """One corpus chunk. The corpus normalizes embeddings at ingest."""

    id: str
    text: str
    embedding: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("document id must be nonempty")
        object.__setattr__(self, "embedding", as_vector(self.embedding))


class Corpus:
    """Immutable document collection backed by a dense unit-norm matrix.

    Rows of ``matrix`` are the documents' embeddings normalized in float64,
    in insertion order, so similarity against a query vector is one matrix
    product. ``documents`` holds the same normalized vectors.
    """

    def __init__(self, documents: Iterable[Document]):
        docs = list(documents)
        if not docs:
            raise EmptyCorpusError("corpus must contain at least one document")
        self.dimension = docs[0].embedding.shape[0]
        matrix = np.empty((len(docs), self.dimension), dtype=np.float64)
        index: dict[str, int] = {}
        for pos, doc in enumerate(docs):
            if doc.id in index:
                raise DuplicateIdError(pos + 1, doc.id)
            if doc.embedding.shape[0] != self.dimension:
                raise DimensionMismatchError(
                    f"document {doc.id!r} has dimension {doc.embedding.shape[0]}, "
                    f"corpus dimension is {self.dimension}"
                )
            index[doc.id] = pos
            matrix[pos] = normalize(doc.embedding)
        matrix.setflags(write=False)
        self.matrix = matrix
        self.documents = tuple(
            replace(doc, embedding=matrix[pos]) for pos, doc in enumerate(docs)
        )
        self.ids = tuple(doc.id for doc in docs)
        self._index = index

    def __len__(self) -> int:
        return len(self.documents)

    def __iter__(self):
        return iter(self.documents)

    def get(self, doc_id: str) -> Document:
        pos = self._index.get(doc_id)
        if pos is None:
            raise UnknownDocIdError(f"no document with id {doc_id!r}")
        return self.documents[pos]

    def __contains__(self, doc_id: str) -> bool:
        return doc_id in self._index


@dataclass(frozen=True)
class RankedResult:
    """Top-K hits as (doc_id, score), scores non-increasing, ties by id."""

    hits: tuple[tuple[str, float], ...]
    method: str
    lam: float | None = None

    def __post_init__(self) -> None:
        if self.method not in METHODS and self.method != "custom":
            raise ValueError(f"unknown method {self.method!r}")
        for (_, prev), (_, cur) in zip(self.hits, self.hits[1:]):
            if cur > prev:
                raise ValueError("hit scores must be non-increasing")

    def doc_ids(self) -> tuple[str, ...]:
        return tuple(doc_id for doc_id, _ in self.hits)


def _cos(a: np.ndarray, b: np.ndarray) -> float:
    # Lean cosine for pre-validated vectors; hot path of per-document scoring.
    na = math.sqrt(float(np.dot(a, a)))
    nb = math.sqrt(float(np.dot(b, b)))
    if na < ZERO_NORM_EPS or nb < ZERO_NORM_EPS:
        raise ZeroVectorError("cosine similarity of a zero vector is undefined")
    return float(np.dot(a, b)) / (na * nb)


def contrastive_score(
    doc: Document | np.ndarray, pair: HypothesisPair, lam: float
) -> float:
    """Score one document: cos(d, H_plus) - lam * cos(d, H_minus).

    A pair without a mimic embedding (fallback pairs) scores as cos(d, H_plus)
    alone, so degraded generations still retrieve.
    """
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    if pair.h_plus_emb is None:
        raise MissingEmbeddingError("pair has no h_plus embedding; call embed_pair first")
    emb = doc.embedding if isinstance(doc, Document) else doc
    if emb.shape != pair.h_plus_emb.shape:
        raise DimensionMismatchError(
            f"dimensions differ: {emb.shape[0]} vs {pair.h_plus_emb.shape[0]}"
        )
    score = _cos(emb, pair.h_plus_emb)
    if pair.h_minus_emb is not None:
        score -= lam * _cos(emb, pair.h_minus_emb)
    return score


def shifted_query(pair: HypothesisPair, lam: float) -> np.ndarray:
    """The query vector H_plus - lam * H_minus, not renormalized.

    Dotting unit-norm documents against this vector reproduces
    contrastive_score exactly. A missing mimic embedding contributes zero.
    """
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    if pair.h_plus_emb is None:
        raise MissingEmbeddingError("pair has no h_plus embedding; call embed_pair first")
    if pair.h_minus_emb is None:
        return pair.h_plus_emb.copy()
    return pair.h_plus_emb - lam * pair.h_minus_emb


def top_k_from_scores(
    ids: Sequence[str], scores: np.ndarray, k: int
) -> tuple[tuple[str, float], ...]:
    """Select the k best (id, score) pairs: score descending, then id ascending."""
    if k < 1:
        raise ValueError("k must be >= 1")
    # lexsort sorts by the last key first, so -scores is primary, id secondary.
    order = np.lexsort((np.asarray(ids), -scores))
    top = order[: min(k, len(order))]
    return tuple((ids[i], float(scores[i])) for i in top)


def retrieve_top_k(
    score_fn: Callable[[Document], float],
    corpus: Corpus,
    k: int,
    method: str = "custom",
    lam: float | None = None,
) -> RankedResult:
    """Exhaustively score every document and keep the top k.

    Short corpora return all documents ranked. The method tag defaults to
    ``custom``; the retrieve_* wrappers stamp their own.
    """
    if len(corpus) == 0:
        raise EmptyCorpusError("cannot retrieve from an empty corpus")
    scores = np.fromiter(
        (score_fn(doc) for doc in corpus.documents), dtype=np.float64, count=len(corpus)
    )
    return RankedResult(hits=top_k_from_scores(corpus.ids, scores, k), method=method, lam=lam)


def _rank_by_query(
    corpus: Corpus, query: np.ndarray, k: int, method: str, lam: float | None = None
) -> RankedResult:
    if query.shape[0] != corpus.dimension:
        raise DimensionMismatchError(
            f"query dimension {query.shape[0]} vs corpus dimension {corpus.dimension}"
        )
    scores = corpus.matrix @ query
    return RankedResult(hits=top_k_from_scores(corpus.ids, scores, k), method=method, lam=lam)


def retrieve_chr(pair: HypothesisPair, corpus: Corpus, lam: float, k: int) -> RankedResult:
    """Contrastive retrieval: rank by dot(d, H_plus - lam * H_minus)."""
    return _rank_by_query(corpus, shifted_query(pair, lam), k, METHOD_CHR, lam=lam)


def retrieve_h_plus_only(pair: HypothesisPair, corpus: Corpus, k: int) -> RankedResult:
    """Ablation: rank by similarity to the target hypothesis alone."""
    if pair.h_plus_emb is None:
        raise MissingEmbeddingError("pair has no h_plus embedding; call embed_pair first")
    return _rank_by_query(corpus, pair.h_plus_emb, k, METHOD_H_PLUS_ONLY)


def retrieve_standard(
    item: QAItem, corpus: Corpus, k: int, embedder: EmbedderBackend
) -> RankedResult:
    """No expansion: embed the question stem (options excluded) and rank."""
    query = normalize(embedder.embed(item.stem))
    return _rank_by_query(corpus, query, k, METHOD_STANDARD)


def retrieve_hyde(
    hypo_texts: Sequence[str], corpus: Corpus, k: int, embedder: EmbedderBackend
) -> RankedResult:
    """Embedding averaging: the query is the mean of the hypothesis embeddings."""
    if not hypo_texts:
        raise ValueError("need at least one hypothetical passage")
    embs = [normalize(embedder.embed(text)) for text in hypo_texts]
    return _rank_by_query(corpus, mean_embedding(embs), k, METHOD_HYDE)


def retrieve_query2doc(
    item: QAItem, pseudo_doc: str, corpus: Corpus, k: int, embedder: EmbedderBackend
) -> RankedResult:
    """Query concatenation: embed stem + blank line + pseudo-document, rank."""
    if not pseudo_doc:
        raise ValueError("pseudo_doc must be nonempty")
    query = normalize(embedder.embed(item.stem + QUERY2DOC_SEPARATOR + pseudo_doc))
    return _rank_by_query(corpus, query, k, METHOD_QUERY2DOC)
