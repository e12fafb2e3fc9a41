"""Shared builders for the test suite."""

from __future__ import annotations

import sys

import numpy as np

from contrastive_retrieval.costs import CostEntry
from contrastive_retrieval.hypotheses import HypothesisPair, QAItem
from contrastive_retrieval.pipeline import EvalRecord
from contrastive_retrieval.retrieval import Corpus, Document, RankedResult
from contrastive_retrieval.vectors import normalize


# Verdict lines from the acceptance tests; a terminal-summary hook prints
# them at the end of the run, where pytest's capture cannot swallow them.
ACCEPTANCE_VERDICTS: list[str] = []


def emit_verdict(label: str, passed: bool, detail: str = "") -> None:
    status = "PASS" if passed else "FAIL"
    suffix = f" ({detail})" if detail else ""
    line = f"[{label}] {status}{suffix}"
    ACCEPTANCE_VERDICTS.append(line)
    print(line, file=sys.__stdout__, flush=True)


def unit(rng: np.random.Generator, dim: int) -> np.ndarray:
    return normalize(rng.standard_normal(dim))


def random_corpus(rng: np.random.Generator, n: int, dim: int, prefix: str = "doc") -> Corpus:
    docs = [
        Document(id=f"{prefix}{i:04d}", text=f"passage {i}", embedding=unit(rng, dim))
        for i in range(n)
    ]
    return Corpus(docs)


def injected_pair(rng: np.random.Generator, dim: int) -> HypothesisPair:
    return HypothesisPair(
        h_plus="target-direction hypothesis",
        h_minus="mimic-direction hypothesis",
        h_plus_emb=unit(rng, dim),
        h_minus_emb=unit(rng, dim),
        provenance="injected",
    )


def two_option_item(item_id: str = "item1", stem: str = "What explains the finding?") -> QAItem:
    return QAItem(
        id=item_id,
        stem=stem,
        options={"A": "first explanation", "B": "second explanation"},
        answer_key="A",
    )


def make_record(
    item_id: str,
    correct: bool,
    method: str = "chr",
    doc_ids: tuple[str, ...] = ("d1",),
    dataset: str = "default",
    llm_calls: int = 1,
    output_tokens: int = 0,
    predicted: str | None = None,
) -> EvalRecord:
    hits = tuple((doc_id, 1.0 - i * 0.01) for i, doc_id in enumerate(doc_ids))
    if predicted is None:
        predicted = "A" if correct else "B"
    return EvalRecord(
        item_id=item_id,
        method=method,
        ranked=RankedResult(hits=hits, method=method),
        predicted=predicted,
        correct=correct,
        cost=CostEntry(llm_calls=llm_calls, output_tokens=output_tokens),
        answer_cost=CostEntry(llm_calls=1, output_tokens=4),
        dataset=dataset,
    )
