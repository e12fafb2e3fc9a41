"""End-to-end multiple-choice evaluation.

For each question: expand the query per the chosen method, retrieve top-K
evidence, build a grounded answer prompt, ask a generator backend for a
single letter, and score it against the gold key. Per-item failures are
recorded on the item's record and never abort the run. Abstentions count
as incorrect.
"""

from __future__ import annotations

import re
import time
from collections.abc import Callable, Sequence
from dataclasses import dataclass

from .backends import EmbedderBackend, GeneratorBackend, Message, estimate_output_tokens
from .config import ANSWER_PROMPT_VERSION, RunConfig
from .costs import CostEntry
from .errors import ContrastiveRetrievalError, EmptyInputError
from .hypotheses import (
    HypothesisPair,
    QAItem,
    embed_pair,
    generate_pair,
    render_hypo_doc_prompt,
    render_pseudo_doc_prompt,
)
from .retrieval import (
    METHOD_CHR,
    METHOD_H_PLUS_ONLY,
    METHOD_HYDE,
    METHOD_QUERY2DOC,
    METHOD_STANDARD,
    METHODS,
    Corpus,
    RankedResult,
    retrieve_chr,
    retrieve_h_plus_only,
    retrieve_hyde,
    retrieve_query2doc,
    retrieve_standard,
)

ABSTAIN = "abstain"

ANSWER_SYSTEM_PROMPT = (
    "You are a careful clinician answering multiple-choice questions strictly "
    "from the provided evidence."
)

ANSWER_INSTRUCTION = (
    'Answer with the single letter of the best option, formatted exactly as "Answer: X".'
)

# Hypothesis pairs (with embeddings) and their generation costs, keyed by
# item id. A sweep passes one cache across every lambda so hypotheses are
# generated once and only the scoring changes.
PairCache = dict[str, tuple[HypothesisPair, CostEntry]]


@dataclass(frozen=True)
class EvalRecord:
    """Outcome of one question under one method."""

    item_id: str
    method: str
    ranked: RankedResult
    predicted: str
    correct: bool
    cost: CostEntry
    answer_cost: CostEntry
    lam: float | None = None
    pair: HypothesisPair | None = None
    dataset: str = "default"
    error: str | None = None


def build_answer_prompt(item: QAItem, hits: RankedResult, corpus: Corpus) -> str:
    """Assemble the evidence-grounded user prompt for the answer call.

    Layout, in order: each retrieved document prefixed "[Doc i]" by rank,
    the question stem, the lettered options, the fixed single-letter
    instruction.
    """
    if not hits.hits:
        raise ValueError("cannot build an answer prompt from zero hits")
    lines = [
        f"[Doc {rank}] {corpus.get(doc_id).text}"
        for rank, (doc_id, _) in enumerate(hits.hits, start=1)
    ]
    lines.append("")
    lines.append(f"Question: {item.stem}")
    lines.append("Options:")
    lines.append(item.options_block())
    lines.append("")
    lines.append(ANSWER_INSTRUCTION)
    return "\n".join(lines)


_ANSWER_LINE_RE = re.compile(r"^\s*answer\s*:\s*\(?([A-Za-z])\)?(?![\w])", re.IGNORECASE | re.MULTILINE)
_PAREN_RE = re.compile(r"\(([A-Za-z])\)")
_LEADING_RE = re.compile(r"^\s*([A-Za-z])(?![\w])")


def extract_answer(raw: str, options: Sequence[str]) -> str:
    """Pull the chosen option letter out of free-form generator text.

    Priority: an "Answer: X" line, then a parenthesized "(X)", then a bare
    leading letter. Only letters among ``options`` count; anything else
    abstains.
    """
    valid = {letter.upper() for letter in options}
    for regex in (_ANSWER_LINE_RE, _PAREN_RE, _LEADING_RE):
        for match in regex.finditer(raw):
            letter = match.group(1).upper()
            if letter in valid:
                return letter
    return ABSTAIN


def _cost_of(calls: int, tokens: int, started: float | None, clock) -> CostEntry:
    wall = 0 if started is None else int(round((clock() - started) * 1000))
    return CostEntry(llm_calls=calls, output_tokens=tokens, wall_ms=wall)


def _tokens_of(result) -> int:
    if result.output_tokens is not None:
        return result.output_tokens
    return estimate_output_tokens(result.text)


def _get_pair(
    item: QAItem,
    config: RunConfig,
    generator: GeneratorBackend,
    embedder: EmbedderBackend,
    pair_cache: PairCache | None,
) -> tuple[HypothesisPair, CostEntry]:
    if pair_cache is not None and item.id in pair_cache:
        return pair_cache[item.id]
    pair, cost = generate_pair(item, generator, config.max_retries, config.temperature)
    pair = embed_pair(pair, embedder)
    if pair_cache is not None:
        pair_cache[item.id] = (pair, cost)
    return pair, cost


def _expand_and_retrieve(
    item: QAItem,
    method: str,
    corpus: Corpus,
    config: RunConfig,
    generator: GeneratorBackend,
    embedder: EmbedderBackend,
    pair_cache: PairCache | None,
) -> tuple[RankedResult, HypothesisPair | None, int, int]:
    """Run the expansion stage; returns (ranked, pair, llm_calls, tokens)."""
    if method == METHOD_STANDARD:
        return retrieve_standard(item, corpus, config.k, embedder), None, 0, 0

    if method in (METHOD_CHR, METHOD_H_PLUS_ONLY):
        pair, cost = _get_pair(item, config, generator, embedder, pair_cache)
        if method == METHOD_CHR:
            ranked = retrieve_chr(pair, corpus, config.lam, config.k)
        else:
            ranked = retrieve_h_plus_only(pair, corpus, config.k)
        return ranked, pair, cost.llm_calls, cost.output_tokens

    if method == METHOD_HYDE:
        texts: list[str] = []
        calls = tokens = 0
        for draft in range(1, config.hyde_n + 1):
            system, user = render_hypo_doc_prompt(item, draft=draft, total=config.hyde_n)
            result = generator.complete(
                _messages(system, user), temperature=config.temperature
            )
            calls += 1
            tokens += _tokens_of(result)
            texts.append(result.text)
        return retrieve_hyde(texts, corpus, config.k, embedder), None, calls, tokens

    if method == METHOD_QUERY2DOC:
        system, user = render_pseudo_doc_prompt(item)
        result = generator.complete(_messages(system, user), temperature=config.temperature)
        # An empty generation degrades to repeating the stem as pseudo-doc.
        pseudo = result.text.strip() or item.stem
        ranked = retrieve_query2doc(item, pseudo, corpus, config.k, embedder)
        return ranked, None, 1, _tokens_of(result)

    raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")


def _messages(system: str, user: str) -> list[Message]:
    return [{"role": "system", "content": system}, {"role": "user", "content": user}]


def run_benchmark(
    dataset: Sequence[QAItem],
    method: str,
    corpus: Corpus,
    config: RunConfig,
    *,
    generator: GeneratorBackend,
    answer_generator: GeneratorBackend,
    embedder: EmbedderBackend,
    pair_cache: PairCache | None = None,
    dataset_name: str = "default",
    clock: Callable[[], float] | None = time.perf_counter,
) -> tuple[list[EvalRecord], dict]:
    """Evaluate every item under one method; never aborts on a single item.

    ``clock`` stamps wall_ms on cost entries; passing None zeroes timings,
    which keeps record files byte-identical across reruns of deterministic
    backends. Records come back sorted by item id.
    """
    if not dataset:
        raise EmptyInputError("dataset must contain at least one item")
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    if config.answer_prompt_version != ANSWER_PROMPT_VERSION:
        raise ValueError(
            f"unsupported answer prompt version {config.answer_prompt_version!r}"
        )

    lam = config.lam if method == METHOD_CHR else None
    records: list[EvalRecord] = []
    for item in dataset:
        pair: HypothesisPair | None = None
        ranked: RankedResult | None = None
        exp_cost = CostEntry()
        ans_cost = CostEntry()
        predicted = ABSTAIN
        error: str | None = None
        try:
            started = clock() if clock else None
            ranked, pair, calls, tokens = _expand_and_retrieve(
                item, method, corpus, config, generator, embedder, pair_cache
            )
            exp_cost = _cost_of(calls, tokens, started, clock)

            started = clock() if clock else None
            prompt = build_answer_prompt(item, ranked, corpus)
            result = answer_generator.complete(
                _messages(ANSWER_SYSTEM_PROMPT, prompt), temperature=config.temperature
            )
            ans_cost = _cost_of(1, _tokens_of(result), started, clock)
            predicted = extract_answer(result.text, list(item.options))
        except ContrastiveRetrievalError as exc:
            error = f"{type(exc).__name__}: {exc}"
        if ranked is None:
            ranked = RankedResult(hits=(), method=method, lam=lam)
        correct = predicted != ABSTAIN and predicted == item.answer_key
        records.append(
            EvalRecord(
                item_id=item.id,
                method=method,
                ranked=ranked,
                predicted=predicted,
                correct=correct,
                cost=exp_cost,
                answer_cost=ans_cost,
                lam=lam,
                pair=pair,
                dataset=dataset_name,
                error=error,
            )
        )
    records.sort(key=lambda r: r.item_id)
    return records, summarize(records)


def accuracy(records: Sequence[EvalRecord]) -> float:
    """Fraction of records answered correctly; abstentions count against."""
    if not records:
        raise EmptyInputError("accuracy over zero records is undefined")
    return sum(1 for r in records if r.correct) / len(records)


def _aggregate_costs(entries: Sequence[CostEntry]) -> dict:
    n = len(entries)
    calls = sum(e.llm_calls for e in entries)
    tokens = sum(e.output_tokens for e in entries)
    wall = sum(e.wall_ms for e in entries)
    return {
        "llm_calls_total": calls,
        "llm_calls_mean": calls / n,
        "output_tokens_total": tokens,
        "output_tokens_mean": tokens / n,
        "wall_ms_total": wall,
    }


def summarize(records: Sequence[EvalRecord]) -> dict:
    """Aggregate a homogeneous record list into a summary mapping."""
    if not records:
        raise EmptyInputError("cannot summarize zero records")
    methods = sorted({r.method for r in records})
    summary: dict = {
        "method": methods[0] if len(methods) == 1 else "mixed",
        "n": len(records),
        "correct": sum(1 for r in records if r.correct),
        "accuracy": accuracy(records),
        "abstentions": sum(1 for r in records if r.predicted == ABSTAIN),
        "item_errors": sum(1 for r in records if r.error is not None),
        "expansion_cost": _aggregate_costs([r.cost for r in records]),
        "answer_cost": _aggregate_costs([r.answer_cost for r in records]),
    }
    lams = {r.lam for r in records}
    if len(lams) == 1 and next(iter(lams)) is not None:
        summary["lambda"] = next(iter(lams))
    return summary
