"""Replay logged queries across every ranker assignment and report MRR.

A logged query carries the target segment's keyframes as ground truth; a
replay succeeds as soon as any of them surfaces, so the quality measure is
the reciprocal of the first relevant rank. The sweep re-executes the full log
under all 64 ranker triples and ranks the assignments by mean reciprocal
rank, optionally truncated at a display cutoff k.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .index import IndexSnapshot
from .model import KeyframeId
from .pipeline import (
    QuerySpec,
    RankerTriple,
    ResultPage,
    all_triples,
    execute,
    spec_from_json,
    spec_to_json,
)

DEFAULT_K_VALUES = (1, 5, 10, 25, 50, 100, 1000)

#: Page size used during replay; covers the largest default cutoff.
EVAL_PAGE_SIZE = 1000

REPORT_NOTES = (
    "Known-item replay MRR depends heavily on corpus scale and log quality; "
    "absolute values are not comparable across deployments (large production "
    "logs tend to land in the low hundredths for the best assignments and "
    "the low thousandths for the worst). Compare assignments within this "
    "report only."
)


@dataclass(frozen=True)
class LoggedQuery:
    """One replayable query with the ground-truth keyframes of its target."""

    spec: QuerySpec
    truth: frozenset[KeyframeId]

    def __post_init__(self) -> None:
        if not self.truth:
            raise ValueError("ground truth must be nonempty")


def load_log(path: Path | str) -> list[LoggedQuery]:
    """Read a JSONL query log: {"query": <spec>, "truth": [{video, segment}]}."""
    queries = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                payload = json.loads(line)
                spec = spec_from_json(payload["query"])
                truth = frozenset(
                    KeyframeId(t["video"], t["segment"]) for t in payload["truth"]
                )
                queries.append(LoggedQuery(spec, truth))
            except (KeyError, TypeError, ValueError) as exc:
                raise ValueError(f"{path}:{lineno}: malformed log entry: {exc}") from exc
    return queries


def dump_log(queries: Iterable[LoggedQuery], path: Path | str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for q in queries:
            fh.write(json.dumps({
                "query": spec_to_json(q.spec),
                "truth": [
                    {"video": t.video_id, "segment": t.segment_index}
                    for t in sorted(q.truth)
                ],
            }) + "\n")


def first_relevant_rank(
    results: ResultPage | Sequence[KeyframeId], truth: Iterable[KeyframeId]
) -> int | None:
    """1-based rank of the first ground-truth hit, or None when absent."""
    ids = results.ids() if isinstance(results, ResultPage) else list(results)
    truth = set(truth)
    if not truth:
        raise ValueError("ground truth must be nonempty")
    for rank, kid in enumerate(ids, start=1):
        if kid in truth:
            return rank
    return None


def reciprocal_rank(
    results: ResultPage | Sequence[KeyframeId], truth: Iterable[KeyframeId]
) -> float:
    rank = first_relevant_rank(results, truth)
    return 0.0 if rank is None else 1.0 / rank


def rr_at_k(rank: int | None, k: int) -> float:
    """Reciprocal rank truncated at k: zero when the first hit is beyond k."""
    if rank is None or rank > k:
        return 0.0
    return 1.0 / rank


def mean_rr(ranks: Sequence[int | None]) -> float:
    if not ranks:
        raise ValueError("need at least one query")
    return sum(0.0 if r is None else 1.0 / r for r in ranks) / len(ranks)


def mean_rr_at_k(ranks: Sequence[int | None], k: int) -> float:
    if not ranks:
        raise ValueError("need at least one query")
    return sum(rr_at_k(r, k) for r in ranks) / len(ranks)


def evaluate_triple(
    snapshot: IndexSnapshot,
    queries: Sequence[LoggedQuery],
    triple: RankerTriple,
    page_size: int = EVAL_PAGE_SIZE,
    *,
    palette_names: Iterable[str] = (),
    weights=None,
) -> list[int | None]:
    """First-relevant ranks for each query under one ranker assignment."""
    kwargs = {"palette_names": tuple(palette_names)}
    if weights is not None:
        kwargs["weights"] = weights
    ranks: list[int | None] = []
    for q in queries:
        page = execute(snapshot, q.spec, triple, page_size, **kwargs)
        ranks.append(first_relevant_rank(page, q.truth))
    return ranks


@dataclass(frozen=True)
class TripleReport:
    triple: str
    mrr: float
    mrr_at_k: dict[int, float]
    found: int  # queries whose truth surfaced under this triple


@dataclass
class SweepReport:
    """Outcome of replaying a log under all 64 ranker assignments."""

    rows: list[TripleReport]
    eligible_count: int
    excluded_no_hit: int
    excluded_ranker_independent: int
    missing_truth_queries: int
    k_values: tuple[int, ...]
    notes: str = REPORT_NOTES
    per_query_ranks: dict[str, list[int | None]] = field(default_factory=dict)

    @property
    def best(self) -> TripleReport:
        return self.rows[0]

    def to_json(self) -> dict:
        return {
            "eligible_queries": self.eligible_count,
            "excluded_no_hit": self.excluded_no_hit,
            "excluded_ranker_independent": self.excluded_ranker_independent,
            "queries_with_missing_truth": self.missing_truth_queries,
            "k_values": list(self.k_values),
            "notes": self.notes,
            "triples": [
                {
                    "triple": row.triple,
                    "mrr": row.mrr,
                    "mrr_at_k": {str(k): v for k, v in row.mrr_at_k.items()},
                    "found": row.found,
                }
                for row in self.rows
            ],
        }

    def format_table(self, limit: int | None = None) -> str:
        header = f"{'triple':<24}{'MRR':>10}" + "".join(
            f"{'MRR@' + str(k):>12}" for k in self.k_values
        )
        lines = [
            f"eligible queries: {self.eligible_count} "
            f"(excluded: {self.excluded_no_hit} without hits, "
            f"{self.excluded_ranker_independent} ranker-independent)",
            header,
            "-" * len(header),
        ]
        for row in self.rows[:limit]:
            lines.append(
                f"{row.triple:<24}{row.mrr:>10.4f}"
                + "".join(f"{row.mrr_at_k[k]:>12.4f}" for k in self.k_values)
            )
        return "\n".join(lines)


def sweep(
    snapshot: IndexSnapshot,
    queries: Sequence[LoggedQuery],
    k_values: Sequence[int] = DEFAULT_K_VALUES,
    page_size: int = EVAL_PAGE_SIZE,
    *,
    palette_names: Iterable[str] = (),
    weights=None,
    max_workers: int = 4,
) -> SweepReport:
    """Replay the log under every triple and rank assignments by MRR.

    Similarity-mode queries are ranker-independent and excluded upfront.
    Queries whose truth never surfaces under *any* triple carry no signal for
    choosing a ranker assignment, so they are counted and left out of the
    eligible set; remaining queries without a hit under a given triple score
    zero for it.
    """
    palette_names = tuple(palette_names)
    replayable = [q for q in queries if not q.spec.is_similarity]
    ranker_independent = len(queries) - len(replayable)
    missing = sum(
        1
        for q in replayable
        if all(t.key not in snapshot.ordinal_of for t in q.truth)
    )
    triples = all_triples()

    def run(triple: RankerTriple) -> tuple[str, list[int | None]]:
        return str(triple), evaluate_triple(
            snapshot, replayable, triple, page_size,
            palette_names=palette_names, weights=weights,
        )

    if max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            all_ranks = dict(pool.map(run, triples))
    else:
        all_ranks = dict(run(t) for t in triples)

    eligible = [
        i
        for i in range(len(replayable))
        if any(all_ranks[str(t)][i] is not None for t in triples)
    ]
    excluded_no_hit = len(replayable) - len(eligible)
    rows = []
    for triple in triples:
        ranks = [all_ranks[str(triple)][i] for i in eligible]
        if ranks:
            row = TripleReport(
                triple=str(triple),
                mrr=mean_rr(ranks),
                mrr_at_k={k: mean_rr_at_k(ranks, k) for k in k_values},
                found=sum(1 for r in ranks if r is not None),
            )
        else:
            row = TripleReport(str(triple), 0.0, {k: 0.0 for k in k_values}, 0)
        rows.append(row)
    rows.sort(key=lambda r: (-r.mrr, r.triple))
    return SweepReport(
        rows=rows,
        eligible_count=len(eligible),
        excluded_no_hit=excluded_no_hit,
        excluded_ranker_independent=ranker_independent,
        missing_truth_queries=missing,
        k_values=tuple(k_values),
        per_query_ranks=all_ranks,
    )
