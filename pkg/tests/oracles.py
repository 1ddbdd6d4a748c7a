"""Independent reference implementations used to cross-check the engine.

Everything here is deliberately plain Python (no numpy, no shared code with
the package) so a bug in the engine cannot hide in its own oracle.
"""

from __future__ import annotations

import math


def oracle_scores(
    corpus: list[dict[str, int]],
    query: dict[str, float],
    kind: str,
    k1: float = 1.2,
    b: float = 0.75,
) -> dict[int, float]:
    """Score every matching document with scalar arithmetic.

    ``corpus`` is a list of per-document term-frequency mappings in ordinal
    order; returns {ordinal: score} for documents containing at least one
    query term.
    """
    n = len(corpus)
    df: dict[str, int] = {}
    for doc in corpus:
        for term in doc:
            df[term] = df.get(term, 0) + 1
    lens = [sum(doc.values()) for doc in corpus]
    nonzero = [l for l in lens if l > 0]
    avg_len = sum(nonzero) / len(nonzero) if nonzero else 0.0
    norms = [math.sqrt(sum(tf * tf for tf in doc.values())) for doc in corpus]
    qnorm = math.sqrt(sum(q * q for q in query.values()))

    scores: dict[int, float] = {}
    for ordinal, doc in enumerate(corpus):
        if not any(t in doc for t in query):
            continue
        total = 0.0
        for term, qtf in query.items():
            tf = doc.get(term)
            if tf is None:
                continue
            if kind in ("TF", "NormTF"):
                total += qtf * tf
            elif kind == "TFIDF":
                idf = 1.0 + math.log(n / (1.0 + df[term]))
                total += qtf * tf * idf * idf
            elif kind == "BM25":
                idf = math.log(1.0 + (n - df[term] + 0.5) / (df[term] + 0.5))
                denom = tf + k1 * (1.0 - b + b * lens[ordinal] / avg_len)
                total += qtf * idf * tf * (k1 + 1.0) / denom
            else:
                raise ValueError(kind)
        if kind == "NormTF":
            total = total / (norms[ordinal] * qnorm) if qnorm > 0 else 0.0
        elif kind == "TFIDF":
            total = total / norms[ordinal]
        scores[ordinal] = total
    return scores


def oracle_ranking(
    corpus: list[dict[str, int]], query: dict[str, float], kind: str
) -> list[tuple[int, float]]:
    scores = oracle_scores(corpus, query, kind)
    return sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))


def tokenize(text: str) -> dict[str, int]:
    counts: dict[str, int] = {}
    for token in text.split():
        counts[token] = counts.get(token, 0) + 1
    return counts


def box_cell_fraction(
    box: tuple[float, float, float, float], col: int, row: int, samples: int = 100
) -> float:
    """Monte-Carlo-free quadrature: fraction of cell (col,row) inside the box.

    Rasterizes the cell into samples x samples midpoints and counts those that
    fall inside the rectangle; independent of the analytic intersection used
    by the engine.
    """
    x0, y0, x1, y1 = box
    left, top = col / 7, row / 7
    inside = 0
    for i in range(samples):
        x = left + (i + 0.5) / (samples * 7)
        for j in range(samples):
            y = top + (j + 0.5) / (samples * 7)
            if x0 <= x <= x1 and y0 <= y <= y1:
                inside += 1
    return inside / (samples * samples)


def dot(a, b) -> float:
    return sum(x * y for x, y in zip(a, b))
