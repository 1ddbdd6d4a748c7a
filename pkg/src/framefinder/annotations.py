"""Turn per-keyframe (tag, relevance) pairs into the scene-tags token field.

A tag's weight is carried purely by repetition: each tag is written
``ceil(relevance)`` times, so a plain term-frequency index recovers the
relevance ordering without any custom scoring hooks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .model import normalize_label

#: Ceiling applied to per-tag repetitions to bound index bloat.
MAX_REPEATS = 50


@dataclass(frozen=True)
class TagAnnotation:
    tag: str
    relevance: float

    def __post_init__(self) -> None:
        if not self.tag:
            raise ValueError("tag must be nonempty")
        if not self.relevance > 0:
            raise ValueError(f"relevance must be > 0, got {self.relevance}")


def encode_tags(annotations: list[TagAnnotation], max_repeats: int = MAX_REPEATS) -> str:
    """Encode annotations as a space-separated field of repeated tags.

    Each distinct tag appears ``ceil(relevance)`` times (capped). Duplicate
    tags are merged by summing their relevances first. Distinct tags are
    emitted by descending relevance, ties broken lexicographically; only the
    resulting term frequencies matter to the index.
    """
    merged: dict[str, float] = {}
    for ann in annotations:
        if not ann.relevance > 0:
            raise ValueError(f"relevance must be > 0, got {ann.relevance}")
        tag = normalize_label(ann.tag)
        merged[tag] = merged.get(tag, 0.0) + ann.relevance
    ordered = sorted(merged.items(), key=lambda kv: (-kv[1], kv[0]))
    parts: list[str] = []
    for tag, relevance in ordered:
        count = min(math.ceil(relevance), max_repeats)
        parts.extend([tag] * count)
    return " ".join(parts)
