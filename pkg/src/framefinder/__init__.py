"""Multimodal keyframe search over a single inverted text index."""

from .model import (
    Aspect,
    BoundingBox,
    GridCell,
    KeyframeId,
    KeyframeRecord,
    cell_token,
    cells_covered,
    occurrence_token,
)
from .index import IndexSnapshot, KeyframeIndex, Ranker, RankerKind
from .pipeline import QuerySpec, RankerTriple, ResultPage, execute

__all__ = [
    "Aspect",
    "BoundingBox",
    "GridCell",
    "IndexSnapshot",
    "KeyframeId",
    "KeyframeIndex",
    "KeyframeRecord",
    "QuerySpec",
    "Ranker",
    "RankerKind",
    "RankerTriple",
    "ResultPage",
    "cell_token",
    "cells_covered",
    "execute",
    "occurrence_token",
]

__version__ = "0.1.0"
