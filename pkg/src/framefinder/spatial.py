"""Spatial and global object/color token fields.

Two encodings are produced per keyframe: the bbox field spells out *where*
things are (one ``<cell><label>`` token per covered grid cell per label)
and the classes field spells out *how many* (``<label><i>`` occurrence
tokens, plus one bare name per palette color present anywhere in the image).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

from .model import (
    BoundingBox,
    GridCell,
    cell_token,
    cells_covered,
    normalize_label,
    occurrence_token,
    sorted_cells,
)

#: Detections below this confidence are dropped at ingest.
DEFAULT_CONFIDENCE_THRESHOLD = 0.25

#: Occurrence numbering stops here to bound the classes vocabulary.
MAX_OCCURRENCES = 20


@dataclass(frozen=True)
class Detection:
    """One detected object; ``labels`` may carry hypernyms (car + vehicle)."""

    labels: tuple[str, ...]
    box: BoundingBox
    confidence: float

    def __post_init__(self) -> None:
        if not self.labels:
            raise ValueError("detection must carry at least one label")
        if len(set(self.labels)) != len(self.labels):
            raise ValueError(f"labels must be distinct, got {self.labels}")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence {self.confidence} outside [0, 1]")


@dataclass(frozen=True)
class ColorCellAssignment:
    """Palette colors assigned to one grid cell."""

    cell: GridCell
    colors: frozenset[str]

    def __post_init__(self) -> None:
        if not self.colors:
            raise ValueError("color assignment must be nonempty")


def filter_by_confidence(
    detections: Iterable[Detection], threshold: float = DEFAULT_CONFIDENCE_THRESHOLD
) -> list[Detection]:
    return [d for d in detections if d.confidence >= threshold]


def expand_hypernyms(
    detections: Iterable[Detection], ancestors: Mapping[str, list[str]]
) -> list[Detection]:
    """Extend each detection's labels with configured ancestors (dedup, stable)."""
    expanded = []
    for det in detections:
        labels = list(det.labels)
        for label in det.labels:
            for ancestor in ancestors.get(label, []):
                ancestor = normalize_label(ancestor)
                if ancestor not in labels:
                    labels.append(ancestor)
        expanded.append(Detection(tuple(labels), det.box, det.confidence))
    return expanded


def encode_bboxes(
    detections: Iterable[Detection],
    color_cells: Iterable[ColorCellAssignment] = (),
) -> str:
    """Location field: one cell token per covered cell per label, then colors.

    Cells are emitted in row-major reading order; callers are expected to have
    applied the confidence filter already.
    """
    parts: list[str] = []
    for det in detections:
        cells = sorted_cells(cells_covered(det.box))
        for cell in cells:
            for label in det.labels:
                parts.append(cell_token(cell, normalize_label(label)))
    for assignment in color_cells:
        for color in sorted(assignment.colors):
            parts.append(cell_token(assignment.cell, color))
    return " ".join(parts)


def encode_classes(
    detections: Iterable[Detection],
    palette_colors: Iterable[str] = (),
    max_occurrences: int = MAX_OCCURRENCES,
) -> str:
    """Global field: per label one occurrence token per instance, numbered 1..n.

    A record with three cars carries ``car1 car2 car3``, which makes "at most
    n" filters pure term lookups (cap n excludes any record containing
    ``car<n+1>``). Palette colors present in the image are appended once as
    bare names; color queries are presence queries, not counted ones.
    """
    counts: dict[str, int] = {}
    for det in detections:
        for label in det.labels:
            label = normalize_label(label)
            counts[label] = counts.get(label, 0) + 1
    parts: list[str] = []
    for label, count in counts.items():
        for i in range(1, min(count, max_occurrences) + 1):
            parts.append(occurrence_token(label, i))
    parts.extend(sorted({normalize_label(c) for c in palette_colors}))
    return " ".join(parts)
