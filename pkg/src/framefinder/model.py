"""Shared domain types: keyframe identity, the 7x7 grid, tokens and records.

Every searchable signal in the engine is eventually spelled as space-separated
tokens over ``[a-z0-9]``. This module owns that token grammar: grid cells,
cell+class tokens, class+occurrence tokens, and the label normalization that
keeps the grammar unambiguous.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from enum import Enum

GRID_SIZE = 7
COLUMNS = "abcdefg"

#: A cell is covered when at least this fraction of its area is inside the box.
DEFAULT_CELL_COVERAGE = 0.20

_LABEL_STRIP_RE = re.compile(r"[^a-z0-9]+")
_TOKEN_RE = re.compile(r"[a-z0-9]+")
_CELL_TOKEN_RE = re.compile(r"^([a-g])([1-7])([a-z][a-z0-9]*)$")
_OCC_TOKEN_RE = re.compile(r"^([a-z](?:[a-z0-9]*[a-z])?)([1-9][0-9]*)$")


class InvalidLabelError(ValueError):
    """Raised when a class label cannot be normalized to a valid token."""


class Aspect(Enum):
    """Coarse aspect-ratio bucket used as a metadata filter."""

    AR_4_3 = "4:3"
    AR_16_9 = "16:9"
    OTHER = "other"


def classify_aspect(width: int, height: int) -> Aspect:
    """Bucket an image size into 4:3 / 16:9 / other (0.05 ratio tolerance)."""
    if width <= 0 or height <= 0:
        return Aspect.OTHER
    ratio = width / height
    if abs(ratio - 4 / 3) < 0.05:
        return Aspect.AR_4_3
    if abs(ratio - 16 / 9) < 0.05:
        return Aspect.AR_16_9
    return Aspect.OTHER


def normalize_label(raw: str) -> str:
    """Normalize a class label to the token alphabet.

    Lowercases, drops everything outside ``[a-z0-9]`` (spaces, punctuation),
    and escapes a trailing digit with an ``x`` suffix so that a label never
    ends in a digit. The escape keeps ``label + count`` concatenations
    (occurrence tokens) parseable.
    """
    label = _LABEL_STRIP_RE.sub("", raw.lower())
    if not label:
        raise InvalidLabelError(f"label {raw!r} has no [a-z0-9] characters")
    if label[0].isdigit():
        # A leading digit would collide with the cell-row digit in cell tokens.
        label = "x" + label
    if label[-1].isdigit():
        label += "x"
    return label


@dataclass(frozen=True, order=True)
class KeyframeId:
    """Identity of one keyframe: the video it belongs to and its segment."""

    video_id: str
    segment_index: int

    def __post_init__(self) -> None:
        if not self.video_id:
            raise ValueError("video_id must be nonempty")
        if ":" in self.video_id:
            raise ValueError("video_id must not contain ':'")
        if self.segment_index < 0:
            raise ValueError("segment_index must be >= 0")

    @property
    def key(self) -> str:
        """Flat string form used in URLs and CSV rows."""
        return f"{self.video_id}:{self.segment_index}"

    @classmethod
    def from_key(cls, key: str) -> "KeyframeId":
        video, _, segment = key.rpartition(":")
        if not video or not segment.isdigit():
            raise ValueError(f"malformed keyframe key {key!r}")
        return cls(video, int(segment))


@dataclass(frozen=True, order=True)
class GridCell:
    """One cell of the 7x7 canvas grid; ``column`` in a..g, ``row`` in 1..7."""

    column: str
    row: int

    def __post_init__(self) -> None:
        if self.column not in COLUMNS:
            raise ValueError(f"column must be one of {COLUMNS!r}, got {self.column!r}")
        if not 1 <= self.row <= GRID_SIZE:
            raise ValueError(f"row must be in 1..{GRID_SIZE}, got {self.row}")

    @property
    def token(self) -> str:
        return f"{self.column}{self.row}"

    @property
    def col_index(self) -> int:
        """0-based column index, left to right."""
        return COLUMNS.index(self.column)

    @property
    def row_index(self) -> int:
        """0-based row index, top to bottom."""
        return self.row - 1

    @classmethod
    def from_indices(cls, col_index: int, row_index: int) -> "GridCell":
        return cls(COLUMNS[col_index], row_index + 1)


ALL_CELLS: tuple[GridCell, ...] = tuple(
    GridCell.from_indices(c, r) for r in range(GRID_SIZE) for c in range(GRID_SIZE)
)


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box in normalized image coordinates, origin top-left."""

    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self) -> None:
        for name in ("x_min", "y_min", "x_max", "y_max"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [0, 1]")
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValueError("box must have positive width and height")

    @property
    def center(self) -> tuple[float, float]:
        return ((self.x_min + self.x_max) / 2, (self.y_min + self.y_max) / 2)

    def union(self, other: "BoundingBox") -> "BoundingBox":
        return BoundingBox(
            min(self.x_min, other.x_min),
            min(self.y_min, other.y_min),
            max(self.x_max, other.x_max),
            max(self.y_max, other.y_max),
        )


@dataclass(frozen=True)
class KeyframeRecord:
    """One indexed keyframe: four token fields plus filterable metadata.

    All four text fields are space-separated tokens over ``[a-z0-9]``; any of
    them may be empty when the corresponding source signal is missing.
    """

    id: KeyframeId
    scene_tags: str = ""
    objcolor_bboxes: str = ""
    objcolor_classes: str = ""
    visual_features: str = ""
    is_bw: bool = False
    aspect: Aspect = Aspect.OTHER

    def __post_init__(self) -> None:
        for name in ("scene_tags", "objcolor_bboxes", "objcolor_classes", "visual_features"):
            text = getattr(self, name)
            if text and not all(_TOKEN_RE.fullmatch(t) for t in text.split(" ")):
                raise ValueError(f"field {name} contains tokens outside [a-z0-9]")


def cell_token(cell: GridCell, label: str) -> str:
    """Location+class token: the cell name immediately followed by the label."""
    return f"{cell.token}{label}"


def occurrence_token(label: str, n: int) -> str:
    """Class+occurrence token: the label immediately followed by decimal ``n``."""
    if n < 1:
        raise ValueError(f"occurrence must be >= 1, got {n}")
    return f"{label}{n}"


def parse_cell_token(token: str) -> tuple[GridCell, str]:
    """Inverse of :func:`cell_token` for normalized labels."""
    m = _CELL_TOKEN_RE.match(token)
    if m is None:
        raise ValueError(f"not a cell token: {token!r}")
    return GridCell(m.group(1), int(m.group(2))), m.group(3)


def parse_occurrence_token(token: str) -> tuple[str, int]:
    """Inverse of :func:`occurrence_token` for normalized labels."""
    m = _OCC_TOKEN_RE.match(token)
    if m is None:
        raise ValueError(f"not an occurrence token: {token!r}")
    return m.group(1), int(m.group(2))


def cell_at(x: float, y: float) -> GridCell:
    """The cell containing a point; points on the far edge map to the last cell."""
    col = min(int(x * GRID_SIZE), GRID_SIZE - 1)
    row = min(int(y * GRID_SIZE), GRID_SIZE - 1)
    return GridCell.from_indices(col, row)


def cells_covered(
    box: BoundingBox, coverage: float = DEFAULT_CELL_COVERAGE
) -> set[GridCell]:
    """Grid cells a box occupies.

    A cell counts as covered when at least ``coverage`` of its area lies
    inside the box, or when the box center falls in it; the center rule
    guarantees a nonempty result for arbitrarily small boxes without letting
    boundary slivers spray tokens across neighbouring cells.
    """
    covered: set[GridCell] = set()
    cell_area = 1.0 / (GRID_SIZE * GRID_SIZE)
    lo_col = max(0, min(int(box.x_min * GRID_SIZE), GRID_SIZE - 1))
    hi_col = max(0, min(math.ceil(box.x_max * GRID_SIZE) - 1, GRID_SIZE - 1))
    lo_row = max(0, min(int(box.y_min * GRID_SIZE), GRID_SIZE - 1))
    hi_row = max(0, min(math.ceil(box.y_max * GRID_SIZE) - 1, GRID_SIZE - 1))
    for c in range(lo_col, hi_col + 1):
        left, right = c / GRID_SIZE, (c + 1) / GRID_SIZE
        dx = min(box.x_max, right) - max(box.x_min, left)
        if dx <= 0:
            continue
        for r in range(lo_row, hi_row + 1):
            top, bottom = r / GRID_SIZE, (r + 1) / GRID_SIZE
            dy = min(box.y_max, bottom) - max(box.y_min, top)
            if dy > 0 and dx * dy >= coverage * cell_area:
                covered.add(GridCell.from_indices(c, r))
    covered.add(cell_at(*box.center))
    return covered


def sorted_cells(cells: set[GridCell]) -> list[GridCell]:
    """Row-major reading order: top row first, left to right within a row."""
    return sorted(cells, key=lambda c: (c.row, c.column))
