"""Query compilation and the staged search cascade.

A query can mix tags, canvas boxes (objects and colors), occurrence caps and
metadata filters. Class matching runs first and fixes the candidate set:
every candidate must contain all sketched classes and respect the filters.
Tag scoring and then bbox-location scoring only *reorder* those candidates,
never add or remove any. Query-by-example bypasses the cascade entirely and
goes straight to the visual-similarity searcher.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field as dataclass_field
from typing import Iterable, Mapping

import numpy as np

from . import features
from .index import CLASSES_FIELD, IndexSnapshot, Ranker, RankerKind
from .model import (
    Aspect,
    BoundingBox,
    KeyframeId,
    cell_token,
    cells_covered,
    normalize_label,
    occurrence_token,
    sorted_cells,
)

QUERY_SCHEMA_VERSION = 1

#: Rescoring looks at this many top candidates; the rest keep stage-1 order.
DEFAULT_RESCORE_WINDOW = 10_000

#: Stage weights for score fusion: classes, tags, bbox. The bbox component is
#: the final rescorer and intentionally the heaviest.
DEFAULT_WEIGHTS = (1.0, 1.0, 2.0)

DEFAULT_TRIPLE_NAME = "NormTF-BM25-TF"


class InvalidQueryError(ValueError):
    pass


@dataclass(frozen=True)
class CanvasBox:
    """One sketched box: a label placed somewhere on the 7x7 canvas."""

    label: str
    box: BoundingBox
    kind: str | None = None  # "object" | "color"; inferred from the palette if None

    def __post_init__(self) -> None:
        if self.kind not in (None, "object", "color"):
            raise InvalidQueryError(f"canvas kind must be object|color, got {self.kind!r}")
        object.__setattr__(self, "label", normalize_label(self.label))


@dataclass(frozen=True)
class QuerySpec:
    """One user query; the JSON form of this is the shared wire contract."""

    tags: tuple[str, ...] = ()
    canvas: tuple[CanvasBox, ...] = ()
    occurrence_caps: Mapping[str, int] = dataclass_field(default_factory=dict)
    bw: bool | None = None
    aspect: Aspect | None = None
    example_id: KeyframeId | None = None

    def validate(self) -> None:
        if self.example_id is not None:
            if self.tags or self.canvas or self.occurrence_caps \
                    or self.bw is not None or self.aspect is not None:
                raise InvalidQueryError("similarity mode excludes all other query fields")
            return
        if not self.tags and not self.canvas:
            raise InvalidQueryError("query needs tags, canvas boxes, or an example id")
        for cap in self.occurrence_caps.values():
            if cap < 0:
                raise InvalidQueryError("occurrence caps must be >= 0")

    @property
    def is_similarity(self) -> bool:
        return self.example_id is not None


def spec_to_json(spec: QuerySpec) -> dict:
    return {
        "v": QUERY_SCHEMA_VERSION,
        "tags": list(spec.tags),
        "canvas": [
            {
                "label": cb.label,
                "kind": cb.kind,
                "box": [cb.box.x_min, cb.box.y_min, cb.box.x_max, cb.box.y_max],
            }
            for cb in spec.canvas
        ],
        "caps": dict(spec.occurrence_caps),
        "bw": spec.bw,
        "aspect": spec.aspect.value if spec.aspect else None,
        "example": (
            {"video": spec.example_id.video_id, "segment": spec.example_id.segment_index}
            if spec.example_id
            else None
        ),
    }


def spec_from_json(payload: Mapping) -> QuerySpec:
    """Parse and validate the wire form; raises InvalidQueryError on bad input."""
    try:
        version = payload.get("v", QUERY_SCHEMA_VERSION)
        if version != QUERY_SCHEMA_VERSION:
            raise InvalidQueryError(f"unsupported query schema version {version!r}")
        canvas = []
        for cb in payload.get("canvas") or []:
            x0, y0, x1, y1 = cb["box"]
            canvas.append(
                CanvasBox(
                    label=_normalize_query_label(cb["label"]),
                    box=BoundingBox(x0, y0, x1, y1),
                    kind=cb.get("kind"),
                )
            )
        caps = {
            _normalize_query_label(label): int(cap)
            for label, cap in (payload.get("caps") or {}).items()
        }
        example = payload.get("example")
        aspect = payload.get("aspect")
        spec = QuerySpec(
            tags=tuple(_normalize_tag(t) for t in payload.get("tags") or []),
            canvas=tuple(canvas),
            occurrence_caps=caps,
            bw=payload.get("bw"),
            aspect=Aspect(aspect) if aspect else None,
            example_id=KeyframeId(example["video"], example["segment"]) if example else None,
        )
    except InvalidQueryError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidQueryError(f"malformed query spec: {exc}") from exc
    spec.validate()
    return spec


def _normalize_query_label(raw: str) -> str:
    return normalize_label(raw)


def _normalize_tag(raw: str) -> str:
    """Tags may carry a trailing ``*`` for prefix search."""
    raw = raw.strip()
    wildcard = raw.endswith("*")
    term = normalize_label(raw.rstrip("*"))
    return term + "*" if wildcard else term


@dataclass(frozen=True)
class RankerTriple:
    """Which ranker runs each stage: bbox, annotation, and class search."""

    bb: Ranker
    an: Ranker
    oc: Ranker

    @classmethod
    def parse(cls, name: str) -> "RankerTriple":
        parts = name.split("-")
        if len(parts) != 3:
            raise ValueError(f"expected <bb>-<an>-<oc>, got {name!r}")
        return cls(*(Ranker.parse(p) for p in parts))

    @classmethod
    def default(cls) -> "RankerTriple":
        return cls.parse(DEFAULT_TRIPLE_NAME)

    def __str__(self) -> str:
        return f"{self.bb}-{self.an}-{self.oc}"


def all_triples() -> list[RankerTriple]:
    """Every ranker assignment: 4 kinds across 3 stages, 64 combinations."""
    kinds = [Ranker(k) for k in RankerKind]
    return [
        RankerTriple(bb, an, oc) for bb in kinds for an in kinds for oc in kinds
    ]


@dataclass(frozen=True)
class CompiledQuery:
    """Per-stage term vectors plus hard filters derived from one QuerySpec."""

    oclass_terms: dict[str, int]
    annotation_terms: dict[str, int]
    bbox_terms: dict[str, int]
    must_have: frozenset[str]
    must_not: frozenset[str]
    bw: bool | None
    aspect: Aspect | None

    @property
    def has_canvas(self) -> bool:
        return bool(self.bbox_terms)

    @property
    def has_tags(self) -> bool:
        return bool(self.annotation_terms)


def compile_spec(
    spec: QuerySpec,
    snapshot: IndexSnapshot | None = None,
    palette_names: Iterable[str] = (),
) -> CompiledQuery:
    """Split a spec into the class/tag/bbox subqueries and hard filters.

    Canvas boxes run through the same grid tokenization as ingest, so a
    sketched box matches exactly the tokens an equally-placed detection
    produced. Sketched classes double as presence filters (a candidate must
    contain every sketched class); colors are indexed as bare names, objects
    as occurrence tokens, so their presence terms differ. Wildcard tags need
    a snapshot to expand against.
    """
    spec.validate()
    if spec.is_similarity:
        raise InvalidQueryError("similarity-mode specs bypass compilation")
    palette = set(palette_names)
    bbox_terms: Counter[str] = Counter()
    presence: dict[str, None] = {}
    for cb in spec.canvas:
        for cell in sorted_cells(cells_covered(cb.box)):
            bbox_terms[cell_token(cell, cb.label)] += 1
        is_color = cb.kind == "color" or (cb.kind is None and cb.label in palette)
        presence.setdefault(cb.label if is_color else occurrence_token(cb.label, 1))
    annotation_terms: Counter[str] = Counter()
    for tag in spec.tags:
        if tag.endswith("*"):
            if snapshot is None:
                raise InvalidQueryError("wildcard tags require a committed index")
            for term, _df in snapshot.expand_wildcard("scene_tags", tag[:-1]):
                annotation_terms[term] += 1
        else:
            annotation_terms[tag] += 1
    must_not = {
        occurrence_token(label, cap + 1) for label, cap in spec.occurrence_caps.items()
    }
    return CompiledQuery(
        oclass_terms=dict.fromkeys(presence, 1),
        annotation_terms=dict(annotation_terms),
        bbox_terms=dict(bbox_terms),
        must_have=frozenset(presence),
        must_not=frozenset(must_not),
        bw=spec.bw,
        aspect=spec.aspect,
    )


@dataclass
class ResultPage:
    """Ranked results; scores descending, ids unique."""

    entries: list[tuple[KeyframeId, float]]
    total_candidates: int = 0

    def ids(self) -> list[KeyframeId]:
        return [kid for kid, _ in self.entries]

    def group_by_video(self) -> list[tuple[str, list[tuple[KeyframeId, float]]]]:
        """Group entries by video, groups ordered by their best-ranked hit."""
        groups: dict[str, list[tuple[KeyframeId, float]]] = {}
        for kid, score in self.entries:
            groups.setdefault(kid.video_id, []).append((kid, score))
        return list(groups.items())


def _stage_norm(scores: np.ndarray) -> np.ndarray:
    top = scores.max() if scores.size else 0.0
    return scores / top if top > 0 else np.zeros_like(scores)


def execute(
    snapshot: IndexSnapshot,
    spec: QuerySpec,
    triple: RankerTriple | None = None,
    page_size: int = 100,
    *,
    palette_names: Iterable[str] = (),
    weights: tuple[float, float, float] = DEFAULT_WEIGHTS,
    rescore_window: int = DEFAULT_RESCORE_WINDOW,
    encoder_state: features.EncoderState | None = None,
) -> ResultPage:
    """Run the staged cascade for one spec and return the fused page.

    Stage 1 fixes candidates: class search when the canvas is nonempty,
    otherwise tag search; hard filters apply in both cases. Stages 2 and 3
    rescore the top ``rescore_window`` candidates (tags, then bbox layout)
    and are fused as a weighted sum of per-stage scores, each normalized by
    its stage maximum over the window. Candidates beyond the window keep
    their stage-1 order. Ties after fusion keep stage-1 rank.
    """
    spec.validate()
    triple = triple or RankerTriple.default()
    if spec.is_similarity:
        ranked = features.similar(snapshot, encoder_state, spec.example_id, page_size)
        return ResultPage(entries=ranked, total_candidates=len(ranked))
    compiled = compile_spec(spec, snapshot, palette_names)
    w_oc, w_an, w_bb = weights

    if compiled.has_canvas:
        ords, base = snapshot.score_arrays(CLASSES_FIELD, compiled.oclass_terms, triple.oc)
    else:
        ords, base = snapshot.score_arrays("scene_tags", compiled.annotation_terms, triple.an)
    keep = snapshot.filter_mask(
        ords, compiled.must_have, compiled.must_not, compiled.bw, compiled.aspect
    )
    ords, base = ords[keep], base[keep]
    total = int(len(ords))
    if total == 0:
        return ResultPage(entries=[], total_candidates=0)

    if not compiled.has_canvas:
        # Tag-only queries degenerate to a single annotation search.
        entries = [
            (snapshot.ids[int(o)], float(s))
            for o, s in zip(ords[:page_size], base[:page_size])
        ]
        return ResultPage(entries=entries, total_candidates=total)

    window = min(rescore_window, total)
    w_ords = ords[:window]
    fused = w_oc * _stage_norm(base[:window])
    if compiled.has_tags:
        an_ords, an_vals = snapshot.score_arrays(
            "scene_tags", compiled.annotation_terms, triple.an
        )
        lookup = np.zeros(snapshot.doc_count)
        lookup[an_ords] = an_vals
        fused = fused + w_an * _stage_norm(lookup[w_ords])
    bb_ords, bb_vals = snapshot.score_arrays(
        "objcolor_bboxes", compiled.bbox_terms, triple.bb
    )
    lookup = np.zeros(snapshot.doc_count)
    lookup[bb_ords] = bb_vals
    fused = fused + w_bb * _stage_norm(lookup[w_ords])

    order = np.lexsort((np.arange(window), -fused))
    entries = [
        (snapshot.ids[int(w_ords[i])], float(fused[i])) for i in order[:page_size]
    ]
    if len(entries) < page_size and total > window:
        # Tail beyond the rescore window keeps stage-1 order; its class-only
        # fused score can never exceed any window score (weights and norms
        # are non-negative and stage-1 is sorted), so the page stays sorted.
        tail_norm = w_oc * (base[window:] / base[:window].max()) \
            if base[:window].max() > 0 else np.zeros(total - window)
        for o, s in zip(ords[window:], tail_norm):
            entries.append((snapshot.ids[int(o)], float(s)))
            if len(entries) >= page_size:
                break
    return ResultPage(entries=entries, total_candidates=total)
