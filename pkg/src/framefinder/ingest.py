"""Corpus ingestion: read source files, run the encoders, build the index.

Sources are keyed by keyframe id and may be partial; a keyframe missing a
source is simply indexed without that field. The keyframe metadata file is
the roster: ids appearing only in other sources are counted as orphans and
skipped.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import features
from .annotations import TagAnnotation, encode_tags
from .colors import Palette, extract
from .index import FIELDS, IndexSnapshot, KeyframeIndex
from .model import (
    Aspect,
    BoundingBox,
    KeyframeId,
    KeyframeRecord,
    classify_aspect,
    normalize_label,
)
from .spatial import (
    DEFAULT_CONFIDENCE_THRESHOLD,
    Detection,
    encode_bboxes,
    encode_classes,
    expand_hypernyms,
    filter_by_confidence,
)

INGEST_REPORT_NAME = "ingest_report.json"
ENCODER_SIDECAR_NAME = "encoder.json"
PALETTE_SIDECAR_NAME = "palette.txt"
SERVICE_SIDECAR_NAME = "service.json"


class IngestError(RuntimeError):
    pass


@dataclass(frozen=True)
class IngestManifest:
    """Paths and parameters for one index build; paths resolve relative to it."""

    keyframes: Path
    images_dir: Path | None = None
    detections: Path | None = None
    tags: Path | None = None
    vectors: Path | None = None
    palette: Path | None = None
    hypernyms: Path | None = None
    encoder_seed: int = 7
    encoder_threshold: float = features.DEFAULT_THRESHOLD
    encoder_scale: float = features.DEFAULT_SCALE
    confidence_threshold: float = DEFAULT_CONFIDENCE_THRESHOLD

    @classmethod
    def load(cls, path: Path | str) -> "IngestManifest":
        path = Path(path)
        payload = json.loads(path.read_text())
        base = path.parent

        def resolve(key: str) -> Path | None:
            value = payload.get(key)
            return (base / value) if value else None

        keyframes = resolve("keyframes")
        if keyframes is None:
            raise IngestError("manifest must name a keyframes file")
        encoder = payload.get("encoder") or {}
        manifest = cls(
            keyframes=keyframes,
            images_dir=resolve("images_dir"),
            detections=resolve("detections"),
            tags=resolve("tags"),
            vectors=resolve("vectors"),
            palette=resolve("palette"),
            hypernyms=resolve("hypernyms"),
            encoder_seed=int(encoder.get("seed", 7)),
            encoder_threshold=float(encoder.get("threshold", features.DEFAULT_THRESHOLD)),
            encoder_scale=float(encoder.get("scale", features.DEFAULT_SCALE)),
            confidence_threshold=float(
                payload.get("confidence_threshold", DEFAULT_CONFIDENCE_THRESHOLD)
            ),
        )
        for name in ("keyframes", "images_dir", "detections", "tags", "vectors",
                     "palette", "hypernyms"):
            p = getattr(manifest, name)
            if p is not None and not p.exists():
                raise IngestError(f"manifest references missing {name}: {p}")
        return manifest


@dataclass
class IngestReport:
    indexed: int = 0
    skipped: list[dict] = field(default_factory=list)
    orphans: dict[str, int] = field(default_factory=dict)
    image_failures: int = 0
    field_postings: dict[str, int] = field(default_factory=dict)
    field_vocabulary: dict[str, int] = field(default_factory=dict)
    field_sparsity: dict[str, float] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "indexed": self.indexed,
            "skipped": self.skipped,
            "orphans": self.orphans,
            "image_failures": self.image_failures,
            "field_postings": self.field_postings,
            "field_vocabulary": self.field_vocabulary,
            "field_sparsity": self.field_sparsity,
        }


def _read_jsonl(path: Path):
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if line:
                yield lineno, json.loads(line)


def _parse_id(payload: dict) -> KeyframeId:
    raw = payload["id"]
    return KeyframeId(raw["video"], int(raw["segment"]))


def _load_tags(path: Path) -> dict[str, list[TagAnnotation]]:
    out: dict[str, list[TagAnnotation]] = {}
    for _, payload in _read_jsonl(path):
        kid = _parse_id(payload)
        out[kid.key] = [
            TagAnnotation(t["tag"], float(t["relevance"])) for t in payload["tags"]
        ]
    return out


def _load_detections(path: Path) -> dict[str, list[Detection]]:
    out: dict[str, list[Detection]] = {}
    for _, payload in _read_jsonl(path):
        kid = _parse_id(payload)
        dets = []
        for d in payload["detections"]:
            x0, y0, x1, y1 = d["box"]
            labels = []
            for label in d["labels"]:
                label = normalize_label(label)
                if label not in labels:
                    labels.append(label)
            dets.append(
                Detection(tuple(labels), BoundingBox(x0, y0, x1, y1), float(d["confidence"]))
            )
        out[kid.key] = dets
    return out


def _load_vectors(path: Path) -> dict[str, np.ndarray]:
    out: dict[str, np.ndarray] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            key, _, rest = line.partition(",")
            if not key or not rest:
                raise IngestError(f"{path}:{lineno}: malformed vector row")
            out[key] = np.array([float(x) for x in rest.split(",")])
    return out


def build_index(manifest: IngestManifest, out_dir: Path | str) -> IngestReport:
    """Run the full ingest pipeline and commit one index under ``out_dir``."""
    out_dir = Path(out_dir)
    palette = Palette.from_file(manifest.palette) if manifest.palette else Palette.default()
    tags_by_id = _load_tags(manifest.tags) if manifest.tags else {}
    dets_by_id = _load_detections(manifest.detections) if manifest.detections else {}
    vecs_by_id = _load_vectors(manifest.vectors) if manifest.vectors else {}
    hypernyms = (
        json.loads(manifest.hypernyms.read_text()) if manifest.hypernyms else {}
    )

    state: features.EncoderState | None = None
    if vecs_by_id:
        dims = {v.shape[0] for v in vecs_by_id.values()}
        if len(dims) != 1:
            raise IngestError(f"vectors have inconsistent dimensionality: {sorted(dims)}")
        state = features.fit(
            np.stack(list(vecs_by_id.values())),
            seed=manifest.encoder_seed,
            threshold=manifest.encoder_threshold,
            scale=manifest.encoder_scale,
        )

    writer = KeyframeIndex()
    report = IngestReport()
    seen_keys: set[str] = set()
    for lineno, payload in _read_jsonl(manifest.keyframes):
        try:
            kid = _parse_id(payload)
            width = int(payload["width"])
            height = int(payload["height"])
        except (KeyError, TypeError, ValueError) as exc:
            report.skipped.append({"line": lineno, "reason": f"bad metadata: {exc}"})
            continue
        if kid.key in seen_keys:
            report.skipped.append({"line": lineno, "reason": f"duplicate id {kid.key}"})
            continue
        seen_keys.add(kid.key)

        color_cells, image_bw = [], None
        thumbnail = payload.get("image")
        if thumbnail and manifest.images_dir is not None:
            try:
                from PIL import Image

                with Image.open(manifest.images_dir / thumbnail) as img:
                    pixels = np.asarray(img.convert("RGB"))
                color_cells, image_bw = extract(pixels, palette)
            except Exception:
                # Undecodable image: index the keyframe without color fields.
                report.image_failures += 1
                color_cells, image_bw = [], None

        detections = dets_by_id.pop(kid.key, [])
        detections = filter_by_confidence(detections, manifest.confidence_threshold)
        if hypernyms:
            detections = expand_hypernyms(detections, hypernyms)
        global_colors = set().union(*(c.colors for c in color_cells)) if color_cells else set()

        annotations = tags_by_id.pop(kid.key, [])
        vector = vecs_by_id.pop(kid.key, None)

        try:
            record = KeyframeRecord(
                id=kid,
                scene_tags=encode_tags(annotations) if annotations else "",
                objcolor_bboxes=encode_bboxes(detections, color_cells),
                objcolor_classes=encode_classes(detections, global_colors),
                visual_features=(
                    features.document_text(features.encode(vector, state))
                    if vector is not None and state is not None
                    else ""
                ),
                is_bw=bool(payload.get("is_bw", image_bw if image_bw is not None else False)),
                aspect=(
                    Aspect(payload["aspect"])
                    if payload.get("aspect")
                    else classify_aspect(width, height)
                ),
            )
        except ValueError as exc:
            report.skipped.append({"line": lineno, "reason": f"encode failure: {exc}"})
            continue
        writer.add(record, thumbnail=thumbnail)
        report.indexed += 1

    if report.indexed == 0:
        raise IngestError("no records could be indexed")
    report.orphans = {
        "tags": len(tags_by_id),
        "detections": len(dets_by_id),
        "vectors": len(vecs_by_id),
    }

    snapshot = writer.commit()
    for fname in FIELDS:
        vocab, postings = snapshot.field_stats(fname)
        report.field_postings[fname] = postings
        report.field_vocabulary[fname] = vocab
        cells = vocab * snapshot.doc_count
        report.field_sparsity[fname] = 1.0 - postings / cells if cells else 0.0

    out_dir.mkdir(parents=True, exist_ok=True)
    if state is not None:
        state.save(out_dir / ENCODER_SIDECAR_NAME)
    with open(out_dir / PALETTE_SIDECAR_NAME, "w", encoding="utf-8") as fh:
        for entry in palette.to_meta():
            fh.write(f"{entry['name']} {entry['hex']}\n")
    (out_dir / SERVICE_SIDECAR_NAME).write_text(json.dumps({
        "images_dir": str(manifest.images_dir.resolve()) if manifest.images_dir else None,
    }, indent=2))
    (out_dir / INGEST_REPORT_NAME).write_text(json.dumps(report.to_json(), indent=2))
    snapshot.save(out_dir)
    return report


@dataclass
class IndexBundle:
    """Everything the query side needs, loaded from one index directory."""

    snapshot: IndexSnapshot
    palette: Palette
    encoder_state: features.EncoderState | None
    images_dir: Path | None


def load_bundle(index_dir: Path | str) -> IndexBundle:
    index_dir = Path(index_dir)
    snapshot = IndexSnapshot.load(index_dir)
    palette_path = index_dir / PALETTE_SIDECAR_NAME
    palette = Palette.from_file(palette_path) if palette_path.exists() else Palette.default()
    encoder_path = index_dir / ENCODER_SIDECAR_NAME
    state = features.EncoderState.load(encoder_path) if encoder_path.exists() else None
    images_dir = None
    service_path = index_dir / SERVICE_SIDECAR_NAME
    if service_path.exists():
        raw = json.loads(service_path.read_text()).get("images_dir")
        images_dir = Path(raw) if raw else None
    return IndexBundle(snapshot, palette, state, images_dir)
