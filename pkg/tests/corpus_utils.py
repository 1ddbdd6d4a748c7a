"""Builders for synthetic source corpora used by ingest/service/acceptance tests."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from PIL import Image


def write_corpus(
    root: Path,
    n: int = 10,
    *,
    dim: int = 8,
    with_images: bool = True,
    drop_vector_for: tuple[int, ...] = (),
    seed: int = 0,
) -> Path:
    """Write a complete, consistent source corpus and return the manifest path.

    Keyframes are spread over videos of 2 segments each. Every record gets
    tags and detections; vectors can be withheld per ordinal.
    """
    rng = np.random.default_rng(seed)
    root.mkdir(parents=True, exist_ok=True)
    images_dir = root / "images"
    images_dir.mkdir(exist_ok=True)

    keyframes, detections, tags, vector_rows = [], [], [], []
    object_pool = ["car", "person", "dog", "tree", "bicycle"]
    tag_pool = ["park", "music", "sunset", "walk", "beach", "musician"]
    for i in range(n):
        vid = f"video{i // 2:03d}"
        kid = {"video": vid, "segment": i % 2}
        image_rel = None
        if with_images:
            image_rel = f"{vid}_{i % 2}.png"
            pixels = rng.integers(0, 256, size=(35, 35, 3)).astype(np.uint8)
            Image.fromarray(pixels).save(images_dir / image_rel)
        entry = {"id": kid, "width": 1280, "height": 720}
        if image_rel:
            entry["image"] = image_rel
        keyframes.append(entry)

        labels = rng.choice(object_pool, size=rng.integers(1, 3), replace=False)
        dets = []
        for label in labels:
            x0, y0 = rng.uniform(0, 0.5, size=2)
            dets.append(
                {
                    "labels": [str(label)],
                    "box": [x0, y0, x0 + 0.4, y0 + 0.4],
                    "confidence": float(rng.uniform(0.3, 1.0)),
                }
            )
        detections.append({"id": kid, "detections": dets})

        chosen = rng.choice(tag_pool, size=rng.integers(1, 4), replace=False)
        tags.append(
            {
                "id": kid,
                "tags": [
                    {"tag": str(t), "relevance": float(rng.uniform(0.5, 4.0))}
                    for t in chosen
                ],
            }
        )

        if i not in drop_vector_for:
            vec = rng.normal(size=dim)
            vector_rows.append(
                f"{vid}:{i % 2}," + ",".join(f"{v:.6f}" for v in vec)
            )

    (root / "keyframes.jsonl").write_text(
        "\n".join(json.dumps(k) for k in keyframes) + "\n"
    )
    (root / "detections.jsonl").write_text(
        "\n".join(json.dumps(d) for d in detections) + "\n"
    )
    (root / "tags.jsonl").write_text("\n".join(json.dumps(t) for t in tags) + "\n")
    (root / "vectors.csv").write_text("\n".join(vector_rows) + "\n")
    (root / "hypernyms.json").write_text(json.dumps({"car": ["vehicle"]}))

    manifest = {
        "keyframes": "keyframes.jsonl",
        "detections": "detections.jsonl",
        "tags": "tags.jsonl",
        "vectors": "vectors.csv",
        "hypernyms": "hypernyms.json",
        "encoder": {"seed": 11, "threshold": 1.0, "scale": 10.0},
        "confidence_threshold": 0.25,
    }
    if with_images:
        manifest["images_dir"] = "images"
    manifest_path = root / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2))
    return manifest_path
