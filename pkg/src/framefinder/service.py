"""HTTP face of a committed index: search, autocomplete, similarity, browse.

All endpoints are read-only over one immutable snapshot, so responses are
pure functions of (index, request). The index loads in a background thread;
requests arriving before the load completes get a 503 rather than blocking.
"""

from __future__ import annotations

import threading
from contextlib import asynccontextmanager
from pathlib import Path

from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import FileResponse, JSONResponse

from . import features
from .index import CLASSES_FIELD
from .ingest import IndexBundle, load_bundle
from .model import KeyframeId, parse_occurrence_token
from .pipeline import (
    DEFAULT_TRIPLE_NAME,
    InvalidQueryError,
    RankerTriple,
    ResultPage,
    execute,
    spec_from_json,
)

API_PREFIX = "/v1"

MAX_PAGE_SIZE = 1000
OBJECT_SHORTLIST_SIZE = 38


def _entry_json(kid: KeyframeId, score: float, has_thumb: bool) -> dict:
    return {
        "video": kid.video_id,
        "segment": kid.segment_index,
        "key": kid.key,
        "score": score,
        "thumbnail": has_thumb,
    }


def _page_json(bundle: IndexBundle, page: ResultPage, triple: str,
               group_by_video: bool) -> dict:
    def has_thumb(kid: KeyframeId) -> bool:
        ordinal = bundle.snapshot.ordinal_of.get(kid.key)
        return ordinal is not None and bundle.snapshot.thumbnails[ordinal] is not None

    body: dict = {"triple": triple, "total_candidates": page.total_candidates}
    if group_by_video:
        body["groups"] = [
            {
                "video": video,
                "results": [_entry_json(k, s, has_thumb(k)) for k, s in entries],
            }
            for video, entries in page.group_by_video()
        ]
    else:
        body["results"] = [
            _entry_json(k, s, has_thumb(k)) for k, s in page.entries
        ]
    return body


def create_app(index_dir: Path | str, *, preload: bool = False) -> FastAPI:
    """Build the service app for one index directory."""
    state: dict = {"bundle": None, "objects": None}
    lock = threading.Lock()

    def load() -> None:
        bundle = load_bundle(index_dir)
        with lock:
            state["bundle"] = bundle

    @asynccontextmanager
    async def lifespan(_app: FastAPI):
        if state["bundle"] is None:
            threading.Thread(target=load, daemon=True).start()
        yield

    app = FastAPI(title="framefinder", version="1.0", lifespan=lifespan)
    if preload:
        load()

    def bundle_or_503() -> IndexBundle:
        with lock:
            bundle = state["bundle"]
        if bundle is None:
            raise HTTPException(status_code=503, detail="index is still loading")
        return bundle

    def object_shortlist(bundle: IndexBundle) -> list[str]:
        # "<label>1" occurrence terms enumerate every object class present at
        # least once; their df orders the shortlist by how common the class is.
        with lock:
            if state["objects"] is None:
                labels: list[tuple[int, str]] = []
                for term, df in bundle.snapshot.terms(CLASSES_FIELD):
                    try:
                        label, n = parse_occurrence_token(term)
                    except ValueError:
                        continue
                    if n == 1 and label not in bundle.palette:
                        labels.append((-df, label))
                labels.sort()
                state["objects"] = [label for _, label in labels[:OBJECT_SHORTLIST_SIZE]]
            return state["objects"]

    @app.exception_handler(InvalidQueryError)
    def invalid_query(_req: Request, exc: InvalidQueryError) -> JSONResponse:
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.post(f"{API_PREFIX}/search")
    def search(payload: dict) -> dict:
        bundle = bundle_or_503()
        if "spec" not in payload:
            raise InvalidQueryError("missing 'spec'")
        spec = spec_from_json(payload["spec"])
        triple_name = payload.get("triple", DEFAULT_TRIPLE_NAME)
        try:
            triple = RankerTriple.parse(triple_name)
        except ValueError as exc:
            raise InvalidQueryError(str(exc)) from exc
        page_size = int(payload.get("page_size", 100))
        if not 1 <= page_size <= MAX_PAGE_SIZE:
            raise InvalidQueryError(f"page_size must be in 1..{MAX_PAGE_SIZE}")
        try:
            page = execute(
                bundle.snapshot,
                spec,
                triple,
                page_size,
                palette_names=bundle.palette.names,
                encoder_state=bundle.encoder_state,
            )
        except features.UnknownKeyframeError as exc:
            raise HTTPException(status_code=404, detail=f"unknown keyframe {exc}") from exc
        return _page_json(bundle, page, str(triple), bool(payload.get("group_by_video")))

    @app.get(f"{API_PREFIX}/autocomplete")
    def autocomplete(prefix: str, limit: int = 10) -> dict:
        bundle = bundle_or_503()
        if len(prefix) < 2:
            raise InvalidQueryError("prefix must have at least 2 characters")
        expansions = bundle.snapshot.expand_wildcard("scene_tags", prefix.lower())
        return {
            "suggestions": [
                {"term": term, "df": df, "display": f"{term} ({df})"}
                for term, df in expansions[: max(1, limit)]
            ]
        }

    @app.get(f"{API_PREFIX}/similar")
    def similar(id: str, k: int = 100) -> dict:
        bundle = bundle_or_503()
        try:
            kid = KeyframeId.from_key(id)
        except ValueError as exc:
            raise InvalidQueryError(str(exc)) from exc
        if not 1 <= k <= MAX_PAGE_SIZE:
            raise InvalidQueryError(f"k must be in 1..{MAX_PAGE_SIZE}")
        try:
            ranked = features.similar(bundle.snapshot, bundle.encoder_state, kid, k)
        except features.UnknownKeyframeError as exc:
            raise HTTPException(status_code=404, detail=f"unknown keyframe {exc}") from exc
        page = ResultPage(entries=ranked, total_candidates=len(ranked))
        return _page_json(bundle, page, "TF", group_by_video=False)

    @app.get(f"{API_PREFIX}/keyframes/{{key}}/thumbnail")
    def thumbnail(key: str) -> FileResponse:
        bundle = bundle_or_503()
        ordinal = bundle.snapshot.ordinal_of.get(key)
        if ordinal is None:
            raise HTTPException(status_code=404, detail=f"unknown keyframe {key}")
        rel = bundle.snapshot.thumbnails[ordinal]
        if rel is None or bundle.images_dir is None:
            raise HTTPException(status_code=404, detail=f"no thumbnail for {key}")
        path = bundle.images_dir / rel
        if not path.exists():
            raise HTTPException(status_code=404, detail=f"thumbnail file missing for {key}")
        return FileResponse(path)

    @app.get(f"{API_PREFIX}/videos/{{video_id}}/summary")
    def video_summary(video_id: str) -> dict:
        bundle = bundle_or_503()
        keyframes = sorted(
            kid for kid in bundle.snapshot.ids if kid.video_id == video_id
        )
        if not keyframes:
            raise HTTPException(status_code=404, detail=f"unknown video {video_id}")
        return {
            "video": video_id,
            "keyframes": [
                {"video": k.video_id, "segment": k.segment_index, "key": k.key}
                for k in keyframes
            ],
        }

    @app.get(f"{API_PREFIX}/meta")
    def meta() -> dict:
        bundle = bundle_or_503()
        return {
            "version": "v1",
            "grid": 7,
            "doc_count": bundle.snapshot.doc_count,
            "default_triple": DEFAULT_TRIPLE_NAME,
            "palette": bundle.palette.to_meta(),
            "objects": object_shortlist(bundle),
            "similarity_enabled": bundle.encoder_state is not None,
        }

    return app
