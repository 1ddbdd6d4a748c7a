import time

import pytest
from fastapi.testclient import TestClient

from framefinder.features import similar
from framefinder.ingest import IngestManifest, build_index, load_bundle
from framefinder.service import create_app

from .corpus_utils import write_corpus


@pytest.fixture(scope="module")
def index_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("svc")
    manifest = IngestManifest.load(write_corpus(root / "src", n=10, seed=2))
    build_index(manifest, root / "idx")
    return root / "idx"


@pytest.fixture(scope="module")
def client(index_dir):
    app = create_app(index_dir, preload=True)
    with TestClient(app) as c:
        yield c


@pytest.fixture(scope="module")
def bundle(index_dir):
    return load_bundle(index_dir)


class TestSearch:
    def test_tags_search(self, client):
        resp = client.post("/v1/search", json={"spec": {"tags": ["park"]}})
        assert resp.status_code == 200
        body = resp.json()
        assert body["triple"] == "NormTF-BM25-TF"
        scores = [r["score"] for r in body["results"]]
        assert scores == sorted(scores, reverse=True)

    def test_identical_requests_identical_bodies(self, client):
        payload = {"spec": {"tags": ["park"], "canvas": [
            {"label": "car", "box": [0.1, 0.1, 0.6, 0.6]}
        ]}}
        a = client.post("/v1/search", json=payload)
        b = client.post("/v1/search", json=payload)
        assert a.json() == b.json()

    def test_invalid_spec_400(self, client):
        resp = client.post("/v1/search", json={"spec": {"tags": []}})
        assert resp.status_code == 400

    def test_missing_spec_400(self, client):
        assert client.post("/v1/search", json={}).status_code == 400

    def test_bad_triple_400(self, client):
        resp = client.post(
            "/v1/search", json={"spec": {"tags": ["park"]}, "triple": "Foo-Bar-Baz"}
        )
        assert resp.status_code == 400

    def test_group_by_video(self, client):
        flat = client.post("/v1/search", json={"spec": {"tags": ["park"]}}).json()
        grouped = client.post(
            "/v1/search", json={"spec": {"tags": ["park"]}, "group_by_video": True}
        ).json()
        flat_keys = {r["key"] for r in flat["results"]}
        grouped_keys = {
            r["key"] for g in grouped["groups"] for r in g["results"]
        }
        assert flat_keys == grouped_keys

    def test_similarity_mode_routes(self, client, bundle):
        key = bundle.snapshot.ids[0].key
        video, segment = key.split(":")
        resp = client.post(
            "/v1/search",
            json={"spec": {"example": {"video": video, "segment": int(segment)}}},
        )
        assert resp.status_code == 200
        direct = similar(bundle.snapshot, bundle.encoder_state,
                         bundle.snapshot.ids[0], 100)
        assert [r["key"] for r in resp.json()["results"]] == [
            kid.key for kid, _ in direct
        ]

    def test_unknown_example_404(self, client):
        resp = client.post(
            "/v1/search", json={"spec": {"example": {"video": "ghost", "segment": 0}}}
        )
        assert resp.status_code == 404

    def test_returned_ids_resolve(self, client):
        body = client.post("/v1/search", json={"spec": {"tags": ["park"]}}).json()
        for result in body["results"]:
            if result["thumbnail"]:
                thumb = client.get(f"/v1/keyframes/{result['key']}/thumbnail")
                assert thumb.status_code == 200


class TestAutocomplete:
    def test_prefix_expansion_with_display(self, client, bundle):
        resp = client.get("/v1/autocomplete", params={"prefix": "mu"})
        assert resp.status_code == 200
        suggestions = resp.json()["suggestions"]
        expected = bundle.snapshot.expand_wildcard("scene_tags", "mu")
        assert [(s["term"], s["df"]) for s in suggestions] == expected[:10]
        for s in suggestions:
            assert s["display"] == f"{s['term']} ({s['df']})"

    def test_short_prefix_400(self, client):
        assert client.get("/v1/autocomplete", params={"prefix": "m"}).status_code == 400


class TestSimilar:
    def test_delegates_to_visual_search(self, client, bundle):
        kid = bundle.snapshot.ids[2]
        resp = client.get("/v1/similar", params={"id": kid.key, "k": 5})
        assert resp.status_code == 200
        direct = similar(bundle.snapshot, bundle.encoder_state, kid, 5)
        assert [r["key"] for r in resp.json()["results"]] == [
            k.key for k, _ in direct
        ]

    def test_unknown_id_404(self, client):
        assert client.get("/v1/similar", params={"id": "ghost:0"}).status_code == 404


class TestBrowse:
    def test_video_summary_ordered(self, client, bundle):
        video = bundle.snapshot.ids[0].video_id
        resp = client.get(f"/v1/videos/{video}/summary")
        assert resp.status_code == 200
        segments = [k["segment"] for k in resp.json()["keyframes"]]
        assert segments == sorted(segments)

    def test_unknown_video_404(self, client):
        assert client.get("/v1/videos/ghost/summary").status_code == 404

    def test_thumbnail_404_for_unknown(self, client):
        assert client.get("/v1/keyframes/ghost:0/thumbnail").status_code == 404

    def test_meta(self, client):
        body = client.get("/v1/meta").json()
        assert body["grid"] == 7
        assert len(body["palette"]) == 32
        assert body["default_triple"] == "NormTF-BM25-TF"
        assert body["doc_count"] == 10
        assert body["similarity_enabled"] is True
        assert all(isinstance(o, str) for o in body["objects"])


class TestReadiness:
    def test_503_before_load(self, index_dir):
        app = create_app(index_dir, preload=False)
        # No lifespan: startup never ran, so the index is still "loading".
        bare = TestClient(app)
        assert bare.get("/v1/meta").status_code == 503

    def test_background_load_completes(self, index_dir):
        app = create_app(index_dir, preload=False)
        with TestClient(app) as c:
            deadline = time.time() + 10
            while time.time() < deadline:
                if c.get("/v1/meta").status_code == 200:
                    break
                time.sleep(0.05)
            assert c.get("/v1/meta").status_code == 200
