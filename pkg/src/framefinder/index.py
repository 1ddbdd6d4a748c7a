"""Inverted index over the four token fields, with pluggable rankers.

One writer builds an index; :meth:`KeyframeIndex.commit` freezes it into an
immutable :class:`IndexSnapshot` that any number of query threads may share.
Posting lists are numpy arrays so a scoring pass is a handful of vectorized
gather/adds per query term rather than a Python loop over postings.
"""

from __future__ import annotations

import bisect
import json
import math
import os
from array import array
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .model import Aspect, KeyframeId, KeyframeRecord

FIELDS = ("scene_tags", "objcolor_bboxes", "objcolor_classes", "visual_features")

CLASSES_FIELD = "objcolor_classes"

WILDCARD_MIN_PREFIX = 2
WILDCARD_MAX_EXPANSIONS = 256

INDEX_FORMAT_VERSION = 1

_ASPECT_CODES = {Aspect.AR_4_3: 0, Aspect.AR_16_9: 1, Aspect.OTHER: 2}
_ASPECT_FROM_CODE = {v: k for k, v in _ASPECT_CODES.items()}


class DuplicateDocumentError(ValueError):
    pass


class UnknownFieldError(KeyError):
    pass


class RankerKind(Enum):
    BM25 = "BM25"
    TFIDF = "TFIDF"
    TF = "TF"
    NORMTF = "NormTF"


@dataclass(frozen=True)
class Ranker:
    """A scoring function for one search operation.

    ``k1``/``b`` only apply to BM25; they are carried regardless so a ranker
    is a self-contained value.
    """

    kind: RankerKind
    k1: float = 1.2
    b: float = 0.75

    def __post_init__(self) -> None:
        if not self.k1 > 0:
            raise ValueError(f"k1 must be > 0, got {self.k1}")
        if not 0.0 <= self.b <= 1.0:
            raise ValueError(f"b must be in [0, 1], got {self.b}")

    @classmethod
    def parse(cls, name: str) -> "Ranker":
        for kind in RankerKind:
            if kind.value.lower() == name.lower():
                return cls(kind)
        raise ValueError(f"unknown ranker {name!r}; expected one of "
                         f"{[k.value for k in RankerKind]}")

    def __str__(self) -> str:
        return self.kind.value


class _FieldData:
    """Committed posting data for one field."""

    __slots__ = ("terms", "term_ids", "offsets", "ordinals", "freqs",
                 "df", "doc_len", "doc_norm", "avg_len")

    def __init__(self, terms: list[str], offsets: np.ndarray,
                 ordinals: np.ndarray, freqs: np.ndarray, doc_count: int):
        self.terms = terms
        self.term_ids = {t: i for i, t in enumerate(terms)}
        self.offsets = offsets
        self.ordinals = ordinals
        self.freqs = freqs
        self.df = np.diff(offsets)
        weights = freqs.astype(np.float64)
        self.doc_len = np.bincount(ordinals, weights=weights, minlength=doc_count)
        self.doc_norm = np.sqrt(
            np.bincount(ordinals, weights=weights * weights, minlength=doc_count)
        )
        nonempty = self.doc_len[self.doc_len > 0]
        self.avg_len = float(nonempty.mean()) if nonempty.size else 0.0

    def postings(self, term: str) -> tuple[np.ndarray, np.ndarray] | None:
        tid = self.term_ids.get(term)
        if tid is None:
            return None
        lo, hi = self.offsets[tid], self.offsets[tid + 1]
        return self.ordinals[lo:hi], self.freqs[lo:hi]


class KeyframeIndex:
    """Single-writer index builder."""

    def __init__(self) -> None:
        # term -> (ordinals, tfs) as compact int arrays; at 100k-record scale
        # Python int lists would cost an order of magnitude more memory.
        self._postings: dict[str, dict[str, tuple[array, array]]] = {
            f: {} for f in FIELDS
        }
        self._ids: list[KeyframeId] = []
        self._ordinal_of: dict[str, int] = {}
        self._is_bw: list[bool] = []
        self._aspect: list[int] = []
        self._thumbnails: list[str | None] = []

    def __len__(self) -> int:
        return len(self._ids)

    def add(self, record: KeyframeRecord, thumbnail: str | None = None) -> int:
        """Index one record; returns its ordinal. Ids must be unique."""
        key = record.id.key
        if key in self._ordinal_of:
            raise DuplicateDocumentError(f"keyframe {key} already indexed")
        ordinal = len(self._ids)
        self._ordinal_of[key] = ordinal
        self._ids.append(record.id)
        self._is_bw.append(record.is_bw)
        self._aspect.append(_ASPECT_CODES[record.aspect])
        self._thumbnails.append(thumbnail)
        for fname in FIELDS:
            text = getattr(record, fname)
            if not text:
                continue
            counts: dict[str, int] = {}
            for token in text.split():
                counts[token] = counts.get(token, 0) + 1
            postings = self._postings[fname]
            for term, tf in counts.items():
                entry = postings.get(term)
                if entry is None:
                    entry = (array("i"), array("i"))
                    postings[term] = entry
                entry[0].append(ordinal)
                entry[1].append(tf)
        return ordinal

    def commit(self) -> "IndexSnapshot":
        """Freeze the writer into an immutable, queryable snapshot."""
        doc_count = len(self._ids)
        fields: dict[str, _FieldData] = {}
        for fname in FIELDS:
            postings = self._postings[fname]
            terms = sorted(postings)
            offsets = np.zeros(len(terms) + 1, dtype=np.int64)
            total = sum(len(postings[t][0]) for t in terms)
            ordinals = np.empty(total, dtype=np.int32)
            freqs = np.empty(total, dtype=np.int32)
            pos = 0
            for i, term in enumerate(terms):
                ords, tfs = postings[term]
                nxt = pos + len(ords)
                ordinals[pos:nxt] = ords
                freqs[pos:nxt] = tfs
                offsets[i + 1] = nxt
                pos = nxt
            fields[fname] = _FieldData(terms, offsets, ordinals, freqs, doc_count)
        return IndexSnapshot(
            fields=fields,
            ids=list(self._ids),
            is_bw=np.array(self._is_bw, dtype=bool),
            aspect=np.array(self._aspect, dtype=np.int8),
            thumbnails=list(self._thumbnails),
        )


class IndexSnapshot:
    """Immutable committed index; safe to share across query threads."""

    def __init__(self, fields: dict[str, _FieldData], ids: list[KeyframeId],
                 is_bw: np.ndarray, aspect: np.ndarray,
                 thumbnails: list[str | None]):
        self._fields = fields
        self.ids = ids
        self._is_bw = is_bw
        self._aspect = aspect
        self.thumbnails = thumbnails
        self.ordinal_of = {kid.key: i for i, kid in enumerate(ids)}
        self._forward: dict[str, tuple[np.ndarray, np.ndarray, np.ndarray]] = {}

    @property
    def doc_count(self) -> int:
        return len(self.ids)

    def _field(self, field: str) -> _FieldData:
        try:
            return self._fields[field]
        except KeyError:
            raise UnknownFieldError(field) from None

    def postings(self, field: str, term: str) -> tuple[np.ndarray, np.ndarray] | None:
        return self._field(field).postings(term)

    def df(self, field: str, term: str) -> int:
        post = self._field(field).postings(term)
        return 0 if post is None else len(post[0])

    def field_length(self, field: str, ordinal: int) -> float:
        return float(self._field(field).doc_len[ordinal])

    # -- scoring ---------------------------------------------------------

    def score_arrays(
        self, field: str, query: Mapping[str, float], ranker: Ranker
    ) -> tuple[np.ndarray, np.ndarray]:
        """Rank all documents matching >= 1 query term.

        Returns (ordinals, scores), both sorted by descending score with ties
        broken by ascending ordinal.

        Scoring functions (N = doc count, df/tf the usual statistics):
          TF      sum_t qtf * tf
          NormTF  cosine between the query and document tf vectors
          TFIDF   sum_t qtf * tf * (1 + ln(N / (1 + df)))^2, divided by the
                  document tf-vector norm
          BM25    sum_t qtf * idf * tf (k1+1) / (tf + k1 (1 - b + b len/avglen))
                  with idf = ln(1 + (N - df + 0.5) / (df + 0.5))
        """
        fd = self._field(field)
        n = self.doc_count
        scores = np.zeros(n)
        matched = np.zeros(n, dtype=bool)
        kind = ranker.kind
        for term, qtf in query.items():
            post = fd.postings(term)
            if post is None or qtf == 0:
                continue
            ords, tfs = post
            tfs = tfs.astype(np.float64)
            df = len(ords)
            if kind in (RankerKind.TF, RankerKind.NORMTF):
                contrib = qtf * tfs
            elif kind == RankerKind.TFIDF:
                idf = 1.0 + math.log(n / (1.0 + df))
                contrib = qtf * tfs * (idf * idf)
            else:  # BM25
                idf = math.log(1.0 + (n - df + 0.5) / (df + 0.5))
                denom = tfs + ranker.k1 * (
                    1.0 - ranker.b + ranker.b * fd.doc_len[ords] / fd.avg_len
                )
                contrib = qtf * idf * tfs * (ranker.k1 + 1.0) / denom
            scores[ords] += contrib
            matched[ords] = True
        hit = np.nonzero(matched)[0]
        vals = scores[hit]
        if kind in (RankerKind.NORMTF, RankerKind.TFIDF):
            vals = vals / fd.doc_norm[hit]
        if kind == RankerKind.NORMTF:
            qnorm = math.sqrt(sum(float(q) * float(q) for q in query.values()))
            if qnorm > 0:
                vals = vals / qnorm
        order = np.lexsort((hit, -vals))
        return hit[order], vals[order]

    def score(
        self, field: str, query: Mapping[str, float], ranker: Ranker
    ) -> list[tuple[int, float]]:
        ords, vals = self.score_arrays(field, query, ranker)
        return [(int(o), float(v)) for o, v in zip(ords, vals)]

    # -- term dictionary ---------------------------------------------------

    def expand_wildcard(
        self, field: str, prefix: str, limit: int = WILDCARD_MAX_EXPANSIONS
    ) -> list[tuple[str, int]]:
        """All terms with the prefix, paired with df, most frequent first."""
        if len(prefix) < WILDCARD_MIN_PREFIX:
            raise ValueError(
                f"wildcard prefix must have >= {WILDCARD_MIN_PREFIX} characters"
            )
        fd = self._field(field)
        start = bisect.bisect_left(fd.terms, prefix)
        hits = []
        for i in range(start, len(fd.terms)):
            term = fd.terms[i]
            if not term.startswith(prefix):
                break
            hits.append((term, int(fd.df[i])))
        hits.sort(key=lambda td: (-td[1], td[0]))
        return hits[:limit]

    # -- filtering ---------------------------------------------------------

    def filter_mask(
        self,
        candidates: np.ndarray,
        must_have: Iterable[str] = (),
        must_not: Iterable[str] = (),
        bw: bool | None = None,
        aspect: Aspect | None = None,
        field: str = CLASSES_FIELD,
    ) -> np.ndarray:
        """Boolean keep-mask over candidates for term and metadata predicates."""
        cands = np.asarray(candidates, dtype=np.int64)
        keep = np.ones(len(cands), dtype=bool)
        for term in must_have:
            post = self.postings(field, term)
            if post is None:
                keep[:] = False
                return keep
            keep &= np.isin(cands, post[0])
        for term in must_not:
            post = self.postings(field, term)
            if post is not None:
                keep &= ~np.isin(cands, post[0])
        if bw is not None:
            keep &= self._is_bw[cands] == bw
        if aspect is not None:
            keep &= self._aspect[cands] == _ASPECT_CODES[aspect]
        return keep

    def filter_candidates(
        self,
        candidates: Sequence[int] | np.ndarray,
        must_have: Iterable[str] = (),
        must_not: Iterable[str] = (),
        bw: bool | None = None,
        aspect: Aspect | None = None,
        field: str = CLASSES_FIELD,
    ) -> np.ndarray:
        """Subset of candidates passing term and metadata predicates, in order."""
        cands = np.asarray(candidates, dtype=np.int64)
        return cands[self.filter_mask(cands, must_have, must_not, bw, aspect, field)]

    def field_stats(self, field: str) -> tuple[int, int]:
        """(vocabulary size, total postings) for one field."""
        fd = self._field(field)
        return len(fd.terms), int(len(fd.ordinals))

    def terms(self, field: str) -> Iterable[tuple[str, int]]:
        """All (term, df) pairs of one field in lexicographic term order."""
        fd = self._field(field)
        return zip(fd.terms, (int(d) for d in fd.df))

    def forward_doc(self, field: str, ordinal: int) -> dict[str, int]:
        """Term frequencies of one document's field (inverse of the postings).

        Built lazily by regrouping the field's postings by ordinal; used for
        query-by-indexed-document, where the stored document becomes the query.
        """
        fd = self._field(field)
        cached = self._forward.get(field)
        if cached is None:
            term_of_posting = np.repeat(
                np.arange(len(fd.terms), dtype=np.int32), fd.df
            )
            order = np.argsort(fd.ordinals, kind="stable")
            bounds = np.searchsorted(
                fd.ordinals[order], np.arange(self.doc_count + 1)
            )
            cached = (bounds, term_of_posting[order], fd.freqs[order])
            self._forward[field] = cached
        bounds, terms, freqs = cached
        lo, hi = bounds[ordinal], bounds[ordinal + 1]
        return {fd.terms[t]: int(f) for t, f in zip(terms[lo:hi], freqs[lo:hi])}

    def metadata(self, ordinal: int) -> tuple[KeyframeId, bool, Aspect]:
        return (
            self.ids[ordinal],
            bool(self._is_bw[ordinal]),
            _ASPECT_FROM_CODE[int(self._aspect[ordinal])],
        )

    # -- persistence ---------------------------------------------------------

    def save(self, directory: Path | str) -> None:
        """Write segment files, then swap the manifest in atomically."""
        directory = Path(directory)
        segment = directory / "segment-000"
        segment.mkdir(parents=True, exist_ok=True)
        for fname, fd in self._fields.items():
            np.savez(
                segment / f"{fname}.postings.npz",
                offsets=fd.offsets,
                ordinals=fd.ordinals,
                freqs=fd.freqs,
            )
            (segment / f"{fname}.terms.json").write_text(json.dumps(fd.terms))
        with open(segment / "docs.jsonl", "w", encoding="utf-8") as fh:
            for i, kid in enumerate(self.ids):
                fh.write(json.dumps({
                    "video": kid.video_id,
                    "segment": kid.segment_index,
                    "bw": bool(self._is_bw[i]),
                    "aspect": _ASPECT_FROM_CODE[int(self._aspect[i])].value,
                    "thumb": self.thumbnails[i],
                }) + "\n")
        manifest = {
            "format": INDEX_FORMAT_VERSION,
            "doc_count": self.doc_count,
            "fields": list(FIELDS),
            "segments": ["segment-000"],
        }
        tmp = directory / "manifest.json.tmp"
        tmp.write_text(json.dumps(manifest, indent=2))
        os.replace(tmp, directory / "manifest.json")

    @classmethod
    def load(cls, directory: Path | str) -> "IndexSnapshot":
        directory = Path(directory)
        manifest = json.loads((directory / "manifest.json").read_text())
        if manifest.get("format") != INDEX_FORMAT_VERSION:
            raise ValueError(f"unsupported index format {manifest.get('format')!r}")
        segment = directory / manifest["segments"][0]
        ids: list[KeyframeId] = []
        is_bw: list[bool] = []
        aspect: list[int] = []
        thumbnails: list[str | None] = []
        with open(segment / "docs.jsonl", encoding="utf-8") as fh:
            for line in fh:
                doc = json.loads(line)
                ids.append(KeyframeId(doc["video"], doc["segment"]))
                is_bw.append(doc["bw"])
                aspect.append(_ASPECT_CODES[Aspect(doc["aspect"])])
                thumbnails.append(doc.get("thumb"))
        doc_count = len(ids)
        if doc_count != manifest["doc_count"]:
            raise ValueError("manifest doc_count disagrees with docs.jsonl")
        fields = {}
        for fname in manifest["fields"]:
            terms = json.loads((segment / f"{fname}.terms.json").read_text())
            with np.load(segment / f"{fname}.postings.npz") as npz:
                fields[fname] = _FieldData(
                    terms, npz["offsets"], npz["ordinals"], npz["freqs"], doc_count
                )
        return cls(
            fields=fields,
            ids=ids,
            is_bw=np.array(is_bw, dtype=bool),
            aspect=np.array(aspect, dtype=np.int8),
            thumbnails=thumbnails,
        )
