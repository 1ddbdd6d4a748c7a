"""Sparse text surrogates for dense feature vectors.

A dense descriptor is centered, rotated by a seeded orthogonal matrix (which
spreads variance evenly across dimensions while preserving dot products),
sign-split so negatives become their own non-negative components, thresholded
for sparsity, and scaled/floored to integers. The integer vector is then
written as a synthetic text document whose term frequencies are exactly those
integers, so a plain dot-product ranker over term frequencies reproduces the
quantized similarity ordering.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

#: Keeps ~4.6% of components for standard-normal inputs.
DEFAULT_THRESHOLD = 2.0
DEFAULT_SCALE = 10.0

#: Codeword vocabulary prefix; reserved so feature terms never collide with
#: tag/object/color tokens (those never start with a bare "v<digit>").
CODEWORD_PREFIX = "v"

STATE_FORMAT_VERSION = 1


class DimensionMismatchError(ValueError):
    pass


def codeword(component: int) -> str:
    """Synthetic term for one component of the sign-split vector (1-based)."""
    return f"{CODEWORD_PREFIX}{component + 1}"


def _rotation_from_seed(seed: int, dim: int) -> np.ndarray:
    """Seeded random orthogonal matrix via QR of a Gaussian draw.

    Column signs are fixed from the R diagonal so the decomposition is unique
    and the matrix is reproducible across LAPACK builds.
    """
    gaussian = np.random.default_rng(seed).standard_normal((dim, dim))
    q, r = np.linalg.qr(gaussian)
    return q * np.sign(np.diag(r))


@dataclass(frozen=True)
class EncoderState:
    """Everything needed to encode vectors consistently with an index.

    The rotation is stored as (seed, dim) and rebuilt on demand; persisting a
    2048x2048 matrix alongside the index would dwarf the rest of the metadata.
    """

    mean: np.ndarray
    seed: int
    threshold: float
    scale: float
    _rotation_cache: list = field(default_factory=list, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.threshold < 0:
            raise ValueError(f"threshold must be >= 0, got {self.threshold}")
        if not self.scale > 0:
            raise ValueError(f"scale must be > 0, got {self.scale}")

    @property
    def dim(self) -> int:
        return int(self.mean.shape[0])

    @property
    def rotation(self) -> np.ndarray:
        if not self._rotation_cache:
            self._rotation_cache.append(_rotation_from_seed(self.seed, self.dim))
        return self._rotation_cache[0]

    def save(self, path: Path | str) -> None:
        payload = {
            "format": STATE_FORMAT_VERSION,
            "seed": self.seed,
            "threshold": self.threshold,
            "scale": self.scale,
            "dim": self.dim,
            "mean": self.mean.tolist(),
        }
        Path(path).write_text(json.dumps(payload))

    @classmethod
    def load(cls, path: Path | str) -> "EncoderState":
        payload = json.loads(Path(path).read_text())
        if payload.get("format") != STATE_FORMAT_VERSION:
            raise ValueError(f"unsupported encoder state format {payload.get('format')!r}")
        mean = np.asarray(payload["mean"], dtype=np.float64)
        if mean.shape != (payload["dim"],):
            raise ValueError("encoder state mean length disagrees with dim")
        return cls(mean, int(payload["seed"]), float(payload["threshold"]), float(payload["scale"]))


def fit(
    sample: Sequence[np.ndarray] | np.ndarray,
    seed: int,
    threshold: float = DEFAULT_THRESHOLD,
    scale: float = DEFAULT_SCALE,
) -> EncoderState:
    """Fit centering from a sample and fix the seeded rotation."""
    matrix = np.asarray(sample, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[0] == 0:
        raise ValueError("sample must be a nonempty list of equal-length vectors")
    return EncoderState(matrix.mean(axis=0), seed, threshold, scale)


def quantize(vector: np.ndarray, state: EncoderState) -> np.ndarray:
    """Map a dense vector to the sparse non-negative integer vector (2*dim).

    Components land at position i (positive part) or i+dim (negated part);
    at most one of the pair is nonzero. Components at or below the threshold
    are zeroed before flooring.
    """
    v = np.asarray(vector, dtype=np.float64)
    if v.shape != (state.dim,):
        raise DimensionMismatchError(f"expected dim {state.dim}, got shape {v.shape}")
    rotated = state.rotation @ (v - state.mean)
    split = np.concatenate([rotated, -rotated])
    split = np.maximum(split, 0.0)
    quantized = np.floor(state.scale * split).astype(np.int64)
    quantized[split <= state.threshold] = 0
    return quantized


def to_document(quantized: np.ndarray) -> dict[str, int]:
    """Term-frequency view of an integer vector: codeword i repeated q_i times."""
    if np.any(quantized < 0):
        raise ValueError("quantized vector must be non-negative")
    support = np.nonzero(quantized)[0]
    return {codeword(int(i)): int(quantized[i]) for i in support}


def encode(vector: np.ndarray, state: EncoderState) -> dict[str, int]:
    return to_document(quantize(vector, state))


def document_text(doc: dict[str, int]) -> str:
    """Spell a surrogate document as the indexable token field."""
    parts: list[str] = []
    for term in sorted(doc, key=lambda t: int(t[len(CODEWORD_PREFIX) :])):
        parts.extend([term] * doc[term])
    return " ".join(parts)


def support_fraction(docs: Iterable[dict[str, int]], dim: int) -> float:
    """Mean fraction of nonzero components over 2*dim (1 - sparsity)."""
    sizes = [len(d) for d in docs]
    if not sizes:
        return 0.0
    return float(np.mean(sizes)) / (2 * dim)


class UnknownKeyframeError(KeyError):
    pass


def similar(snapshot, state: EncoderState | None, query, k: int):
    """Top-k keyframes by dot product between surrogate documents.

    ``query`` is either a :class:`~framefinder.model.KeyframeId` already in
    the index (its stored surrogate document becomes the query) or a raw
    feature vector, which requires the encoder ``state``. Ties are broken by
    keyframe id.
    """
    from .index import Ranker, RankerKind
    from .model import KeyframeId

    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if isinstance(query, KeyframeId):
        ordinal = snapshot.ordinal_of.get(query.key)
        if ordinal is None:
            raise UnknownKeyframeError(query.key)
        doc = snapshot.forward_doc("visual_features", ordinal)
    else:
        if state is None:
            raise ValueError("raw-vector similarity requires an encoder state")
        doc = encode(np.asarray(query, dtype=np.float64), state)
    ords, vals = snapshot.score_arrays("visual_features", doc, Ranker(RankerKind.TF))
    if len(ords) > k:
        # Keep everything tied with the k-th score so id-order ties resolve right.
        cut = int(np.searchsorted(-vals, -vals[k - 1], side="right"))
        ords, vals = ords[:cut], vals[:cut]
    ranked = sorted(
        ((snapshot.ids[o], float(v)) for o, v in zip(ords.tolist(), vals.tolist())),
        key=lambda pair: (-pair[1], pair[0]),
    )
    return ranked[:k]
