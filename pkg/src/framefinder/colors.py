"""Per-cell palette color assignment from raw pixels.

Pixels are classified in CIELAB against a fixed 32-color palette; each pixel
votes for its nearest color and, when the runner-up is perceptually close,
for that one too. A cell keeps every color that collects more than 7% of the
cell's pixel votes, so a single cell can legitimately carry several colors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .model import GRID_SIZE, normalize_label
from .spatial import ColorCellAssignment
from .model import GridCell

PALETTE_SIZE = 32

#: Width of the distance-to-score kernel: score = exp(-distance / SIGMA).
SCORE_SIGMA = 25.0

#: A pixel also votes for its second-nearest color when score2/score1 > 0.5.
SECONDARY_RATIO = 0.5

#: A color is assigned to a cell when its votes exceed this pixel fraction.
CELL_VOTE_FRACTION = 0.07

#: Mean pixel saturation below which a frame is considered black-and-white.
BW_SATURATION = 0.06

# sRGB (D65) to XYZ, IEC 61966-2-1 primaries.
_RGB_TO_XYZ = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ]
)
_WHITEPOINT = _RGB_TO_XYZ.sum(axis=1)


def srgb_to_lab(rgb: np.ndarray) -> np.ndarray:
    """Convert 8-bit sRGB values (..., 3) to CIELAB (D65)."""
    c = np.asarray(rgb, dtype=np.float64) / 255.0
    linear = np.where(c <= 0.04045, c / 12.92, ((c + 0.055) / 1.055) ** 2.4)
    xyz = linear @ _RGB_TO_XYZ.T / _WHITEPOINT
    delta = 6.0 / 29.0
    f = np.where(xyz > delta**3, np.cbrt(xyz), xyz / (3 * delta**2) + 4.0 / 29.0)
    lab = np.empty_like(f)
    lab[..., 0] = 116.0 * f[..., 1] - 16.0
    lab[..., 1] = 500.0 * (f[..., 0] - f[..., 1])
    lab[..., 2] = 200.0 * (f[..., 1] - f[..., 2])
    return lab


@dataclass(frozen=True)
class PixelColorVote:
    primary: str
    secondary: str | None = None

    def __post_init__(self) -> None:
        if self.secondary is not None and self.secondary == self.primary:
            raise ValueError("secondary color must differ from primary")


class Palette:
    """Fixed palette of 32 named colors, held in lexicographic name order.

    Keeping entries name-sorted makes nearest-color ties resolve to the
    lexicographically smallest name for free (argmin picks the first hit).
    """

    def __init__(self, entries: list[tuple[str, tuple[int, int, int]]]):
        if len(entries) != PALETTE_SIZE:
            raise ValueError(f"palette must have {PALETTE_SIZE} entries, got {len(entries)}")
        normalized = sorted((normalize_label(name), rgb) for name, rgb in entries)
        names = [name for name, _ in normalized]
        if len(set(names)) != PALETTE_SIZE:
            raise ValueError("palette names must be distinct")
        self.names: tuple[str, ...] = tuple(names)
        self.rgb = np.array([rgb for _, rgb in normalized], dtype=np.uint8)
        self.lab = srgb_to_lab(self.rgb)

    def __contains__(self, name: str) -> bool:
        return name in self.names

    @classmethod
    def from_file(cls, path) -> "Palette":
        """Parse a palette file: 32 lines of ``name #RRGGBB``."""
        entries = []
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                name, _, hexcode = line.partition(" ")
                entries.append((name, _parse_hex(hexcode.strip())))
        return cls(entries)

    @classmethod
    def default(cls) -> "Palette":
        text = resources.files("framefinder.data").joinpath("palette32.txt").read_text()
        entries = []
        for line in text.splitlines():
            line = line.strip()
            if line:
                name, _, hexcode = line.partition(" ")
                entries.append((name, _parse_hex(hexcode.strip())))
        return cls(entries)

    def to_meta(self) -> list[dict]:
        return [
            {"name": name, "hex": "#{:02x}{:02x}{:02x}".format(*rgb)}
            for name, rgb in zip(self.names, self.rgb.tolist())
        ]


def _parse_hex(hexcode: str) -> tuple[int, int, int]:
    hexcode = hexcode.lstrip("#")
    if len(hexcode) != 6:
        raise ValueError(f"malformed color {hexcode!r}")
    return tuple(int(hexcode[i : i + 2], 16) for i in (0, 2, 4))  # type: ignore[return-value]


def _classify_block(pixels: np.ndarray, palette: Palette) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized nearest/second-nearest palette classification.

    Returns (primary, secondary) palette index arrays; secondary is -1 where
    the runner-up fails the score-ratio rule.
    """
    lab = srgb_to_lab(pixels.reshape(-1, 3))
    dists = np.linalg.norm(lab[:, None, :] - palette.lab[None, :, :], axis=2)
    primary = dists.argmin(axis=1)
    d1 = dists[np.arange(len(dists)), primary]
    dists[np.arange(len(dists)), primary] = np.inf
    runner = dists.argmin(axis=1)
    d2 = dists[np.arange(len(dists)), runner]
    # score2/score1 > 0.5 with score = exp(-d/sigma), i.e. d2 - d1 < sigma*ln 2
    secondary = np.where(d2 - d1 < SCORE_SIGMA * math.log(2), runner, -1)
    return primary, secondary


def classify_pixel(rgb: tuple[int, int, int], palette: Palette) -> PixelColorVote:
    """Classify a single pixel; ties go to the lexicographically first name."""
    primary, secondary = _classify_block(np.array([rgb], dtype=np.uint8), palette)
    return PixelColorVote(
        palette.names[primary[0]],
        palette.names[secondary[0]] if secondary[0] >= 0 else None,
    )


def assign_cell_colors(
    pixels: np.ndarray, palette: Palette, min_fraction: float = CELL_VOTE_FRACTION
) -> set[str]:
    """Colors for one cell: every color whose votes exceed ``min_fraction``.

    Primary and secondary classifications each count as one vote. If no color
    clears the bar (adversarial noise can spread votes below 7%), the single
    plurality color is returned so that a cell is never colorless.
    """
    flat = pixels.reshape(-1, 3)
    if flat.size == 0:
        raise ValueError("cell pixel block must be nonempty")
    primary, secondary = _classify_block(flat, palette)
    votes = np.bincount(primary, minlength=PALETTE_SIZE)
    votes += np.bincount(secondary[secondary >= 0], minlength=PALETTE_SIZE)
    cutoff = min_fraction * len(flat)
    chosen = np.nonzero(votes > cutoff)[0]
    if chosen.size == 0:
        chosen = np.array([votes.argmax()])
    return {palette.names[i] for i in chosen}


def grid_bounds(size: int) -> list[int]:
    """Cell boundaries along one axis: round(i * size / 7) for i in 0..7."""
    return [round(i * size / GRID_SIZE) for i in range(GRID_SIZE + 1)]


def mean_saturation(image: np.ndarray) -> float:
    """Mean HSV-style saturation over all pixels, in [0, 1]."""
    pix = image.reshape(-1, 3).astype(np.float64)
    hi = pix.max(axis=1)
    lo = pix.min(axis=1)
    sat = np.divide(hi - lo, hi, out=np.zeros_like(hi), where=hi > 0)
    return float(sat.mean())


def extract(
    image: np.ndarray, palette: Palette
) -> tuple[list[ColorCellAssignment], bool]:
    """Run the full color pipeline for one decoded RGB frame.

    The frame is partitioned into the 7x7 grid (boundaries at round(i*W/7) so
    every pixel lands in exactly one cell) and each cell is assigned its
    colors. Returns the 49 assignments in row-major order plus the
    black-and-white flag.
    """
    if image.ndim != 3 or image.shape[2] != 3:
        raise ValueError(f"expected an RGB image (H, W, 3), got shape {image.shape}")
    height, width = image.shape[:2]
    if height < GRID_SIZE or width < GRID_SIZE:
        raise ValueError(f"image {width}x{height} smaller than the {GRID_SIZE}x{GRID_SIZE} grid")
    xs = grid_bounds(width)
    ys = grid_bounds(height)
    assignments = []
    for r in range(GRID_SIZE):
        for c in range(GRID_SIZE):
            block = image[ys[r] : ys[r + 1], xs[c] : xs[c + 1]]
            colors = assign_cell_colors(block, palette)
            assignments.append(
                ColorCellAssignment(GridCell.from_indices(c, r), frozenset(colors))
            )
    return assignments, mean_saturation(image) < BW_SATURATION
