"""Binary masks, a run-length codec, and the low-level geometry behind the metrics.

A mask is a 2-D boolean numpy array (row-major, True = foreground). All
operations here are pure functions and safe to call concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass
import numpy as np
from scipy import ndimage


class DimensionMismatch(ValueError):
    """Two masks that must share a shape do not."""


class CountMismatch(ValueError):
    """RLE counts do not cover exactly height*width pixels."""


def as_mask(bits, height: int | None = None, width: int | None = None) -> np.ndarray:
    """Coerce array-like input to a validated boolean mask.

    Accepts a 2-D grid directly, or a flat row-major sequence together with
    explicit height/width.
    """
    arr = np.asarray(bits, dtype=bool)
    if height is not None and width is not None:
        arr = arr.reshape(height, width)
    if arr.ndim != 2:
        raise ValueError(f"mask must be 2-D, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"mask must have positive dimensions, got {arr.shape}")
    return arr


def _check_same_shape(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise DimensionMismatch(f"mask shapes differ: {a.shape} vs {b.shape}")


@dataclass(frozen=True)
class Rle:
    """Run-length encoding over the row-major scan of a binary mask.

    Counts alternate background/foreground and always start with a background
    run; only the leading count may be zero (canonical form).
    """

    height: int
    width: int
    counts: tuple[int, ...]

    def validate(self) -> None:
        if self.height < 1 or self.width < 1:
            raise ValueError(f"invalid size {self.height}x{self.width}")
        if any(c < 0 for c in self.counts):
            raise ValueError("negative run length")
        if any(c == 0 for c in self.counts[1:]):
            raise ValueError("interior zero run (non-canonical RLE)")
        total = sum(self.counts)
        if total != self.height * self.width:
            raise CountMismatch(
                f"counts sum to {total}, expected {self.height * self.width}"
            )

    def to_json(self) -> dict:
        """The on-disk form: {"size": [H, W], "counts": [...]}."""
        return {"size": [self.height, self.width], "counts": list(self.counts)}

    @classmethod
    def from_json(cls, obj: dict) -> "Rle":
        h, w = obj["size"]
        rle = cls(height=int(h), width=int(w), counts=tuple(int(c) for c in obj["counts"]))
        rle.validate()
        return rle


def encode_rle(mask: np.ndarray) -> Rle:
    """Encode a mask as canonical alternating background/foreground runs."""
    mask = as_mask(mask)
    flat = mask.ravel()
    # run boundaries: positions where the value changes
    change = np.flatnonzero(np.diff(flat.view(np.int8)))
    edges = np.concatenate(([0], change + 1, [flat.size]))
    runs = np.diff(edges)
    counts = runs.tolist()
    if flat[0]:
        counts.insert(0, 0)
    rle = Rle(height=mask.shape[0], width=mask.shape[1], counts=tuple(counts))
    rle.validate()
    return rle


def decode_rle(rle: Rle) -> np.ndarray:
    """Inverse of :func:`encode_rle`."""
    rle.validate()
    flat = np.zeros(rle.height * rle.width, dtype=bool)
    pos = 0
    value = False
    for count in rle.counts:
        if value:
            flat[pos : pos + count] = True
        pos += count
        value = not value
    return flat.reshape(rle.height, rle.width)


def iou(a: np.ndarray, b: np.ndarray) -> float:
    """Intersection over union; 1.0 when both masks are empty."""
    a = as_mask(a)
    b = as_mask(b)
    _check_same_shape(a, b)
    union = np.logical_or(a, b).sum()
    if union == 0:
        return 1.0
    return float(np.logical_and(a, b).sum() / union)


def intersection_union(a: np.ndarray, b: np.ndarray) -> tuple[int, int]:
    """Raw pixel counts (|a & b|, |a | b|) for dataset-level pooling."""
    a = as_mask(a)
    b = as_mask(b)
    _check_same_shape(a, b)
    return int(np.logical_and(a, b).sum()), int(np.logical_or(a, b).sum())


def boundary(mask: np.ndarray) -> np.ndarray:
    """Foreground pixels 4-adjacent to background or to the image border."""
    mask = as_mask(mask)
    padded = np.pad(mask, 1, mode="constant", constant_values=False)
    interior = (
        padded[:-2, 1:-1] & padded[2:, 1:-1] & padded[1:-1, :-2] & padded[1:-1, 2:]
    )
    return mask & ~interior


def dilate(mask: np.ndarray, radius: int) -> np.ndarray:
    """Grow the foreground by a Chebyshev ball; radius 0 is the identity."""
    mask = as_mask(mask)
    if radius < 0:
        raise ValueError(f"radius must be >= 0, got {radius}")
    if radius == 0 or not mask.any():
        return mask.copy()
    footprint = np.ones((2 * radius + 1, 2 * radius + 1), dtype=bool)
    return ndimage.binary_dilation(mask, structure=footprint)


def bounding_box(mask: np.ndarray) -> tuple[int, int, int, int] | None:
    """Tight (x0, y0, x1, y1) box over foreground, end-exclusive; None if empty."""
    mask = as_mask(mask)
    rows = np.flatnonzero(mask.any(axis=1))
    if rows.size == 0:
        return None
    cols = np.flatnonzero(mask.any(axis=0))
    return int(cols[0]), int(rows[0]), int(cols[-1]) + 1, int(rows[-1]) + 1


def random_mask(rng: np.random.Generator, height: int, width: int, p: float = 0.5) -> np.ndarray:
    """Bernoulli mask, used by property tests and synthetic fixtures."""
    return rng.random((height, width)) < p
