"""Image container, 8-bit file I/O, pixelization, coarsening and blur.

Working pixel values are float64 in ``[0, LEVELS - 1]``; they are only
rounded when written to disk.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

from .errors import ImageIOError, InvalidInput, InvalidParameter

LEVELS = 256
MAX_VALUE = LEVELS - 1


@dataclass(frozen=True, eq=False)
class Image:
    """Raster of shape ``(height, width, channels)`` with real-valued intensities."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.array(self.data, dtype=np.float64)
        if arr.ndim == 2:
            arr = arr[:, :, None]
        if arr.ndim != 3:
            raise InvalidInput(f"image data must be 2-D or 3-D, got shape {arr.shape}")
        if arr.shape[2] not in (1, 3):
            raise InvalidInput(f"channels must be 1 or 3, got {arr.shape[2]}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise InvalidInput(f"image must be non-empty, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise InvalidInput("image contains non-finite values")
        lo, hi = arr.min(), arr.max()
        if lo < 0 or hi > MAX_VALUE:
            raise InvalidInput(f"intensities must lie in [0, {MAX_VALUE}], got [{lo}, {hi}]")
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]

    @property
    def depth(self) -> int:
        return LEVELS

    @property
    def shape(self):
        return self.data.shape

    def __eq__(self, other):
        if not isinstance(other, Image):
            return NotImplemented
        return self.data.shape == other.data.shape and bool(np.array_equal(self.data, other.data))

    def __repr__(self):
        return f"Image({self.width}x{self.height}x{self.channels})"


def clamp(arr: np.ndarray) -> np.ndarray:
    return np.clip(arr, 0.0, float(MAX_VALUE))


# --- pixelization ---------------------------------------------------------


@dataclass(frozen=True)
class BlockGrid:
    """Per-block, per-channel means of a ``b``-pixelized image.

    ``block_means`` has shape ``(ceil(h/b), ceil(w/b), channels)``; edge blocks
    are averaged over their in-image pixels only.
    """

    b: int
    block_means: np.ndarray
    height: int
    width: int

    def expand(self, values: np.ndarray | None = None) -> np.ndarray:
        """Broadcast one value per block back to full resolution."""
        vals = self.block_means if values is None else values
        out = np.repeat(np.repeat(vals, self.b, axis=0), self.b, axis=1)
        return out[: self.height, : self.width]


def _check_block(b):
    if int(b) != b or b < 1:
        raise InvalidParameter(f"block side b must be an integer >= 1, got {b}")
    return int(b)


def block_grid(img: Image, b: int) -> BlockGrid:
    b = _check_block(b)
    data = img.data
    h, w, _ = data.shape
    rows = np.arange(0, h, b)
    cols = np.arange(0, w, b)
    # mean = min + mean(x - min) so a constant block yields its value exactly,
    # which keeps pixelize idempotent in floating point
    mins = np.minimum.reduceat(np.minimum.reduceat(data, rows, axis=0), cols, axis=1)
    grid = BlockGrid(b, mins, h, w)
    offsets = data - grid.expand()
    sums = np.add.reduceat(np.add.reduceat(offsets, rows, axis=0), cols, axis=1)
    rh = np.minimum(b, h - rows)
    cw = np.minimum(b, w - cols)
    counts = (rh[:, None] * cw[None, :])[:, :, None]
    means = np.minimum(mins + sums / counts, float(MAX_VALUE))
    return BlockGrid(b, means, h, w)


def pixelize(img: Image, b: int) -> Image:
    """Replace every ``b x b`` block by its per-channel arithmetic mean."""
    if _check_block(b) == 1:
        return img
    return Image(block_grid(img, b).expand())


# --- intensity coarsening -------------------------------------------------


def level_set(k_prime: int) -> np.ndarray:
    """The ``k_prime`` evenly spaced intensities from 0 to 255 (rounded half up)."""
    if int(k_prime) != k_prime or not 2 <= k_prime <= LEVELS:
        raise InvalidParameter(f"k_prime must be an integer in [2, {LEVELS}], got {k_prime}")
    j = np.arange(int(k_prime), dtype=np.float64)
    return np.floor(j * MAX_VALUE / (k_prime - 1) + 0.5)


def snap_to_levels(values: np.ndarray, levels: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=np.float64)
    hi_idx = np.clip(np.searchsorted(levels, values, side="left"), 1, len(levels) - 1)
    lo = levels[hi_idx - 1]
    hi = levels[hi_idx]
    # ties go up
    return np.where(values - lo >= hi - values, hi, lo)


def coarsen(img: Image, k_prime: int) -> Image:
    levels = level_set(k_prime)
    return Image(snap_to_levels(img.data, levels))


# --- blur -------------------------------------------------------------------


def gaussian_kernel1d(sigma: float) -> np.ndarray:
    if not sigma > 0:
        raise InvalidParameter(f"sigma must be > 0, got {sigma}")
    radius = math.ceil(3 * sigma)
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    g = np.exp(-(x**2) / (2 * sigma**2))
    return g / g.sum()


def _correlate_axis(arr: np.ndarray, kernel: np.ndarray, axis: int) -> np.ndarray:
    r = len(kernel) // 2
    pad = [(0, 0)] * arr.ndim
    pad[axis] = (r, r)
    padded = np.pad(arr, pad, mode="symmetric")
    n = arr.shape[axis]
    out = np.zeros_like(arr)
    for i, wt in enumerate(kernel):
        out += wt * np.take(padded, np.arange(i, i + n), axis=axis)
    return out


def gaussian_blur(img: Image, sigma: float = 1.0) -> Image:
    """Separable Gaussian blur, radius ``ceil(3*sigma)``, mirrored borders."""
    kernel = gaussian_kernel1d(sigma)
    out = _correlate_axis(img.data, kernel, 0)
    out = _correlate_axis(out, kernel, 1)
    return Image(clamp(out))


# --- file I/O ---------------------------------------------------------------

_FORMATS = {".png": "PNG", ".pgm": "PPM", ".ppm": "PPM", ".pnm": "PPM"}


def load_image(path) -> Image:
    from PIL import Image as PILImage, UnidentifiedImageError

    path = os.fspath(path)
    try:
        with PILImage.open(path) as im:
            im.load()
            mode = im.mode
            if mode in ("I;16", "I;16B", "I;16L", "I", "F"):
                raise ImageIOError(f"{path}: unsupported bit depth (mode {mode}); only 8-bit images are accepted")
            if mode not in ("L", "RGB"):
                raise ImageIOError(f"{path}: unsupported image mode {mode}; expected 8-bit grayscale or RGB")
            arr = np.asarray(im, dtype=np.uint8)
    except ImageIOError:
        raise
    except (OSError, UnidentifiedImageError, ValueError) as exc:
        raise ImageIOError(f"{path}: cannot read image ({exc})") from exc
    return Image(arr.astype(np.float64))


def to_bytes(img: Image) -> np.ndarray:
    """Round half up, clamp, cast to uint8."""
    return np.clip(np.floor(img.data + 0.5), 0, MAX_VALUE).astype(np.uint8)


def save_image(img: Image, path) -> None:
    from PIL import Image as PILImage

    path = os.fspath(path)
    ext = os.path.splitext(path)[1].lower()
    fmt = _FORMATS.get(ext)
    if fmt is None:
        raise ImageIOError(f"{path}: unsupported extension {ext!r}; use .png, .pgm or .ppm")
    if ext == ".pgm" and img.channels != 1:
        raise ImageIOError(f"{path}: PGM needs a single-channel image, got {img.channels} channels")
    if ext == ".ppm" and img.channels != 3:
        raise ImageIOError(f"{path}: PPM needs a 3-channel image, got {img.channels} channel")
    raw = to_bytes(img)
    pil = PILImage.fromarray(raw[:, :, 0] if img.channels == 1 else raw)
    try:
        pil.save(path, format=fmt)
    except OSError as exc:
        raise ImageIOError(f"{path}: cannot write image ({exc})") from exc


def sample_image() -> Image:
    """Bundled 64x64 grayscale test image."""
    from importlib.resources import as_file, files

    with as_file(files("pixelveil") / "data" / "camera64.pgm") as path:
        return load_image(path)
