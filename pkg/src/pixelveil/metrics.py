"""Image quality measures: sliding-window SSIM, single-window SSIM and MSE."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput, InvalidParameter
from .image import MAX_VALUE, Image


@dataclass(frozen=True)
class SsimParams:
    window: int = 11
    gaussian_sigma: float = 1.5
    k1: float = 0.01
    k2: float = 0.03
    dynamic_range: float = float(MAX_VALUE)

    def __post_init__(self):
        if self.window < 3 or self.window % 2 == 0:
            raise InvalidParameter(f"SSIM window must be odd and >= 3, got {self.window}")
        if not self.gaussian_sigma > 0:
            raise InvalidParameter(f"gaussian_sigma must be > 0, got {self.gaussian_sigma}")

    @property
    def c1(self) -> float:
        return (self.k1 * self.dynamic_range) ** 2

    @property
    def c2(self) -> float:
        return (self.k2 * self.dynamic_range) ** 2


DEFAULT_PARAMS = SsimParams()


def _as_array(x) -> np.ndarray:
    return x.data if isinstance(x, Image) else np.asarray(x, dtype=np.float64)


def _check_same_shape(a: np.ndarray, b: np.ndarray):
    if a.shape != b.shape:
        raise InvalidInput(f"image dimensions differ: {_describe(a.shape)} vs {_describe(b.shape)}")


def _describe(shape):
    if len(shape) == 3:
        return f"{shape[1]}x{shape[0]}x{shape[2]}"
    return "x".join(str(s) for s in shape)


def _window_weights(params: SsimParams) -> np.ndarray:
    r = params.window // 2
    x = np.arange(-r, r + 1, dtype=np.float64)
    g = np.exp(-(x**2) / (2 * params.gaussian_sigma**2))
    return g / g.sum()


def _valid_filter(arr: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Separable weighted sum over every fully-contained window."""
    n = len(g)
    h, w = arr.shape[:2]
    rows = sum(g[i] * arr[i : h - n + 1 + i] for i in range(n))
    return sum(g[j] * rows[:, j : w - n + 1 + j] for j in range(n))


def ssim_map(a, b, params: SsimParams = DEFAULT_PARAMS) -> np.ndarray:
    """Per-window SSIM values, shape ``(h - win + 1, w - win + 1, channels)``."""
    x = _as_array(a)
    y = _as_array(b)
    _check_same_shape(x, y)
    if x.ndim == 2:
        x, y = x[:, :, None], y[:, :, None]
    if min(x.shape[:2]) < params.window:
        raise InvalidInput(
            f"image {_describe(x.shape)} is smaller than the {params.window}x{params.window} SSIM window"
        )
    g = _window_weights(params)
    mu_x = _valid_filter(x, g)
    mu_y = _valid_filter(y, g)
    var_x = _valid_filter(x * x, g) - mu_x * mu_x
    var_y = _valid_filter(y * y, g) - mu_y * mu_y
    cov = _valid_filter(x * y, g) - mu_x * mu_y
    c1, c2 = params.c1, params.c2
    num = (2 * mu_x * mu_y + c1) * (2 * cov + c2)
    den = (mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2)
    return num / den


def ssim_full(a, b, params: SsimParams = DEFAULT_PARAMS) -> float:
    """Mean SSIM over all valid window positions and channels."""
    return float(np.mean(ssim_map(a, b, params)))


def ssim_window(orig, cand, params: SsimParams = DEFAULT_PARAMS, clamp: bool = True) -> float:
    """SSIM of one window with uniform weights and population statistics.

    With ``clamp`` (the default) the score is limited to ``[0, 1]``, which is
    what the exponential mechanism needs for a quality sensitivity of 1.
    """
    x = np.asarray(orig, dtype=np.float64).ravel()
    y = np.asarray(cand, dtype=np.float64).ravel()
    if x.shape != y.shape:
        raise InvalidInput(f"window lengths differ: {x.size} vs {y.size}")
    if x.size == 0:
        raise InvalidInput("empty window")
    mu_x = x.mean()
    mu_y = y.mean()
    var_x = np.mean((x - mu_x) ** 2)
    var_y = np.mean((y - mu_y) ** 2)
    cov = np.mean((x - mu_x) * (y - mu_y))
    c1, c2 = params.c1, params.c2
    q = ((2 * mu_x * mu_y + c1) * (2 * cov + c2)) / ((mu_x**2 + mu_y**2 + c1) * (var_x + var_y + c2))
    if clamp:
        q = min(max(q, 0.0), 1.0)
    return float(q)


def mse(a, b) -> float:
    x = _as_array(a)
    y = _as_array(b)
    _check_same_shape(x, y)
    return float(np.mean((x - y) ** 2))
