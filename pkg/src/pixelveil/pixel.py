"""Pixel-space mechanisms: the Laplace baseline and the SSIM exponential mechanism.

The exponential mechanism works on the cell grid left by ``b``-pixelization.
Non-overlapping ``p x p`` windows of cells are each replaced by a state drawn
with probability proportional to ``exp(eps' * q)``, where ``q`` is the
clamped single-window SSIM against the real-valued cell means. Rows and
columns of cells that do not fill a whole window get Laplace noise instead.

Budget accounting, for an image of ``w x h`` pixels and ``c`` channels:

* the exponential region is ``w' x h'``, the largest multiples of ``p*b``;
* ``eps`` is split between that region and the remainder in proportion to
  pixel counts;
* each of the ``A = w'h'c / (p^2 b^2)`` window applications costs
  ``2 * eps'`` (quality sensitivity is 1), so ``eps' = eps_exp / (2A)``;
* each remainder cell value gets ``eps_v = eps_rem / N_rem`` at sensitivity
  ``k - 1``.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import kernels
from .errors import InvalidInput, InvalidParameter
from .image import MAX_VALUE, Image, block_grid, clamp, gaussian_blur
from .metrics import DEFAULT_PARAMS, SsimParams

# RNG stream tags; each mechanism draws from its own keyed stream
_LAPLACE_STREAM = 0x4C41
_WINDOW_STREAM = 0x5749
_REMAINDER_STREAM = 0x5245


@dataclass(frozen=True)
class PixelMechanismConfig:
    epsilon: float
    b: int = 1
    p: int = 3
    k_prime: int = 4
    sensitive_window: int | None = None
    blur: bool = False
    seed: int = 0
    blur_sigma: float = 1.0

    def __post_init__(self):
        if not (isinstance(self.epsilon, (int, float)) and math.isfinite(self.epsilon) and self.epsilon > 0):
            raise InvalidParameter(f"epsilon must be a finite number > 0, got {self.epsilon}")
        if int(self.b) != self.b or self.b < 1:
            raise InvalidParameter(f"b must be an integer >= 1, got {self.b}")
        if self.sensitive_window is not None and (int(self.sensitive_window) != self.sensitive_window or self.sensitive_window < 1):
            raise InvalidParameter(f"sensitive_window must be an integer >= 1, got {self.sensitive_window}")
        if int(self.seed) != self.seed or self.seed < 0 or self.seed >= 2**64:
            raise InvalidParameter(f"seed must be an integer in [0, 2**64), got {self.seed}")
        if not self.blur_sigma > 0:
            raise InvalidParameter(f"blur_sigma must be > 0, got {self.blur_sigma}")
        kernels.check_tractable(self.p, self.k_prime)


# --- Laplace baseline ---------------------------------------------------------


def laplace_scale(config: PixelMechanismConfig, channels: int, pixels_per_channel: int | None = None) -> float:
    """Noise scale ``(k-1) n c / (eps b^2)``.

    ``n`` is ``config.sensitive_window`` when set, otherwise
    ``pixels_per_channel`` (the whole image is treated as sensitive).
    """
    n = config.sensitive_window if config.sensitive_window is not None else pixels_per_channel
    if n is None:
        raise InvalidParameter("sensitive_window is unset and no pixel count was given")
    return MAX_VALUE * n * channels / (config.epsilon * config.b**2)


def laplace_pixel_noise(shape, scale: float, seed: int) -> np.ndarray:
    """The pre-clamp perturbations ``laplace_pixel_obfuscate`` adds for ``seed``."""
    rng = np.random.default_rng([seed, _LAPLACE_STREAM])
    return rng.laplace(0.0, scale, size=shape)


def laplace_pixel_obfuscate(img: Image, config: PixelMechanismConfig) -> Image:
    """Pixelize, add Laplace noise to every block value, expand and clamp."""
    grid = block_grid(img, config.b)
    scale = laplace_scale(config, img.channels, img.width * img.height)
    noisy = grid.block_means + laplace_pixel_noise(grid.block_means.shape, scale, config.seed)
    out = Image(clamp(grid.expand(noisy)))
    if config.blur:
        out = gaussian_blur(out, config.blur_sigma)
    return out


# --- budget -------------------------------------------------------------------


@dataclass(frozen=True)
class BudgetLedger:
    epsilon: float
    width: int
    height: int
    channels: int
    p: int
    b: int
    region_width: int
    region_height: int
    applications: int
    exponential_budget: float
    eps_prime: float
    remainder_values: int
    remainder_budget: float
    eps_value: float
    quality_sensitivity: float = 1.0
    remainder_sensitivity: float = float(MAX_VALUE)

    @property
    def total(self) -> float:
        """Sequential-composition total of every mechanism application."""
        return (
            2.0 * self.eps_prime * self.quality_sensitivity * self.applications
            + self.eps_value * self.remainder_values
        )

    @property
    def remainder_scale(self) -> float:
        if self.remainder_values == 0:
            return 0.0
        return self.remainder_sensitivity / self.eps_value

    def to_dict(self) -> dict:
        d = asdict(self)
        d["total"] = self.total
        d["remainder_scale"] = self.remainder_scale
        return d


def allocate_budget(width: int, height: int, channels: int, config: PixelMechanismConfig) -> BudgetLedger:
    if width < 1 or height < 1 or channels < 1:
        raise InvalidInput(f"image dimensions must be positive, got {width}x{height}x{channels}")
    eps, p, b = float(config.epsilon), config.p, config.b
    span = p * b
    w_r = (width // span) * span
    h_r = (height // span) * span
    applications = (w_r * h_r * channels) // (span * span)
    cells_total = math.ceil(width / b) * math.ceil(height / b)
    cells_exp = (w_r // b) * (h_r // b)
    remainder_values = (cells_total - cells_exp) * channels

    if remainder_values == 0:
        exp_budget, rem_budget = eps, 0.0
    elif applications == 0:
        exp_budget, rem_budget = 0.0, eps
    else:
        exp_budget = eps * (w_r * h_r) / (width * height)
        rem_budget = eps - exp_budget
    eps_prime = exp_budget / (2 * applications) if applications else 0.0
    eps_value = rem_budget / remainder_values if remainder_values else 0.0
    return BudgetLedger(
        epsilon=eps,
        width=width,
        height=height,
        channels=channels,
        p=p,
        b=b,
        region_width=w_r,
        region_height=h_r,
        applications=applications,
        exponential_budget=exp_budget,
        eps_prime=eps_prime,
        remainder_values=remainder_values,
        remainder_budget=rem_budget,
        eps_value=eps_value,
    )


# --- exponential mechanism ------------------------------------------------------


@dataclass(frozen=True)
class WindowDistribution:
    """Exact output distribution of one window application."""

    states: np.ndarray
    qualities: np.ndarray
    probabilities: np.ndarray
    eps_prime: float
    levels: np.ndarray = field(repr=False)

    def sample(self, rng: np.random.Generator, size=None):
        """State indices drawn by inverse CDF, same rule as the image kernel."""
        u = rng.random(size)
        cum = np.cumsum(self.probabilities)
        idx = np.searchsorted(cum, np.asarray(u) * cum[-1], side="right")
        return np.minimum(idx, len(cum) - 1)


def _window_side(n_values: int) -> int:
    p = math.isqrt(n_values)
    if p * p != n_values or p < 1:
        raise InvalidInput(f"window must hold p*p values, got {n_values}")
    return p


def exponential_window_distribution(
    orig_window, eps_prime: float, k_prime: int = 4, params: SsimParams = DEFAULT_PARAMS
) -> WindowDistribution:
    orig = np.asarray(orig_window, dtype=np.float64).ravel()
    if not eps_prime >= 0 or not math.isfinite(eps_prime):
        raise InvalidParameter(f"eps_prime must be finite and >= 0, got {eps_prime}")
    p = _window_side(orig.size)
    table = kernels.state_table(p, k_prime)
    q = kernels.window_qualities(orig, table, params.c1, params.c2)
    logw = eps_prime * (q - q.max())
    w = np.exp(logw)
    return WindowDistribution(table.values, q, w / w.sum(), float(eps_prime), table.levels)


def _window_uniforms(seed: int, count: int) -> np.ndarray:
    return np.array([np.random.default_rng([seed, _WINDOW_STREAM, i]).random() for i in range(count)])


def exponential_obfuscate(
    img: Image, config: PixelMechanismConfig, params: SsimParams = DEFAULT_PARAMS, parallel: bool = True
) -> Image:
    """SSIM exponential mechanism over the whole image.

    ``parallel`` enables multi-threaded window sampling on the numba path; the
    output is identical either way.
    """
    h, w, c = img.shape
    p, b = config.p, config.b
    ledger = allocate_budget(w, h, c, config)
    grid = block_grid(img, b)
    cells = grid.block_means.copy()

    nwr = ledger.region_height // (p * b)
    nwc = ledger.region_width // (p * b)
    if ledger.applications:
        table = kernels.state_table(p, config.k_prime)
        region = cells[: nwr * p, : nwc * p, :]
        # window index = (channel, window row, window col), row-major
        origs = region.reshape(nwr, p, nwc, p, c).transpose(4, 0, 2, 1, 3).reshape(-1, p * p)
        uniforms = _window_uniforms(config.seed, origs.shape[0])
        picked = kernels.sample_windows(origs, table, params.c1, params.c2, ledger.eps_prime, uniforms, parallel)
        sampled = table.values[picked].reshape(c, nwr, nwc, p, p).transpose(1, 3, 2, 4, 0)
        cells[: nwr * p, : nwc * p, :] = sampled.reshape(nwr * p, nwc * p, c)

    if ledger.remainder_values:
        mask = np.ones(cells.shape[:2], dtype=bool)
        mask[: nwr * p, : nwc * p] = False
        rng = np.random.default_rng([config.seed, _REMAINDER_STREAM])
        noise = rng.laplace(0.0, ledger.remainder_scale, size=(int(mask.sum()), c))
        cells[mask] = cells[mask] + noise

    out = Image(clamp(grid.expand(cells)))
    if config.blur:
        out = gaussian_blur(out, config.blur_sigma)
    return out


MECHANISMS = ("exponential", "laplace")


def obfuscate(img: Image, config: PixelMechanismConfig, mechanism: str = "exponential", parallel: bool = True) -> Image:
    if mechanism == "exponential":
        return exponential_obfuscate(img, config, parallel=parallel)
    if mechanism == "laplace":
        return laplace_pixel_obfuscate(img, config)
    raise InvalidParameter(f"unknown mechanism {mechanism!r}; expected one of {MECHANISMS}")
