"""Hot loops of the exponential mechanism.

Every window scores all ``k'**(p*p)`` candidate states with single-window
SSIM and then draws one state by inverse-CDF sampling from a caller-supplied
uniform. The numba and numpy versions accumulate in the same order, so they
normally pick the same state for the same uniform.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _accel
from ._accel import njit, prange
from .errors import InvalidParameter
from .image import level_set

MAX_STATES = 2**24
_EXP_UNDERFLOW = -746.0


@dataclass(frozen=True)
class StateTable:
    """All candidate assignments of one ``p x p`` window over ``k'`` levels.

    Row ``s`` of ``digits`` is ``s`` written in base ``k'`` with the first
    window cell most significant (``itertools.product`` order).
    """

    p: int
    k_prime: int
    levels: np.ndarray
    digits: np.ndarray
    values: np.ndarray
    means: np.ndarray
    variances: np.ndarray

    @property
    def size(self) -> int:
        return self.values.shape[0]


def check_tractable(p: int, k_prime: int) -> int:
    if int(p) != p or p < 1:
        raise InvalidParameter(f"window side p must be an integer >= 1, got {p}")
    level_set(k_prime)
    n = int(k_prime) ** (int(p) * int(p))
    if n > MAX_STATES:
        raise InvalidParameter(
            f"k_prime**(p*p) = {k_prime}**{p * p} exceeds the tractability limit of {MAX_STATES} states"
        )
    return n


@lru_cache(maxsize=8)
def state_table(p: int, k_prime: int) -> StateTable:
    n = check_tractable(p, k_prime)
    cells = p * p
    levels = level_set(k_prime)
    idx = np.arange(n, dtype=np.int64)
    powers = int(k_prime) ** np.arange(cells - 1, -1, -1, dtype=np.int64)
    digits = ((idx[:, None] // powers[None, :]) % k_prime).astype(np.uint8)
    values = np.ascontiguousarray(levels[digits])
    means = values.sum(axis=1) / cells
    variances = ((values - means[:, None]) ** 2).sum(axis=1) / cells
    for arr in (digits, values, means, variances):
        arr.flags.writeable = False
    return StateTable(int(p), int(k_prime), levels, digits, values, means, variances)


# --- numpy path --------------------------------------------------------------


def _qualities_numpy(orig, values, means, variances, c1, c2):
    cells = orig.shape[0]
    # sequential sums, matching the numba kernel's order
    mu_o = 0.0
    for v in orig:
        mu_o += v
    mu_o /= cells
    centered = orig - mu_o
    var_o = 0.0
    for v in centered:
        var_o += v * v
    var_o /= cells
    acc = np.zeros(values.shape[0])
    for j in range(cells):
        acc += values[:, j] * centered[j]
    cov = acc / cells
    num = (2.0 * means * mu_o + c1) * (2.0 * cov + c2)
    den = (means * means + mu_o * mu_o + c1) * (variances + var_o + c2)
    return np.clip(num / den, 0.0, 1.0)


def _pick_numpy(q, eps, u):
    w = np.exp(eps * (q - q.max()))
    cum = np.cumsum(w)
    i = int(np.searchsorted(cum, u * cum[-1], side="right"))
    if i >= len(q):
        i = int(np.flatnonzero(w > 0)[-1])
    return i


def sample_windows_numpy(origs, values, means, variances, c1, c2, eps, uniforms):
    out = np.empty(origs.shape[0], dtype=np.int64)
    for k in range(origs.shape[0]):
        q = _qualities_numpy(origs[k], values, means, variances, c1, c2)
        out[k] = _pick_numpy(q, eps, uniforms[k])
    return out


# --- numba path --------------------------------------------------------------


@njit(nogil=True, cache=True)
def _qualities_nb(orig, values, means, variances, c1, c2, out):
    n, cells = values.shape
    mu_o = 0.0
    for j in range(cells):
        mu_o += orig[j]
    mu_o /= cells
    var_o = 0.0
    centered = np.empty(cells)
    for j in range(cells):
        centered[j] = orig[j] - mu_o
        var_o += centered[j] * centered[j]
    var_o /= cells
    for s in range(n):
        acc = 0.0
        for j in range(cells):
            acc += values[s, j] * centered[j]
        cov = acc / cells
        m = means[s]
        num = (2.0 * m * mu_o + c1) * (2.0 * cov + c2)
        den = (m * m + mu_o * mu_o + c1) * (variances[s] + var_o + c2)
        q = num / den
        if q < 0.0:
            q = 0.0
        elif q > 1.0:
            q = 1.0
        out[s] = q


@njit(nogil=True, cache=True)
def _pick_nb(buf, eps, u):
    n = buf.shape[0]
    qmax = buf[0]
    for s in range(1, n):
        if buf[s] > qmax:
            qmax = buf[s]
    total = 0.0
    for s in range(n):
        x = eps * (buf[s] - qmax)
        # exp underflows to exactly 0.0 below this
        buf[s] = np.exp(x) if x > _EXP_UNDERFLOW else 0.0
        total += buf[s]
    target = u * total
    acc = 0.0
    last = 0
    for s in range(n):
        acc += buf[s]
        if buf[s] > 0.0:
            last = s
        if acc > target:
            return s
    return last


@njit(nogil=True, cache=True)
def _sample_windows_serial_nb(origs, values, means, variances, c1, c2, eps, uniforms):
    nwin = origs.shape[0]
    out = np.empty(nwin, dtype=np.int64)
    buf = np.empty(values.shape[0])
    for k in range(nwin):
        _qualities_nb(origs[k], values, means, variances, c1, c2, buf)
        out[k] = _pick_nb(buf, eps, uniforms[k])
    return out


@njit(nogil=True, parallel=True, cache=True)
def _sample_windows_parallel_nb(origs, values, means, variances, c1, c2, eps, uniforms):
    nwin = origs.shape[0]
    out = np.empty(nwin, dtype=np.int64)
    for k in prange(nwin):
        buf = np.empty(values.shape[0])
        _qualities_nb(origs[k], values, means, variances, c1, c2, buf)
        out[k] = _pick_nb(buf, eps, uniforms[k])
    return out


def sample_windows_numba(origs, values, means, variances, c1, c2, eps, uniforms, parallel=True):
    fn = _sample_windows_parallel_nb if parallel else _sample_windows_serial_nb
    return fn(origs, values, means, variances, c1, c2, eps, uniforms)


# --- dispatch ----------------------------------------------------------------


def use_numba() -> bool:
    return _accel.HAS_NUMBA


def window_qualities(orig, table: StateTable, c1: float, c2: float) -> np.ndarray:
    orig = np.ascontiguousarray(orig, dtype=np.float64)
    if use_numba():
        out = np.empty(table.size)
        _qualities_nb(orig, table.values, table.means, table.variances, c1, c2, out)
        return out
    return _qualities_numpy(orig, table.values, table.means, table.variances, c1, c2)


def sample_windows(origs, table: StateTable, c1: float, c2: float, eps: float, uniforms, parallel=True) -> np.ndarray:
    """Sampled state index for every row of ``origs`` (shape ``(windows, p*p)``).

    ``parallel`` only matters on the numba path. Results never depend on it:
    each window gets its own pre-drawn uniform.
    """
    origs = np.ascontiguousarray(origs, dtype=np.float64)
    uniforms = np.ascontiguousarray(uniforms, dtype=np.float64)
    if origs.shape[0] == 0:
        return np.empty(0, dtype=np.int64)
    if use_numba():
        if parallel:
            _accel.set_threads()
        return sample_windows_numba(
            origs, table.values, table.means, table.variances, c1, c2, float(eps), uniforms, parallel
        )
    return sample_windows_numpy(origs, table.values, table.means, table.variances, c1, c2, float(eps), uniforms)
