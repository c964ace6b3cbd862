"""Grid sweeps of pixel mechanisms with SSIM/MSE utility, written as CSV.

A cell is one (image, mechanism, epsilon, b, repetition). Its seed is
``seed ^ cell_index``, so results do not depend on scheduling. Blur is
post-processing: every blur setting of a cell is scored on the same
obfuscated draw.
"""
from __future__ import annotations

import csv
import io
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _accel
from .errors import InvalidParameter
from .image import gaussian_blur
from .metrics import mse, ssim_full
from .pixel import MECHANISMS, PixelMechanismConfig, obfuscate

log = logging.getLogger(__name__)

HEADER = ["image", "mechanism", "epsilon", "b", "blur", "rep", "seed", "ssim", "mse", "ms"]


@dataclass(frozen=True)
class SweepSpec:
    images: list  # [(image_id, Image)]
    mechanisms: tuple = ("exponential",)
    epsilons: tuple = (1e3,)
    bs: tuple = (1,)
    blurs: tuple = (False,)
    repetitions: int = 1
    seed: int = 0
    p: int = 3
    k_prime: int = 4
    sensitive_window: int | None = None
    blur_sigma: float = 1.0

    def __post_init__(self):
        for name in ("images", "mechanisms", "epsilons", "bs", "blurs"):
            if len(getattr(self, name)) == 0:
                raise InvalidParameter(f"sweep grid '{name}' is empty")
        if self.repetitions < 1:
            raise InvalidParameter(f"repetitions must be >= 1, got {self.repetitions}")
        for e in self.epsilons:
            if not (math.isfinite(e) and e > 0):
                raise InvalidParameter(f"every epsilon must be > 0, got {e}")
        for m in self.mechanisms:
            if m not in MECHANISMS:
                raise InvalidParameter(f"unknown mechanism {m!r}")
        if int(self.seed) != self.seed or self.seed < 0:
            raise InvalidParameter(f"seed must be a non-negative integer, got {self.seed}")


@dataclass
class SweepRecord:
    image: str
    mechanism: str
    epsilon: float
    b: int
    blur: bool
    rep: int
    seed: int
    ssim: float | None = None
    mse: float | None = None
    ms: float | None = None

    def sort_key(self):
        return (self.image, self.mechanism, self.epsilon, self.b, self.blur, self.rep)

    def row(self, timing=True):
        def num(v):
            return "" if v is None else repr(float(v))

        return [
            self.image,
            self.mechanism,
            repr(float(self.epsilon)),
            str(self.b),
            "1" if self.blur else "0",
            str(self.rep),
            str(self.seed),
            num(self.ssim),
            num(self.mse),
            f"{self.ms:.3f}" if (timing and self.ms is not None) else "",
        ]


@dataclass
class SweepResult:
    records: list
    failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


def _cells(spec: SweepSpec):
    images = sorted(spec.images, key=lambda t: t[0])
    idx = 0
    for image_id, img in images:
        for mech in sorted(spec.mechanisms):
            for eps in sorted(spec.epsilons):
                for b in sorted(spec.bs):
                    for rep in range(spec.repetitions):
                        yield idx, image_id, img, mech, eps, b, rep
                        idx += 1


def _run_cell(spec: SweepSpec, cell):
    idx, image_id, img, mech, eps, b, rep = cell
    seed = spec.seed ^ idx
    out = []
    try:
        t0 = time.perf_counter()
        cfg = PixelMechanismConfig(
            epsilon=eps, b=b, p=spec.p, k_prime=spec.k_prime,
            sensitive_window=spec.sensitive_window, seed=seed,
        )
        plain = obfuscate(img, cfg, mech, parallel=False)
        base_ms = (time.perf_counter() - t0) * 1e3
        for blur in sorted(set(spec.blurs)):
            t1 = time.perf_counter()
            result = gaussian_blur(plain, spec.blur_sigma) if blur else plain
            ms = base_ms + (time.perf_counter() - t1) * 1e3
            out.append(SweepRecord(image_id, mech, eps, b, blur, rep, seed, ssim_full(img, result), mse(img, result), ms))
        return out, None
    except Exception as exc:  # a failed cell must not sink the sweep
        log.warning("sweep cell %d (%s %s eps=%g b=%d rep=%d) failed: %s", idx, image_id, mech, eps, b, rep, exc)
        failed = [SweepRecord(image_id, mech, eps, b, blur, rep, seed) for blur in sorted(set(spec.blurs))]
        return failed, f"{image_id}/{mech}/eps={eps}/b={b}/rep={rep}: {exc}"


def run_sweep(spec: SweepSpec, workers: int | None = None) -> SweepResult:
    cells = list(_cells(spec))
    workers = workers or _accel.pool_size()
    if workers <= 1:
        results = [_run_cell(spec, c) for c in cells]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda c: _run_cell(spec, c), cells))
    records = [r for recs, _ in results for r in recs]
    records.sort(key=SweepRecord.sort_key)
    failures = [err for _, err in results if err]
    return SweepResult(records, failures)


def write_csv(records, fh, timing=True) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(HEADER)
    for r in records:
        w.writerow(r.row(timing))


def to_csv(records, timing=True) -> str:
    buf = io.StringIO()
    write_csv(records, buf, timing)
    return buf.getvalue()


def mean_ssim_by(records, *keys) -> dict:
    """Mean SSIM grouped by the named record attributes."""
    groups = {}
    for r in records:
        if r.ssim is None:
            continue
        groups.setdefault(tuple(getattr(r, k) for k in keys), []).append(r.ssim)
    return {k: float(np.mean(v)) for k, v in sorted(groups.items())}


def logspace_epsilons(lo: float, hi: float, count: int) -> list:
    if not (lo > 0 and hi >= lo and count >= 1):
        raise InvalidParameter(f"bad epsilon range lo={lo} hi={hi} count={count}")
    if count == 1:
        return [float(lo)]
    return [float(v) for v in np.logspace(math.log10(lo), math.log10(hi), count)]
