"""Distance-generalized Laplace mechanism for bounded vectors, plus a k-same baseline.

A release ``R`` of vector ``X1`` is ``exp(eps * d(X1, X2))``-indistinguishable
from one of ``X2``, where ``d`` is the range-normalized mean absolute
distance. Each element gets Laplace noise of scale ``n * (max_i - min_i) / eps``
and is then clamped back into its range (post-processing).
"""
from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput, InvalidParameter


@dataclass(frozen=True, eq=False)
class BoundedVector:
    """Real vector with a valid ``[min, max]`` interval per element.

    Values outside their interval are clamped on construction.
    """

    values: np.ndarray
    ranges: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64).ravel()
        ranges = _check_ranges(self.ranges)
        if values.size == 0:
            raise InvalidInput("vector must have at least one element")
        if values.size != ranges.shape[0]:
            raise InvalidInput(f"vector has {values.size} values but {ranges.shape[0]} ranges")
        if not np.all(np.isfinite(values)):
            raise InvalidInput("vector contains non-finite values")
        values = np.clip(values, ranges[:, 0], ranges[:, 1])
        values.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "ranges", ranges)

    def __len__(self):
        return self.values.size

    @property
    def widths(self) -> np.ndarray:
        return self.ranges[:, 1] - self.ranges[:, 0]

    def __eq__(self, other):
        if not isinstance(other, BoundedVector):
            return NotImplemented
        return np.array_equal(self.values, other.values) and np.array_equal(self.ranges, other.ranges)

    def __repr__(self):
        return f"BoundedVector(n={len(self)})"


def _check_ranges(ranges) -> np.ndarray:
    r = np.array(ranges, dtype=np.float64)
    if r.ndim != 2 or r.shape[1] != 2:
        raise InvalidInput(f"ranges must be a list of [min, max] pairs, got shape {r.shape}")
    if not np.all(np.isfinite(r)):
        raise InvalidInput("ranges contain non-finite bounds")
    if np.any(r[:, 1] <= r[:, 0]):
        bad = int(np.flatnonzero(r[:, 1] <= r[:, 0])[0])
        raise InvalidParameter(f"range {bad} is degenerate: [{r[bad, 0]}, {r[bad, 1]}]")
    r.flags.writeable = False
    return r


# --- distances ----------------------------------------------------------------


def element_distance(x: float, x_other: float, value_range) -> float:
    lo, hi = float(value_range[0]), float(value_range[1])
    if not hi > lo:
        raise InvalidParameter(f"degenerate range [{lo}, {hi}]")
    for v in (x, x_other):
        if not lo <= v <= hi:
            raise InvalidInput(f"value {v} lies outside range [{lo}, {hi}]")
    return abs(x - x_other) / (hi - lo)


def _check_compatible(a: BoundedVector, b: BoundedVector):
    if len(a) != len(b):
        raise InvalidInput(f"vector lengths differ: {len(a)} vs {len(b)}")
    if not np.array_equal(a.ranges, b.ranges):
        raise InvalidInput("vectors have different element ranges")


def vector_distance(a: BoundedVector, b: BoundedVector) -> float:
    """Mean of per-element range-normalized distances; always in [0, 1]."""
    _check_compatible(a, b)
    return float(np.mean(np.abs(a.values - b.values) / a.widths))


def pairwise_distances(vectors) -> np.ndarray:
    vals = np.stack([v.values for v in vectors])
    widths = vectors[0].widths
    return np.mean(np.abs(vals[:, None, :] - vals[None, :, :]) / widths, axis=2)


# --- Laplace mechanism ----------------------------------------------------------


def _check_epsilon(epsilon):
    if not (isinstance(epsilon, (int, float)) and math.isfinite(epsilon) and epsilon > 0):
        raise InvalidParameter(f"epsilon must be a finite number > 0, got {epsilon}")


def laplace_vector_scales(ranges, epsilon: float) -> np.ndarray:
    """Per-element scales ``n * (max - min) / eps``."""
    _check_epsilon(epsilon)
    r = _check_ranges(ranges)
    return r.shape[0] * (r[:, 1] - r[:, 0]) / epsilon


def laplace_vector_release(x: BoundedVector, epsilon: float, rng: np.random.Generator) -> np.ndarray:
    """Noisy values before clamping."""
    scales = laplace_vector_scales(x.ranges, epsilon)
    return x.values + rng.laplace(0.0, scales)


def laplace_vector_obfuscate(x: BoundedVector, epsilon: float, seed: int) -> BoundedVector:
    rng = np.random.default_rng(seed)
    return BoundedVector(laplace_vector_release(x, epsilon, rng), x.ranges)


def laplace_log_density(release, center, scales) -> float:
    """Log density of independent Laplace noise around ``center`` evaluated at ``release``."""
    r = np.asarray(release, dtype=np.float64)
    c = np.asarray(center, dtype=np.float64)
    s = np.asarray(scales, dtype=np.float64)
    return float(np.sum(-np.abs(r - c) / s - np.log(2.0 * s)))


def log_density_ratio(release, x1: BoundedVector, x2: BoundedVector, epsilon: float) -> float:
    """``log f(R | X1) - log f(R | X2)`` for the unclamped vector mechanism.

    The guarantee says this never exceeds ``epsilon * vector_distance(x1, x2)``.
    """
    _check_compatible(x1, x2)
    scales = laplace_vector_scales(x1.ranges, epsilon)
    return laplace_log_density(release, x1.values, scales) - laplace_log_density(release, x2.values, scales)


def guarantee_bound(epsilon: float, distance: float) -> float:
    """Multiplicative bound ``exp(eps * d)`` between secrets at distance ``d`` (inf on overflow)."""
    try:
        return math.exp(epsilon * distance)
    except OverflowError:
        return math.inf


def bound_table(epsilon: float, distances=(0.001, 0.01, 0.1, 1.0)) -> list[dict]:
    """Rows of ``{d, eps_d, bound}``; ``bound`` is None where ``exp`` overflows."""
    rows = []
    for d in distances:
        b = guarantee_bound(epsilon, d)
        rows.append({"d": d, "eps_d": epsilon * d, "bound": b if math.isfinite(b) else None})
    return rows


# --- k-same ---------------------------------------------------------------------


@dataclass(frozen=True)
class ClusterAssignment:
    k: int
    clusters: tuple
    centroids: np.ndarray
    ids: tuple

    def cluster_of(self, identity) -> int:
        for ci, members in enumerate(self.clusters):
            for m in members:
                if self.ids[m] == identity:
                    return ci
        raise InvalidInput(f"identity {identity!r} is not in the assignment")

    def member_ids(self, cluster: int) -> frozenset:
        return frozenset(self.ids[m] for m in self.clusters[cluster])


def ksame_cluster(vectors, k: int, ids=None) -> ClusterAssignment:
    """Greedy k-same clustering.

    The lowest-index unassigned vector seeds a cluster together with its
    ``k - 1`` nearest unassigned neighbours (ties go to the lower index).
    Fewer than ``k`` leftovers are merged into the last cluster.
    """
    vectors = list(vectors)
    m = len(vectors)
    if int(k) != k or k < 1:
        raise InvalidParameter(f"k must be an integer >= 1, got {k}")
    if m < k:
        raise InvalidInput(f"need at least k={k} vectors, got {m}")
    for v in vectors[1:]:
        _check_compatible(vectors[0], v)
    if ids is None:
        ids = tuple(range(m))
    else:
        ids = tuple(ids)
        if len(ids) != m:
            raise InvalidInput(f"got {len(ids)} ids for {m} vectors")
        if len(set(ids)) != m:
            raise InvalidInput("ids must be unique within a gallery")

    dist = pairwise_distances(vectors)
    unassigned = list(range(m))
    clusters = []
    while len(unassigned) >= k:
        seed = unassigned[0]
        rest = np.array(unassigned[1:], dtype=np.int64)
        order = np.lexsort((rest, dist[seed, rest]))
        members = [seed] + sorted(rest[order[: k - 1]].tolist())
        clusters.append(members)
        taken = set(members)
        unassigned = [i for i in unassigned if i not in taken]
    if unassigned:
        clusters[-1] = sorted(clusters[-1] + unassigned)

    vals = np.stack([v.values for v in vectors])
    centroids = np.stack([vals[c].mean(axis=0) for c in clusters])
    return ClusterAssignment(int(k), tuple(tuple(c) for c in clusters), centroids, ids)


def ksame_obfuscate(vectors, k: int) -> list[BoundedVector]:
    vectors = list(vectors)
    assign = ksame_cluster(vectors, k)
    out = [None] * len(vectors)
    for ci, members in enumerate(assign.clusters):
        for i in members:
            out[i] = BoundedVector(assign.centroids[ci], vectors[i].ranges)
    return out


@dataclass(frozen=True)
class AttackReport:
    k: int
    sizes: dict
    min: int
    mean: float
    violations: int

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "min": self.min,
            "mean": self.mean,
            "violations": self.violations,
            "sizes": {str(key): val for key, val in self.sizes.items()},
        }


def intersection_attack(assign_a: ClusterAssignment, assign_b: ClusterAssignment, shared_ids, k: int | None = None) -> AttackReport:
    """Intersect each shared identity's cluster across two independent releases."""
    shared = list(shared_ids)
    if not shared:
        raise InvalidInput("shared_ids is empty")
    if k is None:
        k = min(assign_a.k, assign_b.k)
    sizes = {}
    for ident in shared:
        a = assign_a.member_ids(assign_a.cluster_of(ident))
        b = assign_b.member_ids(assign_b.cluster_of(ident))
        sizes[ident] = len(a & b)
    vals = list(sizes.values())
    return AttackReport(int(k), sizes, min(vals), float(np.mean(vals)), sum(v < k for v in vals))


# --- JSON files -----------------------------------------------------------------


def parse_vector_document(doc) -> tuple[list[BoundedVector], list | None]:
    """Validate ``{"ranges": [[min, max], ...], "vectors": [[...], ...], "ids"?: [...]}``."""
    if not isinstance(doc, dict):
        raise InvalidInput("vector file must contain a JSON object")
    for key in ("ranges", "vectors"):
        if key not in doc:
            raise InvalidInput(f"missing field '{key}'")
        if not isinstance(doc[key], list):
            raise InvalidInput(f"field '{key}' must be a list")
    try:
        ranges = _check_ranges(doc["ranges"])
    except ValueError as exc:
        raise InvalidInput(f"field 'ranges': {exc}") from None
    vectors = []
    for i, vals in enumerate(doc["vectors"]):
        if not isinstance(vals, list) or len(vals) != ranges.shape[0]:
            raise InvalidInput(f"field 'vectors[{i}]' must be a list of {ranges.shape[0]} numbers")
        try:
            vectors.append(BoundedVector(np.array(vals, dtype=np.float64), ranges))
        except (TypeError, ValueError) as exc:
            raise InvalidInput(f"field 'vectors[{i}]': {exc}") from None
    ids = doc.get("ids")
    if ids is not None:
        if not isinstance(ids, list) or len(ids) != len(vectors):
            raise InvalidInput("field 'ids' must be a list with one entry per vector")
    return vectors, ids


def read_vector_file(path) -> tuple[list[BoundedVector], list | None]:
    with open(os.fspath(path)) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InvalidInput(f"{path}: invalid JSON ({exc})") from None
    return parse_vector_document(doc)


def vector_document(vectors, ids=None) -> dict:
    vectors = list(vectors)
    if not vectors:
        raise InvalidInput("no vectors to write")
    doc = {"ranges": vectors[0].ranges.tolist(), "vectors": [v.values.tolist() for v in vectors]}
    if ids is not None:
        doc["ids"] = list(ids)
    return doc


def write_vector_file(path, vectors, ids=None) -> None:
    with open(os.fspath(path), "w") as fh:
        json.dump(vector_document(vectors, ids), fh, indent=1)
        fh.write("\n")
