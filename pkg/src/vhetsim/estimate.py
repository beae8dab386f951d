"""Traffic load estimators for sleeping small base stations.

Five schemes: nearest-neighbor averaging with and without inverse-distance
weighting, random neighbor selection with and without weighting, and
multi-level k-means clustering with elbow-based cluster-count selection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DegenerateDistanceError, InsufficientNeighborsError

METHODS = (
    "distance_unweighted",
    "distance_weighted",
    "random_unweighted",
    "random_weighted",
    "mlc",
)

DEFAULT_G_RANGE = range(1, 11)
_KMEANS_MAX_ITER = 300


@dataclass(frozen=True)
class EstimatorSpec:
    """Which estimation scheme to run, with its hyperparameters."""

    method: str
    neighbor_count: int = 20
    distance_exponent: float = 1.0
    cluster_count: int | str = "elbow"
    layer_count: int = 1
    seed: int = 0

    def __post_init__(self):
        # "perfect" is a diagnostic baseline (lambda_hat := lambda), not an
        # estimation scheme; it anchors the zero-error sanity checks.
        if self.method not in METHODS + ("perfect",):
            raise ValueError(f"unknown estimator method {self.method!r}")
        if self.neighbor_count < 1:
            raise ValueError("neighbor_count must be >= 1")
        if self.distance_exponent <= 0:
            raise ValueError("distance_exponent must be > 0")
        if self.layer_count < 1:
            raise ValueError("layer_count must be >= 1")
        if self.cluster_count != "elbow" and int(self.cluster_count) < 1:
            raise ValueError("cluster_count must be >= 1 or 'elbow'")


class Neighbor(NamedTuple):
    cell_id: int
    distance: float
    load: float


@dataclass(frozen=True)
class NeighborSet:
    neighbors: tuple[Neighbor, ...]

    def __post_init__(self):
        if any(n.distance <= 0 for n in self.neighbors):
            raise DegenerateDistanceError("neighbor distances must be > 0")

    @property
    def d_max(self) -> float:
        return max(n.distance for n in self.neighbors)

    @property
    def loads(self) -> np.ndarray:
        return np.array([n.load for n in self.neighbors])

    @property
    def distances(self) -> np.ndarray:
        return np.array([n.distance for n in self.neighbors])


class CellLoad(NamedTuple):
    """One observable cell at the current time slot."""

    cell_id: int
    position: tuple[float, float]
    load: float


def _distance(a, b) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


def rank_neighbors(target: CellLoad, cells, n_neighbors: int) -> NeighborSet:
    """The n nearest active cells by Euclidean distance, ties to lower id."""
    candidates = sorted(
        (Neighbor(c.cell_id, _distance(c.position, target.position), c.load)
         for c in cells if c.cell_id != target.cell_id),
        key=lambda nb: (nb.distance, nb.cell_id),
    )
    if len(candidates) < n_neighbors:
        raise InsufficientNeighborsError(
            f"need {n_neighbors} active cells, only {len(candidates)} available"
        )
    return NeighborSet(tuple(candidates[:n_neighbors]))


def select_random(target: CellLoad, cells, n_neighbors: int, seed: int) -> NeighborSet:
    """n distinct active cells drawn uniformly without replacement (seeded)."""
    pool = [c for c in cells if c.cell_id != target.cell_id]
    if len(pool) < n_neighbors:
        raise InsufficientNeighborsError(
            f"need {n_neighbors} active cells, only {len(pool)} available"
        )
    rng = np.random.default_rng(seed)
    chosen = rng.choice(len(pool), size=n_neighbors, replace=False)
    return NeighborSet(tuple(
        Neighbor(pool[i].cell_id, _distance(pool[i].position, target.position), pool[i].load)
        for i in chosen
    ))


def estimate_mean(neighbors: NeighborSet) -> float:
    """Unweighted average of the neighbor loads."""
    if not neighbors.neighbors:
        raise InsufficientNeighborsError("cannot average an empty neighbor set")
    return float(neighbors.loads.mean())


def weight_factor(d: float, d_max: float, n: float) -> float:
    """Inverse-distance weight d_max / d**n."""
    if d <= 0:
        raise DegenerateDistanceError("weighting is undefined at zero distance")
    if n <= 0:
        raise ValueError("distance exponent must be > 0")
    return d_max / d ** n


def estimate_weighted(neighbors: NeighborSet, n: float) -> float:
    """Inverse-distance weighted average of the neighbor loads.

    Computed via the normalized form sum(lam * (d_min/d)**n) / sum((d_min/d)**n),
    algebraically identical to the d_max/d**n weighting (the constant cancels)
    but immune to overflow/underflow at large exponents.
    """
    if not neighbors.neighbors:
        raise InsufficientNeighborsError("cannot estimate from an empty neighbor set")
    if n <= 0:
        raise ValueError("distance exponent must be > 0")
    d = neighbors.distances
    if np.any(d <= 0):
        raise DegenerateDistanceError("weighting is undefined at zero distance")
    w = (d.min() / d) ** n
    loads = neighbors.loads
    # clamp away float noise: the result is a convex combination of the loads
    return float(np.clip(np.dot(loads, w) / w.sum(), loads.min(), loads.max()))


@dataclass(frozen=True)
class ClusterModel:
    centroids: tuple[tuple[float, ...], ...]
    assignment: tuple[int, ...]
    sse: float
    sse_history: tuple[float, ...] = ()


def sse(points, model: ClusterModel) -> float:
    """Sum of squared distances of each point to its assigned centroid."""
    pts = np.atleast_2d(np.asarray(points, dtype=float).T).T
    if len(model.assignment) != len(pts):
        raise ValueError("every point needs a cluster assignment")
    centroids = np.asarray(model.centroids)
    return float(((pts - centroids[list(model.assignment)]) ** 2).sum())


def _plus_plus_init(pts: np.ndarray, g: int, rng: np.random.Generator) -> np.ndarray:
    centroids = [pts[rng.integers(len(pts))]]
    for _ in range(1, g):
        d2 = np.min(((pts[:, None, :] - np.asarray(centroids)[None]) ** 2).sum(-1), axis=1)
        total = d2.sum()
        if total <= 0:
            centroids.append(pts[rng.integers(len(pts))])
            continue
        centroids.append(pts[rng.choice(len(pts), p=d2 / total)])
    return np.asarray(centroids, dtype=float)


def kmeans_cluster(points, g: int, seed: int) -> ClusterModel:
    """Lloyd's algorithm with seeded k-means++ init, run to a fixed point.

    Empty clusters are reseeded to the point currently farthest from its
    centroid, so every cluster in the result is non-empty.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float).T).T
    if len(pts) < g:
        raise ValueError(f"need at least {g} points for {g} clusters, got {len(pts)}")
    rng = np.random.default_rng(seed)
    centroids = _plus_plus_init(pts, g, rng)
    assignment = None
    history = []
    for _ in range(_KMEANS_MAX_ITER):
        d2 = ((pts[:, None, :] - centroids[None]) ** 2).sum(-1)
        new_assignment = d2.argmin(axis=1)
        # an empty cluster steals the point farthest from its centroid among
        # clusters that can spare one, so every cluster stays non-empty
        counts = np.bincount(new_assignment, minlength=g)
        while (counts == 0).any():
            empty = int(np.flatnonzero(counts == 0)[0])
            own_dist = d2[np.arange(len(pts)), new_assignment]
            eligible = np.flatnonzero(counts[new_assignment] > 1)
            far = int(eligible[own_dist[eligible].argmax()])
            new_assignment[far] = empty
            counts = np.bincount(new_assignment, minlength=g)
        for cluster in range(g):
            centroids[cluster] = pts[new_assignment == cluster].mean(axis=0)
        d2 = ((pts[:, None, :] - centroids[None]) ** 2).sum(-1)
        history.append(float(d2[np.arange(len(pts)), new_assignment].sum()))
        if assignment is not None and (new_assignment == assignment).all():
            break
        assignment = new_assignment
    return ClusterModel(
        centroids=tuple(tuple(float(x) for x in c) for c in centroids),
        assignment=tuple(int(a) for a in assignment),
        sse=history[-1],
        sse_history=tuple(history),
    )


def elbow_g(points, g_range=DEFAULT_G_RANGE, seed: int = 0) -> int:
    """Cluster count at the knee of the SSE curve.

    The knee is the g with the largest perpendicular distance from the line
    joining the curve's endpoints; ties go to the smallest g.
    """
    gs = [g for g in g_range]
    if not gs:
        raise ValueError("empty cluster-count range")
    pts = np.atleast_2d(np.asarray(points, dtype=float).T).T
    gs = [g for g in gs if g <= len(pts)]
    if not gs:
        raise ValueError("no feasible cluster count for this corpus size")
    sses = [kmeans_cluster(pts, g, seed).sse for g in gs]
    if len(gs) == 1:
        return gs[0]
    x1, y1, x2, y2 = gs[0], sses[0], gs[-1], sses[-1]
    norm = math.hypot(x2 - x1, y2 - y1)
    best_g, best_dist = gs[0], -1.0
    for g, s in zip(gs, sses):
        dist = abs((y2 - y1) * g - (x2 - x1) * s + x2 * y1 - y2 * x1) / norm if norm > 0 else 0.0
        if dist > best_dist + 1e-12:
            best_g, best_dist = g, dist
    return best_g


def mlc_estimate(
    loads,
    active,
    layers: int,
    clusters: int | str = "elbow",
    seed: int = 0,
    mean_includes_estimates: bool = False,
    g_range=DEFAULT_G_RANGE,
    features=None,
) -> np.ndarray:
    """Multi-level clustering estimation for every sleeping cell.

    `loads` holds the current load of active cells and an initial guess for
    sleeping ones (caller supplies e.g. the last observed value). Each layer
    clusters the current values with k-means and replaces every sleeper's
    value with its cluster's mean active load; a cluster without any active
    member falls back to the global active mean.

    With `features` (one row per cell, e.g. full daily profiles) clustering
    runs on that static matrix instead of the evolving load values, in which
    case layers beyond the first are no-ops.

    Returns the full load vector with sleepers replaced by their estimates.
    """
    lam = np.array(loads, dtype=float)
    active = np.asarray(active, dtype=bool)
    if lam.shape != active.shape:
        raise ValueError("loads and active mask must have the same length")
    if layers < 1:
        raise ValueError("layer count must be >= 1")
    if not active.any():
        raise InsufficientNeighborsError("at least one active cell is required")
    global_mean = float(lam[active].mean())
    if not (~active).any():
        return lam
    feature_matrix = None
    if features is not None:
        feature_matrix = np.asarray(features, dtype=float)
        if len(feature_matrix) != len(lam):
            raise ValueError("feature matrix must have one row per cell")
    if clusters == "elbow":
        g = elbow_g(feature_matrix if feature_matrix is not None else lam,
                    g_range=g_range, seed=seed)
    else:
        g = int(clusters)
    g = min(g, len(lam))
    for layer in range(layers):
        model = kmeans_cluster(feature_matrix if feature_matrix is not None else lam,
                               g, seed + layer)
        assignment = np.asarray(model.assignment)
        for cluster in range(g):
            members = assignment == cluster
            source = members if mean_includes_estimates else (members & active)
            mean = float(lam[source].mean()) if source.any() else global_mean
            lam[members & ~active] = mean
    return np.clip(lam, 0.0, 1.0)
