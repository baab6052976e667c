"""K-medoids clustering of normalized poses.

Initialization picks the points with the smallest normalized distance sums;
iteration alternates nearest-medoid assignment and per-cluster cost
minimization. An optional swap phase then applies the best strictly
improving medoid/non-medoid exchange until none is left.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..core.error_handling import InputError
from ..core.logging import get_logger

logger = get_logger(__name__)


@dataclass
class ClusteringResult:
    """Medoid indices (ascending), labels and the cost after each phase."""

    medoids: list[int]
    labels: np.ndarray
    cost: float
    iterations: int
    history: list[float] = field(default_factory=list)


def pairwise_distances(points: np.ndarray) -> np.ndarray:
    """Euclidean distance matrix of row vectors."""
    diff = points[:, None, :] - points[None, :, :]
    return np.sqrt(np.sum(diff * diff, axis=-1))


def clustering_cost(distances: np.ndarray, medoids: list[int]) -> float:
    """Sum of distances from every point to its nearest medoid."""
    return float(distances[:, medoids].min(axis=1).sum())


def assign_nearest(distances: np.ndarray, medoids: list[int]) -> np.ndarray:
    """Index into ``medoids`` of each point's nearest medoid; ties go to the first."""
    return np.argmin(distances[:, medoids], axis=1)


def count_distinct(points: np.ndarray) -> int:
    """Number of distinct rows."""
    return int(np.unique(points, axis=0).shape[0])


def initial_medoids(distances: np.ndarray, m: int) -> list[int]:
    """Points with the ``m`` smallest ``v_j = Σ_i d_ij / Σ_l d_il``, skipping duplicates."""
    row_sums = distances.sum(axis=1)
    safe = np.where(row_sums > 0, row_sums, 1.0)
    scores = (distances / safe[:, None]).sum(axis=0)
    chosen: list[int] = []
    for j in np.argsort(scores, kind="stable"):
        if any(distances[j, c] == 0 for c in chosen):
            continue
        chosen.append(int(j))
        if len(chosen) == m:
            break
    return sorted(chosen)


def _update_medoids(distances: np.ndarray, medoids: list[int], labels: np.ndarray) -> list[int]:
    updated = []
    for k in range(len(medoids)):
        members = np.flatnonzero(labels == k)
        within = distances[np.ix_(members, members)].sum(axis=0)
        updated.append(int(members[int(np.argmin(within))]))
    return sorted(updated)


def _swap_refine(distances: np.ndarray, medoids: list[int]) -> list[int]:
    n = distances.shape[0]
    current = list(medoids)
    cost = clustering_cost(distances, current)
    while True:
        to_medoids = distances[:, current]
        order = np.argsort(to_medoids, axis=1, kind="stable")
        nearest = order[:, 0]
        nearest_d = to_medoids[np.arange(n), nearest]
        second_d = (
            to_medoids[np.arange(n), order[:, 1]] if len(current) > 1 else np.full(n, np.inf)
        )
        best: tuple[float, int, int] | None = None
        candidates = np.array([h for h in range(n) if h not in current], dtype=np.intp)
        if candidates.size == 0:
            return current
        to_candidates = distances[:, candidates]
        for k in range(len(current)):
            keep = np.where(nearest == k, second_d, nearest_d)
            swapped = np.minimum(keep[:, None], to_candidates).sum(axis=0)
            h_pos = int(np.argmin(swapped))
            new_cost = float(swapped[h_pos])
            if new_cost < cost - 1e-12 and (best is None or new_cost < best[0]):
                best = (new_cost, k, int(candidates[h_pos]))
        if best is None:
            return current
        cost, k, h = best
        current[k] = h
        current.sort()


def kmedoids(
    points: np.ndarray,
    m: int,
    *,
    max_iterations: int = 100,
    swap_refine: bool = True,
) -> ClusteringResult:
    """Cluster row vectors around ``m`` medoids.

    Parameters
    ----------
    points : np.ndarray
        ``n×D`` data.
    m : int
        Number of medoids.
    max_iterations : int, optional
        Cap on assign/update rounds, by default 100.
    swap_refine : bool, optional
        Run the swap phase after convergence, by default True.

    Returns
    -------
    ClusteringResult
        Sorted medoid indices and per-point labels; ``history`` holds the
        initial cost followed by the cost after every round.

    Raises
    ------
    InputError
        If ``m`` is not in ``1..distinct(n)``.

    """
    points = np.asarray(points, dtype=np.float64)
    n = points.shape[0]
    if m <= 0:
        raise InputError(f"template count must be positive, got {m}")
    if m > n:
        raise InputError(f"cannot choose {m} templates from {n} poses")
    distinct = count_distinct(points)
    if m > distinct:
        raise InputError(f"cannot choose {m} templates from {distinct} distinct poses")

    distances = pairwise_distances(points)
    medoids = initial_medoids(distances, m)
    history = [clustering_cost(distances, medoids)]
    iterations = 0
    while iterations < max_iterations:
        iterations += 1
        labels = assign_nearest(distances, medoids)
        updated = _update_medoids(distances, medoids, labels)
        history.append(clustering_cost(distances, updated))
        if updated == medoids:
            break
        medoids = updated

    if swap_refine:
        medoids = _swap_refine(distances, medoids)
        history.append(clustering_cost(distances, medoids))

    labels = assign_nearest(distances, medoids)
    cost = clustering_cost(distances, medoids)
    logger.debug("K-medoids finished", m=m, n=n, iterations=iterations, cost=cost)
    return ClusteringResult(medoids, labels, cost, iterations, history)
