"""Unsupervised two-cluster phase detection from pairwise state fidelities.

Distances are Hilbert-Schmidt, d = sqrt(2(1-F)) with F = |<psi_i|psi_j>|^2.
Clustering is exact k=2 medoid search minimizing the summed squared
distance to the medoids.
"""
from dataclasses import dataclass

import numpy as np


@dataclass
class DistanceMatrix:
    n: int
    d: np.ndarray  # symmetric, zero diagonal, entries in [0, sqrt(2)]


@dataclass
class Clustering:
    assignments: np.ndarray   # cluster id in {0, 1} per sample
    medoids: tuple            # (medoid of cluster 0, medoid of cluster 1)
    loss: float               # sum of squared distances to own medoid
    oriented_labels: np.ndarray | None = None  # {-1, +1} after orientation
    degenerate: bool = False  # True when one cluster came out empty


def fidelity_matrix(states) -> np.ndarray:
    if not states:
        raise ValueError("no states given")
    n_qubits = states[0].num_qubits
    if any(s.num_qubits != n_qubits for s in states):
        raise ValueError("states must share a qubit count")
    psi = np.stack([s.amplitudes for s in states])
    gram = psi.conj() @ psi.T
    return np.abs(gram) ** 2


def hs_distance_matrix(fidelities: np.ndarray) -> DistanceMatrix:
    f = np.clip(np.asarray(fidelities, dtype=float), 0.0, 1.0)
    d = np.sqrt(2.0 * (1.0 - f))
    np.fill_diagonal(d, 0.0)
    return DistanceMatrix(n=d.shape[0], d=d)


def _cluster_loss(d2, assignments, medoids):
    loss = 0.0
    for c in (0, 1):
        members = np.flatnonzero(assignments == c)
        loss += float(d2[members, medoids[c]].sum())
    return loss


def kmedoids_two(dist: DistanceMatrix) -> Clustering:
    """k=2 medoid clustering by exhaustive medoid-pair search.

    The squared-distance objective is minimized exactly: every candidate
    medoid pair is scored, ties broken by the smallest (m0, m1) index
    pair, so the result is the global optimum and fully deterministic.
    At the dataset sizes used here (n <= ~300) this is O(n^3) and cheap.
    """
    n = dist.n
    if n < 2:
        raise ValueError("clustering needs at least 2 samples")
    d2 = dist.d**2
    best_loss, medoids = np.inf, (0, 1)
    for m0 in range(n):
        losses = np.minimum(d2[:, [m0]], d2).sum(axis=0)
        for m1 in range(m0 + 1, n):
            if losses[m1] < best_loss:
                best_loss, medoids = float(losses[m1]), (m0, m1)
    # assign to nearer medoid by squared distance, ties to cluster 0
    assignments = np.where(d2[:, medoids[1]] < d2[:, medoids[0]], 1, 0)
    assignments[medoids[0]] = 0
    assignments[medoids[1]] = 1
    return Clustering(assignments=assignments, medoids=medoids,
                      loss=_cluster_loss(d2, assignments, medoids))


def orient_clusters(clustering: Clustering, xs) -> np.ndarray:
    """Label the cluster containing the smallest-x sample -1, the other +1."""
    xs = np.asarray(xs, dtype=float)
    if xs.shape[0] != clustering.assignments.shape[0]:
        raise ValueError("xs length does not match clustering")
    topo_cluster = clustering.assignments[int(np.argmin(xs))]
    labels = np.where(clustering.assignments == topo_cluster, -1, 1)
    clustering.degenerate = bool(np.all(labels == labels[0]))
    clustering.oriented_labels = labels
    return labels


def brute_force_two_medoids(dist: DistanceMatrix):
    """Exhaustive minimum over all medoid pairs (test oracle, n small)."""
    n = dist.n
    d2 = dist.d**2
    best = (np.inf, None)
    for m0 in range(n):
        for m1 in range(m0 + 1, n):
            loss = float(np.minimum(d2[:, m0], d2[:, m1]).sum())
            if loss < best[0]:
                best = (loss, (m0, m1))
    return best
