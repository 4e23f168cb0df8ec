"""Community and anomaly detection on a fitted embedding, plus error metrics."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .model import anomaly_matrix

# exhaustive permutation search up to this many communities, Hungarian above
EXACT_MATCH_MAX = 8


@dataclass(frozen=True)
class CommunityAssignment:
    labels: np.ndarray  # values in 1..m
    centers: np.ndarray
    within_ss: float
    empty_clusters: int = 0

    @property
    def m(self) -> int:
        return self.centers.shape[0]


@dataclass(frozen=True)
class AnomalyReport:
    S_hat: np.ndarray
    eta: float
    flagged: frozenset

    def pairs(self):
        """Flagged pairs sorted, with their scores."""
        return [(i, j, float(self.S_hat[i, j])) for i, j in sorted(self.flagged)]


def _sq_dists(X, centers):
    d = (
        np.square(X).sum(axis=1)[:, None]
        - 2.0 * X @ centers.T
        + np.square(centers).sum(axis=1)[None, :]
    )
    return np.maximum(d, 0.0)


def _kmeans_pp(X, m, rng):
    n = X.shape[0]
    centers = np.empty((m, X.shape[1]))
    centers[0] = X[rng.integers(n)]
    closest = _sq_dists(X, centers[:1])[:, 0]
    for k in range(1, m):
        total = closest.sum()
        if total <= 0:
            idx = rng.integers(n)
        else:
            idx = rng.choice(n, p=closest / total)
        centers[k] = X[idx]
        closest = np.minimum(closest, _sq_dists(X, centers[k:k + 1])[:, 0])
    return centers


def _lloyd(X, centers, max_iter=300):
    """Lloyd iterations; ties go to the lowest center index (argmin)."""
    labels = None
    for _ in range(max_iter):
        D = _sq_dists(X, centers)
        new = D.argmin(axis=1)
        counts = np.bincount(new, minlength=centers.shape[0])
        for k in np.flatnonzero(counts == 0):
            # re-seed an empty cluster from the point farthest from its center
            far = int(D[np.arange(X.shape[0]), new].argmax())
            centers[k] = X[far]
            new[far] = k
            D = _sq_dists(X, centers)
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        for k in range(centers.shape[0]):
            members = X[labels == k]
            if len(members):
                centers[k] = members.mean(axis=0)
    D = _sq_dists(X, centers)
    labels = D.argmin(axis=1)
    wss = float(D[np.arange(X.shape[0]), labels].sum())
    return labels, centers, wss


def kmeans_embed(B_hat, m: int, restarts: int = 50, seed=0) -> CommunityAssignment:
    """Best-of-``restarts`` k-means++/Lloyd clustering of the rows of ``B_hat``.

    Restart ``r`` uses seed ``(seed, r)``, so results do not depend on the
    order restarts are run in.
    """
    X = np.asarray(B_hat, dtype=float)
    n = X.shape[0]
    if not 1 <= m <= n:
        raise ValueError(f"need 1 <= m <= n, got m={m}, n={n}")
    if restarts < 1:
        raise ValueError("restarts must be at least 1")
    best = None
    for r in range(restarts):
        rng = np.random.default_rng([int(seed), r])
        labels, centers, wss = _lloyd(X, _kmeans_pp(X, m, rng))
        if best is None or wss < best[2] - 1e-12 * max(1.0, abs(best[2])):
            best = (labels, centers.copy(), wss)
    labels, centers, wss = best
    empty = int(m - np.unique(labels).size)
    return CommunityAssignment(labels + 1, centers, wss, empty)


def _overlap(truth, est, m):
    O = np.zeros((m, m), dtype=int)
    np.add.at(O, (truth - 1, est - 1), 1)
    return O


def _check_labels(labels, m, name):
    labels = np.asarray(labels)
    if labels.ndim != 1:
        raise ValueError(f"{name} must be a vector")
    if labels.size and (labels.min() < 1 or labels.max() > m):
        raise ValueError(f"{name} contains labels outside 1..{m}")
    return labels.astype(int)


def community_error(truth_labels, est_labels, m: int):
    """``(overall, worst_case)`` mis-clustering proportions.

    Both minimize over matchings of true to estimated communities and count
    ``|N_l* minus N_hat_p(l)|``; each is minimized separately.
    """
    truth = _check_labels(truth_labels, m, "truth_labels")
    est = _check_labels(est_labels, m, "est_labels")
    if truth.shape != est.shape:
        raise ValueError("label vectors differ in length")
    n = truth.size
    O = _overlap(truth, est, m)
    sizes = O.sum(axis=1)
    miss = sizes[:, None] - O  # miss[l, k] = |N_l* \ N_hat_k|
    with np.errstate(invalid="ignore", divide="ignore"):
        frac = np.where(sizes[:, None] > 0, miss / np.maximum(sizes, 1)[:, None], 0.0)
    rows = np.arange(m)
    if m <= EXACT_MATCH_MAX:
        overall = np.inf
        worst = np.inf
        for p in itertools.permutations(range(m)):
            overall = min(overall, miss[rows, p].sum())
            worst = min(worst, frac[rows, p].max())
    else:
        r, c = linear_sum_assignment(miss)
        overall = miss[r, c].sum()
        worst = _bottleneck(frac)
    return float(overall) / n, float(worst)


def _bottleneck(cost):
    """Min over perfect matchings of the max matched cost (threshold + matching)."""
    vals = np.unique(cost)
    lo, hi = 0, len(vals) - 1
    while lo < hi:
        mid = (lo + hi) // 2
        allowed = cost <= vals[mid]
        r, c = linear_sum_assignment(~allowed)
        if allowed[r, c].all():
            hi = mid
        else:
            lo = mid + 1
    return float(vals[lo])


def community_error_hungarian(truth_labels, est_labels, m: int):
    """Assignment-based variant of :func:`community_error`, usable at any ``m``."""
    truth = _check_labels(truth_labels, m, "truth_labels")
    est = _check_labels(est_labels, m, "est_labels")
    O = _overlap(truth, est, m)
    sizes = O.sum(axis=1)
    miss = sizes[:, None] - O
    frac = np.where(sizes[:, None] > 0, miss / np.maximum(sizes, 1)[:, None], 0.0)
    r, c = linear_sum_assignment(miss)
    return float(miss[r, c].sum()) / truth.size, _bottleneck(frac)


def anomaly_scores(A_hat) -> np.ndarray:
    return anomaly_matrix(A_hat)


def threshold_anomalies(S_hat, eta: float) -> AnomalyReport:
    if eta < 0:
        raise ValueError("eta must be nonnegative")
    S = np.asarray(S_hat, dtype=float)
    iu, ju = np.nonzero(np.triu(np.abs(S) > eta, k=1))
    return AnomalyReport(S, float(eta), frozenset(zip(iu.tolist(), ju.tolist())))


def default_eta(S_hat) -> float:
    """Lower median of ``|s_ij|`` over ``i < j``."""
    S = np.asarray(S_hat, dtype=float)
    n = S.shape[0]
    if n < 2:
        raise ValueError("need at least two nodes")
    vals = np.sort(np.abs(S[np.triu_indices(n, k=1)]))
    return float(vals[(vals.size - 1) // 2])


def false_discovery_proportion(flagged, true_support) -> float:
    flagged = set(flagged)
    false = len(flagged - set(true_support))
    return false / max(len(flagged), 1)
