"""Choosing the number of communities by an information criterion.

For each candidate ``m`` the embedding is fitted with ``K1 = K2 = m - 1``.
Two scores are available, both of the form ``2 * negLL + df * log(N)`` with
``N = n(n-1)/2`` node pairs:

* ``"blockmodel"`` (default): nodes are clustered by K-means on ``B_hat`` and
  scored under an ordinal blockmodel, which has two free sign probabilities per
  unordered pair of blocks, so ``df = m(m+1)``.
* ``"embedding"``: the fitted embedding likelihood with
  ``df = n * (K1 + K2) + 2``. Every extra dimension costs ``2n log N``, which
  in practice almost always favours the smallest ``m``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .detection import kmeans_embed
from .model import SignedNetwork
from .optimizer import DivergenceError, FitConfig, FitResult, fit

log = logging.getLogger(__name__)

CRITERIA = ("blockmodel", "embedding")


@dataclass
class Candidate:
    m: int
    score: float
    neg_log_likelihood: float
    df: int
    fit: FitResult | None = None
    failed: bool = False
    error: str = ""
    # blockmodel criterion only: labels used and their blockmodel negLL
    labels: np.ndarray | None = None
    block_neg_log_likelihood: float = math.nan


@dataclass
class SelectionResult:
    m_grid: list
    candidates: list = field(default_factory=list)
    chosen_m: int | None = None
    criterion: str = "blockmodel"

    @property
    def scores(self) -> dict:
        return {c.m: c.score for c in self.candidates}

    @property
    def fits(self) -> dict:
        return {c.m: c.fit for c in self.candidates}


def degrees_of_freedom(n: int, m: int, criterion: str = "blockmodel") -> int:
    if criterion == "embedding":
        return n * 2 * (m - 1) + 2
    if criterion == "blockmodel":
        return m * (m + 1)
    raise ValueError(f"unknown criterion {criterion!r}")


def bic_score(neg_log_likelihood: float, n: int, m: int, criterion: str = "blockmodel") -> float:
    pairs = n * (n - 1) / 2
    return 2.0 * neg_log_likelihood + degrees_of_freedom(n, m, criterion) * math.log(pairs)


def block_neg_log_likelihood(Y: SignedNetwork, labels, m: int) -> float:
    """Profile negLL of an ordinal blockmodel with the given 1-based labels.

    Each unordered block pair gets its own sign distribution, estimated by the
    observed frequencies over the node pairs ``i < j`` it contains.
    """
    labels = np.asarray(labels, dtype=np.int64) - 1
    n = Y.n
    if labels.shape != (n,) or labels.min(initial=0) < 0 or labels.max(initial=0) >= m:
        raise ValueError("labels must be n values in 1..m")
    iu, ju = np.triu_indices(n, k=1)
    lo = np.minimum(labels[iu], labels[ju])
    hi = np.maximum(labels[iu], labels[ju])
    sign = Y.entries[iu, ju].astype(np.int64) + 1
    counts = np.bincount((lo * m + hi) * 3 + sign, minlength=m * m * 3).reshape(m * m, 3)
    totals = counts.sum(axis=1, keepdims=True)
    nz = counts > 0
    ratio = np.divide(counts, totals, out=np.ones(counts.shape), where=nz)
    return float(-(counts[nz] * np.log(ratio[nz])).sum())


def choose(candidates) -> int | None:
    """Smallest score among non-failed candidates; ties go to the smaller ``m``."""
    ok = [c for c in candidates if not c.failed]
    if not ok:
        return None
    return min(ok, key=lambda c: (c.score, c.m)).m


def select_m(Y: SignedNetwork, m_grid, config_template: FitConfig | None = None,
             link=None, keep_fits: bool = True, criterion: str = "blockmodel",
             restarts: int = 50, seed: int = 0) -> SelectionResult:
    """Fit every ``m`` in the grid and pick the smallest score.

    ``restarts`` and ``seed`` drive the K-means step of the blockmodel criterion.
    """
    if criterion not in CRITERIA:
        raise ValueError(f"unknown criterion {criterion!r}")
    grid = sorted(set(int(m) for m in m_grid))
    if not grid:
        raise ValueError("m_grid is empty")
    if grid[0] < 2:
        raise ValueError("every candidate m must be at least 2")
    template = config_template or FitConfig()
    result = SelectionResult(m_grid=grid, criterion=criterion)
    for m in grid:
        cfg = replace(template, K1=m - 1, K2=m - 1)
        df = degrees_of_freedom(Y.n, m, criterion)
        try:
            res = fit(Y, cfg, link)
        except DivergenceError as exc:
            log.warning("m=%d failed: %s", m, exc)
            result.candidates.append(
                Candidate(m, math.inf, math.inf, df, failed=True, error=str(exc)))
            continue
        nll = res.objective_trace[-1]
        cand = Candidate(m, math.nan, nll, df, res if keep_fits else None)
        if criterion == "blockmodel":
            cand.labels = kmeans_embed(res.state.B, m, restarts=restarts, seed=seed).labels
            cand.block_neg_log_likelihood = block_neg_log_likelihood(Y, cand.labels, m)
            cand.score = bic_score(cand.block_neg_log_likelihood, Y.n, m, criterion)
        else:
            cand.score = bic_score(nll, Y.n, m, criterion)
        result.candidates.append(cand)
    done = [c for c in result.candidates if not c.failed]
    for a, b in zip(done, done[1:]):
        if b.neg_log_likelihood > a.neg_log_likelihood:
            log.info("negLL rose from m=%d to m=%d (%.3f > %.3f)",
                     a.m, b.m, b.neg_log_likelihood, a.neg_log_likelihood)
    result.chosen_m = choose(result.candidates)
    return result
