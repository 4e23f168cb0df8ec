"""Synthetic signed networks with planted communities and anomalous nodes.

``gen_example1`` draws a signed stochastic block model (every node sits on
its community center); ``gen_example2`` jitters nodes around the centers.
In both, a fraction ``a_n`` of nodes carry a nonzero anomaly embedding drawn
from ``0.5 N(1, Omega) + 0.5 N(-1, Omega)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import Intercepts, SignedNetwork, balance_matrix, get_link

DIM = 3
N_COMMUNITIES = 4
EXAMPLE_WEIGHTS = {
    1: (0.1, 0.2, 0.3, 0.4),
    2: (0.25, 0.25, 0.25, 0.25),
}


@dataclass(frozen=True)
class GroundTruth:
    B_star: np.ndarray
    A_star: np.ndarray
    labels: np.ndarray  # 1-based community ids
    S_star_support: frozenset
    d_star: Intercepts
    M_star: np.ndarray

    @property
    def n(self) -> int:
        return self.labels.shape[0]


def anomaly_support(A) -> frozenset:
    """Unordered pairs ``(i, j)``, ``i < j``, with ``alpha_i' alpha_j != 0``."""
    A = np.asarray(A, dtype=float)
    S = A @ A.T
    iu, ju = np.nonzero(np.triu(S != 0, k=1))
    return frozenset(zip(iu.tolist(), ju.tolist()))


def sample_edges(M_star, d_star: Intercepts, link="logit", seed=None) -> SignedNetwork:
    """Draw ``y_ij`` independently for each ``i < j`` and mirror it."""
    link = get_link(link)
    M = np.asarray(M_star, dtype=float)
    n = M.shape[0]
    rng = np.random.default_rng(seed)
    iu, ju = np.triu_indices(n, k=1)
    m = M[iu, ju]
    p_pos = link.value(d_star.d1 + m)
    p_nonneg = link.value(d_star.d0 + m)
    u = rng.random(m.shape[0])
    # y = 1 if u < F(1); y = 0 if F(1) <= u < F(0); else -1
    y = np.where(u < p_pos, 1, np.where(u < p_nonneg, 0, -1)).astype(np.int8)
    Y = np.zeros((n, n), dtype=np.int8)
    Y[iu, ju] = y
    Y[ju, iu] = y
    return SignedNetwork(Y, validate=False)


def _draw_anomalies(rng, n, a_n):
    omega = rng.uniform(0.0, 0.1, size=DIM)
    active = rng.random(n) < a_n
    sign = np.where(rng.random(n) < 0.5, 1.0, -1.0)
    noise = rng.normal(size=(n, DIM)) * np.sqrt(omega)
    A = (sign[:, None] + noise) * active[:, None]
    return A


def generate(example: int, n: int, a_n: float, seed=None, d_star: Intercepts | None = None,
             link="logit"):
    """Shared body of the two synthetic designs; returns ``(network, truth)``."""
    if example not in EXAMPLE_WEIGHTS:
        raise ValueError(f"example must be 1 or 2, got {example}")
    if n < 8:
        raise ValueError("n must be at least 8")
    if not 0 <= a_n <= 1:
        raise ValueError("a_n must lie in [0, 1]")
    d_star = d_star or Intercepts(1.0, -1.0)
    rng = np.random.default_rng(seed)
    centers = rng.normal(size=(N_COMMUNITIES, DIM))
    labels = rng.choice(N_COMMUNITIES, size=n, p=EXAMPLE_WEIGHTS[example]) + 1
    B = centers[labels - 1]
    if example == 2:
        B = B + rng.normal(scale=0.1, size=B.shape)
    A = _draw_anomalies(rng, n, a_n)
    S = A @ A.T
    M = balance_matrix(B) + S
    edge_seed = rng.integers(2**63)
    Y = sample_edges(M, d_star, link, seed=edge_seed)
    truth = GroundTruth(
        B_star=B, A_star=A, labels=labels, S_star_support=anomaly_support(A),
        d_star=d_star, M_star=M,
    )
    return Y, truth


def gen_example1(n: int, a_n: float, seed=None, d_star: Intercepts | None = None,
                 link="logit"):
    return generate(1, n, a_n, seed, d_star, link)


def gen_example2(n: int, a_n: float, seed=None, d_star: Intercepts | None = None,
                 link="logit"):
    return generate(2, n, a_n, seed, d_star, link)
