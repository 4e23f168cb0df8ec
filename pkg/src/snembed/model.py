"""Ordinal edge model for signed networks and its latent parameterization.

An edge ``y_ij`` in {-1, 0, 1} has survival function
``Pr(y_ij >= t | m_ij) = f(d_t + m_ij)`` for ``t`` in {0, 1}, where ``f`` is
an increasing link and ``m_ij = -||beta_i - beta_j||^2 + alpha_i' alpha_j``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import special

# floor applied to category probabilities before taking logs
EPS_PROB = 1e-12


class InvalidIntercepts(ValueError):
    pass


class DimensionMismatch(ValueError):
    pass


class LinkFunction:
    """Increasing link ``f`` with derivative; ``kind`` is 'logit' or 'probit'.

    Both supported links are symmetric, ``1 - f(x) == f(-x)``, which the
    likelihood uses to avoid cancellation in upper tails.
    """

    KINDS = ("logit", "probit")

    def __init__(self, kind: str = "logit"):
        if kind not in self.KINDS:
            raise ValueError(f"unknown link {kind!r}; expected one of {self.KINDS}")
        self.kind = kind

    def __repr__(self):
        return f"LinkFunction({self.kind!r})"

    def __eq__(self, other):
        return isinstance(other, LinkFunction) and other.kind == self.kind

    def __hash__(self):
        return hash(self.kind)

    def value(self, x):
        if self.kind == "logit":
            return special.expit(x)
        return special.ndtr(x)

    def derivative(self, x):
        if self.kind == "logit":
            p = special.expit(x)
            return p * (1.0 - p)
        return np.exp(-0.5 * np.square(x)) / math.sqrt(2.0 * math.pi)

    # scalar conveniences
    def __call__(self, x):
        return self.value(x)


LOGIT = LinkFunction("logit")
PROBIT = LinkFunction("probit")


def get_link(link) -> LinkFunction:
    if isinstance(link, LinkFunction):
        return link
    return LinkFunction(link)


@dataclass(frozen=True)
class Intercepts:
    """Intercepts ``d0 >= d1 + delta`` and the box ``[c1, c2]`` they live in."""

    d0: float = 1.0
    d1: float = -1.0
    delta: float = 0.1
    c1: float = -10.0
    c2: float = 10.0

    def __post_init__(self):
        if not self.delta > 0:
            raise InvalidIntercepts(f"delta must be positive, got {self.delta}")
        if self.d1 > self.d0:
            raise InvalidIntercepts(f"d1={self.d1} exceeds d0={self.d0}")

    def feasible(self, atol: float = 0.0) -> bool:
        return (
            self.c1 - atol <= self.d1 <= self.d0 - self.delta + atol
            and self.d0 <= self.c2 + atol
        )

    def with_values(self, d0: float, d1: float) -> "Intercepts":
        return replace(self, d0=float(d0), d1=float(d1))


class SignedNetwork:
    """Symmetric adjacency matrix with entries in {-1, 0, 1} and zero diagonal."""

    def __init__(self, entries, validate: bool = True):
        Y = np.asarray(entries)
        if Y.ndim != 2 or Y.shape[0] != Y.shape[1]:
            raise ValueError(f"adjacency must be square, got shape {Y.shape}")
        Y = Y.astype(np.int8, copy=True)
        if validate:
            if not np.isin(Y, (-1, 0, 1)).all():
                raise ValueError("adjacency entries must be in {-1, 0, 1}")
            if not np.array_equal(Y, Y.T):
                raise ValueError("adjacency must be symmetric")
            if np.any(np.diag(Y) != 0):
                raise ValueError("adjacency diagonal must be zero")
        Y.setflags(write=False)
        self._Y = Y

    @classmethod
    def empty(cls, n: int) -> "SignedNetwork":
        return cls(np.zeros((n, n), dtype=np.int8), validate=False)

    @classmethod
    def from_pairs(cls, n: int, pairs) -> "SignedNetwork":
        """Build from ``(i, j, sign)`` records; unlisted pairs are 0."""
        Y = np.zeros((n, n), dtype=np.int8)
        for i, j, s in pairs:
            if i == j:
                raise ValueError(f"self-edge at node {i}")
            Y[i, j] = Y[j, i] = s
        return cls(Y)

    @property
    def n(self) -> int:
        return self._Y.shape[0]

    @property
    def entries(self) -> np.ndarray:
        return self._Y

    def edges(self):
        """Nonzero unordered pairs ``(i, j, sign)`` with ``i < j``, row-major."""
        iu, ju = np.nonzero(np.triu(self._Y, k=1))
        return [(int(i), int(j), int(self._Y[i, j])) for i, j in zip(iu, ju)]

    def permuted(self, perm) -> "SignedNetwork":
        perm = np.asarray(perm)
        return SignedNetwork(self._Y[np.ix_(perm, perm)], validate=False)

    def __eq__(self, other):
        return isinstance(other, SignedNetwork) and np.array_equal(self._Y, other._Y)

    def __repr__(self):
        n_pos = int((np.triu(self._Y, 1) == 1).sum())
        n_neg = int((np.triu(self._Y, 1) == -1).sum())
        return f"SignedNetwork(n={self.n}, positive={n_pos}, negative={n_neg})"


@dataclass(frozen=True)
class EmbeddingState:
    """Balance embedding ``B`` (n x K1), anomaly embedding ``A`` (n x K2), intercepts."""

    B: np.ndarray
    A: np.ndarray
    d: Intercepts = field(default_factory=Intercepts)

    def __post_init__(self):
        B = np.atleast_2d(np.asarray(self.B, dtype=float))
        A = np.asarray(self.A, dtype=float)
        if A.ndim == 1:
            A = A.reshape(-1, 1)
        if B.shape[0] != A.shape[0]:
            raise DimensionMismatch(
                f"B has {B.shape[0]} rows but A has {A.shape[0]}"
            )
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "A", A)

    @property
    def n(self) -> int:
        return self.B.shape[0]

    def constraint_report(self, C: float, kappa: float, a_n: float) -> dict:
        """Violation magnitudes of the fitting constraints (all ~0 when feasible)."""
        B, A = self.B, self.A
        nB = np.linalg.norm(B)
        return {
            "colsum_B": float(np.abs(B.sum(axis=0)).max(initial=0.0)),
            "colsum_A": float(np.abs(A.sum(axis=0)).max(initial=0.0)),
            "orthogonality": float(np.abs(B.T @ A).max(initial=0.0)),
            "rownorm_B_excess": float(max(row_norm_max(B) - C, 0.0)),
            "rownorm_A_excess": float(max(row_norm_max(A) - C, 0.0)),
            "frobenius_A_excess": float(
                max(np.linalg.norm(A) - kappa * math.sqrt(a_n) * nB, 0.0)
            ),
            "intercepts_feasible": bool(self.d.feasible(atol=1e-12)),
        }


@dataclass(frozen=True)
class LatentDecomposition:
    L: np.ndarray
    S: np.ndarray
    M: np.ndarray


def row_norm_max(X) -> float:
    """Two-to-infinity norm: the largest Euclidean row norm."""
    X = np.asarray(X, dtype=float)
    if X.size == 0:
        return 0.0
    return float(np.sqrt(np.square(X).sum(axis=1)).max())


def balance_matrix(B) -> np.ndarray:
    """``L_ij = -||beta_i - beta_j||^2``, exactly symmetric with zero diagonal."""
    B = np.asarray(B, dtype=float)
    sq = np.square(B).sum(axis=1)
    G = B @ B.T
    L = 2.0 * G - sq[:, None] - sq[None, :]
    # enforce exact symmetry and the sign constraint lost to rounding
    L = np.triu(L, 1)
    L = L + L.T
    np.minimum(L, 0.0, out=L)
    return L


def anomaly_matrix(A) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    S = A @ A.T
    return np.triu(S) + np.triu(S, 1).T


def latent_matrix(state: EmbeddingState) -> LatentDecomposition:
    L = balance_matrix(state.B)
    S = anomaly_matrix(state.A)
    return LatentDecomposition(L=L, S=S, M=L + S)


def survival(t: int, m, d: Intercepts, link=LOGIT):
    """``Pr(y >= t | m)``: 1 below -1, ``f(d_t + m)`` at 0 and 1, 0 above 1."""
    link = get_link(link)
    if t <= -1:
        return np.ones_like(np.asarray(m, dtype=float))[()]
    if t >= 2:
        return np.zeros_like(np.asarray(m, dtype=float))[()]
    dt = d.d0 if t == 0 else d.d1
    return link.value(dt + np.asarray(m, dtype=float))[()]


def prob(t: int, m, d: Intercepts, link=LOGIT, clamp: bool = False):
    """Category probability ``Pr(y = t | m)`` for ``t`` in {-1, 0, 1}.

    With ``clamp`` the result is floored at ``EPS_PROB``, as the likelihood
    does before taking logs.
    """
    if t not in (-1, 0, 1):
        raise ValueError(f"category must be -1, 0 or 1, got {t}")
    if d.d1 > d.d0:
        raise InvalidIntercepts(f"d1={d.d1} exceeds d0={d.d0}")
    link = get_link(link)
    m = np.asarray(m, dtype=float)
    if t == 1:
        p = link.value(d.d1 + m)
    elif t == -1:
        p = link.value(-(d.d0 + m))
    else:
        p = link.value(d.d0 + m) - link.value(d.d1 + m)
    if clamp:
        p = np.clip(p, EPS_PROB, 1.0)
    return p[()]
