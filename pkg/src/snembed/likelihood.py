"""Negative log-likelihood of a signed network and its analytic gradient.

The likelihood runs over unordered pairs ``i < j``; self-pairs are excluded.
Gradients are returned for ``+log L`` (the ascent direction used by the
projected updates), while the objective is reported as ``-log L``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .model import (
    EPS_PROB,
    DimensionMismatch,
    EmbeddingState,
    InvalidIntercepts,
    SignedNetwork,
    get_link,
)


@dataclass(frozen=True)
class LikelihoodGradient:
    gB: np.ndarray
    gA: np.ndarray
    gd0: float
    gd1: float

    def flat(self) -> np.ndarray:
        return np.concatenate([self.gB.ravel(), self.gA.ravel(), [self.gd0, self.gd1]])


def _check(Y: SignedNetwork, state: EmbeddingState):
    if Y.n != state.n:
        raise DimensionMismatch(f"network has {Y.n} nodes, state has {state.n} rows")
    if state.d.d1 > state.d.d0:
        raise InvalidIntercepts(f"d1={state.d.d1} exceeds d0={state.d.d0}")


def evaluate(Y: SignedNetwork, state: EmbeddingState, link="logit", want_grad=True):
    """Return ``(negLL, LikelihoodGradient | None)`` from one pass over the pairs."""
    _check(Y, state)
    link = get_link(link)
    B = np.ascontiguousarray(state.B, dtype=float)
    A = np.ascontiguousarray(state.A, dtype=float)
    gB = np.zeros_like(B)
    gA = np.zeros_like(A)
    kind = _kernels.LOGIT if link.kind == "logit" else _kernels.PROBIT
    nll, gd0, gd1 = _kernels.pair_pass(
        Y.entries, B, A, float(state.d.d0), float(state.d.d1), kind, EPS_PROB,
        want_grad, gB, gA,
    )
    if not want_grad:
        return nll, None
    return nll, LikelihoodGradient(gB=gB, gA=gA, gd0=gd0, gd1=gd1)


def neg_log_likelihood(Y: SignedNetwork, state: EmbeddingState, link="logit") -> float:
    return evaluate(Y, state, link, want_grad=False)[0]


def gradient(Y: SignedNetwork, state: EmbeddingState, link="logit") -> LikelihoodGradient:
    """Gradient of ``+log L`` with respect to ``B``, ``A``, ``d0`` and ``d1``."""
    return evaluate(Y, state, link, want_grad=True)[1]


def fd_gradient(Y: SignedNetwork, state: EmbeddingState, link="logit", step: float = 1e-5):
    """Central finite differences of ``+log L``, one coordinate at a time.

    Test oracle only: costs ``2 * (n*K1 + n*K2 + 2)`` likelihood evaluations.
    """
    if not step > 0:
        raise ValueError("step must be positive")

    def loglik(B, A, d0, d1):
        st = EmbeddingState(B, A, state.d.with_values(d0, d1))
        return -neg_log_likelihood(Y, st, link)

    B = state.B.copy()
    A = state.A.copy()
    d0, d1 = state.d.d0, state.d.d1

    def partials(X, f):
        g = np.zeros_like(X)
        for idx in np.ndindex(X.shape):
            old = X[idx]
            X[idx] = old + step
            up = f()
            X[idx] = old - step
            down = f()
            X[idx] = old
            g[idx] = (up - down) / (2.0 * step)
        return g

    gB = partials(B, lambda: loglik(B, A, d0, d1))
    gA = partials(A, lambda: loglik(B, A, d0, d1))
    gd0 = (loglik(B, A, d0 + step, d1) - loglik(B, A, d0 - step, d1)) / (2 * step)
    gd1 = (loglik(B, A, d0, d1 + step) - loglik(B, A, d0, d1 - step)) / (2 * step)
    return LikelihoodGradient(gB=gB, gA=gA, gd0=gd0, gd1=gd1)
