"""Projected gradient ascent on the signed-network log-likelihood.

Each iteration updates the balance embedding ``B``, then the anomaly
embedding ``A`` (kept orthogonal to ``[B, 1]`` and Frobenius-capped relative to
``B``), then optionally the intercepts. Every block step backtracks by halving
until the objective does not increase.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .likelihood import evaluate
from .model import DimensionMismatch, EmbeddingState, Intercepts, SignedNetwork, get_link, row_norm_max

log = logging.getLogger(__name__)


class DivergenceError(RuntimeError):
    """The objective became non-finite; retry with smaller steps."""


def project_frobenius(X, c: float) -> np.ndarray:
    """Scale ``X`` onto the Frobenius ball of radius ``c`` (identity inside it)."""
    if c < 0:
        raise ValueError("radius must be nonnegative")
    X = np.asarray(X, dtype=float)
    nrm = np.linalg.norm(X)
    if nrm <= c:
        return X.copy()
    if c == 0:
        return np.zeros_like(X)
    return X * (c / nrm)


def project_row_norm(X, c: float) -> np.ndarray:
    """Scale the whole of ``X`` so its largest row norm is at most ``c``.

    Rows are not clipped individually: one factor is applied to every row.
    """
    if not c > 0:
        raise ValueError("row-norm cap must be positive")
    X = np.asarray(X, dtype=float)
    r = row_norm_max(X)
    if r <= c:
        return X.copy()
    return X * (c / r)


def project_complement(basis, X, rcond: float = 1e-10) -> np.ndarray:
    """Residual of ``X`` after removing its projection onto ``span(basis)``.

    Numerically null directions of ``basis`` are dropped, so a rank-deficient
    basis (e.g. a zero column) is handled rather than rejected.
    """
    basis = np.asarray(basis, dtype=float)
    X = np.asarray(X, dtype=float)
    if basis.ndim == 1:
        basis = basis[:, None]
    if basis.shape[0] != X.shape[0]:
        raise ValueError("basis and X must have the same number of rows")
    U, s, _ = np.linalg.svd(basis, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return X.copy()
    Q = U[:, s > rcond * s[0]]
    R = X - Q @ (Q.T @ X)
    # second pass removes what rounding left in the span
    return R - Q @ (Q.T @ R)


def center_columns(X) -> np.ndarray:
    """``J_n X`` with ``J_n = I - 11'/n``: every column then sums to zero."""
    X = np.asarray(X, dtype=float)
    return X - X.mean(axis=0, keepdims=True)


def clamp_interval(x: float, a: float, b: float) -> float:
    if a > b:
        raise ValueError(f"empty interval [{a}, {b}]")
    return min(max(x, a), b)


@dataclass
class FitConfig:
    K1: int = 3
    K2: int = 3
    C: float = 2.0
    kappa: float = 1.0
    a_n: float = 0.1
    # step sizes; None means the n-scaled defaults (1/n for B and A, 0.5/n^2 for d)
    xi1: float | None = None
    xi2: float | None = None
    xi3: float | None = None
    xi4: float | None = None
    # multipliers of the n-scaled B and A defaults; ignored when xi1 / xi2 are set
    xi1_scale: float = 1.0
    xi2_scale: float = 1.0
    max_iter: int = 2000
    tol: float = 1e-6
    # the relative decrease is averaged over this many iterations
    tol_window: int = 5
    max_halvings: int = 20
    learn_intercepts: bool = False
    d0: float = 1.0
    d1: float = -1.0
    delta: float = 0.1
    c1: float = -10.0
    c2: float = 10.0
    seed: int = 0
    init: str = "spectral"
    link: str = "logit"

    def __post_init__(self):
        if not self.C > 0:
            raise ValueError("C must be positive")
        if not self.kappa > 0:
            raise ValueError("kappa must be positive")
        if not 0 <= self.a_n <= 1:
            raise ValueError("a_n must lie in [0, 1]")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.tol_window < 1:
            raise ValueError("tol_window must be at least 1")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if self.K1 < 1 or self.K2 < 1:
            raise ValueError("embedding dimensions must be at least 1")
        if self.init not in ("random", "spectral"):
            raise ValueError(f"unknown init {self.init!r}")
        for name in ("xi1", "xi2", "xi3", "xi4"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise ValueError(f"{name} must be positive")
        if not (self.xi1_scale > 0 and self.xi2_scale > 0):
            raise ValueError("step multipliers must be positive")
        get_link(self.link)
        self.intercepts()

    def intercepts(self) -> Intercepts:
        return Intercepts(self.d0, self.d1, self.delta, self.c1, self.c2)

    def steps(self, n: int):
        return (
            self.xi1 if self.xi1 is not None else self.xi1_scale / n,
            self.xi2 if self.xi2 is not None else self.xi2_scale / n,
            self.xi3 if self.xi3 is not None else 0.5 / n**2,
            self.xi4 if self.xi4 is not None else 0.5 / n**2,
        )

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, values: dict) -> "FitConfig":
        known = {f.name: f for f in fields(cls)}
        unknown = set(values) - set(known)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**values)


@dataclass
class FitResult:
    state: EmbeddingState
    objective_trace: list = field(default_factory=list)
    iterations: int = 0
    converged: bool = False


def _anomaly_step(B, A, cfg: FitConfig) -> np.ndarray:
    ones = np.ones((B.shape[0], 1))
    cap = cfg.kappa * math.sqrt(cfg.a_n) * np.linalg.norm(B)
    A = project_complement(np.hstack([B, ones]), A)
    A = project_frobenius(A, cap)
    return project_row_norm(A, cfg.C)


def _spectral_balance(Y: SignedNetwork, K: int, C: float) -> np.ndarray:
    Yc = center_columns(center_columns(Y.entries.astype(float)).T)
    vals, vecs = np.linalg.eigh(Yc)
    order = np.argsort(vals)[::-1][:K]
    B = vecs[:, order] * np.sqrt(np.maximum(vals[order], 0.0))
    B = center_columns(B)
    r = row_norm_max(B)
    if r == 0:
        return B
    return B * (0.5 * C / r)


def init_state(Y: SignedNetwork, config: FitConfig) -> EmbeddingState:
    """Feasible starting point; deterministic in ``config.seed``."""
    n = Y.n
    rng = np.random.default_rng(config.seed)
    B = rng.normal(0.0, 0.1, size=(n, config.K1))
    A = rng.normal(0.0, 0.1, size=(n, config.K2))
    if config.init == "spectral":
        B0 = _spectral_balance(Y, config.K1, config.C)
        if np.linalg.norm(B0) > 0:
            B = B0
    B = project_row_norm(center_columns(B), config.C)
    A = _anomaly_step(B, center_columns(A), config)
    return EmbeddingState(B, A, config.intercepts())


def fit(Y: SignedNetwork, config: FitConfig | None = None, link=None,
        state: EmbeddingState | None = None) -> FitResult:
    """Fit ``(B, A[, d])`` by alternating projected gradient steps.

    ``link`` overrides ``config.link``; ``state`` overrides the initial point.
    Raises :class:`DivergenceError` when the objective stops being finite.
    """
    cfg = config or FitConfig()
    link = get_link(link if link is not None else cfg.link)
    st = state if state is not None else init_state(Y, cfg)
    if st.n != Y.n:
        raise DimensionMismatch(f"network has {Y.n} nodes, state has {st.n} rows")
    B, A, d = st.B, st.A, st.d
    xi1, xi2, xi3, xi4 = cfg.steps(Y.n)

    def point(B, A, d):
        return evaluate(Y, EmbeddingState(B, A, d), link)

    def backtrack(make, step, f_ref):
        """First halving of ``step`` whose candidate does not exceed ``f_ref``.

        Candidates are evaluated with their gradient, so an accepted step
        also supplies the gradient for the next block.
        """
        for _ in range(cfg.max_halvings + 1):
            x = make(step)
            f, g = point(*x)
            if not math.isfinite(f):
                raise DivergenceError(f"objective became non-finite at step {step:g}")
            if f <= f_ref:
                return x, f, g
            step *= 0.5
        return None

    f_cur, grad = point(B, A, d)
    if not math.isfinite(f_cur):
        raise DivergenceError("initial objective is not finite")
    trace = [f_cur]
    converged = False
    it = 0
    for it in range(1, cfg.max_iter + 1):
        f_prev = f_cur
        g_prev = grad

        # A is re-projected for the new B, which can cost more than the B step
        # gained; the B step is then halved and the pair of steps retried.
        s1 = xi1
        moved = False
        for _ in range(cfg.max_halvings + 1):
            gB = g_prev.gB
            res = backtrack(
                lambda s: (project_row_norm(center_columns(B + s * gB), cfg.C), A, d),
                s1, f_prev,
            )
            if res is None:
                Bn, gA = B, g_prev.gA
            else:
                (Bn, _, _), _, g = res
                gA = g.gA
            res = backtrack(
                lambda s: (Bn, _anomaly_step(Bn, A + s * gA, cfg), d),
                xi2, f_prev,
            )
            if res is not None:
                (B, A, _), f_cur, grad = res
                moved = True
                break
            if Bn is B:
                break
            s1 *= 0.5
        if not moved:
            log.debug("iteration %d: no descent step for B or A", it)

        if cfg.learn_intercepts:
            g1 = grad.gd1
            res = backtrack(
                lambda s: (B, A, d.with_values(
                    d.d0, clamp_interval(d.d1 + s * g1, d.c1, d.d0 - d.delta))),
                xi3, f_cur,
            )
            if res is not None:
                (_, _, d), f_cur, grad = res
            g0 = grad.gd0
            res = backtrack(
                lambda s: (B, A, d.with_values(
                    clamp_interval(d.d0 + s * g0, d.d1 + d.delta, d.c2), d.d1)),
                xi4, f_cur,
            )
            if res is not None:
                (_, _, d), f_cur, grad = res

        trace.append(f_cur)
        if not moved and not cfg.learn_intercepts:
            converged = True
            break
        w = min(cfg.tol_window, len(trace) - 1)
        if it >= cfg.tol_window and (
            abs(trace[-1 - w] - f_cur) / w <= cfg.tol * max(abs(f_cur), 1e-300)
        ):
            converged = True
            break

    log.debug("fit stopped after %d iterations (converged=%s)", it, converged)
    return FitResult(EmbeddingState(B, A, d), trace, it, converged)
