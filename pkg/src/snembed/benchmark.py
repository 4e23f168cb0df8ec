"""Replication harness for the synthetic experiments.

A *cell* is one ``(n, a_n)`` combination; each replication draws a fresh
network (fresh community centers), fits it with ``K1 = K2 = m - 1`` and
``a_n`` equal to the generating rate, clusters ``B_hat`` and thresholds
``S_hat``.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

import numpy as np

from .detection import (
    anomaly_scores,
    community_error,
    default_eta,
    false_discovery_proportion,
    kmeans_embed,
    threshold_anomalies,
)
from .model import latent_matrix
from .optimizer import DivergenceError, FitConfig, fit
from .synthgen import N_COMMUNITIES, generate

log = logging.getLogger(__name__)

ETA_RULES = ("sparsity", "median")
METRICS = ("community_error", "worst_case_error", "fdp", "frobenius_error")

# Larger B and A steps than the library default: at n = 500 they reach the same
# community error and FDP in about a third of the time, which keeps a 20-replication
# grid up to n = 1000 within an hour on one core.
DESK_CONFIG = FitConfig(xi1_scale=4.0, xi2_scale=16.0)


def derive_seed(*key) -> int:
    """Stable 63-bit seed from a tuple of nonnegative ints."""
    return int(np.random.SeedSequence([int(k) for k in key]).generate_state(2, np.uint64)[0]
               >> np.uint64(1))


def sparsity_eta(S_hat, a_n: float) -> float:
    """Threshold that flags the ``a_n^2`` share of pairs with largest ``|s_ij|``.

    ``a_n^2 * n^2`` is the order of the number of anomalous entries when a
    share ``a_n`` of nodes carry anomaly embeddings.
    """
    S = np.asarray(S_hat, dtype=float)
    n = S.shape[0]
    vals = np.sort(np.abs(S[np.triu_indices(n, k=1)]))
    k = int(round(a_n**2 * vals.size))
    if k <= 0:
        return float(vals[-1])
    return float(vals[vals.size - k - 1]) if k < vals.size else 0.0


def pick_eta(S_hat, rule: str, a_n: float) -> float:
    if rule == "median":
        return default_eta(S_hat)
    if rule == "sparsity":
        return sparsity_eta(S_hat, a_n)
    raise ValueError(f"unknown eta rule {rule!r}")


def frobenius_error(M_hat, M_star) -> float:
    """``||M_hat - M*||_F / n`` over off-diagonal entries."""
    D = np.asarray(M_hat, float) - np.asarray(M_star, float)
    np.fill_diagonal(D, 0.0)
    return float(np.linalg.norm(D)) / D.shape[0]


def run_replication(example, n, a_n, data_seed, fit_seed, template: FitConfig,
                    eta_rule="sparsity", restarts=50):
    """One replication; returns a flat dict of metrics (``status`` != 'ok' on failure)."""
    Y, truth = generate(example, n, a_n, seed=data_seed, d_star=template.intercepts(),
                        link=template.link)
    m = N_COMMUNITIES
    cfg = replace(template, K1=m - 1, K2=m - 1, a_n=a_n, seed=fit_seed)
    row = {"example": example, "n": n, "a_n": a_n, "data_seed": data_seed}
    try:
        res = fit(Y, cfg)
    except DivergenceError as exc:
        row.update(status="diverged", error=str(exc))
        return row
    st = res.state
    assign = kmeans_embed(st.B, m, restarts=restarts, seed=fit_seed)
    overall, worst = community_error(truth.labels, assign.labels, m)
    S_hat = anomaly_scores(st.A)
    if a_n > 0:
        eta = pick_eta(S_hat, eta_rule, a_n)
        report = threshold_anomalies(S_hat, eta)
        fdp = false_discovery_proportion(report.flagged, truth.S_star_support)
        n_flagged = len(report.flagged)
    else:
        eta, fdp, n_flagged = math.nan, math.nan, 0
    row.update(
        status="ok",
        community_error=overall,
        worst_case_error=worst,
        fdp=fdp,
        eta=eta,
        n_flagged=n_flagged,
        n_true_anomalies=len(truth.S_star_support),
        frobenius_error=frobenius_error(latent_matrix(st).M, truth.M_star),
        iterations=res.iterations,
        converged=res.converged,
        neg_log_likelihood=res.objective_trace[-1],
    )
    return row


def _task(args):
    try:
        return run_replication(*args)
    except Exception as exc:  # a broken replication must not end the run
        log.exception("replication failed")
        return {"example": args[0], "n": args[1], "a_n": args[2], "data_seed": args[3],
                "status": "error", "error": repr(exc)}


def plan(example, n_list, a_list, reps, seed):
    """Ordered task list; seeds depend only on (seed, cell index, rep)."""
    tasks = []
    cells = [(n, a) for n in n_list for a in a_list]
    for c, (n, a) in enumerate(cells):
        for r in range(reps):
            tasks.append((c, r, example, n, a,
                          derive_seed(seed, c, r, 0), derive_seed(seed, c, r, 1)))
    return cells, tasks


def run_benchmark(example, n_list, a_list, reps, seed=0, template=None, jobs=1,
                  eta_rule="sparsity", restarts=50, progress=None):
    """Run every cell; returns ``(rows, summary)`` in deterministic order."""
    if reps < 1:
        raise ValueError("reps must be at least 1")
    if eta_rule not in ETA_RULES:
        raise ValueError(f"unknown eta rule {eta_rule!r}")
    template = template or DESK_CONFIG
    cells, tasks = plan(example, n_list, a_list, reps, seed)
    args = [(ex, n, a, ds, fs, template, eta_rule, restarts) for _, _, ex, n, a, ds, fs in tasks]
    rows = []
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = pool.map(_task, args)
            for (c, r, *_), row in zip(tasks, results):
                rows.append({"cell": c, "rep": r, **row})
                if progress:
                    progress(rows[-1])
    else:
        for (c, r, *_), a in zip(tasks, args):
            rows.append({"cell": c, "rep": r, **_task(a)})
            if progress:
                progress(rows[-1])
    return rows, summarize(rows, cells)


def _mean_se(values):
    v = np.asarray([x for x in values if x is not None and not math.isnan(x)], float)
    if v.size == 0:
        return None, None
    if v.size == 1:
        return float(v[0]), None
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(v.size))


def summarize(rows, cells):
    summary = []
    for c, (n, a) in enumerate(cells):
        ok = [r for r in rows if r["cell"] == c and r.get("status") == "ok"]
        entry = {"cell": c, "n": n, "a_n": a, "reps_ok": len(ok),
                 "reps_failed": sum(1 for r in rows if r["cell"] == c) - len(ok)}
        for key in METRICS:
            mean, se = _mean_se(r.get(key) for r in ok)
            entry[f"{key}_mean"] = mean
            entry[f"{key}_se"] = se
        summary.append(entry)
    return summary
