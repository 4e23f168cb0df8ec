import math

import numpy as np
import pytest
from scipy import stats

from snembed.model import LOGIT, PROBIT, Intercepts, prob
from snembed.synthgen import (
    anomaly_support,
    gen_example1,
    gen_example2,
    generate,
    sample_edges,
)


def test_no_anomalies_when_rate_zero():
    for gen in (gen_example1, gen_example2):
        Y, truth = gen(60, 0.0, seed=3)
        assert np.all(truth.A_star == 0)
        assert truth.S_star_support == frozenset()


def test_deterministic():
    Y1, t1 = gen_example1(80, 0.1, seed=11)
    Y2, t2 = gen_example1(80, 0.1, seed=11)
    assert Y1 == Y2
    np.testing.assert_array_equal(t1.B_star, t2.B_star)
    np.testing.assert_array_equal(t1.A_star, t2.A_star)
    np.testing.assert_array_equal(t1.labels, t2.labels)
    assert t1.S_star_support == t2.S_star_support
    Y3, _ = gen_example1(80, 0.1, seed=12)
    assert not Y1 == Y3


def test_anomaly_fraction():
    _, truth = gen_example1(2000, 0.2, seed=5)
    frac = np.mean(np.any(truth.A_star != 0, axis=1))
    assert abs(frac - 0.2) <= 0.03


def test_anomaly_mixture_components():
    _, truth = gen_example1(2000, 0.5, seed=6)
    rows = truth.A_star[np.any(truth.A_star != 0, axis=1)]
    means = rows.mean(axis=1)
    # Omega has entries at most 0.1, so the two components sit near +1 and -1
    assert np.all(np.abs(np.abs(means) - 1) < 0.8)
    assert abs(np.mean(means > 0) - 0.5) < 0.06


def test_example1_is_block_model():
    _, truth = gen_example1(200, 0.0, seed=1)
    assert set(np.unique(truth.labels)) <= {1, 2, 3, 4}
    for l in np.unique(truth.labels):
        rows = truth.B_star[truth.labels == l]
        assert np.ptp(rows, axis=0).max() == 0


def test_example1_proportions():
    _, truth = gen_example1(4000, 0.0, seed=2)
    freq = np.bincount(truth.labels, minlength=5)[1:] / 4000
    np.testing.assert_allclose(freq, [0.1, 0.2, 0.3, 0.4], atol=0.03)


def test_example2_proportions():
    _, truth = gen_example2(4000, 0.0, seed=2)
    freq = np.bincount(truth.labels, minlength=5)[1:] / 4000
    np.testing.assert_allclose(freq, 0.25, atol=0.03)


def test_example2_spread():
    # E||N(0, 0.01 I_3)|| = 0.1 * sqrt(2) * Gamma(2) / Gamma(3/2)
    expected = 0.1 * math.sqrt(2) / math.gamma(1.5)
    assert expected == pytest.approx(0.1595769, abs=1e-7)
    _, truth = gen_example2(4000, 0.0, seed=4)
    centers = np.array([truth.B_star[truth.labels == l].mean(0) for l in range(1, 5)])
    dist = np.linalg.norm(truth.B_star - centers[truth.labels - 1], axis=1)
    assert dist.mean() == pytest.approx(expected, rel=0.03)


def test_network_invariants_and_truth_consistency():
    Y, truth = gen_example2(120, 0.2, seed=8)
    E = Y.entries
    assert np.array_equal(E, E.T) and np.all(np.diag(E) == 0)
    assert set(np.unique(E)) <= {-1, 0, 1}
    B, A = truth.B_star, truth.A_star
    G = B @ B.T
    sq = np.diag(G)
    np.testing.assert_allclose(truth.M_star, -(sq[:, None] + sq[None, :] - 2 * G) + A @ A.T,
                               atol=1e-12)


def test_support_matches_brute_force():
    _, truth = gen_example1(150, 0.3, seed=9)
    A = truth.A_star
    n = A.shape[0]
    want = {(i, j) for i in range(n) for j in range(i + 1, n)
            if np.any(A[i] != 0) and np.any(A[j] != 0) and float(A[i] @ A[j]) != 0}
    assert truth.S_star_support == want
    assert anomaly_support(A) == want


@pytest.mark.parametrize("link", ["logit", "probit"])
def test_saturated_edges(link):
    d = Intercepts(1.0, -1.0)
    M = np.full((15, 15), 50.0)
    assert np.all(sample_edges(M, d, link, seed=0).entries[np.triu_indices(15, 1)] == 1)
    Y = sample_edges(-M, d, link, seed=0).entries
    assert np.all(Y[np.triu_indices(15, 1)] == -1)
    assert np.all(np.diag(Y) == 0)


@pytest.mark.parametrize("link,m", [(LOGIT, 0.0), (LOGIT, 0.8), (PROBIT, -0.5)])
def test_edge_frequencies(link, m):
    # 448 nodes give 100128 pairs, all with the same latent value
    n = 448
    d = Intercepts(1.0, -1.0)
    Y = sample_edges(np.full((n, n), m), d, link, seed=123).entries
    y = Y[np.triu_indices(n, 1)]
    N = y.size
    assert N >= 10**5
    probs = np.array([prob(t, m, d, link) for t in (-1, 0, 1)])
    counts = np.array([(y == t).sum() for t in (-1, 0, 1)])
    se = np.sqrt(probs * (1 - probs) / N)
    assert np.all(np.abs(counts / N - probs) <= 3 * se)
    assert stats.chisquare(counts, probs * N).pvalue > 1e-3


def test_invalid_arguments():
    with pytest.raises(ValueError):
        generate(3, 50, 0.1)
    with pytest.raises(ValueError):
        gen_example1(5, 0.1)
    with pytest.raises(ValueError):
        gen_example2(50, 1.5)
