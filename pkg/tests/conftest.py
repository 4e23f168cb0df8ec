import numpy as np
import pytest

from snembed.model import EmbeddingState, Intercepts, SignedNetwork


def random_network(rng, n, density=0.7):
    Y = np.zeros((n, n), dtype=int)
    iu = np.triu_indices(n, 1)
    signs = rng.choice([-1, 1], size=iu[0].size)
    keep = rng.random(iu[0].size) < density
    Y[iu] = signs * keep
    return SignedNetwork(Y + Y.T)


def random_state(rng, n, K1=2, K2=2, scale=0.5, d=(0.8, -0.7)):
    return EmbeddingState(
        rng.normal(scale=scale, size=(n, K1)),
        rng.normal(scale=scale, size=(n, K2)),
        Intercepts(*d),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
