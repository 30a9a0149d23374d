import numpy as np
import pytest

from icalign import Interferer, NetworkConfig, draw_realization
from icalign.network import stack_realizations

ACCEPTANCE_LINES = []


def make_instance(K=3, M=2, N=None, S=1, rho_db=10.0, seed=0, interferer=False,
                  alpha=1.0, sigma2=1.0, batch=None):
    """Random channel draw (or a stacked batch of ``batch`` draws)."""
    N = M if N is None else N
    itf = None
    if interferer:
        itf = Interferer(rho_e=10 ** (rho_db / 10), alpha_e=1.0)
    cfg = NetworkConfig.symmetric(K=K, M=M, N=N, S=S, rho_db=rho_db, alpha=alpha,
                                  noise_sigma2=sigma2, interferer=itf)
    if batch is None:
        return draw_realization(cfg, seed)
    ss = np.random.SeedSequence(seed)
    return stack_realizations([draw_realization(cfg, np.random.default_rng(s))
                               for s in ss.spawn(batch)])


def random_hermitian(rng, n):
    A = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return (A + A.conj().T) / 2


def random_hpd(rng, n):
    A = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return A @ A.conj().T + n * np.eye(n)


def projector(X):
    Q, _ = np.linalg.qr(X)
    return Q @ Q.conj().T


def proj_dist(X, Y):
    return np.linalg.norm(projector(X) - projector(Y))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
