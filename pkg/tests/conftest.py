import numpy as np
import pytest

from rpdkit import OperatorKernel, RandomKernel, RandomOperator


def random_pd_kernel(rng, n, d, rank=None):
    """Kernel V_s* V_t from a random rank-`rank` factor."""
    rank = n * d if rank is None else rank
    v = rng.normal(size=(rank, n * d)) + 1j * rng.normal(size=(rank, n * d))
    return OperatorKernel.from_gram(tuple(f"p{i}" for i in range(n)), d, v.conj().T @ v)


def random_contraction_operator(rng, d=None, n_atoms=None):
    d = d or int(rng.integers(1, 4))
    n_atoms = n_atoms or int(rng.integers(1, 5))
    mats = rng.normal(size=(n_atoms, d, d)) + 1j * rng.normal(size=(n_atoms, d, d))
    mats = np.array([m / np.linalg.norm(m, 2) * rng.uniform(0.2, 1.0) for m in mats])
    w = rng.dirichlet(np.ones(n_atoms))
    w = w / w.sum()
    return RandomOperator(w, mats)


def witness():
    """Mean-pd random kernel with an indefinite atom."""
    return RandomKernel.from_atoms([
        (0.5, OperatorKernel.from_scalar([[2, 4], [4, 2]])),
        (0.5, OperatorKernel.from_scalar([[2, -2], [-2, 2]])),
    ])


@pytest.fixture
def rng():
    return np.random.default_rng(20261019)


@pytest.fixture
def half_op():
    return RandomOperator.scalar([0.5, -0.5])


@pytest.fixture
def sign_op():
    return RandomOperator.scalar([1.0, -1.0])


ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[ACCEPTANCE] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    rows = config.stash.get(ACCEPTANCE, [])
    if not rows:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, ok, detail in sorted(rows):
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {number:>2}. {title}: {detail}")
