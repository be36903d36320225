import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_pd_kernel
from rpdkit import OperatorKernel, assemble_gram, factorize, reconstruction_error, trace_diagonal
from rpdkit.errors import NonHermitianDiagonal, NotPositiveDefinite
from rpdkit.kolmogorov import KolmogorovFactor


def test_rank_one_scalar():
    k = OperatorKernel.from_scalar([[1, 1], [1, 1]])
    f = factorize(k)
    assert f.rank == 1
    v1, v2 = f.factors[0], f.factors[1]
    assert (v1.conj().T @ v1)[0, 0] == pytest.approx(1)
    assert (v1.conj().T @ v2)[0, 0] == pytest.approx(1)


def test_identity_kernel_full_rank():
    f = factorize(OperatorKernel.identity(range(3), 2))
    assert f.rank == 6
    F = f.stacked()
    np.testing.assert_allclose(F.conj().T @ F, np.eye(6), atol=1e-12)


def test_full_rank_scalar():
    k = OperatorKernel.from_scalar([[2, 1], [1, 2]])
    f = factorize(k)
    assert f.rank == 2
    v1, v2 = f.factors
    assert abs((v1.conj().T @ v1)[0, 0] - 2) <= 1e-10
    assert abs((v1.conj().T @ v2)[0, 0] - 1) <= 1e-10


def test_indefinite_rejected():
    with pytest.raises(NotPositiveDefinite):
        factorize(OperatorKernel.from_scalar([[0, 1], [1, 0]]))


def test_reconstruction_error_roundtrip(rng):
    k = random_pd_kernel(rng, 4, 3, rank=5)
    assert reconstruction_error(factorize(k), k) <= 1e-8 * np.abs(assemble_gram(k)).max()


def test_reconstruction_error_detects_shift(rng):
    k = random_pd_kernel(rng, 3, 2)
    f = factorize(k)
    assert reconstruction_error(f, k + OperatorKernel.identity(k.points, 2)) >= 1 - 1e-8


def test_zero_kernel_empty_rank():
    k = OperatorKernel((0, 1), np.zeros((2, 2, 2, 2)))
    f = factorize(k)
    assert f.rank == 0 and f.factors.shape == (2, 0, 2)
    assert reconstruction_error(f, k) == 0.0


def test_trace_diagonal_examples():
    assert trace_diagonal(OperatorKernel.identity(["s"], 2)) == {"s": 2.0}
    assert trace_diagonal(OperatorKernel(["s"], np.diag([0.0, 1.0])[None, None])) == {"s": 1.0}
    assert trace_diagonal(OperatorKernel.from_scalar([[2, 1], [1, 2]])) == {0: 2.0, 1: 2.0}


def test_trace_diagonal_non_hermitian():
    # passes the 1e-8 kernel symmetry check but fails the 1e-10 diagonal one
    blk = np.array([[1, 1e-9], [0, 1]], dtype=complex)
    with pytest.raises(NonHermitianDiagonal):
        trace_diagonal(OperatorKernel(["s"], blk[None, None]))


seeds = st.integers(0, 2**32 - 1)


@settings(max_examples=50, deadline=None)
@given(seeds, st.integers(1, 6), st.integers(1, 4), st.data())
def test_rank_recovered(seed, n, d, data):
    r0 = data.draw(st.integers(1, n * d))
    rng = np.random.default_rng(seed)
    v = rng.normal(size=(r0, n * d)) + 1j * rng.normal(size=(r0, n * d))
    k = OperatorKernel.from_gram(range(n), d, v.conj().T @ v)
    f = factorize(k, rank_tol=1e-10)
    assert f.rank == r0
    assert reconstruction_error(f, k) <= 1e-8 * np.abs(assemble_gram(k)).max()


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_gauge_freedom(seed):
    rng = np.random.default_rng(seed)
    k = random_pd_kernel(rng, 3, 2, rank=4)
    f = factorize(k)
    q, _ = np.linalg.qr(rng.normal(size=(f.rank, f.rank)) + 1j * rng.normal(size=(f.rank, f.rank)))
    e0, e1 = reconstruction_error(f, k), reconstruction_error(f.transform(q), k)
    assert abs(e1 - e0) <= 1e-10 * np.abs(assemble_gram(k)).max()


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_trace_identity(seed):
    rng = np.random.default_rng(seed)
    k = random_pd_kernel(rng, 3, 3, rank=int(rng.integers(1, 10)))
    f = factorize(k)
    tr = trace_diagonal(k)
    for s in k.points:
        v = f.V(s)
        assert abs(np.trace(v.conj().T @ v).real - tr[s]) <= 1e-10 * max(1.0, tr[s])


def test_factor_kernel_matches_einsum_oracle(rng):
    f = KolmogorovFactor(("a", "b"), rng.normal(size=(2, 3, 2)))
    k = f.kernel()
    for i in range(2):
        for j in range(2):
            np.testing.assert_allclose(k.blocks[i, j], f.factors[i].conj().T @ f.factors[j])
