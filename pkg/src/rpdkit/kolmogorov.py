"""Finite Kolmogorov factorization K(s, t) = V_s* V_t of a positive definite kernel.

The dilation space is coordinate space C^r, r the numerical rank of the Gram
matrix, and V_s is stored as an r x d matrix.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NonHermitianDiagonal, NotPositiveDefinite, NumericalFailure
from .kernels import DEFAULT_TOL, OperatorKernel, assemble_gram


@dataclass(frozen=True, eq=False)
class KolmogorovFactor:
    points: tuple
    factors: np.ndarray  # (N, r, d); factors[i] is V_{s_i}
    rank_tol: float = DEFAULT_TOL

    def __post_init__(self):
        f = np.array(self.factors, dtype=complex)
        if f.ndim != 3 or f.shape[0] != len(self.points):
            raise DimensionMismatch(f"factors must have shape (N, r, d), got {f.shape}")
        f.setflags(write=False)
        object.__setattr__(self, "factors", f)
        object.__setattr__(self, "points", tuple(self.points))

    @property
    def rank(self) -> int:
        return self.factors.shape[1]

    @property
    def dim(self) -> int:
        return self.factors.shape[2]

    def V(self, s) -> np.ndarray:
        return self.factors[self.points.index(s)]

    def stacked(self) -> np.ndarray:
        """The r x (N*d) matrix [V_{s_1} ... V_{s_N}]."""
        n, r, d = self.factors.shape
        return self.factors.transpose(1, 0, 2).reshape(r, n * d)

    def kernel(self) -> OperatorKernel:
        f = self.factors
        return OperatorKernel(self.points, np.einsum("iad,jae->ijde", f.conj(), f))

    def transform(self, q: np.ndarray) -> "KolmogorovFactor":
        """Apply q (r' x r) to every V_s; a unitary q leaves the kernel unchanged."""
        q = np.asarray(q, dtype=complex)
        return KolmogorovFactor(self.points, np.einsum("ab,ibd->iad", q, self.factors), self.rank_tol)


def factorize(kernel: OperatorKernel, rank_tol: float = DEFAULT_TOL) -> KolmogorovFactor:
    """Factor via the Hermitian eigendecomposition G = Q diag(lam) Q*.

    Eigenvalues at or below rank_tol * lam_max are dropped; an eigenvalue below
    -rank_tol * max(1, lam_max) means the kernel is not positive definite.
    """
    g = assemble_gram(kernel)
    n, d = kernel.n_points, kernel.dim
    try:
        lam, q = np.linalg.eigh(g)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(str(exc)) from exc
    lam_max = max(float(lam[-1]), 0.0) if lam.size else 0.0
    if lam.size and lam[0] < -rank_tol * max(1.0, lam_max):
        raise NotPositiveDefinite(f"Gram has eigenvalue {lam[0]:.6g} (lambda_max {lam_max:.6g})")
    keep = (lam > rank_tol * lam_max) & (lam > 0)
    # largest eigenvalues first so leading coordinates carry the most energy
    order = np.flatnonzero(keep)[::-1]
    f = np.sqrt(lam[order])[:, None] * q[:, order].conj().T
    r = f.shape[0]
    factors = f.reshape(r, n, d).transpose(1, 0, 2)
    return KolmogorovFactor(kernel.points, factors, rank_tol)


def reconstruction_error(factor: KolmogorovFactor, kernel: OperatorKernel) -> float:
    """max_{s,t} ||V_s* V_t - K(s, t)||_max."""
    if factor.points != kernel.points or factor.dim != kernel.dim:
        raise DimensionMismatch("factor and kernel have different points or dimension")
    diff = factor.kernel().blocks - kernel.blocks
    return float(np.abs(diff).max(initial=0.0))


def trace_diagonal(kernel: OperatorKernel) -> dict:
    """tr K(s, s) for every point."""
    out = {}
    for i, s in enumerate(kernel.points):
        blk = kernel.blocks[i, i]
        scale = max(1.0, float(np.abs(blk).max(initial=0.0)))
        if np.abs(blk - blk.conj().T).max(initial=0.0) > 1e-10 * scale:
            raise NonHermitianDiagonal(f"K({s!r}, {s!r}) is not Hermitian")
        tr = np.trace(blk)
        if abs(tr.imag) > 1e-10:
            raise NonHermitianDiagonal(f"tr K({s!r}, {s!r}) has imaginary part {tr.imag:.3g}")
        out[s] = float(tr.real)
    return out
