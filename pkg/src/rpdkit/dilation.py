"""Moment kernels of random operators and their unitary power dilations.

For a finitely supported random operator A, the moment kernel
K(m, n) = E[A*^m A^n] on {0..M} is factored as V_m* V_n; the shift
B V_n = V_{n+1} is a contraction exactly when K - K_shift is positive
definite, and an Egervary unitary U dilating the powers of B gives

    K(m, n) = W* U*^m P U^n W,   W = J V_0,  P = J J*.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    EmptyPolynomial,
    IllConditioned,
    KernelError,
    NumericalFailure,
    ShiftDominationViolated,
)
from .kernels import DEFAULT_TOL, OperatorKernel, check_pd, psd_verdict, shift_kernel
from .kolmogorov import KolmogorovFactor, factorize

STRUCTURE_TOL = 1e-10
RESIDUAL_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class RandomOperator:
    """Finitely supported law of a d x d random matrix A(omega)."""

    weights: np.ndarray
    matrices: np.ndarray  # (n_atoms, d, d)

    def __post_init__(self):
        w = np.array(self.weights, dtype=float).reshape(-1)
        a = np.array(self.matrices, dtype=complex)
        if a.ndim == 2:
            a = a[None]
        if a.ndim != 3 or a.shape[1] != a.shape[2]:
            raise DimensionMismatch(f"matrices must have shape (n, d, d), got {a.shape}")
        if w.size == 0 or w.size != a.shape[0]:
            raise KernelError("need one positive weight per atom")
        if np.any(w <= 0) or abs(w.sum() - 1.0) > 1e-12:
            raise KernelError("atom weights must be positive and sum to 1")
        if not np.all(np.isfinite(a)):
            raise KernelError("operator entries must be finite")
        w.setflags(write=False)
        a.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "matrices", a)

    @classmethod
    def deterministic(cls, matrix) -> "RandomOperator":
        return cls([1.0], np.atleast_2d(np.asarray(matrix, dtype=complex))[None])

    @classmethod
    def scalar(cls, values: Sequence[complex], weights: Sequence[float] | None = None) -> "RandomOperator":
        values = list(values)
        if weights is None:
            weights = [1.0 / len(values)] * len(values)
        return cls(weights, np.array(values, dtype=complex).reshape(-1, 1, 1))

    @property
    def dim(self) -> int:
        return self.matrices.shape[1]

    def atoms(self):
        return zip(self.weights.tolist(), self.matrices)


class MomentKernel(OperatorKernel):
    """OperatorKernel on the points 0..M holding E[A*^m A^n]."""

    @property
    def max_power(self) -> int:
        return self.n_points - 1


def _powers(a: np.ndarray, M: int) -> np.ndarray:
    """(n_atoms, M+1, d, d) array of A^0..A^M per atom."""
    n, d, _ = a.shape
    out = np.empty((n, M + 1, d, d), dtype=complex)
    out[:, 0] = np.eye(d)
    for k in range(1, M + 1):
        out[:, k] = out[:, k - 1] @ a
    return out


def moment_kernel(A: RandomOperator, M: int) -> MomentKernel:
    """Exact mixed moments K(m, n) = sum_omega w (A*)^m A^n for 0 <= m, n <= M."""
    if M < 1:
        raise KernelError("max power must be >= 1")
    p = _powers(A.matrices, M)
    blocks = np.einsum("a,amji,anjk->mnik", A.weights, p.conj(), p)
    return MomentKernel(tuple(range(M + 1)), blocks)


def as_moment_kernel(kernel: OperatorKernel) -> MomentKernel:
    if isinstance(kernel, MomentKernel):
        return kernel
    if not all(str(p) == str(i) for i, p in enumerate(kernel.points)):
        raise KernelError("moment kernels live on the points 0..M")
    return MomentKernel(tuple(range(kernel.n_points)), kernel.blocks)


@dataclass(frozen=True)
class DominationReport:
    holds: bool
    min_eigenvalue: float
    tol: float


def domination_gap(K: OperatorKernel) -> OperatorKernel:
    """D(m, n) = K(m, n) - K(m+1, n+1) on {0..M-1}."""
    sk = shift_kernel(K)
    return K.restrict(sk.points) - sk


def shift_domination(K: OperatorKernel, tol: float = DEFAULT_TOL) -> DominationReport:
    r = check_pd(domination_gap(K), tol)
    return DominationReport(r.is_pd, r.min_eigenvalue, tol)


class Shift(NamedTuple):
    factor: KolmogorovFactor
    B: np.ndarray


def build_shift(K: OperatorKernel, rank_tol: float = DEFAULT_TOL) -> Shift:
    """Factor K and solve B [V_0 .. V_{M-1}] = [V_1 .. V_M]; B is zero off range(X)."""
    K = as_moment_kernel(K)
    dom = shift_domination(K, rank_tol)
    if not dom.holds:
        raise ShiftDominationViolated(f"K - K_shift has eigenvalue {dom.min_eigenvalue:.6g}")
    factor = factorize(K, rank_tol)
    d, M = K.dim, K.max_power
    F = factor.stacked()
    X, Y = F[:, : M * d], F[:, d:]
    B = Y @ np.linalg.pinv(X, rcond=rank_tol)
    scale = max(1.0, float(np.abs(F).max(initial=0.0)))
    resid = float(np.abs(B @ X - Y).max(initial=0.0))
    if resid > RESIDUAL_TOL * scale:
        raise IllConditioned(f"shift consistency residual {resid:.3g}")
    norm = float(np.linalg.norm(B, 2)) if B.size else 0.0
    if norm > 1 + RESIDUAL_TOL:
        raise IllConditioned(f"shift has norm {norm:.12g} > 1")
    return Shift(factor, B)


def range_basis(X: np.ndarray, rel_tol: float = DEFAULT_TOL) -> np.ndarray:
    """Orthonormal basis (columns) for the column space of X."""
    if X.size == 0:
        return np.zeros((X.shape[0], 0), dtype=complex)
    u, s, _ = np.linalg.svd(X, full_matrices=False)
    keep = s > rel_tol * s[0] if s.size and s[0] > 0 else np.zeros(s.shape, bool)
    return u[:, keep]


def isometry_defect(shift: Shift, rank_tol: float = DEFAULT_TOL) -> float:
    """max |Q* B* B Q - I| over an orthonormal basis Q of range([V_0 .. V_{M-1}])."""
    M = shift.factor.factors.shape[0] - 1
    X = shift.factor.stacked()[:, : M * shift.factor.dim]
    Q = range_basis(X, rank_tol)
    BQ = shift.B @ Q
    return float(np.abs(BQ.conj().T @ BQ - np.eye(Q.shape[1])).max(initial=0.0))


def is_stationary(K: OperatorKernel, tol: float = 1e-10) -> bool:
    return float(np.abs(domination_gap(K).blocks).max(initial=0.0)) <= tol


def defect_operators(B: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(I - B*B)^{1/2} and (I - BB*)^{1/2} from one SVD of B.

    Sharing the singular vectors keeps B D_B = D_{B*} B exact to rounding even
    when B has singular values at 1; singular values in (1, 1 + 1e-8] are clipped.
    """
    try:
        L, s, Rh = np.linalg.svd(B)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(str(exc)) from exc
    if s.size and s[0] > 1 + RESIDUAL_TOL:
        raise NumericalFailure(f"not a contraction: norm {s[0]:.12g}")
    s = np.minimum(s, 1.0)
    c = np.sqrt((1 - s) * (1 + s))
    R = Rh.conj().T
    return (R * c) @ Rh, (L * c) @ L.conj().T


def egervary_unitary(B: np.ndarray, depth: int) -> np.ndarray:
    """Unitary U on (C^r)^(depth+1) with J* U^n J = B^n for 0 <= n <= depth.

    Block rows: [B, 0, .., 0, D_{B*}], [D_B, 0, .., 0, -B*], then the identity
    shift down the chain.
    """
    if depth < 1:
        raise KernelError("depth must be >= 1")
    r = B.shape[0]
    DB, DBs = defect_operators(B)
    n = depth + 1
    U = np.zeros((n * r, n * r), dtype=complex)
    blk = lambda i, j: (slice(i * r, (i + 1) * r), slice(j * r, (j + 1) * r))  # noqa: E731
    U[blk(0, 0)] = B
    U[blk(0, n - 1)] = DBs
    U[blk(1, 0)] = DB
    U[blk(1, n - 1)] -= B.conj().T
    for k in range(2, n):
        U[blk(k, k - 1)] = np.eye(r)
    return U


@dataclass(frozen=True, eq=False)
class DilationTriple:
    U: np.ndarray
    P: np.ndarray
    W: np.ndarray
    B: np.ndarray
    trunc_depth: int

    @property
    def space_dim(self) -> int:
        return self.U.shape[0]

    @property
    def rank(self) -> int:
        return self.B.shape[0]

    @property
    def J(self) -> np.ndarray:
        return np.eye(self.space_dim, self.rank, dtype=complex)

    def compression(self, m: int, n: int) -> np.ndarray:
        """W* U*^m P U^n W."""
        Um = np.linalg.matrix_power(self.U, m) @ self.W
        Un = np.linalg.matrix_power(self.U, n) @ self.W
        return Um.conj().T @ self.P @ Un

    def with_unitary(self, U: np.ndarray) -> "DilationTriple":
        return DilationTriple(U, self.P, self.W, self.B, self.trunc_depth)


def dilate_contraction(B: np.ndarray, V0: np.ndarray, depth: int) -> DilationTriple:
    """Triple (U, P, W) from a contraction B on C^r and V0: C^d -> C^r.

    The Egervary chain has depth + 1 steps so that U* P U <= P holds on
    span{U^k W H : k <= depth} and not only powers up to depth are dilated.
    """
    B = np.asarray(B, dtype=complex)
    V0 = np.asarray(V0, dtype=complex)
    r = B.shape[0]
    if B.shape != (r, r) or V0.shape[0] != r:
        raise DimensionMismatch("B must be r x r and V0 must have r rows")
    if r == 0:
        raise KernelError("zero-rank factor cannot be dilated")
    U = egervary_unitary(B, depth + 1)
    J = np.eye(U.shape[0], r, dtype=complex)
    return DilationTriple(U, J @ J.conj().T, J @ V0, B, depth)


def build_dilation(K: OperatorKernel, rank_tol: float = DEFAULT_TOL) -> DilationTriple:
    """Moment dilation of a shift-dominated moment kernel, exact for powers up to M."""
    K = as_moment_kernel(K)
    factor, B = build_shift(K, rank_tol)
    return dilate_contraction(B, factor.factors[0], K.max_power)


def dilation_kernel(T: DilationTriple, M: int | None = None) -> MomentKernel:
    """K'(m, n) = W* U*^m P U^n W for 0 <= m, n <= M (default: the truncation depth)."""
    M = T.trunc_depth if M is None else M
    orbit = [T.W]
    for _ in range(M):
        orbit.append(T.U @ orbit[-1])
    blocks = np.array([[a.conj().T @ T.P @ b for b in orbit] for a in orbit])
    return MomentKernel(tuple(range(M + 1)), blocks)


@dataclass(frozen=True)
class VerificationReport:
    max_residual: float
    unitarity: float
    projection: float
    isometry: float
    c3_min_eigenvalue: float
    c3_holds: bool

    @property
    def ok(self) -> bool:
        structural = max(self.unitarity, self.projection, self.isometry) <= STRUCTURE_TOL
        return structural and self.max_residual <= RESIDUAL_TOL and self.c3_holds


def verify_dilation(K: OperatorKernel, T: DilationTriple) -> VerificationReport:
    K = as_moment_kernel(K)
    if T.W.shape != (T.space_dim, K.dim) or T.P.shape != T.U.shape:
        raise DimensionMismatch("triple does not match the kernel dimension")
    N = min(T.trunc_depth, K.max_power)
    K2 = dilation_kernel(T, N)
    resid = float(np.abs(K2.blocks - K.blocks[: N + 1, : N + 1]).max())
    U, P, W = T.U, T.P, T.W
    eye = np.eye(T.space_dim)
    unitarity = float(np.abs(U.conj().T @ U - eye).max())
    projection = float(max(np.abs(P @ P - P).max(), np.abs(P - P.conj().T).max()))
    isometry = float(np.abs(W.conj().T @ W - np.eye(K.dim)).max())
    orbit = [W]
    for _ in range(T.trunc_depth):
        orbit.append(U @ orbit[-1])
    Q = range_basis(np.hstack(orbit), DEFAULT_TOL)
    gap = Q.conj().T @ (P - U.conj().T @ P @ U) @ Q
    c3 = psd_verdict(gap, 0.0)
    return VerificationReport(resid, unitarity, projection, isometry, c3.min_eigenvalue, c3.min_eigenvalue >= -RESIDUAL_TOL)


def polyval_matrix(coeffs: Sequence[complex], A: np.ndarray) -> np.ndarray:
    """f(A) = sum_n c_n A^n by Horner's rule; coefficients in ascending order."""
    out = np.zeros_like(A)
    eye = np.eye(A.shape[-1])
    for c in reversed(list(coeffs)):
        out = out @ A + c * eye
    return out


def circle_sup(coeffs: Sequence[complex], grid_size: int) -> float:
    z = np.exp(2j * np.pi * np.arange(grid_size) / grid_size)
    return float(np.abs(np.polynomial.polynomial.polyval(z, np.asarray(coeffs, dtype=complex))).max())


@dataclass(frozen=True, eq=False)
class VnReport:
    lhs_matrix: np.ndarray
    lhs_max_eigenvalue: float
    sup_f: float
    sup_f_margin: float
    slack: float
    holds: bool


def von_neumann_check(A: RandomOperator, coeffs: Sequence[complex], grid_size: int = 4096,
                      tol: float = DEFAULT_TOL) -> VnReport:
    """Mean-square von Neumann bound E[f(A)* f(A)] <= (sup_{|z|=1} |f|)^2 I.

    The circle sup is taken on an equispaced grid and inflated by 1 + pi k / grid_size
    (k = degree) as a one-sided proxy for the true maximum.
    """
    coeffs = [complex(c) for c in coeffs]
    if not coeffs:
        raise EmptyPolynomial("polynomial has no coefficients")
    if grid_size < 64:
        raise ValueError("grid_size must be >= 64")
    k = len(coeffs) - 1
    dom = shift_domination(moment_kernel(A, max(k, 1)), tol)
    if not dom.holds:
        raise ShiftDominationViolated(f"K - K_shift has eigenvalue {dom.min_eigenvalue:.6g}")
    fa = polyval_matrix(coeffs, A.matrices)
    lhs = np.einsum("a,aji,ajk->ik", A.weights, fa.conj(), fa)
    lhs = (lhs + lhs.conj().T) / 2
    lam = float(np.linalg.eigvalsh(lhs)[-1])
    sup_f = circle_sup(coeffs, grid_size)
    sup_m = sup_f * (1 + np.pi * k / grid_size)
    slack = sup_m**2 - lam
    return VnReport(lhs, lam, sup_f, float(sup_m), float(slack), bool(lam <= sup_m**2 + RESIDUAL_TOL))
