"""Operator-valued kernels on finite point sets.

A kernel K: X x X -> L(H) with |X| = N and dim H = d is stored as a dense
complex array of shape (N, N, d, d); ``blocks[i, j]`` is K(s_i, s_j).
Inner products are linear in the second argument: <a, b> = sum(conj(a) * b).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterator, Sequence

import numpy as np

from .errors import DimensionMismatch, KernelError, NumericalFailure, TooFewPoints

DEFAULT_TOL = 1e-10
HERMITIAN_TOL = 1e-8


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class OperatorKernel:
    points: tuple
    blocks: np.ndarray

    def __post_init__(self):
        blocks = _frozen(self.blocks)
        points = tuple(self.points)
        if blocks.ndim != 4 or blocks.shape[0] != blocks.shape[1] or blocks.shape[2] != blocks.shape[3]:
            raise DimensionMismatch(f"blocks must have shape (N, N, d, d), got {blocks.shape}")
        if blocks.shape[0] != len(points):
            raise DimensionMismatch(f"{len(points)} points but {blocks.shape[0]} block rows")
        if len(set(points)) != len(points):
            raise KernelError("duplicate points")
        if not np.all(np.isfinite(blocks)):
            raise KernelError("kernel entries must be finite")
        asym = np.abs(blocks - blocks.transpose(1, 0, 3, 2).conj()).max(initial=0.0)
        if asym > HERMITIAN_TOL * max(1.0, np.abs(blocks).max(initial=0.0)):
            raise KernelError(f"kernel is not Hermitian (asymmetry {asym:.3g})")
        object.__setattr__(self, "blocks", blocks)
        object.__setattr__(self, "points", points)

    @property
    def dim(self) -> int:
        return self.blocks.shape[2]

    @property
    def n_points(self) -> int:
        return len(self.points)

    def block(self, s, t) -> np.ndarray:
        return self.blocks[self.points.index(s), self.points.index(t)]

    def gram(self) -> np.ndarray:
        return assemble_gram(self)

    @classmethod
    def from_gram(cls, points: Sequence, dim: int, gram) -> "OperatorKernel":
        gram = np.asarray(gram, dtype=complex)
        n = len(points)
        if gram.shape != (n * dim, n * dim):
            raise DimensionMismatch(f"Gram of shape {gram.shape} does not match {n} points of dim {dim}")
        return cls(points, gram.reshape(n, dim, n, dim).transpose(0, 2, 1, 3))

    @classmethod
    def from_scalar(cls, matrix, points: Sequence | None = None) -> "OperatorKernel":
        """Scalar (d = 1) kernel from an N x N matrix; points default to 0..N-1."""
        matrix = np.atleast_2d(np.asarray(matrix, dtype=complex))
        if points is None:
            points = range(matrix.shape[0])
        return cls.from_gram(tuple(points), 1, matrix)

    @classmethod
    def identity(cls, points: Sequence, dim: int) -> "OperatorKernel":
        return cls.from_gram(tuple(points), dim, np.eye(len(points) * dim))

    def __add__(self, other: "OperatorKernel") -> "OperatorKernel":
        _check_compatible(self, other)
        return OperatorKernel(self.points, self.blocks + other.blocks)

    def __sub__(self, other: "OperatorKernel") -> "OperatorKernel":
        _check_compatible(self, other)
        return OperatorKernel(self.points, self.blocks - other.blocks)

    def __mul__(self, alpha) -> "OperatorKernel":
        alpha = complex(alpha)
        if alpha.imag != 0:
            raise KernelError("kernels may only be scaled by real numbers")
        return OperatorKernel(self.points, alpha.real * self.blocks)

    __rmul__ = __mul__

    def restrict(self, points: Sequence) -> "OperatorKernel":
        idx = [self.points.index(p) for p in points]
        return OperatorKernel(tuple(points), self.blocks[np.ix_(idx, idx)])


def _check_compatible(a: OperatorKernel, b: OperatorKernel):
    if a.points != b.points or a.dim != b.dim:
        raise DimensionMismatch("kernels have different points or dimension")


@dataclass(frozen=True, eq=False)
class RandomKernel:
    """Finitely supported law over kernels sharing points and dimension."""

    points: tuple
    weights: np.ndarray
    atom_blocks: np.ndarray  # (n_atoms, N, N, d, d)

    def __post_init__(self):
        weights = np.array(self.weights, dtype=float)
        weights.setflags(write=False)
        blocks = _frozen(self.atom_blocks)
        if weights.ndim != 1 or weights.size == 0:
            raise KernelError("need at least one atom")
        if np.any(weights <= 0) or abs(weights.sum() - 1.0) > 1e-12:
            raise KernelError("atom weights must be positive and sum to 1")
        if blocks.ndim != 5 or blocks.shape[0] != weights.size or blocks.shape[1] != len(self.points):
            raise DimensionMismatch(f"atom blocks of shape {blocks.shape} do not match weights/points")
        object.__setattr__(self, "points", tuple(self.points))
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "atom_blocks", blocks)

    @classmethod
    def from_atoms(cls, atoms: Sequence[tuple[float, OperatorKernel]]) -> "RandomKernel":
        if not atoms:
            raise KernelError("need at least one atom")
        first = atoms[0][1]
        for _, k in atoms[1:]:
            _check_compatible(first, k)
        return cls(first.points, [w for w, _ in atoms], np.stack([k.blocks for _, k in atoms]))

    @classmethod
    def constant(cls, kernel: OperatorKernel) -> "RandomKernel":
        return cls.from_atoms([(1.0, kernel)])

    @property
    def dim(self) -> int:
        return self.atom_blocks.shape[3]

    @property
    def n_atoms(self) -> int:
        return self.weights.size

    def kernel(self, i: int) -> OperatorKernel:
        return OperatorKernel(self.points, self.atom_blocks[i])

    def atoms(self) -> Iterator[tuple[float, OperatorKernel]]:
        for i, w in enumerate(self.weights):
            yield float(w), self.kernel(i)


@dataclass(frozen=True, eq=False)
class GenerativeKernel:
    """Random kernel given by a sampler; the sampler must be deterministic given its generator."""

    points: tuple
    dim: int
    sampler: Callable[[np.random.Generator], OperatorKernel]

    def draw(self, rng: np.random.Generator) -> OperatorKernel:
        k = self.sampler(rng)
        if k.points != tuple(self.points) or k.dim != self.dim:
            raise DimensionMismatch("sampler produced a kernel with the wrong points or dimension")
        return k


@dataclass(frozen=True)
class PdReport:
    is_pd: bool
    min_eigenvalue: float
    max_eigenvalue: float
    tol: float


@dataclass(frozen=True)
class PathwiseReport:
    atoms: list = field(default_factory=list)  # [(atom index, PdReport)]

    @property
    def all_pathwise_pd(self) -> bool:
        return all(r.is_pd for _, r in self.atoms)


def assemble_gram(kernel: OperatorKernel) -> np.ndarray:
    """(N*d) x (N*d) block Gram matrix, symmetrized as (G + G*)/2."""
    b = kernel.blocks
    if b.ndim != 4 or b.shape[2] != b.shape[3]:
        raise DimensionMismatch("blocks are not square")
    n, d = b.shape[0], b.shape[2]
    g = b.transpose(0, 2, 1, 3).reshape(n * d, n * d)
    return (g + g.conj().T) / 2


def hermitian_eigvalsh(g: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.eigvalsh(g)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(str(exc)) from exc


def psd_verdict(g: np.ndarray, tol: float = DEFAULT_TOL) -> PdReport:
    """Relative positivity test lambda_min >= -tol * max(1, lambda_max) on a Hermitian matrix."""
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    if g.size == 0:
        return PdReport(True, 0.0, 0.0, tol)
    ev = hermitian_eigvalsh((g + g.conj().T) / 2)
    lo, hi = float(ev[0]), float(ev[-1])
    return PdReport(lo >= -tol * max(1.0, hi), lo, hi, tol)


def check_pd(kernel: OperatorKernel, tol: float = DEFAULT_TOL) -> PdReport:
    return psd_verdict(assemble_gram(kernel), tol)


def mean_kernel(rk, samples: int | None = None, rng: np.random.Generator | None = None) -> OperatorKernel:
    """Mean kernel E[k(., s, t)].

    Exact weighted average for a RandomKernel; for a GenerativeKernel, a Monte
    Carlo average over ``samples`` draws from ``rng``.
    """
    if isinstance(rk, RandomKernel):
        return OperatorKernel(rk.points, np.tensordot(rk.weights, rk.atom_blocks, axes=1))
    if samples is None or samples < 1 or rng is None:
        raise KernelError("a generative kernel needs a sample count >= 1 and a generator")
    total = sum(rk.draw(rng).blocks for _ in range(samples))
    return OperatorKernel(tuple(rk.points), total / samples)


def check_rpd(rk: RandomKernel, tol: float = DEFAULT_TOL) -> PdReport:
    """Positivity in expectation; the expectation of the Gram form is the Gram of the mean."""
    return check_pd(mean_kernel(rk), tol)


def is_pathwise_pd(rk: RandomKernel, tol: float = DEFAULT_TOL) -> PathwiseReport:
    return PathwiseReport([(i, check_pd(k, tol)) for i, (_, k) in enumerate(rk.atoms())])


def scalarize(kernel: OperatorKernel, pairs: Sequence[tuple[object, Sequence[complex]]]) -> np.ndarray:
    """Scalar kernel matrix [<a_i, K(s_i, s_j) a_j>] over (point, vector) pairs."""
    d = kernel.dim
    idx, vecs = [], []
    for s, a in pairs:
        a = np.asarray(a, dtype=complex).reshape(-1)
        if a.size != d:
            raise DimensionMismatch(f"vector of length {a.size}, expected {d}")
        try:
            idx.append(kernel.points.index(s))
        except ValueError:
            raise KernelError(f"unknown point {s!r}") from None
        vecs.append(a)
    if not pairs:
        return np.zeros((0, 0), dtype=complex)
    a = np.stack(vecs)
    blk = kernel.blocks[np.ix_(idx, idx)]
    return np.einsum("ik,ijkl,jl->ij", a.conj(), blk, a)


def _consecutive(points: tuple) -> bool:
    return all(str(p) == str(i) for i, p in enumerate(points))


def shift_kernel(kernel: OperatorKernel) -> OperatorKernel:
    """K_shift(m, n) = K(m+1, n+1) on points 0..M-1."""
    if not _consecutive(kernel.points):
        raise KernelError("shift_kernel needs points 0..M")
    if kernel.n_points < 2:
        raise TooFewPoints("shift_kernel needs M >= 1")
    return OperatorKernel(kernel.points[:-1], kernel.blocks[1:, 1:])
