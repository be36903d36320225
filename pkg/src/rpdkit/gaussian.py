"""H-valued Gaussian processes with a prescribed covariance kernel.

Given K(s, t) = V_s* V_t with V_s: C^d -> C^r, a draw is W_s = V_s* z where
z is an r-vector of i.i.d. real N(0, 1) variates shared by all points, so
E[W_s W_t*] = V_s* V_t = K(s, t).

Variates come from numpy's PCG64 seeded by SeedSequence(seed, spawn_key=(stream_id,))
and its standard_normal (ziggurat) transform. Output is reproducible bit for
bit for a fixed numpy version.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import IndexOutOfRange, KernelError
from .kernels import GenerativeKernel, OperatorKernel, RandomKernel, mean_kernel
from .kolmogorov import KolmogorovFactor


@dataclass(frozen=True)
class SeededRng:
    seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id,))
        return np.random.Generator(np.random.PCG64(ss))

    def stream(self, stream_id: int) -> "SeededRng":
        return SeededRng(self.seed, stream_id)


@dataclass(frozen=True, eq=False)
class GaussianRealization:
    factor: KolmogorovFactor
    samples: np.ndarray  # (M, N, d); samples[m, i] = W_{s_i}(omega_m)
    coords: tuple = ()  # retained coordinates; empty means all

    @property
    def sample_count(self) -> int:
        return self.samples.shape[0]

    @property
    def points(self) -> tuple:
        return self.factor.points

    def path(self, m: int) -> dict:
        return dict(zip(self.points, self.samples[m]))


def _as_rng(rng) -> SeededRng:
    if isinstance(rng, SeededRng):
        return rng
    return SeededRng(int(rng))


def _draw(factor: KolmogorovFactor, M: int, rng, coords: np.ndarray | None):
    if M < 1:
        raise KernelError("need at least one draw")
    z = _as_rng(rng).generator().standard_normal((M, factor.rank))
    if coords is not None:
        mask = np.zeros(factor.rank, dtype=bool)
        mask[coords] = True
        z = z * mask
    return np.einsum("iad,ma->mid", factor.factors.conj(), z)


def sample_paths(factor: KolmogorovFactor, M: int, rng) -> GaussianRealization:
    """M independent draws of the process {W_s}."""
    return GaussianRealization(factor, _draw(factor, M, rng, None))


def _coords(factor: KolmogorovFactor, F: Iterable[int], allow_empty: bool) -> np.ndarray:
    F = np.array(sorted(set(int(i) for i in F)), dtype=int)
    if F.size == 0 and not allow_empty:
        raise KernelError("coordinate set F must be nonempty")
    if F.size and (F[0] < 0 or F[-1] >= factor.rank):
        raise IndexOutOfRange(f"coordinates must lie in 0..{factor.rank - 1}")
    return F


def truncated_realization(factor: KolmogorovFactor, F: Iterable[int], M: int, rng) -> GaussianRealization:
    """Draws of W_s^(F) = sum_{i in F} (V_s* e_i) Z_i, using the same variates as sample_paths."""
    coords = _coords(factor, F, allow_empty=False)
    return GaussianRealization(factor, _draw(factor, M, rng, coords), tuple(coords.tolist()))


def truncation_energy(factor: KolmogorovFactor, point, F: Iterable[int]) -> float:
    """E||W_s^(F)||^2 = tr(V_s* P_F V_s)."""
    coords = _coords(factor, F, allow_empty=True)
    v = factor.V(point)[coords]
    return float(math.fsum((np.abs(v) ** 2).ravel()))


def harmonic_factor(r: int) -> KolmogorovFactor:
    """Single-point factor with V = diag(1, 1/sqrt(2), ..., 1/sqrt(r)), so tr K = H_r."""
    return KolmogorovFactor(("s",), np.diag(1 / np.sqrt(np.arange(1, r + 1)))[None])


def energy_divergence(ranks: Sequence[int]) -> list:
    """(r, full truncation energy) for the harmonic family; grows like log r without bound."""
    return [(r, truncation_energy(harmonic_factor(r), "s", range(r))) for r in ranks]


def rank_one_random_kernel(realization: GaussianRealization) -> RandomKernel:
    """Uniform law over the rank-one kernels k(omega, s, t) = |W_s><W_t|."""
    w = realization.samples
    M = w.shape[0]
    if M == 0:
        raise KernelError("empty realization")
    blocks = np.einsum("mid,mje->mijde", w, w.conj())
    return RandomKernel(realization.points, np.full(M, 1.0 / M), blocks)


def _fsum_mean(stack: np.ndarray) -> np.ndarray:
    """Exactly rounded mean over axis 0; independent of summation order."""
    m = stack.shape[0]
    flat = stack.reshape(m, -1)
    re = [math.fsum(col) for col in flat.real.T.tolist()]
    im = [math.fsum(col) for col in flat.imag.T.tolist()]
    return (np.array(re) + 1j * np.array(im)).reshape(stack.shape[1:]) / m


def _stderr(stack: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    m = stack.shape[0]
    if m < 2:
        z = np.zeros(stack.shape[1:])
        return z, z
    return stack.real.std(axis=0, ddof=1) / math.sqrt(m), stack.imag.std(axis=0, ddof=1) / math.sqrt(m)


@dataclass(frozen=True, eq=False)
class MeanEstimate:
    mean: np.ndarray
    stderr_re: np.ndarray
    stderr_im: np.ndarray
    count: int

    def within(self, target: np.ndarray, n_se: float = 5.0) -> np.ndarray:
        """Entrywise test |mean - target| <= n_se standard errors (real and imaginary parts separately)."""
        d = self.mean - target
        return (np.abs(d.real) <= n_se * self.stderr_re) & (np.abs(d.imag) <= n_se * self.stderr_im)


def estimate_mean(stack: np.ndarray) -> MeanEstimate:
    stack = np.asarray(stack, dtype=complex)
    se_re, se_im = _stderr(stack)
    return MeanEstimate(_fsum_mean(stack), se_re, se_im, stack.shape[0])


def covariance_estimate(realization: GaussianRealization) -> MeanEstimate:
    """Sample mean of |W_s><W_t| with per-entry standard errors; mean has shape (N, N, d, d)."""
    w = realization.samples
    return estimate_mean(np.einsum("mid,mje->mijde", w, w.conj()))


def energy_estimate(realization: GaussianRealization) -> MeanEstimate:
    """Sample mean of ||W_s||^2 per point."""
    return estimate_mean((np.abs(realization.samples) ** 2).sum(axis=2))


def default_checkpoints(m: int) -> list:
    pts, c = [], 1
    while c <= m:
        pts.append(c)
        c *= 2
    if pts[-1] != m:
        pts.append(m)
    return pts


def _convergence(draws: np.ndarray, reference: np.ndarray, checkpoints) -> list:
    record = []
    for c in checkpoints:
        est = estimate_mean(draws[:c])
        err = float(np.abs(est.mean - reference).max(initial=0.0))
        se = float(max(est.stderr_re.max(initial=0.0), est.stderr_im.max(initial=0.0)))
        record.append((int(c), err, se))
    return record


def covariance_convergence(realization: GaussianRealization, kernel: OperatorKernel, checkpoints=None) -> list:
    """Rows (M', max_abs_error, stderr_estimate) for the covariance estimate from the first M' draws."""
    w = realization.samples
    checkpoints = checkpoints or default_checkpoints(w.shape[0])
    return _convergence(np.einsum("mid,mje->mijde", w, w.conj()), kernel.blocks, checkpoints)


@dataclass(frozen=True, eq=False)
class EmpiricalResult:
    average: OperatorKernel
    record: list  # [(m', max_abs_error, stderr_estimate)]
    atom_counts: np.ndarray | None = None
    reference: OperatorKernel | None = None

    @property
    def kernel(self) -> RandomKernel:
        """The empirical average as a one-atom random kernel."""
        return RandomKernel.constant(self.average)

    @property
    def error(self) -> float:
        return self.record[-1][1]


def empirical_kernel(rk, m: int, rng, checkpoints=None, reference: OperatorKernel | None = None) -> EmpiricalResult:
    """Average of m i.i.d. kernels drawn from rk, with its error trace against the mean kernel.

    For a GenerativeKernel without ``reference`` the final average serves as the reference.
    """
    if m < 1:
        raise KernelError("m must be >= 1")
    gen = _as_rng(rng).generator()
    counts = None
    if isinstance(rk, RandomKernel):
        idx = gen.choice(rk.n_atoms, size=m, p=rk.weights)
        counts = np.bincount(idx, minlength=rk.n_atoms)
        draws = rk.atom_blocks[idx]
        if reference is None:
            reference = mean_kernel(rk)
    elif isinstance(rk, GenerativeKernel):
        draws = np.stack([rk.draw(gen).blocks for _ in range(m)])
    else:
        raise TypeError(f"unsupported random kernel type {type(rk).__name__}")
    avg = OperatorKernel(tuple(rk.points), _fsum_mean(draws))
    if reference is None:
        reference = avg
    checkpoints = sorted(set(int(c) for c in (checkpoints or default_checkpoints(m)) if 1 <= c <= m))
    record = _convergence(draws, reference.blocks, checkpoints)
    return EmpiricalResult(avg, record, counts, reference)
