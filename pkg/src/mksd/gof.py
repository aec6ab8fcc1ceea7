"""Goodness-of-fit testing: statistics, null approximations, p-values.

The wild-bootstrap route tests the V-statistic against Rademacher
resamples of the Stein kernel quadratic form; the spectrum route tests
n times the U-statistic against simulated weighted chi-square sums built
from the eigenvalues of the Stein kernel matrix.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import EigendecompositionFailure, EmptyGrid, TooFewSamples
from .kernel import ManifoldKernel
from .model import UnnormalizedDensity
from .stein import SteinGram, SteinKernel


@dataclass(frozen=True)
class TestConfig:
    order: int = 1
    alpha: float = 0.01
    bootstrap: int = 1000
    method: str = "wild"  # "wild" or "spectrum"
    seed: int = 0
    ref_size: Optional[int] = None  # order-0 reference sample count; None -> n

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if self.bootstrap < 1:
            raise ValueError("bootstrap size must be at least 1")
        if self.method not in ("wild", "spectrum"):
            raise ValueError("method must be 'wild' or 'spectrum'")
        if self.order not in (0, 1, 2):
            raise ValueError("order must be 0, 1 or 2")


@dataclass(frozen=True, eq=False)
class TestResult:
    statistic: float
    null_samples: np.ndarray
    quantile: float
    p_value: float
    reject: bool
    config: TestConfig
    kernel_params: tuple = ()


def u_statistic(G: SteinGram) -> float:
    """Off-diagonal mean of the Stein kernel matrix (unbiased estimate)."""
    M = G.matrix
    n = M.shape[0]
    if n < 2:
        raise TooFewSamples("U-statistic needs n >= 2")
    return float((M.sum() - np.trace(M)) / (n * (n - 1)))


def v_statistic(G: SteinGram) -> float:
    """Full mean of the Stein kernel matrix (biased V form)."""
    M = G.matrix
    n = M.shape[0]
    return float(M.sum() / (n * n))


def wild_bootstrap(G: SteinGram, B: int, seed: int) -> np.ndarray:
    """Rademacher-sign resamples S_t = W^T M W / n^2, deterministic in seed."""
    M = G.matrix
    n = M.shape[0]
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    W = rng.choice(np.array([-1.0, 1.0]), size=(B, n))
    return np.einsum("bi,bi->b", W @ M, W) / (n * n)


def spectrum_null(G: SteinGram, B: int, seed: int) -> np.ndarray:
    """Simulated weighted chi-square null S_t = sum_j w_j (Z_jt^2 - 1) / n."""
    M = G.matrix
    n = M.shape[0]
    try:
        w = np.linalg.eigvalsh(M)
    except np.linalg.LinAlgError as exc:
        raise EigendecompositionFailure(str(exc)) from exc
    if not np.all(np.isfinite(w)):
        raise EigendecompositionFailure("non-finite eigenvalues")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    Z = rng.standard_normal((B, n))
    return (Z * Z - 1.0) @ w / n


def null_quantile(samples: np.ndarray, alpha: float) -> float:
    """Empirical (1-alpha) quantile: the ceil((1-alpha)B)-th order statistic."""
    B = samples.shape[0]
    k = min(max(math.ceil((1.0 - alpha) * B), 1), B)
    return float(np.sort(samples)[k - 1])


def sigma_hat(G: SteinGram) -> float:
    """Plug-in estimate of the H1 asymptotic standard deviation.

    Square root of the empirical variance over i of the off-diagonal row
    means of the Stein kernel matrix.
    """
    M = G.matrix
    n = M.shape[0]
    if n < 2:
        raise TooFewSamples("sigma_hat needs n >= 2")
    row_means = (M.sum(axis=1) - np.diag(M)) / (n - 1)
    return float(np.sqrt(np.var(row_means)))


def _ref_samples_for(q, cfg: TestConfig, n: int, path="mmd-ref") -> np.ndarray:
    from .sampling import RngStream, sample_from
    m = cfg.ref_size if cfg.ref_size is not None else n
    return sample_from(q, RngStream(cfg.seed, (path,)), m)


def paired_mmd_gram(k: ManifoldKernel, data, ref) -> SteinGram:
    """Two-sample MMD kernel over paired observations (x_i, z_i).

    Entries are k(x_i,x_j) + k(z_i,z_j) - k(x_i,z_j) - k(x_j,z_i).  The
    V-statistic of this matrix equals the biased two-sample MMD^2 (and the
    order-0 Stein kernel V-statistic), while its resamples carry the noise
    of both samples, which the reference-conditional order-0 matrix lacks.
    """
    data = np.atleast_2d(np.asarray(data, dtype=float))
    ref = np.atleast_2d(np.asarray(ref, dtype=float))
    if ref.shape[0] != data.shape[0]:
        raise ValueError(
            "order-0 null approximation pairs the data with an equal-size "
            f"reference sample; got n={data.shape[0]}, m={ref.shape[0]}")
    Kxx = k.eval_many(data, data)
    Kzz = k.eval_many(ref, ref)
    Kxz = k.eval_many(data, ref)
    H = Kxx + Kzz - Kxz - Kxz.T
    return SteinGram(matrix=0.5 * (H + H.T), points=data)


def run_test(data, q: UnnormalizedDensity, k: ManifoldKernel, cfg: TestConfig,
             ref_samples=None) -> TestResult:
    """Full test: Stein Gram, null approximation, quantile, p-value, decision."""
    data = np.atleast_2d(np.asarray(data, dtype=float))
    n = data.shape[0]
    if n < 2:
        raise TooFewSamples("testing needs n >= 2")
    if cfg.order == 0:
        if ref_samples is None:
            ref_samples = _ref_samples_for(q, cfg, n)
        G = paired_mmd_gram(k, data, ref_samples)
    else:
        G = SteinKernel(cfg.order, q, k).gram(data)
    if cfg.method == "wild":
        stat = v_statistic(G)
        null = wild_bootstrap(G, cfg.bootstrap, cfg.seed)
    else:
        stat = n * u_statistic(G)
        null = spectrum_null(G, cfg.bootstrap, cfg.seed)
    gamma = null_quantile(null, cfg.alpha)
    p = (1.0 + float(np.sum(null >= stat))) / (cfg.bootstrap + 1.0)
    return TestResult(statistic=stat, null_samples=null, quantile=gamma,
                      p_value=p, reject=bool(stat > gamma), config=cfg,
                      kernel_params=tuple(k.params))


@dataclass(frozen=True, eq=False)
class KernelSelection:
    kernel: ManifoldKernel
    scores: np.ndarray
    train: np.ndarray
    holdout: np.ndarray


def split_half(data, seed: int):
    """Deterministic shuffled 50/50 split; train gets the smaller half."""
    data = np.atleast_2d(np.asarray(data, dtype=float))
    n = data.shape[0]
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    perm = rng.permutation(n)
    half = n // 2
    return data[perm[:half]], data[perm[half:]]


def select_kernel_params(data, q, cfg: TestConfig, grid,
                         ref_samples=None) -> KernelSelection:
    """Pick kernel parameters by the power proxy u / sigma on a train half.

    The returned kernel must be used on the held-out half only; both halves
    are part of the result.  sigma is floored at 1e-12.
    """
    grid = list(grid)
    if not grid:
        raise EmptyGrid("kernel parameter grid is empty")
    train, holdout = split_half(data, cfg.seed)
    if train.shape[0] < 2:
        raise TooFewSamples("parameter selection needs at least 4 data points")
    if cfg.order == 0 and ref_samples is None:
        ref_samples = _ref_samples_for(q, cfg, train.shape[0], path="mmd-ref-select")
    scores = np.empty(len(grid))
    for idx, cand in enumerate(grid):
        if cfg.order == 0:
            G = paired_mmd_gram(cand, train, ref_samples[:train.shape[0]])
        else:
            G = SteinKernel(cfg.order, q, cand).gram(train)
        scores[idx] = u_statistic(G) / max(sigma_hat(G), 1e-12)
    best = int(np.argmax(scores))
    return KernelSelection(kernel=grid[best], scores=scores,
                           train=train, holdout=holdout)


def test_with_selection(data, q, cfg: TestConfig, grid) -> TestResult:
    """Select parameters on one half, test on the other."""
    sel = select_kernel_params(data, q, cfg, grid)
    return run_test(sel.holdout, q, sel.kernel, cfg)
