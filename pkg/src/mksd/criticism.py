"""Linear-time finite-set Stein statistics and test-location optimization.

The statistic is the mean squared empirical Stein witness over J chart
locations.  Locations are chosen on a training half by maximizing the
approximate-power objective statistic / (sigma_H1 + reg) with multi-start
Nelder-Mead in wrapped chart coordinates; the held-out half then supplies
a wild-bootstrap p-value, keeping the test calibrated.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import minimize

from . import manifold
from .errors import TooFewSamples
from .gof import null_quantile, split_half, v_statistic, wild_bootstrap
from .kernel import ManifoldKernel
from .model import UnnormalizedDensity
from .sampling import RngStream
from .stein import SteinGram, feature_matrix

OBJECTIVE_REG = 1e-6
DUPLICATE_TOL = 1e-3


@dataclass(frozen=True)
class TestLocations:
    """J interior chart points, wrapped; sortable payload of criticize()."""

    points: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "points",
                           np.atleast_2d(np.asarray(self.points, dtype=float)))

    @property
    def J(self) -> int:
        return self.points.shape[0]


def mfssd(data, q, k, locations) -> float:
    """Mean squared Stein witness over locations; O(n d J) cost."""
    V = locations.points if isinstance(locations, TestLocations) else locations
    feats = feature_matrix(q, k, data, V)
    mean = feats.mean(axis=0)
    return float(mean @ mean / feats.shape[1])


def mfssd_variance(data, q, k, locations) -> float:
    """Delta-method plug-in variance of the statistic under H1."""
    V = locations.points if isinstance(locations, TestLocations) else locations
    feats = feature_matrix(q, k, data, V)
    n, dj = feats.shape
    if n < 2:
        raise TooFewSamples("variance estimate needs n >= 2")
    mu = feats.mean(axis=0)
    centered = feats - mu
    sigma_mu = centered.T @ (centered @ mu) / n
    return float(4.0 * (mu @ sigma_mu) / dj**2)


def power_objective(data, q, k, locations, reg: float = OBJECTIVE_REG) -> float:
    """Approximate-power proxy: statistic over regularized H1 deviation."""
    return mfssd(data, q, k, locations) / (
        np.sqrt(max(mfssd_variance(data, q, k, locations), 0.0)) + reg)


@dataclass(frozen=True)
class OptimizerConfig:
    n_starts: int = 5
    max_iter: Optional[int] = None
    jitter: float = 0.1
    reg: float = OBJECTIVE_REG
    xatol: float = 1e-6
    fatol: float = 1e-10


def _single_point_objectives(data, q, k, candidates, reg):
    """Objective of each candidate location used alone (J = 1)."""
    feats_all = feature_matrix(q, k, data, candidates)
    n = data.shape[0]
    d = data.shape[1]
    feats = feats_all.reshape(n, candidates.shape[0], d)
    mu = feats.mean(axis=0)                      # (J, d)
    stat = (mu * mu).sum(axis=1) / d
    centered = feats - mu
    sig = 4.0 * np.einsum("nji,ji,njk,jk->j", centered, mu, centered, mu) / (n * d * d)
    return stat / (np.sqrt(np.maximum(sig, 0.0)) + reg)


def _separate_duplicates(chart, V, gen, jitter):
    """Perturb locations that collapsed onto each other."""
    V = V.copy()
    for _ in range(32):
        diff = V[:, None, :] - V[None, :, :]
        dist = np.linalg.norm(np.mod(diff + np.pi, 2 * np.pi) - np.pi, axis=2)
        np.fill_diagonal(dist, np.inf)
        clashes = np.argwhere(np.triu(dist < DUPLICATE_TOL))
        if clashes.size == 0:
            break
        for _, j in clashes:
            V[j] = manifold.wrap(chart, V[j] + jitter * gen.standard_normal(V.shape[1]))
    return V


def optimize_locations(train_data, q, k, J: int, rng,
                       opt: OptimizerConfig = OptimizerConfig()) -> TestLocations:
    """Maximize the power objective over J locations, multi-start Nelder-Mead.

    Start 0 seeds from the training points with the best single-location
    objectives; the remaining starts draw training points at random and add
    jitter.  Coordinates are wrapped at every evaluation, and the best start
    wins (ties to the lowest start index).
    """
    train_data = np.atleast_2d(np.asarray(train_data, dtype=float))
    if J < 1:
        raise ValueError("J must be at least 1")
    gen = rng.generator if isinstance(rng, RngStream) else rng
    chart = q.chart
    d = chart.dim

    def neg_objective(flat):
        V = manifold.wrap_many(chart, flat.reshape(J, d))
        return -power_objective(train_data, q, k, V, reg=opt.reg)

    singles = _single_point_objectives(train_data, q, k, train_data, opt.reg)
    greedy = train_data[np.argsort(singles)[::-1][:J]]
    if greedy.shape[0] < J:  # fewer train points than locations
        extra = train_data[gen.integers(0, train_data.shape[0], J - greedy.shape[0])]
        greedy = np.vstack([greedy, extra])

    starts = [greedy]
    for _ in range(max(opt.n_starts - 1, 0)):
        picks = train_data[gen.integers(0, train_data.shape[0], J)]
        starts.append(picks + opt.jitter * gen.standard_normal((J, d)))

    best_val = np.inf
    best_flat = starts[0].reshape(-1)
    options = {"xatol": opt.xatol, "fatol": opt.fatol}
    if opt.max_iter is not None:
        options["maxiter"] = opt.max_iter
    for start in starts:
        res = minimize(neg_objective, start.reshape(-1), method="Nelder-Mead",
                       options=options)
        if res.fun < best_val:
            best_val = res.fun
            best_flat = res.x
    V = manifold.wrap_many(chart, best_flat.reshape(J, d))
    return TestLocations(_separate_duplicates(chart, V, gen, opt.jitter))


@dataclass(frozen=True)
class CriticismConfig:
    J: int = 10
    alpha: float = 0.05
    bootstrap: int = 1000
    seed: int = 0
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)


@dataclass(frozen=True, eq=False)
class CriticismResult:
    locations: TestLocations
    objectives: np.ndarray          # per-location single-location objective
    statistic: float
    p_value: float
    quantile: float
    reject: bool
    null_samples: np.ndarray
    train: np.ndarray
    holdout: np.ndarray


def criticize(data, q: UnnormalizedDensity, k: ManifoldKernel,
              cfg: CriticismConfig = CriticismConfig()) -> CriticismResult:
    """Optimize locations on one half, test on the other.

    The held-out statistic reuses the wild bootstrap on the feature inner
    product kernel h(x, y) = tau(x)^T tau(y) / (dJ), whose V-statistic is
    exactly the held-out mean squared witness.
    """
    data = np.atleast_2d(np.asarray(data, dtype=float))
    train, holdout = split_half(data, cfg.seed)
    if train.shape[0] < 2 or holdout.shape[0] < 2:
        raise TooFewSamples("criticism needs at least 4 data points")
    locs = optimize_locations(train, q, k, cfg.J,
                              RngStream(cfg.seed, ("criticism-opt",)),
                              cfg.optimizer)
    singles = _single_point_objectives(train, q, k, locs.points,
                                       cfg.optimizer.reg)
    order = np.argsort(singles)[::-1]
    locs = TestLocations(locs.points[order])
    singles = singles[order]

    feats = feature_matrix(q, k, holdout, locs.points)
    G = SteinGram(matrix=(feats @ feats.T) / feats.shape[1], points=holdout)
    stat = v_statistic(G)
    null = wild_bootstrap(G, cfg.bootstrap, cfg.seed)
    gamma = null_quantile(null, cfg.alpha)
    p = (1.0 + float(np.sum(null >= stat))) / (cfg.bootstrap + 1.0)
    return CriticismResult(locations=locs, objectives=singles, statistic=stat,
                           p_value=p, quantile=gamma, reject=bool(stat > gamma),
                           null_samples=null, train=train, holdout=holdout)
