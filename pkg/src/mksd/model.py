"""Unnormalized density models on the supported charts.

Every model exposes the log unnormalized density and its coordinate
gradient (score).  The Stein score adds the chart's log-volume gradient;
normalization constants never enter.
"""

from dataclasses import dataclass, field

import numpy as np

from . import manifold
from .manifold import CIRCLE, SO3_EULER, TORUS2, ManifoldChart


class UnnormalizedDensity:
    """Base class; subclasses set ``chart`` and implement the *_many methods."""

    chart: ManifoldChart

    def log_unnorm_many(self, pts: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def score_many(self, pts: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def log_unnorm(self, x) -> float:
        x = manifold.check_interior(self.chart, x)
        return float(self.log_unnorm_many(x.reshape(1, -1))[0])

    def score(self, x) -> np.ndarray:
        x = manifold.check_interior(self.chart, x)
        return self.score_many(x.reshape(1, -1))[0]

    def stein_score(self, x) -> np.ndarray:
        """Coordinate gradient of log(q J) at x."""
        return self.score(x) + manifold.grad_log_volume(self.chart, x)

    def stein_score_many(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return self.score_many(pts) + manifold.grad_log_volume_many(self.chart, pts)


@dataclass(frozen=True)
class Uniform(UnnormalizedDensity):
    """log q = 0 on any chart."""

    chart: ManifoldChart

    def log_unnorm_many(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        manifold._check_interior_many(self.chart, pts)
        return np.zeros(pts.shape[0])

    def score_many(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        manifold._check_interior_many(self.chart, pts)
        return np.zeros_like(pts)


@dataclass(frozen=True)
class VonMisesCircle(UnnormalizedDensity):
    """q(x) propto exp(kappa * cos(x - mu)) on the circle."""

    kappa: float
    mu: float = 0.0
    chart: ManifoldChart = field(default=CIRCLE, init=False)

    def __post_init__(self):
        if self.kappa < 0:
            raise ValueError("kappa must be nonnegative")

    def log_unnorm_many(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return self.kappa * np.cos(pts[:, 0] - self.mu)

    def score_many(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return (-self.kappa * np.sin(pts[:, 0] - self.mu))[:, None]


@dataclass(frozen=True)
class BivariateVonMises(UnnormalizedDensity):
    """Sine-interaction bivariate von Mises on the 2-torus.

    log q = k1 cos(x1-m1) + k2 cos(x2-m2) + lam * sin(x1-m1) sin(x2-m2).
    The factorized (independent) model is the lam = 0 special case.
    """

    kappa1: float
    kappa2: float
    mu1: float
    mu2: float
    lam: float
    chart: ManifoldChart = field(default=TORUS2, init=False)

    def __post_init__(self):
        if self.kappa1 < 0 or self.kappa2 < 0:
            raise ValueError("concentrations must be nonnegative")

    def factorized(self) -> "BivariateVonMises":
        return BivariateVonMises(self.kappa1, self.kappa2, self.mu1, self.mu2, 0.0)

    def log_unnorm_many(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        u1 = pts[:, 0] - self.mu1
        u2 = pts[:, 1] - self.mu2
        return (self.kappa1 * np.cos(u1) + self.kappa2 * np.cos(u2)
                + self.lam * np.sin(u1) * np.sin(u2))

    def score_many(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        u1 = pts[:, 0] - self.mu1
        u2 = pts[:, 1] - self.mu2
        g1 = -self.kappa1 * np.sin(u1) + self.lam * np.cos(u1) * np.sin(u2)
        g2 = -self.kappa2 * np.sin(u2) + self.lam * np.sin(u1) * np.cos(u2)
        return np.stack([g1, g2], axis=1)


@dataclass(frozen=True, eq=False)
class FisherSO3(UnnormalizedDensity):
    """Fisher (matrix-Langevin) distribution exp(tr(F^T X)) on SO(3).

    The exponential-trace model is the special case F = kappa * I.
    """

    F: np.ndarray
    chart: ManifoldChart = field(default=SO3_EULER, init=False)

    def __post_init__(self):
        F = np.asarray(self.F, dtype=float).reshape(3, 3)
        if not np.all(np.isfinite(F)):
            raise ValueError("F must be finite")
        object.__setattr__(self, "F", F)

    @classmethod
    def exp_trace(cls, kappa: float) -> "FisherSO3":
        return cls(kappa * np.eye(3))

    def log_unnorm_many(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        manifold._check_interior_many(self.chart, pts)
        stack = manifold.so3_derivative_stack(pts, order=0)  # (n, 1, 9)
        return stack[:, 0, :] @ self.F.reshape(9)

    def score_many(self, pts):
        """score_i = tr(F^T dX/dtheta_i) with analytic ZYZ factor derivatives."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        manifold._check_interior_many(self.chart, pts)
        stack = manifold.so3_derivative_stack(pts, order=1)  # (n, 4, 9)
        return stack[:, 1:4, :] @ self.F.reshape(9)


# fitted parameter values used by the real-data recipes
WIND_BVM_FIT = BivariateVonMises(0.7170, 0.3954, 1.1499, 1.1499, -1.1274)
VCG_FISHER_FIT = FisherSO3(5.63 * np.array([[0.583, 0.629, 0.514],
                                            [0.660, -0.736, 0.151],
                                            [0.473, 0.252, -0.844]]))
