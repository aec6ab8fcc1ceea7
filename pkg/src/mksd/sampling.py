"""Seeded random generation from the supported models.

Streams are derived from a (seed, path) pair so parallel consumers can
split without sharing state.  SO(3) samplers work in matrix space and
convert through the Euler chart, resampling the measure-zero points that
hit the gimbal singular set.  Rejection acceptance tests run in log space
so large concentrations do not underflow.
"""

import hashlib
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import manifold
from .errors import LowAcceptanceWarning
from .manifold import GIMBAL_TOL, SO3_EULER, TWO_PI
from .model import (BivariateVonMises, FisherSO3, Uniform, UnnormalizedDensity,
                    VonMisesCircle)

ACCEPTANCE_WARN_THRESHOLD = 1e-4
ACCEPTANCE_PROBE = 2000


def _path_entropy(part) -> int:
    if isinstance(part, (int, np.integer)):
        return int(part) & 0xFFFFFFFFFFFFFFFF
    digest = hashlib.sha256(str(part).encode("utf8")).hexdigest()
    return int(digest[:16], 16)


@dataclass(frozen=True)
class RngStream:
    """Reproducible generator addressed by a seed and a derivation path."""

    seed: int
    path: tuple = ()

    @property
    def generator(self) -> np.random.Generator:
        entropy = [int(self.seed) & 0xFFFFFFFFFFFFFFFF]
        entropy.extend(_path_entropy(p) for p in self.path)
        return np.random.default_rng(np.random.SeedSequence(entropy))

    def child(self, *parts) -> "RngStream":
        return RngStream(self.seed, self.path + tuple(parts))


def _as_generator(rng) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator
    if isinstance(rng, np.random.Generator):
        return rng
    return RngStream(int(rng)).generator


# ---------------------------------------------------------------------------
# SO(3)

def _haar_matrices(gen: np.random.Generator, m: int) -> np.ndarray:
    """Haar rotations: QR of a Gaussian matrix, R-sign fix, det correction."""
    A = gen.standard_normal((m, 3, 3))
    Q, R = np.linalg.qr(A)
    signs = np.sign(np.einsum("nii->ni", R))
    signs[signs == 0] = 1.0
    Q = Q * signs[:, None, :]
    neg = np.linalg.det(Q) < 0
    Q[neg] = -Q[neg]  # right-translation by -I maps the det=-1 coset onto SO(3)
    return Q


def _matrices_to_points(mats: np.ndarray) -> np.ndarray:
    """Convert rotation matrices, dropping any that sit on the singular set."""
    keep = np.abs(mats[:, 2, 2]) <= 1.0 - GIMBAL_TOL
    mats = mats[keep]
    out = np.empty((mats.shape[0], 3))
    for i, X in enumerate(mats):
        out[i] = manifold.matrix_to_euler(X)
    return out


def sample_uniform_so3(rng, n: int) -> np.ndarray:
    """Haar-uniform chart points, shape (n, 3)."""
    gen = _as_generator(rng)
    chunks = []
    got = 0
    while got < n:
        pts = _matrices_to_points(_haar_matrices(gen, max(n - got, 16)))
        chunks.append(pts)
        got += pts.shape[0]
    return np.concatenate(chunks, axis=0)[:n]


@dataclass
class _AcceptanceMeter:
    proposed: int = 0
    accepted: int = 0
    warned: bool = field(default=False)

    def update(self, proposed, accepted, label):
        self.proposed += proposed
        self.accepted += accepted
        if (not self.warned and self.proposed >= ACCEPTANCE_PROBE
                and self.accepted < ACCEPTANCE_WARN_THRESHOLD * self.proposed):
            warnings.warn(
                f"{label}: acceptance rate "
                f"{self.accepted / self.proposed:.2e} below "
                f"{ACCEPTANCE_WARN_THRESHOLD}", LowAcceptanceWarning)
            self.warned = True

    @property
    def rate(self) -> float:
        return self.accepted / self.proposed if self.proposed else 1.0


def sample_fisher_so3(rng, F, n: int, return_rate: bool = False):
    """Rejection from Haar with log-acceptance tr(F^T X) - sum sigma_i(F).

    The singular-value sum bounds tr(F^T X) over SO(3), so the acceptance
    ratio never exceeds one.
    """
    F = np.asarray(F, dtype=float).reshape(3, 3)
    gen = _as_generator(rng)
    bound = np.linalg.svd(F, compute_uv=False).sum()
    meter = _AcceptanceMeter()
    chunks = []
    got = 0
    batch = max(4 * n, 64)
    while got < n:
        X = _haar_matrices(gen, batch)
        log_ratio = np.einsum("pq,npq->n", F, X) - bound
        accept = np.log(gen.uniform(size=batch)) < log_ratio
        meter.update(batch, int(accept.sum()), "fisher sampler")
        pts = _matrices_to_points(X[accept])
        chunks.append(pts)
        got += pts.shape[0]
    out = np.concatenate(chunks, axis=0)[:n]
    return (out, meter.rate) if return_rate else out


def sample_exp_trace_so3(rng, kappa: float, n: int, return_rate: bool = False):
    """Exponential-trace model: Fisher rejection with F = kappa * I."""
    if kappa < 0:
        raise ValueError("kappa must be nonnegative")
    return sample_fisher_so3(rng, kappa * np.eye(3), n, return_rate=return_rate)


# ---------------------------------------------------------------------------
# circle and torus

def sample_von_mises(rng, kappa: float, mu: float, n: int) -> np.ndarray:
    """Von Mises angles in [0, 2*pi) via the wrapped-Cauchy envelope sampler."""
    if kappa < 0:
        raise ValueError("kappa must be nonnegative")
    gen = _as_generator(rng)
    if kappa < 1e-8:
        return gen.uniform(0.0, TWO_PI, size=n)
    draws = gen.vonmises(mu, kappa, size=n)
    return np.mod(draws, TWO_PI)


def sample_bivariate_vm(rng, params: BivariateVonMises, n: int,
                        burn_in: int = 500, thin: int = 5) -> np.ndarray:
    """Gibbs sampling of the sine-interaction bivariate von Mises.

    Each full conditional collapses a cos(u) + b sin(u) into a single von
    Mises cosine via the amplitude-phase identity, so the chain alternates
    exact von Mises draws.
    """
    gen = _as_generator(rng)
    k1, k2 = params.kappa1, params.kappa2
    m1, m2 = params.mu1, params.mu2
    lam = params.lam

    def cond_draw(kappa_base, mu_base, coupling):
        r = np.hypot(kappa_base, coupling)
        delta = np.arctan2(coupling, kappa_base)
        if r < 1e-8:
            return gen.uniform(0.0, TWO_PI)
        return np.mod(gen.vonmises(mu_base + delta, r), TWO_PI)

    x1, x2 = m1, m2
    out = np.empty((n, 2))
    kept = 0
    step = 0
    while kept < n:
        x1 = cond_draw(k1, m1, lam * np.sin(x2 - m2))
        x2 = cond_draw(k2, m2, lam * np.sin(x1 - m1))
        step += 1
        if step > burn_in and (step - burn_in) % thin == 0:
            out[kept] = (x1, x2)
            kept += 1
    return out


# ---------------------------------------------------------------------------
# dispatch

def sample_from(q: UnnormalizedDensity, rng, n: int) -> np.ndarray:
    """Draw n chart points from a supported model."""
    if isinstance(q, Uniform):
        gen = _as_generator(rng)
        if q.chart.kind == "so3_euler":
            return sample_uniform_so3(gen, n)
        return gen.uniform(0.0, TWO_PI, size=(n, q.chart.dim))
    if isinstance(q, VonMisesCircle):
        return sample_von_mises(rng, q.kappa, q.mu, n)[:, None]
    if isinstance(q, BivariateVonMises):
        return sample_bivariate_vm(rng, q, n)
    if isinstance(q, FisherSO3):
        return sample_fisher_so3(rng, q.F, n)
    raise TypeError(f"no sampler for model {type(q).__name__}")
