"""Stein kernels of order 0, 1, 2 and the Stein witness embedding.

Order 1 expands h(x, y) = <A1 k(x,.), A1 k(y,.)> into score and kernel
derivative terms.  Order 2 applies the metric-weighted second-order
operator in both arguments; the assembly below groups the resulting
set-partition terms into einsum contractions of the exponent-derivative
tables.  Order 0 is the sample-estimated MMD kernel.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import manifold
from .errors import EmptyReferenceSample
from .kernel import ManifoldKernel, SteinDerivTables
from .model import UnnormalizedDensity


def _h1_matrix(q, k, X, Y, tables=None) -> np.ndarray:
    """First-order Stein kernel values between point sets, unsymmetrized."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    t = tables if tables is not None else k.stein_tables(X, Y, order=1)
    sx = q.stein_score_many(X)
    sy = q.stein_score_many(Y)
    cross = np.einsum("ni,nmi->nm", sx, t.b) + np.einsum("nmi,mi->nm", t.a, sy)
    term = (sx @ sy.T) + cross + np.einsum("nmii->nm", t.M) \
        + np.einsum("nmi,nmi->nm", t.a, t.b)
    return t.k * term


def _h2_matrix(q, k, X, Y, tables=None) -> np.ndarray:
    """Second-order Stein kernel values between point sets, unsymmetrized.

    Writes A2 f = tr(P Hess f) + u . grad f with P = g^{-1}, u = P s, and
    applies the product rule to A2_x[A2_y k] = A2_x[k * phi_y].
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    t = tables if tables is not None else k.stein_tables(X, Y, order=2)
    P = manifold.inverse_metric_many(q.chart, X)
    Q = manifold.inverse_metric_many(q.chart, Y)
    u = np.einsum("nij,nj->ni", P, q.stein_score_many(X))
    v = np.einsum("mij,mj->mi", Q, q.stein_score_many(Y))

    Pa = np.einsum("nij,nmj->nmi", P, t.a)
    Qb = np.einsum("mij,nmj->nmi", Q, t.b)
    phi_x = np.einsum("nij,nmij->nm", P, t.A) \
        + np.einsum("nmi,nmi->nm", t.a, Pa) + np.einsum("ni,nmi->nm", u, t.a)
    phi_y = np.einsum("mij,nmij->nm", Q, t.B) \
        + np.einsum("nmi,nmi->nm", t.b, Qb) + np.einsum("mi,nmi->nm", v, t.b)

    # x-derivatives of phi_y
    grad = (np.einsum("mkl,nmikl->nmi", Q, t.D)
            + 2.0 * np.einsum("nmik,nmk->nmi", t.M, Qb)
            + np.einsum("nmik,mk->nmi", t.M, v))
    cC = np.einsum("nij,nmijk->nmk", P, t.C)
    tr_hess = (np.einsum("nij,nmijkl,mkl->nm", P, t.E, Q, optimize=True)
               + 2.0 * np.einsum("nmk,nmk->nm", cC, Qb)
               + 2.0 * np.einsum("nij,nmik,mkl,nmjl->nm", P, t.M, Q, t.M,
                                 optimize=True)
               + np.einsum("nmk,mk->nm", cC, v))
    return t.k * (phi_x * phi_y + tr_hess
                  + np.einsum("ni,nmi->nm", u, grad)
                  + 2.0 * np.einsum("nmi,nmi->nm", Pa, grad))


def _h0_matrix(ref, k, X, Y) -> np.ndarray:
    """Sample-estimated zeroth-order kernel k - xi(x) - xi(y) + C."""
    ref = np.atleast_2d(np.asarray(ref, dtype=float))
    if ref.shape[0] == 0:
        raise EmptyReferenceSample("order-0 Stein kernel needs reference samples")
    Kxy = k.eval_many(X, Y)
    xi_x = k.eval_many(X, ref).mean(axis=1)
    xi_y = k.eval_many(Y, ref).mean(axis=1)
    c_hat = k.eval_many(ref, ref).mean()
    return Kxy - xi_x[:, None] - xi_y[None, :] + c_hat


def stein_kernel_1(q, k, x, y) -> float:
    x = manifold.check_interior(q.chart, x).reshape(1, -1)
    y = manifold.check_interior(q.chart, y).reshape(1, -1)
    return float(0.5 * (_h1_matrix(q, k, x, y) + _h1_matrix(q, k, y, x))[0, 0])


def stein_kernel_2(q, k, x, y) -> float:
    x = manifold.check_interior(q.chart, x).reshape(1, -1)
    y = manifold.check_interior(q.chart, y).reshape(1, -1)
    return float(0.5 * (_h2_matrix(q, k, x, y) + _h2_matrix(q, k, y, x))[0, 0])


def stein_kernel_0(ref_samples, k, x, y) -> float:
    x = np.asarray(x, dtype=float).reshape(1, -1)
    y = np.asarray(y, dtype=float).reshape(1, -1)
    h = _h0_matrix(ref_samples, k, x, y)
    return float(0.5 * (h + h.T)[0, 0])


@dataclass(frozen=True)
class SteinGram:
    """Symmetric Stein kernel matrix with the points it was built from."""

    matrix: np.ndarray
    points: np.ndarray

    @property
    def n(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True, eq=False)
class SteinKernel:
    """Order-c Stein kernel bound to a null density and base kernel."""

    order: int
    density: UnnormalizedDensity
    kernel: ManifoldKernel
    ref_samples: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.order not in (0, 1, 2):
            raise ValueError("order must be 0, 1 or 2")
        if self.order == 0:
            ref = self.ref_samples
            if ref is None or np.atleast_2d(np.asarray(ref)).shape[0] == 0:
                raise EmptyReferenceSample(
                    "order-0 Stein kernel needs reference samples from q")

    def pair(self, x, y) -> float:
        if self.order == 0:
            return stein_kernel_0(self.ref_samples, self.kernel, x, y)
        if self.order == 1:
            return stein_kernel_1(self.density, self.kernel, x, y)
        return stein_kernel_2(self.density, self.kernel, x, y)

    def gram(self, pts) -> SteinGram:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        if self.order == 0:
            H = _h0_matrix(self.ref_samples, self.kernel, pts, pts)
        elif self.order == 1:
            H = _h1_matrix(self.density, self.kernel, pts, pts)
        else:
            H = _h2_matrix(self.density, self.kernel, pts, pts)
        return SteinGram(matrix=0.5 * (H + H.T), points=pts)


def stein_gram(sk: SteinKernel, pts) -> SteinGram:
    return sk.gram(pts)


# ---------------------------------------------------------------------------
# Stein witness (used by the criticism statistics)

def feature_matrix(q, k, data, locations) -> np.ndarray:
    """Rows tau(x) of per-location first-order Stein features.

    tau(x) stacks (s_i(x) k(x, v_j) + d k / d x_i (x, v_j)) over locations
    j and coordinates i; shape (n, J * d).
    """
    data = np.atleast_2d(np.asarray(data, dtype=float))
    V = np.atleast_2d(np.asarray(locations, dtype=float))
    t = k.stein_tables(data, V, order=1)
    s = q.stein_score_many(data)
    feats = t.k[:, :, None] * (s[:, None, :] + t.a)
    return feats.reshape(data.shape[0], V.shape[0] * data.shape[1])


def witness_at(q, k, data, v) -> np.ndarray:
    """Empirical Stein witness mean over data, evaluated at one location."""
    v = manifold.check_interior(q.chart, v)
    feats = feature_matrix(q, k, data, v.reshape(1, -1))
    return feats.mean(axis=0)
