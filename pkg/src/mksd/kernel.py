"""Reproducing kernels with mixed coordinate derivatives up to order (2, 2).

All supported kernels are of the form k(x, y) = exp(S(x, y)) for a smooth
exponent S, so any mixed partial of k is k times a sum over set partitions
of the requested derivative slots, each block contributing one derivative
of S.  Per-kernel code only has to supply derivatives of S:

  - circle:  S = eta * cos(x - y)
  - 2-torus: S = eta1 * cos(x1 - y1) + eta2 * cos(x2 - y2)
  - SO(3):   S = eta * tr(X(x)^T Y(y)), with X the ZYZ chart map

The Stein-kernel assembly consumes the vectorized exponent-derivative
tables produced by ``stein_tables``.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import manifold
from .manifold import (CIRCLE, SO3_EULER, TORUS2, SO3_SECOND_SLOT,
                       ManifoldChart)


@dataclass(frozen=True)
class MultiIndexDeriv:
    """Derivative request: per-coordinate orders in x (a) and y (b)."""

    a: tuple
    b: tuple

    def __post_init__(self):
        if sum(self.a) > 2 or sum(self.b) > 2:
            raise ValueError("derivative orders are limited to 2 per argument")
        if min(self.a, default=0) < 0 or min(self.b, default=0) < 0:
            raise ValueError("orders must be nonnegative")


def _set_partitions(items):
    """All partitions of a list into nonempty blocks."""
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in _set_partitions(rest):
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1:]
        yield [[first]] + part


@dataclass
class SteinDerivTables:
    """Vectorized exponent derivatives between two point sets.

    With S = log k, entries are (n, m, ...) arrays:
      k              kernel values
      a[..., i]      d S / d x_i
      b[..., j]      d S / d y_j
      M[..., i, j]   d2 S / d x_i d y_j
    and for order 2 additionally
      A[..., i, j]   d2 S / d x_i d x_j
      B[..., k, l]   d2 S / d y_k d y_l
      C[..., i,j,k]  d3 S / d x_i d x_j d y_k
      D[..., i,k,l]  d3 S / d x_i d y_k d y_l
      E[..., i,j,k,l] d4 S / d x_i d x_j d y_k d y_l
    """

    k: np.ndarray
    a: np.ndarray
    b: np.ndarray
    M: np.ndarray
    A: Optional[np.ndarray] = None
    B: Optional[np.ndarray] = None
    C: Optional[np.ndarray] = None
    D: Optional[np.ndarray] = None
    E: Optional[np.ndarray] = None


class ManifoldKernel:
    """Base class; subclasses define the exponent S and its derivatives."""

    chart: ManifoldChart

    # -- scalar interface ---------------------------------------------------

    def eval(self, x, y) -> float:
        x = manifold.check_interior(self.chart, x)
        y = manifold.check_interior(self.chart, y)
        return float(self.eval_many(x.reshape(1, -1), y.reshape(1, -1))[0, 0])

    def deriv(self, d: MultiIndexDeriv, x, y) -> float:
        """Analytic mixed partial of k at one pair via set partitions."""
        x = manifold.check_interior(self.chart, x)
        y = manifold.check_interior(self.chart, y)
        a = tuple(d.a) + (0,) * (self.chart.dim - len(d.a))
        b = tuple(d.b) + (0,) * (self.chart.dim - len(d.b))
        slots = ([("x", i) for i, o in enumerate(a) for _ in range(o)]
                 + [("y", j) for j, o in enumerate(b) for _ in range(o)])
        if not slots:
            return self.eval(x, y)
        total = 0.0
        for part in _set_partitions(slots):
            prod = 1.0
            for block in part:
                ax = tuple(i for side, i in block if side == "x")
                by = tuple(j for side, j in block if side == "y")
                prod *= self._exponent_deriv(ax, by, x, y)
            total += prod
        return float(self.eval(x, y) * total)

    # -- vectorized interface ----------------------------------------------

    def eval_many(self, X, Y) -> np.ndarray:
        raise NotImplementedError

    def stein_tables(self, X, Y, order: int) -> SteinDerivTables:
        raise NotImplementedError

    def _exponent_deriv(self, ax, by, x, y) -> float:
        """d^{ax}_x d^{by}_y S for slot index tuples ax, by."""
        raise NotImplementedError

    def with_params(self, params) -> "ManifoldKernel":
        raise NotImplementedError

    @property
    def params(self) -> tuple:
        raise NotImplementedError


def _axis_deriv(eta, u, na, nb):
    """d^na_x d^nb_y of eta*cos(x - y) as a function of u = x - y."""
    return eta * ((-1.0) ** nb) * np.cos(u + (na + nb) * np.pi / 2.0)


@dataclass(frozen=True)
class VonMisesKernel(ManifoldKernel):
    """k(x, y) = exp(eta * cos(x - y)) on the circle."""

    eta: float
    chart: ManifoldChart = field(default=CIRCLE, init=False)

    def __post_init__(self):
        if self.eta <= 0:
            raise ValueError("eta must be positive")

    @property
    def params(self):
        return (self.eta,)

    def with_params(self, params):
        return VonMisesKernel(float(params[0]))

    def eval_many(self, X, Y):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        Y = np.atleast_2d(np.asarray(Y, dtype=float))
        u = X[:, None, 0] - Y[None, :, 0]
        return np.exp(self.eta * np.cos(u))

    def _exponent_deriv(self, ax, by, x, y):
        return float(_axis_deriv(self.eta, x[0] - y[0], len(ax), len(by)))

    def stein_tables(self, X, Y, order):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        Y = np.atleast_2d(np.asarray(Y, dtype=float))
        u = X[:, None, 0] - Y[None, :, 0]
        d = lambda na, nb: _axis_deriv(self.eta, u, na, nb)
        one = (slice(None), slice(None), None)
        t = SteinDerivTables(
            k=np.exp(self.eta * np.cos(u)),
            a=d(1, 0)[one], b=d(0, 1)[one],
            M=d(1, 1)[:, :, None, None])
        if order >= 2:
            t.A = d(2, 0)[:, :, None, None]
            t.B = d(0, 2)[:, :, None, None]
            t.C = d(2, 1)[:, :, None, None, None]
            t.D = d(1, 2)[:, :, None, None, None]
            t.E = d(2, 2)[:, :, None, None, None, None]
        return t


@dataclass(frozen=True)
class ProductVonMisesKernel(ManifoldKernel):
    """Product of per-axis von Mises kernels on the 2-torus."""

    eta1: float
    eta2: float
    chart: ManifoldChart = field(default=TORUS2, init=False)

    def __post_init__(self):
        if self.eta1 <= 0 or self.eta2 <= 0:
            raise ValueError("kernel parameters must be positive")

    @property
    def params(self):
        return (self.eta1, self.eta2)

    def with_params(self, params):
        return ProductVonMisesKernel(float(params[0]), float(params[1]))

    def eval_many(self, X, Y):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        Y = np.atleast_2d(np.asarray(Y, dtype=float))
        u1 = X[:, None, 0] - Y[None, :, 0]
        u2 = X[:, None, 1] - Y[None, :, 1]
        return np.exp(self.eta1 * np.cos(u1) + self.eta2 * np.cos(u2))

    def _exponent_deriv(self, ax, by, x, y):
        axes = set(ax) | set(by)
        if len(axes) > 1:
            return 0.0  # S is additive across axes
        axis = axes.pop()
        eta = (self.eta1, self.eta2)[axis]
        return float(_axis_deriv(eta, x[axis] - y[axis], len(ax), len(by)))

    def stein_tables(self, X, Y, order):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        Y = np.atleast_2d(np.asarray(Y, dtype=float))
        n, m = X.shape[0], Y.shape[0]
        etas = (self.eta1, self.eta2)
        us = [X[:, None, i] - Y[None, :, i] for i in range(2)]
        t = SteinDerivTables(
            k=np.exp(etas[0] * np.cos(us[0]) + etas[1] * np.cos(us[1])),
            a=np.zeros((n, m, 2)), b=np.zeros((n, m, 2)),
            M=np.zeros((n, m, 2, 2)))
        if order >= 2:
            t.A = np.zeros((n, m, 2, 2))
            t.B = np.zeros((n, m, 2, 2))
            t.C = np.zeros((n, m, 2, 2, 2))
            t.D = np.zeros((n, m, 2, 2, 2))
            t.E = np.zeros((n, m, 2, 2, 2, 2))
        for i in range(2):
            d = lambda na, nb: _axis_deriv(etas[i], us[i], na, nb)
            t.a[:, :, i] = d(1, 0)
            t.b[:, :, i] = d(0, 1)
            t.M[:, :, i, i] = d(1, 1)
            if order >= 2:
                t.A[:, :, i, i] = d(2, 0)
                t.B[:, :, i, i] = d(0, 2)
                t.C[:, :, i, i, i] = d(2, 1)
                t.D[:, :, i, i, i] = d(1, 2)
                t.E[:, :, i, i, i, i] = d(2, 2)
        return t


@dataclass(frozen=True)
class ExpTraceKernel(ManifoldKernel):
    """k(X, Y) = exp(eta * tr(X^T Y)) on SO(3) in Euler coordinates."""

    eta: float
    chart: ManifoldChart = field(default=SO3_EULER, init=False)

    def __post_init__(self):
        if self.eta <= 0:
            raise ValueError("eta must be positive")

    @property
    def params(self):
        return (self.eta,)

    def with_params(self, params):
        return ExpTraceKernel(float(params[0]))

    def eval_many(self, X, Y):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        Y = np.atleast_2d(np.asarray(Y, dtype=float))
        vx = manifold.so3_derivative_stack(X, order=0)[:, 0, :]
        vy = manifold.so3_derivative_stack(Y, order=0)[:, 0, :]
        return np.exp(self.eta * (vx @ vy.T))

    def _exponent_deriv(self, ax, by, x, y):
        ox = [0, 0, 0]
        for i in ax:
            ox[i] += 1
        oy = [0, 0, 0]
        for j in by:
            oy[j] += 1
        dx = manifold.euler_derivative(x, ox)
        dy = manifold.euler_derivative(y, oy)
        return float(self.eta * np.sum(dx * dy))

    def stein_tables(self, X, Y, order):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        Y = np.atleast_2d(np.asarray(Y, dtype=float))
        manifold._check_interior_many(SO3_EULER, X)
        manifold._check_interior_many(SO3_EULER, Y)
        sx = manifold.so3_derivative_stack(X, order=order)
        sy = manifold.so3_derivative_stack(Y, order=order)
        # TT[n, m, p, q] = eta * tr(dX_p^T dY_q) over derivative slots
        TT = self.eta * np.einsum("npk,mqk->nmpq", sx, sy)
        a = TT[:, :, 1:4, 0]
        b = TT[:, :, 0, 1:4]
        M = TT[:, :, 1:4, 1:4]
        t = SteinDerivTables(k=np.exp(TT[:, :, 0, 0]), a=a, b=b, M=M)
        if order >= 2:
            P2 = SO3_SECOND_SLOT
            t.A = TT[:, :, P2, 0]
            t.B = TT[:, :, 0, P2]
            t.C = TT[:, :, P2][:, :, :, :, 1:4]
            t.D = TT[:, :, 1:4][:, :, :, P2]
            t.E = TT[:, :, P2[:, :, None, None], P2[None, None, :, :]]
        return t


def gram(k: ManifoldKernel, pts) -> np.ndarray:
    """Symmetric kernel Gram matrix (entries averaged with the transpose)."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    K = k.eval_many(pts, pts)
    return 0.5 * (K + K.T)


# ---------------------------------------------------------------------------
# parameter defaults

def default_kernel(chart: ManifoldChart, data) -> ManifoldKernel:
    """Median-heuristic starting kernel: eta = 1 / median(const - similarity).

    The similarity is cos(x - y) per axis on the circle and torus (const 1)
    and tr(X^T Y) on SO(3) (const 3); medians are over distinct data pairs.
    """
    data = np.atleast_2d(np.asarray(data, dtype=float))
    n = data.shape[0]
    iu = np.triu_indices(n, k=1)
    if n < 2:
        raise ValueError("median heuristic needs at least two points")

    def med_eta(gap):
        med = float(np.median(gap[iu]))
        return 1.0 / max(med, 1e-12)

    if chart.kind == "circle":
        gap = 1.0 - np.cos(data[:, None, 0] - data[None, :, 0])
        return VonMisesKernel(med_eta(gap))
    if chart.kind == "torus2":
        etas = []
        for i in range(2):
            gap = 1.0 - np.cos(data[:, None, i] - data[None, :, i])
            etas.append(med_eta(gap))
        return ProductVonMisesKernel(*etas)
    if chart.kind == "so3_euler":
        v = manifold.so3_derivative_stack(data, order=0)[:, 0, :]
        gap = 3.0 - v @ v.T
        return ExpTraceKernel(med_eta(gap))
    raise ValueError(f"unsupported chart {chart.kind}")


def kernel_grid(base: ManifoldKernel, num: int = 9, span: float = 8.0):
    """Log-spaced candidate kernels around a base kernel's parameters.

    Each parameter independently sweeps [p/span, p*span] with ``num``
    points; multi-parameter kernels get the Cartesian product.
    """
    axes = [np.exp(np.linspace(np.log(p / span), np.log(p * span), num))
            for p in base.params]
    mesh = np.meshgrid(*axes, indexing="ij")
    combos = np.stack([m.ravel() for m in mesh], axis=1)
    return [base.with_params(row) for row in combos]
