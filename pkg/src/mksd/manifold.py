"""Coordinate charts on the circle, the 2-torus, and SO(3).

Chart points are plain 1-D numpy arrays of length ``chart.dim`` holding
angle coordinates in radians, kept in canonical wrapped form: angles in
[0, 2*pi) and, on SO(3), the polar Euler angle in (0, pi).  SO(3) uses the
ZYZ Euler convention X = Rz(phi) Ry(theta) Rz(psi).
"""

from dataclasses import dataclass

import numpy as np

from .errors import GimbalLock, SingularChartPoint

TWO_PI = 2.0 * np.pi

# tolerance for detecting the SO(3) chart singular set theta in {0, pi}
SINGULAR_TOL = 1e-12
# |X33| threshold above which matrix_to_euler refuses to invert
GIMBAL_TOL = 1e-10
# rotation-matrix validation tolerance (Frobenius)
ROTATION_TOL = 1e-10


@dataclass(frozen=True)
class ManifoldChart:
    """Descriptor of a supported chart; immutable and shareable."""

    kind: str
    dim: int

    def __repr__(self):
        return f"ManifoldChart({self.kind!r}, dim={self.dim})"


CIRCLE = ManifoldChart("circle", 1)
TORUS2 = ManifoldChart("torus2", 2)
SO3_EULER = ManifoldChart("so3_euler", 3)

_CHARTS = {c.kind: c for c in (CIRCLE, TORUS2, SO3_EULER)}
_ALIASES = {"circle": "circle", "torus": "torus2", "torus2": "torus2",
            "so3": "so3_euler", "so3_euler": "so3_euler"}


def chart_by_name(name: str) -> ManifoldChart:
    key = _ALIASES.get(name.lower())
    if key is None:
        raise ValueError(f"unknown manifold {name!r}; expected circle, torus or so3")
    return _CHARTS[key]


# ---------------------------------------------------------------------------
# wrapping

def wrap(chart: ManifoldChart, raw) -> np.ndarray:
    """Reduce raw coordinates to canonical wrapped form."""
    return wrap_many(chart, np.asarray(raw, dtype=float).reshape(1, -1))[0]


def wrap_many(chart: ManifoldChart, raw) -> np.ndarray:
    raw = np.atleast_2d(np.asarray(raw, dtype=float))
    if raw.shape[1] != chart.dim:
        raise ValueError(f"expected {chart.dim} coordinates, got {raw.shape[1]}")
    out = raw.copy()
    if chart.kind == "so3_euler":
        th = np.mod(out[:, 1], TWO_PI)
        flip = th > np.pi
        # Ry(-t) = Rz(pi) Ry(t) Rz(pi): (phi, -t, psi) == (phi+pi, t, psi+pi)
        th = np.where(flip, TWO_PI - th, th)
        out[:, 1] = th
        out[:, 0] = np.mod(out[:, 0] + flip * np.pi, TWO_PI)
        out[:, 2] = np.mod(out[:, 2] + flip * np.pi, TWO_PI)
    else:
        out = np.mod(out, TWO_PI)
    return out


def _check_interior_many(chart: ManifoldChart, pts: np.ndarray):
    if chart.kind == "so3_euler":
        th = pts[:, 1]
        bad = (np.abs(th) < SINGULAR_TOL) | (np.abs(th - np.pi) < SINGULAR_TOL)
        if np.any(bad):
            raise SingularChartPoint(
                f"theta within {SINGULAR_TOL} of the singular set {{0, pi}}")


def check_interior(chart: ManifoldChart, x) -> np.ndarray:
    """Validate a single point; returns it as an array."""
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != chart.dim:
        raise ValueError(f"expected {chart.dim} coordinates, got {x.shape[0]}")
    _check_interior_many(chart, x.reshape(1, -1))
    return x


# ---------------------------------------------------------------------------
# metric, volume element

def metric_tensor(chart: ManifoldChart, x) -> np.ndarray:
    x = check_interior(chart, x)
    if chart.kind == "so3_euler":
        c = np.cos(x[1])
        return np.array([[2.0, 0.0, 2.0 * c],
                         [0.0, 2.0, 0.0],
                         [2.0 * c, 0.0, 2.0]])
    return np.eye(chart.dim)


def inverse_metric(chart: ManifoldChart, x) -> np.ndarray:
    return inverse_metric_many(chart, np.asarray(x, dtype=float).reshape(1, -1))[0]


def inverse_metric_many(chart: ManifoldChart, pts) -> np.ndarray:
    """Inverse metric g^{ij} at each point, shape (n, d, d)."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    n = pts.shape[0]
    _check_interior_many(chart, pts)
    if chart.kind != "so3_euler":
        return np.broadcast_to(np.eye(chart.dim), (n, chart.dim, chart.dim)).copy()
    c = np.cos(pts[:, 1])
    s2 = np.sin(pts[:, 1]) ** 2
    inv = np.zeros((n, 3, 3))
    inv[:, 0, 0] = 1.0 / (2.0 * s2)
    inv[:, 2, 2] = 1.0 / (2.0 * s2)
    inv[:, 0, 2] = inv[:, 2, 0] = -c / (2.0 * s2)
    inv[:, 1, 1] = 0.5
    return inv


def volume_element(chart: ManifoldChart, x) -> float:
    """J(x) = sqrt(det g(x)); equals 2*sqrt(2)*sin(theta) on SO(3)."""
    x = check_interior(chart, x)
    if chart.kind == "so3_euler":
        return float(2.0 * np.sqrt(2.0) * np.sin(x[1]))
    return 1.0


def grad_log_volume(chart: ManifoldChart, x) -> np.ndarray:
    x = check_interior(chart, x)
    if chart.kind == "so3_euler":
        return np.array([0.0, 1.0 / np.tan(x[1]), 0.0])
    return np.zeros(chart.dim)


def grad_log_volume_many(chart: ManifoldChart, pts) -> np.ndarray:
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    _check_interior_many(chart, pts)
    out = np.zeros_like(pts)
    if chart.kind == "so3_euler":
        out[:, 1] = 1.0 / np.tan(pts[:, 1])
    return out


# ---------------------------------------------------------------------------
# SO(3) chart map and derivatives

def _rz_stack(a: np.ndarray, order: int) -> np.ndarray:
    """Order-th derivative of Rz at angles a, shape (n, 3, 3)."""
    a = np.asarray(a, dtype=float)
    c = np.cos(a + order * np.pi / 2.0)
    s = np.sin(a + order * np.pi / 2.0)
    out = np.zeros(a.shape + (3, 3))
    out[..., 0, 0] = c
    out[..., 0, 1] = -s
    out[..., 1, 0] = s
    out[..., 1, 1] = c
    out[..., 2, 2] = 1.0 if order == 0 else 0.0
    return out


def _ry_stack(a: np.ndarray, order: int) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    c = np.cos(a + order * np.pi / 2.0)
    s = np.sin(a + order * np.pi / 2.0)
    out = np.zeros(a.shape + (3, 3))
    out[..., 0, 0] = c
    out[..., 0, 2] = s
    out[..., 1, 1] = 1.0 if order == 0 else 0.0
    out[..., 2, 0] = -s
    out[..., 2, 2] = c
    return out


# multi-derivative orders (n_phi, n_theta, n_psi) with total <= 2, in a
# fixed layout shared with the kernel tables
SO3_DERIV_ORDERS = (
    (0, 0, 0),
    (1, 0, 0), (0, 1, 0), (0, 0, 1),
    (2, 0, 0), (1, 1, 0), (1, 0, 1), (0, 2, 0), (0, 1, 1), (0, 0, 2),
)
SO3_FIRST_SLOT = (1, 2, 3)
# position of the (i, j) second derivative in SO3_DERIV_ORDERS
SO3_SECOND_SLOT = np.array([[4, 5, 6], [5, 7, 8], [6, 8, 9]])


def euler_to_matrix(x) -> np.ndarray:
    """ZYZ chart map; total on R^3 after wrapping."""
    x = np.asarray(x, dtype=float).reshape(3)
    return (_rz_stack(x[0], 0) @ _ry_stack(x[1], 0) @ _rz_stack(x[2], 0))


def euler_derivative(x, orders) -> np.ndarray:
    """Mixed partial of the chart map: Rz^(n1)(phi) Ry^(n2)(theta) Rz^(n3)(psi)."""
    x = np.asarray(x, dtype=float).reshape(3)
    n1, n2, n3 = orders
    return _rz_stack(x[0], n1) @ _ry_stack(x[1], n2) @ _rz_stack(x[2], n3)


def so3_derivative_stack(pts, order: int = 2) -> np.ndarray:
    """Chart-map derivative matrices for many points.

    Returns shape (n, K, 9) with K = 4 for order 1 and K = 10 for order 2,
    rows laid out as SO3_DERIV_ORDERS and matrices flattened row-major.
    """
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    n = pts.shape[0]
    max_per = order
    rz1 = [_rz_stack(pts[:, 0], m) for m in range(max_per + 1)]
    ry = [_ry_stack(pts[:, 1], m) for m in range(max_per + 1)]
    rz2 = [_rz_stack(pts[:, 2], m) for m in range(max_per + 1)]
    combos = [o for o in SO3_DERIV_ORDERS if sum(o) <= order]
    out = np.empty((n, len(combos), 9))
    for slot, (a, b, c) in enumerate(combos):
        prod = np.einsum("nij,njk,nkl->nil", rz1[a], ry[b], rz2[c])
        out[:, slot, :] = prod.reshape(n, 9)
    return out


def rotation_defect(X) -> float:
    """Frobenius distance of X^T X from I plus |det X - 1|."""
    X = np.asarray(X, dtype=float).reshape(3, 3)
    ortho = np.linalg.norm(X.T @ X - np.eye(3))
    return float(ortho + abs(np.linalg.det(X) - 1.0))


def is_rotation(X, tol: float = ROTATION_TOL) -> bool:
    X = np.asarray(X, dtype=float).reshape(3, 3)
    return (np.linalg.norm(X.T @ X - np.eye(3)) <= tol
            and abs(np.linalg.det(X) - 1.0) <= tol)


def matrix_to_euler(X) -> np.ndarray:
    """Invert the ZYZ chart map; raises GimbalLock near theta in {0, pi}."""
    X = np.asarray(X, dtype=float).reshape(3, 3)
    x33 = X[2, 2]
    if abs(x33) > 1.0 - GIMBAL_TOL:
        raise GimbalLock(f"|X33| = {abs(x33):.15f} exceeds 1 - {GIMBAL_TOL}")
    theta = np.arctan2(np.hypot(X[0, 2], X[1, 2]), x33)
    phi = np.arctan2(X[1, 2], X[0, 2])
    psi = np.arctan2(X[2, 1], -X[2, 0])
    return wrap(SO3_EULER, np.array([phi, theta, psi]))
