"""Convex sets, projections, normal cones and convex potentials.

Three set variants (segment conv{0, y_d}, axis-aligned box, vertex hull)
and three potential variants (zero, log-sum-exp, quadratic).  Segments get
closed-form projections; boxes and hulls fall back to projected gradient.
"""

import numpy as np

from .errors import ContractError, ConvergenceError
from .numerics import sym_part

#: membership tolerance (absolute) used by `contains`
MEMBERSHIP_ATOL = 1e-9

_PG_TOL = 1e-12
_PG_MAX_ITER = 10_000


def _as_vector(z, m=None, name="vector"):
    z = np.asarray(z, dtype=float)
    if z.ndim != 1:
        raise ContractError(f"{name} must be 1-D, got shape {z.shape}")
    if m is not None and z.shape[0] != m:
        raise ContractError(f"{name} has dimension {z.shape[0]}, expected {m}")
    return z


def _check_weight(M, m):
    M = np.asarray(M, dtype=float)
    if M.shape != (m, m):
        raise ContractError(f"weight matrix must be {m}x{m}, got {M.shape}")
    if np.linalg.eigvalsh(sym_part(M)).min() <= 0:
        raise ContractError("weight matrix must be positive definite")
    return M


class ConvexSet:
    """Base class.  Subclasses expose vertices and (weighted) projections."""

    dim: int

    def vertices(self) -> np.ndarray:
        """Vertex list as a (k, m) array."""
        raise NotImplementedError

    def project(self, z):
        """Euclidean projection of z onto the set."""
        return self.project_weighted(z, np.eye(self.dim))

    def project_weighted(self, z, M):
        """Projection of z in the norm induced by the SPD matrix M."""
        raise NotImplementedError

    def proj_jacobian(self, y):
        """A.e. Jacobian of the Euclidean projection at y (symmetric PSD, <= I)."""
        raise NotImplementedError

    def distance(self, y):
        y = _as_vector(y, self.dim, "y")
        return float(np.linalg.norm(y - self.project(y)))

    def contains(self, y, tol=MEMBERSHIP_ATOL):
        return self.distance(y) <= tol


class Segment(ConvexSet):
    """conv{0, y_d}: the segment from the origin to the set-point."""

    def __init__(self, y_d):
        y_d = _as_vector(y_d, name="y_d")
        if not np.any(y_d):
            raise ContractError("segment endpoint y_d must be nonzero")
        self.y_d = y_d
        self.dim = y_d.shape[0]
        self._nn = float(y_d @ y_d)

    def vertices(self):
        return np.vstack([np.zeros(self.dim), self.y_d])

    def barycentric(self, z):
        """Euclidean line parameter of z (clamped projection uses clip of this)."""
        z = _as_vector(z, self.dim, "z")
        return float(z @ self.y_d) / self._nn

    def project(self, z):
        z = _as_vector(z, self.dim, "z")
        lam = min(1.0, max(0.0, float(z @ self.y_d) / self._nn))
        return lam * self.y_d

    def project_weighted(self, z, M):
        z = _as_vector(z, self.dim, "z")
        M = _check_weight(M, self.dim)
        num = float(z @ (M @ self.y_d) + self.y_d @ (M @ z)) * 0.5
        den = float(self.y_d @ (M @ self.y_d))
        lam = min(1.0, max(0.0, num / den))
        return lam * self.y_d

    def proj_jacobian(self, y):
        t = self.barycentric(y)
        if 0.0 < t < 1.0:
            return np.outer(self.y_d, self.y_d) / self._nn
        return np.zeros((self.dim, self.dim))


class Box(ConvexSet):
    """Axis-aligned box {y : lower <= y <= upper}."""

    def __init__(self, lower, upper):
        lower = _as_vector(lower, name="lower")
        upper = _as_vector(upper, len(lower), name="upper")
        if np.any(lower > upper):
            raise ContractError("box requires lower <= upper componentwise")
        self.lower = lower
        self.upper = upper
        self.dim = lower.shape[0]

    def vertices(self):
        m = self.dim
        corners = np.empty((2 ** m, m))
        for i in range(2 ** m):
            bits = [(i >> j) & 1 for j in range(m)]
            corners[i] = np.where(bits, self.upper, self.lower)
        return corners

    def project(self, z):
        z = _as_vector(z, self.dim, "z")
        return np.clip(z, self.lower, self.upper)

    def project_weighted(self, z, M):
        z = _as_vector(z, self.dim, "z")
        M = _check_weight(M, self.dim)
        Ms = sym_part(M)
        step = 1.0 / np.linalg.eigvalsh(Ms).max()
        y = self.project(z)
        for _ in range(_PG_MAX_ITER):
            y_new = np.clip(y - step * (Ms @ (y - z)), self.lower, self.upper)
            if np.abs(y_new - y).max() <= _PG_TOL:
                return y_new
            y = y_new
        raise ConvergenceError("weighted box projection did not converge",
                               residual=float(np.abs(y_new - y).max()))

    def proj_jacobian(self, y):
        y = _as_vector(y, self.dim, "y")
        free = (y > self.lower) & (y < self.upper)
        return np.diag(free.astype(float))


class Hull(ConvexSet):
    """Convex hull of an explicit vertex list."""

    def __init__(self, vertices):
        V = np.asarray(vertices, dtype=float)
        if V.ndim != 2 or V.shape[0] == 0:
            raise ContractError("hull needs a non-empty (k, m) vertex array")
        self._V = V
        self.dim = V.shape[1]

    def vertices(self):
        return self._V.copy()

    def _solve_weights(self, z, M):
        # least squares over the simplex in convex-combination weights,
        # projected gradient with fixed step 1/lambda_max(V M V^T)
        V = self._V
        k = V.shape[0]
        Ms = sym_part(M)
        G = V @ Ms @ V.T
        c = V @ (Ms @ z)
        step = 1.0 / max(np.linalg.eigvalsh(G).max(), np.finfo(float).tiny)
        w = np.full(k, 1.0 / k)
        for _ in range(_PG_MAX_ITER):
            w_new = _project_simplex(w - step * (G @ w - c))
            if np.abs(w_new - w).max() <= _PG_TOL:
                return w_new
            w = w_new
        raise ConvergenceError("hull projection did not converge",
                               residual=float(np.abs(w_new - w).max()))

    def project_weighted(self, z, M):
        z = _as_vector(z, self.dim, "z")
        M = _check_weight(M, self.dim)
        w = self._solve_weights(z, M)
        return self._V.T @ w

    def proj_jacobian(self, y):
        y = _as_vector(y, self.dim, "y")
        w = self._solve_weights(y, np.eye(self.dim))
        p = self._V.T @ w
        if np.linalg.norm(y - p) <= MEMBERSHIP_ATOL:
            return np.eye(self.dim)
        active = self._V[w > 1e-10]
        if active.shape[0] <= 1:
            return np.zeros((self.dim, self.dim))
        # projector onto the span of the active face directions
        U = (active[1:] - active[0]).T
        Q, _ = np.linalg.qr(U)
        rank = np.linalg.matrix_rank(U, tol=1e-12)
        Q = Q[:, :rank]
        return Q @ Q.T


def _project_simplex(w):
    """Euclidean projection onto the probability simplex (sort algorithm)."""
    u = np.sort(w)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, len(w) + 1)
    rho = np.nonzero(u - css / idx > 0)[0][-1]
    theta = css[rho] / (rho + 1.0)
    return np.maximum(w - theta, 0.0)


def normal_cone_contains(set_, y, u, tol):
    """True iff y is in the set (to tol) and u lies in the normal cone at y.

    Membership of u reduces to <u, sigma - y> <= tol over the vertex list,
    which is exact because the inner product is linear in sigma.
    """
    y = _as_vector(y, set_.dim, "y")
    u = _as_vector(u, set_.dim, "u")
    if set_.distance(y) > tol:
        return False
    return bool(np.max(set_.vertices() @ u - y @ u) <= tol)


class Potential:
    """Convex potential with analytic gradient, Hessian and directional derivative."""

    #: Lipschitz constant of the gradient
    lipschitz_grad: float

    def value(self, y) -> float:
        raise NotImplementedError

    def grad(self, y) -> np.ndarray:
        raise NotImplementedError

    def hess(self, y) -> np.ndarray:
        raise NotImplementedError

    def directional_derivative(self, y0, d) -> float:
        """All implemented variants are smooth, so this is <grad(y0), d>."""
        y0 = np.asarray(y0, dtype=float)
        d = np.asarray(d, dtype=float)
        return float(self.grad(y0) @ d)


class ZeroPotential(Potential):
    lipschitz_grad = 0.0

    def value(self, y):
        return 0.0

    def grad(self, y):
        return np.zeros_like(np.asarray(y, dtype=float))

    def hess(self, y):
        m = np.asarray(y).shape[0]
        return np.zeros((m, m))


class LogSumExp(Potential):
    """phi(y) = log(sum_i exp(y_i)); gradient is the softmax."""

    # standard softmax bound; the exact constant is <= 1/2 but 1 is recorded
    # so the contraction check stays on the safe side
    lipschitz_grad = 1.0

    def value(self, y):
        y = np.asarray(y, dtype=float)
        c = y.max()
        return float(c + np.log(np.exp(y - c).sum()))

    def grad(self, y):
        y = np.asarray(y, dtype=float)
        e = np.exp(y - y.max())
        return e / e.sum()

    def hess(self, y):
        s = self.grad(y)
        return np.diag(s) - np.outer(s, s)


class QuadraticPotential(Potential):
    """phi(y) = (1/2) y^T Q y with Q symmetric PSD."""

    def __init__(self, Q):
        Q = np.asarray(Q, dtype=float)
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
            raise ContractError("Q must be square")
        if np.abs(Q - Q.T).max() > 1e-12 * max(np.abs(Q).max(), 1.0):
            raise ContractError("Q must be symmetric")
        eigs = np.linalg.eigvalsh(Q)
        if eigs.min() < -1e-12 * max(abs(eigs.max()), 1.0):
            raise ContractError("Q must be positive semidefinite")
        self.Q = Q
        self.lipschitz_grad = float(max(eigs.max(), 0.0))

    def value(self, y):
        y = np.asarray(y, dtype=float)
        return float(0.5 * y @ (self.Q @ y))

    def grad(self, y):
        return self.Q @ np.asarray(y, dtype=float)

    def hess(self, y):
        return self.Q.copy()


def potential_value(phi, y):
    return phi.value(y)


def potential_grad(phi, y):
    return phi.grad(y)


def directional_derivative(phi, y0, d):
    return phi.directional_derivative(y0, d)


def project(set_, z):
    return set_.project(z)


def project_weighted(set_, z, M):
    return set_.project_weighted(z, M)
