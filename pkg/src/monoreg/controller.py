"""Regularized output-feedback law u = (y - Proj_S(y))/eps + grad phi(y).

The closed-loop output for a state with C x = cx is the unique fixed point

    y = (I + eps D^{-1})^{-1} [Proj_S(y) - eps grad phi(y) + eps D^{-1} cx],

contractive because the left factor shrinks by 1/beta(eps) with

    beta(eps) = sqrt(1 + eps lmin(D^{-1}+D^{-T}) + eps^2 lmin(D^{-T}D^{-1})).

The classical factor (1 + eps L)/beta(eps) certifies the contraction only
for L below lmin((D^{-1}+D^{-T})/2).  For the potentials in this package the
inner map Proj_S - eps grad phi is itself max(1, eps L)-Lipschitz (its a.e.
Jacobian is a symmetric difference of a PSD contraction and eps times a PSD
Hessian), so the loop is well posed whenever max(1, eps L) < beta(eps); the
runtime gate uses this sharper bound while the report still carries the
classical factor.
"""

from dataclasses import dataclass

import numpy as np

from .convex import ConvexSet, Potential
from .errors import ContractError, ConvergenceError, RegularizationError
from .numerics import solve_linear, sym_part

MAX_FIXED_POINT_ITER = 500
DEFAULT_TOL = 1e-12

_BISECT_STEPS = 200
_EPS_CAP = 1e18


@dataclass(frozen=True)
class ContractionReport:
    """Contraction data for one (D, L, eps) triple."""

    beta: float
    factor: float
    epsilon_max: float
    factor_effective: float
    epsilon: float
    lipschitz_grad: float
    lambda1: float  # lmin(D^{-1} + D^{-T})
    lambda2: float  # lmin(D^{-T} D^{-1})


def _contraction_lambdas(D):
    D = np.asarray(D, dtype=float)
    if np.linalg.eigvalsh(sym_part(D)).min() <= 0:
        raise ContractError("D must be positive definite")
    Dinv = solve_linear(D, np.eye(D.shape[0]))
    lambda1 = float(np.linalg.eigvalsh(Dinv + Dinv.T).min())
    lambda2 = float(np.linalg.eigvalsh(Dinv.T @ Dinv).min())
    return lambda1, lambda2


def _beta(eps, lambda1, lambda2):
    return float(np.sqrt(1.0 + eps * lambda1 + eps * eps * lambda2))


def contraction_factor(D, L: float, epsilon: float) -> ContractionReport:
    """Classical contraction factor (1 + eps L)/beta(eps) plus its validity range.

    epsilon_max is the supremum of the interval (0, .) on which the factor
    stays below one, located by bracketing and bisection; it is 0 when the
    factor exceeds one immediately and inf when it never crosses back.
    """
    if L < 0:
        raise ContractError("L must be nonnegative")
    if epsilon < 0:
        raise ContractError("epsilon must be nonnegative")
    lambda1, lambda2 = _contraction_lambdas(D)

    def factor(eps):
        if eps == 0.0:
            return 1.0
        return (1.0 + eps * L) / _beta(eps, lambda1, lambda2)

    # factor(eps)^2 - 1 has the sign of eps*(2L - lambda1) + eps^2*(L^2 - lambda2);
    # the polynomial form is free of the 1 + O(eps) cancellation that makes the
    # ratio itself unreadable near the crossing
    def above_one(eps):
        return eps * (2.0 * L - lambda1) + eps * eps * (L * L - lambda2) >= 0.0

    if 2.0 * L >= lambda1:
        eps_max = 0.0
    else:
        # the factor dips below 1 immediately to the right of 0, so growing
        # the bracket from 0 keeps the sign change inside [lo, hi]
        lo, hi = 0.0, 1e-9
        while hi < _EPS_CAP and not above_one(hi):
            lo, hi = hi, hi * 2.0
        if hi >= _EPS_CAP:
            eps_max = np.inf
        else:
            for _ in range(_BISECT_STEPS):
                mid = 0.5 * (lo + hi)
                if above_one(mid):
                    hi = mid
                else:
                    lo = mid
            eps_max = 0.5 * (lo + hi)

    beta = _beta(epsilon, lambda1, lambda2)
    eff = max(1.0, epsilon * L) / beta if epsilon > 0 else 1.0
    return ContractionReport(beta=beta, factor=factor(epsilon), epsilon_max=eps_max,
                             factor_effective=eff, epsilon=epsilon, lipschitz_grad=L,
                             lambda1=lambda1, lambda2=lambda2)


class RegularizedController:
    """Static output-feedback law; knows S (possibly time varying), phi and eps.

    D enters only through the fixed-point solve for the closed-loop output
    (the control law itself never reads plant data), and is fixed per
    controller so (I + eps D^{-1}) is assembled once.

    The only mutable state is the warm-start output, so confine an instance
    to one simulation; distinct instances can run concurrently.
    """

    def __init__(self, epsilon: float, set_source, phi: Potential, D):
        if epsilon <= 0:
            raise ContractError("epsilon must be positive")
        self.epsilon = float(epsilon)
        self.phi = phi
        self._set_source = set_source
        D = np.asarray(D, dtype=float)
        self.D = D
        self.report = contraction_factor(D, phi.lipschitz_grad, self.epsilon)
        if self.report.factor_effective >= 1.0:
            raise RegularizationError(
                f"no contraction at epsilon={epsilon:g}: "
                f"max(1, eps*L)/beta = {self.report.factor_effective:.6f} >= 1")
        m = D.shape[0]
        self.m = m
        self.Dinv = solve_linear(D, np.eye(m))
        self._M = np.eye(m) + self.epsilon * self.Dinv
        self._Minv = np.linalg.inv(self._M)
        self._warm = None
        #: Newton iterations spent by the most recent closed_loop_output call
        self.last_iterations = 0

    def set_at(self, t: float = 0.0) -> ConvexSet:
        if callable(self._set_source):
            return self._set_source(t)
        return self._set_source

    def reset(self):
        self._warm = None

    def control_value(self, y, t: float = 0.0) -> np.ndarray:
        """u = (y - Proj_S(y))/eps + grad phi(y); uses measured output only."""
        y = np.asarray(y, dtype=float)
        S = self.set_at(t)
        return (y - S.project(y)) / self.epsilon + self.phi.grad(y)

    def closed_loop_output(self, cx, t: float = 0.0, y_init=None,
                           tol: float = DEFAULT_TOL) -> np.ndarray:
        """Fixed point of the output equation for C x = cx.

        Semismooth Newton on G(y) = (I + eps Dinv) y - Proj_S(y)
        + eps grad phi(y) - eps Dinv cx; the Jacobian stays nonsingular
        because its symmetric part dominates eps * sym(Dinv) > 0.  Converges
        in a handful of steps from the warm start; the pre-regularization
        fixed-point residual ||y - f(g(y))|| is what tol bounds.
        """
        if tol <= 0:
            raise ContractError("tol must be positive")
        cx = np.asarray(cx, dtype=float)
        S = self.set_at(t)
        eps = self.epsilon
        Dinv = self.Dinv
        Minv = self._Minv
        phi = self.phi
        e_dc = eps * (Dinv @ cx)
        if y_init is not None:
            y = np.asarray(y_init, dtype=float).copy()
        elif self._warm is not None:
            y = self._warm
        else:
            y = S.project(cx)

        def residual_parts(y):
            G = self._M @ y - S.project(y) + eps * phi.grad(y) - e_dc
            r = Minv @ G
            return G, float(np.sqrt(r @ r))

        G, res = residual_parts(y)
        for iteration in range(MAX_FIXED_POINT_ITER):
            if res <= tol:
                self._warm = y
                self.last_iterations = iteration
                return y
            Jac = self._M + eps * phi.hess(y) - S.proj_jacobian(y)
            step = np.linalg.solve(Jac, -G)
            # backtracking keeps ||G|| monotone across regime boundaries
            scale = 1.0
            for _ in range(40):
                y_new = y + scale * step
                G_new, res_new = residual_parts(y_new)
                if res_new <= res * (1.0 - 1e-4 * scale) or res_new <= tol:
                    break
                scale *= 0.5
            y, G, res = y_new, G_new, res_new
        raise ConvergenceError(
            f"output fixed point exhausted {MAX_FIXED_POINT_ITER} iterations "
            f"(residual {res:g})", residual=res)
