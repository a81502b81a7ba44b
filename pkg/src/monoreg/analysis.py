"""Robustness certification: half-space condition, dissipation matrices, bounds.

The regulation half-space for a set-point y_d is

    Omega_d = { x : <D^{-1}(y_d - C x), y_d> <= Dphi(y_d, -y_d) },

equivalently a^T x >= b with a = C^T D^{-T} y_d and
b = <D^{-1} y_d, y_d> - Dphi(y_d, -y_d).  States inside it already produce
y = y_d.  The dissipation matrix R is the congruence T^T (-LMI) T with
T = [[I, 0], [-D^{-1} C, I]]; shrinking its state block by alpha*I buys a
bound on the admissible fast disturbance:

    B^2 = delta_max * lmin(R_alpha) * alpha / (2 lmax(P) lmax(B_v^T P P B_v)),

where delta_max is the largest level for which the storage ellipsoid
{(x - x*)^T P (x - x*) <= delta} fits inside the half-space.
"""

import math
from dataclasses import dataclass

import numpy as np

from .convex import Potential
from .errors import ContractError
from .numerics import eig_sym, solve_linear
from .plant import Plant, passivity_lmi_matrix

_GOLDEN_STEPS = 200


@dataclass(frozen=True)
class RobustnessReport:
    """Everything cmd_analyze prints; eigen extremes kept for auditability."""

    omega_margin: float
    R: np.ndarray
    alpha: float
    R_lambda: np.ndarray
    delta_max: float
    disturbance_bound: float
    slack: float
    lambda_min_R: float
    lambda_min_R_lambda: float
    lambda_max_P: float
    lambda_max_gain: float  # lmax(B_v^T P P B_v), before the 1/alpha factor

    @property
    def valid(self) -> bool:
        return (self.omega_margin < 0 and self.lambda_min_R_lambda > 0
                and self.delta_max > 0 and self.disturbance_bound > 0)


def regulation_condition(plant: Plant, x_star, y_d, phi: Potential) -> float:
    """<D^{-1}(y_d - C x*), y_d> - Dphi(y_d, -y_d); negative means satisfied."""
    x_star = np.asarray(x_star, dtype=float)
    y_d = np.asarray(y_d, dtype=float)
    lhs = float(solve_linear(plant.D, y_d - plant.C @ x_star) @ y_d)
    rhs = phi.directional_derivative(y_d, -y_d)
    return lhs - rhs


def omega_halfspace(plant: Plant, phi: Potential, y_d):
    """Coefficients (a, b) of Omega_d written as a^T x >= b."""
    y_d = np.asarray(y_d, dtype=float)
    Dinv_yd = solve_linear(plant.D, y_d)
    a = plant.C.T @ solve_linear(plant.D.T, y_d)
    b = float(Dinv_yd @ y_d) - phi.directional_derivative(y_d, -y_d)
    return a, b


def omega_membership(plant: Plant, phi: Potential, y_d, x) -> bool:
    """True iff x lies in the half-space Omega_d."""
    x = np.asarray(x, dtype=float)
    a, b = omega_halfspace(plant, phi, y_d)
    return bool(a @ x >= b)


def dissipation_matrix(plant: Plant, P) -> np.ndarray:
    """R = T^T (-LMI(P)) T with T = [[I, 0], [-D^{-1} C, I]].

    Positive definite whenever the strict passivity LMI holds, because a
    congruence by a nonsingular T preserves definiteness.
    """
    n, m = plant.n, plant.m
    block = -passivity_lmi_matrix(plant, P)
    Dinv_C = solve_linear(plant.D, plant.C)
    T = np.block([[np.eye(n), np.zeros((n, m))], [-Dinv_C, np.eye(m)]])
    R = T.T @ block @ T
    return 0.5 * (R + R.T)


def _bound_squared(R, alpha, n, delta_max, lam_max_P, lam_max_gain):
    R_lam = R.copy()
    R_lam[:n, :n] -= alpha * np.eye(n)
    lam_min = float(np.linalg.eigvalsh(R_lam).min())
    if lam_min <= 0 or lam_max_gain <= 0:
        return -math.inf, R_lam, lam_min
    return (delta_max * lam_min * alpha / (2.0 * lam_max_P * lam_max_gain),
            R_lam, lam_min)


def disturbance_bound(plant: Plant, P, x_star, y_d, phi: Potential) -> RobustnessReport:
    """Admissible disturbance bound and attraction-ellipsoid size.

    Lambda is restricted to alpha*I with alpha tuned by golden section on
    (0, lmin(R)); the product alpha * lmin(R_alpha) is log-concave there, so
    the 1-D search is safe.  delta_max comes from the closed-form support
    condition of the ellipsoid against the half-space.
    """
    P = np.asarray(P, dtype=float)
    x_star = np.asarray(x_star, dtype=float)
    y_d = np.asarray(y_d, dtype=float)
    n = plant.n

    margin = regulation_condition(plant, x_star, y_d, phi)
    R = dissipation_matrix(plant, P)
    eig_R = eig_sym(R).values
    lam_min_R = float(eig_R[0])
    lam_max_P = float(eig_sym(P).values[-1])
    gain = plant.B_v.T @ P @ P @ plant.B_v
    lam_max_gain = float(eig_sym(gain).values[-1])

    a, b = omega_halfspace(plant, phi, y_d)
    slack = float(a @ x_star - b)
    if slack > 0:
        delta_max = slack ** 2 / float(a @ solve_linear(P, a))
    else:
        delta_max = 0.0

    if lam_min_R <= 0 or delta_max <= 0:
        R_lam = R.copy()
        return RobustnessReport(omega_margin=margin, R=R, alpha=0.0, R_lambda=R_lam,
                                delta_max=delta_max, disturbance_bound=0.0, slack=slack,
                                lambda_min_R=lam_min_R, lambda_min_R_lambda=0.0,
                                lambda_max_P=lam_max_P, lambda_max_gain=lam_max_gain)

    lo, hi = 1e-12 * lam_min_R, lam_min_R * (1.0 - 1e-6)
    inv_gr = (math.sqrt(5.0) - 1.0) / 2.0

    def objective(alpha):
        return _bound_squared(R, alpha, n, delta_max, lam_max_P, lam_max_gain)[0]

    c = hi - inv_gr * (hi - lo)
    d = lo + inv_gr * (hi - lo)
    fc, fd = objective(c), objective(d)
    for _ in range(_GOLDEN_STEPS):
        if fc < fd:
            lo, c, fc = c, d, fd
            d = lo + inv_gr * (hi - lo)
            fd = objective(d)
        else:
            hi, d, fd = d, c, fc
            c = hi - inv_gr * (hi - lo)
            fc = objective(c)
    alpha = 0.5 * (lo + hi)
    b_sq, R_lam, lam_min_R_lam = _bound_squared(R, alpha, n, delta_max,
                                                lam_max_P, lam_max_gain)
    bound = math.sqrt(b_sq) if b_sq > 0 else 0.0
    return RobustnessReport(omega_margin=margin, R=R, alpha=alpha, R_lambda=R_lam,
                            delta_max=delta_max, disturbance_bound=bound, slack=slack,
                            lambda_min_R=lam_min_R, lambda_min_R_lambda=lam_min_R_lam,
                            lambda_max_P=lam_max_P, lambda_max_gain=lam_max_gain)
