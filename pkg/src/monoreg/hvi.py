"""Hemivariational inequality solver and the exact (equivalent) control.

For a state x the closed-loop output is the unique y in S with

    0 <= <D^{-1} y - D^{-1} C x, sigma - y> + phi(sigma) - phi(y)   for all sigma in S,

well posed because y -> D^{-1} y is strongly monotone when D is positive
definite.  The matching control u = D^{-1}(C x - y) is exact but depends on
the plant parameters and state, so it serves as a test oracle, never as the
implemented law.
"""

from dataclasses import dataclass

import numpy as np

from .convex import ConvexSet, Potential
from .errors import ContractError, ConvergenceError
from .numerics import solve_linear, sym_part

DEFAULT_TOL = 1e-10
MAX_ITER = 50_000


@dataclass(frozen=True)
class HviProblem:
    """Data of one inequality: the map y -> Dinv y, the datum g = Dinv C x, S and phi."""

    Dinv: np.ndarray
    g: np.ndarray
    set_: ConvexSet
    phi: Potential

    def __post_init__(self):
        Dinv = np.asarray(self.Dinv, dtype=float)
        g = np.asarray(self.g, dtype=float)
        object.__setattr__(self, "Dinv", Dinv)
        object.__setattr__(self, "g", g)
        m = self.set_.dim
        if Dinv.shape != (m, m):
            raise ContractError(f"Dinv must be {m}x{m}")
        if g.shape != (m,):
            raise ContractError(f"g must have length {m}")
        if np.linalg.eigvalsh(sym_part(Dinv)).min() <= 0:
            raise ContractError("Dinv must be positive definite (strong monotonicity)")


def hvi_residual(problem: HviProblem, y) -> float:
    """Worst violation of the inequality over the vertex list.

    Nonpositive (up to tolerance) at the solution; linear terms make
    vertices sufficient for the zero potential and a sharp practical check
    for the smooth ones.
    """
    y = np.asarray(y, dtype=float)
    lhs = problem.g - problem.Dinv @ y
    phi_y = problem.phi.value(y)
    worst = -np.inf
    for sigma in problem.set_.vertices():
        worst = max(worst, float(lhs @ (sigma - y)) + phi_y - problem.phi.value(sigma))
    return worst


def solve_hvi(problem: HviProblem, tol: float = DEFAULT_TOL, max_iter: int = MAX_ITER,
              y0=None) -> np.ndarray:
    """Unique solution of the inequality by forward-backward iteration.

    The step tau = lambda_min(sym(Dinv)) / (||Dinv|| + L)^2 makes the
    projected iteration a contraction for the strongly monotone Lipschitz
    operator y -> Dinv y + grad phi(y) - g.
    """
    if tol <= 0:
        raise ContractError("tol must be positive")
    Dinv = problem.Dinv
    phi = problem.phi
    S = problem.set_
    eta = float(np.linalg.eigvalsh(sym_part(Dinv)).min())
    lip = float(np.linalg.norm(Dinv, 2)) + phi.lipschitz_grad
    tau = eta / lip ** 2
    # the projected iteration contracts with factor q, so a displacement of
    # tol*(1-q) pins the iterate within tol of the unique solution; the
    # vertex residual alone can read zero away from the solution when phi
    # is curved, so both conditions gate the return
    q = np.sqrt(max(0.0, 1.0 - (eta / lip) ** 2))
    if y0 is None:
        # warm spot: the projection of C x = D g recovered from the datum
        y = S.project(solve_linear(Dinv, problem.g))
    else:
        y = S.project(np.asarray(y0, dtype=float))
    for _ in range(max_iter):
        y_next = S.project(y - tau * (Dinv @ y + phi.grad(y) - problem.g))
        moved = float(np.linalg.norm(y_next - y))
        y = y_next
        settle = max(tol * (1.0 - q), 64.0 * np.finfo(float).eps * (1.0 + np.linalg.norm(y)))
        if moved <= settle:
            residual = hvi_residual(problem, y)
            if residual <= tol:
                return y
    residual = hvi_residual(problem, y)
    raise ConvergenceError(
        f"hemivariational solve exhausted {max_iter} iterations (residual {residual:g})",
        residual=residual)


def equivalent_control(plant, x, set_: ConvexSet, phi: Potential,
                       tol: float = DEFAULT_TOL):
    """Exact control/output pair (u, y) for state x.

    y solves the inequality and u = D^{-1}(C x - y), so y = C x - D u holds
    by construction.  Oracle-grade: not implementable without the plant
    parameters and the state.
    """
    x = np.asarray(x, dtype=float)
    cx = plant.C @ x
    Dinv = solve_linear(plant.D, np.eye(plant.m))
    problem = HviProblem(Dinv=Dinv, g=Dinv @ cx, set_=set_, phi=phi)
    y = solve_hvi(problem, tol=tol)
    u = Dinv @ (cx - y)
    return u, y
