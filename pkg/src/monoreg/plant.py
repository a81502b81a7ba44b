"""LTI plant model, passivity certification and equilibrium/IDA computations.

The plant is

    dx/dt = A x + B_u u1 + B_v v,      y1 = C x + D u1,

strictly passive from u1 to y1 when some P = P^T > 0 makes the block matrix

    [[P A + A^T P,  P B_u - C^T], [B_u^T P - C,  -(D + D^T)]]

negative definite.  The controller port is interconnected with u1 = -u,
y1 = y, so closed-loop computations use A x - B_u u + B_v v and y = C x - D u.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError, EquilibriumError, SingularMatrixError
from .numerics import (eig_sym, eigvals_sym, is_positive_definite,
                       solve_linear, sym_part)


@dataclass(frozen=True)
class Plant:
    """Constant-matrix plant (A, B_u, B_v, C, D).

    The disturbance input may have a different width than the control port
    (B_v is n x p); everything else is square in n and m.  D must be
    positive definite in the quadratic-form sense, which strict passivity
    requires anyway.
    """

    A: np.ndarray
    B_u: np.ndarray
    B_v: np.ndarray
    C: np.ndarray
    D: np.ndarray

    def __post_init__(self):
        for name in ("A", "B_u", "B_v", "C", "D"):
            M = np.asarray(getattr(self, name), dtype=float)
            if M.ndim != 2:
                raise ContractError(f"{name} must be a 2-D matrix")
            if not np.all(np.isfinite(M)):
                raise ContractError(f"{name} has non-finite entries")
            object.__setattr__(self, name, M)
        n = self.A.shape[0]
        if self.A.shape != (n, n):
            raise ContractError("A must be square")
        m = self.D.shape[0]
        if self.D.shape != (m, m):
            raise ContractError("D must be square")
        if self.B_u.shape != (n, m):
            raise ContractError(f"B_u must be {n}x{m}, got {self.B_u.shape}")
        if self.C.shape != (m, n):
            raise ContractError(f"C must be {m}x{n}, got {self.C.shape}")
        if self.B_v.shape[0] != n:
            raise ContractError(f"B_v must have {n} rows, got {self.B_v.shape}")
        if not is_positive_definite(self.D, 0.0):
            raise ContractError("D must be positive definite (symmetric-part test)")

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.D.shape[0]

    @property
    def n_dist(self) -> int:
        return self.B_v.shape[1]


@dataclass(frozen=True)
class StorageCertificate:
    """Result of checking a candidate storage matrix against the passivity LMI."""

    P: np.ndarray
    lmi_max_eig: float
    p_min_eig: float
    tol: float = 0.0

    @property
    def valid(self) -> bool:
        return self.lmi_max_eig < -self.tol and self.p_min_eig > self.tol


@dataclass(frozen=True)
class PHForm:
    """Port-Hamiltonian split F = A P^{-1} = J - R."""

    F: np.ndarray
    J: np.ndarray
    R: np.ndarray


@dataclass(frozen=True)
class RegulatorDesign:
    """Set-point data: unforced equilibrium, IDA equilibrium and constant control."""

    y_d: np.ndarray
    v_plus: np.ndarray
    x_bar: np.ndarray
    x_star: np.ndarray
    u_bar: np.ndarray


@dataclass(frozen=True)
class StorageSearch:
    """Outcome of the storage-matrix search.

    status is "feasible" (certificate attached), "infeasible" (the solver
    proved the margin-gamma problem infeasible) or "unknown" (budget or
    numerical failure; explicitly not a proof of infeasibility).
    """

    status: str
    certificate: StorageCertificate | None = None
    detail: str = ""


def passivity_lmi_matrix(plant: Plant, P) -> np.ndarray:
    """The (n+m) x (n+m) symmetric block matrix of the strict passivity test."""
    P = np.asarray(P, dtype=float)
    n, m = plant.n, plant.m
    if P.shape != (n, n):
        raise ContractError(f"P must be {n}x{n}, got {P.shape}")
    top = np.hstack([P @ plant.A + plant.A.T @ P, P @ plant.B_u - plant.C.T])
    bot = np.hstack([plant.B_u.T @ P - plant.C, -(plant.D + plant.D.T)])
    return np.vstack([top, bot])


def verify_passivity(plant: Plant, P, tol: float = 0.0) -> StorageCertificate:
    """Evaluate the passivity LMI for a given symmetric P.

    The certificate is valid iff the LMI block has all eigenvalues below
    -tol and P has all eigenvalues above tol.
    """
    P = np.asarray(P, dtype=float)
    scale = max(np.abs(P).max(), 1.0)
    if P.ndim != 2 or P.shape[0] != P.shape[1] or np.abs(P - P.T).max() > 1e-10 * scale:
        raise ContractError("P must be symmetric")
    block = passivity_lmi_matrix(plant, P)
    lmi_max = float(eig_sym(block).values[-1])
    p_min = float(eig_sym(P).values[0])
    return StorageCertificate(P=P, lmi_max_eig=lmi_max, p_min_eig=p_min, tol=tol)


def find_storage_matrix(plant: Plant, gamma: float = 1e-4) -> StorageSearch:
    """Search for P = P^T >= gamma*I with LMI(P) <= -gamma*I.

    The feasibility problem is the semidefinite program the strict
    passivity assumption delegates to; trace(P) is minimized to keep the
    returned certificate small and the answer deterministic.
    """
    if gamma <= 0:
        raise ContractError("gamma must be positive")
    import cvxpy as cp

    n, m = plant.n, plant.m
    P = cp.Variable((n, n), symmetric=True)
    block = cp.bmat([
        [P @ plant.A + plant.A.T @ P, P @ plant.B_u - plant.C.T],
        [plant.B_u.T @ P - plant.C, -(plant.D + plant.D.T)],
    ])
    constraints = [P >> gamma * np.eye(n), block << -gamma * np.eye(n + m)]
    problem = cp.Problem(cp.Minimize(cp.trace(P)), constraints)
    try:
        problem.solve(solver=cp.CLARABEL)
    except cp.error.SolverError:
        try:
            problem.solve(solver=cp.SCS)
        except Exception as exc:  # solver crash: not a proof of anything
            return StorageSearch(status="unknown", detail=f"solver failure: {exc}")
    except Exception as exc:
        return StorageSearch(status="unknown", detail=f"solver failure: {exc}")

    if problem.status in (cp.INFEASIBLE, cp.INFEASIBLE_INACCURATE):
        return StorageSearch(status="infeasible", detail=f"solver status {problem.status}")
    if P.value is None:
        return StorageSearch(status="unknown", detail=f"solver status {problem.status}")
    P_val = sym_part(np.asarray(P.value, dtype=float))
    cert = verify_passivity(plant, P_val, tol=0.0)
    if not cert.valid:
        return StorageSearch(status="unknown",
                             detail=f"candidate failed validation (lmi_max_eig={cert.lmi_max_eig:g})")
    return StorageSearch(status="feasible", certificate=cert)


def ph_decomposition(plant: Plant, P) -> PHForm:
    """Split F = A P^{-1} into skew J and symmetric R with F = J - R."""
    P = np.asarray(P, dtype=float)
    if not is_positive_definite(P, 0.0):
        raise ContractError("P must be symmetric positive definite")
    # F = A P^{-1} computed row-wise: P F^T = A^T since P is symmetric
    F = solve_linear(P, plant.A.T).T
    J = 0.5 * (F - F.T)
    R = -0.5 * (F + F.T)
    return PHForm(F=F, J=J, R=R)


def unforced_equilibrium(plant: Plant, v_plus) -> np.ndarray:
    """x_bar solving 0 = A x_bar + B_v v_plus."""
    v_plus = np.asarray(v_plus, dtype=float)
    if v_plus.shape != (plant.n_dist,):
        raise ContractError(f"v_plus must have length {plant.n_dist}")
    return solve_linear(plant.A, -plant.B_v @ v_plus)


def ida_equilibrium(plant: Plant, v_plus, y_d):
    """Equilibrium x_star and constant control u_bar delivering y = y_d.

    Solves 0 = A x* - B_u D^{-1} (C x* - y_d) + B_v v+ as one linear system
    and recovers u_bar = D^{-1}(C x* - y_d); the output identity
    C x* - D u_bar = y_d then holds by construction.
    """
    v_plus = np.asarray(v_plus, dtype=float)
    y_d = np.asarray(y_d, dtype=float)
    if y_d.shape != (plant.m,):
        raise ContractError(f"y_d must have length {plant.m}")
    if v_plus.shape != (plant.n_dist,):
        raise ContractError(f"v_plus must have length {plant.n_dist}")
    try:
        Dinv_C = solve_linear(plant.D, plant.C)
        Dinv_yd = solve_linear(plant.D, y_d)
    except SingularMatrixError as exc:
        raise EquilibriumError(f"feedthrough D is singular: {exc}") from exc
    A_cl = plant.A - plant.B_u @ Dinv_C
    rhs = -plant.B_u @ Dinv_yd - plant.B_v @ v_plus
    try:
        x_star = solve_linear(A_cl, rhs)
    except SingularMatrixError as exc:
        raise EquilibriumError(
            "closed-loop matrix A - B_u D^{-1} C is singular: no admissible equilibrium") from exc
    u_bar = solve_linear(plant.D, plant.C @ x_star - y_d)
    return x_star, u_bar


def design_regulator(plant: Plant, v_plus, y_d) -> RegulatorDesign:
    """Assemble the full set-point design (x_bar, x_star, u_bar)."""
    x_bar = unforced_equilibrium(plant, v_plus)
    x_star, u_bar = ida_equilibrium(plant, v_plus, y_d)
    return RegulatorDesign(y_d=np.asarray(y_d, dtype=float),
                           v_plus=np.asarray(v_plus, dtype=float),
                           x_bar=x_bar, x_star=x_star, u_bar=u_bar)


def storage_value(P, x, x_ref=None) -> float:
    """Quadratic storage (x - x_ref)^T P (x - x_ref); x_ref defaults to 0."""
    x = np.asarray(x, dtype=float)
    if x_ref is not None:
        x = x - np.asarray(x_ref, dtype=float)
    return float(x @ (np.asarray(P, dtype=float) @ x))
