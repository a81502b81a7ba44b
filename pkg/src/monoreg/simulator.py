"""Closed-loop integration with disturbance generators and per-step diagnostics.

Fixed-step classical RK4 on dx/dt = A x - B_u u + B_v v(t), where u comes
from the regularized controller's output fixed point at every stage (warm
started stage to stage).  Each accepted sample records the output, control,
disturbance, shifted storage H2, supply rate <u, y>, the distance of y to
the constraint set and membership of the regulation half-space.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import hvi
from .controller import RegularizedController
from .errors import ContractError, ConvergenceError, ScenarioError
from .numerics import lu_factorize, lu_solve
from .plant import Plant

WAVEFORMS = ("sine", "sawtooth", "square_sign_sin", "product_sine_square")


@dataclass(frozen=True)
class DisturbanceComponent:
    channel: int
    waveform: str
    amplitude: float
    frequency_hz: float
    phase: float = 0.0

    def __post_init__(self):
        if self.waveform not in WAVEFORMS:
            raise ContractError(f"unknown waveform {self.waveform!r}; pick one of {WAVEFORMS}")
        if self.amplitude < 0:
            raise ContractError("amplitude must be nonnegative")
        if self.frequency_hz <= 0:
            raise ContractError("frequency must be positive")

    def value(self, t: float) -> float:
        a, f, ph = self.amplitude, self.frequency_hz, self.phase
        if self.waveform == "sine":
            return a * math.sin(2.0 * math.pi * f * t + ph)
        if self.waveform == "sawtooth":
            # rising ramp from 0 to a, period 1/f
            return a * ((f * t + ph) % 1.0)
        if self.waveform == "square_sign_sin":
            return a * _sign(math.sin(math.pi * t))
        # product_sine_square: smooth sine flipped by the fixed square factor
        return a * math.sin(2.0 * math.pi * f * t) * _sign(math.sin(math.pi * t))


def _sign(x: float) -> float:
    return 1.0 if x > 0 else (-1.0 if x < 0 else 0.0)


@dataclass(frozen=True)
class DisturbanceSpec:
    """v(t) = constant + sum of waveform components (per channel)."""

    constant: np.ndarray
    components: tuple = ()

    def __post_init__(self):
        c = np.asarray(self.constant, dtype=float)
        object.__setattr__(self, "constant", c)
        object.__setattr__(self, "components", tuple(self.components))
        for comp in self.components:
            if not 0 <= comp.channel < c.shape[0]:
                raise ContractError(f"component channel {comp.channel} out of range")

    @property
    def dim(self) -> int:
        return self.constant.shape[0]

    def fluctuation(self, t: float) -> np.ndarray:
        """nu(t): the non-constant part."""
        nu = np.zeros(self.dim)
        for comp in self.components:
            nu[comp.channel] += comp.value(t)
        return nu

    def scaled(self, factor: float) -> "DisturbanceSpec":
        """Same constant part, fluctuation amplitudes multiplied by factor."""
        comps = tuple(DisturbanceComponent(c.channel, c.waveform,
                                           c.amplitude * factor, c.frequency_hz, c.phase)
                      for c in self.components)
        return DisturbanceSpec(constant=self.constant.copy(), components=comps)


def disturbance_eval(spec: DisturbanceSpec, t: float) -> np.ndarray:
    """v(t) = v_plus + sum of components."""
    if not math.isfinite(t):
        raise ContractError("t must be finite")
    return spec.constant + spec.fluctuation(t)


class ConstantReference:
    """Fixed set-point."""

    def __init__(self, y_d):
        self.base = np.asarray(y_d, dtype=float)

    time_varying = False

    def y_d(self, t: float) -> np.ndarray:
        return self.base

    def sample_values(self):
        return [self.base]


class SawtoothReference:
    """One channel of the set-point follows offset + amplitude * frac(f t + phase)."""

    time_varying = True

    def __init__(self, base, channel, amplitude, frequency_hz, phase=0.0, offset=0.0):
        self.base = np.asarray(base, dtype=float)
        if not 0 <= channel < self.base.shape[0]:
            raise ContractError("reference channel out of range")
        if frequency_hz <= 0:
            raise ContractError("reference frequency must be positive")
        self.channel = int(channel)
        self.amplitude = float(amplitude)
        self.frequency_hz = float(frequency_hz)
        self.phase = float(phase)
        self.offset = float(offset)

    def y_d(self, t: float) -> np.ndarray:
        y = self.base.copy()
        y[self.channel] = self.offset + self.amplitude * ((self.frequency_hz * t + self.phase) % 1.0)
        return y

    def sample_values(self, count: int = 17):
        """Representative set-points across the swept range (for feasibility checks)."""
        vals = []
        for k in range(count):
            y = self.base.copy()
            y[self.channel] = self.offset + self.amplitude * k / (count - 1)
            vals.append(y)
        return vals

    def discontinuity_period(self) -> float:
        return 1.0 / self.frequency_hz


@dataclass
class Scenario:
    """Everything one closed-loop run needs."""

    plant: Plant
    controller: RegularizedController
    disturbance: DisturbanceSpec
    reference: object
    x0: np.ndarray
    t0: float
    tf: float
    dt: float
    P: np.ndarray | None = None

    def __post_init__(self):
        self.x0 = np.asarray(self.x0, dtype=float)
        if self.x0.shape != (self.plant.n,):
            raise ScenarioError(f"x0 must have length {self.plant.n}")
        if self.disturbance.dim != self.plant.n_dist:
            raise ScenarioError("disturbance dimension does not match B_v")
        if not self.tf > self.t0:
            raise ScenarioError("tf must exceed t0")
        if self.dt <= 0:
            raise ScenarioError("dt must be positive")
        if self.dt > (self.tf - self.t0) / 10.0:
            raise ScenarioError("dt must be at most (tf - t0)/10")
        if self.P is not None:
            self.P = np.asarray(self.P, dtype=float)


@dataclass
class Trajectory:
    """Time-indexed closed-loop records plus the measured reach time."""

    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    u: np.ndarray
    v: np.ndarray
    H2: np.ndarray
    supply: np.ndarray
    dist_s: np.ndarray
    omega: np.ndarray
    reach_time: float | None = None
    y_ref: np.ndarray | None = None

    def write_csv(self, stream):
        n = self.x.shape[1]
        m = self.y.shape[1]
        p = self.v.shape[1]
        header = (["t"] + [f"x{i}" for i in range(n)] + [f"y{i}" for i in range(m)]
                  + [f"u{i}" for i in range(m)] + [f"v{i}" for i in range(p)]
                  + ["H2", "supply", "distS", "inOmega"])
        stream.write(",".join(header) + "\n")
        for k in range(self.t.shape[0]):
            row = [self.t[k], *self.x[k], *self.y[k], *self.u[k], *self.v[k],
                   self.H2[k], self.supply[k], self.dist_s[k]]
            stream.write(",".join(f"{val:.17g}" for val in row))
            stream.write(f",{int(self.omega[k])}\n")


def settle_index(flags) -> int | None:
    """First index from which flags stay true, forgiving single-sample dips."""
    flags = np.asarray(flags, dtype=bool).copy()
    for k in range(1, flags.shape[0] - 1):
        if not flags[k] and flags[k - 1] and flags[k + 1]:
            flags[k] = True
    if not flags[-1]:
        return None
    false_idx = np.nonzero(~flags)[0]
    if false_idx.size == 0:
        return 0 if flags[0] else None
    return int(false_idx[-1]) + 1


def closed_loop_rhs(plant: Plant, ctrl: RegularizedController, x, t: float,
                    spec: DisturbanceSpec) -> np.ndarray:
    """dx/dt = A x - B_u u + B_v v(t) with u from the regularized law."""
    x = np.asarray(x, dtype=float)
    cx = plant.C @ x
    y = ctrl.closed_loop_output(cx, t=t)
    u = ctrl.control_value(y, t=t)
    return plant.A @ x - plant.B_u @ u + plant.B_v @ disturbance_eval(spec, t)


def integrate(scenario: Scenario, mode: str = "regularized",
              hvi_tol: float = 1e-9) -> Trajectory:
    """Run the closed loop with fixed-step RK4 and per-sample diagnostics.

    mode "regularized" is the implementable loop; mode "equivalent" replaces
    the controller by the exact hemivariational solution (oracle comparison
    only; it reads the plant state and parameters).
    """
    if mode not in ("regularized", "equivalent"):
        raise ContractError("mode must be 'regularized' or 'equivalent'")
    plant = scenario.plant
    ctrl = scenario.controller
    spec = scenario.disturbance
    ref = scenario.reference
    A, B_u, B_v, C = plant.A, plant.B_u, plant.B_v, plant.C
    eps = ctrl.epsilon
    phi = ctrl.phi
    Dinv = ctrl.Dinv

    n_steps = int(round((scenario.tf - scenario.t0) / scenario.dt))
    dt = scenario.dt
    t0 = scenario.t0

    # x*(t) via one LU of the closed-loop matrix; reused for all samples
    A_cl = A - B_u @ (Dinv @ C)
    try:
        acl_lu = lu_factorize(A_cl)
    except Exception:
        acl_lu = None
    Bv_vplus = B_v @ spec.constant

    ctrl.reset()
    hvi_warm = [None]

    def output_and_control(x, t):
        cx = C @ x
        if mode == "regularized":
            y = ctrl.closed_loop_output(cx, t=t)
            u = ctrl.control_value(y, t=t)
        else:
            S = ctrl.set_at(t)
            Dinv_cx = Dinv @ cx
            problem = hvi.HviProblem(Dinv=Dinv, g=Dinv_cx, set_=S, phi=phi)
            y = hvi.solve_hvi(problem, tol=hvi_tol, y0=hvi_warm[0])
            hvi_warm[0] = y
            u = Dinv_cx - Dinv @ y
        return y, u

    def rhs(x, t):
        if not np.all(np.isfinite(x)):
            raise ConvergenceError(f"state became non-finite at t={t:.6g}")
        try:
            y, u = output_and_control(x, t)
        except ConvergenceError as exc:
            raise ConvergenceError(f"output solve failed at t={t:.6g}: {exc}",
                                   residual=exc.residual) from exc
        return A @ x - B_u @ u + B_v @ disturbance_eval(spec, t), y, u

    n, m, p = plant.n, plant.m, plant.n_dist
    N = n_steps + 1
    T = np.empty(N)
    X = np.empty((N, n))
    Y = np.empty((N, m))
    U = np.empty((N, m))
    V = np.empty((N, p))
    H2 = np.full(N, np.nan)
    SUP = np.empty(N)
    DIST = np.empty(N)
    OMEGA = np.zeros(N, dtype=bool)
    YREF = np.empty((N, m))

    P = scenario.P
    x = scenario.x0.copy()
    for k in range(N):
        t = t0 + k * dt
        dx1, y, u = rhs(x, t)
        y_d = ref.y_d(t)
        S = ctrl.set_at(t)
        T[k] = t
        X[k] = x
        Y[k] = y
        U[k] = u
        V[k] = disturbance_eval(spec, t)
        YREF[k] = y_d
        SUP[k] = float(u @ y)
        DIST[k] = float(np.linalg.norm(y - S.project(y)))
        lhs = float((Dinv @ (y_d - C @ x)) @ y_d)
        OMEGA[k] = lhs <= phi.directional_derivative(y_d, -y_d)
        if P is not None and acl_lu is not None:
            x_star = lu_solve(acl_lu, -B_u @ (Dinv @ y_d) - Bv_vplus)
            dxs = x - x_star
            H2[k] = float(dxs @ (P @ dxs))
        if k == N - 1:
            break
        dx2 = rhs(x + 0.5 * dt * dx1, t + 0.5 * dt)[0]
        dx3 = rhs(x + 0.5 * dt * dx2, t + 0.5 * dt)[0]
        dx4 = rhs(x + dt * dx3, t + dt)[0]
        x = x + (dt / 6.0) * (dx1 + 2.0 * dx2 + 2.0 * dx3 + dx4)

    idx = settle_index(OMEGA)
    reach = float(T[idx]) if idx is not None else None
    return Trajectory(t=T, x=X, y=Y, u=U, v=V, H2=H2, supply=SUP, dist_s=DIST,
                      omega=OMEGA, reach_time=reach, y_ref=YREF)
