import numpy as np
import pytest

from conftest import make_passive_plant, make_rng
from monoreg.analysis import (dissipation_matrix, disturbance_bound, omega_halfspace,
                              omega_membership, regulation_condition)
from monoreg.convex import LogSumExp, Segment, ZeroPotential
from monoreg.hvi import HviProblem, solve_hvi
from monoreg.plant import (Plant, ida_equilibrium, passivity_lmi_matrix,
                           unforced_equilibrium, verify_passivity)
from monoreg.scenario import load_fixture

Y_D2 = np.array([-1.0, 2.0])
VPLUS2 = np.array([4.0, 0.0])


@pytest.fixture(scope="module")
def ex1():
    return load_fixture("example1.json")


@pytest.fixture(scope="module")
def ex2():
    return load_fixture("example2.json")


@pytest.fixture(scope="module")
def ex2_design(ex2):
    x_star, u_bar = ida_equilibrium(ex2.plant, VPLUS2, Y_D2)
    return x_star, u_bar


def congruence_oracle(plant, P):
    """Independent computation of T^T (-LMI) T with plain numpy inverses."""
    Dinv = np.linalg.inv(plant.D)
    n, m = plant.n, plant.m
    T = np.block([[np.eye(n), np.zeros((n, m))], [-Dinv @ plant.C, np.eye(m)]])
    return T.T @ (-passivity_lmi_matrix(plant, P)) @ T


class TestRegulationCondition:
    def test_example2_reported_values(self, ex2, ex2_design):
        x_star, _ = ex2_design
        phi = LogSumExp()
        margin = regulation_condition(ex2.plant, x_star, Y_D2, phi)
        rhs = phi.directional_derivative(Y_D2, -Y_D2)
        lhs = margin + rhs
        assert np.isclose(lhs, -9.2810, atol=1e-3)
        assert np.isclose(rhs, -1.8577, atol=1e-4)
        assert np.isclose(margin, -9.2810 - (-1.8577), atol=2e-3)

    def test_example1_condition_polynomial(self, ex1):
        phi = ZeroPotential()
        for f in (-1.0, 0.0, 1.0, 3.0, 5.0, 6.0):
            y_d = np.array([1.0, f])
            x_star, _ = ida_equilibrium(ex1.plant, ex1.disturbance.constant, y_d)
            lhs = regulation_condition(ex1.plant, x_star, y_d, phi)
            assert np.isclose(lhs, -4.0 - 4.0 * f + (5.0 / 6.0) * f * f, atol=1e-6)

    def test_boundary_case_is_exact_zero(self, ex2):
        # y_d chosen as the unforced output: x* = x_bar, so the lhs vanishes
        vp = ex2.disturbance.constant
        x_bar = unforced_equilibrium(ex2.plant, vp)
        y_d = ex2.plant.C @ x_bar
        x_star, _ = ida_equilibrium(ex2.plant, vp, y_d)
        margin = regulation_condition(ex2.plant, x_star, y_d, ZeroPotential())
        assert abs(margin) <= 1e-10


class TestDissipationMatrix:
    def test_scalar_hand_computation(self):
        # A=-1, B=1, C=1, D=1, P=1: LMI = diag(-2, -2), T = [[1,0],[-1,1]]
        # T^T diag(2,2) T = [[4,-2],[-2,2]]
        plant = Plant(A=[[-1.0]], B_u=[[1.0]], B_v=[[1.0]], C=[[1.0]], D=[[1.0]])
        R = dissipation_matrix(plant, np.array([[1.0]]))
        assert np.allclose(R, [[4.0, -2.0], [-2.0, 2.0]])

    def test_example2_is_positive_definite(self, ex2):
        R = dissipation_matrix(ex2.plant, ex2.P)
        assert np.linalg.eigvalsh(R).min() > 0

    def test_congruence_identity_on_random_certified_plants(self):
        rng = make_rng(60)
        for _ in range(20):
            plant, P = make_passive_plant(rng, n=4, m=2)
            assert verify_passivity(plant, P).valid
            R = dissipation_matrix(plant, P)
            R_oracle = congruence_oracle(plant, P)
            scale = max(np.linalg.norm(R_oracle), 1.0)
            assert np.linalg.norm(R - R_oracle) <= 1e-10 * scale
            assert np.linalg.eigvalsh(R).min() > 0  # congruence preserves strictness


class TestOmegaMembership:
    def test_equilibrium_is_member(self, ex2, ex2_design):
        x_star, _ = ex2_design
        assert omega_membership(ex2.plant, LogSumExp(), Y_D2, x_star)

    def test_origin_fails_for_pd_quadratic_form(self, ex2):
        # at x = 0 the condition reads <Dinv y_d, y_d> <= 0, impossible for PD D
        assert not omega_membership(ex2.plant, ZeroPotential(), Y_D2, np.zeros(4))

    def test_halfspace_coefficients(self, ex2):
        a, b = omega_halfspace(ex2.plant, LogSumExp(), Y_D2)
        Dinv = np.linalg.inv(ex2.plant.D)
        assert np.allclose(a, ex2.plant.C.T @ Dinv.T @ Y_D2, atol=1e-12)
        rhs = LogSumExp().directional_derivative(Y_D2, -Y_D2)
        assert np.isclose(b, Dinv @ Y_D2 @ Y_D2 - rhs)

    def test_membership_equivalent_to_hvi_returning_setpoint(self):
        # the half-space is exactly the region where the inequality's unique
        # solution is y_d; sample states on both sides of the boundary
        rng = make_rng(61)
        phi = LogSumExp()
        plant, _ = make_passive_plant(rng, n=4, m=2)
        y_d = np.array([1.0, 1.5])
        seg = Segment(y_d)
        Dinv = np.linalg.inv(plant.D)
        a, b = omega_halfspace(plant, phi, y_d)
        x0 = np.linalg.lstsq(a[None, :], [b], rcond=None)[0]  # boundary point
        checked_in = checked_out = 0
        for _ in range(40):
            x = x0 + rng.standard_normal(4) * 2.0
            member = omega_membership(plant, phi, y_d, x)
            margin = a @ x - b
            if abs(margin) < 1e-6:
                continue
            y = solve_hvi(HviProblem(Dinv=Dinv, g=Dinv @ (plant.C @ x), set_=seg,
                                     phi=phi), tol=1e-12)
            if member:
                checked_in += 1
                assert np.linalg.norm(y - y_d) <= 1e-7
            else:
                checked_out += 1
                assert np.linalg.norm(y - y_d) > 1e-7
        assert checked_in >= 5 and checked_out >= 5


class TestDisturbanceBound:
    def test_example2_report(self, ex2, ex2_design):
        x_star, _ = ex2_design
        rep = disturbance_bound(ex2.plant, ex2.P, x_star, Y_D2, LogSumExp())
        assert rep.valid
        assert rep.omega_margin < 0
        assert rep.disturbance_bound > 0
        # independent recomputation of the bound formula from report pieces
        lam_min_RL = np.linalg.eigvalsh(rep.R_lambda).min()
        lam_max_P = np.linalg.eigvalsh(ex2.P).max()
        gain = np.linalg.eigvalsh(
            ex2.plant.B_v.T @ ex2.P @ ex2.P @ ex2.plant.B_v).max() / rep.alpha
        b_sq = rep.delta_max * lam_min_RL / (2.0 * lam_max_P * gain)
        assert np.isclose(rep.disturbance_bound, np.sqrt(b_sq), rtol=1e-9)

    def test_example2_frozen_regression_values(self, ex2, ex2_design):
        # frozen after the first validated computation; guards drift
        x_star, _ = ex2_design
        rep = disturbance_bound(ex2.plant, ex2.P, x_star, Y_D2, LogSumExp())
        assert np.isclose(rep.delta_max, 0.3980370501612678, rtol=1e-9)
        assert np.isclose(rep.alpha, 0.025971226441891197, rtol=1e-6)
        assert np.isclose(rep.disturbance_bound, 0.0003028591845709654, rtol=1e-6)

    def test_delta_grows_with_slack_squared(self, ex2, ex2_design):
        x_star, _ = ex2_design
        phi = LogSumExp()
        a, b = omega_halfspace(ex2.plant, phi, Y_D2)
        rep1 = disturbance_bound(ex2.plant, ex2.P, x_star, Y_D2, phi)
        # push the equilibrium deeper along the inward normal: slack doubles
        shift = (a @ x_star - b) / (a @ a)
        x_deep = x_star + shift * a
        rep2 = disturbance_bound(ex2.plant, ex2.P, x_deep, Y_D2, phi)
        assert np.isclose(rep2.slack, 2.0 * rep1.slack, rtol=1e-9)
        assert np.isclose(rep2.delta_max, 4.0 * rep1.delta_max, rtol=1e-9)

    def test_bound_vanishes_as_alpha_vanishes(self, ex2, ex2_design):
        # limit check on the closed-form expression itself
        x_star, _ = ex2_design
        rep = disturbance_bound(ex2.plant, ex2.P, x_star, Y_D2, LogSumExp())
        lam_max_P = np.linalg.eigvalsh(ex2.P).max()
        gain0 = np.linalg.eigvalsh(ex2.plant.B_v.T @ ex2.P @ ex2.P @ ex2.plant.B_v).max()
        for alpha in (1e-4, 1e-6, 1e-8):
            R_lam = rep.R.copy()
            R_lam[:4, :4] -= alpha * np.eye(4)
            lam = np.linalg.eigvalsh(R_lam).min()
            b_sq = rep.delta_max * lam * alpha / (2.0 * lam_max_P * gain0)
            assert b_sq <= rep.disturbance_bound ** 2
            assert b_sq <= alpha * lam * 10.0  # -> 0 linearly in alpha

    def test_ellipsoid_boundary_stays_in_halfspace(self, ex2, ex2_design):
        x_star, _ = ex2_design
        phi = LogSumExp()
        rep = disturbance_bound(ex2.plant, ex2.P, x_star, Y_D2, phi)
        rng = make_rng(62)
        L = np.linalg.cholesky(ex2.P)
        count = 0
        for _ in range(1000):
            w = rng.standard_normal(4)
            w /= np.linalg.norm(w)
            # boundary point of {(x - x*)^T P (x - x*) = delta_max}
            x = x_star + np.sqrt(rep.delta_max * (1.0 - 1e-12)) * np.linalg.solve(L.T, w)
            assert omega_membership(ex2.plant, phi, Y_D2, x)
            count += 1
        assert count == 1000

    def test_invalid_when_condition_fails(self, ex2):
        # x deep on the wrong side of the half-space: margin > 0 -> invalid
        phi = LogSumExp()
        a, _ = omega_halfspace(ex2.plant, phi, Y_D2)
        x_bad = -10.0 * a / np.linalg.norm(a)
        rep = disturbance_bound(ex2.plant, ex2.P, x_bad, Y_D2, phi)
        assert not rep.valid
        assert rep.delta_max == 0.0
        assert rep.disturbance_bound == 0.0
