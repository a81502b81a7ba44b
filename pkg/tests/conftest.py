"""Shared generators and independent oracles for the test suite.

MONOREG_SEED overrides the RNG seed used by the randomized property tests.
"""

import math
import os

import numpy as np
import pytest

from monoreg.plant import Plant

DEFAULT_SEED = 20250809


def make_rng(offset=0):
    seed = int(os.environ.get("MONOREG_SEED", DEFAULT_SEED))
    return np.random.default_rng(seed + offset)


@pytest.fixture
def rng():
    return make_rng()


def random_spd(rng, n, lo=0.4, hi=2.5):
    """Symmetric positive definite with eigenvalues in [lo, hi]."""
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    return Q @ np.diag(rng.uniform(lo, hi, n)) @ Q.T


def random_skew(rng, n, scale=1.0):
    W = rng.standard_normal((n, n)) * scale
    return 0.5 * (W - W.T)


def make_passive_plant(rng, n=4, m=2, p=None, symmetric_D=False):
    """Strictly passive plant with a known storage matrix.

    Built from A = (J - R_d) P with J skew and R_d > 0, and C = B_u^T P, so
    the passivity block becomes diag(-2 P R_d P, -(D + D^T)) < 0 with no
    off-diagonal coupling; any D with positive definite symmetric part works.
    """
    if p is None:
        p = m
    P = random_spd(rng, n)
    R_d = random_spd(rng, n, 0.3, 1.5)
    J = random_skew(rng, n)
    A = (J - R_d) @ P
    B_u = rng.standard_normal((n, m)) * 0.7
    C = B_u.T @ P
    D_sym = random_spd(rng, m, 0.5, 2.0)
    if symmetric_D:
        D = D_sym
    else:
        D = D_sym + random_skew(rng, m, 0.4)
    B_v = rng.standard_normal((n, p)) * 0.8
    return Plant(A=A, B_u=B_u, B_v=B_v, C=C, D=D), P


def golden_section_min(f, lo, hi, iters=200):
    """Golden-section minimizer of a unimodal scalar function on [lo, hi]."""
    inv_gr = (math.sqrt(5.0) - 1.0) / 2.0
    c = hi - inv_gr * (hi - lo)
    d = lo + inv_gr * (hi - lo)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if fc < fd:
            hi, d, fd = d, c, fc
            c = hi - inv_gr * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + inv_gr * (hi - lo)
            fd = f(d)
    return 0.5 * (lo + hi)


def convex_1d_min(f, lo, hi, h=1e-6):
    """Minimizer of a smooth convex scalar function on [lo, hi].

    Golden section locates the flat bottom only to ~sqrt(eps); a bisection
    on the sign of the central-difference derivative (exact for quadratics)
    pins the stationary point to near machine precision.
    """
    lam = golden_section_min(f, lo, hi, 120)

    def slope(x):
        return (f(x + h) - f(x - h)) / (2.0 * h)

    a = max(lo, lam - 1e-3)
    b = min(hi, lam + 1e-3)
    if slope(a) >= 0.0:
        return lo if a <= lo + 1e-12 else a
    if slope(b) <= 0.0:
        return hi if b >= hi - 1e-12 else b
    for _ in range(100):
        mid = 0.5 * (a + b)
        if slope(mid) < 0.0:
            a = mid
        else:
            b = mid
    return 0.5 * (a + b)


def central_diff_gradient(f, y, h=1e-6):
    """Central finite-difference gradient, the oracle for analytic gradients."""
    y = np.asarray(y, dtype=float)
    g = np.zeros_like(y)
    for i in range(y.shape[0]):
        e = np.zeros_like(y)
        e[i] = h
        g[i] = (f(y + e) - f(y - e)) / (2.0 * h)
    return g


def segment_hvi_oracle(Dinv, g, y_d, phi):
    """Golden-section solution of the segment-restricted inequality.

    On conv{0, y_d} the problem is the 1-D convex minimization of
    Theta(mu) = mu^2 q / 2 - mu <g, y_d> + phi(mu y_d) with
    q = <Dinv y_d, y_d> > 0; the minimizer over [0, 1] is the output.
    """
    y_d = np.asarray(y_d, dtype=float)
    q = float(y_d @ (Dinv @ y_d))
    r = float(np.asarray(g, dtype=float) @ y_d)

    def theta(mu):
        return 0.5 * mu * mu * q - mu * r + phi.value(mu * y_d)

    mu = convex_1d_min(theta, 0.0, 1.0)
    return mu * y_d


def normal_cone_sample(rng, set_, vertex, count=8):
    """Rejection-sample directions in the normal cone of `set_` at `vertex`."""
    verts = set_.vertices()
    found = []
    for _ in range(4000):
        w = rng.standard_normal(set_.dim)
        if np.max(verts @ w - vertex @ w) <= 1e-12:
            found.append(w)
            if len(found) == count:
                break
    return found
