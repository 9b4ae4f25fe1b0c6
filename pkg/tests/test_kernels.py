"""Cross-validation of the jitted and pure-numpy kernel backends.

The two implementations are written independently (loops vs vectorized
slicing), so agreement to near machine precision is a real check.
"""
import numpy as np
import pytest

from ksblow import kernels
from ksblow.grid import build_grid
from ksblow.kernels import _numba as knb
from ksblow.kernels import _numpy as knp

RNG = np.random.default_rng(7)


def _geometry(n=2, N=64, clustering=10.0):
    g = build_grid(n, 1.0, N, clustering=clustering)
    return g.rn1_face, g.w1d, g.h_face


def test_dispatch_selected_a_backend():
    assert kernels.backend_name() in ("numba", "numpy")


def test_thomas_agrees_and_solves():
    m = 40
    lo = RNG.normal(size=m) * 0.3
    up = RNG.normal(size=m) * 0.3
    diag = 2.0 + np.abs(RNG.normal(size=m))
    rhs = RNG.normal(size=m)
    xa = knb.thomas(lo, diag, up, rhs)
    xb = knp.thomas(lo, diag, up, rhs)
    assert np.allclose(xa, xb, rtol=1e-12, atol=1e-14)
    # residual against a dense matrix oracle
    a = np.diag(diag) + np.diag(up[:-1], 1) + np.diag(lo[1:], -1)
    assert np.max(np.abs(a @ xa - rhs)) < 1e-12


def test_advect_upwind_agreement():
    rn1, w1d, h = _geometry()
    m = w1d.shape[0]
    u = np.abs(RNG.normal(size=m)) + 0.1
    s = u * (1.0 + u) ** 0.5
    vr = RNG.normal(size=m - 1)
    da, pa = knb.advect_upwind(u, s, vr, rn1, w1d, h)
    db, pb = knp.advect_upwind(u, s, vr, rn1, w1d, h)
    assert np.allclose(da, db, rtol=1e-12, atol=1e-14)
    assert pa == pytest.approx(pb, rel=1e-12)
    # advection redistributes mass without creating any
    assert float(w1d @ da) == pytest.approx(0.0, abs=1e-12 * float(np.abs(w1d @ np.abs(da))))


def test_advect_positivity_at_dt_pos():
    rn1, w1d, h = _geometry(N=48, clustering=4.0)
    m = w1d.shape[0]
    u = np.abs(RNG.normal(size=m)) + 1e-3
    s = u.copy()
    vr = RNG.normal(size=m - 1) * 5.0
    dudt, dt_pos = knb.advect_upwind(u, s, vr, rn1, w1d, h)
    unew = u + dt_pos * dudt
    assert unew.min() >= -1e-12
    assert (u + 2.5 * dt_pos * dudt).min() < 0.0  # the bound is tight-ish


def test_diffusion_solve_agreement_and_mass():
    rn1, w1d, h = _geometry(n=3, N=80, clustering=20.0)
    m = w1d.shape[0]
    u = np.abs(RNG.normal(size=m)) + 0.2
    d = (1.0 + u) ** 1.5
    dt = 3e-3
    ua = knb.diffusion_solve(u, d, rn1, w1d, h, dt)
    ub = knp.diffusion_solve(u, d, rn1, w1d, h, dt)
    assert np.allclose(ua, ub, rtol=1e-12, atol=1e-14)
    assert float(w1d @ ua) == pytest.approx(float(w1d @ u), rel=1e-13)


def test_helmholtz_agreement_and_constant_identity():
    rn1, w1d, h = _geometry(n=2, N=72, clustering=15.0)
    m = w1d.shape[0]
    g = np.abs(RNG.normal(size=m))
    va = knb.helmholtz_solve(g, rn1, w1d, h)
    vb = knp.helmholtz_solve(g, rn1, w1d, h)
    assert np.allclose(va, vb, rtol=1e-12, atol=1e-14)
    # (-Lap + 1) of a constant is the constant
    c = np.full(m, 3.7)
    assert np.allclose(knb.helmholtz_solve(c, rn1, w1d, h), c, rtol=1e-12)
    # apply and solve are inverses; pointwise tolerance reflects the
    # 1/h0^2 row scale of the origin cell on clustered grids
    back = knb.apply_helmholtz(va, rn1, w1d, h)
    assert np.allclose(back, g, rtol=1e-8, atol=2e-9)


def test_cn_and_ie_agreement():
    rn1, w1d, h = _geometry(n=2, N=64, clustering=8.0)
    m = w1d.shape[0]
    v = np.abs(RNG.normal(size=m))
    g = np.abs(RNG.normal(size=m))
    for f_nb, f_np in ((knb.cn_step, knp.cn_step), (knb.ie_step, knp.ie_step)):
        va = f_nb(v, g, rn1, w1d, h, 1e-2)
        vb = f_np(v, g, rn1, w1d, h, 1e-2)
        assert np.allclose(va, vb, rtol=1e-12, atol=1e-14)


def test_cn_decay_of_spatial_constant():
    # with g = 0 and v0 constant, v_t = -v exactly; CN with dt = T/k
    # converges to e^-T at second order in dt
    rn1, w1d, h = _geometry(n=2, N=32, clustering=1.0)
    m = w1d.shape[0]
    v = np.ones(m)
    zero = np.zeros(m)
    nsteps = 200
    dt = 1.0 / nsteps
    for _ in range(nsteps):
        v = knb.cn_step(v, zero, rn1, w1d, h, dt)
    assert np.allclose(v, np.exp(-1.0), rtol=1e-4)
