"""Exponent calculus, cutoff machinery, z-residuals, Hoelder moduli."""
import math

import numpy as np
import pytest

from ksblow.estimates import (
    REGIME_HIGH,
    REGIME_LOW,
    build_b_coefficients,
    build_zeta,
    compute_exponents,
    holder_space,
    holder_time,
    nonlinear_production_envelope,
    verify_gradient_envelope,
    z_residual,
    z_transform,
)
from ksblow.grid import RadialField, build_grid, refine
from ksblow.linear import make_source, run_parabolic, solve_elliptic


# frozen by hand: n=2, m=q=s=1, p=1 is the classical case
def test_exponents_classical_case():
    b = compute_exponents(2, 1.0, 1.0, 1.0, 1.0)
    assert b.p0 == pytest.approx(1.0)
    assert b.alpha_lower == pytest.approx(2.0)
    assert b.beta_lower == pytest.approx(1.0)
    assert b.q_aux == pytest.approx(1.0)
    assert b.admissible
    assert b.regime == REGIME_LOW


def test_exponents_three_dim_balanced():
    # n=3, s=1, m-q=0, p=1.5: alpha collapses to n/p = 2
    b = compute_exponents(3, 1.2, 1.2, 1.0, 1.5)
    assert b.p0 == pytest.approx(1.5)
    assert b.alpha_lower == pytest.approx(2.0)
    assert b.beta_lower == pytest.approx(1.0)
    assert b.admissible
    assert b.regime == REGIME_LOW  # q_aux = 1.5 = n/2 sits in the low regime


def test_exponents_collapse_identity_sweep():
    # at s=1 with p = p0 the envelope exponent equals n/p0 = 2/(1-gap)
    for n, gap in ((2, -0.4), (2, -0.2), (2, 0.0), (3, -0.3), (3, 0.0), (3, 0.3)):
        p0 = n * (1.0 - gap) / 2.0
        b = compute_exponents(n, 1.0 + gap, 1.0, 1.0, p0)
        assert b.admissible, (n, gap)
        assert b.alpha_lower == pytest.approx(n / p0, rel=1e-12)
        assert b.alpha_lower == pytest.approx(2.0 / (1.0 - gap), rel=1e-12)


def test_exponents_inadmissible_cases():
    # strong diffusion gap: right inequality fails
    b = compute_exponents(2, 2.0, 1.0, 1.0, 1.0)
    assert not b.admissible
    assert math.isfinite(b.alpha_lower)
    # gap at/below -p/n: envelope denominator degenerates
    b2 = compute_exponents(2, 0.4, 1.0, 1.0, 1.0)
    assert not b2.admissible
    assert b2.alpha_lower == math.inf


def test_exponents_rejections():
    with pytest.raises(ValueError):
        compute_exponents(2, 1.0, 1.0, 1.0, 0.5)   # p below max(s,1)
    with pytest.raises(ValueError):
        compute_exponents(2, 1.0, 1.0, 1.0, 2.5)   # p above n s
    with pytest.raises(ValueError):
        compute_exponents(1, 1.0, 1.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        compute_exponents(2, 1.0, 1.0, -1.0, 1.0)


def test_production_envelope_values():
    assert nonlinear_production_envelope(2, 1.0, 0.1) == pytest.approx(2.1)
    assert nonlinear_production_envelope(3, 0.9, 0.0) == pytest.approx(5.1)
    # at p=1, m=q=1 the envelope agrees with the exponent bundle
    b = compute_exponents(2, 1.0, 1.0, 0.9, 1.0)
    assert nonlinear_production_envelope(2, 0.9) == pytest.approx(b.alpha_lower)


def test_production_envelope_rejections():
    with pytest.raises(ValueError):
        nonlinear_production_envelope(2, 1.0, -0.1)
    with pytest.raises(ValueError):
        nonlinear_production_envelope(2, 1.2)
    with pytest.raises(ValueError):
        nonlinear_production_envelope(3, 2.0 / 3.0)


def test_zeta_identity_region_and_plateau():
    g = build_grid(2, 2.0, 128)
    cz = build_zeta(g)
    inner = g.r <= 1.0
    assert np.array_equal(cz.zeta.values[inner], g.r[inner])
    assert np.all(cz.zeta_r.values[inner] == 1.0)
    assert np.all(cz.zeta_rr.values[inner] == 0.0)
    R = g.R
    assert cz.eval(np.array([R]))[0] == pytest.approx(0.75 * R, rel=1e-14)
    assert abs(cz.eval_r(np.array([R]))[0]) < 1e-14
    assert abs(cz.eval_rr(np.array([R]))[0]) < 1e-14


def test_zeta_smooth_monotone_concave_bend():
    g = build_grid(2, 1.0, 64)
    cz = build_zeta(g)
    rr = np.linspace(0.0, 1.0, 20001)
    zr = cz.eval_r(rr)
    assert zr.min() >= -1e-12  # nondecreasing everywhere
    assert np.all(cz.eval_rr(rr) <= 1e-12)  # bend only decelerates
    # continuity of value and both derivatives across the junction
    eps = 1e-9
    below, above = 0.5 - eps, 0.5 + eps
    assert cz.eval(np.array([above]))[0] == pytest.approx(0.5, abs=1e-8)
    assert cz.eval_r(np.array([above]))[0] == pytest.approx(1.0, abs=1e-7)
    assert cz.eval_rr(np.array([above]))[0] == pytest.approx(0.0, abs=1e-6)
    assert cz.eval(np.array([below]))[0] == pytest.approx(0.5, abs=1e-8)


def test_b_coefficients_identity_region_closed_forms():
    # hand values for n=3, beta=3: b1 = -6r, b2 = -4r^2, b3 = r^3
    g = build_grid(3, 1.0, 128)
    cz = build_zeta(g)
    co = build_b_coefficients(cz, 3.0)
    inner = (g.r <= 0.5) & (g.r > 0)
    r = g.r[inner]
    assert np.allclose(co.b1.values[inner], -6.0 * r, rtol=1e-12)
    assert np.allclose(co.b2.values[inner], -4.0 * r**2, rtol=1e-12)
    assert np.allclose(co.b3.values[inner], r**3, rtol=1e-12)
    # envelope constants: zeta <= r makes C3 exactly 1; all finite
    assert co.C3 == pytest.approx(1.0, rel=1e-12)
    assert 0 < co.C1 < 50 and 0 < co.C2 < 50
    with pytest.raises(ValueError):
        build_b_coefficients(cz, 0.0)


def test_z_transform_regimes():
    g = build_grid(2, 1.0, 64)
    cz = build_zeta(g)
    v = RadialField(g, np.full(g.nnodes, 3.0))
    z_low = z_transform(v, cz, 1.5, REGIME_LOW)
    assert z_low.values[0] == 0.0
    assert z_low.values[-1] == pytest.approx(3.0 * 0.75**1.5)
    z_high = z_transform(v, cz, 1.5, REGIME_HIGH)
    assert np.allclose(z_high.values, 0.0)
    with pytest.raises(ValueError):
        z_transform(v, cz, 1.5, "sideways")


def test_z_residual_steady_state_is_spatial_identity():
    # v solving the stationary problem makes z_t and v_t(0) vanish;
    # what is left is pure discretization defect
    from ksblow.linear import ParabolicState

    g = build_grid(2, 1.0, 128)
    src = make_source(g, "gaussian", amplitude=1.0, width=0.4)
    v = solve_elliptic(src).v
    cz = build_zeta(g)
    co = build_b_coefficients(cz, 2.2)
    a = ParabolicState(v=v.copy(), t=0.0)
    b = ParabolicState(v=v.copy(), t=0.01)
    for regime in (REGIME_LOW, REGIME_HIGH):
        rep = z_residual(a, b, src, cz, co, regime)
        assert rep.max_norm < 2e-2, regime
        assert rep.residual.values[0] == 0.0
        assert rep.residual.values[-1] == 0.0
        assert abs(rep.z_r_origin) < 10.0 * g.max_spacing
        assert abs(rep.z_r_wall) < 10.0 * g.max_spacing


def _pair_after_parabolic(gr, src, t_star, dt):
    traj = run_parabolic(src, t_end=t_star + dt, dt=dt, snapshot_times=[t_star])
    return traj.states[-2], traj.states[-1]


def test_z_residual_refinement_factor():
    # joint N x2, dt/2 refinement shrinks the defect by >= 1.8 in both
    # regimes (the high regime carries extra origin terms that must
    # cancel to discretization order as well)
    n, beta, t_star = 3, 3.0, 0.25
    for regime in (REGIME_LOW, REGIME_HIGH):
        norms = []
        for ncells, dt in ((128, 2e-3), (256, 1e-3)):
            g = build_grid(n, 1.0, ncells)
            src = make_source(g, "gaussian", amplitude=2.0, width=0.35)
            a, b = _pair_after_parabolic(g, src, t_star, dt)
            cz = build_zeta(g)
            co = build_b_coefficients(cz, beta)
            rep = z_residual(a, b, src, cz, co, regime)
            norms.append(rep.max_norm)
        assert norms[0] / norms[1] >= 1.8, (regime, norms)


def test_z_residual_validation():
    from ksblow.linear import ParabolicState

    g = build_grid(2, 1.0, 64)
    src = make_source(g, "gaussian", width=0.4)
    v = solve_elliptic(src).v
    cz = build_zeta(g)
    co = build_b_coefficients(cz, 2.0)
    a = ParabolicState(v=v, t=0.5)
    b = ParabolicState(v=v, t=0.2)
    with pytest.raises(ValueError):
        z_residual(a, b, src, cz, co, REGIME_LOW)


def test_holder_space_power_field():
    g = build_grid(2, 1.0, 200, clustering=30.0)
    vals = 2.0 + g.r**0.7
    got = holder_space(RadialField(g, vals), 0.5)
    want = float(np.max(g.r[1:] ** 0.2))  # direct evaluation
    assert got == pytest.approx(want, rel=1e-12)
    with pytest.raises(ValueError):
        holder_space(RadialField(g, vals), 1.5)


def test_holder_time_sqrt_series():
    t = np.linspace(0.0, 1.0, 400)
    v = np.sqrt(t)
    got = holder_time(t, v, 0.5)
    assert got == pytest.approx(1.0, rel=1e-9)
    with pytest.raises(ValueError):
        holder_time(t, v, 1.0)
    with pytest.raises(ValueError):
        holder_time(t[:1], v[:1], 0.5)


def test_holder_time_subsamples_long_series():
    t = np.linspace(0.0, 1.0, 5001)
    got = holder_time(t, 3.0 * t, 0.5)
    assert got == pytest.approx(3.0, rel=1e-9)  # sup at the widest pair


def test_envelope_bounded_verdict():
    g = build_grid(2, 1.0, 96, clustering=10.0)
    gf = refine(g, "deep")
    v = RadialField(g, 0.5 * g.r**2)
    vf = RadialField(gf, 0.5 * gf.r**2)
    rep = verify_gradient_envelope([v], beta=1.0, q_aux=1.9,
                                   refined_v_fields=[vf])
    assert rep.C_measured == pytest.approx(1.0, rel=1e-12)
    assert rep.verdict == "bounded"
    assert not rep.below_threshold


def test_envelope_growth_verdict_and_warning():
    g = build_grid(2, 1.0, 96, clustering=50.0)
    gf = refine(g, "deep")
    v = RadialField(g, 5.0 * g.r**0.2)
    vf = RadialField(gf, 5.0 * gf.r**0.2)
    with pytest.warns(UserWarning):
        rep = verify_gradient_envelope([v], beta=0.5, q_aux=1.0,
                                       refined_v_fields=[vf])
    assert rep.below_threshold
    assert rep.verdict == "growth"
    assert rep.C_refined >= 2.0 * rep.C_measured
