"""Spectral operator: closed-form oracles, residuals, decay slopes."""
import math

import numpy as np
import pytest
from scipy.special import jn_zeros

from ksblow.grid import RadialField, build_grid, gradient_radial, lp_norm
from ksblow.semigroup import (
    apply_semigroup,
    build_spectral,
    eigen_residual,
    fit_decay_exponent,
    project,
    random_l2_family,
    synthesize,
)


def test_interval_eigenvalues_match_cosine_formula():
    # Neumann modes on [0, R]: lambda_k = 1 + (k pi / R)^2
    R, N = math.pi, 512
    g = build_grid(1, R, N)
    op = build_spectral(g, K=8)
    for k in range(6):
        want = 1.0 + (k * math.pi / R) ** 2
        got = op.eigenvalues[k]
        assert abs(got - want) / want < 1e-3, f"mode {k}"
    # eigenfields are the sampled cosines up to sign/normalization
    for k in (1, 3, 5):
        c = np.cos(k * math.pi * g.r / R)
        phi = op.eigenfields[:, k]
        corr = abs(c @ phi) / (np.linalg.norm(c) * np.linalg.norm(phi))
        assert corr > 1.0 - 1e-10


def test_radial_disc_first_mode_is_bessel():
    # first nonconstant radial Neumann mode on the unit disc has
    # frequency at the first positive zero of J1
    g = build_grid(2, 1.0, 256)
    op = build_spectral(g, K=4)
    j11 = jn_zeros(1, 1)[0]  # 3.8317...
    want = 1.0 + j11**2
    assert abs(op.eigenvalues[1] - want) / want < 5e-3
    assert op.eigenvalues[0] == pytest.approx(1.0, abs=1e-8)


def test_eigen_residual_small():
    for g in (build_grid(1, math.pi, 256), build_grid(2, 1.0, 200, clustering=10.0)):
        op = build_spectral(g, K=16)
        assert eigen_residual(op) < 1e-6


def test_orthonormality_and_projection_roundtrip():
    g = build_grid(2, 1.0, 128)
    op = build_spectral(g, K=12)
    gram = op.eigenfields.T @ (g.cell_volumes[:, None] * op.eigenfields)
    assert np.allclose(gram, np.eye(13), atol=1e-10)
    rng = np.random.default_rng(0)
    c = rng.normal(size=13)
    back = project(op, synthesize(op, c))
    assert np.allclose(back, c, atol=1e-10)


def test_build_spectral_rejects_large_K():
    g = build_grid(1, 1.0, 64)
    with pytest.raises(ValueError):
        build_spectral(g, K=17)  # > 65 // 4
    with pytest.raises(ValueError):
        build_spectral(g, K=0)


def test_apply_semigroup_single_mode_decay():
    g = build_grid(1, math.pi, 256)
    op = build_spectral(g, K=8)
    k = 3
    phi = op.eigenfields[:, k]
    lam = op.eigenvalues[k]
    act = apply_semigroup(op, phi, t=0.2, mu=0.5, sigma=0)
    want = lam**0.5 * math.exp(-lam * 0.2) * phi
    assert np.allclose(act.field.values, want, atol=1e-10)
    assert act.tail_bound == pytest.approx(
        op.eigenvalues[-1] ** 0.5 * math.exp(-op.eigenvalues[-1] * 0.2), rel=1e-12
    )


def test_apply_semigroup_validation():
    g = build_grid(1, 1.0, 64)
    op = build_spectral(g, K=8)
    phi = np.ones(g.nnodes)
    with pytest.raises(ValueError):
        apply_semigroup(op, phi, t=-0.1)
    with pytest.raises(ValueError):
        apply_semigroup(op, phi, t=0.0, mu=0.5)
    with pytest.raises(ValueError):
        apply_semigroup(op, phi, t=0.1, sigma=2)
    with pytest.raises(ValueError):
        apply_semigroup(op, np.ones(5), t=0.1)


def test_decay_slope_matches_smoothing_prediction():
    # gradient of the semigroup on L^2-normalized data decays like
    # t^(-(1+s)/2) in sup norm for s slightly above 1/2
    R, N, K = math.pi, 512, 96
    g = build_grid(1, R, N)
    op = build_spectral(g, K=K)
    fam = random_l2_family(op, count=20, seed=42)
    t_grid = np.geomspace(1e-3, 0.1, 16)
    fit = fit_decay_exponent(op, fam, t_grid, sigma=1, mu=0.0,
                             p=math.inf, lam_reg=0.0, s_exp=0.51)
    assert fit.predicted == pytest.approx(-0.755)
    assert fit.rel_gap <= 0.15, f"slope {fit.slope} vs {fit.predicted}"


def test_decay_fit_validation():
    g = build_grid(1, 1.0, 128)
    op = build_spectral(g, K=16)
    fam = random_l2_family(op, count=20, seed=1)
    ok = np.geomspace(1e-3, 0.1, 8)
    with pytest.raises(ValueError):
        fit_decay_exponent(op, fam[:5], ok, sigma=0, mu=0.0, p=2.0)
    with pytest.raises(ValueError):
        fit_decay_exponent(op, fam, np.geomspace(1e-3, 0.9, 8), sigma=0, mu=0.0, p=2.0)
    with pytest.raises(ValueError):
        fit_decay_exponent(op, fam, ok[:3], sigma=0, mu=0.0, p=2.0)


def test_gradient_sup_contraction():
    # ||grad e^{-tA} phi||_inf <= C e^{-t} ||grad phi||_inf with C
    # near 1 for smooth data on a convex domain
    g = build_grid(1, math.pi, 512)
    op = build_spectral(g, K=64)
    fam = random_l2_family(op, count=5, seed=3, decay=3.0)
    worst = 0.0
    for phi in fam:
        g0 = lp_norm(gradient_radial(RadialField(g, phi)), math.inf)
        for t in (0.05, 0.2, 1.0, 3.0):
            act = apply_semigroup(op, phi, t, sigma=1)
            ratio = lp_norm(act.field, math.inf) * math.exp(t) / g0
            worst = max(worst, ratio)
    assert worst <= 2.0, f"gradient ratio {worst}"
