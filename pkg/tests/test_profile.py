"""Blow-up detection, log-log exponent fits, norm tracking, and
envelope verdicts, on synthetic data and on short simulation runs."""
import csv

import numpy as np
import pytest

from ksblow.estimates import compute_exponents
from ksblow.grid import RadialField, build_grid, lp_norm
from ksblow.profile import (
    detect_blowup,
    envelope_verdict,
    export_profile_csv,
    fit_profile_exponent,
    track_lp_norms,
)
from ksblow.system import (
    BlowupPolicy,
    NormSeries,
    default_hypothesis_constants,
    make_initial_state,
    make_initial_u,
    make_prototype_coefficients,
    ModelParams,
    run_until,
)


def _run(mass, n_nodes=96, clustering=20.0, t_end=0.5, threshold=1e5,
         width=0.2, **run_kw):
    p = ModelParams(n=2, R=1.0, m=1.0, q=1.0, s=1.0, tau=0.0,
                    **default_hypothesis_constants(1.0, 1.0, 1.0))
    c = make_prototype_coefficients(p)
    g = build_grid(2, 1.0, n_nodes, clustering=clustering)
    u0 = make_initial_u(g, "gaussian", mass=mass, width=width)
    st = make_initial_state(g, p, u0)
    return run_until(st, c, p, t_end=t_end,
                     policy=BlowupPolicy(sup_threshold=threshold), **run_kw)


def _series(t, sup, dt=1e-3):
    t = np.asarray(t, dtype=float)
    dts = np.full_like(t, dt) if np.isscalar(dt) else np.asarray(dt)
    return NormSeries(t=t, dt=dts, sup_u=np.asarray(sup, dtype=float),
                      mass=np.ones_like(t), lp={})


def test_detect_on_synthetic_pole():
    t = np.linspace(0.0, 0.9989, 1200)
    ev = detect_blowup(_series(t, 10.0 / (1.0 - t)), sup_threshold=1e3,
                       dt_floor=1e-14)
    assert ev is not None
    assert ev.trigger == "sup_threshold"
    # 10/(1-t) crosses 1e3 at t = 0.99
    assert ev.T_est == pytest.approx(0.99, abs=1e-3)
    assert t[ev.last_good_snapshot] < ev.T_est


def test_detect_dt_collapse():
    t = np.linspace(0.0, 1.0, 50)
    dts = np.full(50, 1e-3)
    dts[-3:] = 5e-15  # below 10x the floor
    ev = detect_blowup(_series(t, np.full(50, 2.0), dt=dts),
                       sup_threshold=1e3, dt_floor=1e-15)
    assert ev is not None
    assert ev.trigger == "dt_underflow"
    assert ev.T_est == pytest.approx(t[47])


def test_detect_none_on_bounded_run():
    traj = _run(mass=2 * np.pi, n_nodes=64, clustering=5.0, t_end=0.05)
    assert traj.termination == "reached_t_end"
    assert detect_blowup(traj) is None


def test_fit_exact_power_law():
    g = build_grid(2, 1.0, 256, clustering=30.0)
    assert g.r[1] < 1e-3
    vals = np.maximum(g.r, g.r[1]) ** -2.0
    fit = fit_profile_exponent(RadialField(g, vals), (1e-3, 1e-1))
    assert fit.alpha_hat == pytest.approx(2.0, abs=1e-10)
    assert fit.stderr <= 1e-10
    assert fit.n_nodes >= 8
    # amplitude rescaling shifts the intercept, not the slope
    fit3 = fit_profile_exponent(RadialField(g, 3.0 * vals), (1e-3, 1e-1))
    assert abs(fit3.alpha_hat - fit.alpha_hat) < 1e-9


def test_fit_constant_and_perturbed():
    g = build_grid(2, 1.0, 256, clustering=30.0)
    flat = fit_profile_exponent(RadialField(g, np.full(g.nnodes, 5.0)),
                                (1e-3, 0.5))
    assert flat.alpha_hat == pytest.approx(0.0, abs=1e-12)

    r = np.maximum(g.r, g.r[1])
    wob = r**-2.0 * (1.0 + 0.1 * np.sin(np.log(r)))
    fit = fit_profile_exponent(RadialField(g, wob), (1e-3, 1e-1))
    assert 1.85 <= fit.alpha_hat <= 2.15
    assert fit.stderr > 0.0


def test_fit_rejections():
    g = build_grid(2, 1.0, 64, clustering=1.0)
    f = RadialField(g, np.ones(g.nnodes))
    with pytest.raises(ValueError, match="window"):
        fit_profile_exponent(f, (0.5, 0.4))
    with pytest.raises(ValueError, match="window"):
        fit_profile_exponent(f, (0.0, 0.1))
    with pytest.raises(ValueError, match=">= 8"):
        fit_profile_exponent(f, (0.98, 0.99))
    vals = np.ones(g.nnodes)
    vals[10] = 0.0
    with pytest.raises(ValueError, match="nonpositive"):
        fit_profile_exponent(RadialField(g, vals), (0.05, 0.95))


def test_track_lp_constant_closed_form():
    traj = _run(mass=np.pi, n_nodes=64, clustering=5.0, t_end=0.01)
    const = RadialField(traj.grid, np.full(traj.grid.nnodes, 3.0))
    for snap in traj.snapshots:
        snap.u = const  # overwrite in place: closed-form check only
    series = track_lp_norms(traj, [1.0, 2.0, 4.0])
    vol = np.pi  # unit disc
    for p in (1.0, 2.0, 4.0):
        np.testing.assert_allclose(series.values[p], 3.0 * vol ** (1 / p),
                                   rtol=1e-12)
    with pytest.raises(ValueError):
        track_lp_norms(traj, [])
    with pytest.raises(ValueError):
        track_lp_norms(traj, [0.5])


def test_track_lp_mass_identity():
    traj = _run(mass=2 * np.pi, n_nodes=64, clustering=5.0, t_end=0.05)
    series = track_lp_norms(traj, [1.0])
    masses = np.array([s.mass for s in traj.snapshots])
    np.testing.assert_allclose(series.values[1.0], masses, rtol=1e-12)
    spread = np.ptp(series.values[1.0]) / series.values[1.0][0]
    assert spread < 1e-8


def test_supercritical_norm_separation_and_event():
    traj = _run(mass=12 * np.pi, t_end=0.5, threshold=1e5)
    assert traj.termination == "blowup_detected"
    series = track_lp_norms(traj, [1.0, 3.0])
    # mass stays put while the cubed norm runs away
    assert np.ptp(series.values[1.0]) / series.values[1.0][0] < 1e-8
    assert series.sup[3.0] >= 10.0 * series.values[3.0][0]

    ev = detect_blowup(traj)
    assert ev is not None
    assert ev.trigger == "sup_threshold"
    assert ev.T_est == pytest.approx(traj.T_est)
    assert 0 <= ev.last_good_snapshot < len(traj.snapshots)
    assert traj.snapshots[ev.last_good_snapshot].t < ev.T_est


def test_envelope_verdicts_on_supercritical_run():
    traj = _run(mass=12 * np.pi, t_end=0.5, threshold=1e5)
    exps = compute_exponents(2, 1.0, 1.0, 1.0, 1.0)
    assert exps.alpha_lower == pytest.approx(2.0)

    above = envelope_verdict(traj, alpha=2.3, exponents=exps, M=40.0)
    assert above.verdict == "conditional"
    assert above.hypothesis_satisfied
    assert np.isfinite(above.C_measured) and above.C_measured > 0
    assert above.alpha_hat is not None

    below = envelope_verdict(traj, alpha=1.5, exponents=exps, M=40.0)
    assert below.verdict == "out_of_theory"
    assert any("below minimal exponent" in r for r in below.reasons)
    # for R = 1 the envelope constant cannot increase with alpha
    assert above.C_measured <= below.C_measured + 1e-12

    starved = envelope_verdict(traj, alpha=2.3, exponents=exps, M=1e-3)
    assert not starved.hypothesis_satisfied
    assert starved.verdict == "out_of_theory"


def test_envelope_stability_with_refined_twin():
    base = _run(mass=2 * np.pi, n_nodes=64, clustering=5.0, t_end=0.1,
                snapshot_interval=0.02)
    fine = _run(mass=2 * np.pi, n_nodes=128, clustering=5.0, t_end=0.1,
                snapshot_interval=0.02)
    exps = compute_exponents(2, 1.0, 1.0, 1.0, 1.0)
    rep = envelope_verdict(base, alpha=2.3, exponents=exps, M=20.0,
                           refined=fine)
    assert rep.stability is not None
    assert rep.stability < 0.5
    assert rep.verdict == "conditional"
    assert rep.C_refined is not None


def test_csv_export(tmp_path):
    traj = _run(mass=2 * np.pi, n_nodes=64, clustering=5.0, t_end=0.05,
                snapshot_interval=0.01)
    path = str(tmp_path / "series.csv")
    export_profile_csv(path, traj, p_list=(1.0, 2.0), alpha=2.0)
    with open(path) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["t", "sup_u", "mass", "u_L1", "u_L2", "C_alpha_2"]
    assert len(rows) == 1 + len(traj.snapshots)
    ts = [float(r[0]) for r in rows[1:]]
    assert ts == sorted(ts)
    assert all(np.isfinite(float(x)) for r in rows[1:] for x in r)
