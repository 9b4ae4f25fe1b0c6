"""Pure-numpy fallback kernels.

Same signatures and semantics as the jitted backend; tridiagonal
systems go through scipy.linalg.solve_banded.  Kept vectorized so the
fallback stays usable on long runs.
"""
from __future__ import annotations

import numpy as np
from scipy.linalg import solve_banded


def thomas(lo, diag, up, rhs):
    m = diag.shape[0]
    ab = np.zeros((3, m))
    ab[0, 1:] = up[:-1]
    ab[1, :] = diag
    ab[2, :-1] = lo[1:]
    return solve_banded((1, 1), ab, rhs)


def _solve_tridiag(lo, diag, up, rhs):
    return thomas(lo, diag, up, rhs)


def advect_upwind(u, s_nodes, vr_face, rn1_face, w1d, h_face):
    m = u.shape[0]
    pos = vr_face > 0.0
    s_up = np.where(pos, s_nodes[:-1], s_nodes[1:])
    flux = rn1_face * s_up * vr_face
    padded = np.concatenate((np.zeros(1), flux, np.zeros(1)))
    dudt = (padded[:-1] - padded[1:]) / w1d
    out = np.zeros(m)
    mag = rn1_face * np.abs(vr_face)
    out[:-1][pos] += mag[pos]
    out[1:][~pos] += mag[~pos]
    den = s_nodes * out
    ok = (den > 1e-300) & (u > 0.0)
    if np.any(ok):
        dt_pos = float(np.min(w1d[ok] * u[ok] / den[ok]))
    else:
        dt_pos = np.inf
    return dudt, dt_pos


def _conservative_coeffs(d_face, rn1_face, w1d, h_face):
    dc = rn1_face * d_face / h_face
    m = w1d.shape[0]
    lo = np.zeros(m)
    up = np.zeros(m)
    diag = np.zeros(m)
    lo[1:] = -dc / w1d[1:]
    up[:-1] = -dc / w1d[:-1]
    diag[:-1] += dc / w1d[:-1]
    diag[1:] += dc / w1d[1:]
    return lo, diag, up


def diffusion_solve(u, d_nodes, rn1_face, w1d, h_face, dt):
    d_face = 0.5 * (d_nodes[:-1] + d_nodes[1:])
    lo, diag, up = _conservative_coeffs(d_face, rn1_face, w1d, h_face)
    return _solve_tridiag(dt * lo, 1.0 + dt * diag, dt * up, u)


def helmholtz_solve(g, rn1_face, w1d, h_face):
    ones = np.ones_like(rn1_face)
    lo, diag, up = _conservative_coeffs(ones, rn1_face, w1d, h_face)
    return _solve_tridiag(lo, 1.0 + diag, up, g)


def apply_helmholtz(v, rn1_face, w1d, h_face):
    gflux = rn1_face * (v[1:] - v[:-1]) / h_face
    padded = np.concatenate((np.zeros(1), gflux, np.zeros(1)))
    return v - (padded[1:] - padded[:-1]) / w1d


def cn_step(v, gmid, rn1_face, w1d, h_face, dt):
    av = apply_helmholtz(v, rn1_face, w1d, h_face)
    rhs = v - 0.5 * dt * av + dt * gmid
    ones = np.ones_like(rn1_face)
    lo, diag, up = _conservative_coeffs(ones, rn1_face, w1d, h_face)
    return _solve_tridiag(
        0.5 * dt * lo, 1.0 + 0.5 * dt * (1.0 + diag), 0.5 * dt * up, rhs
    )


def ie_step(v, g, rn1_face, w1d, h_face, dt):
    ones = np.ones_like(rn1_face)
    lo, diag, up = _conservative_coeffs(ones, rn1_face, w1d, h_face)
    return _solve_tridiag(
        dt * lo, 1.0 + dt * (1.0 + diag), dt * up, v + dt * g
    )
