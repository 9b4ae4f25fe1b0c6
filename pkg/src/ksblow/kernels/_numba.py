"""Jitted finite-volume kernels.

All functions take plain float64 ndarrays.  Node arrays have length M,
face arrays length M - 1 (interior faces only; the domain boundary
faces at r = 0 and r = R carry zero flux by construction).
"""
from __future__ import annotations

import numpy as np
from numba import njit

_OPTS = dict(cache=True, nogil=True)


@njit(**_OPTS)
def thomas(lo, diag, up, rhs):
    # lo[0] and up[-1] are ignored.
    m = diag.shape[0]
    cp = np.empty(m)
    dp = np.empty(m)
    cp[0] = up[0] / diag[0]
    dp[0] = rhs[0] / diag[0]
    for i in range(1, m):
        den = diag[i] - lo[i] * cp[i - 1]
        cp[i] = up[i] / den
        dp[i] = (rhs[i] - lo[i] * dp[i - 1]) / den
    x = np.empty(m)
    x[m - 1] = dp[m - 1]
    for i in range(m - 2, -1, -1):
        x[i] = dp[i] - cp[i] * x[i + 1]
    return x


@njit(**_OPTS)
def advect_upwind(u, s_nodes, vr_face, rn1_face, w1d, h_face):
    """Donor-cell chemotactic divergence -(1/w) d(r^{n-1} S v_r).

    Returns (dudt, dt_pos) where dt_pos is the largest time step that
    keeps every cell nonnegative under forward Euler with this dudt.
    """
    m = u.shape[0]
    nf = m - 1
    flux = np.empty(nf)
    out = np.zeros(m)
    for i in range(nf):
        if vr_face[i] > 0.0:
            s_up = s_nodes[i]
            out[i] += rn1_face[i] * vr_face[i]
        else:
            s_up = s_nodes[i + 1]
            out[i + 1] += rn1_face[i] * (-vr_face[i])
        flux[i] = rn1_face[i] * s_up * vr_face[i]
    dudt = np.empty(m)
    dudt[0] = -flux[0] / w1d[0]
    for i in range(1, m - 1):
        dudt[i] = (flux[i - 1] - flux[i]) / w1d[i]
    dudt[m - 1] = flux[nf - 1] / w1d[m - 1]
    dt_pos = np.inf
    for i in range(m):
        den = s_nodes[i] * out[i]
        if den > 1e-300 and u[i] > 0.0:
            cand = w1d[i] * u[i] / den
            if cand < dt_pos:
                dt_pos = cand
    return dudt, dt_pos


@njit(**_OPTS)
def diffusion_solve(u, d_nodes, rn1_face, w1d, h_face, dt):
    """Implicit Euler for u_t = (1/w) d(r^{n-1} D u_r), lagged D.

    Face diffusivity is the arithmetic mean of the node values, which
    keeps the matrix an M-matrix and the update mass conservative.
    """
    m = u.shape[0]
    nf = m - 1
    dc = np.empty(nf)
    for i in range(nf):
        dc[i] = rn1_face[i] * 0.5 * (d_nodes[i] + d_nodes[i + 1]) / h_face[i]
    lo = np.zeros(m)
    up = np.zeros(m)
    diag = np.empty(m)
    diag[0] = 1.0 + dt * dc[0] / w1d[0]
    up[0] = -dt * dc[0] / w1d[0]
    for i in range(1, m - 1):
        lo[i] = -dt * dc[i - 1] / w1d[i]
        up[i] = -dt * dc[i] / w1d[i]
        diag[i] = 1.0 + dt * (dc[i - 1] + dc[i]) / w1d[i]
    lo[m - 1] = -dt * dc[nf - 1] / w1d[m - 1]
    diag[m - 1] = 1.0 + dt * dc[nf - 1] / w1d[m - 1]
    return thomas(lo, diag, up, u)


@njit(**_OPTS)
def helmholtz_solve(g, rn1_face, w1d, h_face):
    """Solve (-Lap + 1) v = g with zero-flux boundary closure."""
    m = g.shape[0]
    nf = m - 1
    dc = np.empty(nf)
    for i in range(nf):
        dc[i] = rn1_face[i] / h_face[i]
    lo = np.zeros(m)
    up = np.zeros(m)
    diag = np.empty(m)
    diag[0] = 1.0 + dc[0] / w1d[0]
    up[0] = -dc[0] / w1d[0]
    for i in range(1, m - 1):
        lo[i] = -dc[i - 1] / w1d[i]
        up[i] = -dc[i] / w1d[i]
        diag[i] = 1.0 + (dc[i - 1] + dc[i]) / w1d[i]
    lo[m - 1] = -dc[nf - 1] / w1d[m - 1]
    diag[m - 1] = 1.0 + dc[nf - 1] / w1d[m - 1]
    return thomas(lo, diag, up, g)


@njit(**_OPTS)
def apply_helmholtz(v, rn1_face, w1d, h_face):
    """Return (-Lap + 1) v with the zero-flux closure."""
    m = v.shape[0]
    nf = m - 1
    av = np.empty(m)
    gprev = 0.0
    for i in range(m):
        if i < nf:
            gnext = rn1_face[i] * (v[i + 1] - v[i]) / h_face[i]
        else:
            gnext = 0.0
        av[i] = v[i] - (gnext - gprev) / w1d[i]
        gprev = gnext
    return av


@njit(**_OPTS)
def cn_step(v, gmid, rn1_face, w1d, h_face, dt):
    """Crank-Nicolson step of v_t = Lap v - v + gmid."""
    av = apply_helmholtz(v, rn1_face, w1d, h_face)
    rhs = v - 0.5 * dt * av + dt * gmid
    m = v.shape[0]
    nf = m - 1
    lo = np.zeros(m)
    up = np.zeros(m)
    diag = np.empty(m)
    dc0 = rn1_face[0] / h_face[0]
    diag[0] = 1.0 + 0.5 * dt * (1.0 + dc0 / w1d[0])
    up[0] = -0.5 * dt * dc0 / w1d[0]
    for i in range(1, m - 1):
        dcm = rn1_face[i - 1] / h_face[i - 1]
        dcp = rn1_face[i] / h_face[i]
        lo[i] = -0.5 * dt * dcm / w1d[i]
        up[i] = -0.5 * dt * dcp / w1d[i]
        diag[i] = 1.0 + 0.5 * dt * (1.0 + (dcm + dcp) / w1d[i])
    dcl = rn1_face[nf - 1] / h_face[nf - 1]
    lo[m - 1] = -0.5 * dt * dcl / w1d[m - 1]
    diag[m - 1] = 1.0 + 0.5 * dt * (1.0 + dcl / w1d[m - 1])
    return thomas(lo, diag, up, rhs)


@njit(**_OPTS)
def ie_step(v, g, rn1_face, w1d, h_face, dt):
    """Implicit Euler step of v_t = Lap v - v + g (sign preserving)."""
    m = v.shape[0]
    nf = m - 1
    lo = np.zeros(m)
    up = np.zeros(m)
    diag = np.empty(m)
    dc0 = rn1_face[0] / h_face[0]
    diag[0] = 1.0 + dt * (1.0 + dc0 / w1d[0])
    up[0] = -dt * dc0 / w1d[0]
    for i in range(1, m - 1):
        dcm = rn1_face[i - 1] / h_face[i - 1]
        dcp = rn1_face[i] / h_face[i]
        lo[i] = -dt * dcm / w1d[i]
        up[i] = -dt * dcp / w1d[i]
        diag[i] = 1.0 + dt * (1.0 + (dcm + dcp) / w1d[i])
    dcl = rn1_face[nf - 1] / h_face[nf - 1]
    lo[m - 1] = -dt * dcl / w1d[m - 1]
    diag[m - 1] = 1.0 + dt * (1.0 + dcl / w1d[m - 1])
    rhs = v + dt * g
    return thomas(lo, diag, up, rhs)
