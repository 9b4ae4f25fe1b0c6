"""Helmholtz and heat solves on the radial grid, plus the inequality
checks that tie the chemical gradient to integral norms of the source.

The discrete flux identity behind the gradient check: with zero flux at
the origin, r^{n-1} v_r at a face equals the cumulative cell sum of
(v - g), so Hoelder against the cell weights reproduces the continuum
constant exactly.  Checks evaluate at nodes with the public stencils
and carry a tolerance for the node/face mismatch.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import kernels
from .grid import (
    RadialField,
    RadialGrid,
    gradient_radial,
    laplacian_radial,
    lp_norm,
    omega,
)


@dataclass
class EllipticSolution:
    """Solution of (-Lap + 1) v = g with no-flux boundary.

    residual_norm is the max-norm defect of the solver's own closure,
    measured in flux form.  The achievable floor scales like
    eps * |v| / h0^2 (h0 = innermost cell width), so construction
    enforces the tolerance and callers must not push h0 below ~1e-3
    when an elliptic solve is involved; deeply clustered grids are for
    the parabolic and profile probes, which carry no such invariant.
    """
    v: RadialField
    g: RadialField
    residual_norm: float


@dataclass
class ParabolicState:
    v: RadialField
    t: float
    tau: float = 1.0


@dataclass
class LinearTrajectory:
    states: list[ParabolicState]
    g: RadialField
    q_exponent: Optional[float] = None
    meta: dict = field(default_factory=dict)

    @property
    def grid(self) -> RadialGrid:
        return self.g.grid


def solve_elliptic(g: RadialField) -> EllipticSolution:
    gr = g.grid
    v = kernels.helmholtz_solve(g.values, gr.rn1_face, gr.w1d, gr.h_face)
    defect = kernels.apply_helmholtz(v, gr.rn1_face, gr.w1d, gr.h_face) - g.values
    res = float(np.max(np.abs(defect)))
    sol = EllipticSolution(v=RadialField(gr, v), g=g, residual_norm=res)
    if res > 1e-10 * (1.0 + float(np.max(np.abs(g.values)))):
        raise RuntimeError(
            f"elliptic solve residual {res:.3e} exceeds tolerance "
            "(likely the grid is clustered past the roundoff floor "
            "eps/h0^2; use a milder clustering for elliptic work)"
        )
    return sol


def step_parabolic(
    state: ParabolicState,
    g_now: RadialField,
    dt: float,
    scheme: str = "cn",
    g_next: Optional[RadialField] = None,
) -> ParabolicState:
    """One step of tau v_t = Lap v - v + g.

    "cn" trapezoids both the operator and the source; "ie" is implicit
    Euler, first order but sign preserving.
    """
    if dt <= 0.0:
        raise ValueError(f"time step must be positive, got {dt}")
    if state.tau <= 0.0:
        raise ValueError(f"parabolic stepping needs tau > 0, got {state.tau}")
    gr = g_now.grid
    dt_eff = dt / state.tau
    if scheme == "cn":
        gm = g_now.values if g_next is None else 0.5 * (g_now.values + g_next.values)
        vn = kernels.cn_step(state.v.values, gm, gr.rn1_face, gr.w1d, gr.h_face, dt_eff)
    elif scheme == "ie":
        ge = g_now.values if g_next is None else g_next.values
        vn = kernels.ie_step(state.v.values, ge, gr.rn1_face, gr.w1d, gr.h_face, dt_eff)
    else:
        raise ValueError(f"unknown scheme {scheme!r}, expected 'cn' or 'ie'")
    return ParabolicState(v=RadialField(gr, vn), t=state.t + dt, tau=state.tau)


def run_parabolic(
    g: RadialField,
    t_end: float,
    dt: float,
    v0: Optional[RadialField] = None,
    snapshot_times: Optional[list[float]] = None,
    tau: float = 1.0,
    scheme: str = "cn",
    q_exponent: Optional[float] = None,
) -> LinearTrajectory:
    """March the linear equation to t_end with fixed-source CN steps,
    clipping dt to land exactly on every requested snapshot time."""
    if t_end <= 0.0:
        raise ValueError(f"t_end must be positive, got {t_end}")
    gr = g.grid
    if v0 is None:
        v0 = RadialField(gr, np.zeros(gr.nnodes))
    snaps = sorted(set(snapshot_times or [])) + [t_end]
    snaps = [t for t in snaps if 0.0 < t <= t_end]
    state = ParabolicState(v=v0.copy(), t=0.0, tau=tau)
    states = [ParabolicState(v=v0.copy(), t=0.0, tau=tau)]
    for target in snaps:
        while state.t < target - 1e-12:
            step = min(dt, target - state.t)
            state = step_parabolic(state, g, step, scheme=scheme)
        states.append(state)
    return LinearTrajectory(states=states, g=g, q_exponent=q_exponent,
                            meta={"dt": dt, "scheme": scheme, "tau": tau})


@dataclass
class BoundReport:
    passed: bool
    lhs: float
    rhs: float
    ratio: float
    q: float
    tol: float


def check_delta_v_bound(sol: EllipticSolution, q: float, tol: float = 0.05) -> BoundReport:
    """|| Lap v ||_q <= 2 ||g||_q, from Lap v = v - g and the L^q
    contraction of the resolvent."""
    if q == math.inf or q < 1.0:
        raise ValueError(f"q must be a finite exponent >= 1, got {q}")
    lap = laplacian_radial(sol.v)
    lhs = lp_norm(lap, q)
    rhs = 2.0 * lp_norm(sol.g, q)
    ratio = lhs / rhs if rhs > 0 else math.inf
    return BoundReport(passed=ratio <= 1.0 + tol, lhs=lhs, rhs=rhs,
                       ratio=ratio, q=q, tol=tol)


@dataclass
class GradientBoundReport:
    passed: bool
    max_violation_ratio: float
    argmax_radius: float
    q: float
    M: float
    tol: float


def check_radial_gradient_bound(
    sol: EllipticSolution, q: float, M: Optional[float] = None, tol: float = 0.1
) -> GradientBoundReport:
    """Pointwise check of r^{n-1} |v_r| <= c_q M r^{n - n/q} at every
    positive node, with c_q = 2 n^{-(q-1)/q} / omega(n)^{1/q}."""
    gr = sol.v.grid
    n = gr.n
    if q < 1.0:
        raise ValueError(f"q must be >= 1, got {q}")
    if q > n:
        raise ValueError(f"the flux bound needs q <= n, got q={q} in dimension {n}")
    gq = lp_norm(sol.g, q)
    if M is None:
        M = gq
    elif gq > M * (1.0 + 1e-12):
        raise ValueError(f"||g||_q = {gq:.6g} exceeds the declared bound M = {M:.6g}")
    c_q = 2.0 * M * n ** (-(q - 1.0) / q) / omega(n) ** (1.0 / q)
    vr = gradient_radial(sol.v).values[1:]
    r = gr.r[1:]
    lhs = r ** (n - 1) * np.abs(vr)
    rhs = c_q * r ** (n - n / q)
    ratios = lhs / rhs
    k = int(np.argmax(ratios))
    worst = float(ratios[k])
    return GradientBoundReport(passed=worst <= 1.0 + tol, max_violation_ratio=worst,
                               argmax_radius=float(r[k]), q=q, M=M, tol=tol)


@dataclass
class W1pReport:
    sup_grad_norm: float
    p: float
    q: float
    window: tuple[float, float]
    mesh_stability: Optional[float] = None
    stable: Optional[bool] = None


def verify_w1p_bound(
    traj: LinearTrajectory,
    p: float,
    window: Optional[tuple[float, float]] = None,
    refined: Optional[LinearTrajectory] = None,
) -> W1pReport:
    """sup over snapshots of ||v_r||_p for p inside the gradient
    integrability range (1, n q / (n - q)); mesh stability is the
    relative change against a refined twin trajectory."""
    if traj.q_exponent is None:
        raise ValueError("trajectory carries no q exponent for the source family")
    q = float(traj.q_exponent)
    n = traj.grid.n
    p_hi = math.inf if q >= n else n * q / (n - q)
    if not (1.0 < p < p_hi):
        raise ValueError(
            f"p must lie in (1, {p_hi:.6g}) for q={q}, n={n}; got {p}"
        )

    def _sup(t: LinearTrajectory) -> float:
        lo, hi = window if window is not None else (-math.inf, math.inf)
        vals = [
            lp_norm(gradient_radial(s.v), p)
            for s in t.states
            if lo <= s.t <= hi
        ]
        if not vals:
            raise ValueError(f"no snapshots inside window {window}")
        return max(vals)

    sup_c = _sup(traj)
    stability = None
    stable = None
    if refined is not None:
        sup_f = _sup(refined)
        stability = abs(sup_f - sup_c) / max(sup_c, 1e-300)
        stable = stability < 0.2
    return W1pReport(sup_grad_norm=sup_c, p=p, q=q,
                     window=window or (0.0, traj.states[-1].t),
                     mesh_stability=stability, stable=stable)


def make_source(grid: RadialGrid, family: str, **kw) -> RadialField:
    """Named source fields for scenarios and tests.

    power: amplitude * r^(-exponent), clipped at the first positive
    node so the origin value is finite.
    gaussian: amplitude * exp(-(r/width)^2).
    random_cosine: sum of Neumann cosine modes with 1/(1+j) damped
    iid normal amplitudes, deterministic in seed.
    """
    r = grid.r
    if family == "power":
        amp = float(kw.pop("amplitude", 1.0))
        ex = float(kw.pop("exponent"))
        _reject_extra(kw)
        vals = np.empty(grid.nnodes)
        rr = np.maximum(r, r[1])
        vals[:] = amp * rr ** (-ex)
        return RadialField(grid, vals)
    if family == "gaussian":
        amp = float(kw.pop("amplitude", 1.0))
        width = float(kw.pop("width"))
        _reject_extra(kw)
        if width <= 0:
            raise ValueError(f"gaussian width must be positive, got {width}")
        return RadialField(grid, amp * np.exp(-((r / width) ** 2)))
    if family == "random_cosine":
        seed = int(kw.pop("seed", 0))
        modes = int(kw.pop("modes", 8))
        amp = float(kw.pop("amplitude", 1.0))
        _reject_extra(kw)
        rng = np.random.default_rng(seed)
        coef = rng.normal(size=modes + 1) / (1.0 + np.arange(modes + 1.0))
        vals = np.zeros(grid.nnodes)
        for j, a in enumerate(coef):
            vals += a * np.cos(j * math.pi * r / grid.R)
        return RadialField(grid, amp * vals)
    raise ValueError(f"unknown source family {family!r}")


def _reject_extra(kw: dict) -> None:
    if kw:
        raise ValueError(f"unknown source parameters: {sorted(kw)}")
