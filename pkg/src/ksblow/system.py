"""Quasilinear chemotaxis system on the radial grid.

    u_t = div( D(u) grad u - S(u) grad v )
  tau v_t = Lap v - v + f(u)          (tau = 0: v solved elliptically)

Operator-split stepping, one first-order step: update v, then move u
by donor-cell upwind advection (explicit) followed by implicit lagged
diffusion.  Both u-substeps conserve mass to roundoff by telescoping
fluxes; the advective substep is positivity preserving under its own
CFL bound, which the kernel reports and the driver respects.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import kernels
from .grid import RadialField, RadialGrid, lp_norm


@dataclass
class ModelParams:
    n: int
    R: float
    m: float
    q: float
    s: float
    tau: float
    K_D1: float = 1.0
    K_D2: float = 1.0
    K_S: float = 1.0
    K_f: float = 1.0
    M: float = 1.0

    def __post_init__(self) -> None:
        if int(self.n) < 2:
            raise ValueError(f"dimension n must be >= 2, got {self.n}")
        self.n = int(self.n)
        if self.R <= 0:
            raise ValueError(f"radius must be positive, got {self.R}")
        if self.s <= 0:
            raise ValueError(f"production exponent s must be positive, got {self.s}")
        if self.tau < 0:
            raise ValueError(f"tau must be 0 (elliptic) or positive, got {self.tau}")
        for name in ("K_D1", "K_D2", "K_S", "K_f", "M"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.K_D1 > self.K_D2:
            raise ValueError(
                f"K_D1 = {self.K_D1} must not exceed K_D2 = {self.K_D2}"
            )


def default_hypothesis_constants(m: float, q: float, s: float) -> dict[str, float]:
    """Tightest simple constants under which the prototype family
    satisfies the growth envelopes (lower-D envelope on rho >= 1)."""
    return {
        "K_D1": min(1.0, 2.0 ** (m - 1.0)),
        "K_D2": max(1.0, 2.0 ** (m - 1.0)),
        "K_S": max(1.0, 2.0 ** (q - 1.0)),
        "K_f": 1.0,
    }


@dataclass
class CoefficientSet:
    """Vectorized density-dependent coefficients.

    Prototype family: D = (1+rho)^(m-1), S = rho (1+rho)^(q-1),
    f = rho^s.  Custom callables must accept ndarray input.
    """
    D: Callable[[np.ndarray], np.ndarray]
    S: Callable[[np.ndarray], np.ndarray]
    f: Callable[[np.ndarray], np.ndarray]
    label: str = "custom"


@dataclass
class HypothesisReport:
    passed: bool
    violations: list[tuple[str, float, float, float]]  # name, rho, lhs, bound


def check_hypothesis_bounds(
    coeffs: CoefficientSet,
    params: ModelParams,
    rho_samples: Optional[np.ndarray] = None,
    rho_samples_lower: Optional[np.ndarray] = None,
) -> HypothesisReport:
    """Spot-check the growth envelopes at sampled densities.

    Upper envelopes (D, S, f) are sampled over [1e-6, 1e12] by default;
    the lower-D envelope over [1, 1e12], where a positive constant can
    exist for every m (below rho = 1 the prototype ratio D/rho^(m-1)
    tends to 0 whenever m < 1).
    """
    if rho_samples is None:
        rho_samples = np.geomspace(1e-6, 1e12, 61)
    if rho_samples_lower is None:
        rho_samples_lower = np.geomspace(1.0, 1e12, 41)
    m, q, s = params.m, params.q, params.s
    bad: list[tuple[str, float, float, float]] = []
    cap = np.maximum(rho_samples, 1.0)
    dv = coeffs.D(rho_samples)
    sv = np.abs(coeffs.S(rho_samples))
    fv = np.abs(coeffs.f(rho_samples))
    for rho, val, bound in zip(rho_samples, dv, params.K_D2 * cap ** (m - 1.0)):
        if val > bound * (1.0 + 1e-12):
            bad.append(("D_upper", float(rho), float(val), float(bound)))
    for rho, val, bound in zip(rho_samples, sv, params.K_S * cap**q):
        if val > bound * (1.0 + 1e-12):
            bad.append(("S_upper", float(rho), float(val), float(bound)))
    for rho, val, bound in zip(rho_samples, fv, params.K_f * cap**s):
        if val > bound * (1.0 + 1e-12):
            bad.append(("f_upper", float(rho), float(val), float(bound)))
    dlo = coeffs.D(rho_samples_lower)
    for rho, val, bound in zip(
        rho_samples_lower, dlo, params.K_D1 * rho_samples_lower ** (m - 1.0)
    ):
        if val < bound * (1.0 - 1e-12):
            bad.append(("D_lower", float(rho), float(val), float(bound)))
    return HypothesisReport(passed=not bad, violations=bad)


def make_prototype_coefficients(params: ModelParams, strict: bool = True) -> CoefficientSet:
    """Prototype power-law coefficient family for the given exponents;
    with strict=True the declared hypothesis constants are spot-checked
    and a violation raises."""
    m, q, s = params.m, params.q, params.s
    coeffs = CoefficientSet(
        D=lambda rho: (1.0 + rho) ** (m - 1.0),
        S=lambda rho: rho * (1.0 + rho) ** (q - 1.0),
        f=lambda rho: rho**s,
        label="prototype",
    )
    if strict:
        rep = check_hypothesis_bounds(coeffs, params)
        if not rep.passed:
            k, rho, lhs, bound = rep.violations[0]
            raise ValueError(
                f"prototype coefficients violate the declared hypothesis "
                f"constants: {k} at rho={rho:.3g} ({lhs:.6g} vs {bound:.6g}); "
                "use default_hypothesis_constants or fix the K values"
            )
    return coeffs


@dataclass
class KSState:
    u: RadialField
    v: RadialField
    t: float
    dt_last: float
    mass: float


class StepRejected(RuntimeError):
    """Raised when a step violates positivity; the caller halves dt."""


def _ball_mass(u: RadialField) -> float:
    return float(u.grid.cell_volumes @ u.values)


def make_initial_u(grid: RadialGrid, family: str, **kw) -> RadialField:
    """Initial density families.

    constant: value.
    gaussian: mass (exact under the grid quadrature) and width.
    power_cap: min(amplitude * r^(-exponent), cap), origin at cap.
    """
    r = grid.r
    if family == "constant":
        val = float(kw.pop("value"))
        _no_extra(kw)
        if val < 0:
            raise ValueError("constant initial density must be nonnegative")
        return RadialField(grid, np.full(grid.nnodes, val))
    if family == "gaussian":
        mass = float(kw.pop("mass"))
        width = float(kw.pop("width"))
        _no_extra(kw)
        if mass <= 0 or width <= 0:
            raise ValueError("gaussian initial data needs positive mass and width")
        shape = np.exp(-((r / width) ** 2))
        amp = mass / float(grid.cell_volumes @ shape)
        return RadialField(grid, amp * shape)
    if family == "power_cap":
        amp = float(kw.pop("amplitude"))
        ex = float(kw.pop("exponent"))
        cap = float(kw.pop("cap"))
        _no_extra(kw)
        if amp <= 0 or cap <= 0 or ex < 0:
            raise ValueError("power_cap needs positive amplitude/cap, exponent >= 0")
        vals = np.minimum(amp * np.maximum(r, r[1]) ** (-ex), cap)
        return RadialField(grid, vals)
    raise ValueError(f"unknown initial family {family!r}")


def _no_extra(kw: dict) -> None:
    if kw:
        raise ValueError(f"unknown initial-data parameters: {sorted(kw)}")


def make_initial_state(
    grid: RadialGrid,
    params: ModelParams,
    u0: RadialField,
    v0: Optional[RadialField] = None,
    v0_mode: str = "equilibrium",
) -> KSState:
    """Pair the initial density with a chemical field: the elliptic
    equilibrium of f(u0) by default, zeros, or an explicit field."""
    if v0 is None:
        if v0_mode == "equilibrium":
            coeffs = make_prototype_coefficients(params, strict=False)
            g = coeffs.f(u0.values)
            vv = kernels.helmholtz_solve(g, grid.rn1_face, grid.w1d, grid.h_face)
            v0 = RadialField(grid, vv)
        elif v0_mode == "zero":
            v0 = RadialField(grid, np.zeros(grid.nnodes))
        else:
            raise ValueError(f"unknown v0_mode {v0_mode!r}")
    return KSState(u=u0.copy(), v=v0.copy(), t=0.0, dt_last=0.0,
                   mass=_ball_mass(u0))


def step_ks(
    state: KSState,
    coeffs: CoefficientSet,
    params: ModelParams,
    dt: float,
    picard: int = 1,
) -> tuple[KSState, float]:
    """One split step; returns the new state and the positivity CFL
    bound dt_pos of the advective substep (for the driver's controller).
    Raises StepRejected when the step leaves the positive cone.
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    g = state.u.grid
    u = state.u.values
    # chemical update first so the density moves in the fresh gradient
    fu = coeffs.f(u)
    if params.tau == 0.0:
        v = kernels.helmholtz_solve(fu, g.rn1_face, g.w1d, g.h_face)
    else:
        v = kernels.ie_step(state.v.values, fu, g.rn1_face, g.w1d, g.h_face,
                            dt / params.tau)
    if float(v.min()) < -1e-12:
        raise StepRejected(f"chemical field went negative: min v = {v.min():.3e}")
    v = np.maximum(v, 0.0)
    vr_face = np.diff(v) / g.h_face
    su = coeffs.S(u)
    dudt, dt_pos = kernels.advect_upwind(u, su, vr_face, g.rn1_face, g.w1d,
                                         g.h_face)
    u_star = u + dt * dudt
    floor = -1e-12 * max(1.0, float(np.max(u)))
    if not np.isfinite(u_star).all() or float(u_star.min()) < floor:
        raise StepRejected(
            f"advective substep undershot (dt={dt:.3e}, dt_pos={dt_pos:.3e})"
        )
    u_star = np.maximum(u_star, 0.0)
    u_ref = u_star
    for _ in range(max(1, picard)):
        dnodes = coeffs.D(u_ref)
        u_new = kernels.diffusion_solve(u_star, dnodes, g.rn1_face, g.w1d,
                                        g.h_face, dt)
        u_ref = u_new
    if not np.isfinite(u_new).all() or float(u_new.min()) < floor:
        raise StepRejected("diffusive substep produced a negative density")
    u_new = np.maximum(u_new, 0.0)
    uf = RadialField(g, u_new)
    new = KSState(u=uf, v=RadialField(g, v), t=state.t + dt, dt_last=dt,
                  mass=_ball_mass(uf))
    return new, dt_pos


@dataclass
class BlowupPolicy:
    sup_threshold: float = 1e6
    dt_floor: float = 1e-14


@dataclass
class NormSeries:
    t: np.ndarray
    dt: np.ndarray
    sup_u: np.ndarray
    mass: np.ndarray
    lp: dict[float, np.ndarray]


@dataclass
class KSTrajectory:
    params: ModelParams
    snapshots: list[KSState]
    norms: NormSeries
    termination: str
    T_est: Optional[float]
    policy: BlowupPolicy
    meta: dict = field(default_factory=dict)

    @property
    def grid(self) -> RadialGrid:
        return self.snapshots[0].u.grid


def run_until(
    state0: KSState,
    coeffs: CoefficientSet,
    params: ModelParams,
    t_end: float,
    policy: Optional[BlowupPolicy] = None,
    dt_init: float = 1e-6,
    dt_max: float = 1e-2,
    safety: float = 0.45,
    growth_cap: float = 0.02,
    snapshot_interval: Optional[float] = None,
    snapshot_times: Sequence[float] = (),
    norm_stride: int = 25,
    p_track: Sequence[float] = (1.0,),
    picard: int = 1,
    max_steps: int = 5_000_000,
) -> KSTrajectory:
    """Adaptive march to t_end or blow-up.

    dt is limited by the advective positivity bound (times safety), by
    a growth cap c / ||u||_inf^max(q,1) tuned so the density grows a
    few percent per step near blow-up, and by the snapshot schedule.
    Snapshots are uniform in time until ||u||_inf passes 1e3, then
    geometric in the sup (every factor 1.25).  Rejected steps halve dt;
    underflow below the policy floor terminates the run.
    """
    if t_end <= state0.t:
        raise ValueError("t_end must exceed the initial time")
    policy = policy or BlowupPolicy()
    state = state0
    qpow = max(params.q, 1.0)

    fixed_times = sorted(set(snapshot_times))
    if snapshot_interval is not None:
        k = int(math.ceil(t_end / snapshot_interval)) + 1
        fixed_times = sorted(
            set(fixed_times) | {i * snapshot_interval for i in range(1, k)}
        )
    fixed_times = [tt for tt in fixed_times if state0.t < tt <= t_end]

    snapshots = [state0]
    rows_t, rows_dt, rows_sup, rows_mass = [], [], [], []
    rows_lp: dict[float, list] = {float(p): [] for p in p_track}

    def record_norms(st: KSState) -> None:
        rows_t.append(st.t)
        rows_dt.append(st.dt_last)
        rows_sup.append(float(np.max(st.u.values)))
        rows_mass.append(st.mass)
        for p, lst in rows_lp.items():
            lst.append(lp_norm(st.u, p))

    record_norms(state0)
    sup_u = float(np.max(state0.u.values))
    geo_level = None
    dt = dt_init
    termination = None
    steps = 0
    fixed_idx = 0

    while True:
        if sup_u > policy.sup_threshold:
            termination = "blowup_detected"
            break
        if state.t >= t_end - 1e-12:
            termination = "reached_t_end"
            break
        if steps >= max_steps:
            raise RuntimeError(
                f"step budget {max_steps} exhausted at t={state.t:.6g}; "
                "the controller is mistuned for this scenario"
            )
        # controller: ramp up gently, respect growth cap and schedule
        cap = growth_cap / sup_u**qpow if sup_u > 0 else dt_max
        dt = min(dt * 1.25, dt_max, cap)
        while fixed_idx < len(fixed_times) and fixed_times[fixed_idx] <= state.t + 1e-12:
            fixed_idx += 1
        # schedule clipping shortens only the attempted step, not the
        # controller state, so landing on a snapshot costs no ramp-up
        dt_try = min(dt, t_end - state.t)
        if fixed_idx < len(fixed_times):
            gap = fixed_times[fixed_idx] - state.t
            if gap <= dt_try:
                dt_try = gap
        rejected = False
        accepted = False
        while dt_try >= policy.dt_floor:
            try:
                new_state, dt_pos = step_ks(state, coeffs, params, dt_try,
                                            picard=picard)
                accepted = True
                break
            except StepRejected:
                rejected = True
                dt_try *= 0.5
        if not accepted:
            termination = "dt_underflow"
            break
        if rejected:
            dt = dt_try
        state = new_state
        steps += 1
        sup_u = float(np.max(state.u.values))
        # a retry may have shrunk dt below the planned landing, so test
        # arrival at the fixed time rather than trusting the clip
        snap_here = (
            fixed_idx < len(fixed_times)
            and abs(state.t - fixed_times[fixed_idx]) <= 1e-12
        )
        if math.isfinite(dt_pos):
            dt = min(dt, safety * dt_pos)
        if sup_u > 1e3:
            if geo_level is None:
                geo_level = sup_u * 1.25
                snap_here = True
            elif sup_u >= geo_level:
                geo_level = sup_u * 1.25
                snap_here = True
        if snap_here:
            snapshots.append(state)
            record_norms(state)
        elif steps % norm_stride == 0:
            record_norms(state)

    if not rows_t or rows_t[-1] != state.t:
        record_norms(state)
    if snapshots[-1] is not state:
        snapshots.append(state)
    norms = NormSeries(
        t=np.asarray(rows_t), dt=np.asarray(rows_dt),
        sup_u=np.asarray(rows_sup), mass=np.asarray(rows_mass),
        lp={p: np.asarray(v) for p, v in rows_lp.items()},
    )
    T_est = state.t if termination in ("blowup_detected", "dt_underflow") else None
    return KSTrajectory(params=params, snapshots=snapshots, norms=norms,
                        termination=termination, T_est=T_est, policy=policy,
                        meta={"steps": steps, "dt_final": state.dt_last,
                              "kernel_backend": kernels.backend_name()})
