"""Blow-up detection, profile-exponent fits, and envelope verdicts.

All analysis here is comparative: envelope constants are judged by
their stability under mesh refinement, never against an absolute
target, because the continuum constants are not constructive.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .estimates import ExponentBundle
from .grid import RadialField, lp_norm, weighted_sup
from .system import KSTrajectory, NormSeries


@dataclass
class BlowupEvent:
    T_est: float
    trigger: str  # "sup_threshold" or "dt_underflow"
    last_good_snapshot: int


@dataclass
class ProfileFit:
    alpha_hat: float
    stderr: float
    window: tuple[float, float]
    n_nodes: int


@dataclass
class LpSeries:
    t: np.ndarray
    values: dict[float, np.ndarray]
    sup: dict[float, float]


@dataclass
class ProfileReport:
    alpha: float
    alpha_hat: Optional[float]
    alpha_stderr: Optional[float]
    fit_window: tuple[float, float]
    C_measured: float
    C_refined: Optional[float]
    stability: Optional[float]
    lp_sup: dict[float, float]
    hypothesis_satisfied: bool
    p_hyp: float
    M: float
    verdict: str  # "conditional", "out_of_theory", "inconclusive"
    reasons: list[str] = field(default_factory=list)


def _series_of(traj_or_norms) -> NormSeries:
    norms = getattr(traj_or_norms, "norms", traj_or_norms)
    if not isinstance(norms, NormSeries):
        raise TypeError("expected a trajectory or a NormSeries")
    return norms


def detect_blowup(
    traj_or_norms,
    sup_threshold: Optional[float] = None,
    dt_floor: Optional[float] = None,
) -> Optional[BlowupEvent]:
    """First trigger on the recorded norm series, or None for a run
    that stayed below both thresholds.

    Thresholds default to the trajectory's own policy.  The reported
    last_good_snapshot is the last snapshot (row, for a bare series)
    before the trigger whose accepted step stayed above 10x the dt
    floor; later data is scheme-noise dominated.
    """
    norms = _series_of(traj_or_norms)
    policy = getattr(traj_or_norms, "policy", None)
    if sup_threshold is None:
        if policy is None:
            raise ValueError("sup_threshold required for a bare norm series")
        sup_threshold = policy.sup_threshold
    if dt_floor is None:
        dt_floor = policy.dt_floor if policy is not None else 1e-14

    T_est = None
    trigger = None
    for i in range(len(norms.t)):
        if norms.sup_u[i] > sup_threshold:
            T_est, trigger = float(norms.t[i]), "sup_threshold"
            break
        if i > 0 and norms.dt[i] < 10.0 * dt_floor:
            T_est, trigger = float(norms.t[i]), "dt_underflow"
            break
    if T_est is None:
        return None

    snaps = getattr(traj_or_norms, "snapshots", None)
    if snaps is not None:
        good = [k for k, s in enumerate(snaps)
                if s.t < T_est and s.dt_last > 10.0 * dt_floor]
    else:
        good = [k for k in range(len(norms.t))
                if norms.t[k] < T_est and norms.dt[k] > 10.0 * dt_floor]
    return BlowupEvent(T_est=T_est, trigger=trigger,
                       last_good_snapshot=good[-1] if good else 0)


def fit_profile_exponent(
    u: RadialField, window: tuple[float, float]
) -> ProfileFit:
    """Least-squares slope of log u against log r over the window,
    negated, so u ~ r^(-alpha_hat).  Strict: the window must lie inside
    (0, R), contain at least 8 nodes, and u must be positive on it."""
    r_lo, r_hi = float(window[0]), float(window[1])
    R = u.grid.R
    if not (0.0 < r_lo < r_hi < R):
        raise ValueError(f"fit window ({r_lo}, {r_hi}) not inside (0, {R})")
    r = u.grid.r
    mask = (r >= r_lo) & (r <= r_hi)
    if int(mask.sum()) < 8:
        raise ValueError(
            f"fit window contains {int(mask.sum())} nodes, need >= 8"
        )
    vals = u.values[mask]
    if np.any(vals <= 0.0):
        raise ValueError(
            "density is nonpositive inside the fit window; shrink it"
        )
    x = np.log(r[mask])
    y = np.log(vals)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    npts = len(x)
    sxx = float(np.sum((x - x.mean()) ** 2))
    stderr = math.sqrt(float(resid @ resid) / (npts - 2) / sxx) if npts > 2 else 0.0
    return ProfileFit(alpha_hat=float(-slope), stderr=stderr,
                      window=(r_lo, r_hi), n_nodes=npts)


def track_lp_norms(traj: KSTrajectory, p_list: Sequence[float]) -> LpSeries:
    """Recompute Lebesgue norms on every stored snapshot and keep the
    running sup per exponent."""
    if not p_list:
        raise ValueError("p_list must be nonempty")
    ps = []
    for p in p_list:
        p = float(p)
        if p < 1.0:
            raise ValueError(f"norm exponent {p} below 1")
        ps.append(p)
    t = np.array([s.t for s in traj.snapshots])
    values = {p: np.array([lp_norm(s.u, p) for s in traj.snapshots])
              for p in ps}
    return LpSeries(t=t, values=values,
                    sup={p: float(v.max()) for p, v in values.items()})


def _last_reliable_snapshot(traj: KSTrajectory) -> RadialField:
    floor = traj.policy.dt_floor
    good = [s for s in traj.snapshots if s.dt_last > 10.0 * floor]
    return (good[-1] if good else traj.snapshots[-1]).u


def _envelope_constant(traj: KSTrajectory, alpha: float, r_min: float) -> float:
    # u <= C r^(-alpha) rearranges to C = sup r^alpha u
    return max(
        weighted_sup(s.u, alpha, r_min=r_min) for s in traj.snapshots
    )


def envelope_verdict(
    traj: KSTrajectory,
    alpha: float,
    exponents: ExponentBundle,
    M: float,
    p_hyp: Optional[float] = None,
    window: Optional[tuple[float, float]] = None,
    refined: Optional[KSTrajectory] = None,
) -> ProfileReport:
    """Judge the pointwise envelope u <= C r^(-alpha) over a run.

    C_measured is the smallest constant over all snapshots, measured
    from the first positive node of each trajectory's own grid outward
    (the fit window restricts only the exponent fit, never the
    constant, so a refined grid is allowed to expose core growth).
    The hypothesis check asks whether sup_t of the p_hyp norm stayed
    below M.  Verdicts:

      conditional   hypothesis held, alpha exceeds the minimal envelope
                    exponent of the bundle, and (when a refined twin is
                    supplied) C moved less than 50% under refinement;
      out_of_theory alpha at or below the minimal exponent, infinite or
                    inadmissible bundle, or hypothesis violated;
      inconclusive  theory-side requirements hold but C is not
                    mesh-stable.

    The default fit window is [1e-3 R, 1e-1 R]; its inner edge is
    clamped to the first positive node, and the effective window is
    recorded in the report.
    """
    if alpha <= 0:
        raise ValueError(f"envelope exponent must be positive, got {alpha}")
    if p_hyp is None:
        p_hyp = exponents.p_bound
    R = traj.grid.R
    if window is None:
        window = (1e-3 * R, 1e-1 * R)
    r1 = traj.grid.r[1]
    r_lo = max(float(window[0]), r1 * (1.0 + 1e-12))
    fit_window = (r_lo, float(window[1]))

    u_fit = _last_reliable_snapshot(traj)
    alpha_hat = alpha_stderr = None
    try:
        fit = fit_profile_exponent(u_fit, fit_window)
        alpha_hat, alpha_stderr = fit.alpha_hat, fit.stderr
    except ValueError:
        pass  # window unusable on this grid; report carries None

    p_set = {1.0, float(p_hyp)}
    if exponents.p0 >= 1.0:
        p_set.add(float(exponents.p0))
    lp = track_lp_norms(traj, sorted(p_set))
    hypothesis_satisfied = lp.sup[float(p_hyp)] <= M

    C = _envelope_constant(traj, alpha, 0.0)
    C_ref = stability = None
    if refined is not None:
        C_ref = _envelope_constant(refined, alpha, 0.0)
        stability = abs(C_ref - C) / max(C, 1e-300)

    reasons: list[str] = []
    if not exponents.admissible:
        reasons.append("exponent bundle not admissible")
    if not math.isfinite(exponents.alpha_lower):
        reasons.append("bundle has no finite envelope exponent")
    elif alpha <= exponents.alpha_lower:
        reasons.append(
            f"alpha = {alpha} at or below minimal exponent "
            f"{exponents.alpha_lower}"
        )
    if not hypothesis_satisfied:
        reasons.append(
            f"norm hypothesis violated: sup ||u||_{p_hyp} = "
            f"{lp.sup[float(p_hyp)]:.6g} > M = {M}"
        )
    if reasons:
        verdict = "out_of_theory"
    elif stability is not None and stability >= 0.5:
        verdict = "inconclusive"
        reasons.append(
            f"envelope constant moved {stability:.2f}x under refinement"
        )
    else:
        verdict = "conditional"

    return ProfileReport(
        alpha=alpha, alpha_hat=alpha_hat, alpha_stderr=alpha_stderr,
        fit_window=fit_window, C_measured=C, C_refined=C_ref,
        stability=stability, lp_sup=lp.sup,
        hypothesis_satisfied=hypothesis_satisfied, p_hyp=float(p_hyp),
        M=M, verdict=verdict, reasons=reasons,
    )


def export_profile_csv(
    path: str,
    traj: KSTrajectory,
    p_list: Sequence[float] = (1.0,),
    alpha: Optional[float] = None,
    r_min: float = 0.0,
) -> str:
    """Per-snapshot series as CSV: time, sup norm, mass, each requested
    Lebesgue norm, and (when alpha is given) the envelope constant."""
    lp = track_lp_norms(traj, p_list)
    header = ["t", "sup_u", "mass"] + [f"u_L{p:g}" for p in lp.values]
    if alpha is not None:
        header.append(f"C_alpha_{alpha:g}")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for i, s in enumerate(traj.snapshots):
            row = [f"{s.t:.12g}", f"{float(np.max(s.u.values)):.12g}",
                   f"{s.mass:.12g}"]
            row += [f"{lp.values[p][i]:.12g}" for p in lp.values]
            if alpha is not None:
                row.append(f"{weighted_sup(s.u, alpha, r_min=r_min):.12g}")
            w.writerow(row)
    return path
