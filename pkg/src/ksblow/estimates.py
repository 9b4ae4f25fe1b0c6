"""Critical-exponent calculus and the weighted-cutoff machinery that
turns a radial chemical field into a one-dimensional heat problem with
bounded coefficients.

The cutoff zeta equals r on [0, R/2] and bends over a quartic blend so
that zeta_r(R) = zeta_rr(R) = 0 with zeta_r >= 0 throughout; z =
zeta^beta * (v - optional origin pin) then satisfies a 1-D reaction
diffusion equation whose coefficients b1, b2, b3 obey power-law
envelopes |b_i| <= C_i r^(beta - 2 + i') with i' = 0, 1, 2.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .grid import RadialField, RadialGrid, gradient_radial, weighted_sup
from .linear import ParabolicState

REGIME_LOW = "q_le_n_half"
REGIME_HIGH = "q_gt_n_half"


@dataclass(frozen=True)
class ExponentBundle:
    n: int
    m: float
    q: float
    s: float
    p_bound: float
    p0: float
    alpha_lower: float
    beta_lower: float
    q_aux: float
    admissible: bool
    regime: str


def compute_exponents(n: int, m: float, q: float, s: float, p_bound: float) -> ExponentBundle:
    """Exponent bookkeeping for the pointwise envelopes.

    p_bound is the L^p index the mass hypothesis controls; it must lie
    in [max(s, 1), n s].  alpha_lower is finite exactly when the
    diffusion/sensitivity gap m - q sits above -p_bound/n.
    """
    n = int(n)
    if n < 2:
        raise ValueError(f"the radial calculus needs dimension n >= 2, got {n}")
    if s <= 0.0:
        raise ValueError(f"production growth s must be positive, got {s}")
    lo, hi = max(s, 1.0), n * s
    if not (lo <= p_bound <= hi):
        raise ValueError(
            f"p_bound must lie in [{lo:.6g}, {hi:.6g}] for s={s}, n={n}; "
            f"got {p_bound}"
        )
    gap = m - q
    p0 = n * (1.0 - gap) / 2.0
    beta_lower = (n * s - p_bound) / p_bound
    den = gap * n + p_bound
    alpha_lower = n * (n * s - p_bound) / (den * p_bound) if den > 0 else math.inf
    hi_gap = (n * s - 2.0 * p_bound) / n
    fp_slack = 1e-12 * (1.0 + abs(hi_gap))  # closed endpoint, roundoff safe
    admissible = (
        -p_bound / n < gap <= hi_gap + fp_slack
        and m > (n - 2.0 * p_bound) / n
    )
    q_aux = p_bound / s
    regime = REGIME_LOW if q_aux <= n / 2.0 else REGIME_HIGH
    return ExponentBundle(n=n, m=float(m), q=float(q), s=float(s),
                          p_bound=float(p_bound), p0=float(p0),
                          alpha_lower=float(alpha_lower),
                          beta_lower=float(beta_lower), q_aux=float(q_aux),
                          admissible=bool(admissible), regime=regime)


def nonlinear_production_envelope(n: int, s: float, eps: float = 0.0) -> float:
    """Envelope exponent n(ns - 1) + eps for the borderline m = q = 1,
    p_bound = 1 family with sublinear production.

    For n >= 3 the sublinear window is (2/n, 1].  In two dimensions
    that window degenerates to the single classical point s = 1; the
    formula stays meaningful down to ns > 1, so n = 2 accepts
    s in (1/2, 1] and keeps the envelope exponent positive.
    """
    n = int(n)
    if n < 2:
        raise ValueError(f"need dimension n >= 2, got {n}")
    s_lo = 2.0 / n if n >= 3 else 1.0 / n
    if not (s_lo < s <= 1.0):
        raise ValueError(f"s must lie in ({s_lo:.6g}, 1] for n={n}, got {s}")
    if eps < 0.0:
        raise ValueError(f"eps must be nonnegative, got {eps}")
    return n * (n * s - 1.0) + eps


@dataclass
class CutoffZeta:
    """r-identity cutoff with a quartic bend on [R/2, R].

    With x = (2r - R)/R on the bend, zeta = (R/2)(1 + x - x^3 + x^4/2);
    this is the Hermite blend matching value and two derivatives at
    R/2, with zeta_r(R) = zeta_rr(R) = 0 and plateau value 3R/4, the
    choice that keeps zeta_r >= 0.
    """
    grid: RadialGrid
    zeta: RadialField
    zeta_r: RadialField
    zeta_rr: RadialField

    @property
    def R(self) -> float:
        return self.grid.R

    def eval(self, r: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        R = self.R
        x = np.clip((2.0 * r - R) / R, 0.0, 1.0)
        blend = (R / 2.0) * (1.0 + x - x**3 + 0.5 * x**4)
        return np.where(r <= R / 2.0, r, blend)

    def eval_r(self, r: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        x = np.clip((2.0 * r - self.R) / self.R, 0.0, 1.0)
        return np.where(r <= self.R / 2.0, 1.0, 1.0 - 3.0 * x**2 + 2.0 * x**3)

    def eval_rr(self, r: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        x = np.clip((2.0 * r - self.R) / self.R, 0.0, 1.0)
        return np.where(r <= self.R / 2.0, 0.0, (12.0 / self.R) * (x**2 - x))


def build_zeta(grid: RadialGrid) -> CutoffZeta:
    cz = CutoffZeta(grid=grid,
                    zeta=RadialField(grid, np.zeros(grid.nnodes)),
                    zeta_r=RadialField(grid, np.zeros(grid.nnodes)),
                    zeta_rr=RadialField(grid, np.zeros(grid.nnodes)))
    cz.zeta = RadialField(grid, cz.eval(grid.r))
    cz.zeta_r = RadialField(grid, cz.eval_r(grid.r))
    cz.zeta_rr = RadialField(grid, cz.eval_rr(grid.r))
    return cz


@dataclass
class ZCoefficients:
    """Coefficients of the transformed 1-D equation and their measured
    power-law envelope constants."""
    beta: float
    b1: RadialField
    b2: RadialField
    b3: RadialField
    C1: float
    C2: float
    C3: float


def build_b_coefficients(zeta: CutoffZeta, beta: float) -> ZCoefficients:
    if beta <= 0.0:
        raise ValueError(f"weight exponent beta must be positive, got {beta}")
    g = zeta.grid
    n = g.n
    z = zeta.zeta.values
    zr = zeta.zeta_r.values
    zrr = zeta.zeta_rr.values
    r = g.r
    b1 = np.empty(g.nnodes)
    b2 = np.empty(g.nnodes)
    b1[1:] = (-beta * (beta - 1.0) * z[1:] ** (beta - 2.0) * zr[1:] ** 2
              - beta * z[1:] ** (beta - 1.0) * zrr[1:])
    b2[1:] = (-2.0 * beta * z[1:] ** (beta - 1.0) * zr[1:]
              + (n - 1.0) / r[1:] * z[1:] ** beta)
    b3 = z**beta
    # the origin values are never used by the residual (interior nodes
    # only); pin them to the first-node values to keep fields finite
    b1[0] = b1[1]
    b2[0] = b2[1]
    rp = r[1:]
    c1 = float(np.max(np.abs(b1[1:]) / rp ** (beta - 2.0)))
    c2 = float(np.max(np.abs(b2[1:]) / rp ** (beta - 1.0)))
    c3 = float(np.max(b3[1:] / rp**beta))
    return ZCoefficients(beta=float(beta),
                         b1=RadialField(g, b1), b2=RadialField(g, b2),
                         b3=RadialField(g, b3), C1=c1, C2=c2, C3=c3)


def z_transform(
    v: RadialField, zeta: CutoffZeta, beta: float, regime: str,
    v_origin: Optional[float] = None,
) -> RadialField:
    """z = zeta^beta * v, with v pinned at its origin value in the
    high-integrability regime so the weight sees only the oscillation."""
    _check_regime(regime)
    vals = v.values
    if regime == REGIME_HIGH:
        pin = vals[0] if v_origin is None else float(v_origin)
        vals = vals - pin
    return RadialField(v.grid, zeta.zeta.values**beta * vals)


@dataclass
class ZResidualReport:
    residual: RadialField
    max_norm: float
    z_r_origin: float
    z_r_wall: float
    dt: float


def z_residual(
    prev: ParabolicState,
    nxt: ParabolicState,
    g: RadialField,
    zeta: CutoffZeta,
    coeffs: ZCoefficients,
    regime: str,
    g_next: Optional[RadialField] = None,
) -> ZResidualReport:
    """Discrete defect of z_t = z_rr - z + b1 vt + b2 v_r + b3 g
    - [regime high] zeta^beta (v_t(0) + v(0)), evaluated at the
    midpoint of a consecutive snapshot pair.  The extra origin terms
    in the high regime come from pinning: -v = -vt - v(0) under
    vt = v - v(0).  Interior nodes only: the transform vanishes at the
    origin and the wall terms sit outside the identity region, so
    endpoint rows are reported as 0.
    """
    _check_regime(regime)
    gr = g.grid
    dt = nxt.t - prev.t
    if dt <= 0.0:
        raise ValueError(f"snapshot pair must be time ordered, got dt={dt}")
    if prev.v.grid is not gr or nxt.v.grid is not gr:
        raise ValueError("snapshot fields and source live on different grids")
    beta = coeffs.beta
    z_prev = z_transform(prev.v, zeta, beta, regime)
    z_next = z_transform(nxt.v, zeta, beta, regime)
    z_t = (z_next.values - z_prev.values) / dt
    v_t0 = (nxt.v.values[0] - prev.v.values[0]) / dt
    v_mid = 0.5 * (prev.v.values + nxt.v.values)
    vt_mid = v_mid - v_mid[0] if regime == REGIME_HIGH else v_mid
    z_mid = 0.5 * (z_prev.values + z_next.values)
    g_mid = g.values if g_next is None else 0.5 * (g.values + g_next.values)
    vr_mid = gradient_radial(RadialField(gr, v_mid)).values
    zrr = _second_derivative_interior(gr.r, z_mid)
    flag = 1.0 if regime == REGIME_HIGH else 0.0
    spatial = (zrr - z_mid[1:-1]
               + coeffs.b1.values[1:-1] * vt_mid[1:-1]
               + coeffs.b2.values[1:-1] * vr_mid[1:-1]
               + coeffs.b3.values[1:-1] * g_mid[1:-1]
               - flag * coeffs.b3.values[1:-1] * (v_t0 + v_mid[0]))
    res = np.zeros(gr.nnodes)
    res[1:-1] = z_t[1:-1] - spatial
    zr0 = _endpoint_slope(gr.r[:3], z_mid[:3])
    zrw = gradient_radial(RadialField(gr, z_mid)).values[-1]
    return ZResidualReport(residual=RadialField(gr, res),
                           max_norm=float(np.max(np.abs(res))),
                           z_r_origin=float(zr0), z_r_wall=float(zrw),
                           dt=float(dt))


def _second_derivative_interior(r: np.ndarray, v: np.ndarray) -> np.ndarray:
    hm = np.diff(r)[:-1]
    hp = np.diff(r)[1:]
    return 2.0 * (hm * v[2:] - (hm + hp) * v[1:-1] + hp * v[:-2]) / (
        hm * hp * (hm + hp)
    )


def _endpoint_slope(r3: np.ndarray, v3: np.ndarray) -> float:
    # derivative at r3[0] of the quadratic through three leading nodes
    a = np.vander(r3 - r3[0], 3, increasing=True)
    return float(np.linalg.solve(a, v3)[1])


def _check_regime(regime: str) -> None:
    if regime not in (REGIME_LOW, REGIME_HIGH):
        raise ValueError(
            f"regime must be {REGIME_LOW!r} or {REGIME_HIGH!r}, got {regime!r}"
        )


def holder_space(v: RadialField, kappa: float) -> float:
    """sup over positive nodes of |v - v(0)| / r^kappa."""
    if not (0.0 < kappa <= 1.0):
        raise ValueError(f"kappa must lie in (0, 1], got {kappa}")
    r = v.grid.r[1:]
    return float(np.max(np.abs(v.values[1:] - v.values[0]) / r**kappa))


def holder_time(times: np.ndarray, values: np.ndarray, theta: float) -> float:
    """sup over sample pairs of |v(t) - v(s)| / |t - s|^theta, with the
    sample subsampled to at most 2000 points to cap the pair count."""
    if not (0.0 < theta < 1.0):
        raise ValueError(f"theta must lie in (0, 1), got {theta}")
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    if t.shape != v.shape or t.ndim != 1 or t.shape[0] < 2:
        raise ValueError("need matching 1-D time/value samples, at least 2")
    if t.shape[0] > 2000:
        stride = int(math.ceil(t.shape[0] / 2000))
        keep = np.unique(np.append(np.arange(0, t.shape[0], stride),
                                   t.shape[0] - 1))
        t = t[keep]
        v = v[keep]
    dt = np.abs(np.subtract.outer(t, t))
    dv = np.abs(np.subtract.outer(v, v))
    iu = np.triu_indices(t.shape[0], k=1)
    return float(np.max(dv[iu] / dt[iu] ** theta))


@dataclass
class EnvelopeReport:
    C_measured: float
    C_refined: Optional[float]
    stability: Optional[float]
    verdict: str
    beta: float
    below_threshold: bool


def verify_gradient_envelope(
    v_fields: Sequence[RadialField],
    beta: float,
    q_aux: Optional[float] = None,
    refined_v_fields: Optional[Sequence[RadialField]] = None,
    r_min: float = 0.0,
) -> EnvelopeReport:
    """Measure C = sup over snapshots and admitted nodes of
    r^beta |v_r|, optionally against a refined-grid twin.

    The pointwise theory only covers beta above (n - q_aux)/q_aux; a
    smaller beta is allowed (that is how blow-up of the constant is
    exhibited) but is flagged and warned about.
    """
    if not v_fields:
        raise ValueError("need at least one snapshot field")
    n = v_fields[0].grid.n
    below = False
    if q_aux is not None:
        thr = (n - q_aux) / q_aux
        if beta <= thr:
            below = True
            warnings.warn(
                f"beta={beta:.4g} is at or below the envelope threshold "
                f"{thr:.4g}; the weighted sup need not stay bounded",
                stacklevel=2,
            )

    def _measure(fields: Sequence[RadialField]) -> float:
        return max(
            weighted_sup(gradient_radial(f), beta, r_min=r_min) for f in fields
        )

    c = _measure(v_fields)
    c_ref = None
    stability = None
    verdict = "inconclusive"
    if refined_v_fields is not None:
        c_ref = _measure(refined_v_fields)
        stability = abs(c_ref - c) / max(c, 1e-300)
        if c_ref >= 2.0 * c:
            verdict = "growth"
        elif stability < 0.2:
            verdict = "bounded"
    return EnvelopeReport(C_measured=c, C_refined=c_ref, stability=stability,
                          verdict=verdict, beta=float(beta),
                          below_threshold=below)
