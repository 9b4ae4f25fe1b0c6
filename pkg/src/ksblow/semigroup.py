"""Spectral laboratory for A = -Lap + 1 with no-flux walls.

Eigenpairs are computed from the discrete operator itself: the
weighted similarity transform D^{1/2} A D^{-1/2} (D = cell weights) is
a symmetric tridiagonal matrix, so the discrete spectrum comes out of
eigh_tridiagonal and the eigenfields satisfy the discrete eigen
relation to machine precision on any grid, interval or radial.  On a
uniform interval the eigenfields coincide with sampled Neumann cosines
exactly, which the tests use as a closed-form oracle.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import eigh_tridiagonal

from . import kernels
from .grid import RadialField, RadialGrid, gradient_radial, lp_norm


@dataclass
class SpectralOperator:
    grid: RadialGrid
    eigenvalues: np.ndarray   # (K+1,) ascending, first is 1 (constant mode)
    eigenfields: np.ndarray   # (nnodes, K+1), orthonormal in the ball L^2
    dfields: np.ndarray       # radial derivative of each eigenfield

    @property
    def K(self) -> int:
        return self.eigenvalues.shape[0] - 1


@dataclass
class SemigroupAction:
    field: RadialField
    t: float
    mu: float
    sigma: int
    tail_bound: float   # lambda_K^mu * exp(-lambda_K t)


@dataclass
class DecayFit:
    slope: float
    predicted: float
    rel_gap: float
    t_grid: np.ndarray
    sup_norms: np.ndarray


def build_spectral(grid: RadialGrid, K: int) -> SpectralOperator:
    """First K+1 discrete eigenpairs of A on the given grid."""
    K = int(K)
    m = grid.nnodes
    if K < 1:
        raise ValueError(f"need K >= 1 modes, got {K}")
    if K > m // 4:
        raise ValueError(
            f"K = {K} too large for {m} nodes; the upper quarter of the "
            f"discrete spectrum is unusable, keep K <= {m // 4}"
        )
    w = grid.w1d
    dc = grid.rn1_face / grid.h_face
    diag = np.ones(m)
    diag[:-1] += dc / w[:-1]
    diag[1:] += dc / w[1:]
    off = -dc / np.sqrt(w[:-1] * w[1:])
    vals, vecs = eigh_tridiagonal(diag, off, select="i", select_range=(0, K))
    # unweight and normalize in the full ball measure
    phi = vecs / np.sqrt(w)[:, None]
    vol_total = grid.cell_volumes.sum()
    phi /= math.sqrt(vol_total / w.sum())
    # deterministic sign: largest-magnitude entry positive
    for k in range(phi.shape[1]):
        j = int(np.argmax(np.abs(phi[:, k])))
        if phi[j, k] < 0:
            phi[:, k] = -phi[:, k]
    dphi = np.empty_like(phi)
    for k in range(phi.shape[1]):
        dphi[:, k] = gradient_radial(RadialField(grid, phi[:, k])).values
    return SpectralOperator(grid=grid, eigenvalues=vals, eigenfields=phi,
                            dfields=dphi)


def eigen_residual(op: SpectralOperator) -> float:
    """max over modes of the ball L^2 norm of A phi - lambda phi."""
    g = op.grid
    worst = 0.0
    for k in range(op.eigenvalues.shape[0]):
        phi = op.eigenfields[:, k]
        av = kernels.apply_helmholtz(phi, g.rn1_face, g.w1d, g.h_face)
        res = lp_norm(RadialField(g, av - op.eigenvalues[k] * phi), 2.0)
        worst = max(worst, res)
    return float(worst)


def project(op: SpectralOperator, phi: np.ndarray) -> np.ndarray:
    """Ball L^2 coefficients of phi against the eigenfields."""
    return op.eigenfields.T @ (op.grid.cell_volumes * phi)


def synthesize(op: SpectralOperator, coef: np.ndarray) -> np.ndarray:
    return op.eigenfields @ coef


def apply_semigroup(
    op: SpectralOperator,
    phi: RadialField | np.ndarray,
    t: float,
    mu: float = 0.0,
    sigma: int = 0,
) -> SemigroupAction:
    """grad^sigma A^mu e^{-tA} phi via the truncated eigenexpansion."""
    vals = phi.values if isinstance(phi, RadialField) else np.asarray(phi, float)
    if vals.shape != (op.grid.nnodes,):
        raise ValueError("data length does not match the operator grid")
    if sigma not in (0, 1):
        raise ValueError(f"sigma must be 0 or 1, got {sigma}")
    if t < 0.0:
        raise ValueError(f"time must be nonnegative, got {t}")
    if mu > 0.0 and t <= 0.0:
        raise ValueError("fractional power mu > 0 needs strictly positive time")
    lam = op.eigenvalues
    coef = project(op, vals) * lam**mu * np.exp(-lam * t)
    basis = op.dfields if sigma == 1 else op.eigenfields
    out = basis @ coef
    tail = float(lam[-1] ** mu * math.exp(-lam[-1] * t))
    return SemigroupAction(field=RadialField(op.grid, out), t=float(t),
                           mu=float(mu), sigma=int(sigma), tail_bound=tail)


def fit_decay_exponent(
    op: SpectralOperator,
    family: Sequence[np.ndarray | RadialField],
    t_grid: np.ndarray,
    sigma: int,
    mu: float,
    p: float,
    lam_reg: float = 0.0,
    s_exp: float = 0.0,
) -> DecayFit:
    """Log-log slope of sup over the family of ||grad^sigma A^mu
    e^{-tA} phi||_p, against the predicted exponent
    lam_reg - mu - (sigma + s_exp)/2."""
    if len(family) < 20:
        raise ValueError(f"need a family of at least 20 fields, got {len(family)}")
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.shape[0] < 5:
        raise ValueError("t_grid must hold at least 5 times")
    if np.any(t_grid <= 0.0) or np.any(t_grid > 0.5):
        raise ValueError("t_grid must lie in (0, 0.5]")
    if np.any(np.diff(t_grid) <= 0.0):
        raise ValueError("t_grid must be strictly increasing")
    sup = np.empty_like(t_grid)
    for i, t in enumerate(t_grid):
        best = 0.0
        for phi in family:
            act = apply_semigroup(op, phi, float(t), mu=mu, sigma=sigma)
            best = max(best, lp_norm(act.field, p))
        sup[i] = best
    if np.any(sup <= 0.0):
        raise ValueError("family norms vanish on the grid; cannot fit a slope")
    slope, _ = np.polyfit(np.log(t_grid), np.log(sup), 1)
    predicted = lam_reg - mu - (sigma + s_exp) / 2.0
    rel_gap = abs(slope - predicted) / abs(predicted) if predicted != 0 else math.inf
    return DecayFit(slope=float(slope), predicted=float(predicted),
                    rel_gap=float(rel_gap), t_grid=t_grid, sup_norms=sup)


def random_l2_family(
    op: SpectralOperator, count: int, seed: int, decay: float = 0.0
) -> list[np.ndarray]:
    """Deterministic family of L^2-normalized fields built in the span
    of the operator modes; decay > 0 damps coefficients like k^-decay
    for smoother members."""
    rng = np.random.default_rng(seed)
    kk = np.arange(op.eigenvalues.shape[0], dtype=float)
    damp = (1.0 + kk) ** (-decay)
    out = []
    for _ in range(count):
        c = rng.normal(size=kk.shape[0]) * damp
        c /= np.linalg.norm(c)  # eigenfields are L^2-orthonormal
        out.append(synthesize(op, c))
    return out
