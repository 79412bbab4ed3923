"""Exact-cone Dirichlet-Neumann machinery.

On the exact cone the DN operator diagonalizes over the log-radial modes: it
is the Fourier multiplier g(zeta) = k1(zeta, theta*) / k(zeta, theta*) built
from the conical Legendre function and its angle derivative.  This module
builds that symbol table, applies it, reconstructs the interior harmonic
extension row by row through the kernel ratio k(zeta, theta)/k(zeta, theta*),
and numerically verifies the kernel integral bounds that make the operator a
first-order map between Sobolev spaces.

All kernel ratios are exponentials of log differences, so the machinery
survives zeta*theta up to 500; every ratio here is evaluated through the
quadrature route (the large-frequency branch would imprint its O(1e-3)
switch-over seam onto plateau diagnostics).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .conical import (
    ConeAngle,
    ConicalParams,
    _dtheta_ratios_from_seed,
    _quad_log_k,
    bessel_i0_derivative_scaled,
    bessel_i_scaled,
)
from .errors import DomainError, EvaluationError
from .grid import GridFn, SigmaGrid, Spectrum, to_gridfn, to_spectrum
from .strip import StripField, StripGrid

__all__ = [
    "SymbolTable",
    "KernelBoundsReport",
    "build_symbol_table",
    "dn_flat",
    "extend_flat",
    "verify_kernel_bounds",
]

# quadrature-only parameter set used for every symbol/bound evaluation
_QUAD_ONLY = ConicalParams(asym_threshold=math.inf)


@dataclass(frozen=True)
class SymbolTable:
    """First-order DN symbol g over the grid frequencies (FFT ordering)."""

    grid: SigmaGrid
    theta_star: ConeAngle
    g: np.ndarray = field(repr=False)
    params: ConicalParams = _QUAD_ONLY

    def __post_init__(self) -> None:
        g = np.array(self.g, dtype=float, copy=True)
        g.setflags(write=False)
        object.__setattr__(self, "g", g)


def _ratio_k1_over_k(zeta: float, theta: float, p: ConicalParams) -> float:
    """First-derivative ratio by quadrature (no branch switch)."""
    _, r1 = _quad_log_k(abs(zeta), np.array([theta]), p, want_deriv=True)
    return float(r1[0])


def _log_k(zeta: float, theta: float, p: ConicalParams) -> float:
    lk, _ = _quad_log_k(abs(zeta), np.array([theta]), p, want_deriv=False)
    return float(lk[0])


def build_symbol_table(grid: SigmaGrid, theta_star: ConeAngle,
                       p: ConicalParams = _QUAD_ONLY) -> SymbolTable:
    """Evaluate g(zeta_k) = k1(zeta_k, theta*)/k(zeta_k, theta*) on the grid.

    Even in zeta by construction (evaluated at |zeta_k|); strictly positive.
    """
    th = theta_star.theta_star
    cache: dict[float, float] = {}
    g = np.empty(grid.n_sigma)
    for i, z in enumerate(np.abs(grid.zeta)):
        z = float(z)
        if z not in cache:
            try:
                cache[z] = _ratio_k1_over_k(z, th, p)
            except EvaluationError as exc:
                raise EvaluationError(f"symbol evaluation failed at zeta_k={z:.6g}: {exc}")
        g[i] = cache[z]
    return SymbolTable(grid=grid, theta_star=theta_star, g=g, params=p)


def dn_flat(phi: GridFn, table: SymbolTable) -> GridFn:
    """Apply the exact-cone DN multiplier g to the boundary data."""
    if phi.grid != table.grid:
        raise DomainError("grid mismatch between data and symbol table")
    coeffs = to_spectrum(phi).coeffs * table.g
    return to_gridfn(Spectrum(phi.grid, coeffs))


def extend_flat(phi: GridFn, theta_samples: np.ndarray, table: SymbolTable) -> StripField:
    """Harmonic extension of phi into the cone, sampled on angular stations.

    Row i carries the field at theta_samples[i]: in transform space the row
    is phihat * k(zeta, theta_i)/k(zeta, theta*).  The returned field stores
    the stations in ``y_samples`` (as fractions theta/theta*).
    """
    th_star = table.theta_star.theta_star
    thetas = np.asarray(theta_samples, dtype=float)
    if thetas.ndim != 1 or thetas.size == 0:
        raise DomainError("theta_samples must be a nonempty 1-d array")
    if np.any(thetas <= 0.0) or np.any(thetas > th_star + 1e-15):
        raise DomainError("theta_samples must lie in (0, theta*]")

    grid = phi.grid
    phihat = to_spectrum(phi).coeffs
    p = table.params
    n = grid.n_sigma
    abs_zeta = np.abs(grid.zeta)

    # kernel ratio k(zeta, theta)/k(zeta, theta*) per unique frequency
    ratio_by_z: dict[float, np.ndarray] = {}
    for z in np.unique(abs_zeta):
        z = float(z)
        log_row, _ = _quad_log_k(z, thetas, p, want_deriv=False)
        ratio_by_z[z] = np.exp(log_row - _log_k(z, th_star, p))
    rows = np.vstack([ratio_by_z[float(z)] for z in abs_zeta])

    values = np.empty((n, thetas.size))
    for j in range(thetas.size):
        coeffs = phihat * rows[:, j]
        col = to_gridfn(Spectrum(grid, coeffs)).values
        values[:, j] = np.real(col)
        worst = float(np.max(np.abs(np.imag(col))))
        if worst > 1e-9 * max(1.0, float(np.max(np.abs(values[:, j])))):
            raise EvaluationError(f"extension row {j} lost realness ({worst:.2e})")

    sgrid = StripGrid(sigma=grid, n_y=max(16, thetas.size))
    return StripField(grid=sgrid, values=values, y_samples=thetas / th_star)


# ---------------------------------------------------------------------------
# kernel bound verification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class KernelBoundsReport:
    """Suprema of the kernel ratio integrals and the Bessel ratio integrals."""

    zeta: np.ndarray
    s_values: np.ndarray            # shape (4, n_zeta): S0, S1, S2, S3
    s_sup: tuple[float, float, float, float]
    s_argsup: tuple[float, float, float, float]
    plateau_spread: tuple[float, float, float, float]
    bessel_x: np.ndarray
    bessel_integrals: np.ndarray    # shape (5, n_x)
    bessel_sup: float               # sup over k, x of the plain integral
    bessel_weighted_sup: float      # sup over k, x of x * integral
    passed: bool


def _theta_rule(theta_star: float, n_per: int = 16, n_halvings: int = 13
                ) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre panels on (0, theta*], geometrically refined toward 0."""
    from numpy.polynomial.legendre import leggauss
    edges = [theta_star]
    for _ in range(n_halvings):
        edges.append(edges[-1] / 2.0)
    edges.append(0.0)
    edges.reverse()
    x, w = leggauss(n_per)
    ts, ws = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        half = 0.5 * (b - a)
        ts.append(a + half * (x + 1.0))
        ws.append(half * w)
    return np.concatenate(ts), np.concatenate(ws)


def _y_rule_toward_one(x_scale: float, n_per: int = 16) -> tuple[np.ndarray, np.ndarray]:
    """Panels on [0, 1] refined toward y=1 (integrand scale ~ 1/(1+x))."""
    from numpy.polynomial.legendre import leggauss
    width = 1.0 / (1.0 + x_scale)
    edges = [0.0]
    gap = 1.0
    while gap > width and len(edges) < 30:
        gap /= 2.0
        edges.append(1.0 - gap)
    edges.append(1.0)
    x, w = leggauss(n_per)
    ts, ws = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        half = 0.5 * (b - a)
        ts.append(a + half * (x + 1.0))
        ws.append(half * w)
    return np.concatenate(ts), np.concatenate(ws)


def _kernel_s_values(zeta: float, theta_star: float, p: ConicalParams,
                     thetas: np.ndarray, weights: np.ndarray) -> tuple[float, float, float, float]:
    """S_m(zeta) for m = 0..3 by quadrature over the angular interval."""
    log_k, r1 = _quad_log_k(abs(zeta), thetas, p, want_deriv=True)
    log_star = _log_k(zeta, theta_star, p)
    ratios = _dtheta_ratios_from_seed(abs(zeta), thetas, r1, 3)
    sq = np.exp(2.0 * (log_k - log_star))          # |k/k*|^2 rowwise
    bracket = math.sqrt(1.0 + zeta * zeta)
    s0 = bracket * float(np.sum(weights * sq))
    s1 = (1.0 / bracket) * float(np.sum(weights * (ratios[0] ** 2) * sq))
    s2 = bracket ** (-3) * float(np.sum(weights * (ratios[1] ** 2) * (thetas ** 4) * sq))
    s3 = bracket ** (-5) * float(np.sum(weights * (ratios[2] ** 2) * (thetas ** 6) * sq))
    return s0, s1, s2, s3


def verify_kernel_bounds(table: SymbolTable, zeta_max: float) -> KernelBoundsReport:
    """Evaluate the kernel-ratio integrals S_0..S_3 over [0, zeta_max] and the
    Bessel derivative-ratio integrals over x in [0, 50]; report suprema,
    arg-suprema, and plateau behavior of the running suprema."""
    if not (0.0 < zeta_max <= 500.0):
        raise DomainError(f"zeta_max must lie in (0, 500], got {zeta_max}")
    th_star = table.theta_star.theta_star
    p = table.params

    # zeta samples: geometric lattice plus the grid frequencies
    geo = np.geomspace(0.05, zeta_max, 64)
    freqs = np.abs(table.grid.zeta)
    freqs = freqs[(freqs > 0) & (freqs <= zeta_max)]
    zetas = np.unique(np.concatenate([[0.0], geo, freqs]))

    thetas, weights = _theta_rule(th_star)
    s_vals = np.empty((4, zetas.size))
    for i, z in enumerate(zetas):
        s_vals[:, i] = _kernel_s_values(float(z), th_star, p, thetas, weights)

    s_sup = tuple(float(np.max(s_vals[m])) for m in range(4))
    s_argsup = tuple(float(zetas[int(np.argmax(s_vals[m]))]) for m in range(4))

    # plateau measured on the fixed lattice only: table frequencies densify
    # the suprema above but must not move the spread's sample points, or the
    # verdict would depend on grid resolution
    geo_mask = np.isin(zetas, geo)
    spreads = []
    for m in range(4):
        running = np.maximum.accumulate(s_vals[m][geo_mask])
        upper = running[zetas[geo_mask] >= zeta_max / 2.0]
        spreads.append(float((upper.max() - upper.min()) / upper.max()))
    plateau_spread = tuple(spreads)

    # Bessel ratio integrals
    from scipy.special import ive

    from .conical import _I0_DERIV_COMBO

    xs = np.linspace(0.0, 50.0, 200)
    bessel = np.empty((5, xs.size))
    for j, x in enumerate(xs):
        y, wy = _y_rule_toward_one(float(x))
        i0 = bessel_i_scaled(0, float(x))
        scale = np.exp(y * x - x) / i0
        for k in range(5):
            vals = sum(c * ive(m, y * x) for m, c in _I0_DERIV_COMBO[k].items())
            ratio = vals * scale
            bessel[k, j] = float(np.sum(wy * ratio**2))
    bessel_sup = float(np.max(bessel))
    bessel_weighted_sup = float(np.max(bessel * xs[None, :]))

    passed = (
        all(np.isfinite(s_sup))
        and max(plateau_spread) < 0.05
        and bessel_sup <= 1.0 + 1e-9
        and bessel_weighted_sup <= 3.0 + 1e-9
    )
    return KernelBoundsReport(
        zeta=zetas,
        s_values=s_vals,
        s_sup=s_sup,
        s_argsup=s_argsup,
        plateau_spread=plateau_spread,
        bessel_x=xs,
        bessel_integrals=bessel,
        bessel_sup=bessel_sup,
        bessel_weighted_sup=bessel_weighted_sup,
        passed=passed,
    )
