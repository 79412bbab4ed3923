"""Variable-profile Dirichlet-Neumann operator through the strip problem.

After the log-radial change of variables the harmonic extension into a
perturbed cone solves a degenerate elliptic problem on the half-open strip
(sigma, y) in R x (0, 1]:

    -div(A grad v) + gamma v = 0,      A = sin(y eta) [[eta, -y eta_s],
                                                       [-y eta_s, (1+y^2 eta_s^2)/eta]],
    gamma = eta sin(y eta) / 4,        eta = eta(sigma), eta_s = d eta / d sigma,

with Dirichlet data phi on y = 1 and no condition on y = 0 where A vanishes
(the axis is a natural boundary).  det A = sin^2(y eta) identically and the
quadratic form satisfies V^T A V >= y * l(eta) |V|^2 with the explicit
profile constant l computed by :func:`sobolev_functionals`.

Discretization: spectral collocation in sigma (periodic, even node count)
composed with a piecewise-linear finite-volume energy in y on cell centers
y_j = (j - 1/2)/n_y.  The discrete energy sums segment terms between
consecutive centers (midpoint coefficient evaluation) plus a top half
segment [1 - dy/2, 1] that couples the last row to the boundary data, so the
assembled system is symmetric positive definite block tridiagonal with dense
sigma blocks; it is solved by block Cholesky elimination.

The boundary operator comes out two independent ways: a one-sided
second-order collocation stencil for dv/dy at y = 1 (reported), and the
variational flux obtained by differentiating the discrete energy with
respect to the boundary data (diagnostic).  Their relative gap is recorded
as ``residual_norm`` on the result.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .conical import ConeAngle, sinc
from .errors import DomainError, EvaluationError
from .grid import GridFn, SigmaGrid, sobolev_norm

__all__ = [
    "ConeProfile",
    "StripGrid",
    "StripField",
    "Coefficients",
    "DNResult",
    "assemble_coefficients",
    "solve_strip",
    "dn_general",
    "sobolev_functionals",
    "dsigma_values",
]


@lru_cache(maxsize=8)
def _spectral_d1(grid: SigmaGrid) -> np.ndarray:
    """Real antisymmetric spectral differentiation matrix (Nyquist dropped)."""
    n = grid.n_sigma
    zeta = np.array(grid.zeta, dtype=float)
    zeta[n // 2] = 0.0
    eye = np.eye(n)
    d1 = np.real(np.fft.ifft(1j * zeta[:, None] * np.fft.fft(eye, axis=0), axis=0))
    d1 = 0.5 * (d1 - d1.T)
    d1.setflags(write=False)
    return d1


def dsigma_values(grid: SigmaGrid, values: np.ndarray) -> np.ndarray:
    """Spectral d/dsigma along axis 0 for real arrays, Nyquist mode dropped
    (matches the differentiation matrix used in the solver)."""
    vals = np.asarray(values, dtype=float)
    zeta = np.array(grid.zeta, dtype=float)
    zeta[grid.n_sigma // 2] = 0.0
    shape = (-1,) + (1,) * (vals.ndim - 1)
    hat = np.fft.fft(vals, axis=0) * (1j * zeta).reshape(shape)
    return np.real(np.fft.ifft(hat, axis=0))


@dataclass(frozen=True)
class ConeProfile:
    """Cone opening profile eta(sigma) = theta* + eta_tilde(sigma)."""

    theta_star: ConeAngle
    eta_tilde: GridFn

    def __post_init__(self) -> None:
        tilde = self.eta_tilde.real_values(tol=1e-10)
        sup = float(np.max(np.abs(tilde)))
        th = self.theta_star.theta_star
        if sup >= min(th, np.pi - th):
            raise DomainError(
                f"profile perturbation reaches {sup:.6g}, must stay below "
                f"min(theta*, pi - theta*) = {min(th, np.pi - th):.6g}")
        eta = th + tilde
        eta_s = dsigma_values(self.grid, tilde)
        eta.setflags(write=False)
        eta_s.setflags(write=False)
        object.__setattr__(self, "_eta", eta)
        object.__setattr__(self, "_eta_sigma", eta_s)

    @property
    def grid(self) -> SigmaGrid:
        return self.eta_tilde.grid

    @property
    def eta(self) -> np.ndarray:
        return self._eta

    @property
    def eta_sigma(self) -> np.ndarray:
        return self._eta_sigma

    @property
    def sup_tilde(self) -> float:
        return float(np.max(np.abs(self.eta_tilde.real_values(tol=1e-10))))

    @property
    def sup_slope(self) -> float:
        return float(np.max(np.abs(self.eta_sigma)))

    @classmethod
    def flat(cls, grid: SigmaGrid, theta_star: ConeAngle) -> "ConeProfile":
        return cls(theta_star=theta_star, eta_tilde=GridFn.zeros(grid))


@dataclass(frozen=True)
class StripGrid:
    """Tensor grid: spectral sigma nodes times n_y cell centers in y."""

    sigma: SigmaGrid
    n_y: int

    def __post_init__(self) -> None:
        if self.n_y < 16:
            raise DomainError(f"n_y must be at least 16, got {self.n_y}")

    @property
    def delta_y(self) -> float:
        return 1.0 / self.n_y

    @property
    def centers(self) -> np.ndarray:
        return (np.arange(self.n_y) + 0.5) / self.n_y

    @property
    def faces(self) -> np.ndarray:
        return np.arange(self.n_y + 1) / self.n_y


@dataclass(frozen=True)
class StripField:
    """Real field sampled on the strip: values[i, j] at (sigma_i, y_j).

    Ordinarily the columns sit on the cell centers of ``grid``; fields
    produced by evaluating at explicit angular stations carry those stations
    in ``y_samples`` instead (fractions of the opening angle).
    """

    grid: StripGrid
    values: np.ndarray = field(repr=False)
    y_samples: np.ndarray | None = None

    def __post_init__(self) -> None:
        vals = np.array(self.values, dtype=float, copy=True)
        if self.y_samples is not None:
            ys = np.array(self.y_samples, dtype=float, copy=True)
            if vals.shape != (self.grid.sigma.n_sigma, ys.size):
                raise DomainError(
                    f"values shape {vals.shape} does not match "
                    f"({self.grid.sigma.n_sigma}, {ys.size})")
            ys.setflags(write=False)
            object.__setattr__(self, "y_samples", ys)
        elif vals.shape != (self.grid.sigma.n_sigma, self.grid.n_y):
            raise DomainError(
                f"values shape {vals.shape} does not match grid "
                f"({self.grid.sigma.n_sigma}, {self.grid.n_y})")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def ys(self) -> np.ndarray:
        return self.y_samples if self.y_samples is not None else self.grid.centers

    def boundary_trace(self) -> np.ndarray:
        """Field at y = 1: one-sided second-order extrapolation from the top
        three cell centers, or the y = 1 column when stations include it."""
        if self.y_samples is not None:
            if abs(float(self.y_samples[-1]) - 1.0) < 1e-12:
                return np.array(self.values[:, -1])
            raise DomainError("stations do not include y = 1; no trace defined")
        v = self.values
        return (15.0 * v[:, -1] - 10.0 * v[:, -2] + 3.0 * v[:, -3]) / 8.0


@dataclass(frozen=True)
class Coefficients:
    """Diffusion matrix entries on the y faces and the weight on centers.

    ``a11``, ``a12``, ``a22`` have shape (n_sigma, n_y + 1) (columns are the
    faces y = j dy); ``gamma`` has shape (n_sigma, n_y).  ``a*_top`` are the
    same entries at the half-segment station y = 1 - dy/4 used by the
    boundary coupling.
    """

    grid: StripGrid
    a11: np.ndarray = field(repr=False)
    a12: np.ndarray = field(repr=False)
    a22: np.ndarray = field(repr=False)
    gamma: np.ndarray = field(repr=False)
    a11_top: np.ndarray = field(repr=False)
    a12_top: np.ndarray = field(repr=False)
    a22_top: np.ndarray = field(repr=False)


def _coeff_entries(profile: ConeProfile, y: np.ndarray
                   ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """A entries at stations y (columns) for every sigma (rows)."""
    eta = profile.eta[:, None]
    eta_s = profile.eta_sigma[:, None]
    yy = np.asarray(y, dtype=float)[None, :]
    s = np.sin(yy * eta)
    a11 = s * eta
    a12 = -s * yy * eta_s
    a22 = s * (1.0 + (yy * eta_s) ** 2) / eta
    return a11, a12, a22


def assemble_coefficients(profile: ConeProfile, grid: StripGrid) -> Coefficients:
    """Evaluate the diffusion matrix on the faces and the zeroth-order weight
    on the centers.  det A = sin^2(y eta) holds identically."""
    if profile.grid != grid.sigma:
        raise DomainError("profile and strip grid live on different sigma grids")
    a11, a12, a22 = _coeff_entries(profile, grid.faces)
    y_top = np.array([1.0 - grid.delta_y / 4.0])
    t11, t12, t22 = _coeff_entries(profile, y_top)
    centers = grid.centers
    gamma = profile.eta[:, None] * np.sin(centers[None, :] * profile.eta[:, None]) / 4.0
    return Coefficients(grid=grid, a11=a11, a12=a12, a22=a22, gamma=gamma,
                        a11_top=t11[:, 0], a12_top=t12[:, 0], a22_top=t22[:, 0])


def _segment_blocks(d1: np.ndarray, a11: np.ndarray, a12: np.ndarray,
                    a22: np.ndarray, gap: float
                    ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(S, T, U) for one y segment: S = D1^T diag(a11) D1 / 2,
    T = D1^T diag(a12)/gap, U = 2 diag(a22)/gap^2."""
    s_blk = 0.5 * (d1.T @ (a11[:, None] * d1))
    t_blk = (d1.T * a12[None, :]) / gap
    u_diag = 2.0 * a22 / gap**2
    return s_blk, t_blk, u_diag


def _assemble_system(profile: ConeProfile, coeffs: Coefficients,
                     phi: np.ndarray, source: np.ndarray | None
                     ) -> tuple[list[np.ndarray], list[np.ndarray], np.ndarray]:
    """Block-tridiagonal normal equations of the discrete energy.

    Returns (diag blocks D_j, coupling blocks O_j between rows j and j+1,
    right-hand sides) for the cell-center unknowns, boundary data eliminated
    into the last right-hand side.
    """
    grid = coeffs.grid
    n_s, n_y = grid.sigma.n_sigma, grid.n_y
    dy, ds = grid.delta_y, grid.sigma.delta
    d1 = _spectral_d1(grid.sigma)

    diag = [np.zeros((n_s, n_s)) for _ in range(n_y)]
    coup = [np.zeros((n_s, n_s)) for _ in range(n_y - 1)]
    rhs = np.zeros((n_y, n_s))

    # interior segments between centers j and j+1; midpoint is face j+1
    for j in range(n_y - 1):
        f = j + 1
        s_blk, t_blk, u_diag = _segment_blocks(
            d1, coeffs.a11[:, f], coeffs.a12[:, f], coeffs.a22[:, f], dy)
        w = ds * dy
        sym = s_blk + t_blk + t_blk.T
        anti = s_blk - t_blk - t_blk.T
        u_mat = np.diag(u_diag)
        diag[j] += w * (anti + u_mat)
        diag[j + 1] += w * (sym + u_mat)
        coup[j] += w * (s_blk + t_blk - t_blk.T - u_mat)

    # top half segment [1 - dy/2, 1]: couples row n_y - 1 to the data phi
    s_t, t_t, u_t = _segment_blocks(
        d1, coeffs.a11_top, coeffs.a12_top, coeffs.a22_top, dy / 2.0)
    w_t = ds * (dy / 2.0)
    u_mat = np.diag(u_t)
    diag[n_y - 1] += w_t * (s_t - t_t - t_t.T + u_mat)
    rhs[n_y - 1] -= w_t * ((s_t + t_t - t_t.T - u_mat) @ phi)

    # zeroth-order weight and source, midpoint rule per cell
    for j in range(n_y):
        diag[j][np.arange(n_s), np.arange(n_s)] += 2.0 * ds * dy * coeffs.gamma[:, j]
        if source is not None:
            rhs[j] += 2.0 * ds * dy * source[:, j]
    return diag, coup, rhs


def _apply_system(coeffs: Coefficients, v: np.ndarray, phi: np.ndarray
                  ) -> np.ndarray:
    """Matrix-vector product of the assembled operator, segment by segment
    (independent of the stored blocks; used for the residual check)."""
    grid = coeffs.grid
    n_y = grid.n_y
    dy, ds = grid.delta_y, grid.sigma.delta
    d1 = _spectral_d1(grid.sigma)
    out = np.zeros_like(v)

    def seg(va, vb, a11, a12, a22, gap, w):
        gs = d1 @ ((va + vb) / 2.0)
        gy = (vb - va) / gap
        grad_a = d1.T @ (a11 * gs + a12 * gy) - (2.0 / gap) * (a12 * gs + a22 * gy)
        grad_b = d1.T @ (a11 * gs + a12 * gy) + (2.0 / gap) * (a12 * gs + a22 * gy)
        return ds * w * grad_a, ds * w * grad_b

    for j in range(n_y - 1):
        f = j + 1
        ga, gb = seg(v[j], v[j + 1], coeffs.a11[:, f], coeffs.a12[:, f],
                     coeffs.a22[:, f], dy, dy)
        out[j] += ga
        out[j + 1] += gb
    ga, _ = seg(v[n_y - 1], phi, coeffs.a11_top, coeffs.a12_top,
                coeffs.a22_top, dy / 2.0, dy / 2.0)
    out[n_y - 1] += ga
    out += 2.0 * ds * dy * coeffs.gamma.T * v
    return out


def solve_strip(profile: ConeProfile, phi: GridFn, grid: StripGrid,
                source: StripField | None = None,
                rtol: float = 1e-10) -> StripField:
    """Solve the strip problem with Dirichlet data phi on y = 1.

    ``source`` (cell-centered) adds a right-hand side f to the equation
    -div(A grad v) + gamma v = f.  Raises EvaluationError when the relative
    algebraic residual of the solved system exceeds ``rtol``.
    """
    if phi.grid != profile.grid:
        raise DomainError("boundary data and profile live on different grids")
    if grid.sigma != profile.grid:
        raise DomainError("strip grid and profile live on different sigma grids")
    phi_vals = phi.real_values(tol=1e-10)
    src = None
    if source is not None:
        if source.grid != grid or source.y_samples is not None:
            raise DomainError("source must be cell-centered on the same strip grid")
        src = source.values

    coeffs = assemble_coefficients(profile, grid)
    diag, coup, rhs = _assemble_system(profile, coeffs, phi_vals, src)
    n_y = grid.n_y
    scale = float(np.linalg.norm(rhs))

    # block Cholesky elimination down the y index (blocks freed as consumed)
    gains: list[np.ndarray] = []
    us: list[np.ndarray] = []
    try:
        fact = cho_factor(diag[0], lower=True)
        gains.append(cho_solve(fact, coup[0]))
        us.append(cho_solve(fact, rhs[0]))
        diag[0] = None
        for j in range(1, n_y):
            schur = diag[j] - coup[j - 1].T @ gains[j - 1]
            fact = cho_factor(schur, lower=True)
            if j < n_y - 1:
                gains.append(cho_solve(fact, coup[j]))
            us.append(cho_solve(fact, rhs[j] - coup[j - 1].T @ us[j - 1]))
            diag[j] = None
            coup[j - 1] = None
    except np.linalg.LinAlgError as exc:
        raise EvaluationError(f"discrete operator lost positive definiteness: {exc}")

    v = np.empty((n_y, grid.sigma.n_sigma))
    v[n_y - 1] = us[n_y - 1]
    for j in range(n_y - 2, -1, -1):
        v[j] = us[j] - gains[j] @ v[j + 1]

    # residual through an independent segment-wise application of the
    # operator (includes the data coupling, so only the source is subtracted)
    resid = _apply_system(coeffs, v, phi_vals)
    if src is not None:
        resid = resid - 2.0 * grid.sigma.delta * grid.delta_y * src.T
    rel = float(np.linalg.norm(resid)) / max(scale, 1e-300)
    if scale > 0 and rel > rtol:
        raise EvaluationError(
            f"strip solve residual {rel:.3e} exceeds tolerance {rtol:.1e}")
    return StripField(grid=grid, values=v.T)


@dataclass(frozen=True)
class DNResult:
    """Boundary operator output and its trace decomposition.

    g_of_phi       the DN value {(1 + eta_s^2)/eta dv/dy - eta_s dphi/dsigma}
                   extracted as the variational flux of the discrete energy
                   (second order in the cell size)
    b_normal       dv/dy / eta at y = 1, reconstructed from g_of_phi so the
                   trace identity g + v_tangential eta_s - b_normal = 0 holds
                   to rounding
    v_tangential   dphi/dsigma - b_normal * eta_s
    field          the interior solution
    residual_norm  relative gap between the variational flux and an
                   independent one-sided collocation stencil for dv/dy
                   (diagnostic; first order, so it shrinks like the cell
                   size on refinement)
    """

    g_of_phi: GridFn
    b_normal: GridFn
    v_tangential: GridFn
    field: StripField
    residual_norm: float


def dn_general(profile: ConeProfile, phi: GridFn, grid: StripGrid,
               source: StripField | None = None) -> DNResult:
    """DN operator for a perturbed profile via the strip solve."""
    fld = solve_strip(profile, phi, grid, source=source)
    sgrid = profile.grid
    phi_vals = phi.real_values(tol=1e-10)
    dy = grid.delta_y
    v = fld.values
    dphi = dsigma_values(sgrid, phi_vals)
    eta, eta_s = profile.eta, profile.eta_sigma

    # variational flux: derivative of the discrete energy in the data gives
    # sin(eta) G phi directly (the scheme's own Neumann functional)
    coeffs = assemble_coefficients(profile, grid)
    d1 = _spectral_d1(sgrid)
    s_t, t_t, u_t = _segment_blocks(
        d1, coeffs.a11_top, coeffs.a12_top, coeffs.a22_top, dy / 2.0)
    u_mat = np.diag(u_t)
    w_t = dy / 2.0
    flux = 0.5 * w_t * ((s_t - t_t + t_t.T - u_mat) @ v[:, -1]
                        + (s_t + t_t + t_t.T + u_mat) @ phi_vals)
    g_vals = flux / np.sin(eta)

    # trace decomposition consistent with the reported operator
    dvy = (g_vals + eta_s * dphi) * eta / (1.0 + eta_s**2)
    b_vals = dvy / eta
    vt_vals = dphi - b_vals * eta_s

    # independent extraction: one-sided second-order stencil for dv/dy at
    # y = 1 (exact on quadratics in y), pushed through the same formula
    dvy_stencil = (8.0 * phi_vals - 9.0 * v[:, -1] + v[:, -2]) / (3.0 * dy)
    g_stencil = (1.0 + eta_s**2) / eta * dvy_stencil - eta_s * dphi
    denom = max(float(np.linalg.norm(g_vals)), 1e-300)
    residual = float(np.linalg.norm(g_vals - g_stencil)) / denom

    return DNResult(
        g_of_phi=GridFn(sgrid, g_vals),
        b_normal=GridFn(sgrid, b_vals),
        v_tangential=GridFn(sgrid, vt_vals),
        field=fld,
        residual_norm=residual,
    )


def sobolev_functionals(profile: ConeProfile, s: float) -> tuple[float, float]:
    """Profile size U_s and coercivity floor l.

    U_s is the largest H^{s-1/2} norm among the perturbation, its slope, and
    their pairwise products; l is the explicit positive constant with
    V^T A V >= y l |V|^2.  Requires s > 5/2.
    """
    if not s > 2.5:
        raise DomainError(f"regularity index must exceed 5/2, got {s}")
    if s - 0.5 > 8.0:
        raise DomainError(f"regularity index too large for the norm range, got {s}")
    g = profile.grid
    tilde = profile.eta_tilde
    slope = GridFn(g, profile.eta_sigma)
    entries = (tilde, slope, tilde * tilde, tilde * slope, slope * slope)
    u_s = max(sobolev_norm(e, s - 0.5) for e in entries)

    th = profile.theta_star.theta_star
    sup_t = profile.sup_tilde
    sup_d = profile.sup_slope
    margin = th - sup_t
    sinc_val = float(sinc(sup_t + th))
    floor = sinc_val * min(0.5,
                           margin**2 / (1.0 + 2.0 * sup_d**2),
                           margin**2 / 4.0)
    return u_s, floor
