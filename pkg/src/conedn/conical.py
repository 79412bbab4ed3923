"""Conical Legendre functions and companions.

Evaluates k(zeta, theta) = P_{-1/2 + i zeta}(cos theta) (the real, positive
conical Legendre function), its theta-derivatives up to order four, the
half-degree Legendre pair P_{1/2} / P^1_{1/2} at argument -cos(theta), scaled
modified Bessel functions, the Gamma modulus products that enter derivative
recurrences, and the opening angle of the equilibrium cone (the Taylor angle,
root of P_{1/2}(-cos theta) = 0).

Evaluation strategy
-------------------
Ground truth is the finite-interval integral representation

    k(zeta, theta) = (2/pi) * integral_0^{pi/2}
                     cosh(zeta * phi(t)) / cos(phi(t)/2) dt,
    phi(t) = 2 * arcsin(sin(theta/2) * cos t),

the classical half-angle form with the endpoint square-root singularity
absorbed by the change of variables; the integrand is analytic on the closed
interval, so composite Gauss-Legendre panels converge geometrically.  For
zeta*theta above a threshold the uniform large-frequency approximation
k ~ I_0(zeta*theta) / sqrt(sinc theta) takes over.  Everything exponentially
large is carried in log scale; ratios are exponentials of log differences.

The m-th theta-derivative for m >= 2 comes from the differentiated Legendre
ODE in x = cos(theta),

    (1 - x^2) P^{(k+2)} = 2 (k+1) x P^{(k+1)} + (k(k+1) + zeta^2 + 1/4) P^{(k)},

seeded by the quadrature values of k and its first derivative, composed with
the chain rule for x = cos(theta).  This is algebraically identical to the
Bell-polynomial expansion in terms of associated functions and Gamma-modulus
ratios, while staying free of phase-convention pitfalls.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import ive

from .errors import ConfigurationError, DomainError, EvaluationError

__all__ = [
    "ConicalParams",
    "ConeAngle",
    "conical_p",
    "conical_p_log",
    "conical_p_dtheta",
    "conical_dtheta_ratios",
    "gamma_half_abs2",
    "bessel_i_scaled",
    "bessel_i0_derivative_scaled",
    "legendre_half",
    "taylor_angle",
]

_LOG_DOUBLE_MAX = math.log(np.finfo(float).max)  # ~709.78


@dataclass(frozen=True)
class ConicalParams:
    """Evaluation tolerances and switches for the special functions."""

    series_tol: float = 1e-14
    series_max_terms: int = 400
    quad_tol: float = 1e-12
    asym_threshold: float = 30.0  # zeta*theta at which the Bessel form takes over

    def __post_init__(self) -> None:
        if self.series_tol <= 0 or self.quad_tol <= 0:
            raise ConfigurationError("tolerances must be positive")
        if self.series_max_terms < 32:
            raise ConfigurationError("series_max_terms must be at least 32")
        if self.asym_threshold <= 0:
            raise ConfigurationError("asym_threshold must be positive")


@dataclass(frozen=True)
class ConeAngle:
    """An opening angle theta_star strictly inside (0, pi)."""

    theta_star: float

    def __post_init__(self) -> None:
        if not (0.0 < self.theta_star < math.pi):
            raise DomainError(
                f"cone angle must lie in (0, pi), got {self.theta_star}")


def _check_theta(theta: float) -> None:
    if not (0.0 < theta < math.pi):
        raise DomainError(f"theta must lie in (0, pi), got {theta}")


def sinc(theta):
    """sin(theta)/theta, stable at 0."""
    return np.sinc(np.asarray(theta) / np.pi)


# ---------------------------------------------------------------------------
# quadrature engine
# ---------------------------------------------------------------------------

@lru_cache(maxsize=64)
def _gl_rule(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = leggauss(n)
    return x, w


@lru_cache(maxsize=256)
def _panel_nodes(concentration: float, n_per_panel: int) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre nodes on [0, pi/2], panels halving toward
    t = 0 until the first panel resolves the integrand's concentration
    scale ~ 1/sqrt(1 + concentration)."""
    width = 1.0 / math.sqrt(1.0 + concentration)
    edges = [math.pi / 2]
    while edges[-1] > width and len(edges) < 40:
        edges.append(edges[-1] / 2)
    edges.append(0.0)
    edges.reverse()
    x, w = _gl_rule(n_per_panel)
    ts, ws = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        half = 0.5 * (b - a)
        ts.append(a + half * (x + 1.0))
        ws.append(half * w)
    return np.concatenate(ts), np.concatenate(ws)


def _scaled_integrands(zeta: float, thetas: np.ndarray, t: np.ndarray,
                       want_deriv: bool) -> tuple[np.ndarray, np.ndarray | None]:
    """Integrand values (scaled by exp(-|zeta| theta)) on the tensor grid
    (theta_i, t_j) for k and, when requested, for dk/dtheta."""
    az = abs(zeta)
    th = thetas[:, None]
    ct = np.cos(t)[None, :]
    s = np.sin(th / 2.0) * ct                    # sin(phi/2)
    phi = 2.0 * np.arcsin(s)
    cos_half = np.sqrt(1.0 - s * s)              # cos(phi/2) > 0 on the range
    # cosh(zeta phi) e^{-az th} = (e^{az(phi-th)} + e^{-az(phi+th)})/2
    ep = np.exp(az * (phi - th))
    em = np.exp(-az * (phi + th))
    f_k = 0.5 * (ep + em) / cos_half
    if not want_deriv:
        return f_k, None
    # d/dtheta of cosh(zeta phi)/cos(phi/2):
    #   dphi/dtheta * [ az sinh(az phi) + cosh(az phi) tan(phi/2)/2 ] / cos(phi/2)
    dphi = np.cos(th / 2.0) * ct / cos_half
    sinh_sc = 0.5 * (ep - em)
    cosh_sc = 0.5 * (ep + em)
    f_d = dphi * (az * sinh_sc + 0.5 * cosh_sc * (s / cos_half)) / cos_half
    return f_k, f_d


def _quad_log_k(zeta: float, thetas: np.ndarray, p: ConicalParams,
                want_deriv: bool) -> tuple[np.ndarray, np.ndarray | None]:
    """Quadrature evaluation, vectorized over theta.

    Returns (log k, k1/k) where k1 = dk/dtheta; the ratio slot is None when
    the derivative was not requested.
    """
    az = abs(zeta)
    conc = az * float(np.max(thetas))
    results = []
    for n_per in (16, 32, 64, 96):
        t, w = _panel_nodes(round(conc, 6), n_per)
        f_k, f_d = _scaled_integrands(zeta, thetas, t, want_deriv)
        val_k = (2.0 / math.pi) * (f_k @ w)
        val_d = (2.0 / math.pi) * (f_d @ w) if want_deriv else None
        results.append((val_k, val_d))
        if len(results) >= 2:
            prev_k = results[-2][0]
            res_k = float(np.max(np.abs(val_k - prev_k) / np.abs(val_k)))
            res_d = 0.0
            if want_deriv:
                prev_d = results[-2][1]
                scale = np.maximum(np.abs(val_d), np.abs(val_k))
                res_d = float(np.max(np.abs(val_d - prev_d) / scale))
            if max(res_k, res_d) <= p.quad_tol:
                log_k = az * thetas + np.log(val_k)
                ratio = (val_d / val_k) if want_deriv else None
                return log_k, ratio
    raise EvaluationError(
        f"conical quadrature did not converge at zeta={zeta:.6g}: "
        f"achieved residual {max(res_k, res_d):.3e} > tol {p.quad_tol:.1e}")


def _asym_log_k(zeta: float, theta: float) -> float:
    """log of the uniform large-frequency form I0(|zeta| theta)/sqrt(sinc theta)."""
    az = abs(zeta)
    x = az * theta
    return x + math.log(ive(0, x)) - 0.5 * math.log(float(sinc(theta)))


def _asym_k1_over_k(zeta: float, theta: float) -> float:
    """Ratio (dk/dtheta)/k in the large-frequency branch: differentiate
    I0(az theta)/sqrt(sinc theta) in theta."""
    az = abs(zeta)
    x = az * theta
    i0, i1 = ive(0, x), ive(1, x)
    # d/dtheta log sinc(theta) = cot(theta) - 1/theta  (negative on (0, pi))
    dlog_sinc = 1.0 / math.tan(theta) - 1.0 / theta
    return az * i1 / i0 - 0.5 * dlog_sinc


# ---------------------------------------------------------------------------
# public scalar evaluations
# ---------------------------------------------------------------------------

@lru_cache(maxsize=200_000)
def _k_and_ratio_cached(zeta: float, theta: float,
                        p: ConicalParams) -> tuple[float, float]:
    """(log k, k1/k) with the branch switch applied.  Cached; safe for
    concurrent use (pure computation, idempotent inserts)."""
    az = abs(zeta)
    if az * theta >= p.asym_threshold:
        return _asym_log_k(zeta, theta), _asym_k1_over_k(zeta, theta)
    log_k, ratio = _quad_log_k(zeta, np.array([theta]), p, want_deriv=True)
    return float(log_k[0]), float(ratio[0])


def conical_p_log(zeta: float, theta: float, p: ConicalParams = ConicalParams()) -> float:
    """log of k(zeta, theta); never overflows on the supported range."""
    _check_theta(theta)
    return _k_and_ratio_cached(abs(float(zeta)), float(theta), p)[0]


def conical_p(zeta: float, theta: float, p: ConicalParams = ConicalParams()) -> float:
    """The conical Legendre function k(zeta, theta) > 0, even in zeta.

    Grows like exp(|zeta| theta); raises an evaluation error once the value
    exceeds double range (use :func:`conical_p_log` there).
    """
    log_k = conical_p_log(zeta, theta, p)
    if log_k > _LOG_DOUBLE_MAX:
        raise EvaluationError(
            f"k(zeta={zeta:.6g}, theta={theta:.6g}) exceeds double range "
            f"(log value {log_k:.1f}); use conical_p_log")
    return math.exp(log_k)


def _dtheta_ratios_from_seed(zeta: float, theta, k1_over_k, m: int):
    """Ratios d^j k / dtheta^j / k for j = 1..m from the ODE recursion in
    x = cos(theta), seeded by the first-derivative ratio."""
    x = np.cos(theta)
    s = np.sin(theta)
    s2 = s * s
    c = zeta * zeta + 0.25
    # P[k] = (d/dx)^k P / P at x = cos(theta)
    P = [np.ones_like(x), -np.asarray(k1_over_k) / s]
    for k in range(0, max(0, m - 1)):
        P.append((2.0 * (k + 1) * x * P[k + 1] + (c + k * (k + 1)) * P[k]) / s2)
    out = [s * 0 + k1_over_k]                     # d1 = -s * P1 = k1/k
    if m >= 2:
        out.append(-x * P[1] + s2 * P[2])
    if m >= 3:
        out.append(s * P[1] + 3.0 * s * x * P[2] - s * s2 * P[3])
    if m >= 4:
        out.append(x * P[1] + (3.0 * x * x - 4.0 * s2) * P[2]
                   - 6.0 * s2 * x * P[3] + s2 * s2 * P[4])
    return out


def conical_dtheta_ratios(zeta: float, theta: float, m: int,
                          p: ConicalParams = ConicalParams()) -> list[float]:
    """[d^j k/dtheta^j / k for j=1..m]; scale-free (safe at large zeta)."""
    _check_theta(theta)
    if m not in (1, 2, 3, 4):
        raise DomainError(f"derivative order must be in 1..4, got {m}")
    _, r1 = _k_and_ratio_cached(abs(float(zeta)), float(theta), p)
    ratios = _dtheta_ratios_from_seed(abs(float(zeta)), float(theta), r1, m)
    return [float(r) for r in ratios]


def conical_p_dtheta(zeta: float, theta: float, m: int,
                     p: ConicalParams = ConicalParams()) -> float:
    """m-th theta-derivative of k(zeta, theta), m in {1,2,3,4}.

    The first derivative is positive on (0, pi); for m >= 2 the value comes
    from the differentiated-ODE recursion seeded by the quadrature values.
    """
    ratios = conical_dtheta_ratios(zeta, theta, m, p)
    return ratios[m - 1] * conical_p(zeta, theta, p)


# ---------------------------------------------------------------------------
# Gamma modulus and Bessel helpers
# ---------------------------------------------------------------------------

def gamma_half_abs2(m: int, zeta: float) -> float:
    """|Gamma(1/2 + m + i zeta)|^2 = pi/cosh(pi zeta) * prod_{k=1}^m ((k-1/2)^2 + zeta^2)."""
    if m < 0:
        raise DomainError(f"order m must be nonnegative, got {m}")
    x = math.pi * zeta
    # log cosh, overflow-safe
    log_cosh = abs(x) + math.log1p(math.exp(-2.0 * abs(x))) - math.log(2.0)
    log_val = math.log(math.pi) - log_cosh
    for k in range(1, m + 1):
        log_val += math.log((k - 0.5) ** 2 + zeta * zeta)
    return math.exp(log_val)


def bessel_i_scaled(m: int, x: float) -> float:
    """e^{-x} I_m(x) for m in 0..4, x >= 0."""
    if m not in (0, 1, 2, 3, 4):
        raise DomainError(f"Bessel order must be in 0..4, got {m}")
    if x < 0:
        raise DomainError(f"argument must be nonnegative, got {x}")
    return float(ive(m, x))


# I0 derivatives as combinations of I_m (from I_m' = (I_{m-1}+I_{m+1})/2):
#   I0'    = I1
#   I0''   = (I0 + I2)/2
#   I0'''  = (3 I1 + I3)/4
#   I0'''' = (3 I0 + 4 I2 + I4)/8
_I0_DERIV_COMBO = {
    0: {0: 1.0},
    1: {1: 1.0},
    2: {0: 0.5, 2: 0.5},
    3: {1: 0.75, 3: 0.25},
    4: {0: 0.375, 2: 0.5, 4: 0.125},
}


def bessel_i0_derivative_scaled(k: int, x: float) -> float:
    """e^{-x} * (d/dx)^k I_0(x) for k in 0..4."""
    if k not in _I0_DERIV_COMBO:
        raise DomainError(f"derivative order must be in 0..4, got {k}")
    return sum(c * bessel_i_scaled(m, x) for m, c in _I0_DERIV_COMBO[k].items())


# ---------------------------------------------------------------------------
# half-degree Legendre pair and the Taylor angle
# ---------------------------------------------------------------------------

def legendre_half(theta: float, p: ConicalParams = ConicalParams()) -> tuple[float, float]:
    """(P_{1/2}(-cos theta), P^1_{1/2}(-cos theta)) by hypergeometric series.

    P_{1/2}(x) = 2F1(-1/2, 3/2; 1; (1-x)/2), so with x = -cos(theta) the
    argument is z = cos^2(theta/2).  The associated value is the plain
    derivative form P^1 = sin(theta) * dP/dx (positive on (0, pi)); the
    sign convention carries no Condon-Shortley factor.
    """
    _check_theta(theta)
    z = math.cos(theta / 2.0) ** 2
    # 2F1(-1/2, 3/2; 1; z) and (3/8) 2F1(1/2, 5/2; 2; z), summed together
    term_p = 1.0
    term_d = 1.0
    P = term_p
    D = term_d
    converged = False
    for n in range(p.series_max_terms):
        fac_p = ((n - 0.5) * (n + 1.5)) / ((n + 1.0) * (n + 1.0))
        fac_d = ((n + 0.5) * (n + 2.5)) / ((n + 2.0) * (n + 1.0))
        term_p *= fac_p * z
        term_d *= fac_d * z
        P += term_p
        D += term_d
        if abs(term_p) < p.series_tol * max(1.0, abs(P)) and \
           abs(term_d) < p.series_tol * max(1.0, abs(D)):
            converged = True
            break
    if not converged:
        raise EvaluationError(
            f"half-degree Legendre series not converged at theta={theta:.6g} "
            f"(argument z={z:.6f} too close to 1); residual term {abs(term_p):.3e}")
    dPdx = 0.375 * D
    return P, math.sin(theta) * dPdx


def taylor_angle(tol: float = 1e-10, p: ConicalParams = ConicalParams()) -> ConeAngle:
    """Opening angle of the equilibrium cone: the root of
    P_{1/2}(-cos theta) = 0 bracketed in (0.2 pi, 0.35 pi)."""
    if not (0.0 < tol <= 1e-3):
        raise DomainError(f"tolerance must lie in (0, 1e-3], got {tol}")
    from scipy.optimize import brentq

    lo, hi = 0.2 * math.pi, 0.35 * math.pi
    f = lambda th: legendre_half(th, p)[0]
    flo, fhi = f(lo), f(hi)
    if flo * fhi >= 0:
        raise EvaluationError(
            "no sign change of P_{1/2}(-cos theta) in the bracket "
            f"({lo:.4f}, {hi:.4f}): f(lo)={flo:.3e}, f(hi)={fhi:.3e}")
    root = brentq(f, lo, hi, xtol=tol, rtol=8.881784197001252e-16)
    return ConeAngle(float(root))
