"""Mehler kernel, Gauss-Weierstrass kernel, the subordinated kernel and its
radial majorant, plus the two-sided bound machinery used by the audits.

Subordination integrals are evaluated in log-time u = ln t: the algebraic
t^{-sigma/2 - 1} endpoint becomes a smooth exponential, so node counts stay
bounded as sigma -> 2^- and as s -> 1^-.  Beyond t = 40 the Mehler kernel is
1 to machine precision (correlation e^{-t} < 1e-17) and the tail is closed
form.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DivergenceError, DomainError, SingularityError
from .numerics import Estimate, QuadratureSpec, gamma_function, integrate_1d

T_EQUILIBRIUM = 40.0


def _as_point(x) -> np.ndarray:
    p = np.asarray(x, dtype=float)
    if p.ndim == 0:
        p = p.reshape(1)
    if p.ndim != 1 or not np.all(np.isfinite(p)):
        raise DomainError("points must be finite 1-d coordinate vectors")
    return p


def mehler_log(t: float, x: np.ndarray, y: np.ndarray) -> float:
    """log M_t(x, y), stable down to t ~ 1e-300 via expm1 for 1 - e^{-2t}."""
    q = -math.expm1(-2.0 * t)
    c = math.exp(-t)
    xx = float(np.dot(x, x))
    yy = float(np.dot(y, y))
    xy = float(np.dot(x, y))
    num = c * c * (xx + yy) - 2.0 * c * xy
    return -0.5 * len(x) * math.log(q) - num / (2.0 * q)


def mehler(t: float, x, y) -> float:
    """Ornstein-Uhlenbeck transition kernel M_t(x, y) relative to the Gaussian."""
    if not (t > 0.0):
        raise DomainError(f"mehler requires t > 0, got {t}")
    xp, yp = _as_point(x), _as_point(y)
    if xp.shape != yp.shape:
        raise DomainError("mehler requires dim(x) == dim(y)")
    return math.exp(mehler_log(t, xp, yp))


def gauss_weierstrass(t: float, r: float, n_dim: int) -> float:
    """Heat kernel (4 pi t)^{-N/2} e^{-r^2/(4t)}."""
    if not (t > 0.0):
        raise DomainError(f"gauss_weierstrass requires t > 0, got {t}")
    if r < 0.0:
        raise DomainError("gauss_weierstrass requires r >= 0")
    return (4.0 * math.pi * t) ** (-0.5 * n_dim) * math.exp(-r * r / (4.0 * t))


def kernel_ratio_check(x, y, t: float) -> float:
    """M_t(x,y) / H_t(|x-y|); tends to (2 pi)^{N/2} e^{|x|^2/4} e^{|y|^2/4} as t -> 0."""
    if not (t > 0.0):
        raise DomainError(f"kernel_ratio_check requires t > 0, got {t}")
    xp, yp = _as_point(x), _as_point(y)
    if xp.shape != yp.shape:
        raise DomainError("dimension mismatch")
    r = float(np.linalg.norm(xp - yp))
    n_dim = len(xp)
    log_h = -0.5 * n_dim * math.log(4.0 * math.pi * t) - r * r / (4.0 * t)
    return math.exp(mehler_log(t, xp, yp) - log_h)


def _log_time_cutoff(r2: float, scale: float = 3000.0) -> float:
    """u below which exp(-r^2/(4 e^u)) underflows against any polynomial factor."""
    return math.log(r2 / scale)


def k_sigma(x, y, sigma: float, spec: QuadratureSpec | None = None) -> Estimate:
    """Subordinated kernel K_sigma(x, y) = int_0^inf M_t(x, y) t^{-sigma/2-1} dt.

    The head is integrable for x != y because M_t collapses to a heat kernel
    scale near t = 0; evaluation on the diagonal raises ``SingularityError``.
    """
    if not (sigma > 0.0):
        raise DomainError(f"k_sigma requires sigma > 0, got {sigma}")
    spec = spec or QuadratureSpec()
    xp, yp = _as_point(x), _as_point(y)
    if xp.shape != yp.shape:
        raise DomainError("dimension mismatch")
    diff = xp - yp
    r2 = float(np.dot(diff, diff))
    if r2 == 0.0:
        raise SingularityError("k_sigma diverges on the diagonal x = y")

    half = 0.5 * sigma

    def integrand_logtime(u: float) -> float:
        t = math.exp(u)
        return math.exp(mehler_log(t, xp, yp) - half * u)

    # budget for the exponent beyond which the head integrand underflows
    slack = 4.0 * (750.0 + 0.25 * float(np.dot(xp, xp) + np.dot(yp, yp)))
    u_min = _log_time_cutoff(r2, slack)
    u_split = math.log(spec.split_t)
    u_top = math.log(T_EQUILIBRIUM)

    evals = 0
    value = 0.0
    error = 0.0
    if u_min < u_split:
        head = integrate_1d(integrand_logtime, (u_min, u_split), spec)
        value += head.value
        error += head.error
        evals += head.evals
    tail = integrate_1d(integrand_logtime, (min(u_split, u_top), u_top), spec)
    value += tail.value
    error += tail.error
    evals += tail.evals

    closed_tail = (2.0 / sigma) * T_EQUILIBRIUM ** (-half)
    m_top = math.exp(mehler_log(T_EQUILIBRIUM, xp, yp))
    value += closed_tail
    error += abs(m_top - 1.0) * closed_tail
    return Estimate(value, error, evals, "k-sigma")


def k_tilde(r: float, s: float, n_dim: int, spec: QuadratureSpec | None = None) -> Estimate:
    """Radial majorant of the subordinated kernel; decreasing in r, divergent at 0."""
    if r < 0.0:
        raise DomainError("k_tilde requires r >= 0")
    if not (0.0 < s < 1.0):
        raise DomainError(f"k_tilde requires 0 < s < 1, got {s}")
    if r == 0.0:
        raise DivergenceError("k_tilde(0) is a divergent integral for s in (0, 1)")
    spec = spec or QuadratureSpec()
    half = 0.5 * s
    r2 = r * r

    def integrand_logtime(u: float) -> float:
        t = math.exp(u)
        expo = -r2 / (4.0 * math.sinh(t)) if t < 350.0 else 0.0
        q = -math.expm1(-2.0 * t)
        return math.exp(expo - half * u - 0.5 * n_dim * math.log(q))

    u_min = math.log(math.asinh(r2 / 3000.0))
    u_split = math.log(spec.split_t)
    u_top = math.log(T_EQUILIBRIUM)

    evals = 0
    value = 0.0
    error = 0.0
    if u_min < u_split:
        head = integrate_1d(integrand_logtime, (u_min, u_split), spec)
        value += head.value
        error += head.error
        evals += head.evals
    tail = integrate_1d(integrand_logtime, (min(u_split, u_top), u_top), spec)
    value += tail.value
    error += tail.error
    evals += tail.evals

    closed_tail = (2.0 / s) * T_EQUILIBRIUM ** (-half)
    defect = r2 * math.exp(-T_EQUILIBRIUM) / 2.0 + n_dim * math.exp(-2.0 * T_EQUILIBRIUM)
    value += closed_tail
    error += defect * closed_tail
    return Estimate(value, error, evals, "k-tilde")


# ---------------------------------------------------------------------------
# constants and explicit bounds
# ---------------------------------------------------------------------------

def euclid_subordination_constant(n_dim: int, s: float) -> float:
    """2^s pi^{-N/2} Gamma((N+s)/2): heat-kernel subordination of |x-y|^{-N-s}."""
    return 2.0 ** s * math.pi ** (-0.5 * n_dim) * gamma_function(0.5 * (n_dim + s))


def kernel_lower_bound_constant(n_dim: int, s: float) -> float:
    """2^{s+N/2} Gamma((s+N)/2): K_s(x,y) >= this / |x-y|^{N+s} everywhere."""
    return 2.0 ** (s + 0.5 * n_dim) * gamma_function(0.5 * (s + n_dim))


def unit_ball_volume(n_dim: int) -> float:
    return math.pi ** (0.5 * n_dim) / gamma_function(0.5 * n_dim + 1.0)


def k_tilde_moment_bound(n_dim: int, s: float, radius: float) -> float:
    """Explicit finite bound for int_{B_R} |x| k_tilde(|x|) dx."""
    n_omega = n_dim * unit_ball_volume(n_dim)
    inner = radius ** (n_dim + 1) / (n_dim + 1) * 2.0 / (s * (1.0 - math.exp(-2.0)))
    singular = (2.0 ** (0.5 * (n_dim + 3)) * gamma_function(0.5 * (n_dim + 1))
                * math.exp(0.5 * (n_dim + 1)) / (1.0 - s))
    return n_omega * (inner + singular)


def k_tilde_tail_radius(a: float) -> float:
    """R_a beyond which the Gaussian-weighted tail of k_tilde is summable."""
    if not (a > 0.0):
        raise DomainError("a must be positive")
    return math.log(2.0 * a) if a > 0.5 else 1.0


def k_tilde_gaussian_tail_bound(n_dim: int, s: float, a: float) -> float:
    """Explicit finite bound for int_{B_{R_a}^c} k_tilde(|x|) e^{-a|x|^2} dx."""
    r_a = k_tilde_tail_radius(a)
    return (4.0 * math.pi ** (0.5 * n_dim) / s) * r_a ** (-0.5 * s) * (
        1.0 / (2.0 * math.sqrt(a) * (1.0 - math.exp(-2.0 * r_a)) ** (0.5 * n_dim))
        + 1.0 / (2.0 * a ** (0.5 * n_dim))
    )


def kernel_bounds_audit(n_dim: int, instances: int, stream, spec: QuadratureSpec | None = None,
                        s_range: tuple[float, float] = (0.1, 0.9)) -> dict:
    """Check both kernel bounds at random (x, y, s) triples.

    Lower: K_s >= C_low(N,s) |x-y|^{-N-s}.  Upper: K_s <= e^{|x|^2/4}
    e^{|y|^2/4} k_tilde(|x-y|).  Returns violation counts and the worst
    margins, with slack 1e-12 * max(1, value).
    """
    spec = spec or QuadratureSpec(rel_tol=1e-10)
    rng = stream.batch_generator(0)
    lower_viol = 0
    upper_viol = 0
    min_lower = math.inf
    min_upper = math.inf
    evals = 0
    for _ in range(instances):
        x = rng.standard_normal(n_dim)
        y = rng.standard_normal(n_dim)
        r = float(np.linalg.norm(x - y))
        if r < 1e-6:
            continue
        s = float(rng.uniform(*s_range))
        ks = k_sigma(x, y, s, spec)
        evals += ks.evals
        slack = 1e-12 * max(1.0, abs(ks.value))

        lower = kernel_lower_bound_constant(n_dim, s) * r ** (-(n_dim + s))
        margin_low = ks.value - lower
        min_lower = min(min_lower, margin_low)
        if margin_low < -slack:
            lower_viol += 1

        kt = k_tilde(r, s, n_dim, spec)
        evals += kt.evals
        upper = math.exp(0.25 * float(np.dot(x, x) + np.dot(y, y))) * kt.value
        margin_up = upper - ks.value
        min_upper = min(min_upper, margin_up)
        if margin_up < -slack:
            upper_viol += 1
    return {
        "instances": instances,
        "violations_lower": lower_viol,
        "violations_upper": upper_viol,
        "min_lower_margin": min_lower,
        "min_upper_margin": min_upper,
        "evals": evals,
    }
