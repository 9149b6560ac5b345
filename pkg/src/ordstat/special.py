"""Special functions and combinatorial helpers.

Every function accepts a scalar or an array and returns the same shape
(a Python float for scalar input).  Evaluation follows the usual split:
power series for small arguments, continued fractions for large ones.
All functions are pure; nothing is cached between calls.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "DomainError",
    "FnTolerance",
    "EULER_GAMMA",
    "erf",
    "erfc",
    "q_function",
    "norm_cdf",
    "norm_ppf",
    "exp_integral_e1",
    "bessel_k0",
    "bessel_k0_integral",
    "harmonic",
    "pochhammer",
    "log_abs_pochhammer",
    "log_binomial",
    "log_order_normalizer",
    "euler_gamma",
]

EULER_GAMMA = 0.5772156649015329
_SQRT_PI = math.sqrt(math.pi)
_SQRT2 = math.sqrt(2.0)


class DomainError(ValueError):
    """Argument outside the domain on which a function is defined."""


@dataclass(frozen=True)
class FnTolerance:
    """Stopping rule for series and continued-fraction evaluation."""

    abs_tol: float = 1e-17
    rel_tol: float = 1e-16
    max_terms: int = 500

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise DomainError("tolerances must be positive")
        if self.max_terms < 1:
            raise DomainError("max_terms must be at least 1")


DEFAULT_TOL = FnTolerance()


def _prepare(x, name):
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name}: argument must be finite")
    return arr


def _finish(out, x):
    if np.ndim(x) == 0:
        return float(out)
    return out


def _erf_series(x, tol):
    # e^{-x^2} * sum (2x^2)^n x / (1*3*...*(2n+1)); every term positive
    x2 = x * x
    term = x.copy()
    total = x.copy()
    for n in range(1, tol.max_terms):
        term = term * (2.0 * x2) / (2 * n + 1)
        total = total + term
        if np.all(term <= tol.rel_tol * total):
            break
    return 2.0 / _SQRT_PI * np.exp(-x2) * total


def _erfc_cf(x, depth=120):
    # e^{-x^2}/sqrt(pi) / (x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
    t = x.copy()
    for n in range(depth, 0, -1):
        t = x + (0.5 * n) / t
    return np.exp(-x * x) / (_SQRT_PI * t)


_ERF_SWITCH = 2.5
_ERFC_SWITCH = 1.5


def erf(x, tol: FnTolerance = DEFAULT_TOL):
    """Error function ``(2/sqrt(pi)) * int_0^x exp(-t^2) dt``."""
    arr = _prepare(x, "erf")
    ax = np.abs(arr)
    out = np.empty_like(ax)
    small = ax < _ERF_SWITCH
    if np.any(small):
        out[small] = _erf_series(ax[small], tol)
    if np.any(~small):
        out[~small] = 1.0 - _erfc_cf(ax[~small])
    return _finish(np.copysign(out, arr), x)


def erfc(x, tol: FnTolerance = DEFAULT_TOL):
    """Complementary error function, accurate in relative terms for large x."""
    arr = _prepare(x, "erfc")
    ax = np.abs(arr)
    tail = np.empty_like(ax)
    small = ax < _ERFC_SWITCH
    if np.any(small):
        tail[small] = 1.0 - _erf_series(ax[small], tol)
    if np.any(~small):
        tail[~small] = _erfc_cf(ax[~small])
    out = np.where(arr >= 0, tail, 2.0 - tail)
    return _finish(out, x)


def q_function(x):
    """Gaussian tail probability ``Q(x) = erfc(x/sqrt(2))/2``."""
    arr = _prepare(x, "q_function")
    return _finish(0.5 * np.asarray(erfc(arr / _SQRT2)), x)


def norm_cdf(x):
    """Standard normal cdf, ``1 - Q(x)`` computed without cancellation."""
    arr = _prepare(x, "norm_cdf")
    return _finish(0.5 * np.asarray(erfc(-arr / _SQRT2)), x)


# Acklam's rational approximation to the standard normal quantile.
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425


def _acklam(p):
    out = np.empty_like(p)
    lo = p < _P_LOW
    hi = p > 1.0 - _P_LOW
    mid = ~(lo | hi)
    if np.any(mid):
        q = p[mid] - 0.5
        r = q * q
        num = (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q
        den = ((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0
        out[mid] = num / den
    for mask, sign in ((lo, 1.0), (hi, -1.0)):
        if np.any(mask):
            pp = p[mask] if sign > 0 else 1.0 - p[mask]
            q = np.sqrt(-2.0 * np.log(pp))
            num = ((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]
            den = (((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0
            out[mask] = sign * num / den
    return out


def norm_ppf(p, polish: bool = True):
    """Standard normal quantile.

    The rational approximation alone has relative error below 1.2e-9;
    ``polish=True`` adds one Halley step, bringing it to rounding level.
    Sampling code uses ``polish=False`` for speed.
    """
    arr = np.asarray(p, dtype=float)
    if np.any((arr <= 0.0) | (arr >= 1.0)) or np.any(np.isnan(arr)):
        raise DomainError("norm_ppf: p must lie in (0, 1)")
    z = _acklam(np.atleast_1d(arr).astype(float))
    if polish:
        pa = np.atleast_1d(arr)
        # work on the smaller tail to keep the residual relative
        upper = pa > 0.5
        e = np.where(upper, np.asarray(q_function(z)) - (1.0 - pa),
                     np.asarray(norm_cdf(z)) - pa)
        e = np.where(upper, -e, e)
        u = e * math.sqrt(2.0 * math.pi) * np.exp(0.5 * z * z)
        z = z - u / (1.0 + 0.5 * z * u)
    return float(z[0]) if np.ndim(p) == 0 else z.reshape(arr.shape)


def _e1_series(x, tol):
    # -gamma - ln x - sum_{k>=1} (-x)^k / (k k!)
    term = np.ones_like(x)
    total = np.zeros_like(x)
    for k in range(1, tol.max_terms):
        term = term * (-x) / k
        inc = term / k
        total = total + inc
        if np.all(np.abs(inc) <= tol.rel_tol * np.abs(total) + tol.abs_tol):
            break
    return -EULER_GAMMA - np.log(x) - total


def _e1_cf(x, depth=200):
    # e^{-x} / (x + 1 - 1^2/(x + 3 - 2^2/(x + 5 - ...)))
    t = x + 2 * depth + 1.0
    for n in range(depth, 0, -1):
        t = x + 2 * n - 1.0 - (n * n) / t
    return np.exp(-x) / t


def exp_integral_e1(x, tol: FnTolerance = DEFAULT_TOL):
    """Exponential integral ``E1(x) = int_x^inf exp(-t)/t dt`` for x > 0."""
    arr = _prepare(x, "exp_integral_e1")
    if np.any(arr <= 0):
        raise DomainError("exp_integral_e1: x must be positive")
    out = np.empty_like(arr)
    small = arr <= 1.0
    if np.any(small):
        out[small] = _e1_series(arr[small], tol)
    if np.any(~small):
        out[~small] = _e1_cf(arr[~small])
    return _finish(out, x)


def _k0_series(x, tol):
    # K0 = -(ln(x/2) + gamma) I0(x) + sum (x^2/4)^k/(k!)^2 H_k
    y = 0.25 * x * x
    term = np.ones_like(x)
    i0 = np.ones_like(x)
    rest = np.zeros_like(x)
    h = 0.0
    for k in range(1, tol.max_terms):
        term = term * y / (k * k)
        h += 1.0 / k
        i0 = i0 + term
        rest = rest + term * h
        if np.all(term * h <= tol.rel_tol * rest):
            break
    return -(np.log(0.5 * x) + EULER_GAMMA) * i0 + rest


def _k0_steed(x, tol):
    # Temme's form of Steed's continued fraction for K_nu, nu = 0
    a1 = 0.25
    b = 2.0 * (1.0 + x)
    d = 1.0 / b
    delh = d.copy()
    h = d.copy()
    q1 = np.zeros_like(x)
    q2 = np.ones_like(x)
    q = np.full_like(x, a1)
    c = a1
    a = -a1
    s = 1.0 + q * delh
    for i in range(1, tol.max_terms):
        a -= 2 * i
        c = -a * c / (i + 1.0)
        qnew = (q1 - b * q2) / a
        q1, q2 = q2, qnew
        q = q + c * qnew
        b = b + 2.0
        d = 1.0 / (b + a * d)
        delh = (b * d - 1.0) * delh
        h = h + delh
        dels = q * delh
        s = s + dels
        if np.all(np.abs(dels) <= tol.rel_tol * np.abs(s)):
            break
    return np.sqrt(math.pi / (2.0 * x)) * np.exp(-x) / s


def bessel_k0(x, tol: FnTolerance = DEFAULT_TOL):
    """Modified Bessel function of the second kind, order 0, for x > 0."""
    arr = _prepare(x, "bessel_k0")
    if np.any(arr <= 0):
        raise DomainError("bessel_k0: x must be positive")
    out = np.empty_like(arr)
    small = arr <= 2.0
    if np.any(small):
        out[small] = _k0_series(arr[small], tol)
    if np.any(~small):
        out[~small] = _k0_steed(arr[~small], tol)
    return _finish(out, x)


_KI_STEP = 1.0 / 16.0
_KI_NODES = np.arange(0.0, 6.0 + _KI_STEP / 2, _KI_STEP)


def _k0_integral_series(y, tol):
    # termwise integral of the K0 series over [0, y]
    L = np.log(0.5 * y) + EULER_GAMMA
    c = np.ones_like(y)  # (y^2/4)^k / (k!)^2
    h = 0.0
    total = y * (1.0 - L)
    for k in range(1, tol.max_terms):
        c = c * 0.25 * y * y / (k * k)
        h += 1.0 / k
        j = 2 * k + 1
        inc = c * y / j * (h - L + 1.0 / j)
        total = total + inc
        if np.all(np.abs(inc) <= tol.rel_tol * np.abs(total) + tol.abs_tol):
            break
    return total


def bessel_k0_integral(y, tol: FnTolerance = DEFAULT_TOL):
    """``int_0^y K0(t) dt`` for y >= 0; tends to pi/2 as y grows.

    Large y uses ``pi/2 - int_0^inf exp(-y cosh s)/cosh s ds`` with the
    trapezoidal rule, which converges geometrically for this integrand.
    """
    arr = _prepare(y, "bessel_k0_integral")
    if np.any(arr < 0):
        raise DomainError("bessel_k0_integral: y must be non-negative")
    out = np.zeros_like(arr)
    small = (arr > 0) & (arr <= 2.0)
    if np.any(small):
        out[small] = _k0_integral_series(arr[small], tol)
    big = arr > 2.0
    if np.any(big):
        cs = np.cosh(_KI_NODES)
        w = np.full(_KI_NODES.shape, _KI_STEP)
        w[0] *= 0.5
        vals = np.exp(-np.multiply.outer(arr[big], cs)) / cs
        out[big] = 0.5 * math.pi - vals @ w
    return _finish(out, y)


def harmonic(j):
    """Harmonic number ``H_j = sum_{i<=j} 1/i`` with ``H_0 = 0``.

    Terms are added smallest first.
    """
    j = int(j) if float(j).is_integer() else j
    if not isinstance(j, int) or j < 0:
        raise DomainError("harmonic: j must be a non-negative integer")
    if j == 0:
        return 0.0
    if j <= 64:
        return math.fsum(1.0 / i for i in range(j, 0, -1))
    terms = 1.0 / np.arange(j, 0, -1, dtype=float)
    return math.fsum(terms)


def pochhammer(a: float, n: int) -> float:
    """Rising factorial ``(a)_n = a (a+1) ... (a+n-1)``, ``(a)_0 = 1``."""
    if not math.isfinite(a):
        raise DomainError("pochhammer: a must be finite")
    if n < 0 or int(n) != n:
        raise DomainError("pochhammer: n must be a non-negative integer")
    out = 1.0
    for i in range(int(n)):
        out *= a + i
    return out


def log_abs_pochhammer(a: float, n: int) -> tuple[int, float]:
    """Return ``(sign, log|(a)_n|)``; sign is 0 when the product vanishes."""
    if n < 0 or int(n) != n:
        raise DomainError("log_abs_pochhammer: n must be a non-negative integer")
    sign = 1
    logs = []
    for i in range(int(n)):
        f = a + i
        if f == 0:
            return 0, -math.inf
        if f < 0:
            sign = -sign
        logs.append(math.log(abs(f)))
    return sign, math.fsum(logs)


def log_binomial(n: int, k: int) -> float:
    """``log C(n, k)`` via log-gamma."""
    if k < 0 or k > n:
        return -math.inf
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)


def log_order_normalizer(n: int, k: int) -> float:
    """``log(n! / ((k-1)! (n-k)!))``."""
    return math.lgamma(n + 1) - math.lgamma(k) - math.lgamma(n - k + 1)


def euler_gamma() -> float:
    return EULER_GAMMA
