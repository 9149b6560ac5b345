"""Parent distributions and the laws of sums and products of iid variates.

Conventions
-----------
* ``Normal(mu, sigma2)`` is parameterised by the variance.
* ``Exponential(lam)`` uses the rate: density ``lam * exp(-lam x)``.
* ``RayleighPaper(sigma)`` has density ``(2x/sigma) exp(-x^2/sigma)``; its
  square is exponential with rate ``1/sigma``.
* ``Gamma(shape, scale)`` has density ``x^(k-1) e^(-x/scale) / (Gamma(k) scale^k)``.

Every law exposes vectorised ``pdf``, ``cdf`` and ``quantile`` methods, a
``support`` and the ``breakpoints`` where its density is not smooth.
Sums and products without a closed form are tabulated once, at
construction, by quadrature on a dense grid.
"""

from __future__ import annotations

import functools
import math
import re
from dataclasses import dataclass, field

import numpy as np
from scipy import interpolate, optimize, special as _sp

from . import special
from .quadrature import integrate_panels
from .special import DomainError
from .streams import open_uniforms

__all__ = [
    "Law",
    "ParentDistribution",
    "Uniform",
    "Normal",
    "Exponential",
    "RayleighPaper",
    "Gamma",
    "DerivedLaw",
    "ParseError",
    "parse_distribution",
    "pdf",
    "cdf",
    "quantile",
    "sample",
    "sum_law",
    "product_law",
    "hetero_product_law",
]

_INF = math.inf
_RANGE_EPS = 1e-14


def _out(values, x):
    return float(values) if np.ndim(x) == 0 else values


def _check_p(p):
    arr = np.asarray(p, dtype=float)
    if np.any(~((arr > 0.0) & (arr < 1.0))):
        raise DomainError("quantile: p must lie in (0, 1)")
    return arr


class Law:
    """Base for every univariate law handled by the package."""

    support: tuple[float, float] = (-_INF, _INF)
    breakpoints: tuple[float, ...] = ()

    def pdf(self, x):
        raise NotImplementedError

    def cdf(self, x):
        raise NotImplementedError

    def quantile(self, p):
        return _invert_cdf(self, p)

    def effective_range(self, eps: float = _RANGE_EPS) -> tuple[float, float]:
        """Finite interval holding all but ``2 * eps`` of the mass."""
        lo, hi = self.support
        if not math.isfinite(lo):
            lo = float(self.quantile(eps))
        if not math.isfinite(hi):
            hi = float(self.quantile(1.0 - eps))
        return lo, hi

    def draw(self, rng, size=None):
        raise NotImplementedError

    def _bracket(self) -> tuple[float, float]:
        lo, hi = self.support
        return (lo if math.isfinite(lo) else -50.0, hi if math.isfinite(hi) else 50.0)


def _invert_cdf(law: Law, p):
    """Bracketing root search on the cdf followed by one Newton step."""
    arr = _check_p(p)
    lo0, hi0 = law._bracket()
    out = np.empty(arr.size)
    for i, pi in enumerate(arr.ravel()):
        def g(x, pi=pi):
            return float(law.cdf(x)) - pi

        a, b = lo0, hi0
        width = b - a
        while g(a) > 0:
            a -= width
            width *= 2
        width = b - a
        while g(b) < 0:
            b += width
            width *= 2
        x = optimize.brentq(g, a, b, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
        d = float(law.pdf(x))
        if d > 0 and math.isfinite(d):
            x2 = x - g(x) / d
            if a <= x2 <= b and abs(g(x2)) < abs(g(x)):
                x = x2
        out[i] = x
    return _out(out.reshape(arr.shape), p)


class ParentDistribution(Law):
    """Marker base for the closed-form parent laws."""

    def mean(self) -> float:
        raise NotImplementedError


@dataclass(frozen=True)
class Uniform(ParentDistribution):
    a: float = 0.0
    b: float = 1.0

    def __post_init__(self):
        if not self.a < self.b:
            raise DomainError("Uniform requires a < b")

    @property
    def support(self):
        return (self.a, self.b)

    @property
    def breakpoints(self):
        return (self.a, self.b)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return _out(np.where((x >= self.a) & (x <= self.b), 1.0 / (self.b - self.a), 0.0), x)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return _out(np.clip((x - self.a) / (self.b - self.a), 0.0, 1.0), x)

    def quantile(self, p):
        arr = _check_p(p)
        return _out(self.a + (self.b - self.a) * arr, p)

    def draw(self, rng, size=None):
        return self.a + (self.b - self.a) * open_uniforms(rng, size)

    def mean(self):
        return 0.5 * (self.a + self.b)


@dataclass(frozen=True)
class Normal(ParentDistribution):
    mu: float = 0.0
    sigma2: float = 1.0

    def __post_init__(self):
        if not self.sigma2 > 0:
            raise DomainError("Normal requires sigma2 > 0")

    @property
    def sd(self):
        return math.sqrt(self.sigma2)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        z = (x - self.mu) / self.sd
        return _out(np.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi * self.sigma2), x)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        z = np.clip((x - self.mu) / self.sd, -40.0, 40.0)
        return _out(np.asarray(special.norm_cdf(z)), x)

    def quantile(self, p):
        arr = _check_p(p)
        return _out(self.mu + self.sd * np.asarray(special.norm_ppf(arr)), p)

    def draw(self, rng, size=None):
        u = open_uniforms(rng, size)
        z = special.norm_ppf(u, polish=False)
        return self.mu + self.sd * z

    def mean(self):
        return self.mu

    def _bracket(self):
        return (self.mu - 40 * self.sd, self.mu + 40 * self.sd)


@dataclass(frozen=True)
class Exponential(ParentDistribution):
    lam: float = 1.0

    def __post_init__(self):
        if not self.lam > 0:
            raise DomainError("Exponential requires lam > 0")

    support = (0.0, _INF)
    breakpoints = (0.0,)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(over="ignore"):
            val = self.lam * np.exp(-self.lam * np.maximum(x, 0.0))
        return _out(np.where(x >= 0, val, 0.0), x)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return _out(-np.expm1(-self.lam * np.maximum(x, 0.0)), x)

    def quantile(self, p):
        arr = _check_p(p)
        return _out(-np.log1p(-arr) / self.lam, p)

    def draw(self, rng, size=None):
        return -np.log(open_uniforms(rng, size)) / self.lam

    def mean(self):
        return 1.0 / self.lam


@dataclass(frozen=True)
class RayleighPaper(ParentDistribution):
    """Rayleigh law with density ``(2x/sigma) exp(-x^2/sigma)``."""

    sigma: float = 1.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise DomainError("RayleighPaper requires sigma > 0")

    support = (0.0, _INF)
    breakpoints = (0.0,)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        xp = np.maximum(x, 0.0)
        return _out(2.0 * xp / self.sigma * np.exp(-xp * xp / self.sigma), x)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        xp = np.maximum(x, 0.0)
        return _out(-np.expm1(-xp * xp / self.sigma), x)

    def quantile(self, p):
        arr = _check_p(p)
        return _out(np.sqrt(-self.sigma * np.log1p(-arr)), p)

    def draw(self, rng, size=None):
        return np.sqrt(-self.sigma * np.log(open_uniforms(rng, size)))

    def mean(self):
        return 0.5 * math.sqrt(math.pi * self.sigma)


@dataclass(frozen=True)
class Gamma(ParentDistribution):
    shape: float = 2.0
    scale: float = 1.0

    def __post_init__(self):
        if not (self.shape > 0 and self.scale > 0):
            raise DomainError("Gamma requires shape > 0 and scale > 0")

    support = (0.0, _INF)
    breakpoints = (0.0,)

    @property
    def _integer_shape(self):
        return float(self.shape).is_integer() and self.shape <= 64

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        y = np.maximum(x, 0.0) / self.scale
        k = self.shape
        with np.errstate(divide="ignore", invalid="ignore"):
            logf = (k - 1) * np.log(y) - y - math.lgamma(k) - math.log(self.scale)
            val = np.exp(logf)
        if k == 1:
            val = np.where(y == 0, 1.0 / self.scale, val)
        elif k < 1:
            val = np.where(y == 0, _INF, val)
        else:
            val = np.where(y == 0, 0.0, val)
        return _out(np.where(x >= 0, val, 0.0), x)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        y = np.maximum(x, 0.0) / self.scale
        if self._integer_shape:
            # Erlang: 1 - e^{-y} sum_{j<k} y^j / j!
            term = np.ones_like(y)
            acc = np.ones_like(y)
            for j in range(1, int(self.shape)):
                term = term * y / j
                acc = acc + term
            val = np.where(y < 1e-3 * max(1.0, self.shape) ** 0.5, _sp.gammainc(self.shape, y),
                           1.0 - np.exp(-y) * acc)
        else:
            val = _sp.gammainc(self.shape, y)
        return _out(np.clip(val, 0.0, 1.0), x)

    def draw(self, rng, size=None):
        if self._integer_shape:
            k = int(self.shape)
            shape = (k,) if size is None else (tuple(np.atleast_1d(size)) + (k,))
            return -self.scale * np.log(open_uniforms(rng, shape)).sum(axis=-1)
        return self.scale * rng.standard_gamma(self.shape, size)

    def mean(self):
        return self.shape * self.scale

    def _bracket(self):
        return (0.0, self.scale * (self.shape + 60.0 + 12.0 * math.sqrt(self.shape)))


# ---------------------------------------------------------------- closed sums
@dataclass(frozen=True)
class _Triangular(Law):
    """Sum of two Uniform(a, b) variates."""

    a: float
    b: float

    @property
    def support(self):
        return (2 * self.a, 2 * self.b)

    @property
    def breakpoints(self):
        return (2 * self.a, self.a + self.b, 2 * self.b)

    def _u(self, x):
        return (np.asarray(x, dtype=float) - 2 * self.a) / (self.b - self.a)

    def pdf(self, x):
        u = self._u(x)
        val = np.where(u <= 1.0, u, 2.0 - u)
        val = np.where((u < 0) | (u > 2), 0.0, val) / (self.b - self.a)
        return _out(val, x)

    def cdf(self, x):
        u = np.clip(self._u(x), 0.0, 2.0)
        val = np.where(u <= 1.0, 0.5 * u * u, 1.0 - 0.5 * (2.0 - u) ** 2)
        return _out(val, x)

    def quantile(self, p):
        arr = _check_p(p)
        u = np.where(arr <= 0.5, np.sqrt(2.0 * arr), 2.0 - np.sqrt(2.0 * (1.0 - arr)))
        return _out(2 * self.a + (self.b - self.a) * u, p)


@dataclass(frozen=True)
class _RayleighSum(Law):
    """Sum of two iid RayleighPaper(sigma) variates."""

    sigma: float

    support = (0.0, _INF)
    breakpoints = (0.0,)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        s = self.sigma
        xp = np.maximum(x, 0.0)
        val = (xp / s * np.exp(-xp * xp / s)
               + math.sqrt(math.pi / (2 * s)) * np.exp(-xp * xp / (2 * s))
               * np.asarray(special.erf(xp / math.sqrt(2 * s))) * (xp * xp / s - 1.0))
        return _out(np.where(x >= 0, val, 0.0), x)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        s = self.sigma
        xp = np.maximum(x, 0.0)
        val = (-np.expm1(-xp * xp / s)
               - math.sqrt(math.pi / (2 * s)) * xp * np.exp(-xp * xp / (2 * s))
               * np.asarray(special.erf(xp / math.sqrt(2 * s))))
        return _out(np.clip(val, 0.0, 1.0), x)

    def _bracket(self):
        return (0.0, 20.0 * math.sqrt(self.sigma))


# ------------------------------------------------------------ closed products
class _UniformProduct(Law):
    """Product of two Uniform(0, 1) variates: density ``-log x``."""

    support = (0.0, 1.0)
    breakpoints = (0.0, 1.0)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        inside = (x > 0) & (x <= 1)
        with np.errstate(divide="ignore", invalid="ignore"):
            val = np.where(inside, -np.log(np.where(inside, x, 1.0)), 0.0)
        val = np.where(x == 0, _INF, val)
        return _out(val, x)

    def cdf(self, x):
        x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            val = np.where(x > 0, x - x * np.log(np.where(x > 0, x, 1.0)), 0.0)
        return _out(val, x)

    def __eq__(self, other):
        return isinstance(other, _UniformProduct)

    def __hash__(self):
        return hash("_UniformProduct")


@dataclass(frozen=True)
class _NormalProduct(Law):
    """Product of two iid Normal(0, sigma2): density ``K0(|x|/sigma2)/(pi sigma2)``."""

    sigma2: float

    breakpoints = (0.0,)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        ax = np.abs(x) / self.sigma2
        safe = np.where(ax > 0, np.minimum(ax, 700.0), 1.0)
        val = np.asarray(special.bessel_k0(safe)) / (math.pi * self.sigma2)
        val = np.where(ax > 700.0, 0.0, val)
        return _out(np.where(ax == 0, _INF, val), x)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        ax = np.minimum(np.abs(x) / self.sigma2, 700.0)
        half = np.asarray(special.bessel_k0_integral(ax)) / math.pi
        return _out(0.5 + np.sign(x) * half, x)

    def _bracket(self):
        return (-80.0 * self.sigma2, 80.0 * self.sigma2)


# ------------------------------------------------------------- tabulated laws
_TAB_NODES = 3000
_TAB_TOL = 1e-11


class _Tabulated(Law):
    """Law evaluated from dense node tables.

    Each piece stores cubic interpolants in a coordinate ``z``: ``z = x`` on
    linear pieces, ``z = log|x|`` on the log pieces used for products.  The
    cdf interpolant is cubic Hermite with the exact density as slope.
    """

    def __init__(self, pieces, support, breakpoints, rng_lo, rng_hi, gap=None):
        self._pieces = pieces
        self.support = support
        self.breakpoints = tuple(breakpoints)
        self._lo = rng_lo
        self._hi = rng_hi
        self._gap = gap  # (x_left, F_left, x_right, F_right, pdf_left, pdf_right) around zero

    def effective_range(self, eps: float = _RANGE_EPS):
        return (self._lo, self._hi)

    def _bracket(self):
        return (self._lo, self._hi)

    def _eval(self, x, which):
        x = np.asarray(x, dtype=float)
        flat = x.ravel()
        out = np.zeros_like(flat)
        if which == "cdf":
            out[flat > self._hi] = 1.0
        done = np.zeros(flat.shape, dtype=bool)
        for piece in self._pieces:
            lo, hi = piece["x_range"]
            m = (~done) & (flat >= lo) & (flat <= hi)
            if not np.any(m):
                continue
            xs = flat[m]
            z = xs if piece["kind"] == "lin" else np.log(np.abs(xs))
            out[m] = piece[which](z)
            done |= m
        if self._gap is not None:
            xl, fl, xr, fr, dl, dr = self._gap
            m = (~done) & (flat > xl) & (flat < xr)
            if np.any(m):
                if which == "cdf":
                    out[m] = fl + (fr - fl) * (flat[m] - xl) / (xr - xl)
                else:
                    out[m] = np.where(flat[m] < 0, dl, dr)
        if which == "cdf":
            out = np.clip(out, 0.0, 1.0)
        else:
            out = np.maximum(out, 0.0)
        return _out(out.reshape(x.shape), x)

    def pdf(self, x):
        return self._eval(x, "pdf")

    def cdf(self, x):
        return self._eval(x, "cdf")


def _piece_nodes(lo, hi, count):
    return np.linspace(lo, hi, max(int(count), 48))


def _build_piece(kind, x_range, z, pdf_vals, cdf_vals):
    x = z if kind == "lin" else (np.exp(z) if x_range[0] >= 0 else -np.exp(z))
    slope = pdf_vals if kind == "lin" else pdf_vals * x
    order = np.argsort(z)
    z, pdf_vals, cdf_vals, slope = z[order], pdf_vals[order], cdf_vals[order], slope[order]
    return {
        "kind": kind,
        "x_range": x_range,
        "pdf": interpolate.CubicSpline(z, pdf_vals, extrapolate=True),
        "cdf": interpolate.CubicHermiteSpline(z, cdf_vals, slope, extrapolate=True),
    }


def _sum_tabulate(left: Law, right: Law) -> _Tabulated:
    Ll, Hl = left.effective_range()
    Lr, Hr = right.effective_range()
    lo, hi = Ll + Lr, Hl + Hr
    bl = np.array(sorted(set(left.breakpoints)), dtype=float)
    br = np.array(sorted(set(right.breakpoints)), dtype=float)
    kinks = sorted({float(a + b) for a in bl for b in br})
    edges = [lo] + [k for k in kinks if lo < k < hi] + [hi]
    total = hi - lo
    xs = [_piece_nodes(a, b, _TAB_NODES * (b - a) / total) for a, b in zip(edges[:-1], edges[1:])]
    x = np.concatenate(xs)

    ulo = np.maximum(Lr, x - Hl)
    uhi = np.minimum(Hr, x - Ll)
    uhi = np.maximum(uhi, ulo)
    cols = [ulo, uhi] + [np.full_like(x, b) for b in br] + [x - b for b in bl]
    breaks = np.sort(np.clip(np.stack(cols, axis=1), ulo[:, None], uhi[:, None]), axis=1)

    def integrand(u):
        fr = np.asarray(right.pdf(u))
        xu = x[:, None] - u
        return np.stack([fr * np.asarray(left.pdf(xu)), fr * np.asarray(left.cdf(xu))])

    dens, prob = integrate_panels(integrand, breaks, tol=_TAB_TOL)
    prob = prob + np.asarray(right.cdf(np.clip(x - Hl, Lr, Hr))) * (x - Hl > Lr)

    pieces = []
    start = 0
    for (a, b), seg in zip(zip(edges[:-1], edges[1:]), xs):
        sl = slice(start, start + seg.size)
        pieces.append(_build_piece("lin", (a, b), x[sl], dens[sl], prob[sl]))
        start += seg.size
    sup = (left.support[0] + right.support[0], left.support[1] + right.support[1])
    return _Tabulated(pieces, sup, [k for k in kinks if math.isfinite(k)], lo, hi)


def _interval_product(a, b):
    cands = [a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]]
    return min(cands), max(cands)


def _product_tabulate(left: Law, right: Law) -> _Tabulated:
    Ll, Hl = left.effective_range()
    Lr, Hr = right.effective_range()
    lo, hi = _interval_product((Ll, Hl), (Lr, Hr))
    Ml = max(abs(Ll), abs(Hl))
    bl = [b for b in set(left.breakpoints) if b != 0]
    br = sorted({b for b in right.breakpoints if b != 0})
    kinks = sorted({float(a * b) for a in set(left.breakpoints) for b in set(right.breakpoints)}
                   | ({0.0} if lo <= 0 <= hi else set()))
    scale = max(abs(lo), abs(hi))
    tiny = 1e-13 * scale

    def side_nodes(sign):
        top = hi if sign > 0 else -lo
        if top <= tiny:
            return []
        cuts = sorted({tiny, top} | {abs(k) for k in kinks if k * sign > 0 and tiny < abs(k) < top})
        zc = np.log(cuts)
        span = zc[-1] - zc[0]
        return [(sign, _piece_nodes(za, zb, _TAB_NODES * (zb - za) / span)) for za, zb in zip(zc[:-1], zc[1:])]

    segments = side_nodes(+1) + side_nodes(-1)
    zs = np.concatenate([s[1] for s in segments])
    signs = np.concatenate([np.full(s[1].size, s[0], dtype=float) for s in segments])
    x = signs * np.exp(zs)
    ax = np.abs(x)

    dens = np.zeros_like(x)
    prob = np.zeros_like(x)
    for vsign in (+1, -1):
        vtop = Hr if vsign > 0 else -Lr
        if vtop <= 0:
            continue
        vbot = max(Lr, 0.0) if vsign > 0 else max(-Hr, 0.0)
        vcut = ax / Ml  # below this |v|, |x/v| exceeds the left range
        slo = np.log(np.maximum(np.maximum(vcut, vbot), 1e-300))
        shi = np.full_like(x, math.log(vtop))
        shi = np.maximum(shi, slo)
        cols = [slo, shi] + [np.full_like(x, math.log(abs(b))) for b in br if b * vsign > 0]
        for b in bl:
            ratio = x / (b * vsign)
            cols.append(np.log(np.where(ratio > 0, ratio, np.exp(slo))))
        breaks = np.sort(np.clip(np.stack(cols, axis=1), slo[:, None], shi[:, None]), axis=1)

        def integrand(s, vsign=vsign):
            v = vsign * np.exp(s)
            fr = np.asarray(right.pdf(v))
            u = x[:, None] / v
            Fl = np.asarray(left.cdf(u))
            tail = Fl if vsign > 0 else 1.0 - Fl
            return np.stack([fr * np.asarray(left.pdf(u)), fr * tail * np.abs(v)])

        d, p = integrate_panels(integrand, breaks, tol=_TAB_TOL)
        dens += d
        prob += p
        # mass of v between 0 and the cut, where x/v lies beyond the left range
        cut = np.maximum(np.minimum(vcut, vtop), vbot)
        if vsign > 0:
            mass = np.asarray(right.cdf(cut)) - float(right.cdf(vbot))
            prob += np.where(x > 0, mass, 0.0)
        else:
            mass = float(right.cdf(-vbot)) - np.asarray(right.cdf(-cut))
            prob += np.where(x > 0, mass, 0.0)

    pieces = []
    start = 0
    for sign, seg in segments:
        sl = slice(start, start + seg.size)
        xa, xb = np.exp(seg[0]), np.exp(seg[-1])
        x_range = (xa, xb) if sign > 0 else (-xb, -xa)
        pieces.append(_build_piece("log", x_range, zs[sl], dens[sl], prob[sl]))
        start += seg.size

    def edge(sign):
        m = (signs == sign)
        if not np.any(m):
            return None
        i = np.argmin(np.where(m, ax, np.inf))
        return x[i], prob[i], dens[i]

    pos, neg = edge(+1), edge(-1)
    xl, fl, dl = neg if neg else (0.0, 0.0, 0.0)
    xr, fr_, dr = pos if pos else (0.0, 1.0, 0.0)
    if lo >= 0:
        xl, fl = 0.0, 0.0
    if hi <= 0:
        xr, fr_ = 0.0, 1.0
    gap = (xl, fl, xr, fr_, dl, dr)
    sup = _interval_product(left.support, right.support) if all(
        math.isfinite(v) for v in left.support + right.support) else (
        0.0 if left.support[0] >= 0 and right.support[0] >= 0 else -_INF, _INF)
    return _Tabulated(pieces, sup, [k for k in kinks if math.isfinite(k)], lo, hi, gap=gap)


# ---------------------------------------------------------------- derived law
@dataclass(frozen=True)
class DerivedLaw(Law):
    """Law of the sum or product of ``m`` independent variates.

    ``parents`` lists the law of every term (length ``m``); ``form`` is
    ``"closed"`` when an analytic expression backs the law (``tag`` names
    it) and ``"numeric"`` for tabulated laws.
    """

    role: str
    parents: tuple
    form: str
    tag: str | None = None
    impl: Law = field(default=None, compare=False, repr=False)

    @property
    def m(self) -> int:
        return len(self.parents)

    @property
    def support(self):
        return self.impl.support

    @property
    def breakpoints(self):
        return self.impl.breakpoints

    def pdf(self, x):
        return self.impl.pdf(x)

    def cdf(self, x):
        return self.impl.cdf(x)

    def quantile(self, p):
        return self.impl.quantile(p)

    def effective_range(self, eps: float = _RANGE_EPS):
        return self.impl.effective_range(eps)

    def _bracket(self):
        return self.impl._bracket()

    def draw(self, rng, size=None):
        cols = [par.draw(rng, size) for par in self.parents]
        stacked = np.stack([np.asarray(c, dtype=float) for c in cols], axis=-1)
        agg = stacked.sum(axis=-1) if self.role == "sum" else stacked.prod(axis=-1)
        return float(agg) if size is None else agg


@functools.lru_cache(maxsize=128)
def sum_law(parent: ParentDistribution, m: int, numeric: bool = False):
    """Law of ``X_1 + ... + X_m`` for iid ``X_i ~ parent``.

    ``m = 1`` returns ``parent``.  Normal, exponential and gamma sums are
    closed for every ``m``; uniform and Rayleigh sums for ``m = 2``.
    ``numeric=True`` forces the tabulated convolution path.
    """
    if m < 1 or int(m) != m:
        raise DomainError("m must be a positive integer")
    if m == 1:
        return parent
    parents = (parent,) * m
    if not numeric:
        impl, tag = None, None
        if isinstance(parent, Normal):
            impl, tag = Normal(m * parent.mu, m * parent.sigma2), "normal"
        elif isinstance(parent, Exponential):
            impl, tag = Gamma(m, 1.0 / parent.lam), "erlang"
        elif isinstance(parent, Gamma):
            impl, tag = Gamma(m * parent.shape, parent.scale), "gamma"
        elif m == 2 and isinstance(parent, Uniform):
            impl, tag = _Triangular(parent.a, parent.b), "triangular"
        elif m == 2 and isinstance(parent, RayleighPaper):
            impl, tag = _RayleighSum(parent.sigma), "rayleigh_sum"
        if impl is not None:
            return DerivedLaw("sum", parents, "closed", tag, impl)
    left = sum_law(parent, m - 1, numeric=numeric)
    return DerivedLaw("sum", parents, "numeric", None, _sum_tabulate(left, parent))


@functools.lru_cache(maxsize=128)
def product_law(parent: ParentDistribution, m: int, numeric: bool = False):
    """Law of ``X_1 * ... * X_m`` for iid ``X_i ~ parent``.

    Closed for ``m = 2`` with Uniform(0, 1) (density ``-log x``) and
    Normal(0, sigma2) (density ``K0(|x|/sigma2)/(pi sigma2)``); otherwise
    tabulated from the Mellin-type integral.
    """
    if m < 1 or int(m) != m:
        raise DomainError("m must be a positive integer")
    if m == 1:
        return parent
    parents = (parent,) * m
    if not numeric and m == 2:
        if isinstance(parent, Uniform) and parent.a == 0 and parent.b == 1:
            return DerivedLaw("product", parents, "closed", "uniform_product", _UniformProduct())
        if isinstance(parent, Normal) and parent.mu == 0:
            return DerivedLaw("product", parents, "closed", "normal_product",
                              _NormalProduct(parent.sigma2))
    left = product_law(parent, m - 1, numeric=numeric)
    return DerivedLaw("product", parents, "numeric", None, _product_tabulate(left, parent))


def hetero_product_law(*parents: ParentDistribution):
    """Law of the product of independent, differently distributed variates.

    Gamma(2, scale) times Uniform(0, 1) is exponential with rate
    ``1/scale``; any other combination is tabulated.
    """
    if len(parents) == 1 and isinstance(parents[0], (list, tuple)):
        parents = tuple(parents[0])
    return _hetero_product(tuple(parents))


@functools.lru_cache(maxsize=128)
def _hetero_product(parents):
    if not parents:
        raise DomainError("at least one parent is required")
    if len(parents) == 1:
        return parents[0]
    if (len(parents) == 2 and isinstance(parents[0], Gamma) and parents[0].shape == 2
            and parents[1] == Uniform(0.0, 1.0)):
        return DerivedLaw("product", parents, "closed", "gamma_uniform",
                          Exponential(1.0 / parents[0].scale))
    if len(set(parents)) == 1:
        return product_law(parents[0], len(parents))
    left = _hetero_product(parents[:-1])
    return DerivedLaw("product", parents, "numeric", None, _product_tabulate(left, parents[-1]))


# ------------------------------------------------------------ module helpers
def pdf(d: Law, x):
    return d.pdf(x)


def cdf(d: Law, x):
    return d.cdf(x)


def quantile(d: Law, p):
    return d.quantile(p)


def sample(d: Law, rng, size=None):
    """Draw from ``d`` using ``rng`` (a ``numpy.random.Generator``)."""
    return d.draw(rng, size)


class ParseError(ValueError):
    """Malformed distribution literal."""


_LITERAL = re.compile(r"^\s*([A-Za-z_]+)\s*\(\s*(.*?)\s*\)\s*$")
_NAMES = {
    "uniform": (Uniform, 2),
    "u": (Uniform, 2),
    "normal": (Normal, 2),
    "n": (Normal, 2),
    "gauss": (Normal, 2),
    "exp": (Exponential, 1),
    "exponential": (Exponential, 1),
    "rayleigh": (RayleighPaper, 1),
    "gamma": (Gamma, 2),
}


def parse_distribution(text: str) -> ParentDistribution:
    """Parse literals such as ``"normal(0,1)"`` or ``"gamma(2,1)"``.

    Grammar: ``name "(" real ("," real)* ")"``, name case-insensitive.
    Normal takes (mean, variance); exp takes the rate; rayleigh takes the
    sigma of the density ``(2x/sigma) exp(-x^2/sigma)``; gamma takes
    (shape, scale).
    """
    m = _LITERAL.match(text)
    if not m:
        raise ParseError(f"cannot parse distribution {text!r}")
    name = m.group(1).lower()
    if name not in _NAMES:
        raise ParseError(f"unknown distribution {m.group(1)!r}")
    cls, nargs = _NAMES[name]
    raw = [a for a in m.group(2).split(",")] if m.group(2) else []
    try:
        args = [float(a) for a in raw]
    except ValueError as exc:
        raise ParseError(f"bad numeric argument in {text!r}") from exc
    if len(args) != nargs or not all(math.isfinite(a) for a in args):
        raise ParseError(f"{name} expects {nargs} finite argument(s), got {len(args)}")
    try:
        return cls(*args)
    except DomainError as exc:
        raise ParseError(str(exc)) from exc
