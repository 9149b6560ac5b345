"""Densities of the latent addend or factor of the k-th smallest row aggregate.

Given an ``n x m`` matrix of iid entries, sort the rows by their sum (or
product) and take the first entry of the row of rank ``k``.  Its density is

    K_{n,k} f_X(x) E_T[ F_S(x + T)^(k-1) (1 - F_S(x + T))^(n-k) ]

for sums, with ``S`` the sum of ``m`` terms and ``T`` the sum of ``m - 1``
terms, and ``K_{n,k} = n! / ((k-1)! (n-k)!)``.  Products replace
``F_S(x + T)`` by ``F_U(x V)``.  The expectation is computed by adaptive
Gauss-Kronrod quadrature; the normaliser and kernel are combined in log
space so ``n`` in the thousands does not overflow.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .distributions import Law, hetero_product_law, product_law, sum_law
from .quadrature import NumericError, integrate_batch
from .special import log_order_normalizer

__all__ = [
    "LatentSpec",
    "DensityCurve",
    "order_statistic_density",
    "latent_addend_density",
    "latent_factor_density",
    "latent_factor_density_hetero",
    "latent_density",
    "latent_mean",
    "central_grid",
    "density_curve",
    "map_ordered",
]

DEFAULT_TOL = 1e-8
_T_EPS = 1e-12
_QUAD_LIMIT = 400


@dataclass(frozen=True)
class LatentSpec:
    """Which latent density: ``n`` rows of ``m`` terms, rank ``k`` (1 = smallest)."""

    n: int
    k: int
    m: int = 2
    role: str = "addend"

    def __post_init__(self):
        for name in ("n", "k", "m"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ValueError(f"{name} must be a positive integer")
        if not 1 <= self.k <= self.n:
            raise ValueError("require 1 <= k <= n")
        if self.role not in ("addend", "factor"):
            raise ValueError("role must be 'addend' or 'factor'")

    @property
    def log_normalizer(self) -> float:
        return log_order_normalizer(self.n, self.k)


@dataclass(frozen=True)
class DensityCurve:
    """Density values on a strictly increasing grid.

    ``provenance`` is one of ``analytic``, ``quadrature``, ``asymptotic``
    or ``monte_carlo``; ``tolerance`` is the pointwise accuracy target.
    """

    x: np.ndarray
    f: np.ndarray
    provenance: str
    tolerance: float
    spec: object = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        f = np.asarray(self.f, dtype=float)
        if x.ndim != 1 or x.shape != f.shape:
            raise ValueError("x and f must be 1-d arrays of equal length")
        if np.any(np.diff(x) <= 0):
            raise ValueError("grid must be strictly increasing")
        if np.any(f < -self.tolerance) or not np.all(np.isfinite(f)):
            raise ValueError("density values must be finite and non-negative")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "f", np.maximum(f, 0.0))

    def mass(self) -> float:
        """Trapezoid integral over the grid."""
        return float(np.trapezoid(self.f, self.x))

    def mean(self) -> float:
        return float(np.trapezoid(self.x * self.f, self.x) / self.mass())

    def __len__(self):
        return self.x.size


# ---------------------------------------------------------------- kernels
def _log_kernel(F, n, k, log_norm):
    """``log K + (k-1) log F + (n-k) log(1-F)`` with ``0 * log 0 = 0``."""
    F = np.clip(np.asarray(F, dtype=float), 0.0, 1.0)
    out = np.full(F.shape, log_norm)
    with np.errstate(divide="ignore"):
        if k > 1:
            out = out + (k - 1) * np.log(F)
        if n > k:
            out = out + (n - k) * np.log1p(-F)
    return out


def order_statistic_density(parent: Law, n: int, k: int, x):
    """Density of the k-th smallest of ``n`` iid draws from ``parent``."""
    spec = LatentSpec(n, k, 1)
    x = np.asarray(x, dtype=float)
    fx = np.asarray(parent.pdf(x), dtype=float)
    val = np.exp(_log_kernel(parent.cdf(x), n, k, spec.log_normalizer)) * fx
    val = np.where(fx > 0, val, 0.0)
    return float(val) if x.ndim == 0 else val


def _expectation(aggregate_cdf, inner: Law, arg, points, n, k, log_norm, tol, fx):
    """``E_T[K F(arg(t))^(k-1) (1-F(arg(t)))^(n-k)]`` for one ``x``."""
    lo, hi = _inner_range(inner)

    def g(t):
        w = float(inner.pdf(t))
        if w == 0.0:
            return 0.0
        return w * math.exp(float(_log_kernel(aggregate_cdf(arg(t)), n, k, log_norm)))

    pts = sorted({p for p in points if lo < p < hi})
    epsabs = tol / max(fx, tol)
    val, err, *rest = integrate.quad(g, lo, hi, points=pts or None, epsabs=epsabs,
                                     epsrel=1e-10, limit=_QUAD_LIMIT, full_output=1)
    if len(rest) > 1 and err > epsabs and err > 1e-10 * abs(val):
        raise NumericError(f"latent expectation did not converge (error {err:.3g})",
                           estimate=val, error=err)
    return val


def _inner_range(inner: Law):
    lo, hi = inner.support
    lo = lo if math.isfinite(lo) else float(inner.quantile(_T_EPS))
    hi = hi if math.isfinite(hi) else float(inner.quantile(1.0 - _T_EPS))
    return lo, hi


def _batch(aggregate_cdf, inner: Law, combine, xs, fx, shared, n, k, log_norm, tol):
    """``fx * E[...]`` for many ``x`` at once; subdivision shared by the batch."""
    lo, hi = _inner_range(inner)

    def g(t):
        w = float(inner.pdf(t))
        if w == 0.0:
            return np.zeros_like(xs)
        return fx * w * np.exp(_log_kernel(aggregate_cdf(combine(xs, t)), n, k, log_norm))

    pts = sorted({p for p in shared if lo < p < hi})
    return integrate_batch(g, lo, hi, points=pts, epsabs=tol, epsrel=1e-10)


def _engine(parent, aggregate, inner, combine, local_points, shared, spec, x, tol, at_zero=None):
    """Evaluate the latent density on ``x``.

    ``local_points(xv)`` lists kinks of the integrand that move with ``x``;
    points where none fall inside the inner range are evaluated as one
    vectorised batch, the rest one by one.
    """
    n, k = spec.n, spec.k
    log_norm = spec.log_normalizer
    x = np.asarray(x, dtype=float)
    flat = x.ravel()
    fx = np.asarray(parent.pdf(flat), dtype=float).reshape(flat.shape)
    out = np.zeros_like(flat)
    live = (fx > 0) & np.isfinite(fx)
    out[~np.isfinite(fx)] = fx[~np.isfinite(fx)]
    if n == 1:
        out[live] = fx[live]
        return float(out[0]) if x.ndim == 0 else out.reshape(x.shape)
    lo, hi = _inner_range(inner)
    batch = np.zeros_like(live)
    for i in np.flatnonzero(live):
        xv = flat[i]
        if at_zero is not None and xv == 0.0:
            out[i] = fx[i] * math.exp(float(_log_kernel(at_zero(), n, k, log_norm)))
            continue
        local = [p for p in local_points(xv) if lo < p < hi]
        if local:
            e = _expectation(aggregate.cdf, inner, lambda t, xv=xv: combine(xv, t),
                             list(shared) + local, n, k, log_norm, tol, fx[i])
            out[i] = fx[i] * e
        else:
            batch[i] = True
    if np.any(batch):
        out[batch] = _batch(aggregate.cdf, inner, combine, flat[batch], fx[batch], shared,
                            n, k, log_norm, tol)
    return float(out[0]) if x.ndim == 0 else out.reshape(x.shape)


def latent_addend_density(parent: Law, spec: LatentSpec, x, tol: float = DEFAULT_TOL):
    """Density of the first addend of the row whose sum has rank ``spec.k``."""
    if spec.role != "addend":
        raise ValueError("spec.role must be 'addend'")
    if spec.m == 1 or spec.n == 1:
        # T degenerates to 0, or a single row: the kernel at F_X(x)
        return order_statistic_density(parent, spec.n, spec.k, x)
    S = sum_law(parent, spec.m)
    T = sum_law(parent, spec.m - 1)
    s_breaks = [b for b in S.breakpoints if math.isfinite(b)]
    return _engine(parent, S, T, lambda xv, t: xv + t, lambda xv: [b - xv for b in s_breaks],
                   list(T.breakpoints), spec, x, tol)


def _factor(parent: Law, U: Law, V: Law, spec: LatentSpec, x, tol):
    u_breaks = [b for b in U.breakpoints if math.isfinite(b) and b != 0]
    return _engine(parent, U, V, lambda xv, v: xv * v, lambda xv: [b / xv for b in u_breaks],
                   list(V.breakpoints) + [0.0], spec, x, tol,
                   at_zero=lambda: float(U.cdf(0.0)))


def latent_factor_density(parent: Law, spec: LatentSpec, x, tol: float = DEFAULT_TOL):
    """Density of the first factor of the row whose product has rank ``spec.k``."""
    if spec.role != "factor":
        raise ValueError("spec.role must be 'factor'")
    if spec.m == 1 or spec.n == 1:
        return order_statistic_density(parent, spec.n, spec.k, x)
    U = product_law(parent, spec.m)
    V = product_law(parent, spec.m - 1)
    return _factor(parent, U, V, spec, x, tol)


def latent_factor_density_hetero(parents, spec: LatentSpec, x, tol: float = DEFAULT_TOL,
                                 latent_index: int = 0):
    """Factor density when the ``m`` factors of a row follow different laws.

    ``parents[latent_index]`` is the observed factor (the first by default);
    the others form ``V``.
    """
    parents = tuple(parents)
    if spec.role != "factor":
        raise ValueError("spec.role must be 'factor'")
    if len(parents) != spec.m:
        raise ValueError("len(parents) must equal spec.m")
    latent = parents[latent_index]
    if spec.m == 1 or spec.n == 1:
        return order_statistic_density(latent, spec.n, spec.k, x)
    others = parents[:latent_index] + parents[latent_index + 1:]
    U = hetero_product_law(*parents)
    V = hetero_product_law(*others)
    return _factor(latent, U, V, spec, x, tol)


def latent_density(parent, spec: LatentSpec, x, tol: float = DEFAULT_TOL):
    """Dispatch on ``spec.role``; a list of parents selects the hetero factor path."""
    if isinstance(parent, (list, tuple)):
        return latent_factor_density_hetero(parent, spec, x, tol)
    if spec.role == "addend":
        return latent_addend_density(parent, spec, x, tol)
    return latent_factor_density(parent, spec, x, tol)


def _latent_parent(parent):
    return parent[0] if isinstance(parent, (list, tuple)) else parent


def latent_mean(parent, spec: LatentSpec, tol: float = 1e-6):
    """Mean of the latent density by nested adaptive quadrature.

    Raises ``NumericError`` when the tail contribution does not settle.
    """
    base = _latent_parent(parent)
    lo, hi = base.support
    elo, ehi = base.effective_range(1e-13)
    lo = lo if math.isfinite(lo) else elo
    hi = hi if math.isfinite(hi) else ehi
    pts = sorted({p for p in list(base.breakpoints) + [0.0] if lo < p < hi})

    def g(v):
        return v * float(latent_density(parent, spec, v, tol=tol * 1e-3))

    val, err, *rest = integrate.quad(g, lo, hi, points=pts or None, epsabs=tol, epsrel=tol,
                                     limit=200, full_output=1)
    if len(rest) > 1 and err > tol:
        raise NumericError(f"latent mean did not converge (error {err:.3g})",
                           estimate=val, error=err)
    return val


# ---------------------------------------------------------------- curves
def central_grid(density, lo: float, hi: float, points: int = 401, mass: float = 0.999,
                 probe: int = 801):
    """Grid over the central ``mass`` of ``density`` restricted to ``[lo, hi]``.

    The cumulative mass is located on a probe grid by the trapezoid rule.
    """
    xp = np.linspace(lo, hi, probe)
    fp = np.nan_to_num(np.asarray(density(xp), dtype=float), posinf=0.0)
    c = np.concatenate([[0.0], np.cumsum(0.5 * (fp[1:] + fp[:-1]) * np.diff(xp))])
    if c[-1] <= 0:
        raise NumericError("density has no mass on the probe interval")
    c /= c[-1]
    tail = 0.5 * (1.0 - mass)
    a = float(np.interp(tail, c, xp))
    b = float(np.interp(1.0 - tail, c, xp))
    return np.linspace(a, b, points)


def map_ordered(fn, xs, threads=None, chunk: int = 64):
    """Apply ``fn`` to fixed chunks of ``xs`` on up to ``threads`` threads.

    Chunk boundaries do not depend on ``threads`` (batched quadrature shares
    its subdivision within a chunk), so the output is identical for every
    thread count.  Results are concatenated in grid order.
    """
    xs = np.asarray(xs, dtype=float)
    chunks = [xs[i:i + chunk] for i in range(0, xs.size, chunk)]
    if threads is None or threads <= 1 or len(chunks) < 2:
        parts = [np.atleast_1d(fn(c)) for c in chunks]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda c: np.atleast_1d(fn(c)), chunks))
    return np.concatenate(parts) if parts else np.zeros(0)


def density_curve(parent, spec: LatentSpec, grid=None, points: int = 401,
                  tol: float = DEFAULT_TOL, threads: int | None = None) -> DensityCurve:
    """Quadrature ``DensityCurve``; the default grid spans the central 99.9% mass."""
    base = _latent_parent(parent)

    def dens(v):
        return latent_density(parent, spec, v, tol)

    if grid is None:
        lo, hi = base.effective_range(1e-9)
        grid = central_grid(dens, lo, hi, points, probe=201)
    xs = np.asarray(grid, dtype=float)
    f = map_ordered(dens, xs, threads)
    return DensityCurve(xs, f, "quadrature", tol, spec)
