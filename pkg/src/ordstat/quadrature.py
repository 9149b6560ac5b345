"""Numerical integration helpers shared by the density engines."""

from __future__ import annotations

import numpy as np
from scipy import integrate

__all__ = ["NumericError", "integrate_batch", "gauss_legendre_panels", "integrate_panels"]


class NumericError(RuntimeError):
    """Quadrature failed to reach its tolerance.

    ``estimate`` and ``error`` carry the partial result.
    """

    def __init__(self, message, estimate=None, error=None):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


def integrate_batch(f, a, b, *, points=(), epsabs=1e-10, epsrel=1e-10, limit=4000):
    """Adaptive Gauss-Kronrod integral of a vector-valued integrand.

    ``f(t)`` returns an array (one entry per batch member); subdivision is
    shared across the batch and driven by the max-norm error.
    """
    inner = sorted(p for p in set(points) if a < p < b)
    res, err, info = integrate.quad_vec(
        f, a, b, epsabs=epsabs, epsrel=epsrel, norm="max", limit=limit,
        points=inner or None, full_output=True,
    )
    if not info.success:
        raise NumericError(
            f"quadrature did not converge on [{a}, {b}] (error estimate {err:.3g})",
            estimate=res, error=err,
        )
    return res


_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _gl(order):
    if order not in _GL_CACHE:
        _GL_CACHE[order] = np.polynomial.legendre.leggauss(order)
    return _GL_CACHE[order]


def gauss_legendre_panels(breaks, panels, order=16):
    """Nodes and weights for a composite Gauss-Legendre rule.

    ``breaks`` has shape ``(N, B)`` (sorted along the last axis); each of
    the ``B - 1`` gaps is split into ``panels`` equal panels.  Returns
    arrays of shape ``(N, (B-1) * panels * order)``.
    """
    x, w = _gl(order)
    breaks = np.asarray(breaks, dtype=float)
    lo = breaks[:, :-1]
    hi = breaks[:, 1:]
    frac = np.linspace(0.0, 1.0, panels + 1)
    plo = lo[..., None] + (hi - lo)[..., None] * frac[:-1]
    phi = lo[..., None] + (hi - lo)[..., None] * frac[1:]
    half = 0.5 * (phi - plo)
    mid = 0.5 * (phi + plo)
    nodes = mid[..., None] + half[..., None] * x
    weights = half[..., None] * w
    n = breaks.shape[0]
    return nodes.reshape(n, -1), weights.reshape(n, -1)


def integrate_panels(f, breaks, *, tol=1e-12, order=16, start=4, max_panels=256):
    """Row-wise integrals over per-row breakpoints, refined by panel doubling.

    ``f(nodes)`` maps an ``(N, M)`` node array to integrand values of the
    same shape (or ``(K, N, M)`` for K stacked integrands).  Panels double
    until successive estimates agree to ``tol``, measured as
    ``|change| / (1 + |estimate|)`` in the max-norm.
    """
    panels = start
    nodes, weights = gauss_legendre_panels(breaks, panels, order)
    prev = np.sum(f(nodes) * weights, axis=-1)
    while True:
        panels *= 2
        nodes, weights = gauss_legendre_panels(breaks, panels, order)
        cur = np.sum(f(nodes) * weights, axis=-1)
        diff = float(np.max(np.abs(cur - prev) / (1.0 + np.abs(cur)))) if cur.size else 0.0
        if diff <= tol:
            return cur
        if panels >= max_panels:
            raise NumericError(
                f"panel quadrature stalled at {panels} panels (change {diff:.3g})",
                estimate=cur, error=diff,
            )
        prev = cur
