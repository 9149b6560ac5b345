"""Double-scaling limits of the latent densities.

As ``n, k -> infinity`` with ``k/n -> eta``, the rank-``k`` row aggregate
concentrates at ``beta = G_m^{-1}(eta)``, the ``eta``-quantile of the sum
(or product) of ``m`` terms, and the latent term conditioned on it has
density

    addend:  g_{m-1}(beta - x) f_X(x) / g_m(beta)
    factor:  g_{m-1}(beta / x) f_X(x) / (g_m(beta) |x|)

with ``g_j`` the density of the ``j``-term aggregate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .distributions import Law, hetero_product_law, product_law, sum_law
from .order_engine import DensityCurve, LatentSpec, latent_density
from .special import DomainError

__all__ = [
    "ScalingSpec",
    "DegenerateDensityError",
    "SingularPointError",
    "beta_of_eta",
    "asymptotic_addend_density",
    "asymptotic_factor_density",
    "asymptotic_density",
    "AsymptoticReport",
    "asymptotic_vs_exact_report",
]

ETA_MIN = 0.001
ETA_MAX = 0.999


class DegenerateDensityError(ArithmeticError):
    """The aggregate density vanishes, or is unbounded, at ``beta``."""


class SingularPointError(ArithmeticError):
    """The factor limit is undefined at ``x = 0``."""


@dataclass(frozen=True)
class ScalingSpec:
    eta: float
    m: int = 2
    role: str = "addend"

    def __post_init__(self):
        _check_eta(self.eta)
        if int(self.m) != self.m or self.m < 2:
            raise ValueError("m must be an integer >= 2")
        if self.role not in ("addend", "factor"):
            raise ValueError("role must be 'addend' or 'factor'")


def _check_eta(eta):
    if not ETA_MIN < eta < ETA_MAX:
        raise DomainError(f"eta must lie in ({ETA_MIN}, {ETA_MAX}); got {eta}")


def _laws(parent, m, role):
    """(latent parent, m-term law, (m-1)-term law)."""
    if isinstance(parent, (list, tuple)):
        parents = tuple(parent)
        if role != "factor":
            raise ValueError("heterogeneous parents are supported for factors only")
        return parents[0], hetero_product_law(*parents), hetero_product_law(*parents[1:])
    if m < 2:
        raise ValueError("m must be >= 2")
    build = sum_law if role == "addend" else product_law
    return parent, build(parent, m), build(parent, m - 1)


def beta_of_eta(parent, m: int, role: str, eta: float) -> float:
    """The ``eta``-quantile of the ``m``-term sum or product law."""
    _check_eta(eta)
    if isinstance(parent, (list, tuple)):
        law = hetero_product_law(*parent)
    elif role == "addend":
        law = sum_law(parent, m)
    else:
        law = product_law(parent, m)
    return float(law.quantile(eta))


def _scale(gm: Law, beta: float) -> float:
    g = float(gm.pdf(beta))
    if not g > 1e-300:
        raise DegenerateDensityError(f"aggregate density at beta={beta} is {g}")
    if not math.isfinite(g):
        # e.g. the normal product at beta = 0: the limit is a point mass
        raise DegenerateDensityError(f"aggregate density is unbounded at beta={beta}")
    return g


def asymptotic_addend_density(parent: Law, m: int, eta: float, x):
    """Limit density of the latent addend."""
    fx_law, gm, gm1 = _laws(parent, m, "addend")
    beta = beta_of_eta(parent, m, "addend", eta)
    norm = _scale(gm, beta)
    x = np.asarray(x, dtype=float)
    val = np.asarray(gm1.pdf(beta - x)) * np.asarray(fx_law.pdf(x)) / norm
    return float(val) if x.ndim == 0 else val


def asymptotic_factor_density(parent, m: int, eta: float, x):
    """Limit density of the latent factor; ``parent`` may list hetero laws.

    Raises ``SingularPointError`` if any ``x`` equals 0.
    """
    if isinstance(parent, (list, tuple)):
        m = len(parent)
    fx_law, gm, gm1 = _laws(parent, m, "factor")
    beta = beta_of_eta(parent, m, "factor", eta)
    norm = _scale(gm, beta)
    x = np.asarray(x, dtype=float)
    if np.any(x == 0):
        raise SingularPointError("factor limit density is undefined at x = 0")
    val = np.asarray(gm1.pdf(beta / x)) * np.asarray(fx_law.pdf(x)) / (norm * np.abs(x))
    return float(val) if x.ndim == 0 else val


def asymptotic_density(parent, m: int, role: str, eta: float, x):
    if role == "addend":
        return asymptotic_addend_density(parent, m, eta, x)
    return asymptotic_factor_density(parent, m, eta, x)


@dataclass(frozen=True)
class AsymptoticReport:
    """Finite-``(n, k)`` curve, its limit and their L1 distance."""

    exact: DensityCurve
    limit: DensityCurve
    l1: float
    eta: float
    beta: float
    method: str


def _plot_grid(parent, m, role, eta, points):
    base = parent[0] if isinstance(parent, (list, tuple)) else parent
    lo, hi = base.effective_range(1e-10)
    x = np.linspace(lo, hi, points)
    if role == "factor":
        # keep the grid off the singular point
        h = x[1] - x[0]
        x = np.where(x == 0, 0.5 * h, x)
    return x


def asymptotic_vs_exact_report(parent, n: int, k: int, m: int, role: str,
                               method: str = "quadrature", trials: int = 10 ** 6,
                               seed: int = 0, bins: int = 100, points: int = 4001,
                               workers: int | None = None) -> AsymptoticReport:
    """Compare the finite-``(n, k)`` latent density with its ``eta = k/n`` limit.

    ``method="quadrature"`` evaluates the exact density and reports
    ``int |f - g| dx`` on a dense grid.  ``method="monte_carlo"`` simulates
    ``trials`` matrices and reports ``sum |O_i/N - 1/bins|`` over bins of
    equal probability under the limit.
    """
    eta = k / n
    if isinstance(parent, (list, tuple)):
        m = len(parent)
    beta = beta_of_eta(parent, m, role, eta)

    def lim(v):
        return asymptotic_density(parent, m, role, eta, v)

    spec = LatentSpec(n, k, m, role)
    x = _plot_grid(parent, m, role, eta, points)
    g = np.asarray(lim(x))
    limit = DensityCurve(x, g, "asymptotic", 1e-8, ScalingSpec(eta, m, role))
    if method == "quadrature":
        f = np.asarray(latent_density(parent, spec, x))
        exact = DensityCurve(x, f, "quadrature", 1e-8, spec)
        l1 = float(np.trapezoid(np.abs(f - g), x))
    elif method == "monte_carlo":
        from .monte_carlo import McConfig, goodness_of_fit, sample_latent

        cfg = McConfig(spec, parent, trials, seed, bins)
        samples = sample_latent(cfg, workers=workers)
        rep = goodness_of_fit(samples, lim, bins=bins, support=(x[0], x[-1]))
        hx, hf = rep.histogram
        exact = DensityCurve(hx, hf, "monte_carlo", 0.0, spec)
        l1 = rep.l1_distance
    else:
        raise ValueError("method must be 'quadrature' or 'monte_carlo'")
    return AsymptoticReport(exact, limit, l1, eta, beta, method)
