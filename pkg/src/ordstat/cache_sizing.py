"""Cache sizing when files are ranked by importance (size x popularity).

Under the reference catalogue model (sizes Gamma(2, 1), popularities
Uniform(0, 1), so importances are Exp(1)) the expected size of the file of
importance rank ``k`` out of ``n`` is ``1 - log(1 - k/n)`` for ``k < n`` and
exactly ``1 + 1/n + H_{n-1}`` for the most important file.  Summing the
top ``q`` of these gives the expected cache space ``S(q, n)`` needed to hold
the ``q`` most important files; ``R(q) = S(q, n) / S(n, n)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import Decimal, localcontext

import numpy as np

from . import special
from .distributions import Gamma, Law, Uniform
from .monte_carlo import run_blocks
from .order_engine import LatentSpec, latent_factor_density_hetero
from .special import DomainError
from .streams import stream

__all__ = [
    "CatalogModel",
    "CacheReport",
    "EXACT_SERIES_MAX_N",
    "most_important_size_density",
    "expected_max_importance_size",
    "max_importance_bounds",
    "expected_kth_size_asymptotic",
    "cumulative_expected_size",
    "tail_sum_direct",
    "tail_sum_pochhammer",
    "cache_ratio",
    "cache_report",
    "mc_cache_ratio",
]

EXACT_SERIES_MAX_N = 60


@dataclass(frozen=True)
class CatalogModel:
    """``n`` files with iid sizes (bits) and popularities (requests/s)."""

    n: int
    size_dist: Law = Gamma(2.0, 1.0)
    popularity_dist: Law = Uniform(0.0, 1.0)

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError("n must be a positive integer")


@dataclass(frozen=True)
class CacheReport:
    q: int
    expected_bytes: float
    ratio: float
    method: str = "asymptotic"
    mc_ratio: float | None = None
    mc_se: float | None = None


# ------------------------------------------------- most important file
def _series_density(n, x):
    """``n e^{-x}(x - H_{n-1}) + sum_{j=2}^n (-1)^j C(n,j) j/(j-1) e^{-jx}``, exactly.

    The alternating sum cancels about ``n`` bits, so it is accumulated in
    decimal arithmetic with ample guard digits.
    """
    with localcontext() as ctx:
        ctx.prec = 40 + n // 2
        h = sum((Decimal(1) / i for i in range(1, n)), Decimal(0))
        coefs = [Decimal((-1) ** j * math.comb(n, j) * j) / (j - 1) for j in range(2, n + 1)]
        out = []
        for xv in x:
            if xv < 0:
                out.append(0.0)
                continue
            dx = Decimal(repr(xv))
            e = (-dx).exp()
            acc = n * e * (dx - h)
            p = e
            for c in coefs:
                p *= e
                acc += c * p
            out.append(float(acc) if acc > 0 else 0.0)
    return np.array(out)


def most_important_size_density(n: int, x, tol: float = 1e-10):
    """Size density of the file of largest size x popularity among ``n``.

    Exact series for ``n <= 60``; beyond that the latent factor density with
    ``k = n`` is integrated numerically.
    """
    if int(n) != n or n < 1:
        raise DomainError("n must be a positive integer")
    x = np.asarray(x, dtype=float)
    flat = x.ravel()
    if n <= EXACT_SERIES_MAX_N:
        val = _series_density(int(n), flat.tolist())
    else:
        spec = LatentSpec(int(n), int(n), 2, "factor")
        val = np.asarray(latent_factor_density_hetero((Gamma(2.0, 1.0), Uniform(0.0, 1.0)),
                                                      spec, flat, tol=tol))
    val = val.reshape(x.shape)
    return float(val) if x.ndim == 0 else val


def expected_max_importance_size(n: int) -> float:
    """``1 + 1/n + H_{n-1}``."""
    if int(n) != n or n < 1:
        raise DomainError("n must be a positive integer")
    return 1.0 + 1.0 / n + special.harmonic(int(n) - 1)


def max_importance_bounds(n: int) -> tuple[float, float]:
    """``1 + 1/n + gamma + log(n - 1)`` and ``1 + 1/n + gamma + log n``, ``n >= 2``."""
    if int(n) != n or n < 2:
        raise DomainError("bounds need n >= 2")
    g = special.euler_gamma()
    return 1.0 + 1.0 / n + g + math.log(n - 1), 1.0 + 1.0 / n + g + math.log(n)


# ------------------------------------------------------ rank k < n
def expected_kth_size_asymptotic(k: int, n: int) -> float:
    """``1 - log(1 - k/n)`` for ``1 <= k <= n - 1``."""
    if k == n:
        raise DomainError("k = n is outside the asymptotic regime; "
                          "use expected_max_importance_size(n)")
    if not 1 <= k <= n - 1:
        raise DomainError("require 1 <= k <= n - 1")
    return 1.0 - math.log1p(-k / n)


def tail_sum_direct(q: int, n: int) -> float:
    """``sum_{i=n-q+1}^{n-1} (1 - log(1 - i/n))``."""
    return math.fsum(expected_kth_size_asymptotic(i, n) for i in range(n - q + 1, n))


def tail_sum_pochhammer(q: int, n: int) -> float:
    """``-log(-(-1/n)^q n (1-q)_{q-1}) + q - 1`` evaluated in log space."""
    if q < 1:
        raise DomainError("q must be >= 1")
    sign, log_p = special.log_abs_pochhammer(1 - q, q - 1)
    # (-1/n)^q carries (-1)^q; the leading minus flips it once more
    sign = -((-1) ** q) * sign
    if sign <= 0:
        raise ArithmeticError("logarithm argument is not positive")
    return -((1 - q) * math.log(n) + log_p) + q - 1


def cumulative_expected_size(q: int, n: int, rtol: float = 1e-8) -> float:
    """``S(q, n) = E_max(n) + sum over the next q - 1 ranks``.

    The tail is summed directly and cross-checked against the Pochhammer
    closed form to relative ``rtol``.
    """
    if int(n) != n or n < 1:
        raise DomainError("n must be a positive integer")
    if not 1 <= q <= n:
        raise DomainError("require 1 <= q <= n")
    direct = tail_sum_direct(q, n)
    if q >= 2:
        closed = tail_sum_pochhammer(q, n)
        if abs(direct - closed) > rtol * abs(closed):
            raise ArithmeticError(f"tail sums disagree: {direct!r} vs {closed!r}")
    return expected_max_importance_size(n) + direct


def cache_ratio(q: int, n: int) -> float:
    """``R(q) = S(q, n) / S(n, n)``."""
    return cumulative_expected_size(q, n) / cumulative_expected_size(n, n)


def cache_report(q: int, n: int) -> CacheReport:
    return CacheReport(q, cumulative_expected_size(q, n), cache_ratio(q, n), "asymptotic")


# ------------------------------------------------------- simulation
def mc_cache_ratio(model: CatalogModel, q, replications: int, seed: int = 0,
                   workers: int | None = None):
    """Simulated share of catalogue bytes held by the ``q`` most important files.

    Returns ``(ratio, se)``: the ratio of the mean top-``q`` size sum to the
    mean catalogue size, with a jackknife standard error.  ``q`` may be a
    sequence, in which case both are arrays.
    """
    if replications < 100:
        raise ValueError("need at least 100 replications")
    qs = np.atleast_1d(np.asarray(q, dtype=int))
    n = model.n
    if np.any((qs < 1) | (qs > n)):
        raise DomainError("require 1 <= q <= n")
    block = max(1, (1 << 20) // (2 * n))

    def run(b, size):
        rng = stream(seed, b)
        sizes = np.asarray(model.size_dist.draw(rng, (size, n)), dtype=float)
        pops = np.asarray(model.popularity_dist.draw(rng, (size, n)), dtype=float)
        order = np.argsort(-(sizes * pops), axis=1, kind="stable")
        csum = np.cumsum(np.take_along_axis(sizes, order, axis=1), axis=1)
        return csum[:, qs - 1], csum[:, -1]

    parts = run_blocks(run, replications, block, workers)
    top = np.concatenate([p[0] for p in parts])
    total = np.concatenate([p[1] for p in parts])
    N = total.size
    st, sa = top.sum(axis=0), total.sum()
    ratio = st / sa
    loo = (st[None, :] - top) / (sa - total)[:, None]
    se = np.sqrt((N - 1) / N * np.sum((loo - loo.mean(axis=0)) ** 2, axis=0))
    if np.ndim(q) == 0:
        return float(ratio[0]), float(se[0])
    return ratio, se
