"""Reduced-size invariant suite behind ``ordstat selfcheck``."""

from __future__ import annotations

import math

import numpy as np

from . import special
from .cache_sizing import (CatalogModel, cache_ratio, expected_max_importance_size,
                           max_importance_bounds, mc_cache_ratio, tail_sum_direct,
                           tail_sum_pochhammer)
from .closed_forms import closed_form_density, rayleigh_factor
from .distributions import Exponential, Normal, RayleighPaper, Uniform, product_law, sum_law
from .monte_carlo import McConfig, goodness_of_fit, ks_critical, sample_latent
from .order_engine import (LatentSpec, central_grid, latent_addend_density, latent_density,
                           order_statistic_density)

CASES = [(Uniform(0.0, 1.0), "addend"), (Normal(0.0, 1.0), "addend"),
         (Exponential(1.0), "addend"), (RayleighPaper(1.0), "addend"),
         (Uniform(0.0, 1.0), "factor"), (Normal(0.0, 1.0), "factor"),
         (Exponential(1.0), "factor"), (RayleighPaper(1.0), "factor")]


def _check(results, name, passed, detail):
    results.append((name, bool(passed), detail))


def run_selfcheck(trials: int = 10 ** 4, seed: int = 0, workers: int | None = None):
    """Run every check; returns ``[(name, passed, detail), ...]``."""
    out = []
    ref = {"erf(1)": (special.erf(1.0), 0.8427007929497149),
           "E1(1)": (special.exp_integral_e1(1.0), 0.21938393439552029),
           "K0(1)": (special.bessel_k0(1.0), 0.42102443824070834),
           "H_999": (special.harmonic(999), 7.484470860550345)}
    worst = max(abs(a - b) / abs(b) for a, b in ref.values())
    _check(out, "special functions", worst < 1e-10, f"max rel err {worst:.2e}")

    ps = np.array([0.01, 0.1, 0.25, 0.5, 0.75, 0.9, 0.99])
    err = 0.0
    for law in (sum_law(Uniform(0.0, 1.0), 2), sum_law(RayleighPaper(1.0), 2),
                product_law(Uniform(0.0, 1.0), 2), product_law(Normal(0.0, 1.0), 2)):
        err = max(err, float(np.max(np.abs(law.cdf(law.quantile(ps)) - ps))))
    _check(out, "quantile round trip", err < 1e-8, f"max |F(q(p)) - p| {err:.2e}")

    sup = 0.0
    for parent, role in CASES:
        f = closed_form_density(parent, role)
        lo, hi = parent.effective_range(1e-14)
        x = central_grid(f, lo, hi, 200)
        e = latent_density(parent, LatentSpec(2, 2, 2, role), x)
        sup = max(sup, float(np.max(np.abs(e - f(x)))))
    _check(out, "engine vs closed forms", sup < 1e-5, f"sup-norm {sup:.2e}")

    red = 0.0
    for parent in (Uniform(0.0, 1.0), Exponential(1.0)):
        x = np.linspace(0.01, 0.99, 50)
        for n, k in ((2, 1), (2, 2), (5, 3)):
            a = latent_addend_density(parent, LatentSpec(n, k, 1, "addend"), x)
            red = max(red, float(np.max(np.abs(a - order_statistic_density(parent, n, k, x)))))
    _check(out, "m=1 reduction", red < 1e-10, f"max diff {red:.2e}")

    crit = ks_critical(trials)
    for i, (parent, role) in enumerate(CASES):
        s = sample_latent(McConfig(LatentSpec(2, 2, 2, role), parent, trials, seed + i),
                          workers=workers)
        rep = goodness_of_fit(s, closed_form_density(parent, role), support=parent.support)
        _check(out, f"MC {role} {parent!r}", rep.ks_distance < crit,
               f"KS {rep.ks_distance:.4f} < {crit:.4f}")

    s = sample_latent(McConfig(LatentSpec(2, 2, 2, "factor"), RayleighPaper(1.0), trials, seed + 7),
                      workers=workers)
    table = goodness_of_fit(s, lambda x: rayleigh_factor(1.0, x, "table"), support=(0, math.inf))
    _check(out, "Rayleigh factor arbitration", table.ks_distance > crit,
           f"table-form KS {table.ks_distance:.3f} rejects it")

    e = [expected_max_importance_size(n) for n in (1, 2, 1000)]
    bounds_ok = all(lo <= expected_max_importance_size(n) <= hi
                    for n in (2, 10, 100, 1000)
                    for lo, hi in [max_importance_bounds(n)])
    _check(out, "E_max values and bounds",
           abs(e[0] - 2) < 1e-12 and abs(e[1] - 2.5) < 1e-12 and abs(e[2] - 8.48547) < 1e-5
           and bounds_ok, f"E_max(1000) = {e[2]:.6f}")

    rel = max(abs(tail_sum_direct(q, 100) - tail_sum_pochhammer(q, 100))
              / tail_sum_pochhammer(q, 100) for q in range(2, 100))
    _check(out, "Pochhammer identity", rel < 1e-8, f"max rel diff {rel:.2e}")

    qs = [1, 10, 32, 50, 90, 100]
    mc, _ = mc_cache_ratio(CatalogModel(100), qs, max(100, min(trials, 2000)), seed,
                           workers=workers)
    dev = max(abs(m - cache_ratio(q, 100)) for q, m in zip(qs, mc))
    _check(out, "cache ratio vs simulation", dev < 0.02 and cache_ratio(32, 100) > 0.5,
           f"R(32) = {cache_ratio(32, 100):.4f}, max dev {dev:.4f}")

    cfg = McConfig(LatentSpec(3, 2, 2, "factor"), Normal(0.0, 1.0), 3 * 10 ** 5, seed)
    same = sample_latent(cfg, 1).tobytes() == sample_latent(cfg, 8).tobytes()
    _check(out, "worker-count determinism", same, "1 vs 8 workers")
    return out
