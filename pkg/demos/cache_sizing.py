"""How big a cache holds the most valuable files?

A catalogue of 100 files has Gamma(2, 1) sizes and uniform popularities.
Files are ranked by size x popularity and the cache keeps the top ``q``.
Important files tend to be large, so the top third of the ranking already
takes about half of the catalogue's bytes.  The analytic curve uses the
large-n rank formula, so it runs a few thousandths above simulation.
"""

import numpy as np

from ordstat.cache_sizing import (CatalogModel, cache_ratio, cumulative_expected_size,
                                  expected_max_importance_size, max_importance_bounds,
                                  mc_cache_ratio)

n = 100
qs = [1, 5, 10, 20, 32, 50, 75, 90, 100]
mc, se = mc_cache_ratio(CatalogModel(n), qs, 10_000, seed=0)
print(f"{'q':>4s} {'S(q)':>9s} {'R(q)':>7s} {'simulated':>10s}")
for q, r, e in zip(qs, mc, se):
    print(f"{q:4d} {cumulative_expected_size(q, n):9.3f} {cache_ratio(q, n):7.4f} {r:7.4f}+-{e:.4f}")

print("\nexpected size of the single most important file")
for m in (1, 2, 10, 100, 1000, 10 ** 6):
    lo, hi = max_importance_bounds(m) if m > 1 else (np.nan, np.nan)
    print(f"n={m:>8d}  {expected_max_importance_size(m):.6f}  bounds [{lo:.6f}, {hi:.6f}]")
