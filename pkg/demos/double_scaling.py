"""Rank a growing number of rows at a fixed quantile.

With ``k = n/4`` the selected row sum settles at the lower quartile of the
two-term sum, and the selected addend approaches a fixed limit law.  For a
standard normal parent that limit is N(beta/2, 1/2).  The L1 gap between
the exact density and the limit shrinks roughly like 1/n.
"""

from ordstat.asymptotics import asymptotic_vs_exact_report, beta_of_eta
from ordstat.distributions import Normal

parent = Normal(0.0, 1.0)
print(f"beta = {beta_of_eta(parent, 2, 'addend', 0.25):.6f} (sum), "
      f"{beta_of_eta(parent, 2, 'factor', 0.25):.6f} (product)")
print(f"{'n':>4s} {'addend L1':>10s} {'factor L1':>10s}")
for n in (20, 40, 80, 160):
    l1 = [asymptotic_vs_exact_report(parent, n, n // 4, 2, role, points=2001).l1
          for role in ("addend", "factor")]
    print(f"{n:4d} {l1[0]:10.4f} {l1[1]:10.4f}")
