"""Who wins a row contest?

Draw two rows of two numbers and keep the row with the larger sum.  The
first entry of the winning row is no longer distributed like its parent:
being in the winning row pushes it upward.  This script shows the shift
for the four reference parents, first through the analytic densities, then
through the general quadrature engine, then through simulation.
"""

import numpy as np

from ordstat.closed_forms import closed_form_density
from ordstat.distributions import Exponential, Normal, RayleighPaper, Uniform
from ordstat.monte_carlo import McConfig, goodness_of_fit, ks_critical, sample_latent
from ordstat.order_engine import LatentSpec, central_grid, latent_density, latent_mean

PARENTS = [Uniform(0.0, 1.0), Normal(0.0, 1.0), Exponential(1.0), RayleighPaper(1.0)]
TRIALS = 200_000


def main():
    print(f"{'role':7s} {'parent':27s} {'parent mean':>11s} {'latent mean':>11s} "
          f"{'|engine-closed|':>15s} {'KS':>7s}")
    for role in ("addend", "factor"):
        spec = LatentSpec(2, 2, 2, role)
        for i, parent in enumerate(PARENTS):
            f = closed_form_density(parent, role)
            x = central_grid(f, *parent.effective_range(1e-12), 200)
            sup = np.max(np.abs(latent_density(parent, spec, x) - f(x)))
            s = sample_latent(McConfig(spec, parent, TRIALS, seed=i))
            ks = goodness_of_fit(s, f, support=parent.support).ks_distance
            print(f"{role:7s} {parent!r:27s} {parent.mean():11.4f} {latent_mean(parent, spec):11.4f} "
                  f"{sup:15.1e} {ks:7.4f}")
    print(f"\nKS 1% critical value at {TRIALS} draws: {ks_critical(TRIALS):.4f}")
    # the normal factor is special: selecting by product leaves the law unchanged
    x = np.linspace(-3, 3, 7)
    print("normal factor / parent pdf:", np.round(closed_form_density(Normal(0, 1), "factor")(x)
                                                  / Normal(0, 1).pdf(x), 12))


if __name__ == "__main__":
    main()
