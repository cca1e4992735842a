"""
Monte Carlo against the exact law
=================================

Sample the final partition at n = 6 two ways (the discrete jump chain, and the
continuous-time process with exponential holding times), then compare both with
the exact shape law by chi-square tests. Runs in well under a minute.
"""
from fractions import Fraction

from xifreeze import kingman, q_array, solve_moehle
from xifreeze.chains import (
    chi_square_gof,
    empirical_eppf,
    replicate,
    run_fm_many,
    simulate_continuous_many,
    two_sample_chi_square,
)
from xifreeze.eppf import shape_law

n, samples, seed = 6, 50_000, 12345
xi = kingman(a=1, rho=Fraction(1, 2))
q = q_array(xi, n)
p = solve_moehle(q)
exact = shape_law(p)

jump = empirical_eppf(replicate(lambda k, rng: run_fm_many(n, q, k, rng), samples, seed))
cont = empirical_eppf(replicate(lambda k, rng: simulate_continuous_many(xi, n, k, rng), samples, seed, stream=1))

###############################################################################
# Estimated EPPF values with standard errors

print(f"{'shape':<20}{'exact':>10}{'jump chain':>24}{'continuous':>24}")
for lam in jump.shapes():
    print(f"{str(lam):<20}{float(p(lam)):>10.5f}"
          f"{jump.estimate(lam):>13.5f} +- {jump.stderr(lam):<7.1e}"
          f"{cont.estimate(lam):>13.5f} +- {cont.stderr(lam):<7.1e}")

###############################################################################
# Tests at the 0.001 level

print("jump chain vs exact:", chi_square_gof(jump.counts, exact))
print("continuous vs exact:", chi_square_gof(cont.counts, exact))
print("continuous vs jump :", two_sample_chi_square(cont.counts, jump.counts))
