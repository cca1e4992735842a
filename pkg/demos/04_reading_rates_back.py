"""
From a partition law back to the rates
======================================

Given only the EPPF table, the decrement rows can be recovered level by level,
and from the rows the collision rates and freeze rate, up to one common factor
(time can always be rescaled).
"""
from fractions import Fraction

from xifreeze import BetaLambda, XiModel, invert_p_to_q, q_array, rate_table, recover_rates, solve_moehle

# Beta(1, 1) Lambda-measure: the Bolthausen-Sznitman coalescent
xi = XiModel(lambda_beta=BetaLambda(1, 1, Fraction(1)), freeze_rate=Fraction(1))
n = 6
q = q_array(xi, n)
p = solve_moehle(q)

recovered = [invert_p_to_q(p, b) for b in range(1, n + 1)]
print("rows recovered exactly:", all(r == q.row(r.b) for r in recovered))

rates, rho = recover_rates(q, phi1=Fraction(3))
original = rate_table(xi, n)
ratios = {rates[k] / v for k, v in original.items() if v}
print("freeze rate", rho, "against", xi.freeze_rate)
print("collision-rate ratios:", ratios)

###############################################################################
# A few rates at b = 5, original and recovered

for (b, ct), v in original.items():
    if b == 5:
        print(ct, v, rates[(b, ct)])
