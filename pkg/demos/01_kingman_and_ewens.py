"""
Kingman's coalescent with freeze
================================

With only binary merges at rate ``a`` and each block freezing at rate ``rho``,
the final partition follows the Ewens sampling formula with ``theta = 2 rho / a``.
This script solves the recursion and prints both tables side by side.
"""
from fractions import Fraction

from xifreeze import ewens_eppf, integer_partitions, kingman, q_array, shape_multiplicity, solve_moehle

rho = Fraction(1, 2)
xi = kingman(a=1, rho=rho)
p = solve_moehle(q_array(xi, 6))

###############################################################################
# Every value is an exact rational, so "agree" means equal, not close.

print(f"{'shape':<16}{'p (recursion)':>16}{'p (Ewens)':>16}")
for lam in integer_partitions(6):
    print(f"{str(lam):<16}{str(p(lam)):>16}{str(ewens_eppf(2 * rho, lam)):>16}")

###############################################################################
# The probability of a shape multiplies the EPPF by the number of set
# partitions with that shape. Summing over shapes gives one at each level.

for m in range(1, 7):
    total = sum(shape_multiplicity(lam) * p(lam) for lam in integer_partitions(m))
    print(m, total)
