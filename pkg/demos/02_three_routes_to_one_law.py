"""
One law, three computations
===========================

For a Xi-coalescent with an atom at (1/2, 1/4) the final partition law can be
computed

* by the recursion over block sizes,
* by absorbing the freeze-and-merge jump chain (a linear solve over every
  partially frozen partition),
* as the stationary law of the sample-and-add chain.

All three agree exactly.
"""
from fractions import Fraction

from xifreeze import SimplexPoint, XiModel, q_array, solve_moehle
from xifreeze.chains import fm_absorption_law, law_by_shape, sa_transition_matrix, stationary_distribution
from xifreeze.eppf import shape_law

xi = XiModel(atoms=((Fraction(1), SimplexPoint((Fraction(1, 2), Fraction(1, 4)))),), freeze_rate=Fraction(1, 2))
n = 4
q = q_array(xi, n)
for row in q.rows:
    print(row.b, {str(k): str(v) for k, v in row.items()})

###############################################################################
# Recursion

p = solve_moehle(q)
by_recursion = shape_law(p)

###############################################################################
# Absorption of the jump chain, summed by shape

absorbed = fm_absorption_law(q)
by_absorption = {}
for part, prob in absorbed.items():
    by_absorption[part.shape()] = by_absorption.get(part.shape(), 0) + prob

###############################################################################
# Stationary law of the sample-and-add chain on the 15 partitions of {1..4}

m = sa_transition_matrix(n, q.row(n))
by_stationarity = law_by_shape(m.states, stationary_distribution(m))

for lam in by_recursion:
    print(lam, by_recursion[lam], by_absorption[lam], by_stationarity[lam])
assert by_recursion == by_absorption == by_stationarity
