"""Exact and simulated laws of partitions from Xi-coalescents with freeze."""
from .combinatorics import (
    CollisionType,
    FrozenPartition,
    SetPartition,
    enumerate_collision_types,
    enumerate_set_partitions,
    integer_partitions,
    shape_multiplicity,
)
from .measures import (
    FREEZE,
    BetaLambda,
    QArray,
    QRow,
    SimplexPoint,
    XiModel,
    backward_q,
    check_rate_consistency,
    collision_rate,
    embed_lambda,
    kingman,
    q_array,
    q_row,
    rate_table,
    recover_rates,
)
from .eppf import EppfTable, check_addition_rule, ewens_eppf, invert_p_to_q, shape_law, solve_moehle
from .chains import (
    fm_absorption_law,
    make_rng,
    run_fm,
    sa_transition_matrix,
    simulate_continuous,
    stationary_distribution,
)

__version__ = "0.1.0"
