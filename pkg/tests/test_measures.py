import itertools
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from xifreeze.combinatorics import CollisionType, collision_count, enumerate_collision_types
from xifreeze.measures import (
    FREEZE,
    BetaLambda,
    QArray,
    QRow,
    SimplexPoint,
    XiModel,
    atom_integrand,
    backward_q,
    check_rate_consistency,
    collision_rate,
    embed_lambda,
    kingman,
    q_array,
    q_row,
    rate_table,
    rates_proportional,
    recover_rates,
    total_rates,
)


def paintbox_rate(x, ct):
    """Brute force over every way to throw ``b`` balls into the boxes of ``x`` plus dust.

    Balls ``0..k1-1`` form the first group, the next ``k2`` the second, and so
    on; the rest must stay single. Dust balls are always single.
    """
    coords = list(x.coords)
    dust = 1 - sum(coords)
    boxes = list(range(len(coords))) + [None]
    groups, pos = [], 0
    for k in ct.ks:
        groups.append(range(pos, pos + k))
        pos += k
    singles = range(pos, ct.b)
    total = F(0)
    for f in itertools.product(boxes, repeat=ct.b):
        group_boxes = []
        ok = True
        for g in groups:
            seen = {f[i] for i in g}
            if len(seen) != 1 or None in seen:
                ok = False
                break
            group_boxes.append(seen.pop())
        if not ok or len(set(group_boxes)) != len(group_boxes):
            continue
        used = set(group_boxes)
        single_boxes = [f[i] for i in singles if f[i] is not None]
        if used & set(single_boxes) or len(set(single_boxes)) != len(single_boxes):
            continue
        prob = F(1)
        for i in range(ct.b):
            prob *= dust if f[i] is None else coords[f[i]]
        total += prob
    return total / sum(c * c for c in coords)


POINTS = [
    (F(1, 2), F(1, 4)),
    (F(1, 3), F(1, 3), F(1, 3)),
    (F(1, 2),),
    (F(1),),
    (F(2, 5), F(1, 5), F(1, 10)),
]


@pytest.mark.parametrize("coords", POINTS)
@pytest.mark.parametrize("b", range(2, 6))
def test_atom_rate_matches_paintbox(coords, b):
    x = SimplexPoint(coords)
    for ct in enumerate_collision_types(b):
        assert atom_integrand(x, ct) == paintbox_rate(x, ct)


def test_atom_rate_examples():
    xi = XiModel(atoms=((1, SimplexPoint((F(1, 2), F(1, 4)))),), freeze_rate=F(1, 2))
    assert collision_rate(xi, CollisionType((2,), 1)) == F(11, 20)
    assert collision_rate(xi, CollisionType((2, 2), 0)) == F(1, 10)


def test_kingman_rates():
    xi = kingman(F(3, 2), F(1, 2))
    assert collision_rate(xi, CollisionType((2,), 0)) == F(3, 2)
    assert collision_rate(xi, CollisionType((2,), 3)) == F(3, 2)
    assert collision_rate(xi, CollisionType((3,), 0)) == 0
    assert collision_rate(xi, CollisionType((2, 2), 0)) == 0


@pytest.mark.parametrize("alpha,beta", [(1, 1), (2, 1), (1, 3), (2, 2)])
@pytest.mark.parametrize("b", range(2, 7))
def test_beta_rates_match_quadrature(alpha, beta, b):
    xi = XiModel(lambda_beta=BetaLambda(alpha, beta, F(1)))
    dist = stats.beta(alpha, beta)
    for k in range(2, b + 1):
        ct = CollisionType((k,), b - k)
        want, _ = integrate.quad(lambda x: x ** (k - 2) * (1 - x) ** (b - k) * dist.pdf(x), 0, 1)
        assert float(collision_rate(xi, ct)) == pytest.approx(want, rel=1e-9)
    if b >= 4:
        assert collision_rate(xi, CollisionType((2, 2), b - 4)) == 0


def test_bolthausen_sznitman_rate():
    # uniform Lambda: lambda_{b,k} = (k-2)! (b-k)! / (b-1)!
    xi = XiModel(lambda_beta=BetaLambda(1, 1, F(1)), freeze_rate=1)
    assert collision_rate(xi, CollisionType((3,), 1)) == F(1, 6)
    assert collision_rate(xi, CollisionType((4,), 0)) == F(2, 6)


def test_embedded_lambda_is_one_coordinate():
    xi = embed_lambda([(1, F(1, 2))])
    for ct in enumerate_collision_types(5):
        if ct.r > 1:
            assert collision_rate(xi, ct) == 0
    # lambda_{b,k} = x^(k-2) (1-x)^(b-k)
    assert collision_rate(xi, CollisionType((3,), 2)) == F(1, 2) * F(1, 4)


def test_model_validation():
    with pytest.raises(ValueError):
        SimplexPoint((F(1, 4), F(1, 2)))
    with pytest.raises(ValueError):
        SimplexPoint((F(3, 4), F(1, 2)))
    with pytest.raises(TypeError):
        SimplexPoint((0.5,))
    with pytest.raises(ValueError):
        XiModel(freeze_rate=1)
    with pytest.raises(ValueError):
        XiModel(kingman_mass=1, freeze_rate=-1)
    with pytest.raises(ValueError):
        embed_lambda([(1, F(3, 2))])


def test_total_rates():
    tr = total_rates(kingman(1, F(1, 2)), 4)
    assert tr.freeze_total == 2
    assert tr.per_type[CollisionType((2,), 2)] == 6
    assert tr.total == 8


def test_q_row_examples():
    row = q_row(kingman(1, F(1, 2)), 2)
    assert row[FREEZE] == F(1, 2)
    assert row[CollisionType((2,), 0)] == F(1, 2)
    assert q_row(kingman(), 1).q1 == 1


def test_q_row_rejects_zero_total():
    # a single block with no freezing has nothing to do
    with pytest.raises(ValueError):
        q_row(kingman(1, 0), 1)


def test_qrow_validation():
    with pytest.raises(ValueError):
        QRow(2, F(1, 2))
    with pytest.raises(ValueError):
        QRow(2, F(3, 2), {CollisionType((2,), 0): F(-1, 2)})


def test_rate_consistency_models(model):
    report = check_rate_consistency(model, 8)
    assert report.ok and report.max_residual == 0
    assert report.checked == sum(len(enumerate_collision_types(b)) for b in range(2, 8))


def test_perturbed_row_is_inconsistent():
    xi = kingman(1, 1)
    rows = list(q_array(xi, 5).rows)
    rates = rate_table(xi, 4)
    rates[(4, CollisionType((2,), 2))] = F(2)
    phi = 4 * xi.freeze_rate + sum(collision_count(ct) * rates[(4, ct)] for ct in enumerate_collision_types(4))
    rows[3] = QRow(4, 4 * xi.freeze_rate / phi,
                   {ct: collision_count(ct) * rates[(4, ct)] / phi for ct in enumerate_collision_types(4)})
    assert not QArray(tuple(rows)).is_consistent()


def test_backward_round_trip(model):
    q = q_array(model, 8)
    assert backward_q(q.row(8)).rows == q.rows


def test_recover_rates(model):
    q = q_array(model, 8)
    rates, rho = recover_rates(q, 1)
    original = dict(rate_table(model, 8), rho=model.freeze_rate)
    recovered = dict(rates, rho=rho)
    factor = rates_proportional(original, recovered)
    assert factor is not None and factor > 0
    assert factor == 1 / model.freeze_rate


def test_recover_rates_without_freezing():
    xi = kingman(1, 0)
    q = QArray(tuple([QRow(1, F(1))] + [q_row(xi, b) for b in range(2, 6)]))
    rates, rho = recover_rates(q, 1)
    assert rho == 0
    factor = rates_proportional(dict(rate_table(xi, 5)), rates)
    assert factor == 1


def test_rates_proportional():
    assert rates_proportional({1: 2, 2: 0}, {1: 4, 2: 0}) == 2
    assert rates_proportional({1: 2, 2: 1}, {1: 4, 2: 1}) is None
    assert rates_proportional({1: 2}, {2: 2}) is None


rationals = st.fractions(min_value=F(1, 12), max_value=1, max_denominator=12)


@st.composite
def simplex_points(draw):
    m = draw(st.integers(1, 3))
    raw = sorted((draw(rationals) for _ in range(m)), reverse=True)
    total = sum(raw)
    scale = draw(st.fractions(min_value=F(1, 4), max_value=1, max_denominator=4))
    if total > 1:
        raw = [x / total for x in raw]
    return SimplexPoint(tuple(x * scale for x in raw))


@st.composite
def xi_models(draw):
    atoms = tuple((draw(rationals), draw(simplex_points())) for _ in range(draw(st.integers(0, 2))))
    a = draw(st.sampled_from([F(0), F(1, 2), F(1)]))
    if not atoms and a == 0:
        a = F(1)
    rho = draw(st.fractions(min_value=F(1, 10), max_value=3, max_denominator=10))
    return XiModel(kingman_mass=a, atoms=atoms, freeze_rate=rho)


@settings(max_examples=25, deadline=None)
@given(xi_models())
def test_rate_consistency_property(xi):
    assert check_rate_consistency(xi, 6).max_residual == 0


@settings(max_examples=25, deadline=None)
@given(xi_models())
def test_backward_round_trip_property(xi):
    q = q_array(xi, 6)
    assert backward_q(q.row(6)).rows == q.rows
    assert all(sum(v for _, v in row.items()) == 1 for row in q.rows)
