"""Xi-measure models, collision rates and the decrement rows they induce.

Models are finite: a Kingman mass ``a`` at zero, finitely many atoms on the
infinite simplex, and optionally a Beta(alpha, beta) Lambda-measure with integer
parameters. Every rate is an exact :class:`~fractions.Fraction`.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb, factorial
from typing import Iterable, Mapping

from .combinatorics import CollisionType, collision_count, enumerate_collision_types

FREEZE = "freeze"


def _frac(x) -> Fraction:
    if isinstance(x, float):
        raise TypeError("floats are not accepted; pass a Fraction, int or 'p/q' string")
    return Fraction(x)


@dataclass(frozen=True)
class SimplexPoint:
    """Finitely many positive coordinates, non-increasing, summing to at most 1."""

    coords: tuple[Fraction, ...]

    def __post_init__(self):
        coords = [_frac(x) for x in self.coords]
        while coords and coords[-1] == 0:
            coords.pop()
        if not coords:
            raise ValueError("a simplex point needs at least one positive coordinate")
        if any(x < 0 for x in coords):
            raise ValueError(f"coordinates must be non-negative: {coords}")
        if any(x == 0 for x in coords):
            raise ValueError("zero coordinates may only trail")
        if any(a < b for a, b in zip(coords, coords[1:])):
            raise ValueError(f"coordinates must be non-increasing: {[str(x) for x in coords]}")
        if sum(coords) > 1:
            raise ValueError(f"coordinates sum to {sum(coords)} > 1")
        object.__setattr__(self, "coords", tuple(coords))

    def __iter__(self):
        return iter(self.coords)

    def __len__(self):
        return len(self.coords)


@dataclass(frozen=True)
class BetaLambda:
    """``mass * Beta(alpha, beta)`` as a Lambda-measure on [0, 1]."""

    alpha: int
    beta: int
    mass: Fraction

    def __post_init__(self):
        if not (isinstance(self.alpha, int) and isinstance(self.beta, int)):
            raise TypeError("alpha and beta must be integers")
        if self.alpha < 1 or self.beta < 1:
            raise ValueError("alpha and beta must be positive")
        object.__setattr__(self, "mass", _frac(self.mass))
        if self.mass <= 0:
            raise ValueError("beta mass must be positive")


@dataclass(frozen=True)
class XiModel:
    """``Xi = Xi_0 + a delta_0`` with finitely many atoms, plus freeze rate ``rho``."""

    kingman_mass: Fraction = Fraction(0)
    atoms: tuple[tuple[Fraction, SimplexPoint], ...] = ()
    freeze_rate: Fraction = Fraction(0)
    lambda_beta: BetaLambda | None = None

    def __post_init__(self):
        a = _frac(self.kingman_mass)
        rho = _frac(self.freeze_rate)
        if a < 0:
            raise ValueError("kingman_mass must be non-negative")
        if rho < 0:
            raise ValueError("freeze_rate must be non-negative")
        atoms = []
        for w, x in self.atoms:
            w = _frac(w)
            if w <= 0:
                raise ValueError("atom weights must be positive")
            if not isinstance(x, SimplexPoint):
                x = SimplexPoint(tuple(x))
            atoms.append((w, x))
        object.__setattr__(self, "kingman_mass", a)
        object.__setattr__(self, "freeze_rate", rho)
        object.__setattr__(self, "atoms", tuple(atoms))
        if self.total_mass() <= 0:
            raise ValueError("the Xi measure must have positive total mass")

    def total_mass(self) -> Fraction:
        total = self.kingman_mass + sum((w for w, _ in self.atoms), Fraction(0))
        if self.lambda_beta is not None:
            total += self.lambda_beta.mass
        return total

    @property
    def is_kingman(self) -> bool:
        return not self.atoms and self.lambda_beta is None


def kingman(a=1, rho=Fraction(1, 2)) -> XiModel:
    return XiModel(kingman_mass=a, freeze_rate=rho)


def embed_lambda(atoms: Iterable[tuple], freeze_rate=0, kingman_mass=0) -> XiModel:
    """Turn Lambda-atoms ``(weight, x)`` on (0, 1] into one-coordinate Xi-atoms."""
    out = []
    for w, x in atoms:
        x = _frac(x)
        if not 0 < x <= 1:
            raise ValueError(f"Lambda atom location {x} outside (0, 1]")
        out.append((_frac(w), SimplexPoint((x,))))
    return XiModel(kingman_mass=kingman_mass, atoms=tuple(out), freeze_rate=freeze_rate)


# --------------------------------------------------------------------------
# rates


def _beta_fn(a: int, b: int) -> Fraction:
    return Fraction(factorial(a - 1) * factorial(b - 1), factorial(a + b - 1))


def atom_integrand(x: SimplexPoint, ct: CollisionType) -> Fraction:
    """Rate contribution of a unit atom at ``x`` to one ``ct``-collision."""
    ks, r, s = ct.ks, ct.r, ct.s
    m = len(x.coords)
    rest = 1 - sum(x.coords)
    total = Fraction(0)
    for l in range(s + 1):
        if r + l > m:
            break
        if s - l > 0 and rest == 0:
            continue
        inner = Fraction(0)
        for idx in itertools.permutations(range(m), r + l):
            term = Fraction(1)
            for k, i in zip(ks, idx):
                term *= x.coords[i] ** k
            for i in idx[r:]:
                term *= x.coords[i]
            inner += term
        total += comb(s, l) * inner * rest ** (s - l)
    return total / sum(c * c for c in x.coords)


def collision_rate(xi: XiModel, ct: CollisionType) -> Fraction:
    """Rate of one particular collision of type ``ct`` among ``ct.b`` active blocks."""
    rate = sum((w * atom_integrand(x, ct) for w, x in xi.atoms), Fraction(0))
    if ct.r == 1 and ct.ks[0] == 2:
        rate += xi.kingman_mass
    lb = xi.lambda_beta
    if lb is not None and ct.r == 1:
        k, b = ct.ks[0], ct.b
        rate += lb.mass * _beta_fn(k - 2 + lb.alpha, b - k + lb.beta) / _beta_fn(lb.alpha, lb.beta)
    return rate


def rate_table(xi: XiModel, b_max: int) -> dict[tuple[int, CollisionType], Fraction]:
    """Rates for every collision type of ``b = 2..b_max`` blocks."""
    return {
        (b, ct): collision_rate(xi, ct)
        for b in range(2, b_max + 1)
        for ct in enumerate_collision_types(b)
    }


@dataclass(frozen=True)
class TotalRates:
    b: int
    freeze_total: Fraction
    per_type: Mapping[CollisionType, Fraction]

    @property
    def total(self) -> Fraction:
        return self.freeze_total + sum(self.per_type.values(), Fraction(0))


def total_rates(xi: XiModel, b: int) -> TotalRates:
    """Freeze total ``rho b`` and per-type totals ``d * lambda``."""
    if b < 1:
        raise ValueError("b must be >= 1")
    per_type = {ct: collision_count(ct) * collision_rate(xi, ct) for ct in enumerate_collision_types(b)}
    return TotalRates(b, xi.freeze_rate * b, per_type)


# --------------------------------------------------------------------------
# decrement rows


@dataclass(frozen=True)
class QRow:
    """Jump probabilities out of a state with ``b`` active blocks.

    ``qcoll`` covers every collision type of ``b`` (zeros supplemented).
    """

    b: int
    q1: Fraction
    qcoll: Mapping[CollisionType, Fraction] = field(default_factory=dict)

    def __post_init__(self):
        q1 = _frac(self.q1)
        full = {ct: Fraction(0) for ct in enumerate_collision_types(self.b)}
        for ct, v in self.qcoll.items():
            if ct not in full:
                raise ValueError(f"collision type {ct} does not act on {self.b} blocks")
            full[ct] = _frac(v)
        if q1 < 0 or any(v < 0 for v in full.values()):
            raise ValueError(f"negative entry in row b={self.b}")
        if q1 + sum(full.values(), Fraction(0)) != 1:
            raise ValueError(f"row b={self.b} sums to {q1 + sum(full.values())}, not 1")
        object.__setattr__(self, "q1", q1)
        object.__setattr__(self, "qcoll", full)

    def __getitem__(self, key) -> Fraction:
        if key == FREEZE:
            return self.q1
        return self.qcoll.get(key, Fraction(0))

    def items(self):
        """``(FREEZE, q1)`` then ``(type, prob)`` in canonical type order."""
        yield FREEZE, self.q1
        yield from self.qcoll.items()

    def support(self):
        return [(k, v) for k, v in self.items() if v != 0]


@dataclass(frozen=True)
class QArray:
    """Rows ``q(1:.), ..., q(n:.)``."""

    rows: tuple[QRow, ...]

    def __post_init__(self):
        rows = tuple(self.rows)
        for i, row in enumerate(rows, start=1):
            if row.b != i:
                raise ValueError(f"row {i} has block count {row.b}")
        if not rows:
            raise ValueError("empty QArray")
        if rows[0].q1 != 1:
            raise ValueError("q(1:1) must be 1")
        object.__setattr__(self, "rows", rows)

    @property
    def n(self) -> int:
        return len(self.rows)

    def row(self, b: int) -> QRow:
        return self.rows[b - 1]

    def truncate(self, m: int) -> "QArray":
        return QArray(self.rows[:m])

    def is_consistent(self) -> bool:
        if self.n == 1:
            return True
        try:
            return backward_q(self.rows[-1]).rows == self.rows
        except ValueError:
            return False


def q_row(xi: XiModel, b: int) -> QRow:
    rates = total_rates(xi, b)
    phi = rates.total
    if phi == 0:
        raise ValueError(f"degenerate model: no event can happen with {b} active blocks")
    return QRow(b, rates.freeze_total / phi, {ct: v / phi for ct, v in rates.per_type.items()})


def q_array(xi: XiModel, n: int) -> QArray:
    return QArray(tuple(q_row(xi, b) for b in range(1, n + 1)))


@dataclass(frozen=True)
class ConsistencyReport:
    max_residual: Fraction
    worst: tuple[int, CollisionType] | None
    checked: int

    @property
    def ok(self) -> bool:
        return self.max_residual == 0


def _bump(ks: tuple[int, ...], i: int) -> tuple[int, ...]:
    return ks[:i] + (ks[i] + 1,) + ks[i + 1:]


def check_rate_consistency(xi: XiModel, b_max: int) -> ConsistencyReport:
    """Residuals of the sampling-consistency relation between block counts ``b`` and ``b + 1``."""
    if b_max < 2:
        raise ValueError("b_max must be >= 2")
    cache: dict[CollisionType, Fraction] = {}

    def lam(ct):
        if ct not in cache:
            cache[ct] = collision_rate(xi, ct)
        return cache[ct]

    worst, worst_at, checked = Fraction(0), None, 0
    for b in range(2, b_max):
        for ct in enumerate_collision_types(b):
            rhs = sum((lam(CollisionType(_bump(ct.ks, i), ct.s)) for i in range(ct.r)), Fraction(0))
            if ct.s > 0:
                rhs += ct.s * lam(CollisionType(ct.ks + (2,), ct.s - 1))
            rhs += lam(CollisionType(ct.ks, ct.s + 1))
            res = abs(lam(ct) - rhs)
            checked += 1
            if worst_at is None or res > worst:
                worst, worst_at = res, (b, ct)
    return ConsistencyReport(worst, worst_at, checked)


def _invisible_complement(row: QRow) -> Fraction:
    """``1 - q(b:1)/b - 2 q(b:{2};b-2)/b`` for the row of ``b`` blocks."""
    b = row.b
    return 1 - row.q1 / b - 2 * row[CollisionType((2,), b - 2)] / b


def backward_q(top: QRow) -> QArray:
    """Derive the unique consistent array ``q(1:.) .. q(n:.)`` ending in ``top``."""
    rows = {top.b: top}
    for b in range(top.b - 1, 1, -1):
        up = rows[b + 1]
        div = _invisible_complement(up)
        if div <= 0:
            raise ValueError(f"row b={b + 1} leaves no visible event for {b} blocks")
        q1 = Fraction(b, b + 1) * up.q1 / div
        coll = {}
        for ct in enumerate_collision_types(b):
            ks, s = ct.ks, ct.s
            # one term per distinct size j: (j+1)(l_{j+1}+1)/(b+1) * q(b+1: a j grown to j+1; s)
            mult = ct.multiplicities()
            acc = Fraction(0)
            for j in mult:
                i = ks.index(j)
                bumped = CollisionType(_bump(ks, i), s)
                acc += Fraction((j + 1) * (mult.get(j + 1, 0) + 1), b + 1) * up[bumped]
            if s > 0:
                acc += Fraction(2 * (mult.get(2, 0) + 1), b + 1) * up[CollisionType(ks + (2,), s - 1)]
            acc += Fraction(s + 1, b + 1) * up[CollisionType(ks, s + 1)]
            coll[ct] = acc / div
        rows[b] = QRow(b, q1, coll)
    rows[1] = QRow(1, Fraction(1))
    return QArray(tuple(rows[b] for b in range(1, top.b + 1)))


def recover_rates(q: QArray, phi1=1) -> tuple[dict[tuple[int, CollisionType], Fraction], Fraction]:
    """Rates and freeze rate ``rho`` generating a consistent array, up to scale.

    ``phi1`` fixes the total rate ``Phi(1) = rho``. When ``q(2:1) = 0`` there is no
    freezing, ``rho = 0``, and ``phi1`` fixes ``Phi(2)`` instead.
    """
    phi1 = _frac(phi1)
    if phi1 <= 0:
        raise ValueError("phi1 must be positive")
    n = q.n
    no_freeze = n >= 2 and q.row(2).q1 == 0
    phi = {1: phi1} if not no_freeze else {2: phi1}
    for b in range(1 if not no_freeze else 2, n):
        ratio = _invisible_complement(q.row(b + 1))
        if ratio <= 0:
            raise ValueError(f"non-positive total-rate ratio between b={b} and b={b + 1}")
        phi[b + 1] = phi[b] / ratio
    rates = {}
    for b in range(2, n + 1):
        row = q.row(b)
        for ct, v in row.qcoll.items():
            rates[(b, ct)] = v * phi[b] / collision_count(ct)
    rhos = {q.row(b).q1 * phi[b] / b for b in phi}
    if len(rhos) != 1:
        raise ValueError("freeze rate is not constant across block counts; array is inconsistent")
    return rates, rhos.pop()


def rates_proportional(a: Mapping, b: Mapping) -> Fraction | None:
    """The common ratio ``b[k] / a[k]`` if one exists (zeros must match), else None."""
    if a.keys() != b.keys():
        return None
    ratio = None
    for k in a:
        x, y = Fraction(a[k]), Fraction(b[k])
        if x == 0 or y == 0:
            if x != y:
                return None
            continue
        if ratio is None:
            ratio = y / x
        elif y / x != ratio:
            return None
    return ratio

