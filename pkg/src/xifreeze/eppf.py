"""Exchangeable partition probability functions solving Moehle's recursion.

Tables are keyed on integer partitions (shapes); any composition is looked up
through its sorted form, which is all an EPPF's symmetry requires.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import factorial, prod
from typing import Callable, Iterable, Mapping, Sequence

from .combinatorics import (
    CollisionType,
    as_partition,
    collision_count,
    enumerate_assignments,
    enumerate_collision_types,
    integer_partitions,
    merge_count,
    shape_multiplicity,
)
from .measures import FREEZE, QArray, QRow

Lookup = Callable[[Sequence[int]], Fraction]


class DegenerateArrayError(ValueError):
    """The decrement array never freezes, so the final partition law is trivial."""


@dataclass(frozen=True)
class EppfTable:
    """Exact EPPF values on every integer partition of ``m = 1..n``."""

    n: int
    values: Mapping[tuple[int, ...], Fraction]

    def __call__(self, comp: Sequence[int]) -> Fraction:
        if len(comp) == 0:
            return Fraction(1)
        key = as_partition(comp)
        if sum(key) > self.n:
            raise KeyError(f"{key} is beyond the table size n={self.n}")
        return self.values[key]

    __getitem__ = __call__

    def level(self, m: int) -> dict[tuple[int, ...], Fraction]:
        return {lam: self.values[lam] for lam in integer_partitions(m)}

    def normalization(self, m: int) -> Fraction:
        return sum((shape_multiplicity(lam) * v for lam, v in self.level(m).items()), Fraction(0))

    def replace(self, lam: Sequence[int], value) -> "EppfTable":
        values = dict(self.values)
        values[as_partition(lam)] = Fraction(value)
        return EppfTable(self.n, values)


def moehle_coefficients(p: Lookup, comp: Sequence[int], keys: Iterable) -> dict:
    """Right-hand side of Moehle's recursion at ``comp``, per decrement entry.

    Returns ``{key: c}`` so that the recursion reads ``p(comp) = sum q(n:key) c``;
    ``key`` is ``FREEZE`` or a :class:`CollisionType` of ``n = sum(comp)`` blocks.
    """
    comp = tuple(comp)
    n = sum(comp)
    out = {}
    for key in keys:
        if key == FREEZE:
            singles = comp.count(1)
            if singles:
                i = comp.index(1)
                out[key] = Fraction(singles, n) * p(comp[:i] + comp[i + 1:])
            else:
                out[key] = Fraction(0)
            continue
        d = collision_count(key)
        acc = Fraction(0)
        for eta in enumerate_assignments(key.ks, comp):
            ways = prod(merge_count(ni, e) for ni, e in zip(comp, eta))
            reduced = tuple(ni - sum(e) + len(e) for ni, e in zip(comp, eta))
            acc += Fraction(ways, d) * p(reduced)
        out[key] = acc
    return out


def moehle_rhs(p: Lookup, row: QRow) -> dict[tuple[int, ...], Fraction]:
    """Apply the recursion's right-hand side with ``row`` to every shape of ``row.b``."""
    support = row.support()
    out = {}
    for lam in integer_partitions(row.b):
        coef = moehle_coefficients(p, lam, [k for k, _ in support])
        out[lam] = sum((v * coef[k] for k, v in support), Fraction(0))
    return out


def solve_moehle(q: QArray, require_consistent: bool = True) -> EppfTable:
    """EPPF of the final partitions of the freeze-and-merge chains driven by ``q``.

    Level ``m`` uses row ``q(m:.)``; every term on the right has a smaller total,
    so one pass over ``m = 1..n`` fills the table. Inconsistent arrays are
    refused unless ``require_consistent`` is False, in which case the levels
    are the separate chains' laws and need not satisfy the addition rule.
    """
    n = q.n
    if n >= 2 and q.row(2).q1 == 0:
        raise DegenerateArrayError("q(2:1) = 0: the chain never freezes two blocks apart")
    if require_consistent and not q.is_consistent():
        raise ValueError("decrement array is not consistent; pass require_consistent=False to solve anyway")
    values: dict[tuple[int, ...], Fraction] = {}

    def lookup(comp):
        return Fraction(1) if not comp else values[as_partition(comp)]

    for m in range(1, n + 1):
        values.update(moehle_rhs(lookup, q.row(m)))
    return EppfTable(n, values)


def addition_residuals(p: EppfTable) -> dict[tuple[int, ...], Fraction]:
    """``p(c) - p(c, 1) - sum_i p(c + e_i)`` for every shape ``c`` of ``m < n``."""
    out = {}
    for m in range(1, p.n):
        for lam in integer_partitions(m):
            res = p(lam) - p(lam + (1,))
            for i in range(len(lam)):
                res -= p(lam[:i] + (lam[i] + 1,) + lam[i + 1:])
            out[lam] = res
    return out


def check_addition_rule(p: EppfTable) -> Fraction:
    """Largest absolute addition-rule residual (symmetry makes shapes suffice)."""
    return max((abs(r) for r in addition_residuals(p).values()), default=Fraction(0))


def ewens_eppf(theta, lam: Sequence[int]) -> Fraction:
    theta = Fraction(theta)
    if theta <= 0:
        raise ValueError("theta must be positive")
    lam = as_partition(lam)
    num = theta ** len(lam) * prod(factorial(x - 1) for x in lam)
    return num / prod(theta + j for j in range(sum(lam)))


def ewens_table(theta, n: int) -> EppfTable:
    values = {lam: ewens_eppf(theta, lam) for m in range(1, n + 1) for lam in integer_partitions(m)}
    return EppfTable(n, values)


def shape_probability(p: EppfTable, lam: Sequence[int]) -> Fraction:
    """Probability that the random partition has block sizes ``lam``."""
    return shape_multiplicity(lam) * p(lam)


def shape_law(p: EppfTable, m: int | None = None) -> dict[tuple[int, ...], Fraction]:
    m = p.n if m is None else m
    return {lam: shape_probability(p, lam) for lam in integer_partitions(m)}


def _inversion_order(n: int) -> list[CollisionType]:
    # Solving type T reads p(T.ks, 1^s); every other type that can feed it has
    # a smaller merged total, or the same total split into more groups.
    return sorted(enumerate_collision_types(n), key=lambda ct: (sum(ct.ks), -ct.r, ct.ks))


def invert_p_to_q(p: EppfTable, n: int) -> QRow:
    """Recover ``q(n:.)`` from an EPPF that solves the recursion at level ``n``."""
    if not 1 <= n <= p.n:
        raise ValueError(f"level {n} outside the table (n={p.n})")
    if n == 1:
        return QRow(1, Fraction(1))
    if p((1, 1)) == 0:
        raise DegenerateArrayError("p(1,1) = 0: the decrement row is not identifiable")
    ones = p((1,) * n)
    if ones == 0:
        raise ValueError(f"p(1^{n}) = 0; cannot recover q({n}:1)")
    solved: dict = {FREEZE: ones / p((1,) * (n - 1))}
    order = _inversion_order(n)
    for ct in order:
        comp = ct.ks + (1,) * ct.s
        coef = moehle_coefficients(p, comp, [FREEZE] + order)
        known = Fraction(0)
        for key, c in coef.items():
            if key == ct or c == 0:
                continue
            if key not in solved:
                raise AssertionError(f"type {key} feeds {comp} before it is solved")
            known += solved[key] * c
        value = (p(comp) - known) / coef[ct]
        if value < 0:
            raise ValueError(f"recovered q({n}:{ct}) = {value} < 0; table is not a Moehle EPPF")
        solved[ct] = value
    q1 = solved.pop(FREEZE)
    try:
        return QRow(n, q1, solved)
    except ValueError as exc:
        raise ValueError(f"recovered row does not normalise: {exc}") from None
