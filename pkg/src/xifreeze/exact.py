"""Sparse Gauss-Jordan elimination over the rationals."""
from __future__ import annotations

from fractions import Fraction
from typing import Mapping, Sequence


class SingularSystemError(ValueError):
    """The system has more than one solution."""


class InconsistentSystemError(ValueError):
    """The system has no solution."""


def solve(equations: Sequence[Mapping[int, Fraction]], rhs: Sequence, n_unknowns: int) -> list[Fraction]:
    """Unique solution of ``sum_j A[i][j] x_j = rhs[i]``; rows are sparse ``{j: a_ij}``.

    Over-determined systems are fine as long as they are consistent. Raises
    :class:`SingularSystemError` when the rank is below ``n_unknowns``.
    """
    rows = []
    for eq, b in zip(equations, rhs):
        row = {j: Fraction(v) for j, v in eq.items() if v != 0}
        rows.append((row, Fraction(b)))
    pivots: dict[int, tuple[dict, Fraction]] = {}
    for row, b in rows:
        # pivot rows are fully reduced, so one pass leaves only free columns
        row = dict(row)
        for j in [j for j in row if j in pivots]:
            c = row.pop(j)
            prow, pb = pivots[j]
            for k, v in prow.items():
                if k == j:
                    continue
                nv = row.get(k, 0) - c * v
                if nv:
                    row[k] = nv
                else:
                    row.pop(k, None)
            b -= c * pb
        if not row:
            if b != 0:
                raise InconsistentSystemError("equations contradict each other")
            continue
        j = min(row)
        c = row[j]
        row = {k: v / c for k, v in row.items()}
        b /= c
        # eliminate the new pivot from existing pivot rows
        for k, (prow, pb) in list(pivots.items()):
            f = prow.get(j)
            if f is None:
                continue
            for kk, v in row.items():
                nv = prow.get(kk, 0) - f * v
                if nv:
                    prow[kk] = nv
                else:
                    prow.pop(kk, None)
            pivots[k] = (prow, pb - f * b)
        pivots[j] = (row, b)
    if len(pivots) < n_unknowns:
        raise SingularSystemError(f"rank {len(pivots)} < {n_unknowns} unknowns")
    return [pivots[j][1] for j in range(n_unknowns)]


def rank(equations: Sequence[Mapping[int, Fraction]]) -> int:
    """Rank of the sparse coefficient rows."""
    pivots: dict[int, dict] = {}
    for eq in equations:
        row = {j: Fraction(v) for j, v in eq.items() if v != 0}
        while row:
            j = min(row)
            if j not in pivots:
                c = row[j]
                pivots[j] = {k: v / c for k, v in row.items()}
                break
            c = row[j]
            for k, v in pivots[j].items():
                nv = row.get(k, 0) - c * v
                if nv:
                    row[k] = nv
                else:
                    row.pop(k, None)
    return len(pivots)
