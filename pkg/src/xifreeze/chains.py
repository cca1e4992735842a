"""Freeze-and-merge and sample-and-add chains, exact and simulated.

Random streams come from :func:`make_rng`; replica ``i`` of a run seeded with
``seed`` always gets the same stream, whatever the thread count.
"""
from __future__ import annotations

import bisect
import itertools
import math
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy import stats

from . import exact
from .combinatorics import (
    FrozenPartition,
    SetPartition,
    apply_collision,
    enumeration_cap,
    enumerate_collisions,
    enumerate_frozen_partitions,
    enumerate_set_partitions,
    integer_partitions,
    shape_multiplicity,
)
from .measures import FREEZE, QArray, QRow, XiModel, q_row, total_rates

SA_EXACT_CAP = 6
FM_ORACLE_CAP = 4

# The states of the freeze-and-merge chain are partially frozen partitions.
FmState = FrozenPartition


class StepBudgetExceeded(RuntimeError):
    pass


def make_rng(seed: int, *replica: int) -> np.random.Generator:
    """Generator for ``seed``; each distinct ``replica`` key gets an independent child stream."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(replica)))


class _RowSampler:
    """Draws keys of a :class:`QRow` from floating-point cumulative weights."""

    def __init__(self, row: QRow):
        support = row.support()
        self.b = row.b
        self.keys = [k for k, _ in support]
        self.cdf = list(itertools.accumulate(float(v) for _, v in support))
        self.cdf[-1] = 1.0

    def draw(self, rng: np.random.Generator):
        i = bisect.bisect_right(self.cdf, rng.random())
        return self.keys[min(i, len(self.keys) - 1)]


def group_by_order(items: Sequence, order: Sequence[int], ks: Sequence[int]) -> list[tuple]:
    """Cut ``items`` permuted by ``order`` into consecutive groups of sizes ``ks``.

    Under a uniform random ``order`` every collision of the matching type is
    equally likely: each one arises from the same number of orders.
    """
    groups, pos = [], 0
    for k in ks:
        groups.append(tuple(items[j] for j in order[pos:pos + k]))
        pos += k
    return groups


def _fm_event(active: list, frozen: list, sampler: _RowSampler, rng) -> None:
    key = sampler.draw(rng)
    if key == FREEZE:
        frozen.append(active.pop(int(rng.integers(len(active)))))
        return
    order = rng.permutation(len(active))
    groups = group_by_order(active, order, key.ks)
    used = sum(key.ks)
    rest = [active[j] for j in order[used:]]
    active[:] = rest + [tuple(sorted(x for blk in g for x in blk)) for g in groups]


def fm_step(state: FmState, row: QRow, rng: np.random.Generator) -> FmState:
    """One freeze-and-merge move from ``state`` using ``row = q(b:.)``."""
    b = state.active_count
    if b == 0:
        raise ValueError("terminal state: every block is frozen")
    if row.b != b:
        raise ValueError(f"row is for {row.b} active blocks, state has {b}")
    key = _RowSampler(row).draw(rng)
    active = list(state.active_blocks)
    if key == FREEZE:
        i = int(rng.integers(b))
        pairs = [(blk, f or blk == active[i]) for blk, f in state.blocks]
        return FrozenPartition(state.n, tuple(pairs))
    order = rng.permutation(b)
    return apply_collision(state, group_by_order(active, order, key.ks))


class _Samplers(dict):
    def __init__(self, rows: Callable[[int], QRow]):
        super().__init__()
        self._rows = rows

    def __missing__(self, b):
        s = self[b] = _RowSampler(self._rows(b))
        return s


def _fm_final(n: int, samplers: _Samplers, rng, budget: int) -> SetPartition:
    active = [(i,) for i in range(1, n + 1)]
    frozen: list = []
    steps = 0
    while active:
        if steps >= budget:
            raise StepBudgetExceeded(f"no absorption after {budget} steps")
        _fm_event(active, frozen, samplers[len(active)], rng)
        steps += 1
    return SetPartition(n, tuple(frozen))


def run_fm(n: int, q: QArray, rng: np.random.Generator, budget: int | None = None) -> SetPartition:
    """Final partition of the FM chain started from ``n`` active singletons."""
    if n > q.n:
        raise ValueError(f"array has rows up to {q.n}, need {n}")
    if budget is None:
        budget = 2 * n - 1
    return _fm_final(n, _Samplers(q.row), rng, budget)


def run_fm_many(n: int, q: QArray, count: int, rng: np.random.Generator) -> list[SetPartition]:
    samplers = _Samplers(q.row)
    return [_fm_final(n, samplers, rng, 2 * n - 1) for _ in range(count)]


@dataclass
class Trajectory:
    """Jump times and states of a continuous-time coalescent with freeze."""

    events: list[tuple[float, FrozenPartition]] = field(default_factory=list)

    def __iter__(self):
        return iter(self.events)

    def __len__(self):
        return len(self.events)

    @property
    def final(self) -> FrozenPartition:
        return self.events[-1][1]


class _ContinuousRates:
    def __init__(self, xi: XiModel):
        self.xi = xi
        self.samplers = _Samplers(lambda b: q_row(xi, b))
        self._phi: dict[int, float] = {}

    def phi(self, b: int) -> float:
        if b not in self._phi:
            self._phi[b] = float(total_rates(self.xi, b).total)
        return self._phi[b]


def simulate_continuous(xi: XiModel, n: int, rng: np.random.Generator, _rates=None) -> Trajectory:
    """The restriction to ``[n]`` of the (Xi, rho)-coalescent from active singletons.

    Holding times at ``b`` active blocks are exponential with rate ``Phi(b)``;
    the jump is drawn from ``q(b:.)``.
    """
    if xi.freeze_rate == 0:
        raise ValueError("freeze_rate = 0: the process never reaches an all-frozen state")
    rates = _rates or _ContinuousRates(xi)
    active = [(i,) for i in range(1, n + 1)]
    frozen: list = []
    t = 0.0
    traj = Trajectory([(t, FrozenPartition.singletons(n))])
    while active:
        b = len(active)
        t += rng.exponential(1.0 / rates.phi(b))
        _fm_event(active, frozen, rates.samplers[b], rng)
        pairs = [(blk, False) for blk in active] + [(blk, True) for blk in frozen]
        traj.events.append((t, FrozenPartition(n, tuple(pairs))))
    return traj


def simulate_continuous_many(xi: XiModel, n: int, count: int, rng) -> list[SetPartition]:
    rates = _ContinuousRates(xi)
    return [simulate_continuous(xi, n, rng, rates).final.induced() for _ in range(count)]


# --------------------------------------------------------------------------
# exact FM absorption law


def fm_absorption_law(q: QArray, n: int | None = None, cap: int | None = None) -> dict[SetPartition, Fraction]:
    """Exact law of the FM chain's final partition, by a linear solve.

    Works on the full space of partially frozen partitions of ``[n]``, so it is
    independent of Moehle's recursion; default cap is ``n <= 4``.
    """
    n = q.n if n is None else n
    cap = enumeration_cap(FM_ORACLE_CAP) if cap is None else cap
    if n > cap:
        raise ValueError(f"n={n} exceeds the FM oracle cap {cap}")
    states = enumerate_frozen_partitions(n, cap=max(cap, n))
    transient = [s for s in states if not s.is_terminal]
    index = {s: i for i, s in enumerate(transient)}
    absorbing = {s: s.induced() for s in states if s.is_terminal}
    # Q[i] -> {j: prob}, R[i] -> {terminal: prob}
    Q: list[dict[int, Fraction]] = []
    R: list[dict[SetPartition, Fraction]] = []
    for s in transient:
        row = q.row(s.active_count)
        out: Counter = Counter()
        active = s.active_blocks
        for blk in active:
            pairs = [(bb, f or bb == blk) for bb, f in s.blocks]
            out[FrozenPartition(n, tuple(pairs))] += row.q1 / len(active)
        for ct, v in row.qcoll.items():
            if v == 0:
                continue
            choices = enumerate_collisions(active, ct)
            for sel in choices:
                out[apply_collision(s, sel)] += v / len(choices)
        qi, ri = {}, Counter()
        for t, v in out.items():
            if t in index:
                qi[index[t]] = qi.get(index[t], 0) + v
            else:
                ri[absorbing[t]] += v
        Q.append(qi)
        R.append(dict(ri))
    # visits v solve v (I - Q) = e_start
    cols: list[dict[int, Fraction]] = [{j: Fraction(1)} for j in range(len(transient))]
    for i, qi in enumerate(Q):
        for j, v in qi.items():
            cols[j][i] = cols[j].get(i, 0) - v
    start = index[FrozenPartition.singletons(n)]
    rhs = [1 if j == start else 0 for j in range(len(transient))]
    visits = exact.solve(cols, rhs, len(transient))
    law = {p: Fraction(0) for p in enumerate_set_partitions(n, cap=max(cap, n))}
    for i, ri in enumerate(R):
        if visits[i] == 0:
            continue
        for p, v in ri.items():
            law[p] += visits[i] * v
    return law


# --------------------------------------------------------------------------
# sample-and-add


def _canonical_labels(labels: Sequence[int]) -> tuple[int, ...]:
    seen: dict[int, int] = {}
    return tuple(seen.setdefault(x, len(seen)) for x in labels)


def sa_step(p: SetPartition, row: QRow, rng: np.random.Generator) -> SetPartition:
    """One sample-and-add move on a partition of ``[n]``, ``row = q(n:.)``."""
    n = p.n
    if row.b != n:
        raise ValueError(f"row is for n={row.b}, partition has n={n}")
    key = _RowSampler(row).draw(rng)
    labels = list(p.labels())
    if key == FREEZE:
        ball = int(rng.integers(n))
        labels[ball] = n  # a fresh box
        return SetPartition.from_labels(labels)
    balls = list(range(n))
    sets = []
    for k in key.ks:
        picked = [balls.pop(int(rng.integers(len(balls)))) for _ in range(k - 1)]
        sets.append(picked)
    marked = [balls.pop(int(rng.integers(len(balls)))) for _ in key.ks]
    old = p.labels()
    for picked, m in zip(sets, marked):
        for ball in picked:
            labels[ball] = old[m]
    return SetPartition.from_labels(labels)


@dataclass(frozen=True)
class TransitionMatrix:
    """Exact row-stochastic matrix over ``states``; rows are sparse ``{j: prob}``."""

    states: tuple[SetPartition, ...]
    rows: tuple[Mapping[int, Fraction], ...]

    def entry(self, i: int, j: int) -> Fraction:
        return self.rows[i].get(j, Fraction(0))

    def dense(self) -> list[list[Fraction]]:
        return [[self.entry(i, j) for j in range(len(self.states))] for i in range(len(self.states))]

    def index(self, p: SetPartition) -> int:
        return self.states.index(p)

    def push_forward(self, law: Sequence[Fraction]) -> list[Fraction]:
        """``law @ M``."""
        out = [Fraction(0)] * len(self.states)
        for i, w in enumerate(law):
            if w:
                for j, v in self.rows[i].items():
                    out[j] += w * v
        return out


def _ordered_moves(n: int, ks: tuple[int, ...]) -> dict[tuple, Fraction]:
    """Every sampling-then-marking sequence, each with weight ``1 / (n)_K``."""
    total = sum(ks)
    w = Fraction(1, math.perm(n, total))
    moves: Counter = Counter()
    for seq in itertools.permutations(range(n), total):
        marks = seq[total - len(ks):]
        pos, move = 0, []
        for k, m in zip(ks, marks):
            move.extend((ball, m) for ball in seq[pos:pos + k - 1])
            pos += k - 1
        moves[tuple(sorted(move))] += w
    return dict(moves)


def _unordered_moves(n: int, ks: tuple[int, ...]) -> dict[tuple, Fraction]:
    """Same law as :func:`_ordered_moves`, enumerating sampled sets as subsets."""
    total = sum(ks)
    base = Fraction(math.prod(math.factorial(k - 1) for k in ks), math.perm(n, total))
    moves: Counter = Counter()

    def pick(i, remaining, chosen):
        if i == len(ks):
            for marks in itertools.permutations(remaining, len(ks)):
                move = tuple(sorted((ball, m) for s, m in zip(chosen, marks) for ball in s))
                moves[move] += base
            return
        for s in itertools.combinations(remaining, ks[i] - 1):
            left = tuple(x for x in remaining if x not in s)
            pick(i + 1, left, chosen + [s])

    pick(0, tuple(range(n)), [])
    return dict(moves)


def sa_transition_matrix(n: int, row: QRow, method: str = "unordered", cap: int | None = None) -> TransitionMatrix:
    """Exact SA transition matrix on the Bell(n) partitions of ``[n]``.

    ``method`` picks how selections are enumerated: ``"ordered"`` walks every
    sampling sequence, ``"unordered"`` weights sampled subsets; both give the
    same matrix.
    """
    cap = enumeration_cap(SA_EXACT_CAP) if cap is None else cap
    if n > cap:
        raise ValueError(f"n={n} exceeds the exact SA cap {cap}")
    if row.b != n:
        raise ValueError(f"row is for n={row.b}")
    moves_of = {"ordered": _ordered_moves, "unordered": _unordered_moves}[method]
    states = tuple(enumerate_set_partitions(n, cap=max(cap, n)))
    labels = [s.labels() for s in states]
    index = {lab: i for i, lab in enumerate(labels)}
    branches = []
    if row.q1:
        fresh = {((i, None),): Fraction(1, n) for i in range(n)}
        branches.append((row.q1, fresh))
    for ct, v in row.qcoll.items():
        if v:
            branches.append((v, moves_of(n, ct.ks)))
    rows = []
    for lab in labels:
        out: Counter = Counter()
        for weight, moves in branches:
            for move, w in moves.items():
                new = list(lab)
                for ball, m in move:
                    new[ball] = n if m is None else lab[m]
                out[index[_canonical_labels(new)]] += weight * w
        rows.append(dict(out))
    return TransitionMatrix(states, tuple(rows))


def stationary_distribution(m: TransitionMatrix) -> list[Fraction]:
    """Exact solution of ``pi M = pi``, ``sum(pi) = 1``; raises if not unique."""
    size = len(m.states)
    eqs: list[dict[int, Fraction]] = [{j: Fraction(-1)} for j in range(size)]
    for i, row in enumerate(m.rows):
        for j, v in row.items():
            eqs[j][i] = eqs[j].get(i, 0) + v
    eqs.append({j: Fraction(1) for j in range(size)})
    try:
        return exact.solve(eqs, [0] * size + [1], size)
    except exact.SingularSystemError:
        raise ValueError("stationary distribution is not unique") from None


def law_by_shape(states: Sequence[SetPartition], law: Sequence[Fraction]) -> dict[tuple[int, ...], Fraction]:
    out: dict = {}
    for s, w in zip(states, law):
        out[s.shape()] = out.get(s.shape(), Fraction(0)) + w
    return out


def exchangeable_law(states: Sequence[SetPartition], eppf) -> list[Fraction]:
    """The law on ``states`` assigning ``eppf(shape)`` to each partition."""
    return [eppf(s.shape()) for s in states]


def run_sa_chain(start: SetPartition, row: QRow, steps: int, rng, burn_in: int = 0) -> Counter:
    """Occupancy counts of the SA chain over ``steps`` steps after ``burn_in``."""
    p = start
    for _ in range(burn_in):
        p = sa_step(p, row, rng)
    visits: Counter = Counter()
    for _ in range(steps):
        p = sa_step(p, row, rng)
        visits[p] += 1
    return visits


# --------------------------------------------------------------------------
# replicas and empirical estimates


def replicate(task: Callable[[int, np.random.Generator], list], samples: int, seed: int,
              threads: int = 1, chunk: int = 10_000, stream: int = 0) -> list:
    """Run ``task(count, rng)`` over fixed-size chunks with per-chunk streams.

    Chunk ``i`` draws from ``make_rng(seed, stream, i)``. Chunking depends only on
    ``samples`` and ``chunk``, so results match for any ``threads``.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    sizes = [min(chunk, samples - i) for i in range(0, samples, chunk)]
    jobs = [(size, make_rng(seed, stream, i)) for i, size in enumerate(sizes)]
    if threads <= 1:
        parts = [task(size, rng) for size, rng in jobs]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda job: task(*job), jobs))
    return [x for part in parts for x in part]


@dataclass(frozen=True)
class EmpiricalEppf:
    n: int
    counts: Mapping[tuple[int, ...], int]
    total: int

    def frequency(self, lam) -> float:
        return self.counts.get(tuple(lam), 0) / self.total

    def estimate(self, lam) -> float:
        """Estimated EPPF value: shape frequency over the number of such partitions."""
        return self.frequency(lam) / shape_multiplicity(lam)

    def stderr(self, lam) -> float:
        f = self.frequency(lam)
        return math.sqrt(f * (1 - f) / self.total) / shape_multiplicity(lam)

    def shapes(self) -> list[tuple[int, ...]]:
        return list(integer_partitions(self.n))


def empirical_eppf(samples: Sequence[SetPartition]) -> EmpiricalEppf:
    if not samples:
        raise ValueError("no samples")
    n = samples[0].n
    if any(s.n != n for s in samples):
        raise ValueError("samples have different ground-set sizes")
    counts = Counter(s.shape() for s in samples)
    return EmpiricalEppf(n, dict(counts), len(samples))


@dataclass(frozen=True)
class GofResult:
    statistic: float
    dof: int
    pvalue: float

    def passed(self, alpha: float = 1e-3) -> bool:
        return self.pvalue > alpha


def _pool(cells: list[tuple[float, list[float]]], min_expected: float) -> list[tuple[float, list[float]]]:
    # merge the smallest cells until each pooled expectation reaches min_expected
    cells = sorted(cells, key=lambda c: c[0])
    pooled = []
    acc_e, acc = 0.0, None
    for e, obs in cells:
        if acc is None:
            acc_e, acc = e, list(obs)
        else:
            acc_e += e
            acc = [a + o for a, o in zip(acc, obs)]
        if acc_e >= min_expected:
            pooled.append((acc_e, acc))
            acc = None
    if acc is not None:
        if pooled:
            e, obs = pooled.pop()
            pooled.append((e + acc_e, [a + o for a, o in zip(obs, acc)]))
        else:
            pooled.append((acc_e, acc))
    return pooled


def chi_square_gof(counts: Mapping, probs: Mapping, min_expected: float = 5.0) -> GofResult:
    """Pearson goodness of fit of ``counts`` against exact ``probs`` (pooling sparse cells)."""
    total = sum(counts.values())
    if any(counts.get(k, 0) and not probs.get(k) for k in counts):
        return GofResult(math.inf, 0, 0.0)
    cells = [(total * float(v), [counts.get(k, 0)]) for k, v in probs.items() if v]
    pooled = _pool(cells, min_expected)
    if len(pooled) < 2:
        return GofResult(0.0, 0, 1.0)
    exp = np.array([e for e, _ in pooled])
    obs = np.array([o[0] for _, o in pooled], dtype=float)
    res = stats.chisquare(obs, exp * obs.sum() / exp.sum())
    return GofResult(float(res.statistic), len(pooled) - 1, float(res.pvalue))


def two_sample_chi_square(a: Mapping, b: Mapping, min_expected: float = 5.0) -> GofResult:
    """Chi-square homogeneity test between two tallies over the same categories."""
    keys = sorted(set(a) | set(b))
    na, nb = sum(a.values()), sum(b.values())
    frac_a = na / (na + nb)
    cells = [(min(frac_a, 1 - frac_a) * (a.get(k, 0) + b.get(k, 0)), [a.get(k, 0), b.get(k, 0)]) for k in keys]
    pooled = _pool(cells, min_expected)
    if len(pooled) < 2:
        return GofResult(0.0, 0, 1.0)
    table = np.array([o for _, o in pooled], dtype=float).T
    stat, pvalue, dof, _ = stats.chi2_contingency(table, correction=False)
    return GofResult(float(stat), int(dof), float(pvalue))


def total_variation(p: Mapping, q: Mapping) -> float:
    keys = set(p) | set(q)
    return 0.5 * sum(abs(float(p.get(k, 0)) - float(q.get(k, 0))) for k in keys)
