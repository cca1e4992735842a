"""Exact enumeration and counting for set partitions, compositions and collisions.

Integer partitions and compositions are plain tuples of positive ints;
set partitions of ``[n] = {1, ..., n}`` are :class:`SetPartition` objects whose
blocks are sorted tuples, ordered by least element.
"""
from __future__ import annotations

import itertools
import os
from collections import Counter
from dataclasses import dataclass
from math import factorial, prod
from typing import Iterator, Sequence

DEFAULT_MAX_N = 10
ENV_MAX_N = "XIFREEZE_MAX_N"

Block = tuple[int, ...]
# One sub-multiset of collision sizes per composition part, each non-increasing.
Assignment = tuple[tuple[int, ...], ...]


def enumeration_cap(default: int = DEFAULT_MAX_N) -> int:
    """Largest ground-set size allowed for exhaustive enumeration.

    ``XIFREEZE_MAX_N`` overrides ``default`` when set.
    """
    value = os.environ.get(ENV_MAX_N)
    if value is None or value == "":
        return default
    try:
        cap = int(value)
    except ValueError:
        raise ValueError(f"{ENV_MAX_N} must be an integer, got {value!r}") from None
    if cap < 1:
        raise ValueError(f"{ENV_MAX_N} must be positive, got {cap}")
    return cap


# --------------------------------------------------------------------------
# compositions and integer partitions


def is_composition(parts: Sequence[int]) -> bool:
    return len(parts) > 0 and all(isinstance(x, int) and x >= 1 for x in parts)


def as_partition(parts: Sequence[int]) -> tuple[int, ...]:
    """Sort a composition into the integer partition (non-increasing) it shapes to."""
    if not is_composition(parts):
        raise ValueError(f"not a composition: {tuple(parts)!r}")
    return tuple(sorted(parts, reverse=True))


def integer_partitions(n: int, max_part: int | None = None) -> Iterator[tuple[int, ...]]:
    """Partitions of ``n`` in reverse lexicographic order, ``(n,)`` first."""
    if n == 0:
        yield ()
        return
    if max_part is None or max_part > n:
        max_part = n
    for first in range(max_part, 0, -1):
        for rest in integer_partitions(n - first, first):
            yield (first,) + rest


def compositions(n: int) -> Iterator[tuple[int, ...]]:
    if n == 0:
        yield ()
        return
    for first in range(1, n + 1):
        for rest in compositions(n - first):
            yield (first,) + rest


def shape_multiplicity(lam: Sequence[int]) -> int:
    """Number of set partitions of ``[n]`` whose block sizes are ``lam``."""
    lam = as_partition(lam)
    denom = prod(factorial(x) for x in lam)
    denom *= prod(factorial(m) for m in Counter(lam).values())
    return factorial(sum(lam)) // denom


def bell(n: int) -> int:
    """Bell number via the Bell triangle."""
    row = [1]
    for _ in range(n):
        nxt = [row[-1]]
        for x in row:
            nxt.append(nxt[-1] + x)
        row = nxt
    return row[0]


# --------------------------------------------------------------------------
# set partitions


def _canonical_blocks(blocks) -> tuple[Block, ...]:
    out = [tuple(sorted(b)) for b in blocks]
    out.sort(key=lambda b: b[0] if b else 0)
    return tuple(out)


@dataclass(frozen=True)
class SetPartition:
    """A partition of ``[n]`` into non-empty disjoint blocks."""

    n: int
    blocks: tuple[Block, ...]

    def __post_init__(self):
        blocks = _canonical_blocks(self.blocks)
        if any(len(b) == 0 for b in blocks):
            raise ValueError("blocks must be non-empty")
        elements = sorted(x for b in blocks for x in b)
        if elements != list(range(1, self.n + 1)):
            raise ValueError(f"blocks {blocks!r} do not partition [1..{self.n}]")
        object.__setattr__(self, "blocks", blocks)

    @classmethod
    def from_blocks(cls, blocks, n: int | None = None) -> "SetPartition":
        blocks = [tuple(b) for b in blocks]
        if n is None:
            n = sum(len(b) for b in blocks)
        return cls(n, tuple(blocks))

    @classmethod
    def from_labels(cls, labels: Sequence) -> "SetPartition":
        """Build from per-element labels; ``labels[i]`` is the box of element ``i + 1``."""
        groups: dict = {}
        for i, lab in enumerate(labels):
            groups.setdefault(lab, []).append(i + 1)
        return cls(len(labels), tuple(tuple(g) for g in groups.values()))

    def __len__(self) -> int:
        return len(self.blocks)

    def __str__(self) -> str:
        return "{" + ",".join("{" + ",".join(map(str, b)) + "}" for b in self.blocks) + "}"

    def shape(self) -> tuple[int, ...]:
        return shape(self)

    def restrict(self, m: int) -> "SetPartition":
        return restrict(self, m)

    def labels(self) -> tuple[int, ...]:
        """Restricted growth string: block index of each element, 0-based."""
        out = [0] * self.n
        for j, b in enumerate(self.blocks):
            for x in b:
                out[x - 1] = j
        return tuple(out)


@dataclass(frozen=True)
class FrozenPartition:
    """A set partition of ``[n]`` whose blocks are flagged active or frozen.

    ``blocks`` holds ``(block, frozen)`` pairs ordered by least element.
    """

    n: int
    blocks: tuple[tuple[Block, bool], ...]

    def __post_init__(self):
        pairs = [(tuple(sorted(b)), bool(f)) for b, f in self.blocks]
        pairs.sort(key=lambda bf: bf[0][0] if bf[0] else 0)
        SetPartition(self.n, tuple(b for b, _ in pairs))  # validates
        object.__setattr__(self, "blocks", tuple(pairs))

    @classmethod
    def singletons(cls, n: int) -> "FrozenPartition":
        """All-active singletons of ``[n]``."""
        return cls(n, tuple(((i,), False) for i in range(1, n + 1)))

    @classmethod
    def from_set_partition(cls, p: SetPartition, frozen: bool = False) -> "FrozenPartition":
        return cls(p.n, tuple((b, frozen) for b in p.blocks))

    @property
    def active_blocks(self) -> tuple[Block, ...]:
        return tuple(b for b, f in self.blocks if not f)

    @property
    def frozen_blocks(self) -> tuple[Block, ...]:
        return tuple(b for b, f in self.blocks if f)

    @property
    def active_count(self) -> int:
        return sum(1 for _, f in self.blocks if not f)

    @property
    def is_terminal(self) -> bool:
        return self.active_count == 0

    def induced(self) -> SetPartition:
        return SetPartition(self.n, tuple(b for b, _ in self.blocks))

    def shape(self) -> tuple[int, ...]:
        return shape(self)

    def restrict(self, m: int) -> "FrozenPartition":
        return restrict(self, m)

    def __str__(self) -> str:
        def fmt(b, f):
            return ("*" if f else "") + "{" + ",".join(map(str, b)) + "}"

        return "{" + ",".join(fmt(b, f) for b, f in self.blocks) + "}"


def shape(p: SetPartition | FrozenPartition) -> tuple[int, ...]:
    """Block sizes sorted non-increasing."""
    if isinstance(p, FrozenPartition):
        sizes = [len(b) for b, _ in p.blocks]
    else:
        sizes = [len(b) for b in p.blocks]
    return tuple(sorted(sizes, reverse=True))


def restrict(p, m: int):
    """Delete elements ``m + 1, ..., n``; empty blocks are dropped, flags kept."""
    if not 1 <= m <= p.n:
        raise ValueError(f"restriction size {m} outside [1, {p.n}]")
    if isinstance(p, FrozenPartition):
        pairs = []
        for b, f in p.blocks:
            kept = tuple(x for x in b if x <= m)
            if kept:
                pairs.append((kept, f))
        return FrozenPartition(m, tuple(pairs))
    kept = (tuple(x for x in b if x <= m) for b in p.blocks)
    return SetPartition(m, tuple(b for b in kept if b))


def restricted_growth_strings(n: int) -> Iterator[tuple[int, ...]]:
    if n == 0:
        yield ()
        return
    labels = [0] * n

    def rec(i, top):
        if i == n:
            yield tuple(labels)
            return
        for lab in range(top + 2):
            labels[i] = lab
            yield from rec(i + 1, max(top, lab))

    yield from rec(1, 0)


def enumerate_set_partitions(n: int, cap: int | None = None) -> list[SetPartition]:
    """All Bell(n) partitions of ``[n]``, lexicographic on canonical block lists."""
    if cap is None:
        cap = enumeration_cap()
    if n < 1:
        raise ValueError("n must be positive")
    if n > cap:
        raise ValueError(f"n={n} exceeds the enumeration cap {cap} (set {ENV_MAX_N} to raise it)")
    out = [SetPartition.from_labels(rgs) for rgs in restricted_growth_strings(n)]
    out.sort(key=lambda p: p.blocks)
    return out


def enumerate_frozen_partitions(n: int, cap: int | None = None) -> list[FrozenPartition]:
    """Every partially frozen partition of ``[n]``."""
    out = []
    for p in enumerate_set_partitions(n, cap):
        for flags in itertools.product((False, True), repeat=len(p.blocks)):
            out.append(FrozenPartition(n, tuple(zip(p.blocks, flags))))
    return out


# --------------------------------------------------------------------------
# collisions


@dataclass(frozen=True, order=True)
class CollisionType:
    """A merge of ``b = s + sum(ks)`` blocks into ``len(ks) + s`` blocks.

    ``ks`` is stored non-increasing, so equal multisets compare equal.
    """

    ks: tuple[int, ...]
    s: int

    def __post_init__(self):
        ks = tuple(sorted((int(k) for k in self.ks), reverse=True))
        if not ks:
            raise ValueError("a collision needs at least one merging group")
        if any(k < 2 for k in ks):
            raise ValueError(f"every group size must be >= 2, got {ks}")
        if self.s < 0:
            raise ValueError("s must be non-negative")
        object.__setattr__(self, "ks", ks)

    @property
    def b(self) -> int:
        return self.s + sum(self.ks)

    @property
    def r(self) -> int:
        return len(self.ks)

    def multiplicities(self) -> dict[int, int]:
        """``{j: l_j}`` with ``l_j`` the number of groups of size ``j``."""
        return dict(Counter(self.ks))

    def __str__(self) -> str:
        return "{" + ",".join(map(str, self.ks)) + "};" + str(self.s)

    @classmethod
    def parse(cls, text: str) -> "CollisionType":
        """Inverse of ``str``: ``"{3,2};1"``."""
        try:
            head, s = text.strip().split(";")
            head = head.strip()
            if not (head.startswith("{") and head.endswith("}")):
                raise ValueError
            ks = tuple(int(x) for x in head[1:-1].split(","))
            return cls(ks, int(s))
        except ValueError:
            raise ValueError(f"malformed collision type {text!r}") from None


def merge_count(b: int, ks: Sequence[int]) -> int:
    """Ways to pick disjoint unordered groups of sizes ``ks`` from ``b`` labeled items.

    Accepts an empty ``ks`` (one way), unlike :class:`CollisionType`.
    """
    total = sum(ks)
    if total > b:
        return 0
    denom = factorial(b - total)
    for j, l in Counter(ks).items():
        denom *= factorial(j) ** l * factorial(l)
    return factorial(b) // denom


def collision_count(ct: CollisionType) -> int:
    """``b! / (s! prod_j (j!)^l_j l_j!)``."""
    return merge_count(ct.b, ct.ks)


def enumerate_collision_types(b: int) -> list[CollisionType]:
    """Every collision type of ``b`` blocks, ordered by group count then sizes."""
    if b < 2:
        return []
    out = []
    for total in range(2, b + 1):
        for ks in integer_partitions(total):
            if ks[-1] >= 2:
                out.append(CollisionType(ks, b - total))
    out.sort(key=lambda ct: (ct.r, ct.ks[::-1]))
    return out


def enumerate_collisions(items: Sequence, ct: CollisionType) -> list[tuple[tuple, ...]]:
    """All groupings of ``items`` performing a collision of type ``ct``.

    Each grouping is a tuple of groups (tuples of items); ``len(items)`` must be ``ct.b``.
    """
    items = tuple(items)
    if len(items) != ct.b:
        raise ValueError(f"collision type {ct} needs {ct.b} blocks, got {len(items)}")
    want = Counter(ct.ks)
    out = []
    for rgs in restricted_growth_strings(len(items)):
        groups: dict[int, list] = {}
        for item, lab in zip(items, rgs):
            groups.setdefault(lab, []).append(item)
        merged = [tuple(g) for g in groups.values() if len(g) >= 2]
        if Counter(len(g) for g in merged) == want:
            out.append(tuple(merged))
    return out


def apply_collision(p: FrozenPartition, selection: Sequence[Sequence[Block]]) -> FrozenPartition:
    """Union each group of active blocks of ``p`` into one active block."""
    active = set(p.active_blocks)
    frozen = set(p.frozen_blocks)
    used: set = set()
    merged = []
    for group in selection:
        group = [tuple(sorted(b)) for b in group]
        if len(group) < 2:
            raise ValueError("each merging group needs at least two blocks")
        for b in group:
            if b in frozen:
                raise ValueError(f"block {b} is frozen")
            if b not in active:
                raise ValueError(f"{b} is not a block of the partition")
            if b in used:
                raise ValueError(f"block {b} selected twice")
            used.add(b)
        merged.append(tuple(x for b in group for x in b))
    pairs = [(b, f) for b, f in p.blocks if b not in used]
    pairs.extend((b, False) for b in merged)
    return FrozenPartition(p.n, tuple(pairs))


# --------------------------------------------------------------------------
# assignment sets


def enumerate_assignments(ks: Sequence[int], comp: Sequence[int]) -> list[Assignment]:
    """Ways for the parts of ``comp`` to share out all of ``ks`` within capacity.

    Part ``i`` receives a sub-multiset whose sum is at most ``comp[i]``; every
    element of ``ks`` goes to exactly one part. Assignments that agree on the
    multiset each part receives are counted once.
    """
    counts = sorted(Counter(ks).items(), reverse=True)
    ell = len(comp)
    out: list[Assignment] = []
    got: list[list[int]] = [[] for _ in range(ell)]
    caps = list(comp)

    def spread(vi: int):
        if vi == len(counts):
            out.append(tuple(tuple(sorted(g, reverse=True)) for g in got))
            return
        value, mult = counts[vi]
        yield_into(vi, value, mult, 0)

    def yield_into(vi: int, value: int, left: int, part: int):
        if part == ell - 1:
            if left * value <= caps[part]:
                caps[part] -= left * value
                got[part].extend([value] * left)
                spread(vi + 1)
                del got[part][len(got[part]) - left:]
                caps[part] += left * value
            return
        top = min(left, caps[part] // value)
        for c in range(top, -1, -1):
            caps[part] -= c * value
            got[part].extend([value] * c)
            yield_into(vi, value, left - c, part + 1)
            del got[part][len(got[part]) - c:]
            caps[part] += c * value

    if ell == 0:
        return [()] if not counts else []
    spread(0)
    return out
