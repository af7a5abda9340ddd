"""Measured clopen partitions, their morphisms, and amalgamation.

Objects are finite partitions with positive weights from a group-like value
set; morphisms are mass-preserving surjections of cells.  The common
refinement of two equal-sum weight tuples is computed by the deterministic
peel-the-last-entry induction, and amalgamation of a cospan is assembled
cellwise over the common target from such refinements.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .errors import SumMismatch
from .values import ExactValue, GroupDescriptor, ZERO, check_all_in


@dataclass(frozen=True)
class WeightedPartition:
    """Ordered cells with positive weights; ``total`` is their exact sum."""

    cells: tuple[str, ...]
    weights: Mapping[str, ExactValue]
    total: ExactValue = field(init=False)

    def __post_init__(self):
        if not self.cells:
            raise ValueError("partitions must be nonempty")
        if len(set(self.cells)) != len(self.cells):
            raise ValueError("cell identifiers must be unique")
        if set(self.cells) != set(self.weights):
            raise ValueError("cells and weights disagree")
        total = ZERO
        for c in self.cells:
            w = self.weights[c]
            if w.sign() <= 0:
                raise ValueError(f"weight of {c} must be positive")
            total = total + w
        object.__setattr__(self, "total", total)

    @staticmethod
    def make(weights: Sequence[tuple[str, ExactValue]]) -> "WeightedPartition":
        return WeightedPartition(tuple(c for c, _ in weights), dict(weights))

    def weight(self, cell: str) -> ExactValue:
        return self.weights[cell]

    def weight_list(self) -> list[ExactValue]:
        return [self.weights[c] for c in self.cells]

    def sorted_weight_key(self):
        return tuple(sorted(w.sort_key() for w in self.weight_list()))

    def to_json(self) -> dict:
        return {
            "cells": [{"id": c, "w": self.weights[c].to_json()} for c in self.cells],
            "total": self.total.to_json(),
        }

    @staticmethod
    def from_json(data: Mapping, symbols) -> "WeightedPartition":
        return WeightedPartition.make(
            [(e["id"], ExactValue.from_json(e["w"], symbols)) for e in data["cells"]]
        )


@dataclass(frozen=True)
class PartitionMorphism:
    """A surjection of cells from source to target."""

    source: WeightedPartition
    target: WeightedPartition
    mapping: Mapping[str, str]

    def __call__(self, cell: str) -> str:
        return self.mapping[cell]

    def fiber(self, target_cell: str) -> list[str]:
        return [c for c in self.source.cells if self.mapping[c] == target_cell]

    def to_json(self) -> dict:
        return {"map": {c: self.mapping[c] for c in self.source.cells}}


def verify_morphism(m: PartitionMorphism) -> bool:
    """True iff the map is a well-defined, surjective, mass-preserving cell map."""
    if set(m.mapping) != set(m.source.cells):
        return False
    if set(m.mapping.values()) != set(m.target.cells):
        return False
    for x in m.target.cells:
        s = ZERO
        for y in m.fiber(x):
            s = s + m.source.weight(y)
        if s != m.target.weight(x):
            return False
    return True


def compose(outer: PartitionMorphism, inner: PartitionMorphism) -> PartitionMorphism:
    """outer ∘ inner, requiring inner.target is outer.source."""
    if inner.target is not outer.source and inner.target.cells != outer.source.cells:
        raise ValueError("morphisms are not composable")
    return PartitionMorphism(
        inner.source, outer.target, {c: outer.mapping[inner.mapping[c]] for c in inner.source.cells}
    )


def identity(P: WeightedPartition) -> PartitionMorphism:
    return PartitionMorphism(P, P, {c: c for c in P.cells})


# ---------------------------------------------------------------------------
# common refinement
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CommonRefinement:
    """Parts z_1..z_m with a block per left entry and a block per right entry.

    Blocks hold 0-based part indices; the s-th part contributes to exactly one
    left block and one right block, and blockwise sums reproduce the inputs.
    """

    parts: tuple[ExactValue, ...]
    left_blocks: tuple[tuple[int, ...], ...]
    right_blocks: tuple[tuple[int, ...], ...]


def common_refinement(
    left: Sequence[ExactValue], right: Sequence[ExactValue], V: GroupDescriptor
) -> CommonRefinement:
    """Joint refinement of two equal-sum tuples of positive V-values.

    Follows the induction on the combined length: compare the last entries,
    peel both when they are equal, otherwise subtract the smaller from the
    larger and peel the smaller.  Output has at most len(left)+len(right)-1
    parts, all in V.
    """
    if not left or not right:
        raise ValueError("tuples must be nonempty")
    check_all_in(left, V, "left entry")
    check_all_in(right, V, "right entry")
    sl = sum(left[1:], left[0])
    sr = sum(right[1:], right[0])
    if sl != sr:
        raise SumMismatch(f"left sums to {sl}, right sums to {sr}")
    parts, lb, rb = _refine(list(left), list(right))
    return CommonRefinement(
        tuple(parts),
        tuple(tuple(sorted(b)) for b in lb),
        tuple(tuple(sorted(b)) for b in rb),
    )


def _refine(left, right):
    k, l = len(left), len(right)
    if k == 1:
        return list(right), [list(range(l))], [[j] for j in range(l)]
    if l == 1:
        return list(left), [[i] for i in range(k)], [list(range(k))]
    a, b = left[-1], right[-1]
    s = (a - b).sign()
    if s == 0:
        parts, lb, rb = _refine(left[:-1], right[:-1])
        idx = len(parts)
        return parts + [a], lb + [[idx]], rb + [[idx]]
    if s > 0:
        parts, lb, rb = _refine(left[:-1] + [a - b], right[:-1])
        idx = len(parts)
        lb[-1] = lb[-1] + [idx]
        return parts + [b], lb, rb + [[idx]]
    parts, lb, rb = _refine(left[:-1], right[:-1] + [b - a])
    idx = len(parts)
    rb[-1] = rb[-1] + [idx]
    return parts + [a], lb + [[idx]], rb


def refinement_feasible(
    parts: Sequence[ExactValue], targets: Sequence[ExactValue], limit: int = 200_000
) -> bool:
    """Brute-force check that the parts can be grouped into blocks with the
    given sums.  Independent of the inductive construction; used as an oracle.
    """
    order = sorted(range(len(parts)), key=lambda i: parts[i].sort_key(), reverse=True)
    remaining = [targets[j] for j in range(len(targets))]
    budget = [limit]

    def place(pos: int) -> bool:
        budget[0] -= 1
        if budget[0] < 0:
            raise RuntimeError("feasibility search budget exhausted")
        if pos == len(order):
            return all(r == ZERO for r in remaining)
        p = parts[order[pos]]
        seen = set()
        for j in range(len(remaining)):
            key = remaining[j]
            if key in seen:
                continue
            seen.add(key)
            if (remaining[j] - p).sign() >= 0:
                remaining[j] = remaining[j] - p
                if place(pos + 1):
                    return True
                remaining[j] = remaining[j] + p
        return False

    return place(0)


# ---------------------------------------------------------------------------
# amalgamation and splitting
# ---------------------------------------------------------------------------


def _child_ids(parent: str, count: int) -> list[str]:
    if count == 1:
        return [parent]
    return [f"{parent}/{i}" for i in range(count)]


def amalgamate(
    f1: PartitionMorphism, f2: PartitionMorphism, V: GroupDescriptor
) -> tuple[WeightedPartition, PartitionMorphism, PartitionMorphism]:
    """Amalgamate a cospan f1: E1 -> F <- E2 :f2 into (G, p1: G -> E1, p2: G -> E2).

    Each fiber of F is refined jointly via ``common_refinement``; the square
    f1 ∘ p1 = f2 ∘ p2 commutes exactly by construction.  New cells are named
    after their p1-image, one suffix per sibling, so chains built onto E1 keep
    a readable refinement history.
    """
    if not verify_morphism(f1) or not verify_morphism(f2):
        raise ValueError("amalgamation needs valid morphisms")
    if f1.target.cells != f2.target.cells:
        raise ValueError("morphisms must share their target")
    cells: list[tuple[str, ExactValue]] = []
    m1: dict[str, str] = {}
    m2: dict[str, str] = {}
    pending: dict[str, list[tuple[ExactValue, str]]] = {y: [] for y in f1.source.cells}
    for x in f1.target.cells:
        ys = f1.fiber(x)
        zs = f2.fiber(x)
        ref = common_refinement(
            [f1.source.weight(y) for y in ys], [f2.source.weight(z) for z in zs], V
        )
        owner_left = {}
        for i, block in enumerate(ref.left_blocks):
            for s in block:
                owner_left[s] = ys[i]
        owner_right = {}
        for j, block in enumerate(ref.right_blocks):
            for s in block:
                owner_right[s] = zs[j]
        for s, w in enumerate(ref.parts):
            pending[owner_left[s]].append((w, owner_right[s]))
    for y in f1.source.cells:
        group = pending[y]
        ids = _child_ids(y, len(group))
        for cid, (w, z) in zip(ids, group):
            cells.append((cid, w))
            m1[cid] = y
            m2[cid] = z
    G = WeightedPartition.make(cells)
    p1 = PartitionMorphism(G, f1.source, m1)
    p2 = PartitionMorphism(G, f2.source, m2)
    return G, p1, p2


def split_cell(
    P: WeightedPartition, cell: str, parts: Sequence[ExactValue], V: GroupDescriptor
) -> tuple[WeightedPartition, PartitionMorphism]:
    """Replace one cell by new cells carrying the given weights.

    Returns the refined partition and the merge morphism back onto P.
    """
    if cell not in P.weights:
        raise ValueError(f"no cell {cell!r}")
    check_all_in(parts, V, "part")
    total = sum(parts[1:], parts[0])
    if total != P.weight(cell):
        raise SumMismatch(f"parts sum to {total}, cell has weight {P.weight(cell)}")
    new_cells: list[tuple[str, ExactValue]] = []
    mapping: dict[str, str] = {}
    for c in P.cells:
        if c == cell:
            ids = [f"{cell}/{i}" for i in range(len(parts))] if len(parts) > 1 else [cell]
            for cid, w in zip(ids, parts):
                new_cells.append((cid, w))
                mapping[cid] = cell
        else:
            new_cells.append((c, P.weight(c)))
            mapping[c] = c
    R = WeightedPartition.make(new_cells)
    return R, PartitionMorphism(R, P, mapping)
