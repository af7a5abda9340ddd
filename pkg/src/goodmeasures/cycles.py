"""Cycle tuples, their morphisms, constructive lifts, and Rokhlin decisions.

A matrix whose rows have one nonzero entry is, up to its indexing partition,
a multiset of weighted cycles: a tuple of (weight, length) pairs.  Morphisms
group source cycles over target cycles with integer winding numbers.  This
module implements the tuple algebra, bounded morphism search, the ring-like
product lift, amalgamation over Q-like value sets, and the decision
procedures for the (strong) Rokhlin property of the automorphism group.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .errors import (
    MassMismatch,
    MassOverflow,
    NotGroupLike,
    NotInV,
    NotQLike,
    NotRingLike,
    PreconditionFailed,
)
from .partitions import common_refinement
from .values import ExactValue, GroupDescriptor, ONE, ZERO, check_all_in

Entry = tuple[ExactValue, int]


@dataclass(frozen=True)
class CycleTuple:
    """Canonically sorted multiset of (weight, length) cycles."""

    entries: tuple[Entry, ...]

    @staticmethod
    def make(entries: Sequence[Entry]) -> "CycleTuple":
        for v, n in entries:
            if v.sign() <= 0:
                raise ValueError(f"cycle weight {v} must be positive")
            if n < 1:
                raise ValueError("cycle length must be at least 1")
        return CycleTuple(tuple(sorted(entries, key=_entry_key)))

    @property
    def mass(self) -> ExactValue:
        total = ZERO
        for v, n in self.entries:
            total = total + v.scale(n)
        return total

    def to_json(self) -> list:
        return [{"w": v.to_json(), "n": n} for v, n in self.entries]

    @staticmethod
    def from_json(data, symbols) -> "CycleTuple":
        return CycleTuple.make(
            [(ExactValue.from_json(e["w"], symbols), int(e["n"])) for e in data]
        )


def _entry_key(e: Entry):
    return (e[0].sort_key(), e[1])


def _sorted_with_positions(entries: Sequence[Entry]) -> tuple[CycleTuple, list[int]]:
    """Canonical tuple plus the new position of each original entry."""
    order = sorted(range(len(entries)), key=lambda i: (_entry_key(entries[i]), i))
    positions = [0] * len(entries)
    for new, old in enumerate(order):
        positions[old] = new
    return CycleTuple(tuple(entries[i] for i in order)), positions


@dataclass(frozen=True)
class TupleMorphism:
    """Blocks of source entry indices, one block per target entry."""

    blocks: tuple[tuple[int, ...], ...]

    @staticmethod
    def make(blocks: Sequence[Sequence[int]]) -> "TupleMorphism":
        return TupleMorphism(tuple(tuple(sorted(b)) for b in blocks))

    def to_json(self) -> list:
        return [list(b) for b in self.blocks]

    @staticmethod
    def from_json(data) -> "TupleMorphism":
        return TupleMorphism.make([list(map(int, b)) for b in data])


def identity_tuple_morphism(c: CycleTuple) -> TupleMorphism:
    return TupleMorphism.make([[i] for i in range(len(c.entries))])


# ---------------------------------------------------------------------------
# sums and scalings
# ---------------------------------------------------------------------------


def tuple_sum(c: CycleTuple, d: CycleTuple, V: GroupDescriptor) -> CycleTuple:
    total = c.mass + d.mass
    if (total - ONE).sign() > 0:
        raise MassOverflow(f"masses sum to {total} > 1")
    if not V.member(total):
        raise NotInV(f"summed mass {total} not in V")
    return CycleTuple.make(list(c.entries) + list(d.entries))


def tuple_sum_with_positions(
    c: CycleTuple, d: CycleTuple, V: GroupDescriptor
) -> tuple[CycleTuple, list[int], list[int]]:
    """tuple_sum plus the new positions of c's and d's entries in the sum."""
    total = c.mass + d.mass
    if (total - ONE).sign() > 0:
        raise MassOverflow(f"masses sum to {total} > 1")
    if not V.member(total):
        raise NotInV(f"summed mass {total} not in V")
    merged = list(c.entries) + list(d.entries)
    out, pos = _sorted_with_positions(merged)
    return out, pos[: len(c.entries)], pos[len(c.entries):]


def tuple_scale(n: int, c: CycleTuple, V: GroupDescriptor) -> CycleTuple:
    if n < 1:
        raise ValueError("scale must be a positive integer")
    total = c.mass.scale(n)
    if (total - ONE).sign() > 0:
        raise MassOverflow(f"scaled mass {total} > 1")
    if not V.member(total):
        raise NotInV(f"scaled mass {total} not in V")
    return CycleTuple.make(list(c.entries) * n)


# ---------------------------------------------------------------------------
# morphisms
# ---------------------------------------------------------------------------


def verify_tuple_morphism(m: TupleMorphism, src: CycleTuple, tgt: CycleTuple) -> bool:
    """Blockwise mass identities and winding-number integrality, exactly."""
    if src.mass != tgt.mass:
        raise MassMismatch(f"masses differ: {src.mass} vs {tgt.mass}")
    if len(m.blocks) != len(tgt.entries):
        return False
    flat = [i for b in m.blocks for i in b]
    if sorted(flat) != list(range(len(src.entries))):
        return False
    for j, block in enumerate(m.blocks):
        w_j, k_j = tgt.entries[j]
        s = ZERO
        for i in block:
            v_i, n_i = src.entries[i]
            if n_i % k_j != 0:
                return False
            s = s + v_i.scale(n_i)
        if s != w_j.scale(k_j):
            return False
    return True


def compose_tuple_morphisms(outer: TupleMorphism, inner: TupleMorphism) -> TupleMorphism:
    """outer ∘ inner for inner: src -> mid and outer: mid -> tgt."""
    return TupleMorphism.make(
        [[i for mid in block for i in inner.blocks[mid]] for block in outer.blocks]
    )


def sum_tuple_morphisms(
    m_c: TupleMorphism,
    m_d: TupleMorphism,
    src_pos_c: Sequence[int],
    src_pos_d: Sequence[int],
    tgt_pos_c: Sequence[int],
    tgt_pos_d: Sequence[int],
) -> TupleMorphism:
    """The blockwise sum of two morphisms after their tuples were summed.

    Position lists say where each original entry landed in the canonical
    concatenations (see ``tuple_sum_with_positions``).
    """
    n_targets = len(tgt_pos_c) + len(tgt_pos_d)
    blocks: list[list[int]] = [[] for _ in range(n_targets)]
    for j, block in enumerate(m_c.blocks):
        blocks[tgt_pos_c[j]] = [src_pos_c[i] for i in block]
    for j, block in enumerate(m_d.blocks):
        blocks[tgt_pos_d[j]] = [src_pos_d[i] for i in block]
    return TupleMorphism.make(blocks)


def find_tuple_morphism(
    src: CycleTuple, tgt: CycleTuple, effort: int = 10**6
) -> TupleMorphism | None:
    """Exhaustive blocked search for a morphism; None when none exists within
    the node budget (a semi-decision).  The first morphism in assignment
    order is the lexicographically least one.
    """
    if src.mass != tgt.mass:
        raise MassMismatch(f"masses differ: {src.mass} vs {tgt.mass}")
    m, l = len(src.entries), len(tgt.entries)
    assign = [-1] * m
    sums = [ZERO] * l
    targets = [w.scale(k) for w, k in tgt.entries]
    budget = [effort]

    def feasible(i: int, j: int) -> bool:
        v_i, n_i = src.entries[i]
        _w_j, k_j = tgt.entries[j]
        if n_i % k_j != 0:
            return False
        return ((sums[j] + v_i.scale(n_i)) - targets[j]).sign() <= 0

    def place(i: int) -> bool:
        if i == m:
            return all(sums[j] == targets[j] for j in range(l))
        for j in range(l):
            budget[0] -= 1
            if budget[0] < 0:
                return False
            if feasible(i, j):
                v_i, n_i = src.entries[i]
                assign[i] = j
                sums[j] = sums[j] + v_i.scale(n_i)
                if place(i + 1):
                    return True
                sums[j] = sums[j] - v_i.scale(n_i)
                assign[i] = -1
        return False

    if not place(0):
        return None
    blocks: list[list[int]] = [[] for _ in range(l)]
    for i, j in enumerate(assign):
        blocks[j].append(i)
    return TupleMorphism.make(blocks)


# ---------------------------------------------------------------------------
# constructive lifts
# ---------------------------------------------------------------------------


def ring_product_lift(
    V: GroupDescriptor, c: CycleTuple, d: CycleTuple
) -> tuple[CycleTuple, TupleMorphism, TupleMorphism]:
    """The product tuple (v_i w_j, n_i m_j) with its projections onto c and d.

    Needs a ring-like value set (entrywise products must stay in V) and both
    masses equal to one (so the blockwise sums close up).
    """
    if V.classify().ring_like is not True:
        raise NotRingLike("value set is not (decidably) ring-like")
    if c.mass != ONE or d.mass != ONE:
        raise PreconditionFailed("masses are 1", f"{c.mass} and {d.mass}")
    raw: list[Entry] = []
    pairs: list[tuple[int, int]] = []
    for i, (v, n) in enumerate(c.entries):
        for j, (w, mm) in enumerate(d.entries):
            raw.append((v * w, n * mm))
            pairs.append((i, j))
    check_all_in([e[0] for e in raw], V, "product weight")
    u, positions = _sorted_with_positions(raw)
    blocks_c: list[list[int]] = [[] for _ in c.entries]
    blocks_d: list[list[int]] = [[] for _ in d.entries]
    for idx, (i, j) in enumerate(pairs):
        blocks_c[i].append(positions[idx])
        blocks_d[j].append(positions[idx])
    mc = TupleMorphism.make(blocks_c)
    md = TupleMorphism.make(blocks_d)
    if not verify_tuple_morphism(mc, u, c) or not verify_tuple_morphism(md, u, d):
        raise RuntimeError("product lift failed to verify; this is a bug")
    return u, mc, md


def qlike_amalgamate(
    V: GroupDescriptor,
    B0: CycleTuple,
    p0: TupleMorphism,
    B1: CycleTuple,
    p1: TupleMorphism,
    A: CycleTuple,
) -> tuple[CycleTuple, TupleMorphism, TupleMorphism]:
    """Amalgamate two covers of A over a Q-like value set, cycle by cycle.

    Within the preimages of one A-cycle all covering cycles are first lifted
    to a common length (the least common multiple of the winding numbers
    times the base length; the divided weights stay in V because V is
    Q-like), the two weight lists are refined jointly, and the refinement
    parts become the amalgam's cycles.  The returned square commutes exactly.
    """
    if not V.classify().q_like:
        raise NotQLike("value set is not Q-like")
    if not verify_tuple_morphism(p0, B0, A) or not verify_tuple_morphism(p1, B1, A):
        raise ValueError("p0/p1 are not verified morphisms onto A")
    c_entries: list[Entry] = []
    q0_blocks: list[list[int]] = [[] for _ in B0.entries]
    q1_blocks: list[list[int]] = [[] for _ in B1.entries]
    for t, (z_t, n_t) in enumerate(A.entries):
        idx0 = list(p0.blocks[t])
        idx1 = list(p1.blocks[t])
        wind0 = [B0.entries[i][1] // n_t for i in idx0]
        wind1 = [B1.entries[i][1] // n_t for i in idx1]
        W = math.lcm(*wind0, *wind1)
        lifted0 = [B0.entries[i][0].scale(Fraction(w, W)) for i, w in zip(idx0, wind0)]
        lifted1 = [B1.entries[i][0].scale(Fraction(w, W)) for i, w in zip(idx1, wind1)]
        ref = common_refinement(lifted0, lifted1, V)
        offset = len(c_entries)
        for z_s in ref.parts:
            c_entries.append((z_s, n_t * W))
        for pos, i in enumerate(idx0):
            q0_blocks[i].extend(offset + s for s in ref.left_blocks[pos])
        for pos, i in enumerate(idx1):
            q1_blocks[i].extend(offset + s for s in ref.right_blocks[pos])
    C, positions = _sorted_with_positions(c_entries)
    q0 = TupleMorphism.make([[positions[s] for s in b] for b in q0_blocks])
    q1 = TupleMorphism.make([[positions[s] for s in b] for b in q1_blocks])
    if not verify_tuple_morphism(q0, C, B0) or not verify_tuple_morphism(q1, C, B1):
        raise RuntimeError("amalgam legs failed to verify; this is a bug")
    if compose_tuple_morphisms(p0, q0) != compose_tuple_morphisms(p1, q1):
        raise RuntimeError("amalgam square does not commute; this is a bug")
    return C, q0, q1


# ---------------------------------------------------------------------------
# Rokhlin decision procedures
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RokhlinVerdict:
    strong_rokhlin: str  # "yes" | "no" | "unknown"
    rokhlin: str
    certificate: dict

    def to_json(self) -> dict:
        return {
            "strong_rokhlin": self.strong_rokhlin,
            "rokhlin": self.rokhlin,
            "certificate": self.certificate,
        }


def rokhlin_decide(V: GroupDescriptor) -> RokhlinVerdict:
    """Decide the (strong) Rokhlin property of the automorphism group.

    Rational value sets: both properties hold iff every prime exponent is 0
    or infinite; a finite nonzero exponent is the certificate against both.
    Otherwise: yes for Q-like sets; no for sets containing all rationals of
    the unit interval without being Q-like; unknown beyond that.
    """
    cls = V.classify()
    if not cls.group_like:
        raise NotGroupLike("descriptor is not group-like")
    if V.is_purely_rational:
        witness = V.rational.finite_exponent_witness()
        if witness is None:
            cert = {"ring_like": True, "rational_group": V.rational.to_json()}
            return RokhlinVerdict("yes", "yes", cert)
        p, e = witness
        return RokhlinVerdict("no", "no", {"prime": p, "exponent": e})
    if cls.q_like:
        return RokhlinVerdict("yes", "yes", {"q_like": True})
    if V.rational.is_all_rationals:
        broken = next(s.name for s, g in V.irr if not g.is_all_rationals)
        cert = {"contains_unit_rationals": True, "non_divisible_symbol": broken}
        return RokhlinVerdict("no", "no", cert)
    return RokhlinVerdict("unknown", "unknown", {})


def divisibility_closure_check(V: GroupDescriptor, samples: int) -> list[dict]:
    """Sampled closure test of Q = {n : 1/n in V} and of division of V by Q.

    Any reported violation certifies that the Rokhlin property fails.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    qs: list[int] = []
    n = 2
    while len(qs) < samples and n <= 16 * samples + 64:
        if V.member(ExactValue.of(Fraction(1, n))):
            qs.append(n)
        n += 1
    budget = 4
    vals = V.enumerate_values(budget)
    while len(vals) < samples and budget < 64:
        budget *= 2
        vals = V.enumerate_values(budget)
    vals = vals[:samples]
    violations: list[dict] = []
    for i, a in enumerate(qs):
        for b in qs[i:]:
            if not V.member(ExactValue.of(Fraction(1, a * b))):
                violations.append({"kind": "product", "n": a, "m": b})
    for v in vals:
        for a in qs:
            if not V.member(v.scale(Fraction(1, a))):
                violations.append({"kind": "quotient", "v": v.to_json(), "n": a})
    return violations


@dataclass(frozen=True)
class DichotomyVerdict:
    kind: str  # "strong_rokhlin_all" | "no_rokhlin"
    scale: ExactValue | None
    scaled_descriptor: GroupDescriptor | None
    violation: dict

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "scale": self.scale.to_json() if self.scale else None,
            "scaled_descriptor": (
                self.scaled_descriptor.to_json() if self.scaled_descriptor else None
            ),
            "violation": self.violation,
        }


def dichotomy_analyze(
    V: GroupDescriptor, b: ExactValue, n: int, c: ExactValue
) -> DichotomyVerdict:
    """Either every positive scale keeps the strong Rokhlin property (Q-like
    case) or the provided data pins a scaled value set whose automorphism
    group has no dense conjugacy class, with the divisibility violation that
    proves it."""
    if V.classify().q_like:
        return DichotomyVerdict("strong_rokhlin_all", None, None, {})
    if not V.member(b):
        raise PreconditionFailed("b in V", str(b))
    if (b - ONE).sign() >= 0:
        raise PreconditionFailed("b < 1", str(b))
    if n <= 1:
        raise PreconditionFailed("n > 1", str(n))
    b_over_n = b.scale(Fraction(1, n))
    if V.member(b_over_n):
        raise PreconditionFailed("b/n not in V", str(b_over_n))
    if not V.member(c):
        raise PreconditionFailed("c in V", str(c))
    if (c - b_over_n).sign() < 0 or (c - ExactValue.of(Fraction(1, n))).sign() > 0:
        raise PreconditionFailed("c in [b/n, 1/n]", str(c))
    a = c.scale(n)
    scaled = V.scale_value_set(a)
    v = b.scale(1 / a.rational)
    if not scaled.member(v) or not scaled.member(ExactValue.of(Fraction(1, n))):
        raise RuntimeError("dichotomy data lost membership; this is a bug")
    if scaled.member(v.scale(Fraction(1, n))):
        raise RuntimeError("expected divisibility violation is absent; this is a bug")
    violation = {"kind": "quotient", "v": v.to_json(), "n": n}
    return DichotomyVerdict("no_rokhlin", a, scaled, violation)
