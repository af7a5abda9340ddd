"""The Fraïssé chain engine for good measures.

A chain is a finite prefix of a tower of weighted clopen partitions, each
refining the previous one through a mass-preserving merge.  The engine
absorbs object and morphism challenges by amalgamation (which is how the
limit measure acquires maximality and ultrahomogeneity), answers exact
measure queries on clopen sets, produces subset-condition witnesses, and
extends partial isomorphisms of cells to coherent towers of cell bijections
(automorphism prefixes).

Levels are append-only: witnesses may extend the chain but never rewrite it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from . import jsonutil
from .errors import (
    InvalidChallenge,
    NotGroupLike,
    NotInV,
    NotSmaller,
    SumMismatch,
    WeightMismatch,
)
from .flows import decompose_entries
from .partitions import (
    PartitionMorphism,
    WeightedPartition,
    amalgamate,
    common_refinement,
    split_cell,
    verify_morphism,
)
from .values import ExactValue, GroupDescriptor, ONE, ZERO, check_all_in

ROOT_CELL = "r"


@dataclass(frozen=True)
class ClopenSet:
    """A clopen set given as a union of cells at one chain level."""

    level: int
    cells: frozenset[str]

    @staticmethod
    def of(level: int, cells: Iterable[str]) -> "ClopenSet":
        return ClopenSet(level, frozenset(cells))


@dataclass(frozen=True)
class AutomorphismPrefix:
    """Finite-depth data of a measure-preserving homeomorphism.

    ``maps`` holds a weight-preserving cell bijection for each stored level;
    stored levels form an increasing sequence and consecutive stored maps
    commute with the chain projections between their levels.  Lower levels may
    be absent when the bijection does not descend to them.
    """

    levels: tuple[int, ...]
    maps: Mapping[int, Mapping[str, str]]

    @property
    def depth(self) -> int:
        return self.levels[-1]

    @property
    def base(self) -> int:
        return self.levels[0]

    def map_at(self, level: int) -> Mapping[str, str]:
        return self.maps[level]

    @property
    def top_map(self) -> Mapping[str, str]:
        return self.maps[self.depth]

    def to_json(self) -> dict:
        return {"maps": {str(k): dict(sorted(self.maps[k].items())) for k in self.levels}}

    @staticmethod
    def from_json(data: Mapping) -> "AutomorphismPrefix":
        maps = {int(k): dict(v) for k, v in data["maps"].items()}
        return AutomorphismPrefix(tuple(sorted(maps)), maps)


def invert_prefix(sigma: AutomorphismPrefix) -> AutomorphismPrefix:
    return AutomorphismPrefix(
        sigma.levels, {k: {v: c for c, v in m.items()} for k, m in sigma.maps.items()}
    )


def _obj_key(P: WeightedPartition) -> str:
    return jsonutil.dumps(["object", [list(k) for k in sorted(P.sorted_weight_key())]])


def _mor_key(target_level: int, m: PartitionMorphism) -> str:
    body = [
        [c, m.source.weight(c).to_json(), m.mapping[c]] for c in m.source.cells
    ]
    return jsonutil.dumps(["morphism", target_level, body])


@dataclass
class LedgerEntry:
    kind: str  # "object" | "morphism"
    key: str
    stage: int
    challenge_object: WeightedPartition
    target_level: int | None
    challenge_map: Mapping[str, str] | None
    response_map: Mapping[str, str]  # lift (object) or r (morphism), from levels[stage]

    def to_json(self) -> dict:
        out: dict = {
            "kind": self.kind,
            "stage": self.stage,
            "challenge": self.challenge_object.to_json(),
            "response": {"map": dict(sorted(self.response_map.items()))},
        }
        if self.kind == "morphism":
            out["target_level"] = self.target_level
            out["challenge_map"] = dict(sorted(self.challenge_map.items()))
        return out


class GoodMeasureChain:
    """Single-writer, append-only prefix of a Fraïssé chain over a value set."""

    def __init__(self, V: GroupDescriptor):
        if not V.classify().group_like:
            raise NotGroupLike("descriptor does not describe an infinite group-like set")
        self.V = V
        base = WeightedPartition.make([(ROOT_CELL, ONE)])
        self.levels: list[WeightedPartition] = [base]
        self.links: list[PartitionMorphism] = []
        self.ledger: list[LedgerEntry] = []
        self._ledger_index: dict[str, int] = {}

    # -- structure -----------------------------------------------------------

    @property
    def depth(self) -> int:
        return len(self.levels) - 1

    @property
    def top(self) -> WeightedPartition:
        return self.levels[-1]

    def composite_mapping(self, from_level: int, to_level: int) -> dict[str, str]:
        """Cell map of the composite projection from a deeper to a shallower level."""
        if not 0 <= to_level <= from_level <= self.depth:
            raise ValueError("levels out of range")
        mapping = {c: c for c in self.levels[from_level].cells}
        for lvl in range(from_level, to_level, -1):
            link = self.links[lvl - 1].mapping
            mapping = {c: link[m] for c, m in mapping.items()}
        return mapping

    def composite_morphism(self, from_level: int, to_level: int) -> PartitionMorphism:
        return PartitionMorphism(
            self.levels[from_level],
            self.levels[to_level],
            self.composite_mapping(from_level, to_level),
        )

    def _append_level(self, P: WeightedPartition, link: PartitionMorphism) -> None:
        check_all_in(P.weight_list(), self.V, "level weight")
        if link.source is not P or link.target is not self.top:
            raise ValueError("link must map the new level onto the current top")
        if not verify_morphism(link):
            raise ValueError("link is not a valid morphism")
        self.levels.append(P)
        self.links.append(link)

    def find_level(self, P: WeightedPartition) -> int | None:
        for i, L in enumerate(self.levels):
            if L is P or (L.cells == P.cells and all(L.weight(c) == P.weight(c) for c in P.cells)):
                return i
        return None

    # -- measures and clopen sets ---------------------------------------------

    def measure(self, U: ClopenSet) -> ExactValue:
        P = self.levels[U.level]
        if not U.cells <= set(P.cells):
            raise ValueError("clopen set uses unknown cells")
        total = ZERO
        for c in P.cells:
            if c in U.cells:
                total = total + P.weight(c)
        return total

    def project(self, U: ClopenSet, to_level: int) -> ClopenSet:
        """Rewrite U as a union of cells at a deeper level."""
        if to_level < U.level:
            raise ValueError("can only project to deeper levels")
        anc = self.composite_mapping(to_level, U.level)
        return ClopenSet.of(to_level, (c for c in self.levels[to_level].cells if anc[c] in U.cells))

    def canonicalize(self, U: ClopenSet) -> ClopenSet:
        """Shallowest-level representation of U as a union of cells."""
        level, cells = U.level, set(U.cells)
        while level > 0:
            link = self.links[level - 1]
            parents = {link.mapping[c] for c in cells}
            lifted = {c for c in self.levels[level].cells if link.mapping[c] in parents}
            if lifted != cells:
                break
            level -= 1
            cells = parents
        return ClopenSet.of(level, cells)

    # -- absorption -----------------------------------------------------------

    def _check_object(self, target: WeightedPartition) -> None:
        check_all_in(target.weight_list(), self.V, "challenge weight")
        if target.total != ONE:
            raise SumMismatch(f"object challenge has total {target.total}, expected 1")

    def _collapse(self, P: WeightedPartition) -> PartitionMorphism:
        return PartitionMorphism(P, self.levels[0], {c: ROOT_CELL for c in P.cells})

    def absorb_object(self, target: WeightedPartition) -> int:
        """Extend the chain so the target partition has a lift; returns the stage.

        Challenges already absorbed (same weight multiset) are detected in the
        ledger and do not extend the chain.
        """
        self._check_object(target)
        key = _obj_key(target)
        if key in self._ledger_index:
            return self.ledger[self._ledger_index[key]].stage
        if target.sorted_weight_key() == self.top.sorted_weight_key():
            lift = _weight_matching(self.top, target)
            stage = self.depth
        else:
            G, p1, p2 = amalgamate(self._collapse(self.top), self._collapse(target), self.V)
            self._append_level(G, p1)
            lift = p2
            stage = self.depth
        entry = LedgerEntry("object", key, stage, target, None, None, dict(lift.mapping))
        self._ledger_index[key] = len(self.ledger)
        self.ledger.append(entry)
        return stage

    def absorb_morphism(
        self, challenge: PartitionMorphism, target_level: int | None = None
    ) -> int:
        """Extend the chain with a response r to the challenge A -> P_i.

        Afterwards there is a stage j and a recorded morphism r: P_j -> A with
        challenge ∘ r equal to the chain projection from j to i, verified
        cellwise before returning.
        """
        if target_level is None:
            target_level = self.find_level(challenge.target)
            if target_level is None:
                raise InvalidChallenge("challenge target is not a chain level")
        if not verify_morphism(challenge):
            raise InvalidChallenge("challenge is not a valid morphism")
        check_all_in(challenge.source.weight_list(), self.V, "challenge weight")
        key = _mor_key(target_level, challenge)
        if key in self._ledger_index:
            return self.ledger[self._ledger_index[key]].stage
        level_obj = self.levels[target_level]
        is_identity = challenge.source.cells == level_obj.cells and all(
            challenge.mapping[c] == c for c in level_obj.cells
        )
        if is_identity:
            stage = self.depth
            r = self.composite_morphism(stage, target_level)
        else:
            f1 = self.composite_morphism(self.depth, target_level)
            f2 = PartitionMorphism(challenge.source, level_obj, dict(challenge.mapping))
            G, p1, p2 = amalgamate(f1, f2, self.V)
            self._append_level(G, p1)
            stage = self.depth
            r = p2
        proj = self.composite_mapping(stage, target_level)
        for c in self.levels[stage].cells:
            if challenge.mapping[r.mapping[c]] != proj[c]:
                raise RuntimeError("absorption failed to commute; this is a bug")
        entry = LedgerEntry(
            "morphism", key, stage, challenge.source, target_level,
            dict(challenge.mapping), dict(r.mapping),
        )
        self._ledger_index[key] = len(self.ledger)
        self.ledger.append(entry)
        return stage

    def absorb_morphism_full(
        self, challenge: PartitionMorphism, target_level: int | None = None
    ) -> tuple[int, PartitionMorphism]:
        """absorb_morphism, also returning the recorded response morphism."""
        stage = self.absorb_morphism(challenge, target_level)
        if target_level is None:
            target_level = self.find_level(challenge.target)
        entry = self.ledger[self._ledger_index[_mor_key(target_level, challenge)]]
        r = PartitionMorphism(self.levels[stage], challenge.source, dict(entry.response_map))
        return stage, r

    # -- deterministic schedule -------------------------------------------------

    def _object_challenges(self, height: int) -> list[WeightedPartition]:
        values = self.V.enumerate_values(height + 1)
        out: list[WeightedPartition] = []
        seq: list[int] = []

        def emit() -> None:
            weights = [values[i] for i in seq]
            cells = [(f"x{k}", w) for k, w in enumerate(weights)]
            out.append(WeightedPartition.make(cells))

        def grow(lo: int, acc: ExactValue) -> None:
            if acc == ONE and seq:
                emit()
                return
            if len(seq) == height + 1:
                return
            for i in range(lo, len(values)):
                nxt = acc + values[i]
                if (nxt - ONE).sign() > 0:
                    continue
                seq.append(i)
                grow(i, nxt)
                seq.pop()

        grow(0, ZERO)
        return out

    def run_schedule(self, budget: int) -> "GoodMeasureChain":
        """Absorb all object and morphism challenges up to the given height.

        Objects come before morphisms at each height; the ledger makes the
        schedule idempotent for a fixed budget, and larger budgets only append
        further levels.
        """
        if budget < 1:
            raise ValueError("budget must be >= 1")
        for h in range(1, budget + 1):
            for obj in self._object_challenges(h):
                self.absorb_object(obj)
            lvl = min(h - 1, self.depth)
            P = self.levels[lvl]
            values = self.V.enumerate_values(h + 1)
            for c in P.cells:
                w = P.weight(c)
                for a in values:
                    rest = w - a
                    if (rest - a).sign() < 0 or rest.sign() <= 0:
                        continue
                    R, pi = split_cell(P, c, [a, rest], self.V)
                    self.absorb_morphism(pi, target_level=lvl)
        return self

    # -- goodness witnesses -----------------------------------------------------

    def subset_witness(self, U: ClopenSet, W: ClopenSet) -> ClopenSet:
        """A clopen subset of W with exactly the measure of U.

        Whole top-level cells of W are taken greedily in descending weight;
        at most one cell is split (extending the chain) to hit the measure
        exactly, which the group-like value set always permits.
        """
        mU, mW = self.measure(U), self.measure(W)
        if not (mU - mW).sign() < 0:
            raise NotSmaller(f"measure {mU} is not smaller than {mW}")
        top_level = self.depth
        WT = self.project(W, top_level)
        P = self.levels[top_level]
        order = {c: i for i, c in enumerate(P.cells)}
        cells = _sort_cells_by_weight(
            [(c, P.weight(c)) for c in P.cells if c in WT.cells], order, descending=True
        )
        picked: list[str] = []
        r = mU
        for c, w in cells:
            if r.sign() == 0:
                break
            if (w - r).sign() <= 0:
                picked.append(c)
                r = r - w
            else:
                R, pi = split_cell(P, c, [r, w - r], self.V)
                self._append_level(R, pi)
                picked.append(f"{c}/0")  # whole cells keep their ids in R
                r = ZERO
                top_level = self.depth
                break
        if r.sign() != 0:
            raise RuntimeError("greedy subset accumulation failed; this is a bug")
        return ClopenSet.of(top_level, picked)

    def maximal_partition_witness(self, targets: Sequence[ExactValue]) -> int:
        """Absorb the partition with the given weights; witnesses maximality."""
        check_all_in(targets, self.V, "target")
        total = sum(targets[1:], targets[0])
        if total != ONE:
            raise SumMismatch(f"targets sum to {total}, expected 1")
        obj = WeightedPartition.make([(f"t{k}", w) for k, w in enumerate(targets)])
        return self.absorb_object(obj)

    # -- automorphism prefixes ----------------------------------------------------

    def identity_prefix(self, depth: int | None = None) -> AutomorphismPrefix:
        depth = self.depth if depth is None else depth
        maps = {k: {c: c for c in self.levels[k].cells} for k in range(depth + 1)}
        return AutomorphismPrefix(tuple(range(depth + 1)), maps)

    def prefix_valid(self, sigma: AutomorphismPrefix) -> bool:
        for k in sigma.levels:
            P = self.levels[k]
            m = sigma.maps[k]
            if set(m) != set(P.cells) or set(m.values()) != set(P.cells):
                return False
            if any(P.weight(m[c]) != P.weight(c) for c in P.cells):
                return False
        for lo, hi in zip(sigma.levels, sigma.levels[1:]):
            anc = self.composite_mapping(hi, lo)
            lo_map, hi_map = sigma.maps[lo], sigma.maps[hi]
            if any(anc[hi_map[c]] != lo_map[anc[c]] for c in self.levels[hi].cells):
                return False
        return True

    def extend_partial_isomorphism(
        self, level: int, f: Mapping[str, str]
    ) -> AutomorphismPrefix:
        """Extend a weight-preserving cell bijection to an automorphism prefix.

        The bijection is completed on the rest of its level (equal-weight
        complements always match up), pushed down while it respects fibers,
        and pushed up to the chain top level by level, refining the chain with
        a transport-cycle split whenever child weights fail to align.
        """
        P = self.levels[level]
        if not f:
            raise ValueError("empty partial isomorphism")
        srcs, tgts = list(f), list(f.values())
        if len(set(srcs)) != len(srcs) or len(set(tgts)) != len(tgts):
            raise WeightMismatch("partial isomorphism must be a bijection")
        for c in srcs:
            if c not in P.weights or f[c] not in P.weights:
                raise ValueError(f"unknown cell in partial isomorphism: {c} -> {f[c]}")
            if P.weight(c) != P.weight(f[c]):
                raise WeightMismatch(f"{c} and {f[c]} have different weights")
        sigma = dict(f)
        order = {c: i for i, c in enumerate(P.cells)}
        rest_src = _sort_cells_by_weight(
            [(c, P.weight(c)) for c in P.cells if c not in f], order
        )
        rest_tgt = _sort_cells_by_weight(
            [(c, P.weight(c)) for c in P.cells if c not in set(tgts)], order
        )
        for (a, wa), (b, wb) in zip(rest_src, rest_tgt):
            if wa != wb:
                raise RuntimeError("complement weights fail to match; this is a bug")
            sigma[a] = b
        maps: dict[int, dict[str, str]] = {level: sigma}
        self._descend(maps, level)
        self._ascend_to_top(maps, level)
        return AutomorphismPrefix(tuple(sorted(maps)), maps)

    def _descend(self, maps: dict[int, dict[str, str]], level: int) -> None:
        k = level
        while k > 0:
            link = self.links[k - 1].mapping
            induced: dict[str, str] = {}
            ok = True
            for c, d in maps[k].items():
                p, q = link[c], link[d]
                if induced.setdefault(p, q) != q:
                    ok = False
                    break
            if not ok or len(set(induced.values())) != len(induced):
                break
            maps[k - 1] = induced
            k -= 1

    def _dense_lift(self, sigma: Mapping[str, str], k: int) -> dict[str, str] | None:
        """Lift a level-k bijection to level k+1 by matching child weights, or None."""
        link = self.links[k]
        children: dict[str, list[str]] = {c: [] for c in self.levels[k].cells}
        for c in self.levels[k + 1].cells:
            children[link.mapping[c]].append(c)
        Q = self.levels[k + 1]
        order = {c: i for i, c in enumerate(Q.cells)}
        out: dict[str, str] = {}
        for c, d in sigma.items():
            A = _sort_cells_by_weight([(x, Q.weight(x)) for x in children[c]], order)
            B = _sort_cells_by_weight([(x, Q.weight(x)) for x in children[d]], order)
            if len(A) != len(B) or any(wa != wb for (_, wa), (_, wb) in zip(A, B)):
                return None
            for (x, _), (y, _) in zip(A, B):
                out[x] = y
        return out

    def _transport_split(self, maps: dict[int, dict[str, str]], k: int) -> int:
        """Realize a level-k bijection at (or above) the top via transport cycles.

        Builds the balanced transport of top fibers along the bijection,
        decomposes it into cycles, and either reads off a top-level bijection
        directly (when the transport is a permutation) or appends one new
        level splitting every top cell by the cycles through it.
        """
        T = self.depth
        top = self.levels[T]
        anc = self.composite_mapping(T, k)
        fibers: dict[str, list[str]] = {c: [] for c in self.levels[k].cells}
        for c in top.cells:
            fibers[anc[c]].append(c)
        entries: dict[tuple[str, str], ExactValue] = {}
        for c, d in maps[k].items():
            ys, zs = fibers[c], fibers[d]
            ref = common_refinement(
                [top.weight(y) for y in ys], [top.weight(z) for z in zs], self.V
            )
            owner_l: dict[int, str] = {}
            for i, block in enumerate(ref.left_blocks):
                for s in block:
                    owner_l[s] = ys[i]
            owner_r: dict[int, str] = {}
            for j, block in enumerate(ref.right_blocks):
                for s in block:
                    owner_r[s] = zs[j]
            for s, w in enumerate(ref.parts):
                e = (owner_l[s], owner_r[s])
                entries[e] = entries.get(e, ZERO) + w
        cycles = decompose_entries(entries)
        through: dict[str, list[int]] = {c: [] for c in top.cells}
        succ: list[dict[str, str]] = []
        for ci, (verts, w) in enumerate(cycles):
            succ.append({verts[i]: verts[(i + 1) % len(verts)] for i in range(len(verts))})
            for v in verts:
                through[v].append(ci)
        if all(len(through[c]) == 1 for c in top.cells):
            maps[T] = {c: succ[through[c][0]][c] for c in top.cells}
            return T
        new_cells: list[tuple[str, ExactValue]] = []
        link_map: dict[str, str] = {}
        child_id: dict[tuple[str, int], str] = {}
        for c in top.cells:
            ids = (
                [c] if len(through[c]) == 1 else [f"{c}/{j}" for j in range(len(through[c]))]
            )
            for cid, ci in zip(ids, through[c]):
                new_cells.append((cid, cycles[ci][1]))
                link_map[cid] = c
                child_id[(c, ci)] = cid
        newP = WeightedPartition.make(new_cells)
        self._append_level(newP, PartitionMorphism(newP, top, link_map))
        maps[self.depth] = {
            child_id[(c, ci)]: child_id[(succ[ci][c], ci)]
            for c in top.cells
            for ci in through[c]
        }
        return self.depth

    def _ascend_to_top(self, maps: dict[int, dict[str, str]], start: int) -> int:
        d = start
        while d < self.depth:
            lifted = self._dense_lift(maps[d], d)
            if lifted is not None:
                maps[d + 1] = lifted
                d += 1
            else:
                d = self._transport_split(maps, d)
        return d

    def extend_prefix(self, sigma: AutomorphismPrefix, to_depth: int) -> AutomorphismPrefix:
        """A prefix of depth >= to_depth agreeing with sigma on its levels.

        May refine the chain: transport splits while climbing to the top, and
        orbit splits (every cell and its image split identically) when asked
        to go beyond the current chain depth.
        """
        if to_depth < sigma.depth:
            raise ValueError("to_depth must be at least the current depth")
        maps = {k: dict(sigma.maps[k]) for k in sigma.levels}
        d = sigma.depth
        while d < to_depth:
            if d < self.depth:
                d = self._ascend_to_top(maps, d)
            else:
                d = self._orbit_split(maps, d)
        return AutomorphismPrefix(tuple(sorted(maps)), maps)

    def _orbit_split(self, maps: dict[int, dict[str, str]], d: int) -> int:
        top = self.levels[d]
        sigma = maps[d]
        halves: dict[str, ExactValue] = {}
        seen: set[str] = set()
        for c in top.cells:
            if c in seen:
                continue
            orbit = [c]
            seen.add(c)
            nxt = sigma[c]
            while nxt != c:
                orbit.append(nxt)
                seen.add(nxt)
                nxt = sigma[nxt]
            a = self.V.smallest_below(top.weight(c))
            for x in orbit:
                halves[x] = a
        new_cells: list[tuple[str, ExactValue]] = []
        link_map: dict[str, str] = {}
        for c in top.cells:
            for j, w in enumerate([halves[c], top.weight(c) - halves[c]]):
                cid = f"{c}/{j}"
                new_cells.append((cid, w))
                link_map[cid] = c
        newP = WeightedPartition.make(new_cells)
        self._append_level(newP, PartitionMorphism(newP, top, link_map))
        maps[self.depth] = {
            f"{c}/{j}": f"{sigma[c]}/{j}" for c in top.cells for j in (0, 1)
        }
        return self.depth

    def ensure_depth(self, depth: int) -> None:
        """Append canonical split levels until the chain has the given depth."""
        while self.depth < depth:
            maps = {self.depth: {c: c for c in self.top.cells}}
            self._orbit_split(maps, self.depth)

    def align_prefixes(
        self, prefixes: Sequence[AutomorphismPrefix], rounds: int = 8
    ) -> list[AutomorphismPrefix]:
        """Extend prefixes until they share their top stored level.

        Each extension may refine the chain, which can invalidate the common
        level for the others; the loop is bounded and raises if alignment
        keeps escaping (which cannot happen for the constructions used here).
        """
        ps = list(prefixes)
        for _ in range(rounds):
            d = max(p.depth for p in ps)
            ps = [self.extend_prefix(p, d) if p.depth < d else p for p in ps]
            if len({p.depth for p in ps}) == 1:
                return ps
        raise RuntimeError("could not align prefixes on a common level")

    def compose_prefixes(
        self, outer: AutomorphismPrefix, inner: AutomorphismPrefix
    ) -> AutomorphismPrefix:
        """Prefix of the composite (outer after inner) on their shared levels."""
        outer, inner = self.align_prefixes([outer, inner])
        shared = sorted(set(outer.levels) & set(inner.levels))
        maps = {
            k: {c: outer.maps[k][inner.maps[k][c]] for c in self.levels[k].cells}
            for k in shared
        }
        return AutomorphismPrefix(tuple(shared), maps)

    # -- serialisation -------------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "descriptor": self.V.to_json(),
            "levels": [L.to_json() for L in self.levels],
            "links": [{"map": dict(sorted(l.mapping.items()))} for l in self.links],
            "ledger": [e.to_json() for e in self.ledger],
        }

    @staticmethod
    def from_json(data: Mapping) -> "GoodMeasureChain":
        V = GroupDescriptor.from_json(data["descriptor"])
        chain = GoodMeasureChain(V)
        symbols = V.symbols()
        levels = [WeightedPartition.from_json(d, symbols) for d in data["levels"]]
        chain.levels = levels
        chain.links = [
            PartitionMorphism(levels[i + 1], levels[i], dict(d["map"]))
            for i, d in enumerate(data["links"])
        ]
        for e in data["ledger"]:
            obj = WeightedPartition.from_json(e["challenge"], symbols)
            if e["kind"] == "object":
                entry = LedgerEntry(
                    "object", _obj_key(obj), e["stage"], obj, None, None, dict(e["response"]["map"])
                )
            else:
                cm = dict(e["challenge_map"])
                mor = PartitionMorphism(obj, levels[e["target_level"]], cm)
                entry = LedgerEntry(
                    "morphism", _mor_key(e["target_level"], mor), e["stage"], obj,
                    e["target_level"], cm, dict(e["response"]["map"]),
                )
            chain._ledger_index[entry.key] = len(chain.ledger)
            chain.ledger.append(entry)
        return chain


def new_chain(V: GroupDescriptor) -> GoodMeasureChain:
    return GoodMeasureChain(V)


def _sort_cells_by_weight(
    items: list[tuple[str, ExactValue]], order: Mapping[str, int], descending: bool = False
) -> list[tuple[str, ExactValue]]:
    """Exact-comparison sort by weight (then original cell order)."""
    out = list(items)
    # insertion sort: sizes are small and ExactValue comparisons are exact
    for i in range(1, len(out)):
        j = i
        while j > 0 and _weight_before(out[j], out[j - 1], order, descending):
            out[j - 1], out[j] = out[j], out[j - 1]
            j -= 1
    return out


def _weight_before(a, b, order, descending) -> bool:
    s = (a[1] - b[1]).sign()
    if s != 0:
        return s > 0 if descending else s < 0
    return order[a[0]] < order[b[0]]


def _weight_matching(src: WeightedPartition, dst: WeightedPartition) -> PartitionMorphism:
    """A weight-preserving bijection src -> dst (equal weight multisets required)."""
    so = {c: i for i, c in enumerate(src.cells)}
    do = {c: i for i, c in enumerate(dst.cells)}
    a = _sort_cells_by_weight([(c, src.weight(c)) for c in src.cells], so)
    b = _sort_cells_by_weight([(c, dst.weight(c)) for c in dst.cells], do)
    mapping = {}
    for (x, wx), (y, wy) in zip(a, b):
        if wx != wy:
            raise WeightMismatch("weight multisets differ")
        mapping[x] = y
    return PartitionMorphism(src, dst, mapping)
