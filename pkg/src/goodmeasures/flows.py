"""Greedy decomposition of equi-summed nonnegative matrices into directed cycles.

Shared by the chain engine (transport refinement) and the balanced-matrix
module.  Entries are keyed by (from, to) vertex pairs; vertices are strings.
The peeling order is deterministic: walks start at the smallest vertex with an
outgoing edge and always follow the smallest successor.
"""

from __future__ import annotations

from typing import Mapping, Sequence

from .errors import NotEquiSummed
from .values import ExactValue, ZERO


def check_equi_summed(entries: Mapping[tuple[str, str], ExactValue]) -> None:
    """Raise NotEquiSummed unless all row sums equal the matching column sums."""
    rows: dict[str, ExactValue] = {}
    cols: dict[str, ExactValue] = {}
    for (a, b), w in entries.items():
        if w.sign() < 0:
            raise NotEquiSummed(f"negative entry at ({a},{b})")
        rows[a] = rows.get(a, ZERO) + w
        cols[b] = cols.get(b, ZERO) + w
    for v in set(rows) | set(cols):
        if rows.get(v, ZERO) != cols.get(v, ZERO):
            raise NotEquiSummed(f"row/column sums differ at {v}")


def _canonical_rotation(vertices: Sequence[str]) -> tuple[str, ...]:
    k = min(range(len(vertices)), key=lambda i: vertices[i])
    return tuple(vertices[k:]) + tuple(vertices[:k])


def decompose_entries(
    entries: Mapping[tuple[str, str], ExactValue]
) -> list[tuple[tuple[str, ...], ExactValue]]:
    """Peel directed cycles off an equi-summed matrix until nothing remains.

    Returns (vertices, weight) pairs whose cycle matrices sum back to the
    input exactly; at most one cycle per nonzero entry is produced.  Cycles
    are rotated to start at their smallest vertex.
    """
    check_equi_summed(entries)
    rest = {e: w for e, w in entries.items() if w.sign() > 0}
    out: list[tuple[tuple[str, ...], ExactValue]] = []
    while rest:
        succ: dict[str, list[str]] = {}
        for a, b in rest:
            succ.setdefault(a, []).append(b)
        for a in succ:
            succ[a].sort()
        start = min(succ)
        path = [start]
        seen = {start: 0}
        while True:
            nxt = succ[path[-1]][0]
            if nxt in seen:
                cycle = path[seen[nxt]:]
                break
            seen[nxt] = len(path)
            path.append(nxt)
        edges = [(cycle[i], cycle[(i + 1) % len(cycle)]) for i in range(len(cycle))]
        w = rest[edges[0]]
        for e in edges[1:]:
            if (rest[e] - w).sign() < 0:
                w = rest[e]
        for e in edges:
            left = rest[e] - w
            if left.sign() == 0:
                del rest[e]
            else:
                rest[e] = left
        out.append((_canonical_rotation(cycle), w))
    return out
