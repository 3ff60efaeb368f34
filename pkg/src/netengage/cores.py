"""Cascading withdrawal: k-cores and (r,s)-cores, optionally with anchors.

Both cores are computed by round-synchronous peeling. Each round removes
every player violating its condition given the survivors of the previous
round, which is the cascade timeline a full-participation start produces
when everyone re-evaluates at once. Work per round is proportional to the
neighborhoods of the players removed in the round before.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .graphs import Graph, ResourceAssignment


@dataclass(frozen=True)
class CoreResult:
    survivors: frozenset[int]
    removals_per_round: tuple[int, ...]
    n: int

    @property
    def size(self) -> int:
        return len(self.survivors)

    def remaining(self) -> list[int]:
        """Remaining player count after each round, starting with round 0 (everyone)."""
        out = [self.n]
        for r in self.removals_per_round:
            out.append(out[-1] - r)
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["round", "remaining_count"])
        for t, c in enumerate(self.remaining()):
            w.writerow([t, c])
        return buf.getvalue()


def _peel(n: int, adjacency, violates, on_remove, anchors: Iterable[int], order: Optional[Sequence[int]]) -> CoreResult:
    pinned = set(anchors)
    alive = [True] * n
    scan = list(order) if order is not None else range(n)
    if order is not None and sorted(scan) != list(range(n)):
        raise ValueError("order must be a permutation of the players")
    frontier = [v for v in scan if v not in pinned and violates(v)]
    rounds: list[int] = []
    while frontier:
        for v in frontier:
            alive[v] = False
        rounds.append(len(frontier))
        touched: list[int] = []
        seen = set()
        for v in frontier:
            for u in adjacency[v]:
                if alive[u]:
                    on_remove(v, u)
                    if u not in seen:
                        seen.add(u)
                        touched.append(u)
        frontier = [u for u in touched if u not in pinned and violates(u)]
    return CoreResult(frozenset(v for v in range(n) if alive[v]), tuple(rounds), n)


def k_core(g: Graph, k: int, anchors: Iterable[int] = (), order: Optional[Sequence[int]] = None) -> CoreResult:
    """Maximal set where every non-anchor has at least ``k`` neighbors inside the set.

    ``order`` only changes the order in which players are examined; the
    surviving set does not depend on it.
    """
    if k < 0:
        raise ValueError("k must be non-negative")
    deg = [len(a) for a in g.adjacency]

    def violates(v):
        return deg[v] < k

    def on_remove(v, u):
        deg[u] -= 1

    return _peel(g.n, g.adjacency, violates, on_remove, anchors, order)


def rs_core(
    g: Graph,
    labels: ResourceAssignment,
    r: int,
    anchors: Iterable[int] = (),
    order: Optional[Sequence[int]] = None,
) -> CoreResult:
    """Maximal set where every non-anchor reaches ``r`` distinct resources
    through itself and its neighbors inside the set."""
    if labels.n != g.n:
        raise ValueError("resource assignment does not match the graph")
    if r < 0:
        raise ValueError("r must be non-negative")
    lab = labels.labels
    counts: list[dict[int, int]] = []
    for v in range(g.n):
        c: dict[int, int] = {}
        for x in lab[v]:
            c[x] = c.get(x, 0) + 1
        for u in g.adjacency[v]:
            for x in lab[u]:
                c[x] = c.get(x, 0) + 1
        counts.append(c)

    def violates(v):
        return len(counts[v]) < r

    def on_remove(v, u):
        c = counts[u]
        for x in lab[v]:
            c[x] -= 1
            if not c[x]:
                del c[x]

    return _peel(g.n, g.adjacency, violates, on_remove, anchors, order)


def naive_core(g: Graph, satisfied, anchors: Iterable[int] = ()) -> frozenset[int]:
    """Full-recomputation peel; ``satisfied(v, alive_set)`` decides survival."""
    pinned = set(anchors)
    alive = set(range(g.n))
    while True:
        drop = {v for v in alive if v not in pinned and not satisfied(v, alive)}
        if not drop:
            return frozenset(alive)
        alive -= drop
