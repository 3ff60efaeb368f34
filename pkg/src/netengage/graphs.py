"""Social-network graphs and per-player resource labelings."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .rng import make_rng


@dataclass(frozen=True)
class Graph:
    """Undirected simple graph on players ``0..n-1`` with sorted adjacency lists."""

    n: int
    adjacency: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if len(self.adjacency) != self.n:
            raise ValueError(f"adjacency has {len(self.adjacency)} rows, expected {self.n}")
        for i, nbrs in enumerate(self.adjacency):
            for j in nbrs:
                if j == i:
                    raise ValueError(f"self-loop at {i}")
                if not 0 <= j < self.n:
                    raise ValueError(f"neighbor {j} of {i} out of range")
            if any(a >= b for a, b in zip(nbrs, nbrs[1:])):
                raise ValueError(f"adjacency of {i} is not strictly sorted")

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]]) -> "Graph":
        nbrs: list[set[int]] = [set() for _ in range(n)]
        for u, v in edges:
            u, v = int(u), int(v)
            if u == v:
                raise ValueError(f"self-loop at {u}")
            nbrs[u].add(v)
            nbrs[v].add(u)
        return cls(n, tuple(tuple(sorted(s)) for s in nbrs))

    def degree(self, i: int) -> int:
        return len(self.adjacency[i])

    @cached_property
    def degrees(self) -> np.ndarray:
        return np.array([len(a) for a in self.adjacency], dtype=np.int64)

    @property
    def n_edges(self) -> int:
        return int(self.degrees.sum()) // 2

    def edges(self) -> list[tuple[int, int]]:
        return [(u, v) for u in range(self.n) for v in self.adjacency[u] if u < v]

    @cached_property
    def csr(self) -> tuple[np.ndarray, np.ndarray]:
        """(indptr, indices) arrays for the compiled kernels."""
        indptr = np.zeros(self.n + 1, dtype=np.int64)
        np.cumsum(self.degrees, out=indptr[1:])
        indices = np.fromiter(
            (j for nbrs in self.adjacency for j in nbrs), dtype=np.int64, count=int(indptr[-1])
        )
        return indptr, indices

    @cached_property
    def neighbor_masks(self) -> tuple[int, ...]:
        """Bitmask of each player's neighborhood; profile bit i is player i."""
        return tuple(sum(1 << j for j in nbrs) for nbrs in self.adjacency)


@dataclass(frozen=True)
class ResourceAssignment:
    """Each player holds ``s`` of the ``r`` resources ``0..r-1``."""

    r: int
    s: int
    labels: tuple[frozenset[int], ...]

    def __post_init__(self):
        if self.s > self.r:
            raise ValueError(f"s={self.s} exceeds r={self.r}")
        for i, lab in enumerate(self.labels):
            if len(lab) != self.s or any(not 0 <= x < self.r for x in lab):
                raise ValueError(f"label set of player {i} is not an s-subset of 0..r-1: {sorted(lab)}")

    @property
    def n(self) -> int:
        return len(self.labels)

    @cached_property
    def label_array(self) -> np.ndarray:
        """(n, s) int array of sorted resource ids."""
        out = np.zeros((self.n, self.s), dtype=np.int64)
        for i, lab in enumerate(self.labels):
            out[i] = sorted(lab)
        return out

    def local_pool(self, g: Graph, i: int) -> frozenset[int]:
        """Resources held anywhere in the closed neighborhood of ``i``."""
        pool = set(self.labels[i])
        for j in g.adjacency[i]:
            pool |= self.labels[j]
        return frozenset(pool)


# --- generators -----------------------------------------------------------


def gen_erdos_renyi(n: int, p: float, seed) -> Graph:
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"edge probability must lie in [0, 1], got {p}")
    rng = make_rng(seed)
    iu, ju = np.triu_indices(n, k=1)
    keep = rng.random(iu.size) < p
    return Graph.from_edges(n, zip(iu[keep].tolist(), ju[keep].tolist()))


def gen_line(n: int) -> Graph:
    if n < 2:
        raise ValueError("line graph needs n >= 2")
    return Graph.from_edges(n, ((i, i + 1) for i in range(n - 1)))


def gen_ring(n: int) -> Graph:
    if n < 3:
        # a 2-ring would need a doubled edge
        raise ValueError("ring graph needs n >= 3")
    return Graph.from_edges(n, ((i, (i + 1) % n) for i in range(n)))


def gen_wheel(n: int) -> Graph:
    """Hub 0 joined to every node of a ring on ``1..n-1``."""
    if n < 4:
        raise ValueError("wheel graph needs n >= 4")
    rim = n - 1
    edges = [(0, j) for j in range(1, n)]
    edges += [(1 + i, 1 + (i + 1) % rim) for i in range(rim)]
    return Graph.from_edges(n, edges)


def gen_grid(m: int) -> Graph:
    """Non-wrapping m x m lattice; node (row, col) has index row*m + col."""
    if m < 2:
        raise ValueError("grid needs m >= 2")
    edges = []
    for r in range(m):
        for c in range(m):
            v = r * m + c
            if c + 1 < m:
                edges.append((v, v + 1))
            if r + 1 < m:
                edges.append((v, v + m))
    return Graph.from_edges(m * m, edges)


def gen_star(leaves: int) -> Graph:
    return Graph.from_edges(leaves + 1, ((0, j) for j in range(1, leaves + 1)))


def assign_resources(g: Graph, r: int, s: int, seed) -> ResourceAssignment:
    if s > r:
        raise ValueError(f"s={s} exceeds r={r}")
    if s < 1:
        raise ValueError("s must be >= 1")
    rng = make_rng(seed)
    # argsort of iid uniforms gives a uniform random permutation per row
    picks = np.argsort(rng.random((g.n, r)), axis=1)[:, :s]
    return ResourceAssignment(r, s, tuple(frozenset(row.tolist()) for row in picks))


# --- text formats ---------------------------------------------------------


def format_edge_list(g: Graph) -> str:
    edges = g.edges()
    lines = [f"{g.n} {len(edges)}"] + [f"{u} {v}" for u, v in edges]
    return "\n".join(lines) + "\n"


def parse_edge_list(text: str) -> Graph:
    rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not rows:
        raise ValueError("empty edge list")
    n, m = (int(x) for x in rows[0])
    body = rows[1:]
    if len(body) != m:
        raise ValueError(f"header announces {m} edges, found {len(body)}")
    edges = []
    for row in body:
        u, v = int(row[0]), int(row[1])
        if not u < v:
            raise ValueError(f"edge lines must satisfy u < v, got {u} {v}")
        edges.append((u, v))
    g = Graph.from_edges(n, edges)
    if g.n_edges != m:
        raise ValueError("duplicate edges in edge list")
    return g


def format_resources(labels: ResourceAssignment) -> str:
    return "".join(f"{i}: {','.join(str(x) for x in sorted(lab))}\n" for i, lab in enumerate(labels.labels))


def parse_resources(text: str, r: int) -> ResourceAssignment:
    sets: list[frozenset[int]] = []
    for ln in text.splitlines():
        if not ln.strip() or ln.lstrip().startswith("#"):
            continue
        head, _, tail = ln.partition(":")
        if int(head) != len(sets):
            raise ValueError(f"resource lines must be in player order, got {head}")
        sets.append(frozenset(int(x) for x in tail.split(",") if x.strip()))
    sizes = {len(x) for x in sets}
    if len(sizes) != 1:
        raise ValueError("all players must hold the same number of resources")
    return ResourceAssignment(r, sizes.pop(), tuple(sets))


def induced_subgraph(g: Graph, keep: Sequence[int]) -> tuple[Graph, list[int]]:
    """Subgraph on ``keep`` relabelled to 0..len(keep)-1, plus the old ids."""
    old = sorted(set(keep))
    new_of = {v: i for i, v in enumerate(old)}
    edges = [(new_of[u], new_of[v]) for u in old for v in g.adjacency[u] if v in new_of and u < v]
    return Graph.from_edges(len(old), edges), old
