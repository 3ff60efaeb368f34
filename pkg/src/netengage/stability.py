"""Stochastic stability by exhaustive search over the profile space.

Profiles are encoded as integers with bit ``i`` holding player ``i``'s
action. Every single-player deviation is an arc weighted by its resistance,
the gap between the deviator's best achievable utility and the utility of the
action it moves to. Minimum-resistance paths come from Dijkstra's algorithm,
and the stability measures are read off those distances.
"""

from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .games import GameKind, GameSpec, Variant, utility, with_action
from .graphs import Graph, ResourceAssignment

MAX_PLAYERS = 14
MAX_PLAYERS_STATIONARY = 10
ZERO_TOL = 1e-12


def profile_index(sigma: Sequence[int]) -> int:
    return sum(1 << i for i, a in enumerate(sigma) if a)


def index_profile(idx: int, n: int) -> tuple[int, ...]:
    return tuple((idx >> i) & 1 for i in range(n))


def transition_resistance(
    g: Graph, labels: Optional[ResourceAssignment], spec: GameSpec, sigma: Sequence[int], sigma_prime: Sequence[int]
) -> float:
    diff = [i for i, (a, b) in enumerate(zip(sigma, sigma_prime)) if a != b]
    if len(sigma) != len(sigma_prime) or len(diff) != 1:
        raise ValueError("profiles must differ in exactly one player")
    i = diff[0]
    u = {a: utility(g, labels, spec, with_action(sigma, i, a), i) for a in (0, 1)}
    return max(u.values()) - u[sigma_prime[i]]


class ResistanceGraph:
    """All 2^n profiles with single-deviation arcs weighted by resistance.

    ``gain[idx, i]`` is player i's utility of participating minus abstaining
    with everyone else as in ``idx``; abstaining pays zero in every variant
    handled here, so the resistance of moving i to action ``a`` is
    ``max(gain, 0) - gain`` when ``a = 1`` and ``max(gain, 0)`` when ``a = 0``.
    """

    def __init__(self, g: Graph, labels: Optional[ResourceAssignment], spec: GameSpec, limit: int = MAX_PLAYERS):
        if g.n > limit:
            raise ValueError(f"state space of 2^{g.n} profiles exceeds the guard n <= {limit}")
        if spec.variant is Variant.PA_MODULATED:
            raise ValueError("resistance analysis covers the base and global-MCU games")
        self.g, self.labels, self.spec, self.n = g, labels, spec, g.n
        self.size = 1 << g.n
        self.gain = self._gains()

    def _gains(self) -> np.ndarray:
        n, g, spec = self.n, self.g, self.spec
        out = np.zeros((self.size, n))
        if spec.kind is GameKind.NPG and spec.variant is Variant.BASE:
            masks = g.neighbor_masks
            for idx in range(self.size):
                for i in range(n):
                    c = (idx & masks[i]).bit_count()
                    d = len(g.adjacency[i])
                    out[idx, i] = spec.alpha if c >= spec.k else (-float(spec.k) if d == 0 else (c - spec.k) / d)
            return out
        for idx in range(self.size):
            sigma = index_profile(idx, n)
            for i in range(n):
                out[idx, i] = utility(self.g, self.labels, spec, with_action(sigma, i, 1), i)
        return out

    def resistance(self, idx: int, i: int) -> float:
        """Resistance of player ``i`` flipping its action in profile ``idx``."""
        gn = self.gain[idx, i]
        best = gn if gn > 0 else 0.0
        return best - gn if (idx >> i) & 1 == 0 else best

    def is_strict_nash(self, idx: int) -> bool:
        return all(self.resistance(idx, i) > ZERO_TOL for i in range(self.n))

    def strict_equilibria(self) -> list[int]:
        return [idx for idx in range(self.size) if self.is_strict_nash(idx)]

    def dijkstra(self, source: int, reverse: bool = False) -> tuple[np.ndarray, np.ndarray]:
        """Distances from ``source`` (or to it, with ``reverse``) plus predecessor links."""
        dist = np.full(self.size, math.inf)
        pred = np.full(self.size, -1, dtype=np.int64)
        dist[source] = 0.0
        heap = [(0.0, source)]
        while heap:
            d, u = heapq.heappop(heap)
            if d > dist[u]:
                continue
            for i in range(self.n):
                v = u ^ (1 << i)
                # forward arc u -> v, or for the reverse search arc v -> u
                w = self.resistance(v, i) if reverse else self.resistance(u, i)
                nd = d + w
                if nd < dist[v]:
                    dist[v] = nd
                    pred[v] = u
                    heapq.heappush(heap, (nd, v))
        return dist, pred

    def basin(self, target: int) -> set[int]:
        """Profiles with a zero-resistance path into ``target``."""
        seen = {target}
        stack = [target]
        while stack:
            u = stack.pop()
            for i in range(self.n):
                v = u ^ (1 << i)
                if v not in seen and self.resistance(v, i) <= ZERO_TOL:
                    seen.add(v)
                    stack.append(v)
        return seen


def _walk(pred: np.ndarray, start: int, end: int) -> list[int]:
    path = [end]
    while path[-1] != start:
        p = int(pred[path[-1]])
        if p < 0:
            return []
        path.append(p)
    return path[::-1]


def min_resistance(
    g: Graph, labels: Optional[ResourceAssignment], spec: GameSpec, sigma_from: Sequence[int], sigma_to: Sequence[int]
) -> tuple[float, list[int]]:
    """Minimum summed resistance from one profile to another, with a witness path of profile indices."""
    rg = ResistanceGraph(g, labels, spec)
    a, b = profile_index(sigma_from), profile_index(sigma_to)
    if a == b:
        return 0.0, []
    dist, pred = rg.dijkstra(a)
    return float(dist[b]), _walk(pred, a, b)


def basin_of_attraction(g: Graph, labels: Optional[ResourceAssignment], spec: GameSpec, sigma: Sequence[int]) -> set[int]:
    return ResistanceGraph(g, labels, spec).basin(profile_index(sigma))


@dataclass
class EquilibriumStability:
    profile: int
    radius: float
    coradius: float
    basin_size: int
    radius_path: list[int] = field(default_factory=list)
    coradius_path: list[int] = field(default_factory=list)

    @property
    def stable(self) -> bool:
        return self.radius > self.coradius


@dataclass
class RdCrReport:
    n: int
    equilibria: list[EquilibriumStability]

    def verdict(self) -> list[int]:
        return [e.profile for e in self.equilibria if e.stable]

    def get(self, idx: int) -> EquilibriumStability:
        for e in self.equilibria:
            if e.profile == idx:
                return e
        raise KeyError(f"profile {idx} is not a strict equilibrium")

    def to_json(self) -> str:
        def num(x):
            return "inf" if math.isinf(x) else x

        return json.dumps(
            {
                "n": self.n,
                "equilibria": [
                    {
                        "profile": e.profile,
                        "radius": num(e.radius),
                        "coradius": num(e.coradius),
                        "basin_size": e.basin_size,
                        "stable": e.stable,
                        "radius_path": e.radius_path,
                        "coradius_path": e.coradius_path,
                    }
                    for e in self.equilibria
                ],
            },
            indent=2,
        )


def _stability_of(rg: ResistanceGraph, target: int, equilibria: list[int]) -> EquilibriumStability:
    basin = rg.basin(target)
    dist, pred = rg.dijkstra(target)
    rd, rd_to = math.inf, None
    for v in range(rg.size):
        if v not in basin and dist[v] < rd:
            rd, rd_to = float(dist[v]), v
    rdist, rpred = rg.dijkstra(target, reverse=True)
    cr, cr_from = 0.0, None
    for e in equilibria:
        if e not in basin and rdist[e] > cr:
            cr, cr_from = float(rdist[e]), e
    rd_path = _walk(pred, target, rd_to) if rd_to is not None else []
    cr_path = []
    if cr_from is not None:
        # reverse predecessors point one step closer to the target
        cr_path = [cr_from]
        while cr_path[-1] != target:
            cr_path.append(int(rpred[cr_path[-1]]))
    return EquilibriumStability(target, rd, cr, len(basin), rd_path, cr_path)


def radius(g: Graph, labels, spec: GameSpec, sigma: Sequence[int]) -> float:
    rg = ResistanceGraph(g, labels, spec)
    return _stability_of(rg, profile_index(sigma), rg.strict_equilibria()).radius


def coradius(g: Graph, labels, spec: GameSpec, sigma: Sequence[int]) -> float:
    rg = ResistanceGraph(g, labels, spec)
    return _stability_of(rg, profile_index(sigma), rg.strict_equilibria()).coradius


def rd_cr_report(g: Graph, labels: Optional[ResourceAssignment], spec: GameSpec) -> RdCrReport:
    """Stability summary of every strict equilibrium."""
    rg = ResistanceGraph(g, labels, spec)
    eq = rg.strict_equilibria()
    return RdCrReport(g.n, [_stability_of(rg, e, eq) for e in eq])


# --- closed-form thresholds -----------------------------------------------


@dataclass(frozen=True)
class ThresholdReport:
    topology: str
    size: int
    alpha_th: Optional[float] = None
    upper_printed: Optional[float] = None
    upper_derived: Optional[float] = None
    lower: Optional[float] = None


def alpha_thresholds(topology: str, size: int) -> ThresholdReport:
    """Benefit values at which full participation becomes stochastically stable (k = 2).

    Ring and wheel have a single threshold. For the m x m grid, full
    participation is stable above the upper value and non-participation below
    the lower one; the upper value is given in two forms, with the boundary
    count weighted by 1/4 and by 1/2.
    """
    topology = topology.lower()
    if topology == "ring":
        if size < 3:
            raise ValueError("ring needs n >= 3")
        return ThresholdReport("ring", size, alpha_th=size / 2)
    if topology == "wheel":
        if size < 4:
            raise ValueError("wheel needs n >= 4")
        return ThresholdReport("wheel", size, alpha_th=1 / (size - 1) + 1 / 6)
    if topology == "grid":
        m = size
        if m < 4:
            raise ValueError("grid thresholds need m >= 4")
        printed = (7 / 3 + (m - 4) / 4) / (m - 1)
        derived = (7 / 3 + (m - 4) / 2) / (m - 1)
        lower = 1 / ((m - 1) + 2 * sum(m - y for y in range(3, m - 1, 2)))
        return ThresholdReport("grid", m, upper_printed=printed, upper_derived=derived, lower=lower)
    raise ValueError(f"unknown topology {topology!r}")


# --- exact stationary distribution ------------------------------------------


def transition_matrix(g: Graph, labels: Optional[ResourceAssignment], spec: GameSpec, T: float) -> np.ndarray:
    """Row-stochastic matrix of the log-linear chain over all profiles."""
    if not T > 0:
        raise ValueError("temperature must be positive")
    rg = ResistanceGraph(g, labels, spec, limit=MAX_PLAYERS_STATIONARY)
    n, size = rg.n, rg.size
    P = np.zeros((size, size))
    for idx in range(size):
        for i in range(n):
            gn = rg.gain[idx, i]
            # probability of choosing action 1, max-shifted
            p1 = 1.0 / (1.0 + math.exp(-gn / T)) if gn >= 0 else math.exp(gn / T) / (1.0 + math.exp(gn / T))
            p_flip = (1.0 - p1) if (idx >> i) & 1 else p1
            P[idx, idx ^ (1 << i)] += p_flip / n
        P[idx, idx] = 1.0 - P[idx].sum()
    return P


def stationary_distribution(g: Graph, labels: Optional[ResourceAssignment], spec: GameSpec, T: float) -> np.ndarray:
    P = transition_matrix(g, labels, spec, T)
    size = P.shape[0]
    A = P.T - np.eye(size)
    A[-1, :] = 1.0
    rhs = np.zeros(size)
    rhs[-1] = 1.0
    mu = np.linalg.solve(A, rhs)
    mu = np.clip(mu, 0.0, None)
    return mu / mu.sum()


def gibbs_measure(values: np.ndarray, T: float) -> np.ndarray:
    w = np.exp((values - values.max()) / T)
    return w / w.sum()


def potential_table(g: Graph, labels: Optional[ResourceAssignment], spec: GameSpec) -> np.ndarray:
    from .games import potential

    return np.array([potential(g, labels, spec, index_profile(idx, g.n)) for idx in range(1 << g.n)])


def total_variation(p: np.ndarray, q: np.ndarray) -> float:
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())
