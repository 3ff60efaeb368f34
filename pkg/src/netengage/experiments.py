"""Experiment drivers shared by the command line and the acceptance suite.

Every replication derives its random streams from ``(master_seed, rep, purpose)``
with the purposes below, so any replication of a sweep can be rerun alone.
"""

from __future__ import annotations

import itertools
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .anchors import AnchorTrace, PaConfig, greedy_anchored_core, run_anchored
from .cores import k_core, rs_core
from .dynamics import SimConfig, SimTrace, empirical_occupation, run
from .games import (
    GameKind,
    GameSpec,
    Variant,
    is_nash,
    potential,
    utility,
    with_action,
)
from .graphs import (
    Graph,
    ResourceAssignment,
    assign_resources,
    gen_erdos_renyi,
    gen_grid,
    gen_line,
    gen_ring,
    gen_star,
    gen_wheel,
    parse_edge_list,
)
from .rng import make_rng
from .stability import (
    ResistanceGraph,
    gibbs_measure,
    potential_table,
    stationary_distribution,
    total_variation,
)

GRAPH_STREAM, LABEL_STREAM, DYNAMICS_STREAM = 0, 1, 2


# --- graph construction -----------------------------------------------------


@dataclass(frozen=True)
class GraphSpec:
    generator: str = "erdos_renyi"
    n: int = 1000
    p: float = 0.01
    path: Optional[str] = None

    def build(self, seed) -> Graph:
        gen = self.generator
        if gen == "erdos_renyi":
            return gen_erdos_renyi(self.n, self.p, seed)
        if gen == "line":
            return gen_line(self.n)
        if gen == "ring":
            return gen_ring(self.n)
        if gen == "wheel":
            return gen_wheel(self.n)
        if gen == "grid":
            return gen_grid(self.n)
        if gen == "star":
            return gen_star(self.n)
        if gen == "file":
            return parse_edge_list(Path(self.path).read_text())
        raise ValueError(f"unknown generator {gen!r}")

    @property
    def random(self) -> bool:
        return self.generator == "erdos_renyi"


def replicate_graph(spec: GraphSpec, master: int, rep: int) -> Graph:
    return spec.build((master, rep, GRAPH_STREAM))


def replicate_labels(g: Graph, game: GameSpec, master: int, rep: int) -> Optional[ResourceAssignment]:
    if game.kind is not GameKind.NSG:
        return None
    return assign_resources(g, game.r, game.s, (master, rep, LABEL_STREAM))


def core_of(g: Graph, labels, game: GameSpec):
    if game.kind is GameKind.NSG:
        return rs_core(g, labels, game.r)
    return k_core(g, game.k)


def game_label(game: GameSpec) -> str:
    if game.kind is GameKind.NSG:
        return f"nsg_r{game.r}_s{game.s}_a{game.alpha:g}"
    return f"npg_k{game.k}_a{game.alpha:g}"


# --- parallel map -----------------------------------------------------------


def parallel_map(fn: Callable, items: Sequence, workers: Optional[int] = None) -> list:
    """Order-preserving map over a process pool (serial when one worker)."""
    workers = workers or os.cpu_count() or 1
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items))


# --- replicated simulation --------------------------------------------------


@dataclass(frozen=True)
class SimTask:
    graph: GraphSpec
    game: GameSpec
    sim: SimConfig
    master: int
    rep: int
    pa: Optional[PaConfig] = None
    keep_trace: bool = False


@dataclass
class SimOutcome:
    rep: int
    label: str
    initial: str
    steady_size: int
    core_size: int
    final_participation: int
    mean_anchors: float
    peak_anchors: int
    seconds: float
    trace: Optional[SimTrace] = None
    anchor_trace: Optional[AnchorTrace] = None


def simulate_one(task: SimTask) -> SimOutcome:
    t0 = time.perf_counter()
    g = replicate_graph(task.graph, task.master, task.rep)
    labels = replicate_labels(g, task.game, task.master, task.rep)
    sim = replace(task.sim, seed=(task.master, task.rep, DYNAMICS_STREAM))
    anchors = None
    if task.pa is not None:
        trace, anchors = run_anchored(g, labels, task.game.with_variant(Variant.PA_MODULATED), sim, task.pa)
    else:
        trace = run(g, labels, task.game, sim)
    core = core_of(g, labels, task.game)
    window = trace.window
    return SimOutcome(
        rep=task.rep,
        label=game_label(task.game),
        initial=sim.initial if isinstance(sim.initial, str) else "explicit",
        steady_size=trace.steady_size(sim.steady_threshold),
        core_size=core.size,
        final_participation=int(trace.n_participating[-1]),
        mean_anchors=float(trace.n_anchors[-window:].mean()) if window else 0.0,
        peak_anchors=int(trace.n_anchors.max()),
        seconds=time.perf_counter() - t0,
        trace=trace if task.keep_trace else None,
        anchor_trace=anchors if task.keep_trace else None,
    )


@dataclass
class SummaryRow:
    label: str
    initial: str
    replications: int
    steady_mean: float
    steady_std: float
    core_mean: float
    core_std: float
    anchors_mean: float
    seconds_mean: float


def summarize(outcomes: Sequence[SimOutcome]) -> list[SummaryRow]:
    groups: dict[tuple[str, str], list[SimOutcome]] = {}
    for o in outcomes:
        groups.setdefault((o.label, o.initial), []).append(o)
    rows = []
    for (label, initial), grp in groups.items():
        steady = np.array([o.steady_size for o in grp], dtype=float)
        core = np.array([o.core_size for o in grp], dtype=float)
        rows.append(
            SummaryRow(
                label,
                initial,
                len(grp),
                float(steady.mean()),
                float(steady.std(ddof=1)) if len(grp) > 1 else 0.0,
                float(core.mean()),
                float(core.std(ddof=1)) if len(grp) > 1 else 0.0,
                float(np.mean([o.mean_anchors for o in grp])),
                float(np.mean([o.seconds for o in grp])),
            )
        )
    return rows


def replicated(
    graph: GraphSpec,
    games: Iterable[GameSpec],
    sim: SimConfig,
    replications: int,
    master: int,
    initials: Sequence[str] = ("zero",),
    pa: Optional[PaConfig] = None,
    workers: Optional[int] = None,
    keep_trace: bool = False,
) -> list[SimOutcome]:
    if replications < 1:
        raise ValueError("replications must be >= 1")
    tasks = [
        SimTask(graph, game, replace(sim, initial=init), master, rep, pa, keep_trace)
        for game in games
        for init in initials
        for rep in range(replications)
    ]
    return parallel_map(simulate_one, tasks, workers)


def cascade_sizes(graph: GraphSpec, games: Sequence[GameSpec], replications: int, master: int) -> dict[str, list[int]]:
    out: dict[str, list[int]] = {game_label(gm): [] for gm in games}
    for rep in range(replications):
        g = replicate_graph(graph, master, rep)
        for gm in games:
            labels = replicate_labels(g, gm, master, rep)
            out[game_label(gm)].append(core_of(g, labels, gm).size)
    return out


# --- phase transitions on small topologies ----------------------------------


@dataclass(frozen=True)
class PhaseTask:
    graph: Graph
    game: GameSpec
    sim: SimConfig
    tail: int


def _phase_one(task: PhaseTask) -> float:
    trace = run(task.graph, None, task.game, task.sim)
    return float(trace.n_participating[-task.tail :].mean() / task.graph.n)


@dataclass
class PhaseResult:
    alpha: float
    fractions: list[float]
    full_cut: float = 0.9
    empty_cut: float = 0.1

    @property
    def share_full(self) -> float:
        return float(np.mean([f >= self.full_cut for f in self.fractions]))

    @property
    def share_empty(self) -> float:
        return float(np.mean([f <= self.empty_cut for f in self.fractions]))

    @property
    def mean(self) -> float:
        return float(np.mean(self.fractions))


def phase_runs(
    g: Graph,
    k: int,
    alpha: float,
    T: float,
    runs: int,
    iterations: int,
    master: int,
    initial: str = "random",
    tail_fraction: float = 0.1,
    workers: Optional[int] = None,
) -> PhaseResult:
    """Independent runs at one benefit value; each is scored by its mean
    participation fraction over the last ``tail_fraction`` of iterations."""
    tail = max(1, int(iterations * tail_fraction))
    game = GameSpec.npg(k, alpha)
    tasks = [
        PhaseTask(g, game, SimConfig(T, iterations, seed=(master, r, DYNAMICS_STREAM), steady_window=tail, initial=initial), tail)
        for r in range(runs)
    ]
    return PhaseResult(alpha, parallel_map(_phase_one, tasks, workers))


# --- anchors ----------------------------------------------------------------


@dataclass
class BudgetPoint:
    budget: int
    pa_size: float
    greedy_size: float
    pa_anchors: float


def budget_sweep(
    graph: GraphSpec,
    game: GameSpec,
    sim: SimConfig,
    pa: PaConfig,
    budgets: Sequence[int],
    replications: int,
    master: int,
    workers: Optional[int] = None,
    greedy: bool = True,
) -> list[BudgetPoint]:
    points = []
    for b in budgets:
        outs = replicated(graph, [game], sim, replications, master, (sim.initial,), replace(pa, budget=b), workers)
        greedy_sizes = []
        if greedy:
            for rep in range(replications):
                g = replicate_graph(graph, master, rep)
                labels = replicate_labels(g, game, master, rep)
                thr = game.r if game.kind is GameKind.NSG else game.k
                greedy_sizes.append(greedy_anchored_core(g, labels, thr, b, game.kind).size)
        points.append(
            BudgetPoint(
                b,
                float(np.mean([o.steady_size for o in outs])),
                float(np.mean(greedy_sizes)) if greedy_sizes else math.nan,
                float(np.mean([o.mean_anchors for o in outs])),
            )
        )
    return points


# --- oracle checks ----------------------------------------------------------


@dataclass
class CheckResult:
    name: str
    checked: int
    failures: int
    worst: float = 0.0
    counterexample: Optional[str] = None

    @property
    def passed(self) -> bool:
        return self.failures == 0


def random_small_instance(rng: np.random.Generator, kind: GameKind, max_n: int = 10):
    n = int(rng.integers(2, max_n + 1))
    p = float(rng.uniform(0.2, 0.8))
    g = gen_erdos_renyi(n, p, rng)
    alpha = float(rng.uniform(0.1, 3.0))
    if kind is GameKind.NSG:
        r = int(rng.integers(2, 8))
        s = int(rng.integers(1, r + 1))
        game = GameSpec.nsg(r, s, alpha, Variant.GLOBAL_MCU)
        labels = assign_resources(g, r, s, rng)
    else:
        game = GameSpec.npg(int(rng.integers(1, 5)), alpha, Variant.GLOBAL_MCU)
        labels = None
    sigma = tuple(int(x) for x in rng.integers(0, 2, size=n))
    return g, labels, game, sigma


def exact_potential_check(samples: int, seed: int, kind: GameKind, max_n: int = 10) -> CheckResult:
    """|ΔU_i - ΔΦ| over random (graph, profile, player, deviation) samples of the global-MCU game."""
    rng = make_rng(seed, int(kind is GameKind.NSG))
    worst, bad, example = 0.0, 0, None
    for _ in range(samples):
        g, labels, game, sigma = random_small_instance(rng, kind, max_n)
        i = int(rng.integers(g.n))
        a = 1 - sigma[i]
        dev = with_action(sigma, i, a)
        du = utility(g, labels, game, dev, i) - utility(g, labels, game, sigma, i)
        dphi = potential(g, labels, game, dev) - potential(g, labels, game, sigma)
        err = abs(du - dphi)
        if err > worst:
            worst = err
        if err > 1e-9:
            bad += 1
            example = example or f"n={g.n} edges={g.edges()} sigma={sigma} i={i} game={game}"
    return CheckResult(f"exact_potential_{kind.value}", samples, bad, worst, example)


def connected_graphs(max_n: int) -> list[Graph]:
    """All connected simple graphs up to isomorphism with 1..max_n nodes."""
    import networkx as nx

    if max_n > 7:
        raise ValueError("the graph atlas covers up to 7 nodes")
    out = []
    for h in nx.graph_atlas_g():
        if 0 < h.number_of_nodes() <= max_n and nx.is_connected(h):
            out.append(Graph.from_edges(h.number_of_nodes(), h.edges()))
    return out


def best_response_moves(g: Graph, labels, game: GameSpec) -> list[list[int]]:
    """Arcs of the best-response move graph over profile indices: a single
    player switches to an action in its best-response set."""
    n = g.n
    rg = ResistanceGraph(g, labels, game)
    moves: list[list[int]] = [[] for _ in range(1 << n)]
    for idx in range(1 << n):
        for i in range(n):
            if rg.resistance(idx, i) == 0.0:
                moves[idx].append(idx ^ (1 << i))
    return moves


def has_cycle(moves: list[list[int]]) -> bool:
    indeg = [0] * len(moves)
    for outs in moves:
        for v in outs:
            indeg[v] += 1
    stack = [v for v, d in enumerate(indeg) if d == 0]
    seen = 0
    while stack:
        u = stack.pop()
        seen += 1
        for v in moves[u]:
            indeg[v] -= 1
            if indeg[v] == 0:
                stack.append(v)
    return seen != len(moves)


def acyclicity_check(max_n: int = 6, ks: Sequence[int] = (1, 2, 3), alphas: Sequence[float] = (0.5, 1.0)) -> CheckResult:
    checked, bad, example = 0, 0, None
    for g in connected_graphs(max_n):
        for k, alpha in itertools.product(ks, alphas):
            checked += 1
            if has_cycle(best_response_moves(g, None, GameSpec.npg(k, alpha))):
                bad += 1
                example = example or f"n={g.n} edges={g.edges()} k={k} alpha={alpha}"
    return CheckResult("best_response_acyclic", checked, bad, 0.0, example)


def nash_agreement_check(samples: int, seed: int, max_n: int = 8) -> CheckResult:
    """Deviation scan versus the threshold characterization of equilibria."""
    rng = make_rng(seed, 7)
    bad, example = 0, None
    for t in range(samples):
        kind = GameKind.NSG if t % 2 else GameKind.NPG
        g, labels, game, _ = random_small_instance(rng, kind, max_n)
        game = game.with_variant(Variant.BASE)
        for idx in range(1 << g.n):
            sigma = tuple((idx >> i) & 1 for i in range(g.n))
            rep = is_nash(g, labels, game, sigma)
            if rep.is_nash != rep.closed_form:
                bad += 1
                example = example or f"n={g.n} edges={g.edges()} sigma={sigma} game={game}"
    return CheckResult("nash_characterization", samples, bad, 0.0, example)


@dataclass
class StationaryCheck:
    mass_on_argmax: float
    tv: float
    exact: np.ndarray
    empirical: np.ndarray


def stationary_check(g: Graph, game: GameSpec, T: float, steps: int, seed: int, initial="random") -> StationaryCheck:
    exact = stationary_distribution(g, None, game, T)
    phi = potential_table(g, None, game)
    best = np.isclose(phi, phi.max(), rtol=0, atol=1e-12)
    emp = empirical_occupation(g, None, game, T, steps, seed, initial)
    return StationaryCheck(float(exact[best].sum()), total_variation(exact, emp), exact, emp)


def gibbs_residual(g: Graph, labels, game: GameSpec, T: float) -> float:
    """Largest gap between the exact stationary law of the global-MCU chain and exp(Φ/T)."""
    mu = stationary_distribution(g, labels, game, T)
    return float(np.abs(mu - gibbs_measure(potential_table(g, labels, game), T)).max())
