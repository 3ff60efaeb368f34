"""Log-linear learning over action profiles.

Two engines drive the chain. The compiled one (``run``) handles the base and
global-MCU games; the pure-Python one (:class:`ChainState` plus
``run_python``) additionally accepts Principal-Agent hooks and is what the
anchor protocol uses. Both consume the same random stream in the same order,
so for the same seed they produce identical trajectories.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterator, Mapping, Optional, Sequence, Union

import numpy as np

from . import _kernels as K
from .games import (
    GameKind,
    GameSpec,
    Variant,
    action_utilities,
    nsg_payoff,
    npg_payoff,
    potential,
    with_action,
)
from .graphs import Graph, ResourceAssignment
from .rng import make_rng

CHUNK = 1 << 18

Initial = Union[str, Sequence[int]]


@dataclass(frozen=True)
class SimConfig:
    temperature: float
    iterations: int
    seed: int = 0
    steady_window: int = 30_000
    steady_threshold: float = 0.95
    initial: Initial = "zero"
    record: bool = True

    def __post_init__(self):
        if not self.temperature > 0:
            raise ValueError(f"temperature must be positive, got {self.temperature}")
        if self.iterations < 0:
            raise ValueError("iterations must be non-negative")
        if not 0 < self.steady_window <= max(self.iterations, 1) and self.iterations > 0:
            raise ValueError(f"steady_window must lie in [1, iterations], got {self.steady_window}")
        if not 0 < self.steady_threshold <= 1:
            raise ValueError(f"steady_threshold must lie in (0, 1], got {self.steady_threshold}")
        if isinstance(self.initial, str) and self.initial not in ("zero", "one", "random"):
            raise ValueError(f"unknown initial condition {self.initial!r}")


@dataclass
class SimTrace:
    """Per-iteration records; index 0 is the initial state.

    With recording off only the initial and final entries are kept.
    """

    n_participating: np.ndarray
    n_anchors: np.ndarray
    potential: np.ndarray
    frequencies: np.ndarray
    final: np.ndarray
    window: int
    iterations: Optional[int] = None

    def __post_init__(self):
        if self.iterations is None:
            self.iterations = len(self.n_participating) - 1

    def membership(self, threshold: float) -> np.ndarray:
        return classify_steady_state(self, threshold)

    def steady_size(self, threshold: float) -> int:
        return int(self.membership(threshold).sum())


# --- probabilities and the single step ------------------------------------


def lll_probabilities(utilities_by_action: Mapping[int, float], T: float) -> dict[int, float]:
    if not T > 0:
        raise ValueError(f"temperature must be positive, got {T}")
    if not utilities_by_action:
        raise ValueError("no actions")
    best = max(utilities_by_action.values())
    w = {a: math.exp(-(best - u) / T) for a, u in utilities_by_action.items()}
    z = sum(w.values())
    return {a: x / z for a, x in w.items()}


def lll_step(
    g: Graph,
    labels: Optional[ResourceAssignment],
    spec: GameSpec,
    sigma: Sequence[int],
    pa_state,
    T: float,
    rng,
) -> tuple[tuple[int, ...], int]:
    """One revision: a uniformly drawn player resamples its action.

    Recomputes every utility from scratch; used as the reference for the
    incremental engines. ``pa_state`` must be given exactly when the game is
    PA-modulated.
    """
    if (pa_state is not None) != (spec.variant is Variant.PA_MODULATED):
        raise ValueError("a PA state is required iff the variant is PA-modulated")
    i = int(rng.integers(g.n))
    flag = 0
    if pa_state is not None:
        from .anchors import pa_decide

        flag = pa_decide(g, labels, spec, sigma, pa_state, i)
    probs = lll_probabilities(action_utilities(g, labels, spec, sigma, i, flag), T)
    a = 1 if rng.random() < probs[1] else 0
    out = with_action(sigma, i, a)
    if pa_state is not None:
        from .anchors import pa_after_action, pa_reassess

        pa_after_action(pa_state, i, a)
        if pa_state.t % pa_state.config.t_u == 0:
            pa_reassess(g, labels, spec, out, pa_state, pa_state.t)
    return out, i


def classify_steady_state(trace: SimTrace, threshold: float) -> np.ndarray:
    """Players participating in strictly more than ``threshold`` of the trailing window."""
    if trace.iterations < trace.window:
        raise ValueError("trace is shorter than its steady window")
    return trace.frequencies > threshold


# --- shared random stream -------------------------------------------------


def initial_profile(initial: Initial, n: int, rng: np.random.Generator) -> np.ndarray:
    if isinstance(initial, str):
        if initial == "zero":
            return np.zeros(n, dtype=np.int8)
        if initial == "one":
            return np.ones(n, dtype=np.int8)
        if initial == "random":
            return rng.integers(0, 2, size=n).astype(np.int8)
        raise ValueError(f"unknown initial condition {initial!r}")
    prof = np.asarray(initial, dtype=np.int8)
    if prof.shape != (n,) or not np.isin(prof, (0, 1)).all():
        raise ValueError("explicit initial profile must be a 0/1 vector of length n")
    return prof.copy()


def random_stream(rng: np.random.Generator, n: int, iterations: int) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """(players, uniforms) chunks; both engines draw in exactly this order."""
    done = 0
    while done < iterations:
        m = min(CHUNK, iterations - done)
        yield rng.integers(0, n, size=m), rng.random(m)
        done += m


# --- incremental Python engine --------------------------------------------


class ChainState:
    """Mutable profile plus the neighbor counts needed for O(degree) updates."""

    def __init__(self, g: Graph, labels: Optional[ResourceAssignment], spec: GameSpec, sigma: Sequence[int]):
        self.g = g
        self.spec = spec
        self.adj = g.adjacency
        self.deg = [len(a) for a in g.adjacency]
        self.sigma = [int(x) for x in sigma]
        self.n_on = sum(self.sigma)
        self.nsg = spec.kind is GameKind.NSG
        if self.nsg:
            self.labs = [sorted(x) for x in labels.labels]
            self.own = [set(x) for x in labels.labels]
            self.pool = [len(labels.local_pool(g, i)) for i in range(g.n)]
            self.nbcnt = [[0] * spec.r for _ in range(g.n)]
            for j in range(g.n):
                if self.sigma[j]:
                    for i in self.adj[j]:
                        for res in self.labs[j]:
                            self.nbcnt[i][res] += 1
            self.acc = [
                sum(1 for res in range(spec.r) if self.nbcnt[i][res] > 0 or res in self.own[i]) for i in range(g.n)
            ]
        else:
            self.npart = [sum(self.sigma[j] for j in self.adj[i]) for i in range(g.n)]
        self.potential = potential(g, labels, spec, self.sigma)

    def join_utility(self, i: int) -> float:
        """Base utility of participating, given everyone else's current action."""
        if self.nsg:
            return nsg_payoff(self.acc[i], self.pool[i], self.spec.r, self.spec.alpha)
        return npg_payoff(self.npart[i], self.deg[i], self.spec.k, self.spec.alpha)

    def impact(self, i: int) -> float:
        """Total change of participating neighbors' base utilities if i participates."""
        sigma = self.sigma
        cur = sigma[i]
        tot = 0.0
        if self.nsg:
            r, alpha, own, nbcnt, labs_i = self.spec.r, self.spec.alpha, self.own, self.nbcnt, self.labs[i]
            for j in self.adj[i]:
                if sigma[j]:
                    row, ownj = nbcnt[j], own[j]
                    if cur:
                        with_i = self.acc[j]
                        without_i = with_i - sum(1 for res in labs_i if row[res] == 1 and res not in ownj)
                    else:
                        without_i = self.acc[j]
                        with_i = without_i + sum(1 for res in labs_i if row[res] == 0 and res not in ownj)
                    pj = self.pool[j]
                    tot += nsg_payoff(with_i, pj, r, alpha) - nsg_payoff(without_i, pj, r, alpha)
            return tot
        k, alpha, npart, deg = self.spec.k, self.spec.alpha, self.npart, self.deg
        for j in self.adj[i]:
            if sigma[j]:
                cj = npart[j] + (1 - cur)
                tot += npg_payoff(cj, deg[j], k, alpha) - npg_payoff(cj - 1, deg[j], k, alpha)
        return tot

    def set_action(self, i: int, a: int, join_utility: float, impact: Optional[float] = None) -> None:
        if a == self.sigma[i]:
            return
        if impact is None:
            impact = self.impact(i)
        dphi = join_utility + impact
        if a == 1:
            self.potential += dphi
            self.n_on += 1
            step = 1
        else:
            self.potential -= dphi
            self.n_on -= 1
            step = -1
        if self.nsg:
            for j in self.adj[i]:
                row, ownj = self.nbcnt[j], self.own[j]
                for res in self.labs[i]:
                    row[res] += step
                    if res not in ownj and row[res] == (1 if step > 0 else 0):
                        self.acc[j] += step
        else:
            for j in self.adj[i]:
                self.npart[j] += step
        self.sigma[i] = a


def p_join(u1: float, u0: float, T: float) -> float:
    if u1 >= u0:
        w = math.exp(-(u1 - u0) / T)
        return 1.0 / (1.0 + w)
    w = math.exp(-(u0 - u1) / T)
    return w / (1.0 + w)


class _Occupancy:
    """Trailing-window participation counter with O(1) work per change."""

    def __init__(self, sigma: Sequence[int], iterations: int, window: int):
        self.ws = iterations - window + 1
        self.end = iterations
        self.window = window
        self.since = np.zeros(len(sigma), dtype=np.int64)
        self.on_time = np.zeros(len(sigma), dtype=np.int64)

    def changed(self, i: int, old: int, t: int) -> None:
        if old:
            lo = max(int(self.since[i]), self.ws)
            if t - 1 >= lo:
                self.on_time[i] += t - lo
        self.since[i] = t

    def frequencies(self, sigma: Sequence[int]) -> np.ndarray:
        on = self.on_time.copy()
        for i, a in enumerate(sigma):
            if a:
                lo = max(int(self.since[i]), self.ws)
                if self.end >= lo:
                    on[i] += self.end - lo + 1
        return on / max(self.window, 1)


def run_python(
    g: Graph,
    labels: Optional[ResourceAssignment],
    spec: GameSpec,
    config: SimConfig,
    pa=None,
    on_iteration=None,
) -> SimTrace:
    """Pure-Python chain. ``pa`` is an optional Principal-Agent object with
    ``decide``, ``after_action``, ``maybe_reassess`` and ``n_anchors``.
    """
    rng = make_rng(config.seed)
    sigma0 = initial_profile(config.initial, g.n, rng)
    state = ChainState(g, labels, spec, sigma0)
    iters = config.iterations
    window = min(config.steady_window, iters) if iters else 0
    occ = _Occupancy(state.sigma, iters, window)
    counts = np.zeros(iters + 1, dtype=np.int64)
    anchors = np.zeros(iters + 1, dtype=np.int64)
    pots = np.zeros(iters + 1)
    counts[0], pots[0] = state.n_on, state.potential
    mcu = spec.variant is Variant.GLOBAL_MCU
    T = config.temperature
    sigma = state.sigma
    t = 0
    for players, uniforms in random_stream(rng, g.n, iters):
        for i, u in zip(players.tolist(), uniforms.tolist()):
            t += 1
            u1 = state.join_utility(i)
            imp = None
            if mcu:
                imp = state.impact(i)
                p = p_join(u1 + imp, 0.0, T)
            elif pa is not None:
                flag, imp = pa.decide(i, u1, state.impact, t)
                p = p_join(u1 + imp, 0.0, T) if flag else p_join(u1, 0.0, T)
            else:
                p = p_join(u1, 0.0, T)
            a = 1 if u < p else 0
            old = sigma[i]
            if pa is not None:
                pa.after_action(i, a, t)
            if a != old:
                state.set_action(i, a, u1, imp if (mcu or imp is not None) else None)
                occ.changed(i, old, t)
            if pa is not None:
                pa.maybe_reassess(t, state)
            if on_iteration is not None:
                on_iteration(t, state)
            counts[t] = state.n_on
            pots[t] = state.potential
            if pa is not None:
                anchors[t] = pa.n_anchors
    return SimTrace(counts, anchors, pots, occ.frequencies(sigma), np.array(sigma, dtype=np.int8), window)


# --- compiled engine ------------------------------------------------------


class _CompiledChain:
    def __init__(self, g: Graph, labels, spec: GameSpec, sigma0: np.ndarray, track_visits: bool):
        self.g = g
        self.spec = spec
        self.indptr, self.indices = g.csr
        self.sigma = sigma0.astype(np.int8).copy()
        self.mcu = spec.variant is Variant.GLOBAL_MCU
        idx = int(sum(1 << i for i in range(g.n) if self.sigma[i])) if track_visits else 0
        pot0 = potential(g, labels, spec, self.sigma.tolist())
        self.scal = np.array([pot0, float(self.sigma.sum()), float(idx)])
        self.visits = np.zeros(1 << g.n if track_visits else 0, dtype=np.int64)
        if spec.kind is GameKind.NSG:
            n, r = g.n, spec.r
            self.lab = labels.label_array
            self.own = np.zeros((n, r), dtype=np.uint8)
            for i, lab in enumerate(labels.labels):
                self.own[i, list(lab)] = 1
            self.nbcnt = np.zeros((n, r), dtype=np.int64)
            for j in np.flatnonzero(self.sigma):
                for i in g.adjacency[j]:
                    self.nbcnt[i, self.lab[j]] += 1
            self.acc = ((self.nbcnt > 0) | (self.own > 0)).sum(axis=1).astype(np.int64)
            self.pool = np.array([len(labels.local_pool(g, i)) for i in range(n)], dtype=np.int64)
        else:
            self.npart = np.array(
                [int(self.sigma[list(a)].sum()) if a else 0 for a in g.adjacency], dtype=np.int64
            )

    def advance(self, players, uniforms, t0, ws, since, on_time, counts, pots, T):
        s = self.spec
        if s.kind is GameKind.NSG:
            K.nsg_chain(self.indptr, self.indices, self.lab, self.own, self.nbcnt, self.acc, self.pool,
                        s.r, float(s.alpha), self.mcu, float(T), self.sigma, players, uniforms,
                        t0, ws, since, on_time, counts, pots, self.scal, self.visits)
        else:
            K.npg_chain(self.indptr, self.indices, s.k, float(s.alpha), self.mcu, float(T), self.sigma,
                        self.npart, players, uniforms, t0, ws, since, on_time, counts, pots,
                        self.scal, self.visits)


def run(
    g: Graph,
    labels: Optional[ResourceAssignment],
    spec: GameSpec,
    config: SimConfig,
    pa_config=None,
) -> SimTrace:
    """Run ``config.iterations`` revisions from the configured initial profile."""
    if spec.variant is Variant.PA_MODULATED or pa_config is not None:
        from .anchors import PaConfig, run_anchored

        trace, _ = run_anchored(g, labels, spec.with_variant(Variant.PA_MODULATED), config, pa_config or PaConfig())
        return trace
    if spec.kind is GameKind.NSG and labels is None:
        raise ValueError("NSG requires a resource assignment")
    rng = make_rng(config.seed)
    sigma0 = initial_profile(config.initial, g.n, rng)
    chain = _CompiledChain(g, labels, spec, sigma0, track_visits=False)
    iters = config.iterations
    window = min(config.steady_window, iters) if iters else 0
    ws = iters - window + 1
    since = np.zeros(g.n, dtype=np.int64)
    on_time = np.zeros(g.n, dtype=np.int64)
    counts = np.zeros(iters + 1 if config.record else 1, dtype=np.int64)
    pots = np.zeros(iters + 1 if config.record else 1)
    counts[0], pots[0] = int(sigma0.sum()), chain.scal[0]
    t0 = 0
    empty_i, empty_f = np.zeros(0, dtype=np.int64), np.zeros(0)
    for players, uniforms in random_stream(rng, g.n, iters):
        m = players.size
        if config.record:
            c_out, p_out = counts[t0 + 1 : t0 + 1 + m], pots[t0 + 1 : t0 + 1 + m]
        else:
            c_out, p_out = empty_i, empty_f
        chain.advance(players, uniforms, t0, ws, since, on_time, c_out, p_out, config.temperature)
        t0 += m
    if not config.record:
        counts = np.array([counts[0], int(chain.scal[1])])
        pots = np.array([pots[0], chain.scal[0]])
    occ = _Occupancy(chain.sigma, iters, window)
    occ.since, occ.on_time = since, on_time
    freqs = occ.frequencies(chain.sigma.tolist())
    return SimTrace(counts, np.zeros_like(counts), pots, freqs, chain.sigma.copy(), window, iters)


def empirical_occupation(
    g: Graph,
    labels: Optional[ResourceAssignment],
    spec: GameSpec,
    T: float,
    iterations: int,
    seed: int,
    initial: Initial = "zero",
) -> np.ndarray:
    """Fraction of iterations spent in each profile (index bit i = player i)."""
    if g.n > 20:
        raise ValueError("occupation histogram limited to n <= 20")
    if spec.variant is Variant.PA_MODULATED:
        raise ValueError("occupation histogram is for the base and global-MCU games")
    rng = make_rng(seed)
    sigma0 = initial_profile(initial, g.n, rng)
    chain = _CompiledChain(g, labels, spec, sigma0, track_visits=True)
    since = np.zeros(g.n, dtype=np.int64)
    on_time = np.zeros(g.n, dtype=np.int64)
    empty_i, empty_f = np.zeros(0, dtype=np.int64), np.zeros(0)
    t0 = 0
    for players, uniforms in random_stream(rng, g.n, iterations):
        chain.advance(players, uniforms, t0, iterations + 1, since, on_time, empty_i, empty_f, T)
        t0 += players.size
    return chain.visits / max(iterations, 1)


# --- CSV export -----------------------------------------------------------


def trace_csv(trace: SimTrace, every: int = 1) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["iteration", "n_participating", "n_anchors", "potential"])
    for t in range(0, len(trace.n_participating), every):
        w.writerow([t, int(trace.n_participating[t]), int(trace.n_anchors[t]), f"{trace.potential[t]:.10g}"])
    return buf.getvalue()


def membership_csv(trace: SimTrace, threshold: float) -> str:
    member = classify_steady_state(trace, threshold)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["player", "frequency", "member"])
    for i, (f, m) in enumerate(zip(trace.frequencies, member)):
        w.writerow([i, f"{f:.6f}", int(m)])
    return buf.getvalue()
