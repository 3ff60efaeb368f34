"""Principal-Agent anchor selection.

The PA watches each revision opportunity. A player whose own participation
payoff is non-positive but whose participation would lift the global
objective is a *candidate*; the PA may flag it as an anchor, which adds its
impact term to its utility. Under a budget, a candidate may evict the
weakest tenured anchor. The events below cover how flags end.

Event names used in :attr:`PaState.events`:

``grant``     a candidate becomes an anchor
``revoke``    an anchor abstained or stopped being a candidate
``replace``   an anchor was evicted to make room under the budget
``graduate``  an anchor's own payoff turned positive
``fail``      an anchor was removed by the forced-failure experiment hook
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import _kernels as K
from .cores import k_core, rs_core
from .dynamics import ChainState, SimConfig, SimTrace, run_python
from .games import GameKind, GameSpec, Variant, base_utility, impact, with_action
from .graphs import Graph, ResourceAssignment
from .rng import make_rng

REVOKING_EVENTS = frozenset({"revoke", "replace", "graduate", "fail"})


@dataclass(frozen=True)
class PaConfig:
    budget: Optional[int] = None
    t_th: int = 1000
    t_u: int = 100
    tenure_unit: str = "iterations"
    failures: tuple[tuple[int, int], ...] = ()
    check_invariants: bool = True

    def __post_init__(self):
        if self.budget is not None and self.budget < 0:
            raise ValueError("budget must be non-negative")
        if self.t_u < 1 or self.t_th < 0:
            raise ValueError("need t_u >= 1 and t_th >= 0")
        if self.tenure_unit not in ("iterations", "periods"):
            raise ValueError(f"tenure_unit must be 'iterations' or 'periods', got {self.tenure_unit!r}")
        for t0, x in self.failures:
            if t0 < 1 or x < 0:
                raise ValueError(f"bad failure event ({t0}, {x})")


@dataclass
class LedgerEntry:
    impact: float
    granted_at: int
    periods: int = 0


@dataclass
class PaState:
    n: int
    config: PaConfig
    flags: np.ndarray = None
    ledger: dict[int, LedgerEntry] = field(default_factory=dict)
    events: list[tuple[int, int, str, int, float]] = field(default_factory=list)
    violations: dict[str, int] = field(default_factory=lambda: {"budget": 0, "grant": 0, "ledger": 0})
    t: int = 0

    def __post_init__(self):
        if self.flags is None:
            self.flags = np.zeros(self.n, dtype=np.int8)

    @property
    def n_anchors(self) -> int:
        return len(self.ledger)

    @property
    def budget(self) -> Optional[int]:
        return self.config.budget

    def tenure(self, j: int, t: int) -> int:
        e = self.ledger[j]
        return e.periods if self.config.tenure_unit == "periods" else t - e.granted_at

    def is_tenured(self, j: int, t: int) -> bool:
        return self.tenure(j, t) >= self.config.t_th

    # --- ledger mutations ---------------------------------------------------

    def _grant(self, i: int, imp: float, t: int, u1: float) -> None:
        if not (u1 <= 0 < u1 + imp):
            self.violations["grant"] += 1
        self.flags[i] = 1
        self.ledger[i] = LedgerEntry(imp, t)
        self.events.append((t, self.n_anchors, "grant", i, imp))
        b = self.config.budget
        if b is not None and self.n_anchors > b:
            self.violations["budget"] += 1

    def _drop(self, j: int, t: int, reason: str) -> None:
        e = self.ledger.pop(j)
        self.flags[j] = 0
        self.events.append((t, self.n_anchors, reason, j, e.impact))

    def check_consistency(self) -> bool:
        ok = int(self.flags.sum()) == len(self.ledger) and all(self.flags[j] == 1 for j in self.ledger)
        if not ok:
            self.violations["ledger"] += 1
        return ok

    # --- hooks ----------------------------------------------------------------

    def decide(self, i: int, u1: float, impact_of: Callable[[int], float], t: int) -> tuple[int, float]:
        """Set the anchor flag of the revising player ``i``.

        ``u1`` is i's base payoff for participating. Returns (flag, impact);
        the impact is only evaluated when needed and is ``0.0`` otherwise.
        """
        self.t = t
        flagged = i in self.ledger
        if u1 > 0:
            if flagged:
                self._drop(i, t, "graduate")
            return 0, 0.0
        imp = impact_of(i)
        if not u1 + imp > 0:
            if flagged:
                self._drop(i, t, "revoke")
            return 0, imp
        if flagged:
            self.ledger[i].impact = imp
            return 1, imp
        b = self.config.budget
        if b is None or self.n_anchors < b:
            self._grant(i, imp, t, u1)
            return 1, imp
        victim = self._weakest_tenured(t)
        if victim is None or not imp > self.ledger[victim].impact:
            return 0, imp
        before = self._min_tenured_impact(t)
        self._drop(victim, t, "replace")
        self._grant(i, imp, t, u1)
        after = self._min_tenured_impact(t)
        if after is not None and before is not None and after < before:
            self.violations["ledger"] += 1
        return 1, imp

    def _weakest_tenured(self, t: int) -> Optional[int]:
        best = None
        for j in sorted(self.ledger):
            if self.is_tenured(j, t) and (best is None or self.ledger[j].impact < self.ledger[best].impact):
                best = j
        return best

    def _min_tenured_impact(self, t: int) -> Optional[float]:
        vals = [e.impact for j, e in self.ledger.items() if self.is_tenured(j, t)]
        return min(vals) if vals else None

    def after_action(self, i: int, a: int, t: int, impact_of: Optional[Callable[[int], float]] = None) -> None:
        if i not in self.ledger:
            return
        if a == 0:
            self._drop(i, t, "revoke")
        elif impact_of is not None:
            self.ledger[i].impact = impact_of(i)
        if self.config.check_invariants:
            self.check_consistency()

    def reassess(self, t: int, base_of: Callable[[int], float], impact_of: Callable[[int], float]) -> None:
        for j in sorted(self.ledger):
            e = self.ledger[j]
            e.periods += 1
            if self.is_tenured(j, t) and base_of(j) > 0:
                self._drop(j, t, "graduate")
            else:
                e.impact = impact_of(j)
        if self.config.check_invariants:
            self.check_consistency()

    def fail(self, t: int, count: int, rng: np.random.Generator) -> list[int]:
        pool = sorted(self.ledger)
        hit = sorted(rng.choice(pool, size=min(count, len(pool)), replace=False).tolist()) if pool else []
        for j in hit:
            self._drop(j, t, "fail")
        return hit


def pa_decide(g: Graph, labels, spec: GameSpec, sigma: Sequence[int], pa: PaState, i: int) -> int:
    """Reference form of the PA decision that recomputes everything from the profile."""
    on = with_action(sigma, i, 1)
    u1 = base_utility(g, labels, spec, on, i)
    flag, _ = pa.decide(i, u1, lambda j: impact(g, labels, spec, sigma, j), pa.t + 1)
    return flag


def pa_after_action(pa: PaState, i: int, chosen_action: int, impact_of=None) -> None:
    pa.after_action(i, chosen_action, pa.t, impact_of)


def pa_reassess(g: Graph, labels, spec: GameSpec, sigma: Sequence[int], pa: PaState, t: int) -> None:
    pa.reassess(
        t,
        lambda j: base_utility(g, labels, spec, sigma, j),
        lambda j: impact(g, labels, spec, sigma, j),
    )


@dataclass
class AnchorTrace:
    n_anchors: np.ndarray
    events: list[tuple[int, int, str, int, float]]
    violations: dict[str, int]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["iteration", "n_anchors", "event", "player", "impact"])
        for t, na, ev, j, imp in self.events:
            w.writerow([t, na, ev, j, f"{imp:.10g}"])
        return buf.getvalue()

    @property
    def peak(self) -> int:
        return int(self.n_anchors.max()) if self.n_anchors.size else 0

    def settled(self, window: int) -> float:
        return float(self.n_anchors[-window:].mean())


def run_anchored(
    g: Graph,
    labels: Optional[ResourceAssignment],
    spec: GameSpec,
    config: SimConfig,
    pa_config: PaConfig,
) -> tuple[SimTrace, AnchorTrace]:
    if spec.variant is not Variant.PA_MODULATED:
        raise ValueError("run_anchored needs the PA-modulated variant")
    pa = PaState(g.n, pa_config)
    hooks = _Hooks(pa, pa_config, make_rng(config.seed, 1))
    trace = run_python(g, labels, spec, config, pa=hooks)
    return trace, AnchorTrace(trace.n_anchors, pa.events, dict(pa.violations))


class _Hooks:
    """Binds a :class:`PaState` to the incremental chain of ``run_python``."""

    def __init__(self, pa: PaState, cfg: PaConfig, fail_rng):
        self.pa = pa
        self.t_u = cfg.t_u
        self.failures = dict(cfg.failures)
        self.fail_rng = fail_rng
        self.check = cfg.check_invariants

    @property
    def n_anchors(self) -> int:
        return self.pa.n_anchors

    def decide(self, i, u1, impact_of, t):
        return self.pa.decide(i, u1, impact_of, t)

    def after_action(self, i, a, t):
        if a == 0 and i in self.pa.ledger:
            self.pa._drop(i, t, "revoke")
        if self.check:
            self.pa.check_consistency()

    def maybe_reassess(self, t, state: ChainState):
        pa = self.pa
        if t % self.t_u == 0:
            pa.reassess(t, lambda j: state.join_utility(j) if state.sigma[j] else 0.0, state.impact)
        x = self.failures.get(t)
        if x:
            pa.fail(t, x, self.fail_rng)


# --- greedy anchored-core baseline -----------------------------------------


@dataclass(frozen=True)
class AnchoredCore:
    anchors: tuple[int, ...]
    size: int
    sizes_by_budget: tuple[int, ...]


def anchored_core_size(g: Graph, labels: Optional[ResourceAssignment], threshold: int, anchors, kind: GameKind) -> int:
    indptr, indices = g.csr
    flags = np.zeros(g.n, dtype=np.uint8)
    flags[list(anchors)] = 1
    if kind is GameKind.NSG:
        return int(K.anchored_rscore_size(indptr, indices, labels.label_array, threshold, flags))
    return int(K.anchored_kcore_size(indptr, indices, threshold, flags))


def greedy_anchored_core(
    g: Graph, labels: Optional[ResourceAssignment], threshold: int, b: int, kind: GameKind = GameKind.NPG
) -> AnchoredCore:
    """Add ``b`` permanent anchors one at a time, each maximizing the anchored core size.

    Candidates are the players outside the current anchored core; ties go to
    the lowest index.
    """
    if b < 0:
        raise ValueError("budget must be non-negative")
    if kind is GameKind.NSG and labels is None:
        raise ValueError("NSG requires a resource assignment")
    indptr, indices = g.csr
    flags = np.zeros(g.n, dtype=np.uint8)

    def size_with(fl):
        if kind is GameKind.NSG:
            return int(K.anchored_rscore_size(indptr, indices, labels.label_array, threshold, fl))
        return int(K.anchored_kcore_size(indptr, indices, threshold, fl))

    def members(fl):
        anchors = tuple(np.flatnonzero(fl).tolist())
        if kind is GameKind.NSG:
            return rs_core(g, labels, threshold, anchors).survivors
        return k_core(g, threshold, anchors).survivors

    chosen: list[int] = []
    sizes = [size_with(flags)]
    for _ in range(b):
        inside = members(flags)
        best, best_size = None, -1
        for v in range(g.n):
            if v in inside:
                continue
            flags[v] = 1
            s = size_with(flags)
            flags[v] = 0
            if s > best_size:
                best, best_size = v, s
        if best is None:
            break
        flags[best] = 1
        chosen.append(best)
        sizes.append(best_size)
    return AnchoredCore(tuple(chosen), sizes[-1], tuple(sizes))
