"""Payoff model of the participation game (NPG) and the resource-sharing
game (NSG).

All functions here are pure and recompute from scratch; they are the
reference against which the incremental simulation engines are tested.
Profiles are any integer sequence of 0/1 actions indexed by player.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional, Sequence

from .graphs import Graph, ResourceAssignment

ActionProfile = Sequence[int]


class GameKind(str, enum.Enum):
    NPG = "npg"
    NSG = "nsg"


class Variant(str, enum.Enum):
    BASE = "base"
    GLOBAL_MCU = "global_mcu"
    PA_MODULATED = "pa_modulated"


@dataclass(frozen=True)
class GameSpec:
    kind: GameKind
    alpha: float = 1.0
    k: Optional[int] = None
    r: Optional[int] = None
    s: Optional[int] = None
    variant: Variant = Variant.BASE

    def __post_init__(self):
        object.__setattr__(self, "kind", GameKind(self.kind))
        object.__setattr__(self, "variant", Variant(self.variant))
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if self.kind is GameKind.NPG:
            if self.k is None or self.k < 1:
                raise ValueError(f"NPG needs threshold k >= 1, got {self.k}")
        else:
            if self.r is None or self.s is None or not 1 <= self.s <= self.r:
                raise ValueError(f"NSG needs 1 <= s <= r, got r={self.r}, s={self.s}")

    @classmethod
    def npg(cls, k: int, alpha: float = 1.0, variant: Variant = Variant.BASE) -> "GameSpec":
        return cls(GameKind.NPG, alpha=alpha, k=k, variant=variant)

    @classmethod
    def nsg(cls, r: int, s: int, alpha: float = 1.0, variant: Variant = Variant.BASE) -> "GameSpec":
        return cls(GameKind.NSG, alpha=alpha, r=r, s=s, variant=variant)

    def with_variant(self, variant: Variant) -> "GameSpec":
        return GameSpec(self.kind, self.alpha, self.k, self.r, self.s, Variant(variant))

    def with_alpha(self, alpha: float) -> "GameSpec":
        return GameSpec(self.kind, alpha, self.k, self.r, self.s, self.variant)


def with_action(sigma: ActionProfile, i: int, a: int) -> tuple[int, ...]:
    out = list(sigma)
    out[i] = a
    return tuple(out)


def _check_labels(spec: GameSpec, labels: Optional[ResourceAssignment]) -> None:
    if spec.kind is GameKind.NSG:
        if labels is None:
            raise ValueError("NSG requires a resource assignment")
        if labels.r != spec.r or labels.s != spec.s:
            raise ValueError(f"labels are ({labels.r},{labels.s}) but game is ({spec.r},{spec.s})")


# --- neighborhood views ---------------------------------------------------


def participating_neighbors(g: Graph, sigma: ActionProfile, i: int) -> set[int]:
    return {j for j in g.adjacency[i] if sigma[j]}


def accessible_resources(g: Graph, labels: ResourceAssignment, sigma: ActionProfile, i: int) -> set[int]:
    """Union of labels over i and its participating neighbors (i counts regardless of its action)."""
    out = set(labels.labels[i])
    for j in g.adjacency[i]:
        if sigma[j]:
            out |= labels.labels[j]
    return out


# --- base utilities -------------------------------------------------------


def npg_payoff(n_participating: int, degree: int, k: int, alpha: float) -> float:
    """Participation payoff given the number of participating neighbors."""
    if n_participating >= k:
        return alpha
    if degree == 0:
        return float(-k)
    return (n_participating - k) / degree


def nsg_payoff(n_accessible: int, pool: int, r: int, alpha: float) -> float:
    if n_accessible >= r:
        return alpha
    return (n_accessible - r) / pool


def utility_npg(g: Graph, spec: GameSpec, sigma: ActionProfile, i: int) -> float:
    if spec.kind is not GameKind.NPG:
        raise ValueError("utility_npg called with an NSG spec")
    if not sigma[i]:
        return 0.0
    c = sum(1 for j in g.adjacency[i] if sigma[j])
    return npg_payoff(c, len(g.adjacency[i]), spec.k, spec.alpha)


def utility_nsg(g: Graph, labels: ResourceAssignment, spec: GameSpec, sigma: ActionProfile, i: int) -> float:
    if spec.kind is not GameKind.NSG:
        raise ValueError("utility_nsg called with an NPG spec")
    if not sigma[i]:
        return 0.0
    acc = len(accessible_resources(g, labels, sigma, i))
    return nsg_payoff(acc, len(labels.local_pool(g, i)), spec.r, spec.alpha)


def base_utility(g: Graph, labels: Optional[ResourceAssignment], spec: GameSpec, sigma: ActionProfile, i: int) -> float:
    if spec.kind is GameKind.NPG:
        return utility_npg(g, spec, sigma, i)
    _check_labels(spec, labels)
    return utility_nsg(g, labels, spec, sigma, i)


# --- impact of participation on neighbors ---------------------------------


def impact_npg(g: Graph, spec: GameSpec, sigma: ActionProfile, i: int) -> float:
    """Marginal gain of i's participating neighbors when i participates.

    Neighbors sitting exactly at the threshold (counting i) would lose
    ``alpha + 1/deg`` without i; those still short of it lose ``1/deg``.
    """
    k, alpha = spec.k, spec.alpha
    total = 0.0
    for j in g.adjacency[i]:
        if not sigma[j]:
            continue
        # count of j's participating neighbors with i forced to participate
        c = sum(1 for x in g.adjacency[j] if x == i or sigma[x])
        dj = len(g.adjacency[j])
        if c == k:
            total += alpha + 1.0 / dj
        elif c < k:
            total += 1.0 / dj
    return total


def impact_nsg(g: Graph, labels: ResourceAssignment, spec: GameSpec, sigma: ActionProfile, i: int) -> float:
    """Resource-sharing analogue of :func:`impact_npg`.

    ``c_ji`` counts the resources neighbor ``j`` reaches only through ``i``;
    the normalizer is the neighbor's own local pool ``|L_j|``.
    """
    r, alpha = spec.r, spec.alpha
    on = with_action(sigma, i, 1)
    off = with_action(sigma, i, 0)
    total = 0.0
    for j in g.adjacency[i]:
        if not sigma[j]:
            continue
        with_i = len(accessible_resources(g, labels, on, j))
        without_i = len(accessible_resources(g, labels, off, j))
        c_ji = with_i - without_i
        pool = len(labels.local_pool(g, j))
        if with_i == r and without_i < r:
            total += alpha + c_ji / pool
        elif with_i < r:
            total += c_ji / pool
    return total


def impact(g: Graph, labels: Optional[ResourceAssignment], spec: GameSpec, sigma: ActionProfile, i: int) -> float:
    if spec.kind is GameKind.NPG:
        return impact_npg(g, spec, sigma, i)
    _check_labels(spec, labels)
    return impact_nsg(g, labels, spec, sigma, i)


# --- variant utilities, potential, best responses -------------------------


def utility(
    g: Graph,
    labels: Optional[ResourceAssignment],
    spec: GameSpec,
    sigma: ActionProfile,
    i: int,
    anchor_flag: int = 0,
) -> float:
    if anchor_flag and spec.variant is not Variant.PA_MODULATED:
        raise ValueError("anchor_flag is only meaningful for the PA-modulated variant")
    u = base_utility(g, labels, spec, sigma, i)
    if not sigma[i] or spec.variant is Variant.BASE:
        return u
    if spec.variant is Variant.GLOBAL_MCU or anchor_flag:
        return u + impact(g, labels, spec, sigma, i)
    return u


def potential(g: Graph, labels: Optional[ResourceAssignment], spec: GameSpec, sigma: ActionProfile) -> float:
    """Sum of base utilities (the global participation objective)."""
    return sum(base_utility(g, labels, spec, sigma, i) for i in range(g.n) if sigma[i])


def action_utilities(
    g: Graph,
    labels: Optional[ResourceAssignment],
    spec: GameSpec,
    sigma: ActionProfile,
    i: int,
    anchor_flag: int = 0,
) -> dict[int, float]:
    return {a: utility(g, labels, spec, with_action(sigma, i, a), i, anchor_flag) for a in (0, 1)}


def best_response_set(
    g: Graph,
    labels: Optional[ResourceAssignment],
    spec: GameSpec,
    sigma: ActionProfile,
    i: int,
    anchor_flag: int = 0,
) -> set[int]:
    u = action_utilities(g, labels, spec, sigma, i, anchor_flag)
    best = max(u.values())
    return {a for a, v in u.items() if v == best}


@dataclass(frozen=True)
class NashReport:
    is_nash: bool
    deviator: Optional[int]
    closed_form: bool

    def __bool__(self) -> bool:
        return self.is_nash


def _closed_form_nash(g: Graph, labels: Optional[ResourceAssignment], spec: GameSpec, sigma: ActionProfile) -> bool:
    """Threshold characterization: participants satisfied, abstainers short.

    The all-abstain profile is covered by the same test; for NSG it is only an
    equilibrium when ``s < r`` (with ``s == r`` everyone is self-sufficient).
    """
    for i in range(g.n):
        if spec.kind is GameKind.NPG:
            c = sum(1 for j in g.adjacency[i] if sigma[j])
            satisfied = c >= spec.k
        else:
            satisfied = len(accessible_resources(g, labels, sigma, i)) >= spec.r
        if bool(sigma[i]) != satisfied:
            return False
    return True


def is_nash(g: Graph, labels: Optional[ResourceAssignment], spec: GameSpec, sigma: ActionProfile) -> NashReport:
    if spec.variant is not Variant.BASE:
        raise ValueError("is_nash is defined for the base game")
    deviator = None
    for i in range(g.n):
        u = action_utilities(g, labels, spec, sigma, i)
        if u[1 - sigma[i]] > u[sigma[i]]:
            deviator = i
            break
    return NashReport(deviator is None, deviator, _closed_form_nash(g, labels, spec, sigma))


def is_strict_nash(
    g: Graph, labels: Optional[ResourceAssignment], spec: GameSpec, sigma: ActionProfile, tol: float = 1e-12
) -> bool:
    for i in range(g.n):
        u = action_utilities(g, labels, spec, sigma, i)
        if not u[sigma[i]] - u[1 - sigma[i]] > tol:
            return False
    return True
