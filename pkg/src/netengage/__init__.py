"""Network engagement games under log-linear learning."""

from .games import GameKind, GameSpec, Variant, impact, is_nash, potential, utility
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
)

__version__ = "0.1.0"

__all__ = [
    "GameKind",
    "GameSpec",
    "Graph",
    "ResourceAssignment",
    "Variant",
    "assign_resources",
    "gen_erdos_renyi",
    "gen_grid",
    "gen_line",
    "gen_ring",
    "gen_star",
    "gen_wheel",
    "impact",
    "is_nash",
    "potential",
    "utility",
]
