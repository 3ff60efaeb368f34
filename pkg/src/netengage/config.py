"""INI experiment configs with a fixed schema.

Unknown sections or keys are errors, values are type-checked, and every
parameter is validated against the simulation types before anything runs.

Example::

    [graph]
    generator = erdos_renyi
    n = 1000
    p = 0.01

    [game]
    kind = npg
    k = 5, 6, 7, 8, 9
    alpha = 1

    [dynamics]
    temperature = 0.3
    iterations = 200000
    steady_window = 30000
    steady_threshold = 0.95
    initial = zero, random

    [run]
    replications = 20
    seed = 0
"""

from __future__ import annotations

import configparser
import hashlib
from dataclasses import dataclass, field
from typing import Optional

from .anchors import PaConfig
from .dynamics import SimConfig
from .experiments import GraphSpec
from .games import GameKind, GameSpec, Variant


class ConfigError(ValueError):
    pass


def _int(v: str) -> int:
    return int(v)


def _float(v: str) -> float:
    return float(v)


def _ints(v: str) -> list[int]:
    return [int(x) for x in v.split(",") if x.strip()]


def _floats(v: str) -> list[float]:
    return [float(x) for x in v.split(",") if x.strip()]


def _words(v: str) -> list[str]:
    return [x.strip() for x in v.split(",") if x.strip()]


def _pairs(v: str) -> list[tuple[int, int]]:
    out = []
    for item in _words(v):
        a, _, b = item.partition(":")
        out.append((int(a), int(b)))
    return out


def _budget(v: str) -> Optional[int]:
    return None if v.strip().lower() in ("unlimited", "none") else int(v)


SCHEMA: dict[str, dict[str, tuple]] = {
    "graph": {"generator": (str, True), "n": (_int, False), "p": (_float, False), "path": (str, False)},
    "game": {
        "kind": (str, True),
        "k": (_ints, False),
        "rs": (_pairs, False),
        "alpha": (_floats, False),
        "variant": (str, False),
    },
    "dynamics": {
        "temperature": (_float, True),
        "iterations": (_int, True),
        "steady_window": (_int, False),
        "steady_threshold": (_float, False),
        "initial": (_words, False),
        "trace_every": (_int, False),
    },
    "run": {"replications": (_int, False), "seed": (_int, False)},
    "pa": {
        "budget": (_budget, False),
        "budgets": (_ints, False),
        "t_th": (_int, False),
        "t_u": (_int, False),
        "tenure_unit": (str, False),
        "failure_at": (_int, False),
        "failure_count": (_int, False),
        "greedy": (str, False),
    },
}


@dataclass
class ExperimentConfig:
    graph: GraphSpec
    games: list[GameSpec]
    sim: SimConfig
    initials: list[str]
    replications: int
    seed: int
    trace_every: int = 1
    pa: Optional[PaConfig] = None
    budgets: list[int] = field(default_factory=list)
    greedy: bool = True
    digest: str = ""


def _read(text: str) -> dict[str, dict]:
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text)
    except configparser.Error as e:
        raise ConfigError(f"malformed config: {e}") from e
    out: dict[str, dict] = {}
    for section in cp.sections():
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        fields = SCHEMA[section]
        vals = {}
        for key, raw in cp.items(section):
            if key not in fields:
                raise ConfigError(f"[{section}] unknown key '{key}'")
            conv = fields[key][0]
            try:
                vals[key] = conv(raw)
            except ValueError as e:
                raise ConfigError(f"[{section}] {key} = {raw!r}: {e}") from e
        for key, (_, required) in fields.items():
            if required and key not in vals:
                raise ConfigError(f"[{section}] missing required key '{key}'")
        out[section] = vals
    for section in ("graph", "game", "dynamics"):
        if section not in out:
            raise ConfigError(f"missing section [{section}]")
    return out


def parse_config(text: str, seed_override: Optional[int] = None) -> ExperimentConfig:
    raw = _read(text)
    g, gm, dy = raw["graph"], raw["game"], raw["dynamics"]
    rn, pa = raw.get("run", {}), raw.get("pa")
    try:
        graph = GraphSpec(g["generator"], g.get("n", 1000), g.get("p", 0.01), g.get("path"))
        if graph.generator not in ("erdos_renyi", "line", "ring", "wheel", "grid", "star", "file"):
            raise ConfigError(f"[graph] generator: unknown value {graph.generator!r}")
        if graph.generator == "file" and not graph.path:
            raise ConfigError("[graph] generator = file needs 'path'")
        kind = GameKind(gm["kind"])
        variant = Variant(gm.get("variant", "pa_modulated" if pa is not None else "base"))
        alphas = gm.get("alpha", [1.0])
        if kind is GameKind.NPG:
            if "k" not in gm:
                raise ConfigError("[game] kind = npg needs 'k'")
            games = [GameSpec.npg(k, a, variant) for k in gm["k"] for a in alphas]
        else:
            if "rs" not in gm:
                raise ConfigError("[game] kind = nsg needs 'rs' (r:s pairs)")
            games = [GameSpec.nsg(r, s, a, variant) for r, s in gm["rs"] for a in alphas]
        initials = dy.get("initial", ["zero"])
        for init in initials:
            if init not in ("zero", "one", "random"):
                raise ConfigError(f"[dynamics] initial: unknown value {init!r}")
        sim = SimConfig(
            temperature=dy["temperature"],
            iterations=dy["iterations"],
            steady_window=dy.get("steady_window", min(30_000, dy["iterations"])),
            steady_threshold=dy.get("steady_threshold", 0.95),
            initial=initials[0],
        )
        pa_cfg = None
        if pa is not None:
            failures = ()
            if "failure_at" in pa:
                failures = ((pa["failure_at"], pa.get("failure_count", 0)),)
            pa_cfg = PaConfig(
                budget=pa.get("budget"),
                t_th=pa.get("t_th", 1000),
                t_u=pa.get("t_u", 100),
                tenure_unit=pa.get("tenure_unit", "iterations"),
                failures=failures,
            )
        greedy = pa.get("greedy", "yes").lower() in ("yes", "true", "1") if pa is not None else False
        reps = rn.get("replications", 1)
        if reps < 1:
            raise ConfigError("[run] replications must be >= 1")
        trace_every = dy.get("trace_every", 1)
        if trace_every < 1:
            raise ConfigError("[dynamics] trace_every must be >= 1")
    except ConfigError:
        raise
    except (ValueError, KeyError) as e:
        raise ConfigError(str(e)) from e
    seed = seed_override if seed_override is not None else rn.get("seed", 0)
    return ExperimentConfig(
        graph=graph,
        games=games,
        sim=sim,
        initials=initials,
        replications=reps,
        seed=seed,
        trace_every=trace_every,
        pa=pa_cfg,
        budgets=(pa or {}).get("budgets", []),
        greedy=greedy,
        digest=hashlib.sha256(text.encode()).hexdigest(),
    )
