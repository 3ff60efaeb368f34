"""Command line: ``netengage {simulate,cores,anchors,stability,oracle}``.

Exit codes: 0 on success, 1 for configuration errors, 2 when an oracle
property check fails. Outputs are staged in a scratch directory and moved
into ``--out`` only when the command completes.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import os
import shutil
import sys
import tempfile
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .config import ConfigError, ExperimentConfig, parse_config
from .cores import k_core, rs_core
from .dynamics import membership_csv, trace_csv
from .experiments import (
    GraphSpec,
    acyclicity_check,
    budget_sweep,
    exact_potential_check,
    game_label,
    nash_agreement_check,
    phase_runs,
    replicate_graph,
    replicate_labels,
    replicated,
    stationary_check,
    summarize,
)
from .games import GameKind, GameSpec, Variant
from .graphs import (
    gen_grid,
    gen_line,
    gen_ring,
    gen_wheel,
    parse_edge_list,
    parse_resources,
)
from .stability import MAX_PLAYERS, alpha_thresholds, rd_cr_report

log = logging.getLogger("netengage")

EXIT_OK, EXIT_CONFIG, EXIT_PROPERTY = 0, 1, 2


class Outputs:
    """Collects files in a scratch directory and moves them into place only after the command succeeds."""

    def __init__(self, out: Path, digest: str, seed: int):
        self.out = out
        self.header = f"# netengage {__version__} config_sha256={digest} seed={seed}\n"
        out.parent.mkdir(parents=True, exist_ok=True)
        self.stage = Path(tempfile.mkdtemp(prefix=".netengage-", dir=out.parent))
        self.exit_code = EXIT_OK

    def csv(self, name: str, body: str) -> None:
        (self.stage / name).write_text(self.header + body)

    def text(self, name: str, body: str) -> None:
        (self.stage / name).write_text(body)

    def rows(self, name: str, header: Sequence[str], rows) -> None:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
        self.csv(name, buf.getvalue())

    def publish(self) -> None:
        self.out.mkdir(parents=True, exist_ok=True)
        for f in sorted(self.stage.iterdir()):
            os.replace(f, self.out / f.name)
        self.stage.rmdir()
        log.info("wrote outputs to %s", self.out)

    def discard(self) -> None:
        shutil.rmtree(self.stage, ignore_errors=True)


def _digest_args(args: argparse.Namespace) -> str:
    skip = {"out", "workers", "func", "verbose"}
    items = sorted((k, str(v)) for k, v in vars(args).items() if k not in skip)
    return hashlib.sha256(repr(items).encode()).hexdigest()


def _load(args) -> ExperimentConfig:
    try:
        text = Path(args.config).read_text()
    except OSError as e:
        raise ConfigError(f"cannot read config: {e}") from e
    return parse_config(text, args.seed)


def _fmt(x: float) -> str:
    return f"{x:.6g}"


# --- subcommands --------------------------------------------------------------


def cmd_simulate(args, outs_factory) -> "Outputs":
    cfg = _load(args)
    outs = outs_factory(cfg.digest, cfg.seed)
    results = replicated(
        cfg.graph, cfg.games, cfg.sim, cfg.replications, cfg.seed, cfg.initials, cfg.pa, args.workers, keep_trace=True
    )
    for o in results:
        stem = f"{o.label}_{o.initial}_rep{o.rep:03d}"
        outs.csv(f"trace_{stem}.csv", trace_csv(o.trace, cfg.trace_every))
        outs.csv(f"membership_{stem}.csv", membership_csv(o.trace, cfg.sim.steady_threshold))
        if o.anchor_trace is not None:
            outs.csv(f"anchors_{stem}.csv", o.anchor_trace.to_csv())
    _write_summary(outs, results)
    return outs


def _write_summary(outs, results) -> None:
    rows = summarize(results)
    outs.rows(
        "summary.csv",
        ["config", "initial", "replications", "steady_mean", "steady_std", "core_mean", "core_std", "anchors_mean"],
        [
            [r.label, r.initial, r.replications, _fmt(r.steady_mean), _fmt(r.steady_std), _fmt(r.core_mean), _fmt(r.core_std), _fmt(r.anchors_mean)]
            for r in rows
        ],
    )
    outs.text(
        "timing.csv",
        "config,initial,rep,seconds\n" + "".join(f"{o.label},{o.initial},{o.rep},{o.seconds:.4f}\n" for o in results),
    )


def cmd_anchors(args, outs_factory) -> "Outputs":
    cfg = _load(args)
    if cfg.pa is None:
        raise ConfigError("anchors needs a [pa] section")
    outs = outs_factory(cfg.digest, cfg.seed)
    results = replicated(
        cfg.graph, cfg.games, cfg.sim, cfg.replications, cfg.seed, cfg.initials, cfg.pa, args.workers, keep_trace=True
    )
    for o in results:
        stem = f"{o.label}_{o.initial}_rep{o.rep:03d}"
        outs.csv(f"trace_{stem}.csv", trace_csv(o.trace, cfg.trace_every))
        outs.csv(f"anchors_{stem}.csv", o.anchor_trace.to_csv())
    _write_summary(outs, results)
    if cfg.budgets:
        rows = []
        for game in cfg.games:
            pts = budget_sweep(
                cfg.graph, game, cfg.sim, cfg.pa, cfg.budgets, cfg.replications, cfg.seed, args.workers, cfg.greedy
            )
            for p in pts:
                rows.append([game_label(game), p.budget, _fmt(p.pa_size), "pa"])
                if cfg.greedy:
                    rows.append([game_label(game), p.budget, _fmt(p.greedy_size), "greedy"])
        outs.rows("budget_sweep.csv", ["config", "budget", "steady_network_size", "method"], rows)
    return outs


def cmd_cores(args, outs_factory) -> "Outputs":
    if args.edges:
        g = parse_edge_list(Path(args.edges).read_text())
    else:
        g = replicate_graph(GraphSpec(args.generator, args.n, args.p), args.seed or 0, 0)
    outs = outs_factory(_digest_args(args), args.seed or 0)
    if args.k is not None:
        res = k_core(g, args.k)
    elif args.r is not None:
        if args.labels:
            labels = parse_resources(Path(args.labels).read_text(), args.r)
        elif args.s is not None:
            labels = replicate_labels(g, GameSpec.nsg(args.r, args.s), args.seed or 0, 0)
        else:
            raise ConfigError("cores with --r needs --s or --labels")
        res = rs_core(g, labels, args.r)
    else:
        raise ConfigError("cores needs --k or --r")
    outs.csv("cascade.csv", res.to_csv())
    return outs


def _topology_graph(topology: str, size: int):
    return {"ring": gen_ring, "wheel": gen_wheel, "grid": gen_grid, "line": gen_line}[topology](size)


def cmd_stability(args, outs_factory) -> "Outputs":
    seed = args.seed or 0
    outs = outs_factory(_digest_args(args), seed)
    g = _topology_graph(args.topology, args.size)
    rep = None
    if args.topology != "line" and not (args.topology == "grid" and args.size < 4):
        rep = alpha_thresholds(args.topology, args.size)
    if args.alphas:
        alphas = args.alphas
    elif rep is None:
        alphas = [1.0]
    elif rep.alpha_th is not None:
        alphas = [rep.alpha_th - args.epsilon, rep.alpha_th + args.epsilon]
    else:
        alphas = [rep.lower - args.epsilon, rep.upper_printed + args.epsilon]
    if rep is not None:
        outs.rows(
            "thresholds.csv",
            ["topology", "size", "alpha_th", "upper_printed", "upper_derived", "lower"],
            [[rep.topology, rep.size] + ["" if v is None else _fmt(v) for v in (rep.alpha_th, rep.upper_printed, rep.upper_derived, rep.lower)]],
        )
    rows = []
    reports = {}
    for a in alphas:
        if rep is None:
            predicted = "empty"
        elif rep.alpha_th is not None:
            predicted = "full" if a > rep.alpha_th else "empty"
        else:
            predicted = "full" if a > rep.upper_printed else "empty" if a < rep.lower else "between"
        res = phase_runs(g, 2, a, args.temperature, args.runs, args.iterations, seed, args.initial, workers=args.workers)
        rows.append([_fmt(a), predicted, args.runs, _fmt(res.share_full), _fmt(res.share_empty), _fmt(res.mean)])
        if g.n <= MAX_PLAYERS:
            r = rd_cr_report(g, None, GameSpec.npg(2, a))
            reports[_fmt(a)] = json.loads(r.to_json())
    outs.rows("verdict.csv", ["alpha", "predicted", "runs", "share_full", "share_empty", "mean_participation"], rows)
    if reports:
        outs.text("rdcr_report.json", json.dumps(reports, indent=2) + "\n")
    return outs


def cmd_oracle(args, outs_factory) -> "Outputs":
    seed = args.seed or 0
    outs = outs_factory(_digest_args(args), seed)
    checks = [
        exact_potential_check(args.samples, seed, GameKind.NPG, args.max_n),
        exact_potential_check(args.samples, seed, GameKind.NSG, args.max_n),
        acyclicity_check(min(args.max_n, 6)),
        nash_agreement_check(max(1, args.samples // 100), seed, min(args.max_n, 8)),
    ]
    st = stationary_check(gen_ring(8), GameSpec.npg(2, 1.0, Variant.GLOBAL_MCU), 0.05, args.stationary_steps, seed)
    rows = [[c.name, c.checked, c.failures, f"{c.worst:.3g}", "pass" if c.passed else "fail", c.counterexample or ""] for c in checks]
    tv_ok = st.tv <= 0.02 and st.mass_on_argmax >= 0.95
    rows.append(["stationary_ring8", args.stationary_steps, int(not tv_ok), f"{st.tv:.3g}", "pass" if tv_ok else "fail", f"argmax_mass={st.mass_on_argmax:.6f}"])
    outs.rows("oracle.csv", ["property", "checked", "failures", "worst", "status", "counterexample"], rows)
    failed = [r[0] for r in rows if r[4] == "fail"]
    for r in rows:
        print(f"{r[0]:28s} {r[4]}")
    outs.exit_code = EXIT_PROPERTY if failed else EXIT_OK
    return outs


# --- entry point ----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="netengage", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config_required):
        sp.add_argument("--config", required=config_required, help="INI experiment config")
        sp.add_argument("--out", required=True, type=Path, help="output directory")
        sp.add_argument("--workers", type=int, default=None, help="worker processes (default: all cores)")
        sp.add_argument("--seed", type=int, default=None, help="master seed (overrides the config)")

    sp = sub.add_parser("simulate", help="replicated log-linear learning runs")
    common(sp, True)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("anchors", help="Principal-Agent anchor runs and budget sweeps")
    common(sp, True)
    sp.set_defaults(func=cmd_anchors)

    sp = sub.add_parser("cores", help="k-core or (r,s)-core cascade timeline")
    common(sp, False)
    sp.add_argument("--edges", help="edge-list file (otherwise generate)")
    sp.add_argument("--labels", help="resource file for --r")
    sp.add_argument("--generator", default="erdos_renyi", choices=["erdos_renyi", "line", "ring", "wheel", "grid", "star"])
    sp.add_argument("--n", type=int, default=1000)
    sp.add_argument("--p", type=float, default=0.01)
    sp.add_argument("--k", type=int)
    sp.add_argument("--r", type=int)
    sp.add_argument("--s", type=int)
    sp.set_defaults(func=cmd_cores)

    sp = sub.add_parser("stability", help="closed-form thresholds and phase-transition runs")
    common(sp, False)
    sp.add_argument("--topology", choices=["ring", "wheel", "grid", "line"], required=True)
    sp.add_argument("--size", type=int, required=True, help="n for ring/wheel/line, m for the m x m grid")
    sp.add_argument("--alphas", type=lambda s: [float(x) for x in s.split(",")], default=None)
    sp.add_argument("--temperature", type=float, default=0.042)
    sp.add_argument("--epsilon", type=float, default=0.1)
    sp.add_argument("--runs", type=int, default=100)
    sp.add_argument("--iterations", type=int, default=2_000_000)
    sp.add_argument("--initial", choices=["zero", "one", "random"], default="random")
    sp.set_defaults(func=cmd_stability)

    sp = sub.add_parser("oracle", help="exhaustive and sampled property checks")
    common(sp, False)
    sp.add_argument("--samples", type=int, default=10_000)
    sp.add_argument("--max-n", type=int, default=10)
    sp.add_argument("--stationary-steps", type=int, default=10_000_000)
    sp.set_defaults(func=cmd_oracle)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    staged: list[Outputs] = []

    def factory(digest, seed):
        o = Outputs(args.out, digest, seed)
        staged.append(o)
        return o

    try:
        outs = args.func(args, factory)
    except ConfigError as e:
        for o in staged:
            o.discard()
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, OSError) as e:
        for o in staged:
            o.discard()
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except BaseException:
        for o in staged:
            o.discard()
        raise
    outs.publish()
    return outs.exit_code


if __name__ == "__main__":
    sys.exit(main())
