"""Command-line entry point ``dqc``: generate, partition, compile, simulate, sweep, verify."""
from __future__ import annotations

import argparse
import csv
import datetime as _dt
import io
import json
import logging
import math
import statistics
import sys
from dataclasses import dataclass, fields, replace
from importlib import resources
from pathlib import Path

from .benchgen import BENCHMARKS, BenchmarkError, generate
from .circuit import Circuit
from .engine import DESIGNS, SimConfig, format_log, ideal_depth, result_json, run, sweep
from .entnet import EntParams
from .noise import NoiseParams
from .partition import (Assignment, PartitionError, annotate_remote, bipartition, interaction_graph,
                        load_assignment, write_assignment)
from .qasm import QasmError, read_circuit, write_circuit
from .scheduler import build_variant_table, verify_variants

log = logging.getLogger("dqc")

CSV_COLUMNS = ("design", "benchmark", "seed", "depth", "fidelity", "links_generated", "links_consumed",
               "links_discarded", "links_blocked")
_SECTIONS = ("benchmark", "partition", "entnet", "noise", "engine")
_ENGINE_KEYS = {"designs", "seeds", "seed_base", "t_1q", "t_cnot", "t_meas", "t_remote_overhead", "m"}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class BenchSpec:
    name: str
    bench: str
    n: int
    steps: int = 10
    degree: int = 4
    layers: int = 1
    seed: int = 0

    def build(self) -> Circuit:
        return generate(self.bench, self.n, steps=self.steps, degree=self.degree,
                        layers=self.layers, seed=self.seed)


@dataclass(frozen=True)
class Experiment:
    suite: tuple[BenchSpec, ...]
    capacities: tuple[int, ...]
    partition_seed: int
    partition_starts: int
    ent: EntParams
    noise: NoiseParams
    designs: tuple[str, ...]
    seeds: tuple[int, ...]
    engine: dict

    def sim_config(self, design: str, seed: int = 0, **extra) -> SimConfig:
        return SimConfig(design=design, ent=self.ent, noise=self.noise, seed=seed,
                         runs=max(1, len(self.seeds)), **self.engine, **extra)


def _known(cls, section: dict, name: str) -> dict:
    allowed = {f.name for f in fields(cls)}
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"[{name}] unknown keys: {sorted(unknown)}")
    return section


def resolve_config_path(name: str | Path) -> Path:
    """A filesystem path, or the name of a preset shipped with the package."""
    p = Path(name)
    if p.exists():
        return p
    preset = resources.files("dqcsim") / "configs" / p.name
    if preset.is_file():
        return Path(str(preset))
    raise ConfigError(f"config file {str(name)!r} not found (presets: paper_32q.json, paper_64q.json)")


def parse_config(data: dict) -> Experiment:
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    missing = [s for s in _SECTIONS if s not in data]
    extra = [s for s in data if s not in _SECTIONS]
    if missing or extra:
        raise ConfigError(f"config sections must be {list(_SECTIONS)}; missing {missing}, unexpected {extra}")
    try:
        suite = []
        for i, b in enumerate(data["benchmark"].get("suite", [])):
            b = dict(b)
            if b.get("bench") not in BENCHMARKS:
                raise ConfigError(f"[benchmark] entry {i}: bench must be one of {BENCHMARKS}")
            b.setdefault("name", f"{b['bench']}-{b.get('n')}")
            suite.append(BenchSpec(**_known(BenchSpec, b, "benchmark")))
        if not suite:
            raise ConfigError("[benchmark] suite is empty")
        part = data["partition"]
        caps = tuple(int(c) for c in part.get("capacities", ()))
        if len(caps) != 2:
            raise ConfigError("[partition] capacities must list two node sizes")
        ent = EntParams(**_known(EntParams, data["entnet"], "entnet"))
        noise = NoiseParams(**_known(NoiseParams, data["noise"], "noise"))
        eng = dict(data["engine"])
        unknown = set(eng) - _ENGINE_KEYS
        if unknown:
            raise ConfigError(f"[engine] unknown keys: {sorted(unknown)}")
        designs = tuple(eng.pop("designs", DESIGNS))
        bad = [d for d in designs if d not in DESIGNS]
        if bad:
            raise ConfigError(f"[engine] unknown designs {bad}")
        n_seeds = int(eng.pop("seeds", 50))
        base = int(eng.pop("seed_base", 0))
        if n_seeds < 1:
            raise ConfigError("[engine] seeds must be >= 1")
        exp = Experiment(tuple(suite), caps, int(part.get("seed", 0)), int(part.get("starts", 16)),
                         ent, noise, designs, tuple(range(base, base + n_seeds)), eng)
        exp.sim_config(designs[0])  # validate engine values
        for spec in suite:
            if spec.n > sum(caps):
                raise ConfigError(f"benchmark {spec.name} has {spec.n} qubits, nodes hold {sum(caps)}")
        return exp
    except (TypeError, ValueError) as err:
        if isinstance(err, ConfigError):
            raise
        raise ConfigError(str(err)) from err


def load_config(path) -> Experiment:
    p = resolve_config_path(path)
    try:
        data = json.loads(p.read_text())
    except json.JSONDecodeError as err:
        raise ConfigError(f"{p}: invalid JSON at line {err.lineno}: {err.msg}") from err
    return parse_config(data)


def _caps(text: str, nodes: int) -> tuple[int, ...]:
    try:
        caps = tuple(int(x) for x in text.split(","))
    except ValueError:
        raise ConfigError(f"--cap expects comma-separated integers, got {text!r}") from None
    if len(caps) != nodes:
        raise ConfigError(f"--cap lists {len(caps)} capacities for {nodes} nodes")
    return caps


# ---------------------------------------------------------------------------
# commands

def cmd_gen(args) -> int:
    circ = generate(args.bench, args.n, steps=args.steps, degree=args.degree, layers=args.layers, seed=args.seed)
    write_circuit(circ, args.output)
    print(f"{args.bench} n={args.n}: {circ.count_2q()} 2Q, {circ.count_1q()} 1Q -> {args.output}")
    return 0


def cmd_partition(args) -> int:
    if args.nodes != 2:
        raise ConfigError("only two-node partitioning is supported")
    circ = read_circuit(args.circ)
    caps = _caps(args.cap, args.nodes)
    graph = interaction_graph(circ)
    assignment = bipartition(graph, caps, seed=args.seed)
    write_assignment(assignment, args.output)
    dcirc = annotate_remote(circ, assignment)
    print(f"remote gates: {dcirc.n_remote}, local 2Q gates: {dcirc.n_local_2q} -> {args.output}")
    return 0


def _circuit_and_assignment(args, exp: Experiment | None) -> tuple[Circuit, Assignment]:
    if args.circ:
        circ = read_circuit(args.circ)
        caps = exp.capacities if exp else _caps(args.cap, 2)
    elif exp is not None:
        matches = [s for s in exp.suite if args.bench in (None, s.name)]
        if not matches:
            raise ConfigError(f"benchmark {args.bench!r} not in config suite {[s.name for s in exp.suite]}")
        circ, caps = matches[0].build(), exp.capacities
    else:
        raise ConfigError("give --circ or --config")
    if args.assign:
        assignment = load_assignment(args.assign, caps, circ.n_qubits)
    else:
        seed = exp.partition_seed if exp else 0
        starts = exp.partition_starts if exp else 16
        assignment = bipartition(interaction_graph(circ), caps, seed=seed, n_starts=starts)
    return circ, assignment


def cmd_compile(args) -> int:
    exp = load_config(args.config) if args.config else None
    circ, assignment = _circuit_and_assignment(args, exp)
    cfg = exp.sim_config("adapt_buf") if exp else SimConfig(design="adapt_buf")
    m = args.m if args.m is not None else cfg.segment_m
    table = build_variant_table(annotate_remote(circ, assignment), m)
    table.save(args.output)
    print(f"{len(table.segments)} segments, m={m} -> {args.output}")
    return 0


def cmd_simulate(args) -> int:
    exp = load_config(args.config) if args.config else None
    circ, assignment = _circuit_and_assignment(args, exp)
    base = exp.sim_config(args.design, args.seed) if exp else SimConfig(design=args.design, seed=args.seed)
    cfg = replace(base, record_log=True)
    result = run(circ, assignment, cfg)
    out = Path(args.output)
    result_json(result, out)
    log_path = Path(args.log) if args.log else out.with_suffix(".log")
    log_path.write_text(format_log(result.log))
    print(f"{args.design}: depth {result.depth:.4f} (ideal {ideal_depth(circ, cfg):.4f}), "
          f"fidelity {result.fidelity:.6g} -> {out}, {log_path}")
    return 0


def sweep_rows(exp: Experiment, workers: int | None = None) -> list[dict]:
    rows = []
    for spec in exp.suite:
        circ = spec.build()
        assignment = bipartition(interaction_graph(circ), exp.capacities, seed=exp.partition_seed,
                                 n_starts=exp.partition_starts)
        for design in exp.designs:
            rep = sweep(circ, assignment, exp.sim_config(design), exp.seeds, workers=workers)
            for r in rep.results:
                rows.append({"design": design, "benchmark": spec.name, "seed": r.seed, "depth": r.depth,
                             "fidelity": r.fidelity, "links_generated": r.stats["links_generated"],
                             "links_consumed": r.stats["links_consumed"],
                             "links_discarded": r.stats["links_discarded"],
                             "links_blocked": r.stats["links_blocked"]})
            log.info("%s %s done", spec.name, design)
    return rows


def summarize(rows: list[dict], ideal: dict[str, float]) -> list[dict]:
    groups: dict[tuple[str, str], list[dict]] = {}
    for r in rows:
        groups.setdefault((r["benchmark"], r["design"]), []).append(r)
    out = []
    for (bench, design), rs in groups.items():
        depth = statistics.fmean(r["depth"] for r in rs)
        out.append({"benchmark": bench, "design": design, "runs": len(rs), "mean_depth": depth,
                    "depth_over_ideal": depth / ideal[bench] if ideal[bench] else math.nan,
                    "mean_fidelity": statistics.fmean(r["fidelity"] for r in rs)})
    return out


def _csv_text(rows: list[dict], columns, header: str | None = None) -> str:
    buf = io.StringIO()
    if header:
        buf.write(header + "\n")
    w = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})
    return buf.getvalue()


def cmd_sweep(args) -> int:
    exp = load_config(args.config)
    if args.seeds is not None:
        if args.seeds < 1:
            raise ConfigError("--seeds must be >= 1")
        exp = replace(exp, seeds=tuple(range(exp.seeds[0], exp.seeds[0] + args.seeds)))
    rows = sweep_rows(exp, workers=args.workers)
    stamp = f"# generated {_dt.datetime.now(_dt.timezone.utc).isoformat(timespec='seconds')}"
    out = Path(args.output)
    out.write_text(_csv_text(rows, CSV_COLUMNS, stamp))
    ideal = {}
    for spec in exp.suite:
        ideal[spec.name] = ideal_depth(spec.build(), exp.sim_config("ideal"))
    summary = summarize(rows, ideal)
    cols = ("benchmark", "design", "runs", "mean_depth", "depth_over_ideal", "mean_fidelity")
    summary_path = Path(args.summary) if args.summary else out.with_name(out.stem + "_summary.csv")
    summary_path.write_text(_csv_text(summary, cols))
    print(f"{'benchmark':<12} {'design':<10} {'depth':>9} {'/ideal':>7} {'fidelity':>10}")
    for s in summary:
        print(f"{s['benchmark']:<12} {s['design']:<10} {s['mean_depth']:9.2f} "
              f"{s['depth_over_ideal']:7.3f} {s['mean_fidelity']:10.4g}")
    print(f"{len(rows)} rows -> {out}; summary -> {summary_path}")
    return 0


def cmd_verify(args) -> int:
    res = verify_variants(n_max=args.n, n_segments=args.segments, seed=args.seed)
    total = res["segments"]
    ok = True
    for pol in ("asap", "alap"):
        print(f"{pol.upper()}: {res[pol]}/{total} equivalent")
        ok &= res[pol] == total
    if ok:
        print(f"{total}/{total} equivalent")
    return 0 if ok else 1


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dqc", description="Distributed quantum circuit simulator with buffered "
                                "entanglement generation.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a benchmark circuit as OpenQASM")
    g.add_argument("--bench", choices=BENCHMARKS, required=True)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--steps", type=int, default=10, help="TLIM Trotter steps")
    g.add_argument("--degree", type=int, default=4, help="QAOA graph degree")
    g.add_argument("--layers", type=int, default=1, help="QAOA layers p")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("-o", "--output", required=True)
    g.set_defaults(func=cmd_gen)

    pa = sub.add_parser("partition", help="assign qubits to nodes")
    pa.add_argument("--circ", required=True)
    pa.add_argument("--nodes", type=int, default=2)
    pa.add_argument("--cap", required=True, help="comma-separated node capacities, e.g. 16,16")
    pa.add_argument("--seed", type=int, default=0)
    pa.add_argument("-o", "--output", required=True)
    pa.set_defaults(func=cmd_partition)

    def source_args(sp):
        sp.add_argument("--config", help="JSON config file or preset name")
        sp.add_argument("--circ", help="OpenQASM circuit (otherwise the config's benchmark)")
        sp.add_argument("--bench", help="benchmark name from the config suite (default: first)")
        sp.add_argument("--assign", help="assignment file (otherwise partition on the fly)")
        sp.add_argument("--cap", default="16,16", help="node capacities when no config is given")

    c = sub.add_parser("compile", help="precompile ORIGINAL/ASAP/ALAP segment variants")
    source_args(c)
    c.add_argument("--m", type=int, help="remote gates per segment")
    c.add_argument("-o", "--output", required=True)
    c.set_defaults(func=cmd_compile)

    s = sub.add_parser("simulate", help="run one design for one seed")
    source_args(s)
    s.add_argument("--design", choices=DESIGNS, default="async_buf")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("-o", "--output", required=True, help="SimResult JSON path")
    s.add_argument("--log", help="event log path (default: output with .log suffix)")
    s.set_defaults(func=cmd_simulate)

    w = sub.add_parser("sweep", help="all designs x benchmarks x seeds to CSV")
    w.add_argument("--config", required=True)
    w.add_argument("--seeds", type=int, help="override the number of seeds")
    w.add_argument("--workers", type=int, help="worker processes (default: DQC_THREADS or 1)")
    w.add_argument("-o", "--output", default="sweep.csv")
    w.add_argument("--summary", help="summary CSV path (default: <output>_summary.csv)")
    w.set_defaults(func=cmd_sweep)

    v = sub.add_parser("verify", help="unitary equivalence of ASAP/ALAP variants on random segments")
    v.add_argument("--n", type=int, default=8, help="maximum qubits per segment")
    v.add_argument("--segments", type=int, default=100)
    v.add_argument("--seed", type=int, default=7)
    v.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (ConfigError, QasmError, PartitionError, BenchmarkError, ValueError, OSError) as err:
        print(f"dqc {args.command}: error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
