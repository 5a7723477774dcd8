"""Command-line entry points for serving, data prep, and benchmarking."""

from __future__ import annotations

import argparse
import errno
import json
import logging
import os
import socket
import sys

from .errors import BindError, ConfigError, GridplanError

EXIT_CONFIG = 2
EXIT_BIND = 13

log = logging.getLogger("gridplan")


def _bind_socket(host: str, port: int) -> socket.socket:
    sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    try:
        sock.bind((host, port))
    except OSError as exc:
        sock.close()
        if exc.errno == errno.EADDRINUSE:
            raise BindError(f"{host}:{port} already in use") from exc
        raise
    sock.listen(128)
    return sock


def cmd_serve(args) -> int:
    import uvicorn

    from .runtime.apps import create_app
    from .runtime.config import load_config

    cfg = load_config(args.config)
    if args.role:
        cfg.role = args.role
    if args.port is not None:
        cfg.listen_port = args.port
    cfg.validate()
    app = create_app(cfg)
    sock = _bind_socket(cfg.listen_host, cfg.listen_port)
    host, port = sock.getsockname()[:2]
    print(f"GRIDPLAN_LISTENING {host}:{port}", flush=True)
    config = uvicorn.Config(
        app,
        log_level=os.environ.get("GRIDPLAN_LOG_LEVEL", "info"),
        timeout_keep_alive=75,
        access_log=False,
    )
    server = uvicorn.Server(config)
    server.run(sockets=[sock])
    return 0


def cmd_ingest(args) -> int:
    from .geo import BoundingBox
    from .store import ingest, persist

    bbox = BoundingBox.parse(args.bbox)
    store = ingest(
        bbox,
        power_source=args.power,
        railway_source=args.railways,
        bridge_source=args.bridges,
    )
    persist(store, args.out)
    print(
        f"ingested {len(store.towers)} towers, {len(store.power_lines)} lines, "
        f"{len(store.railway_nodes)} railway nodes, {len(store.bridges)} bridges -> {args.out}"
    )
    return 0


def cmd_build_graph(args) -> int:
    from .graphbuild import build_graph, write_graph_file
    from .store import load

    store = load(args.store)
    graph = build_graph(
        store,
        penalty_factor=args.penalty_factor,
        indirect_radius_m=args.indirect_radius,
        include_bridges=args.include_bridges,
    )
    write_graph_file(graph, args.out)
    print(f"graph with {len(graph.nodes)} nodes / {len(graph.edges)} edges -> {args.out}")
    return 0


def cmd_synth_graph(args) -> int:
    from .bench.synth import generate_synthetic_graph
    from .graphbuild import write_graph_file

    graph = generate_synthetic_graph(n_nodes=args.nodes, seed=args.seed)
    write_graph_file(graph, args.out)
    print(f"synthetic graph with {len(graph.nodes)} nodes / {len(graph.edges)} edges -> {args.out}")
    return 0


def fixture_path() -> str:
    return os.path.join(os.path.dirname(__file__), "data", "denmark_fixture.json")


def cmd_fixture_assets(args) -> int:
    from .geo import BoundingBox
    from .graphbuild import build_graph, write_graph_file
    from .store import ingest, persist

    fixture = fixture_path()
    bbox = BoundingBox(54.0, 8.0, 57.0, 12.0)
    store = ingest(bbox, fixture, fixture, fixture)
    store_dir = os.path.join(args.out, "store")
    persist(store, store_dir)
    graph = build_graph(store)
    graph_file = os.path.join(args.out, "graph.json")
    write_graph_file(graph, graph_file)
    meta = {
        "fixture": fixture,
        "store": store_dir,
        "graph": graph_file,
        "towers": len(store.towers),
        "graph_nodes": len(graph.nodes),
        "graph_edges": len(graph.edges),
    }
    with open(os.path.join(args.out, "meta.json"), "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=1)
    print(f"fixture assets -> {args.out} ({meta['towers']} towers)")
    return 0


def cmd_golden(args) -> int:
    from .bench.workload import WorkloadSpec, generate_workload
    from .graphbuild import read_graph_file
    from .runtime.conformance import generate_golden, save_golden

    graph = read_graph_file(args.graph)
    spec = WorkloadSpec(
        source_counts=[1, 2], target_counts=[1, 2, 4], reps_per_cell=max(1, args.count // 6),
        seed=args.seed,
    )
    requests = [r.payload for r in generate_workload(spec, graph)][: args.count]
    golden = generate_golden(args.endpoint, requests)
    save_golden(golden, args.out)
    print(f"golden with {len(golden['cases'])} cases -> {args.out}")
    return 0


def cmd_conformance(args) -> int:
    from .runtime.conformance import load_golden, run_conformance

    golden = load_golden(args.golden)
    report = run_conformance(args.url, golden)
    for case in report.cases:
        status = "PASS" if case.ok else "FAIL"
        print(f"case {case.index}: {status}")
        for diff in case.diffs:
            print(f"  {diff}")
    print(f"conformance: {'PASS' if report.passed else 'FAIL'} "
          f"({sum(c.ok for c in report.cases)}/{len(report.cases)} cases)")
    return 0 if report.passed else 1


def _load_spec(args):
    from .bench.workload import PAPER_REPS, WorkloadSpec

    if args.spec:
        with open(args.spec, "r", encoding="utf-8") as fh:
            spec = WorkloadSpec.from_json_dict(json.load(fh))
    else:
        spec = WorkloadSpec(seed=args.seed)
    if getattr(args, "paper_scale", False):
        spec.reps_per_cell = PAPER_REPS
    return spec


def cmd_bench(args) -> int:
    from .bench.report import build_report, write_report
    from .bench.runner import run_benchmark
    from .bench.workload import generate_workload, workload_hash
    from .graphbuild import read_graph_file

    spec = _load_spec(args)
    graph = read_graph_file(args.graph)
    requests = generate_workload(spec, graph)
    samples = run_benchmark(
        args.endpoint, requests, args.mode_label, args.replicas, args.out, warmup=not args.no_warmup
    )
    report = build_report(samples, args.mode_label, args.replicas, workload_hash(requests))
    write_report(report, args.out)
    ok = sum(1 for s in samples if s.outcome == "success")
    print(f"{len(samples)} samples ({ok} successes) -> {args.out}")
    return 0


def cmd_compare(args) -> int:
    from .bench.compare import compare_reports

    result = compare_reports(args.a, args.b, args.out)
    for row in result["cells"]:
        print(
            f"S={row['sources']:>2} T={row['targets']:>2} speedup {row['speedup']:.2f}x"
        )
    print(f"comparison -> {args.out}")
    return 0


def cmd_experiment(args) -> int:
    from .bench.experiment import run_experiment

    spec = _load_spec(args)
    summary = run_experiment(
        args.graph,
        args.out,
        spec=spec,
        replicas=args.replicas,
        max_in_flight=args.max_in_flight,
        jit=args.jit,
    )
    print(json.dumps(summary["speedups"], indent=1))
    print(f"experiment -> {args.out}")
    return 0


def cmd_kernel_bench(args) -> int:
    from .bench.kernelbench import format_rows, run_kernel_bench

    rows = run_kernel_bench(n_nodes=args.nodes, seed=args.seed)
    print(format_rows(rows))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gridplan", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("serve", help="run one service role or the monolith")
    p.add_argument("--role", choices=["ingest", "graph", "pathfinder", "solver", "monolith"])
    p.add_argument("--config", help="JSON config file; env vars override")
    p.add_argument("--port", type=int, default=None)
    p.set_defaults(fn=cmd_serve)

    p = sub.add_parser("ingest", help="fetch infrastructure into a store directory")
    p.add_argument("--bbox", required=True, help="S,W,N,E in degrees")
    p.add_argument("--power", required=True, help="Overpass URL or fixture file")
    p.add_argument("--railways", default=None)
    p.add_argument("--bridges", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_ingest)

    p = sub.add_parser("build-graph", help="build the weighted graph from a store")
    p.add_argument("--store", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--penalty-factor", type=float, default=3.0)
    p.add_argument("--indirect-radius", type=float, default=500.0)
    p.add_argument("--include-bridges", action="store_true")
    p.set_defaults(fn=cmd_build_graph)

    p = sub.add_parser("synth-graph", help="generate a synthetic benchmark graph")
    p.add_argument("--nodes", type=int, default=5000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_synth_graph)

    p = sub.add_parser("fixture-assets", help="materialize the bundled fixture store and graph")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_fixture_assets)

    p = sub.add_parser("golden", help="record golden plans from a trusted deployment")
    p.add_argument("--endpoint", required=True)
    p.add_argument("--graph", required=True)
    p.add_argument("--count", type=int, default=12)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_golden)

    p = sub.add_parser("conformance", help="compare a deployment against golden plans")
    p.add_argument("--url", required=True)
    p.add_argument("--golden", required=True)
    p.set_defaults(fn=cmd_conformance)

    p = sub.add_parser("bench", help="run the workload sweep against one endpoint")
    p.add_argument("--endpoint", required=True)
    p.add_argument("--graph", required=True)
    p.add_argument("--spec", default=None, help="workload spec JSON")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--mode-label", default="deployment")
    p.add_argument("--replicas", type=int, default=1)
    p.add_argument("--paper-scale", action="store_true", help="100 reps per cell")
    p.add_argument("--no-warmup", action="store_true")
    p.set_defaults(fn=cmd_bench)

    p = sub.add_parser("compare", help="compare two benchmark output dirs")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_compare)

    p = sub.add_parser("experiment", help="full monolith vs microservices sweep")
    p.add_argument("--graph", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--spec", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--replicas", type=int, default=10)
    p.add_argument("--max-in-flight", type=int, default=32)
    p.add_argument("--paper-scale", action="store_true")
    p.add_argument("--jit", action="store_true", help="leave kernel JIT enabled in services")
    p.set_defaults(fn=cmd_experiment)

    p = sub.add_parser("kernel-bench", help="compare jit kernels with pure fallbacks")
    p.add_argument("--nodes", type=int, default=5000)
    p.add_argument("--seed", type=int, default=7)
    p.set_defaults(fn=cmd_kernel_bench)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=os.environ.get("GRIDPLAN_LOG_LEVEL", "INFO").upper())
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BindError as exc:
        print(f"bind error: {exc}", file=sys.stderr)
        return EXIT_BIND
    except GridplanError as exc:
        print(f"error: {exc.__class__.__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
