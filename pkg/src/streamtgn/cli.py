"""Command-line frontend: gen, verify, bench, speedup-table, params.

Reports are key=value lines; wall-time lines carry a `time.` prefix so
golden comparisons can drop them. Exit codes: 0 success, 1 verification
failure, 2 input error. STREAMTGN_REPORT overrides the report path.
"""

from __future__ import annotations

import argparse
import os
import sys

from .config import ConfigError, Dims, RunConfig
from .params import init_params, load_params, save_params
from .runner import run_bench, run_verify
from .speedup import speedup_table
from .streamio import StreamParseError, generate_stream, read_stream, write_stream


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key=value file; entries override flags")
    p.add_argument("--batch", "-B", type=int, default=200)
    p.add_argument("--fanout", "-L", type=int, default=10)
    p.add_argument("--layers", "-K", type=int, default=1)
    p.add_argument("--mode", choices=("exact", "delta"), default="exact")
    p.add_argument("--agg", choices=("mean", "last", "sum"), default="last")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--nodes", type=int, default=0,
                   help="node universe size (0 = infer from stream)")
    p.add_argument("--rebuild", default="never",
                   help="adaptive | fixed:<R> | never")
    p.add_argument("--gamma", type=float, default=0.9)
    p.add_argument("--delta-max", type=float, default=0.5)
    p.add_argument("--alpha", type=float, default=0.1)
    p.add_argument("--queue-capacity", type=int, default=1 << 16)
    p.add_argument("--d-s", type=int, default=8)
    p.add_argument("--d-t", type=int, default=8)
    p.add_argument("--d-x", type=int, default=0)
    p.add_argument("--d-m", type=int, default=8)
    p.add_argument("--d-k", type=int, default=4)
    p.add_argument("--heads", type=int, default=2)
    p.add_argument("--sort", action="store_true",
                   help="stable-sort an out-of-order stream instead of failing")
    p.add_argument("--report", help="report path (default stdout)")
    p.add_argument("--drift-check-every", type=int, default=0)


_CONFIG_KEYS = {
    "batch": int, "fanout": int, "layers": int, "mode": str, "agg": str,
    "seed": int, "nodes": int, "rebuild": str, "gamma": float,
    "delta_max": float, "alpha": float, "queue_capacity": int,
    "d_s": int, "d_t": int, "d_x": int, "d_m": int, "d_k": int, "heads": int,
}


def _apply_config_file(args, path: str) -> None:
    with open(path) as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{line_no}: expected key=value")
            key, val = line.split("=", 1)
            key = key.strip().replace("-", "_")
            if key not in _CONFIG_KEYS:
                raise ConfigError(f"{path}:{line_no}: unknown key {key!r}")
            setattr(args, key, _CONFIG_KEYS[key](val.strip()))


def _build_config(args, d_e: int) -> RunConfig:
    rebuild, interval = args.rebuild, 0
    if rebuild.startswith("fixed:"):
        rebuild, interval = "fixed", int(args.rebuild.split(":", 1)[1])
    dims = Dims(d_s=args.d_s, d_e=d_e, d_t=args.d_t, d_x=args.d_x,
                d_m=args.d_m, d_k=args.d_k, heads=args.heads, layers=args.layers)
    cfg = RunConfig(dims=dims, batch_size=args.batch, fanout=args.fanout,
                    mode=args.mode, aggregator=args.agg, rebuild=rebuild,
                    rebuild_interval=interval, gamma=args.gamma,
                    delta_max=args.delta_max, alpha=args.alpha, seed=args.seed,
                    queue_capacity=args.queue_capacity, nodes=args.nodes)
    cfg.validate()
    return cfg


def _emit(text: str, args) -> None:
    path = os.environ.get("STREAMTGN_REPORT") or getattr(args, "report", None)
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _cmd_gen(args) -> int:
    edges = generate_stream(seed=args.seed, n=args.nodes, m=args.edges,
                            attachment=args.attachment, burstiness=args.burstiness,
                            d_e=args.d_e)
    write_stream(edges, args.d_e, args.out)
    return 0


def _cmd_verify(args) -> int:
    edges, d_e = read_stream(args.input, sort=args.sort)
    cfg = _build_config(args, d_e)
    result = run_verify(cfg, edges, drift_check_every=args.drift_check_every)
    _emit(result.report(), args)
    return result.exit_code(cfg.mode)


def _cmd_bench(args) -> int:
    edges, d_e = read_stream(args.input, sort=args.sort)
    cfg = _build_config(args, d_e)
    result = run_bench(cfg, edges)
    _emit(result.report(), args)
    return 0


def _cmd_speedup_table(args) -> int:
    rows = []
    for spec in args.row or []:
        parts = [int(x) for x in spec.split(",")]
        if len(parts) != 4:
            raise ConfigError(f"--row wants n,B,L,K (got {spec!r})")
        if parts[3] < 1:
            raise ConfigError("K must be >= 1")
        rows.append(tuple(parts))
    sys.stdout.write(speedup_table(rows))
    return 0


def _cmd_params(args) -> int:
    if args.action == "init":
        dims = Dims(d_s=args.d_s, d_e=args.d_e, d_t=args.d_t, d_x=args.d_x,
                    d_m=args.d_m, d_k=args.d_k, heads=args.heads, layers=args.layers)
        save_params(init_params(args.seed, dims), args.out)
        return 0
    params = load_params(args.infile)
    for name, t in params.tensors().items():
        sys.stdout.write(f"{name} shape={','.join(str(s) for s in t.shape)}\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="streamtgn")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a synthetic edge stream")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--nodes", type=int, required=True)
    g.add_argument("--edges", type=int, required=True)
    g.add_argument("--attachment", choices=("uniform", "preferential"), default="uniform")
    g.add_argument("--burstiness", type=float, default=1.0)
    g.add_argument("--d-e", type=int, default=4)
    g.add_argument("--out", required=True)
    g.set_defaults(func=_cmd_gen)

    v = sub.add_parser("verify", help="lockstep oracle vs incremental run")
    v.add_argument("--input", required=True)
    _add_config_flags(v)
    v.set_defaults(func=_cmd_verify)

    b = sub.add_parser("bench", help="incremental run with counters")
    b.add_argument("--input", required=True)
    _add_config_flags(b)
    b.set_defaults(func=_cmd_bench)

    t = sub.add_parser("speedup-table", help="theoretical speedup table")
    t.add_argument("--row", action="append", help="extra row n,B,L,K (repeatable)")
    t.set_defaults(func=_cmd_speedup_table)

    p = sub.add_parser("params", help="parameter file tools")
    psub = p.add_subparsers(dest="action", required=True)
    pi = psub.add_parser("init")
    pi.add_argument("--seed", type=int, default=0)
    pi.add_argument("--out", required=True)
    for flag, dv in (("--d-s", 8), ("--d-e", 4), ("--d-t", 8), ("--d-x", 0),
                     ("--d-m", 8), ("--d-k", 4), ("--heads", 2), ("--layers", 1)):
        pi.add_argument(flag, type=int, default=dv)
    pd = psub.add_parser("dump")
    pd.add_argument("infile")
    p.set_defaults(func=_cmd_params)

    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        if getattr(args, "config", None):
            _apply_config_file(args, args.config)
        return args.func(args)
    except (StreamParseError, ConfigError, FileNotFoundError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
