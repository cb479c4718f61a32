"""Command-line entry point: ``gapstrand {run,calibrate,tensors,plot}``."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import BACKEND, __version__
from .config import SOLVERS, StudyConfig, default_config, load
from .errors import GapStrandError


def _config(args) -> StudyConfig:
    cfg = load(args.config) if args.config else default_config()
    models = args.models.split(",") if args.models else None
    solvers = [args.solver] if args.solver and args.solver != "both" else None
    cfg = cfg.select(models, solvers)
    if args.dt is not None:
        cfg = replace(cfg, dt=args.dt)
    if args.nodes_per_cell is not None:
        cfg = replace(cfg, geometry=replace(cfg.geometry, nodes_per_cell=args.nodes_per_cell))
    if args.continuum_nodes is not None:
        cfg = replace(cfg, continuum_nodes=args.continuum_nodes)
    return cfg


def _cmd_run(args) -> int:
    from .harness import run_matrix

    cfg = _config(args)
    out = Path(args.out)
    result = run_matrix(cfg, out, jobs=args.jobs)
    print("\n".join(result.status_lines()))
    for o in result.orderings:
        print(f"{'holds' if o.holds else 'fails'}  {o.description}")
    n_ok = sum(r.ok for r in result.runs)
    print(f"{n_ok}/{len(result.runs)} runs completed; artifacts in {out}")
    return 0 if result.ok else 1


def _cmd_calibrate(args) -> int:
    from .harness import calibrate_stimulus

    cfg = _config(args)
    status = 0
    print("model,solver,threshold,amplitude,trials")
    for m in cfg.models:
        for s in cfg.solvers:
            try:
                c = calibrate_stimulus(cfg, m.model_id, s)
            except GapStrandError as exc:
                print(f"{m.model_id},{s},,,failed: {exc}")
                status = 1
                continue
            print(f"{m.model_id},{s},{c.threshold:.10g},{c.amplitude:.10g},{len(c.trials)}", flush=True)
    return status


def _cmd_tensors(args) -> int:
    from .harness import tensor_rows
    from .homogenisation import numeric_tensors, write_tensor_report

    cfg = _config(args)
    rows = tensor_rows(cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_tensor_report(rows, out / "tensors.csv")
    print(open(out / "tensors.csv").read(), end="")
    if args.numeric:
        print("model,Sigma_i_11_numeric,relative_difference")
        for model_id, t in rows:
            m = cfg.model(model_id)
            n = numeric_tensors(cfg.geometry, cfg.sigma_i, m.sigma_g, cfg.sigma_e)
            ref = t.Sigma_i[0, 0]
            print(f"{model_id},{n.Sigma_i[0, 0]:.12g},{abs(n.Sigma_i[0, 0] - ref) / ref:.3e}")
    return 0


def _cmd_plot(args) -> int:
    from .harness import load_records, write_plots

    cfg = _config(args)
    recs = load_records(cfg, args.out)
    if not recs:
        print(f"no run artifacts under {args.out}", file=sys.stderr)
        return 1
    for p in write_plots(recs, cfg, Path(args.out) / "plots"):
        print(p)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gapstrand", description="Discrete and homogenised cardiac strand simulations.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__} ({BACKEND} kernel)")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="study config file (default: bundled seven-model study)")
    common.add_argument("--models", help="comma-separated model ids, e.g. Base,1")
    common.add_argument("--solver", choices=(*SOLVERS, "both"), default="both")
    common.add_argument("--out", default="out", help="artifact directory")
    common.add_argument("--dt", type=float, help="time step (ms)")
    common.add_argument("--nodes-per-cell", type=int, help="discrete nodes per subunit")
    common.add_argument("--continuum-nodes", type=int, help="continuum grid nodes")
    common.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", parents=[common], help="calibrate and run the model matrix")
    p.add_argument("--jobs", type=int, default=1, help="concurrent runs")
    p.set_defaults(func=_cmd_run)
    sub.add_parser("calibrate", parents=[common], help="stimulus threshold search only").set_defaults(func=_cmd_calibrate)
    p = sub.add_parser("tensors", parents=[common], help="effective tensor report")
    p.add_argument("--numeric", action="store_true", help="also solve the cell problems")
    p.set_defaults(func=_cmd_tensors)
    sub.add_parser("plot", parents=[common], help="redraw plots from an artifact directory").set_defaults(func=_cmd_plot)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except GapStrandError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
