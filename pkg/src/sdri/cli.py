"""Command-line front end.

Every command writes line-delimited JSON records to stdout, starting with a
header record that carries the seed.  Failures emit an ``error`` record and
exit with status 1.
"""

from __future__ import annotations

import argparse
import csv
import io as _io
import json
import sys
import time
from pathlib import Path

from . import __version__
from .analysis import SequenceKind, generate_sequence, lsc_check, tau_convergence_report
from .elasticity import build_mesh, elastic_energy, solve_equilibrium, total_energy
from .geometry import Grid, validate_configuration
from .io import load_config, load_material, load_tensions, save_config
from .minimize import MinimizeParams, minimize_constrained, minimize_penalized
from .render import render_svg
from .surface import SurfaceTensions

DEFAULT_SEED = 0
DEFAULT_TENSIONS = "1,1.5,0.5"


def _pair(kind):
    def parse(text: str):
        parts = text.split(",")
        if len(parts) != 2:
            raise argparse.ArgumentTypeError(f"expected two comma-separated values, got {text!r}")
        return tuple(kind(p) for p in parts)
    return parse


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="configuration JSON file")
    p.add_argument("--tensions", default=DEFAULT_TENSIONS,
                   help="tension JSON file, inline JSON, or 'phi_F,phi_S,phi_FS' (default %(default)s)")
    p.add_argument("--material", help="material JSON file or 'lam,mu'")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--out", help="output file or directory")
    p.add_argument("--deterministic", action="store_true", help="omit wall-clock fields from records")
    p.add_argument("--render-every", type=int, default=0, metavar="N",
                   help="write an SVG snapshot every N accepted moves (needs --out)")
    p.add_argument("--lambda", dest="lam", type=_pair(float), metavar="L0,L1")
    p.add_argument("--volumes", type=_pair(float), metavar="V0,V1")
    p.add_argument("--m", type=_pair(int), default=(10**9, 10**9), metavar="M0,M1")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sdri", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (("validate", "check admissibility"), ("energy", "evaluate the energy"),
                        ("relax", "solve the elastic equilibrium"), ("render", "draw an SVG")):
        _common(sub.add_parser(name, help=help_))
    p = sub.add_parser("minimize", help="anneal the energy")
    _common(p)
    p.add_argument("--mode", choices=("penalized", "constrained"), default="penalized")
    p.add_argument("--steps", type=int, default=2000)
    p.add_argument("--T0", type=float, default=0.05)
    p.add_argument("--cooling", type=float, default=0.999)
    p.add_argument("--cadence", type=int, default=25)
    p.add_argument("--debug", action="store_true")
    p = sub.add_parser("lsc", help="lower-semicontinuity report for a sequence kind")
    _common(p)
    p.add_argument("kind", choices=[k.value for k in SequenceKind])
    p.add_argument("--K", type=int, default=4)
    p.add_argument("--grid", type=_pair(int), default=(16, 16), metavar="NX,NY")
    p.add_argument("--tolerance", type=float, default=1e-9)
    p = sub.add_parser("sweep", help="penalized runs over lambda values or phi_S ratios (CSV)")
    _common(p)
    p.add_argument("--lambdas", help="semicolon-separated 'l0,l1' pairs")
    p.add_argument("--ratios", help="comma-separated multipliers of phi_S")
    p.add_argument("--steps", type=int, default=1000)
    p.add_argument("--T0", type=float, default=0.05)
    p.add_argument("--cooling", type=float, default=0.999)
    return parser


class _Emitter:
    def __init__(self, stream):
        self.stream = stream

    def __call__(self, record: dict) -> None:
        self.stream.write(json.dumps(record, sort_keys=True) + "\n")


def _need(args, name):
    if getattr(args, name) is None:
        raise ValueError(f"--{name} is required for {args.command}")
    return getattr(args, name)


def _cmd_validate(args, emit):
    rep = validate_configuration(load_config(_need(args, "config")), args.m)
    emit({"record": "admissibility", **rep.as_record()})


def _cmd_energy(args, emit):
    cfg = load_config(_need(args, "config"))
    tensions = load_tensions(args.tensions)
    material = load_material(args.material) if args.material else None
    br = total_energy(cfg, tensions, material, args.lam, args.volumes)
    emit({"record": "energy", **br.as_record()})


def _cmd_relax(args, emit):
    cfg = load_config(_need(args, "config"))
    material = load_material(_need(args, "material"))
    mesh = build_mesh(cfg)
    u = solve_equilibrium(mesh, material)
    emit({"record": "relax", "W": elastic_energy(cfg, u, material), "residual": u.residual,
          "nodes": mesh.n_nodes, "components": mesh.n_components,
          "duplicated_vertices": mesh.duplicated_vertices()})
    if args.out:
        Path(args.out).write_text("".join(json.dumps(r, sort_keys=True) + "\n" for r in u.as_records()))


def _cmd_minimize(args, emit):
    cfg = load_config(_need(args, "config"))
    tensions = load_tensions(args.tensions)
    material = load_material(args.material) if args.material else None
    params = MinimizeParams(m=args.m, volumes=args.volumes, lam=args.lam or (0.0, 0.0), T0=args.T0,
                            cooling=args.cooling, steps=args.steps, seed=args.seed,
                            cadence=args.cadence, debug=args.debug)
    out = Path(args.out) if args.out else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    n_acc = [0]

    def snapshot(step, c):
        n_acc[0] += 1
        if out is not None and args.render_every > 0 and n_acc[0] % args.render_every == 0:
            (out / f"step_{step:07d}.svg").write_text(render_svg(c))

    emit({"record": "params", "mode": args.mode, **params.as_record()})
    t0 = time.perf_counter()
    run = minimize_constrained if args.mode == "constrained" else minimize_penalized
    traj = run(cfg, tensions, material, params, callback=snapshot)
    for r in traj.records:
        emit({"record": "step", **r})
    final = {"record": "best", "F": traj.best_F, "area_S": traj.best.area_S(), "area_A": traj.best.area_A()}
    if not args.deterministic:
        final["elapsed_s"] = time.perf_counter() - t0
    emit(final)
    if out is not None:
        save_config(traj.best, out / "best.json")
        (out / "trajectory.jsonl").write_text(traj.to_jsonl())


def _cmd_lsc(args, emit):
    grid = Grid(1.0, 1.0, *args.grid)
    seq = generate_sequence(args.kind, args.K, grid)
    tensions = load_tensions(args.tensions)
    conv = tau_convergence_report(seq.members, seq.limit, seq.bounds)
    emit({"record": "convergence", "kind": args.kind, **conv.as_record()})
    emit({"record": "lsc", "kind": args.kind, **lsc_check(seq.members, seq.limit, tensions, args.tolerance).as_record()})


def _cmd_sweep(args, emit):
    cfg = load_config(_need(args, "config"))
    tensions = load_tensions(args.tensions)
    material = load_material(args.material) if args.material else None
    volumes = args.volumes or (cfg.area_S(), cfg.area_A())
    rows = []
    if args.lambdas:
        settings = [("lambda", p, tensions, tuple(float(v) for v in p.split(","))) for p in args.lambdas.split(";")]
    elif args.ratios:
        settings = [("phi_S_ratio", r, SurfaceTensions(tensions.phi_F, tensions.phi_S.scaled(float(r)),
                                                       tensions.phi_FS, tensions.weights), args.lam or (0.0, 0.0))
                    for r in args.ratios.split(",")]
    else:
        raise ValueError("sweep needs --lambdas or --ratios")
    # runs are independent; results are merged in parameter order
    for name, value, t, lam in settings:
        params = MinimizeParams(m=args.m, volumes=volumes, lam=lam, T0=args.T0, cooling=args.cooling,
                                steps=args.steps, seed=args.seed)
        traj = minimize_penalized(cfg, t, material, params)
        b = traj.best
        rows.append({"parameter": name, "value": value, "best_F": traj.best_F,
                     "volume_error_S": abs(b.area_S() - volumes[0]), "volume_error_A": abs(b.area_A() - volumes[1])})
    buf = _io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    if args.out:
        Path(args.out).write_text(buf.getvalue())
        emit({"record": "sweep", "rows": len(rows), "csv": str(args.out)})
    else:
        emit.stream.write(buf.getvalue())


def _cmd_render(args, emit):
    svg = render_svg(load_config(_need(args, "config")))
    if args.out:
        Path(args.out).write_text(svg)
        emit({"record": "render", "svg": str(args.out)})
    else:
        emit.stream.write(svg)


COMMANDS = {"validate": _cmd_validate, "energy": _cmd_energy, "relax": _cmd_relax,
            "minimize": _cmd_minimize, "lsc": _cmd_lsc, "sweep": _cmd_sweep, "render": _cmd_render}


def run(argv=None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    args = build_parser().parse_args(argv)
    emit = _Emitter(stdout)
    if args.command not in ("render", "sweep") or args.out:
        emit({"record": "header", "command": args.command, "seed": args.seed, "version": __version__})
    try:
        COMMANDS[args.command](args, emit)
    except Exception as exc:  # every module error becomes a record
        emit({"record": "error", "type": type(exc).__name__, "message": str(exc)})
        return 1
    return 0


def main() -> None:
    sys.exit(run())
