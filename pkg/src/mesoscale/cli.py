"""Command-line entry point: ``mesoscale <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
import warnings
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np

from . import io
from .errors import MesoError, RegimeWarning
from .experiments import StudySpec, emit_report, run_study
from .fields import approximate_green, approximate_solution, build_model, near_surface_flags
from .geometry import AmbientDomain, CloudSpec, generate_cloud, validate_cloud
from .oracle import OracleConfig, oracle_green, oracle_u
from .system import certificates, dump_system

log = logging.getLogger("mesoscale")


def _oracle_config(args) -> OracleConfig:
    if getattr(args, "oracle_config", None):
        return OracleConfig.from_dict(json.loads(Path(args.oracle_config).read_text()))
    return OracleConfig()


def _flags(model, pts):
    near = near_surface_flags(model, pts)
    return ["near_surface" if f else "" for f in near]


def cmd_gen_cloud(args):
    spec = CloudSpec(
        pattern=args.pattern,
        radius=args.radius,
        spacing=args.spacing,
        n_per_axis=args.n if args.pattern != "random" else None,
        n=args.n if args.pattern == "random" else None,
        jitter_fraction=args.jitter,
        seed=args.seed,
    )
    cloud = generate_cloud(spec)
    ambient = (AmbientDomain.free_space() if args.ambient == "free_space"
               else AmbientDomain.ball(args.ball_radius))
    io.write_cloud(args.output, cloud, ambient)
    print(f"wrote {len(cloud)} inclusions to {args.output}")


def cmd_validate(args):
    cloud, ambient = io.read_cloud(args.cloud)
    report = validate_cloud(cloud, ambient, c=args.c)
    out = asdict(report)
    out["admissible"] = report.admissible
    out["notes"] = list(report.notes)
    if len(cloud):
        model = build_model(cloud, ambient)
        cert = certificates(model.system, np.zeros(len(cloud)), model.cmat, model.params)
        out["lemma3_ratio"] = cert.lemma3_ratio
        out["epsilon"], out["d"] = model.params.epsilon, model.params.d
    print(json.dumps(out, indent=2, default=float))
    return 0 if report.admissible else 1


def cmd_solve(args):
    cloud, ambient = io.read_cloud(args.cloud)
    f = io.read_source(args.source)
    pts = io.read_points(args.points)
    model = build_model(cloud, ambient, f)
    values = np.atleast_1d(approximate_solution(model, pts))
    io.write_values(args.output, pts, values, _flags(model, pts))
    if args.dump_system:
        dump_system(model.system, model.cmat, args.dump_system)


def cmd_green(args):
    cloud, ambient = io.read_cloud(args.cloud)
    x = io.parse_point(args.x)
    pts = io.read_points(args.points)
    model = build_model(cloud, ambient)
    values = np.atleast_1d(approximate_green(model, x, pts))
    io.write_values(args.output, pts, values, _flags(model, pts))
    if args.dump_system:
        dump_system(model.system, model.cmat, args.dump_system)


def cmd_oracle_u(args):
    cloud, ambient = io.read_cloud(args.cloud)
    f = io.read_source(args.source)
    pts = io.read_points(args.points)
    values = np.atleast_1d(oracle_u(cloud, ambient, f, pts, _oracle_config(args)))
    io.write_values(args.output, pts, values)


def cmd_oracle_green(args):
    cloud, ambient = io.read_cloud(args.cloud)
    x = io.parse_point(args.x)
    pts = io.read_points(args.points)
    # G_N is symmetric, so x serves as the single pole
    values = np.atleast_1d(oracle_green(cloud, ambient, pts, x, _oracle_config(args)))
    io.write_values(args.output, pts, values)


def cmd_converge(args):
    data = json.loads(Path(args.spec).read_text())
    spec = StudySpec.from_dict(data)
    overrides = {"threads": args.threads}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.oracle_config:
        overrides["oracle"] = _oracle_config(args)
    spec = replace(spec, **overrides)
    result = run_study(spec)
    files = emit_report(result, args.output)
    slope = result.fitted_slope
    print(f"slope {'n/a' if slope is None else f'{slope:.4f}'}; report in {files['rows'].parent}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="mesoscale", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-cloud", parents=[common], help="generate an inclusion cloud")
    g.add_argument("--pattern", choices=["lattice", "jittered-lattice", "random"], default="lattice")
    g.add_argument("--n", type=int, required=True, help="points per axis (lattice) or count")
    g.add_argument("--spacing", type=float, required=True)
    g.add_argument("--radius", type=float, required=True)
    g.add_argument("--jitter", type=float, default=0.0)
    g.add_argument("--ambient", choices=["free_space", "ball"], default="free_space")
    g.add_argument("--ball-radius", type=float, default=None)
    g.add_argument("-o", "--output", required=True)
    g.set_defaults(func=cmd_gen_cloud)

    v = sub.add_parser("validate", parents=[common], help="check a cloud file")
    v.add_argument("--cloud", required=True)
    v.add_argument("--c", type=float, default=0.1, help="regime constant")
    v.set_defaults(func=cmd_validate)

    for name, func, oracle in (("solve", cmd_solve, False), ("oracle-u", cmd_oracle_u, True)):
        s = sub.add_parser(name, parents=[common])
        s.add_argument("--cloud", required=True)
        s.add_argument("--source", required=True)
        s.add_argument("--points", required=True)
        s.add_argument("-o", "--output", required=True)
        if oracle:
            s.add_argument("--oracle-config")
        else:
            s.add_argument("--dump-system")
        s.set_defaults(func=func)

    for name, func, oracle in (("green", cmd_green, False), ("oracle-green", cmd_oracle_green, True)):
        s = sub.add_parser(name, parents=[common])
        s.add_argument("--cloud", required=True)
        s.add_argument("--x", required=True, help='pole as "x,y,z"')
        s.add_argument("--points", required=True)
        s.add_argument("-o", "--output", required=True)
        if oracle:
            s.add_argument("--oracle-config")
        else:
            s.add_argument("--dump-system")
        s.set_defaults(func=func)

    c = sub.add_parser("converge", parents=[common], help="run a convergence study")
    c.add_argument("--spec", required=True)
    c.add_argument("--oracle-config")
    c.add_argument("-o", "--output", required=True)
    c.set_defaults(func=cmd_converge)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "gen-cloud" and args.seed is None:
        args.seed = 0
    with warnings.catch_warnings():
        warnings.simplefilter("always", RegimeWarning)
        try:
            rc = args.func(args)
        except (MesoError, ValueError, OSError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
    return int(rc or 0)


if __name__ == "__main__":
    sys.exit(main())
