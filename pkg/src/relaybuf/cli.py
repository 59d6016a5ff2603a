"""Command-line entry point: ``relaybuf curve|figure|validate|optimize-rate``.

Exit status: 0 success, 1 usage or configuration error, 2 validation
failure, 3 numerical failure (including sweep points that could not be
evaluated).
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .errors import ConfigError, QuadratureError, RelaybufError
from .experiments import (FIGURES, VARIABLES, SimSettings, SweepSpec, cmd_curve, cmd_figure,
                          cmd_validate, default_params, make_grid, optimize_rate)
from .params import PolicyKind, load_config

EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, EXIT_NUMERIC = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _config(path: str):
    """A JSON config file, or ``default`` for the built-in scenario."""
    return default_params() if path == "default" else load_config(path)


def _sim(args):
    if args.sim is None:
        return None
    return SimSettings(n_slots=args.sim, burn_in=args.burn_in, seed=args.seed)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="relaybuf", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    schemes = [s.value for s in PolicyKind]

    def sim_opts(q):
        q.add_argument("--sim", type=int, metavar="N", help="simulate N slots per point")
        q.add_argument("--burn-in", type=int, metavar="B", help="burn-in slots (default per chain)")
        q.add_argument("--seed", type=int, default=0)

    c = sub.add_parser("curve", help="sweep one parameter and write <out>/curve.csv and .svg")
    c.add_argument("--config", required=True, help="JSON config file or 'default'")
    c.add_argument("--var", required=True, choices=VARIABLES)
    c.add_argument("--from", dest="start", type=float, required=True)
    c.add_argument("--to", dest="stop", type=float, required=True)
    c.add_argument("--step", type=float, required=True)
    c.add_argument("--schemes", nargs="+", default=["IBEP", "IOFP", "NIBEP", "NIOFP", "HU", "DT"],
                   choices=schemes)
    c.add_argument("--metric", choices=("outage", "throughput"), default="outage")
    sim_opts(c)
    c.add_argument("--out", required=True)
    c.add_argument("--name", default="curve", help="output file stem")
    c.add_argument("--reproducible", action="store_true", help="omit the timestamp line")

    f = sub.add_parser("figure", help="reproduce a figure preset")
    f.add_argument("name", choices=FIGURES)
    sim_opts(f)
    f.add_argument("--out", required=True)
    f.add_argument("--reproducible", action="store_true", help="omit the timestamp line")

    v = sub.add_parser("validate", help="cross-check closed forms against simulation")
    v.add_argument("--config", required=True, help="JSON config file or 'default'")
    v.add_argument("--sim", type=int, default=1_000_000, metavar="N")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--z1-scale", type=float, default=1.0,
                   help="multiply the analytic buffer decay rate (sensitivity check)")

    o = sub.add_parser("optimize-rate", help="target rate maximising throughput")
    o.add_argument("--config", required=True, help="JSON config file or 'default'")
    o.add_argument("--snr-db", type=float, required=True)
    o.add_argument("--scheme", required=True, choices=schemes)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except ConfigError as exc:
        print(f"relaybuf: configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (QuadratureError, ArithmeticError) as exc:
        print(f"relaybuf: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except RelaybufError as exc:
        print(f"relaybuf: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def _dispatch(args) -> int:
    if args.command == "curve":
        from .svgplot import line_chart

        spec = SweepSpec(args.var, make_grid(args.start, args.stop, args.step),
                         tuple(args.schemes), _config(args.config), sim=_sim(args),
                         metric=args.metric)
        table = cmd_curve(spec)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{args.name}.csv").write_text(table.to_csv(args.reproducible), encoding="utf-8")
        (out / f"{args.name}.svg").write_text(
            line_chart(table, title=f"{args.metric} vs {args.var}", xlabel=args.var,
                       ylabel=args.metric, logy=args.metric == "outage"), encoding="utf-8")
        for e in table.errors:
            print(f"relaybuf: {e}", file=sys.stderr)
        print(out / f"{args.name}.csv")
        return EXIT_NUMERIC if table.errors else EXIT_OK

    if args.command == "figure":
        paths, table = cmd_figure(args.name, args.out, sim=_sim(args),
                                  reproducible=args.reproducible)
        for e in table.errors:
            print(f"relaybuf: {e}", file=sys.stderr)
        for path in paths:
            print(path)
        return EXIT_NUMERIC if table.errors else EXIT_OK

    if args.command == "validate":
        report = cmd_validate(_config(args.config), args.sim, args.seed, z1_scale=args.z1_scale)
        print(report.table())
        return EXIT_OK if report.passed else EXIT_VALIDATION

    if args.command == "optimize-rate":
        r0, tau = optimize_rate(_config(args.config), args.scheme, args.snr_db)
        print(f"scheme={args.scheme} snr_db={args.snr_db:g} r0_star={r0:g} throughput={tau:.10g}")
        return EXIT_OK
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
