"""Command-line entry point: ``pickingtime <command> CONFIG [options]``."""

from __future__ import annotations

import argparse
import contextlib
import csv
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import inversion, lst, montecarlo
from .config import ConfigError, dump_config, parse_config
from .inversion import GridKind, InversionError, InversionParams

EXIT_CONFIG = 3
EXIT_NUMERICAL = 4
EXIT_IO = 5


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _unsigned(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {value}")
    return value


def _complex(text: str) -> complex:
    try:
        return complex(text.replace(" ", "").replace("i", "j"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a complex number: {text!r}") from None


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def _params(args) -> InversionParams:
    return InversionParams(A=args.inversion_A, n_initial=args.inversion_terms, m_euler=args.euler_terms)


def _transform(config):
    return lambda s: lst.order_lst(config, s)


@contextlib.contextmanager
def _output(path):
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _write_rows(args, header, rows):
    with _output(args.output) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def cmd_validate(args):
    config = parse_config(args.config)
    if args.dump_config:
        Path(args.dump_config).write_text(dump_config(config))
    geom = config.geometry
    print(
        f"ok: {geom.layout.value}, k={geom.k}, lambda={config.lam:g}, "
        f"pick={config.pick_time.kind.value}"
    )


def cmd_kplus(args):
    config = parse_config(args.config)
    probs = lst.kplus_pmf(config).probs
    _write_rows(args, ["aisle", "probability"], [[j + 1, _fmt(p)] for j, p in enumerate(probs)])


def cmd_lst_eval(args):
    config = parse_config(args.config)
    s = np.array(args.s, dtype=complex)
    values = np.atleast_1d(lst.order_lst(config, s))
    rows = [[_fmt(a.real), _fmt(a.imag), _fmt(b.real), _fmt(b.imag)] for a, b in zip(s, values)]
    _write_rows(args, ["s_re", "s_im", "lst_re", "lst_im"], rows)


def _grid(config, kind, args):
    return inversion.grid(
        _transform(config),
        kind,
        args.t_min,
        args.t_max,
        args.points,
        _params(args),
        atom=math.exp(-config.lam),
        threads=args.threads,
    )


def cmd_distribution(args):
    config = parse_config(args.config)
    g = _grid(config, GridKind(args.command), args)
    _write_rows(args, ["t", "value"], [[_fmt(t), _fmt(v)] for t, v in g.points])


def cmd_quantile(args):
    config = parse_config(args.config)
    atom = math.exp(-config.lam)
    mean = lst.mean_from_lst(config)
    rows = []
    for p in args.p:
        t = inversion.quantile(_transform(config), p, _params(args), atom=atom, mean=mean)
        rows.append([_fmt(p), _fmt(t)])
    _write_rows(args, ["p", "t"], rows)


def cmd_moments(args):
    config = parse_config(args.config)
    mean = lst.mean_from_lst(config)
    second = lst.second_moment_from_lst(config)
    _write_rows(args, ["mean", "variance", "second_moment"], [[_fmt(mean), _fmt(second - mean**2), _fmt(second)]])


def cmd_simulate(args):
    config = parse_config(args.config)
    report = montecarlo.simulate(
        config, args.samples, args.seed, threads=args.threads, keep_samples=None
    )
    _write_rows(args, ["key", "value"], report.rows())
    if args.export_samples:
        if report.samples is None:
            raise ValueError("sample export needs at most ten million samples")
        montecarlo.write_samples_csv(args.export_samples, report.samples)


def cmd_compare(args):
    configs = [parse_config(path) for path in args.configs]
    grids = [_grid(c, GridKind(args.kind), args) for c in configs]
    names = [Path(p).stem for p in args.configs]
    rows = [
        [_fmt(t)] + [_fmt(g.values[n]) for g in grids]
        for n, t in enumerate(grids[0].t)
    ]
    _write_rows(args, ["t"] + names, rows)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-o", "--output", help="output file (default: stdout)")
    common.add_argument("--threads", type=_positive_int, default=os.cpu_count() or 1)
    common.add_argument("--seed", type=_unsigned, default=0)
    common.add_argument("--inversion-A", dest="inversion_A", type=float, default=18.4)
    common.add_argument("--inversion-terms", type=_positive_int, default=15)
    common.add_argument("--euler-terms", type=_positive_int, default=11)

    grid_opts = argparse.ArgumentParser(add_help=False)
    grid_opts.add_argument("--t-min", type=float, default=1.0)
    grid_opts.add_argument("--t-max", type=float, default=1600.0)
    grid_opts.add_argument("--points", type=int, default=400)

    parser = argparse.ArgumentParser(
        prog="pickingtime",
        description="Order-picking time distributions under return routing.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", parents=[common], help="check a config file")
    p.add_argument("config")
    p.add_argument("--dump-config", help="write the normalized config to this path")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("kplus", parents=[common], help="distribution of the furthest aisle visited")
    p.add_argument("config")
    p.set_defaults(func=cmd_kplus)

    p = sub.add_parser("lst-eval", parents=[common], help="evaluate the transform")
    p.add_argument("config")
    p.add_argument("--s", type=_complex, action="append", required=True, help="argument, e.g. 0.1+0.2j")
    p.set_defaults(func=cmd_lst_eval)

    for name in ("density", "cdf", "tail"):
        p = sub.add_parser(name, parents=[common, grid_opts], help=f"{name} on a uniform t-grid")
        p.add_argument("config")
        p.set_defaults(func=cmd_distribution)

    p = sub.add_parser("quantile", parents=[common], help="quantiles by inversion")
    p.add_argument("config")
    p.add_argument("--p", type=float, action="append", required=True)
    p.set_defaults(func=cmd_quantile)

    p = sub.add_parser("moments", parents=[common], help="mean and second moment")
    p.add_argument("config")
    p.set_defaults(func=cmd_moments)

    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo estimate")
    p.add_argument("config")
    p.add_argument("--samples", type=_positive_int, default=100_000)
    p.add_argument("--export-samples", help="write raw route times to this CSV")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("compare", parents=[common, grid_opts], help="one column per config")
    p.add_argument("configs", nargs="+")
    p.add_argument("--kind", choices=[k.value for k in GridKind], default="density")
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "compare" and len(args.configs) < 2:
        parser.error("compare needs at least two configs")
    try:
        args.func(args)
    except ConfigError as exc:
        print(exc, file=sys.stderr)
        return EXIT_CONFIG
    except InversionError as exc:
        print(f"numerical error in '{args.command}': {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
