"""Command-line benchmark runner.

Data channels (stdout and output files) carry pure CSV/JSON; progress lines
go to stderr. Exit codes: 0 success, 1 configuration error, 2 numerical
consistency failure.
"""

from __future__ import annotations

import argparse
import sys
import time

from .harness import (
    ConfigError,
    ExperimentConfig,
    fig1_csv,
    fig_curves_csv,
    make_manifest,
    parse_config_text,
    preset_fig1,
    preset_fig2,
    preset_fig3,
    preset_tables,
    records_to_csv,
    run_experiment,
    write_outputs,
)
from .measurement import NumericalConsistencyError
from .variance import g_opt, minimize_tv1, tv1_closed_form

DEFAULT_SEED = 1234


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad flags; 2 is reserved for numerical
    # failures here, so remap usage errors to the configuration exit code.
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _add_common(sub: argparse.ArgumentParser, trials_default: int) -> None:
    sub.add_argument("--seed", type=int, default=DEFAULT_SEED,
                     help=f"64-bit campaign seed (default {DEFAULT_SEED})")
    sub.add_argument("--trials", type=int, default=trials_default,
                     help=f"reconstructions per cell (default {trials_default})")
    sub.add_argument("--workers", type=int, default=1, help="parallel worker processes")
    sub.add_argument("--out", default=None, help="output CSV path ('-' for stdout)")
    sub.add_argument("--ensemble", choices=("hs", "pure"), default="hs",
                     help="random-state ensemble for the true states")
    sub.add_argument("--hermitize", action="store_true",
                     help="project reconstructions to (M + M^dag)/2 before scoring")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cdtomo", description=__doc__)
    subs = parser.add_subparsers(dest="command", required=True)

    run_p = subs.add_parser("run", help="run a campaign described by a config file")
    run_p.add_argument("config", help="flat key=value config file")
    run_p.add_argument("--workers", type=int, default=None, help="override config workers")
    run_p.add_argument("--out", default=None, help="override config output path")
    run_p.add_argument("--seed", type=int, default=None, help="override config seed")
    run_p.add_argument("--trials", type=int, default=None, help="override config trials")

    for name, trials_default, doc in (
        ("fig1", 10_000, "strength sweep at d=2 (g, tv1, mean_D, stderr)"),
        ("fig2", 1000, "qubit scheme comparison over sample sizes"),
        ("fig3", 1000, "five-dimensional scheme comparison over sample sizes"),
        ("tables", 1000, "reproduce the benchmark tables with published targets"),
    ):
        sub = subs.add_parser(name, help=doc)
        _add_common(sub, trials_default)
        if name == "tables":
            sub.add_argument("--dims", default=None,
                             help="comma-separated table dimensions (default: all)")

    gopt_p = subs.add_parser("gopt", help="print the optimal strength per dimension")
    gopt_p.add_argument("--dims", default="2,3,4,5,6,7,8,9,10",
                        help="comma-separated dimensions")
    return parser


def _cmd_run(args) -> None:
    with open(args.config) as fh:
        cfg = parse_config_text(fh.read())
    overrides = {k: getattr(args, k) for k in ("workers", "out", "seed", "trials")
                 if getattr(args, k) is not None}
    if overrides:
        cfg = ExperimentConfig(**{**cfg.__dict__, **overrides})
    t0 = time.perf_counter()
    records = run_experiment(cfg)
    manifest = make_manifest("run", {
        "dims": list(cfg.dims), "schemes": [s.describe() for s in cfg.schemes],
        "n_values": list(cfg.n_values), "trials": cfg.trials, "seed": cfg.seed,
        "ensemble": cfg.ensemble, "allocation": cfg.allocation,
        "hermitize": cfg.hermitize, "workers": cfg.workers,
    }, time.perf_counter() - t0)
    write_outputs(records_to_csv(records), cfg.out, manifest)


def _cmd_preset(args) -> None:
    t0 = time.perf_counter()
    params = {"seed": args.seed, "trials": args.trials, "ensemble": args.ensemble,
              "hermitize": args.hermitize, "workers": args.workers}
    common = dict(seed=args.seed, trials=args.trials, workers=args.workers,
                  ensemble=args.ensemble, apply_hermitize=args.hermitize)
    out = args.out if args.out is not None else f"cdtomo_{args.command}.csv"
    if args.command == "fig1":
        rows = preset_fig1(**common)
        csv_text = fig1_csv(rows)
        extra = None
    elif args.command in ("fig2", "fig3"):
        preset = preset_fig2 if args.command == "fig2" else preset_fig3
        records = preset(**common)
        csv_text = fig_curves_csv(records)
        extra = None
    else:
        dims = None
        if args.dims:
            dims = tuple(int(x) for x in args.dims.split(","))
            params["dims"] = list(dims)
        records, summary = preset_tables(dims=dims, **common)
        csv_text = records_to_csv(records)
        extra = {"tables_summary": summary}
        notes = []
        for name, table in summary["tables"].items():
            for line in table["cells_beyond_15pct"]:
                notes.append(f"table {name}: {line} beyond 15% of the published value")
            for scheme, flag in table["one_sided_deviation"].items():
                if flag:
                    notes.append(f"table {name}: {scheme} deviations are one-sided")
        manifest = make_manifest(args.command, params, time.perf_counter() - t0,
                                 notes=notes, extra=extra)
        write_outputs(csv_text, out, manifest)
        return
    manifest = make_manifest(args.command, params, time.perf_counter() - t0, extra=extra)
    write_outputs(csv_text, out, manifest)


def _cmd_gopt(args) -> None:
    dims = [int(x) for x in args.dims.split(",")]
    print("d,g_opt,tv1_min,g_opt_numeric")
    for d in dims:
        g = g_opt(d)
        g_num = minimize_tv1(d)
        print(f"{d},{g:.6f},{tv1_closed_form(d, g):.6f},{g_num:.6f}")


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "run":
            _cmd_run(args)
        elif args.command == "gopt":
            _cmd_gopt(args)
        else:
            _cmd_preset(args)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    except NumericalConsistencyError as exc:
        print(f"numerical consistency failure: {exc}", file=sys.stderr)
        return 2
    except (ConfigError, OSError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
