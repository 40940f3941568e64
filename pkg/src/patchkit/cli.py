"""Command-line entry point: ``patchkit <command> --run FILE [options]``.

Exit codes: 0 success, 2 validation, 3 solver, 4 I/O.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .constants import GHZ
from .errors import (
    DomainError,
    EnergyAccountingError,
    GeometryError,
    PatchkitError,
    SolverError,
    ValidationError,
)

EXIT_OK, EXIT_VALIDATION, EXIT_SOLVER, EXIT_IO = 0, 2, 3, 4


def _load(args):
    from .runfile import parse_overrides, read_run

    overrides = parse_overrides(args.set)
    if args.budget is not None:
        overrides.append(("simulation", "budget", str(args.budget)))
    if args.out is not None:
        overrides.append(("output", "dir", str(args.out)))
    if args.run is None:
        raise ValidationError("--run", "a run file is required")
    return read_run(args.run, overrides)


def _bundle(cfg, command):
    from .pipeline import ResultBundle

    return ResultBundle(cfg.out_dir, cfg, command)


def cmd_design(args) -> int:
    from .pipeline import designs_for, stage, write_designs

    cfg = _load(args)
    with stage("design"):
        designs = designs_for(cfg)
    bundle = _bundle(cfg, "design")
    write_designs(bundle, cfg, designs)
    bundle.finalize()
    for name, d in designs.items():
        print(f"[{name}]")
        for sym, desc, value, unit in d.rows():
            from .design import _report

            print(f"  {sym:<7} {_report(sym, value):>8} {unit:<4} {desc}")
        print(f"  eps_eff {d.eps_eff:8.4f}")
        if d.gap_heuristic:
            print("  note: gap G from the Wt/3 heuristic")
    return EXIT_OK


def cmd_tune(args) -> int:
    from .pipeline import stage, tune, write_tune

    cfg = _load(args)
    with stage("tune"):
        result = tune(cfg)
    bundle = _bundle(cfg, "tune")
    write_tune(bundle, result)
    bundle.finalize()
    sys.stdout.write(result.summary())
    return EXIT_OK


def cmd_masks(args) -> int:
    from .pipeline import build_geometry, designs_for, stage, write_masks

    cfg = _load(args)
    with stage("design"):
        designs = designs_for(cfg)
    with stage("geometry"):
        geometry = build_geometry(cfg, designs)
        geometry.validate()
    bundle = _bundle(cfg, "masks")
    bundle.write("geometry.txt", geometry.to_text())
    with stage("masks"):
        paths = write_masks(bundle, geometry)
    bundle.finalize()
    for p in paths:
        print(p)
    return EXIT_OK


def cmd_simulate(args) -> int:
    from .pipeline import simulate, simulation_report, stage, write_designs, write_masks, write_simulation

    cfg = _load(args)
    result = simulate(cfg)
    with stage("output"):
        bundle = _bundle(cfg, "simulate")
        from .pipeline import designs_for

        write_designs(bundle, cfg, designs_for(cfg))
        write_masks(bundle, result.geometry)
        write_simulation(bundle, cfg, result)
        bundle.finalize()
    sys.stdout.write(simulation_report(cfg, result))
    return EXIT_OK


def cmd_sweep(args) -> int:
    from .pipeline import ResultBundle, local_minima, simulate, stage, write_simulation
    from .runfile import parse_overrides, read_run

    if not args.param or not args.values:
        raise ValidationError("--param", "sweep needs --param section.field and --values v1,v2,...")
    (sec, name, _), = parse_overrides([f"{args.param}=0"])
    base = _load(args)
    rows = ["value,n_bands,bands_ghz,dips"]
    root = base.out_dir
    for value in [v.strip() for v in args.values.split(",") if v.strip()]:
        extra = parse_overrides(args.set) + [(sec, name, value)]
        if args.budget is not None:
            extra.append(("simulation", "budget", str(args.budget)))
        extra.append(("output", "dir", str(root / f"{sec}.{name}={value}")))
        cfg = read_run(args.run, extra)
        result = simulate(cfg)
        with stage("output"):
            bundle = ResultBundle(cfg.out_dir, cfg, f"sweep {sec}.{name}={value}")
            write_simulation(bundle, cfg, result)
            bundle.finalize()
        bands = " ".join(f"{b.f_low / GHZ:.4f}-{b.f_high / GHZ:.4f}" for b in result.bands)
        dips = " ".join(f"{f / GHZ:.4f}@{d:.2f}" for f, d in local_minima(result.spectrum))
        rows.append(f"{value},{len(result.bands)},{bands},{dips}")
        print(rows[-1])
    with stage("output"):
        summary = ResultBundle(root, base, f"sweep {sec}.{name}")
        summary.write("sweep.csv", "\n".join(rows) + "\n")
        summary.finalize()
    return EXIT_OK


def cmd_plot(args) -> int:
    """Re-render the SVGs of an existing output directory from its CSVs."""
    from .pipeline import render_plots

    root = Path(args.out if args.out is not None else "out")
    if not root.is_dir():
        raise FileNotFoundError(f"no output directory {root}")
    written = render_plots(root)
    if not written:
        raise ValidationError("--out", f"no s11.csv, pattern_*.csv or tune.csv in {root}")
    for p in written:
        print(p)
    return EXIT_OK


COMMANDS = {
    "design": (cmd_design, "closed-form patch design table(s)"),
    "tune": (cmd_tune, "choose the stacked-patch displacement from the coupling model"),
    "masks": (cmd_masks, "per-layer SVG fabrication masks"),
    "simulate": (cmd_simulate, "full-wave FDTD run: S11, bands, patterns, plots"),
    "sweep": (cmd_sweep, "repeat simulate over values of one run-file field"),
    "plot": (cmd_plot, "re-render SVG plots from the CSVs of an output directory"),
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="patchkit", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"patchkit {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--run", type=Path, help="run file (INI)")
        p.add_argument("--out", type=Path, help="output directory (overrides output.dir)")
        p.add_argument("--set", action="append", default=[], metavar="SECTION.FIELD=VALUE",
                       help="override one run-file value (repeatable)")
        p.add_argument("--budget", type=float, help="cell-step budget for one simulation (reference plus antenna run)")
        p.add_argument("-v", "--verbose", action="store_true")
        if name == "sweep":
            p.add_argument("--param", help="run-file field to sweep, e.g. overrides.dy_mm")
            p.add_argument("--values", help="comma-separated values")
    return ap


def _describe(exc: BaseException) -> str:
    where = getattr(exc, "stage", None)
    return f"{where}: {exc}" if where else str(exc)


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:  # argparse usage errors count as validation failures
        return EXIT_OK if exc.code == 0 else EXIT_VALIDATION
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handler = COMMANDS[args.command][0]
    try:
        return handler(args)
    except (ValidationError, DomainError, GeometryError) as exc:
        print(f"patchkit: validation error: {_describe(exc)}", file=sys.stderr)
        return EXIT_VALIDATION
    except (SolverError, EnergyAccountingError) as exc:
        print(f"patchkit: solver error: {_describe(exc)}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as exc:
        print(f"patchkit: I/O error: {_describe(exc)}", file=sys.stderr)
        return EXIT_IO
    except PatchkitError as exc:
        print(f"patchkit: error: {_describe(exc)}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
