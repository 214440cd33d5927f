"""Command-line front end.

    braidflow simulate  --scenario paper-disk --svg
    braidflow winding   --scenario identity
    braidflow obstruct  --scenario paper-disk
    braidflow spectrum  --config my.ini
    braidflow perturb   --scenario paper-disk --deltas 0,1e-4,1e-3
    braidflow baseline  --seed 0 --n 50
    braidflow report    --scenario paper-disk

Reports go to ``--out`` (default: $BRAIDFLOW_OUTPUT_DIR, else ./braidflow-output)
as ``<stem>.json`` and ``<stem>.txt``; the text form is also printed.
Exit codes: 0 success, 1 usage error, 2 invalid input, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from . import report as rpt
from .config import builtin_names
from .errors import BraidflowError, NumericError, StageError, ValidationError
from .plotting import emit_svg
from .scenarios import (
    annulus_embedding_scenario,
    autonomous_baseline_suite,
    load_scenario,
    perturbation_sweep,
    run_scenario,
)

EXIT_OK, EXIT_USAGE, EXIT_INVALID, EXIT_NUMERIC = 0, 1, 2, 3
OUTPUT_ENV = "BRAIDFLOW_OUTPUT_DIR"
COMMANDS = ("simulate", "winding", "obstruct", "spectrum", "perturb", "baseline", "report")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="braidflow", description="Braids of fixed points of Hamiltonian disk maps")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    def common(p, scenario=True):
        if scenario:
            src = p.add_mutually_exclusive_group()
            src.add_argument("--scenario", default=None,
                             help=f"built-in scenario ({', '.join(builtin_names())}); default paper-disk")
            src.add_argument("--config", default=None, help="scenario config file (.ini)")
            p.add_argument("--steps", type=int, default=None, help="RK4 steps over unit time")
        p.add_argument("--out", default=None, help=f"output directory (default ${OUTPUT_ENV} or ./braidflow-output)")
        p.add_argument("--format", choices=("text", "json"), default="text", help="what to print on stdout")
        p.add_argument("--timings", action="store_true", help="add wall-clock timings (not reproducible)")
        p.add_argument("--quiet", action="store_true", help="print nothing on success")

    p = sub.add_parser("simulate", help="integrate the marked points and export trajectories")
    common(p)
    p.add_argument("--svg", action="store_true", help="also write trajectory and braid SVGs")
    p = sub.add_parser("winding", help="winding matrix (set-valued on annulus or torus models)")
    common(p)
    p.add_argument("--svg", action="store_true")
    p = sub.add_parser("obstruct", help="search for a non-autonomy certificate")
    common(p)
    p.add_argument("--svg", action="store_true")
    p = sub.add_parser("spectrum", help="fixed-set classification, action spectrum and admissibility")
    common(p)
    p.add_argument("--svg", action="store_true")
    p = sub.add_parser("perturb", help="persistence of the braid under bump perturbations")
    common(p)
    p.add_argument("--deltas", type=_floats, default=None, help="comma-separated bump amplitudes")
    p.add_argument("--svg", action="store_true")
    p = sub.add_parser("baseline", help="random autonomous systems: laws hold, no certificate")
    common(p, scenario=False)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n", type=int, default=50)
    p.add_argument("--steps", type=int, default=4096)
    p = sub.add_parser("report", help="full run: all sections, CSV tables and figures")
    common(p)
    p.add_argument("--deltas", type=_floats, default=None,
                   help="also run a perturbation sweep with these amplitudes")
    return parser


def _config(args):
    cfg = load_scenario(args.config if args.config else (args.scenario or "paper-disk"))
    if args.steps is not None:
        if args.steps < 100:
            raise ValidationError("--steps must be at least 100")
        cfg = replace(cfg, steps=args.steps)
    return cfg


def _out_dir(args) -> Path:
    d = Path(args.out or os.environ.get(OUTPUT_ENV) or "braidflow-output")
    d.mkdir(parents=True, exist_ok=True)
    return d


def _write(path: Path, text: str, written: list):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text if text.endswith("\n") else text + "\n")
    written.append(path)


def _trajectory_csv(strands) -> str:
    lines = ["t,label,x,y"]
    for s in strands:
        for t, (x, y) in zip(s.times, s.positions):
            lines.append(f"{t:.12g},{s.label},{x:.12g},{y:.12g}")
    return "\n".join(lines) + "\n"


def _run(args, written) -> rpt.ReportDocument:
    out = _out_dir(args)
    if args.command == "baseline":
        rep = autonomous_baseline_suite(args.seed, args.n, steps=args.steps)
        doc = rpt.ReportDocument(f"baseline seed {args.seed}, {args.n} systems",
                                 {"package": f"braidflow {__version__}", "seed": args.seed, "n": args.n,
                                  "steps": args.steps, "case seeds": f"{args.seed} * 100003 + i"})
        rpt.baseline_section(doc, rep)
        stem = f"baseline-seed{args.seed}-n{args.n}"
        _emit(doc, out, stem, args, written)
        return doc

    cfg = _config(args)
    cmd = args.command
    full = cmd in ("spectrum", "report", "perturb")
    if cfg.model != "disk":
        result = annulus_embedding_scenario(cfg, model=cfg.model, full=full)
    else:
        result = run_scenario(cfg, full=full)
    doc = rpt.ReportDocument(f"{cfg.name} {cmd}", rpt.provenance(cfg))
    rpt.config_section(doc, cfg)
    stem = f"{cfg.name}-{cmd}"

    if cmd in ("simulate", "report"):
        rpt.trajectory_section(doc, result.strands)
        _write(out / f"{stem}-trajectories.csv", _trajectory_csv(result.strands), written)
    if cmd in ("simulate", "winding", "obstruct", "report", "perturb"):
        rpt.winding_section(doc, result.winding)
        rpt.aux_section(doc, result.aux_windings)
        if result.set_windings is not None:
            rpt.set_winding_section(doc, result.set_windings, cfg.model)
    if cmd in ("obstruct", "report"):
        rpt.certificate_section(doc, result.certificate)
    if full:
        rpt.components_section(doc, result.components)
        rpt.spectrum_section(doc, result.spectrum, result.hofer)
        rpt.admissibility_section(doc, result.admissibility)
    deltas = getattr(args, "deltas", None)
    if cmd == "perturb" or deltas is not None:
        sweep = perturbation_sweep(cfg, deltas, base=result)
        rpt.persistence_section(doc, sweep)
    if args.timings:
        rpt.timing_section(doc, result.timings)

    if cmd == "report" or getattr(args, "svg", False):
        emit_svg(result, "trajectories", out / f"{stem}-trajectories.svg")
        emit_svg(result, "braid-diagram", out / f"{stem}-braid.svg")
        written += [out / f"{stem}-trajectories.svg", out / f"{stem}-braid.svg"]
        if result.components:
            emit_svg(result, "fixed-set", out / f"{stem}-fixed-set.svg")
            written.append(out / f"{stem}-fixed-set.svg")
    _emit(doc, out, stem, args, written)
    return doc


def _emit(doc, out, stem, args, written):
    _write(out / f"{stem}.json", doc.to_json(), written)
    _write(out / f"{stem}.txt", doc.render(), written)
    if args.command == "report":
        for s in doc.sections:
            if s.columns:
                slug = "-".join("".join(ch if ch.isalnum() else " " for ch in s.name).split())
                _write(out / f"{stem}-{slug}.csv", s.table_csv(), written)


def exit_code(exc: BaseException) -> int:
    cause = exc.cause if isinstance(exc, StageError) else exc
    if isinstance(cause, ValidationError):
        return EXIT_INVALID
    if isinstance(cause, (NumericError, ArithmeticError, np.linalg.LinAlgError)):
        return EXIT_NUMERIC
    return EXIT_NUMERIC


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    written: list = []
    try:
        doc = _run(args, written)
    except BraidflowError as exc:
        print(f"braidflow {args.command}: {exc}", file=sys.stderr)
        return exit_code(exc)
    except OSError as exc:
        print(f"braidflow {args.command}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    if not args.quiet:
        sys.stdout.write(doc.to_json() if args.format == "json" else doc.render())
        for p in written:
            print(f"wrote {p}", file=sys.stderr)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
