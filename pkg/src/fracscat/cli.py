"""Command line runner: ``fracscat <subcommand> --config PATH``.

Exit status is 0 when every gate passes, 2 when a gate fails (the failing
gates are named on stderr) and 1 on configuration or numerical errors.
"""

from __future__ import annotations

import argparse
import hashlib
import platform
import sys
import time
from pathlib import Path

import numpy as np
import scipy

from . import __version__, io
from .config import ExperimentConfig, defaults, load_config
from .errors import (ConfigError, ExceptionalShell, FitUnstable, FracScatError, GridError,
                     NearSpectrum, NegativeSpectrum, NotConverging, PotentialError,
                     QuadratureNotConverged, TailNotDecaying, UnderResolved)
from .pipelines import PIPELINES, Context

EXIT_PASS, EXIT_ERROR, EXIT_GATE = 0, 1, 2

HINTS = {
    TailNotDecaying: "increase L or reduce T",
    UnderResolved: "increase N or widen the potential",
    NotConverging: "raise eps0, enlarge L or move lam away from a sparse shell",
    ExceptionalShell: "exclude the flagged energy or change the coupling",
    QuadratureNotConverged: "increase quadrature nodes or fix t_min/t_max wider",
    PotentialError: "enlarge L or shrink the potential support",
    GridError: "use a power-of-two N within the memory cap",
    NegativeSpectrum: "check the operator assembly; the magnetic Laplacian is nonnegative",
    NearSpectrum: "move the shift off the discrete spectrum",
    FitUnstable: "use a nonzero potential with a resolvable decay profile",
}

# Plot-data tables: file name -> CSV header.
PLOT_TABLES = {
    "scatter_convergence.csv": ("T", "isometry_defect", "intertwine_defect", "fw_defect"),
    "lap_epsilon.csv": ("epsilon", "weighted_norm", "unweighted_norm", "extrapolant"),
    "lap_tau.csv": ("tau", "norm", "N", "N1"),
    "exponent_fit.csv": ("N", "N1", "exponent", "predicted"),
    "exceptional_scan.csv": ("lam", "min_singular"),
    "eigenvalues.csv": ("index", "eigenvalue_magnetic", "eigenvalue_fractional",
                        "participation"),
    "power_identity.csv": ("s", "mu", "relative_defect"),
}


def _hint(exc: Exception) -> str:
    for cls, hint in HINTS.items():
        if isinstance(exc, cls):
            return hint
    return ""


def _plot_rows(report: dict, name: str) -> list:
    sec = report.get("sections", {})
    if name == "scatter_convergence.csv":
        return [[r["T"], r["isometry_defect"], r["intertwine_defect"], r["fw_defect"]]
                for r in sec.get("scatter", {}).get("convergence", [])]
    if name == "lap_epsilon.csv":
        return sec.get("lap", {}).get("limiting_absorption", {}).get("rows", [])
    if name == "lap_tau.csv":
        return [[t, v, f["N_w"], f["N1_w"]] for f in sec.get("lap", {}).get("scaling", [])
                for t, v in zip(f["taus"], f["norms"])]
    if name == "exponent_fit.csv":
        return [[f["N_w"], f["N1_w"], f["exponent"], f["predicted"]]
                for f in sec.get("lap", {}).get("scaling", [])]
    if name == "exceptional_scan.csv":
        scan = sec.get("dft", {}).get("scan", {})
        return list(zip(scan.get("lams", []), scan.get("min_singular", [])))
    if name == "eigenvalues.csv":
        return sec.get("spectrum", {}).get("eigenvalues", [])
    if name == "power_identity.csv":
        return [[t["s"], mu, d] for t in sec.get("spectrum", {}).get("power_identity", [])
                for mu, d in t["rows"]]
    return []


def emit_plotdata(report: dict, outdir) -> list[Path]:
    """Write every plot-data CSV; tables absent from ``report`` get headers only."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    return [io.write_csv(outdir / name, header, _plot_rows(report, name))
            for name, header in PLOT_TABLES.items()]


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def run(command: str, cfg: ExperimentConfig, outdir, quiet: bool = False) -> int:
    """Execute ``command`` and write its artifacts; return the exit status."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    ctx = Context(cfg, outdir)
    report = {"command": command, "config_hash": cfg.hash(), "seed": cfg.seed,
              "config": cfg.values, "sections": {}, "gates": {}}
    timing = {}
    start = time.perf_counter()
    status = EXIT_PASS
    try:
        for name, step in PIPELINES[command]:
            t0 = time.perf_counter()
            section, gates = step(ctx)
            timing[name] = time.perf_counter() - t0
            report["sections"][name] = section
            report["gates"].update({f"{name}.{k}": v for k, v in gates.items()})
            if not quiet:
                for k, v in gates.items():
                    mark = "pass" if v["pass"] else "FAIL"
                    print(f"[{mark}] {name}.{k}: {v['value']:.3e} (limit {v['limit']})")
    except (FracScatError, ValueError, np.linalg.LinAlgError, OSError) as exc:
        hint = _hint(exc)
        report["error"] = {"type": type(exc).__name__, "message": str(exc), "hint": hint}
        print(f"error: {type(exc).__name__}: {exc}" + (f" (hint: {hint})" if hint else ""),
              file=sys.stderr)
        status = EXIT_ERROR
    failed = sorted(k for k, v in report["gates"].items() if not v["pass"])
    if status == EXIT_PASS and failed:
        status = EXIT_GATE
        print("gate failure: " + ", ".join(failed), file=sys.stderr)
    report["failed_gates"] = failed
    report["status"] = {EXIT_PASS: "pass", EXIT_GATE: "gate-fail", EXIT_ERROR: "error"}[status]
    paths = [io.write_json(outdir / "report.json", report)]
    paths += emit_plotdata(report, outdir)
    paths += ctx.artifacts
    manifest = {
        "command": command, "config_hash": report["config_hash"], "config_source": cfg.source,
        "seed": cfg.seed, "status": report["status"], "exit_code": status,
        "versions": {"fracscat": __version__, "python": platform.python_version(),
                     "numpy": np.__version__, "scipy": scipy.__version__},
        "timing": {"total_seconds": time.perf_counter() - start, "sections": timing},
        "artifacts": [{"path": p.name, "sha256": _sha256(p), "config_hash": report["config_hash"]}
                      for p in paths],
    }
    io.write_json(outdir / "manifest.json", manifest)
    if not quiet:
        print(f"{command}: {report['status']} ({outdir})")
    return status


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fracscat", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in PIPELINES:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, help="experiment config file")
        p.add_argument("--out", type=Path, help="output directory (overrides [output] dir)")
        p.add_argument("--seed", type=int, help="seed for test vectors (overrides [run] seed)")
        p.add_argument("--quiet", action="store_true")
        if name in ("scatter", "full-report"):
            p.add_argument("--tmax", type=float, help="truncation time T")
            p.add_argument("--dt", type=float, help="Cook quadrature panel width")
            p.add_argument("--band", type=float, nargs=2, metavar=("LO", "HI"),
                           help="scattering band in wave number")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else defaults()
        if args.seed is not None:
            cfg.values["run"]["seed"] = args.seed
        sc = cfg.values["scattering"]
        if getattr(args, "tmax", None) is not None:
            sc["T"] = args.tmax
        if getattr(args, "dt", None) is not None:
            sc["dt"] = args.dt
        if getattr(args, "band", None) is not None:
            sc["band"] = list(args.band)
        if sc["T"] <= 0 or sc["dt"] <= 0 or not 0 < sc["band"][0] < sc["band"][1]:
            raise ConfigError("command line overrides: need T > 0, dt > 0, 0 < LO < HI")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    outdir = args.out or Path(cfg["output"]["dir"])
    return run(args.command, cfg, outdir, quiet=args.quiet)


if __name__ == "__main__":
    sys.exit(main())
