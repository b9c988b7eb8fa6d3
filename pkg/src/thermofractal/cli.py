"""Command-line front end."""

from __future__ import annotations

import argparse
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import output
from .config import RunConfig, defaults_text, load_config, parse_grid, parse_list
from .empirical import empirical_lyapunov_spectrum
from .errors import ConfigError, InsufficientData, ThermoError
from .inducing import (
    bowen_root,
    first_return_scheme,
    gibbs_branch_probs,
    induce_potential,
    project_measure,
)
from .maps import Combined, Geometric
from .pressure import (
    CylinderMatrixMethod,
    GridPointError,
    PeriodicOrbitMethod,
    curve_from_samples,
    pressure,
    pressure_curve,
)
from .spectra import (
    default_method,
    dimension_spectrum,
    dimension_window,
    exponent_range,
    lyapunov_spectrum,
    parametric_dimension_spectrum,
    temperature_curve,
)
from .symbolic import PeriodicCache, word_to_str
from .verify import CRITERIA, VerifyOptions, run_all

EXIT_OK, EXIT_CONFIG, EXIT_PARTIAL, EXIT_VERIFY = 0, 1, 2, 3
COMMANDS = ("pressure", "lyapunov", "temperature", "dimension", "induce", "empirical", "verify")


@dataclass
class RunReport:
    task: str
    wall_time: float = 0.0
    warnings: list[tuple[str, str]] = field(default_factory=list)
    artifacts: list[Path] = field(default_factory=list)
    exit_code: int = EXIT_OK

    def warn(self, code: str, message: str) -> None:
        self.warnings.append((code, message))

    def render(self) -> str:
        lines = [f"task={self.task} wall_time={self.wall_time:.3f}s exit={self.exit_code}"]
        lines += [f"warning[{code}] {msg}" for code, msg in self.warnings]
        lines += [f"artifact {p}" for p in self.artifacts]
        return "\n".join(lines)


class Context:
    def __init__(self, cfg: RunConfig, args: argparse.Namespace):
        self.cfg = cfg
        out = cfg.sections["output"]
        self.directory = Path(args.out or out["directory"])
        self.prefix = out["prefix"]
        self.json = args.json or cfg.flag("output", "json")
        self.plot = args.plot or cfg.flag("output", "plot")
        self.workers = max(1, args.workers or 1)
        self.cache = None
        if cfg.flag("cache", "enabled"):
            self.cache = PeriodicCache(cfg.sections["cache"]["directory"])
        self.report = RunReport(cfg.command)

    def path(self, stem: str, suffix: str) -> Path:
        return self.directory / f"{self.prefix}{stem}{suffix}"

    def emit(self, stem: str, header, rows, comments=(), footer=(), plot=None, extra=None):
        rows = [list(r) for r in rows]
        self.report.artifacts.append(
            output.write_csv(self.path(stem, ".csv"), header, rows, comments, footer))
        if self.json:
            self.report.artifacts.append(
                output.write_json(self.path(stem, ".json"), header, rows, extra))
        if self.plot and plot is not None:
            series, xlabel, ylabel = plot
            self.report.artifacts.append(
                output.write_svg(self.path(stem, ".svg"), series, xlabel, ylabel, stem))


def _method(cfg: RunConfig, fmap, phi=None):
    name = cfg.task["method"].strip()
    if name == "auto":
        return default_method(fmap, phi)
    if name == "periodic":
        return PeriodicOrbitMethod(cfg.integer("period"))
    if name == "matrix":
        return CylinderMatrixMethod(cfg.integer("depth"))
    raise ConfigError(f"task.method must be periodic, matrix or auto, not {name!r}")


def _pressure_curve(ctx: Context):
    cfg = ctx.cfg
    fmap = cfg.build_map()
    method = _method(cfg, fmap)
    param = cfg.task["parameter"].strip()
    if param == "t":
        family = Geometric
    elif param == "q":
        base = cfg.build_potential(fmap)
        t_fixed = cfg.number("t")
        family = lambda q: Combined(t_fixed, q, base)  # noqa: E731
    else:
        raise ConfigError("task.parameter must be 't' or 'q'")
    grid = cfg.grid("grid")
    tols = dict(slope_gap_tol=cfg.number("slope_gap_tol"),
                convexity_tol=cfg.number("convexity_tol"))
    try:
        return pressure_curve(fmap, family, grid, method, parameter_name=param,
                              workers=ctx.workers, cache=ctx.cache, **tols), []
    except GridPointError:
        pass
    # fall back to point-by-point evaluation and keep what succeeded
    good, failed = [], []
    for s in grid:
        try:
            good.append((s, pressure(fmap, family(float(s)), method, cache=ctx.cache)))
        except ThermoError as exc:
            failed.append((float(s), str(exc)))
    if len(good) < 3:
        return None, failed
    g = np.array([p for p, _ in good])
    v = np.array([val for _, val in good])
    return curve_from_samples(g, v, param, method.describe(), **tols), failed


def _partial(ctx: Context, failed) -> None:
    for s, msg in failed:
        ctx.report.warn("POINT_FAILED", f"parameter {s!r}: {msg}")
    if failed:
        ctx.report.exit_code = EXIT_PARTIAL


def cmd_pressure(ctx: Context) -> None:
    curve, failed = _pressure_curve(ctx)
    _partial(ctx, failed)
    if curve is None:
        return
    nan = float("nan")
    # each row carries the cell slopes on either side of its grid point
    cell = np.diff(curve.values) / np.diff(curve.grid)
    left = np.concatenate([[nan], cell])
    right = np.concatenate([cell, [nan]])
    rows = zip(curve.grid, curve.values, left, right)
    rep = curve.transition_report
    comments = [f"#kink location={output.fmt(k.location)},left_slope={output.fmt(k.left_slope)},"
                f"right_slope={output.fmt(k.right_slope)},gap={output.fmt(k.gap)}"
                for k in rep.kinks]
    if rep.t_plus_estimate is not None:
        comments.append(f"#t_plus={output.fmt(rep.t_plus_estimate)}")
    ctx.emit("pressure", ["param", "pressure_nats", "left_slope", "right_slope"], rows, comments,
             plot=([("p", curve.grid, curve.values)], curve.parameter_name, "pressure (nats)"),
             extra={"kinks": [{"location": k.location, "left_slope": k.left_slope,
                               "right_slope": k.right_slope, "gap": k.gap} for k in rep.kinks],
                    "t_plus_estimate": rep.t_plus_estimate})


def cmd_lyapunov(ctx: Context) -> None:
    curve, failed = _pressure_curve(ctx)
    _partial(ctx, failed)
    if curve is None:
        return
    cfg = ctx.cfg
    floor = cfg.number("lambda_floor")
    if cfg.task["lambda_grid"].strip() == "auto":
        lo, hi = exponent_range(curve)
        lo = max(lo, floor)
        pad = 0.01 * (hi - lo)
        n = cfg.integer("lambda_points")
        lam = np.linspace(lo + pad, hi - pad, n) if hi - lo > 1e-9 else np.array([lo])
    else:
        lam = cfg.grid("lambda_grid")
    spectrum = lyapunov_spectrum(curve, lam, lambda_floor=floor)
    above = spectrum.values > 1.0 + 1e-6
    flags = ["lower_bound_only" if not v else "above_one" if a else ""
             for v, a in zip(spectrum.lower_verified, above)]
    if not spectrum.lower_verified.all():
        ctx.report.warn("LOWER_BOUND_ONLY",
                        f"{int((~spectrum.lower_verified).sum())} rows carry lower bounds only")
    if above.any():
        # finite-period pressure stays positive past a zero-pressure tail
        ctx.report.warn("ABOVE_ONE", f"{int(above.sum())} rows exceed 1; the pressure "
                        "estimate is biased where the minimiser lies")
    rows = zip(spectrum.abscissa_grid, spectrum.values, spectrum.lower_verified, spectrum.argmins, flags)
    ctx.emit("lyapunov", ["lambda", "L", "lower_verified", "t_star", "flag"], rows,
             plot=([("L", spectrum.abscissa_grid, spectrum.values)], "lambda", "L(lambda)"))


def _temperature(ctx: Context):
    cfg = ctx.cfg
    fmap = cfg.build_map()
    phi = cfg.build_potential(fmap)
    method = _method(cfg, fmap, phi)
    return temperature_curve(fmap, phi, cfg.grid("q_grid"), method=method,
                             zero_tol=cfg.number("zero_tol"))


def cmd_temperature(ctx: Context) -> None:
    tc = _temperature(ctx)
    lo = tc.q_minus if tc.q_minus is not None else -math.inf
    hi = tc.q_plus if tc.q_plus is not None else math.inf
    flags = ["" if lo < q < hi and np.isfinite(T) else "unverified"
             for q, T in zip(tc.q_grid, tc.T_values)]
    if np.any(tc.is_infinite):
        ctx.report.warn("INFINITE_TEMPERATURE",
                        f"T is infinite at {int(tc.is_infinite.sum())} grid points")
    rows = zip(tc.q_grid, tc.T_values, tc.derivative_estimates, tc.is_infinite, flags)
    f = tc.finite
    ctx.emit("temperature", ["q", "T", "DT", "is_infinite", "flag"], rows,
             plot=([("T", tc.q_grid[f], tc.T_values[f])], "q", "T(q)"),
             extra={"q_minus": tc.q_minus, "q_plus": tc.q_plus,
                    "strictly_convex": tc.strictly_convex})


def cmd_dimension(ctx: Context) -> None:
    tc = _temperature(ctx)
    cfg = ctx.cfg
    if cfg.task["alpha_grid"].strip() == "auto":
        lo, hi = dimension_window(tc)
        alpha = np.array(sorted({round(a, 15) for a, _ in parametric_dimension_spectrum(tc)
                                 if lo <= a <= hi}))
    else:
        alpha = cfg.grid("alpha_grid")
    spectrum = dimension_spectrum(tc, alpha)
    flags = ["" if a else "unverified" for a in spectrum.attained]
    rows = zip(spectrum.abscissa_grid, spectrum.values, spectrum.argmins, flags)
    ctx.emit("dimension", ["alpha", "D", "q_star", "flag"], rows,
             plot=([("D", spectrum.abscissa_grid, spectrum.values)], "alpha", "D(alpha)"))


def cmd_induce(ctx: Context) -> None:
    cfg = ctx.cfg
    fmap = cfg.build_map()
    raw = cfg.task["base"].strip()
    if raw.startswith("word:"):
        base = tuple(int(c) for c in raw[5:].strip())
    else:
        a, b = parse_list(raw)
        base = (float(a), float(b))
    scheme = first_return_scheme(fmap, base, cfg.integer("max_time"), cfg.integer("max_branches"))
    if scheme.complete_mass < 1.0:
        ctx.report.warn("INCOMPLETE_SCHEME",
                        f"branches cover {scheme.complete_mass:.12g} of the base")
    rows = [(i, b.tau, word_to_str(b.word), b.domain[0], b.domain[1], b.log_deriv)
            for i, b in enumerate(scheme.branches)]
    ctx.emit("scheme", ["branch_index", "tau", "word", "domain_left", "domain_right",
                        "log_deriv"], rows,
             comments=[f"#distortion_bound={output.fmt(scheme.distortion_bound)}",
                       f"#complete_mass={output.fmt(scheme.complete_mass)}"])
    phi = cfg.build_potential(fmap)
    Phi = induce_potential(scheme, phi, variation_depth=0)
    s = bowen_root(scheme, Phi)
    mu = project_measure(scheme, gibbs_branch_probs(Phi, s), Phi)
    weights = mu.cylinder_weights
    footer = [f"entropy={output.fmt(mu.entropy)}", f"lyapunov={output.fmt(mu.lyapunov)}",
              f"dimension={output.fmt(mu.dimension)}", f"shift={output.fmt(s)}"]
    ctx.emit("measure", ["word", "weight"], sorted(weights.items()), footer=footer)


def cmd_empirical(ctx: Context) -> None:
    cfg = ctx.cfg
    fmap = cfg.build_map()
    raw_bins = cfg.task["bins"].strip()
    bins = int(raw_bins) if raw_bins.isdigit() else parse_list(raw_bins)
    width = None if cfg.task["bin_width"].strip() == "auto" else cfg.number("bin_width")
    sc = cfg.task["scales"].strip()
    if sc.count(":") == 1:
        a, b = (int(v) for v in sc.split(":"))
        scales = list(range(a, b + 1))
    else:
        scales = [int(v) for v in parse_grid(sc, "task.scales")]
    est = empirical_lyapunov_spectrum(fmap, cfg.integer("starts"), cfg.integer("length"),
                                      bins=bins, bin_width=width, scales=scales,
                                      seed=cfg.integer("seed"))
    flags = ["" if r else "unreliable" for r in est.reliable]
    if not est.reliable.all():
        ctx.report.warn("UNRELIABLE_BIN", f"{int((~est.reliable).sum())} bins have fit_r2 < 0.95")
    rows = zip(est.bin_centers, est.bin_counts, est.dim_estimates, est.fit_r2, flags)
    ctx.emit("empirical", ["bin_center", "count", "dim_estimate", "fit_r2", "flag"], rows,
             plot=([("dim", est.bin_centers, est.dim_estimates)], "lambda", "dimension"))


def cmd_verify(ctx: Context) -> None:
    cfg = ctx.cfg
    raw = cfg.task["criteria"].strip()
    ids = list(CRITERIA) if raw == "all" else [c.strip().upper() for c in raw.split(",")]
    unknown = [c for c in ids if c not in CRITERIA]
    if unknown:
        raise ConfigError(f"unknown criteria {unknown}")
    results = run_all(ids, VerifyOptions(slope_gap_tol=cfg.number("slope_gap_tol")))
    for r in results:
        print(r.line())
    failing = [r.cid for r in results if not r.passed]
    if failing:
        print("failing: " + " ".join(failing))
        ctx.report.exit_code = EXIT_VERIFY
        for cid in failing:
            ctx.report.warn("CRITERION_FAILED", cid)


HANDLERS = {
    "pressure": cmd_pressure,
    "lyapunov": cmd_lyapunov,
    "temperature": cmd_temperature,
    "dimension": cmd_dimension,
    "induce": cmd_induce,
    "empirical": cmd_empirical,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI config file")
    common.add_argument("--out", help="output directory (overrides [output] directory)")
    common.add_argument("--workers", type=int, default=1, help="worker pool size hint")
    common.add_argument("--plot", action="store_true", help="also write SVG plots")
    common.add_argument("--json", action="store_true", help="also write JSON mirrors")
    common.add_argument("--print-defaults", action="store_true",
                        help="print the default config for the command and exit")
    parser = argparse.ArgumentParser(prog="thermofractal",
                                     description="Pressure, spectra and inducing for interval maps")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "pressure": "pressure curve and phase-transition report",
        "lyapunov": "Lyapunov spectrum from a pressure curve",
        "temperature": "temperature function of a normalised potential",
        "dimension": "dimension spectrum of an equilibrium measure",
        "induce": "first-return inducing scheme and projected measure",
        "empirical": "orbit-based level-set dimension estimates",
        "verify": "run the acceptance checks",
    }
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.print_defaults:
        print(defaults_text(args.command))
        return EXIT_OK
    start = time.perf_counter()
    try:
        cfg = load_config(args.command, args.config)
        ctx = Context(cfg, args)
        HANDLERS[args.command](ctx)
    except ConfigError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InsufficientData as exc:
        print(f"InsufficientData: {exc}", file=sys.stderr)
        return EXIT_PARTIAL
    except ThermoError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_PARTIAL
    ctx.report.wall_time = time.perf_counter() - start
    print(ctx.report.render())
    return ctx.report.exit_code


if __name__ == "__main__":
    sys.exit(main())
