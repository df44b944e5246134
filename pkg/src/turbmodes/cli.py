"""Command-line front end: experiment runner over the analytic engine
and the Monte Carlo simulator, emitting CSV/JSON artifacts.

Subcommands: lambda (coupling-rate matrix), propagate (modal power
through the channel), simulate (ensemble), compare (theory vs
simulation report), table1 (diagonal integrals vs the order scaling),
dump-b (acceptance-spectrum curves).

Exit codes: 0 success, 1 invalid configuration or arguments,
2 tolerance failure in compare, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from pathlib import Path

import numpy as np

from .config import STRENGTH_KEYS, ConfigError, ExperimentConfig
from .coupling import AcceptanceSpectrum
from .evolution import (
    DEFAULT_RTOL,
    PowerVector,
    QuadratureError,
    SpectralWeight,
    cn2_for_target_rate,
    dimensionless_integral,
    lambda_matrix,
    nonuniform_channel,
    propagate,
    scaling_law_check,
)
from .modes import HG, LG, BeamGeometry, ModeId, enumerate_basis, parse_mode_label
from .simulator import EnsembleConfig, ScreenSpec, run_ensemble
from .turbulence import (
    CUSTOM,
    KOLMOGOROV,
    DampingTable,
    TurbulenceModel,
    cn2_from_r0,
    fried_r0,
    rytov_sigma2,
)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_TOLERANCE = 2
EXIT_NUMERICAL = 3

FULL_SCALE_POINTS = 1024
FULL_SCALE_PITCH = 0.8e-3


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad usage; keep 2 reserved for
    # tolerance failures and report usage problems as validation errors
    def error(self, message):
        raise ConfigError(message)


def _build_parser() -> _Parser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="INI experiment file")
    common.add_argument("--seed", type=int, metavar="N")
    common.add_argument("--out", metavar="DIR", help="output directory")
    common.add_argument("--basis", metavar="FAMILY:NMAX", help="e.g. LG:14")
    common.add_argument(
        "--strength",
        metavar="KEY=VALUE",
        help="one of cn2=, r0=, lambda00L= (overrides the file)",
    )
    common.add_argument(
        "--pure-kolmogorov",
        action="store_true",
        help="drop inner/outer-scale damping",
    )
    common.add_argument(
        "--full-scale",
        action="store_true",
        help=f"use the {FULL_SCALE_POINTS}^2 grid at "
        f"{FULL_SCALE_PITCH * 1e3:g} mm pitch",
    )
    common.add_argument("--rtol", type=float, default=DEFAULT_RTOL)
    common.add_argument("--workers", type=int, metavar="N")

    parser = _Parser(prog="turbmodes", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser(
        "lambda", parents=[common], help="coupling-rate matrix to CSV + metadata"
    )
    sub.add_parser(
        "propagate", parents=[common], help="modal powers through the channel"
    )
    sub.add_parser("simulate", parents=[common], help="Monte Carlo ensemble")

    cmp_parser = sub.add_parser(
        "compare", parents=[common], help="join theory and simulation outputs"
    )
    cmp_parser.add_argument("theory", metavar="THEORY_CSV")
    cmp_parser.add_argument("sim", metavar="SIM_CSV")
    cmp_parser.add_argument(
        "--max-sigma",
        type=float,
        default=3.0,
        help="per-group tolerance in standard-error units",
    )
    cmp_parser.add_argument(
        "--max-order",
        type=int,
        default=None,
        help="only enforce the tolerance up to this mode order",
    )
    cmp_parser.add_argument(
        "--atol",
        type=float,
        default=1e-9,
        help="absolute tolerance where no standard error is available",
    )

    sub.add_parser(
        "table1", parents=[common], help="diagonal integrals vs 12(N+1)^(5/6)"
    )

    dump_parser = sub.add_parser(
        "dump-b", parents=[common], help="acceptance-spectrum curves to CSV"
    )
    dump_parser.add_argument(
        "--pair",
        action="append",
        required=True,
        metavar="MODE:MODE",
        help="e.g. 'LG(0,0):LG(0,1)'; repeatable",
    )
    dump_parser.add_argument("--theta-max", type=float, default=10.0)
    dump_parser.add_argument("--samples", type=int, default=400)
    dump_parser.add_argument(
        "--xi",
        type=float,
        default=None,
        help="fixed screen azimuth for HG pairs instead of the average",
    )
    return parser


def _configure(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    changes: dict = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.out is not None:
        changes["out_dir"] = args.out
    if args.workers is not None:
        changes["workers"] = args.workers
    if args.basis is not None:
        family, sep, n_max = args.basis.partition(":")
        family = family.upper()
        if not sep or family not in (HG, LG) or not n_max.isdigit():
            raise ConfigError("--basis expects FAMILY:NMAX, e.g. LG:14")
        changes["family"] = family
        changes["n_max"] = int(n_max)
    if args.strength is not None:
        key, sep, value = args.strength.partition("=")
        if not sep or key not in STRENGTH_KEYS:
            raise ConfigError(
                "--strength expects KEY=VALUE with KEY one of "
                + ", ".join(STRENGTH_KEYS)
            )
        if cfg.segments is not None:
            raise ConfigError("--strength conflicts with a segmented channel")
        try:
            changes["strength_value"] = float(value)
        except ValueError as exc:
            raise ConfigError(f"--strength: {exc}") from exc
        changes["strength_kind"] = key
    if args.pure_kolmogorov:
        changes.update(
            kind=KOLMOGOROV,
            inner_scale=0.0,
            outer_scale=math.inf,
            damping_file=None,
        )
    if args.full_scale:
        changes.update(n_points=FULL_SCALE_POINTS, pitch=FULL_SCALE_PITCH)
    return cfg.override(**changes) if changes else cfg


def _geometry(cfg: ExperimentConfig) -> BeamGeometry:
    # waist plane = channel midpoint; commands shift along z as needed
    return BeamGeometry(cfg.wavelength, cfg.waist, 0.0)


def _model(cfg: ExperimentConfig, cn2: float) -> TurbulenceModel:
    damping = (
        DampingTable.from_file(cfg.damping_file) if cfg.kind == CUSTOM else None
    )
    return TurbulenceModel(
        cn2=cn2, l0=cfg.inner_scale, L0=cfg.outer_scale, kind=cfg.kind,
        damping=damping,
    )


def _resolve_cn2(cfg: ExperimentConfig, geom: BeamGeometry, rtol: float) -> float:
    """Turbulence strength as Cn^2, whichever way the config states it."""
    if cfg.segments is not None:
        raise ConfigError("this command needs a uniform channel, not segments")
    if cfg.strength_kind == "cn2":
        return cfg.strength_value
    if cfg.strength_kind == "r0":
        return cn2_from_r0(cfg.strength_value, geom.k, cfg.length)
    fundamental = ModeId.hg(0, 0) if cfg.family == HG else ModeId.lg(0, 0)
    i00 = dimensionless_integral(
        fundamental,
        fundamental,
        SpectralWeight.from_model(_model(cfg, 0.0), geom.spot),
        rtol=rtol,
    )
    return cn2_for_target_rate(cfg.strength_value, i00, geom, cfg.length)


def _out_dir(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_power_csv(path: Path, vector: PowerVector) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["mode", "power"])
        for mode, power in zip(vector.basis, vector.values):
            writer.writerow([mode.label(), f"{power:.17e}"])


def _write_group_csv(path: Path, pairs) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["order", "power"])
        for order, power in pairs:
            writer.writerow([order, f"{power:.17e}"])


def cmd_lambda(cfg: ExperimentConfig, rtol: float) -> int:
    basis = enumerate_basis(cfg.family, cfg.n_max)
    geom = _geometry(cfg)
    cn2 = _resolve_cn2(cfg, geom, rtol)
    matrix = lambda_matrix(
        basis, _model(cfg, cn2), geom, rtol=rtol, workers=cfg.workers
    )
    out = _out_dir(cfg)
    stem = f"lambda_{cfg.family.lower()}{cfg.n_max}"
    matrix.save(out / f"{stem}.csv", out / f"{stem}.ini")
    fundamental = basis.index(
        ModeId.hg(0, 0) if cfg.family == HG else ModeId.lg(0, 0)
    )
    r0 = fried_r0(cn2, geom.k, cfg.length)
    print(f"basis {cfg.family} N<={cfg.n_max}: {len(basis)} modes")
    print(
        f"Cn2 = {cn2:.6e} m^-2/3, r0 = {1e3 * r0:.4g} mm over {cfg.length:g} m, "
        f"Rytov = {rytov_sigma2(cn2, geom.k, cfg.length):.4g}"
    )
    print(
        f"fundamental: I = {matrix.i_dimensionless[fundamental, fundamental]:.6f}, "
        f"|rate|*L = {abs(matrix.fundamental_rate()) * cfg.length:.6g}"
    )
    print(f"wrote {out / (stem + '.csv')}")
    return EXIT_OK


def cmd_propagate(cfg: ExperimentConfig, rtol: float) -> int:
    basis = enumerate_basis(cfg.family, cfg.n_max)
    geom = _geometry(cfg)
    mode = parse_mode_label(cfg.input_mode) if cfg.input_mode else None
    if mode is not None and mode.family != cfg.family:
        raise ConfigError("simulator/input_mode: family must match the basis")
    v0 = PowerVector.unit(basis, mode)
    if cfg.segments is not None:
        channel = nonuniform_channel(
            basis,
            [(length, _model(cfg, cn2), geom) for length, cn2 in cfg.segments],
            rtol=rtol,
            workers=cfg.workers,
        )
        v_out = channel(v0)
    else:
        cn2 = _resolve_cn2(cfg, geom, rtol)
        matrix = lambda_matrix(
            basis, _model(cfg, cn2), geom, rtol=rtol, workers=cfg.workers
        )
        v_out = propagate(matrix, cfg.length, v0)
    out = _out_dir(cfg)
    stem = f"power_{cfg.family.lower()}{cfg.n_max}"
    _write_power_csv(out / f"{stem}.csv", v_out)
    _write_group_csv(out / f"{stem}_groups.csv", v_out.grouped())
    print(f"input {(mode or next(iter(basis))).label()}, length {cfg.length:g} m")
    for order, power in v_out.grouped():
        print(f"  N={order:<2d} {power:.6f}")
    print(f"total tracked power {v_out.total:.6f}")
    print(f"wrote {out / (stem + '.csv')}")
    return EXIT_OK


def cmd_simulate(cfg: ExperimentConfig, rtol: float) -> int:
    if cfg.kind == CUSTOM:
        raise ConfigError(
            "simulate supports kolmogorov and von_karman spectra only"
        )
    basis = enumerate_basis(cfg.family, cfg.n_max)
    geom = _geometry(cfg)
    cn2 = _resolve_cn2(cfg, geom, rtol)
    r0_total = fried_r0(cn2, geom.k, cfg.length)
    # equal split of the turbulence integral over the screens
    r0_step = r0_total * cfg.screens ** (3.0 / 5.0)
    screen = ScreenSpec(
        r0=r0_step,
        n_points=cfg.n_points,
        pitch=cfg.pitch,
        f0=cfg.f0,
        components=cfg.components,
        l0=cfg.inner_scale,
        L0=cfg.outer_scale,
        seed=cfg.seed,
        subharmonic_levels=cfg.subharmonic_levels,
    )
    mode = parse_mode_label(cfg.input_mode) if cfg.input_mode else None
    ensemble = EnsembleConfig(
        screen=screen,
        basis=basis,
        geom=geom,
        realizations=cfg.realizations,
        screens_per_realization=cfg.screens,
        dz=cfg.dz,
        seed=cfg.seed,
        input_mode=mode,
        workers=cfg.workers,
    )
    result = run_ensemble(ensemble)
    out = _out_dir(cfg)
    stem = f"sim_{cfg.family.lower()}{cfg.n_max}"
    result.save(out / f"{stem}.csv", out / f"{stem}.json")
    print(
        f"{cfg.realizations} realizations, {cfg.screens} screen(s) each, "
        f"r0_step = {1e3 * r0_step:.4g} mm, Rytov/step = "
        f"{result.rytov_per_step:.4g}"
    )
    for (order, mean), err in zip(result.grouped(), result.group_stderr):
        print(f"  N={order:<2d} {mean:.6f} +- {err:.6f}")
    print(f"wrote {out / (stem + '.csv')}")
    return EXIT_OK


def _read_value_csv(path: str) -> dict[str, tuple[float, float]]:
    """Mode CSV as label -> (value, stderr); stderr 0 when absent."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0] != "mode" or len(header) < 2:
            raise ConfigError(f"{path}: expected a mode,value[,stderr] CSV")
        values = {}
        for row in reader:
            if not row:
                continue
            err = float(row[2]) if len(row) > 2 else 0.0
            values[row[0]] = (float(row[1]), err)
    if not values:
        raise ConfigError(f"{path}: no data rows")
    return values


def cmd_compare(args) -> int:
    theory = _read_value_csv(args.theory)
    sim = _read_value_csv(args.sim)
    if set(theory) != set(sim):
        raise ConfigError("mode sets differ between the two files")
    labels = list(theory)
    print(f"{'mode':<12} {'theory':>12} {'sim':>12} {'diff':>12}  sigma")
    groups: dict[int, list[str]] = {}
    for label in labels:
        groups.setdefault(parse_mode_label(label).order, []).append(label)
        t_val, _ = theory[label]
        s_val, s_err = sim[label]
        sigma = f"{abs(s_val - t_val) / s_err:8.2f}" if s_err > 0.0 else "     n/a"
        print(f"{label:<12} {t_val:12.6f} {s_val:12.6f} {s_val - t_val:+12.6f} {sigma}")

    failures = []
    print(f"\n{'order':<6} {'theory':>12} {'sim':>12} {'diff':>12}  sigma")
    for order in sorted(groups):
        t_sum = sum(theory[lab][0] for lab in groups[order])
        s_sum = sum(sim[lab][0] for lab in groups[order])
        err = math.sqrt(sum(sim[lab][1] ** 2 for lab in groups[order]))
        diff = s_sum - t_sum
        enforced = args.max_order is None or order <= args.max_order
        if err > 0.0:
            sigma = abs(diff) / err
            ok = sigma <= args.max_sigma
            tag = f"{sigma:8.2f}"
        else:
            ok = abs(diff) <= args.atol
            tag = "     n/a"
        if enforced and not ok:
            failures.append(order)
        mark = "" if ok or not enforced else "  FAIL"
        print(f"N={order:<4d} {t_sum:12.6f} {s_sum:12.6f} {diff:+12.6f} {tag}{mark}")
    if failures:
        print(f"\ntolerance exceeded for orders {failures}")
        return EXIT_TOLERANCE
    print("\nall enforced groups within tolerance")
    return EXIT_OK


def cmd_table1(rtol: float) -> int:
    for family in (LG, HG):
        rows = scaling_law_check(family, 5, rtol=rtol)
        print(f"{family} diagonal integrals, orders 0..5")
        print(f"  {'mode':<10} {'N':>2} {'|I|':>9} {'12(N+1)^(5/6)':>14} {'rel.err':>8}")
        for mode, exact, approx, rel_err in rows:
            print(
                f"  {mode.label():<10} {mode.order:>2} {abs(exact):9.3f} "
                f"{approx:14.3f} {100 * rel_err:7.2f}%"
            )
        worst = max(rel_err for _, _, _, rel_err in rows)
        print(f"  worst relative error {100 * worst:.2f}%\n")
    return EXIT_OK


def cmd_dump_b(cfg: ExperimentConfig, args) -> int:
    pairs = []
    for spec in args.pair:
        left, sep, right = spec.partition(":")
        if not sep:
            raise ConfigError("--pair expects 'MODE:MODE', e.g. 'LG(0,0):LG(0,1)'")
        pairs.append((parse_mode_label(left), parse_mode_label(right)))
    if args.samples < 2 or args.theta_max <= 0.0:
        raise ConfigError("--samples must be >= 2 and --theta-max positive")
    theta = np.linspace(0.0, args.theta_max, args.samples)
    spectra = [
        AcceptanceSpectrum(a, b, averaged=args.xi is None, xi=args.xi or 0.0)
        for a, b in pairs
    ]
    out = _out_dir(cfg)
    path = out / "b_curves.csv"
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["theta"] + [f"{a.label()}:{b.label()}" for a, b in pairs])
        columns = [spectrum(theta) for spectrum in spectra]
        for i, th in enumerate(theta):
            writer.writerow([f"{th:.17e}"] + [f"{col[i]:.17e}" for col in columns])
    print(f"wrote {path}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "compare":
            return cmd_compare(args)
        if args.command == "table1":
            return cmd_table1(args.rtol)
        cfg = _configure(args)
        if args.command == "lambda":
            return cmd_lambda(cfg, args.rtol)
        if args.command == "propagate":
            return cmd_propagate(cfg, args.rtol)
        if args.command == "simulate":
            return cmd_simulate(cfg, args.rtol)
        return cmd_dump_b(cfg, args)
    except QuadratureError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
