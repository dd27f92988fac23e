"""Command-line interface: reproducible experiments with file-based I/O.

Subcommands: phantom, simulate, reconstruct, specrad, convmap, verify-lemmas,
repro. Every run writes its outputs plus a ``run.json`` manifest (effective
configuration and artifact checksums) into the output directory; outputs are
byte-identical across repeated runs with the same configuration and seed.

Flags may also be supplied through a JSON config file (``--config``); values
given on the command line win.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import analysis, phantoms
from .bundled import bundled_materials_manifest_path, bundled_spectrum_path
from .fileio import write_matrix_csv, write_pgm16, write_ppm_diverging, \
    write_run_manifest
from .materials import load_lac_model
from .projection import ParallelBeamGeometry, ParallelBeamProjector, Sinogram, \
    forward, poly_project, post_log
from .reconstruction import SolverConfig, run_art, run_part, run_psart, run_sart
from .spectra import load_spectrum, monoenergetic

_ALGORITHMS = ("art", "sart", "part", "psart")
_OPERATORS = ("sart-T", "psart-JF")
_FIGURES = ("fig2", "fig4", "fig5", "table1")


class CliError(Exception):
    """User-facing configuration or input error; maps to exit status 2."""


# ---------------------------------------------------------------------------
# Shared plumbing
# ---------------------------------------------------------------------------

def _load_config_file(path: str | None) -> dict:
    if not path:
        return {}
    p = Path(path)
    if not p.exists():
        raise CliError(f"config file not found: {p}")
    with open(p) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise CliError(f"config file {p}: invalid JSON ({exc})") from exc
    if not isinstance(data, dict):
        raise CliError(f"config file {p}: expected a JSON object")
    return data


def _merge_config(args: argparse.Namespace) -> argparse.Namespace:
    """File values fill in flags the user left at their defaults."""
    file_values = _load_config_file(getattr(args, "config", None))
    subparser = getattr(args, "_parser")
    for key, value in file_values.items():
        attr = key.replace("-", "_")
        if not hasattr(args, attr) or attr.startswith("_"):
            raise CliError(f"config file: unknown field {key!r}")
        if subparser.get_default(attr) == getattr(args, attr):
            setattr(args, attr, value)
    return args


def _out_dir(args) -> Path:
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _spectrum_from_flag(value: str):
    if value.startswith("mono:"):
        try:
            return monoenergetic(float(value.split(":", 1)[1]))
        except ValueError as exc:
            raise CliError(f"--spectrum: bad monoenergetic value in {value!r}") from exc
    path = Path(value)
    if not path.exists():
        raise CliError(f"--spectrum: file not found: {path}")
    return load_spectrum(path).normalized()


def _model_from_flag(value: str):
    path = Path(value)
    if not path.exists():
        raise CliError(f"--materials: manifest not found: {path}")
    return load_lac_model(path)


def _geometry(args) -> ParallelBeamGeometry:
    return ParallelBeamGeometry(
        image_size=args.size,
        n_views=args.views,
        pixel_pitch_cm=args.pixel_pitch,
        n_detectors=args.detectors,
        detector_pitch_cm=args.detector_pitch,
    )


def _solver_config(args) -> SolverConfig:
    return SolverConfig(
        max_iterations=args.max_iterations,
        convergence_tol=args.tol,
        cycle_window=args.cycle_window,
        cycle_tol=args.cycle_tol,
    )


def _config_echo(args) -> dict:
    skip = {"func", "config", "_parser"}
    out = {}
    for key, value in sorted(vars(args).items()):
        if key in skip:
            continue
        out[key] = str(value) if isinstance(value, Path) else value
    return out


def _add_geometry_flags(p, size_default=64, views_default=120):
    p.add_argument("--size", type=int, default=size_default,
                   help="image size N (N x N pixels)")
    p.add_argument("--views", type=int, default=views_default,
                   help="number of views over 180 degrees")
    p.add_argument("--pixel-pitch", type=float, default=None,
                   help="pixel pitch in cm (default: 20/N)")
    p.add_argument("--detectors", type=int, default=None,
                   help="detector count (default: N)")
    p.add_argument("--detector-pitch", type=float, default=None,
                   help="detector pitch in cm (default: pixel pitch)")


def _add_solver_flags(p, max_iterations=2000, tol=1e-9):
    p.add_argument("--max-iterations", type=int, default=max_iterations)
    p.add_argument("--tol", type=float, default=tol,
                   help="convergence tolerance on the max-norm update")
    p.add_argument("--cycle-window", type=int, default=8)
    p.add_argument("--cycle-tol", type=float, default=1e-9)


def _add_model_flags(p):
    p.add_argument("--spectrum", default=str(bundled_spectrum_path()),
                   help="spectrum CSV or mono:<keV> (default: bundled 130 kVp)")
    p.add_argument("--materials", default=str(bundled_materials_manifest_path()),
                   help="materials manifest JSON (default: bundled model)")


def _finish(args, out: Path, name: str, artifacts: list[Path]) -> int:
    write_run_manifest(out, name, _config_echo(args), artifacts)
    for p in artifacts:
        print(p)
    print(out / "run.json")
    return 0


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_phantom(args) -> int:
    out = _out_dir(args)
    img = phantoms.head_phantom(args.size)
    artifacts = [
        write_matrix_csv(out / "phantom.csv", img),
        write_pgm16(out / "phantom.pgm", img, window=(0.0, phantoms.BONE_LAC)),
    ]
    return _finish(args, out, "phantom", artifacts)


def cmd_simulate(args) -> int:
    out = _out_dir(args)
    if args.pixel_pitch is None:
        args.pixel_pitch = 20.0 / args.size
    geometry = _geometry(args)
    a = ParallelBeamProjector(geometry)
    if args.phantom:
        img = np.asarray(_read_image(args.phantom, geometry.image_size))
    else:
        img = phantoms.head_phantom(args.size)
    spectrum = _spectrum_from_flag(args.spectrum)
    model = _model_from_flag(args.materials)
    sino = poly_project(a, model, spectrum, img.ravel())
    grid = sino.values.reshape(geometry.n_views, geometry.n_detectors)
    artifacts = [
        write_matrix_csv(out / "sinogram.csv", grid),
        write_pgm16(out / "sinogram.pgm", grid),
        write_matrix_csv(out / "phantom.csv", img),
    ]
    return _finish(args, out, "simulate", artifacts)


def _read_image(path, expected_size: int) -> np.ndarray:
    from .fileio import read_matrix_csv
    p = Path(path)
    if not p.exists():
        raise CliError(f"--phantom: file not found: {p}")
    img = read_matrix_csv(p)
    if img.ndim != 2 or img.shape != (expected_size, expected_size):
        raise CliError(
            f"--phantom: expected a {expected_size}x{expected_size} CSV, got {img.shape}"
        )
    return img


def cmd_reconstruct(args) -> int:
    out = _out_dir(args)
    if args.algorithm not in _ALGORITHMS:
        raise CliError(f"--algorithm: expected one of {_ALGORITHMS}, got {args.algorithm!r}")
    if args.pixel_pitch is None:
        args.pixel_pitch = 20.0 / args.size
    geometry = _geometry(args)
    a = ParallelBeamProjector(geometry)
    sino_path = Path(args.sinogram)
    if not sino_path.exists():
        raise CliError(f"--sinogram: file not found: {sino_path}")
    from .fileio import read_matrix_csv
    raw = np.asarray(read_matrix_csv(sino_path), dtype=float).ravel()
    if raw.size != geometry.n_rays:
        raise CliError(
            f"--sinogram: {raw.size} values but geometry produces {geometry.n_rays} rays"
        )
    spectrum = _spectrum_from_flag(args.spectrum)
    model = _model_from_flag(args.materials)
    config = _solver_config(args)
    p = Sinogram.intensity(raw)
    if args.algorithm == "art":
        report = run_art(a, post_log(p, spectrum), config)
    elif args.algorithm == "sart":
        report = run_sart(a, post_log(p, spectrum), config)
    elif args.algorithm == "part":
        report = run_part(a, model, spectrum, p, config)
    else:
        report = run_psart(a, model, spectrum, p, config)
    n = geometry.image_size
    image = report.final.reshape(n, n)
    artifacts = [
        write_matrix_csv(out / "image.csv", image),
        write_pgm16(out / "image.pgm", image, window=(0.0, phantoms.BONE_LAC)),
        write_matrix_csv(out / "residuals.csv", report.residual_history),
    ]
    if a.shape[1] == 2 and report.iterates is not None:
        artifacts.append(write_matrix_csv(out / "trajectory.csv", np.array(report.iterates)))
    print(f"status={report.status} iterations={report.iterations_run}"
          + (f" period={report.cycle_period}" if report.cycle_period else ""))
    return _finish(args, out, "reconstruct", artifacts)


def cmd_specrad(args) -> int:
    out = _out_dir(args)
    if args.operator not in _OPERATORS:
        raise CliError(f"--operator: expected one of {_OPERATORS}, got {args.operator!r}")
    if args.pixel_pitch is None:
        args.pixel_pitch = 20.0 / args.size
    geometry = _geometry(args)
    a = ParallelBeamProjector(geometry)
    if args.operator == "sart-T":
        op = analysis.sart_iteration_operator(a)
    else:
        spectrum = _spectrum_from_flag(args.spectrum)
        model = _model_from_flag(args.materials)
        t_star = phantoms.head_phantom(args.size).ravel()
        op = analysis.jacobian_F_operator(a, model, spectrum, t_star)
    result = analysis.power_iteration(op, tol=args.tol, max_iterations=args.max_iterations,
                                      seed=args.seed)
    print(f"operator={args.operator} lambda={result.eigenvalue:.17g} "
          f"iterations={result.iterations} residual={result.final_residual:.3e} "
          f"converged={result.converged}")
    summary = np.array([result.eigenvalue, result.iterations, result.final_residual,
                        float(result.converged)])
    artifacts = [write_matrix_csv(out / "specrad.csv", summary)]
    return _finish(args, out, "specrad", artifacts)


def cmd_convmap(args) -> int:
    out = _out_dir(args)
    spectrum = _spectrum_from_flag(args.spectrum)
    model = _model_from_flag(args.materials)
    cmap = analysis.convergence_map(
        model, spectrum,
        t1_range=(args.t1_min, args.t1_max),
        t2_range=(args.t2_min, args.t2_max),
        grid_size=args.grid_size,
        workers=args.threads,
    )
    agreement = analysis.agreement_fraction(cmap)
    ratio = analysis.discontinuity_ratio(cmap)
    print(f"agreement={agreement:.4f} discontinuity_ratio={ratio:.2f}")
    artifacts = [
        write_matrix_csv(out / "rho.csv", cmap.rho),
        write_matrix_csv(out / "converged.csv", cmap.converged.astype(float)),
        write_matrix_csv(out / "t1_values.csv", cmap.t1_values),
        write_matrix_csv(out / "t2_values.csv", cmap.t2_values),
        write_ppm_diverging(out / "rho.ppm", cmap.rho, center=1.0),
    ]
    return _finish(args, out, "convmap", artifacts)


def cmd_verify_lemmas(args) -> int:
    out = _out_dir(args)
    rng = np.random.default_rng(args.seed)
    failures = 0
    skipped = 0
    for _ in range(args.trials):
        n = int(rng.integers(2, 7))
        m = int(rng.integers(n, 2 * n + 1))
        matrix = rng.uniform(0.1, 2.0, size=(m, n))
        reports = [
            analysis.verify_lemma_a1(matrix),
            analysis.verify_lemma_a2(matrix),
            analysis.verify_theorem_a3(matrix),
        ]
        for rep in reports:
            if not rep.hypothesis_ok:
                skipped += 1
            elif not rep.passed:
                failures += 1
                print(f"FAIL {rep.name}: {rep.details}")
    status = "PASS" if failures == 0 else "FAIL"
    print(f"{status}: {args.trials} trials, {failures} failures, {skipped} hypothesis skips")
    summary = np.array([float(args.trials), float(failures), float(skipped)])
    _finish(args, out, "verify-lemmas", [write_matrix_csv(out / "lemmas.csv", summary)])
    return 0 if failures == 0 else 1


def _two_pixel_setup():
    a, t = phantoms.two_pixel_object(0.1, 0.16)
    return a, t


def cmd_repro(args) -> int:
    if args.figure not in _FIGURES:
        raise CliError(f"figure: expected one of {_FIGURES}, got {args.figure!r}")
    out = _out_dir(args)
    if args.figure == "fig2":
        return _repro_fig2(args, out)
    if args.figure == "fig4":
        return _repro_fig4(args, out)
    if args.figure == "fig5":
        return _repro_fig5(args, out)
    return _repro_table1(args, out)


def _repro_fig2(args, out: Path) -> int:
    """Monoenergetic two-pixel object: ART and SART trajectories."""
    a, t_true = _two_pixel_setup()
    b = forward(a, t_true)
    config = SolverConfig(max_iterations=args.max_iterations, convergence_tol=args.tol)
    artifacts = []
    for name, runner in (("art", run_art), ("sart", run_sart)):
        report = runner(a, b, config)
        traj = np.array(report.iterates)
        artifacts.append(write_matrix_csv(out / f"{name}_trajectory.csv", traj))
        err = float(np.max(np.abs(report.final - t_true)))
        print(f"{name}: status={report.status} iterations={report.iterations_run} "
              f"final=({report.final[0]:.8f}, {report.final[1]:.8f}) error={err:.3e}")
    return _finish(args, out, "repro fig2", artifacts)


def _repro_fig4(args, out: Path) -> int:
    """Polyenergetic two-pixel runs for the four reference objects."""
    a, _ = _two_pixel_setup()
    spectrum = _spectrum_from_flag(args.spectrum)
    model = _model_from_flag(args.materials)
    config = SolverConfig(max_iterations=args.max_iterations, convergence_tol=args.tol)
    artifacts = []
    for t2 in (0.16, 0.24, 0.203, 0.204):
        t_star = np.array([0.1, t2])
        p = poly_project(a, model, spectrum, t_star)
        rho = analysis.spectral_radius_2x2(
            analysis.jacobian_F_dense(a, model, spectrum, t_star))
        tag = f"t2_{t2:g}".replace(".", "p")
        for name, runner in (("psart", run_psart), ("part", run_part)):
            report = runner(a, model, spectrum, p, config)
            traj = np.array(report.iterates)
            artifacts.append(write_matrix_csv(out / f"{name}_{tag}.csv", traj))
            err = float(np.max(np.abs(report.final - t_star)))
            print(f"{name} t2={t2}: rho={rho:.4f} status={report.status}"
                  + (f" period={report.cycle_period}" if report.cycle_period else "")
                  + f" error={err:.3e}")
    return _finish(args, out, "repro fig4", artifacts)


def _repro_fig5(args, out: Path) -> int:
    """Spectral-radius and empirical convergence maps over (t1, t2)."""
    return cmd_convmap(args)


def _repro_table1(args, out: Path) -> int:
    """Power-iteration study for T and J_F on the head phantom."""
    if args.pixel_pitch is None:
        args.pixel_pitch = 20.0 / args.size
    geometry = _geometry(args)
    a = ParallelBeamProjector(geometry)
    spectrum = _spectrum_from_flag(args.spectrum)
    model = _model_from_flag(args.materials)
    t_star = phantoms.head_phantom(args.size).ravel()
    rows = []
    for name, op in (
        ("sart-T", analysis.sart_iteration_operator(a)),
        ("psart-JF", analysis.jacobian_F_operator(a, model, spectrum, t_star)),
    ):
        result = analysis.power_iteration(op, tol=args.power_tol,
                                          max_iterations=args.power_max_iterations,
                                          seed=args.seed)
        rows.append([result.eigenvalue, result.iterations, result.final_residual,
                     float(result.converged)])
        print(f"{name}: lambda={result.eigenvalue:.8f} iterations={result.iterations} "
              f"residual={result.final_residual:.3e} converged={result.converged}")
    print(f"difference |rho(T) - rho(J_F)| = {abs(abs(rows[0][0]) - abs(rows[1][0])):.3e}")
    artifacts = [write_matrix_csv(out / "table1.csv", np.array(rows))]
    return _finish(args, out, "repro table1", artifacts)


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="polysart",
        description="Algebraic CT reconstruction and convergence analysis experiments.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p):
        p.set_defaults(_parser=p)
        p.add_argument("--output", default="out", help="output directory")
        p.add_argument("--config", default=None, help="JSON config file (flags override)")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                       help="worker cap for parallel grid sweeps")

    p = sub.add_parser("phantom", help="rasterize the head phantom")
    common(p)
    p.add_argument("--size", type=int, default=64)
    p.set_defaults(func=cmd_phantom)

    p = sub.add_parser("simulate", help="forward-project a phantom into a sinogram")
    common(p)
    _add_geometry_flags(p)
    _add_model_flags(p)
    p.add_argument("--phantom", default=None, help="phantom CSV (default: built-in head)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("reconstruct", help="iterative reconstruction from a sinogram")
    common(p)
    _add_geometry_flags(p)
    _add_model_flags(p)
    _add_solver_flags(p)
    p.add_argument("--algorithm", default="sart", choices=_ALGORITHMS)
    p.add_argument("--sinogram", required=True, help="intensity sinogram CSV")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("specrad", help="power-iteration spectral radius of an update map")
    common(p)
    _add_geometry_flags(p)
    _add_model_flags(p)
    p.add_argument("--operator", default="sart-T", choices=_OPERATORS)
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--max-iterations", type=int, default=20000)
    p.set_defaults(func=cmd_specrad)

    p = sub.add_parser("convmap", help="spectral-radius / convergence map over (t1, t2)")
    common(p)
    _add_model_flags(p)
    p.add_argument("--t1-min", type=float, default=0.02)
    p.add_argument("--t1-max", type=float, default=0.30)
    p.add_argument("--t2-min", type=float, default=0.02)
    p.add_argument("--t2-max", type=float, default=0.30)
    p.add_argument("--grid-size", type=int, default=60)
    p.set_defaults(func=cmd_convmap)

    p = sub.add_parser("verify-lemmas", help="randomized checks of the convergence facts")
    common(p)
    p.add_argument("--trials", type=int, default=100)
    p.set_defaults(func=cmd_verify_lemmas)

    p = sub.add_parser("repro", help="canned reproduction recipes")
    common(p)
    p.add_argument("figure", choices=_FIGURES)
    _add_geometry_flags(p, size_default=64, views_default=120)
    _add_model_flags(p)
    p.add_argument("--grid-size", type=int, default=60)
    p.add_argument("--t1-min", type=float, default=0.02)
    p.add_argument("--t1-max", type=float, default=0.30)
    p.add_argument("--t2-min", type=float, default=0.02)
    p.add_argument("--t2-max", type=float, default=0.30)
    p.add_argument("--tol", type=float, default=1e-9,
                   help="solver convergence tolerance (fig2/fig4)")
    p.add_argument("--max-iterations", type=int, default=2000)
    p.add_argument("--power-tol", type=float, default=1e-4,
                   help="power-iteration residual tolerance (table1)")
    p.add_argument("--power-max-iterations", type=int, default=30000)
    p.set_defaults(func=cmd_repro)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args = _merge_config(args)
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
