"""Command-line front end: factorize | verify | kernels | evolve.

Exit codes: 0 success, 1 configuration error, 2 non-passive medium,
3 noise-commutator identity violation, 4 unsupported geometry.  Outputs
are deterministic for a fixed configuration; wall-clock content lives only
in the provenance blocks of the JSON sidecars.  MAQED_THREADS caps the
per-mode parallelism of the kernel stage.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from maqed import __version__
from maqed.config import ScenarioConfig, dump_toml, load_config
from maqed.coupling import (
    build_spectrum,
    factorize_spectrum,
    read_spectrum_csv,
    write_spectrum_csv,
)
from maqed.dynamics import (
    LambdaOperator,
    compute_kernels,
    evolve_field_expectation,
    write_field_csv,
    write_kernel_csv,
)
from maqed.errors import (
    ConfigError,
    IdentityViolated,
    MaqedError,
    NonPassive,
    UnsupportedGeometry,
)
from maqed.medium import passivity_windows
from maqed.mode_space import enumerate_modes
from maqed.noise_algebra import verify_commutator_identity, write_verification_report

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NONPASSIVE = 2
EXIT_IDENTITY = 3
EXIT_GEOMETRY = 4


def _provenance(config_path):
    digest = hashlib.sha256(Path(config_path).read_bytes()).hexdigest()
    return {
        "tool": f"maqed {__version__}",
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "config_sha256": digest,
    }


def _thread_count():
    raw = os.environ.get("MAQED_THREADS", "")
    try:
        n = int(raw)
    except ValueError:
        n = 0
    return max(1, n or os.cpu_count() or 1)


def _out_dir(cfg: ScenarioConfig, args) -> Path:
    out = Path(args.out) if args.out else cfg.out_dir
    if not out.is_absolute():
        out = Path.cwd() / out
    out.mkdir(parents=True, exist_ok=True)
    return out


def _plots_enabled(cfg, args):
    if args.no_plots:
        return False
    return cfg.plots


def cmd_factorize(cfg: ScenarioConfig, args) -> int:
    out = _out_dir(cfg, args)
    try:
        spectrum = build_spectrum(cfg.medium, cfg.omega_grid, cfg.consts, cfg.position)
    except NonPassive as exc:
        windows = {
            "electric": passivity_windows(
                cfg.medium.electric, cfg.position, cfg.omega_grid, tol=1e-6
            ),
            "magnetic": passivity_windows(
                cfg.medium.magnetic, cfg.position, cfg.omega_grid, tol=1e-6
            ),
        }
        payload = {
            "error": "NonPassive",
            "message": str(exc),
            "omega": exc.omega,
            "nonpassive_windows": {k: [list(w) for w in v] for k, v in windows.items()},
            "provenance": _provenance(args.config),
        }
        with open(out / "nonpassive.json", "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
        print(f"non-passive medium: {exc}", file=sys.stderr)
        print(f"window report written to {out / 'nonpassive.json'}", file=sys.stderr)
        return EXIT_NONPASSIVE
    spectrum = factorize_spectrum(spectrum)
    write_spectrum_csv(
        spectrum,
        out / "spectrum.csv",
        out / "spectrum.json",
        provenance=_provenance(args.config),
    )
    if _plots_enabled(cfg, args):
        from maqed import plots

        plots.spectrum_figure(spectrum, out / "spectrum.png")
    print(f"spectrum written to {out / 'spectrum.csv'}")
    return EXIT_OK


def cmd_verify(cfg: ScenarioConfig, args) -> int:
    out = _out_dir(cfg, args)
    spectrum = None
    omega_grid = cfg.omega_grid
    if args.spectrum:
        spectrum = read_spectrum_csv(args.spectrum, cfg.consts, cfg.position)
        omega_grid = spectrum.omega
    code = EXIT_OK
    try:
        report = verify_commutator_identity(
            cfg.medium, omega_grid, cfg.position, cfg.consts, spectrum=spectrum
        )
    except IdentityViolated as exc:
        report = exc.report
        code = EXIT_IDENTITY
    except NonPassive as exc:
        print(f"non-passive medium: {exc}", file=sys.stderr)
        return EXIT_NONPASSIVE
    report["reductions"] = _reduction_checks(cfg)
    if not all(item["passed"] for item in report["reductions"].values()):
        code = code or EXIT_IDENTITY
        report["passed"] = False
    write_verification_report(report, out / "verification.json", _provenance(args.config))
    if _plots_enabled(cfg, args):
        from maqed import plots

        plots.verification_figure(report, out / "verification.png")
    status = "PASS" if code == EXIT_OK else "FAIL"
    print(
        f"{status}: max deviation {report['max_deviation']:.3e} "
        f"(tolerance {report['tolerance']:.1e}); report at {out / 'verification.json'}"
    )
    return code


def _reduction_checks(cfg: ScenarioConfig) -> dict:
    """Limiting-case checks applicable to the configured medium."""
    checks: dict = {}
    if cfg.medium.is_vacuum():
        geo_modes = enumerate_modes(cfg.geometry, cfg.consts)[:6]
        worst = 0.0
        for mode in geo_modes:
            op = LambdaOperator(mode.k, cfg.medium, cfg.consts)
            t = np.linspace(0.0, 10.0 / mode.omega, 80)
            ks = compute_kernels(op, mode, np.zeros(0), t)
            ref = 1j * cfg.consts.c**2 * np.exp(-1j * mode.omega * t)
            for e in (mode.e1, mode.e2):
                dev = np.abs(np.einsum("i,tij,j->t", e, ks.eta, e) - ref).max()
                worst = max(worst, float(dev))
        checks["vacuum_eta"] = {
            "passed": worst < 1e-8,
            "max_deviation": worst,
            "tolerance": 1e-8,
        }
    spectrum_zero = True
    for model in (cfg.medium.electric, cfg.medium.magnetic):
        if model is None:
            continue
        im = np.imag(
            np.stack([model.chi_freq(cfg.position, w) for w in cfg.omega_grid[::64]])
        )
        if np.max(np.abs(im)) > 1e-14:
            spectrum_zero = False
    if cfg.medium.is_vacuum() or (cfg.medium.is_homogeneous() and spectrum_zero):
        checks["noise_densities_vanish"] = {"passed": spectrum_zero, "tolerance": 1e-14}
    return checks


def _kernels_for_modes(cfg: ScenarioConfig, modes):
    spectrum = None
    if not cfg.medium.is_vacuum() and cfg.omega_q.size:
        spectrum = factorize_spectrum(
            build_spectrum(cfg.medium, cfg.omega_q, cfg.consts, cfg.position)
        )

    def job(mode):
        op = LambdaOperator(mode.k, cfg.medium, cfg.consts)
        return compute_kernels(
            op,
            mode,
            cfg.omega_q,
            cfg.t_grid,
            spectrum=spectrum,
            method=cfg.kernel_method,
        )

    n_threads = min(_thread_count(), max(len(modes), 1))
    if n_threads > 1 and len(modes) > 1:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            return list(pool.map(job, modes))
    return [job(m) for m in modes]


def _selected_modes(cfg: ScenarioConfig, wanted):
    all_modes = {m.n: m for m in enumerate_modes(cfg.geometry, cfg.consts)}
    missing = [n for n in wanted if tuple(n) not in all_modes]
    if missing:
        raise ConfigError(
            f"kernels.modes entries {missing!r} outside the enumerated mode set"
        )
    return [all_modes[tuple(n)] for n in wanted]


def cmd_kernels(cfg: ScenarioConfig, args) -> int:
    out = _out_dir(cfg, args)
    if not cfg.medium.is_homogeneous():
        print(
            "unsupported geometry: dynamics requires a homogeneous medium",
            file=sys.stderr,
        )
        return EXIT_GEOMETRY
    modes = _selected_modes(cfg, cfg.kernel_modes)
    kernel_sets = _kernels_for_modes(cfg, modes)
    for ks in kernel_sets:
        tag = "kernels_{}_{}_{}.csv".format(*ks.mode.n)
        write_kernel_csv(ks, out / tag)
        if _plots_enabled(cfg, args):
            from maqed import plots

            plots.kernel_figure(ks, out / tag.replace(".csv", ".png"))
    print(f"{len(kernel_sets)} kernel file(s) written to {out}")
    return EXIT_OK


def cmd_evolve(cfg: ScenarioConfig, args) -> int:
    out = _out_dir(cfg, args)
    if not cfg.medium.is_homogeneous():
        print(
            "unsupported geometry: dynamics requires a homogeneous medium",
            file=sys.stderr,
        )
        return EXIT_GEOMETRY
    init = cfg.initial_state()
    active = init.active_modes()
    if not active:
        modes = []
    else:
        modes = _selected_modes(cfg, [list(n) for n in active])
    kernel_sets = _kernels_for_modes(cfg, modes)
    kernels = {ks.mode.n: ks for ks in kernel_sets}
    field = evolve_field_expectation(
        modes,
        kernels,
        init,
        cfg.r_points,
        cfg.t_grid,
        cfg.geometry.volume,
        cfg.consts,
    )
    write_field_csv(out / "field.csv", cfg.t_grid, cfg.r_points, field)
    if _plots_enabled(cfg, args):
        from maqed import plots

        plots.field_figure(cfg.t_grid, field, out / "field.png")
    print(f"field series written to {out / 'field.csv'}")
    return EXIT_OK


_COMMANDS = {
    "factorize": cmd_factorize,
    "verify": cmd_verify,
    "kernels": cmd_kernels,
    "evolve": cmd_evolve,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="maqed",
        description="coupling-tensor quantization pipeline for absorptive media",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in _COMMANDS.items():
        p = sub.add_parser(name, help=fn.__doc__)
        p.add_argument("--config", required=True, help="scenario TOML file")
        p.add_argument("--out", default=None, help="output directory override")
        p.add_argument(
            "--dump-config",
            action="store_true",
            help="print the fully resolved configuration and exit",
        )
        p.add_argument(
            "--no-plots", action="store_true", help="skip figure rendering"
        )
        if name == "verify":
            p.add_argument(
                "--spectrum",
                default=None,
                help="verify a previously written spectrum CSV against the model",
            )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NonPassive as exc:
        print(f"non-passive medium: {exc}", file=sys.stderr)
        return EXIT_NONPASSIVE
    if args.dump_config:
        sys.stdout.write(dump_toml(cfg.raw))
        return EXIT_OK
    try:
        return _COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NonPassive as exc:
        print(f"non-passive medium: {exc}", file=sys.stderr)
        return EXIT_NONPASSIVE
    except UnsupportedGeometry as exc:
        print(f"unsupported geometry: {exc}", file=sys.stderr)
        return EXIT_GEOMETRY
    except IdentityViolated as exc:
        print(f"identity violated: {exc}", file=sys.stderr)
        return EXIT_IDENTITY
    except MaqedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
