"""Command-line entry point: ``tpgsim <command> [options]``.

Every file written carries a ``# config_sha256=`` header and a provenance
block with the resolved configuration; writes go through a temp file and
``os.replace`` so an interrupted run never leaves a truncated report.
Exit codes: 0 ok, 2 validation, 3 domain, 4 no root, 5 non-convergence.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import __version__
from .dispersion import AXES, dump_crystal, ktp, load_crystal_file, principal_index
from .errors import DomainError, NoRoot, NonConvergence, TPGError, ValidationError
from .experiment import (
    efficiency_report,
    fit_delta,
    load_experiment_config,
    load_measured_sweep,
    effective_stim_intensity,
    predict_yield_sweep,
    synthetic_sweep,
)
from .oracle_testkit import equivalence_report
from .phase_matching import pm_curve, solve_degenerate_pm, wavelength_of
from .tpg_model import flux_spectrum, integrate_flux, lobe_edges, regime_map, regime_threshold

EXIT_OK, EXIT_VALIDATION, EXIT_DOMAIN, EXIT_NO_ROOT, EXIT_NONCONVERGENCE = 0, 2, 3, 4, 5


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ValidationError(message)


def _canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), default=str)


def config_hash(provenance: dict) -> str:
    return hashlib.sha256(_canonical(provenance).encode()).hexdigest()


def atomic_write(path, text: str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(args, text: str):
    if args.out:
        atomic_write(args.out, text)
    else:
        sys.stdout.write(text)


def emit_csv(args, header, rows, provenance: dict):
    buf = io.StringIO()
    buf.write(f"# config_sha256={config_hash(provenance)}\n")
    buf.write(f"# provenance={_canonical(provenance)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    _emit(args, buf.getvalue())


def emit_json(args, body: dict, provenance: dict):
    doc = {"config_sha256": config_hash(provenance), "provenance": provenance, **body}
    _emit(args, json.dumps(doc, indent=2, sort_keys=True, default=str) + "\n")


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _crystal(args):
    if args.crystal:
        if not Path(args.crystal).is_file():
            raise ValidationError(f"crystal file not found: {args.crystal}")
        return load_crystal_file(args.crystal)
    return ktp()


def _config(args):
    return load_experiment_config(args.config, crystal_path=args.crystal)


def _base_provenance(args, **extra) -> dict:
    prov = {"tool": "tpgsim", "version": __version__, "command": args.command}
    prov.update(extra)
    return prov


# -- commands --------------------------------------------------------------

def cmd_index(args):
    crystal = _crystal(args)
    if args.axis not in AXES:
        raise ValidationError(f"unknown axis {args.axis!r}; expected one of x, y, z")
    n = float(principal_index(crystal, args.axis, args.lambda_nm * 1e-9))
    line = f"n_{args.axis}({args.lambda_nm:g}nm) = {n:.10f}\n"
    _emit(args, line)


def _pm_provenance(args, crystal, **extra):
    return _base_provenance(
        args, crystal=dump_crystal(crystal), lambda_p_nm=args.lambda_p_nm, **extra
    )


PM_HEADER = ["theta_deg", "lambda1_nm", "lambda23_nm", "delta_k_residual_rad_per_m"]


def cmd_pm_solve(args):
    crystal = _crystal(args)
    theta = math.radians(args.theta_deg)
    roots = solve_degenerate_pm(args.lambda_p_nm * 1e-9, theta, crystal)
    rows = [(args.theta_deg, r.lambda_1 * 1e9, r.lambda_23 * 1e9, r.delta_k) for r in roots]
    emit_csv(args, PM_HEADER, rows, _pm_provenance(args, crystal, theta_deg=args.theta_deg))


def cmd_pm_curve(args):
    crystal = _crystal(args)
    if args.theta_samples < 1:
        raise ValidationError("--theta-samples must be >= 1")
    thetas_deg = np.linspace(args.theta_min_deg, args.theta_max_deg, args.theta_samples)
    rows = pm_curve(args.lambda_p_nm * 1e-9, np.radians(thetas_deg), crystal)
    prov = _pm_provenance(
        args, crystal,
        theta_min_deg=args.theta_min_deg,
        theta_max_deg=args.theta_max_deg,
        theta_samples=args.theta_samples,
    )
    emit_csv(args, PM_HEADER, rows, prov)


def _experiment(args):
    cfg = _config(args)
    inputs = cfg.template()
    if getattr(args, "energy_uj", None) is not None:
        stim = cfg.stim.with_energy(args.energy_uj * 1e-6)
        inputs = inputs.with_(
            I_10=effective_stim_intensity(cfg.pump, stim, cfg.overlap_correction)
        )
    else:
        stim = cfg.stim
    return cfg, stim, inputs


def _exp_provenance(args, cfg, **extra):
    return _base_provenance(args, config=cfg.to_dict(), **extra)


def cmd_flux(args):
    cfg, stim, inputs = _experiment(args)
    res = integrate_flux(inputs, n_lobes=cfg.n_lobes)
    body = {
        "photons_per_pulse_mode2": res.value,
        "photons_per_pulse_mode3": res.value,
        "yield23": 2 * res.value,
        "truncation_error_estimate": res.error_estimate,
        "window_rad_s": list(res.window),
        "physical_window": res.physical_window,
        "n_intervals": res.n_intervals,
        "I_p0_W_m2": inputs.I_p0,
        "I_10_W_m2": inputs.I_10,
    }
    emit_json(args, body, _exp_provenance(args, cfg, stim_energy_J=stim.energy))


def cmd_flux_spectrum(args):
    cfg, stim, inputs = _experiment(args)
    spec = flux_spectrum(inputs, n_lobes=args.lobes)
    lam = wavelength_of(spec.omega) * 1e9
    rows = zip(spec.omega.tolist(), lam.tolist(), spec.density.tolist(),
               [str(r) for r in spec.regime])
    header = ["omega_rad_s", "lambda_nm", "density_photons_per_pulse_per_hz", "regime"]
    prov = _exp_provenance(args, cfg, stim_energy_J=stim.energy, lobes=args.lobes)
    emit_csv(args, header, rows, prov)


def _energies(args, cfg):
    if args.energies_uj:
        return [float(e) * 1e-6 for e in args.energies_uj.split(",")]
    if not cfg.stim_energies:
        raise ValidationError("no stimulation energies in the config; pass --energies-uj")
    return list(cfg.stim_energies)


def cmd_yield_sweep(args):
    cfg = _config(args)
    energies = _energies(args, cfg)
    sweep = predict_yield_sweep(
        cfg.pump, cfg.stim, energies, cfg.template(), cfg.overlap_correction, cfg.n_lobes
    )
    rows = [(e, y, "") for e, y in sweep.rows()]
    emit_csv(args, ["stim_energy_J", "photons_per_pulse", "sigma"], rows,
             _exp_provenance(args, cfg, stim_energies_J=energies))


def cmd_synth_sweep(args):
    cfg = _config(args)
    energies = _energies(args, cfg)
    delta = cfg.delta if args.delta is None else args.delta
    data = synthetic_sweep(cfg.pump, cfg.stim, energies, cfg.template(), delta,
                           args.noise, args.seed, cfg.overlap_correction)
    sigma = data.sigma if data.sigma is not None else [""] * len(energies)
    rows = zip(data.energies.tolist(), data.counts.tolist(),
               [s if s == "" else float(s) for s in sigma])
    prov = _exp_provenance(args, cfg, delta_true=delta, noise=args.noise, seed=args.seed)
    emit_csv(args, ["stim_energy_J", "photons_per_pulse", "sigma"], rows, prov)


def _file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def cmd_fit_delta(args):
    cfg = _config(args)
    if not Path(args.data).is_file():
        raise ValidationError(f"data file not found: {args.data}")
    data = load_measured_sweep(args.data)
    rep = fit_delta(data, cfg.pump, cfg.stim, cfg.template(),
                    overlap_correction=cfg.overlap_correction)
    prov = _exp_provenance(args, cfg, data_sha256=_file_digest(args.data))
    emit_json(args, {"fit": rep.to_dict()}, prov)


def cmd_regime_map(args):
    cfg = _config(args)
    inputs = cfg.template()
    threshold = regime_threshold(inputs)
    products = threshold * np.logspace(-args.decades, args.decades, args.samples)
    rows = regime_map(inputs, products)
    header = ["intensity_product_W2_m4", "C3_at_degeneracy_m2", "regime"]
    prov = _exp_provenance(args, cfg, threshold_W2_m4=threshold,
                           decades=args.decades, samples=args.samples)
    emit_csv(args, header, [(p, cc, str(r)) for p, cc, r in rows], prov)


def cmd_efficiency(args):
    cfg, stim, inputs = _experiment(args)
    if args.yield23 is not None:
        y23 = args.yield23
    else:
        y23 = 2 * integrate_flux(inputs, n_lobes=cfg.n_lobes).value
    rep = efficiency_report(y23, cfg.pump, stim, cfg.detection_transfer)
    emit_json(args, {"efficiency": rep.to_dict()},
              _exp_provenance(args, cfg, stim_energy_J=stim.energy))


def cmd_oracle_report(args):
    cfg = _config(args)
    inputs = cfg.template().with_(delta=args.delta, spectral_model=args.spectral_model)
    edges = lobe_edges(inputs, args.lobes)
    omega = np.linspace(edges[0], edges[-1], args.samples)
    rows = equivalence_report(omega, inputs, steps=args.steps)
    prov = _exp_provenance(args, cfg, delta=args.delta, steps=args.steps, lobes=args.lobes,
                           spectral_model=args.spectral_model)
    emit_csv(args, ["omega", "closed_form", "oracle", "rel_error"], rows, prov)


# -- parser ----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--crystal", help="crystal dispersion JSON (default: shipped KTP)")
    common.add_argument("--config", help="experiment config JSON (default: the shipped operating point)")
    common.add_argument("--out", help="output file (default: stdout)")
    common.add_argument("--seed", type=int, default=0, help="random seed (synth-sweep only)")

    p = _Parser(prog="tpgsim", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"tpgsim {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("index", parents=[common], help="principal refractive index")
    s.add_argument("--axis", required=True)
    s.add_argument("--lambda-nm", type=float, required=True)
    s.set_defaults(func=cmd_index)

    s = sub.add_parser("pm-solve", parents=[common], help="degenerate phase matching")
    s.add_argument("--lambda-p-nm", type=float, default=532.0)
    s.add_argument("--theta-deg", type=float, default=90.0)
    s.set_defaults(func=cmd_pm_solve)

    s = sub.add_parser("pm-curve", parents=[common], help="tuning curve over theta")
    s.add_argument("--lambda-p-nm", type=float, default=532.0)
    s.add_argument("--theta-min-deg", type=float, default=85.0)
    s.add_argument("--theta-max-deg", type=float, default=90.0)
    s.add_argument("--theta-samples", type=int, default=11)
    s.set_defaults(func=cmd_pm_curve)

    s = sub.add_parser("flux", parents=[common], help="photons per pulse on modes 2 and 3")
    s.add_argument("--energy-uj", type=float, help="stimulation energy override")
    s.set_defaults(func=cmd_flux)

    s = sub.add_parser("flux-spectrum", parents=[common], help="spectral density table")
    s.add_argument("--energy-uj", type=float)
    s.add_argument("--lobes", type=int, default=5)
    s.set_defaults(func=cmd_flux_spectrum)

    s = sub.add_parser("yield-sweep", parents=[common], help="yield vs stimulation energy")
    s.add_argument("--energies-uj", help="comma-separated list (default: from config)")
    s.set_defaults(func=cmd_yield_sweep)

    s = sub.add_parser("synth-sweep", parents=[common], help="synthetic measured sweep")
    s.add_argument("--energies-uj")
    s.add_argument("--delta", type=float)
    s.add_argument("--noise", type=float, default=0.01, help="relative noise level")
    s.set_defaults(func=cmd_synth_sweep)

    s = sub.add_parser("fit-delta", parents=[common], help="fit delta to a measured sweep")
    s.add_argument("--data", required=True, help="CSV stim_energy_J,photons_per_pulse[,sigma]")
    s.set_defaults(func=cmd_fit_delta)

    s = sub.add_parser("regime-map", parents=[common], help="regime vs intensity product")
    s.add_argument("--decades", type=float, default=2.0)
    s.add_argument("--samples", type=int, default=41)
    s.set_defaults(func=cmd_regime_map)

    s = sub.add_parser("efficiency", parents=[common], help="triplet counts and efficiencies")
    s.add_argument("--energy-uj", type=float)
    s.add_argument("--yield23", type=float, help="use this yield instead of the model")
    s.set_defaults(func=cmd_efficiency)

    s = sub.add_parser("oracle-report", parents=[common], help="closed form vs ODE oracle")
    s.add_argument("--delta", type=float, default=1.0)
    s.add_argument("--spectral-model", choices=["dispersion", "linear"], default="dispersion")
    s.add_argument("--samples", type=int, default=21)
    s.add_argument("--steps", type=int, default=10_000)
    s.add_argument("--lobes", type=int, default=2)
    s.set_defaults(func=cmd_oracle_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except DomainError as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except NoRoot as exc:
        print(f"no solution: {exc}", file=sys.stderr)
        return EXIT_NO_ROOT
    except NonConvergence as exc:
        print(f"did not converge: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except TPGError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
