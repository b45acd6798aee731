"""From laboratory parameters to model inputs, yield sweeps, fits and efficiencies."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from importlib import resources
from typing import Optional, Sequence

import numpy as np
from scipy.constants import c, h

from . import units
from .dispersion import CrystalDispersion, ktp, load_crystal_file
from .errors import ConfigError, DegenerateData, DomainError, NonConvergence, ValidationError
from .phase_matching import MismatchLinearization, ProcessSpec, linearize
from .tpg_model import CouplingInputs, integrate_flux, miller_chi3

GAUSS_TIME_FACTOR = math.sqrt(4 * math.log(2) / math.pi)
STIM_ENERGY_RANGE = (1e-9, 1e-3)

# values quoted alongside the computed ones, never forced to agree
QUOTED_ETA = 0.8e-11
QUOTED_ETA_PER_N1 = 3.1e-24


@dataclass(frozen=True)
class BeamPulseParams:
    energy: float  # J per pulse
    fwhm: float  # s
    waist_radius: float  # m, 1/e^2 intensity radius
    wavelength: float  # m
    rep_rate: float  # Hz

    def __post_init__(self):
        dims = {
            "energy": units.ENERGY,
            "fwhm": units.TIME,
            "waist_radius": units.LENGTH,
            "wavelength": units.LENGTH,
            "rep_rate": (0, -1, 0, 0),
        }
        for name, dim in dims.items():
            object.__setattr__(self, name, float(units.as_si(getattr(self, name), dim, name)))
        # zero energy is allowed: it is the natural "beam off" point of a sweep
        if self.energy < 0:
            raise ValidationError("pulse energy must be non-negative")
        for name in ("fwhm", "waist_radius", "wavelength", "rep_rate"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"{name} must be strictly positive")

    def with_energy(self, energy: float) -> "BeamPulseParams":
        return replace(self, energy=energy)


def peak_intensity(beam: BeamPulseParams) -> float:
    """Peak intensity of a pulse Gaussian in space (1/e^2 radius) and time (FWHM)."""
    return GAUSS_TIME_FACTOR * 2 * beam.energy / (math.pi * beam.waist_radius**2 * beam.fwhm)


def photon_count(energy, wavelength) -> float:
    """Photons in a pulse of ``energy`` at ``wavelength``: E*lambda/(h*c)."""
    energy = units.as_si(energy, units.ENERGY, "energy")
    wavelength = units.as_si(wavelength, units.LENGTH, "wavelength")
    if energy < 0 or wavelength <= 0:
        raise ValidationError("energy must be >= 0 and wavelength > 0")
    return energy * wavelength / (h * c)


def overlap_factor(pump: BeamPulseParams, stim: BeamPulseParams) -> float:
    """Spatial overlap of the two Gaussian intensity profiles over the pump area.

    int I_p I_1 dA / (I_p0 I_10 * pi w_p^2 / 2) = w_s^2 / (w_p^2 + w_s^2).
    """
    wp2, ws2 = pump.waist_radius**2, stim.waist_radius**2
    return ws2 / (wp2 + ws2)


# -- configuration ---------------------------------------------------------

@dataclass(frozen=True)
class ExperimentConfig:
    pump: BeamPulseParams
    stim: BeamPulseParams
    crystal: CrystalDispersion = field(repr=False)
    crystal_source: str
    lambda_p: float
    lambda_1: float
    theta: float
    length: float
    delta: float
    chi3: float
    chi3_reference: Optional[dict]
    detection_transfer: float
    spectral_model: str = "linear"
    linearization_half_width: float = 2 * math.pi * 10e12
    n_lobes: int = 50
    overlap_correction: bool = False
    stim_energies: tuple = ()

    @property
    def anchor(self) -> ProcessSpec:
        return ProcessSpec.degenerate(self.lambda_p, self.lambda_1, self.theta, self.crystal)

    def linearization(self) -> MismatchLinearization:
        return linearize(self.anchor, self.linearization_half_width)

    def template(self, delta: Optional[float] = None) -> CouplingInputs:
        """Coupling inputs at the configured pump and stimulation energies."""
        return CouplingInputs(
            I_p0=peak_intensity(self.pump),
            I_10=effective_stim_intensity(self.pump, self.stim, self.overlap_correction),
            chi3=self.chi3,
            delta=self.delta if delta is None else delta,
            L=self.length,
            anchor=self.anchor,
            linearization=self.linearization(),
            spectral_model=self.spectral_model,
        )

    def to_dict(self) -> dict:
        """Fully resolved configuration, suitable for provenance blocks."""
        return {
            "crystal": self.crystal_source,
            "crystal_name": self.crystal.name,
            "process": {
                "lambda_p_nm": self.lambda_p * 1e9,
                "lambda_1_nm": self.lambda_1 * 1e9,
                "theta_deg": math.degrees(self.theta),
            },
            "pump": _beam_doc(self.pump),
            "stim": _beam_doc(self.stim),
            "crystal_length_m": self.length,
            "delta": self.delta,
            "chi3": {"value_m2_per_V2": self.chi3, "reference": self.chi3_reference},
            "detection_transfer": self.detection_transfer,
            "spectral_model": self.spectral_model,
            "linearization_half_width_THz": self.linearization_half_width / (2 * math.pi) / 1e12,
            "n_lobes": self.n_lobes,
            "overlap_correction": self.overlap_correction,
            "stim_energies_J": list(self.stim_energies),
        }


def _beam_doc(b: BeamPulseParams) -> dict:
    return {
        "energy_J": b.energy,
        "fwhm_s": b.fwhm,
        "waist_m": b.waist_radius,
        "wavelength_m": b.wavelength,
        "rep_rate_Hz": b.rep_rate,
    }


def _beam(doc, name) -> BeamPulseParams:
    try:
        return BeamPulseParams(
            energy=doc["energy_J"],
            fwhm=doc["fwhm_s"],
            waist_radius=doc["waist_m"],
            wavelength=doc["wavelength_m"],
            rep_rate=doc["rep_rate_Hz"],
        )
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"{name}: missing or malformed field ({exc})") from exc


def shipped_config_path() -> Path:
    return Path(str(resources.files("tpgsim") / "data" / "paper.json"))


def load_experiment_config(source=None, crystal_path=None) -> ExperimentConfig:
    """Parse an experiment config (path or dict); the shipped operating point by default.

    ``crystal_path`` overrides the crystal named in the document.  A relative
    crystal path is resolved against the config file's directory; ``null``
    selects the KTP data shipped with the package.
    """
    base = Path.cwd()
    if source is None:
        source = shipped_config_path()
    if isinstance(source, (str, Path)):
        path = Path(source)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
        base = path.parent
    else:
        doc = source
    try:
        crystal_ref = crystal_path if crystal_path is not None else doc.get("crystal")
        if crystal_ref is None:
            crystal, crystal_source = ktp(), "builtin:ktp_kato2002"
        else:
            cpath = Path(crystal_ref)
            if not cpath.is_absolute() and crystal_path is None:
                cpath = base / cpath
            if not cpath.is_file():
                raise ConfigError(f"crystal file not found: {cpath}")
            crystal, crystal_source = load_crystal_file(cpath), str(crystal_ref)
        proc = doc["process"]
        chi = doc["chi3"]
        cfg = ExperimentConfig(
            pump=_beam(doc["pump"], "pump"),
            stim=_beam(doc["stim"], "stim"),
            crystal=crystal,
            crystal_source=crystal_source,
            lambda_p=float(proc["lambda_p_nm"]) * 1e-9,
            lambda_1=float(proc["lambda_1_nm"]) * 1e-9,
            theta=math.radians(float(proc.get("theta_deg", 90.0))),
            length=float(doc["crystal_length_m"]),
            delta=float(doc.get("delta", 2e-7)),
            chi3=float(chi["value_m2_per_V2"]),
            chi3_reference=chi.get("reference"),
            detection_transfer=float(doc.get("detection_transfer", 1.0)),
            spectral_model=doc.get("spectral_model", "linear"),
            linearization_half_width=2 * math.pi * 1e12
            * float(doc.get("linearization_half_width_THz", 10.0)),
            n_lobes=int(doc.get("n_lobes", 50)),
            overlap_correction=bool(doc.get("overlap_correction", False)),
            stim_energies=tuple(float(e) for e in doc.get("stim_energies_J", ())),
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ConfigError(f"malformed experiment config: {exc!r}") from exc
    if not 0 < cfg.delta <= 1:
        raise ConfigError(f"delta = {cfg.delta} not in (0, 1]")
    return cfg


def reference_chi3(cfg: ExperimentConfig) -> Optional[float]:
    """Miller's-rule transport of the configured reference chi3, if any."""
    ref = cfg.chi3_reference
    if not ref:
        return None
    target = [cfg.lambda_p, cfg.lambda_1, cfg.anchor.lambda_2, cfg.anchor.lambda_3]
    return miller_chi3(
        float(ref["value_m2_per_V2"]),
        [w * 1e-9 for w in ref["wavelengths_nm"]],
        target,
        cfg.crystal,
    )


def effective_stim_intensity(pump, stim, overlap_correction=False) -> float:
    i1 = peak_intensity(stim)
    return i1 * overlap_factor(pump, stim) if overlap_correction else i1


# -- sweeps ----------------------------------------------------------------

@dataclass(frozen=True)
class YieldSweep:
    energies: np.ndarray  # J
    yields: np.ndarray  # n2 + n3 per pulse
    integrals: tuple  # FluxIntegral per point (None where the stimulation is off)

    def rows(self):
        return list(zip(self.energies.tolist(), self.yields.tolist()))


def predict_yield_sweep(
    pump: BeamPulseParams,
    stim: BeamPulseParams,
    stim_energies: Sequence[float],
    template: CouplingInputs,
    overlap_correction: bool = False,
    n_lobes: int = 50,
) -> YieldSweep:
    """Total photons on modes 2 and 3 (= 2 n2) for each stimulation energy."""
    energies = np.asarray(
        [units.as_si(e, units.ENERGY, "stim energy") for e in stim_energies], dtype=float
    )
    lo, hi = STIM_ENERGY_RANGE
    bad = (energies != 0) & ((energies < lo) | (energies > hi))
    if np.any(bad):
        raise DomainError(f"stimulation energies must lie in [{lo:g}, {hi:g}] J")
    i_p = peak_intensity(pump)
    yields, integrals = [], []
    for e in energies:
        if e == 0:
            yields.append(0.0)
            integrals.append(None)
            continue
        i_1 = effective_stim_intensity(pump, stim.with_energy(e), overlap_correction)
        res = integrate_flux(template.with_(I_p0=i_p, I_10=i_1), n_lobes=n_lobes)
        yields.append(2.0 * res.value)
        integrals.append(res)
    return YieldSweep(energies, np.array(yields), tuple(integrals))


def linear_r_squared(x, y) -> float:
    """R^2 of an ordinary least-squares line through (x, y)."""
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    slope, icpt = np.polyfit(x, y, 1)
    ss_res = float(np.sum((y - (slope * x + icpt)) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    return 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0


# -- measured data and fitting ---------------------------------------------

@dataclass(frozen=True)
class MeasuredSweep:
    energies: np.ndarray
    counts: np.ndarray
    sigma: Optional[np.ndarray] = None

    def __post_init__(self):
        e = np.asarray(self.energies, dtype=float)
        n = np.asarray(self.counts, dtype=float)
        if e.ndim != 1 or e.shape != n.shape:
            raise ValidationError("energies and counts must be equal-length 1-D sequences")
        if np.any(np.diff(e) <= 0):
            raise ValidationError("stimulation energies must be strictly increasing")
        if np.any(n < 0):
            raise ValidationError("photon counts must be non-negative")
        object.__setattr__(self, "energies", e)
        object.__setattr__(self, "counts", n)
        if self.sigma is not None:
            s = np.asarray(self.sigma, dtype=float)
            if s.shape != e.shape or np.any(s <= 0):
                raise ValidationError("sigma must be positive, one per row")
            object.__setattr__(self, "sigma", s)


def load_measured_sweep(path) -> MeasuredSweep:
    """Read ``stim_energy_J,photons_per_pulse[,sigma]`` CSV (header required)."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].lstrip().startswith("#")]
    if not rows:
        raise ValidationError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if header[:2] != ["stim_energy_J", "photons_per_pulse"]:
        raise ValidationError(
            f"{path}: header must start with stim_energy_J,photons_per_pulse"
        )
    has_sigma = len(header) > 2 and header[2] == "sigma"
    try:
        data = [[float(v) for v in r[: 3 if has_sigma else 2]] for r in rows[1:]]
    except ValueError as exc:
        raise ValidationError(f"{path}: non-numeric value ({exc})") from exc
    arr = np.array(data, dtype=float).reshape(-1, 3 if has_sigma else 2)
    return MeasuredSweep(arr[:, 0], arr[:, 1], arr[:, 2] if has_sigma else None)


def synthetic_sweep(
    pump, stim, stim_energies, template: CouplingInputs, delta: float,
    noise: float = 0.0, seed: int = 0, overlap_correction: bool = False,
) -> MeasuredSweep:
    """Model predictions at ``delta`` with multiplicative Gaussian noise."""
    pred = predict_yield_sweep(
        pump, stim, stim_energies, template.with_(delta=delta), overlap_correction
    ).yields
    rng = np.random.default_rng(seed)
    counts = pred * (1.0 + noise * rng.standard_normal(pred.shape)) if noise else pred.copy()
    sigma = noise * pred if noise else None
    return MeasuredSweep(np.asarray(stim_energies, dtype=float), np.clip(counts, 0, None), sigma)


@dataclass(frozen=True)
class FitReport:
    delta: float
    delta_stderr: float
    residual_rms: float
    r_squared: float
    residuals: tuple
    iterations: int
    model_settings: dict

    def to_dict(self) -> dict:
        return asdict(self)


_GOLDEN = (math.sqrt(5) - 1) / 2


def fit_delta(
    data: MeasuredSweep,
    pump: BeamPulseParams,
    stim: BeamPulseParams,
    template: CouplingInputs,
    log_bounds=(-9.0, 0.0),
    tol: float = 1e-11,
    max_iter: int = 200,
    overlap_correction: bool = False,
) -> FitReport:
    """Least-squares fit of the effective-mismatch factor delta.

    Golden-section search on log10(delta), then a parabolic step through the
    final bracket.  The standard error comes from the curvature of the
    objective at the optimum.
    """
    if len(data.energies) < 3:
        raise ValidationError("need at least three data rows")
    if not np.any(data.counts > 0):
        raise DegenerateData("all measured counts are zero")
    weights = None if data.sigma is None else 1.0 / data.sigma**2

    def predict(t):
        return predict_yield_sweep(
            pump, stim, data.energies, template.with_(delta=10.0**t), overlap_correction
        ).yields

    def objective(t):
        try:
            r = predict(t) - data.counts
        except DomainError:
            return math.inf
        return float(np.sum(r * r * weights)) if weights is not None else float(np.sum(r * r))

    lo, hi = log_bounds
    x1 = hi - _GOLDEN * (hi - lo)
    x2 = lo + _GOLDEN * (hi - lo)
    f1, f2 = objective(x1), objective(x2)
    it = 0
    while hi - lo > tol:
        it += 1
        if it > max_iter:
            raise NonConvergence(f"golden-section search did not converge in {max_iter} steps")
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - _GOLDEN * (hi - lo)
            f1 = objective(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + _GOLDEN * (hi - lo)
            f2 = objective(x2)
    t_best, f_best = (x1, f1) if f1 <= f2 else (x2, f2)

    # parabola through t-h, t, t+h: refines the optimum and gives the curvature
    step = 1e-3
    fm, fp = objective(t_best - step), objective(t_best + step)
    curv = (fp - 2 * f_best + fm) / step**2
    if math.isfinite(curv) and curv > 0:
        t_par = t_best - 0.5 * step * (fp - fm) / (fp - 2 * f_best + fm)
        if abs(t_par - t_best) < step:
            f_par = objective(t_par)
            if f_par < f_best:
                t_best, f_best = t_par, f_par
    n = len(data.counts)
    if curv > 0 and math.isfinite(curv):
        scale = 1.0 if weights is not None else f_best / max(n - 1, 1)
        sigma_t = math.sqrt(2.0 * scale / curv)
    else:
        sigma_t = math.inf
    delta = 10.0**t_best
    resid = predict(t_best) - data.counts
    ss_tot = float(np.sum((data.counts - data.counts.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return FitReport(
        delta=delta,
        delta_stderr=delta * math.log(10) * sigma_t,
        residual_rms=float(np.sqrt(np.mean(resid**2))),
        r_squared=min(max(r2, 0.0), 1.0),
        residuals=tuple(resid.tolist()),
        iterations=it,
        model_settings={
            "spectral_model": template.spectral_model,
            "chi3": template.chi3,
            "L": template.L,
            "I_p0": peak_intensity(pump),
            "stim_waist_m": stim.waist_radius,
            "stim_fwhm_s": stim.fwhm,
            "weighted": weights is not None,
            "log10_delta_bounds": list(log_bounds),
            "overlap_correction": overlap_correction,
        },
    )


# -- efficiencies ----------------------------------------------------------

@dataclass(frozen=True)
class EfficiencyReport:
    yield23: float
    n_triplets: float
    triplets_per_second: float
    n_p: float
    n_1: float
    eta: float
    eta_per_n1: float
    detection_transfer: float
    detected_per_pulse: float
    quoted_eta: float = QUOTED_ETA
    quoted_eta_per_n1: float = QUOTED_ETA_PER_N1

    def to_dict(self) -> dict:
        return asdict(self)


def efficiency_report(
    yield23: float, pump: BeamPulseParams, stim: BeamPulseParams, detection_transfer: float
) -> EfficiencyReport:
    """Triplet counts and quantum efficiencies from a mode-2+3 yield per pulse."""
    if yield23 < 0:
        raise ValidationError("yield must be non-negative")
    n_trip = yield23 / 2.0
    n_p = photon_count(pump.energy, pump.wavelength)
    n_1 = photon_count(stim.energy, stim.wavelength)
    eta = n_trip / n_p if n_p > 0 else 0.0
    return EfficiencyReport(
        yield23=yield23,
        n_triplets=n_trip,
        triplets_per_second=n_trip * pump.rep_rate,
        n_p=n_p,
        n_1=n_1,
        eta=eta,
        eta_per_n1=eta / n_1 if n_1 > 0 else 0.0,
        detection_transfer=detection_transfer,
        detected_per_pulse=yield23 * detection_transfer,
    )
