"""Photon-flux model of mono-stimulated triple-photon generation.

Modes 2 and 3 grow from vacuum under an undepleted pump (p) and an
undepleted stimulation (1).  For each mode-2 frequency ``omega`` the
spectral density after a length ``Z`` is

    n2(omega, Z) = 2*pi * G(omega) * Z^2 * S(C(omega) * Z^2)
    G = I_1 * I_p * f3(omega) * chi3^2
    C = 4*pi^2 * G - dk_eff(omega)^2 / 4

with ``S(u) = sin^2(sqrt(-u))/(-u)`` for u < 0 (weak coupling),
``sinh^2(sqrt(u))/u`` for u > 0 (strong coupling) and 1 at u = 0.

Two spectral models are supported.  ``"dispersion"`` evaluates f3 and the
mismatch from the crystal's Sellmeier data at every frequency.  ``"linear"``
uses the straight-line mismatch ``a + b*omega`` and freezes f3 at the
degenerate frequency; it is the model behind the closed-form yield and does
not need the integration window to stay inside the dispersion data.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.constants import c, epsilon_0
from scipy.optimize import brentq

from . import units
from .dispersion import CrystalDispersion, ktp, principal_index
from .errors import (
    DimensionError,
    DomainError,
    NonPositiveFrequency,
    RegimeError,
    ValidationError,
    WindowCollapse,
)
from .phase_matching import (
    MismatchLinearization,
    ProcessSpec,
    delta_k_spectral,
    wavelength_of,
)

DEFAULT_DELTA = 2e-7
DEFAULT_N_LOBES = 50
DEFAULT_POINTS_PER_LOBE = 16
# |C| Z^2 below this uses the series of S(u); sqrt of it is ~1e-4, where the
# closed forms still carry ~1e-8 relative accuracy.
SERIES_BAND = 1e-8
F3_PREFACTOR = 1.0 / (8 * math.pi * c**2 * epsilon_0) ** 2
MILLER_AXES = ("y", "z", "z", "y")


class Regime(str, enum.Enum):
    WEAK = "Weak"
    STRONG = "Strong"
    BOUNDARY = "Boundary"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class CouplingInputs:
    I_p0: float  # W/m^2
    I_10: float  # W/m^2
    chi3: float  # m^2/V^2
    delta: float
    L: float  # m
    anchor: ProcessSpec = field(repr=False)
    linearization: Optional[MismatchLinearization] = None
    spectral_model: str = "dispersion"

    def __post_init__(self):
        conv = {
            "I_p0": units.INTENSITY,
            "I_10": units.INTENSITY,
            "chi3": units.CHI3,
            "delta": units.DIMENSIONLESS,
            "L": units.LENGTH,
        }
        for name, dim in conv.items():
            object.__setattr__(self, name, float(units.as_si(getattr(self, name), dim, name)))
        if self.I_p0 < 0 or self.I_10 < 0:
            raise ValidationError("intensities must be non-negative")
        if not 0 < self.delta <= 1:
            raise ValidationError(f"delta = {self.delta!r} not in (0, 1]")
        if not self.L > 0:
            raise ValidationError("crystal length must be positive")
        if self.spectral_model not in ("dispersion", "linear"):
            raise ValidationError(f"unknown spectral model {self.spectral_model!r}")
        if self.spectral_model == "linear" and self.linearization is None:
            raise ValidationError("the linear spectral model needs a linearization")

    def with_(self, **changes) -> "CouplingInputs":
        return replace(self, **changes)


# -- Miller's rule ---------------------------------------------------------

def miller_chi3(
    chi_ref,
    ref_wavelengths: Sequence[float],
    target_wavelengths: Sequence[float],
    crystal: Optional[CrystalDispersion] = None,
    axes: Sequence[str] = MILLER_AXES,
) -> float:
    """Transport chi3 between processes with Miller's rule.

    Both wavelength lists are ordered (p, 1, 2, 3); ``axes`` gives the
    principal axis of each wave, (y, z, z, y) for chi3_yzzy.
    """
    crystal = crystal or ktp()
    chi_ref = units.as_si(chi_ref, units.CHI3, "chi_ref")
    if len(ref_wavelengths) != 4 or len(target_wavelengths) != 4 or len(axes) != 4:
        raise ValidationError("Miller's rule needs four waves for each process")
    ratio = 1.0
    for ax, lt, lr in zip(axes, target_wavelengths, ref_wavelengths):
        nt = float(principal_index(crystal, ax, units.as_si(lt, units.LENGTH)))
        nr = float(principal_index(crystal, ax, units.as_si(lr, units.LENGTH)))
        ratio *= (nt * nt - 1.0) / (nr * nr - 1.0)
    return chi_ref * ratio


# -- coupling constants ----------------------------------------------------

def coupling_f3(omega, anchor: ProcessSpec):
    """f3(omega) = omega*(omega_p - omega_1 - omega) / [(8 pi c^2 eps0)^2 * n1 n2 n3 np].

    Indices follow the anchor's polarization assignment (n_z for modes 1 and 3,
    n_y for the pump and mode 2 on the x-axis).
    """
    omega = np.asarray(units.as_si(omega, units.ANGULAR_FREQUENCY, "omega"), dtype=float)
    wp, w1, _, _ = anchor.omegas
    w3 = wp - w1 - omega
    if np.any(omega <= 0) or np.any(w3 <= 0):
        raise NonPositiveFrequency("mode 2 or mode 3 frequency is not positive")
    n_p = float(anchor.index(0, anchor.lambda_p))
    n_1 = float(anchor.index(1, anchor.lambda_1))
    n_2 = anchor.index(2, wavelength_of(omega))
    n_3 = anchor.index(3, wavelength_of(w3))
    return F3_PREFACTOR * omega * w3 / (n_1 * n_2 * n_3 * n_p)


@lru_cache(maxsize=None)
def gain_term_dimension() -> units.Dim:
    """Dimension of 4 pi^2 I_1 I_p f3 chi3^2, worked out with Quantities."""
    omega = 1.0 / units.s
    f3 = omega * omega / (8 * math.pi * units.c**2 * units.epsilon_0) ** 2
    intensity = units.W / units.m**2
    chi3 = units.m**2 / units.V**2
    return (4 * math.pi**2 * intensity * intensity * f3 * chi3**2).dim


def _audit_units():
    dim = gain_term_dimension()
    if dim != units.INV_AREA:
        raise DimensionError(f"coupling gain term has dimension {dim}, expected m^-2")


def _f3(omega, inputs: CouplingInputs):
    if inputs.spectral_model == "linear":
        f0 = float(coupling_f3(inputs.anchor.omega_degenerate, inputs.anchor))
        return np.full(np.shape(omega), f0)
    return coupling_f3(omega, inputs.anchor)


def delta_k(omega, inputs: CouplingInputs):
    """Collinear mismatch at mode-2 frequency ``omega`` (before delta scaling)."""
    if inputs.spectral_model == "linear":
        return inputs.linearization(omega)
    return delta_k_spectral(omega, inputs.anchor)


def delta_k_eff(omega, inputs: CouplingInputs):
    return inputs.delta * delta_k(omega, inputs)


def gain_term(omega, inputs: CouplingInputs):
    """4 pi^2 I_1 I_p f3 chi3^2, in m^-2."""
    _audit_units()
    return 4 * math.pi**2 * inputs.I_10 * inputs.I_p0 * _f3(omega, inputs) * inputs.chi3**2


def coupling_C3(omega, inputs: CouplingInputs):
    """C3(omega) in m^-2; negative means weak coupling."""
    omega = units.as_si(omega, units.ANGULAR_FREQUENCY, "omega")
    return gain_term(omega, inputs) - delta_k_eff(omega, inputs) ** 2 / 4


def classify_regime(C, boundary_band=None):
    """Weak if C < -band, Strong if C > band, Boundary otherwise.

    Works elementwise on arrays; the default band is 1e-6 of max |C|.
    """
    arr = np.asarray(units.as_si(C, units.INV_AREA, "C"), dtype=float)
    if boundary_band is None:
        boundary_band = 1e-6 * float(np.max(np.abs(arr))) if arr.size else 0.0
    band = float(units.as_si(boundary_band, units.INV_AREA, "boundary_band"))
    if band < 0:
        raise ValidationError("boundary band must be non-negative")
    out = np.where(arr < -band, Regime.WEAK, np.where(arr > band, Regime.STRONG, Regime.BOUNDARY))
    if out.ndim == 0:
        return Regime(out.item())
    return out


# -- propagation kernel ----------------------------------------------------

def sin2_branch(C, Z):
    """sin^2(sqrt(|C|) Z) / |C| (weak coupling)."""
    C = np.abs(np.asarray(C, dtype=float))
    return np.sin(np.sqrt(C) * Z) ** 2 / C


def sinh2_branch(C, Z):
    """sinh^2(sqrt(C) Z) / C (strong coupling)."""
    C = np.asarray(C, dtype=float)
    with np.errstate(over="ignore"):
        return np.sinh(np.sqrt(C) * Z) ** 2 / C


def propagation_factor(C, Z):
    """Z^2 * S(C Z^2): the length dependence shared by both regimes."""
    C = np.asarray(C, dtype=float)
    u = C * Z * Z
    small = np.abs(u) < SERIES_BAND
    safe = np.where(small, -1.0, u)
    with np.errstate(over="ignore", invalid="ignore"):
        r = np.sqrt(np.abs(safe))
        s_weak = (np.sin(r) / r) ** 2
        s_strong = (np.sinh(r) / r) ** 2
    s = np.where(safe < 0, s_weak, s_strong)
    s = np.where(small, 1.0 + u / 3.0 + 2.0 * u * u / 45.0, s)
    return Z * Z * s


def flux_density(omega, inputs: CouplingInputs):
    """Mode-2 photon-flux spectral density n2(omega, L), photons/pulse/Hz."""
    omega = np.asarray(units.as_si(omega, units.ANGULAR_FREQUENCY, "omega"), dtype=float)
    gain = gain_term(omega, inputs)
    C = gain - delta_k_eff(omega, inputs) ** 2 / 4
    # 2 pi G = gain / (2 pi)
    return gain / (2 * math.pi) * propagation_factor(C, inputs.L)


def flux_density_mode3(omega, inputs: CouplingInputs):
    """n3(omega) = n2(omega_p - omega_1 - omega)."""
    wp, w1, _, _ = inputs.anchor.omegas
    omega = np.asarray(units.as_si(omega, units.ANGULAR_FREQUENCY, "omega"), dtype=float)
    return flux_density(wp - w1 - omega, inputs)


# -- spectral window -------------------------------------------------------

def dispersion_range(anchor: ProcessSpec) -> Tuple[float, float]:
    """Mode-2 frequencies for which both modes 2 and 3 lie in the data window."""
    lo, hi = anchor.crystal.window
    w_min, w_max = 2 * math.pi * c / hi, 2 * math.pi * c / lo
    wp, w1, _, _ = anchor.omegas
    rest = wp - w1
    a, b = max(w_min, rest - w_max), min(w_max, rest - w_min)
    if not a < b:
        raise WindowCollapse("modes 2 and 3 cannot both lie inside the dispersion window")
    # stay a hair inside so roundoff never trips the window guard
    pad = 1e-12 * (b - a)
    return a + pad, b - pad


def mismatch_zero(inputs: CouplingInputs) -> float:
    """Mode-2 frequency where the mismatch vanishes."""
    if inputs.spectral_model == "linear":
        return inputs.linearization.omega_zero
    lo, hi = dispersion_range(inputs.anchor)
    grid = np.linspace(lo, hi, 2049)
    vals = delta_k_spectral(grid, inputs.anchor)
    idx = np.nonzero(np.sign(vals[:-1]) != np.sign(vals[1:]))[0]
    if idx.size == 0:
        raise WindowCollapse("the mismatch does not vanish inside the dispersion window")
    w0 = inputs.anchor.omega_degenerate
    i = idx[np.argmin(np.abs(grid[idx] - w0))]
    f = lambda w: float(delta_k_spectral(w, inputs.anchor))
    return brentq(f, grid[i], grid[i + 1], xtol=1e-6, rtol=4 * np.finfo(float).eps)


def lobe_edges(inputs: CouplingInputs, n_lobes: int = DEFAULT_N_LOBES) -> np.ndarray:
    """Frequencies where dk_eff * L = 2 pi k, k = -n_lobes .. n_lobes (ascending)."""
    if n_lobes < 2:
        raise ValidationError("need at least two lobes per side")
    k = np.arange(-n_lobes, n_lobes + 1)
    targets = 2 * math.pi * k / (inputs.delta * inputs.L)  # values of dk
    if inputs.spectral_model == "linear":
        lin = inputs.linearization
        return np.sort((targets - lin.a) / lin.b)

    lo, hi = dispersion_range(inputs.anchor)
    grid = np.linspace(lo, hi, 4097)
    vals = delta_k_spectral(grid, inputs.anchor)
    steps = np.diff(vals)
    if not (np.all(steps > 0) or np.all(steps < 0)):
        raise DomainError("mismatch is not monotone over the dispersion window")
    if vals[0] > vals[-1]:
        grid, vals = grid[::-1], vals[::-1]
    if targets[0] < vals[0] or targets[-1] > vals[-1]:
        raise WindowCollapse(
            f"{n_lobes} lobes need |dk| up to {targets[-1]:.3g} rad/m, but the "
            f"dispersion data only reach [{vals[0]:.3g}, {vals[-1]:.3g}] rad/m "
            f"(delta = {inputs.delta:.3g}, L = {inputs.L:.3g} m)"
        )
    edges = []
    f = lambda w, t: float(delta_k_spectral(w, inputs.anchor)) - t
    for t in targets:
        j = int(np.searchsorted(vals, t))
        j = min(max(j, 1), len(grid) - 1)
        edges.append(brentq(f, grid[j - 1], grid[j], args=(t,), xtol=1e-9, rtol=1e-15))
    return np.sort(np.array(edges))


def window_is_physical(inputs: CouplingInputs, edges) -> bool:
    try:
        lo, hi = dispersion_range(inputs.anchor)
    except WindowCollapse:
        return False
    return bool(edges[0] >= lo and edges[-1] <= hi)


# -- integrated yield ------------------------------------------------------

@dataclass(frozen=True)
class FluxIntegral:
    value: float  # photons per pulse on one mode
    error_estimate: float  # truncation beyond the last lobe
    window: Tuple[float, float]
    n_lobes: int
    points_per_lobe: int
    n_intervals: int
    spectral_model: str
    physical_window: bool


@lru_cache(maxsize=16)
def _gauss(m: int):
    x, w = leggauss(m)
    return x, w


def _gl_batch(func, lo, hi, m):
    x, w = _gauss(m)
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    pts = mid[:, None] + half[:, None] * x[None, :]
    vals = func(pts.ravel()).reshape(pts.shape)
    return half * (vals @ w)


def _adaptive(func, edges, m, rtol, max_depth=12):
    """Gauss-Legendre on each interval, bisecting until m and 2m nodes agree."""
    lo, hi = edges[:-1].copy(), edges[1:].copy()
    lobe = np.arange(len(lo))
    coarse = _gl_batch(func, lo, hi, m)
    fine = _gl_batch(func, lo, hi, 2 * m)
    scale = abs(fine.sum()) / len(lo)
    done = []
    for _ in range(max_depth):
        err = np.abs(fine - coarse)
        ok = (err <= rtol * np.abs(fine)) | (err <= rtol * scale)
        done.extend(zip(lo[ok], lobe[ok], fine[ok]))
        if ok.all():
            break
        lo, hi, lobe = lo[~ok], hi[~ok], lobe[~ok]
        mid = 0.5 * (lo + hi)
        lo, hi = np.concatenate([lo, mid]), np.concatenate([mid, hi])
        lobe = np.concatenate([lobe, lobe])
        coarse = _gl_batch(func, lo, hi, m)
        fine = _gl_batch(func, lo, hi, 2 * m)
    else:
        done.extend(zip(lo, lobe, fine))
    done.sort(key=lambda t: t[0])
    per_lobe = np.zeros(len(edges) - 1)
    for _, j, v in done:
        per_lobe[j] += v
    return math.fsum(v for _, _, v in done), per_lobe, len(done)


def _tail_estimate(per_lobe: np.ndarray, n_lobes: int) -> float:
    """Extrapolate the lobes beyond the window from lobes N-1 and N."""
    # per_lobe runs from the outermost negative lobe to the outermost positive
    sym = per_lobe[:n_lobes][::-1] + per_lobe[n_lobes:]
    c_prev, c_last = sym[n_lobes - 2], sym[n_lobes - 1]
    if c_last <= 0 or c_prev <= 0:
        return 0.0
    p = math.log(c_prev / c_last) / math.log(n_lobes / (n_lobes - 1))
    p = max(p, 1.5)
    amp = c_last * n_lobes**p
    return amp * (n_lobes + 0.5) ** (1 - p) / (p - 1)


def integrate_flux(
    inputs: CouplingInputs,
    n_lobes: int = DEFAULT_N_LOBES,
    points_per_lobe: int = DEFAULT_POINTS_PER_LOBE,
    rtol: float = 1e-9,
) -> FluxIntegral:
    """Photons per pulse on mode 2 (equal to mode 3), integrated over frequency.

    The window covers ``|dk_eff * L| <= 2 pi n_lobes``; each sinc lobe is
    integrated with adaptive Gauss-Legendre quadrature.
    """
    if points_per_lobe < DEFAULT_POINTS_PER_LOBE:
        raise ValidationError(f"need at least {DEFAULT_POINTS_PER_LOBE} points per lobe")
    edges = lobe_edges(inputs, n_lobes)
    if inputs.I_p0 == 0 or inputs.I_10 == 0 or inputs.chi3 == 0:
        value, per_lobe, n_int = 0.0, np.zeros(len(edges) - 1), len(edges) - 1
    else:
        func = lambda w: flux_density(w, inputs)
        value, per_lobe, n_int = _adaptive(func, edges, points_per_lobe, rtol)
    return FluxIntegral(
        value=value,
        error_estimate=_tail_estimate(per_lobe, n_lobes),
        window=(float(edges[0]), float(edges[-1])),
        n_lobes=n_lobes,
        points_per_lobe=points_per_lobe,
        n_intervals=n_int,
        spectral_model=inputs.spectral_model,
        physical_window=window_is_physical(inputs, edges),
    )


def analytic_flux(inputs: CouplingInputs, boundary_band=None) -> float:
    """Closed-form weak-coupling yield 4 pi^2 f3 I_p I_1 chi3^2 L / (delta |b|).

    f3 is taken at the degenerate frequency.  Raises RegimeError when the
    straight-line model has a Strong sample anywhere in its window; the default
    band is 1/L^2, i.e. Strong means sqrt(C)*L > 1.
    """
    lin = inputs.linearization
    if lin is None:
        raise ValidationError("analytic_flux needs a mismatch linearization")
    band = 1.0 / inputs.L**2 if boundary_band is None else boundary_band
    linear = inputs.with_(spectral_model="linear")
    samples = np.append(lobe_edges(linear, DEFAULT_N_LOBES), lin.omega_zero)
    if np.any(classify_regime(coupling_C3(samples, linear), band) == Regime.STRONG):
        raise RegimeError("strong coupling inside the window; the closed form does not apply")
    f3 = float(coupling_f3(inputs.anchor.omega_degenerate, inputs.anchor))
    return (
        4 * math.pi**2 * f3 * inputs.I_p0 * inputs.I_10 * inputs.chi3**2
        * inputs.L / (inputs.delta * abs(lin.b))
    )


# -- spectra and regime maps -----------------------------------------------

@dataclass(frozen=True)
class FluxSpectrum:
    omega: np.ndarray
    density: np.ndarray
    regime: np.ndarray
    window: Tuple[float, float]
    n_lobes: int
    points_per_lobe: int

    def mirror(self, inputs: CouplingInputs) -> "FluxSpectrum":
        """The same samples seen as mode 3 at omega_p - omega_1 - omega."""
        wp, w1, _, _ = inputs.anchor.omegas
        return replace(self, omega=(wp - w1 - self.omega)[::-1],
                       density=self.density[::-1], regime=self.regime[::-1])


def flux_spectrum(
    inputs: CouplingInputs,
    n_lobes: int = 5,
    points_per_lobe: int = DEFAULT_POINTS_PER_LOBE,
    boundary_band=None,
) -> FluxSpectrum:
    edges = lobe_edges(inputs, n_lobes)
    omega = np.linspace(edges[0], edges[-1], 2 * n_lobes * points_per_lobe + 1)
    density = flux_density(omega, inputs)
    regime = classify_regime(coupling_C3(omega, inputs), boundary_band)
    return FluxSpectrum(omega, density, np.atleast_1d(regime),
                        (float(edges[0]), float(edges[-1])), n_lobes, points_per_lobe)


def regime_threshold(inputs: CouplingInputs) -> float:
    """Intensity product I_p*I_1 at which C3 vanishes at degeneracy."""
    w = inputs.anchor.omega_degenerate
    dk = float(delta_k_eff(w, inputs))
    f3 = float(_f3(w, inputs))
    return dk * dk / (16 * math.pi**2 * f3 * inputs.chi3**2)


def regime_map(inputs: CouplingInputs, products, boundary_band=None):
    """Rows ``(I_p*I_1, C3 at degeneracy, regime)`` for each intensity product."""
    products = np.asarray(products, dtype=float)
    w = inputs.anchor.omega_degenerate
    f3 = float(_f3(w, inputs))
    dk = float(delta_k_eff(w, inputs))
    C = 4 * math.pi**2 * products * f3 * inputs.chi3**2 - dk * dk / 4
    regimes = np.atleast_1d(classify_regime(C, boundary_band))
    return list(zip(products.tolist(), C.tolist(), regimes.tolist()))


# -- polarization ----------------------------------------------------------

def polarization_yield(alpha, beta):
    """cos^2(alpha) cos^2(beta): pump angle from y, stimulation angle from z (radians)."""
    alpha = np.asarray(units.as_si(alpha, units.DIMENSIONLESS, "alpha"), dtype=float)
    beta = np.asarray(units.as_si(beta, units.DIMENSIONLESS, "beta"), dtype=float)
    eps = 1e-12
    if np.any((alpha < -eps) | (alpha > math.pi + eps) | (beta < -eps) | (beta > math.pi + eps)):
        raise DomainError("polarization angles must lie in [0, 180] deg")
    out = np.cos(alpha) ** 2 * np.cos(beta) ** 2
    return float(out) if out.ndim == 0 else out
