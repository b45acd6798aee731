"""Collinear phase mismatch and degenerate phase matching in the xz-plane.

Polarization convention: the pump and mode 2 travel on the y-polarized
eigenmode, modes 1 and 3 on the in-plane eigenmode.  At theta = 90 deg (the
x-axis) these reduce to n_y and n_z respectively.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy.constants import c
from scipy.optimize import brentq

from . import units
from .dispersion import CrystalDispersion, ktp, mode_index
from .errors import EnergyViolation, NoRoot, NonPositiveFrequency, ValidationError

DEFAULT_POLARIZATIONS = ("y", "inplane", "y", "inplane")
ENERGY_RTOL = 1e-12
PM_TOLERANCE = 1.0  # rad/m
PM_BRACKET = (1.2e-6, 2.2e-6)
LINEARIZE_HALF_WIDTH = 2 * math.pi * 10e12  # rad/s
LINEARIZE_POINTS = 201


def omega_of(wavelength):
    return 2 * math.pi * c / np.asarray(wavelength, dtype=float)


def wavelength_of(omega):
    return 2 * math.pi * c / np.asarray(omega, dtype=float)


def degenerate_wavelength(lambda_p: float, lambda_1: float) -> float:
    """lambda_2 = lambda_3 fixed by energy conservation."""
    return 2.0 / (1.0 / lambda_p - 1.0 / lambda_1)


@dataclass(frozen=True)
class ProcessSpec:
    """The four interacting waves ``p -> 1 + 2 + 3`` travelling collinearly."""

    lambda_p: float
    lambda_1: float
    lambda_2: float
    lambda_3: float
    theta: float = math.pi / 2
    polarizations: Tuple[str, str, str, str] = DEFAULT_POLARIZATIONS
    crystal: CrystalDispersion = field(default_factory=ktp, repr=False)

    def __post_init__(self):
        for name in ("lambda_p", "lambda_1", "lambda_2", "lambda_3"):
            object.__setattr__(
                self, name, float(units.as_si(getattr(self, name), units.LENGTH, name))
            )
            if not getattr(self, name) > 0:
                raise ValidationError(f"{name} must be positive")
        object.__setattr__(
            self, "theta", float(units.as_si(self.theta, units.DIMENSIONLESS, "theta"))
        )
        if len(self.polarizations) != 4 or any(
            p not in ("y", "inplane") for p in self.polarizations
        ):
            raise ValidationError(f"bad polarization assignment {self.polarizations!r}")
        self.crystal.check_window(
            [self.lambda_p, self.lambda_1, self.lambda_2, self.lambda_3]
        )

    @classmethod
    def degenerate(cls, lambda_p, lambda_1, theta=math.pi / 2, crystal=None, **kw):
        lambda_p = units.as_si(lambda_p, units.LENGTH, "lambda_p")
        lambda_1 = units.as_si(lambda_1, units.LENGTH, "lambda_1")
        l23 = degenerate_wavelength(lambda_p, lambda_1)
        return cls(lambda_p, lambda_1, l23, l23, theta, crystal=crystal or ktp(), **kw)

    @property
    def omegas(self):
        return tuple(
            float(omega_of(lam))
            for lam in (self.lambda_p, self.lambda_1, self.lambda_2, self.lambda_3)
        )

    @property
    def omega_degenerate(self) -> float:
        return float(omega_of(self.lambda_2))

    def energy_residual(self) -> float:
        """|1/lp - 1/l1 - 1/l2 - 1/l3| relative to 1/lp."""
        inv = 1.0 / self.lambda_p
        resid = inv - 1.0 / self.lambda_1 - 1.0 / self.lambda_2 - 1.0 / self.lambda_3
        return abs(resid) / inv

    def swapped_23(self) -> "ProcessSpec":
        """Relabel modes 2 and 3, polarizations included."""
        p = self.polarizations
        return replace(
            self,
            lambda_2=self.lambda_3,
            lambda_3=self.lambda_2,
            polarizations=(p[0], p[1], p[3], p[2]),
        )

    def index(self, wave: int, wavelength):
        return mode_index(self.crystal, self.theta, wavelength, self.polarizations[wave])


def delta_k_collinear(spec: ProcessSpec) -> float:
    """Scalar mismatch k_p - k_1 - k_2 - k_3 in rad/m."""
    if spec.energy_residual() > ENERGY_RTOL:
        raise EnergyViolation(
            f"energy not conserved: relative residual {spec.energy_residual():.3e}"
        )
    lams = (spec.lambda_p, spec.lambda_1, spec.lambda_2, spec.lambda_3)
    k = [2 * math.pi * float(spec.index(i, lam)) / lam for i, lam in enumerate(lams)]
    return k[0] - k[1] - k[2] - k[3]


def delta_k_spectral(omega, anchor: ProcessSpec):
    """Mismatch with pump and stimulation at their carriers and mode 2 at ``omega``.

    Mode 3 takes up the remaining frequency ``omega_p - omega_1 - omega``.
    Vectorized over ``omega``.
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
    return (wp * n_p - w1 * n_1 - omega * n_2 - w3 * n_3) / c


class PMRoot(NamedTuple):
    lambda_1: float
    lambda_23: float
    delta_k: float


def _degenerate_mismatch(lambda_1, lambda_p, theta, crystal, polarizations):
    l23 = degenerate_wavelength(lambda_p, lambda_1)
    spec = ProcessSpec(lambda_p, lambda_1, l23, l23, theta, polarizations, crystal)
    return delta_k_collinear(spec)


def solve_degenerate_pm(
    lambda_p,
    theta,
    crystal: Optional[CrystalDispersion] = None,
    bracket: Tuple[float, float] = PM_BRACKET,
    scan_points: int = 401,
    polarizations=DEFAULT_POLARIZATIONS,
) -> List[PMRoot]:
    """All degenerate (lambda_2 = lambda_3) phase-matching solutions in the bracket.

    The bracket on lambda_1 is scanned for sign changes and each one is
    refined with Brent's method.  Roots come back sorted by lambda_1.
    """
    crystal = crystal or ktp()
    lambda_p = float(units.as_si(lambda_p, units.LENGTH, "lambda_p"))
    theta = float(units.as_si(theta, units.DIMENSIONLESS, "theta"))
    crystal.check_window([lambda_p, *bracket])
    args = (lambda_p, theta, crystal, polarizations)

    grid = np.linspace(bracket[0], bracket[1], scan_points)
    vals = np.array([_degenerate_mismatch(x, *args) for x in grid])
    roots = []
    for i in range(scan_points - 1):
        if vals[i] == 0.0:
            x = grid[i]
        elif np.sign(vals[i]) != np.sign(vals[i + 1]):
            x = brentq(
                _degenerate_mismatch, grid[i], grid[i + 1], args=args,
                xtol=1e-20, rtol=4 * np.finfo(float).eps, maxiter=200,
            )
        else:
            continue
        dk = _degenerate_mismatch(x, *args)
        if abs(dk) > PM_TOLERANCE:
            # a pole or a kink, not a root
            continue
        roots.append(PMRoot(float(x), degenerate_wavelength(lambda_p, x), dk))
    if not roots:
        raise NoRoot(
            f"no phase-matching root for lambda_p = {lambda_p * 1e9:.6g} nm, "
            f"theta = {math.degrees(theta):.6g} deg in lambda_1 bracket "
            f"[{bracket[0] * 1e9:.6g}, {bracket[1] * 1e9:.6g}] nm"
        )
    return sorted(roots)


def pm_curve(lambda_p, thetas: Sequence[float], crystal=None, bracket=PM_BRACKET):
    """Tuning curve rows ``(theta_deg, lambda1_nm, lambda23_nm, residual)``.

    Angles with no root give one row of NaNs; angles with several roots give
    one row per root.
    """
    rows = []
    for theta in thetas:
        try:
            roots = solve_degenerate_pm(lambda_p, theta, crystal, bracket)
        except NoRoot:
            rows.append((math.degrees(theta), math.nan, math.nan, math.nan))
            continue
        for r in roots:
            rows.append((math.degrees(theta), r.lambda_1 * 1e9, r.lambda_23 * 1e9, r.delta_k))
    return rows


@dataclass(frozen=True)
class MismatchLinearization:
    a: float  # rad/m
    b: float  # rad/m per rad/s
    window: Tuple[float, float]
    rms_residual: float

    def __call__(self, omega):
        return self.a + self.b * np.asarray(omega, dtype=float)

    @property
    def omega_zero(self) -> float:
        """Where the fitted line crosses zero."""
        return -self.a / self.b


def fit_line(omega, values) -> Tuple[float, float, float]:
    """Least-squares ``values ~ a + b*omega``; returns (a, b, rms residual).

    The abscissa is centred and scaled to [-1, 1] before solving.
    """
    omega = np.asarray(omega, dtype=float)
    values = np.asarray(values, dtype=float)
    centre = 0.5 * (omega[0] + omega[-1])
    scale = 0.5 * abs(omega[-1] - omega[0]) or 1.0
    x = (omega - centre) / scale
    design = np.column_stack([np.ones_like(x), x])
    (a0, slope), *_ = np.linalg.lstsq(design, values, rcond=None)
    resid = values - (a0 + slope * x)
    b = slope / scale
    return a0 - b * centre, b, float(np.sqrt(np.mean(resid**2)))


def linearize(
    anchor: ProcessSpec,
    half_width: float = LINEARIZE_HALF_WIDTH,
    n_points: int = LINEARIZE_POINTS,
) -> MismatchLinearization:
    """Straight-line fit of :func:`delta_k_spectral` around degeneracy."""
    if n_points < LINEARIZE_POINTS:
        raise ValidationError(f"need at least {LINEARIZE_POINTS} samples")
    half_width = float(units.as_si(half_width, units.ANGULAR_FREQUENCY, "half_width"))
    w0 = anchor.omega_degenerate
    omega = np.linspace(w0 - half_width, w0 + half_width, n_points)
    dk = delta_k_spectral(omega, anchor)
    a, b, rms = fit_line(omega, dk)
    return MismatchLinearization(a, b, (float(omega[0]), float(omega[-1])), rms)
