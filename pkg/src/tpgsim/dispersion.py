"""Principal and eigen refractive indices of a biaxial crystal.

Each principal axis carries a generalized Sellmeier form

    n^2(lam) = c0 + sum_k p_k / (lam^2 - q_k) + r * lam^2      (lam in um)

Evaluation is restricted to the crystal's validity window; nothing is
extrapolated.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Mapping, Tuple

import numpy as np

from . import units
from .errors import (
    AngleOutOfRange,
    EmptyWindow,
    InvalidAxis,
    MalformedCoefficient,
    MissingAxis,
    OrderingViolation,
    OutOfWindow,
    ValidationError,
)

AXES = ("x", "y", "z")
ORDERING_SAMPLES = 201


@dataclass(frozen=True)
class SellmeierAxis:
    c0: float
    poles: Tuple[Tuple[float, float], ...]
    r: float = 0.0

    def n_squared(self, lam_um):
        l2 = np.square(lam_um)
        out = self.c0 + self.r * l2
        for p, q in self.poles:
            out = out + p / (l2 - q)
        return out


@dataclass(frozen=True)
class CrystalDispersion:
    name: str
    x: SellmeierAxis
    y: SellmeierAxis
    z: SellmeierAxis
    window: Tuple[float, float]  # metres
    provenance: str

    def axis(self, name: str) -> SellmeierAxis:
        if name not in AXES:
            raise InvalidAxis(f"unknown axis {name!r}; expected one of x, y, z")
        return getattr(self, name)

    def check_window(self, wavelength):
        lo, hi = self.window
        lam = np.asarray(wavelength, dtype=float)
        bad = ~((lam >= lo) & (lam <= hi))
        if np.any(bad):
            raise OutOfWindow(float(lam[bad].flat[0]), self.window)


def _number(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise MalformedCoefficient(f"{where}: expected a number, got {value!r}")
    if not math.isfinite(value):
        raise MalformedCoefficient(f"{where}: non-finite value {value!r}")
    return float(value)


def _parse_axis(name: str, block) -> SellmeierAxis:
    if not isinstance(block, Mapping):
        raise MalformedCoefficient(f"axis {name}: expected an object")
    if "c0" not in block:
        raise MalformedCoefficient(f"axis {name}: missing c0")
    poles = block.get("poles", [])
    if not isinstance(poles, list):
        raise MalformedCoefficient(f"axis {name}: poles must be a list")
    parsed = []
    for i, pole in enumerate(poles):
        if not isinstance(pole, Mapping) or set(pole) != {"p", "q"}:
            raise MalformedCoefficient(f"axis {name}: pole {i} must be {{p, q}}")
        parsed.append(
            (_number(pole["p"], f"{name}.poles[{i}].p"), _number(pole["q"], f"{name}.poles[{i}].q"))
        )
    return SellmeierAxis(
        c0=_number(block["c0"], f"{name}.c0"),
        poles=tuple(parsed),
        r=_number(block.get("r", 0.0), f"{name}.r"),
    )


def load_crystal(document: Mapping) -> CrystalDispersion:
    """Build and validate a :class:`CrystalDispersion` from a parsed document."""
    if not isinstance(document, Mapping):
        raise ValidationError("crystal document must be an object")
    axes = document.get("axes")
    if not isinstance(axes, Mapping):
        raise ValidationError("crystal document has no 'axes' object")
    for ax in AXES:
        if ax not in axes:
            raise MissingAxis(ax)
    window = document.get("window_um")
    if not isinstance(window, (list, tuple)) or len(window) != 2:
        raise EmptyWindow("window_um must be a [min, max] pair")
    lo_um = _number(window[0], "window_um[0]")
    hi_um = _number(window[1], "window_um[1]")
    if not 0 < lo_um < hi_um:
        raise EmptyWindow(f"empty or invalid window [{lo_um}, {hi_um}] um")
    provenance = document.get("provenance")
    if not isinstance(provenance, str) or not provenance.strip():
        raise ValidationError("crystal document needs a nonempty provenance string")
    name = document.get("name")
    if not isinstance(name, str) or not name:
        raise ValidationError("crystal document needs a name")

    crystal = CrystalDispersion(
        name=name,
        x=_parse_axis("x", axes["x"]),
        y=_parse_axis("y", axes["y"]),
        z=_parse_axis("z", axes["z"]),
        window=(lo_um * 1e-6, hi_um * 1e-6),
        provenance=provenance,
    )
    _validate_physics(crystal, lo_um, hi_um)
    return crystal


def _validate_physics(crystal: CrystalDispersion, lo_um: float, hi_um: float):
    lam = np.linspace(lo_um, hi_um, ORDERING_SAMPLES)
    n2 = {ax: crystal.axis(ax).n_squared(lam) for ax in AXES}
    for ax, vals in n2.items():
        if not np.all(np.isfinite(vals)) or np.any(vals <= 1.0):
            raise MalformedCoefficient(f"axis {ax}: n^2 <= 1 or singular inside the window")
    if not (np.all(n2["x"] < n2["y"]) and np.all(n2["y"] < n2["z"])):
        i = int(np.argmax(~((n2["x"] < n2["y"]) & (n2["y"] < n2["z"]))))
        raise OrderingViolation(
            f"n_x < n_y < n_z fails at {lam[i]:.4g} um "
            f"(n = {np.sqrt(n2['x'][i]):.5f}, {np.sqrt(n2['y'][i]):.5f}, {np.sqrt(n2['z'][i]):.5f})"
        )


def dump_crystal(crystal: CrystalDispersion) -> dict:
    """Inverse of :func:`load_crystal`."""

    def axis_doc(ax: SellmeierAxis):
        return {"c0": ax.c0, "poles": [{"p": p, "q": q} for p, q in ax.poles], "r": ax.r}

    return {
        "name": crystal.name,
        "axes": {name: axis_doc(crystal.axis(name)) for name in AXES},
        "window_um": [crystal.window[0] * 1e6, crystal.window[1] * 1e6],
        "provenance": crystal.provenance,
    }


def load_crystal_file(path) -> CrystalDispersion:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: invalid JSON ({exc})") from exc
    return load_crystal(doc)


def shipped_crystal_path() -> Path:
    return Path(str(resources.files("tpgsim") / "data" / "ktp_kato2002.json"))


@lru_cache(maxsize=None)
def ktp() -> CrystalDispersion:
    """The KTP dispersion shipped with the package."""
    return load_crystal_file(shipped_crystal_path())


def principal_index(crystal: CrystalDispersion, axis: str, wavelength):
    """Principal refractive index ``n_axis(wavelength)``; wavelength in metres."""
    lam = units.as_si(wavelength, units.LENGTH, "wavelength")
    ax = crystal.axis(axis)
    crystal.check_window(lam)
    return np.sqrt(ax.n_squared(np.asarray(lam, dtype=float) * 1e6))


def eigen_indices(crystal: CrystalDispersion, theta, wavelength):
    """Indices of the two eigenmodes for propagation in the xz-plane.

    ``theta`` is measured from the z-axis, in radians.  Returns
    ``(n_y_mode, n_inplane_mode)``; the second solves
    ``1/n^2 = cos^2(theta)/n_x^2 + sin^2(theta)/n_z^2``.
    """
    theta = units.as_si(theta, units.DIMENSIONLESS, "theta")
    if not 0.0 <= theta <= math.pi / 2 + 1e-15:
        raise AngleOutOfRange(f"theta = {math.degrees(theta):.6g} deg not in [0, 90] deg")
    nx = principal_index(crystal, "x", wavelength)
    ny = principal_index(crystal, "y", wavelength)
    nz = principal_index(crystal, "z", wavelength)
    ct, st = math.cos(theta), math.sin(theta)
    inplane = 1.0 / np.sqrt(ct * ct / (nx * nx) + st * st / (nz * nz))
    return ny, inplane


def mode_index(crystal: CrystalDispersion, theta, wavelength, mode: str):
    """Index of the ``"y"`` or ``"inplane"`` eigenmode."""
    if mode == "y":
        return principal_index(crystal, "y", wavelength)
    if mode == "inplane":
        return eigen_indices(crystal, theta, wavelength)[1]
    raise InvalidAxis(f"unknown polarization mode {mode!r}; expected 'y' or 'inplane'")
