"""Independent numerical checks on the closed-form flux model.

``ode_propagate`` integrates the classical two-mode system behind the flux
formula with a fixed-step RK4 scheme in the lab frame (no rotating-frame
reduction, no eigen-solution), so it shares nothing with the sin^2/sinh^2
expressions except the physical constants.  ``quadrature_reference`` is a
dense composite trapezoid over the same window that ``integrate_flux`` uses.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import units
from .errors import StepTooCoarse, ValidationError
from .tpg_model import CouplingInputs, delta_k_eff, flux_density, gain_term, lobe_edges

# n2 = 2 pi G Z^2 + O(Z^4) while |A2|^2 = g^2 Z^2 + O(Z^4) with g^2 = 4 pi^2 G,
# so the unit vacuum source maps onto photon flux with a factor 1/(2 pi).
SOURCE_NORMALIZATION = 1.0 / (2.0 * math.pi)
RICHARDSON_RTOL = 1e-7


@dataclass(frozen=True)
class OdeState:
    A2: np.ndarray
    A3c: np.ndarray  # conjugate amplitude of mode 3
    Z: float

    def manley_rowe(self):
        """|A3|^2 - |A2|^2, conserved along Z (equal to 1 for the unit source)."""
        return np.abs(self.A3c) ** 2 - np.abs(self.A2) ** 2


def integrate_modes(gain, mismatch, length: float, steps: int) -> OdeState:
    """RK4 for dA2/dZ = i g A3* e^{-i dk Z}, dA3*/dZ = -i g A2 e^{+i dk Z}.

    Vectorized over equal-shape ``gain`` (1/m) and ``mismatch`` (rad/m) arrays.
    Starts from A2 = 0, A3* = 1.
    """
    g = np.asarray(gain, dtype=float)
    dk = np.asarray(mismatch, dtype=float)
    g, dk = np.broadcast_arrays(g, dk)
    h = length / steps
    a2 = np.zeros(g.shape, dtype=complex)
    a3 = np.ones(g.shape, dtype=complex)
    # phasor e^{-i dk Z} advanced by exact half-step rotations
    half_turn = np.exp(-0.5j * dk * h)
    ph0 = np.ones(g.shape, dtype=complex)
    ig = 1j * g
    for _ in range(steps):
        ph_mid = ph0 * half_turn
        ph1 = ph_mid * half_turn
        k1a = ig * a3 * ph0
        k1b = -ig * a2 * np.conj(ph0)
        k2a = ig * (a3 + 0.5 * h * k1b) * ph_mid
        k2b = -ig * (a2 + 0.5 * h * k1a) * np.conj(ph_mid)
        k3a = ig * (a3 + 0.5 * h * k2b) * ph_mid
        k3b = -ig * (a2 + 0.5 * h * k2a) * np.conj(ph_mid)
        k4a = ig * (a3 + h * k3b) * ph1
        k4b = -ig * (a2 + h * k3a) * np.conj(ph1)
        a2 = a2 + h / 6.0 * (k1a + 2 * k2a + 2 * k3a + k4a)
        a3 = a3 + h / 6.0 * (k1b + 2 * k2b + 2 * k3b + k4b)
        ph0 = ph1
    return OdeState(a2, a3, length)


def ode_propagate(omega, inputs: CouplingInputs, steps: int = 10_000, check: bool = True):
    """n2(omega, L) from direct integration of the coupled-mode equations.

    With ``check`` the run is repeated at half the step size and the Richardson
    estimate of the RK4 error must stay below 1e-7 relative.
    """
    if steps < 10:
        raise ValidationError("too few steps")
    omega = np.asarray(units.as_si(omega, units.ANGULAR_FREQUENCY, "omega"), dtype=float)
    g = np.sqrt(gain_term(omega, inputs))
    dk = delta_k_eff(omega, inputs)
    fine = integrate_modes(g, dk, inputs.L, 2 * steps if check else steps)
    out = SOURCE_NORMALIZATION * np.abs(fine.A2) ** 2
    if check:
        coarse = SOURCE_NORMALIZATION * np.abs(integrate_modes(g, dk, inputs.L, steps).A2) ** 2
        with np.errstate(invalid="ignore", divide="ignore"):
            rel = np.where(out > 0, np.abs(out - coarse) / 15.0 / out, 0.0)
        worst = float(np.max(rel)) if rel.size else 0.0
        if worst > RICHARDSON_RTOL:
            raise StepTooCoarse(
                f"RK4 error estimate {worst:.2e} exceeds {RICHARDSON_RTOL:.0e}; raise steps"
            )
    return float(out) if out.ndim == 0 else out


def equivalence_report(omega, inputs: CouplingInputs, steps: int = 10_000):
    """Rows ``(omega, closed_form, oracle, rel_error)``."""
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    closed = flux_density(omega, inputs)
    oracle = np.atleast_1d(ode_propagate(omega, inputs, steps))
    with np.errstate(invalid="ignore", divide="ignore"):
        rel = np.where(closed != 0, np.abs(oracle - closed) / np.abs(closed), np.abs(oracle))
    return list(zip(omega.tolist(), closed.tolist(), oracle.tolist(), rel.tolist()))


def quadrature_reference(
    inputs: CouplingInputs, n_points: int = 1_000_001, n_lobes: int = 50
) -> float:
    """Composite trapezoid of n2(omega) over the ``integrate_flux`` window."""
    if n_points < 3:
        raise ValidationError("need at least three points")
    if inputs.I_p0 == 0 or inputs.I_10 == 0 or inputs.chi3 == 0:
        return 0.0
    edges = lobe_edges(inputs, n_lobes)
    omega = np.linspace(edges[0], edges[-1], n_points)
    return float(np.trapezoid(flux_density(omega, inputs), omega))
