"""Minimal dimension-checked quantities.

A :class:`Quantity` is a value in SI base units plus an integer exponent
vector over (m, s, kg, A).  Public functions in the package accept either a
``Quantity`` or a bare number; bare numbers are taken to be SI already.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np
from scipy import constants as _sc

from .errors import DimensionError

Dim = Tuple[int, int, int, int]  # (m, s, kg, A)

_SYMBOLS = ("m", "s", "kg", "A")

DIMENSIONLESS: Dim = (0, 0, 0, 0)
LENGTH: Dim = (1, 0, 0, 0)
TIME: Dim = (0, 1, 0, 0)
MASS: Dim = (0, 0, 1, 0)
CURRENT: Dim = (0, 0, 0, 1)


def _dim_str(dim: Dim) -> str:
    parts = [f"{s}^{e}" if e != 1 else s for s, e in zip(_SYMBOLS, dim) if e]
    return "·".join(parts) or "1"


@dataclass(frozen=True)
class Quantity:
    value: Union[float, np.ndarray]
    dim: Dim = DIMENSIONLESS

    # make ``ndarray * Quantity`` defer to Quantity.__rmul__
    __array_ufunc__ = None

    def _coerce(self, other) -> "Quantity":
        if isinstance(other, Quantity):
            return other
        return Quantity(other, DIMENSIONLESS)

    def _same_dim(self, other: "Quantity", op: str):
        if self.dim != other.dim:
            raise DimensionError(
                f"cannot {op} [{_dim_str(self.dim)}] and [{_dim_str(other.dim)}]"
            )

    def __add__(self, other):
        other = self._coerce(other)
        self._same_dim(other, "add")
        return Quantity(self.value + other.value, self.dim)

    __radd__ = __add__

    def __sub__(self, other):
        other = self._coerce(other)
        self._same_dim(other, "subtract")
        return Quantity(self.value - other.value, self.dim)

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        other = self._coerce(other)
        dim = tuple(a + b for a, b in zip(self.dim, other.dim))
        return Quantity(self.value * other.value, dim)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._coerce(other)
        dim = tuple(a - b for a, b in zip(self.dim, other.dim))
        return Quantity(self.value / other.value, dim)

    def __rtruediv__(self, other):
        return self._coerce(other) / self

    def __pow__(self, exponent):
        if isinstance(exponent, Quantity):
            if exponent.dim != DIMENSIONLESS:
                raise DimensionError("exponent must be dimensionless")
            exponent = exponent.value
        scaled = [e * exponent for e in self.dim]
        if any(not math.isclose(s, round(s)) for s in scaled):
            raise DimensionError(
                f"[{_dim_str(self.dim)}]**{exponent} has non-integer exponents"
            )
        return Quantity(self.value**exponent, tuple(int(round(s)) for s in scaled))

    def __neg__(self):
        return Quantity(-self.value, self.dim)

    def __abs__(self):
        return Quantity(abs(self.value), self.dim)

    def _cmp(self, other, op):
        other = self._coerce(other)
        self._same_dim(other, "compare")
        return op(self.value, other.value)

    def __lt__(self, other):
        return self._cmp(other, lambda a, b: a < b)

    def __le__(self, other):
        return self._cmp(other, lambda a, b: a <= b)

    def __gt__(self, other):
        return self._cmp(other, lambda a, b: a > b)

    def __ge__(self, other):
        return self._cmp(other, lambda a, b: a >= b)

    def sqrt(self) -> "Quantity":
        return self**0.5

    def to(self, unit: "Quantity"):
        """Numeric value expressed in ``unit``."""
        self._same_dim(unit, "convert")
        return self.value / unit.value

    def __repr__(self):
        return f"Quantity({self.value!r}, [{_dim_str(self.dim)}])"


def as_si(x, dim: Dim, name: str = "value"):
    """Strip a Quantity to its SI value after checking its dimension.

    Plain numbers and arrays pass through unchanged (assumed SI).
    """
    if isinstance(x, Quantity):
        if x.dim != dim:
            raise DimensionError(
                f"{name} has dimension [{_dim_str(x.dim)}], expected [{_dim_str(dim)}]"
            )
        return x.value
    return x


# base and derived units
m = Quantity(1.0, LENGTH)
s = Quantity(1.0, TIME)
kg = Quantity(1.0, MASS)
A = Quantity(1.0, CURRENT)
dimensionless = Quantity(1.0, DIMENSIONLESS)
rad = dimensionless

nm = 1e-9 * m
um = 1e-6 * m
mm = 1e-3 * m
cm = 1e-2 * m
ps = 1e-12 * s
Hz = 1 / s
THz = 1e12 * Hz
J = kg * m**2 / s**2
uJ = 1e-6 * J
nJ = 1e-9 * J
W = J / s
V = W / A
C_charge = A * s
F = C_charge / V

# CODATA values (via scipy.constants)
c = Quantity(_sc.c, (1, -1, 0, 0))
h = Quantity(_sc.h, (J * s).dim)
hbar = Quantity(_sc.hbar, (J * s).dim)
epsilon_0 = Quantity(_sc.epsilon_0, (F / m).dim)

# frequently used dimension vectors
WAVENUMBER: Dim = (-1, 0, 0, 0)
ANGULAR_FREQUENCY: Dim = (0, -1, 0, 0)
ENERGY: Dim = J.dim
INTENSITY: Dim = (W / m**2).dim
CHI3: Dim = (m**2 / V**2).dim
INV_AREA: Dim = (-2, 0, 0, 0)
