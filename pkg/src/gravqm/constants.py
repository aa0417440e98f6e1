"""Physical constants and the small set of units used at I/O boundaries.

All internal computation is done in SI; unit tags exist only so that inputs
and reports can use cm / g conventions without risking factor drift.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

#: SI units each tag converts to, with the exact power-of-ten factor.
_UNIT_TABLE = {
    "m": ("m", 1.0),
    "cm": ("m", 1e-2),
    "kg": ("kg", 1.0),
    "g": ("kg", 1e-3),
    "s": ("s", 1.0),
    "J": ("J", 1.0),
    "dimensionless": ("dimensionless", 1.0),
}


@dataclass(frozen=True)
class PhysicalConstants:
    """Gravitational constant, reduced Planck constant, and speed of light (SI).

    Defaults follow the usual CODATA-style rounded values.  Override all three
    with 1.0 for dimensionless runs.
    """

    G: float = 6.674e-11      # m^3 kg^-1 s^-2
    hbar: float = 1.0546e-34  # J s
    c: float = 2.998e8        # m s^-1

    def __post_init__(self):
        for name in ("G", "hbar", "c"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"constant {name} must be finite and > 0, got {v!r}")

    @property
    def hbar_c(self) -> float:
        """hbar * c in J m, the natural scale for reporting energies per length."""
        return self.hbar * self.c

    @classmethod
    def dimensionless(cls) -> "PhysicalConstants":
        """G = hbar = c = 1."""
        return cls(G=1.0, hbar=1.0, c=1.0)


@dataclass(frozen=True)
class Quantity:
    """A real value carrying one of the supported unit tags."""

    value: float
    unit: str

    def __post_init__(self):
        if self.unit not in _UNIT_TABLE:
            raise ValueError(f"unknown unit tag {self.unit!r}; "
                             f"expected one of {sorted(_UNIT_TABLE)}")


def to_si(q: Quantity) -> Quantity:
    """Express ``q`` in its SI base unit (cm -> m, g -> kg, rest unchanged)."""
    si_unit, factor = _UNIT_TABLE[q.unit]
    return Quantity(q.value * factor, si_unit)


def from_si(q: Quantity, unit: str) -> Quantity:
    """Convert an SI quantity to ``unit``.  Inverse of :func:`to_si`."""
    if unit not in _UNIT_TABLE:
        raise ValueError(f"unknown unit tag {unit!r}")
    si_unit, factor = _UNIT_TABLE[unit]
    if _UNIT_TABLE[q.unit][0] != si_unit or _UNIT_TABLE[q.unit][1] != 1.0:
        raise ValueError(f"cannot convert {q.unit!r} (not an SI base) to {unit!r}")
    return Quantity(q.value / factor, unit)


def energy_in_hbar_c_per_cm(energy_j: float, constants: PhysicalConstants) -> float:
    """Dimensionless coefficient of an energy expressed in units of hbar*c/cm."""
    return energy_j * 1e-2 / constants.hbar_c
