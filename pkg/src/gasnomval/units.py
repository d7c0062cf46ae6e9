"""Conversion of GasLib unit-tagged quantities to SI base units.

All conversions are affine (``si = raw * scale + offset``) so they can be
inverted exactly for round-trip checks.  Unknown unit strings raise
:class:`~gasnomval.errors.UnitError`; values are never converted on a guess.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import UnitError


@dataclass(frozen=True)
class _Affine:
    scale: float
    offset: float = 0.0

    def to_si(self, raw: float) -> float:
        return raw * self.scale + self.offset

    def from_si(self, si: float) -> float:
        return (si - self.offset) / self.scale


# GasLib unit vocabulary -> SI (m, s, kg, K, Pa, W, J, mol and combinations).
_UNITS: dict[str, _Affine] = {
    # flow
    "1000m_cube_per_hour": _Affine(1000.0 / 3600.0),
    "m_cube_per_hour": _Affine(1.0 / 3600.0),
    "m_cube_per_sec": _Affine(1.0),
    # pressure
    "bar": _Affine(1e5),
    "Pa": _Affine(1.0),
    # temperature
    "Celsius": _Affine(1.0, 273.15),
    "C": _Affine(1.0, 273.15),
    "K": _Affine(1.0),
    # length
    "m": _Affine(1.0),
    "meter": _Affine(1.0),
    "km": _Affine(1000.0),
    "mm": _Affine(1e-3),
    # molar mass
    "kg_per_kmol": _Affine(1e-3),
    "kg_per_mol": _Affine(1.0),
    # calorific value
    "MJ_per_m_cube": _Affine(1e6),
    "kJ_per_m_cube": _Affine(1e3),
    "J_per_m_cube": _Affine(1.0),
    # density
    "kg_per_m_cube": _Affine(1.0),
    # power
    "W": _Affine(1.0),
    "kW": _Affine(1e3),
    "MW": _Affine(1e6),
    # misc pass-throughs that occur in GasLib files
    "W_per_m_square_per_K": _Affine(1.0),
    "1_per_min": _Affine(1.0 / 60.0),
}


def normalize_units(raw_value: float, unit: str) -> float:
    """Convert ``raw_value`` tagged with a GasLib ``unit`` string to SI.

    Raises:
        UnitError: if the unit string is not in the supported vocabulary.
    """
    try:
        conv = _UNITS[unit]
    except KeyError:
        raise UnitError(f"unsupported unit string: {unit!r}") from None
    return conv.to_si(raw_value)


def denormalize_units(si_value: float, unit: str) -> float:
    """Inverse of :func:`normalize_units` (exact up to rounding)."""
    try:
        conv = _UNITS[unit]
    except KeyError:
        raise UnitError(f"unsupported unit string: {unit!r}") from None
    return conv.from_si(si_value)


def known_units() -> tuple[str, ...]:
    return tuple(sorted(_UNITS))
