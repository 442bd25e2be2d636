"""Building-material electromagnetic properties.

Each material is described by its relative permittivity, conductivity and a
representative slab thickness.  The bundled table covers common construction
materials; callers may override any entry or register their own via the scene
document.
"""

from __future__ import annotations

from dataclasses import dataclass

EPSILON_0 = 8.8541878128e-12  # F/m


@dataclass(frozen=True)
class Material:
    """Electromagnetic description of a planar building element."""

    name: str
    relative_permittivity: float = 1.0
    conductivity: float = 0.0  # S/m at 1 GHz
    thickness: float = 0.1  # m
    is_perfect_conductor: bool = False
    conductivity_exponent: float = 0.0  # sigma(f) = conductivity * f_GHz**exponent

    def __post_init__(self):
        if not self.is_perfect_conductor and self.relative_permittivity < 1.0:
            raise ValueError(
                f"material {self.name!r}: relative permittivity must be >= 1"
            )
        if self.conductivity < 0.0:
            raise ValueError(f"material {self.name!r}: conductivity must be >= 0")
        if self.thickness <= 0.0:
            raise ValueError(f"material {self.name!r}: thickness must be > 0")

    def conductivity_at(self, frequency: float) -> float:
        """Effective conductivity at a frequency (power-law dispersion)."""
        if self.conductivity_exponent == 0.0:
            return self.conductivity
        return self.conductivity * (frequency / 1e9) ** self.conductivity_exponent

    def complex_permittivity(self, frequency: float) -> complex:
        """Complex relative permittivity eps_r - j*sigma(f)/(omega*eps0)."""
        omega = 2.0 * 3.141592653589793 * frequency
        sigma = self.conductivity_at(frequency)
        return self.relative_permittivity - 1j * sigma / (omega * EPSILON_0)


# Default property table.  Permittivities and conductivity power laws follow
# the ITU-R P.2040 building-material model (sigma given at 1 GHz); scene
# documents may override them per material name.  "chipboard" stands in for
# dense filled furniture (wardrobes, shelving) rather than bare board.
DEFAULT_MATERIALS = {
    "brick": Material("brick", 3.91, 0.0238, 0.12, conductivity_exponent=0.16),
    "concrete": Material("concrete", 5.24, 0.0462, 0.20, conductivity_exponent=0.7822),
    "wood": Material("wood", 1.99, 0.0047, 0.03, conductivity_exponent=1.0718),
    "glass": Material("glass", 6.31, 0.0036, 0.006, conductivity_exponent=1.3394),
    "plasterboard": Material(
        "plasterboard", 2.73, 0.0085, 0.10, conductivity_exponent=0.9395
    ),
    "chipboard": Material("chipboard", 2.58, 0.0217, 0.10, conductivity_exponent=0.78),
    "metal": Material("metal", 1.0, 0.0, 0.002, is_perfect_conductor=True),
}


def default_material(name: str) -> Material:
    try:
        return DEFAULT_MATERIALS[name]
    except KeyError:
        raise KeyError(f"unknown material {name!r}") from None
