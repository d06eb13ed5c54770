"""
Conversão entre as unidades internas adimensionais e unidades físicas.

Internamente energias são medidas em E_R, comprimentos em 1/k (k = 2π/λ) e
tempos em hbar/E_R. Uma frequência angular adimensional w corresponde a
w·E_R/hbar rad/s, ou seja, w·E_R/h Hz.
"""

import math
from dataclasses import dataclass

from .exceptions import InvalidParameterError

# CODATA 2018 (https://physics.nist.gov/cuu/Constants/)
PLANCK = 6.62607015e-34  # J s, exato
HBAR = PLANCK / (2 * math.pi)
ATOMIC_MASS = 1.66053906660e-27  # kg
BOHR_RADIUS = 5.29177210903e-11  # m

DIMENSIONS = ("energy", "frequency", "time")


@dataclass(frozen=True)
class UnitSystem:
    """
    Sistema de unidades de uma espécie atômica numa rede de comprimento de onda λ.

    Atributos:
        name (str): Nome do preset.
        mass (float): Massa atômica em kg.
        wavelength (float): Comprimento de onda do laser em m.
        scattering_length (float): Comprimento de espalhamento de onda s em m.
    """

    name: str
    mass: float
    wavelength: float
    scattering_length: float

    def __post_init__(self):
        if not (self.mass > 0 and self.wavelength > 0):
            raise InvalidParameterError("Massa e comprimento de onda precisam ser positivos")

    @property
    def recoil_energy(self) -> float:
        """E_R = (2π hbar)² / (2 m λ²), em J."""
        return PLANCK**2 / (2 * self.mass * self.wavelength**2)

    @property
    def recoil_frequency(self) -> float:
        """E_R/h em Hz."""
        return self.recoil_energy / PLANCK

    @property
    def time_unit(self) -> float:
        """hbar/E_R em segundos."""
        return HBAR / self.recoil_energy

    @property
    def coupling(self) -> float:
        """Acoplamento adimensional g = 16π² a0 / λ."""
        return 16 * math.pi**2 * self.scattering_length / self.wavelength

    def _scale(self, dimension: str) -> float:
        if dimension == "energy":
            return self.recoil_energy
        if dimension == "frequency":
            return self.recoil_energy / HBAR
        if dimension == "time":
            return self.time_unit
        raise InvalidParameterError(
            f"Dimensão desconhecida '{dimension}'; use uma de {', '.join(DIMENSIONS)}"
        )

    def to_physical(self, value, dimension: str):
        """
        Converte um valor adimensional para unidades SI.

        Parâmetros:
            value (float | ndarray): Valor em E_R, E_R/hbar ou hbar/E_R.
            dimension (str): "energy" (J), "frequency" (rad/s) ou "time" (s).

        Retorna:
            float | ndarray: Valor em unidades SI.

        Lança:
            InvalidParameterError: Se a dimensão não for reconhecida.
        """
        return value * self._scale(dimension)

    def to_dimensionless(self, value, dimension: str):
        """Inverso de ``to_physical``."""
        return value / self._scale(dimension)

    def to_hz(self, value):
        """Energia ou frequência angular adimensional para Hz."""
        return value * self.recoil_frequency

    def from_hz(self, value):
        return value / self.recoil_frequency

    def to_ms(self, value):
        """Tempo adimensional para milissegundos."""
        return value * self.time_unit * 1e3

    def from_ms(self, value):
        return value / (self.time_unit * 1e3)


PRESETS = {
    "cr52": UnitSystem(
        name="cr52",
        mass=51.9405075 * ATOMIC_MASS,
        wavelength=523e-9,
        scattering_length=112 * BOHR_RADIUS,
    ),
    "rb87": UnitSystem(
        name="rb87",
        mass=86.909180527 * ATOMIC_MASS,
        wavelength=1064e-9,
        scattering_length=100.4 * BOHR_RADIUS,
    ),
}


def get_preset(name: str) -> UnitSystem:
    """
    Retorna o sistema de unidades de um preset de espécie.

    Parâmetros:
        name (str): "cr52" ou "rb87" (sem diferenciar maiúsculas).

    Retorna:
        UnitSystem: Preset correspondente.

    Lança:
        InvalidParameterError: Se o preset não existir.
    """
    try:
        return PRESETS[name.lower()]
    except KeyError:
        raise InvalidParameterError(
            f"Preset '{name}' desconhecido; use um de {', '.join(PRESETS)}"
        ) from None
