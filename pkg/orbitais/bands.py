"""
Problema de uma partícula na rede 1D q·sin²(x).

Comprimentos em 1/k (os sítios ficam em x = jπ) e energias em E_R, de modo que
o hamiltoniano é -d²/dx² + q sin²x. Na base de ondas planas e^{i(k+2m)x} ele é
tridiagonal: diagonal (k+2m)² + q/2 e fora da diagonal -q/4.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal

from . import conf
from .exceptions import DegenerateBandError, InvalidParameterError

logger = logging.getLogger(__name__)

SITE_SPACING = math.pi


@dataclass(frozen=True, eq=False)
class BandStructure:
    """
    Bandas de Bloch de uma rede 1D.

    Atributos:
        depth (float): Profundidade q da rede (E_R).
        band_count (int): Número de bandas calculadas.
        momenta (ndarray): Malha de quase-momento na primeira zona, k ∈ (-1, 1).
        energies (ndarray): Dispersão E_α(k), forma (k_points, band_count).
        coefficients (ndarray): Autovetores reais na base de ondas planas,
            forma (k_points, band_count, plane_waves).
        orders (ndarray): Ordens m das ondas planas e^{i(k+2m)x}.
    """

    depth: float
    band_count: int
    momenta: np.ndarray
    energies: np.ndarray
    coefficients: np.ndarray
    orders: np.ndarray

    @property
    def k_points(self) -> int:
        return len(self.momenta)

    @property
    def plane_waves(self) -> int:
        return len(self.orders)

    def check_band(self, band: int):
        if not 0 <= band < self.band_count:
            raise InvalidParameterError(
                f"Banda {band} inválida; foram calculadas {self.band_count} bandas"
            )

    def bandwidth(self, band: int) -> float:
        self.check_band(band)
        return float(np.ptp(self.energies[:, band]))

    def dispersion_rows(self):
        """Linhas (k, E_0, E_1, ...) para exportação."""
        return np.column_stack([self.momenta, self.energies])


def plane_wave_hamiltonian(k: float, q: float, orders: np.ndarray) -> np.ndarray:
    """Matriz densa do hamiltoniano de Bloch no quase-momento k."""
    diagonal = (k + 2 * orders) ** 2 + q / 2
    matriz = np.diag(diagonal)
    off = -q / 4 * np.ones(len(orders) - 1)
    return matriz + np.diag(off, 1) + np.diag(off, -1)


def solve_bands(
    q: float,
    band_count: int = 3,
    k_points: int | None = None,
    plane_waves: int | None = None,
) -> BandStructure:
    """
    Resolve as bandas de Bloch mais baixas da rede q·sin²(x).

    Parâmetros:
        q (float): Profundidade da rede em E_R.
        band_count (int): Número de bandas desejadas.
        k_points (int, opcional): Pontos na malha de quase-momento (padrão 64).
        plane_waves (int, opcional): Número ímpar de ondas planas (padrão 33).

    Retorna:
        BandStructure: Dispersão e coeficientes de Bloch.

    Lança:
        InvalidParameterError: Se q não for finito e não negativo, ou se a base
            de ondas planas for pequena demais para as bandas pedidas.
    """
    k_points = k_points or conf.get("K_POINTS")
    plane_waves = plane_waves or conf.get("PLANE_WAVES")

    if not math.isfinite(q) or q < 0:
        raise InvalidParameterError(f"Profundidade da rede inválida: {q}")
    if band_count < 1:
        raise InvalidParameterError("É preciso calcular ao menos uma banda")
    if band_count > plane_waves:
        raise InvalidParameterError(
            f"{band_count} bandas excedem a base de {plane_waves} ondas planas"
        )
    if plane_waves % 2 == 0 or plane_waves < 2 * band_count + 5:
        raise InvalidParameterError(
            f"O número de ondas planas precisa ser ímpar e ao menos {2 * band_count + 5}"
        )
    if k_points < 2:
        raise InvalidParameterError("A malha de quase-momento precisa de ao menos 2 pontos")

    cutoff = plane_waves // 2
    orders = np.arange(-cutoff, cutoff + 1)
    # malha de pontos médios: simétrica em ±k e sem as bordas da zona
    momenta = -1 + (2 * np.arange(k_points) + 1) / k_points

    energies = np.empty((k_points, band_count))
    coefficients = np.empty((k_points, band_count, plane_waves))
    off = -q / 4 * np.ones(plane_waves - 1)
    for i, k in enumerate(momenta):
        diagonal = (k + 2 * orders) ** 2 + q / 2
        valores, vetores = eigh_tridiagonal(
            diagonal, off, select="i", select_range=(0, band_count - 1)
        )
        energies[i] = valores
        coefficients[i] = vetores.T

    logger.debug("Bandas resolvidas para q=%.6g (%d bandas, %d pontos k)", q, band_count, k_points)
    return BandStructure(
        depth=float(q),
        band_count=band_count,
        momenta=momenta,
        energies=energies,
        coefficients=coefficients,
        orders=orders,
    )


@dataclass(frozen=True, eq=False)
class WannierFunction:
    """
    Função de Wannier real de uma banda, localizada num sítio.

    Atributos:
        band (int): Índice da banda.
        site (int): Sítio de origem (centro em x = site·π).
        grid (ndarray): Malha espacial.
        samples (ndarray): Valores reais de w na malha.
        spacing (float): Espaçamento da malha.
    """

    band: int
    site: int
    grid: np.ndarray
    samples: np.ndarray
    spacing: float
    momenta: np.ndarray = field(repr=False)
    orders: np.ndarray = field(repr=False)
    coefficients: np.ndarray = field(repr=False)

    @property
    def center(self) -> float:
        return self.site * SITE_SPACING

    def evaluate(self, x, derivative: int = 0) -> np.ndarray:
        """
        Avalia w (ou sua derivada) em pontos arbitrários pela soma de Bloch.

        Parâmetros:
            x (array_like): Posições em unidades de 1/k.
            derivative (int): Ordem da derivada (0, 1 ou 2).

        Retorna:
            ndarray: Valores reais.
        """
        return _bloch_sum(
            self.coefficients,
            self.momenta,
            self.orders,
            np.asarray(x, dtype=float) - self.center,
            self.band,
            derivative,
        )

    def norm(self) -> float:
        return float(np.trapezoid(self.samples**2, dx=self.spacing))


def _bloch_sum(coefficients, momenta, orders, x, band, derivative=0):
    ondas = momenta[:, None] + 2 * orders[None, :]
    pesos = coefficients * (1j * ondas) ** derivative
    harmonicos = np.exp(2j * np.outer(x, orders)) @ pesos.T
    soma = np.sum(np.exp(1j * np.outer(x, momenta)) * harmonicos, axis=1)
    soma /= len(momenta) * math.sqrt(math.pi)
    if band % 2:
        soma *= -1j
    return soma.real


def wannier(
    bands: BandStructure,
    band: int,
    site: int = 0,
    points_per_site: int | None = None,
    support_sites: int | None = None,
) -> WannierFunction:
    """
    Constrói a função de Wannier real da banda ``band`` centrada em ``site``.

    O gauge de cada estado de Bloch é fixado para que ψ_k(0) seja real e
    positivo (bandas pares) ou para que ψ_k'(0) seja positivo (bandas ímpares).

    Parâmetros:
        bands (BandStructure): Bandas resolvidas.
        band (int): Índice da banda.
        site (int): Sítio de origem.
        points_per_site (int, opcional): Resolução da malha (padrão 512).
        support_sites (int, opcional): Suporte ±sítios em torno do centro (padrão 3).

    Retorna:
        WannierFunction: Função real, simétrica ou antissimétrica conforme a banda.

    Lança:
        DegenerateBandError: Se a banda tocar uma vizinha na malha de k ou se o
            gauge não puder ser fixado.
    """
    bands.check_band(band)
    points_per_site = points_per_site or conf.get("POINTS_PER_SITE")
    support_sites = support_sites or conf.get("WANNIER_SITES")

    escala = max(1.0, float(np.max(np.abs(bands.energies[:, band]))))
    for vizinha in (band - 1, band + 1):
        if 0 <= vizinha < bands.band_count:
            gap = np.min(np.abs(bands.energies[:, vizinha] - bands.energies[:, band]))
            if gap < 1e-9 * escala:
                raise DegenerateBandError(
                    f"Bandas {band} e {vizinha} degeneradas na malha de k (q={bands.depth})"
                )

    coeficientes = bands.coefficients[:, band, :]
    if band % 2:
        referencia = np.sum(
            coeficientes * (bands.momenta[:, None] + 2 * bands.orders[None, :]), axis=1
        )
    else:
        referencia = np.sum(coeficientes, axis=1)
    if np.min(np.abs(referencia)) < 1e-8 * np.max(np.abs(referencia)):
        raise DegenerateBandError(
            f"Não foi possível fixar o gauge da banda {band} (q={bands.depth})"
        )
    coeficientes = coeficientes * np.sign(referencia)[:, None]

    local = np.linspace(
        -support_sites * SITE_SPACING,
        support_sites * SITE_SPACING,
        2 * support_sites * points_per_site + 1,
    )
    amostras = _bloch_sum(coeficientes, bands.momenta, bands.orders, local, band)
    return WannierFunction(
        band=band,
        site=site,
        grid=local + site * SITE_SPACING,
        samples=amostras,
        spacing=float(local[1] - local[0]),
        momenta=bands.momenta,
        orders=bands.orders,
        coefficients=coeficientes,
    )


def hopping(bands: BandStructure, band: int) -> float:
    """
    Amplitude de tunelamento entre vizinhos, J_α = -(1/N_k) Σ_k E_α(k) cos(kπ).

    Com essa convenção o termo da banda 0 entra no hamiltoniano como -J a†a
    com J > 0; a banda p sai com o sinal oposto.

    Parâmetros:
        bands (BandStructure): Bandas resolvidas.
        band (int): Índice da banda.

    Retorna:
        float: J em E_R.
    """
    bands.check_band(band)
    return float(-np.mean(bands.energies[:, band] * np.cos(bands.momenta * SITE_SPACING)))


def hopping_from_wannier(bands: BandStructure, band: int, points_per_site: int | None = None) -> float:
    """Mesma amplitude pela integral -∫ w(x) H w(x-π) dx no espaço real."""
    points_per_site = points_per_site or conf.get("POINTS_PER_SITE")
    support = conf.get("WANNIER_SITES")
    w = wannier(bands, band, site=0, points_per_site=points_per_site)
    vizinha = wannier(bands, band, site=1, points_per_site=points_per_site)
    x = np.linspace(
        -support * SITE_SPACING,
        (support + 1) * SITE_SPACING,
        (2 * support + 1) * points_per_site + 1,
    )
    h_vizinha = -vizinha.evaluate(x, derivative=2) + bands.depth * np.sin(x) ** 2 * vizinha.evaluate(x)
    return float(-np.trapezoid(w.evaluate(x) * h_vizinha, x))


def onsite_energy_1d(bands: BandStructure, band: int) -> float:
    """Energia de sítio ε_α = <w_α|H|w_α>, a média da banda sobre k."""
    bands.check_band(band)
    return float(np.mean(bands.energies[:, band]))
