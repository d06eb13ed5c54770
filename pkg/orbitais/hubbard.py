"""
Coeficientes do hamiltoniano de Bose-Hubbard estendido numa rede 2D separável.

Cada orbital de sítio é o produto X^{n_x}(x) Y^{n_y}(y) Z(z) de funções de
Wannier 1D e do estado fundamental harmônico em z. Todas as integrais de
contato se fatoram em I_x · I_y · √(κ/2π).
"""

import itertools
import logging
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
from scipy.interpolate import CubicSpline

from . import conf
from .bands import hopping, onsite_energy_1d, solve_bands, wannier
from .exceptions import InvalidParameterError, TableRangeError

logger = logging.getLogger(__name__)

BAND_COUNT = 3
DIRECTIONS = ("x", "y")
AXES = ("q_x", "q_y", "kappa", "g")


@dataclass(frozen=True)
class Orbital:
    """
    Orbital de sítio identificado pelo par de bandas 1D (n_x, n_y).

    Atributos:
        nx (int): Banda na direção x (0, 1 ou 2).
        ny (int): Banda na direção y (0, 1 ou 2).
        name (str): Nome curto (s, p_x, p_y, d_x, d_y, d_xy).
    """

    nx: int
    ny: int
    name: str = field(compare=False)

    def __post_init__(self):
        if not (0 <= self.nx < BAND_COUNT and 0 <= self.ny < BAND_COUNT):
            raise InvalidParameterError(f"Orbital ({self.nx}, {self.ny}) fora das bandas s/p/d")

    def band(self, direction: str) -> int:
        return self.nx if direction == "x" else self.ny

    def mirrored(self) -> "Orbital":
        return orbital_for(self.ny, self.nx)

    def __str__(self):
        return self.name


S = Orbital(0, 0, "s")
PX = Orbital(1, 0, "p_x")
PY = Orbital(0, 1, "p_y")
DX = Orbital(2, 0, "d_x")
DY = Orbital(0, 2, "d_y")
DXY = Orbital(1, 1, "d_xy")

CANONICAL_ORDER = (S, PX, PY, DX, DY, DXY)
SP = (S, PX, PY)
SPD = CANONICAL_ORDER

_ALIASES = {
    "s": S,
    "p_x": PX,
    "px": PX,
    "x": PX,
    "p_y": PY,
    "py": PY,
    "y": PY,
    "d_x": DX,
    "dx": DX,
    "d_y": DY,
    "dy": DY,
    "d_xy": DXY,
    "dxy": DXY,
}

MODELS = {"sp": SP, "spd": SPD, "sx": (S, PX)}


def orbital_for(nx: int, ny: int) -> Orbital:
    for orbital in CANONICAL_ORDER:
        if (orbital.nx, orbital.ny) == (nx, ny):
            return orbital
    raise InvalidParameterError(f"Orbital ({nx}, {ny}) não pertence ao conjunto s/p/d")


def get_orbital(name) -> Orbital:
    """
    Resolve um orbital pelo nome ou retorna o próprio orbital.

    Lança:
        InvalidParameterError: Se o nome não for reconhecido.
    """
    if isinstance(name, Orbital):
        return name
    try:
        return _ALIASES[str(name).lower()]
    except KeyError:
        raise InvalidParameterError(f"Orbital '{name}' desconhecido") from None


def sort_orbitals(orbitals) -> tuple:
    unicos = {get_orbital(o) for o in orbitals}
    return tuple(sorted(unicos, key=CANONICAL_ORDER.index))


def parity_allowed(*orbitals: Orbital) -> bool:
    """Regra de paridade: a soma dos n_x e a soma dos n_y precisam ser pares."""
    return sum(o.nx for o in orbitals) % 2 == 0 and sum(o.ny for o in orbitals) % 2 == 0


@dataclass(frozen=True)
class LatticeGeometry:
    """
    Geometria adimensional Q = (q_x, q_y, κ) e acoplamento g.

    Atributos:
        q_x (float): Profundidade em x (E_R).
        q_y (float): Profundidade em y (E_R).
        kappa (float): κ = hbar ω_z / 2E_R.
        g (float): Acoplamento de contato 16π² a0/λ.
    """

    q_x: float
    q_y: float
    kappa: float
    g: float = 1.0

    def __post_init__(self):
        for nome in ("q_x", "q_y", "kappa", "g"):
            if not math.isfinite(getattr(self, nome)):
                raise InvalidParameterError(f"{nome} precisa ser finito")
        if self.q_x < 0 or self.q_y < 0:
            raise InvalidParameterError("As profundidades q_x e q_y não podem ser negativas")
        if self.kappa <= 0:
            raise InvalidParameterError("κ precisa ser positivo")

    @property
    def is_separable(self) -> bool:
        """Validade do congelamento em z: κ² ≥ 1.5·max(q_x, q_y)."""
        return self.kappa**2 >= 1.5 * max(self.q_x, self.q_y)

    @property
    def is_symmetric(self) -> bool:
        return self.q_x == self.q_y

    def depth(self, direction: str) -> float:
        return self.q_x if direction == "x" else self.q_y

    def replace(self, **changes) -> "LatticeGeometry":
        return replace(self, **changes)

    def as_tuple(self):
        return (self.q_x, self.q_y, self.kappa, self.g)


@dataclass(frozen=True, eq=False)
class Lattice1D:
    depth: float
    energies: tuple
    hoppings: tuple
    samples: np.ndarray
    spacing: float


@lru_cache(maxsize=512)
def lattice_1d(q: float, k_points=None, plane_waves=None, points_per_site=None) -> Lattice1D:
    """Bandas s/p/d de uma direção, com funções de Wannier amostradas; resultado em cache."""
    bandas = solve_bands(q, BAND_COUNT, k_points, plane_waves)
    funcoes = [wannier(bandas, banda, 0, points_per_site) for banda in range(BAND_COUNT)]
    return Lattice1D(
        depth=q,
        energies=tuple(onsite_energy_1d(bandas, b) for b in range(BAND_COUNT)),
        hoppings=tuple(hopping(bandas, b) for b in range(BAND_COUNT)),
        samples=np.array([w.samples for w in funcoes]),
        spacing=funcoes[0].spacing,
    )


def overlap_integral(lattice: Lattice1D, bands) -> float:
    """∫ X^{n1} X^{n2} X^{n3} X^{n4} dx no mesmo sítio; zero exato quando a paridade proíbe."""
    if sum(bands) % 2:
        return 0.0
    produto = np.prod(lattice.samples[list(bands)], axis=0)
    return float(np.trapezoid(produto, dx=lattice.spacing))


def onsite_energy(geom: LatticeGeometry, orbital) -> float:
    """
    Energia de uma partícula E_σ = ε_{n_x}(q_x) + ε_{n_y}(q_y) + κ.

    Parâmetros:
        geom (LatticeGeometry): Geometria da rede.
        orbital (Orbital | str): Orbital desejado.

    Retorna:
        float: E_σ em E_R.
    """
    orbital = get_orbital(orbital)
    rede_x = lattice_1d(geom.q_x)
    rede_y = lattice_1d(geom.q_y)
    return rede_x.energies[orbital.nx] + rede_y.energies[orbital.ny] + geom.kappa


def interaction_element(geom: LatticeGeometry, a, b, c, d) -> float:
    """
    Elemento de contato W[a,b,c,d] = g √(κ/2π) I_x I_y.

    Parâmetros:
        geom (LatticeGeometry): Geometria da rede.
        a, b, c, d (Orbital | str): Os quatro orbitais.

    Retorna:
        float: W em E_R; zero exato quando a paridade proíbe o elemento.
    """
    orbitais = [get_orbital(o) for o in (a, b, c, d)]
    if not parity_allowed(*orbitais):
        return 0.0
    i_x = overlap_integral(lattice_1d(geom.q_x), [o.nx for o in orbitais])
    i_y = overlap_integral(lattice_1d(geom.q_y), [o.ny for o in orbitais])
    return geom.g * math.sqrt(geom.kappa / (2 * math.pi)) * i_x * i_y


def quartet_key(*orbitals) -> tuple:
    return tuple(sorted((get_orbital(o) for o in orbitals), key=CANONICAL_ORDER.index))


@dataclass(frozen=True)
class ParamLayout:
    """Ordem fixa das entradas de um HubbardParams, usada em tabelas e termos de operador."""

    orbitals: tuple
    keys: tuple

    @classmethod
    def for_orbitals(cls, orbitals) -> "ParamLayout":
        orbitais = sort_orbitals(orbitals)
        max_banda = max(max(o.nx, o.ny) for o in orbitais)
        chaves = [("E", o) for o in orbitais]
        chaves += [("J", d, banda) for d in DIRECTIONS for banda in range(max_banda + 1)]
        chaves += [
            ("W", quarteto)
            for quarteto in itertools.combinations_with_replacement(orbitais, 4)
            if parity_allowed(*quarteto)
        ]
        return cls(orbitals=orbitais, keys=tuple(chaves))

    def index(self, key) -> int:
        return self.keys.index(key)

    def __len__(self):
        return len(self.keys)


@dataclass(frozen=True, eq=False)
class HubbardParams:
    """
    Todos os coeficientes do hamiltoniano numa geometria.

    Atributos:
        geometry (LatticeGeometry): Geometria usada.
        layout (ParamLayout): Orbitais e ordem das entradas.
        values (ndarray): Valores na ordem de ``layout.keys`` (E_R).
    """

    geometry: LatticeGeometry
    layout: ParamLayout
    values: np.ndarray

    @property
    def orbitals(self):
        return self.layout.orbitals

    def _get(self, key) -> float:
        try:
            return float(self.values[self.layout.index(key)])
        except ValueError:
            raise InvalidParameterError(f"Entrada {key} ausente dos parâmetros") from None

    def E(self, orbital) -> float:
        return self._get(("E", get_orbital(orbital)))

    def J(self, direction: str, band: int) -> float:
        return self._get(("J", direction, band))

    def W(self, a, b, c, d) -> float:
        orbitais = [get_orbital(o) for o in (a, b, c, d)]
        for o in orbitais:
            if o not in self.layout.orbitals:
                raise InvalidParameterError(f"Orbital {o} ausente dos parâmetros")
        if not parity_allowed(*orbitais):
            return 0.0
        return self._get(("W", quartet_key(*orbitais)))

    def U(self, a, b) -> float:
        """U_{σσ'} = W[σ,σ,σ',σ'] (densidade-densidade; para σ = σ' é o U_σσ de sítio)."""
        return self.W(a, a, b, b)

    def scaled(self, factor: float) -> "HubbardParams":
        valores = self.values.copy()
        for i, chave in enumerate(self.layout.keys):
            if chave[0] == "W":
                valores[i] *= factor
        return HubbardParams(self.geometry, self.layout, valores)

    def with_hopping_scale(self, factor: float) -> "HubbardParams":
        valores = self.values.copy()
        for i, chave in enumerate(self.layout.keys):
            if chave[0] == "J":
                valores[i] *= factor
        return HubbardParams(self.geometry, self.layout, valores)

    def named(self) -> dict:
        """Entradas nomeadas das curvas de parâmetros (colunas do CSV de params)."""
        nomes = {}
        for o in self.layout.orbitals:
            nomes[f"E_{o.name.replace('_', '')}"] = self.E(o)
        curtos = {S: "s", PX: "x", PY: "y"}
        presentes = [o for o in (S, PX, PY) if o in self.layout.orbitals]
        for i, a in enumerate(presentes):
            for b in presentes[i:]:
                nomes[f"U_{curtos[a]}{curtos[b]}"] = self.U(a, b)
        nomes["J0"] = self.J("x", 0)
        if ("J", "x", 1) in self.layout.keys:
            nomes["J1"] = self.J("x", 1)
        return nomes


def compute_params(geom: LatticeGeometry, orbital_set=SP) -> HubbardParams:
    """
    Calcula todos os E_σ, J^d_α e W do conjunto de orbitais.

    Parâmetros:
        geom (LatticeGeometry): Geometria da rede.
        orbital_set (iterável de Orbital | str): Orbitais do modelo.

    Retorna:
        HubbardParams: Coeficientes completos.

    Lança:
        InvalidParameterError: Se o conjunto estiver vazio ou não for fechado
            sob a reflexão x↔y numa rede simétrica.
    """
    orbitais = sort_orbitals(orbital_set)
    if not orbitais:
        raise InvalidParameterError("O conjunto de orbitais está vazio")
    if geom.is_symmetric:
        for o in orbitais:
            if o.mirrored() not in orbitais:
                raise InvalidParameterError(
                    f"Conjunto de orbitais não é fechado sob x↔y: falta {o.mirrored()}"
                )
    if not geom.is_separable:
        logger.warning(
            "κ²=%.4g abaixo de 1.5·max(q_x, q_y)=%.4g: a separação em z é questionável",
            geom.kappa**2,
            1.5 * max(geom.q_x, geom.q_y),
        )

    layout = ParamLayout.for_orbitals(orbitais)
    redes = {"x": lattice_1d(geom.q_x), "y": lattice_1d(geom.q_y)}
    fator_z = geom.g * math.sqrt(geom.kappa / (2 * math.pi))
    valores = np.empty(len(layout))
    for i, chave in enumerate(layout.keys):
        if chave[0] == "E":
            o = chave[1]
            valores[i] = redes["x"].energies[o.nx] + redes["y"].energies[o.ny] + geom.kappa
        elif chave[0] == "J":
            valores[i] = redes[chave[1]].hoppings[chave[2]]
        else:
            quarteto = chave[1]
            i_x = overlap_integral(redes["x"], [o.nx for o in quarteto])
            i_y = overlap_integral(redes["y"], [o.ny for o in quarteto])
            valores[i] = fator_z * i_x * i_y
    return HubbardParams(geometry=geom, layout=layout, values=valores)


@dataclass(frozen=True)
class AxisPath:
    """Caminho ao longo de um eixo (q_x, q_y, kappa ou g) a partir de uma geometria base."""

    base: LatticeGeometry
    axis: str

    def __post_init__(self):
        if self.axis not in AXES:
            raise InvalidParameterError(f"Eixo '{self.axis}' inválido; use um de {', '.join(AXES)}")

    def geometry(self, value: float) -> LatticeGeometry:
        return self.base.replace(**{self.axis: float(value)})


@dataclass(frozen=True)
class LinearPath:
    """
    Reta no espaço (q_x, q_y, κ, g): geometria(s) = base + s·direção.

    Usado pelas vibrações δQ± = (A, ±A, 0) sin(ωt), tabeladas em s = sin(ωt).
    """

    base: LatticeGeometry
    direction: tuple

    def geometry(self, value: float) -> LatticeGeometry:
        q_x, q_y, kappa, g = (
            b + value * d for b, d in zip(self.base.as_tuple(), self.direction)
        )
        return LatticeGeometry(q_x, q_y, kappa, g)


@dataclass(frozen=True, eq=False)
class ParameterTable:
    """
    Tabela interpolável (spline cúbica por entrada) de HubbardParams ao longo de um caminho.

    Atributos:
        path (AxisPath | LinearPath): Caminho tabelado.
        layout (ParamLayout): Ordem das entradas.
        grid (ndarray): Valores do parâmetro escalar.
        data (ndarray): Entradas em cada ponto, forma (len(grid), len(layout)).
    """

    path: object
    layout: ParamLayout
    grid: np.ndarray
    data: np.ndarray
    spline: CubicSpline | None = field(default=None, repr=False)

    @property
    def bounds(self):
        return float(self.grid[0]), float(self.grid[-1])

    @property
    def is_constant(self) -> bool:
        return len(self.grid) == 1

    def check(self, value):
        baixo, alto = self.bounds
        folga = 1e-12 * max(1.0, abs(baixo), abs(alto))
        valores = np.atleast_1d(value)
        if np.any(valores < baixo - folga) or np.any(valores > alto + folga):
            fora = valores[(valores < baixo - folga) | (valores > alto + folga)][0]
            raise TableRangeError(float(fora), self.bounds)

    def vector(self, value) -> np.ndarray:
        """Entradas interpoladas; aceita escalar (vetor) ou array (matriz)."""
        self.check(value)
        if self.is_constant:
            if np.ndim(value) == 0:
                return self.data[0].copy()
            return np.repeat(self.data[:1], len(value), axis=0)
        return self.spline(value)

    def params_at(self, value: float) -> HubbardParams:
        return HubbardParams(
            geometry=self.path.geometry(float(value)),
            layout=self.layout,
            values=np.asarray(self.vector(float(value))),
        )


def parameter_table(
    geom_base: LatticeGeometry,
    varying,
    grid,
    orbital_set=SP,
) -> ParameterTable:
    """
    Tabela os coeficientes ao longo de um eixo ou de um caminho linear.

    Parâmetros:
        geom_base (LatticeGeometry): Geometria base.
        varying (str | AxisPath | LinearPath): Eixo "q_x", "q_y", "kappa", "g" ou caminho.
        grid (array_like): Valores crescentes do parâmetro; se todos forem
            iguais a tabela é constante.
        orbital_set (iterável): Orbitais do modelo.

    Retorna:
        ParameterTable: Tabela interpolável.

    Lança:
        InvalidParameterError: Se a malha tiver menos de 9 pontos distintos ou
            não for crescente.
    """
    caminho = AxisPath(geom_base, varying) if isinstance(varying, str) else varying
    pontos = np.asarray(grid, dtype=float)
    layout = ParamLayout.for_orbitals(orbital_set)

    if pontos.size and np.all(pontos == pontos[0]):
        pontos = pontos[:1]
        dados = compute_params(caminho.geometry(pontos[0]), layout.orbitals).values[None, :]
        return ParameterTable(path=caminho, layout=layout, grid=pontos, data=dados)

    if pontos.size < 9:
        raise InvalidParameterError("A tabela precisa de ao menos 9 pontos")
    if np.any(np.diff(pontos) <= 0):
        raise InvalidParameterError("A malha da tabela precisa ser estritamente crescente")

    dados = np.array([compute_params(caminho.geometry(v), layout.orbitals).values for v in pontos])
    logger.info(
        "Tabela de parâmetros com %d pontos em [%.6g, %.6g] (%d entradas)",
        len(pontos),
        pontos[0],
        pontos[-1],
        len(layout),
    )
    return ParameterTable(
        path=caminho,
        layout=layout,
        grid=pontos,
        data=dados,
        spline=CubicSpline(pontos, dados, axis=0),
    )


def table_grid(low: float, high: float, points: int | None = None) -> np.ndarray:
    """Malha uniforme padrão para tabelas (33 pontos)."""
    return np.linspace(low, high, points or conf.get("TABLE_POINTS"))
