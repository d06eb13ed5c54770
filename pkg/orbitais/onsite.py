"""
Modelo de sítio único com dois bósons.

O hamiltoniano de sítio é H = Σ_σ E_σ n̂_σ + ½ Σ W[a,b,c,d] a†_a a†_b a_c a_d,
montado a partir dos elementos de segunda quantização. Para o conjunto
{s, p_x, p_y} ele se reduz à matriz 3×3 na base |200⟩, |020⟩, |002⟩.
"""

import itertools
import logging
import math
from collections import deque
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .exceptions import InvalidParameterError
from .hubbard import PX, PY, HubbardParams, ParamLayout, get_orbital, parity_allowed, sort_orbitals

logger = logging.getLogger(__name__)

PARTICLES = 2
TIE_TOLERANCE = 1e-6


def ladder(occupation, create=(), annihilate=()):
    """
    Aplica a†_{create...} a_{annihilate...} a um estado de ocupação.

    Os aniquiladores agem da direita para a esquerda, depois os criadores.

    Retorna:
        tuple | None: (nova ocupação, amplitude bosônica) ou None se o estado for aniquilado.
    """
    n = list(occupation)
    amplitude = 1.0
    for modo in reversed(annihilate):
        if n[modo] == 0:
            return None
        amplitude *= math.sqrt(n[modo])
        n[modo] -= 1
    for modo in reversed(create):
        n[modo] += 1
        amplitude *= math.sqrt(n[modo])
    return tuple(n), amplitude


def quartet_operators(quartet):
    """Sequências (a, b, c, d) distintas que formam o termo ½ W a†a a†b a_c a_d do quarteto."""
    return sorted(set(itertools.permutations(quartet)))


@dataclass(frozen=True)
class TwoParticleBasis:
    """
    Base de dois bósons num sítio.

    Atributos:
        orbitals (tuple): Orbitais em ordem canônica; definem a ordem dos dígitos.
        states (tuple): Ocupações (uma tupla de inteiros por estado).
        reachable (bool): Se a base é a componente conexa de ``states[0]``.
    """

    orbitals: tuple
    states: tuple
    reachable: bool = True
    _lookup: dict = field(default=None, compare=False, hash=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "_lookup", {estado: i for i, estado in enumerate(self.states)})

    @property
    def dimension(self) -> int:
        return len(self.states)

    @property
    def initial_index(self) -> int:
        return 0

    def __len__(self):
        return len(self.states)

    def index(self, occupation) -> int:
        try:
            return self._lookup[tuple(occupation)]
        except KeyError:
            raise InvalidParameterError(f"Estado {occupation} fora da base") from None

    def occupation_of(self, *orbitals) -> tuple:
        """Ocupação com uma partícula em cada orbital dado (repetições somam)."""
        n = [0] * len(self.orbitals)
        for o in orbitals:
            o = get_orbital(o)
            if o not in self.orbitals:
                raise InvalidParameterError(f"Orbital {o} fora da base")
            n[self.orbitals.index(o)] += 1
        return tuple(n)

    def index_of(self, *orbitals) -> int:
        return self.index(self.occupation_of(*orbitals))

    def contains(self, *orbitals) -> bool:
        try:
            return self.occupation_of(*orbitals) in self._lookup
        except InvalidParameterError:
            return False

    def label(self, i: int) -> str:
        estado = self.states[i]
        if len(self.orbitals) <= 3:
            return "|" + "".join(str(n) for n in estado) + "⟩"
        particulas = [o.name for o, n in zip(self.orbitals, estado) for _ in range(n)]
        return "|" + ",".join(particulas) + "⟩"

    @property
    def labels(self):
        return [self.label(i) for i in range(len(self.states))]

    def permuted(self, order) -> "TwoParticleBasis":
        return TwoParticleBasis(self.orbitals, tuple(self.states[i] for i in order), self.reachable)

    def basis_vector(self, i: int) -> np.ndarray:
        vetor = np.zeros(len(self.states), dtype=complex)
        vetor[i] = 1.0
        return vetor

    def p_combination(self, sign: int) -> np.ndarray:
        """(|020⟩ ± |002⟩)/√2 na base, com o sinal de ``sign``."""
        vetor = self.basis_vector(self.index_of(PX, PX)) + np.sign(sign) * self.basis_vector(
            self.index_of(PY, PY)
        )
        return vetor / math.sqrt(2)


def _coupled(occupation, orbitals):
    for quarteto in itertools.combinations_with_replacement(range(len(orbitals)), 4):
        if not parity_allowed(*(orbitals[i] for i in quarteto)):
            continue
        for a, b, c, d in quartet_operators(quarteto):
            resultado = ladder(occupation, (a, b), (c, d))
            if resultado is not None:
                yield resultado[0]


def build_basis(orbital_set, initial=None) -> TwoParticleBasis:
    """
    Constrói a base conexa ao estado inicial pelas interações permitidas pela paridade.

    Parâmetros:
        orbital_set (iterável de Orbital | str): Orbitais do sítio.
        initial (tuple, opcional): Ocupação inicial na ordem canônica dos
            orbitais, ou uma lista de dois orbitais; padrão |2 em s⟩.

    Retorna:
        TwoParticleBasis: Estado inicial primeiro e os demais em ordem
            lexicográfica decrescente (|200⟩, |020⟩, |002⟩).

    Lança:
        InvalidParameterError: Se o conjunto for vazio ou o estado inicial não
            tiver exatamente duas partículas nos orbitais do conjunto.
    """
    orbitais = sort_orbitals(orbital_set)
    if not orbitais:
        raise InvalidParameterError("O conjunto de orbitais está vazio")

    if initial is None:
        inicial = tuple([PARTICLES] + [0] * (len(orbitais) - 1))
    elif all(isinstance(n, int) for n in initial) and len(initial) == len(orbitais):
        inicial = tuple(initial)
    else:
        n = [0] * len(orbitais)
        for o in initial:
            o = get_orbital(o)
            if o not in orbitais:
                raise InvalidParameterError(f"Orbital {o} do estado inicial fora do conjunto")
            n[orbitais.index(o)] += 1
        inicial = tuple(n)
    if any(n < 0 for n in inicial) or sum(inicial) != PARTICLES:
        raise InvalidParameterError(f"O estado inicial precisa ter {PARTICLES} partículas")

    vistos = {inicial}
    fila = deque([inicial])
    while fila:
        estado = fila.popleft()
        for vizinho in _coupled(estado, orbitais):
            if vizinho not in vistos:
                vistos.add(vizinho)
                fila.append(vizinho)

    restantes = sorted(vistos - {inicial}, reverse=True)
    return TwoParticleBasis(orbitais, (inicial, *restantes))


def full_basis(orbital_set) -> TwoParticleBasis:
    """Todos os estados de dois bósons do conjunto, sem seleção por paridade."""
    orbitais = sort_orbitals(orbital_set)
    estados = set()
    for par in itertools.combinations_with_replacement(range(len(orbitais)), PARTICLES):
        n = [0] * len(orbitais)
        for i in par:
            n[i] += 1
        estados.add(tuple(n))
    return TwoParticleBasis(orbitais, tuple(sorted(estados, reverse=True)), reachable=False)


@lru_cache(maxsize=64)
def operator_terms(basis: TwoParticleBasis, layout: ParamLayout) -> np.ndarray:
    """
    Matrizes de operador de cada entrada do layout: H = Σ_e valor_e · termo_e.

    Entradas de tunelamento não agem num sítio e ficam nulas.
    """
    for o in basis.orbitals:
        if o not in layout.orbitals:
            raise InvalidParameterError(f"Parâmetros não cobrem o orbital {o}")
    termos = np.zeros((len(layout), len(basis), len(basis)))
    for e, chave in enumerate(layout.keys):
        if chave[0] == "E":
            if chave[1] in basis.orbitals:
                k = basis.orbitals.index(chave[1])
                termos[e] = np.diag([estado[k] for estado in basis.states])
        elif chave[0] == "W":
            if any(o not in basis.orbitals for o in chave[1]):
                continue
            indices = tuple(basis.orbitals.index(o) for o in chave[1])
            for j, estado in enumerate(basis.states):
                for a, b, c, d in quartet_operators(indices):
                    resultado = ladder(estado, (a, b), (c, d))
                    if resultado is None or resultado[0] not in basis._lookup:
                        continue
                    termos[e, basis.index(resultado[0]), j] += 0.5 * resultado[1]
    termos.setflags(write=False)
    return termos


def hamiltonian_matrix(basis: TwoParticleBasis, params: HubbardParams) -> np.ndarray:
    """
    Matriz real simétrica do hamiltoniano de sítio na base (E_R).

    Parâmetros:
        basis (TwoParticleBasis): Base de dois bósons.
        params (HubbardParams): Coeficientes na geometria desejada.

    Retorna:
        ndarray: Matriz (dim × dim).

    Lança:
        InvalidParameterError: Se algum orbital da base não tiver parâmetros.
    """
    matriz = np.tensordot(params.values, operator_terms(basis, params.layout), axes=1)
    return 0.5 * (matriz + matriz.T)


@dataclass(frozen=True)
class QuantumState:
    """
    Vetor de amplitudes complexas sobre uma base.

    Atributos:
        basis (TwoParticleBasis): Base.
        amplitudes (ndarray): Amplitudes complexas.
        time (float): Tempo adimensional (hbar/E_R).
    """

    basis: TwoParticleBasis
    amplitudes: np.ndarray
    time: float = 0.0

    @classmethod
    def basis_state(cls, basis: TwoParticleBasis, index: int = 0) -> "QuantumState":
        return cls(basis, basis.basis_vector(index))

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def occupations(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def overlap(self, other) -> complex:
        vetor = other.amplitudes if isinstance(other, QuantumState) else np.asarray(other)
        return complex(np.vdot(vetor, self.amplitudes))


@dataclass(frozen=True)
class ResonancePrediction:
    """
    Ressonância prevista a partir de um gap de autovalores.

    Atributos:
        index (int): Índice do autovalor alvo (ordem crescente).
        energy (float): hbar·ω = λ_i - λ_0 em E_R (igual a ω em E_R/hbar).
        hz (float | None): ω/2π em Hz quando há sistema de unidades.
        label (str): Estado de base dominante, ou |+⟩/|−⟩ em empates.
        weight (float): |componente|² do estado dominante.
        vector (ndarray): Autovetor alvo.
    """

    index: int
    energy: float
    hz: float | None
    label: str
    weight: float
    vector: np.ndarray = field(repr=False, compare=False)

    @property
    def omega(self) -> float:
        return self.energy


def dominant_label(vector: np.ndarray, basis: TwoParticleBasis | None = None) -> tuple:
    """Rótulo e peso do estado dominante; empate entre dois estados vira |+⟩ ou |−⟩."""
    pesos = np.abs(vector) ** 2
    ordem = np.argsort(pesos)[::-1]
    primeiro = int(ordem[0])
    if len(pesos) > 1 and pesos[ordem[0]] - pesos[ordem[1]] < TIE_TOLERANCE:
        segundo = int(ordem[1])
        produto = vector[primeiro] * np.conj(vector[segundo])
        return ("|+⟩" if produto.real > 0 else "|−⟩"), float(pesos[primeiro])
    nome = basis.label(primeiro) if basis is not None else str(primeiro)
    return nome, float(pesos[primeiro])


def resonance_predictions(matrix, basis=None, units=None, window=None) -> list:
    """
    Frequências de ressonância previstas pelos gaps λ_i - λ_0 da matriz em Q₀.

    Parâmetros:
        matrix (ndarray): Matriz hermitiana do hamiltoniano de sítio.
        basis (TwoParticleBasis, opcional): Base, para rotular os alvos.
        units (UnitSystem, opcional): Sistema de unidades para a conversão em Hz.
        window (tuple, opcional): Intervalo (ω_min, ω_max) em E_R/hbar; fora
            dele as previsões são descartadas.

    Retorna:
        list[ResonancePrediction]: Em ordem crescente de frequência.
    """
    valores, vetores = np.linalg.eigh(np.asarray(matrix))
    previsoes = []
    for i in range(1, len(valores)):
        energia = float(valores[i] - valores[0])
        if window is not None and not (window[0] <= energia <= window[1]):
            continue
        rotulo, peso = dominant_label(vetores[:, i], basis)
        previsoes.append(
            ResonancePrediction(
                index=i,
                energy=energia,
                hz=float(units.to_hz(energia)) if units is not None else None,
                label=rotulo,
                weight=peso,
                vector=vetores[:, i],
            )
        )
    return previsoes
