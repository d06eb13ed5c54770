"""
Diagonalização exata de uma cadeia de sítios com orbitais s/p.

Modos (sítio, orbital) são numerados como sítio·n_orbitais + orbital. O
hamiltoniano é a soma dos termos de sítio (energias e interações W) com o
tunelamento -J entre vizinhos ao longo do eixo da cadeia.
"""

import itertools
import logging
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import sparse
from scipy.linalg import eigh_tridiagonal
from scipy.sparse.linalg import ArpackNoConvergence, eigsh

from . import conf
from .exceptions import ConvergenceError, DimensionGuardError, InvalidParameterError
from .hubbard import HubbardParams, ParamLayout, parameter_table, sort_orbitals, table_grid
from .onsite import ladder, quartet_operators

logger = logging.getLogger(__name__)

MAX_MODES = 16
DENSE_LIMIT = 64
RESIDUAL_TOLERANCE = 1e-8
# Magnus de quarta ordem sem comutadores
MAGNUS_A1 = (3 - 2 * math.sqrt(3)) / 12
MAGNUS_A2 = (3 + 2 * math.sqrt(3)) / 12
MAGNUS_C1 = 0.5 - math.sqrt(3) / 6
MAGNUS_C2 = 0.5 + math.sqrt(3) / 6


def _compositions(particles, modes):
    if modes == 1:
        yield (particles,)
        return
    for primeiro in range(particles, -1, -1):
        for resto in _compositions(particles - primeiro, modes - 1):
            yield (primeiro, *resto)


@dataclass(frozen=True, eq=False)
class FockBasis:
    """
    Base de números de ocupação com N bósons em L sítios.

    Atributos:
        sites (int): Número de sítios L.
        orbitals (tuple): Orbitais por sítio.
        particles (int): Número total N.
        states (ndarray): Ocupações, forma (dim, L·n_orbitais), em ordem lexicográfica decrescente.
    """

    sites: int
    orbitals: tuple
    particles: int
    states: np.ndarray = field(repr=False)
    _lookup: dict = field(default=None, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "_lookup", {tuple(s): i for i, s in enumerate(self.states.tolist())})

    @property
    def dimension(self) -> int:
        return len(self.states)

    @property
    def modes(self) -> int:
        return self.sites * len(self.orbitals)

    def __len__(self):
        return len(self.states)

    def mode(self, site: int, orbital) -> int:
        return site * len(self.orbitals) + self.orbitals.index(orbital)

    def index(self, occupation) -> int:
        try:
            return self._lookup[tuple(occupation)]
        except KeyError:
            raise InvalidParameterError(f"Ocupação {tuple(occupation)} fora da base") from None

    def find(self, occupation):
        return self._lookup.get(tuple(occupation))

    @cached_property
    def site_numbers(self) -> np.ndarray:
        """Número de partículas por sítio em cada estado, forma (dim, L)."""
        return self.states.reshape(len(self), self.sites, len(self.orbitals)).sum(axis=2)

    @cached_property
    def orbital_numbers(self) -> np.ndarray:
        """Ocupações por (sítio, orbital), forma (dim, L, n_orbitais)."""
        return self.states.reshape(len(self), self.sites, len(self.orbitals))

    def number_operator(self) -> sparse.csr_matrix:
        return sparse.diags(self.states.sum(axis=1).astype(float), format="csr")


def build_fock_basis(L: int, orbital_set, N: int, max_dimension: int | None = None) -> FockBasis:
    """
    Enumera a base de Fock com N bósons em L sítios e os orbitais dados.

    Parâmetros:
        L (int): Número de sítios.
        orbital_set (iterável): Orbitais por sítio.
        N (int): Número de partículas.
        max_dimension (int, opcional): Limite da dimensão (padrão 2e5).

    Retorna:
        FockBasis: Dimensão C(N+M-1, M-1) com M = L·n_orbitais.

    Lança:
        DimensionGuardError: Se houver mais de 16 modos ou a dimensão exceder o limite.
        InvalidParameterError: Para L < 1, N < 0 ou conjunto de orbitais vazio.
    """
    max_dimension = max_dimension or conf.get("ED_MAX_DIMENSION")
    orbitais = sort_orbitals(orbital_set)
    if L < 1 or N < 0 or not orbitais:
        raise InvalidParameterError("É preciso L ≥ 1, N ≥ 0 e ao menos um orbital")
    modos = L * len(orbitais)
    if modos > MAX_MODES:
        raise DimensionGuardError(f"{modos} modos excedem o limite de {MAX_MODES}")
    dimensao = math.comb(N + modos - 1, modos - 1)
    if dimensao > max_dimension:
        raise DimensionGuardError(f"Dimensão {dimensao} excede o limite de {max_dimension}")

    estados = np.array(list(_compositions(N, modos)), dtype=np.int16).reshape(dimensao, modos)
    logger.info("Base de Fock: L=%d, N=%d, %d orbitais, dimensão %d", L, N, len(orbitais), dimensao)
    return FockBasis(sites=L, orbitals=orbitais, particles=N, states=estados)


@dataclass(frozen=True, eq=False)
class SparseHamiltonian:
    """
    Hamiltoniano esparso real na base de Fock.

    Atributos:
        matrix (csr_matrix): Matriz (E_R).
        hermitian (bool): Verdadeiro quando montado termo a termo com seus conjugados.
    """

    matrix: sparse.csr_matrix
    hermitian: bool = True

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    def entries(self):
        """Triplas (linha, coluna, valor) não nulas."""
        coo = self.matrix.tocoo()
        return list(zip(coo.row.tolist(), coo.col.tolist(), coo.data.tolist()))

    def __matmul__(self, other):
        return self.matrix @ other

    def hermiticity_error(self, u, v) -> float:
        return float(abs(np.vdot(u, self.matrix @ v) - np.vdot(self.matrix @ u, v)))


class ManyBodyTerms:
    """
    Matrizes de operador de cada entrada de um ParamLayout sobre um padrão esparso comum.

    ``combine(valores)`` devolve Σ_e valor_e · termo_e preenchendo apenas os
    dados do padrão; os índices CSR não mudam entre avaliações.
    """

    def __init__(self, basis: FockBasis, layout: ParamLayout, pbc: bool = True, chain_axis: str | None = None):
        for o in basis.orbitals:
            if o not in layout.orbitals:
                raise InvalidParameterError(f"Parâmetros não cobrem o orbital {o}")
        self.basis = basis
        self.layout = layout
        self.pbc = pbc
        self.chain_axis = chain_axis or conf.get("ED_CHAIN_AXIS")
        if self.chain_axis not in ("x", "y"):
            raise InvalidParameterError("O eixo da cadeia precisa ser x ou y")

        termos = [self._term(chave) for chave in layout.keys]
        padrao = sum((abs(t) for t in termos), sparse.csr_matrix((len(basis), len(basis))))
        padrao = padrao.tocsr()
        padrao.sum_duplicates()
        padrao.sort_indices()
        linhas = np.repeat(np.arange(len(basis)), np.diff(padrao.indptr))
        colunas = padrao.indices
        self.indptr = padrao.indptr
        self.indices = padrao.indices
        self.coefficients = np.array(
            [np.asarray(t[linhas, colunas]).ravel() for t in termos]
        ).reshape(len(termos), len(colunas))
        self.hopping_mask = np.array([chave[0] == "J" for chave in layout.keys])

    def bonds(self):
        L = self.basis.sites
        if L < 2:
            return []
        ligacoes = [(i, i + 1) for i in range(L - 1)]
        if self.pbc:
            ligacoes.append((L - 1, 0))
        return ligacoes

    def _term(self, chave) -> sparse.csr_matrix:
        base = self.basis
        dim = len(base)
        linhas, colunas, valores = [], [], []
        if chave[0] == "E":
            if chave[1] in base.orbitals:
                k = base.orbitals.index(chave[1])
                diagonal = base.orbital_numbers[:, :, k].sum(axis=1).astype(float)
                return sparse.diags(diagonal, format="csr")
            return sparse.csr_matrix((dim, dim))

        if chave[0] == "W":
            if any(o not in base.orbitals for o in chave[1]):
                return sparse.csr_matrix((dim, dim))
            sequencias = quartet_operators(tuple(base.orbitals.index(o) for o in chave[1]))
            for j, estado in enumerate(base.states.tolist()):
                for sitio in range(base.sites):
                    deslocamento = sitio * len(base.orbitals)
                    for a, b, c, d in sequencias:
                        resultado = ladder(
                            estado,
                            (a + deslocamento, b + deslocamento),
                            (c + deslocamento, d + deslocamento),
                        )
                        if resultado is None:
                            continue
                        linhas.append(base.index(resultado[0]))
                        colunas.append(j)
                        valores.append(0.5 * resultado[1])
        else:
            _, direcao, banda = chave
            if direcao == self.chain_axis:
                orbitais = [k for k, o in enumerate(base.orbitals) if o.band(direcao) == banda]
                for j, estado in enumerate(base.states.tolist()):
                    for i, vizinho in self.bonds():
                        for k in orbitais:
                            origem = i * len(base.orbitals) + k
                            destino = vizinho * len(base.orbitals) + k
                            for criar, aniquilar in ((destino, origem), (origem, destino)):
                                resultado = ladder(estado, (criar,), (aniquilar,))
                                if resultado is None:
                                    continue
                                linhas.append(base.index(resultado[0]))
                                colunas.append(j)
                                valores.append(-resultado[1])
        return sparse.csr_matrix((valores, (linhas, colunas)), shape=(dim, dim))

    def combine(self, values) -> sparse.csr_matrix:
        dados = np.asarray(values, dtype=float) @ self.coefficients
        return sparse.csr_matrix((dados, self.indices, self.indptr), shape=(len(self.basis),) * 2)


def assemble_hamiltonian(
    basis: FockBasis, params: HubbardParams, pbc: bool = True, chain_axis: str | None = None
) -> SparseHamiltonian:
    """
    Monta o hamiltoniano completo na base de Fock.

    Parâmetros:
        basis (FockBasis): Base.
        params (HubbardParams): Coeficientes na geometria corrente.
        pbc (bool): Condição periódica de contorno.
        chain_axis (str, opcional): Direção da cadeia ("x" por padrão).

    Retorna:
        SparseHamiltonian: Com tunelamento -J ao longo da cadeia e todos os termos de sítio.

    Lança:
        InvalidParameterError: Se os orbitais da base não estiverem nos parâmetros.
    """
    termos = ManyBodyTerms(basis, params.layout, pbc, chain_axis)
    return SparseHamiltonian(termos.combine(params.values))


@dataclass(frozen=True, eq=False)
class GroundState:
    vector: np.ndarray
    energy: float
    residual: float


def ground_state(H, tol: float = RESIDUAL_TOLERANCE, maxiter: int | None = None) -> GroundState:
    """
    Menor autopar de um hamiltoniano hermitiano.

    Usa Lanczos (``eigsh``, autovalor algébrico mínimo) e, para matrizes
    pequenas, diagonalização densa.

    Lança:
        ConvergenceError: Se o Lanczos não convergir ou o resíduo ‖Hψ - Eψ‖
            passar de ``tol``.
    """
    matriz = H.matrix if isinstance(H, SparseHamiltonian) else H
    dim = matriz.shape[0]
    if dim <= DENSE_LIMIT:
        denso = matriz.toarray() if sparse.issparse(matriz) else np.asarray(matriz)
        valores, vetores = np.linalg.eigh(denso)
        energia, vetor = float(valores[0]), vetores[:, 0]
    else:
        try:
            valores, vetores = eigsh(matriz, k=1, which="SA", tol=1e-12, maxiter=maxiter)
        except ArpackNoConvergence as exc:
            raise ConvergenceError("Lanczos não convergiu para o estado fundamental") from exc
        energia, vetor = float(valores[0]), vetores[:, 0]
    vetor = vetor / np.linalg.norm(vetor)
    vetor = vetor * np.sign(vetor[np.argmax(np.abs(vetor))])
    residuo = float(np.linalg.norm(matriz @ vetor - energia * vetor))
    if residuo > tol:
        raise ConvergenceError(f"Resíduo do estado fundamental {residuo:.3g} acima de {tol:.0e}")
    return GroundState(vector=vetor.astype(complex), energy=energia, residual=residuo)


def krylov_expm(matvec, v, dt: float, tol: float, max_dim: int):
    """
    exp(-i dt H) v por Lanczos com subespaço adaptativo.

    Retorna:
        tuple: (vetor, dimensão usada, estimativa de erro).

    Lança:
        ConvergenceError: Se o erro estimado não atingir ``tol`` com ``max_dim`` vetores.
    """
    beta0 = np.linalg.norm(v)
    if beta0 == 0:
        return np.zeros_like(v), 0, 0.0
    n = len(v)
    base = np.zeros((max_dim + 1, n), dtype=complex)
    base[0] = v / beta0
    alfas, betas = [], []
    w = matvec(base[0])
    erro = np.inf
    for m in range(1, max_dim + 1):
        alfa = float(np.real(np.vdot(base[m - 1], w)))
        w = w - alfa * base[m - 1]
        if m > 1:
            w = w - betas[-1] * base[m - 2]
        # reortogonalização completa
        w = w - base[:m].T @ (base[:m].conj() @ w)
        b = float(np.linalg.norm(w))
        alfas.append(alfa)
        if m == 1:
            valores, vetores = np.array(alfas), np.ones((1, 1))
        else:
            valores, vetores = eigh_tridiagonal(np.array(alfas), np.array(betas))
        coeficientes = vetores @ (np.exp(-1j * dt * valores) * vetores[0])
        erro = beta0 * b * abs(coeficientes[-1])
        if erro <= tol or b < 1e-14:
            return beta0 * (base[:m].T @ coeficientes), m, erro
        betas.append(b)
        base[m] = w / b
        w = matvec(base[m])
    raise ConvergenceError(f"Krylov não atingiu tol={tol:.0e} com {max_dim} vetores (erro {erro:.3g})")


class ManyBodyDrive:
    """
    H(t) da cadeia sob vibração periódica, com tabela de parâmetros ao longo do caminho.

    Parâmetros:
        terms (ManyBodyTerms): Termos de operador.
        drive (Drive): Acionamento.
        hopping_scale (float): Multiplica todos os J (zero desacopla os sítios).
    """

    def __init__(self, terms: ManyBodyTerms, drive, hopping_scale: float = 1.0, points=None):
        self.terms = terms
        self.drive = drive
        if drive.amplitude > 0:
            grade = table_grid(-drive.amplitude - 1e-9, drive.amplitude + 1e-9, points)
        else:
            grade = np.array([0.0])
        self.table = parameter_table(drive.base, drive.path, grade, terms.layout.orbitals)
        self.scale = np.where(terms.hopping_mask, hopping_scale, 1.0)

    def values(self, t: float) -> np.ndarray:
        return self.table.vector(float(self.drive.excursion(t))) * self.scale

    def __call__(self, t: float) -> sparse.csr_matrix:
        return self.terms.combine(self.values(t))

    def static(self) -> sparse.csr_matrix:
        return self.terms.combine(self.table.vector(0.0) * self.scale)


@dataclass(frozen=True, eq=False)
class ManyBodyTrajectory:
    """
    Observáveis ao longo da evolução de muitos corpos.

    Atributos:
        times (ndarray): Instantes (hbar/E_R).
        occupations (ndarray): ⟨n_{i,σ}⟩, forma (amostras, L, n_orbitais).
        variances (ndarray): Var(n_i) por sítio, forma (amostras, L).
        energy (ndarray): ⟨H(t)⟩.
        norm_error (ndarray): |‖ψ‖ - 1|.
        particle_drift (ndarray): |⟨N⟩ - N|.
        orbitals (tuple): Orbitais por sítio.
        final_state (ndarray): Estado no último instante.
    """

    times: np.ndarray
    occupations: np.ndarray
    variances: np.ndarray
    energy: np.ndarray
    norm_error: np.ndarray
    particle_drift: np.ndarray
    orbitals: tuple
    final_state: np.ndarray = field(repr=False)

    @property
    def sites(self) -> int:
        return self.occupations.shape[1]

    def transfer_curve(self) -> np.ndarray:
        """Fração dos átomos fora do orbital s, média sobre os sítios."""
        total = self.occupations.sum(axis=(1, 2))
        s = self.occupations[:, :, 0].sum(axis=1)
        return (total - s) / total


def _observe(basis: FockBasis, psi, H):
    pesos = np.abs(psi) ** 2
    ocupacoes = np.einsum("k,kio->io", pesos, basis.orbital_numbers)
    numeros = basis.site_numbers
    media = pesos @ numeros
    variancia = pesos @ (numeros.astype(float) ** 2) - media**2
    energia = float(np.real(np.vdot(psi, H @ psi)))
    norma = float(np.linalg.norm(psi))
    particulas = float(pesos @ basis.states.sum(axis=1))
    return ocupacoes, variancia, energia, abs(norma - 1), abs(particulas - basis.particles * norma**2)


def evolve_manybody(
    basis: FockBasis,
    H_of_t,
    psi0,
    t_span,
    tol: float | None = None,
    step: float | None = None,
    omega: float | None = None,
    max_dim: int | None = None,
    record_every: int = 1,
) -> ManyBodyTrajectory:
    """
    Propaga ψ com Magnus de quarta ordem sem comutadores e exponenciais de Krylov.

    Parâmetros:
        basis (FockBasis): Base.
        H_of_t (callable): t → matriz esparsa (E_R).
        psi0 (array_like): Estado inicial normalizado.
        t_span (tuple): (t0, t1) em hbar/E_R.
        tol (float, opcional): Erro por exponencial (padrão 1e-10).
        step (float, opcional): Passo; padrão 2π/(40ω) quando ``omega`` é dado.
        omega (float, opcional): Frequência do acionamento.
        max_dim (int, opcional): Dimensão máxima do subespaço (padrão 30).
        record_every (int): Registra observáveis a cada tantos passos.

    Retorna:
        ManyBodyTrajectory: Ocupações, variâncias, energia e deriva da norma.

    Lança:
        InvalidParameterError: Se ψ₀ não estiver normalizado ou faltar o passo.
        ConvergenceError: Se uma exponencial não atingir a tolerância.
    """
    tol = tol or conf.get("KRYLOV_TOL")
    max_dim = max_dim or conf.get("KRYLOV_MAX_DIM")
    psi = np.asarray(psi0, dtype=complex)
    if abs(np.linalg.norm(psi) - 1) > 1e-8:
        raise InvalidParameterError("O estado inicial precisa estar normalizado")
    t0, t1 = map(float, t_span)
    if step is None:
        if omega is None:
            raise InvalidParameterError("Informe o passo ou a frequência do acionamento")
        step = 2 * math.pi / (conf.get("KRYLOV_STEPS_PER_PERIOD") * omega)
    passos = max(1, int(math.ceil((t1 - t0) / step))) if t1 > t0 else 0
    h = (t1 - t0) / passos if passos else 0.0

    # deslocamento constante de energia: só muda a fase global
    deslocamento = float(np.real(np.vdot(psi, H_of_t(t0) @ psi)))
    identidade = sparse.identity(len(basis), format="csr")

    registros = {"times": [], "occ": [], "var": [], "energy": [], "norm": [], "drift": []}

    def registrar(t, estado):
        ocupacoes, variancia, energia, norma, deriva = _observe(basis, estado, H_of_t(t))
        registros["times"].append(t)
        registros["occ"].append(ocupacoes)
        registros["var"].append(variancia)
        registros["energy"].append(energia)
        registros["norm"].append(norma)
        registros["drift"].append(deriva)

    registrar(t0, psi)
    for n in range(passos):
        t = t0 + n * h
        h1 = H_of_t(t + MAGNUS_C1 * h) - deslocamento * identidade
        h2 = H_of_t(t + MAGNUS_C2 * h) - deslocamento * identidade
        primeiro = MAGNUS_A2 * h1 + MAGNUS_A1 * h2
        segundo = MAGNUS_A1 * h1 + MAGNUS_A2 * h2
        psi, _, _ = krylov_expm(lambda x: primeiro @ x, psi, h, tol, max_dim)
        psi, _, _ = krylov_expm(lambda x: segundo @ x, psi, h, tol, max_dim)
        if (n + 1) % record_every == 0 or n + 1 == passos:
            registrar(t + h, psi)
    logger.info("Evolução de muitos corpos: %d passos de %.4g", passos, h)

    return ManyBodyTrajectory(
        times=np.array(registros["times"]),
        occupations=np.array(registros["occ"]),
        variances=np.array(registros["var"]),
        energy=np.array(registros["energy"]),
        norm_error=np.array(registros["norm"]),
        particle_drift=np.array(registros["drift"]),
        orbitals=basis.orbitals,
        final_state=psi,
    )


def mott_weight(basis: FockBasis, psi, filling: int = 2) -> float:
    """Peso dos estados com exatamente ``filling`` átomos em s em cada sítio."""
    s = basis.orbital_numbers[:, :, 0]
    mascara = np.all(s == filling, axis=1)
    return float(np.sum(np.abs(psi[mascara]) ** 2))


def excited_occupation(basis: FockBasis, psi) -> float:
    """Ocupação total dos orbitais além de s."""
    pesos = np.abs(psi) ** 2
    return float(pesos @ basis.orbital_numbers[:, :, 1:].sum(axis=(1, 2)))


def onsite_product(basis: FockBasis, site_vector: np.ndarray, site_basis: FockBasis) -> np.ndarray:
    """Produto tensorial do mesmo estado de sítio em todos os sítios, expresso na base da cadeia."""
    vetor = np.zeros(len(basis), dtype=complex)
    for combinacao in itertools.product(range(len(site_basis)), repeat=basis.sites):
        amplitude = np.prod([site_vector[k] for k in combinacao])
        if amplitude == 0:
            continue
        ocupacao = np.concatenate([site_basis.states[k] for k in combinacao])
        indice = basis.find(ocupacao)
        if indice is not None:
            vetor[indice] += amplitude
    return vetor


def parity_sector(basis: FockBasis) -> np.ndarray:
    """Índices dos estados com paridade total par em x e em y."""
    nx = np.array([o.nx for o in basis.orbitals] * basis.sites)
    ny = np.array([o.ny for o in basis.orbitals] * basis.sites)
    return np.nonzero(((basis.states @ nx) % 2 == 0) & ((basis.states @ ny) % 2 == 0))[0]


__all__ = [
    "FockBasis",
    "SparseHamiltonian",
    "ManyBodyTerms",
    "ManyBodyDrive",
    "ManyBodyTrajectory",
    "build_fock_basis",
    "assemble_hamiltonian",
    "ground_state",
    "evolve_manybody",
    "krylov_expm",
    "mott_weight",
    "excited_occupation",
    "onsite_product",
    "parity_sector",
]
