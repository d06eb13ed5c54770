"""
Integração da equação de Schrödinger dependente do tempo no modelo de sítio.

Tempos em hbar/E_R e frequências angulares em E_R/hbar. O hamiltoniano ao
longo de um acionamento é tabelado por spline cúbica no parâmetro escalar do
caminho, o que evita resolver as bandas a cada passo.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline

from . import conf
from .exceptions import IntegrationError, InvalidParameterError, TableRangeError
from .hubbard import LatticeGeometry, LinearPath, parameter_table, table_grid
from .onsite import TwoParticleBasis, operator_terms

logger = logging.getLogger(__name__)

DRIVE_KINDS = ("lattice", "kappa", "g")
PATTERNS = {
    "x": (1.0, 0.0, 0.0, 0.0),
    "y": (0.0, 1.0, 0.0, 0.0),
    "+": (1.0, 1.0, 0.0, 0.0),
    "-": (1.0, -1.0, 0.0, 0.0),
}
NORM_TOLERANCE = 1e-8
TABLE_MARGIN = 1e-9


@dataclass(frozen=True)
class Drive:
    """
    Modulação periódica da geometria: Q(t) = Q₀ + d·A·sin(ωt + φ).

    Atributos:
        base (LatticeGeometry): Geometria de equilíbrio Q₀ e g.
        omega (float): Frequência angular ω (E_R/hbar).
        amplitude (float): Amplitude A (E_R para a rede; adimensional para κ e g).
        kind (str): "lattice", "kappa" ou "g".
        pattern (str): Direção da vibração da rede: "x", "y", "+" ou "-".
        phase (float): Fase φ em t=0.
    """

    base: LatticeGeometry
    omega: float
    amplitude: float
    kind: str = "lattice"
    pattern: str = "x"
    phase: float = 0.0

    def __post_init__(self):
        if self.kind not in DRIVE_KINDS:
            raise InvalidParameterError(f"Tipo de acionamento '{self.kind}' inválido")
        if self.kind == "lattice" and self.pattern not in PATTERNS:
            raise InvalidParameterError(f"Padrão de vibração '{self.pattern}' inválido")
        if not (math.isfinite(self.omega) and self.omega > 0):
            raise InvalidParameterError("A frequência do acionamento precisa ser positiva")
        if not (math.isfinite(self.amplitude) and self.amplitude >= 0):
            raise InvalidParameterError("A amplitude do acionamento não pode ser negativa")

    @property
    def direction(self) -> tuple:
        if self.kind == "kappa":
            return (0.0, 0.0, 1.0, 0.0)
        if self.kind == "g":
            return (0.0, 0.0, 0.0, 1.0)
        return PATTERNS[self.pattern]

    @property
    def path(self) -> LinearPath:
        return LinearPath(self.base, self.direction)

    @property
    def period(self) -> float:
        return 2 * math.pi / self.omega

    def excursion(self, t):
        return self.amplitude * np.sin(self.omega * t + self.phase)

    def geometry(self, t: float) -> LatticeGeometry:
        return self.path.geometry(float(self.excursion(t)))

    def with_omega(self, omega: float) -> "Drive":
        return Drive(self.base, omega, self.amplitude, self.kind, self.pattern, self.phase)


class TabulatedHamiltonian:
    """
    Matriz do hamiltoniano de sítio interpolada ao longo de um caminho de geometrias.

    As matrizes são lineares nas entradas dos parâmetros, então a spline das
    matrizes coincide com a matriz montada a partir das entradas interpoladas.
    Um deslocamento constante (traço médio em ``reference``) é subtraído: só
    muda a fase global.
    """

    def __init__(self, basis: TwoParticleBasis, path, low: float, high: float, points=None, reference=None):
        self.basis = basis
        self.path = path
        if high - low > 0:
            grade = table_grid(low - TABLE_MARGIN, high + TABLE_MARGIN, points)
        else:
            grade = np.array([low])
        self.table = parameter_table(path.base, path, grade, basis.orbitals)
        termos = operator_terms(basis, self.table.layout)
        matrizes = np.tensordot(self.table.data, termos, axes=1)
        matrizes = 0.5 * (matrizes + np.swapaxes(matrizes, 1, 2))
        self._matrices = matrizes
        self._spline = CubicSpline(self.table.grid, matrizes, axis=0) if len(grade) > 1 else None
        referencia = low if reference is None else reference
        self.shift = float(np.trace(self.exact(referencia))) / len(basis)

    @property
    def bounds(self):
        return self.table.bounds

    def exact(self, value: float) -> np.ndarray:
        self.table.check(value)
        if self._spline is None:
            return self._matrices[0]
        return self._spline(value)

    def matrix(self, value: float) -> np.ndarray:
        """Matriz com o deslocamento de fase global removido."""
        return self.exact(value) - self.shift * np.eye(len(self.basis))


class DrivenHamiltonian:
    """H(t) de um acionamento periódico, chamável como ``H(t)``."""

    def __init__(self, basis: TwoParticleBasis, drive: Drive, points=None, tabulated=None):
        self.drive = drive
        self.tabulated = tabulated or TabulatedHamiltonian(
            basis, drive.path, -drive.amplitude, drive.amplitude, points, reference=0.0
        )

    @property
    def basis(self):
        return self.tabulated.basis

    @property
    def max_step(self) -> float:
        return self.drive.period / 4

    def static(self) -> np.ndarray:
        """Matriz completa em Q₀ (sem deslocamento)."""
        return self.tabulated.exact(0.0)

    def __call__(self, t: float) -> np.ndarray:
        return self.tabulated.matrix(float(self.drive.excursion(t)))


@dataclass(frozen=True, eq=False)
class Trajectory:
    """
    Amostras da evolução temporal.

    Atributos:
        times (ndarray): Instantes (hbar/E_R).
        states (ndarray): Amplitudes, forma (amostras, dim).
        basis (TwoParticleBasis | None): Base dos estados.
        reference (ndarray | None): Estado de referência para a eficiência.
        error_estimate (float | None): Estimativa do erro nas ocupações finais.
    """

    times: np.ndarray
    states: np.ndarray
    basis: TwoParticleBasis | None = None
    reference: np.ndarray | None = field(default=None, repr=False)
    error_estimate: float | None = None
    events: tuple = ()

    def __len__(self):
        return len(self.times)

    @property
    def occupations(self) -> np.ndarray:
        return np.abs(self.states) ** 2

    @property
    def norm_error(self) -> np.ndarray:
        return np.abs(np.linalg.norm(self.states, axis=1) - 1)

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    @property
    def final_time(self) -> float:
        return float(self.times[-1])

    @property
    def labels(self):
        if self.basis is None:
            return [str(i) for i in range(self.states.shape[1])]
        return self.basis.labels

    def projection(self, vector) -> np.ndarray:
        """|⟨v|ψ(t)⟩|² em cada amostra."""
        return np.abs(self.states @ np.conj(np.asarray(vector))) ** 2

    def concatenate(self, other: "Trajectory") -> "Trajectory":
        """Junta duas trajetórias contíguas descartando a amostra repetida na emenda."""
        if len(self) == 0:
            return other
        inicio = 1 if len(other) and np.isclose(other.times[0], self.times[-1], rtol=0, atol=1e-12) else 0
        return Trajectory(
            times=np.concatenate([self.times, other.times[inicio:]]),
            states=np.concatenate([self.states, other.states[inicio:]]),
            basis=self.basis,
            reference=self.reference,
            events=self.events + other.events,
        )

    @classmethod
    def single(cls, state, time=0.0, basis=None, reference=None) -> "Trajectory":
        return cls(
            times=np.array([float(time)]),
            states=np.asarray(state, dtype=complex)[None, :],
            basis=basis,
            reference=reference,
        )


def reference_state(matrix) -> np.ndarray:
    """
    Autovetor fundamental de uma matriz de sítio, com a maior componente real e positiva.

    É o |2s⟩ preparado na geometria de equilíbrio.
    """
    _, vetores = np.linalg.eigh(matrix)
    vetor = vetores[:, 0].astype(complex)
    maior = np.argmax(np.abs(vetor))
    return vetor * np.exp(-1j * np.angle(vetor[maior]))


def occupation_event(vector, threshold: float):
    """
    Evento terminal quando |⟨v|ψ⟩|² cai até ``threshold``.

    Usado para as condições de parada por depleção.
    """
    vetor = np.conj(np.asarray(vector, dtype=complex))
    dim = len(vetor)

    def evento(t, y):
        psi = y[:dim] + 1j * y[dim:]
        return float(np.abs(vetor @ psi) ** 2 - threshold)

    evento.terminal = True
    evento.direction = -1
    return evento


def _integrate(H_of_t, psi0, t_span, rtol, atol, t_eval, events, max_step):
    dim = len(psi0)

    def rhs(t, y):
        try:
            h = np.asarray(H_of_t(t))
        except TableRangeError as exc:
            raise IntegrationError(f"Excursão fora da tabela: {exc}", time=float(t)) from exc
        re, im = y[:dim], y[dim:]
        # i dψ/dt = Hψ com H = A + iB hermitiana
        if np.iscomplexobj(h):
            a, b = h.real, h.imag
            return np.concatenate([a @ im + b @ re, b @ im - a @ re])
        return np.concatenate([h @ im, -(h @ re)])

    y0 = np.concatenate([psi0.real, psi0.imag])
    solucao = solve_ivp(
        rhs,
        t_span,
        y0,
        method="DOP853",
        t_eval=t_eval,
        rtol=rtol,
        atol=atol,
        events=events,
        max_step=max_step,
    )
    if solucao.status == -1:
        ultimo = float(solucao.t[-1]) if len(solucao.t) else float(t_span[0])
        raise IntegrationError(f"Integrador falhou: {solucao.message}", time=ultimo)

    tempos = np.asarray(solucao.t, dtype=float)
    estados = (solucao.y[:dim] + 1j * solucao.y[dim:]).T
    disparos = ()
    if events and solucao.status == 1:
        for t_evento, y_evento in zip(solucao.t_events, solucao.y_events):
            if len(t_evento):
                disparos += (float(t_evento[0]),)
                if not len(tempos) or t_evento[0] > tempos[-1]:
                    tempos = np.append(tempos, t_evento[0])
                    estado = y_evento[0][:dim] + 1j * y_evento[0][dim:]
                    estados = np.vstack([estados, estado[None, :]])
    return tempos, estados, disparos


def evolve(
    H_of_t,
    psi0,
    t_span,
    rtol: float | None = None,
    atol: float | None = None,
    samples: int | None = None,
    t_eval=None,
    events=None,
    max_step: float = np.inf,
    basis: TwoParticleBasis | None = None,
    reference=None,
    estimate_error: bool = False,
) -> Trajectory:
    """
    Integra i dψ/dt = H(t)ψ com Runge-Kutta adaptativo (DOP853) sem renormalizar.

    Parâmetros:
        H_of_t (callable): t → matriz real simétrica (E_R).
        psi0 (array_like | QuantumState): Estado inicial normalizado.
        t_span (tuple): (t0, t1) em hbar/E_R; t1 < t0 integra para trás.
        rtol, atol (float, opcional): Tolerâncias (padrão 1e-9 e 1e-12).
        samples (int, opcional): Número de amostras uniformes (padrão 2001).
        t_eval (array_like, opcional): Instantes de amostragem explícitos.
        events (list, opcional): Eventos terminais no formato de ``solve_ivp``.
        max_step (float): Passo máximo.
        basis (TwoParticleBasis, opcional): Base para rotular as ocupações.
        reference (array_like, opcional): Estado de referência da eficiência.
        estimate_error (bool): Repete a integração com tolerância dez vezes
            menor e reporta a maior diferença de ocupação entre as amostras.

    Retorna:
        Trajectory: Amostras; se um evento terminal disparar, a última amostra
            é o instante do disparo.

    Lança:
        InvalidParameterError: Se ψ₀ não estiver normalizado.
        IntegrationError: Se o integrador falhar ou o acionamento sair da tabela.
    """
    rtol = rtol or conf.get("RTOL")
    atol = atol or conf.get("ATOL")
    if hasattr(psi0, "amplitudes"):
        basis = basis or psi0.basis
        psi0 = psi0.amplitudes
    psi0 = np.asarray(psi0, dtype=complex)
    if abs(np.linalg.norm(psi0) - 1) > NORM_TOLERANCE:
        raise InvalidParameterError("O estado inicial precisa estar normalizado")

    t0, t1 = float(t_span[0]), float(t_span[1])
    if t0 == t1:
        return Trajectory.single(psi0, t0, basis, reference)
    if t_eval is None:
        t_eval = np.linspace(t0, t1, samples or conf.get("SCAN_SAMPLES"))

    tempos, estados, disparos = _integrate(H_of_t, psi0, (t0, t1), rtol, atol, t_eval, events, max_step)

    estimativa = None
    if estimate_error:
        _, refinados, _ = _integrate(H_of_t, psi0, (t0, t1), rtol / 10, atol / 10, tempos, None, max_step)
        estimativa = float(np.max(np.abs(np.abs(refinados) ** 2 - np.abs(estados[: len(refinados)]) ** 2)))

    trajetoria = Trajectory(
        times=tempos,
        states=estados,
        basis=basis,
        reference=None if reference is None else np.asarray(reference, dtype=complex),
        error_estimate=estimativa,
        events=disparos,
    )
    deriva = float(np.max(trajetoria.norm_error)) if len(trajetoria) else 0.0
    if deriva > NORM_TOLERANCE:
        logger.warning("Deriva da norma %.3g acima de %.0e", deriva, NORM_TOLERANCE)
    logger.debug("Evolução em [%.6g, %.6g] com %d amostras", t0, tempos[-1], len(tempos))
    return trajetoria


def transfer_efficiency(traj: Trajectory, initial=None) -> float:
    """
    Maior depleção do estado inicial ao longo da trajetória.

    Parâmetros:
        traj (Trajectory): Trajetória não vazia.
        initial (int | array_like, opcional): Índice de base ou vetor de
            referência; padrão a referência da trajetória ou o índice 0.

    Retorna:
        float: max_t (1 - ocupação do inicial), em [0, 1].
    """
    if len(traj) == 0:
        raise InvalidParameterError("Trajetória vazia")
    if initial is None:
        initial = traj.reference if traj.reference is not None else 0
    if np.ndim(initial) == 0:
        ocupacao = traj.occupations[:, int(initial)]
    else:
        ocupacao = traj.projection(initial)
    return float(np.clip(1 - np.min(ocupacao), 0.0, 1.0))


def drive_trajectory(
    basis: TwoParticleBasis,
    drive: Drive,
    duration: float,
    samples=None,
    points=None,
    tabulated=None,
    rtol: float | None = None,
    atol: float | None = None,
) -> Trajectory:
    """
    Evolui o estado fundamental de H(Q₀) sob um acionamento periódico.

    Parâmetros:
        basis (TwoParticleBasis): Base de sítio.
        drive (Drive): Acionamento.
        duration (float): Janela de observação (hbar/E_R).
        samples (int, opcional): Amostras da trajetória.
        points (int, opcional): Pontos da tabela de parâmetros.
        tabulated (TabulatedHamiltonian, opcional): Tabela já construída para o caminho.
        rtol, atol (float, opcional): Tolerâncias do integrador.

    Retorna:
        Trajectory: Com ``reference`` igual ao estado preparado.
    """
    hamiltoniano = DrivenHamiltonian(basis, drive, points, tabulated)
    inicial = reference_state(hamiltoniano.static())
    return evolve(
        hamiltoniano,
        inicial,
        (0.0, duration),
        samples=samples,
        rtol=rtol,
        atol=atol,
        max_step=hamiltoniano.max_step,
        basis=basis,
        reference=inicial,
    )
