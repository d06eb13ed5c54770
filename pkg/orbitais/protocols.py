"""
Protocolos de preparação de superposições orbitais.

Um protocolo é uma sequência contígua de segmentos: vibrações (com parada
por duração ou por meta de depleção), rampas de um parâmetro da geometria e
evolução livre. O estado passa de um segmento ao seguinte sem alteração.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import curve_fit

from . import conf
from .dynamics import (
    PATTERNS,
    Drive,
    TabulatedHamiltonian,
    Trajectory,
    evolve,
    occupation_event,
    reference_state,
)
from .exceptions import InvalidParameterError, TrackingLostError
from .hubbard import AXES, PX, PY, SP, AxisPath, LatticeGeometry, LinearPath, compute_params
from .onsite import TwoParticleBasis, build_basis, dominant_label, hamiltonian_matrix, resonance_predictions
from .scan import locate_resonance
from .units import get_preset

logger = logging.getLogger(__name__)

RAMP_SHAPES = ("raised-cosine", "linear")
VIBRATION_AXES = ("x", "y", "+", "-", "kappa", "g")
PHASE_UNDEFINED = 1e-6
VORTEX_OCCUPATION = 0.02
VORTEX_PHASE = 0.05
TRACKING_OVERLAP = 0.5


@dataclass(frozen=True)
class Vibrate:
    """
    Vibração senoidal em torno da geometria corrente.

    Atributos:
        omega (float): Frequência angular (E_R/hbar).
        amplitude (float): Amplitude (E_R, ou adimensional para kappa e g).
        axis (str): "x", "y", "+", "-", "kappa" ou "g".
        duration (float | None): Duração fixa (hbar/E_R).
        depletion (float | None): Meta de depleção do estado de referência, em (0, 1].
        max_duration (float | None): Limite de tempo quando a parada é por depleção.
        samples (int | None): Amostras do segmento.
    """

    omega: float
    amplitude: float
    axis: str = "x"
    duration: float | None = None
    depletion: float | None = None
    max_duration: float | None = None
    samples: int | None = None

    kind = "vibrate"

    def __post_init__(self):
        if self.axis not in VIBRATION_AXES:
            raise InvalidParameterError(f"Eixo de vibração '{self.axis}' inválido")
        if not self.omega > 0:
            raise InvalidParameterError("A frequência da vibração precisa ser positiva")
        if self.amplitude < 0:
            raise InvalidParameterError("A amplitude da vibração não pode ser negativa")
        if (self.duration is None) == (self.depletion is None):
            raise InvalidParameterError("Informe duração fixa ou meta de depleção, não ambas")
        if self.depletion is not None:
            if not 0 < self.depletion <= 1:
                raise InvalidParameterError("A meta de depleção precisa estar em (0, 1]")
            if self.max_duration is None or self.max_duration <= 0:
                raise InvalidParameterError("A meta de depleção exige uma duração máxima positiva")
        elif self.duration < 0:
            raise InvalidParameterError("A duração não pode ser negativa")

    @property
    def direction(self) -> tuple:
        if self.axis == "kappa":
            return (0.0, 0.0, 1.0, 0.0)
        if self.axis == "g":
            return (0.0, 0.0, 0.0, 1.0)
        return PATTERNS[self.axis]

    @property
    def span(self) -> float:
        return self.duration if self.duration is not None else self.max_duration

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "omega": self.omega,
            "amplitude": self.amplitude,
            "axis": self.axis,
            "duration": self.duration,
            "depletion": self.depletion,
            "max_duration": self.max_duration,
            "samples": self.samples,
        }


@dataclass(frozen=True)
class Ramp:
    """
    Rampa de um parâmetro da geometria de ``start`` a ``end``.

    Atributos:
        parameter (str): "q_x", "q_y", "kappa" ou "g".
        start (float): Valor inicial.
        end (float): Valor final.
        duration (float): Duração (hbar/E_R); zero é uma mudança súbita.
        shape (str): "raised-cosine" (derivada nula nas pontas) ou "linear".
        samples (int | None): Amostras do segmento.
    """

    parameter: str
    start: float
    end: float
    duration: float
    shape: str = "raised-cosine"
    samples: int | None = None

    kind = "ramp"

    def __post_init__(self):
        if self.parameter not in AXES:
            raise InvalidParameterError(f"Parâmetro de rampa '{self.parameter}' inválido")
        if self.shape not in RAMP_SHAPES:
            raise InvalidParameterError(f"Forma de rampa '{self.shape}' inválida")
        if self.duration < 0:
            raise InvalidParameterError("A duração da rampa não pode ser negativa")

    @property
    def span(self) -> float:
        return self.duration

    def value(self, t, t0: float = 0.0):
        """Valor do parâmetro no instante ``t`` para uma rampa iniciada em ``t0``."""
        if self.duration == 0:
            return np.full_like(np.asarray(t, dtype=float), self.end)
        tau = np.clip((np.asarray(t, dtype=float) - t0) / self.duration, 0.0, 1.0)
        if self.shape == "linear":
            fracao = tau
        else:
            fracao = (1 - np.cos(np.pi * tau)) / 2
        return self.start + (self.end - self.start) * fracao

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "parameter": self.parameter,
            "start": self.start,
            "end": self.end,
            "duration": self.duration,
            "shape": self.shape,
            "samples": self.samples,
        }


@dataclass(frozen=True)
class Hold:
    """Evolução livre na geometria corrente."""

    duration: float
    samples: int | None = None

    kind = "hold"

    def __post_init__(self):
        if self.duration < 0:
            raise InvalidParameterError("A duração não pode ser negativa")

    @property
    def span(self) -> float:
        return self.duration

    def to_dict(self) -> dict:
        return {"kind": self.kind, "duration": self.duration, "samples": self.samples}


SEGMENT_TYPES = {"vibrate": Vibrate, "ramp": Ramp, "hold": Hold}


def segment_from_dict(data: dict):
    dados = {k: v for k, v in data.items() if v is not None}
    tipo = dados.pop("kind", None)
    if tipo not in SEGMENT_TYPES:
        raise InvalidParameterError(f"Tipo de segmento '{tipo}' inválido")
    return SEGMENT_TYPES[tipo](**dados)


@dataclass(frozen=True)
class DriveProtocol:
    """
    Sequência de segmentos sobre uma geometria base.

    Atributos:
        base (LatticeGeometry): Geometria no início do protocolo.
        segments (tuple): Segmentos Vibrate, Ramp e Hold em ordem.
        orbitals (tuple): Orbitais do modelo de sítio.
    """

    base: LatticeGeometry
    segments: tuple = ()
    orbitals: tuple = SP

    def geometries(self):
        """Geometria corrente no início de cada segmento e ao final."""
        atual = self.base
        geometrias = [atual]
        for segmento in self.segments:
            if isinstance(segmento, Ramp):
                if not math.isclose(getattr(atual, segmento.parameter), segmento.start, abs_tol=1e-9):
                    raise InvalidParameterError(
                        f"Rampa de {segmento.parameter} começa em {segmento.start}, "
                        f"mas a geometria corrente tem {getattr(atual, segmento.parameter)}"
                    )
                atual = atual.replace(**{segmento.parameter: segmento.end})
            geometrias.append(atual)
        return geometrias

    def to_dict(self) -> dict:
        return {
            "base": dict(zip(AXES, self.base.as_tuple())),
            "orbitals": [o.name for o in self.orbitals],
            "segments": [s.to_dict() for s in self.segments],
        }


@dataclass(frozen=True)
class SegmentLog:
    """
    Registro de um segmento executado.

    Atributos:
        index (int): Posição no protocolo.
        kind (str): Tipo do segmento.
        start (float): Início (hbar/E_R).
        end (float): Fim efetivo (hbar/E_R).
        triggered (bool | None): Se a meta de depleção disparou; None sem meta.
        reference_occupation (float): Ocupação do estado de referência no fim.
    """

    index: int
    kind: str
    start: float
    end: float
    triggered: bool | None
    reference_occupation: float


@dataclass(frozen=True, eq=False)
class ProtocolRun:
    """
    Resultado de um protocolo.

    Atributos:
        protocol (DriveProtocol): Protocolo executado.
        trajectory (Trajectory): Trajetória contínua.
        log (tuple[SegmentLog]): Registro por segmento.
        geometries (tuple): Geometria no início de cada segmento e ao final.
        reference (ndarray): Estado de referência das metas de depleção.
    """

    protocol: DriveProtocol
    trajectory: Trajectory
    log: tuple
    geometries: tuple
    reference: np.ndarray = field(repr=False)

    @property
    def final_state(self) -> np.ndarray:
        return self.trajectory.final_state

    def segment_slice(self, index: int) -> Trajectory:
        """Parte da trajetória dentro de um segmento."""
        registro = self.log[index]
        tempos = self.trajectory.times
        mascara = (tempos >= registro.start - 1e-12) & (tempos <= registro.end + 1e-12)
        return Trajectory(
            times=tempos[mascara],
            states=self.trajectory.states[mascara],
            basis=self.trajectory.basis,
            reference=self.reference,
        )


class _ScheduledHamiltonian:
    def __init__(self, tabulated: TabulatedHamiltonian, schedule):
        self.tabulated = tabulated
        self.schedule = schedule

    def __call__(self, t):
        return self.tabulated.matrix(float(self.schedule(t)))


class _Sinusoid:
    def __init__(self, amplitude, omega, t0):
        self.amplitude, self.omega, self.t0 = amplitude, omega, t0

    def __call__(self, t):
        return self.amplitude * math.sin(self.omega * (t - self.t0))


class _RampSchedule:
    def __init__(self, ramp: Ramp, t0):
        self.ramp, self.t0 = ramp, t0

    def __call__(self, t):
        return float(self.ramp.value(t, self.t0))


def _static(basis, geometry):
    return hamiltonian_matrix(basis, compute_params(geometry, basis.orbitals))


def _ramp_table(basis, geometry, ramp: Ramp) -> TabulatedHamiltonian:
    baixo, alto = sorted((ramp.start, ramp.end))
    return TabulatedHamiltonian(basis, AxisPath(geometry, ramp.parameter), baixo, alto, reference=ramp.start)


def _segment_times(t0, span, samples):
    return np.linspace(t0, t0 + span, samples or conf.get("SCAN_SAMPLES"))


def _run_segment(indice, segmento, basis, geometria, psi, t0, reference, tolerancias=None):
    tolerancias = tolerancias or {}
    if isinstance(segmento, Vibrate):
        tabela = TabulatedHamiltonian(
            basis,
            LinearPath(geometria, segmento.direction),
            -segmento.amplitude,
            segmento.amplitude,
            reference=0.0,
        )
        hamiltoniano = _ScheduledHamiltonian(tabela, _Sinusoid(segmento.amplitude, segmento.omega, t0))
        eventos = None
        if segmento.depletion is not None:
            limite = 1 - segmento.depletion
            if np.abs(np.vdot(reference, psi)) ** 2 <= limite:
                parcial = Trajectory.single(psi, t0, basis, reference)
                return parcial, SegmentLog(indice, segmento.kind, t0, t0, True, float(np.abs(np.vdot(reference, psi)) ** 2))
            eventos = [occupation_event(reference, limite)]
        parcial = evolve(
            hamiltoniano,
            psi,
            (t0, t0 + segmento.span),
            t_eval=_segment_times(t0, segmento.span, segmento.samples),
            events=eventos,
            max_step=2 * math.pi / segmento.omega / 4,
            basis=basis,
            reference=reference,
            **tolerancias,
        )
        disparou = None
        if segmento.depletion is not None:
            disparou = bool(parcial.events)
            if disparou:
                logger.info(
                    "Segmento %d: meta de depleção %.4g atingida em t=%.6g", indice, segmento.depletion, parcial.events[0]
                )
            else:
                logger.warning(
                    "Segmento %d: meta de depleção %.4g não atingida em %.6g", indice, segmento.depletion, segmento.span
                )
    elif isinstance(segmento, Ramp):
        if segmento.duration == 0:
            parcial = Trajectory.single(psi, t0, basis, reference)
        else:
            tabela = _ramp_table(basis, geometria, segmento)
            parcial = evolve(
                _ScheduledHamiltonian(tabela, _RampSchedule(segmento, t0)),
                psi,
                (t0, t0 + segmento.duration),
                t_eval=_segment_times(t0, segmento.duration, segmento.samples),
                basis=basis,
                reference=reference,
                **tolerancias,
            )
        disparou = None
    else:
        matriz = _static(basis, geometria)
        deslocamento = np.trace(matriz) / len(basis) * np.eye(len(basis))
        estatica = matriz - deslocamento
        parcial = evolve(
            lambda t: estatica,
            psi,
            (t0, t0 + segmento.duration),
            t_eval=_segment_times(t0, segmento.duration, segmento.samples),
            basis=basis,
            reference=reference,
            **tolerancias,
        )
        disparou = None

    ocupacao = float(np.abs(np.vdot(reference, parcial.final_state)) ** 2)
    registro = SegmentLog(indice, segmento.kind, t0, parcial.final_time, disparou, ocupacao)
    return parcial, registro


def run_protocol(
    protocol: DriveProtocol,
    psi0=None,
    basis: TwoParticleBasis | None = None,
    reference=None,
    rtol: float | None = None,
    atol: float | None = None,
) -> ProtocolRun:
    """
    Executa os segmentos em sequência, entregando o estado final de cada um ao seguinte.

    Parâmetros:
        protocol (DriveProtocol): Protocolo.
        psi0 (array_like, opcional): Estado inicial; padrão o estado fundamental de H(Q₀).
        basis (TwoParticleBasis, opcional): Base; padrão a conexa a |2s⟩.
        reference (array_like, opcional): Estado cuja depleção as metas medem;
            padrão o estado fundamental de H(Q₀).
        rtol, atol (float, opcional): Tolerâncias do integrador.

    Retorna:
        ProtocolRun: Trajetória contínua, registro por segmento e geometrias.

    Lança:
        InvalidParameterError: Se ψ₀ não estiver normalizado ou uma rampa não
            começar na geometria corrente.
    """
    basis = basis or build_basis(protocol.orbitals)
    geometrias = protocol.geometries()
    if reference is None:
        reference = reference_state(_static(basis, protocol.base))
    reference = np.asarray(reference, dtype=complex)
    psi = reference.copy() if psi0 is None else np.asarray(psi0, dtype=complex)
    if abs(np.linalg.norm(psi) - 1) > 1e-8:
        raise InvalidParameterError("O estado inicial precisa estar normalizado")

    trajetoria = Trajectory.single(psi, 0.0, basis, reference)
    registros = []
    t = 0.0
    for indice, segmento in enumerate(protocol.segments):
        parcial, registro = _run_segment(
            indice, segmento, basis, geometrias[indice], psi, t, reference, {"rtol": rtol, "atol": atol}
        )
        trajetoria = trajetoria.concatenate(parcial)
        registros.append(registro)
        psi = parcial.final_state
        t = registro.end
        logger.info("Segmento %d (%s) concluído em t=%.6g", indice, segmento.kind, t)
    return ProtocolRun(protocol, trajetoria, tuple(registros), tuple(geometrias), reference)


def fidelity(state, target) -> float:
    """|⟨alvo|ψ⟩|² com o alvo normalizado; independe da fase global."""
    alvo = np.asarray(target, dtype=complex)
    alvo = alvo / np.linalg.norm(alvo)
    return float(np.abs(np.vdot(alvo, np.asarray(state))) ** 2)


@dataclass(frozen=True, eq=False)
class PhaseReport:
    """
    Série temporal da fase relativa entre |020⟩ e |002⟩.

    Atributos:
        times (ndarray): Instantes.
        occupation_px (ndarray): Ocupação de |020⟩.
        occupation_py (ndarray): Ocupação de |002⟩.
        phase (ndarray): arg(c002/c020) em (-π, π]; NaN quando indefinida.
        vortex (ndarray): Bandeiras de estado de vórtice.
        crossings (list): (instante, fase) em cada cruzamento de ocupações iguais.
        rabi_period (float | None): Período ajustado das oscilações de ocupação.
        eigen_period (float | None): h/(λ₊ - λ₋) da matriz final, quando fornecida.
        bare_period (float | None): h/(2 U_xy) com os parâmetros finais, quando fornecidos.
        accumulated (dict): Fases Λ₊, Λ₋ acumuladas na rampa e o β resultante.
    """

    times: np.ndarray
    occupation_px: np.ndarray
    occupation_py: np.ndarray
    phase: np.ndarray
    vortex: np.ndarray
    crossings: list
    rabi_period: float | None = None
    eigen_period: float | None = None
    bare_period: float | None = None
    accumulated: dict = field(default_factory=dict)

    @property
    def undefined(self) -> np.ndarray:
        return np.isnan(self.phase)


def _fit_rabi(tempos, ocupacao):
    if len(tempos) < 8 or np.ptp(ocupacao) < 1e-3:
        return None
    passo = float(np.mean(np.diff(tempos)))
    sinal = ocupacao - np.mean(ocupacao)
    espectro = np.abs(np.fft.rfft(sinal))
    frequencias = np.fft.rfftfreq(len(sinal), passo)
    k = int(np.argmax(espectro[1:]) + 1)
    palpite = 2 * np.pi * frequencias[k]
    if palpite * (tempos[-1] - tempos[0]) < 3 * np.pi:
        return None

    def modelo(t, media, amplitude, omega, fase):
        return media + amplitude * np.cos(omega * (t - tempos[0]) + fase)

    inicial = (np.mean(ocupacao), np.ptp(ocupacao) / 2, palpite, 0.0)
    try:
        ajuste, _ = curve_fit(modelo, tempos, ocupacao, p0=inicial, maxfev=20000)
    except RuntimeError:
        logger.warning("Ajuste do período de Rabi não convergiu")
        return None
    return float(2 * np.pi / abs(ajuste[2]))


def _crossings(tempos, c020, c002):
    diferenca = np.abs(c020) ** 2 - np.abs(c002) ** 2
    cruzamentos = []
    for i in np.nonzero(np.sign(diferenca[:-1]) * np.sign(diferenca[1:]) < 0)[0]:
        fracao = diferenca[i] / (diferenca[i] - diferenca[i + 1])
        t = tempos[i] + fracao * (tempos[i + 1] - tempos[i])
        produto_a = c002[i] * np.conj(c020[i])
        produto_b = c002[i + 1] * np.conj(c020[i + 1])
        fase = float(np.angle(produto_a + fracao * (produto_b - produto_a)))
        cruzamentos.append((float(t), fase))
    return cruzamentos


def analyze_phase(traj: Trajectory, basis: TwoParticleBasis | None = None, final_matrix=None, final_params=None, ramp=None) -> PhaseReport:
    """
    Fase relativa, vórtices e período de Rabi na evolução livre.

    Parâmetros:
        traj (Trajectory): Trecho da trajetória (tipicamente o segmento Hold).
        basis (TwoParticleBasis, opcional): Base; padrão a da trajetória.
        final_matrix (ndarray, opcional): Matriz de sítio na geometria final,
            para o período h/(λ₊ - λ₋).
        final_params (HubbardParams, opcional): Parâmetros finais, para h/(2U_xy).
        ramp (ProtocolRun | tuple, opcional): Execução e índice da rampa,
            para as fases Λ± acumuladas.

    Retorna:
        PhaseReport: Série temporal; a fase é NaN onde alguma ocupação < 1e-6.

    Lança:
        InvalidParameterError: Se a base não contiver |020⟩ e |002⟩.
    """
    basis = basis or traj.basis
    if basis is None or not (basis.contains(PX, PX) and basis.contains(PY, PY)):
        raise InvalidParameterError("A base precisa conter |020⟩ e |002⟩")
    c020 = traj.states[:, basis.index_of(PX, PX)]
    c002 = traj.states[:, basis.index_of(PY, PY)]
    ocupacao_x = np.abs(c020) ** 2
    ocupacao_y = np.abs(c002) ** 2

    fase = np.angle(c002 * np.conj(c020))
    fase = np.where(fase <= -np.pi, fase + 2 * np.pi, fase)
    fase = np.where((ocupacao_x < PHASE_UNDEFINED) | (ocupacao_y < PHASE_UNDEFINED), np.nan, fase)
    with np.errstate(invalid="ignore"):
        perto = np.minimum(np.abs(fase - np.pi / 2), np.abs(fase + np.pi / 2)) < VORTEX_PHASE
    vortice = (np.abs(ocupacao_x - ocupacao_y) < VORTEX_OCCUPATION) & perto

    periodo_autovalores = None
    if final_matrix is not None:
        valores, vetores = np.linalg.eigh(np.asarray(final_matrix))
        i, j = basis.index_of(PX, PX), basis.index_of(PY, PY)
        # os dois autoestados com mais peso em p, incluindo a mistura com |200⟩
        pesos_p = np.abs(vetores[i]) ** 2 + np.abs(vetores[j]) ** 2
        inferior, superior = sorted(int(k) for k in np.argsort(pesos_p)[::-1][:2])
        periodo_autovalores = float(2 * np.pi / (valores[superior] - valores[inferior]))
    periodo_nu = None
    if final_params is not None:
        periodo_nu = float(2 * np.pi / (2 * final_params.U(PX, PY)))

    acumuladas = {}
    if ramp is not None:
        acumuladas = accumulated_phases(*ramp, basis=basis)

    return PhaseReport(
        times=traj.times,
        occupation_px=ocupacao_x,
        occupation_py=ocupacao_y,
        phase=fase,
        vortex=vortice,
        crossings=_crossings(traj.times, c020, c002),
        rabi_period=_fit_rabi(traj.times, ocupacao_x),
        eigen_period=periodo_autovalores,
        bare_period=periodo_nu,
        accumulated=acumuladas,
    )


def track_eigenvectors(tabulated: TabulatedHamiltonian, values, index: int, times=None):
    """
    Segue o autovetor ``index`` ao longo dos valores por máxima sobreposição.

    Retorna:
        tuple: (autovetores seguidos, autovalores seguidos, índices instantâneos).

    Lança:
        TrackingLostError: Se a sobreposição entre passos vizinhos ficar ambígua.
    """
    valores, vetores = np.linalg.eigh(tabulated.exact(values[0]))
    atual = vetores[:, index]
    seguidos, energias, indices = [atual], [valores[index]], [index]
    for passo, valor in enumerate(values[1:], start=1):
        valores, vetores = np.linalg.eigh(tabulated.exact(valor))
        sobreposicoes = np.abs(vetores.T @ atual) ** 2
        ordem = np.argsort(sobreposicoes)[::-1]
        if sobreposicoes[ordem[0]] < TRACKING_OVERLAP or (
            len(ordem) > 1 and sobreposicoes[ordem[0]] - sobreposicoes[ordem[1]] < 0.1
        ):
            instante = float(times[passo]) if times is not None else float(valor)
            raise TrackingLostError("Rastreamento de autoestado perdido num cruzamento", time=instante)
        novo = vetores[:, ordem[0]]
        if np.dot(novo, atual) < 0:
            novo = -novo
        atual = novo
        seguidos.append(atual)
        energias.append(valores[ordem[0]])
        indices.append(int(ordem[0]))
    return np.array(seguidos), np.array(energias), indices


@dataclass(frozen=True, eq=False)
class AdiabaticityReport:
    """
    Diagnóstico de adiabaticidade de uma rampa.

    Atributos:
        times (ndarray): Instantes.
        overlaps (ndarray): |⟨v_j(t)|ψ(t)⟩|² do autoestado seguido.
        tracked_index (int): Índice j do autoestado no início da rampa.
        final_index (int): Índice do mesmo autoestado no fim.
        final_character (str): Rótulo do autoestado final (|+⟩, |−⟩ ou estado de base).
        trajectory (Trajectory): Evolução durante a rampa.
    """

    times: np.ndarray
    overlaps: np.ndarray
    tracked_index: int
    final_index: int
    final_character: str
    trajectory: Trajectory = field(repr=False)

    @property
    def minimum_overlap(self) -> float:
        return float(np.min(self.overlaps))

    @property
    def mixing(self) -> float:
        return float(1 - self.overlaps[-1])


def adiabaticity_check(
    ramp: Ramp,
    geometry: LatticeGeometry,
    basis: TwoParticleBasis | None = None,
    psi0=None,
    index: int | None = None,
    samples: int | None = None,
) -> AdiabaticityReport:
    """
    Sobreposição com o autoestado instantâneo seguido ao longo de uma rampa.

    Parâmetros:
        ramp (Ramp): Segmento de rampa.
        geometry (LatticeGeometry): Geometria no início da rampa.
        basis (TwoParticleBasis, opcional): Base de sítio.
        psi0 (array_like, opcional): Estado no início; padrão o autovetor ``index``.
        index (int, opcional): Autoestado seguido; padrão o de maior sobreposição com ψ₀.
        samples (int, opcional): Amostras.

    Retorna:
        AdiabaticityReport: Com duração zero, a sobreposição é a estática do
            estado inicial com o autoestado final conectado.

    Lança:
        TrackingLostError: Com o valor do parâmetro onde a identificação falhou.
    """
    basis = basis or build_basis(SP)
    tabela = _ramp_table(basis, geometry, ramp)
    _, vetores = np.linalg.eigh(tabela.exact(ramp.start))
    if psi0 is None:
        index = 0 if index is None else index
        psi0 = vetores[:, index].astype(complex)
    psi0 = np.asarray(psi0, dtype=complex)
    if index is None:
        index = int(np.argmax(np.abs(vetores.T @ psi0) ** 2))

    if ramp.duration == 0:
        malha = np.linspace(ramp.start, ramp.end, conf.get("TABLE_POINTS"))
        seguidos, _, indices = track_eigenvectors(tabela, malha, index)
        trajetoria = Trajectory.single(psi0, 0.0, basis)
        sobreposicao = np.array([np.abs(np.vdot(seguidos[-1], psi0)) ** 2])
        return AdiabaticityReport(
            times=np.array([0.0]),
            overlaps=sobreposicao,
            tracked_index=index,
            final_index=indices[-1],
            final_character=dominant_label(seguidos[-1], basis)[0],
            trajectory=trajetoria,
        )

    trajetoria = evolve(
        _ScheduledHamiltonian(tabela, _RampSchedule(ramp, 0.0)),
        psi0,
        (0.0, ramp.duration),
        samples=samples,
        basis=basis,
    )
    seguidos, _, indices = track_eigenvectors(tabela, ramp.value(trajetoria.times), index, trajetoria.times)
    sobreposicoes = np.abs(np.einsum("ij,ij->i", seguidos.conj(), trajetoria.states)) ** 2
    return AdiabaticityReport(
        times=trajetoria.times,
        overlaps=sobreposicoes,
        tracked_index=index,
        final_index=indices[-1],
        final_character=dominant_label(seguidos[-1], basis)[0],
        trajectory=trajetoria,
    )


def accumulated_phases(run: ProtocolRun, ramp_index: int, basis: TwoParticleBasis | None = None) -> dict:
    """
    Fases dinâmicas Λ± = ∫ λ±(t) dt dos dois autoestados p seguidos durante uma rampa.

    β é lido do estado no fim da rampa, escrito como e^{iα}[cos β|020⟩ + i sin β|002⟩];
    Φ é o que resta de Λ₊ - Λ₋ - β e sai da própria simulação.

    Lança:
        InvalidParameterError: Se o segmento indicado não for uma rampa.
    """
    rampa = run.protocol.segments[ramp_index]
    if not isinstance(rampa, Ramp):
        raise InvalidParameterError(f"O segmento {ramp_index} não é uma rampa")
    basis = basis or run.trajectory.basis
    trecho = run.segment_slice(ramp_index)
    tabela = _ramp_table(basis, run.geometries[ramp_index], rampa)
    valores = rampa.value(trecho.times, run.log[ramp_index].start)

    i, j = basis.index_of(PX, PX), basis.index_of(PY, PY)
    _, vetores = np.linalg.eigh(tabela.exact(rampa.start))
    pesos_p = np.abs(vetores[i]) ** 2 + np.abs(vetores[j]) ** 2
    inferior, superior = sorted(int(k) for k in np.argsort(pesos_p)[::-1][:2])

    fases = {}
    for nome, indice in (("lambda_minus", inferior), ("lambda_plus", superior)):
        if len(trecho) > 1:
            _, energias, _ = track_eigenvectors(tabela, valores, indice)
            fases[nome] = float(np.trapezoid(energias, trecho.times))
        else:
            fases[nome] = 0.0

    final = trecho.final_state
    c020, c002 = final[i], final[j]
    relativa = float(np.angle(c002 * np.conj(c020))) if abs(c020) and abs(c002) else 0.0
    beta = math.atan2(abs(c002), abs(c020)) * (1 if relativa >= 0 else -1)
    fases["beta"] = float(beta)
    fases["phi"] = float(np.angle(np.exp(1j * (fases["lambda_plus"] - fases["lambda_minus"] - beta))))
    return fases


def _located(basis, geometry, amplitude, omega_guess, duration):
    acionamento = Drive(geometry, omega_guess, amplitude, "lattice", "x")
    return locate_resonance(basis, acionamento, omega_guess, duration).center


def _preset_inputs(units, geometry):
    units = units or get_preset("cr52")
    geometry = geometry or LatticeGeometry(32.0, 20.0, 8.0, units.coupling)
    if geometry.q_x <= geometry.q_y:
        raise InvalidParameterError("Os cenários partem de q_x > q_y")
    basis = build_basis(SP)
    previsoes = resonance_predictions_at(basis, geometry)
    return units, geometry, basis, previsoes


def resonance_predictions_at(basis, geometry):
    return resonance_predictions(_static(basis, geometry), basis)


def p_superposition(basis: TwoParticleBasis, sign: int = -1) -> np.ndarray:
    """(|020⟩ ± |002⟩)/√2; o alvo do cenário A é o sinal negativo."""
    return basis.p_combination(sign)


def scenario_a(
    units=None,
    geometry: LatticeGeometry | None = None,
    amplitude: float = 4.0,
    ramp_ms: float | None = None,
    depletion: float = 0.995,
    max_ms: float = 10.0,
    omega: float | None = None,
) -> DriveProtocol:
    """
    Cenário A: transfere os dois bósons para p_y em ω₁ e equaliza q_x com q_y.

    Parâmetros:
        units (UnitSystem, opcional): Padrão cr52.
        geometry (LatticeGeometry, opcional): Padrão Q₀ = (32, 20, 8) com o g da espécie.
        amplitude (float): Amplitude da vibração em x (E_R).
        ramp_ms (float, opcional): Duração da rampa (padrão 20 ms).
        depletion (float): Meta de depleção do primeiro segmento.
        max_ms (float): Duração máxima da vibração.
        omega (float, opcional): ω₁ já localizado; senão é localizado por varredura.

    Retorna:
        DriveProtocol: Vibrate(ω₁) seguido de Ramp(q_x → q_y).
    """
    units, geometry, basis, previsoes = _preset_inputs(units, geometry)
    ramp_ms = conf.get("RAMP_DURATION_MS") if ramp_ms is None else ramp_ms
    maximo = units.from_ms(max_ms)
    if omega is None:
        omega = _located(basis, geometry, amplitude, previsoes[0].energy, maximo)
    return DriveProtocol(
        base=geometry,
        segments=(
            Vibrate(omega, amplitude, "x", depletion=depletion, max_duration=maximo),
            Ramp("q_x", geometry.q_x, geometry.q_y, units.from_ms(ramp_ms)),
        ),
        orbitals=basis.orbitals,
    )


def scenario_b(
    units=None,
    geometry: LatticeGeometry | None = None,
    amplitude: float = 4.0,
    ramp_ms: float | None = None,
    hold_ms: float = 5.0,
    hold_samples: int = 4001,
    max_ms: float = 10.0,
    omegas: tuple | None = None,
) -> DriveProtocol:
    """
    Cenário B: meia depleção em ω₁, o restante em ω₂, rampa e evolução livre.

    Na evolução livre as ocupações de p_x e p_y oscilam; nos cruzamentos o
    estado é um dos vórtices (|020⟩ ± i|002⟩)/√2.

    Retorna:
        DriveProtocol: Vibrate(ω₁, 0.5), Vibrate(ω₂, 0.99), Ramp, Hold.
    """
    units, geometry, basis, previsoes = _preset_inputs(units, geometry)
    ramp_ms = conf.get("RAMP_DURATION_MS") if ramp_ms is None else ramp_ms
    maximo = units.from_ms(max_ms)
    if omegas is None:
        omegas = tuple(_located(basis, geometry, amplitude, p.energy, maximo) for p in previsoes[:2])
    omega1, omega2 = omegas
    return DriveProtocol(
        base=geometry,
        segments=(
            Vibrate(omega1, amplitude, "x", depletion=0.5, max_duration=maximo),
            Vibrate(omega2, amplitude, "x", depletion=0.99, max_duration=maximo),
            Ramp("q_x", geometry.q_x, geometry.q_y, units.from_ms(ramp_ms)),
            Hold(units.from_ms(hold_ms), samples=hold_samples),
        ),
        orbitals=basis.orbitals,
    )
