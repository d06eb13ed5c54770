"""
Varredura em frequência da eficiência de transferência e extração de picos.
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial

import numpy as np
from scipy.signal import find_peaks

from . import conf
from .dynamics import Drive, TabulatedHamiltonian, drive_trajectory, transfer_efficiency
from .exceptions import ConvergenceError, IntegrationError, InvalidParameterError
from .hubbard import MODELS, SP, compute_params
from .onsite import TwoParticleBasis, build_basis, hamiltonian_matrix, resonance_predictions

logger = logging.getLogger(__name__)

MIN_POINTS = 50
REFINE_POINTS = 41
FWHM_TOLERANCE = 0.02
MAX_REFINEMENTS = 6
PROMINENCE = 0.1


@dataclass(frozen=True)
class Peak:
    """
    Pico de uma curva de eficiência.

    Atributos:
        center (float): Centro (E_R/hbar), vértice da parábola pelos três pontos mais altos.
        height (float): Altura do pico.
        fwhm (float | None): Largura a meia altura; None quando não resolvida.
        center_uncertainty (float): Incerteza do centro.
        resolved (bool): Falso para picos na borda ou sem cruzamentos de meia altura.
        target_state (str): Rótulo do estado alvo previsto mais próximo.
    """

    center: float
    height: float
    fwhm: float | None
    center_uncertainty: float
    resolved: bool = True
    target_state: str = ""


@dataclass(frozen=True, eq=False)
class ScanResult:
    """
    Curva eficiência × frequência com os picos detectados.

    Atributos:
        omegas (ndarray): Frequências (E_R/hbar), incluindo os pontos de refinamento.
        efficiencies (ndarray): Eficiência em cada frequência.
        peaks (list[Peak]): Picos em ordem crescente de centro.
        model (str): "sp" ou "spd".
        predictions (list): Previsões pelos gaps em Q₀.
        units (UnitSystem | None): Para converter as frequências em Hz.
    """

    omegas: np.ndarray
    efficiencies: np.ndarray
    peaks: list
    model: str
    predictions: list = field(default_factory=list)
    units: object = None

    @property
    def omega_hz(self) -> np.ndarray:
        if self.units is None:
            raise InvalidParameterError("Sem sistema de unidades para converter em Hz")
        return self.units.to_hz(self.omegas)

    @property
    def resolved_peaks(self):
        return [p for p in self.peaks if p.resolved]


def _half_crossing(x, y, i, half, step):
    j = i
    while 0 <= j + step < len(y):
        if y[j + step] < half:
            x0, x1, y0, y1 = x[j + step], x[j], y[j + step], y[j]
            return x0 + (half - y0) * (x1 - x0) / (y1 - y0)
        j += step
    return None


def _vertex(x, y, i):
    if i == 0 or i == len(y) - 1:
        return float(x[i]), float(y[i])
    xs, ys = x[i - 1 : i + 2], y[i - 1 : i + 2]
    a, b, c = np.polyfit(xs - xs[1], ys, 2)
    if a >= 0:
        return float(x[i]), float(y[i])
    deslocamento = float(np.clip(-b / (2 * a), xs[0] - xs[1], xs[2] - xs[1]))
    return float(xs[1] + deslocamento), float(c - b**2 / (4 * a))


def _measure(x, y, i):
    altura = float(y[i])
    esquerda = _half_crossing(x, y, i, altura / 2, -1)
    direita = _half_crossing(x, y, i, altura / 2, 1)
    if esquerda is None or direita is None:
        return None, esquerda, direita
    return direita - esquerda, esquerda, direita


def _merge(x, y, novos_x, novos_y):
    todos_x = np.concatenate([x, novos_x])
    todos_y = np.concatenate([y, novos_y])
    todos_x, unicos = np.unique(todos_x, return_index=True)
    return todos_x, todos_y[unicos]


def _candidates(x, y, threshold):
    indices, _ = find_peaks(y, height=threshold, prominence=min(PROMINENCE, threshold))
    candidatos = list(indices)
    if len(y) > 1 and y[0] >= threshold and y[0] > y[1]:
        candidatos.insert(0, 0)
    if len(y) > 1 and y[-1] >= threshold and y[-1] > y[-2]:
        candidatos.append(len(y) - 1)
    return candidatos


def extract_peaks(omegas, values, threshold=None, evaluate=None, tolerance=FWHM_TOLERANCE):
    """
    Detecta picos acima de ``threshold`` e mede a largura a meia altura.

    Com ``evaluate`` (ω → eficiência), cada candidato recebe uma malha local
    mais fina até a largura variar menos que ``tolerance`` entre refinamentos.

    Parâmetros:
        omegas (array_like): Frequências crescentes.
        values (array_like): Curva.
        threshold (float, opcional): Altura mínima (padrão 0.5).
        evaluate (callable, opcional): Avalia a curva em novos pontos (recebe um array).
        tolerance (float): Variação relativa aceita da largura.

    Retorna:
        tuple: (picos, ω, curva), com os pontos de refinamento incorporados.
    """
    threshold = conf.get("PEAK_THRESHOLD") if threshold is None else threshold
    x = np.asarray(omegas, dtype=float)
    y = np.asarray(values, dtype=float)
    if len(x) < 3:
        return [], x, y

    picos = []
    for centro_inicial in [x[i] for i in _candidates(x, y, threshold)]:
        i = int(np.argmin(np.abs(x - centro_inicial)))
        borda = i in (0, len(y) - 1)
        largura, esquerda, direita = _measure(x, y, i)

        if evaluate is not None and not borda and largura is not None:
            for _ in range(MAX_REFINEMENTS):
                meia = max(largura, 3 * np.min(np.diff(x)))
                novos_x = np.linspace(max(x[0], esquerda - meia), min(x[-1], direita + meia), REFINE_POINTS)
                novos_x = novos_x[~np.isin(novos_x, x)]
                x, y = _merge(x, y, novos_x, np.asarray(evaluate(novos_x), dtype=float))
                j = int(np.argmin(np.abs(x - centro_inicial)))
                while 0 < j < len(y) - 1 and (y[j - 1] > y[j] or y[j + 1] > y[j]):
                    j += -1 if y[j - 1] > y[j] else 1
                i = j
                nova, esquerda, direita = _measure(x, y, i)
                if nova is None:
                    largura = None
                    break
                pontos = np.count_nonzero((x >= esquerda) & (x <= direita))
                variacao = abs(nova - largura) / largura
                largura = nova
                if variacao < tolerance and pontos >= 3:
                    break
            else:
                logger.warning("Largura do pico em %.6g não convergiu após refinamentos", centro_inicial)
        else:
            if largura is not None and np.count_nonzero((x >= esquerda) & (x <= direita)) < 3:
                logger.debug("Pico em %.6g com menos de 3 pontos na largura", centro_inicial)

        centro, altura = _vertex(x, y, i)
        espacamento = float(np.max(np.diff(x[max(i - 1, 0) : i + 2])))
        incerteza = max(abs(centro - x[i]), espacamento / 2)
        resolvido = not borda and largura is not None and largura > 0
        picos.append(
            Peak(
                center=centro,
                height=float(min(max(altura, y[i]), 1.0)),
                fwhm=largura if resolvido else None,
                center_uncertainty=incerteza,
                resolved=resolvido,
            )
        )
        if not resolvido:
            logger.warning("Pico em %.6g não resolvido (borda da faixa ou meia altura ausente)", centro)

    unicos = []
    for pico in sorted(picos, key=lambda p: p.center):
        if unicos and abs(pico.center - unicos[-1].center) <= max(pico.center_uncertainty, 1e-12):
            continue
        unicos.append(pico)
    return unicos, x, y


def _efficiency_at(omega, template: Drive, tabulated: TabulatedHamiltonian, duration, samples, rtol=None, atol=None):
    try:
        trajetoria = drive_trajectory(
            tabulated.basis,
            template.with_omega(float(omega)),
            duration,
            samples,
            tabulated=tabulated,
            rtol=rtol,
            atol=atol,
        )
    except IntegrationError as exc:
        raise IntegrationError(str(exc), exc.time, omega=float(omega)) from exc
    return transfer_efficiency(trajetoria)


def efficiency_curve(
    basis, template: Drive, omegas, duration, samples=None, workers=None, tabulated=None, rtol=None, atol=None
):
    """
    Eficiência de transferência em cada frequência, cada uma partindo do estado preparado.

    Parâmetros:
        basis (TwoParticleBasis): Base de sítio.
        template (Drive): Acionamento; a frequência é substituída ponto a ponto.
        omegas (array_like): Frequências (E_R/hbar).
        duration (float): Janela de observação (hbar/E_R).
        samples (int, opcional): Amostras por trajetória.
        workers (int, opcional): Processos paralelos; 1 ou None roda em série.
        rtol, atol (float, opcional): Tolerâncias do integrador.

    Retorna:
        ndarray: Eficiências na ordem de ``omegas``.
    """
    tabulated = tabulated or TabulatedHamiltonian(
        basis, template.path, -template.amplitude, template.amplitude, reference=0.0
    )
    tarefa = partial(
        _efficiency_at,
        template=template,
        tabulated=tabulated,
        duration=duration,
        samples=samples,
        rtol=rtol,
        atol=atol,
    )
    omegas = np.atleast_1d(np.asarray(omegas, dtype=float))
    if workers and workers > 1 and len(omegas) > 1:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            resultado = list(executor.map(tarefa, omegas, chunksize=max(1, len(omegas) // (4 * workers))))
    else:
        resultado = [tarefa(w) for w in omegas]
    return np.array(resultado)


def predictions_at(geom, orbital_set=SP, units=None, window=None):
    basis = build_basis(orbital_set)
    matriz = hamiltonian_matrix(basis, compute_params(geom, basis.orbitals))
    return resonance_predictions(matriz, basis, units, window)


def default_window(geom, units=None):
    """Faixa [0.7·ω₁, 1.3·ω₂] a partir das duas ressonâncias s→p do modelo de três estados."""
    previsoes = predictions_at(geom, SP, units)
    return 0.7 * previsoes[0].energy, 1.3 * previsoes[1].energy


def _label_peaks(picos, previsoes):
    if not previsoes:
        return picos
    rotulados = []
    for pico in picos:
        alvo = min(previsoes, key=lambda p: abs(p.energy - pico.center))
        rotulados.append(
            Peak(pico.center, pico.height, pico.fwhm, pico.center_uncertainty, pico.resolved, alvo.label)
        )
    return rotulados


def scan(
    geom0,
    template: Drive,
    omega_range=None,
    omega_points: int | None = None,
    duration: float | None = None,
    basis: TwoParticleBasis | None = None,
    model: str = "sp",
    threshold: float | None = None,
    workers: int | None = None,
    units=None,
    refine: bool = True,
    samples: int | None = None,
    rtol: float | None = None,
    atol: float | None = None,
) -> ScanResult:
    """
    Varre a frequência do acionamento e extrai os picos de transferência.

    Parâmetros:
        geom0 (LatticeGeometry): Geometria de equilíbrio Q₀.
        template (Drive): Acionamento (amplitude, tipo, padrão); base e ω são substituídas.
        omega_range (tuple, opcional): (ω_min, ω_max) em E_R/hbar; padrão [0.7·ω₁, 1.3·ω₂].
        omega_points (int, opcional): Pontos da malha (≥ 50, padrão 160).
        duration (float): Janela de observação em hbar/E_R.
        basis (TwoParticleBasis, opcional): Base; padrão a do modelo.
        model (str): "sp" ou "spd".
        threshold (float, opcional): Altura mínima de pico (0.5 para sp, 0.2 para spd).
        workers (int, opcional): Processos paralelos.
        units (UnitSystem, opcional): Para rotular em Hz.
        refine (bool): Refina a malha em torno de cada pico.
        rtol, atol (float, opcional): Tolerâncias do integrador.

    Retorna:
        ScanResult: Curva e picos.

    Lança:
        InvalidParameterError: Se houver menos de 50 pontos ou faixa vazia.
        IntegrationError: Com a frequência associada.
    """
    omega_points = omega_points or conf.get("SCAN_POINTS")
    if omega_points < MIN_POINTS:
        raise InvalidParameterError(f"A varredura precisa de ao menos {MIN_POINTS} pontos")
    if duration is None or duration <= 0:
        raise InvalidParameterError("A janela de observação precisa ser positiva")
    if basis is None:
        basis = build_basis(MODELS[model])
    if threshold is None:
        threshold = conf.get("PEAK_THRESHOLD_SPD" if model == "spd" else "PEAK_THRESHOLD")
    if omega_range is None:
        omega_range = default_window(geom0, units)
    baixo, alto = map(float, omega_range)
    if not 0 < baixo < alto:
        raise InvalidParameterError("Faixa de frequências inválida")

    acionamento = Drive(geom0, baixo, template.amplitude, template.kind, template.pattern, template.phase)
    tabela = TabulatedHamiltonian(
        basis, acionamento.path, -acionamento.amplitude, acionamento.amplitude, reference=0.0
    )
    omegas = np.linspace(baixo, alto, omega_points)
    logger.info(
        "Varredura %s em [%.6g, %.6g] E_R/hbar com %d pontos", model, baixo, alto, omega_points
    )
    avaliar = partial(
        efficiency_curve,
        basis,
        acionamento,
        duration=duration,
        samples=samples,
        workers=workers,
        tabulated=tabela,
        rtol=rtol,
        atol=atol,
    )
    eficiencias = avaliar(omegas)
    picos, omegas, eficiencias = extract_peaks(omegas, eficiencias, threshold, avaliar if refine else None)

    previsoes = resonance_predictions(
        hamiltonian_matrix(basis, compute_params(geom0, basis.orbitals)), basis, units, (baixo, alto)
    )
    picos = _label_peaks(picos, previsoes)
    logger.info("Varredura concluída: %d picos acima de %.2g", len(picos), threshold)
    return ScanResult(
        omegas=omegas,
        efficiencies=eficiencias,
        peaks=picos,
        model=model,
        predictions=previsoes,
        units=units,
    )


def locate_resonance(
    basis: TwoParticleBasis,
    template: Drive,
    omega_guess: float,
    duration: float,
    span: float = 0.04,
    points: int = 61,
    workers: int | None = None,
    samples: int | None = None,
) -> Peak:
    """
    Refina uma previsão de ressonância por varredura local em ±``span``·ω.

    O deslocamento induzido pelo acionamento afasta o pico do gap estático
    mais que a largura de linha; os protocolos usam o centro encontrado aqui.

    Lança:
        ConvergenceError: Se nenhum pico resolvido for encontrado na janela.
    """
    acionamento = template.with_omega(omega_guess)
    tabela = TabulatedHamiltonian(
        basis, acionamento.path, -acionamento.amplitude, acionamento.amplitude, reference=0.0
    )
    omegas = np.linspace(omega_guess * (1 - span), omega_guess * (1 + span), points)
    avaliar = partial(
        efficiency_curve, basis, acionamento, duration=duration, samples=samples, workers=workers, tabulated=tabela
    )
    picos, _, _ = extract_peaks(omegas, avaliar(omegas), threshold=0.2, evaluate=avaliar)
    picos = [p for p in picos if p.resolved]
    if not picos:
        raise ConvergenceError(f"Nenhuma ressonância resolvida perto de ω={omega_guess:.6g}")
    melhor = max(picos, key=lambda p: p.height)
    logger.info(
        "Ressonância localizada em %.8g (previsão %.8g, altura %.4f)", melhor.center, omega_guess, melhor.height
    )
    return melhor


def resonance_shift(sp_result: ScanResult, spd_result: ScanResult) -> list:
    """
    Deslocamentos dos picos s→p entre os modelos, com a incerteza combinada.

    Sem picos resolvidos no modelo spd, deslocamento e incerteza são ``None``.
    """
    deslocamentos = []
    for pico in sp_result.resolved_peaks:
        if not spd_result.resolved_peaks:
            deslocamentos.append((pico.center, None, None))
            continue
        vizinho = min(spd_result.resolved_peaks, key=lambda p: abs(p.center - pico.center))
        incerteza = math.hypot(pico.center_uncertainty, vizinho.center_uncertainty)
        deslocamentos.append((pico.center, vizinho.center - pico.center, incerteza))
    return deslocamentos
