"""
Execução de uma configuração validada: calcula e exporta os artefatos de cada comando.
"""

import logging
import os
import shutil
import tempfile
from pathlib import Path

import numpy as np

from .bands import solve_bands
from .dynamics import Drive, drive_trajectory, transfer_efficiency
from .export import (
    bands_frame,
    manybody_frame,
    occupation_summary,
    params_frame,
    params_lines,
    peak_lines,
    peak_report,
    phase_summary,
    scan_frame,
    segment_lines,
    segment_report,
    trajectory_frame,
    write_csv,
    write_json,
    write_pdf,
)
from .forms import RunConfig
from .hubbard import MODELS, PX, PY, LatticeGeometry, ParamLayout, compute_params
from .manybody import (
    ManyBodyDrive,
    ManyBodyTerms,
    build_fock_basis,
    evolve_manybody,
    excited_occupation,
    ground_state,
    mott_weight,
)
from .onsite import build_basis, hamiltonian_matrix, resonance_predictions
from .protocols import (
    DriveProtocol,
    Hold,
    Ramp,
    analyze_phase,
    run_protocol,
    scenario_a,
    scenario_b,
    segment_from_dict,
)
from .scan import scan

logger = logging.getLogger(__name__)


def drive_for(geometry: LatticeGeometry, drive: dict, omega: float) -> Drive:
    """Drive do eixo configurado: x, y, + e - vibram a rede; kappa e g modulam esses parâmetros."""
    eixo = drive["axis"]
    if eixo in ("kappa", "g"):
        return Drive(geometry, omega, drive["amplitude"], kind=eixo, phase=drive["phase"])
    return Drive(geometry, omega, drive["amplitude"], pattern=eixo, phase=drive["phase"])


def _predicted_omega(geometry, orbitals, target=PX):
    """Gap previsto para o estado com os dois bósons em ``target`` (ou o primeiro gap)."""
    basis = build_basis(orbitals)
    previsoes = resonance_predictions(
        hamiltonian_matrix(basis, compute_params(geometry, basis.orbitals)), basis
    )
    if basis.contains(target, target):
        rotulo = basis.label(basis.index_of(target, target))
        for previsao in previsoes:
            if previsao.label == rotulo:
                return previsao.energy
    return previsoes[0].energy


def run_bands(config: RunConfig, out: Path) -> list:
    q = config.bands["q"] if config.bands["q"] is not None else config.geometry["q_x"]
    bandas = solve_bands(q, config.bands["count"])
    arquivos = [write_csv(out / "bands.csv", bands_frame(bandas), config.to_dict())]
    if config.pdf:
        linhas = [
            f"Banda {i}: largura {bandas.bandwidth(i):.8g} E_R" for i in range(bandas.band_count)
        ]
        arquivos.append(write_pdf(out / "bands.pdf", "Relatório de Bandas", [(f"q = {q:.6g} E_R", linhas)]))
    return arquivos


def run_params(config: RunConfig, out: Path) -> list:
    varredura = config.sweep
    profundidades = np.linspace(varredura["start"], varredura["stop"], varredura["points"])
    orbitais = MODELS[config.model]
    parametros = [
        compute_params(LatticeGeometry(q, q, varredura["kappa"], varredura["g"]), orbitais)
        for q in profundidades
    ]
    arquivos = [write_csv(out / "params.csv", params_frame(profundidades, parametros), config.to_dict())]
    if config.pdf:
        secoes = [(f"q = {q:.6g} E_R", params_lines(p)) for q, p in zip(profundidades, parametros)]
        arquivos.append(write_pdf(out / "params.pdf", "Relatório de Parâmetros", secoes))
    return arquivos


def run_scan(config: RunConfig, out: Path) -> list:
    drive = config.drive
    faixa = None
    if drive["omega_min"] is not None and drive["omega_max"] is not None:
        faixa = (drive["omega_min"], drive["omega_max"])
    geometria = config.lattice
    resultado = scan(
        geometria,
        drive_for(geometria, drive, 1.0),
        omega_range=faixa,
        omega_points=drive["omega_points"],
        duration=config.duration,
        model=config.model,
        workers=config.threads,
        units=config.units,
        samples=config.samples,
        rtol=config.rtol,
        atol=config.atol,
    )
    arquivos = [
        write_csv(out / "scan.csv", scan_frame(resultado), config.to_dict()),
        write_json(out / "peaks.json", peak_report(resultado)),
    ]
    if config.pdf:
        arquivos.append(
            write_pdf(out / "scan.pdf", "Relatório de Varredura", [(f"Modelo {config.model}", peak_lines(resultado))])
        )
    return arquivos


def run_evolve(config: RunConfig, out: Path) -> list:
    geometria = config.lattice
    basis = build_basis(MODELS[config.model])
    trajetoria = drive_trajectory(
        basis,
        drive_for(geometria, config.drive, config.drive["omega"]),
        config.duration,
        samples=config.samples,
        rtol=config.rtol,
        atol=config.atol,
    )
    resumo = {
        "efficiency": transfer_efficiency(trajetoria),
        "max_norm_error": float(np.max(trajetoria.norm_error)),
    }
    return [
        write_csv(out / "trajectory.csv", trajectory_frame(trajetoria, config.units), config.to_dict()),
        write_json(out / "summary.json", resumo),
    ]


def build_protocol(config: RunConfig) -> DriveProtocol:
    """Protocolo da configuração: a lista de segmentos, se houver, senão o cenário."""
    protocolo = config.protocol
    units = config.units
    geometria = config.lattice
    if protocolo["segments"]:
        return DriveProtocol(
            base=geometria,
            segments=tuple(segment_from_dict(s) for s in protocolo["segments"]),
            orbitals=MODELS[config.model],
        )
    opcoes = {"units": units, "geometry": geometria, "amplitude": protocolo["amplitude"]}
    if protocolo["ramp_duration"] is not None:
        opcoes["ramp_ms"] = float(units.to_ms(protocolo["ramp_duration"]))
    if protocolo["scenario"] == "b":
        if protocolo["hold_duration"] is not None:
            opcoes["hold_ms"] = float(units.to_ms(protocolo["hold_duration"]))
        return scenario_b(**opcoes)
    return scenario_a(**opcoes)


def run_protocol_command(config: RunConfig, out: Path) -> list:
    protocolo = build_protocol(config)
    execucao = run_protocol(protocolo, rtol=config.rtol, atol=config.atol)
    units = config.units
    basis = execucao.trajectory.basis
    arquivos = [
        write_csv(out / "trajectory.csv", trajectory_frame(execucao.trajectory, units), config.to_dict()),
        write_json(out / "segments.json", segment_report(execucao, units)),
    ]

    segmentos = protocolo.segments
    if (
        segmentos
        and isinstance(segmentos[-1], Hold)
        and basis.contains(PX, PX)
        and basis.contains(PY, PY)
    ):
        final = execucao.geometries[-1]
        parametros = compute_params(final, basis.orbitals)
        rampa = None
        if len(segmentos) > 1 and isinstance(segmentos[-2], Ramp):
            rampa = (execucao, len(segmentos) - 2)
        relatorio = analyze_phase(
            execucao.segment_slice(len(segmentos) - 1),
            basis,
            final_matrix=hamiltonian_matrix(basis, parametros),
            final_params=parametros,
            ramp=rampa,
        )
        arquivos.append(write_json(out / "phase.json", phase_summary(relatorio, units)))

    if config.pdf:
        arquivos.append(
            write_pdf(out / "protocol.pdf", "Relatório do Protocolo", [("Segmentos", segment_lines(execucao, units))])
        )
    return arquivos


def run_manybody(config: RunConfig, out: Path) -> list:
    cadeia = config.manybody
    geometria = config.lattice
    basis = build_fock_basis(cadeia["sites"], MODELS[config.model], cadeia["particles"])
    termos = ManyBodyTerms(
        basis, ParamLayout.for_orbitals(basis.orbitals), cadeia["pbc"], cadeia["chain_axis"]
    )
    omega = config.drive["omega"]
    if omega is None:
        omega = _predicted_omega(geometria, basis.orbitals)
    hamiltoniano = ManyBodyDrive(termos, drive_for(geometria, config.drive, omega), cadeia["hopping_scale"])
    fundamental = ground_state(hamiltoniano.static())
    trajetoria = evolve_manybody(
        basis,
        hamiltoniano,
        fundamental.vector,
        (0.0, config.duration),
        omega=omega,
        record_every=cadeia["record_every"],
    )
    resumo = {
        "dimension": len(basis),
        "omega": omega,
        "ground_energy": fundamental.energy,
        "ground_residual": fundamental.residual,
        "ground_mott_weight": mott_weight(basis, fundamental.vector, cadeia["particles"] // cadeia["sites"]),
        "ground_excited_occupation": excited_occupation(basis, fundamental.vector),
        "final_occupations": occupation_summary(trajetoria),
        "max_norm_error": float(np.max(trajetoria.norm_error)),
        "max_number_variance": float(np.max(trajetoria.variances)),
    }
    return [
        write_csv(out / "manybody.csv", manybody_frame(trajetoria, config.units), config.to_dict()),
        write_json(out / "summary.json", resumo),
    ]


RUNNERS = {
    "bands": run_bands,
    "params": run_params,
    "scan": run_scan,
    "evolve": run_evolve,
    "protocol": run_protocol_command,
    "manybody": run_manybody,
}


def run(config: RunConfig) -> list:
    """
    Executa o comando da configuração e escreve seus artefatos em ``config.out``.

    Os artefatos são escritos num diretório temporário ao lado do destino e
    movidos só depois que o comando inteiro termina; uma falha não deixa
    arquivos parciais.

    Parâmetros:
        config (RunConfig): Configuração validada.

    Retorna:
        list[Path]: Arquivos escritos.

    Lança:
        OrbitalError: Falhas numéricas dos módulos de cálculo.
        OSError: Falhas de escrita.
    """
    out = Path(config.out).resolve()
    out.parent.mkdir(parents=True, exist_ok=True)
    logger.info("Executando %s com o preset %s e o modelo %s", config.command, config.preset, config.model)
    temporario = Path(tempfile.mkdtemp(prefix=f".{out.name}-", dir=out.parent))
    try:
        escritos = RUNNERS[config.command](config, temporario)
        out.mkdir(exist_ok=True)
        finais = []
        for arquivo in escritos:
            destino = out / arquivo.name
            os.replace(arquivo, destino)
            finais.append(destino)
    finally:
        shutil.rmtree(temporario, ignore_errors=True)
    return finais
