"""
Exportação de resultados em CSV, JSON e PDF.

Os CSVs têm um cabeçalho de linhas ``# chave: valor`` com a versão da
ferramenta e a configuração resolvida, seguido do corpo com 12 algarismos
significativos. Todo arquivo é escrito num temporário e renomeado.
"""

import json
import logging
import math
import os
import tempfile
from pathlib import Path

import fitz
import numpy as np
import pandas as pd

from . import __version__
from .hubbard import PX, PY, S

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.12g"
PARAM_COLUMNS = ("E_s", "E_px", "E_py", "U_ss", "U_xx", "U_yy", "U_sx", "U_sy", "U_xy", "J0", "J1")


def _short(value):
    if isinstance(value, float):
        if not math.isfinite(value):
            return None
        return float(f"{value:.12g}")
    if isinstance(value, np.floating):
        return _short(float(value))
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, dict):
        return {k: _short(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_short(v) for v in value]
    return value


def _flatten(tree: dict, prefix: str = ""):
    for chave, valor in tree.items():
        caminho = f"{prefix}.{chave}" if prefix else str(chave)
        if isinstance(valor, dict):
            yield from _flatten(valor, caminho)
        else:
            yield caminho, valor


def header_lines(metadata: dict | None = None) -> list:
    """Linhas de proveniência: versão e cada valor da configuração resolvida."""
    linhas = [f"# orbitais: {__version__}"]
    for chave, valor in _flatten(metadata or {}):
        linhas.append(f"# {chave}: {json.dumps(_short(valor), ensure_ascii=False)}")
    return linhas


def _atomic_write(path: Path, write):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    descritor, temporario = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(descritor, "wb") as arquivo:
            write(arquivo)
        os.replace(temporario, path)
    except BaseException:
        if os.path.exists(temporario):
            os.unlink(temporario)
        raise
    logger.info("Arquivo escrito: %s", path)
    return path


def write_csv(path, frame: pd.DataFrame, metadata: dict | None = None) -> Path:
    """
    Escreve uma tabela com cabeçalho de proveniência.

    Parâmetros:
        path (str | Path): Destino.
        frame (DataFrame): Tabela; sem linhas gera um CSV só com cabeçalho.
        metadata (dict, opcional): Configuração resolvida para o cabeçalho.

    Retorna:
        Path: Caminho escrito.

    Lança:
        OSError: Em falhas de escrita; nenhum arquivo parcial é deixado.
    """
    texto = "\n".join(header_lines(metadata)) + "\n"
    texto += frame.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return _atomic_write(path, lambda arquivo: arquivo.write(texto.encode("utf-8")))


def read_csv(path) -> pd.DataFrame:
    return pd.read_csv(path, comment="#")


def write_json(path, data) -> Path:
    texto = json.dumps(_short(data), indent=2, ensure_ascii=False) + "\n"
    return _atomic_write(path, lambda arquivo: arquivo.write(texto.encode("utf-8")))


def write_pdf(path, title: str, sections) -> Path:
    """
    Relatório em texto simples, uma página por seção.

    Parâmetros:
        path (str | Path): Destino.
        title (str): Título de cada página.
        sections (iterável): Pares (subtítulo, linhas).
    """
    pdf_document = fitz.open()
    for subtitulo, linhas in sections:
        page = pdf_document.new_page()
        text = f"{title}\n{subtitulo}\n\n" + "\n".join(linhas)
        page.insert_textbox(
            fitz.Rect(72, 72, 540, 800),
            text,
            fontsize=10,
            fontname="helv",
            align=0,
        )
    if pdf_document.page_count == 0:
        pdf_document.new_page()
    pdf_bytes = pdf_document.write()
    pdf_document.close()
    return _atomic_write(path, lambda arquivo: arquivo.write(pdf_bytes))


def bands_frame(bands) -> pd.DataFrame:
    colunas = ["k"] + [f"E_{i}" for i in range(bands.band_count)]
    return pd.DataFrame(bands.dispersion_rows(), columns=colunas)


def params_frame(depths, params) -> pd.DataFrame:
    """Curvas de parâmetros: colunas q, E_s, E_px, ..., J0, J1 (as presentes no modelo)."""
    linhas = []
    for q, p in zip(depths, params):
        nomeados = p.named()
        linha = {"q": float(q)}
        linha.update({c: nomeados[c] for c in PARAM_COLUMNS if c in nomeados})
        linhas.append(linha)
    colunas = ["q"] + [c for c in PARAM_COLUMNS if not linhas or c in linhas[0]]
    return pd.DataFrame(linhas, columns=colunas)


def scan_frame(result) -> pd.DataFrame:
    return pd.DataFrame(
        {
            "omega_hz": result.omega_hz,
            "omega_recoil": result.omegas,
            "efficiency": result.efficiencies,
        }
    )


def state_column(basis, i: int) -> str:
    """Nome de coluna da ocupação do estado ``i``: occ_200, occ_s+d_x."""
    return "occ_" + basis.label(i).strip("|⟩").replace(",", "+")


def trajectory_frame(traj, units) -> pd.DataFrame:
    """t_ms, uma coluna de ocupação por estado da base e norm_error."""
    if traj.basis is not None:
        colunas = [state_column(traj.basis, i) for i in range(len(traj.basis))]
    else:
        colunas = [f"occ_{i}" for i in range(traj.states.shape[1] if traj.states.ndim == 2 else 0)]
    if len(traj) == 0:
        return pd.DataFrame(columns=["t_ms", *colunas, "norm_error"])
    tabela = pd.DataFrame(traj.occupations, columns=colunas)
    tabela.insert(0, "t_ms", units.to_ms(traj.times))
    tabela["norm_error"] = traj.norm_error
    return tabela


def _orbital_tag(orbital) -> str:
    return orbital.name.replace("_", "")


def manybody_frame(traj, units) -> pd.DataFrame:
    """t_ms, occ_<orbital>_site<i>, var_n_site<i>, energy e norm_error."""
    dados = {"t_ms": units.to_ms(traj.times)}
    for k, orbital in enumerate(traj.orbitals):
        for sitio in range(traj.sites):
            dados[f"occ_{_orbital_tag(orbital)}_site{sitio}"] = traj.occupations[:, sitio, k]
    for sitio in range(traj.sites):
        dados[f"var_n_site{sitio}"] = traj.variances[:, sitio]
    dados["energy"] = traj.energy
    dados["norm_error"] = traj.norm_error
    return pd.DataFrame(dados)


def peak_report(result) -> list:
    """Lista de {center_hz, height, fwhm_hz, target_state}; fwhm_hz é null se não resolvida."""
    relatorio = []
    for pico in result.peaks:
        relatorio.append(
            {
                "center_hz": float(result.units.to_hz(pico.center)),
                "height": pico.height,
                "fwhm_hz": None if pico.fwhm is None else float(result.units.to_hz(pico.fwhm)),
                "target_state": pico.target_state,
            }
        )
    return relatorio


def segment_report(run, units) -> list:
    return [
        {
            "index": registro.index,
            "kind": registro.kind,
            "start_ms": float(units.to_ms(registro.start)),
            "end_ms": float(units.to_ms(registro.end)),
            "triggered": registro.triggered,
            "reference_occupation": registro.reference_occupation,
        }
        for registro in run.log
    ]


def phase_summary(report, units) -> dict:
    resumo = {
        "crossings": [{"t_ms": float(units.to_ms(t)), "phase": fase} for t, fase in report.crossings],
        "rabi_period_ms": None if report.rabi_period is None else float(units.to_ms(report.rabi_period)),
        "eigen_period_ms": None if report.eigen_period is None else float(units.to_ms(report.eigen_period)),
        "bare_period_ms": None if report.bare_period is None else float(units.to_ms(report.bare_period)),
        "vortex_samples": int(np.count_nonzero(report.vortex)),
    }
    if report.accumulated:
        resumo["accumulated"] = {k: float(v) for k, v in report.accumulated.items()}
    return resumo


def params_lines(params) -> list:
    linhas = []
    for nome, valor in params.named().items():
        linhas.append(f"{nome}: {valor:.8g} E_R")
    return linhas


def peak_lines(result) -> list:
    linhas = []
    for item in peak_report(result):
        largura = "não resolvida" if item["fwhm_hz"] is None else f"{item['fwhm_hz']:.1f} Hz"
        linhas.append(
            f"Centro: {item['center_hz']:.1f} Hz - Altura: {item['height']:.4f} - "
            f"Largura: {largura} - Alvo: {item['target_state']}"
        )
    return linhas or ["Nenhum pico acima do limiar."]


def segment_lines(run, units) -> list:
    linhas = []
    for item in segment_report(run, units):
        linhas.append(
            f"Segmento {item['index']} ({item['kind']}): {item['start_ms']:.4f} ms a {item['end_ms']:.4f} ms"
            f" - ocupação de referência {item['reference_occupation']:.6f}"
        )
    return linhas


def occupation_summary(traj) -> dict:
    """Ocupações finais dos orbitais s, p_x e p_y por sítio (média)."""
    medias = traj.occupations[-1].mean(axis=0)
    return {
        _orbital_tag(o): float(medias[k]) for k, o in enumerate(traj.orbitals) if o in (S, PX, PY)
    }
