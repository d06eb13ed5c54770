"""
Validação da configuração de execução.

A configuração é uma árvore compatível com JSON (arquivo ``--config``) com
sobreposições vindas das flags; as flags vencem. Cada ramo da árvore é
validado por um formulário Django e os erros voltam com o caminho do campo,
por exemplo ``drive.omega: Unidade 'km' desconhecida``.
"""

import copy
import math
import re
from dataclasses import dataclass, field

from django import forms
from django.core.exceptions import ValidationError

from . import conf
from .exceptions import InvalidParameterError
from .hubbard import AXES, MODELS, LatticeGeometry
from .protocols import RAMP_SHAPES, VIBRATION_AXES, segment_from_dict
from .units import PRESETS, get_preset

COMMANDS = ("bands", "params", "scan", "evolve", "protocol", "manybody")
FREQUENCY_UNITS = ("Er", "Hz", "kHz", "rad/s")
TIME_UNITS = ("s", "ms", "us")
QUANTITY = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([A-Za-z/]+)?\s*$")

DEFAULT_TREE = {
    "preset": "cr52",
    "model": None,
    "geometry": {"q_x": 32.0, "q_y": 20.0, "kappa": 8.0, "g": None},
    "drive": {
        "amplitude": 4.0,
        "axis": "x",
        "omega": None,
        "omega_min": None,
        "omega_max": None,
        "omega_points": None,
        "phase": 0.0,
    },
    "duration": None,
    "samples": None,
    "rtol": None,
    "atol": None,
    "threads": 1,
    "out": None,
    "pdf": False,
    "bands": {"q": None, "count": 3},
    "sweep": {"start": 10.0, "stop": 40.0, "points": 31, "kappa": 8.0, "g": 1.0},
    "protocol": {
        "scenario": "a",
        "amplitude": 4.0,
        "ramp_duration": None,
        "hold_duration": None,
        "segments": [],
    },
    "manybody": {
        "sites": 4,
        "particles": 8,
        "pbc": True,
        "hopping_scale": 1.0,
        "chain_axis": "x",
        "record_every": 1,
    },
}

# janelas padrão por comando, em ms
DEFAULT_DURATION_MS = {"scan": None, "evolve": None, "manybody": 5.0}


class QuantityField(forms.Field):
    """
    Campo de grandeza física: número adimensional ou texto com sufixo de unidade.

    Retorna uma tupla (valor, unidade); a unidade é None para números puros.
    A conversão para unidades internas depende do preset e é feita pelo formulário.
    """

    def __init__(self, dimension: str, **kwargs):
        kwargs.setdefault("required", False)
        super().__init__(**kwargs)
        self.dimension = dimension

    def to_python(self, value):
        if value in self.empty_values:
            return None
        if isinstance(value, bool):
            raise ValidationError("Valor inválido")
        if isinstance(value, (int, float)):
            numero, unidade = float(value), None
        else:
            encontrado = QUANTITY.match(str(value))
            if not encontrado:
                raise ValidationError(f"Grandeza '{value}' inválida")
            numero, unidade = float(encontrado.group(1)), encontrado.group(2)
        if not math.isfinite(numero):
            raise ValidationError("O valor precisa ser finito")
        aceitas = FREQUENCY_UNITS if self.dimension == "frequency" else TIME_UNITS
        if unidade is not None and unidade not in aceitas:
            raise ValidationError(f"Unidade '{unidade}' desconhecida; use uma de {', '.join(aceitas)}")
        return numero, unidade


def to_internal(quantity, units):
    """
    Converte uma tupla (valor, unidade) de QuantityField para unidades internas.

    Frequências vão para E_R/hbar e tempos para hbar/E_R.
    """
    if quantity is None:
        return None
    valor, unidade = quantity
    if unidade in (None, "Er"):
        return valor
    if unidade == "Hz":
        return float(units.from_hz(valor))
    if unidade == "kHz":
        return float(units.from_hz(valor * 1e3))
    if unidade == "rad/s":
        return float(units.to_dimensionless(valor, "frequency"))
    if unidade == "s":
        return float(units.to_dimensionless(valor, "time"))
    if unidade == "ms":
        return float(units.from_ms(valor))
    return float(units.from_ms(valor * 1e-3))


class QuantityForm(forms.Form):
    """Formulário que converte seus QuantityField com o sistema de unidades dado."""

    def __init__(self, *args, units=None, **kwargs):
        super().__init__(*args, **kwargs)
        self.units = units

    def converted(self) -> dict:
        dados = dict(self.cleaned_data)
        for nome, campo in self.fields.items():
            if isinstance(campo, QuantityField):
                dados[nome] = to_internal(dados.get(nome), self.units)
        return dados


class GeometryForm(forms.Form):
    """
    Geometria de equilíbrio Q₀ = (q_x, q_y, κ) e acoplamento g.

    Campos:
        q_x (FloatField): Profundidade em x (E_R).
        q_y (FloatField): Profundidade em y (E_R).
        kappa (FloatField): Confinamento em z.
        g (FloatField): Acoplamento; vazio usa o da espécie.
    """

    q_x = forms.FloatField(min_value=0)
    q_y = forms.FloatField(min_value=0)
    kappa = forms.FloatField()
    g = forms.FloatField(required=False)

    def clean_kappa(self):
        kappa = self.cleaned_data.get("kappa")

        if kappa is not None and kappa <= 0:
            raise ValidationError("κ precisa ser positivo")

        return kappa


class DriveForm(QuantityForm):
    """
    Acionamento periódico: amplitude, eixo e frequência (ou faixa de varredura).

    Métodos:
        clean(): Valida a faixa de frequências.
    """

    amplitude = forms.FloatField(min_value=0)
    axis = forms.ChoiceField(choices=[(a, a) for a in VIBRATION_AXES])
    omega = QuantityField("frequency")
    omega_min = QuantityField("frequency")
    omega_max = QuantityField("frequency")
    omega_points = forms.IntegerField(required=False, min_value=50)
    phase = forms.FloatField(required=False)

    def clean(self):
        cleaned_data = super().clean()
        for nome in ("omega", "omega_min", "omega_max"):
            valor = cleaned_data.get(nome)
            if valor is not None and valor[0] <= 0:
                self.add_error(nome, "A frequência precisa ser positiva")
        return cleaned_data


class SweepForm(forms.Form):
    """Varredura q_x = q_y = q de ``start`` a ``stop`` para as curvas de parâmetros."""

    start = forms.FloatField(min_value=0)
    stop = forms.FloatField(min_value=0)
    points = forms.IntegerField(min_value=2)
    kappa = forms.FloatField()
    g = forms.FloatField()

    def clean(self):
        cleaned_data = super().clean()
        start = cleaned_data.get("start")
        stop = cleaned_data.get("stop")

        if start is not None and stop is not None and start >= stop:
            raise ValidationError("O início da varredura precisa ser menor que o fim.")
        if cleaned_data.get("kappa") is not None and cleaned_data["kappa"] <= 0:
            self.add_error("kappa", "κ precisa ser positivo")

        return cleaned_data


class BandsForm(forms.Form):
    q = forms.FloatField(required=False, min_value=0)
    count = forms.IntegerField(min_value=1, max_value=12)


class SegmentForm(QuantityForm):
    """
    Um segmento de protocolo (vibrate, ramp ou hold).

    Campos de tempo e frequência aceitam sufixos de unidade. A consistência
    entre os campos é verificada pelo próprio segmento.
    """

    kind = forms.ChoiceField(choices=[(k, k) for k in ("vibrate", "ramp", "hold")])
    omega = QuantityField("frequency")
    amplitude = forms.FloatField(required=False, min_value=0)
    axis = forms.ChoiceField(required=False, choices=[("", "")] + [(a, a) for a in VIBRATION_AXES])
    duration = QuantityField("time")
    depletion = forms.FloatField(required=False)
    max_duration = QuantityField("time")
    parameter = forms.ChoiceField(required=False, choices=[("", "")] + [(a, a) for a in AXES])
    start = forms.FloatField(required=False)
    end = forms.FloatField(required=False)
    shape = forms.ChoiceField(required=False, choices=[("", "")] + [(s, s) for s in RAMP_SHAPES])
    samples = forms.IntegerField(required=False, min_value=2)

    FIELDS_BY_KIND = {
        "vibrate": ("omega", "amplitude", "axis", "duration", "depletion", "max_duration", "samples"),
        "ramp": ("parameter", "start", "end", "duration", "shape", "samples"),
        "hold": ("duration", "samples"),
    }

    def segment_dict(self) -> dict:
        dados = self.converted()
        tipo = dados["kind"]
        segmento = {"kind": tipo}
        for nome in self.FIELDS_BY_KIND[tipo]:
            valor = dados.get(nome)
            if valor not in (None, ""):
                segmento[nome] = valor
        return segmento


class ProtocolForm(QuantityForm):
    scenario = forms.ChoiceField(required=False, choices=[("", ""), ("a", "a"), ("b", "b")])
    amplitude = forms.FloatField(min_value=0)
    ramp_duration = QuantityField("time")
    hold_duration = QuantityField("time")


class ManyBodyForm(forms.Form):
    """
    Cadeia de muitos corpos.

    Campos:
        sites (IntegerField): Número de sítios L.
        particles (IntegerField): Número de partículas N.
        pbc (BooleanField): Condição periódica de contorno.
        hopping_scale (FloatField): Fator aplicado a todos os J.
        chain_axis (ChoiceField): Direção da cadeia.
        record_every (IntegerField): Passos entre registros de observáveis.
    """

    sites = forms.IntegerField(min_value=1)
    particles = forms.IntegerField(min_value=0)
    pbc = forms.BooleanField(required=False)
    hopping_scale = forms.FloatField(min_value=0)
    chain_axis = forms.ChoiceField(choices=[("x", "x"), ("y", "y")])
    record_every = forms.IntegerField(min_value=1)


class RunConfigForm(QuantityForm):
    """
    Campos de topo da configuração de execução.

    Métodos:
        clean_out(): Garante um diretório de saída não vazio.
    """

    command = forms.ChoiceField(choices=[(c, c) for c in COMMANDS])
    preset = forms.ChoiceField(choices=[(p, p) for p in PRESETS])
    model = forms.ChoiceField(required=False, choices=[("", "")] + [(m, m) for m in MODELS])
    duration = QuantityField("time")
    samples = forms.IntegerField(required=False, min_value=2)
    rtol = forms.FloatField(required=False)
    atol = forms.FloatField(required=False)
    threads = forms.IntegerField(min_value=1)
    out = forms.CharField(required=False)
    pdf = forms.BooleanField(required=False)

    def clean_out(self):
        out = str(self.cleaned_data.get("out") or "").strip()
        return out or conf.get("OUTPUT_DIR")

    def clean(self):
        cleaned_data = super().clean()
        for nome in ("rtol", "atol"):
            valor = cleaned_data.get(nome)
            if valor is not None and not 0 < valor < 1:
                self.add_error(nome, "A tolerância precisa estar em (0, 1)")
        duracao = cleaned_data.get("duration")
        if duracao is not None and duracao[0] <= 0:
            self.add_error("duration", "A duração precisa ser positiva")
        return cleaned_data


@dataclass(frozen=True)
class RunConfig:
    """
    Configuração validada, com todas as grandezas em unidades internas.

    Atributos:
        command (str): Subcomando.
        preset (str): Espécie ("cr52" ou "rb87").
        model (str): Conjunto de orbitais ("sp", "spd" ou "sx").
        geometry (dict): q_x, q_y, kappa e g resolvido.
        drive (dict): Acionamento; frequências em E_R/hbar.
        duration (float | None): Janela de evolução em hbar/E_R.
        samples (int | None): Amostras por trajetória.
        rtol (float): Tolerância relativa do integrador.
        atol (float): Tolerância absoluta do integrador.
        threads (int): Processos paralelos.
        out (str): Diretório de saída.
        pdf (bool): Gera também o relatório PDF.
        bands (dict): Profundidade e número de bandas do comando bands.
        sweep (dict): Varredura do comando params.
        protocol (dict): Cenário ou segmentos do comando protocol.
        manybody (dict): Cadeia do comando manybody.
    """

    command: str
    preset: str
    model: str
    geometry: dict
    drive: dict
    duration: float | None
    samples: int | None
    rtol: float
    atol: float
    threads: int
    out: str
    pdf: bool
    bands: dict = field(default_factory=dict)
    sweep: dict = field(default_factory=dict)
    protocol: dict = field(default_factory=dict)
    manybody: dict = field(default_factory=dict)

    @property
    def units(self):
        return get_preset(self.preset)

    @property
    def lattice(self) -> LatticeGeometry:
        return LatticeGeometry(**self.geometry)

    def to_dict(self) -> dict:
        """Árvore adimensional; ``parse_config(c.to_dict()) == c``."""
        return {
            "command": self.command,
            "preset": self.preset,
            "model": self.model,
            "geometry": dict(self.geometry),
            "drive": dict(self.drive),
            "duration": self.duration,
            "samples": self.samples,
            "rtol": self.rtol,
            "atol": self.atol,
            "threads": self.threads,
            "out": self.out,
            "pdf": self.pdf,
            "bands": dict(self.bands),
            "sweep": dict(self.sweep),
            "protocol": {**self.protocol, "segments": [dict(s) for s in self.protocol.get("segments", [])]},
            "manybody": dict(self.manybody),
        }


def merge_tree(base: dict, overrides: dict) -> dict:
    """Mescla ``overrides`` sobre ``base`` recursivamente; retorna uma cópia."""
    resultado = copy.deepcopy(base)
    for chave, valor in overrides.items():
        if isinstance(valor, dict) and isinstance(resultado.get(chave), dict):
            resultado[chave] = merge_tree(resultado[chave], valor)
        else:
            resultado[chave] = copy.deepcopy(valor)
    return resultado


def dotted_override(path: str, value) -> dict:
    """``"drive.omega"`` e ``"3 kHz"`` viram ``{"drive": {"omega": "3 kHz"}}``."""
    partes = [p for p in path.split(".") if p]
    if not partes:
        raise ValidationError("Caminho de sobreposição vazio")
    arvore = value
    for parte in reversed(partes):
        arvore = {parte: arvore}
    return arvore


def _form_errors(form, prefix: str) -> list:
    mensagens = []
    for nome, erros in form.errors.items():
        caminho = prefix if nome == "__all__" else f"{prefix}.{nome}" if prefix else nome
        for erro in erros:
            mensagens.append(f"{caminho}: {erro}")
    return mensagens


def _unknown_keys(tree: dict, reference: dict, prefix: str = "") -> list:
    erros = []
    for chave, valor in tree.items():
        caminho = f"{prefix}.{chave}" if prefix else chave
        if chave not in reference:
            erros.append(f"{caminho}: Campo desconhecido")
        elif isinstance(reference[chave], dict):
            if not isinstance(valor, dict):
                erros.append(f"{caminho}: Esperado um objeto")
            else:
                erros.extend(_unknown_keys(valor, reference[chave], caminho))
    return erros


def parse_config(tree: dict, overrides: dict | None = None) -> RunConfig:
    """
    Valida a árvore de configuração mesclada com as sobreposições.

    Parâmetros:
        tree (dict): Conteúdo do arquivo de configuração.
        overrides (dict, opcional): Sobreposições das flags (vencem o arquivo).

    Retorna:
        RunConfig: Configuração com os padrões resolvidos.

    Lança:
        ValidationError: Com uma mensagem "caminho: erro" por campo inválido.
    """
    if not isinstance(tree, dict):
        raise ValidationError("A configuração precisa ser um objeto")
    entrada = merge_tree(tree, overrides or {})
    erros = _unknown_keys(entrada, {**DEFAULT_TREE, "command": None})
    if erros:
        raise ValidationError(erros)
    dados = merge_tree(DEFAULT_TREE, entrada)

    topo = {k: v for k, v in dados.items() if not isinstance(DEFAULT_TREE.get(k), dict)}
    form = RunConfigForm(topo)
    if not form.is_valid():
        raise ValidationError(_form_errors(form, ""))
    units = get_preset(form.cleaned_data["preset"])
    form.units = units
    topo = form.converted()
    comando = topo["command"]

    formularios = {
        "geometry": GeometryForm(dados["geometry"]),
        "drive": DriveForm(dados["drive"], units=units),
        "bands": BandsForm(dados["bands"]),
        "sweep": SweepForm(dados["sweep"]),
        "protocol": ProtocolForm(
            {k: v for k, v in dados["protocol"].items() if k != "segments"}, units=units
        ),
        "manybody": ManyBodyForm(dados["manybody"]),
    }
    for prefixo, formulario in formularios.items():
        if not formulario.is_valid():
            erros.extend(_form_errors(formulario, prefixo))

    segmentos = dados["protocol"].get("segments") or []
    if not isinstance(segmentos, list):
        erros.append("protocol.segments: Esperada uma lista")
        segmentos = []
    resolvidos = []
    for i, segmento in enumerate(segmentos):
        caminho = f"protocol.segments[{i}]"
        if not isinstance(segmento, dict):
            erros.append(f"{caminho}: Esperado um objeto")
            continue
        formulario = SegmentForm(segmento, units=units)
        if not formulario.is_valid():
            erros.extend(_form_errors(formulario, caminho))
            continue
        convertido = formulario.segment_dict()
        try:
            segment_from_dict(convertido)
        except (InvalidParameterError, TypeError) as exc:
            erros.append(f"{caminho}: {exc}")
            continue
        resolvidos.append(convertido)
    if erros:
        raise ValidationError(erros)

    geometria = dict(formularios["geometry"].cleaned_data)
    if geometria["g"] is None:
        geometria["g"] = units.coupling
    try:
        LatticeGeometry(**geometria)
    except InvalidParameterError as exc:
        raise ValidationError([f"geometry: {exc}"]) from None

    drive = formularios["drive"].converted()
    if drive["phase"] is None:
        drive["phase"] = 0.0
    if comando == "evolve" and drive["omega"] is None:
        erros.append("drive.omega: Obrigatório para o comando evolve")
    if drive["omega_min"] is not None and drive["omega_max"] is not None:
        if drive["omega_min"] >= drive["omega_max"]:
            erros.append("drive: A frequência mínima precisa ser menor que a máxima.")
    protocolo = formularios["protocol"].converted()
    protocolo["segments"] = resolvidos
    if comando == "protocol" and not resolvidos and not protocolo["scenario"]:
        erros.append("protocol: Informe um cenário ou uma lista de segmentos.")
    if erros:
        raise ValidationError(erros)

    modelo = topo["model"] or ("sx" if comando == "manybody" else "sp")
    duracao = topo["duration"]
    if duracao is None and comando in DEFAULT_DURATION_MS:
        duracao_ms = DEFAULT_DURATION_MS[comando] or conf.get("SCAN_WINDOW_MS")
        duracao = float(units.from_ms(duracao_ms))

    return RunConfig(
        command=comando,
        preset=topo["preset"],
        model=modelo,
        geometry=geometria,
        drive=drive,
        duration=duracao,
        samples=topo["samples"],
        rtol=topo["rtol"] if topo["rtol"] is not None else conf.get("RTOL"),
        atol=topo["atol"] if topo["atol"] is not None else conf.get("ATOL"),
        threads=topo["threads"],
        out=topo["out"],
        pdf=bool(topo["pdf"]),
        bands=dict(formularios["bands"].cleaned_data),
        sweep=dict(formularios["sweep"].cleaned_data),
        protocol=protocolo,
        manybody=dict(formularios["manybody"].cleaned_data),
    )
