"""
Base comum dos comandos de cálculo.

Todos aceitam ``--config``, ``--out``, ``--preset``, ``--model`` e
``--threads``; ``--set caminho=valor`` sobrepõe qualquer campo da árvore.
As flags vencem o arquivo de configuração.
"""

import json
import logging
import traceback
from pathlib import Path

from django.core.exceptions import ValidationError
from django.core.management.base import BaseCommand, CommandError

from orbitais.exceptions import OrbitalError
from orbitais.forms import dotted_override, merge_tree, parse_config
from orbitais.hubbard import MODELS
from orbitais.pipeline import run
from orbitais.units import PRESETS

logger = logging.getLogger(__name__)


def _module_context(exc) -> str:
    for quadro in reversed(traceback.extract_tb(exc.__traceback__)):
        caminho = Path(quadro.filename)
        if caminho.parent.name == "orbitais":
            return caminho.stem
    return "orbitais"


def _parse_value(texto: str):
    try:
        return json.loads(texto)
    except json.JSONDecodeError:
        return texto


class OrbitalCommand(BaseCommand):
    """
    Comando de cálculo configurável.

    Atributos:
        command (str): Nome do subcomando na configuração.
    """

    command = None

    def add_arguments(self, parser):
        parser.add_argument("--config", help="Arquivo JSON com a configuração")
        parser.add_argument("--out", help="Diretório de saída")
        parser.add_argument("--preset", choices=sorted(PRESETS), help="Espécie atômica")
        parser.add_argument("--model", choices=sorted(MODELS), help="Conjunto de orbitais")
        parser.add_argument("--threads", type=int, help="Processos paralelos")
        parser.add_argument("--pdf", action="store_true", help="Gera também um relatório PDF")
        parser.add_argument(
            "--set",
            action="append",
            default=[],
            metavar="CAMPO=VALOR",
            dest="overrides",
            help="Sobrepõe um campo da configuração, por exemplo drive.omega='3 kHz'",
        )

    def load_tree(self, path) -> dict:
        if not path:
            return {}
        try:
            with open(path, encoding="utf-8") as arquivo:
                arvore = json.load(arquivo)
        except OSError as exc:
            raise CommandError(f"Não foi possível ler a configuração {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise CommandError(f"Configuração {path} não é um JSON válido: {exc}") from exc
        if not isinstance(arvore, dict):
            raise CommandError("A configuração precisa ser um objeto JSON")
        return arvore

    def overrides(self, options) -> dict:
        sobreposicoes = {"command": self.command}
        for chave in ("out", "preset", "model", "threads"):
            if options.get(chave) is not None:
                sobreposicoes[chave] = options[chave]
        if options.get("pdf"):
            sobreposicoes["pdf"] = True
        for item in options.get("overrides") or []:
            if "=" not in item:
                raise CommandError(f"Sobreposição '{item}' precisa ter o formato campo=valor")
            caminho, valor = item.split("=", 1)
            try:
                sobreposicoes = merge_tree(sobreposicoes, dotted_override(caminho.strip(), _parse_value(valor)))
            except ValidationError as exc:
                raise CommandError("; ".join(exc.messages)) from exc
        return sobreposicoes

    def handle(self, *args, **options):
        arvore = self.load_tree(options.get("config"))
        arvore.pop("command", None)
        try:
            config = parse_config(arvore, self.overrides(options))
        except ValidationError as exc:
            raise CommandError("Configuração inválida:\n" + "\n".join(exc.messages)) from exc

        try:
            arquivos = run(config)
        except OrbitalError as exc:
            logger.error("Falha em %s: %s", config.command, exc)
            raise CommandError(f"{_module_context(exc)}: {exc}") from exc
        except OSError as exc:
            raise CommandError(f"Falha ao escrever os resultados: {exc}") from exc

        for arquivo in arquivos:
            self.stdout.write(f"  {arquivo}")
        self.stdout.write(self.style.SUCCESS(f"{len(arquivos)} arquivo(s) escrito(s) em {config.out}"))
