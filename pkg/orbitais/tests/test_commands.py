import json
import os
import tempfile
from io import StringIO
from pathlib import Path

from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase

from orbitais import conf
from orbitais.export import read_csv


class CommandTestCase(SimpleTestCase):
    def setUp(self):
        diretorio = tempfile.TemporaryDirectory()
        self.addCleanup(diretorio.cleanup)
        self.raiz = Path(diretorio.name)

    def call(self, nome, out="saida", **options):
        saida = StringIO()
        call_command(nome, out=str(self.raiz / out), stdout=saida, **options)
        return saida.getvalue()

    def body(self, path):
        with open(path, encoding="utf-8") as arquivo:
            return [linha for linha in arquivo.read().splitlines() if not linha.startswith("#")]


class BandsCommandTests(CommandTestCase):
    def test_writes_dispersion(self):
        mensagem = self.call("bands", overrides=["bands.q=10"])

        tabela = read_csv(self.raiz / "saida" / "bands.csv")
        self.assertEqual(len(tabela), conf.get("K_POINTS"))
        self.assertEqual(list(tabela.columns), ["k", "E_0", "E_1", "E_2"])
        self.assertIn("1 arquivo(s) escrito(s)", mensagem)

    def test_header_records_configuration(self):
        self.call("bands", overrides=["bands.q=10"])
        with open(self.raiz / "saida" / "bands.csv", encoding="utf-8") as arquivo:
            cabecalho = [linha for linha in arquivo.read().splitlines() if linha.startswith("#")]
        self.assertTrue(cabecalho[0].startswith("# orbitais: "))
        self.assertIn("# bands.q: 10.0", cabecalho)
        self.assertIn('# command: "bands"', cabecalho)

    def test_repeated_runs_give_identical_bodies(self):
        self.call("bands", out="a", overrides=["bands.q=10"])
        self.call("bands", out="b", overrides=["bands.q=10"])
        self.assertEqual(
            self.body(self.raiz / "a" / "bands.csv"),
            self.body(self.raiz / "b" / "bands.csv"),
        )

    def test_pdf_flag(self):
        self.call("bands", pdf=True, overrides=["bands.q=10"])
        self.assertTrue((self.raiz / "saida" / "bands.pdf").read_bytes().startswith(b"%PDF"))

    def test_config_file(self):
        caminho = self.raiz / "config.json"
        caminho.write_text(json.dumps({"command": "scan", "bands": {"q": 5.0, "count": 2}}), encoding="utf-8")

        self.call("bands", config=str(caminho))

        tabela = read_csv(self.raiz / "saida" / "bands.csv")
        self.assertEqual(list(tabela.columns), ["k", "E_0", "E_1"])


class ParamsCommandTests(CommandTestCase):
    def test_sweep(self):
        self.call("params", overrides=["sweep.points=3"])

        tabela = read_csv(self.raiz / "saida" / "params.csv")
        self.assertEqual(tabela["q"].tolist(), [10.0, 25.0, 40.0])
        self.assertIn("U_xy", tabela.columns)
        self.assertTrue((tabela["J0"] > 0).all())
        self.assertTrue((tabela["J1"] < 0).all())


class InvalidInputTests(CommandTestCase):
    def test_negative_kappa_writes_nothing(self):
        with self.assertRaises(CommandError) as contexto:
            self.call("params", overrides=["geometry.kappa=-1"])
        self.assertIn("geometry.kappa", str(contexto.exception))
        self.assertEqual(os.listdir(self.raiz), [])

    def test_malformed_override(self):
        with self.assertRaises(CommandError):
            self.call("bands", overrides=["semigual"])

    def test_unknown_field(self):
        with self.assertRaises(CommandError) as contexto:
            self.call("bands", overrides=["geometry.depth=3"])
        self.assertIn("Campo desconhecido", str(contexto.exception))

    def test_invalid_json_config(self):
        caminho = self.raiz / "config.json"
        caminho.write_text("{quebrado", encoding="utf-8")
        with self.assertRaises(CommandError):
            self.call("bands", config=str(caminho))

    def test_missing_config_file(self):
        with self.assertRaises(CommandError):
            self.call("bands", config=str(self.raiz / "nao_existe.json"))

    def test_evolve_requires_frequency(self):
        with self.assertRaises(CommandError) as contexto:
            self.call("evolve")
        self.assertIn("drive.omega", str(contexto.exception))

    def test_numerical_error_names_module(self):
        with self.assertRaises(CommandError) as contexto:
            self.call("manybody", overrides=["manybody.sites=12", "manybody.particles=24"])
        self.assertTrue(str(contexto.exception).startswith("manybody:"))
        self.assertEqual(os.listdir(self.raiz), [])


class EvolveCommandTests(CommandTestCase):
    def test_trajectory(self):
        self.call("evolve", overrides=["drive.omega=2.0", "duration=2.0", "samples=11"])

        tabela = read_csv(self.raiz / "saida" / "trajectory.csv")
        self.assertEqual(len(tabela), 11)
        self.assertEqual(list(tabela.columns), ["t_ms", "occ_200", "occ_020", "occ_002", "norm_error"])
        self.assertEqual(tabela["t_ms"].iloc[0], 0.0)
        self.assertLess(tabela["norm_error"].max(), 1e-6)
        with open(self.raiz / "saida" / "summary.json", encoding="utf-8") as arquivo:
            resumo = json.load(arquivo)
        self.assertGreaterEqual(resumo["efficiency"], 0.0)
        self.assertLessEqual(resumo["efficiency"], 1.0)


class ManyBodyCommandTests(CommandTestCase):
    def test_small_chain(self):
        self.call(
            "manybody",
            overrides=["manybody.sites=2", "manybody.particles=2", "duration=0.5", "drive.omega=20.0"],
        )

        tabela = read_csv(self.raiz / "saida" / "manybody.csv")
        self.assertIn("occ_s_site0", tabela.columns)
        self.assertIn("occ_px_site1", tabela.columns)
        self.assertLess(tabela["norm_error"].max(), 1e-8)
        with open(self.raiz / "saida" / "summary.json", encoding="utf-8") as arquivo:
            resumo = json.load(arquivo)
        self.assertEqual(resumo["dimension"], 10)
        self.assertEqual(resumo["omega"], 20.0)
