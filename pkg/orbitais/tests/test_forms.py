from django.core.exceptions import ValidationError
from django.test import SimpleTestCase

from orbitais import conf
from orbitais.forms import DEFAULT_TREE, QuantityField, dotted_override, merge_tree, parse_config, to_internal
from orbitais.hubbard import LatticeGeometry
from orbitais.units import get_preset

CR = get_preset("cr52")


class QuantityFieldTests(SimpleTestCase):
    def setUp(self):
        self.campo = QuantityField("frequency")

    def test_plain_number(self):
        self.assertEqual(self.campo.clean(12.5), (12.5, None))
        self.assertIsNone(self.campo.clean(None))

    def test_suffix(self):
        self.assertEqual(self.campo.clean("3 kHz"), (3.0, "kHz"))
        self.assertEqual(self.campo.clean("1e3Hz"), (1000.0, "Hz"))

    def test_unknown_unit(self):
        with self.assertRaises(ValidationError):
            self.campo.clean("3 km")
        with self.assertRaises(ValidationError):
            QuantityField("time").clean("3 Hz")

    def test_garbage(self):
        with self.assertRaises(ValidationError):
            self.campo.clean("três")
        with self.assertRaises(ValidationError):
            self.campo.clean(True)

    def test_conversions(self):
        self.assertAlmostEqual(to_internal((700.0, "Hz"), CR), 0.0498, delta=1e-3)
        self.assertAlmostEqual(to_internal((0.7, "kHz"), CR), to_internal((700.0, "Hz"), CR))
        self.assertAlmostEqual(to_internal((2 * 3.141592653589793 * 700.0, "rad/s"), CR), to_internal((700.0, "Hz"), CR))
        self.assertAlmostEqual(to_internal((2.0, "ms"), CR), to_internal((2000.0, "us"), CR))
        self.assertAlmostEqual(to_internal((0.002, "s"), CR), to_internal((2.0, "ms"), CR))
        self.assertEqual(to_internal((5.0, "Er"), CR), 5.0)


class ParseConfigTests(SimpleTestCase):
    def erros(self, tree, overrides=None):
        with self.assertRaises(ValidationError) as contexto:
            parse_config(tree, overrides)
        return contexto.exception.messages

    def test_defaults(self):
        config = parse_config({"command": "params"})
        self.assertEqual(config.model, "sp")
        self.assertEqual(config.preset, "cr52")
        self.assertAlmostEqual(config.geometry["g"], CR.coupling)
        self.assertEqual(config.out, conf.get("OUTPUT_DIR"))
        self.assertEqual(config.rtol, conf.get("RTOL"))
        self.assertIsNone(config.duration)
        self.assertEqual(config.lattice, LatticeGeometry(32.0, 20.0, 8.0, CR.coupling))

    def test_command_defaults(self):
        self.assertAlmostEqual(
            parse_config({"command": "scan"}).duration, float(CR.from_ms(conf.get("SCAN_WINDOW_MS")))
        )
        manybody = parse_config({"command": "manybody"})
        self.assertEqual(manybody.model, "sx")
        self.assertAlmostEqual(manybody.duration, float(CR.from_ms(5.0)))

    def test_unit_suffixes(self):
        config = parse_config(
            {"command": "evolve", "drive": {"omega": "700 Hz"}, "duration": "2 ms"}
        )
        self.assertAlmostEqual(config.drive["omega"], 0.0498, delta=1e-3)
        self.assertAlmostEqual(config.duration, float(CR.from_ms(2.0)))

    def test_negative_kappa(self):
        mensagens = self.erros({"command": "params", "geometry": {"kappa": -1}})
        self.assertTrue(any(m.startswith("geometry.kappa:") for m in mensagens))

    def test_unknown_keys(self):
        mensagens = self.erros({"command": "params", "foo": 1, "geometry": {"qx": 30}})
        self.assertIn("foo: Campo desconhecido", mensagens)
        self.assertIn("geometry.qx: Campo desconhecido", mensagens)

    def test_bad_unit(self):
        mensagens = self.erros({"command": "evolve", "drive": {"omega": "3 km"}})
        self.assertTrue(any(m.startswith("drive.omega: Unidade 'km'") for m in mensagens))

    def test_evolve_requires_omega(self):
        self.assertIn("drive.omega: Obrigatório para o comando evolve", self.erros({"command": "evolve"}))

    def test_invalid_tolerance_and_points(self):
        self.assertTrue(any(m.startswith("rtol:") for m in self.erros({"command": "scan", "rtol": 2.0})))
        mensagens = self.erros({"command": "scan", "drive": {"omega_points": 20}})
        self.assertTrue(any(m.startswith("drive.omega_points:") for m in mensagens))

    def test_frequency_window(self):
        mensagens = self.erros({"command": "scan", "drive": {"omega_min": "9 kHz", "omega_max": "4 kHz"}})
        self.assertTrue(any(m.startswith("drive:") for m in mensagens))

    def test_unknown_command(self):
        mensagens = self.erros({"command": "plot"})
        self.assertTrue(any(m.startswith("command:") for m in mensagens))

    def test_overrides_win(self):
        config = parse_config({"command": "params", "geometry": {"q_x": 30}}, {"geometry": {"q_x": 28}})
        self.assertEqual(config.geometry["q_x"], 28.0)
        self.assertEqual(config.geometry["q_y"], 20.0)

    def test_round_trip(self):
        config = parse_config(
            {
                "command": "protocol",
                "drive": {"omega": "3 kHz", "omega_points": 80},
                "protocol": {
                    "segments": [
                        {"kind": "vibrate", "omega": "7 kHz", "amplitude": 4, "depletion": 0.9, "max_duration": "5 ms"},
                        {"kind": "ramp", "parameter": "q_x", "start": 32, "end": 20, "duration": "1 ms"},
                        {"kind": "hold", "duration": 10.0},
                    ]
                },
                "manybody": {"pbc": False},
            }
        )
        self.assertEqual(parse_config(config.to_dict()), config)

    def test_segment_units(self):
        config = parse_config(
            {"command": "protocol", "protocol": {"segments": [{"kind": "hold", "duration": "1 ms"}]}}
        )
        self.assertEqual(config.protocol["segments"], [{"kind": "hold", "duration": float(CR.from_ms(1.0))}])

    def test_segment_errors(self):
        mensagens = self.erros(
            {
                "command": "protocol",
                "protocol": {
                    "segments": [
                        {"kind": "vibrate", "omega": 10.0, "amplitude": 4.0},
                        {"kind": "jump"},
                        "hold",
                    ]
                },
            }
        )
        self.assertTrue(any(m.startswith("protocol.segments[0]: ") for m in mensagens))
        self.assertTrue(any(m.startswith("protocol.segments[1].kind: ") for m in mensagens))
        self.assertIn("protocol.segments[2]: Esperado um objeto", mensagens)

    def test_protocol_needs_scenario_or_segments(self):
        mensagens = self.erros({"command": "protocol", "protocol": {"scenario": ""}})
        self.assertIn("protocol: Informe um cenário ou uma lista de segmentos.", mensagens)

    def test_not_an_object(self):
        with self.assertRaises(ValidationError):
            parse_config(["params"])


class TreeHelperTests(SimpleTestCase):
    def test_dotted_override(self):
        self.assertEqual(dotted_override("drive.omega", "3 kHz"), {"drive": {"omega": "3 kHz"}})
        with self.assertRaises(ValidationError):
            dotted_override("..", 1)

    def test_merge_does_not_mutate(self):
        mesclada = merge_tree(DEFAULT_TREE, {"geometry": {"q_x": 10.0}})
        self.assertEqual(mesclada["geometry"]["q_x"], 10.0)
        self.assertEqual(DEFAULT_TREE["geometry"]["q_x"], 32.0)
        self.assertEqual(mesclada["geometry"]["q_y"], 20.0)
