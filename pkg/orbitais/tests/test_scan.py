import math

import numpy as np
from django.test import SimpleTestCase, tag

from orbitais.dynamics import Drive, drive_trajectory
from orbitais.exceptions import InvalidParameterError
from orbitais.hubbard import SP, LatticeGeometry
from orbitais.onsite import build_basis
from orbitais.scan import (
    Peak,
    ScanResult,
    default_window,
    efficiency_curve,
    extract_peaks,
    locate_resonance,
    predictions_at,
    resonance_shift,
    scan,
)
from orbitais.units import get_preset

CR = get_preset("cr52")
Q0 = LatticeGeometry(32.0, 20.0, 8.0, CR.coupling)


def lorentz(x, centro=5.0, largura=0.2, altura=1.0):
    return altura / (1 + ((np.asarray(x) - centro) / (largura / 2)) ** 2)


class ExtractPeaksTests(SimpleTestCase):
    def test_lorentzian(self):
        x = np.linspace(4, 6, 201)
        picos, _, _ = extract_peaks(x, lorentz(x))
        self.assertEqual(len(picos), 1)
        self.assertAlmostEqual(picos[0].center, 5.0, delta=1e-3)
        self.assertLess(abs(picos[0].fwhm - 0.2) / 0.2, 0.05)
        self.assertTrue(picos[0].resolved)

    def test_refinement_on_coarse_grid(self):
        x = np.linspace(4, 6, 51)
        picos, refinados, curva = extract_peaks(x, lorentz(x), evaluate=lorentz)
        self.assertGreater(len(refinados), len(x))
        self.assertEqual(len(refinados), len(curva))
        self.assertLess(abs(picos[0].fwhm - 0.2) / 0.2, 0.02)
        self.assertAlmostEqual(picos[0].center, 5.0, delta=5e-3)

    def test_two_peaks_sorted(self):
        x = np.linspace(4, 7, 301)
        y = lorentz(x, 4.5, 0.1, 0.9) + lorentz(x, 6.0, 0.2, 0.8)
        picos, _, _ = extract_peaks(x, y)
        self.assertEqual(len(picos), 2)
        self.assertLess(picos[0].center, picos[1].center)
        self.assertAlmostEqual(picos[1].center, 6.0, delta=1e-2)

    def test_below_threshold(self):
        x = np.linspace(4, 6, 101)
        picos, _, _ = extract_peaks(x, lorentz(x, altura=0.3))
        self.assertEqual(picos, [])

    def test_edge_peak_is_unresolved(self):
        x = np.linspace(4, 6, 101)
        y = 0.9 * np.exp(-((x - 4.0) ** 2) / 0.1)
        with self.assertLogs("orbitais.scan", "WARNING"):
            picos, _, _ = extract_peaks(x, y)
        self.assertEqual(len(picos), 1)
        self.assertFalse(picos[0].resolved)
        self.assertIsNone(picos[0].fwhm)


class ScanValidationTests(SimpleTestCase):
    def setUp(self):
        self.template = Drive(Q0, 1.0, 4.0)

    def test_too_few_points(self):
        with self.assertRaises(InvalidParameterError):
            scan(Q0, self.template, omega_range=(10.0, 20.0), omega_points=20, duration=10.0)

    def test_missing_duration(self):
        with self.assertRaises(InvalidParameterError):
            scan(Q0, self.template, omega_range=(10.0, 20.0))

    def test_inverted_range(self):
        with self.assertRaises(InvalidParameterError):
            scan(Q0, self.template, omega_range=(20.0, 10.0), duration=10.0)

    def test_hz_needs_units(self):
        resultado = ScanResult(np.array([1.0]), np.array([0.0]), [], "sp")
        with self.assertRaises(InvalidParameterError):
            resultado.omega_hz


class EfficiencyCurveTests(SimpleTestCase):
    def test_zero_amplitude(self):
        eficiencias = efficiency_curve(build_basis(SP), Drive(Q0, 1.0, 0.0), [10.0, 12.0, 14.0], 20.0, samples=21)
        self.assertEqual(eficiencias.shape, (3,))
        self.assertTrue(np.all(eficiencias < 1e-7))

    def test_default_window_brackets_predictions(self):
        baixo, alto = default_window(Q0)
        previsoes = predictions_at(Q0, SP)
        self.assertLess(baixo, previsoes[0].energy)
        self.assertGreater(alto, previsoes[1].energy)

    def test_resonance_shift(self):
        sp = ScanResult(np.array([]), np.array([]), [Peak(10.0, 1.0, 0.1, 0.01)], "sp")
        spd = ScanResult(
            np.array([]), np.array([]), [Peak(9.0, 0.3, 0.1, 0.01), Peak(10.2, 1.0, 0.1, 0.02)], "spd"
        )
        [(centro, deslocamento, incerteza)] = resonance_shift(sp, spd)
        self.assertEqual(centro, 10.0)
        self.assertAlmostEqual(deslocamento, 0.2)
        self.assertAlmostEqual(incerteza, math.hypot(0.01, 0.02))

    def test_resonance_shift_without_spd_peaks(self):
        sp = ScanResult(np.array([]), np.array([]), [Peak(10.0, 1.0, 0.1, 0.01)], "sp")
        spd = ScanResult(np.array([]), np.array([]), [Peak(9.0, 0.1, None, 0.05, resolved=False)], "spd")
        self.assertEqual(resonance_shift(sp, spd), [(10.0, None, None)])

@tag("lento")
class ResonanceScanTests(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.duracao = float(CR.from_ms(20.0))
        cls.resultado = scan(Q0, Drive(Q0, 1.0, 4.0), duration=cls.duracao, units=CR, workers=4, samples=401)

    def test_two_full_transfer_peaks(self):
        picos = self.resultado.resolved_peaks
        self.assertEqual(len(picos), 2)
        for pico in picos:
            self.assertGreater(pico.height, 0.95)
            alvo = next(p for p in self.resultado.predictions if p.label == pico.target_state)
            self.assertLess(abs(pico.center - alvo.energy) / alvo.energy, 0.02)

    def test_linewidth(self):
        for pico in self.resultado.resolved_peaks:
            largura_hz = CR.to_hz(pico.fwhm)
            self.assertGreater(largura_hz, 350.0)
            self.assertLess(largura_hz, 1400.0)

    def test_transfer_within_ten_ms(self):
        basis = build_basis(SP)
        for pico in self.resultado.resolved_peaks:
            trajetoria = drive_trajectory(basis, Drive(Q0, pico.center, 4.0), float(CR.from_ms(10.0)), samples=4001)
            self.assertLess(np.min(trajetoria.projection(trajetoria.reference)), 0.05)

    def test_spd_shifts_resonances(self):
        spd = scan(
            Q0, Drive(Q0, 1.0, 4.0), duration=self.duracao, model="spd", units=CR, workers=4, samples=401
        )
        self.assertEqual(len(spd.resolved_peaks), 4)
        self.assertEqual(
            {p.target_state for p in spd.resolved_peaks}, {"|s,d_x⟩", "|s,d_y⟩", "|p_x,p_x⟩", "|p_y,p_y⟩"}
        )
        deslocamentos = resonance_shift(self.resultado, spd)
        self.assertEqual(len(deslocamentos), 2)
        for _, deslocamento, incerteza in deslocamentos:
            self.assertNotEqual(deslocamento, 0.0)
            self.assertGreater(abs(deslocamento), 3 * incerteza)

    def test_locate_resonance_near_prediction(self):
        basis = build_basis(SP)
        alvo = next(p for p in self.resultado.predictions if p.label == "|020⟩")
        pico = locate_resonance(basis, Drive(Q0, 1.0, 4.0), alvo.energy, self.duracao, workers=4, samples=401)
        self.assertTrue(pico.resolved)
        self.assertGreater(pico.height, 0.95)
        self.assertLess(abs(pico.center - alvo.energy) / alvo.energy, 0.02)
