import math

import numpy as np
from django.test import SimpleTestCase, tag

from orbitais.dynamics import Trajectory
from orbitais.exceptions import InvalidParameterError
from orbitais.hubbard import PX, SP, S, LatticeGeometry, compute_params
from orbitais.onsite import build_basis, hamiltonian_matrix
from orbitais.protocols import (
    DriveProtocol,
    Hold,
    Ramp,
    Vibrate,
    adiabaticity_check,
    analyze_phase,
    fidelity,
    p_superposition,
    run_protocol,
    scenario_a,
    scenario_b,
    segment_from_dict,
)
from orbitais.units import get_preset

CR = get_preset("cr52")
Q0 = LatticeGeometry(32.0, 20.0, 8.0, CR.coupling)


class SegmentTests(SimpleTestCase):
    def test_raised_cosine_ramp(self):
        rampa = Ramp("q_x", 32.0, 20.0, 10.0)
        self.assertAlmostEqual(float(rampa.value(0.0)), 32.0)
        self.assertAlmostEqual(float(rampa.value(5.0)), 26.0)
        self.assertAlmostEqual(float(rampa.value(10.0)), 20.0)
        self.assertAlmostEqual(float(rampa.value(15.0, t0=5.0)), 26.0)

    def test_linear_ramp(self):
        rampa = Ramp("kappa", 8.0, 10.0, 4.0, shape="linear")
        self.assertAlmostEqual(float(rampa.value(1.0)), 8.5)

    def test_sudden_ramp(self):
        self.assertEqual(float(Ramp("q_x", 32.0, 20.0, 0.0).value(0.0)), 20.0)

    def test_invalid_segments(self):
        with self.assertRaises(InvalidParameterError):
            Ramp("q_z", 1.0, 2.0, 1.0)
        with self.assertRaises(InvalidParameterError):
            Ramp("q_x", 1.0, 2.0, 1.0, shape="tanh")
        with self.assertRaises(InvalidParameterError):
            Hold(-1.0)

    def test_vibrate_needs_exactly_one_stop_condition(self):
        with self.assertRaises(InvalidParameterError):
            Vibrate(10.0, 4.0)
        with self.assertRaises(InvalidParameterError):
            Vibrate(10.0, 4.0, duration=1.0, depletion=0.5, max_duration=2.0)
        with self.assertRaises(InvalidParameterError):
            Vibrate(10.0, 4.0, depletion=0.5)
        with self.assertRaises(InvalidParameterError):
            Vibrate(10.0, 4.0, depletion=1.5, max_duration=2.0)
        with self.assertRaises(InvalidParameterError):
            Vibrate(10.0, 4.0, axis="z", duration=1.0)

    def test_dict_round_trip(self):
        for segmento in (
            Vibrate(10.0, 4.0, "+", depletion=0.9, max_duration=3.0),
            Ramp("q_x", 32.0, 20.0, 5.0, "linear", samples=11),
            Hold(2.0),
        ):
            self.assertEqual(segment_from_dict(segmento.to_dict()), segmento)

    def test_unknown_kind(self):
        with self.assertRaises(InvalidParameterError):
            segment_from_dict({"kind": "pulse", "duration": 1.0})


class RunProtocolTests(SimpleTestCase):
    def test_ramp_must_start_at_current_geometry(self):
        protocolo = DriveProtocol(Q0, (Ramp("q_x", 30.0, 20.0, 1.0),))
        with self.assertRaises(InvalidParameterError):
            run_protocol(protocolo)

    def test_geometries_follow_ramps(self):
        protocolo = DriveProtocol(Q0, (Hold(1.0), Ramp("q_x", 32.0, 20.0, 0.0), Hold(1.0)))
        geometrias = protocolo.geometries()
        self.assertEqual(len(geometrias), 4)
        self.assertEqual(geometrias[-1].q_x, 20.0)
        self.assertEqual(geometrias[1].q_x, 32.0)

    def test_hold_keeps_ground_state(self):
        execucao = run_protocol(DriveProtocol(Q0, (Hold(5.0, samples=11),)))
        self.assertEqual(len(execucao.trajectory), 11)
        self.assertGreater(execucao.log[0].reference_occupation, 1 - 1e-8)
        self.assertIsNone(execucao.log[0].triggered)
        self.assertAlmostEqual(execucao.log[0].end, 5.0)

    def test_sudden_ramp_keeps_state(self):
        execucao = run_protocol(DriveProtocol(Q0, (Ramp("q_x", 32.0, 20.0, 0.0),)))
        self.assertEqual(execucao.log[0].start, execucao.log[0].end)
        np.testing.assert_array_equal(execucao.final_state, execucao.reference)
        self.assertEqual(execucao.geometries[-1].q_x, 20.0)

    def test_segments_are_contiguous(self):
        protocolo = DriveProtocol(
            Q0, (Vibrate(10.0, 1.0, duration=2.0, samples=21), Hold(1.0, samples=11))
        )
        execucao = run_protocol(protocolo)
        self.assertAlmostEqual(execucao.log[1].start, execucao.log[0].end)
        self.assertEqual(len(execucao.trajectory), 31)
        self.assertTrue(np.all(np.diff(execucao.trajectory.times) > 0))
        self.assertEqual(len(execucao.segment_slice(1)), 11)

    def test_unreached_depletion_is_reported(self):
        protocolo = DriveProtocol(Q0, (Vibrate(2.0, 1.0, depletion=0.9, max_duration=2.0, samples=21),))
        with self.assertLogs("orbitais.protocols", "WARNING"):
            execucao = run_protocol(protocolo)
        self.assertFalse(execucao.log[0].triggered)
        self.assertAlmostEqual(execucao.log[0].end, 2.0)

    def test_unnormalized_initial_state(self):
        with self.assertRaises(InvalidParameterError):
            run_protocol(DriveProtocol(Q0, (Hold(1.0),)), psi0=[1.0, 1.0, 0.0])


class FidelityTests(SimpleTestCase):
    def test_global_phase_is_ignored(self):
        alvo = p_superposition(build_basis(SP))
        self.assertAlmostEqual(fidelity(np.exp(0.7j) * alvo, alvo), 1.0)
        self.assertAlmostEqual(fidelity(p_superposition(build_basis(SP), 1), alvo), 0.0)


class AnalyzePhaseTests(SimpleTestCase):
    def setUp(self):
        self.basis = build_basis(SP)
        tempos = np.linspace(0.0, 20 * math.pi, 4000)
        estados = np.zeros((len(tempos), 3), dtype=complex)
        estados[:, 1] = np.cos(tempos)
        estados[:, 2] = 1j * np.sin(tempos)
        self.trajetoria = Trajectory(tempos, estados, self.basis)

    def test_crossings_are_vortices(self):
        relatorio = analyze_phase(self.trajetoria)
        self.assertEqual(len(relatorio.crossings), 40)
        for t, fase in relatorio.crossings:
            self.assertAlmostEqual(abs(fase), math.pi / 2, places=9)
            self.assertAlmostEqual(math.cos(t) ** 2, 0.5, places=3)
        self.assertTrue(np.any(relatorio.vortex))

    def test_rabi_period(self):
        relatorio = analyze_phase(self.trajetoria)
        self.assertAlmostEqual(relatorio.rabi_period, math.pi, delta=1e-3)

    def test_undefined_phase(self):
        relatorio = analyze_phase(self.trajetoria)
        self.assertTrue(relatorio.undefined[0])
        self.assertFalse(relatorio.undefined[50])

    def test_reference_periods(self):
        geometria = LatticeGeometry(20.0, 20.0, 8.0, CR.coupling)
        parametros = compute_params(geometria)
        relatorio = analyze_phase(
            self.trajetoria,
            final_matrix=hamiltonian_matrix(self.basis, parametros),
            final_params=parametros,
        )
        self.assertAlmostEqual(relatorio.bare_period, math.pi / parametros.U(PX, "p_y"))
        self.assertLess(relatorio.eigen_period, relatorio.bare_period)

    def test_requires_both_p_states(self):
        basis = build_basis((S, PX))
        trajetoria = Trajectory(np.array([0.0]), np.array([[1.0, 0.0]], dtype=complex), basis)
        with self.assertRaises(InvalidParameterError):
            analyze_phase(trajetoria)


class AdiabaticityTests(SimpleTestCase):
    def test_sudden_ramp_splits_state(self):
        basis = build_basis(SP)
        relatorio = adiabaticity_check(
            Ramp("q_x", 32.0, 20.0, 0.0), Q0, basis, psi0=basis.basis_vector(basis.index_of(PX, PX))
        )
        self.assertAlmostEqual(relatorio.overlaps[0], 0.5, delta=0.05)
        self.assertIn(relatorio.final_character, ("|+⟩", "|−⟩"))
        self.assertAlmostEqual(relatorio.mixing, 0.5, delta=0.05)

    def test_scenarios_need_anisotropic_start(self):
        with self.assertRaises(InvalidParameterError):
            scenario_a(geometry=LatticeGeometry(20.0, 32.0, 8.0, 1.79), omega=10.0)


@tag("lento")
class ScenarioTests(SimpleTestCase):
    def test_scenario_a_fidelity_improves_with_ramp_duration(self):
        base = scenario_a(ramp_ms=20.0)
        omega = base.segments[0].omega
        basis = build_basis(SP)
        alvo = p_superposition(basis, -1)
        fidelidades = []
        for ramp_ms in (2.0, 8.0, 20.0):
            execucao = run_protocol(scenario_a(ramp_ms=ramp_ms, omega=omega))
            fidelidades.append(fidelity(execucao.final_state, alvo))
        self.assertGreaterEqual(fidelidades[-1], 0.99)
        self.assertEqual(fidelidades, sorted(fidelidades))

    def test_slow_ramp_follows_eigenstate(self):
        basis = build_basis(SP)
        misturas = []
        for ramp_ms in (2.0, 8.0, 20.0):
            rampa = Ramp("q_x", 32.0, 20.0, float(CR.from_ms(ramp_ms)))
            relatorio = adiabaticity_check(rampa, Q0, basis, index=2)
            misturas.append(relatorio.mixing)
        self.assertGreaterEqual(relatorio.overlaps[-1], 0.99)
        self.assertIn(relatorio.final_character, ("|+⟩", "|−⟩"))
        self.assertEqual(misturas, sorted(misturas, reverse=True))
        self.assertLess(misturas[-1], misturas[0])

    def test_scenario_b_vortices(self):
        protocolo = scenario_b()
        execucao = run_protocol(protocolo)
        basis = execucao.trajectory.basis
        final = execucao.geometries[-1]
        parametros = compute_params(final)
        relatorio = analyze_phase(
            execucao.segment_slice(3),
            basis,
            final_matrix=hamiltonian_matrix(basis, parametros),
            final_params=parametros,
            ramp=(execucao, 2),
        )
        self.assertTrue(relatorio.crossings)
        for _, fase in relatorio.crossings:
            self.assertLess(abs(abs(fase) - math.pi / 2), 0.05)
        self.assertLess(abs(relatorio.rabi_period - relatorio.eigen_period) / relatorio.eigen_period, 0.02)
        self.assertIn("beta", relatorio.accumulated)
