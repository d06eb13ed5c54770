import numpy as np
from django.test import SimpleTestCase, tag
from scipy import sparse
from scipy.linalg import expm

from orbitais.dynamics import Drive, drive_trajectory
from orbitais.exceptions import ConvergenceError, DimensionGuardError, InvalidParameterError
from orbitais.hubbard import PX, SP, S, LatticeGeometry, ParamLayout, compute_params
from orbitais.manybody import (
    ManyBodyDrive,
    ManyBodyTerms,
    assemble_hamiltonian,
    build_fock_basis,
    evolve_manybody,
    excited_occupation,
    ground_state,
    krylov_expm,
    mott_weight,
    onsite_product,
    parity_sector,
)
from orbitais.onsite import build_basis, hamiltonian_matrix, resonance_predictions
from orbitais.units import get_preset

CR = get_preset("cr52")
Q0 = LatticeGeometry(32.0, 20.0, 8.0, CR.coupling)
SX = (S, PX)


def omega_sx():
    basis = build_basis(SX)
    matriz = hamiltonian_matrix(basis, compute_params(Q0, SX))
    return resonance_predictions(matriz, basis)[0].energy


class FockBasisTests(SimpleTestCase):
    def test_chain_dimension(self):
        basis = build_fock_basis(4, SX, 8)
        self.assertEqual(len(basis), 6435)
        self.assertEqual(tuple(basis.states[0]), (8, 0, 0, 0, 0, 0, 0, 0))
        self.assertEqual(tuple(basis.states[-1]), (0, 0, 0, 0, 0, 0, 0, 8))
        self.assertTrue(np.all(basis.states.sum(axis=1) == 8))

    def test_guards(self):
        with self.assertRaises(DimensionGuardError):
            build_fock_basis(6, SP, 2)
        with self.assertRaises(DimensionGuardError):
            build_fock_basis(4, SX, 8, max_dimension=100)
        with self.assertRaises(InvalidParameterError):
            build_fock_basis(0, SX, 2)

    def test_lookup(self):
        basis = build_fock_basis(2, SX, 2)
        self.assertEqual(basis.index((2, 0, 0, 0)), 0)
        self.assertEqual(basis.mode(1, PX), 3)
        self.assertIsNone(basis.find((1, 0, 0, 0)))
        with self.assertRaises(InvalidParameterError):
            basis.index((3, 0, 0, 0))

    def test_site_numbers(self):
        basis = build_fock_basis(2, SX, 2)
        i = basis.index((1, 0, 0, 1))
        self.assertEqual(basis.site_numbers[i].tolist(), [1, 1])
        self.assertEqual(basis.orbital_numbers[i].tolist(), [[1, 0], [0, 1]])


class HamiltonianTests(SimpleTestCase):
    def setUp(self):
        self.params = compute_params(Q0, SP)

    def test_hermitian_and_number_conserving(self):
        basis = build_fock_basis(2, SP, 2)
        H = assemble_hamiltonian(basis, self.params)
        self.assertLess(abs(H.matrix - H.matrix.T).max(), 1e-12)
        gerador = np.random.default_rng(7)
        u = gerador.normal(size=len(basis)) + 1j * gerador.normal(size=len(basis))
        v = gerador.normal(size=len(basis)) + 1j * gerador.normal(size=len(basis))
        self.assertLess(H.hermiticity_error(u, v), 1e-10)
        N = basis.number_operator()
        self.assertLess(abs(H.matrix @ N - N @ H.matrix).max(), 1e-12)

    def test_single_particle_bands(self):
        basis = build_fock_basis(4, SX, 1)
        params = compute_params(Q0, SX)
        valores = np.linalg.eigvalsh(assemble_hamiltonian(basis, params).matrix.toarray())
        k = 2 * np.pi * np.arange(4) / 4
        esperado = np.concatenate(
            [
                params.E(S) - 2 * params.J("x", 0) * np.cos(k),
                params.E(PX) - 2 * params.J("x", 1) * np.cos(k),
            ]
        )
        np.testing.assert_allclose(valores, np.sort(esperado), atol=1e-12)

    def test_bonds(self):
        layout = ParamLayout.for_orbitals(SX)
        self.assertEqual(ManyBodyTerms(build_fock_basis(2, SX, 1), layout).bonds(), [(0, 1), (1, 0)])
        self.assertEqual(ManyBodyTerms(build_fock_basis(1, SX, 1), layout).bonds(), [])
        self.assertEqual(len(ManyBodyTerms(build_fock_basis(4, SX, 1), layout, pbc=False).bonds()), 3)

    def test_invalid_chain_axis(self):
        with self.assertRaises(InvalidParameterError):
            ManyBodyTerms(build_fock_basis(2, SX, 1), ParamLayout.for_orbitals(SX), chain_axis="z")

    def test_layout_must_cover_orbitals(self):
        with self.assertRaises(InvalidParameterError):
            ManyBodyTerms(build_fock_basis(2, SP, 1), ParamLayout.for_orbitals(SX))


class KrylovTests(SimpleTestCase):
    def setUp(self):
        gerador = np.random.default_rng(3)
        a = gerador.normal(size=(12, 12))
        self.H = (a + a.T) / 2
        v = gerador.normal(size=12) + 1j * gerador.normal(size=12)
        self.v = v / np.linalg.norm(v)

    def test_matches_dense_exponential(self):
        vetor, dimensao, erro = krylov_expm(lambda x: self.H @ x, self.v, 0.05, 1e-12, 12)
        np.testing.assert_allclose(vetor, expm(-1j * 0.05 * self.H) @ self.v, atol=1e-10)
        self.assertLessEqual(dimensao, 12)

    def test_subspace_too_small(self):
        with self.assertRaises(ConvergenceError):
            krylov_expm(lambda x: self.H @ x, self.v, 5.0, 1e-12, 2)

    def test_zero_vector(self):
        vetor, dimensao, _ = krylov_expm(lambda x: self.H @ x, np.zeros(12, dtype=complex), 1.0, 1e-12, 5)
        self.assertEqual(dimensao, 0)
        self.assertEqual(np.linalg.norm(vetor), 0.0)


class GroundStateTests(SimpleTestCase):
    def test_dense_path(self):
        resultado = ground_state(sparse.csr_matrix(np.array([[1.0, 0.5], [0.5, 2.0]])))
        self.assertAlmostEqual(resultado.energy, 1.5 - np.sqrt(0.5))
        self.assertGreater(resultado.vector[0].real, 0)
        self.assertLess(resultado.residual, 1e-12)


class ChainTests(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.basis = build_fock_basis(4, SX, 8)
        cls.terms = ManyBodyTerms(cls.basis, ParamLayout.for_orbitals(SX))
        cls.omega = omega_sx()

    def test_ground_state_is_a_mott_insulator(self):
        hamiltoniano = ManyBodyDrive(self.terms, Drive(Q0, self.omega, 4.0))
        fundamental = ground_state(hamiltoniano.static())
        self.assertGreater(mott_weight(self.basis, fundamental.vector, 2), 0.9)
        self.assertLess(excited_occupation(self.basis, fundamental.vector) / 4, 5e-3)

    def test_decoupled_sites_match_single_site(self):
        drive = Drive(Q0, self.omega, 4.0)
        periodos = (0.0, 2 * drive.period)

        cadeia = ManyBodyDrive(self.terms, drive, hopping_scale=0.0)
        fundamental = ground_state(cadeia.static())
        muitos = evolve_manybody(self.basis, cadeia, fundamental.vector, periodos, tol=1e-12, omega=self.omega)

        sitio = build_fock_basis(1, SX, 2)
        unico = ManyBodyDrive(ManyBodyTerms(sitio, ParamLayout.for_orbitals(SX)), drive, hopping_scale=0.0)
        um = evolve_manybody(sitio, unico, ground_state(unico.static()).vector, periodos, tol=1e-12, omega=self.omega)

        self.assertEqual(muitos.occupations.shape[1:], (4, 2))
        self.assertEqual(len(muitos.times), len(um.times))
        for i in range(4):
            self.assertLess(np.max(np.abs(muitos.occupations[:, i] - um.occupations[:, 0])), 1e-8)
        self.assertLess(np.max(muitos.particle_drift), 1e-8)
        self.assertLess(np.max(muitos.norm_error), 1e-8)

    def test_decoupled_ground_state_is_product(self):
        cadeia = ManyBodyDrive(self.terms, Drive(Q0, self.omega, 0.0), hopping_scale=0.0)
        fundamental = ground_state(cadeia.static())
        sitio = build_fock_basis(1, SX, 2)
        unico = ManyBodyDrive(ManyBodyTerms(sitio, ParamLayout.for_orbitals(SX)), Drive(Q0, self.omega, 0.0))
        produto = onsite_product(self.basis, ground_state(unico.static()).vector, sitio)
        self.assertAlmostEqual(abs(np.vdot(produto, fundamental.vector)) ** 2, 1.0, places=8)


class HelperTests(SimpleTestCase):
    def test_onsite_product(self):
        basis = build_fock_basis(2, SX, 4)
        sitio = build_fock_basis(1, SX, 2)
        produto = onsite_product(basis, np.array([0.6, 0.0, 0.8]), sitio)
        self.assertAlmostEqual(np.linalg.norm(produto), 1.0)
        self.assertAlmostEqual(produto[basis.index((2, 0, 0, 2))].real, 0.48)

    def test_parity_sector(self):
        basis = build_fock_basis(2, SX, 2)
        setor = parity_sector(basis)
        self.assertTrue(np.all(basis.states[setor][:, [1, 3]].sum(axis=1) % 2 == 0))
        self.assertEqual(len(setor), 6)

    def test_evolution_needs_step(self):
        basis = build_fock_basis(1, SX, 2)
        with self.assertRaises(InvalidParameterError):
            evolve_manybody(basis, lambda t: sparse.identity(3), np.array([1.0, 0, 0]), (0.0, 1.0))
        with self.assertRaises(InvalidParameterError):
            evolve_manybody(basis, lambda t: sparse.identity(3), np.array([1.0, 1.0, 0]), (0.0, 1.0), step=0.1)


class ConservationTests(SimpleTestCase):
    def test_static_hamiltonian_conserves_energy(self):
        basis = build_fock_basis(3, SX, 3)
        H = assemble_hamiltonian(basis, compute_params(Q0, SX)).matrix
        gerador = np.random.default_rng(11)
        psi0 = gerador.normal(size=len(basis)) + 1j * gerador.normal(size=len(basis))
        psi0 /= np.linalg.norm(psi0)

        trajetoria = evolve_manybody(basis, lambda t: H, psi0, (0.0, 10.0), tol=1e-12, step=0.0625)

        self.assertEqual(len(trajetoria.times), 161)
        self.assertLess(np.max(np.abs(trajetoria.energy - trajetoria.energy[0])), 1e-6)
        self.assertLess(np.max(trajetoria.norm_error), 1e-8)

    def test_periodic_chain_keeps_sites_equal(self):
        basis = build_fock_basis(3, SX, 6)
        omega = omega_sx()
        drive = Drive(Q0, omega, 4.0)
        cadeia = ManyBodyDrive(ManyBodyTerms(basis, ParamLayout.for_orbitals(SX), pbc=True), drive)
        sitio = build_fock_basis(1, SX, 2)
        unico = ManyBodyDrive(ManyBodyTerms(sitio, ParamLayout.for_orbitals(SX)), drive)
        psi0 = onsite_product(basis, ground_state(unico.static()).vector, sitio)

        trajetoria = evolve_manybody(basis, cadeia, psi0, (0.0, 2 * drive.period), tol=1e-12, omega=omega)

        for i in (1, 2):
            self.assertLess(np.max(np.abs(trajetoria.occupations[:, i] - trajetoria.occupations[:, 0])), 1e-8)
            self.assertLess(np.max(np.abs(trajetoria.variances[:, i] - trajetoria.variances[:, 0])), 1e-8)
        self.assertGreater(np.max(trajetoria.occupations[:, 0, 1]), 0.0)


@tag("lento")
class TransferValidationTests(SimpleTestCase):
    def test_chain_follows_single_site_transfer(self):
        basis = build_fock_basis(4, SX, 8)
        omega = omega_sx()
        drive = Drive(Q0, omega, 4.0)
        duracao = float(CR.from_ms(2.0))
        hamiltoniano = ManyBodyDrive(ManyBodyTerms(basis, ParamLayout.for_orbitals(SX)), drive)
        fundamental = ground_state(hamiltoniano.static())
        muitos = evolve_manybody(basis, hamiltoniano, fundamental.vector, (0.0, duracao), omega=omega)

        unico = drive_trajectory(build_basis(SX), drive, duracao, samples=4001)
        curva_unica = np.interp(muitos.times, unico.times, unico.occupations[:, 1])
        self.assertLess(np.max(np.abs(muitos.transfer_curve() - curva_unica)), 0.05)
        self.assertLess(np.max(muitos.variances), 0.1)
        self.assertLess(np.max(muitos.norm_error), 1e-8)
