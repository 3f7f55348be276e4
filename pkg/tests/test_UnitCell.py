import unittest

import numpy as np
import pytest

from thermal_cluster.unitcell import (
    AXES,
    FilterProbabilityError,
    build_unit_cell,
    local_correction,
    povm_filter,
    thermal_state,
)
from thermal_cluster.smalldense import DenseHermitian


@pytest.mark.unittest
class TestHamiltonian(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.cell = build_unit_cell(1.0)

    def test_forms_agree(self):
        """dot product and Casimir forms are the same operator"""
        assert self.cell.hamiltonian.distance(self.cell.casimir_hamiltonian) < 1e-12

    def test_ground_energy(self):
        assert abs(self.cell.ground_energy + 15 / 4) < 1e-10
        assert self.cell.ground_multiplicity == 1

    def test_gap(self):
        assert abs(self.cell.gap - 1.0) < 1e-10

    def test_scaling(self):
        cell = build_unit_cell(2.0)
        assert abs(cell.ground_energy + 7.5) < 1e-10
        assert abs(cell.gap - 2.0) < 1e-10

    def test_bad_delta(self):
        with self.assertRaises(ValueError):
            build_unit_cell(0.0)

    def test_to_dict(self):
        dump = self.cell.to_dict()
        assert dump["delta"] == 1.0
        assert abs(dump["gap"] - 1.0) < 1e-10


@pytest.mark.unittest
class TestPovm(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.cell = build_unit_cell(1.0)

    def test_completeness(self):
        """sum of F^dagger F is the identity"""
        total = sum(
            (f.entries.conj().T @ f.entries for f in self.cell.povm.values()),
            np.zeros((32, 32), dtype=complex),
        )
        np.testing.assert_allclose(total, np.eye(32), atol=1e-12)

    def test_frames_are_isometries(self):
        for axis in AXES:
            frame = self.cell.frame(axis)
            assert frame.shape == (32, 16)
            np.testing.assert_allclose(frame.conj().T @ frame, np.eye(16), atol=1e-12)

    def test_bad_outcome(self):
        with self.assertRaises(ValueError):
            self.cell.frame("w")

    def test_bond_correction_unitary(self):
        for axis in AXES:
            u = self.cell.bond_correction(axis)
            np.testing.assert_allclose(u.conj().T @ u, np.eye(2), atol=1e-12)
        np.testing.assert_allclose(self.cell.bond_correction("z"), np.eye(2), atol=1e-12)


@pytest.mark.unittest
class TestThermalState(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.cell = build_unit_cell(1.0)

    def test_unit_trace(self):
        for beta in (0.0, 1.0, 12.0):
            rho = thermal_state(self.cell, beta)
            assert abs(rho.trace() - 1) < 1e-12
            assert rho.eigenvalues().min() > -1e-14

    def test_infinite_temperature(self):
        rho = thermal_state(self.cell, 0.0)
        np.testing.assert_allclose(rho.entries, np.eye(32) / 32, atol=1e-14)

    def test_bad_beta(self):
        for beta in (-1.0, float("inf"), float("nan")):
            with self.assertRaises(ValueError):
                thermal_state(self.cell, beta)

    def test_large_beta_is_ground_state(self):
        rho = thermal_state(self.cell, 200.0)
        ground = self.cell.ground_state()
        assert abs(rho.expectation(ground) - 1) < 1e-10

    def test_outcomes_equally_likely(self):
        """the three POVM outcomes stay equally likely at finite beta"""
        for beta in (0.5, 2.0, 5.0):
            rho = thermal_state(self.cell, beta)
            probabilities = [povm_filter(self.cell, rho, axis)[1] for axis in AXES]
            assert np.ptp(probabilities) < 1e-12
            assert abs(sum(probabilities) - 1) < 1e-12

    def test_energy_matches_spectrum(self):
        """tr(rho H) is the Boltzmann average over the spectrum"""
        beta = 2.0
        rho = thermal_state(self.cell, beta)
        energy = np.real(np.trace(rho.entries @ self.cell.hamiltonian.entries))
        levels = self.cell.spectrum()
        weights = np.exp(-beta * (levels - levels[0]))
        assert abs(energy - np.sum(levels * weights) / np.sum(weights)) < 1e-12

    def test_ground_fidelity_grows_with_beta(self):
        ground = self.cell.ground_state()
        fidelities = [
            thermal_state(self.cell, beta).expectation(ground)
            for beta in np.linspace(0.0, 20.0, 41)
        ]
        assert np.all(np.diff(fidelities) >= -1e-12)
        assert abs(fidelities[0] - 1 / 32) < 1e-12


@pytest.mark.unittest
class TestZeroTemperatureGhz(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.cell = build_unit_cell(1.0)
        cls.ground = DenseHermitian.projector(cls.cell.ground_state())

    def test_outcome_probabilities(self):
        for axis in AXES:
            _, probability = povm_filter(self.cell, self.ground, axis)
            assert abs(probability - 1 / 3) < 1e-10

    def test_fidelity_every_outcome(self):
        """every outcome gives the GHZ state once corrected"""
        for axis in AXES:
            sigma, _ = povm_filter(self.cell, self.ground, axis)
            corrected = local_correction(sigma, axis, self.cell)
            assert abs(corrected.trace() - 1) < 1e-10
            assert abs(self.cell.reference.fidelity(corrected) - 1) < 1e-10

    def test_reference_stabilizers(self):
        state = self.cell.reference.state
        generators = self.cell.reference.stabilizers()
        assert len(generators) == 4
        for generator in generators.values():
            np.testing.assert_allclose(generator @ state, state, atol=1e-12)

    def test_correction_is_identity_for_z(self):
        sigma, _ = povm_filter(self.cell, self.ground, "z")
        assert local_correction(sigma, "z", self.cell) is sigma

    def test_filter_guard(self):
        """a state outside the support of F^z cannot be filtered"""
        vector = np.zeros(32, dtype=complex)
        # center m = +1/2, every bond up
        vector[1 * 8] = 1
        with self.assertRaises(FilterProbabilityError):
            povm_filter(self.cell, DenseHermitian.projector(vector), "z")


if __name__ == "__main__":
    unittest.main()
