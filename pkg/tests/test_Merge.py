import itertools
import math
import unittest

import pytest

from thermal_cluster.merge import (
    E5_REFERENCE,
    GHZ5_MEASUREMENTS,
    GHZ5_OUTPUT,
    Q1,
    ChainLengthError,
    FidelityLawError,
    beta_shift_check,
    chain_labels,
    compare_with_reference,
    derive_chain,
    derive_e5,
    e4_channel,
    fidelity_law,
    ghz5_record,
    merge_distribution_exact,
    simulate_distribution_dense,
    simulate_merge_dense,
    total_variation,
)
from thermal_cluster.stabsim import (
    AffineProb,
    FirstOrderChannel,
    Parity,
    PauliError,
    PauliString,
    StabilizerState,
    propagate_error,
)
from thermal_cluster.unitcell import build_unit_cell
from thermal_cluster.zchannel import q_of_beta, thermal_channel


def expected_output_state() -> StabilizerState:
    """The expected post measurement stabilizers of the merge."""
    labels = GHZ5_OUTPUT
    letters = [
        ({"1": "Z", "2": "Z", "6": "X", "7": "Z", "8": "Z"}, Parity.of("m1", "m2")),
        ({"1": "X", "6": "Z"}, Parity.of("m2", "m3")),
        ({"2": "X", "6": "Z"}, Parity.of("m2", "m3")),
        ({"7": "X", "6": "Z"}, Parity()),
        ({"8": "X", "6": "Z"}, Parity()),
    ]
    generators = [PauliString.from_ops(labels, ops) for ops, _ in letters]
    return StabilizerState(labels, generators, [sign for _, sign in letters])


@pytest.mark.unittest
class TestGhz5Stabilizers(unittest.TestCase):
    def test_output_group(self):
        """the derived group equals the expected one, signs included"""
        record = ghz5_record()
        assert record.output.labels == GHZ5_OUTPUT
        assert record.output.canonical() == expected_output_state().canonical()

    def test_five_generators(self):
        strings = derive_e5().state.canonical_strings()
        assert len(strings) == 5

    def test_outcomes_are_random(self):
        record = ghz5_record()
        assert record.variables == ["m1", "m2", "m3"]

    def test_link_roles(self):
        """only one assignment of centers, bonds and links to the eight
        labels reproduces the expected group and signs"""
        expected = expected_output_state().canonical()
        kept = ("1", "2", "6", "7", "8")
        reproducing = []
        for consumed_center, consumed_link, surviving_link in itertools.permutations(("3", "4", "5")):
            for surviving_center in kept:
                rest = [label for label in kept if label != surviving_center]
                for surviving_bonds in itertools.combinations(rest, 2):
                    consumed_bonds = tuple(label for label in rest if label not in surviving_bonds)
                    roles = (
                        (surviving_center, (*surviving_bonds, surviving_link)),
                        (consumed_center, (*consumed_bonds, consumed_link)),
                    )
                    try:
                        record = ghz5_record(surviving=roles[0], consumed=roles[1])
                    except PauliError:
                        continue
                    if record.output.canonical() == expected:
                        reproducing.append(roles)
        assert reproducing == [(("6", ("7", "8", "5")), ("3", ("1", "2", "4")))]

    def test_center_error(self):
        """Z on the consumed center flips m1 and lands on the surviving
        center"""
        record = ghz5_record()
        index = record.initial.labels.index("3")
        residual, flips = propagate_error(record, PauliString.z_string(1 << index))
        assert flips == (1, 0, 0)
        assert residual == PauliString.z_string(1 << GHZ5_OUTPUT.index("6"))


@pytest.mark.unittest
class TestMergePropagation(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.record = ghz5_record()
        cls.table = {
            mask: propagate_error(cls.record, PauliString.z_string(mask))
            for mask in range(2**cls.record.initial.n)
        }

    def test_linear(self):
        """propagation is linear over GF(2) for every pair of Z masks"""
        violations = []
        for a, b in itertools.product(self.table, repeat=2):
            residual_a, flips_a = self.table[a]
            residual_b, flips_b = self.table[b]
            residual, flips = self.table[a ^ b]
            if residual.z != residual_a.z ^ residual_b.z:
                violations.append((a, b))
            elif flips != tuple(x ^ y for x, y in zip(flips_a, flips_b)):
                violations.append((a, b))
        assert violations == []

    def test_single_qubit_errors_dense(self):
        """every single qubit Z error lands where the dense merge puts it"""
        for i, label in enumerate(self.record.initial.labels):
            residual, _ = self.table[1 << i]
            dense = simulate_distribution_dense(self.record, {1 << i: 1.0})
            assert abs(dense[residual.z] - 1) < 1e-10, label
            assert abs(sum(dense.values()) - 1) < 1e-10


@pytest.mark.unittest
class TestE5(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.merged = derive_e5()

    def test_matches_reference(self):
        matches = compare_with_reference(self.merged)
        assert all(matches.values())
        assert len(matches) == 12

    def test_identity(self):
        assert self.merged.fidelity() == AffineProb(1, -2, -6, -6)
        assert str(self.merged.fidelity()) == "1 - 2*q1 - 6*q2 - 6*q3"

    def test_coefficients(self):
        assert self.merged.coefficient("6") == Q1.scale(2)
        for i in ("1", "2", "7", "8"):
            assert self.merged.coefficient(i) == AffineProb(0, 0, 1)
            assert self.merged.coefficient(i, "6") == AffineProb(0, 0, 0, 1)
        assert self.merged.coefficient("1", "2") == AffineProb(0, 0, 1, 1)
        assert self.merged.coefficient("1", "2", "6") == AffineProb(0, 0, 1, 1)

    def test_normalization(self):
        assert self.merged.total() == AffineProb.one()
        assert self.merged.to_dict()["normalization"] == "1"

    def test_mismatch_reported(self):
        reference = dict(E5_REFERENCE)
        reference[("6",)] = Q1
        matches = compare_with_reference(self.merged, reference)
        assert matches["Z6"] is False
        assert matches["I"] is False


@pytest.mark.unittest
class TestChain(unittest.TestCase):
    def test_single_center(self):
        merged = derive_chain(1)
        assert merged.coefficient("c1") == Q1
        assert merged.channel.labels == ("c1", "c1.o1", "c1.o2", "c1.o3")

    def test_center_weight_grows(self):
        for k in range(1, 5):
            assert derive_chain(k).coefficient("c1") == Q1.scale(k)

    def test_two_centers_is_e5(self):
        """relabelled, a chain of two is the five qubit merge"""
        mapping = {"c1": "6", "c1.o1": "7", "c1.o2": "8", "c2.o1": "1", "c2.o2": "2"}
        chain = derive_chain(2).channel.relabel(mapping)
        e5 = FirstOrderChannel.from_letters(GHZ5_OUTPUT, E5_REFERENCE)
        assert chain.in_order(GHZ5_OUTPUT) == e5.terms

    def test_output_is_ghz(self):
        for k in (1, 2, 3):
            merged = derive_chain(k)
            assert merged.state.n == k + 3
            assert merged.state.pure_z_elements() == []
            assert merged.total() == AffineProb.one()

    def test_labels(self):
        assert [center for center, _ in chain_labels(3)] == ["c1", "c2", "c3"]
        assert chain_labels(3)[1][1] == ("c2.l-", "c2.o1", "c2.l+")

    def test_bad_length(self):
        for k in (0, 9, 2.5, True):
            with self.assertRaises(ChainLengthError):
                derive_chain(k)


@pytest.mark.unittest
class TestDenseOracle(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.cell = build_unit_cell(1.0)
        cls.merged = derive_e5()

    def test_symbolic_channel(self):
        """the symbolic E4 has weight q1 + 3 q2 + 3 q3"""
        channel = e4_channel("c", ("1", "2", "3"))
        assert channel.terms[0] == AffineProb(1, -1, -3, -3)

    def test_dense_equals_exact(self):
        cell_channel = thermal_channel(self.cell, 6.0).probs
        dense = simulate_merge_dense(cell_channel)
        exact = merge_distribution_exact(cell_channel)
        assert total_variation(dense, exact) < 1e-10

    def test_first_order_at_moderate_temperature(self):
        """at delta beta = 6 the gap to first order is second order"""
        cell_channel = thermal_channel(self.cell, 6.0).probs
        dense = simulate_merge_dense(cell_channel)
        first = self.merged.channel.evaluate(*q_of_beta(self.cell, 6.0).as_tuple())
        weight = 2 * (1 - cell_channel[0])
        assert total_variation(dense, first) <= weight**2

    def test_first_order_at_low_temperature(self):
        cell_channel = thermal_channel(self.cell, 12.0).probs
        dense = simulate_merge_dense(cell_channel)
        first = self.merged.channel.evaluate(*q_of_beta(self.cell, 12.0).as_tuple())
        assert total_variation(dense, first) < 1e-6

    def test_total_variation(self):
        assert total_variation({0: 1.0}, {1: 1.0}) == 1.0
        assert total_variation({0: 0.5, 1: 0.5}, {0: 0.5, 1: 0.5}) == 0.0


@pytest.mark.unittest
class TestFidelityLaw(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cell = build_unit_cell(1.0)
        cls.q1 = staticmethod(lambda beta: q_of_beta(cell, beta).q1)

    def test_law(self):
        law = fidelity_law(6, 8.0, lambda beta: 0.01)
        assert law.F == pytest.approx(0.96)

    def test_validity(self):
        with self.assertRaises(FidelityLawError):
            fidelity_law(2, 8.0, lambda beta: 0.01)
        with self.assertRaises(FidelityLawError):
            fidelity_law(200, 8.0, lambda beta: 0.01)

    def test_shift_three_is_exact(self):
        shift = beta_shift_check(3, 8.0, self.q1)
        assert shift.beta_shifted == 8.0
        assert shift.gap == 0.0

    def test_shift_bound(self):
        """F_m at delta beta + ln(m-2) tracks the four connected fidelity"""
        for m, beta in itertools.product((3, 4, 6, 10), (8.0, 10.0)):
            shift = beta_shift_check(m, beta, self.q1)
            assert shift.beta_shifted == pytest.approx(beta + math.log(m - 2))
            assert shift.gap <= 5 * self.q1(beta) ** 2

    def test_shift_range(self):
        with self.assertRaises(FidelityLawError):
            beta_shift_check(4, 4.0, self.q1)


if __name__ == "__main__":
    unittest.main()
