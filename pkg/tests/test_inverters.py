"""
Unit tests for qinvert.inverters module
"""

import pytest

from qinvert.core import (
    DimensionMismatchError,
    FunctionTable,
    InvalidParameterError,
    PermutationTable,
    sample_permutation,
)
from qinvert.inverters import (
    GroverInverter,
    NoisyInverter,
    TableAdviceInverter,
    make_example_inverter,
)
from qinvert.qrac import QuantumRegister


class TestTableAdviceInverter:
    """Test the partial inverse-table inverter."""

    def setup_method(self):
        """Set up an inverter storing half the inverse table."""
        self.inv = TableAdviceInverter(8, 8, 0.5)
        self.pi = sample_permutation(8, seed=4)

    def test_advice_size(self):
        """Test S = ceil(theta n) * ceil(log2 m)."""
        assert self.inv.s_qubits == 12
        assert self.inv.prepare_advice(self.pi).qubits == 12

    def test_stored_challenges_succeed(self):
        """Test certain success on stored challenges and 1/m elsewhere."""
        for y in range(8):
            expected = 1.0 if y < 4 else 1 / 8
            assert self.inv.success_probability(self.pi, y) == pytest.approx(expected)

    def test_makes_no_queries(self):
        """Test the empty transcript."""
        run = self.inv.run(self.pi, 0, self.inv.prepare_advice(self.pi))
        assert run.transcript.queries_made == 0
        assert run.mass_on([self.pi.inverse()(0)]) == pytest.approx(1.0)

    def test_table_size_checked(self):
        """Test that a table of the wrong size is refused."""
        with pytest.raises(DimensionMismatchError):
            self.inv.prepare_advice(PermutationTable.identity(4))

    def test_dense_advice_rejected(self):
        """Test that table advice must be classical."""
        dense = QuantumRegister(1, amplitudes=[0.6, 0.8])
        with pytest.raises(InvalidParameterError):
            self.inv.stored_preimage(0, dense)


class TestGroverInverter:
    """Test the advice-free Grover inverter."""

    def test_success_matches_grover(self):
        """Test m=16, T=3."""
        inv = GroverInverter(16, 16, 3)
        pi = sample_permutation(16, seed=1)
        assert inv.success_probability(pi, pi(5)) == pytest.approx(0.961585, abs=1e-6)
        assert inv.s_qubits == 0

    def test_transcript_total(self):
        """Test that each iteration is one query."""
        inv = GroverInverter(8, 8, 2)
        pi = PermutationTable.identity(8)
        run = inv.run(pi, 3, inv.prepare_advice(pi))
        assert run.transcript.queries_made == 2
        assert run.transcript.total == pytest.approx(2.0)


class TestNoisyInverter:
    """Test the fixed-accuracy inverter."""

    def setup_method(self):
        """Set up a table where y=1 has two preimages."""
        self.f = FunctionTable.from_values([0, 1, 1, 2], n=3)
        self.inv = NoisyInverter(4, 3, 0.6)

    def test_junk_spread_over_non_preimages(self):
        """Test the output distribution."""
        dist = self.inv.output_distribution(self.f, 1, self.inv.prepare_advice(self.f))
        assert dist.tolist() == pytest.approx([0.2, 0.6, 0.0, 0.2])
        assert self.inv.success_probability(self.f, 1) == pytest.approx(0.6)

    def test_missing_challenge(self):
        """Test a challenge outside the image."""
        f = FunctionTable.from_values([0, 0, 0, 2], n=3)
        assert self.inv.success_probability(f, 1) == 0.0

    def test_every_point_a_preimage(self):
        """Test a constant table."""
        f = FunctionTable.from_values([2, 2, 2, 2], n=3)
        assert self.inv.success_probability(f, 2) == pytest.approx(1.0)

    def test_advice_round_trip(self):
        """Test reading the table back from the advice."""
        advice = self.inv.prepare_advice(self.f)
        assert self.inv.table_from_advice(advice).tolist() == [0, 1, 1, 2]
        assert advice.qubits == 8


class TestFactory:
    """Test make_example_inverter."""

    def test_kinds(self):
        """Test each kind and its label."""
        assert make_example_inverter("table-advice", 8, 8, theta=0.25).label == "table-advice-0.25"
        assert make_example_inverter("grover", 8, 8, t_queries=2).label == "grover-2"
        assert make_example_inverter("noisy", 8, 8, p=0.9).label == "noisy-0.9"

    def test_unknown_kind(self):
        """Test the error for an unknown kind."""
        with pytest.raises(InvalidParameterError):
            make_example_inverter("oracle", 8, 8)

    def test_parameter_ranges(self):
        """Test theta and p validation."""
        with pytest.raises(InvalidParameterError):
            TableAdviceInverter(8, 8, 1.5)
        with pytest.raises(InvalidParameterError):
            NoisyInverter(8, 8, -0.1)
