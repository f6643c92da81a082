"""
Unit tests for qinvert.qrac module
"""

import math

import numpy as np
import pytest

from qinvert.core import EncodingError, InvalidParameterError, InvariantViolation, sample_permutation
from qinvert.qrac import (
    CodeScheme,
    DecodeResult,
    Encoding,
    Family,
    QuantumRegister,
    audit_bound_chain,
    baseline_fraction_code,
    empty_code,
    evaluate_code,
    full_table_code,
    padded_entropy,
)
from qinvert.ranking import LengthComponent
from qinvert.resources import EnumerationCapExceeded, SimulationLimits

PLUS = np.array([1.0, 1.0]) / math.sqrt(2)


class TestEncodings:
    """Test encodings, registers and decode results."""

    def test_register_validation(self):
        """Test basis and dense register checks."""
        with pytest.raises(EncodingError):
            QuantumRegister(2, basis_index=4)
        with pytest.raises(InvariantViolation):
            QuantumRegister(1, amplitudes=np.array([1.0, 1.0]))
        with pytest.raises(InvalidParameterError):
            QuantumRegister(1)

    def test_length_counts_bits_and_qubits(self):
        """Test that a bit and a qubit count the same."""
        enc = Encoding("101", (QuantumRegister(4, basis_index=3), QuantumRegister(1, amplitudes=PLUS)))
        assert enc.length_bits == 8

    def test_accounting(self):
        """Test the ledger check."""
        Encoding("11", components=(LengthComponent("x", 1.5, 2),)).check_accounting()
        with pytest.raises(InvariantViolation):
            Encoding("11", components=(LengthComponent("x", 1.0, 1),)).check_accounting()

    def test_rejects_non_binary(self):
        """Test classical part validation."""
        with pytest.raises(EncodingError):
            Encoding("102")

    def test_decode_result_failure_mass(self):
        """Test that missing mass is reported as failure."""
        result = DecodeResult(1, {1: 0.5, 2: 0.25})
        assert result.probability_of(1) == 0.5
        assert result.probability_of(3) == 0.0
        assert result.failure_mass == pytest.approx(0.25)
        assert DecodeResult.certain(4).failure_mass == 0.0

    def test_padded_entropy_of_pure_register(self):
        """Test that padding a pure register keeps zero entropy."""
        assert padded_entropy(QuantumRegister(1, amplitudes=PLUS), 2) == pytest.approx(0.0, abs=1e-9)


class TestFamily:
    """Test families and their views."""

    def test_permutation_family(self):
        """Test size, label and entropies of S_n."""
        family = Family("permutation", 4)
        assert family.size == 24
        assert family.label == "S_4"
        assert family.s_x() == pytest.approx(math.log2(24))
        assert sum(1 for _ in family.tables()) == 24

    def test_function_family_views(self):
        """Test forward and inverse coordinates of F(m, n)."""
        family = Family("function", 2, 3)
        assert family.coordinates("forward") == 3
        assert family.coordinates("inverse") == 2
        table = next(iter(family.tables()))
        assert family.truth(table, 0, "inverse") == frozenset({0, 1, 2})

    def test_permutation_inverse_truth(self):
        """Test that the inverse view of a permutation is its inverse."""
        pi = sample_permutation(6, seed=2)
        family = Family("permutation", 6)
        assert all(family.truth(pi, y, "inverse") == pi.inverse()(y) for y in range(6))

    def test_validation(self):
        """Test family argument checks."""
        with pytest.raises(InvalidParameterError):
            Family("graph", 3)
        with pytest.raises(InvalidParameterError):
            Family("permutation", 3, 4)
        with pytest.raises(InvalidParameterError):
            Family("function", 3).coordinates("sideways")


class TestEvaluateCode:
    """Test measurement of (L, delta)."""

    @pytest.mark.slow
    def test_baseline_on_s8(self):
        """Test the baseline at n=8, theta=0.5 in exact mode."""
        report = evaluate_code(baseline_fraction_code(0.5), Family("permutation", 8))
        assert report.delta == pytest.approx(0.5625)
        assert report.l_avg == 12.0
        assert report.accepted
        assert report.scheme == "baseline-0.5"

    def test_baseline_small(self):
        """Test the baseline formula theta' + (1 - theta')/n on S_5."""
        report = evaluate_code(baseline_fraction_code(0.4), Family("permutation", 5))
        assert report.delta == pytest.approx(0.4 + 0.6 / 5)
        assert report.l_avg == 2 * 3
        assert report.std_err == 0.0

    def test_full_table_is_near_the_bound(self):
        """Test that storing everything is within two bits of the bound."""
        for family in (Family("permutation", 5), Family("function", 3, 3)):
            report = evaluate_code(full_table_code(), family)
            assert report.delta == 1.0
            assert 0.0 <= report.slack <= 2.0

    def test_full_table_inverse_view(self):
        """Test decoding preimage sets from the whole table."""
        report = evaluate_code(full_table_code("inverse"), Family("function", 2, 3))
        assert report.delta == 1.0
        assert report.l_avg == 4.0
        assert report.bound == pytest.approx(3.0)

    def test_empty_code(self):
        """Test the zero-length code."""
        report = evaluate_code(empty_code(), Family("permutation", 4))
        assert report.l_avg == 0.0
        assert report.delta == pytest.approx(0.25)
        assert report.accepted

    def test_monte_carlo_agrees_with_exact(self):
        """Test Monte Carlo against the exact baseline value."""
        report = evaluate_code(baseline_fraction_code(0.5), Family("permutation", 8),
                               mode="mc", trials=2000, seed=3)
        assert report.delta == pytest.approx(0.5625, abs=0.05)
        assert report.std_err > 0.0

    def test_monte_carlo_independent_of_workers(self):
        """Test that threading does not change results."""
        family = Family("function", 4, 6)
        one = evaluate_code(full_table_code(), family, mode="mc", trials=200, seed=9)
        four = evaluate_code(full_table_code(), family, mode="mc", trials=200, seed=9, workers=4)
        assert one == four

    def test_triple_cap(self):
        """Test the exact-mode enumeration cap."""
        limits = SimulationLimits(max_exact_triples=100)
        with pytest.raises(EnumerationCapExceeded):
            evaluate_code(full_table_code(), Family("permutation", 5), limits=limits)

    def test_unbounded_randomness_needs_monte_carlo(self):
        """Test that 64-bit randomness cannot be enumerated."""
        scheme = CodeScheme("seeded", lambda t, r: Encoding(""),
                            lambda e, i, r, f: DecodeResult.certain(0), randomness_space=None)
        with pytest.raises(InvalidParameterError):
            evaluate_code(scheme, Family("permutation", 3))

    def test_unknown_mode(self):
        """Test mode validation."""
        with pytest.raises(InvalidParameterError):
            evaluate_code(empty_code(), Family("permutation", 3), mode="fast")


class TestAudit:
    """Test the numerical audit of the inequality chain."""

    @pytest.mark.parametrize("n", [2, 3])
    @pytest.mark.parametrize("scheme", [baseline_fraction_code(0.5), full_table_code()],
                             ids=["baseline", "full-table"])
    def test_every_step_holds(self, n, scheme):
        """Test that each inequality holds on small permutation families."""
        steps = audit_bound_chain(scheme, Family("permutation", n))
        assert [s.step_id for s in steps] == [
            "chain-rule", "holevo", "conditioning", "register-length",
            "subadditivity", "data-processing", "fano", "bound",
        ]
        for step in steps:
            assert step.holds, step

    def test_full_table_entropy_matches_family(self):
        """Test that a lossless code has S(Q) = S(X)."""
        steps = {s.step_id: s for s in audit_bound_chain(full_table_code(), Family("permutation", 3))}
        assert steps["register-length"].left == pytest.approx(math.log2(6))

    def test_audit_cap(self):
        """Test that large audits are refused."""
        limits = SimulationLimits(max_audit_qubits=2)
        with pytest.raises(EnumerationCapExceeded):
            audit_bound_chain(full_table_code(), Family("permutation", 3), limits=limits)
