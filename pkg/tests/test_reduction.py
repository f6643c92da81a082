"""
Unit tests for qinvert.reduction module
"""

import math

import numpy as np
import pytest

from qinvert.core import (
    FunctionTable,
    InvalidParameterError,
    PermutationTable,
    sample_function,
    sample_permutation,
)
from qinvert.inverters import GroverInverter, NoisyInverter, TableAdviceInverter
from qinvert.qrac import Family
from qinvert.reduction import (
    DEFAULT_PARAMS,
    FunctionScheme,
    PermutationScheme,
    SchemeParams,
    compute_good_set_G,
    compute_success_set_I,
    decode_permutation,
    encode_permutation,
    hash_filter_acceptance,
    heavy_image_fraction,
    measure_scheme,
    plurality_distribution,
    sample_R,
)

# Large enough gamma that R is rarely empty at these sizes.
DENSE = SchemeParams(gamma=0.4, c_const=0.9, rho=2)


class TestSchemeParams:
    """Test the reduction constants."""

    def test_defaults(self):
        """Test the default constants and derived values."""
        assert DEFAULT_PARAMS.gamma == 0.01
        assert DEFAULT_PARAMS.c_const == 0.04
        assert DEFAULT_PARAMS.epsilon_prime == 0.25
        assert DEFAULT_PARAMS.rho_permutation(8) == 28
        assert DEFAULT_PARAMS.k_threshold(16, 16) == pytest.approx(60.0)
        assert DEFAULT_PARAMS.tag_bits(16, 16) == 8

    def test_zero_query_inverters_count_as_one(self):
        """Test T_eff = max(1, T) in the sampling rate."""
        assert DEFAULT_PARAMS.r_probability(0) == DEFAULT_PARAMS.r_probability(1) == 0.01
        assert DEFAULT_PARAMS.r_probability(2) == pytest.approx(0.0025)

    def test_gamma_constraint(self):
        """Test that 5 gamma^2 / c must stay below 1."""
        with pytest.raises(InvalidParameterError):
            SchemeParams(gamma=0.5, c_const=0.5)
        with pytest.raises(InvalidParameterError):
            SchemeParams(epsilon=0.0)

    def test_rho_override(self):
        """Test a fixed number of advice copies."""
        assert DENSE.rho_permutation(1000) == 2
        assert DENSE.rho_function(64, 64) == 2


class TestSets:
    """Test the success set, R and the good set."""

    def test_success_set_threshold(self):
        """Test I for a permutation under the success threshold."""
        inv = TableAdviceInverter(8, 8, 0.5)
        assert compute_success_set_I(inv, PermutationTable.identity(8)) == frozenset(range(4))

    def test_success_set_argmax(self):
        """Test I for a function: only the lowest preimage is the top answer."""
        inv = NoisyInverter(4, 2, 1.0)
        f = FunctionTable.from_values([0, 0, 1, 1], n=2)
        assert compute_success_set_I(inv, f) == frozenset({0, 2})

    def test_sample_r_rate(self):
        """Test the inclusion rate gamma / T^2."""
        assert len(sample_R(10_000, 1, 0.5, seed=1)) == pytest.approx(5000, abs=250)
        assert len(sample_R(10_000, 2, 0.5, seed=1)) == pytest.approx(1250, abs=150)
        assert sample_R(100, 1, 0.5, seed=7) == sample_R(100, 1, 0.5, seed=7)

    def test_sample_r_rejects_bad_rate(self):
        """Test that the inclusion probability must be at most one."""
        with pytest.raises(InvalidParameterError):
            sample_R(10, 0, 1.5, seed=1)

    def test_good_set_drops_heavy_queriers(self):
        """Test that Grover runs spread too much magnitude over R."""
        inv = GroverInverter(8, 8, 2)
        goods = compute_good_set_G(inv, PermutationTable.identity(8), frozenset(range(8)))
        assert goods.set_i == frozenset(range(8))
        assert goods.set_j == goods.set_h
        assert goods.set_g == frozenset()
        assert all(q > 0.02 for q in goods.magnitudes.values())

    def test_good_set_without_queries(self):
        """Test that zero-query inverters keep all of R & I."""
        inv = TableAdviceInverter(8, 8, 0.5)
        r_set = frozenset({1, 3, 5})
        goods = compute_good_set_G(inv, PermutationTable.identity(8), r_set)
        assert goods.set_g == frozenset({1, 3})


class TestPlurality:
    """Test the plurality vote over repeated runs."""

    def test_odd_votes(self):
        """Test two equally likely outcomes with three votes."""
        votes = plurality_distribution(np.array([0.5, 0.5]), 3)
        assert votes[0] == pytest.approx(0.5)
        assert votes[1] == pytest.approx(0.5)

    def test_ties_lose(self):
        """Test that a tied vote is a failure."""
        votes = plurality_distribution(np.array([0.5, 0.5]), 2)
        assert votes[0] == pytest.approx(0.25)
        assert sum(votes.values()) == pytest.approx(0.5)

    def test_certain_and_single_run(self):
        """Test the degenerate cases."""
        assert plurality_distribution(np.array([0.0, 1.0, 0.0]), 5) == {1: 1.0}
        assert plurality_distribution(np.array([0.25, 0.75]), 1) == {0: 0.25, 1: 0.75}

    def test_amplifies_majority(self):
        """Test that more votes raise the chance of the likely outcome."""
        p = np.array([0.6, 0.3, 0.1])
        assert plurality_distribution(p, 15)[0] > plurality_distribution(p, 5)[0] > 0.6

    def test_sampled_regime(self):
        """Test the Monte Carlo estimate beyond the exact cutoff."""
        votes = plurality_distribution(np.array([0.6, 0.4]), 101, seed=3)
        assert votes[0] > 0.9


class TestPermutationScheme:
    """Test encoding permutations from inverters."""

    def test_case_a_when_not_invertible(self):
        """Test the fallback for an inverter that rarely succeeds."""
        inv = TableAdviceInverter(8, 8, 0.0)
        pi = sample_permutation(8, seed=2)
        enc = encode_permutation(pi, inv, seed=5)
        assert enc.case == "A"
        assert enc.length_bits == 1 + 16
        for y in range(8):
            assert decode_permutation(enc, y, inv, seed=5).value == pi.inverse()(y)

    def test_case_b_round_trip(self):
        """Test that case-B encodings decode every challenge correctly."""
        inv = TableAdviceInverter(8, 8, 1.0)
        scheme = PermutationScheme(inv, DENSE)
        pi = sample_permutation(8, seed=3)
        cases = []
        for seed in range(10):
            enc = scheme.encode(pi, seed)
            cases.append(enc.case)
            if enc.case != "B":
                continue
            analysis = scheme.analyze(pi, seed)
            assert enc.length_bits == scheme.expected_case_b_bits(analysis.goods)
            assert len(enc.quantum_registers) == 2
            for y in range(8):
                result = scheme.decode(enc, y, seed)
                assert result.value == pi.inverse()(y)
                assert result.probability_of(pi.inverse()(y)) == pytest.approx(1.0)
        assert "B" in cases

    def test_rejects_non_bijection(self):
        """Test that the permutation scheme needs a permutation."""
        inv = TableAdviceInverter(3, 3, 1.0)
        with pytest.raises(InvalidParameterError):
            PermutationScheme(inv).encode(FunctionTable.from_values([0, 0, 1], n=3), 0)


class TestFunctionScheme:
    """Test encoding functions from inverters."""

    def test_case_b_round_trip(self):
        """Test that case-B encodings recover every preimage set."""
        inv = NoisyInverter(8, 8, 1.0)
        scheme = FunctionScheme(inv, DENSE)
        family = Family("function", 8, 8)
        f = sample_function(8, 8, seed=6)
        cases = []
        for seed in range(10):
            enc = scheme.encode(f, seed)
            cases.append(enc.case)
            if enc.case == "B":
                analysis = scheme.analyze(f, seed)
                assert enc.length_bits == scheme.expected_case_b_bits(analysis.goods)
            for y in range(8):
                result = scheme.decode(enc, y, seed)
                assert result.value == family.truth(f, y, "inverse")
        assert "B" in cases

    def test_heavy_image_falls_back(self):
        """Test case A for a table with an oversized preimage."""
        params = SchemeParams(big_c=0.1)
        inv = NoisyInverter(8, 8, 1.0)
        scheme = FunctionScheme(inv, params)
        assert scheme.k_threshold < 8
        f = FunctionTable.from_values([0] * 8, n=8)
        assert scheme.analyze(f, 0).reason == "heavy-image"

    def test_regime_checked(self):
        """Test the m <= 8n requirement."""
        with pytest.raises(InvalidParameterError):
            FunctionScheme(NoisyInverter(40, 4, 1.0))


class TestMeasurement:
    """Test end-to-end measurement of schemes."""

    def test_permutation_measurement(self):
        """Test claims and code report for a perfect zero-query inverter."""
        inv = TableAdviceInverter(8, 8, 1.0)
        result = measure_scheme("permutation", inv, DENSE, trials=20, seed=1, code_trials=40)
        claims = result.claims
        assert claims.i_size == 8
        assert claims.accounting_mismatches == 0
        assert claims.max_gap == pytest.approx(0.0, abs=1e-12)
        assert claims.gap_within_sqrt_c
        assert result.report.delta == pytest.approx(1.0)
        assert result.report.accepted

    def test_function_measurement(self):
        """Test the function scheme end to end."""
        inv = NoisyInverter(8, 8, 1.0)
        result = measure_scheme("function", inv, DENSE, trials=20, seed=2, code_trials=40)
        assert result.claims.accounting_mismatches == 0
        assert result.report.delta == pytest.approx(1.0)

    def test_code_report_optional(self):
        """Test skipping the code report."""
        inv = TableAdviceInverter(8, 8, 1.0)
        assert measure_scheme("permutation", inv, DENSE, trials=5, code_trials=0).report is None

    def test_unknown_kind(self):
        """Test the scheme kind check."""
        with pytest.raises(InvalidParameterError):
            measure_scheme("graph", TableAdviceInverter(4, 4, 1.0))


class TestFunctionRegimeChecks:
    """Test heavy images and the hash filter."""

    def test_heavy_image_fraction_exhaustive(self):
        """Test exact counts on tiny domains."""
        assert heavy_image_fraction(3, 2, 1.5) == 1.0
        assert heavy_image_fraction(2, 2, 1) == 0.5

    def test_heavy_image_fraction_sampled(self):
        """Test that heavy images are rare at the default threshold."""
        k = DEFAULT_PARAMS.k_threshold(64, 64)
        assert heavy_image_fraction(64, 64, k, trials=500, seed=1) == 0.0

    def test_hash_filter_rate(self):
        """Test that wrong candidates pass at about 2^-tag_bits."""
        rate, ideal = hash_filter_acceptance(16, 16, trials=20_000, seed=1)
        assert ideal == 2.0 ** -8
        assert rate == pytest.approx(ideal, abs=2e-3)


class TestEndToEndRuns:
    """Test the reductions at their default constants on larger tables."""

    @pytest.mark.slow
    def test_permutation_scheme_table_advice(self):
        """Test delta, length accounting and the case-B gap at n = 32, theta = 0.5."""
        inv = TableAdviceInverter(32, 32, 0.5)
        assert DEFAULT_PARAMS.rho_permutation(32) == 42
        result = measure_scheme("permutation", inv, DEFAULT_PARAMS, trials=200, seed=7,
                                code_trials=300)
        claims = result.claims
        assert result.report.delta >= 0.98
        assert result.report.accepted
        assert claims.accounting_mismatches == 0
        assert claims.max_gap <= math.sqrt(DEFAULT_PARAMS.c_const) + 1e-9
        assert claims.gap_within_sqrt_c

    @pytest.mark.slow
    def test_function_scheme_noisy_inverter(self):
        """Test the tag filter rate and delta at m = n = 32 with p = 0.6."""
        trials = 100_000
        rate, ideal = hash_filter_acceptance(32, 32, DEFAULT_PARAMS, trials=trials, seed=8)
        assert ideal == 2.0 ** -DEFAULT_PARAMS.tag_bits(32, 32)
        sigma = math.sqrt((1 - ideal) / (ideal * trials))
        assert rate <= ideal * (1 + 3 * sigma)

        inv = NoisyInverter(32, 32, 0.6)
        result = measure_scheme("function", inv, DEFAULT_PARAMS, trials=50, seed=8,
                                code_trials=300)
        assert result.report.delta >= 1 - 5 / math.log2(32)
        assert result.claims.accounting_mismatches == 0

    @pytest.mark.slow
    def test_good_set_sizes_at_4096(self):
        """Test how often |H| and |G| reach their thresholds over 500 draws of R."""
        trials = 500
        inv = TableAdviceInverter(4096, 4096, 0.5)
        claims = measure_scheme("permutation", inv, DEFAULT_PARAMS, trials=trials, seed=9,
                                code_trials=0, accounting_trials=5).claims
        assert claims.i_size == 2048
        assert claims.h_threshold == pytest.approx(2048 * 0.01 / 2)
        assert claims.g_threshold == pytest.approx(0.25 * 0.01 * 4096 / 4)
        assert claims.pr_h >= 0.9 - 3 * math.sqrt(0.9 * 0.1 / trials)
        assert claims.pr_g >= 0.75 - 3 * math.sqrt(0.75 * 0.25 / trials)
