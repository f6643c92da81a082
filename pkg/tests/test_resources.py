"""
Unit tests for qinvert.resources module
"""

import pytest

from qinvert.core import QInvertError
from qinvert.resources import (
    DEFAULT_LIMITS,
    DimensionCapExceeded,
    EnumerationCapExceeded,
    QueryBudget,
    QueryBudgetExceeded,
    ResourceExhausted,
    SimulationLimits,
    TrialPool,
    WorkCapExceeded,
)


class TestSimulationLimits:
    """Test the resource caps."""

    def test_defaults(self):
        """Test the default caps."""
        assert DEFAULT_LIMITS.max_amplitudes == 2 ** 24
        assert DEFAULT_LIMITS.max_exact_triples == 10 ** 7
        assert DEFAULT_LIMITS.max_audit_branches == 4096
        assert DEFAULT_LIMITS.max_audit_qubits == 8

    def test_amplitude_cap(self):
        """Test that oversized states are refused with value and limit."""
        limits = SimulationLimits(max_amplitudes=100)
        limits.check_amplitudes(100)
        with pytest.raises(DimensionCapExceeded) as info:
            limits.check_amplitudes(101)
        assert info.value.value == 101
        assert info.value.limit == 100

    def test_triple_and_audit_caps(self):
        """Test the enumeration caps."""
        limits = SimulationLimits(max_exact_triples=10, max_audit_branches=4, max_audit_qubits=3)
        with pytest.raises(EnumerationCapExceeded):
            limits.check_triples(11)
        with pytest.raises(EnumerationCapExceeded):
            limits.check_audit(5, 1)
        with pytest.raises(EnumerationCapExceeded):
            limits.check_audit(1, 4)

    def test_hellman_work_cap(self):
        """Test the Hellman work cap relative to the domain."""
        limits = SimulationLimits(hellman_work_factor=2)
        limits.check_hellman_work(200, 100)
        with pytest.raises(WorkCapExceeded):
            limits.check_hellman_work(201, 100)

    def test_none_disables_a_cap(self):
        """Test that None means unlimited."""
        SimulationLimits(max_amplitudes=None).check_amplitudes(10 ** 12)

    def test_from_config_ignores_other_keys(self):
        """Test building limits from a config dict."""
        limits = SimulationLimits.from_config({"max_audit_qubits": "5", "seed": 1})
        assert limits.max_audit_qubits == 5
        assert limits.max_amplitudes == 2 ** 24


class TestQueryBudget:
    """Test query metering."""

    def test_counts_queries(self):
        """Test that queries within budget are counted."""
        budget = QueryBudget(2)
        budget.consume_query()
        budget.consume_query()
        assert budget.queries == 2
        assert budget.remaining == 0

    def test_exceeding_raises(self):
        """Test the error raised past the budget."""
        budget = QueryBudget(1, label="grover")
        budget.consume_query()
        with pytest.raises(QueryBudgetExceeded, match="Query budget 1 exceeded") as info:
            budget.consume_query()
        assert isinstance(info.value, ResourceExhausted)
        assert isinstance(info.value, QInvertError)

    def test_unbounded_budget(self):
        """Test that a budget of None only counts."""
        budget = QueryBudget()
        for _ in range(10):
            budget.consume_query()
        assert budget.remaining is None
        assert budget.checkpoint() == {"queries": 10, "t_max": None}


class TestTrialPool:
    """Test the trial pool."""

    def test_in_process_order(self):
        """Test one worker preserves order."""
        assert TrialPool(1).map(lambda x: x * x, range(5)) == [0, 1, 4, 9, 16]

    def test_threaded_order(self):
        """Test that several workers still return results in input order."""
        assert TrialPool(4).map(lambda x: x * x, range(50)) == [x * x for x in range(50)]

    def test_rejects_zero_workers(self):
        """Test pool validation."""
        with pytest.raises(ValueError):
            TrialPool(0)
