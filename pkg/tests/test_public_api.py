"""
Test the public API surface of the qinvert package.
"""

import pytest

import qinvert


class TestPublicAPI:
    """Test that the public API is properly exposed."""

    def test_all_names_resolve(self):
        """Test that every name in __all__ is importable from the package."""
        for name in qinvert.__all__:
            assert hasattr(qinvert, name), name

    def test_version_info(self):
        """Test the version metadata."""
        assert qinvert.__version__ == "0.1.0"
        assert qinvert.__license__ == "MIT"

    def test_errors_share_base(self):
        """Test that exported errors derive from QInvertError."""
        for cls in (qinvert.InvalidParameterError, qinvert.InvariantViolation,
                    qinvert.ResourceExhausted, qinvert.QueryBudgetExceeded):
            assert issubclass(cls, qinvert.QInvertError)

    def test_top_level_round_trip(self):
        """Test a short end-to-end use of the top-level names."""
        pi = qinvert.sample_permutation(16, seed=3)
        assert qinvert.grover_invert(pi, pi(5), 3) == pytest.approx(0.961585, abs=1e-6)
        assert qinvert.permutation_bound(8, 1.0) == pytest.approx(15.299208, abs=1e-5)
