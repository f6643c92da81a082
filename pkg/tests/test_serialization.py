"""
Unit tests for qinvert.serialization module
"""

import json

import numpy as np
import pytest

from qinvert.attacks import TradeoffRecord
from qinvert.core import (
    EncodingError,
    FunctionTable,
    InvariantViolation,
    PermutationTable,
    sample_permutation,
)
from qinvert.hashing import sample_hash
from qinvert.qrac import Encoding, Family, QuantumRegister, evaluate_code, full_table_code
from qinvert.ranking import LengthComponent
from qinvert.resources import QueryBudgetExceeded
from qinvert.serialization import (
    content_hash,
    code_report_json,
    code_reports_to_csv,
    dump_algorithm,
    dump_encoding,
    dump_hash,
    dump_table,
    failure_line,
    format_value,
    gnuplot_script,
    load_encoding,
    load_hash,
    load_table,
    parse_algorithm,
    records_to_csv,
    rows_to_csv,
    write_text,
)
from qinvert.statevector import MatrixStep, OracleAlgorithm, grover_algorithm, output_distribution

GROVER_TEXT = """\
# two Grover iterations looking for y = 1
T 2
PREP_UNIFORM
PHASEFLIP preimage:1
DIFFUSE
PHASEFLIP preimage:1
DIFFUSE
"""


class TestTables:
    """Test the table text format."""

    def test_permutation(self):
        """Test the PERM header."""
        pi = sample_permutation(10, seed=1)
        text = dump_table(pi)
        assert text.startswith("PERM 10\n")
        loaded = load_table(text)
        assert isinstance(loaded, PermutationTable)
        assert loaded == pi

    def test_function_with_comments(self):
        """Test the FUNC header with comments and split lines."""
        loaded = load_table("FUNC 4 3  # m n\n2 0\n2 1\n")
        assert loaded == FunctionTable.from_values([2, 0, 2, 1], n=3)

    @pytest.mark.parametrize("text", [
        "",
        "TABLE 3\n0 1 2\n",
        "PERM 3\n0 1\n",
        "PERM 3\n0 1 1\n",
        "FUNC 2 2\n0 x\n",
    ])
    def test_malformed(self, text):
        """Test that bad table text raises EncodingError."""
        with pytest.raises(EncodingError):
            load_table(text)


class TestHashes:
    """Test the hash text format."""

    def test_round_trip(self):
        """Test that a sampled hash survives dump and load."""
        h = sample_hash(13, 6, seed=4)
        text = dump_hash(h)
        assert text.splitlines()[0] == "AFFINE 13 6"
        assert load_hash(text) == h

    def test_wrong_row_count(self):
        """Test the row count check."""
        with pytest.raises(EncodingError):
            load_hash("AFFINE 4 2\n3\nOFFSET 1\n")


class TestAlgorithms:
    """Test the algorithm text format."""

    def test_parse_grover(self):
        """Test that a parsed program behaves like the built-in search."""
        alg = parse_algorithm(GROVER_TEXT)
        assert alg.t_max == 2
        pi = PermutationTable.from_values([3, 1, 0, 2])
        expected = output_distribution(grover_algorithm(4, y=1, k=2), pi)
        assert np.allclose(output_distribution(alg, pi), expected)

    def test_dump_parse_agree(self):
        """Test that dumped text parses to the same program."""
        alg = grover_algorithm(8, y=3, k=2)
        assert dump_algorithm(parse_algorithm(dump_algorithm(alg))) == dump_algorithm(alg)

    def test_budget_defaults_to_oracle_calls(self):
        """Test the implicit T line."""
        assert parse_algorithm("ORACLE\nORACLE\n").t_max == 2

    def test_budget_enforced(self):
        """Test that a declared budget is enforced."""
        with pytest.raises(QueryBudgetExceeded):
            parse_algorithm("T 1\nORACLE\nORACLE\n")

    def test_matrix_file(self, tmp_path):
        """Test loading a unitary from a text file."""
        (tmp_path / "x.txt").write_text("0 1\n1 0\n")
        alg = parse_algorithm("MATRIX x.txt response\nORACLE\n", base_dir=tmp_path)
        assert dump_algorithm(alg) == "T 1\nMATRIX x.txt response\nORACLE\n"

    def test_npy_matrix_file(self, tmp_path):
        """Test loading a unitary from a .npy file."""
        np.save(tmp_path / "h.npy", np.array([[1, 1], [1, -1]]) / np.sqrt(2))
        alg = parse_algorithm("MATRIX h.npy\n", base_dir=tmp_path)
        assert alg.steps[0].matrix.shape == (2, 2)

    @pytest.mark.parametrize("text", [
        "JUMP 3\n",
        "PHASEFLIP bogus\n",
        "PREP_UNIFORM ancilla\n",
        "MATRIX missing.txt\n",
        "MATRIX x.txt sideways\n",
    ])
    def test_malformed(self, text, tmp_path):
        """Test that bad programs raise EncodingError."""
        (tmp_path / "x.txt").write_text("1 0\n0 1\n")
        with pytest.raises(EncodingError):
            parse_algorithm(text, base_dir=tmp_path)

    def test_error_names_the_line(self):
        """Test that errors report the offending line."""
        with pytest.raises(EncodingError, match="Line 2"):
            parse_algorithm("ORACLE\nJUMP\n")

    def test_inline_matrix_has_no_text_form(self):
        """Test that matrices without a source file cannot be dumped."""
        alg = OracleAlgorithm(t_max=0, steps=(MatrixStep(np.eye(2)),))
        with pytest.raises(EncodingError):
            dump_algorithm(alg)


class TestEncodings:
    """Test the encoding text format."""

    def test_round_trip(self):
        """Test bits, registers, ledger and case."""
        enc = Encoding("1011", (QuantumRegister(5, basis_index=19),),
                       (LengthComponent("flag", 1.0, 1), LengthComponent("rest", 2.5, 3),
                        LengthComponent("advice", 5.0, 5)), case="B")
        loaded = load_encoding(dump_encoding(enc))
        assert loaded.classical_bits == "1011"
        assert loaded.case == "B"
        assert loaded.quantum_registers[0].basis_index == 19
        assert loaded.components == enc.components

    def test_empty_encoding(self):
        """Test the placeholder for empty fields."""
        loaded = load_encoding(dump_encoding(Encoding("")))
        assert loaded.length_bits == 0

    def test_dense_register_rejected(self):
        """Test that superpositions have no text form."""
        enc = Encoding("", (QuantumRegister(1, amplitudes=np.array([0.6, 0.8])),))
        with pytest.raises(EncodingError):
            dump_encoding(enc)

    def test_bad_ledger(self):
        """Test that loading checks the ledger."""
        with pytest.raises(InvariantViolation):
            load_encoding("ENC A\nBITS 11\nCOMP\tx\t1.0\t1\n")


class TestArtifacts:
    """Test CSV, JSON and plot output."""

    def test_format_value(self):
        """Test booleans and floats."""
        assert format_value(True) == "true"
        assert format_value(np.bool_(False)) == "false"
        assert format_value(0.1 + 0.2) == "0.3"
        assert format_value(7) == "7"

    def test_rows_to_csv(self):
        """Test the header and row width check."""
        assert rows_to_csv(("a", "b"), [(1, 0.5)]) == "a,b\n1,0.5\n"
        with pytest.raises(EncodingError):
            rows_to_csv(("a", "b"), [(1,)])

    def test_records_csv_is_deterministic(self):
        """Test that identical records give identical bytes."""
        records = [TradeoffRecord("checkpoint", 64, 64, 96, 14, 6.25, 1.0, 3)]
        text = records_to_csv(records)
        assert text == records_to_csv(list(records))
        assert text.splitlines() == [
            "method,n,m,s_bits,t_worst,t_mean,epsilon,seed",
            "checkpoint,64,64,96,14,6.25,1,3",
        ]
        assert content_hash(text) == content_hash(records_to_csv(records))
        assert len(content_hash(text)) == 16

    def test_code_reports(self):
        """Test CSV and JSON forms of a code report."""
        report = evaluate_code(full_table_code(), Family("permutation", 3))
        csv_text = code_reports_to_csv([report])
        assert csv_text.startswith("scheme,family,l_avg,delta,bound,slack,mode,trials,std_err\n")
        assert json.loads(code_report_json(report))["scheme"] == "full-table-forward"

    def test_failure_line(self):
        """Test that failure records are single JSON lines."""
        line = failure_line({"trial": 3, "holds": np.bool_(False), "slack": -0.25})
        assert "\n" not in line
        assert json.loads(line) == {"holds": "false", "slack": -0.25, "trial": 3}

    def test_write_text_creates_directories(self, tmp_path):
        """Test that parent directories are created."""
        path = write_text(tmp_path / "a" / "b.csv", "x\n")
        assert path.read_text() == "x\n"

    def test_gnuplot_script(self):
        """Test the reference curve chosen for each kind."""
        assert "S*T + T^2" in gnuplot_script("sweep.csv", "permutation", 1024, 0.5)
        script = gnuplot_script("sweep.csv", "function", 1024, 0.5, title="hellman")
        assert "S*T^2" in script
        assert "set title 'hellman'" in script
