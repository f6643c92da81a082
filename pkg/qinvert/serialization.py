"""
qinvert - Serialization

Line-oriented text formats for tables, hash functions, algorithms and
basis-state encodings, plus the CSV, JSON and gnuplot artifacts the
experiment runner writes. Every format round-trips exactly; CSV output is
byte-identical for identical inputs.
"""

import csv
import hashlib
import io
import json
import math
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Union

import numpy as np

from .attacks import RECORD_FIELDS, TradeoffRecord
from .core import EncodingError, FunctionTable, PermutationTable
from .hashing import AffineHash, bits_to_int, int_to_bits
from .qrac import CODE_REPORT_FIELDS, CodeReport, Encoding, QuantumRegister
from .ranking import LengthComponent
from .statevector import (
    REGISTERS,
    Diffuse,
    MatrixStep,
    OracleAlgorithm,
    OracleCall,
    PhaseFlip,
    PrepareUniform,
    Step,
)

PathLike = Union[str, Path]
FLOAT_FORMAT = "%.9g"


def _lines(text: str) -> List[str]:
    out = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            out.append(line)
    return out


def dump_table(f: FunctionTable) -> str:
    """``PERM n`` or ``FUNC m n`` followed by the entries on one line."""
    header = f"PERM {f.n}" if isinstance(f, PermutationTable) else f"FUNC {f.m} {f.n}"
    return header + "\n" + " ".join(str(int(v)) for v in f.entries) + "\n"


def load_table(text: str) -> FunctionTable:
    """
    Parse a table written by dump_table.

    Raises:
        EncodingError: For a bad header, a wrong entry count or a non-integer
    """
    lines = _lines(text)
    if not lines:
        raise EncodingError("Empty table text")
    header = lines[0].split()
    try:
        values = [int(tok) for line in lines[1:] for tok in line.split()]
        if header[0] == "PERM" and len(header) == 2:
            m = n = int(header[1])
        elif header[0] == "FUNC" and len(header) == 3:
            m, n = int(header[1]), int(header[2])
        else:
            raise EncodingError(f"Unknown table header '{lines[0]}'")
    except ValueError as e:
        raise EncodingError(f"Malformed table text: {e}") from None
    if len(values) != m:
        raise EncodingError(f"Table header declares {m} entries, found {len(values)}")
    try:
        if header[0] == "PERM":
            return PermutationTable.from_values(values, n)
        return FunctionTable.from_values(values, n)
    except ValueError as e:
        raise EncodingError(str(e)) from None


def _hex_width(bits: int) -> int:
    return max(1, math.ceil(bits / 4))


def dump_hash(h: AffineHash) -> str:
    """``AFFINE in out``, one hex row per output bit, then ``OFFSET <hex>``."""
    width = _hex_width(h.in_bits)
    rows = [f"{bits_to_int(row):0{width}x}" for row in h.matrix]
    offset = f"{bits_to_int(h.offset):0{_hex_width(h.out_bits)}x}"
    return "\n".join([f"AFFINE {h.in_bits} {h.out_bits}"] + rows + [f"OFFSET {offset}"]) + "\n"


def load_hash(text: str) -> AffineHash:
    lines = _lines(text)
    try:
        kind, in_bits, out_bits = lines[0].split()
        if kind != "AFFINE":
            raise EncodingError(f"Unknown hash header '{lines[0]}'")
        in_bits, out_bits = int(in_bits), int(out_bits)
        rows = lines[1:1 + out_bits]
        tag, offset = lines[1 + out_bits].split()
        if tag != "OFFSET" or len(rows) != out_bits or len(lines) != out_bits + 2:
            raise EncodingError("Hash text has the wrong number of rows")
        matrix = np.array([int_to_bits(int(row, 16), in_bits) for row in rows], dtype=np.uint8)
        return AffineHash(in_bits, out_bits, matrix.reshape(out_bits, in_bits),
                          int_to_bits(int(offset, 16), out_bits))
    except (ValueError, IndexError) as e:
        raise EncodingError(f"Malformed hash text: {e}") from None


def _load_matrix(path: Path) -> np.ndarray:
    if not path.exists():
        raise EncodingError(f"Matrix file not found: {path}")
    if path.suffix == ".npy":
        return np.load(path)
    return np.loadtxt(path, dtype=np.complex128, ndmin=2)


def parse_algorithm(text: str, t_max: Optional[int] = None, base_dir: Optional[PathLike] = None,
                    name: str = "") -> OracleAlgorithm:
    """
    Parse an algorithm, one step per line.

    Steps: ``PREP_UNIFORM [reg]``, ``ORACLE``, ``DIFFUSE [reg]``,
    ``PHASEFLIP <predicate>`` and ``MATRIX <file> [reg]``. An optional first
    line ``T <t_max>`` sets the query budget, which otherwise defaults to the
    number of oracle calls. Matrix files are resolved against base_dir.

    Raises:
        EncodingError: For unknown steps or unreadable matrices
        QueryBudgetExceeded: If the steps exceed the declared budget
    """
    base = Path(base_dir) if base_dir is not None else Path.cwd()
    steps: List[Step] = []
    declared = t_max
    for lineno, line in enumerate(_lines(text), start=1):
        op, *args = line.split()
        op = op.upper()
        try:
            if op == "T" and not steps and len(args) == 1:
                declared = int(args[0]) if declared is None else declared
            elif op == "PREP_UNIFORM" and len(args) <= 1:
                steps.append(PrepareUniform(*args))
            elif op == "ORACLE" and not args:
                steps.append(OracleCall())
            elif op == "DIFFUSE" and len(args) <= 1:
                steps.append(Diffuse(*args))
            elif op == "PHASEFLIP" and len(args) == 1:
                steps.append(PhaseFlip(args[0]))
            elif op == "MATRIX" and len(args) in (1, 2):
                register = args[1] if len(args) == 2 else "query"
                if register not in REGISTERS + ("all",):
                    raise EncodingError(f"Unknown register '{register}'")
                steps.append(MatrixStep(_load_matrix(base / args[0]), register, args[0]))
            else:
                raise EncodingError(f"Unknown step '{line}'")
        except ValueError as e:
            raise EncodingError(f"Line {lineno}: {e}") from None
        except EncodingError as e:
            raise EncodingError(f"Line {lineno}: {e}") from None
    for step in steps:
        if isinstance(step, (PrepareUniform, Diffuse)) and step.register not in REGISTERS:
            raise EncodingError(f"Unknown register '{step.register}'")
    oracle_calls = sum(1 for s in steps if s.is_oracle_call)
    return OracleAlgorithm(t_max=oracle_calls if declared is None else declared,
                           steps=tuple(steps), name=name)


def dump_algorithm(alg: OracleAlgorithm) -> str:
    """
    Raises:
        EncodingError: If a step has no text form (inline matrices, prepares)
    """
    lines = [f"T {alg.t_max}"]
    for step in alg.steps:
        if not step.textual:
            raise EncodingError(f"Step {step.describe()} has no text form")
        lines.append(step.describe())
    return "\n".join(lines) + "\n"


def dump_encoding(enc: Encoding) -> str:
    """
    Text form of an encoding whose quantum registers are all basis states.

    Raises:
        EncodingError: If a register is not a basis state
    """
    lines = [f"ENC {enc.case or '-'}", f"BITS {enc.classical_bits or '-'}"]
    for reg in enc.quantum_registers:
        if not reg.is_basis:
            raise EncodingError("Only basis-state registers have a text form")
        lines.append(f"QREG {reg.qubits} {reg.basis_index:x}")
    for c in enc.components:
        lines.append(f"COMP\t{c.name}\t{c.ideal_bits!r}\t{c.realized_bits}")
    return "\n".join(lines) + "\n"


def load_encoding(text: str) -> Encoding:
    rows = [line for line in text.splitlines() if line.strip()]
    try:
        tag, case = rows[0].split()
        bits_tag, bits = rows[1].split()
        if tag != "ENC" or bits_tag != "BITS":
            raise EncodingError("Encoding text must start with ENC and BITS lines")
        registers = []
        components = []
        for row in rows[2:]:
            if row.startswith("QREG "):
                _, qubits, index = row.split()
                registers.append(QuantumRegister(int(qubits), basis_index=int(index, 16)))
            elif row.startswith("COMP\t"):
                _, name, ideal, realized = row.split("\t")
                components.append(LengthComponent(name, float(ideal), int(realized)))
            else:
                raise EncodingError(f"Unknown encoding line '{row}'")
    except (ValueError, IndexError) as e:
        raise EncodingError(f"Malformed encoding text: {e}") from None
    enc = Encoding("" if bits == "-" else bits, tuple(registers), tuple(components),
                   "" if case == "-" else case)
    enc.check_accounting()
    return enc


def format_value(value: Any) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return FLOAT_FORMAT % value
    return str(value)


def rows_to_csv(fields: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    """CSV text with a header row; floats use a fixed format."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(fields)
    for row in rows:
        if len(row) != len(fields):
            raise EncodingError(f"Row has {len(row)} values for {len(fields)} columns")
        writer.writerow([format_value(v) for v in row])
    return buffer.getvalue()


def records_to_csv(records: Iterable[TradeoffRecord]) -> str:
    return rows_to_csv(RECORD_FIELDS, (r.to_row() for r in records))


def code_reports_to_csv(reports: Iterable[CodeReport]) -> str:
    return rows_to_csv(CODE_REPORT_FIELDS,
                       ([r.to_record()[k] for k in CODE_REPORT_FIELDS] for r in reports))


def code_report_json(report: CodeReport) -> str:
    return json.dumps(report.to_record(), sort_keys=True)


def failure_line(record: Dict[str, Any]) -> str:
    """One JSON line for the failures file."""
    return json.dumps(record, sort_keys=True, default=format_value)


def content_hash(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def write_text(path: PathLike, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    return path


def gnuplot_script(csv_name: str, kind: str, n: int, epsilon: float, title: str = "") -> str:
    """
    Script plotting measured (S, T) points from a records CSV against the
    lower-bound reference curve for the kind.
    """
    target = epsilon * n
    if kind == "permutation":
        curve = f"(-x + sqrt(x*x + 4*{target!r}))/2"
        label = "S*T + T^2 = eps*n"
    else:
        curve = f"sqrt({target!r}/(x > 1 ? x : 1))"
        label = "S*T^2 = eps*n"
    return "\n".join([
        "set datafile separator ','",
        "set logscale xy",
        "set key left bottom",
        "set xlabel 'S (bits)'",
        "set ylabel 'T (queries, worst case)'",
        f"set title '{title or csv_name}'",
        f"plot '{csv_name}' using ($4 > 0 ? $4 : 1):5 skip 1 with points pt 7 title 'measured', \\",
        f"     {curve} with lines title '{label}'",
        "",
    ])
