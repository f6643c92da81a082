"""
qinvert - Function inversion time-space tradeoff workbench

Exact statevector simulation of oracle algorithms with advice, entropy tools
and variable-length random access codes for the lower-bound side, and
Hellman, checkpoint and Grover attacks for the upper-bound side.
"""

# Version information
__version__ = "0.1.0"
__author__ = "Alex Towell"
__license__ = "MIT"

# Tables, seeds and errors
from .core import (
    DimensionMismatchError,
    EncodingError,
    FunctionTable,
    InvalidParameterError,
    InvariantViolation,
    InversePartition,
    PermutationTable,
    QInvertError,
    derive_seed,
    invert_partition,
    rng_for,
    sample_function,
    sample_permutation,
)
from .resources import (
    DimensionCapExceeded,
    EnumerationCapExceeded,
    QueryBudget,
    QueryBudgetExceeded,
    ResourceExhausted,
    SimulationLimits,
    TrialPool,
    WorkCapExceeded,
)

# Simulation and entropy
from .statevector import (
    OracleAlgorithm,
    QueryTranscript,
    RegisterLayout,
    StateVector,
    apply_oracle,
    grover_invert,
    run_with_transcript,
    swapping_gap,
)
from .entropy import (
    ClassicalQuantumState,
    DensityMatrix,
    binary_entropy,
    conditional_entropy,
    mutual_information,
    partition_bound,
    permutation_bound,
    qracvl_bound,
    von_neumann_entropy,
)
from .hashing import AffineHash, sample_hash

# Codes and reductions
from .qrac import CodeReport, CodeScheme, DecodeResult, Encoding, Family, evaluate_code
from .inverters import Inverter, make_example_inverter
from .reduction import (
    SchemeParams,
    compute_good_set_G,
    compute_success_set_I,
    decode_function,
    decode_permutation,
    encode_function,
    encode_permutation,
    measure_scheme,
    sample_R,
)

# Attacks
from .attacks import TradeoffRecord, checkpoint_attack, grover_point, hellman_attack, sweep

# High-level API
from .runner import ExperimentConfig, ExperimentRunner, run_experiment

__all__ = [
    # Version info
    "__version__", "__author__", "__license__",

    # Tables, seeds and errors
    "QInvertError", "InvalidParameterError", "DimensionMismatchError",
    "InvariantViolation", "EncodingError",
    "FunctionTable", "PermutationTable", "InversePartition",
    "sample_function", "sample_permutation", "invert_partition", "derive_seed", "rng_for",
    "SimulationLimits", "QueryBudget", "TrialPool", "ResourceExhausted",
    "QueryBudgetExceeded", "DimensionCapExceeded", "EnumerationCapExceeded", "WorkCapExceeded",

    # Simulation and entropy
    "RegisterLayout", "StateVector", "OracleAlgorithm", "QueryTranscript",
    "apply_oracle", "run_with_transcript", "swapping_gap", "grover_invert",
    "DensityMatrix", "ClassicalQuantumState", "von_neumann_entropy", "binary_entropy",
    "conditional_entropy", "mutual_information", "qracvl_bound", "permutation_bound",
    "partition_bound",
    "AffineHash", "sample_hash",

    # Codes and reductions
    "Encoding", "DecodeResult", "Family", "CodeScheme", "CodeReport", "evaluate_code",
    "Inverter", "make_example_inverter", "SchemeParams",
    "compute_success_set_I", "sample_R", "compute_good_set_G",
    "encode_permutation", "decode_permutation", "encode_function", "decode_function",
    "measure_scheme",

    # Attacks
    "TradeoffRecord", "hellman_attack", "checkpoint_attack", "grover_point", "sweep",

    # High-level API
    "ExperimentConfig", "ExperimentRunner", "run_experiment",
]
