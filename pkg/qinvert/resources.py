"""
Resource management for qinvert experiments.

Provides the caps that keep simulations at desk scale (amplitude counts,
exact-enumeration sizes, audit sizes, Hellman work) and the query budget
that meters oracle calls during a run.
"""

from concurrent.futures import ThreadPoolExecutor
from typing import Any, Callable, Dict, List, Optional, Sequence, TypeVar

from tqdm import tqdm

from .core import QInvertError

T = TypeVar("T")
R = TypeVar("R")


class SimulationLimits:
    """Configuration for resource caps."""

    def __init__(self,
                 max_amplitudes: Optional[int] = 2 ** 24,
                 max_exact_triples: Optional[int] = 10 ** 7,
                 max_audit_branches: Optional[int] = 4096,
                 max_audit_qubits: Optional[int] = 8,
                 hellman_work_factor: Optional[int] = 64,
                 majority_exact_max: int = 64):
        self.max_amplitudes = max_amplitudes
        self.max_exact_triples = max_exact_triples
        self.max_audit_branches = max_audit_branches
        self.max_audit_qubits = max_audit_qubits
        self.hellman_work_factor = hellman_work_factor
        self.majority_exact_max = majority_exact_max

    @classmethod
    def from_config(cls, config: Dict[str, Any]) -> "SimulationLimits":
        """Build limits from a config dict, ignoring keys it does not know."""
        keys = ("max_amplitudes", "max_exact_triples", "max_audit_branches",
                "max_audit_qubits", "hellman_work_factor", "majority_exact_max")
        return cls(**{k: int(config[k]) for k in keys if k in config})

    def check_amplitudes(self, size: int, what: str = "state") -> None:
        if self.max_amplitudes is not None and size > self.max_amplitudes:
            raise DimensionCapExceeded(
                f"{what} needs {size} amplitudes (cap {self.max_amplitudes})",
                value=size, limit=self.max_amplitudes,
            )

    def check_triples(self, triples: int) -> None:
        if self.max_exact_triples is not None and triples > self.max_exact_triples:
            raise EnumerationCapExceeded(
                f"Exact mode needs {triples} evaluation triples (cap {self.max_exact_triples})",
                value=triples, limit=self.max_exact_triples,
            )

    def check_audit(self, branches: int, qubits: int) -> None:
        if self.max_audit_branches is not None and branches > self.max_audit_branches:
            raise EnumerationCapExceeded(
                f"Audit needs {branches} branches (cap {self.max_audit_branches})",
                value=branches, limit=self.max_audit_branches,
            )
        if self.max_audit_qubits is not None and qubits > self.max_audit_qubits:
            raise EnumerationCapExceeded(
                f"Audit needs {qubits} padded qubits (cap {self.max_audit_qubits})",
                value=qubits, limit=self.max_audit_qubits,
            )

    def check_hellman_work(self, work: int, domain: int) -> None:
        if self.hellman_work_factor is None:
            return
        cap = self.hellman_work_factor * domain
        if work > cap:
            raise WorkCapExceeded(
                f"Hellman work r*m_chains*t_len={work} exceeds {self.hellman_work_factor}*n={cap}",
                value=work, limit=cap,
            )


DEFAULT_LIMITS = SimulationLimits()


class ResourceExhausted(QInvertError):
    """Base exception for resource exhaustion."""

    def __init__(self, message: str, value: Optional[int] = None, limit: Optional[int] = None):
        super().__init__(message)
        self.value = value
        self.limit = limit


class QueryBudgetExceeded(ResourceExhausted):
    """Raised when an algorithm makes more oracle calls than its budget."""
    pass


class DimensionCapExceeded(ResourceExhausted):
    """Raised when a state would exceed the amplitude cap."""
    pass


class EnumerationCapExceeded(ResourceExhausted):
    """Raised when exact enumeration or an audit would be too large."""
    pass


class WorkCapExceeded(ResourceExhausted):
    """Raised when a Hellman build exceeds its work cap."""
    pass


class QueryBudget:
    """
    Meters oracle calls for one run.

    A budget of None only counts; otherwise exceeding it raises.
    """

    def __init__(self, t_max: Optional[int] = None, label: str = ""):
        self.t_max = t_max
        self.label = label
        self.queries = 0

    def consume_query(self, operation: str = "oracle") -> None:
        """
        Account for one oracle call.

        Raises:
            QueryBudgetExceeded: If the call would exceed t_max
        """
        self.queries += 1
        if self.t_max is not None and self.queries > self.t_max:
            where = f"{self.label}:{operation}" if self.label else operation
            raise QueryBudgetExceeded(
                f"Query budget {self.t_max} exceeded (attempted {self.queries}) in {where}",
                value=self.queries, limit=self.t_max,
            )

    @property
    def remaining(self) -> Optional[int]:
        if self.t_max is None:
            return None
        return max(0, self.t_max - self.queries)

    def checkpoint(self) -> Dict[str, Any]:
        return {"queries": self.queries, "t_max": self.t_max}


class TrialPool:
    """
    Bounded pool over independent trials.

    Results are returned in input order whatever the completion order.
    One worker runs everything in-process.
    """

    def __init__(self, workers: int = 1, progress: bool = False, desc: str = ""):
        if workers < 1:
            raise ValueError("TrialPool needs at least one worker")
        self.workers = workers
        self.progress = progress
        self.desc = desc

    def map(self, fn: Callable[[T], R], items: Sequence[T]) -> List[R]:
        items = list(items)
        bar = tqdm(total=len(items), desc=self.desc or None, disable=not self.progress,
                   leave=False)
        try:
            if self.workers == 1:
                results = []
                for item in items:
                    results.append(fn(item))
                    bar.update(1)
                return results
            with ThreadPoolExecutor(max_workers=self.workers) as executor:
                results = []
                for result in executor.map(fn, items):
                    results.append(result)
                    bar.update(1)
                return results
        finally:
            bar.close()
