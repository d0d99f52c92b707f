"""Run results shared by all algorithms."""

from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple

from .oracle import ElementId, Subset


@dataclass
class RunResult:
    """Outcome and cost of one algorithm run.

    ``value`` is f(``subset``) as evaluated when the run finished;
    ``stored_peak`` is the largest number of elements held at once.
    """

    subset: Subset
    value: float
    oracle_calls: int = 0
    stored_peak: int = 0
    instances_peak: int = 0
    wall_ms: float = 0.0
    #: set when an iterative objective fit did not converge
    warning: bool = False
    #: invariant violations observed during the run
    violations: int = 0
    #: final max singleton value (STREAK only)
    m: Optional[float] = None
    #: held-out accuracy of the selected features, if the objective has one
    accuracy: Optional[float] = None
    extra: Dict[str, Any] = field(default_factory=dict)

    @property
    def members(self) -> Tuple[ElementId, ...]:
        return self.subset.key

    def __len__(self) -> int:
        return len(self.subset)
