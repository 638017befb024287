import enum
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

# JSON-like payload alias
JSONPayload = Dict[str, Any]


class trace_record_type(enum.IntEnum):
    SLOT = 1
    RESULT = 2


class RunOutcome(str, enum.Enum):
    TERMINATED = "Terminated"
    BUDGET_EXHAUSTED = "BudgetExhausted"


# ==== PER-SLOT RECORD ====


@dataclass(frozen=True)
class SlotRecord:
    slot: int
    intents: Tuple[int, ...]
    feedback: Tuple[str, ...]
    digest: Tuple[str, ...]
    virtual_slot: Optional[JSONPayload] = None


# ==== RUN SUMMARY ====


@dataclass(frozen=True)
class RunResult:
    outcome: RunOutcome
    slots_used: int
    phases_used: int
    slots_per_phase: int
    payloads: Tuple[Any, ...]
    model: str
    protocol: str = ""
    params: JSONPayload = field(default_factory=dict)

    @property
    def terminated(self) -> bool:
        return self.outcome is RunOutcome.TERMINATED


@dataclass
class Trace:
    records: List[SlotRecord] = field(default_factory=list)
    result: Optional[RunResult] = None
