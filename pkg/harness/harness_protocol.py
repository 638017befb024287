import enum
from dataclasses import dataclass
from typing import Any, Dict

# JSON-like payload alias
JSONPayload = Dict[str, Any]


class command_type(enum.IntEnum):
    ERROR = 0
    RUN = 1
    VERIFY = 2


# Values double as process exit codes.
class command_status(enum.IntEnum):
    OK = 0
    SAFETY_VIOLATION = 1
    SPEC_ERROR = 2


@dataclass(frozen=True)
class CommandResult:
    type: command_type
    status: command_status
    payload: JSONPayload

    @property
    def exit_code(self) -> int:
        return int(self.status)
