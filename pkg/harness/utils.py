from typing import Any, Dict

from harness.harness_protocol import CommandResult, command_status, command_type


def _ok_result(
    output: Dict[str, Any],
    cmd_type: command_type,
    status: command_status = command_status.OK,
) -> CommandResult:
    return CommandResult(
        type=cmd_type,
        status=status,
        payload={"output": output, "error": None},
    )


def _error_result(
    message: str,
    cmd_type: command_type = command_type.ERROR,
    status: command_status = command_status.SPEC_ERROR,
) -> CommandResult:
    return CommandResult(
        type=cmd_type,
        status=status,
        payload={"output": None, "error": message},
    )
