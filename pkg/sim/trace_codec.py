import json
from pathlib import Path
from typing import Any, Dict, Iterable, List

from sim.trace_protocol import (
    RunOutcome,
    RunResult,
    SlotRecord,
    Trace,
    trace_record_type,
)


def _dumps(obj: Dict[str, Any]) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def encode_slot_record(record: SlotRecord) -> str:
    """
    Serialize one slot to a JSON line (no trailing newline).
    """
    obj: Dict[str, Any] = {
        "type": int(trace_record_type.SLOT),
        "slot": record.slot,
        "intents": list(record.intents),
        "feedback": list(record.feedback),
        "digest": list(record.digest),
    }
    if record.virtual_slot is not None:
        obj["virtual_slot"] = record.virtual_slot
    return _dumps(obj)


def encode_run_result(result: RunResult) -> str:
    obj = {
        "type": int(trace_record_type.RESULT),
        "outcome": result.outcome.value,
        "slots_used": result.slots_used,
        "phases_used": result.phases_used,
        "slots_per_phase": result.slots_per_phase,
        "payloads": list(result.payloads),
        "model": result.model,
        "protocol": result.protocol,
        "params": result.params,
    }
    return _dumps(obj)


def encode_trace(trace: Trace) -> bytes:
    lines = [encode_slot_record(record) for record in trace.records]
    if trace.result is not None:
        lines.append(encode_run_result(trace.result))
    return ("".join(line + "\n" for line in lines)).encode("utf-8")


def decode_line(line: str) -> SlotRecord | RunResult:
    """
    Parse one JSON line into a SlotRecord or, for the final line, a RunResult.
    line should NOT contain the trailing newline.
    """
    obj: Dict[str, Any] = json.loads(line)
    try:
        kind = trace_record_type(obj.get("type"))
    except ValueError as exc:
        raise ValueError(f"Unknown trace record type in line: {line[:80]!r}") from exc
    if kind is trace_record_type.RESULT:
        return RunResult(
            outcome=RunOutcome(obj["outcome"]),
            slots_used=int(obj["slots_used"]),
            phases_used=int(obj["phases_used"]),
            slots_per_phase=int(obj["slots_per_phase"]),
            payloads=tuple(obj["payloads"]),
            model=str(obj["model"]),
            protocol=str(obj.get("protocol", "")),
            params=dict(obj.get("params") or {}),
        )
    return SlotRecord(
        slot=int(obj["slot"]),
        intents=tuple(int(x) for x in obj["intents"]),
        feedback=tuple(str(x) for x in obj["feedback"]),
        digest=tuple(str(x) for x in obj["digest"]),
        virtual_slot=obj.get("virtual_slot"),
    )


def decode_trace(lines: Iterable[str]) -> Trace:
    records: List[SlotRecord] = []
    trace = Trace(records=records)
    for raw in lines:
        line = raw.strip()
        if not line:
            continue
        item = decode_line(line)
        if isinstance(item, RunResult):
            trace.result = item
        else:
            records.append(item)
    return trace


def write_trace(trace: Trace, path: str | Path) -> None:
    Path(path).write_bytes(encode_trace(trace))


def read_trace(path: str | Path) -> Trace:
    with Path(path).open("r", encoding="utf-8") as handle:
        return decode_trace(handle)
