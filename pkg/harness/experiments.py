"""
Seeded trial batches.

Trial ``i`` of a batch runs with seed ``base_seed + i``. Trials may run in a
process pool; rows are always folded back in trial order, and every aggregate
in a ``BatchReport`` is a function of those rows alone.
"""

from __future__ import annotations

import csv
import hashlib
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

from core.config import CONFIG
from core.constants import (
    ALGO_COLLIDE,
    ALGO_COLOUR_K,
    ALGO_DEGREE_BL,
    ALGO_EMULATE,
    ALGO_TWO_HOP,
    ALGO_TWO_HOP_BL,
    ALGORITHMS,
    CSV_COLUMNS,
    EMULATED,
    LAS_VEGAS,
    NATIVE_MODEL,
)
from core.logger import get_logger
from harness import stats
from network.channel import SlotAction, collision_ground_truth, ModelSpec
from network.graph import Graph, build_graph, metrics
from sim.emulation import EmulationParams, KDerivation
from sim.engine import PhaseBudgetKind, phase_budget
from sim.protocols import (
    KPolicy,
    PaletteVariant,
    ProtocolRun,
    bounded_cycle_budget,
    colour_bcdl,
    colour_bcdl_bounded,
    colour_bl,
    degree_bcdlcd,
    degree_bl,
    detect_collision_bl,
    emulated_detection,
    k_for,
    two_hop_colour_bcdlcd,
    two_hop_colour_bl,
)
from sim.trace_audit import safety_verdict
from sim.trace_codec import write_trace
from sim.trace_protocol import RunOutcome, Trace

logger = get_logger("experiments")

_SEED_LIMIT = 1 << 64

_POLICY_TO_DERIVATION = {
    KPolicy.PER_VERTEX: KDerivation.PER_VERTEX,
    KPolicy.WHP_LOCAL: KDerivation.WHP,
    KPolicy.PER_GRAPH: KDerivation.PER_GRAPH,
}


class ExperimentSpecError(ValueError):
    """Raised when an experiment cannot be run as specified."""


@dataclass(frozen=True)
class ExperimentSpec:
    graph: str
    algo: str
    model: Optional[str] = None
    trials: int = 1
    base_seed: int = 0
    k: Optional[int] = None
    eps: Optional[float] = None
    policy: Optional[str] = None
    cap_k: Optional[int] = None
    variant: str = PaletteVariant.BASIC.value
    budget: Optional[int] = None
    wishers: Optional[Tuple[int, ...]] = None
    focus: Optional[int] = None
    workers: Optional[int] = None
    fresh_signatures: bool = False
    local_termination: bool = False
    virtual_slots: int = 1
    out: Optional[str] = None
    trace: Optional[str] = None

    def seed_for(self, trial: int) -> int:
        return self.base_seed + trial


@dataclass(frozen=True)
class TrialRow:
    trial: int
    seed: int
    outcome: RunOutcome
    phases: int
    slots: int
    safety_ok: bool
    payload_digest: str
    # Monte Carlo error counts; zero for Las Vegas algorithms.
    misses: int = 0
    observations: int = 0

    def as_csv_row(self) -> List[str]:
        return [
            str(self.trial),
            str(self.seed),
            self.outcome.value,
            str(self.phases),
            str(self.slots),
            "true" if self.safety_ok else "false",
            self.payload_digest,
            str(self.misses),
            str(self.observations),
        ]


@dataclass
class BatchReport:
    spec: ExperimentSpec
    rows: List[TrialRow]
    envelope: Optional[int] = None
    slots_per_phase: int = 1
    termination_rate: float = 0.0
    violations: int = 0
    phase_quantiles: Optional[stats.Quantiles] = None
    slot_quantiles: Optional[stats.Quantiles] = None
    error: Optional[stats.RateEstimate] = None
    exceed_fraction: float = 0.0
    figures: Dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def as_payload(self) -> Dict[str, Any]:
        return {
            "graph": self.spec.graph,
            "algo": self.spec.algo,
            "trials": len(self.rows),
            "base_seed": self.spec.base_seed,
            "passed": self.passed,
            "termination_rate": self.termination_rate,
            "violations": self.violations,
            "phases": None if self.phase_quantiles is None else self.phase_quantiles.as_payload(),
            "slots": None if self.slot_quantiles is None else self.slot_quantiles.as_payload(),
            "error": None if self.error is None else self.error.as_payload(),
            "envelope": self.envelope,
            "exceed_fraction": self.exceed_fraction,
            "figures": self.figures,
        }


# ---- validation ----


def _native_model(algo: str) -> ModelSpec:
    return ModelSpec.parse(NATIVE_MODEL[algo])


def _check_model(spec: ExperimentSpec) -> None:
    if spec.model is None:
        return
    try:
        given = ModelSpec.parse(spec.model)
    except ValueError as exc:
        raise ExperimentSpecError(str(exc)) from exc
    required = _native_model(spec.algo)
    missing = (required.beeper_detects and not given.beeper_detects) or (
        required.listener_counts and not given.listener_counts
    )
    if missing:
        raise ExperimentSpecError(
            f"{spec.algo} needs {required.name}; model {given.name} lacks its collision detection"
        )


def _vertices(g: Graph, values: Sequence[int], label: str) -> Tuple[int, ...]:
    bad = sorted(v for v in values if not 0 <= v < g.n)
    if bad:
        raise ExperimentSpecError(f"{label} outside 0..{g.n - 1}: {bad}")
    return tuple(sorted(set(values)))


def validate_spec(spec: ExperimentSpec, g: Graph) -> ExperimentSpec:
    """Check an experiment against its graph; returns it with defaults filled in."""
    if spec.algo not in ALGORITHMS:
        raise ExperimentSpecError(
            f"Unknown algorithm {spec.algo!r}; expected one of {', '.join(ALGORITHMS)}"
        )
    if spec.trials < 1:
        raise ExperimentSpecError(f"trials must be >= 1, got {spec.trials}")
    if not 0 <= spec.base_seed or spec.base_seed + spec.trials > _SEED_LIMIT:
        raise ExperimentSpecError("seeds base_seed..base_seed+trials must fit in 64 bits")
    if spec.budget is not None and spec.budget < 1:
        raise ExperimentSpecError(f"budget must be >= 1, got {spec.budget}")
    if g.n < 1:
        raise ExperimentSpecError("graph has no vertices")
    _check_model(spec)

    if spec.algo == ALGO_COLOUR_K:
        delta = metrics(g).max_degree
        if spec.cap_k is None:
            spec = replace(spec, cap_k=delta)
        if spec.cap_k < delta:
            raise ExperimentSpecError(
                f"degree bound K={spec.cap_k} is below the maximum degree {delta}"
            )
        try:
            PaletteVariant(spec.variant)
        except ValueError as exc:
            raise ExperimentSpecError(f"unknown palette variant {spec.variant!r}") from exc

    if spec.algo == ALGO_COLLIDE or spec.algo in EMULATED:
        spec = replace(spec, k=_resolve_k(spec, g))

    if spec.algo == ALGO_COLLIDE:
        if not spec.wishers:
            raise ExperimentSpecError("collide needs a wisher set (--wishers)")
        spec = replace(spec, wishers=_vertices(g, spec.wishers, "wishers"))
    if spec.algo == ALGO_EMULATE:
        if spec.virtual_slots < 1:
            raise ExperimentSpecError(f"virtual_slots must be >= 1, got {spec.virtual_slots}")
        wishers = spec.wishers if spec.wishers else tuple(range(g.n))
        spec = replace(spec, wishers=_vertices(g, wishers, "wishers"))
    if spec.focus is not None:
        _vertices(g, [spec.focus], "focus vertex")
    return spec


def _resolve_k(spec: ExperimentSpec, g: Graph) -> int:
    if spec.k is not None:
        if spec.k < 1:
            raise ExperimentSpecError(f"k must be >= 1, got {spec.k}")
        return spec.k
    try:
        if spec.policy is not None:
            policy = KPolicy(spec.policy)
        else:
            policy = KPolicy.PER_VERTEX if spec.eps is not None else KPolicy.WHP_LOCAL
        if spec.algo == ALGO_COLLIDE:
            return k_for(policy, eps=spec.eps, n=g.n)
        return EmulationParams.derive(
            _POLICY_TO_DERIVATION[policy], n=g.n, eps=spec.eps
        ).k
    except ValueError as exc:
        raise ExperimentSpecError(str(exc)) from exc


# ---- single trial ----


def payload_digest(payloads: Sequence[Any]) -> str:
    encoded = json.dumps(list(payloads), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(encoded.encode("utf-8")).hexdigest()


def _observed_vertices(g: Graph, spec: ExperimentSpec) -> List[int]:
    """Vertices around which the wisher set produces an actual collision."""
    wishing = set(spec.wishers or ())
    intents = [SlotAction.BEEP if v in wishing else SlotAction.LISTEN for v in range(g.n)]
    candidates = [spec.focus] if spec.focus is not None else range(g.n)
    return [v for v in candidates if collision_ground_truth(g, intents, v).any]


def _execute(spec: ExperimentSpec, g: Graph, seed: int, record: bool) -> ProtocolRun:
    params = EmulationParams(spec.k) if spec.algo in EMULATED else None
    match spec.algo:
        case "collide":
            return detect_collision_bl(g, spec.wishers or (), spec.k, seed, record_trace=record)
        case "colour":
            return colour_bcdl(
                g,
                seed,
                spec.budget,
                local_termination=spec.local_termination,
                record_trace=record,
            )
        case "colour-k":
            return colour_bcdl_bounded(
                g, spec.cap_k, spec.variant, seed, spec.budget, record_trace=record
            )
        case "two-hop":
            return two_hop_colour_bcdlcd(g, seed, spec.budget, record_trace=record)
        case "degree":
            return degree_bcdlcd(g, seed, spec.budget, record_trace=record)
        case "degree-bl":
            return degree_bl(
                g,
                params,
                seed,
                spec.budget,
                fresh_signatures=spec.fresh_signatures,
                record_trace=record,
            )
        case "colour-bl":
            return colour_bl(
                g,
                params,
                seed,
                spec.budget,
                fresh_signatures=spec.fresh_signatures,
                record_trace=record,
            )
        case "two-hop-bl":
            return two_hop_colour_bl(
                g,
                params,
                seed,
                spec.budget,
                fresh_signatures=spec.fresh_signatures,
                record_trace=record,
            )
        case "emulate":
            return emulated_detection(
                g,
                spec.wishers or (),
                params,
                spec.virtual_slots,
                seed,
                fresh_signatures=True,
                record_trace=record,
            )
        case _:
            raise ExperimentSpecError(f"Unsupported algorithm {spec.algo!r}")


def run_trial(
    spec: ExperimentSpec, g: Graph, trial: int
) -> Tuple[TrialRow, Optional[Trace], int]:
    seed = spec.seed_for(trial)
    record = spec.trace is not None and trial == 0
    outcome = _execute(spec, g, seed, record)
    result = outcome.result
    misses = observations = false_positives = 0

    # Monte Carlo safety means no false positive; misses feed the error rate.
    if spec.algo == ALGO_COLLIDE:
        verdict = safety_verdict(g, result)
        false_positives = len(verdict.witnesses) if verdict is not None else 0
        watched = _observed_vertices(g, spec)
        observations = len(watched)
        misses = sum(1 for v in watched if not result.payloads[v])
        safety_ok = false_positives == 0
    elif spec.algo == ALGO_EMULATE:
        watched = set(_observed_vertices(g, spec))
        for v, detected in enumerate(result.payloads):
            if v in watched:
                observations += spec.virtual_slots
                misses += spec.virtual_slots - int(detected)
            elif spec.focus is None and detected:
                false_positives += int(detected)
        safety_ok = false_positives == 0
    else:
        verdict = outcome.verdict if outcome.verdict is not None else safety_verdict(g, result)
        # An unterminated run is inconclusive, not unsafe.
        output_ok = verdict is None or verdict.ok
        if spec.algo in EMULATED:
            # Emulated detection errs only by missing a collision.
            safety_ok = True
            if result.terminated:
                observations = 1
                misses = 0 if output_ok else 1
        else:
            safety_ok = output_ok

    row = TrialRow(
        trial=trial,
        seed=seed,
        outcome=result.outcome,
        phases=result.phases_used,
        slots=result.slots_used,
        safety_ok=safety_ok,
        payload_digest=payload_digest(result.payloads),
        misses=misses,
        observations=observations,
    )
    logger.debug("Trial %s seed=%s -> %s", trial, seed, row.as_csv_row())
    return row, (outcome.trace if record else None), result.slots_per_phase


def _trial_task(args: Tuple[ExperimentSpec, Graph, int]) -> Tuple[TrialRow, Optional[Trace], int]:
    return run_trial(*args)


# ---- batch ----


def envelope_for(spec: ExperimentSpec, g: Graph) -> Optional[int]:
    """Theoretical phase envelope the batch is compared against."""
    n, delta = g.n, metrics(g).max_degree
    match spec.algo:
        case "colour" | "colour-bl":
            return phase_budget(PhaseBudgetKind.COLOURING, n, delta)
        case "two-hop" | "two-hop-bl":
            return phase_budget(PhaseBudgetKind.TWO_HOP, n, delta)
        case "degree" | "degree-bl":
            return phase_budget(PhaseBudgetKind.DEGREE, n, delta)
        case "colour-k":
            return bounded_cycle_budget(n, spec.cap_k or 0) * ((spec.cap_k or 0) + 1)
        case "collide":
            return spec.k
        case "emulate":
            return spec.virtual_slots
    return None


def compare_envelope(report: BatchReport, envelope: int) -> float:
    """Fraction of trials whose phase count exceeds ``envelope``."""
    if not report.rows:
        return 0.0
    over = sum(1 for row in report.rows if row.phases > envelope)
    return over / len(report.rows)


def _figures(
    spec: ExperimentSpec, rows: Sequence[TrialRow], envelope: Optional[int], spp: int
) -> Dict[str, Any]:
    figures: Dict[str, Any] = {"slots_per_phase": spp}
    if spec.algo in (ALGO_TWO_HOP, ALGO_TWO_HOP_BL) and envelope is not None:
        figures["slot_envelope_4x"] = 4 * envelope
        figures["slot_envelope_5x"] = 5 * envelope
    if spec.algo == ALGO_DEGREE_BL and envelope is not None:
        figures["physical_slot_envelope"] = spp * envelope
    if spec.algo in EMULATED and spec.k is not None:
        figures["k"] = spec.k
    if spec.algo == ALGO_COLOUR_K and spec.cap_k is not None:
        cycles = [row.phases / (spec.cap_k + 1) for row in rows if row.outcome is RunOutcome.TERMINATED]
        figures["median_cycles"] = stats.median(cycles)
        if envelope is not None:
            figures["cycle_budget"] = envelope // (spec.cap_k + 1)
    if spec.algo == ALGO_COLLIDE and spec.k is not None:
        figures["miss_bound"] = stats.miss_rate_bound(spec.k, max(1, sum(r.observations for r in rows)))
    return figures


def aggregate(
    spec: ExperimentSpec,
    rows: Sequence[TrialRow],
    envelope: Optional[int],
    slots_per_phase: int,
) -> BatchReport:
    """Fold per-trial rows into a report; the fold depends on the rows only."""
    rows = sorted(rows, key=lambda r: r.trial)
    terminated = [r for r in rows if r.outcome is RunOutcome.TERMINATED]
    violations = sum(1 for r in rows if not r.safety_ok)
    report = BatchReport(
        spec=spec,
        rows=list(rows),
        envelope=envelope,
        slots_per_phase=slots_per_phase,
        termination_rate=len(terminated) / len(rows) if rows else 0.0,
        violations=violations,
        phase_quantiles=stats.quantiles([r.phases for r in rows]),
        slot_quantiles=stats.quantiles([r.slots for r in rows]),
    )
    if spec.algo not in LAS_VEGAS:
        report.error = stats.error_rate(
            sum(r.misses for r in rows), sum(r.observations for r in rows)
        )
    if envelope is not None:
        report.exceed_fraction = compare_envelope(report, envelope)
    report.figures = _figures(spec, rows, envelope, slots_per_phase)
    return report


def run_batch(spec: ExperimentSpec) -> BatchReport:
    try:
        g = build_graph(spec.graph, retry_cap=CONFIG.gnp_retry_cap)
    except ValueError as exc:
        raise ExperimentSpecError(str(exc)) from exc
    spec = validate_spec(spec, g)
    workers = spec.workers or CONFIG.workers
    logger.info(
        "Starting batch algo=%s graph=%s trials=%s base_seed=%s workers=%s",
        spec.algo,
        spec.graph,
        spec.trials,
        spec.base_seed,
        workers,
    )
    tasks = [(spec, g, trial) for trial in range(spec.trials)]
    if workers > 1 and spec.trials > 1:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            # map() yields in submission order, so the fold stays trial-ordered.
            results = list(executor.map(_trial_task, tasks))
    else:
        results = [_trial_task(task) for task in tasks]

    rows = [row for row, _, _ in results]
    slots_per_phase = results[0][2]
    traces = [trace for _, trace, _ in results if trace is not None]
    report = aggregate(spec, rows, envelope_for(spec, g), slots_per_phase)

    if spec.trace is not None and traces:
        write_trace(traces[0], spec.trace)
    if spec.out is not None:
        write_report(report, spec.out)

    tolerance = CONFIG.envelope_tolerance
    if report.envelope is not None and report.exceed_fraction > tolerance:
        logger.warning(
            "Envelope %s exceeded in %.2f%% of trials (tolerance %.2f%%)",
            report.envelope,
            100 * report.exceed_fraction,
            100 * tolerance,
        )
    logger.info(
        "Finished batch algo=%s: termination=%.3f violations=%s exceed=%.3f error=%s",
        spec.algo,
        report.termination_rate,
        report.violations,
        report.exceed_fraction,
        None if report.error is None else round(report.error.rate, 6),
    )
    return report


@dataclass(frozen=True)
class VariantComparison:
    """Median cycle counts of the two palette variants on identical seeds."""

    basic: Optional[float]
    modified: Optional[float]
    tolerance: float = 0.10

    @property
    def ratio(self) -> Optional[float]:
        if not self.basic or self.modified is None:
            return None
        return self.modified / self.basic

    @property
    def within_tolerance(self) -> bool:
        if self.basic is None or self.modified is None:
            return False
        return self.modified <= self.basic * (1.0 + self.tolerance)

    def as_payload(self) -> Dict[str, Any]:
        return {
            "basic": self.basic,
            "modified": self.modified,
            "ratio": self.ratio,
            "tolerance": self.tolerance,
            "within_tolerance": self.within_tolerance,
        }


def compare_palette_variants(
    spec: ExperimentSpec, tolerance: float = 0.10
) -> Tuple[VariantComparison, Dict[str, BatchReport]]:
    """
    Run a colour-k batch once per palette variant. Only the batch of
    ``spec.variant`` writes the report and trace files.
    """
    if spec.algo != ALGO_COLOUR_K:
        raise ExperimentSpecError(f"variant comparison needs colour-k, got {spec.algo!r}")
    reports: Dict[str, BatchReport] = {}
    for variant in PaletteVariant:
        own = variant.value == spec.variant
        reports[variant.value] = run_batch(
            replace(
                spec,
                variant=variant.value,
                out=spec.out if own else None,
                trace=spec.trace if own else None,
            )
        )
    comparison = VariantComparison(
        basic=reports[PaletteVariant.BASIC.value].figures.get("median_cycles"),
        modified=reports[PaletteVariant.MODIFIED.value].figures.get("median_cycles"),
        tolerance=tolerance,
    )
    logger.info("Palette variants on %s: %s", spec.graph, comparison.as_payload())
    if not comparison.within_tolerance:
        logger.warning(
            "Modified palette median %s exceeds basic median %s by more than %.0f%%",
            comparison.modified,
            comparison.basic,
            100 * tolerance,
        )
    return comparison, reports


# ---- report files ----


def summary_path(csv_path: str | Path) -> Path:
    return Path(csv_path).with_suffix(".summary.json")


def write_report(report: BatchReport, path: str | Path) -> None:
    """Per-trial CSV at ``path`` plus a JSON summary next to it."""
    target = Path(path)
    with target.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for row in report.rows:
            writer.writerow(row.as_csv_row())
    summary_path(target).write_text(
        json.dumps(report.as_payload(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def read_report_rows(path: str | Path) -> List[TrialRow]:
    with Path(path).open("r", newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        return [
            TrialRow(
                trial=int(record["trial"]),
                seed=int(record["seed"]),
                outcome=RunOutcome(record["outcome"]),
                phases=int(record["phases"]),
                slots=int(record["slots"]),
                safety_ok=record["safety_ok"] == "true",
                payload_digest=record["payload_digest"],
                misses=int(record["misses"]),
                observations=int(record["observations"]),
            )
            for record in reader
        ]
