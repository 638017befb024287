"""Command-line entry point: ``beepsim run`` and ``beepsim verify``."""

from __future__ import annotations

import argparse
import json
from typing import List, Optional, Tuple

from core.constants import ALGORITHMS, K_POLICIES, MODEL_CHOICES, VARIANTS
from core.logger import get_logger
from harness.experiments import (
    ExperimentSpec,
    ExperimentSpecError,
    compare_palette_variants,
    run_batch,
)
from harness.harness_protocol import CommandResult, command_status, command_type
from harness.utils import _error_result, _ok_result
from network.channel import CapabilityFault
from network.graph import build_graph
from sim.trace_audit import audit_trace
from sim.trace_codec import read_trace

logger = get_logger("cli")


def _vertex_list(raw: str) -> Tuple[int, ...]:
    try:
        return tuple(int(part) for part in raw.split(",") if part.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated vertices, got {raw!r}") from exc


def _parse_args(argv: Optional[List[str]] = None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(
        prog="beepsim",
        description="Simulate beeping-network algorithms and check them against ground truth.",
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="Run a seeded batch of trials.")
    run.add_argument("--algo", required=True, choices=ALGORITHMS)
    run.add_argument("--graph", required=True, help="Graph descriptor, e.g. ring:64 or gnp:64:0.1:3.")
    run.add_argument(
        "--model",
        choices=MODEL_CHOICES,
        default=None,
        help="Beeping model; must offer what the algorithm reads (default: its native model).",
    )
    run.add_argument("--trials", type=int, default=1, help="Number of trials (default: %(default)s).")
    run.add_argument("--seed", type=int, default=0, help="Base seed; trial i uses seed+i (default: %(default)s).")
    run.add_argument("--k", type=int, default=None, help="Detection or emulation length.")
    run.add_argument("--eps", type=float, default=None, help="Target error probability.")
    run.add_argument("--policy", choices=K_POLICIES, default=None, help="How k is derived when --k is absent.")
    run.add_argument("--cap-K", dest="cap_k", type=int, default=None, help="Degree bound K for colour-k (default: max degree).")
    run.add_argument("--variant", choices=VARIANTS, default=VARIANTS[0], help="Palette variant for colour-k.")
    run.add_argument("--budget", type=int, default=None, help="Slot budget per run (default: derived from the envelope).")
    run.add_argument("--wishers", type=_vertex_list, default=None, help="Comma-separated wishing vertices.")
    run.add_argument("--focus", type=int, default=None, help="Report error rates at this vertex only.")
    run.add_argument("--workers", type=int, default=None, help="Worker processes for trials.")
    run.add_argument("--fresh-signatures", action="store_true", help="New signature for every emulated window.")
    run.add_argument("--local-termination", action="store_true", help="Add the confirmation slot to colour.")
    run.add_argument("--virtual-slots", type=int, default=1, help="Virtual slots per emulate trial (default: %(default)s).")
    run.add_argument("--trace", default=None, help="Write the JSON-lines trace of trial 0 here.")
    run.add_argument("--out", default=None, help="Per-trial CSV report path.")
    run.add_argument(
        "--compare-variants",
        action="store_true",
        help="For colour-k, also run the other palette variant and report both median cycle counts.",
    )

    verify = sub.add_parser("verify", help="Replay a trace and re-validate its result.")
    verify.add_argument("--trace", required=True)
    verify.add_argument("--graph", required=True)
    return parser.parse_args(argv)


def _spec_from_args(args: argparse.Namespace) -> ExperimentSpec:
    return ExperimentSpec(
        graph=args.graph,
        algo=args.algo,
        model=args.model,
        trials=args.trials,
        base_seed=args.seed,
        k=args.k,
        eps=args.eps,
        policy=args.policy,
        cap_k=args.cap_k,
        variant=args.variant,
        budget=args.budget,
        wishers=args.wishers,
        focus=args.focus,
        workers=args.workers,
        fresh_signatures=args.fresh_signatures,
        local_termination=args.local_termination,
        virtual_slots=args.virtual_slots,
        out=args.out,
        trace=args.trace,
    )


def handle_run(args: argparse.Namespace) -> CommandResult:
    spec = _spec_from_args(args)
    if args.compare_variants:
        comparison, reports = compare_palette_variants(spec)
        report = reports[spec.variant]
        output = report.as_payload()
        output["variant_medians"] = comparison.as_payload()
    else:
        report = run_batch(spec)
        output = report.as_payload()
    status = command_status.OK if report.passed else command_status.SAFETY_VIOLATION
    return _ok_result(output, command_type.RUN, status)


def handle_verify(args: argparse.Namespace) -> CommandResult:
    g = build_graph(args.graph)
    trace = read_trace(args.trace)
    audit = audit_trace(g, trace)
    status = command_status.OK if audit.ok else command_status.SAFETY_VIOLATION
    return _ok_result(audit.as_payload(), command_type.VERIFY, status)


def dispatch_command(args: argparse.Namespace) -> CommandResult:
    logger.info("Dispatching command=%s", args.command)
    try:
        match args.command:
            case "run":
                result = handle_run(args)
            case "verify":
                result = handle_verify(args)
            case _:
                result = _error_result(f"Unsupported command: {args.command!r}")
    except (ExperimentSpecError, CapabilityFault, ValueError, OSError) as exc:
        logger.error("Command %s rejected: %s", args.command, exc)
        result = _error_result(str(exc))
    logger.info(
        "Completed command=%s -> status=%s type=%s",
        args.command,
        result.status.name,
        result.type.name,
    )
    return result


def main(argv: Optional[List[str]] = None) -> int:
    args = _parse_args(argv)
    result = dispatch_command(args)
    print(json.dumps(result.payload, indent=2, sort_keys=True))
    return result.exit_code


if __name__ == "__main__":
    raise SystemExit(main())
