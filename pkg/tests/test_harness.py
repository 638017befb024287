"""
Experiment batches, reports and the command line.

Run with:
    python -m unittest tests.test_harness
"""

from __future__ import annotations

import contextlib
import io
import json
import os
import sys
import tempfile
import unittest
from pathlib import Path

PROJECT_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
if PROJECT_ROOT not in sys.path:
    sys.path.insert(0, PROJECT_ROOT)

from harness import stats  # noqa: E402
from harness.cli import main  # noqa: E402
from harness.experiments import (  # noqa: E402
    BatchReport,
    ExperimentSpec,
    ExperimentSpecError,
    TrialRow,
    aggregate,
    compare_envelope,
    compare_palette_variants,
    read_report_rows,
    run_batch,
    summary_path,
)
from harness.harness_protocol import command_status  # noqa: E402
from sim.trace_protocol import RunOutcome  # noqa: E402


def _debug(message: str) -> None:
    print(f"[TEST] {message}")


def _row(trial: int, phases: int) -> TrialRow:
    return TrialRow(
        trial=trial,
        seed=trial,
        outcome=RunOutcome.TERMINATED,
        phases=phases,
        slots=phases,
        safety_ok=True,
        payload_digest="",
    )


def _quiet_main(argv) -> int:
    with contextlib.redirect_stdout(io.StringIO()):
        return main(argv)


def _main_output(argv):
    buffer = io.StringIO()
    with contextlib.redirect_stdout(buffer):
        code = main(argv)
    return code, json.loads(buffer.getvalue())


class StatsTest(unittest.TestCase):
    def test_error_rate(self) -> None:
        est = stats.error_rate(1, 100)
        self.assertEqual(est.rate, 0.01)
        self.assertAlmostEqual(est.high, 0.01 + 1.959963984540054 * (0.01 * 0.99 / 100) ** 0.5)
        self.assertEqual(est.low, 0.0)
        self.assertEqual(stats.error_rate(0, 0).rate, 0.0)
        with self.assertRaises(ValueError):
            stats.error_rate(5, 2)

    def test_quantiles(self) -> None:
        q = stats.quantiles(list(range(1, 101)))
        self.assertEqual(q.p50, 50.5)
        self.assertEqual(q.max, 100.0)
        self.assertIsNone(stats.quantiles([]))

    def test_miss_rate_bound(self) -> None:
        self.assertAlmostEqual(stats.miss_rate_bound(6, 10_000), 0.0193, places=3)


class EnvelopeTest(unittest.TestCase):
    def test_compare_envelope(self) -> None:
        spec = ExperimentSpec(graph="ring:8", algo="colour")
        report = BatchReport(spec=spec, rows=[_row(i, i + 1) for i in range(100)])
        self.assertEqual(compare_envelope(report, 100), 0.0)
        self.assertEqual(compare_envelope(report, 99), 0.01)
        self.assertEqual(compare_envelope(BatchReport(spec=spec, rows=[]), 5), 0.0)


class RunBatchTest(unittest.TestCase):
    def test_colouring_batch(self) -> None:
        report = run_batch(ExperimentSpec(graph="ring:16", algo="colour", trials=6, base_seed=10))
        self.assertTrue(report.passed)
        self.assertEqual(report.violations, 0)
        self.assertEqual([r.seed for r in report.rows], list(range(10, 16)))
        self.assertEqual(report.termination_rate, 1.0)
        self.assertEqual(report.envelope, 76 * 4 + 112 * 2)
        self.assertEqual(report.exceed_fraction, 0.0)

    def test_rows_are_reproducible(self) -> None:
        spec = ExperimentSpec(graph="star:6", algo="degree", trials=4, base_seed=3)
        first = [r.as_csv_row() for r in run_batch(spec).rows]
        second = [r.as_csv_row() for r in run_batch(spec).rows]
        self.assertEqual(first, second)

    def test_parallel_rows_match_serial(self) -> None:
        spec = ExperimentSpec(graph="ring:10", algo="two-hop", trials=4, base_seed=1, workers=1)
        serial = [r.as_csv_row() for r in run_batch(spec).rows]
        parallel = run_batch(ExperimentSpec(graph="ring:10", algo="two-hop", trials=4, base_seed=1, workers=2))
        self.assertEqual([r.as_csv_row() for r in parallel.rows], serial)

    def test_collision_batch(self) -> None:
        report = run_batch(
            ExperimentSpec(graph="path:3", algo="collide", trials=1000, base_seed=0, eps=0.05, wishers=(0, 2))
        )
        self.assertEqual(report.spec.k, 6)
        self.assertEqual(report.violations, 0)
        self.assertEqual(report.error.total, 1000)
        self.assertLessEqual(report.error.rate, stats.miss_rate_bound(6, 1000))
        _debug(f"collision miss rate {report.error.rate}")

    def test_bounded_colouring_batch(self) -> None:
        report = run_batch(ExperimentSpec(graph="complete:5", algo="colour-k", trials=5, variant="modified"))
        self.assertEqual(report.spec.cap_k, 4)
        self.assertTrue(report.passed)
        self.assertIsNotNone(report.figures["median_cycles"])

    def test_emulated_detection_batch(self) -> None:
        report = run_batch(
            ExperimentSpec(graph="complete:2", algo="emulate", k=3, trials=2, virtual_slots=200)
        )
        self.assertEqual(report.error.total, 2 * 2 * 200)
        self.assertEqual(report.violations, 0)

    def test_invalid_specs(self) -> None:
        bad = [
            ExperimentSpec(graph="ring:8", algo="colour", model="bl"),
            ExperimentSpec(graph="ring:8", algo="degree", model="bcdl"),
            ExperimentSpec(graph="star:5", algo="colour-k", cap_k=2),
            ExperimentSpec(graph="path:3", algo="collide", k=3),
            ExperimentSpec(graph="path:3", algo="collide", k=3, wishers=(0, 7)),
            ExperimentSpec(graph="ring:8", algo="spanning-tree"),
            ExperimentSpec(graph="ring:8", algo="colour", trials=0),
            ExperimentSpec(graph="ring:2", algo="colour"),
        ]
        for spec in bad:
            with self.subTest(spec=spec):
                with self.assertRaises(ExperimentSpecError):
                    run_batch(spec)

    def test_stronger_model_is_accepted(self) -> None:
        report = run_batch(ExperimentSpec(graph="ring:8", algo="colour", model="bcdlcd", trials=2))
        self.assertTrue(report.passed)

    def test_colouring_batches_at_default_budget(self) -> None:
        for descriptor in ("ring:64", "gnp:64:0.1:1"):
            with self.subTest(graph=descriptor):
                report = run_batch(ExperimentSpec(graph=descriptor, algo="colour", trials=100, base_seed=1))
                self.assertEqual(report.violations, 0)
                self.assertEqual(report.termination_rate, 1.0)
                self.assertLessEqual(report.exceed_fraction, 0.01)

    def test_emulated_errors_are_not_violations(self) -> None:
        report = run_batch(ExperimentSpec(graph="ring:12", algo="degree-bl", k=1, trials=20, base_seed=4))
        self.assertTrue(all(row.safety_ok for row in report.rows))
        self.assertEqual(report.violations, 0)
        terminated = sum(1 for row in report.rows if row.outcome is RunOutcome.TERMINATED)
        self.assertEqual(report.error.total, terminated)
        _debug(f"degree-bl k=1 wrong outputs {report.error.errors}/{report.error.total}")


class PaletteVariantTest(unittest.TestCase):
    def test_complete_graph_reports_both_medians(self) -> None:
        spec = ExperimentSpec(graph="complete:8", algo="colour-k", cap_k=7, trials=100, base_seed=1)
        comparison, reports = compare_palette_variants(spec)
        self.assertEqual(set(reports), {"basic", "modified"})
        self.assertTrue(all(report.passed for report in reports.values()))
        self.assertIsNotNone(comparison.basic)
        self.assertIsNotNone(comparison.modified)
        self.assertAlmostEqual(comparison.ratio, comparison.modified / comparison.basic)
        self.assertEqual(
            comparison.within_tolerance, comparison.modified <= 1.1 * comparison.basic
        )
        _debug(f"complete:8 medians {comparison.as_payload()}")

    def test_random_graph_within_tolerance(self) -> None:
        spec = ExperimentSpec(graph="gnp:64:0.1:3", algo="colour-k", trials=200, base_seed=1)
        comparison, reports = compare_palette_variants(spec)
        self.assertTrue(all(report.passed for report in reports.values()))
        self.assertTrue(comparison.within_tolerance, comparison.as_payload())

    def test_only_requested_variant_writes_files(self) -> None:
        with tempfile.TemporaryDirectory() as tmp:
            out = Path(tmp) / "k.csv"
            spec = ExperimentSpec(
                graph="complete:4", algo="colour-k", trials=3, variant="modified", out=str(out)
            )
            _, reports = compare_palette_variants(spec)
            written = [row.payload_digest for row in read_report_rows(out)]
            self.assertEqual(written, [row.payload_digest for row in reports["modified"].rows])

    def test_needs_bounded_colouring(self) -> None:
        with self.assertRaises(ExperimentSpecError):
            compare_palette_variants(ExperimentSpec(graph="ring:8", algo="colour"))


class ReportFilesTest(unittest.TestCase):
    def test_aggregates_recompute_from_csv(self) -> None:
        with tempfile.TemporaryDirectory() as tmp:
            out = Path(tmp) / "report.csv"
            spec = ExperimentSpec(graph="gnp:16:0.25:1", algo="degree", trials=5, base_seed=2, out=str(out))
            report = run_batch(spec)
            header = out.read_text(encoding="utf-8").splitlines()[0]
            self.assertEqual(
                header, "trial,seed,outcome,phases,slots,safety_ok,payload_digest,misses,observations"
            )
            rows = read_report_rows(out)
            rebuilt = aggregate(report.spec, rows, report.envelope, report.slots_per_phase)
            self.assertEqual(rebuilt.termination_rate, report.termination_rate)
            self.assertEqual(rebuilt.violations, report.violations)
            self.assertEqual(rebuilt.phase_quantiles, report.phase_quantiles)
            self.assertEqual(rebuilt.slot_quantiles, report.slot_quantiles)
            self.assertEqual(rebuilt.exceed_fraction, report.exceed_fraction)
            summary = json.loads(summary_path(out).read_text(encoding="utf-8"))
            self.assertEqual(summary["violations"], 0)
            self.assertEqual(summary["figures"]["slots_per_phase"], 5)

    def test_collision_errors_recompute_from_csv(self) -> None:
        with tempfile.TemporaryDirectory() as tmp:
            out = Path(tmp) / "collide.csv"
            spec = ExperimentSpec(
                graph="path:3", algo="collide", k=2, wishers=(0, 2), focus=1, trials=200, out=str(out)
            )
            report = run_batch(spec)
            rows = read_report_rows(out)
            rebuilt = aggregate(report.spec, rows, report.envelope, report.slots_per_phase)
            self.assertEqual(rebuilt.error, report.error)
            self.assertEqual(rebuilt.violations, report.violations)
            self.assertEqual(report.violations, 0)
            self.assertTrue(all(row.safety_ok and row.observations == 1 for row in rows))
            # Two phases miss a two-beeper collision with probability 1/4.
            self.assertGreater(report.error.errors, 0)


class CliTest(unittest.TestCase):
    def test_run_then_verify(self) -> None:
        with tempfile.TemporaryDirectory() as tmp:
            trace = str(Path(tmp) / "t.jsonl")
            out = str(Path(tmp) / "r.csv")
            code = _quiet_main(
                ["run", "--algo", "degree", "--graph", "star:5", "--trials", "3", "--seed", "1", "--trace", trace, "--out", out]
            )
            self.assertEqual(code, command_status.OK)
            self.assertTrue(Path(out).exists())
            self.assertEqual(_quiet_main(["verify", "--trace", trace, "--graph", "star:5"]), command_status.OK)
            self.assertEqual(
                _quiet_main(["verify", "--trace", trace, "--graph", "complete:5"]),
                command_status.SAFETY_VIOLATION,
            )

    def test_spec_errors_exit_with_two(self) -> None:
        self.assertEqual(
            _quiet_main(["run", "--algo", "colour", "--graph", "ring:8", "--model", "bl"]),
            command_status.SPEC_ERROR,
        )
        self.assertEqual(
            _quiet_main(["run", "--algo", "colour", "--graph", "hypercube:3"]),
            command_status.SPEC_ERROR,
        )
        with tempfile.TemporaryDirectory() as tmp:
            missing = str(Path(tmp) / "absent.jsonl")
            self.assertEqual(
                _quiet_main(["verify", "--trace", missing, "--graph", "ring:4"]),
                command_status.SPEC_ERROR,
            )

    def test_compare_variants_flag(self) -> None:
        code, payload = _main_output(
            ["run", "--algo", "colour-k", "--graph", "complete:4", "--trials", "4", "--compare-variants"]
        )
        self.assertEqual(code, command_status.OK)
        medians = payload["output"]["variant_medians"]
        self.assertEqual(
            set(medians), {"basic", "modified", "ratio", "tolerance", "within_tolerance"}
        )
        self.assertEqual(payload["output"]["algo"], "colour-k")

    def test_emulated_algorithm_flags(self) -> None:
        code = _quiet_main(
            ["run", "--algo", "degree-bl", "--graph", "path:4", "--policy", "whp-local", "--trials", "2", "--fresh-signatures"]
        )
        self.assertEqual(code, command_status.OK)


if __name__ == "__main__":
    unittest.main()
