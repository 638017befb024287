"""
Per-vertex algorithms checked against ground truth.

Run with:
    python -m unittest tests.test_protocols
"""

from __future__ import annotations

import os
import sys
import unittest

PROJECT_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
if PROJECT_ROOT not in sys.path:
    sys.path.insert(0, PROJECT_ROOT)

from harness.stats import miss_rate_bound  # noqa: E402
from network.graph import build_graph, metrics  # noqa: E402
from network.oracle import check_degrees, is_proper_colouring, is_two_hop_colouring  # noqa: E402
from sim.emulation import EmulationParams  # noqa: E402
from sim.engine import phase_budget  # noqa: E402
from sim.protocols import (  # noqa: E402
    ColourState,
    KPolicy,
    VertexState,
    colour_bcdl,
    colour_bcdl_bounded,
    colour_bl,
    degree_bcdlcd,
    detect_collision_bl,
    k_for,
    two_hop_colour_bcdlcd,
    two_hop_colour_bl,
)
from sim.trace_audit import audit_trace, slot_four_conflicts  # noqa: E402


def _debug(message: str) -> None:
    print(f"[TEST] {message}")


class KForTest(unittest.TestCase):
    def test_caption_values(self) -> None:
        self.assertEqual(k_for(KPolicy.PER_VERTEX, eps=0.05), 6)
        self.assertEqual(k_for("whp-local", n=256), 17)
        self.assertEqual(k_for("per-graph", n=8, eps=0.5), 5)

    def test_out_of_range(self) -> None:
        for eps in (0.0, 1.0, -0.1):
            with self.assertRaises(ValueError):
                k_for("per-vertex", eps=eps)
        with self.assertRaises(ValueError):
            k_for("whp-local", n=0)


class VertexStateTest(unittest.TestCase):
    def test_probability_cap(self) -> None:
        vs = VertexState(state=ColourState.ACTIVE)
        vs.double_p()
        self.assertEqual(vs.p_exponent, 1)
        vs.halve_p()
        vs.halve_p()
        self.assertEqual(vs.p_exponent, 3)
        self.assertEqual(vs.p, 0.125)
        vs.double_p()
        self.assertEqual(vs.p_exponent, 2)


class CollisionDetectionTest(unittest.TestCase):
    def test_single_beeper_never_collides(self) -> None:
        g = build_graph("star:4")
        for seed in range(20):
            self.assertEqual(detect_collision_bl(g, [0], 4, seed).values, (False,) * 4)

    def test_middle_vertex_sees_differing_bits(self) -> None:
        g = build_graph("path:3")
        for seed in range(30):
            run_ = detect_collision_bl(g, [0, 2], 1, seed, record_trace=True)
            first = run_.trace.records[0].intents
            self.assertEqual(run_.values[1], first[0] != first[2])
            self.assertFalse(run_.values[0])
            self.assertFalse(run_.values[2])

    def test_adjacent_wishers(self) -> None:
        g = build_graph("complete:2")
        hits = sum(detect_collision_bl(g, [0, 1], 1, seed).values[0] for seed in range(400))
        # One phase misses with probability one half.
        self.assertLess(abs(hits / 400 - 0.5), 3 * (0.25 / 400) ** 0.5)

    def test_miss_rate(self) -> None:
        g = build_graph("path:3")
        k = k_for("per-vertex", eps=0.05)
        trials = 2000
        misses = 0
        for seed in range(trials):
            flags = detect_collision_bl(g, [0, 2], k, seed).values
            self.assertFalse(flags[0] or flags[2])
            misses += not flags[1]
        _debug(f"path:3 k={k}: {misses} misses in {trials} trials")
        self.assertLessEqual(misses / trials, miss_rate_bound(k, trials))

    def test_wishers_checked(self) -> None:
        with self.assertRaises(ValueError):
            detect_collision_bl(build_graph("path:3"), [3], 2, 0)
        with self.assertRaises(ValueError):
            detect_collision_bl(build_graph("path:3"), [0], 0, 0)


class ColouringTest(unittest.TestCase):
    def test_single_vertex(self) -> None:
        run_ = colour_bcdl(build_graph("path:1"), 5)
        self.assertTrue(run_.result.terminated)
        self.assertEqual(run_.values[0], run_.result.phases_used)

    def test_pair_always_differs(self) -> None:
        g = build_graph("complete:2")
        for seed in range(30):
            run_ = colour_bcdl(g, seed)
            self.assertTrue(run_.result.terminated)
            self.assertNotEqual(run_.values[0], run_.values[1])

    def test_ring_is_properly_coloured_within_envelope(self) -> None:
        g = build_graph("ring:64")
        envelope = phase_budget("colouring", 64, 2)
        for seed in range(20):
            with self.subTest(seed=seed):
                run_ = colour_bcdl(g, seed)
                self.assertTrue(run_.result.terminated)
                self.assertTrue(is_proper_colouring(g, run_.values).ok)
                self.assertLessEqual(run_.result.phases_used, envelope)

    def test_random_graph_terminates_at_default_budget(self) -> None:
        g = build_graph("gnp:64:0.1:1")
        envelope = phase_budget("colouring", g.n, metrics(g).max_degree)
        for seed in range(20):
            with self.subTest(seed=seed):
                run_ = colour_bcdl(g, seed)
                self.assertTrue(run_.result.terminated)
                self.assertTrue(is_proper_colouring(g, run_.values).ok)
                self.assertLessEqual(run_.result.phases_used, envelope)

    def test_local_termination(self) -> None:
        g = build_graph("gnp:16:0.25:2")
        for seed in range(10):
            run_ = colour_bcdl(g, seed, local_termination=True, record_trace=True)
            self.assertEqual(run_.result.slots_per_phase, 2)
            self.assertTrue(run_.result.terminated)
            self.assertTrue(is_proper_colouring(g, run_.values).ok)
            self.assertTrue(audit_trace(g, run_.trace).ok)

    def test_trace_audit(self) -> None:
        g = build_graph("gnp:24:0.2:5")
        run_ = colour_bcdl(g, 8, record_trace=True)
        self.assertTrue(audit_trace(g, run_.trace).ok)


class BoundedColouringTest(unittest.TestCase):
    def test_triangle_uses_all_colours(self) -> None:
        g = build_graph("complete:3")
        for variant in ("basic", "modified"):
            for seed in range(10):
                run_ = colour_bcdl_bounded(g, 2, variant, seed)
                self.assertTrue(run_.result.terminated)
                self.assertEqual(sorted(run_.values), [0, 1, 2])

    def test_single_vertex_zero_bound(self) -> None:
        run_ = colour_bcdl_bounded(build_graph("path:1"), 0, "basic", 3)
        self.assertEqual(run_.values, (0,))

    def test_palette_bound_on_random_graph(self) -> None:
        g = build_graph("gnp:32:0.15:3")
        cap = metrics(g).max_degree
        for variant in ("basic", "modified"):
            for seed in range(8):
                with self.subTest(variant=variant, seed=seed):
                    run_ = colour_bcdl_bounded(g, cap, variant, seed, record_trace=True)
                    self.assertTrue(run_.result.terminated)
                    self.assertTrue(all(0 <= c <= cap for c in run_.values))
                    self.assertTrue(is_proper_colouring(g, run_.values).ok)
                    self.assertTrue(audit_trace(g, run_.trace).ok)

    def test_negative_bound(self) -> None:
        with self.assertRaises(ValueError):
            colour_bcdl_bounded(build_graph("path:2"), -1, "basic", 0)


class TwoHopColouringTest(unittest.TestCase):
    def test_small_graphs(self) -> None:
        single = two_hop_colour_bcdlcd(build_graph("path:1"), 0)
        self.assertTrue(single.result.terminated)
        for seed in range(15):
            run_ = two_hop_colour_bcdlcd(build_graph("path:3"), seed)
            self.assertTrue(run_.result.terminated)
            self.assertEqual(len(set(run_.values)), 3)

    def test_ring_and_star(self) -> None:
        for descriptor in ("ring:32", "star:16"):
            g = build_graph(descriptor)
            envelope = phase_budget("two_hop", g.n, metrics(g).max_degree)
            for seed in range(8):
                with self.subTest(graph=descriptor, seed=seed):
                    run_ = two_hop_colour_bcdlcd(g, seed, record_trace=True)
                    self.assertTrue(run_.result.terminated)
                    self.assertTrue(is_two_hop_colouring(g, run_.values).ok)
                    self.assertLessEqual(run_.result.phases_used, envelope)
                    self.assertTrue(audit_trace(g, run_.trace).ok)


class DegreeTest(unittest.TestCase):
    def test_star_and_single_vertex(self) -> None:
        for seed in range(10):
            self.assertEqual(degree_bcdlcd(build_graph("star:5"), seed).values, (4, 1, 1, 1, 1))
        self.assertEqual(degree_bcdlcd(build_graph("path:1"), 0).values, (0,))

    def test_exact_degrees_and_single_winner(self) -> None:
        for descriptor in ("ring:32", "gnp:32:0.15:1"):
            g = build_graph(descriptor)
            for seed in range(6):
                with self.subTest(graph=descriptor, seed=seed):
                    run_ = degree_bcdlcd(g, seed, record_trace=True)
                    self.assertTrue(run_.result.terminated)
                    self.assertTrue(check_degrees(g, run_.values).ok)
                    self.assertEqual(slot_four_conflicts(g, run_.trace, 5), [])
                    self.assertTrue(audit_trace(g, run_.trace).ok)


class EmulatedColouringTest(unittest.TestCase):
    def test_colour_bl(self) -> None:
        g = build_graph("ring:12")
        params = EmulationParams.derive("whp", n=g.n)
        run_ = colour_bl(g, params, 3)
        self.assertEqual(run_.result.slots_per_phase, 2 * params.k)
        self.assertTrue(run_.result.terminated)
        self.assertIsNotNone(run_.verdict)

    def test_two_hop_colour_bl(self) -> None:
        g = build_graph("ring:10")
        params = EmulationParams.derive("whp", n=g.n)
        run_ = two_hop_colour_bl(g, params, 3)
        self.assertEqual(run_.result.slots_per_phase, 2 * params.k + 3)
        self.assertTrue(run_.result.terminated)
        self.assertIsNotNone(run_.verdict)


if __name__ == "__main__":
    unittest.main()
