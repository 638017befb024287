"""
Ground-truth validators.

Run with:
    python -m unittest tests.test_oracle
"""

from __future__ import annotations

import os
import sys
import unittest

import numpy as np

PROJECT_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
if PROJECT_ROOT not in sys.path:
    sys.path.insert(0, PROJECT_ROOT)

from network.graph import build_graph, square_graph  # noqa: E402
from network.oracle import check_degrees, is_proper_colouring, is_two_hop_colouring  # noqa: E402


class ColouringVerdictTest(unittest.TestCase):
    def test_proper_and_improper(self) -> None:
        g = build_graph("path:3")
        self.assertTrue(is_proper_colouring(g, [1, 2, 1]).ok)
        verdict = is_proper_colouring(g, [1, 1, 2])
        self.assertFalse(verdict.ok)
        self.assertEqual(verdict.witnesses, ((0, 1),))

    def test_all_witnesses_reported(self) -> None:
        verdict = is_proper_colouring(build_graph("complete:3"), [5, 5, 5])
        self.assertEqual(verdict.witnesses, ((0, 1), (0, 2), (1, 2)))
        self.assertEqual(
            verdict.as_payload(), {"ok": False, "witnesses": [[0, 1], [0, 2], [1, 2]]}
        )

    def test_two_hop(self) -> None:
        g = build_graph("path:3")
        self.assertFalse(is_two_hop_colouring(g, [1, 2, 1]).ok)
        self.assertEqual(is_two_hop_colouring(g, [1, 2, 1]).witnesses, ((0, 2),))
        self.assertTrue(is_two_hop_colouring(g, [1, 2, 3]).ok)

    def test_two_hop_agrees_with_square_graph(self) -> None:
        rng = np.random.default_rng(11)
        for descriptor in ("ring:12", "star:7", "gnp:16:0.2:4"):
            g = build_graph(descriptor)
            sq = square_graph(g)
            for _ in range(50):
                colours = [int(c) for c in rng.integers(0, 6, size=g.n)]
                self.assertEqual(
                    is_two_hop_colouring(g, colours).witnesses,
                    is_proper_colouring(sq, colours).witnesses,
                )

    def test_incomplete_input(self) -> None:
        g = build_graph("path:3")
        with self.assertRaises(ValueError):
            is_proper_colouring(g, [1, None, 2])
        with self.assertRaises(ValueError):
            is_two_hop_colouring(g, [1, 2])


class DegreeVerdictTest(unittest.TestCase):
    def test_star(self) -> None:
        g = build_graph("star:5")
        self.assertTrue(check_degrees(g, [4, 1, 1, 1, 1]).ok)
        verdict = check_degrees(g, [3, 1, 1, 1, 2])
        self.assertEqual(verdict.witnesses, ((0, 3, 4), (4, 2, 1)))

    def test_single_vertex(self) -> None:
        self.assertTrue(check_degrees(build_graph("path:1"), [0]).ok)


if __name__ == "__main__":
    unittest.main()
