from typing import Dict, FrozenSet, Tuple

# Algorithm names accepted by the CLI and the experiment runner.
ALGO_COLLIDE = "collide"
ALGO_COLOUR = "colour"
ALGO_COLOUR_K = "colour-k"
ALGO_TWO_HOP = "two-hop"
ALGO_DEGREE = "degree"
ALGO_DEGREE_BL = "degree-bl"
ALGO_COLOUR_BL = "colour-bl"
ALGO_TWO_HOP_BL = "two-hop-bl"
ALGO_EMULATE = "emulate"

ALGORITHMS: Tuple[str, ...] = (
    ALGO_COLLIDE,
    ALGO_COLOUR,
    ALGO_COLOUR_K,
    ALGO_TWO_HOP,
    ALGO_DEGREE,
    ALGO_DEGREE_BL,
    ALGO_COLOUR_BL,
    ALGO_TWO_HOP_BL,
    ALGO_EMULATE,
)

# Weakest model each algorithm runs on (ModelSpec aliases).
NATIVE_MODEL: Dict[str, str] = {
    ALGO_COLLIDE: "bl",
    ALGO_COLOUR: "bcdl",
    ALGO_COLOUR_K: "bcdl",
    ALGO_TWO_HOP: "bcdlcd",
    ALGO_DEGREE: "bcdlcd",
    ALGO_DEGREE_BL: "bl",
    ALGO_COLOUR_BL: "bl",
    ALGO_TWO_HOP_BL: "bl",
    ALGO_EMULATE: "bl",
}

LAS_VEGAS: FrozenSet[str] = frozenset({ALGO_COLOUR, ALGO_COLOUR_K, ALGO_TWO_HOP, ALGO_DEGREE})
EMULATED: FrozenSet[str] = frozenset(
    {ALGO_DEGREE_BL, ALGO_COLOUR_BL, ALGO_TWO_HOP_BL, ALGO_EMULATE}
)

MODEL_CHOICES: Tuple[str, ...] = ("bl", "bcdl", "blcd", "bcdlcd")
K_POLICIES: Tuple[str, ...] = ("per-vertex", "whp-local", "per-graph")
VARIANTS: Tuple[str, ...] = ("basic", "modified")

CSV_COLUMNS: Tuple[str, ...] = (
    "trial",
    "seed",
    "outcome",
    "phases",
    "slots",
    "safety_ok",
    "payload_digest",
    "misses",
    "observations",
)
