"""Worked example urns.

``ex1`` starts at ``(3, 3, 3)`` and ``ex3`` at ``(2, 2, 2)``.
"""

from __future__ import annotations

from .model import UrnSpec

__all__ = ["EXAMPLES", "get_example"]

EXAMPLES: dict[str, dict] = {
    # (3,3,9): reducible, color 3 absorbs
    "ex1": {"core": [[3, 3, 3], [6, 0, 3], [0, 0, 9]], "s": 3, "x0": [3, 3, 3]},
    # (3,2,16): small index, diagonalizable
    "sm": {"core": [[6, 4, 6], [2, 6, 8], [4, 6, 6]], "s": 2, "x0": [4, 3, 5]},
    # (4,3,1): small index, one 3x3 Jordan block at -3
    "ex2": {"core": [[-2, 3, 0, 0], [1, -3, 3, 0], [1, 0, -3, 3], [1, 0, 0, 0]],
            "s": 3, "x0": [4, 0, 0, 0]},
    # (3,2,6): critical index
    "ex3": {"core": [[4, 0, 2], [2, 4, 0], [0, 2, 4]], "s": 2, "x0": [2, 2, 2]},
    # (3,3,12): large index
    "ex4": {"core": [[9, 3, 0], [0, 9, 3], [3, 0, 9]], "s": 3, "x0": [3, 2, 2]},
}


def get_example(name: str, mode: str = "without_replacement") -> UrnSpec:
    try:
        d = EXAMPLES[name.lower()]
    except KeyError:
        raise KeyError(f"unknown example {name!r}; choose from {sorted(EXAMPLES)}") from None
    return UrnSpec(d["core"], d["s"], d["x0"], mode)
