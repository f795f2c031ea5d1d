"""Built-in example pairs of metric measure spaces (uniform measures)."""
from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources

from .errors import ValidationError
from .metric import FiniteMetricSpace, MMSpace


@lru_cache(maxsize=None)
def _catalogue() -> dict:
    return json.loads(resources.files("wpdkit").joinpath("data/examples.json").read_text())


def example_names() -> list[str]:
    return sorted(_catalogue())


def _space(entry: dict) -> FiniteMetricSpace:
    if "points" in entry:
        return FiniteMetricSpace.from_points(entry["points"])
    return FiniteMetricSpace(entry["d"])


def example_pair(name: str) -> tuple[MMSpace, MMSpace]:
    cat = _catalogue()
    if name not in cat:
        raise ValidationError(f"unknown example {name!r}; choose from {', '.join(sorted(cat))}")
    entry = cat[name]
    return MMSpace.uniform(_space(entry["X"])), MMSpace.uniform(_space(entry["Y"]))


def example_description(name: str) -> str:
    return _catalogue()[name]["description"]
