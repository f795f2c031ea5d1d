"""Readers for distance matrices and point clouds, and JSON exporters for
filtrations, birth-death tables, diagrams and distance reports."""
from __future__ import annotations

import csv
import io as _io
import json
import math
from pathlib import Path
from typing import Any

import numpy as np

from .diagram import PersistenceDiagram, WeightedPersistenceDiagram, interval_values
from .distances import DistanceResult, Matching, WeightedMatching
from .errors import ParseError, ValidationError
from .filtration import CriticalGrid, VRFiltration
from .homology import BirthDeathFunction
from .metric import FiniteMetricSpace, MMSpace


def _read_csv_rows(text: str) -> list[tuple[int, list[float]]]:
    rows = []
    for lineno, row in enumerate(csv.reader(_io.StringIO(text)), start=1):
        cells = [c.strip() for c in row]
        if not cells or all(c == "" for c in cells) or cells[0].startswith("#"):
            continue
        try:
            rows.append((lineno, [float(c) for c in cells]))
        except ValueError:
            bad = next(c for c in cells if not _is_float(c))
            raise ParseError(f"not a number: {bad!r}", lineno) from None
    if not rows:
        raise ParseError("no data rows", 1)
    return rows


def _is_float(s: str) -> bool:
    try:
        float(s)
        return True
    except ValueError:
        return False


def parse_distance_csv(text: str) -> FiniteMetricSpace:
    rows = _read_csv_rows(text)
    n = len(rows)
    for lineno, vals in rows:
        if len(vals) != n:
            raise ParseError(f"row has {len(vals)} entries, expected {n}", lineno)
    return FiniteMetricSpace(np.array([vals for _, vals in rows]))


def parse_points_csv(text: str) -> FiniteMetricSpace:
    rows = _read_csv_rows(text)
    dim = len(rows[0][1])
    for lineno, vals in rows:
        if len(vals) != dim:
            raise ParseError(f"point has {len(vals)} coordinates, expected {dim}", lineno)
    return FiniteMetricSpace.from_points([vals for _, vals in rows])


def parse_space_json(text: str) -> MMSpace:
    """{"n": int, "d": [[...]], "mu": [...] optional (uniform when absent)}."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno) from None
    if not isinstance(obj, dict) or "d" not in obj:
        raise ParseError('expected an object with key "d"', 1)
    X = FiniteMetricSpace(obj["d"])
    if "n" in obj and obj["n"] != X.n:
        raise ValidationError(f'"n" is {obj["n"]} but the matrix has {X.n} rows')
    if "mu" in obj and obj["mu"] is not None:
        return MMSpace(X, obj["mu"])
    return MMSpace.uniform(X)


def load_space(path: str | Path, points: bool = False) -> MMSpace:
    """Load a space from .json ({"n","d","mu"}) or .csv (distance matrix, or points with ``points``)."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}") from None
    if path.suffix.lower() == ".json":
        return parse_space_json(text)
    X = parse_points_csv(text) if points else parse_distance_csv(text)
    return MMSpace.uniform(X)


def jsonable(x: Any) -> Any:
    """Replace non-finite floats by strings so the output stays strict JSON."""
    if isinstance(x, float) or isinstance(x, np.floating):
        x = float(x)
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        if math.isnan(x):
            return "nan"
        return x
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, dict):
        return {k: jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    return x


def dumps(obj: Any) -> str:
    return json.dumps(jsonable(obj), indent=2, allow_nan=False) + "\n"


def filtration_to_json(F: VRFiltration, weights: tuple[float, ...] | None = None) -> dict:
    out: dict[str, Any] = {
        "grid": list(F.grid.values),
        "simplices": [{"verts": list(s), "diam": F.grid.values[lv]} for s, lv in zip(F.simplices, F.levels)],
    }
    if weights is not None:
        out["weights"] = list(weights)
    return out


def zb_to_json(zb: BirthDeathFunction) -> dict:
    return {"grid": list(zb.grid.values), "degree": zb.degree, "zb": [[i, j, v] for (i, j), v in zb.as_dict().items()]}


def diagram_to_json(D: PersistenceDiagram | WeightedPersistenceDiagram) -> dict:
    pd = D.diagram if isinstance(D, WeightedPersistenceDiagram) else D
    out: dict[str, Any] = {
        "grid": list(pd.grid.values),
        "degree": pd.degree,
        "bars": [{"birth": b, "death": d, "mult": m} for b, d, m in pd.bar_values()],
    }
    if isinstance(D, WeightedPersistenceDiagram):
        out["weights"] = [
            {"birth": interval_values(pd.grid, I)[0], "death": interval_values(pd.grid, I)[1], "mass": w}
            for I, w in sorted(D.weights.items())
        ]
    return out


def diagram_from_json(obj: dict) -> PersistenceDiagram | WeightedPersistenceDiagram:
    try:
        grid = CriticalGrid(tuple(obj["grid"]))
        bars = {}
        for bar in obj["bars"]:
            key = (bar["birth"], bar["death"])
            bars[key] = bars.get(key, 0) + int(bar.get("mult", 1))
        pd = PersistenceDiagram.from_values(grid, bars, obj.get("degree"))
        if "weights" not in obj:
            return pd
        weights = {(grid.index(w["birth"]), grid.index(w["death"])): float(w["mass"]) for w in obj["weights"]}
    except (KeyError, TypeError) as exc:
        raise ParseError(f"malformed diagram object: {exc}") from None
    return WeightedPersistenceDiagram(pd, weights)


def _interval_json(grid: CriticalGrid, I: tuple[int, int]) -> list[float]:
    return list(interval_values(grid, I))


def certificate_to_json(cert: Any) -> Any:
    if cert is None:
        return None
    if isinstance(cert, WeightedMatching):
        out = certificate_to_json(cert.matching)
        g = cert.matching
        out["eta"] = [
            {"source": _interval_json(g.source, I), "target": _interval_json(g.target, J), "mass": w}
            for (I, J), w in sorted(cert.eta.items())
        ]
        return out
    if isinstance(cert, Matching):
        return {
            "gamma": [
                {"source": _interval_json(cert.source, I), "target": _interval_json(cert.target, J), "count": v}
                for (I, J), v in sorted(cert.gamma.items())
                if v
            ]
        }
    if isinstance(cert, np.ndarray):
        return {"coupling": cert.tolist()}
    if isinstance(cert, (frozenset, set)):
        return {"correspondence": [list(pair) for pair in sorted(cert)]}
    return cert


def distance_report(metric: str, p: float | None, result: DistanceResult) -> dict:
    out = {
        "metric": metric,
        "p": p,
        "value": result.value,
        "mode": result.mode,
        "certificate": certificate_to_json(result.certificate),
    }
    if result.lower_bound is not None:
        out["lower_bound"] = result.lower_bound
    return out
