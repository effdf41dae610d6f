"""Report containers and their JSON/CSV serialization."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any

import numpy as np


class Verdict(str, Enum):
    SATISFIED = "satisfied"
    VIOLATED = "violated"
    INCONCLUSIVE = "inconclusive"
    # pure computations with no threshold attached
    COMPLETED = "completed"


def judge_at_least(value: float, threshold: float, error: float) -> Verdict:
    """Verdict for ``value >= threshold`` given a numerical error estimate.

    Violated only when the value falls short by more than three error
    estimates; a shortfall inside that band is inconclusive.  Raising the
    threshold can only move the verdict toward violated.
    """
    margin = 3.0 * abs(error)
    if value - threshold >= margin:
        return Verdict.SATISFIED
    if threshold - value > margin:
        return Verdict.VIOLATED
    return Verdict.INCONCLUSIVE


def combine(verdicts) -> Verdict:
    verdicts = [Verdict(v) for v in verdicts]
    if any(v is Verdict.VIOLATED for v in verdicts):
        return Verdict.VIOLATED
    if any(v is Verdict.INCONCLUSIVE for v in verdicts):
        return Verdict.INCONCLUSIVE
    if verdicts and all(v is Verdict.COMPLETED for v in verdicts):
        return Verdict.COMPLETED
    return Verdict.SATISFIED


@dataclass
class Comparison:
    name: str
    value: float
    threshold: float
    relation: str
    verdict: Verdict

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "value": self.value,
            "threshold": self.threshold,
            "relation": self.relation,
            "verdict": self.verdict.value,
        }


@dataclass
class CriterionReport:
    """Result of one criterion: values, threshold comparisons, verdict and error estimates.

    ``values`` holds the quantities the criterion is about; ``error_estimates``
    holds only numerical-error estimates, so consumers never mix them up.
    """

    name: str
    inputs: dict[str, Any]
    values: dict[str, Any] = field(default_factory=dict)
    comparisons: list[Comparison] = field(default_factory=list)
    verdict: Verdict = Verdict.COMPLETED
    error_estimates: dict[str, float] = field(default_factory=dict)
    curves: dict[str, np.ndarray] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "inputs": to_jsonable(self.inputs),
            "values": to_jsonable(self.values),
            "comparisons": [c.to_dict() for c in self.comparisons],
            "verdict": Verdict(self.verdict).value,
            "error_estimates": to_jsonable(self.error_estimates),
            "curves": {k: to_jsonable(np.asarray(v)) for k, v in self.curves.items()},
            "notes": list(self.notes),
        }


def to_jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, Path):
        return str(obj)
    if hasattr(obj, "to_dict"):
        return to_jsonable(obj.to_dict())
    return obj


def dumps(payload: dict) -> str:
    return json.dumps(to_jsonable(payload), indent=2, sort_keys=True) + "\n"


def write_curve_csv(path: Path, curve, header=("t", "value")) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    arr = np.atleast_2d(np.asarray(curve, dtype=float))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in arr:
            w.writerow([repr(float(v)) for v in row])


def wilson_interval(successes: int, trials: int, z: float = 1.959963984540054) -> tuple[float, float]:
    """95% Wilson score interval for a binomial proportion."""
    if trials <= 0:
        return 0.0, 1.0
    p = successes / trials
    denom = 1.0 + z * z / trials
    centre = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    lo = 0.0 if successes == 0 else max(0.0, centre - half)
    hi = 1.0 if successes == trials else min(1.0, centre + half)
    return lo, hi
