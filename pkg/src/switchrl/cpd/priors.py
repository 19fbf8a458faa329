"""Prior-weight schedules for new forecasters.

The schedule value at (r, s, t) is the prior weight the bank gives the
forecaster started at s when the current window is [r, t].  The forecaster
anchored at r itself always carries unit prior; schedules only discount the
challengers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .bounds import TheoryParams, false_alarm_prior_bound


def _check_order(r: int, s: int, t: int) -> None:
    if not r <= s <= t:
        raise ValueError("need r <= s <= t")


@dataclass(frozen=True)
class ReciprocalPrior:
    """Default schedule, 1 over the window length t - r + 1."""

    kind = "reciprocal"
    uniform_delta = True

    def log_value(self, r: int, s: int, t: int) -> float:
        _check_order(r, s, t)
        return -math.log(t - r + 1)

    def step_delta(self, r: int, t: int) -> float:
        # log value change from window end t-1 to t, shared by all challengers
        return math.log(t - r) - math.log(t - r + 1)


@dataclass(frozen=True)
class ConstantPrior:
    value: float

    kind = "constant"
    uniform_delta = True

    def __post_init__(self) -> None:
        if not 0 < self.value <= 1:
            raise ValueError("constant prior must be in (0,1]")

    def log_value(self, r: int, s: int, t: int) -> float:
        _check_order(r, s, t)
        return math.log(self.value)

    def step_delta(self, r: int, t: int) -> float:
        return 0.0


@dataclass(frozen=True)
class TheoryPrior:
    """Diagnostic schedule using the false-alarm bound as the prior weight.

    Far too conservative to detect anything quickly; exposed so the certified
    schedule can be exercised, not for operating use.
    """

    alphabet_size: int
    delta: float
    theory: TheoryParams = TheoryParams()

    kind = "theory"
    uniform_delta = False

    def log_value(self, r: int, s: int, t: int) -> float:
        _check_order(r, s, t)
        if s == r:
            return 0.0  # anchor keeps unit prior
        bound = false_alarm_prior_bound(
            s - r, t - s + 1, self.delta, self.theory, self.alphabet_size
        )
        return min(0.0, math.log(bound))


def prior_weight(r: int, s: int, t: int, schedule) -> float:
    """Schedule value at (r, s, t) as a probability in (0, 1]."""
    return math.exp(schedule.log_value(r, s, t))


def schedule_to_json(schedule) -> dict:
    if schedule.kind == "reciprocal":
        return {"kind": "reciprocal"}
    if schedule.kind == "constant":
        return {"kind": "constant", "value": schedule.value}
    if schedule.kind == "theory":
        return {
            "kind": "theory",
            "alphabet_size": schedule.alphabet_size,
            "delta": schedule.delta,
            "alpha": schedule.theory.alpha,
        }
    raise ValueError(f"unknown schedule kind {schedule.kind!r}")


def schedule_from_json(doc: dict):
    kind = doc.get("kind")
    if kind == "reciprocal":
        return ReciprocalPrior()
    if kind == "constant":
        return ConstantPrior(doc["value"])
    if kind == "theory":
        return TheoryPrior(
            doc["alphabet_size"], doc["delta"], TheoryParams(doc["alpha"])
        )
    raise ValueError(f"unknown schedule kind {kind!r}")
