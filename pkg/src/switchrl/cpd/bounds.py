"""Diagnostic calculators for the detector's false-alarm and delay guarantees.

These evaluate the closed-form bounds that certify the restart rule: how small
the new-forecaster prior weight must be to keep the false-alarm probability
under delta, and how many post-change samples are needed before a change of a
given per-symbol gap is declared.  They are calculators only; the operating
detector uses the reciprocal prior schedule and never consults them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class TheoryParams:
    """Free parameters of the false-alarm bound. Any alpha > 1 is admissible."""

    alpha: float = 1.1

    def __post_init__(self) -> None:
        if not self.alpha > 1:
            raise ValueError("alpha must be > 1")


def stirling_log_term(alphabet_size: int) -> float:
    """Stirling-approximation constant entering the false-alarm bound.

    Equals -O/12 - ((O-1)/2) log(2 pi) + (O/2) log O for alphabet size O.
    """
    o = alphabet_size
    if o < 2:
        raise ValueError("alphabet_size must be >= 2")
    return -o / 12.0 - (o - 1) / 2.0 * math.log(2 * math.pi) + o / 2.0 * math.log(o)


def _window_lengths(r: int, s: int, t: int) -> tuple[int, int, int]:
    if not r < s <= t:
        raise ValueError("need r < s <= t")
    return s - r, t - s + 1, t - r + 1


def split_penalty(r: int, s: int, t: int, alphabet_size: int) -> float:
    """Additive log penalty of the split-at-s hypothesis in the delay bound.

    Collects the combinatorial prefactors of the two-segment marginal
    likelihood relative to the one-segment one over the window [r, t].
    """
    o = alphabet_size
    if o < 2:
        raise ValueError("alphabet_size must be >= 2")
    n1, n2, n = _window_lengths(r, s, t)
    total = 0.0
    for i in range(1, o):
        total += math.log(n1 + i) + math.log(n2 + i) - math.log(n + i)
    total -= (o - 1) / 2.0 * math.log(n2 / n)
    total -= math.lgamma(o)
    return total


def concentration_radius(r: int, s: int, t: int, delta: float) -> float:
    """Deviation radius for the empirical symbol frequencies on both sides of
    a candidate split at s, at confidence delta.

    Strictly decreasing in both window lengths for fixed delta.
    """
    if not 0 < delta < 1:
        raise ValueError("delta must be in (0,1)")
    n1, n2, n = _window_lengths(r, s, t)
    nrs = s - r + 1
    term1 = math.sqrt((1 + 1 / n1) / n1 * math.log(2 * math.sqrt(nrs) / delta))
    term2 = math.sqrt(
        (1 + 1 / n2)
        / n2
        * math.log(2 * n * math.sqrt(n2 + 1) * math.log(n) ** 2 / (math.log(2) * delta))
    )
    return math.sqrt(2) / 2 * (term1 + term2)


def false_alarm_prior_bound(
    n1: int, n2: int, delta: float, theory: TheoryParams, alphabet_size: int
) -> float:
    """Largest admissible new-forecaster prior weight that keeps the
    false-alarm probability of the restart test below delta.

    Evaluated in log domain; the product and factorial terms overflow double
    precision for long windows otherwise.
    """
    o = alphabet_size
    if o < 2:
        raise ValueError("alphabet_size must be >= 2")
    if n1 < 1 or n2 < 1:
        raise ValueError("window lengths must be >= 1")
    if not 0 < delta < 1:
        raise ValueError("delta must be in (0,1)")
    alpha = theory.alpha
    n = n1 + n2
    log_val = 0.0
    for i in range(1, o):
        log_val += math.log(n1 + i) + math.log(n2 + i) - math.log(n + i)
    log_val += 2 * stirling_log_term(o)
    log_val -= (o - 1) / 2.0 * (math.log(n1) + math.log(n2))
    log_val -= math.lgamma(o)
    log_val += alpha * (
        math.log(math.log(4 * alpha + 2))
        + 2 * math.log(delta)
        - math.log(4 * n)
        - math.log(math.log((alpha + 3) * n))
    )
    return math.exp(log_val)


def detection_delay_bound(
    gaps,
    r: int,
    change_time: int,
    delta: float,
    schedule,
    *,
    cap: int | None = None,
) -> int | None:
    """Smallest certified detection delay for a change at change_time.

    gaps holds the per-symbol absolute frequency shifts of the change.  The
    candidate delay d is accepted when d exceeds the bound evaluated at the
    window ending d steps after the change, subject to the positivity side
    conditions (every gap must clear the concentration radius and the
    correction denominator must stay positive).  The threshold term uses the
    detector's operating restart bar: prior weight of the challenger plus
    the confidence margin log(1/delta).  Returns None when no delay up to
    the cap qualifies; an all-zero gap vector is undetectable.
    """
    gaps = [float(g) for g in gaps]
    if len(gaps) < 2:
        raise ValueError("need one gap per symbol, alphabet size >= 2")
    if any(g < 0 or g > 1 for g in gaps):
        raise ValueError("gaps must lie in [0,1]")
    if not r < change_time:
        raise ValueError("need r < change_time")
    if not 0 < delta < 1:
        raise ValueError("delta must be in (0,1)")
    o = len(gaps)
    n1 = change_time - r
    if cap is None:
        cap = 10 * n1 + 10**4
    for d in range(1, cap + 1):
        t = change_time + d - 1
        radius = concentration_radius(r, change_time, t, delta)
        ssq = 0.0
        feasible = True
        for g in gaps:
            diff = g - radius
            if diff <= 0:
                feasible = False
                break
            ssq += diff * diff
        if not feasible:
            continue
        log_prior = schedule.log_value(r, change_time, t) + math.log(delta)
        penalty = split_penalty(r, change_time, t, o)
        denom = 1 + 2 * (log_prior - penalty) / (n1 * ssq)
        if denom <= 0:
            continue
        bound = (2 / ssq) * ((-log_prior + penalty) / denom)
        if d > bound:
            return d
    return None
