"""Restarted Bayesian online change-point detector for multinomial streams.

The bank runs one forecaster per candidate change start s in the current
window [r, t].  Each forecaster scores incoming symbols with an add-one
smoothed sequential predictor; its weight is the product of those predictions
times a prior that discounts late starts.  A restart is declared as soon as
any challenger s > r outweighs the forecaster anchored at r by the restart
margin 1/delta, at which point the window is dropped and the bank starts
over at t + 1.

The margin calibrates the test to the configured confidence: a bare weight
comparison fires on roughly half of long stationary streams, while requiring
the challenger to carry an extra factor 1/delta of posterior mass keeps the
false-restart frequency at the delta level (see the false-alarm tests).

All weights live in log domain: the multiplicative recursion underflows
double precision within a few hundred steps otherwise.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernel
from .priors import (
    ConstantPrior,
    ReciprocalPrior,
    schedule_from_json,
    schedule_to_json,
)

_FORMAT = "switchrl.detector"
_VERSION = 1


@dataclass(frozen=True)
class DetectorConfig:
    alphabet_size: int
    delta: float
    prior_schedule: object = field(default_factory=ReciprocalPrior)
    max_forecasters: int = 0  # 0 = unbounded, matching the exact recursion

    def __post_init__(self) -> None:
        if self.alphabet_size < 2:
            raise ValueError("alphabet_size must be >= 2")
        if not 0 < self.delta < 1:
            raise ValueError("delta must be in (0,1)")
        if self.max_forecasters < 0:
            raise ValueError("max_forecasters must be >= 0")
        if self.max_forecasters == 1:
            raise ValueError(
                "max_forecasters must be 0 (unbounded) or >= 2: the bank "
                "always keeps the anchor plus the newest challenger"
            )

    @property
    def restart_log_margin(self) -> float:
        """Log-weight lead a challenger needs over the anchor to restart."""
        return -math.log(self.delta)


@dataclass(frozen=True)
class Forecaster:
    """Read-only view of one bank entry: the hypothesis that the last change
    happened at `start`."""

    start: int
    log_weight: float
    symbol_counts: np.ndarray
    n: int


@dataclass(frozen=True)
class Verdict:
    restarted: bool
    change_estimate: int


def laplace_predict(symbol_counts, n: int, x: int) -> float:
    """Add-one smoothed probability of symbol x given the counts so far.

    Parameters
    ----------
    symbol_counts : sequence of O non-negative ints summing to n
    n : observations so far
    x : symbol in 1..O

    Output: (count(x) + 1) / (n + O).  Sums to 1 over x.
    """
    counts = np.asarray(symbol_counts)
    o = len(counts)
    if o < 2:
        raise ValueError("alphabet_size must be >= 2")
    if int(counts.sum()) != n or (counts < 0).any():
        raise ValueError("counts inconsistent with n")
    if not 1 <= x <= o:
        raise ValueError(f"symbol {x} out of range 1..{o}")
    return (int(counts[x - 1]) + 1) / (n + o)


def forecaster_loss(forecaster: Forecaster, x: int) -> float:
    """Instantaneous log loss of one forecaster on symbol x."""
    return -math.log(laplace_predict(forecaster.symbol_counts, forecaster.n, x))


def closed_form_cumulative_loss(symbol_counts, n: int, alphabet_size: int) -> float:
    """Total sequential log loss of a forecaster over a sequence with the
    given symbol counts, in closed form.

    Equals log((n+O-1)!) - sum_o log(count_o!) - log((O-1)!), which is what
    the per-step losses telescope to; order independent.  n = 0 returns 0
    (empty product convention).
    """
    counts = np.asarray(symbol_counts)
    o = alphabet_size
    if o < 2:
        raise ValueError("alphabet_size must be >= 2")
    if len(counts) != o:
        raise ValueError("counts length must equal alphabet_size")
    if (counts < 0).any() or int(counts.sum()) != n:
        raise ValueError("counts inconsistent with n")
    if n == 0:
        return 0.0
    total = math.lgamma(n + o)
    for c in counts:
        total -= math.lgamma(int(c) + 1)
    total -= math.lgamma(o)
    return total


class ForecasterBank:
    """Live detector state since the last restart.

    Holds the forecaster anchored at the restart time r plus one challenger
    per later start.  `step` consumes one symbol, updates every weight via
    the log-domain recursion, inserts the challenger for the current time,
    and evaluates the restart test.

    The anchored forecaster keeps unit prior throughout; challengers enter
    with the schedule's prior weight times the cached evidence of the
    no-change model up to their start.  Every forecaster's stored log-weight
    includes the loss of its own first symbol (log O under the uniform
    predictor), so a weight always equals prior plus prefix evidence minus
    the closed-form cumulative loss of its counts.
    """

    def __init__(self, config: DetectorConfig, start_time: int = 1):
        if start_time < 1:
            raise ValueError("start_time must be >= 1")
        self.config = config
        # hot-path caches; config is frozen so these never go stale
        self._o = config.alphabet_size
        self._log_o = math.log(config.alphabet_size)
        self._margin = config.restart_log_margin
        self._schedule = config.prior_schedule
        self._is_reciprocal = isinstance(config.prior_schedule, ReciprocalPrior)
        self._reset(start_time)

    def _reset(self, new_r: int) -> None:
        o = self.config.alphabet_size
        cap = 8
        self._r = new_r
        self._stream_len = 0
        self._m = 1  # anchor pre-seeded with unit prior
        self._log_w = np.zeros(cap)
        self._n = np.zeros(cap, dtype=np.int64)
        self._counts = np.zeros((cap, o), dtype=np.int64)
        self._starts = np.zeros(cap, dtype=np.int64)
        self._starts[0] = new_r
        self._log_evidence = 0.0
        self._quiet = Verdict(False, new_r)

    # -- public state ----------------------------------------------------
    @property
    def restart_time(self) -> int:
        return self._r

    @property
    def t(self) -> int:
        """Last processed time; r - 1 when no symbol arrived since restart."""
        return self._r + self._stream_len - 1

    @property
    def log_evidence(self) -> float:
        """Log probability the anchored predictor assigned to the symbols
        seen since restart (0.0 when none)."""
        return self._log_evidence

    @property
    def forecasters(self) -> list[Forecaster]:
        return [
            Forecaster(
                start=int(self._starts[i]),
                log_weight=float(self._log_w[i]),
                symbol_counts=self._counts[i].copy(),
                n=int(self._n[i]),
            )
            for i in range(self._m)
        ]

    # -- stepping --------------------------------------------------------
    def step(self, x: int) -> Verdict:
        """Consume one symbol (1-based) and report the restart verdict."""
        o = self._o
        if not isinstance(x, (int, np.integer)):
            raise ValueError("symbol must be an integer")
        if not 1 <= x <= o:
            raise ValueError(f"symbol {x} out of range 1..{o}")
        x0 = int(x) - 1

        sl = self._stream_len
        if sl == 0:
            # anchor's own first symbol: pay the uniform-prediction loss
            self._counts[0, x0] += 1
            self._n[0] += 1
            self._log_w[0] = -self._log_o
            self._stream_len = 1
            self._log_evidence = -self._log_o
            return self._quiet

        t = self._r + sl
        m = self._m
        self._ensure_capacity(m + 1)
        if self._is_reciprocal:
            # inlined schedule: prior value 1/(t - r + 1) = 1/(sl + 1)
            log_len1 = math.log(sl + 1)
            d_log_prior = math.log(sl) - log_len1
            insert_log_w = -log_len1 + self._log_evidence - self._log_o
            anchor_loss, restart = _kernel.step_kernel(
                self._log_w, self._n, self._counts, m, x0, o, d_log_prior,
                insert_log_w, self._margin,
            )
        elif self._schedule.uniform_delta:
            schedule = self._schedule
            d_log_prior = schedule.step_delta(self._r, t)
            insert_log_w = (
                schedule.log_value(self._r, t, t) + self._log_evidence - self._log_o
            )
            anchor_loss, restart = _kernel.step_kernel(
                self._log_w, self._n, self._counts, m, x0, o, d_log_prior,
                insert_log_w, self._margin,
            )
        else:
            anchor_loss, restart = self._step_general(m, x0, t)
        self._starts[m] = t
        self._m = m + 1
        self._stream_len = sl + 1
        self._log_evidence -= anchor_loss

        if restart:
            self._reset(t + 1)
            return Verdict(True, t + 1)
        cap = self.config.max_forecasters
        if cap and self._m > cap:
            self._evict()
        return self._quiet

    def _step_general(self, m: int, x0: int, t: int):
        # per-challenger prior deltas; only schedules whose value depends on
        # the start need this path
        schedule = self.config.prior_schedule
        o = self.config.alphabet_size
        r = self._r
        losses = np.log(self._n[:m] + o) - np.log(self._counts[:m, x0] + 1)
        deltas = np.zeros(m)
        for i in range(1, m):
            s = int(self._starts[i])
            deltas[i] = schedule.log_value(r, s, t) - schedule.log_value(r, s, t - 1)
        self._log_w[0] -= losses[0]
        self._log_w[1:m] += deltas[1:m] - losses[1:m]
        self._log_w[m] = schedule.log_value(r, t, t) + self._log_evidence - math.log(o)
        restart = bool(
            np.any(
                self._log_w[1 : m + 1]
                > self._log_w[0] + self.config.restart_log_margin
            )
        )
        self._counts[: m + 1, x0] += 1
        self._n[: m + 1] += 1
        return float(losses[0]), restart

    def _ensure_capacity(self, needed: int) -> None:
        cap = len(self._log_w)
        if needed <= cap:
            return
        new_cap = cap
        while new_cap < needed:
            new_cap *= 2
        grow = new_cap - cap
        o = self.config.alphabet_size
        self._log_w = np.concatenate([self._log_w, np.zeros(grow)])
        self._n = np.concatenate([self._n, np.zeros(grow, dtype=np.int64)])
        self._counts = np.concatenate(
            [self._counts, np.zeros((grow, o), dtype=np.int64)]
        )
        self._starts = np.concatenate([self._starts, np.zeros(grow, dtype=np.int64)])

    def _evict(self) -> None:
        # Drop the lightest challengers; the anchor at row 0 and the newest
        # challenger are never evicted.  Removing the k lightest in one pass
        # equals k applications of the lightest-first rule at this instant
        # and amortizes the compaction cost over the next k insertions.
        m = self._m
        drop = min(max(1, self.config.max_forecasters // 4), m - 2)
        if drop == 1:
            victims = np.array([1 + int(np.argmin(self._log_w[1 : m - 1]))])
        else:
            victims = 1 + np.argpartition(self._log_w[1 : m - 1], drop - 1)[:drop]
        keep = np.ones(m, dtype=bool)
        keep[victims] = False
        kept = m - len(victims)
        self._log_w[:kept] = self._log_w[:m][keep]
        self._n[:kept] = self._n[:m][keep]
        self._counts[:kept] = self._counts[:m][keep]
        self._starts[:kept] = self._starts[:m][keep]
        self._log_w[kept:m] = 0.0
        self._n[kept:m] = 0
        self._counts[kept:m] = 0
        self._starts[kept:m] = 0
        self._m = kept

    # -- serialization ---------------------------------------------------
    def to_json_dict(self) -> dict:
        return {
            "format": _FORMAT,
            "version": _VERSION,
            "alphabet_size": self.config.alphabet_size,
            "delta": self.config.delta,
            "prior_schedule": schedule_to_json(self.config.prior_schedule),
            "max_forecasters": self.config.max_forecasters,
            "restart_time": self._r,
            "t": self.t,
            "log_evidence": self._log_evidence,
            "forecasters": [
                {
                    "start": int(self._starts[i]),
                    "log_weight": float(self._log_w[i]),
                    "counts": [int(c) for c in self._counts[i]],
                }
                for i in range(self._m)
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True)

    @classmethod
    def from_json_dict(cls, doc: dict) -> "ForecasterBank":
        if doc.get("format") != _FORMAT:
            raise ValueError("not a detector state document")
        if doc.get("version") != _VERSION:
            raise ValueError(f"unsupported version {doc.get('version')!r}")
        config = DetectorConfig(
            alphabet_size=doc["alphabet_size"],
            delta=doc["delta"],
            prior_schedule=schedule_from_json(doc["prior_schedule"]),
            max_forecasters=doc["max_forecasters"],
        )
        bank = cls(config, start_time=doc["restart_time"])
        entries = doc["forecasters"]
        if not entries:
            raise ValueError("state must contain the anchored forecaster")
        if entries[0]["start"] != doc["restart_time"]:
            raise ValueError("first forecaster must be anchored at restart_time")
        m = len(entries)
        bank._ensure_capacity(m)
        for i, entry in enumerate(entries):
            counts = np.asarray(entry["counts"], dtype=np.int64)
            if len(counts) != config.alphabet_size or (counts < 0).any():
                raise ValueError("bad forecaster counts")
            bank._starts[i] = entry["start"]
            bank._log_w[i] = entry["log_weight"]
            bank._counts[i] = counts
            bank._n[i] = counts.sum()
        bank._m = m
        bank._stream_len = doc["t"] - doc["restart_time"] + 1
        if bank._stream_len < 0:
            raise ValueError("t precedes restart_time")
        if bank._stream_len == 0 and m != 1:
            raise ValueError("fresh bank must hold exactly the anchor")
        bank._log_evidence = doc["log_evidence"]
        return bank

    @classmethod
    def from_json(cls, text: str) -> "ForecasterBank":
        return cls.from_json_dict(json.loads(text))


def detect_stream(symbols, config: DetectorConfig) -> list[int]:
    """Run a fresh detector over a 1-based symbol stream.

    Returns the 1-based stream positions at which restarts fired.  Uses the
    batched kernel when the configuration allows it (uniform-delta schedule,
    no forecaster cap); otherwise falls back to stepping a bank.
    """
    arr = np.asarray(list(symbols), dtype=np.int64)
    o = config.alphabet_size
    if arr.size and (arr.min() < 1 or arr.max() > o):
        raise ValueError(f"symbols must lie in 1..{o}")
    schedule = config.prior_schedule
    fast = config.max_forecasters == 0 and isinstance(
        schedule, (ReciprocalPrior, ConstantPrior)
    )
    if fast:
        kind = 0 if isinstance(schedule, ReciprocalPrior) else 1
        log_const = 0.0 if kind == 0 else math.log(schedule.value)
        hits = _kernel.run_stream(
            arr - 1, o, kind, log_const, config.restart_log_margin
        )
        return [int(h) for h in hits]
    bank = ForecasterBank(config)
    out = []
    for pos, x in enumerate(arr, start=1):
        if bank.step(int(x)).restarted:
            out.append(pos)
    return out
