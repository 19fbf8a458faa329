"""Learning agents behind one act/observe interface.

The flagship agent couples UCRL2 with one change-point detector per
state-action pair: each detector watches the stream of successor states
observed on visits to its pair, and the first detector restart wipes all
learning state so the agent re-learns the new MDP from scratch.  The
comparison agents share the UCRL2 core and differ only in when they forget:
never (vanilla), at the true change points (oracle), on a fixed cubic
schedule, or continuously via a sliding window (with optional confidence
widening).

Rewards are not change-monitored: the detectors consume transitions only.
Reward-only changes are caught indirectly when kernels also change.
"""

from __future__ import annotations

import enum
import math
from collections import deque

import numpy as np

from .cpd import DetectorConfig, ForecasterBank
from .ucrl import (
    LearnerStats,
    confidence_radii,
    estimates,
    extended_value_iteration,
    reset,
    should_end_episode,
)

__all__ = [
    "AgentEvent",
    "OracleRestartAgent",
    "RbocpdUcrl2Agent",
    "RestartedUcrl2Agent",
    "SlidingWindowUcrl2Agent",
    "Ucrl2Agent",
    "restart_schedule",
    "restart_times_up_to",
    "sliding_window_estimates",
    "sw_window",
    "swcw_params",
    "variation_budgets",
]


class AgentEvent(enum.Enum):
    NONE = "none"
    EPISODE_END = "episode_end"
    RESTART = "restart"


class Ucrl2Agent:
    """Vanilla UCRL2: optimistic planning, episode doubling, no forgetting."""

    tag = "ucrl2"

    def __init__(self, n_states: int, n_actions: int, delta: float,
                 widening: float = 0.0):
        if n_states < 1 or n_actions < 1:
            raise ValueError("need at least one state and one action")
        if not 0 < delta < 1:
            raise ValueError("delta must be in (0, 1)")
        if widening < 0:
            raise ValueError("widening must be non-negative")
        self.n_states = n_states
        self.n_actions = n_actions
        self.delta = delta
        self.widening = widening
        self.reset_for_new_run()

    # -- run lifecycle ---------------------------------------------------
    def reset_for_new_run(self) -> None:
        self.stats = LearnerStats(self.n_states, self.n_actions)
        self.t = 0
        self.restarts: list[int] = []
        self.total_episodes = 0
        self._policy_list: list[int] | None = None

    # -- interface -------------------------------------------------------
    def act(self, o: int) -> int:
        if self._policy_list is None:
            self._plan()
        return self._policy_list[o - 1]

    def observe(self, o: int, a: int, reward: float, o_next: int) -> AgentEvent:
        self.t += 1
        self._record(o, a, reward, o_next)
        if self._should_restart(o, a, o_next):
            self._global_restart()
            return AgentEvent.RESTART
        if should_end_episode(self.stats, o, a):
            self._plan()
            return AgentEvent.EPISODE_END
        return AgentEvent.NONE

    # -- internals agents override ---------------------------------------
    def _record(self, o: int, a: int, reward: float, o_next: int) -> None:
        self.stats.record(o, a, reward, o_next)

    def _should_restart(self, o: int, a: int, o_next: int) -> bool:
        return False

    def _confidence_delta(self) -> float:
        return self.delta

    def _global_restart(self) -> None:
        new_r = self.t + 1
        reset(self.stats, new_r)
        self.restarts.append(new_r)
        self._plan()

    def _plan(self) -> None:
        stats = self.stats
        stats.start_episode(self.t + 1)
        r_hat, p_hat = estimates(stats)
        radii = confidence_radii(
            stats, stats.t_k, self._confidence_delta(), widening=self.widening
        )
        result = extended_value_iteration(r_hat, p_hat, radii, stats.t_k)
        self._policy_list = result.policy.tolist()
        self.total_episodes += 1


class OracleRestartAgent(Ucrl2Agent):
    """UCRL2 that resets exactly at the true change points."""

    tag = "oracle"

    def __init__(self, n_states, n_actions, delta, change_points):
        self._restart_set = frozenset(int(c) for c in change_points)
        super().__init__(n_states, n_actions, delta)

    def _should_restart(self, o, a, o_next):
        return (self.t + 1) in self._restart_set


def restart_schedule(i: int, k_t: int) -> int:
    """Scheduled restart time ceil(i^3 / k_t^2) for the i-th restart."""
    if i < 1 or k_t < 1:
        raise ValueError("i and k_t must be >= 1")
    return -(-(i**3) // k_t**2)


def restart_times_up_to(k_t: int, horizon: int) -> list[int]:
    """Distinct scheduled restart times in [2, horizon], ascending.  Time 1
    is dropped: restarting with zero history is a no-op."""
    times = set()
    i = 1
    while True:
        tau = restart_schedule(i, k_t)
        if tau > horizon:
            break
        if tau > 1:
            times.add(tau)
        i += 1
    return sorted(times)


class RestartedUcrl2Agent(Ucrl2Agent):
    """UCRL2 reset on the fixed cubic schedule, knowing only the number of
    changes, not their locations."""

    tag = "restarted_ucrl2"

    def __init__(self, n_states, n_actions, delta, k_t, horizon):
        self._restart_set = frozenset(restart_times_up_to(k_t, horizon))
        super().__init__(n_states, n_actions, delta)

    def _should_restart(self, o, a, o_next):
        return (self.t + 1) in self._restart_set


class SlidingWindowUcrl2Agent(Ucrl2Agent):
    """UCRL2 whose statistics cover only the last `window` transitions;
    positive widening turns it into the confidence-widened variant."""

    tag = "swucrl2"

    def __init__(self, n_states, n_actions, delta, window, widening=0.0):
        if window < 1:
            raise ValueError("window must be >= 1")
        self.window = int(window)
        super().__init__(n_states, n_actions, delta, widening=widening)

    def reset_for_new_run(self):
        super().reset_for_new_run()
        self._window_buf: deque = deque()

    def _record(self, o, a, reward, o_next):
        self.stats.record(o, a, reward, o_next)
        buf = self._window_buf
        buf.append((o, a, reward, o_next))
        if len(buf) > self.window:
            self.stats.forget(*buf.popleft())

    def _global_restart(self):
        self._window_buf.clear()
        super()._global_restart()


class RbocpdUcrl2Agent(Ucrl2Agent):
    """UCRL2 with per-pair change-point detectors and global restarts.

    Detector (o, a) consumes the successor state of every visit to (o, a) —
    the only stream that is i.i.d. multinomial within a stationary segment.
    The confidence budget is split evenly: delta/2 to the UCRL2 confidence
    sets, delta/2 spread uniformly over the O*A detectors.

    detector_cap bounds the forecasters kept per detector (oldest-lightest
    evicted beyond it), turning the per-visit cost from linear in the
    segment length into a constant; the cap only needs to exceed the
    detection delay by a wide margin.
    """

    tag = "rbocpd_ucrl2"

    def __init__(self, n_states, n_actions, delta, detector_cap: int = 256):
        if n_states < 2:
            raise ValueError("detectors need at least two states")
        self._detector_config = DetectorConfig(
            alphabet_size=n_states,
            delta=delta / (2 * n_states * n_actions),
            max_forecasters=detector_cap,
        )
        super().__init__(n_states, n_actions, delta)

    def reset_for_new_run(self):
        super().reset_for_new_run()
        self._make_banks()

    def _make_banks(self):
        self.detectors = [
            [ForecasterBank(self._detector_config) for _ in range(self.n_actions)]
            for _ in range(self.n_states)
        ]

    def _confidence_delta(self):
        return self.delta / 2

    def _should_restart(self, o, a, o_next):
        return self.detectors[o - 1][a - 1].step(o_next).restarted

    def _global_restart(self):
        self._make_banks()
        super()._global_restart()


# -- baseline parameter formulas -----------------------------------------


def sw_window(k_t: int, horizon: int, diameter: float, n_states: int,
              n_actions: int, delta: float) -> int:
    """Sliding-window length (16.53/K_T * T * D * O * sqrt(A log(T/delta)))^(2/3),
    rounded to the nearest integer, at least 1."""
    if min(k_t, horizon, n_states, n_actions) < 1 or diameter <= 0:
        raise ValueError("arguments must be positive")
    if not 0 < delta < 1:
        raise ValueError("delta must be in (0, 1)")
    inner = (
        16.53 / k_t * horizon * diameter * n_states
        * math.sqrt(n_actions * math.log(horizon / delta))
    )
    return max(1, round(inner ** (2.0 / 3.0)))


def swcw_params(n_states: int, n_actions: int, horizon: int, b_p: float,
                b_r: float) -> tuple[int, float]:
    """Window and widening for the confidence-widened variant:
    W* = 3 O^(2/3) A^(1/2) T^(1/2) / (B_r + B_p + 1)^(1/2) rounded >= 1,
    eta* = sqrt((B_p + 1) W* / T) using the rounded window."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    if b_p < 0 or b_r < 0:
        raise ValueError("variation budgets must be non-negative")
    w_star = (
        3 * n_states ** (2.0 / 3.0) * math.sqrt(n_actions) * math.sqrt(horizon)
        / math.sqrt(b_r + b_p + 1)
    )
    window = max(1, round(w_star))
    eta = math.sqrt((b_p + 1) * window / horizon)
    return window, eta


def variation_budgets(switching) -> tuple[float, float]:
    """Total-variation budgets over the change points: sum over changes of
    the worst-pair TV distance between consecutive kernels (B_p) and the
    worst-pair absolute mean-reward shift (B_r)."""
    b_p = 0.0
    b_r = 0.0
    for prev, nxt in zip(switching.segments, switching.segments[1:]):
        b_p += float(0.5 * np.abs(nxt.kernel - prev.kernel).sum(axis=2).max())
        b_r += float(np.abs(nxt.mean_rewards - prev.mean_rewards).max())
    return b_p, b_r


def sliding_window_estimates(history, window: int, t: int, n_states: int,
                             n_actions: int):
    """From-scratch windowed estimates over steps [max(1, t-window+1), t].

    history[i] is the 1-based transition (o, a, reward, o_next) of step i+1.
    Returns (r_hat, p_hat, counts) with the same max{1, N} denominators and
    unvisited-pair conventions as the full-history estimates.
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    if not 1 <= t <= len(history):
        raise ValueError("t outside recorded history")
    stats = LearnerStats(n_states, n_actions)
    for o, a, reward, o_next in history[max(0, t - window):t]:
        stats.record(o, a, reward, o_next)
    np.copyto(stats.N, stats.V)
    r_hat, p_hat = estimates(stats)
    return r_hat, p_hat, stats.N.copy()
