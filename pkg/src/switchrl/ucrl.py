"""UCRL2 building blocks: visit statistics, confidence sets, extended value
iteration, and the episode-doubling rule.

The planner is optimistic: it maximizes the average reward jointly over
policies and over all MDPs whose rewards and transition rows lie within
confidence radii of the empirical estimates.  The inner maximization over
transition rows has the classic closed form (shift mass to the
highest-valued state, strip it from the lowest-valued ones), and the outer
loop is value iteration with a span stopping rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._evi import BACKEND, run_evi

__all__ = [
    "BACKEND",
    "ConfidenceSet",
    "EviResult",
    "LearnerStats",
    "confidence_radii",
    "estimates",
    "extended_value_iteration",
    "inner_max_transition",
    "reset",
    "should_end_episode",
]

_EVI_ITER_CAP = 10**6


class LearnerStats:
    """Visit statistics since the last restart.

    Attributes
    ----------
    r : time the current run of statistics started (restart time).
    t : last time step recorded.
    k : episode index (0 before the first episode is planned).
    t_k : start time of the current episode.
    N : (O, A) visit counts snapshotted at the current episode start.
    V : (O, A) visit counts within the current episode.
    reward_sums : (O, A) accumulated rewards since r.
    trans_counts : (O, A, O) successor counts since r.
    """

    def __init__(self, n_states: int, n_actions: int, r: int = 1):
        self.n_states = n_states
        self.n_actions = n_actions
        self.r = r
        self.t = r - 1
        self.k = 0
        self.t_k = r
        self.N = np.zeros((n_states, n_actions), dtype=np.int64)
        self.V = np.zeros((n_states, n_actions), dtype=np.int64)
        self.reward_sums = np.zeros((n_states, n_actions))
        self.trans_counts = np.zeros((n_states, n_actions, n_states), dtype=np.int64)
        self._total = np.zeros((n_states, n_actions), dtype=np.int64)

    def record(self, o: int, a: int, reward: float, o_next: int) -> None:
        """Log one transition (1-based states/action) and advance time."""
        i, j = o - 1, a - 1
        self.V[i, j] += 1
        self._total[i, j] += 1
        self.reward_sums[i, j] += reward
        self.trans_counts[i, j, o_next - 1] += 1
        self.t += 1

    def forget(self, o: int, a: int, reward: float, o_next: int) -> None:
        """Remove one transition from the running totals (used by
        sliding-window agents when a step leaves the window).  In-episode
        counts and the clock are untouched."""
        i, j = o - 1, a - 1
        self._total[i, j] -= 1
        self.reward_sums[i, j] -= reward
        self.trans_counts[i, j, o_next - 1] -= 1

    def start_episode(self, t_k: int) -> None:
        """Open episode k+1 at time t_k: snapshot counts, zero in-episode."""
        self.k += 1
        self.t_k = t_k
        np.copyto(self.N, self._total)
        self.V[:] = 0


def reset(stats: LearnerStats, new_r: int) -> None:
    """Zero all statistics and restart them from time new_r."""
    stats.r = new_r
    stats.t = new_r - 1
    stats.k = 0
    stats.t_k = new_r
    stats.N[:] = 0
    stats.V[:] = 0
    stats.reward_sums[:] = 0.0
    stats.trans_counts[:] = 0
    stats._total[:] = 0


def estimates(stats: LearnerStats):
    """Empirical reward means and transition rows with max{1, N} denominators.

    Unvisited pairs get reward 0 and a point mass on state 1; any choice is
    admissible there because the confidence radius covers the full simplex.
    """
    denom = np.maximum(1, stats.N)
    r_hat = stats.reward_sums / denom
    p_hat = stats.trans_counts / denom[:, :, None]
    unvisited = stats.N == 0
    if unvisited.any():
        p_hat[unvisited] = 0.0
        p_hat[unvisited, 0] = 1.0
        r_hat[unvisited] = 0.0
    return r_hat, p_hat


@dataclass(frozen=True)
class ConfidenceSet:
    """Per-pair confidence radii around the empirical estimates."""

    reward_radius: np.ndarray
    trans_radius: np.ndarray
    widening: float = 0.0


def confidence_radii(
    stats: LearnerStats, t_k: int, delta: float, widening: float = 0.0
) -> ConfidenceSet:
    """Reward and transition radii at episode start t_k.

    reward: sqrt(7 log(2 O A t_k / delta) / (2 max{1, N}))
    transition (L1): sqrt(14 O log(2 A t_k / delta) / max{1, N}) + widening
    """
    if t_k < 1:
        raise ValueError("t_k must be >= 1")
    if not 0 < delta < 1:
        raise ValueError("delta must be in (0, 1)")
    if widening < 0:
        raise ValueError("widening must be non-negative")
    o, a = stats.n_states, stats.n_actions
    denom = np.maximum(1, stats.N)
    reward = np.sqrt(7 * math.log(2 * o * a * t_k / delta) / (2 * denom))
    trans = np.sqrt(14 * o * math.log(2 * a * t_k / delta) / denom) + widening
    return ConfidenceSet(reward_radius=reward, trans_radius=trans, widening=widening)


def inner_max_transition(p_hat, radius: float, state_order) -> np.ndarray:
    """Distribution in the L1 ball of radius min(radius, 2) around p_hat
    maximizing expected value when states are ranked by state_order.

    Parameters
    ----------
    p_hat : (O,) probability vector.
    radius : non-negative L1 budget.
    state_order : 1-based state indices, best value first.

    Returns
    -------
    (O,) probability vector: mass min(1, p_hat[best] + radius/2) on the best
    state, with the overflow stripped from the worst-ranked states.
    """
    if radius < 0:
        raise ValueError("radius must be non-negative")
    p = np.array(p_hat, dtype=float)
    order = [int(s) - 1 for s in state_order]
    if sorted(order) != list(range(p.shape[0])):
        raise ValueError("state_order must be a permutation of all states")
    best = order[0]
    p[best] = min(1.0, p[best] + radius / 2.0)
    excess = p.sum() - 1.0
    for idx in reversed(order[1:]):
        if excess <= 0:
            break
        cut = min(p[idx], excess)
        p[idx] -= cut
        excess -= cut
    return p


@dataclass(frozen=True)
class EviResult:
    """Outcome of extended value iteration."""

    policy: np.ndarray
    gain: float
    values: np.ndarray
    iterations: int
    span: float


def extended_value_iteration(
    r_hat, p_hat, radii: ConfidenceSet, t_k: int, iter_cap: int = _EVI_ITER_CAP
) -> EviResult:
    """Optimistic planning over the confidence set.

    Iterates u <- max_a [min(r_hat + reward_radius, 1) + inner_max(p_hat,
    trans_radius, rank(u)) . u] with recentering until
    span(u_next - u) < 1/sqrt(t_k); gain is the midpoint of the final
    difference span and the policy is greedy with lowest-index tie-breaks
    (1-based actions).
    """
    if t_k < 1:
        raise ValueError("t_k must be >= 1")
    r_hat = np.ascontiguousarray(r_hat, dtype=float)
    p_hat = np.ascontiguousarray(p_hat, dtype=float)
    n_states = r_hat.shape[0]
    r_tilde = np.minimum(r_hat + radii.reward_radius, 1.0)
    r_tilde = np.ascontiguousarray(r_tilde)
    t_radius = np.ascontiguousarray(radii.trans_radius, dtype=float)
    stop_span = 1.0 / math.sqrt(t_k)
    u0 = np.zeros(n_states)
    policy0, gain, values, iterations, span = run_evi(
        u0, r_tilde, p_hat, t_radius, stop_span, iter_cap
    )
    return EviResult(
        policy=np.asarray(policy0, dtype=np.int64) + 1,
        gain=float(gain),
        values=np.asarray(values, dtype=float),
        iterations=int(iterations),
        span=float(span),
    )


def should_end_episode(stats: LearnerStats, o: int, a: int) -> bool:
    """True once the in-episode visits of (o, a) reach max{1, N[o, a]}."""
    return bool(stats.V[o - 1, a - 1] >= max(1, int(stats.N[o - 1, a - 1])))
