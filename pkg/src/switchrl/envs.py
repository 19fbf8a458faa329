"""Tabular switching-MDP model: generation, simulation, exact oracles.

A switching MDP is a sequence of stationary tabular MDPs over shared state
and action sets, each active on a half-open time interval.  This module
generates random instances (smoothed Dirichlet kernels, Bernoulli rewards),
steps trajectories through them, and computes the exact quantities the
benchmark needs: per-segment optimal average reward (gain) and diameter.
"""

from __future__ import annotations

import json
import math
from bisect import bisect_right
from dataclasses import dataclass, field

import numpy as np

_ENV_FORMAT = "switchrl.env"
_ENV_VERSION = 1

_PROB_TOL = 1e-12


class EndOfHorizon(Exception):
    """Raised by env_step once the trajectory has used up all T steps."""


@dataclass(frozen=True)
class MdpSpec:
    """One stationary MDP: kernel[o, a] is P(.|o, a), mean_rewards[o, a] the
    expected reward of (o, a).  States and actions are 1-based externally,
    0-based in the arrays."""

    kernel: np.ndarray
    mean_rewards: np.ndarray

    def __post_init__(self) -> None:
        kernel = np.asarray(self.kernel, dtype=float)
        rewards = np.asarray(self.mean_rewards, dtype=float)
        if kernel.ndim != 3 or kernel.shape[0] != kernel.shape[2]:
            raise ValueError("kernel must have shape (O, A, O)")
        if rewards.shape != kernel.shape[:2]:
            raise ValueError("mean_rewards must have shape (O, A)")
        if (kernel < 0).any():
            raise ValueError("kernel entries must be non-negative")
        if np.abs(kernel.sum(axis=2) - 1).max() > _PROB_TOL:
            raise ValueError("kernel rows must sum to 1")
        if (rewards < 0).any() or (rewards > 1).any():
            raise ValueError("mean rewards must lie in [0, 1]")
        object.__setattr__(self, "kernel", kernel)
        object.__setattr__(self, "mean_rewards", rewards)

    @property
    def n_states(self) -> int:
        return self.kernel.shape[0]

    @property
    def n_actions(self) -> int:
        return self.kernel.shape[1]


@dataclass(frozen=True)
class SwitchingMdp:
    """Piecewise-stationary MDP: segments[i] is active on
    [change_points[i], change_points[i+1]).  change_points[0] is 1 and
    change_points[-1] is T + 1."""

    segments: tuple
    change_points: tuple

    def __post_init__(self) -> None:
        segments = tuple(self.segments)
        points = tuple(int(c) for c in self.change_points)
        if not segments:
            raise ValueError("need at least one segment")
        if len(points) != len(segments) + 1:
            raise ValueError("change_points must bracket every segment")
        if points[0] != 1:
            raise ValueError("first change point must be 1")
        if any(b <= a for a, b in zip(points, points[1:])):
            raise ValueError("change points must be strictly increasing")
        o, a = segments[0].n_states, segments[0].n_actions
        for seg in segments:
            if seg.n_states != o or seg.n_actions != a:
                raise ValueError("all segments must share state/action sets")
        object.__setattr__(self, "segments", segments)
        object.__setattr__(self, "change_points", points)
        # per-segment caches for fast sampling: transition-row CDFs and
        # reward means as plain nested tuples (python floats beat numpy
        # scalar indexing in the per-step loop)
        cdfs = tuple(
            tuple(
                tuple(tuple(np.cumsum(seg.kernel[o, a]).tolist())
                      for a in range(seg.n_actions))
                for o in range(seg.n_states)
            )
            for seg in segments
        )
        means = tuple(
            tuple(tuple(float(x) for x in seg.mean_rewards[o])
                  for o in range(seg.n_states))
            for seg in segments
        )
        object.__setattr__(self, "_cdfs", cdfs)
        object.__setattr__(self, "_means", means)

    @property
    def n_states(self) -> int:
        return self.segments[0].n_states

    @property
    def n_actions(self) -> int:
        return self.segments[0].n_actions

    @property
    def horizon(self) -> int:
        return self.change_points[-1] - 1

    @property
    def n_segments(self) -> int:
        return len(self.segments)

    def interior_change_points(self) -> list[int]:
        return list(self.change_points[1:-1])

    def to_json_dict(self) -> dict:
        return {
            "format": _ENV_FORMAT,
            "version": _ENV_VERSION,
            "n_states": self.n_states,
            "n_actions": self.n_actions,
            "change_points": list(self.change_points),
            "segments": [
                {
                    "kernel": [float(x) for x in seg.kernel.ravel()],
                    "mean_rewards": [float(x) for x in seg.mean_rewards.ravel()],
                }
                for seg in self.segments
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True)

    @classmethod
    def from_json_dict(cls, doc: dict) -> "SwitchingMdp":
        if doc.get("format") != _ENV_FORMAT:
            raise ValueError("not a switching-MDP document")
        if doc.get("version") != _ENV_VERSION:
            raise ValueError(f"unsupported version {doc.get('version')!r}")
        o, a = int(doc["n_states"]), int(doc["n_actions"])
        segments = tuple(
            MdpSpec(
                kernel=np.asarray(seg["kernel"], dtype=float).reshape(o, a, o),
                mean_rewards=np.asarray(seg["mean_rewards"], dtype=float).reshape(o, a),
            )
            for seg in doc["segments"]
        )
        return cls(segments=segments, change_points=tuple(doc["change_points"]))

    @classmethod
    def from_json(cls, text: str) -> "SwitchingMdp":
        return cls.from_json_dict(json.loads(text))


def active_index(switching: SwitchingMdp, t: int) -> int:
    """Index of the segment active at time t (left-closed, right-open)."""
    if not 1 <= t <= switching.horizon:
        raise ValueError(f"t={t} outside 1..{switching.horizon}")
    return bisect_right(switching.change_points, t) - 1


@dataclass(frozen=True)
class GenConfig:
    n_states: int
    n_actions: int
    n_segments: int
    horizon: int
    min_segment_len: int = 2
    smoothing_eps: float = 0.02
    reward_variation: float = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_states < 1 or self.n_actions < 1:
            raise ValueError("need at least one state and one action")
        if self.n_segments < 1:
            raise ValueError("need at least one segment")
        if self.min_segment_len < 1:
            raise ValueError("min_segment_len must be >= 1")
        if self.n_segments * self.min_segment_len > self.horizon:
            raise ValueError("segments cannot fit into the horizon")
        if not 0 <= self.smoothing_eps < 1:
            raise ValueError("smoothing_eps must be in [0, 1)")
        if not 0 <= self.reward_variation <= 1:
            raise ValueError("reward_variation must be in [0, 1]")

    def to_json_dict(self) -> dict:
        return {
            "n_states": self.n_states,
            "n_actions": self.n_actions,
            "n_segments": self.n_segments,
            "horizon": self.horizon,
            "min_segment_len": self.min_segment_len,
            "smoothing_eps": self.smoothing_eps,
            "reward_variation": self.reward_variation,
            "seed": self.seed,
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "GenConfig":
        return cls(**{k: doc[k] for k in cls.__dataclass_fields__ if k in doc})


def smooth_rows(raw: np.ndarray, eps: float) -> np.ndarray:
    """Blend probability rows with the uniform distribution at weight eps,
    flooring every entry at eps/O."""
    o = raw.shape[-1]
    return (1 - eps) * raw + eps / o


def generate_mdp(config: GenConfig, rng, prev_rewards=None) -> MdpSpec:
    """Draw one stationary MDP.

    Kernel rows are flat-Dirichlet draws blended with the uniform
    distribution at weight smoothing_eps, which keeps every transition
    probability at least eps/O and hence the MDP communicating.  Rewards are
    uniform on [0,1]; when prev_rewards is given they move only
    reward_variation of the way from the previous segment's means toward a
    fresh draw.
    """
    o, a = config.n_states, config.n_actions
    raw = rng.dirichlet(np.ones(o), size=(o, a))
    kernel = smooth_rows(raw, config.smoothing_eps)
    fresh = rng.random((o, a))
    if prev_rewards is None:
        rewards = fresh
    else:
        v = config.reward_variation
        rewards = (1 - v) * prev_rewards + v * fresh
    return MdpSpec(kernel=kernel, mean_rewards=rewards)


def generate_switching(config: GenConfig, rng=None) -> SwitchingMdp:
    """Draw a full switching MDP: change points uniform among placements
    that keep every segment at least min_segment_len long, then one fresh
    MDP per segment (rewards blended per reward_variation)."""
    if rng is None:
        rng = np.random.default_rng(config.seed)
    k, t_total, floor = config.n_segments, config.horizon, config.min_segment_len
    slack = t_total - k * floor
    # uniform composition of the slack into k parts via stars and bars
    if k > 1:
        bars = np.sort(rng.choice(slack + k - 1, size=k - 1, replace=False))
        cuts = [int(b) - i for i, b in enumerate(bars)]  # slack split points
        extras = np.diff([0, *cuts, slack])
    else:
        extras = np.array([slack])
    lengths = floor + extras
    points = [1]
    for length in lengths:
        points.append(points[-1] + int(length))
    segments = []
    prev_rewards = None
    for _ in range(k):
        seg = generate_mdp(config, rng, prev_rewards=prev_rewards)
        prev_rewards = seg.mean_rewards
        segments.append(seg)
    return SwitchingMdp(segments=tuple(segments), change_points=tuple(points))


@dataclass
class EnvState:
    """Mutable trajectory cursor: the time of the next transition, the
    current state, the private generator, and the active-segment cursor."""

    t: int
    state: int
    rng: np.random.Generator
    seg: int = 0
    next_change: int = field(default=2**62, repr=False)


def make_env(switching: SwitchingMdp, seed: int, start_state: int = 1) -> EnvState:
    if not 1 <= start_state <= switching.n_states:
        raise ValueError("start_state out of range")
    return EnvState(
        t=1,
        state=start_state,
        rng=np.random.default_rng(seed),
        seg=0,
        next_change=switching.change_points[1],
    )


def env_step(env: EnvState, switching: SwitchingMdp, action: int):
    """Advance one step: sample the successor from the active segment's
    kernel row and a Bernoulli reward with the row's mean.  Returns
    (next_state, reward); raises EndOfHorizon past the last step."""
    t = env.t
    if t >= env.next_change:
        if t > switching.horizon:
            raise EndOfHorizon(f"horizon {switching.horizon} exhausted")
        seg = env.seg
        while t >= switching.change_points[seg + 1]:
            seg += 1
        env.seg = seg
        env.next_change = switching.change_points[seg + 1]
    if not 1 <= action <= switching.n_actions:
        raise ValueError(f"action {action} out of range 1..{switching.n_actions}")
    rng = env.rng
    state0 = env.state - 1
    cdf_row = switching._cdfs[env.seg][state0][action - 1]
    nxt = bisect_right(cdf_row, rng.random()) + 1
    if nxt > switching.n_states:  # guard against cdf rounding below 1.0
        nxt = switching.n_states
    reward = 1.0 if rng.random() < switching._means[env.seg][state0][action - 1] else 0.0
    env.t = t + 1
    env.state = nxt
    return nxt, reward


_DAMPING = 0.9


def optimal_gain(mdp: MdpSpec, tol: float = 1e-9, max_iter: int = 500_000):
    """Optimal average reward and bias of a communicating MDP.

    Relative value iteration on a damped transform (self-loop weight
    1 - damping added to every action) whose gain is damping times the
    original and whose bias solves the same optimality equation; iteration
    stops when the span of successive differences certifies the Bellman
    residual below tol.  Returns (gain, bias) with bias[0] = 0.
    """
    o = mdp.n_states
    if o == 1:
        gain = float(mdp.mean_rewards.max())
        return gain, np.zeros(1)
    tau = _DAMPING
    p = tau * mdp.kernel + (1 - tau) * np.eye(o)[:, None, :]
    r = tau * mdp.mean_rewards
    u = np.zeros(o)
    # span(next - u) < inner_tol certifies residual <= inner_tol/2 for the
    # transformed MDP, hence <= inner_tol/(2 tau) for the original
    inner_tol = tol * tau
    for _ in range(max_iter):
        q = r + p @ u
        u_next = q.max(axis=1)
        diff = u_next - u
        span = float(diff.max() - diff.min())
        if span < inner_tol:
            gain = float((diff.max() + diff.min()) / 2) / tau
            bias = u_next - u_next[0]
            return gain, bias
        u = u_next - u_next.min()
    raise RuntimeError(
        "value iteration did not converge; the MDP may not be communicating"
    )


def bellman_residual(mdp: MdpSpec, gain: float, bias: np.ndarray) -> float:
    """Max absolute optimality-equation residual of a (gain, bias) pair."""
    q = mdp.mean_rewards + mdp.kernel @ bias
    return float(np.abs(gain + bias - q.max(axis=1)).max())


def diameter(mdp: MdpSpec, tol: float = 1e-9, max_iter: int = 500_000) -> float:
    """Max over ordered state pairs of the minimal expected hitting time.

    For each target, value-iterate the shortest-path equations
    v(o) = 1 + min_a sum_{o' != target} P(o'|o,a) v(o') with v(target) = 0.
    """
    o = mdp.n_states
    if o == 1:
        return 0.0
    worst = 0.0
    for target in range(o):
        p = mdp.kernel.copy()
        p[:, :, target] = 0.0
        v = np.zeros(o)
        for _ in range(max_iter):
            v_next = 1 + (p @ v).min(axis=1)
            v_next[target] = 0.0
            delta = float(np.abs(v_next - v).max())
            v = v_next
            if delta < tol:
                break
        else:
            raise RuntimeError(
                "hitting-time iteration did not converge; "
                "the MDP may not be communicating"
            )
        worst = max(worst, float(np.delete(v, target).max()))
    return worst
