"""Experiment harness: deterministic multi-agent benchmark runs over
switching MDPs, exact regret accounting, and reproducible file outputs.

Every realization is a pure function of (environment, agent spec, seed):
seeds are derived from the base seed by hashing the agent tag and
realization index, so results are independent of worker count and
scheduling.  Outputs are byte-deterministic: CSV/JSON/SVG emitted from the
same results always have identical bytes (wall-clock times stay out of the
files).
"""

from __future__ import annotations

import hashlib
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .agents import (
    OracleRestartAgent,
    RbocpdUcrl2Agent,
    RestartedUcrl2Agent,
    SlidingWindowUcrl2Agent,
    Ucrl2Agent,
    sw_window,
    swcw_params,
    variation_budgets,
)
from .envs import (
    GenConfig,
    SwitchingMdp,
    diameter,
    env_step,
    generate_switching,
    make_env,
    optimal_gain,
)

_RUN_FORMAT = "switchrl.run"
_RUN_VERSION = 1

AGENT_TAGS = (
    "rbocpd_ucrl2",
    "ucrl2",
    "oracle",
    "restarted_ucrl2",
    "swucrl2",
    "swucrl2_cw",
)


@dataclass(frozen=True)
class AgentSpec:
    """One benchmark entrant: a tag from AGENT_TAGS plus overrides for its
    derived parameters (window, widening, k_t, diameter, detector_cap)."""

    tag: str
    params: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.tag not in AGENT_TAGS:
            raise ValueError(f"unknown agent tag {self.tag!r}; known: {AGENT_TAGS}")


@dataclass(frozen=True)
class ExperimentConfig:
    env: GenConfig | None = None
    env_path: str | None = None
    agents: tuple = ()
    realizations: int = 20
    base_seed: int = 0
    delta: float = 0.05

    def __post_init__(self) -> None:
        if (self.env is None) == (self.env_path is None):
            raise ValueError("exactly one of env / env_path must be given")
        if not self.agents:
            raise ValueError("agent list must be non-empty")
        if self.realizations < 1:
            raise ValueError("realizations must be >= 1")
        if not 0 < self.delta < 1:
            raise ValueError("delta must be in (0, 1)")
        if isinstance(self.env, dict):
            object.__setattr__(self, "env", GenConfig.from_json_dict(self.env))
        object.__setattr__(
            self,
            "agents",
            tuple(a if isinstance(a, AgentSpec) else AgentSpec(**a)
                  for a in self.agents),
        )

    @classmethod
    def from_json_dict(cls, doc: dict) -> "ExperimentConfig":
        known = {"env", "env_path", "agents", "realizations", "base_seed", "delta"}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        env = doc.get("env")
        return cls(
            env=GenConfig.from_json_dict(env) if env is not None else None,
            env_path=doc.get("env_path"),
            agents=tuple(AgentSpec(tag=a["tag"], params=a.get("params", {}))
                         for a in doc["agents"]),
            realizations=doc.get("realizations", 20),
            base_seed=doc.get("base_seed", 0),
            delta=doc.get("delta", 0.05),
        )


@dataclass(frozen=True)
class SegmentInfo:
    """Exact per-segment solution of the environment."""

    gains: tuple
    diameters: tuple
    max_diameter: float
    rho_steps: np.ndarray  # length T, rho*(t) for t = 1..T
    cum_rho: np.ndarray  # length T+1, exact per-segment products


def exact_cum_rho(gains, change_points) -> np.ndarray:
    """Cumulative optimal-gain line built from per-segment products
    rho_l * k, so a constant-gain stretch carries one rounding per point
    instead of compounding additions; with gain 0.8 over 100 steps the
    total is exactly 80.0."""
    horizon = change_points[-1] - 1
    cum = np.empty(horizon + 1)
    cum[0] = 0.0
    offset = 0.0
    for gain, start, end in zip(gains, change_points[:-1], change_points[1:]):
        length = end - start
        cum[start : start + length] = offset + gain * np.arange(1, length + 1)
        offset = cum[start + length - 1]
    return cum


def precompute_gains(switching: SwitchingMdp, tol: float = 1e-9) -> SegmentInfo:
    """Per-segment optimal gain and diameter, plus the per-step rho* line."""
    gains = []
    diameters = []
    for seg in switching.segments:
        gain, _ = optimal_gain(seg, tol=tol)
        gains.append(gain)
        diameters.append(diameter(seg, tol=tol))
    lengths = np.diff(switching.change_points)
    rho_steps = np.repeat(np.asarray(gains), lengths)
    return SegmentInfo(
        gains=tuple(gains),
        diameters=tuple(diameters),
        max_diameter=float(max(diameters)),
        rho_steps=rho_steps,
        cum_rho=exact_cum_rho(gains, switching.change_points),
    )


@dataclass(frozen=True)
class RegretTrace:
    """Per-step and cumulative accounting of one realization."""

    rewards: np.ndarray
    rho_steps: np.ndarray
    cum_rewards: np.ndarray  # length T+1, leading 0
    cum_regret: np.ndarray  # length T+1, leading 0


@dataclass(frozen=True)
class RunResult:
    tag: str
    seed: int
    final_reward: float
    final_regret: float
    restarts: tuple
    episodes: int
    wall_time: float
    trace: RegretTrace | None = None

    def summary_dict(self) -> dict:
        return {
            "seed": self.seed,
            "final_reward": self.final_reward,
            "final_regret": self.final_regret,
            "restarts": list(self.restarts),
            "episodes": self.episodes,
        }


def derive_seed(base_seed: int, tag: str, index: int) -> int:
    """Realization seed: base_seed XOR the first 8 bytes of
    sha256("tag:index"); collision-free across the (tag, index) lattice for
    practical purposes and independent of execution order."""
    digest = hashlib.sha256(f"{tag}:{index}".encode()).digest()
    return (base_seed ^ int.from_bytes(digest[:8], "big")) % 2**63


def make_agent(spec: AgentSpec, switching: SwitchingMdp, seg_info: SegmentInfo,
               delta: float):
    """Build a fresh agent for one realization; returns (agent, derived
    parameters used, for the run metadata)."""
    o, a = switching.n_states, switching.n_actions
    horizon = switching.horizon
    k_t = int(spec.params.get("k_t", switching.n_segments))
    tag = spec.tag
    if tag == "rbocpd_ucrl2":
        cap = int(spec.params.get("detector_cap", 256))
        return RbocpdUcrl2Agent(o, a, delta, detector_cap=cap), {
            "detector_cap": cap
        }
    if tag == "ucrl2":
        return Ucrl2Agent(o, a, delta), {}
    if tag == "oracle":
        points = switching.interior_change_points()
        return OracleRestartAgent(o, a, delta, points), {"change_points": points}
    if tag == "restarted_ucrl2":
        return RestartedUcrl2Agent(o, a, delta, k_t=k_t, horizon=horizon), {
            "k_t": k_t
        }
    if tag == "swucrl2":
        diam = float(spec.params.get("diameter", seg_info.max_diameter))
        window = int(
            spec.params.get("window", sw_window(k_t, horizon, diam, o, a, delta))
        )
        return SlidingWindowUcrl2Agent(o, a, delta, window=window), {
            "window": window,
            "diameter": diam,
            "k_t": k_t,
        }
    if tag == "swucrl2_cw":
        b_p, b_r = variation_budgets(switching)
        window, eta = swcw_params(o, a, horizon, b_p, b_r)
        window = int(spec.params.get("window", window))
        eta = float(spec.params.get("widening", eta))
        return SlidingWindowUcrl2Agent(o, a, delta, window=window, widening=eta), {
            "window": window,
            "widening": eta,
            "b_p": b_p,
            "b_r": b_r,
        }
    raise ValueError(f"unknown agent tag {tag!r}")


def run_realization(switching: SwitchingMdp, seg_info: SegmentInfo,
                    spec: AgentSpec, seed: int, delta: float,
                    keep_trace: bool = True) -> RunResult:
    """Simulate one full horizon; deterministic given its arguments."""
    started = time.perf_counter()
    agent, _ = make_agent(spec, switching, seg_info, delta)
    env = make_env(switching, seed=seed)
    horizon = switching.horizon
    rewards = np.empty(horizon)
    state = env.state
    step = env_step
    observe = agent.observe
    act = agent.act
    for t in range(horizon):
        action = act(state)
        nxt, reward = step(env, switching, action)
        observe(state, action, reward, nxt)
        rewards[t] = reward
        state = nxt
    cum_rewards = np.concatenate([[0.0], np.cumsum(rewards)])
    cum_regret = seg_info.cum_rho - cum_rewards
    trace = (
        RegretTrace(
            rewards=rewards,
            rho_steps=seg_info.rho_steps,
            cum_rewards=cum_rewards,
            cum_regret=cum_regret,
        )
        if keep_trace
        else None
    )
    return RunResult(
        tag=spec.tag,
        seed=seed,
        final_reward=float(cum_rewards[-1]),
        final_regret=float(cum_regret[-1]),
        restarts=tuple(agent.restarts),
        episodes=agent.total_episodes,
        wall_time=time.perf_counter() - started,
        trace=trace,
    )


@dataclass(frozen=True)
class AgentOutcome:
    """Aggregated results of one agent over all realizations."""

    tag: str
    params_used: dict
    seeds: tuple
    runs: tuple  # RunResult without traces
    mean_cum_rewards: np.ndarray
    stderr_cum_rewards: np.ndarray
    mean_cum_regret: np.ndarray


@dataclass(frozen=True)
class ExperimentResults:
    config: ExperimentConfig
    switching: SwitchingMdp
    seg_info: SegmentInfo
    outcomes: tuple


def _realization_payload(args):
    env_json, spec_tag, spec_params, seed, delta = args
    switching = SwitchingMdp.from_json(env_json)
    seg_info = precompute_gains(switching)
    result = run_realization(
        switching, seg_info, AgentSpec(spec_tag, spec_params), seed, delta
    )
    return result.trace.cum_rewards, result

def _aggregate(tag, params_used, seeds, results, cum_rho) -> AgentOutcome:
    curves = np.stack([r.trace.cum_rewards for r in results])
    n = curves.shape[0]
    mean = curves.mean(axis=0)
    if n > 1:
        var = np.maximum(curves.var(axis=0, ddof=1), 0.0)
        stderr = np.sqrt(var / n)
    else:
        stderr = np.zeros_like(mean)
    mean_regret = cum_rho - mean
    bare = tuple(
        RunResult(
            tag=r.tag, seed=r.seed, final_reward=r.final_reward,
            final_regret=r.final_regret, restarts=r.restarts,
            episodes=r.episodes, wall_time=r.wall_time, trace=None,
        )
        for r in results
    )
    return AgentOutcome(
        tag=tag,
        params_used=params_used,
        seeds=tuple(seeds),
        runs=bare,
        mean_cum_rewards=mean,
        stderr_cum_rewards=stderr,
        mean_cum_regret=mean_regret,
    )


def load_switching(config: ExperimentConfig) -> SwitchingMdp:
    if config.env is not None:
        return generate_switching(config.env)
    return SwitchingMdp.from_json(Path(config.env_path).read_text())


def run_experiment(config: ExperimentConfig, workers: int = 1,
                   progress=None) -> ExperimentResults:
    """Run every (agent, realization) pair; aggregation order is fixed by
    realization index, so results are identical for any worker count."""
    if workers < 1:
        raise ValueError("workers must be >= 1")
    switching = load_switching(config)
    seg_info = precompute_gains(switching)
    outcomes = []
    failures = []
    for spec in config.agents:
        _, params_used = make_agent(spec, switching, seg_info, config.delta)
        seeds = [
            derive_seed(config.base_seed, spec.tag, i)
            for i in range(config.realizations)
        ]
        results: list = [None] * len(seeds)
        if workers == 1:
            for i, seed in enumerate(seeds):
                try:
                    results[i] = run_realization(
                        switching, seg_info, spec, seed, config.delta
                    )
                except Exception as exc:  # noqa: BLE001 - reported per seed
                    failures.append((spec.tag, seed, repr(exc)))
                if progress:
                    progress(spec.tag, i + 1, len(seeds))
        else:
            env_json = switching.to_json()
            tasks = [
                (env_json, spec.tag, spec.params, seed, config.delta)
                for seed in seeds
            ]
            with ProcessPoolExecutor(max_workers=workers) as pool:
                for i, outcome in enumerate(pool.map(_realization_payload, tasks)):
                    results[i] = outcome[1]
                    if progress:
                        progress(spec.tag, i + 1, len(seeds))
        done = [r for r in results if r is not None]
        if not done:
            raise RuntimeError(
                f"all realizations failed for agent {spec.tag!r}: {failures}"
            )
        outcomes.append(
            _aggregate(spec.tag, params_used, seeds, done, seg_info.cum_rho)
        )
    if failures:
        raise RuntimeError(f"failed realizations (tag, seed, error): {failures}")
    return ExperimentResults(
        config=config,
        switching=switching,
        seg_info=seg_info,
        outcomes=tuple(outcomes),
    )


# -- output emission -----------------------------------------------------


def _format_float(x: float) -> str:
    return repr(float(x))


def _agent_csv(outcome: AgentOutcome) -> str:
    lines = ["t,mean_cum_reward,stderr_cum_reward,mean_cum_regret"]
    mean = outcome.mean_cum_rewards
    err = outcome.stderr_cum_rewards
    reg = outcome.mean_cum_regret
    for t in range(1, len(mean)):
        lines.append(
            f"{t},{_format_float(mean[t])},{_format_float(err[t])},"
            f"{_format_float(reg[t])}"
        )
    return "\n".join(lines) + "\n"


_PALETTE = (
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
    "#e377c2", "#7f7f7f",
)


def _svg_chart(outcomes, change_points) -> str:
    width, height = 960, 560
    left, right, top, bottom = 70, 180, 30, 50
    plot_w = width - left - right
    plot_h = height - top - bottom
    horizon = len(outcomes[0].mean_cum_rewards) - 1
    y_max = max(float(o.mean_cum_rewards[-1]) for o in outcomes) or 1.0

    def sx(t):
        return left + plot_w * t / horizon

    def sy(v):
        return top + plot_h * (1 - v / y_max)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<line x1="{left}" y1="{top + plot_h}" x2="{left + plot_w}" '
        f'y2="{top + plot_h}" stroke="black"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + plot_h}" '
        f'stroke="black"/>',
    ]
    for cp in change_points[1:-1]:
        x = f"{sx(cp):.2f}"
        parts.append(
            f'<line x1="{x}" y1="{top}" x2="{x}" y2="{top + plot_h}" '
            f'stroke="#bbbbbb" stroke-dasharray="4 3"/>'
        )
    for i in range(5):
        frac = i / 4
        x = f"{left + plot_w * frac:.2f}"
        parts.append(
            f'<text x="{x}" y="{top + plot_h + 20}" font-size="12" '
            f'text-anchor="middle">{round(horizon * frac)}</text>'
        )
        y = f"{top + plot_h * (1 - frac):.2f}"
        parts.append(
            f'<text x="{left - 8}" y="{y}" font-size="12" '
            f'text-anchor="end">{y_max * frac:.0f}</text>'
        )
    parts.append(
        f'<text x="{left + plot_w / 2:.2f}" y="{height - 12}" font-size="13" '
        f'text-anchor="middle">time step</text>'
    )
    stride = max(1, horizon // 1000)
    for idx, outcome in enumerate(outcomes):
        color = _PALETTE[idx % len(_PALETTE)]
        ts = list(range(0, horizon + 1, stride))
        if ts[-1] != horizon:
            ts.append(horizon)
        points = " ".join(
            f"{sx(t):.2f},{sy(float(outcome.mean_cum_rewards[t])):.2f}"
            for t in ts
        )
        parts.append(
            f'<polyline fill="none" stroke="{color}" stroke-width="1.5" '
            f'points="{points}"/>'
        )
        ly = top + 18 * idx + 12
        parts.append(
            f'<line x1="{left + plot_w + 10}" y1="{ly - 4}" '
            f'x2="{left + plot_w + 34}" y2="{ly - 4}" stroke="{color}" '
            f'stroke-width="2"/>'
        )
        parts.append(
            f'<text x="{left + plot_w + 40}" y="{ly}" font-size="12">'
            f"{outcome.tag}</text>"
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def results_json_dict(results: ExperimentResults) -> dict:
    config = results.config
    return {
        "format": _RUN_FORMAT,
        "version": _RUN_VERSION,
        "delta": config.delta,
        "realizations": config.realizations,
        "base_seed": config.base_seed,
        "gen_config": config.env.to_json_dict() if config.env else None,
        "env_path": config.env_path,
        "env": results.switching.to_json_dict(),
        "change_points": list(results.switching.change_points),
        "segment_gains": [float(g) for g in results.seg_info.gains],
        "segment_diameters": [float(d) for d in results.seg_info.diameters],
        "max_diameter": results.seg_info.max_diameter,
        "agents": [
            {
                "tag": o.tag,
                "params_used": o.params_used,
                "seeds": list(o.seeds),
                "runs": [r.summary_dict() for r in o.runs],
                "mean_final_reward": float(o.mean_cum_rewards[-1]),
                "stderr_final_reward": float(o.stderr_cum_rewards[-1]),
                "mean_final_regret": float(o.mean_cum_regret[-1]),
            }
            for o in results.outcomes
        ],
    }


def emit_outputs(results: ExperimentResults, out_dir) -> list:
    """Write per-agent CSVs, run.json, curves_<tag>.npy, and chart.svg.
    Returns the written paths; identical results produce identical bytes."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        written = []
        for outcome in results.outcomes:
            csv_path = out / f"agent_{outcome.tag}.csv"
            csv_path.write_text(_agent_csv(outcome))
            written.append(csv_path)
            npy_path = out / f"curves_{outcome.tag}.npy"
            stacked = np.stack(
                [
                    outcome.mean_cum_rewards,
                    outcome.stderr_cum_rewards,
                    outcome.mean_cum_regret,
                ]
            )
            with npy_path.open("wb") as fh:
                np.save(fh, stacked)
            written.append(npy_path)
        json_path = out / "run.json"
        json_path.write_text(
            json.dumps(results_json_dict(results), sort_keys=True, indent=2)
            + "\n"
        )
        written.append(json_path)
        svg_path = out / "chart.svg"
        svg_path.write_text(
            _svg_chart(results.outcomes, results.switching.change_points)
        )
        written.append(svg_path)
        return written
    except OSError as exc:
        raise OSError(f"cannot write outputs under {out}: {exc}") from exc


def reemit_outputs(run_dir) -> list:
    """Rebuild the CSVs and the chart from run.json + curves_<tag>.npy in
    run_dir, byte-identically to the original emission."""
    run_dir = Path(run_dir)
    doc = json.loads((run_dir / "run.json").read_text())
    if doc.get("format") != _RUN_FORMAT or doc.get("version") != _RUN_VERSION:
        raise ValueError(f"{run_dir}/run.json is not a result document")
    outcomes = []
    for agent_doc in doc["agents"]:
        tag = agent_doc["tag"]
        stacked = np.load(run_dir / f"curves_{tag}.npy")
        outcomes.append(
            AgentOutcome(
                tag=tag,
                params_used=agent_doc["params_used"],
                seeds=tuple(agent_doc["seeds"]),
                runs=(),
                mean_cum_rewards=stacked[0],
                stderr_cum_rewards=stacked[1],
                mean_cum_regret=stacked[2],
            )
        )
    written = []
    for outcome in outcomes:
        path = run_dir / f"agent_{outcome.tag}.csv"
        path.write_text(_agent_csv(outcome))
        written.append(path)
    svg_path = run_dir / "chart.svg"
    svg_path.write_text(_svg_chart(outcomes, doc["change_points"]))
    written.append(svg_path)
    return written
