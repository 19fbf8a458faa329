"""Tests for the experiment harness: seeding, exact regret accounting,
aggregation, determinism, and file outputs."""

import json
from pathlib import Path

import numpy as np
import pytest

import switchrl.bench as bench_mod
from switchrl.agents import sw_window, swcw_params, variation_budgets
from switchrl.bench import (
    AgentSpec,
    ExperimentConfig,
    derive_seed,
    emit_outputs,
    exact_cum_rho,
    make_agent,
    precompute_gains,
    reemit_outputs,
    run_experiment,
    run_realization,
)
from switchrl.envs import MdpSpec, SwitchingMdp, generate_switching, GenConfig


def small_switching(seed=5, horizon=1000, n_segments=2, n_states=3, n_actions=2):
    return generate_switching(
        GenConfig(
            n_states=n_states,
            n_actions=n_actions,
            n_segments=n_segments,
            horizon=horizon,
            min_segment_len=horizon // (2 * n_segments),
            seed=seed,
        )
    )


def stationary_two_action(reward_low=0.1, reward_high=0.9, horizon=10_000):
    """One segment, uniform transitions, one clearly best action."""
    kernel = np.full((2, 2, 2), 0.5)
    rewards = np.array([[reward_low, reward_high], [reward_low, reward_high]])
    seg = MdpSpec(kernel=kernel, mean_rewards=rewards)
    return SwitchingMdp(segments=(seg,), change_points=(1, horizon + 1))


class TestSeeds:
    def test_depends_on_tag_and_index(self):
        seeds = {
            derive_seed(7, tag, i)
            for tag in ("oracle", "ucrl2", "rbocpd_ucrl2")
            for i in range(50)
        }
        assert len(seeds) == 150

    def test_range_and_determinism(self):
        for i in range(20):
            s = derive_seed(123, "oracle", i)
            assert 0 <= s < 2**63
            assert s == derive_seed(123, "oracle", i)

    def test_base_seed_changes_all(self):
        a = [derive_seed(1, "oracle", i) for i in range(10)]
        b = [derive_seed(2, "oracle", i) for i in range(10)]
        assert all(x != y for x, y in zip(a, b))


class TestExactCumRho:
    def test_constant_gain_exact_products(self):
        cum = exact_cum_rho([0.8], [1, 101])
        assert cum[0] == 0.0
        assert cum[100] == 80.0
        assert cum[7] == 0.8 * 7

    def test_reward_seventy_gives_regret_ten_exactly(self):
        cum_rho = exact_cum_rho([0.8], [1, 101])
        rewards = np.concatenate([np.ones(70), np.zeros(30)])
        cum_rewards = np.concatenate([[0.0], np.cumsum(rewards)])
        regret = cum_rho - cum_rewards
        assert regret[-1] == 10.0

    def test_multi_segment_matches_ordered_product_sum(self):
        change_points = [1, 41, 106, 201]
        gains = [0.3, 0.9, 0.5]
        cum = exact_cum_rho(gains, change_points)
        acc = 0.0
        for gain, start, end in zip(gains, change_points[:-1], change_points[1:]):
            acc = acc + gain * (end - start)
        assert cum[-1] == acc
        assert len(cum) == 201

    def test_piecewise_constant_increments(self):
        cum = exact_cum_rho([0.25, 0.75], [1, 5, 9])
        steps = np.diff(cum)
        assert np.allclose(steps[:4], 0.25, atol=1e-12)
        assert np.allclose(steps[4:], 0.75, atol=1e-12)


class TestPrecomputeGains:
    def test_rho_line_matches_segments(self):
        switching = small_switching(seed=9, horizon=600, n_segments=3,
                                    n_states=2, n_actions=2)
        info = precompute_gains(switching)
        assert len(info.gains) == 3
        assert len(info.rho_steps) == 600
        points = switching.change_points
        for ell in range(3):
            seg_slice = info.rho_steps[points[ell] - 1 : points[ell + 1] - 1]
            assert np.all(seg_slice == info.gains[ell])
        assert info.max_diameter == max(info.diameters)
        assert np.allclose(np.diff(info.cum_rho), info.rho_steps, atol=1e-12)


class TestRunRealization:
    def test_regret_identity_holds_exactly(self):
        switching = small_switching(seed=3, horizon=800)
        info = precompute_gains(switching)
        result = run_realization(switching, info, AgentSpec("ucrl2"), 42, 0.05)
        trace = result.trace
        assert np.array_equal(
            trace.cum_regret, info.cum_rho - trace.cum_rewards
        )
        assert trace.cum_rewards[0] == 0.0
        assert result.final_reward == trace.cum_rewards[-1]
        assert result.final_regret == trace.cum_regret[-1]
        assert len(trace.cum_rewards) == 801

    def test_same_seed_bit_identical(self):
        switching = small_switching(seed=3, horizon=800)
        info = precompute_gains(switching)
        spec = AgentSpec("rbocpd_ucrl2")
        a = run_realization(switching, info, spec, 42, 0.05)
        b = run_realization(switching, info, spec, 42, 0.05)
        assert np.array_equal(a.trace.cum_rewards, b.trace.cum_rewards)
        assert a.restarts == b.restarts
        assert a.episodes == b.episodes

    def test_different_seeds_differ(self):
        switching = small_switching(seed=3, horizon=800)
        info = precompute_gains(switching)
        spec = AgentSpec("ucrl2")
        a = run_realization(switching, info, spec, 1, 0.05)
        b = run_realization(switching, info, spec, 2, 0.05)
        assert not np.array_equal(a.trace.cum_rewards, b.trace.cum_rewards)

    def test_rewards_are_bernoulli(self):
        switching = small_switching(seed=3, horizon=500)
        info = precompute_gains(switching)
        result = run_realization(switching, info, AgentSpec("oracle"), 7, 0.05)
        assert set(np.unique(result.trace.rewards)) <= {0.0, 1.0}


class TestOracleConvergence:
    def test_regret_slope_vanishes_on_stationary_env(self):
        switching = stationary_two_action(horizon=10_000)
        info = precompute_gains(switching)
        assert info.gains[0] == pytest.approx(0.9, abs=1e-9)
        result = run_realization(switching, info, AgentSpec("oracle"), 11, 0.05)
        regret = result.trace.cum_regret
        t_hi, t_lo = 10_000, 8_000
        slope = (regret[t_hi] - regret[t_lo]) / (t_hi - t_lo)
        assert abs(slope) < 0.05


class TestAgentFactory:
    def test_all_tags_build(self):
        switching = small_switching()
        info = precompute_gains(switching)
        for tag in bench_mod.AGENT_TAGS:
            agent, params = make_agent(AgentSpec(tag), switching, info, 0.05)
            assert agent.n_states == switching.n_states
            assert isinstance(params, dict)

    def test_unknown_tag_rejected(self):
        with pytest.raises(ValueError, match="unknown agent tag"):
            AgentSpec("bogus")

    def test_oracle_gets_interior_change_points(self):
        switching = small_switching()
        info = precompute_gains(switching)
        agent, params = make_agent(AgentSpec("oracle"), switching, info, 0.05)
        assert params["change_points"] == switching.interior_change_points()

    def test_sliding_window_uses_true_diameter(self):
        switching = small_switching()
        info = precompute_gains(switching)
        _, params = make_agent(AgentSpec("swucrl2"), switching, info, 0.05)
        expected = sw_window(
            switching.n_segments,
            switching.horizon,
            info.max_diameter,
            switching.n_states,
            switching.n_actions,
            0.05,
        )
        assert params["window"] == expected

    def test_confidence_widening_from_budgets(self):
        switching = small_switching()
        info = precompute_gains(switching)
        agent, params = make_agent(AgentSpec("swucrl2_cw"), switching, info, 0.05)
        b_p, b_r = variation_budgets(switching)
        window, eta = swcw_params(
            switching.n_states, switching.n_actions, switching.horizon, b_p, b_r
        )
        assert params["window"] == window
        assert params["widening"] == eta
        assert agent.widening == eta

    def test_param_overrides_respected(self):
        switching = small_switching()
        info = precompute_gains(switching)
        agent, params = make_agent(
            AgentSpec("swucrl2", {"window": 50}), switching, info, 0.05
        )
        assert params["window"] == 50
        agent2, params2 = make_agent(
            AgentSpec("restarted_ucrl2", {"k_t": 7}), switching, info, 0.05
        )
        assert params2["k_t"] == 7


class TestExperimentConfig:
    def test_requires_exactly_one_env_source(self):
        with pytest.raises(ValueError, match="env"):
            ExperimentConfig(agents=(AgentSpec("oracle"),))
        with pytest.raises(ValueError, match="env"):
            ExperimentConfig(
                env=GenConfig(2, 2, 1, 100),
                env_path="x.json",
                agents=(AgentSpec("oracle"),),
            )

    def test_round_trip_from_json_dict(self):
        doc = {
            "env": {"n_states": 3, "n_actions": 2, "n_segments": 2,
                    "horizon": 500, "min_segment_len": 100, "seed": 4},
            "agents": [{"tag": "oracle"}, {"tag": "swucrl2",
                                           "params": {"window": 9}}],
            "realizations": 3,
            "base_seed": 8,
            "delta": 0.1,
        }
        config = ExperimentConfig.from_json_dict(doc)
        assert config.realizations == 3
        assert config.agents[1].params == {"window": 9}

    def test_unknown_keys_rejected(self):
        with pytest.raises(ValueError, match="unknown config keys"):
            ExperimentConfig.from_json_dict(
                {"agents": [{"tag": "oracle"}], "bogus": 1}
            )


def tiny_config(tmp_path=None, **overrides):
    base = dict(
        env={"n_states": 3, "n_actions": 2, "n_segments": 2,
             "horizon": 600, "min_segment_len": 150, "seed": 5},
        agents=[{"tag": "oracle"}, {"tag": "ucrl2"}],
        realizations=3,
        base_seed=21,
        delta=0.05,
    )
    base.update(overrides)
    return ExperimentConfig(**base)


class TestRunExperiment:
    def test_mean_is_arithmetic_mean_of_runs(self):
        config = tiny_config()
        results = run_experiment(config)
        switching = results.switching
        info = results.seg_info
        for outcome in results.outcomes:
            curves = np.stack([
                run_realization(
                    switching, info, AgentSpec(outcome.tag),
                    derive_seed(config.base_seed, outcome.tag, i),
                    config.delta,
                ).trace.cum_rewards
                for i in range(config.realizations)
            ])
            assert np.max(np.abs(outcome.mean_cum_rewards
                                 - curves.mean(axis=0))) <= 1e-12

    def test_single_realization_reduces_to_run(self):
        config = tiny_config(realizations=1)
        results = run_experiment(config)
        outcome = results.outcomes[0]
        single = run_realization(
            results.switching, results.seg_info, AgentSpec(outcome.tag),
            outcome.seeds[0], config.delta,
        )
        assert np.array_equal(outcome.mean_cum_rewards,
                              single.trace.cum_rewards)
        assert np.all(outcome.stderr_cum_rewards == 0.0)

    def test_worker_count_does_not_change_results(self):
        config = tiny_config(realizations=2, agents=[{"tag": "oracle"}])
        serial = run_experiment(config, workers=1)
        pooled = run_experiment(config, workers=2)
        for a, b in zip(serial.outcomes, pooled.outcomes):
            assert np.array_equal(a.mean_cum_rewards, b.mean_cum_rewards)
            assert np.array_equal(a.stderr_cum_rewards, b.stderr_cum_rewards)
            assert [r.summary_dict() for r in a.runs] == [
                r.summary_dict() for r in b.runs
            ]

    def test_failure_reported_with_tag_and_seed(self, monkeypatch):
        config = tiny_config(agents=[{"tag": "oracle"}], realizations=2)
        bad_seed = derive_seed(config.base_seed, "oracle", 1)
        real = bench_mod.run_realization

        def sometimes_boom(switching, info, spec, seed, delta, keep_trace=True):
            if seed == bad_seed:
                raise RuntimeError("injected failure")
            return real(switching, info, spec, seed, delta, keep_trace)

        monkeypatch.setattr(bench_mod, "run_realization", sometimes_boom)
        with pytest.raises(RuntimeError) as err:
            run_experiment(config)
        assert "oracle" in str(err.value)
        assert str(bad_seed) in str(err.value)

    def test_bad_worker_count_rejected(self):
        with pytest.raises(ValueError, match="workers"):
            run_experiment(tiny_config(), workers=0)


class TestOutputs:
    def test_csv_shape_and_header(self, tmp_path):
        config = tiny_config(realizations=2)
        results = run_experiment(config)
        emit_outputs(results, tmp_path)
        horizon = results.switching.horizon
        for outcome in results.outcomes:
            lines = (tmp_path / f"agent_{outcome.tag}.csv").read_text().splitlines()
            assert lines[0] == "t,mean_cum_reward,stderr_cum_reward,mean_cum_regret"
            assert len(lines) == horizon + 1
            first = lines[1].split(",")
            last = lines[-1].split(",")
            assert first[0] == "1" and last[0] == str(horizon)
            assert float(last[1]) == pytest.approx(
                outcome.mean_cum_rewards[-1]
            )

    def test_run_json_contents(self, tmp_path):
        config = tiny_config(realizations=2)
        results = run_experiment(config)
        emit_outputs(results, tmp_path)
        doc = json.loads((tmp_path / "run.json").read_text())
        assert doc["format"] == "switchrl.run"
        assert doc["change_points"] == list(results.switching.change_points)
        assert len(doc["segment_gains"]) == results.switching.n_segments
        assert doc["realizations"] == 2
        tags = [a["tag"] for a in doc["agents"]]
        assert tags == ["oracle", "ucrl2"]
        for agent_doc in doc["agents"]:
            assert len(agent_doc["seeds"]) == 2
            for run_doc in agent_doc["runs"]:
                assert "wall_time" not in run_doc
                assert set(run_doc) == {
                    "seed", "final_reward", "final_regret", "restarts",
                    "episodes",
                }

    def test_emission_is_byte_deterministic(self, tmp_path):
        config = tiny_config(realizations=2)
        first = run_experiment(config)
        second = run_experiment(config)
        emit_outputs(first, tmp_path / "a")
        emit_outputs(second, tmp_path / "b")
        names = sorted(p.name for p in (tmp_path / "a").iterdir())
        assert names == sorted(p.name for p in (tmp_path / "b").iterdir())
        for name in names:
            assert (tmp_path / "a" / name).read_bytes() == (
                tmp_path / "b" / name
            ).read_bytes()

    def test_reemit_rebuilds_identical_files(self, tmp_path):
        config = tiny_config(realizations=2)
        results = run_experiment(config)
        written = emit_outputs(results, tmp_path)
        before = {p.name: p.read_bytes() for p in written}
        (tmp_path / "agent_oracle.csv").unlink()
        (tmp_path / "chart.svg").unlink()
        reemit_outputs(tmp_path)
        after = {p.name: p.read_bytes() for p in written}
        assert before == after

    def test_reemit_rejects_non_run_dir(self, tmp_path):
        (tmp_path / "run.json").write_text("{}")
        with pytest.raises(ValueError, match="result document"):
            reemit_outputs(tmp_path)

    def test_svg_has_one_polyline_per_agent(self, tmp_path):
        config = tiny_config(realizations=1)
        results = run_experiment(config)
        emit_outputs(results, tmp_path)
        svg = (tmp_path / "chart.svg").read_text()
        assert svg.startswith("<svg ")
        assert svg.count("<polyline") == len(config.agents)
        assert svg.rstrip().endswith("</svg>")
        for spec in config.agents:
            assert f">{spec.tag}</text>" in svg
