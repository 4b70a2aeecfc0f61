import json

import numpy as np
import pandas as pd
import pytest

from rewire_ipd.agent import (
    Agent,
    AgentSpec,
    Hyperparameters,
    InteractionBias,
    RewiringBias,
)
from rewire_ipd.environment import (
    EpisodeTrace,
    InteractionAction,
    RewiringAction,
    RewiringSchedule,
    encode_observation,
)
from rewire_ipd.experiment import (
    Bias,
    RunConfig,
    analyze,
    build_agents,
    default_grid,
    load_checkpoint,
    mutual_cooperation_rate,
    parse_condition,
    restore_run_state,
    rewiring_response,
    run_grid,
    run_single,
    save_checkpoint,
)
from rewire_ipd.neuralnet import forward
from rewire_ipd.replay import PerConfig

C, D = InteractionAction.COOPERATE, InteractionAction.DEFECT
CON, DIS = RewiringAction.CONNECT, RewiringAction.DISCONNECT


def quick_hp(**overrides):
    defaults = dict(per=PerConfig(capacity=2048, min_size_to_sample=64),
                    batch_size=16, target_sync_period=50)
    defaults.update(overrides)
    return Hyperparameters(**defaults)


def quick_config(**overrides):
    defaults = dict(schedule=RewiringSchedule.FULL, bias=Bias.NONE,
                    episodes=30, seed=1, metrics_bin=10,
                    hyperparams=quick_hp())
    defaults.update(overrides)
    return RunConfig(**defaults)


def trace_from_rows(rows, episode_length=10):
    """rows: (connected, a0, a1, opportunity, rewire0, rewire1)."""
    trace = EpisodeTrace(episode_length)
    obs_blank = encode_observation(None, None, True, False)
    trace.observations[0].append(obs_blank)
    trace.observations[1].append(obs_blank.copy())
    prev = None
    for connected, a0, a1, opp, r0, r1 in rows:
        trace.opportunities.append(opp)
        trace.connected.append(connected)
        trace.interactions.append((a0, a1))
        trace.rewire_intents.append((r0, r1) if opp else None)
        trace.payoffs.append((1.0, 1.0) if connected and a0 is C and a1 is C
                             else (0.0, 0.0))
        trace.observations[0].append(encode_observation(a0, a1, connected, opp))
        trace.observations[1].append(encode_observation(a1, a0, connected, opp))
        prev = (a0, a1)
    return trace


class TestMutualCooperationRate:
    def test_worked_half_example(self):
        rows = ([(True, C, C, False, None, None)] * 5
                + [(True, C, D, False, None, None)] * 5)
        assert mutual_cooperation_rate(trace_from_rows(rows)) == 0.5

    def test_disconnected_episode_scores_zero(self):
        rows = [(False, C, C, True, DIS, DIS)] * 10
        assert mutual_cooperation_rate(trace_from_rows(rows)) == 0.0

    def test_full_cooperation_scores_one(self):
        rows = [(True, C, C, False, None, None)] * 10
        assert mutual_cooperation_rate(trace_from_rows(rows)) == 1.0

    def test_never_exceeds_connection_rate(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            rows = [(bool(rng.integers(2)),
                     InteractionAction(int(rng.integers(2))),
                     InteractionAction(int(rng.integers(2))),
                     False, None, None) for _ in range(10)]
            trace = trace_from_rows(rows)
            connection = sum(trace.connected) / 10
            assert mutual_cooperation_rate(trace) <= connection


class TestRewiringResponse:
    def test_constant_connector_scores_one_in_both_cells(self):
        rows = [(True, C, C, True, CON, CON) for _ in range(5)]
        rows += [(True, D, D, True, CON, CON) for _ in range(5)]
        response = rewiring_response([trace_from_rows(rows)], window=1.0)
        assert response.after_cooperate[0].fraction == 1.0
        assert response.after_defect[0].fraction == 1.0

    def test_hardcoded_ostracism_pattern(self):
        # agent 0 connects after seeing cooperation, disconnects after defection
        rows = []
        # step 1: blank history (uncounted cell)
        rows.append((True, C, C, True, CON, CON))
        # other cooperated previously -> connect
        rows.append((True, C, D, True, CON, CON))
        # other defected previously -> disconnect
        rows.append((False, C, C, True, DIS, CON))
        # other cooperated previously -> connect
        rows.append((True, C, C, True, CON, CON))
        response = rewiring_response([trace_from_rows(rows, episode_length=4)],
                                     window=1.0)
        assert response.after_cooperate[0].fraction == 1.0
        assert response.after_defect[0].fraction == 0.0

    def test_synthetic_three_of_four(self):
        rows = [(True, C, C, True, CON, CON)]      # blank history, uncounted
        rows += [(True, C, C, True, CON, CON)] * 3  # after coop: connect x3
        rows += [(True, C, C, True, DIS, CON)]      # after coop: disconnect
        response = rewiring_response([trace_from_rows(rows, episode_length=5)],
                                     window=1.0)
        cell = response.after_cooperate[0]
        assert cell.samples == 4
        assert cell.fraction == 0.75

    def test_blank_history_kept_out_of_conditioned_cells(self):
        rows = [(True, C, C, True, CON, CON)]
        response = rewiring_response([trace_from_rows(rows, episode_length=1)],
                                     window=1.0)
        assert response.after_cooperate[0].samples == 0
        assert response.after_defect[0].samples == 0
        assert response.blank_history[0].samples == 1

    def test_empty_cell_reports_absent_not_zero(self):
        rows = [(True, C, C, True, CON, CON)] * 3
        response = rewiring_response([trace_from_rows(rows, episode_length=3)],
                                     window=1.0)
        assert response.after_defect[0].fraction is None
        assert all(r["other_prev_action"] != "defect"
                   for r in response.rows("x"))

    def test_window_selects_final_fraction(self):
        early = [trace_from_rows([(True, C, C, True, DIS, DIS)] * 4,
                                 episode_length=4)] * 9
        late = [trace_from_rows([(True, C, C, True, CON, CON)] * 4,
                                episode_length=4)]
        response = rewiring_response(early + late, window=0.1)
        assert response.after_cooperate[0].fraction == 1.0

    def test_non_opportunity_steps_excluded(self):
        rows = [(True, C, C, False, None, None)] * 10
        response = rewiring_response([trace_from_rows(rows)], window=1.0)
        assert response.after_cooperate[0].samples == 0
        assert response.blank_history[0].samples == 0


class TestRunSingle:
    def test_forced_cooperation_yields_full_mutual_cooperation(self, tmp_path):
        hp = quick_hp()
        config = quick_config(schedule=RewiringSchedule.NONE, episodes=1,
                              metrics_bin=1, hyperparams=hp)
        rng = np.random.default_rng(config.seed)
        spec = AgentSpec(interaction_bias=InteractionBias.ALLC,
                         rewiring_bias=RewiringBias.LEARNED, hyperparams=hp)
        agents = (Agent(spec, rng), Agent(spec, rng))
        summary = run_single(config, tmp_path / "forced", agents=agents)
        assert summary["final_bin"]["mutual_coop_rate"] == 1.0
        assert summary["final_bin"]["connection_rate"] == 1.0

    def test_repeat_runs_are_byte_identical(self, tmp_path):
        config = quick_config(episodes=120, bias=Bias.TFT, seed=7)
        run_single(config, tmp_path / "a")
        run_single(config, tmp_path / "b")
        for name in ("metrics.csv", "response.csv", "checkpoint.json",
                     "run.json"):
            a = (tmp_path / "a" / name).read_bytes()
            b = (tmp_path / "b" / name).read_bytes()
            assert a == b, f"{name} differs between identical runs"

    def test_metrics_schema_and_binning(self, tmp_path):
        config = quick_config(episodes=25, metrics_bin=10)
        run_single(config, tmp_path / "r")
        frame = pd.read_csv(tmp_path / "r" / "metrics.csv")
        assert list(frame.columns) == [
            "run_id", "schedule", "bias", "seed", "bin", "episodes",
            "mutual_coop_rate", "connection_rate", "coop_rate_a0",
            "coop_rate_a1", "reward_a0", "reward_a1", "epsilon"]
        assert frame["episodes"].tolist() == [10, 10, 5]
        assert frame["bin"].tolist() == [0, 1, 2]
        for col in ("mutual_coop_rate", "connection_rate", "coop_rate_a0",
                    "coop_rate_a1"):
            assert frame[col].between(0, 1).all()

    def test_no_rewiring_condition_keeps_connection_rate_one(self, tmp_path):
        config = quick_config(schedule=RewiringSchedule.NONE, episodes=40)
        run_single(config, tmp_path / "r")
        frame = pd.read_csv(tmp_path / "r" / "metrics.csv")
        assert (frame["connection_rate"] == 1.0).all()

    def test_allc_bias_agent_always_cooperates(self, tmp_path):
        config = quick_config(bias=Bias.ALLC, episodes=40)
        summary = run_single(config, tmp_path / "r")
        frame = pd.read_csv(tmp_path / "r" / "metrics.csv")
        assert (frame["coop_rate_a0"] == 1.0).all()

    def test_mutual_coop_bounded_by_connection_in_practice(self, tmp_path):
        config = quick_config(episodes=60, seed=3)
        run_single(config, tmp_path / "r")
        frame = pd.read_csv(tmp_path / "r" / "metrics.csv")
        assert (frame["mutual_coop_rate"] <= frame["connection_rate"] + 1e-12).all()

    def test_fixed_interaction_agent_still_trains_rewiring_head(self, tmp_path):
        config = quick_config(bias=Bias.TFT, episodes=60, seed=2)
        rng = np.random.default_rng(config.seed)
        agents = build_agents(config, rng)
        interaction_before = agents[0].interaction.nets.online.flat.copy()
        rewiring_before = agents[0].rewiring.nets.online.flat.copy()
        run_single(config, tmp_path / "r", agents=agents)
        np.testing.assert_array_equal(agents[0].interaction.nets.online.flat,
                                      interaction_before)
        assert not np.array_equal(agents[0].rewiring.nets.online.flat,
                                  rewiring_before)
        assert agents[0].rewiring.buffer.insert_count > 0

    def test_frozen_rewiring_disables_all_rewiring_learning(self, tmp_path):
        config = quick_config(bias=Bias.TFT, episodes=40,
                              rewiring_learning=False)
        rng = np.random.default_rng(config.seed)
        agents = build_agents(config, rng)
        before = [a.rewiring.nets.online.flat.copy() for a in agents]
        run_single(config, tmp_path / "r", agents=agents)
        for agent, snapshot in zip(agents, before):
            np.testing.assert_array_equal(agent.rewiring.nets.online.flat,
                                          snapshot)
            assert agent.rewiring.buffer.insert_count == 0

    def test_progress_callback_sees_every_bin(self, tmp_path):
        rows = []
        config = quick_config(episodes=30, metrics_bin=10)
        run_single(config, tmp_path / "r", progress=rows.append)
        assert [r["bin"] for r in rows] == [0, 1, 2]


class TestCheckpoint:
    def test_round_trip_restores_networks_and_rng(self, tmp_path):
        config = quick_config(episodes=30, seed=5)
        run_single(config, tmp_path / "r")
        path = tmp_path / "r" / "checkpoint.json"
        checkpoint = load_checkpoint(path)

        # restore into a deliberately different agent pair and generator
        rng2 = np.random.default_rng(99)
        agents2 = build_agents(config, rng2)
        restore_run_state(agents2, rng2, checkpoint)
        assert rng2.bit_generator.state == checkpoint["rng_state"]

        # saving the restored state reproduces the checkpoint byte for byte
        save_checkpoint(tmp_path / "again.json", agents2, rng2)
        assert (tmp_path / "again.json").read_bytes() == path.read_bytes()

        # restored networks answer queries identically across two restores
        rng3 = np.random.default_rng(123)
        agents3 = build_agents(config, rng3)
        restore_run_state(agents3, rng3, checkpoint)
        obs = encode_observation(C, D, True, True)
        for a, b in zip(agents2, agents3):
            assert (forward(a.interaction.nets.online, obs).tobytes()
                    == forward(b.interaction.nets.online, obs).tobytes())
            assert (forward(a.rewiring.nets.target, obs).tobytes()
                    == forward(b.rewiring.nets.target, obs).tobytes())

    def test_rejects_foreign_files(self, tmp_path):
        path = tmp_path / "bogus.json"
        path.write_text(json.dumps({"format": "other"}))
        with pytest.raises(ValueError):
            load_checkpoint(path)


class TestRunGrid:
    def test_grid_writes_all_runs_and_manifest(self, tmp_path):
        configs = [quick_config(episodes=12, seed=s, bias=b)
                   for s in (1, 2) for b in (Bias.NONE, Bias.TFT)]
        manifest = run_grid(configs, tmp_path)
        assert len(manifest["runs"]) == 4
        assert all(r["status"] == "completed" for r in manifest["runs"])
        for entry in manifest["runs"]:
            run_dir = tmp_path / entry["dir"]
            assert (run_dir / "metrics.csv").exists()
            assert (run_dir / "response.csv").exists()
        assert (tmp_path / "manifest.json").exists()

    def test_parallel_and_serial_runs_match_exactly(self, tmp_path):
        configs = [quick_config(episodes=25, seed=s) for s in (1, 2)]
        run_grid(configs, tmp_path / "serial", parallelism=1)
        run_grid(configs, tmp_path / "parallel", parallelism=2)
        for config in configs:
            for name in ("metrics.csv", "response.csv", "checkpoint.json"):
                a = (tmp_path / "serial" / config.run_id / name).read_bytes()
                b = (tmp_path / "parallel" / config.run_id / name).read_bytes()
                assert a == b

    def test_empty_grid_still_writes_manifest(self, tmp_path):
        manifest = run_grid([], tmp_path)
        assert manifest["runs"] == []
        assert json.loads((tmp_path / "manifest.json").read_text())["runs"] == []

    def test_failed_run_recorded_and_grid_continues(self, tmp_path, monkeypatch):
        import rewire_ipd.experiment as experiment

        real = experiment.run_single

        def flaky(config, out_dir, **kwargs):
            if config.seed == 2:
                raise OSError("disk full")
            return real(config, out_dir, **kwargs)

        monkeypatch.setattr(experiment, "run_single", flaky)
        configs = [quick_config(episodes=12, seed=s) for s in (1, 2, 3)]
        manifest = run_grid(configs, tmp_path)
        statuses = {r["seed"]: r["status"] for r in manifest["runs"]}
        assert statuses == {1: "completed", 2: "failed", 3: "completed"}
        failed = [r for r in manifest["runs"] if r["status"] == "failed"][0]
        assert "disk full" in failed["error"]

    def test_duplicate_run_ids_rejected(self, tmp_path):
        configs = [quick_config(seed=1), quick_config(seed=1)]
        with pytest.raises(ValueError):
            run_grid(configs, tmp_path)


class TestAnalyze:
    def test_single_seed_has_zero_standard_error(self, tmp_path):
        run_grid([quick_config(episodes=20, seed=1)], tmp_path)
        curves, response, errors = analyze(tmp_path)
        assert errors == []
        assert (curves["mutual_coop_se"] == 0.0).all()
        assert (curves["n_seeds"] == 1).all()

    def test_two_seed_mean_and_standard_error(self, tmp_path):
        # synthetic fixture: two seeds with final-bin rates 0.4 and 0.6
        (tmp_path / "runA").mkdir(parents=True)
        (tmp_path / "runB").mkdir()
        header = ("run_id,schedule,bias,seed,bin,episodes,mutual_coop_rate,"
                  "connection_rate,coop_rate_a0,coop_rate_a1,reward_a0,"
                  "reward_a1,epsilon\n")
        (tmp_path / "runA" / "metrics.csv").write_text(
            header + "runA,full,none,1,0,10,0.4,0.8,0.5,0.5,1.0,1.0,0.05\n")
        (tmp_path / "runB" / "metrics.csv").write_text(
            header + "runB,full,none,2,0,10,0.6,1.0,0.5,0.5,1.0,1.0,0.05\n")
        response_header = "run_id,agent,other_prev_action,connect_fraction,n_samples\n"
        (tmp_path / "runA" / "response.csv").write_text(
            response_header + "runA,0,cooperate,0.25,4\n")
        (tmp_path / "runB" / "response.csv").write_text(
            response_header + "runB,0,cooperate,0.75,4\n")
        manifest = {"code_version": "test", "runs": [
            {"run_id": "runA", "status": "completed", "dir": "runA", "seed": 1,
             "condition": "full:none",
             "config": {"schedule": "full", "bias": "none",
                        "rewiring_learning": True}},
            {"run_id": "runB", "status": "completed", "dir": "runB", "seed": 2,
             "condition": "full:none",
             "config": {"schedule": "full", "bias": "none",
                        "rewiring_learning": True}},
        ]}
        (tmp_path / "manifest.json").write_text(json.dumps(manifest))

        curves, response, errors = analyze(tmp_path)
        assert errors == []
        row = curves.iloc[0]
        assert row["mutual_coop_mean"] == pytest.approx(0.5)
        assert row["mutual_coop_se"] == pytest.approx(0.1)
        assert row["n_seeds"] == 2
        resp = response.iloc[0]
        assert resp["connect_fraction_mean"] == pytest.approx(0.5)
        assert resp["total_samples"] == 8
        assert (tmp_path / "aggregate_curves.csv").exists()
        assert (tmp_path / "aggregate_response.csv").exists()

    def test_missing_run_files_listed_and_excluded(self, tmp_path):
        run_grid([quick_config(episodes=15, seed=1),
                  quick_config(episodes=15, seed=2)], tmp_path)
        (tmp_path / quick_config(seed=2).run_id / "metrics.csv").unlink()
        curves, _, errors = analyze(tmp_path)
        assert len(errors) == 1
        assert (curves["n_seeds"] == 1).all()

    def test_requires_manifest(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            analyze(tmp_path)


class TestConfig:
    def test_json_round_trip(self):
        config = quick_config(bias=Bias.OSTRACISM,
                              schedule=RewiringSchedule.HALF, seed=42)
        data = json.loads(json.dumps(config.to_dict()))
        assert RunConfig.from_dict(data) == config

    def test_run_id_encodes_condition_and_seed(self):
        config = quick_config(bias=Bias.TFT, seed=9)
        assert config.run_id == "full-tft-s9"
        frozen = quick_config(rewiring_learning=False,
                              frozen_random_rewiring=True, seed=2)
        assert frozen.run_id == "full-none-frozen-s2"
        nolearn = quick_config(rewiring_learning=False, seed=2)
        assert nolearn.run_id == "full-none-nolearn-s2"

    def test_validation(self):
        with pytest.raises(ValueError):
            quick_config(episodes=0)
        with pytest.raises(ValueError):
            quick_config(frozen_random_rewiring=True)  # learning still on
        with pytest.raises(ValueError):
            quick_config(response_window=0.0)

    def test_default_grid_is_twelve_conditions(self):
        configs = default_grid(seeds=2, episodes=10)
        assert len(configs) == 24
        conditions = {c.condition for c in configs}
        assert len(conditions) == 12
        assert "full:ostracism" in conditions

    def test_parse_condition_tokens(self):
        assert parse_condition("full:tft") == {
            "schedule": RewiringSchedule.FULL, "bias": Bias.TFT}
        kwargs = parse_condition("half:allc:frozen")
        assert kwargs["frozen_random_rewiring"] is True
        assert kwargs["rewiring_learning"] is False
        with pytest.raises(ValueError):
            parse_condition("weekly:tft")
        with pytest.raises(ValueError):
            parse_condition("full:tft:sometimes")


class TestBuildAgents:
    def test_bias_lands_on_agent_zero(self):
        rng = np.random.default_rng(0)
        a0, a1 = build_agents(quick_config(bias=Bias.ALLC), rng)
        assert a0.spec.interaction_bias is InteractionBias.ALLC
        assert a1.spec.interaction_bias is InteractionBias.LEARNED
        assert a0.spec.rewiring_bias is RewiringBias.LEARNED

    def test_ostracism_bias_fixes_rewiring_only(self):
        rng = np.random.default_rng(0)
        a0, a1 = build_agents(quick_config(bias=Bias.OSTRACISM), rng)
        assert a0.spec.rewiring_bias is RewiringBias.OSTRACISM
        assert a0.spec.interaction_bias is InteractionBias.LEARNED
        assert a1.spec.rewiring_bias is RewiringBias.LEARNED

    def test_disabled_rewiring_learning_applies_to_both(self):
        rng = np.random.default_rng(0)
        config = quick_config(bias=Bias.TFT, rewiring_learning=False)
        a0, a1 = build_agents(config, rng)
        assert a0.spec.rewiring_bias is RewiringBias.UNIFORM_RANDOM
        assert a1.spec.rewiring_bias is RewiringBias.UNIFORM_RANDOM
        config = quick_config(bias=Bias.TFT, rewiring_learning=False,
                              frozen_random_rewiring=True)
        a0, a1 = build_agents(config, rng)
        assert a0.spec.rewiring_bias is RewiringBias.FROZEN_RANDOM_NET
        assert not a0.rewiring.learning_enabled
