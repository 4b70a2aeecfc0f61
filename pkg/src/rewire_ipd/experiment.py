"""Treatment-grid execution, metrics and persistence.

A run is fully determined by its RunConfig: every stochastic draw (network
init, epsilon-greedy exploration, replay sampling, uniform rewiring) comes
from one PCG64 generator seeded with the config's seed, in a fixed order.
Repeating a run with the same config therefore reproduces its output files
byte for byte. Runs are independent, so a grid can execute them in any
order or in parallel without changing any result.
"""

from __future__ import annotations

import base64
import csv
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Callable

import numpy as np

from . import __version__
from .agent import (
    Agent,
    AgentSpec,
    Hyperparameters,
    InteractionBias,
    RewiringBias,
    interaction_transitions,
    learn_step,
    rewiring_transitions,
)
from .environment import (
    EpisodeTrace,
    InteractionAction,
    RewiringAction,
    RewiringIpdEnv,
    RewiringSchedule,
    rewiring_opportunity,
)
from .neuralnet import params_from_bytes, params_to_bytes
from .replay import PerConfig, beta_schedule

METRICS_COLUMNS = [
    "run_id", "schedule", "bias", "seed", "bin", "episodes",
    "mutual_coop_rate", "connection_rate", "coop_rate_a0", "coop_rate_a1",
    "reward_a0", "reward_a1", "epsilon",
]

RESPONSE_COLUMNS = ["run_id", "agent", "other_prev_action",
                    "connect_fraction", "n_samples"]

CHECKPOINT_FORMAT = "rewire-ipd-checkpoint-v1"

# Indices into the response count array's middle axis.
_PREV_COOP, _PREV_DEFECT, _PREV_NONE = 0, 1, 2
_PREV_LABELS = {_PREV_COOP: "cooperate", _PREV_DEFECT: "defect"}


class Bias(str, Enum):
    """Which fixed policy, if any, agent 0 carries."""

    NONE = "none"
    ALLC = "allc"
    TFT = "tft"
    OSTRACISM = "ostracism"


@dataclass(frozen=True)
class RunConfig:
    schedule: RewiringSchedule = RewiringSchedule.FULL
    bias: Bias = Bias.NONE
    rewiring_learning: bool = True
    frozen_random_rewiring: bool = False
    episodes: int = 200_000
    episode_length: int = 10
    seed: int = 1
    hyperparams: Hyperparameters = field(default_factory=Hyperparameters)
    metrics_bin: int = 100
    response_window: float = 0.1

    def __post_init__(self) -> None:
        if self.episodes < 1:
            raise ValueError("episodes must be >= 1")
        if self.episode_length < 1:
            raise ValueError("episode_length must be >= 1")
        if self.metrics_bin < 1:
            raise ValueError("metrics_bin must be >= 1")
        if not 0 < self.response_window <= 1:
            raise ValueError("response_window must lie in (0, 1]")
        if self.frozen_random_rewiring and self.rewiring_learning:
            raise ValueError("frozen_random_rewiring requires rewiring_learning=False")

    @property
    def condition(self) -> str:
        label = f"{self.schedule.value}:{self.bias.value}"
        if not self.rewiring_learning:
            label += ":frozen" if self.frozen_random_rewiring else ":nolearn"
        return label

    @property
    def run_id(self) -> str:
        return f"{self.condition.replace(':', '-')}-s{self.seed}"

    def to_dict(self) -> dict:
        data = asdict(self)
        data["schedule"] = self.schedule.value
        data["bias"] = self.bias.value
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        data = dict(data)
        data["schedule"] = RewiringSchedule(data["schedule"])
        data["bias"] = Bias(data["bias"])
        if "hyperparams" in data:
            hp = dict(data["hyperparams"])
            if "per" in hp:
                hp["per"] = PerConfig(**hp["per"])
            data["hyperparams"] = Hyperparameters(**hp)
        return cls(**data)


def build_agents(config: RunConfig,
                 rng: np.random.Generator) -> tuple[Agent, Agent]:
    """Instantiate the pair for a treatment cell. Agent 0 carries the bias;
    agent 1 is always the unconstrained learner."""
    hp = config.hyperparams
    interaction0 = {
        Bias.ALLC: InteractionBias.ALLC,
        Bias.TFT: InteractionBias.TFT,
    }.get(config.bias, InteractionBias.LEARNED)
    rewiring0 = (RewiringBias.OSTRACISM if config.bias is Bias.OSTRACISM
                 else RewiringBias.LEARNED)
    rewiring1 = RewiringBias.LEARNED
    if not config.rewiring_learning:
        disabled = (RewiringBias.FROZEN_RANDOM_NET
                    if config.frozen_random_rewiring
                    else RewiringBias.UNIFORM_RANDOM)
        rewiring1 = disabled
        if rewiring0 is RewiringBias.LEARNED:
            rewiring0 = disabled
    spec0 = AgentSpec(interaction_bias=interaction0, rewiring_bias=rewiring0,
                      hyperparams=hp)
    spec1 = AgentSpec(interaction_bias=InteractionBias.LEARNED,
                      rewiring_bias=rewiring1, hyperparams=hp)
    return Agent(spec0, rng), Agent(spec1, rng)


def mutual_cooperation_rate(trace: EpisodeTrace) -> float:
    """Fraction of the episode's timesteps with a connection and both agents
    cooperating."""
    hits = 0
    for t in range(len(trace.payoffs)):
        if trace.connected[t]:
            a0, a1 = trace.interactions[t]
            if (a0 is InteractionAction.COOPERATE
                    and a1 is InteractionAction.COOPERATE):
                hits += 1
    return hits / trace.episode_length


def response_counts(trace: EpisodeTrace) -> np.ndarray:
    """Connect/total counts per (agent, other's previous action) over the
    episode's opportunity timesteps.

    Shape (2, 3, 2): agent x {cooperate, defect, none} x {connects, total}.
    The "none" row holds first-timestep decisions taken with a blank
    interaction history; it is tracked but excluded from the two reported
    conditioning cells.
    """
    counts = np.zeros((2, 3, 2), dtype=np.int64)
    for t in range(len(trace.payoffs)):
        intents = trace.rewire_intents[t]
        if intents is None:
            continue
        for agent in (0, 1):
            other = trace.observations[agent][t][2:4]
            if other[0] == 1.0:
                prev = _PREV_COOP
            elif other[1] == 1.0:
                prev = _PREV_DEFECT
            else:
                prev = _PREV_NONE
            counts[agent, prev, 1] += 1
            if intents[agent] is RewiringAction.CONNECT:
                counts[agent, prev, 0] += 1
    return counts


@dataclass(frozen=True)
class ResponseCell:
    connects: int
    samples: int

    @property
    def fraction(self) -> float | None:
        if self.samples == 0:
            return None
        return self.connects / self.samples


@dataclass(frozen=True)
class RewiringResponse:
    """Per-agent connect fractions conditioned on the other agent's previous
    interaction action, over opportunity timesteps only."""

    after_cooperate: tuple[ResponseCell, ResponseCell]
    after_defect: tuple[ResponseCell, ResponseCell]
    blank_history: tuple[ResponseCell, ResponseCell]

    @classmethod
    def from_counts(cls, counts: np.ndarray) -> "RewiringResponse":
        def cells(prev: int) -> tuple[ResponseCell, ResponseCell]:
            return tuple(ResponseCell(int(counts[a, prev, 0]),
                                      int(counts[a, prev, 1]))
                         for a in (0, 1))

        return cls(after_cooperate=cells(_PREV_COOP),
                   after_defect=cells(_PREV_DEFECT),
                   blank_history=cells(_PREV_NONE))

    def rows(self, run_id: str) -> list[dict]:
        """CSV rows; empty conditioning cells are omitted, not zeroed."""
        out = []
        for prev, pair in ((_PREV_COOP, self.after_cooperate),
                           (_PREV_DEFECT, self.after_defect)):
            for agent in (0, 1):
                cell = pair[agent]
                if cell.samples == 0:
                    continue
                out.append({
                    "run_id": run_id,
                    "agent": agent,
                    "other_prev_action": _PREV_LABELS[prev],
                    "connect_fraction": cell.fraction,
                    "n_samples": cell.samples,
                })
        return out


def rewiring_response(traces: list[EpisodeTrace],
                      window: float) -> RewiringResponse:
    """Aggregate rewiring responses over the final ``window`` fraction of the
    given episodes."""
    if not 0 < window <= 1:
        raise ValueError("window must lie in (0, 1]")
    keep = max(1, round(window * len(traces)))
    counts = np.zeros((2, 3, 2), dtype=np.int64)
    for trace in traces[len(traces) - keep:]:
        counts += response_counts(trace)
    return RewiringResponse.from_counts(counts)


def _atomic_write_text(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def save_checkpoint(path: Path, agents: tuple[Agent, Agent],
                    rng: np.random.Generator) -> None:
    """All four heads' parameter snapshots plus optimizer and RNG state, as
    deterministic JSON. Replay buffer contents are not persisted, so a
    resumed run replays exactly except for replay sampling history."""
    heads = {}
    for i, agent in enumerate(agents):
        for name, head in (("interaction", agent.interaction),
                           ("rewiring", agent.rewiring)):
            heads[f"agent{i}/{name}"] = {
                "online": base64.b64encode(params_to_bytes(head.nets.online)).decode(),
                "target": base64.b64encode(params_to_bytes(head.nets.target)).decode(),
                "adam_m": base64.b64encode(head.opt.m.astype("<f8").tobytes()).decode(),
                "adam_v": base64.b64encode(head.opt.v.astype("<f8").tobytes()).decode(),
                "adam_steps": head.opt.step_count,
                "learner_steps": head.steps_done,
                "learning_enabled": head.learning_enabled,
            }
    payload = {
        "format": CHECKPOINT_FORMAT,
        "rng_state": rng.bit_generator.state,
        "heads": heads,
    }
    _atomic_write_text(path, json.dumps(payload, indent=1))


def load_checkpoint(path: Path) -> dict:
    payload = json.loads(Path(path).read_text())
    if payload.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"not a {CHECKPOINT_FORMAT} file: {path}")
    return payload


def restore_run_state(agents: tuple[Agent, Agent], rng: np.random.Generator,
                      checkpoint: dict) -> None:
    """Load head parameters, optimizer state and RNG state in place."""
    for i, agent in enumerate(agents):
        for name, head in (("interaction", agent.interaction),
                           ("rewiring", agent.rewiring)):
            data = checkpoint["heads"][f"agent{i}/{name}"]
            head.nets.online.copy_from(
                params_from_bytes(base64.b64decode(data["online"])))
            head.nets.target.copy_from(
                params_from_bytes(base64.b64decode(data["target"])))
            head.opt.m[...] = np.frombuffer(
                base64.b64decode(data["adam_m"]), dtype="<f8")
            head.opt.v[...] = np.frombuffer(
                base64.b64decode(data["adam_v"]), dtype="<f8")
            head.opt.step_count = data["adam_steps"]
            head.steps_done = data["learner_steps"]
    rng.bit_generator.state = checkpoint["rng_state"]


_CONNECT_PAIR = (RewiringAction.CONNECT, RewiringAction.CONNECT)


def run_single(config: RunConfig, out_dir: str | Path,
               agents: tuple[Agent, Agent] | None = None,
               progress: Callable[[dict], None] | None = None) -> dict:
    """Train one treatment cell and write its result files.

    Writes metrics.csv (one row per bin, streamed), response.csv (end-phase
    rewiring responses), checkpoint.json and run.json into ``out_dir``; all
    writes go through a temp file and rename. A failure mid-run leaves a
    PARTIAL marker next to whatever was flushed. ``agents`` overrides the
    config-built pair (tests and extensions); ``progress`` is called with
    each bin row as it is written.

    Draw order per run: agent 0 then agent 1 network init (interaction head
    then rewiring head); per timestep, rewiring actions (agent 0, agent 1,
    opportunity steps only), interaction actions (agent 0, agent 1), then
    one replay sample per learning head in agent/head order.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(config.seed)
    if agents is None:
        agents = build_agents(config, rng)
    hp = config.hyperparams
    env = RewiringIpdEnv(config.schedule, config.episode_length)
    steps_per_episode = config.episode_length
    total_steps = config.episodes * steps_per_episode
    gamma = hp.gamma
    learn_heads = [head for agent in agents for head in agent.learning_heads()]
    window_len = max(1, round(config.response_window * config.episodes))
    response_start = config.episodes - window_len
    response_acc = np.zeros((2, 3, 2), dtype=np.int64)

    bin_size = config.metrics_bin
    bin_index = 0
    bin_episodes = 0
    bin_sums = np.zeros(6)  # mc, conn, coop0, coop1, reward0, reward1
    rows_written = 0
    final_row: dict | None = None

    metrics_path = out_dir / "metrics.csv"
    tmp_path = out_dir / "metrics.csv.tmp"
    global_step = 0
    try:
        with open(tmp_path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=METRICS_COLUMNS)
            writer.writeheader()

            def flush_bin() -> None:
                nonlocal bin_index, bin_episodes, final_row, rows_written
                means = bin_sums / bin_episodes
                row = {
                    "run_id": config.run_id,
                    "schedule": config.schedule.value,
                    "bias": config.bias.value,
                    "seed": config.seed,
                    "bin": bin_index,
                    "episodes": bin_episodes,
                    "mutual_coop_rate": float(means[0]),
                    "connection_rate": float(means[1]),
                    "coop_rate_a0": float(means[2]),
                    "coop_rate_a1": float(means[3]),
                    "reward_a0": float(means[4]),
                    "reward_a1": float(means[5]),
                    "epsilon": hp.epsilon_at(global_step - 1, total_steps),
                }
                writer.writerow(row)
                rows_written += 1
                final_row = row
                if progress is not None:
                    progress(row)
                bin_index += 1
                bin_episodes = 0
                bin_sums[...] = 0.0

            for episode in range(config.episodes):
                state, (obs0, obs1) = env.reset()
                trace = EpisodeTrace(config.episode_length)
                obs_lists = trace.observations
                obs_lists[0].append(obs0)
                obs_lists[1].append(obs1)
                for timestep in range(1, steps_per_episode + 1):
                    epsilon = hp.epsilon_at(global_step, total_steps)
                    opportunity = rewiring_opportunity(
                        config.schedule, timestep, steps_per_episode)
                    if opportunity:
                        intents = (
                            agents[0].rewiring_action(obs0, epsilon, rng),
                            agents[1].rewiring_action(obs1, epsilon, rng),
                        )
                        rewire = intents
                    else:
                        intents = None
                        rewire = _CONNECT_PAIR
                    interactions = (
                        agents[0].interaction_action(obs0, epsilon, rng),
                        agents[1].interaction_action(obs1, epsilon, rng),
                    )
                    state, outcome = env.step(state, rewire, interactions)
                    trace.opportunities.append(opportunity)
                    trace.connected.append(outcome.connected_after)
                    trace.interactions.append(interactions)
                    trace.rewire_intents.append(intents)
                    trace.payoffs.append(outcome.payoffs)
                    obs0, obs1 = outcome.observations_next
                    obs_lists[0].append(obs0)
                    obs_lists[1].append(obs1)
                    global_step += 1
                    if global_step % hp.learn_every == 0:
                        beta = beta_schedule(hp.per, global_step, total_steps)
                        for head in learn_heads:
                            learn_step(head, rng, beta)

                for i, agent in enumerate(agents):
                    if agent.interaction.learning_enabled:
                        agent.interaction.buffer.extend(
                            interaction_transitions(trace, i, gamma))
                    if agent.rewiring.learning_enabled:
                        agent.rewiring.buffer.extend(
                            rewiring_transitions(trace, i, gamma))

                mc = mutual_cooperation_rate(trace)
                connected = trace.connected
                conn = sum(connected) / steps_per_episode
                coop0 = coop1 = 0
                reward0 = reward1 = 0.0
                for t in range(steps_per_episode):
                    a0, a1 = trace.interactions[t]
                    coop0 += a0 is InteractionAction.COOPERATE
                    coop1 += a1 is InteractionAction.COOPERATE
                    p0, p1 = trace.payoffs[t]
                    reward0 += p0
                    reward1 += p1
                bin_sums += (mc, conn, coop0 / steps_per_episode,
                             coop1 / steps_per_episode, reward0, reward1)
                bin_episodes += 1
                if bin_episodes == bin_size or episode == config.episodes - 1:
                    flush_bin()
                if episode >= response_start:
                    response_acc += response_counts(trace)
        os.replace(tmp_path, metrics_path)

        response = RewiringResponse.from_counts(response_acc)
        response_rows = response.rows(config.run_id)
        lines = [",".join(RESPONSE_COLUMNS)]
        for row in response_rows:
            lines.append(",".join(str(row[col]) for col in RESPONSE_COLUMNS))
        _atomic_write_text(out_dir / "response.csv", "\n".join(lines) + "\n")

        save_checkpoint(out_dir / "checkpoint.json", agents, rng)

        summary = {
            "run_id": config.run_id,
            "condition": config.condition,
            "config": config.to_dict(),
            "code_version": __version__,
            "bins_written": rows_written,
            "final_bin": final_row,
            "response": response_rows,
        }
        _atomic_write_text(out_dir / "run.json",
                           json.dumps(summary, indent=1))
        return summary
    except Exception:
        try:
            (out_dir / "PARTIAL").write_text("run aborted before completion\n")
        except OSError:
            pass
        raise


def _grid_worker(config_dict: dict, run_dir: str) -> dict:
    config = RunConfig.from_dict(config_dict)
    start = time.monotonic()
    try:
        run_single(config, run_dir)
        status, error = "completed", None
    except Exception as exc:  # single-run failures must not kill the grid
        status, error = "failed", f"{type(exc).__name__}: {exc}"
    entry = {
        "run_id": config.run_id,
        "status": status,
        "dir": os.path.basename(run_dir),
        "seed": config.seed,
        "condition": config.condition,
        "config": config.to_dict(),
        "wall_time_s": round(time.monotonic() - start, 3),
    }
    if error is not None:
        entry["error"] = error
    return entry


def run_grid(configs: list[RunConfig], out_dir: str | Path,
             parallelism: int = 1,
             progress: Callable[[dict], None] | None = None) -> dict:
    """Execute every config in isolation and write one subdirectory per run
    plus a manifest.json. Failures are recorded and the grid continues."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ids = [c.run_id for c in configs]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate run_ids in grid")
    jobs = [(c.to_dict(), str(out_dir / c.run_id)) for c in configs]
    entries = []
    if parallelism <= 1 or len(jobs) <= 1:
        for config_dict, run_dir in jobs:
            entry = _grid_worker(config_dict, run_dir)
            entries.append(entry)
            if progress is not None:
                progress(entry)
    else:
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            futures = [pool.submit(_grid_worker, c, d) for c, d in jobs]
            for future in futures:
                entry = future.result()
                entries.append(entry)
                if progress is not None:
                    progress(entry)
    manifest = {"code_version": __version__, "runs": entries}
    _atomic_write_text(out_dir / "manifest.json", json.dumps(manifest, indent=1))
    return manifest


def default_grid(seeds: int, episodes: int = 20_000,
                 hyperparams: Hyperparameters | None = None,
                 **overrides) -> list[RunConfig]:
    """The 3 schedules x 3 fixed-policy conditions plus ostracism-bias at
    every schedule (12 conditions), with seeds 1..N each."""
    hp = hyperparams or Hyperparameters()
    biases = [Bias.NONE, Bias.ALLC, Bias.TFT, Bias.OSTRACISM]
    configs = []
    for bias in biases:
        for schedule in (RewiringSchedule.NONE, RewiringSchedule.HALF,
                         RewiringSchedule.FULL):
            for seed in range(1, seeds + 1):
                configs.append(RunConfig(schedule=schedule, bias=bias,
                                         episodes=episodes, seed=seed,
                                         hyperparams=hp, **overrides))
    return configs


def parse_condition(token: str) -> dict:
    """Parse a grid condition token like ``full:tft`` or ``full:tft:nolearn``
    or ``full:tft:frozen`` into RunConfig keyword arguments."""
    parts = token.split(":")
    if len(parts) not in (2, 3):
        raise ValueError(f"bad condition token: {token!r}")
    kwargs = {"schedule": RewiringSchedule(parts[0]), "bias": Bias(parts[1])}
    if len(parts) == 3:
        if parts[2] == "nolearn":
            kwargs["rewiring_learning"] = False
        elif parts[2] == "frozen":
            kwargs["rewiring_learning"] = False
            kwargs["frozen_random_rewiring"] = True
        else:
            raise ValueError(f"bad condition suffix: {parts[2]!r}")
    return kwargs


def _standard_error(values: "pd.Series") -> float:
    if len(values) <= 1:
        return 0.0
    return float(values.std(ddof=1) / np.sqrt(len(values)))


def analyze(results_dir: str | Path, out_dir: str | Path | None = None):
    """Aggregate a grid's per-run files into per-condition mean/SE tables.

    Returns (curves, response, errors) where curves and response are pandas
    DataFrames (also written as aggregate_curves.csv / aggregate_response.csv
    into ``out_dir``, default the results directory) and errors lists runs
    that were missing or unreadable and therefore excluded.
    """
    import pandas as pd

    results_dir = Path(results_dir)
    out_dir = Path(out_dir) if out_dir is not None else results_dir
    manifest_path = results_dir / "manifest.json"
    if not manifest_path.exists():
        raise FileNotFoundError(f"no manifest.json under {results_dir}")
    manifest = json.loads(manifest_path.read_text())

    metrics_frames = []
    response_frames = []
    errors: list[str] = []
    for entry in manifest["runs"]:
        run_id = entry["run_id"]
        if entry["status"] != "completed":
            errors.append(f"{run_id}: status {entry['status']}")
            continue
        run_dir = results_dir / entry["dir"]
        condition_cols = {
            "condition": entry["condition"],
            "rewiring_learning": entry["config"]["rewiring_learning"],
        }
        try:
            metrics = pd.read_csv(run_dir / "metrics.csv")
            response = pd.read_csv(run_dir / "response.csv")
        except (OSError, pd.errors.ParserError) as exc:
            errors.append(f"{run_id}: {exc}")
            continue
        if metrics.empty:
            errors.append(f"{run_id}: empty metrics file")
            continue
        metrics = metrics.assign(**condition_cols)
        metrics_frames.append(metrics)
        if not response.empty:
            response = response.assign(
                **condition_cols,
                schedule=entry["config"]["schedule"],
                bias=entry["config"]["bias"],
            )
            response_frames.append(response)

    if metrics_frames:
        all_metrics = pd.concat(metrics_frames, ignore_index=True)
        grouped = all_metrics.groupby(
            ["condition", "schedule", "bias", "rewiring_learning", "bin"],
            as_index=False)
        curves = grouped.agg(
            episodes=("episodes", "first"),
            n_seeds=("seed", "nunique"),
            mutual_coop_mean=("mutual_coop_rate", "mean"),
            mutual_coop_se=("mutual_coop_rate", _standard_error),
            connection_mean=("connection_rate", "mean"),
            connection_se=("connection_rate", _standard_error),
        ).sort_values(["condition", "bin"], ignore_index=True)
    else:
        curves = pd.DataFrame(columns=[
            "condition", "schedule", "bias", "rewiring_learning", "bin",
            "episodes", "n_seeds", "mutual_coop_mean", "mutual_coop_se",
            "connection_mean", "connection_se"])

    if response_frames:
        all_response = pd.concat(response_frames, ignore_index=True)
        grouped = all_response.groupby(
            ["condition", "schedule", "bias", "rewiring_learning", "agent",
             "other_prev_action"],
            as_index=False)
        response = grouped.agg(
            connect_fraction_mean=("connect_fraction", "mean"),
            connect_fraction_se=("connect_fraction", _standard_error),
            n_seeds=("run_id", "nunique"),
            total_samples=("n_samples", "sum"),
        ).sort_values(["condition", "agent", "other_prev_action"],
                      ignore_index=True)
    else:
        response = pd.DataFrame(columns=[
            "condition", "schedule", "bias", "rewiring_learning", "agent",
            "other_prev_action", "connect_fraction_mean",
            "connect_fraction_se", "n_seeds", "total_samples"])

    out_dir.mkdir(parents=True, exist_ok=True)
    curves.to_csv(out_dir / "aggregate_curves.csv", index=False)
    response.to_csv(out_dir / "aggregate_response.csv", index=False)
    for line in errors:
        print(f"analyze: excluded {line}", file=sys.stderr)
    return curves, response, errors
