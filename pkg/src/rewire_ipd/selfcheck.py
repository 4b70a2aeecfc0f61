"""Built-in property suites behind the ``selfcheck`` CLI subcommand.

Each suite re-verifies one load-bearing piece of the simulator against an
independent oracle: exhaustive environment tables, finite-difference
gradients, sum-tree integrity under fuzzing, the proportional sampling
distribution, and the decoupled Double-DQN target. The same suites back the
acceptance tests.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .agent import double_dqn_target
from .environment import (
    InteractionAction,
    PayoffMatrix,
    RewiringAction,
    RewiringSchedule,
    connection_update,
    encode_observation,
    payoff,
    rewiring_opportunity,
)
from .neuralnet import MlpParams, QNetworkPair, backward, forward
from .replay import PerConfig, PrioritizedReplayBuffer, SumTree, Transition


@dataclass
class SuiteResult:
    name: str
    checks: int = 0
    failures: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def check(self, ok: bool, message: str) -> None:
        self.checks += 1
        if not ok:
            self.failures.append(message)


def environment_tables() -> SuiteResult:
    """Exhaustive truth tables for the connection state machine, the payoff
    matrix and the opportunity schedules."""
    result = SuiteResult("environment-tables")
    actions = (RewiringAction.CONNECT, RewiringAction.DISCONNECT)
    for prev in (False, True):
        for opp in (False, True):
            for a1 in actions:
                for a2 in actions:
                    got = connection_update(prev, opp, a1, a2)
                    want = ((a1 is RewiringAction.CONNECT
                             and a2 is RewiringAction.CONNECT)
                            if opp else prev)
                    result.check(got == want,
                                 f"connection_update({prev},{opp},{a1},{a2})={got}")
    m = PayoffMatrix()
    table = {
        (InteractionAction.COOPERATE, InteractionAction.COOPERATE): (1.0, 1.0),
        (InteractionAction.COOPERATE, InteractionAction.DEFECT): (-1.0, 2.0),
        (InteractionAction.DEFECT, InteractionAction.COOPERATE): (2.0, -1.0),
        (InteractionAction.DEFECT, InteractionAction.DEFECT): (0.0, 0.0),
    }
    for (a1, a2), want in table.items():
        result.check(payoff(a1, a2, True, m) == want,
                     f"payoff({a1},{a2},connected)")
        result.check(payoff(a1, a2, False, m) == (0.0, 0.0),
                     f"payoff({a1},{a2},disconnected)")
    expected_sets = {
        RewiringSchedule.FULL: set(range(1, 11)),
        RewiringSchedule.HALF: {2, 4, 6, 8, 10},
        RewiringSchedule.NONE: set(),
    }
    for schedule, want in expected_sets.items():
        got = {t for t in range(1, 11) if rewiring_opportunity(schedule, t)}
        result.check(got == want, f"opportunity set for {schedule}: {got}")
    first = encode_observation(None, None, edge_prev=True, opp_prev=False)
    result.check(first.tolist() == [0, 0, 0, 0, 1, 0, 0, 1],
                 f"first-step observation {first.tolist()}")
    return result


def gradient_checks(cases: int = 100, seed: int = 2024) -> SuiteResult:
    """Central finite differences (h=1e-5) against the analytic gradient,
    within 1e-4 relative error scaled by max(1, |component|)."""
    result = SuiteResult("gradient-check")
    rng = np.random.default_rng(seed)
    h = 1e-5
    for case in range(cases):
        params = MlpParams.random(rng)
        obs = rng.choice([0.0, 1.0], size=8)
        action = int(rng.integers(2))
        target = rng.normal()
        weight = float(rng.uniform(0.1, 2.0))

        def loss(flat: np.ndarray) -> float:
            q = forward(MlpParams(flat), obs)
            return weight * 0.5 * (q[action] - target) ** 2

        td = float(forward(params, obs)[action] - target)
        analytic = backward(params, obs, action, td, weight).flat
        worst = 0.0
        flat = params.flat
        for i in range(flat.size):
            saved = flat[i]
            flat[i] = saved + h
            up = loss(flat)
            flat[i] = saved - h
            down = loss(flat)
            flat[i] = saved
            numeric = (up - down) / (2 * h)
            err = abs(analytic[i] - numeric) / max(1.0, abs(analytic[i]))
            worst = max(worst, err)
        result.check(worst < 1e-4, f"case {case}: worst rel err {worst:.2e}")
    return result


def sumtree_fuzz(operations: int = 10_000, seed: int = 99) -> SuiteResult:
    """Random leaf updates; after every operation the root must equal a flat
    bottom-up resummation exactly."""
    result = SuiteResult("sumtree-fuzz")
    rng = np.random.default_rng(seed)
    capacity = 256
    tree = SumTree(capacity)
    mirror = np.zeros(capacity)
    mismatches = 0
    for _ in range(operations):
        count = int(rng.integers(1, 8))
        leaves = rng.integers(0, capacity, size=count)
        values = rng.uniform(0, 10, size=count)
        tree.set_many(leaves, values)
        for leaf, value in zip(leaves, values):
            mirror[leaf] = value
        # Bottom-up pairwise resummation, mirroring the tree's node order.
        level = mirror.copy()
        while len(level) > 1:
            level = level[0::2] + level[1::2]
        if tree.total() != level[0]:
            mismatches += 1
    result.checks = operations
    if mismatches:
        result.failures.append(f"{mismatches} root-sum mismatches")
    leaf_ok = np.array_equal(tree.leaf_values, mirror)
    result.check(leaf_ok, "leaf values diverged from mirror")
    return result


def per_sampling(draws: int = 100_000, seed: int = 7,
                 inject_failure: bool = False) -> SuiteResult:
    """Empirical sampling frequencies against p_i = prio_i / sum(prio) via a
    chi-squared goodness-of-fit test at p > 0.01."""
    from scipy import stats

    result = SuiteResult("per-sampling")
    rng = np.random.default_rng(seed)
    config = PerConfig(alpha=0.6, capacity=16, min_size_to_sample=1)
    buffer = PrioritizedReplayBuffer(config)
    obs = np.zeros(8)
    priorities = np.linspace(0.1, 3.0, 16)
    for value in priorities:
        buffer.insert(Transition(obs, 0, 0.0, 0.0, obs), float(value))
    mass = (priorities + config.priority_epsilon) ** config.alpha
    probs = mass / mass.sum()
    counts = np.zeros(16)
    batch_size = 1000
    for _ in range(draws // batch_size):
        batch = buffer.sample(batch_size, beta=1.0, rng=rng)
        slots = batch.indices % buffer.capacity
        counts += np.bincount(slots, minlength=16)
    expected = probs * counts.sum()
    if inject_failure:
        expected = np.roll(expected, 1)
    chi2, pvalue = stats.chisquare(counts, expected)
    result.check(pvalue > 0.01,
                 f"chi2={chi2:.1f} p={pvalue:.4f} below 0.01")
    weights = buffer.sample(64, beta=1.0, rng=rng).is_weights
    result.check(weights.max() == 1.0, "max IS weight != 1")
    result.check(bool((weights > 0).all() and (weights <= 1).all()),
                 "IS weights outside (0, 1]")
    return result


def double_dqn_oracle(cases: int = 1_000, seed: int = 4242) -> SuiteResult:
    """The implementation must match a two-pass oracle (argmax under the
    online network, value under the target network) bit for bit."""
    result = SuiteResult("double-dqn-target")
    rng = np.random.default_rng(seed)
    for case in range(cases):
        pair = QNetworkPair(MlpParams.random(rng), MlpParams.random(rng))
        next_obs = rng.choice([0.0, 1.0], size=8)
        reward = float(rng.normal())
        discount = float(rng.uniform(0, 1))
        got = double_dqn_target(pair, reward, discount, next_obs)
        q_online = forward(pair.online, next_obs)
        best = 0 if q_online[0] >= q_online[1] else 1
        oracle = reward + discount * forward(pair.target, next_obs)[best]
        result.check(got == oracle, f"case {case}: {got!r} != {oracle!r}")
    return result


def run_all(inject_failure: bool = False,
            gradient_cases: int = 100,
            fuzz_operations: int = 10_000,
            sampling_draws: int = 100_000,
            target_cases: int = 1_000) -> list[SuiteResult]:
    return [
        environment_tables(),
        gradient_checks(cases=gradient_cases),
        sumtree_fuzz(operations=fuzz_operations),
        per_sampling(draws=sampling_draws, inject_failure=inject_failure),
        double_dqn_oracle(cases=target_cases),
    ]


def format_report(results: list[SuiteResult]) -> str:
    lines = []
    for res in results:
        status = "ok" if res.passed else "FAIL"
        lines.append(f"{res.name}: {status} ({res.checks} checks)")
        for failure in res.failures[:10]:
            lines.append(f"  - {failure}")
    return "\n".join(lines)
