"""Per-agent decision making and learning.

Every agent owns two independent Q-heads, one for interaction (cooperate /
defect) and one for rewiring (connect / disconnect). Heads learn with Double
DQN over prioritized replay; no parameters are shared between heads or
between agents. Either head can instead be driven by a fixed policy
(always-cooperate, tit-for-tat, ostracism, uniform-random) in which case its
networks never change.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .environment import (
    OTHER_PREV,
    EpisodeTrace,
    InteractionAction,
    RewiringAction,
)
from .neuralnet import (
    PARAM_COUNT,
    AdamState,
    MlpParams,
    QNetworkPair,
    apply_update,
    backward_batch,
    forward,
    forward_cached,
    sync_target,
)
from .replay import PerConfig, PrioritizedReplayBuffer, Transition


class InteractionBias(str, Enum):
    LEARNED = "learned"
    ALLC = "allc"
    TFT = "tft"


class RewiringBias(str, Enum):
    LEARNED = "learned"
    OSTRACISM = "ostracism"
    UNIFORM_RANDOM = "uniform_random"
    FROZEN_RANDOM_NET = "frozen_random_net"


@dataclass(frozen=True)
class Hyperparameters:
    """Training knobs shared by both heads of an agent.

    ``epsilon_decay_steps=None`` resolves to 5% of the run's total
    environment steps. Epsilon decays linearly from start to end and then
    stays flat; the replay beta exponent anneals over the whole run.
    """

    gamma: float = 0.99
    epsilon_start: float = 1.0
    epsilon_end: float = 0.01
    epsilon_decay_steps: int | None = None
    batch_size: int = 64
    target_sync_period: int = 1_000
    learn_every: int = 1
    learning_rate: float = 1e-3
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8
    grad_clip_norm: float | None = None
    per: PerConfig = field(default_factory=PerConfig)

    def __post_init__(self) -> None:
        if not 0 <= self.gamma < 1:
            raise ValueError("gamma must lie in [0, 1)")
        for eps in (self.epsilon_start, self.epsilon_end):
            if not 0 <= eps <= 1:
                raise ValueError("epsilon values must lie in [0, 1]")

    def resolve_decay_steps(self, total_steps: int) -> int:
        if self.epsilon_decay_steps is not None:
            return self.epsilon_decay_steps
        return max(1, round(0.05 * total_steps))

    def epsilon_at(self, step: int, total_steps: int) -> float:
        decay = self.resolve_decay_steps(total_steps)
        frac = min(1.0, step / decay)
        return self.epsilon_start + (self.epsilon_end - self.epsilon_start) * frac


@dataclass(frozen=True)
class AgentSpec:
    interaction_bias: InteractionBias = InteractionBias.LEARNED
    rewiring_bias: RewiringBias = RewiringBias.LEARNED
    hyperparams: Hyperparameters = field(default_factory=Hyperparameters)


class PolicyHead:
    """One Q-head: network pair, replay buffer and optimizer state.

    With learning disabled the networks stay at their initial values for the
    lifetime of the head; learn_step() is a no-op.
    """

    def __init__(self, hp: Hyperparameters, rng: np.random.Generator,
                 learning_enabled: bool = True):
        self.hp = hp
        self.nets = QNetworkPair.initialize(rng)
        self.buffer = PrioritizedReplayBuffer(hp.per)
        self.opt = AdamState(PARAM_COUNT, lr=hp.learning_rate,
                             beta1=hp.adam_beta1, beta2=hp.adam_beta2,
                             epsilon=hp.adam_epsilon)
        self.learning_enabled = learning_enabled
        self.steps_done = 0
        self._grad = MlpParams.zeros()  # reused across learn steps
        self._rows = np.arange(hp.batch_size)


def select_action(head: PolicyHead, obs: np.ndarray, epsilon: float,
                  rng: np.random.Generator) -> int:
    """Epsilon-greedy over the online network. Always consumes one uniform
    draw (plus one integer draw when exploring); greedy ties resolve to
    action index 0."""
    if rng.random() < epsilon:
        return int(rng.integers(2))
    q = forward(head.nets.online, obs)
    return int(np.argmax(q))


def double_dqn_target(pair: QNetworkPair, reward: float, discount: float,
                      next_obs: np.ndarray) -> float:
    """Bootstrap with the action chosen by the online net but valued by the
    target net: reward + discount * Q_target(s', argmax_a Q_online(s', a))."""
    q_online = forward(pair.online, next_obs)
    best = int(np.argmax(q_online))
    q_target = forward(pair.target, next_obs)
    return float(reward + discount * q_target[best])


def learn_step(head: PolicyHead, rng: np.random.Generator,
               beta: float) -> float | None:
    """One Double-DQN update from a prioritized batch.

    Returns the mean absolute TD error, or None when the head has learning
    disabled or its buffer is still below the sampling threshold. Disabled
    or starved heads consume no random draws.
    """
    if not head.learning_enabled:
        return None
    hp = head.hp
    batch = head.buffer.sample(hp.batch_size, beta, rng)
    if batch is None:
        return None
    online = head.nets.online
    q_next_online = forward(online, batch.next_obs)
    best = np.argmax(q_next_online, axis=1)
    q_next_target = forward(head.nets.target, batch.next_obs)
    rows = head._rows if len(best) == len(head._rows) else np.arange(len(best))
    targets = batch.rewards + batch.discounts * q_next_target[rows, best]
    q, cache = forward_cached(online, batch.obs)
    td = q[rows, batch.action_indices] - targets
    grad = backward_batch(online, cache, batch.action_indices, td,
                          batch.is_weights, out=head._grad)
    if hp.grad_clip_norm is not None:
        norm = float(np.linalg.norm(grad.flat))
        if norm > hp.grad_clip_norm:
            grad.flat *= hp.grad_clip_norm / norm
    apply_update(online, head.opt, grad)
    head.buffer.update_priorities(batch.indices, np.abs(td))
    head.steps_done += 1
    if head.steps_done % hp.target_sync_period == 0:
        sync_target(head.nets)
    return float(np.mean(np.abs(td)))


def fixed_interaction(bias: InteractionBias, obs: np.ndarray) -> InteractionAction:
    """ALLC always cooperates; TFT mirrors the other agent's previous
    recorded action and cooperates when there is none yet."""
    if bias is InteractionBias.ALLC:
        return InteractionAction.COOPERATE
    if bias is InteractionBias.TFT:
        if obs[OTHER_PREV][1] == 1.0:
            return InteractionAction.DEFECT
        return InteractionAction.COOPERATE
    raise ValueError(f"not a fixed interaction bias: {bias}")


def fixed_rewiring(bias: RewiringBias, obs: np.ndarray,
                   rng: np.random.Generator) -> RewiringAction:
    """Ostracism connects to cooperators (and on a blank history) and
    disconnects from defectors; uniform-random flips a fair coin."""
    if bias is RewiringBias.OSTRACISM:
        if obs[OTHER_PREV][1] == 1.0:
            return RewiringAction.DISCONNECT
        return RewiringAction.CONNECT
    if bias is RewiringBias.UNIFORM_RANDOM:
        return RewiringAction(int(rng.integers(2)))
    raise ValueError(f"not a fixed rewiring bias: {bias}")


class Agent:
    """Two Q-heads plus the bias configuration that decides which of them
    actually drives behavior and learns."""

    def __init__(self, spec: AgentSpec, rng: np.random.Generator):
        self.spec = spec
        # Both heads are always constructed (same init draw order in every
        # condition); biases only gate usage and learning.
        self.interaction = PolicyHead(
            spec.hyperparams, rng,
            learning_enabled=spec.interaction_bias is InteractionBias.LEARNED)
        self.rewiring = PolicyHead(
            spec.hyperparams, rng,
            learning_enabled=spec.rewiring_bias is RewiringBias.LEARNED)

    def interaction_action(self, obs: np.ndarray, epsilon: float,
                           rng: np.random.Generator) -> InteractionAction:
        if self.spec.interaction_bias is InteractionBias.LEARNED:
            return InteractionAction(select_action(self.interaction, obs,
                                                   epsilon, rng))
        return fixed_interaction(self.spec.interaction_bias, obs)

    def rewiring_action(self, obs: np.ndarray, epsilon: float,
                        rng: np.random.Generator) -> RewiringAction:
        bias = self.spec.rewiring_bias
        if bias is RewiringBias.LEARNED or bias is RewiringBias.FROZEN_RANDOM_NET:
            return RewiringAction(select_action(self.rewiring, obs,
                                                epsilon, rng))
        return fixed_rewiring(bias, obs, rng)

    def learning_heads(self) -> list[PolicyHead]:
        heads = []
        if self.interaction.learning_enabled:
            heads.append(self.interaction)
        if self.rewiring.learning_enabled:
            heads.append(self.rewiring)
        return heads


def interaction_transitions(trace: EpisodeTrace, agent_index: int,
                            gamma: float) -> list[Transition]:
    """Plain one-step transitions for the interaction head, one per timestep.
    The final step of the episode carries discount zero."""
    steps = len(trace.payoffs)
    obs = trace.observations[agent_index]
    out = []
    for t in range(steps):
        out.append(Transition(
            obs=obs[t],
            action_index=int(trace.interactions[t][agent_index]),
            reward=trace.payoffs[t][agent_index],
            discount=0.0 if t == steps - 1 else gamma,
            next_obs=obs[t + 1],
        ))
    return out


def rewiring_transitions(trace: EpisodeTrace, agent_index: int,
                         gamma: float) -> list[Transition]:
    """Gap-spanning transitions for the rewiring head, one per opportunity.

    An opportunity at step t whose next opportunity comes n steps later
    yields reward sum_{k<n} gamma**k * r_{t+k}, discount gamma**n and the
    observation at that next opportunity; when the episode ends first, the
    discount is zero. Rewiring decisions therefore see the payoff
    consequences of the steps they skip.
    """
    steps = len(trace.payoffs)
    obs = trace.observations[agent_index]
    opportunity_steps = [t for t in range(steps) if trace.opportunities[t]]
    out = []
    for k, t in enumerate(opportunity_steps):
        t_next = opportunity_steps[k + 1] if k + 1 < len(opportunity_steps) else steps
        span = t_next - t
        reward = 0.0
        for j in range(span):
            reward += gamma ** j * trace.payoffs[t + j][agent_index]
        intents = trace.rewire_intents[t]
        assert intents is not None
        out.append(Transition(
            obs=obs[t],
            action_index=int(intents[agent_index]),
            reward=reward,
            discount=0.0 if t_next == steps else gamma ** span,
            next_obs=obs[t_next],
        ))
    return out
