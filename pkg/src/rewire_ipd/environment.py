"""Two-agent Iterated Prisoner's Dilemma with network rewiring.

Each timestep both agents may first rewire their connection (bilateral
tie-making: the edge exists only if both choose Connect; either agent alone
can break it) and then play one round of the PD. Disconnected agents earn
nothing for that timestep. The environment is pure: stepping the same state
with the same actions always yields the same result.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum, IntEnum

import numpy as np

OBS_SIZE = 8

# Slices of the flattened 8-component observation vector.
OWN_PREV = slice(0, 2)
OTHER_PREV = slice(2, 4)
EDGE_PREV = slice(4, 6)
OPP_PREV = slice(6, 8)


class InteractionAction(IntEnum):
    """PD move; the index doubles as the Q-head action index."""

    COOPERATE = 0
    DEFECT = 1


class RewiringAction(IntEnum):
    """Connection intent; the index doubles as the Q-head action index."""

    CONNECT = 0
    DISCONNECT = 1


class RewiringSchedule(str, Enum):
    """When rewiring opportunities occur within an episode."""

    NONE = "none"   # never; the pair stays connected all episode
    HALF = "half"   # even timesteps only (2, 4, 6, 8, 10)
    FULL = "full"   # every timestep, including the first


@dataclass(frozen=True)
class PayoffMatrix:
    """(own, other) payoff pairs per action combination, plus the payoff
    used when no connection exists."""

    cc: tuple[float, float] = (1.0, 1.0)
    cd: tuple[float, float] = (-1.0, 2.0)
    dc: tuple[float, float] = (2.0, -1.0)
    dd: tuple[float, float] = (0.0, 0.0)
    disconnected: float = 0.0

    def __post_init__(self) -> None:
        if not (self.dc[0] > self.cc[0] > self.dd[0] > self.cd[0]):
            raise ValueError(
                "payoffs must keep the PD ordering: "
                "dc.own > cc.own > dd.own > cd.own"
            )


@dataclass(frozen=True)
class EnvState:
    """Episode-local environment state. ``timestep`` is the 1-based index of
    the *next* step to be taken."""

    timestep: int
    connected: bool
    last_interaction: tuple[InteractionAction, InteractionAction] | None
    last_rewire_opportunity: bool
    schedule: RewiringSchedule
    episode_length: int = 10


@dataclass(frozen=True)
class StepOutcome:
    payoffs: tuple[float, float]
    connected_after: bool
    interacted: bool
    observations_next: tuple[np.ndarray, np.ndarray]


@dataclass
class EpisodeTrace:
    """Compact per-episode record of everything the metrics and the
    transition builders need.

    ``observations[i]`` holds ``episode_length + 1`` vectors for agent ``i``:
    the observation before each step plus the final one. ``rewire_intents``
    entries are ``None`` on timesteps without a rewiring opportunity.
    """

    episode_length: int
    opportunities: list[bool] = field(default_factory=list)
    connected: list[bool] = field(default_factory=list)
    interactions: list[tuple[InteractionAction, InteractionAction]] = field(default_factory=list)
    rewire_intents: list[tuple[RewiringAction, RewiringAction] | None] = field(default_factory=list)
    payoffs: list[tuple[float, float]] = field(default_factory=list)
    observations: tuple[list[np.ndarray], list[np.ndarray]] = field(default_factory=lambda: ([], []))


def rewiring_opportunity(schedule: RewiringSchedule, timestep: int,
                         episode_length: int = 10) -> bool:
    """Whether the schedule grants a rewiring opportunity at ``timestep``."""
    if not 1 <= timestep <= episode_length:
        raise ValueError(f"timestep {timestep} outside 1..{episode_length}")
    if schedule is RewiringSchedule.FULL:
        return True
    if schedule is RewiringSchedule.HALF:
        return timestep % 2 == 0
    return False


def connection_update(prev_connected: bool, opportunity: bool,
                      a1: RewiringAction, a2: RewiringAction) -> bool:
    """Bilateral tie-making, unilateral tie-breaking. Without an opportunity
    the connection carries over unchanged."""
    if not opportunity:
        return prev_connected
    return a1 is RewiringAction.CONNECT and a2 is RewiringAction.CONNECT


def payoff(a1: InteractionAction, a2: InteractionAction, connected: bool,
           m: PayoffMatrix) -> tuple[float, float]:
    """Payoff pair (agent 1, agent 2) for one timestep."""
    if not connected:
        return (m.disconnected, m.disconnected)
    if a1 is InteractionAction.COOPERATE:
        cell = m.cc if a2 is InteractionAction.COOPERATE else m.cd
    else:
        cell = m.dc if a2 is InteractionAction.COOPERATE else m.dd
    return cell


def encode_observation(own_prev: InteractionAction | None,
                       other_prev: InteractionAction | None,
                       edge_prev: bool, opp_prev: bool) -> np.ndarray:
    """Flatten the four one-hot pairs into the 8-component vector.

    Interaction pairs encode Cooperate as [1,0] and Defect as [0,1]; a
    missing previous action (first timestep) encodes as [0,0]. The edge and
    opportunity pairs encode presence as [1,0] and absence as [0,1].
    """
    obs = np.zeros(OBS_SIZE)
    if own_prev is not None:
        obs[int(own_prev)] = 1.0
    if other_prev is not None:
        obs[2 + int(other_prev)] = 1.0
    obs[4 if edge_prev else 5] = 1.0
    obs[6 if opp_prev else 7] = 1.0
    return obs


class RewiringIpdEnv:
    """Stateless stepper bundling a schedule, episode length and payoffs.

    ``reset`` and ``step`` take and return explicit state, so replaying the
    same action sequence reproduces an episode bit for bit.
    """

    def __init__(self, schedule: RewiringSchedule, episode_length: int = 10,
                 payoff_matrix: PayoffMatrix | None = None):
        if episode_length < 1:
            raise ValueError("episode_length must be >= 1")
        self.schedule = schedule
        self.episode_length = episode_length
        self.payoff_matrix = payoff_matrix or PayoffMatrix()

    def reset(self) -> tuple[EnvState, tuple[np.ndarray, np.ndarray]]:
        """Start an episode: connected, no interaction history, and no
        previous rewiring opportunity."""
        state = EnvState(
            timestep=1,
            connected=True,
            last_interaction=None,
            last_rewire_opportunity=False,
            schedule=self.schedule,
            episode_length=self.episode_length,
        )
        obs = encode_observation(None, None, edge_prev=True, opp_prev=False)
        return state, (obs, obs.copy())

    def step(self, state: EnvState,
             rewire_actions: tuple[RewiringAction, RewiringAction],
             interaction_actions: tuple[InteractionAction, InteractionAction],
             ) -> tuple[EnvState, StepOutcome]:
        """Apply one timestep: rewiring first, then the PD round.

        Interaction actions are recorded into the next observations even
        while disconnected; they just earn nothing without an edge.
        """
        if state.timestep > state.episode_length:
            raise ValueError("step() called after the episode ended")
        opportunity = rewiring_opportunity(
            self.schedule, state.timestep, state.episode_length)
        connected = connection_update(
            state.connected, opportunity, rewire_actions[0], rewire_actions[1])
        a0, a1 = interaction_actions
        payoffs = payoff(a0, a1, connected, self.payoff_matrix)
        obs0 = encode_observation(a0, a1, connected, opportunity)
        obs1 = encode_observation(a1, a0, connected, opportunity)
        next_state = EnvState(
            timestep=state.timestep + 1,
            connected=connected,
            last_interaction=(a0, a1),
            last_rewire_opportunity=opportunity,
            schedule=self.schedule,
            episode_length=self.episode_length,
        )
        outcome = StepOutcome(
            payoffs=payoffs,
            connected_after=connected,
            interacted=connected,
            observations_next=(obs0, obs1),
        )
        return next_state, outcome
