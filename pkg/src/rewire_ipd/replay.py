"""Proportional prioritized experience replay on a sum tree.

Leaves hold (priority + epsilon)**alpha; sampling splits the total mass into
equal segments and draws one prefix value per segment, which keeps expected
sample counts exactly proportional to leaf mass. Importance weights are
(N * p_i)**(-beta) normalized so the largest weight in a batch is 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .environment import OBS_SIZE


@dataclass(frozen=True)
class PerConfig:
    alpha: float = 0.6
    beta_start: float = 0.4
    beta_end: float = 1.0
    priority_epsilon: float = 1e-6
    capacity: int = 100_000
    min_size_to_sample: int = 1_000

    def __post_init__(self) -> None:
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")
        if not 0 <= self.beta_start <= self.beta_end <= 1:
            raise ValueError("need 0 <= beta_start <= beta_end <= 1")
        if self.priority_epsilon <= 0:
            raise ValueError("priority_epsilon must be > 0")
        if self.capacity < 1 or self.min_size_to_sample < 1:
            raise ValueError("capacity and min_size_to_sample must be >= 1")


@dataclass(frozen=True)
class Transition:
    """One learning transition. ``discount`` already includes the span
    (gamma**n for an n-step transition, 0 when the episode ends)."""

    obs: np.ndarray
    action_index: int
    reward: float
    discount: float
    next_obs: np.ndarray


class SampleBatch(NamedTuple):
    obs: np.ndarray          # (B, OBS_SIZE)
    action_indices: np.ndarray
    rewards: np.ndarray
    discounts: np.ndarray
    next_obs: np.ndarray
    indices: np.ndarray      # global transition ids, for update_priorities
    is_weights: np.ndarray


class SumTree:
    """Fixed-capacity (power of two) sum tree over non-negative leaf values.

    Nodes are stored 1-based: node 1 is the root, node i has children 2i and
    2i+1, and the leaves occupy [capacity, 2*capacity). Parents are always
    recomputed as the sum of their children, so the tree matches a flat
    bottom-up resummation bit for bit.
    """

    def __init__(self, capacity: int):
        if capacity < 1 or capacity & (capacity - 1):
            raise ValueError("capacity must be a power of two")
        self.capacity = capacity
        self.depth = capacity.bit_length() - 1
        self._nodes = np.zeros(2 * capacity)

    def total(self) -> float:
        return float(self._nodes[1])

    @property
    def leaf_values(self) -> np.ndarray:
        return self._nodes[self.capacity:]

    def set_many(self, leaf_indices: np.ndarray, values: np.ndarray) -> None:
        """Assign leaf values and repair every affected node on the way up.

        Parents are recomputed from both children rather than incremented,
        so duplicate indices per level are merely redundant writes.
        """
        nodes = np.asarray(leaf_indices, dtype=np.int64) + self.capacity
        tree = self._nodes
        tree[nodes] = values
        for _ in range(self.depth):
            nodes = nodes >> 1
            left = nodes << 1
            tree[nodes] = tree[left] + tree[left + 1]

    def set(self, leaf_index: int, value: float) -> None:
        """Single-leaf assignment with a scalar path repair."""
        node = leaf_index + self.capacity
        tree = self._nodes
        tree[node] = value
        while node > 1:
            node >>= 1
            left = node << 1
            tree[node] = tree[left] + tree[left + 1]

    def find(self, prefix_values: np.ndarray) -> np.ndarray:
        """Leaf index whose cumulative interval contains each prefix value."""
        idx = np.ones(len(prefix_values), dtype=np.int64)
        v = np.array(prefix_values, dtype=np.float64)
        tree = self._nodes
        for _ in range(self.depth):
            np.left_shift(idx, 1, out=idx)
            left_sum = tree[idx]
            go_right = v >= left_sum
            v -= left_sum * go_right
            idx += go_right
        idx -= self.capacity
        return idx


def _tree_capacity(capacity: int) -> int:
    power = 1
    while power < capacity:
        power *= 2
    return power


class PrioritizedReplayBuffer:
    """Ring buffer of transitions with priority-proportional sampling.

    Sampled batches carry global transition ids; priority updates for ids
    whose slot has been overwritten since sampling are silently skipped.
    New transitions enter at the maximum priority seen so far, so each gets
    sampled at least once soon after insertion.
    """

    def __init__(self, config: PerConfig, obs_size: int = OBS_SIZE):
        self.config = config
        self.capacity = config.capacity
        self.tree = SumTree(_tree_capacity(config.capacity))
        self.size = 0
        self.insert_count = 0
        self.max_priority = 1.0
        self._obs = np.zeros((self.capacity, obs_size))
        self._actions = np.zeros(self.capacity, dtype=np.int64)
        self._rewards = np.zeros(self.capacity)
        self._discounts = np.zeros(self.capacity)
        self._next_obs = np.zeros((self.capacity, obs_size))
        self._ids = np.full(self.capacity, -1, dtype=np.int64)
        self._segments = np.zeros(0)  # cached arange for stratified sampling

    def __len__(self) -> int:
        return self.size

    def _leaf_priority(self, priority: float) -> float:
        return (priority + self.config.priority_epsilon) ** self.config.alpha

    def insert(self, transition: Transition, priority: float) -> None:
        """Store a transition at (priority + epsilon)**alpha, overwriting the
        oldest entry once full."""
        if priority < 0:
            raise ValueError("priority must be >= 0")
        slot = self.insert_count % self.capacity
        self._obs[slot] = transition.obs
        self._actions[slot] = transition.action_index
        self._rewards[slot] = transition.reward
        self._discounts[slot] = transition.discount
        self._next_obs[slot] = transition.next_obs
        self._ids[slot] = self.insert_count
        self.tree.set(slot, self._leaf_priority(priority))
        self.insert_count += 1
        self.size = min(self.size + 1, self.capacity)

    def add(self, transition: Transition) -> None:
        """Insert at the running maximum priority."""
        self.insert(transition, self.max_priority)

    def extend(self, transitions: list[Transition]) -> None:
        """Bulk add() at the running maximum priority, with one tree repair."""
        if not transitions:
            return
        leaf = self._leaf_priority(self.max_priority)
        slots = np.empty(len(transitions), dtype=np.int64)
        for k, t in enumerate(transitions):
            slot = self.insert_count % self.capacity
            self._obs[slot] = t.obs
            self._actions[slot] = t.action_index
            self._rewards[slot] = t.reward
            self._discounts[slot] = t.discount
            self._next_obs[slot] = t.next_obs
            self._ids[slot] = self.insert_count
            slots[k] = slot
            self.insert_count += 1
        self.size = min(self.size + len(transitions), self.capacity)
        self.tree.set_many(slots, np.full(len(transitions), leaf))

    def sample(self, batch_size: int, beta: float,
               rng: np.random.Generator) -> SampleBatch | None:
        """Stratified proportional sample, or None while the buffer is below
        min_size_to_sample. Draws exactly ``batch_size`` uniforms."""
        if self.size < self.config.min_size_to_sample:
            return None
        if batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        total = self.tree.total()
        segment = total / batch_size
        if len(self._segments) != batch_size:
            self._segments = np.arange(batch_size, dtype=np.float64)
        prefix = (self._segments + rng.random(batch_size)) * segment
        slots = self.tree.find(prefix)
        # Rounding at segment edges can land one past the live region.
        np.minimum(slots, self.size - 1, out=slots)
        leaf_vals = self.tree.leaf_values[slots]
        probs = leaf_vals / total
        weights = (self.size * probs) ** (-beta)
        weights /= weights.max()
        return SampleBatch(
            obs=self._obs[slots],
            action_indices=self._actions[slots],
            rewards=self._rewards[slots],
            discounts=self._discounts[slots],
            next_obs=self._next_obs[slots],
            indices=self._ids[slots],
            is_weights=weights,
        )

    def update_priorities(self, indices: np.ndarray, td_errors: np.ndarray) -> None:
        """Refresh priorities to (|td| + epsilon)**alpha for live entries."""
        indices = np.asarray(indices, dtype=np.int64)
        slots = indices % self.capacity
        live = self._ids[slots] == indices
        if not live.any():
            return
        slots = slots[live]
        raw = np.abs(np.asarray(td_errors, dtype=np.float64)[live])
        self.tree.set_many(slots, (raw + self.config.priority_epsilon)
                           ** self.config.alpha)
        self.max_priority = max(self.max_priority, float(raw.max()))


def beta_schedule(config: PerConfig, step: int, total_steps: int) -> float:
    """Linear importance-weight exponent annealing from beta_start to beta_end."""
    if not 0 <= step <= total_steps:
        raise ValueError("step must lie in [0, total_steps]")
    if total_steps == 0:
        return config.beta_end
    frac = step / total_steps
    return config.beta_start + (config.beta_end - config.beta_start) * frac
