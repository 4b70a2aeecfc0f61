"""Hand-rolled 8-16-16-2 tanh MLP used by every Q-head.

Parameters live in one flat float64 vector with named views (w1, b1, w2, b2,
w3, b3), which keeps the Adam update a handful of vectorized operations and
makes the serialized layout trivially well-defined. Hidden layers use tanh;
the output layer is linear so Q-values can exceed [-1, 1].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

LAYER_SIZES = (8, 16, 16, 2)

_SHAPES = (
    ("w1", (8, 16)),
    ("b1", (16,)),
    ("w2", (16, 16)),
    ("b2", (16,)),
    ("w3", (16, 2)),
    ("b3", (2,)),
)

# (name, shape, start, stop) with offsets precomputed once.
_LAYOUT = []
_offset = 0
for _name, _shape in _SHAPES:
    _size = 1
    for _dim in _shape:
        _size *= _dim
    _LAYOUT.append((_name, _shape, _offset, _offset + _size))
    _offset += _size
PARAM_COUNT = _offset  # 450
del _name, _shape, _size, _dim, _offset


class MlpParams:
    """MLP parameters backed by a single flat vector.

    The flat layout is w1, b1, w2, b2, w3, b3 in row-major order; serialized
    snapshots (:func:`params_to_bytes`) use the same order as little-endian
    float64. The attribute views alias the flat vector, so mutating either
    side is visible through the other.
    """

    __slots__ = ("flat", "w1", "b1", "w2", "b2", "w3", "b3")

    def __init__(self, flat: np.ndarray | None = None):
        if flat is None:
            flat = np.zeros(PARAM_COUNT)
        elif flat.dtype != np.float64 or not flat.flags.c_contiguous:
            flat = np.ascontiguousarray(flat, dtype=np.float64)
        if flat.shape != (PARAM_COUNT,):
            raise ValueError(f"expected flat shape ({PARAM_COUNT},), got {flat.shape}")
        self.flat = flat
        for name, shape, start, stop in _LAYOUT:
            setattr(self, name, flat[start:stop].reshape(shape))

    @classmethod
    def zeros(cls) -> "MlpParams":
        return cls()

    @classmethod
    def random(cls, rng: np.random.Generator) -> "MlpParams":
        """Scale-preserving init: weights uniform in +-1/sqrt(fan_in), biases
        zero. Draw order is w1, w2, w3 so a given generator state always
        produces the same network."""
        params = cls()
        for w in (params.w1, params.w2, params.w3):
            bound = 1.0 / np.sqrt(w.shape[0])
            w[...] = rng.uniform(-bound, bound, size=w.shape)
        return params

    def copy(self) -> "MlpParams":
        return MlpParams(self.flat.copy())

    def copy_from(self, other: "MlpParams") -> None:
        self.flat[...] = other.flat


@dataclass
class QNetworkPair:
    """Online network plus its target snapshot."""

    online: MlpParams
    target: MlpParams

    @classmethod
    def initialize(cls, rng: np.random.Generator) -> "QNetworkPair":
        online = MlpParams.random(rng)
        return cls(online=online, target=online.copy())


def sync_target(pair: QNetworkPair) -> QNetworkPair:
    """Snapshot the online parameters into the target network."""
    pair.target.copy_from(pair.online)
    return pair


def forward(params: MlpParams, obs: np.ndarray) -> np.ndarray:
    """Q-values for one observation (8,) -> (2,) or a batch (B,8) -> (B,2)."""
    a1 = np.tanh(obs @ params.w1 + params.b1)
    a2 = np.tanh(a1 @ params.w2 + params.b2)
    return a2 @ params.w3 + params.b3


def forward_cached(params: MlpParams, obs: np.ndarray,
                   ) -> tuple[np.ndarray, tuple[np.ndarray, np.ndarray, np.ndarray]]:
    """Forward pass that also returns (obs, a1, a2) for backpropagation."""
    a1 = np.tanh(obs @ params.w1 + params.b1)
    a2 = np.tanh(a1 @ params.w2 + params.b2)
    q = a2 @ params.w3 + params.b3
    return q, (obs, a1, a2)


def backward_batch(params: MlpParams,
                   cache: tuple[np.ndarray, np.ndarray, np.ndarray],
                   action_indices: np.ndarray, td_errors: np.ndarray,
                   is_weights: np.ndarray,
                   out: MlpParams | None = None) -> MlpParams:
    """Gradient of the mean importance-weighted squared TD loss.

    The loss is mean_i of w_i * 0.5 * td_i^2 where td_i is (prediction -
    target) with the target held constant, so dL/dq[i, a_i] = w_i * td_i / B
    and all other output components get zero. ``out`` is an optional
    gradient buffer to reuse; every component is overwritten.
    """
    obs, a1, a2 = cache
    batch = obs.shape[0]
    grad = out if out is not None else MlpParams.zeros()
    dq = np.zeros((batch, 2))
    dq[np.arange(batch), action_indices] = is_weights * td_errors / batch
    grad.w3[...] = a2.T @ dq
    grad.b3[...] = dq.sum(axis=0)
    da2 = dq @ params.w3.T
    dz2 = da2 * (1.0 - a2 * a2)
    grad.w2[...] = a1.T @ dz2
    grad.b2[...] = dz2.sum(axis=0)
    da1 = dz2 @ params.w2.T
    dz1 = da1 * (1.0 - a1 * a1)
    grad.w1[...] = obs.T @ dz1
    grad.b1[...] = dz1.sum(axis=0)
    return grad


def backward(params: MlpParams, obs: np.ndarray, action_index: int,
             td_error: float, is_weight: float) -> MlpParams:
    """Gradient of is_weight * 0.5 * td_error^2 for a single observation."""
    q, cache = forward_cached(params, obs.reshape(1, -1))
    del q  # the TD error is supplied by the caller
    return backward_batch(params, cache,
                          np.array([action_index]),
                          np.array([td_error], dtype=np.float64),
                          np.array([is_weight], dtype=np.float64))


class AdamState:
    """Adaptive-moment optimizer state over a flat parameter vector."""

    __slots__ = ("lr", "beta1", "beta2", "epsilon", "m", "v", "step_count")

    def __init__(self, size: int, lr: float = 1e-3, beta1: float = 0.9,
                 beta2: float = 0.999, epsilon: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.m = np.zeros(size)
        self.v = np.zeros(size)
        self.step_count = 0

    def update(self, params_flat: np.ndarray, grad_flat: np.ndarray) -> None:
        """One bias-corrected moment step, applied to ``params_flat`` in place."""
        self.step_count += 1
        self.m *= self.beta1
        self.m += (1.0 - self.beta1) * grad_flat
        self.v *= self.beta2
        self.v += (1.0 - self.beta2) * grad_flat * grad_flat
        m_hat = self.m / (1.0 - self.beta1 ** self.step_count)
        v_hat = self.v / (1.0 - self.beta2 ** self.step_count)
        params_flat -= self.lr * m_hat / (np.sqrt(v_hat) + self.epsilon)


def apply_update(params: MlpParams, opt: AdamState, gradient: MlpParams,
                 ) -> tuple[MlpParams, AdamState]:
    """Apply one optimizer step to ``params`` using ``gradient``."""
    opt.update(params.flat, gradient.flat)
    return params, opt


def params_to_bytes(params: MlpParams) -> bytes:
    """Serialize as little-endian float64 in the documented flat layout."""
    return params.flat.astype("<f8").tobytes()


def params_from_bytes(buf: bytes) -> MlpParams:
    flat = np.frombuffer(buf, dtype="<f8").astype(np.float64)
    return MlpParams(flat)
