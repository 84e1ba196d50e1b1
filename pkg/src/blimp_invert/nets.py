"""Plain-numpy function approximation for the torque policy and critics.

Fixed two-hidden-layer perceptrons (in -> 256 -> 256 -> out) with a leaky
rectifier (negative slope 0.01), tanh squashing on the actor head and a
linear critic head. Forward, exact reverse-mode gradients, elementwise
gradient clipping, an adaptive-moment optimizer, and Polyak target
updates; float32 by default to match small-CPU deployment, dtype-generic
so tests can run the same code in float64 against finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

LEAKY_SLOPE = 0.01
HIDDEN = 256


@dataclass
class Mlp:
    """Weights (n_out, n_in), biases (n_out,), and the output squashing."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]
    output: str  # "tanh" or "linear"

    @property
    def params(self) -> list[np.ndarray]:
        """Flat parameter list, interleaved [W1, b1, W2, b2, ...]."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out.append(w)
            out.append(b)
        return out

    @property
    def dtype(self) -> np.dtype:
        return self.weights[0].dtype

    def copy(self) -> "Mlp":
        return Mlp(
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
            self.output,
        )


def init_mlp(
    dims: tuple[int, ...],
    output: str,
    rng: np.random.Generator,
    final_scale: float = 1.0,
    dtype=np.float32,
) -> Mlp:
    """Uniform fan-in initialization, the last layer scaled by final_scale.

    Bounds are 1/sqrt(fan_in) for both weights and biases; a small
    final_scale keeps initial actor torques near zero.
    """
    if output not in ("tanh", "linear"):
        raise ValueError("output must be 'tanh' or 'linear'")
    weights, biases = [], []
    for i in range(len(dims) - 1):
        fan_in = dims[i]
        bound = 1.0 / np.sqrt(fan_in)
        if i == len(dims) - 2:
            bound *= final_scale
        w = rng.uniform(-bound, bound, size=(dims[i + 1], dims[i]))
        b = rng.uniform(-bound, bound, size=dims[i + 1])
        weights.append(w.astype(dtype))
        biases.append(b.astype(dtype))
    return Mlp(weights, biases, output)


def _leaky(z: np.ndarray) -> np.ndarray:
    return np.where(z > 0.0, z, LEAKY_SLOPE * z)


def _leaky_grad(z: np.ndarray) -> np.ndarray:
    return np.where(z > 0.0, 1.0, LEAKY_SLOPE).astype(z.dtype)


def forward(net: Mlp, x: np.ndarray) -> np.ndarray:
    """Batched forward pass; x is (batch, in) or a single (in,) vector."""
    single = x.ndim == 1
    h = np.atleast_2d(np.asarray(x, dtype=net.dtype))
    last = len(net.weights) - 1
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        h = h @ w.T + b
        if i < last:
            h = _leaky(h)
    if net.output == "tanh":
        h = np.tanh(h)
    return h[0] if single else h


def forward_cache(net: Mlp, x: np.ndarray) -> tuple[np.ndarray, list]:
    """Forward pass keeping layer inputs and pre-activations for backward."""
    h = np.atleast_2d(np.asarray(x, dtype=net.dtype))
    cache = []
    last = len(net.weights) - 1
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        z = h @ w.T + b
        cache.append((h, z))
        h = _leaky(z) if i < last else z
    if net.output == "tanh":
        h = np.tanh(h)
    return h, cache


def backward(
    net: Mlp, cache: list, y: np.ndarray, dy: np.ndarray
) -> tuple[list[np.ndarray], np.ndarray]:
    """Exact reverse-mode gradients.

    Args:
        cache: from forward_cache.
        y: the forward output (needed for the tanh derivative).
        dy: gradient of the scalar loss w.r.t. the output, same shape as y.

    Returns:
        (grads, dx): grads interleaved like Mlp.params; dx is the loss
        gradient w.r.t. the network input (used to push critic gradients
        into the actor).
    """
    if net.output == "tanh":
        delta = dy * (1.0 - y * y)
    else:
        delta = dy.astype(net.dtype)
    grads: list[np.ndarray] = [None] * (2 * len(net.weights))
    for i in range(len(net.weights) - 1, -1, -1):
        h_in, z = cache[i]
        if i < len(net.weights) - 1:
            delta = delta * _leaky_grad(z)
        grads[2 * i] = delta.T @ h_in
        grads[2 * i + 1] = delta.sum(axis=0)
        delta = delta @ net.weights[i]
    return grads, delta


def critic_mse_grads(
    net: Mlp, x: np.ndarray, targets: np.ndarray
) -> tuple[float, list[np.ndarray]]:
    """Mean squared error against per-sample targets and its gradients."""
    q, cache = forward_cache(net, x)
    t = np.asarray(targets, dtype=net.dtype).reshape(q.shape)
    err = q - t
    loss = float(np.mean(err * err))
    dy = (2.0 / err.size) * err
    grads, _ = backward(net, cache, q, dy)
    return loss, grads


def actor_objective_grads(
    actor: Mlp, critic: Mlp, obs: np.ndarray
) -> tuple[float, list[np.ndarray]]:
    """Gradients for descending L = -mean Q(s, pi(s)).

    Backpropagates through the critic into the action input, then through
    the actor; the critic's own parameters receive no update here.
    """
    a, actor_cache = forward_cache(actor, obs)
    x = np.concatenate([np.atleast_2d(np.asarray(obs, dtype=actor.dtype)), a], axis=1)
    q, critic_cache = forward_cache(critic, x)
    obj = float(np.mean(q))
    dq = np.full(q.shape, -1.0 / q.shape[0], dtype=critic.dtype)
    _, dx = backward(critic, critic_cache, q, dq)
    da = dx[:, -a.shape[1]:]
    grads, _ = backward(actor, actor_cache, a, da)
    return obj, grads


def clip_gradients(grads: list[np.ndarray], bound: float) -> list[np.ndarray]:
    """Elementwise clamp of every gradient entry to [-bound, bound]."""
    if bound <= 0.0:
        raise ValueError("clip bound must be positive")
    return [np.clip(g, -bound, bound) for g in grads]


@dataclass
class Adam:
    """Adaptive-moment estimation over a fixed parameter list."""

    lr: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)
    t: int = 0

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        """In-place update of params given same-ordered gradients."""
        if not self.m:
            self.m = [np.zeros_like(p) for p in params]
            self.v = [np.zeros_like(p) for p in params]
        self.t += 1
        b1c = 1.0 - self.beta1 ** self.t
        b2c = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            g = g.astype(p.dtype)
            m += (1.0 - self.beta1) * (g - m)
            v += (1.0 - self.beta2) * (g * g - v)
            p -= (self.lr * (m / b1c) / (np.sqrt(v / b2c) + self.eps)).astype(
                p.dtype
            )


def soft_update(target: Mlp, online: Mlp, rate: float) -> None:
    """Polyak averaging: theta' <- (1 - rate) theta' + rate theta.

    The interpolation form is exact at rate = 1 (target becomes a copy).
    """
    for tp, op in zip(target.params, online.params):
        tp[...] = (1.0 - rate) * tp + rate * op


def flat_params(net: Mlp) -> np.ndarray:
    """All parameters concatenated into one float vector (copy)."""
    return np.concatenate([p.reshape(-1) for p in net.params])


def set_flat_params(net: Mlp, vec: np.ndarray) -> None:
    """Writes a flat vector back into the network parameters."""
    i = 0
    for p in net.params:
        n = p.size
        p[...] = vec[i : i + n].reshape(p.shape).astype(p.dtype)
        i += n
    if i != vec.size:
        raise ValueError("parameter vector length mismatch")
