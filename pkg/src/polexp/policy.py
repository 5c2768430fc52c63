"""Finite-width feedforward policy networks.

A policy is a plain stack of affine layers with ReLU or tanh hidden
activations and a linear output layer.  Networks are sampled from an
explicit initialization scheme, evaluated deterministically, and certified
with a spectral-norm Lipschitz upper bound that the ballistic trajectory
analysis consumes.

Gaussian initialization convention: the input layer draws weight entries
from N(0, sigma_w^2), every deeper layer from N(0, 2/fan_in), hidden
biases are zero, and the output bias draws from N(0, sigma_b^2).  Under
this convention the covariance of a one-hidden-layer ReLU policy over
initializations converges, as the hidden width grows, to the arc-cosine
kernel (sigma_w^2/pi)*|s||s'|*(sin th + (pi-th) cos th) + sigma_b^2 with
th the angle between raw inputs; placing biases inside hidden layers
would shift that angle, so they are kept out of the hidden stack.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .rng import generator

__all__ = [
    "InitScheme",
    "Architecture",
    "PolicyNet",
    "sample_policy",
    "forward",
    "forward_batch",
    "lipschitz_upper_bound",
    "empirical_lipschitz",
    "net_to_json",
    "net_from_json",
]

_ACTIVATIONS = ("relu", "tanh")

# Fixed stream for power-iteration start vectors; results stay
# deterministic without threading a seed through the public call.
_POWER_ITER_SEED = 0x9E3779B97F4A7C15


@dataclass(frozen=True)
class InitScheme:
    """Weight/bias initialization distribution.

    ``gaussian`` uses the convention documented in the module docstring.
    ``xavier_glorot`` ignores ``sigma_w`` and scales every layer by
    sqrt(2 / (fan_in + fan_out)).
    """

    kind: str = "gaussian"
    sigma_w: float = 1.0
    sigma_b: float = 0.0

    def __post_init__(self):
        if self.kind not in ("gaussian", "xavier_glorot"):
            raise ValueError(f"unknown init kind {self.kind!r}")
        if self.kind == "gaussian" and not self.sigma_w > 0:
            raise ValueError("sigma_w must be positive for gaussian init")
        if self.sigma_b < 0:
            raise ValueError("sigma_b must be nonnegative")


@dataclass(frozen=True)
class Architecture:
    """Layer sizes and hidden activation of a feedforward policy."""

    input_dim: int
    hidden: tuple[int, ...]
    output_dim: int
    activation: str = "relu"

    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        if self.input_dim < 1 or self.output_dim < 1:
            raise ValueError("input_dim and output_dim must be positive")
        if not self.hidden or any(h < 1 for h in self.hidden):
            raise ValueError("hidden must be a nonempty list of positive widths")
        if self.activation not in _ACTIVATIONS:
            raise ValueError(f"activation must be one of {_ACTIVATIONS}")

    @cached_property
    def layer_dims(self) -> tuple[tuple[int, int], ...]:
        """(fan_out, fan_in) for each affine layer, input to output."""
        sizes = (self.input_dim, *self.hidden, self.output_dim)
        return tuple((sizes[i + 1], sizes[i]) for i in range(len(sizes) - 1))


@dataclass(frozen=True)
class PolicyNet:
    """Immutable realized network: (weight, bias) per affine layer."""

    arch: Architecture
    layers: tuple[tuple[np.ndarray, np.ndarray], ...]
    seed: int = 0

    def __post_init__(self):
        dims = self.arch.layer_dims
        if len(self.layers) != len(dims):
            raise ValueError("layer count does not match architecture")
        for (w, b), (out, inp) in zip(self.layers, dims):
            if w.shape != (out, inp) or b.shape != (out,):
                raise ValueError(
                    f"layer shape {w.shape}/{b.shape} does not chain with ({out},{inp})"
                )


def _layer_stds(arch: Architecture, init: InitScheme) -> list[float]:
    stds = []
    for i, (out, inp) in enumerate(arch.layer_dims):
        if init.kind == "xavier_glorot":
            stds.append(float(np.sqrt(2.0 / (inp + out))))
        elif i == 0:
            stds.append(init.sigma_w)
        else:
            stds.append(float(np.sqrt(2.0 / inp)))
    return stds


def sample_policy(arch: Architecture, init: InitScheme, seed: int) -> PolicyNet:
    """Draw a network from the initialization distribution.

    Bit-identical for identical ``(arch, init, seed)``.  Weights are drawn
    layer by layer from the network's own stream; hidden biases are zero
    and the output bias has standard deviation ``init.sigma_b``.
    """
    rng = generator(seed)
    stds = _layer_stds(arch, init)
    dims = arch.layer_dims
    layers = []
    for i, ((out, inp), std) in enumerate(zip(dims, stds)):
        w = rng.standard_normal((out, inp)) * std
        if i == len(dims) - 1 and init.sigma_b > 0:
            b = rng.standard_normal(out) * init.sigma_b
        else:
            b = np.zeros(out)
        layers.append((w, b))
    return PolicyNet(arch=arch, layers=tuple(layers), seed=int(seed))


def _activate(x: np.ndarray, activation: str) -> np.ndarray:
    if activation == "relu":
        return np.maximum(x, 0.0)
    return np.tanh(x)


def forward(net: PolicyNet, s: np.ndarray) -> np.ndarray:
    """Evaluate the policy at a single state."""
    s = np.asarray(s, dtype=float)
    if s.shape != (net.arch.input_dim,):
        raise ValueError(f"state shape {s.shape} != ({net.arch.input_dim},)")
    h = s
    last = len(net.layers) - 1
    for i, (w, b) in enumerate(net.layers):
        h = w @ h + b
        if i != last:
            h = _activate(h, net.arch.activation)
    return h


def forward_batch(net: PolicyNet, states: np.ndarray) -> np.ndarray:
    """Evaluate the policy on a batch of states, shape (n, input_dim)."""
    states = np.asarray(states, dtype=float)
    if states.ndim != 2 or states.shape[1] != net.arch.input_dim:
        raise ValueError(f"batch shape {states.shape} incompatible with input_dim")
    h = states
    last = len(net.layers) - 1
    for i, (w, b) in enumerate(net.layers):
        h = h @ w.T + b
        if i != last:
            h = _activate(h, net.arch.activation)
    return h


def _spectral_norm(w: np.ndarray, rng: np.random.Generator,
                   rel_tol: float = 1e-6, min_iters: int = 50,
                   max_iters: int = 10_000) -> float:
    """Largest singular value by power iteration on w.T @ w."""
    n = w.shape[1]
    v = rng.standard_normal(n)
    nv = np.linalg.norm(v)
    if nv == 0.0:  # pragma: no cover - zero-probability draw
        v = np.ones(n)
        nv = np.sqrt(n)
    v /= nv
    sigma = 0.0
    for it in range(max_iters):
        u = w @ v
        nu = np.linalg.norm(u)
        if nu == 0.0:
            return 0.0
        v = w.T @ (u / nu)
        nv = np.linalg.norm(v)
        if nv == 0.0:
            return 0.0
        v /= nv
        prev, sigma = sigma, nu
        if it + 1 >= min_iters and abs(sigma - prev) <= rel_tol * sigma:
            break
    return float(sigma)


def lipschitz_upper_bound(net: PolicyNet) -> float:
    """Certified Lipschitz upper bound: product of layer spectral norms.

    Valid because ReLU and tanh are 1-Lipschitz.  The product of operator
    norms dominates the Lipschitz constant of the composition for any
    realized weights.
    """
    bound = 1.0
    for i, (w, _) in enumerate(net.layers):
        rng = generator(_POWER_ITER_SEED, i)
        sig = _spectral_norm(w, rng)
        if sig == 0.0:
            return 0.0
        bound *= sig
    return float(bound)


def empirical_lipschitz(net: PolicyNet, center: np.ndarray, radius: float,
                        n_pairs: int, seed: int) -> float:
    """Max sampled difference quotient over pairs in a ball.

    A lower bound on the local Lipschitz constant; by construction it
    never exceeds ``lipschitz_upper_bound``.
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    if n_pairs < 1:
        raise ValueError("n_pairs must be >= 1")
    center = np.asarray(center, dtype=float)
    d = net.arch.input_dim
    rng = generator(seed)
    dirs = rng.standard_normal((2 * n_pairs, d))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    radii = radius * rng.random(2 * n_pairs) ** (1.0 / d)
    pts = center + radii[:, None] * dirs
    xs, ys = pts[:n_pairs], pts[n_pairs:]
    fx, fy = forward_batch(net, xs), forward_batch(net, ys)
    gaps = np.linalg.norm(xs - ys, axis=1)
    keep = gaps > 0
    if not np.any(keep):
        return 0.0
    ratios = np.linalg.norm(fx - fy, axis=1)[keep] / gaps[keep]
    return float(ratios.max())


def net_to_json(net: PolicyNet) -> str:
    """Debug dump of a realized network as JSON."""
    obj = {
        "arch": {
            "input_dim": net.arch.input_dim,
            "hidden": list(net.arch.hidden),
            "output_dim": net.arch.output_dim,
            "activation": net.arch.activation,
        },
        "seed": net.seed,
        "layers": [{"w": w.tolist(), "b": b.tolist()} for w, b in net.layers],
    }
    return json.dumps(obj, sort_keys=True)


def net_from_json(text: str) -> PolicyNet:
    obj = json.loads(text)
    arch = Architecture(
        input_dim=obj["arch"]["input_dim"],
        hidden=tuple(obj["arch"]["hidden"]),
        output_dim=obj["arch"]["output_dim"],
        activation=obj["arch"]["activation"],
    )
    layers = tuple(
        (np.asarray(layer["w"], dtype=float), np.asarray(layer["b"], dtype=float))
        for layer in obj["layers"]
    )
    return PolicyNet(arch=arch, layers=layers, seed=int(obj["seed"]))
