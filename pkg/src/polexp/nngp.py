"""Infinite-width kernels and the induced action statistics.

In the wide limit, a randomly initialized one-hidden-layer ReLU policy is
a zero-mean Gaussian process whose covariance is the arc-cosine kernel

    K(s, s') = (sigma_w^2 / pi) |s||s'| (sin th + (pi - th) cos th) + sigma_b^2,
    cos th = <s, s'> / (|s||s'|).

This module evaluates that kernel (plus an RBF comparison kernel), builds
PSD Gram matrices, draws exact GP action samples, and estimates the same
covariance by Monte Carlo over finite-width networks so the two routes
can be checked against each other.

The per-step action variance at a state ("diffusion coefficient") is
exposed under two conventions that differ by a factor of pi in the
radial term; both are implemented and every result records which one
was used.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .policy import Architecture, InitScheme, forward_batch, sample_policy
from .rng import derive_seed, generator

__all__ = [
    "KernelSpec",
    "DiffusionConvention",
    "PI_NORMALIZED",
    "KERNEL_DIAGONAL",
    "kernel",
    "diffusion_coefficient",
    "kernel_matrix",
    "cholesky_with_jitter",
    "gp_sample_actions",
    "mc_covariance",
]

_FAMILIES = ("relu_arccos", "rbf")


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family with variance parameters.

    ``rbf_lengthscale`` is only consulted by the ``rbf`` family.
    """

    family: str = "relu_arccos"
    sigma_w2: float = 1.0
    sigma_b2: float = 0.0
    rbf_lengthscale: float = 1.0

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise ValueError(f"family must be one of {_FAMILIES}")
        if not self.sigma_w2 > 0:
            raise ValueError("sigma_w2 must be positive")
        if self.sigma_b2 < 0:
            raise ValueError("sigma_b2 must be nonnegative")
        if not self.rbf_lengthscale > 0:
            raise ValueError("rbf_lengthscale must be positive")


@dataclass(frozen=True)
class DiffusionConvention:
    """Radial normalization of the per-step action variance Sigma(s).

    ``pi_normalized``:  Sigma(s) = sigma_b^2 + (sigma_w^2 / pi) |s|^2
    ``kernel_diagonal``: Sigma(s) = K(s, s) = sigma_b^2 + sigma_w^2 |s|^2

    The two differ by the factor pi applied to the radial term; the
    pi-normalized form is the package default.
    """

    kind: str = "pi_normalized"

    def __post_init__(self):
        if self.kind not in ("pi_normalized", "kernel_diagonal"):
            raise ValueError(f"unknown diffusion convention {self.kind!r}")


PI_NORMALIZED = DiffusionConvention("pi_normalized")
KERNEL_DIAGONAL = DiffusionConvention("kernel_diagonal")


def _check_pair(s: np.ndarray, s2: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    s = np.asarray(s, dtype=float)
    s2 = np.asarray(s2, dtype=float)
    if s.shape != s2.shape or s.ndim != 1:
        raise ValueError(f"state shapes {s.shape} and {s2.shape} must match")
    return s, s2


def kernel(spec: KernelSpec, s: np.ndarray, s2: np.ndarray) -> float:
    """Covariance K(s, s') between actions at two states."""
    s, s2 = _check_pair(s, s2)
    if spec.family == "rbf":
        gap2 = float(np.dot(s - s2, s - s2))
        return float(
            spec.sigma_w2 * np.exp(-gap2 / (2.0 * spec.rbf_lengthscale**2))
            + spec.sigma_b2
        )
    n1 = float(np.linalg.norm(s))
    n2 = float(np.linalg.norm(s2))
    if n1 == 0.0 or n2 == 0.0:
        # Continuous limit of the angular factor as either norm -> 0.
        return float(spec.sigma_b2)
    cos_th = float(np.clip(np.dot(s, s2) / (n1 * n2), -1.0, 1.0))
    th = float(np.arccos(cos_th))
    angular = np.sin(th) + (np.pi - th) * cos_th
    return float(spec.sigma_w2 / np.pi * n1 * n2 * angular + spec.sigma_b2)


def diffusion_coefficient(
    spec: KernelSpec,
    convention: DiffusionConvention,
    s: np.ndarray,
) -> float:
    """Per-step action variance Sigma(s) at a state."""
    s = np.asarray(s, dtype=float)
    if spec.family == "rbf":
        return float(spec.sigma_w2 + spec.sigma_b2)
    r2 = float(np.dot(s, s))
    if convention.kind == "pi_normalized":
        return float(spec.sigma_b2 + spec.sigma_w2 / np.pi * r2)
    return float(spec.sigma_b2 + spec.sigma_w2 * r2)


def kernel_matrix(
    spec: KernelSpec,
    states: list[np.ndarray] | np.ndarray,
    jitter: float = 0.0,
) -> np.ndarray:
    """Gram matrix K(s_i, s_j) + jitter * I over a batch of states."""
    states = [np.asarray(s, dtype=float) for s in states]
    if not states:
        raise ValueError("states must be nonempty")
    n = len(states)
    out = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            out[i, j] = out[j, i] = kernel(spec, states[i], states[j])
    if jitter:
        out[np.diag_indices(n)] += jitter
    return out


def cholesky_with_jitter(
    mat: np.ndarray,
    initial_jitter: float = 1e-10,
    max_doublings: int = 8,
) -> tuple[np.ndarray, float]:
    """Cholesky factor with escalating diagonal jitter.

    Tries the matrix as-is, then adds ``initial_jitter`` doubled up to
    ``max_doublings`` times.  Returns (lower factor, jitter used) or
    raises with the final jitter on persistent failure.
    """
    try:
        return np.linalg.cholesky(mat), 0.0
    except np.linalg.LinAlgError:
        pass
    jitter = initial_jitter
    eye = np.eye(mat.shape[0])
    for _ in range(max_doublings + 1):
        try:
            return np.linalg.cholesky(mat + jitter * eye), jitter
        except np.linalg.LinAlgError:
            jitter *= 2.0
    raise np.linalg.LinAlgError(
        f"matrix not factorizable after jitter escalation to {jitter / 2.0:g}"
    )


def gp_sample_actions(
    spec: KernelSpec,
    states: list[np.ndarray] | np.ndarray,
    action_dim: int,
    seed: int,
) -> np.ndarray:
    """Joint GP action draw at a batch of states, shape (n_states, action_dim).

    Output coordinates are i.i.d. N(0, K) across states, matching
    independent output-layer weights (scalar kernel times identity).
    """
    if action_dim < 1:
        raise ValueError("action_dim must be positive")
    gram = kernel_matrix(spec, states)
    if np.allclose(gram, 0.0):
        return np.zeros((gram.shape[0], action_dim))
    low, _ = cholesky_with_jitter(gram)
    z = generator(seed).standard_normal((gram.shape[0], action_dim))
    return low @ z


def mc_covariance(
    arch: Architecture,
    init: InitScheme,
    s: np.ndarray,
    s2: np.ndarray,
    n_draws: int,
    seed: int,
) -> float:
    """Monte Carlo Cov[pi(s)_1, pi(s')_1] over independent finite nets."""
    if n_draws < 1:
        raise ValueError("n_draws must be >= 1")
    s, s2 = _check_pair(s, s2)
    pair = np.stack([s, s2])
    ys = np.empty((n_draws, 2))
    for k in range(n_draws):
        net = sample_policy(arch, init, derive_seed(seed, k))
        ys[k] = forward_batch(net, pair)[:, 0]
    cov = np.cov(ys[:, 0], ys[:, 1])[0, 1]
    return float(cov)
