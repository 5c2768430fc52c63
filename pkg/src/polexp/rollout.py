"""Trajectory generation under the four policy regimes.

Modes:

* ``fixed``: one network drives the whole trajectory (ballistic regime).
* ``per_step_resample``: an independent network is drawn at every step
  from the initialization distribution (diffusive regime).
* ``per_step_gp``: the wide-network idealization of per-step resampling;
  each action is drawn from N(0, Sigma(s_t) * I).  Because a per-step
  policy is only ever queried at a single state, the one-point marginal
  of the GP is the exact sampling distribution.
* ``hybrid``: fixed for the first ``n_switch`` steps, then per-step
  resampling.
* ``stochastic_reset``: the current fixed network is replaced by a fresh
  draw with probability ``schedule(t)`` at each step and kept otherwise.

Seed discipline: trajectory ``i`` of an ensemble uses
``derive_seed(master_seed, i)``; within a trajectory, the step-``t``
policy draw uses sub-stream ``(STEP, t)``, the trajectory's fixed net
``(NET,)``, reset coins ``(COIN,)`` and GP noise ``(GP,)``.  Modes that
share a prefix of this scheme are therefore bit-comparable: hybrid with
``n_switch=0`` reproduces per-step resampling exactly, ``n_switch=T``
reproduces the fixed rollout, and the constant schedules 0/1 reproduce
fixed/per-step resampling.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .env import EnvSpec, step, step_batch
from .nngp import DiffusionConvention, KernelSpec, PI_NORMALIZED
from .policy import Architecture, InitScheme, PolicyNet, forward, sample_policy
from .rng import derive_seed, generator
from .util import fnv1a64

__all__ = [
    "RolloutMode",
    "ResetSchedule",
    "Trajectory",
    "Ensemble",
    "rollout_fixed",
    "rollout_resample",
    "rollout_gp",
    "rollout_hybrid",
    "rollout_stochastic_reset",
    "run_ensemble",
    "run_gp_radial_snapshots",
    "ensemble_to_csv",
]

MODE_KINDS = ("fixed", "per_step_resample", "per_step_gp", "hybrid", "stochastic_reset")

# Sub-stream tags within one trajectory seed.
_STEP = 0
_NET = 1
_COIN = 2
_GP = 3


@dataclass(frozen=True)
class ResetSchedule:
    """Reset probability per step: constant p0 or a linear ramp p0 -> p1."""

    kind: str = "constant"
    p0: float = 0.0
    p1: float = 0.0

    def __post_init__(self):
        if self.kind not in ("constant", "linear"):
            raise ValueError(f"unknown schedule kind {self.kind!r}")
        for p in (self.p0, self.p1):
            if not 0.0 <= p <= 1.0:
                raise ValueError("reset probabilities must lie in [0, 1]")

    def at(self, t: int, horizon: int) -> float:
        if self.kind == "constant" or horizon <= 1:
            return self.p0
        return self.p0 + (self.p1 - self.p0) * (t / (horizon - 1))


@dataclass(frozen=True)
class RolloutMode:
    kind: str
    n_switch: int = 0
    schedule: ResetSchedule | None = None

    def __post_init__(self):
        if self.kind not in MODE_KINDS:
            raise ValueError(f"kind must be one of {MODE_KINDS}")
        if self.n_switch < 0:
            raise ValueError("n_switch must be nonnegative")


@dataclass(frozen=True)
class Trajectory:
    """State/action record with everything needed to replay it."""

    states: np.ndarray  # (T+1, d)
    actions: np.ndarray  # (T, d)
    mode: RolloutMode
    seed: int
    policy_seeds: tuple[int, ...] = ()

    @property
    def horizon(self) -> int:
        return self.actions.shape[0]


@dataclass(frozen=True)
class Ensemble:
    trajectories: tuple[Trajectory, ...]
    env: EnvSpec
    master_seed: int
    config_hash: str

    def states_array(self) -> np.ndarray:
        """All states stacked, shape (N, T+1, d)."""
        return np.stack([tr.states for tr in self.trajectories])


def _check_s0(env: EnvSpec, s0: np.ndarray) -> np.ndarray:
    s0 = np.asarray(s0, dtype=float)
    if s0.shape != (env.dim,):
        raise ValueError(f"s0 shape {s0.shape} != ({env.dim},)")
    return s0


def rollout_fixed(net: PolicyNet, env: EnvSpec, s0: np.ndarray, T: int) -> Trajectory:
    """Roll one network forward deterministically for T steps."""
    s0 = _check_s0(env, s0)
    if net.arch.input_dim != env.dim or net.arch.output_dim != env.dim:
        raise ValueError("policy dims do not match the environment")
    states = np.empty((T + 1, env.dim))
    actions = np.empty((T, env.dim))
    states[0] = s0
    s = s0
    for t in range(T):
        a = forward(net, s)
        s = step(env, s, a)
        actions[t] = a
        states[t + 1] = s
    return Trajectory(states, actions, RolloutMode("fixed"), int(net.seed), ())


def rollout_resample(
    arch: Architecture,
    init: InitScheme,
    env: EnvSpec,
    s0: np.ndarray,
    T: int,
    seed: int,
) -> Trajectory:
    """Draw a fresh network at every step (independent sub-seeds)."""
    s0 = _check_s0(env, s0)
    states = np.empty((T + 1, env.dim))
    actions = np.empty((T, env.dim))
    states[0] = s0
    s = s0
    seeds = []
    for t in range(T):
        step_seed = derive_seed(seed, _STEP, t)
        net = sample_policy(arch, init, step_seed)
        a = forward(net, s)
        s = step(env, s, a)
        seeds.append(step_seed)
        actions[t] = a
        states[t + 1] = s
    return Trajectory(states, actions, RolloutMode("per_step_resample"), int(seed), tuple(seeds))


def _gp_sigma2(kspec: KernelSpec, convention: DiffusionConvention, states: np.ndarray) -> np.ndarray:
    if kspec.family == "rbf":
        return np.full(states.shape[0], kspec.sigma_w2 + kspec.sigma_b2)
    radial = kspec.sigma_w2 / np.pi if convention.kind == "pi_normalized" else kspec.sigma_w2
    r2 = np.einsum("nd,nd->n", states, states)
    return kspec.sigma_b2 + radial * r2


def _gp_walk(
    kspec: KernelSpec,
    convention: DiffusionConvention,
    env: EnvSpec,
    s0: np.ndarray,
    T: int,
    traj_seeds: Sequence[int],
    keep_paths: bool = True,
    snapshot_times: Sequence[int] = (),
) -> tuple[np.ndarray | None, np.ndarray | None, dict[int, np.ndarray]]:
    """Batched GP random walk; one noise stream per trajectory."""
    n = len(traj_seeds)
    noise = np.stack(
        [generator(sd, _GP).standard_normal((T, env.dim)) for sd in traj_seeds]
    )
    cur = np.tile(s0, (n, 1))
    states = actions = None
    if keep_paths:
        states = np.empty((n, T + 1, env.dim))
        actions = np.empty((n, T, env.dim))
        states[:, 0] = cur
    want = set(int(t) for t in snapshot_times)
    snaps: dict[int, np.ndarray] = {}
    if 0 in want:
        snaps[0] = np.linalg.norm(cur, axis=1)
    for t in range(T):
        sig2 = _gp_sigma2(kspec, convention, cur)
        acts = np.sqrt(sig2)[:, None] * noise[:, t, :]
        cur = step_batch(env, cur, acts)
        if keep_paths:
            actions[:, t] = acts
            states[:, t + 1] = cur
        if t + 1 in want:
            snaps[t + 1] = np.linalg.norm(cur, axis=1)
    return states, actions, snaps


def rollout_gp(
    kspec: KernelSpec,
    convention: DiffusionConvention,
    env: EnvSpec,
    s0: np.ndarray,
    T: int,
    seed: int,
) -> Trajectory:
    """Per-step action draws from the wide-limit one-point marginal."""
    s0 = _check_s0(env, s0)
    states, actions, _ = _gp_walk(kspec, convention, env, s0, T, [int(seed)])
    return Trajectory(states[0], actions[0], RolloutMode("per_step_gp"), int(seed), ())


def rollout_hybrid(
    net: PolicyNet,
    arch: Architecture,
    init: InitScheme,
    env: EnvSpec,
    s0: np.ndarray,
    T: int,
    n_switch: int,
    seed: int,
) -> Trajectory:
    """Fixed network for steps < n_switch, per-step resampling after."""
    if not 0 <= n_switch <= T:
        raise ValueError("n_switch must lie in [0, T]")
    s0 = _check_s0(env, s0)
    states = np.empty((T + 1, env.dim))
    actions = np.empty((T, env.dim))
    states[0] = s0
    s = s0
    seeds = []
    for t in range(T):
        if t < n_switch:
            current = net
            seeds.append(int(net.seed))
        else:
            step_seed = derive_seed(seed, _STEP, t)
            current = sample_policy(arch, init, step_seed)
            seeds.append(step_seed)
        a = forward(current, s)
        s = step(env, s, a)
        actions[t] = a
        states[t + 1] = s
    mode = RolloutMode("hybrid", n_switch=n_switch)
    return Trajectory(states, actions, mode, int(seed), tuple(seeds))


def rollout_stochastic_reset(
    net0: PolicyNet,
    arch: Architecture,
    init: InitScheme,
    env: EnvSpec,
    s0: np.ndarray,
    T: int,
    schedule: ResetSchedule | Callable[[int], float],
    seed: int,
) -> Trajectory:
    """Replace the current network by a fresh draw with probability schedule(t)."""
    s0 = _check_s0(env, s0)
    states = np.empty((T + 1, env.dim))
    actions = np.empty((T, env.dim))
    states[0] = s0
    coins = generator(seed, _COIN).random(T)
    current = net0
    s = s0
    seeds = []
    for t in range(T):
        p = schedule.at(t, T) if isinstance(schedule, ResetSchedule) else float(schedule(t))
        if coins[t] < p:
            current = sample_policy(arch, init, derive_seed(seed, _STEP, t))
        seeds.append(int(current.seed))
        a = forward(current, s)
        s = step(env, s, a)
        actions[t] = a
        states[t + 1] = s
    mode = RolloutMode(
        "stochastic_reset",
        schedule=schedule if isinstance(schedule, ResetSchedule) else None,
    )
    return Trajectory(states, actions, mode, int(seed), tuple(seeds))


def _ensemble_hash(mode: RolloutMode, env: EnvSpec, s0: np.ndarray, T: int, N: int,
                   master_seed: int) -> str:
    desc = f"{mode!r}|{env!r}|{s0.tolist()!r}|{T}|{N}|{master_seed}"
    return f"{fnv1a64(desc.encode()):016x}"


def run_ensemble(
    mode: RolloutMode,
    env: EnvSpec,
    s0: np.ndarray,
    T: int,
    N: int,
    master_seed: int,
    *,
    arch: Architecture | None = None,
    init: InitScheme | None = None,
    kspec: KernelSpec | None = None,
    convention: DiffusionConvention = PI_NORMALIZED,
) -> Ensemble:
    """N independent trajectories with seeds split from ``master_seed``.

    Trajectory ``i`` depends only on ``derive_seed(master_seed, i)``, so
    results are independent of execution order and chunking.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    s0 = _check_s0(env, s0)
    traj_seeds = [derive_seed(master_seed, i) for i in range(N)]
    kind = mode.kind
    if kind in ("fixed", "hybrid", "stochastic_reset", "per_step_resample"):
        if arch is None or init is None:
            raise ValueError(f"mode {kind!r} requires arch and init")
    trajectories: list[Trajectory] = []
    if kind == "per_step_gp":
        if kspec is None:
            raise ValueError("per_step_gp requires a kernel spec")
        chunk = max(1, min(N, _GP_CHUNK))
        for start in range(0, N, chunk):
            seeds = traj_seeds[start : start + chunk]
            states, actions, _ = _gp_walk(kspec, convention, env, s0, T, seeds)
            for j, sd in enumerate(seeds):
                trajectories.append(
                    Trajectory(states[j], actions[j], mode, int(sd), ())
                )
    else:
        for sd in traj_seeds:
            if kind == "fixed":
                net = sample_policy(arch, init, derive_seed(sd, _NET))
                trajectories.append(rollout_fixed(net, env, s0, T))
            elif kind == "per_step_resample":
                trajectories.append(rollout_resample(arch, init, env, s0, T, sd))
            elif kind == "hybrid":
                net = sample_policy(arch, init, derive_seed(sd, _NET))
                trajectories.append(
                    rollout_hybrid(net, arch, init, env, s0, T, mode.n_switch, sd)
                )
            else:
                net0 = sample_policy(arch, init, derive_seed(sd, _NET))
                schedule = mode.schedule if mode.schedule is not None else ResetSchedule()
                trajectories.append(
                    rollout_stochastic_reset(net0, arch, init, env, s0, T, schedule, sd)
                )
    return Ensemble(
        trajectories=tuple(trajectories),
        env=env,
        master_seed=int(master_seed),
        config_hash=_ensemble_hash(mode, env, s0, T, N, master_seed),
    )


_GP_CHUNK = 512


def run_gp_radial_snapshots(
    kspec: KernelSpec,
    convention: DiffusionConvention,
    env: EnvSpec,
    s0: np.ndarray,
    T: int,
    N: int,
    master_seed: int,
    snapshot_times: Sequence[int],
) -> dict[int, np.ndarray]:
    """Radii |s_t| at selected times for a GP ensemble, without storing paths.

    Streams the same walk as ``run_ensemble`` (identical per-trajectory
    seeds), so snapshots agree bit-for-bit with the stored-path route.
    """
    s0 = _check_s0(env, s0)
    out: dict[int, list[np.ndarray]] = {int(t): [] for t in snapshot_times}
    chunk = max(1, min(N, _GP_CHUNK))
    for start in range(0, N, chunk):
        seeds = [derive_seed(master_seed, i) for i in range(start, min(start + chunk, N))]
        _, _, snaps = _gp_walk(
            kspec, convention, env, s0, T, seeds,
            keep_paths=False, snapshot_times=snapshot_times,
        )
        for t, radii in snaps.items():
            out[t].append(radii)
    return {t: np.concatenate(parts) for t, parts in out.items()}


def ensemble_to_csv(ensemble: Ensemble, fh) -> None:
    """Write trajectories in long form with a metadata header line."""
    mode = ensemble.trajectories[0].mode.kind if ensemble.trajectories else "?"
    fh.write(
        f"# config_hash={ensemble.config_hash}, mode={mode}, seed={ensemble.master_seed}\n"
    )
    d = ensemble.env.dim
    cols = ["traj_id", "t"] + [f"s_{k}" for k in range(d)] + [f"a_{k}" for k in range(d)]
    fh.write(",".join(cols) + "\n")
    for i, tr in enumerate(ensemble.trajectories):
        T = tr.horizon
        for t in range(T + 1):
            svals = [repr(float(x)) for x in tr.states[t]]
            avals = [repr(float(x)) for x in tr.actions[t]] if t < T else [""] * d
            fh.write(",".join([str(i), str(t)] + svals + avals) + "\n")
