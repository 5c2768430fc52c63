"""Deterministic transition dynamics with controllable smoothness.

The base map is the linear integrator s' = L_s * s + L_a * a.  Three
optional truncations are applied in order:

1. locality cap: the displacement s' - s is rescaled so its norm stays
   strictly below ``delta_cap`` (radial projection, which is 1-Lipschitz,
   so the nominal constants remain valid bounds);
2. reflecting box bounds, folding each coordinate back into [lo, hi];
3. hallway barrier: a slab wall at x_1 in [wall_x, wall_x + thickness]
   with a gap around ``gap_center`` in the remaining coordinates.  Moves
   whose crossing point lies outside the gap stop just short of the wall
   face, keeping the motion parallel to the wall (slide).

All maps are pure; specs are immutable and safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["HallwaySpec", "EnvSpec", "step", "step_batch", "lipschitz_constants"]

# Strict-inequality margin for the locality cap and wall stop-off.
_CAP_SHRINK = 1.0 - 1e-9
_WALL_MARGIN = 1e-9


@dataclass(frozen=True)
class HallwaySpec:
    """Slab wall perpendicular to the first axis, with a centered gap."""

    wall_x: float
    gap_center: tuple[float, ...]
    gap_halfwidth: float
    thickness: float = 0.05

    def __post_init__(self):
        object.__setattr__(self, "gap_center", tuple(float(c) for c in self.gap_center))
        if not self.gap_halfwidth > 0:
            raise ValueError("gap_halfwidth must be positive")
        if not self.thickness > 0:
            raise ValueError("thickness must be positive")

    @property
    def x_lo(self) -> float:
        return self.wall_x

    @property
    def x_hi(self) -> float:
        return self.wall_x + self.thickness

    def in_gap(self, lateral: np.ndarray) -> bool:
        gap = np.asarray(lateral, dtype=float) - np.asarray(self.gap_center)
        return float(np.dot(gap, gap)) <= self.gap_halfwidth**2

    def clamp_to_gap(self, lateral: np.ndarray) -> np.ndarray:
        """Project lateral coordinates onto the gap ball."""
        center = np.asarray(self.gap_center)
        off = np.asarray(lateral, dtype=float) - center
        norm = float(np.linalg.norm(off))
        if norm <= self.gap_halfwidth:
            return np.asarray(lateral, dtype=float)
        return center + off * (self.gap_halfwidth / norm)


@dataclass(frozen=True)
class EnvSpec:
    """Transition-map constants and optional truncations."""

    dim: int
    L_s: float = 1.0
    L_a: float = 1.0
    delta_cap: float | None = None
    barrier: HallwaySpec | None = None
    bounds: tuple[float, float] | None = None

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.delta_cap is not None and not self.delta_cap > 0:
            raise ValueError("delta_cap must be positive when set")
        if self.barrier is not None and len(self.barrier.gap_center) != self.dim - 1:
            raise ValueError("gap_center must have dim-1 coordinates")
        if self.bounds is not None:
            lo, hi = self.bounds
            if not lo < hi:
                raise ValueError("bounds must satisfy lo < hi")
            object.__setattr__(self, "bounds", (float(lo), float(hi)))

    @property
    def truncations_active(self) -> bool:
        """True when cap/bounds/barrier modify the nominal linear map."""
        return (
            self.delta_cap is not None
            or self.barrier is not None
            or self.bounds is not None
        )


def lipschitz_constants(spec: EnvSpec) -> tuple[float, float]:
    """Nominal (L_s, L_a) of the un-truncated map.

    With a cap, bounds, or barrier active these remain valid upper bounds
    (every truncation is a 1-Lipschitz projection); check
    ``spec.truncations_active`` to see whether they are nominal.
    """
    return spec.L_s, spec.L_a


def _reflect(x: np.ndarray, lo: float, hi: float) -> np.ndarray:
    period = 2.0 * (hi - lo)
    y = np.mod(x - lo, period)
    y = np.where(y > hi - lo, period - y, y)
    return lo + y


def _resolve_barrier(bar: HallwaySpec, s: np.ndarray, cand: np.ndarray) -> np.ndarray:
    x0, x1 = float(s[0]), float(cand[0])
    lo, hi = bar.x_lo, bar.x_hi
    if lo <= x0 <= hi:
        # Inside the corridor; lateral motion may not leave the gap.
        out = cand.copy()
        out[1:] = bar.clamp_to_gap(out[1:])
        return out
    if x0 < lo:
        face, exit_face = lo, hi
        crosses = x1 >= lo
        through = x1 > hi
        stop_x = lo - _WALL_MARGIN
    else:
        face, exit_face = hi, lo
        crosses = x1 <= hi
        through = x1 < lo
        stop_x = hi + _WALL_MARGIN
    if not crosses:
        return cand
    lam = (face - x0) / (x1 - x0)
    lateral = s[1:] + lam * (cand[1:] - s[1:])
    if bar.in_gap(lateral):
        if through:
            lam2 = (exit_face - x0) / (x1 - x0)
            lateral2 = s[1:] + lam2 * (cand[1:] - s[1:])
            if bar.in_gap(lateral2):
                return cand
            # Enters through the gap but hits the corridor side wall.
            blocked = cand.copy()
            blocked[0] = stop_x
            return blocked
        out = cand.copy()
        out[1:] = bar.clamp_to_gap(out[1:])
        return out
    blocked = cand.copy()
    blocked[0] = stop_x
    return blocked


def step(spec: EnvSpec, s: np.ndarray, a: np.ndarray) -> np.ndarray:
    """One transition s -> s' under the spec's dynamics."""
    s = np.asarray(s, dtype=float)
    a = np.asarray(a, dtype=float)
    if s.shape != (spec.dim,) or a.shape != (spec.dim,):
        raise ValueError(f"state/action shapes {s.shape}/{a.shape} != ({spec.dim},)")
    cand = spec.L_s * s + spec.L_a * a
    if spec.delta_cap is not None:
        disp = cand - s
        norm = float(np.linalg.norm(disp))
        limit = spec.delta_cap * _CAP_SHRINK
        if norm > limit:
            cand = s + disp * (limit / norm)
    if spec.bounds is not None:
        cand = _reflect(cand, *spec.bounds)
    if spec.barrier is not None:
        cand = _resolve_barrier(spec.barrier, s, cand)
    return cand


def step_batch(spec: EnvSpec, states: np.ndarray, actions: np.ndarray) -> np.ndarray:
    """Vectorized ``step`` over rows; bit-identical to the scalar path."""
    states = np.asarray(states, dtype=float)
    actions = np.asarray(actions, dtype=float)
    if states.shape != actions.shape or states.ndim != 2 or states.shape[1] != spec.dim:
        raise ValueError("states/actions must both have shape (n, dim)")
    cand = spec.L_s * states + spec.L_a * actions
    if spec.delta_cap is not None:
        disp = cand - states
        norms = np.linalg.norm(disp, axis=1)
        limit = spec.delta_cap * _CAP_SHRINK
        over = norms > limit
        if np.any(over):
            scale = np.ones_like(norms)
            scale[over] = limit / norms[over]
            cand = states + disp * scale[:, None]
    if spec.bounds is not None:
        cand = _reflect(cand, *spec.bounds)
    if spec.barrier is not None:
        bar = spec.barrier
        # Only segments overlapping the slab in x can be affected.
        near = (np.minimum(states[:, 0], cand[:, 0]) <= bar.x_hi) & (
            np.maximum(states[:, 0], cand[:, 0]) >= bar.x_lo
        )
        for i in np.nonzero(near)[0]:
            cand[i] = _resolve_barrier(bar, states[i], cand[i])
    return cand
