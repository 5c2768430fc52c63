"""Quantitative diagnostics for rollouts.

Covers the ballistic side (drift estimates, the quadratic deviation bound
for unit state-Lipschitz dynamics and its geometric generalization,
validity horizons, recurrence oracles) and the diffusive side (mean
squared displacement exponents, radial histograms, heavy-tail slope fits,
hallway passage rates) plus the switching-step heuristic that connects
the two regimes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .env import HallwaySpec
from .fokker_planck import RadialDensity
from .rollout import Ensemble, Trajectory

__all__ = [
    "BallisticReport",
    "TailFit",
    "SwitchWindow",
    "drift_estimate",
    "ballistic_error",
    "quadratic_bound",
    "geometric_bound",
    "contractive_linear_bound",
    "ballistic_bound_check",
    "validity_horizon",
    "recurrence_oracle_quadratic",
    "recurrence_oracle_geometric",
    "msd",
    "msd_exponent",
    "radial_histogram",
    "radial_histogram_from_radii",
    "tail_exponent",
    "wilson_interval",
    "passage_rate",
    "switch_step_heuristic",
]

# Absolute slack for bound-violation checks; absorbs accumulated
# floating-point error over long horizons.
VIOLATION_TOL = 1e-9


@dataclass(frozen=True)
class BallisticReport:
    """Deviation of a trajectory from its straight-line drift prediction."""

    c: np.ndarray
    eps_series: np.ndarray
    bound_series: np.ndarray
    horizon: float
    violations: tuple[int, ...]
    bound_kind: str = "quadratic"

    def to_dict(self) -> dict:
        return {
            "c": [float(x) for x in self.c],
            "eps_series": [float(x) for x in self.eps_series],
            "bound_series": [float(x) for x in self.bound_series],
            "horizon": self.horizon if math.isfinite(self.horizon) else "inf",
            "violations": list(self.violations),
            "bound_kind": self.bound_kind,
        }


@dataclass(frozen=True)
class TailFit:
    """Log-log slope of a radial density over a fitted range."""

    slope: float
    slope_stderr: float
    fit_range: tuple[float, float]
    n_points: int


@dataclass(frozen=True)
class SwitchWindow:
    n_min: int
    n_max: int
    feasible: bool


def drift_estimate(traj: Trajectory, method: str = "first_action") -> np.ndarray:
    """Drift velocity from the first action or the mean of all actions."""
    if traj.actions.shape[0] == 0:
        raise ValueError("trajectory has no actions")
    if method == "first_action":
        return traj.actions[0].copy()
    if method == "mean_action":
        return traj.actions.mean(axis=0)
    raise ValueError(f"unknown drift method {method!r}")


def ballistic_error(traj: Trajectory, c: np.ndarray) -> np.ndarray:
    """eps_t = |s_t - s_0 - c t| for every step of the trajectory."""
    c = np.asarray(c, dtype=float)
    ts = np.arange(traj.states.shape[0])[:, None]
    line = traj.states[0] + c * ts
    return np.linalg.norm(traj.states - line, axis=1)


def quadratic_bound(k: float, eps0: float, t: np.ndarray | int) -> np.ndarray | float:
    """Deviation bound k t^2 / 2 + eps0 for unit state-Lipschitz dynamics."""
    return 0.5 * k * np.asarray(t, dtype=float) ** 2 + eps0


def geometric_bound(A: float, k: float, eps0: float, t) -> np.ndarray | float:
    """Deviation bound k t (A^t - 1)/(A - 1) + eps0 A^t for L_s = A != 1."""
    t = np.asarray(t, dtype=float)
    return k * t * (A**t - 1.0) / (A - 1.0) + eps0 * A**t


def contractive_linear_bound(A: float, k: float, eps0: float, t) -> np.ndarray | float:
    """Looser linear bound k t / (1 - A) + eps0, valid when A < 1."""
    if not A < 1.0:
        raise ValueError("linear bound requires A < 1")
    return k * np.asarray(t, dtype=float) / (1.0 - A) + eps0


def validity_horizon(c_norm: float, delta: float, L_a: float, L_pi: float) -> float:
    """Timescale 2 |c| / (delta L_a L_pi) below which drift dominates."""
    denom = delta * L_a * L_pi
    if denom == 0.0:
        return math.inf
    return 2.0 * c_norm / denom


def ballistic_bound_check(
    traj: Trajectory,
    delta: float,
    L_a: float,
    L_pi: float,
    c: np.ndarray,
    L_s: float = 1.0,
) -> BallisticReport:
    """Check eps_t against the certified deviation bound.

    Requires unit state-Lipschitz dynamics; for L_s != 1 the quadratic
    bound does not apply and a ValueError points at the geometric variant
    (``geometric_bound_check``).
    """
    if L_s != 1.0:
        raise ValueError(
            "quadratic bound requires L_s = 1; use geometric_bound_check"
        )
    c = np.asarray(c, dtype=float)
    eps = ballistic_error(traj, c)
    ts = np.arange(eps.shape[0])
    bound = quadratic_bound(delta * L_a * L_pi, 0.0, ts)
    violations = tuple(int(t) for t in np.nonzero(eps > bound + VIOLATION_TOL)[0])
    horizon = validity_horizon(float(np.linalg.norm(c)), delta, L_a, L_pi)
    return BallisticReport(c, eps, bound, horizon, violations, "quadratic")


def geometric_bound_check(
    traj: Trajectory,
    delta: float,
    L_a: float,
    L_pi: float,
    c: np.ndarray,
    L_s: float,
) -> BallisticReport:
    """Deviation check for L_s != 1 via the geometric-series bound."""
    if L_s == 1.0:
        raise ValueError("use ballistic_bound_check for L_s = 1")
    c = np.asarray(c, dtype=float)
    eps = ballistic_error(traj, c)
    ts = np.arange(eps.shape[0])
    bound = geometric_bound(L_s, delta * L_a * L_pi, 0.0, ts)
    violations = tuple(int(t) for t in np.nonzero(eps > bound + VIOLATION_TOL)[0])
    horizon = validity_horizon(float(np.linalg.norm(c)), delta, L_a, L_pi)
    return BallisticReport(c, eps, bound, horizon, violations, "geometric")


def recurrence_oracle_quadratic(k: float, eps0: float, T: int) -> np.ndarray:
    """Extremal iterates of eps_{t+1} = eps_t + k t, checked against k t^2/2 + eps0."""
    if k < 0 or eps0 < 0:
        raise ValueError("k and eps0 must be nonnegative")
    eps = np.empty(T + 1)
    eps[0] = eps0
    for t in range(T):
        eps[t + 1] = eps[t] + k * t
    bound = quadratic_bound(k, eps0, np.arange(T + 1))
    if np.any(eps > bound + VIOLATION_TOL):  # pragma: no cover - mathematically impossible
        raise RuntimeError("quadratic recurrence bound violated")
    return eps


def recurrence_oracle_geometric(A: float, k: float, eps0: float, T: int) -> np.ndarray:
    """Extremal iterates of eps_{t+1} = A eps_t + k t, checked against the bound.

    The eps0 contribution compounds geometrically, so the dominance check
    uses k t (A^t - 1)/(A - 1) + eps0 A^t; at eps0 = 0 this is the bare
    geometric bound.
    """
    if A <= 0 or A == 1.0:
        raise ValueError("A must be positive and != 1 (A = 1 is the quadratic case)")
    if k < 0 or eps0 < 0:
        raise ValueError("k and eps0 must be nonnegative")
    eps = np.empty(T + 1)
    eps[0] = eps0
    for t in range(T):
        eps[t + 1] = A * eps[t] + k * t
    bound = geometric_bound(A, k, eps0, np.arange(T + 1))
    if np.any(eps > bound * (1 + 1e-12) + VIOLATION_TOL):  # pragma: no cover
        raise RuntimeError("geometric recurrence bound violated")
    return eps


def msd(ensemble: Ensemble) -> np.ndarray:
    """Mean squared displacement E|s_t - s_0|^2 over the ensemble."""
    states = ensemble.states_array()
    disp = states - states[:, :1, :]
    return np.einsum("ntd,ntd->nt", disp, disp).mean(axis=0)


def msd_exponent(series: np.ndarray, t_window: tuple[int, int]) -> tuple[float, float]:
    """Least-squares log-log slope of an MSD series over [t_lo, t_hi]."""
    t_lo, t_hi = int(t_window[0]), int(t_window[1])
    if t_lo < 1 or t_hi > len(series) - 1 or t_lo >= t_hi:
        raise ValueError(f"window {t_window} outside series of length {len(series)}")
    ts = np.arange(t_lo, t_hi + 1)
    vals = np.asarray(series, dtype=float)[ts]
    if np.any(vals <= 0):
        raise ValueError("MSD values in the window must be positive for a log fit")
    return _loglog_fit(ts.astype(float), vals)


def _loglog_fit(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    lx, ly = np.log(x), np.log(y)
    n = len(lx)
    var = lx - lx.mean()
    sxx = float(np.dot(var, var))
    slope = float(np.dot(var, ly - ly.mean()) / sxx)
    icept = float(ly.mean() - slope * lx.mean())
    if n <= 2:
        return slope, 0.0
    resid = ly - (icept + slope * lx)
    stderr = float(np.sqrt(np.dot(resid, resid) / (n - 2) / sxx))
    return slope, stderr


def radial_histogram_from_radii(
    radii: np.ndarray,
    d: int,
    n_bins: int,
    r_max: float,
    spacing: str = "linear",
    r_min: float | None = None,
) -> RadialDensity:
    """Radial density (per d-volume) of sampled radii on [r_min, r_max].

    Bin mass divided by shell volume, normalized over the samples that
    fall inside the range, so the shell integral is exactly 1.
    """
    radii = np.asarray(radii, dtype=float)
    if radii.size == 0:
        raise ValueError("no samples to histogram")
    if spacing == "linear":
        lo = 0.0 if r_min is None else float(r_min)
        edges = np.linspace(lo, r_max, n_bins + 1)
    elif spacing == "log":
        lo = float(r_min) if r_min is not None else max(radii[radii > 0].min(), 1e-12)
        if lo <= 0:
            raise ValueError("log spacing requires r_min > 0")
        edges = np.geomspace(lo, r_max, n_bins + 1)
    else:
        raise ValueError(f"unknown spacing {spacing!r}")
    counts, _ = np.histogram(radii, bins=edges)
    n_in = counts.sum()
    if n_in == 0:
        raise ValueError("no samples inside the histogram range")
    surf = _unit_sphere_area(d)
    shell_vol = surf / d * (edges[1:] ** d - edges[:-1] ** d)
    values = counts / n_in / shell_vol
    centers = 0.5 * (edges[1:] + edges[:-1])
    return RadialDensity(
        r=centers, values=values, d=d, r_max=float(r_max), form="empirical",
        edges=edges, counts=counts,
    )


def radial_histogram(
    ensemble: Ensemble,
    t: int,
    n_bins: int,
    r_max: float,
    spacing: str = "linear",
    r_min: float | None = None,
) -> RadialDensity:
    """Radial density of |s_t| across an ensemble's trajectories."""
    if not ensemble.trajectories:
        raise ValueError("empty ensemble")
    radii = np.array(
        [float(np.linalg.norm(tr.states[t])) for tr in ensemble.trajectories]
    )
    return radial_histogram_from_radii(radii, ensemble.env.dim, n_bins, r_max, spacing, r_min)


def _unit_sphere_area(d: int) -> float:
    return 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)


def tail_exponent(
    density: RadialDensity,
    fit_range: tuple[float, float],
    min_count: int = 10,
) -> TailFit:
    """Log-log slope of a radial density over [r_lo, r_hi].

    Empirical histograms drop bins with fewer than ``min_count`` samples
    to stabilize the fit; at least 5 usable bins are required.
    """
    r_lo, r_hi = fit_range
    if not r_lo < r_hi:
        raise ValueError("fit_range must satisfy r_lo < r_hi")
    keep = (density.r >= r_lo) & (density.r <= r_hi) & (density.values > 0)
    if density.counts is not None:
        keep &= density.counts >= min_count
    if keep.sum() < 5:
        raise ValueError(f"only {int(keep.sum())} usable bins in {fit_range}; need >= 5")
    slope, stderr = _loglog_fit(density.r[keep], density.values[keep])
    return TailFit(slope, stderr, (float(r_lo), float(r_hi)), int(keep.sum()))


def wilson_interval(successes: int, n: int, z: float = 1.959963984540054) -> tuple[float, float]:
    """95% Wilson score interval for a binomial proportion."""
    if n <= 0:
        raise ValueError("n must be positive")
    phat = successes / n
    denom = 1.0 + z * z / n
    center = (phat + z * z / (2 * n)) / denom
    half = z * math.sqrt(phat * (1 - phat) / n + z * z / (4 * n * n)) / denom
    return max(0.0, center - half), min(1.0, center + half)


def passage_rate(
    ensemble: Ensemble,
    hallway: HallwaySpec,
    target_x: float,
) -> tuple[float, tuple[float, float]]:
    """Fraction of trajectories with any state beyond target_x, with 95% CI."""
    if not ensemble.trajectories:
        raise ValueError("empty ensemble")
    crossed = sum(
        1 for tr in ensemble.trajectories if float(tr.states[:, 0].max()) > target_x
    )
    n = len(ensemble.trajectories)
    return crossed / n, wilson_interval(crossed, n)


def switch_step_heuristic(
    L_pi: float,
    Delta: float,
    delta: float,
    much_less_factor: float = 0.1,
) -> SwitchWindow:
    """Window of switching steps: reach distance Delta, stay in the drift regime.

    Lower end: n must exceed 2 Delta / delta steps so the ballistic phase
    can cover the distance.  Upper end: n should stay well below 1/L_pi;
    "well below" is operationalized as the factor ``much_less_factor``.
    """
    if L_pi <= 0 or Delta <= 0 or delta <= 0:
        raise ValueError("all heuristic inputs must be positive")
    n_min = math.ceil(2.0 * Delta / delta - 1e-9)
    n_max = math.floor(much_less_factor / L_pi + 1e-9)
    return SwitchWindow(n_min=n_min, n_max=n_max, feasible=n_min <= n_max)
