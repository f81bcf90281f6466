"""Fixed-step explicit integration on a uniform time grid.

The whole lab runs on one engine: classic fourth-order Runge-Kutta with a
constant step, no adaptivity, no interpolation.  Every recorded sample sits
exactly at t0 + i*h, so downstream settling-time and histogram code can rely
on sample times being reproducible to the last bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np

# State magnitudes past this are treated as numerical blow-up.
DIVERGENCE_LIMIT = 1.0e12

Field = Callable[[float, np.ndarray], np.ndarray]
Observer = Callable[[int, float, np.ndarray], None]


class SimulationDiverged(RuntimeError):
    """Raised when a state component leaves the representable regime.

    Carries the offending time and, when raised from integrate(), the
    partial trajectory accumulated up to the last good sample.
    """

    def __init__(self, time: float, trajectory: Optional["Trajectory"] = None,
                 n_valid: int = 0):
        super().__init__(f"simulation diverged at t={time:.6g}")
        self.time = time
        self.trajectory = trajectory
        self.n_valid = n_valid


@dataclass(frozen=True)
class TimeGrid:
    """Uniform sampling grid t_i = t0 + i*h for i = 0..n_steps."""

    t0: float
    h: float
    n_steps: int

    def __post_init__(self):
        if not (self.h > 0.0):
            raise ValueError(f"step h must be positive, got {self.h}")
        if self.n_steps < 1:
            raise ValueError(f"n_steps must be >= 1, got {self.n_steps}")

    @property
    def t_end(self) -> float:
        return self.t0 + self.n_steps * self.h

    def times(self) -> np.ndarray:
        # One multiply and one add per sample, never accumulated sums.
        return self.t0 + np.arange(self.n_steps + 1) * self.h

    def time_at(self, i: int) -> float:
        return self.t0 + i * self.h


@dataclass
class Trajectory:
    """Sampled closed-loop (or open-loop) run on a TimeGrid.

    states has shape (n_steps+1, dim).  controls and modes are optional;
    closed-loop runners fill them in, plain integrations leave them None.
    """

    grid: TimeGrid
    states: np.ndarray
    controls: Optional[np.ndarray] = None
    modes: Optional[Sequence[str]] = None
    events: List = field(default_factory=list)

    def __post_init__(self):
        n = self.grid.n_steps + 1
        if self.states.shape[0] != n:
            raise ValueError(
                f"states has {self.states.shape[0]} samples, grid wants {n}")
        for name, col in (("controls", self.controls), ("modes", self.modes)):
            if col is not None and len(col) != n:
                raise ValueError(f"{name} has {len(col)} samples, grid wants {n}")

    @property
    def n_samples(self) -> int:
        return self.grid.n_steps + 1


def rk4_step(field: Field, t: float, x: np.ndarray, h: float) -> np.ndarray:
    """Advance one classic RK4 step from (t, x).

    Args:
        field: right-hand side f(t, x) -> dx/dt
        t: current time
        x: current state vector
        h: step size

    Returns:
        state at t + h

    Raises:
        SimulationDiverged: a stage produced a non-finite value.
    """
    k1 = field(t, x)
    k2 = field(t + 0.5 * h, x + 0.5 * h * k1)
    k3 = field(t + 0.5 * h, x + 0.5 * h * k2)
    k4 = field(t + h, x + h * k3)
    out = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(out)):
        raise SimulationDiverged(t)
    return out


def integrate(field: Field, x0: np.ndarray, grid: TimeGrid,
              observer: Optional[Observer] = None) -> Trajectory:
    """Integrate field over the grid, recording every sample.

    The observer, when given, is invoked as observer(i, t_i, x_i) after
    each completed step (i = 1..n_steps).  Supervisory logic lives in the
    observer: it may mutate closure state that the field reads on the next
    step, which keeps switching decisions aligned to sample instants.

    Raises:
        SimulationDiverged: some |state component| exceeded DIVERGENCE_LIMIT
            or a stage went non-finite; the exception carries the partial
            trajectory up to the last good sample.
    """
    x0 = np.asarray(x0, dtype=float)
    n = grid.n_steps
    states = np.empty((n + 1, x0.shape[0]), dtype=float)
    states[0] = x0
    x = x0
    for i in range(1, n + 1):
        t_prev = grid.time_at(i - 1)
        try:
            x = rk4_step(field, t_prev, x, grid.h)
        except SimulationDiverged as exc:
            partial = Trajectory(grid, _pad_invalid(states, i),
                                 events=[])
            raise SimulationDiverged(exc.time, partial, n_valid=i) from None
        if np.any(np.abs(x) > DIVERGENCE_LIMIT):
            states[i] = x
            partial = Trajectory(grid, _pad_invalid(states, i + 1), events=[])
            raise SimulationDiverged(grid.time_at(i), partial, n_valid=i + 1)
        states[i] = x
        if observer is not None:
            observer(i, grid.time_at(i), x)
    return Trajectory(grid, states)


def _pad_invalid(states: np.ndarray, n_valid: int) -> np.ndarray:
    out = states.copy()
    out[n_valid:] = np.nan
    return out
