"""Mode switching between the local and global laws.

Switching conditions are evaluated at sample instants only.  The capture
set is X_l = {|psi| <= delta_cap} and the release boundary is
beta_prime(delta_cap, 0) = sigma(delta_cap); in the annulus between them
the mode never changes, which is what gives switching its hysteresis.

Two switching disciplines share the same thresholds:
  dwell       at least tau_d between consecutive switches, including the
              first switch after t0
  hysteresis  the tau_d = 0 degenerate case

plus two frozen disciplines, fixed-global and fixed-local, used for the
baseline and for ablations.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional

import math

import numpy as np

from .pendulum import (PendulumParams, nearest_odd_multiple,
                       nearest_odd_target, psi_norm, sigma)

LOCAL = "local"
GLOBAL = "global"

KINDS = ("dwell", "hysteresis", "fixed-global", "fixed-local")

# Absolute slack when comparing sampled times against tau_d, so that an
# exact multiple of the step is not rejected by one rounding.
_TIME_EPS = 1e-9


@dataclass
class SwitchEvent:
    time: float
    from_mode: str
    to_mode: str
    eta_norm: float


@dataclass
class SupervisorState:
    """Per-trajectory switching state, owned by one simulation loop."""

    kind: str
    mode: str
    last_switch_time: float
    target_n: Optional[int] = None
    switch_log: List[SwitchEvent] = field(default_factory=list)

    @property
    def target_angle(self) -> Optional[float]:
        return None if self.target_n is None else self.target_n * math.pi


def _check_kind(kind: str):
    if kind not in KINDS:
        raise ValueError(f"supervisor kind must be one of {KINDS}, got {kind!r}")


def effective_tau_d(kind: str, params: PendulumParams) -> float:
    return params.tau_d if kind == "dwell" else 0.0


def init_state(x0, t0: float, params: PendulumParams, kind: str) -> SupervisorState:
    """Pick the starting mode from the initial output |psi(x0)|."""
    _check_kind(kind)
    x1, x2 = float(x0[0]), float(x0[1])
    if kind == "fixed-global":
        return SupervisorState(kind, GLOBAL, t0)
    if kind == "fixed-local":
        return SupervisorState(kind, LOCAL, t0, nearest_odd_target(x1))
    if psi_norm(x1, x2) <= params.delta_cap:
        return SupervisorState(kind, LOCAL, t0, nearest_odd_target(x1))
    return SupervisorState(kind, GLOBAL, t0)


def step(state: SupervisorState, t: float, x1: float, x2: float,
         params: PendulumParams) -> Optional[SwitchEvent]:
    """Evaluate the switching condition at sample (t, x); mutate state.

    Returns the switch event when a switch fires, else None.  Fixed kinds
    never switch.  A switch both ways is impossible at one sample because
    the conditions are read against the pre-update mode.
    """
    if state.kind in ("fixed-global", "fixed-local"):
        return None
    tau_d = effective_tau_d(state.kind, params)
    if t - state.last_switch_time < tau_d - _TIME_EPS:
        return None
    psi = psi_norm(x1, x2)
    if state.mode == GLOBAL and psi <= params.delta_cap:
        event = SwitchEvent(t, GLOBAL, LOCAL, float(psi))
        state.mode = LOCAL
        state.target_n = nearest_odd_target(x1)
    elif state.mode == LOCAL and psi > sigma(params.delta_cap):
        event = SwitchEvent(t, LOCAL, GLOBAL, float(psi))
        state.mode = GLOBAL
        state.target_n = None
    else:
        return None
    state.last_switch_time = t
    state.switch_log.append(event)
    return event


def switch_count_bound(t_start: float, t_end: float, tau_d: float) -> float:
    """Upper bound 1 + (t_end - t_start)/tau_d on switches in a window."""
    if t_end < t_start:
        raise ValueError("requires t_end >= t_start")
    if tau_d <= 0.0:
        return math.inf
    return 1.0 + (t_end - t_start) / tau_d


class BatchSupervisor:
    """Vectorized twin of (init_state, step) for the sweep engine.

    Holds one slot per trajectory.  update() must see samples in time
    order; it applies exactly the scalar rules elementwise, which a
    property test pins down against the scalar path.
    """

    def __init__(self, kind: str, params: PendulumParams, x1_0, x2_0, t0: float):
        _check_kind(kind)
        m = len(x1_0)
        self.kind = kind
        self.params = params
        self.tau_d = effective_tau_d(kind, params)
        self.delta_cap = params.delta_cap
        self.release = float(sigma(params.delta_cap))
        self.fixed = kind in ("fixed-global", "fixed-local")
        if kind == "fixed-global":
            self.is_local = np.zeros(m, dtype=bool)
        elif kind == "fixed-local":
            self.is_local = np.ones(m, dtype=bool)
        else:
            self.is_local = psi_norm(np.asarray(x1_0), np.asarray(x2_0)) <= self.delta_cap
        self.target = np.where(self.is_local, nearest_odd_multiple(x1_0), np.nan)
        self.last_switch = np.full(m, t0, dtype=float)
        self.switches = np.zeros(m, dtype=np.int64)
        self.min_gap = np.full(m, np.inf)

    def update(self, t: float, x1: np.ndarray, psi: np.ndarray):
        """Apply the switching rules at sample time t.

        Returns (to_local, to_global) boolean masks over trajectories.
        """
        if self.fixed:
            return None
        gate = (t - self.last_switch) >= (self.tau_d - _TIME_EPS)
        to_local = ~self.is_local & gate & (psi <= self.delta_cap)
        to_global = self.is_local & gate & (psi > self.release)
        switched = to_local | to_global
        if switched.any():
            # min_gap tracks consecutive switch pairs only, so the stretch
            # from t0 to the first switch does not count.
            paired = switched & (self.switches > 0)
            if paired.any():
                gap = t - self.last_switch
                self.min_gap[paired] = np.minimum(self.min_gap[paired],
                                                  gap[paired])
            self.target[to_local] = nearest_odd_multiple(x1[to_local])
            self.target[to_global] = np.nan
            self.is_local[to_local] = True
            self.is_local[to_global] = False
            self.last_switch[switched] = t
            self.switches[switched] += 1
        return to_local, to_global
