"""Switching-rule traces and the scalar/batch equivalence property."""

import math

import numpy as np
import pytest

from swinglab.pendulum import PendulumParams, sigma
from swinglab.supervisor import (GLOBAL, LOCAL, BatchSupervisor, init_state,
                                 step, switch_count_bound)

P = PendulumParams()
RELEASE = float(sigma(P.delta_cap))

# psi = |x2| exactly when x1 is an odd multiple of pi, which makes scripted
# output paths easy to drive through both thresholds
ODD = math.pi


def scripted_state(psi):
    return ODD, float(psi)


def test_initial_mode_from_output():
    assert init_state((0.0, 0.0), 0.0, P, "hysteresis").mode == GLOBAL
    st = init_state((math.pi + 0.01, 0.0), 0.0, P, "hysteresis")
    assert st.mode == LOCAL
    assert st.target_n == 1
    assert st.target_angle == pytest.approx(math.pi)
    assert init_state((math.pi, 0.0), 0.0, P, "fixed-global").mode == GLOBAL
    st2 = init_state((0.0, 0.0), 0.0, P, "fixed-local")
    assert st2.mode == LOCAL
    assert st2.target_n == 1


def test_unknown_kind_rejected():
    with pytest.raises(ValueError, match="kind"):
        init_state((0.0, 0.0), 0.0, P, "bang")


def test_hysteresis_trace_engage_release_reengage():
    st = init_state((0.0, 0.0), 0.0, P, "hysteresis")
    h = 0.1
    script = [1.0, 0.5, 0.19, 0.3, 1.0, RELEASE + 0.01, 0.15]
    events = []
    for i, psi in enumerate(script):
        x1, x2 = scripted_state(psi)
        ev = step(st, (i + 1) * h, x1, x2, P)
        if ev:
            events.append((ev.time, ev.from_mode, ev.to_mode, ev.eta_norm))
    assert [(e[1], e[2]) for e in events] == [
        (GLOBAL, LOCAL), (LOCAL, GLOBAL), (GLOBAL, LOCAL)]
    assert events[0][0] == pytest.approx(0.3)
    # in the annulus between delta_cap and the release level nothing happens
    assert events[1][0] == pytest.approx(0.6)
    assert events[1][3] > RELEASE
    assert len(st.switch_log) == 3
    assert st.mode == LOCAL


def test_release_needs_strict_excess():
    st = init_state((math.pi, 0.1), 0.0, P, "hysteresis")
    assert st.mode == LOCAL
    x1, x2 = scripted_state(RELEASE)  # exactly at the boundary: stay local
    assert step(st, 0.1, x1, x2, P) is None
    x1, x2 = scripted_state(RELEASE + 1e-9)
    ev = step(st, 0.2, x1, x2, P)
    assert ev is not None and ev.to_mode == GLOBAL


def test_dwell_gate_blocks_early_switches_including_first():
    p = PendulumParams(tau_d=0.5)
    st = init_state((0.0, 0.0), 0.0, p, "dwell")
    x1, x2 = scripted_state(0.1)  # engage condition true from the start
    assert step(st, 0.2, x1, x2, p) is None
    assert step(st, 0.49, x1, x2, p) is None
    ev = step(st, 0.5, x1, x2, p)  # exact multiple passes the eps guard
    assert ev is not None and ev.to_mode == LOCAL
    x1, x2 = scripted_state(RELEASE + 1.0)
    assert step(st, 0.8, x1, x2, p) is None  # release blocked by dwell
    ev = step(st, 1.0, x1, x2, p)
    assert ev is not None and ev.to_mode == GLOBAL


def test_fixed_kinds_never_switch():
    for kind, psi in (("fixed-global", 0.05), ("fixed-local", 9.0)):
        st = init_state((0.0, 1.0), 0.0, P, kind)
        x1, x2 = scripted_state(psi)
        for i in range(50):
            assert step(st, 0.1 * (i + 1), x1, x2, P) is None
        assert st.switch_log == []


def test_target_frozen_at_switch_in():
    st = init_state((0.0, 0.0), 0.0, P, "hysteresis")
    ev = step(st, 0.1, 3.0 * math.pi + 0.05, 0.1, P)
    assert ev is not None and ev.to_mode == LOCAL
    assert st.target_n == 3
    # staying local does not move the target even if the angle drifts
    step(st, 0.2, 5.0 * math.pi, 0.05, P)
    assert st.target_n == 3


def test_switch_count_bound():
    assert switch_count_bound(0.0, 200.0, 0.5) == 401.0
    assert switch_count_bound(0.0, 200.0, 0.0) == math.inf
    with pytest.raises(ValueError, match="t_end >= t_start"):
        switch_count_bound(1.0, 0.0, 0.5)


def test_batch_matches_scalar_on_random_paths():
    # same scripted psi paths through both implementations, all kinds
    rng = np.random.default_rng(123)
    n_traj, n_steps, h = 32, 400, 0.05
    for kind, tau in (("hysteresis", 0.0), ("dwell", 0.7)):
        p = PendulumParams(tau_d=tau)
        psi0 = rng.uniform(0.0, 3.0, n_traj)
        x1_0 = np.full(n_traj, ODD)
        states = [init_state((ODD, psi0[j]), 0.0, p, kind)
                  for j in range(n_traj)]
        batch = BatchSupervisor(kind, p, x1_0, psi0, 0.0)
        assert np.array_equal(batch.is_local,
                              np.array([s.mode == LOCAL for s in states]))
        # random walk on psi, reflected at zero
        psi = psi0.copy()
        for i in range(n_steps):
            t = (i + 1) * h
            psi = np.abs(psi + rng.normal(0.0, 0.35, n_traj))
            batch.update(t, x1_0, psi)
            for j, st in enumerate(states):
                step(st, t, ODD, float(psi[j]), p)
            assert np.array_equal(
                batch.is_local, np.array([s.mode == LOCAL for s in states]))
        scal_counts = np.array([len(s.switch_log) for s in states])
        assert np.array_equal(batch.switches, scal_counts)
        # gaps between logged consecutive switches respect the dwell floor
        if kind == "dwell":
            finite = batch.min_gap[np.isfinite(batch.min_gap)]
            assert np.all(finite >= tau - 1e-9)
        for j, st in enumerate(states):
            gaps = [b.time - a.time for a, b
                    in zip(st.switch_log, st.switch_log[1:])]
            if gaps:
                assert min(gaps) == pytest.approx(float(batch.min_gap[j]))
            else:
                assert not np.isfinite(batch.min_gap[j])


def test_batch_min_gap_ignores_time_to_first_switch():
    p = PendulumParams(tau_d=0.0)
    batch = BatchSupervisor("hysteresis", p, np.array([0.0]), np.array([0.0]), 0.0)
    assert not batch.is_local[0]  # psi(0,0)=2 starts global
    batch.update(5.0, np.array([ODD]), np.array([0.1]))  # first switch at t=5
    assert batch.switches[0] == 1
    assert not np.isfinite(batch.min_gap[0])
    batch.update(5.5, np.array([ODD]), np.array([RELEASE + 1.0]))
    assert batch.switches[0] == 2
    assert batch.min_gap[0] == pytest.approx(0.5)
