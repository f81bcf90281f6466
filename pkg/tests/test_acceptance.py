"""Acceptance gate: one pass/fail line per top-level criterion.

Run with `pytest tests/test_acceptance.py -v -s` to see every line; the
sweeps reuse module-scoped fixtures, so the whole gate is three grid
sweeps plus the short checks (a few minutes on one core).
"""

import math
import time

import numpy as np
import pytest

from swinglab.dynamics import TimeGrid, integrate, rk4_step
from swinglab.excitation import run_appendix_suite
from swinglab.experiments import (ExperimentConfig, _simulate_batch,
                                  estimate_t_delta_delta, run_sweep)
from swinglab.metrics import t_lambda
from swinglab.pendulum import energy, plant_derivative, sigma


def report(name: str, ok: bool, detail: str) -> str:
    line = f"[ACCEPTANCE] {name}: {'PASS' if ok else 'FAIL'} ({detail})"
    print(line, flush=True)
    return line


@pytest.fixture(scope="module")
def baseline():
    t0 = time.time()
    res = run_sweep(ExperimentConfig())
    return res, time.time() - t0


@pytest.fixture(scope="module")
def uniting():
    cfg = ExperimentConfig(controller="smooth", supervisor="hysteresis")
    return run_sweep(cfg), cfg


@pytest.fixture(scope="module")
def dwell():
    cfg = ExperimentConfig(controller="smooth", supervisor="dwell", tau_d=0.5)
    return run_sweep(cfg), cfg


def test_baseline_entropy(baseline):
    res, elapsed = baseline
    e_x, e_h = res.summary["E_x"], res.summary["E_H"]
    ok = 8.6 <= e_x <= 9.8 and 6.1 <= e_h <= 7.1
    line = report("baseline-entropy", ok,
                  f"E_x={e_x:.4f} want 9.2+-0.6, E_H={e_h:.4f} want 6.6+-0.5, "
                  f"{res.x1_0.size} records in {elapsed:.0f}s")
    assert ok, line


def test_baseline_reach_times(baseline):
    res, _ = baseline
    d = res.distribution
    t_h = d.time_at_cdf(0.99, "h")
    t_x = d.time_at_cdf(0.99, "x")
    cdf_end = float(d.cdf_x[-1])
    ok_h = 42.0 <= t_h <= 58.0
    ok_x = (175.0 <= t_x <= 215.0) if not math.isnan(t_x) else cdf_end >= 0.97
    ok = ok_h and ok_x
    line = report("baseline-reach-times", ok,
                  f"t_H_99={t_h:.2f} want 50+-8, t_x_99={t_x}, "
                  f"cdf_x(200)={cdf_end:.4f}")
    assert ok, line


def test_uniting_entropy_and_median_gap(uniting):
    res, cfg = uniting
    e_x, e_h = res.summary["E_x"], res.summary["E_H"]
    both = np.isfinite(res.settle_x) & np.isfinite(res.settle_h)
    med = float(np.median(res.settle_x[both] - res.settle_h[both]))
    bound = 7.41 / 2.0 + t_lambda(cfg.angle_band_psi_level, cfg.params()) + 1.0
    ok = 6.3 <= e_x <= 7.5 and 6.1 <= e_h <= 7.1 and med <= bound
    line = report("uniting-entropy", ok,
                  f"E_x={e_x:.4f} want 6.9+-0.6, E_H={e_h:.4f} want 6.6+-0.5, "
                  f"median(T_x-T_H)={med:.2f} <= {bound:.2f}")
    assert ok, line


def test_local_envelope(uniting):
    res, _ = uniting
    worst = res.envelope_violation[np.isfinite(res.envelope_violation)]
    n_violations = int((worst > 1e-6).sum())
    ok = worst.size > 0 and n_violations == 0
    line = report("local-envelope", ok,
                  f"{worst.size} captured records, worst excess "
                  f"{worst.max():.2e}, violations {n_violations}")
    assert ok, line


def test_supervisor_bounds(uniting, dwell):
    res_d, cfg_d = dwell
    bound = 1.0 + (cfg_d.t_end - cfg_d.t0) / cfg_d.tau_d
    gaps = res_d.min_gap[np.isfinite(res_d.min_gap)]
    min_gap = float(gaps.min()) if gaps.size else math.inf
    ok_dwell = res_d.switches.max() <= bound and min_gap >= cfg_d.tau_d - cfg_d.h

    res_h, cfg_h = uniting
    release = float(sigma(cfg_h.delta_cap))
    annulus_ok = all(
        (ev.eta_norm <= cfg_h.delta_cap if ev.to_mode == "local"
         else ev.eta_norm > release)
        for ev in res_h.events)
    ok_hyst = bool(np.all(res_h.switches >= 0)) and annulus_ok
    ok = ok_dwell and ok_hyst
    line = report("supervisor-bounds", ok,
                  f"dwell max switches {res_d.switches.max()} <= {bound:.0f}, "
                  f"min gap {min_gap}, hysteresis max switches "
                  f"{res_h.switches.max()}, annulus ok {annulus_ok}")
    assert ok, line


def test_assumption3_reach_estimate():
    est = estimate_t_delta_delta(ExperimentConfig(), n_boundary_samples=200)
    ok = est.violations == 0 and est.estimate <= 4.7
    line = report("assumption3", ok,
                  f"estimate={est.estimate:.2f}s want <=4.7s, "
                  f"violations={est.violations}")
    assert ok, line


def test_appendix_suite():
    t0 = time.time()
    rows = run_appendix_suite(seed=0)
    elapsed = time.time() - t0
    worst = min(r.margin for r in rows)
    failures = sum(0 if r.passed else 1 for r in rows)
    ok = failures == 0 and elapsed < 30.0
    line = report("appendix-suite", ok,
                  f"{len(rows)} checks, {failures} failures, worst margin "
                  f"{worst:.2e}, {elapsed:.1f}s")
    assert ok, line


def test_numerics():
    def field(t, x):
        return plant_derivative(x, 0.05 * np.sin(3.0 * t), 0.0, 1.0)

    def solve(h):
        x = np.array([2.0, 0.5])
        for i in range(round(5.0 / h)):
            x = rk4_step(field, i * h, x, h)
        return x

    ref = solve(0.0005)
    factor = (np.linalg.norm(solve(0.02) - ref)
              / np.linalg.norm(solve(0.01) - ref))

    grid = TimeGrid(0.0, 0.01, 20000)
    free = integrate(lambda t, x: plant_derivative(x, 0.0, 0.0, 1.0),
                     np.array([2.5, 0.0]), grid)
    h_series = energy(free.states[:, 0], free.states[:, 1], 1.0)
    drift = float(np.max(np.abs(h_series - h_series[0])))

    harm = integrate(lambda t, x: np.array([x[1], -x[0]]),
                     np.array([1.0, 0.0]), grid)
    inv = float(np.max(np.abs(harm.states[:, 0] ** 2
                              + harm.states[:, 1] ** 2 - 1.0)))

    ok = 12.0 <= factor <= 20.0 and drift <= 1e-5 and inv <= 1e-6
    line = report("numerics", ok,
                  f"order factor {factor:.2f} in [12,20], free drift "
                  f"{drift:.2e} <= 1e-5, harmonic {inv:.2e} <= 1e-6")
    assert ok, line


def test_disturbance_boundedness():
    rng = np.random.default_rng(12345)
    cfg = ExperimentConfig(controller="smooth", supervisor="hysteresis",
                           disturbance_kind="sinusoid",
                           disturbance_amplitude=0.05)
    x1_0 = rng.uniform(cfg.x1_min, cfg.x1_max, 100)
    x2_0 = rng.uniform(cfg.x2_min, cfg.x2_max, 100)
    out = _simulate_batch(cfg, x1_0, x2_0)
    max_x2 = float(out.max_abs_x2.max())
    max_y = float(out.max_abs_y.max())
    n_div = int(out.diverged.sum())
    ok = max_x2 <= 10.0 and max_y <= 10.0 and n_div == 0
    line = report("disturbance-boundedness", ok,
                  f"max|x2|={max_x2:.2f} <= 10, max|y|={max_y:.2f} <= 10, "
                  f"diverged={n_div}")
    assert ok, line
