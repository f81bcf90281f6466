"""Verification suite for windowed-integral excitation bounds.

Certifies persistency-of-excitation (PE) and positivity-on-average (PA)
levels for sampled gains by composite-Simpson quadrature over windows, and
then checks three consequences on simulated systems:

  A1  a PE level over one window length implies a proportional level over
      every longer window
  A2  a PA gain forces an explicit decay-plus-offset envelope on
      p' = -A(t) p + b(t)
  A3  a PA time rescaling tau = integral of a preserves an ISS estimate

Certification is sampled, not exhaustive: window starts and lengths are
snapped to even grid offsets so every window integral is an exact
composite Simpson sum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, List

import numpy as np
from scipy.interpolate import CubicSpline

from .dynamics import TimeGrid, integrate

DEFAULT_T_SAMPLES = 200


@dataclass(frozen=True)
class SampledGain:
    """A gain sampled on a uniform grid.

    values has shape (n_steps+1,) for scalar gains, (n_steps+1, l1, l2)
    for matrix gains.
    """

    grid: TimeGrid
    values: np.ndarray

    def __post_init__(self):
        n = self.grid.n_steps + 1
        if self.values.shape[0] != n:
            raise ValueError(
                f"values has {self.values.shape[0]} samples, grid wants {n}")


@dataclass
class Certificate:
    ok: bool
    margin: float
    worst_t: float
    level: float
    window: float


def lambda_min_sym(mats: np.ndarray) -> np.ndarray:
    """Smallest eigenvalue of symmetric matrices, stacked or single.

    Scalars pass through, 1x1 and 2x2 use closed forms, larger sizes fall
    back to the symmetric eigensolver.
    """
    mats = np.asarray(mats, dtype=float)
    if mats.ndim <= 1:
        return mats
    if mats.shape[-1] == 1:
        return mats[..., 0, 0]
    if mats.shape[-1] == 2:
        a = mats[..., 0, 0]
        c = mats[..., 1, 1]
        b = mats[..., 0, 1]
        return 0.5 * (a + c) - np.sqrt(0.25 * (a - c) ** 2 + b * b)
    return np.linalg.eigvalsh(mats)[..., 0]


def _simpson_prefix(values: np.ndarray, h: float) -> np.ndarray:
    """Prefix integrals over pair blocks: P[j] = Simpson over samples [0, 2j]."""
    f = np.asarray(values, dtype=float)
    n = f.shape[0] - 1
    if n < 2 or n % 2:
        raise ValueError("requires an even number of intervals >= 2")
    blocks = (h / 3.0) * (f[0:-2:2] + 4.0 * f[1:-1:2] + f[2::2])
    zero = np.zeros((1,) + f.shape[1:])
    return np.concatenate([zero, np.cumsum(blocks, axis=0)], axis=0)


def simpson_window(prefix: np.ndarray, start_idx, stop_idx) -> np.ndarray:
    """Composite Simpson integral between two even sample indices."""
    start_idx = np.asarray(start_idx)
    stop_idx = np.asarray(stop_idx)
    if np.any(start_idx % 2) or np.any(stop_idx % 2):
        raise ValueError("window endpoints must be even sample indices")
    return prefix[stop_idx // 2] - prefix[start_idx // 2]


def _even_steps(duration: float, h: float) -> int:
    """Snap a duration to the nearest even, nonzero number of grid steps."""
    return max(2, int(round(duration / h / 2.0)) * 2)


def _even_starts(n_steps: int, window_steps: int, t_samples: int) -> np.ndarray:
    last = n_steps - window_steps
    if last < 0:
        raise ValueError("window longer than the sampled horizon")
    raw = np.linspace(0, last, min(t_samples, last // 2 + 1))
    return np.unique((np.round(raw / 2.0) * 2).astype(int))


def _outer_products(values: np.ndarray) -> np.ndarray:
    """R R^T per sample; scalars square, matrices contract trailing axes."""
    v = np.asarray(values, dtype=float)
    if v.ndim == 1:
        return v * v
    return np.einsum("tij,tkj->tik", v, v)


def _window_lmin(prefix: np.ndarray, starts: np.ndarray, steps: int) -> np.ndarray:
    return np.atleast_1d(lambda_min_sym(simpson_window(prefix, starts,
                                                       starts + steps)))


def pe_check(gain: SampledGain, window: float, level: float,
             t_samples: int = DEFAULT_T_SAMPLES) -> Certificate:
    """Certify a PE level: lambda_min of int_t^{t+L} R R^T >= level.

    Window starts are sampled across the grid (t_samples of them) and the
    window is snapped to an even step count, so the reported margin is for
    the sampled certification, not a continuum proof.
    """
    g = gain.grid
    steps = _even_steps(window, g.h)
    prefix = _simpson_prefix(_outer_products(gain.values), g.h)
    starts = _even_starts(g.n_steps, steps, t_samples)
    lmin = _window_lmin(prefix, starts, steps)
    worst = int(np.argmin(lmin))
    margin = float(lmin[worst] - level)
    return Certificate(margin >= 0.0, margin, g.time_at(int(starts[worst])),
                       level, steps * g.h)


def pe_level(gain: SampledGain, window: float,
             t_samples: int = DEFAULT_T_SAMPLES) -> float:
    """Largest PE level certified by the sampled windows."""
    g = gain.grid
    steps = _even_steps(window, g.h)
    prefix = _simpson_prefix(_outer_products(gain.values), g.h)
    starts = _even_starts(g.n_steps, steps, t_samples)
    return float(np.min(_window_lmin(prefix, starts, steps)))


def _length_ladder(min_steps: int, n_steps: int, n_lengths: int) -> List[int]:
    raw = np.linspace(min_steps, n_steps, min(n_lengths, max(1, n_steps // 2)))
    return sorted(set(int(round(s / 2.0)) * 2 for s in raw))


def lemma_a1_check(gain: SampledGain, window: float, level: float,
                   n_lengths: int = 10,
                   t_samples: int = 50) -> Certificate:
    """Check the long-window consequence of PE.

    For every sampled length ell >= L, lambda_min of the window integral
    must reach level * ell / (2 L).  Returns the worst margin over all
    sampled (start, length) pairs.
    """
    g = gain.grid
    steps_l = _even_steps(window, g.h)
    window_eff = steps_l * g.h
    prefix = _simpson_prefix(_outer_products(gain.values), g.h)
    margin = math.inf
    worst_t = g.t0
    for steps in _length_ladder(steps_l, g.n_steps, n_lengths):
        starts = _even_starts(g.n_steps, steps, t_samples)
        lmin = _window_lmin(prefix, starts, steps)
        bound = 0.5 * level * (steps * g.h) / window_eff
        k = int(np.argmin(lmin - bound))
        if lmin[k] - bound < margin:
            margin = float(lmin[k] - bound)
            worst_t = g.time_at(int(starts[k]))
    return Certificate(margin >= 0.0, margin, worst_t, level, window_eff)


def pa_check(gain: SampledGain, window: float, level: float,
             n_lengths: int = 10,
             t_samples: int = DEFAULT_T_SAMPLES) -> Certificate:
    """Certify positivity on average: int_t^{t+ell} A >= level*ell, ell >= L."""
    g = gain.grid
    steps_l = _even_steps(window, g.h)
    prefix = _simpson_prefix(np.asarray(gain.values, dtype=float), g.h)
    margin = math.inf
    worst_t = g.t0
    for steps in _length_ladder(steps_l, g.n_steps, n_lengths):
        starts = _even_starts(g.n_steps, steps, t_samples)
        lmin = _window_lmin(prefix, starts, steps)
        bound = level * steps * g.h
        k = int(np.argmin(lmin - bound))
        if lmin[k] - bound < margin:
            margin = float(lmin[k] - bound)
            worst_t = g.time_at(int(starts[k]))
    return Certificate(margin >= 0.0, margin, worst_t, level, steps_l * g.h)


def pa_level(gain: SampledGain, window: float,
             n_lengths: int = 10,
             t_samples: int = DEFAULT_T_SAMPLES) -> float:
    """Largest PA level certified by the sampled windows."""
    g = gain.grid
    steps_l = _even_steps(window, g.h)
    prefix = _simpson_prefix(np.asarray(gain.values, dtype=float), g.h)
    best = math.inf
    for steps in _length_ladder(steps_l, g.n_steps, n_lengths):
        starts = _even_starts(g.n_steps, steps, t_samples)
        lmin = _window_lmin(prefix, starts, steps)
        best = min(best, float(np.min(lmin / (steps * g.h))))
    return best


def a_floor_of(gain: SampledGain) -> float:
    """Smallest nonnegative floor with A(t) >= -floor*I at every sample."""
    vals = np.asarray(gain.values, dtype=float)
    return float(max(0.0, -np.min(lambda_min_sym(vals))))


@dataclass
class DecayCheck:
    violation: float
    worst_t: float
    input_sup: float


def lemma_a2_check(a_fn: Callable[[float], np.ndarray],
                   b_fn: Callable[[float], np.ndarray],
                   p0: np.ndarray, grid: TimeGrid,
                   window: float, level: float,
                   a_floor: float = 0.0) -> DecayCheck:
    """Simulate p' = -A(t) p + b(t) and compare |p| to the PA envelope.

    The envelope for a (window, level)-PA gain with samplewise floor
    A(t) >= -a_floor*I is

        |p0| exp(-level (t - t0 - (1 + a_floor/level) window)) + offset

    with offset = sup|b| (window + exp(-level window)/level
    + (exp(a_floor window) - 1)/a_floor).  For a_floor = 0 the classical
    tighter form drops the last offset term and the dwell inflation.

    Returns the worst samplewise excess of |p| over the envelope;
    nonpositive means the bound held.
    """
    p0 = np.atleast_1d(np.asarray(p0, dtype=float))

    def field(t, p):
        a_val = np.asarray(a_fn(t), dtype=float)
        b_val = np.atleast_1d(np.asarray(b_fn(t), dtype=float))
        if a_val.ndim == 0:
            return -a_val * p + b_val
        return -a_val @ p + b_val

    traj = integrate(field, p0, grid)
    times = traj.grid.times()
    norms = np.linalg.norm(traj.states, axis=1)
    b_samples = np.array([np.atleast_1d(b_fn(t)) for t in times])
    b_sup = float(np.max(np.linalg.norm(b_samples, axis=1)))
    if a_floor > 0.0:
        lead = 1.0 + a_floor / level
        offset = b_sup * (window + math.exp(-level * window) / level
                          + (math.exp(a_floor * window) - 1.0) / a_floor)
    else:
        lead = 1.0
        offset = b_sup * (window + math.exp(-level * window) / level)
    p0_norm = float(np.linalg.norm(p0))
    env = p0_norm * np.exp(-level * (times - grid.t0 - lead * window)) + offset
    excess = norms - env
    worst = int(np.argmax(excess))
    return DecayCheck(float(excess[worst]), float(times[worst]), b_sup)


@dataclass
class RescaleCheck:
    rescale_error: float
    bound_violation: float
    input_sup: float


def lemma_a3_check(f: Callable, beta_fn: Callable[[float, float], float],
                   gamma_fn: Callable[[float], float],
                   a_fn: Callable[[float], float],
                   d_fn: Callable[[float], float],
                   z0: np.ndarray, grid: TimeGrid,
                   window: float, level: float) -> RescaleCheck:
    """Check the PA time-rescaling of an ISS system.

    z' = f(z, d) in tau-time with estimate |z(tau)| <= beta(|z0|, tau)
    + gamma(sup|d|) is rescaled through tau(t) = int_0^t a, giving
    p' = a(t) f(p, d(tau(t))).  For t >= window the identity
    p(t) = z(tau(t)) must hold numerically and |p(t)| must obey
    beta(|z0|, level*t) + gamma(sup|d|).

    The rescaling gain must be nonnegative on the grid so tau never
    decreases (negative excursions would need the base solution on
    negative tau, which this check does not construct).
    """
    z0 = np.atleast_1d(np.asarray(z0, dtype=float))
    dim = z0.shape[0]
    a_samples = np.array([a_fn(t) for t in grid.times()])
    if np.any(a_samples < 0.0):
        raise ValueError("requires a(t) >= 0 on the grid (tau must not decrease)")

    def aug_field(t, state):
        p, tau = state[:dim], state[dim]
        a_val = a_fn(t)
        dp = a_val * np.atleast_1d(f(p, d_fn(tau)))
        return np.concatenate([dp, [a_val]])

    aug0 = np.concatenate([z0, [0.0]])
    traj = integrate(aug_field, aug0, grid)
    times = traj.grid.times()
    p_path = traj.states[:, :dim]
    tau_path = traj.states[:, dim]

    tau_end = float(tau_path[-1])
    n_z = max(64, int(math.ceil(tau_end / 0.01)))
    z_grid = TimeGrid(0.0, tau_end / n_z if tau_end > 0 else 1e-3, n_z)
    z_traj = integrate(lambda tau, z: np.atleast_1d(f(z, d_fn(tau))), z0, z_grid)
    z_spline = CubicSpline(z_grid.times(), z_traj.states, axis=0)

    keep = times >= window
    z_at_tau = z_spline(np.clip(tau_path[keep], 0.0, tau_end))
    rescale_error = float(np.max(np.linalg.norm(p_path[keep] - z_at_tau, axis=1)))

    d_sup = float(np.max(np.abs([d_fn(tau) for tau in z_grid.times()])))
    z0_norm = float(np.linalg.norm(z0))
    env = np.array([beta_fn(z0_norm, level * t) for t in times[keep]]) \
        + gamma_fn(d_sup)
    bound_violation = float(np.max(np.linalg.norm(p_path[keep], axis=1) - env))
    return RescaleCheck(rescale_error, bound_violation, d_sup)


# ---- randomized trial families ----------------------------------------


@dataclass
class TrialResult:
    trial: int
    seed: int
    lemma: str
    margin: float

    @property
    def passed(self) -> bool:
        return self.margin >= 0.0


def _trig_poly(rng, n_terms: int, freq_lo=0.4, freq_hi=3.0,
               amp_lo=0.3, amp_hi=1.0):
    """Random trigonometric polynomial sum_j c_j sin(w_j t + phi_j)."""
    freqs = rng.uniform(freq_lo, freq_hi, n_terms).tolist()
    amps = rng.uniform(amp_lo, amp_hi, n_terms).tolist()
    phases = rng.uniform(0.0, 2.0 * math.pi, n_terms).tolist()

    def fn(t):
        total = 0.0
        for a, w, p in zip(amps, freqs, phases):
            total += a * math.sin(w * t + p)
        return total

    return fn, float(sum(amps))


def _positive_trig(rng, n_terms: int, dip: float):
    """Trig polynomial plus offset; dip < 1 leaves negative excursions."""
    base, amp_sum = _trig_poly(rng, n_terms)
    offset = amp_sum * dip
    return (lambda t: offset + base(t)), offset, amp_sum


def _a1_trial(idx: int, seed: int) -> TrialResult:
    grid = TimeGrid(0.0, 0.02, 2000)  # 40 s horizon
    times = grid.times()
    for attempt in range(4):
        rng = np.random.default_rng(seed + 7919 * attempt)
        if idx % 2 == 0:
            fn, _ = _trig_poly(rng, 3)
            values = np.array([fn(t) for t in times])
        else:
            f1, _ = _trig_poly(rng, 2)
            f2, _ = _trig_poly(rng, 2)
            values = np.array([[[f1(t)], [f2(t)]] for t in times])
        gain = SampledGain(grid, values)
        window = rng.uniform(4.0, 8.0)
        level = 0.9 * pe_level(gain, window)
        if level > 1e-9:
            cert = lemma_a1_check(gain, window, level)
            return TrialResult(idx, seed, "a1", cert.margin)
    raise RuntimeError(f"could not draw an exciting gain for trial {idx}")


def _a2_trial(idx: int, seed: int, tol: float = 1e-6) -> TrialResult:
    rng = np.random.default_rng(seed)
    grid = TimeGrid(0.0, 0.02, 2500)  # 50 s horizon
    dip = 1.2 if idx % 4 < 2 else 0.8  # dip < 1 gives a_floor > 0 cases
    if idx % 2 == 0:
        a_fn, _, _ = _positive_trig(rng, 3, dip)
        values = np.array([a_fn(t) for t in grid.times()])
        dim = 1
    else:
        a1, _, _ = _positive_trig(rng, 2, dip)
        a2, _, _ = _positive_trig(rng, 2, dip)
        theta = rng.uniform(0.0, math.pi)
        q1 = np.array([math.cos(theta), math.sin(theta)])
        q2 = np.array([-math.sin(theta), math.cos(theta)])
        proj1 = np.outer(q1, q1)
        proj2 = np.outer(q2, q2)

        def a_fn(t):
            return a1(t) * proj1 + a2(t) * proj2

        values = np.array([a_fn(t) for t in grid.times()])
        dim = 2
    gain = SampledGain(grid, values)
    window = 6.0
    level = 0.9 * pa_level(gain, window)
    if level <= 1e-9:
        raise RuntimeError(f"trial {idx} drew a gain without average positivity")
    floor = a_floor_of(gain)
    b_poly, _ = _trig_poly(rng, 2, amp_lo=0.05, amp_hi=0.25)
    if dim == 1:
        b_fn = lambda t: np.array([b_poly(t)])
    else:
        shift = rng.uniform(0.0, 2.0 * math.pi)
        b_fn = lambda t: np.array([b_poly(t), b_poly(t + shift)])
    p0 = rng.uniform(-5.0, 5.0, dim)
    check = lemma_a2_check(a_fn, b_fn, p0, grid, window, level, floor)
    return TrialResult(idx, seed, "a2", tol - check.violation)


def _a3_trials(idx: int, seed: int, rescale_tol: float = 1e-5,
               bound_tol: float = 1e-6) -> List[TrialResult]:
    rng = np.random.default_rng(seed)
    grid = TimeGrid(0.0, 0.01, 6000)  # 60 s horizon
    base, amp_sum = _trig_poly(rng, 2)
    pad = 0.05 + 0.3 * rng.random()
    a_fn = lambda t: amp_sum + pad + base(t)  # strictly positive gain
    gain = SampledGain(grid, np.array([a_fn(t) for t in grid.times()]))
    window = 4.0
    level = 0.9 * pa_level(gain, window)
    amp_d = rng.uniform(0.0, 0.5)
    freq_d = rng.uniform(0.3, 2.0)
    d_fn = lambda tau: amp_d * math.sin(freq_d * tau)
    z0 = np.array([rng.uniform(-5.0, 5.0)])
    # Scalar contraction z' = -z + d admits beta(s,r) = s e^{-r}, gamma(s) = s.
    check = lemma_a3_check(lambda z, d: -z + d,
                           lambda s, r: s * math.exp(-r),
                           lambda s: s,
                           a_fn, d_fn, z0, grid, window, level)
    return [TrialResult(idx, seed, "a3-rescale", rescale_tol - check.rescale_error),
            TrialResult(idx, seed, "a3-bound", bound_tol - check.bound_violation)]


def run_appendix_suite(seed: int = 0, n_a1: int = 50, n_a2: int = 100,
                       n_a3: int = 10) -> List[TrialResult]:
    """Run the full randomized trial set; margins >= 0 mean pass."""
    results: List[TrialResult] = []
    trial = 0
    for i in range(n_a1):
        results.append(_a1_trial(trial, seed + 1000 + i))
        trial += 1
    for i in range(n_a2):
        results.append(_a2_trial(trial, seed + 2000 + i))
        trial += 1
    for i in range(n_a3):
        results.extend(_a3_trials(trial, seed + 3000 + i))
        trial += 1
    return results
