"""Experiment configuration, the lockstep sweep engine, and CSV reports.

A sweep advances every initial condition of a rectangular grid in lockstep
with vectorized RK4, keeping only online trackers (settling candidates,
switch segments, envelope excess, running maxima) so memory stays flat no
matter how long the horizon is.  Results are written as three CSVs:

  sweep.csv    x1_0,x2_0,T_x,T_H,reached_x,reached_H,switches
  dist.csv     t,cdf_x,cdf_H,pdf_x,pdf_H
  summary.csv  E_x,E_H,t_x_99,t_H_99,unreached_x,unreached_H

Single runs additionally emit the full time series (trajectory.csv) and
the switch log (switches.csv).
"""

from __future__ import annotations

import math
import multiprocessing
import os
import warnings
from dataclasses import dataclass, fields
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import supervisor as sv
from .controllers import global_sign, global_smooth, local_linear
from .dynamics import (DIVERGENCE_LIMIT, SimulationDiverged, TimeGrid,
                       integrate)
from .metrics import build_distribution, settling_candidate_update, settling_time
from .pendulum import (DisturbanceSpec, PendulumParams, delta_of, energy,
                       kappa, nearest_odd_multiple, nearest_odd_target,
                       output_y, psi_norm, sigma)

# Full-swing period of the unforced pendulum at the default omega, measured
# once and used as the yardstick for reach-time budgets and cutoffs.
REFERENCE_PERIOD = 7.41

# Fixed batch width: sweeps are cut into chunks of this many trajectories,
# so results are identical whatever the worker count.
CHUNK = 512

WORKERS_ENV = "SWINGLAB_WORKERS"

CONTROLLERS = ("sign", "smooth")


class ConfigError(ValueError):
    """A configuration value violates a documented constraint."""


@dataclass
class ExperimentConfig:
    """Every knob of a run, flat so it maps 1:1 onto `key = value` files.

    The defaults reproduce the energy-pumping baseline: sign controller,
    no supervision, the [-10,10]x[-3,3] grid at steps 0.2 x 0.1, horizon
    200 s at h = 0.01.
    """

    omega: float = 1.0
    u_max: float = 0.1
    c: float = 20.0
    k: float = 1.0
    delta_cap: float = 0.2
    tau_d: float = 0.0
    controller: str = "sign"
    supervisor: str = "fixed-global"
    saturate_local: bool = False
    disturbance_kind: str = "zero"
    disturbance_amplitude: float = 0.0
    disturbance_frequency: float = 1.0
    disturbance_seed: int = 0
    t0: float = 0.0
    t_end: float = 200.0
    h: float = 0.01
    x1_min: float = -10.0
    x1_max: float = 10.0
    x1_step: float = 0.2
    x2_min: float = -3.0
    x2_max: float = 3.0
    x2_step: float = 0.1
    angle_band_fraction: float = 0.05
    energy_band_fraction: float = 0.05
    n_bins: int = 20000
    output_dir: str = "out"

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.controller not in CONTROLLERS:
            raise ConfigError(
                f"controller must be one of {CONTROLLERS}, got {self.controller!r}")
        if self.supervisor not in sv.KINDS:
            raise ConfigError(
                f"supervisor must be one of {sv.KINDS}, got {self.supervisor!r}")
        try:
            self.params()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        try:
            self.disturbance()
        except ValueError as exc:
            raise ConfigError(f"disturbance: {exc}") from None
        if not (self.h > 0.0):
            raise ConfigError(f"requires h > 0, got h={self.h:g}")
        if not (self.t_end > self.t0):
            raise ConfigError(
                f"requires t_end > t0, got t0={self.t0:g}, t_end={self.t_end:g}")
        if int(round((self.t_end - self.t0) / self.h)) < 1:
            raise ConfigError(
                f"horizon shorter than one step: t_end - t0 = "
                f"{self.t_end - self.t0:g} with h = {self.h:g}")
        for lo, hi, step, names in (
                (self.x1_min, self.x1_max, self.x1_step, ("x1_min", "x1_max", "x1_step")),
                (self.x2_min, self.x2_max, self.x2_step, ("x2_min", "x2_max", "x2_step"))):
            if not (step > 0.0):
                raise ConfigError(f"requires {names[2]} > 0, got {step:g}")
            if hi < lo:
                raise ConfigError(
                    f"initial-condition box is empty: {names[1]} = {hi:g} "
                    f"< {names[0]} = {lo:g}")
        for name in ("angle_band_fraction", "energy_band_fraction"):
            val = getattr(self, name)
            if not (0.0 < val < 1.0):
                raise ConfigError(f"requires 0 < {name} < 1, got {val:g}")
        if self.n_bins < 1:
            raise ConfigError(f"requires n_bins >= 1, got {self.n_bins}")
        if self.supervisor == "hysteresis" and self.tau_d != 0.0:
            warnings.warn(
                f"the hysteresis supervisor has no dwell time; "
                f"tau_d = {self.tau_d:g} is treated as 0", stacklevel=2)

    # -- derived objects -------------------------------------------------

    def params(self) -> PendulumParams:
        return PendulumParams(omega=self.omega, u_max=self.u_max, c=self.c,
                              k=self.k, delta_cap=self.delta_cap,
                              tau_d=self.tau_d)

    def disturbance(self) -> DisturbanceSpec:
        return DisturbanceSpec(kind=self.disturbance_kind,
                               amplitude=self.disturbance_amplitude,
                               frequency=self.disturbance_frequency,
                               seed=self.disturbance_seed)

    def time_grid(self) -> TimeGrid:
        # Horizon snapped to a whole number of steps.
        return TimeGrid(self.t0, self.h,
                        int(round((self.t_end - self.t0) / self.h)))

    def x1_values(self) -> np.ndarray:
        return self.x1_min + np.arange(
            _axis_count(self.x1_min, self.x1_max, self.x1_step)) * self.x1_step

    def x2_values(self) -> np.ndarray:
        return self.x2_min + np.arange(
            _axis_count(self.x2_min, self.x2_max, self.x2_step)) * self.x2_step

    def ic_grid(self) -> Tuple[np.ndarray, np.ndarray]:
        """Flattened grid, x1-major: x1 varies slowest."""
        x1v, x2v = self.x1_values(), self.x2_values()
        return np.repeat(x1v, x2v.size), np.tile(x2v, x1v.size)

    @property
    def angle_tol(self) -> float:
        """Half-width of the settling band on the angle's upright distance."""
        return self.angle_band_fraction * math.pi

    @property
    def energy_tol(self) -> float:
        """Half-width of the settling band on |H - H*|."""
        return self.energy_band_fraction * 2.0 * self.omega ** 2

    @property
    def angle_band_psi_level(self) -> float:
        """|psi| level that pins the angle inside the settling band.

        1 + cos(n pi + e) >= e^2/4 for |e| <= sqrt(6) (n odd), so
        |psi| <= (angle_tol/2)^2 forces |x1 - n pi| <= angle_tol.
        """
        return (0.5 * self.angle_tol) ** 2

    def as_text(self) -> str:
        """Render as a parseable `key = value` listing, one key per line."""
        lines = []
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, bool):
                text = "true" if value else "false"
            elif isinstance(value, float):
                text = repr(value)
            else:
                text = str(value)
            lines.append(f"{f.name} = {text}")
        return "\n".join(lines) + "\n"


def _axis_count(lo: float, hi: float, step: float) -> int:
    return int(math.floor((hi - lo) / step + 1e-9)) + 1


_FIELD_TYPES = {f.name: type(f.default) for f in fields(ExperimentConfig)}

_TRUE_WORDS = ("true", "1", "yes", "on")
_FALSE_WORDS = ("false", "0", "no", "off")


def _coerce(key: str, text: str):
    if key not in _FIELD_TYPES:
        raise ConfigError(f"unknown config key {key!r}")
    kind = _FIELD_TYPES[key]
    text = text.strip()
    if len(text) >= 2 and text[0] == text[-1] and text[0] in "'\"":
        text = text[1:-1]
    if kind is bool:
        low = text.lower()
        if low in _TRUE_WORDS:
            return True
        if low in _FALSE_WORDS:
            return False
        raise ConfigError(f"{key} expects true/false, got {text!r}")
    if kind is int:
        try:
            return int(text)
        except ValueError:
            raise ConfigError(f"{key} expects an integer, got {text!r}") from None
    if kind is float:
        try:
            return float(text)
        except ValueError:
            raise ConfigError(f"{key} expects a number, got {text!r}") from None
    return text


def _parse_pairs(lines: Sequence[str], source: str) -> Dict[str, object]:
    out: Dict[str, object] = {}
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(
                f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, _, value = line.partition("=")
        out[key.strip()] = _coerce(key.strip(), value)
    return out


def parse_config(path: Optional[str] = None,
                 overrides: Optional[Sequence[str]] = None) -> ExperimentConfig:
    """Build a config from an optional file plus `key=value` overrides.

    The file is flat `key = value` text; `#` starts a comment.  Unknown
    keys are hard errors.  Overrides are applied after the file.
    """
    merged: Dict[str, object] = {}
    if path is not None:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                merged.update(_parse_pairs(fh.readlines(), path))
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path!r}: {exc}") from None
    if overrides:
        merged.update(_parse_pairs(list(overrides), "<override>"))
    return ExperimentConfig(**merged)


# -- lockstep batch engine ------------------------------------------------


@dataclass
class BatchOutcome:
    """Per-trajectory results of one lockstep batch (arrays over slots)."""

    settle_x: np.ndarray
    settle_h: np.ndarray
    switches: np.ndarray
    min_gap: np.ndarray
    ever_local: np.ndarray
    final_mode_local: np.ndarray
    final_local_entry: np.ndarray
    envelope_violation: np.ndarray
    max_abs_x2: np.ndarray
    max_abs_y: np.ndarray
    diverged: np.ndarray
    eps_sample: float
    events: List[Tuple[int, float, str, str, float, float, float]]


def _simulate_batch(config: ExperimentConfig, x1_0: np.ndarray,
                    x2_0: np.ndarray) -> BatchOutcome:
    """Advance a batch of initial conditions in lockstep over the horizon.

    Mode and frozen target are held constant within each RK4 step; the
    switching rules are evaluated once per completed sample, exactly like
    the scalar path in run_single.
    """
    params = config.params()
    grid = config.time_grid()
    h = grid.h
    omega = params.omega
    omega2 = omega ** 2
    m = x1_0.size
    x1 = np.array(x1_0, dtype=float)
    x2 = np.array(x2_0, dtype=float)
    sup = sv.BatchSupervisor(config.supervisor, params, x1, x2, grid.t0)
    d_fn = config.disturbance().as_callable(grid.t0, h, grid.n_steps)
    use_sign = config.controller == "sign"
    saturate = config.saturate_local
    fixed_global = config.supervisor == "fixed-global"
    fixed_local = config.supervisor == "fixed-local"
    release = float(sigma(params.delta_cap))
    kap = kappa(params)
    angle_tol = config.angle_tol
    energy_tol = config.energy_tol

    def control(a1, a2):
        if not fixed_global:
            ul = local_linear(a1, a2, sup.target, params, saturate)
            if fixed_local:
                return ul
        ug = global_sign(a1, a2, params) if use_sign \
            else global_smooth(a1, a2, params)
        if fixed_global:
            return ug
        return np.where(sup.is_local, ul, ug)

    def rhs(t, a1, a2):
        u = control(a1, a2)
        acc = -omega2 * np.sin(a1) + np.cos(a1) * (u + d_fn(t))
        return a2, acc

    psi = psi_norm(x1, x2)
    prev_psi = psi
    seg_min = psi.copy()
    seg_max = psi.copy()
    local_entry = np.where(sup.is_local, grid.t0, np.nan)
    ever_local = sup.is_local.copy()
    env_max = np.where(sup.is_local, psi - release, -np.inf)
    cand_x = np.full(m, np.nan)
    cand_h = np.full(m, np.nan)
    on_x = np.zeros(m, dtype=bool)
    on_h = np.zeros(m, dtype=bool)
    dev_h = np.abs(output_y(x1, x2, omega))
    on_x = settling_candidate_update(
        np.abs(x1 - nearest_odd_multiple(x1)) <= angle_tol, grid.t0, cand_x, on_x)
    on_h = settling_candidate_update(dev_h <= energy_tol, grid.t0, cand_h, on_h)
    max_abs_x2 = np.abs(x2)
    max_abs_y = dev_h
    alive = np.ones(m, dtype=bool)
    eps_sample = 0.0
    events: List[Tuple[int, float, str, str, float, float, float]] = []

    with np.errstate(all="ignore"):
        for i in range(1, grid.n_steps + 1):
            t_prev = grid.time_at(i - 1)
            k1a, k1b = rhs(t_prev, x1, x2)
            k2a, k2b = rhs(t_prev + 0.5 * h, x1 + 0.5 * h * k1a, x2 + 0.5 * h * k1b)
            k3a, k3b = rhs(t_prev + 0.5 * h, x1 + 0.5 * h * k2a, x2 + 0.5 * h * k2b)
            k4a, k4b = rhs(t_prev + h, x1 + h * k3a, x2 + h * k3b)
            x1 = x1 + (h / 6.0) * (k1a + 2.0 * k2a + 2.0 * k3a + k4a)
            x2 = x2 + (h / 6.0) * (k1b + 2.0 * k2b + 2.0 * k3b + k4b)
            bad = (~(np.isfinite(x1) & np.isfinite(x2))
                   | (np.abs(x1) > DIVERGENCE_LIMIT)
                   | (np.abs(x2) > DIVERGENCE_LIMIT))
            newly = alive & bad
            if newly.any():
                alive &= ~newly
                x1[newly] = np.nan
                x2[newly] = np.nan

            t = grid.time_at(i)
            psi = psi_norm(x1, x2)
            if alive.any():
                eps_sample = max(eps_sample, float(
                    np.max(np.abs(psi - prev_psi)[alive])))
            prev_psi = psi
            seg_min = np.fmin(seg_min, psi)
            seg_max = np.fmax(seg_max, psi)

            res = sup.update(t, x1, psi)
            if res is not None:
                to_local, to_global = res
                switched = to_local | to_global
                if switched.any():
                    for j in np.nonzero(switched)[0]:
                        jj = int(j)
                        entering_local = bool(to_local[jj])
                        events.append((
                            jj, t,
                            sv.GLOBAL if entering_local else sv.LOCAL,
                            sv.LOCAL if entering_local else sv.GLOBAL,
                            float(psi[jj]), float(seg_min[jj]),
                            float(seg_max[jj])))
                    local_entry[to_local] = t
                    local_entry[to_global] = np.nan
                    env_max[switched] = -np.inf
                    ever_local |= to_local
                    # New segment seeded with the switch sample itself.
                    seg_min[switched] = psi[switched]
                    seg_max[switched] = psi[switched]

            loc = sup.is_local & alive
            if loc.any():
                env = release * np.exp(-0.5 * kap * (t - local_entry[loc]))
                env_max[loc] = np.maximum(env_max[loc], psi[loc] - env)

            on_x = settling_candidate_update(
                np.abs(x1 - nearest_odd_multiple(x1)) <= angle_tol, t, cand_x, on_x)
            dev_h = np.abs(output_y(x1, x2, omega))
            on_h = settling_candidate_update(dev_h <= energy_tol, t, cand_h, on_h)
            max_abs_x2 = np.fmax(max_abs_x2, np.abs(x2))
            max_abs_y = np.fmax(max_abs_y, dev_h)

    return BatchOutcome(
        settle_x=np.where(on_x, cand_x, np.nan),
        settle_h=np.where(on_h, cand_h, np.nan),
        switches=sup.switches.copy(),
        min_gap=sup.min_gap.copy(),
        ever_local=ever_local,
        final_mode_local=sup.is_local.copy(),
        final_local_entry=np.where(sup.is_local, local_entry, np.nan),
        envelope_violation=np.where(sup.is_local, env_max, np.nan),
        max_abs_x2=max_abs_x2,
        max_abs_y=max_abs_y,
        diverged=~alive,
        eps_sample=eps_sample,
        events=events,
    )


def _simulate_chunk(args) -> BatchOutcome:
    config, x1_0, x2_0 = args
    return _simulate_batch(config, x1_0, x2_0)


def _worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV, "1").strip().lower()
    if raw == "auto":
        return os.cpu_count() or 1
    try:
        return max(1, int(raw))
    except ValueError:
        warnings.warn(f"{WORKERS_ENV}={raw!r} is not a count; running serial")
        return 1


# -- sweep ----------------------------------------------------------------


@dataclass(frozen=True)
class SweepEvent:
    """One supervisor switch observed during a sweep.

    seg_min/seg_max are the extremes of |psi| over the segment that ends
    at this switch, endpoints included (the previous switch sample seeds
    the segment).
    """

    index: int
    time: float
    from_mode: str
    to_mode: str
    eta_norm: float
    seg_min: float
    seg_max: float


@dataclass
class SweepResult:
    """Everything a sweep produced, in grid order (x1-major)."""

    config: ExperimentConfig
    x1_0: np.ndarray
    x2_0: np.ndarray
    settle_x: np.ndarray
    settle_h: np.ndarray
    switches: np.ndarray
    min_gap: np.ndarray
    ever_local: np.ndarray
    final_mode_local: np.ndarray
    final_local_entry: np.ndarray
    envelope_violation: np.ndarray
    max_abs_x2: np.ndarray
    max_abs_y: np.ndarray
    diverged: np.ndarray
    events: List[SweepEvent]
    eps_sample: float
    distribution: object
    summary: Dict[str, float]

    def write_csvs(self, out_dir: Optional[str] = None) -> Dict[str, str]:
        """Write sweep.csv, dist.csv and summary.csv; returns their paths."""
        out_dir = self.config.output_dir if out_dir is None else out_dir
        os.makedirs(out_dir, exist_ok=True)
        paths = {}

        paths["sweep"] = os.path.join(out_dir, "sweep.csv")
        with open(paths["sweep"], "w", encoding="utf-8", newline="") as fh:
            fh.write("x1_0,x2_0,T_x,T_H,reached_x,reached_H,switches\n")
            for i in range(self.x1_0.size):
                fh.write(",".join((
                    _fmt(self.x1_0[i]), _fmt(self.x2_0[i]),
                    _fmt(self.settle_x[i]), _fmt(self.settle_h[i]),
                    str(int(math.isfinite(self.settle_x[i]))),
                    str(int(math.isfinite(self.settle_h[i]))),
                    str(int(self.switches[i])))) + "\n")

        dist = self.distribution
        paths["dist"] = os.path.join(out_dir, "dist.csv")
        with open(paths["dist"], "w", encoding="utf-8", newline="") as fh:
            fh.write("t,cdf_x,cdf_H,pdf_x,pdf_H\n")
            edges = dist.right_edges
            for i in range(edges.size):
                fh.write(",".join((
                    _fmt(edges[i]), _fmt(dist.cdf_x[i]), _fmt(dist.cdf_h[i]),
                    _fmt(dist.pdf_x[i]), _fmt(dist.pdf_h[i]))) + "\n")

        paths["summary"] = os.path.join(out_dir, "summary.csv")
        with open(paths["summary"], "w", encoding="utf-8", newline="") as fh:
            fh.write("E_x,E_H,t_x_99,t_H_99,unreached_x,unreached_H\n")
            fh.write(",".join((
                _fmt(self.summary["E_x"]), _fmt(self.summary["E_H"]),
                _fmt(self.summary["t_x_99"]), _fmt(self.summary["t_H_99"]),
                str(int(self.summary["unreached_x"])),
                str(int(self.summary["unreached_H"])))) + "\n")
        return paths


def _fmt(value) -> str:
    """Shortest round-trip decimal; NaN spelled `nan`."""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    v = float(value)
    return "nan" if math.isnan(v) else repr(v)


def run_sweep(config: ExperimentConfig) -> SweepResult:
    """Simulate the whole initial-condition grid and aggregate statistics.

    Work is cut into fixed-size chunks; with SWINGLAB_WORKERS > 1 the
    chunks fan out over a process pool.  Chunking is independent of the
    worker count, so outputs are byte-identical either way.  Divergence
    never aborts a sweep: the affected records become unreached.
    """
    x1_0, x2_0 = config.ic_grid()
    n = x1_0.size
    chunk_args = [(config, x1_0[i:i + CHUNK], x2_0[i:i + CHUNK])
                  for i in range(0, n, CHUNK)]
    workers = _worker_count()
    if workers > 1 and len(chunk_args) > 1:
        with multiprocessing.Pool(min(workers, len(chunk_args))) as pool:
            outcomes = pool.map(_simulate_chunk, chunk_args)
    else:
        outcomes = [_simulate_chunk(args) for args in chunk_args]

    def cat(name):
        return np.concatenate([getattr(o, name) for o in outcomes])

    events: List[SweepEvent] = []
    for offset, outcome in zip(range(0, n, CHUNK), outcomes):
        for (j, t, from_mode, to_mode, eta, smin, smax) in outcome.events:
            events.append(SweepEvent(offset + j, t, from_mode, to_mode,
                                     eta, smin, smax))

    settle_x = cat("settle_x")
    settle_h = cat("settle_h")
    switches = cat("switches")
    diverged = cat("diverged")
    grid = config.time_grid()
    distribution = build_distribution(settle_x, settle_h, grid.t_end,
                                      config.n_bins)
    eps_sample = max(o.eps_sample for o in outcomes)
    summary = {
        "E_x": distribution.entropy_x,
        "E_H": distribution.entropy_h,
        "t_x_99": distribution.time_at_cdf(0.99, "x"),
        "t_H_99": distribution.time_at_cdf(0.99, "h"),
        "unreached_x": distribution.unreached_x,
        "unreached_H": distribution.unreached_h,
        "max_switches": int(switches.max()),
        "eps_sample": eps_sample,
        "diverged": int(diverged.sum()),
    }
    return SweepResult(
        config=config, x1_0=x1_0, x2_0=x2_0,
        settle_x=settle_x, settle_h=settle_h,
        switches=switches, min_gap=cat("min_gap"),
        ever_local=cat("ever_local"),
        final_mode_local=cat("final_mode_local"),
        final_local_entry=cat("final_local_entry"),
        envelope_violation=cat("envelope_violation"),
        max_abs_x2=cat("max_abs_x2"), max_abs_y=cat("max_abs_y"),
        diverged=diverged, events=events, eps_sample=eps_sample,
        distribution=distribution, summary=summary,
    )


# -- single run -----------------------------------------------------------


@dataclass
class SingleRunResult:
    """Full time series of one closed-loop run."""

    config: ExperimentConfig
    times: np.ndarray
    x1: np.ndarray
    x2: np.ndarray
    u: np.ndarray
    modes: List[str]
    energy: np.ndarray
    y: np.ndarray
    psi: np.ndarray
    events: List[sv.SwitchEvent]
    settle_x: float
    settle_h: float
    final_local_entry: float
    envelope_violation: float
    diverged: bool

    def write_csvs(self, out_dir: Optional[str] = None) -> Dict[str, str]:
        """Write trajectory.csv and switches.csv; returns their paths."""
        out_dir = self.config.output_dir if out_dir is None else out_dir
        os.makedirs(out_dir, exist_ok=True)
        paths = {}
        paths["trajectory"] = os.path.join(out_dir, "trajectory.csv")
        with open(paths["trajectory"], "w", encoding="utf-8", newline="") as fh:
            fh.write("t,x1,x2,u,mode,H,y,psi_norm\n")
            for i in range(self.times.size):
                fh.write(",".join((
                    _fmt(self.times[i]), _fmt(self.x1[i]), _fmt(self.x2[i]),
                    _fmt(self.u[i]), self.modes[i], _fmt(self.energy[i]),
                    _fmt(self.y[i]), _fmt(self.psi[i]))) + "\n")
        paths["switches"] = os.path.join(out_dir, "switches.csv")
        with open(paths["switches"], "w", encoding="utf-8", newline="") as fh:
            fh.write("t,from,to,eta_norm\n")
            for ev in self.events:
                fh.write(",".join((
                    _fmt(ev.time), ev.from_mode, ev.to_mode,
                    _fmt(ev.eta_norm))) + "\n")
        return paths


def run_single(config: ExperimentConfig, x0: Sequence[float]) -> SingleRunResult:
    """Simulate one initial condition with the configured supervisor.

    Divergence is reported, not raised: the returned series carry NaN from
    the failing step on and the diverged flag is set.
    """
    params = config.params()
    grid = config.time_grid()
    omega2 = params.omega ** 2
    use_sign = config.controller == "sign"
    saturate = config.saturate_local
    d_fn = config.disturbance().as_callable(grid.t0, grid.h, grid.n_steps)
    state = sv.init_state(x0, grid.t0, params, config.supervisor)
    init_mode, init_target = state.mode, state.target_angle

    def u_of(a1, a2):
        if state.mode == sv.LOCAL:
            return local_linear(a1, a2, state.target_angle, params, saturate)
        return global_sign(a1, a2, params) if use_sign \
            else global_smooth(a1, a2, params)

    def field(t, x):
        u = u_of(x[0], x[1])
        acc = -omega2 * np.sin(x[0]) + np.cos(x[0]) * (u + d_fn(t))
        return np.array([x[1], acc])

    def observer(i, t, x):
        sv.step(state, t, float(x[0]), float(x[1]), params)

    diverged = False
    try:
        traj = integrate(field, np.asarray(x0, dtype=float), grid, observer)
    except SimulationDiverged as exc:
        traj = exc.trajectory
        diverged = True

    times = grid.times()
    x1s = traj.states[:, 0]
    x2s = traj.states[:, 1]
    events = list(state.switch_log)

    # Replay the mode/target schedule to rebuild the per-sample controls.
    modes: List[str] = []
    targets = np.full(times.size, np.nan)
    cur_mode, cur_target = init_mode, init_target
    pending = list(events)
    for i, t in enumerate(times):
        while pending and pending[0].time <= t + 1e-12:
            ev = pending.pop(0)
            cur_mode = ev.to_mode
            cur_target = (nearest_odd_target(x1s[i]) * math.pi
                          if cur_mode == sv.LOCAL else None)
        modes.append(cur_mode)
        if cur_target is not None:
            targets[i] = cur_target

    with np.errstate(all="ignore"):
        is_local = np.array([mode == sv.LOCAL for mode in modes])
        u_global = global_sign(x1s, x2s, params) if use_sign \
            else global_smooth(x1s, x2s, params)
        u_local = local_linear(x1s, x2s, targets, params, saturate)
        u = np.where(is_local, u_local, u_global)
        h_series = energy(x1s, x2s, params.omega)
        y_series = output_y(x1s, x2s, params.omega)
        psi_series = psi_norm(x1s, x2s)
        dev_x = np.abs(x1s - nearest_odd_multiple(x1s))
        settle_x = settling_time(times, dev_x, config.angle_tol)
        settle_h = settling_time(times, np.abs(y_series), config.energy_tol)

        final_local_entry = math.nan
        envelope_violation = math.nan
        if modes[-1] == sv.LOCAL:
            final_local_entry = grid.t0
            for ev in events:
                if ev.to_mode == sv.LOCAL:
                    final_local_entry = ev.time
            keep = times >= final_local_entry
            env = float(sigma(params.delta_cap)) * np.exp(
                -0.5 * kappa(params) * (times[keep] - final_local_entry))
            envelope_violation = float(np.max(psi_series[keep] - env))

    return SingleRunResult(
        config=config, times=times, x1=x1s, x2=x2s, u=u, modes=modes,
        energy=h_series, y=y_series, psi=psi_series, events=events,
        settle_x=settle_x, settle_h=settle_h,
        final_local_entry=final_local_entry,
        envelope_violation=envelope_violation, diverged=diverged,
    )


# -- reach-time estimate from the energy shell ------------------------------


@dataclass
class ShellEstimate:
    """Worst observed time from the |y| shell into the capture set."""

    estimate: float
    times: np.ndarray
    x1_0: np.ndarray
    x2_0: np.ndarray
    cutoff: float
    violations: int


def _shell_samples(n: int, omega: float,
                   shell: float) -> Tuple[np.ndarray, np.ndarray]:
    """Deterministic states with |H - H*| = shell, spread over both sides.

    The high side H* + shell admits any angle; the low side restricts the
    angle to where the kinetic term stays nonnegative (and disappears
    entirely when H* - shell <= 0).  Velocity signs alternate.
    """
    target = 2.0 * omega ** 2
    h_hi, h_lo = target + shell, target - shell
    branches = []
    if h_lo > 0.0:
        n_hi = (n + 1) // 2
        branches.append((h_hi, math.pi, n_hi))
        bound = 1.0 - h_lo / omega ** 2
        half_span = math.pi if bound <= -1.0 else math.acos(bound)
        branches.append((h_lo, half_span, n - n_hi))
    else:
        branches.append((h_hi, math.pi, n))
    x1s: List[float] = []
    x2s: List[float] = []
    for level, half_span, count in branches:
        for j in range(count):
            frac = (j + 0.5) / count
            a1 = -half_span + 2.0 * half_span * frac
            kinetic = max(level - omega ** 2 * (1.0 - math.cos(a1)), 0.0)
            a2 = math.sqrt(2.0 * kinetic)
            x1s.append(a1)
            x2s.append(a2 if j % 2 == 0 else -a2)
    return np.array(x1s), np.array(x2s)


def estimate_t_delta_delta(config: ExperimentConfig,
                           n_boundary_samples: int = 200,
                           delta: Optional[float] = None) -> ShellEstimate:
    """Measure the worst reach time from the energy shell into |psi| <= delta.

    States are sampled on |H - H*| = delta_of(delta) and driven by the
    global law alone.  Samples still outside after ten reference periods
    count as violations and are excluded from the estimate.
    """
    params = config.params()
    cap = params.delta_cap if delta is None else float(delta)
    if not (cap > 0.0):
        raise ConfigError(f"requires delta > 0, got {cap:g}")
    if n_boundary_samples < 1:
        raise ConfigError(
            f"requires n_boundary_samples >= 1, got {n_boundary_samples}")
    omega = params.omega
    shell = delta_of(cap, omega)
    x1_0, x2_0 = _shell_samples(n_boundary_samples, omega, shell)
    cutoff = 10.0 * REFERENCE_PERIOD
    h = config.h
    n_steps = int(math.ceil(cutoff / h))
    d_fn = config.disturbance().as_callable(config.t0, h, n_steps)
    use_sign = config.controller == "sign"
    omega2 = omega ** 2

    x1 = x1_0.copy()
    x2 = x2_0.copy()
    first_hit = np.where(psi_norm(x1, x2) <= cap, 0.0, np.nan)

    def rhs(t, a1, a2):
        u = global_sign(a1, a2, params) if use_sign \
            else global_smooth(a1, a2, params)
        return a2, -omega2 * np.sin(a1) + np.cos(a1) * (u + d_fn(t))

    with np.errstate(all="ignore"):
        for i in range(1, n_steps + 1):
            t_prev = config.t0 + (i - 1) * h
            k1a, k1b = rhs(t_prev, x1, x2)
            k2a, k2b = rhs(t_prev + 0.5 * h, x1 + 0.5 * h * k1a, x2 + 0.5 * h * k1b)
            k3a, k3b = rhs(t_prev + 0.5 * h, x1 + 0.5 * h * k2a, x2 + 0.5 * h * k2b)
            k4a, k4b = rhs(t_prev + h, x1 + h * k3a, x2 + h * k3b)
            x1 = x1 + (h / 6.0) * (k1a + 2.0 * k2a + 2.0 * k3a + k4a)
            x2 = x2 + (h / 6.0) * (k1b + 2.0 * k2b + 2.0 * k3b + k4b)
            hit = np.isnan(first_hit) & (psi_norm(x1, x2) <= cap)
            if hit.any():
                first_hit[hit] = i * h
                if not np.isnan(first_hit).any():
                    break

    violations = int(np.isnan(first_hit).sum())
    reached = first_hit[np.isfinite(first_hit)]
    estimate = float(reached.max()) if reached.size else math.nan
    return ShellEstimate(estimate=estimate, times=first_hit, x1_0=x1_0,
                         x2_0=x2_0, cutoff=cutoff, violations=violations)
