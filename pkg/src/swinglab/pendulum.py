"""Pendulum plant, energy outputs, and the constants of the local analysis.

State is x = (x1, x2) with x1 the unwrapped angle from the hanging position
and x2 the angular rate.  The upright set is the family of odd multiples of
pi paired with zero rate.  Control and disturbance enter through the same
cos(x1) channel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

SQRT6 = math.sqrt(6.0)


@dataclass(frozen=True)
class PendulumParams:
    """Plant and controller constants shared across the lab.

    omega: natural frequency of the hanging linearization
    u_max: saturation level of the energy-pumping law
    c: sharpness of the smooth (tanh) energy-pumping law
    k: local feedback gain, must satisfy k > 0.5*omega^4
    delta_cap: radius of the capture set |psi| <= delta_cap, in (0, 1)
    tau_d: supervisor dwell time, zero selects pure hysteresis
    """

    omega: float = 1.0
    u_max: float = 0.1
    c: float = 20.0
    k: float = 1.0
    delta_cap: float = 0.2
    tau_d: float = 0.0

    def __post_init__(self):
        if not (self.omega > 0.0):
            raise ValueError(f"requires omega > 0, got omega={self.omega:g}")
        if not (self.u_max > 0.0):
            raise ValueError(f"requires u_max > 0, got u_max={self.u_max:g}")
        if not (self.c > 0.0):
            raise ValueError(f"requires c > 0, got c={self.c:g}")
        if not (self.tau_d >= 0.0):
            raise ValueError(f"requires tau_d >= 0, got tau_d={self.tau_d:g}")
        lim = 0.5 * self.omega ** 4
        if not (self.k > lim):
            raise ValueError(
                f"requires k > 0.5*omega^4 (= {lim:g}), got k={self.k:g}")
        if not (0.0 < self.delta_cap < 1.0):
            raise ValueError(
                f"requires 0 < delta_cap < 1, got delta_cap={self.delta_cap:g}")
        bracket = self.k + 1.0 - (1.0 + 0.5 * self.omega ** 4) / (1.0 - self.delta_cap)
        if not (bracket > 0.0):
            raise ValueError(
                "requires k + 1 - (1 + 0.5*omega^4)/(1 - delta_cap) > 0 "
                f"(local decay rate would vanish), got bracket={bracket:g}")
        if not (beta_prime(self.delta_cap, 0.0, 1.0) > self.delta_cap):
            # beta_prime(s, 0, .) = sigma(s), independent of the rate argument
            raise ValueError(
                "requires beta_prime(delta_cap, 0) > delta_cap so the "
                f"hysteresis bands nest, got delta_cap={self.delta_cap:g}")

    @property
    def energy_target(self) -> float:
        """Energy level of the upright set, 2*omega^2."""
        return 2.0 * self.omega ** 2

    @property
    def local_gain(self) -> float:
        """Composite gain (k+1)/(1-delta_cap) of the local linear law."""
        return (self.k + 1.0) / (1.0 - self.delta_cap)


def plant_derivative(x, u, d, omega: float):
    """Full pendulum: dx1 = x2, dx2 = -omega^2 sin(x1) + cos(x1)(u + d)."""
    x1, x2 = x[0], x[1]
    return np.array([x2, -omega ** 2 * np.sin(x1) + np.cos(x1) * (u + d)])


def linear_plant_derivative(x, u, omega: float):
    """Comparison plant without gravity nonlinearity: dx2 = -omega^2 x1 + u."""
    x1, x2 = x[0], x[1]
    return np.array([x2, -omega ** 2 * x1 + u])


def energy(x1, x2, omega: float):
    """Mechanical energy H = 0.5 x2^2 + omega^2 (1 - cos x1)."""
    return 0.5 * x2 * x2 + omega ** 2 * (1.0 - np.cos(x1))


def output_y(x1, x2, omega: float):
    """Energy error y = H - 2*omega^2, zero exactly on the upright level set."""
    return energy(x1, x2, omega) - 2.0 * omega ** 2


def psi_norm(x1, x2, omega: float = 1.0):
    """|psi| = sqrt(x2^2 + (1 + cos x1)^2), the distance-like upright output.

    Vanishes exactly at x1 an odd multiple of pi with x2 = 0.  omega is
    accepted for signature symmetry; the output itself does not use it.
    """
    e = 1.0 + np.cos(x1)
    return np.sqrt(x2 * x2 + e * e)


def delta_of(delta: float, omega: float) -> float:
    """Energy shell half-width min{0.5 delta^2, omega^2 delta}.

    The shell |y| <= delta_of(delta) is inscribed in |psi| <= delta: the
    quadratic branch binds at the rate axis, the linear branch at the
    angle axis.
    """
    return min(0.5 * delta * delta, omega ** 2 * delta)


def sigma(s):
    """Overshoot envelope gain 2*sqrt(6)*max{s, sqrt(s)}; sigma(0) = 0."""
    return 2.0 * SQRT6 * np.maximum(s, np.sqrt(s))


def kappa(params: PendulumParams) -> float:
    """Guaranteed exponential decay rate of the local loop's storage.

    kappa = min{1, 2/(1-delta_cap) * [k + 1 - (1 + 0.5 omega^4)/(1-delta_cap)]}.
    Positivity of the bracket is enforced by PendulumParams.
    """
    dc = params.delta_cap
    bracket = params.k + 1.0 - (1.0 + 0.5 * params.omega ** 4) / (1.0 - dc)
    return min(1.0, 2.0 / (1.0 - dc) * bracket)


def beta_prime(s: float, r: float, kap: float):
    """Decaying envelope sigma(s) * exp(-kap * r / 2)."""
    return sigma(s) * np.exp(-0.5 * kap * r)


def nearest_odd_target(x1: float) -> int:
    """Odd integer n minimizing |x1 - n*pi|, ties broken toward larger n."""
    j = math.floor((x1 / math.pi - 1.0) / 2.0 + 0.5)
    return 2 * j + 1


def nearest_odd_multiple(x1):
    """Vectorized nearest odd multiple of pi (the angle n*pi itself)."""
    j = np.floor((np.asarray(x1) / np.pi - 1.0) / 2.0 + 0.5)
    return (2.0 * j + 1.0) * np.pi


def local_storage(x1, x2, n: int, omega: float):
    """Quadratic storage 0.5 omega^4 [(x1-n pi)^2 + (x1-n pi+x2)^2]."""
    e = x1 - n * np.pi
    return 0.5 * omega ** 4 * (e * e + (e + x2) * (e + x2))


@dataclass(frozen=True)
class DisturbanceSpec:
    """Matched disturbance signal d(t).

    kind: one of zero, constant, sinusoid, noise
    amplitude: |d| bound (exact for constant/sinusoid, uniform range for noise)
    frequency: radian frequency of the sinusoid
    seed: RNG seed for the noise kind

    Noise is piecewise constant per grid step so every integration path
    sees exactly the same measurable input.
    """

    kind: str = "zero"
    amplitude: float = 0.0
    frequency: float = 1.0
    seed: int = 0

    KINDS = ("zero", "constant", "sinusoid", "noise")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(
                f"disturbance kind must be one of {self.KINDS}, got {self.kind!r}")
        if not (self.amplitude >= 0.0):
            raise ValueError(
                f"requires amplitude >= 0, got amplitude={self.amplitude:g}")
        if self.kind == "sinusoid" and not (self.frequency > 0.0):
            raise ValueError(
                f"requires frequency > 0 for sinusoid, got {self.frequency:g}")

    def as_callable(self, t0: float, h: float, n_steps: int):
        """Return d(t) valid on [t0, t0 + n_steps*h]."""
        if self.kind == "zero" or self.amplitude == 0.0:
            return lambda t: 0.0
        if self.kind == "constant":
            amp = self.amplitude
            return lambda t: amp
        if self.kind == "sinusoid":
            amp, w = self.amplitude, self.frequency
            return lambda t: amp * math.sin(w * t)
        values = self.step_values(n_steps)
        last = n_steps - 1

        def lookup(t):
            i = int((t - t0) / h + 1e-9)
            return values[min(max(i, 0), last)]

        return lookup

    def step_values(self, n_steps: int) -> np.ndarray:
        """Per-step constant values; only meaningful for the noise kind."""
        if self.kind == "noise":
            rng = np.random.default_rng(self.seed)
            return rng.uniform(-self.amplitude, self.amplitude, n_steps)
        raise ValueError("step_values is defined for the noise kind only")
