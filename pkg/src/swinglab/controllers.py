"""Feedback laws: two energy-pumping global laws and the linear local law.

All functions are elementwise numpy expressions, so they accept scalars or
equal-shape arrays and return the matching shape.  The batch sweep engine
relies on that.
"""

from __future__ import annotations

import numpy as np

from .pendulum import PendulumParams, output_y


def global_sign(x1, x2, params: PendulumParams):
    """Bang-bang energy law u = -u_max * sign((H - H*) x2 cos x1).

    sign(0) is taken as +1, which kicks the hanging equilibrium instead of
    leaving it stuck.
    """
    arg = output_y(x1, x2, params.omega) * x2 * np.cos(x1)
    return -params.u_max * np.where(arg >= 0.0, 1.0, -1.0)


def global_smooth(x1, x2, params: PendulumParams):
    """Smooth energy law u = -u_max * tanh(c (H - H*) x2 cos x1).

    Continuous everywhere, at the price of an extra equilibrium at the
    origin: from (0, 0) the argument vanishes and the law never acts.
    """
    arg = output_y(x1, x2, params.omega) * x2 * np.cos(x1)
    return -params.u_max * np.tanh(params.c * arg)


def local_linear(x1, x2, target_angle, params: PendulumParams,
                 saturate: bool = False):
    """Stabilizing law (k+1)/(1-delta_cap) * ((x1 - n pi) + x2) near upright.

    target_angle is the frozen upright angle n*pi chosen at switch time.
    The law is unsaturated by default; saturate=True clamps it to the
    global level u_max for ablation runs.
    """
    u = params.local_gain * ((x1 - target_angle) + x2)
    if saturate:
        u = np.clip(u, -params.u_max, params.u_max)
    return u


def linear_plant_control(x1, x2, target_angle, gain_pos: float,
                         gain_rate: float, omega: float):
    """Pole-placing law for the gravity-free comparison plant.

    u = -gain_pos (x1 - n pi) - gain_rate x2 + omega^2 x1.  The last term
    cancels the plant's -omega^2 x1, leaving the closed loop
    dx2 = -gain_pos (x1 - n pi) - gain_rate x2 with equilibrium at the
    target angle.  Meant only for linear_plant_derivative.
    """
    return -gain_pos * (x1 - target_angle) - gain_rate * x2 + omega ** 2 * x1
