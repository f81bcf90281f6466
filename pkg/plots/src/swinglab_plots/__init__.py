"""Figures from swinglab CSV output.

Read-only consumer of the sweep/dist/summary files; nothing in here
re-simulates or re-derives the numbers it draws.
"""

from .render import (
    SENTINEL_COLOR,
    plot_distributions,
    plot_shell_sketch,
    plot_sweep,
    render_all,
)

__all__ = [
    "SENTINEL_COLOR",
    "plot_distributions",
    "plot_shell_sketch",
    "plot_sweep",
    "render_all",
]
