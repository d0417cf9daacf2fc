"""Figure rendering for trajectories and result tables.

Uses the Agg backend unconditionally: the CLI writes PNG files next to its
delimited output and never opens a window.
"""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .evolve import Trajectory  # noqa: E402
from .harness import Table  # noqa: E402

__all__ = ["render_table", "render_trajectory"]


def render_table(table: Table, path) -> Path:
    """Render a sweep or convergence table to a PNG.

    Tables spanning several packet widths get an error-vs-width log plot;
    anything else gets measured probabilities on top of the analytic curves
    against the energy ratio.
    """
    path = Path(path)
    widths = table.column("w_over_lambda") if "w_over_lambda" in table.headers else np.array([])
    if len(set(widths.tolist())) > 1:
        err = np.abs(table.column("p_left") - table.column("r_analytic"))
        fig, ax = plt.subplots(figsize=(5.0, 4.0))
        ax.loglog(widths, err, "o-", color="tab:blue", label="|p_left - R|")
        ax.set_xlabel("packet width / carrier wavelength")
        ax.set_ylabel("absolute error")
        ax.set_title("narrowband convergence to the stationary limit")
        ax.legend()
    else:
        x = table.column("e_over_v0")
        fig, ax = plt.subplots(figsize=(5.0, 4.0))
        ax.plot(x, table.column("r_analytic"), "-", color="tab:blue", label="R analytic")
        ax.plot(x, table.column("t_analytic"), "-", color="tab:orange", label="T analytic")
        p_left = table.column("p_left")
        if np.isfinite(p_left).any():
            ax.plot(x, p_left, "o", color="tab:blue", label="P left (measured)")
            ax.plot(x, table.column("p_right"), "s", color="tab:orange", label="P right (measured)")
        ax.set_xscale("log")
        ax.set_xlabel("E / V0")
        ax.set_ylabel("probability")
        ax.set_title("step scattering: packet measurements vs analytic")
        ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_trajectory(traj: Trajectory, path) -> Path:
    """Render one run: region probabilities and mean positions over time,
    plus field snapshots when the trajectory recorded any."""
    path = Path(path)
    n_rows = 3 if traj.states else 2
    fig, axes = plt.subplots(n_rows, 1, figsize=(6.0, 2.6 * n_rows), sharex=False)

    ax = axes[0]
    ax.plot(traj.times, traj.left_probability, color="tab:blue", label="left of step")
    ax.plot(traj.times, traj.right_probability, color="tab:orange", label="right of step")
    ax.plot(traj.times, traj.norms, ":", color="gray", label="total norm")
    ax.set_ylabel("probability")
    ax.legend(loc="center right", fontsize="small")

    ax = axes[1]
    ax.plot(traj.times, traj.mean_position_left, color="tab:blue", label="left mean")
    ax.plot(traj.times, traj.mean_position_right, color="tab:orange", label="right mean")
    ax.axhline(traj.split, color="black", lw=0.6)
    ax.set_xlabel("time")
    ax.set_ylabel("position")
    ax.legend(loc="upper left", fontsize="small")

    if traj.states:
        ax = axes[2]
        picks = sorted({0, len(traj.states) // 2, len(traj.states) - 1})
        for i in picks:
            state = traj.states[i]
            ax.plot(
                state.grid.x(),
                np.abs(state.psi) ** 2,
                lw=0.8,
                label=f"t = {state.time:.1f}",
            )
        ax.axvline(traj.split, color="black", lw=0.6)
        ax.set_xlabel("position")
        ax.set_ylabel("|field|^2")
        ax.legend(fontsize="small")

    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
