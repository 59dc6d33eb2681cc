"""Static SVG figures drawn from exported CSV artifacts.

Figures are written with a fixed SVG hash salt and no date stamp so the
same input always gives the same bytes.
"""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

__all__ = [
    "plot_trajectories",
    "plot_series",
    "plot_modes",
    "read_modes",
    "write_modes",
    "save_svg",
]

plt.rcParams["svg.hashsalt"] = "bomilearn"


def save_svg(fig, path) -> Path:
    path = Path(path)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def plot_trajectories(records, path, sessions=None, targets=None) -> Path:
    """One panel per selected session with every cursor path of that session.

    ``sessions`` defaults to four evenly spread sessions (first and last
    included).
    """
    all_sessions = sorted({r.session_idx for r in records})
    if sessions is None:
        idx = np.unique(np.linspace(0, len(all_sessions) - 1, min(4, len(all_sessions))).round())
        sessions = [all_sessions[int(i)] for i in idx] if all_sessions else []
    fig, axes = plt.subplots(1, max(1, len(sessions)), figsize=(3.2 * max(1, len(sessions)), 3.2),
                             squeeze=False)
    for ax, s in zip(axes[0], sessions):
        for r in records:
            if r.session_idx == s:
                ax.plot(r.cursor_traj[:, 0], r.cursor_traj[:, 1], lw=0.6, color="tab:blue", alpha=0.6)
        pts = targets if targets is not None else np.unique(
            np.array([r.target for r in records]), axis=0)
        pts = np.asarray(pts)
        if pts.size:
            ax.scatter(pts[:, 0], pts[:, 1], s=60, facecolors="none", edgecolors="k")
        ax.set_title(f"session {s + 1}")
        ax.set_aspect("equal")
        ax.set_xlabel("x1")
    axes[0][0].set_ylabel("x2")
    if not sessions:
        axes[0][0].text(0.5, 0.5, "no trials", ha="center", va="center", transform=axes[0][0].transAxes)
    fig.tight_layout()
    return save_svg(fig, path)


def plot_series(k, values, path, *, ylabel="value", title=None) -> Path:
    """Single curve against trial index; empty input gives annotated empty axes."""
    fig, ax = plt.subplots(figsize=(5, 3.2))
    k = np.asarray(k)
    if k.size:
        ax.plot(k, values, lw=1.2)
    else:
        ax.text(0.5, 0.5, "warning: no data", ha="center", va="center", transform=ax.transAxes,
                color="tab:red")
    ax.set_xlabel("trial")
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    return save_svg(fig, path)


def write_modes(rows, path) -> Path:
    """``rows`` are ``(session, source, mode, sigma, v)`` with ``v`` a joint-space vector."""
    path = Path(path)
    m = len(rows[0][4]) if rows else 0
    with open(path, "w") as fh:
        fh.write(",".join(["session", "source", "mode", "sigma"] + [f"v{i + 1}" for i in range(m)]) + "\n")
        for session, source, mode, sigma, v in rows:
            fh.write(",".join([str(session), source, str(mode), f"{sigma:.17g}"]
                              + [f"{x:.17g}" for x in v]) + "\n")
    return path


def read_modes(path):
    rows = []
    with open(path) as fh:
        fh.readline()
        for line in fh:
            parts = line.strip().split(",")
            if len(parts) < 4:
                continue
            rows.append((int(parts[0]), parts[1], int(parts[2]), float(parts[3]),
                         np.array(parts[4:], dtype=float)))
    return rows


def plot_modes(rows, path, n_modes: int = 2) -> Path:
    """Right singular vectors of the true and learned maps, one row of panels per mode."""
    sessions = sorted({r[0] for r in rows if r[1] == "C_hat"})
    fig, axes = plt.subplots(n_modes, 1, figsize=(6, 2.2 * n_modes), squeeze=False)
    for j in range(n_modes):
        ax = axes[j][0]
        for s in sessions:
            for session, source, mode, _, v in rows:
                if source == "C_hat" and session == s and mode == j:
                    ax.plot(np.arange(1, len(v) + 1), v, lw=0.8, alpha=0.4 + 0.6 * (s + 1) / len(sessions),
                            color="tab:blue", label=f"learned, session {s + 1}")
        for _, source, mode, _, v in rows:
            if source == "C" and mode == j:
                ax.plot(np.arange(1, len(v) + 1), v, "k--", lw=1.2, label="true")
                break
        ax.set_ylabel(f"mode {j + 1}")
        if not rows:
            ax.text(0.5, 0.5, "warning: no data", ha="center", va="center", transform=ax.transAxes,
                    color="tab:red")
    axes[-1][0].set_xlabel("joint")
    fig.tight_layout()
    return save_svg(fig, path)
