"""SVG output.  Plots are deterministic: fixed hash salt and no timestamp."""
from __future__ import annotations

import csv
import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .lift import ArgumentTrack, read_track_csv  # noqa: E402
from .mu import MuInvariant, read_mu_csv  # noqa: E402
from .rigged import TWO_PI, StepFunction  # noqa: E402

_RC = {"svg.hashsalt": "specflow", "svg.fonttype": "path"}


def _save(fig, path) -> None:
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def plot_track(track: ArgumentTrack, path) -> None:
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(6, 4))
        for j in range(track.n_tracks):
            ax.plot(track.grid, track.thetas[:, j], lw=1)
        ax.set_xlabel("r")
        ax.set_ylabel("theta_j(r)  [rad]")
        ax.set_title(f"lifted phases ({track.n_tracks} tracks)")
        for k in range(math.floor(ax.get_ylim()[0] / TWO_PI), math.ceil(ax.get_ylim()[1] / TWO_PI) + 1):
            ax.axhline(k * TWO_PI, color="0.85", lw=0.5, zorder=0)
        _save(fig, path)


def _step_xy(step: StepFunction):
    xs, ys = [], []
    for lo, hi, v in step.intervals():
        xs += [lo, hi]
        ys += [v, v]
    return xs, ys


def plot_mu(m: MuInvariant | StepFunction, path) -> None:
    step = m.step if isinstance(m, MuInvariant) else m
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(6, 3))
        ax.plot(*_step_xy(step), lw=1.5)
        ax.set_xlim(0, TWO_PI)
        ax.set_xlabel("theta  [rad]")
        ax.set_ylabel("mu(theta)")
        _save(fig, path)


def plot_scatter(rows: list[dict], path) -> None:
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(6, 4))
        by_lam: dict = {}
        for row in rows:
            if row["xi"] == "nan":
                continue
            by_lam.setdefault(row["lambda"], []).append((float(row["r"]), float(row["xi"])))
        for lam, pts in by_lam.items():
            pts.sort()
            ax.plot([p[0] for p in pts], [p[1] for p in pts], marker=".", lw=1, label=f"lambda={lam}")
        ax.set_xlabel("r")
        ax.set_ylabel("xi(lambda; H_r, H_0)")
        if by_lam:
            ax.legend(fontsize="small")
        _save(fig, path)


def plot_csv(src, path) -> None:
    """Dispatch on the CSV header: track, mu or scatter output."""
    with open(src, newline="") as fh:
        header = next(csv.reader(fh))
    if header == ["r", "j", "theta_j"]:
        plot_track(read_track_csv(src), path)
    elif header == ["theta_lo", "theta_hi", "value"]:
        plot_mu(read_mu_csv(src), path)
    elif header[:2] == ["lambda", "r"]:
        with open(src, newline="") as fh:
            plot_scatter(list(csv.DictReader(fh)), path)
    else:
        raise ValueError(f"unrecognised CSV header {header}")
