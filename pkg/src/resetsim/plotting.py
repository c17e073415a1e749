"""Figure rendering for simulation and analysis outputs.

Every figure is drawn from a previously written delimited file, so a plot
can always be regenerated from the data shipped alongside it. SVG output is
pinned to a fixed hash salt and a blank creation date, which makes reruns
byte-identical.
"""
from __future__ import annotations

import json
import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_SALT = "brownian-reset"


def _savefig(fig, dest) -> None:
    dest = str(dest)
    with plt.rc_context({"svg.hashsalt": _SALT}):
        if dest.endswith(".svg"):
            fig.savefig(dest, metadata={"Date": None})
        else:
            fig.savefig(dest)
    plt.close(fig)


def _read_csv_columns(src) -> tuple[list[str], np.ndarray]:
    with open(src, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
    data = np.loadtxt(src, delimiter=",", skiprows=1, ndmin=2, dtype=str)
    return header, data


def plot_trajectory(trajectory_csv, sidecar_json, dest) -> None:
    """Sample path figure: w_n in black, xi_n in blue, reset times in red."""
    data = np.loadtxt(trajectory_csv, delimiter=",", skiprows=1, ndmin=2)
    t, xi, w = data[:, 0], data[:, 1], data[:, 2]
    with open(sidecar_json, "r", encoding="utf-8") as fh:
        side = json.load(fh)
    resets = side.get("reset_times", [])

    fig, ax = plt.subplots(figsize=(8.0, 4.5))
    for i, r in enumerate(resets):
        ax.axvline(r, color="tab:red", lw=0.7, alpha=0.55,
                   label="reset" if i == 0 else None)
    ax.plot(t, w, color="black", lw=0.8, label="free motion $w_n$")
    ax.plot(t, xi, color="tab:blue", lw=1.0, label=r"reset process $\xi_n$")
    ax.axhline(0.0, color="0.6", lw=0.5)
    ax.set_xlabel("t")
    ax.set_ylabel("value")
    ax.set_xlim(0.0, 1.0)
    ax.legend(loc="best", fontsize=9)
    fig.tight_layout()
    _savefig(fig, dest)


def plot_sup_curve(curve_csv, dest, lam: float | None = None) -> None:
    """Two panels sharing the height axis.

    Left: a spread of optimal paths, each flat then rising to its terminal
    height x. Right: the rate as a function of x, drawn with x vertical so
    a path's endpoint lines up with its rate.
    """
    header, raw = _read_csv_columns(curve_csv)
    x = raw[:, header.index("x")].astype(float)
    rate = raw[:, header.index("rate")].astype(float)
    s_star = raw[:, header.index("s_star")].astype(float)
    k_star = raw[:, header.index("k_star")].astype(float)

    ok = np.isfinite(rate)
    fig, (ax_path, ax_rate) = plt.subplots(
        1, 2, figsize=(9.0, 4.2), sharey=True, gridspec_kw={"width_ratios": [3, 2]}
    )

    pos = np.flatnonzero(ok & (x > 0))
    shown = pos[np.unique(np.linspace(0, pos.size - 1, min(8, pos.size)).astype(int))] \
        if pos.size else np.empty(0, dtype=int)
    cmap = plt.get_cmap("viridis")
    for rank, i in enumerate(shown):
        s, k = s_star[i], k_star[i]
        color = cmap(rank / max(1, shown.size - 1))
        ax_path.plot([0.0, s, 1.0], [0.0, 0.0, k * (1.0 - s)],
                     color=color, lw=1.4, label=f"x = {x[i]:g}")
    ax_path.set_xlabel("t")
    ax_path.set_ylabel("height")
    ax_path.set_xlim(0.0, 1.0)
    if shown.size:
        ax_path.legend(loc="upper left", fontsize=8)
    ax_path.set_title("optimal paths", fontsize=10)

    ax_rate.plot(rate[ok], x[ok], color="tab:blue", lw=1.4)
    ax_rate.set_xlabel("rate")
    ax_rate.set_title("supremum rate", fontsize=10)
    if lam is not None and lam > 0:
        junction = math.sqrt(2.0 * lam)
        if x[ok].size and junction <= x[ok].max():
            for ax in (ax_path, ax_rate):
                ax.axhline(junction, color="0.5", lw=0.7, ls="--")
            ax_rate.annotate(r"$x=\sqrt{2\lambda}$", (0.02, junction),
                             textcoords="offset points", xytext=(2, 3), fontsize=8)
    fig.tight_layout()
    _savefig(fig, dest)


def plot_path_overlay(csv_path, dest, title: str | None = None) -> None:
    """Overlay of one or more sampled paths from a t-plus-columns file."""
    header, raw = _read_csv_columns(csv_path)
    t = raw[:, 0].astype(float)
    fig, ax = plt.subplots(figsize=(7.0, 4.0))
    styles = [
        {"color": "tab:blue", "lw": 1.6},
        {"color": "tab:orange", "lw": 1.2, "ls": "--"},
        {"color": "tab:green", "lw": 1.0, "ls": ":"},
    ]
    for j, name in enumerate(header[1:]):
        ax.plot(t, raw[:, j + 1].astype(float), label=name.replace("_", " "),
                **styles[j % len(styles)])
    ax.set_xlabel("t")
    ax.set_ylabel("height")
    ax.set_xlim(0.0, 1.0)
    ax.legend(loc="best", fontsize=9)
    if title:
        ax.set_title(title, fontsize=10)
    fig.tight_layout()
    _savefig(fig, dest)


def plot_convergence(convergence_csv, dest) -> None:
    """Normalized log-rates against n with the predicted limit."""
    header, raw = _read_csv_columns(convergence_csv)
    n = raw[:, header.index("n")].astype(int)
    log_rate = raw[:, header.index("log_rate")].astype(float)
    target = raw[:, header.index("target_rate")].astype(float)
    estimator = raw[:, header.index("estimator")]

    fig, ax = plt.subplots(figsize=(7.0, 4.0))
    ax.axhline(target[0], color="0.4", lw=1.0, ls="--", label="predicted rate")
    ok = np.isfinite(log_rate)
    ax.plot(n[ok], log_rate[ok], color="tab:blue", lw=1.0, alpha=0.7)
    for name, marker in (("crude", "o"), ("splitting", "s")):
        sel = ok & (estimator == name)
        if sel.any():
            ax.plot(n[sel], log_rate[sel], marker, color="tab:blue",
                    ms=5, ls="none", label=name)
    ax.set_xscale("log", base=2)
    ax.set_xlabel("n")
    ax.set_ylabel(r"$-\frac{1}{n}\log \hat p_n$")
    ax.legend(loc="best", fontsize=9)
    fig.tight_layout()
    _savefig(fig, dest)
