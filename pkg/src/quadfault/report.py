"""Post-run reporting: RMSE tables and figures rendered from run logs."""

from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np
import pandas as pd


def load_run(path):
    """Read a run.csv (or the directory containing one) into a DataFrame."""
    p = Path(path)
    if p.is_dir():
        p = p / "run.csv"
    return pd.read_csv(p)


def tracking_figure(df, out_path):
    fig, axes = plt.subplots(3, 1, figsize=(9, 7), sharex=True)
    for ax, axis, pc, dc in zip(axes, "xyz", ["px", "py", "pz"], ["pdx", "pdy", "pdz"]):
        ax.plot(df["t"], df[dc], "k--", lw=1, label="reference")
        ax.plot(df["t"], df[pc], lw=1, label="flown")
        ax.set_ylabel(f"{axis} [m]")
        ax.grid(alpha=0.3)
    axes[0].legend(loc="upper right", fontsize=8)
    axes[-1].set_xlabel("t [s]")
    fig.suptitle("position tracking")
    fig.tight_layout()
    fig.savefig(out_path, dpi=130)
    plt.close(fig)


def damage_figure(df, out_path, threshold=0.5):
    fig, ax = plt.subplots(figsize=(9, 4))
    for i in range(4):
        ax.plot(df["t"], 100 * df[f"kmis{i}_raw"], lw=0.5, alpha=0.35)
    for i in range(4):
        ax.plot(df["t"], 100 * df[f"kmis{i}_filt"], lw=1.5, label=f"rotor {i}")
    ax.axhline(100 * threshold, color="r", ls=":", lw=1, label="transition threshold")
    if df["mode"].max() > 0:
        t_sw = df.loc[df["mode"].idxmax(), "t"]
        ax.axvline(t_sw, color="r", lw=1, alpha=0.6)
    ax.set_xlabel("t [s]")
    ax.set_ylabel("estimated damage [%]")
    ax.grid(alpha=0.3)
    ax.legend(loc="upper left", fontsize=8, ncol=3)
    fig.tight_layout()
    fig.savefig(out_path, dpi=130)
    plt.close(fig)


def adaptation_figure(df, out_path):
    fig, axes = plt.subplots(2, 1, figsize=(9, 5), sharex=True)
    axes[0].plot(df["t"], df["f_cmd"] - df["f_nom"], lw=1)
    axes[0].set_ylabel("thrust correction [N]")
    axes[0].grid(alpha=0.3)
    for i, lbl in zip(range(3), ("mx", "my", "mz")):
        axes[1].plot(df["t"], df[f"{lbl}_cmd"] - df[f"{lbl}_nom"], lw=1, label=lbl)
    axes[1].set_ylabel("moment correction [N m]")
    axes[1].set_xlabel("t [s]")
    axes[1].grid(alpha=0.3)
    axes[1].legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out_path, dpi=130)
    plt.close(fig)


def rmse_table(df, warmup):
    sel = df["t"] >= warmup
    if not sel.any():
        sel = slice(None)
    rows = []
    for axis, pc, dc in zip("xyz", ["px", "py", "pz"], ["pdx", "pdy", "pdz"]):
        err = df[pc][sel] - df[dc][sel]
        rows.append({"axis": axis, "rmse_m": float(np.sqrt(np.mean(err ** 2)))})
    rows.append({"axis": "mean", "rmse_m": float(np.mean([r["rmse_m"] for r in rows]))})
    return pd.DataFrame(rows)


def render_report(run_path, out_dir=None, warmup=None, threshold=0.5):
    """Render figures and an RMSE table next to the run log.

    Returns the list of files written.
    """
    run_path = Path(run_path)
    base = run_path if run_path.is_dir() else run_path.parent
    out = Path(out_dir) if out_dir is not None else base
    out.mkdir(parents=True, exist_ok=True)
    df = load_run(run_path)
    if warmup is None:
        warmup = float(df["t"].iloc[-1]) * 0.25

    written = []
    for name, fn in (("tracking.png", tracking_figure),
                     ("damage.png", lambda d, p: damage_figure(d, p, threshold)),
                     ("adaptation.png", adaptation_figure)):
        path = out / name
        fn(df, path)
        written.append(path)
    table = rmse_table(df, warmup)
    path = out / "rmse.csv"
    table.to_csv(path, index=False)
    written.append(path)
    return written


def sweep_figure(rows, out_path):
    """Mean RMSE against damage level, one line per adaptation state."""
    fig, ax = plt.subplots(figsize=(7, 4))
    for l1_on, style in ((True, "o-"), (False, "s--")):
        pts = sorted((r["damage"], r["rmse_mean"]) for r in rows
                     if r["l1"] == l1_on and r["status"] == "completed")
        if pts:
            ax.plot([100 * p[0] for p in pts], [p[1] for p in pts], style,
                    label="adaptation on" if l1_on else "adaptation off")
    ax.set_xlabel("injected damage [%]")
    ax.set_ylabel("mean position RMSE [m]")
    ax.grid(alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_path, dpi=130)
    plt.close(fig)
