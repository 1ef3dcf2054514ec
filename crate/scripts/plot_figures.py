#!/usr/bin/env python3
"""Render the CSV tables written by `simulate` into PNG figures.

Usage: plot_figures.py [OUT_DIR]   (default: out)
"""

import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import pandas as pd  # noqa: E402


def spectrum(out, stem, levels=6):
    path = out / f"{stem}.csv"
    if not path.exists():
        return
    df = pd.read_csv(path)
    fig, ax = plt.subplots(figsize=(5, 4))
    for k in range(1, levels + 1):
        ax.plot(df["g"], df[f"E_{k}"], lw=1)
    cross = out / f"{stem}_crossings.csv"
    if cross.exists():
        c = pd.read_csv(cross)
        if len(c):
            top = c.iloc[0]
            ax.plot(top["g_star"], top["energy"], "o", mfc="none", mec="red", ms=10)
    ax.set_xlabel(r"$g/\omega_B$")
    ax.set_ylabel(r"$E_k/\omega_B$")
    save(fig, out, stem)


def sweep(out, stems, column, ylabel, name):
    frames = [(s, out / f"{s}.csv") for s in stems]
    frames = [(s, pd.read_csv(p)) for s, p in frames if p.exists()]
    if not frames:
        return
    fig, axes = plt.subplots(1, len(frames), figsize=(4.5 * len(frames), 3.5), squeeze=False)
    for ax, (stem, df) in zip(axes[0], frames):
        ax.plot(df["g"], df[column], "s", ms=3)
        ax.set_title(stem)
        ax.set_xlabel(r"$g/\omega_B$")
        ax.set_ylabel(ylabel)
    save(fig, out, name)


def series(out, stem):
    path = out / f"{stem}.csv"
    if not path.exists():
        return
    df = pd.read_csv(path)
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for col in df.columns[1:]:
        ax.plot(df["t"], df[col], lw=1, label=col)
    if len(df.columns) > 2:
        ax.legend()
    ax.set_xlabel(r"$\omega_B t$")
    ax.set_ylabel(r"$E_B/\omega_B$")
    save(fig, out, stem)


def save(fig, out, name):
    fig.tight_layout()
    target = out / f"{name}.png"
    fig.savefig(target, dpi=150)
    plt.close(fig)
    print(target)


def main():
    out = Path(sys.argv[1] if len(sys.argv) > 1 else "out")
    spectrum(out, "fig2")
    spectrum(out, "fig7a")
    sweep(out, ["fig3a", "fig3b"], "e_max", r"$E_{B,max}/\omega_B$", "fig3")
    sweep(out, ["fig3a", "fig3b"], "t_max", r"$\omega_B t_{B,max}$", "fig4")
    sweep(out, ["fig3a", "fig3b"], "p_max", r"$P_{B,max}/\omega_B^2$", "fig6")
    sweep(out, ["fig6b"], "p_max", r"$P_{B,max}/\omega_B^2$", "fig6b")
    sweep(out, ["fig7b"], "p_max", r"$P_{B,max}/\omega_B^2$", "fig7b")
    sweep(out, ["fig9"], "p_max", r"$P_{B,max}/\omega_B^2$", "fig9")
    sweep(out, ["figA2"], "p_max", r"$P_{B,max}/\omega_B^2$", "figA2")
    for stem in ["fig5", "fig8b", "figA1"]:
        series(out, stem)


if __name__ == "__main__":
    main()
