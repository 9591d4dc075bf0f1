"""The three figure kinds: conservation, splitting_envelope, simplex_path."""

from __future__ import annotations

import math
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .readers import read_split_csv, read_trajectory_csv

KINDS = ("conservation", "splitting_envelope", "simplex_path")


@dataclass(frozen=True)
class FigureSpec:
    kind: str
    csv: str | list
    out: str

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}; expected one of {KINDS}")


def _alpha(lam: float, t: np.ndarray) -> np.ndarray:
    """Chord weight (1 - e^{-2 lam t}) / (1 - e^{-2 lam}), with limit t at lam=0."""
    if abs(lam) <= 1e-8:
        return np.asarray(t, dtype=float)
    return np.expm1(-2.0 * lam * t) / math.expm1(-2.0 * lam)


def compute_envelope(split_table):
    """Curves and chords of the two split energies.

    Returns (t, curve_G, chord_G, curve_Gstar, chord_Gstar) where
    curve_G = G + cHt and chord_G = alpha_{1-t} G_0 + (1-alpha_{1-t}) (G_1 + cH),
    and the mirrored pair for G*.  At t=0 and t=1 the chord reproduces the
    corresponding curve endpoint exactly (alpha evaluates to exact 0/1).
    """
    t = split_table.column("t")
    g = split_table.column("G")
    gstar = split_table.column("Gstar")
    c = split_table.meta["c"]
    h = split_table.meta["H"]
    lam = split_table.meta["lambda"]

    curve_g = g + c * h * t
    a_rev = _alpha(lam, 1.0 - t)
    chord_g = a_rev * g[0] + (1.0 - a_rev) * (g[-1] + c * h)

    curve_s = gstar - c * h * t
    a_fwd = _alpha(lam, t)
    chord_s = (1.0 - a_fwd) * gstar[0] + a_fwd * (gstar[-1] - c * h)
    return t, curve_g, chord_g, curve_s, chord_s


def _render_conservation(spec: FigureSpec) -> None:
    paths = spec.csv if isinstance(spec.csv, list) else [spec.csv]
    fig, ax = plt.subplots(figsize=(6.0, 3.6))
    for path in paths:
        table = read_trajectory_csv(path)
        t = table.column("t")
        ax.plot(t, table.column("H"), label=f"H ({path})" if len(paths) > 1 else "H")
        if "K" in table.header:
            ax.plot(t, table.column("K"), "--", label="K")
    ax.set_xlabel("t")
    ax.set_ylabel("energy")
    ax.set_title("conserved energies along the flow")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(spec.out, dpi=150)
    plt.close(fig)


def _render_splitting_envelope(spec: FigureSpec) -> None:
    if isinstance(spec.csv, list):
        raise ValueError("splitting_envelope takes a single split-audit CSV")
    table = read_split_csv(spec.csv)
    t, curve_g, chord_g, curve_s, chord_s = compute_envelope(table)

    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(8.5, 3.6), sharex=True)
    ax1.plot(t, curve_g, label="G + cHt")
    ax1.plot(t, chord_g, "--", label="chord bound")
    ax1.set_xlabel("t")
    ax1.set_title("ascent energy vs envelope")
    ax1.legend(fontsize=8)
    ax2.plot(t, curve_s, label="G* - cHt")
    ax2.plot(t, chord_s, "--", label="chord bound")
    ax2.set_xlabel("t")
    ax2.set_title("descent energy vs envelope")
    ax2.legend(fontsize=8)
    lam, c = table.meta["lambda"], table.meta["c"]
    fig.suptitle(f"splitting envelopes (lambda={lam:g}, c={c:g})", fontsize=10)
    fig.tight_layout()
    fig.savefig(spec.out, dpi=150)
    plt.close(fig)


def _render_simplex_path(spec: FigureSpec) -> None:
    if isinstance(spec.csv, list):
        raise ValueError("simplex_path takes a single trajectory CSV")
    table = read_trajectory_csv(spec.csv)
    rho = table.columns_prefixed("q_")
    n = rho.shape[1]
    fig, ax = plt.subplots(figsize=(4.4, 4.2))
    if n == 2:
        ax.plot([1, 0], [0, 1], color="0.8", lw=1)
        ax.plot(rho[:, 0], rho[:, 1], lw=1.5)
        ax.plot(rho[0, 0], rho[0, 1], "o", ms=6, label="start")
        ax.plot(rho[-1, 0], rho[-1, 1], "s", ms=6, label="end")
        ax.set_xlabel("rho_1")
        ax.set_ylabel("rho_2")
        ax.set_xlim(-0.05, 1.05)
        ax.set_ylim(-0.05, 1.05)
    elif n == 3:
        # standard barycentric projection of the triangle
        x = rho[:, 1] + 0.5 * rho[:, 2]
        y = math.sqrt(3.0) / 2.0 * rho[:, 2]
        ax.plot([0, 1, 0.5, 0], [0, 0, math.sqrt(3) / 2, 0], color="0.8", lw=1)
        ax.plot(x, y, lw=1.5)
        ax.plot(x[0], y[0], "o", ms=6, label="start")
        ax.plot(x[-1], y[-1], "s", ms=6, label="end")
        ax.set_aspect("equal")
        ax.set_axis_off()
    else:
        raise ValueError(f"simplex_path supports 2 or 3 vertices, got {n}")
    ax.legend(fontsize=8, loc="best")
    ax.set_title("density path on the simplex")
    fig.tight_layout()
    fig.savefig(spec.out, dpi=150)
    plt.close(fig)


_RENDERERS = {
    "conservation": _render_conservation,
    "splitting_envelope": _render_splitting_envelope,
    "simplex_path": _render_simplex_path,
}


def render(spec: FigureSpec) -> str:
    """Render one figure; returns the written image path."""
    _RENDERERS[spec.kind](spec)
    return spec.out
