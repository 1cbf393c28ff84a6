"""Matplotlib figures written straight to files (no display needed)."""
from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "figure.figsize": (5.0, 5.0),
    "figure.dpi": 120,
    "font.size": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "savefig.bbox": "tight",
    # fixed metadata keeps repeated renders identical
    "svg.hashsalt": "mkcat",
}


def _save(fig, path):
    # strip timestamps and version strings so renders are reproducible
    ext = str(path).rsplit(".", 1)[-1].lower()
    meta = {"png": {"Software": None}, "svg": {"Date": None}, "pdf": {"CreationDate": None}}.get(ext)
    fig.savefig(path, metadata=meta)
    plt.close(fig)
    return path


def _disk(ax):
    t = np.linspace(0.0, 2.0 * math.pi, 361)
    ax.plot(np.cos(t), np.sin(t), color="0.6", lw=0.8)
    ax.set_aspect("equal")
    ax.set_xlim(-1.05, 1.05)
    ax.set_ylim(-1.05, 1.05)
    ax.set_xticks([])
    ax.set_yticks([])


def _ring(k):
    return np.vstack([k, k[:1]])


def plot_crescents(poly, crescents, path, title=None):
    """Klein-disk view of a polygon with its crescents shaded by side."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        _disk(ax)
        r = _ring(poly.klein)
        ax.fill(r[:, 0], r[:, 1], color="0.88", lw=0)
        ax.plot(r[:, 0], r[:, 1], color="k", lw=1.0)
        for c in crescents:
            pts = c.arc_points(poly)
            color = "tab:orange" if c.side == "outer" else "tab:blue"
            ax.fill(pts[:, 0], pts[:, 1], color=color, alpha=0.35, lw=0)
            ax.plot(c.i_part[:, 0], c.i_part[:, 1], color=color, lw=1.2, ls="--")
            mid = c.i_part.mean(axis=0)
            ax.annotate(str(c.folding_number), mid, fontsize=7, color=color)
        ax.set_title(title or f"{len(crescents)} crescents")
        return _save(fig, path)


def plot_hull_trace(poly, result, path, marked=None):
    """Input polygon, final hull and marked elements, with the level trace in the title."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        _disk(ax)
        r0, r1 = _ring(poly.klein), _ring(result.polygon.klein)
        ax.fill(r1[:, 0], r1[:, 1], color="tab:green", alpha=0.2, lw=0)
        ax.plot(r1[:, 0], r1[:, 1], color="tab:green", lw=1.2, label="hull")
        ax.plot(r0[:, 0], r0[:, 1], color="k", lw=0.9, label="input")
        if marked is not None:
            for i in range(len(marked.items)):
                m = marked.samples(i)
                ax.plot(m[:, 0], m[:, 1], "o-" if len(m) == 1 else "-", color="tab:red", lw=1.4, ms=3)
        levels = " > ".join(str(x) for x in result.levels) or "none"
        ax.set_title(f"levels {levels}")
        ax.legend(loc="lower right", frameon=False)
        return _save(fig, path)


def plot_link_lengths(lengths: dict, path):
    """Shortest link-loop length per vertex against the 2*pi threshold."""
    names = sorted(lengths)
    vals = [lengths[n] for n in names]
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(max(4.0, 0.35 * len(names)), 3.0))
        colors = ["tab:red" if v < 2.0 * math.pi - 1e-9 else "tab:blue" for v in vals]
        ax.bar(range(len(names)), vals, color=colors)
        ax.axhline(2.0 * math.pi, color="k", lw=0.8, ls="--")
        ax.set_xticks(range(len(names)))
        ax.set_xticklabels(names, rotation=90, fontsize=6)
        ax.set_ylabel("shortest link loop")
        return _save(fig, path)


def plot_gauss_bonnet(terms, path):
    """Bar chart of the curvature terms against 2*pi*chi."""
    labels = ["area term", "cone defects", "boundary turning", "2 pi chi"]
    vals = [terms.kappa * terms.area, terms.interior, terms.boundary, 2.0 * math.pi * terms.chi]
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(4.5, 3.0))
        ax.bar(labels, vals, color=["tab:blue", "tab:blue", "tab:blue", "tab:gray"])
        ax.axhline(0.0, color="k", lw=0.6)
        ax.set_title(f"residual {terms.residual:.2e}")
        ax.tick_params(axis="x", labelsize=7)
        return _save(fig, path)


def plot_spherical_link(poly, center, path, title=None):
    """Azimuthal equidistant view of a link loop around a chosen direction."""
    c = np.asarray(center, float)
    c = c / np.linalg.norm(c)
    a = np.eye(3)[int(np.argmin(np.abs(c)))]
    e1 = np.cross(c, a)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(c, e1)
    pts = poly.sample(16)
    rho = np.arccos(np.clip(pts @ c, -1.0, 1.0))
    phi = np.arctan2(pts @ e2, pts @ e1)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.set_aspect("equal")
        t = np.linspace(0.0, 2.0 * math.pi, 361)
        for r, ls in ((math.pi / 2, "--"), (math.pi, "-")):
            ax.plot(r * np.cos(t), r * np.sin(t), color="0.6", lw=0.8, ls=ls)
        x, y = rho * np.cos(phi), rho * np.sin(phi)
        ax.plot(np.r_[x, x[:1]], np.r_[y, y[:1]], color="k", lw=1.0)
        ax.set_xticks([])
        ax.set_yticks([])
        ax.set_title(title or "link")
        return _save(fig, path)


def plot_path_lengths(history, path):
    """Length of a path across straightening rounds."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(4.0, 3.0))
        ax.plot(range(len(history)), history, "o-", ms=3)
        ax.set_xlabel("round")
        ax.set_ylabel("length")
        return _save(fig, path)
