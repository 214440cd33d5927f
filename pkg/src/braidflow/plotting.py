"""Deterministic SVG figures of strands, braid charts and fixed sets."""

from __future__ import annotations

import io
import itertools

import numpy as np
from matplotlib import rc_context
from matplotlib.backends.backend_svg import FigureCanvasSVG
from matplotlib.figure import Figure
from matplotlib.patches import Circle

from .errors import EmptyDocumentError, ValidationError

KINDS = ("trajectories", "braid-diagram", "fixed-set")

_RC = {
    "svg.hashsalt": "braidflow",
    "svg.fonttype": "none",
    "font.size": 9,
    "axes.prop_cycle": __import__("matplotlib").cycler(
        color=["#1b6ca8", "#d1495b", "#2e933c", "#edae49", "#6a4c93", "#00798c", "#8c564b", "#555555"]),
}


def _svg(fig: Figure) -> str:
    buf = io.StringIO()
    FigureCanvasSVG(fig).print_svg(buf, metadata={"Date": None, "Creator": None})
    return buf.getvalue()


def _strands(result):
    strands = list(getattr(result, "strands", result) or [])
    if not strands:
        raise EmptyDocumentError("no strands to draw")
    return strands


def trajectories_figure(strands, title="") -> Figure:
    fig = Figure(figsize=(5, 5))
    ax = fig.add_subplot()
    ax.add_patch(Circle((0, 0), 1.0, fill=False, lw=0.8, color="0.6"))
    for k, s in enumerate(strands):
        color = f"C{k % 8}"
        x, y = s.positions[:, 0], s.positions[:, 1]
        if np.ptp(x) < 1e-9 and np.ptp(y) < 1e-9:
            (line,) = ax.plot([x[0]], [y[0]], "o", ms=5, color=color, label=s.label)
        else:
            (line,) = ax.plot(x, y, "-", lw=1.0, color=color, label=s.label)
        line.set_gid(f"strand-{s.label}")
    ax.set_aspect("equal")
    ax.set_xlim(-1.05, 1.05)
    ax.set_ylim(-1.05, 1.05)
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.legend(loc="upper right", frameon=False)
    if title:
        ax.set_title(title)
    return fig


def crossings(strands):
    """Times and heights where two strands swap order in the x-coordinate."""
    out = []
    for p, q in itertools.combinations(strands, 2):
        d = p.positions[:, 0] - q.positions[:, 0]
        sign = np.sign(d)
        idx = np.flatnonzero(sign[:-1] * sign[1:] < 0)
        for i in idx:
            w = d[i] / (d[i] - d[i + 1])
            t = p.times[i] + w * (p.times[i + 1] - p.times[i])
            xc = p.positions[i, 0] + w * (p.positions[i + 1, 0] - p.positions[i, 0])
            out.append((p.label, q.label, float(t), float(xc)))
    return out


def braid_figure(strands, title="") -> Figure:
    fig = Figure(figsize=(6, 4))
    ax = fig.add_subplot()
    for k, s in enumerate(strands):
        (line,) = ax.plot(s.times, s.positions[:, 0], "-", lw=1.0, color=f"C{k % 8}", label=s.label)
        line.set_gid(f"strand-{s.label}")
    cr = crossings(strands)
    if cr:
        pts = ax.plot([c[2] for c in cr], [c[3] for c in cr], "x", ms=4, color="k", lw=0.6)[0]
        pts.set_gid("crossings")
    ax.set_xlim(0, 1)
    ax.set_xlabel("t")
    ax.set_ylabel("x")
    ax.legend(loc="center left", bbox_to_anchor=(1.0, 0.5), frameon=False)
    fig.subplots_adjust(right=0.85)
    if title:
        ax.set_title(title)
    return fig


def fixed_set_figure(components, strands=(), title="") -> Figure:
    fig = Figure(figsize=(5, 5))
    ax = fig.add_subplot()
    ax.add_patch(Circle((0, 0), 1.0, fill=False, lw=0.8, color="0.6"))
    for c in components:
        if c.kind == "planar-region":
            cells = c.cells if c.cells is not None else c.representatives
            if len(cells) > 2000:
                cells = cells[np.sort(np.random.default_rng(0).choice(len(cells), 2000, replace=False))]
            art = ax.scatter(cells[:, 0], cells[:, 1], s=1.5, color="0.8" if c.near_boundary else "#9ecae1",
                             rasterized=False)
        elif c.kind == "circle":
            art = Circle(c.center, c.radius, fill=False, lw=1.2, color="#d1495b")
            ax.add_patch(art)
        else:
            (art,) = ax.plot([c.center[0]], [c.center[1]], "o", ms=4, color="#1b6ca8")
        art.set_gid(f"component-{c.id}")
    for s in strands:
        ax.annotate(s.label, s.start, xytext=(3, 3), textcoords="offset points")
    ax.set_aspect("equal")
    ax.set_xlim(-1.05, 1.05)
    ax.set_ylim(-1.05, 1.05)
    if title:
        ax.set_title(title)
    return fig


def emit_svg(result, kind: str = "trajectories", path=None) -> str:
    """SVG text for a scenario result (or a strand collection); also written to ``path`` if given."""
    if kind not in KINDS:
        raise ValidationError(f"unknown figure kind {kind!r}; choose from {', '.join(KINDS)}")
    title = getattr(getattr(result, "config", None), "name", "")
    with rc_context(_RC):
        if kind == "fixed-set":
            comps = getattr(result, "components", None)
            if not comps:
                raise EmptyDocumentError("no fixed-set classification to draw")
            fig = fixed_set_figure(comps, list(getattr(result, "strands", ())), title)
        elif kind == "trajectories":
            fig = trajectories_figure(_strands(result), title)
        else:
            fig = braid_figure(_strands(result), title)
        text = _svg(fig)
    if path is not None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    return text
