"""
DOT and SVG emitters.

DOT text comes from graphviz's Digraph source (no Graphviz binary needed).
SVGs are drawn with matplotlib's Agg backend; a fixed hash salt and an
empty date make repeated renders byte-identical.
"""

import io
from typing import Optional, Sequence

import graphviz
import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from app.core.expr import Expr, eval_array  # noqa: E402
from app.core.gdnf import Gdnf  # noqa: E402
from app.core.interval import Interval  # noqa: E402
from app.core.predigraph import VertexKind, WindowedPreDigraph  # noqa: E402

SVG_SALT = "reeb-strip"
CURVE_SAMPLES = 2000

_KIND_STYLE = {
    VertexKind.CRITICAL: ("ellipse", "white"),
    VertexKind.NONCOMPACT_CONTOUR: ("doublecircle", "lightyellow"),
    VertexKind.WINDOW_BOUNDARY: ("box", "lightgray"),
    VertexKind.POLE: ("diamond", "lightblue"),
}


def _num(value: float) -> str:
    return f"{value:.6g}"


def gdnf_dot(d: Gdnf, title: str = "GDNF") -> str:
    """GDNF as DOT: classes are nodes, NF provenance is the edge label."""
    dot = graphviz.Digraph(name="gdnf", comment=title)
    dot.attr(rankdir="BT", bgcolor="white", fontname="Arial")
    dot.attr("node", shape="box", style="rounded,filled", fillcolor="lightcyan")

    for cls in d.classes:
        dot.node(cls.id, f"{cls.id}\\n{{{', '.join(cls.members)}}}")
    for e in d.edges:
        source = e.source or f"end_{e.id}"
        target = e.target or f"end_{e.id}"
        if e.is_dangling:
            dot.node(f"end_{e.id}", "", shape="point", style="", fillcolor="")
        dot.edge(source, target, label=f"{e.id}: {e.nf_vertex}@{_num(e.nf_value)}")
    return dot.source


def predigraph_dot(g: WindowedPreDigraph, title: str = "pre-digraph") -> str:
    """Windowed pre-digraph as DOT, NF vertices drawn in red."""
    dot = graphviz.Digraph(name="predigraph", comment=title)
    dot.attr(rankdir="BT", bgcolor="white", fontname="Arial")
    dot.attr("node", style="filled")

    for v in g.vertices:
        shape, fill = _KIND_STYLE[v.kind]
        color = "red" if v.id in g.nf_ids else "black"
        dot.node(v.id, f"{v.id}\\n{_num(v.value)}", shape=shape, fillcolor=fill, color=color)
    for e in g.edges:
        tail = e.tail or f"end_{e.id}"
        head = e.head or f"end_{e.id}"
        if e.is_stub:
            dot.node(f"end_{e.id}", "", shape="point")
        dot.edge(tail, head, label=e.id)
    return dot.source


def region_svg(
    c1: Expr,
    c2: Expr,
    window: Interval,
    event_values: Sequence[float] = (),
    nf_values: Sequence[float] = (),
    title: Optional[str] = None,
) -> str:
    """Static figure of the strip between c1 and c2 with event levels marked."""
    xs = np.linspace(window.lo, window.hi, CURVE_SAMPLES)
    y1 = eval_array(c1, xs)
    y2 = eval_array(c2, xs)

    with matplotlib.rc_context({"svg.hashsalt": SVG_SALT, "svg.fonttype": "path", "font.family": "DejaVu Sans"}):
        fig, ax = plt.subplots(figsize=(8, 5))
        ax.fill_between(xs, y1, y2, where=y1 < y2, color="tab:blue", alpha=0.25, linewidth=0, label="region")
        ax.plot(xs, y1, color="tab:blue", linewidth=1.0, label="c1")
        ax.plot(xs, y2, color="tab:orange", linewidth=1.0, label="c2")
        for value in sorted(set(event_values)):
            ax.axhline(value, color="gray", linestyle=":", linewidth=0.6)
        for value in sorted(set(nf_values)):
            ax.axhline(value, color="red", linestyle="--", linewidth=0.9)
        ax.set_xlim(window.lo, window.hi)
        ax.set_xlabel("x")
        ax.set_ylabel("t")
        if title:
            ax.set_title(title)
        ax.legend(loc="upper right", fontsize=8)

        buffer = io.StringIO()
        fig.savefig(buffer, format="svg", metadata={"Date": None}, facecolor="white")
        plt.close(fig)
    return buffer.getvalue()
