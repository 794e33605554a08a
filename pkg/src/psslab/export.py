"""DOT, CSV and JSON renderings of state spaces and matrices."""

from __future__ import annotations

import json

from .field import format_state, index_state
from .formats import format_fraction
from .statespace import StateSpace, TransitionMatrix


def emit_dot(ss: StateSpace, show_labels: bool = False, name: str = "statespace") -> str:
    """Graphviz digraph: one node per state, one edge per arc.

    Edges are labelled with the arc probability, optionally followed by the
    contributing update functions.  Nodes and edges appear in index order.
    """
    lines = [f'digraph "{name}" {{']
    labels = [format_state(index_state(i, ss.n, ss.p), ss.p) for i in range(ss.size)]
    for lbl in labels:
        lines.append(f'  "{lbl}";')
    for (u, v), (fns, q) in sorted(ss.arcs.items()):
        text = format_fraction(q)
        if show_labels:
            text += " [" + ",".join(fns) + "]"
        lines.append(f'  "{labels[u]}" -> "{labels[v]}" [label="{text}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def emit_matrix(T: TransitionMatrix, format: str = "csv") -> str:
    """Rows in state-index order; terminating decimals, otherwise ``num/den``."""
    rows = [[format_fraction(q) for q in row] for row in T.dense()]
    if format == "csv":
        return "".join(",".join(r) + "\n" for r in rows)
    if format == "json":
        return dumps({"states": T.state_labels(), "matrix": rows})
    raise ValueError(f"unknown matrix format {format!r}")


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=False) + "\n"
