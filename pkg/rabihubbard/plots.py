"""Plotly phase-diagram heatmaps with overlaid boundary curves."""
import logging
from pathlib import Path
from typing import List, Optional, Union

import numpy as np
import plotly.graph_objects as go

from .sweep import PhaseDiagram

logger = logging.getLogger(__name__)

BOUNDARY_STYLES = {
    "numeric": dict(color="#E74C3C", width=3, dash="solid"),
    "analytic": dict(color="#2C3E50", width=2, dash="dash"),
    "lme": dict(color="white", width=2, dash="dot"),
}


def _curve(g_values: np.ndarray, values: List[Optional[float]]):
    keep = [(g, v) for g, v in zip(g_values, values) if v is not None]
    if not keep:
        return [], []
    xs, ys = zip(*keep)
    return list(xs), list(ys)


def phase_diagram_figure(diagram: PhaseDiagram, title: str = "Steady-state order parameter |ψ|") -> go.Figure:
    fig = go.Figure()
    fig.add_trace(go.Heatmap(
        x=diagram.g_values,
        y=diagram.zj_values,
        z=diagram.abs_psi.T,
        colorscale="Viridis",
        colorbar=dict(title="|ψ|"),
        hovertemplate="g/ω0: %{x:.3f}<br>zJ/ω0: %{y:.3e}<br>|ψ|: %{z:.4f}<extra></extra>",
    ))

    curves = (
        ("numeric", "DME numeric boundary", diagram.boundary_numeric),
        ("analytic", "DME two-level zJc", diagram.boundary_analytic),
        ("lme", "Lindblad J_crit", diagram.boundary_lme),
    )
    for key, name, values in curves:
        xs, ys = _curve(diagram.g_values, values)
        if not xs:
            continue
        fig.add_trace(go.Scatter(
            x=xs, y=ys, mode="lines", name=name, line=BOUNDARY_STYLES[key],
            hovertemplate=f"<b>{name}</b><br>g/ω0: %{{x:.3f}}<br>zJ/ω0: %{{y:.3e}}<extra></extra>",
        ))

    fig.update_layout(
        title=dict(text=title, x=0.5, font=dict(size=18, color="#2C3E50")),
        xaxis=dict(title="g / ω0", range=[float(diagram.g_values[0]), float(diagram.g_values[-1])]),
        yaxis=dict(
            title="zJ / ω0",
            type="log" if diagram.zj_scale == "log" else "linear",
        ),
        legend=dict(orientation="h", yanchor="bottom", y=1.02, xanchor="right", x=1),
        plot_bgcolor="white",
        paper_bgcolor="white",
        margin=dict(t=80, b=60, l=70, r=60),
        height=600,
        width=760,
    )
    if diagram.zj_scale == "log":
        fig.update_yaxes(range=[float(np.log10(diagram.zj_values[0])), float(np.log10(diagram.zj_values[-1]))])
    else:
        fig.update_yaxes(range=[float(diagram.zj_values[0]), float(diagram.zj_values[-1])])
    return fig


def write_figure(fig: go.Figure, path: Union[str, Path]) -> Path:
    """.html is written standalone; any other suffix (.svg, .pdf, .png) goes through kaleido."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if path.suffix.lower() == ".html":
        fig.write_html(path, include_plotlyjs=True, full_html=True)
    else:
        fig.write_image(path)
    logger.info("Wrote heatmap %s", path)
    return path
