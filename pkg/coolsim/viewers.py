"""Figures and HTML reports for experiment results."""

from __future__ import annotations

import io
import re
from typing import Iterable, Optional, Sequence, Tuple

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402
import plotly.graph_objects as go  # noqa: E402

from .device_model import ValveCalibration  # noqa: E402
from .psychophys_processers import PsychometricFit  # noqa: E402

_PLOTLY_JS = "https://cdn.plot.ly/plotly-2.27.0.min.js"
_PLOTLY_CONFIG = {"displayModeBar": True, "displaylogo": False, "responsive": True}


def slugify(title: str) -> str:
    """Lower-case HTML id fragment for a section title.

    >>> slugify("Phantom comparison (silicon)")
    'phantom_comparison_silicon'
    """
    return "_".join(re.findall(r"[^\W_]+", title)).lower()


def _figure_div(fig: go.Figure, slug: str) -> str:
    body = fig.to_html(
        include_plotlyjs=False, full_html=False, div_id=f"fig-{slug}", config=_PLOTLY_CONFIG
    )
    return f'<div id="fig-{slug}-wrapper" class="report-figure">{body}</div>'


def _plotly_head() -> str:
    return (
        '<link rel="preconnect" href="https://cdn.plot.ly">\n'
        f'<script src="{_PLOTLY_JS}"></script>\n'
    )


_LAYOUT = dict(
    hovermode="closest",
    template="plotly_white",
    legend=dict(
        orientation="h",
        yanchor="top",
        y=-0.2,
        xanchor="center",
        x=0.5,
        bgcolor="rgba(255,255,255,0.9)",
        bordercolor="rgba(0,0,0,0.1)",
        borderwidth=1,
    ),
    height=480,
    margin=dict(t=80, l=60, r=20, b=120),
)


def plot_transient(series: pd.DataFrame) -> go.Figure:
    """Sensor temperature against time, one line per velocity."""
    if series is None or series.empty:
        raise ValueError("series must be provided and non-empty")

    fig = go.Figure()
    for velocity, group in series.groupby("velocity", sort=True):
        fig.add_trace(
            go.Scatter(
                x=group["t"],
                y=group["temperature_K"] - 273.15,
                mode="lines",
                name=f"{velocity:.1f} m/s",
                hovertemplate="t: %{x:.2f} s<br>T: %{y:.2f} °C<extra></extra>",
            )
        )
    fig.update_layout(
        title="Sensor temperature near the outlet",
        xaxis_title="Time (s)",
        yaxis_title="Temperature (°C)",
        **_LAYOUT,
    )
    return fig


def plot_comparison(report: pd.DataFrame) -> go.Figure:
    """Model drop against measured drop for each velocity."""
    if report is None or report.empty:
        raise ValueError("report must be provided and non-empty")

    ordered = report.sort_values("velocity")
    fig = go.Figure()
    fig.add_trace(
        go.Scatter(
            x=ordered["velocity"],
            y=ordered["theoretical_K"],
            mode="lines+markers",
            name="Model",
            line=dict(color="black", dash="dash", width=2),
            hovertemplate="u: %{x} m/s<br>ΔT: %{y:.3f} K<extra></extra>",
        )
    )
    measured = ordered.dropna(subset=["measured_K"])
    if not measured.empty:
        fig.add_trace(
            go.Scatter(
                x=measured["velocity"],
                y=measured["measured_K"],
                mode="markers",
                name="Measured",
                marker=dict(color="red", size=10, symbol="circle"),
                customdata=measured["abs_error_K"],
                hovertemplate="u: %{x} m/s<br>ΔT: %{y:.2f} K<br>"
                + "error: %{customdata:.3f} K<extra></extra>",
            )
        )
    fig.update_layout(
        title="Phantom temperature drop after exposure",
        xaxis_title="Flow velocity (m/s)",
        yaxis_title="Temperature drop (K)",
        **_LAYOUT,
    )
    return fig


def plot_psychometric(fit: PsychometricFit) -> go.Figure:
    """Observed proportions, fitted curve and the quartile points."""
    levels = np.array([v for v, _, _ in fit.levels])
    proportions = np.array([k / n for _, n, k in fit.levels])
    span = levels.max() - levels.min()
    x = np.linspace(levels.min() - 0.1 * span, levels.max() + 0.1 * span, 200)

    fig = go.Figure()
    fig.add_trace(
        go.Scatter(
            x=x,
            y=fit.probability(x),
            mode="lines",
            name="Fitted curve",
            line=dict(color="black", width=2),
        )
    )
    fig.add_trace(
        go.Scatter(
            x=levels,
            y=proportions,
            mode="markers",
            name="Proportion colder",
            marker=dict(color="red", size=10),
            customdata=[n for _, n, _ in fit.levels],
            hovertemplate="v: %{x} m/s<br>p: %{y:.2f} (n=%{customdata})<extra></extra>",
        )
    )
    quartiles = [fit.mu - fit.jnd, fit.mu + fit.jnd]
    fig.add_trace(
        go.Scatter(
            x=quartiles,
            y=[0.25, 0.75],
            mode="markers",
            name="25 % / 75 % points",
            marker=dict(color="green", size=12, symbol="x"),
        )
    )
    fig.update_layout(
        title=(
            f"Psychometric fit<br><sup>PSE {fit.mu:.3f} m/s, "
            f"σ {fit.sigma:.3f} m/s, JND {fit.jnd:.4f} m/s</sup>"
        ),
        xaxis_title="Comparison velocity (m/s)",
        yaxis_title="P(comparison colder)",
        yaxis=dict(range=[-0.05, 1.05]),
        **_LAYOUT,
    )
    return fig


def plot_calibration(cal: ValveCalibration) -> go.Figure:
    """Duty ratio to outlet velocity, breakpoints marked."""
    duties = np.linspace(0.0, 1.0, 201)
    velocities = np.interp(duties, cal.duties, cal.velocities, left=0.0)
    fig = go.Figure()
    fig.add_trace(
        go.Scatter(
            x=duties * 100,
            y=velocities,
            mode="lines",
            name="Calibration",
            line=dict(color="black", width=2),
            hovertemplate="duty: %{x:.1f} %<br>u: %{y:.2f} m/s<extra></extra>",
        )
    )
    fig.add_trace(
        go.Scatter(
            x=cal.duties * 100,
            y=cal.velocities,
            mode="markers",
            name="Breakpoints",
            marker=dict(color="red", size=9),
        )
    )
    fig.update_layout(
        title=f"Valve calibration<br><sup>PWM {cal.pwm_frequency:g} Hz</sup>",
        xaxis_title="Duty ratio (%)",
        yaxis_title="Flow velocity (m/s)",
        **_LAYOUT,
    )
    return fig


def plot_jnd_box(jnds: Iterable[float], target: Optional[float] = None) -> go.Figure:
    """Box plot of per-session JNDs; unfitted sessions (NaN) are left out."""
    values = np.asarray(list(jnds), dtype=float)
    values = values[np.isfinite(values)]
    if values.size == 0:
        raise ValueError("jnds must contain at least one finite value")

    fig = go.Figure()
    fig.add_trace(
        go.Box(
            y=values,
            name="JND",
            boxpoints="all",
            jitter=0.4,
            pointpos=0,
            marker=dict(color="rgba(43,108,143,0.5)", size=5),
            line=dict(color="black"),
        )
    )
    if target is not None:
        fig.add_hline(y=target, line=dict(color="red", dash="dash"), annotation_text="target")
    fig.update_layout(
        title=f"JND over {values.size} sessions",
        yaxis_title="JND (m/s)",
        **_LAYOUT,
    )
    return fig


def comparison_svg(report: pd.DataFrame) -> str:
    """Render the model line with measured points as deterministic SVG text."""
    if report is None or report.empty:
        raise ValueError("report must be provided and non-empty")

    ordered = report.sort_values("velocity")
    with plt.rc_context({"svg.hashsalt": "coolsim", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(5, 3.5))
        ax.plot(ordered["velocity"], ordered["theoretical_K"], "k--", label="Model")
        measured = ordered.dropna(subset=["measured_K"])
        if not measured.empty:
            ax.plot(measured["velocity"], measured["measured_K"], "ro", label="Measured")
        ax.set_xlabel("Flow velocity (m/s)")
        ax.set_ylabel("Temperature drop (K)")
        ax.legend(loc="upper left")
        fig.tight_layout()
        buffer = io.StringIO()
        fig.savefig(buffer, format="svg", metadata={"Date": None})
        plt.close(fig)
    return buffer.getvalue()


def render_report_fragment(
    sections: Iterable[Tuple[str, Optional[go.Figure], Optional[pd.DataFrame]]],
) -> str:
    """Render report sections without external assets.

    Each section is ``(title, figure, table)``; either of the last two may
    be ``None``.
    """
    parts = []
    for title, fig, table in sections:
        slug = slugify(title)
        body = ""
        if table is not None:
            body += '<div class="table-wrapper">' + table.to_html(
                classes="display compact cell-border",
                table_id=f"table-{slug}",
                index=False,
                float_format=lambda x: f"{x:.4g}",
                na_rep="",
            ) + "</div>"
        if fig is not None:
            body += _figure_div(fig, slug)
        parts.append(
            f'<div class="content-card" id="section-{slug}"><h2>{title}</h2>{body}</div>'
        )
    return "\n".join(parts)


_STYLE = """<style>
body { font-family: system-ui, sans-serif; color: #333; background: #f7f8fa;
       max-width: 1100px; margin: 0 auto; padding: 24px; line-height: 1.5; }
h1 { color: #2b6c8f; font-weight: 400; }
h2 { font-weight: 400; }
.content-card { background: #fff; border: 1px solid #dde1e6; border-radius: 6px;
                padding: 16px; margin-bottom: 16px; }
.table-wrapper { overflow-x: auto; margin-bottom: 12px; }
table { border-collapse: collapse; font-size: 14px; }
th, td { padding: 4px 10px; border: 1px solid #dde1e6; text-align: right; }
</style>
"""


def gen_html_report(
    title: str,
    sections: Sequence[Tuple[str, Optional[go.Figure], Optional[pd.DataFrame]]],
    *,
    embed_assets: bool = True,
) -> str:
    """Generate the report HTML.

    Parameters
    ----------
    title:
        Page heading.
    sections:
        ``(title, figure, table)`` tuples, rendered in order.
    embed_assets:
        If ``True`` (default), return a standalone page with the Plotly
        script and styling. When ``False`` only the fragment from
        :func:`render_report_fragment` is returned.
    """
    fragment = render_report_fragment(sections)
    if not embed_assets:
        return fragment
    return (
        "<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n"
        f"<title>{title}</title>\n"
        + _plotly_head()
        + _STYLE
        + "</head>\n<body>\n"
        + f'<div class="page-header"><h1>{title}</h1></div>\n'
        + fragment
        + "\n</body>\n</html>\n"
    )
