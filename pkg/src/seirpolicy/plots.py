"""Matplotlib figures written as SVG next to the CSV output."""

import matplotlib as mpl
from matplotlib.backends.backend_svg import FigureCanvasSVG
from matplotlib.figure import Figure
import numpy as np

PHASE_LABELS = ("total isolation", "partial isolation", "soft restrictions", "no restrictions")
METHOD_COLORS = {"dqn": "tab:blue", "ga": "tab:orange", "random": "tab:gray"}

STYLE = {
    "figure.figsize": (7.0, 4.0),
    "font.size": 10,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "svg.hashsalt": "seirpolicy",
    "svg.fonttype": "path",
}


def _figure(size=None):
    # no pyplot: no global figure registry, cheaper import
    fig = Figure(figsize=size)
    FigureCanvasSVG(fig)
    return fig, fig.add_subplot()


def _save(fig, path):
    fig.savefig(path, format="svg", bbox_inches="tight", metadata={"Date": None})
    return path


def icu_series(result):
    """Days, ICU demand and bed capacity, both in percent of the population."""
    if not result.actions:
        raise ValueError("cannot plot an empty evaluation result")
    days = np.arange(1, len(result.actions) + 1)
    return days, 100.0 * np.asarray(result.icu_demand), 100.0 * np.asarray(result.bed_capacity)


def plot_icu(result, path, title=None):
    days, demand, capacity = icu_series(result)
    with mpl.rc_context(STYLE):
        fig, ax = _figure()
        ax.plot(days, demand, color="tab:red", label="ICU demand")
        ax.plot(days, capacity, color="tab:blue", label="ICU beds")
        if result.violation_days:
            vd = sorted(result.violation_days)
            ax.scatter(vd, demand[np.asarray(vd) - 1], s=6, color="black", zorder=3, label="over capacity")
        ax.set_xlabel("day")
        ax.set_ylabel("% of population")
        ax.set_title(title or f"total reward {result.total_reward:g}")
        ax.legend(frameon=False)
        return _save(fig, path)


def plot_actions(result, path, title=None):
    if not result.actions:
        raise ValueError("cannot plot an empty evaluation result")
    days = np.arange(1, len(result.actions) + 1)
    with mpl.rc_context(STYLE):
        fig, ax = _figure((7.0, 2.8))
        ax.step(days, result.actions, where="post", color="tab:green")
        ax.set_yticks(range(len(PHASE_LABELS)))
        ax.set_yticklabels([f"{k}: {name}" for k, name in enumerate(PHASE_LABELS)])
        ax.set_ylim(-0.3, len(PHASE_LABELS) - 0.7)
        ax.set_xlabel("day")
        ax.set_title(title or "phase per day")
        return _save(fig, path)


def plot_summary(stats_list, path, title=None):
    """Box plot of per-run best rewards, one box per method."""
    stats_list = [st for st in stats_list if st.values]
    if not stats_list:
        raise ValueError("no completed runs to plot")
    with mpl.rc_context(STYLE):
        fig, ax = _figure((4.5, 4.0))
        bp = ax.boxplot([st.values for st in stats_list], patch_artist=True)
        ax.set_xticks(range(1, len(stats_list) + 1))
        ax.set_xticklabels([st.method for st in stats_list])
        for patch, st in zip(bp["boxes"], stats_list):
            patch.set_facecolor(METHOD_COLORS.get(st.method, "white"))
        ax.set_ylabel("best total reward (billions)")
        ax.set_title(title or "best reward per run")
        return _save(fig, path)


def plot_compartments(days, series, path, title=None):
    """Line plot of SEIR compartments (``series`` maps label -> fractions)."""
    with mpl.rc_context(STYLE):
        fig, ax = _figure()
        for label, values in series.items():
            ax.plot(days, 100.0 * np.asarray(values), label=label)
        ax.set_xlabel("day")
        ax.set_ylabel("% of population")
        if title:
            ax.set_title(title)
        ax.legend(frameon=False)
        return _save(fig, path)


def render_plots(result, stats, path_prefix):
    """ICU curve, action timeline and (when ``stats`` is given) the per-method summary."""
    if result is None or not result.actions:
        raise ValueError("cannot plot an empty evaluation result")
    paths = [
        plot_icu(result, f"{path_prefix}_icu.svg"),
        plot_actions(result, f"{path_prefix}_actions.svg"),
    ]
    if stats:
        paths.append(plot_summary(stats, f"{path_prefix}_summary.svg"))
    return paths
