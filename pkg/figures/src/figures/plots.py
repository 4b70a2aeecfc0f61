"""Render learning-curve grids and rewiring-response bar charts.

Both renderers consume only the aggregate CSV schemas written by the
simulator's analyze stage, never raw trajectories:

aggregate_curves.csv columns:
    condition, schedule, bias, rewiring_learning, bin, episodes, n_seeds,
    mutual_coop_mean, mutual_coop_se, connection_mean, connection_se

aggregate_response.csv columns:
    condition, schedule, bias, rewiring_learning, agent, other_prev_action,
    connect_fraction_mean, connect_fraction_se, n_seeds, total_samples

Rendering is RNG-free, so the same inputs always produce the same figure.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import pandas as pd  # noqa: E402

# Keep SVG text as text elements and drop volatile metadata so repeated
# renders of the same data are identical.
plt.rcParams["svg.fonttype"] = "none"
plt.rcParams["svg.hashsalt"] = "rewire-ipd-figures"

SCHEDULE_ORDER = ["none", "half", "full"]
BIAS_ORDER = ["none", "allc", "tft", "ostracism"]

SCHEDULE_TITLES = {"none": "no rewiring", "half": "half rewiring",
                   "full": "full rewiring"}
BIAS_TITLES = {"none": "no bias", "allc": "ALLC bias", "tft": "TFT bias",
               "ostracism": "ostracism bias"}

CONNECT_COLOR = "#3465a4"
DISCONNECT_COLOR = "#cc4444"


def _ordered(values, order):
    known = [v for v in order if v in values]
    extras = sorted(v for v in values if v not in order)
    return known + extras


def _moving_average(series: pd.Series, window: int) -> pd.Series:
    if window <= 1:
        return series
    return series.rolling(window, min_periods=1).mean()


def _save(fig, out_path: Path) -> None:
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    metadata = {"Date": None} if out_path.suffix == ".svg" else None
    fig.savefig(out_path, metadata=metadata)
    plt.close(fig)


def plot_curves(curves_csv: str | Path, out_path: str | Path,
                smoothing: int = 1) -> int:
    """One panel per (schedule x bias) cell: mean mutual-cooperation curve
    with a +-SE band, y fixed to [0, 1]. Panels whose condition is missing
    from the CSV stay empty but labeled. Returns the number of warnings
    (one per missing or empty panel)."""
    frame = pd.read_csv(curves_csv)
    if frame.empty:
        raise ValueError(f"no rows in {curves_csv}")
    schedules = _ordered(set(frame["schedule"]), SCHEDULE_ORDER)
    biases = _ordered(set(frame["bias"]), BIAS_ORDER)
    nrows, ncols = len(schedules), len(biases)
    fig, axes = plt.subplots(nrows, ncols, squeeze=False,
                             figsize=(3.2 * ncols, 2.4 * nrows),
                             sharex=True, sharey=True)
    warnings = 0
    for r, schedule in enumerate(schedules):
        for c, bias in enumerate(biases):
            ax = axes[r][c]
            ax.set_ylim(0.0, 1.0)
            ax.set_title(f"{BIAS_TITLES.get(bias, bias)} / "
                         f"{SCHEDULE_TITLES.get(schedule, schedule)}",
                         fontsize=9)
            cell = frame[(frame["schedule"] == schedule)
                         & (frame["bias"] == bias)]
            if cell.empty:
                ax.text(0.5, 0.5, "no data", ha="center", va="center",
                        transform=ax.transAxes, color="0.5")
                warnings += 1
                continue
            # one line per learning variant within the cell (learning
            # enabled in blue; disabled variants in red, as in the ablation)
            for variant, sub in cell.groupby("rewiring_learning"):
                sub = sub.sort_values("bin")
                mean = _moving_average(sub["mutual_coop_mean"], smoothing)
                se = _moving_average(sub["mutual_coop_se"], smoothing)
                color = CONNECT_COLOR if variant else DISCONNECT_COLOR
                label = ("with rewiring learning" if variant
                         else "without rewiring learning")
                ax.plot(sub["bin"], mean, color=color, linewidth=1.2,
                        label=label)
                ax.fill_between(sub["bin"], mean - se, mean + se,
                                color=color, alpha=0.25, linewidth=0)
            if len(cell["rewiring_learning"].unique()) > 1:
                ax.legend(fontsize=6, loc="upper left")
            if r == nrows - 1:
                ax.set_xlabel("bin")
            if c == 0:
                ax.set_ylabel("mutual cooperation")
    fig.tight_layout()
    _save(fig, out_path)
    return warnings


def plot_response_bars(response_csv: str | Path, out_path: str | Path) -> int:
    """Stacked connect/disconnect bars per condition: one bar per (agent,
    other's previous action), blue connect fraction at the bottom with a
    percentage label, red disconnect fraction on top. Absent cells render
    hatched as "no data". Returns the number of warnings (absent cells)."""
    frame = pd.read_csv(response_csv)
    if frame.empty:
        raise ValueError(f"no rows in {response_csv}")
    conditions = sorted(set(frame["condition"]))
    ncols = min(3, len(conditions))
    nrows = (len(conditions) + ncols - 1) // ncols
    fig, axes = plt.subplots(nrows, ncols, squeeze=False,
                             figsize=(3.6 * ncols, 2.8 * nrows))
    slots = [("0", "cooperate"), ("0", "defect"),
             ("1", "cooperate"), ("1", "defect")]
    warnings = 0
    for index, condition in enumerate(conditions):
        ax = axes[index // ncols][index % ncols]
        cell = frame[frame["condition"] == condition]
        lookup = {(str(row["agent"]), row["other_prev_action"]):
                  float(row["connect_fraction_mean"])
                  for _, row in cell.iterrows()}
        positions = range(len(slots))
        for x, key in zip(positions, slots):
            fraction = lookup.get(key)
            if fraction is None:
                ax.bar(x, 1.0, color="none", edgecolor="0.6", hatch="///")
                ax.text(x, 0.5, "no data", ha="center", va="center",
                        fontsize=7, rotation=90, color="0.4")
                warnings += 1
                continue
            ax.bar(x, fraction, color=CONNECT_COLOR)
            ax.bar(x, 1.0 - fraction, bottom=fraction,
                   color=DISCONNECT_COLOR)
            ax.text(x, fraction / 2, f"{fraction * 100:.1f}%", ha="center",
                    va="center", fontsize=8, color="white")
        ax.set_xticks(list(positions))
        ax.set_xticklabels([f"a{agent}\nafter {prev}"
                            for agent, prev in slots], fontsize=7)
        ax.set_ylim(0.0, 1.0)
        ax.set_title(condition, fontsize=9)
        ax.set_ylabel("fraction connecting")
    for index in range(len(conditions), nrows * ncols):
        axes[index // ncols][index % ncols].axis("off")
    fig.tight_layout()
    _save(fig, out_path)
    return warnings
