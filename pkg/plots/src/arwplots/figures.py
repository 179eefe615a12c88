"""The five figure kinds.

Each renderer is a pure function of the loaded records: fixed style, no
timestamps, seeded by nothing.  Reference curves (the Gumbel CDF and
quantiles, the 1/2 line for the step-count transition, the unit line
for exceedance ratios, the fluctuation window) are overlaid from the
row metadata, never refitted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import matplotlib
import numpy as np

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "arwplots"
matplotlib.rcParams["figure.figsize"] = (7.0, 4.5)
matplotlib.rcParams["figure.dpi"] = 120
matplotlib.rcParams["axes.grid"] = True
matplotlib.rcParams["grid.alpha"] = 0.3

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .io import InputError, load_records, select  # noqa: E402

FIGURE_KINDS = ("gumbel-ecdf", "gumbel-qq", "density-transition",
                "exceedance-ratio", "thm12-window")


class RenderError(Exception):
    pass


@dataclass(frozen=True)
class FigureSpec:
    input_path: str
    kind: str
    output_path: str


def render(spec: FigureSpec) -> str:
    """Render one figure; returns the output path.  Raises RenderError
    (and writes nothing) when the needed rows are absent."""
    if spec.kind not in FIGURE_KINDS:
        raise RenderError(f"unknown figure kind '{spec.kind}'")
    try:
        rows = load_records(spec.input_path)
    except InputError as exc:
        raise RenderError(str(exc)) from exc
    fig = _BUILDERS[spec.kind](rows)
    try:
        metadata = {"Date": None} if spec.output_path.endswith(".svg") else {}
        fig.savefig(spec.output_path, metadata=metadata)
    finally:
        plt.close(fig)
    return spec.output_path


def _need(rows, scenario: str, metrics: list[str]) -> dict[str, list[dict]]:
    out = {}
    missing = []
    for metric in metrics:
        found = select(rows, scenario, metric)
        if not found:
            missing.append(metric)
        out[metric] = found
    if missing:
        raise RenderError(
            f"no rows with scenario '{scenario}' and metric(s) "
            f"{', '.join(repr(m) for m in missing)}"
        )
    return out


def _gumbel_cdf(x):
    return np.exp(-np.exp(-x))


def _gumbel_quantile(u):
    return -np.log(-np.log(u))


def _fig_gumbel_ecdf(rows):
    samples = np.sort([r["value"] for r in _need(rows, "thm-gumbel", ["s_norm"])["s_norm"]])
    ecdf = np.arange(1, len(samples) + 1) / len(samples)
    grid = np.linspace(samples[0] - 0.5, samples[-1] + 0.5, 400)
    fig, ax = plt.subplots()
    ax.step(samples, ecdf, where="post", lw=1.2,
            label=f"normalized count ECDF (R={len(samples)})")
    ax.plot(grid, _gumbel_cdf(grid), "k--", lw=1.2, label="exp(-e^{-x})")
    ax.set_xlabel("normalized sleeping count")
    ax.set_ylabel("cumulative probability")
    ax.set_title("Stationary count vs the Gumbel limit")
    ax.legend(loc="lower right")
    return fig


def _fig_gumbel_qq(rows):
    samples = np.sort([r["value"] for r in _need(rows, "thm-gumbel", ["s_norm"])["s_norm"]])
    r = len(samples)
    theo = _gumbel_quantile((np.arange(1, r + 1) - 0.5) / r)
    fig, ax = plt.subplots()
    ax.plot(theo, samples, ".", ms=3, label="sample quantiles")
    lo = min(theo[0], samples[0])
    hi = max(theo[-1], samples[-1])
    ax.plot([lo, hi], [lo, hi], "k--", lw=1.2, label="y = x")
    ax.set_xlabel("Gumbel quantiles")
    ax.set_ylabel("normalized count quantiles")
    ax.set_title("Quantile-quantile view of the extreme-value scaling")
    ax.legend(loc="lower right")
    return fig


def _fig_density_transition(rows):
    steps = _need(rows, "thm-density", ["J"])["J"]
    by_run: dict[tuple, list[float]] = {}
    for r in steps:
        key = (r["n"], r["mu"])
        by_run.setdefault(key, []).append(r["value"] / (r["n"] * math.log(r["n"])))
    fig, ax = plt.subplots()
    for (n, mu_), ratios in sorted(by_run.items()):
        label = f"n={n}" + (f", density={mu_}" if mu_ is not None else "")
        ax.plot([n] * len(ratios), ratios, ".", ms=4, alpha=0.45)
        ax.plot([n], [np.median(ratios)], "s", ms=7, label=f"median, {label}")
    ax.axhline(0.5, color="k", ls="--", lw=1.2, label="1/2")
    ax.set_xscale("log")
    ax.set_xlabel("n")
    ax.set_ylabel("steps / (n log n)")
    ax.set_title("Stabilization step count at fixed energy")
    ax.legend(loc="best", fontsize=8)
    return fig


def _fig_exceedance_ratio(rows):
    ratios = _need(rows, "lem-maxtail", ["exceedance_ratio"])["exceedance_ratio"]
    lows = {r["run_id"]: r["value"]
            for r in select(rows, "lem-maxtail", "exceedance_ratio_lo")}
    highs = {r["run_id"]: r["value"]
             for r in select(rows, "lem-maxtail", "exceedance_ratio_hi")}
    fig, ax = plt.subplots()
    for i, row in enumerate(sorted(ratios, key=lambda r: r["run_id"])):
        rid = row["run_id"]
        lo = lows.get(rid, row["value"])
        hi = highs.get(rid, row["value"])
        ax.errorbar([i], [row["value"]],
                    yerr=[[row["value"] - lo], [hi - row["value"]]],
                    fmt="o", capsize=4, label=f"n={row['n']}")
    ax.axhline(1.0, color="k", ls="--", lw=1.2, label="predicted rate")
    ax.set_xticks(range(len(ratios)))
    ax.set_xlabel("run")
    ax.set_ylabel("observed / predicted exceedance probability")
    ax.set_title("Running-max tail against the cluster rate")
    ax.legend(loc="best", fontsize=8)
    return fig


def _fig_thm12_window(rows):
    srows = _need(rows, "thm-12", ["S"])["S"]
    values = np.array([r["value"] for r in srows])
    n, p = srows[0]["n"], srows[0]["p"]
    alpha = math.sqrt(p * (1 - p) * n * math.log(n))
    center = p * n + alpha
    fig, ax = plt.subplots()
    ax.hist(values, bins=30, color="tab:blue", alpha=0.7,
            label=f"sleeping count (R={len(values)})")
    ax.axvline(center, color="k", ls="-", lw=1.4, label="pn + alpha")
    ax.axvline(center - 0.5 * alpha, color="k", ls="--", lw=1.1,
               label="half-alpha window")
    ax.axvline(center + 0.5 * alpha, color="k", ls="--", lw=1.1)
    ax.set_xlabel("sleeping count")
    ax.set_ylabel("replicates")
    ax.set_title(f"Critical window at n={n}")
    ax.legend(loc="upper left", fontsize=8)
    return fig


_BUILDERS = {
    "gumbel-ecdf": _fig_gumbel_ecdf,
    "gumbel-qq": _fig_gumbel_qq,
    "density-transition": _fig_density_transition,
    "exceedance-ratio": _fig_exceedance_ratio,
    "thm12-window": _fig_thm12_window,
}
