"""Acceptance for the figure package: all five kinds render from the
reference bundle, deterministically (metadata-stripped byte equality)."""

from pathlib import Path

from arwplots import FIGURE_KINDS, FigureSpec, render
from arwplots.strip import stripped_bytes

DATA = Path(__file__).parent / "data"

BUNDLES = {
    "gumbel-ecdf": DATA / "gumbel.csv",
    "gumbel-qq": DATA / "gumbel.csv",
    "density-transition": DATA / "density.csv",
    "exceedance-ratio": DATA / "maxtail.csv",
    "thm12-window": DATA / "window.jsonl",
}


def test_all_kinds_render_deterministically(tmp_path):
    assert set(BUNDLES) == set(FIGURE_KINDS)
    for kind in FIGURE_KINDS:
        first = tmp_path / f"{kind}-1.png"
        second = tmp_path / f"{kind}-2.png"
        render(FigureSpec(str(BUNDLES[kind]), kind, str(first)))
        render(FigureSpec(str(BUNDLES[kind]), kind, str(second)))
        same = stripped_bytes(str(first)) == stripped_bytes(str(second))
        print(f"[{'PASS' if same else 'FAIL'}] figure {kind} renders deterministically")
        assert same
