from pathlib import Path

import pytest

from arwplots import FIGURE_KINDS, FigureSpec, RenderError, render
from arwplots.cli import main
from arwplots.io import InputError, load_records
from arwplots.strip import stripped_bytes

DATA = Path(__file__).parent / "data"

BUNDLES = {
    "gumbel-ecdf": DATA / "gumbel.csv",
    "gumbel-qq": DATA / "gumbel.csv",
    "density-transition": DATA / "density.csv",
    "exceedance-ratio": DATA / "maxtail.csv",
    "thm12-window": DATA / "window.jsonl",
}


def test_loaders_type_fields():
    rows = load_records(str(DATA / "gumbel.csv"))
    assert {r["metric"] for r in rows} == {"S", "s_norm"}
    assert all(isinstance(r["value"], float) for r in rows)
    rows = load_records(str(DATA / "window.jsonl"))
    assert rows and rows[0]["scenario"] == "thm-12"
    assert all(r["mu"] is None for r in rows)


def test_loader_rejects_bad_header(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b,c\n1,2,3\n")
    with pytest.raises(InputError):
        load_records(str(bad))


@pytest.mark.parametrize("kind", FIGURE_KINDS)
@pytest.mark.parametrize("suffix", [".png", ".svg"])
def test_render_every_kind(tmp_path, kind, suffix):
    out = tmp_path / f"{kind}{suffix}"
    render(FigureSpec(str(BUNDLES[kind]), kind, str(out)))
    assert out.exists() and out.stat().st_size > 0


@pytest.mark.parametrize("kind", FIGURE_KINDS)
def test_render_is_deterministic(tmp_path, kind):
    a = tmp_path / "a.png"
    b = tmp_path / "b.png"
    render(FigureSpec(str(BUNDLES[kind]), kind, str(a)))
    render(FigureSpec(str(BUNDLES[kind]), kind, str(b)))
    assert stripped_bytes(str(a)) == stripped_bytes(str(b))
    sa = tmp_path / "a.svg"
    sb = tmp_path / "b.svg"
    render(FigureSpec(str(BUNDLES[kind]), kind, str(sa)))
    render(FigureSpec(str(BUNDLES[kind]), kind, str(sb)))
    assert stripped_bytes(str(sa)) == stripped_bytes(str(sb))


def test_missing_metric_is_named(tmp_path):
    out = tmp_path / "x.png"
    with pytest.raises(RenderError, match="s_norm"):
        render(FigureSpec(str(DATA / "density.csv"), "gumbel-ecdf", str(out)))
    assert not out.exists()


def test_empty_filtered_input_writes_nothing(tmp_path):
    out = tmp_path / "y.png"
    with pytest.raises(RenderError):
        render(FigureSpec(str(DATA / "gumbel.csv"), "density-transition", str(out)))
    assert not out.exists()


def test_cli_roundtrip(tmp_path):
    out = tmp_path / "fig.png"
    rc = main(["--in", str(DATA / "gumbel.csv"), "--kind", "gumbel-ecdf",
               "--out", str(out)])
    assert rc == 0 and out.exists()
    rc = main(["--in", str(DATA / "gumbel.csv"), "--kind", "density-transition",
               "--out", str(tmp_path / "no.png")])
    assert rc == 1
    assert not (tmp_path / "no.png").exists()
