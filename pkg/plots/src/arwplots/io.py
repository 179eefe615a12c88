"""Readers for the long-format result files.

Schema: run_id, scenario, n, p, q, mu, replicate, seed, metric, value;
one metric per row, CSV with that exact header or JSON lines with the
same field names.
"""

from __future__ import annotations

import csv
import json

FIELDS = ["run_id", "scenario", "n", "p", "q", "mu",
          "replicate", "seed", "metric", "value"]


class InputError(Exception):
    pass


def load_records(path: str) -> list[dict]:
    rows = _load_jsonl(path) if _looks_like_jsonl(path) else _load_csv(path)
    if not rows:
        raise InputError(f"{path}: no records")
    return rows


def _looks_like_jsonl(path: str) -> bool:
    if path.endswith(".jsonl"):
        return True
    if path.endswith(".csv"):
        return False
    with open(path) as fh:
        return fh.readline().lstrip().startswith("{")


def _load_csv(path: str) -> list[dict]:
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != FIELDS:
            raise InputError(
                f"{path}: expected header {','.join(FIELDS)}, "
                f"got {reader.fieldnames}"
            )
        for raw in reader:
            rows.append(_typed(raw, blank_mu=raw["mu"] == ""))
    return rows


def _load_jsonl(path: str) -> list[dict]:
    rows = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            obj = json.loads(line)
            missing = [f for f in FIELDS if f not in obj]
            if missing:
                raise InputError(f"{path}:{lineno}: missing fields {missing}")
            rows.append(_typed(obj, blank_mu=obj["mu"] is None))
    return rows


def _typed(raw, blank_mu: bool) -> dict:
    return {
        "run_id": str(raw["run_id"]),
        "scenario": str(raw["scenario"]),
        "n": int(raw["n"]),
        "p": float(raw["p"]),
        "q": float(raw["q"]),
        "mu": None if blank_mu else float(raw["mu"]),
        "replicate": int(raw["replicate"]),
        "seed": int(raw["seed"]),
        "metric": str(raw["metric"]),
        "value": float(raw["value"]),
    }


def select(rows, scenario: str, metric: str) -> list[dict]:
    return [r for r in rows if r["scenario"] == scenario and r["metric"] == metric]
