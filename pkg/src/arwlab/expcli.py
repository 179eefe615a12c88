"""Scenario-driven experiment runner.

Each scenario reproduces one distributional identity or limit at desk
scale: it runs replicates in parallel, writes one metric per row to a
CSV or JSON-lines file, and prints a pass/fail summary per check.
Replicate seeds depend only on (master seed, replicate index), so output
files are byte-identical for any worker count.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import arw, bup, oracle, stats
from .model import Params, constants, derive_p, mu as level_rate, normalize_S
from .rng import derive_seed, substream

CSV_HEADER = ["run_id", "scenario", "n", "p", "q", "mu",
              "replicate", "seed", "metric", "value"]

SCENARIOS = (
    "prop-stop", "abelian", "thm-iff", "thm-12", "thm-12-thresholds",
    "thm-gumbel", "thm-density", "lem-maxtail", "cluster", "cond-moments",
    "stationarity",
)

# physics fields each scenario accepts ("p" is satisfied by --p or --lambda,
# "q" by --q or --q-mode const:...); seed/out/format/parallel/config are
# always allowed, and seed, out, reps are always required.
_FIELD_TABLE = {
    "prop-stop": {"required": {"n", "p", "q"}, "optional": set()},
    "abelian": {"required": {"n", "p", "q"}, "optional": set()},
    "thm-iff": {"required": {"n", "p"}, "optional": {"q-mode"}},
    "thm-12": {"required": {"n", "p"}, "optional": {"q-mode"}},
    "thm-12-thresholds": {"required": {"n", "p"}, "optional": {"q-mode"}},
    "thm-gumbel": {"required": {"n", "p"}, "optional": {"q-mode"}},
    "thm-density": {"required": {"n", "p", "mu"}, "optional": {"step-cap"}},
    "lem-maxtail": {"required": {"n", "p", "horizon", "x-level"}, "optional": set()},
    "cluster": {"required": {"n", "p", "x-level"}, "optional": set()},
    "cond-moments": {"required": {"n", "p", "horizon", "x-level"}, "optional": set()},
    "stationarity": {"required": {"n", "p", "horizon", "x-level"}, "optional": set()},
}

_DEFAULT_Q_MODE = {
    "thm-iff": "power:0.5",
    "thm-12": "recip-n-plus-1",
    "thm-12-thresholds": "recip-n-plus-1",
    "thm-gumbel": "power:1.25",
}

_EXP_SWEEP_N = 60
_EXP_SWEEP_C = (0.05, 0.1, 0.2)
_THRESHOLD_EPS = 0.5


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: str
    out: str
    seed: int
    reps: int
    n: int | None = None
    p: float | None = None
    q_mode: str | None = None
    mu: float | None = None
    horizon: float | None = None
    x_level: float | None = None
    step_cap: int | None = None
    parallel: int = 1
    format: str = "csv"

    def q_value(self, n: int | None = None) -> float:
        q_mode = self.q_mode or _DEFAULT_Q_MODE.get(self.scenario)
        if q_mode is None:
            raise UsageError(f"scenario '{self.scenario}' needs q or q-mode")
        return resolve_q(q_mode, self.n if n is None else n)


def resolve_q(q_mode: str, n: int) -> float:
    kind, _, arg = q_mode.partition(":")
    if kind == "const":
        value = float(arg)
        if not (0.0 <= value <= 1.0):
            raise UsageError(f"q must lie in [0, 1], got {value}")
        return value
    if kind == "recip-n-plus-1":
        return 1.0 / (n + 1)
    if kind == "power":
        return float(n) ** -float(arg)
    if kind == "exp":
        return math.exp(-float(arg) * n)
    raise UsageError(f"unknown q-mode '{q_mode}'")


@dataclass(frozen=True)
class RunRecord:
    run_id: str
    scenario: str
    n: int
    p: float
    q: float
    mu: float | None
    replicate: int
    seed: int
    metric: str
    value: float

    def as_dict(self) -> dict:
        return {
            "run_id": self.run_id,
            "scenario": self.scenario,
            "n": self.n,
            "p": self.p,
            "q": self.q,
            "mu": self.mu,
            "replicate": self.replicate,
            "seed": self.seed,
            "metric": self.metric,
            "value": self.value,
        }


def _run_id(scenario: str, n: int, p: float, q: float, mu, reps: int, seed: int) -> str:
    key = f"{scenario}|{n}|{p!r}|{q!r}|{mu!r}|{reps}|{seed}"
    return hashlib.sha1(key.encode()).hexdigest()[:12]


def _map_replicates(worker, reps: int, master_seed: int, workers: int):
    """worker(index, seed) -> list[(metric, value)]; merged by index."""
    seeds = [derive_seed(master_seed, i) for i in range(reps)]
    if workers <= 1:
        return [worker(i, seeds[i]) for i in range(reps)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        chunk = max(1, reps // (workers * 8))
        return list(pool.map(worker, range(reps), seeds, chunksize=chunk))


def _sub_run(records, scenario, n, p, q, mu, reps, master_seed, workers, worker):
    """Run one replicate sweep and append its long-format records."""
    run_id = _run_id(scenario, n, p, q, mu, reps, master_seed)
    per_rep = _map_replicates(worker, reps, master_seed, workers)
    for i, metrics in enumerate(per_rep):
        seed = int(derive_seed(master_seed, i))
        for metric, value in metrics:
            records.append(RunRecord(run_id, scenario, n, p, q, mu, i, seed,
                                     metric, float(value)))
    return per_rep


def _metric(per_rep, name: str) -> np.ndarray:
    return np.array([dict(m)[name] for m in per_rep])


# ----------------------------------------------------------------- scenarios


def _scn_prop_stop(cfg: ScenarioConfig):
    n, p = cfg.n, cfg.p
    q = cfg.q_value()
    pmf = oracle.exact_final_pmf(n, p, q)
    params = Params(n=n, p=p, q=q)
    records: list[RunRecord] = []

    def direct(i, seed):
        tape = arw.InstructionTape(n, p, q, seed=int(substream(seed, 1)))
        out = arw.stabilize(arw.Configuration.all_ones(n), params, tape)
        return [("S_direct", out.sleeping)]

    def purgatory(i, seed):
        _, out = arw.stabilize_via_purgatory(params, rng=seed)
        return [("S_purgatory", out.sleeping)]

    def count_chain(i, seed):
        return [("S_bup", bup.run_to_hitting(params, rng=seed).y)]

    reports = []
    for lane, (name, worker) in enumerate([("direct", direct),
                                           ("purgatory", purgatory),
                                           ("bup", count_chain)], start=11):
        master = int(substream(cfg.seed, lane))
        per_rep = _sub_run(records, cfg.scenario, n, p, q, None, cfg.reps,
                           master, cfg.parallel, worker)
        values = _metric(per_rep, f"S_{name}")
        counts = np.bincount(values.astype(int), minlength=n + 1)
        tv = pmf.tv_distance(counts / cfg.reps)
        reports.append(stats.TestReport(
            name=f"tv_{name}", value=tv, threshold=0.01, sample_size=cfg.reps
        ))
    return records, reports


def _scn_abelian(cfg: ScenarioConfig):
    n, p = cfg.n, cfg.p
    q = cfg.q_value()
    records: list[RunRecord] = []

    def worker(i, seed):
        tape = arw.InstructionTape(n, p, q, seed=int(substream(seed, 3)))
        policies = ["fifo", "lifo", "lowest", "highest",
                    f"random:{int(substream(seed, 4)) % 2**31}"]
        ok = arw.check_abelian(n, arw.Configuration.all_ones(n), tape, policies)
        return [("abelian_ok", 1.0 if ok else 0.0)]

    per_rep = _sub_run(records, cfg.scenario, n, p, q, None, cfg.reps,
                       cfg.seed, cfg.parallel, worker)
    failures = cfg.reps - _metric(per_rep, "abelian_ok").sum()
    reports = [stats.TestReport(name="abelian_failures", value=float(failures),
                                threshold=0.0, sample_size=cfg.reps)]
    return records, reports


def _hit_worker(params):
    def worker(i, seed):
        return [("S", bup.run_to_hitting(params, rng=seed).y)]

    return worker


def _scn_thm_iff(cfg: ScenarioConfig):
    n, p = cfg.n, cfg.p
    records: list[RunRecord] = []
    reports = []

    q = cfg.q_value()
    per_rep = _sub_run(records, cfg.scenario, n, p, q, None, cfg.reps,
                       cfg.seed, cfg.parallel, _hit_worker(Params(n=n, p=p, q=q)))
    density = _metric(per_rep, "S") / n
    frac_out = float(np.mean(np.abs(density - p) > 0.02))
    reports.append(stats.TestReport(
        name="density_within_2pct", value=frac_out, threshold=0.05,
        sample_size=cfg.reps, notes=f"mean S/n={density.mean():.4f}",
    ))

    # strong-retention sweep: with 1/q growing exponentially in n the
    # density settles strictly above p, increasingly so in the exponent
    means = []
    for c in _EXP_SWEEP_C:
        q_exp = math.exp(-c * _EXP_SWEEP_N)
        master = int(substream(cfg.seed, round(1000 * c)))
        per_rep = _sub_run(records, cfg.scenario, _EXP_SWEEP_N, p, q_exp, None,
                           cfg.reps, master, cfg.parallel,
                           _hit_worker(Params(n=_EXP_SWEEP_N, p=p, q=q_exp)))
        means.append(float(_metric(per_rep, "S").mean() / _EXP_SWEEP_N))
    reports.append(stats.TestReport(
        name="exp_retention_density", value=0.55 - means[1], threshold=0.0,
        sample_size=cfg.reps, notes=f"means={['%.3f' % m for m in means]}",
    ))
    worst_inversion = max(means[0] - means[1], means[1] - means[2])
    reports.append(stats.TestReport(
        name="exp_retention_monotone", value=worst_inversion, threshold=0.0,
        sample_size=cfg.reps,
    ))
    return records, reports


def _scn_thm_12(cfg: ScenarioConfig):
    n, p = cfg.n, cfg.p
    q = cfg.q_value()
    records: list[RunRecord] = []
    per_rep = _sub_run(records, cfg.scenario, n, p, q, None, cfg.reps,
                       cfg.seed, cfg.parallel, _hit_worker(Params(n=n, p=p, q=q)))
    values = _metric(per_rep, "S")
    alpha = constants(Params(n=n, p=p, q=q)).alpha_n
    frac_out = float(np.mean(np.abs(values - (p * n + alpha)) > 0.5 * alpha))
    reports = [stats.TestReport(
        name="count_in_half_alpha_window", value=frac_out, threshold=0.2,
        sample_size=cfg.reps,
        notes=f"center={p * n + alpha:.1f} halfwidth={0.5 * alpha:.1f}",
    )]
    return records, reports


def _scn_thm_12_thresholds(cfg: ScenarioConfig):
    n, p = cfg.n, cfg.p
    q = cfg.q_value()
    params = Params(n=n, p=p, q=q)
    k1, k2, k3, k4 = bup.window_levels(n, p, _THRESHOLD_EPS)
    levels = [float(n), k1, k2, k3, k4]
    records: list[RunRecord] = []

    def worker(i, seed):
        lm = bup.maxima_between_levels(params, levels, rng=seed)
        return [
            ("max_to_k1", lm.maxima[1]),
            ("max_k1_k2", lm.maxima[2]),
            ("max_k2_k3", lm.maxima[3]),
            ("max_k3_k4", lm.maxima[4]),
            ("hit_step", float(lm.hit_step if lm.hit_step is not None else -1)),
        ]

    per_rep = _sub_run(records, cfg.scenario, n, p, q, None, cfg.reps,
                       cfg.seed, cfg.parallel, worker)
    events = {
        "below_k1_before_t_k1": _metric(per_rep, "max_to_k1") < k1,
        "below_k2_between_k1_k2": _metric(per_rep, "max_k1_k2") < k2,
        "reaches_k3_between_k3_k4": _metric(per_rep, "max_k3_k4") >= k3,
    }
    reports = [
        stats.TestReport(name=name, value=float(1.0 - hold.mean()), threshold=0.1,
                         sample_size=cfg.reps)
        for name, hold in events.items()
    ]
    return records, reports


def _scn_thm_gumbel(cfg: ScenarioConfig):
    n, p = cfg.n, cfg.p
    q = cfg.q_value()
    _check_gumbel_regime(n, q)
    params = Params(n=n, p=p, q=q)
    consts = constants(params)
    records: list[RunRecord] = []

    def worker(i, seed):
        y = bup.run_to_hitting(params, rng=seed).y
        return [("S", float(y)), ("s_norm", normalize_S(y, consts))]

    per_rep = _sub_run(records, cfg.scenario, n, p, q, None, cfg.reps,
                       cfg.seed, cfg.parallel, worker)
    reports = stats.gumbel_report(_metric(per_rep, "s_norm"),
                                  ks_threshold=0.10, mean_tolerance=0.15)
    return records, reports


def _check_gumbel_regime(n: int, q: float) -> None:
    r_n = 1.0 / q
    if math.log(r_n) >= n ** (1.0 / 3.0):
        raise UsageError(
            f"q-mode leaves the extreme-value regime: 1/q = {r_n:.3g} grows "
            f"faster than exp(n^(1/3)) at n = {n}"
        )
    if math.log(r_n) < 0.55 * math.log(n):
        raise UsageError(
            f"q-mode leaves the extreme-value regime: 1/q = {r_n:.3g} is too "
            f"close to sqrt(n) at n = {n}"
        )


def _scn_thm_density(cfg: ScenarioConfig):
    n, p, mu_ = cfg.n, cfg.p, cfg.mu
    m = math.ceil(mu_ * n)
    cap = cfg.step_cap if cfg.step_cap is not None else round(100 * n * math.log(n))
    records: list[RunRecord] = []

    def worker(i, seed):
        res = bup.run_fixed_energy(n, p, m, rng=seed, step_cap=cap)
        return [
            ("J", float(res.steps)),
            ("cap_hit", 1.0 if res.cap_hit else 0.0),
            ("site1_updates", float(res.site_updates)),
            ("y0", float(res.y0)),
        ]

    per_rep = _sub_run(records, cfg.scenario, n, p, 0.0, mu_, cfg.reps,
                       cfg.seed, cfg.parallel, worker)
    steps = _metric(per_rep, "J")
    capped = _metric(per_rep, "cap_hit")
    reports = []
    if abs(mu_ - p) < 1e-12:
        ratio = float(np.median(steps)) / (n * math.log(n))
        reports.append(stats.TestReport(
            name="median_steps_over_nlogn", value=abs(ratio - 0.5),
            threshold=0.08, sample_size=cfg.reps, notes=f"ratio={ratio:.4f}",
        ))
        quarter_log = 0.25 * math.log(n)
        frac_low = float(np.mean(_metric(per_rep, "site1_updates") < quarter_log))
        reports.append(stats.TestReport(
            name="site_updates_quarter_log", value=frac_low, threshold=0.15,
            sample_size=cfg.reps,
        ))
    elif mu_ < p:
        frac_slow = float(np.mean((steps > 8 * n) | (capped > 0)))
        reports.append(stats.TestReport(
            name="steps_linear_bound", value=frac_slow, threshold=0.05,
            sample_size=cfg.reps,
        ))
    else:
        frac_done = float(np.mean(capped == 0))
        reports.append(stats.TestReport(
            name="supercritical_all_capped", value=frac_done, threshold=0.0,
            sample_size=cfg.reps, notes=f"cap={cap}",
        ))
    return records, reports


def _scn_lem_maxtail(cfg: ScenarioConfig):
    n, p, x, horizon = cfg.n, cfg.p, cfg.x_level, cfg.horizon
    params = Params(n=n, p=p, q=0.0)
    records: list[RunRecord] = []

    def worker(i, seed):
        ps = bup.run_continuous(params, horizon=horizon, level=x, rng=seed)
        return [("m", ps.running_max), ("L", ps.occupation),
                ("exceed_count", float(ps.exceed_count))]

    per_rep = _sub_run(records, cfg.scenario, n, p, 0.0, None, cfg.reps,
                       cfg.seed, cfg.parallel, worker)
    hits = int((_metric(per_rep, "exceed_count") >= 1).sum())
    reference = level_rate(x) * horizon
    ratio, (lo, hi) = stats.ratio_with_ci(hits, cfg.reps, reference)
    run_id = _run_id(cfg.scenario, n, p, 0.0, None, cfg.reps, cfg.seed)
    for metric, value in [("exceedance_ratio", ratio),
                          ("exceedance_ratio_lo", lo),
                          ("exceedance_ratio_hi", hi)]:
        records.append(RunRecord(run_id, cfg.scenario, n, p, 0.0, None,
                                 -1, cfg.seed, metric, float(value)))
    deviation = max(0.75 - ratio, ratio - 1.3, 0.0)
    reports = [stats.TestReport(
        name="max_tail_ratio", value=deviation, threshold=0.0,
        sample_size=cfg.reps,
        notes=f"ratio={ratio:.4f} ci=({lo:.3f}, {hi:.3f}) hits={hits}",
    )]
    return records, reports


def _scn_cluster(cfg: ScenarioConfig):
    n, p, x = cfg.n, cfg.p, cfg.x_level
    params = Params(n=n, p=p, q=0.0)
    horizon = math.log(n)
    xp = bup.x_prime(x, n, p)
    a_n = constants(params).a_n
    y0 = round(p * n + xp * a_n)
    records: list[RunRecord] = []

    def worker(i, seed):
        ps = bup.run_continuous(params, horizon=horizon, level=x, start=y0,
                                rng=seed)
        return [("L", ps.occupation)]

    per_rep = _sub_run(records, cfg.scenario, n, p, 0.0, None, cfg.reps,
                       cfg.seed, cfg.parallel, worker)
    mean_x2 = float(_metric(per_rep, "L").mean()) * x * x
    deviation = max(0.7 - mean_x2, mean_x2 - 1.35, 0.0)
    reports = [stats.TestReport(
        name="cluster_occupation_x2", value=deviation, threshold=0.0,
        sample_size=cfg.reps, notes=f"mean*x^2={mean_x2:.4f}",
    )]
    return records, reports


def _scn_cond_moments(cfg: ScenarioConfig):
    n, p, x, t = cfg.n, cfg.p, cfg.x_level, cfg.horizon
    params = Params(n=n, p=p, q=0.0)
    xp = bup.x_prime(x, n, p)
    a_n = constants(params).a_n
    y0 = round(p * n + xp * a_n)
    records: list[RunRecord] = []

    def worker(i, seed):
        return [("S_t", float(bup.sample_count_at(params, t, start=y0, rng=seed)))]

    per_rep = _sub_run(records, cfg.scenario, n, p, 0.0, None, cfg.reps,
                       cfg.seed, cfg.parallel, worker)
    values = _metric(per_rep, "S_t")
    mean, var = float(values.mean()), float(values.var(ddof=1))
    se_mean = math.sqrt(var / cfg.reps)
    se_var = var * math.sqrt(2.0 / (cfg.reps - 1))
    exact_mean = bup.conditional_mean_exact(n, p, xp, t)
    exact_var = bup.conditional_variance_exact(n, p, xp, t)
    reports = [
        stats.TestReport(
            name="conditional_mean", value=abs(mean - exact_mean),
            threshold=3 * se_mean, sample_size=cfg.reps,
            notes=f"mean={mean:.3f} exact={exact_mean:.3f}",
        ),
        stats.TestReport(
            name="conditional_variance", value=abs(var - exact_var),
            threshold=5 * se_var, sample_size=cfg.reps,
            notes=f"var={var:.2f} exact={exact_var:.2f}",
        ),
    ]
    return records, reports


def _scn_stationarity(cfg: ScenarioConfig):
    n, p, x, horizon = cfg.n, cfg.p, cfg.x_level, cfg.horizon
    params = Params(n=n, p=p, q=0.0)
    records: list[RunRecord] = []

    def worker(i, seed):
        ps = bup.run_continuous(params, horizon=horizon, level=x, rng=seed)
        return [("L", ps.occupation)]

    per_rep = _sub_run(records, cfg.scenario, n, p, 0.0, None, cfg.reps,
                       cfg.seed, cfg.parallel, worker)
    values = _metric(per_rep, "L")
    threshold_count = bup.level_threshold(n, p, x)
    target = horizon * oracle.binomial_tail(n, p, threshold_count)
    se = float(values.std(ddof=1)) / math.sqrt(cfg.reps)
    reports = [stats.TestReport(
        name="occupation_stationarity", value=abs(float(values.mean()) - target),
        threshold=3 * se, sample_size=cfg.reps,
        notes=f"mean={values.mean():.4f} target={target:.4f}",
    )]
    return records, reports


_RUNNERS = {
    "prop-stop": _scn_prop_stop,
    "abelian": _scn_abelian,
    "thm-iff": _scn_thm_iff,
    "thm-12": _scn_thm_12,
    "thm-12-thresholds": _scn_thm_12_thresholds,
    "thm-gumbel": _scn_thm_gumbel,
    "thm-density": _scn_thm_density,
    "lem-maxtail": _scn_lem_maxtail,
    "cluster": _scn_cluster,
    "cond-moments": _scn_cond_moments,
    "stationarity": _scn_stationarity,
}


# ------------------------------------------------------------------- output


def _format_value(value) -> str:
    return repr(float(value))


def write_records(records, path: str, fmt: str) -> None:
    rows = sorted(records, key=lambda r: (r.run_id, r.replicate, r.metric))
    if fmt == "csv":
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_HEADER)
            for r in rows:
                writer.writerow([
                    r.run_id, r.scenario, r.n, _format_value(r.p),
                    _format_value(r.q),
                    "" if r.mu is None else _format_value(r.mu),
                    r.replicate, r.seed, r.metric, _format_value(r.value),
                ])
    elif fmt == "jsonl":
        with open(path, "w") as fh:
            for r in rows:
                fh.write(json.dumps(r.as_dict()) + "\n")
    else:
        raise UsageError(f"unknown format '{fmt}'")


def read_records(path: str) -> list[dict]:
    """Load a results file back into dicts with typed fields."""
    rows = []
    if path.endswith(".jsonl") or _sniff_jsonl(path):
        with open(path) as fh:
            for line in fh:
                if line.strip():
                    rows.append(json.loads(line))
    else:
        with open(path, newline="") as fh:
            for raw in csv.DictReader(fh):
                rows.append({
                    "run_id": raw["run_id"],
                    "scenario": raw["scenario"],
                    "n": int(raw["n"]),
                    "p": float(raw["p"]),
                    "q": float(raw["q"]),
                    "mu": None if raw["mu"] == "" else float(raw["mu"]),
                    "replicate": int(raw["replicate"]),
                    "seed": int(raw["seed"]),
                    "metric": raw["metric"],
                    "value": float(raw["value"]),
                })
    return rows


def _sniff_jsonl(path: str) -> bool:
    with open(path) as fh:
        first = fh.readline().strip()
    return first.startswith("{")


# ------------------------------------------------------------ configuration


_FILE_KEYS = {
    "scenario", "n", "lambda", "p", "q", "q-mode", "mu", "reps", "seed",
    "horizon", "x-level", "step-cap", "parallel", "out", "format",
}


def _load_config_file(path: str) -> dict[str, str]:
    values: dict[str, str] = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected 'key = value'")
            key, _, raw = line.partition("=")
            key = key.strip()
            if key not in _FILE_KEYS:
                raise UsageError(f"{path}:{lineno}: unknown key '{key}'")
            values[key] = raw.strip()
    return values


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="arwlab", add_help=True,
        description="Run one reproduction scenario and write long-format results.",
    )
    parser.add_argument("--config", default=None, help="key = value config file")
    parser.add_argument("--scenario", choices=SCENARIOS, default=None)
    parser.add_argument("--n", type=int, default=None)
    parser.add_argument("--lambda", dest="lambda_", type=float, default=None)
    parser.add_argument("--p", type=float, default=None)
    parser.add_argument("--q", type=float, default=None)
    parser.add_argument("--q-mode", dest="q_mode", default=None)
    parser.add_argument("--mu", type=float, default=None)
    parser.add_argument("--reps", type=int, default=None)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--horizon", type=float, default=None)
    parser.add_argument("--x-level", dest="x_level", type=float, default=None)
    parser.add_argument("--step-cap", dest="step_cap", type=int, default=None)
    parser.add_argument("--parallel", type=int, default=None)
    parser.add_argument("--out", default=None)
    parser.add_argument("--format", choices=["csv", "jsonl"], default=None)
    return parser


_CASTS = {
    "n": int, "reps": int, "seed": int, "parallel": int, "step-cap": int,
    "lambda": float, "p": float, "q": float, "mu": float, "horizon": float,
    "x-level": float,
}


def parse_config(argv, config_file: str | None = None) -> ScenarioConfig:
    """Merge CLI flags over optional `key = value` file settings."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        if exc.code == 0:  # --help
            raise
        raise UsageError("invalid command line") from exc

    merged: dict[str, object] = {}
    path = args.config or config_file
    if path:
        for key, raw in _load_config_file(path).items():
            cast = _CASTS.get(key, str)
            try:
                merged[key] = cast(raw)
            except ValueError as exc:
                raise UsageError(f"malformed value for '{key}': {raw!r}") from exc

    cli_values = {
        "scenario": args.scenario, "n": args.n, "lambda": args.lambda_,
        "p": args.p, "q": args.q, "q-mode": args.q_mode, "mu": args.mu,
        "reps": args.reps, "seed": args.seed, "horizon": args.horizon,
        "x-level": args.x_level, "step-cap": args.step_cap,
        "parallel": args.parallel, "out": args.out, "format": args.format,
    }
    for key, value in cli_values.items():
        if value is not None:
            merged[key] = value
    return _validate(merged)


def _require(merged: dict, key: str):
    if key not in merged:
        raise UsageError(f"missing required field '{key}'")
    return merged[key]


def _validate(merged: dict) -> ScenarioConfig:
    scenario = _require(merged, "scenario")
    if scenario not in SCENARIOS:
        raise UsageError(f"unknown scenario '{scenario}'")
    table = _FIELD_TABLE[scenario]
    allowed = table["required"] | table["optional"]

    if "lambda" in merged and "p" in merged:
        raise UsageError("give either 'lambda' or 'p', not both")
    if "q" in merged and "q-mode" in merged:
        raise UsageError("give either 'q' or 'q-mode', not both")

    p = None
    if "p" in merged:
        p = float(merged["p"])
        if not (0.0 < p < 1.0):
            raise UsageError(f"p must lie in (0, 1), got {p}")
    elif "lambda" in merged:
        lam = float(merged["lambda"])
        if lam <= 0:
            raise UsageError(f"lambda must be positive, got {lam}")
        p = derive_p(lam)

    q_mode = None
    if "q" in merged:
        q_mode = f"const:{float(merged['q'])!r}"
    elif "q-mode" in merged:
        q_mode = str(merged["q-mode"])

    present = set()
    if merged.get("n") is not None:
        present.add("n")
    if p is not None:
        present.add("p")
    if q_mode is not None:
        present.add("q" if "q" in table["required"] else "q-mode")
    for key in ("mu", "horizon", "x-level", "step-cap"):
        if key in merged:
            present.add(key)

    for field in table["required"]:
        if field not in present:
            raise UsageError(f"scenario '{scenario}' requires field '{field}'")
    for field in present - allowed:
        raise UsageError(f"scenario '{scenario}' does not accept field '{field}'")

    if q_mode is None and scenario in _DEFAULT_Q_MODE:
        q_mode = _DEFAULT_Q_MODE[scenario]

    n = int(_require(merged, "n"))
    if n < 1:
        raise UsageError(f"n must be positive, got {n}")
    reps = int(_require(merged, "reps"))
    if reps < 1:
        raise UsageError(f"reps must be positive, got {reps}")
    seed = int(_require(merged, "seed"))
    out = str(_require(merged, "out"))

    cfg = ScenarioConfig(
        scenario=scenario,
        out=out,
        seed=seed,
        reps=reps,
        n=n,
        p=p,
        q_mode=q_mode,
        mu=float(merged["mu"]) if "mu" in merged else None,
        horizon=float(merged["horizon"]) if "horizon" in merged else None,
        x_level=float(merged["x-level"]) if "x-level" in merged else None,
        step_cap=int(merged["step-cap"]) if "step-cap" in merged else None,
        parallel=int(merged.get("parallel", _default_workers())),
        format=str(merged.get("format", "csv")),
    )
    _validate_scenario_specific(cfg)
    return cfg


def _default_workers() -> int:
    return min(8, os.cpu_count() or 1)


def _validate_scenario_specific(cfg: ScenarioConfig) -> None:
    if cfg.scenario == "prop-stop" and cfg.n > oracle.MAX_EXACT_N:
        raise UsageError(
            f"scenario 'prop-stop' needs n <= {oracle.MAX_EXACT_N} for the "
            f"exact reference law"
        )
    if cfg.scenario == "thm-density":
        if not (0.0 < cfg.mu <= 1.0):
            raise UsageError(f"mu must lie in (0, 1], got {cfg.mu}")
    if cfg.q_mode is not None:
        q = cfg.q_value()
        if not (0.0 < q <= 1.0) and cfg.scenario != "thm-density":
            raise UsageError(f"resolved q = {q} lies outside (0, 1]")
    if cfg.scenario == "thm-gumbel":
        _check_gumbel_regime(cfg.n, cfg.q_value())
    if cfg.scenario in ("lem-maxtail", "stationarity") and cfg.horizon <= 0:
        raise UsageError("horizon must be positive")
    if cfg.scenario == "cond-moments" and cfg.horizon <= 0:
        raise UsageError("horizon (the observation time) must be positive")


# ----------------------------------------------------------------- frontend


def run_scenario(cfg: ScenarioConfig):
    """Execute a scenario: write its records file, print summary lines,
    and return (reports, records)."""
    records, reports = _RUNNERS[cfg.scenario](cfg)
    write_records(records, cfg.out, cfg.format)
    for report in reports:
        print(report.line())
    return reports, records


def main(argv=None) -> int:
    try:
        cfg = parse_config(sys.argv[1:] if argv is None else argv)
        reports, _ = run_scenario(cfg)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    return 0 if all(r.passed for r in reports) else 1


if __name__ == "__main__":
    sys.exit(main())
