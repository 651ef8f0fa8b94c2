"""Scenario harness: sweep a fleet parameter, compare policies, emit CSV.

A scenario fixes a fleet construction rule (symmetric or one of three
asymmetric spreads), a fleet size, an age cap, and a sweep over the
spread parameter x. For every sweep point it runs `trials` independent
trials; each trial draws a fleet, computes the analytic quantities
(self-timed lower bound, uniform-polling value, tuned cutoff and its
predicted value) and simulates the three policies over `horizon` slots.
Rows are aggregated across trials and written with a fixed column
order so downstream plotting never has to guess.
"""
from __future__ import annotations

import csv
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .baselines import lower_bound, random_policy_value
from .chain import ChainParams
from .relaxed_solver import solve_eta
from .sim import SimResult, run_greedy, run_random, run_relaxed

__all__ = [
    "ConfigError",
    "ScenarioConfig",
    "load_config",
    "gen_sensors",
    "trial_fleet",
    "run_scenario",
    "write_csv",
    "read_csv",
    "COLUMNS",
]

COLUMNS = (
    "x",
    "lb",
    "j_random_analytic",
    "j_random_sim",
    "j_relaxed_analytic",
    "j_relaxed_sim",
    "j_greedy_sim",
    "eta_star",
    "d_hat",
    "ci_halfwidth",
)

_KINDS = ("symmetric", "asym_deterministic", "asym_uniform", "asym_gaussian")
_KIND_IDS = {k: i for i, k in enumerate(_KINDS)}
_CONF = 0.95


class ConfigError(ValueError):
    """Scenario description is malformed or out of range."""


@dataclass(frozen=True)
class ScenarioConfig:
    kind: str
    n: int
    sweep: tuple[float, ...]
    trials: int
    horizon: int
    m: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ConfigError(f"unknown kind {self.kind!r}, expected one of {_KINDS}")
        if not isinstance(self.n, int) or self.n < 1:
            raise ConfigError(f"fleet size must be a positive integer, got {self.n!r}")
        if self.kind == "asym_deterministic" and self.n < 2:
            raise ConfigError("the deterministic spread needs at least two sensors")
        if not isinstance(self.m, int) or self.m < 2:
            raise ConfigError(f"age cap must be an integer >= 2, got {self.m!r}")
        if not self.sweep:
            raise ConfigError("sweep must list at least one point")
        for x in self.sweep:
            if not isinstance(x, (int, float)) or not math.isfinite(x):
                raise ConfigError(f"sweep points must be finite numbers, got {x!r}")
        if not isinstance(self.trials, int) or self.trials < 1:
            raise ConfigError(f"trials must be a positive integer, got {self.trials!r}")
        if self.kind == "asym_deterministic" and self.trials != 1:
            raise ConfigError("the deterministic spread draws nothing, use trials = 1")
        if not isinstance(self.horizon, int) or self.horizon <= 10 * self.m:
            raise ConfigError(
                f"horizon must exceed the burn-in of {10 * self.m} slots, got {self.horizon!r}"
            )
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError(f"seed must be a nonnegative integer, got {self.seed!r}")


def load_config(source) -> ScenarioConfig:
    """Build a ScenarioConfig from a dict or a JSON file path."""
    if isinstance(source, dict):
        raw = dict(source)
    else:
        try:
            with open(source) as fh:
                raw = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
    known = {"kind", "n", "sweep", "trials", "horizon", "m", "seed"}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    missing = {"kind", "n", "sweep", "trials", "horizon"} - set(raw)
    if missing:
        raise ConfigError(f"missing config keys: {sorted(missing)}")
    sweep = raw["sweep"]
    if not isinstance(sweep, list):
        raise ConfigError("sweep must be a list of numbers")
    raw["sweep"] = tuple(float(x) for x in sweep)
    return ScenarioConfig(**raw)


def _check_probs(ps, kind: str, x: float) -> list[float]:
    for p in ps:
        if not 0.0 <= p < 1.0:
            raise ConfigError(
                f"{kind} at x={x} puts a success probability at {p}, outside [0, 1)"
            )
    return [float(p) for p in ps]


def gen_sensors(config: ScenarioConfig, x: float, draw_rng: np.random.Generator) -> list[ChainParams]:
    """Materialize the fleet for one trial at sweep point x."""
    n = config.n
    if config.kind == "symmetric":
        ps = [x] * n
    elif config.kind == "asym_deterministic":
        ps = [0.5 + (i - (n + 1) / 2.0) * x / (n - 1) for i in range(1, n + 1)]
    elif config.kind == "asym_uniform":
        if not 0.0 <= x < 1.0:
            raise ConfigError(f"uniform spread width must be in [0, 1), got {x}")
        ps = draw_rng.uniform(0.5 - x / 2.0, 0.5 + x / 2.0, n)
    else:
        if x < 0.0:
            raise ConfigError(f"gaussian spread needs a nonnegative width, got {x}")
        ps = draw_rng.normal(0.5, x, n)
        bad = (ps <= 0.0) | (ps >= 1.0)
        while bad.any():
            ps[bad] = draw_rng.normal(0.5, x, int(bad.sum()))
            bad = (ps <= 0.0) | (ps >= 1.0)
    ps = _check_probs(ps, config.kind, x)
    return [ChainParams(p=p, m=config.m) for p in ps]


def _batch_halfwidth(result: SimResult) -> float:
    means = result.batch_means
    if len(means) < 2:
        return math.nan
    s = float(np.std(means, ddof=1))
    return float(stats.t.ppf(0.5 + _CONF / 2.0, len(means) - 1)) * s / math.sqrt(len(means))


def _trial_seeds(config: ScenarioConfig, x_idx: int, trial: int) -> list[int]:
    # fleet draw, random, relaxed, greedy: one independent stream each,
    # derived from (seed, kind, sweep index, trial) so additional trials
    # or sweep points never perturb existing ones
    ss = np.random.SeedSequence([config.seed, _KIND_IDS[config.kind], x_idx, trial])
    return [int(s) for s in ss.generate_state(4, dtype=np.uint64)]


def trial_fleet(config: ScenarioConfig, x_idx: int = 0, trial: int = 0) -> list[ChainParams]:
    """The exact fleet a given (sweep index, trial) pair would use."""
    if not 0 <= x_idx < len(config.sweep):
        raise ConfigError(f"sweep index {x_idx} out of range")
    draw_seed = _trial_seeds(config, x_idx, trial)[0]
    return gen_sensors(config, config.sweep[x_idx], np.random.default_rng(draw_seed))


def _run_trial(config: ScenarioConfig, x_idx: int, trial: int) -> dict:
    x = config.sweep[x_idx]
    seeds = _trial_seeds(config, x_idx, trial)
    sensors = gen_sensors(config, x, np.random.default_rng(seeds[0]))
    sol = solve_eta(sensors)
    r_rand = run_random(sensors, config.horizon, seeds[1])
    r_rel = run_relaxed(sensors, sol.eta_star, config.horizon, seeds[2])
    r_greedy = run_greedy(sensors, config.horizon, seeds[3])
    return {
        "x": x,
        "lb": lower_bound(sensors).value,
        "j_random_analytic": random_policy_value(sensors),
        "j_random_sim": r_rand.j_realized,
        "j_relaxed_analytic": sol.j_value,
        "j_relaxed_sim": r_rel.j_realized,
        "j_greedy_sim": r_greedy.j_realized,
        "eta_star": sol.eta_star,
        "d_hat": sol.d_hat,
        "ci_trial": max(
            _batch_halfwidth(r_rand), _batch_halfwidth(r_rel), _batch_halfwidth(r_greedy)
        ),
    }


def _worker(task):
    config, x_idx, trial = task
    try:
        return x_idx, _run_trial(config, x_idx, trial)
    except ConfigError:
        raise
    except Exception as exc:
        # the trial failed numerically: flag it on its row, do not drop it
        return x_idx, {"__error__": f"{type(exc).__name__}: {exc}"}


_SIM_COLS = ("j_random_sim", "j_relaxed_sim", "j_greedy_sim")


def _aggregate(config: ScenarioConfig, x_idx: int, trials: list[dict]) -> dict:
    x = config.sweep[x_idx]
    errors = [t["__error__"] for t in trials if "__error__" in t]
    good = [t for t in trials if "__error__" not in t]
    if errors:
        print(
            f"row x={x}: {len(errors)}/{len(trials)} trials failed ({errors[0]})",
            file=sys.stderr,
        )
    row = {"x": x}
    if not good:
        for col in COLUMNS[1:]:
            row[col] = math.nan
        return row
    for col in COLUMNS[1:-1]:
        row[col] = float(np.mean([t[col] for t in good]))
    if len(good) > 1:
        quant = float(stats.t.ppf(0.5 + _CONF / 2.0, len(good) - 1))
        hw = 0.0
        for col in _SIM_COLS:
            vals = [t[col] for t in good]
            hw = max(hw, quant * float(np.std(vals, ddof=1)) / math.sqrt(len(vals)))
        row["ci_halfwidth"] = hw
    else:
        row["ci_halfwidth"] = good[0]["ci_trial"]
    return row


def run_scenario(config: ScenarioConfig, out_path=None, jobs: int = 1) -> list[dict]:
    """Run every (sweep point, trial) pair and aggregate per sweep point.

    Returns one dict per sweep point, keyed by COLUMNS; writes them to
    out_path as CSV when given. jobs > 1 farms trials out to worker
    processes.
    """
    tasks = [
        (config, x_idx, trial)
        for x_idx in range(len(config.sweep))
        for trial in range(config.trials)
    ]
    per_x: list[list[dict]] = [[] for _ in config.sweep]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for x_idx, res in pool.map(_worker, tasks):
                per_x[x_idx].append(res)
    else:
        for task in tasks:
            x_idx, res = _worker(task)
            per_x[x_idx].append(res)
    rows = [_aggregate(config, x_idx, trials) for x_idx, trials in enumerate(per_x)]
    if out_path is not None:
        write_csv(rows, out_path)
    return rows


def write_csv(rows: list[dict], path) -> None:
    """Write aggregated rows with the fixed header, values as %.9g."""
    parent = os.path.dirname(str(path))
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(COLUMNS)
        for row in rows:
            writer.writerow(format(float(row[c]), ".9g") for c in COLUMNS)


def read_csv(path) -> list[dict]:
    """Read a file written by write_csv back into float-valued rows."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != COLUMNS:
            raise ConfigError(f"unexpected CSV header in {path}: {header}")
        return [{c: float(v) for c, v in zip(COLUMNS, line)} for line in reader]
