"""Long-run rates of a threshold poller and the budget-matching cutoff.

Under a fixed cutoff eta a sensor is polled exactly when its belief
branch first qualifies, so between polls the branch index is a Markov
chain and the time between polls is the branch's threshold. Both the
polls-per-slot rate and the collected mean-age-per-slot rate then solve
one small linear system derived from the renewal recurrences (the value
function is affine in the horizon). The cutoff search tunes eta until
the aggregate polling rate over all sensors matches a budget of one
poll per slot on average.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .belief import _table_cached
from .chain import ChainParams
from .threshold import NEVER, ThresholdTable, gamma_analytic

__all__ = [
    "AbsorbingBranchError",
    "SingularSystemError",
    "RecurrenceSystem",
    "PerSensorRates",
    "SearchConfig",
    "EtaSolution",
    "build_system",
    "sampling_rate",
    "aoi_rate",
    "iterate_recurrence",
    "sensor_rates",
    "solve_eta",
    "relaxed_performance",
]


class AbsorbingBranchError(ValueError):
    """The table abandons some branch, so the poll process dies out."""


class SingularSystemError(RuntimeError):
    """The renewal system is numerically singular."""


@dataclass(frozen=True, eq=False)
class RecurrenceSystem:
    """Poll-to-poll kernel of one sensor under a fixed cutoff.

    rows[k - 1] is the belief over the age observed at the next poll
    when the last poll returned k; gammas[k - 1] is the poll spacing
    from branch k; rewards[k - 1] is the branch mean collected at that
    poll.
    """

    params: ChainParams
    eta: float
    gammas: tuple[int, ...]
    rows: np.ndarray
    rewards: np.ndarray


def build_system(params: ChainParams, table: ThresholdTable) -> RecurrenceSystem:
    """Assemble the poll-to-poll kernel for a fully finite table."""
    if table.m != params.m:
        raise ValueError(f"table size {table.m} does not match age cap {params.m}")
    if table.has_never:
        raise AbsorbingBranchError(
            f"cutoff {table.eta} abandons some branch (p={params.p}, m={params.m})"
        )
    m, p, q = params.m, params.p, params.q
    gammas = table.finite()
    abar = _table_cached(params)
    rows = np.zeros((m, m))
    ks = np.arange(1, m + 1)
    for g in sorted(set(gammas)):
        idx = np.flatnonzero(np.array(gammas) == g)
        rows[np.ix_(idx, np.arange(g))] = q * p ** np.arange(g, dtype=float)
        tails = np.minimum(g + ks[idx], m) - 1
        rows[idx, tails] += p**g
    rewards = abar[np.arange(m), np.array(gammas) - 1]
    return RecurrenceSystem(
        params=params, eta=float(table.eta), gammas=gammas, rows=rows, rewards=rewards.copy()
    )


def _affine_rates(system: RecurrenceSystem, targets: np.ndarray) -> np.ndarray:
    # The horizon-T value from branch k is alpha*T + b(k); pinning
    # b(m) = 0 leaves unknowns [b(1)..b(m-1), -alpha] and one equation
    # per branch: (kernel row - identity) restricted to the first m-1
    # columns, with the poll spacing in the last column.
    m = system.params.m
    c = np.empty((m, m))
    c[:, : m - 1] = system.rows[:, : m - 1]
    c[np.arange(m - 1), np.arange(m - 1)] -= 1.0
    c[:, m - 1] = system.gammas
    try:
        u = np.linalg.solve(c, -targets)
    except np.linalg.LinAlgError as err:
        raise SingularSystemError(
            f"renewal system singular: p={system.params.p}, m={m}, "
            f"spacings={sorted(set(system.gammas))}"
        ) from err
    return -u[m - 1] if targets.ndim == 1 else -u[m - 1, :]


def sampling_rate(system: RecurrenceSystem) -> float:
    """Long-run polls per slot of the threshold policy."""
    return float(_affine_rates(system, np.ones(system.params.m)))


def aoi_rate(system: RecurrenceSystem) -> float:
    """Long-run collected branch mean per slot of the threshold policy."""
    return float(_affine_rates(system, system.rewards))


def iterate_recurrence(system: RecurrenceSystem, horizon: int, kind: str = "count") -> np.ndarray:
    """Exact finite-horizon renewal values, one per starting branch.

    Dynamic program on the poll recurrences: nothing is collected before
    the first poll, the first poll lands at the branch spacing, and
    later horizons recurse through the observed-age kernel. Serves as
    the independent check of the affine solve; one windowed matvec per
    slot.
    """
    if kind not in ("count", "reward"):
        raise ValueError(f"kind must be 'count' or 'reward', got {kind!r}")
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    m = system.params.m
    base = np.ones(m) if kind == "count" else np.asarray(system.rewards, dtype=float)
    garr = np.asarray(system.gammas)
    gmax = int(garr.max())
    groups = []
    for g in sorted(set(system.gammas)):
        idx = np.flatnonzero(garr == g)
        groups.append((g, idx, system.rows[idx], base[idx]))
    # Warm-up horizons, where some spacings still reach past t = 0 and
    # the value stays pinned at zero.
    warm = min(horizon, gmax)
    dp = np.zeros((warm + 1, m))
    for t in range(1, warm + 1):
        for g, idx, rows_g, base_g in groups:
            if t >= g:
                dp[t, idx] = base_g + rows_g @ dp[t - g]
    if horizon <= gmax:
        return dp[horizon].copy()
    # Past the warm-up every lookback lands inside a gmax-deep window, so
    # the whole step collapses to one matvec against the flattened window
    # (row k reads window row gmax - gamma_k).
    flat = np.zeros((m, gmax * m))
    for g, idx, rows_g, _ in groups:
        flat[idx, (gmax - g) * m : (gmax - g + 1) * m] = rows_g
    window = np.ascontiguousarray(dp[1:])
    out = np.empty(m)
    for _ in range(gmax + 1, horizon + 1):
        np.dot(flat, window.ravel(), out=out)
        out += base
        window[:-1] = window[1:]
        window[-1] = out
    return window[-1].copy()


@dataclass(frozen=True)
class PerSensorRates:
    """Polls per slot and collected mean age per slot for one sensor."""

    d_bar: float
    r_bar: float


def sensor_rates(params: ChainParams, eta: float) -> PerSensorRates:
    """Rates of one sensor under cutoff eta; zero once the sensor idles.

    When any branch is abandoned the observation walk reaches it almost
    surely and polling dies out, so both long-run rates are zero. The
    abandonment test reuses the threshold table, keeping these rates
    consistent with the scan semantics down to float resolution.
    """
    table = gamma_analytic(params, eta)
    if table.has_never:
        return PerSensorRates(d_bar=0.0, r_bar=0.0)
    system = build_system(params, table)
    targets = np.column_stack([np.ones(params.m), system.rewards])
    d_bar, r_bar = _affine_rates(system, targets)
    return PerSensorRates(d_bar=float(d_bar), r_bar=float(r_bar))


@dataclass(frozen=True)
class SearchConfig:
    """Knobs of the cutoff search.

    exhaustive_below: evaluate every candidate (and fully verify that
        the aggregate rate is monotone) when the grid is at most this
        large; larger grids are bisected.
    pad: headroom added above the largest attainable branch mean so the
        poll-every-slot regime is always on the grid.
    refine: test one extra midpoint on each side of the winner.
    """

    exhaustive_below: int = 256
    pad: float = 1.0
    refine: bool = True


@dataclass(frozen=True)
class EtaSolution:
    """Result of the cutoff search.

    active holds the indices (into the caller's sensor list) of sensors
    polled under eta_star; d_hat is their aggregate poll rate; j_value
    is the per-poll mean age of the tuned policy, nan when nothing is
    polled. monotone_ok reports the empirical monotonicity check of the
    aggregate rate along the evaluated grid.
    """

    eta_star: float
    d_hat: float
    active: tuple[int, ...]
    j_value: float
    monotone_ok: bool = True


def _d_hat(sensors: list[ChainParams], eta: float) -> float:
    return sum(sensor_rates(s, eta).d_bar for s in sensors)


def _pick(evaluated: dict[float, float]) -> float:
    # smallest |d_hat - 1|; on ties prefer the largest cutoff that keeps
    # the budget feasible (d_hat <= 1), otherwise the smallest cutoff
    best_gap = min(abs(d - 1.0) for d in evaluated.values())
    ties = [e for e, d in evaluated.items() if abs(d - 1.0) == best_gap]
    feasible = [e for e in ties if evaluated[e] <= 1.0]
    return max(feasible) if feasible else min(ties)


def solve_eta(sensors: list[ChainParams], search: SearchConfig | None = None) -> EtaSolution:
    """Tune the cutoff so the aggregate poll rate is closest to 1/slot.

    Candidate cutoffs are the distinct attainable branch means of all
    sensors plus the midpoints between neighbours (the aggregate rate is
    a step function that can only move at attainable means), topped by a
    padded value that forces every branch to qualify. Small grids are
    scanned outright; large ones are bisected, relying on monotonicity
    of the aggregate rate, which is checked on every cutoff actually
    evaluated and reported via monotone_ok.
    """
    if not sensors:
        raise ValueError("need at least one sensor")
    cfg = search or SearchConfig()
    values = np.unique(np.concatenate([_table_cached(s).ravel() for s in sensors]))
    top = max(s.q + s.m * s.p for s in sensors) + cfg.pad
    values = np.append(values, top)
    mids = (values[1:] + values[:-1]) / 2.0
    grid = np.unique(np.concatenate([values, mids]))

    evaluated: dict[float, float] = {}

    def evaluate(eta: float) -> float:
        if eta not in evaluated:
            evaluated[eta] = _d_hat(sensors, eta)
        return evaluated[eta]

    if len(grid) <= cfg.exhaustive_below:
        for eta in grid:
            evaluate(float(eta))
    else:
        lo, hi = 0, len(grid) - 1
        d_lo, d_hi = evaluate(float(grid[lo])), evaluate(float(grid[hi]))
        if d_lo < 1.0 <= d_hi:
            while hi - lo > 1:
                mid = (lo + hi) // 2
                if evaluate(float(grid[mid])) < 1.0:
                    lo = mid
                else:
                    hi = mid

    eta_star = _pick(evaluated)
    if cfg.refine:
        pos = int(np.searchsorted(grid, eta_star))
        for nb in (pos - 1, pos + 1):
            if 0 <= nb < len(grid):
                evaluate((float(grid[nb]) + eta_star) / 2.0)
        eta_star = _pick(evaluated)

    etas = sorted(evaluated)
    rates = [evaluated[e] for e in etas]
    monotone_ok = all(b >= a - 1e-9 for a, b in zip(rates, rates[1:]))
    if not monotone_ok:
        warnings.warn("aggregate poll rate not monotone on the evaluated grid")

    per = [sensor_rates(s, eta_star) for s in sensors]
    active = tuple(i for i, r in enumerate(per) if r.d_bar > 0.0)
    d_hat = sum(r.d_bar for r in per)
    j_value = sum(r.r_bar for r in per) / d_hat if d_hat > 0 else math.nan
    return EtaSolution(
        eta_star=float(eta_star),
        d_hat=float(d_hat),
        active=active,
        j_value=float(j_value),
        monotone_ok=monotone_ok,
    )


def relaxed_performance(sensors: list[ChainParams], eta: float) -> float:
    """Per-poll mean age of the threshold policy at a given cutoff."""
    per = [sensor_rates(s, eta) for s in sensors]
    d_hat = sum(r.d_bar for r in per)
    if d_hat <= 0.0:
        raise ValueError(f"cutoff {eta} polls nothing; no performance defined")
    return sum(r.r_bar for r in per) / d_hat
