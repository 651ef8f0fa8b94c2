"""Benchmark values: a genie lower bound and the uniform-random poller.

The lower bound drops the one-poll-per-slot coupling and lets every
sensor push updates on its own: a sensor transmits whenever its age is
below a level L, and with probability omega when the age equals L. Over
a renewal cycle the per-slot transmission and age rates have closed
forms in (L, omega); tightening (L, omega) until the aggregate
transmission rate just reaches one per slot yields a value no schedule
can beat. The cycle argument runs on the untruncated age process, so
the age cap never enters these formulas.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .chain import ChainParams

__all__ = [
    "ProactiveRates",
    "LowerBoundResult",
    "proactive_rates",
    "lower_bound",
    "lower_bound_symmetric",
    "random_policy_value",
    "random_policy_value_uniform",
]

_FEAS_TOL = 1e-12


@dataclass(frozen=True)
class ProactiveRates:
    """Per-slot transmission and age rates of one self-timed sensor."""

    tx_per_slot: float
    aoi_per_slot: float


@dataclass(frozen=True)
class LowerBoundResult:
    """Tightest self-timed configuration and the bound it certifies."""

    l_star: int
    omega_star: float
    value: float


def _cycle_tx(p: float, level: int, omega: float) -> float:
    return 1.0 - omega * p**level - (1.0 - omega) * p ** (level - 1)


def _cycle_aoi(p: float, level: int, omega: float) -> float:
    q = 1.0 - p
    aoi = ((level - 1) * p**level - level * p ** (level - 1) + 1.0) / q
    return aoi + omega * level * q * p ** (level - 1)


def proactive_rates(params: ChainParams, level: int, omega: float) -> ProactiveRates:
    """Closed-form cycle rates of the (level, omega) self-timed sensor.

    Transmit while the age is under level, and with probability omega at
    the level itself.
    """
    if not 1 <= level <= params.m:
        raise ValueError(f"level must lie in [1, {params.m}], got {level}")
    if not 0.0 < omega <= 1.0:
        raise ValueError(f"omega must lie in (0, 1], got {omega}")
    return ProactiveRates(
        tx_per_slot=_cycle_tx(params.p, level, omega),
        aoi_per_slot=_cycle_aoi(params.p, level, omega),
    )


def _aggregate_tx(sensors: list[ChainParams], level: int, omega: float) -> float:
    return sum(_cycle_tx(s.p, level, omega) for s in sensors)


def lower_bound(sensors: list[ChainParams]) -> LowerBoundResult:
    """Best self-timed value meeting one transmission per slot on average.

    The level is the smallest integer whose always-transmit rate reaches
    the budget; omega then solves the budget equation linearly at that
    level. A single unreliable sensor can only approach the budget in
    the limit, so feasibility carries a 1e-12 slack, which turns the
    search into the infimum it is meant to be.
    """
    if not sensors:
        raise ValueError("need at least one sensor")

    def feasible(level: int) -> bool:
        return _aggregate_tx(sensors, level, 1.0) >= 1.0 - _FEAS_TOL

    hi = 1
    while not feasible(hi):
        hi *= 2
        if hi > 2**62:
            raise ArithmeticError("self-timed budget unreachable")
    lo = hi // 2
    while hi - lo > 1 and lo >= 1:
        mid = (lo + hi) // 2
        if feasible(mid):
            hi = mid
        else:
            lo = mid
    level = hi

    at_zero = sum(1.0 - s.p ** (level - 1) for s in sensors)
    span = sum(s.p ** (level - 1) - s.p**level for s in sensors)
    omega = (1.0 - at_zero) / span if span > 0.0 else 1.0
    omega = min(max(omega, _FEAS_TOL), 1.0)
    value = sum(_cycle_aoi(s.p, level, omega) for s in sensors)
    return LowerBoundResult(l_star=level, omega_star=omega, value=value)


def lower_bound_symmetric(p: float, n: int) -> LowerBoundResult:
    """Identical-sensor shortcut for the self-timed bound.

    Closed form for n >= 2 with 0 < p < 1: the level is
    ceil(log_p(1 - 1/n)) and omega solves the budget equation at that
    level. Degenerate inputs (p = 0 or a single sensor) fall back to the
    general search, which the shortcut must match anyway.
    """
    if n < 1:
        raise ValueError(f"need at least one sensor, got {n}")
    probe = ChainParams(p=p, m=2)  # the age cap is irrelevant to cycle rates
    if p == 0.0 or n == 1:
        return lower_bound([probe] * n)
    level = max(math.ceil(math.log(1.0 - 1.0 / n) / math.log(p) - 1e-12), 1)
    omega = (p ** (level - 1) + 1.0 / n - 1.0) / (p ** (level - 1) - p**level)
    omega = min(max(omega, _FEAS_TOL), 1.0)
    return LowerBoundResult(
        l_star=level, omega_star=omega, value=n * _cycle_aoi(p, level, omega)
    )


def random_policy_value(sensors: list[ChainParams]) -> float:
    """Mean observed age when each slot polls one sensor uniformly.

    The polled sensor is stationary, so the value is the average of the
    per-sensor stationary means.
    """
    if not sensors:
        raise ValueError("need at least one sensor")
    return sum((1.0 - s.p**s.m) / (1.0 - s.p) for s in sensors) / len(sensors)


def random_policy_value_uniform(p_span: float) -> float:
    """Uniform-random poller averaged over p ~ U(1/2 - span/2, 1/2 + span/2).

    Untruncated-age limit; the sensor count drops out of the average.
    """
    if not 0.0 < p_span < 1.0:
        raise ValueError(f"span must lie in (0, 1), got {p_span}")
    return math.log((1.0 + p_span) / (1.0 - p_span)) / p_span
