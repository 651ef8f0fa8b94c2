"""Monte Carlo engine: exact replay twin, laws, and edge cases."""
import math

import numpy as np
import pytest
from scipy import stats

from aoi_bandit import (
    BranchState,
    ChainParams,
    SensorWorld,
    branch_belief,
    evolve,
    expected_aoi_table,
    random_policy_value,
    run_greedy,
    run_random,
    run_relaxed,
    sensor_rates,
    steady_expected_aoi,
    steady_state,
    step_aoi,
)

BATCHES = 20


def _twin(sensors, horizon, seed, policy, eta=None, log=None):
    """Slot-by-slot replica of the engine built from the public pieces.

    Follows the documented contract: one spawned stream per sensor plus
    one for the scheduler, stationary starting ages, decisions made on
    the previous slot's beliefs, polls observing the previous slot's
    age. Only valid for horizons inside one draw chunk (131072 slots).
    """
    assert horizon <= 131072
    n = len(sensors)
    burn = 10 * max(s.m for s in sensors)
    mlen = horizon - burn
    nb = BATCHES if mlen >= BATCHES else 1
    children = np.random.SeedSequence(seed).spawn(n + 1)
    s_rngs = [np.random.default_rng(c) for c in children[:n]]
    p_rng = np.random.default_rng(children[n])
    ages = [int(r.choice(s.m, p=steady_state(s))) + 1 for s, r in zip(sensors, s_rngs)]
    beliefs = [BranchState.stationary(s.m) for s in sensors]
    tables = [expected_aoi_table(s) for s in sensors]
    us = [r.random(horizon) for r in s_rngs]
    picks = p_rng.integers(0, n, horizon).tolist() if policy == "random" else None

    obs_sum = exp_sum = 0.0
    nsamp = 0
    counts = [0] * n
    b_obs = [0.0] * nb
    b_cnt = [0] * nb

    def record(t, s, obs, value):
        nonlocal obs_sum, exp_sum, nsamp
        if t >= burn:
            obs_sum += obs
            exp_sum += value
            nsamp += 1
            counts[s] += 1
            bidx = (t - burn) * nb // mlen
            b_obs[bidx] += obs
            b_cnt[bidx] += 1

    for t in range(horizon):
        values = [tables[s][beliefs[s].k - 1, beliefs[s].i - 1] for s in range(n)]
        if policy == "relaxed":
            polled = [s for s in range(n) if values[s] < eta]
        elif policy == "greedy":
            polled = [min(range(n), key=lambda s: (values[s], s))]
        else:
            polled = [picks[t]]
        observations = {s: ages[s] for s in polled}
        for s in polled:
            record(t, s, observations[s], values[s])
            if log is not None:
                log.append((beliefs[s].k, beliefs[s].i, observations[s]))
        for s in range(n):
            ages[s] = step_aoi(sensors[s], ages[s], us[s][t])
            if s in observations:
                beliefs[s] = evolve(beliefs[s], "sample", observation=observations[s])
            else:
                beliefs[s] = evolve(beliefs[s], "rest")

    return {
        "j_realized": obs_sum / nsamp if nsamp else math.nan,
        "j_expected": exp_sum / nsamp if nsamp else math.nan,
        "samples_per_slot": nsamp / mlen,
        "per_sensor_samples": tuple(counts),
        "batch_means": tuple(o / c for o, c in zip(b_obs, b_cnt) if c),
    }


FLEET = [ChainParams(p=0.6, m=5), ChainParams(p=0.8, m=7)]


def _compare(result, twin):
    assert result.j_realized == twin["j_realized"]
    assert result.j_expected == twin["j_expected"]
    assert result.samples_per_slot == twin["samples_per_slot"]
    assert result.per_sensor_samples == twin["per_sensor_samples"]
    assert result.batch_means == pytest.approx(twin["batch_means"], abs=1e-12)


def test_twin_replays_greedy():
    _compare(run_greedy(FLEET, 2000, seed=5), _twin(FLEET, 2000, 5, "greedy"))


def test_twin_replays_random():
    _compare(run_random(FLEET, 2000, seed=6), _twin(FLEET, 2000, 6, "random"))


def test_twin_replays_relaxed():
    eta = 3.1
    _compare(run_relaxed(FLEET, eta, 2000, seed=7), _twin(FLEET, 2000, 7, "relaxed", eta=eta))


def test_runs_are_reproducible():
    a = run_greedy(FLEET, 3000, seed=42)
    b = run_greedy(FLEET, 3000, seed=42)
    assert a == b
    c = run_greedy(FLEET, 3000, seed=43)
    assert a.j_realized != c.j_realized


def test_deterministic_channel_always_fresh():
    fleet = [ChainParams(p=0.0, m=4)] * 3
    for result in (run_greedy(fleet, 1000, 1), run_random(fleet, 1000, 1)):
        assert result.j_realized == 1.0
        assert result.samples_per_slot == 1.0
    wide = run_relaxed(fleet, 2.0, 1000, 1)
    assert wide.j_realized == 1.0
    assert wide.samples_per_slot == 3.0


def test_single_sensor_greedy_is_stationary():
    sensor = ChainParams(p=0.8, m=10)
    result = run_greedy([sensor], 200_000, seed=9)
    assert result.samples_per_slot == 1.0
    assert result.j_realized == pytest.approx(steady_expected_aoi(sensor), rel=0.01)
    assert result.j_realized == pytest.approx(result.j_expected, rel=0.005)


def test_relaxed_cutoff_extremes():
    sensor = ChainParams(p=0.7, m=8)
    top = sensor.q + sensor.m * sensor.p
    every = run_relaxed([sensor] * 2, top + 1.0, 5000, seed=3)
    assert every.samples_per_slot == 2.0
    nothing = run_relaxed([sensor] * 2, 1.0, 5000, seed=3)
    assert nothing.samples_per_slot == 0.0
    assert math.isnan(nothing.j_realized)
    assert math.isnan(nothing.j_expected)
    assert nothing.batch_means == ()
    assert nothing.per_sensor_samples == (0, 0)


def test_relaxed_matches_rate_analysis():
    sensor = ChainParams(p=0.7, m=12)
    hbar = steady_expected_aoi(sensor)
    top = sensor.q + sensor.m * sensor.p
    eta = hbar + 0.5 * (top - hbar)
    rates = sensor_rates(sensor, eta)
    result = run_relaxed([sensor], eta, 300_000, seed=17)
    assert result.samples_per_slot == pytest.approx(rates.d_bar, rel=0.02)
    age_rate = result.j_realized * result.samples_per_slot
    assert age_rate == pytest.approx(rates.r_bar, rel=0.02)
    assert result.j_realized == pytest.approx(result.j_expected, rel=0.01)


def test_random_matches_closed_form():
    fleet = [ChainParams(p=0.4, m=30), ChainParams(p=0.7, m=30), ChainParams(p=0.9, m=30)]
    result = run_random(fleet, 200_000, seed=23)
    assert result.j_realized == pytest.approx(random_policy_value(fleet), rel=0.015)
    assert sum(result.per_sensor_samples) == round(result.samples_per_slot * (200_000 - 300))


def test_batch_means_average_back():
    result = run_greedy(FLEET, 70 + 20 * 500, seed=31)
    assert len(result.batch_means) == BATCHES
    assert float(np.mean(result.batch_means)) == pytest.approx(result.j_realized, abs=1e-9)


def test_observed_age_follows_branch_belief():
    # chi-square on the observation law, conditioned on the branch the
    # scheduler held when it polled; the twin exposes the event log and
    # the replay tests above pin it to the engine
    sensor = ChainParams(p=0.6, m=5)
    hbar = steady_expected_aoi(sensor)
    eta = hbar + 0.35 * (sensor.q + sensor.m * sensor.p - hbar)
    log = []
    _twin([sensor], 120_000, 71, "relaxed", eta=eta, log=log)
    assert len(log) >= 10_000
    by_class = {}
    for k, i, obs in log:
        by_class.setdefault((k, i), []).append(obs)
    tested = 0
    for (k, i), events in by_class.items():
        if len(events) < 5000:
            continue
        want = branch_belief(sensor, BranchState(k=k, i=i, m=sensor.m)) * len(events)
        got = np.bincount(np.array(events) - 1, minlength=sensor.m).astype(float)
        # ages the posterior rules out must never be observed
        zero = want == 0.0
        assert np.all(got[zero] == 0.0), (k, i)
        got, want = got[~zero], want[~zero]
        small = want < 5.0
        if small.any():
            # fold thin cells into the heaviest one to keep the
            # chi-square approximation honest
            got2, want2 = got[~small].copy(), want[~small].copy()
            heavy = int(np.argmax(want2))
            got2[heavy] += got[small].sum()
            want2[heavy] += want[small].sum()
            got, want = got2, want2
        if len(want) < 2:
            continue
        result = stats.chisquare(got, want)
        assert result.pvalue > 0.01, (k, i, result.pvalue)
        tested += 1
    assert tested >= 1


def test_world_steady_snapshot():
    rngs = [np.random.default_rng(i) for i in range(2)]
    world = SensorWorld.steady(FLEET, rngs)
    for age, sensor in zip(world.true_aoi, FLEET):
        assert 1 <= age <= sensor.m
    for belief, sensor in zip(world.beliefs, FLEET):
        assert (belief.k, belief.i) == (sensor.m, sensor.m - 1)


def test_argument_errors():
    with pytest.raises(ValueError):
        run_greedy([], 1000, seed=0)
    with pytest.raises(ValueError):
        run_greedy(FLEET, 70, seed=0)
