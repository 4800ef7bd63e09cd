import logging
import math
from dataclasses import replace

import numpy as np
import pytest

from exceptions import ModelError
from levy_core import LevyTriplet
from measures import Merton, Zero
from simulate import (
    SamplePath,
    TimeNet,
    adapted_time_net,
    check_cutoff,
    corrected_approx,
    dump_path,
    fine_grid,
    hedge_run,
    hedge_runs_frame,
    integral_oracle,
    jump_threshold_times,
    load_path,
    mesh_size,
    oracle_path,
    riemann_approx,
    sample_path,
    sample_terminal,
)
from strategies.BuyHold import BuyHold

LOG2 = math.log(2.0)


def single_jump_path():
    """S = 1 on [0, 1/2), jumps to 2 at 1/2 and stays there"""
    return SamplePath(
        grid=np.array([0.0, 0.5, 1.0]),
        log_x=np.array([0.0, LOG2, LOG2]),
        jump_times=np.array([0.5]),
        jump_sizes=np.array([LOG2]),
        jump_pre_log=np.array([0.0]),
        seed=0,
        path_index=0,
        small_jump_sigma=0.0,
        delta=0.0,
        drift=0.0,
        diffusion=0.0,
    )


def calendar(t, s):
    return np.asarray(t, dtype=float) + 0.0 * np.asarray(s, dtype=float)


def test_uniform_and_adapted_nets():
    np.testing.assert_allclose(adapted_time_net(4, 1.0, 1.0).knots, [0.0, 0.25, 0.5, 0.75, 1.0])
    np.testing.assert_allclose(adapted_time_net(2, 0.5, 1.0).knots, [0.0, 0.75, 1.0])
    assert mesh_size(adapted_time_net(4, 1.0, 1.0), 1.0) == pytest.approx(0.25)
    assert mesh_size(adapted_time_net(2, 0.5, 1.0), 0.5) == pytest.approx(0.75)


def test_net_arguments_are_checked():
    with pytest.raises(ModelError):
        adapted_time_net(0, 1.0, 1.0)
    with pytest.raises(ModelError):
        adapted_time_net(4, 0.0, 1.0)
    with pytest.raises(ModelError):
        TimeNet(np.array([0.0, 0.5, 0.5, 1.0]))


@pytest.mark.parametrize("maturity", [1.0, 2.0])
def test_mesh_bounds_hold_for_every_net(maturity):
    for theta in np.round(np.arange(1, 11) / 10.0, 1):
        for n in range(1, 1001):
            mesh = mesh_size(adapted_time_net(n, theta, maturity), theta)
            lower = maturity ** theta / n
            upper = maturity ** theta / (theta * n)
            assert lower * (1.0 - 1e-12) <= mesh <= upper * (1.0 + 1e-12)


def test_fine_grid_contains_extra_times():
    grid = fine_grid(1.0, 64, extra_times=[0.3, 0.99999])
    assert grid[0] == 0.0 and grid[-1] == 1.0
    assert 0.3 in grid and 0.99999 in grid
    assert np.all(np.diff(grid) > 0)


def test_deterministic_drift_path():
    path = sample_path(LevyTriplet(1.0, 0.0, Zero()), 2.0, m=64)
    assert path.log_x[-1] == pytest.approx(2.0, abs=1e-14)
    assert len(path.jump_times) == 0


def test_brownian_terminal_moments():
    rng = np.random.default_rng(5)
    x = sample_terminal(LevyTriplet(0.1, 0.2, Zero()), 1.0, 100_000, rng)
    se = 0.2 / math.sqrt(len(x))
    assert abs(x.mean() - 0.1) <= 4.0 * se
    assert x.var() == pytest.approx(0.04, rel=0.02)


def test_merton_jump_counts():
    triplet = LevyTriplet(0.0, 0.2, Merton(intensity=0.3, mu=-0.1, delta=0.15))
    counts = np.array([len(sample_path(triplet, 1.0, m=16, seed=2, path_index=i).jump_times) for i in range(2000)])
    se = math.sqrt(0.3 / len(counts))
    assert abs(counts.mean() - 0.3) <= 4.0 * se


def test_paths_are_reproducible():
    triplet = LevyTriplet(0.0, 0.2, Merton(intensity=0.3, mu=-0.1, delta=0.15))
    a = sample_path(triplet, 1.0, m=128, seed=9, path_index=4)
    b = sample_path(triplet, 1.0, m=128, seed=9, path_index=4)
    c = sample_path(triplet, 1.0, m=128, seed=9, path_index=5)
    np.testing.assert_array_equal(a.log_x, b.log_x)
    assert not np.array_equal(a.log_x, c.log_x)


def test_jump_threshold_times_of_a_single_jump():
    path = single_jump_path()
    times = jump_threshold_times(path, 0.5, 0.0)
    np.testing.assert_array_equal(times.rho, [0.5, 1.0])
    assert times.count == 2
    assert jump_threshold_times(path, 2.0, 0.0).count == 1
    with pytest.raises(ModelError):
        jump_threshold_times(path, 0.5, 0.5)


def test_correction_at_a_single_jump():
    path = single_jump_path()
    net = adapted_time_net(1, 1.0, 1.0)
    assert riemann_approx(path, calendar, net) == 0.0
    result = corrected_approx(path, calendar, net, 0.5, 0.0)
    assert result.correction_count == 1
    assert result.a_corr == pytest.approx(0.5, abs=1e-15)


def test_constant_strategy_telescopes():
    triplet = LevyTriplet(0.0, 0.2, Merton(intensity=0.3, mu=-0.1, delta=0.15))
    hold = BuyHold(shares=1.5)
    nets = [adapted_time_net(n, 1.0, 1.0) for n in (4, 8)]
    knots = np.unique(np.concatenate([net.knots for net in nets]))
    for index in range(50):
        path = sample_path(triplet, 1.0, m=256, seed=1, path_index=index, extra_times=knots)
        move = 1.5 * (path.prices()[-1] - path.prices()[0])
        oracle = oracle_path(path, hold, 8, keep_times=knots)
        assert oracle.value == pytest.approx(move, abs=1e-12)
        assert integral_oracle(path, hold, 8, keep_times=knots) == pytest.approx(move, abs=1e-12)
        for net in nets:
            run = hedge_run(path, hold, net, 0.1, 0.0, oracle)
            assert run.a_rm_terminal == pytest.approx(move, abs=1e-12)
            assert abs(run.e_rm) <= 1e-12 and abs(run.e_corr) <= 1e-12


def test_huge_threshold_never_corrects():
    triplet = LevyTriplet(0.0, 0.2, Merton(intensity=3.0, mu=-0.1, delta=0.15))
    net = adapted_time_net(8, 1.0, 1.0)
    for index in range(20):
        path = sample_path(triplet, 1.0, m=256, seed=3, path_index=index, extra_times=net.knots)
        result = corrected_approx(path, calendar, net, 1e10, 0.0)
        assert result.correction_count == 0
        assert result.a_corr == result.a_rm


def test_correction_count_grows_as_the_threshold_falls():
    triplet = LevyTriplet(0.0, 0.2, Merton(intensity=3.0, mu=-0.1, delta=0.15))
    net = adapted_time_net(8, 1.0, 1.0)
    for index in range(20):
        path = sample_path(triplet, 1.0, m=256, seed=3, path_index=index, extra_times=net.knots)
        counts = [corrected_approx(path, calendar, net, eps, 0.0).correction_count for eps in (0.5, 0.25, 0.125)]
        assert counts == sorted(counts)


def test_path_dump_round_trip(tmp_path):
    triplet = LevyTriplet(0.0, 0.2, Merton(intensity=0.3, mu=-0.1, delta=0.15))
    path = sample_path(triplet, 1.0, m=128, seed=4, path_index=2)
    filename = str(tmp_path / "path.bin")
    dump_path(path, filename)
    loaded = load_path(filename)
    np.testing.assert_array_equal(loaded.grid, path.grid)
    np.testing.assert_array_equal(loaded.log_x, path.log_x)
    np.testing.assert_array_equal(loaded.jump_sizes, path.jump_sizes)
    assert (loaded.seed, loaded.path_index) == (4, 2)


def test_hedge_run_columns():
    path = sample_path(LevyTriplet(0.0, 0.2, Zero()), 1.0, m=64, extra_times=[0.5])
    net = adapted_time_net(2, 1.0, 1.0)
    hold = BuyHold()
    run = hedge_run(path, hold, net, 0.1, 0.0, oracle_path(path, hold, 2, keep_times=net.knots))
    frame = hedge_runs_frame([run])
    assert list(frame.columns[:8]) == ["seed", "n", "theta", "epsilon", "kappa", "e_rm", "e_corr", "n_corrections"]


@pytest.mark.parametrize("theta", [1.0, 0.5])
def test_nested_nets_share_knots(theta):
    coarse = adapted_time_net(10, theta, 0.3)
    fine = adapted_time_net(20, theta, 0.3)
    idx = fine.index_of(coarse.knots)
    np.testing.assert_array_equal(fine.knots[idx], coarse.knots)
    with pytest.raises(ModelError):
        adapted_time_net(15, theta, 0.3).index_of(coarse.knots[:-1])


def test_cutoff_reaching_the_smallest_threshold_warns(caplog):
    path = replace(single_jump_path(), delta=0.5)
    with caplog.at_level(logging.WARNING, logger="simulate"):
        assert check_cutoff(path, 1.0, 0.0)
        assert not caplog.records
        assert not check_cutoff(path, 0.1, 0.0)
    assert "small-jump cutoff" in caplog.text
    assert check_cutoff(single_jump_path(), 0.1, 0.0)
