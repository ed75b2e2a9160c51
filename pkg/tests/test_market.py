import numpy as np
import pytest
from randstop.exceptions import ConfigurationError
from randstop.market import MarketModel, make_time_grid, simulate_paths
from randstop.parallel import BLOCK_SIZE


@pytest.fixture
def model():
    return MarketModel(
        dim=2, spot=90.0, strike=100.0, rate=0.05, dividend=0.1, vol=0.2, maturity=3.0, num_dates=9
    )


def test_time_grid():
    grid = make_time_grid(3.0, 9)
    assert len(grid) == 10
    assert grid[0] == 0.0 and grid[-1] == 3.0
    assert grid[3] == pytest.approx(1.0)


def test_spot_broadcast(model):
    assert model.spot == (90.0, 90.0)
    assert model.dates == make_time_grid(3.0, 9)


@pytest.mark.parametrize(
    "field,value",
    [
        ("vol", 0.0),
        ("maturity", -1.0),
        ("num_dates", 0),
        ("strike", -1.0),
        ("spot", (90.0,)),
        ("rate", "abc"),
        ("dividend", float("nan")),
        ("spot", "x"),
        ("vol", None),
        ("strike", True),
        ("num_dates", 2.5),
        ("maturity", float("inf")),
    ],
)
def test_invalid_parameters(model, field, value):
    params = model.to_dict()
    params.pop("dates")
    params[field] = value
    with pytest.raises(ConfigurationError) as e:
        MarketModel.from_dict(params)
    assert e.value.field == field


def test_zero_vol_drift():
    model = MarketModel(
        dim=2, spot=(110.0, 100.0), strike=100.0, rate=0.05, dividend=0.05, vol=0.0,
        maturity=1.0, num_dates=4, allow_zero_vol=True,
    )
    paths = simulate_paths(model, 8, seed=3)
    np.testing.assert_array_equal(paths.states, 0.0)
    expected = 10.0 * np.exp(-0.05 * np.asarray(model.dates))
    np.testing.assert_allclose(paths.payoffs, np.broadcast_to(expected, (8, 5)), rtol=1e-14)


def test_shapes_and_payoffs(model):
    paths = simulate_paths(model, 100, seed=7)
    assert paths.states.shape == (100, 10, 2)
    assert paths.payoffs.shape == (100, 10)
    assert np.all(paths.payoffs >= 0)
    np.testing.assert_array_equal(paths.states[:, 0], 0.0)
    with pytest.raises(ValueError):
        paths.states[0, 0, 0] = 1.0


def test_deterministic_across_threads(model):
    num_paths = BLOCK_SIZE + 500
    single = simulate_paths(model, num_paths, seed=11, threads=1)
    multi = simulate_paths(model, num_paths, seed=11, threads=4)
    np.testing.assert_array_equal(single.states, multi.states)
    np.testing.assert_array_equal(single.payoffs, multi.payoffs)


def test_prefix_property(model):
    small = simulate_paths(model, 100, seed=5)
    large = simulate_paths(model, BLOCK_SIZE + 100, seed=5)
    np.testing.assert_array_equal(small.states, large.states[:100])


def test_seeds_differ(model):
    a = simulate_paths(model, 50, seed=1)
    b = simulate_paths(model, 50, seed=2)
    assert not np.array_equal(a.states, b.states)


def test_log_price_moments(model):
    paths = simulate_paths(model, 20000, seed=13)
    terminal = paths.states[:, -1, :]
    std = model.vol * np.sqrt(model.maturity)
    np.testing.assert_allclose(
        terminal.mean(axis=0), model.drift * model.maturity, atol=4 * std / np.sqrt(20000)
    )
    np.testing.assert_allclose(terminal.std(axis=0), std, rtol=0.03)


def test_zero_paths(model):
    with pytest.raises(ValueError):
        simulate_paths(model, 0, seed=1)


def test_fingerprint_tracks_parameters(model):
    params = model.to_dict()
    params["strike"] = 110.0
    assert MarketModel.from_dict(params).fingerprint() != model.fingerprint()
    assert MarketModel.from_dict(model.to_dict()).fingerprint() == model.fingerprint()


def test_numeric_strings_are_rejected():
    with pytest.raises(ConfigurationError) as e:
        MarketModel(
            dim=1, spot=100.0, strike=100.0, rate="0.05", dividend=0.0, vol=0.2, maturity=1.0,
            num_dates=2,
        )
    assert e.value.field == "rate"


def test_increment_moments(model):
    num_paths = 100_000
    paths = simulate_paths(model, num_paths, seed=19)
    increments = np.diff(paths.states, axis=1)
    dt = np.diff(model.dates)
    for j in range(model.num_dates):
        variance = model.vol**2 * dt[j]
        # variance of the sample variance of a gaussian is 2 sigma^4 / M
        np.testing.assert_allclose(
            increments[:, j].mean(axis=0),
            model.drift * dt[j],
            atol=4 * np.sqrt(variance / num_paths),
        )
        np.testing.assert_allclose(
            increments[:, j].var(axis=0), variance, atol=4 * variance * np.sqrt(2.0 / num_paths)
        )
        rho = np.corrcoef(increments[:, j, 0], increments[:, j, 1])[0, 1]
        assert abs(rho) < 4 / np.sqrt(num_paths)
