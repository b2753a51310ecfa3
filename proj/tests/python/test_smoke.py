"""Smoke tests for the python bindings."""

import math

import pytest

import finflowrl as ff


def test_fbm_shape_and_determinism():
    x = ff.simulate_fbm(hurst=0.5, n=128, dt=1.0, seed=7)
    y = ff.simulate_fbm(hurst=0.5, n=128, dt=1.0, seed=7)
    z = ff.simulate_fbm(hurst=0.5, n=128, dt=1.0, seed=8)
    assert len(x) == 128
    assert x == y
    assert x != z


def test_fbm_h05_variance():
    xs = []
    for seed in range(200):
        xs.extend(ff.simulate_fbm(0.5, 64, 1.0, 1000 + seed))
    var = sum(v * v for v in xs) / len(xs)
    assert abs(var - 1.0) < 0.05


def test_fgn_autocovariance():
    assert ff.fgn_autocovariance(0.5, 1) == pytest.approx(0.0)
    assert ff.fgn_autocovariance(0.7, 1) > 0.0


def test_fbm_rejects_bad_hurst():
    with pytest.raises(Exception):
        ff.simulate_fbm(1.5, 16, 1.0, 1)


def test_hawkes_poisson_counts():
    p = ff.HawkesParams()
    p.mu_a = p.mu_b = 10.0
    p.alpha_aa = p.alpha_ab = p.alpha_bb = p.alpha_ba = 0.0
    buys, sells = ff.hawkes_counts(p, horizon=200.0, dt=1.0, seed=3)
    assert abs(buys - 2000) < 3 * math.sqrt(2000)
    assert abs(sells - 2000) < 3 * math.sqrt(2000)


def test_hawkes_stationary_rates():
    p = ff.HawkesParams()
    p.mu_a = p.mu_b = 1.0
    p.alpha_aa = p.alpha_bb = 0.5
    p.alpha_ab = p.alpha_ba = 0.0
    p.beta = 1.0
    ra, rb = p.stationary_rates()
    assert ra == pytest.approx(2.0)
    assert rb == pytest.approx(2.0)
    assert p.branching_spectral_radius() == pytest.approx(0.5)


def test_run_episode_deterministic():
    market = ff.MarketParams()
    market.horizon_steps = 50
    a = ff.run_episode("glft", market=market, seed=11)
    b = ff.run_episode("glft", market=market, seed=11)
    assert a.objective == b.objective
    assert a.pnl_series == b.pnl_series
    assert len(a.pnl_series) == 51
    assert a.bid_fills >= 0 and a.ask_fills >= 0


def test_run_episode_quiet_market_is_flat():
    market = ff.MarketParams()
    market.sigma = 0.0
    market.jump_intensity = 0.0
    market.hawkes.mu_a = market.hawkes.mu_b = 0.0
    market.hawkes.alpha_aa = market.hawkes.alpha_ab = 0.0
    market.hawkes.alpha_bb = market.hawkes.alpha_ba = 0.0
    r = ff.run_episode("as", market=market, seed=1)
    assert r.objective == pytest.approx(0.0)
    assert all(w == pytest.approx(0.0) for w in r.pnl_series)


def test_expert_quotes():
    bid0, ask0 = ff.glft_quote(0)
    assert bid0 == pytest.approx(ask0)
    bid5, ask5 = ff.glft_quote(5)
    assert ask5 < ask0
    assert bid5 > bid0

    abid, aask = ff.as_quote(0, step_index=100)
    p = ff.ExpertParams()
    m = ff.MarketParams()
    expected = (1.0 / p.gamma_risk) * math.log(1.0 + p.gamma_risk / m.fill_decay)
    assert abid == pytest.approx(expected)
    assert aask == pytest.approx(expected)


def test_metrics():
    assert ff.sharpe_ratio([2.0, 0.0, 2.0, 0.0]) == pytest.approx(
        math.sqrt(3.0) / 2.0
    )
    assert ff.max_drawdown([100.0, 120.0, 60.0, 90.0]) == pytest.approx(50.0)
    assert ff.max_drawdown([100.0, 50.0, 100.0, 25.0]) == pytest.approx(75.0)
    p = ff.paired_one_sided_pvalue([1.0] * 50, [0.0] * 50)
    assert p < 1e-6


def test_default_config_parses():
    import json

    cfg = json.loads(ff.default_config_json())
    assert cfg["format_version"] == 1
    assert cfg["chunk"] == {"t_obs": 2, "t_pred": 8, "t_exec": 4}
    assert cfg["grid"]["volatility"] == [0.05, 0.1, 0.3]
    assert [r["name"] for r in cfg["regimes"]] == ["HH", "HL", "LH", "LL"]
