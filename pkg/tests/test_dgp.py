import numpy as np
import pytest

from causalscore import RngStream
from causalscore.dgp import (
    BetaLink, GenericLatentConfig, HeterogeneousDelta, NudgeConfig, PiecewiseLinear,
    SelfSelectionConfig, SurrogateConfig, config_from_dict, config_to_dict, nudge_cas,
    nudge_cate, simulate, simulate_generic_latent, simulate_nudge, simulate_self_selection,
    simulate_surrogate, surrogate_correlation,
)
from causalscore.errors import InvalidConfig
from causalscore.interpret import check_ee, check_eo, check_synchrony, norm_cdf


def test_nudge_cas_values():
    assert nudge_cas(0.0) == 0.5
    assert nudge_cas(np.log(0.28 / 0.72)) == pytest.approx(0.28, abs=1e-12)
    assert nudge_cas(-3.0) == pytest.approx(0.047425873177566781, rel=1e-12)


def test_nudge_cas_matches_simulated_control_rate():
    g = np.random.default_rng(11)
    u = g.logistic(size=10**6)
    assert np.mean(-3.0 + u > 0) == pytest.approx(nudge_cas(-3.0), abs=0.001)


def test_nudge_cate_values():
    assert nudge_cate(-60.0, 0.5) == pytest.approx(0.0, abs=1e-20)
    assert nudge_cate(-0.25, 0.5) == pytest.approx(0.12435300177159621, rel=1e-12)
    mu = np.log(0.28 / 0.72)
    assert nudge_cate(mu, 0.5) == pytest.approx(0.1106783721851192, rel=1e-12)
    grid = np.arange(-5, 5, 1e-4)
    assert grid[np.argmax(nudge_cate(grid, 0.5))] == pytest.approx(-0.25, abs=1e-9)


def test_nudge_cas_probit_noise():
    assert nudge_cas(1.0, noise="probit") == pytest.approx(norm_cdf(1.0))


def test_simulate_nudge_control_rate():
    data, oracle = simulate_nudge(NudgeConfig(), 10**6, RngStream(1))
    control = data.treatment == 0
    assert abs(data.outcome[control].mean() - oracle.cas.mean()) <= 0.003
    treated = ~control
    assert abs(data.outcome[treated].mean() - (oracle.cas + oracle.cate).mean()) <= 0.003


def test_simulate_nudge_null_effect():
    _, oracle = simulate_nudge(NudgeConfig(delta=0.0), 1000, RngStream(2))
    assert np.all(oracle.cate == 0.0)


def test_simulate_nudge_heterogeneous_correlation_order():
    def corr(rho, eta):
        cfg = NudgeConfig(heterogeneous=HeterogeneousDelta(eta=eta, rho=rho))
        _, o = simulate_nudge(cfg, 10**5, RngStream(3))
        return np.corrcoef(o.cas, o.cate)[0, 1]
    assert corr(0.9, 0.1) > corr(0.0, 1.0)


def test_nudge_mu_upper_truncation_gives_synchrony():
    cfg = NudgeConfig(mu_upper=-0.25)
    _, o = simulate_nudge(cfg, 1500, RngStream(4))
    assert o.latent_mean.max() < -0.25
    assert check_synchrony(o.cate, o.cas).fraction_positive == 1.0


def test_simulate_is_deterministic():
    a, _ = simulate_nudge(NudgeConfig(), 500, RngStream(5))
    b, _ = simulate_nudge(NudgeConfig(), 500, RngStream(5))
    assert np.array_equal(a.outcome, b.outcome) and np.array_equal(a.treatment, b.treatment)


def test_surrogate_single_mediator():
    _, o = simulate_surrogate(SurrogateConfig(k=1), 5000, RngStream(6))
    assert np.corrcoef(o.cas, o.cate)[0, 1] == pytest.approx(1.0, abs=1e-12)


def test_surrogate_collapsed_mediators():
    _, o = simulate_surrogate(SurrogateConfig(k=2, rho_L=0.999, rho_gamma=-0.5), 10**5, RngStream(7))
    assert np.corrcoef(o.cas, o.cate)[0, 1] > 0.99


def test_surrogate_correlation_closed_form_matches_units():
    cfg = SurrogateConfig(k=6, rho_L=0.3, rho_gamma=0.2)
    _, o = simulate_surrogate(cfg, 2 * 10**5, RngStream(8))
    exact = surrogate_correlation(o.extras["gamma"], o.extras["gamma_tilde"], 0.3)
    assert np.corrcoef(o.cas, o.cate)[0, 1] == pytest.approx(exact, abs=0.01)


def test_surrogate_psd_bound():
    with pytest.raises(InvalidConfig):
        SurrogateConfig(k=6, rho_L=-0.25).validate()
    SurrogateConfig(k=6, rho_L=-0.2).validate()


def test_self_selection_unconfounded_matches_beta():
    cfg = SelfSelectionConfig(zeta=(0.0, 0.0), beta_fn=BetaLink(b0=1.0, b1=2.0))
    data, o = simulate_self_selection(cfg, 4 * 10**5, RngStream(9))
    x = data.features[:, 0]
    for lo, hi in ((-1, -0.9), (0, 0.1), (0.9, 1)):
        m = (x >= lo) & (x < hi)
        t, y = data.treatment[m], data.outcome[m]
        diff = y[t == 1].mean() - y[t == 0].mean()
        assert diff == pytest.approx(o.cate[m].mean(), abs=0.05)


def test_self_selection_propensity_is_probit():
    data, o = simulate_self_selection(SelfSelectionConfig(), 2 * 10**5, RngStream(10))
    psi = o.latent_mean
    m = (psi > 0.4) & (psi < 0.5)
    assert data.treatment[m].mean() == pytest.approx(norm_cdf(0.45), abs=0.01)
    assert np.allclose(o.extras["propensity"], norm_cdf(psi))


def test_self_selection_positive_increasing_baseline_bias():
    cfg = SelfSelectionConfig(alpha_y=1.0, psi=(1.5, 1.0))  # psi in [0.5, 2.5]
    data, o = simulate_self_selection(cfg, 4 * 10**5, RngStream(12))
    assert np.all(o.extras["baseline_bias"] > 0)
    x = data.features[:, 0]
    zeta = x  # untreated mean given x
    gaps = []
    for lo, hi in ((-1, -0.6), (0.6, 1)):
        m = (x >= lo) & (x < hi)
        t = data.treatment[m]
        y0 = data.outcome[m] - np.where(t == 1, o.cate[m], 0.0) - zeta[m]
        # residual untreated outcome, treated minus control arm
        gaps.append(y0[t == 1].mean() - y0[t == 0].mean())
    assert 0 < gaps[0] < gaps[1]


def test_generic_latent_identity_ee_eo():
    cfg = GenericLatentConfig()
    _, o = simulate_generic_latent(cfg, 500, RngStream(13))
    assert check_ee(o.cas, o.cate).valid and check_eo(o.cas, o.cate).valid


def test_generic_latent_opposite_directions():
    cfg = GenericLatentConfig(h=((0.0, 1.0), (1.0, 0.0)))
    _, o = simulate_generic_latent(cfg, 300, RngStream(14))
    assert not check_eo(o.cas, o.cate).valid
    assert not check_synchrony(o.cate, o.cas).synchrony


def test_generic_latent_increasing_pair():
    cfg = GenericLatentConfig.from_functions(np.exp, lambda m: m ** 3, -1.0, 1.0)
    _, o = simulate_generic_latent(cfg, 1000, RngStream(15))
    assert check_eo(o.cas, o.cate).valid


def test_piecewise_linear():
    f = PiecewiseLinear([0.0, 1.0, 2.0], [0.0, 2.0, 3.0])
    assert f(0.5) == pytest.approx(1.0)
    assert f.direction == "increasing"
    assert f.derivative(1.5) == pytest.approx(1.0)
    with pytest.raises(InvalidConfig):
        PiecewiseLinear([0.0, 0.0], [1.0, 2.0])


@pytest.mark.parametrize("cfg", [
    NudgeConfig(heterogeneous=HeterogeneousDelta(eta=0.1, rho=0.9), mu_upper=-0.25),
    SurrogateConfig(k=6, rho_L=0.1, rho_gamma=-0.3),
    SelfSelectionConfig(alpha_y=1.0, alpha_c=-0.5, beta_fn=BetaLink(
        kind="table", table_psi=(0.0, 1.0), table_beta=(1.0, 3.0))),
    GenericLatentConfig(mu_distribution="normal", mu_a=0.0, mu_b=2.0),
])
def test_config_round_trip(cfg):
    import json
    d = json.loads(json.dumps(config_to_dict(cfg)))
    assert config_from_dict(d) == cfg


def test_config_errors():
    with pytest.raises(InvalidConfig):
        config_from_dict({"family": "bogus"})
    with pytest.raises(InvalidConfig):
        config_from_dict({"family": "nudge", "colour": 1})
    with pytest.raises(InvalidConfig):
        config_from_dict({"family": "nudge", "noise": "cauchy"})


def test_simulate_dispatch():
    data, oracle = simulate(SurrogateConfig(k=3), 50, RngStream(16))
    assert data.n == 50 and data.surrogate_outcome is not None and oracle.cate.shape == (50,)
