import json

import numpy as np
import pytest

from causalscore import RngStream, make_dataset
from causalscore.errors import (DegenerateTarget, DimensionMismatch, EmptyArmInStratum,
                                InvalidConfig, MissingArm, MissingSurrogate,
                                PropensityOutOfRange, SchemaVersionMismatch)
from causalscore.scoring import (BaseLearnerConfig, GradientBoostedTrees, RidgeRegression,
                                 ScoreModel, difference_in_means_cas, fit, predict,
                                 transformed_outcome)

RIDGE = BaseLearnerConfig(learner="ridge_linear")
SMALL_GBT = BaseLearnerConfig(tree_count=30, max_depth=3)


def linear_effect_data(n, seed):
    g = RngStream(seed).generator
    x = g.uniform(-1, 1, n)
    t = (g.random(n) < 0.5).astype(int)
    y = 2 * x * t + x + 0.5 * g.standard_normal(n)
    return make_dataset(x, t, y)


def test_transformed_outcome_values():
    assert transformed_outcome(0.0, 1, 0.3) == 0.0
    assert transformed_outcome(1.0, 1, 0.85) == pytest.approx(0.15 / 0.1275, rel=1e-12)
    assert transformed_outcome(1.0, 1, 0.85) == pytest.approx(1.17647, abs=1e-5)
    assert transformed_outcome(1.0, 0, 0.5) == -2.0
    with pytest.raises(PropensityOutOfRange):
        transformed_outcome(1.0, 1, 1.0)


def test_transformed_outcome_is_unbiased_for_ate():
    g = np.random.default_rng(0)
    n, p = 10**6, 0.3
    t = (g.random(n) < p).astype(int)
    y = 1.0 + 0.4 * t + g.standard_normal(n)
    assert transformed_outcome(y, t, p).mean() == pytest.approx(0.4, abs=0.02)


@pytest.mark.parametrize("kind", ["t_learner", "s_learner"])
def test_meta_learners_recover_linear_effect(kind):
    data = linear_effect_data(10**5, 1)
    model = fit(kind, data, RIDGE)
    grid = np.linspace(-1, 1, 41)
    assert np.max(np.abs(predict(model, grid) - 2 * grid)) <= 0.1


def test_transformed_outcome_learner_tracks_effect():
    data = linear_effect_data(10**5, 2)
    model = fit("transformed_outcome", data, RIDGE)
    grid = np.linspace(-1, 1, 21)
    assert np.max(np.abs(predict(model, grid) - 2 * grid)) <= 0.25
    assert model.propensity == pytest.approx(data.treatment.mean())


def test_fitted_propensity_option():
    data = linear_effect_data(2000, 3)
    model = fit("transformed_outcome", data, SMALL_GBT, propensity="fitted")
    assert model.propensity_source == "fitted" and "propensity" in model.learners
    with pytest.raises(InvalidConfig):
        fit("transformed_outcome", data, SMALL_GBT, propensity="guess")


def test_outcome_rate_uses_controls():
    x = np.arange(8.0)
    t = np.array([0, 0, 0, 0, 1, 1, 1, 1])
    y = np.array([0, 1, 0, 1, 5, 5, 5, 5.0])
    model = fit("outcome_rate", make_dataset(x, t, y), RIDGE)
    assert not model.flags["fallback_all_rows"]
    assert np.all(predict(model, x) < 2)


def test_outcome_rate_fallback_all_treated():
    data = make_dataset(np.arange(4.0), [1, 1, 1, 1], [0, 1, 0, 1])
    assert fit("outcome_rate", data, RIDGE).flags["fallback_all_rows"]


def test_missing_arm():
    data = make_dataset(np.arange(4.0), [1, 1, 1, 1], [0, 1, 0, 1])
    for kind in ("transformed_outcome", "t_learner", "s_learner", "difference_in_means"):
        with pytest.raises(MissingArm):
            fit(kind, data, RIDGE)


def test_degenerate_target():
    data = make_dataset(np.arange(4.0), [1, 0, 1, 0], [1, 1, 1, 1])
    with pytest.raises(DegenerateTarget):
        fit("transformed_outcome", data, RIDGE)


def test_surrogate_target():
    data = make_dataset(np.arange(4.0), [1, 0, 1, 0], [1, 0, 0, 1])
    with pytest.raises(MissingSurrogate):
        fit("outcome_rate", data, RIDGE, target="surrogate")
    data = make_dataset(np.arange(4.0), [1, 0, 1, 0], [1, 0, 0, 1], surrogate=[1, 2, 3, 4])
    assert fit("outcome_rate", data, RIDGE, target="surrogate").target == "surrogate"


def test_unknown_kind_and_learner():
    data = linear_effect_data(100, 4)
    with pytest.raises(InvalidConfig):
        fit("x_learner", data)
    with pytest.raises(InvalidConfig):
        fit("outcome_rate", data, BaseLearnerConfig(learner="forest"))


def test_dimension_mismatch():
    model = fit("outcome_rate", linear_effect_data(200, 5), RIDGE)
    with pytest.raises(DimensionMismatch):
        predict(model, np.zeros((3, 2)))


def test_depth_zero_gbt_is_constant_mean():
    g = np.random.default_rng(6)
    x = g.normal(size=(300, 2))
    y = g.normal(size=300)
    gbt = GradientBoostedTrees(tree_count=5, max_depth=0, learning_rate=1.0).fit(x, y)
    assert np.allclose(gbt.predict(x), y.mean(), atol=1e-12)


def test_gbt_loss_non_increasing_and_fits_step():
    g = np.random.default_rng(7)
    x = g.uniform(-1, 1, (2000, 3))
    y = np.where(x[:, 1] > 0.2, 1.0, 0.0) + 0.1 * g.standard_normal(2000)
    gbt = GradientBoostedTrees(tree_count=50, max_depth=2).fit(x, y)
    loss = np.array(gbt.loss_history_)
    assert np.all(np.diff(loss) <= 1e-12)
    assert loss[-1] < 0.02


def test_gbt_min_leaf_respected():
    x = np.arange(50.0)
    y = (x > 45).astype(float)
    gbt = GradientBoostedTrees(tree_count=1, max_depth=1, learning_rate=1.0, min_leaf=10).fit(x, y)
    tree = gbt.trees_[0]
    assert tree["threshold"][0] <= 40


def test_ridge_matches_normal_equations():
    g = np.random.default_rng(8)
    x = g.normal(size=(500, 4))
    y = x @ np.array([1.0, -2.0, 0.5, 0.0]) + 3 + g.normal(size=500)
    lam = 0.3
    r = RidgeRegression(l2_penalty=lam).fit(x, y)
    xc = x - x.mean(0)
    w = np.linalg.solve(xc.T @ xc / 500 + lam * np.eye(4), xc.T @ (y - y.mean()) / 500)
    assert np.allclose(r.coef_, w, atol=1e-6)
    assert r.gradient_norm_ <= 1e-8


def test_ridge_shrinkage_limit():
    g = np.random.default_rng(9)
    x = g.normal(size=(200, 2))
    y = x[:, 0] * 5 + 2 + g.normal(size=200)
    r = RidgeRegression(l2_penalty=1e8).fit(x, y)
    assert np.allclose(r.predict(x), y.mean(), atol=1e-5)


@pytest.mark.parametrize("kind,base", [("t_learner", SMALL_GBT), ("s_learner", RIDGE),
                                       ("transformed_outcome", SMALL_GBT),
                                       ("difference_in_means", RIDGE)])
def test_model_round_trip(kind, base):
    data = linear_effect_data(500, 10)
    model = fit(kind, data, base)
    again = ScoreModel.from_dict(json.loads(json.dumps(model.to_dict())))
    x = np.linspace(-1, 1, 7)
    assert np.array_equal(predict(model, x), predict(again, x))


def test_model_version_check():
    d = fit("difference_in_means", linear_effect_data(50, 11)).to_dict()
    d["format_version"] = 99
    with pytest.raises(SchemaVersionMismatch):
        ScoreModel.from_dict(d)


def test_difference_in_means_cas():
    data = make_dataset([0.0, 0.0, 0.0, 0.0], [1, 1, 0, 0], [1, 0, 0, 0])
    assert difference_in_means_cas(data) == 0.5
    same = make_dataset([0.0, 1.0, 2.0, 3.0], [1, 0, 1, 0], [1, 1, 0, 0])
    assert difference_in_means_cas(same, lambda x: x[:, 0] < 2) == 0.0
    with pytest.raises(EmptyArmInStratum):
        difference_in_means_cas(same, [True, False, True, False])


def test_fit_is_deterministic():
    data = linear_effect_data(1000, 12)
    a = predict(fit("t_learner", data, SMALL_GBT), data.features)
    b = predict(fit("t_learner", data, SMALL_GBT), data.features)
    assert np.array_equal(a, b)
