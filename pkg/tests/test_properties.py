import json

import numpy as np
from hypothesis import assume, given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from causalscore import RngStream, make_dataset
from causalscore.core import equicorrelation, pivoted_cholesky
from causalscore.dataio import _decode, _encode, split_indices
from causalscore.errors import NotPositiveSemiDefinite
from causalscore.interpret import (check_ec, check_eo, trunc_norm_mean_above,
                                   trunc_norm_var_above)
from causalscore.metrics import RankNoiseModel, expected_tau, kendall_tau, qini_curve
from causalscore.pairs import pair_counts, pair_counts_brute

small_ints = arrays(np.int64, st.integers(2, 60), elements=st.integers(-5, 5))
finite = st.floats(-1e6, 1e6, allow_nan=False)


def test_score_tie_passes_eo_but_can_fail_ec():
    theta, beta = np.array([1.0, 1.0]), np.array([19.0, 20.0])
    assert check_eo(theta, beta).valid
    assert not check_ec(theta, beta, 19.5).valid


@given(small_ints)
def test_kendall_fast_equals_brute(a):
    assert kendall_tau(a) == kendall_tau(a, method="brute")


@given(st.integers(2, 80).flatmap(lambda n: st.tuples(
    arrays(np.int64, n, elements=st.integers(0, 6)), arrays(np.int64, n, elements=st.integers(0, 6)))))
def test_pair_counts_fast_equals_brute(xy):
    x, y = xy
    assert pair_counts(x, y) == pair_counts_brute(x, y)


@given(arrays(np.float64, st.integers(2, 40), elements=finite, unique=True),
       st.sampled_from([np.tanh, np.cbrt, lambda v: 3 * v + 1, np.arcsinh]))
def test_eo_implies_ec(beta, transform):
    theta = transform(beta)
    # the transform must stay strict after rounding; a tie in theta alone is not discordant
    assume(np.unique(theta).size == beta.size)
    assert check_eo(theta, beta).valid
    for tau in np.linspace(beta.min() - 1, beta.max() + 1, 25):
        assert check_ec(theta, beta, tau).valid


@given(st.floats(-30, 60))
def test_trunc_moment_bounds(a):
    m = trunc_norm_mean_above(a)
    v = trunc_norm_var_above(a)
    assert m > a and m > 0
    assert 0 < v <= 1


@given(st.floats(0.01, 5), st.floats(-5, 5), st.floats(0.01, 3))
def test_expected_tau_range_and_monotone(b, a, s):
    lo = expected_tau(RankNoiseModel(np.array([b]), np.array([a]), s))
    hi = expected_tau(RankNoiseModel(np.array([b]), np.array([a + 0.5]), s))
    assert -1 <= lo <= hi <= 1


@settings(max_examples=40)
@given(st.integers(8, 60), st.integers(0, 10**6))
def test_qini_invariant_under_monotone_score_map(n, seed):
    g = np.random.default_rng(seed)
    t = np.r_[0, 1, g.integers(0, 2, n - 2)]
    y = g.integers(0, 2, n).astype(float)
    s = g.normal(size=n)
    data = make_dataset(np.zeros(n), t, y)
    a = qini_curve(data, s, 10)
    b = qini_curve(data, np.exp(s), 10)
    assert np.array_equal(a.values, b.values)


@given(st.integers(2, 8), st.floats(-1, 1))
def test_equicorrelation_psd_iff_above_bound(k, rho):
    bound = -1.0 / (k - 1)
    try:
        pivoted_cholesky(equicorrelation(k, rho))
        ok = True
    except NotPositiveSemiDefinite:
        ok = False
    if rho >= bound + 1e-9:
        assert ok
    elif rho < bound - 1e-6:
        assert not ok


@given(st.integers(2, 500).flatmap(lambda n: st.tuples(st.just(n), st.integers(1, n - 1))),
       st.integers(0, 2**32))
def test_split_is_partition(nm, seed):
    n, m = nm
    a, b = split_indices(n, m, RngStream(seed))
    assert a.shape[0] == m and np.array_equal(np.sort(np.r_[a, b]), np.arange(n))


@given(st.lists(st.floats(allow_nan=True, allow_infinity=True), max_size=20))
def test_json_encoding_round_trip(values):
    back = _decode(json.loads(json.dumps(_encode({"v": values}), allow_nan=False)))["v"]
    assert len(back) == len(values)
    for x, y in zip(values, back):
        assert (np.isnan(x) and np.isnan(y)) or x == y
