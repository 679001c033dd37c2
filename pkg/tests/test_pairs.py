import numpy as np

from causalscore.pairs import pair_counts, pair_counts_brute, sign_sum, sign_sum_brute


def test_sign_sum_small():
    assert sign_sum([3, 1, 2]) == 1
    assert sign_sum([1, 2, 3]) == -3
    assert sign_sum([2, 2, 2]) == 0


def test_sign_sum_matches_brute_with_ties():
    g = np.random.default_rng(0)
    for n in (1, 2, 65, 200, 1500):
        a = g.integers(0, 30, n).astype(float)
        assert sign_sum(a) == sign_sum_brute(a)


def test_pair_counts_matches_brute():
    g = np.random.default_rng(1)
    for n in (2, 10, 300):
        x = g.integers(0, 8, n)
        y = g.integers(0, 8, n)
        assert pair_counts(x, y) == pair_counts_brute(x, y)
