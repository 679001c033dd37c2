"""All-pairs sign statistics in O(n log n), with quadratic reference versions."""

import numpy as np

_LEAF = 64


def _leaf_sign_sum(a):
    d = np.sign(a[:, None] - a[None, :])
    return float(np.triu(d, 1).sum())


def _merge_sign_sum(a):
    n = a.shape[0]
    if n <= _LEAF:
        return np.sort(a), _leaf_sign_sum(a)
    mid = n // 2
    left, s_left = _merge_sign_sum(a[:mid])
    right, s_right = _merge_sign_sum(a[mid:])
    # cross pairs: i in left, j in right
    n_left_greater = left.shape[0] - np.searchsorted(left, right, side="right")
    n_left_less = np.searchsorted(left, right, side="left")
    cross = float(n_left_greater.sum() - n_left_less.sum())
    merged = np.empty(n, dtype=a.dtype)
    pos = np.searchsorted(left, right, side="right") + np.arange(right.shape[0])
    mask = np.ones(n, dtype=bool)
    mask[pos] = False
    merged[pos] = right
    merged[mask] = left
    return merged, s_left + s_right + cross


def sign_sum(a) -> float:
    """Return sum over i<j of sgn(a[i] - a[j]); ties contribute zero."""
    a = np.asarray(a, dtype=float).ravel()
    if a.shape[0] < 2:
        return 0.0
    return _merge_sign_sum(a)[1]


def sign_sum_brute(a) -> float:
    a = np.asarray(a, dtype=float).ravel()
    total = 0.0
    for i in range(a.shape[0] - 1):
        total += np.sign(a[i] - a[i + 1:]).sum()
    return float(total)


def _tied_pairs(*columns) -> int:
    data = np.column_stack([np.asarray(c, dtype=float) for c in columns])
    _, counts = np.unique(data, axis=0, return_counts=True)
    return int((counts * (counts - 1) // 2).sum())


def pair_counts(x, y):
    """Concordant, discordant and tied pair counts between ``x`` and ``y``.

    A pair is tied when it ties in either sequence. Runs in O(n log n).
    """
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    n = x.shape[0]
    total = n * (n - 1) // 2
    # order by y descending (stable), then the x sign-sum counts
    # sgn(x_i - x_j) * sgn(y_i - y_j) except inside y-tie groups
    order = np.lexsort((np.arange(n), -y))
    xs, ys = x[order], y[order]
    s = sign_sum(xs)
    # subtract contributions of pairs that tie in y
    boundaries = np.flatnonzero(np.diff(ys) != 0) + 1
    for block in np.split(xs, boundaries):
        if block.shape[0] > 1:
            s -= sign_sum(block)
    untied = total - _tied_pairs(x) - _tied_pairs(y) + _tied_pairs(x, y)
    concordant = (untied + int(round(s))) // 2
    discordant = untied - concordant
    return int(concordant), int(discordant), int(total - untied)


def pair_counts_brute(x, y):
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    conc = disc = ties = 0
    for i in range(x.shape[0] - 1):
        prod = np.sign(x[i] - x[i + 1:]) * np.sign(y[i] - y[i + 1:])
        conc += int((prod > 0).sum())
        disc += int((prod < 0).sum())
        ties += int((prod == 0).sum())
    return conc, disc, ties
