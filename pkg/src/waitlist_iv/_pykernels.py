"""Pure-Python/numpy versions of the compiled kernels."""
from __future__ import annotations

from itertools import combinations
from math import comb

import numpy as np

BACKEND = "python"

T_COL, FILLED_COL, N_W1, ACC_W1, N_W0, ACC_W0 = range(6)


def combination_patterns(n: int, k: int) -> np.ndarray:
    if k < 0 or k > n:
        return np.zeros((0, n), dtype=np.uint8)
    out = np.zeros((comb(n, k), n), dtype=np.uint8)
    for r, pos in enumerate(combinations(range(n), k)):
        out[r, list(pos)] = 1
    return out


def waitlist_batch(types, s: int) -> np.ndarray:
    ty = np.asarray(types, dtype=np.int64)
    m, n = ty.shape
    csum = np.cumsum(ty, axis=1)
    total = csum[:, -1] if n else np.zeros(m, dtype=np.int64)
    filled = total >= s
    # first rank where the running accepter count reaches s
    t = np.where(filled, np.argmax(csum >= s, axis=1) + 1, n)
    out = np.zeros((m, 6), dtype=np.int64)
    out[:, T_COL] = t
    out[:, FILLED_COL] = np.minimum(total, s)
    out[:, N_W1] = np.where(filled, t - 1, n)
    out[:, ACC_W1] = np.where(filled, s - 1, total)
    out[:, N_W0] = np.where(filled, n - t, 0)
    out[:, ACC_W0] = np.where(filled, total - s, 0)
    return out


def group_demean(x, groups, n_groups: int, weights=None) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    groups = np.asarray(groups, dtype=np.intp)
    w = np.ones_like(x) if weights is None else np.asarray(weights, dtype=np.float64)
    tot = np.bincount(groups, weights=w * x, minlength=n_groups)
    wt = np.bincount(groups, weights=w, minlength=n_groups)
    means = np.divide(tot, wt, out=np.zeros_like(tot), where=wt != 0)
    return x - means[groups]
