import os
from itertools import combinations
from math import comb

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from waitlist_iv import _pykernels, kernels

from conftest import brute_force_lottery

BACKENDS = kernels.available_backends()


@pytest.mark.skipif(bool(os.environ.get("WAITLIST_IV_PURE_PYTHON")), reason="fallback forced")
def test_compiled_backend_is_active():
    assert "cython" in BACKENDS, "extension not built; run pip install -e ."
    assert kernels.BACKEND == "cython"


@pytest.fixture(params=sorted(BACKENDS))
def backend(request):
    return BACKENDS[request.param]


class TestCombinationPatterns:
    @pytest.mark.parametrize("n, k", [(6, 4), (5, 0), (5, 5), (12, 7), (1, 1), (7, 3)])
    def test_lexicographic(self, backend, n, k):
        mat = backend.combination_patterns(n, k)
        assert mat.shape == (comb(n, k), n)
        expected = [tuple(pos) for pos in combinations(range(n), k)]
        got = [tuple(np.flatnonzero(row)) for row in mat]
        assert got == expected

    def test_out_of_range(self, backend):
        assert backend.combination_patterns(4, 5).shape == (0, 4)

    def test_large_counts_agree(self):
        assert np.array_equal(
            BACKENDS["python"].combination_patterns(16, 8),
            BACKENDS.get("cython", _pykernels).combination_patterns(16, 8),
        )


class TestWaitlistBatch:
    def test_against_walk(self, backend):
        mat = _pykernels.combination_patterns(8, 5)
        out = backend.waitlist_batch(mat, 3)
        for row, st_ in zip(mat, out):
            t, w1, w0 = brute_force_lottery({i + 1 for i in np.flatnonzero(row)}, 8, 3)
            assert st_[kernels.T_COL] == t
            assert st_[kernels.FILLED_COL] == 3
            assert st_[kernels.ACC_W1] * w1.denominator == w1.numerator * st_[kernels.N_W1]
            assert st_[kernels.N_W0] == 8 - t
            assert st_[kernels.ACC_W0] * w0.denominator == w0.numerator * st_[kernels.N_W0]

    def test_undersubscribed(self, backend):
        out = backend.waitlist_batch(np.array([[0, 1, 0, 0]], dtype=np.uint8), 2)
        assert list(out[0]) == [4, 1, 4, 1, 0, 0]

    @settings(max_examples=200, deadline=None)
    @given(arrays(np.uint8, st.tuples(st.integers(1, 6), st.integers(2, 25)), elements=st.integers(0, 1)),
           st.integers(1, 24))
    def test_backends_agree(self, types, s):
        if s >= types.shape[1]:
            return
        ref = BACKENDS["python"].waitlist_batch(types, s)
        for mod in BACKENDS.values():
            assert np.array_equal(mod.waitlist_batch(types, s), ref)


class TestGroupDemean:
    @settings(max_examples=100, deadline=None)
    @given(st.integers(1, 60), st.integers(1, 5), st.integers(0, 2**31), st.booleans())
    def test_backends_agree(self, size, groups, seed, weighted):
        rng = np.random.default_rng(seed)
        x = rng.normal(size=size)
        g = rng.integers(0, groups, size=size)
        w = rng.uniform(0.1, 3, size=size) if weighted else None
        ref = BACKENDS["python"].group_demean(x, g, groups, w)
        for mod in BACKENDS.values():
            np.testing.assert_allclose(mod.group_demean(x, g, groups, w), ref, rtol=1e-12, atol=1e-12)

    def test_group_means_vanish(self, backend):
        x = np.array([1.0, 3.0, 10.0, 20.0, 30.0])
        g = np.array([0, 0, 1, 1, 1])
        out = backend.group_demean(x, g, 2)
        np.testing.assert_allclose(out, [-1, 1, -10, 0, 10])
