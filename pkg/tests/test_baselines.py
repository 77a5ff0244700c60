import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import correlated_pair, identical_columns, orthogonal_design, pearson_matrix, vif_oracle
from ubva.baselines import (
    baseline_panel,
    condition_indices,
    condition_number,
    count_above,
    effective_counts,
    ld_adj,
    ld_score,
    red,
    vif,
)
from ubva.covariance import CovarianceSpec, realize_covariance, sample_mvn
from ubva.errors import RankDeficientError, RegimeError
from ubva.matrix import standardize, thin_svd
from ubva.severity import measure


def _prep(raw):
    x = standardize(raw)
    return x, thin_svd(x)


class TestVif:
    def test_orthogonal(self):
        x, _ = _prep(orthogonal_design(8, 5))
        np.testing.assert_allclose(vif(x), 1.0, rtol=1e-12)

    def test_two_columns(self):
        x, _ = _prep(correlated_pair(0.6))
        np.testing.assert_allclose(vif(x), [1.5625, 1.5625], rtol=1e-12)

    def test_regression_oracle(self, rng):
        raw = rng.standard_normal((200, 5)) @ rng.standard_normal((5, 5))
        x, _ = _prep(raw)
        np.testing.assert_allclose(vif(x), vif_oracle(raw), rtol=1e-8)

    def test_regime_guard(self, rng):
        x, _ = _prep(rng.standard_normal((10, 10)))
        with pytest.raises(RegimeError, match="n > p"):
            vif(x)

    def test_singular(self, rng):
        raw = rng.standard_normal((20, 3))
        raw = np.column_stack([raw, raw[:, 0] + raw[:, 1]])
        x, _ = _prep(raw)
        with pytest.raises(RankDeficientError):
            vif(x)

    def test_bounded_by_condition_number(self):
        for seed in range(10):
            raw = sample_mvn(realize_covariance(CovarianceSpec.ar1(20, 0.9)), 200, seed)
            x, svd = _prep(raw)
            v = vif(x)
            assert v.min() >= 1 - 1e-8
            assert v.max() <= condition_number(svd) ** 2 + 1e-6


class TestCondition:
    def test_orthogonal(self):
        _, svd = _prep(orthogonal_design(8, 4))
        assert condition_number(svd) == pytest.approx(1, rel=1e-12)
        np.testing.assert_allclose(condition_indices(svd), 1, rtol=1e-12)

    def test_identical(self):
        _, svd = _prep(identical_columns(5, 2))
        assert condition_number(svd) == np.inf
        np.testing.assert_array_equal(condition_indices(svd), [1, np.inf])

    def test_two_columns(self):
        _, svd = _prep(correlated_pair(0.6))
        assert condition_number(svd) == pytest.approx(2, rel=1e-12)

    def test_indices_direct(self, rng):
        _, svd = _prep(rng.standard_normal((10, 4)))
        d = np.linalg.svd(standardize(svd.reconstruct()).values, compute_uv=False)
        np.testing.assert_allclose(condition_indices(svd), d[0] / d, rtol=1e-10)
        idx = condition_indices(svd)
        assert np.all(idx >= 1) and np.all(np.diff(idx) >= 0)

    def test_high_dim_regime(self, rng):
        _, svd = _prep(rng.standard_normal((10, 40)))
        assert condition_number(svd) == pytest.approx(svd.d[0] / svd.d[8])

    def test_count_above(self):
        assert count_above(np.array([1, 10, 30, 31, np.inf])) == 2


class TestRed:
    @pytest.mark.filterwarnings("ignore::ubva.errors.DegenerateSpectrumWarning")
    def test_extremes(self):
        assert red(measure(orthogonal_design(8, 4)).severity.sR) == pytest.approx(0, abs=1e-7)
        assert red(measure(identical_columns(5, 3)).severity.sR) == pytest.approx(1, rel=1e-12)

    def test_pairwise_oracle(self):
        raw = sample_mvn(realize_covariance(CovarianceSpec.compound_symmetric(50, 0.3)), 500, 11)
        r = pearson_matrix(raw)
        off = (r * r).sum() - 50
        expected = np.sqrt(off / (50 * 49))
        assert red(measure(raw).severity.sR) == pytest.approx(expected, rel=1e-8)


class TestLd:
    def test_zero_window(self, rng):
        x, _ = _prep(rng.standard_normal((30, 6)))
        np.testing.assert_array_equal(ld_adj(x, 0), 1.0)
        np.testing.assert_array_equal(ld_score(x, 0), 1.0)

    def test_full_window_equals_sR(self, rng):
        raw = rng.standard_normal((30, 6))
        x, _ = _prep(raw)
        np.testing.assert_allclose(ld_adj(x, 5), measure(raw).severity.sR, rtol=1e-10)
        np.testing.assert_allclose(ld_adj(x, 50), ld_adj(x, 5), rtol=0)

    def test_direct_window_sum(self):
        raw = sample_mvn(realize_covariance(CovarianceSpec.ar1(12, 0.8)), 80, 5)
        x, _ = _prep(raw)
        r2 = pearson_matrix(raw) ** 2
        expected = [sum(r2[j, k] for k in range(max(0, j - 2), min(12, j + 3))) for j in range(12)]
        np.testing.assert_allclose(ld_adj(x, 2), expected, rtol=1e-10)

    def test_score_direct(self, rng):
        raw = rng.standard_normal((50, 20))
        x, _ = _prep(raw)
        r2 = pearson_matrix(raw) ** 2
        adj = r2 - (1 - r2) / 48
        expected = [
            1 + sum(adj[j, k] for k in range(max(0, j - 3), min(20, j + 4)) if k != j) for j in range(20)
        ]
        np.testing.assert_allclose(ld_score(x, 3), expected, atol=1e-12)

    def test_score_unbiased_on_null(self):
        raw = np.random.default_rng(9).standard_normal((60, 2000))
        x, _ = _prep(raw)
        assert ld_score(x, 5).mean() == pytest.approx(1, abs=0.01)
        assert ld_adj(x, 5).mean() == pytest.approx(1 + 10 / 59, abs=0.01)

    @given(st.integers(0, 2**32 - 1), st.integers(1, 6))
    @settings(max_examples=25, deadline=None)
    def test_monotone_and_ordered(self, seed, t):
        x, _ = _prep(np.random.default_rng(seed).standard_normal((15, 10)))
        assert np.all(ld_adj(x, t) >= ld_adj(x, t - 1))
        assert np.all(ld_score(x, t) <= ld_adj(x, t))


class TestEffective:
    def test_identical(self):
        c = effective_counts(measure(identical_columns(5, 4)).severity.sR)
        assert c.p_eff == pytest.approx(1, abs=1e-10)

    @pytest.mark.filterwarnings("ignore::ubva.errors.DegenerateSpectrumWarning")
    def test_orthogonal(self):
        c = effective_counts(measure(orthogonal_design(8, 6)).severity.sR)
        assert c.p_eff == pytest.approx(6, rel=1e-10)

    def test_chain_wide(self):
        m = measure(np.random.default_rng(12).standard_normal((100, 400)), with_rows=True)
        c = effective_counts(m.severity.sR, m.severity.sL)
        assert c.p_eff <= c.max_p_eff + 1e-8 <= 99 + 2e-8
        assert c.n_eff <= c.max_n_eff + 1e-8


def test_panel_assembly(rng):
    raw = rng.standard_normal((40, 8))
    m = measure(raw)
    panel = baseline_panel(m.standardized, m.svd, m.severity.sR, ld_window=2)
    assert panel.vif is not None and panel.ld_adj.shape == (8,)
    assert panel.red == pytest.approx(m.summary.red)
    wide = measure(rng.standard_normal((10, 30)))
    assert baseline_panel(wide.standardized, wide.svd, wide.severity.sR).vif is None
    with pytest.raises(RegimeError):
        baseline_panel(wide.standardized, wide.svd, wide.severity.sR, with_vif=True)
