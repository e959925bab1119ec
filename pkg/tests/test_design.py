import numpy as np
import pytest

from varxg import (
    AllMissingChannelError,
    BasisMatrix,
    LagSpec,
    NoValidSamplesError,
    TimeSeries,
    as_time_series,
    build_correlations,
    demean,
    gaussian_basis,
)

from oracles import naive_design


def lagspec(n_a, n_b, d_y, d_x):
    return LagSpec(n_a=n_a, n_b=n_b, d_y=d_y, d_x=d_x)


class TestTimeSeries:
    def test_one_dim_promoted(self):
        ts = as_time_series([1.0, 2.0, 3.0])
        assert ts.values.shape == (3, 1)

    def test_inf_rejected(self):
        with pytest.raises(ValueError, match="infinite"):
            as_time_series([[1.0], [np.inf]])

    def test_names_from_dataframe(self):
        pd = pytest.importorskip("pandas")
        df = pd.DataFrame({"a": [1.0, 2.0], "b": [3.0, 4.0]})
        ts = as_time_series(df)
        assert ts.names == ["a", "b"]

    def test_missing_mask(self):
        ts = as_time_series([[1.0, np.nan], [2.0, 3.0]])
        assert ts.missing.tolist() == [[False, True], [False, False]]


class TestDemean:
    def test_simple(self):
        out, means = demean(np.array([[1.0], [2.0], [3.0]]))
        assert np.allclose(out.values[:, 0], [-1.0, 0.0, 1.0])
        assert means[0] == pytest.approx(2.0)

    def test_mask_aware(self):
        out, means = demean(np.array([[5.0], [np.nan], [7.0]]))
        assert means[0] == pytest.approx(6.0)
        assert np.isnan(out.values[1, 0])
        assert np.allclose(out.values[[0, 2], 0], [-1.0, 1.0])

    def test_idempotent(self):
        rng = np.random.default_rng(0)
        y = rng.standard_normal((50, 2))
        once, _ = demean(y)
        twice, means = demean(once)
        assert np.abs(means).max() < 1e-12
        assert np.allclose(once.values, twice.values, atol=1e-12)

    def test_all_missing_channel(self):
        with pytest.raises(AllMissingChannelError):
            demean(np.array([[1.0, np.nan], [2.0, np.nan]]))


class TestGaussianBasis:
    def test_single_lag(self):
        basis = gaussian_basis(1, 1)
        assert np.allclose(basis.weights, [[1.0]])

    def test_stated_formula_five_by_five(self):
        basis = gaussian_basis(5, 5)
        lags = np.arange(5.0)
        centers = np.linspace(0.0, 4.0, 5)
        width = 1.0  # center spacing
        want = np.exp(-((lags[:, None] - centers[None, :]) ** 2) / (2 * width**2))
        want /= want.max(axis=0)
        assert np.allclose(basis.weights, want, atol=1e-12)

    def test_sixty_lags_four_windows(self):
        basis = gaussian_basis(60, 4)
        assert basis.weights.shape == (60, 4)
        peaks = basis.weights.argmax(axis=0)
        # centers at 0, 19.67, 39.33, 59; peaks at the nearest integer lag
        assert peaks.tolist() == [0, 20, 39, 59]
        assert np.allclose(basis.weights.max(axis=0), 1.0)

    def test_domain_error(self):
        with pytest.raises(ValueError):
            gaussian_basis(4, 5)

    def test_expand_roundtrip_shape(self):
        basis = gaussian_basis(12, 3)
        compressed = np.random.default_rng(1).standard_normal((3, 2, 4))
        raw = basis.expand(compressed)
        assert raw.shape == (12, 2, 4)


class TestBuildCorrelations:
    def test_constant_signal_hand_count(self):
        y = np.ones((10, 1))
        bundle = build_correlations(y, lags=lagspec(1, 0, 1, 0))
        assert bundle.t_valid == 9
        assert bundle.rxx[0, 0] == pytest.approx(9.0)
        assert bundle.rxy[0, 0] == pytest.approx(9.0)

    def test_missing_value_excludes_affected_rows(self):
        t_len = 30
        rng = np.random.default_rng(5)
        y = rng.standard_normal((t_len, 1))
        y[5, 0] = np.nan
        bundle = build_correlations(y, lags=lagspec(2, 0, 1, 0))
        # rows 5, 6, 7 touch the gap; rows 0, 1 lack history
        assert bundle.t_valid == t_len - 2 - 3
        _, _, valid = naive_design(y, None, 2, 0)
        assert np.array_equal(bundle.valid_rows, valid)

    def test_matches_explicit_design_oracle(self):
        rng = np.random.default_rng(42)
        y = rng.standard_normal((200, 2))
        x = rng.standard_normal((200, 1))
        lags = lagspec(2, 3, 2, 1)
        bundle = build_correlations(y, x, lags=lags)
        design, target, valid = naive_design(y, x, 2, 3)
        dv = design[valid]
        assert np.abs(bundle.rxx - dv.T @ dv).max() < 1e-10
        assert np.abs(bundle.rxy - dv.T @ target[valid]).max() < 1e-10
        assert np.abs(bundle.ryy - target[valid].T @ target[valid]).max() < 1e-10
        assert bundle.t_valid == valid.sum()

    def test_rxx_symmetric_psd(self):
        rng = np.random.default_rng(9)
        y = rng.standard_normal((300, 3))
        x = rng.standard_normal((300, 2))
        bundle = build_correlations(y, x, lags=lagspec(3, 4, 3, 2))
        assert np.abs(bundle.rxx - bundle.rxx.T).max() == 0.0
        eigs = np.linalg.eigvalsh(bundle.rxx)
        assert eigs.min() >= -1e-8 * np.trace(bundle.rxx)

    def test_column_map_bijection(self):
        lags = lagspec(2, 3, 2, 2)
        bundle = build_correlations(
            np.random.default_rng(0).standard_normal((50, 2)),
            np.random.default_rng(1).standard_normal((50, 2)),
            lags=lags,
        )
        assert len(bundle.column_map) == bundle.n_predictors == lags.n_raw_predictors
        assert len(set(bundle.column_map)) == bundle.n_predictors
        ar = [c for c in bundle.column_map if c.kind == "ar"]
        ma = [c for c in bundle.column_map if c.kind == "ma"]
        assert {(c.channel, c.lag) for c in ar} == {(j, l) for j in range(2) for l in (1, 2)}
        assert {(c.channel, c.lag) for c in ma} == {(j, l) for j in range(2) for l in (0, 1, 2)}

    def test_basis_equals_convolved_surrogate_channels(self):
        rng = np.random.default_rng(17)
        t_len = 240
        y = rng.standard_normal((t_len, 2))
        x = rng.standard_normal((t_len, 1))
        n_b, n_c = 8, 3
        basis = gaussian_basis(n_b, n_c)
        lags = lagspec(2, n_b, 2, 1)
        bundle = build_correlations(y, x, lags=lags, basis=basis)

        # surrogate channels: x convolved with each basis column
        surr = np.full((t_len, n_c), np.nan)
        for k in range(n_c):
            for t in range(n_b - 1, t_len):
                surr[t, k] = basis.weights[:, k] @ x[t - np.arange(n_b), 0]
        surr_bundle = build_correlations(
            y, surr, lags=lagspec(2, 1, 2, n_c), valid_rows=bundle.valid_rows
        )
        assert np.abs(bundle.rxx - surr_bundle.rxx).max() < 1e-10
        assert np.abs(bundle.rxy - surr_bundle.rxy).max() < 1e-10

    def test_no_valid_samples(self):
        y = np.full((5, 1), np.nan)
        y[0, 0] = 1.0
        with pytest.raises(NoValidSamplesError):
            build_correlations(y, lags=lagspec(2, 0, 1, 0))

    def test_length_mismatch(self):
        with pytest.raises(ValueError, match="lengths differ"):
            build_correlations(
                np.ones((10, 1)), np.ones((9, 1)), lags=lagspec(1, 1, 1, 1)
            )

    def test_input_history_start_counts_as_invalid(self):
        # with n_b > n_a + 1 the first valid row is set by the input window
        y = np.random.default_rng(2).standard_normal((20, 1))
        x = np.random.default_rng(3).standard_normal((20, 1))
        bundle = build_correlations(y, x, lags=lagspec(1, 6, 1, 1))
        assert bundle.t_valid == 20 - 5
        assert not bundle.valid_rows[:5].any()


class TestLagSpec:
    def test_pure_var_forces_nb_zero(self):
        lags = LagSpec(n_a=2, n_b=5, d_y=3, d_x=0)
        assert lags.n_b == 0
        assert lags.n_raw_predictors == 6

    def test_invalid(self):
        with pytest.raises(ValueError):
            LagSpec(n_a=0, n_b=1, d_y=1, d_x=1)
        with pytest.raises(ValueError):
            LagSpec(n_a=1, n_b=0, d_y=1, d_x=1)


class TestBasisMatrix:
    def test_dependent_columns_rejected(self):
        w = np.ones((4, 2))
        with pytest.raises(ValueError, match="dependent"):
            BasisMatrix(weights=w)

    def test_custom_identity(self):
        basis = BasisMatrix(weights=np.eye(3), kind="custom")
        assert basis.n_compressed == 3
