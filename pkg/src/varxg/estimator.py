"""Scikit-learn style estimator wrapping the VARX fitting core."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from .design import LagSpec, as_time_series, gaussian_basis, lagged_design, valid_history_rows
from .dynamics import ImpulseResponse, impulse_response
from .inference import RegularizationSpec, granger_test


class VARX(BaseEstimator):
    """Vector autoregression with exogenous inputs and per-link tests.

    Fits output channels on their joint past (``n_a`` lags) and optionally
    on current-and-past input samples (``n_b`` lags) by closed-form ridge
    regression, and scores every channel-to-channel link with a
    likelihood-ratio deviance, p-value, and effect size.

    Parameters
    ----------
    n_a : int, default=1
        Autoregressive lag count.
    n_b : int, default=0
        Input lag count; 0 fits a pure VAR (ignored when no ``x`` is
        passed to :meth:`fit`).
    lam : float, default=0.0
        L2 regularization strength; the effective ridge factor is
        ``lam / sqrt(t_valid)`` and the penalty is scaled per predictor by
        ``diag(Rxx)``.
    n_basis : int, default=0
        When positive, input filters are parameterized by this many
        Gaussian basis windows instead of ``n_b`` free lags.
    gamma_rule : {"scaled", "fixed"}, default="scaled"
        How the ridge factor is derived; see ``RegularizationSpec``.
    fixed_gamma : float, optional
        Ridge factor used verbatim under the ``"fixed"`` rule.

    Attributes
    ----------
    result_ : VarxFit
        Full fit record (filters, deviances, p-values, effect sizes).
    A_ : ndarray, shape (n_a, d_y, d_y)
        AR filters; ``A_[l, i, j]`` is the effect of output j at lag l+1
        on output i.
    B_ : ndarray or None, shape (n_b, d_y, d_x)
        Input filters in raw lag space (basis-expanded if a basis was
        used).
    pvalue_A_, pvalue_B_ : ndarray
        Per-link p-values indexed ``[target, source]``.

    Examples
    --------
    >>> model = VARX(n_a=2, n_b=3, lam=0.5).fit(y, x)
    >>> model.pvalue_B_[0, 0]   # input 1 -> output 1
    """

    def __init__(
        self,
        n_a: int = 1,
        n_b: int = 0,
        lam: float = 0.0,
        n_basis: int = 0,
        gamma_rule: str = "scaled",
        fixed_gamma: float | None = None,
    ):
        self.n_a = n_a
        self.n_b = n_b
        self.lam = lam
        self.n_basis = n_basis
        self.gamma_rule = gamma_rule
        self.fixed_gamma = fixed_gamma

    def fit(self, y, x=None):
        """Fit the model and run all per-link significance tests.

        Parameters
        ----------
        y : array-like, shape (T, d_y)
            Endogenous channels; NaN marks missing values.
        x : array-like, shape (T, d_x), optional
            Exogenous inputs on the same time axis.

        Returns
        -------
        self
        """
        y = as_time_series(y)
        x = as_time_series(x) if x is not None else None
        lags = LagSpec.for_data(y, x, n_a=self.n_a, n_b=self.n_b)
        basis = None
        if self.n_basis and lags.d_x:
            basis = gaussian_basis(lags.n_b, self.n_basis)
        reg = RegularizationSpec(
            lam=self.lam, gamma_rule=self.gamma_rule, fixed_gamma=self.fixed_gamma
        )
        fit = granger_test(y, x, lags=lags, reg=reg, basis=basis)
        self.result_ = fit
        self.A_ = fit.a
        self.B_ = fit.b
        self.B_compressed_ = fit.b_compressed
        self.sigma2_ = fit.sigma2
        self.deviance_A_ = fit.deviance_a
        self.deviance_B_ = fit.deviance_b
        self.pvalue_A_ = fit.pvalue_a
        self.pvalue_B_ = fit.pvalue_b
        self.r2_A_ = fit.r2_a
        self.r2_B_ = fit.r2_b
        self.t_valid_ = fit.t_valid
        self.n_predictors_ = fit.n_predictors
        self.y_mean_ = fit.y_mean
        self.x_mean_ = fit.x_mean
        return self

    def _check_fitted(self):
        if not hasattr(self, "result_"):
            raise RuntimeError("this VARX instance is not fitted yet; call fit first")

    def predict(self, y, x=None) -> np.ndarray:
        """One-step-ahead predictions from observed history.

        Rows whose lag history is incomplete (start of the series, or
        touching missing values) are returned as NaN.

        Returns
        -------
        ndarray, shape (T, d_y)
        """
        self._check_fitted()
        fit = self.result_
        y = as_time_series(y)
        x = as_time_series(x) if x is not None else None
        lags = fit.lags
        if y.n_channels != lags.d_y:
            raise ValueError(f"y has {y.n_channels} channels, model expects {lags.d_y}")
        if (x.n_channels if x is not None else 0) != lags.d_x:
            raise ValueError(f"model expects {lags.d_x} input channels")
        y_c = as_time_series(y.values - fit.y_mean)
        x_c = as_time_series(x.values - fit.x_mean) if x is not None else None
        valid = valid_history_rows(y_c, x_c, lags)
        rows = np.flatnonzero(valid)
        h = fit.raw_h()
        pred = np.full((y.n_samples, lags.d_y), np.nan)
        if rows.size:
            design = lagged_design(y_c, x_c, lags, rows)
            pred[rows] = design @ h + fit.y_mean
        return pred

    def impulse_response(self, horizon: int) -> ImpulseResponse:
        """Total system response of the fitted filters over ``horizon`` steps."""
        self._check_fitted()
        fit = self.result_
        if fit.b is None:
            raise ValueError("model has no inputs; impulse response is undefined")
        return impulse_response(fit.a, fit.b, horizon)
