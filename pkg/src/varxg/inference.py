"""Estimation and per-link significance testing for VARX models.

The full model regresses every output on the complete lagged predictor set
via a closed-form ridge solution. Each candidate source variable is then
removed in turn (by deleting its block of columns from the accumulated
correlation matrices, so full and reduced models score identical samples)
and the residual-variance ratio yields a per-output deviance. Under L2
regularization the deviance is corrected for shrinkage bias before the
chi-square tail probability is evaluated.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .design import (
    BasisMatrix,
    CorrelationBundle,
    LagSpec,
    as_time_series,
    build_correlations,
    demean,
)
from .exceptions import (
    DebiasUnavailableError,
    InsufficientDataError,
    NotPositiveDefiniteError,
)
from .numkernel import chi2_sf, spd_solve


@dataclass(frozen=True)
class RegularizationSpec:
    """L2 (Tikhonov) penalty configuration.

    With the default ``"scaled"`` rule the effective ridge factor shrinks
    with sample size, ``gamma = lam / sqrt(t_valid)``; the ``"fixed"`` rule
    uses ``fixed_gamma`` directly. The penalty matrix is always
    ``gamma * diag(Rxx)`` so every predictor is shrunk in proportion to its
    own scale.
    """

    lam: float = 0.0
    gamma_rule: str = "scaled"
    fixed_gamma: float | None = None

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lam must be non-negative")
        if self.gamma_rule not in ("scaled", "fixed"):
            raise ValueError(f"unknown gamma_rule {self.gamma_rule!r}")
        if self.gamma_rule == "fixed" and (self.fixed_gamma is None or self.fixed_gamma < 0):
            raise ValueError("fixed gamma_rule needs a non-negative fixed_gamma")

    def effective_gamma(self, t_valid: int) -> float:
        if self.gamma_rule == "fixed":
            return float(self.fixed_gamma)
        return float(self.lam) / np.sqrt(t_valid) if self.lam else 0.0


def _ridge_lhs(rxx: np.ndarray, gamma: float) -> np.ndarray:
    if gamma == 0.0:
        return rxx
    return rxx + gamma * np.diag(np.diag(rxx))


def ridge_solve(bundle: CorrelationBundle, reg: RegularizationSpec) -> np.ndarray:
    """Closed-form filter estimate ``(Rxx + gamma diag(Rxx))^-1 Rxy``.

    With ``lam = 0`` this is the ordinary least-squares solution of the
    normal equations.
    """
    gamma = reg.effective_gamma(bundle.t_valid)
    return spd_solve(_ridge_lhs(bundle.rxx, gamma), bundle.rxy).solution


def residual_stats(
    h: np.ndarray, bundle: CorrelationBundle
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Residual error statistics of a filter estimate.

    Returns
    -------
    ree : ndarray, shape (d_y, d_y)
        Error correlation matrix ``(Y - XH)'(Y - XH)`` expressed through
        the accumulated correlations.
    sigma2 : ndarray, shape (d_y,)
        Per-channel residual variance ``diag(ree) / t_valid``.
    rxe : ndarray, shape (N, d_y)
        Predictor-error correlation ``Rxy - Rxx H`` (zero at the
        unregularized solution).
    """
    h = np.asarray(h, dtype=np.float64)
    if h.shape != bundle.rxy.shape:
        raise ValueError(f"h has shape {h.shape}, expected {bundle.rxy.shape}")
    hry = h.T @ bundle.rxy
    ree = bundle.ryy - hry - hry.T + h.T @ (bundle.rxx @ h)
    sigma2 = np.diag(ree) / bundle.t_valid
    rxe = bundle.rxy - bundle.rxx @ h
    return ree, sigma2, rxe


def debias_term(rxe: np.ndarray, rxx: np.ndarray, ree) -> np.ndarray:
    """Log-likelihood correction for the shrinkage bias of a ridge fit.

    Computes ``0.5 * diag(rxe' rxx^-1 rxe) / diag(ree)`` element-wise per
    output channel, with the unregularized ``rxx`` inverse. ``ree`` may be
    the error correlation matrix or its diagonal; pass it normalized per
    sample (so the diagonal holds residual variances) to obtain the O(1)
    correction applied to the deviance.

    Raises
    ------
    DebiasUnavailableError
        When the raw ``rxx`` is singular and the correction is undefined.
    """
    rxe = np.asarray(rxe, dtype=np.float64)
    try:
        solved = spd_solve(rxx, rxe).solution
    except NotPositiveDefiniteError as err:
        raise DebiasUnavailableError(
            "unregularized Rxx is singular; de-biasing is unavailable"
        ) from err
    quad = np.einsum("ij,ij->j", rxe, solved)
    ree = np.asarray(ree, dtype=np.float64)
    ree_diag = np.diag(ree) if ree.ndim == 2 else ree
    out = np.zeros_like(quad)
    np.divide(0.5 * quad, ree_diag, out=out, where=ree_diag != 0)
    return out


def effect_size_matrix(deviance: np.ndarray, t_valid: int) -> tuple[np.ndarray, np.ndarray]:
    """Generalized R-square and its square root from deviance values.

    ``r2 = 1 - exp(-D / t_valid)`` with negative deviances clipped to zero
    first, so the result lies in [0, 1). Returns ``(r2, r)``; ``r`` is the
    element-wise square root used for display.
    """
    d = np.clip(np.asarray(deviance, dtype=np.float64), 0.0, None)
    r2 = -np.expm1(-d / t_valid)
    return r2, np.sqrt(r2)


@dataclass(frozen=True)
class VarxFit:
    """Fitted VARX filters with per-link test statistics.

    Filter tensors follow ``a[l, i, j]``: effect of output j at lag l+1 on
    output i, and ``b[l, i, j]``: effect of input j at lag l on output i
    (``b`` is always in raw lag space; ``b_compressed`` holds the basis
    coefficients when a basis was used). Statistic matrices are indexed
    ``[target, source]``: ``deviance_a[i, j]`` tests the link from output j
    to output i; ``deviance_b[i, j]`` the link from input j to output i.

    ``deviance_*`` carries the de-biased statistic (may be slightly
    negative; it is clipped at zero before p-values and effect sizes are
    computed), ``raw_deviance_*`` the uncorrected one. Self-links (the
    diagonal of the AR statistics) are tested like any other link, but
    their filters absorb the spectral mismatch between white innovations
    and real signals, so read them as whitening filters rather than as
    literal self-effects.
    """

    a: np.ndarray
    b: np.ndarray | None
    b_compressed: np.ndarray | None
    sigma2: np.ndarray
    t_valid: int
    n_predictors: int
    gamma: float
    deviance_a: np.ndarray
    deviance_b: np.ndarray
    raw_deviance_a: np.ndarray
    raw_deviance_b: np.ndarray
    pvalue_a: np.ndarray
    pvalue_b: np.ndarray
    r2_a: np.ndarray
    r2_b: np.ndarray
    debias_applied: bool
    lags: LagSpec
    reg: RegularizationSpec
    basis: BasisMatrix | None
    y_mean: np.ndarray
    x_mean: np.ndarray | None
    y_names: list[str]
    x_names: list[str]

    @property
    def r_a(self) -> np.ndarray:
        return np.sqrt(self.r2_a)

    @property
    def r_b(self) -> np.ndarray:
        return np.sqrt(self.r2_b)

    @property
    def df_ar(self) -> int:
        """Chi-square degrees of freedom of an AR link test."""
        return self.lags.n_a

    @property
    def df_ma(self) -> int:
        """Chi-square degrees of freedom of an input link test."""
        return self.basis.n_compressed if self.basis is not None else self.lags.n_b

    def raw_h(self) -> np.ndarray:
        """Filters as one raw-lag matrix (N_raw x d_y), AR blocks then MA."""
        lags = self.lags
        h_ar = self.a.transpose(2, 0, 1).reshape(lags.d_y * lags.n_a, lags.d_y)
        if self.b is None:
            return h_ar
        h_ma = self.b.transpose(2, 0, 1).reshape(lags.d_x * self.b.shape[0], lags.d_y)
        return np.vstack([h_ar, h_ma])


def _filters_from_h(
    h: np.ndarray, lags: LagSpec, basis: BasisMatrix | None
) -> tuple[np.ndarray, np.ndarray | None, np.ndarray | None]:
    n_ar = lags.d_y * lags.n_a
    a = h[:n_ar].reshape(lags.d_y, lags.n_a, lags.d_y).transpose(1, 2, 0)
    if lags.d_x == 0:
        return a, None, None
    n_ma = basis.n_compressed if basis is not None else lags.n_b
    b = h[n_ar:].reshape(lags.d_x, n_ma, lags.d_y).transpose(1, 2, 0)
    if basis is None:
        return a, b, None
    return a, basis.expand(b), b


def granger_test(
    y,
    x=None,
    lags: LagSpec | None = None,
    reg: RegularizationSpec | None = None,
    basis: BasisMatrix | None = None,
) -> VarxFit:
    """Fit a VARX model and test every source variable's contribution.

    Channels are demeaned first (no intercept column is used). The full
    model is fitted once; for each of the d_y + d_x candidate sources the
    reduced model deletes that variable's block of columns from Rxx/Rxy and
    refits on the same valid samples. The deviance per output is

        D = (t_valid - N) * log(sigma2_reduced / sigma2_full) - b_r + b_f

    where N counts the full model's predictors and ``b_f``, ``b_r`` correct
    for the shrinkage bias of ridge estimation (both zero without
    regularization). P-values come from the chi-square tail with as many
    degrees of freedom as parameters removed, and the effect size is
    ``r2 = 1 - exp(-D / t_valid)``.

    Parameters
    ----------
    y : array-like, shape (T, d_y)
        Endogenous channels; NaN marks missing samples.
    x : array-like, shape (T, d_x), optional
        Exogenous inputs.
    lags : LagSpec
        Lag orders matching the data. Required.
    reg : RegularizationSpec, optional
        Defaults to no regularization.
    basis : BasisMatrix, optional
        Compresses the input lag blocks; AR lags always stay raw.

    Raises
    ------
    InsufficientDataError
        When t_valid <= N and there is no regularization.
    """
    if lags is None:
        raise ValueError("lags is required")
    reg = reg or RegularizationSpec()
    y = as_time_series(y)
    x = as_time_series(x) if x is not None else None
    y_names = y.channel_names("y")
    x_names = x.channel_names("x") if x is not None else []

    y_d, y_mean = demean(y)
    x_d, x_mean = (None, None)
    if x is not None:
        x_d, x_mean = demean(x)

    bundle = build_correlations(y_d, x_d, lags=lags, basis=basis)
    n = bundle.n_predictors
    t_valid = bundle.t_valid
    gamma = reg.effective_gamma(t_valid)
    if t_valid <= n:
        if gamma == 0.0:
            raise InsufficientDataError(
                f"only {t_valid} valid samples for {n} predictors; "
                "regularization is required"
            )
        warnings.warn(
            f"t_valid={t_valid} does not exceed the predictor count {n}; "
            "statistics will be unreliable",
            stacklevel=2,
        )

    h_full = spd_solve(_ridge_lhs(bundle.rxx, gamma), bundle.rxy).solution
    ree_f, sigma2_f, rxe_f = residual_stats(h_full, bundle)

    debias = gamma > 0.0
    b_f = np.zeros(lags.d_y)
    if debias:
        try:
            b_f = debias_term(rxe_f, bundle.rxx, ree_f / t_valid)
        except DebiasUnavailableError:
            warnings.warn(
                "raw Rxx is singular; reporting uncorrected deviance",
                stacklevel=2,
            )
            debias = False

    t_prime = t_valid - n
    d_y, d_x = lags.d_y, lags.d_x
    n_ma = bundle.n_ma_cols
    dev = {"ar": np.zeros((d_y, d_y)), "ma": np.zeros((d_y, d_x))}
    raw_dev = {"ar": np.zeros((d_y, d_y)), "ma": np.zeros((d_y, d_x))}
    pval = {"ar": np.ones((d_y, d_y)), "ma": np.ones((d_y, d_x))}
    all_cols = np.arange(n)
    for kind, channel in bundle.sources():
        drop = bundle.block_columns(kind, channel)
        keep = np.setdiff1d(all_cols, drop)
        rxx_r = bundle.rxx[np.ix_(keep, keep)]
        rxy_r = bundle.rxy[keep]
        h_r = spd_solve(_ridge_lhs(rxx_r, gamma), rxy_r).solution
        hry = h_r.T @ rxy_r
        ree_r_diag = np.diag(bundle.ryy) - 2.0 * np.diag(hry) + np.einsum(
            "ij,ij->j", h_r, rxx_r @ h_r
        )
        sigma2_r = ree_r_diag / t_valid
        b_r = np.zeros(d_y)
        if debias:
            rxe_r = rxy_r - rxx_r @ h_r
            b_r = debias_term(rxe_r, rxx_r, ree_r_diag / t_valid)
        with np.errstate(divide="ignore", invalid="ignore"):
            raw = t_prime * np.log(sigma2_r / sigma2_f)
        raw_dev[kind][:, channel] = raw
        corrected = raw - b_r + b_f
        dev[kind][:, channel] = corrected
        n_removed = lags.n_a if kind == "ar" else n_ma
        pval[kind][:, channel] = [
            chi2_sf(max(float(d), 0.0), n_removed) if np.isfinite(d) else np.nan
            for d in corrected
        ]

    r2_a, _ = effect_size_matrix(dev["ar"], t_valid)
    r2_b, _ = effect_size_matrix(dev["ma"], t_valid)
    a, b, b_compressed = _filters_from_h(h_full, lags, basis)
    return VarxFit(
        a=a,
        b=b,
        b_compressed=b_compressed,
        sigma2=sigma2_f,
        t_valid=t_valid,
        n_predictors=n,
        gamma=gamma,
        deviance_a=dev["ar"],
        deviance_b=dev["ma"],
        raw_deviance_a=raw_dev["ar"],
        raw_deviance_b=raw_dev["ma"],
        pvalue_a=pval["ar"],
        pvalue_b=pval["ma"],
        r2_a=r2_a,
        r2_b=r2_b,
        debias_applied=debias,
        lags=lags,
        reg=reg,
        basis=basis,
        y_mean=y_mean,
        x_mean=x_mean,
        y_names=y_names,
        x_names=x_names,
    )


@dataclass(frozen=True)
class PermutationResult:
    """Empirical per-link p-values from circular-shift surrogates."""

    pvalue_a: np.ndarray
    pvalue_b: np.ndarray
    observed: VarxFit
    n_perms: int


def permutation_null(
    y,
    x=None,
    lags: LagSpec | None = None,
    reg: RegularizationSpec | None = None,
    basis: BasisMatrix | None = None,
    n_perms: int = 199,
    seed: int = 0,
) -> PermutationResult:
    """Non-parametric per-link p-values via circular time shifts.

    Each permutation circularly shifts every channel (of y and x) by an
    independent uniform offset in [1, T-1], destroying cross-channel
    alignment while preserving each channel's own autocorrelation, then
    reruns the full test. The empirical p-value per link is
    ``(1 + #{surrogate deviance >= observed}) / (n_perms + 1)``.

    Note that a channel's alignment with itself is unchanged by shifting,
    so AR self-links are not meaningfully tested by this scheme.
    """
    if n_perms < 1:
        raise ValueError("n_perms must be at least 1")
    y = as_time_series(y)
    x = as_time_series(x) if x is not None else None
    t = y.n_samples
    if t < 2:
        raise ValueError("need at least two samples to shift")
    observed = granger_test(y, x, lags=lags, reg=reg, basis=basis)
    count_a = np.zeros_like(observed.deviance_a)
    count_b = np.zeros_like(observed.deviance_b)
    rng = np.random.default_rng(seed)
    for _ in range(n_perms):
        y_shift = np.column_stack(
            [np.roll(y.values[:, j], int(rng.integers(1, t))) for j in range(y.n_channels)]
        )
        x_shift = None
        if x is not None:
            x_shift = np.column_stack(
                [np.roll(x.values[:, j], int(rng.integers(1, t))) for j in range(x.n_channels)]
            )
        surrogate = granger_test(y_shift, x_shift, lags=lags, reg=reg, basis=basis)
        count_a += surrogate.deviance_a >= observed.deviance_a
        count_b += surrogate.deviance_b >= observed.deviance_b
    return PermutationResult(
        pvalue_a=(1.0 + count_a) / (n_perms + 1.0),
        pvalue_b=(1.0 + count_b) / (n_perms + 1.0),
        observed=observed,
        n_perms=n_perms,
    )
