"""Lagged-predictor design construction and correlation accumulation.

Turns raw multichannel signals into the cross-correlation matrices consumed
by the estimation core. A predictor row at time ``t`` stacks the recent
history of every endogenous channel, ``y_j(t-1) ... y_j(t-n_a)``, followed
by the current and past input samples, ``x_j(t) ... x_j(t-n_b+1)``. Rows
whose target or any referenced lag is missing are dropped in full, so all
outputs and all reduced models score exactly the same set of samples.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .exceptions import AllMissingChannelError, NoValidSamplesError

_CHUNK_ROWS = 8192


@dataclass(frozen=True)
class TimeSeries:
    """A T x d block of samples where NaN marks a missing value.

    Attributes
    ----------
    values : ndarray, shape (T, d)
        Float64 samples; NaN entries are missing.
    names : list of str, optional
        Channel labels, one per column.
    """

    values: np.ndarray
    names: list[str] | None = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2 or values.shape[0] < 1 or values.shape[1] < 1:
            raise ValueError(f"expected a T x d array with T,d >= 1, got shape {values.shape}")
        if np.isinf(values).any():
            raise ValueError("series contains infinite values; only NaN marks missing data")
        object.__setattr__(self, "values", values)
        if self.names is not None:
            names = [str(n) for n in self.names]
            if len(names) != values.shape[1]:
                raise ValueError(f"{len(names)} names for {values.shape[1]} channels")
            object.__setattr__(self, "names", names)

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]

    @property
    def n_channels(self) -> int:
        return self.values.shape[1]

    @property
    def missing(self) -> np.ndarray:
        """Boolean T x d mask, True where a value is missing."""
        return np.isnan(self.values)

    def channel_names(self, prefix: str) -> list[str]:
        if self.names is not None:
            return list(self.names)
        return [f"{prefix}{j + 1}" for j in range(self.n_channels)]


def as_time_series(data, names: Sequence[str] | None = None) -> TimeSeries:
    """Coerce an array-like, DataFrame, or TimeSeries into a TimeSeries."""
    if isinstance(data, TimeSeries):
        return data
    if hasattr(data, "columns") and hasattr(data, "to_numpy"):
        inferred = [str(c) for c in data.columns]
        return TimeSeries(data.to_numpy(dtype=np.float64), names or inferred)
    return TimeSeries(np.asarray(data, dtype=np.float64), list(names) if names else None)


def demean(series) -> tuple[TimeSeries, np.ndarray]:
    """Remove the per-channel mean, ignoring missing entries.

    Returns the demeaned series (missing mask preserved) and the vector of
    channel means that was removed.

    Raises
    ------
    AllMissingChannelError
        If some channel has no observed values at all.
    """
    ts = as_time_series(series)
    observed = ~ts.missing
    counts = observed.sum(axis=0)
    if (counts == 0).any():
        bad = [ts.channel_names("c")[j] for j in np.flatnonzero(counts == 0)]
        raise AllMissingChannelError(f"channels with no observed values: {bad}")
    with np.errstate(invalid="ignore"):
        means = np.nanmean(ts.values, axis=0)
    return TimeSeries(ts.values - means, ts.names), means


@dataclass(frozen=True)
class LagSpec:
    """Lag orders and channel counts of a VARX predictor set.

    ``n_a`` autoregressive lags index ``y(t-1) ... y(t-n_a)``; ``n_b``
    input lags index ``x(t) ... x(t-n_b+1)`` (instantaneous effects are
    allowed). ``d_x = 0`` gives a pure VAR and ``n_b`` is forced to 0.
    """

    n_a: int
    n_b: int
    d_y: int
    d_x: int

    def __post_init__(self):
        if self.d_y < 1:
            raise ValueError("need at least one endogenous channel")
        if self.n_a < 1:
            raise ValueError("n_a must be at least 1")
        if self.d_x < 0:
            raise ValueError("d_x must be non-negative")
        if self.d_x == 0:
            object.__setattr__(self, "n_b", 0)
        elif self.n_b < 1:
            raise ValueError("n_b must be at least 1 when inputs are present")

    @classmethod
    def for_data(cls, y, x=None, n_a: int = 1, n_b: int = 0) -> "LagSpec":
        y = as_time_series(y)
        d_x = as_time_series(x).n_channels if x is not None else 0
        return cls(n_a=n_a, n_b=n_b if d_x else 0, d_y=y.n_channels, d_x=d_x)

    @property
    def n_raw_predictors(self) -> int:
        return self.d_y * self.n_a + self.d_x * self.n_b

    @property
    def history_start(self) -> int:
        """First time index with a complete lag history."""
        return max(self.n_a, self.n_b - 1 if self.d_x else 0)


@dataclass(frozen=True)
class BasisMatrix:
    """Fixed weights that parameterize input filters with fewer coefficients.

    ``weights`` has shape ``(n_b, n_compressed)``; raw-lag filters are
    recovered as ``weights @ compressed``. Columns must be linearly
    independent and are expected to peak at 1.
    """

    weights: np.ndarray
    kind: str = "gaussian"

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 2 or w.shape[1] > w.shape[0]:
            raise ValueError(f"weights must be n_b x n with n <= n_b, got {w.shape}")
        if np.linalg.matrix_rank(w) < w.shape[1]:
            raise ValueError("basis columns are linearly dependent")
        object.__setattr__(self, "weights", w)

    @property
    def n_lags(self) -> int:
        return self.weights.shape[0]

    @property
    def n_compressed(self) -> int:
        return self.weights.shape[1]

    def expand(self, compressed: np.ndarray) -> np.ndarray:
        """Map compressed filter coefficients back to raw lags (first axis)."""
        compressed = np.asarray(compressed, dtype=np.float64)
        return np.tensordot(self.weights, compressed, axes=(1, 0))


def gaussian_basis(n_b: int, n_compressed: int) -> BasisMatrix:
    """Overlapping Gaussian windows over the input lag axis.

    Centers are evenly spaced over ``[0, n_b - 1]`` (endpoints included)
    and the shared width equals the center spacing. Each column is scaled
    to unit maximum.
    """
    if n_b < 1 or not 1 <= n_compressed <= n_b:
        raise ValueError(
            f"need 1 <= n_compressed <= n_b, got n_b={n_b}, n_compressed={n_compressed}"
        )
    lags = np.arange(n_b, dtype=np.float64)
    if n_compressed == 1:
        centers = np.array([0.5 * (n_b - 1)])
        width = max(n_b / 2.0, 1.0)
    else:
        centers = np.linspace(0.0, n_b - 1.0, n_compressed)
        width = centers[1] - centers[0]
    weights = np.exp(-((lags[:, None] - centers[None, :]) ** 2) / (2.0 * width**2))
    weights /= weights.max(axis=0)
    return BasisMatrix(weights=weights, kind="gaussian")


class PredictorColumn(NamedTuple):
    """Provenance of one predictor column: source channel, lag, and kind.

    ``kind`` is ``"ar"`` for lagged outputs and ``"ma"`` for input lags;
    under a basis, ``lag`` of an ``"ma"`` column is the basis index.
    """

    channel: int
    lag: int
    kind: str


@dataclass(frozen=True)
class CorrelationBundle:
    """Cross-correlation matrices of a lagged predictor set.

    ``rxx`` is N x N (symmetric), ``rxy`` N x d_y, ``ryy`` d_y x d_y, all
    accumulated over the ``t_valid`` rows with a complete history. Under a
    basis the input blocks are already compressed. ``column_map`` records
    the provenance of each of the N predictor columns.
    """

    rxx: np.ndarray
    rxy: np.ndarray
    ryy: np.ndarray
    t_valid: int
    column_map: tuple[PredictorColumn, ...]
    lags: LagSpec
    basis: BasisMatrix | None = None
    valid_rows: np.ndarray = field(repr=False, default=None)

    @property
    def n_predictors(self) -> int:
        return self.rxx.shape[0]

    @property
    def n_ma_cols(self) -> int:
        """Input coefficients per channel: n_b, or the basis count."""
        return self.basis.n_compressed if self.basis is not None else self.lags.n_b

    def block_columns(self, kind: str, channel: int) -> np.ndarray:
        """Column indices of one source variable's lag block."""
        return np.array(
            [i for i, col in enumerate(self.column_map) if col.kind == kind and col.channel == channel],
            dtype=np.intp,
        )

    def sources(self) -> list[tuple[str, int]]:
        """Every testable source variable: AR channels then input channels."""
        out = [("ar", j) for j in range(self.lags.d_y)]
        out.extend(("ma", j) for j in range(self.lags.d_x))
        return out


def valid_history_rows(y: TimeSeries, x: TimeSeries | None, lags: LagSpec) -> np.ndarray:
    """Boolean mask of rows whose target and full lag history are observed."""
    T = y.n_samples
    ok_y = np.isfinite(y.values).all(axis=1)
    valid = ok_y.copy()
    start = lags.history_start
    valid[:start] = False
    # history window [t - n_a, t - 1] must be fully observed
    bad_y = np.concatenate(([0], np.cumsum(~ok_y)))
    t = np.arange(start, T)
    valid[start:] &= bad_y[t] - bad_y[t - lags.n_a] == 0
    if x is not None and lags.d_x:
        ok_x = np.isfinite(x.values).all(axis=1)
        bad_x = np.concatenate(([0], np.cumsum(~ok_x)))
        # input window [t - n_b + 1, t]
        valid[start:] &= bad_x[t + 1] - bad_x[t - lags.n_b + 1] == 0
    return valid


def lagged_design(
    y: TimeSeries, x: TimeSeries | None, lags: LagSpec, rows: np.ndarray
) -> np.ndarray:
    """Dense design block for the given (valid) row indices."""
    out = np.empty((rows.size, lags.n_raw_predictors))
    col = 0
    for j in range(lags.d_y):
        for lag in range(1, lags.n_a + 1):
            out[:, col] = y.values[rows - lag, j]
            col += 1
    if x is not None:
        for j in range(lags.d_x):
            for lag in range(lags.n_b):
                out[:, col] = x.values[rows - lag, j]
                col += 1
    return out


def _raw_column_map(lags: LagSpec) -> list[PredictorColumn]:
    cols = [
        PredictorColumn(j, lag, "ar")
        for j in range(lags.d_y)
        for lag in range(1, lags.n_a + 1)
    ]
    cols += [
        PredictorColumn(j, lag, "ma")
        for j in range(lags.d_x)
        for lag in range(lags.n_b)
    ]
    return cols


def build_correlations(
    y,
    x=None,
    lags: LagSpec | None = None,
    basis: BasisMatrix | None = None,
    valid_rows: np.ndarray | None = None,
) -> CorrelationBundle:
    """Accumulate Rxx, Rxy, Ryy over all rows with a valid history.

    Parameters
    ----------
    y : array-like or TimeSeries, shape (T, d_y)
        Target signal; NaN marks missing samples.
    x : array-like or TimeSeries, shape (T, d_x), optional
        Input signal sharing the time axis of ``y``.
    lags : LagSpec
        Lag orders; channel counts must match the data.
    basis : BasisMatrix, optional
        When given, input lag blocks are compressed: with block-diagonal
        ``G = diag(I_ar, W per input channel)`` the returned matrices are
        ``G' Rxx G`` and ``G' Rxy``.
    valid_rows : ndarray of bool, shape (T,), optional
        Overrides the computed validity mask. Used to score a reduced
        predictor set on exactly the sample set of a larger one.

    Raises
    ------
    NoValidSamplesError
        If no row has a complete history.
    ValueError
        On shape mismatches between ``y``, ``x``, and ``lags``.
    """
    y = as_time_series(y)
    x = as_time_series(x) if x is not None else None
    if lags is None:
        raise ValueError("lags is required")
    if y.n_channels != lags.d_y:
        raise ValueError(f"y has {y.n_channels} channels, lags expect {lags.d_y}")
    d_x = x.n_channels if x is not None else 0
    if d_x != lags.d_x:
        raise ValueError(f"x has {d_x} channels, lags expect {lags.d_x}")
    if x is not None and x.n_samples != y.n_samples:
        raise ValueError(
            f"y and x lengths differ: {y.n_samples} vs {x.n_samples}"
        )
    if basis is not None and lags.d_x and basis.n_lags != lags.n_b:
        raise ValueError(f"basis covers {basis.n_lags} lags, lags.n_b is {lags.n_b}")

    if valid_rows is None:
        valid = valid_history_rows(y, x, lags)
    else:
        valid = np.asarray(valid_rows, dtype=bool)
        if valid.shape != (y.n_samples,):
            raise ValueError("valid_rows must be a length-T boolean mask")
    rows = np.flatnonzero(valid)
    if rows.size == 0:
        raise NoValidSamplesError("no time step has a complete non-missing history")

    n_raw = lags.n_raw_predictors
    d_y = lags.d_y
    rxx = np.zeros((n_raw, n_raw))
    rxy = np.zeros((n_raw, d_y))
    ryy = np.zeros((d_y, d_y))
    for lo in range(0, rows.size, _CHUNK_ROWS):
        chunk = rows[lo : lo + _CHUNK_ROWS]
        xc = lagged_design(y, x, lags, chunk)
        yc = y.values[chunk]
        rxx += xc.T @ xc
        rxy += xc.T @ yc
        ryy += yc.T @ yc
    rxx = 0.5 * (rxx + rxx.T)
    ryy = 0.5 * (ryy + ryy.T)

    column_map = _raw_column_map(lags)
    if basis is not None and lags.d_x:
        n_ar = d_y * lags.n_a
        g = np.zeros((n_raw, n_ar + lags.d_x * basis.n_compressed))
        g[:n_ar, :n_ar] = np.eye(n_ar)
        for j in range(lags.d_x):
            r0 = n_ar + j * lags.n_b
            c0 = n_ar + j * basis.n_compressed
            g[r0 : r0 + lags.n_b, c0 : c0 + basis.n_compressed] = basis.weights
        rxx = g.T @ rxx @ g
        rxx = 0.5 * (rxx + rxx.T)
        rxy = g.T @ rxy
        column_map = column_map[:n_ar] + [
            PredictorColumn(j, k, "ma")
            for j in range(lags.d_x)
            for k in range(basis.n_compressed)
        ]

    return CorrelationBundle(
        rxx=rxx,
        rxy=rxy,
        ryy=ryy,
        t_valid=int(rows.size),
        column_map=tuple(column_map),
        lags=lags,
        basis=basis,
        valid_rows=valid,
    )
