"""Independent reference implementations used as test oracles.

Everything here is deliberately naive (explicit loops, textbook formulas)
and shares no code with the library paths it checks.
"""

import math

import numpy as np


def gauss_solve(a, b):
    """Linear solve by Gaussian elimination with partial pivoting."""
    a = np.array(a, dtype=float)
    b = np.array(b, dtype=float)
    one_dim = b.ndim == 1
    if one_dim:
        b = b[:, None]
    n = a.shape[0]
    for k in range(n):
        p = k + int(np.argmax(np.abs(a[k:, k])))
        if p != k:
            a[[k, p]] = a[[p, k]]
            b[[k, p]] = b[[p, k]]
        for i in range(k + 1, n):
            f = a[i, k] / a[k, k]
            a[i, k:] -= f * a[k, k:]
            b[i] -= f * b[k]
    x = np.zeros_like(b)
    for i in range(n - 1, -1, -1):
        x[i] = (b[i] - a[i, i + 1 :] @ x[i + 1 :]) / a[i, i]
    return x[:, 0] if one_dim else x


def chi2_pdf(x, k):
    return x ** (0.5 * k - 1.0) * math.exp(-0.5 * x - math.lgamma(0.5 * k) - 0.5 * k * math.log(2.0))


def chi2_cdf_quadrature(x, k):
    """Chi-square CDF by adaptive quadrature of the density."""
    from scipy.integrate import quad

    if x == 0:
        return 0.0
    value, _ = quad(chi2_pdf, 0.0, x, args=(k,), epsabs=1e-13, epsrel=1e-12, limit=500)
    return value


def naive_design(y, x, n_a, n_b):
    """Explicit lagged design matrix, target matrix, and row validity.

    Brute-force loops; a row is valid when the target and every referenced
    lag entry are finite.
    """
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float) if x is not None else None
    t_len, d_y = y.shape
    d_x = x.shape[1] if x is not None else 0
    n_cols = d_y * n_a + d_x * n_b
    design = np.zeros((t_len, n_cols))
    valid = np.zeros(t_len, dtype=bool)
    for t in range(t_len):
        row = []
        ok = np.isfinite(y[t]).all()
        for j in range(d_y):
            for lag in range(1, n_a + 1):
                if t - lag < 0:
                    ok = False
                    row.append(0.0)
                else:
                    v = y[t - lag, j]
                    ok = ok and np.isfinite(v)
                    row.append(v if np.isfinite(v) else 0.0)
        for j in range(d_x):
            for lag in range(n_b):
                if t - lag < 0:
                    ok = False
                    row.append(0.0)
                else:
                    v = x[t - lag, j]
                    ok = ok and np.isfinite(v)
                    row.append(v if np.isfinite(v) else 0.0)
        design[t] = row
        valid[t] = ok
    return design, y, valid


def ols_by_lstsq(y, x, n_a, n_b):
    """Least-squares filter estimate from the explicit design matrix."""
    design, target, valid = naive_design(y, x, n_a, n_b)
    sol, *_ = np.linalg.lstsq(design[valid], target[valid], rcond=None)
    return sol, design, valid


def companion_char_poly_radius(a):
    """Spectral radius via characteristic polynomial root finding.

    Uses the Faddeev-LeVerrier recursion for the coefficients, then numpy
    root finding; independent of any power iteration.
    """
    a = np.asarray(a, dtype=float)
    n_a, d_y, _ = a.shape
    n = n_a * d_y
    comp = np.zeros((n, n))
    for lag in range(n_a):
        comp[:d_y, lag * d_y : (lag + 1) * d_y] = a[lag]
    if n_a > 1:
        comp[d_y:, : n - d_y] = np.eye(n - d_y)
    coeffs = np.zeros(n + 1)
    coeffs[0] = 1.0
    m = np.zeros((n, n))
    for k in range(1, n + 1):
        m = comp @ m + coeffs[k - 1] * np.eye(n)
        coeffs[k] = -np.trace(comp @ m) / k
    roots = np.roots(coeffs)
    return float(np.abs(roots).max()) if roots.size else 0.0


def ks_statistic(sample, cdf):
    """Kolmogorov-Smirnov distance between a sample and a CDF callable."""
    s = np.sort(np.asarray(sample, dtype=float))
    n = s.size
    cdf_vals = np.array([cdf(v) for v in s])
    upper = np.abs(np.arange(1, n + 1) / n - cdf_vals).max()
    lower = np.abs(cdf_vals - np.arange(0, n) / n).max()
    return max(upper, lower)
