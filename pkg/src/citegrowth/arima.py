"""ARIMA(p,d,q) estimation, AIC order search, forecasting, ADF test.

Estimation is conditional sum of squares: innovations are recursed from
    y_t = c + phi_1 y_{t-1} + ... + eps_t - theta_1 eps_{t-1} - ...
(moving-average terms enter with a negative sign) with pre-sample y set
to the series mean and pre-sample errors to zero, then the RSS is
minimized with Nelder-Mead. AIC = n ln(sigma^2) + 2 (p + q + 1).
"""

from __future__ import annotations

import json
import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .optim import nelder_mead

log = logging.getLogger(__name__)

_DEGENERATE_VAR = 1e-12


@dataclass
class ArimaModel:
    p: int
    d: int
    q: int
    intercept: float
    ar: np.ndarray
    ma: np.ndarray
    sigma2: float
    aic: float
    converged: bool = True
    stationary_ar: bool = True
    invertible_ma: bool = True
    degenerate: bool = False

    @property
    def order(self):
        return (self.p, self.d, self.q)

    def to_json(self) -> str:
        return json.dumps({
            "order": [self.p, self.d, self.q],
            "intercept": self.intercept,
            "ar": list(map(float, self.ar)),
            "ma": list(map(float, self.ma)),
            "sigma2": self.sigma2,
            "aic": self.aic,
            "converged": self.converged,
            "degenerate": self.degenerate,
        }, sort_keys=True)

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        p, dd, q = d["order"]
        return cls(p=p, d=dd, q=q, intercept=d["intercept"],
                   ar=np.asarray(d["ar"]), ma=np.asarray(d["ma"]),
                   sigma2=d["sigma2"], aic=d["aic"], converged=d["converged"],
                   degenerate=d["degenerate"])


@dataclass
class AdfResult:
    statistic: float
    lags: int
    critical_value: float
    significance: float
    reject: bool
    nobs: int = 0


def difference(y, d: int) -> np.ndarray:
    """d-th order differences; length shrinks by d."""
    y = np.asarray(y, dtype=np.float64)
    if d < 0:
        raise ValueError("d must be >= 0")
    if len(y) <= d:
        raise ValueError("series too short to difference")
    for _ in range(d):
        y = np.diff(y)
    return y


@njit(cache=True)
def _css_residuals(y, c, phi, theta, ybar):
    n = y.shape[0]
    p = phi.shape[0]
    q = theta.shape[0]
    eps = np.zeros(n)
    for t in range(n):
        pred = c
        for i in range(p):
            pred += phi[i] * (y[t - 1 - i] if t - 1 - i >= 0 else ybar)
        acc = 0.0
        for j in range(q):
            acc += theta[j] * (eps[t - 1 - j] if t - 1 - j >= 0 else 0.0)
        eps[t] = y[t] - pred + acc
    return eps


def css_rss(y, c, phi, theta) -> float:
    y = np.asarray(y, dtype=np.float64)
    eps = _css_residuals(y, float(c), np.asarray(phi, dtype=np.float64),
                         np.asarray(theta, dtype=np.float64), float(y.mean()))
    return float(np.sum(eps**2))


def _poly_ok(coeffs):
    """True if 1 - sum coef_i z^i has all roots outside the unit circle
    (both lag polynomials carry minus signs in this convention)."""
    if len(coeffs) == 0:
        return True
    poly = np.concatenate([[1.0], -np.asarray(coeffs, dtype=np.float64)])
    roots = np.roots(poly[::-1])
    return bool(np.all(np.abs(roots) > 1.0)) if len(roots) else True


def fit_arma(y, p: int, q: int, d: int = 0) -> ArimaModel:
    """Conditional-sum-of-squares ARMA(p, q) fit on a (differenced) series."""
    y = np.asarray(y, dtype=np.float64)
    n = len(y)
    k = p + q + 1
    if n < 10 * k:
        warnings.warn(f"series length {n} below advisory 10*(p+q+1)={10 * k}", stacklevel=2)
    if n <= k:
        raise ValueError("series too short to fit")
    ybar = float(y.mean())

    def unpack(x):
        return float(x[0]), x[1:1 + p], x[1 + p:]

    def objective(x):
        c, phi, theta = unpack(x)
        if np.any(np.abs(np.concatenate([phi, theta])) > 10.0):
            return 1e100
        return css_rss(y, c, phi, theta)

    x0 = np.concatenate([[ybar], 0.1 / (1 + np.arange(p)), 0.05 / (1 + np.arange(q))])
    res = nelder_mead(objective, x0, f_tol=1e-12, max_iter=2000)
    if not res.converged:
        log.warning("CSS fit (%d,%d) did not converge; returning best-so-far", p, q)
    c, phi, theta = unpack(res.x)
    rss = res.fun
    sigma2 = max(rss / n, 0.0)
    degenerate = sigma2 < _DEGENERATE_VAR
    aic = n * np.log(max(sigma2, _DEGENERATE_VAR)) + 2 * k
    return ArimaModel(
        p=p, d=d, q=q, intercept=c, ar=np.array(phi), ma=np.array(theta),
        sigma2=sigma2, aic=float(aic), converged=res.converged,
        stationary_ar=_poly_ok(phi), invertible_ma=_poly_ok(theta),
        degenerate=degenerate,
    )


def select_order(y, max_p: int = 5, max_d: int = 2, max_q: int = 5) -> ArimaModel:
    """Exhaustive AIC grid search over p, d, q.

    Every candidate is fit on the d-differenced series trimmed at the
    front to a common effective length so AICs are comparable across d.
    Ties break toward smaller p+q, then smaller d.
    """
    y = np.asarray(y, dtype=np.float64)
    if len(y) - max_d <= max_p + max_q + 1:
        raise ValueError("series too short for the requested grid")
    candidates = []
    for d in range(max_d + 1):
        z = difference(y, d)[max_d - d:]
        for p in range(max_p + 1):
            for q in range(max_q + 1):
                try:
                    with warnings.catch_warnings():
                        warnings.simplefilter("ignore")
                        m = fit_arma(z, p, q, d=d)
                except (ValueError, FloatingPointError):
                    continue
                candidates.append(m)
    if not candidates:
        raise RuntimeError("all grid fits failed")
    best = min(candidates, key=lambda m: (m.aic, m.p + m.q, m.d, m.p, m.q))
    if best.degenerate:
        log.warning("selected model has near-zero innovation variance (degenerate series)")
    return best


def arima_forecast(model: ArimaModel, y, horizon: int) -> np.ndarray:
    """Iterated h-step forecast with future errors set to zero, then
    cumulative undifferencing back to levels."""
    y = np.asarray(y, dtype=np.float64)
    if horizon < 0:
        raise ValueError("horizon must be >= 0")
    if horizon == 0:
        return np.empty(0)
    # levels of each differencing stage, needed to restore the forecast
    stages = [y]
    for _ in range(model.d):
        stages.append(np.diff(stages[-1]))
    z = stages[-1]
    eps = _css_residuals(z, model.intercept, model.ar, model.ma, float(z.mean()))
    zext = list(z)
    eext = list(eps)
    for _ in range(horizon):
        pred = model.intercept
        for i, ph in enumerate(model.ar):
            pred += ph * (zext[-1 - i] if len(zext) > i else float(z.mean()))
        for j, th in enumerate(model.ma):
            pred -= th * (eext[-1 - j] if len(eext) > j else 0.0)
        zext.append(pred)
        eext.append(0.0)
    fc = np.array(zext[len(z):])
    for stage in reversed(stages[:-1]):
        fc = stage[-1] + np.cumsum(fc)
    return fc


_MACKINNON_TAU_C = {
    # MacKinnon (2010) response-surface constants, constant, no trend
    0.01: (-3.43035, -6.5393, -16.786, -79.433),
    0.05: (-2.86154, -2.8903, -4.234, -40.04),
    0.10: (-2.56677, -1.5384, -2.809, 0.0),
}


def mackinnon_critical_value(significance: float, nobs: int) -> float:
    b0, b1, b2, b3 = _MACKINNON_TAU_C[significance]
    return b0 + b1 / nobs + b2 / nobs**2 + b3 / nobs**3


def adf_test(y, significance: float = 0.01) -> AdfResult:
    """Augmented Dickey-Fuller unit-root test, constant, no trend.

    dy_t = c + gamma y_{t-1} + sum_{i<=L} delta_i dy_{t-i} + e_t, with L
    chosen by AIC over 0..floor(12 (n/100)^(1/4)) on a common sample;
    reject the unit root when gamma's t-ratio is below the MacKinnon
    critical value.
    """
    y = np.asarray(y, dtype=np.float64)
    n = len(y)
    if n < 25:
        raise ValueError("need at least 25 observations")
    if significance not in _MACKINNON_TAU_C:
        raise ValueError(f"unsupported significance {significance}")
    if np.ptp(y) == 0:
        raise ValueError("constant series: singular regression")
    dy = np.diff(y)
    max_lag = int(np.floor(12.0 * (n / 100.0) ** 0.25))
    max_lag = min(max_lag, len(dy) - 10)
    start = max_lag  # common estimation sample across lag orders

    best = None
    for lag in range(max_lag + 1):
        lhs = dy[start:]
        cols = [np.ones(len(lhs)), y[start:-1]]
        for i in range(1, lag + 1):
            cols.append(dy[start - i:len(dy) - i])
        x = np.column_stack(cols)
        coef, _, rank, _ = np.linalg.lstsq(x, lhs, rcond=None)
        if rank < x.shape[1]:
            continue
        resid = lhs - x @ coef
        nobs = len(lhs)
        rss = float(resid @ resid)
        aic = nobs * np.log(max(rss / nobs, 1e-300)) + 2 * x.shape[1]
        if best is None or aic < best[0]:
            best = (aic, lag, coef, x, rss, nobs)
    if best is None:
        raise ValueError("singular ADF regression")
    _, lag, coef, x, rss, nobs = best
    kparams = x.shape[1]
    sigma2 = rss / (nobs - kparams)
    xtx_inv = np.linalg.inv(x.T @ x)
    se_gamma = float(np.sqrt(sigma2 * xtx_inv[1, 1]))
    stat = float(coef[1] / se_gamma)
    crit = mackinnon_critical_value(significance, nobs)
    return AdfResult(statistic=stat, lags=lag, critical_value=crit,
                     significance=significance, reject=stat < crit, nobs=nobs)
