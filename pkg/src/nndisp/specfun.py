"""Log-domain special functions for deep-tail probabilities.

Ensemble error terms at blocklengths in the thousands involve
probabilities far below the float64 range, so everything here returns
logarithms.
"""
from __future__ import annotations

import numpy as np
from scipy.special import betaln, gammaln, xlogy
from scipy.stats import poisson

_TINY = 1e-300
_EPS = 1e-15
_MAX_ITER = 100_000


def _betacf(a, b, x):
    """Continued fraction for I_x(a, b) (modified Lentz), vectorized."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = np.ones_like(x)
    d = 1.0 - qab * x / qap
    d = np.where(np.abs(d) < _TINY, _TINY, d)
    d = 1.0 / d
    h = d.copy()
    active = np.ones(x.shape, dtype=bool)
    for m in range(1, _MAX_ITER + 1):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        aa_, bb_, xx = _take(a, idx), _take(b, idx), x[idx]
        qab_, qap_, qam_ = _take(qab, idx), _take(qap, idx), _take(qam, idx)
        dd, cc, hh = d[idx], c[idx], h[idx]
        m2 = 2 * m
        aa = m * (bb_ - m) * xx / ((qam_ + m2) * (aa_ + m2))
        dd = 1.0 + aa * dd
        dd = np.where(np.abs(dd) < _TINY, _TINY, dd)
        cc = 1.0 + aa / cc
        cc = np.where(np.abs(cc) < _TINY, _TINY, cc)
        dd = 1.0 / dd
        hh = hh * dd * cc
        aa = -(aa_ + m) * (qab_ + m) * xx / ((aa_ + m2) * (qap_ + m2))
        dd = 1.0 + aa * dd
        dd = np.where(np.abs(dd) < _TINY, _TINY, dd)
        cc = 1.0 + aa / cc
        cc = np.where(np.abs(cc) < _TINY, _TINY, cc)
        dd = 1.0 / dd
        delta = dd * cc
        hh = hh * delta
        d[idx], c[idx], h[idx] = dd, cc, hh
        active[idx] = np.abs(delta - 1.0) >= _EPS
    else:
        raise ArithmeticError("incomplete beta continued fraction did not converge")
    return h


def _take(v, idx):
    return v[idx] if np.ndim(v) else v


def log_betainc(a, b, x, y=None):
    """``log I_x(a, b)``, the regularized incomplete beta function.

    ``y`` may carry ``1 - x`` computed without cancellation. The continued
    fraction is applied directly when ``x < (a+1)/(a+b+2)`` and to the
    reflected function otherwise.
    """
    x = np.asarray(x, dtype=float)
    y = 1.0 - x if y is None else np.asarray(y, dtype=float)
    a, b, x, y = np.broadcast_arrays(np.asarray(a, float), np.asarray(b, float), x, y)
    out = np.empty(x.shape)
    lo = x <= 0.0
    hi = y <= 0.0
    out[lo] = -np.inf
    out[hi] = 0.0
    mid = ~(lo | hi)
    if mid.any():
        am, bm, xm, ym = a[mid], b[mid], x[mid], y[mid]
        log_front = xlogy(am, xm) + xlogy(bm, ym) - betaln(am, bm)
        direct = xm < (am + 1.0) / (am + bm + 2.0)
        res = np.empty(xm.shape)
        if direct.any():
            i = direct
            res[i] = log_front[i] + np.log(_betacf(am[i], bm[i], xm[i]) / am[i])
        if (~direct).any():
            i = ~direct
            comp = np.exp(log_front[i]) * _betacf(bm[i], am[i], ym[i]) / bm[i]
            res[i] = np.log1p(-np.minimum(comp, 1.0))
        out[mid] = res
    return out[()] if out.ndim == 0 else out


def _log_gamma_series_sum(a, h):
    """log of S(a, h) = sum_k h^k / ((a+1)...(a+k)) for h < a + 1."""
    total = np.ones_like(h)
    term = np.ones_like(h)
    active = np.ones(h.shape, dtype=bool)
    k = 0
    while active.any():
        k += 1
        if k > _MAX_ITER:
            raise ArithmeticError("incomplete gamma series did not converge")
        term = np.where(active, term * h / (a + k), 0.0)
        total = total + term
        active = term > _EPS * total
    return np.log(total)


def log_ncx2_cdf(x, df, nc, tail_mass=1e-12):
    """``log Pr[X <= x]`` for X noncentral chi-square(df, nc).

    Poisson mixture of central chi-square laws,
    ``sum_j Pois(j; nc/2) P(df/2 + j, x/2)``, truncated once the remaining
    Poisson mass is below ``tail_mass``; since P(a + j, .) decreases in j
    this bounds the relative truncation error by ``tail_mass / (1 - tail_mass)``.
    The regularized lower gamma terms are written as
    ``h^a e^-h / Gamma(a+1) * S(a, h)`` with ``S`` run by the backward
    recurrence ``S_j = 1 + h/(a_j + 1) S_{j+1}`` (relative errors shrink at
    every step), all in log form.
    """
    x, df, nc = np.broadcast_arrays(np.asarray(x, float), np.asarray(df, float),
                                    np.asarray(nc, float))
    out = np.full(x.shape, -np.inf)
    pos = x > 0
    if not pos.any():
        return out[()] if out.ndim == 0 else out
    h = 0.5 * x[pos]
    a0 = 0.5 * df[pos]
    mu = 0.5 * nc[pos]
    j_pois = poisson.isf(tail_mass, mu)
    j_pois = np.where(np.isfinite(j_pois), j_pois, 0.0)
    # series start must sit above h for fast geometric convergence
    j_conv = np.ceil(h + 5.0 * np.sqrt(h) + 10.0 - a0)
    j_max = int(max(np.max(j_pois), np.max(j_conv), 0.0)) + 1

    a_top = a0 + j_max + 1
    log_s = _log_gamma_series_sum(a_top, h)
    log_h = np.log(h)
    acc = np.full(h.shape, -np.inf)
    for j in range(j_max, -1, -1):
        a = a0 + j
        log_s = np.logaddexp(0.0, log_h - np.log(a + 1.0) + log_s)
        log_p = a * log_h - h - gammaln(a + 1.0) + log_s
        log_w = xlogy(j, mu) - mu - gammaln(j + 1.0)
        acc = np.logaddexp(acc, log_w + log_p)
    out[pos] = np.minimum(acc, 0.0)
    return out[()] if out.ndim == 0 else out
