"""Delta-method variance of smooth functions of sample means, and empirical
checks of the normal approximation they imply.

A ``DeltaSpec`` holds the gradient ``J`` of the function at the origin and
the covariance ``V`` of the zero-mean per-symbol vector; the limiting
variance of ``sqrt(n) f(mean)`` is ``J V J^T``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import ndtr
from scipy.stats import kstwo

from .errors import DomainError
from .montecarlo import sample_statistic


@dataclass(frozen=True)
class DeltaSpec:
    jacobian: np.ndarray
    covariance: np.ndarray
    labels: tuple[str, ...]

    def __post_init__(self):
        J = np.atleast_1d(np.asarray(self.jacobian, dtype=float))
        V = np.atleast_2d(np.asarray(self.covariance, dtype=float))
        object.__setattr__(self, "jacobian", J)
        object.__setattr__(self, "covariance", V)
        object.__setattr__(self, "labels", tuple(self.labels))
        if V.shape != (J.size, J.size):
            raise DomainError(f"covariance shape {V.shape} does not match jacobian length {J.size}")
        if self.labels and len(self.labels) != J.size:
            raise DomainError("one label per coordinate is required")
        scale = max(1.0, float(np.max(np.abs(V))))
        if not np.allclose(V, V.T, rtol=0, atol=1e-12 * scale):
            raise DomainError("covariance must be symmetric")
        if np.linalg.eigvalsh(V).min() < -1e-12 * scale:
            raise DomainError("covariance must be positive semidefinite")


def delta_variance(spec: DeltaSpec) -> float:
    """``J V J^T``."""
    J, V = spec.jacobian, spec.covariance
    return float(J @ V @ J)


def p2p_spec(P: float, xi: float) -> DeltaSpec:
    """Point-to-point shell statistic ``P|Z|^2 - nP - 2<X, Z>``.

    Per-symbol variables ``1 - Z^2``, ``sqrt(P) X'Z`` and ``X'^2 - 1`` with
    ``X'`` standard normal; ``f(a) = P a1 + 2 a2 / sqrt(1 + a3)``.
    """
    if not P > 0:
        raise DomainError(f"power must be > 0, got {P}")
    if xi < 1:
        raise DomainError(f"xi must be >= 1, got {xi}")
    return DeltaSpec(
        np.array([P, 2.0, 0.0]),
        np.diag([xi - 1.0, P, 2.0]),
        ("1-Z^2", "sqrt(P)X'Z", "X'^2-1"),
    )


def interference_spec(P1: float, interferer_powers: Sequence[float], xi: float) -> DeltaSpec:
    """Shell statistic with shell interferers; seven variable families.

    ====================  ===========  ==============
    variable              variance     gradient entry
    ====================  ===========  ==============
    1 - Z^2               xi - 1       P1
    sqrt(P1) X1'Z         P1           2(Pt + 1)
    X1'^2 - 1             2            0
    sqrt(P1 Pi) X1'Xi'    P1 Pi        2(Pt + 1)
    sqrt(Pi) Xi'Z         Pi           -2 P1
    Xi'^2 - 1             2            0
    sqrt(Pi Pj) Xi'Xj'    Pi Pj        -2 P1
    ====================  ===========  ==============
    """
    powers = [float(p) for p in interferer_powers]
    if not powers:
        raise DomainError("no interferers: use p2p_spec")
    if not P1 > 0 or any(p < 0 for p in powers):
        raise DomainError("powers must be positive")
    if xi < 1:
        raise DomainError(f"xi must be >= 1, got {xi}")
    pt1 = math.fsum(powers) + 1.0
    idx = range(2, len(powers) + 2)
    jac = [P1, 2 * pt1, 0.0]
    var = [xi - 1.0, P1, 2.0]
    labels = ["1-Z^2", "sqrt(P1)X1'Z", "X1'^2-1"]
    for i, p in zip(idx, powers):
        jac.append(2 * pt1); var.append(P1 * p); labels.append(f"sqrt(P1P{i})X1'X{i}'")
    for i, p in zip(idx, powers):
        jac.append(-2 * P1); var.append(p); labels.append(f"sqrt(P{i})X{i}'Z")
    for i in idx:
        jac.append(0.0); var.append(2.0); labels.append(f"X{i}'^2-1")
    for (i, p), (j, q) in itertools.combinations(zip(idx, powers), 2):
        jac.append(-2 * P1); var.append(p * q); labels.append(f"sqrt(P{i}P{j})X{i}'X{j}'")
    return DeltaSpec(np.array(jac), np.diag(var), tuple(labels))


def normalized_dispersion(sigma2: float, P1: float, P_tilde: float = 0.0) -> float:
    """Scale a statistic variance to a dispersion: divide by (2(Pt+1)(P1+Pt+1))^2."""
    return sigma2 / (2.0 * (P_tilde + 1.0) * (P1 + P_tilde + 1.0)) ** 2


def iid_interference_fourth_moment(xi: float, P_tilde: float) -> float:
    """``E[(X + Z)^4]`` for ``X ~ N(0, Pt)`` independent of ``Z``."""
    return 3.0 * P_tilde**2 + 6.0 * P_tilde + xi


def ks_distance_normal(samples) -> float:
    """Exact one-sample Kolmogorov-Smirnov distance to the standard normal."""
    x = np.sort(np.asarray(samples, dtype=float))
    N = x.size
    F = ndtr(x)
    i = np.arange(1, N + 1)
    return float(max(np.max(i / N - F), np.max(F - (i - 1) / N)))


def ks_critical(trials: int, alpha: float = 0.01) -> float:
    """Upper ``alpha`` quantile of the KS distance for ``trials`` samples."""
    return float(kstwo.isf(alpha, trials))


@dataclass(frozen=True)
class CLTResult:
    n_values: tuple[int, ...]
    distances: tuple[float, ...]
    slope: float | None
    trials: int
    seed: int
    sigma2: float

    def rows(self) -> list[dict]:
        return [{"n": n, "ks_distance": d} for n, d in zip(self.n_values, self.distances)]


def fit_loglog_slope(xs, ys) -> float:
    """Least-squares slope of log(y) against log(x)."""
    return float(np.polyfit(np.log(np.asarray(xs, float)), np.log(np.asarray(ys, float)), 1)[0])


def clt_check(statistic_sampler, sigma2: float, n_values: Sequence[int], trials: int, seed: int,
              workers: int | None = None) -> CLTResult:
    """KS distance between ``stat / sqrt(n sigma2)`` and N(0, 1) for each n.

    ``statistic_sampler(n, stream)`` must return one zero-mean draw of the
    raw statistic. The k-th blocklength uses seed ``seed + k``. A log-log
    decay slope is fitted when more than one n is given.
    """
    if not sigma2 > 0:
        raise DomainError(f"sigma2 must be > 0, got {sigma2}")
    n_values = tuple(int(n) for n in n_values)
    if not n_values:
        raise DomainError("at least one blocklength is required")
    dists = []
    for k, n in enumerate(n_values):
        s = sample_statistic(statistic_sampler, n, trials, seed + k, workers)
        dists.append(ks_distance_normal(s / math.sqrt(n * sigma2)))
    slope = fit_loglog_slope(n_values, dists) if len(n_values) > 1 else None
    return CLTResult(n_values, tuple(dists), slope, trials, seed, sigma2)


class NormalSumSampler:
    """Sum of ``n`` i.i.d. standard normals: exactly N(0, n)."""

    def __call__(self, n: int, stream) -> float:
        return float(np.sum(stream.generator.standard_normal(n)))
