"""Exact ensemble error given the empirical output and noise powers.

For a transmitted codeword ``x`` and output ``y`` the chance that one
independent codeword lies at least as close to ``y`` as ``x`` depends only
on ``P_Y = |y|^2/n`` and ``P_Z = |y - x|^2/n``. This module evaluates that
probability for shell and i.i.d. codebooks, the resulting
``1 - (1 - psi)^(M-1)`` error, and the large-deviation exponents that
approximate it.

Array inputs broadcast; the ``log_*`` variants stay finite where the
probabilities underflow.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import gammaln

from .errors import DegenerateInputError, DomainError
from .specfun import log_betainc, log_ncx2_cdf

_LOG_HALF = math.log(0.5)


@dataclass(frozen=True)
class EmpiricalPowers:
    """Per-symbol powers of the channel output and of the noise seen by the decoder.

    Fields may be arrays of equal shape for batched evaluation.
    """

    p_y_hat: float | np.ndarray
    p_z_hat: float | np.ndarray
    n: int
    P: float

    def __post_init__(self):
        if self.n < 1:
            raise DomainError(f"n must be >= 1, got {self.n}")
        if not self.P > 0:
            raise DomainError(f"power must be > 0, got {self.P}")
        if np.any(np.asarray(self.p_y_hat) < 0) or np.any(np.asarray(self.p_z_hat) < 0):
            raise DomainError("empirical powers must be nonnegative")

    @classmethod
    def from_vectors(cls, x, y, P: float) -> EmpiricalPowers:
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        n = y.shape[-1]
        z = y - x
        return cls(float(y @ y) / n, float(z @ z) / n, n, P)


@dataclass(frozen=True)
class ExponentResult:
    s_star: float
    exponent: float


def log_shell_tail(t, n: int, P: float):
    """``log Pr[X_1 >= t]`` for the first coordinate of a uniform point on the
    sphere of radius sqrt(n P).

    ``X_1^2 / (n P)`` is Beta(1/2, (n-1)/2), so for ``t >= 0`` the tail is
    ``I_{1-u}((n-1)/2, 1/2) / 2`` with ``u = t^2/(nP)``.
    """
    if n < 2:
        raise DomainError(f"shell marginal density needs n >= 2, got {n}")
    if not P > 0:
        raise DomainError(f"power must be > 0, got {P}")
    t = np.asarray(t, dtype=float)
    r2 = n * P
    a = np.abs(t)
    edge = a >= math.sqrt(r2)
    u = np.where(edge, 1.0, np.minimum(a * a / r2, 1.0))
    one_minus_u = np.where(edge, 0.0, np.maximum((r2 - a * a) / r2, 0.0))
    log_upper = _LOG_HALF + log_betainc(0.5 * (n - 1), 0.5, one_minus_u, u)
    log_upper = np.asarray(log_upper)
    # negative thresholds: 1 - tail(|t|); tail(|t|) <= 1/2 so log1p is safe
    out = np.where(t >= 0, log_upper, np.log1p(-np.exp(log_upper)))
    return out[()] if out.ndim == 0 else out


def shell_tail(t, n: int, P: float):
    """``Pr[X_1 >= t]`` for a shell codeword coordinate; see :func:`log_shell_tail`."""
    return np.exp(log_shell_tail(t, n, P))


def shell_density(x, n: int, P: float):
    """Density of one coordinate of a shell codeword (zero outside the support)."""
    x = np.asarray(x, dtype=float)
    log_c = gammaln(n / 2) - gammaln((n - 1) / 2) - 0.5 * math.log(math.pi * n * P)
    inside = np.clip(1.0 - x * x / (n * P), 0.0, None)
    with np.errstate(divide="ignore"):
        out = np.where(x * x <= n * P, np.exp(log_c + 0.5 * (n - 3) * np.log(inside)), 0.0)
    return out[()] if out.ndim == 0 else out


def shell_tail_quadrature(t: float, n: int, P: float) -> float:
    """Debug oracle: integrate the coordinate density from ``t`` to the edge.

    Uses ``x = sqrt(nP) sin(theta)``, which turns the density into the
    smooth ``cos(theta)^(n-2)`` up to a constant.
    """
    if n < 2:
        raise DomainError(f"shell marginal density needs n >= 2, got {n}")
    r = math.sqrt(n * P)
    if t >= r:
        return 0.0
    if t <= -r:
        return 1.0
    log_c = math.lgamma(n / 2) - math.lgamma((n - 1) / 2) - 0.5 * math.log(math.pi)
    val, _ = integrate.quad(lambda th: math.cos(th) ** (n - 2), math.asin(t / r), 0.5 * math.pi,
                            epsabs=1e-14, epsrel=1e-12, limit=200)
    return math.exp(log_c) * val


def shell_threshold(powers: EmpiricalPowers):
    """Coordinate threshold a competing shell codeword must exceed."""
    py = np.asarray(powers.p_y_hat, dtype=float)
    if np.any(py <= 0):
        raise DegenerateInputError("p_y_hat = 0 leaves the shell threshold undefined")
    n, P = powers.n, powers.P
    return n * (py + P - np.asarray(powers.p_z_hat, float)) / (2.0 * np.sqrt(n * py))


def log_psi_shell(powers: EmpiricalPowers):
    return log_shell_tail(shell_threshold(powers), powers.n, powers.P)


def psi_shell(powers: EmpiricalPowers):
    """Chance a random shell codeword is no farther from ``y`` than ``x``."""
    return np.exp(log_psi_shell(powers))


def log_psi_iid(powers: EmpiricalPowers):
    n, P = powers.n, powers.P
    x = n * np.asarray(powers.p_z_hat, float) / P
    nc = n * np.asarray(powers.p_y_hat, float) / P
    return log_ncx2_cdf(x, n, nc)


def psi_iid(powers: EmpiricalPowers):
    """Chance an i.i.d. N(0, P) codeword is no farther from ``y`` than ``x``.

    ``|X - y|^2 / P`` is noncentral chi-square with ``n`` degrees of freedom
    and noncentrality ``|y|^2 / P``.
    """
    return np.exp(log_psi_iid(powers))


def log_m_minus_one(log_m):
    """``log(M - 1)`` for real ``M = exp(log_m) >= 1``; ``-inf`` at M = 1."""
    log_m = np.asarray(log_m, dtype=float)
    if np.any(log_m < 0):
        raise DomainError("log M must be >= 0")
    with np.errstate(divide="ignore"):
        out = np.where(log_m > 30.0, log_m + np.log1p(-np.exp(-log_m)), np.log(np.expm1(np.minimum(log_m, 30.0))))
    return out[()] if out.ndim == 0 else out


def conditional_error_log(log_psi, log_m):
    """``1 - (1 - psi)^(M - 1)`` from ``log psi`` and ``log M``.

    Computed as ``-expm1((M-1) log1p(-psi))`` with the product formed in
    log space, so it neither overflows for huge M nor cancels for tiny psi.
    """
    log_psi = np.asarray(log_psi, dtype=float)
    lm1 = log_m_minus_one(log_m)
    psi = np.exp(log_psi)
    with np.errstate(divide="ignore", invalid="ignore"):
        # log1p(-psi)/(-psi) -> 1 as psi -> 0
        ratio = np.where(psi < 1e-8, 1.0 + 0.5 * psi, -np.log1p(-psi) / psi)
        ratio = np.where(psi >= 1.0, np.inf, ratio)
        log_rate = lm1 + log_psi + np.log(ratio)
    with np.errstate(over="ignore"):
        # exp overflow -> inf -> error 1, the correct limit
        out = np.where(np.isneginf(lm1) | np.isneginf(log_psi), 0.0, -np.expm1(-np.exp(log_rate)))
    return out[()] if out.ndim == 0 else out


def conditional_error(psi, M):
    """Ensemble error given the per-competitor probability ``psi`` and ``M`` messages."""
    psi = np.asarray(psi, dtype=float)
    if np.any((psi < 0) | (psi > 1)):
        raise DomainError("psi must lie in [0, 1]")
    if np.any(np.asarray(M) < 1):
        raise DomainError("M must be >= 1")
    with np.errstate(divide="ignore"):
        return conditional_error_log(np.log(psi), np.log(np.asarray(M, dtype=float)))


def _ld_objective(s, py, pz, P):
    return py * s / (P * (1.0 + 2.0 * s)) + 0.5 * np.log1p(2.0 * s) - s * pz / P


def ld_objective(s, powers: EmpiricalPowers):
    """Concave objective whose supremum over s >= 0 is the i.i.d. exponent."""
    return _ld_objective(np.asarray(s, float), powers.p_y_hat, powers.p_z_hat, powers.P)


def ld_exponent(powers: EmpiricalPowers) -> ExponentResult:
    """Large-deviation exponent of the i.i.d. competitor probability and its maximizer."""
    py, pz, P = float(powers.p_y_hat), float(powers.p_z_hat), powers.P
    if pz <= 0:
        raise DegenerateInputError("p_z_hat = 0 leaves the exponent maximizer undefined")
    s = (P - 2.0 * pz + math.sqrt(P * P + 4.0 * py * pz)) / (4.0 * pz)
    s = max(s, 0.0)
    return ExponentResult(s, float(_ld_objective(s, py, pz, P)))


def exponent_taylor_ref(powers: EmpiricalPowers):
    """Linearization ``C(P) + P_Y/(2(P+1)) - P_Z/2`` of the exponents about (P+1, 1)."""
    P = powers.P
    return 0.5 * math.log1p(P) + np.asarray(powers.p_y_hat) / (2.0 * (P + 1.0)) - np.asarray(powers.p_z_hat) / 2.0


def shell_log_psi_exponent(powers: EmpiricalPowers):
    """``-0.5 log(1 - (P_Y + P - P_Z)^2 / (4 P P_Y))``, the shell exponent."""
    py = np.asarray(powers.p_y_hat, float)
    pz = np.asarray(powers.p_z_hat, float)
    P = powers.P
    arg = 1.0 - (py + P - pz) ** 2 / (4.0 * P * py)
    if np.any(arg <= 0):
        raise DomainError("powers outside the regime where the shell exponent is defined")
    out = -0.5 * np.log(arg)
    return out[()] if np.ndim(out) == 0 else out


def typical_radii(P: float, xi: float, n: int) -> tuple[float, float]:
    """Half-widths of the typical intervals for ``P_Y`` and ``P_Z``.

    ``P_Y`` uses ``c_y = xi - 1 + 4P`` (its per-symbol variance) and ``P_Z``
    uses ``c_z = xi - 1``.
    """
    c_y = xi - 1.0 + 4.0 * P
    c_z = xi - 1.0
    ln = math.log(n) / n
    return math.sqrt(c_y * ln), math.sqrt(c_z * ln)
