"""Closed-form capacity, dispersion and normal-approximation quantities.

All rates are in nats and dispersions in nats^2 per channel use.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np
from scipy.special import erfcx

from .errors import DomainError, UnsupportedError
from .sampling import CodebookType

_SQRT2 = math.sqrt(2.0)
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)

# rational approximation to the standard normal quantile (|rel err| < 1.2e-9)
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425


def gaussian_q(x):
    """Standard normal tail ``Pr[N(0,1) > x]``.

    Evaluated as ``erfcx(x/sqrt2) * exp(-x^2/2) / 2`` with the exponential
    taken in extended precision, so the far upper tail stays positive
    (Q(40) ~ 3.7e-350). Returns ``numpy.longdouble``.
    """
    x = np.asarray(x, dtype=float)
    a = np.abs(x)
    upper = 0.5 * erfcx(a / _SQRT2) * np.exp(-np.square(a.astype(np.longdouble)) / 2)
    out = np.where(x < 0, np.longdouble(1.0) - upper, upper)
    return out[()] if out.ndim == 0 else out


def log_gaussian_q(x):
    """``log Q(x)``, accurate in both tails."""
    x = np.asarray(x, dtype=float)
    upper = np.log(0.5 * erfcx(x / _SQRT2)) - 0.5 * x * x
    lower = np.log1p(-0.5 * erfcx(np.abs(x) / _SQRT2) * np.exp(-0.5 * x * x))
    out = np.where(x >= 0, upper, lower)
    return out[()] if out.ndim == 0 else out


def _phi_inv_lower(p):
    # quantile for p <= 1/2 (returns a value <= 0)
    if p < _P_LOW:
        q = math.sqrt(-2.0 * math.log(p))
        num = ((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]
        den = (((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0
        return num / den
    q = p - 0.5
    r = q * q
    num = (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q
    den = ((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0
    return num / den


def _q_inv_upper(p):
    # Q^{-1}(p) for 0 < p <= 1/2, one Newton step on Q
    x = -_phi_inv_lower(p)
    mills = 0.5 * erfcx(x / _SQRT2) * math.exp(_LOG_SQRT_2PI)  # Q(x)/phi(x)
    ratio = math.exp(math.log(p) + 0.5 * x * x + _LOG_SQRT_2PI)  # p/phi(x)
    return x + (mills - ratio)


def gaussian_q_inv(p: float) -> float:
    """Inverse of :func:`gaussian_q` on (0, 1)."""
    p = float(p)
    if not 0.0 < p < 1.0:
        raise DomainError(f"Q^-1 needs 0 < p < 1, got {p!r}")
    if p <= 0.5:
        return _q_inv_upper(p)
    return -_q_inv_upper(1.0 - p)


def _nonneg(name, value):
    if np.any(np.asarray(value) < 0):
        raise DomainError(f"{name} must be >= 0, got {value!r}")


def capacity(P):
    """Gaussian capacity 0.5 log(1 + P)."""
    _nonneg("power", P)
    return 0.5 * np.log1p(P)


def v_gauss(P):
    """AWGN dispersion P(P+2) / (2 (P+1)^2)."""
    _nonneg("power", P)
    return P * (P + 2.0) / (2.0 * (P + 1.0) ** 2)


def _check_xi(xi):
    if np.any(np.asarray(xi) < 1.0):
        raise DomainError(f"fourth moment xi must be >= 1, got {xi!r}")


def v_shell(P, xi):
    """Shell-codebook dispersion under noise with fourth moment ``xi``."""
    _nonneg("power", P)
    _check_xi(xi)
    return (P * P * (xi - 1.0) + 4.0 * P) / (4.0 * (P + 1.0) ** 2)


def v_iid(P, xi):
    """I.i.d.-codebook dispersion; exceeds :func:`v_shell` by 0.5 (P/(P+1))^2."""
    _nonneg("power", P)
    _check_xi(xi)
    return (P * P * (xi + 1.0) + 4.0 * P) / (4.0 * (P + 1.0) ** 2)


def sinr(P1: float, interferer_powers: Sequence[float] = ()) -> tuple[float, float]:
    """Return ``(P_bar, P_tilde)``: the SINR and the total interference power."""
    _nonneg("interferer power", list(interferer_powers))
    p_tilde = math.fsum(interferer_powers)
    return P1 / (1.0 + p_tilde), p_tilde


def xi_prime(xi, P_tilde):
    """Normalized fourth moment of i.i.d. Gaussian interference plus noise."""
    _check_xi(xi)
    _nonneg("interference power", P_tilde)
    return (3.0 * P_tilde**2 + 6.0 * P_tilde + xi) / (P_tilde + 1.0) ** 2


def _pair_sum(powers: Sequence[float]) -> float:
    """sum_{i<j} P_i P_j."""
    total = 0.0
    acc = 0.0
    for p in powers:
        total += acc * p
        acc += p
    return total


def v_shell_interference(P1: float, interferer_powers: Sequence[float], xi: float) -> float:
    """Dispersion with shell codebooks at the intended and all interfering senders."""
    _check_xi(xi)
    _nonneg("interferer power", list(interferer_powers))
    if not P1 > 0:
        raise DomainError(f"P1 must be > 0, got {P1}")
    pt = math.fsum(interferer_powers)
    num = (P1 * P1 * (xi - 1.0 + 4.0 * pt) + 4.0 * P1 * (pt + 1.0) ** 3
           + 4.0 * P1 * P1 * _pair_sum(interferer_powers))
    return num / (4.0 * (pt + 1.0) ** 2 * (P1 + pt + 1.0) ** 2)


def info_density(x, y, P):
    """Per-symbol Gaussian-channel information density used as the NN metric."""
    if not P > 0:
        raise DomainError(f"power must be > 0, got {P}")
    return 0.5 * np.log1p(P) + y * y / (2.0 * (P + 1.0)) - (y - x) ** 2 / 2.0


def info_density_n(x, y, P) -> float:
    """Sum of :func:`info_density` over the symbols of ``x`` and ``y``."""
    return float(np.sum(info_density(np.asarray(x, float), np.asarray(y, float), P)))


def normal_approx_log_m(n: int, epsilon: float, capacity: float, dispersion: float) -> float:
    """``n C - sqrt(n V) Q^{-1}(eps)`` in nats; the O(log n) term is omitted."""
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    if dispersion < 0:
        raise DomainError(f"dispersion must be >= 0, got {dispersion}")
    return n * capacity - math.sqrt(n * dispersion) * gaussian_q_inv(epsilon)


@dataclass(frozen=True)
class DispersionReport:
    codebook: str
    interferer_codebook: str | None
    capacity_nats_per_use: float
    dispersion_nats2_per_use: float
    sinr: float | None
    xi_effective: float
    log_m_approx: float
    n: int
    epsilon: float
    third_order_term: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)


def scenario_dispersion(P1: float, interferer_powers: Sequence[float], xi: float,
                        codebook=CodebookType.SHELL,
                        interferer_codebook=CodebookType.SHELL) -> tuple[float, float, float]:
    """Return ``(capacity, dispersion, xi_effective)`` for a scenario.

    Combinations: shell/shell uses the shell interference dispersion;
    shell/iid and iid/iid treat the (i.i.d. Gaussian) interference plus
    noise as unit-power noise with fourth moment ``xi'``. An i.i.d.
    intended codebook against shell interferers is not characterized.
    """
    codebook = CodebookType(codebook)
    interferer_codebook = CodebookType(interferer_codebook)
    p_bar, p_tilde = sinr(P1, interferer_powers)
    xi_eff = xi_prime(xi, p_tilde)
    cap = capacity(p_bar)
    if not interferer_powers:
        v = v_shell(P1, xi) if codebook is CodebookType.SHELL else v_iid(P1, xi)
    elif codebook is CodebookType.SHELL and interferer_codebook is CodebookType.SHELL:
        v = v_shell_interference(P1, interferer_powers, xi)
        xi_eff = xi
    elif codebook is CodebookType.SHELL:
        v = v_shell(p_bar, xi_eff)
    elif interferer_codebook is CodebookType.IID:
        v = v_iid(p_bar, xi_eff)
    else:
        raise UnsupportedError("dispersion of an i.i.d. intended codebook under shell interference "
                               "is not characterized")
    return float(cap), float(v), float(xi_eff)


def dispersion_report(P1: float, interferer_powers: Sequence[float], xi: float, n: int,
                      epsilon: float, codebook=CodebookType.SHELL,
                      interferer_codebook=CodebookType.SHELL) -> DispersionReport:
    codebook = CodebookType(codebook)
    interferer_codebook = CodebookType(interferer_codebook)
    if not 0.0 < epsilon < 1.0:
        raise DomainError(f"epsilon must lie in (0, 1), got {epsilon}")
    cap, v, xi_eff = scenario_dispersion(P1, interferer_powers, xi, codebook, interferer_codebook)
    p_bar, _ = sinr(P1, interferer_powers)
    return DispersionReport(
        codebook=codebook.value,
        interferer_codebook=interferer_codebook.value if interferer_powers else None,
        capacity_nats_per_use=cap,
        dispersion_nats2_per_use=v,
        sinr=p_bar if interferer_powers else None,
        xi_effective=xi_eff,
        log_m_approx=normal_approx_log_m(n, epsilon, cap, v),
        n=n,
        epsilon=epsilon,
    )


def interference_curves(P1: float, num_interferers: Sequence[int], interferer_power: float,
                        xi: float) -> list[dict]:
    """Dispersion versus number of equal-power interferers.

    Each row holds the shell-interference dispersion, the i.i.d. dispersion
    at the SINR with effective kurtosis, and the shell dispersion at the SINR
    (intended shell code, i.i.d. interferers).
    """
    rows = []
    for k in num_interferers:
        powers = [interferer_power] * int(k)
        p_bar, p_tilde = sinr(P1, powers)
        xe = xi_prime(xi, p_tilde)
        rows.append({
            "num_interferers": int(k),
            "p_bar": p_bar,
            "capacity": float(capacity(p_bar)),
            "v_shell_interference": v_shell_interference(P1, powers, xi),
            "v_iid_sinr": float(v_iid(p_bar, xe)),
            "v_shell_sinr": float(v_shell(p_bar, xe)),
        })
    return rows


def shell_vs_iid_interference_ordering(rows: Sequence[dict]) -> dict:
    """Summarize where shell interference beats i.i.d. interference."""
    shell_better = [r["num_interferers"] for r in rows
                    if r["v_shell_interference"] < r["v_shell_sinr"]]
    iid_better = [r["num_interferers"] for r in rows
                  if r["v_shell_interference"] > r["v_shell_sinr"]]
    crossing = None
    for prev, cur in zip(rows, rows[1:]):
        d0 = prev["v_shell_interference"] - prev["v_shell_sinr"]
        d1 = cur["v_shell_interference"] - cur["v_shell_sinr"]
        if d0 * d1 < 0:
            crossing = cur["num_interferers"]
            break
    return {"shell_interference_smaller": shell_better,
            "iid_interference_smaller": iid_better,
            "first_sign_change_at": crossing}
