"""Monte Carlo estimators for the ensemble error probability and the
statistics behind the dispersion results.

The primary estimator is semi-analytic: each trial samples the transmitted
codeword, the interferers and the noise, and the random competing codewords
are averaged out exactly through the conditional error given the empirical
powers. Brute-force nearest-neighbor decoding over a freshly drawn codebook
is kept as a small-M oracle.
"""
from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from . import exact_error
from .errors import DomainError, GuardError, UnsupportedError
from .noise import NoiseModel, moments, sample_noise
from .parallel import fsum_mean, mean_and_se, run_trials
from .sampling import CodebookKind, CodebookType, sample_iid_batch, sample_shell_batch

BRUTE_FORCE_MAX_M = 2**14


class Method(str, enum.Enum):
    SEMI_ANALYTIC = "semi_analytic"
    BRUTE_FORCE = "brute_force"
    STATISTIC = "statistic"


@dataclass(frozen=True)
class Scenario:
    """Intended sender, interfering senders and the additive noise law."""

    intended: CodebookKind
    interferers: tuple[CodebookKind, ...] = ()
    noise: NoiseModel = field(default_factory=NoiseModel.gaussian)

    def __post_init__(self):
        object.__setattr__(self, "interferers", tuple(self.interferers))

    @classmethod
    def point_to_point(cls, kind, P: float, noise: NoiseModel | None = None) -> Scenario:
        return cls(CodebookKind(kind, P), (), noise or NoiseModel.gaussian())

    @property
    def P1(self) -> float:
        return self.intended.power

    @property
    def interferer_powers(self) -> list[float]:
        return [c.power for c in self.interferers]

    @property
    def P_tilde(self) -> float:
        return math.fsum(self.interferer_powers)

    def to_json(self) -> dict:
        return {
            "intended": {"kind": self.intended.kind.value, "power": self.intended.power},
            "interferers": [{"kind": c.kind.value, "power": c.power} for c in self.interferers],
            "noise": self.noise.to_json(),
        }


@dataclass(frozen=True)
class MCEstimate:
    estimate: float
    std_error: float
    trials: int
    seed: int
    method: Method
    params: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["method"] = Method(self.method).value
        return d


def _draw_channel(scenario: Scenario, n: int, stream, noiseless=False):
    # draw order: intended codeword, interferers in order, noise
    x1 = scenario.intended.sample(n, stream)
    w = np.zeros(n)
    for c in scenario.interferers:
        w += c.sample(n, stream)
    if not noiseless:
        w += sample_noise(scenario.noise, n, stream)
    return x1, w


class _PowersKernel:
    """Per trial: empirical powers relative to the intended codeword; per
    chunk: log of the single-competitor probability."""

    def __init__(self, scenario: Scenario, n: int):
        self.scenario = scenario
        self.n = n

    def draw(self, stream):
        x1, w = _draw_channel(self.scenario, self.n, stream)
        y = x1 + w
        return float(y @ y) / self.n, float(w @ w) / self.n

    def finish(self, values):
        powers = exact_error.EmpiricalPowers(values[:, 0], values[:, 1], self.n, self.scenario.P1)
        if self.scenario.intended.kind is CodebookType.SHELL:
            log_psi = exact_error.log_psi_shell(powers)
        else:
            log_psi = exact_error.log_psi_iid(powers)
        return np.column_stack([values, log_psi])


def _check_semi(scenario: Scenario, n: int):
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    if scenario.intended.kind is CodebookType.SHELL and n < 2:
        raise UnsupportedError("semi-analytic shell estimator needs n >= 2")


def sample_log_psi(scenario: Scenario, n: int, trials: int, seed: int,
                   workers: int | None = None) -> np.ndarray:
    """Per-trial ``(P_Y, P_Z, log psi)`` rows, in trial order."""
    _check_semi(scenario, n)
    return run_trials(_PowersKernel(scenario, n), trials, seed, workers)


def semi_analytic_curve(scenario: Scenario, n: int, log_ms: Sequence[float], trials: int,
                        seed: int, workers: int | None = None) -> list[MCEstimate]:
    """Semi-analytic estimates for several message-set sizes sharing one set
    of channel realizations."""
    rows = sample_log_psi(scenario, n, trials, seed, workers)
    out = []
    for log_m in log_ms:
        if log_m < 0:
            raise DomainError(f"log M must be >= 0, got {log_m}")
        pe = exact_error.conditional_error_log(rows[:, 2], log_m)
        est, se = mean_and_se(pe)
        out.append(MCEstimate(est, se, trials, seed, Method.SEMI_ANALYTIC,
                              {"n": n, "log_m": float(log_m)}))
    return out


def simulate_semi_analytic(scenario: Scenario, n: int, log_m: float, trials: int, seed: int,
                           workers: int | None = None) -> MCEstimate:
    """Ensemble error probability with the codebook averaged out exactly.

    ``M = exp(log_m)`` is treated as a real number throughout.
    """
    return semi_analytic_curve(scenario, n, [log_m], trials, seed, workers)[0]


class _BruteForceKernel:
    def __init__(self, scenario: Scenario, n: int, M: int, noiseless: bool):
        self.scenario = scenario
        self.n = n
        self.M = M
        self.noiseless = noiseless

    def draw(self, stream):
        x1, w = _draw_channel(self.scenario, self.n, stream, self.noiseless)
        if self.M == 1:
            return 0.0
        y = x1 + w
        intended = self.scenario.intended
        batch = sample_shell_batch if intended.kind is CodebookType.SHELL else sample_iid_batch
        others = batch(self.M - 1, self.n, intended.power, stream)
        d_true = float(w @ w)
        diff = others - y
        d_other = np.einsum("ij,ij->i", diff, diff)
        # ties count as success; they have probability zero
        return 1.0 if bool(np.any(d_other < d_true)) else 0.0


def simulate_brute_force(scenario: Scenario, n: int, M: int, trials: int, seed: int,
                         workers: int | None = None, noiseless: bool = False) -> MCEstimate:
    """Frequency of nearest-neighbor decoding errors over fresh random codebooks.

    Message 1 is sent; by symmetry of the ensemble this is the average over
    messages. ``noiseless`` zeroes the additive noise (interferers remain).
    """
    M = int(M)
    if M < 1:
        raise DomainError(f"M must be >= 1, got {M}")
    if M > BRUTE_FORCE_MAX_M:
        raise GuardError(f"M = {M} exceeds the brute-force limit {BRUTE_FORCE_MAX_M}; "
                         "use the semi-analytic estimator")
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    errs = run_trials(_BruteForceKernel(scenario, n, M, noiseless), trials, seed, workers)[:, 0]
    est, se = mean_and_se(errs)
    return MCEstimate(est, se, trials, seed, Method.BRUTE_FORCE, {"n": n, "M": M})


class StatisticSampler:
    """Draws the achievability statistic

    ``(P1 + Pt + 1)|W|^2 - (Pt + 1)|X1 + W|^2``, with ``W`` the interference
    plus noise and ``Pt`` the total interferer power. Without interferers it
    equals ``P|Z|^2 - nP - 2<X, Z>``.

    Callable as ``sampler(n, stream)``; picklable for worker processes.
    """

    def __init__(self, scenario: Scenario):
        if scenario.intended.kind is not CodebookType.SHELL:
            raise UnsupportedError("the achievability statistic is defined for a shell intended codebook")
        self.scenario = scenario

    def __call__(self, n: int, stream) -> float:
        x1, w = _draw_channel(self.scenario, n, stream)
        P1 = self.scenario.P1
        pt1 = self.scenario.P_tilde + 1.0
        return P1 * float(w @ w) - pt1 * (float(x1 @ x1) + 2.0 * float(x1 @ w))


class _FixedN:
    def __init__(self, sampler, n):
        self.sampler = sampler
        self.n = n

    def draw(self, stream):
        return self.sampler(self.n, stream)


def sample_statistic(sampler, n: int, trials: int, seed: int, workers: int | None = None) -> np.ndarray:
    return run_trials(_FixedN(sampler, n), trials, seed, workers)[:, 0]


def statistic_variance(scenario: Scenario, n: int, trials: int, seed: int,
                       workers: int | None = None) -> MCEstimate:
    """Per-symbol sample variance of the achievability statistic.

    The standard error uses the variance of the sample variance,
    ``(m4 - s^4 (N-3)/(N-1)) / N``.
    """
    if trials < 4:
        raise DomainError("statistic_variance needs at least 4 trials")
    s = sample_statistic(StatisticSampler(scenario), n, trials, seed, workers)
    m = fsum_mean(s)
    dev2 = (s - m) ** 2
    var = math.fsum(dev2.tolist()) / (trials - 1)
    m4 = fsum_mean(dev2 * dev2)
    var_of_var = max(m4 - var * var * (trials - 3) / (trials - 1), 0.0) / trials
    return MCEstimate(var / n, math.sqrt(var_of_var) / n, trials, seed, Method.STATISTIC,
                      {"n": n, "mean": m})


@dataclass(frozen=True)
class TypicalSetReport:
    n: int
    eta: float
    trials: int
    seed: int
    p_y_violation: float
    p_z_violation: float
    q_violation: float
    total_violation: float
    p_y_radius: float
    p_z_radius: float

    def std_error(self, freq: float) -> float:
        return math.sqrt(freq * (1.0 - freq) / self.trials)

    def to_dict(self) -> dict:
        return asdict(self)


class _ShellPowersKernel:
    def __init__(self, P, noise, n):
        self.scenario = Scenario(CodebookKind.shell(P), (), noise)
        self.n = n

    def draw(self, stream):
        x, z = _draw_channel(self.scenario, self.n, stream)
        y = x + z
        return float(y @ y) / self.n, float(z @ z) / self.n


def q_violation_envelope(P: float, eta: float, n: int, c_prime: float = 1.0) -> float:
    """Chernoff envelope ``exp(-n (2P - eta)^2 / (8P)) + C'/sqrt(n)`` on the
    probability that ``P_Y + P - P_Z <= eta``.

    The bound holds up to an unspecified ``O(1/sqrt(n))`` term; ``c_prime``
    pins its constant.
    """
    if not 0.0 < eta < 2.0 * P:
        raise DomainError(f"eta must lie in (0, 2P) = (0, {2 * P}), got {eta}")
    return math.exp(-n * (2.0 * P - eta) ** 2 / (8.0 * P)) + c_prime / math.sqrt(n)


def typical_set_diagnostic(P: float, noise: NoiseModel, n: int, eta: float, trials: int,
                           seed: int, workers: int | None = None) -> TypicalSetReport:
    """Frequencies with which the empirical powers leave the typical region.

    Components: ``|P_Y - (P+1)|`` beyond its radius, ``|P_Z - 1|`` beyond its
    radius, and ``P_Y + P - P_Z <= eta``; ``total`` counts trials violating
    any of them.
    """
    if not 0.0 < eta < 2.0 * P:
        raise DomainError(f"eta must lie in (0, 2P) = (0, {2 * P}), got {eta}")
    rows = run_trials(_ShellPowersKernel(P, noise, n), trials, seed, workers)
    py, pz = rows[:, 0], rows[:, 1]
    r_y, r_z = exact_error.typical_radii(P, moments(noise).xi, n)
    # slack absorbs rounding when a radius is zero (|Z| = 1 a.s.)
    slack = 1e-12
    out_y = np.abs(py - (P + 1.0)) > r_y + slack
    out_z = np.abs(pz - 1.0) > r_z + slack
    out_q = py + P - pz <= eta
    total = out_y | out_z | out_q
    return TypicalSetReport(n, eta, trials, seed,
                            fsum_mean(out_y), fsum_mean(out_z), fsum_mean(out_q), fsum_mean(total),
                            r_y, r_z)
