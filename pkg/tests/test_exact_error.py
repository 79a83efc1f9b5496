import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nndisp.analytics import capacity
from nndisp.errors import DegenerateInputError, DomainError
from nndisp.exact_error import (EmpiricalPowers, conditional_error, conditional_error_log, exponent_taylor_ref,
                                ld_exponent, ld_objective, log_psi_iid, log_psi_shell, log_shell_tail,
                                psi_iid, psi_shell, shell_log_psi_exponent, shell_tail, shell_tail_quadrature,
                                shell_threshold, typical_radii)
from nndisp.sampling import RandomStream, sample_iid_batch, sample_shell_batch

# log tail values from 50-digit mpmath incomplete beta
SHELL_ORACLE = [
    ((1.0, 8, 1.0), -1.74120896160070804),
    ((2.0, 8, 1.0), -4.0999954907728960913),
    ((30.0, 1000, 1.0), -1154.4612508348331975),
    ((80.0, 10000, 1.0), -5113.0464084404905149),
]


def test_shell_tail_edges():
    assert float(shell_tail(0.0, 9, 2.0)) == pytest.approx(0.5, abs=1e-15)
    r = math.sqrt(9 * 2.0)
    assert float(shell_tail(r, 9, 2.0)) == 0.0
    assert float(shell_tail(-r, 9, 2.0)) == 1.0
    assert float(shell_tail(r + 1, 9, 2.0)) == 0.0
    assert float(shell_tail(-r - 1, 9, 2.0)) == 1.0


@pytest.mark.parametrize("args,ref", SHELL_ORACLE)
def test_shell_tail_oracle(args, ref):
    assert float(log_shell_tail(*args)) == pytest.approx(ref, rel=1e-12)


@pytest.mark.parametrize("n", [2, 3, 5, 8, 30])
def test_shell_tail_matches_quadrature(n):
    for t in np.linspace(-0.95, 0.95, 9) * math.sqrt(n * 1.5):
        assert float(shell_tail(t, n, 1.5)) == pytest.approx(shell_tail_quadrature(t, n, 1.5), abs=1e-11)


def test_shell_tail_needs_n_two():
    with pytest.raises(DomainError):
        shell_tail(0.1, 1, 1.0)


def test_shell_tail_monte_carlo():
    X = sample_shell_batch(10**6, 8, 1.0, RandomStream(31, 0))
    p = float(shell_tail(1.0, 8, 1.0))
    freq = np.mean(X[:, 0] >= 1.0)
    assert abs(freq - p) <= 5 * math.sqrt(p * (1 - p) / 10**6)


def test_psi_shell_monte_carlo_center():
    n, P = 8, 1.0
    pw = EmpiricalPowers(P + 1, 1.0, n, P)
    assert float(shell_threshold(pw)) == pytest.approx(math.sqrt(n * (P + 1)) / 2)
    p = float(psi_shell(pw))
    # competitor at least as close as x: <X', y> >= (|y|^2 + nP - |z|^2)/2, y along e1
    X = sample_shell_batch(10**6, n, P, RandomStream(32, 0))
    freq = np.mean(X[:, 0] >= math.sqrt(n * (P + 1)) / 2)
    assert abs(freq - p) <= 5 * math.sqrt(p * (1 - p) / 10**6)


def test_psi_shell_threshold_below_support():
    pw = EmpiricalPowers(1.0, 30.0, 8, 1.0)
    assert float(shell_threshold(pw)) <= -math.sqrt(8)
    assert float(psi_shell(pw)) == 1.0


def test_psi_shell_degenerate():
    with pytest.raises(DegenerateInputError):
        psi_shell(EmpiricalPowers(0.0, 1.0, 8, 1.0))


def test_psi_iid_monte_carlo():
    n, P, py, pz = 8, 1.0, 2.0, 1.0
    p = float(psi_iid(EmpiricalPowers(py, pz, n, P)))
    y = np.zeros(n)
    y[0] = math.sqrt(n * py)
    X = sample_iid_batch(10**6, n, P, RandomStream(33, 0))
    d = np.einsum("ij,ij->i", X - y, X - y)
    freq = np.mean(d <= n * pz)
    assert abs(freq - p) <= 5 * math.sqrt(p * (1 - p) / 10**6)


def test_psi_iid_edges():
    assert float(psi_iid(EmpiricalPowers(2.0, 0.0, 8, 1.0))) == 0.0
    from scipy import stats
    assert float(psi_iid(EmpiricalPowers(0.0, 1.3, 6, 2.0))) == pytest.approx(stats.chi2.cdf(6 * 1.3 / 2.0, 6), rel=1e-12)


@given(st.integers(2, 400), st.floats(0.1, 10), st.floats(0.2, 8), st.floats(0.0, 8), st.floats(0.0, 1.0))
def test_psi_monotone_in_pz(n, P, py, pz, dz):
    a = EmpiricalPowers(py, pz, n, P)
    b = EmpiricalPowers(py, pz + dz, n, P)
    for f in (log_psi_shell, log_psi_iid):
        va, vb = float(f(a)), float(f(b))
        assert va <= 0.0 and vb <= 0.0
        assert vb >= va - 1e-12 * max(1.0, abs(va))


def test_conditional_error_examples():
    assert float(conditional_error(0.3, 1)) == 0.0
    assert float(conditional_error(1e-3, 2)) == pytest.approx(1e-3, rel=1e-15)
    # 50-digit reference for 1 - (1 - 1e-9)^(10^6 - 1)
    assert float(conditional_error(1e-9, 10**6)) == pytest.approx(0.00099949916812400775032, rel=1e-12)
    assert float(conditional_error(1.0, 5)) == 1.0
    assert float(conditional_error(0.0, 5)) == 0.0


def test_conditional_error_huge_m_in_log_domain():
    # M = e^2000 cannot be formed as a float
    v = conditional_error_log(-2000.0 - math.log(3.0), 2000.0)
    assert float(v) == pytest.approx(-math.expm1(-1 / 3), rel=1e-9)


@given(st.floats(0, 1), st.floats(0, 1), st.floats(0, 40), st.floats(0, 40))
def test_conditional_error_monotone(p1, p2, l1, l2):
    p1, p2 = sorted((p1, p2))
    l1, l2 = sorted((l1, l2))
    a = float(conditional_error(p1, math.exp(l1)))
    b = float(conditional_error(p2, math.exp(l1)))
    c = float(conditional_error(p1, math.exp(l2)))
    assert 0.0 <= a <= 1.0
    assert b >= a - 1e-15
    assert c >= a - 1e-15


def test_conditional_error_large_psi_bound():
    # psi >= n/(M-1) with M = e^{alpha n}: error >= 1 - e^{-n gamma}
    n, alpha, gamma = 50, 0.2, 0.5
    log_m = alpha * n
    log_psi = math.log(n) - math.log(math.expm1(log_m))
    assert float(conditional_error_log(log_psi, log_m)) >= 1 - math.exp(-n * gamma)


def test_conditional_error_domain():
    with pytest.raises(DomainError):
        conditional_error(1.2, 3)
    with pytest.raises(DomainError):
        conditional_error(0.2, 0.5)


@pytest.mark.parametrize("P", [0.5, 1.0, 4.0])
def test_ld_exponent_center(P):
    r = ld_exponent(EmpiricalPowers(P + 1, 1.0, 10, P))
    assert r.s_star == pytest.approx(P / 2, abs=1e-14)
    assert r.exponent == pytest.approx(capacity(P), abs=1e-12)


def test_ld_exponent_degenerate():
    with pytest.raises(DegenerateInputError):
        ld_exponent(EmpiricalPowers(2.0, 0.0, 10, 1.0))


def _golden_max(f, a, b, iters=200):
    # golden-section search; float64 cannot resolve a flat maximum to 1e-8, so f is evaluated in mpmath
    g = (mp.sqrt(5) - 1) / 2
    a, b = mp.mpf(a), mp.mpf(b)
    c, d = b - g * (b - a), a + g * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = f(d)
    return (a + b) / 2


def test_s_star_matches_golden_section():
    mp.mp.dps = 40
    rng = np.random.default_rng(5)
    for _ in range(100):
        P = rng.uniform(0.2, 5)
        py, pz = P + 1 + rng.uniform(-0.3, 0.3), 1 + rng.uniform(-0.3, 0.3)
        pw = EmpiricalPowers(py, pz, 100, P)
        r = ld_exponent(pw)

        def obj(s):
            return py * s / (P * (1 + 2 * s)) + mp.log(1 + 2 * s) / 2 - s * pz / P

        s_num = _golden_max(obj, 0.0, 20.0)
        assert r.s_star == pytest.approx(float(s_num), abs=1e-8)
        assert r.exponent == pytest.approx(float(obj(s_num)), abs=1e-12)
        assert float(ld_objective(float(s_num), pw)) == pytest.approx(float(obj(s_num)), abs=1e-13)


def test_ld_objective_concave():
    pw = EmpiricalPowers(2.3, 0.8, 10, 1.4)
    s = np.linspace(0, 10, 500)
    v = ld_objective(s, pw)
    assert np.all(np.diff(v, 2) < 0)


def test_taylor_reference():
    pw = EmpiricalPowers(2.0, 1.0, 10, 1.0)
    assert float(exponent_taylor_ref(pw)) == pytest.approx(capacity(1.0))
    deltas = [0.04, 0.02, 0.01]
    res = [abs(ld_exponent(EmpiricalPowers(2.0 + d, 1.0, 10, 1.0)).exponent
               - float(exponent_taylor_ref(EmpiricalPowers(2.0 + d, 1.0, 10, 1.0)))) for d in deltas]
    c = max(r / d**2 for r, d in zip(res, deltas))
    assert all(r <= c * d**2 for r, d in zip(res, deltas))
    slope = np.polyfit(np.log(deltas), np.log(res), 1)[0]
    assert slope == pytest.approx(2.0, abs=0.2)


@pytest.mark.parametrize("P", [0.5, 1.0, 3.0])
def test_shell_exponent_center(P):
    pw = EmpiricalPowers(P + 1, 1.0, 10, P)
    assert float(shell_log_psi_exponent(pw)) == pytest.approx(capacity(P), abs=1e-14)


def test_shell_exponent_linearization_and_monotonicity():
    P = 1.0
    grad_y = (float(shell_log_psi_exponent(EmpiricalPowers(2 + 1e-6, 1, 10, P)))
              - float(shell_log_psi_exponent(EmpiricalPowers(2 - 1e-6, 1, 10, P)))) / 2e-6
    grad_z = (float(shell_log_psi_exponent(EmpiricalPowers(2, 1 + 1e-6, 10, P)))
              - float(shell_log_psi_exponent(EmpiricalPowers(2, 1 - 1e-6, 10, P)))) / 2e-6
    assert grad_y == pytest.approx(1 / (2 * (P + 1)), abs=1e-7)
    assert grad_z == pytest.approx(-0.5, abs=1e-7)
    vals = [float(shell_log_psi_exponent(EmpiricalPowers(2, z, 10, P))) for z in np.linspace(0.9, 1.1, 11)]
    assert np.all(np.diff(vals) < 0)


def test_shell_exponent_domain():
    with pytest.raises(DomainError):
        shell_log_psi_exponent(EmpiricalPowers(1.0, 20.0, 10, 1.0))


def test_shell_exponent_matches_tail_rate():
    ns = [100, 1000, 10000]
    gaps = []
    for n in ns:
        pw = EmpiricalPowers(2.0, 1.0, n, 1.0)
        gaps.append(-float(log_psi_shell(pw)) / n - float(shell_log_psi_exponent(pw)))
    ratios = [g / (math.log(n) / n) for g, n in zip(gaps, ns)]
    assert all(0.2 < r < 1.0 for r in ratios)
    slope = np.polyfit(np.log(ns), np.log(gaps), 1)[0]
    assert -1.0 < slope < -0.7


def test_typical_radii():
    ry, rz = typical_radii(1.0, 3.0, 100)
    assert ry == pytest.approx(math.sqrt(6 * math.log(100) / 100))
    assert rz == pytest.approx(math.sqrt(2 * math.log(100) / 100))
    assert typical_radii(1.0, 1.0, 100)[1] == 0.0


def test_empirical_powers_validation():
    with pytest.raises(DomainError):
        EmpiricalPowers(1.0, 1.0, 0, 1.0)
    with pytest.raises(DomainError):
        EmpiricalPowers(-1.0, 1.0, 3, 1.0)
    pw = EmpiricalPowers.from_vectors([1.0, 0.0], [1.0, 2.0], 0.5)
    assert (pw.p_y_hat, pw.p_z_hat, pw.n) == (2.5, 2.0, 2)
