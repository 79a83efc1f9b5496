import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nndisp.errors import DomainError, NonNormalizedNoiseError
from nndisp.noise import NoiseKind, NoiseModel, moments, sample_noise
from nndisp.sampling import RandomStream

BUILTINS = {
    "gaussian": (0.0, 1.0, 3.0, 15.0),
    "laplace": (0.0, 1.0, 6.0, 90.0),
    "rademacher": (0.0, 1.0, 1.0, 1.0),
    "uniform": (0.0, 1.0, 9 / 5, 27 / 7),
}


@pytest.mark.parametrize("name,expected", BUILTINS.items())
def test_builtin_moments(name, expected):
    m = moments(NoiseModel.from_name(name))
    assert (m.m1, m.m2, m.xi, m.m6) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize("name", BUILTINS)
def test_empirical_moments_within_5_se(name):
    model = NoiseModel.from_name(name)
    z = sample_noise(model, 10**6, RandomStream(11, 0))
    m = moments(model)
    z2 = z * z
    se2 = z2.std() / math.sqrt(z.size)
    assert abs(z2.mean() - 1.0) <= 5 * se2
    z4 = z2 * z2
    se4 = z4.std() / math.sqrt(z.size)
    assert abs(z4.mean() - m.xi) <= 5 * se4


def test_gaussian_m2_and_uniform_xi_examples():
    g = sample_noise(NoiseModel.gaussian(), 10**6, RandomStream(3, 1))
    assert abs(np.mean(g * g) - 1.0) <= 0.01
    u = sample_noise(NoiseModel.uniform(), 10**6, RandomStream(3, 2))
    assert abs(np.mean(u**4) - 1.8) <= 0.02


def test_rademacher_support():
    z = sample_noise(NoiseModel.rademacher(), 4, RandomStream(0, 0))
    assert set(np.unique(z)) <= {-1.0, 1.0}


def test_uniform_support():
    z = sample_noise(NoiseModel.uniform(), 10**4, RandomStream(0, 0))
    assert np.all(np.abs(z) <= math.sqrt(3))


def test_table_matches_rademacher():
    t = NoiseModel.table([(-1, 0.5), (1, 0.5)])
    assert moments(t) == moments(NoiseModel.rademacher())


def test_table_non_normalized_rejected():
    with pytest.raises(NonNormalizedNoiseError) as e:
        NoiseModel.table([(-2, 0.5), (2, 0.5)])
    assert e.value.category == "non_normalized_noise"


def test_table_probabilities_must_sum_to_one():
    with pytest.raises(DomainError):
        NoiseModel.table([(-1, 0.5), (1, 0.4)])


def test_table_nonzero_mean_allowed():
    # mass 1/4 at -1, 3/4 at 1: E[Z^2] = 1, E[Z] = 1/2
    t = NoiseModel.table([(-1, 0.25), (1, 0.75)])
    m = moments(t)
    assert m.m1 == pytest.approx(0.5)
    assert m.xi == pytest.approx(1.0)


def test_table_sampling_frequencies():
    t = NoiseModel.table([(0.0, 0.5), (math.sqrt(2), 0.5)])
    z = sample_noise(t, 10**5, RandomStream(5, 0))
    frac = np.mean(z > 0)
    assert abs(frac - 0.5) <= 5 * math.sqrt(0.25 / z.size)


def test_table_zero_probability_point_never_drawn():
    t = NoiseModel.table([(-1, 0.5), (0.0, 0.0), (1, 0.5)])
    z = sample_noise(t, 10**4, RandomStream(1, 1))
    assert not np.any(z == 0.0)


def test_json_round_trip(tmp_path):
    t = NoiseModel.table([(-1, 0.5), (1, 0.5)])
    p = tmp_path / "t.json"
    p.write_text(json.dumps(t.to_json()))
    assert NoiseModel.from_json(p) == t
    assert NoiseModel.from_json([[-1, 0.5], [1, 0.5]]) == t


def test_unknown_name():
    with pytest.raises(DomainError):
        NoiseModel.from_name("cauchy")


def test_kind_enum_values():
    assert {k.value for k in NoiseKind} == {"gaussian", "laplace", "rademacher", "uniform", "finite_table"}


@st.composite
def normalized_tables(draw):
    k = draw(st.integers(1, 6))
    vals = draw(st.lists(st.floats(-5, 5, allow_nan=False), min_size=k, max_size=k))
    w = draw(st.lists(st.floats(0.05, 1.0), min_size=k, max_size=k))
    probs = np.array(w) / np.sum(w)
    vals = np.array(vals)
    m2 = float(np.sum(probs * vals**2))
    if m2 < 1e-3:
        vals = vals + 1.0
        m2 = float(np.sum(probs * vals**2))
    vals = vals / math.sqrt(m2)
    # renormalize probabilities exactly enough for the 1e-12 checks
    return list(zip(vals.tolist(), probs.tolist()))


@given(normalized_tables())
def test_constructible_tables_have_xi_at_least_one(pairs):
    try:
        t = NoiseModel.table(pairs)
    except (NonNormalizedNoiseError, DomainError):
        return
    assert t.xi >= 1.0 - 1e-12


@given(normalized_tables())
def test_xi_equals_one_iff_unit_modulus(pairs):
    try:
        t = NoiseModel.table(pairs)
    except (NonNormalizedNoiseError, DomainError):
        return
    unit = all(abs(abs(v) - 1.0) < 1e-6 for v, p in pairs if p > 0)
    if unit:
        assert t.xi == pytest.approx(1.0, abs=1e-9)
    else:
        assert t.xi > 1.0
