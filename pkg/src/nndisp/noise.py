"""Scalar additive-noise laws normalized to unit second moment.

Built-in laws are zero-mean. A finite table may carry a nonzero mean; only
``E[Z^2] = 1`` and finite fourth and sixth moments are required.
"""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DomainError, NonNormalizedNoiseError

NORMALIZATION_TOL = 1e-12

_SQRT3 = math.sqrt(3.0)
_LAPLACE_SCALE = math.sqrt(0.5)


class NoiseKind(str, enum.Enum):
    GAUSSIAN = "gaussian"
    LAPLACE = "laplace"
    RADEMACHER = "rademacher"
    UNIFORM = "uniform"
    FINITE_TABLE = "finite_table"


@dataclass(frozen=True)
class NoiseMoments:
    m1: float
    m2: float
    xi: float
    m6: float


_BUILTIN_MOMENTS = {
    NoiseKind.GAUSSIAN: NoiseMoments(0.0, 1.0, 3.0, 15.0),
    # E[Z^{2k}] = (2k)! b^{2k} with b^2 = 1/2
    NoiseKind.LAPLACE: NoiseMoments(0.0, 1.0, 6.0, 90.0),
    NoiseKind.RADEMACHER: NoiseMoments(0.0, 1.0, 1.0, 1.0),
    # uniform on [-sqrt 3, sqrt 3]: E[Z^{2k}] = 3^k / (2k + 1)
    NoiseKind.UNIFORM: NoiseMoments(0.0, 1.0, 9.0 / 5.0, 27.0 / 7.0),
}


@dataclass(frozen=True)
class NoiseModel:
    """Immutable noise law; safe to share between workers.

    For ``FINITE_TABLE`` the law puts mass ``probs[i]`` on ``support[i]``.
    """

    kind: NoiseKind
    support: tuple[float, ...] = ()
    probs: tuple[float, ...] = ()

    def __post_init__(self):
        kind = NoiseKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind is NoiseKind.FINITE_TABLE:
            support = tuple(float(v) for v in self.support)
            probs = tuple(float(p) for p in self.probs)
            if not support or len(support) != len(probs):
                raise DomainError("finite table needs matching, non-empty support and probabilities")
            if not all(math.isfinite(v) for v in support):
                raise DomainError("finite table support must be finite")
            if any(p < 0 or not math.isfinite(p) for p in probs):
                raise DomainError("finite table probabilities must be nonnegative")
            if abs(math.fsum(probs) - 1.0) > NORMALIZATION_TOL:
                raise DomainError(f"finite table probabilities sum to {math.fsum(probs)!r}, not 1")
            object.__setattr__(self, "support", support)
            object.__setattr__(self, "probs", probs)
        elif self.support or self.probs:
            raise DomainError(f"{kind.value} noise takes no table")
        # raises on non-normalized tables; xi >= 1 follows from Jensen
        m = moments(self)
        if m.xi < 1.0 - NORMALIZATION_TOL:
            raise DomainError(f"fourth moment {m.xi} < 1 is impossible under E[Z^2] = 1")

    @classmethod
    def gaussian(cls) -> NoiseModel:
        return cls(NoiseKind.GAUSSIAN)

    @classmethod
    def laplace(cls) -> NoiseModel:
        return cls(NoiseKind.LAPLACE)

    @classmethod
    def rademacher(cls) -> NoiseModel:
        return cls(NoiseKind.RADEMACHER)

    @classmethod
    def uniform(cls) -> NoiseModel:
        return cls(NoiseKind.UNIFORM)

    @classmethod
    def table(cls, pairs) -> NoiseModel:
        """Build a finite-table law from ``(value, probability)`` pairs."""
        pairs = [tuple(p) for p in pairs]
        if any(len(p) != 2 for p in pairs):
            raise DomainError("finite table entries must be (value, probability) pairs")
        return cls(NoiseKind.FINITE_TABLE, tuple(v for v, _ in pairs), tuple(p for _, p in pairs))

    @classmethod
    def from_json(cls, source) -> NoiseModel:
        """Load a finite table from a JSON file path or decoded JSON.

        Accepts either a bare list of ``[value, probability]`` pairs or an
        object with a ``"table"`` key holding such a list.
        """
        if isinstance(source, (str, Path)):
            source = json.loads(Path(source).read_text())
        if isinstance(source, dict):
            source = source.get("table")
        if not isinstance(source, list):
            raise DomainError("noise table JSON must be a list of [value, probability] pairs")
        return cls.table(source)

    @classmethod
    def from_name(cls, name: str) -> NoiseModel:
        try:
            kind = NoiseKind(name.lower())
        except ValueError:
            raise DomainError(f"unknown noise kind {name!r}") from None
        if kind is NoiseKind.FINITE_TABLE:
            raise DomainError("finite tables must be loaded from JSON")
        return cls(kind)

    def to_json(self) -> dict:
        out = {"kind": self.kind.value}
        if self.kind is NoiseKind.FINITE_TABLE:
            out["table"] = [[v, p] for v, p in zip(self.support, self.probs)]
        return out

    @property
    def xi(self) -> float:
        return moments(self).xi


def moments(model: NoiseModel) -> NoiseMoments:
    """Exact moments (m1, m2, xi, m6) of ``model``."""
    if model.kind is not NoiseKind.FINITE_TABLE:
        return _BUILTIN_MOMENTS[model.kind]
    v = np.asarray(model.support, dtype=float)
    p = np.asarray(model.probs, dtype=float)
    m = [math.fsum(p * v**k) for k in (1, 2, 4, 6)]
    if abs(m[1] - 1.0) > NORMALIZATION_TOL:
        raise NonNormalizedNoiseError(f"non-normalized noise: E[Z^2] = {m[1]!r}")
    return NoiseMoments(*m)


def sample_noise(model: NoiseModel, n: int, stream) -> np.ndarray:
    """Draw ``n`` i.i.d. samples of ``model`` from ``stream``."""
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    g = stream.generator
    kind = model.kind
    if kind is NoiseKind.GAUSSIAN:
        return g.standard_normal(n)
    if kind is NoiseKind.LAPLACE:
        return g.laplace(0.0, _LAPLACE_SCALE, n)
    if kind is NoiseKind.RADEMACHER:
        return 2.0 * g.integers(0, 2, n) - 1.0
    if kind is NoiseKind.UNIFORM:
        return g.uniform(-_SQRT3, _SQRT3, n)
    return _sample_table(model, g.random(n))


def _sample_table(model: NoiseModel, u: np.ndarray) -> np.ndarray:
    cum = np.cumsum(model.probs)
    cum[-1] = 1.0
    # first index with cum > u; zero-mass points lose ties to the lower index
    idx = np.searchsorted(cum, u, side="right")
    np.minimum(idx, len(cum) - 1, out=idx)
    return np.asarray(model.support)[idx]
