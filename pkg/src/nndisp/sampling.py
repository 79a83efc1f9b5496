"""Shell and i.i.d. Gaussian codeword generation over keyed random streams."""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

_MASK64 = (1 << 64) - 1


class CodebookType(str, enum.Enum):
    SHELL = "shell"
    IID = "iid"


@dataclass(frozen=True)
class CodebookKind:
    """Codebook class with per-symbol power ``power``."""

    kind: CodebookType
    power: float

    def __post_init__(self):
        object.__setattr__(self, "kind", CodebookType(self.kind))
        if not self.power > 0:
            raise DomainError(f"codebook power must be > 0, got {self.power}")

    @classmethod
    def shell(cls, power: float) -> CodebookKind:
        return cls(CodebookType.SHELL, power)

    @classmethod
    def iid(cls, power: float) -> CodebookKind:
        return cls(CodebookType.IID, power)

    def sample(self, n: int, stream: RandomStream) -> np.ndarray:
        if self.kind is CodebookType.SHELL:
            return sample_shell(n, self.power, stream)
        return sample_iid(n, self.power, stream)


class RandomStream:
    """Counter-based stream keyed by ``(seed, index)``.

    Backed by Philox with the two 64-bit key words set to the seed and the
    stream index, so every stream is reproducible on its own and can be
    generated in any order.
    """

    __slots__ = ("seed", "index", "generator")

    def __init__(self, seed: int, index: int = 0):
        self.seed = int(seed) & _MASK64
        self.index = int(index) & _MASK64
        self.generator = np.random.Generator(np.random.Philox(
            key=np.array([self.seed, self.index], dtype=np.uint64)))

    def __repr__(self):
        return f"RandomStream(seed={self.seed}, index={self.index})"


def sample_shell(n: int, P: float, stream: RandomStream) -> np.ndarray:
    """Uniform draw from the sphere of radius sqrt(n P) in R^n."""
    _check(n, P)
    g = stream.generator
    while True:
        v = g.standard_normal(n)
        norm2 = float(v @ v)
        if norm2 > 0.0:
            return v * np.sqrt(n * P / norm2)


def sample_shell_batch(rows: int, n: int, P: float, stream: RandomStream) -> np.ndarray:
    """``rows`` independent shell codewords as a (rows, n) array."""
    _check(n, P)
    g = stream.generator
    v = g.standard_normal((rows, n))
    norm2 = np.einsum("ij,ij->i", v, v)
    for i in np.flatnonzero(norm2 == 0.0):
        while norm2[i] == 0.0:
            v[i] = g.standard_normal(n)
            norm2[i] = v[i] @ v[i]
    return v * np.sqrt(n * P / norm2)[:, None]


def sample_iid(n: int, P: float, stream: RandomStream) -> np.ndarray:
    """``n`` i.i.d. N(0, P) symbols."""
    _check(n, P)
    return np.sqrt(P) * stream.generator.standard_normal(n)


def sample_iid_batch(rows: int, n: int, P: float, stream: RandomStream) -> np.ndarray:
    _check(n, P)
    return np.sqrt(P) * stream.generator.standard_normal((rows, n))


def _check(n, P):
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    if not P > 0:
        raise DomainError(f"power must be > 0, got {P}")
