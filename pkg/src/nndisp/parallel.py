"""Reproducible trial execution.

Trial ``i`` always draws from ``RandomStream(seed, i)``, trials are grouped
into fixed-size chunks that do not depend on the worker count, and per-trial
results are concatenated in trial order before any reduction. Sums use
``math.fsum`` (exactly rounded), so results are bit-identical for any number
of workers.
"""
from __future__ import annotations

import math
import multiprocessing
import os
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .errors import DomainError
from .sampling import RandomStream

WORKERS_ENV = "NNDISP_WORKERS"
CHUNK_SIZE = 2048


def worker_count(workers: int | None = None) -> int:
    """Explicit ``workers``, else ``$NNDISP_WORKERS``, else available CPUs."""
    if workers is None:
        env = os.environ.get(WORKERS_ENV)
        if env:
            try:
                workers = int(env)
            except ValueError:
                raise DomainError(f"{WORKERS_ENV} must be an integer, got {env!r}") from None
        else:
            try:
                workers = len(os.sched_getaffinity(0))
            except AttributeError:
                workers = os.cpu_count() or 1
    if workers < 1:
        raise DomainError(f"worker count must be >= 1, got {workers}")
    return workers


def _run_chunk(job):
    kernel, seed, start, stop = job
    rows = [kernel.draw(RandomStream(seed, i)) for i in range(start, stop)]
    values = np.asarray(rows, dtype=float)
    if values.ndim == 1:
        values = values[:, None]
    finish = getattr(kernel, "finish", None)
    return finish(values) if finish is not None else values


def run_trials(kernel, trials: int, seed: int, workers: int | None = None) -> np.ndarray:
    """Evaluate ``kernel`` on ``trials`` independent streams.

    ``kernel.draw(stream)`` returns a float or a fixed-length sequence of
    floats for one trial; an optional ``kernel.finish(chunk)`` post-processes
    a (rows, k) chunk in vectorized form. Returns the (trials, k) array in
    trial order.
    """
    if trials < 1:
        raise DomainError(f"trials must be >= 1, got {trials}")
    jobs = [(kernel, seed, s, min(s + CHUNK_SIZE, trials)) for s in range(0, trials, CHUNK_SIZE)]
    w = min(worker_count(workers), len(jobs))
    if w == 1:
        parts = [_run_chunk(j) for j in jobs]
    else:
        ctx = multiprocessing.get_context("fork") if hasattr(os, "fork") else None
        with ProcessPoolExecutor(max_workers=w, mp_context=ctx) as pool:
            parts = list(pool.map(_run_chunk, jobs))
    return np.concatenate(parts, axis=0)


def fsum_mean(values) -> float:
    values = np.asarray(values, dtype=float).ravel()
    return math.fsum(values.tolist()) / values.size


def mean_and_se(values) -> tuple[float, float]:
    """Sample mean and its standard error, both order-independent."""
    values = np.asarray(values, dtype=float).ravel()
    m = fsum_mean(values)
    if values.size < 2:
        return m, 0.0
    var = math.fsum(((values - m) ** 2).tolist()) / (values.size - 1)
    return m, math.sqrt(var / values.size)
