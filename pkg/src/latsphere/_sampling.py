"""Seeded, chunked sampling loops.

Every sampling loop in the package is split into fixed-size chunks and chunk
``i`` draws from ``SeedSequence(seed, spawn_key=(stream, i))``.  Results are
merged in chunk order, so the output does not depend on how many worker
threads ran the chunks.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .errors import ConfigurationError

CHUNK = 256
THREADS_ENV = "LATSPHERE_THREADS"


def thread_count():
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        k = int(raw)
    except ValueError:
        raise ConfigurationError(f"{THREADS_ENV} must be an integer, got {raw!r}")
    return max(k, 1)


def rng_for(seed, stream, index=0):
    return np.random.default_rng(
        np.random.SeedSequence(int(seed), spawn_key=(int(stream), int(index))))


def chunks(total, size=CHUNK):
    """``(index, start, count)`` triples covering ``range(total)``."""
    return [(i, s, min(size, total - s)) for i, s in enumerate(range(0, total, size))]


def map_chunks(fn, total, seed, stream=0, size=CHUNK):
    """Run ``fn(rng, start, count)`` on every chunk and return results in order."""
    parts = chunks(total, size)
    jobs = [(rng_for(seed, stream, i), s, c) for i, s, c in parts]
    threads = thread_count()
    if threads == 1 or len(jobs) <= 1:
        return [fn(*job) for job in jobs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda job: fn(*job), jobs))


def sphere_points(rng, norm, count):
    """Gaussian directions pushed radially onto the unit sphere of ``norm``."""
    x = rng.standard_normal((count, norm.n))
    nrm = norm(x)
    bad = nrm == 0
    while np.any(bad):
        x[bad] = rng.standard_normal((int(bad.sum()), norm.n))
        nrm = norm(x)
        bad = nrm == 0
    return x / nrm[:, None]


def log_uniform(rng, lo, hi, count):
    return np.exp(rng.uniform(np.log(lo), np.log(hi), count))


def controlled_pairs(rng, norm, count, lo=1e-4, hi=0.9):
    """Sphere pairs ``(x, y)`` with ``y = normalize(x + r d)``, ``r`` log-uniform.

    ``d`` is a Gaussian direction rescaled to unit norm, so ``r`` controls the
    pair distance across all scales in ``[lo, hi]``.
    """
    x = sphere_points(rng, norm, count)
    d = sphere_points(rng, norm, count)
    r = log_uniform(rng, lo, hi, count)
    y = x + r[:, None] * d
    nrm = norm(y)
    # x + r d = 0 needs r = 1 and d = -x; redraw those directions
    bad = nrm == 0
    if np.any(bad):
        y[bad] = x[bad]
        nrm[bad] = 1.0
    return x, y / nrm[:, None]
