"""Mazur maps between the spheres of a lattice and of its convexification.

``G_p(f) = |f|**p sign(f)`` carries the unit sphere of ``X^(p)`` onto the
unit sphere of ``X``.  With ``d = ||f - g||`` measured in ``X^(p)`` its
modulus is squeezed between

    H(d) = d**p / 2**(p-1)
    F(d) = 2 (1 - (1 - d**(1/p))**p) + d**(p-1) + d**p      (d < 1).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _sampling
from .errors import DomainError, SamplingError
from .lattice import Convexified

SANDWICH_TOL = 1e-9
MAX_REDRAWS = 20


def mazur_map(f, p):
    """``|f|**p sign(f)`` atomwise; zero atoms stay zero."""
    f = np.asarray(f, dtype=float)
    return np.sign(f) * np.abs(f) ** p


def mazur_inverse(x, p):
    """``|x|**(1/p) sign(x)`` atomwise."""
    x = np.asarray(x, dtype=float)
    return np.sign(x) * np.abs(x) ** (1.0 / p)


def mazur_lower_bound(delta, p):
    delta = np.asarray(delta, dtype=float)
    if np.any(delta < 0):
        raise DomainError("delta must be nonnegative")
    out = delta ** p / 2.0 ** (p - 1)
    return float(out) if out.ndim == 0 else out


def mazur_upper_bound(delta, p):
    delta = np.asarray(delta, dtype=float)
    if np.any(delta < 0) or np.any(delta >= 1):
        raise DomainError("the upper bound needs 0 <= delta < 1")
    out = 2 * (1 - (1 - delta ** (1.0 / p)) ** p) + delta ** (p - 1) + delta ** p
    return float(out) if out.ndim == 0 else out


@dataclass
class MazurBoundReport:
    p: float
    samples: int
    violations_lower: int
    violations_upper: int
    worst_margin: float
    witness: tuple = None
    seed: int = 0

    @property
    def ok(self):
        return self.violations_lower == 0 and self.violations_upper == 0

    def to_dict(self):
        w = None
        if self.witness is not None:
            w = [np.asarray(v).tolist() for v in self.witness]
        return {
            "p": self.p,
            "samples": self.samples,
            "violations_lower": self.violations_lower,
            "violations_upper": self.violations_upper,
            "worst_margin": self.worst_margin,
            "witness": w,
            "seed": self.seed,
        }


def sandwich_margins(base_norm, f, g, p):
    """Distances and the signed slack of both bounds for the pairs ``(f, g)``.

    Returns ``(delta, image_distance, lower_slack, upper_slack)``; a slack
    below ``-tol`` is a violation.
    """
    conv = Convexified(base_norm, p)
    delta = np.atleast_1d(conv(np.asarray(f) - np.asarray(g)))
    dist = np.atleast_1d(base_norm(mazur_map(f, p) - mazur_map(g, p)))
    low = dist - mazur_lower_bound(delta, p)
    up = mazur_upper_bound(delta, p) - dist
    return delta, dist, low, up


def verify_mazur_sandwich(base_norm, p, n_pairs=10_000, seed=0, tol=SANDWICH_TOL):
    """Check ``H(d) <= ||G_p f - G_p g|| <= F(d)`` on sampled sphere pairs.

    Pairs ``(f, normalize(f + r u))`` on the sphere of ``X^(p)`` use a
    log-uniform ``r`` in ``[1e-4, 0.9]``; pairs with ``d >= 1`` are redrawn.
    ``worst_margin`` is the smallest slack over both bounds and the witness
    is the pair attaining it.
    """
    if not p > 1:
        raise DomainError(f"Mazur exponent must be > 1, got {p}")
    conv = Convexified(base_norm, p)

    def work(rng, start, count):
        f, g = _sampling.controlled_pairs(rng, conv, count)
        for _ in range(MAX_REDRAWS):
            far = conv(f - g) >= 1
            if not far.any():
                break
            f[far], g[far] = _sampling.controlled_pairs(rng, conv, int(far.sum()))
        else:
            raise SamplingError("could not draw pairs at distance below one")
        _, _, low, up = sandwich_margins(base_norm, f, g, p)
        slack = np.minimum(low, up)
        i = int(np.argmin(slack))
        return (int((low < -tol).sum()), int((up < -tol).sum()),
                float(slack[i]), (f[i], g[i]))

    parts = _sampling.map_chunks(work, n_pairs, seed, stream=0)
    worst = min(parts, key=lambda t: t[2])
    return MazurBoundReport(
        float(p), n_pairs,
        sum(t[0] for t in parts), sum(t[1] for t in parts),
        worst[2], worst[3], seed)


def bounds_ordered(p, grid=None):
    """``H <= F`` on a grid in ``(0, 1)``; returns the smallest gap ``F - H``."""
    if grid is None:
        grid = np.linspace(1e-6, 1 - 1e-6, 2001)
    gap = mazur_upper_bound(grid, p) - mazur_lower_bound(grid, p)
    return float(np.min(gap)) if len(grid) else math.inf
