"""Convexification, concavity/convexity constants and moduli of convexity.

Constants and moduli are estimated by seeded sampling followed by local
refinement.  A :class:`ConstantEstimate` is a certified *lower* bound (its
witness tuple attains it); a :class:`ModulusCurve` for the convexity modulus
holds *upper* bounds and one for the smoothness modulus holds *lower* bounds.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _sampling
from .errors import DomainError, SamplingError
from .lattice import Convexified, Renormed

DISJOINT_FRACTION = 0.2
REFINE_STARTS = 4
REFINE_STEPS = 150


def convexify(norm, p):
    """The ``p``-convexification ``f -> || |f|**p ||**(1/p)``."""
    return Convexified(norm, p)


def renorm_unit_concavity(norm, q, shortcuts=True):
    """Equivalent norm whose ``q``-concavity constant is one on disjoint tuples.

    ``|||x||| = max over set partitions {A_j} of (sum_j ||x chi_{A_j}||**q)**(1/q)``.
    Raises :class:`~latsphere.errors.SizeError` for more than 12 atoms.
    """
    return Renormed(norm, q, shortcuts=shortcuts)


# -- constants ---------------------------------------------------------------

@dataclass
class ConstantEstimate:
    """Sampled lower bound for a concavity or convexity constant."""

    kind: str
    exponent: float
    lower_bound: float
    witness: list
    samples: int
    seed: int = 0

    def to_dict(self):
        return {
            "kind": self.kind,
            "exponent": self.exponent,
            "lower_bound": self.lower_bound,
            "witness": [np.asarray(w).tolist() for w in self.witness],
            "samples": self.samples,
            "seed": self.seed,
        }


def concavity_ratio(norm, xs, q):
    """``(sum_i ||x_i||**q)**(1/q) / ||(sum_i |x_i|**q)**(1/q)||``.

    ``xs`` has shape ``(..., k, n)``; the ratio is taken over the tuple axis.
    """
    xs = np.abs(np.asarray(xs, dtype=float))
    top = (norm(xs) ** q).sum(axis=-1) ** (1.0 / q)
    bottom = norm((xs ** q).sum(axis=-2) ** (1.0 / q))
    return _safe_ratio(top, bottom)


def convexity_ratio(norm, xs, p):
    """``||(sum_i |x_i|**p)**(1/p)|| / (sum_i ||x_i||**p)**(1/p)``."""
    xs = np.abs(np.asarray(xs, dtype=float))
    top = norm((xs ** p).sum(axis=-2) ** (1.0 / p))
    bottom = (norm(xs) ** p).sum(axis=-1) ** (1.0 / p)
    return _safe_ratio(top, bottom)


def _safe_ratio(top, bottom):
    top, bottom = np.asarray(top), np.asarray(bottom)
    out = np.full(np.shape(top), np.nan)
    ok = bottom > 0
    out[ok] = top[ok] / bottom[ok]
    return out


def _draw_tuples(rng, norm, count, size):
    """Gaussian tuples with random scales; a fifth are disjointly supported."""
    n = norm.n
    xs = rng.standard_normal((count, size, n))
    disjoint = rng.random(count) < DISJOINT_FRACTION
    if size > 1 and disjoint.any():
        owner = rng.integers(0, size, (int(disjoint.sum()), n))
        mask = owner[:, None, :] == np.arange(size)[None, :, None]
        xs[disjoint] *= mask
    nrm = norm(xs)
    nrm = np.where(nrm > 0, nrm, 1.0)
    scale = np.exp(rng.standard_normal((count, size)))
    return xs / nrm[..., None] * scale[..., None]


def _hill_climb(ratio, x, rng, steps=REFINE_STEPS):
    """Multiplicative random search maximising ``ratio`` from the tuple ``x``."""
    best = float(ratio(x[None])[0])
    sigma = 0.3
    support = x != 0
    for _ in range(steps):
        trial = x * np.exp(sigma * rng.standard_normal(x.shape))
        # let mass appear on empty atoms now and then
        if rng.random() < 0.2:
            fill = rng.random(x.shape) < 0.1
            trial = np.where(fill & ~support, sigma * np.abs(x).max(), trial)
        val = float(ratio(trial[None])[0])
        if np.isfinite(val) and val > best:
            x, best = trial, val
            support = x != 0
        else:
            sigma = max(sigma * 0.97, 1e-4)
    return x, best


def _estimate_constant(kind, norm, exponent, n_tuples, tuple_size, seed, refine):
    if not exponent >= 1:
        raise DomainError(f"exponent must be >= 1, got {exponent}")
    if tuple_size < 1 or n_tuples < 1:
        raise DomainError("n_tuples and tuple_size must be positive")
    fn = concavity_ratio if kind == "concavity" else convexity_ratio

    def ratio(xs):
        return fn(norm, xs, exponent)

    def work(rng, start, count):
        xs = _draw_tuples(rng, norm, count, tuple_size)
        r = ratio(xs)
        ok = np.isfinite(r)
        if not ok.any():
            return None
        order = np.argsort(-np.where(ok, r, -np.inf), kind="stable")
        top = order[:REFINE_STARTS]
        return [(float(r[i]), xs[i]) for i in top if ok[i]], int(ok.sum())

    parts = [p for p in _sampling.map_chunks(work, n_tuples, seed, stream=0) if p]
    if not parts:
        raise SamplingError(f"every sampled {kind} tuple was degenerate")
    samples = sum(c for _, c in parts)
    pool = [item for cands, _ in parts for item in cands]
    pool.sort(key=lambda t: -t[0])
    pool = pool[:REFINE_STARTS]

    if refine:
        refined = []
        for j, (_, x) in enumerate(pool):
            rng = _sampling.rng_for(seed, 1, j)
            refined.append(_hill_climb(ratio, x, rng)[::-1])
        pool = sorted(pool + refined, key=lambda t: -t[0])

    value, witness = pool[0]
    value = float(ratio(witness[None])[0])
    if not value >= 1.0:
        # a single-vector tuple attains ratio one up to rounding
        witness = np.abs(witness[:1])
        value = 1.0
    return ConstantEstimate(kind, float(exponent), value, list(witness), samples, seed)


def estimate_concavity(norm, q, n_tuples=1000, tuple_size=4, seed=0, refine=True):
    """Lower bound for ``M_q``: the best sampled ``q``-concavity ratio."""
    return _estimate_constant("concavity", norm, q, n_tuples, tuple_size, seed, refine)


def estimate_convexity(norm, p, n_tuples=1000, tuple_size=4, seed=0, refine=True):
    """Lower bound for ``M^p``: the best sampled ``p``-convexity ratio."""
    return _estimate_constant("convexity", norm, p, n_tuples, tuple_size, seed, refine)


def sampled_ratios(kind, norm, exponent, n_tuples, tuple_size, seed):
    """Every raw sampled ratio, for checks that bound all of them."""
    fn = concavity_ratio if kind == "concavity" else convexity_ratio

    def work(rng, start, count):
        return fn(norm, _draw_tuples(rng, norm, count, tuple_size), exponent)

    return np.concatenate(_sampling.map_chunks(work, n_tuples, seed, stream=0))


# -- moduli -----------------------------------------------------------------

@dataclass
class ModulusCurve:
    """Grid of modulus estimates.

    ``direction`` is ``"upper"`` for the convexity modulus (an infimum,
    estimated from above) and ``"lower"`` for the smoothness modulus.
    Infeasible grid points carry ``nan`` and ``feasible=False``.
    """

    kind: str
    grid: list
    direction: str
    feasible: list = field(default_factory=list)
    samples: int = 0
    seed: int = 0

    @property
    def arguments(self):
        return np.array([a for a, _ in self.grid])

    @property
    def values(self):
        return np.array([v for _, v in self.grid])

    def __call__(self, t):
        """Piecewise-linear interpolation through ``(0, 0)`` and the grid.

        Beyond the last feasible point the last value is held.
        """
        a, v = self.arguments, self.values
        ok = np.isfinite(v)
        a = np.concatenate([[0.0], a[ok]])
        v = np.concatenate([[0.0], v[ok]])
        return np.interp(t, a, v)

    def fit_power_law(self, min_value=1e-14):
        """Least-squares fit of ``K t**s`` on the log-log grid, returning ``(K, s)``."""
        a, v = self.arguments, self.values
        ok = np.isfinite(v) & (v > min_value) & (a > 0)
        if ok.sum() < 2:
            raise DomainError("power-law fit needs two positive grid values")
        s, logk = np.polyfit(np.log(a[ok]), np.log(v[ok]), 1)
        return float(math.exp(logk)), float(s)

    def to_dict(self):
        return {
            "kind": self.kind,
            "direction": self.direction,
            "grid": [[float(a), None if not math.isfinite(v) else float(v)]
                     for a, v in self.grid],
            "feasible": list(self.feasible),
            "samples": self.samples,
            "seed": self.seed,
        }


def midpoint_defect(norm, x, y):
    return 1.0 - norm(0.5 * (np.asarray(x) + np.asarray(y)))


def _pull_to_distance(norm, x, y, eps, iters=60):
    """Move ``y`` along ``normalize(x + s (y - x))`` until ``||x - y|| = eps``.

    Requires ``||x - y|| >= eps``; bisection keeps the distance at least
    ``eps``.
    """
    d = y - x

    def point(s):
        z = x + s * d
        return z / norm(z)

    lo, hi = 0.0, 1.0
    if norm(x - y) < eps:
        return y
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if norm(x - point(mid)) >= eps:
            hi = mid
        else:
            lo = mid
    out = point(hi)
    return out if norm(x - out) >= eps else y


def _ucx_pairs(rng, norm, count):
    """Pairs spread over all distances: near pairs, near-antipodal, independent."""
    x = _sampling.sphere_points(rng, norm, count)
    d = _sampling.sphere_points(rng, norm, count)
    r = _sampling.log_uniform(rng, 1e-3, 4.0, count)
    kind = rng.integers(0, 3, count)
    # some exact antipodes so that eps = 2 is reachable
    r[(kind == 1) & (rng.random(count) < 0.1)] = 0.0
    base = np.where((kind == 1)[:, None], -x, x)
    y = base + r[:, None] * d
    y[kind == 2] = d[kind == 2]
    nrm = norm(y)
    bad = nrm == 0
    y[bad], nrm[bad] = d[bad], 1.0
    return x, y / nrm[:, None]


def estimate_ucx_modulus(norm, eps_grid, n_pairs=2000, seed=0, refine=True,
                         refine_steps=REFINE_STEPS):
    """Upper bounds ``1 - ||(x+y)/2||`` minimised over sampled sphere pairs.

    For every ``eps`` the minimum runs over pairs with ``||x - y|| >= eps``.
    Refinement pulls the best pairs to distance exactly ``eps`` and then
    runs a random local search.  The curve is repaired to be nondecreasing
    by a suffix minimum, which keeps every value witnessed by a feasible
    pair.
    """
    eps = np.asarray(eps_grid, dtype=float)
    if eps.ndim != 1 or np.any(eps <= 0) or np.any(eps > 2):
        raise DomainError("eps grid values must lie in (0, 2]")

    def work(rng, start, count):
        x, y = _ucx_pairs(rng, norm, count)
        dist = norm(x - y)
        defect = 1.0 - norm(0.5 * (x + y))
        best = []
        for e in eps:
            ok = dist >= e
            if not ok.any():
                best.append(None)
                continue
            i = int(np.argmin(np.where(ok, defect, np.inf)))
            best.append((float(defect[i]), x[i], y[i]))
        return best

    parts = _sampling.map_chunks(work, n_pairs, seed, stream=0)
    values, feasible = [], []
    for k, e in enumerate(eps):
        cands = [p[k] for p in parts if p[k] is not None]
        if not cands:
            values.append(math.nan)
            feasible.append(False)
            continue
        val, x, y = min(cands, key=lambda t: t[0])
        if refine:
            rng = _sampling.rng_for(seed, 1, k)
            val = min(val, _refine_ucx(norm, x, y, e, rng, refine_steps))
        values.append(val)
        feasible.append(True)

    # suffix minimum: a pair feasible at eps' is feasible at every eps <= eps'
    order = np.argsort(eps, kind="stable")
    run = math.inf
    for k in order[::-1]:
        if feasible[k]:
            run = min(run, values[k])
            values[k] = run
    grid = [(float(e), float(v)) for e, v in zip(eps, values)]
    return ModulusCurve("uniform_convexity", grid, "upper", feasible, n_pairs, seed)


def _refine_ucx(norm, x, y, eps, rng, steps):
    y = _pull_to_distance(norm, x, y, eps)
    best = float(midpoint_defect(norm, x, y))
    sigma = 0.1
    for _ in range(steps):
        xt = x + sigma * rng.standard_normal(x.size)
        yt = y + sigma * rng.standard_normal(y.size)
        xt, yt = xt / norm(xt), yt / norm(yt)
        if norm(xt - yt) < eps:
            continue
        yt = _pull_to_distance(norm, xt, yt, eps)
        val = float(midpoint_defect(norm, xt, yt))
        if val < best:
            x, y, best = xt, yt, val
        else:
            sigma = max(sigma * 0.97, 1e-5)
    return best


def estimate_smoothness_modulus(norm, tau_grid, n_pairs=2000, seed=0):
    """Lower bounds ``(||x + t y|| + ||x - t y||)/2 - 1`` maximised over pairs.

    The true modulus is convex with value zero at zero, hence nondecreasing,
    and ``rho(t) >= rho(t')`` for ``t >= t'``; a prefix maximum therefore keeps
    every value a valid lower bound.
    """
    tau = np.asarray(tau_grid, dtype=float)
    if tau.ndim != 1 or np.any(tau <= 0):
        raise DomainError("tau grid values must be positive")

    def work(rng, start, count):
        x = _sampling.sphere_points(rng, norm, count)
        y = _sampling.sphere_points(rng, norm, count)
        out = []
        for t in tau:
            v = 0.5 * (norm(x + t * y) + norm(x - t * y)) - 1.0
            out.append(float(v.max()))
        return out

    parts = np.array(_sampling.map_chunks(work, n_pairs, seed, stream=0))
    values = parts.max(axis=0)
    order = np.argsort(tau, kind="stable")
    run = -math.inf
    for k in order:
        run = max(run, values[k])
        values[k] = run
    grid = [(float(t), float(v)) for t, v in zip(tau, values)]
    return ModulusCurve("uniform_smoothness", grid, "lower",
                        [True] * len(grid), n_pairs, seed)

