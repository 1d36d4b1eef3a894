"""Sphere homeomorphisms assembled from entropy maps and Mazur maps.

Every map is a :class:`SphereMapPipeline`, an ordered list of stages each of
which sends the unit sphere of one norm onto the unit sphere of the next.
The basic chain is

    S(L_1)  --F-->  S(Xbar^(2))  --G_2-->  S(Xbar)  --u-->  S(X)

where ``Xbar`` is ``X`` renormed to unit ``q``-concavity constant and ``u`` is
the radial retraction ``x -> x / ||x||``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import _sampling
from .convexity import convexify, estimate_smoothness_modulus, estimate_ucx_modulus
from .convexity import renorm_unit_concavity
from .duality import inverse_entropy_map
from .entropy import ENTROPY_TOL, entropy_max, entropy_max_signed
from .errors import DomainError, SizeError
from .lattice import (MAX_RENORM_ATOMS, FiniteProbabilitySpace, LInfinity, Renormed,
                      WeightedLp, as_values)
from .mazur import mazur_inverse, mazur_map, mazur_upper_bound

log = logging.getLogger(__name__)

SPHERE_TOL = 1e-8


@dataclass
class Stage:
    name: str
    func: object
    source: object
    target: object

    def __call__(self, x):
        return self.func(x)


@dataclass
class SphereMapPipeline:
    stages: list
    source_norm: object
    target_norm: object
    direction: str = "forward"
    warnings: list = field(default_factory=list)
    _inverse: object = None

    @property
    def stage_names(self):
        return [s.name for s in self.stages]

    def __call__(self, x):
        x = as_values(x, self.source_norm.n)
        for stage in self.stages:
            x = stage(x)
        return x

    def trace(self, x):
        """``[(stage name, output, output norm in the stage target)]``."""
        x = as_values(x, self.source_norm.n)
        out = []
        for stage in self.stages:
            x = stage(x)
            out.append((stage.name, x, float(stage.target(x))))
        return out

    def sphere_defect(self, x):
        """Largest ``| ||stage output|| - 1 |`` over the stages."""
        return max(abs(v - 1.0) for _, _, v in self.trace(x))

    def inverse(self):
        if self._inverse is None:
            raise DomainError("pipeline has no inverse")
        return self._inverse

    def describe(self):
        return {
            "direction": self.direction,
            "stages": self.stage_names,
            "source": self.source_norm.to_dict(),
            "target": self.target_norm.to_dict(),
            "warnings": list(self.warnings),
        }


def _pipeline(stages, direction, warnings):
    return SphereMapPipeline(stages, stages[0].source, stages[-1].target, direction,
                             list(warnings))


def _link(forward, backward):
    forward._inverse = backward
    backward._inverse = forward
    return forward


# -- stages -----------------------------------------------------------------

def _entropy_stage(l1, norm, tol):
    return Stage(f"F[{norm.variant}]",
                 lambda h: entropy_max_signed(norm, h, tol), l1, norm)


def _entropy_inverse_stage(norm, l1, tol):
    return Stage(f"F^-1[{norm.variant}]",
                 lambda x: inverse_entropy_map(norm, x, tol), norm, l1)


def _mazur_stage(conv, base):
    return Stage("G_2", lambda f: mazur_map(f, 2.0), conv, base)


def _mazur_inverse_stage(base, conv):
    return Stage("G_2^-1", lambda x: mazur_inverse(x, 2.0), base, conv)


def _retract_stage(name, source, target):
    return Stage(name, lambda x: x / target(x), source, target)


def _renormed(norm, q, renorm, warnings):
    """``(Xbar, changed)``: the unit-concavity renorming or ``norm`` itself."""
    if renorm is None:
        renorm = norm.n <= MAX_RENORM_ATOMS
    if not renorm:
        msg = f"assuming M_{q:g} = 1 for {norm.variant} without renorming"
        warnings.append(msg)
        log.warning(msg)
        return norm, False
    try:
        bar = renorm_unit_concavity(norm, q)
    except SizeError:
        msg = (f"renorming needs n <= {MAX_RENORM_ATOMS}; assuming M_{q:g} = 1 "
               f"for {norm.variant}")
        warnings.append(msg)
        log.warning(msg)
        return norm, False
    if isinstance(bar, Renormed) and bar.shortcut() == "identity":
        return norm, False
    return bar, True


def _l1_chain(norm, q, renorm, tol, warnings):
    """Forward and inverse stage lists between ``S(L_1)`` and ``S(norm)``."""
    if not q >= 1 or not math.isfinite(q):
        raise DomainError(f"concavity exponent must satisfy 1 <= q < inf, got {q}")
    l1 = WeightedLp(norm.space, 1.0)
    bar, changed = _renormed(norm, q, renorm, warnings)
    conv = convexify(bar, 2.0)
    fwd = [_entropy_stage(l1, conv, tol), _mazur_stage(conv, bar)]
    inv = [_mazur_inverse_stage(bar, conv), _entropy_inverse_stage(conv, l1, tol)]
    if changed:
        fwd.append(_retract_stage("u", bar, norm))
        inv.insert(0, _retract_stage("u^-1", norm, bar))
    return fwd, inv


def build_l1_to_X(norm, q, renorm=None, tol=ENTROPY_TOL):
    """``S(L_1(mu)) -> S(X)``: entropy map into ``Xbar^(2)`` then squaring."""
    warnings = []
    fwd, inv = _l1_chain(norm, q, renorm, tol, warnings)
    return _link(_pipeline(fwd, "forward", warnings),
                 _pipeline(inv, "inverse", warnings))


def build_X_to_Y(norm_x, q, norm_y, q2, renorm=None, tol=ENTROPY_TOL):
    """``S(X) -> S(Y)`` through ``S(L_1(mu))``."""
    if norm_x.space != norm_y.space:
        raise DomainError("both norms must live on the same space")
    warnings = []
    fx, ix = _l1_chain(norm_x, q, renorm, tol, warnings)
    fy, iy = _l1_chain(norm_y, q2, renorm, tol, warnings)
    return _link(_pipeline(ix + fy, "forward", warnings),
                 _pipeline(iy + fx, "inverse", warnings))


def nondegenerate_moduli(norm, n_pairs=200, seed=0):
    """Heuristic uniform convexity / smoothness check; returns warning strings."""
    out = []
    delta = estimate_ucx_modulus(norm, [1.0], n_pairs, seed, refine=False).values[0]
    if not delta > 1e-9:
        out.append(f"{norm.variant}: sampled convexity modulus at 1 is {delta:.3g}")
    tau = 1e-2
    rho = estimate_smoothness_modulus(norm, [tau], n_pairs, seed).values[0]
    if rho > 0.1 * tau:
        out.append(f"{norm.variant}: smoothness modulus looks linear near 0 "
                   f"({rho:.3g} at {tau:g})")
    return out


def build_direct_smooth(norm_x, norm_y, tol=ENTROPY_TOL, check=True):
    """``S(X) -> S(Y)`` as ``F_Y`` after the inverse entropy map of ``X``."""
    if norm_x.space != norm_y.space:
        raise DomainError("both norms must live on the same space")
    warnings = []
    if check:
        for nrm in (norm_x, norm_y):
            for w in nondegenerate_moduli(nrm):
                warnings.append(w)
                log.warning(w)
    l1 = WeightedLp(norm_x.space, 1.0)
    fwd = [_entropy_inverse_stage(norm_x, l1, tol), _entropy_stage(l1, norm_y, tol)]
    inv = [_entropy_inverse_stage(norm_y, l1, tol), _entropy_stage(l1, norm_x, tol)]
    return _link(_pipeline(fwd, "forward", warnings),
                 _pipeline(inv, "inverse", warnings))


def single_stage(name, func, source, target):
    """Wrap one map as a pipeline, e.g. a bare Mazur map for profiling."""
    return SphereMapPipeline([Stage(name, func, source, target)], source, target)


# -- modulus profiles --------------------------------------------------------

@dataclass
class ModulusProfile:
    """Per-bin maxima of output distance over input distances up to ``t_k``.

    ``bins`` holds ``(t_edge, max_out, samples)`` rows; bins that saw no
    pair are absent.  Maxima are cumulative over the bins (monotone repair).
    """

    bins: list
    samples: int
    map_id: str
    seed: int = 0

    def to_dict(self):
        return {"bins": [list(b) for b in self.bins], "samples": self.samples,
                "map_id": self.map_id, "seed": self.seed}


def profile_modulus(pipeline, n_pairs, bin_edges, seed=0, lo=1e-4, hi=0.9):
    """Sample pairs on the source sphere and bin output distances.

    Pairs ``(x, normalize(x + r d))`` use a log-uniform ``r`` in
    ``[lo, hi]``.  Pair ``(x, y)`` with input distance ``d`` lands in the
    first bin with ``d <= t_k``.
    """
    edges = np.asarray(bin_edges, dtype=float)
    if edges.ndim != 1 or edges.size == 0 or np.any(edges <= 0) or np.any(np.diff(edges) <= 0):
        raise DomainError("bin edges must be positive and increasing")
    src, tgt = pipeline.source_norm, pipeline.target_norm

    def work(rng, start, count):
        x, y = _sampling.controlled_pairs(rng, src, count, lo, hi)
        d_in = src(x - y)
        d_out = np.array([tgt(pipeline(a) - pipeline(b)) for a, b in zip(x, y)])
        k = np.searchsorted(edges, d_in, side="left")
        best = np.full(edges.size, -np.inf)
        counts = np.zeros(edges.size, dtype=int)
        inside = k < edges.size
        np.maximum.at(best, k[inside], d_out[inside])
        np.add.at(counts, k[inside], 1)
        return best, counts

    parts = _sampling.map_chunks(work, n_pairs, seed, stream=0)
    best = np.max([p[0] for p in parts], axis=0)
    counts = np.sum([p[1] for p in parts], axis=0)
    rows = []
    run = -np.inf
    for t, b, c in zip(edges, best, counts):
        run = max(run, b)
        if c > 0:
            rows.append((float(t), float(run), int(c)))
    map_id = "->".join(pipeline.stage_names)
    return ModulusProfile(rows, n_pairs, map_id, seed)


def entropy_modulus_bound(delta_curve, t, signed=True):
    """Continuity bound for the entropy map from a convexity-modulus curve.

    ``g(t)`` is the smallest grid ``eps`` with ``delta(eps)**2 > t`` (or 2),
    inverting ``eta = delta**2``; signed inputs pay ``g(t) + 2 g(2t)``.
    """
    eps = delta_curve.arguments
    eta = delta_curve.values ** 2
    order = np.argsort(eps)
    eps, eta = eps[order], eta[order]

    def g(s):
        above = np.nonzero(np.isfinite(eta) & (eta > s))[0]
        return float(eps[above[0]]) if above.size else 2.0

    val = g(t) + 2 * g(2 * t) if signed else g(t)
    return min(val, 2.0)


def l1_pipeline_envelope(delta_curve, t):
    """Analytic bound for ``G_2 o F`` at input distance ``t``."""
    e = entropy_modulus_bound(delta_curve, t)
    return float(mazur_upper_bound(e, 2.0)) if e < 1 else 2.0


def envelope_check(profile, delta_curve):
    """Bins whose observed maximum exceeds the analytic envelope.

    This is a soft check: the envelope is built from a sampled modulus, so
    violations are logged and returned, not raised.
    """
    bad = []
    for t, m, _ in profile.bins:
        env = l1_pipeline_envelope(delta_curve, t)
        if m > env + 1e-12:
            bad.append((t, m, env))
            log.warning("envelope violated at t=%g: %g > %g", t, m, env)
    return bad


def mazur_envelope(delta, p=2.0):
    return float(mazur_upper_bound(delta, p)) if delta < 1 else 2.0


# -- degeneracy probe --------------------------------------------------------

def linf_degeneracy_probe(n, eps=1e-3):
    """Two close inputs whose ``L_infinity`` entropy maximisers are far apart.

    ``h_eps`` is the normalisation of ``(2 - eps, eps, 0, ...)`` and ``h_0``
    that of ``(2, 0, ...)`` on the uniform space with ``n`` atoms.  The
    maximiser is the indicator of the support, which jumps when the second
    atom drops out.  Returns ``((h_eps, h_0), gap)`` with the gap in the sup
    norm.
    """
    if n < 2:
        raise DomainError("the probe needs at least two atoms")
    space = FiniteProbabilitySpace.uniform(n)
    a = np.zeros(n)
    a[0], a[1] = 2.0 - eps, eps
    b = np.zeros(n)
    b[0] = 2.0
    a, b = a / space.l1(a), b / space.l1(b)
    norm = LInfinity(space)
    fa = entropy_max(norm, a).maximizer
    fb = entropy_max(norm, b).maximizer
    return (a, b), float(np.abs(fa - fb).max())
