"""The entropy functional and the entropy-maximisation map.

For ``h`` on the positive part of the ``L_1(mu)`` sphere the map ``F_X``
sends ``h`` to the unique maximiser of ``E(h, f) = sum_i mu_i h_i log f_i``
over the positive unit ball of ``X``.  The maximiser lies on the sphere,
shares the support of ``h`` and is characterised by ``||h/f||_* = 1``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .duality import claim1_certificate
from .errors import DomainError
from .lattice import as_values, level_function, orthant_gradient, power_family

NEG_INF = -math.inf
ENTROPY_TOL = 1e-8
ENTROPY_MAX_ITER = 200_000
L1_TOL = 1e-10
MAX_STEP = 1.0
STALL_WINDOW = 1000


def entropy_eval(h, f, weights):
    """``sum mu_i |h_i| log |f_i|`` over the support of ``h``.

    Returns ``NEG_INF`` when ``f`` vanishes somewhere on the support of ``h``.
    Works along the last axis for batches.
    """
    h = np.abs(np.asarray(h, dtype=float))
    f = np.abs(np.asarray(f, dtype=float))
    w = np.asarray(weights, dtype=float)
    supp = h != 0
    dead = np.any(supp & (f == 0), axis=-1)
    with np.errstate(divide="ignore"):
        logs = np.where(supp, np.log(np.where(supp, f, 1.0)), 0.0)
    out = (w * h * logs).sum(axis=-1)
    out = np.where(dead, NEG_INF, out)
    return float(out) if np.ndim(out) == 0 else out


@dataclass
class EntropySolution:
    maximizer: np.ndarray
    lam: float
    certificate_residual: float
    iterations: int
    converged: bool
    method: str = "ascent"
    degenerate: bool = False
    stationarity: float = 0.0
    trace: list = field(default_factory=list)

    def to_dict(self):
        return {
            "maximizer": self.maximizer.tolist(),
            "lambda": self.lam,
            "certificate_residual": self.certificate_residual,
            "iterations": self.iterations,
            "converged": self.converged,
            "method": self.method,
            "degenerate": self.degenerate,
            "stationarity": self.stationarity,
        }


def _check_h(norm, h, signed=False):
    h = as_values(h, norm.n)
    if h.ndim != 1:
        raise DomainError("h must be a single function")
    if not signed and np.any(h < 0):
        raise DomainError("h must be nonnegative")
    mass = float(norm.space.l1(h))
    if abs(mass - 1.0) > L1_TOL:
        raise DomainError(f"h must lie on the L_1(mu) sphere, ||h||_1 = {mass!r}")
    return h


def _closed_form(fam, c):
    """Maximiser of ``sum c_i log f_i`` on the positive ball of a known family."""
    supp = c > 0
    C = c.sum()
    if fam[0] == "linf":
        return np.where(supp, 1.0 / fam[1], 0.0), "linf"
    if fam[0] == "lp":
        p, u = fam[1], fam[2]
        # stationarity gives u_i f_i**p = c_i / C
        return np.where(supp, (c / (u * C)) ** (1.0 / p), 0.0), "lp"
    # rearrangement family: with v = f**P the constraint is sum W_k v*_k <= 1;
    # the maximiser follows the order of c and pools adjacent violators
    _, w, p = fam
    order = np.argsort(-c, kind="stable")
    cs = c[order]
    k = int(supp.sum())
    if w[:k].sum() <= 0 or (k < c.size and w[k - 1] == 0 and cs[k - 1] > 0):
        raise DomainError("Lorentz weights vanish on the support; supremum is infinite")
    level = level_function(cs[:k], w[:k])
    v = np.zeros(c.size)
    v[order[:k]] = level / C
    return v ** (1.0 / p), "level-function"


def entropy_max(norm, h, tol=ENTROPY_TOL, *, method="auto", x0=None,
                max_iter=ENTROPY_MAX_ITER):
    """Maximise ``E(h, f)`` over ``f >= 0`` with ``||f|| <= 1``.

    ``method="auto"`` uses an exact formula when the norm has a recognised
    diagonal or rearrangement structure and the generic ascent otherwise;
    ``method="ascent"`` forces the ascent.  ``x0`` overrides the starting
    point of the ascent (its restriction to the support of ``h`` is used).
    """
    h = _check_h(norm, h)
    mu = norm.space.weights
    c = mu * h
    supp = h > 0
    if method not in ("auto", "ascent"):
        raise DomainError(f"unknown entropy method {method!r}")
    kind = power_family(norm)
    fam = kind if method == "auto" else None
    # the sup norm is not uniformly convex: the map exists but is degenerate
    degenerate = kind is not None and kind[0] == "linf"

    if fam is not None:
        f, tag = _closed_form(fam, c)
        f = f / norm(f)
        lam = entropy_eval(h, f, mu)
        cert = claim1_certificate(norm, h, f, tol)
        return EntropySolution(f, lam, cert, 0, True, tag, degenerate,
                               _stationarity(norm, f, c), [lam])
    return _ascent(norm, h, c, supp, tol, x0, max_iter, degenerate)


def _stationarity(norm, f, c):
    """``sum_i |c_i - f_i d_i N(f)|``, i.e. ``||G(f) - h||_1`` at a sphere point."""
    try:
        grad = orthant_gradient(norm, f)
    except DomainError:
        return math.inf
    return float(np.abs(c - f * grad).sum())


def _ascent(norm, h, c, supp, tol, x0, max_iter, degenerate):
    mu = norm.space.weights
    cs = c[supp]
    if x0 is None:
        f = supp.astype(float)
    else:
        f = np.where(supp, np.abs(as_values(x0, norm.n)), 0.0)
        if np.any(f[supp] <= 0):
            raise DomainError("x0 must be positive on the support of h")
    f = f / norm(f)
    lam = entropy_eval(h, f, mu)
    trace = [lam]
    step = MAX_STEP
    cert = math.inf
    stat = math.inf
    mark = lam
    it = 0
    for it in range(1, max_iter + 1):
        grad = orthant_gradient(norm, f)[supp]
        m = f[supp] * grad
        stat = float(np.abs(cs - m).sum())
        if stat <= tol:
            cert = claim1_certificate(norm, h, f, tol)
            if cert <= 10 * tol:
                return EntropySolution(f, lam, cert, it, True, "ascent",
                                       degenerate, stat, trace)
        # multiplicative step: log f moves by log(c / m), zero exactly at the optimum
        ratio = np.log(cs) - np.log(np.maximum(m, 1e-300))
        while True:
            trial = f.copy()
            trial[supp] = f[supp] * np.exp(np.clip(step * ratio, -50, 50))
            trial = trial / norm(trial)
            lam_new = entropy_eval(h, trial, mu)
            if lam_new >= lam - 1e-15 * max(1.0, abs(lam)):
                break
            step *= 0.5
            if step < 1e-14:
                cert = claim1_certificate(norm, h, f, tol)
                return EntropySolution(f, lam, cert, it, cert <= 10 * tol, "ascent",
                                       degenerate, stat, trace)
        improvement = lam_new - lam
        f, lam = trial, lam_new
        trace.append(lam)
        if improvement < tol * max(1.0, abs(lam)) * 1e-6 and stat <= 1e3 * tol:
            cert = claim1_certificate(norm, h, f, tol)
            if cert <= 10 * tol:
                return EntropySolution(f, lam, cert, it, True, "ascent",
                                       degenerate, stat, trace)
        step = min(step * 1.5, MAX_STEP)
        if it % STALL_WINDOW == 0:
            # creeping progress means a kink at the optimum; give up early
            if lam - mark < tol * max(1.0, abs(lam)):
                break
            mark = lam
    cert = claim1_certificate(norm, h, f, tol)
    return EntropySolution(f, lam, cert, it, False, "ascent", degenerate,
                           stat, trace)


def entropy_max_signed(norm, h, tol=ENTROPY_TOL, **kw):
    """``sign(h) F_X(|h|)``."""
    h = _check_h(norm, h, signed=True)
    sol = entropy_max(norm, np.abs(h), tol, **kw)
    return np.sign(h) * sol.maximizer


def midpoint_check(norm, h1, h2, tol=1e-9, solve_tol=ENTROPY_TOL):
    """``(lhs, rhs, ok)`` for ``||(F h1 + F h2)/2|| >= 1 - ||h1 - h2||_1**(1/2)``."""
    h1 = _check_h(norm, h1)
    h2 = _check_h(norm, h2)
    d = float(norm.space.l1(h1 - h2))
    if d > 1.0:
        raise DomainError(f"midpoint inequality needs ||h1 - h2||_1 <= 1, got {d}")
    x1 = entropy_max(norm, h1, solve_tol).maximizer
    x2 = entropy_max(norm, h2, solve_tol).maximizer
    lhs = float(norm(0.5 * (x1 + x2)))
    rhs = 1.0 - math.sqrt(d)
    return lhs, rhs, lhs >= rhs - tol
