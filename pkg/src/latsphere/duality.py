"""Supporting functionals, the inverse entropy map and the optimality certificate.

A functional is stored as its density ``g`` against the atom masses, so its
value at ``x`` is ``sum_i mu_i g_i x_i``.  At a smooth point ``x`` of the unit
sphere the supporting functional is the gradient of the norm divided by the
masses; the inverse entropy map is ``G(x) = |x*| x``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NonSmoothError
from .lattice import DUAL_TOL, FD_STEP, as_values, dual_norm_eval, power_family

SPHERE_TOL = 1e-10


@dataclass(frozen=True)
class SupportingFunctional:
    g: np.ndarray
    pairing: float
    dual_norm: float

    def to_dict(self):
        return {"g": self.g.tolist(), "pairing": self.pairing,
                "dual_norm": self.dual_norm}


def _one_sided(norm, x, h):
    n = norm.n
    e = np.eye(n) * h
    vals = norm(np.concatenate([x + e, x - e]))
    base = norm(x)
    return (vals[:n] - base) / h, (base - vals[n:]) / h


def fd_gradient_checked(norm, x, tol=1e-8, step=FD_STEP):
    """Central-difference gradient with one Richardson level and a kink test.

    A kink at atom ``i`` shows as a gap between the right and left
    difference quotients that does not shrink with the step; for a smooth
    norm the gap is ``O(step)`` and halves with it.
    """
    x = as_values(x, norm.n)
    h = step * max(float(np.abs(x).max()), 1.0)
    right, left = _one_sided(norm, x, h)
    right2, left2 = _one_sided(norm, x, h / 2)
    gap, gap2 = np.abs(right - left), np.abs(right2 - left2)
    kink = (gap2 > 10 * tol) & (gap2 > 0.75 * gap)
    if kink.any():
        i = int(np.argmax(np.where(kink, gap2, -np.inf)))
        raise NonSmoothError(
            f"norm is not differentiable at atom {i}: one-sided derivatives "
            f"{right2[i]:.6g} and {left2[i]:.6g}", atom=i)
    central = 0.5 * (right + left)
    central2 = 0.5 * (right2 + left2)
    return (4 * central2 - central) / 3


def _lp_gradient(x, p, u):
    nrm = float(np.sum(u * np.abs(x) ** p)) ** (1.0 / p)
    if p == 1.0:
        zero = np.nonzero(x == 0)[0]
        if zero.size:
            raise NonSmoothError(
                f"weighted L_1 norm is not differentiable at atom {zero[0]}",
                atom=int(zero[0]))
        return u * np.sign(x)
    return u * np.sign(x) * (np.abs(x) / nrm) ** (p - 1)


def norm_gradient(norm, x, tol=1e-8):
    """Gradient of ``norm`` at ``x != 0``; raises :class:`NonSmoothError` at kinks."""
    x = as_values(x, norm.n)
    fam = power_family(norm)
    if fam is not None and fam[0] == "lp":
        return _lp_gradient(x, fam[1], fam[2])
    grad = fd_gradient_checked(norm, x, tol)
    if norm.has_gradient:
        # the closed form is exact once the point is known to be smooth
        return norm.gradient(x)
    return grad


def supporting_functional(norm, x, tol=1e-8):
    """The density ``g`` with ``<g, x> = 1 = ||g||_*`` at ``x`` on the unit sphere."""
    x = as_values(x, norm.n)
    nrm = norm(x)
    if abs(nrm - 1.0) > SPHERE_TOL:
        raise DomainError(f"x must lie on the unit sphere, ||x|| = {nrm!r}")
    g = norm_gradient(norm, x, tol) / norm.space.weights
    pairing = float(norm.space.weights @ (g * x))
    dual = dual_norm_eval(norm, g, min(tol, DUAL_TOL), x0=np.abs(x))
    return SupportingFunctional(g, pairing, float(dual))


def inverse_entropy_map(norm, x, tol=1e-8):
    """``G(x) = |x*| x``, a point of the unit sphere of ``L_1(mu)``."""
    x = as_values(x, norm.n)
    g = norm_gradient(norm, x, tol) / norm.space.weights
    if abs(norm(x) - 1.0) > SPHERE_TOL:
        raise DomainError("x must lie on the unit sphere")
    return np.abs(g) * x


def claim1_certificate(norm, h, f, tol=DUAL_TOL):
    """``| ||h/f||_* - 1 |`` with the quotient set to zero off the support of ``h``.

    The value vanishes exactly when ``f`` maximises ``sum mu h log f`` over
    the positive unit ball.
    """
    h = as_values(h, norm.n)
    f = as_values(f, norm.n)
    supp = h != 0
    if np.any(f[supp] <= 0):
        raise DomainError("f must be positive on the support of h")
    q = np.zeros(norm.n)
    q[supp] = np.abs(h[supp]) / f[supp]
    dual = dual_norm_eval(norm, q, min(tol, DUAL_TOL), x0=np.where(supp, f, 0.0))
    return abs(float(dual) - 1.0)
