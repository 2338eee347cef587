"""Minkowski functionals, normality constants and sups over order intervals."""

import itertools
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import InputError
from .cones import OrderInterval, PolyCone, as_vector
from .seminorms import PolytopeGauge, Seminorm


def minkowski_functional(W, y, method="facets"):
    """Gauge ``inf{t > 0 : y in tW}`` of a symmetric polytope ``W``.

    ``method="lp"`` solves the vertex-form linear program instead of using the
    precomputed facets; both give the same value up to solver tolerance.
    """
    if not isinstance(W, PolytopeGauge):
        raise InputError("minkowski_functional needs a minkowski-of-polytope seminorm")
    y = as_vector(y, W.dim)
    if method == "lp":
        return W.gauge_lp(y)
    if method != "facets":
        raise InputError(f"unknown method {method!r}")
    return W(y)


@dataclass(frozen=True)
class NormalityEstimate:
    gamma_lower: float
    gamma_exact: Optional[float] = None
    samples: int = 0


def _extreme_rays_2d(C):
    U = C.unit_generators
    if U.shape[0] == 2:
        return U[0], U[1]
    # extreme pair: the two generators spanning the widest angle that still
    # contains every other generator
    best = None
    for i, j in itertools.combinations(range(U.shape[0]), 2):
        a, b = U[i], U[j]
        det = a[0] * b[1] - a[1] * b[0]
        if abs(det) < 1e-15:
            continue
        M = np.linalg.inv(np.array([a, b]).T)
        coef = U @ M.T
        if np.all(coef >= -1e-12):
            best = (a, b)
            break
    if best is None:
        raise InputError("could not find two extreme rays; is the cone pointed and 2-d?")
    return best


def _gamma_exact_2d(C, q):
    u, v = _extreme_rays_2d(C)
    F = q.facets()
    qu, qv = q(u), q(v)
    # q(w(s)) is piecewise linear in s with kinks where two facet forms tie
    fu, fv = F @ u, F @ v
    cands = {0.0, 1.0}
    if qu + qv > 0:
        cands.add(qv / (qu + qv))
    for i, j in itertools.combinations(range(F.shape[0]), 2):
        # (fu_i - fv_i) s + fv_i = (fu_j - fv_j) s + fv_j
        den = (fu[i] - fv[i]) - (fu[j] - fv[j])
        if den != 0:
            s = (fv[j] - fv[i]) / den
            if 0.0 <= s <= 1.0:
                cands.add(float(s))
    for i in range(F.shape[0]):
        den = fu[i] - fv[i]
        if den != 0:
            s = -fv[i] / den
            if 0.0 <= s <= 1.0:
                cands.add(float(s))
    best = 1.0
    for s in sorted(cands):
        w = s * u + (1.0 - s) * v
        qw = q(w)
        if qw <= 0:
            return np.inf
        best = max(best, max(s * qu, (1.0 - s) * qv, qw) / qw)
    return best


def normality_gamma(C, q, mode="sampled", samples=2000, seed=0):
    """Estimate the least γ with ``0 <= x <= y  =>  q(x) <= γ q(y)``.

    ``gamma_lower`` is the largest ratio ``q(x)/q(y)`` found over the sampled
    order intervals ``[0, y]_o`` and is a valid lower bound for any cone.  In
    ``exact-2d`` mode (two-dimensional pointed cone, polyhedral ``q``) the
    maximum over the parallelogram ``{s u + t v}`` is computed exactly.
    """
    if not isinstance(C, PolyCone) or not isinstance(q, Seminorm):
        raise InputError("normality_gamma(C: PolyCone, q: Seminorm)")
    if C.dim != q.dim:
        raise InputError("cone and seminorm dimensions differ")
    if not C.is_pointed():
        raise InputError("cone is not pointed; the normality ratio is unbounded")
    if mode == "exact-2d":
        if C.dim != 2:
            raise InputError("exact-2d mode needs a cone in R^2")
        g = _gamma_exact_2d(C, q)
        return NormalityEstimate(gamma_lower=g, gamma_exact=g, samples=0)
    if mode != "sampled":
        raise InputError(f"unknown mode {mode!r}")

    rng = np.random.default_rng(seed)
    U = C.unit_generators
    m = U.shape[0]
    # coefficient boxes [0, lam]; corners give the exact sup when C is simplicial
    lam = rng.exponential(size=(samples, m))
    lam *= rng.uniform(size=(samples, m)) < rng.uniform(0.3, 1.0, size=(samples, 1))
    lam[np.all(lam == 0, axis=1), 0] = 1.0
    lam = np.vstack([np.eye(m), np.ones((1, m)), lam])
    Y = lam @ U
    qy = q(Y)
    keep = qy > 0
    if not np.all(keep):
        return NormalityEstimate(gamma_lower=np.inf, samples=len(qy))
    best = 1.0
    if m <= 12:
        masks = ((np.arange(2 ** m)[:, None] >> np.arange(m)) & 1).astype(float)
        for row, qyi in zip(lam, qy):
            X = (masks * row) @ U
            best = max(best, float(np.max(q(X))) / qyi)
    else:
        for row, qyi in zip(lam, qy):
            mu = rng.uniform(size=(64, m)) * row
            best = max(best, float(np.max(q(mu @ U))) / qyi)
    return NormalityEstimate(gamma_lower=best, samples=len(qy))


def o_bounded_sup(C, interval, q, samples=10000, seed=0):
    """sup of ``q`` over ``[lo, hi]_o``.

    Exact (corner enumeration) when the interval is a parallelotope, i.e. the
    cone is simplicial; otherwise the largest value over sampled points.
    """
    if not isinstance(interval, OrderInterval):
        interval = OrderInterval(C, *interval)
    if interval.is_empty:
        raise InputError("empty order interval: endpoints are incomparable")
    V = interval.vertices() if C.is_simplicial else None
    if V is not None:
        return float(np.max(q(V)))
    rng = np.random.default_rng(seed)
    pts = np.vstack([interval.lo, interval.hi, interval.sample(samples, rng)])
    return float(np.max(q(pts)))
