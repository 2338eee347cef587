"""Evaluable seminorms on R^n.

All seminorms evaluate along the last axis, so ``p(X)`` with ``X`` of shape
``(k, n)`` returns ``k`` values.
"""

import itertools

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import ConvexHull

from .. import _kernels
from ..errors import InputError, ResourceError

MAX_ENUM_DIM = 20


def _batch(x, dim):
    X = np.asarray(x, dtype=float)
    single = X.ndim == 1
    X = np.atleast_2d(X)
    if X.shape[-1] != dim:
        raise InputError(f"expected vectors of dimension {dim}, got {X.shape[-1]}")
    return X, single


class Seminorm:
    """Base class. Subclasses set ``kind`` and implement ``_eval``."""

    kind = None
    dim = 0

    def __call__(self, x):
        X, single = _batch(x, self.dim)
        out = self._eval(X)
        return float(out[0]) if single else out

    def _eval(self, X):
        raise NotImplementedError

    @property
    def kernel_mask(self):
        """Coordinates along which the seminorm vanishes identically."""
        return np.zeros(self.dim, dtype=bool)

    def facets(self):
        """Rows ``F`` with ``p(x) = max(0, max_i F[i] @ x)``."""
        raise NotImplementedError

    def bounding_halfwidths(self, radius):
        raise NotImplementedError

    def ball_vertices(self, center, radius):
        """Extreme points of the ball restricted to the non-kernel coordinates."""
        raise NotImplementedError

    def sample_ball(self, center, radius, n, rng, kernel_span=None):
        raise NotImplementedError

    def to_dict(self):
        raise NotImplementedError

    def __eq__(self, other):
        return isinstance(other, Seminorm) and self.to_dict() == other.to_dict()

    def __hash__(self):
        return hash(repr(self.to_dict()))

    def __repr__(self):
        return f"{type(self).__name__}({self.to_dict()['params']})"


def _check_weights(weights):
    w = np.asarray(weights, dtype=float).ravel()
    if w.size == 0 or not np.all(np.isfinite(w)) or np.any(w < 0):
        raise InputError("seminorm weights must be a nonempty list of finite nonnegative numbers")
    return w


class _Weighted(Seminorm):
    def __init__(self, weights):
        self.weights = _check_weights(weights)
        self.dim = self.weights.size

    @property
    def kernel_mask(self):
        return self.weights == 0

    def bounding_halfwidths(self, radius):
        h = np.full(self.dim, np.inf)
        live = self.weights > 0
        h[live] = radius / self.weights[live]
        return h

    def to_dict(self):
        return {"kind": self.kind, "params": {"weights": self.weights.tolist()}}

    def _fill_kernel(self, X, center, radius, rng, kernel_span):
        ker = self.kernel_mask
        if np.any(ker):
            span = 10.0 * radius if kernel_span is None else kernel_span
            X[:, ker] = center[ker] + rng.uniform(-span, span, size=(X.shape[0], int(ker.sum())))
        return X


class WeightedSup(_Weighted):
    """p(x) = max_i w_i |x_i|."""

    kind = "weighted-sup"

    def _eval(self, X):
        return _kernels.weighted_sup(self.weights, X)

    def facets(self):
        D = np.diag(self.weights)
        return np.vstack([D, -D])

    def ball_vertices(self, center, radius):
        center = np.asarray(center, dtype=float)
        live = np.flatnonzero(~self.kernel_mask)
        if live.size > MAX_ENUM_DIM:
            raise ResourceError(f"box vertex enumeration capped at dimension {MAX_ENUM_DIM}")
        h = radius / self.weights[live]
        signs = np.array(list(itertools.product((-1.0, 1.0), repeat=live.size)))
        V = np.tile(center, (signs.shape[0], 1))
        V[:, live] += signs * h
        return V

    def sample_ball(self, center, radius, n, rng, kernel_span=None):
        center = np.asarray(center, dtype=float)
        X = np.tile(center, (n, 1))
        live = ~self.kernel_mask
        h = radius / self.weights[live]
        X[:, live] += rng.uniform(-1.0, 1.0, size=(n, int(live.sum()))) * h
        return self._fill_kernel(X, center, radius, rng, kernel_span)


class WeightedL1(_Weighted):
    """p(x) = sum_i w_i |x_i|."""

    kind = "weighted-l1"

    def _eval(self, X):
        return _kernels.weighted_l1(self.weights, X)

    def facets(self):
        if self.dim > MAX_ENUM_DIM:
            raise ResourceError(f"l1 facet enumeration capped at dimension {MAX_ENUM_DIM}")
        signs = np.array(list(itertools.product((-1.0, 1.0), repeat=self.dim)))
        return signs * self.weights

    def ball_vertices(self, center, radius):
        center = np.asarray(center, dtype=float)
        live = np.flatnonzero(~self.kernel_mask)
        V = []
        for i in live:
            for s in (-1.0, 1.0):
                v = center.copy()
                v[i] += s * radius / self.weights[i]
                V.append(v)
        return np.array(V) if V else center[None, :].copy()

    def sample_ball(self, center, radius, n, rng, kernel_span=None):
        # uniform on the cross-polytope: normalised exponentials plus a slack term
        center = np.asarray(center, dtype=float)
        X = np.tile(center, (n, 1))
        live = ~self.kernel_mask
        m = int(live.sum())
        E = rng.exponential(size=(n, m + 1))
        U = E[:, :m] / E.sum(axis=1, keepdims=True)
        U *= rng.choice((-1.0, 1.0), size=(n, m))
        X[:, live] += radius * U / self.weights[live]
        return self._fill_kernel(X, center, radius, rng, kernel_span)


class PolytopeGauge(Seminorm):
    """Minkowski functional of a symmetric polytope with 0 in its interior.

    Evaluation uses the facet form ``max_i a_i . y / b_i`` computed once from
    the vertex list; :meth:`gauge_lp` solves the defining linear program on the
    vertex representation directly.
    """

    kind = "minkowski-of-polytope"

    def __init__(self, vertices, tol=1e-9):
        V = np.atleast_2d(np.asarray(vertices, dtype=float))
        if V.size == 0 or not np.all(np.isfinite(V)):
            raise InputError("polytope needs a nonempty list of finite vertices")
        self.dim = V.shape[1]
        self.vertices = V
        if self.dim == 1:
            c_hi, c_lo = V.max(), V.min()
            if not (c_hi > tol and c_lo < -tol):
                raise InputError("0 is not an interior point of the polytope")
            F = np.array([[1.0 / c_hi], [1.0 / c_lo]])
        else:
            try:
                hull = ConvexHull(V)
            except Exception as exc:  # qhull raises its own error type
                raise InputError(f"polytope is degenerate: {exc}") from None
            normals, offsets = hull.equations[:, :-1], hull.equations[:, -1]
            b = -offsets
            if np.any(b <= tol):
                raise InputError("0 is not an interior point of the polytope")
            F = np.unique(np.round(normals / b[:, None], 15), axis=0)
        self._F = F
        if np.any(self._eval(-V) > 1.0 + 1e-9):
            raise InputError("polytope is not symmetric (some -v lies outside)")

    def _eval(self, X):
        return _kernels.gauge(self._F, X)

    def facets(self):
        return self._F.copy()

    def gauge_lp(self, y):
        """inf{t > 0 : y in tW} by linear programming over the vertices."""
        y = np.asarray(y, dtype=float)
        if y.shape != (self.dim,):
            raise InputError("dimension mismatch")
        k = self.vertices.shape[0]
        res = linprog(np.ones(k), A_eq=self.vertices.T, b_eq=y, bounds=[(0, None)] * k, method="highs")
        if res.status != 0:
            raise InputError(f"gauge LP failed: {res.message}")
        return float(res.fun)

    def bounding_halfwidths(self, radius):
        return radius * np.max(np.abs(self.vertices), axis=0)

    def ball_vertices(self, center, radius):
        return np.asarray(center, dtype=float) + radius * self.vertices

    def sample_ball(self, center, radius, n, rng, kernel_span=None):
        return _rejection_sample(self, center, radius, n, rng)

    def to_dict(self):
        return {"kind": self.kind, "params": {"vertices": self.vertices.tolist()}}


class MaxSeminorm(Seminorm):
    """Pointwise maximum of finitely many seminorms."""

    kind = "max"

    def __init__(self, parts):
        parts = list(parts)
        if not parts:
            raise InputError("max of an empty seminorm family")
        dims = {p.dim for p in parts}
        if len(dims) != 1:
            raise InputError("seminorms in a max family must share a dimension")
        self.parts = parts
        self.dim = dims.pop()

    def _eval(self, X):
        return np.max(np.stack([p._eval(X) for p in self.parts]), axis=0)

    @property
    def kernel_mask(self):
        return np.logical_and.reduce([p.kernel_mask for p in self.parts])

    def facets(self):
        return np.vstack([p.facets() for p in self.parts])

    def bounding_halfwidths(self, radius):
        return np.min(np.stack([p.bounding_halfwidths(radius) for p in self.parts]), axis=0)

    def ball_vertices(self, center, radius):
        # the ball of the max sits inside each part's ball; any one hull is an
        # outer approximation, so take the cheapest enumerable one
        best = None
        for p in sorted(self.parts, key=_vertex_count):
            try:
                best = p.ball_vertices(center, radius)
                break
            except (ResourceError, NotImplementedError):
                continue
        if best is None:
            raise ResourceError("no part of the max seminorm admits vertex enumeration")
        return best

    def sample_ball(self, center, radius, n, rng, kernel_span=None):
        return _rejection_sample(self, center, radius, n, rng, kernel_span)

    def to_dict(self):
        return {"kind": self.kind, "params": {"parts": [p.to_dict() for p in self.parts]}}


def _vertex_count(p):
    if isinstance(p, WeightedSup):
        return 2 ** int((~p.kernel_mask).sum())
    if isinstance(p, WeightedL1):
        return 2 * int((~p.kernel_mask).sum())
    if isinstance(p, PolytopeGauge):
        return p.vertices.shape[0]
    return np.inf


def _rejection_sample(p, center, radius, n, rng, kernel_span=None, max_rounds=200):
    center = np.asarray(center, dtype=float)
    h = np.array(p.bounding_halfwidths(radius), dtype=float)
    ker = ~np.isfinite(h)
    h[ker] = 10.0 * radius if kernel_span is None else kernel_span
    out = []
    need = n
    for _ in range(max_rounds):
        batch = max(4 * need, 64)
        X = center + rng.uniform(-1.0, 1.0, size=(batch, p.dim)) * h
        X = X[p(X - center) <= radius]
        out.append(X[:need])
        need -= out[-1].shape[0]
        if need <= 0:
            return np.vstack(out)
    raise ResourceError("rejection sampling of the seminorm ball did not converge")


def sup_norm(dim):
    return WeightedSup(np.ones(dim))


def l1_norm(dim):
    return WeightedL1(np.ones(dim))


def seminorm_from_dict(d):
    """Build a seminorm from ``{"kind": ..., "params": {...}}``."""
    if not isinstance(d, dict) or "kind" not in d:
        raise InputError("seminorm spec needs a 'kind' field")
    kind = d["kind"]
    params = d.get("params", {})
    try:
        if kind == "weighted-sup":
            return WeightedSup(params["weights"])
        if kind == "weighted-l1":
            return WeightedL1(params["weights"])
        if kind == "minkowski-of-polytope":
            return PolytopeGauge(params["vertices"])
        if kind == "max":
            return MaxSeminorm([seminorm_from_dict(p) for p in params["parts"]])
    except KeyError as exc:
        raise InputError(f"seminorm {kind!r} is missing parameter {exc.args[0]!r}") from None
    raise InputError(f"unknown seminorm kind {kind!r}")
