"""Lipschitz behaviour under the l^p quasi-metric, graduated LCS metrics and |x^3 - y^3|."""

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .convex_core import Ball, ConvexMap
from .errors import CertificationRefused, InputError
from .lipschitz_certify import LipschitzCertificate, abs_value
from .order_core import as_vector, seminorm_from_dict

DEFAULT_TRUNCATION = 8


class LpQuasiMetric:
    """d(x, y) = sum_k |y_k - x_k|^p on R^N, 0 < p < 1."""

    kind = "lp-quasi"

    def __init__(self, p=0.5, N=DEFAULT_TRUNCATION):
        if not 0 < p < 1:
            raise InputError("p must lie in (0, 1)")
        if int(N) < 1:
            raise InputError("truncation length must be positive")
        self.p, self.N = float(p), int(N)

    @property
    def dim(self):
        return self.N

    def of_difference(self, D):
        D = np.asarray(D, dtype=float)
        single = D.ndim == 1
        D = np.atleast_2d(D)
        if D.shape[1] != self.N:
            raise InputError(f"expected vectors of length {self.N}, got {D.shape[1]}")
        out = _kernels.lp_quasi(self.p, D)
        return float(out[0]) if single else out

    __call__ = of_difference

    def dist(self, x, y):
        return self.of_difference(np.asarray(y, dtype=float) - np.asarray(x, dtype=float))

    def sample_ball(self, center, radius, n, rng):
        """Uniform points of {x : d(center, x) <= radius}.

        Generalized-gamma construction: with G_k ~ Gamma(1/p), E ~ Exp(1),
        the vector of signed G_k^(1/p) scaled by (sum G + E)^(-1/p) is uniform
        in the unit quasi-ball.
        """
        center = as_vector(center, self.N, "center")
        G = rng.gamma(1.0 / self.p, size=(n, self.N))
        E = rng.exponential(size=(n, 1))
        signs = rng.choice((-1.0, 1.0), size=(n, self.N))
        U = signs * (G / (G.sum(axis=1, keepdims=True) + E)) ** (1.0 / self.p)
        return center + radius ** (1.0 / self.p) * U

    def to_dict(self):
        return {"kind": self.kind, "p": self.p, "N": self.N}


class GraduatedMetric:
    """d(x, y) = sum_n 2^-n p_n(x - y) / (1 + p_n(x - y))."""

    kind = "graduated"

    def __init__(self, seminorms):
        seminorms = list(seminorms)
        if not seminorms:
            raise InputError("need at least one seminorm")
        dims = {s.dim for s in seminorms}
        if len(dims) != 1:
            raise InputError("all seminorms must share a dimension")
        self.seminorms = seminorms
        self.dim = dims.pop()
        self.weights = 0.5 ** np.arange(1, len(seminorms) + 1)

    def of_difference(self, D):
        D = np.asarray(D, dtype=float)
        single = D.ndim == 1
        D = np.atleast_2d(D)
        P = np.stack([s(D) for s in self.seminorms], axis=1)
        out = (P / (1.0 + P)) @ self.weights
        return float(out[0]) if single else out

    __call__ = of_difference

    def dist(self, x, y):
        return self.of_difference(np.asarray(x, dtype=float) - np.asarray(y, dtype=float))

    def to_dict(self):
        return {"kind": self.kind, "seminorms": [s.to_dict() for s in self.seminorms]}


class CubeMetric:
    """d(x, y) = |x^3 - y^3| on R.  Not translation invariant."""

    kind = "cube"
    dim = 1

    def dist(self, x, y):
        x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
        out = np.abs(x ** 3 - y ** 3)
        return float(out) if out.ndim == 0 else out

    def to_dict(self):
        return {"kind": self.kind}


def metric_from_dict(d):
    kind = d.get("kind") if isinstance(d, dict) else None
    if kind == "lp-quasi":
        return LpQuasiMetric(d.get("p", 0.5), d.get("N", DEFAULT_TRUNCATION))
    if kind == "graduated":
        return GraduatedMetric([seminorm_from_dict(s) for s in d["seminorms"]])
    if kind == "cube":
        return CubeMetric()
    raise InputError(f"unknown metric kind {kind!r}")


def metric_eval(m, x, y):
    if isinstance(m, CubeMetric):
        return m.dist(float(np.asarray(x).ravel()[0]), float(np.asarray(y).ravel()[0]))
    x = as_vector(x, m.dim, "x")
    y = as_vector(y, m.dim, "y")
    return m.dist(x, y)


def translation_witness(m, rng, trials=1000, scale=2.0):
    """A triple with d(x + z, y + z) != d(x, y), or None if none was found."""
    dim = m.dim
    for _ in range(trials):
        x, y, z = rng.uniform(-scale, scale, size=(3, dim))
        if dim == 1:
            a, b = m.dist(x[0] + z[0], y[0] + z[0]), m.dist(x[0], y[0])
        else:
            a, b = m.dist(x + z, y + z), m.dist(x, y)
        if a != b:
            return x, y, z, a, b
    return None


@dataclass(frozen=True)
class QuasiBall:
    """{x : d(center, x) <= radius} for an l^p quasi-metric."""

    metric: LpQuasiMetric
    center: np.ndarray
    radius: float

    @property
    def dim(self):
        return self.metric.N

    def sample(self, n, rng):
        return self.metric.sample_ball(self.center, self.radius, n, rng)

    def contains(self, X, rtol=1e-12):
        return self.metric(np.atleast_2d(X) - self.center) <= self.radius * (1 + rtol)

    def to_dict(self):
        return {"kind": "quasi-ball", "center": self.center.tolist(), "radius": float(self.radius),
                "metric": self.metric.to_dict()}


def _scalar_map(f):
    if not isinstance(f, ConvexMap) or f.target_dim != 1:
        raise InputError("expected a real-valued ConvexMap")


def lp_certify(f, x0, r, a=None, p=0.5, N=DEFAULT_TRUNCATION, samples=2000, seed=0):
    """L = 4a/r on {d(x0, x) <= r/4}, given |f| <= a on {d(x0, x) <= r}.

    Without ``a`` the bound is computed on the cross-polytope with vertices
    x0 ± r^(1/p) e_k, which contains the quasi-ball of radius r.
    """
    _scalar_map(f)
    m = LpQuasiMetric(p, N)
    if f.domain_dim != m.N:
        raise InputError("map dimension differs from the truncation length")
    x0 = as_vector(x0, m.N, "x0")
    if not r > 0:
        raise InputError("r must be positive")
    rng = np.random.default_rng(seed)
    h = r ** (1.0 / p)
    V = np.vstack([x0 + h * np.eye(m.N), x0 - h * np.eye(m.N)])
    source = "given"
    if a is None:
        FV = f(V)[:, 0]
        F0 = float(f(x0)[0])
        upper = float(np.max(FV))
        a = max(abs(upper), abs(2.0 * F0 - upper))
        source = "vertex-bound"
    elif a < 0:
        raise InputError("a must be nonnegative")
    U = np.vstack([x0, V, m.sample_ball(x0, r, samples, rng)])
    vals = np.abs(f(U)[:, 0])
    k = int(np.argmax(vals))
    if vals[k] > a * (1 + 1e-9) + 1e-12:
        raise CertificationRefused("|f| exceeds a on the quasi-ball", witness=U[k],
                                   detail={"value": float(vals[k]), "a": float(a)})
    L = 4.0 * a / r
    return LipschitzCertificate("lp-metric", L, QuasiBall(m, x0, r / 4.0), m, abs_value(),
                                {"r": r, "a": a, "a_source": source, "p": p, "N": m.N,
                                 "metric": "lp-quasi"})


def lcs_certify(f, metric, prior, m):
    """L = 3 L_m 2^m with respect to the graduated metric.

    ``prior`` is a ball certificate for f with seminorm p_m (1-based index
    ``m`` into the metric's family).  The result holds on the part of its
    ball where p_m(x - x0) <= 1.
    """
    _scalar_map(f)
    if prior is None:
        raise InputError("lcs_certify needs a prior seminorm certificate")
    if not isinstance(metric, GraduatedMetric):
        raise InputError("lcs_certify needs a GraduatedMetric")
    if not 1 <= m <= len(metric.seminorms):
        raise InputError("index m is outside the seminorm family")
    pm = metric.seminorms[m - 1]
    if not isinstance(prior.region, Ball) or prior.p != pm:
        raise InputError("prior certificate must be a ball certificate for p_m")
    Lm = float(prior.constant)
    region = Ball(prior.region.center, min(prior.region.radius, 1.0), pm)
    L = 3.0 * Lm * 2.0 ** m
    return LipschitzCertificate("lcs-metric", L, region, metric, abs_value(),
                                {"L_m": Lm, "m": m, "metric": "graduated"}, prior.certified)


@dataclass(frozen=True)
class NonLipschitzWitness:
    x: float
    y: float
    ratio: float


def nonlipschitz_witness(M):
    """x, y near 0 with |x - y| / |x^3 - y^3| > M for the identity map."""
    if not M > 0:
        raise InputError("M must be positive")
    x = min(1.0, 1.0 / np.sqrt(2.0 * M))
    d = CubeMetric()
    ratio = abs(x) / d.dist(x, 0.0)
    while not ratio > M:
        x *= 0.5
        ratio = abs(x) / d.dist(x, 0.0)
    return NonLipschitzWitness(float(x), 0.0, float(ratio))


def metric_oracle(f, region, metric, pairs=10_000, seed=0):
    """Sampled max of |f(x) - f(y)| / d(x, y) over pairs in ``region``."""
    rng = np.random.default_rng(seed)
    X, Y = region.sample(pairs, rng), region.sample(pairs, rng)
    num = np.abs(f(X)[:, 0] - f(Y)[:, 0])
    ratio, _, _ = _kernels.ratio_max(num, metric.of_difference(X - Y))
    return ratio
