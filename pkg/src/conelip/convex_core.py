"""Evaluable convex maps and the one-variable slope machinery built on them."""

from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

from . import _kernels
from .errors import DomainError, InputError, ResourceError
from .order_core import PolyCone, as_vector, cone_from_dict, seminorm_from_dict
from .order_core.seminorms import MAX_ENUM_DIM, Seminorm

GRID_POINTS = 100


# ---------------------------------------------------------------------------
# domains
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Box:
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo, hi = as_vector(self.lo, name="box lo"), as_vector(self.hi, name="box hi")
        if lo.size != hi.size or np.any(lo > hi):
            raise InputError("box needs lo <= hi of equal dimension")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self):
        return self.lo.size

    def contains(self, X, rtol=1e-12):
        X = np.atleast_2d(X)
        slack = rtol * (1.0 + np.abs(X))
        return np.all((X >= self.lo - slack) & (X <= self.hi + slack), axis=1)

    def sample(self, n, rng):
        return rng.uniform(self.lo, self.hi, size=(n, self.dim))

    def to_dict(self):
        return {"kind": "box", "lo": self.lo.tolist(), "hi": self.hi.tolist()}


@dataclass(frozen=True)
class Ball:
    center: np.ndarray
    radius: float
    seminorm: Seminorm

    def __post_init__(self):
        object.__setattr__(self, "center", as_vector(self.center, self.seminorm.dim, "ball center"))
        if not self.radius > 0:
            raise InputError("ball radius must be positive")

    @property
    def dim(self):
        return self.center.size

    def contains(self, X, rtol=1e-12):
        X = np.atleast_2d(X)
        return self.seminorm(X - self.center) <= self.radius * (1.0 + rtol) + rtol

    def sample(self, n, rng):
        return self.seminorm.sample_ball(self.center, self.radius, n, rng)

    def to_dict(self):
        return {"kind": "ball", "center": self.center.tolist(), "radius": float(self.radius),
                "seminorm": self.seminorm.to_dict()}


def domain_from_dict(d):
    if d is None:
        return None
    kind = d.get("kind")
    if kind == "box":
        return Box(d["lo"], d["hi"])
    if kind == "ball":
        return Ball(d["center"], float(d["radius"]), seminorm_from_dict(d["seminorm"]))
    raise InputError(f"unknown domain kind {kind!r}")


# ---------------------------------------------------------------------------
# maps
# ---------------------------------------------------------------------------

class ConvexMap:
    """A map from R^n into R^m ordered by ``target_cone``.

    Call with a single point to get a length-``m`` vector, or with a ``(k, n)``
    batch to get ``(k, m)``.  Points outside ``domain`` raise
    :class:`~conelip.errors.DomainError`.
    """

    kind = None

    def __init__(self, domain_dim, target_dim, target_cone=None, domain=None):
        self.domain_dim = int(domain_dim)
        self.target_dim = int(target_dim)
        if target_cone is None:
            target_cone = PolyCone.nonneg_orthant(self.target_dim)
        if target_cone.dim != self.target_dim:
            raise InputError("target cone dimension differs from the map's target dimension")
        if domain is not None and domain.dim != self.domain_dim:
            raise InputError("domain dimension differs from the map's domain dimension")
        self.target_cone = target_cone
        self.domain = domain

    def __call__(self, x):
        X = np.asarray(x, dtype=float)
        single = X.ndim <= 1
        X = np.atleast_2d(X.reshape(1, -1) if X.ndim == 0 else X)
        if X.shape[1] != self.domain_dim:
            raise InputError(f"map expects points of dimension {self.domain_dim}, got {X.shape[1]}")
        if not np.all(np.isfinite(X)):
            raise InputError("non-finite evaluation point")
        if self.domain is not None:
            inside = self.domain.contains(X)
            if not np.all(inside):
                bad = X[np.flatnonzero(~inside)[0]]
                raise DomainError(f"point {bad.tolist()} lies outside the map's domain")
        Y = self._eval(X)
        return Y[0] if single else Y

    def _eval(self, X):
        raise NotImplementedError

    def scalar(self, x, index=0):
        return float(self(x)[index])

    def to_dict(self):
        d = {"body": self._body_dict(), "target_cone": self.target_cone.to_dict()}
        if self.domain is not None:
            d["domain"] = self.domain.to_dict()
        return d

    def _body_dict(self):
        raise NotImplementedError


class MaxAffine(ConvexMap):
    """Output ``j`` is ``max_k (A_j[k] . x + b_j[k])``."""

    kind = "max-affine"

    def __init__(self, pieces, target_cone=None, domain=None):
        parsed = []
        for A, b in pieces:
            A = np.atleast_2d(np.asarray(A, dtype=float))
            b = np.asarray(b, dtype=float).ravel()
            if A.shape[0] != b.size or A.size == 0:
                raise InputError("each max-affine output needs matching weight rows and offsets")
            parsed.append((A, b))
        if not parsed:
            raise InputError("max-affine map needs at least one output")
        dims = {A.shape[1] for A, _ in parsed}
        if len(dims) != 1:
            raise InputError("all max-affine pieces must share a domain dimension")
        self.pieces = parsed
        super().__init__(dims.pop(), len(parsed), target_cone, domain)

    def _eval(self, X):
        return np.column_stack([_kernels.max_affine_eval(A, b, X) for A, b in self.pieces])

    def _body_dict(self):
        return {"kind": self.kind,
                "pieces": [{"weights": A.tolist(), "offsets": b.tolist()} for A, b in self.pieces]}


class PsdQuadratic(ConvexMap):
    """Output ``j`` is ``x' Q_j x + c_j . x + d_j`` with each ``Q_j`` psd."""

    kind = "psd-quadratic"

    def __init__(self, Q, c=None, d=None, target_cone=None, domain=None, validate=True):
        Q = np.asarray(Q, dtype=float)
        if Q.ndim == 2:
            Q = Q[None]
        if Q.ndim != 3 or Q.shape[1] != Q.shape[2]:
            raise InputError("Q must be a square matrix or a stack of square matrices")
        m, n = Q.shape[0], Q.shape[1]
        c = np.zeros((m, n)) if c is None else np.asarray(c, dtype=float).reshape(m, n)
        d = np.zeros(m) if d is None else np.asarray(d, dtype=float).reshape(m)
        if not np.allclose(Q, np.transpose(Q, (0, 2, 1)), atol=1e-12):
            raise InputError("Q must be symmetric")
        if validate:
            for j, Qj in enumerate(Q):
                lo = np.linalg.eigvalsh(Qj).min() if n else 0.0
                if lo < -1e-12 * (1.0 + np.abs(Qj).max()):
                    raise InputError(f"Q[{j}] is not positive semidefinite (min eigenvalue {lo:.3e})")
        self.Q, self.c, self.d = Q, c, d
        super().__init__(n, m, target_cone, domain)

    def _eval(self, X):
        quad = np.einsum("ki,jil,kl->kj", X, self.Q, X)
        return quad + X @ self.c.T + self.d

    def negated(self):
        """The concave control map ``-f`` (not a convex map; built unchecked)."""
        return PsdQuadratic(-self.Q, -self.c, -self.d, self.target_cone, self.domain, validate=False)

    def _body_dict(self):
        return {"kind": self.kind, "Q": self.Q.tolist(), "c": self.c.tolist(), "d": self.d.tolist()}


class PiecewiseAffinePath(ConvexMap):
    """Map of one real variable, affine between breakpoints.

    ``t`` is ``direction . x``; a plain path uses ``direction = [1]``.  Outside
    the breakpoint range the map continues affinely with ``left_slope`` and
    ``right_slope`` (defaults: the slopes of the end segments).
    """

    kind = "pw-path"

    def __init__(self, breakpoints, values, left_slope=None, right_slope=None,
                 direction=None, target_cone=None, domain=None):
        t = as_vector(breakpoints, name="breakpoints")
        W = np.asarray(values, dtype=float)
        if W.ndim == 1:
            W = W[:, None]
        if W.shape[0] != t.size or t.size < 2:
            raise InputError("need at least two breakpoints with one value each")
        if np.any(np.diff(t) <= 0):
            raise InputError("breakpoints must be strictly increasing")
        self.t, self.values = t, W
        m = W.shape[1]
        self.slopes = np.diff(W, axis=0) / np.diff(t)[:, None]
        self.left_slope = self.slopes[0] if left_slope is None else as_vector(left_slope, m, "left_slope")
        self.right_slope = self.slopes[-1] if right_slope is None else as_vector(right_slope, m, "right_slope")
        self.direction = np.ones(1) if direction is None else as_vector(direction, name="direction")
        super().__init__(self.direction.size, m, target_cone, domain)

    def _eval(self, X):
        s = X @ self.direction
        t, W = self.t, self.values
        out = np.empty((s.size, W.shape[1]))
        left, right = s < t[0], s > t[-1]
        mid = ~(left | right)
        idx = np.clip(np.searchsorted(t, s[mid], side="right") - 1, 0, t.size - 2)
        out[mid] = W[idx] + self.slopes[idx] * (s[mid] - t[idx])[:, None]
        out[left] = W[0] + np.outer(s[left] - t[0], self.left_slope)
        out[right] = W[-1] + np.outer(s[right] - t[-1], self.right_slope)
        return out

    def _body_dict(self):
        return {"kind": self.kind, "breakpoints": self.t.tolist(), "values": self.values.tolist(),
                "left_slope": self.left_slope.tolist(), "right_slope": self.right_slope.tolist(),
                "direction": self.direction.tolist()}


class Composite(ConvexMap):
    """Stack scalar outputs of several maps into one R^m-valued map."""

    kind = "composite"

    def __init__(self, parts, target_cone=None, domain=None):
        parts = [(f, int(i)) for f, i in parts]
        if not parts:
            raise InputError("composite needs at least one part")
        dims = {f.domain_dim for f, _ in parts}
        if len(dims) != 1:
            raise InputError("composite parts must share a domain dimension")
        for f, i in parts:
            if not 0 <= i < f.target_dim:
                raise InputError("composite part index out of range")
        self.parts = parts
        super().__init__(dims.pop(), len(parts), target_cone, domain)

    def _eval(self, X):
        return np.column_stack([f(X)[:, i] for f, i in self.parts])

    def _body_dict(self):
        return {"kind": self.kind, "parts": [{"map": f.to_dict(), "index": i} for f, i in self.parts]}


def map_from_dict(d):
    """Build a :class:`ConvexMap` from its JSON document."""
    if not isinstance(d, dict) or "body" not in d:
        raise InputError("map document needs a 'body'")
    body = d["body"]
    cone = cone_from_dict(d["target_cone"]) if d.get("target_cone") else None
    domain = domain_from_dict(d.get("domain"))
    kind = body.get("kind")
    try:
        if kind == "max-affine":
            return MaxAffine([(p["weights"], p["offsets"]) for p in body["pieces"]], cone, domain)
        if kind == "psd-quadratic":
            return PsdQuadratic(body["Q"], body.get("c"), body.get("d"), cone, domain)
        if kind == "pw-path":
            return PiecewiseAffinePath(body["breakpoints"], body["values"], body.get("left_slope"),
                                       body.get("right_slope"), body.get("direction"), cone, domain)
        if kind == "composite":
            return Composite([(map_from_dict(p["map"]), p.get("index", 0)) for p in body["parts"]],
                             cone, domain)
    except KeyError as exc:
        raise InputError(f"map body {kind!r} is missing field {exc.args[0]!r}") from None
    raise InputError(f"unknown map body kind {kind!r}")


def evaluate(f, x):
    return f(as_vector(x, f.domain_dim, "x"))


def default_region(f, box=1.0):
    """Where to draw random points for checks on ``f``."""
    if f.domain is not None:
        return f.domain
    return Box(-box * np.ones(f.domain_dim), box * np.ones(f.domain_dim))


# ---------------------------------------------------------------------------
# one-variable sections
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScalarSection:
    """``t -> f(base + t * direction)``, optionally restricted to one output."""

    parent: ConvexMap
    base: np.ndarray
    direction: np.ndarray
    index: Optional[int] = 0

    def __post_init__(self):
        n = self.parent.domain_dim
        object.__setattr__(self, "base", as_vector(self.base, n, "base"))
        object.__setattr__(self, "direction", as_vector(self.direction, n, "direction"))

    @classmethod
    def of(cls, f, index=0):
        """The identity section of a map on R."""
        if f.domain_dim != 1:
            raise InputError("ScalarSection.of needs a map of one variable")
        return cls(f, np.zeros(1), np.ones(1), index)

    @property
    def cone(self):
        if self.index is None:
            return self.parent.target_cone
        return _real_line_cone()

    def __call__(self, t):
        T = np.asarray(t, dtype=float)
        Y = self.parent(self.base + np.multiply.outer(np.atleast_1d(T), self.direction))
        Y = Y if self.index is None else Y[:, self.index]
        return Y.reshape(T.shape + Y.shape[1:])


@lru_cache(maxsize=1)
def _real_line_cone():
    return PolyCone.nonneg_orthant(1)


def _as_scalar_fn(phi):
    if isinstance(phi, ScalarSection):
        if phi.index is None and phi.parent.target_dim != 1:
            raise InputError("this check needs a real-valued section")
        if phi.index is None:
            return lambda t: np.asarray(phi(t))[..., 0]
    return phi


def _order_margin(cone, V):
    """Signed margin of ``V in cone``: raw min coordinate for orthants, else -residual."""
    V = np.atleast_2d(V)
    U = cone.unit_generators
    if U.shape[0] == cone.dim and np.allclose(U, np.eye(cone.dim)):
        return np.min(V, axis=1)
    return -cone.residual(V)


@dataclass
class ChordReport:
    passed: dict
    margins: dict
    identity_residual: float

    @property
    def ok(self):
        return all(self.passed.values())


def chord_slope_check(phi, t1, t2, t3, tol=1e-9):
    """Check the four equivalent chord inequalities for a section at t1<t2<t3.

    Works for vector-valued sections (``index=None``) in the parent's target
    order.  Margins are ``rhs - lhs`` measured in the cone.
    """
    if not t1 < t2 < t3:
        raise InputError("chord check needs t1 < t2 < t3")
    cone = phi.cone if isinstance(phi, ScalarSection) else _real_line_cone()
    F = np.asarray(phi(np.array([t1, t2, t3], dtype=float)), dtype=float).reshape(3, -1)
    f1, f2, f3 = F
    w1, w3 = (t3 - t2) / (t3 - t1), (t2 - t1) / (t3 - t1)
    s12, s13, s23 = (f2 - f1) / (t2 - t1), (f3 - f1) / (t3 - t1), (f3 - f2) / (t3 - t2)
    pairs = {
        "a": (f2, w1 * f1 + w3 * f3),
        "b": (s12, s13),
        "c": (s13, s23),
        "d": (s12, s23),
    }
    passed, margins = {}, {}
    for key, (lhs, rhs) in pairs.items():
        diff = rhs - lhs
        margins[key] = float(_order_margin(cone, diff)[0])
        passed[key] = bool(cone.contains(diff, tol))
    identity = abs(w1 * t1 + w3 * t3 - t2)
    return ChordReport(passed, margins, identity)


class DegenerateDirection(InputError):
    """p(x - y) = 0, so the p-slope along the line is undefined."""


def p_slope(f, p, x, y, t0, t):
    """``(f(z_t) - f(x0)) / p(z_t - x0)`` along ``z_t = x + t (y - x)``."""
    x = as_vector(x, f.domain_dim, "x")
    y = as_vector(y, f.domain_dim, "y")
    if p(x - y) <= 0:
        raise DegenerateDirection("p(x - y) = 0; use the degenerate-direction argument instead")
    if t == t0:
        raise InputError("t must differ from t0")
    z, x0 = x + t * (y - x), x + t0 * (y - x)
    return (f(z) - f(x0)) / p(z - x0)


def slope_order_margin(f, p, x, y, t0, t, t_prime):
    """Margin of the p-slope monotonicity contract for one triple.

    ``t0 < t < t'``: Δ(t) ≤ Δ(t').  ``t < t0 < t'``: -Δ(t) ≤ Δ(t').
    ``t < t' < t0``: Δ(t') ≤ Δ(t), since on the left of ``t0`` the p-slope is
    the negated chord slope, which decreases as ``t`` moves towards ``t0``.
    Returns the signed order margin (>= 0 means it holds).
    """
    ts = sorted((t0, t, t_prime))
    if len(set(ts)) < 3 or not t < t_prime:
        raise InputError("need distinct t0, t < t'")
    lhs, rhs = p_slope(f, p, x, y, t0, t), p_slope(f, p, x, y, t0, t_prime)
    if t < t0 < t_prime:
        lhs = -lhs
    elif t_prime < t0:
        lhs, rhs = rhs, lhs
    return float(_order_margin(f.target_cone, rhs - lhs)[0])


def affine_detect(phi, a, b, t0, grid=GRID_POINTS, tol=1e-9):
    """True iff the section meets its chord over [a, b] at the interior point t0.

    A positive answer is confirmed on a ``grid``-point sweep of [a, b]; if the
    sweep disagrees the function is not convex there and InputError is raised.
    """
    if not a < b:
        raise InputError("affine_detect needs a < b")
    if not 0 < t0 < 1:
        raise InputError("t0 must lie in (0, 1)")
    phi = _as_scalar_fn(phi)
    fa, fb = float(phi(a)), float(phi(b))
    scale = 1.0 + abs(fa) + abs(fb)
    mid = float(phi((1 - t0) * a + t0 * b))
    if abs(mid - ((1 - t0) * fa + t0 * fb)) > tol * scale:
        return False
    s = np.linspace(0.0, 1.0, grid)
    vals = np.asarray(phi((1 - s) * a + s * b), dtype=float)
    if np.max(np.abs(vals - ((1 - s) * fa + s * fb))) > tol * scale:
        raise InputError("chord agreement at t0 but not on the grid: section is not convex")
    return True


@dataclass
class TailReport:
    direction: str
    witness_t: float
    witness_point: float
    witness_value: float
    grid_verified: bool


def tail_behavior(phi, a, b, M, grid=GRID_POINTS, span=None, domain=(-np.inf, np.inf)):
    """Monotone tail and an explicit point where the section exceeds ``M``.

    With φ(a) < φ(b) the section is strictly increasing on [b, ∞); with
    φ(a) > φ(b) strictly decreasing on (-∞, a].  The witness uses the slope
    extrapolation α_t = a + t (b - a).
    """
    if not a < b:
        raise InputError("tail_behavior needs a < b")
    phi = _as_scalar_fn(phi)
    fa, fb = float(phi(a)), float(phi(b))
    if fa == fb:
        raise InputError("phi(a) == phi(b): no conclusion")
    lo_dom, hi_dom = domain
    span = 10.0 * (b - a) if span is None else span
    if fb > fa:
        direction = "increasing"
        end = min(b + span, hi_dom)
        pts = np.linspace(b, end, grid)
        t = max(1.0, (M - fa) / (fb - fa))
    else:
        direction = "decreasing"
        start = max(a - span, lo_dom)
        pts = np.linspace(start, a, grid)
        t = min(0.0, (M - fa) / (fb - fa))
    vals = np.asarray(phi(pts), dtype=float)
    steps = np.diff(vals)
    verified = bool(np.all(steps > 0) if direction == "increasing" else np.all(steps < 0))
    point = a + t * (b - a)
    if not lo_dom <= point <= hi_dom:
        raise DomainError(f"witness point {point} lies outside the section's domain")
    value = float(phi(point))
    return TailReport(direction, float(t), float(point), value, verified)


@dataclass
class SuperadditivityReport:
    mode: str
    lhs: float
    rhs: float
    holds: bool
    intermediate: Optional[float] = None


def superadditive_check(phi, alpha, beta, mode="convex", samples=64, tol=1e-12):
    """φ(α+β) vs φ(α)+φ(β) for φ on [0, ∞) vanishing only at 0."""
    if not (alpha > 0 and beta > 0):
        raise InputError("alpha and beta must be positive")
    if mode not in ("convex", "concave"):
        raise InputError("mode must be 'convex' or 'concave'")
    phi = _as_scalar_fn(phi)
    if abs(float(phi(0.0))) > tol:
        raise InputError("precondition failed: phi(0) != 0")
    ts = np.linspace(0.0, alpha + beta, samples + 1)[1:]
    if np.any(np.asarray(phi(ts), dtype=float) <= 0):
        raise InputError("precondition failed: phi vanishes or is negative at some t > 0")
    lhs = float(phi(alpha + beta))
    rhs = float(phi(alpha)) + float(phi(beta))
    scale = tol * (1.0 + abs(lhs) + abs(rhs))
    if mode == "convex":
        lo, hi = min(alpha, beta), max(alpha, beta)
        inter = lo * float(phi(hi)) - hi * float(phi(lo))
        return SuperadditivityReport(mode, lhs, rhs, lhs >= rhs - scale and inter >= -scale, inter)
    return SuperadditivityReport(mode, lhs, rhs, lhs <= rhs + scale)


def hypercube_bound(f, center, half_width, spot_checks=1000, seed=0, max_dim=MAX_ENUM_DIM):
    """Max of ``f`` over the 2^n vertices of the cube ``center ± half_width``.

    Returns a float for scalar maps and a per-output vector otherwise.  The
    bound is spot-checked on random interior points.
    """
    center = as_vector(center, f.domain_dim, "center")
    n = center.size
    if n > max_dim:
        raise ResourceError(f"hypercube has 2^{n} vertices; cap is dimension {max_dim}")
    if not half_width > 0:
        raise InputError("half_width must be positive")
    signs = ((np.arange(2 ** n)[:, None] >> np.arange(n)) & 1) * 2.0 - 1.0
    V = center + half_width * signs
    beta = np.max(f(V), axis=0)
    if spot_checks:
        rng = np.random.default_rng(seed)
        X = center + rng.uniform(-half_width, half_width, size=(spot_checks, n))
        excess = np.max(f(X) - beta)
        if excess > 1e-9 * (1.0 + np.max(np.abs(beta))):
            raise InputError("interior value exceeds the vertex bound: map is not convex on the cube")
    return float(beta[0]) if f.target_dim == 1 else beta


@dataclass(frozen=True)
class EpigraphRecord:
    in_epi: bool
    in_strict_epi: bool


def epigraph_predicates(f, x, alpha, index=0):
    v = f.scalar(as_vector(x, f.domain_dim, "x"), index)
    return EpigraphRecord(v <= alpha, v < alpha)


def convexity_margin(f, samples=10_000, seed=0, region=None):
    """Worst margin of the C-convexity inequality over random (x1, x2, α)."""
    rng = np.random.default_rng(seed)
    region = default_region(f) if region is None else region
    X1, X2 = region.sample(samples, rng), region.sample(samples, rng)
    a = rng.uniform(size=(samples, 1))
    diff = (1 - a) * f(X1) + a * f(X2) - f((1 - a) * X1 + a * X2)
    return float(np.min(_order_margin(f.target_cone, diff)))


def epigraph_midpoint_margin(f, samples=10_000, seed=0, region=None, index=0):
    """Worst margin of midpoint-convexity of epi(f) over random point pairs.

    Half the sampled epigraph points sit on the graph itself, the rest above
    it.  A negative value means some midpoint left the epigraph.
    """
    rng = np.random.default_rng(seed)
    region = default_region(f) if region is None else region
    X1, X2 = region.sample(samples, rng), region.sample(samples, rng)
    lift = rng.exponential(size=(2, samples)) * (rng.uniform(size=(2, samples)) < 0.5)
    a1 = f(X1)[:, index] + lift[0]
    a2 = f(X2)[:, index] + lift[1]
    mid = f(0.5 * (X1 + X2))[:, index]
    return float(np.min(0.5 * (a1 + a2) - mid))
