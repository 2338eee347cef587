"""Lipschitz certificates for convex maps and the sampling oracle that checks them."""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels
from .convex_core import Ball, Box, ConvexMap, MaxAffine, PsdQuadratic, _as_scalar_fn
from .errors import CertificationRefused, InputError, ResourceError
from .order_core import MaxSeminorm, PolyCone, Seminorm, as_vector, sup_norm

log = logging.getLogger(__name__)

DEFAULT_PAIRS = 10_000
PRECONDITION_SAMPLES = 2_000
FORMULAS = ("scalar-1d", "ball-2beta", "compact-cover", "o-lipschitz", "equi-family", "lp-metric",
            "lcs-metric")


# ---------------------------------------------------------------------------
# regions and certificates
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PointCloud:
    points: np.ndarray

    def __post_init__(self):
        P = np.atleast_2d(np.asarray(self.points, dtype=float))
        if P.size == 0 or not np.all(np.isfinite(P)):
            raise InputError("point cloud must be a nonempty finite array")
        object.__setattr__(self, "points", P)

    @property
    def dim(self):
        return self.points.shape[1]

    def sample(self, n, rng):
        return self.points[rng.integers(0, self.points.shape[0], size=n)]

    def to_dict(self):
        return {"kind": "cloud", "points": self.points.tolist()}


@dataclass
class LipschitzCertificate:
    """A region, the seminorm pair, and a constant valid on that region.

    ``constant`` is a float, or a vector for lattice (o-Lipschitz)
    certificates.  ``p`` measures the domain and ``q`` the target; ``q`` is
    ``None`` for lattice certificates.  ``certified`` is False when an input
    bound was only estimated by sampling.
    """

    formula: str
    constant: object
    region: object
    p: object
    q: Optional[Seminorm]
    inputs: dict
    certified: bool = True
    oracle: Optional[dict] = None

    def __post_init__(self):
        if self.formula not in FORMULAS:
            raise InputError(f"unknown certificate formula {self.formula!r}")
        c = np.asarray(self.constant, dtype=float)
        if np.any(c < 0) or not np.all(np.isfinite(c)):
            raise InputError("certificate constant must be finite and nonnegative")

    def to_dict(self):
        const = self.constant
        const = const.tolist() if isinstance(const, np.ndarray) else float(const)
        d = {
            "formula": self.formula,
            "constant": const,
            "certified": self.certified,
            "region": self.region.to_dict(),
            "domain_seminorm": self.p.to_dict(),
            "target": self.q.to_dict() if self.q is not None else {"kind": "lattice"},
            "inputs": _jsonable(self.inputs),
        }
        if self.oracle is not None:
            d["oracle"] = _jsonable(self.oracle)
        return d


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, Seminorm):
        return obj.to_dict()
    return obj


def abs_value():
    """|.| on R as a seminorm."""
    return sup_norm(1)


# ---------------------------------------------------------------------------
# oracle
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OracleResult:
    max_ratio: float
    pairs: int
    skipped: int
    max_q_skipped: float
    seed: int

    def to_dict(self):
        return {"pairs": self.pairs, "max_ratio": self.max_ratio, "skipped": self.skipped,
                "max_q_skipped": self.max_q_skipped, "seed": self.seed}


def _sample_pairs(region, p, pairs, rng, kernel_fraction=0.1):
    X, Y = region.sample(pairs, rng), region.sample(pairs, rng)
    ker = getattr(p, "kernel_mask", None)
    if ker is not None and np.any(ker) and np.any(~ker):
        # some pairs differ only along the kernel of p
        sel = rng.uniform(size=pairs) < kernel_fraction
        Y[np.ix_(sel, ~ker)] = X[np.ix_(sel, ~ker)]
    return X, Y


def slope_oracle(f, region, q=None, p=None, pairs=DEFAULT_PAIRS, seed=0, zero_tol=0.0):
    """Largest sampled ``q(f(x) - f(y)) / p(x - y)`` over random pairs in ``region``.

    ``p`` may be any callable on difference batches (a seminorm or a
    translation-invariant metric).  Pairs with ``p(x - y) <= zero_tol`` are
    skipped and counted; the largest ``q`` value among them is reported.
    """
    rng = np.random.default_rng(seed)
    p = sup_norm(region.dim) if p is None else p
    q = abs_value() if q is None else q
    X, Y = _sample_pairs(region, p, pairs, rng)
    num = q(f(X) - f(Y))
    den = np.asarray(p(X - Y), dtype=float)
    ratio, skipped, gap = _kernels.ratio_max(num, den, zero_tol)
    if skipped:
        log.info("slope oracle skipped %d pairs with p(x - y) = 0 (max q gap %.3g)", skipped, gap)
    return OracleResult(ratio, int(pairs), skipped, gap, int(seed))


def empirical_lipschitz(f, region, q=None, p=None, pairs=DEFAULT_PAIRS, seed=0):
    return slope_oracle(f, region, q, p, pairs, seed).max_ratio


def section_oracle(phi, lo, hi, pairs=DEFAULT_PAIRS, seed=0):
    """Sampled max of |phi(s) - phi(t)| / |s - t| for s, t uniform in [lo, hi]."""
    rng = np.random.default_rng(seed)
    g = _as_scalar_fn(phi)
    S, T = rng.uniform(lo, hi, size=(2, pairs))
    num = np.abs(np.asarray(g(S), dtype=float) - np.asarray(g(T), dtype=float))
    ratio, skipped, gap = _kernels.ratio_max(num, np.abs(S - T))
    return OracleResult(ratio, int(pairs), skipped, gap, int(seed))


def lattice_slope_oracle(f, region, p=None, pairs=DEFAULT_PAIRS, seed=0):
    """Per-coordinate max of ``|f_i(x) - f_i(y)| / p(x - y)``."""
    rng = np.random.default_rng(seed)
    p = sup_norm(region.dim) if p is None else p
    X, Y = _sample_pairs(region, p, pairs, rng)
    num = np.abs(f(X) - f(Y))
    den = p(X - Y)
    keep = den > 0
    if not np.any(keep):
        return np.zeros(f.target_dim)
    return np.max(num[keep] / den[keep, None], axis=0)


def grid_slope_max(phi, lo, hi, points=4_000_001):
    """Max |slope| between neighbours on a uniform grid of [lo, hi].

    For a convex section the all-pairs maximum on the grid is attained by a
    neighbouring pair, so this equals the brute-force pairwise value.
    """
    phi = _as_scalar_fn(phi)
    t = np.linspace(lo, hi, int(points))
    return _kernels.max_adjacent_slope(t, np.asarray(phi(t), dtype=float))


def cloud_slope_max(f, points, q=None, p=None, index=0):
    """All-pairs max slope over a point cloud (exact oracle for small clouds)."""
    P = np.atleast_2d(np.asarray(points, dtype=float))
    if P.shape[1] == 1 and f.target_dim == 1 and q is None and p is None:
        return _kernels.max_pairwise_slope(P[:, 0], f(P)[:, index])
    q = abs_value() if q is None else q
    p = sup_norm(P.shape[1]) if p is None else p
    i, j = np.triu_indices(P.shape[0], k=1)
    FP = f(P)
    ratio, _, _ = _kernels.ratio_max(q(FP[i] - FP[j]), p(P[i] - P[j]))
    return ratio


# ---------------------------------------------------------------------------
# scalar formula
# ---------------------------------------------------------------------------

def certify_1d(phi, a, alpha, beta, b):
    """L = max(|A|, |B|) from the outer chord slopes; valid on [alpha, beta]."""
    if not a < alpha < beta < b:
        raise InputError("certify_1d needs a < alpha < beta < b")
    g = _as_scalar_fn(phi)
    A = (float(g(alpha)) - float(g(a))) / (alpha - a)
    B = (float(g(b)) - float(g(beta))) / (b - beta)
    L = max(abs(A), abs(B))
    return LipschitzCertificate("scalar-1d", L, Box([alpha], [beta]), abs_value(), abs_value(),
                                {"a": a, "alpha": alpha, "beta": beta, "b": b, "A": A, "B": B})


# ---------------------------------------------------------------------------
# ball formula
# ---------------------------------------------------------------------------

def _check_ball_in_domain(f, ball):
    dom = f.domain
    if dom is None:
        return
    h = ball.seminorm.bounding_halfwidths(ball.radius)
    if isinstance(dom, Box):
        if not np.all(np.isfinite(h)):
            raise InputError("the ball is unbounded along the kernel of p but the domain is a box")
        if np.all(ball.center - h >= dom.lo) and np.all(ball.center + h <= dom.hi):
            return
    pts = ball.sample(500, np.random.default_rng(0))
    try:
        pts = np.vstack([pts, ball.seminorm.ball_vertices(ball.center, ball.radius)])
    except (ResourceError, NotImplementedError):
        pass
    if not np.all(dom.contains(pts)):
        raise InputError("the ball B_p[x0, R] is not inside the map's domain")


def fullness_witness(q, cone, samples=400, seed=0, tol=1e-9):
    """Search for a chain x <= y <= z with q(y) > max(q(x), q(z)).

    Returns ``(x, y, z)`` or ``None``.  Endpoints are drawn on the unit ball
    of ``q`` (vertices first), ``z`` is pushed along random cone directions
    to the boundary, and ``y`` runs over the corners of the coefficient box.
    """
    if q.dim != cone.dim:
        raise InputError("target seminorm and cone dimensions differ")
    rng = np.random.default_rng(seed)
    zero = np.zeros(q.dim)
    try:
        V = q.ball_vertices(zero, 1.0)
    except (ResourceError, NotImplementedError):
        V = np.zeros((0, q.dim))
    X = np.vstack([V, q.sample_ball(zero, 1.0, samples, rng, kernel_span=1.0)])
    U = cone.unit_generators
    m = U.shape[0]
    lam = rng.exponential(size=(X.shape[0], m)) * (rng.uniform(size=(X.shape[0], m)) < 0.7)
    lam[np.all(lam == 0, axis=1), 0] = 1.0
    Cd = lam @ U
    # largest t with q(x + t c) <= 1, by bisection (capped for kernel directions)
    lo, hi = np.zeros(X.shape[0]), np.full(X.shape[0], 8.0)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        ok = q(X + mid[:, None] * Cd) <= 1.0
        lo, hi = np.where(ok, mid, lo), np.where(ok, hi, mid)
    t = lo
    masks = ((np.arange(2 ** min(m, 10))[:, None] >> np.arange(min(m, 10))) & 1).astype(float)
    for i in range(X.shape[0]):
        coef = t[i] * lam[i]
        if m > 10:
            sub = rng.uniform(size=(1024, m)) < 0.5
            Y = X[i] + (sub * coef) @ U
        else:
            Y = X[i] + (masks * coef) @ U
        qy = q(Y)
        bound = max(q(X[i]), q(X[i] + coef @ U))
        j = int(np.argmax(qy))
        if qy[j] > bound * (1 + tol) + tol:
            return X[i], Y[j], X[i] + coef @ U
    return None


def _kernel_structurally_flat(f, ker):
    if isinstance(f, MaxAffine):
        return all(np.all(A[:, ker] == 0) for A, _ in f.pieces)
    if isinstance(f, PsdQuadratic):
        return bool(np.all(f.Q[:, ker, :] == 0) and np.all(f.Q[:, :, ker] == 0) and np.all(f.c[:, ker] == 0))
    return False


def _check_kernel_flat(f, ball, V):
    """f must be constant along kernel directions of p for a finite bound."""
    ker = ball.seminorm.kernel_mask
    if not np.any(ker):
        return True
    base = np.vstack([ball.center, V])
    F0 = f(base)
    scale = 1.0 + np.max(np.abs(F0))
    for j in np.flatnonzero(ker):
        for s in (1.0, -1.0, 1e3, -1e3, 1e6, -1e6):
            P = base.copy()
            P[:, j] += s * (1.0 + ball.radius)
            diff = np.max(np.abs(f(P) - F0), axis=1)
            k = int(np.argmax(diff))
            if diff[k] > 1e-9 * scale:
                raise CertificationRefused(
                    "f varies along the kernel of p, so q(f) is unbounded on the ball",
                    witness=P[k], detail={"coordinate": int(j), "change": float(diff[k])})
    return _kernel_structurally_flat(f, ker)


def ball_bound(f, q, ball, samples=PRECONDITION_SAMPLES, seed=0):
    """An upper bound for q(f(x)) on the ball, plus whether it is certified.

    With ball vertices v_i (center x0) every point satisfies
    2 f(x0) - sum l_i f(v_i) <= f(x) <= sum l_j f(v_j), so for a full q the
    value q(f(x)) is at most the largest q over f(v_i) and 2 f(x0) - f(v_i).
    Falls back to a sampled maximum (not certified) when the vertices cannot
    be enumerated.
    """
    try:
        V = ball.seminorm.ball_vertices(ball.center, ball.radius)
    except (ResourceError, NotImplementedError):
        V = None
    if V is None:
        X = np.vstack([ball.center, ball.sample(max(samples, 10_000), np.random.default_rng(seed))])
        return float(np.max(q(f(X)))), False
    certified = _check_kernel_flat(f, ball, V)
    FV = f(V)
    F0 = f(ball.center)
    beta = max(float(np.max(q(FV))), float(np.max(q(2.0 * F0 - FV))))
    return beta, certified


def _check_beta(f, q, ball, beta, samples, seed):
    rng = np.random.default_rng(seed)
    X = [ball.center[None], ball.sample(samples, rng)]
    try:
        X.append(ball.seminorm.ball_vertices(ball.center, ball.radius))
    except (ResourceError, NotImplementedError):
        pass
    X = np.vstack(X)
    vals = q(f(X))
    k = int(np.argmax(vals))
    if vals[k] > beta * (1 + 1e-9) + 1e-12:
        raise CertificationRefused("q(f(x)) exceeds beta on the ball", witness=X[k],
                                   detail={"value": float(vals[k]), "beta": float(beta)})


def _target_seminorm(f, q):
    if q is None:
        if f.target_dim != 1:
            raise InputError("a target seminorm q is required for vector-valued maps")
        return abs_value()
    if q.dim != f.target_dim:
        raise InputError("q dimension differs from the map's target dimension")
    return q


def _check_radii(R, r):
    if not (0 < r < R):
        raise InputError(f"need 0 < r < R, got r={r}, R={R}")


def certify_ball(f, q, p, x0, R, r, beta=None, samples=PRECONDITION_SAMPLES, seed=0):
    """L = 2 beta / (R - r) on B_p[x0, r], given q(f) <= beta on B_p[x0, R].

    ``q`` must be the gauge of a full absolutely convex set for the target
    cone; a sampled search for a violating chain refuses otherwise.  When
    ``beta`` is omitted it is computed by :func:`ball_bound`.
    """
    _check_radii(R, r)
    if not isinstance(f, ConvexMap):
        raise InputError("certify_ball needs a ConvexMap")
    q = _target_seminorm(f, q)
    x0 = as_vector(x0, f.domain_dim, "x0")
    if p.dim != f.domain_dim:
        raise InputError("p dimension differs from the map's domain dimension")
    big = Ball(x0, R, p)
    _check_ball_in_domain(f, big)
    if f.target_dim > 1:
        w = fullness_witness(q, f.target_cone, seed=seed)
        if w is not None:
            raise CertificationRefused("q is not the gauge of a full set for the target cone",
                                       witness=w[1], detail={"lower": w[0].tolist(), "upper": w[2].tolist()})
    certified = True
    if beta is None:
        beta, certified = ball_bound(f, q, big, samples, seed)
        source = "vertex-bound" if certified else "sampled"
    else:
        if beta < 0:
            raise InputError("beta must be nonnegative")
        source = "given"
        if np.any(p.kernel_mask):
            _check_kernel_flat(f, big, np.zeros((0, f.domain_dim)))
    _check_beta(f, q, big, beta, samples, seed)
    L = 2.0 * beta / (R - r)
    return LipschitzCertificate("ball-2beta", L, Ball(x0, r, p), p, q,
                                {"R": R, "r": r, "beta": beta, "beta_source": source}, certified)


# ---------------------------------------------------------------------------
# compact cover, lattice, families
# ---------------------------------------------------------------------------

def certify_compact(f, cloud, local_certificates):
    """Glue ball certificates covering a point cloud into one constant.

    Every cloud point must lie in the open ball of some local certificate.
    The result uses the pointwise max of the local seminorms and the max of
    the local constants.
    """
    certs = list(local_certificates)
    if not certs:
        raise InputError("need at least one local certificate")
    cloud = cloud if isinstance(cloud, PointCloud) else PointCloud(cloud)
    if cloud.dim != f.domain_dim:
        raise InputError("cloud dimension differs from the map's domain dimension")
    for c in certs:
        if c.formula != "ball-2beta" or not isinstance(c.region, Ball):
            raise InputError("local certificates must be ball certificates")
    q = certs[0].q
    if any(c.q != q for c in certs):
        raise InputError("local certificates must share the target seminorm")
    covered = np.zeros(cloud.points.shape[0], dtype=bool)
    for c in certs:
        covered |= c.p(cloud.points - c.region.center) < c.region.radius
    if not np.all(covered):
        missing = cloud.points[~covered]
        raise InputError(f"{missing.shape[0]} cloud points are not covered: {missing[:5].tolist()}")
    ps = []
    for c in certs:
        if c.p not in ps:
            ps.append(c.p)
    p = ps[0] if len(ps) == 1 else MaxSeminorm(ps)
    L = max(float(c.constant) for c in certs)
    return LipschitzCertificate("compact-cover", L, cloud, p, q,
                                {"local_constants": [float(c.constant) for c in certs],
                                 "centers": [c.region.center for c in certs],
                                 "radii": [c.region.radius for c in certs]},
                                all(c.certified for c in certs))


def certify_o_lipschitz(f, x0, R, r, z, p=None, samples=PRECONDITION_SAMPLES, seed=0):
    """Lattice constant y = 2 z / (R - r) for a map into R^m ordered coordinatewise.

    Requires |f(x)| <= z coordinatewise on B_p[x0, R]; checked on samples.
    """
    _check_radii(R, r)
    orthant = PolyCone.nonneg_orthant(f.target_dim)
    if not np.allclose(f.target_cone.unit_generators, orthant.unit_generators):
        raise InputError("o-Lipschitz certificates need the coordinate order on the target")
    z = as_vector(z, f.target_dim, "z")
    if np.any(z < 0):
        raise InputError("z must be nonnegative")
    x0 = as_vector(x0, f.domain_dim, "x0")
    p = sup_norm(f.domain_dim) if p is None else p
    big = Ball(x0, R, p)
    _check_ball_in_domain(f, big)
    rng = np.random.default_rng(seed)
    X = [x0[None], big.sample(samples, rng)]
    try:
        X.append(p.ball_vertices(x0, R))
    except (ResourceError, NotImplementedError):
        pass
    X = np.vstack(X)
    excess = np.abs(f(X)) - z * (1 + 1e-9) - 1e-12
    k, i = np.unravel_index(int(np.argmax(excess)), excess.shape)
    if excess[k, i] > 0:
        raise CertificationRefused("|f(x)| exceeds z on the ball", witness=X[k],
                                   detail={"coordinate": int(i), "value": float(abs(f(X[k])[i]))})
    y = 2.0 * z / (R - r)
    return LipschitzCertificate("o-lipschitz", y, Ball(x0, r, p), p, None, {"R": R, "r": r, "z": z})


def certify_equi(F, q, p, x0, R, r, samples=PRECONDITION_SAMPLES, seed=0):
    """One constant 2 beta / (R - r) for every member, beta the largest member bound."""
    _check_radii(R, r)
    F = list(F)
    if not F:
        raise InputError("the family is empty")
    x0 = as_vector(x0, F[0].domain_dim, "x0")
    betas, certified = [], True
    for i, f in enumerate(F):
        try:
            c = certify_ball(f, q, p, x0, R, r, samples=samples, seed=seed)
        except (CertificationRefused, ResourceError, InputError) as exc:
            raise CertificationRefused(f"bound for family member {i} failed: {exc}",
                                       witness=getattr(exc, "witness", None),
                                       detail={"member": i}) from exc
        betas.append(c.inputs["beta"])
        certified &= c.certified
    beta = max(betas)
    L = 2.0 * beta / (R - r)
    qq = _target_seminorm(F[0], q)
    return LipschitzCertificate("equi-family", L, Ball(x0, r, p), p, qq,
                                {"R": R, "r": r, "beta": beta, "member_betas": betas}, certified)


def check_certificate(cert, f, pairs=DEFAULT_PAIRS, seed=0, tol=1e-9):
    """Run the sampling oracle on a certificate's region and attach the result.

    Returns True when the sampled slope is within ``constant * (1 + tol)``.
    """
    if cert.formula == "o-lipschitz":
        slopes = lattice_slope_oracle(f, cert.region, cert.p, pairs, seed)
        cert.oracle = {"pairs": pairs, "max_ratio": slopes, "seed": seed}
        return bool(np.all(slopes <= np.asarray(cert.constant) * (1 + tol) + 1e-12))
    if cert.formula == "scalar-1d":
        res = section_oracle(f, cert.region.lo[0], cert.region.hi[0], pairs, seed)
    else:
        res = slope_oracle(f, cert.region, cert.q, cert.p, pairs, seed)
    cert.oracle = res.to_dict()
    ok = res.max_ratio <= float(cert.constant) * (1 + tol) + 1e-12
    return bool(ok and res.max_q_skipped <= 1e-9)
