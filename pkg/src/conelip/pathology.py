"""Counterexamples: a non-normal block cone with unbounded order intervals and convex
paths that blow up near 0, and the unbounded derivative functional on polynomials."""

import csv
from dataclasses import dataclass, field

import numpy as np

from .convex_core import PiecewiseAffinePath, chord_slope_check, ScalarSection
from .errors import InputError
from .order_core import PolyCone, as_vector

MAX_BLOCKS = 30


def block_sup_norm(v):
    return float(np.max(np.abs(v)))


@dataclass(frozen=True)
class BlockConeSpace:
    """R^(2N) ordered by the product of thin sectors cone{(1, e_k), (-1, e_k)}, e_k = 3^-k / 2."""

    N: int

    def __post_init__(self):
        if not 1 <= int(self.N) <= MAX_BLOCKS:
            raise InputError(f"block count must lie in [1, {MAX_BLOCKS}]")

    @property
    def dim(self):
        return 2 * self.N

    def epsilon(self, k):
        return 0.5 * 3.0 ** (-k)

    def block_cone(self, k):
        e = self.epsilon(k)
        return PolyCone([[1.0, e], [-1.0, e]])

    @property
    def cone(self):
        G = np.zeros((2 * self.N, 2 * self.N))
        for k in range(1, self.N + 1):
            e = self.epsilon(k)
            i = 2 * (k - 1)
            G[i, i:i + 2] = (1.0, e)
            G[i + 1, i:i + 2] = (-1.0, e)
        return PolyCone(G)

    def embed(self, k, v):
        out = np.zeros(2 * self.N)
        out[2 * (k - 1):2 * k] = v
        return out


@dataclass(frozen=True)
class BlockPairs:
    space: BlockConeSpace
    x: np.ndarray   # row k-1 is x_k
    y: np.ndarray

    def __len__(self):
        return self.space.N


def build_block_pairs(N):
    """x_k = (3^k, 1/2) and y_k = (0, 1) placed in block k, k = 1..N."""
    space = BlockConeSpace(int(N))
    X = np.zeros((space.N, space.dim))
    Y = np.zeros((space.N, space.dim))
    for k in range(1, space.N + 1):
        X[k - 1] = space.embed(k, (3.0 ** k, 0.5))
        Y[k - 1] = space.embed(k, (0.0, 1.0))
    return BlockPairs(space, X, Y)


@dataclass
class Step1Report:
    n: int
    w: np.ndarray
    z_n: np.ndarray
    norm_z_n: float
    tail_norm: float
    lower_bound: float
    order_ok: bool


def vesely_step1(pairs, n):
    """z_n = w - sum_{k<n} 2^-k y_k - 2^-n x_n lies in [0, w]_o yet ||z_n|| ~ (3/2)^n."""
    N = len(pairs)
    if not 1 <= n <= N:
        raise InputError(f"n must lie in [1, {N}]")
    c = 0.5 ** np.arange(1, N + 1)
    w = c @ pairs.y
    head = c[:n - 1] @ pairs.y[:n - 1] if n > 1 else np.zeros_like(w)
    z = w - head - 0.5 ** n * pairs.x[n - 1]
    C = pairs.space.cone
    order_ok = bool(C.contains(z) and C.contains(w - z))
    tail = block_sup_norm(w - head)
    return Step1Report(n, w, z, block_sup_norm(z), tail, 1.5 ** n - tail, order_ok)


def alpha_upper_bound(lam):
    return (1.0 - lam + lam * lam) / lam


@dataclass
class Step2Report:
    lam: float
    alpha: float
    phi: PiecewiseAffinePath
    w: np.ndarray
    w_n: np.ndarray           # row n is w_n, n = 0..n_max
    blocks_used: list
    slopes: np.ndarray        # row n is mu_n, n = 0..n_max-1
    checks: dict = field(default_factory=dict)


def vesely_step2(lam, alpha, pairs, n_max):
    """Convex path with phi(lam^n) = w_n, ||w_n|| > n, truncated at n_max.

    w_n = lam^(2n) w + (alpha - 1) lam^(2n) 2^-k x_k with k the smallest block
    index giving ||w_n|| > n.  Breakpoints are 0, lam^n_max, ..., lam, 1; the
    path is 0 on (-inf, 0] and continues with slope mu_0 beyond 1.
    """
    if not 0 < lam < 1:
        raise InputError("lambda must lie in (0, 1)")
    hi = alpha_upper_bound(lam)
    if not 1 < alpha < hi:
        raise InputError(f"alpha must lie in (1, (1 - lam + lam^2)/lam) = (1, {hi!r})")
    N = len(pairs)
    if not 1 <= n_max:
        raise InputError("n_max must be positive")
    c = 0.5 ** np.arange(1, N + 1)
    w = c @ pairs.y
    W, used = [], []
    for n in range(n_max + 1):
        base = lam ** (2 * n) * w
        for k in range(1, N + 1):
            cand = base + (alpha - 1.0) * lam ** (2 * n) * c[k - 1] * pairs.x[k - 1]
            if block_sup_norm(cand) > n:
                break
        else:
            raise InputError(f"{N} blocks cannot reach norm > {n}; add blocks or lower n_max")
        W.append(cand)
        used.append(k)
    W = np.array(W)
    t = np.concatenate([[0.0], lam ** np.arange(n_max, -1, -1.0)])
    values = np.vstack([np.zeros(pairs.space.dim), W[::-1]])
    mu = np.array([(W[n] - W[n + 1]) / (lam ** n - lam ** (n + 1)) for n in range(n_max)])
    C = pairs.space.cone
    phi = PiecewiseAffinePath(t, values, left_slope=np.zeros(pairs.space.dim),
                              right_slope=mu[0] if n_max else None, target_cone=C)
    report = Step2Report(lam, alpha, phi, w, W, used, mu)
    report.checks = step2_checks(report)
    return report


def step2_checks(rep):
    C = rep.phi.target_cone
    lam, alpha = rep.lam, rep.alpha
    disjoint = alpha * lam * lam < 1
    # membership of w_n in Delta_n
    in_delta = all(C.le(lam ** (2 * n) * rep.w, wn) and C.le(wn, alpha * lam ** (2 * n) * rep.w)
                   for n, wn in enumerate(rep.w_n))
    mono = all(C.le(rep.slopes[n + 1], rep.slopes[n]) for n in range(len(rep.slopes) - 1))
    norms = [block_sup_norm(rep.phi(np.array([lam ** n]))) for n in range(len(rep.w_n))]
    growth = all(nv > n for n, nv in enumerate(norms))
    section = ScalarSection(rep.phi, [0.0], [1.0], index=None)
    t = rep.phi.t
    chords = all(chord_slope_check(section, t[i], t[i + 1], t[i + 2]).ok for i in range(t.size - 2))
    return {"alpha_lambda_sq": alpha * lam * lam, "disjoint": bool(disjoint), "in_delta": bool(in_delta),
            "mu_monotone": bool(mono), "norms": norms, "norm_growth": bool(growth),
            "chords": bool(chords)}


@dataclass
class Step3Report:
    f: PiecewiseAffinePath
    values_along_v: np.ndarray
    norms_along_v: list
    slab_bounded: bool


def vesely_step3(phi, x_star, v, d=None, lam=None, n_max=None, slab_eps=0.5, samples=500, seed=0):
    """f(x) = phi(<x_star, x>) on R^d.

    Returns the map; when ``lam`` and ``n_max`` are given also a report with
    f(lam^n v) and an order-boundedness check on the slab |<x_star, x>| < eps.
    """
    x_star = as_vector(x_star, d, "x_star")
    v = as_vector(v, x_star.size, "v")
    if abs(float(x_star @ v) - 1.0) > 1e-12:
        raise InputError("need <x_star, v> = 1")
    if phi.domain_dim != 1:
        raise InputError("phi must be a path of one variable")
    f = PiecewiseAffinePath(phi.t, phi.values, phi.left_slope, phi.right_slope,
                            direction=x_star * phi.direction[0], target_cone=phi.target_cone)
    if lam is None or n_max is None:
        return f
    pts = np.array([lam ** n * v for n in range(n_max + 1)])
    vals = f(pts)
    norms = [block_sup_norm(row) for row in vals]
    # slab points: x = s v + (component in the kernel of x_star)
    rng = np.random.default_rng(seed)
    s = rng.uniform(-slab_eps, slab_eps, size=samples)
    K = rng.normal(size=(samples, x_star.size))
    K -= np.outer(K @ x_star, x_star) / (x_star @ x_star)
    S = np.outer(s, v) + K
    top = phi(np.array([max(slab_eps, 0.0)]))
    C = phi.target_cone
    FS = f(S)
    bounded = bool(np.all(C.contains(FS)) and np.all(C.contains(top - FS)))
    return Step3Report(f, vals, norms, bounded)


@dataclass(frozen=True)
class PolynomialReport:
    n: int
    norm_Pn: float
    f_Pn: float
    sampled_norm: float

    @property
    def ratio(self):
        return self.f_Pn / self.norm_Pn


def polynomial_sup_norm(coeffs, samples=100_000):
    """Sampled max of |P| on [-1, 1] (endpoints included)."""
    P = np.polynomial.Polynomial(coeffs)
    t = np.linspace(-1.0, 1.0, int(samples))
    return float(np.max(np.abs(P(t))))


def derivative_at_one(coeffs):
    return float(np.polynomial.Polynomial(coeffs).deriv()(1.0))


def polynomial_example(n, sample_count=100_000):
    """P_n = x^n / sqrt(n): sup norm 1/sqrt(n) but P_n'(1) = sqrt(n)."""
    n = int(n)
    if n < 1:
        raise InputError("n must be positive")
    root = np.sqrt(n)
    coeffs = np.zeros(n + 1)
    coeffs[n] = 1.0 / root
    return PolynomialReport(n, float(1.0 / root), float(root), polynomial_sup_norm(coeffs, sample_count))


def write_step1_csv(path, reports):
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["n", "norm_z_n", "lower_bound"])
        for r in reports:
            wr.writerow([r.n, repr(r.norm_z_n), repr(r.lower_bound)])


def write_polynomial_csv(path, reports):
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["n", "norm_Pn", "f_Pn", "ratio"])
        for r in reports:
            wr.writerow([r.n, repr(r.norm_Pn), repr(r.f_Pn), repr(r.ratio)])
