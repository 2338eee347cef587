"""Finitely generated cones, the order they induce, and order intervals."""

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog, nnls

from ..errors import InputError

DEFAULT_TOL = 1e-9


def as_vector(x, dim=None, name="vector"):
    """Validate a finite 1-d float vector, optionally of a given dimension."""
    v = np.asarray(x, dtype=float)
    if v.ndim == 0:
        v = v.reshape(1)
    if v.ndim != 1 or v.size == 0:
        raise InputError(f"{name} must be a nonempty 1-d list of numbers")
    if not np.all(np.isfinite(v)):
        raise InputError(f"{name} has non-finite entries")
    if dim is not None and v.size != dim:
        raise InputError(f"{name} has dimension {v.size}, expected {dim}")
    return v


@dataclass(frozen=True)
class _Block:
    coords: np.ndarray
    gens: np.ndarray          # unit generators restricted to coords, one per row
    inverse: np.ndarray = None  # set when the block is simplicial


def _coordinate_blocks(G):
    """Split a generator matrix into independent coordinate blocks.

    Two coordinates share a block when some generator touches both.  The cone
    is the product of its block cones, so membership is decided per block.
    """
    n = G.shape[1]
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for g in G:
        supp = np.flatnonzero(g != 0)
        for j in supp[1:]:
            a, b = find(supp[0]), find(j)
            if a != b:
                parent[b] = a
    groups = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    blocks = []
    for coords in groups.values():
        coords = np.array(coords)
        rows = [g[coords] for g in G if np.any(g[coords] != 0)]
        gens = np.array(rows) if rows else np.zeros((0, coords.size))
        inverse = None
        if gens.shape[0] == coords.size and np.linalg.matrix_rank(gens) == coords.size:
            inverse = np.linalg.inv(gens)
        blocks.append(_Block(coords, gens, inverse))
    return blocks


class PolyCone:
    """Closed convex cone ``{sum_i l_i g_i : l_i >= 0}`` in R^n.

    Generators are stored as rows.  Membership tests are feasibility checks
    with residual tolerance ``tol * (1 + scale)``, where the scale is the size
    of the block being tested.  For simplicial blocks the residual is read off
    the generator coefficients, which keeps thin cones well conditioned.
    """

    def __init__(self, generators, tol=DEFAULT_TOL):
        G = np.atleast_2d(np.asarray(generators, dtype=float))
        if G.size == 0:
            raise InputError("a cone needs at least one generator")
        if not np.all(np.isfinite(G)):
            raise InputError("generators must be finite")
        norms = np.max(np.abs(G), axis=1)
        if np.any(norms == 0):
            raise InputError("generators must be nonzero")
        self.generators = G
        self.dim = G.shape[1]
        self.tol = tol
        self._unit = G / norms[:, None]
        self._blocks = _coordinate_blocks(self._unit)

    @classmethod
    def nonneg_orthant(cls, dim, tol=DEFAULT_TOL):
        return cls(np.eye(dim), tol=tol)

    @property
    def is_simplicial(self):
        return all(b.inverse is not None for b in self._blocks)

    def __repr__(self):
        return f"PolyCone(dim={self.dim}, generators={self.generators.tolist()})"

    # -- membership -------------------------------------------------------

    def residual(self, v):
        """Normalised feasibility residual of ``v in C`` (0 means inside).

        Accepts a single vector or a ``(k, n)`` batch.
        """
        V = np.asarray(v, dtype=float)
        single = V.ndim == 1
        V = np.atleast_2d(V)
        if V.shape[1] != self.dim:
            raise InputError(f"dimension mismatch: cone has dim {self.dim}, vector has {V.shape[1]}")
        out = np.zeros(V.shape[0])
        for blk in self._blocks:
            Vb = V[:, blk.coords]
            out = np.maximum(out, _block_residual(blk, Vb))
        return float(out[0]) if single else out

    def contains(self, v, tol=None):
        tol = self.tol if tol is None else tol
        r = self.residual(v)
        return (r <= tol) if np.ndim(r) == 0 else r <= tol

    def le(self, x, y, tol=None):
        """x <=_C y, i.e. y - x in C."""
        return self.contains(np.asarray(y, dtype=float) - np.asarray(x, dtype=float), tol)

    def coefficients(self, v):
        """Nonnegative generator coefficients (unit-normalised generators).

        Exact for simplicial cones; a nonnegative least-squares fit otherwise.
        Returned in the order of :attr:`unit_generators`.
        """
        v = as_vector(v, self.dim)
        lam = np.zeros(self._unit.shape[0])
        for blk in self._blocks:
            if blk.gens.shape[0] == 0:
                continue
            rows = _block_rows(self._unit, blk)
            if blk.inverse is not None:
                lb = v[blk.coords] @ blk.inverse
            else:
                lb, _ = _nonneg_fit(blk.gens.T, v[blk.coords])
            lam[rows] = np.maximum(lb, 0.0)
        return lam

    @property
    def unit_generators(self):
        return self._unit

    def is_pointed(self):
        """C ∩ (-C) = {0}."""
        for blk in self._blocks:
            if blk.gens.shape[0] == 0 or blk.inverse is not None:
                continue
            if np.linalg.matrix_rank(blk.gens) == blk.gens.shape[0]:
                continue
            sub = PolyCone(blk.gens, tol=self.tol)
            if any(sub.contains(-g) for g in blk.gens):
                return False
            k = blk.gens.shape[0]
            res = linprog(-np.ones(k), A_eq=blk.gens.T, b_eq=np.zeros(blk.coords.size),
                          bounds=[(0, 1)] * k, method="highs")
            if res.status == 0 and -res.fun > 1e-7:
                return False
        return True

    def to_dict(self):
        return {"dim": self.dim, "generators": self.generators.tolist()}


def _block_rows(unit, blk):
    # rows of the full generator matrix that live in this block
    mask = np.any(unit[:, blk.coords] != 0, axis=1)
    return np.flatnonzero(mask)


def _nonneg_fit(Gt, v):
    """Nonnegative ``lam`` minimising ``max|Gt @ lam - v|``.

    NNLS first; if its answer does not fit (some scipy releases return wrong
    solutions on well-posed inputs) the exact sup-norm LP decides.
    """
    lam, _ = nnls(Gt, v)
    err = np.max(np.abs(Gt @ lam - v))
    if err <= 1e-12 * (1.0 + np.max(np.abs(v))):
        return lam, err
    n, k = Gt.shape
    c = np.zeros(k + 1)
    c[-1] = 1.0
    ones = np.ones((n, 1))
    A = np.vstack([np.hstack([Gt, -ones]), np.hstack([-Gt, -ones])])
    b = np.concatenate([v, -v])
    res = linprog(c, A_ub=A, b_ub=b, bounds=[(0, None)] * (k + 1), method="highs")
    if res.status == 0:
        lam_lp = res.x[:k]
        err_lp = np.max(np.abs(Gt @ lam_lp - v))
        if err_lp < err:
            return lam_lp, err_lp
    return lam, err


def _block_residual(blk, Vb):
    if blk.gens.shape[0] == 0:
        m = np.max(np.abs(Vb), axis=1)
        return m / (1.0 + m)
    if blk.inverse is not None:
        lam = Vb @ blk.inverse
        neg = np.maximum(-np.min(lam, axis=1), 0.0)
        return neg / (1.0 + np.max(np.abs(lam), axis=1))
    out = np.empty(Vb.shape[0])
    for i, v in enumerate(Vb):
        _, err = _nonneg_fit(blk.gens.T, v)
        out[i] = err / (1.0 + np.max(np.abs(v)))
    return out


def cone_member(C, v, tol=None):
    v = as_vector(v)
    if v.size != C.dim:
        raise InputError(f"dimension mismatch: cone has dim {C.dim}, vector has {v.size}")
    return bool(C.contains(v, tol))


def order_le(C, x, y, tol=None):
    return cone_member(C, as_vector(y) - as_vector(x), tol)


def is_pointed(C):
    return C.is_pointed()


@dataclass
class OrderInterval:
    """``[lo, hi]_o = (lo + C) ∩ (hi - C)``."""

    cone: PolyCone
    lo: np.ndarray
    hi: np.ndarray
    _coef: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        self.lo = as_vector(self.lo, self.cone.dim, "lo")
        self.hi = as_vector(self.hi, self.cone.dim, "hi")

    @property
    def is_empty(self):
        return not self.cone.le(self.lo, self.hi)

    def contains(self, z, tol=None):
        z = as_vector(z, self.cone.dim)
        return bool(self.cone.le(self.lo, z, tol) and self.cone.le(z, self.hi, tol))

    def span_coefficients(self):
        if self._coef is None:
            self._coef = self.cone.coefficients(self.hi - self.lo)
        return self._coef

    def vertices(self, max_generators=20):
        """Corners ``lo + sum_{i in S} l_i g_i`` of the generator box.

        This is the whole interval when the cone is simplicial.
        """
        lam = self.span_coefficients()
        active = np.flatnonzero(lam > 0)
        if active.size > max_generators:
            return None
        U = self.cone.unit_generators[active] * lam[active, None]
        masks = ((np.arange(2 ** active.size)[:, None] >> np.arange(active.size)) & 1).astype(float)
        return self.lo + masks @ U

    def sample(self, n, rng):
        lam = self.span_coefficients()
        mu = rng.uniform(size=(n, lam.size)) * lam
        return self.lo + mu @ self.cone.unit_generators


def full_hull_member(C, A, z, tol=None):
    """Membership of ``z`` in the full hull ``[A] = (A + C) ∩ (A - C)``."""
    A = [as_vector(a, C.dim, "A element") for a in A]
    if not A:
        raise InputError("A must be nonempty")
    z = as_vector(z, C.dim)
    below = any(C.le(a, z, tol) for a in A)
    above = any(C.le(z, a, tol) for a in A)
    return bool(below and above)


def cone_from_dict(d):
    try:
        G = d["generators"]
    except (KeyError, TypeError):
        raise InputError("cone spec needs a 'generators' list") from None
    C = PolyCone(G)
    if "dim" in d and int(d["dim"]) != C.dim:
        raise InputError(f"cone 'dim' is {d['dim']} but generators have dimension {C.dim}")
    return C
