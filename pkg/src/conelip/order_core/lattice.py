"""Coordinatewise vector-lattice operations and identity checks."""

from dataclasses import dataclass

import numpy as np

from ..errors import InputError
from .cones import as_vector


@dataclass(frozen=True)
class LatticeRecord:
    sup: np.ndarray
    inf: np.ndarray
    pos_part_x: np.ndarray
    neg_part_x: np.ndarray
    abs_x: np.ndarray


def lattice_ops(x, y):
    """x∨y, x∧y, x⁺, x⁻ and |x| in the coordinate order of R^n."""
    x = as_vector(x, name="x")
    y = as_vector(y, x.size, name="y")
    return LatticeRecord(
        sup=np.maximum(x, y),
        inf=np.minimum(x, y),
        pos_part_x=np.maximum(x, 0.0),
        neg_part_x=np.maximum(-x, 0.0),
        abs_x=np.abs(x),
    )


def dyadic_samples(rng, shape, bits=20, scale=8):
    """Random doubles on the grid ``2**-bits * Z`` inside ``[-scale, scale]``.

    Sums and differences of such numbers are exact in double precision, which
    lets identities be checked with zero tolerance.
    """
    k = rng.integers(-scale * 2 ** bits, scale * 2 ** bits, size=shape, endpoint=True)
    return k.astype(float) / 2.0 ** bits


def identity_residuals(X, Y, Z):
    """Worst-case residual of each lattice identity over batches of triples.

    Rows of ``X``, ``Y``, ``Z`` are vectors; ``Z`` supplies the ``a`` of (iii)
    and the upper end of the chains in (v).  Equalities report the largest
    absolute deviation; inequalities report the largest violation (0 if none);
    (iii) and (v) report the number of failing triples.
    """
    X, Y, Z = (np.atleast_2d(np.asarray(a, dtype=float)) for a in (X, Y, Z))
    if not (X.shape == Y.shape == Z.shape):
        raise InputError("X, Y, Z must have the same shape")
    pos, neg, ab = np.maximum(X, 0), np.maximum(-X, 0), np.abs(X)
    absY = np.abs(Y)
    out = {}
    out["i.decomposition"] = float(np.max(np.abs(X - (pos - neg))))
    out["i.disjoint"] = float(np.max(np.abs(np.minimum(pos, neg))))
    out["i.abs_sum"] = float(np.max(np.abs(ab - (pos + neg))))
    out["i.abs_even"] = float(np.max(np.abs(np.abs(-X) - ab)))
    lower = np.abs(ab - absY)
    mid = np.abs(X + Y)
    upper = ab + absY
    out["ii.lower"] = float(np.max(np.maximum(lower - mid, 0)))
    out["ii.upper"] = float(np.max(np.maximum(mid - upper, 0)))
    out["iv.sup"] = float(np.max(np.abs(np.maximum(ab, absY) - 0.5 * (np.abs(X + Y) + np.abs(X - Y)))))
    out["iv.inf"] = float(np.max(np.abs(np.minimum(ab, absY) - 0.5 * np.abs(np.abs(X + Y) - np.abs(X - Y)))))
    # (iii) with a = |Z| >= 0
    a = np.abs(Z)
    lhs = np.all(ab <= a, axis=1)
    rhs = np.all((X <= a) & (-X <= a), axis=1)
    out["iii.count"] = float(np.count_nonzero(lhs != rhs))
    # (v) on the sorted chain lo <= mid <= hi built coordinatewise from the triple
    S = np.sort(np.stack([X, Y, Z]), axis=0)
    lo_, mid_, hi_ = S
    viol = np.abs(mid_) > np.maximum(np.abs(lo_), np.abs(hi_))
    out["v.count"] = float(np.count_nonzero(np.any(viol, axis=1)))
    return out


ZERO_TOL_KEYS = ("i.decomposition", "i.disjoint", "i.abs_sum", "i.abs_even", "iv.sup", "iv.inf",
                 "iii.count", "v.count")
