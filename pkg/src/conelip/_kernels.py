"""Hot numeric kernels.

Every kernel exists twice: a numba ``@njit`` version and a pure-numpy
version with identical semantics.  The numba path is used when numba imports
and ``CONELIP_BACKEND`` is not set to ``numpy``.
"""

import os

import numpy as np

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _HAVE_NUMBA = False


def _requested_backend():
    return os.environ.get("CONELIP_BACKEND", "numba").strip().lower()


BACKEND = "numba" if (_HAVE_NUMBA and _requested_backend() != "numpy") else "numpy"


# ---------------------------------------------------------------------------
# numpy implementations
# ---------------------------------------------------------------------------

def max_affine_eval_np(A, b, X):
    """max_k (A[k] . x + b[k]) for each row x of X."""
    return np.max(X @ A.T + b, axis=1)


def weighted_sup_np(w, X):
    return np.max(np.abs(X) * w, axis=1) if X.shape[1] else np.zeros(X.shape[0])


def weighted_l1_np(w, X):
    return np.sum(np.abs(X) * w, axis=1)


def gauge_np(F, X):
    """Gauge of {y : F y <= 1}; rows of F are scaled facet normals."""
    if F.shape[0] == 0:
        return np.zeros(X.shape[0])
    return np.maximum(np.max(X @ F.T, axis=1), 0.0)


def lp_quasi_np(p, D):
    return np.sum(np.abs(D) ** p, axis=1)


def max_pairwise_slope_np(t, v, chunk=2048):
    """max over i < j of |v[j] - v[i]| / |t[j] - t[i]| (all pairs)."""
    n = t.shape[0]
    best = 0.0
    for start in range(0, n, chunk):
        ti = t[start:start + chunk, None]
        vi = v[start:start + chunk, None]
        dt = np.abs(t[None, :] - ti)
        dv = np.abs(v[None, :] - vi)
        mask = dt > 0
        if np.any(mask):
            best = max(best, float(np.max(dv[mask] / dt[mask])))
    return best


def max_adjacent_slope_np(t, v):
    dt = np.diff(t)
    dv = np.abs(np.diff(v))
    return float(np.max(dv / dt)) if dt.size else 0.0


def ratio_max_np(num, den, zero_tol):
    """Largest num/den over entries with den > zero_tol.

    Returns ``(ratio, skipped, max_num_on_skipped)``.
    """
    keep = den > zero_tol
    skipped = int(np.count_nonzero(~keep))
    ratio = float(np.max(num[keep] / den[keep])) if np.any(keep) else 0.0
    gap = float(np.max(num[~keep])) if skipped else 0.0
    return ratio, skipped, gap


# ---------------------------------------------------------------------------
# numba implementations
# ---------------------------------------------------------------------------

if _HAVE_NUMBA:

    @njit(cache=True)
    def max_affine_eval_nb(A, b, X):
        n, d = X.shape
        k = A.shape[0]
        out = np.empty(n)
        for i in range(n):
            best = -np.inf
            for j in range(k):
                s = b[j]
                for c in range(d):
                    s += A[j, c] * X[i, c]
                if s > best:
                    best = s
            out[i] = best
        return out

    @njit(cache=True)
    def weighted_sup_nb(w, X):
        n, d = X.shape
        out = np.zeros(n)
        for i in range(n):
            m = 0.0
            for c in range(d):
                v = abs(X[i, c]) * w[c]
                if v > m:
                    m = v
            out[i] = m
        return out

    @njit(cache=True)
    def weighted_l1_nb(w, X):
        n, d = X.shape
        out = np.zeros(n)
        for i in range(n):
            s = 0.0
            for c in range(d):
                s += abs(X[i, c]) * w[c]
            out[i] = s
        return out

    @njit(cache=True)
    def gauge_nb(F, X):
        n, d = X.shape
        k = F.shape[0]
        out = np.zeros(n)
        for i in range(n):
            m = 0.0
            for j in range(k):
                s = 0.0
                for c in range(d):
                    s += F[j, c] * X[i, c]
                if s > m:
                    m = s
            out[i] = m
        return out

    @njit(cache=True)
    def lp_quasi_nb(p, D):
        n, d = D.shape
        out = np.zeros(n)
        for i in range(n):
            s = 0.0
            for c in range(d):
                s += abs(D[i, c]) ** p
            out[i] = s
        return out

    @njit(cache=True)
    def max_pairwise_slope_nb(t, v):
        n = t.shape[0]
        best = 0.0
        for i in range(n):
            for j in range(i + 1, n):
                dt = abs(t[j] - t[i])
                if dt > 0.0:
                    r = abs(v[j] - v[i]) / dt
                    if r > best:
                        best = r
        return best

    @njit(cache=True)
    def max_adjacent_slope_nb(t, v):
        best = 0.0
        for i in range(t.shape[0] - 1):
            r = abs(v[i + 1] - v[i]) / (t[i + 1] - t[i])
            if r > best:
                best = r
        return best

    @njit(cache=True)
    def ratio_max_nb(num, den, zero_tol):
        ratio = 0.0
        gap = 0.0
        skipped = 0
        for i in range(num.shape[0]):
            if den[i] > zero_tol:
                r = num[i] / den[i]
                if r > ratio:
                    ratio = r
            else:
                skipped += 1
                if num[i] > gap:
                    gap = num[i]
        return ratio, skipped, gap


def _pick(np_fn, nb_name):
    if BACKEND == "numba":
        return globals()[nb_name]
    return np_fn


def _f64(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def max_affine_eval(A, b, X):
    return _pick(max_affine_eval_np, "max_affine_eval_nb")(_f64(A), _f64(b), _f64(X))


def weighted_sup(w, X):
    return _pick(weighted_sup_np, "weighted_sup_nb")(_f64(w), _f64(X))


def weighted_l1(w, X):
    return _pick(weighted_l1_np, "weighted_l1_nb")(_f64(w), _f64(X))


def gauge(F, X):
    return _pick(gauge_np, "gauge_nb")(_f64(F), _f64(X))


def lp_quasi(p, D):
    return _pick(lp_quasi_np, "lp_quasi_nb")(float(p), _f64(D))


def max_pairwise_slope(t, v):
    return float(_pick(max_pairwise_slope_np, "max_pairwise_slope_nb")(_f64(t), _f64(v)))


def max_adjacent_slope(t, v):
    return float(_pick(max_adjacent_slope_np, "max_adjacent_slope_nb")(_f64(t), _f64(v)))


def ratio_max(num, den, zero_tol=0.0):
    r, s, g = _pick(ratio_max_np, "ratio_max_nb")(_f64(num), _f64(den), float(zero_tol))
    return float(r), int(s), float(g)
