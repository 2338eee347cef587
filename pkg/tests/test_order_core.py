import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy.optimize import linprog

from conelip.errors import InputError
from conelip.order_core import (
    OrderInterval,
    PolyCone,
    PolytopeGauge,
    WeightedL1,
    WeightedSup,
    cone_from_dict,
    cone_member,
    dyadic_samples,
    full_hull_member,
    identity_residuals,
    is_pointed,
    l1_norm,
    lattice_ops,
    minkowski_functional,
    normality_gamma,
    o_bounded_sup,
    order_le,
    seminorm_from_dict,
    sup_norm,
)
from conelip.order_core.lattice import ZERO_TOL_KEYS

finite = st.floats(-50, 50, allow_nan=False, allow_infinity=False)


def vec(n):
    return arrays(float, n, elements=finite)


def thin_cone(eps):
    return PolyCone([[1.0, eps], [-1.0, eps]])


def lp_slack(G, v):
    """Independent oracle: least sup-norm slack of G^T lam = v over lam >= 0."""
    G = np.asarray(G, dtype=float)
    k, n = G.shape
    c = np.r_[np.zeros(k), 1.0]
    A = np.block([[G.T, -np.ones((n, 1))], [-G.T, -np.ones((n, 1))]])
    res = linprog(c, A_ub=A, b_ub=np.r_[v, -v], bounds=[(0, None)] * (k + 1), method="highs")
    return res.x[-1] / (1 + np.max(np.abs(v)))


# ---------------------------------------------------------------- cones

class TestConeMember:
    def test_orthant_examples(self):
        C = PolyCone.nonneg_orthant(2)
        assert cone_member(C, [1, 1])
        assert not cone_member(C, [1, -1])

    def test_interval_square(self):
        C = PolyCone.nonneg_orthant(2)
        assert OrderInterval(C, [0, 0], [1, 1]).contains([0, 1])
        assert not OrderInterval(C, [0, 0], [1, 1]).contains([0, 1.5])

    def test_dimension_mismatch(self):
        with pytest.raises(InputError):
            cone_member(PolyCone.nonneg_orthant(2), [1, 1, 1])

    def test_bad_generators(self):
        with pytest.raises(InputError):
            PolyCone([[0.0, 0.0]])
        with pytest.raises(InputError):
            PolyCone([[np.inf, 0.0]])
        with pytest.raises(InputError):
            cone_from_dict({"generators": [[1, 0]], "dim": 3})

    def test_thin_cone_membership_is_well_conditioned(self):
        # the sector between (1, e) and (-1, e) is tiny for small e
        C = thin_cone(0.5 * 3.0 ** -20)
        e = 0.5 * 3.0 ** -20
        assert C.contains([0.0, 2 * e])
        assert C.contains([1.0, e])
        assert not C.contains([1.0, 0.99 * e])

    @given(st.integers(0, 2**32 - 1))
    def test_matches_lp_oracle(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(1, 5))
        G = rng.normal(size=(int(rng.integers(1, 7)), n))
        C = PolyCone(G)
        # points built from nonnegative coefficients are members
        inside = rng.exponential(size=G.shape[0]) @ G
        assert C.contains(inside)
        v = rng.normal(size=n) * 3
        slack = lp_slack(G, v)
        if slack <= 1e-10:
            assert C.contains(v)
        elif slack > 1e-6:
            assert not C.contains(v)

    def test_nnls_misfit_is_caught(self):
        # scipy's nnls returns a wrong fit with zero reported residual here
        rng = np.random.default_rng(12534471)
        n = int(rng.integers(1, 5))
        G = rng.normal(size=(int(rng.integers(1, 7)), n))
        rng.exponential(size=G.shape[0])
        v = rng.normal(size=n) * 3
        assert lp_slack(G, v) <= 1e-10
        C = PolyCone(G)
        assert C.contains(v)
        lam = C.coefficients(v)
        assert np.allclose(lam @ C.unit_generators, v, atol=1e-9)

    @given(st.integers(0, 2**32 - 1))
    def test_closed_under_sum_and_scaling(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(1, 5))
        G = rng.normal(size=(int(rng.integers(1, 6)), n))
        C = PolyCone(G)
        a = rng.exponential(size=G.shape[0]) @ G
        b = rng.exponential(size=G.shape[0]) @ G
        assert C.contains(a + b)
        assert C.contains(rng.exponential() * a)

    @given(st.integers(0, 2**32 - 1))
    def test_order_reflexive_transitive(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(1, 5))
        G = rng.normal(size=(int(rng.integers(1, 6)), n))
        C = PolyCone(G)
        x = rng.normal(size=n)
        y = x + rng.exponential(size=G.shape[0]) @ G
        z = y + rng.exponential(size=G.shape[0]) @ G
        assert order_le(C, x, x)
        assert order_le(C, x, y) and order_le(C, y, z)
        assert order_le(C, x, z)

    @given(vec(2), vec(2))
    def test_antisymmetric_when_pointed(self, x, y):
        C = PolyCone([[1.0, 1.0], [-1.0, 1.0]])
        assert is_pointed(C)
        if order_le(C, x, y, 0.0) and order_le(C, y, x, 0.0):
            assert np.allclose(x, y)

    def test_batch_membership(self):
        C = PolyCone.nonneg_orthant(3)
        out = C.contains(np.array([[1, 2, 3], [1, -1, 0]], dtype=float))
        assert out.tolist() == [True, False]


class TestPointed:
    def test_examples(self):
        assert is_pointed(PolyCone.nonneg_orthant(2))
        assert not is_pointed(PolyCone([[1, 0], [0, 1], [0, -1]]))
        assert is_pointed(PolyCone([[1, 1], [-1, 1]]))

    def test_redundant_pointed(self):
        assert is_pointed(PolyCone([[1, 0], [0, 1], [1, 1], [2, 1]]))

    def test_hidden_line(self):
        # (1,1), (-1,0), (0,-1) span a line through (1,1) + (-1,0) + (0,-1) = 0
        assert not is_pointed(PolyCone([[1, 1], [-1, 0], [0, -1]]))

    def test_block_product(self):
        G = np.zeros((4, 4))
        G[0, :2] = (1, 0.1)
        G[1, :2] = (-1, 0.1)
        G[2, 2:] = (1, 0)
        G[3, 2:] = (-1, 0)
        assert not is_pointed(PolyCone(G))
        G[3, 2:] = (0, 1)
        assert is_pointed(PolyCone(G))


class TestFullHull:
    def test_examples(self):
        C = PolyCone.nonneg_orthant(2)
        A = [[0, 0], [1, 1]]
        assert full_hull_member(C, A, [0.5, 0.9])
        assert not full_hull_member(C, A, [2, 2])
        assert full_hull_member(C, [[0.3, -4]], [0.3, -4])

    def test_empty(self):
        with pytest.raises(InputError):
            full_hull_member(PolyCone.nonneg_orthant(2), [], [0, 0])

    @given(st.integers(0, 2**32 - 1))
    def test_contains_generating_set(self, seed):
        rng = np.random.default_rng(seed)
        C = PolyCone(rng.normal(size=(3, 2)))
        A = rng.normal(size=(3, 2))
        assert all(full_hull_member(C, A, a) for a in A)


# -------------------------------------------------------------- lattice

class TestLattice:
    def test_example(self):
        r = lattice_ops([1, -2], [0, 0])
        assert r.pos_part_x.tolist() == [1, 0]
        assert r.neg_part_x.tolist() == [0, 2]
        assert r.abs_x.tolist() == [1, 2]
        assert r.sup.tolist() == [1, 0] and r.inf.tolist() == [0, -2]

    def test_dyadic_samples_exact(self):
        rng = np.random.default_rng(1)
        X = dyadic_samples(rng, (1000, 4))
        assert np.all(X * 2 ** 20 == np.round(X * 2 ** 20))
        assert np.max(np.abs(X)) <= 8

    @given(st.integers(0, 2**32 - 1))
    def test_identities_exact_on_dyadics(self, seed):
        rng = np.random.default_rng(seed)
        X, Y, Z = (dyadic_samples(rng, (200, 5)) for _ in range(3))
        res = identity_residuals(X, Y, Z)
        for k in ZERO_TOL_KEYS:
            assert res[k] == 0.0
        assert res["ii.lower"] <= 1e-12 and res["ii.upper"] <= 1e-12

    def test_shape_mismatch(self):
        with pytest.raises(InputError):
            identity_residuals(np.zeros((2, 3)), np.zeros((2, 3)), np.zeros((3, 3)))

    @given(vec(3), vec(3))
    def test_sup_inf_sum(self, x, y):
        r = lattice_ops(x, y)
        assert np.allclose(r.sup + r.inf, x + y, atol=1e-12)


# ------------------------------------------------------------ seminorms

def _random_seminorm(rng, n):
    k = rng.integers(0, 3)
    w = rng.uniform(0.1, 3, size=n)
    if k == 0:
        return WeightedSup(w)
    if k == 1:
        return WeightedL1(w)
    V = rng.normal(size=(n + 2, n))
    return PolytopeGauge(np.vstack([V, -V, np.eye(n), -np.eye(n)]))


class TestSeminorms:
    def test_minkowski_examples(self):
        W = PolytopeGauge([[1, 1], [1, -1], [-1, 1], [-1, -1]])
        assert minkowski_functional(W, [2, 1]) == pytest.approx(2.0, abs=1e-12)
        assert minkowski_functional(W, [0, 0]) == 0.0
        assert minkowski_functional(W, [2, 1], method="lp") == pytest.approx(2.0, abs=1e-9)

    def test_not_symmetric(self):
        with pytest.raises(InputError):
            PolytopeGauge([[1, 0], [0, 1], [-1, -1]])  # 0 interior but not symmetric
        with pytest.raises(InputError):
            PolytopeGauge([[1, 0], [0, 1], [1, 1]])  # 0 on the boundary / outside

    def test_wrong_kind(self):
        with pytest.raises(InputError):
            minkowski_functional(sup_norm(2), [1, 1])

    @given(st.integers(0, 2**32 - 1))
    def test_homogeneous_and_subadditive(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(1, 5))
        p = _random_seminorm(rng, n)
        x, y = rng.normal(size=(2, n)) * 5
        lam = rng.normal() * 3
        assert p(lam * x) == pytest.approx(abs(lam) * p(x), rel=1e-12, abs=1e-12)
        assert p(x + y) <= p(x) + p(y) + 1e-12 * (1 + p(x) + p(y))
        assert p(x) >= 0

    @given(st.integers(0, 2**32 - 1))
    def test_facets_agree_with_lp(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 4))
        V = rng.normal(size=(n + 2, n))
        W = PolytopeGauge(np.vstack([V, -V, np.eye(n), -np.eye(n)]))
        y = rng.normal(size=n)
        assert W(y) == pytest.approx(W.gauge_lp(y), rel=1e-7, abs=1e-9)

    def test_weighted_kernel(self):
        p = WeightedSup([1.0, 0.0])
        assert p([0.0, 5.0]) == 0.0
        assert p.kernel_mask.tolist() == [False, True]

    def test_round_trip(self):
        for p in (WeightedSup([1, 2]), WeightedL1([0.5, 0]), PolytopeGauge([[1, 0], [-1, 0], [0, 2], [0, -2]])):
            q = seminorm_from_dict(p.to_dict())
            x = np.array([0.3, -1.7])
            assert q(x) == p(x)

    def test_ball_samples_inside(self):
        rng = np.random.default_rng(0)
        for p in (sup_norm(3), l1_norm(3), PolytopeGauge(np.vstack([np.eye(3), -np.eye(3)]))):
            X = p.sample_ball(np.ones(3), 0.5, 200, rng)
            assert X.shape == (200, 3)
            assert np.all(p(X - 1.0) <= 0.5 + 1e-12)


# ------------------------------------------------------------ normality

def brute_gamma_2d(C, q, grid=401):
    """Grid search of q(x)/q(y) over 0 <= x <= y for a simplicial 2-d cone."""
    u, v = C.unit_generators[:2]
    s = np.linspace(0, 1, grid)
    best = 1.0
    for a in s:
        b = 1.0 - a
        qy = q(a * u + b * v)
        if qy <= 0:
            continue
        corners = np.array([np.zeros(2), a * u, b * v, a * u + b * v])
        best = max(best, float(np.max(q(corners))) / qy)
    return best


class TestNormality:
    def test_orthant_is_one(self):
        for n in (1, 3, 8):
            est = normality_gamma(PolyCone.nonneg_orthant(n), sup_norm(n), seed=3)
            assert est.gamma_lower == 1.0

    def test_thin_cone(self):
        eps = 0.005
        g = normality_gamma(thin_cone(eps), sup_norm(2), mode="exact-2d")
        assert g.gamma_exact >= 1 / (2 * eps)
        assert g.gamma_lower == pytest.approx(brute_gamma_2d(thin_cone(eps), sup_norm(2)), rel=1e-3)

    @pytest.mark.parametrize("eps", [1.0, 0.3, 0.05])
    def test_exact_vs_brute_force(self, eps):
        C = thin_cone(eps)
        for q in (sup_norm(2), l1_norm(2), WeightedSup([1.0, 3.0])):
            exact = normality_gamma(C, q, mode="exact-2d").gamma_exact
            brute = brute_gamma_2d(C, q)
            assert brute <= exact + 1e-12
            assert exact == pytest.approx(brute, rel=1e-2)

    def test_sampled_is_lower_bound(self):
        C = thin_cone(0.1)
        exact = normality_gamma(C, sup_norm(2), mode="exact-2d").gamma_exact
        sampled = normality_gamma(C, sup_norm(2), seed=5).gamma_lower
        assert 1.0 <= sampled <= exact + 1e-12

    def test_not_pointed(self):
        with pytest.raises(InputError):
            normality_gamma(PolyCone([[1, 0], [-1, 0], [0, 1]]), sup_norm(2))

    def test_bridge_block_cones(self):
        # gamma of the k-th planar block grows like 3^k
        for k in range(1, 6):
            e = 0.5 * 3.0 ** -k
            g = normality_gamma(thin_cone(e), sup_norm(2), mode="exact-2d").gamma_exact
            assert g >= 3.0 ** k


class TestOBoundedSup:
    def test_examples(self):
        C = PolyCone.nonneg_orthant(2)
        assert o_bounded_sup(C, ([0, 0], [1, 1]), sup_norm(2)) == 1.0
        eps = 0.005
        Ce = thin_cone(eps)
        assert o_bounded_sup(Ce, ([0, 0], [0, 2 * eps]), sup_norm(2)) == pytest.approx(1.0, rel=1e-12)
        assert o_bounded_sup(C, ([2, -3], [2, -3]), sup_norm(2)) == 3.0

    def test_empty_interval(self):
        with pytest.raises(InputError):
            o_bounded_sup(PolyCone.nonneg_orthant(2), ([1, 0], [0, 1]), sup_norm(2))

    def test_sampled_non_simplicial(self):
        C = PolyCone([[1, 0], [0, 1], [1, 1]])
        v = o_bounded_sup(C, ([0, 0], [1, 1]), sup_norm(2), samples=2000)
        assert v == pytest.approx(1.0, abs=1e-12)
