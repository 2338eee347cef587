import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conelip.convex_core import MaxAffine
from conelip.errors import CertificationRefused, InputError
from conelip.lipschitz_certify import certify_ball, check_certificate
from conelip.metric_variants import (
    CubeMetric,
    GraduatedMetric,
    LpQuasiMetric,
    QuasiBall,
    lcs_certify,
    lp_certify,
    metric_eval,
    metric_from_dict,
    metric_oracle,
    nonlipschitz_witness,
    translation_witness,
)
from conelip.order_core import WeightedL1, WeightedSup, dyadic_samples, sup_norm

seeds = st.integers(0, 2**32 - 1)
X1 = MaxAffine([([[1.0] + [0.0] * 7], [0.0])])


def coord(n, k):
    w = np.zeros(n)
    w[k] = 1.0
    return WeightedSup(w)


class TestEval:
    def test_examples(self):
        assert metric_eval(LpQuasiMetric(0.5, 2), [1, 0], [0, 0]) == 1.0
        g = GraduatedMetric([coord(2, 0), coord(2, 1)])
        assert metric_eval(g, [1, 1], [0, 0]) == 0.375
        assert metric_eval(CubeMetric(), 2.0, 1.0) == 7.0

    def test_lp_direct_formula(self):
        m = LpQuasiMetric(0.25, 3)
        x, y = np.array([1.0, -2.0, 0.5]), np.array([0.0, 2.0, 0.5])
        assert m.dist(x, y) == pytest.approx(1.0 + 4.0 ** 0.25)

    def test_bad_parameters(self):
        with pytest.raises(InputError):
            LpQuasiMetric(1.0)
        with pytest.raises(InputError):
            GraduatedMetric([])
        with pytest.raises(InputError):
            metric_from_dict({"kind": "hamming"})

    def test_round_trip(self):
        for m in (LpQuasiMetric(0.3, 4), GraduatedMetric([sup_norm(4), WeightedL1(np.ones(4))])):
            m2 = metric_from_dict(m.to_dict())
            x = np.array([0.1, -0.4, 2.0, 0.0])
            assert m2.dist(x, -x) == m.dist(x, -x)
        assert isinstance(metric_from_dict({"kind": "cube"}), CubeMetric)


class TestProperties:
    @given(seeds)
    def test_translation_invariance_exact(self, seed):
        rng = np.random.default_rng(seed)
        X, Y, Z = (dyadic_samples(rng, (500, 8), bits=10, scale=4) for _ in range(3))
        lp = LpQuasiMetric(0.5, 8)
        g = GraduatedMetric([sup_norm(8), WeightedL1(rng.uniform(0.5, 2, 8))])
        for m in (lp, g):
            assert np.array_equal(m((X + Z) - (Y + Z)), m(X - Y))

    def test_cube_not_invariant(self):
        w = translation_witness(CubeMetric(), np.random.default_rng(0))
        assert w is not None
        x, y, z, a, b = w
        assert a != b

    @given(seeds)
    def test_lp_scaling(self, seed):
        rng = np.random.default_rng(seed)
        m = LpQuasiMetric(0.5, 8)
        x, y = rng.normal(size=(2, 8))
        lam = rng.uniform(-3, 3)
        assert m.dist(lam * x, lam * y) == pytest.approx(abs(lam) ** 0.5 * m.dist(x, y), rel=1e-12)

    @given(seeds)
    def test_lp_triangle(self, seed):
        rng = np.random.default_rng(seed)
        m = LpQuasiMetric(rng.uniform(0.1, 0.9), 5)
        x, y, z = rng.normal(size=(3, 5))
        assert m.dist(x, z) <= m.dist(x, y) + m.dist(y, z) + 1e-12

    @given(seeds)
    def test_graduated_bounds(self, seed):
        rng = np.random.default_rng(seed)
        g = GraduatedMetric([coord(3, 0), coord(3, 1), WeightedSup([0.0, 0.0, 1.0])])
        D = rng.normal(size=(100, 3)) * 10
        d = g(D)
        assert np.all((0 <= d) & (d < 1 - 2.0 ** -3 + 1e-15))
        D[:5] = 0.0
        assert np.all(g(D[:5]) == 0)

    def test_cube_metric_axioms(self):
        rng = np.random.default_rng(1)
        m = CubeMetric()
        x, y, z = rng.normal(size=(3, 1000))
        assert np.all(m.dist(x, y) == m.dist(y, x))
        assert np.all(m.dist(x, z) <= m.dist(x, y) + m.dist(y, z) + 1e-12)

    def test_quasi_ball_sampling(self):
        rng = np.random.default_rng(2)
        m = LpQuasiMetric(0.5, 8)
        B = QuasiBall(m, np.ones(8), 0.3)
        X = B.sample(5000, rng)
        assert np.all(B.contains(X))
        # uniform in the quasi-ball: d(center, X)/radius is Beta(N/p, 1)-like, mass near the rim
        assert np.median(m(X - 1.0)) > 0.25


class TestWitness:
    @pytest.mark.parametrize("M", [1.0, 100.0, 1e6, 0.01, 3.7])
    def test_ratio_exceeds(self, M):
        w = nonlipschitz_witness(M)
        assert w.ratio > M
        assert w.ratio == abs(w.x - w.y) / abs(w.x ** 3 - w.y ** 3)

    def test_values(self):
        assert nonlipschitz_witness(1.0).x == pytest.approx(2 ** -0.5)
        assert nonlipschitz_witness(100.0).ratio == pytest.approx(200.0)

    def test_invalid(self):
        with pytest.raises(InputError):
            nonlipschitz_witness(0.0)


class TestLpCertify:
    def test_x1(self):
        cert = lp_certify(X1, np.zeros(8), 1.0, a=1.0)
        assert cert.constant == 4.0 and cert.region.radius == 0.25
        assert check_certificate(cert, X1, seed=3)
        assert metric_oracle(X1, cert.region, cert.p, seed=3) <= 4.0

    def test_zero_map(self):
        f = MaxAffine([([np.zeros(8)], [0.0])])
        assert lp_certify(f, np.zeros(8), 1.0).constant == 0.0

    def test_auto_a(self):
        f = MaxAffine([([[1.0, 1.0] + [0.0] * 6], [0.0])])
        cert = lp_certify(f, np.zeros(8), 1.0)
        assert cert.inputs["a"] == 1.0 and cert.inputs["a_source"] == "vertex-bound"
        assert check_certificate(cert, f, seed=4)

    def test_refused(self):
        with pytest.raises(CertificationRefused):
            lp_certify(X1, np.zeros(8), 1.0, a=0.5)

    def test_dimension(self):
        with pytest.raises(InputError):
            lp_certify(X1, np.zeros(8), 1.0, N=4)

    @given(seeds)
    def test_random_max_affine(self, seed):
        rng = np.random.default_rng(seed)
        f = MaxAffine([(rng.normal(size=(3, 8)), rng.normal(size=3))])
        cert = lp_certify(f, rng.normal(size=8) * 0.1, rng.uniform(0.2, 2.0), seed=seed)
        assert check_certificate(cert, f, pairs=2000, seed=seed)


class TestLcsCertify:
    def _prior(self, f):
        return certify_ball(f, None, sup_norm(2), [0, 0], 1.0, 0.5)

    def test_sup_example(self):
        f = MaxAffine([([[0.5, 0], [-0.5, 0], [0, 0.5], [0, -0.5]], [0, 0, 0, 0])])
        prior = certify_ball(f, None, sup_norm(2), [0, 0], 1.0, 0.5, beta=0.5)
        assert prior.constant == 2.0
        g = GraduatedMetric([sup_norm(2), coord(2, 0)])
        cert = lcs_certify(f, g, prior, 1)
        assert cert.constant == 12.0
        assert check_certificate(cert, f, seed=5)

    def test_zero_prior_constant(self):
        f = MaxAffine([([[0.0, 0.0]], [0.0])])
        g = GraduatedMetric([sup_norm(2)])
        assert lcs_certify(f, g, self._prior(f), 1).constant == 0.0

    def test_index_three(self):
        f = MaxAffine([([[0.5, 0.0]], [0.0])])
        fam = [coord(2, 1), WeightedL1([1, 1]), sup_norm(2)]
        prior = certify_ball(f, None, sup_norm(2), [0, 0], 2.0, 1.0, beta=1.0)
        assert prior.constant == 2.0
        prior.constant = 1.0  # a tighter external L_3 = 1
        cert = lcs_certify(f, GraduatedMetric(fam), prior, 3)
        assert cert.constant == 24.0
        assert check_certificate(cert, f, seed=6)

    def test_missing_prior(self):
        f = MaxAffine([([[1.0, 0.0]], [0.0])])
        with pytest.raises(InputError):
            lcs_certify(f, GraduatedMetric([sup_norm(2)]), None, 1)

    def test_prior_seminorm_mismatch(self):
        f = MaxAffine([([[1.0, 0.0]], [0.0])])
        with pytest.raises(InputError):
            lcs_certify(f, GraduatedMetric([WeightedL1([1, 1])]), self._prior(f), 1)
