import numpy as np
import pytest

from cmrf import (
    DimensionMismatch,
    NotPositiveDefinite,
    SgmParams,
    build_cmrf,
    build_precision,
    covariance,
    draw_params,
    find_cancellations,
    identity_residuals,
    incidence,
    load_model,
    min_valid_k,
    sample,
    save_complex,
    save_model,
)

from helpers import draw_sparse_model


def random_cases(bench_incidence, count, sparsity=0.0):
    rng = np.random.default_rng(77)
    for _ in range(count):
        params = draw_params(bench_incidence, rng, sparsity=sparsity)
        yield params, build_precision(bench_incidence, params)


class TestPrecisionConstruction:
    def test_filled_triangle_upper_only(self, filled_triangle):
        inc = incidence(filled_triangle)
        params = SgmParams(k=4.0, d_v=np.zeros(3), d_t=np.array([1.0]))
        prec = build_precision(inc, params)
        expected = np.array([[3.0, 1.0, -1.0], [1.0, 3.0, 1.0], [-1.0, 1.0, 3.0]])
        assert np.array_equal(prec.omega, expected)
        assert np.array_equal(prec.omega_d, 4.0 * np.eye(3))

    def test_min_valid_k_matches_threshold(self, filled_triangle):
        inc = incidence(filled_triangle)
        k_min = min_valid_k(inc, np.zeros(3), np.array([1.0]))
        assert abs(k_min - 3.1) < 1e-12 * 3.1

    def test_rejects_k_at_threshold(self, filled_triangle):
        inc = incidence(filled_triangle)
        with pytest.raises(NotPositiveDefinite):
            build_precision(inc, SgmParams(k=3.0, d_v=np.zeros(3), d_t=np.array([1.0])))

    def test_accepts_k_just_above_threshold(self, bench_incidence):
        rng = np.random.default_rng(5)
        nv = bench_incidence.b1.shape[0]
        nt = bench_incidence.b2.shape[1]
        d_v = rng.uniform(0.2, 5.0, nv)
        d_t = rng.uniform(0.2, 5.0, nt)
        k_min = min_valid_k(bench_incidence, d_v, d_t, margin=0.0)
        build_precision(bench_incidence, SgmParams(k=k_min + 1e-3, d_v=d_v, d_t=d_t))
        with pytest.raises(NotPositiveDefinite):
            build_precision(bench_incidence, SgmParams(k=k_min - 1e-6, d_v=d_v, d_t=d_t))

    def test_zero_couplings_give_scaled_identity(self, bench_incidence):
        ne = bench_incidence.b1.shape[1]
        nv = bench_incidence.b1.shape[0]
        nt = bench_incidence.b2.shape[1]
        prec = build_precision(
            bench_incidence, SgmParams(k=2.5, d_v=np.zeros(nv), d_t=np.zeros(nt))
        )
        assert np.array_equal(prec.omega, 2.5 * np.eye(ne))

    def test_upper_factor_collapses_without_triangles(self, bench_incidence):
        nv = bench_incidence.b1.shape[0]
        nt = bench_incidence.b2.shape[1]
        rng = np.random.default_rng(9)
        d_v = rng.uniform(0.2, 5.0, nv)
        params = SgmParams(
            k=min_valid_k(bench_incidence, d_v, np.zeros(nt)),
            d_v=d_v,
            d_t=np.zeros(nt),
        )
        prec = build_precision(bench_incidence, params)
        assert np.array_equal(prec.omega, prec.omega_d)

    def test_wrong_coefficient_lengths(self, bench_incidence):
        with pytest.raises(DimensionMismatch):
            build_precision(
                bench_incidence, SgmParams(k=5.0, d_v=np.zeros(3), d_t=np.zeros(12))
            )

    def test_negative_coefficients_rejected(self):
        with pytest.raises(ValueError):
            SgmParams(k=1.0, d_v=np.array([-0.1]), d_t=np.zeros(0))


class TestIdentities:
    def test_decomposition_identities_random(self, bench_incidence):
        for params, prec in random_cases(bench_incidence, 30):
            res = identity_residuals(prec)
            cov = covariance(prec)
            mean_var = np.trace(cov) / prec.num_edges
            assert res.sum_rule < 1e-12 * params.k
            assert res.product_rule < 1e-10 * params.k**2
            assert res.inverse_rule < 1e-10 * mean_var

    def test_covariance_inverts_precision(self, bench_incidence):
        for params, prec in random_cases(bench_incidence, 5):
            eye = covariance(prec) @ prec.omega
            assert np.abs(eye - np.eye(prec.num_edges)).max() < 1e-9


class TestColoredGraph:
    def test_single_vertex_coupling_links_its_edges(self, filled_triangle):
        inc = incidence(filled_triangle)
        params = SgmParams(k=4.0, d_v=np.array([1.0, 0.0, 0.0]), d_t=np.zeros(1))
        graph = build_cmrf(inc, params)
        assert graph.lower_links == frozenset({(0, 1)})
        assert graph.upper_links == frozenset()

    def test_triangle_coupling_links_all_sides(self, filled_triangle):
        inc = incidence(filled_triangle)
        params = SgmParams(k=4.0, d_v=np.zeros(3), d_t=np.array([1.0]))
        graph = build_cmrf(inc, params)
        assert graph.upper_links == frozenset({(0, 1), (0, 2), (1, 2)})
        assert graph.lower_links == frozenset()

    def test_zero_triangle_coefficients_empty_upper(self, bench_incidence):
        nv = bench_incidence.b1.shape[0]
        nt = bench_incidence.b2.shape[1]
        params = SgmParams(k=30.0, d_v=np.ones(nv), d_t=np.zeros(nt))
        assert build_cmrf(bench_incidence, params).upper_links == frozenset()

    def test_gaussian_support_inside_colored_links(self, bench_incidence):
        for i in range(10):
            params, prec, graph = draw_sparse_model(bench_incidence, seed=100 + i)
            links = graph.links
            off = np.abs(prec.omega.copy())
            np.fill_diagonal(off, 0.0)
            for a, b in zip(*np.nonzero(off)):
                if a < b:
                    assert (int(a), int(b)) in links

    def test_exact_cancellation_detected(self, filled_triangle):
        # With d_v[1] == d_t[0] the lower and upper couplings of the pair
        # of edges at vertex 1 cancel exactly: the pair keeps both link
        # colors but drops out of the support of omega.
        inc = incidence(filled_triangle)
        params = SgmParams(k=6.0, d_v=np.array([1.5, 0.0, 0.0]), d_t=np.array([1.5]))
        prec = build_precision(inc, params)
        graph = build_cmrf(inc, params)
        assert (0, 1) in graph.lower_links and (0, 1) in graph.upper_links
        assert prec.omega[0, 1] == 0.0
        assert find_cancellations(inc, params) == [(0, 1)]

    def test_no_cancellations_for_generic_draws(self, bench_incidence):
        params = draw_params(bench_incidence, np.random.default_rng(3))
        assert find_cancellations(bench_incidence, params) == []


class TestSampling:
    def test_reproducible(self, bench_incidence):
        params = draw_params(bench_incidence, np.random.default_rng(1))
        prec = build_precision(bench_incidence, params)
        assert np.array_equal(sample(prec, 10, seed=5), sample(prec, 10, seed=5))

    def test_sample_covariance_converges(self, bench_incidence):
        params = draw_params(bench_incidence, np.random.default_rng(2))
        prec = build_precision(bench_incidence, params)
        n = 200_000
        draws = sample(prec, n, seed=8)
        cov = covariance(prec)
        emp = draws.T @ draws / n
        # entrywise error is O(sqrt(var_i var_j / n)); allow 6 sigma
        scale = np.sqrt(np.outer(np.diag(cov), np.diag(cov)) + cov**2)
        assert (np.abs(emp - cov) < 6.0 * scale / np.sqrt(n)).all()
        assert np.abs(draws.mean(axis=0)).max() < 6.0 * np.sqrt(np.diag(cov).max() / n)


class TestDrawParams:
    def test_bounds_and_k_choice(self, bench_incidence):
        rng = np.random.default_rng(4)
        params = draw_params(bench_incidence, rng)
        assert ((params.d_v >= 0.2) & (params.d_v <= 5.0)).all()
        assert ((params.d_t >= 0.2) & (params.d_t <= 5.0)).all()
        expected_k = min_valid_k(bench_incidence, params.d_v, params.d_t, 0.1)
        assert params.k == expected_k

    def test_full_sparsity_zeroes_everything(self, bench_incidence):
        params = draw_params(bench_incidence, 12, sparsity=1.0)
        assert not params.d_v.any() and not params.d_t.any()


class TestModelSerialization:
    def test_round_trip_with_relative_reference(self, tmp_path, bench_complex, bench_incidence):
        save_complex(bench_complex, tmp_path / "complex.json")
        params = draw_params(bench_incidence, 21)
        save_model(params, "complex.json", tmp_path / "model.json")
        sc, loaded = load_model(tmp_path / "model.json")
        assert sc == bench_complex
        assert loaded.k == params.k
        assert np.array_equal(loaded.d_v, params.d_v)
        assert np.array_equal(loaded.d_t, params.d_t)
