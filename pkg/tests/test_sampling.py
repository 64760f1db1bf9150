import numpy as np
import pytest

from podsketch.errors import DegenerateDistributionError, ParameterError
from podsketch.matcore import dense_svd
from podsketch.sampling import (
    Distribution,
    SampleDraw,
    column_norm_distribution,
    ctsvd_sample_count,
    leverage_distribution,
    ltsvd_sample_count,
    residual_distribution,
    row_norm_distribution,
    sample_with_replacement,
    scale_sampled_columns,
    scale_sampled_rows,
    uniform_distribution,
    _ctsvd_count_raw,
    _ltsvd_count_raw,
)

from oracles import (
    QueuedGenerator,
    chi2_critical,
    column_count_highprec,
    principal_angles_sin_deg,
    row_count_highprec,
)


class TestDistributionType:
    def test_sorts_by_index(self):
        d = Distribution(np.array([5, 1, 3]), np.array([0.2, 0.5, 0.3]))
        np.testing.assert_array_equal(d.indices, [1, 3, 5])
        np.testing.assert_array_equal(d.weights, [0.5, 0.3, 0.2])

    def test_rejects_duplicates_negatives_and_bad_sum(self):
        with pytest.raises(ParameterError):
            Distribution(np.array([1, 1]), np.array([0.5, 0.5]))
        with pytest.raises(ParameterError):
            Distribution(np.array([0, 1]), np.array([-0.1, 1.1]))
        with pytest.raises(ParameterError):
            Distribution(np.array([0, 1]), np.array([0.5, 0.4]))
        with pytest.raises(ParameterError):
            Distribution(np.array([], dtype=int), np.array([]))

    def test_from_weights_normalizes(self):
        d = Distribution.from_weights([0, 1, 2], [2.0, 0.0, 6.0])
        np.testing.assert_allclose(d.weights, [0.25, 0.0, 0.75])

    def test_from_weights_all_zero_degenerate(self):
        with pytest.raises(DegenerateDistributionError):
            Distribution.from_weights([0, 1], [0.0, 0.0])

    def test_weight_of_membership(self):
        d = Distribution(np.array([2, 5]), np.array([0.3, 0.7]))
        np.testing.assert_allclose(d.weight_of([5, 2]), [0.7, 0.3])
        with pytest.raises(ParameterError):
            d.weight_of([3])


class TestSampleDrawType:
    def test_count_bookkeeping_enforced(self):
        SampleDraw(np.array([1, 4]), np.array([2, 3]), 5)
        with pytest.raises(ParameterError):
            SampleDraw(np.array([1, 4]), np.array([2, 3]), 6)
        with pytest.raises(ParameterError):
            SampleDraw(np.array([1, 4]), np.array([0, 5]), 5)
        with pytest.raises(ParameterError):
            SampleDraw(np.array([4, 4]), np.array([2, 3]), 5)


class TestNormDistributions:
    def test_column_norm_ratio(self):
        a = np.array([[1.0, 2.0], [0.0, 0.0]])
        d = column_norm_distribution(a)
        np.testing.assert_allclose(d.weights, [0.2, 0.8])

    def test_equal_norms_uniform(self, rng):
        q = np.linalg.qr(rng.standard_normal((8, 4)))[0]
        d = column_norm_distribution(q)
        np.testing.assert_allclose(d.weights, 0.25, atol=1e-14)

    def test_zero_column_gets_exact_zero(self):
        a = np.array([[1.0, 0.0, 2.0]])
        d = column_norm_distribution(a)
        assert d.weights[1] == 0.0

    def test_all_zero_candidates_degenerate(self):
        a = np.array([[0.0, 1.0], [0.0, 2.0]])
        with pytest.raises(DegenerateDistributionError):
            column_norm_distribution(a, candidates=[0])

    def test_candidate_subset(self, rng):
        a = rng.standard_normal((5, 6))
        d = column_norm_distribution(a, candidates=[1, 4])
        norms2 = np.sum(a * a, axis=0)
        np.testing.assert_allclose(
            d.weights, norms2[[1, 4]] / norms2[[1, 4]].sum(), rtol=1e-14
        )

    def test_row_norm_ratio(self):
        d = row_norm_distribution(np.array([[3.0, 0.0], [0.0, 4.0]]))
        np.testing.assert_allclose(d.weights, [9 / 25, 16 / 25])

    def test_row_single_nonzero(self):
        d = row_norm_distribution(np.array([[0.0, 0.0], [1.0, 2.0]]))
        np.testing.assert_array_equal(d.weights, [0.0, 1.0])

    def test_row_equals_transposed_column(self, rng):
        a = rng.standard_normal((7, 5))
        np.testing.assert_allclose(
            row_norm_distribution(a).weights,
            column_norm_distribution(a.T).weights,
            rtol=1e-15,
        )


class TestUniformDistribution:
    def test_four_candidates(self):
        d = uniform_distribution([3, 1, 4, 9])
        np.testing.assert_array_equal(d.weights, [0.25] * 4)

    def test_single_candidate(self):
        d = uniform_distribution([7])
        assert d.weights[0] == 1.0

    def test_sum_exact_after_normalization(self):
        d = uniform_distribution(list(range(10)))
        assert d.weights.sum() == pytest.approx(1.0, abs=1e-15)

    def test_empty_rejected(self):
        with pytest.raises(ParameterError):
            uniform_distribution([])


class TestResidualDistribution:
    def test_captured_column_weight_zero(self, rng):
        a = rng.standard_normal((10, 4))
        u = a[:, [2]] / np.linalg.norm(a[:, 2])
        d = residual_distribution(a, u)
        assert d.weights[2] < 1e-25

    def test_empty_basis_reduces_to_column_norms(self, rng):
        a = rng.standard_normal((6, 5))
        d1 = residual_distribution(a, np.zeros((6, 0)))
        d2 = column_norm_distribution(a)
        np.testing.assert_allclose(d1.weights, d2.weights, rtol=1e-15)

    def test_matches_per_column_brute_force(self, rng):
        a = rng.standard_normal((30, 8))
        u = dense_svd(a).u[:, :2]
        d = residual_distribution(a, u)
        raw = np.empty(8)
        for j in range(8):
            col = a[:, j]
            r = col - u @ (u.T @ col)
            raw[j] = r @ r
        np.testing.assert_allclose(d.weights, raw / raw.sum(), rtol=1e-12)

    def test_fully_captured_degenerate(self, rng):
        u = np.linalg.qr(rng.standard_normal((9, 3)))[0]
        a = u @ rng.standard_normal((3, 5))  # columns inside span(u)
        with pytest.raises(DegenerateDistributionError):
            residual_distribution(a, u)


class TestLeverageDistribution:
    def test_identity_basis(self):
        u = np.eye(6)[:, :3]
        d = leverage_distribution(u)
        np.testing.assert_allclose(d.weights, [1 / 3] * 3 + [0.0] * 3)

    def test_square_orthogonal_uniform(self, rng):
        q = np.linalg.qr(rng.standard_normal((5, 5)))[0]
        d = leverage_distribution(q)
        np.testing.assert_allclose(d.weights, 0.2, atol=1e-14)

    def test_sums_to_one(self, rng):
        q = np.linalg.qr(rng.standard_normal((20, 3)))[0]
        d = leverage_distribution(q)
        assert abs(d.weights.sum() - 1.0) <= 1e-12


class TestSampleWithReplacement:
    def test_single_candidate_collapses(self):
        d = uniform_distribution([4])
        draw = sample_with_replacement(d, 5, np.random.default_rng(0))
        assert draw.ndistinct == 1 and draw.counts[0] == 5 and draw.total == 5

    def test_count_one(self, rng):
        d = uniform_distribution([0, 1, 2])
        draw = sample_with_replacement(d, 1, rng)
        assert draw.ndistinct == 1 and draw.total == 1

    def test_inverse_cdf_mapping_is_exact(self):
        # cum = (0.2, 0.5, 1.0); hand-picked variates hit known segments.
        d = Distribution(np.array([3, 7, 9]), np.array([0.2, 0.3, 0.5]))
        gen = QueuedGenerator([[0.05, 0.21, 0.45, 0.51, 0.99]])
        draw = sample_with_replacement(d, 5, gen)
        np.testing.assert_array_equal(draw.unique_indices, [3, 7, 9])
        np.testing.assert_array_equal(draw.counts, [1, 2, 2])

    def test_frequencies_match_weights(self):
        d = Distribution(np.array([0, 1]), np.array([0.5, 0.5]))
        draw = sample_with_replacement(d, 10**6, np.random.default_rng(2024))
        freq = draw.counts / draw.total
        assert np.abs(freq - 0.5).max() < 0.003
        # Chi-squared goodness of fit, alpha = 1e-6, df = 1.
        expected = 0.5 * draw.total
        chi2 = float(np.sum((draw.counts - expected) ** 2 / expected))
        assert chi2 < chi2_critical(1, 1e-6)

    def test_three_way_frequencies(self):
        d = Distribution(np.array([0, 1, 2]), np.array([0.1, 0.3, 0.6]))
        draw = sample_with_replacement(d, 10**6, np.random.default_rng(7))
        freq = draw.counts / draw.total
        np.testing.assert_allclose(freq, [0.1, 0.3, 0.6], atol=0.003)
        expected = np.array([0.1, 0.3, 0.6]) * draw.total
        chi2 = float(np.sum((draw.counts - expected) ** 2 / expected))
        assert chi2 < chi2_critical(2, 1e-6)

    def test_deterministic_for_fixed_seed(self):
        d = Distribution.from_weights(np.arange(50), np.arange(50) + 1.0)
        a = sample_with_replacement(d, 1000, np.random.default_rng(99))
        b = sample_with_replacement(d, 1000, np.random.default_rng(99))
        assert a.unique_indices.tobytes() == b.unique_indices.tobytes()
        assert a.counts.tobytes() == b.counts.tobytes()

    def test_zero_weight_never_drawn(self):
        d = Distribution(np.array([0, 1, 2]), np.array([0.5, 0.0, 0.5]))
        draw = sample_with_replacement(d, 10**5, np.random.default_rng(5))
        assert 1 not in draw.unique_indices

    def test_trailing_zero_unreachable_even_at_cdf_edge(self):
        # Variates arbitrarily close to 1 must land on the last positive
        # weight, not on a trailing zero-weight candidate.
        d = Distribution(np.array([0, 1, 2]), np.array([0.5, 0.5, 0.0]))
        gen = QueuedGenerator([[1.0 - 1e-16, 0.999999999]])
        draw = sample_with_replacement(d, 2, gen)
        np.testing.assert_array_equal(draw.unique_indices, [1])

    def test_consumes_one_batch_only(self):
        d = uniform_distribution([0, 1])
        gen = QueuedGenerator([[0.1, 0.9, 0.4]])
        sample_with_replacement(d, 3, gen)  # a second batch request would fail


class TestScaleSampledColumns:
    def test_single_column_identity_scale(self, rng):
        a = rng.standard_normal((6, 1))
        d = uniform_distribution([0])
        draw = sample_with_replacement(d, 4, rng)
        out = scale_sampled_columns(a, draw, d, 4)
        np.testing.assert_allclose(out, a, rtol=1e-15)

    def test_double_draw_half_weight(self):
        a = np.array([[2.0, 5.0], [1.0, -3.0]])
        d = Distribution(np.array([0, 1]), np.array([0.5, 0.5]))
        gen = QueuedGenerator([[0.1, 0.3]])  # both land on column 0
        draw = sample_with_replacement(d, 2, gen)
        out = scale_sampled_columns(a, draw, d, 2)
        np.testing.assert_allclose(out, np.sqrt(2.0) * a[:, [0]], rtol=1e-15)

    def test_dup_and_dedup_share_singular_values(self, rng):
        a = rng.standard_normal((15, 12))
        d = column_norm_distribution(a)
        for seed in range(5):
            draw = sample_with_replacement(d, 30, np.random.default_rng(seed))
            c_dup = scale_sampled_columns(a, draw, d, 30, dedup=False)
            d_mat = scale_sampled_columns(a, draw, d, 30, dedup=True)
            assert c_dup.shape[1] == 30 and d_mat.shape[1] == draw.ndistinct
            s_c = dense_svd(c_dup).sigma
            s_d = dense_svd(d_mat).sigma
            n = s_d.size
            np.testing.assert_allclose(
                s_c[:n], s_d, rtol=1e-12, atol=1e-12 * s_c[0]
            )

    def test_gram_preserved_exactly(self, rng):
        a = rng.standard_normal((10, 20))
        d = column_norm_distribution(a)
        draw = sample_with_replacement(d, 40, rng)
        c_dup = scale_sampled_columns(a, draw, d, 40, dedup=False)
        d_mat = scale_sampled_columns(a, draw, d, 40, dedup=True)
        g1 = c_dup @ c_dup.T
        g2 = d_mat @ d_mat.T
        assert np.linalg.norm(g1 - g2) <= 1e-12 * np.linalg.norm(g1)


class TestScaleSampledRows:
    def test_repeated_single_row_unit_scale(self):
        c = np.array([[1.0, 2.0, 3.0]])
        d = row_norm_distribution(c)
        draw = sample_with_replacement(d, 3, np.random.default_rng(0))
        out = scale_sampled_rows(c, draw, d, 3)
        np.testing.assert_allclose(out, c, rtol=1e-15)

    def test_quarter_weight_single_draw(self, rng):
        # Four rows of equal norm -> q = 1/4 each; w=2 draws on distinct
        # rows scale each kept row by sqrt(1/(2 * 1/4)) = sqrt(2).
        base = rng.standard_normal(3)
        signs = np.array([[1.0], [-1.0], [1.0], [-1.0]])
        c = signs * base
        d = row_norm_distribution(c)
        gen = QueuedGenerator([[0.1, 0.6]])  # rows 0 and 2
        draw = sample_with_replacement(d, 2, gen)
        out = scale_sampled_rows(c, draw, d, 2)
        np.testing.assert_allclose(out, np.sqrt(2.0) * c[[0, 2], :], rtol=1e-15)

    def test_dedup_matches_duplicated_spectrum(self, rng):
        c = rng.standard_normal((12, 9))
        d = row_norm_distribution(c)
        draw = sample_with_replacement(d, 25, rng)
        w_dup = scale_sampled_rows(c, draw, d, 25, dedup=False)
        y = scale_sampled_rows(c, draw, d, 25, dedup=True)
        fw = dense_svd(w_dup)
        fy = dense_svd(y)
        n = fy.sigma.size
        np.testing.assert_allclose(
            fw.sigma[:n], fy.sigma, rtol=1e-12, atol=1e-12 * fw.sigma[0]
        )
        # Right singular vectors agree too (same row space).
        dots = np.abs(np.einsum("ij,ij->j", fw.v[:, :n], fy.v))
        keep = fy.sigma > 1e-8 * fy.sigma[0]
        assert dots[keep].min() >= 1.0 - 1e-10

    def test_row_dedup_full_equivalence_chain(self, rng):
        # Draw columns once; build the duplicated block and the deduped
        # block; then apply one shared row draw to both.  The duplicated
        # row sample of each must have identical spectra and identical
        # left subspaces, and deduping the rows must not change sigma.
        a = rng.standard_normal((40, 25))
        col_dist = column_norm_distribution(a)
        col_draw = sample_with_replacement(col_dist, 60, np.random.default_rng(3))
        c_dup = scale_sampled_columns(a, col_draw, col_dist, 60, dedup=False)
        d_mat = scale_sampled_columns(a, col_draw, col_dist, 60, dedup=True)

        rd_c = row_norm_distribution(c_dup)
        rd_d = row_norm_distribution(d_mat)
        np.testing.assert_allclose(rd_c.weights, rd_d.weights, rtol=1e-12)

        row_draw = sample_with_replacement(rd_c, 30, np.random.default_rng(8))
        w_mat = scale_sampled_rows(c_dup, row_draw, rd_c, 30, dedup=False)
        x_mat = scale_sampled_rows(d_mat, row_draw, rd_c, 30, dedup=False)
        y_mat = scale_sampled_rows(d_mat, row_draw, rd_c, 30, dedup=True)

        sw = np.linalg.svd(w_mat, compute_uv=False)
        sx = np.linalg.svd(x_mat, compute_uv=False)
        sy = np.linalg.svd(y_mat, compute_uv=False)
        n = sy.size
        np.testing.assert_allclose(sx[:n], sy, rtol=1e-10, atol=1e-12 * sw[0])
        np.testing.assert_allclose(sw[:n], sy, rtol=1e-10, atol=1e-12 * sw[0])

        k = 5
        uw = np.linalg.svd(w_mat, full_matrices=False)[0][:, :k]
        ux = np.linalg.svd(x_mat, full_matrices=False)[0][:, :k]
        assert principal_angles_sin_deg(uw, ux).max() < 1e-6


class TestSampleCountFormulas:
    def test_column_budget_frozen_value(self):
        want, raw = column_count_highprec(10, 0.7, 0.45)
        assert want == 1016
        assert abs(raw - 1015.7) < 0.1
        assert ltsvd_sample_count(10, 0.7, 0.45) == 1016

    def test_row_budget_frozen_value(self):
        want, raw = row_count_highprec(2, 1, 0.8)
        assert want == 16
        assert abs(raw - 15.3) < 0.1
        assert ctsvd_sample_count(2, 1, 0.8) == 16

    def test_more_oracle_points(self):
        for k, e, dl in [(3, 0.5, 0.1), (20, 1.2, 0.9), (1, 0.05, 0.5)]:
            assert ltsvd_sample_count(k, e, dl) == column_count_highprec(k, e, dl)[0]
            assert ctsvd_sample_count(k, e, dl) == row_count_highprec(k, e, dl)[0]

    def test_column_budget_log_vanishes_as_delta_to_one(self):
        raw = _ltsvd_count_raw(1, 0.5, 1.0 - 1e-12)
        assert raw == pytest.approx(4.0 / 0.25, rel=1e-5)

    def test_column_budget_linear_in_k(self):
        assert _ltsvd_count_raw(6, 0.7, 0.3) == 2.0 * _ltsvd_count_raw(3, 0.7, 0.3)

    def test_row_budget_quadratic_in_k(self):
        assert _ctsvd_count_raw(8, 0.9, 0.4) == 4.0 * _ctsvd_count_raw(4, 0.9, 0.4)

    def test_row_budget_quartic_in_epsilon(self):
        hi = _ctsvd_count_raw(3, 2.0, 0.4)
        lo = _ctsvd_count_raw(3, 0.5, 0.4)
        assert hi == pytest.approx(lo / 256.0, rel=1e-13)

    @pytest.mark.parametrize("fn", [ltsvd_sample_count, ctsvd_sample_count])
    def test_domain_errors(self, fn):
        for k, e, dl in [(0, 0.5, 0.5), (2.5, 0.5, 0.5), (2, 0.0, 0.5),
                         (2, -1.0, 0.5), (2, 0.5, 0.0), (2, 0.5, 1.0),
                         (2, 0.5, 1.5)]:
            with pytest.raises(ParameterError):
                fn(k, e, dl)
