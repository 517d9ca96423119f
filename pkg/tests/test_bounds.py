import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import brentq

from helsonlab.bounds import (
    TAGS,
    WeightTriple,
    best_ratio_at_prime,
    blowup_experiment,
    closed_form_spectrum,
    count_sign_changes,
    direct_ratio,
    estimate,
    estimate_above2,
    estimate_below2,
    exponent_index_set,
    projected_symbol_of_test,
    ratio_curve,
    solve_uniform_bound,
    test_matrix as make_test,
)
from helsonlab.projections import (
    hankel_weighted_average,
    local_weight,
    projection_output_matrix,
    weight_Phi_family,
)
from helsonlab.schatten import MatrixSizeError, schatten_norm

Q1_BOUND = 3 / 35 * (4 * math.sqrt(11) - 1)
Q1_X = (18 - 2 * math.sqrt(11)) / 35


def triples(draw_count=20, seed=0):
    rng = np.random.default_rng(seed)
    out = [WeightTriple(*v) for v in [(1, 0, 0), (0, 1, 0), (0, 0, 1), (1 / 3, 1 / 3, 1 / 3)]]
    for _ in range(draw_count):
        v = rng.dirichlet([1, 1, 1])
        out.append(WeightTriple(v[0], v[1], 1 - v[0] - v[1]))
    return out


class TestMatrices:
    def test_shapes(self):
        assert make_test("A", 2).data.tolist() == [[1, 0, 0], [0, 2, 0], [0, 0, 0]]
        assert make_test("C", 2).data.tolist() == [[1, 0, 2], [0, 0, 0], [2, 0, 0]]
        np.testing.assert_array_equal(make_test("BT", 3).data, make_test("B", 3).data.T)

    def test_rejects(self):
        with pytest.raises(ValueError):
            make_test("E", 1)
        with pytest.raises(ValueError):
            make_test("A", -1)

    @pytest.mark.parametrize("tag", TAGS)
    @pytest.mark.parametrize("t", [0, 1e-8, 0.3, 1, 2.5, 10, 1e4])
    def test_spectrum_vs_svd(self, tag, t):
        ref = np.linalg.svd(make_test(tag, t).data, compute_uv=False)
        np.testing.assert_allclose(closed_form_spectrum(tag, t), ref, atol=1e-10 * max(1, t), rtol=0)

    def test_C_small_value_tiny_t(self):
        # exact product of singular values of the nonzero block is t^2
        big, small, _ = closed_form_spectrum("C", 1e-9)
        assert big * small == pytest.approx(1e-18, rel=1e-14)


class TestTriple:
    def test_validation(self):
        with pytest.raises(ValueError):
            WeightTriple(0.5, 0.5, 0.5)
        with pytest.raises(ValueError):
            WeightTriple(-0.1, 0.6, 0.5)

    def test_from_local_uniform(self):
        w = WeightTriple.from_weight(local_weight(weight_Phi_family(1, 1), 5))
        assert (w.phi0, w.phi1, w.phi2) == pytest.approx((1 / 3,) * 3)

    @pytest.mark.parametrize("w", triples(10))
    @pytest.mark.parametrize("tag", ["A", "B", "BT", "C"])
    def test_projection_realizes_D(self, w, tag):
        t = 1.7
        sym = hankel_weighted_average(make_test(tag, t), w.as_weight())
        assert sym.max_deviation(projected_symbol_of_test(tag, t, w)) <= 1e-15
        out = projection_output_matrix(sym).padded(3, 3)
        np.testing.assert_allclose(out.data, make_test("D", w.shift(tag) * t).data, atol=1e-15, rtol=0)

    @pytest.mark.parametrize("w", triples(5, seed=1))
    def test_ratio_curve_vs_svd(self, w):
        for tag in ("A", "B", "BT", "C"):
            for t in (0.2, 1.0, 7.0):
                X = make_test(tag, t)
                PX = projection_output_matrix(hankel_weighted_average(X, w.as_weight()))
                for q in (1, 1.5, 3):
                    ref = schatten_norm(PX, q) / schatten_norm(X, q)
                    assert ratio_curve(q, w, tag, t)[0] == pytest.approx(ref, rel=1e-12)


class TestEstimates:
    def test_q1_examples(self):
        assert estimate_below2(1, WeightTriple(1, 0, 0)) == pytest.approx(math.sqrt(2))
        assert estimate_below2(1, WeightTriple(1 / 3, 1 / 3, 1 / 3)) == pytest.approx(math.sqrt(10) / 3)

    def test_q4_example(self):
        assert estimate_above2(4, WeightTriple(0, 1, 0)) == pytest.approx(2**0.25)

    def test_branch_guard(self):
        w = WeightTriple(0, 1, 0)
        with pytest.raises(ValueError):
            estimate_below2(3, w)
        with pytest.raises(ValueError):
            estimate_above2(1.5, w)
        with pytest.raises(ValueError):
            estimate_below2(2, w)

    @pytest.mark.parametrize("q", [1, 1.3, 1.8, 2.5, 3, 6])
    @pytest.mark.parametrize("w", triples(15, seed=2))
    def test_estimate_is_attained_by_test_matrices(self, q, w):
        # the estimate is a limit or a value of actual ratios, so a fine search must reach it
        ts = np.concatenate([np.logspace(-4, 4, 4001), [1e8, 1e12, 1e16]])
        best = max(ratio_curve(q, w, tag, ts).max() for tag in ("A", "B", "BT", "C"))
        assert best >= estimate(q, w) * (1 - 1e-6)

    @pytest.mark.parametrize("q", [1, 1.5, 1.9, 2.1, 3, 10])
    @pytest.mark.parametrize("w", triples(30, seed=3))
    def test_uniform_bound_is_below_every_estimate(self, q, w):
        assert estimate(q, w) >= solve_uniform_bound(q).uniform_bound * (1 - 1e-12)


class TestSolver:
    def test_q1_closed_form(self):
        r = solve_uniform_bound(1)
        assert r.x_q == pytest.approx(Q1_X, abs=1e-12)
        assert abs(r.uniform_bound - Q1_BOUND) <= 1e-12
        assert r.branch == "below2"
        assert r.delta == pytest.approx(Q1_BOUND - 1, rel=1e-9)

    def test_grid_oracle_q3(self):
        xs = np.arange(0, 1 + 1e-6, 1e-6)
        g = 1.5 ** (1 / 3) * (1 - xs) - (1 + xs**6) ** (1 / 6)
        x_grid = xs[np.argmin(np.abs(g))]
        assert abs(solve_uniform_bound(3).x_q - x_grid) <= 1e-5

    @pytest.mark.parametrize("q", [1, 1.2, 1.5, 1.8, 2.2, 3, 4, 8, 50])
    def test_brentq(self, q):
        if q < 2:
            e = 2 * q / (2 - q)
            f = lambda x: 3 ** (1 / q) * (1 - 2 * x) - (1 + x**e) ** (1 / e)
        else:
            e = 2 * q / (q - 2)
            f = lambda x: 1.5 ** (1 / q) * (1 - x) - (1 + x**e) ** (1 / e)
        ref = brentq(f, 0, 1, xtol=1e-15)
        r = solve_uniform_bound(q)
        assert r.x_q == pytest.approx(ref, abs=1e-12)
        assert r.delta > 0 and r.uniform_bound >= 1

    @pytest.mark.parametrize("q", [2, 0.5, math.inf])
    def test_rejects(self, q):
        with pytest.raises(ValueError):
            solve_uniform_bound(q)

    @pytest.mark.parametrize("q", [1, 1.5, 3, 7])
    def test_single_crossing(self, q):
        assert count_sign_changes(q) == 1

    def test_delta_vanishes_towards_two(self):
        below = [solve_uniform_bound(q).log_delta for q in (1.5, 1.9, 1.99, 1.999)]
        above = [solve_uniform_bound(q).log_delta for q in (2.5, 2.1, 2.01, 2.001)]
        assert all(a > b for a, b in zip(below, below[1:]))
        assert all(a > b for a, b in zip(above, above[1:]))
        assert solve_uniform_bound(1.999).delta >= 0

    def test_log_delta_matches_direct(self):
        for q in (1, 1.5, 3):
            r = solve_uniform_bound(q)
            assert math.exp(r.log_delta) == pytest.approx(r.uniform_bound - 1, rel=1e-8)


class TestBestRatio:
    @pytest.mark.parametrize("q", [1, 1.5, 3])
    @pytest.mark.parametrize("w", triples(10, seed=4))
    def test_dominates_estimate(self, q, w):
        assert best_ratio_at_prime(q, w).ratio >= estimate(q, w) * (1 - 1e-12)

    def test_rejects_two(self):
        with pytest.raises(ValueError):
            best_ratio_at_prime(2, WeightTriple(0, 1, 0))

    def test_uniform_q1(self):
        w = WeightTriple(1 / 3, 1 / 3, 1 / 3)
        choice = best_ratio_at_prime(1, w)
        assert choice.ratio >= math.sqrt(10) / 3 == pytest.approx(estimate(1, w))
        assert choice.tag in ("B", "BT", "C")


@settings(max_examples=40, deadline=None)
@given(st.floats(0, 1), st.floats(0, 1), st.sampled_from([1, 1.25, 1.5, 1.75, 2.5, 3, 5]))
def test_soundness(a, b, q):
    phi0 = a
    phi1 = (1 - a) * b
    w = WeightTriple(phi0, phi1, 1 - phi0 - phi1)
    bound = solve_uniform_bound(q).uniform_bound
    assert best_ratio_at_prime(q, w).ratio >= bound * (1 - 1e-12)


class TestBlowup:
    def test_zero_primes(self):
        r = blowup_experiment(1, weight_Phi_family(1, 1), 0)
        assert r.total_ratio == 1 and r.floor == 1 and r.steps == []

    def test_bad_mode(self):
        with pytest.raises(ValueError):
            blowup_experiment(1, weight_Phi_family(1, 1), 2, mode="x")

    @pytest.mark.parametrize("q", [1, 1.5, 3])
    def test_growth(self, q):
        r = blowup_experiment(q, weight_Phi_family(1, 1), 10)
        partial = np.cumprod([s.ratio for s in r.steps])
        assert np.all(np.diff(partial) >= 0)
        assert r.total_ratio >= r.floor
        assert [s.prime for s in r.steps] == [2, 3, 5, 7, 11, 13, 17, 19, 23, 29]

    @pytest.mark.parametrize("q", [1, 3])
    @pytest.mark.parametrize("ab", [(1, 1), (2, 1.5)])
    def test_direct_matches_product(self, q, ab):
        Phi = weight_Phi_family(*ab)
        for N in (1, 2, 3):
            prod = blowup_experiment(q, Phi, N).total_ratio
            direct = blowup_experiment(q, Phi, N, mode="direct").total_ratio
            assert direct == pytest.approx(prod, rel=1e-8)

    def test_direct_cap(self, monkeypatch):
        monkeypatch.setenv("HELSONLAB_MAX_DIM", "20")
        steps = blowup_experiment(1, weight_Phi_family(1, 1), 3).steps
        with pytest.raises(MatrixSizeError):
            direct_ratio(1, weight_Phi_family(1, 1), steps)

    def test_index_set(self):
        assert exponent_index_set([2, 3]) == [1, 2, 3, 4, 6, 9, 12, 18, 36]
