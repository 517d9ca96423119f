import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from helsonlab.numkernel import check_multiplicative_pair, divisor_pairs
from helsonlab.projections import (
    WeightError,
    WeightFunction,
    hankel_average,
    hankel_weighted_average,
    helson_average,
    helson_weighted_average,
    local_weight,
    projection_output_matrix,
    uniform_weight,
    validate_weight,
    weight_from_config,
    weight_from_table,
    weight_phi_family,
    weight_Phi_family,
)
from helsonlab.schatten import (
    ADDITIVE,
    MULTIPLICATIVE,
    ComplexMatrix,
    IndexOriginError,
    SymbolSequence,
    dyadic_embed,
    dyadic_embed_symbol,
    hankel_truncation,
    helson_truncation,
    multiplicative_assemble,
    restrict_prime,
    trace_pairing,
)


def M(rows, origin=0):
    return ComplexMatrix(np.array(rows, dtype=complex), origin)


def rand(rng, r, c=None):
    c = r if c is None else c
    return rng.standard_normal((r, c)) + 1j * rng.standard_normal((r, c))


def d(k):
    return len(divisor_pairs(k))


class TestHankelAverage:
    def test_single_entry(self):
        A = ComplexMatrix.from_entries(3, 3, {(0, 2): 1})
        g = hankel_average(A)
        assert g.values == {2: pytest.approx(1 / 3)}

    def test_A_t(self):
        t = 6.0
        g = hankel_average(M([[1, 0, 0], [0, t, 0], [0, 0, 0]]))
        assert g[0] == 1 and g[2] == pytest.approx(t / 3) and g.support_bound == 2

    def test_recovers_hankel_on_full_antidiagonals(self):
        rng = np.random.default_rng(0)
        N = 6
        gamma = SymbolSequence(ADDITIVE, {k: complex(*rng.standard_normal(2)) for k in range(2 * N - 1)})
        g = hankel_average(hankel_truncation(gamma, N))
        for k in range(N):
            assert g[k] == pytest.approx(gamma[k], rel=1e-14)
        # past the corner only N - |k - N + 1| of the k+1 pairs are present
        for k in range(N, 2 * N - 1):
            assert g[k] == pytest.approx(gamma[k] * (2 * N - 1 - k) / (k + 1), rel=1e-14)

    def test_wrong_origin(self):
        with pytest.raises(IndexOriginError):
            hankel_average(M([[1]], origin=1))


class TestHankelWeighted:
    def test_idempotent_on_hankel(self):
        rng = np.random.default_rng(1)
        phi = weight_phi_family(2, 1.5)
        gamma = SymbolSequence(ADDITIVE, {k: rng.standard_normal() for k in range(9)})
        out = hankel_weighted_average(projection_output_matrix(gamma), phi)
        assert out.max_deviation(gamma) < 1e-14

    def test_uniform_matches_average(self):
        X = ComplexMatrix(rand(np.random.default_rng(2), 5, 7))
        assert hankel_weighted_average(X, uniform_weight()).max_deviation(hankel_average(X)) < 1e-15

    def test_rejects_bad_weight(self):
        bad = WeightFunction(ADDITIVE, lambda i, j: 0.5)
        with pytest.raises(WeightError):
            hankel_weighted_average(M([[1, 1], [1, 1]]), bad)

    def test_rejects_multiplicative_weight(self):
        with pytest.raises(IndexOriginError):
            hankel_weighted_average(M([[1]]), weight_Phi_family(1, 1))


class TestHelsonAverage:
    def test_single_entry(self):
        A = ComplexMatrix.from_entries(3, 3, {(2, 3): 1}, origin=1)
        assert helson_average(A).values == {6: pytest.approx(0.25)}

    def test_zero(self):
        assert helson_average(ComplexMatrix.zeros(4, 4, 1)).support_bound is None

    def test_recovers_covered_indices(self):
        rng = np.random.default_rng(3)
        N = 10
        rho = SymbolSequence(MULTIPLICATIVE, {k: rng.standard_normal() for k in range(1, N * N + 1)})
        out = helson_average(helson_truncation(rho, N))
        for k in range(1, N * N + 1):
            if all(m <= N and n <= N for m, n in divisor_pairs(k)):
                assert out[k] == pytest.approx(rho[k], rel=1e-14)

    def test_brute_force(self):
        # oracle: rho_k from an explicit scan over all (m, n)
        X = ComplexMatrix(rand(np.random.default_rng(4), 6, 5), origin=1)
        out = helson_average(X)
        for k in range(1, 31):
            total = sum(X[m, n] for m in range(1, 7) for n in range(1, 6) if m * n == k)
            assert out[k] == pytest.approx(total / d(k), abs=1e-14)

    def test_wrong_origin(self):
        with pytest.raises(IndexOriginError):
            helson_average(M([[1]]))


class TestHelsonWeighted:
    def test_endpoint_is_average(self):
        X = ComplexMatrix(rand(np.random.default_rng(5), 8), origin=1)
        out = helson_weighted_average(X, weight_Phi_family(1, 1))
        assert out.max_deviation(helson_average(X)) < 1e-15

    def test_single_entry(self):
        Phi = weight_Phi_family(2, 3)
        X = ComplexMatrix.from_entries(5, 5, {(4, 3): 2.0}, origin=1)
        assert helson_weighted_average(X, Phi).values == {12: pytest.approx(2.0 * Phi(4, 3))}

    def test_multiplicative_output(self):
        rng = np.random.default_rng(6)
        blocks = []
        for p in (2, 3):
            T = rng.uniform(0, 1, (3, 3))
            T[0, 0] = 1
            blocks.append((p, ComplexMatrix(T)))
        A = multiplicative_assemble(blocks, 36)
        rho = helson_weighted_average(A, weight_Phi_family(1.5, 2))
        F = lambda k: rho[k]
        assert F(1) == pytest.approx(1)
        for k in range(1, 40):
            for l in range(1, 40):
                if math.gcd(k, l) == 1:
                    assert F(k * l) == pytest.approx(F(k) * F(l), abs=1e-12)

    def test_rejects_bad_weight(self):
        bad = WeightFunction(MULTIPLICATIVE, lambda m, n: 1.0)
        with pytest.raises(WeightError):
            helson_weighted_average(ComplexMatrix.from_entries(2, 3, {(2, 3): 1}, origin=1), bad)


class TestFamilies:
    def test_phi11_uniform(self):
        phi = weight_phi_family(1, 1)
        assert all(phi(i, j) == pytest.approx(1 / (i + j + 1)) for i in range(10) for j in range(10))

    def test_phi22(self):
        assert weight_phi_family(2, 2)(1, 1) == pytest.approx(2 / 5)

    @pytest.mark.parametrize("ab", [(1, 1), (1.5, 2), (3, 7.5)])
    def test_phi_corner(self, ab):
        assert weight_phi_family(*ab)(0, 0) == 1
        assert weight_Phi_family(*ab)(1, 1) == 1

    def test_Phi11(self):
        Phi = weight_Phi_family(1, 1)
        assert Phi(2, 3) == pytest.approx(1 / 4)
        assert all(Phi(m, n) == pytest.approx(1 / d(m * n)) for m in range(1, 20) for n in range(1, 20))

    def test_rejects_small_params(self):
        with pytest.raises(ValueError):
            weight_phi_family(0.5, 1)
        with pytest.raises(ValueError):
            weight_Phi_family(1, 0.2)

    def test_Phi_is_multiplicative(self):
        assert check_multiplicative_pair(weight_Phi_family(2, 3), 40)
        assert check_multiplicative_pair(weight_Phi_family(1.5, 1), 40)


class TestLocalWeight:
    @pytest.mark.parametrize("p", [2, 3, 7])
    def test_uniform(self, p):
        phi = local_weight(weight_Phi_family(1, 1), p)
        assert all(phi(i, j) == pytest.approx(1 / (i + j + 1)) for i in range(6) for j in range(6))

    @pytest.mark.parametrize("ab", [(1.5, 2), (2, 3), (3, 1)])
    def test_matches_additive_family(self, ab):
        a, b = ab
        for p in (2, 5):
            loc = local_weight(weight_Phi_family(a, b), p)
            fam = weight_phi_family(a, b)
            for i in range(5):
                for j in range(5):
                    assert loc(i, j) == pytest.approx(fam(i, j), rel=1e-13)

    def test_corner(self):
        assert local_weight(weight_Phi_family(2, 2), 3)(0, 0) == 1

    def test_needs_multiplicative(self):
        with pytest.raises(IndexOriginError):
            local_weight(uniform_weight(), 2)


class TestValidate:
    def test_phi11_exact(self):
        r = validate_weight(weight_phi_family(1, 1), 50, exact=True)
        assert r.passed and r.max_deviation == 0

    def test_Phi23(self):
        r = validate_weight(weight_Phi_family(2, 3), 10_000)
        assert r.passed and r.max_deviation <= 1e-10

    def test_Phi23_exact(self):
        assert validate_weight(weight_Phi_family(2, 3), 500, exact=True).passed

    def test_half_constant(self):
        r = validate_weight(WeightFunction(ADDITIVE, lambda i, j: 0.5), 3)
        assert not r.passed
        assert r.failing[:2] == [0, 2]
        assert 1 not in r.failing

    def test_negative_flagged(self):
        w = WeightFunction(ADDITIVE, lambda i, j: 2.0 if i == 0 else (-1.0 if i == 1 else 0.0))
        w2 = WeightFunction(ADDITIVE, lambda i, j: 1.0 if i == 0 else 0.0)
        assert validate_weight(w2, 5).passed
        r = validate_weight(w, 5)
        assert not r.passed and r.negative

    def test_exact_sums_by_fraction_oracle(self):
        # independent rational oracle for c_alpha via the rising factorial
        def c(a, j):
            out = Fraction(1)
            for i in range(1, j + 1):
                out *= Fraction(a + i - 1, i)
            return out

        for a, b in ((2, 3), (3, 3)):
            for k in range(30):
                assert sum(c(a, i) * c(b, k - i) for i in range(k + 1)) == c(a + b, k)


class TestConfig:
    def test_family(self):
        w = weight_from_config({"kind": "multiplicative", "family": "alpha_beta", "alpha": 2, "beta": 3})
        assert w.kind == MULTIPLICATIVE and w(2, 3) == pytest.approx(weight_Phi_family(2, 3)(2, 3))

    def test_uniform_default(self):
        w = weight_from_config({})
        assert w.kind == ADDITIVE and w(1, 1) == pytest.approx(1 / 3)

    def test_table(self):
        w = weight_from_config({"kind": "additive", "bound": 1, "table": [[0, 0, 1], [0, 1, 0.25], [1, 0, 0.75]]})
        assert validate_weight(w, 1).passed
        out = hankel_weighted_average(M([[1, 2]]), w)
        assert out.values == {0: 1, 1: 0.5}
        with pytest.raises(WeightError):
            hankel_weighted_average(M([[1, 2], [3, 0]]), w)

    def test_table_out_of_bound(self):
        w = weight_from_table(ADDITIVE, {(0, 0): 1}, 0)
        with pytest.raises(WeightError):
            w(1, 1)

    def test_unknown(self):
        with pytest.raises(ValueError):
            weight_from_config({"family": "nope"})


class TestOutputMatrix:
    def test_D(self):
        out = projection_output_matrix(SymbolSequence(ADDITIVE, {0: 1, 2: 0.3}))
        np.testing.assert_array_equal(out.data, [[1, 0, 0.3], [0, 0.3, 0], [0.3, 0, 0]])

    def test_zero(self):
        out = projection_output_matrix(SymbolSequence(ADDITIVE))
        assert out.shape == (1, 1) and out.data[0, 0] == 0

    def test_helson(self):
        out = projection_output_matrix(SymbolSequence(MULTIPLICATIVE, {6: 0.25}))
        assert out.shape == (6, 6) and np.count_nonzero(out.data) == 4


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.integers(0, 40))
def test_idempotence(seed, S):
    rng = np.random.default_rng(seed)
    phi = weight_phi_family(*rng.choice([1, 1.5, 2, 3], 2))
    g = SymbolSequence(ADDITIVE, {k: rng.standard_normal() for k in range(S + 1)})
    assert hankel_weighted_average(projection_output_matrix(g), phi).max_deviation(g) <= 1e-13
    Phi = weight_Phi_family(*rng.choice([1, 1.5, 2, 3], 2))
    r = SymbolSequence(MULTIPLICATIVE, {k: rng.standard_normal() for k in range(1, S + 2)})
    assert helson_weighted_average(projection_output_matrix(r), Phi).max_deviation(r) <= 1e-13


@pytest.mark.parametrize("seed", range(5))
def test_orthogonality_q2(seed):
    rng = np.random.default_rng(seed)
    A = ComplexMatrix(rand(rng, 4, 6))
    PA = projection_output_matrix(hankel_average(A))
    n = PA.rows
    R = ComplexMatrix(A.padded(n, n).data - PA.data)
    for k in range(2 * n - 1):
        assert abs(trace_pairing(R, hankel_truncation(SymbolSequence(ADDITIVE, {k: 1}), n))) < 1e-10
    B = ComplexMatrix(rand(rng, 5, 3), origin=1)
    PB = projection_output_matrix(helson_average(B))
    n = PB.rows
    R = ComplexMatrix(B.padded(n, n).data - PB.data, origin=1)
    for k in range(1, n + 1):
        assert abs(trace_pairing(R, helson_truncation(SymbolSequence(MULTIPLICATIVE, {k: 1}), n))) < 1e-10


@pytest.mark.parametrize("seed", range(5))
def test_dyadic_commutation(seed):
    rng = np.random.default_rng(seed)
    Phi = weight_Phi_family(*rng.choice([1, 1.5, 2, 3], 2))
    A = ComplexMatrix(rand(rng, int(rng.integers(1, 7)), int(rng.integers(1, 7))))
    lhs = helson_weighted_average(dyadic_embed(A), Phi)
    rhs = dyadic_embed_symbol(hankel_weighted_average(A, local_weight(Phi, 2)))
    assert lhs.max_deviation(rhs) <= 1e-12
    assert all(k & (k - 1) == 0 for k in lhs.values)


def test_tensor_factorization():
    rng = np.random.default_rng(7)
    Phi = weight_Phi_family(2, 1.5)
    blocks = []
    for p in (2, 3):
        T = rand(rng, 3)
        T[0, 0] = 1
        blocks.append((p, ComplexMatrix(T)))
    A = multiplicative_assemble(blocks, 36)
    PA = projection_output_matrix(helson_weighted_average(A, Phi))
    for p, T in blocks:
        local = hankel_weighted_average(T, local_weight(Phi, p))
        got = restrict_prime(PA, p, 5)
        np.testing.assert_allclose(got.data, hankel_truncation(local, 5).data, atol=1e-12, rtol=0)
