"""Desk-scale invariant suite behind ``helsonlab verify``.

Each check measures a deviation (0 when an identity holds exactly, or the
size of the worst violation of an inequality) and compares it with a
tolerance.  A failure whose deviation would still pass at the check's
default tolerance is reported as a ``tolerance`` failure; anything else is
a ``logic`` failure.
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

from helsonlab import bounds, numkernel, projections, schatten
from helsonlab.schatten import ADDITIVE, MULTIPLICATIVE, ComplexMatrix, SymbolSequence


@dataclass
class CheckResult:
    name: str
    module: str
    passed: bool
    deviation: float
    tolerance: float
    default_tolerance: float
    failure: str | None
    detail: str
    seconds: float


@dataclass
class _Check:
    name: str
    module: str
    tolerance: float
    run: Callable[[np.random.Generator], tuple[float, str]]


_CHECKS: list[_Check] = []


def check(module: str, tolerance: float):
    def register(fn):
        _CHECKS.append(_Check(fn.__name__, module, tolerance, fn))
        return fn

    return register


def random_complex(rng, shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def random_triple(rng) -> bounds.WeightTriple:
    w = rng.dirichlet(np.ones(3))
    w[2] = max(0.0, 1.0 - w[0] - w[1])
    return bounds.WeightTriple(float(w[0]), float(w[1]), float(w[2]))


def random_pair_function(rng, primes, depth=8):
    tables = {}
    for p in primes:
        T = rng.uniform(-1, 1, (depth, depth)) + 1j * rng.uniform(-1, 1, (depth, depth))
        T[0, 0] = 1
        tables[p] = T
    return numkernel.pair_function_from_tables(tables)


# -- numkernel -----------------------------------------------------------------

@check("numkernel", 0.0)
def d2_is_divisor_count(rng):
    worst = max(abs(numkernel.d_alpha(2, n) - len(numkernel.divisor_pairs(n))) for n in range(1, 10_001))
    return worst, "n <= 10^4"


@check("numkernel", 1e-12)
def d_alpha_on_prime_powers(rng):
    primes = [p for p in range(2, 101) if numkernel.is_prime(p)]
    worst = 0.0
    for alpha in (1, 1.5, 2, 3):
        for p in primes:
            for j in range(11):
                a, b = numkernel.d_alpha(alpha, p**j), numkernel.c_alpha(alpha, j)
                worst = max(worst, abs(a - b) / b)
    return worst, "p <= 100, j <= 10, relative"


@check("numkernel", 0.0)
def factorize_round_trip(rng):
    bad = sum(numkernel.factorize(n).value != n for n in range(1, 20_001))
    return float(bad), "n <= 2*10^4"


@check("numkernel", 1e-10)
def convolution_is_multiplicative(rng):
    worst = 0.0
    for _ in range(3):
        f = random_pair_function(rng, [2, 3, 5, 7, 11, 13, 17, 19, 23, 29])
        F = {}

        def conv(n):
            if n not in F:
                F[n] = numkernel.convolve(f, n)
            return F[n]

        for k in range(1, 31):
            for l in range(1, 31):
                if math.gcd(k, l) == 1:
                    worst = max(worst, abs(conv(k * l) - conv(k) * conv(l)))
    return worst, "3 random pair functions, coprime k, l <= 30"


@check("numkernel", 0.0)
def multiplicative_pair_examples(rng):
    d = lambda n: len(numkernel.divisor_pairs(n))
    cases = [
        (lambda m, n: 1 / d(m * n), 30, True),
        (lambda m, n: m + n, 10, False),
        (lambda m, n: numkernel.d_alpha(2, m) * numkernel.d_alpha(3, n) / numkernel.d_alpha(5, m * n), 30, True),
    ]
    wrong = sum(numkernel.check_multiplicative_pair(f, b) != want for f, b, want in cases)
    return float(wrong), "known multiplicative / non-multiplicative pair functions"


# -- schatten ------------------------------------------------------------------

@check("schatten", 1e-9)
def cross_norm_identity(rng):
    worst = 0.0
    for _ in range(100):
        A = ComplexMatrix(random_complex(rng, (rng.integers(2, 4),) * 2))
        B = ComplexMatrix(random_complex(rng, (rng.integers(2, 4),) * 2))
        AB = schatten.kron(A, B)
        for q in (1, 1.5, 2, 3, math.inf):
            a, b = schatten.schatten_norm(A, q), schatten.schatten_norm(B, q)
            worst = max(worst, abs(schatten.schatten_norm(AB, q) - a * b) / (1 + a * b))
    return worst, "100 random pairs"


@check("schatten", 1e-12)
def restriction_monotone(rng):
    worst = 0.0
    for _ in range(20):
        A = ComplexMatrix(random_complex(rng, (27, 27)), origin=1)
        for p, d in ((2, 5), (3, 4), (5, 3)):
            R = schatten.restrict_prime(A, p, d)
            for q in (1, 2, 3, math.inf):
                worst = max(worst, schatten.schatten_norm(R, q) - schatten.schatten_norm(A, q))
    return max(worst, 0.0), "restricted norm minus full norm"


@check("schatten", 1e-10)
def hilbert_schmidt_consistency(rng):
    worst = 0.0
    for _ in range(50):
        A = ComplexMatrix(random_complex(rng, (rng.integers(1, 12), rng.integers(1, 12))))
        hs = schatten.schatten_norm(A, 2) ** 2
        worst = max(worst, abs(hs - schatten.trace_pairing(A, A)) / hs)
    return worst, "relative"


@check("schatten", 0.0)
def helson_structure(rng):
    bad = 0
    for _ in range(10):
        rho = SymbolSequence(MULTIPLICATIVE, {k: complex(*rng.standard_normal(2)) for k in range(1, 200)})
        M = schatten.helson_truncation(rho, 14)
        by_product = {}
        for m in range(1, 15):
            for n in range(1, 15):
                by_product.setdefault(m * n, set()).add(M[m, n])
        bad += sum(len(v) != 1 for v in by_product.values())
    return float(bad), "fibers with more than one value"


@check("schatten", 1e-12)
def dyadic_isometry(rng):
    worst = 0.0
    for _ in range(30):
        A = ComplexMatrix(random_complex(rng, (rng.integers(1, 7), rng.integers(1, 7))))
        E = schatten.dyadic_embed(A)
        for q in (1, 1.5, 2, 4, math.inf):
            a = schatten.schatten_norm(A, q)
            worst = max(worst, abs(schatten.schatten_norm(E, q) - a) / a)
    return worst, "relative"


@check("schatten", 0.0)
def assembled_matrix_is_multiplicative(rng):
    bad = 0
    for _ in range(3):
        blocks = []
        for p in (2, 3, 5):
            T = random_complex(rng, (3, 3))
            T[0, 0] = 1
            blocks.append((p, ComplexMatrix(T)))
        M = schatten.multiplicative_assemble(blocks, 40)
        f = lambda m, n: M.get(m, n) if m <= 40 and n <= 40 else 0j
        bad += not numkernel.check_multiplicative_pair(f, 40)
    return float(bad), "assemblies failing the pair check"


# -- projections ---------------------------------------------------------------

@check("projections", 1e-10)
def weight_sums(rng):
    worst = 0.0
    for a in (1, 1.5, 2, 3):
        for b in (1, 1.5, 2, 3):
            worst = max(worst, projections.validate_weight(projections.weight_phi_family(a, b), 50).max_deviation)
            worst = max(worst, projections.validate_weight(projections.weight_Phi_family(a, b), 1000).max_deviation)
    return worst, "phi: k <= 50, Phi: k <= 1000"


@check("projections", 1e-12)
def idempotence(rng):
    worst = 0.0
    phi = projections.weight_phi_family(2, 3)
    Phi = projections.weight_Phi_family(1.5, 2)
    for _ in range(10):
        S = int(rng.integers(1, 41))
        g = SymbolSequence(ADDITIVE, {k: complex(*rng.standard_normal(2)) for k in range(S + 1)})
        out = projections.hankel_weighted_average(projections.projection_output_matrix(g), phi)
        worst = max(worst, g.max_deviation(out) / max(1, max(abs(v) for v in g.values.values())))
        r = SymbolSequence(MULTIPLICATIVE, {k: complex(*rng.standard_normal(2)) for k in range(1, S + 1)})
        out = projections.helson_weighted_average(projections.projection_output_matrix(r), Phi)
        worst = max(worst, r.max_deviation(out))
    return worst, "symbols with support bound <= 40"


@check("projections", 1e-10)
def orthogonal_at_q2(rng):
    worst = 0.0
    for _ in range(10):
        N = int(rng.integers(2, 9))
        A = ComplexMatrix(random_complex(rng, (N, N)))
        PA = projections.projection_output_matrix(projections.hankel_average(A))
        size = PA.rows
        R = A.padded(size, size).data - PA.data
        for k in range(2 * size - 1):
            H = schatten.hankel_truncation(SymbolSequence(ADDITIVE, {k: 1}), size)
            worst = max(worst, abs(np.vdot(H.data, R)))
        B = ComplexMatrix(random_complex(rng, (N, N)), origin=1)
        PB = projections.projection_output_matrix(projections.helson_average(B))
        size = PB.rows
        R = B.padded(size, size).data - PB.data
        for k in range(1, size + 1):
            H = schatten.helson_truncation(SymbolSequence(MULTIPLICATIVE, {k: 1}), size)
            worst = max(worst, abs(np.vdot(H.data, R)))
    return worst, "residual paired with unit Hankel/Helson matrices"


def pairing_deviation(A: ComplexMatrix, rho: SymbolSequence) -> float:
    PA = projections.projection_output_matrix(projections.helson_average(A))
    size = max(PA.rows, A.rows, A.cols, rho.support_bound or 1)
    M = schatten.helson_truncation(rho, size)
    lhs = schatten.trace_pairing(M, A.padded(size, size))
    rhs = schatten.trace_pairing(M, PA.padded(size, size))
    return abs(lhs - rhs) / (1 + abs(lhs))


@check("projections", 1e-10)
def annihilator_identity(rng):
    worst = 0.0
    for _ in range(20):
        A = ComplexMatrix(random_complex(rng, (rng.integers(1, 11), rng.integers(1, 11))), origin=1)
        rho = SymbolSequence(MULTIPLICATIVE, {k: complex(*rng.standard_normal(2)) for k in range(1, 120)})
        worst = max(worst, pairing_deviation(A, rho))
    return worst, "<M_rho, A> vs <M_rho, PA>, relative"


@check("projections", 1e-12)
def dyadic_commutation(rng):
    worst = 0.0
    for _ in range(20):
        a, b = rng.choice([1, 1.5, 2, 3], size=2)
        Phi = projections.weight_Phi_family(float(a), float(b))
        A = ComplexMatrix(random_complex(rng, (rng.integers(1, 7), rng.integers(1, 7))))
        lhs = projections.helson_weighted_average(schatten.dyadic_embed(A), Phi)
        rhs = schatten.dyadic_embed_symbol(projections.hankel_weighted_average(A, projections.local_weight(Phi, 2)))
        worst = max(worst, lhs.max_deviation(rhs))
    return worst, "random A up to 6x6"


@check("projections", 1e-12)
def tensor_factorization(rng):
    worst = 0.0
    for _ in range(5):
        Phi = projections.weight_Phi_family(*map(float, rng.choice([1, 1.5, 2, 3], size=2)))
        blocks = []
        for p in (2, 3):
            T = random_complex(rng, (3, 3))
            T[0, 0] = 1
            blocks.append((p, ComplexMatrix(T)))
        A = schatten.multiplicative_assemble(blocks, 36)
        PA = projections.projection_output_matrix(projections.helson_weighted_average(A, Phi))
        for p, T in blocks:
            local = projections.hankel_weighted_average(T, projections.local_weight(Phi, p))
            expected = schatten.hankel_truncation(local, 5)
            got = schatten.restrict_prime(PA.padded(max(PA.rows, p**4), max(PA.rows, p**4)), p, 5)
            worst = max(worst, float(np.max(np.abs(got.data - expected.data))))
    return worst, "restriction of projected tensor vs local projection"


# -- bounds --------------------------------------------------------------------

@check("bounds", 1e-9)
def q1_constant(rng):
    exact = 3 / 35 * (4 * math.sqrt(11) - 1)
    return abs(bounds.solve_uniform_bound(1).uniform_bound - exact), "(3/35)(4 sqrt 11 - 1)"


@check("bounds", 1e-10)
def closed_form_spectra(rng):
    worst = 0.0
    for tag in bounds.TAGS:
        for t in np.linspace(0, 10, 50):
            cf = bounds.closed_form_spectrum(tag, float(t))
            sv = schatten.singular_values(bounds.test_matrix(tag, float(t)))
            worst = max(worst, float(np.max(np.abs(cf - sv))))
    return worst, "5 tags x 50 t in [0, 10]"


@check("bounds", 1e-9)
def estimate_soundness(rng):
    worst = 0.0
    for q in (1, 1.2, 1.5, 1.9, 2.1, 3, 4, 8):
        for _ in range(100):
            w = random_triple(rng)
            worst = max(worst, bounds.estimate(q, w) - bounds.best_ratio_at_prime(q, w).ratio)
    return max(worst, 0.0), "estimate minus best ratio"


@check("bounds", 1e-9)
def uniform_bound_soundness(rng):
    worst = 0.0
    for q in (1, 1.2, 1.5, 1.9, 2.1, 3, 4, 8):
        floor = bounds.solve_uniform_bound(q).uniform_bound
        for _ in range(200):
            worst = max(worst, floor - bounds.estimate(q, random_triple(rng)))
    return max(worst, 0.0), "uniform bound minus estimate"


@check("bounds", 1e-9)
def monotone_blowup(rng):
    worst = 0.0
    for q in (1, 1.5, 3):
        floor = bounds.solve_uniform_bound(q).uniform_bound
        for a, b in ((1, 1), (2, 3), (1.5, 1)):
            res = bounds.blowup_experiment(q, projections.weight_Phi_family(a, b), 8)
            total = 1.0
            for step in res.steps:
                worst = max(worst, total * floor - total * step.ratio)
                total *= step.ratio
    return max(worst, 0.0), "q in {1, 1.5, 3}, N <= 8"


@check("bounds", 0.0)
def branch_continuity(rng):
    bad = 0
    for side in (-1, 1):
        logs = [bounds.solve_uniform_bound(2 + side * 10.0**-k).log_delta for k in range(1, 5)]
        bad += sum(b >= a for a, b in zip(logs, logs[1:]))
        ups = [bounds.solve_uniform_bound(2 + side * 10.0**-k).uniform_bound for k in range(1, 5)]
        bad += sum(b > a or b < 1 for a, b in zip(ups, ups[1:]))
    return float(bad), "log(delta) strictly decreasing as q -> 2"


@check("bounds", 0.0)
def solver_single_crossing(rng):
    qs = (1, 1.1, 1.5, 1.9, 1.99, 2.01, 2.1, 3, 5, 10, 50)
    return float(sum(bounds.count_sign_changes(q) != 1 for q in qs)), "sign scan at step 1e-4"


@check("bounds", 1e-8)
def direct_matches_product(rng):
    worst = 0.0
    Phi = projections.weight_Phi_family(1, 1)
    for q in (1, 1.5, 3):
        for N in (1, 2, 3):
            a = bounds.blowup_experiment(q, Phi, N, "product").total_ratio
            b = bounds.blowup_experiment(q, Phi, N, "direct").total_ratio
            worst = max(worst, abs(a - b) / a)
    return worst, "relative, N <= 3"


def run_checks(seed: int = 0, tol: float | None = None, only=None) -> list[CheckResult]:
    """Run every registered check; ``tol`` overrides all tolerances."""
    results = []
    for index, c in enumerate(_CHECKS):
        if only and c.name not in only:
            continue
        rng = np.random.default_rng([seed, index])
        start = time.perf_counter()
        try:
            deviation, detail = c.run(rng)
            deviation = float(deviation)
        except Exception as exc:  # a crash is a logic failure, reported not raised
            deviation, detail = math.inf, f"{type(exc).__name__}: {exc}"
        elapsed = time.perf_counter() - start
        limit = c.tolerance if tol is None else tol
        passed = deviation <= limit
        failure = None
        if not passed:
            failure = "tolerance" if deviation <= c.tolerance else "logic"
        results.append(
            CheckResult(c.name, c.module, passed, deviation, limit, c.tolerance, failure, detail, elapsed)
        )
    return results


def report(results: list[CheckResult], timings: bool = False) -> dict:
    rows = []
    for r in results:
        row = asdict(r)
        if not timings:
            row.pop("seconds")
        if not math.isfinite(row["deviation"]):
            row["deviation"] = str(row["deviation"])
        rows.append(row)
    return {
        "passed": all(r.passed for r in results),
        "failures": sum(not r.passed for r in results),
        "checks": rows,
    }
