"""Averaging projections onto Hankel and Helson matrices.

A finite matrix is treated as a finitely supported infinite matrix.  The
projections therefore always use the full fiber weight (``1/(k+1)`` on an
anti-diagonal, ``1/d(k)`` on the divisor pairs of ``k``) and only the stored
entries contribute to the sum.  With that convention every norm computed
from :func:`projection_output_matrix` is the exact norm of the infinite
projected matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Iterable, Mapping

import numpy as np

from helsonlab.numkernel import (
    _divisor_pairs,
    c_alpha,
    c_alpha_exact,
    d_alpha,
    d_alpha_exact,
)
from helsonlab.schatten import (
    ADDITIVE,
    MULTIPLICATIVE,
    ComplexMatrix,
    IndexOriginError,
    SymbolSequence,
    _check_dim,
    hankel_truncation,
    helson_truncation,
)

WEIGHT_TOL = 1e-10


class WeightError(ValueError):
    """A weight fails its normalization (sum over each fiber equals 1)."""


@dataclass(eq=False)
class WeightFunction:
    """Non-negative weight on index pairs.

    ``kind`` is ``"additive"`` (pairs in N0 x N0, fibers ``i + j = k``) or
    ``"multiplicative"`` (pairs in N x N, fibers ``m * n = k``).  ``exact``,
    when present, returns :class:`~fractions.Fraction` values so that
    integer-parameter families can be validated without rounding.
    """

    kind: str
    evaluator: Callable[[int, int], float]
    family: str = "custom"
    alpha: float | None = None
    beta: float | None = None
    exact: Callable[[int, int], Fraction] | None = None
    _validated: set = field(default_factory=set, repr=False)

    def __post_init__(self):
        if self.kind not in (ADDITIVE, MULTIPLICATIVE):
            raise ValueError(f"unknown weight kind {self.kind!r}")

    def __call__(self, i: int, j: int) -> float:
        return self.evaluator(i, j)

    def fiber(self, k: int) -> list[tuple[int, int]]:
        if self.kind == ADDITIVE:
            return [(i, k - i) for i in range(k + 1)]
        return list(_divisor_pairs(k))


@dataclass
class WeightReport:
    passed: bool
    max_deviation: float
    failing: list[int]
    negative: list[tuple[int, int]]
    checked: int


def _fiber_deviation(w: WeightFunction, k: int, exact: bool) -> tuple[float, bool]:
    pairs = w.fiber(k)
    if exact and w.exact is not None:
        values = [w.exact(*ij) for ij in pairs]
        total = sum(values, Fraction(0))
        return float(abs(total - 1)), any(v < 0 for v in values)
    values = [w(*ij) for ij in pairs]
    return abs(math.fsum(values) - 1.0), any(v < 0 for v in values)


def validate_weight(w: WeightFunction, K, tol: float = WEIGHT_TOL, exact: bool = False) -> WeightReport:
    """Check the fiber sums of ``w`` for every ``k`` up to ``K``.

    ``K`` may also be an explicit iterable of fibers to check.  Additive
    weights start at ``k = 0``, multiplicative ones at ``k = 1``.  With
    ``exact=True`` the rational evaluator is used when the weight has one,
    and only an exact sum of 1 passes.
    """
    if isinstance(K, int):
        start = 0 if w.kind == ADDITIVE else 1
        ks: Iterable[int] = range(start, K + 1)
    else:
        ks = sorted(set(K))
    failing, negative = [], []
    worst = 0.0
    count = 0
    for k in ks:
        dev, neg = _fiber_deviation(w, k, exact)
        count += 1
        worst = max(worst, dev)
        ok = dev == 0 if (exact and w.exact is not None) else dev <= tol
        if not ok:
            failing.append(k)
        if neg:
            negative.append(k)
    return WeightReport(not failing and not negative, worst, failing, negative, count)


def _ensure_valid(w: WeightFunction, ks: Iterable[int], tol: float = WEIGHT_TOL):
    todo = [k for k in set(ks) if k not in w._validated]
    if not todo:
        return
    report = validate_weight(w, todo, tol)
    if not report.passed:
        bad = (report.failing or report.negative)[:5]
        raise WeightError(
            f"weight is not an averaging weight: fibers {bad} deviate by up to {report.max_deviation:.3g}"
        )
    w._validated.update(todo)


def uniform_weight() -> WeightFunction:
    """``phi(i, j) = 1/(i + j + 1)``: the plain averaging projection."""
    return WeightFunction(
        ADDITIVE,
        lambda i, j: 1.0 / (i + j + 1),
        family="uniform",
        alpha=1,
        beta=1,
        exact=lambda i, j: Fraction(1, i + j + 1),
    )


def uniform_helson_weight() -> WeightFunction:
    """``Phi(m, n) = 1/d(mn)``."""
    return weight_Phi_family(1, 1)


def _check_params(alpha, beta):
    if not (alpha >= 1 and beta >= 1):
        raise ValueError(f"alpha and beta must be >= 1, got {alpha}, {beta}")


def _integral(*xs):
    return all(float(x).is_integer() for x in xs)


def weight_phi_family(alpha: float, beta: float) -> WeightFunction:
    """``phi(i, j) = c_alpha(i) c_beta(j) / c_{alpha+beta}(i + j)``."""
    _check_params(alpha, beta)
    ab = alpha + beta

    def phi(i, j):
        return c_alpha(alpha, i) * c_alpha(beta, j) / c_alpha(ab, i + j)

    exact = None
    if _integral(alpha, beta):
        a, b = int(alpha), int(beta)

        def exact(i, j):
            return c_alpha_exact(a, i) * c_alpha_exact(b, j) / c_alpha_exact(a + b, i + j)

    family = "uniform" if alpha == 1 and beta == 1 else "alpha_beta"
    return WeightFunction(ADDITIVE, phi, family, alpha, beta, exact)


def weight_Phi_family(alpha: float, beta: float) -> WeightFunction:
    """``Phi(m, n) = d_alpha(m) d_beta(n) / d_{alpha+beta}(mn)``."""
    _check_params(alpha, beta)
    ab = alpha + beta

    def Phi(m, n):
        return d_alpha(alpha, m) * d_alpha(beta, n) / d_alpha(ab, m * n)

    exact = None
    if _integral(alpha, beta):
        a, b = int(alpha), int(beta)

        def exact(m, n):
            return d_alpha_exact(a, m) * d_alpha_exact(b, n) / d_alpha_exact(a + b, m * n)

    family = "uniform" if alpha == 1 and beta == 1 else "alpha_beta"
    return WeightFunction(MULTIPLICATIVE, Phi, family, alpha, beta, exact)


def local_weight(Phi: WeightFunction, p: int) -> WeightFunction:
    """Additive weight ``phi_p(i, j) = Phi(p**i, p**j)`` seen along one prime."""
    if Phi.kind != MULTIPLICATIVE:
        raise IndexOriginError("local_weight needs a multiplicative weight")
    exact = None
    if Phi.exact is not None:
        def exact(i, j):
            return Phi.exact(p**i, p**j)
    return WeightFunction(
        ADDITIVE, lambda i, j: Phi(p**i, p**j), Phi.family, Phi.alpha, Phi.beta, exact
    )


def weight_from_table(kind: str, table: Mapping[tuple[int, int], float], bound: int) -> WeightFunction:
    """Explicit weight values on fibers ``k <= bound``; other pairs read 0.

    Pairs beyond ``bound`` are rejected at evaluation, so projections of
    matrices reaching past the table fail loudly.
    """
    values = {(int(i), int(j)): float(v) for (i, j), v in table.items()}

    def lookup(i, j):
        k = i + j if kind == ADDITIVE else i * j
        if k > bound:
            raise WeightError(f"weight table only covers fibers k <= {bound}, asked for ({i}, {j})")
        return values.get((i, j), 0.0)

    return WeightFunction(kind, lookup, "custom")


def weight_from_config(spec: Mapping[str, Any]) -> WeightFunction:
    """Build a weight from ``{kind, family, alpha, beta}`` or ``{kind, table, bound}``.

    ``table`` is a list of ``[i, j, value]`` triples.
    """
    kind = spec.get("kind", ADDITIVE)
    if kind not in (ADDITIVE, MULTIPLICATIVE):
        raise ValueError(f"unknown weight kind {kind!r}")
    if "table" in spec:
        table = {(i, j): v for i, j, v in spec["table"]}
        return weight_from_table(kind, table, int(spec["bound"]))
    family = spec.get("family", "uniform")
    if family == "uniform":
        alpha = beta = 1
    elif family == "alpha_beta":
        alpha, beta = float(spec["alpha"]), float(spec["beta"])
    else:
        raise ValueError(f"unknown weight family {family!r}")
    return weight_phi_family(alpha, beta) if kind == ADDITIVE else weight_Phi_family(alpha, beta)


# -- projections ---------------------------------------------------------------

def _require_origin(A: ComplexMatrix, origin: int):
    if A.origin != origin:
        raise IndexOriginError(f"expected index origin {origin}, got {A.origin}")


def hankel_average(A: ComplexMatrix) -> SymbolSequence:
    """``gamma_k = (1/(k+1)) sum_{i+j=k} a_ij`` over the zero-padded matrix."""
    _require_origin(A, 0)
    sums: dict[int, complex] = {}
    for i, j, v in A.nonzero():
        sums[i + j] = sums.get(i + j, 0j) + v
    return SymbolSequence(ADDITIVE, {k: s / (k + 1) for k, s in sums.items()})


def hankel_weighted_average(A: ComplexMatrix, phi: WeightFunction) -> SymbolSequence:
    """``gamma_k = sum_{i+j=k} phi(i, j) a_ij`` over the zero-padded matrix.

    Raises :class:`WeightError` if ``phi`` fails its normalization on any
    anti-diagonal the matrix reaches.
    """
    _require_origin(A, 0)
    if phi.kind != ADDITIVE:
        raise IndexOriginError("Hankel projection needs an additive weight")
    _ensure_valid(phi, range(A.rows + A.cols - 1))
    sums: dict[int, complex] = {}
    for i, j, v in A.nonzero():
        sums[i + j] = sums.get(i + j, 0j) + phi(i, j) * v
    return SymbolSequence(ADDITIVE, sums)


def helson_average(A: ComplexMatrix) -> SymbolSequence:
    """``rho_k = (1/d(k)) sum_{mn=k} a_mn`` over the zero-padded matrix."""
    _require_origin(A, 1)
    sums: dict[int, complex] = {}
    for m, n, v in A.nonzero():
        sums[m * n] = sums.get(m * n, 0j) + v
    return SymbolSequence(MULTIPLICATIVE, {k: s / len(_divisor_pairs(k)) for k, s in sums.items()})


def helson_weighted_sum(entries: Iterable[tuple[int, int, complex]], Phi: WeightFunction) -> SymbolSequence:
    """Weighted Helson projection of a sparse matrix given as ``(m, n, value)`` triples.

    Only fibers ``k = mn`` that receive a nonzero entry are validated; the
    projection never reads the weight anywhere else.
    """
    if Phi.kind != MULTIPLICATIVE:
        raise IndexOriginError("Helson projection needs a multiplicative weight")
    entries = list(entries)
    _ensure_valid(Phi, (m * n for m, n, _ in entries))
    sums: dict[int, complex] = {}
    for m, n, v in entries:
        sums[m * n] = sums.get(m * n, 0j) + Phi(m, n) * v
    return SymbolSequence(MULTIPLICATIVE, sums)


def helson_weighted_average(A: ComplexMatrix, Phi: WeightFunction) -> SymbolSequence:
    """``rho_k = sum_{mn=k} Phi(m, n) a_mn`` over the zero-padded matrix."""
    _require_origin(A, 1)
    return helson_weighted_sum(A.nonzero(), Phi)


def projection_output_matrix(symbol: SymbolSequence) -> ComplexMatrix:
    """Smallest square truncation holding every nonzero entry of ``H_gamma`` / ``M_rho``.

    An additive symbol supported on ``k <= S`` needs ``(S+1) x (S+1)``; a
    multiplicative one needs ``S x S``.  The zero symbol gives a 1x1 zero.
    """
    S = symbol.support_bound
    if symbol.kind == ADDITIVE:
        size = 1 if S is None else S + 1
        _check_dim(size)
        return hankel_truncation(symbol, size)
    size = 1 if S is None else S
    _check_dim(size)
    return helson_truncation(symbol, size)


def project(A: ComplexMatrix, weight: WeightFunction | None = None) -> SymbolSequence:
    """Dispatch on the matrix origin; ``weight=None`` means plain averaging."""
    if A.origin == 0:
        return hankel_average(A) if weight is None else hankel_weighted_average(A, weight)
    return helson_average(A) if weight is None else helson_weighted_average(A, weight)


def helson_symbol_matrix(rho: SymbolSequence, indices) -> ComplexMatrix:
    """``(rho_{mn})`` on an explicit multiplicative index list, re-indexed from 0."""
    idx = np.asarray(indices, dtype=np.int64)
    prod = idx[:, None] * idx[None, :]
    out = np.zeros(prod.shape, dtype=complex)
    if rho.values:
        keys = np.fromiter(rho.values, dtype=np.int64)
        vals = np.fromiter(rho.values.values(), dtype=complex)
        pos = np.minimum(np.searchsorted(keys, prod), len(keys) - 1)
        hit = keys[pos] == prod
        out[hit] = vals[pos[hit]]
    return ComplexMatrix(out, 0)
