"""Lower bounds for weighted averaging projections on S_q.

The whole construction lives on 3x3 matrices::

    A(t) = [[1,0,0],[0,t,0],[0,0,0]]    B(t) = [[1,0,t],[0,0,0],[0,0,0]]
    C(t) = [[1,0,t],[0,0,0],[t,0,0]]    D(t) = [[1,0,t],[0,t,0],[t,0,0]]

Any averaging weight maps each of A, B, B^T and C onto some D(s), and only
three weight values matter: ``phi0 = phi(0,2)``, ``phi1 = phi(1,1)`` and
``phi2 = phi(2,0)``.  Comparing Schatten norms before and after gives a
ratio above 1 for every weight when ``q != 2``.  Tensoring the per-prime
counterexamples makes the Helson projection's norm grow geometrically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from helsonlab.numkernel import _factor_tuple, first_primes
from helsonlab.projections import (
    WeightFunction,
    helson_symbol_matrix,
    helson_weighted_sum,
    local_weight,
)
from helsonlab.schatten import (
    ADDITIVE,
    ComplexMatrix,
    LocalBlockFamily,
    MatrixSizeError,
    SymbolSequence,
    lq_norm,
    max_dim,
    multiplicative_entries,
    schatten_norm,
)

TAGS = ("A", "B", "BT", "C", "D")
SEARCH_TAGS = ("A", "B", "BT", "C")
DEFAULT_T_GRID = np.logspace(-3, 3, 64)
LARGE_T_PROBES = (1e6, 1e9, 1e12, 1e15)
SCAN_STEP = 1e-4


def _check_tag(tag):
    if tag not in TAGS:
        raise ValueError(f"unknown test matrix tag {tag!r}; expected one of {TAGS}")


def test_matrix(tag: str, t: float) -> ComplexMatrix:
    """One of the 3x3 matrices A, B, B^T ("BT"), C, D at parameter ``t >= 0``."""
    _check_tag(tag)
    if t < 0:
        raise ValueError("t must be non-negative")
    M = np.zeros((3, 3))
    M[0, 0] = 1.0
    if tag == "A":
        M[1, 1] = t
    if tag in ("B", "C", "D"):
        M[0, 2] = t
    if tag in ("BT", "C", "D"):
        M[2, 0] = t
    if tag == "D":
        M[1, 1] = t
    return ComplexMatrix(M, 0)


test_matrix.__test__ = False  # keep pytest from collecting it


def _c_pair(t):
    """Nonzero singular values of C(t); the smaller one written without cancellation."""
    t = np.asarray(t, dtype=float)
    r = np.sqrt(0.25 + t * t)
    big = 0.5 + r
    return big, t * t / big


def _spectra(tag: str, t) -> np.ndarray:
    """Closed-form full spectra (length 3, descending) for an array of ``t``."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    zeros = np.zeros_like(t)
    if tag == "A":
        cols = [np.maximum(1.0, t), np.minimum(1.0, t), zeros]
    elif tag in ("B", "BT"):
        cols = [np.hypot(1.0, t), zeros, zeros]
    elif tag == "C":
        big, small = _c_pair(t)
        cols = [big, small, zeros]
    else:
        big, small = _c_pair(t)
        cols = [big, small, t]
    out = np.stack(cols, axis=1)
    return -np.sort(-out, axis=1)


def closed_form_spectrum(tag: str, t: float) -> np.ndarray:
    """Singular values of ``test_matrix(tag, t)`` from their closed forms.

    Padded with zeros to the full length 3 so it lines up with a numerical SVD.
    """
    _check_tag(tag)
    if t < 0:
        raise ValueError("t must be non-negative")
    return _spectra(tag, t)[0]


def _lq_rows(S: np.ndarray, q: float) -> np.ndarray:
    top = S.max(axis=1)
    safe = np.where(top > 0, top, 1.0)
    return top * np.sum((S / safe[:, None]) ** q, axis=1) ** (1.0 / q)


@dataclass(frozen=True)
class WeightTriple:
    """The three weight values ``phi(0,2), phi(1,1), phi(2,0)`` on the second anti-diagonal."""

    phi0: float
    phi1: float
    phi2: float

    def __post_init__(self):
        if min(self.phi0, self.phi1, self.phi2) < 0:
            raise ValueError(f"weights must be non-negative: {self}")
        if abs(self.phi0 + self.phi1 + self.phi2 - 1) > 1e-12:
            raise ValueError(f"weights must sum to 1: {self}")

    @classmethod
    def from_weight(cls, phi: WeightFunction) -> "WeightTriple":
        if phi.kind != ADDITIVE:
            raise ValueError("need an additive weight")
        return cls(float(phi(0, 2)), float(phi(1, 1)), float(phi(2, 0)))

    def as_weight(self) -> WeightFunction:
        """An admissible weight carrying this triple; every other fiber is uniform."""
        table = {(0, 2): self.phi0, (1, 1): self.phi1, (2, 0): self.phi2}

        def phi(i, j):
            if i + j == 2:
                return table[(i, j)]
            return 1.0 / (i + j + 1)

        return WeightFunction(ADDITIVE, phi, "custom")

    def shift(self, tag: str) -> float:
        """Factor ``s / t`` such that the projection sends ``tag(t)`` to ``D(s)``."""
        _check_tag(tag)
        return {
            "A": self.phi1,
            "B": self.phi0,
            "BT": self.phi2,
            "C": self.phi0 + self.phi2,
            "D": self.phi0 + self.phi1 + self.phi2,
        }[tag]


def projected_symbol_of_test(tag: str, t: float, w: WeightTriple) -> SymbolSequence:
    """Symbol of the projected test matrix, always of the form ``{0: 1, 2: s}``."""
    return SymbolSequence(ADDITIVE, {0: 1.0, 2: w.shift(tag) * t})


def ratio_curve(q: float, w: WeightTriple, tag: str, t) -> np.ndarray:
    """``||P tag(t)||_q / ||tag(t)||_q`` for an array of ``t``, from closed-form spectra."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    num = _lq_rows(_spectra("D", w.shift(tag) * t), q)
    den = _lq_rows(_spectra(tag, t), q)
    return num / den


def _check_branch(q, below):
    if below and not (1 <= q < 2):
        raise ValueError(f"q = {q} outside [1, 2)")
    if not below and not (2 < q < math.inf):
        raise ValueError(f"q = {q} outside (2, inf)")


def _b_estimate(x: float, q: float) -> float:
    return (1 + x ** (2 * q / (2 - q))) ** ((2 - q) / (2 * q))


def _a_estimate_above(x: float, q: float) -> float:
    return (1 + x ** (2 * q / (q - 2))) ** ((q - 2) / (2 * q))


def estimate_below2(q: float, w: WeightTriple) -> float:
    """Certified lower bound on ``||P_phi||_{S_q}`` for ``1 <= q < 2``.

    The larger of the large-``t`` limit from A(t), ``3**(1/q) * phi1``, and
    the B(t) / B(t)^T bounds evaluated at ``t = phi**(q/(2-q))``.
    """
    _check_branch(q, below=True)
    return max(3 ** (1 / q) * w.phi1, _b_estimate(w.phi0, q), _b_estimate(w.phi2, q))


def estimate_above2(q: float, w: WeightTriple) -> float:
    """Certified lower bound on ``||P_phi||_{S_q}`` for ``q > 2``: C(t) limit vs. A(t) at ``t = phi1**(2/(q-2))``."""
    _check_branch(q, below=False)
    return max(1.5 ** (1 / q) * (w.phi0 + w.phi2), _a_estimate_above(w.phi1, q))


def estimate(q: float, w: WeightTriple) -> float:
    return estimate_below2(q, w) if q < 2 else estimate_above2(q, w)


@dataclass(frozen=True)
class LowerBoundResult:
    """Solution of the branch equation.

    ``delta`` and ``log_delta`` are computed directly rather than from
    ``uniform_bound - 1``: close to ``q = 2`` the excess drops far below
    double precision (``uniform_bound`` rounds to exactly 1.0 already at
    ``q = 1.9``) while its logarithm stays perfectly representable.
    """

    q: float
    branch: str
    x_q: float
    uniform_bound: float
    residual: float
    delta: float
    log_delta: float


def _log_excess(x: float, e: float) -> float:
    """``log((1 + x**e)**(1/e) - 1)`` without underflow."""
    if x <= 0:
        return -math.inf
    L = e * math.log(x)
    if L < -30:
        return L - math.log(e)
    return math.log(math.expm1(math.log1p(math.exp(L)) / e))


def _branch_sides(q: float):
    """``(lhs, rhs)`` of the equation whose crossing point gives ``x_q``."""
    if q < 2:
        return (lambda x: 3 ** (1 / q) * (1 - 2 * x)), (lambda x: _b_estimate(x, q))
    return (lambda x: 1.5 ** (1 / q) * (1 - x)), (lambda x: _a_estimate_above(x, q))


def count_sign_changes(q: float, step: float = SCAN_STEP) -> int:
    """Number of sign changes of ``lhs - rhs`` on a uniform grid over ``[0, 1]``."""
    if q < 2:
        e = 2 * q / (2 - q)
        xs = np.linspace(0.0, 1.0, int(round(1 / step)) + 1)
        g = 3 ** (1 / q) * (1 - 2 * xs) - (1 + xs**e) ** (1 / e)
    else:
        e = 2 * q / (q - 2)
        xs = np.linspace(0.0, 1.0, int(round(1 / step)) + 1)
        g = 1.5 ** (1 / q) * (1 - xs) - (1 + xs**e) ** (1 / e)
    signs = np.sign(g)
    signs = signs[signs != 0]
    return int(np.count_nonzero(signs[1:] != signs[:-1]))


def solve_uniform_bound(q: float, tolerance: float = 1e-12) -> LowerBoundResult:
    """The weight-independent bound ``1 + delta_q`` and the crossing point ``x_q``.

    Bisection on ``[0, 1]`` after a sign scan confirms that the two sides of
    the branch equation cross exactly once.  Raises for ``q = 2``, where both
    exponents degenerate (the projection is an orthogonal one there).
    """
    if not (1 <= q < math.inf):
        raise ValueError(f"q must lie in [1, inf), got {q}")
    if q == 2:
        raise ValueError("q = 2 has no lower bound above 1: the projection is orthogonal on S_2")
    changes = count_sign_changes(q)
    if changes != 1:
        raise ArithmeticError(f"expected one crossing for q = {q}, found {changes}")
    lhs, rhs = _branch_sides(q)

    def g(x):
        return lhs(x) - rhs(x)

    lo, hi = 0.0, 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if g(mid) > 0:
            lo = mid
        else:
            hi = mid
    x = lo if abs(g(lo)) <= abs(g(hi)) else hi
    residual = abs(g(x))
    if residual > tolerance:
        raise ArithmeticError(f"bisection residual {residual:.3g} above tolerance {tolerance:.3g}")
    e = 2 * q / abs(2 - q)
    log_delta = _log_excess(x, e)
    return LowerBoundResult(
        q, "below2" if q < 2 else "above2", x, rhs(x), residual, math.exp(log_delta), log_delta
    )


@dataclass(frozen=True)
class RatioChoice:
    tag: str
    t: float
    ratio: float


def candidate_ts(q: float, w: WeightTriple, t_grid=None) -> np.ndarray:
    """Search grid plus the optimizers used by the estimates and large-``t`` probes."""
    grid = DEFAULT_T_GRID if t_grid is None else np.asarray(t_grid, dtype=float)
    extra = list(LARGE_T_PROBES)
    if q < 2:
        extra += [w.phi0 ** (q / (2 - q)), w.phi2 ** (q / (2 - q))]
    else:
        extra += [w.phi1 ** (2 / (q - 2))]
    return np.unique(np.concatenate([grid, extra]))


def best_ratio_at_prime(q: float, w: WeightTriple, t_grid=None) -> RatioChoice:
    """Best ``||P_phi X||_q / ||X||_q`` over ``X`` in A, B, B^T, C and the ``t`` candidates.

    The result is at least :func:`estimate` for the same triple, hence at
    least ``solve_uniform_bound(q).uniform_bound``.
    """
    if q == 2 or not (1 <= q < math.inf):
        raise ValueError(f"q must lie in [1, inf) minus {{2}}, got {q}")
    ts = candidate_ts(q, w, t_grid)
    best = RatioChoice("D", 0.0, 1.0)
    for tag in SEARCH_TAGS:
        r = ratio_curve(q, w, tag, ts)
        i = int(np.argmax(r))
        if r[i] > best.ratio:
            best = RatioChoice(tag, float(ts[i]), float(r[i]))
    return best


@dataclass(frozen=True)
class PrimeStep:
    prime: int
    weights: WeightTriple
    tag: str
    t: float
    ratio: float


@dataclass
class BlowupResult:
    q: float
    N: int
    mode: str
    steps: list[PrimeStep] = field(default_factory=list)
    total_ratio: float = 1.0
    floor: float = 1.0
    input_norm: float | None = None
    output_norm: float | None = None


def exponent_index_set(primes: list[int], depth: int = 3) -> list[int]:
    """All ``prod p**e`` with ``0 <= e < depth``, ascending."""
    indices = [1]
    for p in primes:
        indices = [n * p**e for n in indices for e in range(depth)]
    return sorted(indices)


def direct_ratio(q: float, Phi: WeightFunction, steps: list[PrimeStep]) -> tuple[float, float]:
    """Norms of the assembled tensor matrix and of its Helson projection.

    The matrix lives on the integers whose exponents at the first primes
    are at most 2.  Every local block is supported on anti-diagonals 0 and
    2, so the projected Helson matrix is supported on the same index set;
    this is asserted rather than assumed.
    """
    primes = [s.prime for s in steps]
    dim = 3 ** len(primes)
    if dim > max_dim():
        raise MatrixSizeError(f"direct mode needs a {dim}x{dim} matrix, cap is {max_dim()}")
    family = LocalBlockFamily(tuple((s.prime, test_matrix(s.tag, s.t)) for s in steps))
    idx = exponent_index_set(primes)
    A = multiplicative_entries(family, idx, idx)
    rows, cols = np.nonzero(A)
    rho = helson_weighted_sum(
        ((idx[r], idx[c], A[r, c]) for r, c in zip(rows, cols)), Phi
    )
    allowed = set(primes)
    for k in rho.values:
        for p, e in _factor_tuple(k):
            if p not in allowed or e > 2:
                raise ArithmeticError(f"projected symbol reaches index {k} outside the block index set")
    M = helson_symbol_matrix(rho, idx)
    return schatten_norm(A, q), schatten_norm(M, q)


def blowup_experiment(
    q: float, Phi: WeightFunction, N: int, mode: str = "product", t_grid=None
) -> BlowupResult:
    """Tensor the best per-prime counterexamples over the first ``N`` primes.

    ``product`` mode multiplies per-prime ratios (the Schatten norm is a
    cross norm); ``direct`` mode builds the ``3**N x 3**N`` matrix and its
    projection and takes both norms numerically.
    """
    if mode not in ("product", "direct"):
        raise ValueError(f"unknown mode {mode!r}")
    if N < 0:
        raise ValueError("N must be >= 0")
    bound = solve_uniform_bound(q)
    result = BlowupResult(q, N, mode, floor=bound.uniform_bound**N)
    total = 1.0
    for p in first_primes(N):
        w = WeightTriple.from_weight(local_weight(Phi, p))
        choice = best_ratio_at_prime(q, w, t_grid)
        result.steps.append(PrimeStep(p, w, choice.tag, choice.t, choice.ratio))
        total *= choice.ratio
    result.total_ratio = total
    if mode == "direct" and N > 0:
        a, pa = direct_ratio(q, Phi, result.steps)
        result.input_norm, result.output_norm = a, pa
        result.total_ratio = pa / a
    return result
