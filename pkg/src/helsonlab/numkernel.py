"""Integer and multiplicative-function machinery.

Everything here is a pure function of its arguments.  Factorizations are
cached because the projection code asks for the same small integers over
and over again.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Iterator

PairFunction = Callable[[int, int], complex]
ArithmeticFunction = Callable[[int], complex]

#: default absolute tolerance for identities between real-valued functions
MULT_TOL = 1e-10


@dataclass(frozen=True)
class Factorization:
    """Prime factorization ``n = prod p**e`` with primes ascending."""

    factors: tuple[tuple[int, int], ...]

    def __post_init__(self):
        primes = [p for p, _ in self.factors]
        if any(e < 1 for _, e in self.factors):
            raise ValueError("exponents must be positive")
        if any(a >= b for a, b in zip(primes, primes[1:])):
            raise ValueError("primes must be distinct and ascending")

    def __iter__(self) -> Iterator[tuple[int, int]]:
        return iter(self.factors)

    def __len__(self) -> int:
        return len(self.factors)

    @property
    def value(self) -> int:
        out = 1
        for p, e in self.factors:
            out *= p**e
        return out

    def valuation(self, p: int) -> int:
        for prime, e in self.factors:
            if prime == p:
                return e
        return 0

    def as_dict(self) -> dict[int, int]:
        return dict(self.factors)


def _check_positive_int(n, name="n"):
    if isinstance(n, bool) or not isinstance(n, int):
        raise TypeError(f"{name} must be an int, got {type(n).__name__}")
    if n < 1:
        raise ValueError(f"{name} must be >= 1, got {n}")


@lru_cache(maxsize=1 << 17)
def _factor_tuple(n: int) -> tuple[tuple[int, int], ...]:
    factors = []
    e = 0
    while n % 2 == 0:
        n //= 2
        e += 1
    if e:
        factors.append((2, e))
    f = 3
    while f * f <= n:
        if n % f == 0:
            e = 0
            while n % f == 0:
                n //= f
                e += 1
            factors.append((f, e))
        f += 2
    if n > 1:
        factors.append((n, 1))
    return tuple(factors)


def factorize(n: int) -> Factorization:
    """Factor ``n >= 1`` by trial division.

    >>> factorize(12).factors
    ((2, 2), (3, 1))
    >>> factorize(1).factors
    ()
    """
    _check_positive_int(n)
    return Factorization(_factor_tuple(n))


def is_prime(n: int) -> bool:
    return n >= 2 and _factor_tuple(n) == ((n, 1),)


def first_primes(count: int) -> list[int]:
    """The first ``count`` primes in ascending order."""
    primes: list[int] = []
    candidate = 2
    while len(primes) < count:
        if all(candidate % p for p in primes if p * p <= candidate):
            primes.append(candidate)
        candidate += 1
    return primes


def valuation(n: int, p: int) -> int:
    """Exponent of the prime ``p`` in ``n``."""
    _check_positive_int(n)
    e = 0
    while n % p == 0:
        n //= p
        e += 1
    return e


@lru_cache(maxsize=1 << 15)
def _divisor_pairs(k: int) -> tuple[tuple[int, int], ...]:
    small, large = [], []
    m = 1
    while m * m <= k:
        if k % m == 0:
            small.append((m, k // m))
            if m * m != k:
                large.append((k // m, m))
        m += 1
    return tuple(small + large[::-1])


def divisor_pairs(k: int) -> list[tuple[int, int]]:
    """All ordered pairs ``(m, n)`` with ``m * n == k``, sorted by ``m``.

    >>> divisor_pairs(6)
    [(1, 6), (2, 3), (3, 2), (6, 1)]
    """
    _check_positive_int(k, "k")
    return list(_divisor_pairs(k))


def _check_alpha(alpha):
    if not alpha >= 1:
        raise ValueError(f"alpha must be >= 1, got {alpha}")


def c_alpha(alpha: float, j: int) -> float:
    """Taylor coefficient of ``(1 - z)**(-alpha)`` at ``z**j``.

    Equal to ``binom(j + alpha - 1, j)``, evaluated as the rising-factorial
    product ``prod_{i=1..j} (alpha + i - 1) / i``.  Integer ``alpha`` goes
    through :func:`math.comb` and is exact as long as the result fits a
    double.
    """
    _check_alpha(alpha)
    if j < 0:
        raise ValueError(f"j must be >= 0, got {j}")
    if float(alpha).is_integer():
        return float(math.comb(j + int(alpha) - 1, j))
    out = 1.0
    for i in range(1, j + 1):
        out *= (alpha + i - 1) / i
    return out


def c_alpha_exact(alpha: int, j: int) -> Fraction:
    """Exact rational version of :func:`c_alpha` for integer ``alpha``."""
    if not float(alpha).is_integer():
        raise ValueError("exact coefficients need an integer alpha")
    _check_alpha(alpha)
    return Fraction(math.comb(j + int(alpha) - 1, j))


def d_alpha(alpha: float, n: int) -> float:
    """Generalized divisor function: coefficients of ``zeta(s)**alpha``.

    Built multiplicatively from ``d_alpha(p**j) = c_alpha(alpha, j)``.
    """
    _check_alpha(alpha)
    _check_positive_int(n)
    out = 1.0
    for _, e in _factor_tuple(n):
        out *= c_alpha(alpha, e)
    return out


def d_alpha_exact(alpha: int, n: int) -> Fraction:
    _check_positive_int(n)
    out = Fraction(1)
    for _, e in _factor_tuple(n):
        out *= c_alpha_exact(alpha, e)
    return out


def divisor_count(n: int) -> int:
    return len(divisor_pairs(n))


def check_multiplicative_pair(f: PairFunction, bound: int, tol: float = MULT_TOL) -> bool:
    """Scan ``[1, bound]**2`` for a violation of pair multiplicativity.

    Checks ``f(1, 1) == 1`` and ``f(m1*n1, m2*n2) == f(m1, m2) * f(n1, n2)``
    whenever ``gcd(m1*m2, n1*n2) == 1`` and both arguments on the left lie
    within ``bound``.
    """
    return find_multiplicativity_violation(f, bound, tol) is None


def find_multiplicativity_violation(f: PairFunction, bound: int, tol: float = MULT_TOL):
    """Return the first offending ``(m1, m2, n1, n2)`` or ``None``.

    ``(1, 1, 1, 1)`` is reported when ``f(1, 1) != 1``.
    """
    if abs(f(1, 1) - 1) > tol:
        return (1, 1, 1, 1)
    for a in range(1, bound + 1):
        for b in range(1, bound + 1):
            whole = f(a, b)
            for m1, n1 in _divisor_pairs(a):
                for m2, n2 in _divisor_pairs(b):
                    if math.gcd(m1 * m2, n1 * n2) != 1:
                        continue
                    if abs(whole - f(m1, m2) * f(n1, n2)) > tol:
                        return (m1, m2, n1, n2)
    return None


def pair_function_from_tables(tables: dict[int, "object"]) -> PairFunction:
    """Multiplicative pair function ``f(m, n) = prod_p T_p[nu_p(m), nu_p(n)]``.

    ``tables`` maps primes to square arrays with ``T_p[0, 0] == 1``.  A prime
    without a table, or an exponent past the table size, makes the value 0.
    """
    local = {int(p): [[complex(v) for v in row] for row in T] for p, T in tables.items()}

    def f(m, n):
        fm = dict(_factor_tuple(m))
        fn = dict(_factor_tuple(n))
        out = 1
        for p in fm.keys() | fn.keys():
            T = local.get(p)
            i, j = fm.get(p, 0), fn.get(p, 0)
            if T is None or i >= len(T) or j >= len(T):
                return 0j
            out *= T[i][j]
        return out

    return f


def convolve(f: PairFunction, k: int) -> complex:
    """``F(k) = sum_{m n = k} f(m, n)``; multiplicative whenever ``f`` is."""
    _check_positive_int(k, "k")
    return sum(f(m, n) for m, n in _divisor_pairs(k))


def is_multiplicative(F: ArithmeticFunction, bound: int, tol: float = MULT_TOL) -> bool:
    """Check ``F(1) == 1`` and ``F(kl) == F(k) F(l)`` for coprime ``k, l <= bound``."""
    if abs(F(1) - 1) > tol:
        return False
    values = {}

    def cached(n):
        if n not in values:
            values[n] = F(n)
        return values[n]

    for k in range(2, bound + 1):
        for l in range(k + 1, bound + 1):
            if math.gcd(k, l) == 1 and abs(cached(k * l) - cached(k) * cached(l)) > tol:
                return False
    return True
