"""Finite truncations of Hankel and Helson matrices and their Schatten norms.

Two index worlds coexist: additive matrices are indexed from 0 (their rows
stand for exponents ``i >= 0``) and multiplicative matrices from 1 (rows stand
for positive integers).  :class:`ComplexMatrix` carries the origin so the two
never get mixed silently.  An infinite matrix with finitely many nonzero
entries is identified with any truncation that contains all of them.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from helsonlab.numkernel import _factor_tuple, is_prime

MAX_DIM_ENV = "HELSONLAB_MAX_DIM"
DEFAULT_MAX_DIM = 4000

ADDITIVE = "additive"
MULTIPLICATIVE = "multiplicative"


class MatrixSizeError(ValueError):
    """A requested matrix would exceed the configured dimension cap."""


class IndexOriginError(ValueError):
    """Operation received a matrix or symbol from the wrong index world."""


class MatrixFormatError(ValueError):
    """Malformed matrix or symbol file."""


def max_dim() -> int:
    """Largest allowed row/column count, overridable via ``HELSONLAB_MAX_DIM``."""
    value = os.environ.get(MAX_DIM_ENV)
    return int(value) if value else DEFAULT_MAX_DIM


def _check_dim(*dims):
    cap = max_dim()
    for d in dims:
        if d > cap:
            raise MatrixSizeError(f"dimension {d} exceeds cap {cap} (set {MAX_DIM_ENV})")


@dataclass(frozen=True, eq=False)
class ComplexMatrix:
    """Dense complex matrix tagged with its index origin (0 or 1)."""

    data: np.ndarray
    origin: int = 0

    def __post_init__(self):
        if self.origin not in (0, 1):
            raise ValueError(f"index origin must be 0 or 1, got {self.origin}")
        arr = np.array(self.data, dtype=complex)
        if arr.ndim != 2 or 0 in arr.shape:
            raise ValueError(f"expected a non-empty 2-d array, got shape {arr.shape}")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @classmethod
    def zeros(cls, rows: int, cols: int, origin: int = 0) -> "ComplexMatrix":
        _check_dim(rows, cols)
        return cls(np.zeros((rows, cols), dtype=complex), origin)

    @classmethod
    def from_entries(cls, rows, cols, entries: Mapping[tuple[int, int], complex], origin=0):
        """Build from ``{(i, j): value}`` with indices in the matrix's own origin."""
        _check_dim(rows, cols)
        arr = np.zeros((rows, cols), dtype=complex)
        for (i, j), v in entries.items():
            if not (origin <= i < rows + origin and origin <= j < cols + origin):
                raise IndexError(f"entry ({i}, {j}) outside {rows}x{cols} origin {origin}")
            arr[i - origin, j - origin] = v
        return cls(arr, origin)

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    def __getitem__(self, index: tuple[int, int]) -> complex:
        i, j = index
        o = self.origin
        if not (o <= i < self.rows + o and o <= j < self.cols + o):
            raise IndexError(f"({i}, {j}) outside matrix with origin {o}")
        return complex(self.data[i - o, j - o])

    def get(self, i: int, j: int) -> complex:
        """Entry in the zero-padded infinite matrix; 0 outside the truncation."""
        o = self.origin
        if o <= i < self.rows + o and o <= j < self.cols + o:
            return complex(self.data[i - o, j - o])
        return 0j

    def nonzero(self) -> Iterable[tuple[int, int, complex]]:
        """Nonzero entries as ``(i, j, value)`` in the matrix's own origin."""
        for i, j in zip(*np.nonzero(self.data)):
            yield int(i) + self.origin, int(j) + self.origin, complex(self.data[i, j])

    @property
    def T(self) -> "ComplexMatrix":
        return ComplexMatrix(self.data.T, self.origin)

    def padded(self, rows: int, cols: int) -> "ComplexMatrix":
        """Same infinite matrix truncated to a larger window."""
        if rows < self.rows or cols < self.cols:
            raise ValueError("padding cannot shrink a matrix")
        _check_dim(rows, cols)
        arr = np.zeros((rows, cols), dtype=complex)
        arr[: self.rows, : self.cols] = self.data
        return ComplexMatrix(arr, self.origin)

    def equals(self, other: "ComplexMatrix", atol: float = 0.0) -> bool:
        """Equality as finitely supported infinite matrices (shape may differ)."""
        if self.origin != other.origin:
            return False
        r, c = max(self.rows, other.rows), max(self.cols, other.cols)
        a, b = self.padded(r, c).data, other.padded(r, c).data
        return bool(np.all(np.abs(a - b) <= atol))

    def __repr__(self):
        return f"ComplexMatrix({self.rows}x{self.cols}, origin={self.origin})"


@dataclass(frozen=True)
class SymbolSequence:
    """Finitely supported symbol of a Hankel (``additive``) or Helson matrix.

    Only nonzero values are stored; missing indices read as zero.  Additive
    indices start at 0, multiplicative ones at 1.
    """

    kind: str
    values: Mapping[int, complex] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in (ADDITIVE, MULTIPLICATIVE):
            raise ValueError(f"unknown symbol kind {self.kind!r}")
        lowest = 0 if self.kind == ADDITIVE else 1
        cleaned = {}
        for k, v in self.values.items():
            if isinstance(k, bool) or int(k) != k or k < lowest:
                raise IndexError(f"index {k!r} not allowed for a {self.kind} symbol")
            v = complex(v)
            if v != 0:
                cleaned[int(k)] = v
        object.__setattr__(self, "values", dict(sorted(cleaned.items())))

    @property
    def origin(self) -> int:
        return 0 if self.kind == ADDITIVE else 1

    @property
    def support_bound(self) -> int | None:
        """Largest index carrying a nonzero value, ``None`` for the zero symbol."""
        return max(self.values) if self.values else None

    def __getitem__(self, k: int) -> complex:
        return self.values.get(k, 0j)

    def max_deviation(self, other: "SymbolSequence") -> float:
        if self.kind != other.kind:
            raise IndexOriginError("symbols of different kinds")
        keys = set(self.values) | set(other.values)
        return max((abs(self[k] - other[k]) for k in keys), default=0.0)

    def __eq__(self, other):
        if not isinstance(other, SymbolSequence):
            return NotImplemented
        return self.kind == other.kind and self.values == other.values

    def __hash__(self):
        return hash((self.kind, tuple(self.values.items())))


def _require_kind(symbol: SymbolSequence, kind: str):
    if symbol.kind != kind:
        raise IndexOriginError(f"expected a {kind} symbol, got {symbol.kind}")


def _require_origin(A: ComplexMatrix, origin: int):
    if A.origin != origin:
        raise IndexOriginError(f"expected index origin {origin}, got {A.origin}")


def hankel_truncation(gamma: SymbolSequence, N: int) -> ComplexMatrix:
    """``N x N`` corner of ``H_gamma = (gamma_{i+j})_{i,j>=0}``."""
    _require_kind(gamma, ADDITIVE)
    if N < 1:
        raise ValueError("N must be >= 1")
    _check_dim(N)
    i = np.arange(N)
    total = i[:, None] + i[None, :]
    seq = np.zeros(2 * N - 1, dtype=complex)
    for k, v in gamma.values.items():
        if k < 2 * N - 1:
            seq[k] = v
    return ComplexMatrix(seq[total], 0)


def helson_truncation(rho: SymbolSequence, N: int) -> ComplexMatrix:
    """``N x N`` corner of ``M_rho = (rho_{mn})_{m,n>=1}``."""
    _require_kind(rho, MULTIPLICATIVE)
    if N < 1:
        raise ValueError("N must be >= 1")
    _check_dim(N)
    m = np.arange(1, N + 1)
    prod = m[:, None] * m[None, :]
    seq = np.zeros(N * N + 1, dtype=complex)
    for k, v in rho.values.items():
        if k <= N * N:
            seq[k] = v
    return ComplexMatrix(seq[prod], 1)


def _as_array(A) -> np.ndarray:
    return A.data if isinstance(A, ComplexMatrix) else np.asarray(A, dtype=complex)


def singular_values(A) -> np.ndarray:
    """Full singular spectrum (zeros included), non-increasing.

    Returns ``min(rows, cols)`` values from LAPACK's divide-and-conquer SVD.
    """
    s = np.linalg.svd(_as_array(A), compute_uv=False)
    return np.sort(np.maximum(s, 0.0))[::-1]


def lq_norm(values, q: float) -> float:
    """``l^q`` norm of a non-negative vector, scaled to avoid overflow."""
    if not q >= 1:
        raise ValueError(f"q must be >= 1, got {q}")
    v = np.abs(np.asarray(values, dtype=float))
    if v.size == 0:
        return 0.0
    top = v.max()
    if top == 0 or not math.isfinite(top):
        return float(top)
    if math.isinf(q):
        return float(top)
    return float(top * np.sum((v / top) ** q) ** (1.0 / q))


def schatten_norm(A, q: float) -> float:
    """``||A||_{S_q}``: the ``l^q`` norm of the singular values.

    ``q = inf`` gives the operator norm.  ``q = 2`` is evaluated from the
    singular values as well; the Frobenius identity is a test, not a shortcut.
    """
    if not q >= 1:
        raise ValueError(f"q must be >= 1 or inf, got {q}")
    return lq_norm(singular_values(A), q)


def trace_pairing(A: ComplexMatrix, B: ComplexMatrix) -> complex:
    """``<A, B> = Tr(A B*) = sum a_ij conj(b_ij)``."""
    if A.shape != B.shape or A.origin != B.origin:
        raise ValueError(f"pairing needs equal shapes and origins: {A!r} vs {B!r}")
    return complex(np.vdot(B.data, A.data))


def kron(A: ComplexMatrix, B: ComplexMatrix) -> ComplexMatrix:
    """Kronecker product, ``A`` block-major; keeps the common origin."""
    if A.origin != B.origin:
        raise IndexOriginError("kron of matrices with different origins")
    _check_dim(A.rows * B.rows, A.cols * B.cols)
    return ComplexMatrix(np.kron(A.data, B.data), A.origin)


def restrict_prime(A: ComplexMatrix, p: int, depth: int) -> ComplexMatrix:
    """Compress a multiplicative matrix to the rows/columns ``p**0, ..., p**(depth-1)``.

    The result is 0-indexed by exponent: entry ``(i, j)`` is ``A(p**i, p**j)``.
    """
    _require_origin(A, 1)
    if not is_prime(p):
        raise ValueError(f"{p} is not prime")
    if depth < 1:
        raise ValueError("depth must be >= 1")
    top = p ** (depth - 1)
    if top > A.rows or top > A.cols:
        raise IndexError(f"{p}^{depth - 1} = {top} exceeds matrix of shape {A.shape}")
    idx = np.array([p**i - 1 for i in range(depth)])
    return ComplexMatrix(A.data[np.ix_(idx, idx)], 0)


def restrict_indices(A: ComplexMatrix, indices) -> ComplexMatrix:
    """Submatrix on an explicit (multiplicative) index list, re-indexed from 0."""
    idx = np.asarray(indices) - A.origin
    return ComplexMatrix(A.data[np.ix_(idx, idx)], 0)


@dataclass(frozen=True)
class LocalBlockFamily:
    """Square 0-indexed blocks ``A_p`` for strictly ascending primes ``p``."""

    blocks: tuple[tuple[int, ComplexMatrix], ...]

    def __post_init__(self):
        blocks = tuple((int(p), b) for p, b in self.blocks)
        primes = [p for p, _ in blocks]
        if any(a >= b for a, b in zip(primes, primes[1:])):
            raise ValueError("primes must be strictly ascending")
        for p, b in blocks:
            if not is_prime(p):
                raise ValueError(f"{p} is not prime")
            if b.rows != b.cols:
                raise ValueError(f"block for p={p} is not square")
            _require_origin(b, 0)
        object.__setattr__(self, "blocks", blocks)

    @property
    def primes(self) -> list[int]:
        return [p for p, _ in self.blocks]

    def __iter__(self):
        return iter(self.blocks)


def block_conditions(block: ComplexMatrix) -> tuple[float, complex]:
    """``(||A_p e_1||, <A_p e_1, e_1>)`` for a 0-indexed local block.

    The tensor product over primes is well behaved when the first quantity
    is summably close to 1 and the second equals 1.
    """
    _require_origin(block, 0)
    col = block.data[:, 0]
    return float(np.linalg.norm(col)), complex(col[0])


def _exponent_table(indices: np.ndarray, family: LocalBlockFamily) -> tuple[np.ndarray, np.ndarray]:
    """Per-prime exponents of each index and a mask of indices the family can express."""
    primes = family.primes
    sizes = {p: b.rows for p, b in family}
    exps = np.zeros((len(primes), len(indices)), dtype=int)
    ok = np.ones(len(indices), dtype=bool)
    pos = {p: r for r, p in enumerate(primes)}
    for c, n in enumerate(indices):
        for p, e in _factor_tuple(int(n)):
            if p not in pos or e >= sizes[p]:
                ok[c] = False
                break
            exps[pos[p], c] = e
    return exps, ok


def multiplicative_entries(family: LocalBlockFamily, rows, cols) -> np.ndarray:
    """Entries ``prod_p (A_p)[nu_p(m), nu_p(n)]`` of the tensor product on given indices.

    Indices involving a prime outside the family, or an exponent beyond the
    block size, give 0 (the missing factors are the unit block ``H_{e_0}``).
    """
    rows = np.asarray(rows)
    cols = np.asarray(cols)
    er, okr = _exponent_table(rows, family)
    ec, okc = _exponent_table(cols, family)
    out = np.ones((len(rows), len(cols)), dtype=complex)
    for r, (_, block) in enumerate(family):
        out *= block.data[er[r][:, None], ec[r][None, :]]
    out[~okr, :] = 0
    out[:, ~okc] = 0
    return out


def multiplicative_assemble(blocks, N: int, tol: float = 1e-12) -> ComplexMatrix:
    """``N x N`` truncation of the multiplicative matrix ``tensor_p A_p``.

    ``blocks`` is a :class:`LocalBlockFamily` or an iterable of
    ``(prime, block)`` pairs.  Every block must have top-left entry 1,
    otherwise the tensor product is not a multiplicative matrix.
    """
    family = blocks if isinstance(blocks, LocalBlockFamily) else LocalBlockFamily(tuple(blocks))
    for p, b in family:
        if abs(b.data[0, 0] - 1) > tol:
            raise ValueError(f"block for p={p} has <A_p e_1, e_1> = {b.data[0, 0]}, not 1")
    _check_dim(N)
    idx = np.arange(1, N + 1)
    return ComplexMatrix(multiplicative_entries(family, idx, idx), 1)


def dyadic_embed(A: ComplexMatrix) -> ComplexMatrix:
    """Move a 0-indexed matrix onto the powers of two: ``(2**i, 2**j) <- a_ij``."""
    _require_origin(A, 0)
    rows, cols = 2 ** (A.rows - 1), 2 ** (A.cols - 1)
    _check_dim(rows, cols)
    out = np.zeros((rows, cols), dtype=complex)
    ri = 2 ** np.arange(A.rows) - 1
    ci = 2 ** np.arange(A.cols) - 1
    out[np.ix_(ri, ci)] = A.data
    return ComplexMatrix(out, 1)


def dyadic_embed_symbol(gamma: SymbolSequence) -> SymbolSequence:
    """Additive symbol ``gamma_k`` moved to the multiplicative index ``2**k``."""
    _require_kind(gamma, ADDITIVE)
    return SymbolSequence(MULTIPLICATIVE, {2**k: v for k, v in gamma.values.items()})


# -- text file format -------------------------------------------------------
#   matrix <rows> <cols> <origin>
#   <i> <j> <re> <im>        one line per nonzero entry

def format_matrix(A: ComplexMatrix) -> str:
    lines = [f"matrix {A.rows} {A.cols} {A.origin}"]
    for i, j, v in A.nonzero():
        lines.append(f"{i} {j} {v.real!r} {v.imag!r}")
    return "\n".join(lines) + "\n"


def parse_matrix(text: str) -> ComplexMatrix:
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise MatrixFormatError("empty matrix file")
    head = lines[0].split()
    if len(head) != 4 or head[0] != "matrix":
        raise MatrixFormatError(f"bad header {lines[0]!r}")
    try:
        rows, cols, origin = (int(x) for x in head[1:])
    except ValueError as exc:
        raise MatrixFormatError(f"bad header {lines[0]!r}") from exc
    if rows < 1 or cols < 1 or origin not in (0, 1):
        raise MatrixFormatError(f"bad header {lines[0]!r}")
    entries: dict[tuple[int, int], complex] = {}
    for ln in lines[1:]:
        parts = ln.split()
        if len(parts) != 4:
            raise MatrixFormatError(f"bad entry line {ln!r}")
        try:
            i, j = int(parts[0]), int(parts[1])
            v = complex(float(parts[2]), float(parts[3]))
        except ValueError as exc:
            raise MatrixFormatError(f"bad entry line {ln!r}") from exc
        if (i, j) in entries:
            raise MatrixFormatError(f"duplicate coordinate ({i}, {j})")
        entries[(i, j)] = v
    try:
        return ComplexMatrix.from_entries(rows, cols, entries, origin)
    except IndexError as exc:
        raise MatrixFormatError(str(exc)) from exc


def read_matrix(path) -> ComplexMatrix:
    return parse_matrix(Path(path).read_text())


def write_matrix(A: ComplexMatrix, path) -> None:
    Path(path).write_text(format_matrix(A))


#   symbol <additive|multiplicative>
#   <k> <re> <im>

def format_symbol(symbol: SymbolSequence) -> str:
    lines = [f"symbol {symbol.kind}"]
    for k, v in symbol.values.items():
        lines.append(f"{k} {v.real!r} {v.imag!r}")
    return "\n".join(lines) + "\n"


def parse_symbol(text: str) -> SymbolSequence:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0].split()[:1] != ["symbol"] or len(lines[0].split()) != 2:
        raise MatrixFormatError("bad symbol header")
    kind = lines[0].split()[1]
    values = {}
    for ln in lines[1:]:
        parts = ln.split()
        if len(parts) != 3:
            raise MatrixFormatError(f"bad symbol line {ln!r}")
        k = int(parts[0])
        if k in values:
            raise MatrixFormatError(f"duplicate index {k}")
        values[k] = complex(float(parts[1]), float(parts[2]))
    try:
        return SymbolSequence(kind, values)
    except (ValueError, IndexError) as exc:
        raise MatrixFormatError(str(exc)) from exc
