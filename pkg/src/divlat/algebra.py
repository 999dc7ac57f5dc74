"""Exact arithmetic over rationals extended by square roots, plus exact matrices.

Scalars live in multi-quadratic extensions Q(sqrt(m_1), ..., sqrt(m_k)).  An
element is stored as a finite map {square-free integer s -> Fraction}, meaning
sum_s c_s * sqrt(s), with s = 1 carrying the rational part.  The square roots
of distinct square-free integers are linearly independent over Q, so the
representation is canonical and equality/zero tests are exact.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

__all__ = [
    "AlgebraicScalar",
    "ExactMatrix",
    "sqrt_int",
    "rational",
    "is_rational_ratio",
    "invert_float",
    "write_matrix",
    "read_matrix",
    "format_scalar",
    "parse_scalar",
]

RationalLike = int | Fraction


def _squarefree_split(m: int) -> tuple[int, int]:
    """Write m = a^2 * s with s square-free; return (a, s)."""
    if m <= 0:
        raise ValueError("square root argument must be positive")
    a, s = 1, 1
    d = 2
    while d * d <= m:
        if m % d == 0:
            e = 0
            while m % d == 0:
                m //= d
                e += 1
            a *= d ** (e // 2)
            if e % 2:
                s *= d
        d += 1 if d == 2 else 2
    return a, s * m


def _prime_factors(s: int) -> list[int]:
    out = []
    d = 2
    while d * d <= s:
        if s % d == 0:
            out.append(d)
            while s % d == 0:
                s //= d
        d += 1 if d == 2 else 2
    if s > 1:
        out.append(s)
    return out


class AlgebraicScalar:
    """Element of Q(sqrt(m_1), ..., sqrt(m_k)): an exact sum of rational
    multiples of square roots of square-free integers."""

    __slots__ = ("_c",)

    def __init__(self, coeffs: dict[int, Fraction] | None = None):
        c = {}
        if coeffs:
            for s, v in coeffs.items():
                v = Fraction(v)
                if v:
                    c[s] = v
        self._c = c

    # -- constructors ------------------------------------------------------

    @classmethod
    def from_rational(cls, q: RationalLike) -> "AlgebraicScalar":
        return cls({1: Fraction(q)})

    @classmethod
    def sqrt(cls, m: int, scale: RationalLike = 1) -> "AlgebraicScalar":
        """scale * sqrt(m) for a positive integer m."""
        a, s = _squarefree_split(m)
        return cls({s: Fraction(scale) * a})

    @classmethod
    def inv_sqrt(cls, m: int) -> "AlgebraicScalar":
        """1/sqrt(m), stored as sqrt(m)/m."""
        a, s = _squarefree_split(m)
        return cls({s: Fraction(1, a * s)})

    # -- views -------------------------------------------------------------

    @property
    def coeffs(self) -> dict[int, Fraction]:
        return dict(self._c)

    def is_zero(self) -> bool:
        return not self._c

    def is_rational(self) -> bool:
        return all(s == 1 for s in self._c)

    def as_rational(self) -> Fraction:
        if not self.is_rational():
            raise ValueError(f"{self} is not rational")
        return self._c.get(1, Fraction(0))

    def primes(self) -> set[int]:
        """Primes whose square roots are involved."""
        out: set[int] = set()
        for s in self._c:
            out.update(_prime_factors(s))
        return out

    def __float__(self) -> float:
        return float(sum(float(v) * math.sqrt(s) for s, v in self._c.items()))

    # -- ring/field ops ----------------------------------------------------

    @staticmethod
    def _coerce(x) -> "AlgebraicScalar":
        if isinstance(x, AlgebraicScalar):
            return x
        if isinstance(x, (int, Fraction)):
            return AlgebraicScalar({1: Fraction(x)})
        return NotImplemented  # type: ignore[return-value]

    def __add__(self, other) -> "AlgebraicScalar":
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        c = dict(self._c)
        for s, v in other._c.items():
            w = c.get(s, Fraction(0)) + v
            if w:
                c[s] = w
            else:
                c.pop(s, None)
        out = AlgebraicScalar.__new__(AlgebraicScalar)
        out._c = c
        return out

    __radd__ = __add__

    def __neg__(self) -> "AlgebraicScalar":
        out = AlgebraicScalar.__new__(AlgebraicScalar)
        out._c = {s: -v for s, v in self._c.items()}
        return out

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other) -> "AlgebraicScalar":
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        c: dict[int, Fraction] = {}
        for s, v in self._c.items():
            for t, w in other._c.items():
                g = math.gcd(s, t)
                key = (s // g) * (t // g)
                val = v * w * g
                u = c.get(key, Fraction(0)) + val
                if u:
                    c[key] = u
                else:
                    c.pop(key, None)
        out = AlgebraicScalar.__new__(AlgebraicScalar)
        out._c = c
        return out

    __rmul__ = __mul__

    def inverse(self) -> "AlgebraicScalar":
        if not self._c:
            raise ZeroDivisionError("division by zero AlgebraicScalar")
        primes = self.primes()
        if not primes:
            return AlgebraicScalar({1: 1 / self._c[1]})
        # Rationalize one prime at a time: x = a + sqrt(p) b with a, b free of
        # p, so x * conj = a^2 - p b^2 involves one prime fewer.
        p = max(primes)
        conj = {}
        for s, v in self._c.items():
            conj[s] = -v if s % p == 0 else v
        conj_x = AlgebraicScalar(conj)
        norm = self * conj_x
        return conj_x * norm.inverse()

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self * other.inverse()

    def __rtruediv__(self, other):
        return self._coerce(other) * self.inverse()

    def __pow__(self, n: int) -> "AlgebraicScalar":
        if n < 0:
            return self.inverse() ** (-n)
        out = AlgebraicScalar.from_rational(1)
        b = self
        while n:
            if n & 1:
                out = out * b
            b = b * b
            n >>= 1
        return out

    def __eq__(self, other) -> bool:
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self._c == other._c

    def __hash__(self):
        return hash(frozenset(self._c.items()))

    def __bool__(self):
        return bool(self._c)

    def __repr__(self):
        if not self._c:
            return "0"
        parts = []
        for s in sorted(self._c):
            v = self._c[s]
            if s == 1:
                parts.append(str(v))
            elif v == 1:
                parts.append(f"sqrt({s})")
            else:
                parts.append(f"{v}*sqrt({s})")
        return " + ".join(parts).replace("+ -", "- ")


def rational(q: RationalLike, den: int | None = None) -> AlgebraicScalar:
    if den is not None:
        q = Fraction(q, den)
    return AlgebraicScalar.from_rational(q)


def sqrt_int(m: int) -> AlgebraicScalar:
    return AlgebraicScalar.sqrt(m)


ZERO = AlgebraicScalar()
ONE = rational(1)


def is_rational_ratio(p: AlgebraicScalar, q: AlgebraicScalar) -> bool:
    """True iff p/q is in Q.  q must be nonzero."""
    if q.is_zero():
        raise ZeroDivisionError("rationality of p/0 is undefined")
    return (p / q).is_rational()


# ---------------------------------------------------------------------------
# Exact matrices
# ---------------------------------------------------------------------------


class ExactMatrix:
    """Sparse matrix of AlgebraicScalar entries with exact linear algebra."""

    def __init__(self, rows: int, cols: int,
                 entries: dict[tuple[int, int], AlgebraicScalar] | None = None):
        self.rows = rows
        self.cols = cols
        self.entries: dict[tuple[int, int], AlgebraicScalar] = {}
        if entries:
            for (r, c), v in entries.items():
                self.set(r, c, v)

    @classmethod
    def identity(cls, n: int) -> "ExactMatrix":
        m = cls(n, n)
        for i in range(n):
            m.set(i, i, ONE)
        return m

    @classmethod
    def from_rows(cls, rows: list[list]) -> "ExactMatrix":
        n = len(rows)
        k = len(rows[0]) if n else 0
        m = cls(n, k)
        for i, row in enumerate(rows):
            if len(row) != k:
                raise ValueError("ragged rows")
            for j, v in enumerate(row):
                if not isinstance(v, AlgebraicScalar):
                    v = rational(v)
                m.set(i, j, v)
        return m

    def get(self, r: int, c: int) -> AlgebraicScalar:
        return self.entries.get((r, c), ZERO)

    def set(self, r: int, c: int, v: AlgebraicScalar) -> None:
        if not (0 <= r < self.rows and 0 <= c < self.cols):
            raise IndexError((r, c))
        if not isinstance(v, AlgebraicScalar):
            v = rational(v)
        if v.is_zero():
            self.entries.pop((r, c), None)
        else:
            self.entries[(r, c)] = v

    def copy(self) -> "ExactMatrix":
        m = ExactMatrix(self.rows, self.cols)
        m.entries = dict(self.entries)
        return m

    def transpose(self) -> "ExactMatrix":
        m = ExactMatrix(self.cols, self.rows)
        m.entries = {(c, r): v for (r, c), v in self.entries.items()}
        return m

    def scale(self, a: AlgebraicScalar) -> "ExactMatrix":
        m = ExactMatrix(self.rows, self.cols)
        for (r, c), v in self.entries.items():
            m.set(r, c, a * v)
        return m

    def submatrix(self, row_idx, col_idx) -> "ExactMatrix":
        ri = {r: i for i, r in enumerate(row_idx)}
        ci = {c: j for j, c in enumerate(col_idx)}
        m = ExactMatrix(len(ri), len(ci))
        for (r, c), v in self.entries.items():
            if r in ri and c in ci:
                m.set(ri[r], ci[c], v)
        return m

    def matvec(self, x: list[AlgebraicScalar]) -> list[AlgebraicScalar]:
        if len(x) != self.cols:
            raise ValueError("dimension mismatch")
        out = [ZERO] * self.rows
        for (r, c), v in self.entries.items():
            if not x[c].is_zero():
                out[r] = out[r] + v * x[c]
        return out

    def __matmul__(self, other: "ExactMatrix") -> "ExactMatrix":
        if self.cols != other.rows:
            raise ValueError("dimension mismatch")
        m = ExactMatrix(self.rows, other.cols)
        by_row: dict[int, list[tuple[int, AlgebraicScalar]]] = {}
        for (r, c), v in other.entries.items():
            by_row.setdefault(r, []).append((c, v))
        acc: dict[tuple[int, int], AlgebraicScalar] = {}
        for (r, k), v in self.entries.items():
            for c, w in by_row.get(k, ()):
                key = (r, c)
                acc[key] = acc.get(key, ZERO) + v * w
        for key, v in acc.items():
            m.set(*key, v)
        return m

    def __eq__(self, other) -> bool:
        return (isinstance(other, ExactMatrix) and self.rows == other.rows
                and self.cols == other.cols and self.entries == other.entries)

    def _dense(self) -> list[list[AlgebraicScalar]]:
        d = [[ZERO] * self.cols for _ in range(self.rows)]
        for (r, c), v in self.entries.items():
            d[r][c] = v
        return d

    # -- exact elimination -------------------------------------------------

    def _bareiss(self) -> tuple[int, AlgebraicScalar, int]:
        """Fraction-free elimination; returns (rank, last_pivot, swap_sign).

        last_pivot equals det(M) * swap_sign for square full-rank M.
        """
        a = self._dense()
        nr, nc = self.rows, self.cols
        prev = ONE
        sign = 1
        rank = 0
        r = 0
        for c in range(nc):
            if r >= nr:
                break
            piv = None
            for i in range(r, nr):
                if not a[i][c].is_zero():
                    piv = i
                    break
            if piv is None:
                continue
            if piv != r:
                a[r], a[piv] = a[piv], a[r]
                sign = -sign
            for i in range(r + 1, nr):
                for j in range(c + 1, nc):
                    num = a[r][c] * a[i][j] - a[i][c] * a[r][j]
                    a[i][j] = num / prev
                a[i][c] = ZERO
            prev = a[r][c]
            rank += 1
            r += 1
        return rank, prev, sign

    def exact_rank(self) -> int:
        """Rank over Q(sqrt(...)), by fraction-free elimination."""
        rank, _, _ = self._bareiss()
        return rank

    def exact_det(self) -> AlgebraicScalar:
        if self.rows != self.cols:
            raise ValueError("determinant of a non-square matrix")
        if self.rows == 0:
            return ONE
        rank, last, sign = self._bareiss()
        if rank < self.rows:
            return ZERO
        return last if sign == 1 else -last

    def rref(self) -> tuple["ExactMatrix", list[int]]:
        """Reduced row echelon form and pivot column indices."""
        a = self._dense()
        nr, nc = self.rows, self.cols
        pivots: list[int] = []
        r = 0
        for c in range(nc):
            if r >= nr:
                break
            piv = None
            for i in range(r, nr):
                if not a[i][c].is_zero():
                    piv = i
                    break
            if piv is None:
                continue
            a[r], a[piv] = a[piv], a[r]
            inv = a[r][c].inverse()
            a[r] = [inv * x for x in a[r]]
            for i in range(nr):
                if i != r and not a[i][c].is_zero():
                    f = a[i][c]
                    a[i] = [x - f * y for x, y in zip(a[i], a[r])]
            pivots.append(c)
            r += 1
        out = ExactMatrix(nr, nc)
        for i in range(nr):
            for j in range(nc):
                out.set(i, j, a[i][j])
        return out, pivots

    def nullspace(self) -> list[list[AlgebraicScalar]]:
        """Basis of the exact right kernel."""
        rr, pivots = self.rref()
        free = [c for c in range(self.cols) if c not in pivots]
        basis = []
        for f in free:
            v = [ZERO] * self.cols
            v[f] = ONE
            for i, p in enumerate(pivots):
                v[p] = -rr.get(i, f)
            basis.append(v)
        return basis

    def solve(self, rhs: list[AlgebraicScalar]):
        """One exact solution of M x = rhs, or None if inconsistent."""
        if len(rhs) != self.rows:
            raise ValueError("dimension mismatch")
        aug = ExactMatrix(self.rows, self.cols + 1)
        aug.entries = dict(self.entries)
        for i, v in enumerate(rhs):
            aug.set(i, self.cols, v)
        rr, pivots = aug.rref()
        if self.cols in pivots:
            return None
        x = [ZERO] * self.cols
        for i, p in enumerate(pivots):
            x[p] = rr.get(i, self.cols)
        return x

    # -- lowering ------------------------------------------------------

    def to_float(self) -> np.ndarray:
        out = np.zeros((self.rows, self.cols))
        for (r, c), v in self.entries.items():
            out[r, c] = float(v)
        return out


def lower_to_float(m: ExactMatrix) -> np.ndarray:
    return m.to_float()


def invert_float(m: np.ndarray, cond_limit: float = 1e12,
                 residual_limit: float = 1e-8) -> np.ndarray:
    """Numeric inverse with a conditioning gate and a residual check."""
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("matrix must be square")
    cond = np.linalg.cond(m)
    if not np.isfinite(cond) or cond > cond_limit:
        raise ValueError(f"matrix is ill-conditioned (cond estimate {cond:.3e})")
    inv = np.linalg.inv(m)
    resid = np.max(np.abs(m @ inv - np.eye(m.shape[0])))
    if resid > residual_limit:
        raise ValueError(f"inverse residual {resid:.3e} exceeds {residual_limit:.1e}")
    return inv


# ---------------------------------------------------------------------------
# Text format
#
# Line-oriented and bit-exact:
#   rows cols basis=m1,m2,...
#   r c p/q@{} p/q@{1} p/q@{1,2} ...
# where @{i,j} names the subset of basis entries whose square roots the
# rational coefficient multiplies ({} is the rational part).  Lines starting
# with '#' are reserved for sidecar headers and ignored here.
# ---------------------------------------------------------------------------


def _scalar_basis(v: AlgebraicScalar) -> set[int]:
    return v.primes()


def format_scalar(v: AlgebraicScalar, basis: list[int]) -> str:
    """Render as coefficient list against a basis of square-free integers."""
    idx = {m: i + 1 for i, m in enumerate(basis)}
    parts = []
    for s in sorted(v.coeffs):
        c = v.coeffs[s]
        if s == 1:
            subset: list[int] = []
        else:
            subset = []
            rem = s
            for m in basis:
                if rem % m == 0:
                    subset.append(idx[m])
                    rem //= m
            if rem != 1:
                raise ValueError(f"basis {basis} cannot express sqrt({s})")
        sub = ",".join(str(i) for i in subset)
        parts.append(f"{c.numerator}/{c.denominator}@{{{sub}}}")
    if not parts:
        parts = ["0/1@{}"]
    return " ".join(parts)


def parse_scalar(tokens: list[str] | str, basis: list[int]) -> AlgebraicScalar:
    if isinstance(tokens, str):
        tokens = tokens.split()
    out = AlgebraicScalar()
    for tok in tokens:
        coeff_s, _, subset_s = tok.partition("@")
        num_s, _, den_s = coeff_s.partition("/")
        c = Fraction(int(num_s), int(den_s) if den_s else 1)
        subset_s = subset_s.strip("{}")
        term = AlgebraicScalar.from_rational(c)
        if subset_s:
            for i in subset_s.split(","):
                term = term * AlgebraicScalar.sqrt(basis[int(i) - 1])
        out = out + term
    return out


def write_matrix(m: ExactMatrix, header_lines: list[str] | None = None,
                 extra_basis: set[int] | None = None) -> str:
    primes: set[int] = set(extra_basis or ())
    for v in m.entries.values():
        primes |= _scalar_basis(v)
    basis = sorted(primes)
    lines = []
    if header_lines:
        for h in header_lines:
            lines.append(f"# {h}")
    lines.append(f"{m.rows} {m.cols} basis={','.join(str(b) for b in basis)}")
    for (r, c) in sorted(m.entries):
        lines.append(f"{r} {c} {format_scalar(m.entries[(r, c)], basis)}")
    return "\n".join(lines) + "\n"


def read_matrix(text: str) -> tuple[ExactMatrix, list[str]]:
    """Parse the text format; returns (matrix, sidecar header lines)."""
    header: list[str] = []
    body: list[str] = []
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            header.append(line[1:].strip())
        else:
            body.append(line)
    if not body:
        raise ValueError("empty matrix file")
    first = body[0].split()
    rows, cols = int(first[0]), int(first[1])
    basis: list[int] = []
    for tok in first[2:]:
        if tok.startswith("basis="):
            spec = tok[len("basis="):]
            basis = [int(x) for x in spec.split(",") if x]
    m = ExactMatrix(rows, cols)
    for line in body[1:]:
        toks = line.split()
        r, c = int(toks[0]), int(toks[1])
        m.set(r, c, parse_scalar(toks[2:], basis))
    return m, header
