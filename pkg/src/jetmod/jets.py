"""Truncated multivariate complex power series ("jets") and matrices of them.

This is the computational substrate of the package: every derivative that
the geometry and equivalence layers need is read off as a Taylor
coefficient of one of these series.

Representation
--------------
A series in ``num_vars`` variables truncated at total degree ``trunc`` is
a dense complex vector laid out in graded colexicographic rank order (see
:mod:`jetmod.multiindex`).  Because the order is graded, the coefficient
block of a lower truncation is a prefix of that of a higher one, so
truncating is a slice.  Products use a precomputed convolution table per
``(num_vars, trunc)`` context; all terms above the truncation degree are
discarded.

All values are double-precision complex.  The identities these series are
used to verify are exact; tests check them numerically at relative
tolerance 1e-9 / absolute 1e-12 (see ``close``).
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .multiindex import degree_slice

RTOL = 1e-9
ATOL = 1e-12

# pow/log/recip refuse constant terms closer to 0 than this
SINGULAR_TOL = 1e-10


class SeriesContext:
    """Shared index and convolution tables for one (num_vars, trunc) pair."""

    def __init__(self, num_vars: int, trunc: int):
        if num_vars < 1:
            raise ValueError("need num_vars >= 1")
        if trunc < 0:
            raise ValueError("need trunc >= 0")
        self.num_vars = num_vars
        self.trunc = trunc
        indices = []
        for t in range(trunc + 1):
            indices.extend(degree_slice(num_vars, t))
        self.indices = tuple(indices)
        self.size = len(indices)
        self.rank = {alpha: i for i, alpha in enumerate(self.indices)}
        self.degrees = np.array([sum(a) for a in self.indices])
        self._mul_table = None
        self._deriv_tables = {}

    @property
    def mul_table(self):
        if self._mul_table is None:
            left, right, out = [], [], []
            for i, a in enumerate(self.indices):
                da = self.degrees[i]
                for j, b in enumerate(self.indices):
                    if da + self.degrees[j] > self.trunc:
                        continue
                    left.append(i)
                    right.append(j)
                    out.append(self.rank[tuple(x + y for x, y in zip(a, b))])
            self._mul_table = (
                np.array(left, dtype=np.intp),
                np.array(right, dtype=np.intp),
                np.array(out, dtype=np.intp),
            )
        return self._mul_table

    def deriv_table(self, var: int):
        """Source ranks and multipliers mapping coefficients to the d/dx_var image.

        The image lives in the context with truncation one lower.
        """
        if var not in self._deriv_tables:
            lower = series_context(self.num_vars, self.trunc - 1)
            src = np.empty(lower.size, dtype=np.intp)
            fac = np.empty(lower.size)
            for i, beta in enumerate(lower.indices):
                up = list(beta)
                up[var] += 1
                src[i] = self.rank[tuple(up)]
                fac[i] = beta[var] + 1
            self._deriv_tables[var] = (src, fac)
        return self._deriv_tables[var]


@lru_cache(maxsize=None)
def series_context(num_vars: int, trunc: int) -> SeriesContext:
    return SeriesContext(num_vars, trunc)


def _convolve(ctx: SeriesContext, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    left, right, out = ctx.mul_table
    prod = a[left] * b[right]
    return (
        np.bincount(out, weights=prod.real, minlength=ctx.size)
        + 1j * np.bincount(out, weights=prod.imag, minlength=ctx.size)
    )


class JetSeries:
    """One truncated power series.  Immutable; operations return new series."""

    __slots__ = ("ctx", "c")

    def __init__(self, ctx: SeriesContext, coeffs: np.ndarray):
        self.ctx = ctx
        self.c = np.asarray(coeffs, dtype=complex)
        if self.c.shape != (ctx.size,):
            raise ValueError("coefficient vector does not match context size")

    @classmethod
    def constant(cls, ctx: SeriesContext, value) -> "JetSeries":
        c = np.zeros(ctx.size, dtype=complex)
        c[0] = value
        return cls(ctx, c)

    @classmethod
    def variable(cls, ctx: SeriesContext, var: int) -> "JetSeries":
        """The series of the coordinate function x_var (0-based)."""
        if not 0 <= var < ctx.num_vars:
            raise ValueError(f"variable index {var} out of range")
        c = np.zeros(ctx.size, dtype=complex)
        if ctx.trunc >= 1:
            e = tuple(1 if i == var else 0 for i in range(ctx.num_vars))
            c[ctx.rank[e]] = 1.0
        return cls(ctx, c)

    @classmethod
    def from_coeffs(cls, ctx: SeriesContext, table: dict) -> "JetSeries":
        c = np.zeros(ctx.size, dtype=complex)
        for alpha, value in table.items():
            alpha = tuple(alpha)
            if sum(alpha) > ctx.trunc:
                raise ValueError(f"index {alpha} exceeds truncation {ctx.trunc}")
            c[ctx.rank[alpha]] = value
        return cls(ctx, c)

    # -- ring operations -------------------------------------------------

    def _check_same(self, other: "JetSeries"):
        if self.ctx is not other.ctx:
            raise ValueError(
                "series contexts differ "
                f"(({self.ctx.num_vars},{self.ctx.trunc}) vs "
                f"({other.ctx.num_vars},{other.ctx.trunc})); truncate first"
            )

    def __add__(self, other):
        if isinstance(other, JetSeries):
            self._check_same(other)
            return JetSeries(self.ctx, self.c + other.c)
        return self + JetSeries.constant(self.ctx, other)

    __radd__ = __add__

    def __neg__(self):
        return JetSeries(self.ctx, -self.c)

    def __sub__(self, other):
        return self + (-other if isinstance(other, JetSeries) else -complex(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, JetSeries):
            self._check_same(other)
            return JetSeries(self.ctx, _convolve(self.ctx, self.c, other.c))
        return JetSeries(self.ctx, self.c * complex(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, JetSeries):
            return self * other.recip()
        return JetSeries(self.ctx, self.c / complex(other))

    def __rtruediv__(self, other):
        return self.recip() * other

    # -- analytic operations ----------------------------------------------

    def _nilpotent_part(self):
        """self with the constant term removed."""
        c = self.c.copy()
        c[0] = 0.0
        return JetSeries(self.ctx, c)

    def _nonzero_constant(self, what: str) -> complex:
        a0 = complex(self.c[0])
        if abs(a0) < SINGULAR_TOL:
            raise ValueError(
                f"{what} requires a constant term away from 0 (|a0|={abs(a0):.2e})"
            )
        return a0

    def recip(self) -> "JetSeries":
        """Multiplicative inverse up to the truncation order."""
        a0 = self._nonzero_constant("series reciprocal")
        u = self._nilpotent_part() * (-1.0 / a0)  # 1/a = (1/a0) sum u^j
        out = JetSeries.constant(self.ctx, 1.0)
        term = JetSeries.constant(self.ctx, 1.0)
        for _ in range(self.ctx.trunc):
            term = term * u
            out = out + term
        return out * (1.0 / a0)

    def log(self) -> "JetSeries":
        """Principal-branch logarithm; rejects constant terms on (-inf, 0]."""
        a0 = self._nonzero_constant("series log")
        if a0.real < 0 and abs(a0.imag) <= 1e-12 * abs(a0):
            raise ValueError(
                "series log: constant term on the negative real axis "
                "(principal branch undefined)"
            )
        u = self._nilpotent_part() * (1.0 / a0)
        out = JetSeries.constant(self.ctx, np.log(a0))
        term = JetSeries.constant(self.ctx, 1.0)
        for j in range(1, self.ctx.trunc + 1):
            term = term * u
            out = out + term * ((-1.0) ** (j + 1) / j)
        return out

    def exp(self) -> "JetSeries":
        u = self._nilpotent_part()
        out = JetSeries.constant(self.ctx, 1.0)
        term = JetSeries.constant(self.ctx, 1.0)
        for j in range(1, self.ctx.trunc + 1):
            term = term * u * (1.0 / j)
            out = out + term
        return out * np.exp(complex(self.c[0]))

    def power(self, e: float) -> "JetSeries":
        """Real power via exp(e * log(.)); principal branch at the constant term."""
        return (self.log() * e).exp()

    # -- structural operations ---------------------------------------------

    def derivative(self, var: int) -> "JetSeries":
        """Partial derivative; the result is truncated one order lower."""
        if self.ctx.trunc == 0:
            raise ValueError("cannot differentiate a series truncated at order 0")
        src, fac = self.ctx.deriv_table(var)
        lower = series_context(self.ctx.num_vars, self.ctx.trunc - 1)
        return JetSeries(lower, self.c[src] * fac)

    def truncate(self, trunc: int) -> "JetSeries":
        if trunc > self.ctx.trunc:
            raise ValueError("cannot raise the truncation order of a series")
        lower = series_context(self.ctx.num_vars, trunc)
        return JetSeries(lower, self.c[: lower.size])

    def coeff(self, alpha) -> complex:
        """Taylor coefficient of the monomial x^alpha."""
        alpha = tuple(alpha)
        if sum(alpha) > self.ctx.trunc:
            raise ValueError(
                f"index {alpha} of degree {sum(alpha)} exceeds truncation "
                f"{self.ctx.trunc}"
            )
        return complex(self.c[self.ctx.rank[alpha]])

    def extract(self, alpha) -> complex:
        """Partial derivative value at the base point: alpha! * coeff(alpha)."""
        alpha = tuple(alpha)
        fac = 1
        for a in alpha:
            fac *= math.factorial(a)
        return fac * self.coeff(alpha)

    def __repr__(self):
        nz = int(np.count_nonzero(self.c))
        return (
            f"JetSeries(vars={self.ctx.num_vars}, trunc={self.ctx.trunc}, "
            f"nonzero={nz})"
        )


def close(a: JetSeries, b: JetSeries, rtol: float = RTOL, atol: float = ATOL) -> bool:
    """Coefficientwise comparison at the default numeric tolerance."""
    a._check_same(b)
    return bool(np.allclose(a.c, b.c, rtol=rtol, atol=atol))


def extract_derivative(a: JetSeries, alpha) -> complex:
    """Derivative of the series at its base point: alpha! times the coefficient."""
    return a.extract(alpha)


def affine_substitute(a: JetSeries, linear, offset, num_vars: int = None) -> JetSeries:
    """Compose a series with an affine change of variables.

    Old variable ``i`` is replaced by ``offset[i] + sum_j linear[i, j] * y_j``
    where ``y`` are the variables of the result.  The result keeps the
    truncation order of ``a``.
    """
    linear = np.asarray(linear, dtype=complex)
    offset = np.asarray(offset, dtype=complex)
    if linear.ndim != 2 or linear.shape[0] != a.ctx.num_vars:
        raise ValueError(
            f"linear part must be ({a.ctx.num_vars}, new_vars), got {linear.shape}"
        )
    if offset.shape != (a.ctx.num_vars,):
        raise ValueError(f"offset must have length {a.ctx.num_vars}")
    if num_vars is None:
        num_vars = linear.shape[1]
    elif num_vars != linear.shape[1]:
        raise ValueError("num_vars does not match the linear part")
    ctx = series_context(num_vars, a.ctx.trunc)

    subs = []
    for i in range(a.ctx.num_vars):
        s = JetSeries.constant(ctx, offset[i])
        for j in range(num_vars):
            if linear[i, j] != 0:
                s = s + JetSeries.variable(ctx, j) * linear[i, j]
        subs.append(s)

    # cache powers of each substituted variable up to the degree actually used
    max_pow = [0] * a.ctx.num_vars
    for i_rank in np.nonzero(a.c)[0]:
        for i, e in enumerate(a.ctx.indices[i_rank]):
            max_pow[i] = max(max_pow[i], e)
    powers = []
    for i in range(a.ctx.num_vars):
        p = [JetSeries.constant(ctx, 1.0)]
        for _ in range(max_pow[i]):
            p.append(p[-1] * subs[i])
        powers.append(p)

    out = JetSeries.constant(ctx, 0.0)
    for i_rank in np.nonzero(a.c)[0]:
        alpha = a.ctx.indices[i_rank]
        term = JetSeries.constant(ctx, a.c[i_rank])
        for i, e in enumerate(alpha):
            if e:
                term = term * powers[i][e]
        out = out + term
    return out


class JetMatrix:
    """A rows x cols matrix of series sharing one context.

    Stored as one complex array of shape (rows, cols, context size).
    """

    __slots__ = ("ctx", "c")

    def __init__(self, ctx: SeriesContext, coeffs: np.ndarray):
        self.ctx = ctx
        self.c = np.asarray(coeffs, dtype=complex)
        if self.c.ndim != 3 or self.c.shape[2] != ctx.size:
            raise ValueError("coefficient array must be (rows, cols, ctx.size)")

    @property
    def shape(self):
        return self.c.shape[:2]

    @classmethod
    def identity(cls, ctx: SeriesContext, n: int) -> "JetMatrix":
        c = np.zeros((n, n, ctx.size), dtype=complex)
        for i in range(n):
            c[i, i, 0] = 1.0
        return cls(ctx, c)

    @classmethod
    def from_entries(cls, entries) -> "JetMatrix":
        """Build from a nested list of JetSeries (all sharing one context)."""
        rows = len(entries)
        cols = len(entries[0])
        ctx = entries[0][0].ctx
        c = np.zeros((rows, cols, ctx.size), dtype=complex)
        for i in range(rows):
            for j in range(cols):
                e = entries[i][j]
                if e.ctx is not ctx:
                    raise ValueError("matrix entries use different contexts")
                c[i, j] = e.c
        return cls(ctx, c)

    @classmethod
    def from_constant(cls, ctx: SeriesContext, mat) -> "JetMatrix":
        mat = np.asarray(mat, dtype=complex)
        c = np.zeros((*mat.shape, ctx.size), dtype=complex)
        c[:, :, 0] = mat
        return cls(ctx, c)

    def entry(self, i: int, j: int) -> JetSeries:
        return JetSeries(self.ctx, self.c[i, j].copy())

    def _check_same(self, other: "JetMatrix"):
        if self.ctx is not other.ctx:
            raise ValueError("matrix contexts differ; truncate first")

    def __add__(self, other: "JetMatrix") -> "JetMatrix":
        self._check_same(other)
        return JetMatrix(self.ctx, self.c + other.c)

    def __sub__(self, other: "JetMatrix") -> "JetMatrix":
        self._check_same(other)
        return JetMatrix(self.ctx, self.c - other.c)

    def __neg__(self):
        return JetMatrix(self.ctx, -self.c)

    def scale(self, s) -> "JetMatrix":
        return JetMatrix(self.ctx, self.c * complex(s))

    def __matmul__(self, other: "JetMatrix") -> "JetMatrix":
        self._check_same(other)
        if self.shape[1] != other.shape[0]:
            raise ValueError(f"shape mismatch: {self.shape} @ {other.shape}")
        left, right, out_idx = self.ctx.mul_table
        A = self.c[:, :, left]
        B = other.c[:, :, right]
        prod = np.einsum("ijp,jkp->ikp", A, B)
        rows, cols = self.shape[0], other.shape[1]
        out = np.zeros((rows, cols, self.ctx.size), dtype=complex)
        for i in range(rows):
            for j in range(cols):
                out[i, j] = (
                    np.bincount(out_idx, weights=prod[i, j].real, minlength=self.ctx.size)
                    + 1j * np.bincount(out_idx, weights=prod[i, j].imag, minlength=self.ctx.size)
                )
        return JetMatrix(self.ctx, out)

    def left_const(self, mat) -> "JetMatrix":
        """Constant matrix times self."""
        mat = np.asarray(mat, dtype=complex)
        return JetMatrix(self.ctx, np.einsum("ij,jkp->ikp", mat, self.c))

    def right_const(self, mat) -> "JetMatrix":
        """Self times constant matrix."""
        mat = np.asarray(mat, dtype=complex)
        return JetMatrix(self.ctx, np.einsum("ijp,jk->ikp", self.c, mat))

    def derivative(self, var: int) -> "JetMatrix":
        src, fac = self.ctx.deriv_table(var)
        lower = series_context(self.ctx.num_vars, self.ctx.trunc - 1)
        return JetMatrix(lower, self.c[:, :, src] * fac)

    def truncate(self, trunc: int) -> "JetMatrix":
        if trunc > self.ctx.trunc:
            raise ValueError("cannot raise the truncation order of a matrix")
        lower = series_context(self.ctx.num_vars, trunc)
        return JetMatrix(lower, self.c[:, :, : lower.size])

    def constant_term(self) -> np.ndarray:
        return self.c[:, :, 0].copy()

    def coeff(self, alpha) -> np.ndarray:
        alpha = tuple(alpha)
        if sum(alpha) > self.ctx.trunc:
            raise ValueError(f"index {alpha} exceeds truncation {self.ctx.trunc}")
        return self.c[:, :, self.ctx.rank[alpha]].copy()

    def extract(self, alpha) -> np.ndarray:
        """Matrix of derivative values at the base point (alpha! * coefficient)."""
        alpha = tuple(alpha)
        fac = 1
        for a in alpha:
            fac *= math.factorial(a)
        return fac * self.coeff(alpha)

    def inverse(self) -> "JetMatrix":
        """Multiplicative inverse as a series, via Newton iteration.

        Seeded with the numeric inverse of the constant term; each step
        doubles the number of correct orders.
        """
        return jet_matrix_inverse(self)

    def __repr__(self):
        return (
            f"JetMatrix(shape={self.shape}, vars={self.ctx.num_vars}, "
            f"trunc={self.ctx.trunc})"
        )


def jet_matrix_inverse(m: JetMatrix, cond_limit: float = 1e12) -> JetMatrix:
    rows, cols = m.shape
    if rows != cols:
        raise ValueError(f"matrix is {rows}x{cols}, not square")
    a0 = m.constant_term()
    cond = np.linalg.cond(a0)
    if not np.isfinite(cond) or cond > cond_limit:
        raise ValueError(
            f"constant-term matrix is numerically singular (cond ~ {cond:.3e})"
        )
    x = JetMatrix.from_constant(m.ctx, np.linalg.inv(a0))
    ident = JetMatrix.identity(m.ctx, rows)
    steps = max(1, math.ceil(math.log2(m.ctx.trunc + 1)))
    for _ in range(steps):
        x = x + x @ (ident - m @ x)
    return x
