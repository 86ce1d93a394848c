"""Matrix-valued reproducing kernels: a small expression language and evaluators.

A kernel ``K(z, w)`` is holomorphic in ``z = (z1..zm)`` and anti-holomorphic
in ``w``; the conjugated arguments are modeled as independent variables
``wb1..wbm`` so that every mixed derivative becomes a plain Taylor
coefficient.  Evaluation substitutes ``wb_i = conj(w_i)``.

Expression grammar (whitespace-insensitive, no implicit multiplication,
no unary minus outside exponents)::

    expr   := term (("+" | "-") term)*
    term   := factor (("*" | "/") factor)*
    factor := base ("^" snumber)?
    base   := number | "z" int | "wb" int | "(" expr ")"
            | "exp(" expr ")" | "log(" expr ")"
    snumber := ("-")? number

Kernel file format: header lines ``m = <int>``, optional ``r = <int>``
(default 1) and ``label = <text>``, followed either by ``K = bergman(a1,
..., am)`` or by r^2 lines ``K[i][j] = <expr>`` with 1-based indices.
Blank lines and ``#`` comments are ignored.  ``parse_kernel`` also accepts
a bare expression, giving a rank-1 kernel with ``m`` inferred from the
variables used.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from .jets import JetMatrix, JetSeries, series_context


class ParseError(ValueError):
    """Syntax or validation error, carrying a 1-based line/column position."""

    def __init__(self, message: str, line: int = None, col: int = None):
        self.line = line
        self.col = col
        if line is not None:
            message = f"line {line}, col {col}: {message}"
        super().__init__(message)


class DomainError(ValueError):
    """Kernel evaluation left the domain of a pow/log/division subterm."""


# --------------------------------------------------------------------------
# AST


@dataclass(frozen=True)
class Num:
    value: complex
    pos: tuple = field(default=None, compare=False)


@dataclass(frozen=True)
class Var:
    kind: str  # "z" or "wb"
    index: int  # 1-based
    pos: tuple = field(default=None, compare=False)


@dataclass(frozen=True)
class BinOp:
    op: str  # + - * /
    left: object
    right: object
    pos: tuple = field(default=None, compare=False)


@dataclass(frozen=True)
class Pow:
    base: object
    exponent: float
    pos: tuple = field(default=None, compare=False)


@dataclass(frozen=True)
class Call:
    func: str  # "exp" or "log"
    arg: object
    pos: tuple = field(default=None, compare=False)


def max_var_index(node) -> int:
    if isinstance(node, Var):
        return node.index
    if isinstance(node, BinOp):
        return max(max_var_index(node.left), max_var_index(node.right))
    if isinstance(node, Pow):
        return max_var_index(node.base)
    if isinstance(node, Call):
        return max_var_index(node.arg)
    return 0


def uses_wb(node) -> bool:
    if isinstance(node, Var):
        return node.kind == "wb"
    if isinstance(node, BinOp):
        return uses_wb(node.left) or uses_wb(node.right)
    if isinstance(node, Pow):
        return uses_wb(node.base)
    if isinstance(node, Call):
        return uses_wb(node.arg)
    return False


def _fmt_number(x) -> str:
    x = complex(x)
    if x.imag == 0:
        r = x.real
        if r == int(r) and abs(r) < 1e15:
            return str(int(r))
        return repr(r)
    # complex literals arise only in programmatically built kernels; this
    # rendering is not part of the text grammar
    return f"complex({x.real!r},{x.imag!r})"


def pretty(node) -> str:
    """Render an expression; reparsing the result gives an equal tree."""
    if isinstance(node, Num):
        return _fmt_number(node.value)
    if isinstance(node, Var):
        return f"{node.kind}{node.index}"
    if isinstance(node, BinOp):
        return f"({pretty(node.left)} {node.op} {pretty(node.right)})"
    if isinstance(node, Pow):
        e = node.exponent
        es = str(int(e)) if e == int(e) else repr(e)
        return f"({pretty(node.base)})^{es}"
    if isinstance(node, Call):
        return f"{node.func}({pretty(node.arg)})"
    raise TypeError(f"not an expression node: {node!r}")


# --------------------------------------------------------------------------
# Tokenizer / parser

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<number>\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?"
    r"|\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>[-+*/^(),]))"
)


class _Tokenizer:
    def __init__(self, text: str, line: int = 1, col_offset: int = 0):
        self.text = text
        self.pos = 0
        self.line = line
        self.col_offset = col_offset
        self.current = None
        self.advance()

    def _position(self, idx: int) -> tuple:
        return (self.line, self.col_offset + idx + 1)

    def advance(self):
        if self.pos >= len(self.text):
            self.current = ("eof", "", self._position(self.pos))
            return
        m = _TOKEN_RE.match(self.text, self.pos)
        if m is None or m.end() == self.pos:
            stripped = self.text[self.pos :].lstrip()
            idx = len(self.text) - len(stripped)
            if not stripped:
                self.current = ("eof", "", self._position(len(self.text)))
                return
            raise ParseError(
                f"unexpected character {stripped[0]!r}", *self._position(idx)
            )
        start = m.start(m.lastgroup)
        tok = (m.lastgroup, m.group(m.lastgroup), self._position(start))
        self.pos = m.end()
        self.current = tok


_VAR_RE = re.compile(r"(z|wb)([0-9]+)$")


class _Parser:
    def __init__(self, text: str, line: int = 1, col_offset: int = 0):
        self.toks = _Tokenizer(text, line, col_offset)

    def parse(self):
        node = self.expr()
        kind, value, pos = self.toks.current
        if kind != "eof":
            raise ParseError(f"unexpected trailing input {value!r}", *pos)
        return node

    def expr(self):
        node = self.term()
        while True:
            kind, value, pos = self.toks.current
            if kind == "op" and value in "+-":
                self.toks.advance()
                node = BinOp(value, node, self.term(), pos)
            else:
                return node

    def term(self):
        node = self.factor()
        while True:
            kind, value, pos = self.toks.current
            if kind == "op" and value in "*/":
                self.toks.advance()
                node = BinOp(value, node, self.factor(), pos)
            else:
                return node

    def factor(self):
        node = self.base()
        kind, value, pos = self.toks.current
        if kind == "op" and value == "^":
            self.toks.advance()
            node = Pow(node, self.snumber(), pos)
        return node

    def snumber(self) -> float:
        kind, value, pos = self.toks.current
        sign = 1.0
        if kind == "op" and value == "-":
            sign = -1.0
            self.toks.advance()
            kind, value, pos = self.toks.current
        if kind != "number":
            raise ParseError("expected a numeric exponent", *pos)
        self.toks.advance()
        return sign * float(value)

    def base(self):
        kind, value, pos = self.toks.current
        if kind == "number":
            self.toks.advance()
            return Num(complex(float(value)), pos)
        if kind == "ident":
            m = _VAR_RE.match(value)
            if m:
                self.toks.advance()
                return Var(m.group(1), int(m.group(2)), pos)
            if value in ("exp", "log"):
                self.toks.advance()
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(value, arg, pos)
            raise ParseError(f"unknown identifier {value!r}", *pos)
        if kind == "op" and value == "(":
            self.toks.advance()
            node = self.expr()
            self.expect(")")
            return node
        shown = value if value else "end of input"
        raise ParseError(f"expected a value, got {shown!r}", *pos)

    def expect(self, op: str):
        kind, value, pos = self.toks.current
        if kind != "op" or value != op:
            shown = value if value else "end of input"
            raise ParseError(f"expected {op!r}, got {shown!r}", *pos)
        self.toks.advance()


def parse_expression(text: str, line: int = 1, col_offset: int = 0):
    """Parse a single kernel expression into an AST."""
    return _Parser(text, line, col_offset).parse()


# --------------------------------------------------------------------------
# Kernel specifications


def _validate_entry(node, m: int, line: int = None):
    idx = max_var_index(node)
    if idx > m:
        raise ParseError(
            f"variable index {idx} out of range for m = {m}", line, 1
        )


class KernelSpec:
    """An r x r matrix of kernel expressions in z1..zm and wb1..wbm."""

    def __init__(self, m: int, r: int, entries, label: str = ""):
        if m < 1 or r < 1:
            raise ValueError("need m >= 1 and r >= 1")
        self.m = m
        self.r = r
        self.entries = tuple(tuple(row) for row in entries)
        if len(self.entries) != r or any(len(row) != r for row in self.entries):
            raise ValueError(f"entries must form an {r}x{r} grid")
        self.label = label
        for row in self.entries:
            for node in row:
                _validate_entry(node, m)

    # -- evaluation -------------------------------------------------------

    def eval_point(self, z, w) -> np.ndarray:
        """Plain value K(z, w) as an (r, r) complex matrix."""
        z = np.asarray(z, dtype=complex)
        wb = np.conj(np.asarray(w, dtype=complex))
        if z.shape != (self.m,) or wb.shape != (self.m,):
            raise ValueError(f"points must have length m = {self.m}")
        out = np.empty((self.r, self.r), dtype=complex)
        for i in range(self.r):
            for j in range(self.r):
                out[i, j] = _eval_scalar(self.entries[i][j], z, wb)
        return out

    def eval_jet(
        self, z0, w0, trunc: int, vary_z: bool = True, vary_w: bool = True
    ) -> JetMatrix:
        """Jet of K around (z0, w0) as a matrix of series in 2m variables.

        Variables 0..m-1 are the holomorphic displacements of z; variables
        m..2m-1 are the displacements of conj(w).  ``extract`` with the
        concatenated index (alpha, beta) yields the mixed derivative taken
        alpha times in z and beta times in conj(w).  With ``vary_z`` or
        ``vary_w`` off, the corresponding argument is held fixed.
        """
        z0 = np.asarray(z0, dtype=complex)
        w0 = np.asarray(w0, dtype=complex)
        if z0.shape != (self.m,) or w0.shape != (self.m,):
            raise ValueError(f"points must have length m = {self.m}")
        ctx = series_context(2 * self.m, trunc)
        zs, wbs = [], []
        for i in range(self.m):
            zi = JetSeries.constant(ctx, z0[i])
            if vary_z:
                zi = zi + JetSeries.variable(ctx, i)
            zs.append(zi)
            wi = JetSeries.constant(ctx, np.conj(w0[i]))
            if vary_w:
                wi = wi + JetSeries.variable(ctx, self.m + i)
            wbs.append(wi)
        entries = [
            [_eval_jet_node(self.entries[i][j], zs, wbs) for j in range(self.r)]
            for i in range(self.r)
        ]
        return JetMatrix.from_entries(entries)

    # -- structure --------------------------------------------------------

    def pretty(self) -> str:
        lines = [f"m = {self.m}", f"r = {self.r}"]
        if self.label:
            lines.append(f"label = {self.label}")
        for i in range(self.r):
            for j in range(self.r):
                lines.append(f"K[{i + 1}][{j + 1}] = {pretty(self.entries[i][j])}")
        return "\n".join(lines) + "\n"

    def check_hermitian(self, points=None, rng=None, tol: float = 1e-8) -> float:
        """Spot-check K(z, w) == K(w, z)* at sample point pairs.

        Returns the largest deviation found; raises if it exceeds ``tol``.
        """
        if points is None:
            rng = rng or np.random.default_rng(7)
            points = []
            for _ in range(3):
                z = 0.4 * (rng.random(self.m) - 0.5 + 1j * (rng.random(self.m) - 0.5))
                w = 0.4 * (rng.random(self.m) - 0.5 + 1j * (rng.random(self.m) - 0.5))
                points.append((z, w))
        worst = 0.0
        for z, w in points:
            a = self.eval_point(z, w)
            b = self.eval_point(w, z)
            worst = max(worst, float(np.max(np.abs(a - b.conj().T))))
        if worst > tol:
            raise ValueError(
                f"kernel is not Hermitian-symmetric: deviation {worst:.3e}"
            )
        return worst

    def __repr__(self):
        tag = f" {self.label!r}" if self.label else ""
        return f"KernelSpec(m={self.m}, r={self.r}{tag})"


def _eval_scalar(node, z: np.ndarray, wb: np.ndarray) -> complex:
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        vals = z if node.kind == "z" else wb
        return complex(vals[node.index - 1])
    if isinstance(node, BinOp):
        a = _eval_scalar(node.left, z, wb)
        b = _eval_scalar(node.right, z, wb)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        if abs(b) < 1e-300:
            raise DomainError("division by zero in kernel expression")
        return a / b
    if isinstance(node, Pow):
        base = _eval_scalar(node.base, z, wb)
        if abs(base) < 1e-300:
            raise DomainError("zero base in kernel power")
        return base ** node.exponent
    if isinstance(node, Call):
        arg = _eval_scalar(node.arg, z, wb)
        if node.func == "exp":
            return np.exp(arg)
        if abs(arg) < 1e-300:
            raise DomainError("log of zero in kernel expression")
        return np.log(arg)
    raise TypeError(f"not an expression node: {node!r}")


def _eval_jet_node(node, zs, wbs) -> JetSeries:
    ctx = zs[0].ctx
    if isinstance(node, Num):
        return JetSeries.constant(ctx, node.value)
    if isinstance(node, Var):
        vals = zs if node.kind == "z" else wbs
        return vals[node.index - 1]
    if isinstance(node, BinOp):
        a = _eval_jet_node(node.left, zs, wbs)
        b = _eval_jet_node(node.right, zs, wbs)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        try:
            return a / b
        except ValueError as exc:
            raise DomainError(f"at {node.pos}: {exc}") from None
    if isinstance(node, Pow):
        base = _eval_jet_node(node.base, zs, wbs)
        try:
            return base.power(node.exponent)
        except ValueError as exc:
            raise DomainError(f"at {node.pos}: {exc}") from None
    if isinstance(node, Call):
        arg = _eval_jet_node(node.arg, zs, wbs)
        try:
            return arg.exp() if node.func == "exp" else arg.log()
        except ValueError as exc:
            raise DomainError(f"at {node.pos}: {exc}") from None
    raise TypeError(f"not an expression node: {node!r}")


def eval_kernel_jet(
    spec: KernelSpec, z0, w0, trunc: int, vary_z: bool = True, vary_w: bool = True
) -> JetMatrix:
    """Jet of the kernel around (z0, w0); see ``KernelSpec.eval_jet``."""
    return spec.eval_jet(z0, w0, trunc, vary_z=vary_z, vary_w=vary_w)


# --------------------------------------------------------------------------
# Parsing kernel files

_HEADER_RE = re.compile(r"^\s*(m|r|label)\s*=\s*(.*?)\s*$")
_ENTRY_RE = re.compile(r"^\s*K\s*\[\s*(\d+)\s*\]\s*\[\s*(\d+)\s*\]\s*=\s*(.*?)\s*$")
_WHOLE_RE = re.compile(r"^\s*K\s*=\s*(.*?)\s*$")
_BERGMAN_RE = re.compile(r"^bergman\s*\(\s*(.*?)\s*\)\s*$")


def parse_kernel(text: str) -> KernelSpec:
    """Parse kernel-file text, or a bare expression, into a KernelSpec."""
    lines = text.splitlines()
    has_header = any(_HEADER_RE.match(ln) for ln in lines)
    if not has_header:
        node = parse_expression(text)
        m = max(1, max_var_index(node))
        return KernelSpec(m, 1, [[node]])

    m = r = None
    label = ""
    entries = {}
    whole = None
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        hm = _HEADER_RE.match(line)
        if hm:
            key, value = hm.group(1), hm.group(2)
            if key == "label":
                label = value
            else:
                try:
                    parsed = int(value)
                except ValueError:
                    raise ParseError(f"{key} must be an integer", lineno, 1)
                if key == "m":
                    m = parsed
                else:
                    r = parsed
            continue
        em = _ENTRY_RE.match(line)
        if em:
            i, j = int(em.group(1)), int(em.group(2))
            expr_text = em.group(3)
            col0 = line.index(expr_text) if expr_text else len(line)
            entries[(i, j)] = parse_expression(expr_text, lineno, col0)
            continue
        wm = _WHOLE_RE.match(line)
        if wm:
            whole = (wm.group(1), lineno)
            continue
        raise ParseError(f"unrecognized line: {line.strip()!r}", lineno, 1)

    if m is None:
        raise ParseError("missing header line 'm = <int>'", 1, 1)
    if r is None:
        r = 1

    if whole is not None:
        value, lineno = whole
        bm = _BERGMAN_RE.match(value)
        if not bm:
            raise ParseError(
                "only 'K = bergman(a1,...,am)' is supported for whole-matrix "
                "assignment", lineno, 1,
            )
        try:
            weights = [float(x) for x in bm.group(1).split(",")]
        except ValueError:
            raise ParseError("bergman weights must be numbers", lineno, 1)
        if len(weights) != m:
            raise ParseError(
                f"bergman needs {m} weights, got {len(weights)}", lineno, 1
            )
        spec = builtin_bergman(weights)
        spec.label = label or spec.label
        return spec

    grid = []
    for i in range(1, r + 1):
        row = []
        for j in range(1, r + 1):
            if (i, j) not in entries:
                raise ParseError(f"missing entry K[{i}][{j}]", len(lines), 1)
            node = entries[(i, j)]
            idx = max_var_index(node)
            if idx > m:
                raise ParseError(f"variable index {idx} out of range for m = {m}")
            row.append(node)
        grid.append(row)
    return KernelSpec(m, r, grid, label=label)


# --------------------------------------------------------------------------
# Built-in kernels and kernel algebra


def builtin_bergman(weights) -> KernelSpec:
    """Rank-1 product kernel prod_i (1 - z_i*wb_i)^(-weights[i]) on the polydisc."""
    weights = [float(w) for w in np.atleast_1d(weights)]
    if any(w < 0 for w in weights):
        raise ValueError("bergman weights must be >= 0")
    m = len(weights)
    node = None
    for i, lam in enumerate(weights, start=1):
        if lam == 0:
            continue
        factor = Pow(
            BinOp("-", Num(1.0), BinOp("*", Var("z", i), Var("wb", i))), -lam
        )
        node = factor if node is None else BinOp("*", node, factor)
    if node is None:
        node = Num(1.0)
    label = "bergman(" + ",".join(repr(w) for w in weights) + ")"
    return KernelSpec(m, 1, [[node]], label=label)


def _linear_combination(kind: str, coeffs, constant) -> object:
    """AST for constant + sum_j coeffs[j] * <kind>(j+1), skipping zeros."""
    node = None
    if constant != 0:
        node = Num(complex(constant))
    for j, c in enumerate(coeffs):
        if c == 0:
            continue
        term = Var(kind, j + 1)
        if c != 1:
            term = BinOp("*", Num(complex(c)), term)
        node = term if node is None else BinOp("+", node, term)
    return node if node is not None else Num(0.0)


def _substitute(node, z_subs, wb_subs):
    if isinstance(node, Num):
        return node
    if isinstance(node, Var):
        table = z_subs if node.kind == "z" else wb_subs
        return table[node.index - 1]
    if isinstance(node, BinOp):
        return BinOp(
            node.op,
            _substitute(node.left, z_subs, wb_subs),
            _substitute(node.right, z_subs, wb_subs),
            node.pos,
        )
    if isinstance(node, Pow):
        return Pow(_substitute(node.base, z_subs, wb_subs), node.exponent, node.pos)
    if isinstance(node, Call):
        return Call(node.func, _substitute(node.arg, z_subs, wb_subs), node.pos)
    raise TypeError(f"not an expression node: {node!r}")


@dataclass(frozen=True)
class AffineChart:
    """An affine coordinate change flattening a submanifold.

    Maps ambient coordinates to chart coordinates by ``u = linear @ z +
    offset``; the submanifold of interest becomes ``u_1 = ... = u_d = 0``.
    """

    linear: tuple
    offset: tuple
    d: int

    @classmethod
    def from_arrays(cls, linear, offset, d: int) -> "AffineChart":
        linear = np.asarray(linear, dtype=complex)
        offset = np.asarray(offset, dtype=complex)
        m = linear.shape[0]
        if linear.shape != (m, m):
            raise ValueError("chart linear part must be square")
        if offset.shape != (m,):
            raise ValueError("chart offset length must match the linear part")
        if not 1 <= d <= m:
            raise ValueError(f"codimension d={d} out of range for m={m}")
        cond = np.linalg.cond(linear)
        if not np.isfinite(cond) or cond > 1e12:
            raise ValueError("chart linear part is numerically singular")
        return cls(
            tuple(map(tuple, linear.tolist())), tuple(offset.tolist()), d
        )

    @property
    def m(self) -> int:
        return len(self.offset)

    def linear_array(self) -> np.ndarray:
        return np.array(self.linear, dtype=complex)

    def offset_array(self) -> np.ndarray:
        return np.array(self.offset, dtype=complex)

    def inverse_parts(self):
        """(A, b) with z = A @ u + b inverting the chart."""
        L = self.linear_array()
        A = np.linalg.inv(L)
        b = -A @ self.offset_array()
        return A, b

    def apply(self, z) -> np.ndarray:
        return self.linear_array() @ np.asarray(z, dtype=complex) + self.offset_array()

    def apply_inverse(self, u) -> np.ndarray:
        A, b = self.inverse_parts()
        return A @ np.asarray(u, dtype=complex) + b


def identity_chart(m: int, d: int) -> AffineChart:
    return AffineChart.from_arrays(np.eye(m), np.zeros(m), d)


def diagonal_chart(m: int, style: str = "pairwise") -> AffineChart:
    """Affine chart flattening the diagonal of the m-fold polydisc.

    ``style="pairwise"`` uses consecutive differences: ``u_i = z_i -
    z_{i+1}`` for i < m and ``u_m = z_m``, so ``z_i = sum_{j >= i} u_j``.
    Its inverse nests the chart variables, which makes the diagonal
    curvature assemble cumulative sums of the kernel weights.

    ``style="anchored"`` subtracts the last coordinate: ``u_i = z_i - z_m``
    for i < m and ``u_m = z_m``.  Its pullback has the property that chart
    transverse derivatives coincide with the ambient derivatives along
    z_1..z_{m-1}, which is the frame in which the order-two quotient kernel
    of the tridisc is usually written down.
    """
    if m < 2:
        raise ValueError("diagonal chart needs m >= 2")
    L = np.zeros((m, m))
    for i in range(m - 1):
        L[i, i] = 1.0
        if style == "pairwise":
            L[i, i + 1] = -1.0
        elif style == "anchored":
            L[i, m - 1] = -1.0
        else:
            raise ValueError(f"unknown diagonal chart style {style!r}")
    L[m - 1, m - 1] = 1.0
    return AffineChart.from_arrays(L, np.zeros(m), m - 1)


def pullback_affine(spec: KernelSpec, chart: AffineChart) -> KernelSpec:
    """Kernel in chart coordinates: K'(u, v) = K(inv(u), inv(v))."""
    if chart.m != spec.m:
        raise ValueError(f"chart dimension {chart.m} != kernel dimension {spec.m}")
    A, b = chart.inverse_parts()
    z_subs = [_linear_combination("z", A[i], b[i]) for i in range(spec.m)]
    wb_subs = [
        _linear_combination("wb", np.conj(A[i]), np.conj(b[i])) for i in range(spec.m)
    ]
    entries = [
        [_substitute(node, z_subs, wb_subs) for node in row] for row in spec.entries
    ]
    label = f"{spec.label}|chart" if spec.label else ""
    return KernelSpec(spec.m, spec.r, entries, label=label)


def gauge_scale(spec: KernelSpec, psi) -> KernelSpec:
    """The kernel psi(z) K(z, w) conj(psi(w)) for a holomorphic expression psi.

    ``psi`` is an AST in the z variables only.
    """
    if uses_wb(psi):
        raise ValueError("gauge factor must be holomorphic (z variables only)")
    if max_var_index(psi) > spec.m:
        raise ValueError("gauge factor uses variables beyond the kernel dimension")
    psi_bar = _conjugate_to_wb(psi)
    entries = [
        [BinOp("*", BinOp("*", psi, node), psi_bar) for node in row]
        for row in spec.entries
    ]
    label = f"{spec.label}|gauge" if spec.label else ""
    return KernelSpec(spec.m, spec.r, entries, label=label)


def _conjugate_to_wb(node):
    """conj(psi(w)) as an expression in wb: conjugate literals, z -> wb."""
    if isinstance(node, Num):
        return Num(np.conj(node.value), node.pos)
    if isinstance(node, Var):
        if node.kind != "z":
            raise ValueError("gauge factor must use z variables only")
        return Var("wb", node.index, node.pos)
    if isinstance(node, BinOp):
        return BinOp(
            node.op, _conjugate_to_wb(node.left), _conjugate_to_wb(node.right), node.pos
        )
    if isinstance(node, Pow):
        return Pow(_conjugate_to_wb(node.base), node.exponent, node.pos)
    if isinstance(node, Call):
        return Call(node.func, _conjugate_to_wb(node.arg), node.pos)
    raise TypeError(f"not an expression node: {node!r}")


def conjugate_by_unitary(spec: KernelSpec, u) -> KernelSpec:
    """The kernel U K(z, w) U* for a constant matrix U."""
    u = np.asarray(u, dtype=complex)
    r = spec.r
    if u.shape != (r, r):
        raise ValueError(f"matrix must be {r}x{r}")
    entries = []
    for i in range(r):
        row = []
        for j in range(r):
            node = None
            for a in range(r):
                for bidx in range(r):
                    c = u[i, a] * np.conj(u[j, bidx])
                    if abs(c) < 1e-15:
                        continue
                    term = BinOp("*", Num(c), spec.entries[a][bidx])
                    node = term if node is None else BinOp("+", node, term)
            row.append(node if node is not None else Num(0.0))
        entries.append(row)
    label = f"{spec.label}|conj" if spec.label else ""
    return KernelSpec(spec.m, r, entries, label=label)


def matrix_combination(scalar_specs, matrices, label: str = "") -> KernelSpec:
    """The matrix kernel sum_s matrices[s] * k_s(z, w) from rank-1 kernels.

    Positive definiteness holds when each matrix is Hermitian PSD and each
    scalar kernel is positive definite; this is not checked globally.
    """
    if len(scalar_specs) != len(matrices) or not scalar_specs:
        raise ValueError("need one matrix per scalar kernel")
    m = scalar_specs[0].m
    r = np.asarray(matrices[0]).shape[0]
    for s in scalar_specs:
        if s.r != 1 or s.m != m:
            raise ValueError("scalar kernels must be rank 1 with a common m")
    entries = []
    for i in range(r):
        row = []
        for j in range(r):
            node = None
            for s_spec, mat in zip(scalar_specs, matrices):
                c = complex(np.asarray(mat, dtype=complex)[i, j])
                if abs(c) < 1e-15:
                    continue
                term = BinOp("*", Num(c), s_spec.entries[0][0])
                node = term if node is None else BinOp("+", node, term)
            row.append(node if node is not None else Num(0.0))
        entries.append(row)
    return KernelSpec(m, r, entries, label=label)


def direct_sum(spec_a: KernelSpec, spec_b: KernelSpec, label: str = "") -> KernelSpec:
    """Block-diagonal kernel diag(K_a, K_b)."""
    if spec_a.m != spec_b.m:
        raise ValueError("direct sum requires a common ambient dimension")
    r = spec_a.r + spec_b.r
    zero = Num(0.0)
    entries = [[zero] * r for _ in range(r)]
    for i in range(spec_a.r):
        for j in range(spec_a.r):
            entries[i][j] = spec_a.entries[i][j]
    for i in range(spec_b.r):
        for j in range(spec_b.r):
            entries[spec_a.r + i][spec_a.r + j] = spec_b.entries[i][j]
    return KernelSpec(spec_a.m, r, entries, label=label)
