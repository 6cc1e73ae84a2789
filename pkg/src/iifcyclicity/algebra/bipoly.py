"""Exact bivariate polynomials.

A :class:`BiPoly` maps exponent pairs ``(i, j)`` (for ``x**i * y**j``) to
exact coefficients. Coefficients may be ``Fraction``, :class:`QuadraticNumber`
or :class:`ParamPoly`; floats are accepted on input and converted exactly
through their decimal repr.
"""
from __future__ import annotations

import contextlib
from fractions import Fraction
from types import MappingProxyType
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from ..errors import DegreeLimitError
from .numbers import ParamPoly, QuadraticNumber, parse_expression, to_float, to_fraction

__all__ = [
    "BiPoly",
    "poly_divide_exact",
    "poly_eval",
    "get_max_degree",
    "set_max_degree",
    "max_degree",
    "MONOMIAL_ORDERS",
    "FloatPoly",
]

_MAX_DEGREE = 64

# Sort keys: the largest key is the leading monomial.
MONOMIAL_ORDERS: dict[str, Callable[[tuple[int, int]], tuple]] = {
    "grlex": lambda m: (m[0] + m[1], m[0]),  # graded, x before y
    "grlex_y": lambda m: (m[0] + m[1], m[1]),
    "lex": lambda m: (m[0], m[1]),
    "lex_y": lambda m: (m[1], m[0]),
}


def get_max_degree() -> int:
    return _MAX_DEGREE


def set_max_degree(n: int) -> None:
    """Set the soft degree limit enforced by products and powers."""
    global _MAX_DEGREE
    if n < 1:
        raise ValueError("degree limit must be positive")
    _MAX_DEGREE = int(n)


@contextlib.contextmanager
def max_degree(n: int):
    old = get_max_degree()
    set_max_degree(n)
    try:
        yield
    finally:
        set_max_degree(old)


def _coerce_coeff(c):
    if isinstance(c, (Fraction, QuadraticNumber)):
        return c
    if isinstance(c, ParamPoly):
        return ParamPoly.simplify(c)
    if isinstance(c, str):
        return parse_expression(c)
    return to_fraction(c)


def _is_scalar(c) -> bool:
    return isinstance(c, (int, Fraction, QuadraticNumber, ParamPoly, float)) and not isinstance(
        c, bool
    )


class BiPoly:
    """Immutable polynomial in x and y with exact coefficients.

    Parameters
    ----------
    terms : mapping
        ``{(i, j): coefficient}``. Zero coefficients are dropped.

    Examples
    --------
    >>> x, y = BiPoly.x(), BiPoly.y()
    >>> f = y**2 - x**2 + x**3
    >>> f.degree
    3
    """

    __slots__ = ("_terms", "_hash")

    def __init__(self, terms: Mapping[tuple[int, int], object] | None = None):
        clean: dict[tuple[int, int], object] = {}
        for (i, j), c in (terms or {}).items():
            if i < 0 or j < 0:
                raise ValueError(f"negative exponent ({i}, {j})")
            c = _coerce_coeff(c)
            if c != 0:
                clean[(int(i), int(j))] = c
        object.__setattr__(self, "_terms", clean)
        object.__setattr__(self, "_hash", None)

    @classmethod
    def _raw(cls, terms: dict) -> "BiPoly":
        # trusted constructor: terms already clean
        obj = cls.__new__(cls)
        object.__setattr__(obj, "_terms", {m: c for m, c in terms.items() if c != 0})
        object.__setattr__(obj, "_hash", None)
        return obj

    def __setattr__(self, key, value):
        raise AttributeError("BiPoly is immutable")

    def __reduce__(self):
        return BiPoly, (self._terms,)

    # -- constructors -----------------------------------------------------------
    @classmethod
    def x(cls) -> "BiPoly":
        return cls._raw({(1, 0): Fraction(1)})

    @classmethod
    def y(cls) -> "BiPoly":
        return cls._raw({(0, 1): Fraction(1)})

    @classmethod
    def const(cls, c) -> "BiPoly":
        return cls({(0, 0): c})

    @classmethod
    def zero(cls) -> "BiPoly":
        return cls._raw({})

    @classmethod
    def from_triples(cls, triples: Iterable[Sequence], env: Mapping[str, object] | None = None):
        """Build from ``[i, j, coeff]`` triples; coefficients may be expressions.

        Repeated exponent pairs are summed.
        """
        acc: dict = {}
        for k, t in enumerate(triples):
            if len(t) != 3:
                raise ValueError(f"term {k}: expected [i, j, coeff], got {t!r}")
            i, j, c = t
            if not isinstance(i, int) or not isinstance(j, int) or i < 0 or j < 0:
                raise ValueError(f"term {k}: exponents must be nonnegative integers")
            c = parse_expression(c, env) if isinstance(c, str) else _coerce_coeff(c)
            acc[(i, j)] = acc.get((i, j), 0) + c
        return cls(acc)

    @classmethod
    def parse(cls, text: str, env: Mapping[str, object] | None = None) -> "BiPoly":
        """Parse a polynomial expression in ``x`` and ``y``, e.g. ``"y^2-(1-x)^2*(1+x)"``."""
        scope = {"x": cls.x(), "y": cls.y()}
        scope.update(env or {})
        val = parse_expression(text, scope)
        return val if isinstance(val, BiPoly) else cls.const(val)

    def to_triples(self) -> list[list]:
        """Serialize as sorted ``[i, j, "num/den"]`` triples."""
        out = []
        for (i, j) in sorted(self._terms):
            c = self._terms[(i, j)]
            out.append([i, j, str(c)])
        return out

    # -- inspection -------------------------------------------------------------
    @property
    def terms(self) -> Mapping[tuple[int, int], object]:
        return MappingProxyType(self._terms)

    @property
    def degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        return max((i + j for i, j in self._terms), default=-1)

    def low_degree(self) -> int:
        """Lowest total degree present (order of vanishing at the origin)."""
        return min((i + j for i, j in self._terms), default=-1)

    def is_zero(self) -> bool:
        return not self._terms

    def coefficient(self, i: int, j: int):
        return self._terms.get((i, j), Fraction(0))

    def leading_term(self, order: str = "grlex"):
        if not self._terms:
            raise ValueError("zero polynomial has no leading term")
        m = max(self._terms, key=MONOMIAL_ORDERS[order])
        return m, self._terms[m]

    def homogeneous_part(self, k: int) -> "BiPoly":
        return BiPoly._raw({m: c for m, c in self._terms.items() if m[0] + m[1] == k})

    def truncate(self, k: int) -> "BiPoly":
        """Drop all terms of total degree above ``k``."""
        return BiPoly._raw({m: c for m, c in self._terms.items() if m[0] + m[1] <= k})

    def parameters(self) -> set[str]:
        names: set[str] = set()
        for c in self._terms.values():
            if isinstance(c, ParamPoly):
                names |= c.symbols()
        return names

    def is_parametric(self) -> bool:
        return any(isinstance(c, ParamPoly) for c in self._terms.values())

    # -- arithmetic ---------------------------------------------------------------
    def _lift(self, other):
        if isinstance(other, BiPoly):
            return other
        if _is_scalar(other):
            return BiPoly.const(other)
        return None

    def __add__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        acc = dict(self._terms)
        for m, c in o._terms.items():
            acc[m] = acc[m] + c if m in acc else c
        return BiPoly._raw(acc)

    __radd__ = __add__

    def __neg__(self):
        return BiPoly._raw({m: -c for m, c in self._terms.items()})

    def __sub__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        return o + (-self)

    def __mul__(self, other):
        if _is_scalar(other):
            c = _coerce_coeff(other)
            return BiPoly._raw({m: v * c for m, v in self._terms.items()})
        if not isinstance(other, BiPoly):
            return NotImplemented
        if self._terms and other._terms and self.degree + other.degree > _MAX_DEGREE:
            raise DegreeLimitError(
                f"product degree {self.degree + other.degree} exceeds limit {_MAX_DEGREE}"
            )
        acc: dict = {}
        for (i1, j1), c1 in self._terms.items():
            for (i2, j2), c2 in other._terms.items():
                m = (i1 + i2, j1 + j2)
                v = c1 * c2
                acc[m] = acc[m] + v if m in acc else v
        return BiPoly._raw(acc)

    def __rmul__(self, other):
        return self.__mul__(other)

    def __truediv__(self, other):
        """Division by a nonzero scalar only; use :func:`poly_divide_exact` otherwise."""
        if not _is_scalar(other):
            return NotImplemented
        c = _coerce_coeff(other)
        if c == 0:
            raise ZeroDivisionError("division by zero")
        return BiPoly._raw({m: v / c for m, v in self._terms.items()})

    def __pow__(self, k):
        if not isinstance(k, int) or k < 0:
            return NotImplemented
        if k == 0:
            return BiPoly.const(1)
        if self._terms and self.degree * k > _MAX_DEGREE:
            raise DegreeLimitError(f"power degree {self.degree * k} exceeds limit {_MAX_DEGREE}")
        result, base = BiPoly.const(1), self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def __eq__(self, other):
        o = self._lift(other)
        if o is None:
            return NotImplemented
        return self._terms == o._terms

    def __hash__(self):
        if self._hash is None:
            object.__setattr__(self, "_hash", hash(frozenset(self._terms.items())))
        return self._hash

    def __bool__(self):
        return bool(self._terms)

    # -- calculus and substitutions -----------------------------------------------------
    def diff(self, var: str) -> "BiPoly":
        if var == "x":
            return BiPoly._raw({(i - 1, j): c * i for (i, j), c in self._terms.items() if i})
        if var == "y":
            return BiPoly._raw({(i, j - 1): c * j for (i, j), c in self._terms.items() if j})
        raise ValueError(f"unknown variable {var!r}")

    def map_coeffs(self, fn) -> "BiPoly":
        return BiPoly({m: fn(c) for m, c in self._terms.items()})

    def bind(self, values: Mapping[str, object]) -> "BiPoly":
        """Substitute parameter values into ParamPoly coefficients."""
        return self.map_coeffs(lambda c: c.subs(values) if isinstance(c, ParamPoly) else c)

    def compose(self, px: "BiPoly", py: "BiPoly") -> "BiPoly":
        """Return ``self(px(x, y), py(x, y))``."""
        # group by powers of x to reuse powers
        xp = _power_table(px, max((i for i, _ in self._terms), default=0))
        yp = _power_table(py, max((j for _, j in self._terms), default=0))
        acc = BiPoly.zero()
        for (i, j), c in self._terms.items():
            acc = acc + (xp[i] * yp[j]) * c
        return acc

    def shift(self, x0, y0) -> "BiPoly":
        """Return ``self(x + x0, y + y0)``."""
        return self.compose(BiPoly.x() + x0, BiPoly.y() + y0)

    def linear_substitute(self, matrix) -> "BiPoly":
        """Return ``self(T (x, y))`` for a 2x2 matrix ``T`` of exact entries."""
        (a, b), (c, d) = matrix
        x, y = BiPoly.x(), BiPoly.y()
        return self.compose(x * a + y * b, x * c + y * d)

    # -- evaluation ---------------------------------------------------------------------
    def __call__(self, x, y, exact: bool = False):
        return poly_eval(self, (x, y), exact=exact)

    def to_float(self) -> "FloatPoly":
        return FloatPoly(self)

    def lambdify(self) -> Callable:
        """Vectorized float evaluator ``f(x, y)``."""
        return FloatPoly(self)

    # -- display ----------------------------------------------------------------------
    def __repr__(self):
        return f"BiPoly({self})"

    def __str__(self):
        if not self._terms:
            return "0"
        parts = []
        for m in sorted(self._terms, key=MONOMIAL_ORDERS["grlex"], reverse=True):
            c = self._terms[m]
            mono = "*".join(
                s for s in (_pw("x", m[0]), _pw("y", m[1])) if s
            )
            cs = str(c)
            if isinstance(c, (QuadraticNumber, ParamPoly)) or "/" in cs:
                cs = f"({cs})"
            if not mono:
                parts.append(cs)
            elif c == 1:
                parts.append(mono)
            elif c == -1:
                parts.append(f"-{mono}")
            else:
                parts.append(f"{cs}*{mono}")
        return " + ".join(parts).replace("+ -", "- ")


def _pw(name: str, e: int) -> str:
    if e == 0:
        return ""
    return name if e == 1 else f"{name}^{e}"


def _power_table(p: BiPoly, n: int) -> list[BiPoly]:
    table = [BiPoly.const(1)]
    for _ in range(n):
        table.append(table[-1] * p)
    return table


def poly_divide_exact(dividend: BiPoly, divisor: BiPoly, order: str = "grlex"):
    """Multivariate division by a single polynomial.

    Returns ``(quotient, remainder)`` with ``dividend = quotient*divisor +
    remainder`` where no monomial of the remainder is divisible by the leading
    monomial of ``divisor`` in the chosen order. Divisibility (remainder zero)
    does not depend on the order.

    Raises
    ------
    ZeroDivisionError
        "division by zero polynomial" when ``divisor`` is zero.
    """
    if divisor.is_zero():
        raise ZeroDivisionError("division by zero polynomial")
    key = MONOMIAL_ORDERS[order]
    (li, lj), lc = divisor.leading_term(order)
    if isinstance(lc, ParamPoly):
        raise TypeError("leading coefficient of the divisor must be a number")
    dterms = list(divisor.terms.items())
    p = dict(dividend.terms)
    quot: dict = {}
    rem: dict = {}
    while p:
        m = max(p, key=key)
        c = p.pop(m)
        if m[0] >= li and m[1] >= lj:
            qm = (m[0] - li, m[1] - lj)
            qc = c / lc
            quot[qm] = quot[qm] + qc if qm in quot else qc
            for (di, dj), dc in dterms:
                if (di, dj) == (li, lj):
                    continue
                t = (qm[0] + di, qm[1] + dj)
                v = p.get(t, 0) - qc * dc
                if v == 0:
                    p.pop(t, None)
                else:
                    p[t] = v
        else:
            rem[m] = c
    return BiPoly._raw(quot), BiPoly._raw(rem)


def poly_eval(p: BiPoly, point, exact: bool = False):
    """Evaluate ``p`` at ``point`` with Horner's scheme.

    With ``exact=True`` the coordinates are converted to exact rationals (or
    kept as quadratic numbers) and the result is exact; otherwise float
    arithmetic is used.
    """
    x, y = point
    if exact:
        x = x if isinstance(x, (Fraction, QuadraticNumber, ParamPoly)) else to_fraction(x)
        y = y if isinstance(y, (Fraction, QuadraticNumber, ParamPoly)) else to_fraction(y)
        zero = Fraction(0)
        rows = _horner_rows(p, lambda c: c)
    else:
        x, y = float(x), float(y)
        zero = 0.0
        rows = _horner_rows(p, to_float)
    result = zero
    for row in rows:  # rows ordered from highest y-power down to 0
        inner = zero
        for c in row:
            inner = inner * x + c
        result = result * y + inner
    return result


def _horner_rows(p: BiPoly, conv) -> list[list]:
    if p.is_zero():
        return []
    maxj = max(j for _, j in p.terms)
    rows = []
    for j in range(maxj, -1, -1):
        cols = [(i, c) for (i, jj), c in p.terms.items() if jj == j]
        maxi = max((i for i, _ in cols), default=0)
        row = [0] * (maxi + 1)
        for i, c in cols:
            row[maxi - i] = conv(c)
        rows.append([conv(0) if isinstance(v, int) and v == 0 else v for v in row])
    return rows


class FloatPoly:
    """Float evaluator for a BiPoly, usable on scalars and numpy arrays.

    Stores Horner rows with float coefficients; evaluation works elementwise
    on array inputs.
    """

    __slots__ = ("rows", "degree", "exps", "coeffs")

    def __init__(self, p: BiPoly):
        self.rows = [[float(v) for v in row] for row in _horner_rows(p, to_float)]
        self.degree = p.degree
        items = sorted(p.terms.items())
        self.exps = np.array([m for m, _ in items], dtype=np.int64).reshape(-1, 2)
        self.coeffs = np.array([to_float(c) for _, c in items], dtype=float)

    def __call__(self, x, y):
        result = 0.0
        for row in self.rows:
            inner = 0.0
            for c in row:
                inner = inner * x + c
            result = result * y + inner
        if isinstance(result, float) and isinstance(x, np.ndarray):
            return np.full_like(x, result, dtype=float)
        return result

    def abs_bound(self, x, y):
        """Sum of |c| |x|^i |y|^j: the scale for rounding-error estimates."""
        ax, ay = np.abs(x), np.abs(y)
        total = 0.0
        for (i, j), c in zip(self.exps, self.coeffs):
            total = total + abs(c) * ax**i * ay**j
        return total
