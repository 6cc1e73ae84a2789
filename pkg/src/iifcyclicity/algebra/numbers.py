"""Exact scalar types used as polynomial coefficients.

Three coefficient kinds are supported:

* ``fractions.Fraction`` for rationals (ints are promoted on entry),
* :class:`QuadraticNumber` for elements ``a + b*sqrt(d)`` of a quadratic field,
* :class:`ParamPoly` for polynomials in named parameters with rational
  coefficients (symbolic lambda, m1, m2 and friends).

Arithmetic results are normalized: a quadratic number whose irrational part
vanishes collapses back to a ``Fraction``, and so does a constant ``ParamPoly``.
"""
from __future__ import annotations

import ast
import math
from fractions import Fraction
from numbers import Rational
from typing import Mapping

__all__ = [
    "QuadraticNumber",
    "ParamPoly",
    "to_fraction",
    "exact_sqrt",
    "sign",
    "is_exact",
    "to_float",
    "to_complex",
    "parse_expression",
    "squarefree_split",
]


def to_fraction(value) -> Fraction:
    """Convert ints, floats, decimal strings and ``"num/den"`` strings to Fraction.

    Floats are converted through their shortest repr, so ``0.1`` becomes 1/10
    rather than the binary expansion.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not numbers here")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, Rational):
        return Fraction(value.numerator, value.denominator)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"non-finite value {value!r}")
        return Fraction(repr(value))
    if isinstance(value, str):
        return Fraction(value.strip().replace(" ", ""))
    raise TypeError(f"cannot convert {type(value).__name__} to Fraction")


def squarefree_split(n: int, trial_limit: int = 10**6) -> tuple[int, int]:
    """Write ``n = s**2 * d`` with ``d`` squarefree (for factors below the trial limit).

    The sign of ``n`` is carried by ``d``.
    """
    if n == 0:
        return 0, 0
    sgn = -1 if n < 0 else 1
    n = abs(n)
    s = 1
    r = math.isqrt(n)
    if r * r == n:
        return r, sgn
    p = 2
    while p * p <= n and p <= trial_limit:
        pp = p * p
        while n % pp == 0:
            n //= pp
            s *= p
        p += 1 if p == 2 else 2
    r = math.isqrt(n)
    if r * r == n:
        return s * r, sgn
    return s, sgn * n


def _sqrt_fraction(x: Fraction) -> Fraction | None:
    if x < 0:
        return None
    rn, rd = math.isqrt(x.numerator), math.isqrt(x.denominator)
    if rn * rn == x.numerator and rd * rd == x.denominator:
        return Fraction(rn, rd)
    return None


class QuadraticNumber:
    """Element ``a + b*sqrt(d)`` of the quadratic field Q(sqrt(d)).

    ``d`` is a squarefree integer different from 0 and 1; ``d < 0`` gives
    complex numbers (``d = -1`` are the Gaussian rationals). Instances with
    ``b == 0`` are never returned by arithmetic; use :meth:`make`.
    """

    __slots__ = ("a", "b", "d")

    def __init__(self, a, b, d: int):
        a, b = to_fraction(a), to_fraction(b)
        if d in (0, 1):
            raise ValueError("d must be squarefree and different from 0 and 1")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "d", int(d))

    def __setattr__(self, key, value):
        raise AttributeError("QuadraticNumber is immutable")

    def __reduce__(self):
        return QuadraticNumber, (self.a, self.b, self.d)

    @staticmethod
    def make(a, b, d: int):
        """Build ``a + b*sqrt(d)`` and collapse to Fraction when ``b == 0``."""
        b = to_fraction(b)
        if b == 0:
            return to_fraction(a)
        return QuadraticNumber(a, b, d)

    @staticmethod
    def sqrt_of(d: int):
        """Return ``sqrt(d)`` for an integer ``d`` (simplified)."""
        return exact_sqrt(Fraction(d), allow_new_field=True)

    # -- coercion helpers -------------------------------------------------
    def _parts(self, other):
        if isinstance(other, QuadraticNumber):
            if other.d != self.d:
                raise ValueError(
                    f"incompatible quadratic fields sqrt({self.d}) and sqrt({other.d})"
                )
            return other.a, other.b
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return Fraction(other), Fraction(0)
        return None

    @property
    def is_real(self) -> bool:
        return self.d > 0

    def conjugate(self):
        return QuadraticNumber(self.a, -self.b, self.d)

    def norm(self) -> Fraction:
        return self.a * self.a - self.d * self.b * self.b

    # -- arithmetic ---------------------------------------------------------
    def __add__(self, other):
        parts = self._parts(other)
        if parts is None:
            return NotImplemented
        return QuadraticNumber.make(self.a + parts[0], self.b + parts[1], self.d)

    __radd__ = __add__

    def __neg__(self):
        return QuadraticNumber(-self.a, -self.b, self.d)

    def __pos__(self):
        return self

    def __sub__(self, other):
        parts = self._parts(other)
        if parts is None:
            return NotImplemented
        return QuadraticNumber.make(self.a - parts[0], self.b - parts[1], self.d)

    def __rsub__(self, other):
        parts = self._parts(other)
        if parts is None:
            return NotImplemented
        return QuadraticNumber.make(parts[0] - self.a, parts[1] - self.b, self.d)

    def __mul__(self, other):
        parts = self._parts(other)
        if parts is None:
            return NotImplemented
        c, e = parts
        return QuadraticNumber.make(
            self.a * c + self.d * self.b * e, self.a * e + self.b * c, self.d
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        parts = self._parts(other)
        if parts is None:
            return NotImplemented
        c, e = parts
        den = c * c - self.d * e * e
        if den == 0:
            raise ZeroDivisionError("division by zero quadratic number")
        return QuadraticNumber.make(
            (self.a * c - self.d * self.b * e) / den, (self.b * c - self.a * e) / den, self.d
        )

    def __rtruediv__(self, other):
        parts = self._parts(other)
        if parts is None:
            return NotImplemented
        c, e = parts
        den = self.norm()
        # (c + e r)(a - b r) / (a^2 - d b^2)
        return QuadraticNumber.make(
            (c * self.a - self.d * e * self.b) / den, (e * self.a - c * self.b) / den, self.d
        )

    def __pow__(self, k):
        if not isinstance(k, int):
            return NotImplemented
        if k < 0:
            return 1 / (self ** (-k))
        result, base = Fraction(1), self
        while k:
            if k & 1:
                result = base * result
            k >>= 1
            if k:
                base = base * base
        return result

    # -- comparison -----------------------------------------------------------
    def __eq__(self, other):
        if isinstance(other, QuadraticNumber):
            return (self.a, self.b, self.d) == (other.a, other.b, other.d)
        if isinstance(other, (int, Fraction)):
            return False  # b != 0 by construction
        if isinstance(other, float):
            return False
        return NotImplemented

    def __hash__(self):
        return hash(("Q", self.a, self.b, self.d))

    def _require_real(self):
        if self.d < 0:
            raise TypeError("complex quadratic numbers are not ordered")

    def sign(self) -> int:
        self._require_real()
        sa = (self.a > 0) - (self.a < 0)
        sb = (self.b > 0) - (self.b < 0)
        if sa == 0 or sa == sb:
            return sb
        # opposite signs: compare a^2 with d b^2
        diff = self.a * self.a - self.d * self.b * self.b
        return sa if diff > 0 else sb

    def __lt__(self, other):
        return sign(self - other) < 0

    def __le__(self, other):
        return sign(self - other) <= 0

    def __gt__(self, other):
        return sign(self - other) > 0

    def __ge__(self, other):
        return sign(self - other) >= 0

    def __bool__(self):
        return True

    def __abs__(self):
        return -self if self.sign() < 0 else self

    # -- conversion -----------------------------------------------------------
    def __float__(self):
        self._require_real()
        a, bs = float(self.a), float(self.b) * math.sqrt(self.d)
        if (a > 0) != (bs > 0) and a != 0:
            # avoid cancellation: a + b sqrt d = norm / (a - b sqrt d)
            return float(self.norm()) / (a - bs)
        return a + bs

    def __complex__(self):
        if self.d > 0:
            return complex(float(self), 0.0)
        return complex(float(self.a), float(self.b) * math.sqrt(-self.d))

    def __repr__(self):
        return f"QuadraticNumber({self.a}, {self.b}, {self.d})"

    def __str__(self):
        root = f"sqrt({self.d})"
        mag = abs(self.b)
        irr = root if mag == 1 else f"{mag}*{root}"
        if self.a == 0:
            return irr if self.b > 0 else f"-{irr}"
        op = "+" if self.b > 0 else "-"
        return f"{self.a}{op}{irr}"


def sign(value) -> int:
    """Sign of an exact real value (Fraction or real QuadraticNumber) or float."""
    if isinstance(value, QuadraticNumber):
        return value.sign()
    if isinstance(value, ParamPoly):
        const = value.constant_value()
        if const is None:
            raise TypeError("sign of a non-constant parameter polynomial is undefined")
        return sign(const)
    return (value > 0) - (value < 0)


def exact_sqrt(x, allow_new_field: bool = True):
    """Exact square root of a rational or quadratic number, or ``None``.

    For a rational ``x`` the result lives in Q or in Q(sqrt(d)) with ``d`` the
    squarefree part of ``x`` (negative ``x`` yields an imaginary result). For a
    quadratic number ``a + b sqrt(d)`` the root is searched inside the same
    field; ``None`` means it does not exist there. The principal branch is
    returned (nonnegative real part; positive imaginary part for negative
    rationals).
    """
    if isinstance(x, QuadraticNumber):
        return _sqrt_quadratic(x)
    x = to_fraction(x)
    r = _sqrt_fraction(abs(x))
    if r is not None:
        if x >= 0:
            return r
        return QuadraticNumber(0, r, -1) if allow_new_field else None
    if not allow_new_field:
        return None
    # sqrt(n/m) = sqrt(n*m)/m
    s, d = squarefree_split(x.numerator * x.denominator)
    return QuadraticNumber(0, Fraction(s, x.denominator), d)


def _sqrt_quadratic(x: QuadraticNumber):
    a, b, d = x.a, x.b, x.d
    # (u + v sqrt d)^2 = u^2 + d v^2 + 2uv sqrt d; with t = u^2:
    # t^2 - a t + d b^2 / 4 = 0
    disc = a * a - d * b * b
    r = _sqrt_fraction(disc)
    if r is None:
        return None
    for t in ((a + r) / 2, (a - r) / 2):
        u = _sqrt_fraction(t)
        if u is None or u == 0:
            continue
        v = b / (2 * u)
        cand = QuadraticNumber.make(u, v, d)
        if cand * cand == x:
            if d > 0 and sign(cand) < 0:
                cand = -cand
            return cand
    return None


def is_exact(value) -> bool:
    return isinstance(value, (Fraction, int, QuadraticNumber, ParamPoly)) and not isinstance(
        value, bool
    )


def to_float(value) -> float:
    if isinstance(value, ParamPoly):
        const = value.constant_value()
        if const is None:
            raise TypeError(f"unbound parameters in {value}")
        return float(const)
    return float(value)


def to_complex(value) -> complex:
    if isinstance(value, QuadraticNumber):
        return complex(value)
    return complex(to_float(value))


# ---------------------------------------------------------------------------
# parameter polynomials
# ---------------------------------------------------------------------------
def _mono_mul(m1: tuple, m2: tuple) -> tuple:
    if not m1:
        return m2
    if not m2:
        return m1
    acc = dict(m1)
    for name, e in m2:
        acc[name] = acc.get(name, 0) + e
    return tuple(sorted(acc.items()))


class ParamPoly:
    """Polynomial in named parameters with rational (or quadratic) coefficients.

    Monomials are sorted tuples of ``(name, exponent)`` pairs; the constant
    monomial is the empty tuple. Used so that coefficient arithmetic can carry
    symbolic lambda, m1, m2 exactly.
    """

    __slots__ = ("_terms",)

    def __init__(self, terms: Mapping[tuple, object] | None = None):
        clean = {}
        for mono, c in (terms or {}).items():
            if not isinstance(c, (Fraction, QuadraticNumber)):
                c = to_fraction(c)
            if c != 0:
                clean[tuple(sorted((n, e) for n, e in mono if e))] = c
        object.__setattr__(self, "_terms", clean)

    def __setattr__(self, key, value):
        raise AttributeError("ParamPoly is immutable")

    def __reduce__(self):
        return ParamPoly, (self._terms,)

    @staticmethod
    def symbol(name: str) -> "ParamPoly":
        return ParamPoly({((name, 1),): Fraction(1)})

    @staticmethod
    def simplify(value):
        """Collapse a constant ParamPoly to its scalar."""
        if isinstance(value, ParamPoly):
            const = value.constant_value()
            return const if const is not None else value
        return value

    @property
    def terms(self):
        return dict(self._terms)

    def symbols(self) -> set[str]:
        return {n for mono in self._terms for n, _ in mono}

    def degree(self) -> int:
        return max((sum(e for _, e in mono) for mono in self._terms), default=0)

    def constant_value(self):
        if not self._terms:
            return Fraction(0)
        if len(self._terms) == 1 and () in self._terms:
            return self._terms[()]
        return None

    def _coerce(self, other):
        if isinstance(other, ParamPoly):
            return other
        if isinstance(other, (int, Fraction, QuadraticNumber)) and not isinstance(other, bool):
            return ParamPoly({(): other})
        return None

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        acc = dict(self._terms)
        for m, c in o._terms.items():
            acc[m] = acc.get(m, 0) + c
        return ParamPoly.simplify(ParamPoly(acc))

    __radd__ = __add__

    def __neg__(self):
        return ParamPoly({m: -c for m, c in self._terms.items()})

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o + (-self)

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        acc: dict = {}
        for m1, c1 in self._terms.items():
            for m2, c2 in o._terms.items():
                m = _mono_mul(m1, m2)
                acc[m] = acc.get(m, 0) + c1 * c2
        return ParamPoly.simplify(ParamPoly(acc))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, ParamPoly):
            const = other.constant_value()
            if const is None:
                raise TypeError("division by a non-constant parameter polynomial")
            other = const
        if isinstance(other, (int, Fraction, QuadraticNumber)):
            if other == 0:
                raise ZeroDivisionError("division by zero")
            return ParamPoly.simplify(ParamPoly({m: c / other for m, c in self._terms.items()}))
        return NotImplemented

    def __pow__(self, k):
        if not isinstance(k, int) or k < 0:
            return NotImplemented
        result = Fraction(1)
        for _ in range(k):
            result = self * result
        return result

    def __eq__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self._terms == o._terms

    def __hash__(self):
        return hash(("P", frozenset(self._terms.items())))

    def __bool__(self):
        return bool(self._terms)

    def subs(self, values: Mapping[str, object]):
        """Substitute parameter values; unbound names stay symbolic."""
        total = Fraction(0)
        for mono, c in self._terms.items():
            term = c
            for name, e in mono:
                if name in values:
                    v = values[name]
                    if not isinstance(v, (Fraction, QuadraticNumber, ParamPoly)):
                        v = to_fraction(v)
                    term = term * v**e
                else:
                    term = term * ParamPoly.symbol(name) ** e
            total = total + term
        return ParamPoly.simplify(total)

    def __repr__(self):
        return f"ParamPoly({self})"

    def __str__(self):
        if not self._terms:
            return "0"
        parts = []
        for mono in sorted(self._terms, key=lambda m: (-sum(e for _, e in m), m)):
            c = self._terms[mono]
            factors = "*".join(n if e == 1 else f"{n}^{e}" for n, e in mono)
            if not factors:
                parts.append(f"({c})")
            elif c == 1:
                parts.append(factors)
            else:
                parts.append(f"({c})*{factors}")
        return " + ".join(parts)


# ---------------------------------------------------------------------------
# expression parsing
# ---------------------------------------------------------------------------
_BINOPS = {ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow}


def parse_expression(text: str, env: Mapping[str, object] | None = None):
    """Evaluate an arithmetic expression over exact values.

    Supported: integer/decimal literals, ``+ - * /``, integer powers written as
    ``**`` or ``^``, names bound in ``env`` and the function ``sqrt`` of an
    exact value. Anything else raises ``ValueError``; no Python code is ever
    executed.
    """
    env = dict(env or {})
    try:
        tree = ast.parse(text.replace("^", "**"), mode="eval")
    except SyntaxError as exc:
        raise ValueError(f"cannot parse expression {text!r}: {exc.msg}") from None

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant):
            if isinstance(node.value, bool) or not isinstance(node.value, (int, float)):
                raise ValueError(f"unsupported literal {node.value!r} in {text!r}")
            return to_fraction(node.value)
        if isinstance(node, ast.Name):
            if node.id not in env:
                raise ValueError(f"unknown name {node.id!r} in {text!r}")
            return env[node.id]
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            val = ev(node.operand)
            return -val if isinstance(node.op, ast.USub) else val
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            left, right = ev(node.left), ev(node.right)
            if isinstance(node.op, ast.Add):
                return left + right
            if isinstance(node.op, ast.Sub):
                return left - right
            if isinstance(node.op, ast.Mult):
                return left * right
            if isinstance(node.op, ast.Div):
                return left / right
            if not isinstance(right, Fraction) or right.denominator != 1 or right < 0:
                raise ValueError(f"only nonnegative integer powers allowed in {text!r}")
            return left ** int(right)
        if (
            isinstance(node, ast.Call)
            and isinstance(node.func, ast.Name)
            and node.func.id == "sqrt"
            and len(node.args) == 1
            and not node.keywords
        ):
            root = exact_sqrt(ev(node.args[0]))
            if root is None:
                raise ValueError(f"square root not representable in {text!r}")
            return root
        raise ValueError(f"unsupported syntax in {text!r}")

    return ev(tree)
