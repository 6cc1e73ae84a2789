"""Planar polynomial vector fields and their singular points."""
from __future__ import annotations

import cmath
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np

from .algebra import BiPoly, FloatPoly, ParamPoly, QuadraticNumber, exact_sqrt, poly_divide_exact
from .algebra.numbers import is_exact, sign, to_complex, to_float, to_fraction
from .errors import NotSingularError

__all__ = [
    "PlanarSystem",
    "Jacobian",
    "SingularPoint",
    "divergence",
    "jacobian_at",
    "verify_singular",
    "invariant_curve_cofactor",
    "exact_point",
    "SINGULAR_TOL",
]

SINGULAR_TOL = 1e-10


@dataclass(frozen=True)
class PlanarSystem:
    """The vector field ``x' = p(x, y), y' = q(x, y)``."""

    p: BiPoly
    q: BiPoly
    name: str = ""

    def __post_init__(self):
        if self.p.is_zero() and self.q.is_zero():
            raise ValueError("vector field is identically zero")

    @classmethod
    def parse(cls, p: str, q: str, env: Mapping[str, object] | None = None, name: str = ""):
        return cls(BiPoly.parse(p, env), BiPoly.parse(q, env), name=name)

    @property
    def degree(self) -> int:
        return max(self.p.degree, self.q.degree)

    def parameters(self) -> set[str]:
        return self.p.parameters() | self.q.parameters()

    def bind(self, values: Mapping[str, object]) -> "PlanarSystem":
        return PlanarSystem(self.p.bind(values), self.q.bind(values), self.name)

    def is_exact(self) -> bool:
        """True when all coefficients are exact numbers (no free parameters)."""
        return not self.parameters()

    def lie_derivative(self, f: BiPoly) -> BiPoly:
        """``X f = p f_x + q f_y``."""
        return self.p * f.diff("x") + self.q * f.diff("y")

    # float evaluators, built lazily
    @cached_property
    def divergence(self) -> BiPoly:
        return self.p.diff("x") + self.q.diff("y")

    @cached_property
    def jacobian_polys(self) -> tuple[tuple[BiPoly, BiPoly], tuple[BiPoly, BiPoly]]:
        return (
            (self.p.diff("x"), self.p.diff("y")),
            (self.q.diff("x"), self.q.diff("y")),
        )

    @cached_property
    def float_polys(self) -> tuple[FloatPoly, ...]:
        """Float evaluators for (p, q, p_x, p_y, q_x, q_y)."""
        (px, py), (qx, qy) = self.jacobian_polys
        return tuple(FloatPoly(b) for b in (self.p, self.q, px, py, qx, qy))

    def field(self, x, y):
        fp, fq = self.float_polys[:2]
        return fp(x, y), fq(x, y)

    def __call__(self, x, y):
        return self.field(x, y)

    def jacobian_float(self, x, y) -> np.ndarray:
        _, _, px, py, qx, qy = self.float_polys
        return np.array([[px(x, y), py(x, y)], [qx(x, y), qy(x, y)]], dtype=float)

    def divergence_float(self, x, y):
        _, _, px, _, _, qy = self.float_polys
        return px(x, y) + qy(x, y)

    def __str__(self):
        return f"x' = {self.p}\ny' = {self.q}"


def divergence(sys: PlanarSystem) -> BiPoly:
    """Exact divergence ``p_x + q_y``."""
    return sys.divergence


def exact_point(pt) -> tuple | None:
    """Convert a point to exact coordinates, or ``None`` when impossible."""
    out = []
    for c in pt:
        if isinstance(c, (Fraction, QuadraticNumber)):
            out.append(c)
        elif isinstance(c, (int, str)) and not isinstance(c, bool):
            out.append(to_fraction(c))
        elif isinstance(c, float):
            out.append(to_fraction(c))
        else:
            return None
    return tuple(out)


@dataclass(frozen=True)
class Jacobian:
    """Jacobian matrix at a point with its eigenvalues.

    ``matrix`` holds exact entries when ``exact`` is true, floats otherwise.
    ``eigenvalues`` are exact (Fraction or QuadraticNumber, possibly complex
    with ``d < 0``) when they lie in a quadratic extension of the entries'
    field; otherwise Python complex/float values.
    """

    matrix: tuple
    eigenvalues: tuple
    exact: bool
    eigen_exact: bool

    @property
    def trace(self):
        return self.matrix[0][0] + self.matrix[1][1]

    @property
    def det(self):
        (a, b), (c, d) = self.matrix
        return a * d - b * c

    def as_array(self) -> np.ndarray:
        return np.array([[to_float(v) for v in row] for row in self.matrix], dtype=float)

    def eigenvalues_complex(self) -> tuple[complex, complex]:
        return tuple(to_complex(v) for v in self.eigenvalues)

    def eigen_is_real(self) -> bool:
        vals = self.eigenvalues_complex()
        scale = max(1.0, max(abs(v) for v in vals))
        return all(abs(v.imag) <= 1e-14 * scale for v in vals)


def _exact_eigenvalues(tr, det):
    disc = tr * tr - 4 * det
    try:
        root = exact_sqrt(disc) if not isinstance(disc, ParamPoly) else None
    except (TypeError, ValueError):
        root = None
    if root is None:
        return None
    try:
        e1, e2 = (tr + root) / 2, (tr - root) / 2
    except ValueError:  # incompatible quadratic fields
        return None
    return e1, e2


def _sort_eigen(vals):
    # real values descending, complex by imaginary part descending
    return tuple(sorted(vals, key=lambda v: (to_complex(v).real, to_complex(v).imag), reverse=True))


def jacobian_at(sys: PlanarSystem, pt) -> Jacobian:
    """Jacobian of the field at ``pt`` with exact eigenvalues when possible."""
    (px, py), (qx, qy) = sys.jacobian_polys
    ept = exact_point(pt) if sys.is_exact() else None
    if ept is not None:
        try:
            mat = tuple(tuple(e(*ept, exact=True) for e in row) for row in ((px, py), (qx, qy)))
        except ValueError:
            mat = None
        if mat is not None:
            (a, b), (c, d) = mat
            tr, det = a + d, a * d - b * c
            ev = _exact_eigenvalues(tr, det)
            if ev is not None:
                return Jacobian(mat, _sort_eigen(ev), True, True)
            fm = np.array([[to_float(v) for v in row] for row in mat])
            return Jacobian(mat, _sort_eigen(_float_eigen(fm)), True, False)
    x, y = (to_float(c) for c in pt)
    fm = sys.jacobian_float(x, y)
    return Jacobian(tuple(tuple(float(v) for v in row) for row in fm), _sort_eigen(_float_eigen(fm)), False, False)


def _float_eigen(m: np.ndarray):
    tr = m[0, 0] + m[1, 1]
    det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    disc = tr * tr - 4 * det
    if disc >= 0:
        r = disc**0.5
        # stable quadratic formula
        big = (tr + r) / 2 if tr >= 0 else (tr - r) / 2
        small = det / big if big != 0 else (tr - r) / 2
        return (float(big), float(small))
    r = cmath.sqrt(disc)
    return ((tr + r) / 2, (tr - r) / 2)


@dataclass(frozen=True)
class SingularPoint:
    """A verified singular point of a planar system."""

    location: tuple
    jacobian: Jacobian
    divergence_value: object
    exact: bool
    residual: float = 0.0

    @property
    def xy(self) -> tuple[float, float]:
        return (to_float(self.location[0]), to_float(self.location[1]))

    @property
    def kind(self) -> str:
        """Coarse linear type: saddle, node, focus, center, or degenerate."""
        j = self.jacobian
        vals = j.eigenvalues_complex()
        if any(abs(v) < 1e-14 for v in vals):
            return "degenerate"
        if j.eigen_is_real():
            re = [v.real for v in vals]
            return "saddle" if re[0] * re[1] < 0 else "node"
        if j.eigen_exact:
            tr = j.trace
            return "center" if tr == 0 else "focus"
        return "center" if abs(vals[0].real) < 1e-12 else "focus"

    @property
    def hyperbolic_saddle(self) -> bool:
        return self.kind == "saddle"


def verify_singular(sys: PlanarSystem, pt: Sequence, tol: float = SINGULAR_TOL) -> SingularPoint:
    """Check that ``pt`` is a singular point and return its linear data.

    Exact coordinates (ints, Fractions, ``"num/den"`` strings, floats with a
    short decimal repr) are tested exactly first; if the exact test fails the
    float residual is compared with ``tol``.

    Raises
    ------
    NotSingularError
        "not singular" when the residual exceeds the tolerance.
    """
    ept = exact_point(pt) if sys.is_exact() else None
    if ept is not None:
        pv, qv = sys.p(*ept, exact=True), sys.q(*ept, exact=True)
        if pv == 0 and qv == 0:
            jac = jacobian_at(sys, ept)
            div = sys.divergence(*ept, exact=True)
            return SingularPoint(ept, jac, div, True, 0.0)
    fx, fy = (to_float(c) for c in pt)
    pv, qv = sys.field(fx, fy)
    res = max(abs(pv), abs(qv))
    if not res <= tol:
        raise NotSingularError(f"not singular: |P|,|Q| = {abs(pv):.3g}, {abs(qv):.3g} at {pt}")
    jac = jacobian_at(sys, (fx, fy))
    return SingularPoint((fx, fy), jac, float(sys.divergence_float(fx, fy)), False, float(res))


def invariant_curve_cofactor(sys: PlanarSystem, f: BiPoly) -> BiPoly | None:
    """Cofactor ``k`` with ``X f = k f``, or ``None`` when ``f = 0`` is not invariant."""
    if f.is_zero():
        raise ValueError("curve polynomial is zero")
    xf = sys.lie_derivative(f)
    quot, rem = poly_divide_exact(xf, f)
    if not rem.is_zero():
        return None
    return quot
