"""Local analysis at a hyperbolic saddle.

Classification (eigenvalues, hyperbolicity ratio, resonance), local
factorization of an inverse integrating factor along the separatrices,
saddle quantities of weak saddles and the orbital normal form of resonant
saddles.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .algebra import BiPoly
from .algebra.numbers import QuadraticNumber, sign, to_float, to_fraction
from .errors import ConsistencyError, NormalFormError, NotSaddleError
from .iif import InverseIntegratingFactor, symbolic_multiplicity
from .normalform import (
    default_eigenvector,
    localize,
    manifold_series,
    order_in_z,
    poincare_dulac,
    series_inverse,
    substitute_branch,
)
from .system import PlanarSystem, SingularPoint, invariant_curve_cofactor, verify_singular

__all__ = [
    "SaddleInfo",
    "SaddleQuantities",
    "ResonantNormalForm",
    "LocalFactorization",
    "classify_saddle",
    "saddle_quantities",
    "resonant_normal_form",
    "formal_iif_consistency",
    "local_iif_factorization",
    "RESONANCE_TOL",
    "MAX_K",
    "MAX_NF_DEGREE",
]

RESONANCE_TOL = 1e-9
MAX_K = 8
MAX_NF_DEGREE = 40


def _is_exact_real(v) -> bool:
    if isinstance(v, Fraction):
        return True
    return isinstance(v, QuadraticNumber) and v.d > 0


@dataclass(frozen=True)
class SaddleInfo:
    """Linear data of a hyperbolic saddle.

    ``lam > 0 > mu`` are the eigenvalues, ``ratio_r = -mu/lam``. ``resonance``
    is ``(p, q)`` with ``r = q/p`` when ``r`` is rational (exactly, or within
    ``RESONANCE_TOL`` with ``numeric_resonance`` set). ``eigenvectors`` are
    unit float vectors for ``lam`` and ``mu``; ``exact_eigenvectors`` are the
    unnormalized exact ones used by the normal-form code.
    """

    location: tuple
    lam: object
    mu: object
    ratio_r: object
    strong: bool
    resonance: tuple | None
    eigenvectors: tuple
    exact: bool
    divergence: object
    numeric_resonance: bool = False
    exact_eigenvectors: tuple | None = None
    jacobian: tuple | None = None

    @property
    def weak(self) -> bool:
        return not self.strong

    @property
    def xy(self) -> tuple[float, float]:
        return (to_float(self.location[0]), to_float(self.location[1]))

    def describe(self) -> str:
        res = f"{self.resonance[0]}:{self.resonance[1]}" if self.resonance else "nonresonant"
        kind = "strong" if self.strong else "weak"
        return f"saddle at {self.location}: lambda={self.lam}, mu={self.mu}, r={self.ratio_r}, {kind}, {res}"


def _numeric_resonance(r: float, pmax: int = 100):
    best = None
    for p in range(1, pmax + 1):
        q = round(r * p)
        if 1 <= q <= pmax and abs(r - q / p) < RESONANCE_TOL and math.gcd(p, q) == 1:
            best = (p, q)
            break
    return best


def classify_saddle(sys: PlanarSystem, pt) -> SaddleInfo:
    """Classify a singular point as a hyperbolic saddle.

    Raises
    ------
    NotSaddleError
        "not a hyperbolic saddle" for complex, zero or same-sign eigenvalues.
    """
    sp = pt if isinstance(pt, SingularPoint) else verify_singular(sys, pt)
    jac = sp.jacobian
    vals = jac.eigenvalues
    if jac.eigen_exact and all(_is_exact_real(v) for v in vals):
        lam, mu = max(vals), min(vals)
        if not (sign(lam) > 0 > sign(mu)):
            raise NotSaddleError(f"not a hyperbolic saddle: eigenvalues {lam}, {mu}")
        r = -mu / lam
        strong = (lam + mu) != 0
        resonance = None
        if isinstance(r, Fraction):
            resonance = (r.denominator, r.numerator)
        vl = default_eigenvector(jac.matrix, lam)
        vm = default_eigenvector(jac.matrix, mu)
        units = tuple(_unit(v) for v in (vl, vm))
        return SaddleInfo(sp.location, lam, mu, r, strong, resonance, units, True,
                          sp.divergence_value, False, (vl, vm), jac.matrix)
    cvals = jac.eigenvalues_complex()
    if any(abs(v.imag) > 1e-12 * max(1.0, abs(v)) for v in cvals):
        raise NotSaddleError(f"not a hyperbolic saddle: complex eigenvalues {cvals}")
    re = sorted((v.real for v in cvals), reverse=True)
    lam, mu = re[0], re[1]
    if not (lam > 0 > mu):
        raise NotSaddleError(f"not a hyperbolic saddle: eigenvalues {lam:.6g}, {mu:.6g}")
    r = -mu / lam
    strong = abs(lam + mu) > 1e-10 * max(1.0, abs(lam))
    resonance = _numeric_resonance(r)
    J = jac.as_array()
    units = tuple(_unit(_float_eigvec(J, ev)) for ev in (lam, mu))
    return SaddleInfo(sp.location, lam, mu, r, strong, resonance, units, False,
                      sp.divergence_value, resonance is not None, None, jac.matrix)


def _float_eigvec(J, ev):
    a, b, c, d = J[0, 0], J[0, 1], J[1, 0], J[1, 1]
    if abs(b) >= abs(c) and b != 0:
        return (b, ev - a)
    if c != 0:
        return (ev - d, c)
    return (1.0, 0.0) if abs(ev - a) < abs(ev - d) else (0.0, 1.0)


def _unit(v) -> np.ndarray:
    arr = np.array([to_float(v[0]), to_float(v[1])])
    return arr / np.linalg.norm(arr)


# ---------------------------------------------------------------------------
# local coordinates
# ---------------------------------------------------------------------------
def _require_exact(saddle: SaddleInfo, what: str):
    if not saddle.exact or saddle.exact_eigenvectors is None:
        raise NormalFormError(f"irrational eigenvalues: exact normal form unsupported ({what})")


def _compose_change(linear_change):
    if linear_change is None:
        return None
    return tuple(
        tuple(v if isinstance(v, (Fraction, QuadraticNumber)) else to_fraction(v) for v in row)
        for row in linear_change
    )


def _eigen_frame(sys: PlanarSystem, saddle: SaddleInfo, linear_change=None):
    """Basis ``B`` (columns: unstable, stable eigenvector) in original coordinates.

    With ``linear_change`` ``T`` the eigenvectors are taken in the
    coordinates ``x = p0 + T x'`` so that, when ``T`` already diagonalizes
    the linear part, no extra scaling is introduced.
    """
    _require_exact(saddle, "eigenvectors")
    if linear_change is None:
        vl, vm = saddle.exact_eigenvectors
        return ((vl[0], vm[0]), (vl[1], vm[1]))
    T = _compose_change(linear_change)
    (t11, t12), (t21, t22) = T
    det = t11 * t22 - t12 * t21
    if det == 0:
        raise ValueError("linear change is singular")
    # Jacobian in primed coordinates: T^-1 J T
    (a, b), (c, d) = saddle.jacobian
    Ti = ((t22 / det, -t12 / det), (-t21 / det, t11 / det))
    JT = ((a * t11 + b * t21, a * t12 + b * t22), (c * t11 + d * t21, c * t12 + d * t22))
    Jp = tuple(
        tuple(Ti[i][0] * JT[0][j] + Ti[i][1] * JT[1][j] for j in range(2)) for i in range(2)
    )
    vl = default_eigenvector(Jp, saddle.lam)
    vm = default_eigenvector(Jp, saddle.mu)
    # back to original coordinates
    return (
        (t11 * vl[0] + t12 * vl[1], t11 * vm[0] + t12 * vm[1]),
        (t21 * vl[0] + t22 * vl[1], t21 * vm[0] + t22 * vm[1]),
    )


# ---------------------------------------------------------------------------
# saddle quantities
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class SaddleQuantities:
    """``alphas[k-1]`` is the saddle quantity ``alpha_k``; ``alpha_1 = div X(p0)``."""

    alphas: tuple
    first_nonzero: int | None
    degree: int = 0

    @property
    def K(self) -> int:
        return len(self.alphas) - 1

    def alpha(self, k: int):
        return self.alphas[k - 1]


def saddle_quantities(
    sys: PlanarSystem,
    saddle: SaddleInfo,
    K: int = 3,
    linear_change=None,
    max_k: int = MAX_K,
) -> SaddleQuantities:
    """Saddle quantities ``alpha_1 .. alpha_{K+1}`` of a weak saddle.

    The field is moved to the eigenbasis, divided by ``lambda`` (eigenvalues
    ``1, -1``) and reduced to ``x' = x(1 + sum a_k (xy)^k)``,
    ``y' = -y(1 + sum b_k (xy)^k)`` up to degree ``2K+1``;
    ``alpha_{k+1} = a_k - b_k``.

    Raises
    ------
    NormalFormError
        "strong saddle: quantities undefined beyond alpha_1", "irrational
        eigenvalues: exact normal form unsupported", or ``K`` above ``max_k``.
    """
    if K < 0 or K > max_k:
        raise NormalFormError(f"K={K} outside [0, {max_k}]")
    if saddle.strong:
        raise NormalFormError("strong saddle: quantities undefined beyond alpha_1")
    _require_exact(saddle, "saddle quantities")
    basis = _eigen_frame(sys, saddle, linear_change)
    g1, g2 = localize(sys.p, sys.q, saddle.location, basis, saddle.lam)
    degree = 2 * K + 1
    pd = poincare_dulac(g1, g2, Fraction(1), Fraction(-1), degree)
    alphas = [saddle.divergence]
    for k in range(1, K + 1):
        a_k = pd.g[0].get((k + 1, k), 0)
        minus_b_k = pd.g[1].get((k, k + 1), 0)
        alphas.append(a_k + minus_b_k)
    alphas = [Fraction(v) if isinstance(v, int) else v for v in alphas]
    first = next((i + 1 for i, v in enumerate(alphas) if v != 0), None)
    return SaddleQuantities(tuple(alphas), first, degree)


def formal_iif_consistency(sq: SaddleQuantities, m: int) -> bool:
    """Check ``alpha_1 = ... = alpha_{m-1} = 0`` and report whether ``alpha_m != 0``.

    Raises
    ------
    ConsistencyError
        "contradiction: alpha_k != 0 for k < m".
    NormalFormError
        When fewer than ``m`` quantities were computed.
    """
    if m < 1:
        raise ValueError("multiplicity must be at least 1")
    if len(sq.alphas) < m:
        raise NormalFormError(f"need alpha_{m}; only {len(sq.alphas)} computed")
    for k in range(1, m):
        if sq.alpha(k) != 0:
            raise ConsistencyError(f"contradiction: alpha_{k} != 0 for k < m = {m}")
    return sq.alpha(m) != 0


# ---------------------------------------------------------------------------
# resonant orbital normal form
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class ResonantNormalForm:
    """Formal orbital normal form ``X' = pX G(U)``, ``Y' = -qY``, ``U = X^q Y^p``.

    ``G = 1 + sum g_k U^k`` (``orbital_coeffs[k-1] = g_k``). ``ell`` is the
    first ``k`` with ``g_k != 0``, ``delta`` the sign of ``g_ell`` (0 when
    linearizable to ``truncation_degree``), ``obstruction_coeff = p g_ell`` the
    coefficient of ``X^(1+ell q) Y^(ell p)`` in ``X'`` and ``a_coeff`` the
    formal invariant ``a`` of the reduced form ``pX(1 + delta(U^ell + a U^2ell))``
    (``None`` when the degree does not reach ``2 ell``).
    """

    p: int
    q: int
    delta: int
    ell: int | None
    a_coeff: object
    truncation_degree: int
    obstruction_coeff: object = None
    orbital_coeffs: tuple = ()
    pd_coeffs: tuple = ()
    log: tuple = ()

    @property
    def linearizable(self) -> bool:
        return self.delta == 0

    @property
    def obstruction_monomial(self) -> tuple | None:
        """Exponents (unstable, stable) of the obstruction term in ``X'``."""
        if self.ell is None:
            return None
        return (1 + self.ell * self.q, self.ell * self.p)

    def report(self) -> str:
        lines = [
            f"resonant normal form p:q = {self.p}:{self.q}, truncation degree {self.truncation_degree}",
            "coordinates: X unstable, Y stable, U = X^q Y^p",
        ]
        for entry in self.log:
            k = entry["degree"]
            rem = ", ".join(f"{'XY'[nu]}':X^{i}Y^{j}" for nu, i, j, _ in entry["removed"]) or "-"
            ret = ", ".join(
                f"{'XY'[nu]}':X^{i}Y^{j} coeff {c}" for nu, i, j, c in entry["retained"]
            ) or "-"
            lines.append(f"degree {k}: removed [{rem}]; retained [{ret}]")
        lines.append("orbital coefficients g_k: " + ", ".join(str(g) for g in self.orbital_coeffs))
        if self.delta == 0:
            lines.append(f"formally orbitally linearizable up to degree {self.truncation_degree}")
        else:
            i, j = self.obstruction_monomial
            lines.append(
                f"obstruction: delta={self.delta}, ell={self.ell}, coefficient {self.obstruction_coeff} "
                f"on X^{i} Y^{j} in X' (X unstable), a={self.a_coeff}"
            )
        return "\n".join(lines)


def resonant_normal_form(
    sys: PlanarSystem,
    saddle: SaddleInfo,
    degree: int,
    linear_change=None,
    max_degree: int = MAX_NF_DEGREE,
) -> ResonantNormalForm:
    """Formal orbital normal form of a p:q resonant saddle up to ``degree``.

    The field is moved to the eigenbasis (optionally after ``linear_change``)
    and scaled to eigenvalues ``(p, -q)``; the Poincare-Dulac form
    ``X' = X(p + A(U))``, ``Y' = Y(-q + B(U))`` is divided by ``1 - B/q``.

    Raises
    ------
    NormalFormError
        "nonresonant saddle", non-exact eigen data, or ``degree`` too large.
    """
    if saddle.resonance is None:
        raise NormalFormError("nonresonant saddle")
    if saddle.numeric_resonance:
        raise NormalFormError("numerically resonant only: exact normal form unsupported")
    if degree > max_degree:
        raise NormalFormError(f"degree {degree} exceeds configured maximum {max_degree}")
    _require_exact(saddle, "resonant normal form")
    p, q = saddle.resonance
    basis = _eigen_frame(sys, saddle, linear_change)
    g1, g2 = localize(sys.p, sys.q, saddle.location, basis, saddle.lam / p)
    pd = poincare_dulac(g1, g2, Fraction(p), Fraction(-q), degree)
    kmax = (degree - 1) // (p + q)
    A = [pd.g[0].get((1 + k * q, k * p), 0) for k in range(0, kmax + 1)]
    B = [pd.g[1].get((k * q, 1 + k * p), 0) for k in range(0, kmax + 1)]
    A[0], B[0] = 0, 0
    num = [1] + [a / p for a in A[1:]]
    den = [1] + [-b / q for b in B[1:]]
    inv = series_inverse(den, kmax)
    G = [sum(num[i] * inv[n - i] for i in range(n + 1)) for n in range(kmax + 1)]
    gk = tuple(_frac(v) for v in G[1:])
    ell = next((k + 1 for k, v in enumerate(gk) if v != 0), None)
    pd_coeffs = tuple((_frac(a), _frac(b)) for a, b in zip(A[1:], B[1:]))
    log = tuple(pd.log)
    if ell is None:
        return ResonantNormalForm(p, q, 0, None, None, degree, None, gk, pd_coeffs, log)
    g_ell = gk[ell - 1]
    delta = sign(g_ell)
    a_coeff = None
    if 2 * ell <= kmax:
        # a = -[U^ell] (1 / (1 + h)) / |g_ell| with G - 1 = g_ell U^ell (1 + h)
        rest = [gk[ell - 1 + j] / g_ell for j in range(0, kmax - ell + 1)]
        inv_h = series_inverse(rest, ell)
        a_coeff = _frac(-inv_h[ell] / abs(g_ell))
    return ResonantNormalForm(p, q, delta, ell, a_coeff, degree, _frac(p * g_ell), gk, pd_coeffs, log)


def _frac(v):
    return Fraction(v) if isinstance(v, int) else v


# ---------------------------------------------------------------------------
# local factorization of V
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class LocalFactorization:
    """``V = f_lambda^m1 f_mu^m2 u`` near the saddle.

    ``relation_holds`` records ``m1 lambda + m2 mu = div X(p0)``; ``case`` and
    ``case_ok`` the expected pattern: ``(1, 1)`` for strong nonresonant,
    ``(1+kq, 1+kp)`` for strong p:q resonant, ``m1 = m2`` for weak saddles.
    """

    m1: int
    m2: int
    unit_nonzero: bool
    relation_holds: bool
    case: str
    case_ok: bool
    k: int | None = None
    series_m: tuple | None = None
    truncation_order: int = 0

    def __iter__(self):
        return iter((self.m1, self.m2, self.unit_nonzero))


def _vanishes_on_branch(poly_loc: dict, coeffs, order, stable: bool) -> bool:
    if stable:
        poly_loc = {(j, i): c for (i, j), c in poly_loc.items()}
    sub = substitute_branch(poly_loc, coeffs, order)
    return all(j > 0 for (_, j) in sub)


def _branch_order(poly_loc: dict, coeffs, order, stable: bool) -> int | None:
    if stable:
        poly_loc = {(j, i): c for (i, j), c in poly_loc.items()}
    return order_in_z(substitute_branch(poly_loc, coeffs, order))


def local_iif_factorization(
    sys: PlanarSystem,
    V,
    saddle: SaddleInfo,
    f_lambda: BiPoly | None = None,
    f_mu: BiPoly | None = None,
    series_order: int = 12,
) -> LocalFactorization:
    """Multiplicities of ``V`` along the two separatrices of a saddle.

    Declared curves must be invariant and contain the corresponding branch
    (checked against the invariant-manifold series to ``series_order``);
    without declared curves the multiplicities come from the series alone.

    Raises
    ------
    ConsistencyError
        "separatrix factor mismatch" for non-invariant or misaligned curves.
    """
    _require_exact(saddle, "separatrix series")
    v = V.v if isinstance(V, InverseIntegratingFactor) else V
    basis = _eigen_frame(sys, saddle, None)
    g1, g2 = localize(sys.p, sys.q, saddle.location, basis, 1)
    hu = manifold_series(g1, g2, saddle.lam, saddle.mu, series_order, "unstable")
    hs = manifold_series(g1, g2, saddle.lam, saddle.mu, series_order, "stable")

    def loc(poly: BiPoly) -> dict:
        x, y = BiPoly.x(), BiPoly.y()
        (b11, b12), (b21, b22) = basis
        return dict(
            poly.compose(x * b11 + y * b12 + saddle.location[0],
                         x * b21 + y * b22 + saddle.location[1]).terms
        )

    v_loc = loc(v)
    s1 = _branch_order(v_loc, hu, series_order, False)
    s2 = _branch_order(v_loc, hs, series_order, True)
    if s1 is None or s2 is None:
        raise ValueError("V vanishes identically near the saddle")
    for name, f, coeffs, stable in (("f_lambda", f_lambda, hu, False), ("f_mu", f_mu, hs, True)):
        if f is None:
            continue
        if invariant_curve_cofactor(sys, f) is None:
            raise ConsistencyError(f"separatrix factor mismatch: {name} is not invariant")
        if not _vanishes_on_branch(loc(f), coeffs, series_order, stable):
            raise ConsistencyError(
                f"separatrix factor mismatch: {name} does not contain the "
                f"{'stable' if stable else 'unstable'} separatrix"
            )
    m1 = symbolic_multiplicity(v, f_lambda) if f_lambda is not None else s1
    m2 = symbolic_multiplicity(v, f_mu) if f_mu is not None else s2
    unit_nonzero = BiPoly(v_loc).low_degree() == m1 + m2
    relation = m1 * saddle.lam + m2 * saddle.mu
    relation_holds = (relation == saddle.divergence) if saddle.exact else abs(
        to_float(relation) - to_float(saddle.divergence)) < 1e-9
    k = None
    if saddle.weak:
        case, case_ok = "weak", m1 == m2
    elif saddle.resonance is None:
        case, case_ok = "strong nonresonant", (m1, m2) == (1, 1)
    else:
        p, q = saddle.resonance
        case = f"strong {p}:{q} resonant"
        case_ok = (m1 - 1) % q == 0 and (m2 - 1) % p == 0 and (m1 - 1) // q == (m2 - 1) // p >= 0
        k = (m1 - 1) // q if case_ok else None
    return LocalFactorization(m1, m2, unit_nonzero, bool(relation_holds), case, bool(case_ok), k,
                              (s1, s2), series_order)
