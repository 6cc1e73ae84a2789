"""Poincare-Dulac normal forms of a planar field with diagonal linear part.

Polynomials here are plain dicts ``{(i, j): coeff}`` so that truncated
products stay cheap; coefficients are any exact field elements (Fraction,
QuadraticNumber) or floats.

Given ``X' = L X + f(X)`` with ``L = diag(l1, l2)`` the reduction looks for
``x = X + h(X)`` with ``h`` free of resonant monomials such that
``X' = L X + g(X)`` and ``g`` holds only resonant monomials. Degree by
degree this is

    Delta * h_k + g_k = [f(X + h)]_k - [Dh g]_k,
    Delta = i l1 + j l2 - l_nu   for the monomial X^i Y^j in component nu.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .algebra import BiPoly
from .algebra.numbers import QuadraticNumber

__all__ = [
    "mul_trunc",
    "add_poly",
    "diff_poly",
    "compose_trunc",
    "localize",
    "PDResult",
    "poincare_dulac",
    "series_inverse",
    "manifold_series",
    "substitute_branch",
    "order_in_z",
    "default_eigenvector",
]


def _is_zero(c) -> bool:
    return c == 0


def add_poly(a: dict, b: dict, scale=1) -> dict:
    out = dict(a)
    for m, c in b.items():
        v = out.get(m, 0) + scale * c
        if _is_zero(v):
            out.pop(m, None)
        else:
            out[m] = v
    return out


def mul_trunc(a: dict, b: dict, deg: int, keep=None) -> dict:
    """Product truncated to total degree ``deg`` (or by the ``keep`` predicate)."""
    out: dict = {}
    for (i1, j1), c1 in a.items():
        for (i2, j2), c2 in b.items():
            i, j = i1 + i2, j1 + j2
            if keep is None:
                if i + j > deg:
                    continue
            elif not keep(i, j):
                continue
            v = c1 * c2
            m = (i, j)
            out[m] = out[m] + v if m in out else v
    return {m: c for m, c in out.items() if not _is_zero(c)}


def diff_poly(a: dict, var: int) -> dict:
    if var == 0:
        return {(i - 1, j): c * i for (i, j), c in a.items() if i}
    return {(i, j - 1): c * j for (i, j), c in a.items() if j}


def compose_trunc(f: dict, px: dict, py: dict, deg: int, keep=None) -> dict:
    """``f(px, py)`` truncated; powers are cached per call."""
    amax = max((i for i, _ in f), default=0)
    bmax = max((j for _, j in f), default=0)
    one = {(0, 0): 1}
    xp, yp = [one], [one]
    for _ in range(amax):
        xp.append(mul_trunc(xp[-1], px, deg, keep))
    for _ in range(bmax):
        yp.append(mul_trunc(yp[-1], py, deg, keep))
    out: dict = {}
    cache: dict = {}
    for (a, b), c in f.items():
        key = (a, b)
        if key not in cache:
            cache[key] = mul_trunc(xp[a], yp[b], deg, keep)
        for m, v in cache[key].items():
            out[m] = out[m] + c * v if m in out else c * v
    return {m: c for m, c in out.items() if not _is_zero(c)}


def default_eigenvector(mat, ev):
    """Exact eigenvector ``(b, ev - a)`` of ``[[a, b], [c, d]]`` (unnormalized)."""
    (a, b), (c, d) = mat
    if b != 0:
        return (b, ev - a)
    if c != 0:
        return (ev - d, c)
    return (Fraction(1), Fraction(0)) if ev == a else (Fraction(0), Fraction(1))


def _det(m):
    return m[0][0] * m[1][1] - m[0][1] * m[1][0]


def localize(p: BiPoly, q: BiPoly, point, basis, time_scale=1):
    """Field in coordinates ``x = point + basis (X, Y)`` divided by ``time_scale``.

    ``basis`` is a 2x2 matrix whose columns are the new axes. Returns the two
    components as dicts.
    """
    (b11, b12), (b21, b22) = basis
    det = b11 * b22 - b12 * b21
    if det == 0:
        raise ValueError("singular change of basis")
    x, y = BiPoly.x(), BiPoly.y()
    sub_x = x * b11 + y * b12 + point[0]
    sub_y = x * b21 + y * b22 + point[1]
    P = p.compose(sub_x, sub_y)
    Q = q.compose(sub_x, sub_y)
    # inverse basis applied to (P, Q), then time scaling
    g1 = (P * b22 - Q * b12) / (det * time_scale)
    g2 = (Q * b11 - P * b21) / (det * time_scale)
    return dict(g1.terms), dict(g2.terms)


@dataclass
class PDResult:
    """Outcome of a Poincare-Dulac reduction to ``degree``.

    ``g`` holds the retained resonant terms, ``h`` the normalizing change and
    ``log`` one entry per degree with removed and retained monomials.
    """

    l1: object
    l2: object
    degree: int
    g: tuple
    h: tuple
    log: list = field(default_factory=list)


def poincare_dulac(f1: dict, f2: dict, l1, l2, degree: int) -> PDResult:
    """Reduce ``X' = l1 X + f1, Y' = l2 Y + f2`` to resonant terms up to ``degree``.

    ``f1``, ``f2`` may contain the linear diagonal part; it is removed and
    off-diagonal linear terms are rejected.
    """
    f = []
    for comp, lin in ((f1, (1, 0)), (f2, (0, 1))):
        d = {m: c for m, c in comp.items() if m[0] + m[1] >= 2}
        if any(m[0] + m[1] == 0 for m in comp):
            raise ValueError("field does not vanish at the origin")
        lin_terms = {m: c for m, c in comp.items() if m[0] + m[1] == 1}
        f.append(d)
        expected = l1 if lin == (1, 0) else l2
        others = {m: c for m, c in lin_terms.items() if m != lin}
        if others or lin_terms.get(lin, 0) != expected:
            raise ValueError("linear part is not the declared diagonal matrix")
    lam = (l1, l2)
    h = [{}, {}]
    g = [{}, {}]
    log = []
    for k in range(2, degree + 1):
        xh = add_poly({(1, 0): 1}, h[0])
        yh = add_poly({(0, 1): 1}, h[1])
        removed, retained = [], []
        new_h = [{}, {}]
        for nu in (0, 1):
            S = compose_trunc(f[nu], xh, yh, k)
            S = {m: c for m, c in S.items() if m[0] + m[1] == k}
            T = add_poly(
                mul_trunc(diff_poly(h[nu], 0), g[0], k),
                mul_trunc(diff_poly(h[nu], 1), g[1], k),
            )
            T = {m: c for m, c in T.items() if m[0] + m[1] == k}
            R = add_poly(S, T, -1)
            for (i, j) in sorted(R, key=lambda m: (-m[0], m[1])):
                c = R[(i, j)]
                delta = i * l1 + j * l2 - lam[nu]
                if delta == 0:
                    g[nu][(i, j)] = c
                    retained.append((nu, i, j, c))
                else:
                    new_h[nu][(i, j)] = c / delta
                    removed.append((nu, i, j, c))
        for nu in (0, 1):
            h[nu].update(new_h[nu])
        log.append({"degree": k, "removed": removed, "retained": retained})
    return PDResult(l1, l2, degree, (g[0], g[1]), (h[0], h[1]), log)


def series_inverse(coeffs: list, order: int) -> list:
    """Coefficients of ``1 / (c0 + c1 t + ...)`` up to ``t**order``."""
    c0 = Fraction(coeffs[0]) if isinstance(coeffs[0], int) else coeffs[0]
    if c0 == 0:
        raise ZeroDivisionError("series with zero constant term")
    out = [1 / c0]
    for n in range(1, order + 1):
        acc = 0
        for k in range(1, n + 1):
            if k < len(coeffs):
                acc = acc + coeffs[k] * out[n - k]
        out.append(-acc / c0)
    return out


def manifold_series(g1: dict, g2: dict, lam, mu, order: int, which: str) -> list:
    """Invariant manifold as a graph, for ``X' = lam X + ..., Y' = mu Y + ...``.

    ``which="unstable"`` returns coefficients ``c`` of ``Y = sum c_k X^k``;
    ``which="stable"`` those of ``X = sum c_k Y^k`` (``c_0 = c_1 = 0``).
    """
    f1 = {m: c for m, c in g1.items() if m[0] + m[1] >= 2}
    f2 = {m: c for m, c in g2.items() if m[0] + m[1] >= 2}
    if which == "stable":
        # swap roles of the coordinates
        f1, f2 = ({(j, i): c for (i, j), c in f2.items()}, {(j, i): c for (i, j), c in f1.items()})
        lam, mu = mu, lam
    coeffs = [0, 0]
    for k in range(2, order + 1):
        # graph Y = h(X): mu h + f2(X, h) = h' (lam X + f1(X, h)); collect X^k
        hpoly = {(i, 0): c for i, c in enumerate(coeffs) if c != 0}
        hprime = {(i - 1, 0): c * i for i, c in enumerate(coeffs) if i and c != 0}
        keep = lambda i, j: j == 0 and i <= k  # noqa: E731
        xs = {(1, 0): 1}
        f1s = compose_trunc(f1, xs, hpoly, k, keep)
        f2s = compose_trunc(f2, xs, hpoly, k, keep)
        rhs = add_poly(mul_trunc(hprime, f1s, k, keep), f2s, -1)
        c = rhs.get((k, 0), 0)
        coeffs.append(c / (mu - k * lam))
    return coeffs


def substitute_branch(v: dict, coeffs: list, order: int) -> dict:
    """``v(X, h(X) + Z)`` with ``h = sum coeffs[k] X^k``, truncated at ``X**order``."""
    keep = lambda i, j: i <= order  # noqa: E731
    hz = {(i, 0): c for i, c in enumerate(coeffs) if c != 0}
    hz[(0, 1)] = 1
    return compose_trunc(v, {(1, 0): 1}, hz, 0, keep)


def order_in_z(p: dict) -> int | None:
    """Smallest ``j`` with a nonzero ``Z**j`` coefficient, ``None`` for zero."""
    return min((j for (_, j) in p), default=None)
