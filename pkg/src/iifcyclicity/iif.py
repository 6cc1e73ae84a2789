"""Inverse integrating factors: verification, multiplicities and ratio checks."""
from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .algebra import BiPoly, ParamPoly, poly_divide_exact
from .errors import IntegrationError
from .system import PlanarSystem

__all__ = [
    "InverseIntegratingFactor",
    "verify_iif",
    "symbolic_multiplicity",
    "iif_ratio_first_integral",
    "zero_set_propagation",
    "RATIO_TOL",
]

RATIO_TOL = 1e-6


@dataclass(frozen=True)
class InverseIntegratingFactor:
    """Candidate inverse integrating factor ``V``.

    Parameters
    ----------
    v : BiPoly
        The polynomial ``V``.
    factors : tuple of (BiPoly, int)
        Optional declared factorization ``V = unit * prod(f_i ** e_i)``.
    unit : BiPoly, optional
        Cofactor of the declared factorization.
    """

    v: BiPoly
    factors: tuple = ()
    unit: BiPoly | None = None

    def __post_init__(self):
        if self.v.is_zero():
            raise ValueError("inverse integrating factor must not be identically zero")
        if self.factors:
            prod = self.unit if self.unit is not None else BiPoly.const(1)
            for f, e in self.factors:
                if e < 1:
                    raise ValueError("factor exponents must be positive")
                prod = prod * f**e
            if prod != self.v:
                raise ValueError("declared factorization does not expand to V")

    @classmethod
    def from_factors(cls, factors: Sequence[tuple[BiPoly, int]], unit: BiPoly | None = None):
        prod = unit if unit is not None else BiPoly.const(1)
        for f, e in factors:
            prod = prod * f**e
        return cls(prod, tuple(factors), unit)

    def bind(self, values) -> "InverseIntegratingFactor":
        if not self.factors:
            return InverseIntegratingFactor(self.v.bind(values))
        unit = self.unit.bind(values) if self.unit is not None else None
        return InverseIntegratingFactor(
            self.v.bind(values), tuple((f.bind(values), e) for f, e in self.factors), unit
        )

    def __call__(self, x, y):
        return self.v.to_float()(x, y)


def _as_poly(V) -> BiPoly:
    return V.v if isinstance(V, InverseIntegratingFactor) else V


def _residual(sys: PlanarSystem, v: BiPoly) -> BiPoly:
    return sys.lie_derivative(v) - v * sys.divergence


def _random_rational(rng: random.Random) -> Fraction:
    num = 0
    while num == 0:
        num = rng.randint(-60, 60)
    return Fraction(num, rng.randint(1, 17))


def _param_degree(p: BiPoly) -> int:
    return max(
        (c.degree() for c in p.terms.values() if isinstance(c, ParamPoly)), default=0
    )


def verify_iif(
    sys: PlanarSystem,
    V,
    mode: str = "symbolic",
    seed: int = 0,
    n_samples: int | None = None,
) -> BiPoly:
    """Residual ``P V_x + Q V_y - V div X`` of the inverse integrating factor PDE.

    Parameters
    ----------
    mode : {"symbolic", "sampling"}
        ``symbolic`` keeps free parameters as exact unknowns. ``sampling``
        binds the parameters to random rationals, at least ``(deg+1)**2``
        times where ``deg`` bounds the parameter degree of the residual, and
        returns the zero polynomial when every sample vanishes, otherwise the
        first nonzero sampled residual.

    Returns
    -------
    BiPoly
        Zero certifies ``V`` as an inverse integrating factor.
    """
    v = _as_poly(V)
    if mode == "symbolic":
        return _residual(sys, v)
    if mode != "sampling":
        raise ValueError(f"unknown mode {mode!r}")
    names = sorted(sys.parameters() | v.parameters())
    if not names:
        return _residual(sys, v)
    deg = max(_param_degree(sys.p), _param_degree(sys.q)) + _param_degree(v)
    count = n_samples if n_samples is not None else (deg + 1) ** 2
    rng = random.Random(seed)
    for _ in range(count):
        values = {n: _random_rational(rng) for n in names}
        res = _residual(sys.bind(values), v.bind(values))
        if not res.is_zero():
            return res
    return BiPoly.zero()


def symbolic_multiplicity(V, f: BiPoly) -> int:
    """Largest ``m`` such that ``f**m`` divides ``V`` exactly."""
    v = _as_poly(V)
    if f.is_zero():
        raise ValueError("curve polynomial is zero")
    if f.degree <= 0:
        raise ValueError("multiplicity along a constant is undefined")
    m = 0
    bound = v.degree // f.degree
    while m < bound:
        quot, rem = poly_divide_exact(v, f)
        if not rem.is_zero():
            break
        v, m = quot, m + 1
    return m


def iif_ratio_first_integral(
    V1,
    V2,
    sys: PlanarSystem,
    probe_orbits: Sequence,
    t_span: float = 10.0,
    rel_tol: float = 1e-11,
    vanish_tol: float = 1e-12,
) -> float:
    """Maximum relative variation of ``V1/V2`` along numerically integrated orbits.

    Two inverse integrating factors of the same field have a first integral
    as their ratio, so the returned value should be at integration accuracy.

    Raises
    ------
    IntegrationError
        "V2 vanished on orbit" when ``|V2|`` drops below ``vanish_tol``.
    """
    from .flow import integrate

    f1, f2 = _as_poly(V1).to_float(), _as_poly(V2).to_float()
    worst = 0.0
    for p0 in probe_orbits:
        traj = integrate(sys, p0, t_span, rel_tol=rel_tol)
        d = f2(traj.x, traj.y)
        if np.min(np.abs(d)) < vanish_tol:
            raise IntegrationError(f"V2 vanished on orbit from {tuple(p0)}")
        ratio = f1(traj.x, traj.y) / d
        scale = abs(ratio[0]) if ratio[0] != 0 else 1.0
        worst = max(worst, float(np.max(np.abs(ratio - ratio[0])) / scale))
    return worst


def zero_set_propagation(sys: PlanarSystem, V, p0, t_end: float, rel_tol: float = 1e-11) -> float:
    """Max ``|V|`` along the orbit of a point of the zero set of ``V``.

    Invariance of ``V = 0`` under the flow makes this an integration-error
    sized quantity.
    """
    from .flow import integrate

    traj = integrate(sys, p0, t_end, rel_tol=rel_tol)
    fv = _as_poly(V).to_float()
    return float(np.max(np.abs(fv(traj.x, traj.y))))
