"""Cyclicity conclusions from multiplicities, saddle data and map asymptotics.

Every verdict carries the rule it applied and an evidence trail so that a
report can be audited without rerunning the analysis.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.optimize import brentq

from ._format import format_value
from .algebra import BiPoly
from .algebra.numbers import to_fraction
from .errors import ConsistencyError
from .flow import Section, characteristic_exponent
from .saddle import ResonantNormalForm, SaddleInfo, SaddleQuantities
from .system import PlanarSystem, invariant_curve_cofactor

__all__ = [
    "CyclicityVerdict",
    "MapForm",
    "OvalCertificate",
    "PerturbationWitness",
    "limit_cycle_verdict",
    "map_multiplicity",
    "homoclinic_cyclicity",
    "roussarie_asymptotics",
    "existence_obstruction",
    "perturbation_witness",
    "PROBE_TOL",
    "EXPONENT_TOL",
]

PROBE_TOL = 1e-8
EXPONENT_TOL = 1e-6
BETA_TOL = 1e-8

KINDS = ("LimitCycleMultiplicity", "PeriodAnnulus", "HomoclinicCyclicity", "NoAnalyticIIF", "Undecided")


@dataclass(frozen=True)
class CyclicityVerdict:
    """Outcome of a cyclicity analysis.

    ``kind`` is one of ``KINDS``; ``value`` holds the multiplicity or the
    cyclicity when the kind carries one; ``rule`` names the result applied
    and ``evidence`` lists ``(name, value)`` facts that led to it.
    """

    kind: str
    value: int | None = None
    branch: str = ""
    reason: str = ""
    rule: str = ""
    evidence: tuple = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown verdict kind {self.kind!r}")
        if not self.evidence:
            raise ValueError("verdict needs evidence")

    def to_record(self) -> dict:
        return {
            "kind": self.kind,
            "value": self.value,
            "branch": self.branch,
            "reason": self.reason,
            "rule": self.rule,
            "evidence": [[name, format_value(v)] for name, v in self.evidence],
        }

    def __str__(self) -> str:
        head = self.kind if self.value is None else f"{self.kind}({self.value})"
        extra = self.branch or self.reason
        return f"{head}: {extra}" if extra else head


# ---------------------------------------------------------------------------
# periodic orbits
# ---------------------------------------------------------------------------
def map_multiplicity(samples: Sequence[tuple[float, float]]) -> tuple[int | None, float]:
    """Leading exponent of ``Pi(sigma) - sigma`` from ``(sigma, Pi(sigma))`` pairs.

    Returns the rounded exponent (``None`` when the displacement vanishes at
    every sample) and the fitted log-log slope. Only ``sigma > 0`` is used.
    """
    s = np.array([float(a) for a, _ in samples])
    d = np.array([float(b) - float(a) for a, b in samples])
    mask = (s > 0) & (np.abs(d) > 0)
    if mask.sum() < 2:
        return None, float("nan")
    slope = float(np.polyfit(np.log(s[mask]), np.log(np.abs(d[mask])), 1)[0])
    return int(round(slope)), slope


def _probe_identity(samples, tol) -> tuple[bool, float]:
    dev = max(abs(float(b) - float(a)) for a, b in samples)
    return dev < tol, dev


def limit_cycle_verdict(
    m_or_rho,
    leading_ok: bool = True,
    probe: Sequence[tuple[float, float]] | None = None,
    probe_tol: float = PROBE_TOL,
) -> CyclicityVerdict:
    """Verdict for a periodic orbit from the vanishing multiplicity of ``V``.

    A natural ``m >= 1`` means "limit cycle of multiplicity m or part of a
    period annulus"; ``probe`` samples ``(sigma, Pi(sigma))`` of the return
    map settle which. ``rho = 0`` or a non-integer ``rho > 1`` always gives a
    period annulus.
    """
    ev = [("multiplicity", m_or_rho), ("leading coefficient nonzero", bool(leading_ok))]
    rho = float(m_or_rho)
    is_natural = float(rho).is_integer() and rho >= 1
    if rho == 0 or (rho > 1 and not is_natural):
        return CyclicityVerdict(
            "PeriodAnnulus", None, reason="multiplicity zero or non-natural above one",
            rule="non-natural multiplicity implies a continuum of periodic orbits", evidence=tuple(ev))
    if not is_natural:
        return CyclicityVerdict("Undecided", None, reason="multiplicity outside the covered range",
                                rule="periodic-orbit multiplicity rule", evidence=tuple(ev))
    m = int(rho)
    if not leading_ok:
        return CyclicityVerdict("Undecided", None, reason="leading coefficient of V vanishes along the orbit",
                                rule="periodic-orbit multiplicity rule", evidence=tuple(ev))
    rule = "vanishing multiplicity equals limit-cycle multiplicity"
    if not probe:
        return CyclicityVerdict("Undecided", None, reason=f"limit cycle of multiplicity {m} or period annulus",
                                rule=rule, evidence=tuple(ev))
    identity, dev = _probe_identity(probe, probe_tol)
    ev += [("return-map probe max |Pi-sigma|", dev), ("probe tolerance", probe_tol),
           ("probe points", len(probe))]
    if identity:
        return CyclicityVerdict("PeriodAnnulus", None, branch="disambiguated by return-map probe",
                                rule=rule, evidence=tuple(ev))
    est, slope = map_multiplicity(probe)
    ev += [("probe exponent", slope)]
    return CyclicityVerdict("LimitCycleMultiplicity", m, branch="disambiguated by return-map probe",
                            rule=rule, evidence=tuple(ev))


# ---------------------------------------------------------------------------
# homoclinic loops
# ---------------------------------------------------------------------------
def homoclinic_cyclicity(
    m: int,
    saddle: SaddleInfo,
    alphas: SaddleQuantities | None = None,
) -> CyclicityVerdict:
    """Cyclicity of a homoclinic loop from the vanishing multiplicity ``m``.

    Strong saddle: cyclicity 1 (requires ``m = 1``). Weak saddle: ``2m - 1``
    when ``alpha_m != 0`` and ``2m`` when ``alpha_m = 0``.

    Raises
    ------
    ConsistencyError
        "inconsistent: strong saddle with m != 1".
    """
    ev = [("multiplicity", m), ("saddle", "strong" if saddle.strong else "weak"),
          ("hyperbolicity ratio", saddle.ratio_r)]
    rule = "homoclinic cyclicity from vanishing multiplicity"
    if m < 1:
        return CyclicityVerdict("Undecided", None, reason="multiplicity below one: loop not in zero set of V",
                                rule=rule, evidence=tuple(ev))
    if saddle.strong:
        if m != 1:
            raise ConsistencyError(f"inconsistent: strong saddle with m != 1 (m = {m})")
        return CyclicityVerdict("HomoclinicCyclicity", 1, branch="strong saddle", rule=rule, evidence=tuple(ev))
    if alphas is None or len(alphas.alphas) < m:
        return CyclicityVerdict("Undecided", None, reason=f"alpha_{m} not computed", rule=rule,
                                evidence=tuple(ev))
    ev.append(("saddle quantities", tuple(alphas.alphas[:m])))
    early = [k for k in range(1, m) if alphas.alpha(k) != 0]
    if early:
        return CyclicityVerdict("Undecided", None,
                                reason=f"contradiction: alpha_{early[0]} != 0 below m = {m}",
                                rule=rule, evidence=tuple(ev))
    if alphas.alpha(m) != 0:
        return CyclicityVerdict("HomoclinicCyclicity", 2 * m - 1,
                                branch="weak saddle, first nonzero saddle quantity alpha_m",
                                rule=rule, evidence=tuple(ev))
    return CyclicityVerdict("HomoclinicCyclicity", 2 * m,
                            branch="weak saddle, alpha_m = 0 (orbitally linearizable)",
                            rule=rule, evidence=tuple(ev))


@dataclass(frozen=True)
class MapForm:
    """Leading form of the loop return map and the matching cyclicity bound.

    ``case`` is one of ``"i" .. "v"`` or ``"undetermined"``; ``bound`` is
    ``None`` for case ``"v"`` (no upper bound) and when undetermined.
    """

    case: str
    leading_form: str
    bound: int | None
    k: int | None = None
    notes: tuple = ()

    @property
    def unbounded(self) -> bool:
        return self.case == "v"

    def to_record(self) -> dict:
        return {
            "case": self.case,
            "leading_form": self.leading_form,
            "bound": self.bound if self.bound is not None else "no upper bound",
            "k": self.k,
            "notes": list(self.notes),
        }


def _is_one(r) -> bool:
    if isinstance(r, (int, Fraction)) or hasattr(r, "norm"):
        return r == 1
    return abs(float(r) - 1.0) < 1e-10


def _beta_value(beta1):
    if beta1 is None:
        return None, 0.0
    if hasattr(beta1, "value"):
        return float(beta1.value), float(getattr(beta1, "truncation_error", 0.0))
    return float(beta1), 0.0


def roussarie_asymptotics(
    r,
    alphas: SaddleQuantities | None = None,
    beta1=None,
    m: int | None = None,
    betas_vanish: bool = False,
    beta_tol: float = BETA_TOL,
) -> MapForm:
    """Leading form of the loop return map ``Pi(sigma)`` and its cyclicity bound.

    Parameters
    ----------
    r : hyperbolicity ratio of the saddle.
    alphas : saddle quantities, used when ``r = 1``.
    beta1 : first separatrix quantity (float or ``Beta1``), optional.
    m : vanishing multiplicity of an IIF on the loop; when given together with
        ``alphas`` the separatrix quantities are inferred instead of computed.
    betas_vanish : declares every separatrix quantity zero (identity map).
    """
    if not _is_one(r):
        return MapForm("i", f"Pi(sigma) = c sigma^{format_value(r)} (1+o(1)), c > 0", 1)
    b1, b1_err = _beta_value(beta1)
    b1_zero_tol = max(beta_tol, 3.0 * b1_err)
    if m is not None and alphas is not None and len(alphas.alphas) >= m:
        if m >= 2 and alphas.alpha(m) != 0:
            k = m - 1
            return MapForm("iii", f"Pi(sigma) = sigma + alpha_{k + 1} sigma^{k + 1} log sigma + ...", 2 * k + 1, k,
                           (f"alpha_{k + 1} = {format_value(alphas.alpha(m))}",
                            "beta_1..beta_{m-1} vanish for a non-linearizable weak saddle"))
        if m == 1:
            return MapForm("ii", "Pi(sigma) = exp(beta_1) sigma + o(sigma)", 2, 1,
                           ("beta_1 nonzero: orbitally linearizable weak saddle, multiplicity 1",))
        return MapForm("iv", f"Pi(sigma) = sigma + beta_{m} sigma^{m} + o(sigma^{m})", 2 * m, m,
                       (f"beta_{m} nonzero: orbitally linearizable weak saddle, multiplicity {m}",))
    if b1 is not None and abs(b1) > b1_zero_tol:
        return MapForm("ii", "Pi(sigma) = exp(beta_1) sigma + o(sigma)", 2, 1, (f"beta_1 = {format_value(b1)}",))
    first = None
    if alphas is not None:
        first = next((k for k in range(2, len(alphas.alphas) + 1) if alphas.alpha(k) != 0), None)
    if first is not None:
        k = first - 1
        if betas_vanish or (k == 1 and b1 is not None):
            return MapForm("iii", f"Pi(sigma) = sigma + alpha_{k + 1} sigma^{k + 1} log sigma + ...", 2 * k + 1,
                           k, (f"alpha_{k + 1} = {format_value(alphas.alpha(first))}",))
        return MapForm("undetermined", "separatrix quantities beyond beta_1 unknown", None, k)
    if betas_vanish and alphas is not None:
        return MapForm("v", "Pi(sigma) = sigma", None, None,
                       ("all computed saddle quantities vanish", "separatrix quantities declared zero",
                        "no upper bound"))
    return MapForm("undetermined", "insufficient data", None)


def existence_obstruction(saddle: SaddleInfo, nf: ResonantNormalForm) -> bool:
    """True when a strong p:q resonant saddle is not formally orbitally linearizable.

    Then no analytic inverse integrating factor exists near a homoclinic
    loop through the saddle.
    """
    if saddle.resonance is None or not saddle.strong:
        return False
    return nf.delta != 0


# ---------------------------------------------------------------------------
# perturbation witness
# ---------------------------------------------------------------------------
_F_HAM = "y^2 - x^2 + x^3"
_CENTER_LEVEL = Fraction(4, 27)


@dataclass(frozen=True)
class OvalCertificate:
    a: object
    curve: BiPoly
    invariant: bool
    cofactor: BiPoly | None
    start: tuple
    exponent: float
    hyperbolic: bool

    @property
    def certified(self) -> bool:
        return self.invariant and self.hyperbolic

    def to_record(self) -> dict:
        return {
            "a": format_value(self.a),
            "curve": str(self.curve),
            "invariant": self.invariant,
            "cofactor": str(self.cofactor) if self.cofactor is not None else None,
            "start": format_value(self.start),
            "characteristic_exponent": format_value(self.exponent),
            "hyperbolic": self.hyperbolic,
        }


@dataclass(frozen=True)
class PerturbationWitness:
    system: PlanarSystem
    eps: object
    certificates: tuple
    exponent_tol: float = EXPONENT_TOL

    @property
    def all_certified(self) -> bool:
        return all(c.certified for c in self.certificates)

    def __iter__(self):
        return iter((self.system, self.certificates))


def _oval_start(c: float) -> tuple[float, float]:
    # f + c = 0 on y = 0: x^3 - x^2 + c = 0, outer root in (2/3, 1)
    if c <= 0:
        return (1.0, 0.0)
    x = brentq(lambda t: t ** 3 - t ** 2 + c, 2.0 / 3.0, 1.0, xtol=1e-15, rtol=1e-15)
    return (float(x), 0.0)


def perturbation_witness(
    n: int,
    eps,
    a: Sequence,
    exponent_tol: float = EXPONENT_TOL,
    rel_tol: float = 1e-12,
) -> PerturbationWitness:
    """Perturb the cubic Hamiltonian loop so that ``n`` ovals become limit cycles.

    Builds ``x' = -2y, y' = -2x + 3x^2 + eps y prod(f + a_i eps)`` with
    ``f = y^2 - x^2 + x^3`` and certifies each oval ``f + a_i eps = 0`` as
    invariant (exact cofactor) and hyperbolic (``|exponent| > exponent_tol``).
    ``eps = 0`` is accepted and yields the unperturbed Hamiltonian.

    Raises
    ------
    ValueError
        "constraint violated" when ``a_i eps`` leaves ``(0, 4/27)`` or the
        ``a_i`` repeat, or when ``len(a) != n``.
    """
    if n < 1 or len(a) != n:
        raise ValueError(f"constraint violated: need {n} values a_i, got {len(a)}")
    e = to_fraction(eps)
    av = [to_fraction(v) for v in a]
    if len(set(av)) != n:
        raise ValueError("constraint violated: a_i must be pairwise distinct")
    if e != 0:
        for ai in av:
            if not (0 < ai * e < _CENTER_LEVEL):
                raise ValueError(f"constraint violated: a_i*eps = {ai * e} outside (0, 4/27)")
    f = BiPoly.parse(_F_HAM)
    y = BiPoly.y()
    prod = BiPoly.const(1)
    for ai in av:
        prod = prod * (f + ai * e)
    p = BiPoly.parse("-2*y")
    q = BiPoly.parse("-2*x + 3*x^2") + e * y * prod
    sys = PlanarSystem(p, q, name=f"perturbed cubic loop n={n}")
    hamiltonian = sys.divergence.is_zero()
    certs = []
    for ai in av:
        curve = f + ai * e
        cof = invariant_curve_cofactor(sys, curve)
        start = _oval_start(float(ai * e))
        if hamiltonian:
            # zero divergence: every periodic orbit has exponent exactly 0
            expo = 0.0
        else:
            sec = Section.transversal(sys, start)
            expo = characteristic_exponent(sys, start, sec, rel_tol=rel_tol)
        certs.append(OvalCertificate(ai, curve, cof is not None, cof, start, float(expo),
                                     abs(expo) > exponent_tol))
    return PerturbationWitness(sys, e, tuple(certs), exponent_tol)
