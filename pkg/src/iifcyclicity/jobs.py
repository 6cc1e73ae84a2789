"""Analysis jobs: parsing, validation and sequential task execution.

A job is a JSON document with sections ``name``, ``params``, ``system``,
``iif``, ``curves``, ``points`` and ``tasks``. Polynomials are either
``[i, j, "num/den"]`` triple lists or expression strings in ``x``, ``y``,
the parameters and previously declared curves. Each task produces one
record with its settings, outputs, checks and the rule applied.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import curvilinear as cv
from ._format import format_value
from .algebra import BiPoly, ParamPoly
from .algebra.numbers import parse_expression, to_float, to_fraction
from .errors import IIFError, JobError
from .flow import (
    cycle_data,
    integrate,
    return_map,
    separatrix_quantity_beta1,
    trace_homoclinic,
    write_map_csv,
)
from .iif import InverseIntegratingFactor, iif_ratio_first_integral, symbolic_multiplicity, verify_iif
from .saddle import (
    MAX_K,
    MAX_NF_DEGREE,
    SaddleQuantities,
    classify_saddle,
    local_iif_factorization,
    resonant_normal_form,
    saddle_quantities,
)
from .system import PlanarSystem
from .verdict import (
    CyclicityVerdict,
    existence_obstruction,
    homoclinic_cyclicity,
    limit_cycle_verdict,
    perturbation_witness,
    roussarie_asymptotics,
)

__all__ = ["AnalysisJob", "RunOptions", "TaskRecord", "JobReport", "load_job", "parse_job", "run_job",
           "TASK_TYPES", "corpus_names", "corpus_path"]

CORPUS_DIR = Path(__file__).resolve().parent / "corpus"


def corpus_names() -> list[str]:
    return sorted(p.stem for p in CORPUS_DIR.glob("*.json"))


def corpus_path(name: str) -> Path:
    return CORPUS_DIR / f"{name}.json"


# ---------------------------------------------------------------------------
# job model
# ---------------------------------------------------------------------------
@dataclass
class AnalysisJob:
    """Validated job definition.

    ``system_symbolic`` keeps unbound parameters as symbols (used by exact
    PDE checks); ``system`` binds every parameter that has a value.
    """

    name: str
    params: dict
    system_symbolic: PlanarSystem
    system: PlanarSystem
    iif_symbolic: InverseIntegratingFactor | None
    iif: InverseIntegratingFactor | None
    curves: dict
    points: dict
    tasks: list
    source: str = ""
    curves_symbolic: dict = field(default_factory=dict)
    env_symbolic: dict = field(default_factory=dict)

    @property
    def bound_params(self) -> dict:
        return {k: v for k, v in self.params.items() if v is not None}

    @property
    def numeric_ready(self) -> bool:
        return not self.system.parameters()

    def param_float(self, name: str) -> float:
        v = self.params.get(name)
        if v is None:
            raise JobError(f"parameter {name!r} has no value", "params")
        return to_float(v)


@dataclass
class RunOptions:
    tol: float | None = None
    seed: int = 0
    out: Path | None = None
    only: tuple | None = None


@dataclass
class TaskRecord:
    index: int
    type: str
    label: str
    status: str
    rule: str
    settings: dict
    outputs: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)
    message: str = ""
    files: list = field(default_factory=list)

    def to_record(self) -> dict:
        return {
            "index": self.index,
            "type": self.type,
            "label": self.label,
            "status": self.status,
            "rule": self.rule,
            "settings": format_value(self.settings),
            "outputs": format_value(self.outputs),
            "checks": [format_value(c) for c in self.checks],
            "message": self.message,
            "files": list(self.files),
        }


@dataclass
class JobReport:
    name: str
    records: list

    @property
    def counts(self) -> dict:
        out = {"pass": 0, "fail": 0, "error": 0}
        for r in self.records:
            out[r.status] += 1
        return out

    @property
    def ok(self) -> bool:
        return all(r.status == "pass" for r in self.records)

    def to_json(self) -> dict:
        return {"job": self.name, "summary": self.counts, "tasks": [r.to_record() for r in self.records]}

    def to_text(self) -> str:
        c = self.counts
        lines = [f"job {self.name}: {len(self.records)} tasks, {c['pass']} pass, {c['fail']} fail, {c['error']} error"]
        for r in self.records:
            lines.append(f"[{r.index}] {r.type}{' ' + r.label if r.label else ''} ({r.rule}): {r.status}")
            if r.message:
                lines.append(f"    message: {r.message}")
            for k, v in r.to_record()["outputs"].items():
                if isinstance(v, str) and "\n" in v:
                    lines.append(f"    {k}:")
                    lines.extend("      " + ln for ln in v.splitlines())
                else:
                    lines.append(f"    {k}: {json.dumps(v, sort_keys=True)}")
            for chk in r.checks:
                name, observed, expected, ok = chk
                lines.append(
                    f"    check {name}: observed {format_value(observed)} expected {format_value(expected)}"
                    f" -> {'ok' if ok else 'MISMATCH'}"
                )
        return "\n".join(lines)


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------
def load_job(path) -> AnalysisJob:
    p = Path(path)
    if not p.exists() and corpus_path(str(path)).exists():
        p = corpus_path(str(path))
    try:
        text = p.read_text()
    except OSError as exc:
        raise JobError(f"cannot read job file: {exc.strerror}", str(path)) from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise JobError(f"invalid JSON: {exc.msg} (line {exc.lineno}, column {exc.colno})", str(path)) from None
    return parse_job(data, source=str(p))


def _poly(value, env, where) -> BiPoly:
    try:
        if isinstance(value, str):
            return BiPoly.parse(value, env)
        if isinstance(value, list):
            return BiPoly.from_triples(value, env)
        if isinstance(value, (int, float)):
            return BiPoly.const(to_fraction(value))
    except IIFError:
        raise
    except (ValueError, TypeError, KeyError, SyntaxError, ZeroDivisionError) as exc:
        raise JobError(f"cannot parse polynomial: {exc}", where) from None
    raise JobError("polynomial must be an expression string or [i, j, coeff] triples", where)


def _number(value, env, where):
    try:
        if isinstance(value, str):
            v = parse_expression(value, env)
        else:
            v = to_fraction(value)
    except (ValueError, TypeError, KeyError, SyntaxError, ZeroDivisionError) as exc:
        raise JobError(f"cannot parse number: {exc}", where) from None
    if isinstance(v, (BiPoly, ParamPoly)):
        raise JobError("expected a constant", where)
    return v


def parse_job(data: dict, source: str = "") -> AnalysisJob:
    """Validate a job dictionary; raises :class:`JobError` naming the bad field."""
    if not isinstance(data, dict):
        raise JobError("job must be a JSON object", "job")
    unknown = set(data) - {"name", "description", "params", "system", "iif", "curves", "points", "tasks"}
    if unknown:
        raise JobError(f"unknown sections {sorted(unknown)}", "job")
    name = str(data.get("name") or Path(source).stem or "job")
    params: dict = {}
    sym_env: dict = {}
    for k, v in (data.get("params") or {}).items():
        if not k.isidentifier() or k in ("x", "y"):
            raise JobError(f"invalid parameter name {k!r}", f"params.{k}")
        sym_env[k] = ParamPoly.symbol(k)
        params[k] = None if v is None else _number(v, {}, f"params.{k}")
    bound = {k: v for k, v in params.items() if v is not None}
    sysd = data.get("system")
    if not isinstance(sysd, dict) or "p" not in sysd or "q" not in sysd:
        raise JobError("system needs fields p and q", "system")
    p_s = _poly(sysd["p"], sym_env, "system.p")
    q_s = _poly(sysd["q"], sym_env, "system.q")
    try:
        system_symbolic = PlanarSystem(p_s, q_s, name=name)
    except (ValueError, IIFError) as exc:
        raise JobError(str(exc), "system") from None
    system = system_symbolic.bind(bound) if bound else system_symbolic

    curves_s: dict = {}
    curves: dict = {}
    for k, v in (data.get("curves") or {}).items():
        env = {**sym_env, **curves_s}
        c = _poly(v, env, f"curves.{k}")
        if c.is_zero():
            raise JobError("curve polynomial is zero", f"curves.{k}")
        curves_s[k] = c
        curves[k] = c.bind(bound) if bound else c

    iif_s = iif = None
    iifd = data.get("iif")
    if iifd is not None:
        env = {**sym_env, **curves_s}
        try:
            if isinstance(iifd, dict) and "factors" in iifd:
                factors = []
                for n, fe in enumerate(iifd["factors"]):
                    if not (isinstance(fe, list) and len(fe) == 2 and isinstance(fe[1], int)):
                        raise JobError("factor must be [polynomial, exponent]", f"iif.factors[{n}]")
                    factors.append((_poly(fe[0], env, f"iif.factors[{n}]"), fe[1]))
                unit = _poly(iifd["unit"], env, "iif.unit") if "unit" in iifd else None
                iif_s = InverseIntegratingFactor.from_factors(factors, unit)
            else:
                v = iifd["v"] if isinstance(iifd, dict) else iifd
                iif_s = InverseIntegratingFactor(_poly(v, env, "iif.v"))
        except ValueError as exc:
            raise JobError(str(exc), "iif") from None
        iif = iif_s.bind(bound) if bound else iif_s

    points: dict = {}
    for k, v in (data.get("points") or {}).items():
        if not (isinstance(v, list) and len(v) == 2):
            raise JobError("point must be [x, y]", f"points.{k}")
        points[k] = tuple(_number(c, bound, f"points.{k}") for c in v)

    tasks = data.get("tasks") or []
    if not isinstance(tasks, list):
        raise JobError("tasks must be a list", "tasks")
    job = AnalysisJob(name, params, system_symbolic, system, iif_s, iif, curves, points, tasks, source,
                      curves_s, sym_env)
    for n, t in enumerate(tasks):
        _validate_task(job, t, f"tasks[{n}]")
    return job


def _validate_task(job: AnalysisJob, t, where):
    if not isinstance(t, dict) or "type" not in t:
        raise JobError("task must be an object with a type", where)
    typ = t["type"]
    if typ not in TASK_TYPES:
        raise JobError(f"unknown task type {typ!r}", f"{where}.type")
    for key in ("point",):
        if key in t and t[key] not in job.points:
            raise JobError(f"unknown point {t[key]!r}", f"{where}.{key}")
    for key in ("curve", "f_lambda", "f_mu"):
        if key in t and t[key] not in job.curves:
            raise JobError(f"unknown curve {t[key]!r}", f"{where}.{key}")
    if "rel_tol" in t and not (1e-13 <= float(t["rel_tol"]) <= 1e-3):
        raise JobError("rel_tol outside [1e-13, 1e-3]", f"{where}.rel_tol")
    if "degree" in t and not (2 <= int(t["degree"]) <= MAX_NF_DEGREE):
        raise JobError(f"degree outside [2, {MAX_NF_DEGREE}]", f"{where}.degree")
    if "mode" in t and t["mode"] not in ("symbolic", "sampling"):
        raise JobError("mode must be symbolic or sampling", f"{where}.mode")
    if "K" in t and not (0 <= int(t["K"]) <= MAX_K):
        raise JobError(f"K outside [0, {MAX_K}]", f"{where}.K")
    needs_iif = typ in ("verify-iif", "multiplicity", "identity-check", "local-factorization") or (
        typ == "verdict" and t.get("kind") in ("homoclinic", "limit-cycle") and "m" not in t
    )
    if needs_iif and job.iif is None and "v" not in t:
        raise JobError("task needs an inverse integrating factor (iif section or v)", where)
    if "point" not in t and typ in ("saddle", "saddle-quantities", "normal-form", "local-factorization",
                                    "trace-homoclinic"):
        raise JobError("task needs a point", where)
    if "orbit" in t:
        _validate_orbit(t["orbit"], f"{where}.orbit")


def _validate_orbit(o, where):
    if not isinstance(o, dict) or o.get("type") not in ("ellipse", "polynomial", "trajectory"):
        raise JobError("orbit type must be ellipse, polynomial or trajectory", where)
    if o["type"] == "polynomial":
        for k in ("x", "y", "s_range"):
            if k not in o:
                raise JobError(f"polynomial orbit needs {k}", where)
    if o["type"] == "trajectory" and "start" not in o:
        raise JobError("trajectory orbit needs start", where)


# ---------------------------------------------------------------------------
# helpers shared by tasks
# ---------------------------------------------------------------------------
def _require_numeric(job: AnalysisJob):
    if not job.numeric_ready:
        raise JobError(f"numeric task needs values for parameters {sorted(job.system.parameters())}", "params")


def _task_v(job: AnalysisJob, task, symbolic: bool = False) -> BiPoly:
    """``V`` for a task: its own ``v`` field when present, else the job IIF."""
    if "v" in task:
        poly = _poly(task["v"], {**job.env_symbolic, **job.curves_symbolic}, "task.v")
        if symbolic or not job.bound_params:
            return poly
        return poly.bind(job.bound_params)
    return (job.iif_symbolic if symbolic else job.iif).v


def _fexpr(value, job: AnalysisJob) -> float:
    if isinstance(value, str):
        return to_float(parse_expression(value, job.bound_params))
    return float(value)


def _grid(spec, job) -> list[float]:
    if isinstance(spec, dict):
        a, b, n = _fexpr(spec["start"], job), _fexpr(spec["stop"], job), int(spec["count"])
        return [float(v) for v in np.linspace(a, b, n)]
    return [_fexpr(v, job) for v in spec]


def _build_frame(job: AnalysisJob, o: dict) -> cv.CurvilinearFrame:
    typ = o["type"]
    if typ == "ellipse":
        m1 = _fexpr(o.get("m1", "m1"), job)
        m2 = _fexpr(o.get("m2", "m2"), job)
        orbit = cv.ellipse_orbit(m1, m2)
    elif typ == "polynomial":
        xs = [_fexpr(c, job) for c in o["x"]]
        ys = [_fexpr(c, job) for c in o["y"]]
        orbit = cv.polynomial_orbit(xs, ys, [_fexpr(c, job) for c in o["s_range"]])
    else:
        start = tuple(_fexpr(c, job) for c in o["start"])
        rel_tol = float(o.get("rel_tol", 1e-12))
        cd = cycle_data(job.system, start, rel_tol=rel_tol)
        traj = integrate(job.system, start, cd.period, rel_tol=rel_tol)
        orbit = cv.SplineOrbit.from_trajectory(traj, periodic=True, close_tol=float(o.get("close_tol", 1e-6)))
    tube = o.get("tube_radius")
    return cv.CurvilinearFrame(orbit, tube_radius=None if tube is None else float(tube))


def _check(rec: TaskRecord, name, observed, expected, ok):
    rec.checks.append([name, observed, expected, bool(ok)])


def _exact_equal(observed, expected_text) -> bool:
    try:
        return observed == to_fraction(expected_text)
    except (ValueError, TypeError):
        return str(observed) == str(expected_text)


def _csv_path(opts: RunOptions, job: AnalysisJob, rec: TaskRecord, what: str) -> Path | None:
    if opts.out is None:
        return None
    opts.out.mkdir(parents=True, exist_ok=True)
    name = f"{job.name}_{rec.index:02d}_{rec.type}_{what}.csv"
    rec.files.append(name)
    return opts.out / name


def _tol(task, opts: RunOptions, default: float) -> float:
    if "tol" in task:
        return float(task["tol"])
    return float(opts.tol) if opts.tol is not None else default


def _linear_change(task, job):
    lc = task.get("linear_change")
    if lc is None:
        return None
    return [[_number(v, job.bound_params, "linear_change") for v in row] for row in lc]


def _saddle(job, task):
    return classify_saddle(job.system, job.points[task["point"]])


# ---------------------------------------------------------------------------
# task handlers: each fills rec.outputs / rec.checks and returns the rule name
# ---------------------------------------------------------------------------
def _t_verify_iif(job, task, rec, opts):
    mode = task.get("mode", "symbolic")
    v = _task_v(job, task, symbolic=True)
    sysm = job.system_symbolic
    if task.get("bind", False):
        v = _task_v(job, task)
        sysm = job.system
    res = verify_iif(sysm, v, mode=mode, seed=opts.seed)
    rec.settings.update(mode=mode, seed=opts.seed)
    rec.outputs["V"] = str(v)
    rec.outputs["residual"] = str(res)
    expect_zero = task.get("expect", {}).get("zero", True)
    _check(rec, "residual is zero", res.is_zero(), expect_zero, res.is_zero() == expect_zero)
    return "IIF PDE residual X V - V div X"


def _t_multiplicity(job, task, rec, opts):
    _require_numeric(job)
    v = _task_v(job, task)
    exp = task.get("expect", {})
    if "curve" in task:
        m_sym = symbolic_multiplicity(v, job.curves[task["curve"]])
        rec.outputs["m_symbolic"] = m_sym
    else:
        m_sym = None
    frame = _build_frame(job, task["orbit"])
    est = cv.numeric_multiplicity(frame, job.system, v)
    rec.outputs.update(
        m_numeric=est.m, integer=est.integer, rho=est.rho, fit_residual=est.fit_residual,
        slope_min=min(est.slopes), slope_max=max(est.slopes),
        min_abs_leading=min(abs(c) for _, c in est.leading_coeff_samples),
        leading_sign_constant=est.leading_sign_constant,
    )
    path = _csv_path(opts, job, rec, "leading")
    if path is not None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["s", "v"])
            for s, c in est.leading_coeff_samples:
                w.writerow([format_value(s), format_value(c)])
    if m_sym is not None:
        _check(rec, "symbolic = numeric", est.m, m_sym, est.m == m_sym and est.integer)
    if "m" in exp:
        _check(rec, "multiplicity", est.m, exp["m"], est.m == int(exp["m"]))
    if est.m >= 1 or exp.get("leading_nonzero", False):
        _check(rec, "leading coefficient nonzero", est.leading_nonzero, True, est.leading_nonzero)
    return "vanishing multiplicity along an orbit (log-log fit in the normal coordinate)"


def _t_identity(job, task, rec, opts):
    _require_numeric(job)
    v = _task_v(job, task)
    frame = _build_frame(job, task["orbit"])
    grid = _grid(task.get("sigma", {"start": 0.01, "stop": 0.2, "count": 20}), job)
    s0 = _fexpr(task["s0"], job) if "s0" in task else None
    s1 = _fexpr(task["s1"], job) if "s1" in task else None
    chk = cv.verify_transition_identity(frame, job.system, v, grid, s0, s1,
                                        rel_tol=float(task.get("rel_tol", 1e-13)))
    tol = _tol(task, opts, 1e-6)
    rec.settings.update(tol=tol, points=len(grid))
    rec.outputs["max_relative_residual"] = chk.max_residual
    path = _csv_path(opts, job, rec, "identity")
    if path is not None:
        chk.to_csv(path)
    _check(rec, "max relative residual below tol", chk.max_residual, tol, chk.max_residual < tol)
    return "transition identity Vt(L, Pi(sigma)) = Vt(0, sigma) Pi'(sigma)"


def _t_poincare(job, task, rec, opts):
    _require_numeric(job)
    frame = _build_frame(job, task["orbit"])
    s = _fexpr(task.get("s", 0.0), job)
    sec = cv.frame_section(frame, job.system, s)
    grid = _grid(task.get("sigma", [0.0]), job)
    rel_tol = float(task.get("rel_tol", 1e-12))
    samples = [return_map(job.system, sec, sg, rel_tol=rel_tol) for sg in grid]
    path = _csv_path(opts, job, rec, "map")
    if path is not None:
        write_map_csv(samples, path)
    rec.outputs["samples"] = [[m.sigma, m.image, m.derivative] for m in samples]
    exp = task.get("expect", {})
    zero = [m for m in samples if m.sigma == 0.0]
    if zero:
        d0 = zero[0].derivative
        rec.outputs.update(derivative_at_0=d0, period=zero[0].time, exponent=zero[0].div_integral)
        if "derivative0" in exp:
            want = _fexpr(exp["derivative0"], job)
            rt = float(exp.get("rel_tol", 1e-4))
            _check(rec, "Pi'(0) relative error", abs(d0 - want) / abs(want), rt, abs(d0 - want) < rt * abs(want))
    if task.get("identity_map"):
        dev = max(abs(m.image - m.sigma) for m in samples)
        tol = _tol(task, opts, 1e-7)
        rec.outputs["max_abs_pi_minus_sigma"] = dev
        _check(rec, "return map is identity", dev, tol, dev < tol)
    imp = task.get("implicit")
    if imp:
        params = (job.param_float("lam"), job.param_float("m1"), job.param_float("m2"))
        k0 = cv.implicit_map_k0(params[0], params[1]) if imp.get("k0", "auto") == "auto" else _fexpr(imp["k0"], job)
        worst = 0.0
        for m in samples:
            if m.sigma > 0:
                worst = max(worst, cv.implicit_poincare_check(abs(m.sigma), abs(m.image), params, k0))
        tol = float(imp.get("tol", 1e-5))
        rec.outputs.update(k0=k0, implicit_residual=worst)
        _check(rec, "implicit map residual", worst, tol, worst < tol)
    return "return map with variational derivative"


def _t_trace(job, task, rec, opts):
    _require_numeric(job)
    pt = job.points[task["point"]]
    offset = float(task.get("offset", 1e-6))
    cap = float(task.get("capture_radius", 1e-3))
    loop = trace_homoclinic(job.system, pt, offset, cap, rel_tol=float(task.get("rel_tol", 1e-11)))
    rec.outputs.update(samples=len(loop), duration=float(loop.t[-1]), status=loop.status)
    path = _csv_path(opts, job, rec, "loop")
    if path is not None:
        loop.to_csv(path)
    if "curve" in task:
        fv = job.curves[task["curve"]].to_float()
        dev = float(np.max(np.abs(fv(loop.x, loop.y))))
        tol = _tol(task, opts, 1e-5)
        rec.outputs["max_abs_curve"] = dev
        _check(rec, "loop on declared curve", dev, tol, dev < tol)
    if "beta1" in task:
        b = task["beta1"]
        try:
            res = separatrix_quantity_beta1(job.system, loop, pt, float(b.get("cut_radius", 1e-2)))
            rec.outputs.update(beta1=res.value, beta1_truncation_error=res.truncation_error)
            if b.get("nonzero"):
                _check(rec, "beta1 nonzero", abs(res.value), 10 * res.truncation_error,
                       abs(res.value) > 10 * res.truncation_error)
        except IIFError as exc:
            rec.outputs["beta1"] = str(exc)
            if "expect_error" in b:
                _check(rec, "beta1 error", str(exc), b["expect_error"], b["expect_error"] in str(exc))
            else:
                raise
    return "homoclinic loop tracing and divergence integral along the loop"


def _t_saddle(job, task, rec, opts):
    si = _saddle(job, task)
    rec.outputs.update(
        lambda_=si.lam, mu=si.mu, ratio_r=si.ratio_r, strong=si.strong,
        resonance=list(si.resonance) if si.resonance else None,
        numeric_resonance=si.numeric_resonance, divergence=si.divergence,
    )
    rec.outputs["lambda"] = rec.outputs.pop("lambda_")
    exp = task.get("expect", {})
    for key, attr in (("lambda", "lam"), ("mu", "mu"), ("ratio_r", "ratio_r")):
        if key in exp:
            obs = getattr(si, attr)
            _check(rec, key, obs, exp[key], _exact_equal(obs, exp[key]))
    if "strong" in exp:
        _check(rec, "strong", si.strong, exp["strong"], si.strong == exp["strong"])
    if "resonance" in exp:
        obs = list(si.resonance) if si.resonance else None
        _check(rec, "resonance", obs, exp["resonance"], obs == exp["resonance"])
    return "saddle classification by Jacobian eigenvalues"


def _t_saddle_quantities(job, task, rec, opts):
    si = _saddle(job, task)
    K = int(task.get("K", 3))
    sq = saddle_quantities(job.system, si, K=K, linear_change=_linear_change(task, job))
    rec.settings["K"] = K
    rec.outputs.update(alphas=list(sq.alphas), first_nonzero=sq.first_nonzero, degree=sq.degree)
    exp = task.get("expect", {})
    if "alphas" in exp:
        want = [to_fraction(a) for a in exp["alphas"]]
        got = list(sq.alphas[: len(want)])
        _check(rec, "alphas", got, want, got == want)
    return "saddle quantities from the resonant 1:1 normal form"


def _t_normal_form(job, task, rec, opts):
    si = _saddle(job, task)
    degree = int(task.get("degree", 15))
    nf = resonant_normal_form(job.system, si, degree, linear_change=_linear_change(task, job))
    rec.settings["degree"] = degree
    rec.outputs.update(
        p=nf.p, q=nf.q, delta=nf.delta, ell=nf.ell, obstruction_coeff=nf.obstruction_coeff,
        obstruction_monomial=list(nf.obstruction_monomial) if nf.obstruction_monomial else None,
        a_coeff=nf.a_coeff, orbital_coeffs=list(nf.orbital_coeffs),
        existence_obstruction=existence_obstruction(si, nf), report=nf.report(),
    )
    path = _csv_path(opts, job, rec, "coefficients")
    if path is not None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["k", "g_k", "A_k", "B_k"])
            for k, (g, (a, b)) in enumerate(zip(nf.orbital_coeffs, nf.pd_coeffs), start=1):
                w.writerow([k, str(g), str(a), str(b)])
    exp = task.get("expect", {})
    if "obstruction_coeff" in exp:
        _check(rec, "obstruction coefficient", nf.obstruction_coeff, exp["obstruction_coeff"],
               _exact_equal(nf.obstruction_coeff, exp["obstruction_coeff"]))
    if "delta_nonzero" in exp:
        _check(rec, "delta nonzero", nf.delta != 0, exp["delta_nonzero"], (nf.delta != 0) == exp["delta_nonzero"])
    if "existence_obstruction" in exp:
        obs = existence_obstruction(si, nf)
        _check(rec, "existence obstruction", obs, exp["existence_obstruction"], obs == exp["existence_obstruction"])
    return "formal orbital normal form of a resonant saddle"


def _t_local_factorization(job, task, rec, opts):
    si = _saddle(job, task)
    v = _task_v(job, task)
    fl = job.curves.get(task.get("f_lambda")) if "f_lambda" in task else None
    fm = job.curves.get(task.get("f_mu")) if "f_mu" in task else None
    lf = local_iif_factorization(job.system, v, si, fl, fm)
    rec.outputs.update(m1=lf.m1, m2=lf.m2, unit_nonzero=lf.unit_nonzero, relation_holds=lf.relation_holds,
                       case=lf.case, case_ok=lf.case_ok, k=lf.k, series_orders=list(lf.series_m))
    exp = task.get("expect", {})
    for key in ("m1", "m2"):
        if key in exp:
            _check(rec, key, getattr(lf, key), exp[key], getattr(lf, key) == exp[key])
    _check(rec, "relation m1 lambda + m2 mu = div", lf.relation_holds, True, lf.relation_holds)
    _check(rec, "unit nonzero at saddle", lf.unit_nonzero, True, lf.unit_nonzero)
    _check(rec, "case pattern", lf.case_ok, True, lf.case_ok)
    return "local factorization of V at a saddle"


def _t_verdict(job, task, rec, opts):
    kind = task.get("kind", "homoclinic")
    exp = task.get("expect", {})
    verdict = None
    if kind == "homoclinic":
        si = _saddle(job, task)
        m = int(task["m"]) if "m" in task else symbolic_multiplicity(_task_v(job, task), job.curves[task["curve"]])
        sq = None
        if "alphas" in task:
            sq = SaddleQuantities(tuple(to_fraction(a) for a in task["alphas"]), None)
        elif not si.strong:
            sq = saddle_quantities(job.system, si, K=max(m, int(task.get("K", 3))))
        verdict = homoclinic_cyclicity(m, si, sq)
        form = roussarie_asymptotics(si.ratio_r, sq, m=m)
        rec.outputs["map_form"] = form.to_record()
    elif kind == "limit-cycle":
        _require_numeric(job)
        frame = _build_frame(job, task["orbit"])
        v = _task_v(job, task)
        if "curve" in task:
            m = symbolic_multiplicity(v, job.curves[task["curve"]])
        else:
            m = cv.numeric_multiplicity(frame, job.system, v).rho
        est = cv.numeric_multiplicity(frame, job.system, v)
        sec = cv.frame_section(frame, job.system, 0.0)
        probe = [(sg, return_map(job.system, sec, sg).image) for sg in _grid(task.get("probe", [0.05, 0.1]), job)]
        verdict = limit_cycle_verdict(m, est.leading_nonzero, probe, float(task.get("probe_tol", 1e-8)))
    elif kind == "asymptotics":
        si = _saddle(job, task)
        sq = saddle_quantities(job.system, si, K=int(task.get("K", 3))) if not si.strong else None
        beta1 = task.get("beta1")
        form = roussarie_asymptotics(si.ratio_r, sq, beta1=beta1, betas_vanish=bool(task.get("betas_vanish")))
        rec.outputs["map_form"] = form.to_record()
        if "case" in exp:
            _check(rec, "asymptotic case", form.case, exp["case"], form.case == exp["case"])
        return "loop return-map asymptotics and cyclicity bound"
    elif kind == "obstruction":
        si = _saddle(job, task)
        nf = resonant_normal_form(job.system, si, int(task.get("degree", 15)),
                                  linear_change=_linear_change(task, job))
        obstructed = existence_obstruction(si, nf)
        ev = (("resonance", list(si.resonance) if si.resonance else None), ("strong", si.strong),
              ("delta", nf.delta), ("truncation degree", nf.truncation_degree))
        verdict = (CyclicityVerdict("NoAnalyticIIF", None, branch="strong resonant saddle not orbitally linearizable",
                                    rule="nonexistence of analytic IIF near the loop", evidence=ev)
                   if obstructed else
                   CyclicityVerdict("Undecided", None, reason="obstruction hypotheses not met",
                                    rule="nonexistence of analytic IIF near the loop", evidence=ev))
    else:
        raise JobError(f"unknown verdict kind {kind!r}", "task.kind")
    rec.outputs["verdict"] = verdict.to_record()
    if "kind" in exp:
        _check(rec, "verdict kind", verdict.kind, exp["kind"], verdict.kind == exp["kind"])
    if "value" in exp:
        _check(rec, "verdict value", verdict.value, exp["value"], verdict.value == exp["value"])
    return verdict.rule


def _t_perturb(job, task, rec, opts):
    w = perturbation_witness(int(task["n"]), task["eps"], task["a"],
                             exponent_tol=_tol(task, opts, 1e-6))
    rec.outputs.update(system_p=str(w.system.p), system_q=str(w.system.q),
                       ovals=[c.to_record() for c in w.certificates], all_certified=w.all_certified)
    want = task.get("expect", {}).get("all_certified", True)
    _check(rec, "all ovals certified", w.all_certified, want, w.all_certified == want)
    return "perturbation witness: invariant hyperbolic ovals"


def _t_ratio(job, task, rec, opts):
    _require_numeric(job)
    env = {**job.env_symbolic, **job.curves_symbolic}
    v1 = _poly(task["v1"], env, "task.v1").bind(job.bound_params)
    v2 = _poly(task["v2"], env, "task.v2").bind(job.bound_params)
    probes = [tuple(_fexpr(c, job) for c in p) for p in task["probes"]]
    dev = iif_ratio_first_integral(v1, v2, job.system, probes, t_span=float(task.get("t_span", 10.0)))
    tol = _tol(task, opts, 1e-6)
    rec.outputs["max_relative_variation"] = dev
    _check(rec, "ratio is a first integral", dev, tol, dev < tol)
    return "ratio of two IIFs is a first integral"


TASK_TYPES: dict[str, Callable] = {
    "verify-iif": _t_verify_iif,
    "multiplicity": _t_multiplicity,
    "identity-check": _t_identity,
    "poincare": _t_poincare,
    "trace-homoclinic": _t_trace,
    "saddle": _t_saddle,
    "saddle-quantities": _t_saddle_quantities,
    "normal-form": _t_normal_form,
    "local-factorization": _t_local_factorization,
    "verdict": _t_verdict,
    "perturb": _t_perturb,
    "first-integral-ratio": _t_ratio,
}

_SETTING_KEYS = ("point", "curve", "mode", "degree", "K", "rel_tol", "tol", "offset", "capture_radius",
                 "kind", "n", "eps", "a", "s0", "s1", "linear_change", "v", "f_lambda", "f_mu")


def run_job(job: AnalysisJob, opts: RunOptions | None = None) -> JobReport:
    """Run tasks in order; failures are recorded per task and later tasks still run."""
    opts = opts or RunOptions()
    records = []
    for n, task in enumerate(job.tasks, start=1):
        if opts.only is not None and task["type"] not in opts.only:
            continue
        settings = {k: task[k] for k in _SETTING_KEYS if k in task}
        if "orbit" in task:
            settings["orbit"] = task["orbit"].get("type")
        rec = TaskRecord(n, task["type"], str(task.get("label", "")), "pass", "", settings)
        try:
            rec.rule = TASK_TYPES[task["type"]](job, task, rec, opts)
            if any(not c[3] for c in rec.checks):
                rec.status = "fail"
        except (IIFError, ValueError, ArithmeticError) as exc:
            rec.status = "error"
            rec.message = f"{type(exc).__name__}: {exc}"
            rec.rule = rec.rule or "not applied"
        records.append(rec)
    report = JobReport(job.name, records)
    if opts.out is not None:
        opts.out.mkdir(parents=True, exist_ok=True)
        (opts.out / f"{job.name}_report.json").write_text(
            json.dumps(report.to_json(), indent=2, sort_keys=True) + "\n")
        (opts.out / f"{job.name}_report.txt").write_text(report.to_text() + "\n")
    return report

