"""Command-line front end: ``iifcyc <subcommand> --job FILE``.

Exit codes: 0 every task passed, 1 an analysis disagreed or failed, 2 the
input could not be parsed or validated.
"""
from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .algebra import set_max_degree
from .errors import JobError
from .jobs import JobReport, RunOptions, corpus_names, load_job, parse_job, run_job

EXIT_OK, EXIT_DISAGREE, EXIT_INPUT = 0, 1, 2

# task types selected by each subcommand; "run" executes every task
SUBCOMMANDS = {
    "run": None,
    "verify-iif": ("verify-iif", "first-integral-ratio"),
    "poincare": ("poincare", "trace-homoclinic"),
    "identity-check": ("identity-check",),
    "multiplicity": ("multiplicity",),
    "saddle": ("saddle", "saddle-quantities", "local-factorization"),
    "normal-form": ("normal-form",),
    "verdict": ("verdict",),
    "perturb": ("perturb",),
}


def _common(p: argparse.ArgumentParser, job_required: bool = True):
    p.add_argument("--job", required=job_required, help="job file (JSON) or built-in corpus name")
    p.add_argument("--out", type=Path, help="directory for JSON/text reports and CSV data")
    p.add_argument("--tol", type=float, help="default pass tolerance for numeric checks")
    p.add_argument("--max-degree", type=int, help="polynomial degree limit (default 64)")
    p.add_argument("--seed", type=int, default=0, help="seed for random rational sampling")
    p.add_argument("--format", choices=("text", "json"), default="text")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="iifcyc", description="Inverse integrating factor cyclicity analyses.")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name, help=f"run {'all' if name == 'run' else name} tasks of a job")
        _common(p, job_required=name != "perturb")
        if name == "perturb":
            p.add_argument("--n", type=int, help="number of ovals")
            p.add_argument("--eps", help="perturbation size (exact rational, e.g. 1/100)")
            p.add_argument("--a", nargs="+", help="distinct level shifts a_i")
    p = sub.add_parser("corpus", help="run the built-in example jobs")
    _common(p, job_required=False)
    p.add_argument("--only", nargs="+", help="subset of corpus job names")
    p.add_argument("--workers", type=int, default=1, help="jobs run concurrently (tasks stay sequential)")
    p.add_argument("--list", action="store_true", help="list corpus job names and exit")
    return ap


def _emit(reports: list[JobReport], fmt: str, stream):
    if fmt == "json":
        payload = [r.to_json() for r in reports]
        stream.write(json.dumps(payload[0] if len(payload) == 1 else payload, indent=2, sort_keys=True) + "\n")
    else:
        stream.write("\n\n".join(r.to_text() for r in reports) + "\n")


def _run_corpus_job(args):
    name, opts = args
    return run_job(load_job(name), opts)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.max_degree is not None:
        if args.max_degree < 1:
            print("input error: --max-degree must be positive", file=sys.stderr)
            return EXIT_INPUT
        set_max_degree(args.max_degree)
    opts = RunOptions(tol=args.tol, seed=args.seed, out=args.out)
    try:
        if args.command == "corpus":
            names = corpus_names()
            if args.list:
                print("\n".join(names))
                return EXIT_OK
            if args.only:
                missing = sorted(set(args.only) - set(names))
                if missing:
                    raise JobError(f"unknown corpus jobs {missing}", "--only")
                names = [n for n in names if n in args.only]
            for n in names:
                load_job(n)  # validate everything before running anything
            work = [(n, opts) for n in names]
            if args.workers > 1:
                with ProcessPoolExecutor(max_workers=args.workers) as ex:
                    reports = list(ex.map(_run_corpus_job, work))
            else:
                reports = [_run_corpus_job(w) for w in work]
        elif args.command == "perturb" and args.job is None:
            if args.n is None or args.eps is None or args.a is None:
                raise JobError("give --job or all of --n, --eps, --a", "perturb")
            job = parse_job({
                "name": "perturb",
                "system": {"p": "-2*y", "q": "-2*x+3*x^2"},
                "tasks": [{"type": "perturb", "n": args.n, "eps": args.eps, "a": args.a}],
            })
            reports = [run_job(job, opts)]
        else:
            job = load_job(args.job)
            opts.only = SUBCOMMANDS[args.command]
            reports = [run_job(job, opts)]
    except JobError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    _emit(reports, args.format, sys.stdout)
    return EXIT_OK if all(r.ok for r in reports) else EXIT_DISAGREE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
