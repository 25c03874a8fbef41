"""Command-line front end: PMF generation, operator checks, bounds, sweeps.

Exit codes: 0 success, 1 input error, 2 assertion failure (an operator defect
above threshold, or a dominance violation under ``--strict``).  Output is
deterministic for a fixed configuration: JSON is emitted with sorted keys and
CSV rows carry ``repr`` floats in a fixed column order.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import fileio
from .bcp import BoundReport, IndependentModel, bound_cor42, bound_cor45, bound_thm41, bound_thm44
from .catalog import run_catalog_check
from .distributions import (
    DEFAULT_TOL,
    PanjerCounting,
    SeverityLaw,
    pmf_bcp,
    pmf_binomial,
    pmf_compound_explicit,
    pmf_compound_panjer,
    pmf_negative_binomial,
    pmf_poisson,
    pmf_poisson_binomial,
    pmf_pseudo_binomial,
    tv_norm,
)
from .runs import RunsModel, bound_cor48, exact_runs_law, fit_runs_bcp

EXIT_OK = 0
EXIT_INPUT_ERROR = 1
EXIT_ASSERTION = 2

SWEEP_FIELDS = [
    "theorem",
    "point",
    "m",
    "delta",
    "p",
    "alpha",
    "hypotheses_met",
    "total",
    "total_over_prev",
    "tv_lower",
    "tv_upper",
    "dominant",
]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # input problems must exit 1, not argparse's 2
        raise UsageError(message)


def _default_tol() -> float:
    env = os.environ.get("STEINDIST_TOL")
    return float(env) if env else DEFAULT_TOL


def _parse_kv(text: str) -> dict[str, float]:
    out = {}
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        key, _, value = chunk.partition("=")
        if not _:
            raise UsageError(f"expected key=value, got {chunk!r}")
        out[key.strip()] = float(value)
    return out


def _parse_floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _parse_ints(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def build_parser() -> _Parser:
    parser = _Parser(prog="steindist", description=__doc__)
    parser.add_argument("--config", help="JSON file with default option values; flags win")
    sub = parser.add_subparsers(dest="command", required=True)

    p_pmf = sub.add_parser("pmf", help="emit a probability mass function")
    p_pmf.add_argument(
        "--family",
        required=True,
        choices=[
            "poisson",
            "binomial",
            "pseudo-binomial",
            "nb",
            "bcp",
            "compound",
            "poisson-binomial",
            "runs",
        ],
    )
    p_pmf.add_argument("--alpha", type=float)
    p_pmf.add_argument("--n", type=int)
    p_pmf.add_argument("--p", type=float)
    p_pmf.add_argument("--m-tilde", type=float)
    p_pmf.add_argument("--m", type=int)
    p_pmf.add_argument("--r", type=float)
    p_pmf.add_argument("--p-bar", type=float)
    p_pmf.add_argument("--pstar", type=float)
    p_pmf.add_argument("--probs", help="comma-separated Bernoulli probabilities")
    p_pmf.add_argument("--probs-file", help="JSON/CSV file of Bernoulli probabilities")
    p_pmf.add_argument("--panjer", help="counting coefficients, e.g. a=1,b=0")
    p_pmf.add_argument("--severity", help="JSON/CSV severity masses (compound family)")
    p_pmf.add_argument("--tol", type=float)
    p_pmf.add_argument("--format", choices=["json", "csv"], default="json")
    p_pmf.add_argument("--out")

    p_chk = sub.add_parser("check-operator", help="verify the characterising identity")
    p_chk.add_argument("--operator", help="single operator name (default: full grid)")
    p_chk.add_argument("--params", help="operator parameters, e.g. alpha=1")
    p_chk.add_argument("--law-params", help="law parameters when deliberately mismatched")
    p_chk.add_argument("--threshold", type=float, default=1e-9)
    p_chk.add_argument("--tol", type=float)
    p_chk.add_argument("--format", choices=["json", "csv"], default="json")
    p_chk.add_argument("--out")

    p_bnd = sub.add_parser("bound", help="evaluate a total-variation bound report")
    p_bnd.add_argument("--theorem", required=True, choices=["thm41", "cor42", "thm44", "cor45", "cor48"])
    p_bnd.add_argument("--probs", help="comma-separated indicator probabilities")
    p_bnd.add_argument("--probs-file", help="JSON/CSV file of indicator probabilities")
    p_bnd.add_argument("--model", help="JSON model file (independent or joint)")
    p_bnd.add_argument("--n", type=int, help="runs model length (cor48)")
    p_bnd.add_argument("--pstar", type=float, help="runs trial probability (cor48)")
    p_bnd.add_argument("--tail-mode", choices=["exact", "analytic"], default="exact")
    p_bnd.add_argument("--strict", action="store_true")
    p_bnd.add_argument("--out")

    p_swp = sub.add_parser("sweep", help="tabulate bounds over a parameter grid")
    p_swp.add_argument("--theorem", required=True, choices=["cor42", "cor45", "cor48"])
    p_swp.add_argument("--sizes", help="comma-separated sizes of the half-1/6-half-1/12 model")
    p_swp.add_argument("--n-values", help="comma-separated runs lengths (cor48)")
    p_swp.add_argument("--pstar", type=float, help="runs trial probability (cor48)")
    p_swp.add_argument("--strict", action="store_true")
    p_swp.add_argument("--out")
    return parser


def _load_probs(args) -> list[float]:
    if getattr(args, "probs", None):
        return _parse_floats(args.probs)
    if getattr(args, "probs_file", None):
        return fileio.load_masses(args.probs_file).tolist()
    raise UsageError("provide --probs or --probs-file")


def cmd_pmf(args) -> int:
    tol = args.tol if args.tol is not None else _default_tol()
    fam = args.family
    need = lambda name: UsageError(f"--{name.replace('_', '-')} is required for family {fam!r}")
    extra_record = None
    if fam == "poisson":
        if args.alpha is None:
            raise need("alpha")
        pmf = pmf_poisson(args.alpha, tol)
    elif fam == "binomial":
        if args.n is None or args.p is None:
            raise need("n/--p")
        pmf = pmf_binomial(args.n, args.p, tol)
    elif fam == "pseudo-binomial":
        if args.m_tilde is None or args.p is None:
            raise need("m-tilde/--p")
        pmf = pmf_pseudo_binomial(args.m_tilde, args.p, tol)
    elif fam == "nb":
        if args.r is None or args.p_bar is None:
            raise need("r/--p-bar")
        pmf = pmf_negative_binomial(args.r, args.p_bar, tol)
    elif fam == "bcp":
        if args.m is None or args.p is None or args.alpha is None:
            raise need("m/--p/--alpha")
        pmf = pmf_bcp(args.m, args.p, args.alpha, tol)
    elif fam == "poisson-binomial":
        pmf = pmf_poisson_binomial(_load_probs(args), tol)
    elif fam == "runs":
        if args.n is None or args.pstar is None:
            raise need("n/--pstar")
        pmf = exact_runs_law(RunsModel(args.n, args.pstar), tol)
    elif fam == "compound":
        if not args.panjer or not args.severity:
            raise need("panjer/--severity")
        kv = _parse_kv(args.panjer)
        if "a" not in kv or "b" not in kv:
            raise UsageError("--panjer needs a=... and b=...")
        counting = PanjerCounting.from_ab(kv["a"], kv["b"], tol)
        severity = SeverityLaw(fileio.load_masses(args.severity))
        pmf = pmf_compound_panjer(counting, severity, tol)
        cross = pmf_compound_explicit(counting.counting_masses(tol), severity, tol)
        l1 = tv_norm(pmf, cross)
        extra_record = {"cross_check_l1": l1, "cross_check_ok": bool(l1 <= 1e-10)}
    else:  # pragma: no cover - argparse restricts choices
        raise UsageError(f"unknown family {fam!r}")

    if args.format == "json":
        record = fileio.pmf_to_json_obj(pmf)
        if extra_record:
            record.update(extra_record)
        _emit(json.dumps(record, sort_keys=True, indent=2) + "\n", args.out)
    else:
        text = fileio.format_pmf(pmf, "csv")
        if extra_record:
            text += f"# cross_check_l1={extra_record['cross_check_l1']!r} ok={extra_record['cross_check_ok']}\n"
        _emit(text, args.out)
    return EXIT_OK


_SINGLE_OPERATORS = {"poisson", "pseudo-binomial", "nb"}


def _single_operator_records(args, tol: float) -> list[dict]:
    from . import operators as ops

    params = _parse_kv(args.params or "")
    law_params = _parse_kv(args.law_params or "") or params
    if args.operator == "poisson":
        if "alpha" not in params:
            raise UsageError("poisson needs alpha=...")
        op = ops.op_poisson(params["alpha"])
        law = pmf_poisson(law_params["alpha"], tol)
    elif args.operator == "pseudo-binomial":
        op = ops.op_pseudo_binomial(params["m_tilde"], params["p"])
        law = pmf_pseudo_binomial(law_params["m_tilde"], law_params["p"], tol)
    elif args.operator == "nb":
        op = ops.op_negative_binomial(params["r"], params["p_bar"])
        law = pmf_negative_binomial(law_params["r"], law_params["p_bar"], tol)
    else:
        raise UsageError(f"single-operator mode supports {sorted(_SINGLE_OPERATORS)}")
    worst = ops.max_indicator_defect(op, law)
    return [
        {
            "operator": f"{args.operator}({args.params or ''})",
            "max_defect": worst,
            "threshold": args.threshold,
            "ok": bool(worst <= args.threshold),
        }
    ]


def cmd_check_operator(args) -> int:
    tol = args.tol if args.tol is not None else _default_tol()
    if args.operator:
        records = _single_operator_records(args, tol)
    else:
        records = run_catalog_check(args.threshold, tol)
    if args.format == "json":
        _emit(json.dumps(records, sort_keys=True, indent=2) + "\n", args.out)
    else:
        rows = [
            {"operator": r["operator"], "max_defect": repr(r["max_defect"]), "ok": r["ok"]}
            for r in records
        ]
        _emit(fileio.format_sweep_csv(rows, ["operator", "max_defect", "ok"]), args.out)
    return EXIT_OK if all(r["ok"] for r in records) else EXIT_ASSERTION


def _bound_report(args) -> BoundReport:
    theorem = args.theorem
    if theorem == "cor48":
        if args.n is None or args.pstar is None:
            raise UsageError("cor48 needs --n and --pstar")
        return bound_cor48(RunsModel(args.n, args.pstar))
    if theorem in ("cor42", "cor45"):
        probs = _load_probs(args)
        if theorem == "cor42":
            return bound_cor42(probs)
        return bound_cor45(probs, tail_mode=args.tail_mode)
    if args.model:
        model = fileio.load_model(args.model)
    else:
        model = IndependentModel(_load_probs(args))
    return bound_thm41(model) if theorem == "thm41" else bound_thm44(model)


def cmd_bound(args) -> int:
    report = _bound_report(args)
    _emit(fileio.format_report(report), args.out)
    if args.strict and report.hypotheses_met and report.dominant is False:
        return EXIT_ASSERTION
    return EXIT_OK


def _mixed_model(n: int) -> list[float]:
    if n % 2:
        raise UsageError("mixed-model sizes must be even")
    return [1.0 / 6.0] * (n // 2) + [1.0 / 12.0] * (n // 2)


def cmd_sweep(args) -> int:
    points: list[tuple[str, object]] = []
    if args.theorem in ("cor42", "cor45"):
        if args.sizes is None:
            raise UsageError("cor42/cor45 sweeps need --sizes")
        for n in _parse_ints(args.sizes):
            points.append((f"n={n}", _mixed_model(n)))
        evaluate = (
            (lambda probs: bound_cor42(probs))
            if args.theorem == "cor42"
            else (lambda probs: bound_cor45(probs))
        )
    else:
        if args.n_values is None or args.pstar is None:
            raise UsageError("cor48 sweeps need --n-values and --pstar")
        for n in _parse_ints(args.n_values):
            points.append((f"n={n},pstar={args.pstar}", RunsModel(n, args.pstar)))
        evaluate = bound_cor48

    with concurrent.futures.ThreadPoolExecutor() as pool:
        reports = list(pool.map(lambda pt: evaluate(pt[1]), points))

    rows = []
    prev_total = None
    violation = False
    for (label, _), report in zip(points, reports):
        ratio = "" if prev_total in (None, 0.0) else repr(report.total / prev_total)
        prev_total = report.total
        rows.append(
            fileio.report_csv_row(report, extra={"point": label, "total_over_prev": ratio})
        )
        if report.hypotheses_met and report.dominant is False:
            violation = True
    _emit(fileio.format_sweep_csv(rows, SWEEP_FIELDS), args.out)
    return EXIT_ASSERTION if (args.strict and violation) else EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.config:
            config = json.loads(Path(args.config).read_text())
            if not isinstance(config, dict):
                raise UsageError("--config must contain a JSON object")
            for key, value in config.items():
                dest = key.replace("-", "_")
                if getattr(args, dest, None) in (None, False):
                    setattr(args, dest, value)
        handler = {
            "pmf": cmd_pmf,
            "check-operator": cmd_check_operator,
            "bound": cmd_bound,
            "sweep": cmd_sweep,
        }[args.command]
        return handler(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    except (ValueError, OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())
