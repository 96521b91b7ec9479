"""Command-line interface: ``qoper <group> <verb> [flags]``.

Documents are JSON objects tagged ``"schema": "qoper/1"``.  An input document
holds an ``instance`` and, depending on the verb, a ``solution``, ``q_plus``
polynomials or Bethe ``roots``.  Exit codes: 0 pass, 1 mathematical failure,
2 input error, 3 budget exceeded.  ``QOPER_LOG`` sets the log level.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from typing import Sequence

from . import __version__
from .backlund import backlund_chain, backlund_transform, certify_full_ztwist, verify_backlund_gauge
from .bethe import BetheRoots, SolverConfig, bethe_residual, solve_bethe
from .cartan import cartan_matrix, positive_roots, reduced_word_w0
from .errors import BudgetExceededError, GenericityError, InfeasibleDegreesError, InvalidInputError, QoperError
from .miura import (
    SLnRep,
    build_miura_connection,
    canonical_form_sln,
    canonical_tq_sl2,
    check_miura_plucker,
    sl2_gauge_to_Z,
    tq_residues,
)
from .poly import Poly, RationalFn
from .qqsystem import (
    QQInstance,
    QQSolution,
    _cpx_json,
    _cpx_from_json,
    check_nondegenerate,
    complete_solution,
    cyclic_coxeter_shift,
    relative_qq_residual,
    reorder_gauge,
)

SCHEMA = "qoper/1"
EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_BUDGET = 0, 1, 2, 3

log = logging.getLogger("qoper")


class _Failure(Exception):
    """A check failed; carries the report to print."""

    def __init__(self, doc: dict):
        super().__init__(doc.get("error", "check failed"))
        self.doc = doc


# --------------------------------------------------------------------------- input


def _parse_ints(text: str | None) -> list[int] | None:
    if text is None:
        return None
    try:
        return [int(x) for x in text.replace(" ", "").split(",") if x]
    except ValueError as exc:
        raise InvalidInputError(f"expected comma-separated integers, got {text!r}") from exc


def _load(path: str | None) -> dict:
    if path is None:
        raise InvalidInputError("--input is required for this verb")
    try:
        text = sys.stdin.read() if path == "-" else open(path, encoding="utf-8").read()
    except OSError as exc:
        raise InvalidInputError(f"cannot read {path}: {exc}") from exc
    text = text.strip()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError:
        # accept the first line of a JSON-lines stream
        try:
            doc = json.loads(text.splitlines()[0]) if text else None
        except (json.JSONDecodeError, IndexError) as exc:
            raise InvalidInputError(f"malformed JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise InvalidInputError("top-level JSON value must be an object")
    if "schema" in doc and doc["schema"] != SCHEMA:
        raise InvalidInputError(f"unsupported schema {doc['schema']!r}")
    return doc


def _instance(doc: dict) -> QQInstance:
    data = doc.get("instance", doc if "cartan" in doc else None)
    if data is None:
        raise InvalidInputError("document has no instance")
    return QQInstance.from_json(data)


def _q_plus(doc: dict, instance: QQInstance) -> list[Poly]:
    if "solution" in doc:
        return list(QQSolution.from_json(doc["solution"]).q_plus)
    if "q_plus" in doc:
        return [Poly.from_json(p) for p in doc["q_plus"]]
    if "roots" in doc:
        return _roots(doc, instance).q_plus()
    raise InvalidInputError("document needs a solution, q_plus or roots")


def _roots(doc: dict, instance: QQInstance) -> BetheRoots:
    if "roots" not in doc:
        return BetheRoots.from_q_plus(_q_plus(doc, instance))
    try:
        data = [[_cpx_from_json(w) for w in ws] for ws in doc["roots"]]
    except TypeError as exc:
        raise InvalidInputError("roots must be a list of per-node lists of [re, im]") from exc
    if len(data) != instance.rank:
        raise InvalidInputError("need one root list per node")
    return BetheRoots(tuple(tuple(ws) for ws in data))


def _solution(doc: dict, instance: QQInstance) -> QQSolution:
    if "solution" in doc:
        sol = QQSolution.from_json(doc["solution"])
    else:
        sol = complete_solution(instance, _q_plus(doc, instance))
    if len(sol.q_plus) != instance.rank:
        raise InvalidInputError("solution size does not match the instance rank")
    return sol


# --------------------------------------------------------------------------- output


def _tol(args, default: float) -> float:
    return default if args.tol is None else args.tol


def _doc(kind: str, **body) -> dict:
    return {"schema": SCHEMA, "kind": kind, **body}


def _emit(docs, fmt: str, out, csv_rows=None) -> None:
    if fmt == "csv":
        if csv_rows is None:
            raise InvalidInputError("csv output is only available for flat tables (roots, residuals)")
        header, rows = csv_rows
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
        out.write(buf.getvalue())
        return
    if fmt == "jsonl":
        for d in docs:
            out.write(json.dumps(d, sort_keys=True) + "\n")
        return
    payload = docs[0] if len(docs) == 1 else docs
    out.write(json.dumps(payload, sort_keys=True, indent=2) + "\n")


# --------------------------------------------------------------------------- verbs


def cmd_cartan_show(args) -> tuple[list, object]:
    if args.input:
        cartan = _instance(_load(args.input)).cartan
    else:
        if not args.type or not args.rank:
            raise InvalidInputError("cartan show needs --input or --type/--rank")
        cartan = cartan_matrix(args.type, args.rank, _parse_ints(args.ordering))
    doc = _doc(
        "cartan",
        lie_type=cartan.lie_type,
        rank=cartan.rank,
        ordering=list(cartan.ordering),
        matrix=[list(r) for r in cartan.cartan],
        positive_roots=[list(r) for r in positive_roots(cartan)],
        w0_word=reduced_word_w0(cartan),
    )
    rows = [[i + 1, *row] for i, row in enumerate(cartan.cartan)]
    return [doc], (["row", *[f"a{j + 1}" for j in range(cartan.rank)]], rows)


def _verify_report(instance, solution, args) -> dict:
    res = relative_qq_residual(instance, solution)
    tol = _tol(args, 1e-9)
    nd = check_nondegenerate(instance, solution, window=args.window)
    checks = {
        "qq_residual": {"passed": res < tol, "value": res, "tol": tol},
        "nondegenerate": nd.to_json(),
    }
    try:
        mp = check_miura_plucker(instance, solution, samples=args.samples, seed=args.seed)
        checks["miura_plucker"] = mp.to_json()
    except QoperError as exc:
        checks["miura_plucker"] = {"passed": False, "error": str(exc)}
    failing = [k for k, v in checks.items() if not v["passed"]]
    return _doc("verification", passed=not failing, failing=failing, checks=checks)


def cmd_qq_verify(args):
    doc = _load(args.input)
    instance = _instance(doc)
    if "solution" not in doc:
        raise InvalidInputError("qq verify needs a solution")
    report = _verify_report(instance, _solution(doc, instance), args)
    if not report["passed"]:
        raise _Failure(report)
    return [report], None


def cmd_qq_qminus(args):
    doc = _load(args.input)
    instance = _instance(doc)
    sol = complete_solution(instance, [p.monic() for p in _q_plus(doc, instance)])
    res = relative_qq_residual(instance, sol)
    out = _doc("solution", instance=instance.to_json(), solution=sol.to_json(), residual=res)
    if res >= _tol(args, 1e-9):
        raise _Failure({**out, "error": "reconstructed Q- does not solve the QQ-system"})
    return [out], None


def cmd_qq_reorder(args):
    doc = _load(args.input)
    instance = _instance(doc)
    sol = _solution(doc, instance)
    if args.cyclic:
        new_inst, new_sol = cyclic_coxeter_shift(instance, sol)
    else:
        order = _parse_ints(args.ordering)
        if order is None:
            raise InvalidInputError("qq reorder needs --ordering or --cyclic")
        new_inst, new_sol = reorder_gauge(instance, sol, order)
    res = relative_qq_residual(new_inst, new_sol)
    tol = _tol(args, 1e-8)
    out = _doc("solution", instance=new_inst.to_json(), solution=new_sol.to_json(), residual=res)
    if res >= tol:
        raise _Failure({**out, "error": "mapped solution fails the QQ-system"})
    return [out], None


def cmd_bethe_solve(args):
    doc = _load(args.input)
    instance = _instance(doc)
    degrees = _parse_ints(args.degrees)
    if degrees is None:
        raise InvalidInputError("bethe solve needs --degrees")
    if len(degrees) != instance.rank:
        raise InvalidInputError(f"--degrees needs {instance.rank} entries")
    cfg = SolverConfig(seed=args.seed, tol=_tol(args, 1e-9))
    found = solve_bethe(instance, degrees, cfg, with_solutions=True)
    docs, rows = [], []
    for k, (rs, sol) in enumerate(found):
        res = relative_qq_residual(instance, sol)
        docs.append(
            _doc("solution", instance=instance.to_json(), solution=sol.to_json(), roots=rs.to_json(), residual=res)
        )
        for i, ws in enumerate(rs.roots, start=1):
            for j, w in enumerate(ws):
                rows.append([k, i, j, repr(w.real), repr(w.imag), repr(res)])
    log.info("%d solution(s) for degrees %s", len(docs), degrees)
    return docs, (["solution", "node", "index", "re", "im", "qq_residual"], rows)


def cmd_bethe_residual(args):
    doc = _load(args.input)
    instance = _instance(doc)
    rs = _roots(doc, instance)
    res = bethe_residual(instance, rs)
    worst = max((abs(r) for node in res for r in node), default=0.0)
    tol = _tol(args, 1e-9)
    out = _doc(
        "bethe_residual",
        roots=rs.to_json(),
        residuals=[[_cpx_json(r) for r in node] for node in res],
        max_abs=worst,
        passed=worst < tol,
        tol=tol,
    )
    rows = [
        [i, j, repr(w.real), repr(w.imag), repr(abs(r))]
        for i, (ws, rr) in enumerate(zip(rs.roots, res), start=1)
        for j, (w, r) in enumerate(zip(ws, rr))
    ]
    if worst >= tol:
        raise _Failure(out)
    return [out], (["node", "index", "re", "im", "abs_residual"], rows)


def cmd_backlund_apply(args):
    doc = _load(args.input)
    instance = _instance(doc)
    sol = _solution(doc, instance)
    word = _parse_ints(args.word)
    if word is None:
        raise InvalidInputError("backlund apply needs --word")
    type_a = instance.cartan.lie_type == "A"
    try:
        chain = backlund_chain(instance, sol, word, samples=args.samples, seed=args.seed)
    except GenericityError as exc:
        raise _Failure(
            _doc(
                "backlund_chain",
                passed=False,
                error=str(exc),
                failed_step=exc.step,
                witnesses=[[_cpx_json(u), _cpx_json(v), int(n)] for u, v, n in exc.witnesses],
            )
        ) from exc
    out = chain.to_json()
    checks = {}
    if type_a:
        checks["gauge"] = [verify_backlund_gauge(s, samples=args.samples, seed=args.seed).to_json() for s in chain.steps]
        if len(word) == len(positive_roots(instance.cartan)):
            _, checks["full_ztwist"] = certify_full_ztwist(chain, samples=args.samples, seed=args.seed)
    if len(word) == 1:
        step = chain.steps[0]
        back = backlund_transform(step.post_instance, step.post_solution, word[0])
        p0 = sol.q_plus[word[0] - 1]
        p2 = back.post_solution.q_plus[word[0] - 1]
        err = (p2 - p0).max_abs() / max(p0.max_abs(), 1e-300) if p2.degree == p0.degree else float("inf")
        checks["involution"] = {"passed": err < 1e-8, "error": err, "tol": 1e-8}
    passed = all(c["passed"] for v in checks.values() for c in (v if isinstance(v, list) else [v]))
    passed = passed and out["verification"].get("passed", True)
    report = _doc("backlund_chain", passed=passed, checks=checks, **out)
    if not passed:
        raise _Failure(report)
    return [report], None


def cmd_miura_check(args):
    doc = _load(args.input)
    instance = _instance(doc)
    sol = _solution(doc, instance)
    checks = {"miura_plucker": check_miura_plucker(instance, sol, samples=args.samples, seed=args.seed).to_json()}
    if instance.cartan.lie_type == "A":
        try:
            build_miura_connection(instance, sol.q_plus, samples=args.samples, seed=args.seed)
            checks["connection"] = {"passed": True}
        except QoperError as exc:
            checks["connection"] = {"passed": False, "error": str(exc)}
        if instance.rank == 1:
            _, g = sl2_gauge_to_Z(
                instance, sol.q_plus[0], sol.q_minus[0], samples=args.samples, seed=args.seed, strict=False
            )
            checks["sl2_gauge"] = g.to_json()
    passed = all(v["passed"] for v in checks.values())
    report = _doc("miura_check", passed=passed, checks=checks)
    if not passed:
        raise _Failure(report)
    return [report], None


def _sl2_qplus(doc, instance):
    if instance.cartan.lie_type != "A" or instance.rank != 1:
        raise InvalidInputError("this verb needs an A1 instance")
    return _q_plus(doc, instance)[0].monic()


def cmd_tq_eval(args):
    doc = _load(args.input)
    instance = _instance(doc)
    qp = _sl2_qplus(doc, instance)
    T = canonical_tq_sl2(instance, qp, samples=args.samples, seed=args.seed)
    res = tq_residues(instance, qp, T)
    tol = _tol(args, 1e-8)
    worst = max((abs(r) for _, r in res), default=0.0)
    body = {
        "T": T.to_json(),
        "residues": [{"pole": _cpx_json(p), "residue": _cpx_json(r), "abs": abs(r)} for p, r in res],
        "max_residue": worst,
        "regular_at_poles": worst < tol,
        "tol": tol,
    }
    if args.points:
        pts = [complex(x.replace(" ", "").replace("i", "j")) for x in args.points.split(",")]
        body["values"] = [{"z": _cpx_json(z), "T": _cpx_json(T(z))} for z in pts]
    return [_doc("tq", **body)], (["pole_re", "pole_im", "abs_residue"], [[p.real, p.imag, abs(r)] for p, r in res])


def cmd_canonical(args):
    doc = _load(args.input)
    instance = _instance(doc)
    rep = SLnRep.for_instance(instance)
    if args.rep and args.rep.lower() not in (f"sl{rep.n}", "sln"):
        raise InvalidInputError(f"--rep {args.rep} does not match the instance (sl{rep.n})")
    qp = [p.monic() for p in _q_plus(doc, instance)]
    A = build_miura_connection(instance, qp, rep, samples=args.samples, seed=args.seed)
    _, T = canonical_form_sln(A, instance, rep, samples=args.samples, seed=args.seed)
    body = {"rep": f"sl{rep.n}", "T": [t.to_json() for t in T]}
    if rep.n == 2:
        # T_canonical = Lambda^2 T_tq under the s_i lifting with t_i = 1
        lam = RationalFn(instance.lam(1))
        body["T_tq"] = (T[0] / (lam * lam)).to_json()
    return [_doc("canonical", **body)], None


# --------------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", help="input JSON document ('-' for stdin)")
    common.add_argument("--seed", type=int, default=0, help="seed for solver starts and sample points")
    common.add_argument("--tol", type=float, default=None, help="pass/fail tolerance (verb-specific default)")
    common.add_argument("--window", type=int, default=20, help="q-power window for q-distinctness")
    common.add_argument("--samples", type=int, default=20, help="sample points for matrix identities")
    common.add_argument("--format", choices=("json", "jsonl", "csv"), default="json")

    p = argparse.ArgumentParser(prog="qoper", description="QQ-systems, Bethe equations and q-oper checks.")
    p.add_argument("--version", action="version", version=f"qoper {__version__}")
    groups = p.add_subparsers(dest="group", required=True)

    def verb(group, name, fn, help_):
        sp = group.add_parser(name, parents=[common], help=help_)
        sp.set_defaults(fn=fn)
        return sp

    g = groups.add_parser("cartan").add_subparsers(dest="verb", required=True)
    sp = verb(g, "show", cmd_cartan_show, "Cartan matrix, positive roots and a reduced word for w0")
    sp.add_argument("--type")
    sp.add_argument("--rank", type=int)
    sp.add_argument("--ordering")

    g = groups.add_parser("qq").add_subparsers(dest="verb", required=True)
    verb(g, "verify", cmd_qq_verify, "residual, nondegeneracy and Miura-Plucker checks")
    verb(g, "qminus", cmd_qq_qminus, "reconstruct Q- from Q+")
    sp = verb(g, "reorder", cmd_qq_reorder, "map a solution to another Coxeter ordering")
    sp.add_argument("--ordering")
    sp.add_argument("--cyclic", action="store_true")

    g = groups.add_parser("bethe").add_subparsers(dest="verb", required=True)
    sp = verb(g, "solve", cmd_bethe_solve, "solve the Bethe equations for given Q+ degrees")
    sp.add_argument("--degrees")
    sp.set_defaults(format="jsonl")
    verb(g, "residual", cmd_bethe_residual, "Bethe residual of given roots")

    g = groups.add_parser("backlund").add_subparsers(dest="verb", required=True)
    sp = verb(g, "apply", cmd_backlund_apply, "apply Backlund steps along a reduced word (right to left)")
    sp.add_argument("--word")

    g = groups.add_parser("miura").add_subparsers(dest="verb", required=True)
    verb(g, "check", cmd_miura_check, "Miura-Plucker and connection checks")

    g = groups.add_parser("tq").add_subparsers(dest="verb", required=True)
    sp = verb(g, "eval", cmd_tq_eval, "Baxter T(z) for an A1 solution with residues")
    sp.add_argument("--points", help="comma-separated complex points, e.g. 0.5+1j,2")

    sp = groups.add_parser("canonical", parents=[common], help="canonical coordinates T_i (type A, n <= 4)")
    sp.add_argument("--rep", help="sl2, sl3 or sl4; must match the instance")
    sp.set_defaults(fn=cmd_canonical)
    return p


def _configure_logging() -> None:
    level = os.environ.get("QOPER_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")


def main(argv: Sequence[str] | None = None, out=None) -> int:
    out = sys.stdout if out is None else out
    _configure_logging()
    args = build_parser().parse_args(argv)
    try:
        docs, rows = args.fn(args)
        _emit(docs, args.format, out, rows)
        return EXIT_OK
    except _Failure as f:
        _emit([f.doc], "json" if args.format == "csv" else args.format, out)
        return EXIT_FAIL
    except InfeasibleDegreesError as exc:
        _emit([_doc("error", error=str(exc), category="infeasible_degrees")], "json", out)
        return EXIT_FAIL
    except BudgetExceededError as exc:
        _emit([_doc("error", error=str(exc), category="budget")], "json", out)
        return EXIT_BUDGET
    except InvalidInputError as exc:
        print(json.dumps(_doc("error", error=str(exc), category="input")), file=sys.stderr)
        return EXIT_INPUT
    except QoperError as exc:
        _emit([_doc("error", error=str(exc), category=type(exc).__name__)], "json", out)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
