"""Batch front end.

Exit codes: 0 success, 1 usage, 2 invalid or failing cover document,
3 obstruction, 4 uncertifiable.  Reports are JSON and contain no timing
unless ``--timing`` is given, so identical inputs give identical bytes.
"""
from __future__ import annotations

import argparse
import sys
import time
from fractions import Fraction
from pathlib import Path

from . import __version__
from ._jsonfmt import dump_text
from .cech import ObstructionError
from .cover import UNCHECKED_HYPOTHESIS, CoverFormatError, CoverSpec, cover_to_dict, load_cover, validate
from .extension import (
    ExtensionError,
    extend_one_order,
    immersion_spot_check,
    init,
    verify_congruence,
)
from .fixtures import NAMES, fixture_text, write_fixtures
from .majorant import CanonicalA, auto_parameters, certify, defect_bound_check, estimate_constants
from .series import StructureError, format_rational, parse_rational, series_to_json

EXIT_OK, EXIT_USAGE, EXIT_INVALID, EXIT_OBSTRUCTION, EXIT_UNCERTIFIABLE = 0, 1, 2, 3, 4
DEFAULT_RHO = Fraction(1, 100)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _rational(text: str) -> Fraction:
    try:
        return parse_rational(text)
    except (StructureError, ValueError) as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _load(path: str) -> CoverSpec:
    """Read a cover file; ``fixtures/NAME.cover`` falls back to the built-in gallery."""
    p = Path(path)
    if not p.exists() and p.suffix == ".cover" and p.stem in NAMES and p.parent.name in ("fixtures", ""):
        return load_cover(fixture_text(p.stem))
    return load_cover(p)


def _summary(spec: CoverSpec) -> dict:
    return {
        "t_arity": spec.t_arity, "fiber_dim": spec.fiber_dim, "ambient_dim": spec.ambient_dim,
        "charts": spec.chart_ids, "pairs": [list(p) for p in spec.pairs()],
        "triples": [list(t) for t in spec.ordered_triples()],
        "max_order": spec.max_order, "eq_degree_bound": spec.eq_degree_bound,
        "hypothesis_not_checked": UNCHECKED_HYPOTHESIS,
    }


def _emit(out: str | None, doc: dict) -> None:
    text = dump_text(doc)
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _validated(args, report: dict):
    spec = _load(args.spec)
    results = validate(spec)
    report["spec"] = cover_to_dict(spec)
    report["summary"] = _summary(spec)
    report["validation"] = [r.to_dict() for r in results]
    failed = [r.name for r in results if not r.passed]
    return spec, failed


def _extend(spec: CoverSpec, order: int, psi_degree):
    """Run the extension, recording each order; returns (state, obstruction or None)."""
    if order > spec.max_order:
        raise UsageError(f"--order {order} exceeds the document's max_order {spec.max_order}")
    state = init(spec)
    while state.order_reached < order:
        try:
            state = extend_one_order(state, psi_degree)
        except ObstructionError as exc:
            return state, exc.obstruction
    return state, None


def _history(state, c4_required=None) -> list:
    rows = []
    for rec in state.history:
        row = {
            "order": rec.order,
            "defect_norm": format_rational(rec.defect_norm),
            "split_norm": format_rational(rec.split_norm),
            "ansatz_degree": rec.ansatz_degree,
            "cocycle": "PASS" if rec.cocycle_passed else "FAIL",
            "split": "OK",
        }
        if c4_required is not None:
            c4 = c4_required.get(rec.order)
            row["c4_empirical"] = None if c4 is None else format_rational(c4)
        rows.append(row)
    return rows


def _congruence(state) -> dict:
    checks = verify_congruence(state)
    return {"order": state.order_reached, "passed": all(checks.values()),
            "pairs": {f"{j},{k}": ok for (j, k), ok in sorted(checks.items())}}


def _write_series(directory: str, state) -> list:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    out = []
    for j in state.spec.chart_ids:
        path = d / f"{j}.series.json"
        path.write_text(dump_text(series_to_json(state.approximants[j])))
        out.append(path.name)
    return out


# -- subcommands ----------------------------------------------------------------


def cmd_validate(args) -> int:
    report = {"command": "validate"}
    _, failed = _validated(args, report)
    report["verdict"] = "FAIL" if failed else "PASS"
    _emit(args.out, report)
    return EXIT_INVALID if failed else EXIT_OK


def cmd_run(args) -> int:
    report = {"command": "run", "parameters": {"order": args.order, "psi_degree": args.psi_degree}}
    spec, failed = _validated(args, report)
    if failed:
        report["verdict"] = "INVALID"
        _emit(args.out, report)
        return EXIT_INVALID
    start = time.perf_counter()
    state, obstruction = _extend(spec, args.order, args.psi_degree)
    c4 = None
    if obstruction is None and state.order_reached >= 1:
        a, b = auto_parameters(spec, state)
        ledger = estimate_constants(spec, a, b, DEFAULT_RHO)
        if ledger.c3 is not None:
            c4 = defect_bound_check(state, ledger, CanonicalA(a, b)).c4_required
            report["c4_parameters"] = {"a": format_rational(a), "b": format_rational(b),
                                       "rho": format_rational(DEFAULT_RHO)}
    report["history"] = _history(state, c4)
    report["order_reached"] = state.order_reached
    report["congruence"] = _congruence(state)
    if obstruction is not None:
        report["verdict"] = "OBSTRUCTED"
        report["obstruction"] = obstruction.to_dict()
        code = EXIT_OBSTRUCTION
    else:
        report["verdict"] = "OK"
        report["immersion"] = immersion_spot_check(state, [0] * spec.t_arity).to_dict()
        code = EXIT_OK
    if args.emit:
        report["series_files"] = _write_series(args.emit, state)
    if args.timing:
        report["timing_seconds"] = round(time.perf_counter() - start, 6)
    _emit(args.out, report)
    return code


def cmd_certify(args) -> int:
    report = {"command": "certify"}
    spec, failed = _validated(args, report)
    if failed:
        report["verdict"] = "INVALID"
        _emit(args.out, report)
        return EXIT_INVALID
    order = spec.max_order if args.order is None else args.order
    start = time.perf_counter()
    state, obstruction = _extend(spec, order, args.psi_degree)
    if obstruction is not None:
        report["history"] = _history(state)
        report["verdict"] = "OBSTRUCTED"
        report["obstruction"] = obstruction.to_dict()
        _emit(args.out, report)
        return EXIT_OBSTRUCTION
    auto_a, auto_b = auto_parameters(spec, state)
    a = auto_a if args.a is None else args.a
    b = auto_b if args.b is None else args.b
    report["parameters"] = {"order": order, "psi_degree": args.psi_degree,
                            "a": format_rational(a), "b": format_rational(b),
                            "rho": format_rational(args.rho),
                            "auto_a": args.a is None, "auto_b": args.b is None}
    cert = certify(spec, state, a, b, args.rho)
    report["history"] = _history(state, cert.defect_report.c4_required if cert.defect_report else None)
    report["congruence"] = _congruence(state)
    report["certificate"] = cert.to_dict()
    if cert.epsilon0 is not None:
        t_abs = cert.epsilon0 / 4
        report["immersion"] = immersion_spot_check(state, [t_abs] * spec.t_arity).to_dict()
    report["verdict"] = cert.verdict
    if args.timing:
        report["timing_seconds"] = round(time.perf_counter() - start, 6)
    _emit(args.out, report)
    return EXIT_OK if cert.certified else EXIT_UNCERTIFIABLE


def cmd_fixtures(args) -> int:
    if args.action == "list":
        sys.stdout.write("\n".join(NAMES) + "\n")
        return EXIT_OK
    if not args.directory:
        raise UsageError("fixtures export needs a target directory")
    names = args.names or list(NAMES)
    unknown = [n for n in names if n not in NAMES]
    if unknown:
        raise UsageError(f"unknown fixture(s): {', '.join(unknown)}")
    for path in write_fixtures(args.directory, names):
        sys.stdout.write(f"{path}\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="defembed", description="Extend embeddings over deformation families.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    v = sub.add_parser("validate", help="check the cocycle conditions of a cover document")
    v.add_argument("spec")
    v.add_argument("--out")
    v.set_defaults(func=cmd_validate)

    r = sub.add_parser("run", help="extend the embedding order by order")
    r.add_argument("spec")
    r.add_argument("--order", type=int, required=True)
    r.add_argument("--psi-degree", type=int, default=None)
    r.add_argument("--emit", metavar="DIR", help="write per-chart series documents here")
    r.add_argument("--out")
    r.add_argument("--timing", action="store_true")
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("certify", help="run, then check the convergence conditions")
    c.add_argument("spec")
    c.add_argument("--order", type=int, default=None)
    c.add_argument("--psi-degree", type=int, default=None)
    c.add_argument("--a", type=_rational, default=None)
    c.add_argument("--b", type=_rational, default=None)
    c.add_argument("--rho", type=_rational, default=DEFAULT_RHO)
    c.add_argument("--out")
    c.add_argument("--timing", action="store_true")
    c.set_defaults(func=cmd_certify)

    f = sub.add_parser("fixtures", help="list or export the built-in fixture gallery")
    f.add_argument("action", choices=("list", "export"))
    f.add_argument("directory", nargs="?")
    f.add_argument("names", nargs="*")
    f.set_defaults(func=cmd_fixtures)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        if getattr(args, "order", None) is not None and args.order < 0:
            raise UsageError("--order must be nonnegative")
        for name in ("a", "b", "rho"):
            val = getattr(args, name, None)
            if val is not None and val <= 0:
                raise UsageError(f"--{name} must be positive")
        return args.func(args)
    except UsageError as exc:
        sys.stderr.write(f"defembed: {exc}\n")
        return EXIT_USAGE
    except (CoverFormatError, StructureError, ExtensionError) as exc:
        sys.stderr.write(f"defembed: {exc}\n")
        return EXIT_INVALID


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
