"""Command-line front end.

    ccrlab run SCENARIO [--out FILE] [--json|--csv] [--threads N] [--window-scale F]
    ccrlab classify A B
    ccrlab index S | cocycles S | boundary S | verify-fock S
    ccrlab export S --what {gram,masks,matrices} [--out FILE]

Exit codes: 0 all checks pass, 1 a check failed, 2 parse error, 3 unstable.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import platform
import sys
import time

import numpy as np

from . import __version__
from . import _exact as ex
from ._kernels import backend_name
from .checks import run_checks
from .classify import equivalent, profile_corroboration
from .config import load_scenario
from .errors import CCRLabError, CheckFailure, ParseError, Unstable

SCHEMA = "ccrlab-report/1"
EXIT_PASS, EXIT_FAIL, EXIT_PARSE, EXIT_UNSTABLE = 0, 1, 2, 3

log = logging.getLogger("ccrlab")


def _versions() -> dict:
    import numba
    import scipy

    return {
        "ccrlab": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "numba": numba.__version__,
        "python": platform.python_version(),
        "backend": backend_name(),
    }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else str(v)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if hasattr(obj, "numerator") and hasattr(obj, "denominator") and not isinstance(obj, int):
        return ex.fmt(obj)
    return obj


def dumps(doc) -> str:
    return json.dumps(_jsonable(doc), sort_keys=True, indent=2)


def _overall(records) -> str:
    st = [r["status"] for r in records]
    if "fail" in st:
        return "fail"
    if "unstable" in st:
        return "unstable"
    return "pass"


def _exit_for(status: str) -> int:
    return {"pass": EXIT_PASS, "fail": EXIT_FAIL, "unstable": EXIT_UNSTABLE}[status]


def build_report(cfg, S, threads=1) -> dict:
    t0 = time.perf_counter()
    records = [r.as_dict() for r in run_checks(S, cfg.checks, threads=threads)]
    return {
        "schema": SCHEMA,
        "scenario": cfg.name,
        "scenarioHash": cfg.digest(),
        "seed": cfg.seed,
        "versions": _versions(),
        "records": records,
        "status": _overall(records),
        "wallTime": round(time.perf_counter() - t0, 3),
    }


def _emit(text: str, out):
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _report_csv(report) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["check", "status", "metric", "value"])
    for rec in report["records"]:
        for key in sorted(rec["metrics"]):
            val = _jsonable(rec["metrics"][key])
            if not isinstance(val, (str, int, float, bool)) and val is not None:
                val = json.dumps(val, sort_keys=True)
            w.writerow([rec["name"], rec["status"], key, val])
    return buf.getvalue()


# subcommands -------------------------------------------------------------------


def cmd_run(args) -> int:
    cfg, S = load_scenario(args.scenario, args.window_scale)
    report = build_report(cfg, S, threads=args.threads)
    _emit(_report_csv(report) if args.csv else dumps(report) + "\n", args.out)
    for rec in report["records"]:
        log.info("%s: %s", rec["name"], rec["status"])
    return _exit_for(report["status"])


def cmd_classify(args) -> int:
    _, S1 = load_scenario(args.a, args.window_scale)
    _, S2 = load_scenario(args.b, args.window_scale)
    cert = equivalent(S1, S2)
    if args.json:
        doc = cert.as_dict()
        doc["profileCheck"] = profile_corroboration(S1, S2)
        _emit(dumps(doc) + "\n", args.out)
    else:
        lines = [f"equivalent: {'true' if cert.equivalent else 'false'}"]
        if not cert.equivalent:
            lines.append(f"witness: {[ex.fmt(v) for v in cert.witness]}")
            lines.append(f"spectrum A: {cert.spectrumA}  spectrum B: {cert.spectrumB}")
        _emit("\n".join(lines) + "\n", args.out)
    return EXIT_PASS if cert.valid() else EXIT_FAIL


def cmd_index(args) -> int:
    from .index import index_of

    _, S = load_scenario(args.scenario, args.window_scale)
    rep = index_of(S)
    if args.json:
        _emit(dumps(rep.as_dict()) + "\n", args.out)
    else:
        extra = " (refused: boundary not compact)" if rep.refused else ""
        _emit(f"index: {rep.index}{extra}\nindependence: {'pass' if rep.independence else 'fail'}\n", args.out)
    return EXIT_PASS if rep.independence and rep.stabilized else EXIT_FAIL


def cmd_cocycles(args) -> int:
    from .shiftrep import ShiftRep, cocycle_space_dim

    _, S = load_scenario(args.scenario, args.window_scale)
    rep = cocycle_space_dim(ShiftRep(S.pspace, S.window, S.k), S.generators(), S.ladder, report=True)
    if args.json:
        _emit(dumps(rep.as_dict()) + "\n", args.out)
    else:
        _emit(f"cocycle dimension: {rep.dim}\nraw dimensions: {rep.raw_dims}\n", args.out)
    return EXIT_PASS


def cmd_boundary(args) -> int:
    from .pspace import boundary_compact

    _, S = load_scenario(args.scenario, args.window_scale)
    v = boundary_compact(S.pspace)
    if args.json:
        _emit(dumps({"compact": v.compact, "dEff": v.d_eff, "reason": v.reason}) + "\n", args.out)
    else:
        _emit(v.text() + "\n", args.out)
    return EXIT_PASS


def cmd_verify_fock(args) -> int:
    from .checks import check_fock

    _, S = load_scenario(args.scenario, args.window_scale)
    rec = check_fock(S)
    if args.json:
        _emit(dumps(rec.as_dict()) + "\n", args.out)
    else:
        body = "\n".join(f"{k}: {v:.3e}" if isinstance(v, float) else f"{k}: {v}" for k, v in sorted(rec.metrics.items()))
        _emit(f"fock: {rec.status}\n{body}\n", args.out)
    return EXIT_PASS if rec.status == "pass" else EXIT_FAIL


def cmd_export(args) -> int:
    _, S = load_scenario(args.scenario, args.window_scale)
    if args.what == "gram":
        from .index import covariance, random_units
        from .pspace import rng_for

        K = 10 + max(0, S.k - 2)
        units = random_units(K, S.dim, S.k, rng_for(S.seed, 1))
        G = covariance(units, S.point_a, S.pspace, S.window).gram()
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        for row in G:
            w.writerow([repr(complex(v)) for v in row])
        _emit(buf.getvalue(), args.out)
    elif args.what == "masks":
        from .pspace import save_mask

        if not args.out:
            raise ParseError("export --what masks needs --out FILE")
        save_mask(args.out, S.window, S.pspace.mask(S.window))
    else:
        from .shiftrep import ShiftRep, export_coo

        R = ShiftRep(S.pspace, S.window, S.k)
        V = R.shift(S.generators()[0])
        if args.out:
            export_coo(V, args.out)
        else:
            export_coo(V, sys.stdout)
    return EXIT_PASS


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", metavar="FILE")
    common.add_argument("--threads", type=int, default=1, metavar="N")
    common.add_argument("--window-scale", default=None, metavar="F")
    fmt = common.add_mutually_exclusive_group()
    fmt.add_argument("--json", action="store_true")
    fmt.add_argument("--csv", action="store_true")
    common.add_argument("--verbose", "-v", action="store_true")

    p = argparse.ArgumentParser(prog="ccrlab", description="Lattice-quotient CCR flow verification suite.")
    p.add_argument("--version", action="version", version=f"ccrlab {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("run", parents=[common], help="run the checks listed in a scenario file")
    s.add_argument("scenario")
    s.set_defaults(func=cmd_run)

    s = sub.add_parser("classify", parents=[common], help="decide equivalence of two scenarios")
    s.add_argument("a")
    s.add_argument("b")
    s.set_defaults(func=cmd_classify)

    for name, func, hlp in (
        ("index", cmd_index, "GNS rank of the covariance kernel"),
        ("cocycles", cmd_cocycles, "dimension of the additive cocycle space"),
        ("boundary", cmd_boundary, "compactness of the boundary"),
        ("verify-fock", cmd_verify_fock, "Weyl relations and unit checks"),
    ):
        s = sub.add_parser(name, parents=[common], help=hlp)
        s.add_argument("scenario")
        s.set_defaults(func=func)

    s = sub.add_parser("export", parents=[common], help="write Gram matrix, masks or shift matrices")
    s.add_argument("scenario")
    s.add_argument("--what", choices=("gram", "masks", "matrices"), required=True)
    s.set_defaults(func=cmd_export)
    return p


def main(argv=None) -> int:
    p = _parser()
    try:
        args = p.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PARSE if exc.code not in (0, None) else EXIT_PASS
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s",
                        stream=sys.stderr)
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_PARSE
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except Unstable as exc:
        print(f"unstable: {exc}", file=sys.stderr)
        return EXIT_UNSTABLE
    except (CheckFailure, CCRLabError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
