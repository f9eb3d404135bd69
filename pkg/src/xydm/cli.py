"""Command-line interface: ``xydm point | sweep | oracle | check``.

Exit codes: 0 success, 1 acceptance failure, 2 usage error, 3 numerical
failure, 4 oracle tolerance violation.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

from xydm import __version__, acceptance, chain, ed, sweep
from xydm.chain import THERMODYNAMIC_LIMIT, ChainParams, FiniteRing
from xydm.errors import NumericalError, XYDMError
from xydm.measures import discord_closed_form

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERICAL, EXIT_ORACLE = 0, 1, 2, 3, 4
#: default ED-versus-analytic tolerance for ``oracle`` and ``point --bless``
ORACLE_TOL = 5e-2


class UsageError(Exception):
    pass


def _temperature(args):
    if args.beta is None:
        return args.T
    if args.beta < 0 or math.isnan(args.beta):
        raise UsageError(f"--beta must be >= 0, got {args.beta}")
    return math.inf if args.beta == 0 else 1.0 / args.beta


def _add_params(p, J_required=True, defaults=True):
    d = (lambda v: v) if defaults else (lambda v: None)
    p.add_argument("--J", type=float, required=J_required)
    p.add_argument("--gamma", type=float, default=d(1.0))
    p.add_argument("--D", type=float, default=d(0.0))
    temp = p.add_mutually_exclusive_group()
    temp.add_argument("--T", type=float, default=d(0.0), help="temperature (0 = ground state)")
    temp.add_argument("--beta", type=float, help="inverse temperature (0 = infinite T)")
    p.add_argument("--r", type=int, default=1, help="site separation")


def _params(args, N=None):
    lattice = FiniteRing(N) if N is not None else THERMODYNAMIC_LIMIT
    return ChainParams(args.J, args.gamma, args.D, _temperature(args), lattice)


def _point_record(p, r):
    corr = chain.correlations(p, r)
    report = discord_closed_form(chain.pair_density_matrix(p, r))
    return {
        "params": {"J": p.J, "gamma": p.gamma, "D": p.D, "T": p.temperature, "r": r, "N": p.N},
        "correlations": {"sz": corr.sz, "xx": corr.xx, "yy": corr.yy, "zz": corr.zz},
        "measures": report.as_dict(),
    }


def _json_text(obj):
    return json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n"


def _json_default(v):
    raise TypeError(f"not JSON serializable: {v!r}")


def _point_csv(rec):
    cols = ["J", "gamma", "D", "T", "r", "sz", "xx", "yy", "zz", "MI", "QD", "CC", "C", "error"]
    values = {**rec["params"], **rec["correlations"], **rec["measures"], "error": ""}
    table = sweep.SweepTable(tuple(cols), [tuple(values[c] for c in cols)], {}, (1,))
    return table.to_csv()


def _emit(text, output):
    if output:
        Path(output).write_text(text, encoding="utf-8", newline="\n")
    else:
        sys.stdout.write(text)


def cmd_point(args):
    p = _params(args, args.N)
    rec = _point_record(p, args.r)
    text = _json_text(rec) if args.format == "json" else _point_csv(rec)
    if args.bless:
        cmp = ed.compare_to_analytic(p.replace(lattice=THERMODYNAMIC_LIMIT), args.r)
        last = cmp.Ns[-1]
        ok = cmp.max_delta(last) < ORACLE_TOL and all(cmp.shrinking().values())
        if not ok:
            print(f"refusing to bless: ED deltas at N={last} up to {cmp.max_delta(last):.3g} "
                  f"or not shrinking", file=sys.stderr)
            return EXIT_ORACLE
        Path(args.bless).write_text(_json_text(rec), encoding="utf-8", newline="\n")
        print(f"blessed {args.bless}", file=sys.stderr)
    _emit(text, args.output)
    return EXIT_OK


def parse_axis(text):
    parts = text.split(":")
    if len(parts) != 4:
        raise UsageError(f"--axis expects NAME:min:max:n, got {text!r}")
    name, lo, hi, n = parts
    try:
        return sweep.Axis(name, float(lo), float(hi), int(n))
    except ValueError as exc:
        raise UsageError(f"bad --axis {text!r}: {exc}") from exc


def parse_derivative(text):
    q, sep, ax = text.partition(":")
    if not sep:
        raise UsageError(f"--derivative expects QUANTITY:AXIS, got {text!r}")
    return q, ax


def _sweep_spec(args):
    inline = [f for f in ("axis", "J", "gamma", "D", "T", "beta", "r", "N",
                          "quantities", "derivative") if getattr(args, f) is not None]
    if args.spec:
        if inline:
            raise UsageError(f"--spec cannot be combined with --{', --'.join(inline)}")
        try:
            data = json.loads(Path(args.spec).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read spec file: {exc}") from exc
        if not isinstance(data, dict):
            raise UsageError("spec file must hold a JSON object")
        return sweep.SweepSpec.from_dict(data)
    if not args.axis:
        raise UsageError("sweep needs --axis or --spec")
    fixed = {k: getattr(args, k) for k in ("J", "gamma", "D") if getattr(args, k) is not None}
    if args.T is not None or args.beta is not None:
        fixed["temperature"] = _temperature(args)
    kw = {"axes": tuple(parse_axis(a) for a in args.axis), "fixed": fixed}
    if args.r is not None:
        kw["r"] = args.r
    if args.N is not None:
        kw["N"] = args.N
    if args.quantities is not None:
        kw["quantities"] = tuple(q.strip() for q in args.quantities.split(","))
    if args.derivative:
        kw["derivatives"] = tuple(parse_derivative(d) for d in args.derivative)
    return sweep.SweepSpec(**kw)


def cmd_sweep(args):
    spec = _sweep_spec(args)
    table = sweep.run_sweep(spec, workers=args.workers)
    if args.format == "csv":
        text = table.to_csv()
    else:
        text = json.dumps(table.to_json_dict(), indent=2, sort_keys=True) + "\n"
    _emit(text, args.output)
    if table.failures:
        print(f"warning: {table.failures} of {len(table.rows)} points failed", file=sys.stderr)
    return EXIT_OK


def _oracle_sizes(N):
    return tuple(range(8, N + 1, 2)) if N >= 8 else (N,)


def cmd_oracle(args):
    if args.N % 2 or not ed.N_MIN <= args.N <= ed.N_MAX:
        raise UsageError(f"--N must be even with {ed.N_MIN} <= N <= {ed.N_MAX}, got {args.N}")
    p = _params(args)
    lines, ok = [], True
    if args.gauge:
        partner = ed.gauge_partner(p)
        rep = ed.verify_gauge_equivalence(p, partner, args.N, boundary=args.boundary)
        ok = rep.match
        lines += [
            f"gauge: J={p.J:g} gamma={p.gamma:g} D={p.D:g} vs J={partner.J:.12g} D=0 "
            f"(N={args.N}, {args.boundary})",
            f"  spectra match:  {rep.spectra_match} (max deviation {rep.spectral_deviation:.3e})",
            f"  measures match: {rep.measures_match} (max deviation {rep.measure_deviation:.3e})",
        ]
    else:
        if args.boundary != "periodic":
            raise UsageError("--boundary applies only with --gauge")
        Ns = _oracle_sizes(args.N)
        cmp = ed.compare_to_analytic(p, args.r, Ns)
        shrink = cmp.shrinking()
        last = Ns[-1]
        within = cmp.max_delta(last) <= args.tol
        trend = len(Ns) == 1 or all(shrink.values())
        ok = within and trend
        header = f"{'quantity':>8} {'analytic':>14}" + "".join(f" {'dN=' + str(N):>12}" for N in Ns)
        lines.append(header)
        for q in ed.QUANTITIES:
            row = f"{q:>8} {cmp.analytic[q]:>14.8g}"
            row += "".join(f" {cmp.deltas[N][q]:>12.3e}" for N in Ns)
            if len(Ns) > 1 and not shrink[q]:
                row += "  not shrinking"
            lines.append(row)
        lines.append(f"max delta at N={last}: {cmp.max_delta(last):.3e} (tol {args.tol:g})")
    lines.append("OK" if ok else "VIOLATION")
    print("\n".join(lines))
    return EXIT_OK if ok else EXIT_ORACLE


def cmd_check(args):
    def progress(res):
        if not args.json:
            print(f"{'PASS' if res.passed else 'FAIL'}  {res.id}  {res.title}", flush=True)

    try:
        results = acceptance.run_suite(args.filter, progress=progress)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    doc = acceptance.dumps(acceptance.document(results))
    if args.output:
        Path(args.output).write_text(doc, encoding="utf-8", newline="\n")
    if args.json:
        sys.stdout.write(doc)
    else:
        n_pass = sum(r.passed for r in results)
        print(f"{n_pass}/{len(results)} criteria passed")
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAIL


def _workers(text):
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return n


def build_parser():
    parser = argparse.ArgumentParser(prog="xydm", description="Correlations in the XY chain "
                                     "with Dzyaloshinskii-Moriya interaction.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log warnings to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    pt = sub.add_parser("point", help="evaluate one parameter point")
    _add_params(pt)
    pt.add_argument("--N", type=int, help="finite ring size (default: infinite chain)")
    pt.add_argument("--format", choices=("json", "csv"), default="json")
    pt.add_argument("--output", help="write here instead of stdout")
    pt.add_argument("--bless", metavar="PATH",
                    help="after an ED check passes, write the JSON record to PATH")
    pt.set_defaults(func=cmd_point)

    sw = sub.add_parser("sweep", help="scan a parameter grid")
    sw.add_argument("--axis", action="append", help="NAME:min:max:n (NAME in J, gamma, D, T)")
    sw.add_argument("--spec", help="JSON sweep specification file")
    _add_params(sw, J_required=False, defaults=False)
    sw.set_defaults(r=None)
    sw.add_argument("--N", type=int, help="finite ring size (default: infinite chain)")
    sw.add_argument("--quantities", help="comma-separated subset of " + ",".join(sweep.QUANTITIES))
    sw.add_argument("--derivative", action="append", help="QUANTITY:AXIS, repeatable")
    sw.add_argument("--workers", type=_workers, default=None,
                    help=f"worker processes (default: ${sweep.WORKERS_ENV} or all cores)")
    sw.add_argument("--format", choices=("csv", "json"), default="csv")
    sw.add_argument("--output", help="write here instead of stdout")
    sw.set_defaults(func=cmd_sweep)

    orc = sub.add_parser("oracle", help="compare against exact diagonalization")
    _add_params(orc)
    orc.add_argument("--N", type=int, default=12, help="largest ring size (even, <= 14)")
    orc.add_argument("--tol", type=float, default=ORACLE_TOL)
    orc.add_argument("--gauge", action="store_true",
                     help="check the isotropic gauge mapping instead")
    orc.add_argument("--boundary", choices=ed.BOUNDARIES, default="periodic")
    orc.set_defaults(func=cmd_oracle)

    chk = sub.add_parser("check", help="run the acceptance suite")
    chk.add_argument("--filter", help="run only criteria whose id contains this text")
    chk.add_argument("--json", action="store_true", help="print the result document")
    chk.add_argument("--output", help="also write the result document here")
    chk.set_defaults(func=cmd_check)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.error(str(exc))
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (XYDMError, ValueError) as exc:
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
