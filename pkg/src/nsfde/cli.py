"""Command-line front end.

Exit codes: 0 every certification passed, 1 a certification failed (or the
solver refused a scenario), 2 usage or configuration error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import logging
import sys
from pathlib import Path

import numpy as np

from . import bihari
from .errors import DomainError, HypothesisError, NumericError
from .fbm_core import TimeGrid, build_cov_matrix, sample_cholesky, sample_volterra
from .sfde.config import ConfigError, defaults_text, load_scenario
from .sfde.hypotheses import validate_hypotheses
from .sfde.solver import picard_run
from .verify import cov_report, abs_norm_sweep, wiener_bound_sweep

log = logging.getLogger("nsfde")

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3
_MAX_SEED = (1 << 64) - 1


def _seed(text: str) -> int:
    try:
        value = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}") from None
    if not 0 <= value <= _MAX_SEED:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned value")
    return value


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(message)


class _UsageError(Exception):
    pass


def _writer(path: Path, header: list, timestamp: bool):
    path.parent.mkdir(parents=True, exist_ok=True)
    fh = open(path, "w", newline="")
    if timestamp:
        fh.write(f"# generated {_dt.datetime.now(_dt.timezone.utc).isoformat(timespec='seconds')}\n")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(header)
    return fh, w


def _g(x) -> str:
    return repr(float(x))


def _cmd_fbm_sample(args) -> int:
    grid = TimeGrid(args.t_end, args.steps)
    if args.method == "cholesky":
        paths = sample_cholesky(build_cov_matrix(grid, args.hurst), args.paths, args.seed)
    else:
        paths = sample_volterra(grid, args.hurst, args.paths, args.seed)
    fh, w = _writer(Path(args.out), ["path_id", "t", "value"], args.timestamp)
    with fh:
        for p, path in enumerate(paths):
            for t, v in zip(grid.nodes, path.values):
                w.writerow([p, _g(t), _g(v)])
    return EXIT_OK


def _cmd_fbm_verify(args) -> int:
    grid = TimeGrid(args.t_end, args.steps)
    rep = cov_report(grid, args.hurst, args.paths, args.seed, args.method)
    z = rep.z
    scaled = rep.scaled_error()
    fh, w = _writer(Path(args.out), ["i", "j", "t_i", "t_j", "empirical", "exact", "error", "se", "z"], args.timestamp)
    with fh:
        for i in range(rep.times.size):
            for j in range(rep.times.size):
                w.writerow([i + 1, j + 1, _g(rep.times[i]), _g(rep.times[j]), _g(rep.empirical[i, j]),
                            _g(rep.exact[i, j]), _g(rep.empirical[i, j] - rep.exact[i, j]), _g(rep.se[i, j]), _g(z[i, j])])
    if args.rel_budget is not None:
        ok = bool(np.max(scaled) <= args.rel_budget)
        print(f"max scaled error {np.max(scaled):.4g} (budget {args.rel_budget:g}): {'PASS' if ok else 'FAIL'}")
    else:
        ok = bool(np.max(np.abs(z)) <= args.max_z)
        print(f"max |z| {np.max(np.abs(z)):.3f} (limit {args.max_z:g}): {'PASS' if ok else 'FAIL'}")
    var_ok = rep.var_rel_err <= 0.05
    print(f"variance at T relative error {rep.var_rel_err:.4f} (limit 0.05): {'PASS' if var_ok else 'FAIL'}")
    return EXIT_OK if ok and var_ok else EXIT_FAIL


def _cmd_verify_bounds(args) -> int:
    hursts = tuple(args.hurst)
    if args.which == "abs-norm":
        rows = abs_norm_sweep(hursts, args.count, args.seed)
    else:
        fixtures = None if args.fixtures == "all" else tuple(args.fixtures.split(","))
        rows = wiener_bound_sweep(hursts, args.paths, args.seed, fixtures=fixtures)
    fh, w = _writer(Path(args.out), ["name", "lhs", "rhs", "se", "margin", "passed"], args.timestamp)
    with fh:
        for r in rows:
            w.writerow([r.name, _g(r.lhs), _g(r.rhs), _g(r.se), _g(r.margin), int(r.passed)])
    bad = [r.name for r in rows if not r.passed]
    print(f"{args.which}: {len(rows) - len(bad)}/{len(rows)} pass")
    for name in bad:
        print(f"violated: {name}")
    return EXIT_FAIL if bad else EXIT_OK


def _cmd_verify_bihari(args) -> int:
    rho = bihari.by_name(args.modulus)
    chk = bihari.modulus_check(rho)
    fh, w = _writer(Path(args.out), ["eps", "integral"], args.timestamp)
    with fh:
        for e, v in zip(chk.eps, chk.integrals):
            w.writerow([_g(e), _g(v)])
    for label in ("nondecreasing", "concave", "vanishes_at_zero", "splice_continuous", "divergent"):
        print(f"{rho.name} {label}: {'PASS' if getattr(chk, label) else 'FAIL'}")
    return EXIT_OK if chk.passed else EXIT_FAIL


def _print_report(report):
    sys.stdout.write(report.to_text())


def _cmd_hypotheses(args) -> int:
    s = load_scenario(args.scenario, args.seed)
    rep = validate_hypotheses(s)
    _print_report(rep)
    if args.out:
        Path(args.out).write_text(rep.to_text())
    for name in rep.violated:
        print(f"violated: {name}")
    return EXIT_OK if rep.passed else EXIT_FAIL


def _write_solve_outputs(run, out: Path, timestamp: bool):
    s = run.scenario
    nodes = s.nodes
    nh = s.n_hist
    u = run.extra.get("u")
    fh, w = _writer(out / "iterates.csv", ["iter", "path", "t", "mode", "value"], timestamp)
    with fh:
        for it in run.iterates:
            for p in range(it.samples.shape[0]):
                for i, t in enumerate(nodes):
                    for m in range(s.n_modes):
                        w.writerow([it.index, p, _g(t), m + 1, _g(it.samples[p, i, m])])
    fh, w = _writer(out / "moments.csv", ["iter", "t", "m_n", "u_of_t"], timestamp)
    with fh:
        for it in run.iterates:
            for i, t in enumerate(nodes):
                u_t = "" if u is None else _g(u[max(i - nh, 0)])
                w.writerow([it.index, _g(t), _g(it.moment[i]), u_t])
    fh, w = _writer(out / "cauchy.csv", ["iter", "t", "d"], timestamp)
    with fh:
        for n, row in enumerate(run.cauchy):
            for t, d in zip(nodes, row):
                w.writerow([n + 1, _g(t), _g(d)])


def _cmd_solve(args) -> int:
    if args.print_defaults:
        print(defaults_text(), end="")
        return EXIT_OK
    if not args.scenario or not args.out_dir:
        raise _UsageError("solve needs --scenario and --out-dir (or --print-defaults)")
    s = load_scenario(args.scenario, args.seed)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stamp = (
        f"# generated {_dt.datetime.now(_dt.timezone.utc).isoformat(timespec='seconds')}\n" if args.timestamp else ""
    )
    try:
        run = picard_run(s, force=args.force)
    except HypothesisError as exc:
        text = exc.report.to_text() + "refused: " + ", ".join(exc.violated) + "\n"
        (out / "report.txt").write_text(stamp + text)
        sys.stdout.write(text)
        return EXIT_FAIL
    except NumericError as exc:
        report = getattr(exc, "report", None)
        text = (report.to_text() if report is not None else "") + f"numeric failure: {exc}\n"
        (out / "report.txt").write_text(stamp + text)
        print(text, end="", file=sys.stderr)
        return EXIT_NUMERIC
    _write_solve_outputs(run, out, args.timestamp)
    (out / "report.txt").write_text(stamp + run.report.to_text())
    _print_report(run.report)
    return EXIT_OK if run.report.passed else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=_seed, default=None, help="seed override (64-bit unsigned)")
    common.add_argument("-v", "--verbose", action="store_true")
    common.add_argument("--no-timestamp", dest="timestamp", action="store_false", help="omit the timestamp header line")

    p = _Parser(prog="nsfde", description="fBm sampling, bound verification and neutral SFDE solving")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    fbm = sub.add_parser("fbm", help="scalar fBm sampling")
    fsub = fbm.add_subparsers(dest="fbm_command", required=True, parser_class=_Parser)
    for name, fn in (("sample", _cmd_fbm_sample), ("verify-cov", _cmd_fbm_verify)):
        sp = fsub.add_parser(name, parents=[common])
        sp.add_argument("--hurst", type=float, required=True)
        sp.add_argument("--t-end", type=float, default=1.0)
        sp.add_argument("--steps", type=int, default=16)
        sp.add_argument("--paths", type=int, default=1000)
        sp.add_argument("--out", required=True)
        sp.add_argument("--method", choices=("cholesky", "volterra"), default="cholesky")
        sp.set_defaults(func=fn)
        if name == "verify-cov":
            sp.add_argument("--max-z", type=float, default=5.0, help="limit on |error| / jackknife SE")
            sp.add_argument("--rel-budget", type=float, default=None, help="limit on |error| / sqrt(R_ii R_jj) instead")

    ver = sub.add_parser("verify", help="bound and modulus checks")
    vsub = ver.add_subparsers(dest="verify_command", required=True, parser_class=_Parser)
    vb = vsub.add_parser("bounds", parents=[common])
    vb.add_argument("--which", choices=("abs-norm", "wiener"), required=True)
    vb.add_argument("--hurst", type=float, nargs="+", default=[0.6, 0.75, 0.9])
    vb.add_argument("--count", type=int, default=100, help="random test functions per H (abs-norm)")
    vb.add_argument("--paths", type=int, default=10_000, help="Monte Carlo paths (wiener)")
    vb.add_argument("--fixtures", default="all", help="all or a comma list of constant,blocks,semigroup")
    vb.add_argument("--out", required=True)
    vb.set_defaults(func=_cmd_verify_bounds)
    vh = vsub.add_parser("bihari", parents=[common])
    vh.add_argument("--modulus", choices=sorted(bihari.registry()), required=True)
    vh.add_argument("--out", required=True)
    vh.set_defaults(func=_cmd_verify_bihari)

    hy = sub.add_parser("hypotheses", parents=[common], help="check the hypotheses of a scenario")
    hy.add_argument("--scenario", required=True)
    hy.add_argument("--out", default=None)
    hy.set_defaults(func=_cmd_hypotheses)

    so = sub.add_parser("solve", parents=[common], help="Picard run with certification")
    so.add_argument("--scenario")
    so.add_argument("--out-dir")
    so.add_argument("--force", action="store_true", help="run even if a hypothesis check fails")
    so.add_argument("--print-defaults", action="store_true")
    so.set_defaults(func=_cmd_solve)
    return p


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"nsfde: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if getattr(args, "seed", None) is None and args.command == "fbm":
        args.seed = 0
    if getattr(args, "seed", None) is None and args.command == "verify":
        args.seed = 0
    try:
        return args.func(args)
    except (_UsageError, ConfigError) as exc:
        print(f"nsfde: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except HypothesisError as exc:
        print(f"nsfde: refused: {', '.join(exc.violated)}", file=sys.stderr)
        return EXIT_FAIL
    except NumericError as exc:
        print(f"nsfde: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except DomainError as exc:
        print(f"nsfde: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"nsfde: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
