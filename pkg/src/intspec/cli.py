"""Command-line interface: ``intspec test | critval | generate | power``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 infeasible parameters.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .copulas import Scenario, ScenarioError, generate, preset
from .estimator import InsufficientExceedancesError
from .harness import analyze, plan_from_dict, run
from .limit import DEFAULT_SIZES, CriticalTable, pillow_critical_values
from .sample import NORMS, DimensionError, InfeasibleSchemeError, Sample
from .stationarity import MissingSimulationError, TestReport

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INFEASIBLE = 0, 1, 2, 3


class DataError(ValueError):
    """Input file or configuration could not be parsed."""


class UsageError(Exception):
    pass


# --- ingestion ------------------------------------------------------------------

@dataclass(frozen=True)
class DatasetSpec:
    """Delimited text file with one observation per row.

    ``columns`` are names (with a header) or 0-based positions; by default every
    column except ``time_column``.  ``total_threshold`` keeps rows whose
    component sum is at least the threshold; ``all_threshold`` keeps rows whose
    components all exceed it.  Filters are applied before blocking.
    """

    path: str
    columns: tuple = ()
    time_column: str | int | None = None
    delimiter: str = ","
    header: str = "auto"  # auto, yes, no
    total_threshold: float | None = None
    all_threshold: float | None = None


def _float(text: str, line: int, col) -> float:
    try:
        return float(text)
    except ValueError:
        raise DataError(f"line {line}: column {col}: cannot parse {text!r} as a number") from None


def _resolve(key, names) -> int:
    if isinstance(key, int) or (isinstance(key, str) and key.isdigit()):
        return int(key)
    if names is None:
        raise DataError(f"column {key!r} given by name but the file has no header")
    lowered = [n.strip().lower() for n in names]
    if key.strip().lower() not in lowered:
        raise DataError(f"column {key!r} not found in header {names}")
    return lowered.index(key.strip().lower())


def read_dataset(spec: DatasetSpec) -> Sample:
    try:
        text = Path(spec.path).read_text()
    except OSError as exc:
        raise DataError(f"cannot read {spec.path}: {exc.strerror}") from None
    rows = [r for r in csv.reader(io.StringIO(text), delimiter=spec.delimiter)]
    numbered = [(i + 1, r) for i, r in enumerate(rows) if r and any(c.strip() for c in r)]
    if not numbered:
        raise DataError(f"{spec.path}: no data rows")
    names = None
    first = numbered[0][1]
    has_header = spec.header == "yes" or (spec.header == "auto" and not _numeric_row(first))
    if has_header:
        names = first
        numbered = numbered[1:]
    if not numbered:
        raise DataError(f"{spec.path}: no data rows")
    width = len(numbered[0][1])
    tcol = None if spec.time_column is None else _resolve(spec.time_column, names)
    cols = [_resolve(c, names) for c in spec.columns] if spec.columns else [j for j in range(width) if j != tcol]
    if len(cols) < 2:
        raise DataError(f"need at least 2 value columns, got {len(cols)}")
    xs, ts = [], []
    for line, r in numbered:
        if len(r) != width:
            raise DataError(f"line {line}: expected {width} fields, found {len(r)}")
        xs.append([_float(r[j], line, j) for j in cols])
        if tcol is not None:
            ts.append(_float(r[tcol], line, tcol))
    x = np.array(xs, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        bad = int(np.flatnonzero(~np.all(np.isfinite(x), axis=1))[0])
        raise DataError(f"line {numbered[bad][0]}: non-finite value")
    keep = np.ones(len(x), dtype=bool)
    if spec.total_threshold is not None:
        keep &= x.sum(axis=1) >= spec.total_threshold
    if spec.all_threshold is not None:
        keep &= np.all(x > spec.all_threshold, axis=1)
    x = x[keep]
    if len(x) == 0:
        raise DataError("no observations left after filtering")
    if tcol is None:
        return Sample.equidistant(x)
    t = np.array(ts)[keep]
    if t.min() < 0 or t.max() > 1:
        raise DataError("time column values must lie in [0, 1]")
    order = np.argsort(t, kind="stable")
    return Sample(x[order], t[order])


def _numeric_row(row) -> bool:
    try:
        [float(c) for c in row]
    except ValueError:
        return False
    return True


def write_sample(sample: Sample, out) -> None:
    """Comma-separated values with a ``x1,...,xd`` header; shortest round-trip floats."""
    w = csv.writer(out, lineterminator="\n")
    w.writerow([f"x{j + 1}" for j in range(sample.d)])
    for row in sample.x:
        w.writerow([repr(float(v)) for v in row])


# --- output ---------------------------------------------------------------------

def integrated_cdf_curves(report: TestReport, block_ranges) -> list[tuple[str, float, float]]:
    """Normalised integrated measure of ``{theta_1 <= x}`` over each block range.

    For blocks ``lo..hi`` (1-based, inclusive) the curve at ``x`` is the average
    of the block measures of ``{theta : theta_1 <= x}``, evaluated at 0, 1 and
    every selected first angle coordinate.
    """
    path = report.path
    J = len(path.block_estimates)
    theta, _, _ = path.atoms()
    xs = np.unique(np.concatenate([[0.0, 1.0], np.clip(theta[:, 0], 0.0, 1.0)]))
    d = theta.shape[1]
    out = []
    for lo, hi in block_ranges:
        if not 1 <= lo <= hi <= J:
            raise UsageError(f"block range {lo}-{hi} outside 1-{J}")
        label = f"{lo}-{hi}"
        w = path.weights[lo - 1:hi]
        for x in xs:
            corner = np.concatenate([[x], np.ones(d - 2)])
            mu = np.array([path.block_estimates[j].measure(corner) for j in range(lo - 1, hi)])
            out.append((label, float(x), float(np.dot(w, mu) / w.sum())))
    return out


def format_report(report: TestReport) -> str:
    lines = []
    if report.path is not None:
        s = report.path.scheme
        lines.append(f"n={s.n} b={s.b} k={s.k} blocks={s.n_blocks} h={s.h:.6g}")
    t, corner, mode = report.argmax_ks
    lines.append(f"T_KS = {report.t_ks:.6f}  (t={t:.6g}, corner={_vec(corner)}, {mode})")
    cm_corner, cm_mode = report.argmax_cm
    lines.append(f"T_CM = {report.t_cm:.6f}  (corner={_vec(cm_corner)}, {cm_mode})")
    if report.p_values is not None:
        lines.append(f"p-values: KS {report.p_values[0]:.4f}  CM {report.p_values[1]:.4f}")
    for a in sorted(report.decisions or {}):
        ks, cm = report.decisions[a]
        crit = ""
        if report.critical_values:
            c = report.critical_values[a]
            crit = f"  (critical KS {c[0]:.4f}, CM {c[1]:.4f})"
        lines.append(f"size {a:g}: KS {'reject' if ks else 'accept'}, CM {'reject' if cm else 'accept'}{crit}")
    return "\n".join(lines)


def _vec(v) -> str:
    return "(" + ", ".join(f"{float(c):.6g}" for c in np.atleast_1d(v)) + ")"


def _write_text(path: str, text: str) -> None:
    if path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


# --- subcommands ------------------------------------------------------------------

def _block_range(text: str) -> tuple[int, int]:
    try:
        lo, hi = text.split("-")
        return int(lo), int(hi)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a block range like 1-8, got {text!r}") from None


def _critical_source(args):
    if args.critical == "published":
        return CriticalTable.published()
    if args.critical == "simulate":
        return "simulate"
    try:
        return CriticalTable.load(args.critical)
    except (OSError, KeyError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot load critical table {args.critical}: {exc}") from None


def cmd_test(args) -> int:
    spec = DatasetSpec(args.data, tuple(args.columns or ()), args.time_column, args.delimiter, args.header,
                       args.total_threshold, args.all_components_threshold)
    sample = read_dataset(spec)
    critical = None if args.critical is None else _critical_source(args)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        report = analyze(sample, args.b, args.k, args.norm, critical, tuple(args.sizes),
                         args.limit_reps, args.seed, args.refine, args.cap)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    print(format_report(report))
    if args.json:
        doc = report.to_dict()
        doc["observations"] = len(sample)
        _write_text(args.json, json.dumps(doc, indent=2) + "\n")
    if args.curves:
        ranges = args.curve_blocks or [(1, report.path.scheme.n_blocks)]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["blocks", "x", "y"])
        for label, x, y in integrated_cdf_curves(report, ranges):
            w.writerow([label, repr(x), repr(y)])
        _write_text(args.curves, buf.getvalue())
    return EXIT_OK


def cmd_critval(args) -> int:
    table = pillow_critical_values(args.grid_step, args.replications, args.sizes, args.seed)
    text = json.dumps(table.to_dict(), indent=2) + "\n"
    if args.out:
        _write_text(args.out, text)
    for s in table.sizes:
        ks, cm = table.critical(s)
        print(f"size {s:g}: KS {ks:.4f}  CM {cm:.4f}")
    return EXIT_OK


def _load_json(path: str):
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: line {exc.lineno}: {exc.msg}") from None


def _parse_params(items) -> dict:
    out = {}
    for item in items or ():
        if "=" not in item:
            raise UsageError(f"expected name=value, got {item!r}")
        name, value = item.split("=", 1)
        try:
            out[name] = float(value)
        except ValueError:
            raise UsageError(f"parameter {name}: {value!r} is not a number") from None
    return out


def cmd_generate(args) -> int:
    if (args.config is None) == (args.preset is None):
        raise UsageError("give exactly one of a scenario config file or --preset")
    if args.config is not None:
        scenario = Scenario.from_dict(_load_json(args.config))
    else:
        kw = dict(n=args.n, d=args.d, sine_factor=args.sine_factor, shift_scale=args.shift_scale)
        if args.alpha is not None:
            kw["alpha"] = args.alpha
        scenario = preset(args.preset, **kw, **_parse_params(args.param))
    sample = generate(scenario, args.seed)
    buf = io.StringIO()
    write_sample(sample, buf)
    _write_text(args.out, buf.getvalue())
    return EXIT_OK


def cmd_power(args) -> int:
    plan, workers = plan_from_dict(_load_json(args.plan))
    if args.workers is not None:
        workers = args.workers
    table = run(plan, workers)
    for bad in table.infeasible:
        print(f"infeasible cell {bad['scenario']} b={bad['b']} k={bad['k']}: {bad['reason']}", file=sys.stderr)
    prefix = args.out
    Path(prefix).parent.mkdir(parents=True, exist_ok=True)
    Path(prefix + ".csv").write_text(table.to_csv())
    Path(prefix + ".json").write_text(table.to_json())
    Path(prefix + "_curves.csv").write_text(table.curves_csv())
    for row in table.rows():
        print(f"{row['scenario']:<28} b={row['b']:<4} k={row['k']:<3} {row['test']} size {row['size']:g}: "
              f"{row['frequency']:.3f} (se {row['mc_se']:.3f})")
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="intspec", description="Test whether the extreme value dependence structure is constant over time.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    t = sub.add_parser("test", help="run both tests on a data file")
    t.add_argument("data")
    t.add_argument("--b", type=int, required=True, help="block length")
    t.add_argument("--k", type=int, required=True, help="exceedances per block")
    t.add_argument("--norm", choices=NORMS, default="euclidean")
    t.add_argument("--columns", nargs="+", help="value columns (names or 0-based positions)")
    t.add_argument("--time-column", help="column with times in [0, 1]; default is row order")
    t.add_argument("--delimiter", default=",")
    t.add_argument("--header", choices=("auto", "yes", "no"), default="auto")
    t.add_argument("--total-threshold", type=float, help="keep rows whose component sum is at least this")
    t.add_argument("--all-components-threshold", type=float, help="keep rows whose components all exceed this")
    t.add_argument("--critical", help="'published', 'simulate' or a critical table JSON file "
                                      "(default: published for d=2, simulate otherwise)")
    t.add_argument("--sizes", type=float, nargs="+", default=list(DEFAULT_SIZES))
    t.add_argument("--limit-reps", type=int, default=200, help="replications of the estimated limit process")
    t.add_argument("--refine", type=int, default=1)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--cap", type=int, default=10_000, help="maximum number of candidate corners")
    t.add_argument("--json", help="write the report as JSON ('-' for stdout)")
    t.add_argument("--curves", help="write integrated cdf curves as CSV")
    t.add_argument("--curve-blocks", type=_block_range, action="append", help="block range such as 1-8 (repeatable)")
    t.set_defaults(func=cmd_test)

    c = sub.add_parser("critval", help="simulate Brownian pillow critical values")
    c.add_argument("--grid-step", type=float, default=0.005)
    c.add_argument("--replications", type=int, default=2000)
    c.add_argument("--sizes", type=float, nargs="+", default=list(DEFAULT_SIZES))
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--out", help="cache the table as JSON")
    c.set_defaults(func=cmd_critval)

    g = sub.add_parser("generate", help="simulate a data file from a scenario")
    g.add_argument("config", nargs="?", help="scenario JSON file")
    g.add_argument("--preset")
    g.add_argument("--param", action="append", help="preset parameter name=value (repeatable)")
    g.add_argument("--n", type=int, default=2000)
    g.add_argument("--d", type=int, default=2)
    g.add_argument("--alpha", type=float)
    g.add_argument("--sine-factor", action="store_true")
    g.add_argument("--shift-scale", action="store_true")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", default="-")
    g.set_defaults(func=cmd_generate)

    w = sub.add_parser("power", help="run a size/power experiment plan")
    w.add_argument("plan", help="plan JSON file")
    w.add_argument("--out", required=True, help="output prefix for .csv, .json and _curves.csv")
    w.add_argument("--workers", type=int)
    w.set_defaults(func=cmd_power)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"intspec: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InfeasibleSchemeError, InsufficientExceedancesError, MissingSimulationError) as exc:
        print(f"intspec: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (DataError, ScenarioError, DimensionError) as exc:
        print(f"intspec: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        # remaining parameter validation (e.g. critical value feasibility)
        print(f"intspec: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE


if __name__ == "__main__":
    sys.exit(main())
