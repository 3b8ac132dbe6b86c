"""Command line interface: ``expstein <subcommand> ...``.

Exit codes: 0 success (for ``verify``/``sweep``/``stein check``: every row
passes), 1 some row fails, 2 invalid input or a module error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

from .. import bounds as B
from ..distributions import make_builtin, moments
from ..errors import ExpSteinError
from ..stein import verify_solution_bounds
from ..transforms import classify_aging
from .config import load, tomllib, with_overrides
from .experiments import (MODELS, _jsonable, report_json, rows_csv, run_experiment, samples_csv,
                          simulate_only, sweep, write_outputs)


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _value(text: str):
    """Sweep values: ints stay ints, then floats, else the raw string."""
    for conv in (int, float):
        try:
            return conv(text)
        except ValueError:
            pass
    return text


def _emit(text: str, out: str | None):
    if out:
        p = Path(out)
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(text)
    else:
        sys.stdout.write(text)


def _config(args):
    cfg = load(args.config)
    return with_overrides(cfg, seed=args.seed, reps=args.reps)


def cmd_simulate(args) -> int:
    cfg = _config(args)
    if args.model and args.model != cfg.kind:
        raise ExpSteinError(f"config describes model kind {cfg.kind!r}, not {args.model!r}")
    sample, columns = simulate_only(cfg, args.threads)
    _emit(samples_csv(sample, columns), args.out)
    return 0


def cmd_bound(args) -> int:
    if args.inputs:
        try:
            inputs = tomllib.loads(Path(args.inputs).read_text())
        except (OSError, tomllib.TOMLDecodeError) as exc:
            raise ExpSteinError(f"cannot read inputs: {exc}") from exc
    else:
        inputs = {}
    for item in args.set or []:
        k, _, v = item.partition("=")
        inputs[k.strip()] = _value(v.strip())
    reports = B.compute(args.bound_id, inputs)
    _emit(json.dumps(_jsonable([r.as_dict() for r in reports]), indent=2, sort_keys=True) + "\n", args.out)
    return 0


def cmd_verify(args) -> int:
    cfg = _config(args)
    result = run_experiment(cfg, args.threads)
    targets = [args.out] if args.out else list(cfg.outputs)
    for t in targets:
        write_outputs(result, t)
    if not targets:
        sys.stdout.write(rows_csv(result.rows))
    if args.json:
        Path(args.json).write_text(report_json(result))
    return 0 if result.ok else 1


def cmd_sweep(args) -> int:
    cfg = _config(args)
    values = [_value(v) for v in args.values.split(",")]
    res = sweep(cfg, args.param, values, args.threads)
    _emit(res.csv(), args.out)
    return 0 if res.ok else 1


def cmd_stein_check(args) -> int:
    rows = verify_solution_bounds(_floats(args.a_grid), _floats(args.eps_grid), args.tol)
    buf = io.StringIO()
    names = ("a", "eps", "bound", "max_lhs", "rhs", "slack", "status")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(names)
    for r in rows:
        d = r.as_row()
        w.writerow([repr(d[k]) if isinstance(d[k], float) else ("" if d[k] is None else d[k]) for k in names])
    _emit(buf.getvalue(), args.out)
    return 0 if all(r.passed is not False for r in rows) else 1


def cmd_dist_info(args) -> int:
    d = make_builtin(args.family, [_value(p) for p in args.params])
    m1, m2 = moments(d)
    cls = classify_aging(d)
    info = {"law": d.describe(), "mean": m1, "second_moment": m2, "variance": m2 - m1 * m1,
            "support": [d.lower, d.upper], "aging_class": cls.tag}
    _emit(json.dumps(_jsonable(info), indent=2, sort_keys=True) + "\n", args.out)
    return 0


def cmd_plot(args) -> int:
    try:
        from . import plots
    except ImportError as exc:  # pragma: no cover
        raise ExpSteinError("plotting needs matplotlib (pip install 'artifact[plot]')") from exc
    try:
        fn = plots.plot_sweep if args.plot_kind == "sweep" else plots.plot_samples
        fn(args.csv, args.out)
    except ImportError as exc:  # pragma: no cover
        raise ExpSteinError("plotting needs matplotlib (pip install 'artifact[plot]')") from exc
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="expstein", description="Exponential approximation bounds and checks.")
    sub = ap.add_subparsers(dest="command", required=True)

    def run_flags(p, config_required=True):
        p.add_argument("--config", required=config_required, help="experiment TOML file")
        p.add_argument("--seed", type=int)
        p.add_argument("--reps", type=int)
        p.add_argument("--out", help="output path (stdout when omitted)")
        p.add_argument("--threads", type=int, help="worker threads (default from EXPSTEIN_THREADS)")

    p = sub.add_parser("simulate", help="draw replicates of a model")
    p.add_argument("model", nargs="?", choices=sorted(MODELS))
    run_flags(p)
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("bound", help="evaluate a bound from explicit inputs")
    p.add_argument("bound_id", choices=B.BOUND_IDS)
    p.add_argument("--inputs", help="TOML file of keyword inputs")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="single input (repeatable)")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_bound)

    p = sub.add_parser("verify", help="run an experiment and compare bounds with distances")
    run_flags(p)
    p.add_argument("--json", help="also write the JSON report here")
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("sweep", help="run an experiment over a list of parameter values")
    run_flags(p)
    p.add_argument("--param", required=True, help="dotted config path, e.g. model.n")
    p.add_argument("--values", required=True, help="comma separated values")
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("stein", help="Stein solution checks")
    ssub = p.add_subparsers(dest="stein_command", required=True)
    q = ssub.add_parser("check", help="sup-norm and increment bounds on an (a, eps) grid")
    q.add_argument("--a-grid", default="0.5,1,2,5,10")
    q.add_argument("--eps-grid", default="0,0.1,0.5,1")
    q.add_argument("--tol", type=float, default=1e-7)
    q.add_argument("--out")
    q.set_defaults(fn=cmd_stein_check)

    p = sub.add_parser("dist", help="distribution utilities")
    dsub = p.add_subparsers(dest="dist_command", required=True)
    q = dsub.add_parser("info", help="moments, support and aging class of a built-in family")
    q.add_argument("family")
    q.add_argument("params", nargs="*")
    q.add_argument("--out")
    q.set_defaults(fn=cmd_dist_info)

    p = sub.add_parser("plot", help="render a figure from a sweep or samples CSV")
    p.add_argument("plot_kind", choices=("sweep", "samples"))
    p.add_argument("csv")
    p.add_argument("--out", required=True, help="image path, e.g. fig.png")
    p.set_defaults(fn=cmd_plot)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ExpSteinError as exc:
        code = getattr(exc, "code", "error")
        print(f"error [{code}]: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
