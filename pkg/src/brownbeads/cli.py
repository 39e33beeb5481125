"""Command line interface: ``bbeads <subcommand> --flag value ...``.

Exit codes: 0 success, 2 usage error, 3 validation failure, 4 runtime or
step budget exceeded.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time

import jsonschema

from . import __version__
from .beads import extract_beads
from .conformal import Semidisk, VerticalSlit, estimate_caps
from .cut import find_cuttimes, find_cuttimes_continued
from .experiments import (BudgetExceeded, CensoringError, ExperimentConfig, csv_rows,
                          report_json, run_experiment)
from .io import (PathFormatError, RunManifest, atomic_outputs, config_hash, file_digest,
                 read_path, render_svg, write_beads_csv, write_csv, write_cuts_csv, write_path)
from .sim import make_stream, sample_excursion, sample_excursion_until_height

log = logging.getLogger("brownbeads")

EXIT_OK, EXIT_USAGE, EXIT_INVALID, EXIT_BUDGET = 0, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    # long flags only, no prefix guessing
    def __init__(self, *a, **kw):
        kw.setdefault("allow_abbrev", False)
        super().__init__(*a, **kw)


def _floats(s):
    try:
        return [float(v) for v in s.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {s!r}")


def _threads_default():
    try:
        return max(1, int(os.environ.get("BBEADS_THREADS", "1")))
    except ValueError:
        return 1


def build_parser():
    ap = _Parser(prog="bbeads", description="Brownian excursions, cut points and beads.")
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("--verbose", action="store_true")
    sub = ap.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", help="sample an excursion to a BBPATH01 file")
    s.add_argument("--n", type=int, default=10_000, help="steps (or step cap with --y-max)")
    s.add_argument("--dt", type=float, default=1e-3)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--y-max", type=float, help="stop at the first step with height >= y-max")
    s.add_argument("--out", required=True)

    s = sub.add_parser("cuttimes", help="cut vertices of a path file")
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--out-csv", required=True)
    s.add_argument("--out-svg")
    s.add_argument("--continue-to", type=float,
                   help="also kill vertices hit by the excursion's future up to this height")
    s.add_argument("--seed", type=int, default=0, help="seed for --continue-to")

    s = sub.add_parser("capacity", help="Monte Carlo cap0/cap1 of an analytic hull")
    _hull_flags(s)
    s.add_argument("--walkers", type=int, default=40_000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--method", choices=["point", "semicircle"], default="point")
    s.add_argument("--y-start", type=float)
    s.add_argument("--eps", type=float)

    s = sub.add_parser("avoid", help="avoidance probability experiment")
    _hull_flags(s)
    _exp_flags(s, dt="1e-4,2.5e-5", n=20_000)
    s.add_argument("--y-max", type=float)

    s = sub.add_parser("exponent", help="P(no cut time in (1, t)) exponent experiment")
    _exp_flags(s, dt="1e-2,2.5e-3", n=10_000)
    s.add_argument("--t-grid", type=_floats, default=[2, 4, 8, 16, 32, 64])
    s.add_argument("--y-max", type=float, default=400.0)

    s = sub.add_parser("tail", help="first prefix capacity beyond a0: tail exponent")
    _exp_flags(s, dt="1e-2,2.5e-3", n=10_000)
    s.add_argument("--walkers", type=int, default=1000)
    s.add_argument("--a0", type=float, default=1.0)

    s = sub.add_parser("beads", help="bead table of a path file")
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--out-csv", required=True)
    s.add_argument("--walkers", type=int, default=2000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--continue-to", type=float)

    s = sub.add_parser("experiment", help="run an experiment from a JSON config")
    s.add_argument("--config", required=True)
    s.add_argument("--out-dir", required=True)
    s.add_argument("--threads", type=int, default=None)
    return ap


def _hull_flags(s):
    s.add_argument("--hull", choices=["slit", "semidisk"], required=True)
    s.add_argument("--x0", type=float, required=True)
    s.add_argument("--size", type=float, required=True, help="slit height or semidisk radius")


def _exp_flags(s, dt, n):
    s.add_argument("--n-paths", type=int, default=n)
    s.add_argument("--dt-ladder", type=_floats, default=_floats(dt))
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out-dir", required=True)
    s.add_argument("--threads", type=int, default=None)
    s.add_argument("--budget-seconds", type=float)


def _manifest(cmd, cfg, seed, inputs, outputs, t0):
    return RunManifest(cmd, config_hash(cfg), __version__, seed,
                       {k: file_digest(v) for k, v in inputs.items()},
                       {k: file_digest(v) for k, v in outputs.items()},
                       round(time.monotonic() - t0, 3))


def _run_config(cfg_dict, out_dir, threads, cmd, t0):
    cfg = ExperimentConfig.from_dict(cfg_dict)
    cfg.threads = threads or cfg.threads or _threads_default()
    report = run_experiment(cfg)
    with atomic_outputs(out_dir) as tmp:
        files = {"report.json": os.path.join(tmp, "report.json"),
                 "report.csv": os.path.join(tmp, "report.csv")}
        with open(files["report.json"], "w", encoding="utf-8") as f:
            f.write(report_json(report))
        write_csv(files["report.csv"], *csv_rows(report))
        m = _manifest(cmd, cfg.to_dict(execution=False), cfg.seed, {}, files, t0)
        with open(os.path.join(tmp, "manifest.json"), "w", encoding="utf-8") as f:
            f.write(m.to_json())
    print(m.to_json())
    summary = {k: report[k] for k in ("alpha_hat", "alpha_extrapolated", "fit", "p_extrapolated",
                                      "exact", "passed") if k in report}
    print(json.dumps(summary, sort_keys=True))


def _hull(a):
    return VerticalSlit(a.x0, a.size) if a.hull == "slit" else Semidisk(a.x0, a.size)


def _hull_spec(a):
    return {"type": a.hull, "x0": a.x0, ("h" if a.hull == "slit" else "r"): a.size}


def _exp_config(a, kind, **extra):
    d = {"version": 1, "kind": kind, "seed": a.seed, "n_paths": a.n_paths,
         "dt_ladder": a.dt_ladder, **extra}
    if a.budget_seconds is not None:
        d["budget_seconds"] = a.budget_seconds
    return d


def dispatch(a) -> int:
    t0 = time.monotonic()
    if a.cmd == "simulate":
        rng = make_stream(a.seed)
        if a.y_max is not None:
            p = sample_excursion_until_height(a.y_max, a.dt, rng, n_cap=a.n)
        else:
            p = sample_excursion(a.n, a.dt, rng)
        p = type(p)(p.points, p.dt, seed=a.seed, truncated=p.truncated)
        write_path(p, a.out)
        cfg = {"n": a.n, "dt": a.dt, "seed": a.seed, "y_max": a.y_max}
        print(_manifest("simulate", cfg, a.seed, {}, {"path": a.out}, t0).to_json())
        return EXIT_OK

    if a.cmd in ("cuttimes", "beads"):
        p = read_path(a.inp)
        if a.continue_to is not None:
            cuts, _ = find_cuttimes_continued(p, a.continue_to, make_stream(a.seed, 1))
        else:
            cuts = find_cuttimes(p)
        outputs = {"csv": a.out_csv}
        if a.cmd == "cuttimes":
            write_cuts_csv(p, cuts, a.out_csv)
            if a.out_svg:
                with open(a.out_svg, "w", encoding="utf-8") as f:
                    f.write(render_svg(p, cuts))
                outputs["svg"] = a.out_svg
        else:
            recs = extract_beads(p, cuts, a.walkers, make_stream(a.seed, 2))
            write_beads_csv(recs, a.out_csv)
        cfg = {k: v for k, v in vars(a).items() if k not in ("verbose",)}
        print(_manifest(a.cmd, cfg, a.seed, {"path": a.inp}, outputs, t0).to_json())
        return EXIT_OK

    if a.cmd == "capacity":
        c0, c1 = estimate_caps(_hull(a), a.walkers, a.y_start, a.eps, a.seed, a.method)
        print(json.dumps([c0.to_record(), c1.to_record()], sort_keys=True, indent=2))
        return EXIT_OK

    if a.cmd == "avoid":
        extra = {"hull": _hull_spec(a)}
        if a.y_max is not None:
            extra["y_max"] = a.y_max
        _run_config(_exp_config(a, "avoid", **extra), a.out_dir, a.threads, "avoid", t0)
    elif a.cmd == "exponent":
        _run_config(_exp_config(a, "exponent", t_grid=a.t_grid, y_max=a.y_max),
                    a.out_dir, a.threads, "exponent", t0)
    elif a.cmd == "tail":
        _run_config(_exp_config(a, "tail", walkers=a.walkers, a0=a.a0),
                    a.out_dir, a.threads, "tail", t0)
    elif a.cmd == "experiment":
        with open(a.config, encoding="utf-8") as f:
            text = f.read()
        try:
            d = json.loads(text)
        except json.JSONDecodeError as e:
            raise _Invalid(f"{a.config}: line {e.lineno} column {e.colno}: {e.msg}")
        _run_config(d, a.out_dir, a.threads, "experiment", t0)
    return EXIT_OK


class _Invalid(Exception):
    pass


def main(argv=None) -> int:
    ap = build_parser()
    a = ap.parse_args(argv)  # exits with 2 on usage errors
    logging.basicConfig(level=logging.INFO if a.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return dispatch(a)
    except jsonschema.ValidationError as e:
        where = "/".join(str(p) for p in e.absolute_path) or "<root>"
        print(f"error: config field {where}: {e.message}", file=sys.stderr)
        return EXIT_INVALID
    except (_Invalid, PathFormatError, ValueError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    except (BudgetExceeded, CensoringError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_BUDGET
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
