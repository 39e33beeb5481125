"""Monte Carlo experiments with power-law fits and bias bookkeeping.

Every random quantity is drawn from ``make_stream(seed, kind, rung, index)``
so a report depends only on its configuration, never on thread count or
scheduling.  Reports are plain dicts; ``report_json`` serializes them with
sorted keys, and the only non-reproducible field is ``generated_at``.
"""
from __future__ import annotations

import copy
import json
import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict
from datetime import datetime, timezone
from functools import lru_cache

import jsonschema
import numpy as np

from . import _excursion
from .beads import first_cap_beyond
from .conformal import (HullUnion, Semidisk, VerticalSlit, avoid_probability, estimate_caps,
                        hull_map)
from .cut import find_cuttimes_continued
from .fitting import ExponentFit, binomial_log_stderr, fit_power_law, tail_fit
from .sim import make_stream, kernel_seed, sample_excursion, sample_excursion_until_height

log = logging.getLogger(__name__)

__all__ = [
    "ExperimentConfig", "BudgetExceeded", "CensoringError", "CONFIG_SCHEMA",
    "run_exponent_experiment", "run_avoidance_experiment", "run_subordinator_tail",
    "run_capacity_validation", "run_experiment", "fitter_gate", "sqrt_dt_extrapolate",
    "report_json", "levy_first_passage_oracle", "stable_overshoot_oracle", "arcsine_tail",
]

KINDS = ("exponent", "avoid", "tail", "capacity")
_KIND_ID = {k: i + 1 for i, k in enumerate(KINDS)}

DEFAULTS = {
    "exponent": dict(n_paths=10_000, dt_ladder=[1e-2, 2.5e-3], y_max=400.0,
                     t_grid=[2, 4, 8, 16, 32, 64], kappa=6.0, continuation_factor=50.0),
    "avoid": dict(n_paths=20_000, dt_ladder=[1e-4, 2.5e-5], y_max=None,
                  hull={"type": "semidisk", "x0": 2.0, "r": 1.0}, kappa=6.0),
    "tail": dict(n_paths=10_000, dt_ladder=[1e-2, 2.5e-3], y_max=500.0, a0=1.0, a_cap=25.0,
                 x_grid=[1.5, 2.2, 3.2, 4.6, 6.7, 9.6, 13.9, 20.0], walkers=1000,
                 kappa=6.0, continuation_factor=50.0, n_cap=2_000_000),
    "capacity": dict(walkers=40_000, n_paths=1, dt_ladder=[1.0]),
}

_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_posint = {"type": "integer", "minimum": 1}
_grid = {"type": "array", "items": _pos, "minItems": 1}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["version", "kind", "seed"],
    "properties": {
        "version": {"const": 1},
        "kind": {"enum": list(KINDS)},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "n_paths": _posint,
        "dt_ladder": _grid,
        "y_max": {"anyOf": [_pos, {"type": "null"}]},
        "t_grid": {**_grid, "minItems": 3},
        "x_grid": {**_grid, "minItems": 3},
        "walkers": {"type": "integer", "minimum": 2},
        "kappa": _pos,
        "continuation_factor": {"type": "number", "minimum": 1},
        "a0": _pos,
        "a_cap": _pos,
        "n_cap": _posint,
        "threads": _posint,
        "budget_seconds": _pos,
        "hull": {
            "type": "object",
            "additionalProperties": False,
            "required": ["type", "x0"],
            "properties": {"type": {"enum": ["slit", "semidisk"]}, "x0": _num, "h": _pos, "r": _pos},
        },
        "note": {"type": "string"},
    },
}


class BudgetExceeded(RuntimeError):
    pass


class CensoringError(RuntimeError):
    pass


def _default_threads():
    try:
        return max(1, int(os.environ.get("BBEADS_THREADS", "1")))
    except ValueError:
        return 1


@dataclass
class ExperimentConfig:
    kind: str
    seed: int
    n_paths: int = 1000
    dt_ladder: list = field(default_factory=lambda: [1e-2])
    y_max: float | None = None
    t_grid: list | None = None
    x_grid: list | None = None
    walkers: int = 1000
    kappa: float = 6.0
    continuation_factor: float = 50.0
    a0: float = 1.0
    a_cap: float = 25.0
    n_cap: int = 2_000_000
    hull: dict | None = None
    threads: int | None = None
    budget_seconds: float | None = None
    note: str | None = None
    version: int = 1

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        """Validate against the schema, then fill kind-specific defaults."""
        jsonschema.validate(d, CONFIG_SCHEMA)
        merged = {**copy.deepcopy(DEFAULTS[d["kind"]]), **copy.deepcopy(d)}
        cfg = cls(**merged)
        cfg._check()
        return cfg

    @classmethod
    def default(cls, kind: str, seed: int = 0, **kw) -> "ExperimentConfig":
        return cls.from_dict({"version": 1, "kind": kind, "seed": seed, **kw})

    def _check(self):
        for g in ("t_grid", "x_grid"):
            v = getattr(self, g)
            if v is not None and list(v) != sorted(v):
                raise ValueError(f"{g} must be ascending")
        if self.kind == "avoid" and self.hull is not None:
            h = self.hull
            if ("h" in h) == ("r" in h) or (h["type"] == "slit") != ("h" in h):
                raise ValueError("hull needs h for a slit or r for a semidisk")

    def to_dict(self, execution: bool = True) -> dict:
        """Plain dict; ``execution=False`` drops fields that cannot change
        results (threads, budget), as echoed in reports."""
        skip = () if execution else ("threads", "budget_seconds")
        return {k: v for k, v in asdict(self).items() if v is not None and k not in skip}


def report_json(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2, allow_nan=True)


def _stamp(report: dict) -> dict:
    report["generated_at"] = datetime.now(timezone.utc).isoformat()
    return report


def _blocks(n, size):
    return [(b, min(b + size, n)) for b in range(0, n, size)]


def _map_blocks(fn, blocks, threads, deadline):
    def guarded(blk):
        if deadline is not None and time.monotonic() > deadline:
            raise BudgetExceeded("runtime budget exceeded")
        return fn(blk)

    if threads <= 1:
        return [guarded(b) for b in blocks]
    with ThreadPoolExecutor(threads) as ex:
        return list(ex.map(guarded, blocks))


def _deadline(cfg):
    return None if cfg.budget_seconds is None else time.monotonic() + cfg.budget_seconds


def sqrt_dt_extrapolate(dts, vals, errs):
    """Value at dt = 0 from a line in sqrt(dt) through the two finest rungs."""
    order = np.argsort(dts)
    if len(dts) < 2:
        return float(vals[order[0]]), float(errs[order[0]])
    f, c = order[0], order[1]
    sf, sc = np.sqrt(dts[f]), np.sqrt(dts[c])
    w = sf / (sc - sf)
    v = vals[f] + w * (vals[f] - vals[c])
    e = np.hypot((1 + w) * errs[f], w * errs[c])
    return float(v), float(e)


# oracles and the fitter gate ---------------------------------------------------

def levy_first_passage_oracle(n: int, dt: float, t_max: float, stream) -> np.ndarray:
    """Brute-force first passage times of a Gaussian walk to level 1."""
    rng = stream if isinstance(stream, np.random.Generator) else make_stream(int(stream))
    return _excursion.bm_first_passage(1.0, dt, t_max, n, kernel_seed(rng))


def stable_overshoot_oracle(n: int, stream) -> np.ndarray:
    """First zero of Brownian motion after time 1, drawn exactly.

    The zero set is the range of a stable-1/2 subordinator, so this is its
    first passage point over 1: P(X > x) = (2/pi) arcsin(x^-1/2).
    """
    rng = stream if isinstance(stream, np.random.Generator) else make_stream(int(stream))
    b1 = rng.standard_normal(n)
    z = rng.standard_normal(n)
    return 1.0 + (b1 / z) ** 2


def arcsine_tail(x):
    return 2.0 / np.pi * np.arcsin(np.asarray(x, dtype=float) ** -0.5)


@lru_cache(maxsize=4)
def fitter_gate(n: int = 100_000, dt: float = 0.01, seed: int = 20240601) -> dict:
    """Run the fitter on the first-passage oracle; must recover -1/2."""
    grid = np.geomspace(4, 256, 7)
    t = levy_first_passage_oracle(n, dt, grid[-1] * 1.01, make_stream(seed))
    fit = tail_fit(t, grid)
    return {"slope": fit.slope, "stderr": fit.stderr, "target": -0.5, "tolerance": 0.05,
            "passed": bool(abs(fit.slope + 0.5) <= 0.05), "n": n, "dt": dt,
            "grid": grid.tolist()}


def _require_gate():
    g = fitter_gate()
    if not g["passed"]:
        raise RuntimeError(f"power-law fitter failed its oracle gate: {g}")
    return g


# exponent --------------------------------------------------------------------

def _first_cut_after_one(cfg, rung, dt, lo, hi, t_max):
    n = int(round(t_max / dt))
    out = np.empty(hi - lo)
    cens = np.zeros(hi - lo, dtype=bool)
    ratio = np.empty(hi - lo)
    for u, i in enumerate(range(lo, hi)):
        rng = make_stream(cfg.seed, _KIND_ID["exponent"], rung, i)
        p = sample_excursion(n, dt, rng)
        H = float(p.y.max())
        y_stop = max(cfg.y_max, cfg.continuation_factor * H)
        cuts, reached = find_cuttimes_continued(p, y_stop, rng, kappa=cfg.kappa)
        t = cuts.indices * dt
        t = t[t > 1.0]
        out[u] = t[0] if t.size else np.inf
        cens[u] = not reached
        ratio[u] = H / y_stop
    return out, cens, ratio


def run_exponent_experiment(cfg: ExperimentConfig) -> dict:
    """P(no cut vertex with 1 < k dt < t) on the t grid, per dt rung."""
    if cfg.kind != "exponent":
        raise ValueError("config kind must be 'exponent'")
    gate = _require_gate()
    tg = np.asarray(cfg.t_grid, dtype=float)
    if cfg.y_max < 50 * np.sqrt(tg[-1]):
        raise ValueError("y_max must be >= 50 sqrt(max t)")
    threads = cfg.threads or _default_threads()
    deadline = _deadline(cfg)
    dts = sorted(cfg.dt_ladder, reverse=True)
    rungs = []
    for r, dt in enumerate(dts):
        res = _map_blocks(lambda b: _first_cut_after_one(cfg, r, dt, *b, tg[-1]),
                          _blocks(cfg.n_paths, 256), threads, deadline)
        T = np.concatenate([a for a, _, _ in res])
        cens = np.concatenate([c for _, c, _ in res])
        ratio = np.concatenate([q for _, _, q in res])
        T = T[~cens]
        N = T.size
        counts = np.array([(T >= t).sum() for t in tg])
        p = counts / N
        se = binomial_log_stderr(p, N)
        fit = fit_power_law(tg, p, 1 / se**2, dt)
        rungs.append({
            "dt": dt,
            "per_point": [{"t": float(t), "p": float(q), "count": int(c), "stderr_log": float(s)}
                          for t, q, c, s in zip(tg, p, counts, se)],
            "fit": fit.to_dict(),
            "alpha": fit.alpha,
            "censoring": {"n_censored": int(cens.sum()), "n_used": int(N)},
            "return_bias_bound": float(ratio.mean()),
        })
    alphas = np.array([r["alpha"] for r in rungs])
    errs = np.array([r["fit"]["stderr"] for r in rungs])
    a0, e0 = sqrt_dt_extrapolate(np.array(dts), alphas, errs)
    finest = rungs[-1]
    return _stamp({
        "kind": "exponent",
        "config": cfg.to_dict(execution=False),
        "fitter_gate": gate,
        "rungs": rungs,
        "per_point": finest["per_point"],
        "fit": {"slope": finest["fit"]["slope"], "stderr": finest["fit"]["stderr"], "dt": finest["dt"]},
        "alpha_hat": finest["alpha"],
        "alpha_extrapolated": {"value": a0, "stderr": e0, "rule": "linear in sqrt(dt), two finest rungs"},
        "bias_budget": {"return_probability_bound": max(r["return_bias_bound"] for r in rungs),
                        "note": "chance the excursion returns to the window after the stopping height"},
        "censoring": {str(r["dt"]): r["censoring"] for r in rungs},
    })


# avoidance -------------------------------------------------------------------

def _hull_from_spec(h: dict):
    if h["type"] == "slit":
        return VerticalSlit(float(h["x0"]), float(h["h"]))
    return Semidisk(float(h["x0"]), float(h["r"]))


def run_avoidance_experiment(cfg: ExperimentConfig, A=None) -> dict:
    """Fraction of excursions whose polyline misses A, against f'(0)."""
    if cfg.kind != "avoid":
        raise ValueError("config kind must be 'avoid'")
    A = _hull_from_spec(cfg.hull) if A is None else A
    exact = avoid_probability(A)
    if isinstance(A, VerticalSlit):
        kind, x0, s = _excursion.SLIT, A.x0, A.h
    else:
        kind, x0, s = _excursion.DISK, A.x0, A.r
    scale = abs(x0) + s
    y_max = cfg.y_max if cfg.y_max is not None else 1000.0 * scale
    if y_max < 10 * scale:
        raise ValueError("y_max must be >= 10 (|x0| + size)")
    threads = cfg.threads or _default_threads()
    deadline = _deadline(cfg)
    dts = sorted(cfg.dt_ladder, reverse=True)
    rungs = []
    for r, dt in enumerate(dts):
        def block(b):
            rng = make_stream(cfg.seed, _KIND_ID["avoid"], r, b[0])
            return _excursion.avoid_run(kind, x0, s, dt, cfg.kappa, y_max, 10**8,
                                        b[1] - b[0], kernel_seed(rng))
        res = np.concatenate(_map_blocks(block, _blocks(cfg.n_paths, 2048), threads, deadline))
        used = res >= 0
        N = int(used.sum())
        P = float((res[used] == 0).mean())
        rungs.append({"dt": dt, "p_avoid": P, "stderr": float(np.sqrt(P * (1 - P) / N)),
                      "n_used": N, "n_censored": int((~used).sum())})
    P0, E0 = sqrt_dt_extrapolate(np.array(dts), np.array([q["p_avoid"] for q in rungs]),
                                 np.array([q["stderr"] for q in rungs]))
    return _stamp({
        "kind": "avoid",
        "config": cfg.to_dict(execution=False),
        "hull": A.describe(),
        "exact": exact,
        "rungs": rungs,
        "p_extrapolated": {"value": P0, "stderr": E0, "rule": "linear in sqrt(dt), two finest rungs"},
        "abs_error": abs(P0 - exact),
        "bias_budget": {"return_probability_bound": scale / y_max, "y_max": y_max},
        "censoring": {str(q["dt"]): q["n_censored"] for q in rungs},
    })


# subordinator tail -----------------------------------------------------------

def _first_caps(cfg, rung, dt, lo, hi):
    H = 2 * np.sqrt(cfg.a_cap)
    X = np.empty(hi - lo)
    cens = np.zeros(hi - lo, dtype=bool)
    for u, i in enumerate(range(lo, hi)):
        rng = make_stream(cfg.seed, _KIND_ID["tail"], rung, i)
        p = sample_excursion_until_height(H, dt, rng, n_cap=cfg.n_cap)
        y_stop = max(cfg.y_max, cfg.continuation_factor * H)
        cuts, reached = find_cuttimes_continued(p, y_stop, rng, kappa=cfg.kappa)
        fc = first_cap_beyond(p, cuts, cfg.a0, cfg.walkers, rng)
        if fc.value is not None:
            X[u] = fc.value
        elif p.truncated or not reached:
            X[u] = np.nan
            cens[u] = True
        else:
            # no cut vertex before the path reached height H: every later
            # one has capacity at least H^2 / 4 = a_cap
            X[u] = np.inf
    return X, cens


def run_subordinator_tail(cfg: ExperimentConfig) -> dict:
    """Tail of the first prefix capacity >= a0 over cut vertices."""
    if cfg.kind != "tail":
        raise ValueError("config kind must be 'tail'")
    gate = _require_gate()
    xg = np.asarray(cfg.x_grid, dtype=float)
    if xg[-1] > cfg.a_cap:
        raise ValueError("x_grid must stay below a_cap")
    threads = cfg.threads or _default_threads()
    deadline = _deadline(cfg)
    dts = sorted(cfg.dt_ladder, reverse=True)
    rungs = []
    for r, dt in enumerate(dts):
        res = _map_blocks(lambda b: _first_caps(cfg, r, dt, *b), _blocks(cfg.n_paths, 64),
                          threads, deadline)
        X = np.concatenate([a for a, _ in res])
        cens = np.concatenate([c for _, c in res])
        frac = float(cens.mean())
        if frac > 0.2:
            raise CensoringError(f"{frac:.0%} of paths censored at dt={dt}; raise n_cap or lower a_cap")
        X = X[~cens]
        fit = tail_fit(X / cfg.a0, xg, dt)
        counts = np.array([(X / cfg.a0 > x).sum() for x in xg])
        rungs.append({
            "dt": dt,
            "per_point": [{"x": float(x), "p": float(c / X.size), "count": int(c)}
                          for x, c in zip(xg, counts)],
            "fit": fit.to_dict(),
            "censoring": {"n_censored": int(cens.sum()), "fraction": frac, "n_used": int(X.size)},
        })
    ref = fit_power_law(xg, arcsine_tail(xg))
    finest = rungs[-1]
    return _stamp({
        "kind": "tail",
        "config": cfg.to_dict(execution=False),
        "fitter_gate": gate,
        "rungs": rungs,
        "per_point": finest["per_point"],
        "fit": {"slope": finest["fit"]["slope"], "stderr": finest["fit"]["stderr"], "dt": finest["dt"]},
        "reference": {"law": "(2/pi) arcsin(x^-1/2)", "slope_on_grid": ref.slope},
        "bias_budget": {"return_probability_bound": 2 * np.sqrt(cfg.a_cap) / max(
            cfg.y_max, cfg.continuation_factor * 2 * np.sqrt(cfg.a_cap))},
        "censoring": {str(q["dt"]): q["censoring"] for q in rungs},
    })


# capacity validation ---------------------------------------------------------

def _check(name, value, target, sigma, kind="within", k=3.0):
    if kind == "within":
        ok = abs(value - target) <= k * sigma
        margin = k * sigma - abs(value - target)
    else:  # value <= target + k sigma
        ok = value <= target + k * sigma
        margin = target + k * sigma - value
    return {"name": name, "value": value, "target": target, "sigma": sigma,
            "margin": float(margin), "passed": bool(ok)}


def run_capacity_validation(cfg: ExperimentConfig) -> dict:
    """Capacity estimators against exact values and structural laws."""
    if cfg.kind != "capacity":
        raise ValueError("config kind must be 'capacity'")
    W = cfg.walkers
    st = lambda i: make_stream(cfg.seed, _KIND_ID["capacity"], i)
    checks = []
    slit = VerticalSlit(0.0, 1.0)
    s0, s1 = estimate_caps(slit, W, stream=st(0))
    checks.append(_check("slit cap1", s1.value, 0.5, s1.stderr))
    checks.append(_check("slit cap0", s0.value, 2 / np.pi, s0.stderr))
    _, d1 = estimate_caps(Semidisk(0.0, 1.0), W, stream=st(1))
    checks.append(_check("semidisk cap1", d1.value, 1.0, d1.stderr))
    _, big = estimate_caps(slit.scaled(2.0), W, stream=st(2))
    ratio = big.value / s1.value
    rse = ratio * np.hypot(big.stderr / big.value, s1.stderr / s1.value)
    checks.append(_check("scaling ratio r=2", ratio, 4.0, rse))
    a, b = VerticalSlit(-1.0, 1.0), VerticalSlit(1.5, 0.7)
    _, ca = estimate_caps(a, W, stream=st(3), method="semicircle")
    _, cb = estimate_caps(b, W, stream=st(4), method="semicircle")
    _, cab = estimate_caps(HullUnion([a, b]), W, stream=st(5), method="semicircle")
    checks.append(_check("subadditivity", cab.value, ca.value + cb.value,
                         float(np.sqrt(ca.stderr**2 + cb.stderr**2 + cab.stderr**2)), kind="below"))
    checks.append(_check("point bound y^2/4 <= cap1", 0.25, s1.value, s1.stderr, kind="below"))
    checks.append(_check("exact map hcap (slit)", s1.value, hull_map(slit).hcap(), s1.stderr))
    return _stamp({
        "kind": "capacity",
        "config": cfg.to_dict(execution=False),
        "checks": checks,
        "estimates": [e.to_record() for e in (s0, s1, d1, big, ca, cb, cab)],
        "passed": all(c["passed"] for c in checks),
    })


RUNNERS = {"exponent": run_exponent_experiment, "avoid": run_avoidance_experiment,
           "tail": run_subordinator_tail, "capacity": run_capacity_validation}


def run_experiment(cfg: ExperimentConfig) -> dict:
    return RUNNERS[cfg.kind](cfg)


def csv_rows(report: dict) -> tuple[list[str], list[list]]:
    """Header and rows of the plotting companion for a report."""
    kind = report["kind"]
    if kind == "exponent":
        rows = [[r["dt"], q["t"], q["p"], q["count"], q["stderr_log"]]
                for r in report["rungs"] for q in r["per_point"]]
        return ["dt", "t", "p", "count", "stderr_log"], rows
    if kind == "tail":
        rows = [[r["dt"], q["x"], q["p"], q["count"]] for r in report["rungs"] for q in r["per_point"]]
        return ["dt", "x", "p", "count"], rows
    if kind == "avoid":
        rows = [[q["dt"], q["p_avoid"], q["stderr"], q["n_used"]] for q in report["rungs"]]
        return ["dt", "p_avoid", "stderr", "n_used"], rows
    rows = [[c["name"], c["value"], c["target"], c["sigma"], c["passed"]] for c in report["checks"]]
    return ["check", "value", "target", "sigma", "passed"], rows
