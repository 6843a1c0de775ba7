"""Command-line experiment runner.

Subcommands: ``lundberg``, ``ruin``, ``perpetuity``, ``simulate``, and
``validate``.  Each reads a JSON experiment file, runs the named analysis,
writes deterministic artifacts (identical bytes for identical config, seed,
and chunk size), and prints a one-line summary to stderr.  Hypothesis
violations exit nonzero with a machine-readable error JSON on stdout.

The environment variable ``RUINLAB_SEED`` overrides the config seed; the
``--seed`` flag overrides both.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from typing import List, Optional

import numpy as np

from . import perpetuity as perp
from .config_schema import load_experiment
from .errors import ConfigError, HypothesisViolation, RuinlabError
from .lundberg import lundberg_report, q_plus_compute, classify_endpoint
from .model import RngStreams
from .ruin import bounds_check, estimate_psi_grid, fit_tail
from .embedded import simulate_chain
from .validate import run_suite

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_HYPOTHESIS = 3
EXIT_FAILED = 1


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj)}")


def _dump_json(doc, path: Optional[str]):
    text = json.dumps(doc, sort_keys=True, indent=2, default=_json_default)
    text = text.replace("Infinity", '"inf"')
    if path:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _write_csv(rows: List[List], header: List[str], path: Optional[str]):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_csv_cell(v) for v in row))
    text = "\n".join(lines) + "\n"
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _csv_cell(v) -> str:
    if isinstance(v, float):
        return format(v, ".12g")
    return str(v)


def _resolve_seed(args, exp) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("RUINLAB_SEED")
    if env is not None:
        return int(env)
    return exp.seed


def _out_base(args, exp) -> Optional[str]:
    if args.out:
        return args.out
    if exp.output:
        return exp.output["path"]
    return None


def _intish(s: str) -> int:
    return int(float(s))


def cmd_lundberg(args) -> int:
    exp = load_experiment(args.config)
    block = exp.block("lundberg")
    tol = args.tol if args.tol is not None else block.get("tol", 1e-10)
    report = lundberg_report(exp.model, tol=tol,
                             method=block.get("method", "auto"),
                             mc_samples=block.get("mc_samples", 1_000_000),
                             seed=_resolve_seed(args, exp))
    doc = report.to_dict()
    cfg = exp.model
    if cfg.has_investment and cfg.regime.mode == "constant":
        endpoint = cfg.interarrival_dist.mgf_endpoint()
        if math.isfinite(endpoint.q_max):
            geom = q_plus_compute(cfg.regime.theta, endpoint.q_max)
            doc["q_plus"] = geom.q_plus
            doc["touching_points"] = [list(p) for p in geom.touching_points]
            verdict = classify_endpoint(geom, cfg.interarrival_dist,
                                        delta=endpoint.q_max / 2.0)
            doc["endpoint_verdict"] = verdict.verdict
            doc["endpoint_inconclusive"] = verdict.inconclusive
    _dump_json(doc, _out_base(args, exp))
    beta = "none" if report.beta is None else f"{report.beta:.10g}"
    print(f"lundberg: beta={beta} q_nu={report.q_nu:.6g} "
          f"status={report.status}", file=sys.stderr)
    return EXIT_OK


def _check_ruin_hypotheses(model):
    """Certain-ruin regimes exit with a named violation instead of burning
    paths on an estimate that converges to 1."""
    if model.has_investment:
        model.require_positive_drift()
    elif model.premium.mode == "constant":
        load = (model.claim_dist.mean()
                - model.premium.c * model.interarrival_dist.mean())
        if load >= 0:
            raise HypothesisViolation(
                "safety_loading",
                f"mean claim outflow exceeds premium inflow by {load:.6g} "
                "per interval; ruin is certain")


def cmd_ruin(args) -> int:
    exp = load_experiment(args.config)
    _check_ruin_hypotheses(exp.model)
    block = exp.block("ruin")
    grid = ([float(x) for x in args.u.split(",")] if args.u
            else [float(x) for x in block.get("u_grid", [10, 30, 100, 300])])
    n_paths = args.paths or block.get("n_paths", 100_000)
    seed = _resolve_seed(args, exp)
    ests = estimate_psi_grid(
        grid, exp.model, n_paths,
        max_steps=block.get("max_steps", 10_000),
        barrier_multiple=block.get("barrier_multiple", 1_000.0),
        seed=seed, workers=args.workers,
        premium_nodes=block.get("premium_nodes", 8))
    base = _out_base(args, exp)
    rows = [[e.u, e.psi_hat, e.ci_halfwidth, e.censored_fraction]
            for e in ests]
    _write_csv(rows, ["u", "psi_hat", "ci_halfwidth", "censored_fraction"],
               f"{base}.csv" if base else None)
    doc = {}
    positive = [e for e in ests if e.psi_hat > 0]
    if len(ests) >= 4 and len(positive) >= 2:
        fit = fit_tail(ests)
        doc["tail_fit"] = {
            "slope": fit.slope, "slope_stderr": fit.slope_stderr,
            "intercept": fit.intercept, "r_squared": fit.r_squared,
            "u_grid": list(fit.u_grid)}
        doc["summary"] = f"slope={fit.slope:.4f}"
    if positive and args.beta is not None:
        bc = bounds_check(args.beta, ests)
        doc["bounds_check"] = {"ratio_min": bc.ratio_min,
                               "ratio_max": bc.ratio_max, "spread": bc.spread}
    if doc:
        _dump_json(doc, f"{base}_tailfit.json" if base else None)
    if args.emit_plot_data:
        rows = [[math.log(e.u), math.log(e.psi_hat)]
                for e in ests if e.psi_hat > 0]
        _write_csv(rows, ["log_u", "log_psi_hat"], args.emit_plot_data)
    print(f"ruin: {len(grid)} levels x {n_paths} paths, seed={seed}",
          file=sys.stderr)
    return EXIT_OK


def cmd_perpetuity(args) -> int:
    exp = load_experiment(args.config)
    block = exp.block("perpetuity")
    n = args.samples or block.get("samples", 100_000)
    seed = _resolve_seed(args, exp)
    cfg = exp.model
    report = lundberg_report(cfg, seed=seed)
    if report.beta is None:
        raise HypothesisViolation(
            "mean_drift_positive",
            "no decay exponent exists for this configuration; the "
            "perpetuity tail constant is undefined")
    sampler = perp.model_pair_sampler(cfg)
    batch = perp.sample_R_values(sampler, n, seed=seed, workers=args.workers,
                                 rel_tol=block.get("rel_tol", 1e-12),
                                 n_max=block.get("n_max", 100_000))
    vals = batch.converged_values()
    ks = perp.ks_fixed_point(vals[: max(10_000, min(len(vals), 200_000))],
                             sampler, seed + 1)
    goldie = perp.goldie_constant(vals, sampler, report.beta, seed + 2)
    slope = _tail_slope(vals)
    doc = {"beta_used": report.beta, "c_hat": goldie.c_hat,
           "stderr": goldie.stderr, "ks": ks, "tail_slope": slope,
           "n_samples": int(len(vals)), "discard_rate": batch.discard_rate}
    _dump_json(doc, _out_base(args, exp))
    print(f"perpetuity: beta={report.beta:.6g} c_hat={goldie.c_hat:.6g} "
          f"ks={ks:.4f}", file=sys.stderr)
    return EXIT_OK


def _tail_slope(values: np.ndarray, n_points: int = 8) -> float:
    """Log-log slope of the empirical tail over a geometric level grid."""
    lo = float(np.quantile(values, 0.5))
    hi = float(np.quantile(values, 0.999))
    grid = np.geomspace(max(lo, 1e-12), hi, n_points)
    tail = np.array([(values > u).mean() for u in grid])
    keep = tail > 0
    return float(np.polyfit(np.log(grid[keep]), np.log(tail[keep]), 1)[0])


def cmd_simulate(args) -> int:
    exp = load_experiment(args.config)
    seed = _resolve_seed(args, exp)
    traj = simulate_chain(args.u, exp.model, max_steps=args.steps,
                          barrier_multiple=args.barrier,
                          rng=RngStreams.from_seed(seed), record_steps=True)
    rows = [[0, traj.values[0], "", "", ""]]
    for n, step in enumerate(traj.steps, start=1):
        rows.append([n, traj.values[n], step.lam, step.zeta, step.nu])
    _write_csv(rows, ["n", "s_n", "lambda_n", "zeta_n", "nu_n"], args.dump)
    print(f"simulate: stopped by {traj.stopped_reason} after "
          f"{len(traj.values) - 1} steps", file=sys.stderr)
    return EXIT_OK


def cmd_validate(args) -> int:
    results = run_suite(args.suite, workers=args.workers)
    failed = [r for r in results if not r.passed]
    print(f"validate: {len(results) - len(failed)}/{len(results)} criteria "
          f"passed", file=sys.stderr)
    return EXIT_OK if not failed else EXIT_FAILED


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="ruinlab",
        description="Ruin-probability numerics for randomly switched "
                    "geometric-Brownian investment returns")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        if config_required:
            p.add_argument("--config", required=True, help="experiment JSON")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--workers", type=int,
                       default=max(1, os.cpu_count() or 1))
        p.add_argument("--out", default=None, help="output path base")

    p = sub.add_parser("lundberg", help="decay-exponent report")
    common(p)
    p.add_argument("--tol", type=float, default=None)
    p.set_defaults(fn=cmd_lundberg)

    p = sub.add_parser("ruin", help="Monte Carlo ruin probabilities")
    common(p)
    p.add_argument("--u", default=None, help="comma-separated reserve grid")
    p.add_argument("--paths", type=_intish, default=None)
    p.add_argument("--beta", type=float, default=None,
                   help="exponent for the ratio bounds check")
    p.add_argument("--emit-plot-data", default=None, metavar="PATH")
    p.set_defaults(fn=cmd_ruin)

    p = sub.add_parser("perpetuity", help="perpetuity fixed point and tail")
    common(p)
    p.add_argument("--samples", type=_intish, default=None)
    p.set_defaults(fn=cmd_perpetuity)

    p = sub.add_parser("simulate", help="dump a single trajectory")
    common(p)
    p.add_argument("--u", type=float, required=True)
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--barrier", type=float, default=1_000.0)
    p.add_argument("--dump", default=None, metavar="PATH")
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("validate", help="run an acceptance suite")
    p.add_argument("--suite", choices=("quick", "full"), default="quick")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--workers", type=int, default=max(1, os.cpu_count() or 1))
    p.set_defaults(fn=cmd_validate)
    return ap


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        _dump_json({"error": "config", "field": exc.field, "message": str(exc)},
                   None)
        return EXIT_CONFIG
    except HypothesisViolation as exc:
        _dump_json(exc.payload(), None)
        return EXIT_HYPOTHESIS
    except RuinlabError as exc:
        _dump_json({"error": type(exc).__name__, "message": str(exc)}, None)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
