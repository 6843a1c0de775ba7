"""Acceptance experiments: one callable per criterion, plus suite runners.

Every criterion pins its tolerances and sample sizes here; the test suite
and the ``validate`` CLI subcommand both call these functions, so a pass or
fail line means the same thing everywhere.  The ``quick`` suite is a
smoke-level subset (seconds); ``full`` runs everything at its stated scale.
"""

from __future__ import annotations

import math
import os
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional

import numpy as np

from . import perpetuity as perp
from .distributions import Distribution
from .lundberg import (lundberg_report, phi_nu_analytic, phi_nu_mc,
                       q_plus_compute, classify_endpoint)
from .model import ModelConfig, PremiumSpec, RegimeSpec
from .ruin import (bounds_check, classical_psi, estimate_psi_grid, fit_tail,
                   rw_max_diagnostic)
from .theta import ThetaLaw, zeta_regime_law

__all__ = ["CriterionResult", "beta2_config", "classical_config",
           "run_suite", "CRITERIA", "SUITES"]

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass
class CriterionResult:
    name: str
    passed: bool
    runtime_s: float
    details: Dict[str, object] = field(default_factory=dict)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        parts = " ".join(f"{k}={_fmt(v)}" for k, v in self.details.items())
        return f"[{status}] {self.name} ({self.runtime_s:.1f}s) {parts}"


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.6g}"
    if isinstance(v, (list, tuple)):
        return "[" + ",".join(_fmt(x) for x in v) + "]"
    return str(v)


def beta2_config() -> ModelConfig:
    """Point-mass coefficients (0.06, 0.02), unit-rate exponential claims and
    inter-arrivals, constant premium at the bound 0.1.  Decay exponent 2."""
    return ModelConfig(
        claim_dist=Distribution.exponential(1.0),
        interarrival_dist=Distribution.exponential(1.0),
        premium=PremiumSpec.constant(0.1),
        regime=RegimeSpec.constant(ThetaLaw.point_mass(0.06, 0.02)),
        mu_lower=0.06, sigma_upper=0.2, c_bar=0.1)


def classical_config(c: float = 2.0) -> ModelConfig:
    return ModelConfig(
        claim_dist=Distribution.exponential(1.0),
        interarrival_dist=Distribution.exponential(1.0),
        premium=PremiumSpec.constant(c), regime=None, c_bar=c)


def _default_workers() -> int:
    return max(1, min(8, os.cpu_count() or 1))


def _timed(fn: Callable[[], CriterionResult]) -> CriterionResult:
    t0 = time.time()
    res = fn()
    res.runtime_s = time.time() - t0
    return res


# -- criterion 1: root identity for constant coefficients ------------------------

def criterion_lundberg_identity(**_) -> CriterionResult:
    """beta = 2 mu / sigma^2 - 1 = 2 within 1e-9, analytic mode, both for an
    endpoint-free inter-arrival law and for the unit-rate exponential."""
    details = {}
    ok = True
    for name, tau in (("exp1", Distribution.exponential(1.0)),
                      ("det1", Distribution.deterministic(1.0))):
        cfg = ModelConfig(
            claim_dist=Distribution.exponential(1.0), interarrival_dist=tau,
            premium=PremiumSpec.constant(0.1),
            regime=RegimeSpec.constant(ThetaLaw.point_mass(0.06, 0.02)),
            mu_lower=0.06, sigma_upper=0.2, c_bar=0.1)
        rep = lundberg_report(cfg, tol=1e-10)
        err = abs(rep.beta - 2.0) if rep.beta is not None else math.inf
        details[f"beta_err_{name}"] = err
        ok = ok and err <= 1e-9 and rep.method == "analytic"
    return CriterionResult("lundberg_identity", ok, 0.0, details)


# -- criterion 2: golden-ratio tangent parameter -----------------------------------

def criterion_golden_ratio(**_) -> CriterionResult:
    atom = q_plus_compute(ThetaLaw.point_mass(0.0, 1.0), 1.0)
    square = q_plus_compute(ThetaLaw.polytope_uniform(
        [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)]), 1.0)
    e1 = abs(atom.q_plus - GOLDEN)
    e2 = abs(square.q_plus - GOLDEN)
    touch_ok = square.touching_points == ((0.0, 1.0),)
    ok = e1 <= 1e-12 and e2 <= 1e-12 and touch_ok
    return CriterionResult("golden_ratio_geometry", ok, 0.0,
                           {"atom_err": e1, "square_err": e2,
                            "square_touch": touch_ok})


# -- criterion 3: dichotomy on the zeta family --------------------------------------

def criterion_zeta_dichotomy(**_) -> CriterionResult:
    tau = Distribution.exponential(1.0)
    details = {}
    ok = True
    for p in (2, 3, 4, 5):
        geom = q_plus_compute(zeta_regime_law(p), 1.0)
        verdict = classify_endpoint(geom, tau, delta=0.5)
        details[f"p{p}"] = verdict.verdict
        want = "endpoint_infinite" if p == 2 else "endpoint_finite"
        ok = ok and verdict.verdict == want and not verdict.inconclusive
    return CriterionResult("zeta_family_dichotomy", ok, 0.0, details)


# -- criterion 4: classical baseline --------------------------------------------------

def criterion_classical_baseline(workers: Optional[int] = None,
                                 n_paths: int = 100_000, **_) -> CriterionResult:
    workers = workers or _default_workers()
    cfg = classical_config(2.0)
    grid = [0.0, 1.0, 2.0, 4.0]
    ests = estimate_psi_grid(grid, cfg, n_paths, max_steps=10_000,
                             barrier_multiple=100.0, seed=42, workers=workers)
    details = {}
    ok = True
    for e in ests:
        exact = classical_psi(1.0, 1.0, 2.0, e.u).value
        miss = abs(e.psi_hat - exact)
        details[f"u{e.u:g}"] = miss / e.ci_halfwidth
        ok = ok and miss <= 3.0 * e.ci_halfwidth
    return CriterionResult("classical_baseline", ok, 0.0, details)


# -- criterion 5: power tail at desk scale --------------------------------------------

def criterion_power_tail(workers: Optional[int] = None,
                         n_paths: int = 1_000_000, **_) -> CriterionResult:
    workers = workers or _default_workers()
    cfg = beta2_config()
    grid = [10.0, 30.0, 100.0, 300.0]
    ests = estimate_psi_grid(grid, cfg, n_paths, seed=42, workers=workers)
    fit = fit_tail(ests)
    spread = bounds_check(2.0, ests).spread
    slope_ok = -2.4 <= fit.slope <= -1.6
    spread_ok = spread <= 4.0
    return CriterionResult(
        "power_tail", slope_ok and spread_ok, 0.0,
        {"slope": fit.slope, "spread": spread,
         "psi": [e.psi_hat for e in ests],
         "ratio": [round(e.u ** 2 * e.psi_hat, 1) for e in ests]})


# -- criterion 6: fixed point and sandwich ---------------------------------------------

def criterion_fixed_point_sandwich(workers: Optional[int] = None,
                                   n_r: int = 100_000,
                                   n_psi: int = 200_000, **_) -> CriterionResult:
    workers = workers or _default_workers()
    cfg = beta2_config()
    sampler = perp.model_pair_sampler(cfg)
    batch = perp.sample_R_values(sampler, n_r, seed=7, workers=workers)
    r_vals = batch.converged_values()
    ks = perp.ks_fixed_point(r_vals[:n_r], sampler, 11)
    ks_ok = ks <= 0.02

    rbar = perp.sample_Rbar_values(cfg, n_r, seed=8, workers=workers)
    rbar_vals = rbar.values
    ests = estimate_psi_grid([10.0, 30.0, 100.0], cfg, n_psi, seed=9,
                             workers=workers)
    details = {"ks": ks, "r_discard": batch.discard_rate}
    ok = ks_ok
    for e in ests:
        p_up = float(np.mean(r_vals > e.u))
        p_lo = float(np.mean(rbar_vals > e.u))
        se_psi = e.ci_halfwidth / 1.96
        se_up = math.sqrt(max(p_up * (1 - p_up), 1e-12) / len(r_vals))
        se_lo = math.sqrt(max(p_lo * (1 - p_lo), 1e-12) / len(rbar_vals))
        upper_ok = e.psi_hat <= p_up + 3.0 * math.hypot(se_psi, se_up)
        lower_ok = e.psi_hat >= p_lo - 3.0 * math.hypot(se_psi, se_lo)
        details[f"u{e.u:g}"] = (round(p_lo, 4), round(e.psi_hat, 4),
                                round(p_up, 4))
        ok = ok and upper_ok and lower_ok
    return CriterionResult("fixed_point_sandwich", ok, 0.0, details)


# -- criterion 7: tail-constant consistency ---------------------------------------------

def criterion_goldie(workers: Optional[int] = None,
                     n_samples: int = 1_000_000, **_) -> CriterionResult:
    workers = workers or _default_workers()
    cfg = beta2_config()
    sampler = perp.model_pair_sampler(cfg)
    batch = perp.sample_R_values(sampler, n_samples, seed=21, workers=workers)
    vals = batch.converged_values()
    est = perp.goldie_constant(vals, sampler, 2.0, 23)
    rel = est.stderr / est.c_hat if est.c_hat > 0 else math.inf
    base_ok = est.c_hat > 0 and rel < 0.1
    details = {"c_hat": est.c_hat, "rel_stderr": rel}
    cross_ok = True
    for u in (20.0, 40.0, 80.0):
        p = float(np.mean(vals > u))
        se_p = math.sqrt(p * (1 - p) / len(vals))
        ratio = u ** 2 * p
        combined = math.hypot(est.stderr, u ** 2 * se_p)
        details[f"ratio_u{u:g}"] = ratio
        cross_ok = cross_ok and abs(ratio - est.c_hat) <= 3.0 * combined
    details["tail_matches_c_hat"] = cross_ok
    return CriterionResult("goldie_constant", base_ok and cross_ok, 0.0,
                           details)


# -- criterion 8: exact invariances ---------------------------------------------------------

def criterion_exact_invariances(workers: Optional[int] = None,
                                n_paths: int = 20_000, **_) -> CriterionResult:
    workers = workers or _default_workers()
    cfg = beta2_config()
    grid = [2.0, 10.0, 50.0]
    base = estimate_psi_grid(grid, cfg, n_paths, max_steps=2_000, seed=5,
                             workers=workers)
    scaled = estimate_psi_grid([2.0 * u for u in grid], cfg.scaled(2.0),
                               n_paths, max_steps=2_000, seed=5,
                               workers=workers)
    scale_ok = all(a.psi_hat == b.psi_hat for a, b in zip(base, scaled))
    mono_ok = all(base[i].psi_hat >= base[i + 1].psi_hat
                  for i in range(len(base) - 1))

    theta = cfg.regime.theta
    tau = cfg.interarrival_dist
    phi0 = phi_nu_analytic(theta, tau, 0.0)
    phi0_mc = phi_nu_mc(cfg, 0.0, 10_000, 3).estimate
    phi_ok = phi0 == 1.0 and phi0_mc == 1.0

    rng = np.random.default_rng(17)
    h_ok = True
    for law in (ThetaLaw.point_mass(0.0, 1.0),
                ThetaLaw.polytope_uniform([(0, 0), (1, 0), (0, 1), (1, 1)]),
                zeta_regime_law(4)):
        geom = q_plus_compute(law, 1.0)
        if geom.h_law.kind == "series":
            j = np.arange(1.0, 1_000_001.0)
            h = geom.h_law.h_fn(j)
        else:
            h = geom.h_law.sample(rng, 1_000_000)
        h_ok = h_ok and float(np.min(h)) >= 0.0
    ok = scale_ok and mono_ok and phi_ok and h_ok
    return CriterionResult(
        "exact_invariances", ok, 0.0,
        {"scale": scale_ok, "monotone": mono_ok, "phi0": phi_ok,
         "h_nonneg": h_ok})


# -- criterion 9: random-walk maximum diagnostic ----------------------------------------------

def criterion_rw_diagnostic(workers: Optional[int] = None,
                            n_walks: int = 2_000_000,
                            n_psi: int = 200_000, **_) -> CriterionResult:
    workers = workers or _default_workers()
    cfg = beta2_config()
    grid = [10.0, 30.0, 100.0, 300.0]
    diag = rw_max_diagnostic(cfg, grid, n_walks, seed=31, workers=workers)
    p = np.array([d["p_hat"] for d in diag])
    if np.any(p <= 0):
        return CriterionResult("rw_max_diagnostic", False, 0.0,
                               {"p_hat": list(map(float, p))})
    slope = float(np.polyfit(np.log(grid), np.log(p), 1)[0])
    slope_ok = abs(slope - (-2.0)) <= 0.2 * 2.0
    ests = estimate_psi_grid(grid, cfg, n_psi, seed=33, workers=workers)
    lpsi = np.log([e.psi_hat for e in ests])
    corr = float(np.corrcoef(np.log(p), lpsi)[0, 1])
    corr_ok = corr >= 0.95
    return CriterionResult("rw_max_diagnostic", slope_ok and corr_ok, 0.0,
                           {"slope": slope, "corr": corr})


CRITERIA: Dict[str, Callable[..., CriterionResult]] = {
    "lundberg_identity": criterion_lundberg_identity,
    "golden_ratio_geometry": criterion_golden_ratio,
    "zeta_family_dichotomy": criterion_zeta_dichotomy,
    "classical_baseline": criterion_classical_baseline,
    "power_tail": criterion_power_tail,
    "fixed_point_sandwich": criterion_fixed_point_sandwich,
    "goldie_constant": criterion_goldie,
    "exact_invariances": criterion_exact_invariances,
    "rw_max_diagnostic": criterion_rw_diagnostic,
}

SUITES: Dict[str, List[dict]] = {
    # smoke-level: everything cheap, reduced path counts, single worker fine
    "quick": [
        {"name": "lundberg_identity"},
        {"name": "golden_ratio_geometry"},
        {"name": "zeta_family_dichotomy"},
        {"name": "classical_baseline", "n_paths": 20_000},
        {"name": "exact_invariances", "n_paths": 5_000},
        {"name": "rw_max_diagnostic", "n_walks": 200_000, "n_psi": 50_000},
    ],
    "full": [{"name": name} for name in CRITERIA],
}


def run_suite(suite: str, workers: Optional[int] = None,
              emit: Callable[[str], None] = print) -> List[CriterionResult]:
    if suite not in SUITES:
        raise ValueError(f"unknown suite {suite!r}; choose from {sorted(SUITES)}")
    results = []
    for spec in SUITES[suite]:
        kwargs = {k: v for k, v in spec.items() if k != "name"}
        fn = CRITERIA[spec["name"]]
        res = _timed(lambda: fn(workers=workers, **kwargs))
        results.append(res)
        emit(res.line())
    return results
