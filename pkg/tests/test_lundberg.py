import math

import numpy as np
import pytest
from scipy.special import zeta

from ruinlab import (Distribution, HypothesisViolation, ModelConfig,
                     PremiumSpec, RegimeSpec, ThetaLaw, lundberg_report,
                     phi_nu_analytic, phi_nu_mc, q_plus_compute, sample_nu,
                     solve_beta, classify_endpoint, u_vector, zeta_regime_law)

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
EXP1 = Distribution.exponential(1.0)


def constant_cfg(mu, hs, tau=None, premium=None, c_bar=0.1, sigma_upper=None):
    return ModelConfig(
        claim_dist=Distribution.exponential(1.0),
        interarrival_dist=tau or EXP1,
        premium=premium or PremiumSpec.constant(min(0.1, c_bar)),
        regime=RegimeSpec.constant(ThetaLaw.point_mass(mu, hs)),
        mu_lower=mu, sigma_upper=sigma_upper or math.sqrt(2.0 * hs),
        c_bar=c_bar)


class TestUVector:
    def test_values(self):
        assert u_vector(0.0) == (0.0, 0.0)
        assert u_vector(1.0) == (-1.0, 2.0)

    def test_golden_ratio_identity(self):
        # q^2 + q = 1 at the golden point, so the second coordinate is 1
        assert u_vector(GOLDEN)[1] == pytest.approx(1.0, abs=1e-15)


class TestPhiNuAnalytic:
    def test_at_zero(self):
        assert phi_nu_analytic(ThetaLaw.point_mass(0.06, 0.02), EXP1, 0.0) == 1.0

    def test_point_mass_root_at_two(self):
        # <u(2), (0.06, 0.02)> = -0.12 + 6 * 0.02 = 0, so phi_nu(2) = 1
        val = phi_nu_analytic(ThetaLaw.point_mass(0.06, 0.02), EXP1, 2.0)
        assert val == pytest.approx(1.0, abs=1e-14)

    def test_atom_beyond_endpoint_diverges(self):
        law = ThetaLaw.finite([((0.0, 1.0), 0.5), ((0.5, 0.1), 0.5)])
        # at q = 0.7 the first atom has <u(q), theta> = 1.19 >= q_tau = 1
        assert phi_nu_analytic(law, EXP1, 0.7) == math.inf

    def test_endpoint_transition_around_q_plus(self):
        law = ThetaLaw.finite([((0.0, 1.0), 0.5), ((1.0, 0.5), 0.5)])
        geom = q_plus_compute(law, 1.0)
        assert geom.q_plus == pytest.approx(GOLDEN, abs=1e-12)
        assert math.isfinite(phi_nu_analytic(law, EXP1, geom.q_plus * (1 - 1e-6)))
        assert phi_nu_analytic(law, EXP1, geom.q_plus * (1 + 1e-6)) == math.inf

    def test_polytope_value_vs_mc(self):
        law = ThetaLaw.polytope_uniform([(0, 0.1), (0.5, 0.1), (0.5, 0.4),
                                         (0, 0.4)])
        q = 0.4
        val = phi_nu_analytic(law, EXP1, q)
        rng = np.random.default_rng(0)
        mu, hs = law.sample(rng, 400_000)
        tau_arg = -q * mu + q * (q + 1) * hs
        mc = np.mean(1.0 / (1.0 - tau_arg))
        assert val == pytest.approx(float(mc), rel=2e-3)

    def test_zeta_p4_matches_mc_on_grid(self):
        # agreement between the exact series and Monte Carlo at 10 arguments
        cfg = ModelConfig(
            claim_dist=EXP1, interarrival_dist=EXP1,
            premium=PremiumSpec.zero(),
            regime=RegimeSpec.constant(zeta_regime_law(4)),
            mu_lower=0.0, sigma_upper=math.sqrt(2.0), c_bar=0.0)
        nu = sample_nu(cfg, 400_000, 15)
        for q in np.linspace(0.05, 0.9 * GOLDEN, 10):
            exact = phi_nu_analytic(zeta_regime_law(4), EXP1, float(q))
            est = phi_nu_mc(cfg, float(q), len(nu), 15, nu=nu)
            assert abs(est.estimate - exact) <= 4.0 * est.stderr


class TestQPlus:
    def test_single_atom_golden(self):
        geom = q_plus_compute(ThetaLaw.point_mass(0.0, 1.0), 1.0)
        assert geom.q_plus == pytest.approx(GOLDEN, abs=1e-12)
        assert geom.touching_points == ((0.0, 1.0),)

    def test_atom_one_one(self):
        # touch value solves q^2 = 1
        geom = q_plus_compute(ThetaLaw.point_mass(1.0, 1.0), 1.0)
        assert geom.q_plus == pytest.approx(1.0, abs=1e-12)

    def test_unit_square(self):
        geom = q_plus_compute(ThetaLaw.polytope_uniform(
            [(0, 0), (1, 0), (0, 1), (1, 1)]), 1.0)
        assert geom.q_plus == pytest.approx(GOLDEN, abs=1e-12)
        assert geom.touching_points == ((0.0, 1.0),)

    def test_zeta_family_golden_from_limit_point(self):
        geom = q_plus_compute(zeta_regime_law(3), 1.0)
        assert geom.q_plus == pytest.approx(GOLDEN, abs=1e-12)
        assert geom.touching_points == ((0.0, 1.0),)

    def test_unbounded_product_rejected(self):
        law = ThetaLaw.product(Distribution.uniform(0.0, 0.1),
                               Distribution.exponential(1.0))
        with pytest.raises(Exception):
            q_plus_compute(law, 1.0)

    def test_gap_variable_nonnegative(self):
        rng = np.random.default_rng(2)
        geom = q_plus_compute(ThetaLaw.polytope_uniform(
            [(0, 0), (1, 0), (0, 1), (1, 1)]), 1.0)
        h = geom.h_law.sample(rng, 1_000_000)
        assert float(h.min()) >= 0.0


class TestTheorem2:
    def test_zeta_dichotomy(self):
        for p, want in ((2, "endpoint_infinite"), (3, "endpoint_finite"),
                        (4, "endpoint_finite"), (5, "endpoint_finite")):
            geom = q_plus_compute(zeta_regime_law(p), 1.0)
            verdict = classify_endpoint(geom, EXP1, delta=0.5)
            assert verdict.verdict == want, p
            assert not verdict.inconclusive

    def test_atom_at_zero_is_infinite(self):
        geom = q_plus_compute(ThetaLaw.point_mass(0.0, 1.0), 1.0)
        verdict = classify_endpoint(geom, EXP1, delta=0.25)
        assert verdict.verdict == "endpoint_infinite"
        assert verdict.integral_value == math.inf

    def test_square_touching_at_vertex_is_finite(self):
        geom = q_plus_compute(ThetaLaw.polytope_uniform(
            [(0, 0), (1, 0), (0, 1), (1, 1)]), 1.0)
        verdict = classify_endpoint(geom, EXP1, delta=0.3)
        assert verdict.verdict == "endpoint_finite"
        assert verdict.heuristic

    def test_rotated_square_edge_on_ray_is_infinite(self):
        # rotate the unit square about (0, 1) until its top edge lies on the
        # tangent ray; the near-ray mass is then of first order and the
        # endpoint diverges
        s = math.sqrt(2.0 - GOLDEN)
        e1 = (1.0 / s, GOLDEN / s)          # along the ray
        e2 = (GOLDEN / s, -1.0 / s)         # inward normal
        v0 = (0.0, 1.0)
        verts = [v0, (v0[0] + e1[0], v0[1] + e1[1]),
                 (v0[0] + e1[0] + e2[0], v0[1] + e1[1] + e2[1]),
                 (v0[0] + e2[0], v0[1] + e2[1])]
        geom = q_plus_compute(ThetaLaw.polytope_uniform(verts), 1.0)
        assert geom.q_plus == pytest.approx(GOLDEN, rel=1e-9)
        verdict = classify_endpoint(geom, EXP1, delta=0.3)
        assert verdict.verdict == "endpoint_infinite"

    def test_requires_divergent_endpoint(self):
        geom = q_plus_compute(ThetaLaw.point_mass(0.0, 1.0), 1.0)
        with pytest.raises(HypothesisViolation) as err:
            classify_endpoint(geom, Distribution.deterministic(1.0), delta=0.5)
        assert err.value.condition == "interarrival_endpoint"


class TestSolveBeta:
    def test_exact_identity_cases(self):
        rep = lundberg_report(constant_cfg(0.06, 0.02), tol=1e-10)
        assert abs(rep.beta - 2.0) <= 1e-9
        assert rep.beta < rep.q_nu
        rep = lundberg_report(constant_cfg(0.1, 0.02), tol=1e-10)
        assert abs(rep.beta - 4.0) <= 1e-9

    def test_phi_below_one_then_above(self):
        cfg = constant_cfg(0.06, 0.02)
        theta, tau = cfg.regime.theta, cfg.interarrival_dist
        rep = lundberg_report(cfg)
        q_nu = rep.q_nu
        for q in np.linspace(0.01, 0.99, 10) * rep.beta:
            assert phi_nu_analytic(theta, tau, float(q)) < 1.0
        for q in rep.beta + (q_nu - rep.beta) * np.linspace(0.01, 0.95, 10):
            assert phi_nu_analytic(theta, tau, float(q)) > 1.0

    def test_nonpositive_drift_raises(self):
        cfg = constant_cfg(0.01, 0.02)
        with pytest.raises(HypothesisViolation) as err:
            lundberg_report(cfg)
        assert err.value.condition == "mean_drift_positive"

    def test_root_exists_for_heavy_zeta_family(self):
        # p = 2: the endpoint diverges, so a root must exist below q_plus
        cfg = ModelConfig(
            claim_dist=EXP1, interarrival_dist=EXP1,
            premium=PremiumSpec.zero(),
            regime=RegimeSpec.constant(zeta_regime_law(2)),
            mu_lower=0.0, sigma_upper=math.sqrt(2.0), c_bar=0.0)
        rep = lundberg_report(cfg, tol=1e-10)
        assert rep.status == "root"
        assert 0.0 < rep.beta < rep.q_nu
        assert rep.phi_at_endpoint == math.inf
        assert abs(phi_nu_analytic(zeta_regime_law(2), EXP1, rep.beta)
                   - 1.0) <= 1e-10

    def test_no_root_for_light_zeta_family(self):
        cfg = ModelConfig(
            claim_dist=EXP1, interarrival_dist=EXP1,
            premium=PremiumSpec.zero(),
            regime=RegimeSpec.constant(zeta_regime_law(4)),
            mu_lower=0.0, sigma_upper=math.sqrt(2.0), c_bar=0.0)
        rep = lundberg_report(cfg)
        assert rep.status == "no_root" and rep.beta is None
        assert rep.q_nu == pytest.approx(GOLDEN, abs=1e-12)
        expected = zeta(3, 1) / (zeta(4, 1) * (1.0 + GOLDEN))
        assert rep.phi_at_endpoint == pytest.approx(expected, rel=1e-6)

    def test_hypothesis_flags(self):
        rep = lundberg_report(constant_cfg(0.06, 0.02))
        assert rep.hypothesis_flags == {"ek_positive": True,
                                        "claim_moment_ok": True,
                                        "cond_tau_ok": True}
        # coarse coefficient bounds can break the tail-margin condition
        rep = lundberg_report(constant_cfg(0.06, 0.02, sigma_upper=1.0))
        assert rep.hypothesis_flags["cond_tau_ok"] is False
        # heavy claim tails break the moment condition
        cfg = ModelConfig(
            claim_dist=Distribution.pareto(1.5, 1.0), interarrival_dist=EXP1,
            premium=PremiumSpec.constant(0.1),
            regime=RegimeSpec.constant(ThetaLaw.point_mass(0.06, 0.02)),
            mu_lower=0.06, sigma_upper=0.2, c_bar=0.1)
        rep = lundberg_report(cfg)
        assert rep.hypothesis_flags["claim_moment_ok"] is False

    def test_solve_beta_on_plain_curve(self):
        # explicit evaluator: phi(q) = E e^{q nu} for nu ~ N(-1, 1)
        phi = lambda q: math.exp(-q + q * q / 2.0)
        rep = solve_beta(phi, q_upper_hint=math.inf, tol=1e-12)
        assert rep.beta == pytest.approx(2.0, abs=1e-9)

    def test_monte_carlo_mode(self):
        cfg = constant_cfg(0.06, 0.02)
        rep = lundberg_report(cfg, method="monte_carlo", mc_samples=400_000,
                              seed=8)
        assert rep.method == "monte_carlo"
        assert rep.ci_halfwidth is not None
        assert abs(rep.beta - 2.0) <= max(4.0 * rep.ci_halfwidth, 0.05)

    def test_mc_estimate_at_root_argument(self):
        # deterministic unit interval: e^{2 nu} has mean exp(0) = 1 exactly
        cfg = constant_cfg(0.06, 0.02, tau=Distribution.deterministic(1.0))
        est = phi_nu_mc(cfg, 2.0, 1_000_000, 5)
        assert abs(est.estimate - 1.0) <= 4.0 * est.stderr
        assert not est.stability_flag

    def test_stability_flag_near_endpoint(self):
        cfg = constant_cfg(0.06, 0.02)
        est = phi_nu_mc(cfg, 9.5, 1_000_000, 3)  # above q_nu = 8.14
        assert est.stability_flag
        below = phi_nu_mc(cfg, 4.0, 1_000_000, 3)
        assert not below.stability_flag
