"""Model configuration and sampling of the per-interval regime quadruples.

A configuration bundles the claim-size law, the inter-arrival law, the
regime specification for the investment coefficients, the premium-rate
specification, and the global bounds (mu_lower, sigma_upper, c_bar).

Randomness is organized as three decorrelated sub-streams derived from one
master seed: ``claims`` (claim sizes), ``regime`` (inter-arrival times and
coefficient values), and ``brownian`` (Wiener increments and bridge nodes).
Changing, say, the claim law therefore never perturbs the regime draws,
which is what makes the common-random-number monotonicity and scaling
checks exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Tuple, Union

import numpy as np

from .distributions import Distribution
from .errors import DistributionError, HypothesisViolation
from .theta import ThetaLaw

__all__ = [
    "RngStreams", "PremiumSpec", "RegimeSpec", "ModelConfig", "RegimeDraw",
    "draw_regime", "draw_claim",
]

_STREAM_LABELS = {"claims": 101, "regime": 202, "brownian": 303}


@dataclass
class RngStreams:
    """One generator triple; workers own disjoint triples via chunk ids."""

    claims: np.random.Generator
    regime: np.random.Generator
    brownian: np.random.Generator

    @classmethod
    def from_seed(cls, seed: int, chunk: int = 0) -> "RngStreams":
        gens = {
            name: np.random.default_rng(
                np.random.SeedSequence(entropy=int(seed),
                                       spawn_key=(label, int(chunk))))
            for name, label in _STREAM_LABELS.items()
        }
        return cls(**gens)


def as_streams(rng: Union[int, "RngStreams"]) -> "RngStreams":
    return rng if isinstance(rng, RngStreams) else RngStreams.from_seed(rng)


@dataclass(frozen=True)
class PremiumSpec:
    """State-independent premium rate c(t), valued in [0, c_bar]."""

    mode: str  # "constant" | "exponential_decay" | "zero"
    c: float = 0.0
    c1: float = 0.0
    gamma_rate: float = 0.0

    def __post_init__(self):
        if self.mode not in ("constant", "exponential_decay", "zero"):
            raise DistributionError(f"unknown premium mode {self.mode!r}")
        if self.mode == "constant" and self.c < 0:
            raise DistributionError("constant premium rate must be >= 0")
        if self.mode == "exponential_decay":
            if self.c1 < 0:
                raise DistributionError("decaying premium needs c1 >= 0")
            if self.gamma_rate > 0:
                raise DistributionError("decay exponent must be <= 0")

    @classmethod
    def constant(cls, c: float) -> "PremiumSpec":
        return cls("constant", c=float(c))

    @classmethod
    def exponential_decay(cls, c1: float, gamma_rate: float) -> "PremiumSpec":
        return cls("exponential_decay", c1=float(c1), gamma_rate=float(gamma_rate))

    @classmethod
    def zero(cls) -> "PremiumSpec":
        return cls("zero")

    @property
    def max_rate(self) -> float:
        if self.mode == "constant":
            return self.c
        if self.mode == "exponential_decay":
            return self.c1
        return 0.0

    @property
    def is_zero(self) -> bool:
        return self.max_rate == 0.0

    def rate(self, t):
        """c(t), vectorized over t."""
        if self.mode == "constant":
            return self.c if np.isscalar(t) else np.full_like(np.asarray(t, float), self.c)
        if self.mode == "zero":
            return 0.0 if np.isscalar(t) else np.zeros_like(np.asarray(t, float))
        return self.c1 * np.exp(self.gamma_rate * np.asarray(t, float))

    def integral(self, t0, t1):
        """Exact integral of c over [t0, t1] (used by the no-investment path)."""
        if self.mode == "constant":
            return self.c * (np.asarray(t1) - np.asarray(t0))
        if self.mode == "zero":
            return np.zeros_like(np.asarray(t1, float))
        g = self.gamma_rate
        if g == 0.0:
            return self.c1 * (np.asarray(t1) - np.asarray(t0))
        return self.c1 / g * (np.exp(g * np.asarray(t1)) - np.exp(g * np.asarray(t0)))

    def scaled(self, k: float) -> "PremiumSpec":
        if self.mode == "constant":
            return PremiumSpec.constant(self.c * k)
        if self.mode == "exponential_decay":
            return PremiumSpec.exponential_decay(self.c1 * k, self.gamma_rate)
        return self


@dataclass(frozen=True)
class RegimeSpec:
    """Coefficient processes between claims.

    ``constant`` draws one (mu, sigma^2/2) per interval from a ThetaLaw and
    holds it until the next claim.  ``piecewise`` redraws the coefficients
    from per-node laws on a time grid of step ``h`` inside each interval
    (piecewise-constant, right-continuous paths).
    """

    mode: str  # "constant" | "piecewise"
    theta: Optional[ThetaLaw] = None
    mu_law: Optional[Distribution] = None
    sigma_law: Optional[Distribution] = None
    h: float = 0.0

    def __post_init__(self):
        if self.mode not in ("constant", "piecewise"):
            raise DistributionError(f"unknown regime mode {self.mode!r}")
        if self.mode == "constant" and self.theta is None:
            raise DistributionError("constant regime needs a coefficient law")
        if self.mode == "piecewise":
            if self.mu_law is None or self.sigma_law is None:
                raise DistributionError("piecewise regime needs node laws")
            if self.h <= 0:
                raise DistributionError("piecewise regime needs grid step h > 0")

    @classmethod
    def constant(cls, theta: ThetaLaw) -> "RegimeSpec":
        return cls("constant", theta=theta)

    @classmethod
    def piecewise(cls, h: float, mu_law: Distribution, sigma_law: Distribution
                  ) -> "RegimeSpec":
        return cls("piecewise", mu_law=mu_law, sigma_law=sigma_law, h=float(h))


@dataclass(frozen=True)
class ModelConfig:
    """Full model specification.

    ``regime=None`` selects the no-investment baseline: unit step multiplier
    and step increment (premium income over the interval) minus the claim.
    """

    claim_dist: Distribution
    interarrival_dist: Distribution
    premium: PremiumSpec
    regime: Optional[RegimeSpec] = None
    mu_lower: float = -math.inf
    sigma_upper: float = math.inf
    c_bar: float = 0.0
    grid_step: float = 1e-3

    def __post_init__(self):
        if not self.claim_dist.nonnegative_support:
            raise DistributionError("claim law must have nonnegative support")
        if not self.interarrival_dist.positive_a_s:
            raise DistributionError("inter-arrival times must be positive")
        if self.interarrival_dist.kind == "pareto":
            raise DistributionError("pareto is permitted for claims only")
        if self.grid_step <= 0:
            raise DistributionError("grid step must be > 0")
        if self.c_bar < 0:
            raise DistributionError("premium bound c_bar must be >= 0")
        if self.premium.max_rate > self.c_bar + 1e-12:
            raise DistributionError("premium rate exceeds the bound c_bar")
        if self.regime is not None:
            self._check_regime_bounds()

    def _check_regime_bounds(self):
        if self.sigma_upper <= 0:
            raise DistributionError("sigma_upper must be > 0")
        hs_cap = 0.5 * self.sigma_upper ** 2
        if self.regime.mode == "constant":
            mu_min, _, hs_min, hs_max = self.regime.theta.support_box()
            if mu_min < self.mu_lower - 1e-12:
                raise DistributionError("coefficient law puts mu below mu_lower")
            if hs_min < 0 or hs_max > hs_cap + 1e-12:
                raise DistributionError(
                    "sigma^2/2 support must lie in [0, sigma_upper^2/2]")
            if hs_max <= 0:
                raise DistributionError(
                    "volatility must be positive with positive probability")
        else:
            if not self.regime.sigma_law.positive_a_s:
                raise DistributionError("sigma node law must be positive")
            if self.regime.sigma_law.support()[1] > self.sigma_upper + 1e-12:
                raise DistributionError("sigma node law exceeds sigma_upper")
            mlo, _ = self.regime.mu_law.support()
            if mlo < self.mu_lower - 1e-12:
                raise DistributionError("mu node law goes below mu_lower")

    # -- derived quantities --------------------------------------------------

    @property
    def has_investment(self) -> bool:
        return self.regime is not None

    def expected_log_drift(self) -> float:
        """E K, the mean integrated drift of log returns over one interval.

        Zero for the no-investment baseline.  For both regime modes the
        coefficient draws are independent of the interval length, so
        E K = E(mu - sigma^2/2) * E tau exactly.
        """
        if self.regime is None:
            return 0.0
        e_tau = self.interarrival_dist.mean()
        if self.regime.mode == "constant":
            e_mu, e_hs = self.regime.theta.mean()
        else:
            e_mu = self.regime.mu_law.mean()
            e_hs = 0.5 * self.regime.sigma_law.moment(2.0)
        return (e_mu - e_hs) * e_tau

    @property
    def ek_positive(self) -> Optional[bool]:
        if self.regime is None:
            return None
        return self.expected_log_drift() > 0.0

    def require_positive_drift(self):
        if self.regime is not None and not self.ek_positive:
            raise HypothesisViolation(
                "mean_drift_positive",
                "mean log-return drift E(mu - sigma^2/2) * E tau = "
                f"{self.expected_log_drift():.6g} is not positive; the decay "
                "exponent does not exist and ruin is certain in the "
                "constant-coefficient case")

    def scaled(self, k: float) -> "ModelConfig":
        """Monetary rescaling: claims and premium by k; time and regime kept."""
        return replace(self, claim_dist=self.claim_dist.scaled(k),
                       premium=self.premium.scaled(k), c_bar=self.c_bar * k)


@dataclass
class RegimeDraw:
    """One sampled quadruple restricted to its inter-claim interval.

    The coefficient paths are piecewise constant (right-continuous) on the
    cells of a grid covering [0, tau]; the final cell is prorated.  Wiener
    increments carry variance equal to the cell widths.
    """

    tau: float
    node_times: np.ndarray   # length m + 1, node_times[0] = 0, [-1] = tau
    widths: np.ndarray       # length m
    mu: np.ndarray           # per-cell drift values
    sigma: np.ndarray        # per-cell volatility values
    dW: np.ndarray           # per-cell Wiener increments
    coarse: bool             # fewer than 4 cells cover the interval

    @property
    def n_cells(self) -> int:
        return len(self.widths)


def _grid_for(tau: float, h: float) -> Tuple[np.ndarray, np.ndarray]:
    n = max(1, math.ceil(tau / h - 1e-12))
    nodes = np.minimum(np.arange(n + 1) * h, tau)
    nodes[-1] = tau
    return nodes, np.diff(nodes)


def draw_regime(config: ModelConfig, rng: Union[int, RngStreams]) -> RegimeDraw:
    """Sample one quadruple (mu path, sigma path, tau, Wiener increments).

    The interval length and coefficient values come from the ``regime``
    stream, the Wiener increments from the ``brownian`` stream, so the
    increments are independent of (mu, sigma, tau) by construction.
    """
    if config.regime is None:
        raise DistributionError("no-investment configuration has no regime draws")
    streams = as_streams(rng)
    tau = float(config.interarrival_dist.sample(streams.regime))
    spec = config.regime
    h = spec.h if spec.mode == "piecewise" else config.grid_step
    nodes, widths = _grid_for(tau, h)
    m = len(widths)
    if spec.mode == "constant":
        mu0, hs0 = spec.theta.sample(streams.regime)
        mu = np.full(m, mu0)
        sigma = np.full(m, math.sqrt(2.0 * hs0))
    else:
        mu = np.atleast_1d(spec.mu_law.sample(streams.regime, m))
        sigma = np.atleast_1d(spec.sigma_law.sample(streams.regime, m))
    dW = streams.brownian.standard_normal(m) * np.sqrt(widths)
    return RegimeDraw(tau=tau, node_times=nodes, widths=widths, mu=mu,
                      sigma=sigma, dW=dW, coarse=m < 4)


def draw_claim(config: ModelConfig, rng: Union[int, RngStreams]) -> float:
    """Positive claim size from the dedicated claims stream."""
    return float(config.claim_dist.sample(as_streams(rng).claims))
