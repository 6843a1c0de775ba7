"""Stochastic perpetuities, their distributional fixed points, and tail constants.

The ruin bounds rest on two perpetuity-type variables built from the step
pairs (M, Q) = (1, claim) / step-multiplier:

* the increasing perpetuity R = sum_k Q_k prod_{i<k} M_i, whose tail bounds
  the ruin probability from above, and
* the running supremum R_bar of the analogous sums built from the
  premium-capped increments, which bounds it from below and satisfies the
  max-type fixed point Y = Q_bar + M Y^+ in distribution.

Both are sampled by lockstep truncation: once the running product of
multipliers falls below ``rel_tol`` the remaining terms are geometrically
negligible next to Monte Carlo noise.  The implicit-renewal tail constant
is estimated by the expectation-ratio formula on paired draws.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import partial
from typing import Callable, Tuple, Union

import numpy as np
from scipy import stats

from .distributions import Distribution
from .engine import DEFAULT_CHUNK_SIZE, DEFAULT_PREMIUM_NODES, StepKernel, run_chunked
from .errors import EstimationError, HypothesisViolation
from .lundberg import sample_nu
from .model import ModelConfig, RngStreams, as_streams

__all__ = [
    "PerpetuityPair", "PerpetuitySample", "PerpetuityBatch", "GoldieEstimate",
    "deterministic_pair_sampler", "iid_pair_sampler", "model_pair_sampler",
    "qbar_pair_sampler", "sample_R", "sample_R_values", "sample_Rbar_values",
    "sample_sup_values", "ks_fixed_point", "goldie_constant",
]

# A pair sampler returns (multipliers, increments) for a block of slots.
PairSampler = Callable[[RngStreams, int], Tuple[np.ndarray, np.ndarray]]

DEFAULT_REL_TOL = 1e-12
DEFAULT_N_MAX = 100_000
_STALL_LIMIT = 50


@dataclass(frozen=True)
class PerpetuityPair:
    """One multiplier/increment pair; multipliers must be positive."""
    a: float
    b: float

    def __post_init__(self):
        if self.a <= 0:
            raise ValueError("multiplier must be > 0")


@dataclass(frozen=True)
class PerpetuitySample:
    value: float
    n_terms: int
    converged: bool


@dataclass
class PerpetuityBatch:
    values: np.ndarray
    n_terms: np.ndarray
    converged: np.ndarray

    def converged_values(self) -> np.ndarray:
        return self.values[self.converged]

    @property
    def discard_rate(self) -> float:
        return 1.0 - float(np.mean(self.converged))


@dataclass(frozen=True)
class GoldieEstimate:
    c_hat: float
    stderr: float
    n_samples: int


# -- pair samplers ---------------------------------------------------------------

def _const_pair(a: float, b: float, streams: RngStreams, n: int):
    return np.full(n, a), np.full(n, b)


def deterministic_pair_sampler(pair: PerpetuityPair) -> PairSampler:
    return partial(_const_pair, pair.a, pair.b)


def _iid_pair(m_dist: Distribution, q_dist: Distribution,
              streams: RngStreams, n: int):
    m = np.atleast_1d(m_dist.sample(streams.regime, n))
    q = np.atleast_1d(q_dist.sample(streams.claims, n))
    return m, q


def iid_pair_sampler(m_dist: Distribution, q_dist: Distribution) -> PairSampler:
    """Independent multiplier and increment laws (test harness helper)."""
    return partial(_iid_pair, m_dist, q_dist)


def _model_pair(config: ModelConfig, streams: RngStreams, n: int):
    nu = sample_nu(config, n, streams)
    m = np.exp(nu)
    xi = np.atleast_1d(config.claim_dist.sample(streams.claims, n))
    return m, xi * m


def model_pair_sampler(config: ModelConfig) -> PairSampler:
    """(M, Q) = (1, claim) / step-multiplier for the upper-bound perpetuity."""
    return partial(_model_pair, config)


def _qbar_pair(config: ModelConfig, premium_nodes: int,
               streams: RngStreams, n: int):
    kernel = StepKernel(config, premium_nodes)
    blk = kernel.sample(streams, n, need_exp_integral=True)
    m = np.exp(blk.nu)
    qbar = (blk.claim - config.c_bar * blk.exp_integral) * m
    return m, qbar


def qbar_pair_sampler(config: ModelConfig,
                      premium_nodes: int = DEFAULT_PREMIUM_NODES) -> PairSampler:
    """(M, Q_bar) with the premium capped at c_bar, for the lower bound.

    Q_bar = (claim - c_bar * growth integral) * M can take either sign, so
    the associated perpetuity is the running supremum of its partial sums.
    """
    return partial(_qbar_pair, config, premium_nodes)


def _check_contraction(sampler: PairSampler, seed: int, n: int = 20_000):
    streams = RngStreams.from_seed(seed, chunk=1 << 30)
    m, q = sampler(streams, n)
    logs = np.log(m)
    mean, se = float(np.mean(logs)), float(np.std(logs, ddof=1) / math.sqrt(n))
    if mean + 3.0 * se >= 0.0:
        raise HypothesisViolation(
            "mean_drift_positive",
            f"E ln M = {mean:.4g} (+/- {se:.2g}) is not negative; the "
            "perpetuity does not converge")
    with np.errstate(divide="ignore"):
        logq = np.log(np.abs(q[q != 0.0]))
    if len(logq) and not np.isfinite(np.mean(np.maximum(logq, 0.0))):
        raise EstimationError("E (ln|Q|)^+ looks infinite on a pilot sample")


# -- lockstep samplers ------------------------------------------------------------

def _increasing_chunk(streams, size, *, sampler, n_max, rel_tol):
    values = np.zeros(size)
    prod = np.ones(size)
    idx = np.arange(size)
    out_v = np.empty(size)
    out_n = np.full(size, n_max, dtype=np.int64)
    out_c = np.zeros(size, dtype=bool)
    for k in range(1, n_max + 1):
        m, q = sampler(streams, len(idx))
        values = values + prod * q
        prod = prod * m
        stop = prod < rel_tol
        if stop.any():
            tgt = idx[stop]
            out_v[tgt] = values[stop]
            out_n[tgt] = k
            out_c[tgt] = True
            keep = ~stop
            values, prod, idx = values[keep], prod[keep], idx[keep]
        if len(idx) == 0:
            break
    if len(idx):
        out_v[idx] = values
    return out_v, out_n, out_c


def _sup_chunk(streams, size, *, sampler, n_max, rel_tol, stall_limit):
    sums = np.zeros(size)
    prod = np.ones(size)
    sup = np.full(size, -np.inf)
    stale = np.zeros(size, dtype=np.int64)
    idx = np.arange(size)
    out_v = np.empty(size)
    out_n = np.full(size, n_max, dtype=np.int64)
    out_c = np.zeros(size, dtype=bool)
    for k in range(1, n_max + 1):
        m, q = sampler(streams, len(idx))
        sums = sums + prod * q
        improved = sums > sup
        np.maximum(sup, sums, out=sup)
        stale = np.where(improved, 0, stale + 1)
        prod = prod * m
        stop = (prod < rel_tol) & (stale >= stall_limit)
        if stop.any():
            tgt = idx[stop]
            out_v[tgt] = sup[stop]
            out_n[tgt] = k
            out_c[tgt] = True
            keep = ~stop
            sums, prod, sup, stale, idx = (sums[keep], prod[keep], sup[keep],
                                           stale[keep], idx[keep])
        if len(idx) == 0:
            break
    if len(idx):
        out_v[idx] = sup
    return out_v, out_n, out_c


def _merge_batches(results) -> PerpetuityBatch:
    return PerpetuityBatch(
        values=np.concatenate([r[0] for r in results]),
        n_terms=np.concatenate([r[1] for r in results]),
        converged=np.concatenate([r[2] for r in results]))


def sample_R_values(pair_sampler: PairSampler, n_samples: int, seed: int = 0,
                    n_max: int = DEFAULT_N_MAX, rel_tol: float = DEFAULT_REL_TOL,
                    workers: int = 1, chunk_size: int = DEFAULT_CHUNK_SIZE
                    ) -> PerpetuityBatch:
    """Sample the increasing perpetuity; values are truncated partial sums.

    The truncation rule kills the remaining terms once the running product
    is below ``rel_tol``: what is left is bounded by that product times an
    independent copy of the perpetuity, negligible against sampling noise.
    """
    _check_contraction(pair_sampler, seed)
    results = run_chunked(_increasing_chunk, n_samples, seed, workers,
                          chunk_size, sampler=pair_sampler, n_max=n_max,
                          rel_tol=rel_tol)
    return _merge_batches(results)


def sample_sup_values(pair_sampler: PairSampler, n_samples: int, seed: int = 0,
                      n_max: int = DEFAULT_N_MAX,
                      rel_tol: float = DEFAULT_REL_TOL, workers: int = 1,
                      chunk_size: int = DEFAULT_CHUNK_SIZE,
                      stall_limit: int = _STALL_LIMIT) -> PerpetuityBatch:
    """Running supremum of the partial sums (increments of either sign).

    A slot stops once its product is below ``rel_tol`` and the supremum has
    not improved for ``stall_limit`` consecutive terms.
    """
    _check_contraction(pair_sampler, seed)
    results = run_chunked(_sup_chunk, n_samples, seed, workers, chunk_size,
                          sampler=pair_sampler, n_max=n_max, rel_tol=rel_tol,
                          stall_limit=stall_limit)
    return _merge_batches(results)


def sample_Rbar_values(config: ModelConfig, n_samples: int, seed: int = 0,
                       n_max: int = DEFAULT_N_MAX,
                       rel_tol: float = DEFAULT_REL_TOL, workers: int = 1,
                       chunk_size: int = DEFAULT_CHUNK_SIZE,
                       premium_nodes: int = DEFAULT_PREMIUM_NODES
                       ) -> PerpetuityBatch:
    """Supremum perpetuity for the premium-capped lower bound."""
    return sample_sup_values(qbar_pair_sampler(config, premium_nodes),
                             n_samples, seed, n_max, rel_tol, workers,
                             chunk_size)


def sample_R(pair_sampler: PairSampler, n_max: int, rel_tol: float,
             rng: Union[int, RngStreams]) -> PerpetuitySample:
    """Single draw of the increasing perpetuity."""
    streams = as_streams(rng)
    v, n, c = _increasing_chunk(streams, 1, sampler=pair_sampler,
                                n_max=n_max, rel_tol=rel_tol)
    return PerpetuitySample(float(v[0]), int(n[0]), bool(c[0]))


# -- fixed point and tail constant --------------------------------------------------

def ks_fixed_point(values_R: np.ndarray, pair_sampler: PairSampler,
                   rng: Union[int, RngStreams]) -> float:
    """Two-sample KS statistic between R and Q + M R' (independent pairing).

    An independent random permutation decouples the perpetuity draws from
    the fresh pairs, which is what the right-hand side of the fixed point
    requires; a small statistic certifies distributional self-consistency.
    """
    values_R = np.asarray(values_R)
    n = len(values_R)
    if n < 10_000:
        raise ValueError("fixed-point check needs at least 1e4 samples")
    streams = as_streams(rng)
    m, q = pair_sampler(streams, n)
    perm = streams.regime.permutation(n)
    rhs = q + m * values_R[perm]
    return float(stats.ks_2samp(values_R, rhs).statistic)


def goldie_constant(values_Z: np.ndarray, pair_sampler: PairSampler,
                    alpha: float, rng: Union[int, RngStreams],
                    n_batches: int = 100) -> GoldieEstimate:
    """Implicit-renewal tail constant via the expectation-ratio formula.

    c_hat estimates E[((B + A Z)^+)^alpha - ((A Z^+))^alpha] divided by
    alpha E[A^alpha ln A] on paired draws, with a batch-means standard
    error.  Requires E A^alpha = 1 (checked within Monte Carlo tolerance)
    and a non-degenerate denominator.
    """
    values_Z = np.asarray(values_Z)
    n = len(values_Z)
    if n < n_batches * 10:
        raise ValueError("too few samples for batch-means error bars")
    streams = as_streams(rng)
    a, b = pair_sampler(streams, n)
    if np.any(a <= 0):
        raise EstimationError("multipliers must be positive")
    perm = streams.regime.permutation(n)
    z = values_Z[perm]

    a_alpha = a ** alpha
    mean_a, se_a = float(np.mean(a_alpha)), float(np.std(a_alpha) / math.sqrt(n))
    if abs(mean_a - 1.0) > 4.0 * max(se_a, 1e-12):
        warnings.warn(
            f"E A^alpha = {mean_a:.4f} (+/- {se_a:.4f}) is not 1 within MC "
            "tolerance; alpha is off the implicit-renewal root", stacklevel=2)

    num = np.maximum(b + a * z, 0.0) ** alpha - (a * np.maximum(z, 0.0)) ** alpha
    den = a_alpha * np.log(a)
    den_mean = float(np.mean(den))
    den_se = float(np.std(den, ddof=1) / math.sqrt(n))
    if abs(den_mean) <= 2.0 * den_se:
        raise EstimationError(
            "degenerate denominator: E A^alpha ln A is indistinguishable "
            "from 0")
    c_hat = float(np.mean(num)) / (alpha * den_mean)
    # batch means on the ratio
    nb = (n // n_batches) * n_batches
    num_b = num[:nb].reshape(n_batches, -1).mean(axis=1)
    den_b = den[:nb].reshape(n_batches, -1).mean(axis=1)
    c_b = num_b / (alpha * den_b)
    stderr = float(np.std(c_b, ddof=1) / math.sqrt(n_batches))
    return GoldieEstimate(c_hat=c_hat, stderr=stderr, n_samples=n)
