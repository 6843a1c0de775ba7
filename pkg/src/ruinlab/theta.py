"""Bivariate laws for the per-interval investment coefficients (mu, sigma^2/2).

Four support shapes are enough for every configuration the toolkit handles:

* ``finite``           : finitely many atoms,
* ``countable``        : an infinite atom family given by closed-form index
                         functions, plus the declared limit points of its
                         support (needed for the tangent geometry),
* ``polytope_uniform`` : the uniform law on a convex polygon given by its
                         vertices,
* ``product``          : independent marginals for mu and sigma^2/2.

The one countable family shipped with the package is the zeta-weighted
family P(Theta = (1/j, 1 - 1/j)) = j^(-p) / zeta(p), j >= 1, whose support
accumulates at (0, 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import partial
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from scipy.special import zeta as _hurwitz_zeta
from scipy.stats import zipf as _zipf

from .distributions import Distribution
from .errors import DistributionError

__all__ = ["ThetaLaw", "zeta_regime_law"]

Point = Tuple[float, float]


@dataclass(frozen=True)
class ThetaLaw:
    """Law of the coefficient vector Theta = (mu, sigma^2/2)."""

    kind: str
    atoms: Optional[tuple] = None            # finite: (((mu, hs), prob), ...)
    vertices: Optional[tuple] = None         # polytope_uniform
    dist_mu: Optional[Distribution] = None   # product
    dist_halfsig2: Optional[Distribution] = None
    # countable: vectorized j -> (mu_j, hs_j) and j -> prob_j
    point_fn: Optional[Callable] = None
    prob_fn: Optional[Callable] = None
    index_sampler: Optional[Callable] = None
    limit_points: tuple = ()

    # -- constructors ------------------------------------------------------

    @classmethod
    def finite(cls, atoms: Sequence[Tuple[Point, float]]) -> "ThetaLaw":
        pts = tuple(((float(x), float(y)), float(w)) for (x, y), w in atoms)
        if not pts:
            raise DistributionError("finite coefficient law needs atoms")
        if any(w <= 0 for _, w in pts):
            raise DistributionError("atom probabilities must be > 0")
        if abs(sum(w for _, w in pts) - 1.0) > 1e-12:
            raise DistributionError("atom probabilities must sum to 1")
        return cls("finite", atoms=pts)

    @classmethod
    def point_mass(cls, mu: float, half_sigma2: float) -> "ThetaLaw":
        return cls.finite([((mu, half_sigma2), 1.0)])

    @classmethod
    def polytope_uniform(cls, vertices: Sequence[Point]) -> "ThetaLaw":
        verts = _order_convex(vertices)
        if len(verts) < 3:
            raise DistributionError("polytope needs at least 3 vertices")
        return cls("polytope_uniform", vertices=verts)

    @classmethod
    def product(cls, dist_mu: Distribution, dist_halfsig2: Distribution
                ) -> "ThetaLaw":
        return cls("product", dist_mu=dist_mu, dist_halfsig2=dist_halfsig2)

    @classmethod
    def countable(cls, point_fn, prob_fn, index_sampler,
                  limit_points: Sequence[Point] = ()) -> "ThetaLaw":
        return cls("countable", point_fn=point_fn, prob_fn=prob_fn,
                   index_sampler=index_sampler,
                   limit_points=tuple((float(x), float(y))
                                      for x, y in limit_points))

    # -- sampling and moments ----------------------------------------------

    def sample(self, rng: np.random.Generator, size: Optional[int] = None
               ) -> Tuple[np.ndarray, np.ndarray]:
        """Draw (mu, sigma^2/2); arrays when ``size`` is given."""
        n = 1 if size is None else size
        if self.kind == "finite":
            pts = np.array([p for p, _ in self.atoms])
            probs = np.cumsum([w for _, w in self.atoms])
            idx = np.minimum(np.searchsorted(probs, rng.random(n), side="right"),
                             len(self.atoms) - 1)
            mu, hs = pts[idx, 0], pts[idx, 1]
        elif self.kind == "countable":
            j = self.index_sampler(rng, n)
            mu, hs = self.point_fn(np.asarray(j, dtype=float))
        elif self.kind == "polytope_uniform":
            mu, hs = _sample_polygon(np.asarray(self.vertices), rng, n)
        else:
            mu = np.atleast_1d(self.dist_mu.sample(rng, n))
            hs = np.atleast_1d(self.dist_halfsig2.sample(rng, n))
        if size is None:
            return float(mu[0]), float(hs[0])
        return np.asarray(mu, dtype=float), np.asarray(hs, dtype=float)

    def mean(self) -> Tuple[float, float]:
        """(E mu, E sigma^2/2)."""
        if self.kind == "finite":
            mu = sum(w * p[0] for p, w in self.atoms)
            hs = sum(w * p[1] for p, w in self.atoms)
            return mu, hs
        if self.kind == "countable":
            j = np.arange(1.0, 2.0e6)
            w = self.prob_fn(j)
            mu_j, hs_j = self.point_fn(j)
            tail = max(0.0, 1.0 - float(np.sum(w)))
            lx, ly = (self.limit_points[0] if self.limit_points else (0.0, 0.0))
            return (float(np.sum(w * mu_j)) + tail * lx,
                    float(np.sum(w * hs_j)) + tail * ly)
        if self.kind == "polytope_uniform":
            cx, cy = _polygon_centroid(np.asarray(self.vertices))
            return cx, cy
        return self.dist_mu.mean(), self.dist_halfsig2.mean()

    # -- support geometry ----------------------------------------------------

    @property
    def is_point_mass(self) -> bool:
        return self.kind == "finite" and len(self.atoms) == 1

    def support_box(self) -> Tuple[float, float, float, float]:
        """(mu_min, mu_max, hs_min, hs_max); entries may be infinite."""
        pts = self.candidate_points(j_probe=200_000)
        if self.kind == "product":
            a, b = self.dist_mu.support()
            c, d = self.dist_halfsig2.support()
            return a, b, c, d
        xs = [p[0] for p in pts]
        ys = [p[1] for p in pts]
        return min(xs), max(xs), min(ys), max(ys)

    def candidate_points(self, j_probe: int = 100_000) -> Tuple[Point, ...]:
        """Points whose touch values determine the tangent parameter.

        The scanned linear functionals are linear in theta, so for polytopes
        and product boxes the extreme values sit at vertices/corners; for
        countable supports the declared limit points join the atom list.
        """
        if self.kind == "finite":
            return tuple(p for p, _ in self.atoms)
        if self.kind == "polytope_uniform":
            return tuple(map(tuple, self.vertices))
        if self.kind == "countable":
            j = np.arange(1.0, float(j_probe) + 1.0)
            mu_j, hs_j = self.point_fn(j)
            pts = list(zip(mu_j.tolist(), hs_j.tolist()))
            return tuple(pts) + self.limit_points
        a, b = self.dist_mu.support()
        c, d = self.dist_halfsig2.support()
        if not (math.isfinite(b) and math.isfinite(d)):
            raise DistributionError(
                "product coefficient law must have bounded support for the "
                "tangent geometry")
        if not math.isfinite(a):
            raise DistributionError("mu marginal must be bounded below")
        return ((a, c), (a, d), (b, c), (b, d))


# -- zeta-weighted worked family ----------------------------------------------

def _zeta_points(j: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    return 1.0 / j, 1.0 - 1.0 / j


def _zeta_probs(p: float, j: np.ndarray) -> np.ndarray:
    return j ** (-p) / _hurwitz_zeta(p, 1)


def _zeta_sampler(p: float, rng: np.random.Generator, n: int) -> np.ndarray:
    return _zipf.rvs(p, size=n, random_state=rng)


def zeta_regime_law(p: int) -> ThetaLaw:
    """P(Theta = (1/j, 1 - 1/j)) = j^(-p)/zeta(p), j >= 1.

    The support accumulates at (0, 1), which is where the tangent ray
    touches it; the golden-ratio tangent parameter and the p = 2 divergence
    dichotomy both live on this family.
    """
    if p < 2:
        raise DistributionError("zeta family needs p >= 2 for a finite mean")
    return ThetaLaw.countable(
        point_fn=_zeta_points,
        prob_fn=partial(_zeta_probs, float(p)),
        index_sampler=partial(_zeta_sampler, float(p)),
        limit_points=[(0.0, 1.0)],
    )


# -- polygon helpers -----------------------------------------------------------

def _order_convex(vertices: Sequence[Point]) -> tuple:
    pts = [(float(x), float(y)) for x, y in dict.fromkeys(map(tuple, vertices))]
    cx = sum(p[0] for p in pts) / len(pts)
    cy = sum(p[1] for p in pts) / len(pts)
    pts.sort(key=lambda p: math.atan2(p[1] - cy, p[0] - cx))
    return tuple(pts)


def _polygon_centroid(v: np.ndarray) -> Tuple[float, float]:
    x, y = v[:, 0], v[:, 1]
    xr, yr = np.roll(x, -1), np.roll(y, -1)
    cross = x * yr - xr * y
    area = cross.sum() / 2.0
    cx = ((x + xr) * cross).sum() / (6.0 * area)
    cy = ((y + yr) * cross).sum() / (6.0 * area)
    return float(cx), float(cy)


def _sample_polygon(v: np.ndarray, rng: np.random.Generator, n: int
                    ) -> Tuple[np.ndarray, np.ndarray]:
    """Uniform points in a convex polygon by fan triangulation."""
    m = len(v)
    tris = np.array([[0, i, i + 1] for i in range(1, m - 1)])
    a = v[tris[:, 1]] - v[tris[:, 0]]
    b = v[tris[:, 2]] - v[tris[:, 0]]
    areas = 0.5 * np.abs(a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0])
    pick = rng.choice(len(tris), size=n, p=areas / areas.sum())
    r1 = rng.random(n)
    r2 = rng.random(n)
    flip = r1 + r2 > 1.0
    r1 = np.where(flip, 1.0 - r1, r1)
    r2 = np.where(flip, 1.0 - r2, r2)
    base = v[tris[pick, 0]]
    pts = base + r1[:, None] * a[pick] + r2[:, None] * b[pick]
    return pts[:, 0], pts[:, 1]
