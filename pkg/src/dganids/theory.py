"""Numeric oracles for the optimality analysis of the detector.

Works on discrete distributions; continuous toy densities are binned by the
caller (see :func:`bin_density`) before any divergence is evaluated. All
logarithms are natural, so the centralized optimum is -log(4) nats and the
Jensen-Shannon divergence is bounded by log(2).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import DivergenceInfiniteError

log = logging.getLogger(__name__)

LOG2 = float(np.log(2.0))
CENTRALIZED_OPTIMAL_VALUE = float(-np.log(4.0))

MAX_BINS = 512


@dataclass(frozen=True)
class DiscreteDistribution:
    support: np.ndarray
    probabilities: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "support", np.asarray(self.support))
        p = np.asarray(self.probabilities, dtype=np.float64)
        object.__setattr__(self, "probabilities", p)
        if len(self.support) != len(p):
            raise ValueError("support and probabilities must have equal length")
        if (p < 0).any():
            raise ValueError("probabilities must be non-negative")
        if abs(p.sum() - 1.0) > 1e-9:
            raise ValueError(f"probabilities sum to {p.sum()!r}, not 1")


def aligned(p: DiscreteDistribution, q: DiscreteDistribution) -> tuple[np.ndarray, np.ndarray]:
    if len(p.probabilities) != len(q.probabilities):
        raise ValueError("distributions must share an aligned support")
    return p.probabilities, q.probabilities


def kl_divergence(p: DiscreteDistribution, q: DiscreteDistribution) -> float:
    """Sum of p*log(p/q) in nats, with the 0*log(0/q)=0 convention."""
    pp, qq = aligned(p, q)
    mask = pp > 0
    bad = mask & (qq == 0)
    if bad.any():
        raise DivergenceInfiniteError(int(np.flatnonzero(bad)[0]))
    return float(np.sum(pp[mask] * np.log(pp[mask] / qq[mask])))


def js_divergence(p: DiscreteDistribution, q: DiscreteDistribution) -> float:
    """(1/2) KL(p||m) + (1/2) KL(q||m) with m the even mixture; always finite."""
    pp, qq = aligned(p, q)
    m = 0.5 * (pp + qq)
    total = 0.0
    for dist in (pp, qq):
        mask = dist > 0
        total += 0.5 * float(np.sum(dist[mask] * np.log(dist[mask] / m[mask])))
    return total


def optimal_discriminator(p_data: DiscreteDistribution, p_g: DiscreteDistribution) -> np.ndarray:
    """Pointwise best response p_data/(p_data+p_g) over the shared support.

    Points where both distributions vanish carry no information and are
    excluded; the returned array is aligned with the kept points.
    """
    pp, gg = aligned(p_data, p_g)
    keep = (pp + gg) > 0
    if not keep.all():
        log.warning("optimal_discriminator: excluding %d zero-mass support points",
                    int((~keep).sum()))
    return pp[keep] / (pp[keep] + gg[keep])


def standalone_optimal_value(p_i: DiscreteDistribution, p: DiscreteDistribution) -> float:
    """Claimed optimum for a detector trained on one device's slice alone."""
    return CENTRALIZED_OPTIMAL_VALUE + js_divergence(p_i, p)


def standalone_tp_bound(p_i: DiscreteDistribution, p: DiscreteDistribution,
                        measure: str = "under-p") -> float:
    """True-positive ceiling E[1 - |1 - 2p/(p_i+p)|] for a single-slice detector.

    The expectation measure is a parameter because the source analysis leaves
    it implicit: "under-p" (default) weights by the full data distribution,
    "under-p_i" by the device's own slice.
    """
    pp_i, pp = aligned(p_i, p)
    if measure == "under-p":
        weights = pp
    elif measure == "under-p_i":
        weights = pp_i
    else:
        raise ValueError(f"measure must be under-p or under-p_i, got {measure!r}")
    denom = pp_i + pp
    mask = denom > 0
    term = 1.0 - np.abs(1.0 - 2.0 * pp[mask] / denom[mask])
    return float(np.sum(weights[mask] * term))


def bin_density(pdf, lo: float, hi: float, bins: int = MAX_BINS) -> DiscreteDistribution:
    """Discretize a 1-D density onto midpoint bins over [lo, hi] and normalize."""
    if bins < 1 or bins > MAX_BINS:
        raise ValueError(f"bins must be in [1, {MAX_BINS}]")
    edges = np.linspace(lo, hi, bins + 1)
    centers = 0.5 * (edges[:-1] + edges[1:])
    mass = np.asarray([float(pdf(c)) for c in centers]) * (edges[1] - edges[0])
    total = mass.sum()
    if total <= 0:
        raise ValueError("density has no mass on the binning interval")
    return DiscreteDistribution(centers, mass / total)
