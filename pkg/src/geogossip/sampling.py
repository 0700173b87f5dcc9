"""Rejection sampling over Voronoi areas.

A node with cell area ``a_v`` accepts an incoming query with probability
``min(tau / a_v, 1)``, which tempers the area-proportional sampling that
uniform target locations induce.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegeneratePolicyError, InvalidParameterError
from .topology import VoronoiTessellation


def _areas(areas) -> np.ndarray:
    if isinstance(areas, VoronoiTessellation):
        return areas.areas
    return np.asarray(areas, dtype=float)


@dataclass(frozen=True, eq=False)
class RejectionPolicy:
    """Threshold ``tau`` with per-node acceptance probabilities.

    ``kind`` records how tau was chosen (``always``, ``fixed`` or
    ``quantile``); ``c``, ``mu`` and ``nu`` are set only for the kind that
    uses them.
    """

    tau: float
    accept: np.ndarray
    total_acceptance: float
    kind: str = "fixed"
    c: float | None = None
    mu: float | None = None
    nu: float | None = None

    @classmethod
    def from_threshold(cls, areas, tau: float, **params) -> "RejectionPolicy":
        a = _areas(areas)
        accept = np.where(a <= tau, 1.0, tau / a)
        accept.setflags(write=False)
        total = float(np.minimum(tau, a).sum())
        return cls(tau=float(tau), accept=accept, total_acceptance=total, **params)

    @property
    def n(self) -> int:
        return len(self.accept)


@dataclass(frozen=True, eq=False)
class InducedDistribution:
    q: np.ndarray

    @property
    def n(self) -> int:
        return len(self.q)


def policy_fixed_tau(areas, c: float) -> RejectionPolicy:
    """Threshold ``tau = c / n`` for ``0 < c < 1/4``."""
    if not 0.0 < c < 0.25:
        raise InvalidParameterError(f"c must lie in (0, 1/4), got {c}")
    a = _areas(areas)
    return RejectionPolicy.from_threshold(a, c / len(a), kind="fixed", c=c)


def policy_quantile(areas, mu: float, nu: float) -> RejectionPolicy:
    """Threshold at the empirical area quantile ``min(nu, mu / (1 + mu))``.

    ``tau`` is the k-th smallest area with ``k = max(1, ceil(p * n))``.
    """
    if not (mu > 0 and nu > 0):
        raise InvalidParameterError(f"mu and nu must be positive, got mu={mu}, nu={nu}")
    a = _areas(areas)
    n = len(a)
    if n < 2:
        raise InvalidParameterError("quantile policy needs at least two nodes")
    p = min(nu, mu / (1.0 + mu))
    # absorb representation error such as 0.1 * 300 = 30.000000000000004
    k = min(n, max(1, math.ceil(p * n - 1e-9)))
    tau = float(np.sort(a)[k - 1])
    return RejectionPolicy.from_threshold(a, tau, kind="quantile", mu=mu, nu=nu)


def policy_always(areas) -> RejectionPolicy:
    """Every node accepts; used on the cycle and grid where cells are equal."""
    a = _areas(areas)
    return RejectionPolicy.from_threshold(a, float(a.max()), kind="always")


def induced_distribution(p: RejectionPolicy, areas) -> InducedDistribution:
    a = _areas(areas)
    if len(a) != p.n:
        raise InvalidParameterError("policy and areas differ in length")
    w = np.minimum(p.tau, a)
    return InducedDistribution(w / w.sum())


def distance_to_uniform(q) -> tuple[float, float]:
    """l1 and l2 norms of ``q - 1/n``."""
    q = q.q if isinstance(q, InducedDistribution) else np.asarray(q, dtype=float)
    d = q - 1.0 / len(q)
    return float(np.abs(d).sum()), float(np.sqrt(np.dot(d, d)))


def expected_queries(p: RejectionPolicy) -> float:
    """Mean of the geometric number of queries until acceptance, ``1 / P_a``."""
    if p.total_acceptance <= 0.0:
        raise DegeneratePolicyError("total acceptance probability is zero")
    return 1.0 / p.total_acceptance


def decide_accept(p: RejectionPolicy, v: int, rng: np.random.Generator) -> bool:
    # one uniform per decision, even when accept[v] == 1, so the random stream
    # stays aligned with the compiled engine kernel
    return bool(rng.random() < p.accept[v])
