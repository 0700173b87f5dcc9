"""Initial observation fields x(0)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError
from .topology import TWO_PI, Topology, nearest_node

FIELD_KINDS = ("linear", "diffusion", "spike", "constant")


@dataclass(frozen=True)
class FieldSpec:
    kind: str = "spike"
    sources: int = 5
    iterations: int = 50
    seed: int = 0
    value: float = 1.0  # constant field only

    def __post_init__(self):
        if self.kind not in FIELD_KINDS:
            raise InvalidParameterError(f"unknown field kind {self.kind!r}")
        if self.sources < 1 or self.iterations < 0:
            raise InvalidParameterError("diffusion needs sources >= 1 and iterations >= 0")

    def generate(self, t: Topology) -> np.ndarray:
        if self.kind == "linear":
            return linear_field(t)
        if self.kind == "spike":
            return spike_field(t)
        if self.kind == "diffusion":
            return diffusion_field(t, self.sources, self.iterations, self.seed)
        return np.full(t.n, float(self.value))


def linear_field(t: Topology) -> np.ndarray:
    """First coordinate of each node (angle / 2*pi on the cycle)."""
    if t.is_cycle:
        return t.positions[:, 0] / TWO_PI
    return t.positions[:, 0].copy()


def spike_field(t: Topology) -> np.ndarray:
    """One at the node nearest the region center, zero elsewhere."""
    x = np.zeros(t.n)
    x[nearest_node(t, 0.0 if t.is_cycle else (0.5, 0.5))] = 1.0
    return x


def diffusion_field(t: Topology, sources: int = 5, iterations: int = 50, seed: int = 0) -> np.ndarray:
    """Unit impulses at random nodes, smoothed by ``x <- x/2 + mean(x[N(s)])/2``.

    Source nodes are drawn without replacement. Isolated nodes keep their value.
    """
    if sources < 1 or iterations < 0:
        raise InvalidParameterError("diffusion needs sources >= 1 and iterations >= 0")
    rng = np.random.default_rng(seed)
    x = np.zeros(t.n)
    x[rng.choice(t.n, size=min(sources, t.n), replace=False)] = 1.0
    if iterations == 0:
        return x
    indptr, indices = t.csr
    deg = t.degrees
    rows = np.repeat(np.arange(t.n), deg)
    safe = np.maximum(deg, 1)
    for _ in range(iterations):
        nb_mean = np.bincount(rows, weights=x[indices], minlength=t.n) / safe
        x = np.where(deg > 0, 0.5 * x + 0.5 * nb_mean, x)
    return x
