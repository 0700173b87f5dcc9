"""Averaging-matrix spectra and predicted averaging times.

For a selection matrix ``P`` (``P[i, j]`` = probability that node i gossips
with node j) the expected one-round update is

    W = I + (P + P.T - diag(D)) / (2n),   D_i = sum_j (P_ij + P_ji),

and the second-largest eigenvalue of ``W`` sets the averaging time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidMatrixError, InvalidSizeError, InvalidTopologyError, NoSpectralGapError
from .sampling import InducedDistribution
from .topology import Topology


@dataclass(frozen=True, eq=False)
class AveragingMatrix:
    W: np.ndarray
    D: np.ndarray

    @property
    def n(self) -> int:
        return self.W.shape[0]


def selection_standard(t: Topology) -> np.ndarray:
    """Uniform choice among graph neighbors."""
    deg = t.degrees
    if np.any(deg == 0):
        raise InvalidTopologyError("isolated node has no gossip partner")
    P = np.zeros((t.n, t.n))
    for i, nb in enumerate(t.neighbors):
        P[i, list(nb)] = 1.0 / len(nb)
    return P


def selection_geographic(q) -> np.ndarray:
    """Every row equals the induced partner distribution ``q``."""
    q = q.q if isinstance(q, InducedDistribution) else np.asarray(q, dtype=float)
    return np.outer(np.ones(len(q)), q)


def build_W(P) -> AveragingMatrix:
    P = np.asarray(P, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise InvalidMatrixError("selection matrix must be square")
    if np.any(P < 0) or not np.allclose(P.sum(axis=1), 1.0, rtol=0.0, atol=1e-12):
        raise InvalidMatrixError("selection matrix must be row-stochastic")
    n = P.shape[0]
    D = P.sum(axis=1) + P.sum(axis=0)
    W = np.eye(n) + (P + P.T - np.diag(D)) / (2.0 * n)
    if not (
        np.allclose(W, W.T, rtol=0.0, atol=1e-12)
        and np.allclose(W.sum(axis=1), 1.0, rtol=0.0, atol=1e-10)
        and np.allclose(W.sum(axis=0), 1.0, rtol=0.0, atol=1e-10)
    ):
        raise InvalidMatrixError("W is not symmetric doubly stochastic")
    return AveragingMatrix(W, D)


def lambda2(W) -> float:
    """Second-largest eigenvalue of a symmetric matrix (dense eigensolve)."""
    W = W.W if isinstance(W, AveragingMatrix) else np.asarray(W, dtype=float)
    if not np.allclose(W, W.T, rtol=0.0, atol=1e-10):
        raise InvalidMatrixError("lambda2 needs a symmetric matrix")
    if W.shape[0] < 2:
        raise InvalidSizeError("lambda2 needs at least a 2x2 matrix")
    return float(np.linalg.eigvalsh(W)[-2])


def walk_lambda2(P) -> float:
    """Second-largest eigenvalue of a (possibly asymmetric) random-walk matrix."""
    ev = np.sort(np.linalg.eigvals(np.asarray(P, dtype=float)).real)
    return float(ev[-2])


def closed_form_cycle_lambda2(n: int) -> float:
    """``(1 - 1/n) + cos(2*pi/n)/n`` for standard gossip on the n-cycle."""
    if n < 3:
        raise InvalidSizeError(f"cycle needs n >= 3, got {n}")
    return (1.0 - 1.0 / n) + math.cos(2.0 * math.pi / n) / n


def closed_form_complete_lambda2(n: int) -> float:
    """``1 - 1/n + 1/n**2``, the value quoted for uniform complete-graph gossip.

    An eigensolve of ``(1 - 1/n) I + 11^T / n**2`` gives ``1 - 1/n`` instead;
    this function keeps the quoted formula.
    """
    if n < 2:
        raise InvalidSizeError(f"complete overlay needs n >= 2, got {n}")
    return 1.0 - 1.0 / n + 1.0 / n**2


def predicted_rounds(lambda2: float, epsilon: float) -> float:
    """``ln(1/epsilon) / ln(1/lambda2)``, the averaging time without constants."""
    if not lambda2 < 1.0:
        raise NoSpectralGapError(f"lambda2 = {lambda2} leaves no spectral gap")
    if not (0.0 < lambda2 and 0.0 < epsilon <= 1.0):
        raise InvalidMatrixError("need 0 < lambda2 < 1 and 0 < epsilon <= 1")
    return math.log(1.0 / epsilon) / math.log(1.0 / lambda2)


def theorem1_gap_certificate(q) -> float:
    """Upper bound on lambda2 of the geographic overlay built from ``q``.

    Splits ``W - 11^T/n**2`` into a diagonal part (top eigenvalue at most
    ``1 - 1/(2n)``) and a symmetric rank-two part whose top eigenvalue is at
    most ``||q - 1/n||_2 * sqrt(n) / n`` by Cauchy-Schwarz; Weyl's inequality
    adds the two.
    """
    q = q.q if isinstance(q, InducedDistribution) else np.asarray(q, dtype=float)
    n = len(q)
    dev = float(np.linalg.norm(q - 1.0 / n))
    return (1.0 - 1.0 / (2.0 * n)) + dev * math.sqrt(n) / n
