"""Greedy geographic routing toward a target location."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InvalidRadiusError
from .topology import TWO_PI, Topology


@dataclass(frozen=True)
class Route:
    path: tuple[int, ...]

    @property
    def hops(self) -> int:
        return len(self.path) - 1

    @property
    def terminated_at(self) -> int:
        return self.path[-1]


def _distance_fn(t: Topology, target):
    # Squared Euclidean for planar graphs (monotone in distance), arc length on
    # the cycle. Must stay bit-identical to the compiled kernel in _kernels.py.
    pos = t.positions
    if t.is_cycle:
        theta = float(target if not hasattr(target, "__len__") else target[0]) % TWO_PI

        def dist(s):
            d = abs(pos[s, 0] - theta)
            return min(d, TWO_PI - d)

    else:
        tx, ty = float(target[0]), float(target[1])

        def dist(s):
            dx = pos[s, 0] - tx
            dy = pos[s, 1] - ty
            return dx * dx + dy * dy

    return dist


def greedy_route(t: Topology, source: int, target) -> Route:
    """Forward to the neighbor closest to ``target`` until none is strictly closer.

    Equidistant neighbors resolve to the lowest node id. The node where the
    packet stops is returned even when it is not the globally nearest node.
    """
    dist = _distance_fn(t, target)
    path = [source]
    cur = source
    cur_d = dist(cur)
    while True:
        best, best_d = -1, cur_d
        for nb in t.neighbors[cur]:
            d = dist(nb)
            if d < best_d:
                best, best_d = nb, d
        if best < 0:
            return Route(tuple(path))
        path.append(best)
        cur, cur_d = best, best_d


def hop_bound(n: int, r: float) -> int:
    """Diagnostic route-length ceiling ``ceil(2/r) + 1`` for connected rgg instances."""
    if not r > 0:
        raise InvalidRadiusError(f"radius must be positive, got {r}")
    return math.ceil(2.0 / r) + 1
