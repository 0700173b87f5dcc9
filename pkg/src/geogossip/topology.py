"""Graph ensembles with geometry: cycle, grid and random geometric graph.

Planar topologies live in the unit square and store ``(u, v)`` per node.
The cycle lives on the unit circle and stores the node angle in column 0 of
``positions`` (column 1 is zero), which is also how it is serialized.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree

from .errors import (
    DegenerateGeometryError,
    InvalidRadiusError,
    InvalidSizeError,
    InvalidTopologyError,
)

TWO_PI = 2.0 * math.pi
KINDS = ("cycle", "grid", "rgg")


@dataclass(frozen=True, eq=False)
class Topology:
    """Immutable graph with node positions.

    Attributes:
        kind: one of ``cycle``, ``grid``, ``rgg``.
        positions: ``(n, 2)`` float array (angle in column 0 for the cycle).
        neighbors: per-node sorted neighbor tuples.
        radius: connection radius, rgg only.
        seed: generator seed, rgg only.
    """

    kind: str
    positions: np.ndarray
    neighbors: tuple
    radius: float | None = None
    seed: int | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidTopologyError(f"unknown topology kind {self.kind!r}")
        pos = np.array(self.positions, dtype=float).reshape(-1, 2)
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)
        if len(self.neighbors) != len(pos):
            raise InvalidTopologyError("neighbors and positions differ in length")

    @property
    def n(self) -> int:
        return len(self.positions)

    @property
    def is_cycle(self) -> bool:
        return self.kind == "cycle"

    def degree(self, node: int) -> int:
        return len(self.neighbors[node])

    @cached_property
    def degrees(self) -> np.ndarray:
        return np.array([len(nb) for nb in self.neighbors], dtype=np.int64)

    @cached_property
    def num_edges(self) -> int:
        return int(self.degrees.sum()) // 2

    @cached_property
    def csr(self) -> tuple[np.ndarray, np.ndarray]:
        """Adjacency as ``(indptr, indices)`` arrays for the compiled kernels."""
        indptr = np.zeros(self.n + 1, dtype=np.int64)
        np.cumsum(self.degrees, out=indptr[1:])
        indices = np.fromiter(
            (t for nb in self.neighbors for t in nb), dtype=np.int64, count=int(indptr[-1])
        )
        return indptr, indices

    def distance(self, node: int, point) -> float:
        """Distance from ``node`` to ``point`` (arc length on the cycle)."""
        if self.is_cycle:
            return angular_distance(self.positions[node, 0], _as_angle(point))
        p = _as_point(point)
        return math.hypot(self.positions[node, 0] - p[0], self.positions[node, 1] - p[1])

    def to_text(self) -> str:
        r = "-" if self.radius is None else repr(float(self.radius))
        seed = "-" if self.seed is None else str(self.seed)
        lines = [f"{self.n} {self.kind} {r} {seed}"]
        for i, (u, v) in enumerate(self.positions):
            nb = " ".join(str(t) for t in self.neighbors[i])
            lines.append(f"{i} {float(u)!r} {float(v)!r} {len(self.neighbors[i])} {nb}".rstrip())
        return "\n".join(lines) + "\n"

    def save(self, path) -> None:
        Path(path).write_text(self.to_text())


def load_topology(path) -> Topology:
    """Inverse of :meth:`Topology.save`."""
    lines = Path(path).read_text().splitlines()
    n_str, kind, r_str, seed_str = lines[0].split()
    n = int(n_str)
    positions = np.zeros((n, 2))
    neighbors = [()] * n
    for line in lines[1 : n + 1]:
        fields = line.split()
        i = int(fields[0])
        positions[i] = float(fields[1]), float(fields[2])
        deg = int(fields[3])
        neighbors[i] = tuple(int(t) for t in fields[4 : 4 + deg])
    return Topology(
        kind=kind,
        positions=positions,
        neighbors=tuple(neighbors),
        radius=None if r_str == "-" else float(r_str),
        seed=None if seed_str == "-" else int(seed_str),
    )


def angular_distance(a: float, b: float) -> float:
    d = abs(a - b) % TWO_PI
    return min(d, TWO_PI - d)


def _as_angle(point) -> float:
    if np.ndim(point) == 0:
        return float(point) % TWO_PI
    return float(point[0]) % TWO_PI


def _as_point(point) -> tuple[float, float]:
    return float(point[0]), float(point[1])


def build_cycle(n: int) -> Topology:
    """``n`` nodes equispaced on the unit circle, node ``i`` at angle 2*pi*i/n."""
    if n < 3:
        raise InvalidSizeError(f"cycle needs n >= 3, got {n}")
    angles = np.array([TWO_PI * i / n for i in range(n)])
    positions = np.column_stack([angles, np.zeros(n)])
    neighbors = tuple(tuple(sorted({(i - 1) % n, (i + 1) % n})) for i in range(n))
    return Topology("cycle", positions, neighbors)


def build_grid(n: int) -> Topology:
    """m-by-m grid (n = m**2) with nodes at cell centers and 4-neighbor links.

    Node ``(i, j)`` has id ``i*m + j`` and position ``((i+.5)/m, (j+.5)/m)``.
    """
    m = math.isqrt(n) if n >= 0 else 0
    if m < 2 or m * m != n:
        raise InvalidSizeError(f"grid needs n = m**2 with m >= 2, got {n}")
    positions = np.array([((i + 0.5) / m, (j + 0.5) / m) for i in range(m) for j in range(m)])
    neighbors = []
    for i in range(m):
        for j in range(m):
            nb = []
            if i > 0:
                nb.append((i - 1) * m + j)
            if j > 0:
                nb.append(i * m + j - 1)
            if j < m - 1:
                nb.append(i * m + j + 1)
            if i < m - 1:
                nb.append((i + 1) * m + j)
            neighbors.append(tuple(sorted(nb)))
    return Topology("grid", positions, tuple(neighbors))


def rgg_from_positions(positions, r: float, seed: int | None = None) -> Topology:
    """Random-geometric-graph adjacency (distance strictly below ``r``) on given points."""
    if not (r > 0 and r <= math.sqrt(2)):
        raise InvalidRadiusError(f"radius must lie in (0, sqrt(2)], got {r}")
    pos = np.asarray(positions, dtype=float).reshape(-1, 2)
    n = len(pos)
    adj = [[] for _ in range(n)]
    if n > 1:
        pairs = cKDTree(pos).query_pairs(r, output_type="ndarray")
        if len(pairs):
            d = np.hypot(*(pos[pairs[:, 0]] - pos[pairs[:, 1]]).T)
            for s, t in pairs[d < r]:
                adj[s].append(int(t))
                adj[t].append(int(s))
    neighbors = tuple(tuple(sorted(nb)) for nb in adj)
    return Topology("rgg", pos, neighbors, radius=float(r), seed=seed)


def build_rgg(n: int, r: float, seed: int) -> Topology:
    """``n`` uniform points in the unit square, linked when closer than ``r``."""
    if n < 1:
        raise InvalidSizeError(f"rgg needs n >= 1, got {n}")
    if not (r > 0 and r <= math.sqrt(2)):
        raise InvalidRadiusError(f"radius must lie in (0, sqrt(2)], got {r}")
    rng = np.random.default_rng(seed)
    return rgg_from_positions(rng.random((n, 2)), r, seed=seed)


def default_radius(n: int) -> float:
    """Connectivity radius sqrt(10 ln n / n), capped at sqrt(2)."""
    if n < 2:
        raise InvalidSizeError(f"default radius needs n >= 2, got {n}")
    return min(math.sqrt(10.0 * math.log(n) / n), math.sqrt(2.0))


def build(kind: str, n: int, r: float | None = None, seed: int = 0) -> Topology:
    if kind == "cycle":
        return build_cycle(n)
    if kind == "grid":
        return build_grid(n)
    if kind == "rgg":
        return build_rgg(n, default_radius(n) if r is None else r, seed)
    raise InvalidTopologyError(f"unknown topology kind {kind!r}")


def is_connected(t: Topology) -> bool:
    if t.n == 0:
        return True
    seen = {0}
    queue = deque([0])
    while queue:
        s = queue.popleft()
        for nb in t.neighbors[s]:
            if nb not in seen:
                seen.add(nb)
                queue.append(nb)
    return len(seen) == t.n


def nearest_node(t: Topology, p) -> int:
    """Closest node to ``p``; ties go to the lowest node id."""
    if t.is_cycle:
        theta = _as_angle(p)
        d = np.abs(t.positions[:, 0] - theta) % TWO_PI
        d = np.minimum(d, TWO_PI - d)
    else:
        u, v = _as_point(p)
        d = (t.positions[:, 0] - u) ** 2 + (t.positions[:, 1] - v) ** 2
    return int(np.argmin(d))


@dataclass(frozen=True)
class VoronoiTessellation:
    """Voronoi cell measures, normalized so they sum to one."""

    areas: np.ndarray

    def __post_init__(self):
        a = np.array(self.areas, dtype=float)
        a.setflags(write=False)
        object.__setattr__(self, "areas", a)

    def __len__(self):
        return len(self.areas)


_UNIT_SQUARE = ((0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0))


def _clip(poly, sx, sy, tx, ty):
    """Keep the part of convex ``poly`` at least as close to s as to t."""
    nx, ny = tx - sx, ty - sy
    mx, my = 0.5 * (sx + tx), 0.5 * (sy + ty)
    vals = [(px - mx) * nx + (py - my) * ny for px, py in poly]
    if max(vals) <= 0.0:
        return poly
    out = []
    k = len(poly)
    for i in range(k):
        p, q = poly[i], poly[(i + 1) % k]
        fp, fq = vals[i], vals[(i + 1) % k]
        if fp <= 0.0:
            out.append(p)
        if (fp < 0.0 < fq) or (fq < 0.0 < fp):
            a = fp / (fp - fq)
            out.append((p[0] + a * (q[0] - p[0]), p[1] + a * (q[1] - p[1])))
    return out


def _shoelace(poly) -> float:
    k = len(poly)
    acc = 0.0
    for i in range(k):
        x0, y0 = poly[i]
        x1, y1 = poly[(i + 1) % k]
        acc += x0 * y1 - x1 * y0
    return 0.5 * abs(acc)


def _planar_cell(pos, s, order, dists):
    sx, sy = pos[s]
    poly = list(_UNIT_SQUARE)
    reach = max(math.hypot(px - sx, py - sy) for px, py in poly)
    for t, d in zip(order, dists):
        if d > 2.0 * reach:
            break
        poly = _clip(poly, sx, sy, pos[t][0], pos[t][1])
        if len(poly) < 3:
            return poly
        reach = max(math.hypot(px - sx, py - sy) for px, py in poly)
    return poly


def voronoi_cell(t: Topology, s: int) -> list[tuple[float, float]]:
    """Vertices of node ``s``'s Voronoi cell clipped to the unit square."""
    if t.is_cycle:
        raise InvalidTopologyError("planar cells are undefined on the cycle")
    pos = t.positions
    d = np.hypot(pos[:, 0] - pos[s, 0], pos[:, 1] - pos[s, 1])
    order = np.argsort(d, kind="stable")
    order = order[order != s]
    return _planar_cell(pos.tolist(), s, order.tolist(), d[order].tolist())


def voronoi_areas(t: Topology) -> VoronoiTessellation:
    """Exact Voronoi cell areas (arc lengths on the cycle), summing to one.

    Planar cells are built by clipping the unit square with one bisector
    half-plane per other node, visiting nodes by increasing distance and
    stopping once a node is farther than twice the current cell radius.
    """
    n = t.n
    if n == 0:
        raise InvalidSizeError("empty topology")
    if n == 1:
        return VoronoiTessellation(np.ones(1))
    if t.is_cycle:
        theta = np.mod(t.positions[:, 0], TWO_PI)
        order = np.argsort(theta, kind="stable")
        st = theta[order]
        gaps = np.diff(np.append(st, st[0] + TWO_PI))
        if np.any(gaps <= 0.0):
            raise DegenerateGeometryError("duplicate node angles")
        areas = np.empty(n)
        areas[order] = 0.5 * (gaps + np.roll(gaps, 1)) / TWO_PI
        return VoronoiTessellation(areas)

    pos = t.positions
    tree = cKDTree(pos)
    if tree.query_pairs(0.0):
        raise DegenerateGeometryError("duplicate node positions")
    plist = pos.tolist()
    areas = np.empty(n)
    k = min(n, 32)
    for s in range(n):
        # grow the candidate set until it provably covers the cell
        while True:
            d, idx = tree.query(pos[s], k=k)
            poly = _planar_cell(plist, s, idx[1:].tolist(), d[1:].tolist())
            if k == n or len(poly) < 3:
                break
            reach = max(math.hypot(px - plist[s][0], py - plist[s][1]) for px, py in poly)
            if d[-1] > 2.0 * reach:
                break
            k = min(n, 2 * k)
        areas[s] = _shoelace(poly) if len(poly) >= 3 else 0.0
    if np.any(areas <= 0.0):
        raise DegenerateGeometryError("empty Voronoi cell")
    return VoronoiTessellation(areas)
