"""Asynchronous gossip simulation measured in global clock ticks.

One tick is one activation of a uniformly chosen node, which then completes
one pairwise-averaging round. Costs are counted in one-hop transmissions:
a standard round costs 2, and every geographic query costs twice its route
length (forward packet plus the reply or rejection that retraces it).

``standard_round`` and ``geographic_round`` execute one round in Python and
are the reference semantics. ``simulate`` runs the same rounds through
compiled kernels fed from the same uniform stream, so a trajectory is a pure
function of (topology, x0, policy, seed).
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels
from .errors import (
    DegeneratePolicyError,
    InvalidParameterError,
    InvalidSizeError,
    InvalidTopologyError,
    NotConvergedError,
    ProtocolError,
    UndefinedErrorMetric,
)
from .fields import FieldSpec
from .routing import greedy_route
from .sampling import (
    RejectionPolicy,
    decide_accept,
    policy_always,
    policy_fixed_tau,
    policy_quantile,
)
from .topology import TWO_PI, Topology, build, is_connected, voronoi_areas

QUERY_CAP = 10**6
PROTOCOLS = ("standard", "geographic")
POLICIES = ("always", "fixed", "quantile")
TRAJECTORY_HEADER = ("tick", "error", "transmissions", "rounds", "max_queries")


@dataclass
class GossipState:
    x: np.ndarray
    tick: int = 0
    x_ave: float = 0.0
    x0_norm: float = 0.0

    def error(self) -> float:
        return error(self)


@dataclass
class CostLedger:
    """Cumulative one-hop transmissions and per-round query statistics.

    With ``record=True`` the ledger keeps, per round, the total hops over all
    queries of that round, the number of queries and the accepting partner.
    """

    transmissions: int = 0
    rounds: int = 0
    max_queries: int = 0
    total_hops: int = 0
    total_queries: int = 0
    record: bool = False
    _hops: list = field(default_factory=list, repr=False)
    _queries: list = field(default_factory=list, repr=False)
    _partners: list = field(default_factory=list, repr=False)

    def add(self, hops, queries, partners) -> None:
        hops = np.asarray(hops, dtype=np.int64)
        queries = np.asarray(queries, dtype=np.int64)
        if len(hops) == 0:
            return
        h = int(hops.sum())
        self.total_hops += h
        self.total_queries += int(queries.sum())
        self.transmissions += 2 * h
        self.rounds += len(hops)
        self.max_queries = max(self.max_queries, int(queries.max()))
        if self.record:
            self._hops.append(hops.copy())
            self._queries.append(queries.copy())
            self._partners.append(np.asarray(partners, dtype=np.int64).copy())

    @property
    def per_round(self) -> np.ndarray:
        """``(rounds, 2)`` array of (hops, queries); empty unless recording."""
        if not self._hops:
            return np.zeros((0, 2), dtype=np.int64)
        return np.column_stack([np.concatenate(self._hops), np.concatenate(self._queries)])

    @property
    def partners(self) -> np.ndarray:
        if not self._partners:
            return np.zeros(0, dtype=np.int64)
        return np.concatenate(self._partners)

    @property
    def mean_hops(self) -> float:
        return self.total_hops / self.total_queries if self.total_queries else 0.0

    @property
    def mean_queries(self) -> float:
        return self.total_queries / self.rounds if self.rounds else 0.0


def init_state(t: Topology, x0) -> GossipState:
    x = np.array(x0, dtype=float)
    if x.shape != (t.n,):
        raise InvalidSizeError(f"x0 has shape {x.shape}, topology has {t.n} nodes")
    return GossipState(x=x, tick=0, x_ave=float(x.mean()), x0_norm=float(np.linalg.norm(x)))


def error(s: GossipState) -> float:
    """Normalized deviation ``||x - x_ave 1|| / ||x(0)||``."""
    if s.x0_norm == 0.0:
        raise UndefinedErrorMetric("error is undefined for x(0) = 0")
    return float(np.linalg.norm(s.x - s.x_ave) / s.x0_norm)


def _uniform_index(u: float, n: int) -> int:
    return min(int(u * n), n - 1)


def _average(s: GossipState, a: int, b: int) -> None:
    m = 0.5 * (s.x[a] + s.x[b])
    s.x[a] = m
    s.x[b] = m
    s.tick += 1


def standard_round(s: GossipState, t: Topology, ledger: CostLedger, rng: np.random.Generator) -> int:
    """Average a uniform node with a uniform neighbor; returns the partner."""
    u = _uniform_index(rng.random(), t.n)
    nb = t.neighbors[u]
    if not nb:
        raise ProtocolError(f"node {u} is isolated")
    w = nb[_uniform_index(rng.random(), len(nb))]
    _average(s, u, w)
    ledger.add([1], [1], [w])
    return w


def geographic_round(
    s: GossipState,
    t: Topology,
    p: RejectionPolicy,
    ledger: CostLedger,
    rng: np.random.Generator,
    cap: int = QUERY_CAP,
) -> int:
    """One geographic gossip round; returns the accepting partner.

    Targets whose route ends back at the source are redrawn without cost and
    are not counted as queries.
    """
    u = _uniform_index(rng.random(), t.n)
    queries = redraws = hops = 0
    while True:
        if t.is_cycle:
            target = TWO_PI * rng.random()
        else:
            target = (rng.random(), rng.random())
        route = greedy_route(t, u, target)
        v = route.terminated_at
        if v == u:
            redraws += 1
            if redraws >= cap:
                raise DegeneratePolicyError("every target routed back to the source")
            continue
        queries += 1
        hops += route.hops
        if decide_accept(p, v, rng):
            break
        if queries >= cap:
            raise DegeneratePolicyError(f"no acceptance within {cap} queries")
    _average(s, u, v)
    ledger.add([hops], [queries], [v])
    return v


class _UniformStream:
    """Read-ahead buffer over ``rng.random``; unread values stay queued."""

    def __init__(self, rng: np.random.Generator, block: int = 1 << 16):
        self.rng = rng
        self.block = block
        self.buf = np.empty(0)
        self.pos = 0

    def refill(self) -> None:
        # grow geometrically so a single long rejection streak still fits
        left = len(self.buf) - self.pos
        fresh = self.rng.random(max(self.block, 2 * left))
        self.buf = np.concatenate([self.buf[self.pos :], fresh])
        self.pos = 0


_NO_RECORD = np.zeros(0, dtype=np.int64)
_NO_ACCEPT = np.ones(1)
_CHECKPOINT_BLOCK = 4096
_RECORD_BLOCK = 1 << 16


@dataclass
class Trajectory:
    ticks: list
    errors: list
    transmissions: list
    rounds: list
    max_queries: list
    converged: bool
    state: GossipState
    ledger: CostLedger

    def rows(self):
        return list(zip(self.ticks, self.errors, self.transmissions, self.rounds, self.max_queries))

    def hitting_tick(self, epsilon: float):
        """First checkpoint tick with error below ``epsilon``, or None."""
        for tick, err in zip(self.ticks, self.errors):
            if err < epsilon:
                return tick
        return None

    def to_csv(self) -> str:
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(TRAJECTORY_HEADER)
        for tick, err, tx, rounds, mq in self.rows():
            w.writerow([tick, repr(float(err)), tx, rounds, mq])
        return out.getvalue()


def simulate(
    t: Topology,
    x0,
    *,
    protocol: str = "geographic",
    policy: RejectionPolicy | None = None,
    epsilon: float = 0.01,
    max_ticks: int = 10**7,
    rng: np.random.Generator | int | None = 0,
    checkpoint_stride: int | None = None,
    stop_fraction: float = 1.0,
    record: bool = False,
    cap: int = QUERY_CAP,
) -> Trajectory:
    """Run rounds until ``error < epsilon * stop_fraction`` or ``max_ticks``.

    Error is sampled at tick 0, every ``checkpoint_stride`` ticks (default
    ``n``) and at ``max_ticks``.
    """
    if protocol not in PROTOCOLS:
        raise InvalidParameterError(f"unknown protocol {protocol!r}")
    geographic = protocol == "geographic"
    if geographic and policy is None:
        raise InvalidParameterError("geographic gossip needs a rejection policy")
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    stride = t.n if checkpoint_stride is None else int(checkpoint_stride)
    if stride < 1:
        raise InvalidParameterError("checkpoint stride must be >= 1")
    s = init_state(t, x0)
    ledger = CostLedger(record=record)
    target = epsilon * stop_fraction
    err = error(s)
    traj = Trajectory([0], [err], [0], [0], [0], err < target, s, ledger)
    if traj.converged or max_ticks <= 0:
        return traj

    indptr, indices = t.csr
    accept = policy.accept if geographic else _NO_ACCEPT
    stream = _UniformStream(rng)
    counters = np.zeros(4, dtype=np.int64)
    ck_tick = np.empty(_CHECKPOINT_BLOCK, dtype=np.int64)
    ck_err = np.empty(_CHECKPOINT_BLOCK)
    ck_tx = np.empty(_CHECKPOINT_BLOCK, dtype=np.int64)
    ck_mq = np.empty(_CHECKPOINT_BLOCK, dtype=np.int64)
    while True:
        if record:
            limit = min(max_ticks, s.tick + _RECORD_BLOCK)
            rec = [np.empty(limit - s.tick, dtype=np.int64) for _ in range(3)]
        else:
            limit = max_ticks
            rec = [_NO_RECORD] * 3
        tick0 = s.tick
        status, stream.pos, s.tick, n_ck, converged = _kernels.gossip_run(
            geographic, s.x, s.x_ave, s.x0_norm, target,
            indptr, indices, t.positions, t.is_cycle, accept, cap,
            stream.buf, stream.pos, s.tick, limit, max_ticks, stride,
            counters, ck_tick, ck_err, ck_tx, ck_mq, *rec,
        )
        done = s.tick - tick0
        ledger.transmissions = int(counters[0])
        ledger.total_hops = int(counters[1])
        ledger.total_queries = int(counters[2])
        ledger.max_queries = int(counters[3])
        ledger.rounds += done
        if record and done:
            ledger._hops.append(rec[0][:done].copy())
            ledger._queries.append(rec[1][:done].copy())
            ledger._partners.append(rec[2][:done].copy())
        traj.ticks.extend(ck_tick[:n_ck].tolist())
        traj.errors.extend(ck_err[:n_ck].tolist())
        traj.transmissions.extend(ck_tx[:n_ck].tolist())
        traj.rounds.extend(ck_tick[:n_ck].tolist())
        traj.max_queries.extend(ck_mq[:n_ck].tolist())
        if status == _kernels.EXHAUSTED:
            stream.refill()
        elif status == _kernels.ISOLATED:
            raise ProtocolError("isolated node drawn as gossip source")
        elif status == _kernels.CAP_EXCEEDED:
            raise DegeneratePolicyError(f"no acceptance within {cap} queries")
        elif converged or s.tick >= max_ticks:
            break
    traj.converged = bool(converged)
    return traj


@dataclass(frozen=True)
class SimConfig:
    """One experiment: topology, protocol, policy, field and stopping rule.

    Randomness: the topology uses ``topology_seed`` (rgg only), the
    diffusion field ``field.seed``, and the gossip dynamics ``seed``.
    Trial ``i`` of a multi-trial estimate draws from
    ``SeedSequence(seed, spawn_key=(i,))``.
    """

    kind: str = "rgg"
    n: int = 100
    r: float | None = None
    topology_seed: int = 0
    protocol: str = "geographic"
    policy: str | None = None  # None: quantile on rgg, always otherwise
    c: float = 0.1
    mu: float = 0.1
    nu: float = 0.1
    field: FieldSpec = FieldSpec()
    epsilon: float = 0.01
    max_ticks: int = 10**7
    seed: int = 0
    checkpoint_stride: int | None = None
    stop_fraction: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.epsilon < 1.0:
            raise InvalidParameterError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if self.max_ticks < 0:
            raise InvalidParameterError("max_ticks must be >= 0")
        if self.protocol not in PROTOCOLS:
            raise InvalidParameterError(f"unknown protocol {self.protocol!r}")
        if self.policy is not None and self.policy not in POLICIES:
            raise InvalidParameterError(f"unknown policy {self.policy!r}")

    @property
    def policy_kind(self) -> str:
        if self.policy is not None:
            return self.policy
        return "quantile" if self.kind == "rgg" else "always"

    def build_topology(self) -> Topology:
        t = build(self.kind, self.n, self.r, self.topology_seed)
        if not is_connected(t):
            raise InvalidTopologyError(
                f"{self.kind} topology (n={self.n}, seed={self.topology_seed}) is disconnected"
            )
        return t

    def build_policy(self, t: Topology) -> RejectionPolicy | None:
        if self.protocol == "standard":
            return None
        return make_policy(t, self.policy_kind, c=self.c, mu=self.mu, nu=self.nu)

    def trial_rng(self, trial: int) -> np.random.Generator:
        return np.random.default_rng(np.random.SeedSequence(self.seed, spawn_key=(trial,)))


def make_policy(t: Topology, kind: str, c: float = 0.1, mu: float = 0.1, nu: float = 0.1):
    areas = voronoi_areas(t)
    if kind == "always":
        return policy_always(areas)
    if kind == "fixed":
        return policy_fixed_tau(areas, c)
    if kind == "quantile":
        return policy_quantile(areas, mu, nu)
    raise InvalidParameterError(f"unknown policy {kind!r}")


def run(cfg: SimConfig, topology: Topology | None = None) -> Trajectory:
    """Single trajectory; identical to trial 0 of ``run_trials``."""
    t = cfg.build_topology() if topology is None else topology
    return simulate(
        t,
        cfg.field.generate(t),
        protocol=cfg.protocol,
        policy=cfg.build_policy(t),
        epsilon=cfg.epsilon,
        max_ticks=cfg.max_ticks,
        rng=cfg.trial_rng(0),
        checkpoint_stride=cfg.checkpoint_stride,
        stop_fraction=cfg.stop_fraction,
    )


def _trial(args):
    cfg, t, x0, policy, i = args
    return simulate(
        t,
        x0,
        protocol=cfg.protocol,
        policy=policy,
        epsilon=cfg.epsilon,
        max_ticks=cfg.max_ticks,
        rng=cfg.trial_rng(i),
        checkpoint_stride=cfg.checkpoint_stride,
        stop_fraction=cfg.stop_fraction,
    )


def run_trials(cfg: SimConfig, trials: int, topology: Topology | None = None, jobs: int = 1):
    """Independent trajectories on one topology and x0, ordered by trial index."""
    t = cfg.build_topology() if topology is None else topology
    x0 = cfg.field.generate(t)
    policy = cfg.build_policy(t)
    work = [(cfg, t, x0, policy, i) for i in range(trials)]
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as pool:
            return list(pool.map(_trial, work))
    return [_trial(w) for w in work]


def averaging_time_from(trajectories, epsilon: float) -> int:
    """Smallest checkpoint tick from which the fraction of trials with
    ``error >= epsilon`` stays at or below ``epsilon``.

    A trial that stopped early contributes its final error to later
    checkpoints; pairwise averaging never increases the deviation norm.
    """
    grid = np.unique(np.concatenate([np.asarray(tr.ticks) for tr in trajectories]))
    bad = np.zeros(len(grid))
    for tr in trajectories:
        idx = np.searchsorted(np.asarray(tr.ticks), grid, side="right") - 1
        bad += np.asarray(tr.errors)[idx] >= epsilon
    fractions = (bad / len(trajectories)).tolist()
    grid = grid.tolist()
    answer = None
    for tick, frac in zip(reversed(grid), reversed(fractions)):
        if frac > epsilon:
            break
        answer = tick
    if answer is None:
        raise NotConvergedError(
            f"averaging condition not met within {grid[-1]} ticks", fractions[-1]
        )
    return int(answer)


def estimate_averaging_time(cfg: SimConfig, trials: int, topology: Topology | None = None, jobs: int = 1) -> int:
    """Empirical epsilon-averaging time over ``trials`` runs with fixed x(0)."""
    if trials < 20:
        raise InvalidParameterError(f"need at least 20 trials, got {trials}")
    cfg = replace(cfg, stop_fraction=min(cfg.stop_fraction, 1.0))
    return averaging_time_from(run_trials(cfg, trials, topology, jobs), cfg.epsilon)


def max_queries_bound(K: int, epsilon: float, total_acceptance: float) -> int:
    """``ceil((ln K + ln(2/eps)) / -ln(1 - P_a))``: max queries over K rounds
    holds below this with probability at least ``1 - eps/2``."""
    if total_acceptance >= 1.0:
        return 1
    return math.ceil((math.log(K) + math.log(2.0 / epsilon)) / -math.log1p(-total_acceptance))
