"""Scaling sweeps: many trials per network size, summarized per protocol.

On rgg every trial gets its own topology, redrawn until connected; cycle and
grid trials share the single deterministic topology of each size.
"""

from __future__ import annotations

import csv
import io
import logging
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .engine import SimConfig, Trajectory, averaging_time_from, simulate
from .errors import InvalidParameterError, InvalidTopologyError, NotConvergedError
from .topology import Topology, build, build_rgg, default_radius, is_connected

log = logging.getLogger(__name__)

SWEEP_HEADER = (
    "n", "protocol", "trials", "mean_transmissions", "mean_rounds",
    "mean_hops", "mean_queries", "t_ave",
)
MAX_RESAMPLES = 1000


def rgg_trial_seed(base: int, n: int, trial: int, attempt: int) -> int:
    """Topology seed for one rgg draw, from ``SeedSequence(base, spawn_key=(n, trial, attempt))``."""
    ss = np.random.SeedSequence(base, spawn_key=(n, trial, attempt))
    return int(ss.generate_state(1, dtype=np.uint32)[0])


def connected_rgg(n: int, r: float | None, base: int, trial: int) -> Topology:
    r = default_radius(n) if r is None else r
    for attempt in range(MAX_RESAMPLES):
        t = build_rgg(n, r, rgg_trial_seed(base, n, trial, attempt))
        if is_connected(t):
            return t
    raise InvalidTopologyError(f"no connected rgg(n={n}, r={r}) in {MAX_RESAMPLES} draws")


@dataclass(frozen=True)
class SweepRow:
    n: int
    protocol: str
    trials: int
    mean_transmissions: float
    mean_rounds: float
    mean_hops: float
    mean_queries: float
    t_ave: int | None


@dataclass
class SweepResult:
    rows: list
    slopes: dict  # protocol -> (transmissions slope, rounds slope)

    def row(self, n: int, protocol: str) -> SweepRow:
        for r in self.rows:
            if r.n == n and r.protocol == protocol:
                return r
        raise KeyError((n, protocol))

    def to_csv(self) -> str:
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(SWEEP_HEADER)
        for r in self.rows:
            w.writerow([
                r.n, r.protocol, r.trials, repr(r.mean_transmissions), repr(r.mean_rounds),
                repr(r.mean_hops), repr(r.mean_queries), "" if r.t_ave is None else r.t_ave,
            ])
        # footer: fitted log-log slopes in the transmissions and rounds columns
        for proto, (s_tx, s_rounds) in self.slopes.items():
            w.writerow(["slope", proto, "", repr(s_tx), repr(s_rounds), "", "", ""])
        return out.getvalue()


def _one(args) -> Trajectory:
    cfg, n, proto, i = args
    c = replace(cfg, n=n, protocol=proto)
    if c.kind == "rgg":
        t = connected_rgg(n, c.r, c.topology_seed, i)
    else:
        t = build(c.kind, n, c.r, c.topology_seed)
        if not is_connected(t):
            raise InvalidTopologyError(f"{c.kind} topology with n={n} is disconnected")
    return simulate(
        t,
        c.field.generate(t),
        protocol=proto,
        policy=c.build_policy(t),
        epsilon=c.epsilon,
        max_ticks=c.max_ticks,
        rng=c.trial_rng(i),
        checkpoint_stride=c.checkpoint_stride,
        stop_fraction=c.stop_fraction,
    )


def summarize(n: int, protocol: str, trajs: list, epsilon: float) -> SweepRow:
    missed = [i for i, tr in enumerate(trajs) if not tr.converged]
    if missed:
        raise NotConvergedError(
            f"{len(missed)} of {len(trajs)} trials (n={n}, {protocol}) did not reach epsilon",
            len(missed) / len(trajs),
        )
    tx = [tr.transmissions[-1] for tr in trajs]
    rounds = [tr.ticks[-1] for tr in trajs]
    hops = [tr.ledger.mean_hops for tr in trajs]
    queries = [tr.ledger.mean_queries for tr in trajs]
    try:
        t_ave = averaging_time_from(trajs, epsilon)
    except NotConvergedError:
        t_ave = None
    return SweepRow(
        n, protocol, len(trajs), float(np.mean(tx)), float(np.mean(rounds)),
        float(np.mean(hops)), float(np.mean(queries)), t_ave,
    )


def loglog_slope(ns, values) -> float:
    return float(np.polyfit(np.log(np.asarray(ns, float)), np.log(np.asarray(values, float)), 1)[0])


def sweep(cfg: SimConfig, ns, protocols, trials: int, jobs: int = 1) -> SweepResult:
    """Mean cost to reach ``cfg.epsilon`` for every (n, protocol).

    Trial ``i`` uses the dynamics stream ``cfg.trial_rng(i)`` for every n and
    protocol, so results do not depend on ``jobs``.
    """
    ns = [int(n) for n in ns]
    if trials < 1 or not ns or not protocols:
        raise InvalidParameterError("sweep needs at least one n, one protocol and one trial")
    work = [(cfg, n, p, i) for n in ns for p in protocols for i in range(trials)]
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as pool:
            trajs = list(pool.map(_one, work, chunksize=max(1, trials // jobs)))
    else:
        trajs = [_one(w) for w in work]
    rows = []
    k = 0
    for n in ns:
        for p in protocols:
            rows.append(summarize(n, p, trajs[k : k + trials], cfg.epsilon))
            log.info("n=%d %s: %.1f transmissions", n, p, rows[-1].mean_transmissions)
            k += trials
    slopes = {}
    if len(ns) < 3:
        warnings.warn(f"slope needs at least 3 sizes, got {len(ns)}; omitted", stacklevel=2)
    else:
        for p in protocols:
            mine = [r for r in rows if r.protocol == p]
            slopes[p] = (
                loglog_slope(ns, [r.mean_transmissions for r in mine]),
                loglog_slope(ns, [r.mean_rounds for r in mine]),
            )
    return SweepResult(rows, slopes)
