"""Command-line harness: generate | run | sweep | spectral.

Every subcommand writes deterministic CSV (or the topology text format) and
exits 0 on success, 2 on bad usage or invalid parameters, 3 when epsilon was
not reached, and 4 on any other failure.

Seeding: ``--seed S`` is the rgg position seed, trial ``i`` of the gossip
dynamics draws from ``SeedSequence(S, spawn_key=(i,))`` and diffusion sources
from ``SeedSequence([S, 1])``. A single ``run`` is trial 0.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import sys
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .engine import POLICIES, PROTOCOLS, SimConfig, make_policy, run
from .errors import GossipError, NotConvergedError
from .fields import FIELD_KINDS, FieldSpec
from .harness import sweep
from .sampling import induced_distribution
from .spectral import build_W, lambda2, predicted_rounds, selection_geographic, selection_standard
from .topology import KINDS, Topology, build, is_connected, load_topology, voronoi_areas

EXIT_OK, EXIT_USAGE, EXIT_NOT_CONVERGED, EXIT_INTERNAL = 0, 2, 3, 4
SPECTRAL_HEADER = ("n", "topology", "protocol", "lambda2", "gap", "predicted_rounds")
FIELD_HEADER = ("node", "value")

DEFAULTS = dict(
    kind="rgg", n=100, r=None, seed=0, protocol="geographic", policy=None,
    c=0.1, mu=0.1, nu=0.1, field="spike", sources=5, iterations=50, value=1.0,
    epsilon=0.01, max_ticks=10**7, trials=20, out=None, stride=None, jobs=1,
    topology=None, field_out=None, ns=None, protocols=",".join(PROTOCOLS),
)

log = logging.getLogger("geogossip")


class UsageError(Exception):
    pass


# ---------------------------------------------------------------- manifest


@dataclass
class ExperimentManifest:
    """Line-oriented ``key=value`` experiment description.

    Blocks are separated by blank lines. The first block holds defaults
    shared by every config; each later block is one config on top of them.
    A manifest with a single block describes one config.
    """

    configs: list = field(default_factory=list)  # list of dicts of raw strings
    seed: int = 0
    trials: int = DEFAULTS["trials"]

    @classmethod
    def parse(cls, text: str) -> "ExperimentManifest":
        blocks, cur = [], {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                if cur:
                    blocks.append(cur)
                    cur = {}
                continue
            if "=" not in line:
                raise UsageError(f"manifest line {lineno}: expected key=value")
            k, v = (s.strip() for s in line.split("=", 1))
            cur[k.replace("-", "_")] = v
        if cur:
            blocks.append(cur)
        if not blocks:
            raise UsageError("manifest is empty")
        base, rest = blocks[0], blocks[1:]
        configs = [{**base, **b} for b in rest] or [dict(base)]
        outs = [c["out"] for c in configs if "out" in c]
        if len(set(outs)) != len(outs):
            raise UsageError("manifest output paths must be distinct")
        return cls(configs, int(base.get("seed", 0)), int(base.get("trials", DEFAULTS["trials"])))

    @classmethod
    def load(cls, path) -> "ExperimentManifest":
        return cls.parse(Path(path).read_text())


# ----------------------------------------------------------------- parsing


def _csv_ints(s: str) -> list:
    try:
        return [int(v) for v in s.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {s!r}")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--manifest", help="key=value file supplying defaults")
    p.add_argument("--kind", choices=KINDS)
    p.add_argument("--n", type=int)
    p.add_argument("--r", type=float, help="rgg radius (default sqrt(10 ln n / n))")
    p.add_argument("--seed", type=int)
    p.add_argument("--topology", help="load this topology file instead of building one")
    p.add_argument("--protocol", choices=PROTOCOLS)
    p.add_argument("--policy", choices=POLICIES)
    p.add_argument("--c", type=float)
    p.add_argument("--mu", type=float)
    p.add_argument("--nu", type=float)
    p.add_argument("--field", choices=FIELD_KINDS)
    p.add_argument("--sources", type=int, help="diffusion field source count")
    p.add_argument("--iterations", type=int, help="diffusion field smoothing steps")
    p.add_argument("--value", type=float, help="constant field value")
    p.add_argument("--epsilon", type=float)
    p.add_argument("--max-ticks", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--stride", type=int, help="checkpoint every STRIDE ticks (default n)")
    p.add_argument("--jobs", type=int)
    p.add_argument("--out")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="geogossip", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    parser.subcommands = {}
    for name, helptext in (
        ("generate", "build a topology and write it to --out"),
        ("run", "simulate one trajectory and write its CSV"),
        ("sweep", "mean cost to epsilon across network sizes"),
        ("spectral", "lambda2 and predicted rounds for both protocols"),
    ):
        p = sub.add_parser(name, help=helptext, argument_default=argparse.SUPPRESS)
        parser.subcommands[name] = p
        _add_common(p)
        if name == "generate":
            p.add_argument("--field-out", help="also write the initial field as node,value CSV")
        if name == "sweep":
            p.add_argument("--ns", type=_csv_ints, help="comma-separated sizes, e.g. 100,200,400")
            p.add_argument("--protocols", help="comma-separated protocols")
    return parser


def _manifest_settings(sub: argparse.ArgumentParser, raw: dict) -> dict:
    argv = []
    for k, v in raw.items():
        argv += [f"--{k.replace('_', '-')}", v]
    ns, unknown = sub.parse_known_args(argv)
    if unknown:
        warnings.warn(f"ignoring manifest keys not used here: {unknown[::2]}", stacklevel=2)
    return vars(ns)


def resolve(sub: argparse.ArgumentParser, given: dict) -> list:
    """Settings per config: built-in defaults < manifest < explicit flags."""
    blocks = [{}]
    if given.get("manifest"):
        blocks = [_manifest_settings(sub, b) for b in ExperimentManifest.load(given["manifest"]).configs]
    return [{**DEFAULTS, **b, **given} for b in blocks]


# ---------------------------------------------------------------- builders


def _field_seed(seed: int) -> int:
    return int(np.random.SeedSequence([seed, 1]).generate_state(1, dtype=np.uint32)[0])


def to_config(s: dict) -> SimConfig:
    if s["n"] is None or s["n"] < 1:
        raise UsageError("--n must be a positive integer")
    return SimConfig(
        kind=s["kind"], n=s["n"], r=s["r"], topology_seed=s["seed"],
        protocol=s["protocol"], policy=s["policy"], c=s["c"], mu=s["mu"], nu=s["nu"],
        field=FieldSpec(s["field"], s["sources"], s["iterations"], _field_seed(s["seed"]), s["value"]),
        epsilon=s["epsilon"], max_ticks=s["max_ticks"], seed=s["seed"],
        checkpoint_stride=s["stride"],
    )


def _topology(s: dict, cfg: SimConfig) -> Topology:
    if s["topology"]:
        return load_topology(s["topology"])
    return cfg.build_topology()


def _emit(text: str, out) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def field_csv(x) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(FIELD_HEADER)
    for i, v in enumerate(x):
        w.writerow([i, repr(float(v))])
    return buf.getvalue()


# ---------------------------------------------------------------- commands


def cmd_generate(settings: list) -> int:
    for s in settings:
        if s["n"] is None:
            raise UsageError("--n is required")
        t = build(s["kind"], s["n"], s["r"], s["seed"])
        if s["out"] is None:
            raise UsageError("generate needs --out")
        t.save(s["out"])
        if s["field_out"]:
            spec = FieldSpec(s["field"], s["sources"], s["iterations"], _field_seed(s["seed"]), s["value"])
            Path(s["field_out"]).write_text(field_csv(spec.generate(t)))
        print(f"{t.n} {t.num_edges} {'true' if is_connected(t) else 'false'}")
    return EXIT_OK


def cmd_run(settings: list) -> int:
    code = EXIT_OK
    for s in settings:
        cfg = to_config(s)
        t = _topology(s, cfg)
        traj = run(cfg, t)
        _emit(traj.to_csv(), s["out"])
        if not traj.converged:
            log.warning("epsilon=%g not reached within %d ticks", cfg.epsilon, cfg.max_ticks)
            code = EXIT_NOT_CONVERGED
    return code


def cmd_sweep(settings: list) -> int:
    for s in settings:
        if not s["ns"]:
            raise UsageError("sweep needs --ns")
        protocols = [p.strip() for p in s["protocols"].split(",") if p.strip()]
        bad = [p for p in protocols if p not in PROTOCOLS]
        if bad:
            raise UsageError(f"unknown protocols {bad}")
        cfg = to_config({**s, "n": s["ns"][0]})
        result = sweep(cfg, s["ns"], protocols, s["trials"], jobs=s["jobs"])
        _emit(result.to_csv(), s["out"])
    return EXIT_OK


def spectral_rows(t: Topology, policy_kind: str, c: float, mu: float, nu: float, epsilon: float) -> list:
    """(protocol, lambda2, gap, predicted_rounds) for both overlays, eigensolved."""
    rows = []
    areas = voronoi_areas(t)
    q = induced_distribution(make_policy(t, policy_kind, c=c, mu=mu, nu=nu), areas)
    for proto, P in (("standard", selection_standard(t)), ("geographic", selection_geographic(q))):
        lam = lambda2(build_W(P))
        rows.append((proto, lam, 1.0 - lam, predicted_rounds(lam, epsilon)))
    return rows


def cmd_spectral(settings: list) -> int:
    for s in settings:
        cfg = to_config(s)
        t = _topology(s, cfg)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(SPECTRAL_HEADER)
        for proto, lam, gap, rounds in spectral_rows(t, cfg.policy_kind, cfg.c, cfg.mu, cfg.nu, cfg.epsilon):
            w.writerow([t.n, t.kind, proto, repr(lam), repr(gap), repr(rounds)])
        _emit(buf.getvalue(), s["out"])
    return EXIT_OK


COMMANDS = {"generate": cmd_generate, "run": cmd_run, "sweep": cmd_sweep, "spectral": cmd_spectral}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_USAGE
    given = vars(args)
    command = given.pop("command")
    logging.basicConfig(level=logging.INFO if given.pop("verbose") else logging.WARNING,
                        format="%(levelname)s %(message)s")
    sub = parser.subcommands[command]
    try:
        return COMMANDS[command](resolve(sub, given))
    except UsageError as e:
        print(f"geogossip {command}: {e}", file=sys.stderr)
        return EXIT_USAGE
    except NotConvergedError as e:
        print(f"geogossip {command}: {e}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    except ValueError as e:  # invalid sizes, radii, parameters, matrices
        print(f"geogossip {command}: {e}", file=sys.stderr)
        return EXIT_USAGE
    except GossipError as e:
        print(f"geogossip {command}: {e}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as e:  # noqa: BLE001 - any other failure maps to the internal exit code
        print(f"geogossip {command}: internal error: {e!r}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
