"""Command-line entry point: catalog, solve and verify.

Exit codes: 0 success, 1 usage error (bad flags, unknown space), 2 failed
certification or failed conservation check.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import sys
from dataclasses import asdict, dataclass

import numpy as np

from . import albert
from .catalog import catalog_table, resolve
from .killing_system import (build_quadratic_system, build_rank1_system, build_topslot_system,
                             indecomposability_report, solve)
from .linalg import CertificationError
from .taylor_flow import ChartExitError, integrate_and_check, normalized, random_start, tensor_poly
from .tensor_core import SymTensorRankD, tensor_from_json

SCHEMA = 1
EXIT_OK, EXIT_USAGE, EXIT_FAIL = 0, 1, 2


@dataclass
class RunConfig:
    command: str
    space: str | None = None
    rank: int = 2
    include_eq22: str = "auto"
    rank1_shortcut: bool = False
    primes: int = 60
    seed: int = 0
    order: int = 8
    geodesics: int = 20
    tol: float = 1e-8
    s_max: float | None = None
    out: str | None = None
    format: str = "json"
    from_nullspace: int | None = None
    tensor: str | None = None
    ka_random: bool = False

    def validate(self):
        if self.rank < 1:
            raise ValueError("--rank must be at least 1")
        if self.primes < 1:
            raise ValueError("--primes must be positive")
        if self.geodesics < 1:
            raise ValueError("--geodesics must be positive")
        if not self.tol > 0:
            raise ValueError("--tol must be positive")
        if self.include_eq22 not in ("auto", "on", "off"):
            raise ValueError("--include-eq22 must be auto, on or off")
        if self.command in ("solve", "verify") and not self.space:
            raise ValueError("--space is required")
        if self.command == "verify":
            sources = [self.from_nullspace is not None, self.tensor is not None, self.ka_random]
            if sum(sources) != 1:
                raise ValueError("verify needs exactly one of --from-nullspace, --tensor, --ka-random")
            if self.ka_random != (self.space == "op2-embedded"):
                raise ValueError("--ka-random goes with --space op2-embedded")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser():
    p = _Parser(prog="killing-lab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--space", help="space id, e.g. sphere:3, cpm:2, hpm:2, op2, file:path")
        sp.add_argument("--rank", type=int, default=2, help="Killing tensor rank d (default 2)")
        sp.add_argument("--seed", type=int, default=0, help="seed for primes and random samples")
        sp.add_argument("--out", help="write the report here instead of stdout")
        sp.add_argument("--format", choices=["json", "csv"], default="json")

    s = sub.add_parser("solve", help="build and solve the linear system for top-slot tensors")
    common(s)
    s.add_argument("--include-eq22", choices=["auto", "on", "off"], default="auto",
                   help="use the second quadratic identity (auto: only off rank-one spaces)")
    s.add_argument("--rank1-shortcut", action="store_true", help="use the rank-one reduced system")
    s.add_argument("--primes", type=int, default=60, help="cap on primes per block for reconstruction")

    v = sub.add_parser("verify", help="check conservation along random geodesics")
    common(v)
    v.add_argument("--from-nullspace", type=int, help="index of a basis element of the solution space")
    v.add_argument("--tensor", help="tensor in the JSON exchange format")
    v.add_argument("--ka-random", action="store_true", help="random K_A on the embedded Cayley plane")
    v.add_argument("--geodesics", type=int, default=20)
    v.add_argument("--tol", type=float, default=1e-8)
    v.add_argument("--s-max", type=float, default=None, help="flow time (default 1, or pi when embedded)")
    v.add_argument("--order", type=int, default=8, help="unused by the closed-form flow; recorded")
    v.add_argument("--primes", type=int, default=60)

    c = sub.add_parser("catalog", help="list the available spaces")
    c.add_argument("--out")
    c.add_argument("--format", choices=["json", "csv"], default="json")
    return p


def _hash(obj) -> str:
    return hashlib.sha1(json.dumps(obj, sort_keys=True).encode()).hexdigest()


def _emit(report, cfg: RunConfig):
    if cfg.format == "json":
        text = json.dumps(report, sort_keys=True, indent=2) + "\n"
    else:
        flat = {k: (json.dumps(v, sort_keys=True) if isinstance(v, (dict, list)) else v)
                for k, v in report.items()}
        buf = io.StringIO()
        rows = flat.pop("rows", None)
        if rows is not None:
            rows = json.loads(rows)
            w = csv.DictWriter(buf, fieldnames=sorted({k for r in rows for k in r}), lineterminator="\n")
            w.writeheader()
            w.writerows(rows)
        else:
            w = csv.DictWriter(buf, fieldnames=sorted(flat), lineterminator="\n")
            w.writeheader()
            w.writerow(flat)
        text = buf.getvalue()
    if cfg.out:
        with open(cfg.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _eq22(flag):
    return None if flag == "auto" else flag == "on"


def _solve_space(space, cfg: RunConfig):
    """Solution for the configured system; returns (solution, report dict)."""
    if cfg.rank == 2 and not cfg.rank1_shortcut:
        rep, sol = indecomposability_report(space, _eq22(cfg.include_eq22), seed=cfg.seed)
        return sol, rep.as_dict()
    system = build_rank1_system(space, cfg.rank) if cfg.rank1_shortcut else build_topslot_system(space, cfg.rank)
    sol = solve(system, seed=cfg.seed, max_primes=cfg.primes)
    rep = {"space_name": space.name, "n": space.n, "d": cfg.rank, "unknown_dim": system.width,
           "row_count": system.row_count, "raw_row_count": system.raw_rows, "system_rank": sol.rank,
           "solution_dim": sol.dim, "decomposable_dim": None, "indecomposable_dim": None,
           "scale_factor": str(space.scale_factor), "arithmetic_mode": "modular+exact-verification",
           "extra": {"system": "rank1" if cfg.rank1_shortcut else "topslot"}}
    return sol, rep


def _envelope(cfg: RunConfig, space_hash, body):
    inputs = {"config": {k: v for k, v in asdict(cfg).items() if k not in ("out", "format")},
              "space": space_hash}
    out = {"schema": SCHEMA, "command": cfg.command, "seed": cfg.seed, "content_hash": _hash(inputs)}
    out.update(body)
    return out


def cmd_catalog(cfg: RunConfig):
    rows = catalog_table()
    return {"schema": SCHEMA, "command": "catalog", "rows": rows}


def cmd_solve(cfg: RunConfig):
    space = resolve(cfg.space)
    _, rep = _solve_space(space, cfg)
    rep["scale_factor"] = str(space.scale_factor)
    return _envelope(cfg, space.content_hash(), rep)


def _verify_embedded(cfg: RunConfig):
    rng = np.random.default_rng(cfg.seed)
    s_max = np.pi if cfg.s_max is None else cfg.s_max
    devs = []
    for _ in range(cfg.geodesics):
        A = albert.random_trace_free(rng)
        X0 = albert.random_cayley_point(rng)
        V0 = albert.random_tangent(X0, rng)
        devs.append(albert.embedded_geodesic_check(A, X0, V0, s_max=s_max))
    return {"space": "op2-embedded", "source": "ka-random"}, devs


def _verify_normal(cfg: RunConfig):
    space = resolve(cfg.space)
    if cfg.tensor:
        with open(cfg.tensor) as fh:
            T = tensor_from_json(fh.read())
        source = {"tensor_file_hash": _hash(T.to_vector().astype(str).tolist())}
    else:
        sol, _ = _solve_space(space, cfg)
        tensors = sol.tensors()
        if not 0 <= cfg.from_nullspace < len(tensors):
            raise ValueError(f"--from-nullspace must be in [0, {len(tensors)})")
        T = tensors[cfg.from_nullspace]
        source = {"from_nullspace": cfg.from_nullspace, "solution_dim": len(tensors)}
    if T.n != space.n:
        raise ValueError("tensor dimension does not match the space")
    K = normalized(tensor_poly(T))
    rng = np.random.default_rng(cfg.seed)
    s_max = 1.0 if cfg.s_max is None else cfg.s_max
    devs = []
    for _ in range(cfg.geodesics):
        X0, P0 = random_start(space, rng)
        devs.append(integrate_and_check(space, K, X0, P0, s_max=s_max).max_deviation)
    source["space_hash"] = space.content_hash()
    source["scale_factor"] = str(space.scale_factor)
    return source, devs


def cmd_verify(cfg: RunConfig):
    if cfg.space == "op2-embedded":
        info, devs = _verify_embedded(cfg)
        space_hash = "op2-embedded"
    else:
        info, devs = _verify_normal(cfg)
        space_hash = info.get("space_hash")
    worst = float(max(devs))
    body = {"max_deviation": float(f"{worst:.6e}"), "tolerance": cfg.tol, "geodesics": cfg.geodesics,
            "passed": bool(worst <= cfg.tol)}
    body.update({k: v for k, v in info.items() if k != "space_hash"})
    return _envelope(cfg, space_hash, body)


def parse_config(argv):
    args = build_parser().parse_args(argv)
    d = vars(args)
    cfg = RunConfig(command=d.pop("command"))
    for k, v in d.items():
        setattr(cfg, k, v)
    cfg.validate()
    return cfg


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = parse_config(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    except ValueError as exc:
        print(f"killing-lab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        if cfg.command == "catalog":
            report = cmd_catalog(cfg)
        elif cfg.command == "solve":
            report = cmd_solve(cfg)
        else:
            report = cmd_verify(cfg)
    except (KeyError, ValueError, FileNotFoundError) as exc:
        print(f"killing-lab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (CertificationError, RuntimeError, AssertionError, ChartExitError, albert.ConstraintDriftError) as exc:
        print(f"killing-lab: check failed: {exc}", file=sys.stderr)
        return EXIT_FAIL
    _emit(report, cfg)
    if report.get("passed") is False:
        print(f"killing-lab: deviation {report['max_deviation']} exceeds {cfg.tol}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK
