"""Command-line interface.

Exit codes: 0 success, 1 failed verification, 2 invalid arguments,
3 non-convergence, 4 I/O or parse failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from pathlib import Path
from typing import Optional

from . import __version__
from .analysis import enhancement_volume, green_zone_sweep, hbac_limit_lambda, oas_one_step
from .asymptotics import ConvergencePolicy, iterate_to_convergence
from .channels import Channel, NoiseModel
from .cooling import Algorithm, CoolingConfig, hbac_limit_polarization
from .serialize import (
    MapFormatError,
    dump_json,
    fmt,
    map_csv,
    map_json,
    oas_step_json,
    read_map_csv,
    trajectory_csv,
    trajectory_json,
)
from .state import ResetSpec
from .verification import run_checks

log = logging.getLogger("noisy_hbac")

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_USAGE = 2
EXIT_NONCONVERGED = 3
EXIT_IO = 4


class UsageError(Exception):
    pass


def manifest_path(out: Path) -> Path:
    return out.with_name(out.name + ".manifest.json")


def _params(args) -> dict:
    skip = {"func", "command", "verbose"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _emit(args, text: str, started: float, extra: Optional[dict] = None) -> None:
    """Write ``text`` to ``--out`` with a manifest sidecar, or to stdout."""
    out = getattr(args, "out", None)
    if out is None:
        sys.stdout.write(text)
        return
    out = Path(out)
    out.write_text(text, encoding="utf-8", newline="\n")
    manifest = {
        "command": args.command,
        "params": _params(args),
        "version": __version__,
        "duration_s": time.perf_counter() - started,
    }
    if extra:
        manifest.update(extra)
    manifest_path(out).write_text(dump_json(manifest), encoding="utf-8", newline="\n")


def _reset(args) -> ResetSpec:
    try:
        return ResetSpec(args.eps0)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _noise(args) -> Optional[NoiseModel]:
    if args.channel is None:
        return None
    if args.p is None:
        raise UsageError("--p is required when --channel is given")
    channel = Channel(args.channel)
    if channel.uses_gamma and args.gamma is None:
        raise UsageError("--gamma is required for the gad channel")
    try:
        return NoiseModel(channel, args.p, args.gamma or 0.0)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _policy(args) -> ConvergencePolicy:
    try:
        return ConvergencePolicy(tol=args.tol, max_iters=args.max_iters)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _workers(threads: int) -> int:
    if threads == 0:
        return os.cpu_count() or 1
    return threads


def cmd_limit(args) -> int:
    if args.n < 1:
        raise UsageError("--n must be >= 1")
    reset = _reset(args)
    eps = hbac_limit_polarization(args.n, reset.eps0)
    lam = hbac_limit_lambda(args.n, reset.eps0)
    if args.format == "json":
        text = dump_json({"n": args.n, "eps0": reset.eps0, "polarization": eps, "lambda": lam})
    else:
        text = f"n,eps0,polarization,lambda\n{args.n},{fmt(reset.eps0)},{fmt(eps)},{fmt(lam)}\n"
    sys.stdout.write(text)
    return EXIT_OK


def cmd_iterate(args, started) -> int:
    try:
        config = CoolingConfig(Algorithm(args.algo), args.n, _reset(args), _noise(args))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    report = iterate_to_convergence(config, _policy(args), record_trajectory=True)
    text = trajectory_json(report) if args.format == "json" else trajectory_csv(report)
    _emit(args, text, started, {"status": report.status.value, "iterations_used": report.iterations_used})
    if not report.converged:
        log.error("did not converge: %s after %d iterations", report.status.value, report.iterations_used)
        return EXIT_NONCONVERGED
    return EXIT_OK


def _sweep(args):
    if args.n < 1:
        raise UsageError("--n must be >= 1")
    try:
        return green_zone_sweep(
            args.n,
            _reset(args),
            Channel(args.channel),
            Algorithm(args.algo),
            args.grid_step,
            _policy(args),
            workers=_workers(args.threads),
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_sweep(args, started) -> int:
    emap = _sweep(args)
    text = map_json(emap) if args.format == "json" else map_csv(emap)
    invalid = len(emap.invalid_cells())
    _emit(args, text, started, {"invalid_cells": invalid})
    if invalid:
        log.error("%d cell(s) did not converge", invalid)
        return EXIT_NONCONVERGED
    return EXIT_OK


def _load_map(path: Path):
    text = path.read_text(encoding="utf-8")
    meta = None
    sidecar = manifest_path(path)
    if sidecar.exists():
        meta = json.loads(sidecar.read_text(encoding="utf-8")).get("params")
    return read_map_csv(text, meta)


def cmd_volume(args, started) -> int:
    if args.map is not None:
        emap = _load_map(Path(args.map))
        source = str(args.map)
    else:
        if args.channel is None:
            raise UsageError("give --map FILE or the sweep parameters (--channel, --algo, --n, --eps0)")
        emap = _sweep(args)
        source = "sweep"
    volume = enhancement_volume(emap)
    record = {
        "source": source,
        "n": emap.n,
        "eps0": emap.eps0,
        "algorithm": emap.algorithm and emap.algorithm.value,
        "channel": emap.channel and emap.channel.value,
        "grid_step_p": emap.grid_step_p,
        "grid_step_gamma": emap.grid_step_gamma,
        "cells": len(emap.cells),
        "excluded_cells": len(emap.invalid_cells()),
        "volume": volume,
    }
    _emit(args, dump_json(record), started)
    return EXIT_OK


def cmd_oas_step(args, started) -> int:
    if args.n < 1:
        raise UsageError("--n must be >= 1")
    model = _noise(args)
    report = oas_one_step(args.n, _reset(args), model, Algorithm(args.algo))
    _emit(args, oas_step_json(report), started)
    return EXIT_OK


def cmd_verify(args, started) -> int:
    if args.samples < 0:
        raise UsageError("--samples must be >= 0")
    if args.samples == 0:
        log.warning("samples=0: every check passes vacuously")
    results = run_checks(args.seed, args.samples)
    lines = [f"{'PASS' if r.passed else 'FAIL'} {r.name} samples={r.samples} worst={fmt(r.worst)}" for r in results]
    ok = all(r.passed for r in results)
    lines.append("all checks passed" if ok else "verification FAILED")
    _emit(args, "\n".join(lines) + "\n", started)
    return EXIT_OK if ok else EXIT_VERIFY_FAILED


def _add_run_opts(p, algo=True, grid=False):
    p.add_argument("--n", type=int, required=True, help="number of computation qubits")
    p.add_argument("--eps0", type=float, required=True, help="reset-qubit polarization")
    if algo:
        p.add_argument("--algo", choices=[a.value for a in Algorithm], default="tsac")
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--max-iters", type=int, default=100_000)
    p.add_argument("--out", help="output file (default: stdout)")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    if grid:
        p.add_argument("--grid-step", type=float, default=0.01)
        p.add_argument("--threads", type=int, default=1, help="worker processes for sweep cells, 0 = all cores")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="noisy-hbac", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    channels = [c.value for c in Channel]

    p = sub.add_parser("limit", help="noiseless HBAC limit")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--eps0", type=float, required=True)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.set_defaults(func=lambda a, t: cmd_limit(a))

    p = sub.add_parser("iterate", help="iterate HBAC to convergence and write the trajectory")
    _add_run_opts(p)
    p.add_argument("--channel", choices=channels)
    p.add_argument("--p", type=float)
    p.add_argument("--gamma", type=float)
    p.set_defaults(func=cmd_iterate)

    p = sub.add_parser("sweep", help="purity-enhancement map over the noise parameters")
    _add_run_opts(p, grid=True)
    p.add_argument("--channel", choices=channels, default="gad")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("volume", help="enhancement volume from a map file or a live sweep")
    p.add_argument("--map", help="map CSV written by the sweep command")
    p.add_argument("--n", type=int)
    p.add_argument("--eps0", type=float)
    p.add_argument("--algo", choices=[a.value for a in Algorithm], default="tsac")
    p.add_argument("--channel", choices=channels)
    p.add_argument("--grid-step", type=float, default=0.01)
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--max-iters", type=int, default=100_000)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_volume)

    p = sub.add_parser("oas-step", help="one noisy iteration from the optimal asymptotic state")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--eps0", type=float, required=True)
    p.add_argument("--channel", choices=channels, default="gad")
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--algo", choices=[a.value for a in Algorithm], default="tsac", help="compression used in the step")
    p.add_argument("--out")
    p.set_defaults(func=cmd_oas_step)

    p = sub.add_parser("verify", help="randomized channel and transfer-matrix checks")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    if args.command == "volume" and args.map is None and None in (args.n, args.eps0):
        parser.error("volume needs --map or --n and --eps0")
    started = time.perf_counter()
    try:
        return args.func(args, started)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except MapFormatError as exc:
        print(f"{parser.prog}: parse error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"{parser.prog}: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
