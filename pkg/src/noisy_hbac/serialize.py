"""CSV and JSON formats for trajectories, enhancement maps and step reports.

CSV files carry one header row and LF line endings. Floats are written with
17 significant digits so they parse back to the same 64-bit value.
"""

from __future__ import annotations

import csv
import io
import json
import math
from typing import Any, Iterable, Optional, Sequence

from .analysis import STAGES, Cell, CellStatus, EnhancementMap, OasStepReport
from .asymptotics import AsymptoticReport
from .channels import Channel
from .cooling import Algorithm
from .state import target_marginal

TRAJECTORY_HEADER = ("iteration", "polarization", "lambda", "converged")
MAP_HEADER = ("p", "gamma", "lambda_noisy", "lambda_hbac", "lambda_noise_alone", "E", "status")


class MapFormatError(ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


def fmt(x: float) -> str:
    return "%.17g" % x


def _csv(header: Sequence[str], rows: Iterable[Sequence[str]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _finite(x: float) -> Optional[float]:
    return x if math.isfinite(x) else None


def dump_json(obj: Any) -> str:
    """Stable JSON text; non-finite floats become ``null``."""

    def clean(o):
        if isinstance(o, float):
            return _finite(o)
        if isinstance(o, dict):
            return {k: clean(v) for k, v in o.items()}
        if isinstance(o, (list, tuple)):
            return [clean(v) for v in o]
        return o

    return json.dumps(clean(obj), indent=2, allow_nan=False) + "\n"


def trajectory_csv(report: AsymptoticReport) -> str:
    points = report.trajectory or []
    last = len(points) - 1
    rows = (
        (str(pt.iteration), fmt(pt.polarization), fmt(pt.lam), "true" if i == last and report.converged else "false")
        for i, pt in enumerate(points)
    )
    return _csv(TRAJECTORY_HEADER, rows)


def trajectory_json(report: AsymptoticReport) -> str:
    points = report.trajectory or []
    last = len(points) - 1
    rows = [
        {
            "iteration": pt.iteration,
            "polarization": pt.polarization,
            "lambda": pt.lam,
            "converged": i == last and report.converged,
        }
        for i, pt in enumerate(points)
    ]
    return dump_json(
        {
            "status": report.status.value,
            "iterations_used": report.iterations_used,
            "residual": report.residual,
            "final_state": report.state.probs.tolist(),
            "trajectory": rows,
        }
    )


def map_csv(emap: EnhancementMap) -> str:
    rows = (
        (fmt(c.p), fmt(c.gamma), fmt(c.lambda_noisy), fmt(c.lambda_hbac), fmt(c.lambda_noise_alone), fmt(c.E), c.status.value)
        for c in emap.cells
    )
    return _csv(MAP_HEADER, rows)


def map_json(emap: EnhancementMap) -> str:
    return dump_json(
        {
            "n": emap.n,
            "eps0": emap.eps0,
            "algorithm": emap.algorithm and emap.algorithm.value,
            "channel": emap.channel and emap.channel.value,
            "grid_step_p": emap.grid_step_p,
            "grid_step_gamma": emap.grid_step_gamma,
            "cells": [dict(zip(MAP_HEADER, (*c[:-1], c.status.value))) for c in emap.cells],
        }
    )


def _axis_steps(values: list[float], lines: list[int], name: str) -> int:
    distinct = sorted(set(values))
    steps = len(distinct) - 1
    if steps < 1:
        raise MapFormatError(lines[0], f"{name} axis needs at least two grid points")
    for i, v in enumerate(distinct):
        if abs(v - i / steps) > 1e-12:
            raise MapFormatError(lines[values.index(v)], f"{name}={v!r} is not on a uniform grid over [0, 1]")
    return steps


def read_map_csv(text: str, meta: Optional[dict] = None) -> EnhancementMap:
    """Parse a map written by :func:`map_csv`.

    Grid steps are recovered from the distinct ``p`` and ``gamma`` values.
    ``meta`` (for instance a manifest's parameters) fills in ``n``, ``eps0``,
    ``algorithm`` and ``channel`` when available.

    Raises:
        MapFormatError: naming the offending line.
    """
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise MapFormatError(1, "empty file") from None
    if tuple(header) != MAP_HEADER:
        raise MapFormatError(1, f"expected header {','.join(MAP_HEADER)}")
    cells = []
    lines = []
    for row in reader:
        line = reader.line_num
        if not row:
            continue
        if len(row) != len(MAP_HEADER):
            raise MapFormatError(line, f"expected {len(MAP_HEADER)} fields, got {len(row)}")
        try:
            nums = [float(x) for x in row[:-1]]
        except ValueError as exc:
            raise MapFormatError(line, str(exc)) from None
        try:
            status = CellStatus(row[-1])
        except ValueError:
            raise MapFormatError(line, f"unknown status {row[-1]!r}") from None
        cells.append(Cell(*nums, status))
        lines.append(line)
    if not cells:
        raise MapFormatError(2, "no data rows")
    p_steps = _axis_steps([c.p for c in cells], lines, "p")
    gammas = [c.gamma for c in cells]
    if all(math.isnan(g) for g in gammas):
        gamma_steps = None
        expected = p_steps + 1
    elif any(math.isnan(g) for g in gammas):
        bad = next(i for i, g in enumerate(gammas) if math.isnan(g))
        raise MapFormatError(lines[bad], "gamma is nan in a two-parameter map")
    else:
        gamma_steps = _axis_steps(gammas, lines, "gamma")
        expected = (p_steps + 1) * (gamma_steps + 1)
    if len(cells) != expected:
        raise MapFormatError(reader.line_num, f"grid incomplete: {len(cells)} rows, expected {expected}")
    meta = meta or {}
    return EnhancementMap(
        n=meta.get("n"),
        eps0=meta.get("eps0"),
        algorithm=Algorithm(meta["algo"]) if meta.get("algo") else None,
        channel=Channel(meta["channel"]) if meta.get("channel") else None,
        p_steps=p_steps,
        gamma_steps=gamma_steps,
        cells=tuple(cells),
    )


def oas_step_dict(report: OasStepReport) -> dict:
    stages = {}
    for name in STAGES:
        q = target_marginal(report.stage(name))
        stages[name] = {
            "probs": report.stage(name).probs.tolist(),
            "lambda": q.lam,
            "polarization": q.polarization,
            "polarization_over_eps0": q.polarization / report.eps0,
        }
    alpha, beta = report.model.flips
    return {
        "n": report.n,
        "eps0": report.eps0,
        "channel": report.model.kind.value,
        "p": report.model.p,
        "gamma": report.model.gamma,
        "alpha": alpha,
        "beta": beta,
        "compression": report.compression.value,
        "stages": stages,
        "after_reset_full": report.after_reset_full.probs.tolist(),
        "after_compression_full": report.after_compression_full.probs.tolist(),
        "lambda_after_noise_closed": report.lambda_after_noise_closed,
        "lambda_after_compression_closed": report.lambda_after_compression_closed,
        "delta_lambda": report.delta_lambda,
        "condition_holds": report.condition_holds,
    }


def oas_step_json(report: OasStepReport) -> str:
    return dump_json(oas_step_dict(report))
