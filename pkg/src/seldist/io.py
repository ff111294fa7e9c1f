"""JSON file formats for workloads, distributions, depth weights and learner reports.

Floats are written with ``repr``, the shortest text that reads back to the
same double, so every file round-trips bit for bit. NaN and infinities are
rejected on input.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Union

import numpy as np

from .geometry import DiscreteDistribution, Workload

PathLike = Union[str, Path]
REPORT_VERSION = 1


class WorkloadFormatError(ValueError):
    """Malformed or invalid input file; the message names the location."""


def _reject_constant(name):
    raise ValueError(f"non-finite number {name} is not allowed")


def _parse(text: str, where: str):
    try:
        return json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise WorkloadFormatError(f"{where}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    except ValueError as exc:
        raise WorkloadFormatError(f"{where}: {exc}") from None


def _read(path: PathLike):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise WorkloadFormatError(f"{path}: cannot read file: {exc}") from None
    return _parse(text, str(path))


def _number(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise WorkloadFormatError(f"{where}: expected a number, got {type(value).__name__}")
    v = float(value)
    if not math.isfinite(v):
        raise WorkloadFormatError(f"{where}: number is not finite")
    return v


def _vector(value, d: int, where: str) -> list:
    if not isinstance(value, list):
        raise WorkloadFormatError(f"{where}: expected an array of {d} numbers")
    if len(value) != d:
        raise WorkloadFormatError(f"{where}: expected {d} coordinates, got {len(value)}")
    return [_number(v, f"{where}[{j}]") for j, v in enumerate(value)]


def _object(doc, keys, where: str) -> dict:
    if not isinstance(doc, dict):
        raise WorkloadFormatError(f"{where}: expected an object")
    missing = [k for k in keys if k not in doc]
    if missing:
        raise WorkloadFormatError(f"{where}: missing field {missing[0]!r}")
    return doc


def _dimension(doc, where: str) -> int:
    d = doc["d"]
    if isinstance(d, bool) or not isinstance(d, int) or d < 1:
        raise WorkloadFormatError(f"{where}: field 'd' must be a positive integer")
    return d


def workload_from_dict(doc, where: str = "workload") -> Workload:
    _object(doc, ("d", "samples"), where)
    d = _dimension(doc, where)
    samples = doc["samples"]
    if not isinstance(samples, list) or not samples:
        raise WorkloadFormatError(f"{where}: field 'samples' must be a non-empty array")
    lo, hi, s = [], [], []
    for i, item in enumerate(samples):
        at = f"{where}: sample {i}"
        _object(item, ("lo", "hi", "s"), at)
        a = _vector(item["lo"], d, f"{at}: field 'lo'")
        b = _vector(item["hi"], d, f"{at}: field 'hi'")
        v = _number(item["s"], f"{at}: field 's'")
        for j in range(d):
            if a[j] > b[j]:
                raise WorkloadFormatError(f"{at}: lo[{j}]={a[j]!r} exceeds hi[{j}]={b[j]!r}")
        if not 0.0 <= v <= 1.0:
            raise WorkloadFormatError(f"{at}: selectivity {v!r} outside [0, 1]")
        lo.append(a)
        hi.append(b)
        s.append(v)
    return Workload(np.array(lo), np.array(hi), np.array(s))


def distribution_from_dict(doc, where: str = "distribution") -> DiscreteDistribution:
    _object(doc, ("d", "atoms"), where)
    d = _dimension(doc, where)
    atoms = doc["atoms"]
    if not isinstance(atoms, list):
        raise WorkloadFormatError(f"{where}: field 'atoms' must be an array")
    pts, ws = [], []
    for i, item in enumerate(atoms):
        at = f"{where}: atom {i}"
        _object(item, ("x", "w"), at)
        pts.append(_vector(item["x"], d, f"{at}: field 'x'"))
        w = _number(item["w"], f"{at}: field 'w'")
        if w <= 0.0:
            raise WorkloadFormatError(f"{at}: weight must be positive, got {w!r}")
        ws.append(w)
    if math.fsum(ws) > 1.0 + 1e-9:
        raise WorkloadFormatError(f"{where}: total weight {math.fsum(ws)!r} exceeds 1")
    return DiscreteDistribution(np.array(pts, dtype=np.float64).reshape(-1, d), np.array(ws), d=d)


def _fmt(v) -> str:
    return repr(float(v))


def _fmt_vec(a) -> str:
    return "[" + ", ".join(_fmt(v) for v in a) + "]"


def dumps_workload(Z: Workload) -> str:
    lines = [f'{{"lo": {_fmt_vec(a)}, "hi": {_fmt_vec(b)}, "s": {_fmt(v)}}}'
             for a, b, v in zip(Z.lo, Z.hi, Z.s)]
    return '{"d": %d, "samples": [\n  %s\n]}\n' % (Z.d, ",\n  ".join(lines))


def dumps_distribution(D: DiscreteDistribution) -> str:
    lines = [f'{{"x": {_fmt_vec(p)}, "w": {_fmt(w)}}}' for p, w in zip(D.points, D.weights)]
    if not lines:
        return '{"d": %d, "atoms": []}\n' % D.d
    return '{"d": %d, "atoms": [\n  %s\n]}\n' % (D.d, ",\n  ".join(lines))


def load_workload(path: PathLike) -> Workload:
    return workload_from_dict(_read(path), str(path))


def save_workload(Z: Workload, path: PathLike) -> None:
    Path(path).write_text(dumps_workload(Z), encoding="utf-8")


def load_distribution(path: PathLike) -> DiscreteDistribution:
    return distribution_from_dict(_read(path), str(path))


def save_distribution(D: DiscreteDistribution, path: PathLike) -> None:
    Path(path).write_text(dumps_distribution(D), encoding="utf-8")


def load_weights(path: PathLike, n: int) -> np.ndarray:
    """Per-box signed weights: a bare array or an object with an ``omega`` array."""
    doc = _read(path)
    where = str(path)
    if isinstance(doc, dict):
        _object(doc, ("omega",), where)
        doc = doc["omega"]
        where += ": field 'omega'"
    return np.array(_vector(doc, n, where))


def dumps_report(report, cfg, include_timing: bool = False) -> str:
    doc = {
        "version": REPORT_VERSION,
        "mode": cfg.mode,
        "delta": cfg.delta,
        "delta_internal": report.delta_internal,
        "seed": int(cfg.seed),
        "exact_depth": cfg.exact_depth,
        "reduce": cfg.reduce,
        "achieved_error": report.achieved_error,
        "alpha_final": report.alpha_final,
        "support_size": report.support_size,
        "pre_reduction_support": report.pre_reduction_support,
        "rounds": report.rounds_used,
        "calls": [{"alpha": c.alpha, "feasible": c.feasible, "rounds": c.rounds, "attempt": c.attempt}
                  for c in report.calls],
    }
    if include_timing:
        doc["wall_time"] = report.wall_time
    return json.dumps(doc, indent=2) + "\n"
