"""Curve CSV files, flat key-value reports and YAML scenario files."""

from __future__ import annotations

import csv
import io as _io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .errors import MalformedCurveError, SpecError
from .geometry import Domain, SampledCurve


def fmt(value) -> str:
    """Text form of a report value; floats keep 17 significant digits."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".17g")
    if isinstance(value, (list, tuple, np.ndarray)):
        return "[" + ", ".join(fmt(v) for v in np.asarray(value, dtype=float).ravel()) + "]"
    return str(value)


def curve_to_csv(curve: SampledCurve) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t"] + [f"x{i + 1}" for i in range(curve.dimension)])
    for t, pt in zip(curve.times, curve.points):
        w.writerow([format(float(t), ".17g")] + [format(float(v), ".17g") for v in pt])
    return buf.getvalue()


def write_curve_csv(path, curve: SampledCurve) -> None:
    Path(path).write_text(curve_to_csv(curve))


def read_curve_csv(path) -> SampledCurve:
    """Load a curve written by :func:`write_curve_csv` (header ``t,x1,...,xn``)."""
    text = Path(path).read_text()
    return curve_from_csv_text(text)


def curve_from_csv_text(text: str) -> SampledCurve:
    rows = list(csv.reader(_io.StringIO(text)))
    if not rows:
        raise MalformedCurveError("empty curve file")
    header = [h.strip() for h in rows[0]]
    n = len(header) - 1
    if n < 1 or header[0] != "t" or header[1:] != [f"x{i + 1}" for i in range(n)]:
        raise MalformedCurveError(f"bad curve header {header}")
    try:
        data = np.array([[float(v) for v in r] for r in rows[1:] if r], dtype=float)
    except ValueError as exc:
        raise MalformedCurveError(f"non-numeric curve entry: {exc}") from None
    if data.ndim != 2 or data.shape[1] != n + 1:
        raise MalformedCurveError("ragged curve rows")
    return SampledCurve(data[:, 0], data[:, 1:])


def table_to_csv(header: list[str], rows: list[list]) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    return buf.getvalue()


def format_report(sections: dict[str, dict]) -> str:
    """Render ``{section: {key: value}}`` as ``[section]`` blocks of ``key = value`` lines."""
    out = []
    for name, rec in sections.items():
        out.append(f"[{name}]")
        for k, v in rec.items():
            out.append(f"{k} = {fmt(v)}")
        out.append("")
    return "\n".join(out)


def parse_report(text: str) -> dict[str, dict[str, str]]:
    sections: dict[str, dict[str, str]] = {}
    current = None
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            current = sections.setdefault(line[1:-1], {})
        elif "=" in line and current is not None:
            k, v = line.split("=", 1)
            current[k.strip()] = v.strip()
    return sections


# --------------------------------------------------------------------------
# Scenarios
# --------------------------------------------------------------------------


@dataclass
class Scenario:
    distribution: str
    norm: str = "euclidean"
    domain: Domain | None = None
    seed: int | None = None
    sections: dict = field(default_factory=dict)
    base_dir: Path = Path(".")

    def section(self, name: str) -> dict:
        sec = self.sections.get(name)
        if sec is None:
            raise SpecError(f"scenario has no '{name}' section")
        if not isinstance(sec, dict):
            raise SpecError(f"section '{name}' must be a mapping")
        return sec

    def require_seed(self) -> int:
        if self.seed is None:
            raise SpecError("this command is stochastic: set 'seed' in the scenario or pass --seed")
        return int(self.seed)


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text())
    except (OSError, yaml.YAMLError) as exc:
        raise SpecError(f"cannot read scenario {path}: {exc}") from None
    return scenario_from_dict(raw, path.parent)


def scenario_from_dict(raw, base_dir=Path(".")) -> Scenario:
    if not isinstance(raw, dict):
        raise SpecError("scenario must be a mapping")
    if "distribution" not in raw:
        raise SpecError("scenario needs a 'distribution' entry")
    dom = None
    if "domain" in raw:
        d = raw["domain"]
        try:
            lo = np.asarray(d["lower"], dtype=float)
            hi = np.asarray(d["upper"], dtype=float)
            grid = d.get("grid", 16)
            grid = tuple(grid) if isinstance(grid, (list, tuple)) else (int(grid),) * lo.size
            dom = Domain(lo, hi, grid)
        except (KeyError, TypeError, ValueError) as exc:
            raise SpecError(f"bad domain entry: {exc}") from None
    seed = raw.get("seed")
    if seed is not None:
        try:
            seed = int(seed)
        except (TypeError, ValueError):
            raise SpecError(f"seed must be an integer, got {seed!r}") from None
        if seed < 0:
            raise SpecError("seed must be non-negative")
    known = {"distribution", "norm", "domain", "seed"}
    sections = {k: v for k, v in raw.items() if k not in known}
    return Scenario(str(raw["distribution"]), str(raw.get("norm", "euclidean")), dom, seed, sections,
                    Path(base_dir))


def as_point(value, n: int | None = None, what: str = "point") -> np.ndarray:
    try:
        arr = np.asarray(value, dtype=float).reshape(-1)
    except (TypeError, ValueError):
        raise SpecError(f"{what} must be a list of numbers") from None
    if n is not None and arr.size != n:
        raise SpecError(f"{what} has dimension {arr.size}, expected {n}")
    if not np.all(np.isfinite(arr)):
        raise SpecError(f"{what} has non-finite entries")
    return arr
