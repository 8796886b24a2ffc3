"""Deterministic sampling, fit utilities, and report plumbing.

All randomness flows from a single 64-bit seed through the counter-based
Philox generator, so sample sets are reproducible bit for bit and
independent of evaluation order.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, List, Sequence, Tuple

import numpy as np

from .errors import ConfigError, FitError

TOOL_VERSION = "0.1.0"


class SamplingScheme(Enum):
    LOG_RADIAL_FIBONACCI = "log_radial_fibonacci"


@dataclass(frozen=True)
class SampleSpec:
    """Deterministic sampling plan: log-spaced radii x Fibonacci directions."""

    seed: int = 1
    radial_range: Tuple[float, float] = (0.3, 3.0)
    radial_count: int = 8
    angular_count: int = 16
    scheme: SamplingScheme = SamplingScheme.LOG_RADIAL_FIBONACCI

    def __post_init__(self):
        r0, r1 = self.radial_range
        if not (0.0 < r0 <= r1):
            raise ConfigError(f"radial_range must satisfy 0 < r_min <= r_max, got {self.radial_range}")
        if self.radial_count < 2 or self.angular_count < 2:
            raise ConfigError("radial_count and angular_count must be at least 2")
        object.__setattr__(self, "radial_range", (float(r0), float(r1)))

    def to_json_dict(self) -> dict:
        return {
            "seed": self.seed,
            "radial_range": list(self.radial_range),
            "radial_count": self.radial_count,
            "angular_count": self.angular_count,
            "scheme": self.scheme.value,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "SampleSpec":
        return cls(
            seed=int(d.get("seed", 1)),
            radial_range=tuple(d.get("radial_range", (0.3, 3.0))),
            radial_count=int(d.get("radial_count", 8)),
            angular_count=int(d.get("angular_count", 16)),
            scheme=SamplingScheme(d.get("scheme", "log_radial_fibonacci")),
        )


def fibonacci_directions(n: int) -> np.ndarray:
    """n quasi-uniform unit vectors on S^2 (golden-angle spiral)."""
    m = np.arange(n)
    z = 1.0 - 2.0 * (m + 0.5) / n
    rho = np.sqrt(np.maximum(1.0 - z * z, 0.0))
    phi = math.pi * (3.0 - math.sqrt(5.0)) * m
    return np.column_stack([rho * np.cos(phi), rho * np.sin(phi), z])


def seeded_rotation(seed: int) -> np.ndarray:
    """Deterministic uniform rotation matrix from a Philox stream."""
    rng = np.random.Generator(np.random.Philox(key=seed))
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
        [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
        [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
    ])


def sample_points(spec: SampleSpec, config, frame=None) -> Tuple[list, int]:
    """Admissible chart points for the spec; returns (points, dropped_count).

    Points violating the clearance, the string cones, or the chart range are
    dropped and counted.  Raises ConfigError when nothing survives.
    """
    from .ansatz import ChartPoint, Frame
    from .potential import off_strings, outer_clearance

    frame = Frame.OUTER if frame is None else frame
    r0, r1 = spec.radial_range
    radii = np.exp(np.linspace(np.log(r0), np.log(r1), spec.radial_count))
    dirs = fibonacci_directions(spec.angular_count) @ seeded_rotation(spec.seed).T
    rng = np.random.Generator(np.random.Philox(key=spec.seed))
    fibers = rng.uniform(0.0, 2.0 * math.pi, size=spec.radial_count * spec.angular_count)

    pts: List = []
    dropped = 0
    idx = 0
    for r in radii:
        for d in dirs:
            x = r * d
            fiber = fibers[idx]
            idx += 1
            if frame is Frame.OUTER:
                ok = outer_clearance(config, x) > config.clearance and off_strings(config, x)
            else:
                ok = r > 1.0 / config.delta and (
                    config.center_model_charge == 0.0
                    or off_strings(config, x, config.gauge)
                )
            if ok:
                pts.append(ChartPoint(base=x, fiber=fiber, frame=frame))
            else:
                dropped += 1
    if not pts:
        raise ConfigError("sampling produced no admissible points")
    return pts, dropped


@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    r_squared: float


def loglog_fit(xs: Sequence[float], ys: Sequence[float]) -> FitResult:
    """Least squares on (log x, log y); r^2 = 1 for constant data."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.size != y.size or x.size < 3:
        raise FitError("need at least 3 matching samples")
    if np.any(x <= 0.0) or np.any(y <= 0.0):
        raise FitError("log-log fit requires strictly positive data")
    lx, ly = np.log(x), np.log(y)
    A = np.column_stack([lx, np.ones_like(lx)])
    coef, *_ = np.linalg.lstsq(A, ly, rcond=None)
    resid = ly - A @ coef
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    if ss_tot <= 1e-300:
        r2 = 1.0
    else:
        r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot
    return FitResult(slope=float(coef[0]), intercept=float(coef[1]), r_squared=r2)


# -- artifact plumbing -----------------------------------------------------------


def format_float(v: float) -> str:
    """Shortest round-trip decimal form; keeps CSV output byte stable."""
    return format(float(v), ".17g")


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(
                format_float(v) if isinstance(v, float) else str(v) for v in row
            ) + "\n")


def config_digest(doc: dict) -> str:
    return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()


def report_envelope(command: str, config_doc: dict, results: dict,
                    timings: dict, timestamp: str) -> dict:
    return {
        "tool_version": TOOL_VERSION,
        "config_digest": config_digest(config_doc),
        "command": command,
        "results": results,
        "timings": timings,
        "timestamp": timestamp,
    }
