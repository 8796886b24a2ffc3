"""Chart-level assembly of the outer and center model metrics and triples.

Outer chart (coordinates x, fiber t, coframe (dx1, dx2, dx3, dt)):

    g   = h |dx|^2 / eps^2 + h^-1 (dt + A)^2
    w_i = (dx_i/eps) ^ (dt + A) + h (dx_j ^ dx_k)/eps^2      (cyclic)

Center chart (coordinates x', same fiber, coframe (dx'1, dx'2, dx'3, dt)):

    g'   = h' |dx'|^2 + h'^-1 (dt + A')^2
    w'_i = dx'_i ^ (dt + A') + h' dx'_j ^ dx'_k

Both triples close exactly because dA = (1/eps) * dh and dA' = * dh'.
The adiabatic coframe eta_i = dx_i/eps of the outer chart coincides with
dx'_i under the identification x = eps x', which is what makes the two
models directly comparable on the neck.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from .errors import DomainError, FrameError, PositivityError
from .forms import CoTriple
from .potential import (
    GaugeChart,
    MonopoleConfig,
    center_model_connection,
    eval_h,
    eval_h_center,
    neck_connection,
    require_center,
    require_outer,
    total_connection,
)


class Frame(Enum):
    OUTER = "outer"
    CENTER = "center"


@dataclass(frozen=True, eq=False)
class ChartPoint:
    """A point of a local trivialization: base coordinates plus fiber angle."""

    base: np.ndarray
    fiber: float = 0.0
    frame: Frame = Frame.OUTER

    def __post_init__(self):
        b = np.asarray(self.base, dtype=float)
        if b.shape != (3,) or not np.all(np.isfinite(b)):
            raise DomainError(f"base must be a finite 3-vector, got {self.base}")
        object.__setattr__(self, "base", b)
        object.__setattr__(self, "fiber", float(self.fiber) % (2.0 * math.pi))

    @property
    def chart4(self) -> np.ndarray:
        return np.append(self.base, self.fiber)


def chart_point(base, fiber: float = 0.0, frame: Frame = Frame.OUTER) -> ChartPoint:
    return ChartPoint(base=np.asarray(base, float), fiber=fiber, frame=frame)


def involution_pullback(p: ChartPoint) -> ChartPoint:
    """The mirror involution: base -> -base, fiber angle -> -fiber angle.

    An exact involution; the singular set is mirror symmetric, so
    admissibility is preserved.  In the two-sided string gauge it is an
    isometry in coordinates and fixes the triple componentwise.
    """
    return ChartPoint(base=-p.base, fiber=-p.fiber, frame=p.frame)


# -- Gibbons-Hawking form assembly ------------------------------------------------


def _gh_form_metric(h: float, A: np.ndarray, base_scale: float) -> np.ndarray:
    """Matrix of h*base_scale*|dx|^2 + h^-1 (dt + A)^2 in (dx, dt)."""
    if not h > 0.0:
        raise PositivityError(f"harmonic factor h={h} is not positive")
    g = np.zeros((4, 4))
    g[:3, :3] = (h * base_scale) * np.eye(3) + np.outer(A, A) / h
    g[:3, 3] = A / h
    g[3, :3] = A / h
    g[3, 3] = 1.0 / h
    return g


def _gh_form_triple(h: float, A: np.ndarray, s1: float, s2: float) -> CoTriple:
    """w_i = s1 * dx_i ^ (dt + A) + s2 * h * dx_j ^ dx_k, coefficients in (dx, dt)."""
    if not h > 0.0:
        raise PositivityError(f"harmonic factor h={h} is not positive")
    w = np.zeros((3, 4, 4))
    for i in range(3):
        j, k = (i + 1) % 3, (i + 2) % 3
        w[i, i, 3] += s1
        for a in range(3):
            if a != i:
                w[i, i, a] += s1 * A[a]
        w[i, j, k] += s2 * h
    return CoTriple(w - np.transpose(w, (0, 2, 1)))


def _outer_data(config: MonopoleConfig, p: ChartPoint, connection: str):
    if p.frame is not Frame.OUTER:
        raise FrameError("expected an OUTER chart point")
    x = require_outer(config, p.base)
    h = eval_h(config, x)
    if connection == "chart":
        A = total_connection(config, config.gauge, x)
    elif connection == "neck":
        A = neck_connection(config, x)
    else:
        raise FrameError(f"unknown connection mode {connection!r}")
    return x, h, A


def gh_metric(config: MonopoleConfig, p: ChartPoint, connection: str = "chart") -> np.ndarray:
    """Outer metric matrix in the chart coframe (dx1, dx2, dx3, dt)."""
    _, h, A = _outer_data(config, p, connection)
    return _gh_form_metric(h, A, 1.0 / config.epsilon ** 2)


def gh_triple(config: MonopoleConfig, p: ChartPoint, connection: str = "chart",
              adiabatic: bool = False) -> CoTriple:
    """Outer triple; ``adiabatic=True`` expresses it in (dx/eps, dt) instead.

    In the adiabatic coframe the component of A along eta_i = dx_i/eps is
    eps * A_i, and the h block is unscaled.
    """
    _, h, A = _outer_data(config, p, connection)
    if adiabatic:
        return _gh_form_triple(h, config.epsilon * A, 1.0, 1.0)
    return _gh_form_triple(h, A, 1.0 / config.epsilon, 1.0 / config.epsilon ** 2)


def _center_data(config: MonopoleConfig, p: ChartPoint):
    if p.frame is not Frame.CENTER:
        raise FrameError("expected a CENTER chart point")
    xp = require_center(config, p.base)
    return xp, eval_h_center(config, xp), center_model_connection(config, xp)


def ah_model_metric(config: MonopoleConfig, p: ChartPoint) -> np.ndarray:
    """Center-model metric matrix in the coframe (dx'1, dx'2, dx'3, dt)."""
    _, h, A = _center_data(config, p)
    return _gh_form_metric(h, A, 1.0)


def ah_model_triple(config: MonopoleConfig, p: ChartPoint) -> CoTriple:
    """Center-model triple in the coframe (dx'1, dx'2, dx'3, dt)."""
    _, h, A = _center_data(config, p)
    return _gh_form_triple(h, A, 1.0, 1.0)


def metric_at(config: MonopoleConfig, p: ChartPoint) -> np.ndarray:
    return gh_metric(config, p) if p.frame is Frame.OUTER else ah_model_metric(config, p)


def triple_at(config: MonopoleConfig, p: ChartPoint) -> CoTriple:
    return gh_triple(config, p) if p.frame is Frame.OUTER else ah_model_triple(config, p)


def fiber_length(config: MonopoleConfig, p: ChartPoint) -> float:
    """Length of the fiber circle through p: 2 pi h^{-1/2} (period 2 pi)."""
    if p.frame is Frame.OUTER:
        h = eval_h(config, require_outer(config, p.base))
    else:
        h = eval_h_center(config, require_center(config, p.base))
    if not h > 0.0:
        raise PositivityError(f"harmonic factor h={h} is not positive")
    return 2.0 * math.pi / math.sqrt(h)


def metric_field(config: MonopoleConfig, frame: Frame = Frame.OUTER,
                 connection: str = "chart"):
    """Callable y(4,) -> 4x4 metric, for finite-difference consumers."""
    if frame is Frame.OUTER:
        def f(y):
            return gh_metric(config, ChartPoint(base=y[:3], fiber=y[3]), connection)
    else:
        def f(y):
            return ah_model_metric(config, ChartPoint(base=y[:3], fiber=y[3], frame=Frame.CENTER))
    return f


def triple_field(config: MonopoleConfig, frame: Frame = Frame.OUTER,
                 connection: str = "chart", adiabatic: bool = False):
    """Callable y(4,) -> (3, 4, 4) triple coefficients."""
    if frame is Frame.OUTER:
        def f(y):
            return gh_triple(config, ChartPoint(base=y[:3], fiber=y[3]), connection, adiabatic).omega
    else:
        def f(y):
            return ah_model_triple(config, ChartPoint(base=y[:3], fiber=y[3], frame=Frame.CENTER)).omega
    return f
