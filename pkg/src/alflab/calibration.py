"""Areas, Kaehler fluxes, and calibration defects of discretized surfaces.

A surface is a parameter grid of chart points with analytic tangents and
midpoint quadrature weights.  The calibration defect is

    defect = Area(S) - |(int_S w_1, int_S w_2, int_S w_3)|

where the Euclidean norm of the flux vector realizes the supremum of
int_S (nu . w) over unit nu (the flux is linear in nu).  The defect is
nonnegative up to quadrature error and vanishes exactly when the surface is
holomorphic for one of the compatible complex structures.

Fiber-swept surfaces over a base curve have area (2 pi / eps) * EuclideanLength
and flux (2 pi / eps) * (endpoint difference): segments joining two nuts are
calibrated, and normal perturbations raise the area at second order while
the flux is pinned by the endpoints.

The recorded self-intersection of the center bolt sphere is metadata only;
no numeric intersection theory is performed.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .ansatz import Frame, _gh_form_metric, _gh_form_triple
from .errors import ConfigError, DomainError, GaugeError
from .potential import MonopoleConfig, monopole_potential, off_strings

#: recorded self-intersection number of the center bolt sphere (metadata)
BOLT_SPHERE_SELF_INTERSECTION = -4

#: surface nodes only need to avoid the singular points themselves, not the
#: finite-difference clearance ball; quadrature evaluates closed forms
_NODE_EXCLUSION = 1e-6


class SurfaceTopology(Enum):
    SPHERE = "sphere"


@dataclass(eq=False)
class ParamSurface:
    """Discretized closed parametrized surface with analytic tangents.

    ``base``/``fiber`` hold node coordinates on an (n_u, n_v) midpoint grid;
    the ``du_*``/``dv_*`` arrays are the parameter derivatives at the nodes;
    ``weights`` are positive cell weights summing to the parameter-domain
    measure.
    """

    base: np.ndarray
    fiber: np.ndarray
    du_base: np.ndarray
    dv_base: np.ndarray
    du_fiber: np.ndarray
    dv_fiber: np.ndarray
    weights: np.ndarray
    frame: Frame = Frame.OUTER
    topology: SurfaceTopology = SurfaceTopology.SPHERE
    homology_note: Optional[int] = None

    def __post_init__(self):
        self.base = np.asarray(self.base, dtype=float)
        nu, nv = self.base.shape[:2]
        if self.base.shape != (nu, nv, 3):
            raise ConfigError(f"base grid must have shape (n_u, n_v, 3), got {self.base.shape}")
        for name in ("fiber", "du_fiber", "dv_fiber", "weights"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != (nu, nv):
                raise ConfigError(f"{name} must have shape ({nu}, {nv}), got {arr.shape}")
            setattr(self, name, arr)
        for name in ("du_base", "dv_base"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != (nu, nv, 3):
                raise ConfigError(f"{name} must have shape ({nu}, {nv}, 3)")
            setattr(self, name, arr)
        if not np.all(self.weights > 0.0):
            raise ConfigError("quadrature weights must be positive")

    @property
    def resolution(self) -> Tuple[int, int]:
        return self.base.shape[0], self.base.shape[1]

    def reversed(self) -> "ParamSurface":
        """Opposite orientation: the u tangent flips, nodes stay put."""
        return ParamSurface(
            base=self.base, fiber=self.fiber,
            du_base=-self.du_base, dv_base=self.dv_base,
            du_fiber=-self.du_fiber, dv_fiber=self.dv_fiber,
            weights=self.weights, frame=self.frame,
            topology=self.topology, homology_note=self.homology_note,
        )

    def to_json_dict(self) -> dict:
        nu, nv = self.resolution
        nodes = np.concatenate([self.base, self.fiber[..., None]], axis=2)
        return {
            "topology": self.topology.value,
            "resolution": [nu, nv],
            "nodes": nodes.reshape(nu * nv, 4).tolist(),
            "homology_note": self.homology_note,
            "frame": self.frame.value,
            "tangents": {
                "du_base": self.du_base.reshape(nu * nv, 3).tolist(),
                "dv_base": self.dv_base.reshape(nu * nv, 3).tolist(),
                "du_fiber": self.du_fiber.reshape(nu * nv).tolist(),
                "dv_fiber": self.dv_fiber.reshape(nu * nv).tolist(),
            },
            "weights": self.weights.reshape(nu * nv).tolist(),
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "ParamSurface":
        nu, nv = d["resolution"]
        nodes = np.asarray(d["nodes"], dtype=float).reshape(nu, nv, 4)
        t = d["tangents"]
        return cls(
            base=nodes[..., :3],
            fiber=nodes[..., 3],
            du_base=np.asarray(t["du_base"], float).reshape(nu, nv, 3),
            dv_base=np.asarray(t["dv_base"], float).reshape(nu, nv, 3),
            du_fiber=np.asarray(t["du_fiber"], float).reshape(nu, nv),
            dv_fiber=np.asarray(t["dv_fiber"], float).reshape(nu, nv),
            weights=np.asarray(d["weights"], float).reshape(nu, nv),
            frame=Frame(d.get("frame", "outer")),
            topology=SurfaceTopology(d.get("topology", "sphere")),
            homology_note=d.get("homology_note"),
        )

    def dumps(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True)

    @classmethod
    def loads(cls, text: str) -> "ParamSurface":
        return cls.from_json_dict(json.loads(text))


# -- constructions ------------------------------------------------------------------


def _midpoints(n: int, length: float) -> np.ndarray:
    return (np.arange(n) + 0.5) / n * length


def _match_singular_point(config: MonopoleConfig, v: np.ndarray) -> np.ndarray:
    sing = config.singular_points()
    if sing.size:
        d = np.linalg.norm(sing - v, axis=1)
        i = int(np.argmin(d))
        if d[i] < 1e-9:
            return sing[i]
    raise DomainError(f"{v} is not a singular point of the configuration")


def _default_normal(direction: np.ndarray) -> np.ndarray:
    # Gram-Schmidt of e3 against the segment; fall back to e1 near the axis
    d = direction / np.linalg.norm(direction)
    n = np.array([0.0, 0.0, 1.0]) - d[2] * d
    if np.linalg.norm(n) < 1e-8:
        n = np.array([1.0, 0.0, 0.0]) - d[0] * d
    return n / np.linalg.norm(n)


def segment_sphere(
    config: MonopoleConfig,
    a,
    b,
    resolution: Tuple[int, int] = (32, 32),
    bump: float = 0.0,
    bump_direction=None,
    reparam: Optional[Callable[[np.ndarray], Tuple[np.ndarray, np.ndarray]]] = None,
) -> ParamSurface:
    """Fiber preimage of the segment [a, b] between two singular points.

    The fiber collapses at the endpoints, so the grid is a topological
    sphere.  ``bump`` displaces the base curve by bump * sin(pi u) along
    ``bump_direction`` (default: a unit normal of the segment), which is a
    normal perturbation vanishing at the endpoints.  ``reparam`` maps the
    uniform parameter to (s(u), s'(u)) for reparametrization tests.
    """
    a = _match_singular_point(config, np.asarray(a, dtype=float))
    b = _match_singular_point(config, np.asarray(b, dtype=float))
    seg = b - a
    length = float(np.linalg.norm(seg))
    if length < 1e-9:
        raise DomainError("segment endpoints coincide")
    # the open segment must clear every other singular point
    for q, c in config.charges():
        if np.allclose(c, a) or np.allclose(c, b):
            continue
        t = float(np.clip((c - a) @ seg / length ** 2, 0.0, 1.0))
        if np.linalg.norm(a + t * seg - c) <= config.clearance:
            raise DomainError(f"segment passes within clearance of the singular point {c}")
    n_u, n_v = resolution
    if n_u < 2 or n_v < 2:
        raise ConfigError("resolution must be at least 2x2")
    direction = None
    if bump != 0.0:
        direction = (_default_normal(seg) if bump_direction is None
                     else np.asarray(bump_direction, dtype=float))
        direction = direction - (direction @ seg) * seg / length ** 2
        nn = np.linalg.norm(direction)
        if nn < 1e-12:
            raise ConfigError("bump direction is parallel to the segment")
        direction = direction / nn

    us = _midpoints(n_u, 1.0)
    ts = _midpoints(n_v, 2.0 * math.pi)
    if reparam is None:
        s, ds = us, np.ones_like(us)
    else:
        s, ds = reparam(us)
    base = np.empty((n_u, n_v, 3))
    du_base = np.empty((n_u, n_v, 3))
    for iu in range(n_u):
        pos = a + s[iu] * seg
        tan = ds[iu] * seg
        if bump != 0.0:
            pos = pos + bump * math.sin(math.pi * s[iu]) * direction
            tan = tan + bump * math.pi * math.cos(math.pi * s[iu]) * ds[iu] * direction
        base[iu, :, :] = pos
        du_base[iu, :, :] = tan
    fiber = np.broadcast_to(ts, (n_u, n_v)).copy()
    w = (1.0 / n_u) * (2.0 * math.pi / n_v)
    return ParamSurface(
        base=base,
        fiber=fiber,
        du_base=du_base,
        dv_base=np.zeros((n_u, n_v, 3)),
        du_fiber=np.zeros((n_u, n_v)),
        dv_fiber=np.ones((n_u, n_v)),
        weights=np.full((n_u, n_v), w),
        frame=Frame.OUTER,
    )


def round_sphere_slice(center, radius: float, resolution: Tuple[int, int] = (24, 48),
                       fiber_angle: float = 0.0) -> ParamSurface:
    """Coordinate round sphere in a base slice (constant fiber angle)."""
    n_th, n_ph = resolution
    center = np.asarray(center, dtype=float)
    ths = _midpoints(n_th, math.pi)
    phs = _midpoints(n_ph, 2.0 * math.pi)
    TH, PH = np.meshgrid(ths, phs, indexing="ij")
    st, ct = np.sin(TH), np.cos(TH)
    sp, cp = np.sin(PH), np.cos(PH)
    base = center + radius * np.stack([st * cp, st * sp, ct], axis=2)
    du = radius * np.stack([ct * cp, ct * sp, -st], axis=2)
    dv = radius * np.stack([-st * sp, st * cp, np.zeros_like(st)], axis=2)
    w = (math.pi / n_th) * (2.0 * math.pi / n_ph)
    return ParamSurface(
        base=base,
        fiber=np.full((n_th, n_ph), fiber_angle),
        du_base=du,
        dv_base=dv,
        du_fiber=np.zeros((n_th, n_ph)),
        dv_fiber=np.zeros((n_th, n_ph)),
        weights=np.full((n_th, n_ph), w),
        frame=Frame.OUTER,
    )


# -- pointwise evaluation ------------------------------------------------------------


def _node_data(config: MonopoleConfig, x: np.ndarray):
    """(h, A) at a surface node, with the soft quadrature clearance."""
    h = 1.0
    for q, c in config.charges():
        d = float(np.linalg.norm(x - c))
        if d <= _NODE_EXCLUSION:
            raise DomainError(f"surface node {x} coincides with a singular point")
        h += q / d
    if not h > 0.0:
        raise DomainError(f"harmonic factor h={h} not positive at node {x}")
    if not off_strings(config, x):
        raise GaugeError(f"a Dirac string crosses the surface cell at {x}")
    A = np.zeros(3)
    for q, c in config.charges():
        A += monopole_potential(q, c, config.gauge, x)
    return h, A / config.epsilon


def _surface_quadrature(s: ParamSurface, config: MonopoleConfig):
    """Yield (weight, U, V, h, A) per node with 4-vector pushforward tangents."""
    if s.frame is not Frame.OUTER:
        raise DomainError("surface quadrature is implemented on the OUTER chart")
    nu, nv = s.resolution
    for iu in range(nu):
        for iv in range(nv):
            x = s.base[iu, iv]
            h, A = _node_data(config, x)
            U = np.append(s.du_base[iu, iv], s.du_fiber[iu, iv])
            V = np.append(s.dv_base[iu, iv], s.dv_fiber[iu, iv])
            yield s.weights[iu, iv], U, V, h, A


def area(s: ParamSurface, config: MonopoleConfig) -> float:
    """Quadrature of sqrt(det pullback metric) with the outer metric."""
    eps = config.epsilon
    total = 0.0
    for w, U, V, h, A in _surface_quadrature(s, config):
        g = _gh_form_metric(h, A, 1.0 / eps ** 2)
        E = float(U @ g @ U)
        F = float(U @ g @ V)
        G = float(V @ g @ V)
        total += w * math.sqrt(max(E * G - F * F, 0.0))
    return total


def flux(s: ParamSurface, config: MonopoleConfig) -> np.ndarray:
    """The three pullback integrals (int w_1, int w_2, int w_3)."""
    eps = config.epsilon
    out = np.zeros(3)
    for w, U, V, h, A in _surface_quadrature(s, config):
        tri = _gh_form_triple(h, A, 1.0 / eps, 1.0 / eps ** 2)
        for i in range(3):
            out[i] += w * float(U @ tri.omega[i] @ V)
    return out


def calibration_defect(s: ParamSurface, config: MonopoleConfig) -> float:
    """Area minus the Euclidean norm of the flux vector.

    |flux| equals max over unit nu of int_S (nu . w), so the defect is the
    gap in the calibration bound; it vanishes exactly on holomorphic
    surfaces.
    """
    return area(s, config) - float(np.linalg.norm(flux(s, config)))


# -- refinement reports ---------------------------------------------------------------


def area_refined(builder: Callable[[int], ParamSurface], config: MonopoleConfig,
                 levels: int = 3) -> Tuple[float, List[float]]:
    """Richardson-extrapolated area from a resolution-doubling builder.

    ``builder(level)`` returns the surface at refinement level 0..levels-1;
    the midpoint rule converges at second order, so each Richardson stage
    gains two orders.
    """
    if levels < 2:
        raise ConfigError("need at least two refinement levels")
    table = [area(builder(lv), config) for lv in range(levels)]
    column = list(table)
    power = 4.0
    while len(column) > 1:
        column = [(power * b - a) / (power - 1.0) for a, b in zip(column, column[1:])]
        power *= 4.0
    return column[0], table


def defect_report(builder: Callable[[int], ParamSurface], config: MonopoleConfig,
                  levels: int = 4) -> List[Tuple[int, float, float, float]]:
    """Rows (level, area, |flux|, defect) over refinement levels."""
    rows = []
    for lv in range(levels):
        s = builder(lv)
        a = area(s, config)
        f = float(np.linalg.norm(flux(s, config)))
        rows.append((lv, a, f, a - f))
    return rows


def write_defect_csv(path, rows: Sequence[Tuple[int, float, float, float]]) -> None:
    from .report import write_csv

    write_csv(path, ("level", "area", "flux_norm", "defect"), rows)


# -- experimental area descent ---------------------------------------------------------


def _with_fd_tangents(s: ParamSurface) -> ParamSurface:
    """Rebuild the base tangents from the node grid by finite differences.

    u is treated as non-periodic (collapsed ends), v as periodic.  The
    fiber tangents are kept; this makes the discrete area a function of the
    node positions alone.
    """
    nu, nv = s.resolution
    du = np.gradient(s.base, 1.0 / nu, axis=0)
    dv = (np.roll(s.base, -1, axis=1) - np.roll(s.base, 1, axis=1)) / (2 * (2 * math.pi / nv))
    return ParamSurface(
        base=s.base.copy(), fiber=s.fiber.copy(),
        du_base=du, dv_base=dv,
        du_fiber=s.du_fiber.copy(), dv_fiber=s.dv_fiber.copy(),
        weights=s.weights.copy(), frame=s.frame,
        topology=s.topology, homology_note=s.homology_note,
    )


def descend_area(s: ParamSurface, config: MonopoleConfig, steps: int = 5,
                 rate: float = 1e-3, experimental: bool = False) -> ParamSurface:
    """Node-wise gradient descent of the discrete area at fixed topology.

    Experimental and off by default (pass ``experimental=True``); plumbing
    only, no minimality claim.  The discrete area is evaluated with
    finite-difference tangents so it actually depends on the nodes; pass
    ``steps=0`` to obtain the rebuilt surface without descending.  Endpoint
    rows are pinned.
    """
    if not experimental:
        raise ConfigError("descend_area is experimental; pass experimental=True")
    cur = _with_fd_tangents(s)
    nu, nv = cur.resolution
    h = 1e-5
    for _ in range(steps):
        grad = np.zeros_like(cur.base)
        for iu in range(1, nu - 1):
            for iv in range(nv):
                for ax in range(3):
                    cur.base[iu, iv, ax] += h
                    ap = area(_with_fd_tangents(cur), config)
                    cur.base[iu, iv, ax] -= 2 * h
                    am = area(_with_fd_tangents(cur), config)
                    cur.base[iu, iv, ax] += h
                    grad[iu, iv, ax] = (ap - am) / (2 * h)
        cur.base -= rate * grad
        cur = _with_fd_tangents(cur)
    return cur
