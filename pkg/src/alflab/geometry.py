"""Finite-difference curvature, volume growth, and curvature-decay diagnostics.

Curvature comes from nested central differences of the metric: Christoffel
symbols from first differences, the Riemann tensor from differences of the
symbols, with one Richardson level on top.  Norms are taken in orthonormal
frames so they are honest scalars.

Ball volumes use the coordinate-annulus approximation with the exact metric
volume element h/eps^3 and fiber period 2 pi:

    V(r) = (2 pi / eps^3) * int_{clearance < |x| < r} h(x) dx
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .ansatz import ChartPoint, Frame, metric_field
from .errors import DomainError, FitError, PositivityError
from .potential import MonopoleConfig, eval_h, off_strings, outer_clearance
from .report import fibonacci_directions, loglog_fit, seeded_rotation

_FLAT_CURVATURE_FLOOR = 1e-9


@dataclass(frozen=True, eq=False)
class CurvatureSample:
    point: ChartPoint
    riemann_norm: float
    ricci_norm: float
    step: float

    def __post_init__(self):
        if self.riemann_norm < 0 or self.ricci_norm < 0 or self.step <= 0:
            raise DomainError("curvature norms must be >= 0 and step > 0")


def christoffel(metric_f: Callable[[np.ndarray], np.ndarray], x, step: float) -> np.ndarray:
    """Levi-Civita symbols Gamma^a_{bc} by central differences of the metric."""
    x = np.asarray(x, dtype=float)
    g0 = np.asarray(metric_f(x), dtype=float)
    try:
        ginv = np.linalg.inv(g0)
    except np.linalg.LinAlgError as exc:
        raise PositivityError(f"metric not invertible at {x}") from exc
    dg = np.empty((4, 4, 4))
    for a in range(4):
        ea = np.zeros(4)
        ea[a] = step
        dg[a] = (np.asarray(metric_f(x + ea), float) - np.asarray(metric_f(x - ea), float)) / (2 * step)
    # Gamma^a_{bc} = (1/2) g^{ad} (dg[b,d,c] + dg[c,d,b] - dg[d,b,c])
    return 0.5 * np.einsum(
        "ad,bdc->abc",
        ginv,
        dg.transpose(0, 1, 2) + dg.transpose(2, 1, 0) - dg.transpose(1, 0, 2),
    )


def _riemann_once(metric_f, x, step: float) -> np.ndarray:
    dG = np.empty((4, 4, 4, 4))
    for c in range(4):
        ec = np.zeros(4)
        ec[c] = step
        dG[c] = (christoffel(metric_f, x + ec, step) - christoffel(metric_f, x - ec, step)) / (2 * step)
    G = christoffel(metric_f, x, step)
    # R^a_{bcd} = dG[c,a,d,b] - dG[d,a,c,b] + G^a_{ce} G^e_{db} - G^a_{de} G^e_{cb}
    R = dG.transpose(1, 3, 0, 2) - dG.transpose(1, 3, 2, 0)
    R += np.einsum("ace,edb->abcd", G, G) - np.einsum("ade,ecb->abcd", G, G)
    return R


def riemann_tensor(metric_f, x, step: float, richardson: bool = True) -> np.ndarray:
    """R^a_{bcd} at x; one Richardson level when requested."""
    if richardson:
        return (4.0 * _riemann_once(metric_f, x, step / 2) - _riemann_once(metric_f, x, step)) / 3.0
    return _riemann_once(metric_f, x, step)


def curvature_norms(metric_f, x, step: float, richardson: bool = True) -> Tuple[float, float]:
    """Orthonormal-frame norms (|Rm|, |Ric|)."""
    x = np.asarray(x, dtype=float)
    R = riemann_tensor(metric_f, x, step, richardson)
    g = np.asarray(metric_f(x), dtype=float)
    gi = np.linalg.inv(g)
    Rl = np.einsum("ae,ebcd->abcd", g, R)
    rm2 = np.einsum("abcd,efgh,ae,bf,cg,dh->", Rl, Rl, gi, gi, gi, gi)
    ric = np.einsum("abad->bd", R)
    ric2 = np.einsum("bd,fh,bf,dh->", ric, ric, gi, gi)
    return float(np.sqrt(abs(rm2))), float(np.sqrt(abs(ric2)))


def _default_step(config: MonopoleConfig, x: np.ndarray) -> float:
    """Tuned curvature step: 1e-2 of the singular clearance (or of 1+|x|)."""
    clear = outer_clearance(config, x)
    if math.isinf(clear):
        clear = 1.0 + float(np.linalg.norm(x))
    return 1e-2 * clear


def ricci_norm(config: MonopoleConfig, p: ChartPoint, step: Optional[float] = None,
               richardson: bool = True) -> CurvatureSample:
    """Frame-orthonormal Ricci and Riemann norms of the outer metric at p."""
    if p.frame is not Frame.OUTER:
        raise DomainError("curvature sampling is defined on the OUTER chart")
    x = np.asarray(p.base, dtype=float)
    step = _default_step(config, x) if step is None else float(step)
    clear = outer_clearance(config, x)
    if clear <= 10.0 * step:
        raise DomainError(f"clearance {clear:.3e} below 10x step {step:.3e}")
    mf = metric_field(config)
    rm, ric = curvature_norms(mf, p.chart4, step, richardson)
    return CurvatureSample(point=p, riemann_norm=rm, ricci_norm=ric, step=step)


# -- volume growth ---------------------------------------------------------------


def ball_volume(config: MonopoleConfig, r: float, n_radial: int = 48,
                n_angular: int = 256) -> float:
    """Metric volume of the coordinate ball clearance < |x| < r.

    Log-radial Gauss-Legendre times a Fibonacci direction average of h; the
    fiber contributes its period 2 pi and the adiabatic factor 1/eps^3.
    """
    inner = config.clearance if config.is_charged else 0.0
    if inner == 0.0:
        # chargeless: h = 1 exactly
        return 2.0 * math.pi / config.epsilon ** 3 * (4.0 / 3.0) * math.pi * r ** 3
    if r <= inner:
        raise DomainError(f"radius {r} does not exceed the clearance {inner}")
    gl_x, gl_w = np.polynomial.legendre.leggauss(n_radial)
    lo, hi = math.log(inner), math.log(r)
    lr = 0.5 * (gl_x + 1.0) * (hi - lo) + lo
    wr = 0.5 * (hi - lo) * gl_w
    dirs = fibonacci_directions(n_angular)
    total = 0.0
    for li, wi in zip(lr, wr):
        rho = math.exp(li)
        hbar = np.mean([
            1.0 + sum(q / np.linalg.norm(rho * d - c) for q, c in config.charges())
            for d in dirs
        ])
        total += wi * rho ** 3 * hbar * 4.0 * math.pi
    return 2.0 * math.pi / config.epsilon ** 3 * total


@dataclass(frozen=True)
class VolumeFit:
    radii: Tuple[float, ...]
    volumes: Tuple[float, ...]
    exponent: float
    r_squared: float


def volume_growth(config: MonopoleConfig, radii: Sequence[float], n_radial: int = 48,
                  n_angular: int = 256) -> VolumeFit:
    """Fitted log-log exponent of V(r) over the given radii."""
    radii = [float(r) for r in radii]
    if len(radii) < 3 or any(b <= a for a, b in zip(radii, radii[1:])):
        raise FitError("need at least 3 strictly increasing radii")
    sing = config.singular_points()
    if sing.size and min(radii) <= np.max(np.linalg.norm(sing, axis=1)) + config.clearance:
        raise FitError("minimum radius must lie beyond all singular points")
    vols = [ball_volume(config, r, n_radial, n_angular) for r in radii]
    fit = loglog_fit(radii, vols)
    return VolumeFit(tuple(radii), tuple(vols), fit.slope, fit.r_squared)


# -- curvature decay --------------------------------------------------------------


@dataclass(frozen=True)
class DecayFit:
    radii: Tuple[float, ...]
    riemann_norms: Tuple[float, ...]
    exponent: Optional[float]
    r_squared: Optional[float]
    flat: bool
    tail_l2: Tuple[float, ...]


def curvature_decay(config: MonopoleConfig, radii: Sequence[float],
                    n_directions: int = 6, step_factor: float = 1e-2,
                    seed: int = 1) -> DecayFit:
    """Fit |Rm|(r) ~ r^-q and tabulate dyadic tail contributions to int |Rm|^2 dV.

    Flat data (|Rm| below 1e-9 everywhere) skips the fit and sets ``flat``.
    """
    radii = [float(r) for r in radii]
    if len(radii) < 3 or any(b <= a for a, b in zip(radii, radii[1:])):
        raise FitError("need at least 3 strictly increasing radii")
    dirs = fibonacci_directions(n_directions) @ seeded_rotation(seed).T
    mf = metric_field(config)
    norms = []
    for r in radii:
        vals = []
        for d in dirs:
            x = r * d
            if not off_strings(config, x):
                continue
            step = step_factor * min(outer_clearance(config, x), r)
            rm, _ = curvature_norms(mf, np.append(x, 0.0), step)
            vals.append(rm)
        if not vals:
            raise DomainError(f"no admissible directions at radius {r}")
        norms.append(float(np.mean(vals)))
    if max(norms) <= _FLAT_CURVATURE_FLOOR:
        return DecayFit(tuple(radii), tuple(norms), None, None, True, ())
    fit = loglog_fit(radii, norms)
    # tail of int |Rm|^2 dV over the sampled annuli (coordinate volume times
    # the metric element through the far-field h ~ 1 approximation)
    tails = []
    for (r0, rm0), (r1, rm1) in zip(zip(radii, norms), zip(radii[1:], norms[1:])):
        ann_vol = 2.0 * math.pi / config.epsilon ** 3 * 4.0 / 3.0 * math.pi * (r1 ** 3 - r0 ** 3)
        tails.append(0.25 * (rm0 + rm1) ** 2 * ann_vol)
    return DecayFit(tuple(radii), tuple(norms), -fit.slope, fit.r_squared, False, tuple(tails))
