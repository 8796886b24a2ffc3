"""Neck identification, cutoff patching, and the epsilon-convergence study.

The outer and center models are compared in the shared adiabatic coframe
(dx/eps, dt) = (dx', dt) through the identification x' = x/eps with fiber
angles matched.  Both models carry exact Gibbons-Hawking data (h, A), so
their convex combination

    w_chi = chi * w_center + (1 - chi) * w_outer

is again of Gibbons-Hawking form with h_chi = h + chi (h' - h) and
A_chi = A + chi (A' - A).  Two consequences drive the tests here:

* The algebraic constraint Q(w_chi) vanishes identically: any triple of the
  form w_i = eta_i ^ beta + f eta_j ^ eta_k has pairwise wedge products zero
  and equal squares, whatever (f, beta) are.  The pointwise q defect of the
  patched family is therefore machine zero, not O(eps^3).
* The closedness defect d(w_chi) = dchi ^ (w' - w) is supported exactly in
  the cutoff transition and scales like eps^3 there, provided the connection
  mismatch A' - A is measured in a gauge where it is quadrupole small (the
  radial neck gauge) and the transition band sits at fixed x' radii.

The transition is therefore parametrized by fixed center-chart radii
(factors/delta), mapped to outer radii (eps * factor/delta) per epsilon.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .ansatz import ChartPoint, Frame, _gh_form_metric, _gh_form_triple, gh_triple
from .errors import ConfigError, DomainError, FitError, FrameError
from .forms import CoTriple, exterior_derivative, form_sup_norm, metric_from_triple, q_defect
from .potential import (
    MonopoleConfig,
    center_model_connection,
    eval_h,
    eval_h_center,
    h_mismatch,
    neck_connection,
    off_strings,
    pair_connection_radial,
    require_center,
)
from .report import SampleSpec, fibonacci_directions, loglog_fit, seeded_rotation

#: default transition band in units of 1/delta (center-chart radii)
DEFAULT_TRANSITION_FACTORS = (1.3, 2.0)

#: pointwise defects below this are reported as exact zeros of the model
DEFECT_FLOOR = 1e-12


@dataclass(frozen=True)
class NeckSpec:
    """Neck annulus (outer coordinates) and the cutoff transition inside it."""

    inner_radius: float
    outer_radius: float
    transition: Tuple[float, float]

    def __post_init__(self):
        l0, l1 = self.transition
        if not (self.inner_radius < l0 < l1 < self.outer_radius):
            raise ConfigError(
                f"transition {self.transition} must sit strictly inside the neck "
                f"({self.inner_radius}, {self.outer_radius})"
            )

    @classmethod
    def for_config(cls, config: MonopoleConfig,
                   factors: Tuple[float, float] = DEFAULT_TRANSITION_FACTORS) -> "NeckSpec":
        """Transition at fixed center-chart radii factors/delta.

        The cutoff then lives at |x'| in [f0/delta, f1/delta] for every
        epsilon, which keeps the patching error a clean power of epsilon.
        Requires epsilon < delta^2 / f1.
        """
        f0, f1 = factors
        if not 1.0 < f0 < f1:
            raise ConfigError(f"transition factors must satisfy 1 < f0 < f1, got {factors}")
        eps, delta = config.epsilon, config.delta
        if not eps * f1 / delta < delta:
            raise ConfigError(
                f"epsilon={eps} too large for transition factor {f1}: needs eps < delta^2/f1"
            )
        return cls(
            inner_radius=eps / delta,
            outer_radius=delta,
            transition=(eps * f0 / delta, eps * f1 / delta),
        )


@dataclass(frozen=True, eq=False)
class ErrorSample:
    """Pointwise defects of the patched triple at one chart point."""

    point: ChartPoint
    q_defect: float
    closedness_defect: float
    epsilon: float

    def __post_init__(self):
        if self.q_defect < 0 or self.closedness_defect < 0:
            raise ConfigError("defects must be nonnegative")


@dataclass(frozen=True)
class ScalingFit:
    """Sup defects over an epsilon family and the fitted log-log exponent."""

    epsilons: Tuple[float, ...]
    sup_defects: Tuple[float, ...]
    slope: float
    r_squared: float
    kind: str = "closedness"

    def __post_init__(self):
        if len(self.epsilons) != len(self.sup_defects) or len(self.epsilons) < 4:
            raise ConfigError("need matching lists of at least 4 epsilon values")
        if not all(a > b for a, b in zip(self.epsilons, self.epsilons[1:])):
            raise ConfigError("epsilons must be strictly decreasing")


# -- identification and cutoff ------------------------------------------------------


def kappa(x, epsilon: float) -> np.ndarray:
    """Neck identification x' = x / epsilon."""
    if not epsilon > 0.0:
        raise ConfigError(f"epsilon={epsilon} must be positive")
    return np.asarray(x, dtype=float) / epsilon


def kappa_inverse(x_prime, epsilon: float) -> np.ndarray:
    if not epsilon > 0.0:
        raise ConfigError(f"epsilon={epsilon} must be positive")
    return np.asarray(x_prime, dtype=float) * epsilon


def _smoothstep(u: float) -> float:
    # quintic: C^2 with vanishing first and second derivatives at 0 and 1
    return u * u * u * (10.0 + u * (-15.0 + 6.0 * u))


def cutoff(x, spec: NeckSpec) -> float:
    """Cutoff chi: 1 toward the center model, 0 toward the outer model.

    chi = 1 for |x| <= l0, chi = 0 for |x| >= l1, and a quintic smoothstep in
    log|x| between, so chi is C^2 and monotone nonincreasing in |x|.  Returns
    exact 0.0 and 1.0 outside the transition.
    """
    r = float(np.linalg.norm(np.asarray(x, dtype=float)))
    l0, l1 = spec.transition
    if r <= l0:
        return 1.0
    if r >= l1:
        return 0.0
    u = (np.log(r) - np.log(l0)) / (np.log(l1) - np.log(l0))
    return 1.0 - _smoothstep(u)


# -- the patched family -------------------------------------------------------------


def _patched_data(config: MonopoleConfig, spec: NeckSpec, x: np.ndarray):
    """(h, A) of the patched Gibbons-Hawking pair in the adiabatic coframe.

    The mixing is written through the exact model differences so the pure
    regions reproduce the models bitwise and no leading-order cancellation
    happens in floating point:

        h_chi = h' + (1 - chi) * (h - h')
        A_chi = A' + (1 - chi) * (A - A')

    where h - h' is the far-pair quadrupole tail and A - A' is the radial
    gauge pair potential (both O(eps^3) on fixed x' windows).
    """
    eps = config.epsilon
    chi = cutoff(x, spec)
    xp = x / eps
    if chi == 0.0:
        h = eval_h(config, x)
        A = eps * neck_connection(config, x)
        return h, A, chi
    xp = require_center(config, xp)
    h_c = eval_h_center(config, xp)
    A_c = center_model_connection(config, xp)
    if chi == 1.0:
        return h_c, A_c, chi
    dh = h_mismatch(config, xp)
    dA = config.epsilon * pair_connection_radial(config, x)
    return h_c + (1.0 - chi) * dh, A_c + (1.0 - chi) * dA, chi


def _require_outer_base(config: MonopoleConfig, p: ChartPoint) -> np.ndarray:
    if p.frame is not Frame.OUTER:
        raise FrameError("patching expects an OUTER chart point")
    return np.asarray(p.base, dtype=float)


def patched_triple(config: MonopoleConfig, spec: NeckSpec, p: ChartPoint) -> CoTriple:
    """Convex combination of the two model triples in the adiabatic coframe.

    Coefficients are relative to (dx/eps, dt) = (dx', dt).  Outside the
    transition the result is bitwise the respective model: the outer triple
    in the neck gauge for |x| >= l1, the pulled-back center triple for
    |x| <= l0.
    """
    x = _require_outer_base(config, p)
    h, A, chi = _patched_data(config, spec, x)
    if 0.0 < chi < 1.0 and np.linalg.norm(x / config.epsilon) <= 1.0 / config.delta:
        raise FrameError("transition point not expressible in the center chart")
    return _gh_form_triple(h, A, 1.0, 1.0)


def patched_metric(config: MonopoleConfig, spec: NeckSpec, p: ChartPoint) -> np.ndarray:
    """Metric of the patched pair in the adiabatic coframe (dx', dt)."""
    x = _require_outer_base(config, p)
    h, A, _ = _patched_data(config, spec, x)
    return _gh_form_metric(h, A, 1.0)


def patched_metric_field(config: MonopoleConfig, spec: NeckSpec) -> Callable[[np.ndarray], np.ndarray]:
    """Callable y(4,) -> metric, y in center-chart coordinates (x', t)."""

    def f(y):
        x = kappa_inverse(y[:3], config.epsilon)
        h, A, _ = _patched_data(config, spec, x)
        return _gh_form_metric(h, A, 1.0)

    return f


def _fd_step(config: MonopoleConfig, spec: NeckSpec, xp: np.ndarray,
             step_factor: float) -> float:
    """Step for center-chart stencils: relative to the singular clearance,
    capped so stencils from the pure regions never cross the transition."""
    rp = float(np.linalg.norm(xp))
    eps = config.epsilon
    clear = rp - 1.0 / config.delta
    for _, c in config.charges():
        if np.linalg.norm(c) > 0:
            clear = min(clear, float(np.linalg.norm(eps * xp - c)) / eps)
    l0p, l1p = spec.transition[0] / eps, spec.transition[1] / eps
    if rp < l0p:
        cap = 0.5 * (l0p - rp)
    elif rp > l1p:
        cap = 0.5 * (rp - l1p)
    else:
        cap = clear
    return min(step_factor * clear, cap)


def error_field(config: MonopoleConfig, spec: NeckSpec, p: ChartPoint,
                step_factor: float = 1e-4, richardson: bool = True) -> ErrorSample:
    """Pointwise q and closedness defects of the patched triple at p (OUTER).

    The q defect is the dimensionless Frobenius/mu measure; the closedness
    defect is the max orthonormal-frame component of the finite-difference
    exterior derivative of the three patched forms.
    """
    x = _require_outer_base(config, p)
    eps = config.epsilon
    xp = x / eps
    tri = patched_triple(config, spec, p)
    qd = q_defect(tri)
    g = metric_from_triple(tri)
    step = _fd_step(config, spec, xp, step_factor)

    def field_i(i):
        def f(y):
            q = ChartPoint(base=kappa_inverse(y[:3], eps), fiber=y[3])
            return patched_triple(config, spec, q).omega[i]
        return f

    y0 = np.append(xp, p.fiber)
    cd = 0.0
    for i in range(3):
        T = exterior_derivative(field_i(i), y0, step, richardson=richardson)
        cd = max(cd, form_sup_norm(T, g))
    return ErrorSample(point=p, q_defect=qd, closedness_defect=cd, epsilon=eps)


# -- sampling and the convergence study ------------------------------------------------


def transition_samples(config: MonopoleConfig, spec: NeckSpec, samples: SampleSpec,
                       margin: float = 0.04) -> List[ChartPoint]:
    """Deterministic points inside the cutoff transition (OUTER coordinates).

    Log-spaced radii with a small log margin from the transition edges,
    crossed with a seeded rotation of the Fibonacci direction set.  String
    directions are dropped.
    """
    l0, l1 = spec.transition
    logr = np.linspace(np.log(l0) + margin, np.log(l1) - margin, samples.radial_count)
    dirs = fibonacci_directions(samples.angular_count) @ seeded_rotation(samples.seed).T
    rng = np.random.Generator(np.random.Philox(key=samples.seed))
    pts = []
    for lr in logr:
        for d in dirs:
            x = np.exp(lr) * d
            if not off_strings(config, x):
                continue
            pts.append(ChartPoint(base=x, fiber=rng.uniform(0.0, 2.0 * np.pi)))
    if not pts:
        raise ConfigError("no admissible transition samples")
    return pts


def scaling_study(
    config: MonopoleConfig,
    epsilons: Sequence[float],
    samples: SampleSpec,
    defect: str = "closedness",
    transition_factors: Tuple[float, float] = DEFAULT_TRANSITION_FACTORS,
    defect_fn: Optional[Callable[[MonopoleConfig, NeckSpec, ChartPoint], float]] = None,
    threads: int = 1,
) -> ScalingFit:
    """Fit log(sup defect over the transition) against log(epsilon).

    ``config`` is the template; each study point rebuilds it at one epsilon
    with charges re-defaulted.  The sample set is identical in center-chart
    coordinates across the family (the transition sits at fixed x' radii),
    so the sups are directly comparable.  ``defect_fn`` overrides the
    measured defect (used by the fit sanity tests).
    """
    eps_list = [float(e) for e in epsilons]
    if len(eps_list) < 4:
        raise ConfigError("need at least 4 epsilon values")
    if sorted(eps_list, reverse=True) != eps_list:
        eps_list = sorted(eps_list, reverse=True)
    if any(e >= config.delta ** 2 for e in eps_list):
        raise ConfigError("every study epsilon must be below delta^2")
    if defect not in ("closedness", "q"):
        raise ConfigError(f"unknown defect kind {defect!r}")

    sups = []
    for eps in eps_list:
        cfg = config.with_epsilon(eps)
        spec = NeckSpec.for_config(cfg, transition_factors)
        pts = transition_samples(cfg, spec, samples)

        if defect_fn is not None:
            vals = [defect_fn(cfg, spec, p) for p in pts]
        else:
            def one(p):
                s = error_field(cfg, spec, p)
                return s.q_defect if defect == "q" else s.closedness_defect

            if threads > 1:
                with ThreadPoolExecutor(max_workers=threads) as ex:
                    vals = list(ex.map(one, pts))
            else:
                vals = [one(p) for p in pts]
        sups.append(max(vals))

    if max(sups) <= DEFECT_FLOOR:
        raise FitError(
            f"all sup defects are at the numerical floor (max {max(sups):.2e}); "
            "nothing to fit"
        )
    fit = loglog_fit(eps_list, sups)
    if fit.r_squared < 0.9:
        raise FitError(f"log-log fit quality r^2={fit.r_squared:.3f} below 0.9")
    return ScalingFit(
        epsilons=tuple(eps_list),
        sup_defects=tuple(sups),
        slope=fit.slope,
        r_squared=fit.r_squared,
        kind=defect,
    )


# -- serialization -----------------------------------------------------------------


def write_error_samples_csv(path, rows: Iterable[ErrorSample]) -> None:
    """CSV columns: epsilon, radius, q_defect, closedness_defect."""
    from .report import write_csv

    write_csv(
        path,
        ("epsilon", "radius", "q_defect", "closedness_defect"),
        (
            (s.epsilon, float(np.linalg.norm(s.point.base)), s.q_defect, s.closedness_defect)
            for s in rows
        ),
    )


def scaling_summary_dict(fit: ScalingFit, extra: Optional[dict] = None) -> dict:
    doc = {
        "slope": fit.slope,
        "r_squared": fit.r_squared,
        "sup_table": [list(pair) for pair in zip(fit.epsilons, fit.sup_defects)],
        "kind": fit.kind,
    }
    if extra:
        doc.update(extra)
    return doc


def write_scaling_json(path, fit: ScalingFit, extra: Optional[dict] = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(scaling_summary_dict(fit, extra), fh, sort_keys=True, indent=1)
        fh.write("\n")
