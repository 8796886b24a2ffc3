"""Harmonic functions and monopole connection potentials on R^3.

The outer model is built from the singular harmonic function

    h(x) = 1 + c0/|x| + sum_v cp * (1/|x + p_v| + 1/|x - p_v|)

with a signed center charge c0 (default -epsilon) and a pair charge cp
(default epsilon/2) at the mirror-symmetric points +-p_v.  The connection
1-form A satisfies dA = (1/epsilon) * flat-star dh, i.e. each summand is a
Dirac monopole potential of charge c/epsilon.

The center model lives in rescaled coordinates x' and uses

    h'(x') = 1 + (c0/epsilon)/|x'| + sum_v 2*cp/|p_v|

which is the leading part of h under x = epsilon * x'.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np

from .errors import ConfigError, DomainError, GaugeError

Vec3 = np.ndarray

# Fixed Gauss-Legendre rule on [0, 1] for the radial-gauge line integral.
# The integrand is analytic on the admissible domain, so 32 nodes reach
# machine accuracy there.
_GL_X, _GL_W = np.polynomial.legendre.leggauss(32)
_GL_T = 0.5 * (_GL_X + 1.0)
_GL_W = 0.5 * _GL_W

#: evaluation is rejected closer than max(2*epsilon, _MIN_CLEARANCE) to a
#: charged singular point
_MIN_CLEARANCE = 1e-3


def _as_vec3(x) -> Vec3:
    v = np.asarray(x, dtype=float)
    if v.shape != (3,):
        raise ConfigError(f"expected a 3-vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ConfigError("vector has non-finite entries")
    return v


@dataclass(frozen=True)
class GaugeChart:
    """Gauge data for the Dirac monopole potentials.

    ``two_sided=True`` splits the string symmetrically along both rays of the
    axis, which makes the potential even under x -> -x about each center and
    keeps the mirror involution an exact isometry in coordinates.  The
    classical one-sided string (along ``string_direction``) is kept for
    oracle tests.
    """

    string_direction: Tuple[float, float, float] = (0.0, 0.0, -1.0)
    excluded_cone_halfangle: float = 1e-2
    two_sided: bool = True

    def __post_init__(self):
        d = _as_vec3(self.string_direction)
        n = np.linalg.norm(d)
        if n == 0.0:
            raise ConfigError("string_direction must be nonzero")
        object.__setattr__(self, "string_direction", tuple(d / n))
        if not 0.0 < self.excluded_cone_halfangle < 0.5:
            raise ConfigError("excluded_cone_halfangle must lie in (0, 0.5) rad")

    @property
    def axis(self) -> Vec3:
        return np.asarray(self.string_direction)

    def to_json_dict(self) -> dict:
        return {
            "string_direction": list(self.string_direction),
            "cone_halfangle": self.excluded_cone_halfangle,
            "two_sided": self.two_sided,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "GaugeChart":
        return cls(
            string_direction=tuple(d.get("string_direction", (0.0, 0.0, -1.0))),
            excluded_cone_halfangle=float(d.get("cone_halfangle", 1e-2)),
            two_sided=bool(d.get("two_sided", True)),
        )


@dataclass(frozen=True)
class MonopoleConfig:
    """Parameters of the outer harmonic function and the glued geometry.

    ``epsilon`` is the adiabatic scale, ``delta`` the neck parameter.  The
    charged singular set is {0} (when center_charge != 0) together with the
    mirror pairs +-p_v (when pair_charge != 0); it is closed under x -> -x
    by construction.
    """

    epsilon: float
    delta: float
    points: Tuple[Tuple[float, float, float], ...] = ()
    center_charge: Optional[float] = None
    pair_charge: Optional[float] = None
    gauge: GaugeChart = field(default_factory=GaugeChart)

    def __post_init__(self):
        pts = tuple(tuple(_as_vec3(p)) for p in self.points)
        object.__setattr__(self, "points", pts)
        if self.center_charge is None:
            object.__setattr__(self, "center_charge", -self.epsilon)
        if self.pair_charge is None:
            object.__setattr__(self, "pair_charge", self.epsilon / 2.0)
        self._validate()

    def _validate(self):
        if not (self.epsilon > 0.0 and math.isfinite(self.epsilon)):
            raise ConfigError("epsilon must be positive and finite")
        if not (0.0 < self.delta < 0.5):
            raise ConfigError("delta must lie in (0, 1/2)")
        # The adiabatic band epsilon < delta^2 matters only when the config
        # actually carries charges; chargeless (flat) configs are exempt so
        # that epsilon = 1 product data can be built.
        if self.is_charged and not self.epsilon < self.delta ** 2:
            raise ConfigError(
                f"epsilon={self.epsilon} must be < delta^2={self.delta ** 2} "
                "for a charged configuration"
            )
        arr = self.points_array
        for i, p in enumerate(arr):
            if np.linalg.norm(p) <= self.clearance:
                raise ConfigError(
                    f"point {i} has |p|={np.linalg.norm(p)} inside the clearance "
                    f"{self.clearance} of the origin"
                )
        for i in range(len(arr)):
            for j in range(i + 1, len(arr)):
                if np.linalg.norm(arr[i] - arr[j]) < 1e-12 or np.linalg.norm(arr[i] + arr[j]) < 1e-12:
                    raise ConfigError(f"points {i} and {j} collide (directly or as mirrors)")

    # -- basic derived data -------------------------------------------------

    @property
    def k(self) -> int:
        return len(self.points)

    @property
    def points_array(self) -> np.ndarray:
        return np.asarray(self.points, dtype=float).reshape(self.k, 3)

    @property
    def is_charged(self) -> bool:
        return self.center_charge != 0.0 or (self.pair_charge != 0.0 and self.k > 0)

    @property
    def clearance(self) -> float:
        return max(2.0 * self.epsilon, _MIN_CLEARANCE)

    def charges(self) -> list:
        """List of (charge, center) pairs entering h, charged centers only."""
        out = []
        if self.center_charge != 0.0:
            out.append((self.center_charge, np.zeros(3)))
        if self.pair_charge != 0.0:
            for p in self.points_array:
                out.append((self.pair_charge, p.copy()))
                out.append((self.pair_charge, -p))
        return out

    def singular_points(self) -> np.ndarray:
        return np.asarray([c for _, c in self.charges()]).reshape(-1, 3)

    @property
    def total_charge(self) -> float:
        return self.center_charge + 2.0 * self.k * self.pair_charge

    @property
    def center_model_charge(self) -> float:
        """Monopole charge of the center model (its 1/|x'| coefficient)."""
        return self.center_charge / self.epsilon

    @property
    def center_model_constant(self) -> float:
        """Constant term the far pairs contribute to the center model."""
        return sum(2.0 * self.pair_charge / np.linalg.norm(p) for p in self.points_array)

    def with_epsilon(self, epsilon: float) -> "MonopoleConfig":
        """Same geometry at another adiabatic scale, charges re-defaulted."""
        cc = None if self.center_charge == -self.epsilon else self.center_charge
        pc = None if self.pair_charge == self.epsilon / 2.0 else self.pair_charge
        return replace(self, epsilon=epsilon, center_charge=cc, pair_charge=pc)

    # -- JSON ----------------------------------------------------------------

    def to_json_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "delta": self.delta,
            "points": [list(p) for p in self.points],
            "center_charge": self.center_charge,
            "pair_charge": self.pair_charge,
            "gauge": self.gauge.to_json_dict(),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True)

    @classmethod
    def from_json_dict(cls, d: dict) -> "MonopoleConfig":
        try:
            return cls(
                epsilon=float(d["epsilon"]),
                delta=float(d["delta"]),
                points=tuple(tuple(map(float, p)) for p in d.get("points", ())),
                center_charge=None if d.get("center_charge") is None else float(d["center_charge"]),
                pair_charge=None if d.get("pair_charge") is None else float(d["pair_charge"]),
                gauge=GaugeChart.from_json_dict(d.get("gauge", {})),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"malformed config document: {exc}") from exc

    @classmethod
    def loads(cls, text: str) -> "MonopoleConfig":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        return cls.from_json_dict(doc)

    def digest(self) -> str:
        return hashlib.sha256(self.dumps().encode()).hexdigest()


#: default point sets for the k = 1, 2, 3 study configurations; mildly
#: asymmetric so no accidental symmetry hides a convention bug
_DEFAULT_POINTS = (
    (1.5, 0.3, 0.2),
    (-0.4, 1.7, -0.5),
    (0.8, -1.1, 1.2),
)


def default_config(k: int, epsilon: float = 0.05, delta: float = 0.3, **kwargs) -> MonopoleConfig:
    """Study configuration with k default points."""
    if not 0 <= k <= len(_DEFAULT_POINTS):
        raise ConfigError(f"no default point set for k={k}")
    return MonopoleConfig(epsilon=epsilon, delta=delta, points=_DEFAULT_POINTS[:k], **kwargs)


def flat_config(epsilon: float = 1.0, delta: float = 0.3) -> MonopoleConfig:
    """Chargeless product data R^3 x S^1 (h = 1, A = 0)."""
    return MonopoleConfig(epsilon=epsilon, delta=delta, points=(), center_charge=0.0, pair_charge=0.0)


# -- domain guards ------------------------------------------------------------


def outer_clearance(config: MonopoleConfig, x) -> float:
    """Distance from x to the charged singular set (inf when uncharged)."""
    x = _as_vec3(x)
    charges = config.charges()
    if not charges:
        return math.inf
    return min(float(np.linalg.norm(x - c)) for _, c in charges)


def require_outer(config: MonopoleConfig, x) -> Vec3:
    x = _as_vec3(x)
    if outer_clearance(config, x) <= config.clearance:
        raise DomainError(
            f"point {x} lies within clearance {config.clearance} of a singular point"
        )
    return x


def require_center(config: MonopoleConfig, x_prime) -> Vec3:
    xp = _as_vec3(x_prime)
    if np.linalg.norm(xp) <= 1.0 / config.delta:
        raise DomainError(f"|x'|={np.linalg.norm(xp)} must exceed 1/delta={1.0 / config.delta}")
    return xp


def in_string_cone(chart: GaugeChart, center, x) -> bool:
    """Whether x falls inside the excluded cone(s) of the string through center."""
    u = _as_vec3(x) - _as_vec3(center)
    r = np.linalg.norm(u)
    if r == 0.0:
        return True
    c = float(u @ chart.axis) / r
    lim = math.cos(chart.excluded_cone_halfangle)
    return abs(c) > lim if chart.two_sided else c > lim


def off_strings(config: MonopoleConfig, x, chart: Optional[GaugeChart] = None) -> bool:
    chart = config.gauge if chart is None else chart
    return not any(in_string_cone(chart, c, x) for _, c in config.charges())


# -- harmonic functions --------------------------------------------------------


def eval_h(config: MonopoleConfig, x) -> float:
    """The outer harmonic function h at x."""
    x = require_outer(config, x)
    total = 1.0
    for q, c in config.charges():
        total += q / float(np.linalg.norm(x - c))
    return total


def grad_h(config: MonopoleConfig, x) -> Vec3:
    """Analytic gradient of h; each summand is -q (x - c)/|x - c|^3."""
    x = require_outer(config, x)
    g = np.zeros(3)
    for q, c in config.charges():
        d = x - c
        g -= q * d / float(np.linalg.norm(d)) ** 3
    return g


def _h_center_value(center_model_charge: float, constant: float, x_prime) -> float:
    """Unguarded center-model formula 1 + q'/|x'| + constant."""
    return 1.0 + center_model_charge / float(np.linalg.norm(x_prime)) + constant


def eval_h_center(config: MonopoleConfig, x_prime) -> float:
    """The center-model harmonic function h' on |x'| > 1/delta."""
    xp = require_center(config, x_prime)
    return _h_center_value(config.center_model_charge, config.center_model_constant, xp)


def h_mismatch(config: MonopoleConfig, x_prime) -> float:
    """h(eps x') - h'(x'), written so the leading terms cancel exactly.

    Only the far-pair quadrupole tails survive; on a fixed x' window the
    value scales like epsilon^3.
    """
    xp = _as_vec3(x_prime)
    x = config.epsilon * xp
    out = 0.0
    for p in config.points_array:
        out += config.pair_charge * (
            1.0 / float(np.linalg.norm(x + p))
            + 1.0 / float(np.linalg.norm(x - p))
            - 2.0 / float(np.linalg.norm(p))
        )
    return out


# -- monopole potentials --------------------------------------------------------


def _dirac_potential(charge: float, axis: Vec3, u: Vec3) -> Vec3:
    """One-sided string along +axis: A = -(c/r) (n x u)/(r + u.n), n = -axis."""
    r = float(np.linalg.norm(u))
    n = -axis
    un = float(u @ n)
    return -(charge / r) * np.cross(n, u) / (r + un)


def _symmetric_potential(charge: float, axis: Vec3, u: Vec3) -> Vec3:
    """Half strings along both rays: A = c (n x u)(u.n) / (r (r^2 - (u.n)^2))."""
    r = float(np.linalg.norm(u))
    un = float(u @ axis)
    return charge * np.cross(axis, u) * un / (r * (r * r - un * un))


def monopole_potential(charge: float, center, chart: GaugeChart, x) -> Vec3:
    """Connection potential A with dA = flat-star d(charge/|x - center|).

    Components are returned in the flat coframe dx.  Raises GaugeError inside
    the excluded cone(s) of the string through ``center``.
    """
    if charge == 0.0:
        return np.zeros(3)
    center = _as_vec3(center)
    x = _as_vec3(x)
    if in_string_cone(chart, center, x):
        raise GaugeError(f"point {x} lies inside the string cone of center {center}")
    u = x - center
    if chart.two_sided:
        return _symmetric_potential(charge, chart.axis, u)
    return _dirac_potential(charge, chart.axis, u)


def radial_gauge_potential(charge: float, center, x) -> Vec3:
    """Monopole potential in the radial (line-integral) gauge about the origin.

    A(x) = -charge (x X c) * int_0^1 t |t x - c|^-3 dt.  Valid on the
    star-shaped region around 0 that avoids the center; it vanishes at the
    origin and is O(|x| * field) there, so mirror-pair contributions cancel
    to quadrupole order without any gauge fixing.
    """
    c = _as_vec3(center)
    x = _as_vec3(x)
    a = float(x @ x)
    b = float(x @ c)
    e = float(c @ c)
    if e == 0.0:
        raise ConfigError("radial gauge is only defined for off-origin centers")
    rad2 = a * _GL_T ** 2 - 2.0 * b * _GL_T + e
    if np.any(rad2 <= 0.0):
        raise DomainError(f"segment [0, x] passes through the center {c}")
    integral = float((_GL_T * rad2 ** (-1.5)) @ _GL_W)
    return -charge * np.cross(x, c) * integral


def total_connection(config: MonopoleConfig, chart: GaugeChart, x) -> Vec3:
    """Base part A of the connection alpha = dt + A, with dA = (1/eps) * dh."""
    x = require_outer(config, x)
    A = np.zeros(3)
    for q, c in config.charges():
        A += monopole_potential(q, c, chart, x)
    return A / config.epsilon


def pair_connection_radial(config: MonopoleConfig, x) -> Vec3:
    """Radial-gauge potential of the mirror pairs alone, with the 1/eps factor.

    This is the outer connection minus its center-model leading part when the
    neck gauge is in force; it is O(|x|^2) near the origin.
    """
    x = _as_vec3(x)
    A = np.zeros(3)
    if config.pair_charge != 0.0:
        for p in config.points_array:
            A += radial_gauge_potential(config.pair_charge, p, x)
            A += radial_gauge_potential(config.pair_charge, -p, x)
    return A / config.epsilon


def neck_connection(config: MonopoleConfig, x) -> Vec3:
    """Outer connection in the neck gauge.

    The center monopole keeps the symmetric string gauge (it is common to
    both models and cancels in their difference); the far pairs use the
    radial gauge so the mismatch against the center model is quadrupole
    small.  Valid for |x| < min |p_v|.
    """
    x = require_outer(config, x)
    A = np.zeros(3)
    if config.center_charge != 0.0:
        A = monopole_potential(config.center_charge, np.zeros(3), config.gauge, x)
    return A / config.epsilon + pair_connection_radial(config, x)


def center_model_connection(config: MonopoleConfig, x_prime) -> Vec3:
    """Connection A' of the center model: dA' = flat-star dh' in x' coordinates."""
    xp = require_center(config, x_prime)
    q = config.center_model_charge
    if q == 0.0:
        return np.zeros(3)
    return monopole_potential(q, np.zeros(3), config.gauge, xp)


def asymptotic_mass(config: MonopoleConfig) -> float:
    """Coefficient m in h = 1 + m/|x| + O(|x|^-3); equals the total charge."""
    return config.total_charge
