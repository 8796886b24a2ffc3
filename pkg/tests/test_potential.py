import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from alflab.errors import ConfigError, DomainError, GaugeError
from alflab.potential import (
    GaugeChart,
    MonopoleConfig,
    _h_center_value,
    asymptotic_mass,
    default_config,
    eval_h,
    eval_h_center,
    flat_config,
    grad_h,
    h_mismatch,
    monopole_potential,
    neck_connection,
    outer_clearance,
    pair_connection_radial,
    radial_gauge_potential,
    total_connection,
)

# ---------------------------------------------------------------- oracles


def fd_gradient(f, x, step):
    g = np.zeros(3)
    for a in range(3):
        e = np.zeros(3)
        e[a] = step
        g[a] = (f(x + e) - f(x - e)) / (2 * step)
    return g


def fd_curl(A, x, step):
    """curl of a 3-vector potential by central differences."""
    J = np.zeros((3, 3))
    for a in range(3):
        e = np.zeros(3)
        e[a] = step
        J[a] = (A(x + e) - A(x - e)) / (2 * step)
    return np.array([J[1, 2] - J[2, 1], J[2, 0] - J[0, 2], J[0, 1] - J[1, 0]])


def admissible_points(cfg, rng, n, r_lo=0.25, r_hi=3.0, cone=0.05):
    pts = []
    while len(pts) < n:
        x = rng.normal(size=3)
        x = x / np.linalg.norm(x) * rng.uniform(r_lo, r_hi)
        if outer_clearance(cfg, x) < 1.5 * cfg.clearance:
            continue
        if any(
            abs((x - c)[2]) > math.cos(cone) * np.linalg.norm(x - c)
            for _, c in cfg.charges()
        ):
            continue
        pts.append(x)
    return pts


# ---------------------------------------------------------------- eval_h


def test_eval_h_hand_value_on_axis():
    cfg = MonopoleConfig(epsilon=0.1, delta=0.45, points=((1.0, 0.0, 0.0),))
    # 1 - 0.05 + 0.05/3 + 0.05/1
    assert eval_h(cfg, np.array([2.0, 0.0, 0.0])) == pytest.approx(1.0166666666666666, abs=1e-12)


def test_eval_h_hand_value_off_axis():
    cfg = MonopoleConfig(epsilon=0.1, delta=0.45, points=((1.0, 0.0, 0.0),))
    # 1 - 0.05 + 0.1/sqrt(5)
    assert eval_h(cfg, np.array([0.0, 0.0, 2.0])) == pytest.approx(0.9947213595499957, abs=1e-12)


@given(st.integers(0, 2 ** 32 - 1))
def test_eval_h_mirror_symmetry(seed):
    rng = np.random.default_rng(seed)
    cfg = default_config(2, epsilon=0.05)
    x = rng.normal(size=3)
    n = np.linalg.norm(x)
    if n < 1e-3:
        return
    x = x / n * rng.uniform(0.3, 4.0)
    if outer_clearance(cfg, x) <= cfg.clearance:
        return
    assert eval_h(cfg, x) == pytest.approx(eval_h(cfg, -x), rel=1e-15)


def test_eval_h_positive_on_admissible_domain(rng):
    cfg = default_config(3, epsilon=0.05)
    for x in admissible_points(cfg, rng, 50):
        assert eval_h(cfg, x) > 0.0


def test_eval_h_rejects_clearance_violation():
    cfg = default_config(1, epsilon=0.05)
    with pytest.raises(DomainError):
        eval_h(cfg, np.array([0.05, 0.0, 0.0]))
    with pytest.raises(DomainError):
        eval_h(cfg, np.asarray(cfg.points[0]) + np.array([0.0, 0.0, 0.05]))


def test_config_validation_errors():
    with pytest.raises(ConfigError):
        MonopoleConfig(epsilon=0.1, delta=0.3, points=((1.5, 0, 0),))  # eps >= delta^2
    with pytest.raises(ConfigError):
        MonopoleConfig(epsilon=0.01, delta=0.6, points=())  # delta out of range
    with pytest.raises(ConfigError):
        MonopoleConfig(epsilon=0.05, delta=0.3, points=((0.08, 0, 0),))  # |p| inside clearance
    with pytest.raises(ConfigError):
        MonopoleConfig(epsilon=0.01, delta=0.3, points=((1.5, 0, 0), (1.5, 0, 0)))
    with pytest.raises(ConfigError):
        # mirror collision: p2 = -p1
        MonopoleConfig(epsilon=0.01, delta=0.3, points=((1.5, 0, 0), (-1.5, 0, 0)))


def test_flat_config_allows_large_epsilon():
    cfg = flat_config(epsilon=1.0)
    assert eval_h(cfg, np.array([0.01, 0.0, 0.0])) == 1.0
    assert not cfg.is_charged


def test_charged_config_requires_adiabatic_band():
    # charged configs keep the strict epsilon < delta^2 gate
    with pytest.raises(ConfigError):
        MonopoleConfig(epsilon=1.0, delta=0.45, points=((1.5, 0.3, 0.2),))


# ---------------------------------------------------------------- grad_h


def test_grad_h_zero_for_flat():
    cfg = flat_config()
    assert np.allclose(grad_h(cfg, np.array([0.7, -0.2, 1.0])), 0.0)


def test_grad_h_matches_finite_differences(rng):
    cfg = default_config(2, epsilon=0.05)
    for x in admissible_points(cfg, rng, 20):
        step = 1e-4 * np.linalg.norm(x)
        fd = fd_gradient(lambda y: eval_h(cfg, y), x, step)
        an = grad_h(cfg, x)
        assert np.linalg.norm(fd - an) <= 1e-6 * max(np.linalg.norm(an), 1e-12)


def test_grad_h_far_field_matches_mass():
    cfg = default_config(3, epsilon=0.05)
    m = asymptotic_mass(cfg)
    x = np.array([610.0, 555.0, 585.0])
    r = np.linalg.norm(x)
    assert r > 1e3
    assert np.linalg.norm(grad_h(cfg, x) + m * x / r ** 3) <= 10.0 / r ** 3


def test_harmonicity_seven_point_laplacian(rng):
    """FD Laplacian vanishes relative to the local Hessian scale.

    The scale must be the full Hessian norm: along diagonal directions the
    axis second derivatives of 1/r cancel individually (3 x_i^2 = r^2)."""
    cfg = default_config(2, epsilon=0.05)
    for x in admissible_points(cfg, rng, 30):
        step = 1e-3 * outer_clearance(cfg, x)
        hess = np.empty((3, 3))
        h0 = eval_h(cfg, x)
        for a in range(3):
            ea = np.zeros(3)
            ea[a] = step
            hess[a, a] = (eval_h(cfg, x + ea) - 2 * h0 + eval_h(cfg, x - ea)) / step ** 2
            for b in range(a + 1, 3):
                eb = np.zeros(3)
                eb[b] = step
                hess[a, b] = hess[b, a] = (
                    eval_h(cfg, x + ea + eb) - eval_h(cfg, x + ea - eb)
                    - eval_h(cfg, x - ea + eb) + eval_h(cfg, x - ea - eb)
                ) / (4 * step ** 2)
        assert abs(np.trace(hess)) <= 1e-5 * np.linalg.norm(hess)


# ---------------------------------------------------------------- center model


def test_eval_h_center_hand_value():
    cfg = MonopoleConfig(epsilon=0.01, delta=0.3, points=((10.0, 0.0, 0.0),))
    assert eval_h_center(cfg, np.array([5.0, 0.0, 0.0])) == pytest.approx(0.801, abs=1e-12)


def test_center_formula_single_term_limit():
    # the stated point |x'| = 2 violates |x'| > 1/delta for every delta < 1/2,
    # so the single-term value is pinned on the unguarded formula instead
    assert _h_center_value(-1.0, 0.0, np.array([2.0, 0.0, 0.0])) == pytest.approx(0.5, abs=1e-15)


def test_eval_h_center_rejects_inner_region():
    cfg = default_config(1, epsilon=0.05, delta=0.3)
    with pytest.raises(DomainError):
        eval_h_center(cfg, np.array([2.0, 0.0, 0.0]))


def test_h_mismatch_is_cubic_on_fixed_window():
    """|h(eps x') - h'(x')| * (1 + |x'|) / eps^3 stays bounded as eps varies."""
    cfg0 = default_config(2, epsilon=0.04, delta=0.3)
    xps = [np.array([3.2, 1.9, 1.1]), np.array([-2.0, 3.3, -2.5]), np.array([5.0, 1.0, 3.0])]
    ratios = []
    for eps in (0.04, 0.02, 0.01, 0.005):
        cfg = cfg0.with_epsilon(eps)
        sup = max(
            abs(eval_h(cfg, eps * xp) - eval_h_center(cfg, xp)) * (1 + np.linalg.norm(xp))
            for xp in xps
        )
        ratios.append(sup / eps ** 3)
    assert max(ratios) / min(ratios) < 1.25


def test_h_mismatch_matches_direct_difference():
    cfg = default_config(2, epsilon=0.02, delta=0.3)
    xp = np.array([4.0, 2.5, -3.0])
    direct = eval_h(cfg, cfg.epsilon * xp) - eval_h_center(cfg, xp)
    assert h_mismatch(cfg, xp) == pytest.approx(direct, rel=1e-9)


# ---------------------------------------------------------------- monopole potentials


def test_monopole_potential_zero_charge():
    chart = GaugeChart()
    assert np.allclose(monopole_potential(0.0, np.zeros(3), chart, np.array([0.0, 0.0, 1.0])), 0.0)


@pytest.mark.parametrize("two_sided", [True, False])
def test_monopole_potential_curl_oracle(two_sided, rng):
    chart = GaugeChart(two_sided=two_sided)
    q, c = 0.7, np.array([0.2, -0.1, 0.3])
    for _ in range(10):
        x = c + rng.normal(size=3)
        u = x - c
        r = np.linalg.norm(u)
        if r < 0.3 or abs(u[2]) > 0.9 * r:
            continue
        A = lambda y: monopole_potential(q, c, chart, y)
        expected = -q * u / r ** 3  # grad of q/|x-c|
        got = fd_curl(A, x, 1e-6)
        assert np.linalg.norm(got - expected) <= 1e-6 * np.linalg.norm(expected)


def test_monopole_potential_axial_symmetry():
    chart = GaugeChart()
    q = 0.4
    th = 0.9
    R = np.array([[math.cos(th), -math.sin(th), 0.0],
                  [math.sin(th), math.cos(th), 0.0],
                  [0.0, 0.0, 1.0]])
    x = np.array([0.8, 0.1, 0.5])
    A1 = monopole_potential(q, np.zeros(3), chart, x)
    A2 = monopole_potential(q, np.zeros(3), chart, R @ x)
    assert np.allclose(R @ A1, A2, atol=1e-14)


def test_monopole_potential_gauge_error_in_cone():
    chart = GaugeChart(excluded_cone_halfangle=0.05)
    with pytest.raises(GaugeError):
        monopole_potential(1.0, np.zeros(3), chart, np.array([1e-4, 0.0, -1.0]))
    # two-sided gauge also excludes the opposite ray
    with pytest.raises(GaugeError):
        monopole_potential(1.0, np.zeros(3), chart, np.array([1e-4, 0.0, 1.0]))


def test_total_connection_zero_for_flat():
    cfg = flat_config()
    assert np.allclose(total_connection(cfg, cfg.gauge, np.array([0.4, 0.2, 0.1])), 0.0)


def test_total_connection_curvature_oracle(rng):
    """dA_total = (1/eps) flat-star dh at sampled admissible points."""
    cfg = default_config(2, epsilon=0.05)
    for x in admissible_points(cfg, rng, 100, r_lo=0.3, r_hi=2.5):
        A = lambda y: total_connection(cfg, cfg.gauge, y)
        expected = grad_h(cfg, x) / cfg.epsilon
        got = fd_curl(A, x, 1e-6 * np.linalg.norm(x))
        assert np.linalg.norm(got - expected) <= 1e-6 * max(np.linalg.norm(expected), 1e-9)


def test_total_connection_mirror_curvature():
    """Curvature is gauge invariant: dA at -x is the negative of dA at x."""
    cfg = default_config(2, epsilon=0.05)
    x = np.array([0.9, 0.5, 0.4])
    A = lambda y: total_connection(cfg, cfg.gauge, y)
    got_plus = fd_curl(A, x, 1e-6)
    got_minus = fd_curl(A, -x, 1e-6)
    assert np.allclose(got_minus, -got_plus, rtol=1e-8, atol=1e-10)


def test_radial_gauge_curl_and_origin(rng):
    q, c = 0.5, np.array([1.5, 0.3, 0.2])
    for _ in range(8):
        x = rng.normal(size=3) * 0.15
        expected = -q * (x - c) / np.linalg.norm(x - c) ** 3
        got = fd_curl(lambda y: radial_gauge_potential(q, c, y), x, 1e-6)
        assert np.linalg.norm(got - expected) <= 1e-6 * np.linalg.norm(expected)
    assert np.allclose(radial_gauge_potential(q, c, np.zeros(3)), 0.0)


def test_pair_connection_radial_is_quadrupole_small():
    cfg = default_config(2, epsilon=0.04)
    d = np.array([0.3, 0.8, 0.52])
    d /= np.linalg.norm(d)
    vals = [np.linalg.norm(pair_connection_radial(cfg, r * d)) / r ** 2 for r in (0.4, 0.2, 0.1, 0.05)]
    assert max(vals) / min(vals) < 1.5  # |A_pair| ~ C |x|^2


def test_neck_connection_curvature_oracle(rng):
    cfg = default_config(2, epsilon=0.04)
    for x in admissible_points(cfg, rng, 10, r_lo=0.15, r_hi=0.28):
        expected = grad_h(cfg, x) / cfg.epsilon
        got = fd_curl(lambda y: neck_connection(cfg, y), x, 1e-7)
        assert np.linalg.norm(got - expected) <= 1e-6 * np.linalg.norm(expected)


# ---------------------------------------------------------------- asymptotic mass


def test_asymptotic_mass_values():
    assert asymptotic_mass(default_config(1, epsilon=0.1, delta=0.45)) == pytest.approx(0.0, abs=1e-15)
    assert asymptotic_mass(default_config(3, epsilon=0.1, delta=0.45)) == pytest.approx(0.2, rel=1e-12)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_asymptotic_mass_fit_oracle(k):
    """Least-squares fit of (h - 1) * |x| over the far field, within 1%."""
    cfg = default_config(k, epsilon=0.05)
    m = asymptotic_mass(cfg)
    vals = []
    golden = math.pi * (3 - math.sqrt(5))
    for r in np.geomspace(1e2, 1e4, 10):
        for i in range(24):
            z = 1 - 2 * (i + 0.5) / 24
            rho = math.sqrt(1 - z * z)
            d = np.array([rho * math.cos(golden * i), rho * math.sin(golden * i), z])
            vals.append((eval_h(cfg, r * d) - 1.0) * r)
    fitted = float(np.mean(vals))
    if m == 0.0:
        assert abs(fitted) <= 1e-3 * cfg.epsilon
    else:
        assert abs(fitted - m) <= 0.01 * abs(m)


# ---------------------------------------------------------------- serialization


def test_config_json_round_trip():
    cfg = default_config(2, epsilon=0.03)
    clone = MonopoleConfig.loads(cfg.dumps())
    assert clone == cfg
    assert clone.digest() == cfg.digest()


def test_config_json_defaults():
    cfg = MonopoleConfig.loads('{"epsilon": 0.02, "delta": 0.3, "points": [[1.5, 0, 0]]}')
    assert cfg.center_charge == pytest.approx(-0.02)
    assert cfg.pair_charge == pytest.approx(0.01)
    assert cfg.gauge == GaugeChart()


def test_config_json_malformed():
    with pytest.raises(ConfigError):
        MonopoleConfig.loads("{not json")
    with pytest.raises(ConfigError):
        MonopoleConfig.loads('{"delta": 0.3}')
