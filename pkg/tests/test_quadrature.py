import math

import numpy as np
import pytest

import confconv as cc
from confconv import geometry as geo
from confconv import quadrature as quad
from confconv.errors import (
    MissingDistanceFieldError,
    UnsupportedOperationError,
    ValidationError,
)

PI = math.pi
SQRT2PI = math.sqrt(2.0) * PI


def test_unit_ball_volumes_pinned():
    assert quad.unit_ball_volume(1) == pytest.approx(2.0)
    assert quad.unit_ball_volume(2) == pytest.approx(PI)
    assert quad.unit_ball_volume(3) == pytest.approx(4 * PI / 3)
    assert quad.unit_ball_volume(4) == pytest.approx(PI ** 2 / 2)


def test_volume_background(flat_spec):
    assert cc.volume(flat_spec) == pytest.approx(4 * PI ** 2)


def test_volume_ex32_against_monte_carlo_oracle():
    # independent Monte Carlo integration of f^2 over the torus
    spec = cc.make_example("bump_C0_3_2", 16, {"K": 3.0})
    rng = np.random.default_rng(123456)
    pts = rng.uniform(0.0, 2 * PI, size=(10 ** 6, 2))
    r = np.sqrt(np.sum(np.minimum(pts, 2 * PI - pts) ** 2, axis=1))
    K, j = 3.0, 16
    t = np.clip((r - 1.0 / j) / (1.0 / j), 0.0, 1.0)
    f = np.where(r <= 1.0 / j, K, np.where(r >= 2.0 / j, 1.0,
                 K + (1.0 - K) * t * t * (3.0 - 2.0 * t)))
    mc = float(np.mean(f ** 2)) * 4 * PI ** 2
    assert cc.volume(spec) == pytest.approx(mc, rel=0.005)


def test_volume_bubble_trend_to_attached_disk():
    target = 4 * PI ** 2 + PI  # vol(T^2) + vol(B^2(0,1))
    errs = [abs(cc.volume(cc.make_example("bubble_3_5", j)) - target)
            for j in (10, 100, 1000)]
    assert errs[0] > errs[1] > errs[2]
    assert errs[-1] / target < 0.01


def test_volume_diverging_family():
    base = 4 * PI ** 2
    vols = [cc.volume(cc.make_example("diverging_3_6", j, {"eta": 2.0}))
            for j in (10, 100)]
    # the bump excess grows like j^(m(eta-1)) = j^2
    assert vols[1] - base > 80.0 * (vols[0] - base)


def test_volume_corridor_closed_form_vs_grid_oracle():
    spec = cc.make_example("taxi_lattice_3_3", 3)
    # midpoint-grid oracle, written independently of the library path
    n = 1024
    h = 1.0 / n
    mids = (np.arange(n) + 0.5) * h
    X, Y = np.meshgrid(mids, mids, indexing="ij")
    s = 2.0 ** -3
    w = 2.0 ** -5
    dx = np.abs(X / s - np.round(X / s)) * s
    dy = np.abs(Y / s - np.round(Y / s)) * s
    f = np.where(np.minimum(dx, dy) <= w, 1.0, math.sqrt(2.0))
    oracle = float(np.sum(f ** 2)) * h * h
    got = cc.volume(spec)
    assert got == pytest.approx(1.25)  # 3/4 * 1 + 1/4 * 2
    assert got == pytest.approx(oracle, abs=5e-3)


def test_volume_ball_region_background(flat_spec):
    ball = cc.metric_ball((PI, PI), 1.0)
    v = cc.volume(flat_spec, ball, resolution=512)
    assert v == pytest.approx(PI, rel=5e-3)
    with pytest.raises(ValidationError):
        cc.volume(flat_spec, cc.metric_ball((0, 0), 10.0))


def test_volume_spec_ball_needs_distance_field(flat_spec):
    with pytest.raises(MissingDistanceFieldError):
        cc.volume(flat_spec, cc.metric_ball((0, 0), 1.0, under="spec"))


def test_radial_diameter_flat(flat_spec):
    assert cc.radial_diameter(flat_spec) == pytest.approx(SQRT2PI)


def test_radial_diameter_spline_formula_and_limit():
    # independent evaluation: core + exact log antiderivative + Simpson ramp
    from scipy.integrate import quad as squad
    eta = math.e
    for j in (10 ** 3, 10 ** 6):
        spec = cc.make_example("spline_3_7", j, {"eta": eta})
        lnj = math.log(j)
        core = (j ** eta / (1 + eta * lnj)) * j ** -eta
        logpart = math.log((1 + eta * lnj) / (1 + lnj))
        A = j / (1 + lnj)
        ramp = squad(lambda t: A ** (1 - (3 * t * t - 2 * t ** 3)), 0, 1)[0] / j
        expected = core + logpart + ramp + (SQRT2PI - 2.0 / j)
        assert cc.radial_diameter(spec) == pytest.approx(expected, abs=1e-7)
    # the diameter error changes sign near j ~ 3e2, peaks in magnitude
    # around 1e6, and then decays slowly toward 0
    errs = [abs(cc.radial_diameter(cc.make_example("spline_3_7", j)) - (SQRT2PI + 1.0))
            for j in (10 ** 2, 10 ** 4, 10 ** 6, 10 ** 12)]
    assert max(errs) < 0.01
    assert errs[-1] < errs[2]


def test_radial_diameter_diverging_lower_bound():
    eta = 2.0
    for j in (10, 100):
        spec = cc.make_example("diverging_3_6", j, {"eta": eta})
        assert cc.radial_diameter(spec) >= j ** (eta - 1.0) + (SQRT2PI - 2.0 / j) - 1e-9


def test_radial_diameter_unsupported():
    with pytest.raises(UnsupportedOperationError):
        cc.radial_diameter(cc.make_example("taxi_lattice_3_3", 3))


def test_lp_factor_deviation_identity(flat_spec):
    for p in (1.0, 2.0, math.inf):
        assert cc.lp_factor_deviation(flat_spec, p) == 0.0


def test_lp_factor_deviation_growing_bump_bound():
    # integral |f-1|^p <= 2^m w_m j^(alpha p - m), and -> 0 for p < m/alpha
    alpha, m, p = 0.5, 2, 3.0
    prev = math.inf
    for j in (10, 100, 1000):
        spec = cc.make_example("growing_bump_3_4", j, {"alpha": alpha})
        integral = cc.lp_factor_deviation(spec, p) ** p
        assert integral <= 2 ** m * quad.unit_ball_volume(m) * j ** (alpha * p - m) + 1e-12
        assert integral < prev
        prev = integral


def test_lp_norm_bubble_divergence():
    # at p = m + 1 the inner bump alone gives integral f^p >= w_m j^(p-m)
    m, p = 2, 3.0
    vals = []
    for j in (10, 100, 1000):
        spec = cc.make_example("bubble_3_5", j)
        integral = cc.lp_factor_norm(spec, p) ** p
        assert integral >= quad.unit_ball_volume(m) * j ** (p - m) * (1 - 1e-9)
        vals.append(integral)
    assert vals[0] < vals[1] < vals[2]


def test_sup_deviation_exact():
    spec = cc.make_example("bump_C0_3_2", 8, {"K": 3.0})
    assert cc.lp_factor_deviation(spec, math.inf) == pytest.approx(2.0)
    spec33 = cc.make_example("taxi_lattice_3_3", 4)
    assert cc.lp_factor_deviation(spec33, math.inf) == pytest.approx(math.sqrt(2) - 1)


def test_hoelder_monotonicity_normalized():
    for spec in (cc.make_example("bump_C0_3_2", 8, {"K": 3.0}),
                 cc.make_example("growing_bump_3_4", 8, {"alpha": 0.5}),
                 cc.make_example("taxi_lattice_3_3", 3)):
        vals = [cc.lp_factor_deviation(spec, p, normalized=True) for p in (1, 2, 4)]
        assert vals[0] <= vals[1] + 1e-12 and vals[1] <= vals[2] + 1e-12


def test_lp_tensor_norm_identity_and_constant():
    weights = np.full(10, 0.1)
    ident = cc.EigenvalueField(weights, np.ones((10, 2)))
    assert cc.lp_tensor_norm(ident, 2.0, deviation=True) == 0.0
    f0 = 1.7
    const = cc.EigenvalueField(weights, np.full((10, 3), f0 ** 2))
    for p in (1.0, 2.0, 5.0):
        expected = math.sqrt(3) * f0 ** 2 * float(np.sum(weights)) ** (1 / p)
        assert cc.lp_tensor_norm(const, p) == pytest.approx(expected, rel=1e-12)


def test_lp_tensor_norm_conformal_half_power_relation():
    # |f^2 g0| in L^(p/2) equals sqrt(m) ||f||^2 in L^p, on shared samples
    spec = cc.make_example("bump_C0_3_2", 8, {"K": 3.0})
    rng = np.random.default_rng(5)
    pts = rng.uniform(0, 2 * PI, size=(500, 2))
    weights = np.full(500, 4 * PI ** 2 / 500)
    field = geo.conformal_eigenvalue_field(spec, pts, weights)
    f = geo.factor_values(spec, pts)
    for p in (2.0, 4.0, 6.0):
        lhs = cc.lp_tensor_norm(field, p / 2)
        rhs = math.sqrt(2) * float(np.sum(weights * f ** p)) ** (2 / p)
        assert lhs == pytest.approx(rhs, rel=1e-12)


def test_reverse_triangle_property(rng):
    # |  ||g||_p - ||g0||_p  | <= ||g - g0||_p on randomized fields
    for _ in range(1000):
        n = int(rng.integers(2, 12))
        m = int(rng.integers(2, 5))
        weights = rng.uniform(0.0, 2.0, n)
        lams = rng.uniform(0.1, 9.0, (n, m))
        field = cc.EigenvalueField(weights, lams)
        ident = cc.EigenvalueField(weights, np.ones((n, m)))
        p = float(rng.uniform(1.0, 5.0))
        lhs = abs(cc.lp_tensor_norm(field, p) - cc.lp_tensor_norm(ident, p))
        rhs = cc.lp_tensor_norm(field, p, deviation=True)
        assert lhs <= rhs + 1e-10


def test_conf_vol_bound_below_property(rng):
    # f >= (1 - 1/j)^(1/2) pointwise forces vol >= (1 - 1/j)^(m/2) vol0
    bg = cc.flat_torus(2, 2 * PI)
    for _ in range(1000):
        j = int(rng.integers(2, 60))
        lo = math.sqrt(1.0 - 1.0 / j)
        vals = rng.uniform(lo, lo + 3.0, size=3)
        r1, r2 = sorted(rng.uniform(0.05, PI, size=2))
        if r2 - r1 < 1e-3:
            continue
        pieces = (
            geo.Piece(0.0, r1, "const", vals[0], vals[0]),
            geo.Piece(r1, r2, "hermite", vals[0], vals[1]),
            geo.Piece(r2, SQRT2PI, "const", vals[1], vals[1]),
        )
        spec = cc.MetricSpec(bg, geo.RadialFactor((0.0, 0.0), pieces), "rand")
        # exact radial volume of the ball region [0, r2] plus scaled remainder
        vol = cc.volume(spec, resolution=64) if vals[1] != 1.0 else cc.volume(spec)
        assert vol >= (1.0 - 1.0 / j) ** 1.0 * 4 * PI ** 2 - 1e-9


def test_global_to_local_volume_convergence():
    # total volume converges and f >= 1, so region volumes converge too
    bg = cc.flat_torus(2, 2 * PI)
    region = cc.metric_ball((PI, PI), 1.2)
    flat = cc.MetricSpec(bg, cc.ConstantFactor(1.0), "flat")
    base = cc.volume(flat, region, resolution=256)
    errs = []
    for j in (4, 8, 16, 32):
        spec = cc.make_example("bump_C0_3_2", j, {"K": 3.0})
        errs.append(abs(cc.volume(spec, region, resolution=256) - base))
        comp = cc.volume(spec) - cc.volume(spec, region, resolution=256)
        comp_base = 4 * PI ** 2 - base
        assert comp >= (1.0 - 1.0 / j) * comp_base - 1e-6
    assert errs[-1] <= errs[0]


def test_lp_to_lq_bounded_factor_equivalence():
    # with a tensor bound K', q-integrals are controlled by p-integrals:
    # int |g - g0|^q <= (2 K' sqrt(m))^(q - p) int |g - g0|^p
    rng = np.random.default_rng(77)
    pts = rng.uniform(0, 2 * PI, size=(2000, 2))
    weights = np.full(2000, 4 * PI ** 2 / 2000)
    p, q = 1.0, 4.0
    prev_q = math.inf
    for j in (4, 8, 16, 32):
        spec = cc.make_example("bump_C0_3_2", j, {"K": 3.0})
        field = geo.conformal_eigenvalue_field(spec, pts, weights)
        K_tensor = 9.0  # sup of the eigenvalues f^2
        int_p = cc.lp_tensor_norm(field, p, deviation=True) ** p
        int_q = cc.lp_tensor_norm(field, q, deviation=True) ** q
        assert int_q <= (2 * K_tensor * math.sqrt(2)) ** (q - p) * int_p + 1e-12
        assert int_q <= prev_q or int_q < 1e-12
        prev_q = int_q


def test_ramp_quadrature_matches_adaptive():
    # Simpson-256 piece integrals agree with adaptive quadrature
    from scipy.integrate import quad as squad
    piece = geo.Piece(1.0, 2.0, "log_ramp", 1000.0, 1.0, 12.0)
    ref = squad(lambda s: piece.values(np.asarray(s)) ** 2 * s, 1.0, 2.0, limit=300)[0]
    got = quad.piece_power_shell_integral(piece, 2, 2, geo.TORUS)
    assert got == pytest.approx(ref, rel=1e-6)
