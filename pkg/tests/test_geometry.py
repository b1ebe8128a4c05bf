import math

import numpy as np
import pytest

import confconv as cc
from confconv import geometry as geo
from confconv.errors import (
    DomainError,
    InvalidTensorError,
    UnsupportedOperationError,
    ValidationError,
)

SQRT2PI = math.sqrt(2.0) * math.pi


def test_background_invariants():
    t = cc.flat_torus(2, 2 * math.pi)
    assert t.diameter == pytest.approx(SQRT2PI)
    assert t.volume == pytest.approx(4 * math.pi ** 2)
    s = cc.round_sphere(2)
    assert s.diameter == pytest.approx(math.pi)
    assert s.volume == pytest.approx(4 * math.pi)
    with pytest.raises(ValidationError):
        cc.Background("flat_torus", 2, -1.0)
    with pytest.raises(ValidationError):
        cc.Background("klein_bottle", 2)


def test_background_distance_examples():
    t = cc.flat_torus(2, 2 * math.pi)
    assert cc.background_distance(t, (0, 0), (math.pi, math.pi)) == pytest.approx(SQRT2PI)
    assert cc.background_distance(t, (0, 0), (3 * math.pi / 2, 0)) == pytest.approx(math.pi / 2)
    s = cc.round_sphere(2)
    assert cc.background_distance(s, (0, 0), (math.pi / 2, 0)) == pytest.approx(math.pi / 2)


def test_taxi_distance_examples():
    t1 = cc.flat_torus(2, 1.0)
    assert cc.taxi_distance(t1, (0, 0), (0.5, 0.5)) == pytest.approx(1.0)
    assert cc.taxi_distance(t1, (0.1, 0), (0.9, 0)) == pytest.approx(0.2)
    t2 = cc.flat_torus(2, 2 * math.pi)
    assert cc.taxi_distance(t2, (0, 0), (math.pi, math.pi)) == pytest.approx(2 * math.pi)
    with pytest.raises(UnsupportedOperationError):
        cc.taxi_distance(cc.round_sphere(2), (0, 0), (1, 1))


def test_taxi_euclid_sandwich_property(rng):
    # sqrt(2) d0 >= taxi >= d0 on 2-tori
    t = cc.flat_torus(2, 2 * math.pi)
    p = rng.uniform(0, 2 * math.pi, size=(1000, 2))
    q = rng.uniform(0, 2 * math.pi, size=(1000, 2))
    d0 = geo.background_distance_many(t, p, q)
    taxi = geo.taxi_distance_many(t, p, q)
    assert np.all(taxi >= d0 - 1e-12)
    assert np.all(math.sqrt(2) * d0 >= taxi - 1e-12)


def test_eval_factor_identity_and_bump():
    t = cc.flat_torus(2, 2 * math.pi)
    one = cc.MetricSpec(t, cc.ConstantFactor(1.0), "one")
    assert cc.eval_factor(one, (1.0, 2.0)) == 1.0
    j, K = 16, 3.0
    spec = cc.make_example("bump_C0_3_2", j, {"K": K})
    assert cc.eval_factor(spec, (1.0 / (2 * j), 0.0)) == pytest.approx(K)
    assert cc.eval_factor(spec, (3.0, 3.0)) == pytest.approx(1.0)


def test_eval_factor_reciprocal_log_region():
    # value in the reciprocal-log annulus agrees with direct evaluation
    j, eta = 16, math.e
    spec = cc.make_example("spline_3_7", j, {"eta": eta})
    r = math.e * j ** (-eta)
    assert j ** (-eta) < r <= 1.0 / j
    expected = 1.0 / (r * (1.0 - math.log(r)))
    assert cc.eval_factor(spec, (r, 0.0)) == pytest.approx(expected, rel=1e-12)


def test_eval_factor_domain_errors():
    s = cc.round_sphere(2)
    spec = cc.MetricSpec(s, cc.ConstantFactor(1.0), "s")
    with pytest.raises(DomainError):
        cc.eval_factor(spec, (3.5, 0.0))
    t = cc.flat_torus(2, 1.0)
    spec_t = cc.MetricSpec(t, cc.ConstantFactor(1.0), "t")
    with pytest.raises(DomainError):
        cc.eval_factor(spec_t, (0.1, 0.2, 0.3))


def test_tensor_norm_examples():
    assert cc.tensor_norm((1.0, 1.0)) == pytest.approx(math.sqrt(2))
    # conformal factor f = 2 in dimension 3: all eigenvalues 4
    assert cc.tensor_norm((4.0, 4.0, 4.0)) == pytest.approx(math.sqrt(3) * 4.0)
    assert cc.tensor_norm((1.0, 4.0)) == pytest.approx(math.sqrt(17.0))
    with pytest.raises(InvalidTensorError):
        cc.tensor_norm((1.0, -2.0))


def test_tensor_norm_conformal_identity_property(rng):
    # |f^2 g0| = sqrt(m) f^2 over randomized factors and dimensions
    for _ in range(1000):
        m = int(rng.integers(2, 6))
        f = float(rng.uniform(0.05, 20.0))
        got = cc.tensor_norm((f * f,) * m)
        assert got == pytest.approx(math.sqrt(m) * f * f, rel=1e-12)


def test_curve_length_flat_segment():
    t = cc.flat_torus(2, 2 * math.pi)
    one = cc.MetricSpec(t, cc.ConstantFactor(1.0), "one")
    assert cc.curve_length(one, [(0, 0), (1, 0)]) == pytest.approx(1.0, abs=1e-12)


def test_curve_length_constant_scaling_exact():
    t = cc.flat_torus(2, 2 * math.pi)
    one = cc.MetricSpec(t, cc.ConstantFactor(1.0), "one")
    c = cc.MetricSpec(t, cc.ConstantFactor(2.75), "c")
    poly = [(0.0, 0.0), (1.0, 0.5), (2.0, 2.0), (5.0, 1.0)]
    l1 = cc.curve_length(one, poly)
    lc = cc.curve_length(c, poly)
    assert lc == pytest.approx(2.75 * l1, rel=1e-12)


def test_curve_length_degenerate_polyline():
    t = cc.flat_torus(2, 2 * math.pi)
    one = cc.MetricSpec(t, cc.ConstantFactor(1.0), "one")
    assert cc.curve_length(one, [(1.0, 1.0), (1.0, 1.0)]) == 0.0
    with pytest.raises(ValidationError):
        cc.curve_length(one, [(0.0, 0.0)])


def test_curve_length_radial_segment_matches_radial_diameter():
    # a straight radial segment through the bump center realizes the
    # radial length integral from 0 to sqrt(2) pi
    spec = cc.make_example("growing_bump_3_4", 16, {"alpha": 0.5})
    got = cc.curve_length(spec, [(0.0, 0.0), (math.pi, math.pi)], subdivisions=4096)
    assert got == pytest.approx(cc.radial_diameter(spec), abs=2e-5)


def test_curve_length_sphere_arc():
    s = cc.round_sphere(2)
    one = cc.MetricSpec(s, cc.ConstantFactor(1.0), "one")
    # quarter of a great circle along the equator
    got = cc.curve_length(one, [(math.pi / 2, 0.0), (math.pi / 2, math.pi / 2)])
    assert got == pytest.approx(math.pi / 2, rel=1e-9)


def test_declared_envelope_sampled(rng):
    spec = cc.make_example("bump_C0_3_2", 8, {"K": 3.0})
    lo, hi = spec.bounds
    pts = rng.uniform(0, 2 * math.pi, size=(10_000, 2))
    f = geo.factor_values(spec, pts)
    assert np.all(f >= lo - 1e-12) and np.all(f <= hi + 1e-12)


def test_piece_validation():
    with pytest.raises(ValidationError):
        geo.Piece(0.0, 1.0, "const", 2.0, 3.0)  # const needs a == b
    with pytest.raises(ValidationError):
        geo.Piece(0.5, 0.2, "linear", 1.0, 2.0)  # reversed interval
    with pytest.raises(ValidationError):
        geo.Piece(0.0, 1.0, "hermite", -1.0, 2.0)  # nonpositive value
    with pytest.raises(ValidationError):
        # discontinuous tiling
        geo.RadialFactor((0.0, 0.0), (
            geo.Piece(0.0, 1.0, "const", 2.0, 2.0),
            geo.Piece(1.0, 2.0, "const", 1.0, 1.0),
        ))


def test_multibump_disjointness_enforced():
    t = cc.flat_torus(2, 2 * math.pi)
    pieces = (
        geo.Piece(0.0, 1.0, "hermite", 3.0, 1.0),
        geo.Piece(1.0, 1.5, "const", 1.0, 1.0),
    )
    fac = geo.MultiBumpFactor(((0.0, 0.0), (2.0, 0.0)), pieces)
    with pytest.raises(ValidationError):
        cc.MetricSpec(t, fac, "overlap")


def test_spec_serialization_roundtrip(rng):
    examples = [
        cc.make_example("cinched_sphere_3_1", 10, {"h0": 0.5}),
        cc.make_example("bump_C0_3_2", 8, {"K": 3.0}),
        cc.make_example("taxi_lattice_3_3", 4),
        cc.make_example("bubble_3_5", 50),
        cc.make_example("spline_3_7", 100),
        cc.make_example("many_splines_3_8", 200),
    ]
    for spec in examples:
        doc = cc.spec_to_dict(spec)
        back = cc.spec_from_dict(doc)
        assert back == spec
        if spec.background.kind == geo.TORUS:
            pts = rng.uniform(0, spec.background.side, size=(64, spec.background.dim))
        else:
            pts = np.stack([rng.uniform(0, math.pi, 64), rng.uniform(0, 2 * math.pi, 64)], -1)
        np.testing.assert_allclose(
            geo.factor_values(spec, pts), geo.factor_values(back, pts), rtol=0, atol=0)


def test_eigenvalue_field_validation():
    with pytest.raises(InvalidTensorError):
        cc.EigenvalueField(np.array([1.0]), np.array([[1.0, -1.0]]))
    with pytest.raises(InvalidTensorError):
        cc.EigenvalueField(np.array([-1.0]), np.array([[1.0, 1.0]]))
    with pytest.raises(InvalidTensorError):
        cc.EigenvalueField(np.empty(0), np.empty((0, 2)))
