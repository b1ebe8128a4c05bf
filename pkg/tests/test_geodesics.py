import math

import numpy as np
import pytest

import confconv as cc
from confconv import geodesics as geod
from confconv.errors import MeshMismatchError, ValidationError

PI = math.pi
SQRT2PI = math.sqrt(2.0) * PI


@pytest.fixture(scope="module")
def flat_graph(flat_spec, mesh128):
    return geod.build_edge_graph(flat_spec, mesh128)


def test_flat_distance_within_stencil_bounds(flat_spec, torus_2pi):
    m = cc.build_mesh(torus_2pi, 256, 3)
    d = cc.distance(flat_spec, m, (0, 0), (PI, PI))
    assert SQRT2PI - 1e-9 <= d <= 1.02 * SQRT2PI + 4 * m.h


def test_constant_factor_scales_distances_exactly(flat_spec, torus_2pi, mesh128, flat_graph):
    c = 2.5
    spec_c = cc.MetricSpec(torus_2pi, cc.ConstantFactor(c), "c")
    pairs = geod.sample_pooled_pairs(torus_2pi, 4, 16, seed=3)
    d1 = geod.mesh_pair_distances(flat_spec, mesh128, pairs, graph=flat_graph)
    dc = geod.mesh_pair_distances(spec_c, mesh128, pairs)
    np.testing.assert_allclose(dc, c * d1, rtol=1e-12)


def test_distance_is_zero_at_source(flat_spec, mesh128, flat_graph):
    assert cc.distance(flat_spec, mesh128, (1.0, 1.0), (1.0, 1.0),
                       graph=flat_graph) == 0.0


def test_symmetry(torus_2pi, mesh128):
    spec = cc.make_example("bump_C0_3_2", 8, {"K": 3.0})
    rng = np.random.default_rng(4)
    for _ in range(5):
        p = tuple(rng.uniform(0, 2 * PI, 2))
        q = tuple(rng.uniform(0, 2 * PI, 2))
        dpq = cc.distance(spec, mesh128, p, q)
        dqp = cc.distance(spec, mesh128, q, p)
        assert abs(dpq - dqp) <= 1e-9


def test_triangle_inequality_property(torus_2pi, mesh128):
    # triples (s1, s2, x): all three distances come from two solves
    spec = cc.make_example("bump_C0_3_2", 8, {"K": 3.0})
    graph = geod.build_edge_graph(spec, mesh128)
    rng = np.random.default_rng(6)
    sources = [tuple(rng.uniform(0, 2 * PI, 2)) for _ in range(8)]
    fields = geod.solve_fields(spec, mesh128, sources, graph=graph)
    count = 0
    for a in range(8):
        for b in range(a + 1, 8):
            d_ab = fields[a].values[fields[b].source_node]
            xs = rng.integers(0, mesh128.num_nodes, size=40)
            lhs = fields[a].values[xs]
            rhs = d_ab + fields[b].values[xs]
            assert np.all(lhs <= rhs + 1e-9)
            count += len(xs)
    assert count >= 1000


def test_metrication_bound_per_stencil(flat_spec, torus_2pi):
    # (solver / closed form - 1) <= mu(k) - 1 + 4h/d0 on every sampled pair
    pairs = geod.sample_pooled_pairs(torus_2pi, 8, 128, seed=9)
    d0 = geod.background_oracle(torus_2pi)(pairs)
    for k in (1, 2, 3):
        m = cc.build_mesh(torus_2pi, 128, k)
        dh = geod.mesh_pair_distances(flat_spec, m, pairs)
        assert np.all(dh / d0 - 1.0 <= (m.mu - 1.0) + 4 * m.h / d0 + 1e-12)


def test_edge_domination_lower_bound(torus_2pi, mesh128, flat_spec, flat_graph):
    # f >= 1 everywhere forces d_j >= d_flat edgewise, exactly at graph level
    spec = cc.make_example("bump_C0_3_2", 8, {"K": 3.0})
    pairs = geod.sample_pooled_pairs(torus_2pi, 8, 128, seed=2)
    dj = geod.mesh_pair_distances(spec, mesh128, pairs)
    d1 = geod.mesh_pair_distances(flat_spec, mesh128, pairs, graph=flat_graph)
    assert np.all(dj >= d1 - 1e-12)


def test_factor_upper_bound_controls_distances(torus_2pi):
    # with f <= K: d_j <= K mu d0 + 4h, and empirically d_j <= sqrt(K) d0 + 4hK
    K = 3.0
    spec = cc.make_example("bump_C0_3_2", 8, {"K": K})
    pairs = geod.sample_pooled_pairs(torus_2pi, 16, 32, seed=21)
    d0 = geod.background_oracle(torus_2pi)(pairs)
    m = cc.build_mesh(torus_2pi, 256, 3)
    dj = geod.mesh_pair_distances(spec, m, pairs)
    assert np.all(dj <= K * d0 * m.mu + 4 * m.h + 1e-12)
    m512 = cc.build_mesh(torus_2pi, 512, 3)
    dj512 = geod.mesh_pair_distances(spec, m512, pairs)
    assert np.all(dj512 <= math.sqrt(K) * d0 + 4 * m512.h * K + 1e-12)


def test_taxi_lattice_distance_octagonal():
    # the corridor union contains full 45-degree lines offset by half the
    # lattice spacing, so the diagonal pair costs near the flat distance
    # (the explicit offset-diagonal path bounds it by ~0.733 at j=3),
    # far below the per-coordinate sum 1.0
    spec = cc.make_example("taxi_lattice_3_3", 3)
    bg = cc.flat_torus(2, 1.0)
    m = cc.build_mesh(bg, 256, 3)
    d = cc.distance(spec, m, (0.0, 0.0), (0.5, 0.5))
    assert math.sqrt(0.5) - 1e-9 <= d <= 0.74


def test_taxi_lattice_axis_distance_exact():
    spec = cc.make_example("taxi_lattice_3_3", 3)
    bg = cc.flat_torus(2, 1.0)
    m = cc.build_mesh(bg, 256, 3)
    # corridors contain the axis lines, so axis pairs cost the flat distance
    d = cc.distance(spec, m, (0.0, 0.0), (0.5, 0.0))
    assert d == pytest.approx(0.5, abs=1e-9)


def test_sample_pairs_determinism_and_errors(torus_2pi):
    a = cc.sample_pairs(torus_2pi, 100, seed=5)
    b = cc.sample_pairs(torus_2pi, 100, seed=5)
    np.testing.assert_array_equal(a.pairs, b.pairs)
    with pytest.raises(ValidationError):
        cc.sample_pairs(torus_2pi, 0, seed=5)


def test_sample_pairs_uniformity(torus_2pi):
    ps = cc.sample_pairs(torus_2pi, 1000, seed=12)
    pts = ps.pairs.reshape(-1, 2)
    means = pts.mean(axis=0)
    assert np.all(np.abs(means - PI) < 0.05 * 2 * PI)
    # chi-square over 16 bins per coordinate, df = 15
    for axis in range(2):
        counts, _ = np.histogram(pts[:, axis], bins=16, range=(0, 2 * PI))
        expected = pts.shape[0] / 16.0
        chi2 = float(np.sum((counts - expected) ** 2 / expected))
        assert chi2 < 40.0


def test_sample_pairs_sphere_measure():
    s = cc.round_sphere(2)
    ps = cc.sample_pairs(s, 2000, seed=8)
    z = np.cos(ps.pairs.reshape(-1, 2)[:, 0])
    assert abs(float(np.mean(z))) < 0.05  # uniform in cos(r)


def test_diameter_estimate(flat_spec, torus_2pi, mesh128, flat_graph):
    est = cc.diameter_estimate(flat_spec, mesh128, sources=8, graph=flat_graph)
    assert SQRT2PI - 2 * mesh128.h <= est.value <= 1.02 * SQRT2PI + 2 * mesh128.h
    spec_c = cc.MetricSpec(torus_2pi, cc.ConstantFactor(2.0), "c")
    est_c = cc.diameter_estimate(spec_c, mesh128, sources=8)
    assert est_c.value == pytest.approx(2.0 * est.value, rel=1e-12)
    with pytest.raises(ValidationError):
        cc.diameter_estimate(flat_spec, mesh128, sources=2)


def test_distance_field_binary_roundtrip(tmp_path, flat_spec, mesh128, flat_graph):
    field = cc.solve_distance(flat_spec, mesh128, (0.0, 0.0), graph=flat_graph)
    path = tmp_path / "field.bin"
    field.to_binary(path)
    header, values = geod.load_binary_field(path)
    assert header["n"] == 128 and header["stencil_order"] == 3
    assert header["side"] == pytest.approx(2 * PI)
    assert header["spec_hash"] == geod.spec_hash(flat_spec).hex()
    np.testing.assert_array_equal(values, field.values)


def test_distance_field_csv(tmp_path, flat_spec, torus_2pi):
    m = cc.build_mesh(torus_2pi, 16, 1)
    field = cc.solve_distance(flat_spec, m, (0.0, 0.0))
    path = tmp_path / "field.csv"
    field.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "x0,x1,distance"
    assert len(lines) == 1 + m.num_nodes


def test_ball_volume_euclidean(flat_spec, mesh128, flat_graph):
    field = cc.solve_distance(flat_spec, mesh128, (PI, PI), graph=flat_graph)
    v = cc.ball_volume(flat_spec, field, 1.0)
    assert v == pytest.approx(PI, rel=0.05)


def test_ball_volume_scaling_oracle(torus_2pi, mesh128):
    # distances scale by c and the area element by c^2
    c = 1.5
    spec_c = cc.MetricSpec(torus_2pi, cc.ConstantFactor(c), "c")
    field = cc.solve_distance(spec_c, mesh128, (PI, PI))
    v = cc.ball_volume(spec_c, field, c * 1.0)
    assert v == pytest.approx(c ** 2 * PI, rel=0.05)


def test_ball_volume_locality_oracle(torus_2pi, mesh128):
    # center far from the bump: the factor is 1 on the whole ball
    spec = cc.make_example("bump_C0_3_2", 16, {"K": 3.0})
    field = cc.solve_distance(spec, mesh128, (PI, PI))
    v = cc.ball_volume(spec, field, 0.8)
    assert v == pytest.approx(PI * 0.64, rel=0.05)


def test_ball_volume_mismatch_errors(flat_spec, torus_2pi, mesh128, flat_graph):
    field = cc.solve_distance(flat_spec, mesh128, (0.0, 0.0), graph=flat_graph)
    other = cc.MetricSpec(torus_2pi, cc.ConstantFactor(2.0), "other")
    with pytest.raises(MeshMismatchError):
        cc.ball_volume(other, field, 1.0)


def test_sphere_distance_polar(flat_spec):
    s = cc.round_sphere(2)
    one = cc.MetricSpec(s, cc.ConstantFactor(1.0), "one")
    m = cc.build_mesh(s, 64, 3)
    d = cc.distance(one, m, (0.0, 0.0), (PI / 2, 0.0))
    assert d == pytest.approx(PI / 2, rel=0.03)
    d2 = cc.distance(one, m, (0.0, 0.0), (PI, 0.0))
    assert d2 == pytest.approx(PI, rel=0.03)


def test_halton_points_deterministic():
    a = geod.halton_points(16)
    b = geod.halton_points(16)
    np.testing.assert_array_equal(a, b)
    assert np.all((a >= 0) & (a < 1))
