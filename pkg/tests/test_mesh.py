import math

import numpy as np
import pytest

import confconv as cc
from confconv.errors import UnsupportedOperationError, ValidationError
from confconv.mesh import FORWARD_OFFSETS, MU


def test_torus_mesh_counts_and_areas():
    bg = cc.flat_torus(2, 2 * math.pi)
    m = cc.build_mesh(bg, 64, 2)
    assert m.num_nodes == 4096
    assert m.h == pytest.approx(2 * math.pi / 64)
    total = float(np.sum(m.cell_areas()))
    assert total == pytest.approx(4 * math.pi ** 2, rel=1e-9)


def test_sphere_mesh_counts_and_areas():
    bg = cc.round_sphere(2)
    m = cc.build_mesh(bg, 64, 3)
    assert m.num_nodes == 2 + 63 * 128
    total = float(np.sum(m.cell_areas()))
    assert total == pytest.approx(4 * math.pi, rel=1e-9)


def test_stencil_offsets_and_mu():
    assert len(FORWARD_OFFSETS[1]) == 2   # 4 neighbors
    assert len(FORWARD_OFFSETS[2]) == 4   # 8 neighbors
    assert len(FORWARD_OFFSETS[3]) == 8   # 16 neighbors
    assert MU[1] == pytest.approx(math.sqrt(2))
    assert MU[2] == pytest.approx(1 / math.cos(math.pi / 8))
    assert MU[3] == pytest.approx(1 / math.cos(math.pi / 16))
    assert MU[2] == pytest.approx(1.0824, abs=1e-4)
    assert MU[3] == pytest.approx(1.0196, abs=1e-4)


def test_mesh_validation():
    bg = cc.flat_torus(2, 2 * math.pi)
    with pytest.raises(ValidationError):
        cc.build_mesh(bg, 8, 3)
    with pytest.raises(ValidationError):
        cc.build_mesh(bg, 64, 5)
    with pytest.raises(UnsupportedOperationError):
        cc.build_mesh(cc.round_sphere(3), 64, 3)


def test_nearest_node_torus():
    bg = cc.flat_torus(2, 2 * math.pi)
    m = cc.build_mesh(bg, 64, 1)
    idx = m.nearest_node((0.0, 0.0))
    assert idx == 0
    # wrap: points just past the period snap back to node 0
    assert m.nearest_node((2 * math.pi - 1e-9, 2 * math.pi - 1e-9)) == 0


def test_nearest_node_sphere_poles():
    bg = cc.round_sphere(2)
    m = cc.build_mesh(bg, 32, 1)
    assert m.nearest_node((0.0, 1.0)) == 0
    assert m.nearest_node((math.pi, 2.0)) == 1
    assert m.nearest_node((math.pi / 2, 0.0)) >= 2


def test_sphere_pole_ring_connectivity():
    bg = cc.round_sphere(2)
    spec = cc.MetricSpec(bg, cc.ConstantFactor(1.0), "one")
    m = cc.build_mesh(bg, 32, 3)
    from confconv.geodesics import build_edge_graph
    G = build_edge_graph(spec, m)
    north = G[0].toarray().ravel()
    assert np.count_nonzero(north) == m.n_phi
    # exact meridian weight for the unit factor is the row step
    assert np.allclose(north[north > 0], m.h)
