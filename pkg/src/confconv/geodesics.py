"""Discrete geodesic distances by shortest paths on stencil meshes.

Edges carry the conformal length of their background-geodesic segment,
integrated by composite Simpson (8 intervals by default, 32 near small
bump supports).  Shortest paths run through ``scipy.sparse.csgraph``'s
Dijkstra on a CSR graph assembled with vectorized edge weights; results
are deterministic.

For a factor bounded between fixed constants the solver distance d_h
satisfies ``d - O(h) <= d_h <= mu(k) * d + O(h)`` against the continuous
distance ``d``, with ``mu(k)`` the stencil metrication factor.
"""

from __future__ import annotations

import hashlib
import json
import math
import struct
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra as _csgraph_dijkstra

from . import geometry as geo
from . import quadrature as quad
from .errors import (
    InvalidMetricError,
    UnsupportedOperationError,
    ValidationError,
)
from .mesh import GridMesh, build_mesh

#: Simpson intervals per edge, and the refined count on edges near bumps.
EDGE_SIMPSON_INTERVALS = 8
BUMP_EDGE_SIMPSON_INTERVALS = 32

BINARY_MAGIC = b"CCDF"
BINARY_VERSION = 1


def spec_hash(spec: geo.MetricSpec) -> bytes:
    doc = json.dumps(geo.spec_to_dict(spec), sort_keys=True).encode()
    return hashlib.sha256(doc).digest()


# ---------------------------------------------------------------------------
# edge graphs
# ---------------------------------------------------------------------------

def _simpson_nodes_weights(intervals):
    n = intervals + (intervals % 2)
    t = np.linspace(0.0, 1.0, n + 1)
    w = np.ones(n + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return t, w / (3.0 * n)


def _bump_centers(spec):
    fac = spec.factor
    if isinstance(fac, geo.RadialFactor):
        support = fac.support_radius()
        if support < 0.25 * spec.background.diameter:
            return [np.asarray(fac.center)], support
    if isinstance(fac, geo.MultiBumpFactor):
        return [np.asarray(c) for c in fac.centers], fac.support_radius
    return [], 0.0


def _torus_offset_weights(spec, m, offset, intervals):
    a, b = offset
    n = m.n
    h = m.h
    ell = h * math.hypot(a, b)
    if isinstance(spec.factor, geo.ConstantFactor):
        return np.full(m.num_nodes, spec.factor.value * ell)
    t, w = _simpson_nodes_weights(intervals)
    idx = np.arange(m.num_nodes)
    i, j = np.divmod(idx, n)
    acc = np.zeros(m.num_nodes)
    L = spec.background.side
    for tk, wk in zip(t, w):
        pts = np.stack([np.mod((i + tk * a) * h, L), np.mod((j + tk * b) * h, L)], axis=-1)
        acc += wk * geo.factor_values(spec, pts)
    return ell * acc


def _torus_graph(spec, m, intervals):
    centers, support = _bump_centers(spec)
    rows, cols, data = [], [], []
    idx = np.arange(m.num_nodes)
    i, j = np.divmod(idx, m.n)
    pts = m.node_points()
    near = None
    if centers and intervals < BUMP_EDGE_SIMPSON_INTERVALS:
        dmin = np.full(m.num_nodes, np.inf)
        for c in centers:
            dmin = np.minimum(dmin, geo.background_distance_many(spec.background, pts, c))
        near = dmin <= support + 3.0 * m.h
    for off in m.offsets():
        w = _torus_offset_weights(spec, m, off, intervals)
        if near is not None and np.any(near):
            fine = _torus_offset_weights_subset(spec, m, off, BUMP_EDGE_SIMPSON_INTERVALS, near)
            w = np.where(near, fine, w)
        rows.append(idx)
        cols.append(m.torus_index(i + off[0], j + off[1]))
        data.append(w)
    return rows, cols, data


def _torus_offset_weights_subset(spec, m, offset, intervals, mask):
    a, b = offset
    h = m.h
    ell = h * math.hypot(a, b)
    t, w = _simpson_nodes_weights(intervals)
    idx = np.nonzero(mask)[0]
    i, j = np.divmod(idx, m.n)
    acc = np.zeros(idx.size)
    L = spec.background.side
    for tk, wk in zip(t, w):
        pts = np.stack([np.mod((i + tk * a) * h, L), np.mod((j + tk * b) * h, L)], axis=-1)
        acc += wk * geo.factor_values(spec, pts)
    out = np.zeros(m.num_nodes)
    out[idx] = ell * acc
    return out


def _sphere_radial_profile(spec):
    fac = spec.factor
    if isinstance(fac, geo.ConstantFactor):
        return lambda r: np.full(np.shape(r), fac.value)
    if isinstance(fac, geo.RadialFactor) and abs(fac.center[0]) < 1e-12:
        return lambda r: geo.piecewise_values(fac.pieces, np.asarray(r, dtype=float))
    raise UnsupportedOperationError(
        "sphere meshes support constant factors and factors radial about the north pole"
    )


def _sphere_graph(spec, m, intervals):
    profile = _sphere_radial_profile(spec)
    dr = m.h
    dphi = 2.0 * math.pi / m.n_phi
    t, wts = _simpson_nodes_weights(intervals)
    rows, cols, data = [], [], []
    i_all = np.arange(1, m.n)
    for a, b in m.offsets():
        valid = (i_all + a >= 1) & (i_all + a <= m.n - 1)
        i = i_all[valid]
        if i.size == 0:
            continue
        r1 = i * dr
        r2 = (i + a) * dr
        cosang = (np.cos(r1) * np.cos(r2)
                  + np.sin(r1) * np.sin(r2) * math.cos(b * dphi))
        ang = np.arccos(np.clip(cosang, -1.0, 1.0))
        sinang = np.sin(ang)
        safe = sinang > 1e-15
        acc = np.zeros(i.size)
        z1, z2 = np.cos(r1), np.cos(r2)
        for tk, wk in zip(t, wts):
            z = np.where(
                safe,
                (np.sin((1.0 - tk) * ang) * z1 + np.sin(tk * ang) * z2)
                / np.where(safe, sinang, 1.0),
                z1,
            )
            acc += wk * profile(np.arccos(np.clip(z, -1.0, 1.0)))
        w_edge = ang * acc
        l = np.arange(m.n_phi)
        src = m.sphere_index(i[:, None], l[None, :])
        dst = m.sphere_index((i + a)[:, None], l[None, :] + b)
        rows.append(src.ravel())
        cols.append(dst.ravel())
        data.append(np.repeat(w_edge, m.n_phi))
    # poles: exact meridian integrals onto the full first ring
    w_north = quad.radial_length_integral(spec, 0.0, dr)
    w_south = quad.radial_length_integral(spec, math.pi - dr, math.pi)
    l = np.arange(m.n_phi)
    rows.append(np.zeros(m.n_phi, dtype=int))
    cols.append(m.sphere_index(np.full(m.n_phi, 1), l))
    data.append(np.full(m.n_phi, w_north))
    rows.append(np.ones(m.n_phi, dtype=int))
    cols.append(m.sphere_index(np.full(m.n_phi, m.n - 1), l))
    data.append(np.full(m.n_phi, w_south))
    return rows, cols, data


def build_edge_graph(spec: geo.MetricSpec, m: GridMesh,
                     simpson_nodes: int = EDGE_SIMPSON_INTERVALS) -> csr_matrix:
    """CSR graph of undirected stencil edges weighted by conformal length."""
    if m.background != spec.background:
        raise ValidationError("mesh and spec use different backgrounds")
    if m.is_torus:
        rows, cols, data = _torus_graph(spec, m, simpson_nodes)
    else:
        rows, cols, data = _sphere_graph(spec, m, simpson_nodes)
    w = np.concatenate(data)
    if np.any(~np.isfinite(w)) or np.any(w <= 0.0):
        raise InvalidMetricError("edge weighting produced nonpositive lengths")
    G = csr_matrix(
        (w, (np.concatenate(rows), np.concatenate(cols))),
        shape=(m.num_nodes, m.num_nodes),
    )
    return G


# ---------------------------------------------------------------------------
# distance fields
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DistanceField:
    """Shortest-path distances from one source node to every mesh node."""

    mesh: GridMesh
    spec: geo.MetricSpec
    source_point: tuple
    source_node: int
    values: np.ndarray

    def value_at(self, point) -> float:
        return float(self.values[self.mesh.nearest_node(point)])

    def to_binary(self, path):
        header = struct.pack(
            "<4sIIId", BINARY_MAGIC, BINARY_VERSION, self.mesh.n,
            self.mesh.stencil_order, self.mesh.background.side,
        )
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(spec_hash(self.spec))
            fh.write(np.ascontiguousarray(self.values, dtype="<f8").tobytes())

    def to_csv(self, path):
        pts = self.mesh.node_points()
        with open(path, "w") as fh:
            fh.write("x0,x1,distance\n")
            for (x0, x1), v in zip(pts, self.values):
                fh.write(f"{x0:.12g},{x1:.12g},{v:.12g}\n")


def load_binary_field(path):
    """Read a distance-field dump; returns (header dict, values)."""
    with open(path, "rb") as fh:
        magic, version, n, k, side = struct.unpack("<4sIIId", fh.read(24))
        if magic != BINARY_MAGIC or version != BINARY_VERSION:
            raise ValidationError("not a distance-field dump")
        h = fh.read(32)
        values = np.frombuffer(fh.read(), dtype="<f8")
    return {"n": n, "stencil_order": k, "side": side, "spec_hash": h.hex()}, values


def solve_fields(spec: geo.MetricSpec, m: GridMesh, sources,
                 simpson_nodes: int = EDGE_SIMPSON_INTERVALS,
                 graph: csr_matrix | None = None) -> list[DistanceField]:
    """Single-source solves for several sources over one shared edge graph."""
    if graph is None:
        graph = build_edge_graph(spec, m, simpson_nodes)
    nodes = [m.nearest_node(p) for p in sources]
    dist = _csgraph_dijkstra(graph, directed=False, indices=nodes)
    dist = np.atleast_2d(dist)
    return [
        DistanceField(m, spec, tuple(np.asarray(p, dtype=float).tolist()), node, row)
        for p, node, row in zip(sources, nodes, dist)
    ]


def solve_distance(spec: geo.MetricSpec, m: GridMesh, source,
                   simpson_nodes: int = EDGE_SIMPSON_INTERVALS,
                   graph: csr_matrix | None = None) -> DistanceField:
    """Distances from ``source`` (snapped to the nearest node) to all nodes."""
    return solve_fields(spec, m, [source], simpson_nodes, graph)[0]


def distance(spec: geo.MetricSpec, m: GridMesh, p, q,
             simpson_nodes: int = EDGE_SIMPSON_INTERVALS,
             graph: csr_matrix | None = None) -> float:
    """Convenience wrapper: one solve, one node read."""
    return solve_distance(spec, m, p, simpson_nodes, graph).value_at(q)


def mesh_pair_distances(spec: geo.MetricSpec, m: GridMesh, pairs,
                        simpson_nodes: int = EDGE_SIMPSON_INTERVALS,
                        graph: csr_matrix | None = None) -> np.ndarray:
    """Solver distances for an array of point pairs, batched by source node."""
    arr = pairs.pairs if hasattr(pairs, "pairs") else np.asarray(pairs, dtype=float)
    if graph is None:
        graph = build_edge_graph(spec, m, simpson_nodes)
    src_nodes = np.array([m.nearest_node(p) for p in arr[:, 0]])
    dst_nodes = np.array([m.nearest_node(q) for q in arr[:, 1]])
    uniq, inverse = np.unique(src_nodes, return_inverse=True)
    dist = np.atleast_2d(_csgraph_dijkstra(graph, directed=False, indices=uniq))
    return dist[inverse, dst_nodes]


# ---------------------------------------------------------------------------
# diameter estimates
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DiameterEstimate:
    """Sampled sup of solver distances; a lower bound on the discrete diameter.

    ``lo``/``hi`` bracket the continuous diameter using the stencil factor:
    lo deflates by mu(k) and the lattice spacing, hi only adds back the
    source-coverage slack.
    """

    value: float
    lo: float
    hi: float
    sources: int


def halton_points(count, dim=2, bases=(2, 3)):
    """Radical-inverse low-discrepancy points in [0, 1)^dim."""
    out = np.empty((count, dim))
    idx = np.arange(1, count + 1)
    for d in range(dim):
        base = bases[d]
        n = idx.copy()
        f = 1.0 / base
        val = np.zeros(count)
        while np.any(n > 0):
            val += (n % base) * f
            n //= base
            f /= base
        out[:, d] = val
    return out


def diameter_estimate(spec: geo.MetricSpec, m: GridMesh, sources: int = 8,
                      simpson_nodes: int = EDGE_SIMPSON_INTERVALS,
                      graph: csr_matrix | None = None) -> DiameterEstimate:
    """Max over Halton-placed sources of the max solver distance."""
    if sources < 4:
        raise ValidationError("diameter estimate needs at least 4 sources")
    if m.is_torus:
        pts = halton_points(sources) * spec.background.side
    else:
        u = halton_points(sources)
        pts = np.stack([np.arccos(1.0 - 2.0 * u[:, 0]), 2.0 * math.pi * u[:, 1]], axis=-1)
    fields = solve_fields(spec, m, list(pts), simpson_nodes, graph)
    value = max(float(np.max(f.values)) for f in fields)
    slack = 2.0 * m.h
    return DiameterEstimate(value, max(0.0, value / m.mu - slack), value + slack, sources)


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SamplePairSet:
    """Deterministic pseudo-random point pairs, uniform in the g0 measure."""

    background: geo.Background
    pairs: np.ndarray  # (P, 2, m)
    seed: int

    def __len__(self):
        return self.pairs.shape[0]


def _uniform_points(bg, count, rng):
    if bg.kind == geo.TORUS:
        return rng.uniform(0.0, bg.side, size=(count, bg.dim))
    z = rng.uniform(-1.0, 1.0, size=count)
    phi = rng.uniform(0.0, 2.0 * math.pi, size=count)
    return np.stack([np.arccos(z), phi], axis=-1)


def sample_pairs(bg: geo.Background, count: int, seed: int = 0) -> SamplePairSet:
    """``count`` independent uniform pairs; coincident pairs are resampled."""
    if count < 1:
        raise ValidationError("pair count must be >= 1")
    rng = np.random.default_rng(seed)
    p = _uniform_points(bg, count, rng)
    q = _uniform_points(bg, count, rng)
    for _ in range(8):
        d = geo.background_distance_many(bg, p, q)
        bad = d < 1e-9
        if not np.any(bad):
            break
        q[bad] = _uniform_points(bg, int(np.sum(bad)), rng)
    return SamplePairSet(bg, np.stack([p, q], axis=1), seed)


def sample_pooled_pairs(bg: geo.Background, sources: int, per_source: int,
                        seed: int = 0) -> SamplePairSet:
    """Pairs drawn as (source pool) x (targets): cheap to solve in batches.

    Every pair is marginally uniform; first components repeat so that mesh
    oracles need only ``sources`` shortest-path solves.
    """
    if sources < 1 or per_source < 1:
        raise ValidationError("sources and per_source must be >= 1")
    rng = np.random.default_rng(seed)
    src = _uniform_points(bg, sources, rng)
    p = np.repeat(src, per_source, axis=0)
    q = _uniform_points(bg, sources * per_source, rng)
    d = geo.background_distance_many(bg, p, q)
    bad = d < 1e-9
    if np.any(bad):
        q[bad] = _uniform_points(bg, int(np.sum(bad)), rng)
    return SamplePairSet(bg, np.stack([p, q], axis=1), seed)


def pair_set_from_points(bg: geo.Background, p_points, q_points, seed: int = -1) -> SamplePairSet:
    p = np.asarray(p_points, dtype=float)
    q = np.asarray(q_points, dtype=float)
    return SamplePairSet(bg, np.stack([p, q], axis=1), seed)


# ---------------------------------------------------------------------------
# distance oracles (pair set -> distances)
# ---------------------------------------------------------------------------

def background_oracle(bg: geo.Background):
    return lambda ps: geo.background_distance_many(bg, ps.pairs[:, 0], ps.pairs[:, 1])


def taxi_oracle(bg: geo.Background):
    return lambda ps: geo.taxi_distance_many(bg, ps.pairs[:, 0], ps.pairs[:, 1])


def scaled_background_oracle(bg: geo.Background, c: float):
    base = background_oracle(bg)
    return lambda ps: c * base(ps)


def mesh_oracle(spec: geo.MetricSpec, m: GridMesh,
                simpson_nodes: int = EDGE_SIMPSON_INTERVALS):
    """Solver-backed oracle; builds its edge graph once, lazily."""
    state = {}

    def oracle(ps):
        if "graph" not in state:
            state["graph"] = build_edge_graph(spec, m, simpson_nodes)
        return mesh_pair_distances(spec, m, ps, simpson_nodes, state["graph"])

    return oracle
