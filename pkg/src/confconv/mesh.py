"""Stencil grid meshes on 2-tori and the 2-sphere.

Torus meshes are fully periodic ``n x n`` lattices; sphere meshes use a
``(r, phi)`` lattice of ``n - 1`` interior rows (``2n`` columns) plus two
pole nodes connected to the full first ring.  Cell areas partition the
background measure exactly: squares on the torus, latitude bands and polar
caps on the sphere.

Stencil orders: k = 1, 2, 3 give 4-, 8-, 16-neighbor connectivity with
worst-case metrication factors sqrt(2), 1/cos(pi/8), 1/cos(pi/16) for the
unit factor on tori.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import geometry as geo
from .errors import UnsupportedOperationError, ValidationError

#: Forward half of the neighbor stencil per order (the solver treats edges
#: as undirected, so each neighbor pair is stored once).
FORWARD_OFFSETS = {
    1: ((1, 0), (0, 1)),
    2: ((1, 0), (0, 1), (1, 1), (1, -1)),
    3: ((1, 0), (0, 1), (1, 1), (1, -1), (1, 2), (2, 1), (2, -1), (1, -2)),
}

#: Worst-case ratio of stencil path length to straight-line length (torus,
#: unit factor): the stencil resolves directions to within pi / 2**(k+1).
MU = {1: math.sqrt(2.0), 2: 1.0 / math.cos(math.pi / 8.0), 3: 1.0 / math.cos(math.pi / 16.0)}


@dataclass(frozen=True)
class GridMesh:
    background: geo.Background
    n: int
    stencil_order: int

    def __post_init__(self):
        if self.n < 16:
            raise ValidationError("mesh needs n >= 16 nodes per period/axis")
        if self.stencil_order not in FORWARD_OFFSETS:
            raise ValidationError("stencil_order must be 1, 2, or 3")
        if self.background.dim != 2:
            raise UnsupportedOperationError("meshes are implemented for dimension 2")

    # -- shared geometry ---------------------------------------------------

    @property
    def is_torus(self) -> bool:
        return self.background.kind == geo.TORUS

    @property
    def h(self) -> float:
        """Lattice spacing: L/n on the torus, pi/n (the row step) on the sphere."""
        if self.is_torus:
            return self.background.side / self.n
        return math.pi / self.n

    @property
    def mu(self) -> float:
        return MU[self.stencil_order]

    @property
    def n_phi(self) -> int:
        return 2 * self.n

    @property
    def num_nodes(self) -> int:
        if self.is_torus:
            return self.n * self.n
        return 2 + (self.n - 1) * self.n_phi

    def offsets(self):
        return FORWARD_OFFSETS[self.stencil_order]

    # -- node coordinates and measures --------------------------------------

    @cached_property
    def _node_points(self) -> np.ndarray:
        if self.is_torus:
            idx = np.arange(self.num_nodes)
            i, j = np.divmod(idx, self.n)
            return np.stack([i * self.h, j * self.h], axis=-1)
        pts = np.empty((self.num_nodes, 2))
        pts[0] = (0.0, 0.0)
        pts[1] = (math.pi, 0.0)
        rows = np.arange(1, self.n) * self.h
        cols = np.arange(self.n_phi) * (2.0 * math.pi / self.n_phi)
        R, P = np.meshgrid(rows, cols, indexing="ij")
        pts[2:, 0] = R.ravel()
        pts[2:, 1] = P.ravel()
        return pts

    def node_points(self) -> np.ndarray:
        """Canonical coordinates of every node, shape (N, 2)."""
        return self._node_points

    @cached_property
    def _cell_areas(self) -> np.ndarray:
        if self.is_torus:
            return np.full(self.num_nodes, self.h * self.h)
        dr = self.h
        dphi = 2.0 * math.pi / self.n_phi
        areas = np.empty(self.num_nodes)
        cap = 2.0 * math.pi * (1.0 - math.cos(dr / 2.0))
        areas[0] = areas[1] = cap
        r = np.arange(1, self.n) * dr
        band = dphi * (np.cos(r - dr / 2.0) - np.cos(r + dr / 2.0))
        areas[2:] = np.repeat(band, self.n_phi)
        return areas

    def cell_areas(self) -> np.ndarray:
        """Background measure per node; sums exactly to the total volume."""
        return self._cell_areas

    # -- indexing ------------------------------------------------------------

    def torus_index(self, i, j):
        return (np.mod(i, self.n)) * self.n + np.mod(j, self.n)

    def sphere_index(self, i, l):
        return 2 + (np.asarray(i) - 1) * self.n_phi + np.mod(l, self.n_phi)

    def nearest_node(self, point) -> int:
        p = geo.canonical_point(self.background, point)
        if self.is_torus:
            i = int(round(float(p[0]) / self.h)) % self.n
            j = int(round(float(p[1]) / self.h)) % self.n
            return int(self.torus_index(i, j))
        r, phi = float(p[0]), float(p[1])
        i = int(round(r / self.h))
        if i <= 0:
            return 0
        if i >= self.n:
            return 1
        l = int(round(phi / (2.0 * math.pi / self.n_phi))) % self.n_phi
        return int(self.sphere_index(i, l))


def build_mesh(bg: geo.Background, n: int, stencil_order: int = 3) -> GridMesh:
    """Validated mesh constructor (spheres are supported for dim 2 only)."""
    if bg.kind == geo.SPHERE and bg.dim != 2:
        raise UnsupportedOperationError("sphere meshes require dimension 2")
    return GridMesh(bg, n, stencil_order)
