"""Backgrounds, conformal factors, and pointwise metric algebra.

Every metric handled by this package is conformal, ``g = f**2 * g0``, where
``g0`` is either a flat torus ``[0, L)**m`` or the unit round sphere and
``f`` is a positive continuous factor.  This module owns:

* the two backgrounds with their closed-form distances and taxi distances,
* the factor profiles (constants, ramps, reciprocal-log pieces, lattice
  corridors, disjoint multi-bumps) with vectorized evaluation,
* tensor norms from eigenvalue tuples,
* curve lengths by composite Simpson quadrature along background geodesics,
* (de)serialization of a ``MetricSpec`` to a plain key/value tree.

Conventions: torus points are coordinate vectors reduced mod the period L;
sphere points are pairs ``(r, phi)`` with ``r`` the geodesic distance from
the north pole in ``[0, pi]`` and ``phi in [0, 2*pi)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DomainError,
    InvalidTensorError,
    UnsupportedOperationError,
    ValidationError,
)

TORUS = "flat_torus"
SPHERE = "round_sphere"

#: Continuity slack allowed between adjacent radial pieces.
CONTINUITY_TOL = 1e-9


# ---------------------------------------------------------------------------
# backgrounds
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Background:
    """A flat torus ``[0, side)**dim`` or the unit round sphere.

    The sphere keeps ``side`` for uniformity but ignores it (radius 1);
    sphere mesh numerics are restricted to ``dim == 2`` elsewhere.
    """

    kind: str
    dim: int = 2
    side: float = 2.0 * math.pi

    def __post_init__(self):
        if self.kind not in (TORUS, SPHERE):
            raise ValidationError(f"unknown background kind {self.kind!r}")
        if self.dim < 2:
            raise ValidationError("background dimension must be >= 2")
        if self.kind == TORUS and not self.side > 0:
            raise ValidationError("torus period must be positive")

    @property
    def diameter(self) -> float:
        """Diameter of the background: sqrt(m)*L/2 for tori, pi for spheres."""
        if self.kind == TORUS:
            return math.sqrt(self.dim) * self.side / 2.0
        return math.pi

    @property
    def volume(self) -> float:
        """Total measure: L**m for tori, surface area of the unit m-sphere."""
        if self.kind == TORUS:
            return self.side ** self.dim
        m = self.dim
        return 2.0 * math.pi ** ((m + 1) / 2.0) / math.gamma((m + 1) / 2.0)


def flat_torus(dim: int = 2, side: float = 2.0 * math.pi) -> Background:
    return Background(TORUS, dim, side)


def round_sphere(dim: int = 2) -> Background:
    return Background(SPHERE, dim)


def canonical_point(bg: Background, coords) -> np.ndarray:
    """Reduce coordinates to the canonical chart of ``bg``.

    Torus coordinates are wrapped mod the period.  Sphere coordinates must
    satisfy ``0 <= r <= pi``; ``phi`` is wrapped mod ``2*pi``.
    """
    x = np.asarray(coords, dtype=float)
    if bg.kind == TORUS:
        if x.shape[-1] != bg.dim:
            raise DomainError(f"expected {bg.dim} torus coordinates, got {x.shape[-1]}")
        return np.mod(x, bg.side)
    if x.shape[-1] != 2:
        raise DomainError("sphere points are (r, phi) pairs")
    r = x[..., 0]
    if np.any(r < -1e-12) or np.any(r > math.pi + 1e-12):
        raise DomainError("sphere polar distance r must lie in [0, pi]")
    out = np.stack([np.clip(r, 0.0, math.pi), np.mod(x[..., 1], 2.0 * math.pi)], axis=-1)
    return out


def torus_wrap(bg: Background, delta) -> np.ndarray:
    """Minimal-image displacement on the torus, coordinatewise in (-L/2, L/2]."""
    L = bg.side
    return np.mod(np.asarray(delta, dtype=float) + L / 2.0, L) - L / 2.0


def sphere_to_xyz(points) -> np.ndarray:
    """Embed (r, phi) sphere points as unit vectors in R^3."""
    pts = np.asarray(points, dtype=float)
    r, phi = pts[..., 0], pts[..., 1]
    sr = np.sin(r)
    return np.stack([sr * np.cos(phi), sr * np.sin(phi), np.cos(r)], axis=-1)


def xyz_to_sphere(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    r = np.arccos(np.clip(v[..., 2], -1.0, 1.0))
    phi = np.mod(np.arctan2(v[..., 1], v[..., 0]), 2.0 * math.pi)
    return np.stack([r, phi], axis=-1)


def background_distance_many(bg: Background, p, q) -> np.ndarray:
    """Vectorized closed-form background distance between point arrays."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if bg.kind == TORUS:
        return np.sqrt(np.sum(torus_wrap(bg, p - q) ** 2, axis=-1))
    r1, f1 = p[..., 0], p[..., 1]
    r2, f2 = q[..., 0], q[..., 1]
    c = np.cos(r1) * np.cos(r2) + np.sin(r1) * np.sin(r2) * np.cos(f1 - f2)
    return np.arccos(np.clip(c, -1.0, 1.0))


def background_distance(bg: Background, p, q) -> float:
    """Closed-form distance: minimal coordinate wrap (torus) or great circle."""
    p = canonical_point(bg, p)
    q = canonical_point(bg, q)
    return float(background_distance_many(bg, p, q))


def taxi_distance_many(bg: Background, p, q) -> np.ndarray:
    if bg.kind != TORUS:
        raise UnsupportedOperationError("taxi distance is defined on tori only")
    return np.sum(np.abs(torus_wrap(bg, np.asarray(p, float) - np.asarray(q, float))), axis=-1)


def taxi_distance(bg: Background, p, q) -> float:
    """Sum of per-coordinate circle distances (product taxi metric)."""
    p = canonical_point(bg, p)
    q = canonical_point(bg, q)
    return float(taxi_distance_many(bg, p, q))


# ---------------------------------------------------------------------------
# radial profiles
# ---------------------------------------------------------------------------

PROFILES = ("const", "linear", "hermite", "log_ramp", "recip_log")


def _smoothstep(t):
    return t * t * (3.0 - 2.0 * t)


def _sharp_smoothstep(t, gamma):
    # Monotone reparameterized smoothstep; gamma=1 recovers 3t^2 - 2t^3.
    return 1.0 - (1.0 - _smoothstep(t)) ** gamma


def recip_log(r):
    """The profile r -> 1 / (r * (1 - ln r)), defined for 0 < r < e."""
    r = np.asarray(r, dtype=float)
    return 1.0 / (r * (1.0 - np.log(r)))


@dataclass(frozen=True)
class Piece:
    """One radial piece of a conformal factor on the interval [r0, r1].

    ``a`` and ``b`` are the endpoint values.  Profiles:

    * ``const``     constant value ``a`` (requires ``a == b``),
    * ``linear``    straight ramp from ``a`` to ``b``,
    * ``hermite``   monotone cubic with zero slope at both ends,
    * ``log_ramp``  exp-linear ramp ``exp((1-S_g(t)) ln a + S_g(t) ln b)``
                    through the sharpened smoothstep ``S_g``; zero end slopes,
    * ``recip_log`` the fixed profile ``1/(r (1 - ln r))`` (a, b implied).
    """

    r0: float
    r1: float
    profile: str
    a: float
    b: float
    sharpness: float = 1.0

    def __post_init__(self):
        if self.profile not in PROFILES:
            raise ValidationError(f"unknown profile {self.profile!r}")
        if not self.r1 > self.r0 >= 0.0:
            raise ValidationError("piece interval must satisfy 0 <= r0 < r1")
        if self.profile == "recip_log" and not (0.0 < self.r0 and self.r1 < math.e):
            raise ValidationError("recip_log piece requires 0 < r0 < r1 < e")
        if min(self.endpoint_values()) <= 0.0:
            raise ValidationError("conformal factor must be positive")
        if self.profile == "const" and self.a != self.b:
            raise ValidationError("const piece needs a == b")
        if self.sharpness < 1.0:
            raise ValidationError("sharpness must be >= 1")

    def endpoint_values(self) -> tuple[float, float]:
        if self.profile == "recip_log":
            return float(recip_log(self.r0)), float(recip_log(self.r1))
        return self.a, self.b

    def values(self, r) -> np.ndarray:
        """Evaluate the piece profile on radii ``r`` (no interval check)."""
        r = np.asarray(r, dtype=float)
        if self.profile == "const":
            return np.full_like(r, self.a)
        if self.profile == "recip_log":
            return recip_log(np.clip(r, self.r0, self.r1))
        t = np.clip((r - self.r0) / (self.r1 - self.r0), 0.0, 1.0)
        if self.profile == "linear":
            return self.a + (self.b - self.a) * t
        if self.profile == "hermite":
            return self.a + (self.b - self.a) * _smoothstep(t)
        s = _sharp_smoothstep(t, self.sharpness)
        return np.exp(np.log(self.a) * (1.0 - s) + np.log(self.b) * s)

    def is_monotone(self) -> bool:
        return True  # every supported profile is monotone on its interval


def _validate_pieces(pieces, r_max, where):
    if not pieces:
        raise ValidationError(f"{where}: at least one piece required")
    if abs(pieces[0].r0) > 1e-12:
        raise ValidationError(f"{where}: pieces must start at r = 0")
    for left, right in zip(pieces, pieces[1:]):
        if abs(left.r1 - right.r0) > 1e-12:
            raise ValidationError(f"{where}: pieces must tile the radial interval")
        va = left.endpoint_values()[1]
        vb = right.endpoint_values()[0]
        if abs(va - vb) > CONTINUITY_TOL * max(1.0, abs(va)):
            raise ValidationError(
                f"{where}: discontinuity {va:g} vs {vb:g} at r = {left.r1:g}"
            )
    if r_max is not None and abs(pieces[-1].r1 - r_max) > 1e-9:
        raise ValidationError(f"{where}: pieces must reach r_max = {r_max:g}")


def piecewise_values(pieces, r) -> np.ndarray:
    """Evaluate a contiguous piece list on radii ``r`` (clamped at the ends)."""
    r = np.asarray(r, dtype=float)
    out = np.empty_like(r)
    out.fill(np.nan)
    for idx, piece in enumerate(pieces):
        if idx == 0:
            mask = r <= piece.r1
        elif idx == len(pieces) - 1:
            mask = r > piece.r0
        else:
            mask = (r > piece.r0) & (r <= piece.r1)
        if np.any(mask):
            out[mask] = piece.values(r[mask])
    return out


# ---------------------------------------------------------------------------
# conformal factors
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConstantFactor:
    value: float

    def __post_init__(self):
        if not self.value > 0:
            raise ValidationError("constant factor must be positive")


@dataclass(frozen=True)
class RadialFactor:
    """A factor depending only on the background distance to ``center``."""

    center: tuple
    pieces: tuple

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        object.__setattr__(self, "pieces", tuple(self.pieces))
        _validate_pieces(self.pieces, None, "radial factor")

    @property
    def r_max(self) -> float:
        return self.pieces[-1].r1

    def support_radius(self) -> float:
        """Outer radius beyond which the factor is identically 1."""
        r = 0.0
        for piece in self.pieces:
            va, vb = piece.endpoint_values()
            if not (piece.profile == "const" and va == 1.0):
                r = piece.r1
        return r


@dataclass(frozen=True)
class LatticeCorridorFactor:
    """``inner`` on the tube of radius ``side * 2**-(level+2)`` around the
    level-``level`` coordinate lattice, ``outer`` elsewhere."""

    level: int
    inner: float
    outer: float

    def __post_init__(self):
        if self.level < 1:
            raise ValidationError("corridor level must be >= 1")
        if min(self.inner, self.outer) <= 0:
            raise ValidationError("corridor values must be positive")

    def spacing(self, side: float) -> float:
        return side * 2.0 ** (-self.level)

    def tube_radius(self, side: float) -> float:
        return side * 2.0 ** (-(self.level + 2))


@dataclass(frozen=True)
class MultiBumpFactor:
    """Identical radial bumps at several centers, 1 outside every bump.

    ``pieces`` describe the common profile on [0, R]; the profile must end
    at the value 1.  Bumps are required to be pairwise disjoint.
    """

    centers: tuple
    pieces: tuple

    def __post_init__(self):
        object.__setattr__(
            self, "centers", tuple(tuple(float(c) for c in ctr) for ctr in self.centers)
        )
        object.__setattr__(self, "pieces", tuple(self.pieces))
        _validate_pieces(self.pieces, None, "multi-bump factor")
        if abs(self.pieces[-1].endpoint_values()[1] - 1.0) > CONTINUITY_TOL:
            raise ValidationError("multi-bump profile must end at the value 1")
        if not self.centers:
            raise ValidationError("multi-bump factor needs at least one center")

    @property
    def support_radius(self) -> float:
        return self.pieces[-1].r1


@dataclass(frozen=True)
class MetricSpec:
    """A background plus a conformal factor: the metric ``f**2 g0``.

    ``bounds``, when set, declares a global envelope ``lo <= f <= hi`` that
    downstream checks may verify by sampling.
    """

    background: Background
    factor: object
    label: str = ""
    bounds: tuple | None = None

    def __post_init__(self):
        fac = self.factor
        if isinstance(fac, MultiBumpFactor):
            _check_disjoint_bumps(self.background, fac)
        if isinstance(fac, LatticeCorridorFactor) and self.background.kind != TORUS:
            raise ValidationError("lattice corridors are defined on tori only")
        if isinstance(fac, RadialFactor):
            r_max = self.background.diameter
            if abs(fac.r_max - r_max) > 1e-9:
                raise ValidationError(
                    f"radial pieces must reach the background diameter {r_max:g}"
                )
        if self.bounds is not None:
            lo, hi = self.bounds
            if not (0 < lo <= hi):
                raise ValidationError("bounds must satisfy 0 < lo <= hi")


def _check_disjoint_bumps(bg, fac):
    R = fac.support_radius
    centers = [np.asarray(c) for c in fac.centers]
    for i in range(len(centers)):
        for k in range(i + 1, len(centers)):
            d = background_distance(bg, centers[i], centers[k])
            if d <= 2.0 * R:
                raise ValidationError(
                    f"bump supports overlap: centers {i} and {k} at distance "
                    f"{d:g} <= 2 * {R:g}"
                )


# ---------------------------------------------------------------------------
# factor evaluation
# ---------------------------------------------------------------------------

def _corridor_values(bg, fac, pts):
    w = fac.tube_radius(bg.side)
    s = fac.spacing(bg.side)
    # distance of each coordinate to the nearest lattice hyperplane
    frac = np.abs(pts / s - np.round(pts / s)) * s
    dist = np.min(frac, axis=-1)
    return np.where(dist <= w, fac.inner, fac.outer)


def factor_values(spec: MetricSpec, pts) -> np.ndarray:
    """Vectorized factor evaluation on an array of canonical points.

    ``pts`` has shape ``(..., m)`` for tori and ``(..., 2)`` for spheres.
    """
    bg = spec.background
    fac = spec.factor
    pts = np.asarray(pts, dtype=float)
    if isinstance(fac, ConstantFactor):
        return np.full(pts.shape[:-1], fac.value)
    if isinstance(fac, RadialFactor):
        r = background_distance_many(bg, pts, np.asarray(fac.center, dtype=float))
        return piecewise_values(fac.pieces, r)
    if isinstance(fac, LatticeCorridorFactor):
        return _corridor_values(bg, fac, pts)
    if isinstance(fac, MultiBumpFactor):
        out = np.ones(pts.shape[:-1])
        R = fac.support_radius
        for center in fac.centers:
            r = background_distance_many(bg, pts, np.asarray(center, dtype=float))
            mask = r < R
            if np.any(mask):
                out[mask] = piecewise_values(fac.pieces, r[mask])
        return out
    raise UnsupportedOperationError(f"cannot evaluate factor {type(fac).__name__}")


def radial_profile_values(spec: MetricSpec, r) -> np.ndarray:
    """Evaluate a radial (or multi-bump) factor as a function of the radius."""
    fac = spec.factor
    if isinstance(fac, ConstantFactor):
        return np.full(np.shape(r), fac.value)
    if isinstance(fac, RadialFactor):
        return piecewise_values(fac.pieces, r)
    if isinstance(fac, MultiBumpFactor):
        r = np.asarray(r, dtype=float)
        out = np.ones_like(r)
        mask = r < fac.support_radius
        out[mask] = piecewise_values(fac.pieces, r[mask])
        return out
    raise UnsupportedOperationError("factor has no radial profile")


def eval_factor(spec: MetricSpec, x) -> float:
    """Evaluate ``f`` at a single point after canonicalizing it."""
    p = canonical_point(spec.background, x)
    return float(factor_values(spec, p))


# ---------------------------------------------------------------------------
# tensor norms
# ---------------------------------------------------------------------------

def tensor_norm(lams) -> float:
    """Frobenius-type norm sqrt(sum lam_i^4) from eigenvalues lam_i^2.

    ``lams`` lists the eigenvalues of a tensor relative to the background,
    i.e. the squares lam_i^2; for a conformal tensor ``f**2 g0`` in
    dimension m all entries equal ``f**2`` and the norm is ``sqrt(m) f**2``.
    """
    lam2 = np.asarray(lams, dtype=float)
    if lam2.size == 0 or np.any(lam2 <= 0.0):
        raise InvalidTensorError("eigenvalues lam_i^2 must be strictly positive")
    return float(np.sqrt(np.sum(lam2 ** 2)))


def deviation_norm(lams) -> float:
    """Norm of ``g - g0``: sqrt(sum (lam_i^2 - 1)^2)."""
    lam2 = np.asarray(lams, dtype=float)
    if lam2.size == 0 or np.any(lam2 <= 0.0):
        raise InvalidTensorError("eigenvalues lam_i^2 must be strictly positive")
    return float(np.sqrt(np.sum((lam2 - 1.0) ** 2)))


@dataclass(frozen=True)
class EigenvalueField:
    """Sampled eigenvalues of a tensor relative to the background.

    ``lams`` has shape (N, m) holding lam_i^2 per sample; ``weights`` holds
    the background cell measures, so weighted sums discretize integrals.
    """

    weights: np.ndarray
    lams: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        lam = np.asarray(self.lams, dtype=float)
        if lam.ndim != 2 or w.ndim != 1 or lam.shape[0] != w.shape[0]:
            raise InvalidTensorError("weights (N,) and lams (N, m) required")
        if lam.shape[0] == 0:
            raise InvalidTensorError("eigenvalue field must be nonempty")
        if np.any(lam <= 0.0):
            raise InvalidTensorError("eigenvalues lam_i^2 must be strictly positive")
        if np.any(w < 0.0):
            raise InvalidTensorError("weights must be nonnegative")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "lams", lam)

    @property
    def dim(self) -> int:
        return self.lams.shape[1]

    def tensor_norms(self) -> np.ndarray:
        return np.sqrt(np.sum(self.lams ** 2, axis=1))

    def deviation_norms(self) -> np.ndarray:
        return np.sqrt(np.sum((self.lams - 1.0) ** 2, axis=1))


def conformal_eigenvalue_field(spec: MetricSpec, pts, weights) -> EigenvalueField:
    """EigenvalueField of ``f**2 g0`` sampled at ``pts`` with cell ``weights``."""
    f = factor_values(spec, pts)
    lam = np.repeat((f ** 2)[:, None], spec.background.dim, axis=1)
    return EigenvalueField(np.asarray(weights, dtype=float), lam)


# ---------------------------------------------------------------------------
# curve lengths
# ---------------------------------------------------------------------------

def _simpson_weights(n: int) -> np.ndarray:
    if n % 2 == 1:
        n += 1
    w = np.ones(n + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w / (3.0 * n)


def _segment_points_torus(bg, p, q, ts):
    disp = torus_wrap(bg, np.asarray(q, float) - np.asarray(p, float))
    pts = np.asarray(p, float)[None, :] + ts[:, None] * disp[None, :]
    return np.mod(pts, bg.side), float(np.linalg.norm(disp))

def _segment_points_sphere(p, q, ts):
    v1, v2 = sphere_to_xyz(p), sphere_to_xyz(q)
    cosang = float(np.clip(np.dot(v1, v2), -1.0, 1.0))
    ang = math.acos(cosang)
    if ang < 1e-15:
        return np.broadcast_to(np.asarray(p, float), (ts.size, 2)).copy(), 0.0
    s = math.sin(ang)
    vs = (np.sin((1.0 - ts) * ang)[:, None] * v1 + np.sin(ts * ang)[:, None] * v2) / s
    return xyz_to_sphere(vs), ang


def curve_length(spec: MetricSpec, polyline, subdivisions: int = 64) -> float:
    """Conformal length of a polyline of background geodesic segments.

    Each segment contributes ``integral of f ds`` along the minimal-wrap
    straight segment (torus) or great-circle arc (sphere), computed with
    composite Simpson on ``subdivisions`` intervals.
    """
    if subdivisions < 1:
        raise ValidationError("subdivisions must be >= 1")
    pts = [canonical_point(spec.background, p) for p in polyline]
    if len(pts) < 2:
        raise ValidationError("polyline needs at least two points")
    n = subdivisions + (subdivisions % 2)
    ts = np.linspace(0.0, 1.0, n + 1)
    wts = _simpson_weights(n)
    total = 0.0
    for p, q in zip(pts, pts[1:]):
        if spec.background.kind == TORUS:
            samples, ell = _segment_points_torus(spec.background, p, q, ts)
        else:
            samples, ell = _segment_points_sphere(p, q, ts)
        if ell == 0.0:
            continue
        total += ell * float(np.dot(wts, factor_values(spec, samples)))
    return total


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def _piece_to_dict(piece: Piece) -> dict:
    d = {"r0": piece.r0, "r1": piece.r1, "profile": piece.profile,
         "a": piece.a, "b": piece.b}
    if piece.profile == "log_ramp":
        d["sharpness"] = piece.sharpness
    return d


def _piece_from_dict(d: dict) -> Piece:
    return Piece(d["r0"], d["r1"], d["profile"], d["a"], d["b"],
                 d.get("sharpness", 1.0))


def spec_to_dict(spec: MetricSpec) -> dict:
    """Serialize a MetricSpec to a plain key/value tree (JSON friendly)."""
    bg = spec.background
    doc = {
        "background": {"kind": bg.kind, "dim": bg.dim, "side": bg.side},
        "label": spec.label,
    }
    if spec.bounds is not None:
        doc["bounds"] = [spec.bounds[0], spec.bounds[1]]
    fac = spec.factor
    if isinstance(fac, ConstantFactor):
        doc["factor"] = {"kind": "constant", "value": fac.value}
    elif isinstance(fac, RadialFactor):
        doc["factor"] = {
            "kind": "radial",
            "center": list(fac.center),
            "pieces": [_piece_to_dict(p) for p in fac.pieces],
        }
    elif isinstance(fac, LatticeCorridorFactor):
        doc["factor"] = {
            "kind": "lattice_corridor",
            "level": fac.level,
            "inner": fac.inner,
            "outer": fac.outer,
        }
    elif isinstance(fac, MultiBumpFactor):
        doc["factor"] = {
            "kind": "multi_bump",
            "centers": [list(c) for c in fac.centers],
            "pieces": [_piece_to_dict(p) for p in fac.pieces],
        }
    else:
        raise UnsupportedOperationError("unserializable factor")
    return doc


def spec_from_dict(doc: dict) -> MetricSpec:
    bgd = doc["background"]
    bg = Background(bgd["kind"], int(bgd["dim"]), float(bgd.get("side", 2 * math.pi)))
    fd = doc["factor"]
    kind = fd["kind"]
    if kind == "constant":
        fac = ConstantFactor(float(fd["value"]))
    elif kind == "radial":
        fac = RadialFactor(tuple(fd["center"]), tuple(_piece_from_dict(p) for p in fd["pieces"]))
    elif kind == "lattice_corridor":
        fac = LatticeCorridorFactor(int(fd["level"]), float(fd["inner"]), float(fd["outer"]))
    elif kind == "multi_bump":
        fac = MultiBumpFactor(tuple(tuple(c) for c in fd["centers"]),
                              tuple(_piece_from_dict(p) for p in fd["pieces"]))
    else:
        raise ValidationError(f"unknown factor kind {kind!r}")
    bounds = tuple(doc["bounds"]) if "bounds" in doc else None
    return MetricSpec(bg, fac, doc.get("label", ""), bounds)
