"""The eight example families of conformal metric sequences.

Each family is a parameterized factory producing ``MetricSpec`` instances
indexed by ``j``, together with the list of claimed limits its runs are
judged against and exact closed-form rows (volume, radial diameter, L^p
functionals) for high-j trend tables.

Families on the 2-pi torus build a radial profile around one point:

* ``bump_C0_3_2``      f = K on [0, 1/j], ramp K -> 1 on [1/j, 2/j], else 1
* ``growing_bump_3_4`` same with K = j**alpha, alpha in (0, 1)
* ``bubble_3_5``       K = j with an exp-decay ramp whose bump integral
                       (1/j**m) int_1^2 h**m s**(m-1) ds is verified small
* ``diverging_3_6``    K = j**eta, eta > 1
* ``spline_3_7``       core j**eta/(1 + eta ln j) on [0, j**-eta], then the
                       reciprocal-log profile 1/(r (1 - ln r)) up to 1/j,
                       then a ramp j/(1 + ln j) -> 1
* ``many_splines_3_8`` k_j <= floor(sqrt(ln j)) disjoint copies of the
                       spline bump on an equatorial circle of centers

plus the unit-torus lattice-corridor family ``taxi_lattice_3_3`` and the
equator-cinched sphere family ``cinched_sphere_3_1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import geometry as geo
from . import quadrature as quad
from .errors import UnsupportedOperationError, ValidationError

EXAMPLE_IDS = (
    "cinched_sphere_3_1",
    "bump_C0_3_2",
    "taxi_lattice_3_3",
    "growing_bump_3_4",
    "bubble_3_5",
    "diverging_3_6",
    "spline_3_7",
    "many_splines_3_8",
)

#: sharpened-smoothstep exponent of the bubble family's exp-decay ramp;
#: steep enough that the bump-annulus integral is small at desk-scale j.
BUBBLE_RAMP_SHARPNESS = 12.0

TWO_PI = 2.0 * math.pi


# ---------------------------------------------------------------------------
# factories
# ---------------------------------------------------------------------------

def _require(cond, msg):
    if not cond:
        raise ValidationError(msg)


def _bump_pieces(j, top, r_max, ramp="hermite", sharpness=1.0):
    """f = top on [0, 1/j], ramp top -> 1 on [1/j, 2/j], 1 beyond."""
    pieces = [geo.Piece(0.0, 1.0 / j, "const", top, top)]
    if ramp == "linear":
        pieces.append(geo.Piece(1.0 / j, 2.0 / j, "linear", top, 1.0))
    elif ramp == "hermite":
        pieces.append(geo.Piece(1.0 / j, 2.0 / j, "hermite", top, 1.0))
    elif ramp == "log":
        pieces.append(geo.Piece(1.0 / j, 2.0 / j, "log_ramp", top, 1.0, sharpness))
    else:
        raise ValidationError(f"unknown ramp kind {ramp!r}")
    pieces.append(geo.Piece(2.0 / j, r_max, "const", 1.0, 1.0))
    return tuple(pieces)


def _spline_bump_pieces(j, eta, r_max=None, sharpness=1.0):
    """Core + reciprocal-log + ramp pieces of the spline bump (continuous)."""
    lnj = math.log(j)
    r_core = j ** (-eta)
    core = j ** eta / (1.0 + eta * lnj)      # continuity with 1/(r(1-ln r))
    top = j / (1.0 + lnj)
    pieces = [
        geo.Piece(0.0, r_core, "const", core, core),
        geo.Piece(r_core, 1.0 / j, "recip_log", core, top),
        geo.Piece(1.0 / j, 2.0 / j, "log_ramp", top, 1.0, sharpness),
    ]
    if r_max is not None:
        pieces.append(geo.Piece(2.0 / j, r_max, "const", 1.0, 1.0))
    return tuple(pieces)


def default_params(example_id: str) -> dict:
    return {
        "cinched_sphere_3_1": {"h0": 0.5},
        "bump_C0_3_2": {"K": 3.0, "m": 2, "ramp": "hermite"},
        "taxi_lattice_3_3": {},
        "growing_bump_3_4": {"alpha": 0.5, "m": 2, "ramp": "hermite"},
        "bubble_3_5": {"m": 2, "sharpness": BUBBLE_RAMP_SHARPNESS},
        "diverging_3_6": {"eta": 2.0, "m": 2, "ramp": "hermite"},
        "spline_3_7": {"eta": math.e, "m": 2},
        "many_splines_3_8": {"eta": math.e, "m": 2},
    }[example_id]


def bump_count(j: int) -> int:
    """Default bump schedule of the many-splines family: floor(sqrt(ln j))."""
    return max(1, int(math.floor(math.sqrt(math.log(j)))))


def make_example(example_id: str, j: int, params: dict | None = None) -> geo.MetricSpec:
    """Build the metric spec of one family member.

    Free constants are validated against their admissible ranges
    (``h0 in (0,1)``, ``K > 1``, ``alpha in (0,1)``, ``eta > 1``,
    ``j >= 2``); out-of-range values raise ``ValidationError``.
    """
    if example_id not in EXAMPLE_IDS:
        raise ValidationError(f"unknown example id {example_id!r}")
    _require(j >= 2, "examples need j >= 2")
    p = default_params(example_id)
    p.update(params or {})
    m = int(p.get("m", 2))
    _require(m >= 2, "dimension must be >= 2")

    if example_id == "cinched_sphere_3_1":
        h0 = float(p["h0"])
        _require(0.0 < h0 < 1.0, "h0 must lie in (0, 1)")
        _require(j >= 2, "band needs j >= 2")
        bg = geo.round_sphere(m)
        half = math.pi / 2.0
        pieces = (
            geo.Piece(0.0, half - 1.0 / j, "const", 1.0, 1.0),
            geo.Piece(half - 1.0 / j, half, "hermite", 1.0, h0),
            geo.Piece(half, half + 1.0 / j, "hermite", h0, 1.0),
            geo.Piece(half + 1.0 / j, math.pi, "const", 1.0, 1.0),
        )
        fac = geo.RadialFactor((0.0, 0.0), pieces)
        return geo.MetricSpec(bg, fac, f"ex3.1, j={j}, h0={h0:g}", bounds=(h0, 1.0))

    if example_id == "taxi_lattice_3_3":
        bg = geo.flat_torus(2, 1.0)
        fac = geo.LatticeCorridorFactor(j, 1.0, math.sqrt(2.0))
        return geo.MetricSpec(bg, fac, f"ex3.3, j={j}", bounds=(1.0, math.sqrt(2.0)))

    bg = geo.flat_torus(m, TWO_PI)
    r_max = bg.diameter
    center = (0.0,) * m

    if example_id == "bump_C0_3_2":
        K = float(p["K"])
        _require(K > 1.0, "K must exceed 1")
        fac = geo.RadialFactor(center, _bump_pieces(j, K, r_max, p["ramp"]))
        return geo.MetricSpec(bg, fac, f"ex3.2, j={j}, K={K:g}", bounds=(1.0, K))

    if example_id == "growing_bump_3_4":
        alpha = float(p["alpha"])
        _require(0.0 < alpha < 1.0, "alpha must lie in (0, 1)")
        top = float(j) ** alpha
        fac = geo.RadialFactor(center, _bump_pieces(j, top, r_max, p["ramp"]))
        return geo.MetricSpec(bg, fac, f"ex3.4, j={j}, alpha={alpha:g}", bounds=(1.0, top))

    if example_id == "bubble_3_5":
        sharp = float(p["sharpness"])
        fac = geo.RadialFactor(
            center, _bump_pieces(j, float(j), r_max, "log", sharp))
        spec = geo.MetricSpec(bg, fac, f"ex3.5, j={j}", bounds=(1.0, float(j)))
        _validate_bubble_ramp(spec, j, m, sharp)
        return spec

    if example_id == "diverging_3_6":
        eta = float(p["eta"])
        _require(eta > 1.0, "eta must exceed 1")
        top = float(j) ** eta
        fac = geo.RadialFactor(center, _bump_pieces(j, top, r_max, p["ramp"]))
        return geo.MetricSpec(bg, fac, f"ex3.6, j={j}, eta={eta:g}", bounds=(1.0, top))

    if example_id == "spline_3_7":
        eta = float(p["eta"])
        _require(eta > 1.0, "eta must exceed 1")
        fac = geo.RadialFactor(center, _spline_bump_pieces(j, eta, r_max))
        top = j ** eta / (1.0 + eta * math.log(j))
        return geo.MetricSpec(bg, fac, f"ex3.7, j={j}, eta={eta:g}", bounds=(1.0, top))

    # many_splines_3_8
    eta = float(p["eta"])
    _require(eta > 1.0, "eta must exceed 1")
    k = int(p.get("k", bump_count(j)))
    _require(k >= 1, "bump count must be >= 1")
    spacing = TWO_PI / k
    if 2.0 / j >= spacing / 2.0:
        raise ValidationError(
            f"bumps of radius {2.0 / j:g} overlap at spacing {spacing:g}: "
            f"need 2/j < half the center spacing (j too small for k={k})"
        )
    mid = (TWO_PI / 2.0,) * (m - 1)
    centers = tuple(((i + 0.5) * spacing,) + mid for i in range(k))
    fac = geo.MultiBumpFactor(centers, _spline_bump_pieces(j, eta))
    top = j ** eta / (1.0 + eta * math.log(j))
    return geo.MetricSpec(bg, fac, f"ex3.8, j={j}, eta={eta:g}, k={k}", bounds=(1.0, top))


def _validate_bubble_ramp(spec, j, m, sharpness):
    """The bubble ramp must make (1/j**m) int_1^2 h**m s**(m-1) ds small."""
    val = construction_hypothesis_integral(j, m, sharpness)
    if j >= 8:
        ref = construction_hypothesis_integral(max(2, int(math.isqrt(j))), m, sharpness)
        if not val < ref:
            raise ValidationError("bubble ramp integral is not decreasing in j")


def construction_hypothesis_integral(j: int, m: int = 2,
                                     sharpness: float = BUBBLE_RAMP_SHARPNESS) -> float:
    """(1/j**m) int_1^2 h_j(s)**m s**(m-1) ds for the bubble family ramp."""
    piece = geo.Piece(1.0, 2.0, "log_ramp", float(j), 1.0, sharpness)
    return quad.piece_power_shell_integral(piece, m, m, geo.TORUS) / float(j) ** m


# ---------------------------------------------------------------------------
# claims
# ---------------------------------------------------------------------------

TO_VALUE = "to_value"
TO_METRIC = "to_metric"
DIVERGES = "diverges"
STAYS_AWAY = "stays_away"
CONSTANT = "constant"
STAYS_BELOW = "stays_below"


@dataclass(frozen=True)
class Claim:
    quantity: str      # report quantity key, e.g. "vol", "lp_dev:2", "eps_vs:taxi"
    kind: str
    target: float | str | None
    anchor: str        # human-readable statement of the claimed behavior


@dataclass(frozen=True)
class ClaimSet:
    example_id: str
    claims: tuple


def claims(example_id: str, params: dict | None = None) -> ClaimSet:
    """The claimed limiting behavior each family is judged against."""
    p = default_params(example_id)
    p.update(params or {})
    m = int(p.get("m", 2))
    t_vol = geo.flat_torus(m, TWO_PI).volume
    t_diam = geo.flat_torus(m, TWO_PI).diameter
    w_m = quad.unit_ball_volume(m)
    c: list[Claim] = []

    if example_id == "cinched_sphere_3_1":
        h0 = float(p["h0"])
        c += [
            Claim("vol", TO_VALUE, geo.round_sphere(m).volume,
                  "vol -> vol(S^m): the cinched band has vanishing measure"),
            Claim("dist_equator", STAYS_BELOW, 0.9 * math.pi,
                  "equatorial antipodes connect through the cinch: d_j < 0.9 pi"),
            Claim("bilip_lo", STAYS_BELOW, max(0.6, h0 + 0.1),
                  "min d_j/d_0 drops to ~h0: the limit is not the round sphere"),
        ]
    elif example_id == "bump_C0_3_2":
        K = float(p["K"])
        c += [
            Claim("vol", TO_VALUE, t_vol, "vol -> vol(T^m)"),
            Claim("diam", TO_VALUE, t_diam, "diam -> sqrt(m) pi"),
            Claim("eps_vs:d0", TO_METRIC, "d0", "uniform gap vs flat distance -> 0"),
            Claim("lp_dev:1", TO_VALUE, 0.0, "int |f - 1| dV -> 0"),
            Claim("lp_dev:2", TO_VALUE, 0.0, "int |f - 1|^2 dV -> 0"),
            Claim("sup_dev", CONSTANT, K - 1.0,
                  "sup |f - 1| = K - 1 stays constant: no C^0 convergence"),
        ]
    elif example_id == "taxi_lattice_3_3":
        c += [
            Claim("eps_vs:taxi", TO_METRIC, "taxi", "uniform gap vs taxi distance -> 0"),
            Claim("eps_vs:d0", STAYS_AWAY, 0.05,
                  "uniform gap vs flat distance stays bounded away from 0"),
            Claim("lp_dev:2", STAYS_AWAY, 0.05, "int |f - 1|^2 dV does not -> 0"),
        ]
    elif example_id == "growing_bump_3_4":
        alpha = float(p["alpha"])
        c += [
            Claim("lp_dev:3", TO_VALUE, 0.0,
                  f"int |f - 1|^3 dV -> 0 (3 < m/alpha = {m / alpha:g})"),
            Claim("vol", TO_VALUE, t_vol, "vol -> vol(T^m)"),
            Claim("diam", TO_VALUE, t_diam, "diam -> sqrt(m) pi"),
            Claim("eps_vs:d0", TO_METRIC, "d0", "uniform gap vs flat distance -> 0"),
            Claim("ae_fraction", TO_VALUE, 1.0,
                  "distances converge for almost every sampled pair"),
        ]
    elif example_id == "bubble_3_5":
        c += [
            Claim("vol", TO_VALUE, t_vol + w_m,
                  "vol -> vol(T^m) + vol(B^m(0,1)): volume bubbles off"),
            Claim("diam", TO_VALUE, t_diam + 1.0, "diam -> sqrt(m) pi + 1"),
            Claim("lp_norm:3", DIVERGES, None,
                  f"int f^3 dV >= w_m j^(3-m) diverges (3 > m = {m})"),
            Claim("construction_hyp", TO_VALUE, 0.0,
                  "(1/j^m) int_1^2 h^m s^(m-1) ds -> 0"),
        ]
    elif example_id == "diverging_3_6":
        eta = float(p["eta"])
        c += [
            Claim("vol", DIVERGES, None, f"vol >= j^(m(eta-1)) w_m diverges (eta={eta:g})"),
            Claim("diam", DIVERGES, None, "diam >= j^(eta-1) + sqrt(m) pi - 2/j diverges"),
            Claim("lp_norm:3", DIVERGES, None, "int f^3 dV diverges for 3 > m/eta"),
        ]
    elif example_id == "spline_3_7":
        eta = float(p["eta"])
        c += [
            Claim("vol", TO_VALUE, t_vol, "vol -> vol(T^m)"),
            Claim("diam", TO_VALUE, t_diam + math.log(eta),
                  "diam -> sqrt(m) pi + ln(eta): a spline of length ln(eta) forms"),
            Claim("lp_dev:2", TO_VALUE, 0.0, "int |f - 1|^2 dV -> 0 (p <= m)"),
            Claim("lp_norm:3", DIVERGES, None, "int f^3 dV diverges for p > m"),
            Claim("dist_radial:0.25", TO_VALUE, 0.25, "d_j(center, r-target) -> 0.25"),
            Claim("dist_radial:0.5", TO_VALUE, 0.5, "d_j(center, r-target) -> 0.5"),
            Claim("dist_radial:1.0", TO_VALUE, 1.0, "d_j(center, r-target) -> 1.0"),
        ]
    else:  # many_splines_3_8
        eta = float(p["eta"])
        c += [
            Claim("vol", TO_VALUE, t_vol, "vol -> vol(T^m)"),
            Claim("packing", DIVERGES, None,
                  f"covering count N(ln {eta:g}) >= k_j -> infinity: no GH limit"),
        ]
    return ClaimSet(example_id, tuple(c))


# ---------------------------------------------------------------------------
# closed-form rows
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ClosedFormRow:
    example_id: str
    j: int
    vol: float
    diam: float | None
    lp_dev: dict
    lp_norm: dict
    extras: dict


def closed_form_row(example_id: str, j: int, params: dict | None = None,
                    ps=(1.0, 2.0, 3.0)) -> ClosedFormRow:
    """Exact-quadrature row (volume, diameter, L^p functionals) at one j.

    Bypasses meshes entirely, so the schedule can run to very large j.
    The lattice-corridor family has no radial form and is rejected.
    """
    if example_id == "taxi_lattice_3_3":
        raise UnsupportedOperationError("the lattice-corridor family has no radial form")
    spec = make_example(example_id, j, params)
    vol = quad.volume(spec)
    diam = None
    if isinstance(spec.factor, geo.RadialFactor):
        diam = quad.radial_diameter(spec)
    lp_dev = {p: quad.lp_factor_deviation(spec, p) for p in ps}
    lp_norm = {p: quad.lp_factor_norm(spec, p) for p in ps}
    extras = {}
    p_all = default_params(example_id)
    p_all.update(params or {})
    if example_id == "bubble_3_5":
        extras["construction_hyp"] = construction_hypothesis_integral(
            j, int(p_all.get("m", 2)), float(p_all["sharpness"]))
    if example_id == "spline_3_7":
        eta = float(p_all["eta"])
        for r in (0.25, 0.5, 1.0):
            extras[f"dist_radial:{r:g}"] = spline_radial_distance(spec, j, eta, r)
    if example_id == "many_splines_3_8":
        extras.update(packing_certificate(spec, j, float(p_all["eta"])))
    return ClosedFormRow(example_id, j, vol, diam, lp_dev, lp_norm, extras)


def spline_radial_distance(spec: geo.MetricSpec, j: int, eta: float, r: float) -> float:
    """Exact radial distance from the spline center to the target at radius
    j**(-eta/e**r); converges to r as j grows (for r <= ln eta)."""
    if r > math.log(eta) + 1e-12:
        raise ValidationError("radial target needs r <= ln(eta)")
    r_q = float(j) ** (-(eta / math.exp(r)))
    return quad.radial_length_integral(spec, 0.0, r_q)


def packing_certificate(spec: geo.MetricSpec, j: int, eta: float) -> dict:
    """Covering-count lower bound at radius ln(eta) from bump-tip separation.

    Any path from a bump tip to another tip pays at least the radial exit
    cost of each bump plus the flat distance between the supports; when the
    resulting pairwise separation exceeds 2 ln(eta), no ball of radius
    ln(eta) contains two tips, so N(ln eta) >= k_j.
    """
    fac = spec.factor
    k = len(fac.centers)
    R = fac.support_radius
    exit_cost = quad.radial_length_integral(spec, 0.0, R)
    bg = spec.background
    min_center_sep = min(
        geo.background_distance(bg, fac.centers[i], fac.centers[l])
        for i in range(k) for l in range(i + 1, k)
    ) if k > 1 else math.inf
    separation = 2.0 * exit_cost + min_center_sep - 2.0 * R
    radius = math.log(eta)
    certified = separation > 2.0 * radius
    return {
        "packing": float(k if certified else 1),
        "packing_radius": radius,
        "packing_separation": separation,
        "packing_certified": certified,
    }
