"""Convergence diagnostics: gaps, envelopes, bounds, and trend verdicts.

Sup-type statistics (uniform gaps, almost-isometry distortion, bi-Lipschitz
envelopes) are sampled maxima over finite pair sets, hence lower bounds on
the true suprema.  Trend verdicts fit log-log slopes over a schedule of at
least four j values; |slope| >= 0.3 is the decision threshold, chosen to be
robust against mesh noise at desk scale.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError, InvalidTensorError

#: log-log slope magnitude required to call a trend.
SLOPE_THRESHOLD = 0.3
#: slope magnitude below which a sequence counts as flat (bounded away).
FLAT_SLOPE = 0.05

SUPPORTS = "supports"
REFUTES = "refutes"
INCONCLUSIVE = "inconclusive"


def metrication_budget(m) -> float:
    """Default gap tolerance for solver-backed statistics on mesh ``m``:
    3 (mu(k) - 1) Diam0 + 8 h."""
    return 3.0 * (m.mu - 1.0) * m.background.diameter + 8.0 * m.h


# ---------------------------------------------------------------------------
# uniform gaps and almost isometries
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GapStatistic:
    """Sampled sup of |d_a - d_b| with the attaining pair."""

    eps: float
    argmax_pair: tuple
    pair_count: int


def _oracle_values(oracle, pairs):
    vals = oracle(pairs) if callable(oracle) else np.asarray(oracle, dtype=float)
    return np.asarray(vals, dtype=float)


def uniform_gap(d_a, d_b, pairs) -> GapStatistic:
    """Max absolute gap between two distance oracles over sampled pairs."""
    if len(pairs) == 0:
        raise ValidationError("uniform gap needs a nonempty pair set")
    va = _oracle_values(d_a, pairs)
    vb = _oracle_values(d_b, pairs)
    gaps = np.abs(va - vb)
    k = int(np.argmax(gaps))
    pair = (tuple(pairs.pairs[k, 0].tolist()), tuple(pairs.pairs[k, 1].tolist()))
    return GapStatistic(float(gaps[k]), pair, len(pairs))


def bilipschitz_envelope(d_j, d_0, pairs) -> tuple[float, float]:
    """(min, max) of d_j / d_0 over pairs; coincident pairs are skipped."""
    vj = _oracle_values(d_j, pairs)
    v0 = _oracle_values(d_0, pairs)
    keep = v0 > 1e-12
    if not np.any(keep):
        raise ValidationError("all pairs coincident: no ratios available")
    ratios = vj[keep] / v0[keep]
    return float(np.min(ratios)), float(np.max(ratios))


@dataclass(frozen=True)
class AlmostIsometryWitness:
    """Sampled distortion and onto-defect of a map between two metrics.

    The default witnesses use the identity coordinate map (all sequences
    here share one background manifold), for which the onto defect is 0;
    arbitrary node maps may supply their own defect.
    """

    delta_distortion: float
    delta_onto: float
    pair_count: int
    map_label: str = "identity"


def identity_witness(d_1, d_2, pairs, delta_onto: float = 0.0) -> AlmostIsometryWitness:
    g = uniform_gap(d_1, d_2, pairs)
    return AlmostIsometryWitness(g.eps, float(delta_onto), g.pair_count)


def gh_bound_from_map(witness: AlmostIsometryWitness) -> float:
    """A delta almost isometry certifies GH distance < 2 delta."""
    return 2.0 * max(witness.delta_distortion, witness.delta_onto)


def flat_bound_proxy(eps: float, lam: float, vol0: float, m: int) -> float:
    """Filling-volume upper-bound proxy 2 eps lam**m vol0.

    The dimensional constant multiplying it is never instantiated, so
    reports label this column "flat-proxy (x C_m)".  ``lam`` is the upper
    bi-Lipschitz constant between the two distances.
    """
    if eps < 0 or vol0 < 0:
        raise ValidationError("eps and vol0 must be nonnegative")
    if lam < 1.0:
        raise ValidationError("lam must be >= 1")
    return 2.0 * eps * lam ** m * vol0


# ---------------------------------------------------------------------------
# determinant-trace inequality
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DetTraceResult:
    lhs: float  # Det^(1/m)
    rhs: float  # Tr / m
    ok: bool


def det_trace_check(lams) -> DetTraceResult:
    """AM-GM check Det^(1/m) <= Tr/m plus Det <= |g|^m / m^(m/2)."""
    lam2 = np.asarray(lams, dtype=float)
    if lam2.size == 0 or np.any(lam2 <= 0.0):
        raise InvalidTensorError("eigenvalues lam_i^2 must be strictly positive")
    m = lam2.size
    det = float(np.prod(lam2))
    lhs = det ** (1.0 / m)
    rhs = float(np.mean(lam2))
    norm = float(np.sqrt(np.sum(lam2 ** 2)))
    ok = (lhs <= rhs * (1.0 + 1e-12)) and (det <= norm ** m / m ** (m / 2.0) * (1.0 + 1e-12))
    return DetTraceResult(lhs, rhs, ok)


# ---------------------------------------------------------------------------
# trend verdicts
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Verdict:
    claim: str
    status: str
    slope: float | None
    detail: str


def loglog_slope(js, values) -> float:
    js = np.asarray(js, dtype=float)
    v = np.maximum(np.asarray(values, dtype=float), 1e-300)
    return float(np.polyfit(np.log(js), np.log(v), 1)[0])


def _require_rows(js, n=4):
    if len(js) < n:
        raise ValidationError(f"trend verdicts need at least {n} rows")


def value_convergence(js, values, target: float, claim: str,
                      atol: float = 1e-9) -> Verdict:
    """Supports if |v_j - target| decreases with slope <= -0.3 (or is below
    atol already); refutes if flat and bounded away; inconclusive otherwise."""
    _require_rows(js)
    errs = np.abs(np.asarray(values, dtype=float) - target)
    scale = max(abs(target), 1.0)
    if errs[-1] <= atol * scale:
        return Verdict(claim, SUPPORTS, None, f"final error {errs[-1]:.3g} below atol")
    slope = loglog_slope(js, errs)
    if slope <= -SLOPE_THRESHOLD:
        return Verdict(claim, SUPPORTS, slope, f"error slope {slope:.2f}")
    if slope >= -FLAT_SLOPE and errs.min() > 10.0 * atol * scale:
        return Verdict(claim, REFUTES, slope,
                       f"error flat at {errs[-1]:.3g} (slope {slope:.2f})")
    return Verdict(claim, INCONCLUSIVE, slope, f"error slope {slope:.2f}")


volume_convergence = value_convergence


def ball_volume_convergence(js, ball_volumes, limit_value: float, claim: str,
                            atol: float = 1e-9) -> Verdict:
    """Per-(center, radius) ball-volume trend against the limit measure."""
    return value_convergence(js, ball_volumes, limit_value, claim, atol)


def divergence_check(js, values, claim: str) -> Verdict:
    """Supports when the quantity grows with log-log slope >= 0.3."""
    _require_rows(js)
    slope = loglog_slope(js, values)
    if slope >= SLOPE_THRESHOLD:
        return Verdict(claim, SUPPORTS, slope, f"diverges: supports (slope {slope:.2f})")
    if slope <= FLAT_SLOPE:
        return Verdict(claim, REFUTES, slope, f"diverges: refutes (slope {slope:.2f})")
    return Verdict(claim, INCONCLUSIVE, slope, f"diverges: inconclusive (slope {slope:.2f})")


def metric_convergence(js, gaps, claim: str, budget: float) -> Verdict:
    """Uniform-gap trend against a target metric, with a solver noise floor."""
    _require_rows(js)
    gaps = np.asarray(gaps, dtype=float)
    slope = loglog_slope(js, gaps)
    if gaps[-1] <= budget or slope <= -SLOPE_THRESHOLD:
        return Verdict(claim, SUPPORTS, slope,
                       f"gap {gaps[-1]:.3g} within budget {budget:.3g} or decreasing")
    if slope >= -FLAT_SLOPE and gaps.min() > budget:
        return Verdict(claim, REFUTES, slope, f"gap flat at {gaps[-1]:.3g}")
    return Verdict(claim, INCONCLUSIVE, slope, f"gap slope {slope:.2f}")


def stays_away_check(js, values, claim: str, floor: float) -> Verdict:
    """Supports when the sequence stays above ``floor`` (non-convergence)."""
    values = np.asarray(values, dtype=float)
    if values.min() > floor:
        return Verdict(claim, SUPPORTS, None, f"min {values.min():.3g} > floor {floor:.3g}")
    if values[-1] <= 0.5 * floor:
        return Verdict(claim, REFUTES, None, f"final {values[-1]:.3g} <= {0.5 * floor:.3g}")
    return Verdict(claim, INCONCLUSIVE, None, "sequence touches the floor")


def constant_check(js, values, target: float, claim: str, tol: float = 1e-9) -> Verdict:
    values = np.asarray(values, dtype=float)
    spread = float(values.max() - values.min())
    off = float(np.max(np.abs(values - target)))
    if spread <= tol and off <= max(tol, 1e-9 * abs(target)):
        return Verdict(claim, SUPPORTS, None, f"constant at {target:g}")
    return Verdict(claim, REFUTES, None,
                   f"spread {spread:.3g} or offset {off:.3g} exceeds {tol:g}")


def stays_below_check(js, values, claim: str, threshold: float) -> Verdict:
    values = np.asarray(values, dtype=float)
    if values.max() < threshold:
        return Verdict(claim, SUPPORTS, None, f"max {values.max():.3g} < {threshold:g}")
    return Verdict(claim, REFUTES, None, f"max {values.max():.3g} >= {threshold:g}")


# ---------------------------------------------------------------------------
# pointwise almost-everywhere convergence of distances
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PointwiseAEResult:
    fraction: float
    converged: np.ndarray          # bool per pair
    exceptional: np.ndarray        # indices of non-converged pairs
    hypothesis_violated: bool      # factor dipped below 1 somewhere
    tol: float


def pointwise_ae_check(d_sequence, d_0, pairs, tol: float,
                       lower_bound_ok: bool = True,
                       trend_slack: float = 0.25) -> PointwiseAEResult:
    """Fraction of pairs whose distance gap converges under the tolerance.

    ``d_sequence`` is the per-j list of distance oracles (ordered by j).
    A pair converges when its final gap is below ``tol`` and the gap did
    not grow by more than ``trend_slack * tol`` along the sequence.
    """
    if len(pairs) < 100:
        raise ValidationError("pointwise a.e. check needs at least 100 pairs")
    if len(d_sequence) < 2:
        raise ValidationError("need at least two j values")
    v0 = _oracle_values(d_0, pairs)
    gaps = np.stack([np.abs(_oracle_values(d, pairs) - v0) for d in d_sequence])
    final_ok = gaps[-1] < tol
    trend_ok = gaps[-1] <= gaps[0] + trend_slack * tol
    converged = final_ok & trend_ok
    exceptional = np.nonzero(~converged)[0]
    return PointwiseAEResult(
        float(np.mean(converged)), converged, exceptional,
        hypothesis_violated=not lower_bound_ok, tol=tol,
    )
