"""Configuration-driven experiment runs.

A run takes one example family, a j schedule, and a set of quantities;
it computes every requested quantity per j (radial-exact closed forms
where available, mesh solves otherwise), judges the family's claims on
the resulting series, and emits the report plus a manifest hashing every
output file.

Exit-code contract (surfaced by the CLI): 0 when every evaluated claim is
supported, 2 when any claim is refuted, 3 when any is inconclusive.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import diagnostics as diag
from . import families as fam
from . import geodesics as geod
from . import geometry as geo
from . import quadrature as quad
from .errors import BudgetError, ConfigError, ValidationError
from .mesh import build_mesh
from .report import ConvergenceReport, ReportRow, emit, sha256_file

TOOL_VERSION = "0.1.0"
SCHEMA_VERSION = 1
OUT_ROOT_ENV = "CONFCONV_OUT_ROOT"

#: quantities that need shortest-path solves (everything else is exact)
MESH_BASES = {"eps_vs", "gh_bound", "flat_proxy", "bilip_lo", "bilip_hi",
              "ball_vol", "ae_fraction", "dist_equator"}
EXACT_BASES = {"vol", "diam", "sup_dev", "lp_dev", "lp_norm",
               "construction_hyp", "packing", "dist_radial"}
METRIC_TARGETS = {"d0", "taxi"}


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExperimentConfig:
    example_id: str
    params: dict
    j_schedule: tuple
    mesh_n: object            # int or "auto" (corridor rule n = 2**(j+5))
    stencil_order: int
    budget_nodes: int
    pair_count: int
    pair_sources: int
    seed: int
    quantities: tuple
    tolerance: float | None
    formats: tuple = ("csv", "json", "dat", "png")

    def canonical(self) -> dict:
        return {
            "schema": SCHEMA_VERSION,
            "example": {"id": self.example_id, "params": self.params},
            "j_schedule": list(self.j_schedule),
            "mesh": {"n": self.mesh_n, "stencil_order": self.stencil_order,
                     "budget_nodes": self.budget_nodes},
            "pairs": {"count": self.pair_count, "sources": self.pair_sources,
                      "seed": self.seed},
            "quantities": list(self.quantities),
            "tolerance": self.tolerance,
            "formats": list(self.formats),
        }

    def config_hash(self) -> str:
        doc = json.dumps(self.canonical(), sort_keys=True).encode()
        return hashlib.sha256(doc).hexdigest()


def _known_quantity(q: str) -> bool:
    base = q.split(":", 1)[0]
    if base in ("vol", "diam", "sup_dev", "construction_hyp", "packing",
                "flat_proxy", "bilip_lo", "bilip_hi", "ae_fraction",
                "dist_equator"):
        return q == base
    if base in ("lp_dev", "lp_norm"):
        try:
            return float(q.split(":", 1)[1]) >= 1
        except (IndexError, ValueError):
            return False
    if base in ("eps_vs", "gh_bound"):
        return q.split(":", 1)[1:] and q.split(":", 1)[1] in METRIC_TARGETS
    if base == "dist_radial":
        try:
            return float(q.split(":", 1)[1]) > 0
        except (IndexError, ValueError):
            return False
    if base == "ball_vol":
        parts = q.split(":")
        if len(parts) != 3:
            return False
        try:
            [float(c) for c in parts[1].split(",")]
            return float(parts[2]) > 0
        except ValueError:
            return False
    return False


_TOP_KEYS = {"schema", "example", "j_schedule", "mesh", "pairs", "quantities",
             "tolerance", "formats"}


def parse_config(doc: dict) -> ExperimentConfig:
    """Validate a configuration tree; unknown keys are rejected."""
    if not isinstance(doc, dict):
        raise ConfigError("<root>", "configuration must be a key/value tree")
    for key in doc:
        if key not in _TOP_KEYS:
            raise ConfigError(key, "unknown key")
    if doc.get("schema") != SCHEMA_VERSION:
        raise ConfigError("schema", f"expected schema {SCHEMA_VERSION}")
    ex = doc.get("example")
    if not isinstance(ex, dict) or "id" not in ex:
        raise ConfigError("example", "needs {'id': ..., 'params': {...}}")
    for key in ex:
        if key not in ("id", "params"):
            raise ConfigError(f"example.{key}", "unknown key")
    if ex["id"] not in fam.EXAMPLE_IDS:
        raise ConfigError("example.id", f"unknown example {ex['id']!r}")
    params = ex.get("params", {})
    if not isinstance(params, dict):
        raise ConfigError("example.params", "must be a mapping")

    js = doc.get("j_schedule")
    if not isinstance(js, list) or len(js) < 4:
        raise ConfigError("j_schedule", "need at least 4 values for trend verdicts")
    if any(not isinstance(j, int) or j < 2 for j in js):
        raise ConfigError("j_schedule", "entries must be integers >= 2")
    if any(b <= a for a, b in zip(js, js[1:])):
        raise ConfigError("j_schedule", "must be strictly increasing")

    mesh_doc = doc.get("mesh", {})
    for key in mesh_doc:
        if key not in ("n", "stencil_order", "budget_nodes"):
            raise ConfigError(f"mesh.{key}", "unknown key")
    mesh_n = mesh_doc.get("n", 256)
    if mesh_n != "auto" and (not isinstance(mesh_n, int) or mesh_n < 16):
        raise ConfigError("mesh.n", "must be an integer >= 16 or 'auto'")
    stencil = mesh_doc.get("stencil_order", 3)
    if stencil not in (1, 2, 3):
        raise ConfigError("mesh.stencil_order", "must be 1, 2, or 3")
    budget = mesh_doc.get("budget_nodes", 4_500_000)
    if not isinstance(budget, int) or budget < 16 * 16:
        raise ConfigError("mesh.budget_nodes", "must be an integer >= 256")

    pairs_doc = doc.get("pairs", {})
    for key in pairs_doc:
        if key not in ("count", "sources", "seed"):
            raise ConfigError(f"pairs.{key}", "unknown key")
    count = pairs_doc.get("count", 256)
    sources = pairs_doc.get("sources", 16)
    seed = pairs_doc.get("seed", 0)
    if not isinstance(count, int) or count < 1:
        raise ConfigError("pairs.count", "must be a positive integer")
    if not isinstance(sources, int) or sources < 1:
        raise ConfigError("pairs.sources", "must be a positive integer")
    if not isinstance(seed, int):
        raise ConfigError("pairs.seed", "must be an integer")

    quantities = doc.get("quantities")
    if not isinstance(quantities, list) or not quantities:
        raise ConfigError("quantities", "must be a nonempty list")
    for i, q in enumerate(quantities):
        if not isinstance(q, str) or not _known_quantity(q):
            raise ConfigError(f"quantities[{i}]", f"unknown quantity {q!r}")
        if q.startswith("ball_vol:"):
            _validate_ball(q, ex["id"], params, i)

    tol = doc.get("tolerance")
    if tol is not None and (not isinstance(tol, (int, float)) or tol <= 0):
        raise ConfigError("tolerance", "must be a positive number")

    formats = tuple(doc.get("formats", ["csv", "json", "dat", "png"]))
    for i, f in enumerate(formats):
        if f not in ("csv", "json", "dat", "png"):
            raise ConfigError(f"formats[{i}]", f"unknown format {f!r}")

    return ExperimentConfig(
        example_id=ex["id"], params=dict(params), j_schedule=tuple(js),
        mesh_n=mesh_n, stencil_order=stencil, budget_nodes=budget,
        pair_count=count, pair_sources=sources, seed=seed,
        quantities=tuple(quantities), tolerance=tol, formats=formats,
    )


def _validate_ball(q, example_id, params, i):
    parts = q.split(":")
    radius = float(parts[2])
    bg = fam.make_example(example_id, 8, params).background
    if bg.kind == geo.TORUS and radius > bg.side / 2.0 - 0.1:
        raise ConfigError(
            f"quantities[{i}]",
            f"ball radius {radius:g} too close to the cut distance {bg.side / 2:g}",
        )


def load_config(path: str) -> ExperimentConfig:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError("<file>", f"not valid JSON: {exc}") from exc
    return parse_config(doc)


# ---------------------------------------------------------------------------
# per-j computation
# ---------------------------------------------------------------------------

def mesh_n_for(config: ExperimentConfig, j: int) -> int:
    if config.mesh_n == "auto":
        return 2 ** (j + 5) if config.example_id == "taxi_lattice_3_3" else 256
    return int(config.mesh_n)


def _check_budget(config, j):
    needs_mesh = any(q.split(":", 1)[0] in MESH_BASES for q in config.quantities)
    if not needs_mesh:
        return
    n = mesh_n_for(config, j)
    nodes = n * n
    if nodes > config.budget_nodes:
        raise BudgetError(
            f"j={j} needs a mesh of {n}x{n} = {nodes} nodes, "
            f"over the budget of {config.budget_nodes}"
        )


def _equator_pairs(count=8):
    phis = np.linspace(0.0, math.pi, count, endpoint=False)
    p = np.stack([np.full(count, math.pi / 2.0), phis], axis=-1)
    q = np.stack([np.full(count, math.pi / 2.0), np.mod(phis + math.pi, 2 * math.pi)],
                 axis=-1)
    return p, q


@dataclass
class _JBundle:
    j: int
    spec: geo.MetricSpec
    values: dict = field(default_factory=dict)   # quantity -> (value, lo, hi, method, tol)
    pair_dists: dict = field(default_factory=dict)  # oracle name -> np.ndarray
    mesh_n: int | None = None
    wall_clock: float = 0.0


def _compute_bundle(config: ExperimentConfig, j: int, pairs, tol_override):
    t0 = time.perf_counter()
    spec = fam.make_example(config.example_id, j, config.params)
    bundle = _JBundle(j, spec)
    quantities = config.quantities
    radial_ok = config.example_id != "taxi_lattice_3_3"

    mesh_qs = [q for q in quantities if q.split(":", 1)[0] in MESH_BASES]
    mesh = None
    graph = None
    d_pairs = None
    tol = 0.0
    if mesh_qs:
        n = mesh_n_for(config, j)
        mesh = build_mesh(spec.background, n, config.stencil_order)
        graph = geod.build_edge_graph(spec, mesh)
        tol = tol_override if tol_override is not None else diag.metrication_budget(mesh)
        d_pairs = geod.mesh_pair_distances(spec, mesh, pairs, graph=graph)
        bundle.pair_dists["mesh"] = d_pairs
        bundle.mesh_n = n

    d0_vals = geod.background_oracle(spec.background)(pairs)
    taxi_vals = None
    if spec.background.kind == geo.TORUS:
        taxi_vals = geod.taxi_oracle(spec.background)(pairs)
    bundle.pair_dists["d0"] = d0_vals
    if taxi_vals is not None:
        bundle.pair_dists["taxi"] = taxi_vals

    for q in quantities:
        base = q.split(":", 1)[0]
        if base == "vol":
            v = quad.volume(spec)
            method = "radial-exact" if (radial_ok or isinstance(
                spec.factor, geo.LatticeCorridorFactor)) else "grid"
            bundle.values[q] = (v, v, v, method, 0.0)
        elif base == "diam":
            if isinstance(spec.factor, (geo.RadialFactor, geo.ConstantFactor)):
                v = quad.radial_diameter(spec)
                bundle.values[q] = (v, v, v, "radial-exact", 0.0)
            else:
                dm = mesh if mesh is not None else build_mesh(
                    spec.background, mesh_n_for(config, j), config.stencil_order)
                est = geod.diameter_estimate(spec, dm, graph=graph)
                bundle.values[q] = (est.value, est.lo, est.hi, "grid", tol)
        elif base == "sup_dev":
            v = quad.sup_factor_deviation(spec)
            bundle.values[q] = (v, v, v, "radial-exact", 0.0)
        elif base == "lp_dev":
            p = float(q.split(":", 1)[1])
            v = quad.lp_factor_deviation(spec, p) ** p
            bundle.values[q] = (v, v, v, "radial-exact", 0.0)
        elif base == "lp_norm":
            p = float(q.split(":", 1)[1])
            v = quad.lp_factor_norm(spec, p) ** p
            bundle.values[q] = (v, v, v, "radial-exact", 0.0)
        elif base == "construction_hyp":
            params = fam.default_params(config.example_id)
            params.update(config.params)
            v = fam.construction_hypothesis_integral(
                j, int(params.get("m", 2)), float(params.get("sharpness", 1.0)))
            bundle.values[q] = (v, v, v, "radial-exact", 0.0)
        elif base == "dist_radial":
            r = float(q.split(":", 1)[1])
            params = fam.default_params(config.example_id)
            params.update(config.params)
            v = fam.spline_radial_distance(spec, j, float(params["eta"]), r)
            bundle.values[q] = (v, v, v, "radial-exact", 0.0)
        elif base == "packing":
            params = fam.default_params(config.example_id)
            params.update(config.params)
            cert = fam.packing_certificate(spec, j, float(params["eta"]))
            bundle.values[q] = (cert["packing"], cert["packing"],
                                cert["packing_separation"], "radial-exact", 0.0)
        elif base == "eps_vs":
            target = q.split(":", 1)[1]
            tgt = d0_vals if target == "d0" else taxi_vals
            g = diag.uniform_gap(d_pairs, tgt, pairs)
            bundle.values[q] = (g.eps, max(0.0, g.eps - tol), g.eps + tol, "grid", tol)
        elif base == "gh_bound":
            target = q.split(":", 1)[1]
            tgt = d0_vals if target == "d0" else taxi_vals
            w = diag.identity_witness(d_pairs, tgt, pairs)
            v = diag.gh_bound_from_map(w)
            bundle.values[q] = (v, max(0.0, v - 2 * tol), v + 2 * tol, "grid", tol)
        elif base == "bilip_lo" or base == "bilip_hi":
            lo, hi = diag.bilipschitz_envelope(d_pairs, d0_vals, pairs)
            v = lo if base == "bilip_lo" else hi
            bundle.values[q] = (v, v, v, "grid", tol)
        elif base == "flat_proxy":
            g = diag.uniform_gap(d_pairs, d0_vals, pairs)
            _, hi = diag.bilipschitz_envelope(d_pairs, d0_vals, pairs)
            v = diag.flat_bound_proxy(g.eps, max(1.0, hi), spec.background.volume,
                                      spec.background.dim)
            bundle.values[q] = (v, 0.0, v, "grid", tol)
        elif base == "ae_fraction":
            frac = float(np.mean(np.abs(d_pairs - d0_vals) < tol))
            bundle.values[q] = (frac, frac, frac, "grid", tol)
        elif base == "dist_equator":
            p, qq = _equator_pairs()
            eq_pairs = geod.pair_set_from_points(spec.background, p, qq)
            d_eq = geod.mesh_pair_distances(spec, mesh, eq_pairs, graph=graph)
            v = float(np.max(d_eq))
            bundle.values[q] = (v, v - tol, v + tol, "grid", tol)
        elif base == "ball_vol":
            parts = q.split(":")
            center = tuple(float(c) for c in parts[1].split(","))
            radius = float(parts[2])
            f = geod.solve_distance(spec, mesh, center, graph=graph)
            v = quad.ball_volume(spec, f, radius)
            bundle.values[q] = (v, v, v, "grid", tol)
    bundle.wall_clock = time.perf_counter() - t0
    return bundle


# ---------------------------------------------------------------------------
# verdicts
# ---------------------------------------------------------------------------

def _judge(claims_set, report: ConvergenceReport, budget: float):
    verdicts = []
    for claim in claims_set.claims:
        js, vals = report.series(claim.quantity)
        if len(js) == 0:
            continue
        label = claim.quantity
        try:
            if claim.kind == fam.TO_VALUE:
                v = diag.value_convergence(js, vals, float(claim.target), label)
            elif claim.kind == fam.DIVERGES:
                if claim.quantity == "packing":
                    v = _packing_verdict(js, vals, label)
                else:
                    v = diag.divergence_check(js, vals, label)
            elif claim.kind == fam.TO_METRIC:
                v = diag.metric_convergence(js, vals, label, budget)
            elif claim.kind == fam.STAYS_AWAY:
                v = diag.stays_away_check(js, vals, label, float(claim.target))
            elif claim.kind == fam.CONSTANT:
                v = diag.constant_check(js, vals, float(claim.target), label)
            elif claim.kind == fam.STAYS_BELOW:
                v = diag.stays_below_check(js, vals, label, float(claim.target))
            else:
                continue
        except ValidationError as exc:
            v = diag.Verdict(label, diag.INCONCLUSIVE, None, str(exc))
        verdicts.append(diag.Verdict(v.claim, v.status, v.slope,
                                     f"{v.detail} | claim: {claim.anchor}"))
    return verdicts


def _packing_verdict(js, counts, label):
    counts = list(counts)
    growing = all(b >= a for a, b in zip(counts, counts[1:])) and counts[-1] > counts[0]
    if growing:
        return diag.Verdict(label, diag.SUPPORTS, None,
                            "no GH limit: supports (certified count grows "
                            f"{counts[0]:g} -> {counts[-1]:g})")
    return diag.Verdict(label, diag.INCONCLUSIVE, None,
                        "no GH limit: inconclusive (count not growing)")


def exit_code_from_verdicts(verdicts) -> int:
    statuses = {v.status for v in verdicts}
    if diag.REFUTES in statuses:
        return 2
    if diag.INCONCLUSIVE in statuses:
        return 3
    return 0


# ---------------------------------------------------------------------------
# the run
# ---------------------------------------------------------------------------

@dataclass
class RunManifest:
    config_hash: str
    tool_version: str
    out_dir: str
    rows: list
    files: dict
    verdicts: list
    exit_code: int
    wall_clock: dict

    def to_dict(self):
        return {
            "config_hash": self.config_hash,
            "tool_version": self.tool_version,
            "rows": self.rows,
            "files": self.files,
            "verdicts": [
                {"claim": v.claim, "status": v.status, "slope": v.slope,
                 "detail": v.detail} for v in self.verdicts
            ],
            "exit_code": self.exit_code,
            "wall_clock": self.wall_clock,
        }


def default_out_dir(config_path_or_name: str) -> str:
    root = os.environ.get(OUT_ROOT_ENV, os.path.join(os.getcwd(), "confconv_out"))
    stem = os.path.splitext(os.path.basename(str(config_path_or_name)))[0]
    return os.path.join(root, stem)


def run(config: ExperimentConfig, out_dir: str, threads: int = 1,
        seed_override: int | None = None) -> RunManifest:
    """Execute a configured experiment and write all artifacts."""
    if seed_override is not None:
        config = dataclasses.replace(config, seed=seed_override)
    for j in config.j_schedule:
        _check_budget(config, j)
    os.makedirs(out_dir, exist_ok=True)

    spec0 = fam.make_example(config.example_id, config.j_schedule[0], config.params)
    per_source = max(1, -(-config.pair_count // config.pair_sources))
    pairs = geod.sample_pooled_pairs(spec0.background, config.pair_sources,
                                     per_source, config.seed)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            bundles = list(pool.map(
                lambda j: _compute_bundle(config, j, pairs, config.tolerance),
                config.j_schedule))
    else:
        bundles = [_compute_bundle(config, j, pairs, config.tolerance)
                   for j in config.j_schedule]
    bundles.sort(key=lambda b: b.j)

    claims_set = fam.claims(config.example_id, config.params)
    report = ConvergenceReport(config.example_id, config.params)
    report.meta = {
        "config_hash": config.config_hash(),
        "mesh_n": config.mesh_n,
        "stencil_order": config.stencil_order,
        "pair_count": len(pairs),
        "seed": config.seed,
        "claim_targets": [
            {"quantity": c.quantity,
             "target": c.target if isinstance(c.target, (int, float)) else None}
            for c in claims_set.claims
        ],
    }
    manifest_rows = []
    budget = 0.0
    for b in bundles:
        for q, (value, lo, hi, method, tol) in sorted(b.values.items()):
            budget = max(budget, tol)
            param = q.split(":", 1)[1] if ":" in q else ""
            report.add(ReportRow(config.example_id, b.j, q, param,
                                 float(value), lo, hi, method, tol))
            manifest_rows.append({
                "j": b.j, "quantity": q, "method": method,
                "mesh_n": b.mesh_n, "tolerance": tol,
            })
    # consecutive uniform gaps: the Cauchy-style diagnostic for d_j sequences
    if all("mesh" in b.pair_dists for b in bundles) and len(bundles) >= 2:
        for prev, cur in zip(bundles, bundles[1:]):
            step = float(np.max(np.abs(cur.pair_dists["mesh"] - prev.pair_dists["mesh"])))
            report.add(ReportRow(config.example_id, cur.j, "eps_step", "",
                                 step, None, None, "grid", budget))

    report.verdicts = _judge(claims_set, report, budget)
    files = emit(report, out_dir, config.formats)

    exit_code = exit_code_from_verdicts(report.verdicts)
    manifest = RunManifest(
        config_hash=config.config_hash(),
        tool_version=TOOL_VERSION,
        out_dir=out_dir,
        rows=manifest_rows,
        files={os.path.relpath(p, out_dir): sha256_file(p) for p in files},
        verdicts=report.verdicts,
        exit_code=exit_code,
        wall_clock={str(b.j): round(b.wall_clock, 6) for b in bundles},
    )
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        json.dump(manifest.to_dict(), fh, sort_keys=True, indent=1)
        fh.write("\n")
    return manifest
