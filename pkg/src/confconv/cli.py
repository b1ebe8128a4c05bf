"""Command-line interface.

Subcommands:

* ``run <config.json>``     execute an experiment; exit 0 when every claim
                            is supported, 2 on any refuted claim, 3 when
                            inconclusive verdicts remain (64 for invalid
                            configs, 65 for mesh-budget overflows)
* ``list-examples``         print the example families
* ``show-claims <id>``      print the claimed limits a family is judged on
* ``mesh-bench``            metrication ratios and timings per stencil order
"""

from __future__ import annotations

import argparse
import sys
import time

import numpy as np

from . import families as fam
from . import geodesics as geod
from . import geometry as geo
from .errors import BudgetError, ConfigError, ConfConvError
from .mesh import MU, build_mesh
from .runner import default_out_dir, load_config, run

EXIT_USAGE = 64
EXIT_BUDGET = 65

_DESCRIPTIONS = {
    "cinched_sphere_3_1": "sphere cinched along a shrinking equatorial band",
    "bump_C0_3_2": "torus with a fixed-height shrinking bump (no C^0 limit)",
    "taxi_lattice_3_3": "unit torus with corridors on a dyadic lattice",
    "growing_bump_3_4": "bump of height j^alpha, L^p convergent below m/alpha",
    "bubble_3_5": "bump of height j: volume bubbles off to an attached disk",
    "diverging_3_6": "bump of height j^eta: volume and diameter diverge",
    "spline_3_7": "reciprocal-log bump: a spline of length ln(eta) forms",
    "many_splines_3_8": "growing number of spline bumps: no GH limit",
}


def _cmd_run(args) -> int:
    try:
        config = load_config(args.config)
    except ConfigError as exc:
        print(f"error: invalid config: {exc}", file=sys.stderr)
        return EXIT_USAGE
    out_dir = args.out or default_out_dir(args.config)
    try:
        manifest = run(config, out_dir, threads=args.threads,
                       seed_override=args.seed_override)
    except BudgetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except ConfigError as exc:
        print(f"error: invalid config: {exc}", file=sys.stderr)
        return EXIT_USAGE
    for v in manifest.verdicts:
        print(f"{v.claim}: {v.status} ({v.detail})")
    print(f"report written to {out_dir} (exit {manifest.exit_code})")
    return manifest.exit_code


def _cmd_list_examples(_args) -> int:
    for ex_id in fam.EXAMPLE_IDS:
        print(f"{ex_id:22s} {_DESCRIPTIONS[ex_id]}")
    return 0


def _cmd_show_claims(args) -> int:
    try:
        cs = fam.claims(args.example_id)
    except (KeyError, ConfConvError):
        print(f"error: unknown example {args.example_id!r}", file=sys.stderr)
        return EXIT_USAGE
    print(f"claims for {cs.example_id}:")
    for c in cs.claims:
        target = "" if c.target is None else f" [target {c.target}]"
        print(f"  {c.quantity:18s} {c.kind:12s}{target}  {c.anchor}")
    return 0


def _cmd_mesh_bench(args) -> int:
    bg = geo.flat_torus(2, 2.0 * np.pi)
    spec = geo.MetricSpec(bg, geo.ConstantFactor(1.0), "bench")
    pairs = geod.sample_pooled_pairs(bg, 8, 32, seed=7)
    d0 = geod.background_oracle(bg)(pairs)
    print(f"{'k':>2} {'mu(k)':>8} {'n':>5} {'max ratio':>10} {'seconds':>8}")
    for k in args.stencils:
        m = build_mesh(bg, args.n, k)
        t0 = time.perf_counter()
        dh = geod.mesh_pair_distances(spec, m, pairs)
        dt = time.perf_counter() - t0
        ratio = float(np.max(dh / d0))
        print(f"{k:>2} {MU[k]:>8.5f} {args.n:>5} {ratio:>10.5f} {dt:>8.2f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="confconv",
        description="numerical laboratory for conformal metric sequences",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute an experiment config")
    p_run.add_argument("config", help="path to a JSON experiment config")
    p_run.add_argument("--out", default=None, help="output directory")
    p_run.add_argument("--threads", type=int, default=1,
                       help="worker threads for per-j computations")
    p_run.add_argument("--seed-override", type=int, default=None,
                       help="replace the config's sampling seed")
    p_run.set_defaults(func=_cmd_run)

    p_list = sub.add_parser("list-examples", help="list example families")
    p_list.set_defaults(func=_cmd_list_examples)

    p_show = sub.add_parser("show-claims", help="show the claims of a family")
    p_show.add_argument("example_id")
    p_show.set_defaults(func=_cmd_show_claims)

    p_bench = sub.add_parser("mesh-bench", help="stencil metrication benchmark")
    p_bench.add_argument("--n", type=int, default=128)
    p_bench.add_argument("--stencils", type=int, nargs="+", default=[1, 2, 3])
    p_bench.set_defaults(func=_cmd_mesh_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
