#!/usr/bin/env python3
"""Reproduce the experiment tables: one CSV per preset plus design tables.

Identification presets run the adaptive algorithms and their oracles over
seeded replications; the variance-estimation preset sweeps its budget ladder
for the three estimators. Desk-scale by default; raise --reps or override
preset parameters for bigger runs.
"""

import argparse
import sys
import time
from pathlib import Path

from hetbandit import ExperimentConfig, build_preset, run_suite
from hetbandit.runner import emit_design_table

IDENT_PRESETS = ("example1", "example2", "multivariate")


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir", default="results")
    parser.add_argument("--reps", type=int, default=32)
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--delta", type=float, default=0.05)
    parser.add_argument("--jobs", type=int, default=1)
    parser.add_argument("--c-prime", type=float, default=1.0)
    parser.add_argument("--presets", default="example1,example2,multivariate,varest")
    parser.add_argument("--kappas", default="1,2,5,10,20",
                        help="kappa ladder for the intro design tables")
    args = parser.parse_args()

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    for preset in [p.strip() for p in args.presets.split(",") if p.strip()]:
        config = ExperimentConfig(
            preset=preset,
            replications=args.reps,
            base_seed=args.seed,
            delta=args.delta,
            jobs=args.jobs,
            overrides={"c_prime": args.c_prime},
            output_path=str(out_dir / f"{preset}.csv"),
        )
        start = time.perf_counter()
        _, failed = run_suite(config)
        status = "with failures" if failed else "ok"
        print(f"{preset}: {status} in {time.perf_counter() - start:.0f}s -> {config.output_path}")

        if preset in IDENT_PRESETS:
            bundle = build_preset(config)
            table = out_dir / f"{preset}_design.csv"
            emit_design_table(bundle, str(table))
            print(f"{preset}: design table -> {table}")

    for kappa in [float(k) for k in args.kappas.split(",") if k.strip()]:
        config = ExperimentConfig(preset="intro", overrides={"kappa": kappa})
        bundle = build_preset(config)
        table = out_dir / f"intro_design_kappa{kappa:g}.csv"
        emit_design_table(bundle, str(table))
        print(f"intro kappa={kappa:g}: design table -> {table}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
