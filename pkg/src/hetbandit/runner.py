"""Replication orchestration and CSV emission for the experiment presets."""

from __future__ import annotations

import concurrent.futures
import math
import time

import numpy as np

from .core import HetBanditError
from .env import Environment
from .ident import IdentTask, RunConfig, hrage_run, oracle_run, psi_star, rage_run
from .presets import ConfigError, ExperimentConfig, PresetBundle, VarEstTask, build_preset
from .varest import head_estimate, mae, separate_arm_estimate, uniform_estimate

SCHEMA_VERSION = 1
CSV_HEADER = "preset,algorithm,seed,metric_name,metric_value,correct,rounds,burn_in,wall_ms"

IDENT_ALGORITHMS = ("hrage", "rage", "oracle-het", "oracle-hom")
VAREST_ALGORITHMS = ("head", "uniform", "separate_arm")

# Experiment drivers default to a practical burn-in constant; the theoretical
# one is far too conservative to simulate and stays the library default.
PRACTICAL_C_PRIME = 1.0


def _fmt(value) -> str:
    if value is None or value == "":
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return f"{value:.10g}"
    return str(value)


def _row(preset, algorithm, seed, metric_name, metric_value, correct="", rounds="", burn_in="", wall_ms="") -> str:
    return ",".join(
        _fmt(v) for v in (preset, algorithm, seed, metric_name, metric_value, correct, rounds, burn_in, wall_ms)
    )


def _run_config(config: ExperimentConfig) -> RunConfig:
    o = config.overrides
    return RunConfig(
        c_prime=float(o.get("c_prime", PRACTICAL_C_PRIME)),
        fw_tol=float(o.get("fw_tol", 1e-2)),
        max_rounds=int(o.get("max_rounds", 40)),
        head_fw_tol=float(o.get("head_fw_tol", 1e-2)),
    )


def _ident_env(config: ExperimentConfig, rep: int, algo_index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(config.base_seed, spawn_key=(rep, algo_index))


def _run_ident_algorithm(bundle: PresetBundle, algorithm: str, env: Environment, run_cfg: RunConfig):
    task = bundle.task
    if algorithm == "hrage":
        return hrage_run(task, env, run_cfg)
    if algorithm == "rage":
        return rage_run(task, env, run_cfg)
    if algorithm == "oracle-het":
        return oracle_run(task, env, "truth", variances=bundle.variances, config=run_cfg)
    if algorithm == "oracle-hom":
        return oracle_run(task, env, "max", config=run_cfg)
    raise ConfigError(f"unknown algorithm {algorithm!r}")


def _run_one_seed(config: ExperimentConfig, rep: int) -> list[str]:
    """All CSV rows for one replication seed, in a fixed algorithm order."""
    rows: list[str] = []
    bundle = build_preset(config, seed=_varest_instance_seed(config, rep))
    run_cfg = _run_config(config)

    if isinstance(bundle.task, VarEstTask):
        algorithms = config.algorithms or VAREST_ALGORITHMS
        estimators = {
            "head": head_estimate,
            "uniform": uniform_estimate,
            "separate_arm": separate_arm_estimate,
        }
        for algo_index, algo in enumerate(algorithms):
            runner = estimators.get(algo)
            if runner is None:
                raise ConfigError(f"unknown estimator {algo!r}")
            for b_index, gamma in enumerate(bundle.task.budgets):
                seq = np.random.SeedSequence(
                    config.base_seed, spawn_key=(rep, 1 + algo_index, b_index)
                )
                env = Environment(
                    bundle.instance.arms,
                    bundle.instance.theta_star,
                    bundle.instance.sigma_star,
                    _seed_seq=seq,
                )
                start = time.perf_counter()
                try:
                    if algo == "uniform":
                        est = runner(bundle.instance, env, gamma, rng_seed=rep)
                    else:
                        est = runner(bundle.instance, env, gamma)
                    wall = int(round((time.perf_counter() - start) * 1000))
                    rows.append(
                        _row(bundle.name, algo, rep, f"mae@{gamma}",
                             mae(est, bundle.instance), "", "", est.budget_used, wall)
                    )
                except HetBanditError as exc:
                    wall = int(round((time.perf_counter() - start) * 1000))
                    rows.append(
                        _row(bundle.name, algo, rep, f"error:{type(exc).__name__}",
                             math.nan, False, "", "", wall)
                    )
        return rows

    algorithms = config.algorithms or IDENT_ALGORITHMS
    for algo_index, algo in enumerate(algorithms):
        env = Environment(
            bundle.instance.arms,
            bundle.instance.theta_star,
            bundle.instance.sigma_star,
            _seed_seq=_ident_env(config, rep, algo_index),
        )
        start = time.perf_counter()
        try:
            trace = _run_ident_algorithm(bundle, algo, env, run_cfg)
            wall = int(round((time.perf_counter() - start) * 1000))
            rows.append(
                _row(bundle.name, algo, rep, "total_pulls", float(trace.total_pulls),
                     trace.correct, len(trace.rounds), trace.burn_in_pulls, wall)
            )
        except HetBanditError as exc:
            wall = int(round((time.perf_counter() - start) * 1000))
            rows.append(
                _row(bundle.name, algo, rep, f"error:{type(exc).__name__}",
                     math.nan, False, "", "", wall)
            )
    return rows


def _varest_instance_seed(config: ExperimentConfig, rep: int) -> int:
    # Stable per-replication instance seed, independent of the noise streams.
    return int(np.random.SeedSequence(config.base_seed, spawn_key=(rep, 0)).generate_state(1)[0])


def _summary_rows(rows: list[str]) -> list[str]:
    """Mean and standard-error rows per (preset, algorithm, metric)."""
    parsed: dict[tuple[str, str, str], list[tuple[float, str, float, float]]] = {}
    order: list[tuple[str, str, str]] = []
    for row in rows:
        preset, algo, _seed, metric, value, correct, rounds, burn_in, _wall = row.split(",")
        if metric.startswith("error:"):
            continue
        key = (preset, algo, metric)
        if key not in parsed:
            parsed[key] = []
            order.append(key)
        parsed[key].append(
            (
                float(value),
                correct,
                float(rounds) if rounds else math.nan,
                float(burn_in) if burn_in else math.nan,
            )
        )
    out = []
    for key in order:
        preset, algo, metric = key
        data = parsed[key]
        values = np.array([d[0] for d in data])
        corrects = [d[1] for d in data if d[1] != ""]
        frac_correct = (
            float(np.mean([c == "true" for c in corrects])) if corrects else ""
        )
        sem = float(np.std(values, ddof=1) / math.sqrt(len(values))) if len(values) > 1 else 0.0
        out.append(
            _row(preset, algo, "summary", f"{metric}:mean", float(values.mean()), frac_correct)
        )
        out.append(_row(preset, algo, "summary", f"{metric}:sem", sem))
    return out


def run_suite(config: ExperimentConfig) -> tuple[list[str], bool]:
    """Run every (seed, algorithm) cell of the configured experiment.

    Returns the CSV data rows (summary block included) and a flag that is
    True when any cell failed. Results are emitted in seed order regardless
    of worker completion order; per-cell failures become rows rather than
    aborting the suite. Writes ``config.output_path`` when set.
    """
    reps = range(config.replications)
    if config.jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=config.jobs) as pool:
            futures = {pool.submit(_run_one_seed, config, rep): rep for rep in reps}
            by_rep = {futures[f]: f.result() for f in concurrent.futures.as_completed(futures)}
        row_blocks = [by_rep[rep] for rep in reps]
    else:
        row_blocks = [_run_one_seed(config, rep) for rep in reps]

    rows = [row for block in row_blocks for row in block]
    any_failed = any(",error:" in row for row in rows)
    rows.extend(_summary_rows(rows))

    if config.output_path:
        write_csv(config.output_path, rows)
    return rows, any_failed


def write_csv(path: str, rows: list[str]):
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"# schema_version={SCHEMA_VERSION}\n")
            fh.write(CSV_HEADER + "\n")
            for row in rows:
                fh.write(row + "\n")
    except OSError as exc:
        raise HetBanditError(f"could not write {path}: {exc}") from exc


def design_table_rows(bundle: PresetBundle, sigma_sources=("truth", "max"), fw_tol: float = 1e-4) -> list[str]:
    """Oracle design weights per arm, one row per (sigma source, arm)."""
    task = bundle.task
    if not isinstance(task, IdentTask):
        raise ConfigError("design tables need an identification preset")
    report = psi_star(task, variances=bundle.variances, fw_tol=fw_tol)
    variances = (
        bundle.variances
        if bundle.variances is not None
        else bundle.instance.arm_variances()
    )
    rows = []
    for source in sigma_sources:
        design = report.psi_design if source == "truth" else report.rho_design
        for arm_index, weight in enumerate(design.weights):
            rows.append(
                ",".join(
                    _fmt(v)
                    for v in (bundle.name, source, arm_index, float(weight), float(variances[arm_index]))
                )
            )
    return rows


def emit_design_table(bundle: PresetBundle, path: str, sigma_sources=("truth", "max")):
    rows = design_table_rows(bundle, sigma_sources)
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"# schema_version={SCHEMA_VERSION}\n")
            fh.write("preset,sigma_source,arm_index,weight,sigma_sq\n")
            for row in rows:
                fh.write(row + "\n")
    except OSError as exc:
        raise HetBanditError(f"could not write {path}: {exc}") from exc
