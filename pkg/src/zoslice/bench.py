"""Benchmark harness: experiment specs, seeded sweep execution, CSV reports.

An experiment is a grid of cells (kernel x m [x leapfrog] x seed) against one
target.  Every cell runs a fresh chain from the zero vector with its own RNG
stream and ledger; the random-walk baseline is always included because gains
are reported relative to it.  ESJD is computed on the post-burn-in half of
each chain (adaptation runs during the first half and is then frozen).

Artifacts written into the output directory:

* ``reports.csv``   - fixed schema (kernel, d, m, m0, L, esjd, gain,
  eff_ratio, acc_rate, rounds), one row per aggregated cell and per
  efficiency-sweep reference m0.  Rows with m0 == m are the per-round gain
  rows; m0 != m rows compare Eff(m) against Eff(m0).
* ``manifest.json`` - resolved spec, library version, per-phase wall clock,
  ledger totals, per-cell records.  Feeding the manifest back to ``run``
  reproduces every CSV bit-identically.
* dataset CSV + JSON sidecar for the generated data.

ESJD averages across seeds are plain means; the seed list is recorded.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .diagnostics import (
    eff_sweep,
    esjd,
    moment_stationarity_check,
    parallel_cost_factor,
    w2_contraction_estimate,
)
from .samplers import (
    SamplerConfig,
    leapfrog_involution_check,
    run_chain,
)
from .directions import sample_canonical_subset
from .targets import (
    GaussianTarget,
    LogisticRegressionTarget,
    StochasticVolatilityTarget,
    generate_logistic_data,
    generate_sv_data,
    save_logistic_dataset,
    save_sv_dataset,
)

REPORT_COLUMNS = ["kernel", "d", "m", "m0", "L", "esjd", "gain", "eff_ratio", "acc_rate", "rounds"]
EXPERIMENTS = ("logistic25", "logistic200", "stochvol203", "gaussian-verify", "custom")
DESK_ITERATIONS = 10_000
PAPER_ITERATIONS = 50_000


class SpecError(ValueError):
    """Invalid experiment spec (maps to exit code 2 in the CLI)."""


@dataclass
class ExperimentSpec:
    experiment: str = "logistic200"
    kernels: list = field(default_factory=lambda: ["rwm", "rs-mala", "naive-zo-mala", "mtm"])
    m: list = field(default_factory=lambda: [25, 50, 100])
    m0: list = field(default_factory=list)
    leapfrog: list = field(default_factory=lambda: [2, 5, 10])
    iterations: int = DESK_ITERATIONS
    seeds: list = field(default_factory=lambda: [1])
    epsilon: float = 1e-5
    law: str = "canonical"
    workers: int | None = None
    chunk_size: int | None = 64
    data_seed: int = 7
    save_trajectories: bool = False
    paper_scale: bool = False
    precondition: str = "none"
    target: dict | None = None
    out: str | None = None

    def validate(self):
        if self.experiment not in EXPERIMENTS:
            raise SpecError(
                f"experiment: unknown tag {self.experiment!r}; choose from {EXPERIMENTS}"
            )
        if self.experiment != "gaussian-verify":
            if not self.kernels:
                raise SpecError("kernels: list must be non-empty")
            if not self.m:
                raise SpecError("m: grid must be non-empty")
        if any(v < 1 for v in self.m):
            raise SpecError("m: entries must be >= 1")
        if len(set(self.seeds)) != len(self.seeds) or not self.seeds:
            raise SpecError("seeds: must be a non-empty list of distinct integers")
        if self.iterations < 2:
            raise SpecError("iterations: must be >= 2")
        if self.epsilon <= 0:
            raise SpecError("epsilon: must be positive")
        for kernel in self.kernels:
            if kernel not in ("rwm", "rs-mala", "rs-hmc", "naive-zo-mala", "mtm", "zo-ula"):
                raise SpecError(f"kernels: unknown kernel {kernel!r}")
        if self.experiment == "custom" and not self.target:
            raise SpecError("custom experiment needs a target block")
        if self.precondition not in ("none", "pilot-diag"):
            raise SpecError("precondition: must be 'none' or 'pilot-diag'")
        return self

    def as_dict(self):
        return asdict(self)


BUILTIN_DEFAULTS = {
    "logistic25": {"m": [5, 10, 25], "m0": []},
    "logistic200": {"m": [25, 50, 100], "m0": []},
    # the volatility posterior's coordinate scales span more than an order of
    # magnitude; a pilot-estimated diagonal preconditioner (shared by every
    # kernel, baseline included) stands in for covariance-learning adaptation
    "stochvol203": {"m": [25, 50, 100], "m0": [], "precondition": "pilot-diag"},
    "gaussian-verify": {"kernels": [], "m": [], "m0": []},
}

PILOT_SEED = 999
PILOT_ITERATIONS = 10_000


def pilot_diagonal_preconditioner(target, spec: ExperimentSpec):
    """Whitening matrix diag(1/sd) from a short adapted random-walk chain."""
    cfg = SamplerConfig(kernel="rwm", chunk_size=spec.chunk_size, workers=spec.workers)
    pilot = run_chain(
        target, cfg, PILOT_ITERATIONS, np.zeros(target.dimension), seed=PILOT_SEED
    )
    sds = pilot.trajectory.post_burnin().std(axis=0, ddof=1)
    return np.diag(1.0 / np.maximum(sds, 1e-6))


def load_spec(source, overrides=None) -> ExperimentSpec:
    """Build a spec from a builtin tag, a YAML file, or an emitted manifest."""
    data = {}
    source = str(source)
    if source in EXPERIMENTS:
        data["experiment"] = source
    else:
        path = Path(source)
        if not path.exists():
            raise SpecError(f"spec {source!r} is neither a known tag nor a file")
        try:
            if path.suffix == ".json":
                loaded = json.loads(path.read_text())
                loaded = loaded.get("resolved_spec", loaded)
            else:
                loaded = yaml.safe_load(path.read_text())
        except (yaml.YAMLError, json.JSONDecodeError) as exc:
            raise SpecError(f"cannot parse spec file {source}: {exc}") from exc
        if not isinstance(loaded, dict):
            raise SpecError(f"spec file {source} must hold a mapping")
        data.update(loaded)
    for key, value in (overrides or {}).items():
        if value is not None:
            data[key] = value
    tag = data.get("experiment", "logistic200")
    merged = dict(BUILTIN_DEFAULTS.get(tag, {}))
    merged.update(data)
    known = set(ExperimentSpec.__dataclass_fields__)
    unknown = set(merged) - known
    if unknown:
        raise SpecError(f"unknown spec fields: {sorted(unknown)}")
    spec = ExperimentSpec(**merged)
    if spec.paper_scale and spec.iterations == DESK_ITERATIONS:
        spec.iterations = PAPER_ITERATIONS
    return spec.validate()


def build_target(spec: ExperimentSpec, outdir: Path | None = None):
    """Materialize the experiment's target, writing the dataset when asked."""
    tag = spec.experiment
    if tag == "logistic25":
        Z, y, beta0 = generate_logistic_data(spec.data_seed, 25, 25)
    elif tag == "logistic200":
        Z, y, beta0 = generate_logistic_data(spec.data_seed, 200, 200)
    elif tag == "stochvol203":
        series = generate_sv_data(spec.data_seed, 200)
        if outdir is not None:
            save_sv_dataset(
                outdir / "dataset.csv",
                series,
                {
                    "seed": spec.data_seed,
                    "n": 200,
                    "mu0": 1.0,
                    "phi0_raw": float(np.arctanh(0.5)),
                    "log_sigma0": 0.0,
                },
            )
        return StochasticVolatilityTarget(series)
    elif tag == "gaussian-verify":
        return GaussianTarget.diagonal([1.0, 0.25])
    elif tag == "custom":
        return _build_custom_target(spec)
    else:  # pragma: no cover
        raise SpecError(tag)
    if outdir is not None:
        save_logistic_dataset(
            outdir / "dataset.csv",
            Z,
            y,
            {"seed": spec.data_seed, "n": Z.shape[0], "d": Z.shape[1], "beta0": beta0},
        )
    return LogisticRegressionTarget(Z, y)


def _build_custom_target(spec):
    block = dict(spec.target)
    kind = block.pop("kind", None)
    if kind == "gaussian":
        return GaussianTarget.diagonal(block.get("variances", [1.0, 1.0]))
    if kind == "logistic":
        Z, y, _ = generate_logistic_data(
            block.get("data_seed", spec.data_seed), block["n"], block["d"]
        )
        return LogisticRegressionTarget(Z, y)
    if kind == "stochvol":
        return StochasticVolatilityTarget(
            generate_sv_data(block.get("data_seed", spec.data_seed), block.get("n", 200))
        )
    raise SpecError(f"custom target kind {kind!r} not recognized")


def enumerate_cells(spec: ExperimentSpec):
    """All (kernel, m, L, seed) cells, baseline first."""
    cells = []
    for seed in spec.seeds:
        cells.append({"kernel": "rwm", "m": 1, "L": 1, "seed": seed})
        for kernel in spec.kernels:
            if kernel == "rwm":
                continue
            for m in spec.m:
                if kernel == "rs-hmc":
                    for L in spec.leapfrog:
                        cells.append({"kernel": kernel, "m": m, "L": L, "seed": seed})
                else:
                    cells.append({"kernel": kernel, "m": m, "L": 1, "seed": seed})
    return cells


def run_cell(target, cell, spec: ExperimentSpec, preconditioner=None):
    config = SamplerConfig(
        kernel=cell["kernel"],
        m=cell["m"],
        law=spec.law,
        n_leapfrog=cell["L"],
        epsilon=spec.epsilon,
        workers=spec.workers,
        chunk_size=spec.chunk_size,
        preconditioner=preconditioner,
    )
    result = run_chain(
        target, config, spec.iterations, np.zeros(target.dimension), seed=cell["seed"]
    )
    return result


def _cell_record(cell, result, value):
    return {
        **cell,
        "status": "ok",
        "esjd": value,
        "acc_rate": result.info["acceptance_rate_post_burnin"],
        "scale_final": result.info["scale_final"],
        "rounds": result.ledger.rounds,
        "evals": result.ledger.evals,
        "wall_time": result.info["wall_time"],
        "divergences": result.info["divergences"],
    }


def run_experiment(spec: ExperimentSpec, outdir, progress=None):
    """Execute all cells; returns (exit_code, manifest dict).

    Cell failures are recorded in the manifest with status "failed" and turn
    the exit code to 1; completed artifacts are kept.
    """
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    wall = {}
    tic = time.perf_counter()
    target = build_target(spec, outdir)
    wall["data"] = time.perf_counter() - tic

    if spec.experiment == "gaussian-verify":
        return _run_gaussian_verify(spec, target, outdir, wall)

    preconditioner = None
    if spec.precondition == "pilot-diag":
        tic = time.perf_counter()
        preconditioner = pilot_diagonal_preconditioner(target, spec)
        wall["pilot"] = time.perf_counter() - tic

    cells = enumerate_cells(spec)
    records = []
    failed = 0
    tic = time.perf_counter()
    for cell in cells:
        if progress:
            progress(f"cell kernel={cell['kernel']} m={cell['m']} L={cell['L']} seed={cell['seed']}")
        try:
            result = run_cell(target, cell, spec, preconditioner)
            value = esjd(result.trajectory.post_burnin())
            records.append(_cell_record(cell, result, value))
            if spec.save_trajectories:
                _write_trajectory(outdir, cell, result)
        except Exception as exc:  # noqa: BLE001 - cell isolation is the point
            failed += 1
            records.append({**cell, "status": "failed", "error": str(exc)})
    wall["cells"] = time.perf_counter() - tic

    tic = time.perf_counter()
    rows = aggregate_rows(records, target.dimension, spec)
    write_reports_csv(outdir / "reports.csv", rows)
    wall["reports"] = time.perf_counter() - tic

    manifest = {
        "library_version": __version__,
        "resolved_spec": spec.as_dict(),
        "seeds": spec.seeds,
        "rng": "numpy PCG64 (default_rng)",
        "wall_clock": wall,
        "ledger_totals": {
            "rounds": int(sum(r.get("rounds", 0) for r in records)),
            "evals": int(sum(r.get("evals", 0) for r in records)),
        },
        "cells": records,
        "reports": ["reports.csv"],
        "selection_protocol": "rs-hmc leapfrog count chosen per m by best per-round gain",
        "precondition": {
            "mode": spec.precondition,
            "pilot_seed": PILOT_SEED if preconditioner is not None else None,
            "pilot_iterations": PILOT_ITERATIONS if preconditioner is not None else None,
        },
    }
    (outdir / "manifest.json").write_text(json.dumps(manifest, indent=2, default=float))
    return (1 if failed else 0), manifest


def aggregate_rows(records, d, spec: ExperimentSpec):
    """Average cell records over seeds and attach gain / efficiency columns."""
    ok = [r for r in records if r.get("status") == "ok"]
    groups = {}
    for r in ok:
        groups.setdefault((r["kernel"], r["m"], r["L"]), []).append(r)
    baseline = [r for r in ok if r["kernel"] == "rwm"]
    esjd_rwm = float(np.mean([r["esjd"] for r in baseline])) if baseline else None

    rows = []
    mean_cells = {}
    for (kernel, m, L), cellset in sorted(groups.items()):
        mean_esjd = float(np.mean([r["esjd"] for r in cellset]))
        mean_cells[(kernel, m, L)] = mean_esjd
        gain = ""
        if esjd_rwm:
            gain = mean_esjd / esjd_rwm / parallel_cost_factor(m, m, L)
        rows.append(
            {
                "kernel": kernel,
                "d": d,
                "m": m,
                "m0": m,
                "L": L,
                "esjd": mean_esjd,
                "gain": gain,
                "eff_ratio": 1.0,
                "acc_rate": float(np.mean([r["acc_rate"] for r in cellset])),
                "rounds": int(np.mean([r["rounds"] for r in cellset])),
            }
        )

    # efficiency sweep rows: Eff(m)/Eff(m0) within each kernel/L family
    for m0 in spec.m0:
        for (kernel, L) in sorted({(k, L) for (k, _, L) in mean_cells}):
            family = {m: v for (k, m, Lf), v in mean_cells.items() if k == kernel and Lf == L}
            if m0 not in family or kernel == "rwm":
                continue
            eff0 = family[m0] / parallel_cost_factor(m0, m0, L)
            for m, value in sorted(family.items()):
                if m == m0:
                    continue
                eff = value / parallel_cost_factor(m, m0, L)
                base = next(r for r in rows if (r["kernel"], r["m"], r["L"]) == (kernel, m, L))
                rows.append({**base, "m0": m0, "eff_ratio": eff / eff0})
    return rows


def write_reports_csv(path, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(REPORT_COLUMNS)
        for row in rows:
            writer.writerow(
                [
                    row["kernel"],
                    row["d"],
                    row["m"],
                    row["m0"],
                    row["L"],
                    repr(float(row["esjd"])),
                    repr(float(row["gain"])) if row["gain"] != "" else "",
                    repr(float(row["eff_ratio"])),
                    repr(float(row["acc_rate"])),
                    row["rounds"],
                ]
            )


def read_reports_csv(path):
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        rows = []
        for raw in reader:
            rows.append(
                {
                    "kernel": raw["kernel"],
                    "d": int(raw["d"]),
                    "m": int(raw["m"]),
                    "m0": int(raw["m0"]),
                    "L": int(raw["L"]),
                    "esjd": float(raw["esjd"]),
                    "gain": float(raw["gain"]) if raw["gain"] else None,
                    "eff_ratio": float(raw["eff_ratio"]),
                    "acc_rate": float(raw["acc_rate"]),
                    "rounds": int(raw["rounds"]),
                }
            )
    return rows


def _write_trajectory(outdir, cell, result):
    name = f"trajectory_{cell['kernel']}_m{cell['m']}_L{cell['L']}_s{cell['seed']}.csv"
    np.savetxt(outdir / name, result.trajectory.states, delimiter=",")


def _run_gaussian_verify(spec, target, outdir, wall):
    """Stationarity + contraction + involution property suites on a known target."""
    tic = time.perf_counter()
    results = {}
    steps = max(spec.iterations, 40_000)

    for kernel, extra in [
        ("rs-mala", {"m": 1}),
        ("rs-hmc", {"m": 1, "n_leapfrog": 3, "scale": 0.6, "adapt": False}),
        ("naive-zo-mala", {"m": 1}),
        ("mtm", {"m": 3}),
    ]:
        cfg = SamplerConfig(
            kernel=kernel, law=spec.law, epsilon=spec.epsilon, chunk_size=None, **extra
        )
        res = run_chain(target, cfg, steps, np.zeros(2), seed=spec.seeds[0])
        rep = moment_stationarity_check(
            res.trajectory.post_burnin(), target, mean_tol=0.06, cov_rtol=0.1
        )
        results[f"stationarity[{kernel}]"] = {
            "pass": bool(rep.passed),
            "mean_error": rep.mean_error,
            "cov_rel_error": rep.cov_rel_error,
        }

    iso = GaussianTarget.standard(20)
    rng = np.random.default_rng(spec.seeds[0])
    rep = w2_contraction_estimate(iso, 0.25, 5, spec.law, 200, 12, rng)
    results["contraction[m=5]"] = {
        "pass": bool(rep.within_bound),
        "factor": rep.factor,
        "bound": rep.bound,
    }
    rep_full = w2_contraction_estimate(iso, 0.25, 20, "canonical", 5, 3, rng, epsilon=0.05)
    results["contraction[m=d]"] = {
        "pass": bool(abs(rep_full.factor - 0.75) <= 1e-12),
        "factor": rep_full.factor,
    }

    rng = np.random.default_rng(11)
    V = sample_canonical_subset(rng, 2, 1)
    inv = leapfrog_involution_check(
        target, rng.standard_normal(2), V, rng.standard_normal(1), rng.standard_normal(1),
        0.4, 3,
    )
    results["involution"] = {
        "pass": bool(inv.involution_deviation <= 1e-8 and inv.log_abs_det_jacobian <= 1e-6),
        "deviation": inv.involution_deviation,
        "log_abs_det": inv.log_abs_det_jacobian,
    }

    wall["suites"] = time.perf_counter() - tic
    ok = all(v["pass"] for v in results.values())
    manifest = {
        "library_version": __version__,
        "resolved_spec": spec.as_dict(),
        "wall_clock": wall,
        "suites": results,
    }
    (outdir / "manifest.json").write_text(json.dumps(manifest, indent=2, default=float))
    return (0 if ok else 1), manifest
