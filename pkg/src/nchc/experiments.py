"""Monte Carlo experiment orchestration.

Each experiment walks a parameter grid; every (grid point, trial) pair is
a pure function of (master_seed, experiment id, grid index, trial index),
so results are bit-identical for any worker count: trials may execute in
any order, are sorted by index before aggregation, and all per-trial
linear algebra runs under a single BLAS thread.

A run writes into its output directory:

    results.csv    one aggregate row per grid point
    per_trial.csv  optional raw trial dump (--per-trial)
    manifest.txt   config echo, RNG identifiers, timings, checksums

The distance experiments (dh_mean, ch_variance, accuracy_sweep, heatmap)
share one trial engine: draw two fresh training blocks, a test point from
user a, solve both hull distances, classify. They differ only in the grid
they are pointed at. hciz_verify and geometry_check have their own row
schemas documented next to their runners.
"""

from __future__ import annotations

import csv
import hashlib
import math
import multiprocessing
import os
import time
from dataclasses import dataclass, field, fields
from pathlib import Path
import numpy as np
from threadpoolctl import threadpool_limits

from . import __version__
from .classifier import (
    DecisionSample,
    decision_sample,
    empirical_misclassification,
    gaussian_accuracy,
    moment_summary,
)
from .freeprob import (
    SpectralSample,
    SphericalIntegralSpec,
    esd_eigenvalues,
    free_fourier_prediction,
    sample_goe_matrix,
    sample_wishart_unit_matrix,
    spectral_law_ks,
    spherical_integral_exact_n2,
    spherical_integral_mc,
)
from .model import (
    RNG_ALGORITHM,
    ModelParams,
    SeedStream,
    make_test_point,
    make_training_set,
    norm_concentration_stat,
)

__all__ = [
    "ExperimentConfig",
    "RunManifest",
    "run_experiment",
    "load_results",
    "EXPERIMENTS",
    "AGGREGATE_COLUMNS",
]

EXPERIMENTS = (
    "dh_mean",
    "ch_variance",
    "accuracy_sweep",
    "heatmap",
    "hciz_verify",
    "geometry_check",
)
# stable stream-path identifiers; never reorder
EXPERIMENT_IDS = {name: i for i, name in enumerate(EXPERIMENTS)}

DISTANCE_EXPERIMENTS = ("dh_mean", "ch_variance", "accuracy_sweep", "heatmap")

AGGREGATE_COLUMNS = [
    "experiment",
    "M",
    "N",
    "alpha",
    "sigma2",
    "trials",
    "mean_daa_over_M",
    "var_daa_over_M",
    "mean_dab_over_M",
    "var_dab_over_M",
    "var_sum_over_M",
    "mean_d_over_M",
    "var_d_over_M",
    "misclass_rate",
    "misclass_ci_lo",
    "misclass_ci_hi",
    "predicted_misclass",
    "flagged_trials",
]

PER_TRIAL_COLUMNS = [
    "experiment",
    "M",
    "N",
    "alpha",
    "sigma2",
    "grid_index",
    "trial_index",
    "d_aa",
    "d_ab",
    "d",
    "label",
    "flagged",
    "iterations",
]

HCIZ_COLUMNS = [
    "experiment",
    "ensemble",
    "N",
    "ctheta",
    "samples",
    "mc_rate",
    "mc_se",
    "prediction",
    "exact_n2",
    "abs_deviation",
]

GEOMETRY_COLUMNS = [
    "experiment",
    "M",
    "N",
    "sigma2",
    "trials",
    "norm_concentration",
    "ks_quarter_circle",
    "ks_mp_eigen",
    "belt_mean",
    "belt_target_sigma",
]

HCIZ_ENSEMBLES = ("identity", "diag12", "semicircle", "mp_unit_ratio")


def _as_tuple(value, caster) -> tuple:
    if isinstance(value, (list, tuple, np.ndarray)):
        return tuple(caster(v) for v in value)
    return (caster(value),)


@dataclass
class ExperimentConfig:
    """Full description of one run; everything that affects the output."""

    experiment: str
    M: tuple[int, ...] = (1000,)
    N: tuple[int, ...] = (1000,)
    sigma2: tuple[float, ...] = (1.0,)
    trials: int = 100
    master_seed: int = 0
    tol: float = 1e-6
    max_iter: int | None = None
    out_dir: str = "runs"
    per_trial: bool = False
    workers: int = 1
    # hciz_verify extras
    ensemble: str = "mp_unit_ratio"
    ctheta: tuple[float, ...] = (0.1,)
    samples: int = 20000

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}")
        self.M = _as_tuple(self.M, int)
        self.N = _as_tuple(self.N, int)
        self.sigma2 = _as_tuple(self.sigma2, float)
        self.ctheta = _as_tuple(self.ctheta, float)
        if not self.M or not self.N or not self.sigma2 or not self.ctheta:
            raise ValueError("sweep lists must be nonempty")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.ensemble not in HCIZ_ENSEMBLES:
            raise ValueError(f"unknown ensemble {self.ensemble!r}")
        self.master_seed = int(self.master_seed) & (2**64 - 1)
        self.mn_pairs()  # fail fast on unalignable sweeps

    def mn_pairs(self) -> list[tuple[int, int]]:
        """Positional (M, N) pairing with scalar broadcast; heatmap takes
        the full cartesian product instead."""
        if self.experiment == "heatmap":
            return [(m, n) for m in self.M for n in self.N]
        if len(self.M) == len(self.N):
            return list(zip(self.M, self.N))
        if len(self.M) == 1:
            return [(self.M[0], n) for n in self.N]
        if len(self.N) == 1:
            return [(m, self.N[0]) for m in self.M]
        raise ValueError("--m and --n lists must align (or one be scalar)")


@dataclass
class RunManifest:
    """Reviewable record of a run; written after all result files."""

    config: ExperimentConfig
    rng_algorithm: str
    numpy_version: str
    code_version: str
    wall_seconds: float
    per_trial_seconds: float
    total_trials: int
    flagged_trials: int
    checksums: dict[str, str] = field(default_factory=dict)
    path: str = ""

    def write(self, out_dir: Path) -> Path:
        lines = [f"config.{f.name}: {getattr(self.config, f.name)}" for f in fields(self.config)]
        lines += [
            f"rng.algorithm: {self.rng_algorithm}",
            f"rng.numpy_version: {self.numpy_version}",
            f"code.version: {self.code_version}",
            f"time.wall_seconds: {self.wall_seconds:.3f}",
            f"time.per_trial_seconds: {self.per_trial_seconds:.6f}",
            f"trials.total: {self.total_trials}",
            f"trials.flagged: {self.flagged_trials}",
            f"warning.flagged_above_1pct: "
            f"{self.total_trials > 0 and self.flagged_trials > 0.01 * self.total_trials}",
        ]
        for name, digest in sorted(self.checksums.items()):
            lines.append(f"checksum.{name}: sha256:{digest}")
        path = out_dir / "manifest.txt"
        path.write_text("\n".join(lines) + "\n")
        self.path = str(path)
        return path


def _fmt(value) -> str:
    """Round-trip-stable CSV field formatting."""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _write_csv(path: Path, columns: list[str], rows: list[dict]) -> None:
    with open(path, "w", newline="") as f:
        f.write(",".join(columns) + "\n")
        for row in rows:
            f.write(",".join(_fmt(row[c]) for c in columns) + "\n")


def load_results(path: str | Path) -> list[dict]:
    """Read a results CSV back as dicts with numeric fields converted."""
    path = Path(path)
    if path.is_dir():
        path = path / "results.csv"
    rows = []
    with open(path, newline="") as f:
        for row in csv.DictReader(f):
            parsed = {}
            for key, val in row.items():
                try:
                    parsed[key] = int(val)
                except ValueError:
                    try:
                        parsed[key] = float(val)
                    except ValueError:
                        parsed[key] = val
            rows.append(parsed)
    return rows


# ---------------------------------------------------------------------------
# distance experiments: shared trial engine
# ---------------------------------------------------------------------------

def _distance_trial(task: tuple) -> tuple:
    """One independent trial; pure function of the task tuple."""
    (master_seed, exp_id, grid_index, trial_index, M, N, sigma2, tol, max_iter) = task
    with threadpool_limits(limits=1):
        stream = SeedStream(master_seed, (exp_id, grid_index, trial_index))
        params = ModelParams(M=M, N=N, sigma2=sigma2)
        train_a = make_training_set(params, stream.child(0))
        train_b = make_training_set(params, stream.child(1))
        test = make_test_point(train_a.H, sigma2, "a", stream.child(2))
        s = decision_sample(test.y0, train_a.Y, train_b.Y, tol=tol, max_iter=max_iter)
    return (grid_index, trial_index, s.d_aa, s.d_ab, s.d, s.label, s.flagged, s.iterations)


def _map_tasks(worker, tasks: list[tuple], workers: int) -> list[tuple]:
    if workers <= 1 or len(tasks) <= 1:
        with threadpool_limits(limits=1):
            return [worker(t) for t in tasks]
    ctx = multiprocessing.get_context("spawn")
    chunksize = max(1, len(tasks) // (workers * 8))
    with ctx.Pool(processes=workers) as pool:
        return list(pool.imap_unordered(worker, tasks, chunksize=chunksize))


def _run_distance_experiment(config: ExperimentConfig, verbose: bool) -> tuple[list[dict], list[dict], int]:
    exp_id = EXPERIMENT_IDS[config.experiment]
    grid = [
        (m, n, s2)
        for (m, n) in config.mn_pairs()
        for s2 in config.sigma2
    ]
    tasks = [
        (config.master_seed, exp_id, gi, ti, m, n, s2, config.tol, config.max_iter)
        for gi, (m, n, s2) in enumerate(grid)
        for ti in range(config.trials)
    ]
    raw = _map_tasks(_distance_trial, tasks, config.workers)
    raw.sort(key=lambda r: (r[0], r[1]))

    agg_rows: list[dict] = []
    trial_rows: list[dict] = []
    flagged_total = 0
    for gi, (m, n, s2) in enumerate(grid):
        recs = [r for r in raw if r[0] == gi]
        samples = [
            DecisionSample(d_aa=r[2], d_ab=r[3], d=r[4], label=r[5], flagged=r[6], iterations=r[7])
            for r in recs
        ]
        flagged = sum(1 for s in samples if s.flagged)
        flagged_total += flagged
        kept = [s for s in samples if not s.flagged]

        row = {
            "experiment": config.experiment,
            "M": m,
            "N": n,
            "alpha": m / n,
            "sigma2": s2,
            "trials": len(samples),
            "flagged_trials": flagged,
        }
        nan = float("nan")
        if len(kept) >= 2:
            mom = moment_summary(kept)
            row.update(
                mean_daa_over_M=mom.mean_daa / m,
                var_daa_over_M=mom.var_daa / m**2,
                mean_dab_over_M=mom.mean_dab / m,
                var_dab_over_M=mom.var_dab / m**2,
                var_sum_over_M=mom.var_sum / m**2,
                mean_d_over_M=mom.mean_d / m,
                var_d_over_M=mom.var_d / m**2,
            )
            if mom.var_d > 0:
                row["predicted_misclass"] = 1.0 - gaussian_accuracy(mom.mean_d, mom.var_d)
            else:
                row["predicted_misclass"] = nan
        else:
            row.update(
                mean_daa_over_M=nan, var_daa_over_M=nan, mean_dab_over_M=nan,
                var_dab_over_M=nan, var_sum_over_M=nan, mean_d_over_M=nan,
                var_d_over_M=nan, predicted_misclass=nan,
            )
        if kept:
            rate, (lo, hi) = empirical_misclassification(kept)
            row.update(misclass_rate=rate, misclass_ci_lo=lo, misclass_ci_hi=hi)
        else:
            row.update(misclass_rate=nan, misclass_ci_lo=nan, misclass_ci_hi=nan)
        agg_rows.append(row)

        if verbose:
            print(
                f"[{config.experiment}] M={m} N={n} sigma2={s2:g}: "
                f"mean_daa/M={row['mean_daa_over_M']:.4f} "
                f"var_dab/M={row['var_dab_over_M']:.3e} "
                f"misclass={row['misclass_rate']:.4f} "
                f"({flagged} flagged)"
            )

        if config.per_trial:
            for r in recs:
                trial_rows.append(
                    {
                        "experiment": config.experiment,
                        "M": m,
                        "N": n,
                        "alpha": m / n,
                        "sigma2": s2,
                        "grid_index": gi,
                        "trial_index": r[1],
                        "d_aa": r[2],
                        "d_ab": r[3],
                        "d": r[4],
                        "label": r[5],
                        "flagged": r[6],
                        "iterations": r[7],
                    }
                )
    return agg_rows, trial_rows, flagged_total


# ---------------------------------------------------------------------------
# hciz_verify
# ---------------------------------------------------------------------------

def _hciz_matrix(ensemble: str, n: int, stream: SeedStream) -> np.ndarray:
    if ensemble == "identity":
        return np.eye(n)
    if ensemble == "diag12":
        return np.diag(np.resize([1.0, 2.0], n))
    if ensemble == "semicircle":
        return sample_goe_matrix(n, stream)
    if ensemble == "mp_unit_ratio":
        return sample_wishart_unit_matrix(n, stream)
    raise ValueError(f"unknown ensemble {ensemble!r}")


def _run_hciz(config: ExperimentConfig, verbose: bool) -> list[dict]:
    exp_id = EXPERIMENT_IDS[config.experiment]
    rows: list[dict] = []
    grid = [(n, ct) for n in config.N for ct in config.ctheta]
    with threadpool_limits(limits=1):
        for gi, (n, ct) in enumerate(grid):
            stream = SeedStream(config.master_seed, (exp_id, gi))
            B = _hciz_matrix(config.ensemble, n, stream.child(0))
            spec = SphericalIntegralSpec(B=B, theta=ct, c=1.0, samples=config.samples)
            mc_rate, mc_se = spherical_integral_mc(spec, stream.child(1))
            prediction = free_fourier_prediction(esd_eigenvalues(B), theta=ct, c=1.0)
            exact = spherical_integral_exact_n2(B, theta=ct, c=1.0) if n == 2 else float("nan")
            rows.append(
                {
                    "experiment": config.experiment,
                    "ensemble": config.ensemble,
                    "N": n,
                    "ctheta": ct,
                    "samples": config.samples,
                    "mc_rate": mc_rate,
                    "mc_se": mc_se,
                    "prediction": prediction,
                    "exact_n2": exact,
                    "abs_deviation": abs(mc_rate - prediction),
                }
            )
            if verbose:
                print(
                    f"[hciz_verify] ensemble={config.ensemble} N={n} ctheta={ct:g}: "
                    f"mc={mc_rate:.6f}±{mc_se:.2e} prediction={prediction:.6f}"
                )
    return rows


# ---------------------------------------------------------------------------
# geometry_check
# ---------------------------------------------------------------------------

def _run_geometry(config: ExperimentConfig, verbose: bool) -> list[dict]:
    exp_id = EXPERIMENT_IDS[config.experiment]
    rows: list[dict] = []
    grid = [(m, n, s2) for (m, n) in config.mn_pairs() for s2 in config.sigma2]
    if any(m < 100 for m, _, _ in grid):
        raise ValueError("geometry_check needs M >= 100 (spectral-law regime)")
    with threadpool_limits(limits=1):
        for gi, (m, n, s2) in enumerate(grid):
            params = ModelParams(M=m, N=n, sigma2=s2)
            sigma = math.sqrt(s2)
            norm_stats, ks_qc, ks_mp, belts = [], [], [], []
            for ti in range(config.trials):
                stream = SeedStream(config.master_seed, (exp_id, gi, ti))
                ts = make_training_set(params, stream.child(0))
                norm_stats.append(norm_concentration_stat(ts.X))
                sv = np.sort(np.linalg.svd(ts.H / math.sqrt(m), compute_uv=False))
                ks_qc.append(spectral_law_ks(SpectralSample(sv, m), "quarter_circle_singular"))
                ev = esd_eigenvalues((ts.H @ ts.H.T) / m)
                ks_mp.append(spectral_law_ks(ev, "mp_unit_ratio_eigen"))
                belts.append(float(np.mean(np.linalg.norm(sigma * ts.noise, axis=0))) / math.sqrt(m))
            rows.append(
                {
                    "experiment": config.experiment,
                    "M": m,
                    "N": n,
                    "sigma2": s2,
                    "trials": config.trials,
                    "norm_concentration": float(np.mean(norm_stats)),
                    "ks_quarter_circle": float(np.mean(ks_qc)),
                    "ks_mp_eigen": float(np.mean(ks_mp)),
                    "belt_mean": float(np.mean(belts)),
                    "belt_target_sigma": sigma,
                }
            )
            if verbose:
                r = rows[-1]
                print(
                    f"[geometry_check] M={m} N={n} sigma2={s2:g}: "
                    f"norm_dev={r['norm_concentration']:.4f} "
                    f"KS(qc)={r['ks_quarter_circle']:.4f} KS(mp)={r['ks_mp_eigen']:.4f} "
                    f"belt={r['belt_mean']:.4f} (target {sigma:.4f})"
                )
    return rows


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    h.update(path.read_bytes())
    return h.hexdigest()


def run_experiment(config: ExperimentConfig, verbose: bool = False) -> RunManifest:
    """Run one experiment grid and persist results + manifest."""
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    t0 = time.perf_counter()
    trial_rows: list[dict] = []
    flagged = 0
    if config.experiment in DISTANCE_EXPERIMENTS:
        agg_rows, trial_rows, flagged = _run_distance_experiment(config, verbose)
        columns = AGGREGATE_COLUMNS
        total_trials = config.trials * len(agg_rows)
    elif config.experiment == "hciz_verify":
        agg_rows = _run_hciz(config, verbose)
        columns = HCIZ_COLUMNS
        total_trials = config.samples * len(agg_rows)
    else:
        agg_rows = _run_geometry(config, verbose)
        columns = GEOMETRY_COLUMNS
        total_trials = config.trials * len(agg_rows)
    wall = time.perf_counter() - t0

    results_path = out_dir / "results.csv"
    _write_csv(results_path, columns, agg_rows)
    checksums = {"results.csv": _sha256(results_path)}
    if config.per_trial and trial_rows:
        per_trial_path = out_dir / "per_trial.csv"
        _write_csv(per_trial_path, PER_TRIAL_COLUMNS, trial_rows)
        checksums["per_trial.csv"] = _sha256(per_trial_path)

    manifest = RunManifest(
        config=config,
        rng_algorithm=RNG_ALGORITHM,
        numpy_version=np.__version__,
        code_version=__version__,
        wall_seconds=wall,
        per_trial_seconds=wall / max(total_trials, 1),
        total_trials=total_trials,
        flagged_trials=flagged,
        checksums=checksums,
    )
    manifest.write(out_dir)
    return manifest
