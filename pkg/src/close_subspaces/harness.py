"""Monte Carlo runner for sweeps over the snapshot count ``T`` or the SNR.

The true bases are drawn once from the master seed and held fixed; every
trial redraws ``S_k`` and ``N_k``. Trial seeds come from
``SeedSequence(master, spawn_key=(sweep_index, trial_index))``, so a trial's
stream does not depend on which worker runs it or when.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .bingham import SamplerStallError
from .estimators import METHODS, estimate
from .model import ScenarioConfig, generate_data, make_truth
from .stiefel import principal_angles, subspace_sq_distance

log = logging.getLogger(__name__)

DEFAULT_T_GRID = [3, 4, 6, 8, 12, 16, 24, 32]
DEFAULT_SNR_GRID = [-10.0, -5.0, 0.0, 5.0, 10.0]
FLOAT_FMT = "%.17g"


class SpecError(ValueError):
    """Malformed sweep specification; the message names the offending field."""


@dataclass
class TrialMetrics:
    """Per-trial errors of one estimator; angles are in degrees."""

    trial_id: int
    estimator: str
    msd: list[float]
    theta_hat: list[float]
    failed: bool = False
    error: str = ""


@dataclass
class SweepSpec:
    base: ScenarioConfig
    sweep_variable: str
    sweep_values: list
    n_trials: int = 100
    output_path: str = "sweep.csv"

    def __post_init__(self):
        if self.sweep_variable not in ("T", "snr_db"):
            raise SpecError(f"sweep_variable: must be 'T' or 'snr_db', got {self.sweep_variable!r}")
        if not self.sweep_values:
            raise SpecError("sweep_values: must be non-empty")
        if self.n_trials < 1:
            raise SpecError("n_trials: must be >= 1")
        if self.sweep_variable == "T":
            if any(float(v) != int(v) or int(v) < 1 for v in self.sweep_values):
                raise SpecError("sweep_values: T values must be positive integers")
            self.sweep_values = [int(v) for v in self.sweep_values]
        else:
            self.sweep_values = [float(v) for v in self.sweep_values]

    def point_config(self, value) -> ScenarioConfig:
        return self.base.replace(**{self.sweep_variable: value})

    @classmethod
    def from_dict(cls, d: dict) -> "SweepSpec":
        try:
            jsonschema.validate(d, _schema())
        except jsonschema.ValidationError as exc:
            where = ".".join(str(p) for p in exc.absolute_path) or "<root>"
            raise SpecError(f"{where}: {exc.message}") from None
        try:
            base = ScenarioConfig(**d["base"])
        except ValueError as exc:
            raise SpecError(f"base.{exc}") from None
        return cls(
            base=base,
            sweep_variable=d["sweep_variable"],
            sweep_values=list(d["sweep_values"]),
            n_trials=d.get("n_trials", 100),
            output_path=d.get("output_path", "sweep.csv"),
        )

    @classmethod
    def from_json(cls, path) -> "SweepSpec":
        try:
            d = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise SpecError(f"spec: cannot read {path}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise SpecError(f"spec: invalid JSON: {exc}") from None
        return cls.from_dict(d)


def _schema() -> dict:
    text = resources.files(__package__).joinpath("schemas/sweep_spec.schema.json").read_text()
    return json.loads(text)


def truth_for(config: ScenarioConfig) -> list[np.ndarray]:
    """The fixed true bases derived from the master seed."""
    return make_truth(config, np.random.default_rng(np.random.SeedSequence(config.seed)))


def trial_seed(master_seed: int, sweep_index: int, trial_index: int) -> int:
    ss = np.random.SeedSequence(master_seed, spawn_key=(sweep_index, trial_index))
    return int(ss.generate_state(1, np.uint64)[0])


def run_trial(config: ScenarioConfig, trial_seed: int, H_true=None, trial_id: int = 0) -> list[TrialMetrics]:
    """Simulate one data draw and score every estimator against the truth."""
    if H_true is None:
        H_true = truth_for(config)
    data_ss, gibbs_ss = np.random.SeedSequence(trial_seed).spawn(2)
    data = generate_data(config, H_true, np.random.default_rng(data_ss))
    rows = []
    for method in METHODS:
        rng = np.random.default_rng(gibbs_ss) if method == "gibbs" else None
        try:
            est = estimate(method, data, rng)
        except (SamplerStallError, np.linalg.LinAlgError, FloatingPointError) as exc:
            log.warning("trial %d: %s failed: %s", trial_id, method, exc)
            rows.append(
                TrialMetrics(trial_id, method, [math.nan] * config.K, [math.nan] * config.R, True, str(exc))
            )
            continue
        msd = [subspace_sq_distance(Hh, H) for Hh, H in zip(est.H_hat, H_true)]
        theta = np.rad2deg(principal_angles(est.H_hat[0], est.H_hat[1]))
        rows.append(TrialMetrics(trial_id, method, msd, [float(t) for t in theta]))
    return rows


@dataclass
class SummaryRow:
    sweep_var: str
    sweep_value: float
    estimator: str
    msd: list[float]
    theta_mean: list[float]
    theta_std: list[float]
    n_trials: int

    def as_record(self) -> list:
        return (
            [self.sweep_var, _fmt(self.sweep_value), self.estimator]
            + [_fmt(v) for v in self.msd]
            + [_fmt(v) for pair in zip(self.theta_mean, self.theta_std) for v in pair]
            + [str(self.n_trials)]
        )


def _fmt(x: float) -> str:
    return FLOAT_FMT % x


def csv_header(K: int, R: int) -> list[str]:
    cols = ["sweep_var", "sweep_value", "estimator"]
    cols += [f"msd{k}" for k in range(1, K + 1)]
    for r in range(1, R + 1):
        cols += [f"theta{r}_mean", f"theta{r}_std"]
    return cols + ["n_trials"]


def summarize(sweep_var: str, value, metrics: list[TrialMetrics], K: int, R: int) -> list[SummaryRow]:
    """Aggregate trial rows of one sweep point; failed trials are left out."""
    rows = []
    for method in METHODS:
        ok = sorted((m for m in metrics if m.estimator == method and not m.failed), key=lambda m: m.trial_id)
        if ok:
            msd = np.array([m.msd for m in ok])
            th = np.array([m.theta_hat for m in ok])
            rows.append(
                SummaryRow(
                    sweep_var,
                    float(value),
                    method,
                    [float(v) for v in msd.mean(axis=0)],
                    [float(v) for v in th.mean(axis=0)],
                    [float(v) for v in th.std(axis=0)],
                    len(ok),
                )
            )
        else:
            nan = math.nan
            rows.append(SummaryRow(sweep_var, float(value), method, [nan] * K, [nan] * R, [nan] * R, 0))
    return rows


def write_summary_csv(path, rows: list[SummaryRow], K: int, R: int) -> None:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(csv_header(K, R))
            for row in rows:
                w.writerow(row.as_record())
    except OSError as exc:
        raise OSError(f"cannot write sweep output {path}: {exc}") from exc


def read_summary_csv(path) -> list[SummaryRow]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        K = sum(1 for h in header if h.startswith("msd"))
        R = sum(1 for h in header if h.endswith("_mean"))
        rows = []
        for rec in reader:
            nums = [float(v) for v in rec[3 : 3 + K + 2 * R]]
            rows.append(
                SummaryRow(
                    rec[0],
                    float(rec[1]),
                    rec[2],
                    nums[:K],
                    nums[K::2],
                    nums[K + 1 :: 2],
                    int(rec[-1]),
                )
            )
    return rows


def _run_job(job):
    config, seed, H_true, sweep_index, trial_index = job
    return sweep_index, run_trial(config, seed, H_true, trial_id=trial_index)


def run_sweep(spec: SweepSpec, threads: int = 1, write: bool = True) -> list[SummaryRow]:
    """Run every sweep point, write the CSV to ``spec.output_path`` and return its rows."""
    base = spec.base
    H_true = truth_for(base)
    jobs = [
        (spec.point_config(value), trial_seed(base.seed, i, t), H_true, i, t)
        for i, value in enumerate(spec.sweep_values)
        for t in range(spec.n_trials)
    ]
    per_point: dict[int, list[TrialMetrics]] = {i: [] for i in range(len(spec.sweep_values))}
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            for i, rows in pool.map(_run_job, jobs, chunksize=max(1, len(jobs) // (8 * threads))):
                per_point[i].extend(rows)
    else:
        for job in jobs:
            i, rows = _run_job(job)
            per_point[i].extend(rows)

    summary = []
    for i, value in enumerate(spec.sweep_values):
        metrics = per_point[i]
        n_failed = sum(m.failed for m in metrics)
        if n_failed:
            log.warning("%s=%s: %d failed estimator runs", spec.sweep_variable, value, n_failed)
        summary.extend(summarize(spec.sweep_variable, value, metrics, base.K, base.R))
        log.info("%s=%s done (%d trials)", spec.sweep_variable, value, spec.n_trials)
    if write:
        write_summary_csv(spec.output_path, summary, base.K, base.R)
    return summary
