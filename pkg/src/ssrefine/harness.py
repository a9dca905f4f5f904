"""Monte Carlo experiments: single trials, modification-factor sweeps, SNR sweeps.

Every trial draws its data from a generator seeded by ``(base_seed,
trial_index)`` (see :func:`ssrefine.array_model.derive_seed`), so results do not
depend on execution order or on the number of worker processes. The same trial
seeds are reused at every SNR point of an SNR sweep.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial
from typing import Optional, Sequence

import numpy as np

from .array_model import ArrayGeometry, Scenario, derive_seed, synthesize_snapshots
from .covariance import eigendecompose, partition_subspaces, sample_covariance
from .metrics import (MetricConfig, TrialRecord, resolution_probability, rmse,
                      success_rate_hard, success_rate_soft)
from .music import AngularGrid, estimate_doa
from .refinement import (DegenerateRefinement, RefinementFailed, RefinementResult,
                         mu_grid, search_mu, similarity_matrix, transform_matrix)

log = logging.getLogger(__name__)

METHODS = ("plain-music", "refined", "both")

CSV_COLUMNS = (
    "independent_var", "music_rmse", "refined_rmse", "mean_recon_error",
    "hard_success_music", "hard_success_refined", "soft_success_music",
    "soft_success_refined", "resolution_prob_refined", "degraded_count",
    "skipped_mu_count",
)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    """All knobs of an experiment. Defaults reproduce the published setup."""

    element_count: int = 8
    spacing_over_wavelength: float = 0.5
    true_doas_deg: tuple = (15.0, 30.0, 45.0)
    snapshot_count: int = 50
    trial_count: int = 200
    base_seed: int = 0
    grid_start_deg: float = -89.9
    grid_stop_deg: float = 89.9
    grid_step_deg: float = 0.1
    mu_start: float = 0.0
    mu_stop: float = 5.0
    mu_step: float = 0.1
    snr_db: tuple = (-18.0,)
    delta_deg: float = 1.0
    kappa: float = 1.0
    methods: str = "both"
    workers: int = 1
    noiseless: bool = False

    def __post_init__(self):
        object.__setattr__(self, "true_doas_deg", tuple(float(t) for t in np.atleast_1d(self.true_doas_deg)))
        object.__setattr__(self, "snr_db", tuple(float(s) for s in np.atleast_1d(self.snr_db)))
        try:
            geom = self.geometry
            self.grid
            self.metric_config
            mu_grid(self.mu_start, self.mu_stop, self.mu_step)
            for snr in self.snr_db:
                self.scenario(snr)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if not self.snr_db:
            raise ConfigError("at least one SNR value is required")
        if self.source_count >= geom.element_count:
            raise ConfigError(f"need fewer sources ({self.source_count}) than elements ({geom.element_count})")
        if self.trial_count < 1:
            raise ConfigError("trial_count must be at least 1")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        if self.methods not in METHODS:
            raise ConfigError(f"methods must be one of {METHODS}")

    @property
    def source_count(self) -> int:
        return len(self.true_doas_deg)

    @property
    def geometry(self) -> ArrayGeometry:
        return ArrayGeometry(self.element_count, self.spacing_over_wavelength)

    @property
    def grid(self) -> AngularGrid:
        return AngularGrid(self.grid_start_deg, self.grid_stop_deg, self.grid_step_deg)

    @property
    def metric_config(self) -> MetricConfig:
        return MetricConfig(self.delta_deg, self.kappa)

    @property
    def runs_refined(self) -> bool:
        return self.methods in ("refined", "both")

    def scenario(self, snr_db: float) -> Scenario:
        return Scenario(self.true_doas_deg, snr_db, self.snapshot_count)

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)


@dataclass
class TrialOutcome:
    """Results of both methods on one synthesized data set.

    ``refined`` is the record at the best modification factor, or a copy of
    the plain MUSIC record when refinement fell back.
    """

    trial_index: int
    snr_db: float
    eigenvalues: np.ndarray
    music: TrialRecord
    refined: Optional[TrialRecord] = None
    refinement: Optional[RefinementResult] = None
    fallback_reason: Optional[str] = None

    @property
    def fell_back(self) -> bool:
        return self.fallback_reason is not None


@dataclass(frozen=True)
class MethodRecord:
    """One row of a per-trial dump: a method's estimate in a sweep row."""

    independent_var: float
    trial_index: int
    method: str
    record: TrialRecord
    fallback: bool = False
    recon_error: float = math.nan


@dataclass(frozen=True)
class SweepRow:
    independent_var: float
    music_rmse: float
    refined_rmse: float
    mean_recon_error: float
    hard_success_music: float
    hard_success_refined: float
    soft_success_music: float
    soft_success_refined: float
    resolution_prob_refined: float
    degraded_count: int
    skipped_mu_count: int

    def values(self) -> tuple:
        return tuple(getattr(self, c) for c in CSV_COLUMNS)


def run_trial(config: ExperimentConfig, trial_index: int,
              snr_db: Optional[float] = None) -> TrialOutcome:
    """Synthesize one data set and estimate DOAs with plain and refined MUSIC."""
    snr = config.snr_db[0] if snr_db is None else float(snr_db)
    geom, grid, P = config.geometry, config.grid, config.source_count
    truth = np.asarray(config.true_doas_deg)

    X = synthesize_snapshots(config.scenario(snr), geom, derive_seed(config.base_seed, trial_index),
                             noiseless=config.noiseless)
    eig = eigendecompose(sample_covariance(X))
    plain = estimate_doa(partition_subspaces(eig, P).signal_projector, geom, grid, P)
    outcome = TrialOutcome(trial_index, snr, eig.eigenvalues,
                           TrialRecord(truth, plain.angles_deg, plain.degraded))
    if not config.runs_refined:
        return outcome

    try:
        B = similarity_matrix(eig.eigenvalues)
        Omega = transform_matrix(B, eig.eigenvectors)
        result = search_mu(config.mu_start, config.mu_stop, config.mu_step, B, Omega, geom, grid, P)
    except (DegenerateRefinement, RefinementFailed) as exc:
        outcome.fallback_reason = str(exc)
        outcome.refined = outcome.music
        return outcome
    outcome.refinement = result
    outcome.refined = TrialRecord(truth, result.refined_doas_deg, result.best_degraded)
    return outcome


def _trial_worker(config, snr_db, trial_index):
    return run_trial(config, trial_index, snr_db)


def run_trials(config: ExperimentConfig, snr_db: float) -> list:
    """All trials at one SNR, returned in trial-index order."""
    job = partial(_trial_worker, config, snr_db)
    indices = range(config.trial_count)
    if config.workers <= 1:
        return [job(i) for i in indices]
    with ProcessPoolExecutor(max_workers=config.workers) as pool:
        chunk = max(1, config.trial_count // (4 * config.workers))
        return list(pool.map(job, indices, chunksize=chunk))


def mu_sweep_records(config: ExperimentConfig, outcomes: Sequence[TrialOutcome]) -> list:
    """Per-trial records for every modification factor on the grid.

    Trials where a mu was skipped contribute their plain MUSIC estimate,
    marked as a fallback.
    """
    out = []
    for mu in mu_grid(config.mu_start, config.mu_stop, config.mu_step):
        mu = float(mu)
        for o in outcomes:
            out.append(MethodRecord(mu, o.trial_index, "music", o.music))
            res = o.refinement
            if res is not None and mu in res.doas_per_mu:
                rec = TrialRecord(o.music.truth_deg, res.doas_per_mu[mu], res.degraded_per_mu[mu])
                out.append(MethodRecord(mu, o.trial_index, "refined", rec, False, dict(res.j_trace)[mu]))
            else:
                out.append(MethodRecord(mu, o.trial_index, "refined", o.music, True))
    return out


def snr_sweep_records(config: ExperimentConfig, outcomes: Sequence[TrialOutcome]) -> list:
    out = []
    for o in outcomes:
        out.append(MethodRecord(o.snr_db, o.trial_index, "music", o.music))
        if o.refined is not None:
            cost = math.nan if o.refinement is None else o.refinement.best_cost
            out.append(MethodRecord(o.snr_db, o.trial_index, "refined", o.refined, o.fell_back, cost))
    return out


def aggregate(records: Sequence[MethodRecord], metric_config: MetricConfig,
              pair=(0, 1)) -> list:
    """Reduce per-trial records to one :class:`SweepRow` per independent value.

    Rows come out in first-appearance order of the independent variable and
    trials are reduced in trial-index order.
    """
    groups = {}
    for r in records:
        groups.setdefault(r.independent_var, {"music": [], "refined": []})[r.method].append(r)
    rows = []
    for x, g in groups.items():
        music = [r.record for r in sorted(g["music"], key=lambda r: r.trial_index)]
        ref_rows = sorted(g["refined"], key=lambda r: r.trial_index)
        refined = [r.record for r in ref_rows]
        costs = [r.recon_error for r in ref_rows if not r.fallback and not math.isnan(r.recon_error)]
        nan = math.nan
        rows.append(SweepRow(
            independent_var=float(x),
            music_rmse=rmse(music) if music else nan,
            refined_rmse=rmse(refined) if refined else nan,
            mean_recon_error=float(np.mean(costs)) if costs else nan,
            hard_success_music=success_rate_hard(music, metric_config) if music else nan,
            hard_success_refined=success_rate_hard(refined, metric_config) if refined else nan,
            soft_success_music=success_rate_soft(music, metric_config) if music else nan,
            soft_success_refined=success_rate_soft(refined, metric_config) if refined else nan,
            resolution_prob_refined=(resolution_probability(refined, pair)
                                     if refined and len(refined[0].truth_deg) > max(pair) else nan),
            degraded_count=sum(r.degraded for r in refined),
            skipped_mu_count=sum(r.fallback for r in ref_rows),
        ))
    return rows


def mu_sweep(config: ExperimentConfig, outcomes=None) -> list:
    """Per-mu mean RMSE and reconstruction error at a single SNR."""
    if not config.runs_refined:
        raise ConfigError("mu sweep needs the refined method")
    if len(config.snr_db) != 1:
        raise ConfigError("mu sweep needs exactly one SNR value")
    if outcomes is None:
        outcomes = run_trials(config, config.snr_db[0])
    return aggregate(mu_sweep_records(config, outcomes), config.metric_config)


def snr_sweep(config: ExperimentConfig, outcomes=None) -> list:
    """RMSE of plain and refined MUSIC (refined at its best mu) per SNR."""
    if outcomes is None:
        outcomes = []
        for snr in config.snr_db:
            log.info("snr %g dB: %d trials", snr, config.trial_count)
            outcomes.extend(run_trials(config, snr))
    return aggregate(snr_sweep_records(config, outcomes), config.metric_config)


def _fmt(x, spec=".12g") -> str:
    if isinstance(x, (bool, np.bool_, int, np.integer)):
        return str(int(x))
    return format(float(x), spec)


def _exact(x) -> str:
    return _fmt(x, ".17g")


def emit_csv(rows: Sequence[SweepRow], path) -> None:
    """Write sweep rows with the fixed column order and 12 significant digits."""
    if not rows:
        raise ValueError("no rows to write")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for row in rows:
            w.writerow([_fmt(v) for v in row.values()])


def read_csv(path) -> list:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
            raise ValueError(f"unexpected columns in {path}: {reader.fieldnames}")
        return [SweepRow(**{c: (int(r[c]) if c.endswith("_count") else float(r[c])) for c in CSV_COLUMNS})
                for r in reader]


def record_columns(P: int) -> list:
    return (["independent_var", "trial_index", "method", "degraded", "fallback", "recon_error"]
            + [f"truth_{k + 1}" for k in range(P)] + [f"estimate_{k + 1}" for k in range(P)])


def emit_records(records: Sequence[MethodRecord], path) -> None:
    """Write per-trial records; the input format of the ``metrics`` subcommand.

    Floats are written with 17 significant digits so aggregates recomputed
    from the file match the original run exactly.
    """
    if not records:
        raise ValueError("no records to write")
    P = records[0].record.truth_deg.size
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(record_columns(P))
        for r in records:
            w.writerow([_exact(r.independent_var), r.trial_index, r.method, _fmt(r.record.degraded),
                        _fmt(r.fallback), _exact(r.recon_error)]
                       + [_exact(v) for v in r.record.truth_deg] + [_exact(v) for v in r.record.estimate_deg])


def read_records(path) -> list:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        names = reader.fieldnames or []
        P = sum(1 for n in names if n.startswith("truth_"))
        if P == 0 or list(names) != record_columns(P):
            raise ValueError(f"unexpected columns in {path}: {names}")
        out = []
        for r in reader:
            truth = [float(r[f"truth_{k + 1}"]) for k in range(P)]
            est = [float(r[f"estimate_{k + 1}"]) for k in range(P)]
            out.append(MethodRecord(float(r["independent_var"]), int(r["trial_index"]), r["method"],
                                    TrialRecord(truth, est, bool(int(r["degraded"]))),
                                    bool(int(r["fallback"])), float(r["recon_error"])))
        return out


def emit_plot(rows: Sequence[SweepRow], path, independent_label: str = "independent variable") -> None:
    """Static SVG (or any matplotlib-supported format) of the sweep curves."""
    if not rows:
        raise ValueError("no rows to plot")
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    x = [r.independent_var for r in rows]
    fig, ax = plt.subplots(figsize=(6, 4))
    if independent_label == "mu":
        ax.plot(x, [r.refined_rmse for r in rows], "o-", ms=3, label="RMSE")
        ax.set_ylabel("RMSE (deg)")
        ax2 = ax.twinx()
        ax2.plot(x, [r.mean_recon_error for r in rows], "s--", ms=3, color="tab:red",
                 label="reconstruction error")
        ax2.set_ylabel("reconstruction error")
        fig.legend(loc="upper right")
    else:
        ax.plot(x, [r.music_rmse for r in rows], "o-", ms=3, label="MUSIC")
        ax.plot(x, [r.refined_rmse for r in rows], "s-", ms=3, label="refined")
        ax.set_ylabel("RMSE (deg)")
        ax.legend()
    ax.set_xlabel(independent_label)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def trial_dump(outcome: TrialOutcome) -> dict:
    """JSON-serializable view of a trial with full traces."""
    def num(x):
        return None if x is None or (isinstance(x, float) and math.isnan(x)) else x

    res = outcome.refinement
    return {
        "trial_index": outcome.trial_index,
        "snr_db": outcome.snr_db,
        "truth_deg": outcome.music.truth_deg.tolist(),
        "eigenvalues": outcome.eigenvalues.tolist(),
        "music_doas_deg": outcome.music.estimate_deg.tolist(),
        "music_degraded": outcome.music.degraded,
        "refined_doas_deg": None if outcome.refined is None else outcome.refined.estimate_deg.tolist(),
        "fallback_reason": outcome.fallback_reason,
        "best_mu": None if res is None else res.best_mu,
        "skipped_mus": [] if res is None else res.skipped_mus,
        "trace": [] if res is None else [
            {"mu": mu, "cost": num(c),
             "doas_deg": res.doas_per_mu[mu].tolist() if mu in res.doas_per_mu else None,
             "degraded": res.degraded_per_mu.get(mu)}
            for mu, c in res.j_trace
        ],
    }


def write_trial_json(outcome: TrialOutcome, path) -> None:
    with open(path, "w") as fh:
        json.dump(trial_dump(outcome), fh, indent=2)
        fh.write("\n")
