"""Finite-sample Monte Carlo study of isotonic estimators at an interior point.

Design ``t_i = i/(n+1)``, trend ``mu(t) = 10 + 5 t**2`` and target
``mu(1/2) = 11.25``.  Each replicate draws one error vector from its own
generator (keyed by seed, stream and replicate index) and every estimator is
fitted to that same vector, so estimator comparisons are paired.  Results do
not depend on the number of worker processes.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .asymptotics import ErrorModel, avar
from .psi import ScoreFamily
from .scale import ScaleMethod
from .solver import DesignSample, fit, predict

TRENDS = {
    "quadratic": (lambda t: 10.0 + 5.0 * t * t, lambda t: 10.0 * t),
}


@dataclass(frozen=True)
class Estimator:
    name: str
    family: ScoreFamily
    scale: ScaleMethod


def default_estimators() -> tuple[Estimator, ...]:
    """L2, exact L1 and Huber(0.98) with the differences M-scale."""
    return (
        Estimator("L2", ScoreFamily.l2(), ScaleMethod.fixed(1.0)),
        Estimator("L1", ScoreFamily.l1(), ScaleMethod.fixed(1.0)),
        Estimator("M", ScoreFamily.huber(0.98), ScaleMethod.diffm()),
    )


@dataclass(frozen=True)
class ExperimentConfig:
    n: int
    error: ErrorModel
    replications: int = 500
    t0: float = 0.5
    trend: str = "quadratic"
    estimators: tuple[Estimator, ...] = field(default_factory=default_estimators)
    seed: int = 0
    stream: int = 0

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("n must be at least 2")
        if self.replications < 1:
            raise ValueError("replications must be at least 1")
        if not 0 < self.t0 < 1:
            raise ValueError("t0 must lie strictly inside (0, 1)")
        if self.trend not in TRENDS:
            raise ValueError(f"unknown trend {self.trend!r}")

    @property
    def design(self) -> np.ndarray:
        return np.arange(1, self.n + 1) / (self.n + 1.0)

    @property
    def target(self) -> float:
        return float(TRENDS[self.trend][0](self.t0))


@dataclass(frozen=True)
class MseRow:
    estimator: str
    error: str
    n: int
    scaled_mse: float
    mc_stderr: float
    avar: float | None = None


@dataclass
class MseTable:
    rows: list[MseRow]
    estimates: dict = field(default_factory=dict, repr=False)

    def get(self, estimator: str, error: str, n: int) -> MseRow:
        for row in self.rows:
            if (row.estimator, row.error, row.n) == (estimator, error, n):
                return row
        raise KeyError((estimator, error, n))

    def to_dict(self) -> dict:
        return {"rows": [row.__dict__.copy() for row in self.rows]}

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["estimator", "error", "n", "scaled_mse", "mc_stderr", "avar"])
        for r in self.rows:
            writer.writerow([r.estimator, r.error, r.n, repr(r.scaled_mse), repr(r.mc_stderr),
                             "" if r.avar is None else repr(r.avar)])
        return buf.getvalue()


def _replicate_rng(seed, stream, rep):
    ss = np.random.SeedSequence(seed, spawn_key=(stream, rep))
    return np.random.Generator(np.random.PCG64(ss))


def _run_chunk(config: ExperimentConfig, start: int, stop: int) -> np.ndarray:
    t = config.design
    mu = TRENDS[config.trend][0](t)
    out = np.empty((stop - start, len(config.estimators)))
    for r in range(start, stop):
        u = config.error.draw(_replicate_rng(config.seed, config.stream, r), config.n)
        sample = DesignSample(t, mu + u)
        for e, est in enumerate(config.estimators):
            out[r - start, e] = predict(fit(sample, est.family, est.scale), sample, config.t0)
    return out


def simulate_estimates(config: ExperimentConfig, workers: int = 1, chunk: int = 50) -> np.ndarray:
    """Point estimates at ``t0``: one row per replicate, one column per estimator."""
    bounds = list(range(0, config.replications, chunk)) + [config.replications]
    spans = list(zip(bounds[:-1], bounds[1:]))
    if workers > 1 and len(spans) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_chunk, [config] * len(spans), *zip(*spans)))
    else:
        parts = [_run_chunk(config, a, b) for a, b in spans]
    return np.concatenate(parts)


def run_experiment(config: ExperimentConfig, workers: int = 1) -> MseTable:
    """``n**(2/3)`` times the Monte Carlo MSE of each estimator at ``t0``."""
    est = simulate_estimates(config, workers)
    sq = (est - config.target) ** 2 * config.n ** (2.0 / 3.0)
    reps = sq.shape[0]
    rows = []
    for e, estimator in enumerate(config.estimators):
        col = sq[:, e]
        stderr = float(np.std(col, ddof=1) / math.sqrt(reps)) if reps > 1 else math.nan
        rows.append(MseRow(estimator.name, str(config.error), config.n, float(np.mean(col)), stderr))
    estimates = {(e.name, str(config.error), config.n): est[:, i]
                 for i, e in enumerate(config.estimators)}
    return MseTable(rows, estimates)


TABLE1_ERRORS = (ErrorModel.normal(), ErrorModel.student_t(3))
TABLE1_SIZES = (100, 500)


def table1(seed: int, reps: int = 500, workers: int = 1,
           sizes=TABLE1_SIZES, errors=TABLE1_ERRORS) -> MseTable:
    """Full grid of estimators x error models x sample sizes, with avar column.

    The avar column uses ``sigma0 = 1``, ``mu'(1/2) = 5`` and ``H' = 1``.
    """
    rows: list[MseRow] = []
    estimates: dict = {}
    mu_prime = TRENDS["quadratic"][1](0.5)
    for ei, error in enumerate(errors):
        for si, n in enumerate(sizes):
            config = ExperimentConfig(n=n, error=error, replications=reps, seed=seed,
                                      stream=ei * len(sizes) + si)
            table = run_experiment(config, workers)
            for row, est in zip(table.rows, config.estimators):
                a = avar(est.family, error, mu_prime, 1.0, sigma0=1.0).avar
                rows.append(MseRow(row.estimator, row.error, row.n, row.scaled_mse,
                                   row.mc_stderr, a))
            estimates.update(table.estimates)
    return MseTable(rows, estimates)
