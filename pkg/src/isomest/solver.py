"""Isotonic M-estimation.

The production path is a pool-adjacent-violators algorithm whose block level
is the M-estimate of location of the pooled responses.  A literal max-min
evaluation over all windows of design points, :func:`fit_minmax_oracle`, is
kept for verification on small samples.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .errors import EmptyBlock
from .psi import ScoreFamily, psi, rho
from .scale import ScaleEstimate, ScaleMethod, estimate_scale


class DesignSample:
    """Observations ``(t_j, x_j)`` sorted by ``t`` (stable).

    ``index`` holds the position of each stored pair in the original input.
    """

    __slots__ = ("t", "x", "index")

    def __init__(self, t, x):
        t = np.asarray(t, dtype=float).ravel()
        x = np.asarray(x, dtype=float).ravel()
        if t.shape != x.shape:
            raise ValueError("t and x must have the same length")
        if t.size == 0:
            raise ValueError("a sample needs at least one observation")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(x))):
            raise ValueError("t and x must be finite")
        order = np.argsort(t, kind="stable")
        self.t = t[order]
        self.x = x[order]
        self.index = order
        for arr in (self.t, self.x, self.index):
            arr.setflags(write=False)

    def __len__(self) -> int:
        return self.t.size

    def __repr__(self) -> str:
        return f"DesignSample(n={len(self)})"

    def with_x(self, x) -> "DesignSample":
        """Same design, new responses (given in stored order)."""
        return DesignSample(self.t, x)

    @property
    def group_starts(self) -> np.ndarray:
        """First stored index of each run of equal design points."""
        if len(self) == 1:
            return np.zeros(1, dtype=np.int64)
        new = np.flatnonzero(self.t[1:] != self.t[:-1]) + 1
        return np.concatenate(([0], new)).astype(np.int64)


@dataclass(frozen=True)
class Block:
    """Stored indices ``start <= j < stop`` share the fitted ``level``."""

    start: int
    stop: int
    level: float


@dataclass(frozen=True, eq=False)
class IsotonicFit:
    blocks: tuple[Block, ...]
    fitted: np.ndarray
    residuals: np.ndarray
    scale: ScaleEstimate
    family: ScoreFamily
    objective: float

    @property
    def levels(self) -> np.ndarray:
        return np.array([b.level for b in self.blocks])

    def to_dict(self) -> dict:
        """JSON-ready summary; ``from``/``to`` are 1-based inclusive positions."""
        return {
            "family": str(self.family),
            "scale": {"method": str(self.scale.method), "value": self.scale.value},
            "blocks": [
                {"from": b.start + 1, "to": b.stop, "level": b.level} for b in self.blocks
            ],
            "objective": self.objective,
        }

    def to_json(self) -> str:
        return dump_fit(self.to_dict())


def dump_fit(record: dict) -> str:
    return json.dumps(record, indent=2) + "\n"


def load_fit(text: str) -> dict:
    record = json.loads(text)
    for key in ("family", "scale", "blocks", "objective"):
        if key not in record:
            raise ValueError(f"fit record lacks {key!r}")
    return record


def fit_csv(fit: IsotonicFit, sample: DesignSample) -> str:
    """CSV text with columns ``t, x, fitted, residual`` in design order."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["t", "x", "fitted", "residual"])
    for row in zip(sample.t, sample.x, fit.fitted, fit.residuals):
        writer.writerow([repr(float(v)) for v in row])
    return buf.getvalue()


def block_m_estimate(values, f: ScoreFamily, sigma: float = 1.0) -> float:
    """Location M-estimate: the zero of ``sum psi((values - mu) / sigma)``.

    When the zero set is an interval its midpoint is returned.  L2 gives the
    mean and the exact L1 family the median (mid-point of the two central
    order statistics for even counts).
    """
    values = np.asarray(values, dtype=float).ravel()
    if values.size == 0:
        raise EmptyBlock("cannot estimate location of an empty block")
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    return float(kernels.block_solve(*f.kernel_args(), values, float(sigma)))


def s_n(sample: DesignSample, u: float, v: float, mu: float, f: ScoreFamily,
        sigma: float = 1.0) -> float:
    """Partial score sum over the window ``u <= t_j <= v`` (0 if empty)."""
    mask = (sample.t >= u) & (sample.t <= v)
    if not mask.any():
        return 0.0
    return float(np.sum(psi(f, (sample.x[mask] - mu) / sigma)))


def _objective(f, residuals, sigma):
    return float(np.sum(rho(f, residuals / sigma)))


def _assemble(sample, fitted, starts, levels, f, scale) -> IsotonicFit:
    stops = list(starts[1:]) + [len(sample)]
    blocks = tuple(
        Block(int(a), int(b), float(level)) for a, b, level in zip(starts, stops, levels)
    )
    fitted = np.asarray(fitted, dtype=float)
    residuals = sample.x - fitted
    for arr in (fitted, residuals):
        arr.setflags(write=False)
    return IsotonicFit(
        blocks=blocks,
        fitted=fitted,
        residuals=residuals,
        scale=scale,
        family=f,
        objective=_objective(f, residuals, scale.value),
    )


def _fixed_scale(sigma):
    if not (sigma > 0 and math.isfinite(sigma)):
        raise ValueError("sigma must be positive and finite")
    return ScaleEstimate(float(sigma), ScaleMethod.fixed(sigma), 0)


def _pava(sample, f, sigma, scale):
    starts, levels = kernels.pava(*f.kernel_args(), sample.x, sample.group_starts, float(sigma))
    sizes = np.diff(np.append(starts, len(sample)))
    fitted = np.repeat(levels, sizes)
    return _assemble(sample, fitted, starts, levels, f, scale)


def fit_pava(sample: DesignSample, f: ScoreFamily, sigma: float = 1.0) -> IsotonicFit:
    """Isotonic M-fit with known scale ``sigma`` by pool adjacent violators.

    Observations with equal ``t`` are pooled from the start so they always
    receive a common fitted value.
    """
    return _pava(sample, f, sigma, _fixed_scale(sigma))


def minmax_values(sample: DesignSample, f: ScoreFamily, sigma: float = 1.0,
                  order: str = "maxmin") -> np.ndarray:
    """Fitted values from the window formula, evaluated literally.

    ``order="maxmin"`` computes ``max_{u<=t} min_{v>=t}`` of the window
    M-estimates, ``order="minmax"`` the reverse nesting.  Cost is
    O(G**3) over the G distinct design points plus O(G**2) block solves.
    """
    starts = sample.group_starts
    g = len(starts)
    bounds = list(starts) + [len(sample)]
    window = np.empty((g, g))
    for a in range(g):
        for b in range(a, g):
            window[a, b] = block_m_estimate(sample.x[bounds[a]:bounds[b + 1]], f, sigma)
    out = np.empty(g)
    for i in range(g):
        if order == "maxmin":
            out[i] = max(min(window[a, b] for b in range(i, g)) for a in range(i + 1))
        elif order == "minmax":
            out[i] = min(max(window[a, b] for a in range(i + 1)) for b in range(i, g))
        else:
            raise ValueError("order must be 'maxmin' or 'minmax'")
    sizes = np.diff(bounds)
    return np.repeat(out, sizes)


def fit_minmax_oracle(sample: DesignSample, f: ScoreFamily, sigma: float = 1.0,
                      order: str = "maxmin") -> IsotonicFit:
    """Verification fit via :func:`minmax_values`; meant for small samples."""
    fitted = minmax_values(sample, f, sigma, order)
    change = np.flatnonzero(fitted[1:] != fitted[:-1]) + 1
    starts = np.concatenate(([0], change)).astype(np.int64)
    return _assemble(sample, fitted, starts, fitted[starts], f, _fixed_scale(sigma))


def fit(sample: DesignSample, f: ScoreFamily, method: ScaleMethod) -> IsotonicFit:
    """Estimate the scale with ``method``, then fit by :func:`fit_pava`."""
    scale = estimate_scale(sample, method, f)
    return _pava(sample, f, scale.value, scale)


def predict(fit: IsotonicFit, sample: DesignSample, t):
    """Right-continuous step function through the fitted values.

    Returns the fitted value of the largest ``t_j <= t``; below ``t_1`` the
    first level is used.
    """
    scalar = np.ndim(t) == 0
    pos = np.searchsorted(sample.t, np.asarray(t, dtype=float), side="right") - 1
    out = fit.fitted[np.clip(pos, 0, len(sample) - 1)]
    return float(out) if scalar else out


def l1_fit_values(sample: DesignSample) -> np.ndarray:
    """Fitted values of the exact L1 (block median) isotonic fit."""
    return fit_pava(sample, ScoreFamily.l1()).fitted
