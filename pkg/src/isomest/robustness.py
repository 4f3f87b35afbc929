"""Influence function, breakdown bounds and finite-sample contamination probes.

The influence function here is the squared-bias version,
``lim (T(contaminated) - T(clean))**2 / eps``: bias of an isotonic estimator
under point-mass contamination at ``t0`` grows like ``eps**(1/2)``, so the
ordinary first-order influence function would be infinite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .asymptotics import ErrorModel, score_moments
from .errors import DomainError, NonIdentifiable
from .psi import ScoreFamily, psi
from .scale import ScaleMethod
from .solver import DesignSample, fit, predict


def influence(f: ScoreFamily, t_star: float, x_star: float, t0: float, mu_t0: float,
              mu_prime_t0: float, h_t0: float, sigma0: float, model: ErrorModel) -> float:
    """Squared-bias influence of a point mass at ``(t_star, x_star)`` on ``T(t0)``.

    Zero unless ``t_star == t0``; otherwise
    ``2 mu'(t0) sigma0 |psi((x_star - mu_t0)/sigma0)| / (h(t0) E psi'(u/sigma0))``.
    """
    if not h_t0 > 0 or not mu_prime_t0 > 0:
        raise DomainError("need mu'(t0) > 0 and h(t0) > 0")
    if not sigma0 > 0:
        raise DomainError("sigma0 must be positive")
    _, e_dpsi = score_moments(f, model, sigma0)
    if not e_dpsi > 1e-12:
        raise NonIdentifiable(f"E psi' = {e_dpsi:g}")
    if t_star != t0:
        return 0.0
    num = 2.0 * mu_prime_t0 * sigma0 * abs(psi(f, (x_star - mu_t0) / sigma0))
    return num / (h_t0 * e_dpsi)


def breakdown_lower_bound(H_t0: float, scale_breakdown: float | None = None) -> float:
    """Lower bound ``min(H/(1+H), (1-H)/(2-H))`` on the breakdown point at ``t0``.

    ``H_t0`` is the design distribution function at ``t0``.  With an
    estimated scale the bound is further capped by the scale's own breakdown
    point (0.5 for the default ``diffm`` scale); that refinement is stated
    without proof in the literature and should be read as conjectural.
    """
    if not 0 < H_t0 < 1:
        raise DomainError("H(t0) must lie strictly between 0 and 1")
    bound = min(H_t0 / (1.0 + H_t0), (1.0 - H_t0) / (2.0 - H_t0))
    if scale_breakdown is not None:
        if not 0 <= scale_breakdown <= 1:
            raise DomainError("scale breakdown point must lie in [0, 1]")
        bound = min(bound, scale_breakdown)
    return bound


@dataclass(frozen=True)
class ContaminationSpec:
    """Outliers placed at ``(t_star, x_star)``.

    Give either ``outlier_count`` or a fraction ``epsilon`` of the sample.
    """

    t_star: float
    x_star: float
    epsilon: float | None = None
    outlier_count: int | None = None

    def __post_init__(self):
        if (self.epsilon is None) == (self.outlier_count is None):
            raise ValueError("give exactly one of epsilon and outlier_count")
        if self.epsilon is not None and not 0 <= self.epsilon < 1:
            raise ValueError("epsilon must lie in [0, 1)")
        if self.outlier_count is not None and self.outlier_count < 0:
            raise ValueError("outlier_count must be nonnegative")

    def count(self, n: int) -> int:
        if self.outlier_count is not None:
            return self.outlier_count
        return int(round(self.epsilon * n))


@dataclass(frozen=True)
class ProbeResult:
    clean: float
    contaminated: float
    deviation: float
    replaced: tuple[int, ...]

    def to_dict(self) -> dict:
        return {
            "clean": self.clean,
            "contaminated": self.contaminated,
            "deviation": self.deviation,
            "replaced": list(self.replaced),
        }


def contaminate(sample: DesignSample, spec: ContaminationSpec) -> tuple[DesignSample, np.ndarray]:
    """Replace the responses of the points nearest ``t_star`` by ``x_star``.

    Distance ties are broken by stored order.  Returns the new sample and the
    replaced (stored) indices.
    """
    count = spec.count(len(sample))
    if count >= len(sample):
        raise ValueError("outlier count must be smaller than the sample size")
    order = np.argsort(np.abs(sample.t - spec.t_star), kind="stable")
    idx = np.sort(order[:count])
    x = sample.x.copy()
    x[idx] = spec.x_star
    return sample.with_x(x), idx


def contamination_probe(sample: DesignSample, f: ScoreFamily, method: ScaleMethod,
                        spec: ContaminationSpec, t0: float) -> ProbeResult:
    """Fit before and after contamination and compare the estimates at ``t0``."""
    clean = predict(fit(sample, f, method), sample, t0)
    dirty_sample, idx = contaminate(sample, spec)
    if idx.size == 0:
        return ProbeResult(clean, clean, 0.0, ())
    dirty = predict(fit(dirty_sample, f, method), dirty_sample, t0)
    deviation = abs(dirty - clean)
    if math.isnan(deviation):
        raise ValueError("fit produced NaN")
    return ProbeResult(clean, dirty, deviation, tuple(int(i) for i in idx))
