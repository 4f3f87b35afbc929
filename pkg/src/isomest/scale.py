"""Robust error-scale estimates used to standardize residuals before fitting.

Three methods are available:

* ``fixed:S`` -- a known scale ``S``.
* ``diffm`` -- the bisquare M-scale of successive differences of the
  responses (in design order) divided by ``sqrt(2)``.  Defaults ``c = 0.7094``
  and ``b = 3/4`` calibrate it to the standard deviation under normal errors.
* ``madl1`` -- median absolute residual of the exact L1 isotonic fit divided
  by ``PHI_INV_3_4``.  Its root-n consistency is conjectured, not proven.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSample, InsufficientData

DEFAULT_C = 0.7094
DEFAULT_B = 0.75
PHI_INV_3_4 = 0.6744897501960817

_REL_TOL = 1e-12
_MAX_ITER = 200


@dataclass(frozen=True)
class ScaleMethod:
    kind: str
    sigma0: float | None = None
    c: float = DEFAULT_C
    b: float = DEFAULT_B

    def __post_init__(self):
        if self.kind not in ("fixed", "diffm", "madl1"):
            raise ValueError(f"unknown scale method {self.kind!r}")
        if self.kind == "fixed":
            if self.sigma0 is None or not (self.sigma0 > 0) or not math.isfinite(self.sigma0):
                raise ValueError("fixed scale needs a positive finite sigma0")
        if not (self.c > 0):
            raise ValueError("c must be positive")
        if not (0 < self.b < 1):
            raise ValueError("b must lie in (0, 1)")

    @classmethod
    def fixed(cls, sigma0: float) -> "ScaleMethod":
        return cls("fixed", sigma0=float(sigma0))

    @classmethod
    def diffm(cls, c: float = DEFAULT_C, b: float = DEFAULT_B) -> "ScaleMethod":
        return cls("diffm", c=float(c), b=float(b))

    @classmethod
    def madl1(cls) -> "ScaleMethod":
        return cls("madl1")

    def __str__(self) -> str:
        if self.kind == "fixed":
            return f"fixed:{self.sigma0!r}"
        if self.kind == "diffm" and (self.c, self.b) != (DEFAULT_C, DEFAULT_B):
            return f"diffm:c={self.c!r},b={self.b!r}"
        return self.kind


def parse_scale(text: str, c: float | None = None, b: float | None = None) -> ScaleMethod:
    """Parse ``fixed:2.5``, ``diffm``, ``diffm:c=0.7,b=0.5`` or ``madl1``.

    ``c`` and ``b`` override the diffm constants when given.
    """
    text = text.strip().lower()
    if text.startswith("fixed:"):
        return ScaleMethod.fixed(float(text[6:]))
    if text == "madl1":
        return ScaleMethod.madl1()
    match = re.fullmatch(r"diffm(?::(.*))?", text)
    if not match:
        raise ValueError(f"cannot parse scale method {text!r}")
    params = {"c": DEFAULT_C, "b": DEFAULT_B}
    if match.group(1):
        for item in match.group(1).split(","):
            key, sep, value = item.partition("=")
            key = key.strip()
            if not sep or key not in params:
                raise ValueError(f"bad diffm parameter {item!r}")
            params[key] = float(value)
    if c is not None:
        params["c"] = c
    if b is not None:
        params["b"] = b
    return ScaleMethod.diffm(params["c"], params["b"])


@dataclass(frozen=True)
class ScaleEstimate:
    value: float
    method: ScaleMethod
    n_used: int


def bisquare_chi(u, c: float):
    """Bisquare rho for scale: ``1 - (1 - (u/c)**2)**3`` inside ``[-c, c]``, else 1."""
    scalar = np.ndim(u) == 0
    r = np.minimum(np.abs(np.asarray(u, dtype=float)) / c, 1.0)
    out = 1.0 - (1.0 - r * r) ** 3
    return float(out) if scalar else out


def m_scale(values, c: float = DEFAULT_C, b: float = DEFAULT_B) -> float:
    """Bisquare M-scale: the ``s > 0`` with ``mean(chi(values / s)) = b``.

    Raises :class:`DegenerateSample` when no positive root exists, i.e. when
    the fraction of nonzero values does not exceed ``b``.
    """
    u = np.abs(np.asarray(values, dtype=float).ravel())
    if u.size == 0:
        raise DegenerateSample("empty sample")
    top = float(u.max())
    if top == 0.0:
        raise DegenerateSample("all values are zero")
    nonzero = np.count_nonzero(u) / u.size
    if nonzero <= b:
        raise DegenerateSample(
            f"only {nonzero:.3f} of the values are nonzero; need more than b={b}"
        )

    def objective(s):
        return float(np.mean(bisquare_chi(u / s, c)))

    lo, hi = 1e-12 * top, 1e12 * top
    for _ in range(_MAX_ITER):
        if hi / lo - 1.0 <= _REL_TOL:
            break
        mid = math.sqrt(lo * hi)
        if objective(mid) > b:
            lo = mid
        else:
            hi = mid
    return math.sqrt(lo * hi)


def estimate_scale(sample, method: ScaleMethod, family=None) -> ScaleEstimate:
    """Estimate the error scale of ``sample`` (a :class:`~isomest.solver.DesignSample`).

    ``family`` is accepted for symmetry with :func:`isomest.solver.fit`; none
    of the methods depends on it.
    """
    n = len(sample)
    if method.kind == "fixed":
        return ScaleEstimate(method.sigma0, method, 0)
    if method.kind == "diffm":
        if n < 2:
            raise InsufficientData("diffm scale needs at least two observations")
        diffs = np.diff(sample.x)
        value = m_scale(diffs, method.c, method.b) / math.sqrt(2.0)
        return ScaleEstimate(value, method, n)
    if n < 1:
        raise InsufficientData("madl1 scale needs at least one observation")
    from .solver import l1_fit_values

    residuals = sample.x - l1_fit_values(sample)
    value = float(np.median(np.abs(residuals))) / PHI_INV_3_4
    if not value > 0:
        raise DegenerateSample("L1 isotonic fit interpolates the data; MAD scale is zero")
    return ScaleEstimate(value, method, n)
