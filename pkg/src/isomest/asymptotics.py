"""Asymptotic variance constants and the slope-at-zero limit law.

For an isotonic M-estimator at an interior point ``t0``,
``n**(1/3) (mu_hat(t0) - mu(t0))`` is asymptotically ``kappa**(1/3)`` times
the slope at zero of the greatest convex minorant of ``W(v) + v**2``, where

    kappa = 1/2 * mu'(t0) * H'(t0) * sigma0**2 * E psi(u/sigma0)**2 / (E psi'(u/sigma0))**2

so the asymptotic variance is ``kappa**(2/3) * var_chernoff`` with
``var_chernoff`` close to 1.04.
"""

from __future__ import annotations

import functools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, stats

from ._backend import kernels
from .errors import ConfigError, DomainError, NonIdentifiable
from .psi import ScoreFamily, kinks, psi, psi_prime

VAR_CHERNOFF = 1.04


@dataclass(frozen=True)
class ErrorModel:
    """Symmetric error distribution with density ``pdf`` and sampler ``draw``.

    Build with :meth:`normal`, :meth:`student_t`, :meth:`tabulated` or
    :meth:`no_noise` (a point mass at 0 for debugging simulations; it has no
    density).
    """

    kind: str
    sigma: float = 1.0
    df: float = math.inf
    grid: tuple = field(default=(), repr=False)
    density: tuple = field(default=(), repr=False)

    def __post_init__(self):
        # array views of the table, kept off the dataclass fields
        object.__setattr__(self, "_x", np.asarray(self.grid, dtype=float))
        object.__setattr__(self, "_d", np.asarray(self.density, dtype=float))

    @classmethod
    def normal(cls, sigma: float = 1.0) -> "ErrorModel":
        if not sigma > 0:
            raise ValueError("sigma must be positive")
        return cls("normal", sigma=float(sigma))

    @classmethod
    def student_t(cls, df: float = 3.0) -> "ErrorModel":
        if not df > 0:
            raise ValueError("df must be positive")
        return cls("t", df=float(df))

    @classmethod
    def tabulated(cls, grid, density) -> "ErrorModel":
        """Density given on a grid; a grid over ``[0, R]`` is mirrored.

        Values are normalized to integrate to one (trapezoid rule).
        """
        x = np.asarray(grid, dtype=float)
        d = np.asarray(density, dtype=float)
        if x.shape != d.shape or x.size < 2 or np.any(np.diff(x) <= 0) or np.any(d < 0):
            raise ValueError("need an increasing grid and a nonnegative density")
        if x[0] >= 0:
            if x[0] != 0:
                raise ValueError("a half grid must start at 0")
            x = np.concatenate((-x[:0:-1], x))
            d = np.concatenate((d[:0:-1], d))
        if not np.allclose(d, d[::-1]) or not np.allclose(x, -x[::-1]):
            raise ValueError("tabulated density must be symmetric about 0")
        d = d / integrate.trapezoid(d, x)
        if not np.interp(0.0, x, d) > 0:
            raise ValueError("density must be positive at 0")
        return cls("tabulated", grid=tuple(x), density=tuple(d))

    @classmethod
    def no_noise(cls) -> "ErrorModel":
        return cls("none")

    def __str__(self) -> str:
        if self.kind == "normal":
            return "normal" if self.sigma == 1.0 else f"normal:sigma={self.sigma!r}"
        if self.kind == "t":
            return f"t:df={self.df!r}"
        return self.kind

    def pdf(self, u):
        if self.kind == "normal":
            return stats.norm.pdf(u, scale=self.sigma)
        if self.kind == "t":
            return stats.t.pdf(u, self.df)
        if self.kind == "tabulated":
            return np.interp(u, self._x, self._d, left=0.0, right=0.0)
        raise NonIdentifiable("the no-noise model has no density")

    @property
    def support(self) -> float:
        """Half-width beyond which the density is zero (``inf`` if none)."""
        return self.grid[-1] if self.kind == "tabulated" else math.inf

    def draw(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.kind == "normal":
            return self.sigma * rng.standard_normal(size)
        if self.kind == "t":
            return rng.standard_t(self.df, size)
        if self.kind == "tabulated":
            x = self._x
            cdf = integrate.cumulative_trapezoid(self._d, x, initial=0.0)
            cdf /= cdf[-1]
            return np.interp(rng.random(size), cdf, x)
        return np.zeros(size)


def parse_error_model(text: str) -> ErrorModel:
    """``normal``, ``normal:sigma=2``, ``t3``, ``t:df=3`` or ``none``."""
    text = text.strip().lower()
    name, _, rest = text.partition(":")
    params = {}
    if rest:
        for item in rest.split(","):
            key, sep, value = item.partition("=")
            if not sep:
                raise ValueError(f"bad parameter {item!r}")
            params[key.strip()] = float(value)
    if name == "normal":
        return ErrorModel.normal(params.get("sigma", 1.0))
    if name in ("t", "student"):
        return ErrorModel.student_t(params.get("df", 3.0))
    if name.startswith("t") and name[1:].replace(".", "", 1).isdigit():
        return ErrorModel.student_t(float(name[1:]))
    if name == "none":
        return ErrorModel.no_noise()
    raise ValueError(f"unknown error model {text!r}")


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(12)


def _tabulated_expectation(func, model: ErrorModel, breaks) -> float:
    """Gauss-Legendre on every cell between grid points and kinks.

    The density is linear on each cell and ``func`` smooth there, so a fixed
    12-point rule is accurate to rounding for the scores used here.
    """
    pts = np.unique(np.concatenate((model._x[model._x >= 0], [b for b in breaks if b > 0])))
    pts = pts[pts <= model.support]
    a, b = pts[:-1, None], pts[1:, None]
    u = 0.5 * (a + b) + 0.5 * (b - a) * _GL_NODES
    vals = func(u) * model.pdf(u)
    return 2.0 * float(np.sum(0.5 * (b - a)[:, 0] * (vals @ _GL_WEIGHTS)))


def _half_line_expectation(func, model: ErrorModel, breaks) -> float:
    """``E func(u)`` for an even integrand, integrating over ``u >= 0``."""
    if model.kind == "tabulated":
        return _tabulated_expectation(func, model, breaks)
    top = model.support
    edges = sorted({b for b in breaks if 0 < b < top})
    pts = [0.0] + edges + [top]
    total = 0.0
    for a, b in zip(pts[:-1], pts[1:]):
        val, _ = integrate.quad(
            lambda u: func(u) * model.pdf(u), a, b, epsabs=0.0, epsrel=1e-11, limit=400
        )
        total += val
    return 2.0 * total


@functools.lru_cache(maxsize=256)
def score_moments(f: ScoreFamily, model: ErrorModel, sigma0: float = 1.0) -> tuple[float, float]:
    """``(E psi(u/sigma0)**2, E psi'(u/sigma0))`` under the error model.

    For the exact L1 family the derivative of ``sign`` is taken in the
    distributional sense, ``E psi' = 2 sigma0 g(0)``.
    """
    if not sigma0 > 0:
        raise ValueError("sigma0 must be positive")
    if f.kind == "l1":
        return 1.0, 2.0 * sigma0 * float(model.pdf(0.0))
    breaks = [sigma0 * b for b in kinks(f)]
    e_psi2 = _half_line_expectation(lambda u: psi(f, u / sigma0) ** 2, model, breaks)
    e_dpsi = _half_line_expectation(lambda u: psi_prime(f, u / sigma0), model, breaks)
    return e_psi2, e_dpsi


def efficiency_ratio(f: ScoreFamily, model: ErrorModel, sigma0: float = 1.0) -> float:
    """``E psi(u/sigma0)**2 / (E psi'(u/sigma0))**2``."""
    e_psi2, e_dpsi = score_moments(f, model, sigma0)
    if not e_dpsi > 1e-12:
        raise NonIdentifiable(f"E psi' = {e_dpsi:g}: psi is flat where the errors live")
    return e_psi2 / e_dpsi**2


@dataclass(frozen=True)
class AvarReport:
    ratio: float
    kappa: float
    avar: float
    var_chernoff: float

    def to_dict(self) -> dict:
        return {
            "ratio": self.ratio,
            "kappa": self.kappa,
            "avar": self.avar,
            "var_chernoff": self.var_chernoff,
        }


def avar(f: ScoreFamily, model: ErrorModel, mu_prime_t0: float, h_t0: float,
         sigma0: float = 1.0, var_chernoff: float = VAR_CHERNOFF) -> AvarReport:
    """Asymptotic variance of ``n**(1/3) (mu_hat(t0) - mu(t0))``."""
    if not mu_prime_t0 > 0:
        raise DomainError("the trend must be strictly increasing at t0 (mu'(t0) > 0)")
    if not h_t0 > 0:
        raise DomainError("the design density must be positive at t0")
    if not var_chernoff > 0:
        raise DomainError("var_chernoff must be positive")
    ratio = efficiency_ratio(f, model, sigma0)
    kappa = 0.5 * mu_prime_t0 * h_t0 * sigma0**2 * ratio
    return AvarReport(ratio, kappa, kappa ** (2.0 / 3.0) * var_chernoff, var_chernoff)


# --- greatest convex minorant ---------------------------------------------------


class ConvexMinorant:
    """Piecewise-linear greatest convex minorant given by its vertices."""

    def __init__(self, v, z):
        self.v = np.asarray(v, dtype=float)
        self.z = np.asarray(z, dtype=float)

    def __len__(self):
        return self.v.size

    def __call__(self, v):
        return np.interp(v, self.v, self.z)

    @property
    def slopes(self) -> np.ndarray:
        return np.diff(self.z) / np.diff(self.v)

    def slope_at(self, v0: float) -> float:
        """Slope of the segment containing ``v0``; the left one at a vertex.

        Outside the vertex range the first or last slope is used.
        """
        j = int(np.searchsorted(self.v, v0, side="left"))
        j = min(max(j, 1), self.v.size - 1)
        return float((self.z[j] - self.z[j - 1]) / (self.v[j] - self.v[j - 1]))


def gcm(v, z=None) -> ConvexMinorant:
    """Greatest convex minorant of points ``(v_i, z_i)``, ``v`` strictly increasing.

    Accepts either two arrays or one sequence of ``(v, z)`` pairs.
    """
    if z is None:
        pts = np.asarray(v, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ValueError("expected a sequence of (v, z) pairs")
        v, z = pts[:, 0], pts[:, 1]
    v = np.ascontiguousarray(v, dtype=float)
    z = np.ascontiguousarray(z, dtype=float)
    if v.size < 2 or v.shape != z.shape:
        raise ValueError("need at least two points")
    if np.any(np.diff(v) <= 0):
        raise ValueError("v must be strictly increasing")
    idx = kernels.lower_hull(v, z)
    return ConvexMinorant(v[idx], z[idx])


# --- Chernoff-type limit law -------------------------------------------------------


@dataclass(frozen=True)
class ChernoffConfig:
    half_width: float = 3.0
    step: float = 0.005
    reps: int = 50_000
    seed: int = 0
    zero_noise: bool = False

    def __post_init__(self):
        if not self.half_width >= 2:
            raise ConfigError("half_width must be at least 2")
        if not 0 < self.step <= 0.01:
            raise ConfigError("step must lie in (0, 0.01]")
        if self.reps < 1:
            raise ConfigError("reps must be at least 1")
        n = self.half_width / self.step
        if abs(n - round(n)) > 1e-9 * n:
            raise ConfigError("half_width must be a multiple of step")

    @property
    def n_side(self) -> int:
        return int(round(self.half_width / self.step))


@dataclass(frozen=True, eq=False)
class ChernoffSample:
    slopes: np.ndarray
    config: ChernoffConfig

    @property
    def mean(self) -> float:
        return float(np.mean(self.slopes))

    @property
    def var(self) -> float:
        return float(np.var(self.slopes, ddof=1)) if self.slopes.size > 1 else 0.0

    @property
    def stderr(self) -> float:
        """Standard error of the mean."""
        return math.sqrt(self.var / self.slopes.size)

    @property
    def var_stderr(self) -> float:
        """Large-sample standard error of :attr:`var`."""
        n = self.slopes.size
        if n < 2:
            return math.inf
        c = self.slopes - self.slopes.mean()
        m4 = float(np.mean(c**4))
        return math.sqrt(max(m4 - self.var**2, 0.0) / n)

    def summary(self) -> dict:
        return {
            "reps": int(self.slopes.size),
            "half_width": self.config.half_width,
            "step": self.config.step,
            "seed": self.config.seed,
            "mean": self.mean,
            "var": self.var,
            "stderr": self.stderr,
            "var_stderr": self.var_stderr,
        }


def replicate_rng(seed: int, index: int) -> np.random.Generator:
    """Private generator of replicate ``index`` under master ``seed``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(index,))))


def _chernoff_chunk(config: ChernoffConfig, start: int, stop: int) -> np.ndarray:
    n = config.n_side
    noise = np.zeros((stop - start, 2 * n))
    if not config.zero_noise:
        for r in range(start, stop):
            draws = replicate_rng(config.seed, r).standard_normal(2 * n)
            # draws alternate left/right moving outward, so a wider window
            # extends the same path instead of resampling it
            noise[r - start, :n] = draws[0::2]
            noise[r - start, n:] = draws[1::2]
    return kernels.chernoff_batch(noise, n, config.step)


def simulate_chernoff(config: ChernoffConfig, workers: int = 1,
                      chunk: int = 1000) -> ChernoffSample:
    """Draw ``config.reps`` values of the slope at zero of the GCM of ``W(v) + v**2``.

    ``W`` is discretized on ``{-L, ..., 0, ..., L}`` with spacing ``step``.
    When 0 is itself a hull vertex the two adjacent slopes are averaged, which
    keeps the discrete law symmetric; a plain left-segment rule biases the
    mean slightly downward.
    Replicate ``r`` uses the generator :func:`replicate_rng` ``(seed, r)``, so
    the output does not depend on ``workers`` or ``chunk``.  Its draws feed
    the increments alternately left and right of 0, working outward: runs
    that differ only in ``half_width`` share the walk on the common window.
    """
    bounds = list(range(0, config.reps, chunk)) + [config.reps]
    spans = list(zip(bounds[:-1], bounds[1:]))
    if workers > 1 and len(spans) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_chernoff_chunk, [config] * len(spans), *zip(*spans)))
    else:
        parts = [_chernoff_chunk(config, a, b) for a, b in spans]
    return ChernoffSample(np.concatenate(parts), config)
