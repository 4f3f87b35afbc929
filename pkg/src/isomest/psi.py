"""Score families: loss ``rho``, score ``psi = rho'`` and its derivative.

Supported families
------------------
``l2``
    ``rho(u) = u**2``, ``psi(u) = 2u``.
``huber:k=K``
    Huber's score ``sign(u) * min(|u|, K)`` with ``rho(u) = u**2/2`` inside
    the corner.  ``psi'`` is taken as 0 at ``|u| == K``.
``sl1:m=M``
    Smooth approximation of ``sign``: slope ``M`` on
    ``|u| < 1/M - 1/M**2``, saturated at +-1 for ``|u| >= 1/M``, joined on the
    remaining bands by the quintic Hermite blend ``q`` below, which makes
    ``psi`` twice continuously differentiable and monotone.
``shuber:k=K,m=M``
    Huber's score with the same blend rounding off the corner over a band of
    width ``K/M``; equal to ``K * psi_sl1(u / (M*K))``.
``l1``
    The exact L1 limit (``sl1`` with ``M = inf``): ``psi = sign``.  Solvers use
    block medians for it.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

# Kernel codes shared with the compiled and pure-Python backends.
L2, HUBER, SL1, SHUBER, L1 = 0, 1, 2, 3, 4

_KIND_CODES = {"l2": L2, "huber": HUBER, "sl1": SL1, "shuber": SHUBER, "l1": L1}

# Integral of the blend q over [0, 1].
_Q1 = 0.6


@dataclass(frozen=True)
class ScoreFamily:
    """A score family and its tuning constants.

    Use the constructors :meth:`l2`, :meth:`huber`, :meth:`smoothed_l1`,
    :meth:`smoothed_huber`, :meth:`l1` or :func:`parse_family` rather than
    building instances by hand.
    """

    kind: str
    k: float | None = None
    m: float | None = None

    def __post_init__(self):
        if self.kind not in _KIND_CODES:
            raise ValueError(f"unknown score family {self.kind!r}")
        if self.kind in ("huber", "shuber"):
            if self.k is None or not (self.k > 0) or not math.isfinite(self.k):
                raise ValueError(f"{self.kind}: k must be a positive finite number")
        if self.kind in ("sl1", "shuber"):
            if self.m is None or not (self.m > 1) or not math.isfinite(self.m):
                raise ValueError(f"{self.kind}: m must be a finite number > 1")

    @classmethod
    def l2(cls) -> "ScoreFamily":
        return cls("l2")

    @classmethod
    def huber(cls, k: float = 0.98) -> "ScoreFamily":
        return cls("huber", k=float(k))

    @classmethod
    def smoothed_l1(cls, m: float) -> "ScoreFamily":
        if math.isinf(m):
            return cls.l1()
        return cls("sl1", m=float(m))

    @classmethod
    def smoothed_huber(cls, k: float, m: float) -> "ScoreFamily":
        return cls("shuber", k=float(k), m=float(m))

    @classmethod
    def l1(cls) -> "ScoreFamily":
        return cls("l1")

    @property
    def code(self) -> int:
        return _KIND_CODES[self.kind]

    @property
    def bounded(self) -> bool:
        return self.kind != "l2"

    @property
    def psi_sup(self) -> float:
        """``sup |psi|``; infinite for L2."""
        if self.kind == "l2":
            return math.inf
        if self.kind in ("huber", "shuber"):
            return self.k
        return 1.0

    def kernel_args(self) -> tuple[int, float, float]:
        """``(code, k, m)`` as passed to the numerical kernels."""
        return (
            self.code,
            self.k if self.k is not None else 0.0,
            self.m if self.m is not None else 0.0,
        )

    def __str__(self) -> str:
        if self.kind in ("l2", "l1"):
            return self.kind
        if self.kind == "huber":
            return f"huber:k={self.k!r}"
        if self.kind == "sl1":
            return f"sl1:m={self.m!r}"
        return f"shuber:k={self.k!r},m={self.m!r}"


_NAME_RE = re.compile(r"^\s*([a-z0-9]+)\s*(?::(.*))?$")


def parse_family(text: str) -> ScoreFamily:
    """Parse names such as ``l2``, ``huber:k=0.98`` or ``shuber:k=0.98,m=1000``."""
    match = _NAME_RE.match(text.lower())
    if not match:
        raise ValueError(f"cannot parse score family {text!r}")
    kind, rest = match.group(1), match.group(2)
    params: dict[str, float] = {}
    if rest:
        for item in rest.split(","):
            key, sep, value = item.partition("=")
            if not sep:
                raise ValueError(f"bad parameter {item!r} in {text!r}")
            try:
                params[key.strip()] = float(value)
            except ValueError:
                raise ValueError(f"bad value for {key.strip()!r} in {text!r}") from None
    allowed = {"l2": set(), "l1": set(), "huber": {"k"}, "sl1": {"m"}, "shuber": {"k", "m"}}
    if kind not in allowed:
        raise ValueError(f"unknown score family {kind!r}")
    extra = set(params) - allowed[kind]
    if extra:
        raise ValueError(f"unexpected parameters {sorted(extra)} for {kind}")
    if kind == "l2":
        return ScoreFamily.l2()
    if kind == "l1":
        return ScoreFamily.l1()
    if kind == "huber":
        return ScoreFamily.huber(params.get("k", 0.98))
    if kind == "sl1":
        if "m" not in params:
            raise ValueError("sl1 requires m")
        return ScoreFamily.smoothed_l1(params["m"])
    if "k" not in params or "m" not in params:
        raise ValueError("shuber requires k and m")
    return ScoreFamily.smoothed_huber(params["k"], params["m"])


# --- smoothed sign ------------------------------------------------------------
#
# On the band [a, b] = [1/m - 1/m**2, 1/m], with x = (|u| - a) / (b - a):
#   psi(u)  = sign(u) * ((1 - 1/m) + q(x) / m)
#   psi'(u) = m * q'(x),  q'(x) = (1 - x)**2 * (15 x**2 + 2 x + 1) >= 0
#   q(x)    = x + 4 x**3 - 7 x**4 + 3 x**5


def _blend(x):
    return x + x**3 * (4.0 + x * (-7.0 + 3.0 * x))


def _blend_prime(x):
    return 1.0 + x**2 * (12.0 + x * (-28.0 + 15.0 * x))


def _blend_integral(x):
    return x**2 * (0.5 + x**2 * (1.0 + x * (-1.4 + 0.5 * x)))


def _sl1_psi(u, m):
    a, b = 1.0 / m - 1.0 / m**2, 1.0 / m
    au = np.abs(u)
    x = np.clip((au - a) / (b - a), 0.0, 1.0)
    band = (1.0 - 1.0 / m) + _blend(x) / m
    out = np.where(au <= a, m * au, np.where(au >= b, 1.0, band))
    return np.sign(u) * out


def _sl1_psi_prime(u, m):
    a, b = 1.0 / m - 1.0 / m**2, 1.0 / m
    au = np.abs(u)
    x = np.clip((au - a) / (b - a), 0.0, 1.0)
    return np.where(au <= a, m, np.where(au >= b, 0.0, m * _blend_prime(x)))


def _sl1_rho(u, m):
    a, b = 1.0 / m - 1.0 / m**2, 1.0 / m
    w = b - a
    au = np.abs(u)
    rho_a = 0.5 * m * a * a
    rho_b = rho_a + w * ((1.0 - 1.0 / m) + _Q1 / m)
    x = np.clip((au - a) / w, 0.0, 1.0)
    band = rho_a + w * ((1.0 - 1.0 / m) * x + _blend_integral(x) / m)
    return np.where(au <= a, 0.5 * m * au * au, np.where(au >= b, rho_b + (au - b), band))


def _out(values, scalar):
    return float(values) if scalar else values


def rho(f: ScoreFamily, u):
    """Loss ``rho(u)``; scalar in, float out, array in, array out."""
    scalar = np.ndim(u) == 0
    u = np.asarray(u, dtype=float)
    if f.kind == "l2":
        r = u * u
    elif f.kind == "huber":
        au = np.abs(u)
        r = np.where(au <= f.k, 0.5 * u * u, f.k * au - 0.5 * f.k**2)
    elif f.kind == "sl1":
        r = _sl1_rho(u, f.m)
    elif f.kind == "shuber":
        r = f.m * f.k**2 * _sl1_rho(u / (f.m * f.k), f.m)
    else:
        r = np.abs(u)
    return _out(r, scalar)


def psi(f: ScoreFamily, u):
    """Score ``psi(u) = rho'(u)``."""
    scalar = np.ndim(u) == 0
    u = np.asarray(u, dtype=float)
    if f.kind == "l2":
        r = 2.0 * u
    elif f.kind == "huber":
        r = np.clip(u, -f.k, f.k)
    elif f.kind == "sl1":
        r = _sl1_psi(u, f.m)
    elif f.kind == "shuber":
        r = f.k * _sl1_psi(u / (f.m * f.k), f.m)
    else:
        r = np.sign(u)
    return _out(r, scalar)


def psi_prime(f: ScoreFamily, u):
    """Derivative of the score.

    Huber uses 0 at the corners ``|u| == k``; the exact L1 limit returns 0 off
    the origin and ``inf`` at it.
    """
    scalar = np.ndim(u) == 0
    u = np.asarray(u, dtype=float)
    if f.kind == "l2":
        r = np.full_like(u, 2.0)
    elif f.kind == "huber":
        r = np.where(np.abs(u) < f.k, 1.0, 0.0)
    elif f.kind == "sl1":
        r = _sl1_psi_prime(u, f.m)
    elif f.kind == "shuber":
        r = _sl1_psi_prime(u / (f.m * f.k), f.m) / f.m
    else:
        r = np.where(u == 0.0, np.inf, 0.0)
    return _out(r, scalar)


def kinks(f: ScoreFamily) -> list[float]:
    """Nonnegative points where ``psi'`` is discontinuous or changes formula."""
    if f.kind == "huber":
        return [f.k]
    if f.kind == "sl1":
        return [1.0 / f.m - 1.0 / f.m**2, 1.0 / f.m]
    if f.kind == "shuber":
        return [f.k - f.k / f.m, f.k]
    if f.kind == "l1":
        return [0.0]
    return []
