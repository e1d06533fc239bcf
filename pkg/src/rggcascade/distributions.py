"""Node attribute distributions and the adaptive Simpson quadrature used by
the analytic formulas.

Only two distribution kinds are provided: uniform on (0, 1] (initial node
states) and exponential with rate ``mu`` (thresholds). Every method accepts a
scalar or an array; scalars take a pure-``math`` path because the quadrature
calls them one point at a time.
"""

from __future__ import annotations

import enum
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

DEFAULT_TOL = 1e-10
MAX_DEPTH = 40
# Panels are always split at least this many times so that a lucky first
# Simpson estimate on a long interval cannot pass the error test.
MIN_DEPTH = 3


class QuadratureError(RuntimeError):
    """Adaptive refinement hit the depth limit without meeting the tolerance."""


class DistKind(str, enum.Enum):
    UNIFORM_UNIT = "uniform_unit"
    EXPONENTIAL = "exponential"


@dataclass(frozen=True)
class DistributionSpec:
    kind: DistKind
    rate: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", DistKind(self.kind))
        if self.kind is DistKind.EXPONENTIAL:
            if self.rate is None or not self.rate > 0 or not math.isfinite(self.rate):
                raise ValueError(f"exponential rate must be finite and > 0, got {self.rate!r}")
            object.__setattr__(self, "rate", float(self.rate))
        elif self.rate is not None:
            raise ValueError("uniform_unit takes no rate")

    @classmethod
    def uniform_unit(cls) -> "DistributionSpec":
        return cls(DistKind.UNIFORM_UNIT)

    @classmethod
    def exponential(cls, rate: float) -> "DistributionSpec":
        return cls(DistKind.EXPONENTIAL, rate)

    @property
    def support(self) -> tuple[float, float]:
        if self.kind is DistKind.UNIFORM_UNIT:
            return 0.0, 1.0
        return 0.0, math.inf

    @property
    def kinks(self) -> tuple[float, ...]:
        """Finite points where the CDF is not smooth."""
        lo, hi = self.support
        return tuple(p for p in (lo, hi) if math.isfinite(p))

    @property
    def mean(self) -> float:
        if self.kind is DistKind.UNIFORM_UNIT:
            return 0.5
        return 1.0 / self.rate

    def pdf(self, x):
        if np.ndim(x) == 0:
            x = float(x)
            if self.kind is DistKind.UNIFORM_UNIT:
                return 1.0 if 0.0 <= x <= 1.0 else 0.0
            return self.rate * math.exp(-self.rate * x) if x >= 0.0 else 0.0
        x = np.asarray(x, dtype=float)
        if self.kind is DistKind.UNIFORM_UNIT:
            return ((x >= 0.0) & (x <= 1.0)).astype(float)
        return np.where(x >= 0.0, self.rate * np.exp(-self.rate * np.maximum(x, 0.0)), 0.0)

    def cdf(self, x):
        if np.ndim(x) == 0:
            x = float(x)
            if self.kind is DistKind.UNIFORM_UNIT:
                return min(max(x, 0.0), 1.0)
            return -math.expm1(-self.rate * x) if x > 0.0 else 0.0
        x = np.asarray(x, dtype=float)
        if self.kind is DistKind.UNIFORM_UNIT:
            return np.clip(x, 0.0, 1.0)
        return np.where(x > 0.0, -np.expm1(-self.rate * np.maximum(x, 0.0)), 0.0)

    def sf(self, x):
        """Survival function ``1 - cdf(x)``, accurate in the upper tail."""
        if self.kind is DistKind.EXPONENTIAL:
            if np.ndim(x) == 0:
                return math.exp(-self.rate * max(float(x), 0.0))
            return np.exp(-self.rate * np.maximum(np.asarray(x, dtype=float), 0.0))
        return 1.0 - self.cdf(x)

    def quantile(self, p):
        if np.ndim(p) == 0:
            p = float(p)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"probability out of range: {p}")
            if self.kind is DistKind.UNIFORM_UNIT:
                return p
            return -math.log1p(-p) / self.rate if p < 1.0 else math.inf
        p = np.asarray(p, dtype=float)
        if np.any((p < 0.0) | (p > 1.0)):
            raise ValueError("probability out of range")
        if self.kind is DistKind.UNIFORM_UNIT:
            return p.copy()
        with np.errstate(divide="ignore"):
            return -np.log1p(-p) / self.rate

    def isf(self, q: float) -> float:
        """Upper-tail quantile: the x with ``sf(x) == q``."""
        if not 0.0 < q <= 1.0:
            raise ValueError(f"tail probability out of range: {q}")
        if self.kind is DistKind.UNIFORM_UNIT:
            return 1.0 - q
        return -math.log(q) / self.rate

    def sample(self, rng: np.random.Generator, size=None):
        """Inverse-CDF sampling.

        ``rng.random`` draws from [0, 1); uniform_unit maps ``u -> 1 - u`` so
        the values land in (0, 1] as required for initial states.
        """
        u = rng.random(size)
        if self.kind is DistKind.UNIFORM_UNIT:
            return 1.0 - u
        return self.quantile(u)

    def describe(self) -> str:
        if self.kind is DistKind.EXPONENTIAL:
            return f"exponential(rate={self.rate:g})"
        return "uniform(0,1]"


@dataclass(frozen=True)
class QuadratureRequest:
    """One definite integral over ``[a, b]``.

    For ``b = inf`` the caller supplies ``tail_cutoff`` together with an
    analytic bound ``tail_mass`` on the integral beyond it; the finite part is
    then integrated to ``tolerance - tail_mass``.
    """

    integrand: Callable[[float], float]
    a: float
    b: float
    breakpoints: Sequence[float] = ()
    tolerance: float = DEFAULT_TOL
    tail_cutoff: float | None = None
    tail_mass: float = 0.0
    max_depth: int = MAX_DEPTH
    _points: tuple[float, ...] = field(init=False, repr=False)

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ValueError("tolerance must be > 0")
        if not self.b > self.a:
            raise ValueError(f"empty interval [{self.a}, {self.b}]")
        pts = sorted(set(float(p) for p in self.breakpoints))
        if any(not (self.a < p < self.b) for p in pts):
            raise ValueError("breakpoints must lie strictly inside (a, b)")
        if math.isinf(self.b):
            if self.tail_cutoff is None or not self.tail_cutoff > self.a:
                raise ValueError("infinite upper limit needs a tail_cutoff above a")
            if not 0.0 <= self.tail_mass < self.tolerance:
                raise ValueError("tail_mass must be below the tolerance")
        object.__setattr__(self, "_points", tuple(pts))

    @property
    def upper(self) -> float:
        return self.tail_cutoff if math.isinf(self.b) else self.b

    def panels(self) -> list[tuple[float, float]]:
        upper = self.upper
        edges = [self.a] + [p for p in self._points if p < upper] + [upper]
        return list(zip(edges[:-1], edges[1:]))


class QuadratureResult(NamedTuple):
    value: float
    error_bound: float


def _simpson(fa, fm, fb, h):
    return h / 6.0 * (fa + 4.0 * fm + fb)


def _adaptive(f, a, b, fa, fm, fb, whole, tol, depth, max_depth):
    m = 0.5 * (a + b)
    lm = 0.5 * (a + m)
    rm = 0.5 * (m + b)
    flm = f(lm)
    frm = f(rm)
    left = _simpson(fa, flm, fm, m - a)
    right = _simpson(fm, frm, fb, b - m)
    delta = left + right - whole
    if depth >= MIN_DEPTH and abs(delta) <= 15.0 * tol:
        return left + right + delta / 15.0, abs(delta) / 15.0
    if depth >= max_depth:
        raise QuadratureError(
            f"no convergence on [{a:.6g}, {b:.6g}] after {max_depth} levels "
            f"(local error {abs(delta) / 15.0:.3g} > {tol:.3g})"
        )
    lv, le = _adaptive(f, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1, max_depth)
    rv, re = _adaptive(f, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1, max_depth)
    return lv + rv, le + re


def integrate(q: QuadratureRequest) -> QuadratureResult:
    """Adaptive composite Simpson over the breakpoint-delimited panels.

    Raises:
        QuadratureError: if any panel fails to converge within ``max_depth``.
    """
    f = q.integrand
    finite_tol = q.tolerance - q.tail_mass
    panels = q.panels()
    span = q.upper - q.a
    total = 0.0
    err = 0.0
    for a, b in panels:
        tol = finite_tol * (b - a) / span
        fa, fm, fb = f(a), f(0.5 * (a + b)), f(b)
        whole = _simpson(fa, fm, fb, b - a)
        v, e = _adaptive(f, a, b, fa, fm, fb, whole, tol, 0, q.max_depth)
        total += v
        err += e
    return QuadratureResult(total, err + q.tail_mass)


def expectation_request(
    g: Callable[[float], float],
    weight: DistributionSpec,
    lower: float = 0.0,
    upper: float | None = None,
    breakpoints: Sequence[float] = (),
    tolerance: float = DEFAULT_TOL,
) -> QuadratureRequest:
    """Build the request for ``int g(x) f_w(x) dx`` with ``0 <= g <= 1``.

    When the weight has unbounded support and no ``upper`` is given, the range
    is truncated at the ``1 - tolerance/2`` quantile of the weight, which
    bounds the dropped mass by ``tolerance/2``.
    """
    lo_s, hi_s = weight.support
    lower = max(lower, lo_s)
    if upper is None:
        upper = hi_s
    upper = min(upper, hi_s)
    integrand = lambda x: g(x) * weight.pdf(x)  # noqa: E731
    kinks = [p for p in tuple(breakpoints) + weight.kinks if lower < p < upper]
    if math.isinf(upper):
        tail = 0.5 * tolerance
        cutoff = weight.isf(tail)
        return QuadratureRequest(
            integrand, lower, math.inf, kinks, tolerance, tail_cutoff=cutoff, tail_mass=tail
        )
    return QuadratureRequest(integrand, lower, upper, kinks, tolerance)
