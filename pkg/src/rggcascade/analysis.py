"""Numerical evaluation of the cascade / no-cascade conditions.

Notation used below, for a node of degree ``k`` with threshold ``phi`` and
neighbour initial states ``S'``:

* ``rho_k``   = [1 - int_0^k F_S(k - phi) f_phi(phi) dphi] ** k
* ``sigma_k`` = [1 - int_0^inf F_S(phi) f_phi(phi) dphi] ** k

Both treat the k neighbour conditions as independent although they share one
threshold. :func:`hv_probability` and :func:`hr_probability` give the
probabilities with the threshold integrated out last; those are what a
simulation measures.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.stats import poisson

from .distributions import (
    DEFAULT_TOL,
    DistKind,
    DistributionSpec,
    QuadratureResult,
    expectation_request,
    integrate,
)

NO_CASCADE_BOUND = Fraction(1, 27)
# Poisson means of the two series in the weak-node condition are
# lambda/2 and lambda * (2*sqrt(2) + pi).
PAIR_AREA = 2.0 * math.sqrt(2.0) + math.pi

K0_CAVEAT = (
    "the vulnerable-component condition must hold for all 1 <= k <= k0, where k0 "
    "depends on (lambda, lambda1) and is not computed here; only the passing prefix is reported"
)


def _state_kinks(state: DistributionSpec, k: float) -> list[float]:
    return [k - s for s in state.kinks]


def rho_bracket(
    state: DistributionSpec, threshold: DistributionSpec, k: int, tol: float = DEFAULT_TOL
) -> QuadratureResult:
    """``1 - int_0^k F_S(k - phi) f_phi(phi) dphi`` with its error bound."""
    if k < 1:
        raise ValueError("rho_k needs k >= 1")
    req = expectation_request(
        lambda p: state.cdf(k - p), threshold, 0.0, float(k), _state_kinks(state, k), tol
    )
    v, e = integrate(req)
    return QuadratureResult(min(max(1.0 - v, 0.0), 1.0), e)


def rho_k(state: DistributionSpec, threshold: DistributionSpec, k: int, tol: float = DEFAULT_TOL) -> float:
    return rho_bracket(state, threshold, k, tol).value ** k


def reliable_gap(state: DistributionSpec, threshold: DistributionSpec, tol: float = DEFAULT_TOL) -> QuadratureResult:
    """``int_0^inf F_S(phi) f_phi(phi) dphi``, i.e. ``P(S' < phi)``."""
    req = expectation_request(state.cdf, threshold, 0.0, None, state.kinks, tol)
    v, e = integrate(req)
    return QuadratureResult(min(max(v, 0.0), 1.0), e)


def sigma_bracket(
    state: DistributionSpec, threshold: DistributionSpec, tol: float = DEFAULT_TOL
) -> QuadratureResult:
    gap, err = reliable_gap(state, threshold, tol)
    return QuadratureResult(1.0 - gap, err)


def sigma_k(state: DistributionSpec, threshold: DistributionSpec, k: int, tol: float = DEFAULT_TOL) -> float:
    if k < 0:
        raise ValueError("sigma_k needs k >= 0")
    if k == 0:
        return 1.0
    gap = reliable_gap(state, threshold, tol).value
    return math.exp(k * math.log1p(-gap)) if gap < 1.0 else 0.0


def hv_probability(
    state: DistributionSpec, threshold: DistributionSpec, k: int, tol: float = DEFAULT_TOL
) -> float:
    """P(node of degree k is highly vulnerable) = E_phi[P(S' > k - phi)^k]."""
    if k < 1:
        return 0.0
    req = expectation_request(
        lambda p: (1.0 - state.cdf(k - p)) ** k, threshold, 0.0, float(k), _state_kinks(state, k), tol
    )
    return integrate(req).value + float(threshold.sf(float(k)))


def hr_probability(
    state: DistributionSpec, threshold: DistributionSpec, k: int, tol: float = DEFAULT_TOL
) -> float:
    """P(node of degree k is highly reliable) = E_phi[P(S' >= phi)^k]."""
    if k == 0:
        return 1.0
    req = expectation_request(lambda p: (1.0 - state.cdf(p)) ** k, threshold, 0.0, None, state.kinks, tol)
    return integrate(req).value


def _is_example1(state: DistributionSpec, threshold: DistributionSpec) -> bool:
    return state.kind is DistKind.UNIFORM_UNIT and threshold.kind is DistKind.EXPONENTIAL


def _log_expm1_over(mu: float) -> float:
    # log((e^mu - 1) / mu) without overflow
    return mu + math.log(-math.expm1(-mu)) - math.log(mu)


def example1_rho(mu: float, k: int) -> float:
    """Closed form ``((e^mu - 1)/mu)^k * exp(-mu k^2)`` for uniform states."""
    return math.exp(k * _log_expm1_over(mu) - mu * k * k)


def example1_sigma_bracket(mu: float) -> float:
    """Closed form ``1 + (e^-mu - 1)/mu`` for uniform states."""
    return 1.0 + math.expm1(-mu) / mu


def decay_ratio(x: float) -> float:
    """``(1 - e^-x) / x``, continuous at 0 with value 1."""
    if x == 0.0:
        return 1.0
    return -math.expm1(-x) / x


def solve_m_prime(ratio: float, tol: float = 1e-10) -> float:
    """Root of ``(1 - e^-x)/x = ratio`` by bisection.

    The left side falls strictly from 1 to 0 on (0, inf), so the root is
    unique. Raises ValueError for ratio outside (0, 1).
    """
    if not 0.0 < ratio < 1.0:
        raise ValueError(f"ratio must lie in (0, 1), got {ratio}")
    lo, hi = 0.0, 1.0
    while decay_ratio(hi) > ratio:
        lo, hi = hi, 2.0 * hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if decay_ratio(mid) > ratio:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass
class Theorem1Check:
    ratio: float
    values: dict[int, float]
    passes: dict[int, bool]
    prefix: int
    note: str = K0_CAVEAT


def check_theorem1(
    state: DistributionSpec,
    threshold: DistributionSpec,
    lam: float,
    lam1: float,
    k_max: int,
    tol: float = DEFAULT_TOL,
) -> Theorem1Check:
    """Test ``rho_k >= lam1/lam`` for ``1 <= k <= k_max`` and report the passing prefix."""
    if not lam > lam1 > 0:
        raise ValueError("need lam > lam1 > 0")
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    values = {k: rho_k(state, threshold, k, tol) for k in range(1, k_max + 1)}
    return _prefix_check(values, lam1 / lam)


def _prefix_check(values: dict[int, float], ratio: float) -> Theorem1Check:
    passes = {k: v >= ratio for k, v in values.items()}
    prefix = 0
    while prefix + 1 in passes and passes[prefix + 1]:
        prefix += 1
    return Theorem1Check(ratio, dict(values), passes, prefix)


@dataclass
class Theorem2Value:
    value: float
    truncation_bound: float
    k_terms: int
    m_terms: int

    @property
    def verdict(self) -> bool:
        return self.value + self.truncation_bound < float(NO_CASCADE_BOUND)

    def __iter__(self):
        yield self.value
        yield self.truncation_bound


def _poisson_cut(mean: float, tail: float) -> int:
    n = int(mean)
    while poisson.sf(n, mean) > tail:
        n += 1
    return n


def _theorem2_series(gap: float, gap_err: float, lam: float, tol: float) -> Theorem2Value:
    a = lam / 2.0
    b = lam * PAIR_AREA
    K = _poisson_cut(a, tol / 2.0)
    M = _poisson_cut(b, tol / 2.0)
    tail = float(poisson.sf(K, a) + poisson.sf(M, b))
    ks = np.arange(K + 1)
    ms = np.arange(M + 1)
    pk = poisson.pmf(ks, a)
    pm = poisson.pmf(ms, b)
    expo = np.maximum((ms[None, :] + ks[:, None] - 1) * ks[:, None], 0).astype(float)
    if gap >= 1.0:
        factor = (expo > 0).astype(float)
    else:
        factor = -np.expm1(expo * math.log1p(-gap))
    w = pk[:, None] * pm[None, :]
    value = float((w * factor).sum())
    # |d/dgap (1 - (1-gap)^n)| <= n
    propagated = float((w * expo).sum()) * gap_err
    return Theorem2Value(value, tail + propagated, K + 1, M + 1)


def theorem2_lhs(
    state: DistributionSpec, threshold: DistributionSpec, lam: float, tol: float = 1e-12
) -> Theorem2Value:
    """Double Poisson series of the weak-node condition, truncated to ``tol``.

    ``truncation_bound`` covers the dropped Poisson tails (the summand factor
    lies in [0, 1]) plus the propagated quadrature error of the inner integral.
    """
    if not lam > 0 or not tol > 0:
        raise ValueError("need lam > 0 and tol > 0")
    a = lam / 2.0
    mean_expo = a * (a + lam * PAIR_AREA)
    gap, err = reliable_gap(state, threshold, tol / (1.0 + mean_expo))
    return _theorem2_series(gap, err, lam, tol)


def critical_mu(
    lam: float,
    tol: float = 1e-12,
    width: float = 0.5,
    state: DistributionSpec | None = None,
) -> float:
    """Smallest exponential threshold rate for which the weak-node condition holds.

    The series falls monotonically in ``mu``; the boundary is bracketed by
    doubling and then bisected to ``width``. The returned value is the upper
    end of the final bracket, so it always satisfies the condition. Returns 0
    when even ``mu -> 0+`` (all thresholds above all states) satisfies it.
    """
    state = state or DistributionSpec.uniform_unit()

    def ok(mu):
        return theorem2_lhs(state, DistributionSpec.exponential(mu), lam, tol).verdict

    if _theorem2_series(1.0, 0.0, lam, tol).verdict:
        return 0.0
    lo, hi = 0.0, 1.0
    while not ok(hi):
        lo, hi = hi, 2.0 * hi
    while hi - lo > width:
        mid = 0.5 * (lo + hi)
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi


@dataclass
class AnalysisReport:
    state: DistributionSpec
    threshold: DistributionSpec
    lam: float
    lam1: float | None
    rho: dict[int, float] = field(default_factory=dict)
    rho_err: dict[int, float] = field(default_factory=dict)
    sigma: dict[int, float] = field(default_factory=dict)
    sigma_err: dict[int, float] = field(default_factory=dict)
    hv_joint: dict[int, float] = field(default_factory=dict)
    hr_joint: dict[int, float] = field(default_factory=dict)
    theorem1: Theorem1Check | None = None
    theorem2: Theorem2Value | None = None
    m_prime: float | None = None
    proposition1: bool | None = None
    critical_mu: float | None = None

    def summary(self) -> str:
        lines = [
            f"state distribution     : {self.state.describe()}",
            f"threshold distribution : {self.threshold.describe()}",
            f"density lambda         : {self.lam:g}",
        ]
        if self.theorem1 is not None:
            t1 = self.theorem1
            lines.append(f"vulnerable condition   : ratio lambda1/lambda = {t1.ratio:.6f}")
            for k in sorted(t1.values):
                lines.append(f"  k={k:<3d} rho_k={t1.values[k]:.9f}  {'PASS' if t1.passes[k] else 'FAIL'}")
            lines.append(f"  passing prefix length: {t1.prefix}")
            lines.append(f"  note: {t1.note}")
        if self.m_prime is not None:
            verdict = "PASS" if self.proposition1 else "FAIL"
            lines.append(
                f"closed-form rate bound : m' = {self.m_prime:.10f}; "
                f"mu = {self.threshold.rate:g} < m' -> {verdict}"
            )
        if self.theorem2 is not None:
            t2 = self.theorem2
            lines.append(
                f"no-cascade condition   : LHS = {t2.value:.12e} (+ {t2.truncation_bound:.2e}) "
                f"vs 1/27 = {float(NO_CASCADE_BOUND):.12e} -> {'PASS' if t2.verdict else 'FAIL'}"
            )
        if self.critical_mu is not None:
            lines.append(f"critical mu            : {self.critical_mu:.4f}")
        return "\n".join(lines) + "\n"

    def rows(self) -> list[tuple[str, str, float, float]]:
        """``(quantity, k, value, error_bound)`` rows; ``k`` is blank where unused."""
        out = []
        for k in sorted(self.rho):
            out.append(("rho", str(k), self.rho[k], self.rho_err.get(k, 0.0)))
        for k in sorted(self.sigma):
            out.append(("sigma", str(k), self.sigma[k], self.sigma_err.get(k, 0.0)))
        for k in sorted(self.hv_joint):
            out.append(("hv_probability", str(k), self.hv_joint[k], 0.0))
        for k in sorted(self.hr_joint):
            out.append(("hr_probability", str(k), self.hr_joint[k], 0.0))
        if self.theorem1 is not None:
            out.append(("theorem1_ratio", "", self.theorem1.ratio, 0.0))
            out.append(("theorem1_prefix", "", float(self.theorem1.prefix), 0.0))
        if self.m_prime is not None:
            out.append(("m_prime", "", self.m_prime, 1e-10))
            out.append(("proposition1_pass", "", float(self.proposition1), 0.0))
        if self.theorem2 is not None:
            out.append(("theorem2_lhs", "", self.theorem2.value, self.theorem2.truncation_bound))
            out.append(("theorem2_pass", "", float(self.theorem2.verdict), 0.0))
        if self.critical_mu is not None:
            out.append(("critical_mu", "", self.critical_mu, 0.5))
        return out


def analyze(
    state: DistributionSpec,
    threshold: DistributionSpec,
    lam: float,
    lam1: float | None = None,
    k_max: int = 10,
    tol: float = DEFAULT_TOL,
    series_tol: float = 1e-12,
    find_critical: bool = False,
) -> AnalysisReport:
    rep = AnalysisReport(state, threshold, lam, lam1)
    for k in range(1, k_max + 1):
        br, err = rho_bracket(state, threshold, k, tol)
        rep.rho[k] = br**k
        rep.rho_err[k] = k * err
        rep.hv_joint[k] = hv_probability(state, threshold, k, tol)
    gap, gerr = reliable_gap(state, threshold, tol)
    for k in range(0, k_max + 1):
        rep.sigma[k] = (1.0 - gap) ** k
        rep.sigma_err[k] = k * gerr
        rep.hr_joint[k] = hr_probability(state, threshold, k, tol)
    if lam1 is not None:
        if not lam > lam1 > 0:
            raise ValueError("need lam > lam1 > 0")
        rep.theorem1 = _prefix_check(rep.rho, lam1 / lam)
        if _is_example1(state, threshold):
            rep.m_prime = solve_m_prime(lam1 / lam)
            rep.proposition1 = threshold.rate < rep.m_prime
    rep.theorem2 = theorem2_lhs(state, threshold, lam, series_tol)
    if find_critical and state.kind is DistKind.UNIFORM_UNIT:
        rep.critical_mu = critical_mu(lam, series_tol)
    return rep
