"""Exact law and approximation bound for the (1,1)-runs statistic.

For an i.i.d. Bernoulli(p*) sequence X_1..X_n the statistic
``W = sum_{j=2..n} X_j (1 - X_{j-1})`` counts 01-patterns.  Its exact law is
a two-state dynamic programme over (previous X, accumulated count); the
leave-one-out laws reuse the same programme with one accumulation step
skipped, keeping the underlying chain intact.  The module also carries the
closed-form moments, the dependence-aware parameter fit of the
binomial-convoluted-Poisson approximant, the smoothness-bound constants
(K1, K2) with their hypothesis ``(n - 2) a >= 8``, the coupling constant C1,
and the resulting order-O(1) total-variation bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bcp import BcpParams, BoundReport, _finalize
from .distributions import DEFAULT_TOL, Pmf, second_diff_l1, tv_norm_interval


@dataclass(frozen=True)
class RunsModel:
    """(1,1)-runs statistic of n independent Bernoulli(p_star) trials."""

    n: int
    p_star: float

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("n must be at least 2")
        if not 0.0 < self.p_star < 1.0:
            raise ValueError("p_star must lie in (0, 1)")

    @property
    def a(self) -> float:
        """Pattern probability a = p* (1 - p*), at most 1/4."""
        return self.p_star * (1.0 - self.p_star)

    @property
    def smoothness_hypothesis(self) -> bool:
        """(n - 2) a >= 8, required by the smoothness lemma."""
        return (self.n - 2) * self.a >= 8.0

    @property
    def kind(self) -> str:
        return "runs"

    def marginals(self) -> np.ndarray:
        return np.full(self.n - 1, self.a)


def _runs_dp(n: int, p_star: float, skip: int | None = None) -> np.ndarray:
    """Distribution of the (possibly leave-one-out) pattern count by DP.

    State: previous trial value; ``skip`` names the position j whose
    indicator is excluded from the count (the chain itself is unchanged).
    """
    q_star = 1.0 - p_star
    max_w = (n + 1) // 2
    dp = np.zeros((2, max_w + 1))
    dp[0, 0] = q_star
    dp[1, 0] = p_star
    for j in range(2, n + 1):
        nxt = np.zeros_like(dp)
        # next trial is 0: no pattern regardless of the previous value
        nxt[0] += q_star * (dp[0] + dp[1])
        # next trial is 1: pattern completed only from previous 0
        if j == skip:
            nxt[1] += p_star * (dp[0] + dp[1])
        else:
            nxt[1] += p_star * dp[1]
            nxt[1, 1:] += p_star * dp[0, :-1]
        dp = nxt
    return dp[0] + dp[1]


def exact_runs_law(model: RunsModel, tol: float = DEFAULT_TOL) -> Pmf:
    """Exact law of W; finite support, no tail."""
    masses = _runs_dp(model.n, model.p_star)
    top = int(np.max(np.nonzero(masses)[0])) if np.any(masses > 0) else 0
    return Pmf(masses[: top + 1] / math.fsum(masses.tolist()), 0.0, tol)


def runs_law_without(model: RunsModel, position: int, tol: float = DEFAULT_TOL) -> Pmf:
    """Exact law of W minus the indicator at ``position`` (2 <= position <= n)."""
    if not 2 <= position <= model.n:
        raise ValueError("position must lie in 2..n")
    masses = _runs_dp(model.n, model.p_star, skip=position)
    top = int(np.max(np.nonzero(masses)[0])) if np.any(masses > 0) else 0
    return Pmf(masses[: top + 1] / math.fsum(masses.tolist()), 0.0, tol)


def runs_moments(model: RunsModel) -> tuple[float, float, float]:
    """Closed-form mean, variance and third central moment of W."""
    n, a = model.n, model.a
    mean = (n - 1) * a
    variance = (n - 1) * a + (5 - 3 * n) * a**2
    third = (n - 1) * a + (15 - 9 * n) * a**2 + 4 * (5 * n - 11) * a**3
    return mean, variance, third


def fit_runs_bcp(model: RunsModel) -> BcpParams:
    """Dependence-aware parameter fit matching the first three moments.

    M + delta = (3n-5)^3 / (10n-22)^2,  p = ((10n-22)/(3n-5)) a,
    alpha = (n-1) a - M p; the combination satisfies
    (M + delta) p^2 = (3n-5) a^2 = mean - variance and
    (M + delta) p^3 = (10n-22) a^3 exactly.
    """
    n = model.n
    if 10 * n - 22 <= 0:
        raise ValueError("fit needs n >= 3")
    ratio = (3 * n - 5) ** 3 / (10 * n - 22) ** 2
    m = int(math.floor(ratio))
    delta = ratio - m
    p = ((10 * n - 22) / (3 * n - 5)) * model.a
    if not 0.0 < p < 1.0:
        raise ValueError(f"fitted p = {p!r} outside (0, 1)")
    alpha = (n - 1) * model.a - m * p
    if alpha < 0.0:
        if alpha < -1e-9 * max(1.0, (n - 1) * model.a):
            raise ValueError("fitted alpha is negative")
        alpha = 0.0
    return BcpParams(m=m, delta=delta, p=p, alpha=alpha)


@dataclass(frozen=True)
class RunsConstants:
    """Smoothness and coupling constants of the runs bound."""

    k1: float
    k2: float
    c1: float

    def gamma(self, steps: float) -> float:
        """K1 / steps + K2 / sqrt(steps)."""
        return self.k1 / steps + self.k2 / math.sqrt(steps)


def runs_constants_from_a(a: float) -> RunsConstants:
    """Constants as functions of the pattern probability a alone.

    K1 = 288 (1 - 3a) / a, K2 = 4 / (a sqrt(min(1 - a, 1/2))),
    C1 = 2 max(1, 2(1-a)) a (1 + 2a + 4a^2) (1 - a(1-a)).
    """
    if not 0.0 < a <= 1.0 / 3.0:
        raise ValueError("a must lie in (0, 1/3]")
    k1 = 288.0 * (1.0 - 3.0 * a) / a
    k2 = 4.0 / (a * math.sqrt(min(1.0 - a, 0.5)))
    c1 = 2.0 * max(1.0, 2.0 * (1.0 - a)) * a * (1.0 + 2.0 * a + 4.0 * a**2) * (1.0 - a * (1.0 - a))
    return RunsConstants(k1=k1, k2=k2, c1=c1)


def runs_constants(model: RunsModel) -> RunsConstants:
    return runs_constants_from_a(model.a)


@dataclass(frozen=True)
class SmoothnessLemmaReport:
    """Exact second-difference functionals against their closed-form bounds."""

    hypothesis_met: bool
    d_exact: float
    d1_exact: float
    d_bound: float
    d1_bound: float

    @property
    def d_ok(self) -> bool:
        return self.d_exact <= self.d_bound

    @property
    def d1_ok(self) -> bool:
        return self.d1_exact <= self.d1_bound


def lemma47_check(model: RunsModel) -> SmoothnessLemmaReport:
    """Compare exact d, d1 of the runs law with K1/m + K2/sqrt(m) bounds.

    d uses m = n - 1, d1 uses m = n - 2; informational when (n-2) a < 8.
    """
    consts = runs_constants(model)
    d_exact = second_diff_l1(exact_runs_law(model))
    d1_exact = max(
        second_diff_l1(runs_law_without(model, pos)) for pos in range(2, model.n + 1)
    )
    return SmoothnessLemmaReport(
        hypothesis_met=model.smoothness_hypothesis,
        d_exact=d_exact,
        d1_exact=d1_exact,
        d_bound=consts.gamma(model.n - 1),
        d1_bound=consts.gamma(model.n - 2),
    )


def bound_cor48(model: RunsModel, params: BcpParams | None = None) -> BoundReport:
    """Order-O(1) total-variation bound for the runs statistic.

    2 / ((1 - 2 theta_1) lam-hat) * { (n a^4 + M p^4 / (1-2p)^2)
    (K1/(n-2) + K2/sqrt(n-2)) + (1+2p) delta p^2 + (n-1) C1 },
    compared against the exact distance to the fitted approximant.
    Hypotheses: max(p, theta_1) <= 1/2 and (n-2) a >= 8.
    """
    if params is None:
        params = fit_runs_bcp(model)
    consts = runs_constants(model)
    n, a = model.n, model.a
    theta1 = params.theta1()
    hypotheses = {
        "max_p_theta1_le_half": max(params.p, theta1) <= 0.5,
        "smoothness_na_ge_8": model.smoothness_hypothesis,
    }
    prefactor = (
        2.0 / ((1.0 - 2.0 * theta1) * params.lam_hat) if theta1 != math.inf else math.nan
    )
    smooth = consts.gamma(n - 2)
    raw = {
        "smoothness_block": (n * a**4 + params.m * params.p**4 / (1.0 - 2.0 * params.p) ** 2) * smooth,
        "delta_block": (1.0 + 2.0 * params.p) * params.delta * params.p**2,
        "coupling_block": (n - 1) * consts.c1,
    }
    items = {k: prefactor * v for k, v in raw.items()}
    return _finalize("cor48", params, hypotheses, items, prefactor, exact_runs_law(model), params.pmf())


def waiting_time_pgf(p_star: float, z: float) -> float:
    """PGF a z^2 / (1 - z + a z^2) of the gap between successive patterns."""
    a = p_star * (1.0 - p_star)
    return a * z**2 / (1.0 - z + a * z**2)


def waiting_time_moments(p_star: float) -> tuple[float, float]:
    """Mean 1/a and variance (1 - 3a) / a^2 of the inter-pattern waiting time."""
    if not 0.0 < p_star < 1.0:
        raise ValueError("p_star must lie in (0, 1)")
    a = p_star * (1.0 - p_star)
    return 1.0 / a, (1.0 - 3.0 * a) / a**2
