"""Binomial-convoluted-Poisson approximation bounds for indicator sums.

Fits the three parameters (M, p, alpha) of the convolution Bi(M, p) * P(alpha)
to a sum ``W = I_1 + ... + I_n`` of (possibly dependent) indicators so that
the first three moments nearly match, evaluates the smoothness functionals of
``W``'s law exactly, and assembles the total-variation bounds of the two
perturbation routes together with the exact total-variation distance they are
supposed to dominate.

Models come in two exact flavours: independent (law by sequential
convolution) and joint (an explicit law on {0,1}^n, n capped at 24).  All
coupling expectations E|W-tilde - W| use the minimal (Wasserstein-1) coupling
computed from CDF differences, which yields the tightest valid bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .distributions import (
    DEFAULT_TOL,
    Pmf,
    first_diff_l1,
    moments,
    pmf_bcp,
    pmf_poisson_binomial,
    second_diff_l1,
    tv_norm_interval,
    w1_distance,
)

MAX_JOINT_SIZE = 24

# Relative snap window for integer-part extraction and nonnegativity clamps;
# covers accumulated rounding without masking genuine model violations.
_FIT_SNAP = 1e-9


# ---------------------------------------------------------------------------
# indicator models
# ---------------------------------------------------------------------------


class IndependentModel:
    """Sum of independent Bernoulli(p_i) indicators."""

    kind = "independent"

    def __init__(self, probs: Sequence[float]):
        probs = np.asarray(probs, dtype=np.float64)
        if probs.ndim != 1 or probs.size == 0:
            raise ValueError("probs must be a nonempty 1-d sequence")
        if np.any(probs <= 0.0) or np.any(probs >= 1.0):
            raise ValueError("each probability must lie in (0, 1)")
        self.probs = probs
        self.n = int(probs.size)

    def marginals(self) -> np.ndarray:
        return self.probs

    def law(self) -> Pmf:
        return pmf_poisson_binomial(self.probs)

    def law_without(self, i: int) -> Pmf:
        rest = np.delete(self.probs, i)
        if rest.size == 0:
            return Pmf(np.array([1.0]))
        return pmf_poisson_binomial(rest)

    def law_without_given(self, i: int) -> Pmf:
        return self.law_without(i)

    def law_without_pair(self, i: int, j: int) -> Pmf:
        rest = np.delete(self.probs, [i, j])
        if rest.size == 0:
            return Pmf(np.array([1.0]))
        return pmf_poisson_binomial(rest)

    def law_without_pair_given(self, i: int, j: int) -> Pmf:
        return self.law_without_pair(i, j)

    def covariance(self, i: int, j: int) -> float:
        if i == j:
            return float(self.probs[i] * (1.0 - self.probs[i]))
        return 0.0


class JointModel:
    """Exact joint law of n dependent indicators, indexed by bitmask.

    ``atom_probs[mask]`` is the probability of the outcome whose bit i set
    means I_i = 1.  Capped at n = 24 so every derived law stays exact.
    """

    kind = "joint"

    def __init__(self, n: int, atom_probs: Sequence[float], tol: float = DEFAULT_TOL):
        if not 1 <= n <= MAX_JOINT_SIZE:
            raise ValueError(f"joint models support 1 <= n <= {MAX_JOINT_SIZE}")
        atom_probs = np.asarray(atom_probs, dtype=np.float64)
        if atom_probs.size != 2**n:
            raise ValueError("atom_probs must have length 2 ** n")
        if np.any(atom_probs < 0.0):
            raise ValueError("atom probabilities must be nonnegative")
        if abs(math.fsum(atom_probs.tolist()) - 1.0) > 1e-12:
            raise ValueError("atom probabilities must sum to 1 within 1e-12")
        self.n = int(n)
        self.atom_probs = atom_probs
        self.tol = tol
        masks = np.arange(2**n, dtype=np.int64)
        bits = np.zeros(2**n, dtype=np.int64)
        for b in range(n):
            bits += (masks >> b) & 1
        self._popcount = bits
        self._masks = masks

    @classmethod
    def from_atoms(cls, n: int, atoms: Sequence[Sequence[float]]) -> "JointModel":
        """Build from rows ``[bit_0, ..., bit_{n-1}, probability]``."""
        probs = np.zeros(2**n)
        for row in atoms:
            *bits, prob = row
            if len(bits) != n:
                raise ValueError("each atom row needs n bits plus a probability")
            mask = 0
            for i, bit in enumerate(bits):
                if bit not in (0, 1):
                    raise ValueError("bits must be 0 or 1")
                mask |= int(bit) << i
            probs[mask] += float(prob)
        return cls(n, probs)

    def marginals(self) -> np.ndarray:
        return np.array(
            [math.fsum(self.atom_probs[(self._masks >> i) & 1 == 1].tolist()) for i in range(self.n)]
        )

    def _bincount(self, counts: np.ndarray, weights: np.ndarray, size: int) -> Pmf:
        masses = np.bincount(counts, weights=weights, minlength=size)
        total = math.fsum(masses.tolist())
        return Pmf(masses / total, 0.0, self.tol)

    def law(self) -> Pmf:
        return self._bincount(self._popcount, self.atom_probs, self.n + 1)

    def law_without(self, i: int) -> Pmf:
        counts = self._popcount - ((self._masks >> i) & 1)
        return self._bincount(counts, self.atom_probs, self.n)

    def law_without_given(self, i: int) -> Pmf:
        sel = ((self._masks >> i) & 1) == 1
        counts = (self._popcount - 1)[sel]
        return self._bincount(counts, self.atom_probs[sel], self.n)

    def law_without_pair(self, i: int, j: int) -> Pmf:
        counts = self._popcount - ((self._masks >> i) & 1) - ((self._masks >> j) & 1)
        return self._bincount(counts, self.atom_probs, max(self.n - 1, 1))

    def law_without_pair_given(self, i: int, j: int) -> Pmf:
        sel = ((self._masks >> i) & 1) == 1
        counts = (self._popcount - 1 - ((self._masks >> j) & 1))[sel]
        return self._bincount(counts, self.atom_probs[sel], max(self.n - 1, 1))

    def covariance(self, i: int, j: int) -> float:
        pi = math.fsum(self.atom_probs[(self._masks >> i) & 1 == 1].tolist())
        if i == j:
            return pi * (1.0 - pi)
        pj = math.fsum(self.atom_probs[(self._masks >> j) & 1 == 1].tolist())
        both = ((self._masks >> i) & 1 == 1) & ((self._masks >> j) & 1 == 1)
        pij = math.fsum(self.atom_probs[both].tolist())
        return pij - pi * pj


# ---------------------------------------------------------------------------
# parameter fit
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BcpParams:
    """Fitted parameters of the Bi(M, p) * P(alpha) approximant."""

    m: int
    delta: float
    p: float
    alpha: float

    def __post_init__(self):
        if self.m < 0:
            raise ValueError("M must be nonnegative")
        if not 0.0 <= self.delta < 1.0:
            raise ValueError("delta must lie in [0, 1)")
        if not 0.0 < self.p < 1.0:
            raise ValueError("p must lie in (0, 1)")
        if self.alpha < 0.0:
            raise ValueError("alpha must be nonnegative (the approximant must be a distribution)")

    @property
    def lam_hat(self) -> float:
        """Mean of the approximant, M p + alpha."""
        return self.m * self.p + self.alpha

    @property
    def t_hat(self) -> int:
        """Support cut floor(M + alpha/p) used by the binomial-perturbation route."""
        return int(math.floor(self.m + self.alpha / self.p))

    def theta1(self) -> float:
        """M p^2 / ((1 - 2p)^2 (M p + alpha)); infinite at p = 1/2."""
        if self.p == 0.5:
            return math.inf
        return self.m * self.p**2 / ((1.0 - 2.0 * self.p) ** 2 * self.lam_hat)

    def theta2(self) -> float:
        """alpha / (q T-hat)."""
        if self.t_hat <= 0:
            return math.inf
        return self.alpha / ((1.0 - self.p) * self.t_hat)

    def pmf(self, tol: float = DEFAULT_TOL) -> Pmf:
        return pmf_bcp(self.m, self.p, self.alpha, tol)


def _power_sums(probs: np.ndarray) -> tuple[float, float, float, float]:
    return tuple(math.fsum((probs**k).tolist()) for k in (1, 2, 3, 4))


def fit_bcp(probs: Sequence[float]) -> BcpParams:
    """Fit (M, delta, p, alpha) from the first three power sums of the p_i.

    M + delta = (sum p_i^2)^3 / (sum p_i^3)^2,  p = sum p_i^3 / sum p_i^2,
    alpha = sum p_i - M p.  The fitted values satisfy
    (M + delta) p^2 = sum p_i^2 and (M + delta) p^3 = sum p_i^3 identically,
    and alpha >= 0 by the Cauchy-Schwarz inequality; ratios landing within
    rounding of an integer are snapped so that equal probabilities give
    delta = 0 and alpha = 0 exactly.
    """
    probs = np.asarray(probs, dtype=np.float64)
    if probs.ndim != 1 or probs.size == 0:
        raise ValueError("probs must be a nonempty 1-d sequence")
    if np.any(probs <= 0.0) or np.any(probs >= 1.0):
        raise ValueError("each probability must lie in (0, 1)")
    s1, s2, s3, _ = _power_sums(probs)
    ratio = s2**3 / s3**2
    nearest = round(ratio)
    if nearest >= 1 and abs(ratio - nearest) <= _FIT_SNAP * max(1.0, ratio):
        ratio = float(nearest)
    m = int(math.floor(ratio))
    delta = ratio - m
    p = s3 / s2
    alpha = s1 - m * p
    if alpha < 0.0:
        if alpha < -_FIT_SNAP * max(1.0, s1):
            raise ValueError("fitted alpha is negative: inconsistent power sums")
        alpha = 0.0
    params = BcpParams(m=m, delta=delta, p=p, alpha=alpha)
    # second/third power-sum identities, kept as a guard on the arithmetic
    for k, target in ((2, s2), (3, s3)):
        got = (params.m + params.delta) * params.p**k
        if abs(got - target) > 1e-12 * max(1.0, abs(target)):
            raise AssertionError(f"moment relation {k} violated: {got!r} vs {target!r}")
    return params


# ---------------------------------------------------------------------------
# smoothness functionals
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SmoothnessStats:
    """Exact difference-smoothness functionals of the indicator-sum law.

    ``d``: L1 norm of the second difference of the law of W.
    ``d1``: worst L1 second difference over the leave-one-out laws.
    ``d2``: worst L1 first difference over the leave-two-out laws (optional).
    """

    d: float
    d1: float
    d2: float | None = None


def smoothness_exact(model, include_d2: bool = False) -> SmoothnessStats:
    d = second_diff_l1(model.law())
    d1 = max(second_diff_l1(model.law_without(i)) for i in range(model.n))
    d2 = None
    if include_d2:
        if model.n < 2:
            raise ValueError("d2 needs at least two indicators")
        d2 = max(
            first_diff_l1(model.law_without_pair(i, j))
            for i in range(model.n)
            for j in range(i + 1, model.n)
        )
    return SmoothnessStats(d=d, d1=d1, d2=d2)


def d_bound_independent(probs: Sequence[float]) -> float | None:
    """2 / (sigma sqrt(sigma^2 - tau)) when sigma^2 > tau, else None."""
    probs = np.asarray(probs, dtype=np.float64)
    sigma2 = math.fsum((probs * (1.0 - probs)).tolist())
    tau = float(np.max(probs * (1.0 - probs)))
    if sigma2 <= tau:
        return None
    return 2.0 / (math.sqrt(sigma2) * math.sqrt(sigma2 - tau))


def d1_bound_independent(probs: Sequence[float]) -> float | None:
    """2 / sqrt((sigma^2 - tau)(sigma^2 - 3 tau)) when sigma^2 > 3 tau, else None."""
    probs = np.asarray(probs, dtype=np.float64)
    sigma2 = math.fsum((probs * (1.0 - probs)).tolist())
    tau = float(np.max(probs * (1.0 - probs)))
    if sigma2 <= 3.0 * tau:
        return None
    return 2.0 / math.sqrt((sigma2 - tau) * (sigma2 - 3.0 * tau))


def eta1(model) -> float:
    """sum_i p_i (1 + 2 p_i + 4 p_i^2) E|W-tilde^(i) - W^(i)| (minimal coupling)."""
    probs = model.marginals()
    total = 0.0
    for i in range(model.n):
        w1 = w1_distance(model.law_without_given(i), model.law_without(i))
        pi = float(probs[i])
        total += pi * (1.0 + 2.0 * pi + 4.0 * pi**2) * w1
    return total


# ---------------------------------------------------------------------------
# bound reports
# ---------------------------------------------------------------------------


@dataclass
class BoundReport:
    """Itemised total-variation bound next to the exact distance it targets.

    ``items`` holds the additive contributions after their prefactors, so
    ``total`` is their sum.  ``tv_lower``/``tv_upper`` bracket the exact
    total-variation norm (the width is the truncation tail).  ``dominant`` is
    None whenever a hypothesis fails: the bound is still reported but nothing
    is asserted about it.
    """

    theorem: str
    params: BcpParams
    hypotheses: dict[str, bool]
    items: dict[str, float]
    prefactor: float
    total: float
    tv_lower: float
    tv_upper: float
    dominant: bool | None

    @property
    def hypotheses_met(self) -> bool:
        return all(self.hypotheses.values())

    def to_record(self) -> dict:
        return {
            "theorem": self.theorem,
            "params": {
                "m": self.params.m,
                "delta": self.params.delta,
                "p": self.params.p,
                "alpha": self.params.alpha,
            },
            "hypotheses": dict(self.hypotheses),
            "hypotheses_met": self.hypotheses_met,
            "items": dict(self.items),
            "prefactor": self.prefactor,
            "total": self.total,
            "tv_lower": self.tv_lower,
            "tv_upper": self.tv_upper,
            "dominant": self.dominant,
        }


def _finalize(theorem, params, hypotheses, items, prefactor, model_law, bcp_law) -> BoundReport:
    total = math.fsum(items.values())
    tv_lower, tv_upper = tv_norm_interval(model_law, bcp_law)
    met = all(hypotheses.values())
    dominant = bool(total >= tv_upper) if met and math.isfinite(total) else None
    return BoundReport(
        theorem=theorem,
        params=params,
        hypotheses=hypotheses,
        items=items,
        prefactor=prefactor,
        total=total,
        tv_lower=tv_lower,
        tv_upper=tv_upper,
        dominant=dominant,
    )


def bound_thm41(model, params: BcpParams | None = None) -> BoundReport:
    """Poisson-perturbation bound for a (possibly dependent) indicator sum.

    2 / ((1 - 2 theta_1) lam-hat) *
    { d_1 sum p_i^4 + d M p^4 / (1-2p)^2 + (1+2p) delta p^2 + eta_1 },
    with exact d, d_1 from the model's laws.  Hypothesis: max(p, theta_1) < 1/2.
    """
    probs = model.marginals()
    if params is None:
        params = fit_bcp(probs)
    _, _, _, s4 = _power_sums(probs)
    theta1 = params.theta1()
    hypotheses = {"max_p_theta1_lt_half": max(params.p, theta1) < 0.5}
    stats = smoothness_exact(model)
    prefactor = (
        2.0 / ((1.0 - 2.0 * theta1) * params.lam_hat) if theta1 != math.inf else math.nan
    )
    raw = {
        "d1_fourth_powers": stats.d1 * s4,
        "d_binomial_block": stats.d * params.m * params.p**4 / (1.0 - 2.0 * params.p) ** 2,
        "delta_block": (1.0 + 2.0 * params.p) * params.delta * params.p**2,
        "eta1": eta1(model),
    }
    items = {k: prefactor * v for k, v in raw.items()}
    return _finalize("thm41", params, hypotheses, items, prefactor, model.law(), params.pmf())


def bound_cor42(probs: Sequence[float], params: BcpParams | None = None) -> BoundReport:
    """Independent-case bound with the closed-form smoothness estimates.

    Requires max(p, theta_1) < 1/2 and sigma^2 > 3 tau; when a hypothesis
    fails the corresponding items are NaN and no verdict is issued.
    """
    model = IndependentModel(probs)
    p_arr = model.probs
    if params is None:
        params = fit_bcp(p_arr)
    _, _, _, s4 = _power_sums(p_arr)
    sigma2 = math.fsum((p_arr * (1.0 - p_arr)).tolist())
    tau = float(np.max(p_arr * (1.0 - p_arr)))
    theta1 = params.theta1()
    hypotheses = {
        "max_p_theta1_lt_half": max(params.p, theta1) < 0.5,
        "sigma2_gt_3tau": sigma2 > 3.0 * tau,
    }
    prefactor = (
        2.0 / ((1.0 - 2.0 * theta1) * params.lam_hat) if theta1 != math.inf else math.nan
    )
    if sigma2 > 3.0 * tau:
        item_d1 = 2.0 * s4 / math.sqrt((sigma2 - tau) * (sigma2 - 3.0 * tau))
        item_d = (
            2.0
            * params.m
            * params.p**4
            / ((1.0 - 2.0 * params.p) ** 2 * math.sqrt(sigma2) * math.sqrt(sigma2 - tau))
        )
    else:
        item_d1 = math.nan
        item_d = math.nan
    raw = {
        "d1_fourth_powers": item_d1,
        "d_binomial_block": item_d,
        "delta_block": (1.0 + 2.0 * params.p) * params.delta * params.p**2,
    }
    items = {k: prefactor * v for k, v in raw.items()}
    return _finalize("cor42", params, hypotheses, items, prefactor, model.law(), params.pmf())


def _coupling_double_sum(model, probs: np.ndarray, params: BcpParams, d2: float) -> float:
    """Covariance and pair-coupling double sum of the binomial-perturbation bound."""
    s2 = math.fsum((probs**2).tolist())
    acc = []
    for i in range(model.n):
        for j in range(model.n):
            if i == j:
                continue
            gap = abs(float(probs[i]) - float(probs[j]))
            if gap == 0.0:
                continue
            cov = abs(model.covariance(i, j))
            pair_w1 = 0.0
            if model.kind == "joint":
                pair_w1 = w1_distance(
                    model.law_without_pair_given(i, j), model.law_without_pair(i, j)
                )
            inner = d2 * gap * cov + 4.0 * float(probs[i]) * float(probs[j]) * pair_w1
            acc.append(float(probs[i]) * float(probs[j]) * gap * inner)
    return math.fsum(acc) / (2.0 * s2)


def bound_thm44(model, params: BcpParams | None = None) -> BoundReport:
    """Binomial-perturbation bound for a (possibly dependent) indicator sum.

    2 / (p q T-hat (1 - 2 theta_2)) * { d_2 (sum p_i^4 - p sum p_i^3) +
    delta p^2 + coupling and covariance terms } plus
    2 / (1 - 2 theta_2) * (P(approximant > T-hat) + P(W > T-hat)).
    Hypothesis: theta_2 < 1/2.
    """
    probs = model.marginals()
    if params is None:
        params = fit_bcp(probs)
    _, _, s3, s4 = _power_sums(probs)
    theta2 = params.theta2()
    hypotheses = {"theta2_lt_half": theta2 < 0.5}
    q = 1.0 - params.p
    t_hat = params.t_hat
    stats = smoothness_exact(model, include_d2=True)
    law = model.law()
    bcp_law = params.pmf()

    quartic_gap = s4 - params.p * s3
    if quartic_gap < 0.0:
        if quartic_gap < -1e-12 * max(1.0, s4):
            raise AssertionError("sum p_i^4 - p sum p_i^3 must be nonnegative")
        quartic_gap = 0.0

    coupling_single = math.fsum(
        float(probs[i])
        * (2.0 + 2.0 * abs(float(probs[i]) - params.p))
        * w1_distance(model.law_without_given(i), model.law_without(i))
        for i in range(model.n)
    )
    double_sum = _coupling_double_sum(model, probs, params, stats.d2)

    if t_hat <= 0 or theta2 == math.inf:
        brace_prefactor = math.nan
        tail_prefactor = math.nan
    else:
        brace_prefactor = 2.0 / (params.p * q * t_hat * (1.0 - 2.0 * theta2))
        tail_prefactor = 2.0 / (1.0 - 2.0 * theta2)
    raw = {
        "d2_quartic_gap": stats.d2 * quartic_gap,
        "delta_block": params.delta * params.p**2,
        "single_coupling": coupling_single,
        "pair_double_sum": double_sum,
    }
    items = {k: brace_prefactor * v for k, v in raw.items()}
    items["tail_w"] = tail_prefactor * law.prob_greater(t_hat)
    items["tail_bcp"] = tail_prefactor * bcp_law.prob_greater(t_hat)
    return _finalize("thm44", params, hypotheses, items, brace_prefactor, law, bcp_law)


def bound_cor45(probs: Sequence[float], params: BcpParams | None = None, tail_mode: str = "exact") -> BoundReport:
    """Independent-case binomial-perturbation bound.

    2 / (1 - 2 theta_2) * { 4 (sum p_i^4 - p sum p_i^3) / (p q T-hat
    (sigma^2 - 3 tau)) + delta p^2 + P(W > T-hat) + P(approximant > T-hat) }.
    ``tail_mode`` selects exact tail probabilities or the analytic
    exp(-lam-hat psi(p)) envelope for their sum.
    """
    model = IndependentModel(probs)
    p_arr = model.probs
    if params is None:
        params = fit_bcp(p_arr)
    s1, _, s3, s4 = _power_sums(p_arr)
    sigma2 = math.fsum((p_arr * (1.0 - p_arr)).tolist())
    tau = float(np.max(p_arr * (1.0 - p_arr)))
    theta2 = params.theta2()
    hypotheses = {
        "theta2_lt_half": theta2 < 0.5,
        "sigma2_gt_3tau": sigma2 > 3.0 * tau,
    }
    q = 1.0 - params.p
    t_hat = params.t_hat
    law = model.law()
    bcp_law = params.pmf()

    quartic_gap = s4 - params.p * s3
    if quartic_gap < 0.0:
        if quartic_gap < -1e-12 * max(1.0, s4):
            raise AssertionError("sum p_i^4 - p sum p_i^3 must be nonnegative")
        quartic_gap = 0.0

    prefactor = 2.0 / (1.0 - 2.0 * theta2) if theta2 != math.inf else math.nan
    if sigma2 > 3.0 * tau and t_hat > 0:
        item_quartic = 4.0 * quartic_gap / (params.p * q * t_hat * (sigma2 - 3.0 * tau))
    else:
        item_quartic = math.nan
    raw = {"quartic_gap": item_quartic, "delta_block": params.delta * params.p**2}
    if tail_mode == "exact":
        raw["tail_w"] = law.prob_greater(t_hat)
        raw["tail_bcp"] = bcp_law.prob_greater(t_hat)
    elif tail_mode == "analytic":
        raw["tails_analytic"] = tail_bound_psi(params.p, s1)
    else:
        raise ValueError("tail_mode must be 'exact' or 'analytic'")
    items = {k: prefactor * v for k, v in raw.items()}
    return _finalize("cor45", params, hypotheses, items, prefactor, law, bcp_law)


def tail_bound_psi(p: float, lambda_hat: float) -> float:
    """Analytic envelope exp(-lam-hat psi(p)), psi(p) = (-ln p - 1)/p + 1.

    Bounds the sum of the two support-cut tail probabilities for independent
    indicators; positive psi for every p < 1, so the envelope decays in
    lam-hat.
    """
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie in (0, 1)")
    if lambda_hat < 0.0:
        raise ValueError("lambda_hat must be nonnegative")
    psi = (-math.log(p) - 1.0) / p + 1.0
    return math.exp(-lambda_hat * psi)
