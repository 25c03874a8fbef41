"""Exact probability mass functions on the nonnegative integers.

Every law used by the operator catalogue and the bound evaluators is
represented by a finite, explicitly truncated :class:`Pmf`.  Infinite-support
families are cut once the accumulated mass reaches ``1 - tol`` and the missing
mass is carried along as ``tail_mass`` so that downstream total-variation
results can be reported as rigorous intervals instead of point values.

All reductions that feed a tolerance-sensitive comparison (convolutions,
total-variation sums, moments) use compensated summation: ``math.fsum`` for
scalar reductions and a Kahan accumulator for the vectorised convolution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

DEFAULT_TOL = 1e-12

# Hard cap on truncation loops; generously above any desk-scale support.
_MAX_SUPPORT = 1_000_000


def _as_array(masses) -> np.ndarray:
    arr = np.asarray(masses, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("masses must be a nonempty 1-d sequence")
    return arr


@dataclass(frozen=True)
class Pmf:
    """Truncated law on {0, 1, 2, ...} with tracked tail mass.

    ``masses[j]`` is P(Y = j); ``tail_mass`` bounds the probability lost to
    truncation, so ``sum(masses) + tail_mass`` is 1 up to rounding.
    """

    masses: np.ndarray
    tail_mass: float = 0.0
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        arr = _as_array(self.masses)
        arr.setflags(write=False)
        object.__setattr__(self, "masses", arr)
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.tail_mass < 0:
            raise ValueError("tail_mass must be nonnegative")
        if float(arr.min()) < 0.0:
            raise ValueError("negative probability mass")
        total = math.fsum(arr.tolist()) + self.tail_mass
        # Window widens with the accumulated tail of derived (convolved) laws.
        slack = self.tol + self.tail_mass + 1e-12
        if abs(total - 1.0) > slack:
            raise ValueError(f"masses + tail sum to {total!r}, not 1 within {slack!r}")

    def __len__(self) -> int:
        return int(self.masses.size)

    @property
    def support_end(self) -> int:
        """Largest index carried explicitly."""
        return int(self.masses.size - 1)

    def mass(self, j: int) -> float:
        return float(self.masses[j]) if 0 <= j < len(self) else 0.0

    def mean(self) -> float:
        return moments(self, 1)

    def variance(self) -> float:
        return moments(self, 2, central=True)

    def prob_greater(self, t: int) -> float:
        """Conservative P(Y > t): includes the truncated tail."""
        if t >= self.support_end:
            return self.tail_mass
        head = math.fsum(self.masses[: t + 1].tolist())
        return max(0.0, 1.0 - head)


def pmf_point(k: int, tol: float = DEFAULT_TOL) -> Pmf:
    """Degenerate law concentrated at ``k``."""
    if k < 0:
        raise ValueError("support point must be nonnegative")
    masses = np.zeros(k + 1)
    masses[k] = 1.0
    return Pmf(masses, 0.0, tol)


def _truncate_series(first: float, ratio: Callable[[int], float], tol: float) -> tuple[np.ndarray, float]:
    """Accumulate ``m_{j+1} = m_j * ratio(j)`` until mass ``>= 1 - tol``.

    Returns the mass array and the (exact) remaining tail ``1 - sum``.
    """
    masses = [first]
    cumulative = first
    j = 0
    while cumulative < 1.0 - tol:
        nxt = masses[-1] * ratio(j)
        if nxt < 0.0:
            raise ValueError("series produced a negative mass")
        masses.append(nxt)
        cumulative += nxt
        j += 1
        if j > _MAX_SUPPORT:
            raise ValueError("truncation did not converge")
    arr = np.array(masses)
    tail = max(0.0, 1.0 - math.fsum(masses))
    return arr, tail


def pmf_poisson(alpha: float, tol: float = DEFAULT_TOL) -> Pmf:
    """Poisson law with mean ``alpha``, truncated at cumulative mass 1 - tol."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    masses, tail = _truncate_series(math.exp(-alpha), lambda j: alpha / (j + 1), tol)
    return Pmf(masses, tail, tol)


def pmf_binomial(n: int, p: float, tol: float = DEFAULT_TOL) -> Pmf:
    """Binomial Bi(n, p) on {0..n}; exact, no tail."""
    if n < 1 or n != int(n):
        raise ValueError("n must be a positive integer")
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie in (0, 1)")
    n = int(n)
    q = 1.0 - p
    j = np.arange(n + 1)
    log_coeff = np.array([math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1) for k in j])
    masses = np.exp(log_coeff + j * math.log(p) + (n - j) * math.log(q))
    return Pmf(masses / math.fsum(masses.tolist()), 0.0, tol)


def pmf_pseudo_binomial(m_tilde: float, p: float, tol: float = DEFAULT_TOL) -> Pmf:
    """Binomial-form law with real exponent ``m_tilde``, renormalised on {0..floor(m_tilde)}.

    Uses the generalised binomial coefficient
    C(m, j) = m (m-1) ... (m-j+1) / j! and divides by the finite-sum
    normaliser; for integer ``m_tilde`` this reduces to the exact binomial.
    """
    if m_tilde <= 1:
        raise ValueError("m_tilde must exceed 1")
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie in (0, 1)")
    top = int(math.floor(m_tilde))
    q = 1.0 - p
    weights = np.empty(top + 1)
    coeff = 1.0
    for j in range(top + 1):
        weights[j] = coeff * p**j * q ** (m_tilde - j)
        coeff *= (m_tilde - j) / (j + 1)
    return Pmf(weights / math.fsum(weights.tolist()), 0.0, tol)


def pmf_negative_binomial(r: float, p_bar: float, tol: float = DEFAULT_TOL) -> Pmf:
    """Negative binomial NB(r, p_bar), truncated at cumulative mass 1 - tol."""
    if r <= 0:
        raise ValueError("r must be positive")
    if not 0.0 < p_bar < 1.0:
        raise ValueError("p_bar must lie in (0, 1)")
    q_bar = 1.0 - p_bar
    masses, tail = _truncate_series(p_bar**r, lambda j: q_bar * (r + j) / (j + 1), tol)
    return Pmf(masses, tail, tol)


def _kahan_convolve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Discrete convolution with per-entry Kahan-compensated accumulation."""
    if len(b) > len(a):
        a, b = b, a
    out = np.zeros(len(a) + len(b) - 1)
    comp = np.zeros_like(out)
    for shift, weight in enumerate(b):
        if weight == 0.0:
            continue
        term = a * weight
        sl = slice(shift, shift + len(a))
        y = term - comp[sl]
        t = out[sl] + y
        comp[sl] = (t - out[sl]) - y
        out[sl] = t
    return out


def convolve(a: Pmf, b: Pmf) -> Pmf:
    """Law of the independent sum; tail masses propagate additively."""
    masses = _kahan_convolve(a.masses, b.masses)
    np.clip(masses, 0.0, None, out=masses)
    return Pmf(masses, a.tail_mass + b.tail_mass, max(a.tol, b.tol))


def pmf_bcp(m: int, p: float, alpha: float, tol: float = DEFAULT_TOL) -> Pmf:
    """Convolution of Bi(m, p) with Poisson(alpha); alpha = 0 gives the pure binomial."""
    if m < 0 or m != int(m):
        raise ValueError("m must be a nonnegative integer")
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    if alpha == 0.0:
        if m == 0:
            return pmf_point(0, tol)
        return pmf_binomial(int(m), p, tol)
    if m == 0:
        return pmf_poisson(alpha, tol)
    return convolve(pmf_binomial(int(m), p, tol), pmf_poisson(alpha, tol))


def pmf_poisson_binomial(probs: Sequence[float], tol: float = DEFAULT_TOL) -> Pmf:
    """Exact law of a sum of independent Bernoulli(p_i) variables."""
    probs = np.asarray(probs, dtype=np.float64)
    if probs.size == 0:
        raise ValueError("probs must be nonempty")
    if np.any(probs <= 0.0) or np.any(probs >= 1.0):
        raise ValueError("each probability must lie in (0, 1)")
    masses = np.array([1.0])
    for p in probs:
        nxt = np.zeros(masses.size + 1)
        nxt[:-1] = masses * (1.0 - p)
        nxt[1:] += masses * p
        masses = nxt
    return Pmf(masses, 0.0, tol)


@dataclass(frozen=True)
class SeverityLaw:
    """Summand law for compound distributions; mass at zero is allowed."""

    masses: np.ndarray
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        arr = _as_array(self.masses)
        arr.setflags(write=False)
        object.__setattr__(self, "masses", arr)
        if float(arr.min()) < 0.0:
            raise ValueError("severity masses must be nonnegative")
        total = math.fsum(arr.tolist())
        if abs(total - 1.0) > self.tol + 1e-12:
            raise ValueError("severity masses must sum to 1")

    @property
    def p0(self) -> float:
        return float(self.masses[0])

    def mean(self) -> float:
        return math.fsum((np.arange(self.masses.size) * self.masses).tolist())


@dataclass(frozen=True)
class PanjerCounting:
    """Counting law whose ratios satisfy (k+1) mu_{k+1} / mu_k = a + b k.

    ``support_end`` is the largest attainable count (``None`` for unbounded
    support) and ``mu0`` pins the normalisation.  The three classical
    families are exposed as constructors; ``from_ab`` derives ``mu0`` and the
    support cut-off from the coefficient pair alone.
    """

    a: float
    b: float
    support_end: int | None = None
    mu0: float = 0.0
    family: str | None = field(default=None, compare=False)

    def __post_init__(self):
        if not 0.0 < self.mu0 <= 1.0:
            raise ValueError("mu0 must lie in (0, 1]")
        if self.support_end is not None and self.support_end < 0:
            raise ValueError("support_end must be nonnegative")

    @classmethod
    def poisson(cls, lam: float) -> "PanjerCounting":
        if lam <= 0:
            raise ValueError("lam must be positive")
        return cls(a=lam, b=0.0, support_end=None, mu0=math.exp(-lam), family="poisson")

    @classmethod
    def binomial(cls, n: int, p: float) -> "PanjerCounting":
        if n < 1 or not 0.0 < p < 1.0:
            raise ValueError("need integer n >= 1 and p in (0, 1)")
        q = 1.0 - p
        return cls(a=n * p / q, b=-p / q, support_end=int(n), mu0=q**n, family="binomial")

    @classmethod
    def negative_binomial(cls, r: float, p_bar: float) -> "PanjerCounting":
        if r <= 0 or not 0.0 < p_bar < 1.0:
            raise ValueError("need r > 0 and p_bar in (0, 1)")
        return cls(a=r * (1.0 - p_bar), b=1.0 - p_bar, support_end=None, mu0=p_bar**r, family="negative_binomial")

    @classmethod
    def from_ab(cls, a: float, b: float, tol: float = DEFAULT_TOL) -> "PanjerCounting":
        """Build from the coefficient pair, deriving mu0 by normalisation."""
        weights = [1.0]
        k = 0
        support_end = None
        while True:
            rate = a + b * k
            if abs(rate) <= 1e-12 * (abs(a) + abs(b) * k + 1.0):
                support_end = k
                break
            if rate < 0.0:
                raise ValueError(f"a + b k turns negative at k = {k}: not a counting law")
            nxt = weights[-1] * rate / (k + 1)
            weights.append(nxt)
            k += 1
            if nxt <= 1e-18 * max(weights):
                break
            if k > _MAX_SUPPORT:
                raise ValueError("counting masses do not converge")
        total = math.fsum(weights)
        return cls(a=a, b=b, support_end=support_end, mu0=1.0 / total)

    def counting_masses(self, tol: float = DEFAULT_TOL) -> np.ndarray:
        """Materialise mu_0 .. mu_K (or until the cumulative mass reaches 1 - tol)."""
        masses = [self.mu0]
        cumulative = self.mu0
        k = 0
        while cumulative < 1.0 - tol:
            if self.support_end is not None and k >= self.support_end:
                break
            rate = self.a + self.b * k
            if rate < 0.0:
                if rate < -1e-9:
                    raise ValueError("Panjer ratio turned negative: invalid (a, b)")
                rate = 0.0
            nxt = masses[-1] * rate / (k + 1)
            masses.append(nxt)
            cumulative += nxt
            k += 1
            if k > _MAX_SUPPORT:
                raise ValueError("counting masses do not converge")
        return np.array(masses)

    def pgf(self, z: float, tol: float = DEFAULT_TOL) -> float:
        """G_N(z), in closed form for the recognised families."""
        if self.family == "poisson":
            return math.exp(self.a * (z - 1.0))
        if self.family == "binomial":
            n = self.support_end
            p = self.a / (n + self.a)  # a = n p / q  =>  p = a / (n + a)
            return (1.0 - p + p * z) ** n
        if self.family == "negative_binomial":
            q_bar = self.b
            r = self.a / self.b
            return ((1.0 - q_bar) / (1.0 - q_bar * z)) ** r
        masses = self.counting_masses(tol)
        return math.fsum((masses * z ** np.arange(masses.size)).tolist())


def pmf_compound_panjer(counting: PanjerCounting, severity: SeverityLaw, tol: float = DEFAULT_TOL) -> Pmf:
    """Law of S_N = X_1 + ... + X_N for a Panjer-class count N.

    Evaluated by the aggregate-claim recursion
    ``pi_j = (1 - b p_0)^{-1} sum_{m>=1} (b + (a - b) m / j) p_m pi_{j-m}``
    seeded with ``pi_0 = G_N(p_0)``; algebraically equivalent to running the
    count/severity double sum.  Negative intermediate values beyond -1e-9
    signal an invalid coefficient pair and raise; smaller ones are rounding
    noise and are clamped to zero.
    """
    a, b = counting.a, counting.b
    s = severity.masses
    denom = 1.0 - b * s[0]
    if denom <= 0.0:
        raise ValueError("1 - b p_0 must be positive")
    pi = [counting.pgf(float(s[0]), tol)]
    cumulative = pi[0]
    hard_cap = _MAX_SUPPORT
    if counting.support_end is not None:
        hard_cap = counting.support_end * (len(s) - 1) if len(s) > 1 else 0
    j = 0
    while cumulative < 1.0 - tol and j < hard_cap:
        j += 1
        top = min(j, len(s) - 1)
        terms = [(b + (a - b) * m / j) * s[m] * pi[j - m] for m in range(1, top + 1)]
        value = math.fsum(terms) / denom
        if value < 0.0:
            if value < -1e-9:
                raise ValueError(f"recursion produced negative mass {value!r} at j = {j}")
            value = 0.0
        pi.append(value)
        cumulative += value
    arr = np.array(pi)
    tail = max(0.0, 1.0 - math.fsum(pi))
    return Pmf(arr, tail, tol)


def pmf_compound_explicit(counting_masses: Sequence[float], severity: SeverityLaw, tol: float = DEFAULT_TOL) -> Pmf:
    """Law of S_N by direct summation of convolution powers of the severity.

    ``pi_j = sum_k mu_k P(X_1 + ... + X_k = j)``; the count is truncated once
    its remaining mass drops below ``tol`` and that remainder is carried as
    tail mass.
    """
    mu = np.asarray(counting_masses, dtype=np.float64)
    if mu.ndim != 1 or mu.size == 0:
        raise ValueError("counting masses must be a nonempty 1-d sequence")
    if np.any(mu < 0.0):
        raise ValueError("counting masses must be nonnegative")
    if abs(math.fsum(mu.tolist()) - 1.0) > tol + 1e-9:
        raise ValueError("counting masses must sum to 1")
    used = 0.0
    power = np.array([1.0])  # severity ** 0
    acc = np.array([mu[0]])
    used += mu[0]
    remaining = 1.0 - used
    for k in range(1, mu.size):
        if remaining <= tol:
            break
        power = _kahan_convolve(power, severity.masses)
        if power.size > acc.size:
            acc = np.pad(acc, (0, power.size - acc.size))
        acc[: power.size] += mu[k] * power
        used += mu[k]
        remaining -= mu[k]
    tail = max(0.0, 1.0 - math.fsum(acc.tolist()))
    return Pmf(acc, tail, tol)


def _padded_pair(a: Pmf, b: Pmf) -> tuple[np.ndarray, np.ndarray]:
    size = max(len(a), len(b))
    return (
        np.pad(a.masses, (0, size - len(a))),
        np.pad(b.masses, (0, size - len(b))),
    )


def tv_norm_interval(a: Pmf, b: Pmf) -> tuple[float, float]:
    """Total-variation norm as an interval [on-support sum, sum + both tails]."""
    xa, xb = _padded_pair(a, b)
    core = math.fsum(np.abs(xa - xb).tolist())
    return core, core + a.tail_mass + b.tail_mass


def tv_norm(a: Pmf, b: Pmf) -> float:
    """Conservative total-variation norm: sum |a_j - b_j| plus both tail masses."""
    return tv_norm_interval(a, b)[1]


def w1_distance(a: Pmf, b: Pmf) -> float:
    """Wasserstein-1 distance between integer laws: L1 distance of their CDFs."""
    xa, xb = _padded_pair(a, b)
    return math.fsum(np.abs(np.cumsum(xa - xb)).tolist())


def first_diff_l1(p: Pmf) -> float:
    """TV norm of the law convolved with (point mass at 1 minus point mass at 0)."""
    diff = np.diff(p.masses, prepend=0.0, append=0.0)
    return math.fsum(np.abs(diff).tolist())


def second_diff_l1(p: Pmf) -> float:
    """TV norm of the law convolved with the squared difference kernel [1, -2, 1]."""
    padded = np.pad(p.masses, (2, 2))
    second = padded[2:] - 2.0 * padded[1:-1] + padded[:-2]
    return math.fsum(np.abs(second).tolist())


def moments(p: Pmf, k: int, central: bool = False) -> float:
    """Raw or central moment of order ``k`` (k = 1..4) by direct summation."""
    if not 1 <= k <= 4:
        raise ValueError("k must be between 1 and 4")
    j = np.arange(len(p), dtype=np.float64)
    if central:
        mean = math.fsum((j * p.masses).tolist())
        return math.fsum((((j - mean) ** k) * p.masses).tolist())
    return math.fsum(((j**k) * p.masses).tolist())
