"""Catalogue of Stein operators for the laws in :mod:`steindist.distributions`.

Every operator is stored in one affine normal form

    (A g)(j) = sum_l (u_l + v_l * j) * g(j + l),

so a single evaluation routine and a single characterising-identity check
serve the whole catalogue.  Operators defined through telescoping sums of
forward differences are expanded into this form at construction time using
``sum_{k=1}^{m-1} Dg(j+k) = g(j+m) - g(j+1)``.  Infinite perturbation series
are cut once the geometric coefficient falls below ``series_tol`` times the
leading coefficient; the dropped remainder is bounded in closed form and
recorded on the operator.

The ratio operator built directly from a law's mass ratios is not affine in
general and is stored with per-index coefficient tables instead.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .distributions import Pmf, SeverityLaw

DEFAULT_SERIES_TOL = 1e-14


@dataclass(frozen=True)
class TestFunction:
    """Bounded test function g with g(0) = 0, materialised on 0..len-1."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("values must be a nonempty 1-d sequence")
        if arr[0] != 0.0:
            raise ValueError("test functions must vanish at 0")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @classmethod
    def indicator(cls, k: int, size: int) -> "TestFunction":
        if k < 1:
            raise ValueError("indicator index must be >= 1 (g(0) = 0 is required)")
        values = np.zeros(max(size, k + 1))
        values[k] = 1.0
        return cls(values)

    @classmethod
    def from_callable(cls, fn, size: int) -> "TestFunction":
        return cls(np.array([fn(j) for j in range(size)], dtype=np.float64))


def _clip_test_values(g: np.ndarray, g_support_end: int | None) -> np.ndarray:
    if g_support_end is not None and g.size > g_support_end + 1:
        g = g.copy()
        g[g_support_end + 1 :] = 0.0
    return g


@dataclass(frozen=True)
class AffineOperator:
    """Operator with coefficients affine in the evaluation point.

    ``terms`` maps each offset l to the pair (const, slope) of the
    coefficient ``const + slope * j`` multiplying ``g(j + l)``.
    ``g_support_end`` restricts the admissible test class: g is forced to
    vanish beyond that index (finite-support laws).  ``dropped_tail`` bounds
    the coefficients discarded when truncating an infinite series form.
    """

    terms: tuple[tuple[int, float, float], ...]
    g_support_end: int | None = None
    dropped_tail: float = 0.0

    def __post_init__(self):
        offsets = [t[0] for t in self.terms]
        if len(set(offsets)) != len(offsets):
            raise ValueError("offsets must be distinct")
        if any(o < 0 for o in offsets):
            raise ValueError("offsets must be nonnegative")

    @property
    def max_offset(self) -> int:
        return max(t[0] for t in self.terms)

    def coefficient(self, j: int) -> dict[int, float]:
        """Coefficients of g(j + l) in (A g)(j), keyed by offset l."""
        return {l: u + v * j for l, u, v in self.terms}

    def apply(self, g: np.ndarray | TestFunction, j_max: int) -> np.ndarray:
        """Evaluate (A g)(j) for j = 0..j_max; g is zero beyond its range."""
        if isinstance(g, TestFunction):
            g = g.values
        g = _clip_test_values(np.asarray(g, dtype=np.float64), self.g_support_end)
        padded = np.pad(g, (0, max(0, j_max + 1 + self.max_offset - g.size)))
        j = np.arange(j_max + 1, dtype=np.float64)
        out = np.zeros(j_max + 1)
        for l, u, v in self.terms:
            out += (u + v * j) * padded[l : l + j_max + 1]
        return out

    def to_json(self) -> str:
        return json.dumps(
            {
                "kind": "affine",
                "terms": [[l, u, v] for l, u, v in self.terms],
                "g_support_end": self.g_support_end,
                "dropped_tail": self.dropped_tail,
            },
            sort_keys=True,
        )


@dataclass(frozen=True)
class TabularOperator:
    """Degenerate affine operator with per-index coefficient tables.

    ``coeffs`` maps each offset l to an array c_l with
    (A g)(j) = sum_l c_l[j] * g(j + l); used where the mass-ratio
    coefficients are not affine in j.
    """

    coeffs: dict[int, np.ndarray]
    g_support_end: int | None = None
    dropped_tail: float = 0.0

    @property
    def max_offset(self) -> int:
        return max(self.coeffs)

    @property
    def j_end(self) -> int:
        return min(arr.size for arr in self.coeffs.values()) - 1

    def coefficient(self, j: int) -> dict[int, float]:
        return {l: float(arr[j]) if j < arr.size else 0.0 for l, arr in self.coeffs.items()}

    def apply(self, g: np.ndarray | TestFunction, j_max: int) -> np.ndarray:
        if isinstance(g, TestFunction):
            g = g.values
        g = _clip_test_values(np.asarray(g, dtype=np.float64), self.g_support_end)
        padded = np.pad(g, (0, max(0, j_max + 1 + self.max_offset - g.size)))
        out = np.zeros(j_max + 1)
        for l, arr in self.coeffs.items():
            row = np.zeros(j_max + 1)
            take = min(arr.size, j_max + 1)
            row[:take] = arr[:take]
            out += row * padded[l : l + j_max + 1]
        return out

    def to_json(self) -> str:
        return json.dumps(
            {
                "kind": "tabular",
                "coeffs": {str(l): arr.tolist() for l, arr in self.coeffs.items()},
                "g_support_end": self.g_support_end,
                "dropped_tail": self.dropped_tail,
            },
            sort_keys=True,
        )


# ---------------------------------------------------------------------------
# constructors
# ---------------------------------------------------------------------------


def op_generic_ratio(y: Pmf) -> TabularOperator:
    """Ratio operator (j+1) mu_{j+1} / mu_j * g(j+1) - j g(j) from a law's masses.

    Requires strictly positive mass on the interior of the truncated support.
    """
    masses = y.masses
    if masses.size < 2:
        raise ValueError("law has no interior support")
    if np.any(masses[:-1] <= 0.0):
        raise ValueError("zero interior mass: ratio operator undefined")
    j = np.arange(masses.size, dtype=np.float64)
    up = np.zeros(masses.size)
    up[:-1] = (j[:-1] + 1.0) * masses[1:] / masses[:-1]
    return TabularOperator(coeffs={1: up, 0: -j})


def op_poisson(alpha: float) -> AffineOperator:
    """alpha g(j+1) - j g(j)."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    return AffineOperator(terms=((1, alpha, 0.0), (0, 0.0, -1.0)))


def op_pseudo_binomial(m_tilde: float, p: float) -> AffineOperator:
    """(m_tilde - j) p g(j+1) - j q g(j) on j <= floor(m_tilde), g vanishing beyond."""
    if m_tilde <= 1 or not 0.0 < p < 1.0:
        raise ValueError("need m_tilde > 1 and p in (0, 1)")
    q = 1.0 - p
    return AffineOperator(
        terms=((1, m_tilde * p, -p), (0, 0.0, -q)),
        g_support_end=int(math.floor(m_tilde)),
    )


def op_negative_binomial(r: float, p_bar: float) -> AffineOperator:
    """q_bar (r + j) g(j+1) - j g(j)."""
    if r <= 0 or not 0.0 < p_bar < 1.0:
        raise ValueError("need r > 0 and p_bar in (0, 1)")
    q_bar = 1.0 - p_bar
    return AffineOperator(terms=((1, r * q_bar, q_bar), (0, 0.0, -1.0)))


def _lambda_array(lambdas: Sequence[float]) -> np.ndarray:
    arr = np.asarray(lambdas, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("lambdas must be a nonempty 1-d sequence (lambda_1 first)")
    return arr


def op_compound_poisson(lambdas: Sequence[float]) -> AffineOperator:
    """sum_l l lambda_l g(j+l) - j g(j); ``lambdas[0]`` is the rate of summand size 1."""
    lam = _lambda_array(lambdas)
    terms = [(0, 0.0, -1.0)]
    terms += [(l + 1, (l + 1) * lam[l], 0.0) for l in range(lam.size) if lam[l] != 0.0]
    return AffineOperator(terms=tuple(terms))


def _telescoped(offset1_const: float, offset1_slope: float, offset0_slope: float, c: dict[int, float]) -> AffineOperator:
    """Assemble ``(c1 + s1 j) g(j+1) + s0 j g(j) + sum_m c_m (g(j+m) - g(j+1))``."""
    const1 = offset1_const - math.fsum(c.values())
    terms = [(1, const1, offset1_slope), (0, 0.0, offset0_slope)]
    terms += [(m, cm, 0.0) for m, cm in sorted(c.items()) if cm != 0.0]
    return AffineOperator(terms=tuple(terms))


def op_bi_cp(m: int, p: float, lambdas: Sequence[float]) -> AffineOperator:
    """Operator for the sum of Bi(m, p) and an independent compound Poisson law.

    Telescoped form of the difference-sum presentation with coefficients
    ``q m lambda_m + p (m-1) lambda_{m-1}`` on the m-th difference block.
    """
    if m < 1 or not 0.0 < p < 1.0:
        raise ValueError("need integer m >= 1 and p in (0, 1)")
    lam = _lambda_array(lambdas)
    q = 1.0 - p
    lam_of = lambda i: lam[i - 1] if 1 <= i <= lam.size else 0.0
    total_rate = math.fsum((np.arange(1, lam.size + 1) * lam).tolist())
    c = {}
    for mm in range(2, lam.size + 2):
        cm = q * mm * lam_of(mm) + p * (mm - 1) * lam_of(mm - 1)
        if cm != 0.0:
            c[mm] = cm
    return _telescoped(m * p + total_rate, -p, -q, c)


def op_nb_cp(r: float, p_bar: float, lambdas: Sequence[float]) -> AffineOperator:
    """Operator for the sum of NB(r, p_bar) and an independent compound Poisson law."""
    if r <= 0 or not 0.0 < p_bar < 1.0:
        raise ValueError("need r > 0 and p_bar in (0, 1)")
    lam = _lambda_array(lambdas)
    q_bar = 1.0 - p_bar
    lam_of = lambda i: lam[i - 1] if 1 <= i <= lam.size else 0.0
    total_rate = math.fsum((np.arange(1, lam.size + 1) * lam).tolist())
    c = {}
    for mm in range(2, lam.size + 2):
        cm = mm * lam_of(mm) - q_bar * (mm - 1) * lam_of(mm - 1)
        if cm != 0.0:
            c[mm] = cm
    return _telescoped(total_rate * p_bar + r * q_bar, q_bar, -1.0, c)


def op_bcp_binomial_perturbation(m: int, p: float, alpha: float) -> AffineOperator:
    """Binomial-perturbation operator for Bi(m, p) + Poisson(alpha).

    (m p + alpha - j p) g(j+1) - j q g(j) + p alpha Dg(j+1), expanded.
    """
    if m < 1 or not 0.0 < p < 1.0 or alpha < 0:
        raise ValueError("need m >= 1, p in (0, 1), alpha >= 0")
    q = 1.0 - p
    terms = [(1, m * p + alpha - p * alpha, -p), (0, 0.0, -q)]
    if alpha > 0:
        terms.append((2, p * alpha, 0.0))
    return AffineOperator(terms=tuple(terms))


def _geometric_series_terms(scale: float, ratio: float, sign_alternates: bool, series_tol: float, leading: float):
    """Coefficients ``scale * (+-ratio)^m`` for m >= 2, cut below series_tol * leading.

    Returns (dict offset -> coefficient, dropped-tail bound).
    """
    if not 0.0 < ratio < 1.0:
        raise ValueError("series ratio must lie in (0, 1)")
    c = {}
    mm = 2
    while True:
        magnitude = abs(scale) * ratio**mm
        if magnitude < series_tol * abs(leading) or magnitude == 0.0:
            break
        sign = (-1.0) ** (mm + 1) if sign_alternates else 1.0
        c[mm] = sign * scale * ratio**mm
        mm += 1
        if mm > 10_000:
            break
    dropped = abs(scale) * ratio**mm / (1.0 - ratio)
    return c, dropped


def op_bcp_poisson_perturbation(m: int, p: float, alpha: float, series_tol: float = DEFAULT_SERIES_TOL) -> AffineOperator:
    """Poisson-perturbation operator for Bi(m, p) + Poisson(alpha); needs p < q.

    (alpha + m p) g(j+1) - j g(j) plus the alternating geometric series
    m (-1)^{l+1} (p/q)^l acting on difference blocks, telescoped and truncated.
    """
    if m < 1 or not 0.0 < p < 1.0 or alpha < 0:
        raise ValueError("need m >= 1, p in (0, 1), alpha >= 0")
    q = 1.0 - p
    if p >= q:
        raise ValueError("requires p < q")
    leading = alpha + m * p
    c, dropped = _geometric_series_terms(m, p / q, True, series_tol, leading)
    op = _telescoped(leading, 0.0, -1.0, c)
    return AffineOperator(terms=op.terms, dropped_tail=dropped)


def op_binb(variant: int, m: int, p: float, r: float, p_bar: float, series_tol: float = DEFAULT_SERIES_TOL) -> AffineOperator:
    """Stein operators for the convolution of Bi(m, p) and NB(r, p_bar).

    Variant 1 is the exact three-offset operator; variants 2-4 are the
    binomial-, negative-binomial- and Poisson-perturbation series forms and
    require p < q.
    """
    if m < 1 or not 0.0 < p < 1.0 or r <= 0 or not 0.0 < p_bar < 1.0:
        raise ValueError("invalid parameters")
    q = 1.0 - p
    q_bar = 1.0 - p_bar
    if variant == 1:
        return AffineOperator(
            terms=(
                (1, m * p + r * q * q_bar, q * q_bar - p),
                (2, p * q_bar * (r - m), p * q_bar),
                (0, 0.0, -q),
            )
        )
    if p >= q:
        raise ValueError("variants 2-4 require p < q")
    if variant == 2:
        # blocks r (q q_bar + p) q_bar^{m-1}
        scale = r * (q * q_bar + p) / q_bar
        leading = r * q_bar / p_bar + m * p
        c, dropped = _geometric_series_terms(scale, q_bar, False, series_tol, leading)
        op = _telescoped(leading, -p, -q, c)
        return AffineOperator(terms=op.terms, dropped_tail=dropped)
    if variant == 3:
        # blocks m (p/q + q_bar) (-1)^{mm+1} (p/q)^{mm-1}; one power of p/q moved into the ratio
        scale = m * (p / q + q_bar) * (q / p)
        leading = m * p * p_bar + r * q_bar
        c, dropped = _geometric_series_terms(scale, p / q, True, series_tol, leading)
        op = _telescoped(leading, q_bar, -1.0, c)
        return AffineOperator(terms=op.terms, dropped_tail=dropped)
    if variant == 4:
        leading = m * p + r * q_bar / p_bar
        c1, dropped1 = _geometric_series_terms(m, p / q, True, series_tol, leading)
        c2, dropped2 = _geometric_series_terms(r, q_bar, False, series_tol, leading)
        c = {mm: c1.get(mm, 0.0) + c2.get(mm, 0.0) for mm in set(c1) | set(c2)}
        op = _telescoped(leading, 0.0, -1.0, c)
        return AffineOperator(terms=op.terms, dropped_tail=dropped1 + dropped2)
    raise ValueError("variant must be 1, 2, 3 or 4")


def op_compound_panjer(a: float, b: float, severity: SeverityLaw) -> AffineOperator:
    """sum_l (a l + b j) g(j+l) p_l - (1 - b p_0) j g(j) for a Panjer-class count."""
    s = severity.masses
    terms = [(0, 0.0, -(1.0 - b * s[0]))]
    for l in range(1, s.size):
        if s[l] != 0.0:
            terms.append((l, a * l * float(s[l]), b * float(s[l])))
    return AffineOperator(terms=tuple(terms))


def op_compound_geometric(q: float, severity: SeverityLaw) -> AffineOperator:
    """q sum_m p_m g(j+m) - g(j); requires a severity with no mass at zero."""
    if not 0.0 < q < 1.0:
        raise ValueError("q must lie in (0, 1)")
    if severity.p0 != 0.0:
        raise ValueError("compound-geometric operator requires p_0 = 0")
    terms = [(0, -1.0, 0.0)]
    for mth in range(1, severity.masses.size):
        pm = float(severity.masses[mth])
        if pm != 0.0:
            terms.append((mth, q * pm, 0.0))
    return AffineOperator(terms=tuple(terms))


# ---------------------------------------------------------------------------
# characterisation check
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DefectReport:
    """E(Ag)(Y) on the truncated law plus a bound on truncation contamination."""

    defect: float
    truncation_bound: float


def characterization_defect(op, y: Pmf, g: TestFunction | np.ndarray) -> DefectReport:
    """|sum_j y_j (A g)(j)| over the truncated support of ``y``.

    The reported ``truncation_bound`` is ``tail_mass(y)`` times the largest
    evaluated |(A g)(j)|, an upper bound on the contribution the missing tail
    could have added.
    """
    j_max = y.support_end
    values = op.apply(g, j_max)
    defect = abs(math.fsum((y.masses * values).tolist()))
    contamination = y.tail_mass * float(np.max(np.abs(values))) if y.tail_mass > 0 else 0.0
    return DefectReport(defect=defect, truncation_bound=contamination)


def max_indicator_defect(op, y: Pmf, k_max: int | None = None) -> float:
    """Largest characterisation defect over the indicator basis g = 1{. = k}.

    ``k`` ranges over 1..k_max (default: the truncated support end, clipped to
    the operator's admissible test class).
    """
    if k_max is None:
        k_max = y.support_end
    if op.g_support_end is not None:
        k_max = min(k_max, op.g_support_end)
    size = k_max + 1
    worst = 0.0
    for k in range(1, k_max + 1):
        report = characterization_defect(op, y, TestFunction.indicator(k, size))
        worst = max(worst, report.defect)
    return worst
