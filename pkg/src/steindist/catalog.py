"""Default verification grid pairing every operator with its exact law.

Shared by the operator-check CLI command and the acceptance suite.  Rates
sweep {0.5, 1, 5}, the binomial-type parameters sweep {(5, 0.1), (10, 0.2)},
the negative-binomial parameters sweep {(1, 0.5), (2, 0.6)}, and the summand
laws have support of at most four points.
"""

from __future__ import annotations

from typing import Iterator, NamedTuple

import numpy as np

from . import operators as ops
from .distributions import (
    PanjerCounting,
    Pmf,
    SeverityLaw,
    convolve,
    pmf_bcp,
    pmf_binomial,
    pmf_compound_panjer,
    pmf_negative_binomial,
    pmf_poisson,
    pmf_pseudo_binomial,
)

RATES = (0.5, 1.0, 5.0)
BINOMIAL_PARAMS = ((5, 0.1), (10, 0.2))
NB_PARAMS = ((1.0, 0.5), (2.0, 0.6))

SEV_SHIFTED = SeverityLaw(np.array([0.0, 0.5, 0.3, 0.2]))  # support {1, 2, 3}
SEV_WIDE = SeverityLaw(np.array([0.0, 0.25, 0.25, 0.25, 0.25]))  # support {1..4}
SEV_WITH_ZERO = SeverityLaw(np.array([0.2, 0.5, 0.2, 0.1]))  # mass at zero allowed
SEV_UNIT = SeverityLaw(np.array([0.0, 1.0]))  # degenerate at 1


class CatalogEntry(NamedTuple):
    name: str
    operator: object
    law: Pmf


def _compound_poisson_law(lam: float, severity: SeverityLaw, tol: float) -> Pmf:
    return pmf_compound_panjer(PanjerCounting.poisson(lam), severity, tol)


def catalog_grid(tol: float = 1e-12) -> Iterator[CatalogEntry]:
    for lam in RATES:
        yield CatalogEntry(f"poisson(lam={lam})", ops.op_poisson(lam), pmf_poisson(lam, tol))
    yield CatalogEntry(
        "generic_ratio(poisson(1))", ops.op_generic_ratio(pmf_poisson(1.0, tol)), pmf_poisson(1.0, tol)
    )
    yield CatalogEntry(
        "generic_ratio(nb(2,0.6))",
        ops.op_generic_ratio(pmf_negative_binomial(2.0, 0.6, tol)),
        pmf_negative_binomial(2.0, 0.6, tol),
    )
    for m, p in BINOMIAL_PARAMS:
        yield CatalogEntry(
            f"pseudo_binomial(m={m},p={p})", ops.op_pseudo_binomial(m, p), pmf_binomial(m, p, tol)
        )
    yield CatalogEntry(
        "pseudo_binomial(m=4.5,p=0.3)",
        ops.op_pseudo_binomial(4.5, 0.3),
        pmf_pseudo_binomial(4.5, 0.3, tol),
    )
    for r, p_bar in NB_PARAMS:
        yield CatalogEntry(
            f"negative_binomial(r={r},p_bar={p_bar})",
            ops.op_negative_binomial(r, p_bar),
            pmf_negative_binomial(r, p_bar, tol),
        )
    for lam in RATES:
        for tag, sev in (("shifted", SEV_SHIFTED), ("wide", SEV_WIDE)):
            lambdas = lam * sev.masses[1:]
            yield CatalogEntry(
                f"compound_poisson(lam={lam},sev={tag})",
                ops.op_compound_poisson(lambdas),
                _compound_poisson_law(lam, sev, tol),
            )
    for m, p in BINOMIAL_PARAMS:
        lambdas = 1.0 * SEV_SHIFTED.masses[1:]
        law = convolve(pmf_binomial(m, p, tol), _compound_poisson_law(1.0, SEV_SHIFTED, tol))
        yield CatalogEntry(f"bi_cp(m={m},p={p})", ops.op_bi_cp(m, p, lambdas), law)
    for r, p_bar in NB_PARAMS:
        lambdas = 1.0 * SEV_SHIFTED.masses[1:]
        law = convolve(
            pmf_negative_binomial(r, p_bar, tol), _compound_poisson_law(1.0, SEV_SHIFTED, tol)
        )
        yield CatalogEntry(f"nb_cp(r={r},p_bar={p_bar})", ops.op_nb_cp(r, p_bar, lambdas), law)
    for m, p in BINOMIAL_PARAMS:
        for alpha in (0.5, 1.0):
            law = pmf_bcp(m, p, alpha, tol)
            yield CatalogEntry(
                f"bcp_binomial_perturbation(m={m},p={p},alpha={alpha})",
                ops.op_bcp_binomial_perturbation(m, p, alpha),
                law,
            )
            yield CatalogEntry(
                f"bcp_poisson_perturbation(m={m},p={p},alpha={alpha})",
                ops.op_bcp_poisson_perturbation(m, p, alpha),
                law,
            )
    for (m, p), (r, p_bar) in zip(BINOMIAL_PARAMS, NB_PARAMS):
        law = convolve(pmf_binomial(m, p, tol), pmf_negative_binomial(r, p_bar, tol))
        for variant in (1, 2, 3, 4):
            yield CatalogEntry(
                f"binb(variant={variant},m={m},p={p},r={r},p_bar={p_bar})",
                ops.op_binb(variant, m, p, r, p_bar),
                law,
            )
    for tag, counting in (
        ("poisson(1)", PanjerCounting.poisson(1.0)),
        ("binomial(5,0.2)", PanjerCounting.binomial(5, 0.2)),
        ("nb(2,0.6)", PanjerCounting.negative_binomial(2.0, 0.6)),
    ):
        for sev_tag, sev in (("with_zero", SEV_WITH_ZERO), ("unit", SEV_UNIT)):
            yield CatalogEntry(
                f"compound_panjer({tag},sev={sev_tag})",
                ops.op_compound_panjer(counting.a, counting.b, sev),
                pmf_compound_panjer(counting, sev, tol),
            )
    yield CatalogEntry(
        "compound_geometric(q=0.5)",
        ops.op_compound_geometric(0.5, SEV_SHIFTED),
        pmf_compound_panjer(PanjerCounting.negative_binomial(1.0, 0.5), SEV_SHIFTED, tol),
    )


def run_catalog_check(threshold: float = 1e-9, tol: float = 1e-12) -> list[dict]:
    """Max indicator-basis defect for every grid entry; one record per pair."""
    records = []
    for entry in catalog_grid(tol):
        worst = ops.max_indicator_defect(entry.operator, entry.law)
        records.append(
            {
                "operator": entry.name,
                "max_defect": worst,
                "threshold": threshold,
                "ok": bool(worst <= threshold),
            }
        )
    return records
