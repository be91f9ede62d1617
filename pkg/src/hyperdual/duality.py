"""Executable checks of the quantum <-> classical identities.

Every identity is compared on totals (not per-spin densities): the quantum
side has N qubits, the dual classical model has |E| spins and N interaction
terms, and the two normalizations differ.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

from .classical import DEFAULT_EXACT_CAP, SpinModel, energy_moments_exact, heat_capacity_exact, log_partition_exact
from .gf2 import DEFAULT_ENUMERATION_CAP
from .hypergraph import Hypergraph, dual
from .quantum import build_css, fidelity, log_partition_q, magnetization

DEFAULT_BETAS = (0.1, 0.25, 0.5, 1.0, 2.0)
DEFAULT_DBETAS = (1e-1, 1e-2, 1e-3)
CONSTANT_TOL = 1e-10
MAGNETIZATION_TOL = 1e-10
# cubic decay with 20% slack in the exponent
SHRINK_EXPONENT = 3 * (1 - 0.2)
# residuals this small are at rounding level and are not required to keep shrinking
RESIDUAL_FLOOR = 1e-13


@dataclass
class IdentityCheck:
    name: str
    residual: float
    tolerance: float
    passed: bool


@dataclass
class CorrespondenceReport:
    beta_grid: list[float]
    log_ratio: list[float]
    max_deviation_from_constant: float
    expected_constant: float
    identity_checks: list[IdentityCheck] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.identity_checks)

    def to_dict(self) -> dict:
        return {**asdict(self), "passed": self.passed}


def verify_partition_correspondence(
    h: Hypergraph,
    betas: Sequence[float] = DEFAULT_BETAS,
    exact_cap: int = DEFAULT_EXACT_CAP,
    enumeration_cap: int = DEFAULT_ENUMERATION_CAP,
) -> CorrespondenceReport:
    """ln Z_cl(dual h) - ln Z_q(h) must equal |E| ln 2 at every beta."""
    model = SpinModel(dual(h))
    css = build_css(h, enumeration_cap)
    ratios = [log_partition_exact(model, b, exact_cap) - log_partition_q(css, b) for b in betas]
    expected = h.n_edges * math.log(2.0)
    spread = max(ratios) - min(ratios) if ratios else 0.0
    offset = max((abs(r - expected) for r in ratios), default=0.0)
    checks = [
        IdentityCheck("log_ratio_constant", spread, CONSTANT_TOL, spread <= CONSTANT_TOL),
        IdentityCheck("constant_equals_edges_ln2", offset, CONSTANT_TOL, offset <= CONSTANT_TOL),
    ]
    return CorrespondenceReport(list(betas), ratios, spread, expected, checks)


@dataclass
class FidelityReport:
    beta: float
    heat_capacity_dual: float
    dbetas: list[float]
    fidelity: list[float]
    quadratic: list[float]
    residuals: list[float]
    cubic_coefficient: float
    shrink_ratios: list[float]
    identity_checks: list[IdentityCheck] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.identity_checks)

    def to_dict(self) -> dict:
        return {**asdict(self), "passed": self.passed}


def verify_fidelity_heat_capacity(
    h: Hypergraph,
    beta: float,
    dbetas: Sequence[float] = DEFAULT_DBETAS,
    exact_cap: int = DEFAULT_EXACT_CAP,
    enumeration_cap: int = DEFAULT_ENUMERATION_CAP,
) -> FidelityReport:
    """Compare the exact fidelity with 1 - C_v dbeta^2 / (8 beta^2), C_v the dual's total heat capacity.

    Successive residuals must shrink at least like ``(dbeta ratio)^2.4``
    (cubic with 20% slack) until they reach rounding level.
    """
    if beta <= 0:
        raise ValueError(f"beta must be positive, got {beta}")
    css = build_css(h, enumeration_cap)
    cv = heat_capacity_exact(SpinModel(dual(h)), beta, exact_cap)
    fid = [fidelity(css, beta, d) for d in dbetas]
    quad = [1.0 - cv * d**2 / (8 * beta**2) for d in dbetas]
    res = [abs(f - q) for f, q in zip(fid, quad)]
    nonzero = [(r, d) for r, d in zip(res, dbetas) if d != 0]
    coeff = max((r / abs(d) ** 3 for r, d in nonzero), default=0.0)
    ratios = []
    checks = []
    for k in range(len(dbetas) - 1):
        d0, d1 = abs(dbetas[k]), abs(dbetas[k + 1])
        r0, r1 = res[k], res[k + 1]
        if d1 == 0 or d1 >= d0:
            continue
        ratio = r0 / r1 if r1 > 0 else math.inf
        ratios.append(ratio)
        needed = (d0 / d1) ** SHRINK_EXPONENT
        ok = ratio >= needed or r1 <= RESIDUAL_FLOOR
        checks.append(IdentityCheck(f"shrink_{d0:g}_to_{d1:g}", ratio, needed, ok))
    for d, r in zip(dbetas, res):
        if d == 0:
            checks.append(IdentityCheck("zero_step", r, 0.0, r == 0.0))
    return FidelityReport(beta, cv, list(dbetas), fid, quad, res, coeff, ratios, checks)


@dataclass
class MagnetizationReport:
    beta_grid: list[float]
    total_magnetization: list[float]
    dual_energy: list[float]
    residuals: list[float]
    identity_checks: list[IdentityCheck] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.identity_checks)

    def to_dict(self) -> dict:
        return {**asdict(self), "passed": self.passed}


def verify_magnetization_energy(
    h: Hypergraph,
    betas: Sequence[float] = DEFAULT_BETAS,
    exact_cap: int = DEFAULT_EXACT_CAP,
    enumeration_cap: int = DEFAULT_ENUMERATION_CAP,
) -> MagnetizationReport:
    """N · m_H(beta) + <E>_cl(dual h, beta) must vanish pointwise."""
    css = build_css(h, enumeration_cap)
    model = SpinModel(dual(h))
    mags = [h.n_vertices * magnetization(css, b) for b in betas]
    energies = [energy_moments_exact(model, b, exact_cap)[0] for b in betas]
    res = [abs(m + e) for m, e in zip(mags, energies)]
    worst = max(res, default=0.0)
    checks = [IdentityCheck("magnetization_equals_minus_energy", worst, MAGNETIZATION_TOL, worst <= MAGNETIZATION_TOL)]
    return MagnetizationReport(list(betas), mags, energies, res, checks)
