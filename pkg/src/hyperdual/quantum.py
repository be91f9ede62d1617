"""CSS states on hypergraphs, their beta-deformation, and dense verification of their deformed parent Hamiltonian.

Two representations are used. Thermodynamic quantities (normalization,
fidelity, magnetization) only need the Hamming-weight histogram of the span
of the hyperedge indicators, which scales to span dimension ~30. Dense
statevectors and operators are built only for verification at small N.

Computational basis convention: basis index ``i`` has qubit ``q`` in bit
position ``N - 1 - q``, so qubit 0 is the most significant bit.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from functools import cached_property

import numpy as np
import scipy.linalg
from scipy.special import logsumexp

from .errors import HypergraphError, check_cap
from .gf2 import DEFAULT_ENUMERATION_CAP, BitVector, independent_subset, span_weight_counts
from .hypergraph import Hypergraph, StabilizerSpec, identify_family, stabilizer_spec, toric_code

DEFAULT_DENSE_CAP = 12
GROUND_TOL = 1e-10
DEGENERACY_TOL = 1e-8

LN2 = math.log(2.0)


@dataclass(frozen=True, eq=False)
class CssState:
    """Uniform superposition over the span of the hyperedge indicators (amplitude 2^{-M/2})."""

    hypergraph: Hypergraph
    span_basis: tuple[BitVector, ...]
    spec: StabilizerSpec
    enumeration_cap: int = DEFAULT_ENUMERATION_CAP

    @property
    def n_qubits(self) -> int:
        return self.hypergraph.n_vertices

    @property
    def m(self) -> int:
        return len(self.span_basis)

    @property
    def k(self) -> int:
        return self.spec.k

    @cached_property
    def weight_counts(self) -> np.ndarray:
        return span_weight_counts(self.span_basis, self.n_qubits, cap=self.enumeration_cap)

    def _magnetization_terms(self) -> tuple[np.ndarray, np.ndarray]:
        """Total magnetization N - 2w and its multiplicity, for weights present in the span."""
        counts = self.weight_counts
        w = np.flatnonzero(counts)
        return (self.n_qubits - 2 * w).astype(float), counts[w].astype(float)


def build_css(h: Hypergraph, enumeration_cap: int = DEFAULT_ENUMERATION_CAP) -> CssState:
    spec = stabilizer_spec(h)
    chosen = independent_subset(spec.x_type)
    return CssState(h, tuple(spec.x_type[i] for i in chosen), spec, enumeration_cap)


def log_partition_q(css: CssState, beta: float) -> float:
    """ln of <CSS| exp(beta Σ Z) |CSS>, accumulated in log space."""
    mag, mult = css._magnetization_terms()
    return float(logsumexp(beta * mag, b=mult)) - css.m * LN2


def _weights(css: CssState, beta: float) -> tuple[np.ndarray, np.ndarray]:
    mag, mult = css._magnetization_terms()
    a = beta * mag + np.log(mult)
    p = np.exp(a - a.max())
    return mag, p / p.sum()


def magnetization(css: CssState, beta: float) -> float:
    """<Σ Z>/N in the deformed ground state, from the exact weighted sum."""
    mag, p = _weights(css, beta)
    return float(np.dot(p, mag)) / css.n_qubits


def log_partition_derivatives(css: CssState, beta: float) -> tuple[float, float, float]:
    """Exact first three beta-derivatives of ``log_partition_q`` (cumulants of Σ Z)."""
    mag, p = _weights(css, beta)
    mean = float(np.dot(p, mag))
    d = mag - mean
    return mean, float(np.dot(p, d**2)), float(np.dot(p, d**3))


def fidelity(css: CssState, beta: float, dbeta: float) -> float:
    f = lambda b: log_partition_q(css, b)  # noqa: E731
    return math.exp(f(beta + dbeta / 2) - 0.5 * f(beta) - 0.5 * f(beta + dbeta))


def second_derivative_fd(css: CssState, beta: float) -> float:
    """f''(beta) by central differences, step 1e-4·max(1, beta), one Richardson level."""
    step = 1e-4 * max(1.0, abs(beta))
    f0 = log_partition_q(css, beta)

    def central(hh: float) -> float:
        return (log_partition_q(css, beta + hh) - 2 * f0 + log_partition_q(css, beta - hh)) / hh**2

    return (4 * central(step / 2) - central(step)) / 3


def quadratic_fidelity(css: CssState, beta: float, dbeta: float) -> float:
    """Second-order expansion 1 - f''(beta) dbeta^2 / 8 of :func:`fidelity`."""
    if beta <= 0:
        raise ValueError(f"beta must be positive, got {beta}")
    if dbeta == 0:
        return 1.0
    return 1.0 - second_derivative_fd(css, beta) * dbeta**2 / 8


@dataclass(frozen=True, eq=False)
class DeformedGroundState:
    css: CssState
    beta: float
    log_z: float

    def statevector(self, dense_cap: int = DEFAULT_DENSE_CAP) -> np.ndarray:
        return deformed_statevector(self.css, self.beta, dense_cap=dense_cap)


def deformed_ground_state(css: CssState, beta: float) -> DeformedGroundState:
    if not math.isfinite(beta):
        raise ValueError("beta must be finite")
    return DeformedGroundState(css, beta, log_partition_q(css, beta))


# --- dense verification -----------------------------------------------------


def qubit_mask(v: BitVector) -> int:
    """Basis-index mask of a qubit support (qubit 0 is the most significant bit)."""
    n = v.length
    mask = 0
    for q in v.indices():
        mask |= 1 << (n - 1 - q)
    return mask


def _indices(n: int) -> np.ndarray:
    return np.arange(1 << n, dtype=np.int64)


def z_signs(n: int, mask: int) -> np.ndarray:
    """Diagonal of the Z-product with basis-index mask ``mask``."""
    parity = (np.bitwise_count(_indices(n) & mask) & 1).astype(np.int64)
    return 1.0 - 2.0 * parity


@dataclass(frozen=True)
class PauliProduct:
    """``phase · X^{x_support} Z^{z_support}`` (Z applied first)."""

    x_support: BitVector
    z_support: BitVector
    phase: int = 1

    def __post_init__(self) -> None:
        if self.x_support.length != self.z_support.length:
            raise ValueError("supports must have equal length")
        if self.phase not in (1, -1):
            raise ValueError("phase must be +1 or -1")

    @classmethod
    def x_type(cls, support: BitVector) -> PauliProduct:
        return cls(support, BitVector.zeros(support.length))

    @classmethod
    def z_type(cls, support: BitVector) -> PauliProduct:
        return cls(BitVector.zeros(support.length), support)

    @property
    def n_qubits(self) -> int:
        return self.x_support.length

    def to_dense(self, dense_cap: int = DEFAULT_DENSE_CAP) -> np.ndarray:
        n = self.n_qubits
        check_cap(n, dense_cap, "qubit count")
        idx = _indices(n)
        out = np.zeros((1 << n, 1 << n))
        out[idx ^ qubit_mask(self.x_support), idx] = self.phase * z_signs(n, qubit_mask(self.z_support))
        return out

    def apply(self, psi: np.ndarray) -> np.ndarray:
        n = self.n_qubits
        idx = _indices(n)
        out = np.empty_like(psi)
        out[idx ^ qubit_mask(self.x_support)] = self.phase * z_signs(n, qubit_mask(self.z_support)) * psi
        return out


def _span_indices(basis: tuple[BitVector, ...], n: int, offset: int = 0) -> np.ndarray:
    masks = [qubit_mask(b) for b in basis]
    out = np.empty(1 << len(masks), dtype=np.int64)
    out[0] = offset
    cur = offset
    for i in range(1, len(out)):
        cur ^= masks[(i & -i).bit_length() - 1]
        out[i] = cur
    return out


def coset_statevector(
    css: CssState, beta: float, shift: BitVector | None = None, dense_cap: int = DEFAULT_DENSE_CAP
) -> np.ndarray:
    """Normalized ``exp(beta/2 Σ Z)`` applied to the uniform superposition over ``span ⊕ shift``."""
    n = css.n_qubits
    check_cap(n, dense_cap, "qubit count")
    offset = 0 if shift is None else qubit_mask(shift)
    idx = _span_indices(css.span_basis, n, offset)
    weight = np.bitwise_count(idx).astype(np.int64)
    log_amp = 0.5 * beta * (n - 2 * weight)
    amp = np.exp(log_amp - log_amp.max())
    psi = np.zeros(1 << n)
    psi[idx] = amp
    return psi / np.linalg.norm(psi)


def css_statevector(css: CssState, dense_cap: int = DEFAULT_DENSE_CAP) -> np.ndarray:
    return coset_statevector(css, 0.0, dense_cap=dense_cap)


def deformed_statevector(css: CssState, beta: float, dense_cap: int = DEFAULT_DENSE_CAP) -> np.ndarray:
    return coset_statevector(css, beta, dense_cap=dense_cap)


def u_diagonal(edge: BitVector, beta: float) -> np.ndarray:
    """Diagonal of ∏_{i∈e} exp(-beta Z_i), built as ∏ (cosh beta - sinh beta Z_i)."""
    n = edge.length
    c, s = math.cosh(beta), math.sinh(beta)
    diag = np.ones(1 << n)
    for q in edge.indices():
        diag *= c - s * z_signs(n, 1 << (n - 1 - q))
    return diag


def build_cssm_hamiltonian(
    h: Hypergraph,
    beta: float,
    z_terms: tuple[BitVector, ...] | None = None,
    dense_cap: int = DEFAULT_DENSE_CAP,
) -> np.ndarray:
    """Dense ``-Σ B_{e*} - Σ A_e + Σ U_e(beta)``.

    ``z_terms`` defaults to the orthogonal-hyperedge basis of ``h``; pass a
    different set to build the local or extended variants.
    """
    n = h.n_vertices
    check_cap(n, dense_cap, "qubit count")
    spec = stabilizer_spec(h)
    if z_terms is None:
        z_terms = spec.z_type
    dim = 1 << n
    idx = _indices(n)
    ham = np.zeros((dim, dim))
    diag = np.zeros(dim)
    for z in z_terms:
        diag -= z_signs(n, qubit_mask(z))
    for x in spec.x_type:
        ham[idx ^ qubit_mask(x), idx] -= 1.0
        diag += u_diagonal(x, beta)
    ham[idx, idx] += diag
    return ham


def q_operator(edge: BitVector, beta: float, dense_cap: int = DEFAULT_DENSE_CAP) -> np.ndarray:
    """Dense ``U_e(beta) - A_e``."""
    return np.diag(u_diagonal(edge, beta)) - PauliProduct.x_type(edge).to_dense(dense_cap)


@dataclass
class GroundStateReport:
    beta: float
    k: int
    max_q_residual: float
    max_b_residual: float
    energy: float
    min_eigenvalue: float
    gap: float
    tolerance: float = GROUND_TOL

    @property
    def passed(self) -> bool:
        return (
            self.max_q_residual < self.tolerance
            and self.max_b_residual < self.tolerance
            and abs(self.energy + self.k) < self.tolerance
            and abs(self.min_eigenvalue + self.k) < 1e-8
        )

    def to_dict(self) -> dict:
        return {**asdict(self), "passed": self.passed}


def verify_ground_state(h: Hypergraph, beta: float, dense_cap: int = DEFAULT_DENSE_CAP) -> GroundStateReport:
    """Check that the deformed CSS state is the ground state of the deformed parent Hamiltonian."""
    check_cap(h.n_vertices, dense_cap, "qubit count")
    css = build_css(h)
    psi = deformed_statevector(css, beta, dense_cap)
    q_res = max(
        (float(np.linalg.norm(q_operator(x, beta, dense_cap) @ psi)) for x in css.spec.x_type),
        default=0.0,
    )
    b_res = max(
        (float(np.linalg.norm(PauliProduct.z_type(z).apply(psi) - psi)) for z in css.spec.z_type),
        default=0.0,
    )
    ham = build_cssm_hamiltonian(h, beta, dense_cap=dense_cap)
    energy = float(psi @ ham @ psi)
    dim = ham.shape[0]
    low = scipy.linalg.eigh(ham, eigvals_only=True, subset_by_index=[0, min(1, dim - 1)])
    gap = float(low[1] - low[0]) if dim > 1 else math.inf
    return GroundStateReport(beta, css.k, q_res, b_res, energy, float(low[0]), gap)


@dataclass
class DegeneracyReport:
    family: str
    beta: float
    drop_nonlocal: bool
    ground_energy: float
    dimension: int
    sector_residuals: list[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def _family_terms(h: Hypergraph) -> tuple[str, tuple[BitVector, ...], tuple[BitVector, ...], tuple[BitVector, ...]]:
    """(family, local Z terms, non-local Z terms, X-logical coset shifts)."""
    found = identify_family(h)
    if found is None:
        raise HypergraphError("degenerate ground space is defined only for ghz_ring and toric_code hypergraphs")
    family, size = found
    n = h.n_vertices
    if family == "ghz_ring":
        all_ones = BitVector.from_indices(n, range(n))
        return family, (), (all_ones,), (BitVector.zeros(n), BitVector.from_indices(n, [0]))
    _, ops = toric_code(size)
    shifts = (BitVector.zeros(n), ops.t_x1, ops.t_x2, ops.t_x1 ^ ops.t_x2)
    return family, ops.plaquettes, (ops.t_z1, ops.t_z2), shifts


def degenerate_ground_space(
    h: Hypergraph, beta: float, drop_nonlocal: bool, dense_cap: int = DEFAULT_DENSE_CAP
) -> DegeneracyReport:
    """Ground-space dimension of the deformed parent Hamiltonian with or without its non-local Z terms.

    For ``ghz_ring`` the only Z term is the all-qubit product; for
    ``toric_code`` the Z terms are the plaquettes plus the two Z loops, and
    only the loops are dropped. ``sector_residuals`` holds
    ``‖(H - E0) ψ‖`` for the deformed logical sector states (one per
    X-logical coset), so dropped-term runs show all of them in the ground
    space and full runs only the first.
    """
    check_cap(h.n_vertices, dense_cap, "qubit count")
    family, local, nonlocal_, shifts = _family_terms(h)
    z_terms = local if drop_nonlocal else local + nonlocal_
    ham = build_cssm_hamiltonian(h, beta, z_terms=z_terms, dense_cap=dense_cap)
    evals = np.linalg.eigvalsh(ham)
    e0 = float(evals[0])
    dimension = int(np.count_nonzero(evals - e0 < DEGENERACY_TOL))
    css = build_css(h)
    residuals = []
    for shift in shifts:
        psi = coset_statevector(css, beta, shift, dense_cap)
        residuals.append(float(np.linalg.norm(ham @ psi - e0 * psi)))
    return DegeneracyReport(family, beta, drop_nonlocal, e0, dimension, residuals)
