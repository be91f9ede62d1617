"""Classical ferromagnets on hypergraphs: E(s) = -Σ_edges ∏_{i∈edge} s_i, with J = k_B = 1.

Three routes to the thermodynamics:

* exact enumeration of all 2^n configurations (Gray-code walk building the
  joint energy/magnetization density of states),
* the closed-form transfer matrix of the periodic chain,
* Metropolis or Wolff Monte Carlo with binning error analysis.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from numba import njit
from scipy.special import logsumexp

from .errors import check_cap
from .hypergraph import Hypergraph

log = logging.getLogger(__name__)

DEFAULT_EXACT_CAP = 24


@dataclass(frozen=True, eq=False)
class SpinModel:
    """Spins on the vertices of ``interactions``, one coupling term per hyperedge."""

    interactions: Hypergraph

    @property
    def n_spins(self) -> int:
        return self.interactions.n_vertices

    @property
    def n_terms(self) -> int:
        return self.interactions.n_edges

    @property
    def is_two_body(self) -> bool:
        return all(len(e) == 2 for e in self.interactions.edges)

    @cached_property
    def edge_csr(self) -> tuple[np.ndarray, np.ndarray]:
        edges = self.interactions.edges
        ptr = np.zeros(len(edges) + 1, dtype=np.int64)
        ptr[1:] = np.cumsum([len(e) for e in edges])
        idx = np.array([v for e in edges for v in e], dtype=np.int64)
        return ptr, idx

    @cached_property
    def vertex_csr(self) -> tuple[np.ndarray, np.ndarray]:
        """For each spin, the indices of the terms it appears in."""
        incident: list[list[int]] = [[] for _ in range(self.n_spins)]
        for k, e in enumerate(self.interactions.edges):
            for v in e:
                incident[v].append(k)
        ptr = np.zeros(self.n_spins + 1, dtype=np.int64)
        ptr[1:] = np.cumsum([len(x) for x in incident])
        idx = np.array([k for x in incident for k in x], dtype=np.int64)
        return ptr, idx

    @cached_property
    def neighbor_csr(self) -> tuple[np.ndarray, np.ndarray]:
        """Bond partners per spin for two-body models (repeated bonds repeat the partner)."""
        if not self.is_two_body:
            raise ValueError("neighbor lists are defined only for two-body models")
        nbrs: list[list[int]] = [[] for _ in range(self.n_spins)]
        for a, b in self.interactions.edges:
            nbrs[a].append(b)
            nbrs[b].append(a)
        ptr = np.zeros(self.n_spins + 1, dtype=np.int64)
        ptr[1:] = np.cumsum([len(x) for x in nbrs])
        idx = np.array([j for x in nbrs for j in x], dtype=np.int64)
        return ptr, idx

    def energy(self, spins: np.ndarray) -> float:
        s = np.asarray(spins)
        return -float(sum(np.prod(s[list(e)]) for e in self.interactions.edges))


@dataclass(frozen=True)
class Observables:
    """Per-spin estimates and their standard errors (zero for exact results)."""

    energy: float
    energy_err: float
    heat_capacity: float
    heat_capacity_err: float
    magnetization: float
    magnetization_err: float
    binder: float
    binder_err: float
    n_samples: int = 0


# --- exact enumeration ------------------------------------------------------


@njit(cache=True, nogil=True)
def _dos_kernel(n, n_terms, vert_ptr, vert_idx):
    counts = np.zeros((2 * n_terms + 1, 2 * n + 1), dtype=np.int64)
    spins = np.ones(n, dtype=np.int64)
    prods = np.ones(n_terms, dtype=np.int64)
    energy = -n_terms
    mag = n
    counts[energy + n_terms, mag + n] += 1
    total = np.int64(1) << n
    for i in range(1, total):
        j = 0
        while (i >> j) & 1 == 0:
            j += 1
        for k in range(vert_ptr[j], vert_ptr[j + 1]):
            e = vert_idx[k]
            energy += 2 * prods[e]
            prods[e] = -prods[e]
        mag -= 2 * spins[j]
        spins[j] = -spins[j]
        counts[energy + n_terms, mag + n] += 1
    return counts


def density_of_states(model: SpinModel, cap: int = DEFAULT_EXACT_CAP) -> np.ndarray:
    """Configuration counts ``g[E + n_terms, M + n_spins]`` over all 2^n spin states."""
    check_cap(model.n_spins, cap, "spin count")
    cached = model.__dict__.get("_dos")
    if cached is None:
        ptr, idx = model.vertex_csr
        cached = _dos_kernel(model.n_spins, model.n_terms, ptr, idx)
        cached.setflags(write=False)
        model.__dict__["_dos"] = cached
    return cached


def _exact_distribution(model: SpinModel, beta: float, cap: int):
    g = density_of_states(model, cap)
    e_idx, m_idx = np.nonzero(g)
    energy = (e_idx - model.n_terms).astype(float)
    mag = (m_idx - model.n_spins).astype(float)
    a = np.log(g[e_idx, m_idx].astype(float)) - beta * energy
    log_z = float(logsumexp(a))
    p = np.exp(a - log_z)
    return log_z, energy, mag, p


def log_partition_exact(model: SpinModel, beta: float, cap: int = DEFAULT_EXACT_CAP) -> float:
    return _exact_distribution(model, beta, cap)[0]


def energy_moments_exact(model: SpinModel, beta: float, cap: int = DEFAULT_EXACT_CAP) -> tuple[float, float]:
    """Total ``<E>`` and ``Var(E)``."""
    _, energy, _, p = _exact_distribution(model, beta, cap)
    mean = float(np.dot(p, energy))
    return mean, float(np.dot(p, (energy - mean) ** 2))


def heat_capacity_exact(model: SpinModel, beta: float, cap: int = DEFAULT_EXACT_CAP) -> float:
    """Total heat capacity beta^2 Var(E)."""
    return beta**2 * energy_moments_exact(model, beta, cap)[1]


def observables_exact(model: SpinModel, beta: float, cap: int = DEFAULT_EXACT_CAP) -> Observables:
    _, energy, mag, p = _exact_distribution(model, beta, cap)
    n = model.n_spins
    mean_e = float(np.dot(p, energy))
    var_e = float(np.dot(p, (energy - mean_e) ** 2))
    m = mag / n
    m2 = float(np.dot(p, m**2))
    m4 = float(np.dot(p, m**4))
    return Observables(
        energy=mean_e / n,
        energy_err=0.0,
        heat_capacity=beta**2 * var_e / n,
        heat_capacity_err=0.0,
        magnetization=float(np.dot(p, np.abs(m))),
        magnetization_err=0.0,
        binder=1.0 - m4 / (3.0 * m2**2),
        binder_err=0.0,
    )


# --- periodic chain ---------------------------------------------------------


def transfer_matrix_ring(n: int, beta: float) -> tuple[float, float, float]:
    """Closed-form ``(ln Z, <E>, C)`` (totals) of the periodic n-spin chain.

    Z = λ₊ⁿ + λ₋ⁿ with λ₊ = 2 cosh β and λ₋ = 2 sinh β.
    """
    if n < 2:
        raise ValueError(f"ring needs n >= 2, got {n}")
    r = math.tanh(beta)
    rn = r**n
    log_z = n * math.log(2 * math.cosh(beta)) + math.log1p(rn)
    g = (r + r ** (n - 1)) / (1 + rn)
    dg = ((1 + (n - 1) * r ** (n - 2)) * (1 + rn) - (r + r ** (n - 1)) * n * r ** (n - 1)) / (1 + rn) ** 2
    energy = -n * g
    heat_capacity = beta**2 * n * dg * (1 - r * r)
    return log_z, energy, heat_capacity


def _ring_up_spin_weights(n: int, beta: float) -> np.ndarray:
    """Relative Boltzmann weight of each up-spin count 0..n on the periodic chain."""
    scale = 2 * math.cosh(beta)
    a, b = math.exp(beta) / scale, math.exp(-beta) / scale
    # T[s, s'] carries x^{[s' = up]}; index 0 = up
    step = np.zeros((2, 2, n + 1))
    step[0, 0, 1] = a
    step[1, 0, 1] = b
    step[0, 1, 0] = b
    step[1, 1, 0] = a
    acc = step.copy()
    for _ in range(n - 1):
        nxt = np.zeros_like(acc)
        for i in range(2):
            for j in range(2):
                for k in range(2):
                    nxt[i, j] += np.convolve(acc[i, k], step[k, j])[: n + 1]
        acc = nxt
    return acc[0, 0] + acc[1, 1]


def ring_observables(n: int, beta: float) -> Observables:
    """Exact per-spin observables of the periodic chain from transfer matrices."""
    _, energy, heat_capacity = transfer_matrix_ring(n, beta)
    w = _ring_up_spin_weights(n, beta)
    p = w / w.sum()
    m = (2 * np.arange(n + 1) - n) / n
    m2 = float(np.dot(p, m**2))
    m4 = float(np.dot(p, m**4))
    return Observables(
        energy=energy / n,
        energy_err=0.0,
        heat_capacity=heat_capacity / n,
        heat_capacity_err=0.0,
        magnetization=float(np.dot(p, np.abs(m))),
        magnetization_err=0.0,
        binder=1.0 - m4 / (3.0 * m2**2),
        binder_err=0.0,
    )


# --- Monte Carlo ------------------------------------------------------------


@dataclass(frozen=True)
class McParams:
    n_equil: int = 10_000
    n_sweeps: int = 100_000
    measure_every: int = 1
    algorithm: str = "auto"  # auto | metropolis | wolff
    min_bins: int = 32

    def __post_init__(self) -> None:
        for name in ("n_equil", "n_sweeps", "measure_every", "min_bins"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if self.algorithm not in ("auto", "metropolis", "wolff"):
            raise ValueError(f"unknown algorithm {self.algorithm!r}")


@njit(cache=True, nogil=True)
def _random_spins(n):
    spins = np.empty(n, dtype=np.int64)
    for i in range(n):
        spins[i] = 1 if np.random.random() < 0.5 else -1
    return spins


@njit(cache=True, nogil=True)
def _total_energy(spins, edge_ptr, edge_idx):
    energy = 0
    for e in range(len(edge_ptr) - 1):
        p = 1
        for k in range(edge_ptr[e], edge_ptr[e + 1]):
            p *= spins[edge_idx[k]]
        energy -= p
    return energy


@njit(cache=True, nogil=True)
def _metropolis_chain(n, edge_ptr, edge_idx, vert_ptr, vert_idx, beta, n_equil, n_meas, every, seed, energies, mags):
    np.random.seed(seed)
    spins = _random_spins(n)
    n_terms = len(edge_ptr) - 1
    prods = np.empty(n_terms, dtype=np.int64)
    for e in range(n_terms):
        p = 1
        for k in range(edge_ptr[e], edge_ptr[e + 1]):
            p *= spins[edge_idx[k]]
        prods[e] = p
    energy = -np.sum(prods)
    mag = np.sum(spins)
    max_deg = 0
    for i in range(n):
        max_deg = max(max_deg, vert_ptr[i + 1] - vert_ptr[i])
    # acceptance probability indexed by local field sum + max_deg; dE = 2 * local
    accept = np.empty(2 * max_deg + 1)
    for s in range(-max_deg, max_deg + 1):
        accept[s + max_deg] = math.exp(-2.0 * beta * s) if s > 0 else 1.0
    total = n_equil + n_meas * every
    k_meas = 0
    for sweep in range(total):
        # random-site order: a fixed sequential order is not ergodic on frustrated loops
        for _ in range(n):
            i = np.random.randint(0, n)
            local = 0
            for k in range(vert_ptr[i], vert_ptr[i + 1]):
                local += prods[vert_idx[k]]
            if local <= 0 or np.random.random() < accept[local + max_deg]:
                for k in range(vert_ptr[i], vert_ptr[i + 1]):
                    prods[vert_idx[k]] = -prods[vert_idx[k]]
                energy += 2 * local
                mag -= 2 * spins[i]
                spins[i] = -spins[i]
        if sweep >= n_equil and (sweep - n_equil) % every == every - 1:
            energies[k_meas] = energy
            mags[k_meas] = mag
            k_meas += 1


@njit(cache=True, nogil=True)
def _wolff_cluster(spins, nb_ptr, nb_idx, p_add, stack):
    n = len(spins)
    site = np.random.randint(0, n)
    s0 = spins[site]
    spins[site] = -s0
    stack[0] = site
    top = 1
    size = 1
    while top > 0:
        top -= 1
        i = stack[top]
        for k in range(nb_ptr[i], nb_ptr[i + 1]):
            j = nb_idx[k]
            if spins[j] == s0 and np.random.random() < p_add:
                spins[j] = -s0
                stack[top] = j
                top += 1
                size += 1
    return size


@njit(cache=True, nogil=True)
def _wolff_chain(n, edge_ptr, edge_idx, nb_ptr, nb_idx, beta, n_equil, n_meas, every, seed, energies, mags):
    np.random.seed(seed)
    spins = _random_spins(n)
    p_add = 1.0 - math.exp(-2.0 * beta)
    stack = np.empty(n, dtype=np.int64)
    # equilibration sweeps flip clusters until n spins have been flipped; the
    # mean cluster size seen there fixes the cluster count of every measured
    # sweep (a size-dependent stopping rule would bias the measurements)
    n_clusters = 0
    n_flipped = 0
    for sweep in range(n_equil):
        flipped = 0
        while flipped < n:
            flipped += _wolff_cluster(spins, nb_ptr, nb_idx, p_add, stack)
            n_clusters += 1
        n_flipped += flipped
    per_sweep = max(1, int(round(n * n_clusters / n_flipped))) if n_flipped > 0 else 1
    k_meas = 0
    for sweep in range(n_meas * every):
        for _ in range(per_sweep):
            _wolff_cluster(spins, nb_ptr, nb_idx, p_add, stack)
        if sweep % every == every - 1:
            energies[k_meas] = _total_energy(spins, edge_ptr, edge_idx)
            mags[k_meas] = np.sum(spins)
            k_meas += 1


def chain_seed(seed: int) -> int:
    """32-bit seed for the compiled chain, hashed from a 64-bit task seed."""
    return int(np.random.SeedSequence(seed).generate_state(1, dtype=np.uint32)[0])


def run_chain(model: SpinModel, beta: float, params: McParams, seed: int) -> tuple[np.ndarray, np.ndarray, str]:
    """Raw per-measurement total energy and magnetization series, and the algorithm used."""
    if beta < 0:
        raise ValueError(f"beta must be non-negative, got {beta}")
    algorithm = params.algorithm
    if algorithm == "auto":
        algorithm = "wolff" if model.is_two_body else "metropolis"
    elif algorithm == "wolff" and not model.is_two_body:
        warnings.warn("Wolff updates need two-body interactions; falling back to Metropolis", stacklevel=2)
        algorithm = "metropolis"
    energies = np.zeros(params.n_sweeps, dtype=np.int64)
    mags = np.zeros(params.n_sweeps, dtype=np.int64)
    edge_ptr, edge_idx = model.edge_csr
    args = (params.n_equil, params.n_sweeps, params.measure_every, chain_seed(seed), energies, mags)
    if algorithm == "wolff":
        nb_ptr, nb_idx = model.neighbor_csr
        _wolff_chain(model.n_spins, edge_ptr, edge_idx, nb_ptr, nb_idx, float(beta), *args)
    else:
        vert_ptr, vert_idx = model.vertex_csr
        _metropolis_chain(model.n_spins, edge_ptr, edge_idx, vert_ptr, vert_idx, float(beta), *args)
    return energies, mags, algorithm


def binning_error(x: np.ndarray, min_bins: int = 32, plateau_tol: float = 0.05) -> tuple[float, int]:
    """Standard error of the mean of a correlated series, and the bin size used.

    Bins are doubled until the error estimate grows by less than
    ``plateau_tol`` between levels, while at least ``min_bins`` bins remain.
    """
    block = np.asarray(x, dtype=float)
    if len(block) < 2:
        return 0.0, 1
    errs = []
    while len(block) >= min_bins or not errs:
        errs.append(float(block.std(ddof=1) / math.sqrt(len(block))))
        half = len(block) // 2
        if half < min_bins:
            break
        block = 0.5 * (block[0 : 2 * half : 2] + block[1 : 2 * half : 2])
    for k in range(len(errs) - 1):
        if errs[k + 1] <= errs[k] * (1 + plateau_tol):
            return max(errs[k], errs[k + 1]), 2 ** (k + 1)
    if len(errs) > 1:
        log.debug("binning error did not plateau after %d levels", len(errs))
    return errs[-1], 2 ** (len(errs) - 1)


def _jackknife(bin_means: np.ndarray, func) -> tuple[float, float]:
    """Jackknife estimate over bins; ``bin_means`` has shape (n_bins, n_quantities)."""
    n_bins = len(bin_means)
    total = bin_means.sum(axis=0)
    full = func(total / n_bins)
    if n_bins < 2:
        return full, 0.0
    leave_out = np.array([func((total - bin_means[i]) / (n_bins - 1)) for i in range(n_bins)])
    err = math.sqrt((n_bins - 1) * float(np.mean((leave_out - leave_out.mean()) ** 2)))
    return full, err


def analyze_series(energies: np.ndarray, mags: np.ndarray, n_spins: int, beta: float, min_bins: int = 32) -> Observables:
    e = np.asarray(energies, dtype=float)
    m = np.abs(np.asarray(mags, dtype=float)) / n_spins
    e_err, e_bin = binning_error(e, min_bins)
    m_err, m_bin = binning_error(m, min_bins)
    bin_size = max(e_bin, m_bin)
    n_bins = max(len(e) // bin_size, 1)
    used = n_bins * bin_size
    de = e[:used] - e[:used].mean()
    quantities = np.stack([de, de**2, m[:used] ** 2, m[:used] ** 4], axis=1)
    bin_means = quantities.reshape(n_bins, bin_size, 4).mean(axis=1)
    cv, cv_err = _jackknife(bin_means, lambda q: beta**2 * (q[1] - q[0] ** 2) / n_spins)
    binder, binder_err = _jackknife(bin_means, lambda q: 1.0 - q[3] / (3.0 * q[2] ** 2))
    return Observables(
        energy=float(e.mean()) / n_spins,
        energy_err=e_err / n_spins,
        heat_capacity=cv,
        heat_capacity_err=cv_err,
        magnetization=float(m.mean()),
        magnetization_err=m_err,
        binder=binder,
        binder_err=binder_err,
        n_samples=len(e),
    )


def mc_sample(model: SpinModel, beta: float, params: McParams | None = None, seed: int = 42) -> Observables:
    """Monte Carlo estimate of the per-spin observables at inverse temperature ``beta``.

    Two-body models use Wolff cluster updates under ``algorithm="auto"``;
    anything else uses sequential single-spin Metropolis. The result depends
    only on ``(model, beta, params, seed)``.
    """
    params = params or McParams()
    energies, mags, _ = run_chain(model, beta, params, seed)
    return analyze_series(energies, mags, model.n_spins, beta, params.min_bins)
