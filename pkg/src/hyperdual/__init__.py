"""Hypergraph CSS states and their dual classical ferromagnets.

The normalization of a beta-deformed CSS state on a hypergraph equals, up to
the constant |E| ln 2, the partition function of the ferromagnet living on
the dual hypergraph. This package builds both sides, checks the identities
exactly at small sizes, and scans the classical side for finite-temperature
criticality.
"""

from .classical import McParams, Observables, SpinModel, mc_sample, observables_exact, transfer_matrix_ring
from .criticality import ScanResult, Verdict, VerdictConfig, binder_crossing, detect_peak, finite_size_verdict, scan
from .duality import verify_fidelity_heat_capacity, verify_magnetization_energy, verify_partition_correspondence
from .errors import HypergraphError, ResourceError
from .gf2 import BitMatrix, BitVector, enumerate_span, kernel_basis, rank
from .hypergraph import Hypergraph, dual, ghz_ring, incidence, ising_square, stabilizer_spec, toric_code
from .quantum import (
    build_css,
    degenerate_ground_space,
    deformed_ground_state,
    fidelity,
    log_partition_q,
    magnetization,
    quadratic_fidelity,
    verify_ground_state,
)

__version__ = "0.1.0"
