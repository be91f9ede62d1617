from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hyperdual.errors import HypergraphError, ResourceError
from hyperdual.gf2 import BitVector
from hyperdual.hypergraph import Hypergraph, ghz_ring, random_hypergraph, stabilizer_spec, toric_code
from hyperdual.quantum import (
    PauliProduct,
    build_css,
    build_cssm_hamiltonian,
    css_statevector,
    deformed_ground_state,
    deformed_statevector,
    degenerate_ground_space,
    fidelity,
    log_partition_derivatives,
    log_partition_q,
    magnetization,
    q_operator,
    quadratic_fidelity,
    second_derivative_fd,
    u_diagonal,
    verify_ground_state,
    z_signs,
)
from oracles import log_zq

SMALL_FAMILIES = [ghz_ring(n) for n in range(2, 9)] + [toric_code(2)[0]]


def random_small(seed, max_vertices=8):
    return random_hypergraph(np.random.default_rng(seed), max_vertices, 8)


def basis_state(bits: str) -> int:
    return int(bits, 2)


def pauli(n, x=(), z=()):
    return PauliProduct(BitVector.from_indices(n, x), BitVector.from_indices(n, z)).to_dense()


def z_of(n, q):
    return np.diag(z_signs(n, 1 << (n - 1 - q)))


class TestCssState:
    def test_no_edges_gives_all_zero_state(self):
        psi = css_statevector(build_css(Hypergraph(3, ())))
        assert psi[0] == 1.0 and np.count_nonzero(psi) == 1

    def test_ghz3_support(self):
        psi = css_statevector(build_css(ghz_ring(3)))
        support = {format(i, "03b") for i in np.flatnonzero(psi)}
        assert support == {"000", "110", "011", "101"}
        np.testing.assert_allclose(psi[np.flatnonzero(psi)], 0.5)

    @pytest.mark.parametrize("h", SMALL_FAMILIES[:5] + [toric_code(2)[0]], ids=str)
    def test_every_x_generator_fixes_state(self, h):
        css = build_css(h)
        psi = css_statevector(css)
        for x in css.spec.x_type:
            np.testing.assert_allclose(PauliProduct.x_type(x).apply(psi), psi, atol=1e-12)

    def test_basis_convention(self):
        # qubit 0 is the most significant bit
        psi = np.zeros(8)
        psi[basis_state("000")] = 1
        out = PauliProduct.x_type(BitVector.from_indices(3, [0])).apply(psi)
        assert out[basis_state("100")] == 1

    def test_pauli_phase_order(self):
        n = 1
        xz = pauli(n, x=[0], z=[0])
        np.testing.assert_allclose(xz, pauli(n, x=[0]) @ pauli(n, z=[0]))


class TestLogPartition:
    def test_zero_beta(self):
        for h in SMALL_FAMILIES:
            assert log_partition_q(build_css(h), 0.0) == pytest.approx(0.0, abs=1e-14)

    def test_ghz3_closed_form(self):
        expected = math.log(0.25 * (math.e**3 + 3 * math.exp(-1)))
        assert log_partition_q(build_css(ghz_ring(3)), 1.0) == pytest.approx(expected, abs=1e-14)

    def test_large_beta_limit(self):
        css = build_css(toric_code(2)[0])
        beta = 800.0
        assert log_partition_q(css, beta) == pytest.approx(beta * 8 - 3 * math.log(2), rel=1e-14)

    @given(st.integers(0, 2**32 - 1), st.floats(-2, 2))
    def test_matches_subset_enumeration(self, seed, beta):
        h = random_small(seed)
        assert log_partition_q(build_css(h), beta) == pytest.approx(
            log_zq(h.n_vertices, h.edges, beta), abs=1e-10
        )

    @pytest.mark.parametrize("h", SMALL_FAMILIES, ids=str)
    def test_magnetization_is_log_derivative(self, h):
        css = build_css(h)
        for beta in (0.1, 0.7, 1.5):
            step = 1e-5
            fd = (log_partition_q(css, beta + step) - log_partition_q(css, beta - step)) / (2 * step)
            assert magnetization(css, beta) == pytest.approx(fd / h.n_vertices, abs=1e-6)


class TestFidelity:
    def test_zero_step(self):
        css = build_css(ghz_ring(4))
        assert fidelity(css, 1.0, 0.0) == 1.0
        assert quadratic_fidelity(css, 1.0, 0.0) == 1.0

    def test_matches_dense_overlap(self):
        css = build_css(ghz_ring(3))
        beta, d = 1.0, 1e-2
        overlap = float(deformed_statevector(css, beta) @ deformed_statevector(css, beta + d))
        assert fidelity(css, beta, d) == pytest.approx(overlap, abs=1e-12)

    @given(st.floats(0.05, 2.0), st.floats(-0.5, 0.5))
    def test_symmetric_definition(self, beta, d):
        css = build_css(ghz_ring(5))
        assert fidelity(css, beta, d) == pytest.approx(fidelity(css, beta + d, -d), abs=1e-13)

    @given(st.floats(0.05, 2.0), st.floats(1e-3, 1.0))
    def test_fidelity_in_unit_interval(self, beta, d):
        f = fidelity(build_css(toric_code(2)[0]), beta, d)
        assert 0.0 < f < 1.0

    def test_cubic_gap_scaling(self):
        css = build_css(ghz_ring(4))
        gaps = [abs(fidelity(css, 1.0, d) - quadratic_fidelity(css, 1.0, d)) for d in (0.08, 0.04, 0.02)]
        for a, b in zip(gaps, gaps[1:]):
            assert a / b >= 2 ** (3 - 0.2)

    def test_second_derivative_closed_form(self):
        css = build_css(ghz_ring(3))
        beta = 1.0
        a, b = math.exp(3 * beta), 3 * math.exp(-beta)
        # f = ln(a + b) + const; f' = (3a - b)/(a+b); f'' = (9a + b)/(a+b) - f'^2
        f1 = (3 * a - b) / (a + b)
        f2 = (9 * a + b) / (a + b) - f1**2
        assert second_derivative_fd(css, beta) == pytest.approx(f2, abs=1e-6)
        assert log_partition_derivatives(css, beta)[1] == pytest.approx(f2, abs=1e-12)

    def test_quadratic_rejects_nonpositive_beta(self):
        with pytest.raises(ValueError):
            quadratic_fidelity(build_css(ghz_ring(3)), 0.0, 0.1)


class TestMagnetization:
    def test_ghz3_zero_beta(self):
        assert magnetization(build_css(ghz_ring(3)), 0.0) == pytest.approx(0.0, abs=1e-15)

    def test_large_beta(self):
        assert magnetization(build_css(toric_code(2)[0]), 50.0) == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("h", SMALL_FAMILIES, ids=str)
    def test_monotone(self, h):
        css = build_css(h)
        values = [magnetization(css, b) for b in np.linspace(-3, 3, 61)]
        assert all(b >= a - 1e-12 for a, b in zip(values, values[1:]))

    def test_deformed_ground_state_normalization(self):
        css = build_css(ghz_ring(4))
        g = deformed_ground_state(css, 0.7)
        assert g.log_z == pytest.approx(log_partition_q(css, 0.7))
        assert np.linalg.norm(g.statevector()) == pytest.approx(1.0)
        with pytest.raises(ValueError):
            deformed_ground_state(css, math.inf)


class TestHamiltonian:
    def test_zero_beta_shift(self):
        h = toric_code(2)[0]
        spec = stabilizer_spec(h)
        ham = build_cssm_hamiltonian(h, 0.0)
        pure = -sum(pauli(8, z=z.indices()) for z in spec.z_type) - sum(pauli(8, x=x.indices()) for x in spec.x_type)
        np.testing.assert_allclose(ham, pure + h.n_edges * np.eye(256), atol=1e-12)

    def test_ghz3_expansion(self):
        n, beta = 3, 1.0
        c, s = math.cosh(beta), math.sinh(beta)
        edges = ghz_ring(n).edges
        expected = n * c * c * np.eye(8) - pauli(n, z=range(n))
        for i, j in edges:
            expected -= pauli(n, x=[i, j])
            expected -= s * c * (z_of(n, i) + z_of(n, j))
            expected += s * s * z_of(n, i) @ z_of(n, j)
        np.testing.assert_allclose(build_cssm_hamiltonian(ghz_ring(n), beta), expected, atol=1e-12)

    @pytest.mark.parametrize("h", [ghz_ring(4), toric_code(2)[0]], ids=str)
    def test_commutes_with_z_stabilizers(self, h):
        ham = build_cssm_hamiltonian(h, 0.8)
        for z in stabilizer_spec(h).z_type:
            b = PauliProduct.z_type(z).to_dense()
            assert np.linalg.norm(ham @ b - b @ ham) < 1e-10

    @given(st.integers(0, 2**32 - 1), st.floats(-1.5, 1.5))
    def test_q_squared_identity(self, seed, beta):
        h = random_small(seed, max_vertices=6)
        n = h.n_vertices
        for x in stabilizer_spec(h).x_type:
            q = q_operator(x, beta)
            field = sum(z_signs(n, 1 << (n - 1 - i)) for i in x.indices())
            twice_cosh = np.diag(2 * np.cosh(beta * field))
            np.testing.assert_allclose(q @ q, twice_cosh @ q, atol=1e-10 * max(1.0, np.abs(q).max() ** 2))

    @given(st.integers(0, 2**32 - 1), st.floats(-1.5, 1.5))
    def test_conjugation_identity(self, seed, beta):
        h = random_small(seed, max_vertices=6)
        n = h.n_vertices
        for x in stabilizer_spec(h).x_type:
            a = PauliProduct.x_type(x).to_dense()
            half = np.diag(np.sqrt(1.0 / u_diagonal(x, beta)))  # exp(+beta/2 Σ Z)
            np.testing.assert_allclose(a @ half, np.linalg.inv(half) @ a, atol=1e-10)

    def test_dense_cap(self):
        with pytest.raises(ResourceError):
            build_cssm_hamiltonian(toric_code(3)[0], 1.0)
        with pytest.raises(ResourceError):
            verify_ground_state(toric_code(3)[0], 1.0)


class TestGroundState:
    def test_zero_beta_is_css(self):
        css = build_css(ghz_ring(4))
        np.testing.assert_allclose(deformed_statevector(css, 0.0), css_statevector(css))

    def test_ghz3(self):
        report = verify_ground_state(ghz_ring(3), 1.0)
        assert report.passed
        assert report.energy == pytest.approx(-1.0, abs=1e-10)
        assert report.min_eigenvalue == pytest.approx(-1.0, abs=1e-10)
        assert report.gap > 0.1

    def test_toric2(self):
        report = verify_ground_state(toric_code(2)[0], 0.5)
        assert report.passed
        assert report.min_eigenvalue == pytest.approx(-5.0, abs=1e-9)

    @given(st.integers(0, 2**32 - 1), st.sampled_from([0.0, 0.4, 1.1]))
    def test_random_hypergraphs(self, seed, beta):
        h = random_small(seed, max_vertices=7)
        assert verify_ground_state(h, beta).passed


class TestDegenerateSpace:
    @pytest.mark.parametrize("beta", [0.3, 1.0])
    def test_ghz4(self, beta):
        drop = degenerate_ground_space(ghz_ring(4), beta, True)
        keep = degenerate_ground_space(ghz_ring(4), beta, False)
        assert (drop.dimension, keep.dimension) == (2, 1)
        assert max(drop.sector_residuals) < 1e-10
        assert keep.sector_residuals[0] < 1e-10 and keep.sector_residuals[1] > 1e-3

    def test_toric2(self):
        drop = degenerate_ground_space(toric_code(2)[0], 0.3, True)
        keep = degenerate_ground_space(toric_code(2)[0], 0.3, False)
        assert (drop.dimension, keep.dimension) == (4, 1)
        assert max(drop.sector_residuals) < 1e-10

    def test_unknown_family(self):
        with pytest.raises(HypergraphError):
            degenerate_ground_space(Hypergraph.from_edges(3, [(0, 1, 2)]), 1.0, True)
