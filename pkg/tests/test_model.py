import numpy as np
import pytest

from loopgas.lattice import build_lattice
from loopgas.model import (binder_cumulant, build_hamiltonian, energy,
                           energy_by_terms, hamiltonian_diagonal,
                           magnetization_per_qubit, plaquette_masks)
from loopgas.sim import StateVector, zero_state


def ghz(n):
    amps = np.zeros(1 << n, dtype=complex)
    amps[0] = amps[-1] = 1 / np.sqrt(2)
    return StateVector(n, amps)


def random_state(n, rng):
    amps = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return StateVector(n, amps / np.linalg.norm(amps))


def test_term_counts_and_coefficients():
    g = build_lattice(2, 3)
    ham = build_hamiltonian(g, 0.25)
    stabilizers = list(ham.star_terms) + list(ham.plaquette_terms)
    assert len(ham.star_terms) == 6
    assert len(ham.plaquette_terms) == 2
    assert len(ham.field_terms) == 7
    assert all(np.isclose(t.coefficient, -0.75) for t in stabilizers)
    assert all(np.isclose(t.coefficient, -0.25) for t in ham.field_terms)


def test_x_out_of_range():
    g = build_lattice(2, 2)
    for bad in (-0.1, 1.1):
        with pytest.raises(ValueError):
            build_hamiltonian(g, bad)


def test_ghz_is_stabilizer_ground_state_2x2():
    g = build_lattice(2, 2)
    ham = build_hamiltonian(g, 0.0)
    state = ghz(4)
    assert abs(energy(state, ham) - (-5.0)) < 1e-12


def test_energy_fast_matches_term_by_term(rng):
    g = build_lattice(2, 3)
    for x in (0.0, 0.3, 0.8):
        ham = build_hamiltonian(g, x)
        s = random_state(g.num_qubits, rng)
        assert np.isclose(energy(s, ham), energy_by_terms(s, ham), atol=1e-12)


def test_energy_affine_in_x(rng):
    # H(x) = (1-x) H_stab + x H_field, so E(x) is affine for a fixed state
    g = build_lattice(2, 3)
    s = random_state(g.num_qubits, rng)
    xs = np.array([0.0, 0.25, 0.5, 1.0])
    es = np.array([energy(s, build_hamiltonian(g, x)) for x in xs])
    slope = (es[-1] - es[0]) / (xs[-1] - xs[0])
    assert np.allclose(es, es[0] + slope * xs, atol=1e-12)


def test_x_equals_one_polarized():
    for dims in ((2, 2), (2, 3)):
        g = build_lattice(*dims)
        ham = build_hamiltonian(g, 1.0)
        s = zero_state(g.num_qubits)
        assert np.isclose(energy(s, ham), -g.num_qubits)


def test_diagonal_plus_masks_consistent(rng):
    g = build_lattice(2, 3)
    ham = build_hamiltonian(g, 0.4)
    diag = hamiltonian_diagonal(ham)
    s = random_state(g.num_qubits, rng)
    amps = s.amplitudes
    e = float(np.real(np.vdot(amps, diag * amps)))
    idx = np.arange(amps.size)
    for mask in plaquette_masks(ham):
        e += -(1.0 - ham.x) * float(np.real(np.vdot(amps, amps[idx ^ mask])))
    assert np.isclose(e, energy(s, ham), atol=1e-12)


def test_magnetization():
    assert np.isclose(magnetization_per_qubit(zero_state(3)), 1.0)
    amps = np.zeros(4, dtype=complex)
    amps[0b01] = 1.0  # |0> x |1>
    assert abs(magnetization_per_qubit(StateVector(2, amps))) < 1e-14


def test_binder_cumulant_ghz():
    # m_z = +-1 with equal weight: <m^2> = <m^4> = 1 -> Q = 1
    assert np.isclose(binder_cumulant(ghz(4)), 1.0)


def test_binder_cumulant_single_qubit_superposition():
    amps = np.array([1, 1], dtype=complex) / np.sqrt(2)
    assert np.isclose(binder_cumulant(StateVector(1, amps)), 1.0)
