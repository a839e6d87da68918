"""Field-tuned toric-code Hamiltonian and its observables.

H(x) = -(1-x) * (sum_s A_s + sum_p B_p) - x * sum_i Z_i

with A_s a Z-product on the edges meeting vertex s and B_p an X-product on
the edges bounding plaquette p.  With this choice the loop-gas ansatz at
theta = pi/2 is the exact x=0 ground state reachable from |0...0> and the
field term penalizes loops.
"""
from dataclasses import dataclass

import numpy as np

from .lattice import LatticeGeometry, plaquette_mask
from .sim import PauliString, StateVector, basis_popcounts, expect_pauli


@dataclass(frozen=True)
class ToricHamiltonian:
    geometry: LatticeGeometry
    x: float
    star_terms: tuple      # PauliString, Z-type, coefficient -(1-x)
    plaquette_terms: tuple  # PauliString, X-type, coefficient -(1-x)
    field_terms: tuple      # PauliString, single Z, coefficient -x

    @property
    def terms(self):
        return self.star_terms + self.plaquette_terms + self.field_terms


def build_hamiltonian(geometry: LatticeGeometry, x: float) -> ToricHamiltonian:
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"field parameter x={x} outside [0, 1]")
    stab = -(1.0 - x)
    field = -x
    stars = tuple(
        PauliString(tuple((e, "Z") for e in edges), stab)
        for edges in geometry.stars
    )
    plaqs = tuple(
        PauliString(tuple((e, "X") for e in edges), stab)
        for edges in geometry.plaquettes
    )
    fields = tuple(
        PauliString(((q, "Z"),), field) for q in range(geometry.num_qubits)
    )
    return ToricHamiltonian(geometry, x, stars, plaqs, fields)


def hamiltonian_diagonal(ham: ToricHamiltonian) -> np.ndarray:
    """Diagonal (star + field) part of H as a real vector over basis states."""
    geo = ham.geometry
    n = geo.num_qubits
    idx = np.arange(1 << n)
    pop = basis_popcounts(n)
    diag = np.zeros(1 << n)
    stab = -(1.0 - ham.x)
    for edges in geo.stars:
        mask = 0
        for e in edges:
            mask |= 1 << e
        par = _mask_popcount(idx, mask) & 1
        diag += stab * (1 - 2 * par)
    diag += -ham.x * (n - 2 * pop)
    return diag


def plaquette_masks(ham: ToricHamiltonian):
    geo = ham.geometry
    return [plaquette_mask(geo, p) for p in range(geo.num_plaquettes)]


def _mask_popcount(idx: np.ndarray, mask: int) -> np.ndarray:
    v = (idx & mask).astype(np.uint64)
    count = np.zeros_like(v)
    while v.any():
        count += v & np.uint64(1)
        v >>= np.uint64(1)
    return count.astype(np.int64)


def energy(state: StateVector, ham: ToricHamiltonian) -> float:
    """<psi| H(x) |psi>, evaluated from the diagonal + plaquette structure."""
    if state.num_qubits != ham.geometry.num_qubits:
        raise ValueError("state size does not match lattice")
    amps = state.amplitudes
    probs = amps.real**2 + amps.imag**2
    e = float(probs @ hamiltonian_diagonal(ham))
    idx = np.arange(amps.shape[0])
    stab = -(1.0 - ham.x)
    for mask in plaquette_masks(ham):
        e += stab * float(np.real(np.vdot(amps, amps[idx ^ mask])))
    return e


def energy_by_terms(state: StateVector, ham: ToricHamiltonian) -> float:
    """Slow reference: sum of expect_pauli over every Hamiltonian term."""
    return sum(expect_pauli(state, t) for t in ham.terms)


def magnetization_per_qubit(state: StateVector) -> float:
    n = state.num_qubits
    probs = np.abs(state.amplitudes) ** 2
    mz = (n - 2 * basis_popcounts(n)) / n
    return float(probs @ mz)


def binder_cumulant(state: StateVector) -> float:
    """Q = <m_z^2>^2 / <m_z^4> from the diagonal m_z distribution."""
    n = state.num_qubits
    probs = np.abs(state.amplitudes) ** 2
    mz = (n - 2 * basis_popcounts(n)) / n
    m2 = float(probs @ mz**2)
    m4 = float(probs @ mz**4)
    if m4 <= 1e-14:
        raise ValueError("vanishing fourth moment; Binder cumulant undefined")
    return m2**2 / m4
