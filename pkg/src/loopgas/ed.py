"""Matrix-free Lanczos ground states for validating the VQE datasets.

Dense diagonalization at 2^17 is out of reach, so we run Lanczos with full
reorthogonalization and restart from the best Ritz vector.  H * psi uses
the diagonal + plaquette-permutation structure of the model.
"""
from dataclasses import dataclass

import numpy as np

from .lattice import LatticeGeometry
from .model import ToricHamiltonian, build_hamiltonian, hamiltonian_diagonal, plaquette_masks
from .sim import StateVector


@dataclass
class LanczosConfig:
    krylov_dim: int = 80
    tolerance: float = 1e-9
    max_restarts: int = 20
    seed: int = 7

    def __post_init__(self):
        if self.krylov_dim < 2 or self.tolerance <= 0:
            raise ValueError("invalid Lanczos configuration")


class HamiltonianAction:
    """Cached H * psi kernel for repeated applications."""

    def __init__(self, ham: ToricHamiltonian):
        self.ham = ham
        self.diag = hamiltonian_diagonal(ham)
        self.masks = plaquette_masks(ham)
        self.idx = np.arange(self.diag.shape[0])
        self.stab = -(1.0 - ham.x)

    def __call__(self, vec: np.ndarray) -> np.ndarray:
        if vec.shape != self.diag.shape:
            raise ValueError("vector dimension does not match Hamiltonian")
        out = self.diag * vec
        for mask in self.masks:
            out += self.stab * vec[self.idx ^ mask]
        return out


def apply_hamiltonian(ham: ToricHamiltonian, state: StateVector) -> StateVector:
    """Return H |psi> as a new (generally unnormalized) vector."""
    if state.num_qubits != ham.geometry.num_qubits:
        raise ValueError("state size does not match lattice")
    return StateVector(state.num_qubits, HamiltonianAction(ham)(state.amplitudes))


def _lanczos_sweep(apply_h, v0: np.ndarray, krylov_dim: int):
    """One Krylov build with full reorthogonalization.

    Returns (ritz_value, ritz_vector, residual_norm).
    """
    dim = v0.shape[0]
    m = min(krylov_dim, dim)
    V = np.zeros((m, dim), dtype=np.complex128)
    alphas = np.zeros(m)
    betas = np.zeros(m - 1)
    v = v0 / np.linalg.norm(v0)
    V[0] = v
    k = 0
    for j in range(m):
        w = apply_h(V[j])
        alphas[j] = np.real(np.vdot(V[j], w))
        w -= alphas[j] * V[j]
        if j > 0:
            w -= betas[j - 1] * V[j - 1]
        # full reorthogonalization against the whole basis
        w -= V[: j + 1].T @ (V[: j + 1].conj() @ w)
        k = j + 1
        if j == m - 1:
            break
        b = np.linalg.norm(w)
        if b < 1e-14:
            break
        betas[j] = b
        V[j + 1] = w / b
    T = np.diag(alphas[:k]) + np.diag(betas[: k - 1], 1) + np.diag(betas[: k - 1], -1)
    evals, evecs = np.linalg.eigh(T)
    ritz_val = float(evals[0])
    ritz_vec = evecs[:, 0] @ V[:k]
    ritz_vec /= np.linalg.norm(ritz_vec)
    residual = float(np.linalg.norm(apply_h(ritz_vec) - ritz_val * ritz_vec))
    return ritz_val, ritz_vec, residual


def ground_state_ed(geometry: LatticeGeometry, x: float,
                    config: LanczosConfig | None = None):
    """Lowest eigenpair of H(x); returns (energy, StateVector)."""
    if config is None:
        config = LanczosConfig()
    ham = build_hamiltonian(geometry, x)
    apply_h = HamiltonianAction(ham)
    rng = np.random.default_rng(config.seed)
    dim = 1 << geometry.num_qubits
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    for _ in range(config.max_restarts):
        val, vec, residual = _lanczos_sweep(apply_h, v, config.krylov_dim)
        if residual < config.tolerance:
            return val, StateVector(geometry.num_qubits, vec)
        v = vec
    raise RuntimeError(
        f"Lanczos did not reach residual {config.tolerance} after "
        f"{config.max_restarts} restarts (last residual {residual:.3e})"
    )
