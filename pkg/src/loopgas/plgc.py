"""Parametrized loop-gas states and VQE ground-state search via SPSA.

The ansatz applies, per plaquette, cos(t/2) I + sin(t/2) B_p to |0...0>.
On a disk-topology lattice distinct plaquette subsets map to distinct loop
configurations, so the factors commute and the result stays normalized.

The SPSA objective is evaluated in the 2^p loop subspace spanned by the
reachable basis states (LoopBasisEnergy); this is exactly the state-vector
energy but costs O(2^p) instead of O(2^N) per call.  Tests pin the two
routes against each other.
"""
import math
from dataclasses import dataclass

import numpy as np

from .lattice import LatticeGeometry, plaquette_mask, star_mask
from .model import build_hamiltonian, energy
from .sim import StateVector, zero_state


@dataclass
class PLGCParams:
    thetas: np.ndarray  # one angle per plaquette, radians

    def canonical(self) -> "PLGCParams":
        return PLGCParams(np.mod(self.thetas, 2 * np.pi))


@dataclass
class VQEConfig:
    iterations: int = 500
    trials: int = 10
    learning_rate: float = 0.01
    perturbation_scale: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.iterations < 1 or self.trials < 1 or self.learning_rate <= 0:
            raise ValueError("invalid VQE configuration")


def prepare_plgc(geometry: LatticeGeometry, params: PLGCParams) -> StateVector:
    """Apply the loop-gas factors plaquette by plaquette to |0...0>."""
    thetas = np.asarray(params.thetas, dtype=float)
    if thetas.shape != (geometry.num_plaquettes,):
        raise ValueError(
            f"expected {geometry.num_plaquettes} angles, got {thetas.shape}"
        )
    state = zero_state(geometry.num_qubits)
    amps = state.amplitudes
    idx = np.arange(amps.shape[0])
    for p, theta in enumerate(thetas):
        mask = plaquette_mask(geometry, p)
        amps[:] = np.cos(theta / 2) * amps + np.sin(theta / 2) * amps[idx ^ mask]
    return state


class LoopBasisEnergy:
    """Exact H(x) expectation of a loop-gas state, in the 2^p loop basis.

    Basis element S (a subset of plaquettes) is the edge configuration
    XOR_{p in S} mask_p with amplitude prod_p cos or sin(theta_p / 2).
    Star and field terms are diagonal in this basis; each B_p acts as
    S -> S xor {p}.
    """

    def __init__(self, geometry: LatticeGeometry):
        p = geometry.num_plaquettes
        self.geometry = geometry
        self.num_plaquettes = p
        n = geometry.num_qubits
        masks = [plaquette_mask(geometry, q) for q in range(p)]
        occ = np.zeros(1 << p, dtype=np.int64)
        for s in range(1 << p):
            m = 0
            for q in range(p):
                if s >> q & 1:
                    m ^= masks[q]
            occ[s] = m
        # sum over stars of (-1)^{|star edges occupied|}
        star_sum = np.zeros(1 << p)
        for v in range(geometry.num_stars):
            sm = star_mask(geometry, v)
            par = np.array([bin(int(o) & sm).count("1") & 1 for o in occ])
            star_sum += 1 - 2 * par
        self.star_sum = star_sum
        self.field_sum = np.array(
            [n - 2 * bin(int(o)).count("1") for o in occ], dtype=float
        )
        self.flip_idx = [
            np.arange(1 << p) ^ (1 << q) for q in range(p)
        ]

    def amplitudes(self, thetas: np.ndarray) -> np.ndarray:
        amp = np.ones(1)
        for q in range(self.num_plaquettes):
            c, s = math.cos(thetas[q] / 2), math.sin(thetas[q] / 2)
            amp = np.concatenate([c * amp, s * amp])
        return amp

    def energy(self, thetas: np.ndarray, x: float) -> float:
        amp = self.amplitudes(np.asarray(thetas, dtype=float))
        w = amp * amp
        stab = -(1.0 - x)
        e = stab * float(w @ self.star_sum) - x * float(w @ self.field_sum)
        for q in range(self.num_plaquettes):
            e += stab * float(amp @ amp[self.flip_idx[q]])
        return e


def spsa_minimize(objective, dim: int, config: VQEConfig, x0=None, rng=None):
    """SPSA descent; returns (best_thetas, best_value, trace).

    The step size stays constant at the configured learning rate (a
    decaying 1/k^0.602 gain moves the iterate by far too little to escape
    a random start within 500 steps); the perturbation decays with the
    standard Spall exponent, c_k = scale/(k+1)^0.101.  Each step also
    evaluates the unperturbed iterate, and the best point is tracked over
    every evaluation; the trace holds per-step iterate objective values.
    """
    if dim < 1:
        raise ValueError("dimension must be >= 1")
    if rng is None:
        rng = np.random.default_rng(config.seed)
    theta = (
        rng.uniform(0.0, 2 * np.pi, size=dim) if x0 is None
        else np.array(x0, dtype=float)
    )
    best_theta = theta.copy()
    best_value = math.inf
    trace = []
    for k in range(config.iterations):
        a_k = config.learning_rate
        c_k = config.perturbation_scale / (k + 1) ** 0.101
        delta = rng.integers(0, 2, size=dim) * 2.0 - 1.0
        f_plus = objective(theta + c_k * delta)
        f_minus = objective(theta - c_k * delta)
        if not (math.isfinite(f_plus) and math.isfinite(f_minus)):
            raise FloatingPointError("non-finite objective value in SPSA")
        for val, point in ((f_plus, theta + c_k * delta),
                           (f_minus, theta - c_k * delta)):
            if val < best_value:
                best_value = val
                best_theta = point.copy()
        ghat = (f_plus - f_minus) / (2 * c_k) * (1.0 / delta)
        theta = theta - a_k * ghat
        f_curr = objective(theta)
        if not math.isfinite(f_curr):
            raise FloatingPointError("non-finite objective value in SPSA")
        if f_curr < best_value:
            best_value = f_curr
            best_theta = theta.copy()
        trace.append(f_curr)
    return best_theta, best_value, trace


def _trial_rng(config: VQEConfig, geometry: LatticeGeometry, x: float, trial: int):
    # deterministic per (lattice, x, trial)
    x_key = int(round(x * 10**9))
    return np.random.default_rng(
        [config.seed, geometry.rows, geometry.cols, x_key, trial]
    )


def vqe_ground_state(geometry: LatticeGeometry, x: float, config: VQEConfig,
                     evaluator: LoopBasisEnergy | None = None):
    """Best-of-trials SPSA minimization of the loop-gas energy at field x.

    Returns (PLGCParams, energy, StateVector); the reported energy is
    recomputed from the fully prepared state.
    """
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"field parameter x={x} outside [0, 1]")
    if evaluator is None:
        evaluator = LoopBasisEnergy(geometry)
    dim = geometry.num_plaquettes
    best = None
    failures = []
    for trial in range(config.trials):
        rng = _trial_rng(config, geometry, x, trial)
        x0 = rng.uniform(0.0, 2 * np.pi, size=dim)
        try:
            theta, value, _ = spsa_minimize(
                lambda t: evaluator.energy(t, x), dim, config, x0=x0, rng=rng
            )
        except FloatingPointError as err:
            failures.append(err)
            continue
        if best is None or value < best[1]:
            best = (theta, value)
    if best is None:
        raise RuntimeError(f"all {config.trials} VQE trials failed: {failures[-1]}")
    params = PLGCParams(best[0]).canonical()
    state = prepare_plgc(geometry, params)
    e = energy(state, build_hamiltonian(geometry, x))
    return params, e, state
