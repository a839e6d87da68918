"""Dense state-vector simulator.

Amplitudes are complex128 over the 2^n computational basis; bit b of the
basis index encodes qubit b.  Gate conventions used throughout:

    Ry(t) = [[cos t/2, -sin t/2], [sin t/2, cos t/2]]
    Rz(t) = diag(exp(-i t/2), exp(+i t/2))

Kernels are in-place and bit-mask based; at <= 20 qubits there is nothing
to gain from gate fusion.
"""
import struct
from dataclasses import dataclass

import numpy as np
from numba import njit

_NORM_TOL = 1e-10
MAX_QUBITS = 20

STATE_MAGIC = b"LGSV"
STATE_FORMAT_VERSION = 1


@dataclass
class StateVector:
    num_qubits: int
    amplitudes: np.ndarray  # complex128, length 2**num_qubits

    def copy(self) -> "StateVector":
        return StateVector(self.num_qubits, self.amplitudes.copy())

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


@dataclass(frozen=True)
class PauliString:
    """Sparse Pauli product: ((qubit, letter), ...) with a real coefficient."""
    ops: tuple
    coefficient: float = 1.0

    def __post_init__(self):
        seen = set()
        for q, letter in self.ops:
            if letter not in "IXYZ":
                raise ValueError(f"bad Pauli letter {letter!r}")
            if q in seen:
                raise ValueError(f"duplicate qubit {q} in Pauli string")
            seen.add(q)

    def masks(self):
        """(xmask, ymask, zmask) bitmasks over the qubits."""
        xm = ym = zm = 0
        for q, letter in self.ops:
            if letter == "X":
                xm |= 1 << q
            elif letter == "Y":
                ym |= 1 << q
            elif letter == "Z":
                zm |= 1 << q
        return xm, ym, zm


def zero_state(n: int) -> StateVector:
    if not 1 <= n <= MAX_QUBITS:
        raise ValueError(f"qubit count {n} outside 1..{MAX_QUBITS}")
    amps = np.zeros(1 << n, dtype=np.complex128)
    amps[0] = 1.0
    return StateVector(n, amps)


def ry_matrix(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=np.complex128)


def rz_matrix(theta: float) -> np.ndarray:
    return np.array(
        [[np.exp(-0.5j * theta), 0], [0, np.exp(0.5j * theta)]],
        dtype=np.complex128,
    )


@njit(cache=True)
def _apply_1q(amps, q, u00, u01, u10, u11):
    half = amps.shape[0] >> 1
    bit = 1 << q
    low = bit - 1
    for k in range(half):
        i0 = ((k & ~low) << 1) | (k & low)
        i1 = i0 | bit
        a0 = amps[i0]
        a1 = amps[i1]
        amps[i0] = u00 * a0 + u01 * a1
        amps[i1] = u10 * a0 + u11 * a1


@njit(cache=True)
def _apply_cnot(amps, control, target):
    cbit = 1 << control
    tbit = 1 << target
    n = amps.shape[0]
    for i in range(n):
        if (i & cbit) and not (i & tbit):
            j = i | tbit
            amps[i], amps[j] = amps[j], amps[i]


@njit(cache=True)
def _apply_xor_mask(amps, mask):
    n = amps.shape[0]
    for i in range(n):
        j = i ^ mask
        if i < j:
            amps[i], amps[j] = amps[j], amps[i]


@njit(cache=True)
def _pauli_expect(amps, xymask, yzmask, nybits):
    # <psi| P |psi> for P = prod of Paulis; phase per basis state b is
    # i^{|Y|} (-1)^{popcount(b & (ymask|zmask))}, flip mask covers X and Y.
    acc = 0.0 + 0.0j
    n = amps.shape[0]
    for b in range(n):
        sign = 1.0
        v = b & yzmask
        # popcount parity
        bits = 0
        while v:
            v &= v - 1
            bits += 1
        if bits & 1:
            sign = -1.0
        acc += np.conj(amps[b ^ xymask]) * sign * amps[b]
    phase = 1.0 + 0.0j
    for _ in range(nybits & 3):
        phase *= 1.0j
    return acc * phase


def apply_1q(state: StateVector, qubit: int, u: np.ndarray) -> StateVector:
    """Apply a 2x2 unitary to one qubit, in place."""
    if not 0 <= qubit < state.num_qubits:
        raise ValueError(f"qubit {qubit} out of range")
    u = np.asarray(u, dtype=np.complex128)
    if u.shape != (2, 2):
        raise ValueError("single-qubit gate must be 2x2")
    if not np.allclose(u.conj().T @ u, np.eye(2), atol=1e-12):
        raise ValueError("gate is not unitary")
    _apply_1q(state.amplitudes, qubit, u[0, 0], u[0, 1], u[1, 0], u[1, 1])
    return state


def apply_cnot(state: StateVector, control: int, target: int) -> StateVector:
    if control == target:
        raise ValueError("control and target must differ")
    for q in (control, target):
        if not 0 <= q < state.num_qubits:
            raise ValueError(f"qubit {q} out of range")
    _apply_cnot(state.amplitudes, control, target)
    return state


def apply_x_string(state: StateVector, edge_set) -> StateVector:
    """Apply a product of X operators over the given qubit indices, in place."""
    mask = 0
    for e in edge_set:
        if not 0 <= e < state.num_qubits:
            raise ValueError(f"qubit {e} out of range")
        mask |= 1 << e
    if mask:
        _apply_xor_mask(state.amplitudes, mask)
    return state


def apply_pauli(state: StateVector, string: PauliString) -> StateVector:
    """|psi> <- coeff * P |psi>, in place (not unitary unless coeff = +-1)."""
    xm, ym, zm = string.masks()
    _check_masks(state, xm | ym | zm)
    amps = state.amplitudes
    n = amps.shape[0]
    idx = np.arange(n)
    signs = 1 - 2 * (_popcount(idx & (ym | zm)) & 1)
    out = (1j ** (bin(ym).count("1") % 4)) * string.coefficient * signs * amps
    if xm | ym:
        amps[:] = out[idx ^ (xm | ym)]
    else:
        amps[:] = out
    return state


def expect_pauli(state: StateVector, string: PauliString) -> float:
    xm, ym, zm = string.masks()
    _check_masks(state, xm | ym | zm)
    val = _pauli_expect(
        state.amplitudes, xm | ym, ym | zm, bin(ym).count("1")
    )
    return string.coefficient * val.real


def inner_product(a: StateVector, b: StateVector) -> complex:
    if a.num_qubits != b.num_qubits:
        raise ValueError("qubit count mismatch")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def _check_masks(state: StateVector, mask: int):
    if mask >> state.num_qubits:
        raise ValueError("Pauli string addresses qubits out of range")


def _popcount(idx: np.ndarray) -> np.ndarray:
    v = idx.astype(np.uint64).copy()
    count = np.zeros_like(v)
    while v.any():
        count += v & 1
        v >>= np.uint64(1)
    return count.astype(np.int64)


def basis_popcounts(n: int) -> np.ndarray:
    """popcount(b) for every basis index b of an n-qubit register."""
    return _popcount(np.arange(1 << n))


def save_state(path, state: StateVector) -> None:
    """Write the LGSV binary format: magic, version u16, qubits u16, amplitudes."""
    with open(path, "wb") as fh:
        fh.write(STATE_MAGIC)
        fh.write(struct.pack("<HH", STATE_FORMAT_VERSION, state.num_qubits))
        fh.write(state.amplitudes.astype("<c16").tobytes())


def load_state(path) -> StateVector:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != STATE_MAGIC:
            raise ValueError(f"bad state-file magic {magic!r}")
        version, n = struct.unpack("<HH", fh.read(4))
        if version != STATE_FORMAT_VERSION:
            raise ValueError(f"unsupported state format version {version}")
        payload = fh.read()
    expected = (1 << n) * 16
    if len(payload) != expected:
        raise ValueError(
            f"truncated state file: {len(payload)} payload bytes, expected {expected}"
        )
    amps = np.frombuffer(payload, dtype="<c16").astype(np.complex128)
    return StateVector(n, amps)
