"""Quantum convolutional neural network for phase classification.

The network alternates brickwork convolution stages (two sublayers of the
8-angle two-qubit block) with pooling stages (4-angle block, CNOT control
discarded).  Blocks inside a stage share one angle set, so the parameter
vector has 12 entries per stage: alpha1..alpha8 then beta1..beta4.

Forward output is <Z> on the single surviving qubit; discarded qubits stay
in the register untouched, which is exactly trace-out semantics.  Gradients
are exact, via a reverse (adjoint) sweep through the compiled gate list.
"""
import json
import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .sim import StateVector, apply_cnot, apply_1q, ry_matrix, rz_matrix

PARAMS_FILE_VERSION = 1

# gate kinds in the compiled program
_RY, _RZ, _CNOT = 0, 1, 2


@dataclass(frozen=True)
class Stage:
    active: tuple            # active qubit ids, in order
    conv_pairs: tuple        # (q0, q1) pairs, even sublayer then odd sublayer
    pool_pairs: tuple        # (discard, keep)
    passthrough: int | None  # unpaired qubit carried to the next stage


@dataclass(frozen=True)
class QCNNArchitecture:
    num_qubits: int
    stages: tuple

    @property
    def num_params(self) -> int:
        return 12 * len(self.stages)

    @property
    def output_qubit(self) -> int:
        last = self.stages[-1]
        out = list(k for _, k in last.pool_pairs)
        if last.passthrough is not None:
            out.append(last.passthrough)
        assert len(out) == 1
        return out[0]


def build_architecture(n: int) -> QCNNArchitecture:
    if n < 2:
        raise ValueError("QCNN needs at least 2 qubits")
    active = list(range(n))
    stages = []
    while len(active) > 1:
        conv = [(active[i], active[i + 1]) for i in range(0, len(active) - 1, 2)]
        conv += [(active[i], active[i + 1]) for i in range(1, len(active) - 1, 2)]
        pool = [(active[i], active[i + 1]) for i in range(0, len(active) - 1, 2)]
        passthrough = active[-1] if len(active) % 2 else None
        stages.append(Stage(tuple(active), tuple(conv), tuple(pool), passthrough))
        active = [k for _, k in pool] + ([passthrough] if passthrough is not None else [])
    return QCNNArchitecture(n, tuple(stages))


def _conv_gates(q0, q1, base):
    # (kind, qubit_or_control, target, param_index, sign)
    return [
        (_RZ, q0, -1, base + 0, 1.0),
        (_RY, q0, -1, base + 1, 1.0),
        (_RZ, q0, -1, base + 2, 1.0),
        (_RZ, q1, -1, base + 3, 1.0),
        (_RY, q1, -1, base + 4, 1.0),
        (_RZ, q1, -1, base + 5, 1.0),
        (_CNOT, q0, q1, -1, 0.0),
        (_RY, q1, -1, base + 6, 1.0),
        (_CNOT, q0, q1, -1, 0.0),
        (_RY, q1, -1, base + 7, 1.0),
    ]


def _pool_gates(qd, qk, base):
    return [
        (_RY, qd, -1, base + 8, 1.0),
        (_RZ, qd, -1, base + 9, 1.0),
        (_RY, qk, -1, base + 10, 1.0),
        (_RZ, qk, -1, base + 11, 1.0),
        (_CNOT, qd, qk, -1, 0.0),
        (_RZ, qk, -1, base + 11, -1.0),
        (_RY, qk, -1, base + 10, -1.0),
    ]


def compile_program(arch: QCNNArchitecture):
    """Flatten the architecture into an ordered gate list."""
    gates = []
    for s, stage in enumerate(arch.stages):
        base = 12 * s
        for q0, q1 in stage.conv_pairs:
            gates.extend(_conv_gates(q0, q1, base))
        for qd, qk in stage.pool_pairs:
            gates.extend(_pool_gates(qd, qk, base))
    return gates


@njit(cache=True)
def _ry_kernel(amps, q, theta):
    c = math.cos(theta / 2)
    s = math.sin(theta / 2)
    half = amps.shape[0] >> 1
    bit = 1 << q
    low = bit - 1
    for k in range(half):
        i0 = ((k & ~low) << 1) | (k & low)
        i1 = i0 | bit
        a0 = amps[i0]
        a1 = amps[i1]
        amps[i0] = c * a0 - s * a1
        amps[i1] = s * a0 + c * a1


@njit(cache=True)
def _rz_kernel(amps, q, theta):
    em = complex(math.cos(theta / 2), -math.sin(theta / 2))
    ep = em.conjugate()
    half = amps.shape[0] >> 1
    bit = 1 << q
    low = bit - 1
    for k in range(half):
        i0 = ((k & ~low) << 1) | (k & low)
        i1 = i0 | bit
        amps[i0] = em * amps[i0]
        amps[i1] = ep * amps[i1]


@njit(cache=True)
def _cnot_kernel(amps, c, t):
    cbit = 1 << c
    tbit = 1 << t
    for i in range(amps.shape[0]):
        if (i & cbit) and not (i & tbit):
            j = i | tbit
            amps[i], amps[j] = amps[j], amps[i]


@njit(cache=True)
def _z_expect(amps, q):
    bit = 1 << q
    acc = 0.0
    for i in range(amps.shape[0]):
        p = amps[i].real ** 2 + amps[i].imag ** 2
        acc += -p if (i & bit) else p
    return acc


@njit(cache=True)
def _apply_z(amps, q):
    bit = 1 << q
    for i in range(amps.shape[0]):
        if i & bit:
            amps[i] = -amps[i]


@njit(cache=True)
def _grad_dot_y(lam, ket, q):
    # Im <lam| Y_q |ket>, with Y|0> = i|1>, Y|1> = -i|0>
    bit = 1 << q
    half = lam.shape[0] >> 1
    low = bit - 1
    acc = 0.0
    for k in range(half):
        i0 = ((k & ~low) << 1) | (k & low)
        i1 = i0 | bit
        val = np.conj(lam[i0]) * (-1j * ket[i1]) + np.conj(lam[i1]) * (1j * ket[i0])
        acc += val.imag
    return acc


@njit(cache=True)
def _grad_dot_z(lam, ket, q):
    # Im <lam| Z_q |ket>
    bit = 1 << q
    acc = 0.0
    for i in range(lam.shape[0]):
        v = np.conj(lam[i]) * ket[i]
        acc += -v.imag if (i & bit) else v.imag
    return acc


def _run_program(amps, gates, params, direction=1):
    seq = gates if direction == 1 else reversed(gates)
    for kind, a, b, pidx, sign in seq:
        if kind == _CNOT:
            _cnot_kernel(amps, a, b)
        else:
            theta = direction * sign * params[pidx]
            if kind == _RY:
                _ry_kernel(amps, a, theta)
            else:
                _rz_kernel(amps, a, theta)


def conv_block(state: StateVector, q0: int, q1: int, alphas) -> StateVector:
    """Apply one 8-angle convolution block to the given qubit pair."""
    alphas = np.asarray(alphas, dtype=float)
    if alphas.shape != (8,):
        raise ValueError("convolution block takes 8 angles")
    for kind, a, b, pidx, sign in _conv_gates(q0, q1, 0):
        if kind == _CNOT:
            apply_cnot(state, a, b)
        elif kind == _RY:
            apply_1q(state, a, ry_matrix(sign * alphas[pidx]))
        else:
            apply_1q(state, a, rz_matrix(sign * alphas[pidx]))
    return state


def pool_block(state: StateVector, q_discard: int, q_keep: int, betas) -> StateVector:
    """Apply one 4-angle pooling block; q_discard is never touched again."""
    betas = np.asarray(betas, dtype=float)
    if betas.shape != (4,):
        raise ValueError("pooling block takes 4 angles")
    for kind, a, b, pidx, sign in _pool_gates(q_discard, q_keep, 0):
        if kind == _CNOT:
            apply_cnot(state, a, b)
        elif kind == _RY:
            apply_1q(state, a, ry_matrix(sign * betas[pidx - 8]))
        else:
            apply_1q(state, a, rz_matrix(sign * betas[pidx - 8]))
    return state


def qcnn_forward(state: StateVector, arch: QCNNArchitecture, params,
                 _program=None) -> float:
    """<Z> on the output qubit after the full network; input is not mutated."""
    params = np.asarray(params, dtype=float)
    if state.num_qubits != arch.num_qubits:
        raise ValueError("state size does not match architecture")
    if params.shape != (arch.num_params,):
        raise ValueError(f"expected {arch.num_params} parameters")
    amps = state.amplitudes.copy()
    _run_program(amps, _program if _program is not None else compile_program(arch),
                 params)
    return float(_z_expect(amps, arch.output_qubit))


def _forward_and_grad(amps_in, gates, params, nparams, out_qubit):
    """(y_out, dy/dparams) for one input state via the adjoint sweep."""
    ket = amps_in.copy()
    _run_program(ket, gates, params)
    y = float(_z_expect(ket, out_qubit))
    lam = ket.copy()
    _apply_z(lam, out_qubit)
    grad = np.zeros(nparams)
    for kind, a, b, pidx, sign in reversed(gates):
        if kind == _CNOT:
            _cnot_kernel(ket, a, b)
            _cnot_kernel(lam, a, b)
            continue
        # d/dtheta R(theta) = -i/2 * G * R(theta); contribution to dy is
        # 2 Re <lam| dU |pre> = Im <lam| G |post>, accumulated with the
        # gate's sign relative to the shared parameter.
        if kind == _RY:
            grad[pidx] += sign * _grad_dot_y(lam, ket, a)
            theta = -sign * params[pidx]
            _ry_kernel(ket, a, theta)
            _ry_kernel(lam, a, theta)
        else:
            grad[pidx] += sign * _grad_dot_z(lam, ket, a)
            theta = -sign * params[pidx]
            _rz_kernel(ket, a, theta)
            _rz_kernel(lam, a, theta)
    return y, grad


_P_CLAMP = 1e-7


def _probabilities(y_outs):
    return np.clip((1.0 + np.asarray(y_outs)) / 2.0, _P_CLAMP, 1.0 - _P_CLAMP)


def qcnn_loss(states, labels, arch: QCNNArchitecture, params,
              l2_strength: float = 0.0) -> float:
    """Binary cross-entropy + lambda ||params||^2 / batch_size."""
    if len(states) == 0:
        raise ValueError("empty batch")
    params = np.asarray(params, dtype=float)
    labels = np.asarray(labels, dtype=float)
    program = compile_program(arch)
    ys = [qcnn_forward(s, arch, params, _program=program) for s in states]
    p = _probabilities(ys)
    n = len(states)
    bce = -float(np.mean(labels * np.log(p) + (1 - labels) * np.log(1 - p)))
    return bce + l2_strength * float(params @ params) / n


def qcnn_gradient(states, labels, arch: QCNNArchitecture, params,
                  l2_strength: float = 0.0) -> np.ndarray:
    """Exact gradient of qcnn_loss over all shared parameters."""
    if len(states) == 0:
        raise ValueError("empty batch")
    params = np.asarray(params, dtype=float)
    labels = np.asarray(labels, dtype=float)
    gates = compile_program(arch)
    n = len(states)
    grad = 2.0 * l2_strength * params / n
    for state, y_label in zip(states, labels):
        y, dy = _forward_and_grad(state.amplitudes, gates, params,
                                  arch.num_params, arch.output_qubit)
        p = (1.0 + y) / 2.0
        if p <= _P_CLAMP or p >= 1.0 - _P_CLAMP:
            continue  # clamped: loss is locally flat in y_out
        dl_dp = -(y_label / p - (1.0 - y_label) / (1.0 - p)) / n
        grad += (dl_dp * 0.5) * dy
    return grad


def predict_phase(state: StateVector, arch: QCNNArchitecture, params) -> int:
    """-1 (topological) if y_out <= 0 else +1 (ferromagnetic)."""
    return -1 if qcnn_forward(state, arch, params) <= 0.0 else 1


@dataclass
class TrainConfig:
    epochs: int = 100
    batch_size: int = 24
    learning_rate: float = 0.01
    l2_strength: float = 1e-4
    lr_decay_factor: float = 0.5
    lr_decay_every: int = 20
    convergence_delta: float = 1e-3
    convergence_patience: int = 3
    restarts: int = 3
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1 or self.learning_rate <= 0:
            raise ValueError("invalid training configuration")
        if self.restarts < 1 or self.convergence_patience < 1:
            raise ValueError("invalid training configuration")


def train_qcnn(states, labels, arch: QCNNArchitecture, config: TrainConfig):
    """Adam on minibatches with step-decayed learning rate.

    Runs config.restarts independent initializations and keeps the one
    with the highest training accuracy (final epoch loss breaks ties);
    the loss landscape has shallow minima whose training accuracy varies
    noticeably between runs.  Returns (params, per-epoch loss history)
    of the selected run.
    """
    if len(states) == 0:
        raise ValueError("empty training set")
    labels = np.asarray(labels, dtype=float)
    gates = compile_program(arch)
    best = None
    for restart in range(config.restarts):
        params, history = _train_once(states, labels, arch, gates, config,
                                      np.random.default_rng(
                                          [config.seed, restart]))
        hits = 0
        for state, yl in zip(states, labels):
            amps = state.amplitudes.copy()
            _run_program(amps, gates, params)
            y = float(_z_expect(amps, arch.output_qubit))
            hits += (y > 0.0) == (yl > 0.5)
        key = (-hits, history[-1])
        if best is None or key < best[0]:
            best = (key, params, history)
    return best[1], best[2]


def _train_once(states, labels, arch, gates, config, rng):
    params = rng.uniform(-np.pi, np.pi, size=arch.num_params)
    m = np.zeros_like(params)
    v = np.zeros_like(params)
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    t = 0
    history = []
    n = len(states)
    for epoch in range(config.epochs):
        lr = config.learning_rate * config.lr_decay_factor ** (
            epoch // config.lr_decay_every
        )
        order = rng.permutation(n)
        epoch_losses = []
        for start in range(0, n, config.batch_size):
            batch = order[start:start + config.batch_size]
            bsize = len(batch)
            grad = 2.0 * config.l2_strength * params / bsize
            loss = config.l2_strength * float(params @ params) / bsize
            for i in batch:
                y, dy = _forward_and_grad(states[i].amplitudes, gates, params,
                                          arch.num_params, arch.output_qubit)
                p = min(max((1.0 + y) / 2.0, _P_CLAMP), 1.0 - _P_CLAMP)
                yl = labels[i]
                loss -= (yl * math.log(p) + (1 - yl) * math.log(1 - p)) / bsize
                if _P_CLAMP < p < 1.0 - _P_CLAMP:
                    dl_dp = -(yl / p - (1.0 - yl) / (1.0 - p)) / bsize
                    grad += (dl_dp * 0.5) * dy
            t += 1
            m = beta1 * m + (1 - beta1) * grad
            v = beta2 * v + (1 - beta2) * grad * grad
            m_hat = m / (1 - beta1**t)
            v_hat = v / (1 - beta2**t)
            params = params - lr * m_hat / (np.sqrt(v_hat) + eps)
            epoch_losses.append(loss)
        history.append(float(np.mean(epoch_losses)))
        deltas = np.abs(np.diff(history[-(config.convergence_patience + 1):]))
        if (len(deltas) >= config.convergence_patience
                and np.all(deltas < config.convergence_delta)):
            break
    return params, history


def save_params(path, arch: QCNNArchitecture, params) -> None:
    doc = {
        "format_version": PARAMS_FILE_VERSION,
        "num_qubits": arch.num_qubits,
        "stages": [list(st.active) for st in arch.stages],
        "params": [float(p) for p in np.asarray(params)],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)


def load_params(path):
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("format_version") != PARAMS_FILE_VERSION:
        raise ValueError(f"unsupported params file version {doc.get('format_version')}")
    arch = build_architecture(doc["num_qubits"])
    stored = [list(st.active) for st in arch.stages]
    if stored != doc["stages"]:
        raise ValueError("stage schedule in file does not match architecture")
    params = np.asarray(doc["params"], dtype=float)
    if params.shape != (arch.num_params,):
        raise ValueError("parameter count mismatch in params file")
    return arch, params
