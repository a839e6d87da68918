import numpy as np
import pytest

from loopgas import sim
from loopgas.sim import (PauliString, StateVector, apply_1q, apply_cnot,
                         apply_pauli, apply_x_string, expect_pauli,
                         inner_product, load_state, ry_matrix, rz_matrix,
                         save_state, zero_state)


def random_state(n, rng):
    amps = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return StateVector(n, amps / np.linalg.norm(amps))


def test_zero_state():
    s = zero_state(1)
    assert np.allclose(s.amplitudes, [1, 0])
    s = zero_state(4)
    assert np.isclose(np.linalg.norm(s.amplitudes), 1.0)
    assert np.flatnonzero(s.amplitudes).tolist() == [0]


def test_zero_state_bounds():
    with pytest.raises(ValueError):
        zero_state(0)
    with pytest.raises(ValueError):
        zero_state(sim.MAX_QUBITS + 1)


def test_ry_on_zero():
    s = apply_1q(zero_state(1), 0, ry_matrix(np.pi / 2))
    assert np.allclose(s.amplitudes, [1 / np.sqrt(2), 1 / np.sqrt(2)])


def test_ry_matrix_pinned():
    theta = 0.7
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    assert np.allclose(ry_matrix(theta), [[c, -s], [s, c]])


def test_rz_global_phase_only():
    z = PauliString(ops=((0, "Z"),))
    before = expect_pauli(zero_state(1), z)
    s = apply_1q(zero_state(1), 0, rz_matrix(1.3))
    assert np.isclose(abs(s.amplitudes[0]), 1.0)
    assert np.isclose(expect_pauli(s, z), before)


def test_rz_matrix_pinned():
    theta = 0.7
    expected = np.diag([np.exp(-1j * theta / 2), np.exp(1j * theta / 2)])
    assert np.allclose(rz_matrix(theta), expected)


def test_apply_1q_rejects_nonunitary():
    with pytest.raises(ValueError):
        apply_1q(zero_state(1), 0, np.array([[1.0, 0.0], [0.0, 2.0]]))


def test_cnot_truth_table():
    # |10> (qubit 0 = 1) -> |11>, control = qubit 0
    s = StateVector(2, np.array([0, 1, 0, 0], dtype=complex))
    out = apply_cnot(s, 0, 1)
    assert np.allclose(out.amplitudes, [0, 0, 0, 1])
    out = apply_cnot(zero_state(2), 0, 1)
    assert np.allclose(out.amplitudes, [1, 0, 0, 0])


def test_cnot_creates_bell_state():
    plus = np.zeros(4, dtype=complex)
    plus[0] = plus[1] = 1 / np.sqrt(2)  # (|00> + |10>)/sqrt(2), qubit 0 mixed
    out = apply_cnot(StateVector(2, plus), 0, 1)
    expected = np.zeros(4, dtype=complex)
    expected[0] = expected[3] = 1 / np.sqrt(2)
    assert np.allclose(out.amplitudes, expected)


def test_x_string_full_flip():
    out = apply_x_string(zero_state(4), {0, 1, 2, 3})
    assert np.flatnonzero(out.amplitudes).tolist() == [0b1111]


def test_x_string_involution(rng):
    s = random_state(5, rng)
    before = s.amplitudes.copy()
    apply_x_string(apply_x_string(s, {0, 2, 4}), {0, 2, 4})
    assert np.allclose(s.amplitudes, before)


def test_expect_z_on_zero():
    assert np.isclose(expect_pauli(zero_state(1), PauliString(ops=((0, "Z"),))), 1.0)


def test_expect_x_string_on_ghz():
    amps = np.zeros(16, dtype=complex)
    amps[0] = amps[15] = 1 / np.sqrt(2)
    ghz = StateVector(4, amps)
    xxxx = PauliString(ops=tuple((q, "X") for q in range(4)))
    assert np.isclose(expect_pauli(ghz, xxxx), 1.0)


def test_expect_y_hermitian(rng):
    s = random_state(3, rng)
    before = s.amplitudes.copy()
    y = PauliString(ops=((1, "Y"),))
    value = expect_pauli(s, y)
    apply_pauli(s, y)
    assert np.isclose(value, float(np.real(np.vdot(before, s.amplitudes))))


def test_inner_product():
    assert np.isclose(inner_product(zero_state(2), zero_state(2)), 1.0)
    plus = apply_1q(zero_state(1), 0, ry_matrix(np.pi / 2))
    assert np.isclose(inner_product(zero_state(1), plus), 1 / np.sqrt(2))


def test_pauli_involutions(rng):
    for letter in "XYZ":
        s = random_state(4, rng)
        before = s.amplitudes.copy()
        p = PauliString(ops=((2, letter),))
        apply_pauli(apply_pauli(s, p), p)
        assert np.allclose(s.amplitudes, before)


def test_norm_preserved_over_many_ops(rng):
    s = random_state(6, rng)
    for _ in range(1000):
        kind = rng.integers(3)
        if kind == 0:
            s = apply_1q(s, int(rng.integers(6)), ry_matrix(rng.uniform(0, 2 * np.pi)))
        elif kind == 1:
            s = apply_1q(s, int(rng.integers(6)), rz_matrix(rng.uniform(0, 2 * np.pi)))
        else:
            c, t = rng.choice(6, size=2, replace=False)
            s = apply_cnot(s, int(c), int(t))
    assert abs(np.linalg.norm(s.amplitudes) - 1.0) < 1e-10


def test_state_round_trip(tmp_path, rng):
    s = random_state(5, rng)
    path = tmp_path / "state.lgsv"
    save_state(path, s)
    loaded = load_state(path)
    assert loaded.num_qubits == 5
    assert np.array_equal(loaded.amplitudes, s.amplitudes)


def test_load_rejects_bad_magic(tmp_path):
    path = tmp_path / "bad.lgsv"
    path.write_bytes(b"XXXX" + bytes(12))
    with pytest.raises(ValueError):
        load_state(path)


def test_load_rejects_truncation(tmp_path, rng):
    s = random_state(4, rng)
    path = tmp_path / "short.lgsv"
    save_state(path, s)
    data = path.read_bytes()
    path.write_bytes(data[:-8])
    with pytest.raises(ValueError):
        load_state(path)


def test_load_rejects_unknown_version(tmp_path, rng):
    s = random_state(2, rng)
    path = tmp_path / "vers.lgsv"
    save_state(path, s)
    data = bytearray(path.read_bytes())
    data[4] = 99
    path.write_bytes(bytes(data))
    with pytest.raises(ValueError):
        load_state(path)
