"""Statevector simulator tests; derivatives are checked against central
finite differences and expectations against dense diagonal arithmetic."""

import json

import numpy as np
import pytest

from qite_factor import (
    Ansatz,
    allocate_bits,
    amplitude,
    compile_hamiltonian,
    derivative_state,
    derivative_states,
    expectation,
    prepare,
    sample,
    transition_expectation,
)
from qite_factor.simulator import (
    RY_RX,
    ansatz_from_json,
    ansatz_to_json,
    linear_chain,
    load_statevector,
    save_statevector,
)

H15 = compile_hamiltonian(15, allocate_bits(15, override=(3, 2)))


def random_params(ansatz, seed):
    return np.random.default_rng(seed).uniform(0, 2 * np.pi, ansatz.n_params)


# --- ansatz structure ---------------------------------------------------------


def test_param_counts():
    assert Ansatz(3, depth=0).n_params == 3
    assert Ansatz(3, depth=1).n_params == 6
    assert Ansatz(3, depth=2, family=RY_RX).n_params == 3 * 3 + 3 * 2
    assert Ansatz(5, depth=1).entangler == ((0, 1), (1, 2), (2, 3), (3, 4))


def test_ansatz_validation():
    with pytest.raises(ValueError):
        Ansatz(0)
    with pytest.raises(ValueError):
        Ansatz(2, depth=-1)
    with pytest.raises(ValueError):
        Ansatz(2, family="rz_only")
    with pytest.raises(ValueError):
        Ansatz(2, entangler=((0, 5),))


def test_param_count_mismatch_raises():
    with pytest.raises(ValueError):
        prepare(Ansatz(3, depth=1), np.zeros(5))


# --- preparation --------------------------------------------------------------


def test_base_layer_half_pi_gives_uniform_superposition():
    state = prepare(Ansatz(3, depth=0), np.full(3, np.pi / 2))
    assert np.allclose(state, np.full(8, 1 / np.sqrt(8)), atol=1e-15)


def test_all_zero_angles_give_ground_state():
    state = prepare(Ansatz(2, depth=1), np.zeros(4))
    assert state.tolist() == [1.0, 0.0, 0.0, 0.0]


def test_single_qubit_ry():
    theta = 0.73
    state = prepare(Ansatz(1, depth=0), [theta])
    assert np.allclose(state, [np.cos(theta / 2), np.sin(theta / 2)], atol=1e-15)


def test_basis_corner_matches_encoder_indexing():
    # angles (0, pi, pi) prepare |x2 x1 x0> = |110>, the N=15 solution
    state = prepare(Ansatz(3, depth=0), [0.0, np.pi, np.pi])
    assert abs(amplitude(state, 6)) == pytest.approx(1.0, abs=1e-12)
    assert expectation(state, H15) == pytest.approx(0.0, abs=1e-12)


def test_norm_preserved_for_random_angles():
    rng = np.random.default_rng(0)
    for n_qubits, depth, family in [(2, 1, "ry_only"), (5, 2, "ry_only"), (7, 1, "ry_only"), (3, 2, RY_RX)]:
        ansatz = Ansatz(n_qubits, depth=depth, family=family)
        for _ in range(5):
            state = prepare(ansatz, rng.uniform(0, 2 * np.pi, ansatz.n_params))
            assert abs(np.linalg.norm(state) - 1.0) < 1e-12


def test_ry_only_states_are_real_by_dtype():
    state = prepare(Ansatz(4, depth=2), random_params(Ansatz(4, depth=2), 3))
    assert state.dtype == np.float64


def test_ry_rx_states_are_complex():
    ansatz = Ansatz(2, depth=1, family=RY_RX)
    state = prepare(ansatz, random_params(ansatz, 4))
    assert state.dtype == np.complex128
    assert np.abs(state.imag).max() > 1e-3


def test_layer_inverse_returns_input():
    # running the circuit with negated angles in reverse order undoes it
    ansatz = Ansatz(3, depth=0)
    theta = random_params(ansatz, 5)
    state = prepare(ansatz, theta)
    back = prepare(Ansatz(3, depth=0), -theta)  # base layer only: Ry(-t)Ry(t)=I
    # compose manually: apply inverse rotations to state
    from qite_factor.simulator import _apply_ry

    out = state.copy()
    for q in range(3):
        _apply_ry(out, q, -theta[q])
    assert np.allclose(out, [1, 0, 0, 0, 0, 0, 0, 0], atol=1e-12)
    assert np.allclose(np.linalg.norm(back), 1.0, atol=1e-12)


def test_cnot_is_self_inverse():
    from qite_factor.simulator import _apply_cnot

    rng = np.random.default_rng(6)
    state = rng.normal(size=8)
    state /= np.linalg.norm(state)
    once = _apply_cnot(state, 3, 0, 2)
    twice = _apply_cnot(once, 3, 0, 2)
    assert np.array_equal(twice, state)


# --- derivatives ---------------------------------------------------------------


def test_derivative_single_qubit_at_zero():
    d = derivative_state(Ansatz(1, depth=0), [0.0], 0)
    assert np.allclose(d, [0.0, 0.5], atol=1e-15)


def test_derivative_orthogonal_to_state():
    ansatz = Ansatz(4, depth=2)
    theta = random_params(ansatz, 7)
    state = prepare(ansatz, theta)
    for i in range(ansatz.n_params):
        assert abs(derivative_state(ansatz, theta, i) @ state) < 1e-12


def test_derivative_matches_central_differences():
    eps = 1e-4
    rng = np.random.default_rng(8)
    for n_qubits, depth in [(2, 1), (3, 2), (5, 1)]:
        ansatz = Ansatz(n_qubits, depth=depth)
        theta = rng.uniform(0, 2 * np.pi, ansatz.n_params)
        i = int(rng.integers(ansatz.n_params))
        plus, minus = theta.copy(), theta.copy()
        plus[i] += eps
        minus[i] -= eps
        fd = (prepare(ansatz, plus) - prepare(ansatz, minus)) / (2 * eps)
        assert np.linalg.norm(fd - derivative_state(ansatz, theta, i)) <= 1e-6


def test_derivative_index_out_of_range():
    with pytest.raises(IndexError):
        derivative_state(Ansatz(2, depth=0), np.zeros(2), 5)


def test_derivative_states_stack():
    ansatz = Ansatz(3, depth=1)
    theta = random_params(ansatz, 9)
    D = derivative_states(ansatz, theta)
    assert D.shape == (6, 8)
    for i in range(6):
        assert np.array_equal(D[i], derivative_state(ansatz, theta, i))


# --- expectations ----------------------------------------------------------------


def test_uniform_expectation_is_mean_energy():
    state = prepare(Ansatz(3, depth=0), np.full(3, np.pi / 2))
    assert expectation(state, H15) == pytest.approx(90.0, abs=1e-12)


def test_basis_state_expectation():
    state = np.zeros(8)
    state[6] = 1.0
    assert expectation(state, H15) == 0.0


def test_zero_hamiltonian_expectation():
    from qite_factor import SpinHamiltonian

    h0 = SpinHamiltonian(n_qubits=3, terms=())
    state = prepare(Ansatz(3, depth=1), random_params(Ansatz(3, depth=1), 10))
    assert expectation(state, h0) == 0.0


def test_expectation_dimension_mismatch():
    with pytest.raises(ValueError):
        expectation(np.ones(4) / 2, H15)


def test_transition_expectation_reduces_to_expectation():
    state = prepare(Ansatz(3, depth=1), random_params(Ansatz(3, depth=1), 11))
    assert transition_expectation(state, H15, state) == pytest.approx(
        expectation(state, H15), abs=1e-12
    )


def test_transition_expectation_orthogonal_basis_states():
    a, b = np.zeros(8), np.zeros(8)
    a[2], b[5] = 1.0, 1.0
    assert transition_expectation(a, H15, b) == 0.0


def test_transition_expectation_against_dense_oracle():
    rng = np.random.default_rng(12)
    bra = rng.normal(size=8)
    ket = rng.normal(size=8)
    dense = np.diag(H15.diagonal())
    want = bra @ dense @ ket
    assert abs(transition_expectation(bra, H15, ket) - want) <= 1e-12


# --- amplitudes and sampling ------------------------------------------------------


def test_uniform_amplitude():
    state = prepare(Ansatz(3, depth=0), np.full(3, np.pi / 2))
    assert amplitude(state, 5) == pytest.approx(1 / np.sqrt(8))


def test_amplitude_out_of_range():
    with pytest.raises(IndexError):
        amplitude(np.ones(8) / np.sqrt(8), 8)


def test_sample_basis_state_concentrates():
    state = np.zeros(8)
    state[3] = 1.0
    counts = sample(state, 1000, rng_seed=1)
    assert counts[3] == 1000 and counts.sum() == 1000


def test_sample_uniform_statistics():
    state = np.full(4, 0.5)
    counts = sample(state, 10**6, rng_seed=42)
    sigma = np.sqrt(10**6 * 0.25 * 0.75)
    assert np.all(np.abs(counts - 250000) <= 3 * sigma)


def test_sample_deterministic_for_fixed_seed():
    state = prepare(Ansatz(3, depth=1), random_params(Ansatz(3, depth=1), 13))
    assert np.array_equal(sample(state, 500, 7), sample(state, 500, 7))


def test_sample_rejects_zero_shots():
    with pytest.raises(ValueError):
        sample(np.ones(2) / np.sqrt(2), 0, 0)


# --- serialization -----------------------------------------------------------------


def test_ansatz_json_roundtrip():
    ansatz = Ansatz(4, depth=2, family=RY_RX, entangler=((0, 2), (1, 3)))
    assert ansatz_from_json(ansatz_to_json(ansatz)) == ansatz
    doc = ansatz_to_json(Ansatz(3))
    assert doc == {
        "n_qubits": 3,
        "depth": 1,
        "family": "ry_only",
        "entangler": [[0, 1], [1, 2]],
    }


def test_statevector_dump_roundtrip(tmp_path):
    state = prepare(Ansatz(3, depth=1), random_params(Ansatz(3, depth=1), 14))
    path = tmp_path / "state.f64"
    save_statevector(state, path)
    again = load_statevector(path)
    assert np.array_equal(again, state)
    sidecar = json.loads((tmp_path / "state.f64.json").read_text())
    assert sidecar["n_qubits"] == 3
    assert sidecar["norm"] == pytest.approx(1.0, abs=1e-12)


def test_statevector_dump_rejects_complex(tmp_path):
    ansatz = Ansatz(2, depth=1, family=RY_RX)
    state = prepare(ansatz, random_params(ansatz, 15))
    with pytest.raises(ValueError):
        save_statevector(state, tmp_path / "c.f64")
