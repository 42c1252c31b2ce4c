"""Statevector simulation of the layered Ry/CNOT ansatz.

States are plain numpy vectors of length 2**Q indexed with the encoder's
bit convention (bit i of the index is qubit i, qubit 0 least significant).
The ry_only family keeps amplitudes real by construction (float64 dtype);
the Rx-extended ry_rx family promotes to complex128.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .encoder import SpinHamiltonian

RY_ONLY = "ry_only"
RY_RX = "ry_rx"


def linear_chain(n_qubits: int) -> tuple[tuple[int, int], ...]:
    """Default entangler: qubit i controls qubit i+1, one pass."""
    return tuple((i, i + 1) for i in range(n_qubits - 1))


@dataclass(frozen=True)
class Ansatz:
    """Layered rotation circuit: base Ry layer, then ``depth`` repetitions
    of [CNOT entangler; rotation layer].

    For ry_rx, each non-base layer applies Ry then Rx on every qubit (the
    base layer stays Ry only).  Parameter order is lexicographic in
    (layer, qubit, gate) with Ry before Rx within a qubit.
    """

    n_qubits: int
    depth: int = 1
    family: str = RY_ONLY
    entangler: tuple[tuple[int, int], ...] = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError("need at least one qubit")
        if self.depth < 0:
            raise ValueError("depth must be >= 0")
        if self.family not in (RY_ONLY, RY_RX):
            raise ValueError(f"unknown ansatz family {self.family!r}")
        if self.entangler is None:
            object.__setattr__(self, "entangler", linear_chain(self.n_qubits))
        else:
            object.__setattr__(self, "entangler", tuple(tuple(p) for p in self.entangler))
        for c, t in self.entangler:
            if not (0 <= c < self.n_qubits and 0 <= t < self.n_qubits) or c == t:
                raise ValueError(f"bad entangler pair ({c}, {t})")

    @property
    def rotations_per_layer(self) -> int:
        return self.n_qubits * (2 if self.family == RY_RX else 1)

    @property
    def n_params(self) -> int:
        return self.n_qubits + self.depth * self.rotations_per_layer

    @property
    def dtype(self):
        return np.complex128 if self.family == RY_RX else np.float64


def _check_params(ansatz: Ansatz, params) -> np.ndarray:
    params = np.asarray(params, dtype=float)
    if params.shape != (ansatz.n_params,):
        raise ValueError(
            f"expected {ansatz.n_params} parameters, got shape {params.shape}"
        )
    return params


def _apply_ry(state: np.ndarray, qubit: int, theta: float) -> None:
    c, s = np.cos(theta / 2.0), np.sin(theta / 2.0)
    v = state.reshape(-1, 2, 1 << qubit)
    a0 = v[:, 0, :].copy()
    a1 = v[:, 1, :].copy()
    v[:, 0, :] = c * a0 - s * a1
    v[:, 1, :] = s * a0 + c * a1


def _apply_rx(state: np.ndarray, qubit: int, theta: float) -> None:
    c, s = np.cos(theta / 2.0), np.sin(theta / 2.0)
    v = state.reshape(-1, 2, 1 << qubit)
    a0 = v[:, 0, :].copy()
    a1 = v[:, 1, :].copy()
    v[:, 0, :] = c * a0 - 1j * s * a1
    v[:, 1, :] = -1j * s * a0 + c * a1


@lru_cache(maxsize=256)
def _cnot_perm(n_qubits: int, control: int, target: int) -> np.ndarray:
    idx = np.arange(1 << n_qubits)
    perm = np.where((idx >> control) & 1 == 1, idx ^ (1 << target), idx)
    perm.setflags(write=False)
    return perm


def _apply_cnot(state: np.ndarray, n_qubits: int, control: int, target: int) -> np.ndarray:
    return state[_cnot_perm(n_qubits, control, target)]


def prepare(ansatz: Ansatz, params) -> np.ndarray:
    """Run the circuit on |0...0> and return the statevector."""
    params = _check_params(ansatz, params)
    state = np.zeros(1 << ansatz.n_qubits, dtype=ansatz.dtype)
    state[0] = 1.0
    k = 0
    for q in range(ansatz.n_qubits):
        _apply_ry(state, q, params[k])
        k += 1
    for _ in range(ansatz.depth):
        for c, t in ansatz.entangler:
            state = _apply_cnot(state, ansatz.n_qubits, c, t)
        for q in range(ansatz.n_qubits):
            _apply_ry(state, q, params[k])
            k += 1
            if ansatz.family == RY_RX:
                _apply_rx(state, q, params[k])
                k += 1
    return state


def derivative_state(ansatz: Ansatz, params, i: int) -> np.ndarray:
    """d|phi>/d(theta_i), via the pi parameter shift of the single gate.

    dR(theta)/dtheta = (1/2) R(theta + pi) for Rx and Ry, so the derivative
    state is half the circuit output with theta_i shifted.  Not unit norm
    (norm is exactly 1/2).
    """
    params = _check_params(ansatz, params)
    if not 0 <= i < ansatz.n_params:
        raise IndexError(f"parameter index {i} out of range")
    shifted = params.copy()
    shifted[i] += np.pi
    return 0.5 * prepare(ansatz, shifted)


def derivative_states(ansatz: Ansatz, params) -> np.ndarray:
    """All parameter derivatives stacked into a (n_params, 2**Q) matrix."""
    params = _check_params(ansatz, params)
    out = np.empty((ansatz.n_params, 1 << ansatz.n_qubits), dtype=ansatz.dtype)
    for i in range(ansatz.n_params):
        out[i] = derivative_state(ansatz, params, i)
    return out


def _check_dims(state: np.ndarray, h: SpinHamiltonian) -> None:
    if state.shape != (1 << h.n_qubits,):
        raise ValueError(
            f"state dimension {state.shape} does not match {h.n_qubits} qubits"
        )


def expectation(state: np.ndarray, h: SpinHamiltonian) -> float:
    """<state|H|state> using the precomputed diagonal."""
    state = np.asarray(state)
    _check_dims(state, h)
    probs = np.abs(state) ** 2 if np.iscomplexobj(state) else state**2
    return float(h.diagonal() @ probs)


def transition_expectation(bra: np.ndarray, h: SpinHamiltonian, ket: np.ndarray) -> float:
    """Re <bra|H|ket> for a diagonal H."""
    bra, ket = np.asarray(bra), np.asarray(ket)
    _check_dims(bra, h)
    _check_dims(ket, h)
    return float(np.real(np.vdot(bra, h.diagonal() * ket)))


def amplitude(state: np.ndarray, basis_index: int) -> float | complex:
    """Amplitude on one basis state (real for the ry_only family)."""
    if not 0 <= basis_index < len(state):
        raise IndexError(f"basis index {basis_index} out of range")
    a = state[basis_index]
    return complex(a) if np.iscomplexobj(state) else float(a)


def sample(state: np.ndarray, shots: int, rng_seed: int) -> np.ndarray:
    """Multinomial measurement histogram over basis indices.

    Deterministic for a fixed seed; returns integer counts of length 2**Q.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    probs = np.abs(np.asarray(state)) ** 2
    probs = probs / probs.sum()
    rng = np.random.default_rng(rng_seed)
    return rng.multinomial(shots, probs)


def ansatz_to_json(ansatz: Ansatz) -> dict:
    return {
        "n_qubits": ansatz.n_qubits,
        "depth": ansatz.depth,
        "family": ansatz.family,
        "entangler": [list(p) for p in ansatz.entangler],
    }


def ansatz_from_json(doc: dict) -> Ansatz:
    return Ansatz(
        n_qubits=doc["n_qubits"],
        depth=doc["depth"],
        family=doc["family"],
        entangler=tuple(tuple(p) for p in doc["entangler"]),
    )


def save_statevector(state: np.ndarray, path) -> None:
    """Raw little-endian float64 dump plus a JSON sidecar with Q and norm."""
    state = np.asarray(state)
    if np.iscomplexobj(state):
        raise ValueError("statevector dumps are defined for real amplitudes only")
    n_qubits = int(np.log2(len(state)))
    if 1 << n_qubits != len(state):
        raise ValueError("state length is not a power of two")
    path = str(path)
    state.astype("<f8").tofile(path)
    with open(path + ".json", "w") as f:
        json.dump({"n_qubits": n_qubits, "norm": float(np.linalg.norm(state))}, f)


def load_statevector(path) -> np.ndarray:
    path = str(path)
    state = np.fromfile(path, dtype="<f8")
    with open(path + ".json") as f:
        sidecar = json.load(f)
    if len(state) != 1 << sidecar["n_qubits"]:
        raise ValueError("statevector dump does not match its sidecar")
    return state
