"""The variational imaginary-time loop.

Each iteration builds the overlap matrix M and driving vector C from the
circuit's parameter-derivative states, solves the ridge-regularized
system M thetadot = C, and Euler-steps the parameters.  C is fixed to
-(1/2) dE/dtheta so the update always descends the energy; the raw Euler
increment is additionally clipped to a trust radius (default: the time
step itself) because the squared-cost Hamiltonians reach energies of 1e4
and make the unclipped flow stiff far beyond Euler stability.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, asdict

import numpy as np
import scipy.linalg

from .encoder import SpinHamiltonian, term_count_bound
from .simulator import RY_ONLY, Ansatz, derivative_states, prepare, sample
from .trace import (
    STATUS_FAILURE,
    STATUS_MAX_ITERS,
    STATUS_THRESHOLD,
    RunTrace,
)


class NumericalFailure(RuntimeError):
    """Linear solve produced non-finite values or lost positive definiteness."""


@dataclass
class QiteConfig:
    """Knobs for one QITE run.

    ``step_cap`` bounds the parameter-increment norm per iteration
    (None means use ``dtau``; ``math.inf`` disables clipping and gives the
    raw Euler update).  ``shots`` switches target tracking to finite-shot
    estimates drawn from the prepared state, emulating hardware statistics.
    """

    dtau: float = 0.1
    max_iters: int = 500
    amp_threshold: float = 0.85
    ridge_lambda: float = 1e-6
    init_mode: str = "perturbed"  # uniform | random | perturbed
    perturb_eps: float = 1e-2
    rng_seed: int = 0
    depth: int = 1
    track_targets: tuple[int, ...] = ()
    step_cap: float | None = None
    shots: int | None = None

    def __post_init__(self):
        if self.dtau <= 0:
            raise ValueError("dtau must be positive")
        if not 0 < self.amp_threshold <= 1:
            raise ValueError("amp_threshold must be in (0, 1]")
        if self.ridge_lambda < 0:
            raise ValueError("ridge_lambda must be >= 0")
        if self.init_mode not in ("uniform", "random", "perturbed"):
            raise ValueError(f"unknown init_mode {self.init_mode!r}")
        self.track_targets = tuple(int(z) for z in self.track_targets)


@dataclass
class McLachlanSystem:
    """The linear system M thetadot = C of one iteration."""

    M: np.ndarray
    C: np.ndarray


def mclachlan_system(
    ansatz: Ansatz,
    params,
    h: SpinHamiltonian,
    deriv: np.ndarray | None = None,
    state: np.ndarray | None = None,
) -> McLachlanSystem:
    """Build both sides of the update system, sharing the derivative states."""
    D = derivative_states(ansatz, params) if deriv is None else deriv
    return McLachlanSystem(
        M=build_M(ansatz, params, deriv=D),
        C=build_C(ansatz, params, h, deriv=D, state=state),
    )


def init_params(ansatz: Ansatz, mode: str, rng: np.random.Generator, eps: float = 1e-2) -> np.ndarray:
    """Initial angles: uniform superposition (base layer pi/2, rest 0),
    fully random in [0, 2pi), or the uniform mode with +-eps noise on the
    non-base angles."""
    params = np.zeros(ansatz.n_params)
    params[: ansatz.n_qubits] = np.pi / 2
    if mode == "uniform":
        return params
    if mode == "random":
        return rng.uniform(0.0, 2.0 * np.pi, ansatz.n_params)
    if mode == "perturbed":
        params[ansatz.n_qubits :] += rng.uniform(-eps, eps, ansatz.n_params - ansatz.n_qubits)
        return params
    raise ValueError(f"unknown init mode {mode!r}")


def build_M(ansatz: Ansatz, params, deriv: np.ndarray | None = None) -> np.ndarray:
    """M_ij = Re <d_i phi | d_j phi>, symmetric by construction.

    ``deriv`` lets callers reuse a derivative-state matrix already built
    for the same parameters.
    """
    D = derivative_states(ansatz, params) if deriv is None else deriv
    G = np.real(D @ D.conj().T)
    upper = np.triu(G)
    return upper + np.triu(G, 1).T


def build_C(
    ansatz: Ansatz,
    params,
    h: SpinHamiltonian,
    deriv: np.ndarray | None = None,
    state: np.ndarray | None = None,
) -> np.ndarray:
    """C_i = -(1/2) dE/dtheta_i = -Re <d_i phi|H|phi>.

    The sign makes the Euler update descend the energy.
    """
    D = derivative_states(ansatz, params) if deriv is None else deriv
    phi = prepare(ansatz, params) if state is None else state
    return -np.real(D.conj() @ (h.diagonal() * phi))


def solve_step(M, C, dtau: float, ridge_lambda: float) -> tuple[np.ndarray, float]:
    """Solve (M + ridge*I) thetadot = C by Cholesky; return (thetadot*dtau,
    residual ||M thetadot - C||)."""
    M = np.asarray(M, dtype=float)
    C = np.asarray(C, dtype=float)
    if not (np.all(np.isfinite(M)) and np.all(np.isfinite(C))):
        raise NumericalFailure("non-finite entries in the McLachlan system")
    A = M + ridge_lambda * np.eye(len(C))
    try:
        cho = scipy.linalg.cho_factor(A, lower=True)
        thetadot = scipy.linalg.cho_solve(cho, C)
    except scipy.linalg.LinAlgError as exc:
        raise NumericalFailure(f"Cholesky factorization failed: {exc}") from exc
    if not np.all(np.isfinite(thetadot)):
        raise NumericalFailure("non-finite parameter velocity")
    residual = float(np.linalg.norm(M @ thetadot - C))
    return thetadot * dtau, residual


def _clip_step(step: np.ndarray, cap: float) -> np.ndarray:
    norm = float(np.linalg.norm(step))
    if norm > cap:
        step = step * (cap / norm)
    return step


def _tracked_amps(state: np.ndarray, targets, shots, rng) -> np.ndarray:
    if shots is None:
        return np.abs(state[list(targets)]) if targets else np.empty(0)
    counts = sample(state, shots, int(rng.integers(0, 2**63 - 1)))
    freqs = counts / shots
    return np.sqrt(freqs[list(targets)]) if targets else np.empty(0)


def run_qite(h: SpinHamiltonian, ansatz: Ansatz | None = None, config: QiteConfig | None = None) -> RunTrace:
    """Drive the imaginary-time loop until a tracked amplitude crosses the
    threshold or the iteration budget runs out.

    The trace records the initial state as iteration 0, so it holds at
    most max_iters + 1 rows.  On a numerical failure the partial trace is
    returned with status ``numerical_failure``.
    """
    config = config or QiteConfig()
    if ansatz is None:
        ansatz = Ansatz(n_qubits=h.n_qubits, depth=config.depth)
    if ansatz.n_qubits != h.n_qubits:
        raise ValueError("ansatz and Hamiltonian disagree on qubit count")
    rng = np.random.default_rng(config.rng_seed)
    params = init_params(ansatz, config.init_mode, rng, config.perturb_eps)
    cap = config.dtau if config.step_cap is None else config.step_cap
    diag = h.diagonal()
    targets = config.track_targets

    rows = {k: [] for k in ("it", "E", "amps", "pnorm", "res", "wall")}
    status = STATUS_MAX_ITERS
    residual = 0.0
    t_prev = time.perf_counter()
    for it in range(config.max_iters + 1):
        state = prepare(ansatz, params)
        probs = np.abs(state) ** 2 if np.iscomplexobj(state) else state**2
        energy = float(diag @ probs)
        amps = _tracked_amps(state, targets, config.shots, rng)
        now = time.perf_counter()
        rows["it"].append(it)
        rows["E"].append(energy)
        rows["amps"].append(amps)
        rows["pnorm"].append(float(np.linalg.norm(params)))
        rows["res"].append(residual)
        rows["wall"].append(now - t_prev)
        t_prev = now
        if len(amps) and np.max(amps) >= config.amp_threshold:
            status = STATUS_THRESHOLD
            break
        if it == config.max_iters:
            break
        D = derivative_states(ansatz, params)
        M = build_M(ansatz, params, deriv=D)
        C = build_C(ansatz, params, h, deriv=D, state=state)
        try:
            step, residual = solve_step(M, C, config.dtau, config.ridge_lambda)
        except NumericalFailure:
            status = STATUS_FAILURE
            break
        params = params + _clip_step(step, cap)

    return RunTrace(
        targets=targets,
        iters=np.asarray(rows["it"], dtype=int),
        energies=np.asarray(rows["E"]),
        target_amps=np.asarray(rows["amps"]).reshape(len(rows["it"]), len(targets)),
        param_norms=np.asarray(rows["pnorm"]),
        residuals=np.asarray(rows["res"]),
        wall_times=np.asarray(rows["wall"]),
        status=status,
        final_params=params,
        config={"method": "qite", **asdict(config)},
    )


def qfi_check(ansatz: Ansatz, params) -> float:
    """max |F - 4M| where F is the quantum Fisher information computed from
    its full definition (including the <d_i phi|phi> correction term).

    Only defined for the real-amplitude family, where the correction
    vanishes identically.
    """
    if ansatz.family != RY_ONLY:
        raise ValueError("the QFI identity F = 4M holds for the ry_only family only")
    D = derivative_states(ansatz, params)
    phi = prepare(ansatz, params)
    overlaps = D @ phi
    F = 4.0 * (D @ D.T - np.outer(overlaps, overlaps))
    M = build_M(ansatz, params, deriv=D)
    return float(np.max(np.abs(F - 4.0 * M)))


def circuit_budget(n_bits: int, d: int) -> int:
    """Hardware-model circuit count per iteration: one circuit per
    (Hamiltonian term x parameter) for C plus parameters**2 for M.

    d = 0 counts the base layer's n parameters.
    """
    if n_bits < 1:
        raise ValueError("n_bits must be >= 1")
    if d < 0:
        raise ValueError("d must be >= 0")
    n_params = n_bits * max(d, 1)
    return term_count_bound(n_bits) * n_params + n_params**2
