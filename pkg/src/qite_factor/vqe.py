"""Plain gradient-descent VQE baseline on the same Hamiltonians.

The update theta <- theta - eta * dE/dtheta reuses the engine's C vector
(dE/dtheta = -2 C exactly), which is the QITE update with the M matrix
replaced by the identity.  Runs share the trace schema and stopping rules
with the QITE engine, plus a gradient-norm column for plateau diagnosis.
"""

from __future__ import annotations

import statistics
import time
from dataclasses import dataclass, asdict

import numpy as np

from .encoder import SpinHamiltonian
from .engine import QiteConfig, _clip_step, _tracked_amps, build_C, init_params, run_qite
from .simulator import RY_RX, Ansatz, derivative_states, prepare
from .trace import (
    STATUS_FAILURE,
    STATUS_MAX_ITERS,
    STATUS_THRESHOLD,
    RunTrace,
)


@dataclass
class VqeConfig:
    """Knobs for one VQE run; mirrors QiteConfig where behavior is shared.

    ``depth`` of None resolves to 3 for the Rx-extended family and 1
    otherwise.  ``step_cap`` of None uses the learning rate as the trust
    radius; math.inf disables clipping.
    """

    learning_rate: float = 0.01
    max_iters: int = 2000
    amp_threshold: float = 0.85
    init_mode: str = "perturbed"
    perturb_eps: float = 1e-2
    rng_seed: int = 0
    family: str = "ry_only"
    depth: int | None = None
    track_targets: tuple[int, ...] = ()
    step_cap: float | None = None
    shots: int | None = None

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.depth is None:
            self.depth = 3 if self.family == RY_RX else 1
        self.track_targets = tuple(int(z) for z in self.track_targets)


def run_vqe(h: SpinHamiltonian, ansatz: Ansatz | None = None, config: VqeConfig | None = None) -> RunTrace:
    """Gradient descent on the energy with the shared stopping rules."""
    config = config or VqeConfig()
    if ansatz is None:
        ansatz = Ansatz(n_qubits=h.n_qubits, depth=config.depth, family=config.family)
    if ansatz.n_qubits != h.n_qubits:
        raise ValueError("ansatz and Hamiltonian disagree on qubit count")
    rng = np.random.default_rng(config.rng_seed)
    params = init_params(ansatz, config.init_mode, rng, config.perturb_eps)
    cap = config.learning_rate if config.step_cap is None else config.step_cap
    diag = h.diagonal()
    targets = config.track_targets

    rows = {k: [] for k in ("it", "E", "amps", "pnorm", "gnorm", "wall")}
    status = STATUS_MAX_ITERS
    t_prev = time.perf_counter()
    for it in range(config.max_iters + 1):
        state = prepare(ansatz, params)
        probs = np.abs(state) ** 2 if np.iscomplexobj(state) else state**2
        energy = float(diag @ probs)
        D = derivative_states(ansatz, params)
        grad = -2.0 * build_C(ansatz, params, h, deriv=D, state=state)
        amps = _tracked_amps(state, targets, config.shots, rng)
        now = time.perf_counter()
        rows["it"].append(it)
        rows["E"].append(energy)
        rows["amps"].append(amps)
        rows["pnorm"].append(float(np.linalg.norm(params)))
        rows["gnorm"].append(float(np.linalg.norm(grad)))
        rows["wall"].append(now - t_prev)
        t_prev = now
        if not np.isfinite(energy):
            status = STATUS_FAILURE
            break
        if len(amps) and np.max(amps) >= config.amp_threshold:
            status = STATUS_THRESHOLD
            break
        if it == config.max_iters:
            break
        params = params + _clip_step(-config.learning_rate * grad, cap)

    n = len(rows["it"])
    return RunTrace(
        targets=targets,
        iters=np.asarray(rows["it"], dtype=int),
        energies=np.asarray(rows["E"]),
        target_amps=np.asarray(rows["amps"]).reshape(n, len(targets)),
        param_norms=np.asarray(rows["pnorm"]),
        residuals=np.zeros(n),
        wall_times=np.asarray(rows["wall"]),
        status=status,
        final_params=params,
        config={"method": "vqe", **asdict(config)},
        grad_norms=np.asarray(rows["gnorm"]),
    )


def compare_runs(
    h: SpinHamiltonian,
    config_qite: QiteConfig,
    config_vqe: VqeConfig,
    n_seeds: int,
) -> dict:
    """Run both methods over ``n_seeds`` seeds and report the outcomes.

    Seeds are rng_seed, rng_seed+1, ... for each method.  The report is
    observational: per-run rows plus per-method success rate, median
    iteration count and final energies.  No winner is asserted.
    """
    from dataclasses import replace

    rows = []
    for method, base in (("qite", config_qite), ("vqe", config_vqe)):
        for k in range(n_seeds):
            cfg = replace(base, rng_seed=base.rng_seed + k)
            trace = run_qite(h, config=cfg) if method == "qite" else run_vqe(h, config=cfg)
            amps = trace.final_amplitudes()
            rows.append(
                {
                    "method": method,
                    "seed": cfg.rng_seed,
                    "status": trace.status,
                    "iterations": trace.iterations,
                    "final_energy": float(trace.energies[-1]),
                    "final_target_amp": max(amps.values()) if amps else None,
                    "mean_grad_norm": (
                        float(trace.grad_norms.mean()) if trace.grad_norms is not None else None
                    ),
                }
            )
    report = {"n_seeds": n_seeds, "runs": rows, "methods": {}}
    for method in ("qite", "vqe"):
        sub = [r for r in rows if r["method"] == method]
        done = [r for r in sub if r["status"] == STATUS_THRESHOLD]
        report["methods"][method] = {
            "success_rate": len(done) / len(sub) if sub else 0.0,
            "median_iterations": statistics.median(r["iterations"] for r in done) if done else None,
            "final_energies": [r["final_energy"] for r in sub],
        }
    return report
