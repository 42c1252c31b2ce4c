"""Biprime factorization by variational quantum imaginary-time evolution.

Pipeline: encode N as a diagonal spin Hamiltonian whose ground states are
the factor pairs, then drive a McLachlan-principle imaginary-time loop on
a real-amplitude statevector ansatz until the solution amplitude crosses
a threshold.  An exact evolution oracle and a gradient-descent VQE
baseline share the Hamiltonians and trace format for comparison.
"""

__version__ = "0.1.0"

from .encoder import (
    BitAllocation,
    MultilinearPoly,
    SpinHamiltonian,
    allocate_bits,
    binary_to_spin,
    build_cost_poly,
    compile_hamiltonian,
    diag_energies,
    ground_solutions,
    term_count_bound,
)
from .engine import (
    McLachlanSystem,
    NumericalFailure,
    QiteConfig,
    build_C,
    build_M,
    circuit_budget,
    qfi_check,
    run_qite,
    solve_step,
)
from .oracle import ItePath, UnreachableTargetError, ite_evolve, ite_target_time
from .simulator import (
    Ansatz,
    amplitude,
    derivative_state,
    derivative_states,
    expectation,
    prepare,
    sample,
    transition_expectation,
)
from .trace import RunTrace
from .vqe import VqeConfig, compare_runs, run_vqe

__all__ = [
    "Ansatz",
    "BitAllocation",
    "ItePath",
    "McLachlanSystem",
    "MultilinearPoly",
    "NumericalFailure",
    "QiteConfig",
    "RunTrace",
    "SpinHamiltonian",
    "UnreachableTargetError",
    "VqeConfig",
    "allocate_bits",
    "amplitude",
    "binary_to_spin",
    "build_C",
    "build_M",
    "build_cost_poly",
    "circuit_budget",
    "compare_runs",
    "compile_hamiltonian",
    "derivative_state",
    "derivative_states",
    "diag_energies",
    "expectation",
    "ground_solutions",
    "ite_evolve",
    "ite_target_time",
    "prepare",
    "qfi_check",
    "run_qite",
    "run_vqe",
    "sample",
    "solve_step",
    "term_count_bound",
    "transition_expectation",
]
