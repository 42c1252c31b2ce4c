"""Per-iteration run records and their CSV/JSON export.

Every trace artifact embeds the effective configuration so a run can be
reproduced from the file alone; wall-clock times live only in the summary
(the one field allowed to differ between reproductions).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

STATUS_THRESHOLD = "threshold_reached"
STATUS_MAX_ITERS = "max_iters"
STATUS_FAILURE = "numerical_failure"
STATUS_ORACLE = "oracle"


@dataclass
class RunTrace:
    """Iteration-indexed history of one optimization (or oracle) run.

    ``target_amps`` holds the amplitude magnitude of each tracked basis
    state, one column per entry of ``targets``.  ``residuals[k]`` is the
    linear-system residual of the solve that produced the parameters
    recorded at row k (0 for the initial row and for methods without a
    solve).  ``grad_norms`` is populated by the VQE driver.
    """

    targets: tuple[int, ...]
    iters: np.ndarray
    energies: np.ndarray
    target_amps: np.ndarray  # shape (n_records, len(targets))
    param_norms: np.ndarray
    residuals: np.ndarray
    wall_times: np.ndarray
    status: str
    final_params: np.ndarray | None
    config: dict = field(default_factory=dict)
    grad_norms: np.ndarray | None = None

    @property
    def n_records(self) -> int:
        return len(self.iters)

    @property
    def iterations(self) -> int:
        """Update steps taken before the final recorded state."""
        return int(self.iters[-1]) if self.n_records else 0

    def final_amplitudes(self) -> dict[int, float]:
        if self.n_records == 0:
            return {}
        return {z: float(a) for z, a in zip(self.targets, self.target_amps[-1])}

    def to_csv(self, path) -> None:
        """Write the trace; config echo goes in a trailing comment line."""
        cols = ["iter", "energy"] + [f"amp_{z}" for z in self.targets] + [
            "param_norm",
            "residual",
        ]
        if self.grad_norms is not None:
            cols.append("grad_norm")
        with open(path, "w") as f:
            f.write(",".join(cols) + "\n")
            for k in range(self.n_records):
                row = [str(int(self.iters[k])), repr(float(self.energies[k]))]
                row += [repr(float(a)) for a in self.target_amps[k]]
                row.append(repr(float(self.param_norms[k])))
                row.append(repr(float(self.residuals[k])))
                if self.grad_norms is not None:
                    row.append(repr(float(self.grad_norms[k])))
                f.write(",".join(row) + "\n")
            f.write("# config: " + json.dumps(self.config, sort_keys=True) + "\n")

    def summary(self) -> dict:
        return {
            "status": self.status,
            "iterations": self.iterations,
            "final_energy": float(self.energies[-1]) if self.n_records else None,
            "final_amplitudes": {str(z): a for z, a in self.final_amplitudes().items()},
            "config": self.config,
            "elapsed_s": float(self.wall_times.sum()) if self.n_records else 0.0,
        }

    def write_summary(self, path) -> None:
        with open(path, "w") as f:
            json.dump(self.summary(), f, indent=1)


def read_trace_csv(path) -> dict[str, np.ndarray]:
    """Read a trace CSV back into column arrays (config comment ignored)."""
    with open(path) as f:
        header = f.readline().strip().split(",")
        rows = [
            [float(v) for v in line.split(",")]
            for line in f
            if line.strip() and not line.startswith("#")
        ]
    data = np.asarray(rows) if rows else np.empty((0, len(header)))
    return {name: data[:, i] for i, name in enumerate(header)}
