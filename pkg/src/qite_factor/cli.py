"""Command-line driver: encoder -> engine/oracle/vqe with reproducible
experiment configs and trace/summary artifacts.

Subcommands: ``factor`` (one N), ``corpus`` (batch, Table-style report),
``check`` (fast invariant suite).  Every artifact embeds the effective
config; the qubit count is capped by the QITE_FACTOR_MAX_QUBITS
environment variable (default 12).
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import os
import sys
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

import numpy as np

from . import __version__
from .encoder import (
    BitAllocation,
    allocate_bits,
    binary_to_spin,
    build_cost_poly,
    compile_hamiltonian,
    ground_solutions,
    load_hamiltonian,
    save_hamiltonian,
)
from .engine import QiteConfig, build_C, qfi_check, run_qite
from .oracle import ite_evolve, path_to_trace
from .simulator import Ansatz, derivative_state, expectation, prepare
from .trace import STATUS_THRESHOLD, RunTrace
from .vqe import VqeConfig, compare_runs, run_vqe

DEFAULT_MAX_QUBITS_ENV = "QITE_FACTOR_MAX_QUBITS"
EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NOT_REACHED = 2


@dataclass
class ExperimentConfig:
    """One experiment, fully defaulted and serializable to/from JSON or TOML."""

    n: int = 15
    p_bits: int | None = None
    q_bits: int | None = None
    policy: str = "heuristic"  # heuristic | oracle-assisted
    method: str = "qite"  # qite | vqe | oracle | compare
    dtau: float = 0.1
    eta: float = 0.01
    depth: int | None = None
    family: str = "ry_only"
    init: str = "perturbed"
    perturb_eps: float = 1e-2
    threshold: float = 0.85
    max_iters: int | None = None  # method default: 500 (qite) / 2000 (vqe)
    ridge: float = 1e-6
    seeds: tuple[int, ...] = (0,)
    shots: int | None = None
    tau: float = 1.0
    out: str = "qite_runs"
    jobs: int = 1
    corpus: str | None = None

    @classmethod
    def from_file(cls, path: str) -> "ExperimentConfig":
        if path.endswith(".toml"):
            try:
                import tomllib
            except ModuleNotFoundError:  # Python < 3.11
                import tomli as tomllib

            with open(path, "rb") as f:
                doc = tomllib.load(f)
        else:
            with open(path) as f:
                doc = json.load(f)
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        if "seeds" in doc:
            doc["seeds"] = tuple(doc["seeds"])
        return cls(**doc)

    def echo(self) -> dict:
        d = asdict(self)
        d["seeds"] = list(self.seeds)
        return d


def _max_qubits() -> int:
    return int(os.environ.get(DEFAULT_MAX_QUBITS_ENV, "12"))


def _qite_config(cfg: ExperimentConfig, targets, seed: int) -> QiteConfig:
    return QiteConfig(
        dtau=cfg.dtau,
        max_iters=cfg.max_iters if cfg.max_iters is not None else 500,
        amp_threshold=cfg.threshold,
        ridge_lambda=cfg.ridge,
        init_mode=cfg.init,
        perturb_eps=cfg.perturb_eps,
        rng_seed=seed,
        depth=cfg.depth if cfg.depth is not None else 1,
        track_targets=tuple(targets),
        shots=cfg.shots,
    )


def _vqe_config(cfg: ExperimentConfig, targets, seed: int) -> VqeConfig:
    return VqeConfig(
        learning_rate=cfg.eta,
        max_iters=cfg.max_iters if cfg.max_iters is not None else 2000,
        amp_threshold=cfg.threshold,
        init_mode=cfg.init,
        perturb_eps=cfg.perturb_eps,
        rng_seed=seed,
        family=cfg.family,
        depth=cfg.depth,
        track_targets=tuple(targets),
        shots=cfg.shots,
    )


def _decode_final(trace: RunTrace, h, alloc: BitAllocation, cfg: ExperimentConfig):
    """Recover (p, q, z) from the highest-amplitude state at termination."""
    if trace.final_params is None:
        return None
    method_cfg = trace.config
    ansatz = Ansatz(
        n_qubits=h.n_qubits,
        depth=method_cfg.get("depth") or (3 if method_cfg.get("family") == "ry_rx" else 1),
        family=method_cfg.get("family", "ry_only"),
    )
    state = prepare(ansatz, trace.final_params)
    z = int(np.argmax(np.abs(state)))
    p, q = alloc.decode(z)
    return {"p": p, "q": q, "z": z, "amplitude": float(abs(state[z]))}


def _run_seed(args) -> dict:
    """One (method, seed) run; module-level for process-pool pickling."""
    cfg, m, l, seed, out_dir = args
    alloc = allocate_bits(cfg.n, override=(m, l))
    h = compile_hamiltonian(cfg.n, alloc)
    targets = [z for _, _, z in ground_solutions(h, cfg.n)]
    if cfg.method == "vqe":
        trace = run_vqe(h, config=_vqe_config(cfg, targets, seed))
    else:
        trace = run_qite(h, config=_qite_config(cfg, targets, seed))
    seed_dir = Path(out_dir) / f"seed_{seed}"
    seed_dir.mkdir(parents=True, exist_ok=True)
    trace.config["experiment"] = cfg.echo()
    trace.to_csv(seed_dir / "trace.csv")
    trace.write_summary(seed_dir / "summary.json")
    decoded = _decode_final(trace, h, alloc, cfg)
    verified = bool(decoded and decoded["p"] * decoded["q"] == cfg.n)
    return {
        "seed": seed,
        "status": trace.status,
        "iterations": trace.iterations,
        "final_energy": float(trace.energies[-1]),
        "decoded": decoded,
        "verified": verified and trace.status == STATUS_THRESHOLD,
    }


def _resolve_allocation(cfg: ExperimentConfig) -> BitAllocation:
    override = None
    if cfg.p_bits is not None or cfg.q_bits is not None:
        if cfg.p_bits is None or cfg.q_bits is None:
            raise ValueError("--p-bits and --q-bits must be given together")
        override = (cfg.p_bits, cfg.q_bits)
    return allocate_bits(cfg.n, override=override, policy=cfg.policy)


def cmd_factor(cfg: ExperimentConfig) -> int:
    """Factor one N; exit 0 on verified factors, 2 when not reached, 1 on error."""
    try:
        alloc = _resolve_allocation(cfg)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    if alloc.n_qubits > _max_qubits():
        print(
            f"error: {alloc.n_qubits} qubits exceeds cap {_max_qubits()} "
            f"(set {DEFAULT_MAX_QUBITS_ENV} to raise)",
            file=sys.stderr,
        )
        return EXIT_ERROR
    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    h = compile_hamiltonian(cfg.n, alloc)
    save_hamiltonian(h, out_dir / "hamiltonian.json")
    solutions = ground_solutions(h, cfg.n)
    targets = [z for _, _, z in solutions]
    summary = {
        "n": cfg.n,
        "allocation": {"m": alloc.m, "l": alloc.l, "n_qubits": alloc.n_qubits},
        "method": cfg.method,
        "ground_states": [{"p": p, "q": q, "z": z} for p, q, z in solutions],
        "no_ground_state": not solutions,
        "config": cfg.echo(),
    }

    if cfg.method == "oracle":
        taus = np.arange(0.0, cfg.tau + cfg.dtau / 2, cfg.dtau)
        path = ite_evolve(h, taus, start="uniform")
        trace = path_to_trace(path, tuple(targets), config={"experiment": cfg.echo()})
        trace.to_csv(out_dir / "oracle_trace.csv")
        trace.write_summary(out_dir / "oracle_summary.json")
        z_best = int(np.argmax(path.probabilities[-1]))
        p, q = alloc.decode(z_best)
        summary["solution_probability"] = (
            float(path.probabilities[-1][targets].sum()) if targets else 0.0
        )
        summary["recovered"] = {"p": p, "q": q, "z": z_best, "verified": p * q == cfg.n}
        _write_summary(out_dir, summary)
        return EXIT_OK if p * q == cfg.n else EXIT_NOT_REACHED

    if cfg.method == "compare":
        report = compare_runs(
            h,
            _qite_config(cfg, targets, cfg.seeds[0]),
            _vqe_config(cfg, targets, cfg.seeds[0]),
            n_seeds=len(cfg.seeds),
        )
        summary["comparison"] = report
        _write_summary(out_dir, summary)
        with open(out_dir / "comparison.json", "w") as f:
            json.dump(report, f, indent=1)
        return EXIT_OK

    tasks = [(cfg, alloc.m, alloc.l, seed, str(out_dir)) for seed in cfg.seeds]
    if cfg.jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            results = list(pool.map(_run_seed, tasks))
    else:
        results = [_run_seed(t) for t in tasks]
    summary["runs"] = results
    verified = [r for r in results if r["verified"]]
    if verified:
        best = min(verified, key=lambda r: r["iterations"])
        summary["recovered"] = {**best["decoded"], "seed": best["seed"], "verified": True}
    _write_summary(out_dir, summary)
    if verified:
        rec = summary["recovered"]
        print(f"N={cfg.n} = {rec['p']} x {rec['q']} (seed {rec['seed']})")
        return EXIT_OK
    print(f"N={cfg.n}: amplitude threshold not reached on a correct-factor state")
    return EXIT_NOT_REACHED


def _write_summary(out_dir: Path, summary: dict) -> None:
    with open(out_dir / "summary.json", "w") as f:
        json.dump(summary, f, indent=1)


def _bundled_corpus_path() -> Path:
    return Path(__file__).parent / "data" / "corpus_5qubit.json"


def cmd_corpus(cfg: ExperimentConfig) -> int:
    """Run the pipeline per corpus entry per seed; emit a Table-shaped report."""
    corpus_path = cfg.corpus or str(_bundled_corpus_path())
    try:
        with open(corpus_path) as f:
            entries = json.load(f)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: cannot read corpus {corpus_path}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    report = []
    for entry in entries:
        n = entry["n"]
        sub = replace(
            cfg,
            n=n,
            p_bits=entry.get("p_bits"),
            q_bits=entry.get("q_bits"),
            policy=entry.get("policy", "oracle-assisted"),
            out=str(out_dir / f"n_{n}"),
        )
        row = {"n": n}
        try:
            alloc = _resolve_allocation(sub)
            h = compile_hamiltonian(n, alloc)
            solutions = ground_solutions(h, n)
            row["n_qubits"] = alloc.n_qubits
            if not solutions:
                row["flag"] = "no_ground_state"
                report.append(row)
                continue
            code = cmd_factor(sub)
            with open(Path(sub.out) / "summary.json") as f:
                sub_summary = json.load(f)
            runs = sub_summary.get("runs", [])
            done = [r for r in runs if r["verified"]]
            row["success_rate"] = len(done) / len(runs) if runs else 0.0
            row["median_iterations"] = (
                float(np.median([r["iterations"] for r in done])) if done else None
            )
            row["exit_code"] = code
        except Exception as exc:  # noqa: BLE001 - batch must continue per entry
            row["flag"] = f"error: {exc}"
        report.append(row)
    with open(out_dir / "corpus_report.json", "w") as f:
        json.dump({"config": cfg.echo(), "entries": report}, f, indent=1)
    for row in report:
        print(row)
    return EXIT_OK


def _check_golden_n15() -> list[tuple[str, bool, str]]:
    results = []
    alloc = allocate_bits(15, override=(3, 2))
    poly = build_cost_poly(15, alloc)
    want_binary = {0: 196, 0b100: -52, 0b001: -52, 0b101: -56, 0b010: -96, 0b110: -48, 0b011: 16, 0b111: 128}
    results.append(("n15-binary-coefficients", poly.terms == want_binary, str(poly.terms)))
    h = binary_to_spin(poly)
    terms = dict(h.terms)
    from fractions import Fraction

    want_spin = {
        0: Fraction(90),
        0b100: Fraction(-36),
        0b010: Fraction(-40),
        0b001: Fraction(-20),
        0b101: Fraction(2),
        0b110: Fraction(4),
        0b011: Fraction(20),
        0b111: Fraction(16),
    }
    results.append(("n15-spin-coefficients", terms == want_spin, str(terms)))
    ok_eval = all(
        h.evaluate(z) == poly.evaluate(z) for z in range(8)
    )
    results.append(("spin-binary-evaluation-identity", ok_eval, ""))
    return results


def _check_qfi_and_gradient() -> list[tuple[str, bool, str]]:
    rng = np.random.default_rng(7)
    ansatz = Ansatz(n_qubits=4, depth=2)
    params = rng.uniform(0, 2 * np.pi, ansatz.n_params)
    dev = qfi_check(ansatz, params)
    results = [("qfi-identity", dev <= 1e-10, f"max|F-4M| = {dev:.3g}")]

    alloc = allocate_bits(15, override=(3, 2))
    h = compile_hamiltonian(15, alloc)
    a3 = Ansatz(n_qubits=3, depth=1)
    theta = rng.uniform(0, 2 * np.pi, a3.n_params)
    C = build_C(a3, theta, h)
    eps = 1e-4
    worst = 0.0
    for i in range(a3.n_params):
        t_plus, t_minus = theta.copy(), theta.copy()
        t_plus[i] += eps
        t_minus[i] -= eps
        fd = (expectation(prepare(a3, t_plus), h) - expectation(prepare(a3, t_minus), h)) / (2 * eps)
        worst = max(worst, abs(-2.0 * C[i] - fd))
    results.append(("gradient-consistency", worst <= 1e-6, f"max dev = {worst:.3g}"))
    return results


def cmd_check(cfg: ExperimentConfig, hamiltonian_path: str | None = None) -> int:
    """Fast invariant suite plus an engine-vs-oracle overlay emission."""
    results = []
    if hamiltonian_path is not None:
        try:
            h = load_hamiltonian(hamiltonian_path)
            results.append(("hamiltonian-schema", True, f"{len(h.terms)} terms, Q={h.n_qubits}"))
        except (ValueError, KeyError, TypeError, json.JSONDecodeError) as exc:
            results.append(("hamiltonian-schema", False, f"schema error: {exc}"))
    results.extend(_check_golden_n15())
    results.extend(_check_qfi_and_gradient())

    alloc = allocate_bits(15, override=(3, 2))
    h = compile_hamiltonian(15, alloc)
    targets = tuple(z for _, _, z in ground_solutions(h, 15))
    path = ite_evolve(h, np.arange(0.0, 1.0 + 0.05, 0.1), start="uniform")
    p_solution = float(path.probabilities[-1][list(targets)].sum())
    results.append(("oracle-n15-tau1-probability", p_solution > 0.9, f"P = {p_solution:.6f}"))

    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    qite_trace = run_qite(
        h,
        config=QiteConfig(init_mode="uniform", max_iters=100, track_targets=targets),
    )
    path_to_trace(path, targets).to_csv(out_dir / "oracle_trace.csv")
    qite_trace.to_csv(out_dir / "qite_trace.csv")
    results.append(
        (
            "engine-oracle-overlay-emitted",
            qite_trace.status == STATUS_THRESHOLD,
            f"engine status {qite_trace.status} after {qite_trace.iterations} iterations",
        )
    )

    failed = False
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'}  {name}" + (f"  ({detail})" if detail else ""))
        failed |= not ok
    return EXIT_ERROR if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qite-factor",
        description="Factor biprimes with variational quantum imaginary-time evolution.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="JSON or TOML experiment file")
        p.add_argument("--n", type=int)
        p.add_argument("--p-bits", type=int, dest="p_bits")
        p.add_argument("--q-bits", type=int, dest="q_bits")
        p.add_argument("--policy", choices=["heuristic", "oracle-assisted"])
        p.add_argument("--method", choices=["qite", "vqe", "oracle", "compare"])
        p.add_argument("--dtau", type=float)
        p.add_argument("--eta", type=float)
        p.add_argument("--depth", type=int)
        p.add_argument("--family", choices=["ry_only", "ry_rx"])
        p.add_argument("--init", choices=["uniform", "random", "perturbed"])
        p.add_argument("--perturb-eps", type=float, dest="perturb_eps")
        p.add_argument("--threshold", type=float)
        p.add_argument("--max-iters", type=int, dest="max_iters")
        p.add_argument("--ridge", type=float)
        p.add_argument("--seed", type=int, help="single seed (shorthand for --seeds)")
        p.add_argument("--seeds", type=int, nargs="+")
        p.add_argument("--shots", type=int)
        p.add_argument("--tau", type=float, help="oracle evolution time")
        p.add_argument("--out")
        p.add_argument("--jobs", type=int)

    p_factor = sub.add_parser("factor", help="factor one biprime")
    add_common(p_factor)
    p_corpus = sub.add_parser("corpus", help="run a corpus file and report")
    add_common(p_corpus)
    p_corpus.add_argument("--corpus", help="corpus JSON (default: bundled 5-qubit set)")
    p_check = sub.add_parser("check", help="run the fast invariant suite")
    p_check.add_argument("--out", default="qite_check")
    p_check.add_argument("--hamiltonian", help="validate a Hamiltonian JSON file")
    return parser


def _merge_config(args: argparse.Namespace) -> ExperimentConfig:
    cfg = ExperimentConfig.from_file(args.config) if getattr(args, "config", None) else ExperimentConfig()
    overrides = {}
    for f in fields(ExperimentConfig):
        val = getattr(args, f.name, None)
        if val is not None:
            overrides[f.name] = val
    if getattr(args, "seed", None) is not None:
        overrides["seeds"] = (args.seed,)
    if "seeds" in overrides:
        overrides["seeds"] = tuple(overrides["seeds"])
    return replace(cfg, **overrides)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "check":
            cfg = ExperimentConfig(out=args.out)
            return cmd_check(cfg, hamiltonian_path=args.hamiltonian)
        cfg = _merge_config(args)
        if args.command == "factor":
            return cmd_factor(cfg)
        if args.command == "corpus":
            return cmd_corpus(cfg)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
