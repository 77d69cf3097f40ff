"""``swt`` command line: exact, vqa, qpe and check subcommands.

Settings come from defaults, then an optional flat ``key = value`` config
file, then command-line flags.  Every output file echoes the resolved
configuration and the toolkit version, and contains nothing time- or
host-dependent, so equal configs give byte-identical files.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import asdict, dataclass, fields
from importlib import metadata
from pathlib import Path

import numpy as np

from . import qpe
from .ansatz import ansatz_from_commutator, preset_n4_ansatz
from .dense import EffectiveHamiltonian, solve_exact
from .errors import OptimizationAborted, SWTError, ValidationError
from .models import ModelSpec, ground_basis
from .spsa import OptimizationTrace, SpsaOptions, spsa_minimize
from .statevector import ShotPlan
from .vqa import BACKENDS, EXACT, CostConfig, CostFunction, reconstruct_heff

TOOL = "swtkit"


def version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0+unknown"


@dataclass
class RunConfig:
    n: int = 4
    epsilon: float = 1.0
    backend: str = EXACT
    shots: int = 0  # 0 means exact expectations
    seed: int = 0
    readout_flip: float = 0.0
    pauli_error: float = 0.0
    ansatz: str = "auto"  # auto | preset | commutator
    max_iter: int = 200
    patience: int = 20
    spsa_a: float = 0.0  # 0 means calibrate
    spsa_c: float = 0.1
    blocking: bool = False
    monte_carlo_pairs: int = 0  # 0 means all pairs
    ancillas: str = "4,6,8"
    qpe_mode: str = "both"  # swt | reflection | both
    branch: str = qpe.PRINCIPAL
    nested: bool = False
    out: str = "."

    @property
    def ancilla_list(self) -> list[int]:
        try:
            ls = [int(x) for x in str(self.ancillas).split(",") if x.strip()]
        except ValueError as exc:
            raise ValidationError(f"bad ancilla list {self.ancillas!r}") from exc
        if not ls or min(ls) < 1:
            raise ValidationError("ancilla counts must be positive")
        return ls

    def validate(self) -> None:
        if self.backend not in BACKENDS:
            raise ValidationError(f"unknown backend {self.backend!r}")
        if self.shots < 0 or self.monte_carlo_pairs < 0:
            raise ValidationError("shots and monte_carlo_pairs must be non-negative")
        if self.ansatz not in ("auto", "preset", "commutator"):
            raise ValidationError(f"unknown ansatz {self.ansatz!r}")
        if self.qpe_mode not in ("swt", "reflection", "both"):
            raise ValidationError(f"unknown qpe mode {self.qpe_mode!r}")
        self.ancilla_list  # noqa: B018 - validates


_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _coerce(key: str, raw: str):
    kind = _TYPES[key]
    if kind == "bool":
        lowered = raw.strip().lower()
        if lowered not in ("true", "false", "1", "0", "yes", "no"):
            raise ValidationError(f"{key}: expected a boolean, got {raw!r}")
        return lowered in ("true", "1", "yes")
    try:
        return {"int": int, "float": float}.get(kind, str)(raw.strip())
    except ValueError as exc:
        raise ValidationError(f"{key}: cannot parse {raw!r}") from exc


def load_config_file(path: str | Path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment, dashes equal underscores."""
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"{path}:{lineno}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _TYPES:
            raise ValidationError(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = _coerce(key, value)
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="swt", description="Schrieffer-Wolff effective Hamiltonian toolkit")
    parser.add_argument("--version", action="version", version=f"{TOOL} {version()}")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value settings file")
    common.add_argument("--n", type=int, help="number of spins (>= 4)")
    common.add_argument("--epsilon", type=float, help="perturbation strength")
    common.add_argument("--seed", type=int)
    common.add_argument("--out", help="output directory")

    sub.add_parser("exact", parents=[common], help="direct-rotation effective Hamiltonian")

    vqa = sub.add_parser("vqa", parents=[common], help="hybrid variational run with SPSA")
    vqa.add_argument("--backend", choices=BACKENDS)
    vqa.add_argument("--shots", type=int, help="shots per expectation; 0 for exact")
    vqa.add_argument("--readout-flip", type=float, dest="readout_flip")
    vqa.add_argument("--pauli-error", type=float, dest="pauli_error")
    vqa.add_argument("--ansatz", choices=("auto", "preset", "commutator"))
    vqa.add_argument("--max-iter", type=int, dest="max_iter")
    vqa.add_argument("--patience", type=int)
    vqa.add_argument("--spsa-a", type=float, dest="spsa_a")
    vqa.add_argument("--spsa-c", type=float, dest="spsa_c")
    vqa.add_argument("--blocking", action="store_const", const=True)
    vqa.add_argument("--monte-carlo-pairs", type=int, dest="monte_carlo_pairs")

    q = sub.add_parser("qpe", parents=[common], help="simulated QPE square root and reflections")
    q.add_argument("--ancillas", help="comma-separated ancilla counts, e.g. 4,6,8")
    q.add_argument("--mode", dest="qpe_mode", choices=("swt", "reflection", "both"))
    q.add_argument("--branch", choices=(qpe.PRINCIPAL, qpe.LITERAL))
    q.add_argument("--nested", action="store_const", const=True)

    sub.add_parser("check", help="run the invariant suite")
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    values = {}
    if getattr(args, "config", None):
        values.update(load_config_file(args.config))
    for key in _TYPES:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    config = RunConfig(**values)
    config.validate()
    return config


# --- output helpers ----------------------------------------------------------

def provenance(config: RunConfig, command: str) -> dict:
    echo = asdict(config)
    echo.pop("out")  # where files go does not change what they contain
    return {"tool": TOOL, "version": version(), "command": command, "config": echo}


def write_json(path: Path, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True, allow_nan=True) + "\n")


def _fmt(x: float) -> str:
    return f"{float(x):.17g}"


def write_trace_csv(path: Path, trace: OptimizationTrace, header: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    n_theta = len(trace.iterations[0].theta) if trace.iterations else 0
    n_eig = 0
    if trace.iterations and trace.iterations[0].spectrum is not None:
        n_eig = len(trace.iterations[0].spectrum)
    with path.open("w", newline="") as fh:
        fh.write(f"# provenance: {json.dumps(header, sort_keys=True)}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["step", "cost", "accepted"]
                        + [f"theta_{k}" for k in range(n_theta)]
                        + [f"eigenvalue_{k}" for k in range(n_eig)])
        for rec in trace.iterations:
            spectrum = [] if rec.spectrum is None else [_fmt(v) for v in rec.spectrum]
            writer.writerow([rec.step, _fmt(rec.cost), int(rec.accepted)]
                            + [_fmt(v) for v in rec.theta] + spectrum)


# --- commands ------------------------------------------------------------------

def run_exact(config: RunConfig) -> dict:
    model = ModelSpec(config.n, config.epsilon)
    basis = ground_basis(config.n)
    sol = solve_exact(model.h0(), model.v(), model.epsilon, basis)
    report = {
        "provenance": provenance(config, "exact"),
        "gap_check": sol.gap_report.to_dict(),
        "heff": sol.heff.to_dict(),
        "oracle": {
            "lowest_eigenvalues": [float(v) for v in sol.target_eigenvalues],
            "max_abs_deviation": float(np.max(np.abs(sol.heff.eigenvalues - sol.target_eigenvalues))),
            "rotation_residual": float(np.max(np.abs(sol.u @ sol.p @ sol.u.conj().T - sol.p0))),
        },
    }
    write_json(Path(config.out) / "report.json", report)
    return report


def _circuit_for(config: RunConfig, model: ModelSpec):
    kind = config.ansatz
    if kind == "auto":
        kind = "preset" if config.n == 4 else "commutator"
    if kind == "preset":
        if config.n != 4:
            raise ValidationError("the preset ansatz is defined for four spins only")
        return preset_n4_ansatz()
    return ansatz_from_commutator(model.h0(), model.v())


def run_vqa(config: RunConfig) -> dict:
    model = ModelSpec(config.n, config.epsilon)
    basis = ground_basis(config.n)
    h = model.hamiltonian()
    circuit = _circuit_for(config, model)
    plan = ShotPlan(config.shots or None, config.seed, config.readout_flip, config.pauli_error)
    cost_config = CostConfig(config.backend, plan, config.monte_carlo_pairs or None)
    reference = solve_exact(model.h0(), model.v(), model.epsilon, basis).heff
    cost = CostFunction(basis, h, circuit, cost_config)
    snapshots = iter(range(1 << 62))

    def snapshot(theta):
        # stream keys disjoint from the cost evaluations
        stream = (1 << 31, next(snapshots))
        return reconstruct_heff(basis, h, circuit, theta, cost_config, stream=stream).eigenvalues

    options = SpsaOptions(a=config.spsa_a or None, c=config.spsa_c, max_iter=config.max_iter,
                          patience=config.patience, seed=config.seed, blocking=config.blocking)
    out_dir = Path(config.out)
    header = provenance(config, "vqa")
    try:
        trace = spsa_minimize(cost, np.zeros(circuit.n_parameters), options, snapshot=snapshot)
    except OptimizationAborted as exc:
        if exc.trace is not None and exc.trace.iterations:
            write_trace_csv(out_dir / "trace.csv", exc.trace, header)
        raise
    write_trace_csv(out_dir / "trace.csv", trace, header)
    final = reconstruct_heff(basis, h, circuit, trace.final_theta, cost_config,
                             reference=reference, stream=(1 << 32,))
    summary = {
        "provenance": header,
        "seeds": {"spsa": config.seed, "shots": plan.rng_seed},
        "noise": {"shots": plan.shots, "readout_flip_prob": plan.readout_flip_prob,
                  "pauli_error_prob": plan.pauli_error_prob},
        "ansatz": circuit.to_text().splitlines(),
        "optimizer": {"converged": trace.converged, "message": trace.message,
                      "iterations": len(trace.iterations) - 1, "gains": trace.gains,
                      "cost_evaluations": cost.evaluations},
        "final_theta": [float(v) for v in trace.final_theta],
        "final_cost": trace.final_cost,
        "heff": final.to_dict(),
        "reference": reference.to_dict(),
        "eigenvalue_errors": [float(v) for v in final.eigenvalues - reference.eigenvalues],
    }
    write_json(out_dir / "summary.json", summary)
    return summary


def run_qpe(config: RunConfig) -> dict:
    model = ModelSpec(config.n, config.epsilon)
    basis = ground_basis(config.n)
    ls = config.ancilla_list
    report = {"provenance": provenance(config, "qpe")}
    if config.qpe_mode in ("swt", "both"):
        report["swt"] = qpe.qpe_study(model.h0(), model.v(), model.epsilon, basis, ls,
                                      nested=config.nested, branch=config.branch)
    if config.qpe_mode in ("reflection", "both"):
        threshold = qpe.reflection_threshold(model.h0(), 0, basis.size)
        report["reflection"] = qpe.reflection_study(model.hamiltonian(), threshold, ls)
    write_json(Path(config.out) / "qpe_report.json", report)
    return report


def run_check() -> int:
    from .checks import run_checks

    results = run_checks()
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name}: {r.detail} ({r.seconds:.2f}s)")
    return 0 if all(r.passed for r in results) else 3


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "check":
            return run_check()
        config = resolve_config(args)
        if args.command == "exact":
            report = run_exact(config)
            print(json.dumps(report["heff"]["eigenvalues"]))
        elif args.command == "vqa":
            summary = run_vqa(config)
            print(f"final cost {summary['final_cost']:.6g}, fidelities {summary['heff'].get('fidelities')}")
        else:
            report = run_qpe(config)
            if "swt" in report:
                for row in report["swt"]["rows"]:
                    print(f"l={row['l']} fidelities {[round(f, 6) for f in row['fidelities']]}")
    except SWTError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except MemoryError:
        print("error: out of memory", file=sys.stderr)
        return 4
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
