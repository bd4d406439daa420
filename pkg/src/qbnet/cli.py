"""Command-line interface: ``qbnet <command> --config FILE --out DIR``.

Exit codes: 0 success, 1 validation error, 2 numerical-invariant violation.
All state labels in outputs are bit strings. Matrices are written with 17
significant digits so they re-parse to identical floats.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import chain, consensus, lindblad, measurement, simulate
from .config import ExperimentConfig, bundled_config, load_config
from .errors import (
    ConfigError,
    DensityError,
    DimensionCapError,
    ImaginaryResidueError,
    NoConvergence,
    NotErgodic,
    NotRelaxing,
    StochasticityError,
)

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 1, 2

# Printed 3-decimal transition matrix of the 3-qubit path example (unit rates, tau = 1).
PRINTED_EXAMPLE_MATRIX = np.array([
    [1, 0, 0, 0, 0, 0, 0, 0],
    [0, 0.525, 0.317, 0, 0.158, 0, 0, 0],
    [0, 0.317, 0.366, 0, 0.317, 0, 0, 0],
    [0, 0, 0, 0.525, 0, 0.317, 0.158, 0],
    [0, 0.158, 0.317, 0, 0.525, 0, 0, 0],
    [0, 0, 0, 0.317, 0, 0.366, 0.317, 0],
    [0, 0, 0, 0.158, 0, 0.317, 0.525, 0],
    [0, 0, 0, 0, 0, 0, 0, 1],
])
# The printed entries are cut to three decimals (0.52557 appears as 0.525), so the
# reproduction check allows one unit in the last printed place.
PRINT_TOL = 1e-3
DUAL_PIPELINE_TOL = 1e-9


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def matrix_csv(m: np.ndarray, labels) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["from\\to", *labels])
    for lab, row in zip(labels, m):
        w.writerow([lab, *(fmt(x) for x in row)])
    return buf.getvalue()


def read_matrix_csv(text: str):
    rows = list(csv.reader(io.StringIO(text)))
    labels = rows[0][1:]
    m = np.array([[float(x) for x in r[1:]] for r in rows[1:]])
    return labels, m


def _jsonable(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    raise TypeError(f"not JSON serializable: {type(x)}")


def to_json(payload) -> str:
    return json.dumps(payload, indent=2, default=_jsonable, allow_nan=True) + "\n"


def write_outputs(out: Path, files: dict) -> list:
    """Write all files or none: stage in a temp dir, then move into place."""
    out.mkdir(parents=True, exist_ok=True)
    staged = []
    with tempfile.TemporaryDirectory(dir=out) as tmp:
        for name, content in files.items():
            p = Path(tmp) / name
            p.parent.mkdir(parents=True, exist_ok=True)
            p.write_text(content, encoding="utf-8")
            staged.append((p, out / name))
        for src, dst in staged:
            dst.parent.mkdir(parents=True, exist_ok=True)
            os.replace(src, dst)
    return [dst for _, dst in staged]


def exact_transition(cfg: ExperimentConfig, tau: float | None = None) -> chain.TransitionMatrix:
    tau = cfg.tau if tau is None else tau
    if cfg.is_consensus:
        return consensus.consensus_transition(cfg.graph, tau)
    basis, _, theta = measurement.measurement_setup(cfg.n, cfg.measurement)
    w = lindblad.build_generator(cfg.model, basis)
    return chain.transition_matrix(w, theta, tau)


def _transition_report(pt: chain.TransitionMatrix) -> dict:
    m = pt.matrix
    return {
        "tau": pt.tau,
        "states": pt.labels,
        "row_sums": dict(zip(pt.labels, m.sum(axis=1).tolist())),
        "symmetry_residual": float(np.max(np.abs(m - m.T))),
    }


def cmd_transition(cfg: ExperimentConfig, fmt_: str = "csv") -> dict:
    pt = exact_transition(cfg)
    report = _transition_report(pt)
    files = {}
    if fmt_ == "csv":
        files["transition.csv"] = matrix_csv(pt.matrix, pt.labels)
    else:
        report["matrix"] = pt.matrix
    files["transition.json"] = to_json(report)
    return files


def classes_report(cfg: ExperimentConfig, pt: chain.TransitionMatrix | None = None) -> dict:
    pt = pt or exact_transition(cfg)
    st = chain.markov_structure(pt, cfg.eps)
    report = {"tau": pt.tau, **st.labelled()}
    if cfg.is_consensus:
        pred = consensus.predicted_classes(cfg.n)
        labels = measurement.state_labels(cfg.n)
        predicted = [[labels[i] for i in c] for c in pred.classes]
        report["predicted_classes"] = predicted
        report["predicted_sizes"] = list(pred.sizes)
        report["agreement"] = sorted(map(sorted, predicted)) == sorted(map(sorted, report["classes"]))
    return report


def cmd_classes(cfg: ExperimentConfig, fmt_: str = "json") -> dict:
    return {"classes.json": to_json(classes_report(cfg))}


def cmd_stationary(cfg: ExperimentConfig, fmt_: str = "json") -> dict:
    pt = exact_transition(cfg)
    pi = chain.stationary_distribution(pt)
    projs = measurement.network_projectors(cfg.measurement, cfg.n)
    rho = chain.expected_post_measurement(pi, projs)
    labels = measurement.state_labels(cfg.n)
    report = {
        "tau": pt.tau,
        "stationary": pi.as_dict(),
        "power_iterations": pi.iterations,
        "balance_residual_l1": float(np.abs(pi.probabilities @ pt.matrix - pi.probabilities).sum()),
        "expected_post_measurement_diagonal": dict(zip(labels, rho.diagonal().tolist())),
    }
    return {"stationary.json": to_json(report)}


def _initial(cfg: ExperimentConfig):
    if cfg.simulation.initial == "mixed":
        N = 2**cfg.n
        return np.eye(N) / N
    return measurement.parse_bits(cfg.simulation.initial)


def cmd_simulate(cfg: ExperimentConfig, fmt_: str = "csv", seed: int | None = None) -> dict:
    sim = cfg.simulation
    base = sim.seed if seed is None else seed
    model = cfg.graph if cfg.is_consensus else cfg.model
    tc = simulate.TrajectoryConfig(model, cfg.tau, sim.steps, _initial(cfg), base, cfg.measurement)
    records = simulate.batch_run(tc, sim.trajectories, base)
    emp = simulate.empirical_transition(records, cfg.n)
    exact = exact_transition(cfg).matrix
    labels = measurement.state_labels(cfg.n)
    visited = emp.visited
    dev = np.abs(emp.frequencies[visited] - exact[visited])
    files = {}
    width = len(str(len(records) - 1))
    for k, rec in enumerate(records):
        files[f"trajectories/traj_{k:0{width}d}.txt"] = "\n".join(rec.bitstrings()) + "\n"
    if fmt_ == "csv":
        files["empirical.csv"] = matrix_csv(emp.frequencies, labels)
    report = {
        "tau": cfg.tau,
        "seed": base,
        "trajectories": len(records),
        "steps": sim.steps,
        "visits": dict(zip(labels, emp.visits.tolist())),
        "unvisited_states": [lab for lab, v in zip(labels, visited) if not v],
        "max_abs_deviation_from_exact": float(dev.max()) if dev.size else None,
    }
    if fmt_ == "json":
        report["empirical"] = [None if not v else row.tolist() for v, row in zip(visited, emp.frequencies)]
        report["counts"] = emp.counts
    files["simulation.json"] = to_json(report)
    return files


def cmd_scan_tau(cfg: ExperimentConfig, fmt_: str = "json") -> dict:
    if not cfg.tau_grid:
        raise ConfigError(f"{cfg.source}: [run] tau_grid is required for scan-tau")
    entries = []
    for tau in cfg.tau_grid:
        pt = exact_transition(cfg, tau)
        st = chain.markov_structure(pt, cfg.eps)
        entries.append({
            "tau": tau,
            "irreducible": st.irreducible,
            "aperiodic": st.aperiodic,
            "absorbing": st.labelled()["absorbing"],
            "classes": st.labelled()["classes"],
            "unique_absorbing": len(st.absorbing) == 1 and len(st.closed) == 1,
        })
    first_abs = next((e["tau"] for e in entries if e["unique_absorbing"]), None)
    first_erg = next((e["tau"] for e in entries if e["irreducible"] and e["aperiodic"]), None)
    report = {"grid": list(cfg.tau_grid), "entries": entries, "first_unique_absorbing": first_abs,
              "first_irreducible_aperiodic": first_erg}
    return {"scan.json": to_json(report)}


def verify_example(cfg: ExperimentConfig | None = None) -> list:
    """Reproduce the 3-qubit path example; return ``(check, passed, detail)`` rows."""
    cfg = cfg or bundled_config()
    if not cfg.is_consensus:
        raise ConfigError("verify-paper needs a consensus model")
    g = cfg.graph
    rows = []
    pt = consensus.consensus_transition(g, cfg.tau)

    if cfg.n == 3 and cfg.tau == 1.0:
        dev = float(np.max(np.abs(pt.matrix - PRINTED_EXAMPLE_MATRIX)))
        rows.append(("transition matrix vs printed example", dev <= PRINT_TOL,
                     f"max deviation {dev:.2e} (tol {PRINT_TOL:g})"))
    else:
        rows.append(("transition matrix vs printed example", True, f"skipped: n={cfg.n}, tau={cfg.tau}"))

    st = chain.markov_structure(pt, cfg.eps)
    pred = consensus.predicted_classes(cfg.n)
    same = sorted(st.classes) == sorted(pred.classes)
    labels = measurement.state_labels(cfg.n)
    rows.append(("classes equal Hamming-weight orbits", same,
                 "; ".join("{" + ",".join(labels[i] for i in c) + "}" for c in st.classes)))
    sizes = sorted(len(c) for c in st.classes)
    want = sorted(math.comb(cfg.n, k) for k in range(cfg.n + 1))
    rows.append(("class count n+1 and binomial sizes", len(st.classes) == cfg.n + 1 and sizes == want,
                 f"sizes {sizes}"))
    absorbing = [labels[i] for i in st.absorbing]
    rows.append(("absorbing states are all-0 and all-1", absorbing == [labels[0], labels[-1]],
                 f"absorbing {absorbing}"))

    if g.connected and cfg.n > 1:
        try:
            hk = consensus.classical_heat_kernel_positive(g, cfg.tau)
            rows.append(("classical heat kernel entrywise positive", hk.positive, f"min entry {hk.min_entry:.3e}"))
        except ArithmeticError as exc:
            rows.append(("classical heat kernel entrywise positive", False, str(exc)))
    else:
        rows.append(("classical heat kernel entrywise positive", True, "skipped: single node or disconnected"))

    basis, _, theta = measurement.measurement_setup(cfg.n, cfg.measurement)
    w = lindblad.build_generator(consensus.consensus_as_lindblad(g), basis)
    other = chain.transition_matrix(w, theta, cfg.tau)
    gap = float(np.max(np.abs(other.matrix - pt.matrix)))
    rows.append(("Laplacian and realified pipelines agree", gap <= DUAL_PIPELINE_TOL,
                 f"max difference {gap:.2e}"))
    return rows


def _print_table(rows, stream) -> None:
    width = max(len(r[0]) for r in rows)
    for name, ok, detail in rows:
        print(f"{'PASS' if ok else 'FAIL'}  {name:<{width}}  {detail}", file=stream)


COMMANDS = {
    "transition": cmd_transition,
    "classes": cmd_classes,
    "stationary": cmd_stationary,
    "simulate": cmd_simulate,
    "scan-tau": cmd_scan_tau,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qbnet", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in (*COMMANDS, "verify-paper"):
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, required=name != "verify-paper",
                       help="experiment config file (verify-paper defaults to the bundled example)")
        p.add_argument("--out", type=Path, default=Path("."), help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override the simulation seed (unsigned 64-bit)")
        p.add_argument("--format", choices=("csv", "json"), default="csv", dest="fmt")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "verify-paper":
            cfg = load_config(args.config) if args.config else bundled_config()
            rows = verify_example(cfg)
            _print_table(rows, sys.stdout)
            return EXIT_OK if all(ok for _, ok, _ in rows) else EXIT_NUMERICAL
        cfg = load_config(args.config)
        if args.seed is not None and not 0 <= args.seed < 2**64:
            raise ConfigError("--seed must be an unsigned 64-bit integer")
        if args.command == "simulate":
            files = cmd_simulate(cfg, args.fmt, args.seed)
        else:
            files = COMMANDS[args.command](cfg, args.fmt)
        for path in write_outputs(args.out, files):
            print(path)
        return EXIT_OK
    except (ConfigError, DensityError, DimensionCapError, NotErgodic, NotRelaxing, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (StochasticityError, ImaginaryResidueError, NoConvergence, ArithmeticError) as exc:
        print(f"numerical invariant violated: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
