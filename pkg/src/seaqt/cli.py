"""Command-line front end.

Exit codes: 0 ok, 1 audit failure, 2 config error, 3 numerical failure,
4 infeasible target.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .audit import CheckResult, run_audit
from .composite import CompositeModel
from .config import RunConfig, _read_json, load_config, parse_config, shipped_config
from .errors import ConfigError, Infeasible, KernelViolation, MaxStepsExceeded, SingularBasis, StepRejected
from .onsager import custom_basis, onsager_report
from .operators import entropy, trace_distance
from .propagator import evolve, find_equilibrium, roundtrip_error, stability_probe
from .qubit import density_to_bloch
from .serialization import decode_matrix, encode_matrix, fmt

log = logging.getLogger("seaqt")

EXIT_OK, EXIT_AUDIT, EXIT_CONFIG, EXIT_NUMERIC, EXIT_INFEASIBLE = 0, 1, 2, 3, 4
LOG_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}
NUMERIC_ERRORS = (StepRejected, MaxStepsExceeded, KernelViolation, SingularBasis, np.linalg.LinAlgError, FloatingPointError)


def _setup_logging():
    name = os.environ.get("SEA_LOG_LEVEL", "warn").lower()
    level = LOG_LEVELS.get(name, logging.WARNING)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    if name not in LOG_LEVELS:
        log.warning("unknown SEA_LOG_LEVEL %r, using warn", name)


def _emit(block: dict, out: Path, name: str) -> None:
    out.mkdir(parents=True, exist_ok=True)
    with open(out / name, "w") as fh:
        json.dump(block, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(json.dumps(block, indent=2, sort_keys=True))


def classify(traj, model) -> str:
    final = traj.final
    if traj.status in ("boundary-approached", "max-steps"):
        return traj.status
    ev = model.evaluate(final)
    if traj.status == "converged" or ev.entropy_production < 1e-10:
        means = [final.expect(o) for o in model.conserved_observables]
        try:
            te = find_equilibrium(model, means[0], means[1:2] or None).state
            if trace_distance(te.op, final.op) < 1e-6:
                return "converged-to-TE"
        except (Infeasible, NotImplementedError):
            pass
        h = model.hamiltonian
        comm = np.max(np.abs(h @ final.op - final.op @ h))
        return "nondissipative-stationary" if comm < 1e-8 else "limit-cycle"
    return traj.status


def _write_trajectory(traj, out: Path, fmt_name: str) -> str:
    out.mkdir(parents=True, exist_ok=True)
    if fmt_name == "json":
        path = out / "trajectory.json"
        traj.to_json(path)
    else:
        path = out / "trajectory.csv"
        traj.to_csv(path)
    return path.name


def _onsager_block(cfg: RunConfig, rho) -> dict:
    if isinstance(cfg.model, CompositeModel):
        raise ConfigError("onsager analysis needs a single-constituent model")
    basis = None
    spec = cfg.onsager.get("basis", "gell-mann")
    if isinstance(spec, list):
        basis = custom_basis(rho, [decode_matrix(x) for x in spec])
    elif spec != "gell-mann":
        raise ConfigError(f"onsager.basis must be 'gell-mann' or a list of matrices, got {spec!r}")
    return onsager_report(rho, cfg.model.conserved_observables, cfg.model.relaxation, basis).to_dict()


def cmd_simulate(cfg: RunConfig, out: Path) -> int:
    traj = evolve(cfg.initial_state, cfg.model, cfg.t_final, cfg.integrator, sample_every=cfg.sample_every)
    block = traj.summary()
    block["classification"] = classify(traj, cfg.model)
    block["output"] = _write_trajectory(traj, out, cfg.output_format)
    if cfg.analyses.get("roundtrip"):
        # near-equilibrium end states make long backward runs ill-conditioned
        horizon = float(cfg.analyses.get("roundtrip_time", 1.0))
        rep = roundtrip_error(cfg.initial_state, cfg.model, horizon, cfg.integrator)
        block["roundtrip"] = {"T": horizon, "roundtrip_error": rep.roundtrip_error, "composition_error": rep.composition_error}
    if cfg.analyses.get("onsager"):
        block["onsager"] = _onsager_block(cfg, cfg.initial_state)
    if cfg.analyses.get("stability_probe"):
        st = stability_probe(
            cfg.initial_state, cfg.model, float(cfg.stability.get("eps", 1e-4)),
            float(cfg.stability.get("t_final", 60.0)), cfg.integrator,
        )
        block["stability"] = {
            "initial_entropy": st.initial_entropy,
            "final_entropy": st.final_entropy,
            "departure": st.departure,
            "distance_to_reference": st.distance_to_reference,
        }
    _emit(block, out, "summary.json")
    return EXIT_OK


def cmd_equilibrium(cfg: RunConfig, out: Path) -> int:
    eq = cfg.equilibrium
    if "energy_mean" not in eq:
        raise ConfigError("equilibrium.energy_mean is required")
    fit = find_equilibrium(cfg.model, float(eq["energy_mean"]), eq.get("extra_means"))
    t_check = float(eq.get("verify_time", 5.0))
    traj = evolve(fit.state, cfg.model, t_check, cfg.integrator)
    drift = float(np.max(np.abs(traj.final.op - fit.state.op)))
    block = {
        "beta": fit.beta,
        "nu": fit.nu,
        "energy_mean": fit.state.expect(cfg.model.hamiltonian),
        "entropy": entropy(fit.state),
        "stationarity_drift": drift,
        "stationary": bool(drift < 1e-8),
        "state": encode_matrix(fit.state.op),
        "audit": traj.summary(),
    }
    _emit(block, out, "equilibrium.json")
    return EXIT_OK if block["stationary"] else EXIT_NUMERIC


def cmd_onsager(cfg: RunConfig, out: Path) -> int:
    block = _onsager_block(cfg, cfg.initial_state)
    _emit(block, out, "onsager.json")
    return EXIT_OK


def _config_checks(cfg: RunConfig) -> list:
    traj = evolve(cfg.initial_state, cfg.model, cfg.t_final, cfg.integrator)
    s = traj.summary()
    e0 = abs(traj.samples[0].audit.energy)
    drift = max(s["max_trace_drift"], s["max_energy_drift"] / (1 + e0))
    mono = s["min_entropy_increment"] if cfg.t_final > 0 else -s["max_entropy_increment"]
    return [
        CheckResult("config conservation", drift < 1e-7, drift, 1e-7, traj.status),
        CheckResult("config monotonicity", mono >= -1e-9, mono, -1e-9, traj.status),
    ]


def cmd_audit(cfg: RunConfig | None, out: Path) -> int:
    results = run_audit()
    if cfg is not None and cfg.initial_state is not None:
        results += _config_checks(cfg)
    for r in results:
        print(r.line())
    failed = [r.name for r in results if not r.passed]
    block = {
        "passed": not failed,
        "failed": failed,
        "checks": [
            {"name": r.name, "passed": bool(r.passed), "value": float(r.value), "tolerance": float(r.tolerance), "detail": r.detail}
            for r in results
        ],
    }
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "audit.json", "w") as fh:
        json.dump(block, fh, indent=2)
    if failed:
        print(f"audit failed: {', '.join(failed)}", file=sys.stderr)
        return EXIT_AUDIT
    return EXIT_OK


QUBIT_COLUMNS = ["t", "r_x", "r_y", "r_z", "|r|", "s", "ds/dt"]


def cmd_qubit_demo(cfg: RunConfig, out: Path) -> int:
    if cfg.bloch is None:
        raise ConfigError("qubit-demo needs a model of type 'qubit'")
    traj = evolve(cfg.initial_state, cfg.model, cfg.t_final, cfg.integrator, sample_every=cfg.sample_every)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "qubit_demo.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(QUBIT_COLUMNS)
        for s in traj.samples:
            r = density_to_bloch(s.state)
            w.writerow([fmt(s.t)] + [fmt(x) for x in r] + [fmt(np.linalg.norm(r)), fmt(s.audit.entropy), fmt(s.audit.entropy_production)])
    if cfg.output_format == "json":
        traj.to_json(out / "trajectory.json")
    block = traj.summary()
    block["classification"] = classify(traj, cfg.model)
    block["output"] = "qubit_demo.csv"
    block["entropy_gap_to_ln2"] = float(np.log(2.0) - block["entropy_final"])
    _emit(block, out, "summary.json")
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "equilibrium": cmd_equilibrium,
    "onsager": cmd_onsager,
    "audit": cmd_audit,
    "qubit-demo": cmd_qubit_demo,
}


def run_command(command: str, config, out, seed=None, fmt_override=None, base_dir=None) -> int:
    """Run one command; ``config`` is a path, a dict or ``None``. Returns the exit code."""
    out = Path(out)
    try:
        cfg = None
        if config is None and command == "qubit-demo":
            config = shipped_config("qubit_demo.json")
        if config is None and command != "audit":
            raise ConfigError(f"{command} needs --config")
        if config is not None:
            need_state = command not in ("equilibrium",)
            if isinstance(config, dict):
                cfg = parse_config(config, seed, base_dir, need_state)
            else:
                cfg = load_config(config, seed, need_state)
            if fmt_override:
                cfg.output_format = fmt_override
        return COMMANDS[command](cfg, out)
    except Infeasible as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except NUMERIC_ERRORS as exc:
        print(f"numerical failure ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, ValueError, KeyError, TypeError) as exc:
        print(f"config error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_CONFIG


def _sweep_entries(path):
    data = _read_json(path)
    entries = data.get("configs") if isinstance(data, dict) else data
    if not isinstance(entries, list) or not entries:
        raise ConfigError("sweep file must be a list of configs or {\"configs\": [...]}")
    return entries


def _sweep_worker(args):
    command, entry, out, seed, fmt_override, base_dir = args
    _setup_logging()
    if isinstance(entry, str):
        entry = os.path.join(base_dir, entry)
    return run_command(command, entry, out, seed, fmt_override, base_dir)


def run_sweep(command, sweep_path, out, seed=None, fmt_override=None, workers=None) -> int:
    try:
        entries = _sweep_entries(sweep_path)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    base = os.path.dirname(os.path.abspath(sweep_path))
    jobs = [(command, e, str(Path(out) / f"run_{i:03d}"), seed, fmt_override, base) for i, e in enumerate(entries)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        codes = list(pool.map(_sweep_worker, jobs))
    for i, c in enumerate(codes):
        log.info("sweep run %03d exited with %d", i, c)
    return max(codes)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="seaqt", description="Steepest-entropy-ascent quantum dynamics")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name, text in [
        ("simulate", "integrate a model and write the trajectory"),
        ("equilibrium", "fit the canonical state for given mean values"),
        ("onsager", "affinities, conductivities and entropy-production forms"),
        ("audit", "run the invariant suite"),
        ("qubit-demo", "Bloch-sphere relaxation of a single qubit"),
    ]:
        s = sub.add_parser(name, help=text)
        s.add_argument("--config", help="JSON run configuration")
        s.add_argument("--out", default="out", help="output directory (default: out)")
        s.add_argument("--sweep", help="JSON list of configs run in parallel, one output directory each")
        s.add_argument("--format", choices=("csv", "json"), help="trajectory output format")
        s.add_argument("--seed", type=int, help="seed for random initial states")
        s.add_argument("--workers", type=int, help="process count for --sweep")
    return p


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    if args.sweep:
        return run_sweep(args.command, args.sweep, args.out, args.seed, args.format, args.workers)
    return run_command(args.command, args.config, args.out, args.seed, args.format)


if __name__ == "__main__":
    sys.exit(main())
