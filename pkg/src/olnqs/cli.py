"""Command-line front end: ``olnqs run --config FILE`` and ``olnqs table1``.

Exit codes: 0 success, 2 configuration error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import os
import sys
import time
from contextlib import nullcontext
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .ansatz import param_count
from .config import ConfigError, ExperimentConfig, parse_config
from .estimators import VariationalSteadyState
from .lindblad import LindbladModel, as_liouvillian, maximally_mixed, rk4_step
from .observables import frobenius_distance, mean_magnetization, trace_normalize
from .symmetry import build_group, invariant_dimension
from .variational import OptimizationError, cost_normalized, save_state

log = logging.getLogger("olnqs")

HEADER = ["n", "t", "Mx", "My", "Mz", "cost", "step_norm", "dt_eff", "ln_d_rk"]
# Formula value differs from the published N=8, alpha=1 cell.
PUBLISHED_NP_ALPHA1 = {8: 132}


def _fmt(x) -> str:
    if x is None:
        return ""
    return format(float(x), ".17g")


def _row(rep) -> list[str]:
    m = rep.magnetization
    return [str(rep.n), _fmt(rep.t), _fmt(m.x), _fmt(m.y), _fmt(m.z), _fmt(rep.cost), _fmt(rep.step_norm), _fmt(rep.dt_eff), _fmt(rep.ln_d_rk)]


def cache_dir() -> Path:
    return Path(os.environ.get("OLNQS_CACHE_DIR", Path.home() / ".cache" / "olnqs"))


def rk_cache_key(model: LindbladModel, dt: float, n_steps: int) -> str:
    payload = json.dumps(
        {"N": model.N, "J": model.J, "B": model.B, "gamma": model.gamma, "dt": dt, "n_steps": int(n_steps), "rho0": "maximally-mixed", "v": 1},
        sort_keys=True,
    )
    return hashlib.sha256(payload.encode()).hexdigest()[:24]


def rk_endpoint(model: LindbladModel, dt: float, n_steps: int, use_cache: bool = True) -> np.ndarray:
    """RK4 state after ``n_steps`` from the maximally mixed state, cached on disk."""
    path = cache_dir() / f"rk-{rk_cache_key(model, dt, n_steps)}.npy"
    if use_cache and path.is_file():
        return np.load(path)
    L = as_liouvillian(model)
    rho = maximally_mixed(model.N)
    for _ in range(int(n_steps)):
        rho = rk4_step(rho, dt, L)
    if use_cache:
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            np.save(path, rho)
        except OSError as exc:
            log.warning("could not write RK cache %s: %s", path, exc)
    return rho


def _run_rk(cfg: ExperimentConfig, writer, fh, out: Path) -> dict:
    model = cfg.model
    L = as_liouvillian(model)
    rho = maximally_mixed(cfg.N)
    for n in range(1, cfg.max_iters + 1):
        new = rk4_step(rho, cfg.dt_base, L)
        if not np.all(np.isfinite(new)):
            raise OptimizationError(n, "non-finite RK state")
        cost = cost_normalized(new, L)
        m = mean_magnetization(new)
        writer.writerow([str(n), _fmt(n * cfg.dt_base), _fmt(m.x), _fmt(m.y), _fmt(m.z), _fmt(cost), _fmt(np.linalg.norm(new - rho)), _fmt(cfg.dt_base), ""])
        rho = new
        if n % 100 == 0:
            fh.flush()
            log.info("rk step %d cost %.3e", n, cost)
    try:
        path = cache_dir() / f"rk-{rk_cache_key(model, cfg.dt_base, cfg.max_iters)}.npy"
        path.parent.mkdir(parents=True, exist_ok=True)
        np.save(path, rho)
    except OSError as exc:
        log.warning("could not write RK cache: %s", exc)
    np.save(out / "rho.npy", trace_normalize(rho))
    return {"magnetization": mean_magnetization(rho), "cost": cost_normalized(rho, L), "iterations": cfg.max_iters}


def _run_variational(cfg: ExperimentConfig, writer, fh, out: Path) -> dict:
    if cfg.mode in ("rbm", "invariant"):
        kind, method = cfg.mode, "tdvp"
    else:
        kind, method = cfg.ansatz, cfg.mode
    est = VariationalSteadyState(
        kind=kind,
        alpha=cfg.alpha,
        beta=cfg.beta,
        method=method,
        dt_base=cfg.dt_base,
        rcond=cfg.rcond,
        max_iter=cfg.max_iters,
        cost_threshold=cfg.cost_threshold,
        d_nu=cfg.d_nu,
        cost=cfg.cost,
        hermitian_c=cfg.hermitian_c,
        random_state=cfg.seed,
        rk_reference=cfg.rk_reference,
    )

    def on_iteration(state, rep):
        writer.writerow(_row(rep))
        if rep.n % 100 == 0:
            fh.flush()
            log.info("iteration %d t=%.4f cost %.3e step %.3e", rep.n, rep.t, rep.cost, rep.step_norm)
        if cfg.checkpoint_every and rep.n % cfg.checkpoint_every == 0:
            save_state(out / "checkpoint.json", state)

    est.set_params(callback=on_iteration)
    est.fit(cfg.model)
    save_state(out / "checkpoint.json", est.state_)
    np.save(out / "rho.npy", trace_normalize(est.rho_))
    result = {
        "magnetization": est.magnetization_,
        "cost": est.history_[-1].cost,
        "iterations": est.n_iter_,
        "physical_time": est.state_.t,
        "n_real_params": est.params_.n_real,
    }
    if cfg.rk_reference:
        endpoint = rk_endpoint(cfg.model, cfg.dt_base, cfg.max_iters)
        d, ln_d = frobenius_distance(est.rho_, endpoint)
        result["rk_endpoint_magnetization"] = mean_magnetization(endpoint)
        result["distance_to_rk_endpoint"] = d
        result["final_ln_d_rk"] = est.history_[-1].ln_d_rk
    return result


def _write_summary(path: Path, cfg: ExperimentConfig, result: dict, wall: float) -> None:
    lines = [f"olnqs {__version__}", f"seed = {cfg.seed}", f"wall_time_s = {wall:.3f}"]
    for key, value in result.items():
        if hasattr(value, "_fields"):
            value = ", ".join(_fmt(v) for v in value)
        elif isinstance(value, float):
            value = _fmt(value)
        lines.append(f"{key} = {value}")
    lines.append("distance_convention = Frobenius norm of trace-normalized operands")
    lines.append("")
    lines.append("[config]")
    lines.append(cfg.echo())
    path.write_text("\n".join(lines) + "\n")


def run_experiment(cfg: ExperimentConfig, out: Optional[os.PathLike] = None) -> int:
    """Run one experiment and write ``trajectory.csv``, ``summary.txt`` and ``rho.npy``.

    Numeric failures propagate as :class:`OptimizationError` after the
    partial CSV has been flushed.
    """
    out = Path(out if out is not None else cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    with open(out / "trajectory.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(HEADER)
        if cfg.mode == "rk":
            result = _run_rk(cfg, writer, fh, out)
        else:
            result = _run_variational(cfg, writer, fh, out)
    _write_summary(out / "summary.txt", cfg, result, time.perf_counter() - start)
    return 0


def table1_report(n_max: int = 8) -> list[dict]:
    """Parameter counts against the invariant-subspace dimension, N = 2..n_max."""
    if n_max < 2 or n_max > 12:
        raise ValueError("n_max must be in [2, 12]")
    rows = []
    for n in range(2, n_max + 1):
        np1 = param_count(n, 1)
        note = ""
        if n in PUBLISHED_NP_ALPHA1 and PUBLISHED_NP_ALPHA1[n] != np1:
            note = f"formula gives {np1}; published table lists {PUBLISHED_NP_ALPHA1[n]}"
        rows.append(
            {
                "N": n,
                "Np_alpha1": np1,
                "Np_alpha2": param_count(n, 2),
                "dim_IG": invariant_dimension(build_group(n)),
                "DxD": 4**n,
                "note": note,
            }
        )
    return rows


def _print_table(rows, stream) -> None:
    writer = csv.DictWriter(stream, fieldnames=list(rows[0]), lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)


def _threads(k: Optional[int]):
    if k is None:
        return nullcontext()
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=k)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="olnqs", description="Steady states of dissipative spin chains with RBM density operators.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command")
    run = sub.add_parser("run", help="run an experiment from a config file (default command)")
    run.add_argument("--config", required=True, metavar="PATH")
    run.add_argument("--mode", choices=["rk", "rbm", "invariant", "gradient", "natural-gradient"])
    run.add_argument("--seed", type=int)
    run.add_argument("--threads", type=int, metavar="K", help="BLAS thread cap; 1 gives bit-reproducible output")
    run.add_argument("--out", metavar="DIR")
    t1 = sub.add_parser("table1", help="parameter counts vs invariant-subspace dimension")
    t1.add_argument("--nmax", type=int, default=8, metavar="K")
    t1.add_argument("--csv", metavar="PATH", help="also write the table to PATH")
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if argv and argv[0] not in ("run", "table1", "-h", "--help", "--version"):
        argv = ["run"] + argv
    level = os.environ.get("OLNQS_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help()
        return 2
    if args.command == "table1":
        rows = table1_report(args.nmax)
        _print_table(rows, sys.stdout)
        if args.csv:
            with open(args.csv, "w", newline="") as fh:
                _print_table(rows, fh)
        return 0
    try:
        cfg = parse_config(args.config).with_overrides(mode=args.mode, seed=args.seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        with _threads(args.threads):
            return run_experiment(cfg, args.out)
    except OptimizationError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    except (FloatingPointError, np.linalg.LinAlgError, OverflowError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
