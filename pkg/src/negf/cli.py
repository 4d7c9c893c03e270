"""Command-line driver: single bias points and I-V sweeps.

Exit codes: 0 converged, 2 finished without convergence (results are still
written), 1 input or solver error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dyson import DysonError, ScbaDivergence, ScbaResult, scba_loop
from .model import (
    BiasSpec,
    ConfigError,
    JunctionSpec,
    SolverOptions,
    apply_bias,
    apply_overrides,
    bias_from_dict,
    options_from_dict,
    options_to_dict,
    spec_from_dict,
    spec_to_dict,
)
from .observables import CurrentResult, ObservableError, currents, occupation, spectral, transmission

log = logging.getLogger("negf")

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NOT_CONVERGED = 2

IV_HEADER = ["V", "I_a", "I_b", "I_net", "conservation_residual", "converged", "iterations"]


class InputError(Exception):
    """Bad command-line input or configuration; message names the field."""


def fmt(x: float) -> str:
    """Round-trip float formatting (17 significant digits)."""
    return f"{float(x):.17g}"


@dataclass
class PointResult:
    voltage: float
    spec: JunctionSpec
    result: ScbaResult
    current: CurrentResult
    occupations: list
    seconds: float

    @property
    def converged(self) -> bool:
        return self.result.converged


def load_config(path, overrides=()) -> tuple[JunctionSpec, SolverOptions, BiasSpec]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: malformed JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise InputError(f"{path}: top level must be an object")
    try:
        doc = apply_overrides(doc, overrides)
        return spec_from_dict(doc), options_from_dict(doc), bias_from_dict(doc)
    except ConfigError as exc:
        raise InputError(str(exc)) from None


def _occupations(result: ScbaResult) -> list:
    try:
        return occupation(result.g).tolist()
    except ObservableError as exc:
        log.warning("%s", exc)
        w = result.grid.weights / (2.0 * np.pi)
        return (-1j * np.einsum("w,wii->i", w, result.g.lr.values)).real.tolist()


def solve_point(spec: JunctionSpec, options: SolverOptions, bias: BiasSpec) -> PointResult:
    """Bias the equilibrium ``spec`` and run the solver."""
    try:
        biased = apply_bias(spec, bias.voltage, bias.profile)
    except ConfigError as exc:
        raise InputError(str(exc)) from None
    t0 = time.perf_counter()
    result = scba_loop(biased, options)
    seconds = time.perf_counter() - t0
    # an unconverged iterate need not be a consistent Green function; report
    # the real part of its current rather than refusing to write results
    rtol = 1e-8 if result.converged else np.inf
    cur = currents(result.g, result.lead_sigmas["a"], result.lead_sigmas["b"], rtol_imag=rtol)
    return PointResult(bias.voltage, biased, result, cur, _occupations(result), seconds)


def report(point: PointResult, options: SolverOptions, bias: BiasSpec) -> dict:
    r = point.result
    profile = list(bias.profile) if isinstance(bias.profile, tuple) else bias.profile
    return {
        "spec": spec_to_dict(point.spec),
        "bias": {"voltage": bias.voltage, "profile": profile},
        "options": options_to_dict(options),
        "current": point.current.as_dict(),
        "occupations": point.occupations,
        "convergence": {
            "converged": r.converged,
            "iterations": r.iterations,
            "residual_history": list(r.residual_history),
        },
        "timing": {"solve_seconds": point.seconds},
    }


def _write_csv(path: Path, header, rows):
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def write_run_outputs(point: PointResult, options: SolverOptions, bias: BiasSpec, out: Path):
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(json.dumps(report(point, options, bias), indent=2) + "\n")

    r = point.result
    omegas = r.grid.omegas
    n = point.spec.n_levels
    a = np.diagonal(spectral(r.g).values, axis1=1, axis2=2).real
    t = transmission(r.g, point.spec.lead_a.gamma, point.spec.lead_b.gamma)
    header = ["omega"] + [f"A_{i}{i}" for i in range(1, n + 1)] + ["T"]
    rows = ([fmt(w)] + [fmt(x) for x in a[k]] + [fmt(t[k])] for k, w in enumerate(omegas))
    _write_csv(out / "spectral.csv", header, rows)

    s = np.diagonal(r.sigma.retarded.values, axis1=1, axis2=2)
    header = ["omega"]
    for i in range(1, n + 1):
        header += [f"Re_Sigma_{i}{i}", f"Im_Sigma_{i}{i}"]
    rows = ([fmt(w)] + [fmt(v) for z in s[k] for v in (z.real, z.imag)] for k, w in enumerate(omegas))
    _write_csv(out / "selfenergy.csv", header, rows)


def cmd_run(config_path, out_dir, overrides=()) -> int:
    spec, options, bias = load_config(config_path, overrides)
    point = solve_point(spec, options, bias)
    write_run_outputs(point, options, bias, Path(out_dir))
    if not point.converged:
        log.warning("SCBA did not converge in %d iterations", point.result.iterations)
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def _sweep_point(args):
    spec, options, profile, v = args
    p = solve_point(spec, options, BiasSpec(v, profile))
    c = p.current
    return [fmt(v), fmt(c.current_a), fmt(c.current_b), fmt(c.net), fmt(c.conservation_residual),
            "true" if p.converged else "false", str(p.result.iterations)], p.converged


def sweep_voltages(v_from: float, v_to: float, steps: int) -> np.ndarray:
    if isinstance(steps, bool) or int(steps) != steps or steps < 2:
        raise InputError(f"steps: must be an integer >= 2, got {steps}")
    if not v_to > v_from:
        raise InputError(f"--to ({v_to}) must be greater than --from ({v_from})")
    return np.linspace(v_from, v_to, int(steps))


def cmd_sweep(config_path, v_from, v_to, steps, out_dir, parallel=False, overrides=()) -> int:
    """Solve every bias point independently and write ``iv.csv`` ordered by bias."""
    volts = sweep_voltages(v_from, v_to, steps)
    spec, options, bias = load_config(config_path, overrides)
    jobs = [(spec, options, bias.profile, float(v)) for v in volts]
    if parallel:
        with ProcessPoolExecutor() as pool:
            results = list(pool.map(_sweep_point, jobs))
    else:
        results = [_sweep_point(j) for j in jobs]
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / "iv.csv", IV_HEADER, [row for row, _ in results])
    n_bad = sum(not ok for _, ok in results)
    if n_bad:
        log.warning("%d of %d bias points did not converge", n_bad, len(results))
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="negf", description="Steady-state NEGF transport with electron-phonon coupling.")
    p.add_argument("-v", "--verbose", action="store_true", help="log SCBA iterations")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="solve a single bias point")
    run.add_argument("--config", required=True)
    run.add_argument("--out", required=True)
    run.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                     help="override a config field, e.g. solver.mixing=0.3 (repeatable)")

    sw = sub.add_parser("sweep", help="I-V sweep over equally spaced bias points")
    sw.add_argument("--config", required=True)
    sw.add_argument("--from", dest="v_from", type=float, required=True)
    sw.add_argument("--to", dest="v_to", type=float, required=True)
    sw.add_argument("--steps", type=int, required=True)
    sw.add_argument("--out", required=True)
    sw.add_argument("--parallel", action="store_true", help="solve bias points in worker processes")
    sw.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="negf: %(levelname)s: %(message)s")
    try:
        if args.command == "run":
            return cmd_run(args.config, args.out, args.overrides)
        return cmd_sweep(args.config, args.v_from, args.v_to, args.steps, args.out,
                         args.parallel, args.overrides)
    except InputError as exc:
        print(f"negf: input error: {exc}", file=sys.stderr)
    except (DysonError, ScbaDivergence) as exc:
        print(f"negf: solver error: {exc}", file=sys.stderr)
    except OSError as exc:
        print(f"negf: cannot write output: {exc}", file=sys.stderr)
    return EXIT_INPUT
