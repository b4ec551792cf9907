"""Command-line driver: bands, Casimir energy, thermal curves, sweeps and self-checks."""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import oracle, spectrum, thermal, vacuum
from .config import COMMANDS, QUANTITIES, RunConfig, parse_config
from .errors import CombError, ConfigError
from .scattering import CombModel, PoschlTeller, amplitudes

__all__ = ["main", "run", "build_parser"]

WORKERS_ENV = "COMBCASIMIR_WORKERS"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="combcasimir",
        description="Band structure, Casimir energy and thermal corrections of 1D combs.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="YAML config file; flags override its values")
        p.add_argument("--model", choices=("ddp", "pt", "free"))
        p.add_argument("--a", type=float, help="lattice spacing")
        p.add_argument("--w0", type=float)
        p.add_argument("--w1", type=float)
        p.add_argument("--eps", type=float, help="support of the Poschl-Teller node")
        p.add_argument("--gamma", type=float, help="contour half-angle (default pi/8)")
        p.add_argument("--rel-tol", type=float)
        p.add_argument("--abs-tol", type=float)
        p.add_argument("--theta-nodes", type=int)
        p.add_argument("--theta-mode", choices=("analytic", "quadrature"))
        p.add_argument("--output", "-o", help="output path (stdout when omitted)")
        p.add_argument("--format", choices=("csv", "json"))
        p.add_argument("--T", dest="T", help="temperature or start:stop:count")
        p.add_argument("--T-sweep", dest="T", help="alias of --T")
        p.add_argument("--a-sweep", help="spacings, start:stop:count")
        if name == "bands":
            p.add_argument("--n-bands", type=int)
            p.add_argument("--n-theta", type=int)
        if name == "pressure" or name == "sweep":
            p.add_argument("--include-vacuum", action="store_true", default=None)
        if name == "sweep":
            p.add_argument("--quantity", choices=QUANTITIES)
            p.add_argument("--w0-sweep")
            p.add_argument("--w1-sweep")
            p.add_argument("--eps-sweep")
    return parser


def _overrides(args: argparse.Namespace) -> dict:
    out: dict = {"command": args.command}
    model = {k: getattr(args, k) for k in ("a", "w0", "w1", "eps")
             if getattr(args, k) is not None}
    if args.model is not None:
        model["kind"] = args.model
    if model:
        out["model"] = model
    contour = {key: getattr(args, attr) for key, attr in
               (("gamma", "gamma"), ("rel_tol", "rel_tol"), ("abs_tol", "abs_tol"),
                ("theta_nodes", "theta_nodes"), ("theta_mode", "theta_mode"))
               if getattr(args, attr) is not None}
    if contour:
        out["contour"] = contour
    output = {k: getattr(args, a) for k, a in (("path", "output"), ("format", "format"))
              if getattr(args, a) is not None}
    if output:
        out["output"] = output
    sweep: dict = {}
    if args.T is not None:
        sweep["T"] = args.T
    if args.a_sweep is not None:
        sweep["a"] = args.a_sweep
    for axis in ("w0", "w1", "eps"):
        value = getattr(args, f"{axis}_sweep", None)
        if value is not None:
            sweep[axis] = value
    if getattr(args, "quantity", None) is not None:
        sweep["quantity"] = args.quantity
    if sweep:
        out["sweep"] = sweep
    for key in ("n_bands", "n_theta"):
        if getattr(args, key, None) is not None:
            out[key] = getattr(args, key)
    if getattr(args, "include_vacuum", None):
        out["include_vacuum_part"] = True
    return out


def _evaluate(task):
    """One table row; top level so it can run in a worker process."""
    quantity, model, T, contour, include_vacuum = task
    try:
        if quantity == "casimir":
            r = vacuum.casimir_energy(model, contour)
            return [r.e0_per_area, r.bound_part, r.contour_part, r.im_residue, r.error]
        if quantity == "free-energy":
            return list(thermal.delta_f(model, T, contour, full_output=True))
        if quantity == "entropy":
            return list(thermal.entropy(model, T, contour, full_output=True))
        if quantity == "pressure":
            return list(thermal.pressure(model, T, contour, include_vacuum, full_output=True))
    except CombError as exc:
        exc.context.setdefault("a", model.a)
        if T is not None:
            exc.context.setdefault("T", T)
        raise
    raise ValueError(f"unknown quantity {quantity!r}")


def _workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        raise ConfigError(f"{WORKERS_ENV} must be an integer") from None


def _map(tasks: list) -> list:
    workers = _workers()
    if workers == 1 or len(tasks) < 2:
        return [_evaluate(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_evaluate, tasks))


def _bands(cfg: RunConfig):
    model = cfg.model.build()
    theta = np.linspace(0.0, math.pi, cfg.n_theta)
    bs = spectrum.band_structure(model, cfg.n_bands, theta)
    rows = []
    for th_index, th in enumerate(theta):
        for band in bs.bands:
            hit = np.nonzero(band.theta == th)[0]
            for i in hit:
                k = band.k[i]
                rows.append([float(th), band.index, float(abs(k)), float(band.energy[i])])
    rows.sort(key=lambda r: (r[0], r[1]))
    return ["theta", "band_index", "k", "E"], rows


def _casimir(cfg: RunConfig):
    contour = cfg.contour.build()
    spacings = cfg.spacings()
    results = _map([("casimir", cfg.model.build(a=a), None, contour, False) for a in spacings])
    rows = [[a] + r for a, r in zip(spacings, results)]
    return ["a", "E0_per_area", "bound_part", "contour_part", "im_residue",
            "error_estimate"], rows


def _thermal(cfg: RunConfig):
    contour = cfg.contour.build()
    model = cfg.model.build()
    temps = cfg.temperatures()
    results = _map([(cfg.command, model, T, contour, cfg.include_vacuum_part)
                    for T in temps])
    return ["T", "value", "error_estimate"], [[T] + r for T, r in zip(temps, results)]


def _sweep(cfg: RunConfig):
    s = cfg.sweep
    m = cfg.model
    axes = {
        "a": s.a or [m.a],
        "w0": s.w0 or [m.w0],
        "w1": s.w1 or [m.w1],
        "eps": s.eps or [m.eps],
        "T": (s.T or [None]) if s.quantity != "casimir" else [None],
    }
    contour = cfg.contour.build()
    points = list(itertools.product(*axes.values()))
    tasks = []
    for a, w0, w1, eps, T in points:
        tasks.append((s.quantity, m.build(a=a, w0=w0, w1=w1, eps=eps), T, contour,
                      cfg.include_vacuum_part))
    results = _map(tasks)
    rows = []
    for (a, w0, w1, eps, T), r in zip(points, results):
        value, err = (r[0], r[-1]) if s.quantity == "casimir" else r
        rows.append([a, w0, w1, eps, T, s.quantity, value, err])
    return ["a", "w0", "w1", "eps", "T", "quantity", "value", "error_estimate"], rows


def verification_table(model: CombModel, contour: vacuum.ContourSpec | None = None,
                       T: float = 1.0) -> list[list]:
    """Residuals of the main code paths against the independent oracles."""
    contour = contour or vacuum.ContourSpec()
    rows = []
    k_grid = np.linspace(1e-2, 50, 1000)
    amp = amplitudes(model, k_grid)
    unit = np.max(np.abs(np.abs(amp.t) ** 2 + np.abs(amp.r_R) ** 2 - 1))
    rows.append(["unitarity", float(unit), 1e-10])

    if isinstance(model.potential, PoschlTeller):
        eps = model.potential.eps
        worst = 0.0
        for k in (0.5, 1.0, 2.0, 5.0):
            ode = oracle.transfer_matrix_amplitudes(eps, k)
            ref = amplitudes(model, np.array([k]))
            worst = max(worst, abs(ode.t - ref.t[0]) / abs(ref.t[0]),
                        abs(ode.r_R - ref.r_R[0]) / abs(ref.r_R[0]))
        rows.append(["ode_amplitudes", float(worst), 1e-6])

    theta = math.pi / 2
    main = spectrum.dispersion(model, theta, 5)
    c = math.cos(theta)
    scan = oracle.dense_scan_roots(lambda x: c - np.real(oracle.secular_h(model, x)),
                                   (1e-4, main[-1] + 0.5), 1e-3)
    scan = scan[scan > 0][:5]
    roots = float(np.max(np.abs(scan - main))) if len(scan) == len(main) else math.inf
    rows.append(["dispersion_roots", roots, 1e-9])

    band = spectrum.negative_band(model)
    ob = oracle.oracle_negative_band(model)
    if band is not None or ob is not None:
        diff = math.inf if (band is None or ob is None) else abs(band.kappa_min - ob.kappa_min)
        rows.append(["kappa_min", float(diff), 1e-6])

    f_main = thermal.delta_f(model, T, contour)
    f_sum = oracle.band_sum_free_energy(model, T)
    rows.append(["band_sum_free_energy", abs(f_main - f_sum) / abs(f_sum), 1e-4])
    return [[name, value, threshold, bool(value < threshold)]
            for name, value, threshold in rows]


def _verify(cfg: RunConfig):
    T = (cfg.sweep.T or [1.0])[0]
    rows = verification_table(cfg.model.build(), cfg.contour.build(), T)
    return ["check", "residual", "threshold", "passed"], rows


def _format(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _write(cfg: RunConfig, columns: list[str], rows: list[list], stdout) -> None:
    config = cfg.model_dump(mode="json")
    if cfg.output.format == "json":
        text = json.dumps({"config": config, "columns": columns,
                           "rows": [[_jsonable(v) for v in r] for r in rows]}, indent=2) + "\n"
    else:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(columns)
        for r in rows:
            writer.writerow([_format(v) for v in r])
        text = buf.getvalue()
    if cfg.output.path is None:
        stdout.write(text)
        return
    path = Path(cfg.output.path)
    path.write_text(text)
    if cfg.output.format == "csv":
        sidecar = path.with_name(path.name + ".json")
        sidecar.write_text(json.dumps({"config": config, "columns": columns}, indent=2) + "\n")


def _jsonable(value):
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    return value


_HANDLERS = {
    "bands": _bands,
    "casimir": _casimir,
    "free-energy": _thermal,
    "entropy": _thermal,
    "pressure": _thermal,
    "sweep": _sweep,
    "verify": _verify,
}


def run(cfg: RunConfig, stdout=None) -> int:
    """Execute a validated configuration; returns the process exit status."""
    stdout = stdout or sys.stdout
    columns, rows = _HANDLERS[cfg.command](cfg)
    _write(cfg, columns, rows, stdout)
    if cfg.command == "verify" and not all(r[-1] for r in rows):
        return 1
    return 0


def _error(record: dict, stderr) -> None:
    stderr.write(json.dumps(record) + "\n")


def main(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    args = build_parser().parse_args(argv)
    try:
        cfg = parse_config(args.config, _overrides(args))
    except ConfigError as exc:
        _error(exc.record(), stderr)
        return 2
    try:
        return run(cfg, stdout)
    except CombError as exc:
        _error(exc.record(), stderr)
        return 3
    except ValueError as exc:
        _error({"error": type(exc).__name__, "message": str(exc), "context": {}}, stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
