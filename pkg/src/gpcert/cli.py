"""Command-line front end: ``gpcert certify | simulate | sweep``.

Exit codes: 0 ok, 2 configuration error, 3 infeasible, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
import time
from dataclasses import replace

import numpy as np

from . import __version__
from .config import ConfigFile, load_config, parse_config, resolve_config_path, set_param
from .errors import ConfigError, InfeasibleError, IntegrationError, NumericalFailure, SingularGainError
from .lmi import bisect_delta, compute_hinf_gain
from .sdp import STRICT_REL
from .sim.harness import atomic_write, run_batch, run_scenario, write_run

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_NUMERICAL = 4

SWEEP_COLUMNS = (
    "param", "value", "runs", "e_y_inf", "cae", "cae_early", "zdot_e_inf",
    "bound_violations", "envelope_violations", "normalized_cae", "normalized_cae_early",
)

log = logging.getLogger("gpcert")


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n"


def _jsonable(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


def cmd_certify(config_path, tol: float | None = None) -> tuple[dict, int]:
    """Certify the configured polytope; returns ``(report, exit_code)``."""
    cfg = load_config(config_path)
    if tol is not None:
        cfg = cfg.model_copy(update={"certification": cfg.certification.model_copy(update={"tol": tol})})
    cert_cfg = cfg.certification
    poly, warnings = cfg.polytope()
    report = {
        "polytope": poly.to_dict(),
        "warnings": warnings,
        "tolerances": {"delta_rel": cert_cfg.tol, "grid_points": cert_cfg.grid_points, "strict_rel": STRICT_REL},
        "config": cfg.model_dump(mode="json"),
    }
    t0 = time.perf_counter()
    code = EXIT_OK
    try:
        cert = bisect_delta(poly, cert_cfg.delta_range, tol=cert_cfg.tol, grid_points=cert_cfg.grid_points)
        report.update(
            status="Optimal",
            delta_star=cert.delta,
            gamma=cert.gamma,
            gamma_bar=cert.gamma_bar,
            P=cert.P.tolist(),
            solver=cert.solver,
        )
        if cert_cfg.hinf:
            report["gamma_hinf"] = compute_hinf_gain(poly)
        if cfg.derl.e_y_lim is not None:
            report["zdot_e_admissible"] = cfg.derl.e_y_lim / cert.gamma
    except InfeasibleError as exc:
        report.update(status="Infeasible", message=str(exc))
        code = EXIT_INFEASIBLE
    except NumericalFailure as exc:
        report.update(status="NumericalFailure", message=str(exc))
        code = EXIT_NUMERICAL
    report["wall_time_s"] = time.perf_counter() - t0
    return report, code


def cmd_simulate(config_path, seed: int | None = None, out_dir: str | None = None):
    """Run one scenario and write ``run.csv`` / ``run.json`` atomically into ``out_dir``."""
    cfg = load_config(config_path)
    metrics = run_scenario(cfg.scenario_config(seed=seed))
    metrics.config = {"file": cfg.model_dump(mode="json"), "effective": metrics.config}
    paths = None
    if out_dir is not None:
        paths = write_run(metrics, out_dir, stem="run")
    return metrics, paths


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def parse_values(text: str | None) -> list:
    if text is None:
        return []
    text = text.strip()
    if text.startswith("["):
        vals = _parse_value(text)
        if not isinstance(vals, list):
            raise ConfigError("--values must be a JSON list or comma separated")
        return vals
    return [_parse_value(v.strip()) for v in text.split(",") if v.strip()]


def _mean(ms, key) -> float:
    vals = [getattr(m, key) for m in ms]
    return float(np.mean(vals))


def cmd_sweep(config_path, param: str, values: list, runs: int = 1, seed: int | None = None, n_jobs: int = 1) -> list[dict]:
    """Sweep ``param`` over ``values``; each row averages ``runs`` seeds.

    ``normalized_cae`` divides by the CAE of the same seeds with the GP
    learner and DERL switched off.
    """
    if not values:
        raise ConfigError("--values is empty")
    if runs < 1:
        raise ConfigError("--runs must be at least 1")
    path = resolve_config_path(config_path)
    data = json.loads(path.read_text())
    base = parse_config(data)
    seed0 = base.scenario.seed if (seed is None and base.scenario is not None) else (seed or 0)
    rows = []
    baseline_cache: dict[tuple, tuple[float, float]] = {}
    for v in values:
        cfg = parse_config(set_param(data, param, v))
        scen = cfg.scenario_config(seed=seed0)
        cfgs = [replace(scen, seed=seed0 + r) for r in range(runs)]
        ms = run_batch(cfgs, n_jobs)
        key = _baseline_key(cfg)
        if not (scen.gpsol_on or scen.derl_on):
            base_cae = (_mean(ms, "cae"), _mean(ms, "cae_early"))
        else:
            if key not in baseline_cache:
                bcfgs = [replace(c, gpsol_on=False, derl_on=False) for c in cfgs]
                bms = run_batch(bcfgs, n_jobs)
                baseline_cache[key] = (_mean(bms, "cae"), _mean(bms, "cae_early"))
            base_cae = baseline_cache[key]
        cae, cae_early = _mean(ms, "cae"), _mean(ms, "cae_early")
        rows.append(
            {
                "param": param,
                "value": v,
                "runs": runs,
                "e_y_inf": _mean(ms, "e_y_inf"),
                "cae": cae,
                "cae_early": cae_early,
                "zdot_e_inf": _mean(ms, "zdot_e_inf"),
                "bound_violations": _mean(ms, "bound_violations"),
                "envelope_violations": _mean(ms, "envelope_violations"),
                "normalized_cae": cae / base_cae[0] if base_cae[0] > 0 else math.nan,
                "normalized_cae_early": cae_early / base_cae[1] if base_cae[1] > 0 else math.nan,
            }
        )
    return rows


def _baseline_key(cfg: ConfigFile) -> tuple:
    # the baseline ignores GP and DERL settings
    d = cfg.model_dump(mode="json", exclude={"gpsol", "derl", "certification"})
    return (json.dumps(d, sort_keys=True),)


def sweep_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=SWEEP_COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (json.dumps(r[k]) if k == "value" else r[k]) for k in SWEEP_COLUMNS})
    return buf.getvalue()


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gpcert", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("certify", help="compute delta*, the peak-to-peak and H-infinity gains")
    c.add_argument("config", help="config path or fixture name")
    c.add_argument("--tol", type=float, default=None, help="relative tolerance of the delta search")
    c.add_argument("--out-dir", default=None, help="also write cert.json here")

    s = sub.add_parser("simulate", help="run one seeded closed-loop scenario")
    s.add_argument("config")
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--out-dir", default=".", help="directory for run.csv and run.json")

    w = sub.add_parser("sweep", help="average metrics over seeds for several parameter values")
    w.add_argument("config")
    w.add_argument("--param", required=True, help="dotted schema path, e.g. derl.e_y_lim")
    w.add_argument("--values", required=True, help="comma separated or JSON list")
    w.add_argument("--runs", type=int, default=1)
    w.add_argument("--seed", type=int, default=None)
    w.add_argument("--jobs", type=int, default=1, help="worker processes")
    w.add_argument("--out-dir", default=None, help="also write sweep.csv here")
    return p


def _run(args) -> int:
    if args.command == "certify":
        report, code = cmd_certify(args.config, tol=args.tol)
        text = _dump(report)
        if args.out_dir:
            atomic_write(os.path.join(args.out_dir, "cert.json"), text)
        sys.stdout.write(text)
        return code
    if args.command == "simulate":
        metrics, paths = cmd_simulate(args.config, seed=args.seed, out_dir=args.out_dir)
        sys.stdout.write(_dump({"metrics": metrics.summary(), "files": list(paths or ())}))
        return EXIT_OK
    if args.command == "sweep":
        rows = cmd_sweep(args.config, args.param, parse_values(args.values), args.runs, args.seed, args.jobs)
        text = sweep_csv(rows)
        if args.out_dir:
            atomic_write(os.path.join(args.out_dir, "sweep.csv"), text)
        sys.stdout.write(text)
        return EXIT_OK
    raise ConfigError(f"unknown command {args.command!r}")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, stream=sys.stderr)
    try:
        return _run(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (NumericalFailure, IntegrationError, SingularGainError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
