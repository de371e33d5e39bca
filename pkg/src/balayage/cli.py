"""Command line front end.

    balayage run <config.json> [--out DIR] [--seed N] [--threads K]
    balayage verify [--filter MODULE] [--seed N]

Exit codes: 0 success, 1 configuration or solver error, 2 a check failed.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__, apps, radial, verify
from .charge import volume_form
from .config import ConfigError, Scenario, build_charge, build_manifold, load_config, parse_location
from .greens import Potential, SolverError, green_potential
from .obstacle import InfeasibleError
from .partial import bal, check_bounds, check_structure, existence_diagnostic

log = logging.getLogger("balayage")

EXIT_OK, EXIT_ERROR, EXIT_CHECK = 0, 1, 2


class ScenarioError(RuntimeError):
    """A scenario could not be run (bad input or solver failure)."""


def _setup_logging() -> None:
    level = os.environ.get("BALAYAGE_LOG", "error").lower()
    if level not in ("error", "info", "debug"):
        level = "error"
    logging.basicConfig(level=getattr(logging, level.upper()),
                        format="%(levelname)s %(name)s: %(message)s")


def _need(sc: Scenario, key: str):
    if key not in sc.raw:
        raise ConfigError(f"{sc.path}.{key}: required for task {sc.task!r}")
    return sc.raw[key]


def _num(sc: Scenario, key: str, default=None) -> float:
    v = sc.raw.get(key, default) if default is not None else _need(sc, key)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{sc.path}.{key}: expected a number")
    return float(v)


def _converged(res) -> None:
    if not res.converged:
        raise ScenarioError(f"solver did not converge: {res.diagnostics}")


# -- tasks ----------------------------------------------------------------

def task_bal(sc: Scenario, outdir: Optional[Path]):
    m = build_manifold(_need(sc, "manifold"), f"{sc.path}.manifold")
    sigma = build_charge(m, _need(sc, "sigma"), f"{sc.path}.sigma")
    lam = build_charge(m, sc.raw.get("lambda"), f"{sc.path}.lambda")
    res = bal(m, sigma, lam, sc.params)
    _converged(res)
    summary = res.summary()
    nu = res.nu.masses
    top = np.argsort(-np.abs(nu))[:5]
    summary["largest_nu"] = [{"node": int(i), "mass": float(nu[i])} for i in top]
    checks = {}
    if "bounds" in sc.checks:
        checks["bounds"] = check_bounds(res).passed
    if "structure" in sc.checks:
        st = check_structure(res)
        checks["structure"] = st.passed
        summary["structure"] = {"passed": st.passed, "sing_mass": st.sing_mass,
                                "locations": st.locations[:10]}
    if outdir is not None:
        res.to_csv(outdir / "fields.csv")
    return summary, checks


def task_harmonic_ball(sc: Scenario, outdir: Optional[Path]):
    m = build_manifold(_need(sc, "manifold"), f"{sc.path}.manifold")
    a = parse_location(m, sc.raw.get("center"), f"{sc.path}.center")
    rep = apps.harmonic_ball(m, a, _num(sc, "t"), sc.params)
    _converged(rep.result)
    checks = {}
    if "volume" in sc.checks:
        checks["volume"] = abs(rep.measured_volume - rep.input) <= 1e-3 * rep.input
    if outdir is not None:
        rep.result.to_csv(outdir / "fields.csv")
    return rep.summary(), checks


def task_geodesic_ball(sc: Scenario, outdir: Optional[Path]):
    m = build_manifold(_need(sc, "manifold"), f"{sc.path}.manifold")
    a = parse_location(m, sc.raw.get("center"), f"{sc.path}.center")
    r = _num(sc, "r")
    rep = apps.geodesic_ball(m, a, r)
    summary = rep.summary()
    checks = {}
    if "equivalence" in sc.checks:
        eq = apps.ball_equivalence_check(m, a, r, sc.params)
        checks["equivalence"] = eq.passed
        summary["equivalence"] = {"passed": eq.passed, "t_mass": eq.t_mass,
                                  "relation_t": eq.relation_t, "relation_residual": eq.relation_residual,
                                  "mismatched_nodes": eq.mismatched_nodes}
    if outdir is not None:
        np.savetxt(outdir / "mask.csv", rep.region_mask.astype(int), fmt="%d", header="in_ball",
                   comments="")
    return summary, checks


def task_growth(sc: Scenario, outdir: Optional[Path]):
    m = build_manifold(_need(sc, "manifold"), f"{sc.path}.manifold")
    a = parse_location(m, sc.raw.get("center"), f"{sc.path}.center")
    ts = _need(sc, "t_schedule")
    if not isinstance(ts, list) or not ts:
        raise ConfigError(f"{sc.path}.t_schedule: expected a nonempty list of numbers")
    d0 = None
    if "d0" in sc.raw:
        d0_charge = build_charge(m, sc.raw["d0"], f"{sc.path}.d0")
        d0 = d0_charge.masses > 0
    trace = apps.laplacian_growth(m, a, d0, ts, sc.params)
    for res in trace.results:
        _converged(res)
    checks = {}
    if "nested" in sc.checks:
        checks["nested"] = all(not (x & ~y).any() for x, y in zip(trace.masks, trace.masks[1:]))
    if "volume" in sc.checks:
        base = 0.0 if d0 is None else float(m.volume_weights[d0].sum())
        checks["volume"] = all(abs(v - base - t) <= 1e-3 * t for v, t in zip(trace.volumes, ts))
    if outdir is not None:
        trace.export(outdir)
    return trace.summary(), checks


def _field(sc: Scenario, m):
    spec = sc.raw.get("field", {"kind": "zero"})
    p = f"{sc.path}.field"
    kind = spec.get("kind") if isinstance(spec, dict) else None
    if kind == "zero":
        return Potential(np.zeros(m.n_nodes), m)
    if kind == "two_point":
        a = parse_location(m, spec.get("a"), f"{p}.a")
        return apps.two_point_field(m, a, float(spec.get("alpha", 1.0)), float(spec.get("beta", 1.0)))
    if kind == "green":
        ch = build_charge(m, spec.get("charge"), f"{p}.charge")
        return green_potential(m, ch)
    raise ConfigError(f"{p}.kind: expected 'zero', 'two_point' or 'green'")


def task_equilibrium(sc: Scenario, outdir: Optional[Path]):
    m = build_manifold(_need(sc, "manifold"), f"{sc.path}.manifold")
    rep = apps.weighted_equilibrium(m, _field(sc, m), _num(sc, "t"), sc.params)
    _converged(rep.result)
    scale = float(np.abs(rep.result.sigma.masses).sum())
    checks = {}
    if "robin" in sc.checks:
        checks["robin"] = (rep.min_slack >= -1e-6 * scale
                           and rep.max_support_deviation <= 1e-4 * scale)
    summary = rep.summary()
    summary["support_components"] = apps.components(m, rep.support_mask)
    summary["complement_components"] = apps.components(m, ~rep.support_mask)
    if outdir is not None:
        rep.result.to_csv(outdir / "fields.csv")
    return summary, checks


def task_quadrature(sc: Scenario, outdir: Optional[Path]):
    m = build_manifold(_need(sc, "manifold"), f"{sc.path}.manifold")
    source = build_charge(m, _need(sc, "source"), f"{sc.path}.source")
    res = bal(m, source, volume_form(m), sc.params)
    _converged(res)
    fill = np.clip(res.nu.masses / m.volume_weights, 0.0, 1.0)
    probes = [parse_location(m, y, f"{sc.path}.probes[{k}]")
              for k, y in enumerate(_need(sc, "probes"))]
    rep = apps.quadrature_verify(m, fill, source, probes)
    summary = {"passed": rep.passed, "slacks": rep.slacks, "mass_gap": rep.mass_gap,
               "probe_nodes": rep.probes, "domain_volume": float((fill * m.volume_weights).sum())}
    if outdir is not None:
        res.to_csv(outdir / "fields.csv")
    return summary, {"quadrature": rep.passed}


def task_radial(sc: Scenario, outdir: Optional[Path]):
    runs = sc.raw.get("runs", [sc.raw])
    scenarios = []
    for k, r in enumerate(runs):
        try:
            scenarios.append(radial.RadialScenario(
                int(r["n"]), float(r["rho"]), float(r["t"]), float(r["R"]),
                r.get("bc", "dirichlet"), int(r.get("n_cells", 4096))))
        except KeyError as exc:
            raise ConfigError(f"{sc.path}.runs[{k}].{exc.args[0]}: required field missing") from None
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{sc.path}.runs[{k}]: {exc}") from None
    rows = radial.table_rows(scenarios, sc.params)
    checks = {}
    if "bound" in sc.checks:
        checks["bound"] = all(r["bound_ok"] in (True, "") for r in rows)
    if outdir is not None:
        radial.write_table(rows, outdir / "radial.csv")
    return {"runs": rows}, checks


def task_diagnose(sc: Scenario, outdir: Optional[Path]):
    spec = _need(sc, "manifold")
    key = sc.raw.get("resolution_key", "n_cells")
    levels = _need(sc, "levels")
    if not isinstance(levels, list) or len(levels) < 3:
        raise ConfigError(f"{sc.path}.levels: need at least three resolutions")

    def builder(level):
        m = build_manifold({**spec, key: level}, f"{sc.path}.manifold")
        return build_charge(m, _need(sc, "sigma"), f"{sc.path}.sigma")

    rep = existence_diagnostic(builder, levels, sc.params)
    summary = {"classification": rep.classification, "levels": rep.resolutions,
               "spacings": rep.spacings, "mean_u": rep.mean_u, "sup_u": rep.sup_u,
               "sink_masses": rep.sink_masses, "slope": rep.slope, "r_squared": rep.r_squared}
    checks = {}
    if "expect" in sc.raw:
        checks["classification"] = rep.classification == sc.raw["expect"]
    return summary, checks


TASK_RUNNERS = {
    "bal": task_bal, "harmonic-ball": task_harmonic_ball, "geodesic-ball": task_geodesic_ball,
    "growth": task_growth, "equilibrium": task_equilibrium, "quadrature": task_quadrature,
    "radial": task_radial, "diagnose": task_diagnose,
}


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, (np.bool_,)):
        return bool(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, tuple):
        return list(o)
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def _run_one(sc: Scenario, out: Path) -> dict:
    outdir = out / sc.name
    outdir.mkdir(parents=True, exist_ok=True)
    try:
        summary, checks = TASK_RUNNERS[sc.task](sc, outdir)
    except (ConfigError, InfeasibleError, ScenarioError, SolverError) as exc:
        return {"name": sc.name, "task": sc.task, "status": "error", "error": str(exc)}
    except ValueError as exc:
        return {"name": sc.name, "task": sc.task, "status": "error", "error": f"{sc.path}: {exc}"}
    checks = {k: bool(v) for k, v in checks.items()}
    status = "ok" if all(checks.values()) else "check_failed"
    record = {"name": sc.name, "task": sc.task, "status": status, "checks": checks,
              "summary": summary}
    with open(outdir / "summary.json", "w") as fh:
        json.dump({"version": __version__, **record}, fh, indent=2, sort_keys=True,
                  default=_json_default)
        fh.write("\n")
    return record


def run(config_path, out: Optional[str] = None, seed: Optional[int] = None,
        threads: int = 1) -> int:
    try:
        cfg = load_config(config_path)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    if not cfg.scenarios:
        return EXIT_OK
    outdir = Path(out or cfg.output or "balayage-out")
    seed = cfg.seed if seed is None else seed
    np.random.seed(seed % 2 ** 32)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(lambda s: _run_one(s, outdir), cfg.scenarios))
    else:
        records = [_run_one(s, outdir) for s in cfg.scenarios]
    with open(outdir / "summary.json", "w") as fh:
        json.dump({"version": __version__, "seed": seed, "scenarios": records}, fh, indent=2,
                  sort_keys=True, default=_json_default)
        fh.write("\n")
    code = EXIT_OK
    for r in records:
        if r["status"] == "error":
            print(f"error: {r['name']}: {r['error']}", file=sys.stderr)
            code = EXIT_ERROR
        elif r["status"] == "check_failed" and code == EXIT_OK:
            failed = [k for k, v in r["checks"].items() if not v]
            print(f"check failed: {r['name']}: {', '.join(failed)}", file=sys.stderr)
            code = EXIT_CHECK
        else:
            print(f"ok: {r['name']}")
    return code


def verify_all(module: Optional[str] = None, seed: int = 42) -> int:
    modules = {mod for mod, _ in verify.CRITERIA}
    if module is not None and module not in modules:
        print(f"error: unknown module {module!r}; choose from {sorted(modules)}", file=sys.stderr)
        return EXIT_ERROR
    results = verify.run_all(seed, module)
    passed = sum(r.passed for r in results)
    print(f"{passed}/{len(results)} criteria passed")
    return EXIT_OK if passed == len(results) else EXIT_CHECK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="balayage", description="Partial balayage on discretized manifolds.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run the scenarios in a JSON config")
    r.add_argument("config")
    r.add_argument("--out", help="output directory (overrides the config)")
    r.add_argument("--seed", type=int, help="random seed (default: config value or 42)")
    r.add_argument("--threads", type=int, default=1, help="scenarios run in parallel")
    v = sub.add_parser("verify", help="run the acceptance battery")
    v.add_argument("--filter", dest="module", help="only criteria of this module")
    v.add_argument("--seed", type=int, default=42)
    v.add_argument("--out", help="accepted for symmetry; verify writes no files")
    v.add_argument("--threads", type=int, default=1)
    return p


def main(argv: Optional[list] = None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    if args.command == "run":
        if args.seed is not None and args.seed < 0:
            print("error: --seed must be nonnegative", file=sys.stderr)
            return EXIT_ERROR
        return run(args.config, args.out, args.seed, max(1, args.threads))
    return verify_all(args.module, args.seed)


if __name__ == "__main__":
    sys.exit(main())
