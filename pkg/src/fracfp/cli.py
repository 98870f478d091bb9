"""Command-line front end: ``fracfp run <config>`` and ``fracfp catalog``."""

from __future__ import annotations

import argparse
import copy
import csv
import hashlib
import json
import math
import re
import sys
import time
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import analysis
from .catalog import lookup, list_catalog
from .fem1d import CoefficientField, ConfigurationError, FeSpace, Mesh1D
from .timestep import (
    SchemeConfig,
    SolverError,
    TimePartition,
    default_grading,
    dg_solve_diffusion,
    jump_and_boundary_accounting,
)

KINDS = ("solve", "stability-sweep", "gradient-sweep", "energy-check", "convergence", "lemma-suite")

COMMON = {
    "mesh": {"x_left": 0.0, "x_right": 1.0, "M": 63},
    "time": {"T": 1.0, "N": 64, "gamma": "auto", "degree": 1},
    "data": {"kappa": "kappa:one", "F": "F:zero", "g": "g:zero", "u0": "u0:sin1", "init": "l2"},
    "output": {"dir": "fracfp-out"},
}

KIND_DEFAULTS = {
    "solve": {"alpha": 0.5},
    "stability-sweep": {"alpha_grid": None, "max_spread": 3.0, "cases": None, "jobs": 1},
    "gradient-sweep": {"alpha_grid": None, "max_spread": 3.0, "cases": None, "t_eval": None, "jobs": 1},
    "energy-check": {"alpha_grid": None, "steps": None, "degrees": None, "sources": None},
    "convergence": {"alpha_grid": None, "meshes": [15, 31, 63, 127], "t_eval": None},
    "lemma-suite": {"seed": 0, "trials": 100},
}

CASE_KEYS = {"name", "u0", "g"}


class ConfigError(ValueError):
    """Invalid experiment configuration; ``line`` points into the source file."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message)
        self.line = line


def _line_of(text: str, key: str) -> int | None:
    pat = re.compile(rf"^\s*(\[+\s*{re.escape(key)}\s*\]+|{re.escape(key)}\s*=)")
    for i, line in enumerate(text.splitlines(), 1):
        if pat.match(line):
            return i
    return None


def load_config(path: Path) -> tuple[dict, str]:
    text = path.read_text()
    if path.suffix == ".json":
        try:
            return json.loads(text), text
        except json.JSONDecodeError as exc:
            raise ConfigError(f"JSON parse error: {exc.msg}", exc.lineno) from exc
    try:
        return tomllib.loads(text), text
    except tomllib.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        raise ConfigError(f"TOML parse error: {exc}", int(m.group(1)) if m else None) from exc


def normalise(raw: dict, text: str = "") -> dict:
    """Fill defaults and reject unknown keys; ``validate`` checks values."""
    raw = copy.deepcopy(raw)
    kind = raw.pop("kind", None)
    if kind not in KINDS:
        raise ConfigError(f"'kind' must be one of {', '.join(KINDS)}; got {kind!r}", _line_of(text, "kind"))
    cfg = {"kind": kind}
    for section, defaults in list(COMMON.items()) + [(kind, KIND_DEFAULTS[kind])]:
        given = raw.pop(section, {})
        if not isinstance(given, dict):
            raise ConfigError(f"[{section}] must be a table", _line_of(text, section))
        unknown = set(given) - set(defaults)
        if unknown:
            key = sorted(unknown)[0]
            raise ConfigError(f"unknown key {key!r} in [{section}]", _line_of(text, key))
        merged = dict(defaults)
        merged.update(given)
        cfg[section] = merged
    if raw:
        key = sorted(raw)[0]
        raise ConfigError(f"unknown key or section {key!r}", _line_of(text, key))
    return cfg


def validate(cfg: dict, text: str = "") -> None:
    kind = cfg["kind"]
    p = cfg[kind]

    def fail(msg, key):
        raise ConfigError(msg, _line_of(text, key))

    mesh, tm, data = cfg["mesh"], cfg["time"], cfg["data"]
    if not mesh["x_right"] > mesh["x_left"]:
        fail("x_right must exceed x_left", "x_right")
    if not (isinstance(mesh["M"], int) and mesh["M"] >= 1):
        fail("M must be a positive integer", "M")
    if not (isinstance(tm["N"], int) and tm["N"] >= 1):
        fail("N must be a positive integer", "N")
    if not tm["T"] > 0:
        fail("T must be positive", "T")
    if tm["degree"] not in (0, 1):
        fail("degree must be 0 or 1", "degree")
    if tm["gamma"] != "auto" and not (isinstance(tm["gamma"], (int, float)) and tm["gamma"] >= 1):
        fail("gamma must be 'auto' or a number >= 1", "gamma")
    if data["init"] not in ("l2", "ritz", "nodal"):
        fail("init must be l2, ritz or nodal", "init")
    for key, kd in (("kappa", "kappa"), ("F", "F"), ("g", "g"), ("u0", "u0")):
        val = data[key]
        if isinstance(val, (int, float)) and key in ("kappa", "F"):
            if key == "kappa" and val <= 0:
                fail("kappa must be positive", "kappa")
            continue
        try:
            lookup(str(val), kd)
        except KeyError as exc:
            fail(str(exc.args[0]), key)
    if "alpha" in p and not 0 < p["alpha"] <= 1:
        fail("alpha must lie in (0, 1]", "alpha")
    if "alpha_grid" in p:
        grid = p["alpha_grid"]
        if not grid:
            fail("alpha_grid must be a non-empty list", "alpha_grid")
        if any(not (isinstance(a, (int, float)) and 0 < a <= 1) for a in grid):
            fail("alpha_grid entries must lie in (0, 1]", "alpha_grid")
    if kind == "convergence":
        ms = p["meshes"]
        if not ms or any(not isinstance(m, int) or m < 1 for m in ms) or sorted(set(ms)) != list(ms):
            fail("meshes must be increasing positive integers", "meshes")
        const_kappa = isinstance(data["kappa"], (int, float)) or lookup(data["kappa"], "kappa").constant is not None
        if not lookup(data["u0"], "u0").modes or not const_kappa:
            fail("convergence needs a sine initial datum and constant kappa", "u0")
        if data["F"] not in ("F:zero", 0, 0.0):
            fail("convergence needs F = 0", "F")
    if kind == "energy-check" and data["F"] not in ("F:zero", 0, 0.0):
        fail("energy-check needs F = 0", "F")
    if kind in ("stability-sweep", "gradient-sweep") and p["cases"] is not None:
        if not isinstance(p["cases"], list) or not p["cases"]:
            fail("cases must be a non-empty array of tables", "cases")
        for case in p["cases"]:
            if not isinstance(case, dict) or set(case) - CASE_KEYS or "name" not in case:
                fail("each case needs 'name' and optional 'u0', 'g'", "cases")
            for key in ("u0", "g"):
                if key in case:
                    try:
                        lookup(case[key], key)
                    except KeyError as exc:
                        fail(str(exc.args[0]), key)
    if kind == "lemma-suite" and not (isinstance(p["trials"], int) and p["trials"] >= 1):
        fail("trials must be a positive integer", "trials")


def apply_overrides(cfg: dict, alpha_grid: str | None, seed: int | None, jobs: int | None) -> dict:
    cfg = copy.deepcopy(cfg)
    p = cfg[cfg["kind"]]
    if alpha_grid is not None:
        try:
            grid = [float(a) for a in alpha_grid.split(",") if a.strip()]
        except ValueError as exc:
            raise ConfigError(f"--alpha-grid: {exc}") from exc
        if not grid:
            raise ConfigError("--alpha-grid is empty")
        if "alpha_grid" in p:
            p["alpha_grid"] = grid
        elif "alpha" in p:
            if len(grid) != 1:
                raise ConfigError("solve takes a single alpha")
            p["alpha"] = grid[0]
        else:
            raise ConfigError(f"{cfg['kind']} has no alpha parameter")
    if seed is not None:
        if "seed" not in p:
            raise ConfigError(f"{cfg['kind']} takes no seed")
        p["seed"] = seed
    if jobs is not None:
        if "jobs" not in p:
            raise ConfigError(f"{cfg['kind']} runs sequentially")
        p["jobs"] = jobs
    return cfg


def config_hash(cfg: dict) -> str:
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


# building numerical objects


def _build_fields(cfg: dict) -> CoefficientField:
    data, mesh = cfg["data"], cfg["mesh"]
    dom = (mesh["x_left"], mesh["x_right"])
    if isinstance(data["kappa"], (int, float)):
        kv = float(data["kappa"])
        kappa = lambda x: np.full(np.shape(x), kv)  # noqa: E731
    else:
        kappa = lookup(data["kappa"], "kappa").build(dom)[0]
    if isinstance(data["F"], (int, float)):
        fv = float(data["F"])
        F = lambda x, t=0.0: np.full(np.shape(x), fv)  # noqa: E731
        dF = lambda x, t=0.0: np.zeros(np.shape(x))  # noqa: E731
    else:
        F, dF = lookup(data["F"], "F").build(dom)
    g = lookup(data["g"], "g").build(dom)[0]
    return CoefficientField(kappa=kappa, F=F, dF=dF, g=g, domain=dom, final_time=cfg["time"]["T"])


def _gamma(cfg: dict, alpha: float) -> float:
    gm = cfg["time"]["gamma"]
    return default_grading(alpha) if gm == "auto" else float(gm)


def _base_config(cfg: dict, alpha: float, N: int | None = None, degree: int | None = None) -> SchemeConfig:
    mesh, tm, data = cfg["mesh"], cfg["time"], cfg["data"]
    dom = (mesh["x_left"], mesh["x_right"])
    space = FeSpace(Mesh1D.uniform(dom[0], dom[1], mesh["M"]))
    u0, du0 = lookup(data["u0"], "u0").build(dom)
    part = TimePartition(tm["T"], N or tm["N"], _gamma(cfg, alpha))
    deg = tm["degree"] if degree is None else degree
    return SchemeConfig(alpha, part, space, _build_fields(cfg), u0, degree=deg, init=data["init"], u0_prime=du0)


def _cases(cfg: dict, p: dict) -> list[analysis.DataCase]:
    dom = (cfg["mesh"]["x_left"], cfg["mesh"]["x_right"])
    specs = p["cases"] or [{"name": "default", "u0": cfg["data"]["u0"], "g": cfg["data"]["g"]}]
    out = []
    for c in specs:
        u0 = lookup(c.get("u0", "u0:zero"), "u0").build(dom)[0]
        g = lookup(c.get("g", "g:zero"), "g").build(dom)[0]
        out.append(analysis.DataCase(c["name"], u0, g))
    return out


def _assert(results: list, name: str, passed: bool, detail) -> None:
    results.append({"name": name, "passed": bool(passed), "detail": detail})


def _clean(obj):
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, (np.floating,)):
        return _clean(float(obj))
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def _run_solve(cfg, p, tables, results, timings):
    base = _base_config(cfg, p["alpha"])
    t0 = time.perf_counter()
    U = analysis.stability.solve(base, base.fields.g)
    timings["solve"] = time.perf_counter() - t0
    acct = jump_and_boundary_accounting(U)
    t = U.breakpoints
    tables["levels"] = [
        {"n": n, "t": float(t[n]), "norm_minus": acct["end_values"][n], "jump": acct["jumps"][n - 1] if n >= 1 else 0.0}
        for n in range(U.N + 1)
    ]
    _assert(results, "finite", all(math.isfinite(r["norm_minus"]) for r in tables["levels"]), None)
    if base.fields.F_is_zero and cfg["data"]["g"] == "g:zero":
        u0n = acct["end_values"][0]
        ok = all(v <= u0n * (1 + 1e-8) for v in acct["end_values"])
        _assert(results, "norm_decay", ok, {"max_norm": max(acct["end_values"]), "initial_norm": u0n})


def _sweep_assertions(report, cfg, results, kind):
    p = cfg[kind]
    for f in report.failures():
        _assert(results, f"solve[{f.case}, alpha={f.alpha}]", False, f.error)
    for case in report.cases:
        ratios = report.ratios(case)
        finite = [v for v in ratios.values() if math.isfinite(v)]
        if not finite:
            _assert(results, f"{case}: zero data sentinel", True, "all norms zero")
            continue
        spread = report.spread(case)
        _assert(results, f"{case}: max/min ratio <= {p['max_spread']}", spread <= p["max_spread"], {"spread": spread})
        if 0.99 in ratios and 0.5 in ratios:
            _assert(
                results,
                f"{case}: ratio(0.99) <= 2 ratio(0.5)",
                ratios[0.99] <= 2 * ratios[0.5],
                {"ratio_0.99": ratios[0.99], "ratio_0.5": ratios[0.5]},
            )
        if kind == "stability-sweep" and cfg["data"]["F"] in ("F:zero", 0, 0.0):
            zero_g = [c for c in (p["cases"] or [{"g": cfg["data"]["g"], "name": "default"}]) if c["name"] == case and c.get("g", "g:zero") == "g:zero"]
            if zero_g:
                _assert(results, f"{case}: contraction", max(finite) <= 1 + 1e-8, {"max_ratio": max(finite)})


def _run_sweep(cfg, p, tables, results, timings, kind):
    alphas = p["alpha_grid"]
    base = _base_config(cfg, alphas[0])
    grading = "auto" if cfg["time"]["gamma"] == "auto" else float(cfg["time"]["gamma"])
    cases = _cases(cfg, p)
    if kind == "stability-sweep":
        rep = analysis.stability_sweep(base, alphas, cases, grading=grading, jobs=p["jobs"])
    else:
        rep = analysis.gradient_sweep(base, alphas, cases, t_eval=p["t_eval"], grading=grading, jobs=p["jobs"])
    rows = rep.rows()
    for r in rows:
        timings[f"{r['case']}@{r['alpha']}"] = r.pop("seconds")
    tables[kind.replace("-", "_")] = rows
    _sweep_assertions(rep, cfg, results, kind)


def _run_energy(cfg, p, tables, results, timings):
    dom = (cfg["mesh"]["x_left"], cfg["mesh"]["x_right"])
    steps = p["steps"] or [cfg["time"]["N"]]
    degrees = p["degrees"] or [cfg["time"]["degree"]]
    sources = p["sources"] or [cfg["data"]["g"]]
    rows = []
    for src in sources:
        g = lookup(src, "g").build(dom)[0]
        for alpha in p["alpha_grid"]:
            for N in steps:
                for deg in degrees:
                    t0 = time.perf_counter()
                    base = _base_config(cfg, alpha, N=N, degree=deg)
                    U = dg_solve_diffusion(base, g)
                    led = analysis.energy_check(U, base, g)
                    tag = f"{src}|alpha={alpha}|N={N}|p={deg}"
                    timings[tag] = time.perf_counter() - t0
                    rows.append(
                        {
                            "source": src,
                            "alpha": alpha,
                            "N": N,
                            "degree": deg,
                            "worst_rel_slack": led.worst_slack / led.scale,
                            "min_memory": float(led.memory.min()),
                            "memory_discrepancy": led.memory_discrepancy,
                        }
                    )
                    _assert(results, f"energy[{tag}]", led.passed, {"worst_rel_slack": led.worst_slack / led.scale})
                    if src == "g:zero":
                        _assert(results, f"norm_decay[{tag}]", analysis.norm_decay_holds(led), None)
    tables["energy"] = rows


def _run_convergence(cfg, p, tables, results, timings):
    dom = (cfg["mesh"]["x_left"], cfg["mesh"]["x_right"])
    entry = lookup(cfg["data"]["u0"], "u0")
    kappa = cfg["data"]["kappa"]
    kval = float(kappa) if isinstance(kappa, (int, float)) else lookup(kappa, "kappa").constant
    rows, slopes = [], []
    for alpha in p["alpha_grid"]:
        t0 = time.perf_counter()
        part = TimePartition(cfg["time"]["T"], cfg["time"]["N"], _gamma(cfg, alpha))
        tab = analysis.convergence_study(
            alpha,
            p["meshes"],
            part,
            t_eval=p["t_eval"],
            kappa=kval,
            modes=entry.modes,
            domain=dom,
            init=cfg["data"]["init"],
            degree=cfg["time"]["degree"],
        )
        timings[f"alpha={alpha}"] = time.perf_counter() - t0
        rows += tab.rows()
        s, c = tab.slopes, tab.coarse_slopes
        slopes.append(
            {
                "alpha": alpha,
                "slope_l2": s["l2"] if s else None,
                "slope_h1": s["h1"] if s else None,
                "coarse_slope_l2": c["l2"] if c else None,
                "coarse_slope_h1": c["h1"] if c else None,
                "temporal_flag": tab.temporal_flag,
                "passed": tab.passed,
            }
        )
        _assert(results, f"rates[alpha={alpha}]", tab.passed, slopes[-1])
    tables["errors"] = rows
    tables["slopes"] = slopes


def _run_lemmas(cfg, p, tables, results, timings):
    t0 = time.perf_counter()
    rep = analysis.lemma_property_suite(p["seed"], p["trials"])
    ids = analysis.identity_checks(p["seed"], p["trials"])
    timings["lemma-suite"] = time.perf_counter() - t0
    rows = rep.rows() + [
        {"check": c.name, "kind": c.kind, "trials": c.trials, "worst": c.worst, "tolerance": c.tolerance, "passed": c.passed}
        for c in ids
    ]
    tables["lemmas"] = rows
    for r in rows:
        _assert(results, r["check"], r["passed"], {"worst": r["worst"]})


RUNNERS = {
    "solve": _run_solve,
    "stability-sweep": lambda *a: _run_sweep(*a, kind="stability-sweep"),
    "gradient-sweep": lambda *a: _run_sweep(*a, kind="gradient-sweep"),
    "energy-check": _run_energy,
    "convergence": _run_convergence,
    "lemma-suite": _run_lemmas,
}


def execute(cfg: dict) -> tuple[dict, dict]:
    """Run a normalised config; returns the report and wall-clock timings."""
    kind = cfg["kind"]
    tables: dict[str, list] = {}
    results: list[dict] = []
    timings: dict[str, float] = {}
    RUNNERS[kind](cfg, cfg[kind], tables, results, timings)
    h = config_hash(cfg)
    for rows in tables.values():
        for r in rows:
            r["config_hash"] = h
    report = {
        "kind": kind,
        "config": cfg,
        "config_hash": h,
        "assertions": results,
        "passed": all(r["passed"] for r in results),
        "tables": tables,
    }
    return _clean(report), timings


def write_outputs(report: dict, timings: dict, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    (out / "config.json").write_text(json.dumps(report["config"], indent=2, sort_keys=True) + "\n")
    (out / "timing.json").write_text(json.dumps(timings, indent=2, sort_keys=True) + "\n")
    for name, rows in report["tables"].items():
        if not rows:
            continue
        cols = ["config_hash"] + [k for k in rows[0] if k != "config_hash"]
        with open(out / f"{name}.csv", "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=cols, extrasaction="ignore", lineterminator="\n")
            w.writeheader()
            for r in rows:
                w.writerow({k: ("" if r.get(k) is None else r.get(k)) for k in cols})


def cmd_run(args) -> int:
    path = Path(args.config)
    try:
        raw, text = load_config(path)
        cfg = normalise(raw, text)
        cfg = apply_overrides(cfg, args.alpha_grid, args.seed, args.jobs)
        validate(cfg, text)
    except FileNotFoundError:
        print(f"error: {path}: no such file", file=sys.stderr)
        return 2
    except ConfigError as exc:
        loc = f"{path}:{exc.line}" if exc.line else str(path)
        print(f"error: {loc}: {exc}", file=sys.stderr)
        return 2
    out = Path(args.out or cfg["output"]["dir"])
    try:
        report, timings = execute(cfg)
    except (SolverError, ConfigurationError) as exc:
        print(f"error: {cfg['kind']} failed: {exc}", file=sys.stderr)
        return 1
    write_outputs(report, timings, out)
    for r in report["assertions"]:
        print(f"{'PASS' if r['passed'] else 'FAIL'}  {r['name']}")
    print(f"report: {out / 'report.json'}")
    return 0 if report["passed"] else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="fracfp", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run an experiment config")
    run.add_argument("config")
    run.add_argument("--out", help="output directory (overrides [output] dir)")
    run.add_argument("--alpha-grid", help="comma-separated alpha values")
    run.add_argument("--seed", type=int)
    run.add_argument("--jobs", type=int)
    sub.add_parser("catalog", help="list built-in expressions")
    args = parser.parse_args(argv)
    if args.command == "catalog":
        print(list_catalog())
        return 0
    return cmd_run(args)


if __name__ == "__main__":
    sys.exit(main())
