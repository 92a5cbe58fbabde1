"""Command line front end: pointwise energy evaluation, convergence scans,
and finite element sweeps, all driven by a single JSON config file.

Output is deterministic for a fixed config: floats use shortest-roundtrip
repr, JSON keys are sorted, and every artifact carries the sha256 of the
resolved config plus the artifact version, so reruns can be diffed byte for
byte.  Files are written only after the computation succeeds; a failing run
leaves nothing behind.

Exit codes: 0 pass, 1 assertion/criterion failure, 2 config error,
3 runtime error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
from importlib import resources

import numpy as np

from . import __version__
from .convergence import (
    GRID_SEED,
    CoercivitySampler,
    CompactGrid,
    EpsSchedule,
    coercivity_scan,
    dist_limit_scan,
    hull_membership,
    limit_density_batch,
    quadratic_lower_bound_fit,
    report_csv_text,
    uniform_limit_scan,
)
from .energies import NematicModel, PolynomialVol, ReferenceVol, SyntheticModel, rescaled_density
from .errors import ConfigError
from .limits import LimitParams, fqc
from .matkernel import symmetrize
from .solver import LoadSpec, SolveOptions, epsilon_sweep
from .wells import FiniteWellFamily, NematicWellFamily

ARTIFACT = f"gamma-elastica {__version__}"
THREADS_ENV = "GAMMA_ELASTICA_THREADS"

EXIT_OK = 0
EXIT_ASSERT = 1
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


# ---------------------------------------------------------------------------
# config handling


def _schema():
    text = resources.files("gamma_elastica").joinpath("config_schema.json").read_text("utf-8")
    return json.loads(text)


def _config_hash(cfg):
    canon = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def _load_config(path):
    with open(path, "r", encoding="utf-8") as fh:
        cfg = json.load(fh)
    import jsonschema

    try:
        jsonschema.validate(cfg, _schema())
    except jsonschema.ValidationError as err:
        raise ConfigError(f"config does not match schema: {err.message}") from err
    return cfg


def _apply_overrides(cfg, args):
    cfg = json.loads(json.dumps(cfg))
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.out is not None:
        cfg["out"] = args.out
    if args.threads is not None:
        cfg["threads"] = args.threads
    elif THREADS_ENV in os.environ:
        raw = os.environ[THREADS_ENV]
        try:
            threads = int(raw)
        except ValueError:
            raise ConfigError(f"{THREADS_ENV}={raw!r} is not an integer") from None
        if threads < 1:
            raise ConfigError(f"{THREADS_ENV} must be >= 1")
        cfg["threads"] = threads
    if args.eps is not None:
        if args.command == "eval" and "eval" in cfg:
            cfg["eval"]["eps"] = args.eps
        elif args.command == "scan" and "scan" in cfg:
            cfg["scan"]["schedule"] = {"values": [args.eps]}
        elif args.command == "sweep" and "sweep" in cfg:
            cfg["sweep"]["cells"] = [[args.eps, n] for _, n in cfg["sweep"]["cells"]]
    if args.mesh_n is not None and args.command == "sweep" and "sweep" in cfg:
        cfg["sweep"]["cells"] = [[e, args.mesh_n] for e, _ in cfg["sweep"]["cells"]]
    return cfg


def _section(cfg, name):
    if name not in cfg:
        raise ConfigError(f"config has no '{name}' section")
    return cfg[name]


def _cfgguard(fn, *a, **k):
    # library invariants surface as AssertionError; at the CLI boundary they
    # are configuration mistakes
    try:
        return fn(*a, **k)
    except AssertionError as err:
        raise ConfigError(str(err) or "invalid configuration value") from err


def _build_model(doc):
    if doc["kind"] == "nematic":
        vol_doc = doc.get("vol", {"kind": "reference"})
        if vol_doc["kind"] == "reference":
            vol = ReferenceVol()
        else:
            vol = PolynomialVol(tuple(vol_doc["coefficients"]), vol_doc["barrier_weight"])
        return NematicModel(mu=float(doc.get("mu", 3.0)), vol=vol)
    wells = tuple(np.asarray(W, dtype=float) for W in doc["wells"])
    family = _cfgguard(FiniteWellFamily, wells)
    return _cfgguard(
        SyntheticModel,
        family=family,
        p=float(doc.get("p", 1.5)),
        scale=float(doc.get("scale", 1.0)),
    )


def _build_params(cfg, model):
    if "limit_params" in cfg:
        lp = cfg["limit_params"]
        return LimitParams(mu=float(lp["mu"]), lam=float(lp["lam"]))
    if isinstance(model, NematicModel):
        return model.limit_params()
    return None


def _parse_matrix(doc, d, name):
    A = np.asarray(doc, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] not in (2, 3):
        raise ConfigError(f"{name} must be a 2x2 or 3x3 matrix")
    if d is not None and A.shape[0] != d:
        raise ConfigError(f"{name} must be {d}x{d} to match the model")
    return A


# ---------------------------------------------------------------------------
# serialization helpers


def _json_float(x):
    x = float(x)
    if math.isfinite(x):
        return x
    if math.isnan(x):
        return "nan"
    return "+inf" if x > 0 else "-inf"


def _sanitize(obj):
    if isinstance(obj, dict):
        return {k: _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _json_float(obj)
    return obj


def _dump_json(doc):
    return json.dumps(doc, sort_keys=True, indent=2, allow_nan=False) + "\n"


def _csv_header(cfg_hash):
    return f"# artifact: {ARTIFACT}\n# config_sha256: {cfg_hash}\n"


def _sweep_csv(report):
    lines = ["eps,value,target,error"]
    for c in report.cells:
        lines.append(",".join(repr(float(x)) for x in (c.eps, c.m_eps, c.m_rel, c.gap)))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# subcommands; each returns (exit_code, stdout_doc, {path: text})


def _fqc_value(model, params, F):
    if params is not None:
        return fqc(params, F)
    if (
        isinstance(model, SyntheticModel)
        and len(model.family.strains) == 1
        and not np.any(model.family.strains[0])
    ):
        # single zero well: the relaxed density is the convex quadratic
        E = symmetrize(F)
        return 0.5 * model.scale * float(np.sum(E * E))
    raise ConfigError("fqc needs limit_params or a nematic model")


def cmd_eval(cfg):
    section = _section(cfg, "eval")
    model = _build_model(cfg["model"])
    params = _build_params(cfg, model)
    quants = list(dict.fromkeys(section["quantities"]))
    eps = section.get("eps")
    if eps is None and any(q in ("w_eps", "v_eps") for q in quants):
        raise ConfigError("evaluating w_eps or v_eps needs 'eps' in the eval section")
    results = []
    for doc in section["matrices"]:
        F = _parse_matrix(doc, model.dim, "eval matrix")
        E = symmetrize(F)
        row = {"matrix": [[float(x) for x in r] for r in F]}
        for q in quants:
            if q == "w_eps":
                row[q] = _json_float(model.energy(F, eps))
            elif q == "v_eps":
                row[q] = _json_float(rescaled_density(model, eps, E))
            elif q in ("v", "f"):
                row[q] = _json_float(limit_density_batch(model, params, E[None])[0])
            elif q == "fqc":
                row[q] = _json_float(_fqc_value(model, params, F))
        results.append(row)
    out_doc = {
        "artifact": ARTIFACT,
        "command": "eval",
        "config_sha256": _config_hash(cfg),
        "eps": _json_float(eps) if eps is not None else None,
        "results": results,
    }
    files = {}
    if cfg.get("out"):
        files[cfg["out"] + ".json"] = _dump_json(out_doc)
    return EXIT_OK, out_doc, files


def _schedule_from(scan):
    doc = scan.get("schedule")
    if doc is None:
        return EpsSchedule.geometric()
    if "values" in doc:
        return _cfgguard(EpsSchedule, tuple(float(v) for v in doc["values"]))
    return _cfgguard(
        EpsSchedule.geometric,
        start=float(doc.get("start", 0.2)),
        ratio=float(doc.get("ratio", 0.5)),
        count=int(doc.get("count", 8)),
    )


def _grid_from(cfg, scan, d):
    g = scan.get("grid", {})
    seed = int(cfg.get("seed", g.get("seed", GRID_SEED)))
    return _cfgguard(
        CompactGrid.build,
        d=d,
        radius=float(g.get("radius", 2.0)),
        count=int(g.get("count", 224)),
        seed=seed,
    )


def _sampler_from(cfg, scan):
    doc = dict(scan.get("sampler", {}))
    if "seed" in cfg:
        doc["seed"] = cfg["seed"]
    elif "seed" not in doc:
        doc["seed"] = GRID_SEED
    return _cfgguard(CoercivitySampler, **doc)


def _family_from(name, model, d):
    if name == "model":
        if isinstance(model, NematicModel):
            return NematicWellFamily()
        return model.family
    if name == "nematic":
        if d != 3:
            raise ConfigError("the nematic family lives in 3x3 strains")
        return NematicWellFamily()
    if name == "single-well":
        return FiniteWellFamily.single_well(d)
    raise ConfigError(f"unknown well family '{name}'")


def cmd_scan(cfg):
    scan = _section(cfg, "scan")
    model = _build_model(cfg["model"])
    params = _build_params(cfg, model)
    op = scan["op"]
    sched = _schedule_from(scan)
    cfg_hash = _config_hash(cfg)
    out = cfg.get("out")
    files = {}

    if op == "quadratic-bound":
        if params is None:
            raise ConfigError("quadratic-bound needs limit_params or a nematic model")
        grid = _grid_from(cfg, scan, 3)
        c1, c2 = quadratic_lower_bound_fit(
            params,
            grid,
            verify_radius=scan.get("verify_radius"),
            margin=float(scan.get("margin", 0.9)),
        )
        doc = {
            "artifact": ARTIFACT,
            "command": "scan",
            "config_sha256": cfg_hash,
            "op": op,
            "c1": _json_float(c1),
            "c2": _json_float(c2),
            "grid_radius": grid.radius,
            "grid_size": len(grid),
        }
        if out:
            files[out + ".json"] = _dump_json(doc)
        return EXIT_OK, doc, files

    if op == "hull":
        if params is None:
            raise ConfigError("hull membership needs limit_params or a nematic model")
        if "strain" not in scan:
            raise ConfigError("hull scan needs 'strain'")
        E = symmetrize(_parse_matrix(scan["strain"], 3, "strain"))
        flags = hull_membership(params, E, tol=float(scan.get("tol", 1e-10)))
        doc = {
            "artifact": ARTIFACT,
            "command": "scan",
            "config_sha256": cfg_hash,
            "op": op,
            "strain": [[float(x) for x in r] for r in E],
            **flags,
        }
        if out:
            files[out + ".json"] = _dump_json(doc)
        return EXIT_OK, doc, files

    if op == "uniform-limit":
        grid = _grid_from(cfg, scan, model.dim)
        report = uniform_limit_scan(model, params, grid, sched, rate_min=float(scan.get("rate_min", 0.9)))
    elif op == "dist-limit":
        if "strain" not in scan:
            raise ConfigError("dist-limit scan needs 'strain'")
        E = _parse_matrix(scan["strain"], None, "strain")
        family = _family_from(scan.get("family", "model"), model, E.shape[0])
        report = dist_limit_scan(E, family, sched, tol=float(scan.get("tol", 1e-2)))
    elif op == "coercivity":
        sampler = _sampler_from(cfg, scan)
        report = coercivity_scan(model, sampler, sched, floor=float(scan.get("floor", 0.0)))
    else:
        raise ConfigError(f"unknown scan op '{op}'")

    doc = {
        "artifact": ARTIFACT,
        "command": "scan",
        "config_sha256": cfg_hash,
        "op": op,
        "report": _sanitize(report.to_json()),
    }
    if out:
        files[out + ".json"] = _dump_json(doc)
        files[out + ".csv"] = _csv_header(cfg_hash) + report_csv_text(report)
    return (EXIT_OK if report.passed else EXIT_ASSERT), doc, files


def cmd_sweep(cfg):
    sw = _section(cfg, "sweep")
    model = _build_model(cfg["model"])
    data = _parse_matrix(sw["data"], model.dim, "sweep data")
    cells = [(float(e), int(n)) for e, n in sw["cells"]]
    load = sw.get("load")
    if load is not None:
        vec = np.asarray(load, dtype=float)
        if vec.shape != (model.dim,):
            raise ConfigError(f"load must have {model.dim} components")
        load = LoadSpec(value=vec)
    solve = dict(sw.get("solve", {}))
    opts = _cfgguard(
        SolveOptions,
        threads=int(cfg.get("threads", 1)),
        seed=int(cfg.get("seed", 0)),
        **solve,
    )
    relaxed_only = bool(sw.get("relaxed_only", False))
    report = epsilon_sweep(model, cells, data, load=load, opts=opts, relaxed_only=relaxed_only)
    cfg_hash = _config_hash(cfg)
    doc = {
        "artifact": ARTIFACT,
        "command": "sweep",
        "config_sha256": cfg_hash,
        "relaxed_only": relaxed_only,
        "report": _sanitize(report.to_json()),
    }
    files = {}
    if cfg.get("out"):
        files[cfg["out"] + ".json"] = _dump_json(doc)
        files[cfg["out"] + ".csv"] = _csv_header(cfg_hash) + _sweep_csv(report)
    # per-cell failures are recorded in the report; only the gap
    # assertions decide the exit code
    ok = True
    if sw.get("require_gap_decrease", False):
        ok = ok and report.gap_decreasing
    if "final_gap_max" in sw and not relaxed_only:
        final = report.cells[-1].gap
        ok = ok and math.isfinite(final) and final <= float(sw["final_gap_max"])
    return (EXIT_OK if ok else EXIT_ASSERT), doc, files


_WORKERS = {"eval": cmd_eval, "scan": cmd_scan, "sweep": cmd_sweep}


# ---------------------------------------------------------------------------
# driver


def _planned_files(cfg, command):
    out = cfg.get("out")
    if not out:
        return []
    if command == "eval":
        return [out + ".json"]
    if command == "scan":
        op = cfg.get("scan", {}).get("op")
        if op in ("quadratic-bound", "hull"):
            return [out + ".json"]
    return [out + ".csv", out + ".json"]


def _dry_run_doc(cfg, command):
    _section(cfg, command)
    _build_model(cfg["model"])
    return {
        "artifact": ARTIFACT,
        "command": command,
        "config_sha256": _config_hash(cfg),
        "dry_run": True,
        "would_write": sorted(_planned_files(cfg, command)),
    }


def _write_file(path, text):
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def _parse_args(argv):
    parser = argparse.ArgumentParser(
        prog="gamma-elastica",
        description="multiwell elasticity energies, their small-strain limits, and finite element sweeps",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "eval": "pointwise values of W_eps, V_eps, V, f, fqc at given matrices",
        "scan": "convergence, coercivity, quadratic-bound, and hull scans",
        "sweep": "finite element minimization across an (eps, mesh) schedule",
    }
    for name in ("eval", "scan", "sweep"):
        p = sub.add_parser(name, help=helps[name])
        p.add_argument("--config", required=True, help="path to the JSON run config")
        p.add_argument("--eps", type=float, help="override: eval eps / single-eps schedule / all sweep cells")
        p.add_argument("--mesh-n", type=int, dest="mesh_n", help="override: mesh subdivisions for all sweep cells")
        p.add_argument("--seed", type=int, help="override: seed for grids, samplers, and solver starts")
        p.add_argument("--out", help="override: output path prefix (writes PREFIX.json and PREFIX.csv)")
        p.add_argument("--threads", type=int, help="override: solver start-level parallelism")
        p.add_argument("--dry-run", action="store_true", dest="dry_run", help="validate and print the plan; write nothing")
    return parser.parse_args(argv)


def main(argv=None):
    args = _parse_args(argv)
    try:
        cfg = _load_config(args.config)
        cfg = _apply_overrides(cfg, args)
        if args.dry_run:
            sys.stdout.write(_dump_json(_dry_run_doc(cfg, args.command)))
            return EXIT_OK
        code, doc, files = _WORKERS[args.command](cfg)
        text = _dump_json(doc)
        for path in sorted(files):
            _write_file(path, files[path])
        sys.stdout.write(text)
        return code
    except json.JSONDecodeError as err:
        print(f"error: config is not valid JSON: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConfigError, FileNotFoundError, IsADirectoryError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except AssertionError as err:
        print(f"assertion failed: {err}", file=sys.stderr)
        return EXIT_ASSERT
    except Exception as err:
        print(f"runtime error: {type(err).__name__}: {err}", file=sys.stderr)
        return EXIT_RUNTIME


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
