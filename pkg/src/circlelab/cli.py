"""Batch experiment runner.

Every module is exposed as a subcommand with a JSON config, optional flag
overrides, and CSV/JSON outputs carrying the fully resolved config for
provenance.  Exit codes make sweeps scriptable: 0 computed a positive
verdict, 2 computed a negative one (diverged, fail_at, rational rotation
number, unreachable target), 1 means the computation itself failed.

Identical configs (seed included) produce byte-identical CSV outputs at any
worker count: cell work functions are pure, inputs are scalars, and rows are
merged in canonical order.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import sys
from pathlib import Path

from .arithmetic import ClassifyConfig, classify
from .circlemap import AnalyticCircleMap, ArnoldFamily, map_from_json
from .contfrac import ContinuedFraction
from .errors import (CircleLabError, NotBrjuno, PeriodicOrbitDetected,
                     TargetUnreachable)
from .geometry import bootstrap_schedule, geometry_report
from .kam import KamConfig, kam_iterate
from .rotation import (rotation_number_birkhoff,
                       rotation_number_closest_return, tune_parameter)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NEGATIVE = 2


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, int):
        return str(v)
    return format(float(v), ".17g")


def _write_json(path: Path, payload: dict):
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _load_target(cfg: dict) -> ContinuedFraction:
    return ContinuedFraction.from_json(cfg["target"])


def _load_map(cfg: dict) -> AnalyticCircleMap:
    return map_from_json(cfg["map"])


def _splitmix01(seed: int, idx: int) -> float:
    x = (seed * 0x9E3779B97F4A7C15 + idx * 0xBF58476D1CE4E5B9) & ((1 << 64) - 1)
    x ^= x >> 30
    x = (x * 0x94D049BB133111EB) & ((1 << 64) - 1)
    x ^= x >> 31
    return (x & ((1 << 53) - 1)) / float(1 << 53)


# ---------------------------------------------------------------------------
# config validation


_SCHEMAS = {
    "classify": {
        "target": dict,
        "classify.sigma": (float, int),
        "classify.diophantine_depth": int,
        "classify.brjuno_depth": int,
        "classify.h_m_max": int,
        "classify.h_k_max": int,
        "classify.h_b_depth": int,
        "classify.b_cap": (float, int),
    },
    "rotnum": {
        "map": dict,
        "rotnum.x0": (float, int),
        "rotnum.n": int,
        "rotnum.depth": int,
        "rotnum.n_max": int,
    },
    "tune": {
        "family": dict,
        "target": dict,
        "tune.tol": (float, int),
    },
    "kam": {
        "target": dict,
        "kam.nu0": (float, int),
        "kam.max_steps": int,
        "kam.divisor_floor": (float, int),
        "kam.threshold": (float, int),
        "kam.tune_tol": (float, int),
    },
    "geometry": {
        "geometry.n_max": int,
        "geometry.grid": int,
        "geometry.smoothness": int,
    },
    "tongue-scan": {
        "scan.a_min": (float, int),
        "scan.a_max": (float, int),
        "scan.na": int,
        "scan.b_min": (float, int),
        "scan.b_max": (float, int),
        "scan.nb": int,
        "scan.n_max": int,
        "scan.burn_in": int,
    },
    "bootstrap": {
        "bootstrap.r": (float, int),
        "bootstrap.sigma": (float, int),
        "bootstrap.gamma0": (float, int),
        "bootstrap.steps": int,
    },
}

_REQUIRED = {
    "classify": ["target"],
    "rotnum": ["map"],
    "tune": ["family", "target"],
    "kam": ["target"],
    "geometry": [],
    "tongue-scan": [],
    "bootstrap": [],
}


def _get_path(cfg: dict, dotted: str):
    cur = cfg
    for part in dotted.split("."):
        if not isinstance(cur, dict) or part not in cur:
            return None
        cur = cur[part]
    return cur


def validate_config(subcommand: str, cfg: dict) -> list[str]:
    """Aggregated schema and cross-field violations, with field paths."""
    out = []
    if subcommand not in _SCHEMAS:
        return [f"unknown subcommand {subcommand!r}"]
    for need in _REQUIRED[subcommand]:
        if _get_path(cfg, need) is None:
            out.append(f"{need}: required section missing")
    for dotted, types in _SCHEMAS[subcommand].items():
        val = _get_path(cfg, dotted)
        if val is not None and not isinstance(val, types):
            out.append(f"{dotted}: expected {types}, got {type(val).__name__}")
    fam = cfg.get("family") or (cfg.get("map", {}) or {}).get("family")
    if fam is not None:
        if fam.get("kind") != "arnold":
            out.append("family.kind: only 'arnold' is known")
        b = fam.get("b")
        if isinstance(b, (int, float)) and not abs(b) < 1.0:
            out.append("family.b: |b| >= 1 is not a diffeomorphism")
    tgt = cfg.get("target")
    if tgt is not None and isinstance(tgt, dict):
        try:
            ContinuedFraction.from_json(tgt)
        except Exception as e:
            out.append(f"target: {e}")
    if subcommand == "kam":
        kam = cfg.get("kam", {})
        try:
            kc = KamConfig(
                alpha_cf=ContinuedFraction.golden(),
                nu0=float(kam.get("nu0", 0.02)),
                max_steps=int(kam.get("max_steps", 14)),
                divisor_floor=float(kam.get("divisor_floor", 1e-8)),
                threshold=float(kam.get("threshold", 1e-11)),
                strips=tuple(kam["strips"]) if "strips" in kam else None,
                truncations=tuple(kam["truncations"])
                if "truncations" in kam else None,
            )
            out.extend(f"kam: {v}" for v in kc.violations())
        except Exception as e:
            out.append(f"kam: {e}")
    if subcommand == "tongue-scan":
        scan = cfg.get("scan", {})
        if float(scan.get("b_max", 0.95)) >= 1.0:
            out.append("scan.b_max: must stay below 1")
        if int(scan.get("na", 50)) < 1 or int(scan.get("nb", 20)) < 1:
            out.append("scan.na/nb: grid must be nonempty")
    if subcommand == "bootstrap":
        bs = cfg.get("bootstrap", {})
        r = float(bs.get("r", 5.0))
        sigma = float(bs.get("sigma", 0.0))
        if r <= 2.0 + sigma:
            out.append("bootstrap.r: window empty, needs r > 2 + sigma")
    return out


# ---------------------------------------------------------------------------
# subcommand runners


def run_classify(cfg: dict, out_dir: Path) -> int:
    c = cfg.get("classify", {})
    conf = ClassifyConfig(
        sigma=float(c.get("sigma", 0.0)),
        diophantine_depth=int(c.get("diophantine_depth", 30)),
        brjuno_depth=int(c.get("brjuno_depth", 40)),
        h_m_max=int(c.get("h_m_max", 10)),
        h_k_max=int(c.get("h_k_max", 20)),
        h_b_depth=int(c.get("h_b_depth", 40)),
        b_cap=float(c.get("b_cap", 50.0)),
    )
    verdict = classify(_load_target(cfg), conf)
    payload = {"verdict": verdict.to_json(), "config": cfg}
    _write_json(out_dir / "classify.json", payload)
    h = verdict.condition_h
    negative = verdict.brjuno.diverging or (h is not None and h.kind == "fail_at")
    return EXIT_NEGATIVE if negative else EXIT_OK


def run_rotnum(cfg: dict, out_dir: Path) -> int:
    r = cfg.get("rotnum", {})
    f = _load_map(cfg)
    x0 = float(r.get("x0", 0.0))
    code = EXIT_OK
    try:
        bk = rotation_number_birkhoff(f, x0, int(r.get("n", 1000)))
        cr = rotation_number_closest_return(
            f, x0, int(r.get("depth", 12)), int(r.get("n_max", 100000)),
            burn_in=int(r.get("burn_in", 0)))
        payload = {
            "birkhoff": {"value": bk.value, "error_bound": bk.error_bound,
                         "n": bk.n},
            "closest_return": {
                "value": cr.value, "error_bound": cr.error_bound,
                "n": cr.n, "method": cr.method,
                "quotients": list(cr.extracted_quotients or ())},
        }
    except PeriodicOrbitDetected as po:
        payload = {"rational": {"p": po.p, "q": po.q,
                                "value": (po.p / po.q) % 1.0}}
        code = EXIT_NEGATIVE
    payload["config"] = cfg
    _write_json(out_dir / "rotnum.json", payload)
    return code


def _family_from(cfg: dict) -> ArnoldFamily:
    fam = cfg["family"]
    if fam.get("kind") != "arnold":
        raise ValueError(f"unknown family kind {fam.get('kind')!r}")
    return ArnoldFamily(float(fam["b"]))


def run_tune(cfg: dict, out_dir: Path) -> int:
    t = cfg.get("tune", {})
    code = EXIT_OK
    try:
        a, est = tune_parameter(_family_from(cfg), _load_target(cfg),
                                tol=float(t.get("tol", 1e-10)))
        payload = {"a": a, "rho": est.value, "error_bound": est.error_bound,
                   "quotients": list(est.extracted_quotients or ())}
    except TargetUnreachable as e:
        payload = {"unreachable": str(e)}
        code = EXIT_NEGATIVE
    payload["config"] = cfg
    _write_json(out_dir / "tune.json", payload)
    return code


def run_kam(cfg: dict, out_dir: Path) -> int:
    k = cfg.get("kam", {})
    target = _load_target(cfg)
    if "map" in cfg:
        f = _load_map(cfg)
    else:
        a, _ = tune_parameter(_family_from(cfg), target,
                              tol=float(k.get("tune_tol", 1e-11)))
        f = _family_from(cfg).map_at(a)
    conf = KamConfig(
        alpha_cf=target,
        nu0=float(k.get("nu0", 0.02)),
        base_truncation=k.get("base_truncation"),
        truncations=tuple(k["truncations"]) if "truncations" in k else None,
        strips=tuple(k["strips"]) if "strips" in k else None,
        max_steps=int(k.get("max_steps", 14)),
        divisor_floor=float(k.get("divisor_floor", 1e-8)),
        threshold=float(k.get("threshold", 1e-11)),
    )
    res = kam_iterate(f, conf)
    (out_dir / "kam_trace.csv").write_text(res.trace.to_csv())
    resolved = {"nu0": conf.nu0, "max_steps": conf.max_steps,
                "divisor_floor": conf.divisor_floor,
                "threshold": conf.threshold,
                "base_truncation": conf.base_truncation,
                "strips": [conf.nu_at(n) for n in range(conf.max_steps + 1)]}
    _write_json(out_dir / "kam.json", {
        "verdict": res.verdict, "note": res.trace.note,
        "defect": res.trace.defect,
        "decay_exponent": res.trace.decay_exponent,
        "steps": len(res.trace.steps), "config": cfg,
        "resolved": resolved})
    return EXIT_OK if res.verdict == "linearized" else EXIT_NEGATIVE


def run_geometry(cfg: dict, out_dir: Path) -> int:
    g = cfg.get("geometry", {})
    if "map" in cfg:
        f = _load_map(cfg)
    else:
        a, _ = tune_parameter(_family_from(cfg), _load_target(cfg),
                              tol=float(g.get("tune_tol", 1e-11)))
        f = _family_from(cfg).map_at(a)
    n_max = int(g.get("n_max", 6))
    smooth = int(g.get("smoothness", 3))
    grid = int(g.get("grid", 4096))
    rep = geometry_report(f, n_max=n_max, smoothness=smooth, grid=grid)
    (out_dir / "geometry.csv").write_text(rep.to_csv())
    summary = rep.to_json_summary()
    summary["config"] = cfg
    summary["resolved"] = {"n_max": n_max, "smoothness": smooth, "grid": grid}
    _write_json(out_dir / "geometry.json", summary)
    return EXIT_OK


def _tongue_cell(args) -> tuple:
    ia, ib, a, b, n_max, burn_in, x0 = args
    f = ArnoldFamily(b).map_at(a)
    try:
        est = rotation_number_closest_return(f, x0, depth=24, n_max=n_max,
                                             burn_in=burn_in)
        return (ia, ib, a, b, est.value, False, est.error_bound)
    except PeriodicOrbitDetected as po:
        return (ia, ib, a, b, (po.p / po.q) % 1.0, True, 0.0)


def run_tongue_scan(cfg: dict, out_dir: Path, workers: int, seed: int) -> int:
    s = cfg.get("scan", {})
    na, nb = int(s.get("na", 50)), int(s.get("nb", 20))
    a0, a1 = float(s.get("a_min", 0.0)), float(s.get("a_max", 1.0))
    b0, b1 = float(s.get("b_min", 0.0)), float(s.get("b_max", 0.95))
    n_max = int(s.get("n_max", 400))
    burn_in = int(s.get("burn_in", 256))
    cells = []
    for ia in range(na):
        for ib in range(nb):
            a = a0 + (a1 - a0) * ia / max(na - 1, 1)
            b = b0 + (b1 - b0) * ib / max(nb - 1, 1)
            x0 = _splitmix01(seed, ia * nb + ib)
            cells.append((ia, ib, a, b, n_max, burn_in, x0))
    if workers > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as ex:
            rows = list(ex.map(_tongue_cell, cells,
                               chunksize=max(1, len(cells) // (4 * workers))))
    else:
        rows = [_tongue_cell(c) for c in cells]
    lines = ["ia,ib,a,b,rho,locked,err_bound"]
    for ia, ib, a, b, rho, locked, err in rows:
        lines.append(",".join([str(ia), str(ib), _fmt(a), _fmt(b), _fmt(rho),
                               _fmt(locked), _fmt(err)]))
    (out_dir / "tongues.csv").write_text("\n".join(lines) + "\n")
    _write_json(out_dir / "tongues.json",
                {"cells": len(rows), "workers": workers, "seed": seed,
                 "config": cfg})
    return EXIT_OK


def run_bootstrap(cfg: dict, out_dir: Path) -> int:
    b = cfg.get("bootstrap", {})
    sched = bootstrap_schedule(float(b.get("r", 5.0)),
                               float(b.get("sigma", 0.0)),
                               float(b.get("gamma0", 0.0)),
                               int(b.get("steps", 60)))
    lines = ["k,gamma"] + [f"{k},{_fmt(g)}" for k, g in enumerate(sched)]
    (out_dir / "bootstrap.csv").write_text("\n".join(lines) + "\n")
    _write_json(out_dir / "bootstrap.json",
                {"limit": sched[-1], "steps": len(sched) - 1, "config": cfg})
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument plumbing


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="circlelab",
        description="batch experiments on circle-diffeomorphism linearization")
    sub = p.add_subparsers(dest="cmd", required=True)

    def common(sp):
        sp.add_argument("--config", type=Path, default=None)
        sp.add_argument("--out", type=Path, default=Path("."))
        sp.add_argument("--workers", type=int, default=1)
        sp.add_argument("--seed", type=int, default=0)

    sp = sub.add_parser("classify", help="arithmetic verdict for a number")
    common(sp)
    sp.add_argument("--depth", type=int, help="diophantine depth override")
    sp.add_argument("--sigma", type=float)
    sp = sub.add_parser("rotnum", help="both rotation-number estimators")
    common(sp)
    sp.add_argument("--nmax", type=int)
    sp.add_argument("--depth", type=int)
    sp = sub.add_parser("tune", help="family parameter to a target number")
    common(sp)
    sp.add_argument("--tol", type=float)
    sp = sub.add_parser("kam", help="full linearization run: trace + verdict")
    common(sp)
    sp.add_argument("--tol", type=float, help="tuning tolerance override")
    sp.add_argument("--nu0", type=float)
    sp = sub.add_parser("geometry", help="multi-level partition report")
    common(sp)
    sp.add_argument("--nmax", type=int, help="number of partition levels")
    sp = sub.add_parser("tongue-scan", help="rho over an (a, b) grid")
    common(sp)
    sp.add_argument("--nmax", type=int)
    sp = sub.add_parser("bootstrap", help="regularity bootstrap schedule")
    common(sp)
    sp = sub.add_parser("validate", help="schema-check a config, no side effects")
    common(sp)
    sp.add_argument("subcommand", help="which schema to validate against")
    return p


def _apply_overrides(cmd: str, args, cfg: dict) -> dict:
    over = {
        "classify": [("depth", ("classify", "diophantine_depth")),
                     ("sigma", ("classify", "sigma"))],
        "rotnum": [("nmax", ("rotnum", "n_max")), ("depth", ("rotnum", "depth"))],
        "tune": [("tol", ("tune", "tol"))],
        "kam": [("tol", ("kam", "tune_tol")), ("nu0", ("kam", "nu0"))],
        "geometry": [("nmax", ("geometry", "n_max"))],
        "tongue-scan": [("nmax", ("scan", "n_max"))],
        "bootstrap": [],
        "validate": [],
    }
    for attr, (sec, key) in over.get(cmd, []):
        val = getattr(args, attr, None)
        if val is not None:
            cfg.setdefault(sec, {})[key] = val
    return cfg


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    cfg = {}
    if args.config is not None:
        try:
            cfg = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as e:
            print(f"config: {e}", file=sys.stderr)
            return EXIT_ERROR
    cfg = _apply_overrides(args.cmd, args, cfg)
    if args.cmd == "validate":
        violations = validate_config(args.subcommand, cfg)
        print(json.dumps({"violations": violations}, indent=2))
        return EXIT_OK if not violations else EXIT_ERROR
    violations = validate_config(args.cmd, cfg)
    if violations:
        for v in violations:
            print(f"config violation: {v}", file=sys.stderr)
        return EXIT_ERROR
    out_dir = args.out
    out_dir.mkdir(parents=True, exist_ok=True)
    cfg.setdefault("seed", args.seed)
    try:
        if args.cmd == "classify":
            return run_classify(cfg, out_dir)
        if args.cmd == "rotnum":
            return run_rotnum(cfg, out_dir)
        if args.cmd == "tune":
            return run_tune(cfg, out_dir)
        if args.cmd == "kam":
            return run_kam(cfg, out_dir)
        if args.cmd == "geometry":
            return run_geometry(cfg, out_dir)
        if args.cmd == "tongue-scan":
            return run_tongue_scan(cfg, out_dir, args.workers, args.seed)
        if args.cmd == "bootstrap":
            return run_bootstrap(cfg, out_dir)
    except NotBrjuno as e:
        print(f"NotBrjuno: {e}", file=sys.stderr)
        return EXIT_NEGATIVE
    except CircleLabError as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_ERROR
    except ValueError as e:
        print(f"ValueError: {e}", file=sys.stderr)
        return EXIT_ERROR
    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
