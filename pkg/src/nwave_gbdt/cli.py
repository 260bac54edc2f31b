"""Command-line front end: ``solve``, ``verify`` and ``demo``.

Every run is deterministic: no timestamps, no randomness, floats written
with their shortest round-trip representation.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import replace
from importlib import resources
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from .bispectral import bispectral_operator, bispectral_residual
from .config import RunConfig
from .engine import check_inputs, dirac_view, identity_residual, propagate
from .errors import (ConfigError, GBDTError, NotRealReducible,
                     SpectrumNotSingleton, UnknownDemo)
from .linalg import herm
from .rational import singleton_eigenvalue
from .threewave import frame_for, real_fields, real_reduction_check, three_wave_residual
from .verification import (ResidualReport, conservation_residual,
                           darboux_ode_residual, j_unitarity,
                           mixed_partial_residual, nwave_residual,
                           patched_potential, potential_grid, refine,
                           zero_curvature_residual)

DEMOS = ("rational2x2", "sech_soliton", "threewave_real", "bispectral_n2")


# -- small helpers ----------------------------------------------------------

def _num(v: float) -> str:
    v = float(v)
    return "0.0" if v == 0 else repr(v)


def _jsonable(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.floating, np.integer)):
        return _jsonable(v.item())
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(_jsonable(obj), indent=2, allow_nan=False) + "\n", encoding="utf-8")


def _write_matrix_csv(path: Path, xs, ts, grid, label: str) -> None:
    """One row per ``(x, t)`` node, entries row-major as ``Re_``/``Im_`` pairs."""
    r, c = grid.shape[-2:]
    names = ["x", "t"]
    for i in range(r):
        for j in range(c):
            names += [f"Re_{label}_{i + 1}_{j + 1}", f"Im_{label}_{i + 1}_{j + 1}"]
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for a, x in enumerate(xs):
            for b, t in enumerate(ts):
                if np.isnan(grid[a, b]).any():
                    continue  # pole: listed in run.json instead
                row = [_num(x), _num(t)]
                for e in grid[a, b].reshape(-1):
                    row += [_num(e.real), _num(e.imag)]
                w.writerow(row)


def _three_wave_eligible(cfg: RunConfig) -> bool:
    d = cfg.d
    return cfg.m == 3 and all(v == 1.0 for v in cfg.b) and d[0] > d[1] > d[2]


def _poles(xs, ts, S, singular) -> List[dict]:
    """Singular nodes and sign changes of the (real) ``det S`` between neighbours."""
    out = [{"kind": "singular_node", "x": float(xs[i]), "t": float(ts[j])}
           for i, j in zip(*np.nonzero(singular))]
    det = np.linalg.det(S).real if S.shape[-1] else np.ones(S.shape[:2])
    for i in range(len(xs) - 1):
        for j in range(len(ts)):
            a, b = det[i, j], det[i + 1, j]
            if a * b < 0:
                x = xs[i] + (xs[i + 1] - xs[i]) * a / (a - b)
                out.append({"kind": "det_sign_change_x", "x": float(x), "t": float(ts[j])})
    for i in range(len(xs)):
        for j in range(len(ts) - 1):
            a, b = det[i, j], det[i, j + 1]
            if a * b < 0:
                t = ts[j] + (ts[j + 1] - ts[j]) * a / (a - b)
                out.append({"kind": "det_sign_change_t", "x": float(xs[i]), "t": float(t)})
    return out


def _identity_drift_grid(cfg, params, spec, Pi, S):
    res = np.linalg.norm(identity_residual(params.A, Pi, S, spec.B), axis=(-2, -1))
    scale = np.maximum(1.0, np.linalg.norm(params.A) * np.linalg.norm(S, axis=(-2, -1)))
    return res / scale


# -- solve ------------------------------------------------------------------

def run_solve(cfg: RunConfig, out_dir) -> Dict[str, str]:
    """Compute the transformed potential on the configured grid and write outputs.

    Returns a mapping from artefact kind to file path.
    """
    spec, params = cfg.seed_spec(), cfg.gbdt_params()
    check_inputs(params, spec)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    xs, ts = cfg.grid.xs, cfg.grid.ts
    rho, singular, Pi, S = potential_grid(params, spec, xs, ts, method=cfg.method, h=cfg.h,
                                          allow_negative=cfg.allow_negative_domain)
    written = {}
    csv_on = "csv" in cfg.formats
    if csv_on:
        p = out / "rho_tilde.csv"
        _write_matrix_csv(p, xs, ts, rho, "rho")
        written["rho_tilde"] = str(p)

    info = {"three_wave": None, "dirac": None}
    if _three_wave_eligible(cfg):
        frame = frame_for(spec, rho)
        cols = [np.moveaxis(frame.phi, 0, -1)[..., None, :]]
        real_ok = not real_reduction_check(params, spec)
        if real_ok:
            try:
                cols.append(real_fields(frame, cfg.tol["real_fields"]).transpose(1, 2, 0)[..., None, :]
                            .astype(np.complex128))
            except NotRealReducible:
                real_ok = False
        info["three_wave"] = {"psi": list(frame.psi), "eps": frame.eps, "real_reducible": real_ok}
        if csv_on:
            p = out / "fields_3wave.csv"
            _write_fields_csv(p, xs, ts, cols)
            written["fields_3wave"] = str(p)
    if cfg.dirac_m1 is not None:
        v = dirac_view(rho, cfg.dirac_m1, kind=cfg.dirac_kind, spec=spec)
        info["dirac"] = {"m1": cfg.dirac_m1, "kind": cfg.dirac_kind}
        if csv_on:
            p = out / "dirac_view.csv"
            _write_matrix_csv(p, xs, ts, v, "v")
            written["dirac_view"] = str(p)

    drift = _identity_drift_grid(cfg, params, spec, Pi, S)
    record = {
        "config": cfg.to_dict(),
        "grid_shape": [len(xs), len(ts)],
        "identity_drift": {"max": float(np.max(drift)), "mean": float(np.mean(drift))},
        "poles": _poles(xs, ts, S, singular),
        "singular_nodes": int(np.count_nonzero(singular)),
        **info,
        "files": sorted(Path(v).name for v in written.values()),
    }
    if "json" in cfg.formats:
        p = out / "run.json"
        _write_json(p, record)
        written["run"] = str(p)
    return written


def _write_fields_csv(path: Path, xs, ts, cols) -> None:
    phi = cols[0]
    names = ["x", "t"]
    for k in range(3):
        names += [f"Re_phi_{k + 1}", f"Im_phi_{k + 1}"]
    if len(cols) > 1:
        names += [f"phi_real_{k + 1}" for k in range(3)]
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for a, x in enumerate(xs):
            for b, t in enumerate(ts):
                if np.isnan(phi[a, b]).any():
                    continue
                row = [_num(x), _num(t)]
                for e in phi[a, b, 0]:
                    row += [_num(e.real), _num(e.imag)]
                if len(cols) > 1:
                    row += [_num(e.real) for e in cols[1][a, b, 0]]
                w.writerow(row)


# -- verify -----------------------------------------------------------------

def _probe_centres(cfg: RunConfig, extent: float):
    g = cfg.grid
    ext = min(extent, g.x1 - g.x0, g.t1 - g.t0)
    xm, tm = 0.5 * (g.x0 + g.x1 - ext), 0.5 * (g.t0 + g.t1 - ext)
    centres = [(g.x0, g.t0), (xm, tm), (g.x1 - ext, g.t1 - ext)]
    return list(dict.fromkeys(centres)), ext


def _sample_nodes(cfg: RunConfig, k: int = 5):
    xs, ts = cfg.grid.xs, cfg.grid.ts
    ix = np.unique(np.linspace(0, len(xs) - 1, min(k, len(xs))).round().astype(int))
    it = np.unique(np.linspace(0, len(ts) - 1, min(k, len(ts))).round().astype(int))
    return [(float(xs[i]), float(ts[j])) for i in ix for j in it]


def _patch_report(name, cfg, params, spec, centres, ext, tol, compute):
    """Max of ``compute(xs, ts, rho, h)`` over the probe patches, refined in ``h``."""
    kw = dict(method=cfg.method, step=cfg.h, allow_negative=cfg.allow_negative_domain)

    def make(h):
        worst, used = 0.0, 0
        for xs, ts, rho in patched_potential(params, spec, centres, h, ext, **kw):
            worst = max(worst, compute(xs, ts, rho, h))
            used += 1
        return ResidualReport(name, worst, tol, {"h": h, "extent": ext, "patches": used,
                                                 "centres": [list(c) for c in centres]})
    return make


def run_verify(cfg: RunConfig, h: Optional[float] = None, do_refine: Optional[bool] = None):
    """Evaluate every applicable residual report.

    Returns
    -------
    (list of ResidualReport, dict)
        Reports and extra metadata (bispectral coefficients, skipped checks).
    """
    spec, params = cfg.seed_spec(), cfg.gbdt_params()
    check_inputs(params, spec)
    h = cfg.verify_h if h is None else float(h)
    do_refine = cfg.verify_refine if do_refine is None else bool(do_refine)
    tol = cfg.tol
    neg = cfg.allow_negative_domain
    extra = {"skipped": []}
    reports: List[ResidualReport] = []

    def fd(make):
        return refine(make, h) if do_refine else make(h)

    xs, ts = cfg.grid.xs, cfg.grid.ts
    rho, singular, Pi, S = potential_grid(params, spec, xs, ts, method=cfg.method, h=cfg.h,
                                          allow_negative=neg)
    drift = _identity_drift_grid(cfg, params, spec, Pi, S)
    id_tol = tol["identity_exact"] if cfg.method == "exact" else tol["identity_rk4"]
    reports.append(ResidualReport("identity_drift", float(np.max(drift)), id_tol,
                                  {"nx": len(xs), "nt": len(ts), "method": cfg.method}))

    ok = ~singular
    sym = np.linalg.norm(herm(rho[ok]) - spec.B @ rho[ok] @ spec.B, axis=(-2, -1))
    sym = sym / np.maximum(1.0, np.linalg.norm(rho[ok], axis=(-2, -1)))
    reports.append(ResidualReport("symmetry", float(np.max(sym, initial=0.0)), tol["symmetry"],
                                  {"nodes": int(np.count_nonzero(ok))}))

    nodes = _sample_nodes(cfg)
    worst = 0.0
    for x, t in nodes:
        st = propagate(params, spec, x, t, method=cfg.method, h=cfg.h, allow_negative=neg)
        worst = max(worst, j_unitarity(st, spec, cfg.z_samples).max_residual)
    reports.append(ResidualReport("j_unitarity", worst, tol["j_unitarity"],
                                  {"npoints": len(nodes), "nz": len(cfg.z_samples)}))

    c1, c2 = conservation_residual(params, spec, nodes, method=cfg.method,
                                   tolerance=tol["conservation"], allow_negative=neg)
    reports += [c1, c2]

    reports.append(fd(lambda hh: mixed_partial_residual(
        params, spec, nodes, hh, method=cfg.method, step=cfg.h,
        tolerance=tol["finite_difference"], allow_negative=neg)))

    xs_ode = sorted({x for x, _ in nodes})
    reports.append(fd(lambda hh: darboux_ode_residual(
        params, spec, xs_ode, cfg.z_samples[0], hh, t=cfg.grid.t0, method=cfg.method,
        tolerance=tol["finite_difference"], allow_negative=neg)))

    centres, ext = _probe_centres(cfg, cfg.verify_extent)
    d, dh = spec.d, spec.dhat
    reports.append(fd(_patch_report(
        "nwave", cfg, params, spec, centres, ext, tol["nwave"],
        lambda px, pt, r, hh: nwave_residual(r, d, dh, hh).max_residual)))
    z0 = cfg.z_samples[0]
    reports.append(fd(_patch_report(
        "zero_curvature", cfg, params, spec, centres, ext, tol["nwave"],
        lambda px, pt, r, hh: zero_curvature_residual(r, d, dh, z0, hh).max_residual)))

    if _three_wave_eligible(cfg):
        reports.append(fd(_patch_report(
            "three_wave", cfg, params, spec, centres, ext, tol["nwave"],
            lambda px, pt, r, hh: float(np.max(three_wave_residual(frame_for(spec, r), hh))))))
        if not real_reduction_check(params, spec):
            reports.append(fd(_patch_report(
                "three_wave_real", cfg, params, spec, centres, ext, tol["nwave"],
                lambda px, pt, r, hh: float(np.max(three_wave_residual(frame_for(spec, r, True), hh))))))
        else:
            extra["skipped"].append("three_wave_real: data not real-reducible")
    else:
        extra["skipped"].append("three_wave: needs m = 3, B = I, d1 > d2 > d3")

    lam = None
    if spec.is_zero_seed:
        try:
            lam = singleton_eigenvalue(params.A)
        except SpectrumNotSingleton:
            extra["skipped"].append("bispectral: spectrum of A is not a single point")
    if lam is not None:
        op = bispectral_operator(params.n, lam)
        worst = max(bispectral_residual(op, params, spec, x, cfg.z_samples, t, allow_negative=neg)
                    for x, t in nodes)
        reports.append(ResidualReport("bispectral", worst, tol["bispectral"],
                                      {"npoints": len(nodes), "nz": len(cfg.z_samples)}))
        extra["bispectral_operator"] = {"lambda": [lam.real, lam.imag],
                                        "coefficients": [float(c) for c in op.coeffs]}
    return reports, extra


def write_verify(reports, extra, cfg: RunConfig, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    p = out / "verify.json"
    _write_json(p, {
        "name": cfg.name,
        "all_pass": all(r.ok for r in reports),
        "reports": [r.to_dict() for r in reports],
        **extra,
    })
    return p


# -- demos ------------------------------------------------------------------

def load_demo(name: str) -> RunConfig:
    if name not in DEMOS:
        raise UnknownDemo(f"unknown demo {name!r}; choose from {', '.join(DEMOS)}")
    text = resources.files("nwave_gbdt.demos").joinpath(f"{name}.json").read_text(encoding="utf-8")
    return RunConfig.from_json(text)


def run_demo(name: str, out_dir) -> bool:
    cfg = load_demo(name)
    run_solve(cfg, out_dir)
    reports, extra = run_verify(cfg)
    write_verify(reports, extra, cfg, out_dir)
    return all(r.ok for r in reports)


# -- entry point --------------------------------------------------------------

def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nwave-gbdt", description="GBDT solutions of N-wave equations.")
    ap.add_argument("--allow-negative-domain", action="store_true",
                    help="permit x < 0 or t < 0 (evolution is integrated backwards)")
    sub = ap.add_subparsers(dest="command", required=True)
    s = sub.add_parser("solve", help="compute the transformed potential on a grid")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    v = sub.add_parser("verify", help="evaluate residual reports")
    v.add_argument("--config", required=True)
    v.add_argument("--h", type=float, default=None, help="finite-difference step")
    v.add_argument("--refine", action=argparse.BooleanOptionalAction, default=None,
                   help="also run at h/2 and report the convergence order")
    v.add_argument("--out", default=None)
    d = sub.add_parser("demo", help="run a bundled demo (solve and verify)")
    d.add_argument("name")
    d.add_argument("--out", required=True)
    return ap


def _error(exc: GBDTError) -> int:
    sys.stderr.write(json.dumps({"error": exc.code, "message": str(exc)}) + "\n")
    return 2


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "demo":
            ok = run_demo(args.name, args.out)
            return 0 if ok else 1
        cfg = RunConfig.load(args.config)
        if args.allow_negative_domain:
            cfg = replace(cfg, allow_negative_domain=True)
        if args.command == "solve":
            run_solve(cfg, args.out)
            return 0
        reports, extra = run_verify(cfg, args.h, args.refine)
        write_verify(reports, extra, cfg, args.out or cfg.output_dir)
        for r in reports:
            order = "" if r.convergence_order is None else f" order {r.convergence_order:.2f}"
            print(f"{'PASS' if r.ok else 'FAIL'} {r.name} {r.max_residual:.3e} (tol {r.tolerance:g}){order}")
        return 0 if all(r.ok for r in reports) else 1
    except FileNotFoundError as exc:
        return _error(ConfigError(f"cannot read config: {exc}"))
    except GBDTError as exc:
        return _error(exc)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
