"""``scatter`` command line: run one experiment from a JSON config plus flag overrides.

Outputs land in ``output.dir``: ``result.json`` (echoed config, hash, results),
``amplitude.csv`` and ``report.txt``.  Exit codes: 0 ok, 1 other failure, 2 invalid input,
3 conditioning refusal, 4 spectral singularity; failures print a JSON object on stderr.
"""

import argparse
import csv
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .config import TASKS, build_potential, config_hash, materialize, parse_complex, set_path
from .delta2d import delta_compare, frak_c, frak_c_from_grid
from .engine import evolve_aux, fundamental_from_aux, hamiltonian
from .errors import ConditioningRefusal, ScatterError, ValidationError
from .invisibility import (born_deviation, born_exactness_check, control_potential, box_profile, certify_invisibility,
                           incidence_angles, make_design, make_invisible, onset_scan,
                           strength_scaling)
from .oracle import SpatialGrid, born_series_solve, far_field
from .potentials import Delta2D, spectral_leakage
from .solver import IncidenceSpec, detector_angles, solve
from .spectral import build_grid

# flag -> config path, parser
FLAGS = {
    "k": ("incidence.k", float),
    "k-sweep": ("incidence.k_sweep", lambda s: [float(v) for v in s.split(",")]),
    "theta0": ("incidence.theta0_deg", lambda s: [float(v) for v in s.split(",")]),
    "side": ("incidence.side", str),
    "n-prop": ("numerics.n_prop", int),
    "n-evan": ("numerics.n_evan", int),
    "p-max": ("numerics.p_max", float),
    "dx": ("numerics.dx", float),
    "scheme": ("numerics.scheme", str),
    "n-max": ("numerics.n_max", int),
    "closure": ("numerics.closure", str),
    "n-theta": ("numerics.n_theta", int),
    "z": ("delta.z", str),
    "r0": ("delta.r0", lambda s: [float(v) for v in s.split(",")]),
    "alpha": ("design.alpha", float),
    "margin": ("design.margin", float),
    "beta": ("design.beta", float),
    "beta-prime": ("design.beta_prime", float),
    "envelope": ("design.envelope", str),
    "window": ("design.window", float),
    "tol-inv": ("design.tol_inv", float),
    "out": ("output.dir", str),
}


def _threads():
    env = os.environ.get("SCATTER_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ValidationError("SCATTER_THREADS must be an integer") from exc
    return os.cpu_count() or 1


def _cplx(z):
    return [float(np.real(z)), float(np.imag(z))]


def _incidences(cfg, k=None):
    inc = cfg["incidence"]
    k = inc["k"] if k is None else k
    sides = ("left", "right") if inc["side"] == "both" else (inc["side"],)
    return [IncidenceSpec.from_angle(s, k, np.deg2rad(t)) for t in inc["theta0_deg"] for s in sides]


# ---------------------------------------------------------------------------
# tasks: each returns (results, amplitude rows, report lines)


def _engine_operator(pot, k, p0s, num, p_max=None):
    p_max = p_max or num["p_max"] or 4.0 * k
    grid = build_grid(k, num["n_prop"], num["n_evan"], p_max)
    ham = hamiltonian(pot, grid, tuple(p0s))
    lo, hi = pot.support
    if isinstance(pot, Delta2D):
        aux = ham.transfer(lo - 1.0, hi)
    else:
        aux = evolve_aux(ham, lo, hi, scheme=num["scheme"], dx=num["dx"], n_max=num["n_max"],
                         check=num["check"], tol=num["tol"], max_growth=num["max_growth"])
    return grid, aux


def _solve_at(pot, cfg, k):
    num = cfg["numerics"]
    incs = _incidences(cfg, k)
    theta = detector_angles(num["n_theta"])
    grid, aux = _engine_operator(pot, k, sorted({i.p0 for i in incs}), num)
    op = aux if num["closure"] == "evanescent" else fundamental_from_aux(aux)
    results = [solve(op, inc, theta, num["closure"], num["singular_cond"]) for inc in incs]
    warnings = []
    if num["p_max_check"] and not pot.is_zero() and not isinstance(pot, Delta2D):
        p_max = 1.5 * (num["p_max"] or 4.0 * k)
        try:
            _, aux2 = _engine_operator(pot, k, sorted({i.p0 for i in incs}), num, p_max)
            op2 = aux2 if num["closure"] == "evanescent" else fundamental_from_aux(aux2)
            for r, inc in zip(results, incs):
                f2 = solve(op2, inc, theta, num["closure"], num["singular_cond"]).f
                scale = np.max(np.abs(f2)) or 1.0
                change = float(np.max(np.abs(f2 - r.f)) / scale)
                if change > 0.01:
                    warnings.append(f"amplitude changed by {change:.1%} when p_max was raised to "
                                    f"{p_max:g} (k={k:g}, theta0={np.rad2deg(np.arcsin(inc.p0 / k)):g})")
        except ConditioningRefusal as exc:
            warnings.append(f"p_max sensitivity not checked: {exc}")
    return grid, aux, results, warnings


def _result_json(r, grid, aux):
    idx = grid.prop_index
    return {
        "side": r.incidence.side,
        "k": r.incidence.k,
        "p0": r.incidence.p0,
        "theta0_deg": float(np.rad2deg(np.arcsin(r.incidence.p0 / r.incidence.k))),
        "forward_delta_weight": _cplx(r.forward_delta_weight),
        "p_nodes": grid.p[idx].tolist(),
        "B_minus_smooth": [_cplx(c) for c in r.B_minus.coeffs[idx]],
        "A_plus_smooth": [_cplx(c) for c in r.A_plus.coeffs[idx]],
        "metadata": r.metadata,
    }


def _rows(r):
    t0 = float(np.rad2deg(np.arcsin(r.incidence.p0 / r.incidence.k)))
    return [(t0, r.incidence.side, float(np.rad2deg(t)), f.real, f.imag, abs(f) ** 2)
            for t, f in zip(r.theta, r.f)]


def _diag(aux):
    return {k: v for k, v in aux.diagnostics.items() if isinstance(v, (int, float, str, bool))}


def task_solve(cfg):
    pot = build_potential(cfg["potential"])
    grid, aux, results, warnings = _solve_at(pot, cfg, cfg["incidence"]["k"])
    out = {"grid": {"kind": grid.kind, "k": grid.k, "n_prop": grid.n_prop, "size": grid.size,
                    "p_max": float(grid.p_max)},
           "diagnostics": _diag(aux),
           "warnings": warnings,
           "results": [_result_json(r, grid, aux) for r in results]}
    rows = [row for r in results for row in _rows(r)]
    report = [f"solve: {len(results)} incidence(s) at k={grid.k:g}",
              *(f"  side={r.incidence.side} theta0={np.rad2deg(np.arcsin(r.incidence.p0 / grid.k)):.3f} deg "
                f"max|f|={np.max(np.abs(r.f)):.6e}" for r in results),
              *(f"WARNING: {w}" for w in warnings)]
    return out, rows, report


def _sweep_point(pot, cfg, k):
    grid, aux, results, warnings = _solve_at(pot, cfg, k)
    return k, results, warnings


def task_sweep(cfg):
    pot = build_potential(cfg["potential"])
    ks = cfg["incidence"]["k_sweep"] or [cfg["incidence"]["k"]]
    with ThreadPoolExecutor(max_workers=min(_threads(), len(ks))) as pool:
        points = list(pool.map(lambda k: _sweep_point(pot, cfg, k), ks))
    rows, summary, warnings = [], [], []
    for k, results, warn in points:
        warnings += warn
        for r in results:
            rows += _rows(r)
            summary.append({"k": k, "side": r.incidence.side, "p0": r.incidence.p0,
                            "max_abs_f": float(np.max(np.abs(r.f)))})
    report = ["sweep over k: " + ", ".join(f"{k:g}" for k in ks),
              *(f"  k={s['k']:g} side={s['side']} p0={s['p0']:.6g} max|f|={s['max_abs_f']:.6e}"
                for s in summary), *(f"WARNING: {w}" for w in warnings)]
    return {"points": summary, "warnings": warnings, "workers": min(_threads(), len(ks))}, rows, report


def task_delta_compare(cfg):
    d = cfg["delta"]
    z = parse_complex(d["z"])
    k = cfg["incidence"]["k"]
    r0 = tuple(d["r0"])
    theta = detector_angles(cfg["numerics"]["n_theta"])
    rows, checks, lines = [], [], []
    t0 = time.perf_counter()
    for inc in _incidences(cfg):
        th0 = float(np.arcsin(inc.p0 / k))
        cmp_ = delta_compare(z, k, r0, th0, inc.side, theta)
        c_grid, spread = frak_c_from_grid(z, inc, r0, build_grid(k, d["n_prop"], cfg["numerics"]["n_evan"]))
        c_exact = frak_c(z, inc, r0)
        c_err = abs(c_grid - c_exact) / abs(c_exact)
        checks.append({"side": inc.side, "theta0_deg": float(np.rad2deg(th0)),
                       "tm_vs_ls_max_rel_diff": cmp_["max_rel_diff"], "abs_f": cmp_["abs_f"],
                       "abs_f_flatness": cmp_["flatness"], "expected_abs_f": cmp_["expected_abs_f"],
                       "c_grid": _cplx(c_grid), "c_closed_form": _cplx(c_exact),
                       "c_rel_error": float(c_err), "c_node_spread": spread})
        rows += [(float(np.rad2deg(th0)), inc.side, float(np.rad2deg(t)), f.real, f.imag, abs(f) ** 2)
                 for t, f in zip(cmp_["theta"], cmp_["f_tm"])]
        lines.append(f"  side={inc.side} theta0={np.rad2deg(th0):.3f} deg: TM vs LS max rel diff "
                     f"{cmp_['max_rel_diff']:.3e}, |f| = {cmp_['abs_f']:.6f} (flatness "
                     f"{cmp_['flatness']:.1e}), grid c rel error {c_err:.1e}")
    elapsed = time.perf_counter() - t0
    ok = all(c["tm_vs_ls_max_rel_diff"] <= 1e-12 and c["c_rel_error"] <= 1e-8 for c in checks)
    report = [f"delta-compare: z={z} k={k:g} r0={r0}",
              f"expected |f| = sqrt(2/pi)/|4/z+i| = {checks[0]['expected_abs_f']:.6f}", *lines,
              f"{'PASS' if ok else 'FAIL'} (TM vs LS <= 1e-12, grid c <= 1e-8) in {elapsed:.3f} s"]
    return {"checks": checks, "passed": ok}, rows, report


def _design_from_cfg(cfg, born=False):
    d = cfg["design"]
    axial = box_profile(d["slab_width"], parse_complex(d["amp"]))
    if born:
        beta = d["beta"] or 1.5 * d["alpha"]
        bp = d["beta_prime"] or beta * (1 + d["margin"])
        return make_design(d["alpha"], beta, bp, axial, d["envelope"], d["window"], d["margin"])
    return make_invisible(d["alpha"], d["margin"], axial, d["envelope"], d["window"])


def _design_summary(design):
    pot = design.potential
    out = {"alpha": design.alpha, "beta": design.beta, "margin": design.margin,
           "beta_prime": pot.beta_prime, "window": pot.window, "support": list(pot.support),
           "sup_norm": pot.sup_norm(), "scale": design.scale, "labels": ["non-Hermitian"]}
    if pot.window is not None:
        out["leakage_below_beta"] = spectral_leakage(pot.transverse, design.beta)
    return out


def task_invis_design(cfg):
    design = _design_from_cfg(cfg)
    summ = _design_summary(design)
    report = ["invis-design (non-Hermitian potential)",
              *(f"  {k} = {v}" for k, v in summ.items())]
    return {"design": summ}, [], report


def _grid_kw(cfg):
    num = cfg["numerics"]
    return {"n_prop": num["n_prop"], "n_evan": num["n_evan"], "p_max": num["p_max"]}


def _evolve_kw(cfg):
    num = cfg["numerics"]
    return {"dx": num["dx"], "max_growth": num["max_growth"]}


def task_invis_certify(cfg):
    d = cfg["design"]
    design = _design_from_cfg(cfg)
    k = cfg["incidence"]["k"]
    angles = incidence_angles(d["n_angles"])
    kw = {"tol": d["tol_inv"], "grid_kw": _grid_kw(cfg), "evolve_kw": _evolve_kw(cfg)}
    rep = certify_invisibility(design, k, angles, **kw)
    report = [f"invis-certify (non-Hermitian potential) alpha={design.alpha:g} "
              f"margin={design.margin:g} k={k:g}",
              f"  worst |M - I|_max = {rep['worst_deviation']:.3e} (tol {rep['tol']:.1e})",
              f"  worst |f| = {rep['max_abs_f']:.3e}",
              f"{'PASS' if rep['passed'] else 'FAIL'}"]
    out = {"design": _design_summary(design), "certification": rep}
    if k <= design.alpha:
        ks = d["scan_k"] or list(design.alpha * np.linspace(1.1, 1.9, 9))
        scan = onset_scan(design, ks, angles, **kw)
        out["onset_scan"] = [{k_: v for k_, v in s.items() if k_ != "rows"} for s in scan]
        hits = [s for s in scan if s.get("worst_deviation", 0) > 1e3 * rep["tol"]]
        report.append(f"onset scan: {len(hits)} of {len(scan)} wavenumbers in (alpha, 2 alpha) "
                      f"exceed 1e3 * tol" + (f", first k = {hits[0]['k']:g}" if hits else ""))
    return out, [], report


def task_born_check(cfg):
    d = cfg["design"]
    design = _design_from_cfg(cfg, born=True)
    k = cfg["incidence"]["k"]
    angles = np.deg2rad(cfg["incidence"]["theta0_deg"])
    kw = {"grid_kw": _grid_kw(cfg), "evolve_kw": _evolve_kw(cfg)}
    rep = born_exactness_check(design, k, angles, **kw)
    scal = strength_scaling(design, k, d["control_strengths"], angles, **kw)
    ctrl = born_deviation(control_potential(design, 1.0), k, angles, **kw)
    report = [f"born-check (non-Hermitian potential) alpha={design.alpha:g} beta={design.beta:g} "
              f"k={k:g} n_max={rep['n_max']}",
              f"  design: max rel |f - f_born| = {rep['max_rel_deviation']:.3e} "
              f"(max |f| = {rep['max_abs_f']:.3e})",
              f"  control (no gap): max rel |f - f_born| = {ctrl['max_rel_deviation']:.3e}",
              f"  control strength scaling exponent = {scal['exponent']:.3f}",
              f"{'PASS' if rep['max_rel_deviation'] <= 1e-5 else 'FAIL'}"]
    return {"design": _design_summary(design), "born": rep, "control": ctrl,
            "scaling": scal}, [], report


def task_oracle_compare(cfg):
    pot = build_potential(cfg["potential"])
    if isinstance(pot, Delta2D) or pot.line_spectrum:
        raise ValidationError("oracle-compare needs a smooth potential")
    oc = cfg["oracle"]
    k = cfg["incidence"]["k"]
    if oc["y_range"] is None:
        raise ValidationError("oracle.y_range must cover the potential")
    h = oc["h"] or 2 * np.pi / k / 16
    sgrid = SpatialGrid.from_potential(pot, k, h, y_range=tuple(oc["y_range"]))
    grid, aux, results, warnings = _solve_at(pot, cfg, k)
    rows, checks = [], []
    for r in results:
        ser = born_series_solve(sgrid, r.incidence, oc["n_terms"], oc["series_tol"])
        fo = far_field(sgrid, ser.psi, r.theta)
        rel = float(np.max(np.abs(r.f - fo)) / (np.max(np.abs(fo)) or 1.0))
        checks.append({"side": r.incidence.side, "p0": r.incidence.p0, "max_rel_diff": rel,
                       "contraction": ser.contraction, "measured_ratio": ser.measured_ratio,
                       "terms": len(ser.increments) + 1})
        t0 = float(np.rad2deg(np.arcsin(r.incidence.p0 / k)))
        rows += [(t0, r.incidence.side, float(np.rad2deg(t)), f.real, f.imag, abs(f) ** 2,
                  g.real, g.imag) for t, f, g in zip(r.theta, r.f, fo)]
    worst = max(c["max_rel_diff"] for c in checks)
    report = [f"oracle-compare k={k:g} closure={cfg['numerics']['closure']}",
              *(f"  side={c['side']} p0={c['p0']:.6g}: engine vs oracle max rel diff "
                f"{c['max_rel_diff']:.3e} (Born ratio {c['contraction']:.3f})" for c in checks),
              f"{'PASS' if worst <= 0.05 else 'FAIL'} (5% band)",
              *(f"WARNING: {w}" for w in warnings)]
    return {"checks": checks, "warnings": warnings, "passed": worst <= 0.05}, rows, report


RUNNERS = {
    "solve": task_solve,
    "sweep": task_sweep,
    "delta-compare": task_delta_compare,
    "invis-design": task_invis_design,
    "invis-certify": task_invis_certify,
    "born-check": task_born_check,
    "oracle-compare": task_oracle_compare,
}

CSV_HEADER = ["theta0_deg", "side", "theta_deg", "re_f", "im_f", "abs_f2"]


def _fmt(v):
    return v if isinstance(v, str) else repr(float(v))


def write_outputs(cfg, result, rows, report):
    out = Path(cfg["output"]["dir"])
    out.mkdir(parents=True, exist_ok=True)
    doc = {"version": __version__, "task": cfg["task"], "config": cfg,
           "config_hash": config_hash(cfg),
           "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()), "result": result}
    (out / "result.json").write_text(json.dumps(doc, indent=2, default=_json_default) + "\n")
    if rows:
        header = CSV_HEADER + (["re_f_oracle", "im_f_oracle"] if len(rows[0]) == 8 else [])
        with open(out / "amplitude.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows([_fmt(v) for v in row] for row in rows)
    (out / "report.txt").write_text("\n".join(report) + "\n")


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, complex):
        return _cplx(obj)
    raise TypeError(type(obj))


def build_parser():
    p = argparse.ArgumentParser(prog="scatter", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="task", required=True)
    for task in TASKS:
        sp = sub.add_parser(task)
        sp.add_argument("--config", help="JSON config file")
        sp.add_argument("--set", action="append", default=[], metavar="KEY=JSON",
                        help="override any config key by dotted path, e.g. numerics.n_prop=32")
        for flag in FLAGS:
            sp.add_argument(f"--{flag}", dest=flag.replace("-", "_"))
        sp.add_argument("--print-config", action="store_true",
                        help="print the materialized config and exit")
    return p


def load_config(args):
    cfg = {}
    if args.config:
        try:
            cfg = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationError(f"cannot read config: {exc}") from exc
        if not isinstance(cfg, dict):
            raise ValidationError("config must be a JSON object")
    cfg["task"] = args.task
    for flag, (path, conv) in FLAGS.items():
        val = getattr(args, flag.replace("-", "_"))
        if val is not None:
            try:
                set_path(cfg, path, conv(val))
            except ValueError as exc:
                raise ValidationError(f"--{flag}: {exc}") from exc
    for item in args.set:
        key, _, raw = item.partition("=")
        try:
            set_path(cfg, key, json.loads(raw))
        except json.JSONDecodeError:
            set_path(cfg, key, raw)
    return materialize(cfg)


def run(cfg):
    result, rows, report = RUNNERS[cfg["task"]](cfg)
    write_outputs(cfg, result, rows, report)
    return result, report


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args)
        if args.print_config:
            print(json.dumps(cfg, indent=2))
            return 0
        _, report = run(cfg)
        print("\n".join(report))
        return 0
    except ScatterError as exc:
        err = {"error": type(exc).__name__, "message": str(exc), "exit_code": exc.exit_code}
        for attr in ("k", "condition", "growth", "ratio"):
            val = getattr(exc, attr, None)
            if val is not None:
                val = float(val)
                err[attr] = val if np.isfinite(val) else str(val)
        print(json.dumps(err), file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
