"""Command-line front end: verification suites, interaction and balance
reports, and parameter sweeps.

Exit-status contract: 0 means all checks passed (or the energy bracket is
negative), 1 means a check failed (or the bracket is nonnegative), 2 means
an input error.  All JSON output is emitted with sorted keys and all CSV
rows in deterministic grid order, so identical configurations produce
byte-identical reports.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from types import SimpleNamespace

import numpy as np

from . import biharmonic, curvature, duality, energy, gluing, tensor_core
from .fields import PolynomialField

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_INPUT = 2


def _threads() -> int:
    raw = os.environ.get("WEYLGLUE_THREADS", "1")
    try:
        val = int(raw)
    except ValueError as exc:
        raise ValueError(f"WEYLGLUE_THREADS must be an integer, got {raw!r}") from exc
    if val < 1:
        raise ValueError("WEYLGLUE_THREADS must be positive")
    return val


def _emit(payload, path: str | None) -> None:
    text = json.dumps(payload, sort_keys=True, indent=2, default=float) + "\n"
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load_spectrum(path: str):
    with open(path) as fh:
        payload = json.load(fh)
    sd, asd = tensor_core.spectrum_from_json(payload)
    return tensor_core.algweyl_from_spectrum(sd, asd)


# ---------------------------------------------------------------------------
# verify suites

def _check(name, tag, residual, tol):
    return {"name": name, "tag": tag, "residual": float(residual),
            "tol": float(tol), "pass": bool(residual <= tol)}


def _suite_sphere(rng):
    checks = []
    for level in (12, 16):
        pts, wts = energy.sphere_rule(level)
        err = abs(float(wts.sum()) - energy.VOL_S3)
        checks.append(_check(f"sphere-volume-L{level}", "quadrature-volume", err, 1e-12))
        moment_err = 0.0
        for mu in range(4):
            for nu in range(4):
                for k in range(4):
                    for l in range(4):
                        q = float(np.sum(wts * pts[:, mu] * pts[:, nu]
                                         * pts[:, k] * pts[:, l]))
                        moment_err = max(moment_err,
                                         abs(q - energy.sphere_moment(mu, nu, k, l)))
        checks.append(_check(f"sphere-moments-L{level}", "quadrature-moments",
                             moment_err, 1e-12))
    return checks


def _random_weyl(rng):
    sd = rng.standard_normal(3)
    asd = rng.standard_normal(3)
    return tensor_core.algweyl_from_spectrum(sd - sd.mean(), asd - asd.mean())


def _suite_tensor(rng):
    checks = []
    err_kn = err_op = err_blk = 0.0
    for _ in range(5):
        w = _random_weyl(rng)
        t = w.tensor
        err_kn = max(err_kn, max(tensor_core.validate(t, "weyl").values()))
        op = tensor_core.op_from_tensor(t)
        err_op = max(err_op, np.abs(tensor_core.tensor_from_op(op) - t).max())
        sd, asd = duality.hodge_split(op)
        p = duality.SD_BASIS / np.sqrt(2.0)
        m = duality.ASD_BASIS / np.sqrt(2.0)
        err_blk = max(err_blk, np.abs(p @ op @ m.T).max())
    checks.append(_check("weyl-class-residual", "curvature-symmetries", err_kn, 1e-10))
    checks.append(_check("operator-round-trip", "two-form-operator", err_op, 1e-12))
    checks.append(_check("hodge-block-diagonal", "duality-split", err_blk, 1e-12))
    return checks


def _suite_curvature(rng):
    checks = []
    err = 0.0
    for _ in range(3):
        field = PolynomialField.random(rng, scale=0.05)
        chart = curvature.polynomial_chart(field)
        x = 0.3 * rng.standard_normal(4)
        h = PolynomialField.random(rng, scale=1.0)
        lin = curvature.linearize_curvature(chart, h, x)
        for quantity in ("inv", "gamma", "riem04", "ric", "scal", "weyl"):
            fd = curvature.fd_linearize(chart, h, x, quantity)
            key = {"inv": "inv_dot", "gamma": "gamma_dot", "riem04": "riem04_dot",
                   "ric": "ric_dot", "scal": "scal_dot", "weyl": "weyl_dot"}[quantity]
            scale = max(np.abs(fd).max(), 1.0)
            err = max(err, np.abs(np.asarray(lin[key]) - fd).max() / scale)
    checks.append(_check("linearizations-vs-fd", "curvature-first-variation", err, 1e-6))
    return checks


def _suite_biharmonic(rng):
    checks = []
    err_solve = err_bc = err_bilap = 0.0
    for _ in range(5):
        wm = _random_weyl(rng).tensor
        wz = _random_weyl(rng).tensor
        gamma = float(rng.choice([0.3, 0.1, 0.02]))
        lam = float(rng.uniform(0.5, 3.0))
        for case, idx in (("diag-phi", (0, 1, 2)), ("offdiag-phi", (0, 1, 2, 3))):
            v = biharmonic.boundary_vector(case, idx, wm, wz, gamma, lam)
            c1 = biharmonic.solve_profile(gamma, v, method="closed")
            c2 = biharmonic.solve_profile(gamma, v, method="direct")
            err_solve = max(err_solve, np.abs(c1 - c2).max() / max(np.abs(c2).max(), 1e-30))
            scale = max(np.abs(v).max(), 1e-30)
            err_bc = max(err_bc,
                         abs(gamma ** 4 * biharmonic.radial_profile(c1, gamma) - v[0]) / scale,
                         abs(biharmonic.radial_profile(c1, 1.0) - v[2]) / scale)
        sol = biharmonic.assemble_interpolant(wm, wz, SimpleNamespace(gamma=gamma, lam=lam))
        x = rng.uniform(gamma + 0.05 * (1 - gamma), 0.95, (20, 1)) * _unit_dirs(rng, 20)
        # contract the full fourth derivative rather than calling the
        # closed-form bilaplacian, and normalize against its magnitude:
        # that is the cancellation scale of the double trace
        d4 = sol.wdot.derivative(x, 4)
        scale = max(np.abs(d4).max(), 1e-30)
        err_bilap = max(err_bilap,
                        np.abs(np.einsum("naabbij->nij", d4)).max() / scale)
    checks.append(_check("closed-vs-direct-solve", "profile-system", err_solve, 1e-11))
    checks.append(_check("boundary-conditions", "profile-system", err_bc, 1e-10))
    checks.append(_check("interpolant-bilaplacian", "biharmonic-equation", err_bilap, 1e-9))
    return checks


def _unit_dirs(rng, n):
    v = rng.standard_normal((n, 4))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def _suite_tt(rng):
    checks = []
    err = 0.0
    for _ in range(5):
        wm = _random_weyl(rng).tensor
        wz = _random_weyl(rng).tensor
        sol = biharmonic.assemble_interpolant(wm, wz, SimpleNamespace(gamma=0.1, lam=1.5))
        x = rng.uniform(0.15, 0.95, (20, 1)) * _unit_dirs(rng, 20)
        scale = max(np.abs(sol.wdot.derivative(x, 0)).max(), 1e-30)
        err = max(err,
                  np.abs(sol.wdot.trace(x)).max() / scale,
                  np.abs(sol.wdot.divergence(x)).max() / scale)
    checks.append(_check("interpolant-tt", "transverse-traceless", err, 1e-10))
    return checks


def _suite_variation(rng):
    checks = []
    wz = _random_weyl(rng).tensor
    h = gluing.model_H(wz)
    phi = energy.second_variation(h, ("ball", 1.0), form="bilap").value
    phi2 = energy.second_variation(h, ("ball", 1.0), form="biharm").value
    checks.append(_check("boundary-forms-agree", "quadratic-expansion",
                         abs(phi - phi2) / max(abs(phi), 1e-30), 1e-10))
    ts = np.geomspace(1e-3, 1e-2, 5)
    ens = []
    for t in ts:
        chart = curvature.FieldChart(h, scale=t, kind="custom", r_max=2.0)
        ens.append(energy.weyl_energy_numeric(chart, 0.0, 1.0, level=10, n_radial=16))
    ens = np.asarray(ens)
    res = np.abs(ens - ts ** 2 * phi)
    slope = float(np.polyfit(np.log(ts), np.log(res), 1)[0])
    checks.append(_check("cubic-remainder-slope", "quadratic-expansion",
                         max(0.0, 2.7 - slope), 0.0))
    # the first-order coefficient of the energy in t must vanish at flat
    basis = np.stack([ts, ts ** 2], axis=1)
    coef, *_ = np.linalg.lstsq(basis, ens, rcond=None)
    checks.append(_check("first-variation-vanishes", "flat-critical-point",
                         abs(coef[0]) / max(abs(coef[1]) * 1e-3, 1e-30), 1.0))
    return checks


SUITES = {
    "sphere": _suite_sphere,
    "tensor": _suite_tensor,
    "curvature": _suite_curvature,
    "biharmonic": _suite_biharmonic,
    "tt": _suite_tt,
    "variation": _suite_variation,
}


def cmd_verify(args) -> int:
    if args.suite == "all":
        names = sorted(SUITES)
    elif args.suite in SUITES:
        names = [args.suite]
    else:
        raise ValueError(f"unknown suite {args.suite!r}")
    checks = []
    for name in names:
        rng = np.random.default_rng(args.seed)
        checks.extend(SUITES[name](rng))
    if args.tol is not None:
        for c in checks:
            c["tol"] = args.tol
            c["pass"] = bool(c["residual"] <= args.tol)
    ok = all(c["pass"] for c in checks)
    _emit({"suite": args.suite, "seed": args.seed, "checks": checks,
           "pass": ok}, args.output)
    return EXIT_PASS if ok else EXIT_FAIL


# ---------------------------------------------------------------------------
# interact

def cmd_interact(args) -> int:
    wm = _load_spectrum(args.wm)
    wz = _load_spectrum(args.wz)
    flags = duality.positivity_bound(wm, wz)
    lm_sd, lm_asd = duality.spectra(wm)
    lz_sd, lz_asd = duality.spectra(wz)
    report = {
        "tag": "aligned-interaction",
        "spectra": {"m_sd": list(lm_sd), "m_asd": list(lm_asd),
                    "z_sd": list(lz_sd), "z_asd": list(lz_asd)},
        "aligned_value": flags["aligned_value"],
        "bound": flags["bound"],
        "conformally_flat_factor": flags["conformally_flat_factor"],
        "excluded_case": flags["excluded_case"],
        "positive": flags["positive"],
    }
    if args.align:
        realized = duality.align_and_interact(wm, wz)
        report["realized_value"] = realized["value"]
    _emit(report, args.output)
    return EXIT_PASS


# ---------------------------------------------------------------------------
# balance

def _balance_row(wm, wz, params, c_cache) -> dict:
    if params.gamma not in c_cache:
        c_cache[params.gamma] = energy.leading_bracket(
            wm.tensor, np.zeros((4, 4, 4, 4)), params.gamma, 1.0)
    bracket = energy.leading_bracket(wm.tensor, wz.tensor, params.gamma, params.lam)
    inter = duality.interaction_star(wm, wz)
    c_const = c_cache[params.gamma]
    predicted = c_const - (4.0 / 9.0) * np.pi ** 2 * params.lam ** 2 * inter
    return {"lambda": params.lam, "gamma": params.gamma, "a": params.a,
            "bracket": bracket, "interaction": inter, "constant_C": c_const,
            "fit_residual": bracket - predicted}


def cmd_balance(args) -> int:
    wm = _load_spectrum(args.wm)
    wz = _load_spectrum(args.wz)
    flags = duality.positivity_bound(wm, wz)
    if flags["excluded_case"]:
        raise ValueError("excluded case: one factor purely self-dual, the other "
                         "purely anti-self-dual; no sign conclusion is available")
    regime_notes = []
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", gluing.RegimeWarning)
        if args.auto is not None:
            params = energy.choose_parameters(wm.tensor, wz.tensor, margin=args.auto)
        else:
            missing = [k for k, v in (("--lambda", args.lam), ("--gamma", args.gamma),
                                      ("--a", args.a)) if v is None]
            if missing:
                raise ValueError(f"missing {', '.join(missing)} (or use --auto)")
            params = gluing.GluingParams(a=args.a, lam=args.lam, gamma=args.gamma)
        bal = energy.energy_balance(wm.tensor, wz.tensor, params)
        regime_notes = [str(w.message) for w in caught
                        if issubclass(w.category, gluing.RegimeWarning)]
    report = {"tag": "energy-balance", **bal.to_json(),
              "error_model": args.error_model,
              "regime_warnings": sorted(set(regime_notes)),
              "negative": bool(bal.leading_bracket < 0.0)}
    if args.auto is not None:
        report["selected"] = {"lambda": params.lam, "gamma": params.gamma, "a": params.a}
    _emit(report, args.output)
    if args.sweep:
        cache = {}
        rows = [_balance_row(wm, wz,
                             gluing.GluingParams(a=params.a, lam=lam, gamma=params.gamma),
                             cache)
                for lam in energy.LAMBDA_GRID]
        _write_csv(rows, args.sweep)
    return EXIT_PASS if bal.leading_bracket < 0.0 else EXIT_FAIL


# ---------------------------------------------------------------------------
# sweep

CSV_COLUMNS = ["lambda", "gamma", "a", "bracket", "interaction",
               "constant_C", "fit_residual", "sign"]


def _write_csv(rows, path: str | None) -> None:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: row.get(k, "") for k in CSV_COLUMNS})
    if path:
        with open(path, "w") as fh:
            fh.write(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())


def cmd_sweep(args) -> int:
    wm = _load_spectrum(args.wm)
    wz = _load_spectrum(args.wz)
    lam_grid = args.lambda_grid or list(energy.LAMBDA_GRID)
    gamma_grid = args.gamma_grid or list(energy.GAMMA_GRID)
    if not lam_grid or not gamma_grid:
        raise ValueError("empty sweep grid")
    flags = duality.positivity_bound(wm, wz)
    grid = [(lam, gamma) for lam in lam_grid for gamma in gamma_grid]
    cache = {}

    def one(point):
        lam, gamma = point
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", gluing.RegimeWarning)
            params = gluing.GluingParams(a=gamma ** 2 / 20.0, lam=lam, gamma=gamma)
            row = _balance_row(wm, wz, params, cache)
        if flags["excluded_case"] or flags["conformally_flat_factor"]:
            row["sign"] = "inconclusive"
        else:
            row["sign"] = "negative" if row["bracket"] < 0.0 else "nonnegative"
        return row

    n_workers = _threads()
    if n_workers > 1:
        # warm the per-gamma constant cache serially, then fan out
        for gamma in gamma_grid:
            one((lam_grid[0], gamma))
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            rows = list(pool.map(one, grid))
    else:
        rows = [one(point) for point in grid]
    _write_csv(rows, args.output)
    return EXIT_PASS


# ---------------------------------------------------------------------------
# argument plumbing

def _apply_config(args, parser):
    if not getattr(args, "config", None):
        return args
    with open(args.config) as fh:
        conf = json.load(fh)
    alias = {"lambda": "lam"}
    for key, value in conf.items():
        dest = alias.get(key, key.replace("-", "_"))
        if not hasattr(args, dest):
            raise ValueError(f"unknown config key {key!r}")
        if parser.get_default(dest) == getattr(args, dest):
            setattr(args, dest, value)
    return args


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="weylglue",
        description="Numerical checks for the Weyl-energy gluing construction.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_verify = sub.add_parser("verify", help="run a verification suite")
    p_verify.add_argument("suite", choices=sorted(SUITES) + ["all"])
    p_verify.add_argument("--tol", type=float, default=None,
                          help="override every check tolerance")
    p_verify.add_argument("--seed", type=int, default=0)
    p_verify.add_argument("--output", default=None)
    p_verify.add_argument("--config", default=None)
    p_verify.set_defaults(func=cmd_verify)

    p_inter = sub.add_parser("interact", help="interaction pairing of two spectra")
    p_inter.add_argument("wm", help="JSON spectrum file for the first factor")
    p_inter.add_argument("wz", help="JSON spectrum file for the second factor")
    p_inter.add_argument("--align", action="store_true",
                         help="also realize the aligned tensors and pair them")
    p_inter.add_argument("--output", default=None)
    p_inter.add_argument("--config", default=None)
    p_inter.set_defaults(func=cmd_interact)

    p_bal = sub.add_parser("balance", help="energy balance of the glued metric")
    p_bal.add_argument("wm")
    p_bal.add_argument("wz")
    p_bal.add_argument("--lambda", dest="lam", type=float, default=None)
    p_bal.add_argument("--gamma", type=float, default=None)
    p_bal.add_argument("--a", type=float, default=None)
    p_bal.add_argument("--auto", type=float, default=None, metavar="MARGIN",
                       help="select parameters automatically for this margin")
    p_bal.add_argument("--error-model", choices=["truncated", "synthetic"],
                       default="truncated")
    p_bal.add_argument("--sweep", default=None, metavar="CSV",
                       help="also emit a lambda-grid sweep CSV")
    p_bal.add_argument("--output", default=None)
    p_bal.add_argument("--config", default=None)
    p_bal.set_defaults(func=cmd_balance)

    p_sweep = sub.add_parser("sweep", help="bracket sweep over (lambda, gamma) grids")
    p_sweep.add_argument("wm")
    p_sweep.add_argument("wz")
    p_sweep.add_argument("--lambda-grid", type=float, nargs="+", default=None)
    p_sweep.add_argument("--gamma-grid", type=float, nargs="+", default=None)
    p_sweep.add_argument("--output", default=None)
    p_sweep.add_argument("--config", default=None)
    p_sweep.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args = _apply_config(args, parser)
        return args.func(args)
    except (ValueError, OSError, json.JSONDecodeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
