"""Command line interface: hypflats <subcommand> [options].

Every subcommand accepts --config (a JSON object whose keys match the long
option names with dashes replaced by underscores), --seed, --out and
--threads. Explicit options override the config file. With --out, CSV goes to
that path and a JSON manifest is written next to it as <out>.manifest.json.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import experiments as ex
from . import moments as mo
from . import report, ustat
from .sampler import ProcessParams, sample_realization
from .secondorder import KParams, k_function, pair_correlation
from .skeleton import WorkGuardError, skeleton_functional


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", type=Path, help="JSON file with default option values")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", type=Path, help="output path (stdout when omitted)")
    p.add_argument("--threads", type=int, help="worker processes (env HYPFLATS_THREADS)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hypflats", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="sample realizations as CSV (stream_id, s, dir_1..dir_d)")
    _common(p)
    p.add_argument("--d", type=int)
    p.add_argument("--r", type=float)
    p.add_argument("--t", type=float)
    p.add_argument("--replications", type=int)

    p = sub.add_parser("functionals", help="skeleton functionals per replication (stream_id, i, value)")
    _common(p)
    p.add_argument("--d", type=int)
    p.add_argument("--r", type=float)
    p.add_argument("--t", type=float)
    p.add_argument("--i", type=int, help="single index; all indices when omitted")
    p.add_argument("--replications", type=int)

    p = sub.add_parser("moments", help="exact means, covariances and limit matrices as JSON")
    _common(p)
    p.add_argument("--d", type=int)
    p.add_argument("--r", type=float)
    p.add_argument("--t", type=float)

    p = sub.add_parser("kfunction", help="K and g on a grid, optionally with the empirical vertex K")
    _common(p)
    p.add_argument("--d", type=int)
    p.add_argument("--i", type=int)
    p.add_argument("--j", type=int)
    p.add_argument("--t", type=float)
    p.add_argument("--kappa", type=int)
    p.add_argument("--r-values", type=_floats)
    p.add_argument("--empirical", action="store_true", default=None)
    p.add_argument("--replications", type=int)
    p.add_argument("--sim-radius", type=float)
    p.add_argument("--r-window", type=float)
    p.add_argument("--plot", action="store_true", default=None, help="also render a PNG next to --out")

    for name, text in (
        ("clt-experiment", "normality diagnostics of standardised functionals"),
        ("multivariate", "scaled covariance of the functional vector vs its limit"),
    ):
        p = sub.add_parser(name, help=text)
        _common(p)
        p.add_argument("--d", type=int)
        if name == "clt-experiment":
            p.add_argument("--i", type=int)
        p.add_argument("--t-grid", type=_floats)
        p.add_argument("--r-grid", type=_floats)
        p.add_argument("--replications", type=int)

    p = sub.add_parser("ustat-moments", help="diagram expansions of centred moments or M_{u,v} as JSON")
    _common(p)
    p.add_argument("--d", type=int)
    p.add_argument("--i", type=int)
    p.add_argument("--t", type=float)
    p.add_argument("--r", type=float)
    p.add_argument("--ell", type=int)
    p.add_argument("--u", type=int)
    p.add_argument("--v", type=int)
    p.add_argument("--n-mc", type=int)
    p.add_argument("--metric", choices=sorted(ustat.NORMAL_CONSTANTS))

    p = sub.add_parser("export-disc", help="chords of a planar realization in the Poincare disc")
    _common(p)
    p.add_argument("--r", type=float)
    p.add_argument("--t", type=float)
    p.add_argument("--stream-id", type=int)
    p.add_argument("--plot", action="store_true", default=None, help="also render a PNG next to --out")
    return parser


DEFAULTS = {
    "seed": 0,
    "threads": None,
    "d": 2,
    "r": 2.0,
    "t": 1.0,
    "i": None,
    "j": None,
    "kappa": -1,
    "replications": 1,
    "r_values": [0.25, 0.5, 0.75, 1.0, 1.25, 1.5],
    "empirical": False,
    "sim_radius": 5.0,
    "r_window": 2.0,
    "plot": False,
    "t_grid": [1.0],
    "r_grid": [1.0, 2.0, 4.0],
    "ell": 2,
    "u": None,
    "v": None,
    "n_mc": 100_000,
    "metric": "kolmogorov",
    "stream_id": 0,
}


def settings(args: argparse.Namespace) -> dict:
    opts = {k: v for k, v in vars(args).items() if k not in ("config", "command", "out")}
    merged = {k: DEFAULTS.get(k) for k in opts}
    if args.config:
        data = json.loads(args.config.read_text())
        unknown = set(data) - set(opts)
        if unknown:
            raise ValueError(f"unknown config keys for {args.command}: {sorted(unknown)}")
        merged.update(data)
    merged.update({k: v for k, v in opts.items() if v is not None})
    return merged


def _emit_csv(out: Path | None, header, rows, cfg: dict, command: str, extra=None):
    if out is None:
        report.write_rows(sys.stdout, header, rows)
        return
    report.write_csv(out, header, rows)
    report.write_manifest(_manifest_path(out), {"command": command, **cfg}, extra)


def _emit_json(out: Path | None, payload: dict, cfg: dict, command: str):
    payload = {"command": command, "inputs": cfg, **payload}
    if out is None:
        sys.stdout.write(json.dumps(report.jsonable(payload), indent=2, sort_keys=True) + "\n")
        return
    report.write_json(out, payload)
    report.write_manifest(_manifest_path(out), {"command": command, **cfg})


def _manifest_path(out: Path) -> Path:
    return out.with_name(out.name + ".manifest.json")


def cmd_sample(cfg, out):
    params = ProcessParams(cfg["d"], cfg["r"], cfg["t"], cfg["seed"])
    rows = []
    for sid in range(cfg["replications"]):
        rows.extend(report.realization_rows(sample_realization(params, sid)))
    _emit_csv(out, report.realization_header(params.d), rows, cfg, "sample")


def cmd_functionals(cfg, out):
    params = ProcessParams(cfg["d"], cfg["r"], cfg["t"], cfg["seed"])
    which = range(params.d) if cfg["i"] is None else [cfg["i"]]
    rows = []
    for sid in range(cfg["replications"]):
        real = sample_realization(params, sid)
        rows.extend([sid, i, skeleton_functional(real, i)] for i in which)
    _emit_csv(out, ["stream_id", "i", "value"], rows, cfg, "functionals")


def cmd_moments(cfg, out):
    d, t, r = cfg["d"], cfg["t"], cfg["r"]
    vol = mo.ball_volume(d, r)
    covs = []
    for i in range(d):
        for j in range(i, d):
            rep = mo.covariance(d, i, j, t, r)
            covs.append({"i": i, "j": j, "terms": rep.terms, "quad_errors": rep.errors, "total": rep.total})
    payload = {
        "ball_volume": vol,
        "expectation": [mo.expectation(d, i, t, vol) for i in range(d)],
        "covariances": covs,
        "asymptotic_covariance": mo.asymptotic_covariance(d, t),
        "tau_w": mo.tau_w(d, r),
    }
    _emit_json(out, payload, cfg, "moments")


def cmd_kfunction(cfg, out):
    d, t = cfg["d"], cfg["t"]
    i = 0 if cfg["i"] is None else cfg["i"]
    j = i if cfg["j"] is None else cfg["j"]
    kp = KParams(d, i, j, t, cfg["kappa"])
    r_values = list(cfg["r_values"])
    emp = [(None, None)] * len(r_values)
    if cfg["empirical"]:
        if (i, j) != (0, 0) or cfg["kappa"] != -1:
            raise ValueError("the empirical estimator covers the hyperbolic vertex process only")
        ecfg = ex.ExperimentConfig(
            kind="kfunction",
            d=d,
            i=0,
            t_grid=[t],
            r_grid=[cfg["sim_radius"]],
            replications=cfg["replications"],
            seed=cfg["seed"],
            r_window=cfg["r_window"],
            r_values=r_values,
        )
        rec = ex.run_kfunction_campaign(ecfg)
        emp = [(c["k_empirical"], c["k_se"]) for c in rec.cells]
    header = ["r", "k_analytic", "g_analytic", "k_empirical", "k_stderr"]
    rows = []
    for rho, (val, se) in zip(r_values, emp):
        row = [rho, k_function(kp, rho), pair_correlation(kp, rho)]
        row += [val, se] if val is not None else [float("nan"), float("nan")]
        rows.append(row)
    _emit_csv(out, header, rows, cfg, "kfunction")
    if cfg["plot"] and out is not None:
        from .figures import plot_kfunction

        arr = np.array(rows, dtype=float)
        has_emp = bool(cfg["empirical"])
        plot_kfunction(arr[:, 0], arr[:, 1], arr[:, 2], out.with_suffix(".png"),
                       arr[:, 3] if has_emp else None, arr[:, 4] if has_emp else None)


def _campaign_rows(record, keys):
    return [[cell[k] for k in keys] for cell in record.cells]


def cmd_clt(cfg, out):
    ecfg = ex.ExperimentConfig(
        kind="clt-window", d=cfg["d"], i=cfg["i"] if cfg["i"] is not None else cfg["d"] - 1,
        t_grid=cfg["t_grid"], r_grid=cfg["r_grid"], replications=cfg["replications"],
        seed=cfg["seed"], threads=cfg["threads"],
    )
    rec = ex.run_clt_campaign(ecfg)
    keys = ["d", "i", "t", "r", "replications", "ks", "ks_pvalue", "skewness", "skewness_se", "cum4", "cum4_se"]
    _emit_csv(out, keys, _campaign_rows(rec, keys), asdict(ecfg), "clt-experiment", {"wall_clock": rec.wall_clock})


def cmd_multivariate(cfg, out):
    ecfg = ex.ExperimentConfig(
        kind="multivariate", d=cfg["d"], t_grid=cfg["t_grid"], r_grid=cfg["r_grid"],
        replications=cfg["replications"], seed=cfg["seed"], threads=cfg["threads"],
    )
    rec = ex.run_multivariate_campaign(ecfg)
    keys = ["t", "r", "frobenius_error", "frobenius_se", "exact_bias", "min_correlation"]
    _emit_csv(out, keys, _campaign_rows(rec, keys), asdict(ecfg), "multivariate",
              {"wall_clock": rec.wall_clock, "cells": rec.cells})


def _contrib_json(res: ustat.MCResult):
    return [
        {
            "blocks": [list(map(list, b)) for b in c.representative.blocks],
            "row_sizes": list(c.representative.row_sizes),
            "multiplicity": c.multiplicity,
            "t_exponent": c.t_exponent,
            "value": c.value,
            "stderr": c.stderr,
        }
        for c in res.contributions
    ]


def cmd_ustat(cfg, out):
    d, t, r = cfg["d"], cfg["t"], cfg["r"]
    i = d - 1 if cfg["i"] is None else cfg["i"]
    payload = {"variance": mo.variance(d, i, t, r)}
    if cfg["u"] is not None or cfg["v"] is not None:
        u = cfg["u"] or cfg["v"]
        v = cfg["v"] or cfg["u"]
        res = ustat.m_uv_report(d, i, u, v, t, r, cfg["n_mc"], cfg["seed"])
        payload["quantity"] = f"M_{u},{v}"
    else:
        res = ustat.centered_moment_report(d, i, t, r, cfg["ell"], cfg["n_mc"], cfg["seed"])
        payload["quantity"] = f"centred moment of order {cfg['ell']}"
    payload.update(value=res.value, stderr=res.stderr, diagrams=_contrib_json(res))
    if r >= 0.5:
        payload["cum4_lower_bound"] = ustat.cum4_lower_bound(d, i, t, r)
    _emit_json(out, payload, cfg, "ustat-moments")


def cmd_export_disc(cfg, out):
    params = ProcessParams(2, cfg["r"], cfg["t"], cfg["seed"])
    real = sample_realization(params, cfg["stream_id"])
    rows = list(report.disc_rows(real))
    _emit_csv(out, report.DISC_HEADER, rows, cfg, "export-disc")
    if cfg["plot"] and out is not None:
        from .figures import plot_disc

        chords = [((row[1], row[2]), (row[3], row[4])) for row in rows]
        plot_disc(chords, params.r, out.with_suffix(".png"))


COMMANDS = {
    "sample": cmd_sample,
    "functionals": cmd_functionals,
    "moments": cmd_moments,
    "kfunction": cmd_kfunction,
    "clt-experiment": cmd_clt,
    "multivariate": cmd_multivariate,
    "ustat-moments": cmd_ustat,
    "export-disc": cmd_export_disc,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = settings(args)
        COMMANDS[args.command](cfg, args.out)
    except (ValueError, WorkGuardError, mo.QuadratureError) as exc:
        print(f"hypflats: error: {exc}", file=sys.stderr)
        return 2
    return 0
