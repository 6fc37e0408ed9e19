"""Command-line front end.

Each subcommand reads its parameters from (lowest to highest precedence)
built-in defaults, a packaged ``--preset``, a YAML ``--config`` file whose
keys mirror the long flags, and explicit flags.  Outputs go to ``--out``;
the seed and the resolved configuration are echoed into every JSON report.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import yaml

from . import __version__
from .bootstrap import WeightScheme, bootstrap_bias_mse, bootstrap_ci, bootstrap_fit
from .diagnostics import normalized_volatility, qq_against_t
from .errors import DataError, EmptySeries, InvalidParameter, MGarchError, NonPositivePrice, ParseError
from .experiments import (DGP, ExperimentSpec, bias_mse_study, coverage_study,
                          misspecification_study, parse_score)
from .garch import GarchOrder, ParameterVector, SeriesData, simulate_path
from .inference import estimate_covariance, normal_ci
from .mest import FitConfig, fit
from .report import envelope, log_event, write_csv, write_json
from .score import ErrorDistribution, solve_cH

log = logging.getLogger("mgarch")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_DATA = 0, 2, 3, 4
ALL_SCORES = ("qmle", "lad", "huber", "mu", "cauchy")


class ConfigError(Exception):
    exit_code = EXIT_CONFIG


# ---------------------------------------------------------------- ingestion

def ingest_csv(path, column=None, transform: str = "none", scale: float = 1.0) -> SeriesData:
    """Read one numeric column of a CSV file.

    ``column`` is a header name or a zero-based index (default: the last
    column).  A header row is detected when the selected cell of the first
    row is not numeric.  ``log_return`` maps prices ``p_t`` to
    ``log(p_t / p_{t-1})``.
    """
    if transform not in ("none", "log_return"):
        raise InvalidParameter(f"unknown transform {transform!r}")
    path = Path(path)
    try:
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    except csv.Error as exc:
        raise ParseError(f"malformed CSV {path}: {exc}") from exc
    if not rows:
        raise EmptySeries(f"{path} has no rows")
    header = None
    idx = _column_index(rows[0], column)
    if not _is_number(rows[0][idx] if idx < len(rows[0]) else ""):
        header = rows[0]
        idx = _column_index(header, column, header=True)
        rows = rows[1:]
    elif column is not None and not str(column).lstrip("-").isdigit():
        raise ParseError(f"{path} has no header row, so column {column!r} cannot be found")
    values = []
    for i, row in enumerate(rows, start=2 if header else 1):
        if idx >= len(row):
            raise ParseError(f"row {i} of {path} has no column {idx}")
        cell = row[idx].strip()
        try:
            x = float(cell)
        except ValueError:
            raise ParseError(f"row {i} of {path}: non-numeric value {cell!r}") from None
        if not math.isfinite(x):
            raise ParseError(f"row {i} of {path}: non-finite value {cell!r}")
        values.append(x)
    x = np.array(values)
    if transform == "log_return":
        if x.size and np.any(x <= 0):
            bad = int(np.argmax(x <= 0)) + (2 if header else 1)
            raise NonPositivePrice(f"row {bad} of {path}: price must be positive for log returns")
        x = np.diff(np.log(x))
    if x.size == 0:
        raise EmptySeries(f"{path} yields an empty series")
    name = header[idx] if header else f"column {idx}"
    return SeriesData(x * scale, meta=f"{path.name}:{name}:{transform}")


def _is_number(cell: str) -> bool:
    try:
        float(cell)
        return True
    except ValueError:
        return False


def _column_index(first_row, column, header=False) -> int:
    if column is None:
        return len(first_row) - 1
    col = str(column)
    if col.lstrip("-").isdigit():
        return int(col) % len(first_row)
    if header:
        names = [c.strip() for c in first_row]
        if col not in names:
            raise ParseError(f"column {col!r} not found; available: {names}")
        return names.index(col)
    return 0  # header check happens with the name lookup


# ---------------------------------------------------------------- config

DEFAULTS = {
    "common": {"out": "out", "seed": 0, "jobs": 1},
    "data": {"input": None, "column": None, "transform": "none", "scale": 1.0},
    "fitopts": {"order": "1,1", "max_iter": 200, "rel_tol": 1e-8, "alpha_dot": None},
    "dgp": {"order": "1,1", "theta": "0.1,0.1,0.8", "dist": ["normal"], "raw_dist": False,
            "n": 1000, "burn_in": 500},
}

COMMANDS = {
    "fit": dict(groups=("common", "data", "fitopts"),
                extra={"score": "qmle", "level": 0.95}),
    "bootstrap": dict(groups=("common", "data", "fitopts"),
                      extra={"score": "qmle", "scheme": "U", "B": 1000, "level": 0.9,
                             "ci_method": "basic"}),
    "simulate": dict(groups=("common", "dgp"), extra={}),
    "coverage": dict(groups=("common", "dgp"),
                     extra={"score": "qmle", "scheme": "M,E,U", "R": 200, "B": 500,
                            "level": "0.9", "fit_order": None}),
    "bias-mse": dict(groups=("common", "dgp"),
                     extra={"score": ",".join(ALL_SCORES), "R": 200, "fit_order": None,
                            "kind": "standardized"}),
    "misspec": dict(groups=("common", "dgp"),
                    extra={"score": ",".join(ALL_SCORES), "R": 200, "fit_order": "2,1",
                           "constrained": False}),
    "diagnose": dict(groups=("common", "data", "fitopts"),
                     extra={"score": ",".join(ALL_SCORES), "df": "4.01,3.01,12.01",
                            "qq_score": None}),
    "ch-table": dict(groups=("common",),
                     extra={"score": "huber,mu,cauchy",
                            "dist": ["normal", "de", "logistic", "t,3", "t,2.2"],
                            "raw_dist": False, "method": "quad", "samples": 10**6}),
}


def defaults_for(command: str) -> dict:
    spec = COMMANDS[command]
    out = {}
    for g in spec["groups"]:
        out.update(DEFAULTS[g])
    out.update(spec["extra"])
    return out


def list_presets() -> list:
    root = resources.files("mgarch.presets")
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".yaml"))


def load_preset(name: str) -> dict:
    res = resources.files("mgarch.presets").joinpath(f"{name}.yaml")
    if not res.is_file():
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(list_presets())}")
    return _read_yaml(res.read_text(), f"preset {name}")


def _read_yaml(text: str, what: str) -> dict:
    try:
        doc = yaml.safe_load(text) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {what}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"{what} must be a mapping of option names to values")
    return {str(k).replace("-", "_"): v for k, v in doc.items()}


def resolve_config(command: str, args: argparse.Namespace) -> dict:
    cfg = defaults_for(command)
    layers = []
    if args.preset:
        layers.append((load_preset(args.preset), f"preset {args.preset}"))
    if args.config:
        try:
            text = Path(args.config).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        layers.append((_read_yaml(text, f"config {args.config}"), f"config {args.config}"))
    for layer, what in layers:
        cmd = layer.pop("command", command)
        if cmd != command:
            raise ConfigError(f"{what} is for command {cmd!r}, not {command!r}")
        unknown = sorted(set(layer) - set(cfg))
        if unknown:
            raise ConfigError(f"{what}: unknown option(s) {', '.join(unknown)}")
        cfg.update(layer)
    for key in cfg:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    return cfg


def _as_list(value) -> list:
    if value is None:
        return []
    if isinstance(value, (list, tuple)):
        return [str(v) for v in value]
    return [s for s in (p.strip() for p in str(value).split(",")) if s]


def _dists(cfg) -> list:
    raw = cfg["dist"]
    items = [str(v) for v in raw] if isinstance(raw, (list, tuple)) else [str(raw)]
    return [ErrorDistribution.parse(d, standardized=not cfg["raw_dist"]) for d in items]


def _order(text) -> GarchOrder:
    try:
        return GarchOrder.parse(str(text))
    except (ValueError, TypeError) as exc:
        raise InvalidParameter(f"cannot parse order {text!r}") from exc


def _theta(cfg) -> ParameterVector:
    order = _order(cfg["order"])
    try:
        vals = [float(v) for v in _as_list(cfg["theta"])]
    except ValueError as exc:
        raise InvalidParameter(f"cannot parse theta {cfg['theta']!r}") from exc
    return ParameterVector.from_array(vals, order)


def _fit_config(cfg, score) -> FitConfig:
    return FitConfig(score, order=_order(cfg["order"]), alpha_dot=cfg["alpha_dot"],
                     max_iter=int(cfg["max_iter"]), rel_tol=float(cfg["rel_tol"]))


def _scores(cfg, key="score"):
    names = _as_list(cfg[key])
    if names == ["all"]:
        names = list(ALL_SCORES)
    if not names:
        raise InvalidParameter("at least one score is required")
    return [parse_score(n) for n in names]


def _load_data(cfg) -> SeriesData:
    if not cfg["input"]:
        raise ConfigError("--input is required")
    if not Path(cfg["input"]).is_file():
        raise ConfigError(f"input file {cfg['input']} does not exist")
    return ingest_csv(cfg["input"], cfg["column"], cfg["transform"], float(cfg["scale"]))


def _residual_summary(r: np.ndarray) -> dict:
    m = float(r.mean())
    s = float(r.std(ddof=1))
    z = (r - m) / s
    return {"mean": m, "std": s, "min": float(r.min()), "max": float(r.max()),
            "skewness": float(np.mean(z**3)), "kurtosis": float(np.mean(z**4))}


# ---------------------------------------------------------------- commands

def cmd_fit(cfg, out: Path):
    data = _load_data(cfg)
    order = _order(cfg["order"])
    names = order.names()
    fits, columns = [], {}
    for score in _scores(cfg):
        res = fit(data, _fit_config(cfg, score))
        entry = {"score": score.label, "converged": res.converged, "iterations": res.iterations,
                 "m_norm": res.m_norm, "at_bound": list(res.at_bound),
                 "theta_hat": res.theta_hat.as_dict(),
                 "residuals": _residual_summary(res.residuals)}
        if res.converged:
            try:
                cov = estimate_covariance(data, res, score)
                ci = normal_ci(res, cov, float(cfg["level"]))
                entry["std_errors"] = dict(zip(names, cov.std_errors(data.n)))
                entry["normal_ci"] = {nm: list(row) for nm, row in zip(names, ci)}
            except MGarchError as exc:
                entry["covariance_error"] = str(exc)
        fits.append(entry)
        columns[score.label] = res.theta_hat.array
    write_csv(out / "fit_table.csv", ["parameter", *columns],
              [[nm, *(columns[c][i] for c in columns)] for i, nm in enumerate(names)])
    result = {"n": data.n, "source": data.meta, "order": str(order), "fits": fits}
    write_json(out / "fit.json", envelope("fit", cfg["seed"], cfg, result), "fit")
    return all(f["converged"] for f in fits)


def cmd_bootstrap(cfg, out: Path):
    data = _load_data(cfg)
    scores = _scores(cfg)
    if len(scores) != 1:
        raise InvalidParameter("bootstrap takes a single score")
    score = scores[0]
    fcfg = _fit_config(cfg, score)
    res = fit(data, fcfg)
    if not res.converged:
        raise MGarchError("full-sample fit did not converge")
    names = fcfg.order.names()
    level = float(cfg["level"])
    runs, ci_rows, rep_rows = [], [], []
    for k, scheme in enumerate(_as_list(cfg["scheme"])):
        scheme = WeightScheme(scheme.upper())
        run = bootstrap_fit(data, res, fcfg, scheme, int(cfg["B"]), seed=int(cfg["seed"]) + k,
                            n_jobs=int(cfg["jobs"]))
        ci = bootstrap_ci(run, level, cfg["ci_method"])
        bias, mse = bootstrap_bias_mse(run)
        runs.append({"scheme": scheme.value, "B": run.B, "b_converged": run.b_converged,
                     "flagged": run.flagged, "sigma_n": run.sigma_n,
                     "ci": {nm: list(r) for nm, r in zip(names, ci)},
                     "bias": dict(zip(names, bias)), "mse": dict(zip(names, mse)),
                     "covariance": np.cov(run.scaled().T).tolist()})
        ci_rows += [[scheme.value, nm, level, lo, hi] for nm, (lo, hi) in zip(names, ci)]
        rep_rows += [[scheme.value, b, bool(run.converged[b]), *run.replicates[b]]
                     for b in range(run.B)]
    write_csv(out / "bootstrap_ci.csv", ["scheme", "parameter", "level", "lower", "upper"], ci_rows)
    write_csv(out / "bootstrap_replicates.csv", ["scheme", "replicate", "converged", *names],
              rep_rows)
    result = {"n": data.n, "source": data.meta, "score": score.label, "order": str(fcfg.order),
              "theta_hat": res.theta_hat.as_dict(), "ci_method": cfg["ci_method"], "level": level,
              "runs": runs}
    write_json(out / "bootstrap.json", envelope("bootstrap", cfg["seed"], cfg, result), "bootstrap")
    return True


def cmd_simulate(cfg, out: Path):
    theta = _theta(cfg)
    dists = _dists(cfg)
    if len(dists) != 1:
        raise InvalidParameter("simulate takes a single distribution")
    data = simulate_path(theta, dists[0], int(cfg["n"]), int(cfg["burn_in"]), seed=int(cfg["seed"]))
    write_csv(out / "path.csv", ["x"], ([v] for v in data.x))
    result = {"n": data.n, "theta": theta.as_dict(), "dist": dists[0].label, "file": "path.csv"}
    write_json(out / "simulate.json", envelope("simulate", cfg["seed"], cfg, result), "simulate")
    return True


def _dgp_specs(cfg, **kw):
    theta = _theta(cfg)
    fit_order = _order(cfg["fit_order"]) if cfg.get("fit_order") else None
    for j, dist in enumerate(_dists(cfg)):
        dgp = DGP(theta, dist, int(cfg["n"]), int(cfg["burn_in"]))
        yield dist, ExperimentSpec(dgp, tuple(_scores(cfg)), int(cfg["R"]), fit_order=fit_order,
                                   seed=int(cfg["seed"]) + j, n_jobs=int(cfg["jobs"]), **kw)


def cmd_coverage(cfg, out: Path):
    levels = [float(v) for v in _as_list(cfg["level"])]
    schemes = tuple(WeightScheme(s.upper()) for s in _as_list(cfg["scheme"]))
    rows, rep_rows, cells = [], [], []
    for dist, spec in _dgp_specs(cfg, B=int(cfg["B"]), schemes=schemes):
        for level in levels:
            cov = coverage_study(spec, level)
            for (est, arm), rate in cov.rates.items():
                cells.append({"dist": dist.label, "level": level, "estimator": est, "arm": arm,
                              "cH": cov.cH[est], "used": cov.used[(est, arm)],
                              "dropped": cov.dropped[(est, arm)],
                              "coverage": None if rate is None else dict(zip(cov.names, rate))})
                for i, nm in enumerate(cov.names):
                    rows.append([dist.label, level, est, arm, nm,
                                 None if rate is None else rate[i],
                                 cov.used[(est, arm)], cov.dropped[(est, arm)]])
            for r, rec in enumerate(cov.records):
                for (est, arm), hit in rec.items():
                    rep_rows.append([dist.label, level, r, est, arm, hit is not None,
                                     *(hit if hit is not None else [None] * len(cov.names))])
    write_csv(out / "coverage.csv", ["dist", "level", "estimator", "arm", "parameter",
                                     "coverage_pct", "used", "dropped"], rows)
    write_csv(out / "coverage_replicates.csv",
              ["dist", "level", "replication", "estimator", "arm", "used", *spec.fit_order.names()],
              rep_rows)
    result = {"theta0": _theta(cfg).as_dict(), "n": int(cfg["n"]), "R": int(cfg["R"]),
              "B": int(cfg["B"]), "cells": cells}
    write_json(out / "coverage.json", envelope("coverage", cfg["seed"], cfg, result), "coverage")
    return True


def _study_outputs(cfg, out: Path, command: str, runner):
    rows, rep_rows, cells = [], [], []
    names = None
    for dist, spec in _dgp_specs(cfg):
        res = runner(spec)
        names = res.names
        for label, cell in res.cells.items():
            cells.append({"dist": dist.label, "estimator": label, "cH": cell.cH,
                          "converged": cell.converged, "R": cell.R, "kind": res.kind,
                          "bias": None if cell.absent else dict(zip(names, cell.bias)),
                          "mse": None if cell.absent else dict(zip(names, cell.mse))})
            for stat in ("bias", "mse"):
                vals = getattr(cell, stat)
                rows.append([dist.label, label, res.kind, stat, cell.cH, cell.converged,
                             *(vals if vals is not None else [None] * len(names))])
        for label, t in res.tables.items():
            for r in range(t.R):
                rep_rows.append([dist.label, label, r, bool(t.converged[r]), *t.estimates[r]])
    write_csv(out / "summary.csv", ["dist", "estimator", "kind", "statistic", "cH", "converged",
                                    *names], rows)
    write_csv(out / "replicates.csv", ["dist", "estimator", "replication", "converged", *names],
              rep_rows)
    result = {"theta0": _theta(cfg).as_dict(), "fit_order": ",".join(map(str, _fit_order(cfg))),
              "n": int(cfg["n"]), "R": int(cfg["R"]), "parameters": names, "cells": cells}
    write_json(out / "summary.json", envelope(command, cfg["seed"], cfg, result), "study")
    return True


def _fit_order(cfg):
    o = _order(cfg["fit_order"]) if cfg.get("fit_order") else _order(cfg["order"])
    return (o.p, o.q)


def cmd_bias_mse(cfg, out: Path):
    if cfg["kind"] not in ("standardized", "normalized"):
        raise InvalidParameter("kind must be standardized or normalized")
    return _study_outputs(cfg, out, "bias-mse", lambda s: bias_mse_study(s, cfg["kind"]))


def cmd_misspec(cfg, out: Path):
    return _study_outputs(cfg, out, "misspec",
                          lambda s: misspecification_study(s, constrained=bool(cfg["constrained"])))


def cmd_diagnose(cfg, out: Path):
    from .plotting import qq_plot_svg, volatility_overlay_svg

    data = _load_data(cfg)
    dfs = [float(v) for v in _as_list(cfg["df"])]
    scores = _scores(cfg)
    qq_scores = _scores(cfg, "qq_score") if cfg["qq_score"] else scores[:1]
    vols, fits, qq_out = {}, {}, []
    for score in scores:
        res = fit(data, _fit_config(cfg, score))
        fits[score.label] = res
        if res.converged:
            vols[score.label] = normalized_volatility(res, data).u
    labels = list(vols)
    write_csv(out / "volatility.csv", ["t", "x2", *labels],
              ([t, data.x[t] ** 2, *(vols[lb][t] for lb in labels)] for t in range(data.n)))
    volatility_overlay_svg(vols, out / "volatility.svg", squared_returns=data.x**2)
    for score in qq_scores:
        res = fits.get(score.label) or fit(data, _fit_config(cfg, score))
        for d in dfs:
            qq = qq_against_t(res.residuals, d)
            stem = f"qq_{_slug(score.label)}_t{d:g}"
            write_csv(out / f"{stem}.csv", ["position", "reference", "residual"],
                      zip(qq.positions, qq.reference_quantiles, qq.sorted_residuals))
            qq_plot_svg(qq, out / f"{stem}.svg", title=f"{score.label} residuals vs t({d:g})")
            qq_out.append({"score": score.label, "d": d, "tail_slope": qq.tail_slope,
                           "max_cdf_deviation": qq.max_cdf_deviation(), "file": f"{stem}.svg"})
    result = {"n": data.n, "source": data.meta,
              "fits": [{"score": lb, "converged": r.converged, "theta_hat": r.theta_hat.as_dict(),
                        "u_sum": float(vols[lb].sum()) if lb in vols else None}
                       for lb, r in fits.items()],
              "qq": qq_out, "volatility_svg": "volatility.svg"}
    write_json(out / "diagnose.json", envelope("diagnose", cfg["seed"], cfg, result), "diagnose")
    return all(r.converged for r in fits.values())


def _slug(text: str) -> str:
    return "".join(c if c.isalnum() else "_" for c in text).strip("_")


def cmd_ch_table(cfg, out: Path):
    scores = _scores(cfg)
    method = cfg["method"]
    if method not in ("quad", "mc"):
        raise InvalidParameter("method must be quad or mc")
    rows, cells = [], []
    for dist in _dists(cfg):
        vals = [solve_cH(s, dist, samples=int(cfg["samples"]), seed=int(cfg["seed"]), method=method)
                for s in scores]
        rows.append([dist.label, *vals])
        cells.append({"dist": dist.label, "cH": {s.label: v for s, v in zip(scores, vals)}})
    write_csv(out / "ch_table.csv", ["dist", *(s.label for s in scores)], rows)
    result = {"method": method, "rows": cells}
    write_json(out / "ch_table.json", envelope("ch-table", cfg["seed"], cfg, result), "ch_table")
    return True


HANDLERS = {
    "fit": cmd_fit, "bootstrap": cmd_bootstrap, "simulate": cmd_simulate,
    "coverage": cmd_coverage, "bias-mse": cmd_bias_mse, "misspec": cmd_misspec,
    "diagnose": cmd_diagnose, "ch-table": cmd_ch_table,
}


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mgarch", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"mgarch {__version__}")
    parser.add_argument("--log-level", default="WARNING")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "fit": "fit GARCH models to a return series, one per score",
        "bootstrap": "weighted bootstrap of one M-estimator",
        "simulate": "simulate a GARCH path to CSV",
        "coverage": "coverage study of bootstrap and normal intervals",
        "bias-mse": "Monte Carlo bias and MSE of the M-estimators",
        "misspec": "bias and MSE when an over-specified order is fitted",
        "diagnose": "normalized volatility and QQ diagnostics with SVG figures",
        "ch-table": "table of identifiability constants c_H",
    }
    for name, spec in COMMANDS.items():
        p = sub.add_parser(name, help=helps[name])
        p.add_argument("--config", help="YAML file whose keys mirror the long flags")
        p.add_argument("--preset", help="packaged configuration, e.g. table6-desk")
        keys = defaults_for(name)
        _add(p, keys, "out", help="output directory")
        _add(p, keys, "seed", type=int)
        _add(p, keys, "jobs", type=int, help="worker processes")
        for key in ("input", "column", "scale", "order", "max_iter", "rel_tol", "theta",
                    "n", "burn_in", "R", "B", "level", "score", "scheme", "fit_order",
                    "kind", "df", "qq_score", "method", "samples", "ci_method"):
            if key in keys:
                _add(p, keys, key, type=_TYPES.get(key, str))
        if "transform" in keys:
            _add(p, keys, "transform", choices=("none", "log_return"))
        if "constrained" in keys:
            p.add_argument("--constrained", action="store_const", const=True, default=None,
                           help="keep ARCH estimates >= 0 instead of only v_t > 0 (default: False)")
        if "alpha_dot" in keys:
            _add(p, keys, "alpha_dot", type=float)
        if "dist" in keys:
            p.add_argument("--dist", nargs="+", default=None,
                           help="innovation law(s): normal, de, logistic, t,<df>")
            p.add_argument("--raw-dist", action="store_const", const=True, default=None,
                           help="use raw rather than unit-variance innovations")
    return parser


_TYPES = {"scale": float, "max_iter": int, "rel_tol": float, "n": int, "burn_in": int,
          "R": int, "B": int, "samples": int}


def _add(p, keys, key, **kw):
    flag = "--" + key.replace("_", "-")
    default = keys[key]
    help_ = kw.pop("help", None)
    text = f"{help_} " if help_ else ""
    p.add_argument(flag, dest=key, default=None, help=f"{text}(default: {default})", **kw)


def _error_doc(command, exc, code):
    return {"schema_version": "1.0", "command": command, "error": type(exc).__name__,
            "message": str(exc), "exit_code": code}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=getattr(logging, str(args.log_level).upper(), logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    command = args.command
    out = Path(args.out or "out")
    try:
        cfg = resolve_config(command, args)
        out = Path(cfg["out"])
        out.mkdir(parents=True, exist_ok=True)
        log_event(out, f"start {command} seed={cfg['seed']}")
        ok = HANDLERS[command](cfg, out)
        log_event(out, f"done {command} {'ok' if ok else 'with non-converged fits'}")
        return EXIT_OK if ok else EXIT_NUMERIC
    except (ConfigError, ValueError, MGarchError) as exc:
        err = exc
    if isinstance(err, DataError):
        code = EXIT_DATA
    elif isinstance(err, MGarchError):
        code = err.exit_code
    else:
        code = EXIT_CONFIG
    doc = _error_doc(command, err, code)
    print(json.dumps(doc), file=sys.stderr)
    try:
        write_json(out / "error.json", doc, "error")
        log_event(out, f"failed {command}: {type(err).__name__}: {err}")
    except OSError:
        pass
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
