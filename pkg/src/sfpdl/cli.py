"""Command-line entry point: ``sfpdl {estimate,montecarlo,ortho,fixture}``.

Settings come from an optional ``key = value`` file (``--config``) and are
overridden by command-line flags. Exit codes: 0 success, 2 configuration
error, 3 data error, 4 numerical failure, 1 anything else.
"""
from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace

from . import __version__
from . import io as sio
from .errors import ConfigError, DataError, SfpdlError
from .frontier import expand_spec
from .lasso import PenaltyPlan
from .mle import MleOptions

EXIT_OK, EXIT_OTHER, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3, 4

DEFAULTS = {
    "estimate": {"method": "cols", "selector": "pdl", "penalty": "plugin", "cross_fit": "false", "compare": "false",
                 "form": "cobb-douglas", "second_order_optional": "false", "efficiency": "jlms", "seed": "0",
                 "folds": "10", "out": "estimate_report.csv"},
    "montecarlo": {"kind": "irrelevant_z", "n": "400", "c": "0", "reps": "1000", "estimators": "OLS", "seed": "0",
                   "penalty": "", "workers": str(os.cpu_count() or 1), "out": "mc_out"},
    "ortho": {"n": "1000000", "seed": "0", "h": "1e-4", "z_mean": "0", "out": "ortho_report.txt"},
    "fixture": {"n": "600", "seed": "0", "positive_skew": "false", "out": "fixture"},
}


def _flag(v) -> bool:
    s = str(v).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off", ""):
        return False
    raise ConfigError(f"expected a boolean, got {v!r}")


def _int(v, key):
    try:
        return int(float(v)) if float(v).is_integer() else int(v)
    except (TypeError, ValueError):
        raise ConfigError(f"{key} must be an integer, got {v!r}") from None


def _float(v, key):
    try:
        return float(v)
    except (TypeError, ValueError):
        raise ConfigError(f"{key} must be a number, got {v!r}") from None


def _list(v, conv, key):
    return [conv(s.strip(), key) for s in str(v).split(",") if s.strip()]


def parse_penalty(text: str, seed: int = 0, folds: int = 10) -> PenaltyPlan:
    """``cv1se | cvmin | plugin | fixed=<level>`` to a plan (mask filled in later)."""
    text = text.strip().lower()
    if text.startswith("fixed="):
        return PenaltyPlan(rule="fixed", level=_float(text.split("=", 1)[1], "penalty"), seed=seed, folds=folds)
    if text in ("cv1se", "cvmin", "plugin"):
        return PenaltyPlan(rule=text, seed=seed, folds=folds)
    raise ConfigError(f"penalty must be cv1se, cvmin, plugin or fixed=<x>, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sfpdl", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="key = value settings file; flags override it")
        sp.add_argument("--seed", help="random seed")
        sp.add_argument("--out", help="output file or directory")

    e = sub.add_parser("estimate", help="fit a frontier to a CSV file")
    common(e)
    e.add_argument("--input", help="CSV file with a header row")
    e.add_argument("--schema", help="CSV file mapping column -> role")
    e.add_argument("--method", choices=["cols", "mle"])
    e.add_argument("--selector", choices=["none", "all", "psl", "pdl"])
    e.add_argument("--penalty", help="cv1se | cvmin | plugin | fixed=<x>")
    e.add_argument("--cross-fit", dest="cross_fit", action="store_const", const="true")
    e.add_argument("--compare", action="store_const", const="true",
                   help="run all selectors with both second stages and print a wide table")
    e.add_argument("--form", choices=["cobb-douglas", "translog"])
    e.add_argument("--second-order-optional", dest="second_order_optional", action="store_const", const="true")
    e.add_argument("--efficiency", choices=["jlms", "bc"])
    e.add_argument("--folds")

    m = sub.add_parser("montecarlo", help="run a simulation design")
    common(m)
    m.add_argument("--kind", choices=["irrelevant_z", "belloni_d1"])
    m.add_argument("--n", help="sample size(s), comma separated")
    m.add_argument("--c", help="share(s) of irrelevant covariates, comma separated")
    m.add_argument("--reps")
    m.add_argument("--estimators", help="comma separated estimator chains")
    m.add_argument("--penalty", help="cv1se | cvmin | plugin | fixed=<x>")
    m.add_argument("--workers")

    o = sub.add_parser("ortho", help="simulation checks of the orthogonality conditions")
    common(o)
    o.add_argument("--n", help="simulation sample size")
    o.add_argument("--h", help="finite-difference step")
    o.add_argument("--z-mean", dest="z_mean")

    f = sub.add_parser("fixture", help="write a synthetic dairy-shaped CSV and schema")
    common(f)
    f.add_argument("--n")
    f.add_argument("--positive-skew", dest="positive_skew", action="store_const", const="true")
    return p


def resolve(args: argparse.Namespace) -> dict:
    cfg = dict(DEFAULTS[args.command])
    if args.config:
        try:
            cfg.update(sio.parse_config(args.config))
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
    for k, v in vars(args).items():
        if k not in ("command", "config") and v is not None:
            cfg[k] = v
    cfg["command"] = args.command
    return cfg


def _meta(cfg: dict) -> dict:
    settings = {k: v for k, v in cfg.items() if k not in ("out", "workers")}
    return {"seed": cfg.get("seed", ""), "version": __version__, "config_digest": sio.config_digest(settings)}


def run_estimate(cfg: dict, stdout=None):
    stdout = stdout or sys.stdout
    from .selectors import cross_fit, estimate

    for key in ("input", "schema"):
        if not cfg.get(key):
            raise ConfigError(f"estimate needs {key}")
    schema = sio.read_schema(cfg["schema"])
    raw = sio.load_csv(cfg["input"], schema)
    spec = sio.spec_from_schema(schema, cfg["form"], _flag(cfg["second_order_optional"]))
    data = expand_spec(raw, spec)
    seed = _int(cfg["seed"], "seed")
    plan = parse_penalty(cfg["penalty"], seed, _int(cfg["folds"], "folds"))
    opts = MleOptions(seed=seed)
    eff = cfg["efficiency"]

    def one(selector, method):
        if _flag(cfg["cross_fit"]) and selector in ("psl", "pdl"):
            fit = cross_fit(data, plan, method, selector, seed=seed, mle_opts=opts, efficiency_method=eff)
        else:
            fit = estimate(data, selector, method, plan, opts, eff)
        return sio.EstimateReport.from_fit(fit, spec, seed)

    meta = _meta(cfg)
    if _flag(cfg["compare"]):
        reports = [one(s, m) for m in ("cols", "mle") for s in ("none", "all", "psl", "pdl")]
        header, body = sio.comparison_table(reports)
        stdout.write(sio.format_table(header, body))
        sio.write_table(cfg["out"], header, body, meta)
        return reports
    report = one(cfg["selector"], cfg["method"])
    stdout.write(report.to_text())
    report.write_csv(cfg["out"], meta)
    return report


def run_montecarlo(cfg: dict, stdout=None):
    stdout = stdout or sys.stdout
    from .montecarlo import McDesign, grid_table, run_design

    seed = _int(cfg["seed"], "seed")
    ns = _list(cfg["n"], _int, "n")
    cs = _list(cfg["c"], _float, "c")
    estimators = tuple(s.strip() for s in cfg["estimators"].split(",") if s.strip())
    plan = parse_penalty(cfg["penalty"], seed) if cfg.get("penalty") else None
    if plan is not None and plan.rule in ("cv1se", "cvmin"):
        plan = replace(plan, cv_tol=1e-5, cv_patience=10)
    try:
        base = McDesign(cfg["kind"], ns[0], cs[0], _int(cfg["reps"], "reps"), seed, estimators, plan=plan,
                        workers=_int(cfg["workers"], "workers"),
                        parameter="x1")
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    out = sio.ensure_dir(cfg["out"])
    meta = _meta(cfg)
    results = {}
    for n in ns:
        for c in cs:
            cell = replace(base, n=n, c=c)
            try:
                summ = run_design(cell)
            except SfpdlError as exc:
                raise type(exc)(f"design cell n={n}, c={c}: {exc}") from exc
            results[(n, c)] = summ
            tag = f"n{n}_c{c:g}"
            summ.write_summary(out / f"summary_{tag}.csv", {**meta, "cell": tag, "reps": cell.reps})
            summ.write_records(out / f"records_{tag}.csv", {**meta, "cell": tag, "reps": cell.reps})
            stdout.write(f"cell {tag}: " + ", ".join(
                f"{e} skew={sio.fmt3(summ.cells.get((e, 'skewness'), {}).get('mean'))} "
                f"wrong_skew={summ.cells.get((e, 'wrong_skew'), {}).get('count', '')} "
                f"failures={summ.failures(e)}" for e in estimators) + "\n")
    for est in estimators:
        for stat, use in (("skewness", "mean"), ("wrong_skew", "count")):
            ns_, cs_, vals = grid_table(results, est, stat, use)
            header = ["n"] + [f"c={c:g}" for c in cs_]
            fmt = sio.fmt3 if use == "mean" else (lambda x: "nan" if x != x else str(int(x)))
            body = [[str(n)] + [fmt(v) for v in row] for n, row in zip(ns_, vals)]
            sio.write_table(out / f"grid_{est}_{stat}.csv", header, body,
                            {**meta, "estimator": est, "statistic": f"{stat} ({use})"})
    return results


def run_ortho(cfg: dict, stdout=None):
    stdout = stdout or sys.stdout
    from .ortho import OrthoDGP, full_report, ortho_sample

    n = _int(cfg["n"], "n")
    dgp = OrthoDGP(z_mean=_float(cfg["z_mean"], "z_mean"))
    sample = ortho_sample(n, dgp, _int(cfg["seed"], "seed"))
    report = full_report(sample, _float(cfg["h"], "h"))
    text = report.to_text()
    stdout.write(text)
    with open(cfg["out"], "w") as fh:
        for k, v in _meta(cfg).items():
            fh.write(f"# {k}: {v}\n")
        fh.write(text)
    return report


def run_fixture(cfg: dict, stdout=None):
    stdout = stdout or sys.stdout
    from .montecarlo import gen_dairy_like

    cols, roles = gen_dairy_like(_int(cfg["n"], "n"), _int(cfg["seed"], "seed"), _flag(cfg["positive_skew"]))
    out = sio.ensure_dir(cfg["out"])
    sio.write_csv(out / "data.csv", cols)
    sio.write_schema(out / "schema.csv", roles)
    stdout.write(f"wrote {out / 'data.csv'} and {out / 'schema.csv'}\n")
    return out


RUNNERS = {"estimate": run_estimate, "montecarlo": run_montecarlo, "ortho": run_ortho, "fixture": run_fixture}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve(args)
        RUNNERS[args.command](cfg)
    except ConfigError as exc:
        print(f"sfpdl: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, OSError) as exc:
        print(f"sfpdl: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except SfpdlError as exc:
        print(f"sfpdl: numerical failure ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except Exception as exc:  # noqa: BLE001 - last-resort diagnostic
        print(f"sfpdl: unexpected error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_OTHER
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
