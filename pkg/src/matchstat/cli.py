"""Command-line entry point: `matchstat <subcommand> [options]`."""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np
import scipy

from . import CapExceeded, __version__
from .census import pair_census, tuple_sums
from .counting import MemoCache, count_l_matchings_sparse, count_matchings
from .formulas import (
    ModelParams,
    beta,
    lam,
    mu_n,
    mu_n_approx,
    regime_classify,
    sigma_bar,
    z_of_i,
)
from .graph import SeedSpec, gnm_sample, gnp_sample, read_graph, write_graph
from .lab import (
    Backends,
    exact_distribution,
    gnm_mean_ratio,
    ks_vs_normal,
    limit_law_experiment,
    linear_statistics,
    log_statistics,
    mc_sample,
    moment_report,
    transition_scan,
)
from .switching import Transition, all_transitions, switching_census

EXIT_OK, EXIT_INVALID, EXIT_CAP, EXIT_IO = 0, 2, 3, 4

COMMON_DEFAULTS = {
    "format": "json",
    "out": None,
    "plot_data": None,
    "seed": 0,
    "threads": 1,
}

DEFAULTS = {
    "count": {"graph": None, "n": None, "p": None, "m": None, "l": None, "cap": 28, "save_graph": None},
    "formulas": {"n": None, "l": None, "p": None, "m": None, "delta": "9/10", "c": 1.0, "tol": 0.1},
    "pairs": {"n": None, "l": None, "cap": 4 * 10**6, "format": "csv"},
    "tuples": {"n": None, "l": None, "k": 2, "p": "1/2", "cap": 10**7},
    "verify-switching": {"n": None, "l": None, "transition": "all", "cap": 4 * 10**6},
    "mc-dist": {"model": "gnp", "n": None, "l": None, "p": None, "m": None, "trials": 1000,
                "max_p": 0.95, "sparse_max_l": 4, "poly_max_n": 28, "c": 1.0, "tol": 0.1},
    "moments": {"n": None, "l": None, "p": None, "k_max": 4, "source": "exact", "trials": 0,
                "max_p": 0.95, "sparse_max_l": 4, "poly_max_n": 28},
    "transition-scan": {"n": None, "p": None, "l_min": 1, "l_max": None, "trials": 500,
                        "max_p": 0.95, "sparse_max_l": 4, "poly_max_n": 28, "c": 1.0, "tol": 0.1, "format": "csv"},
    "exact-dist": {"n": None, "l": None, "p": "1/2"},
}

REQUIRED = {
    "formulas": ("n", "l", "p"),
    "pairs": ("n", "l"),
    "tuples": ("n", "l"),
    "verify-switching": ("n", "l"),
    "mc-dist": ("n", "l"),
    "moments": ("n", "l", "p"),
    "transition-scan": ("n", "p"),
    "exact-dist": ("n", "l"),
}


# -- output ------------------------------------------------------------------


def _plain(obj):
    """Reduce to JSON-safe values: exact numbers as decimal strings, reals to 12 significant digits."""
    if isinstance(obj, bool) or obj is None or isinstance(obj, str):
        return obj
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, Fraction):
        return str(obj.numerator) if obj.denominator == 1 else f"{obj.numerator}/{obj.denominator}"
    if isinstance(obj, (float, np.floating)):
        return format(float(obj), ".12g")
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def versions() -> dict:
    return {"matchstat": __version__, "numpy": np.__version__, "scipy": scipy.__version__}


# options that change how a run executes but never what it computes; kept out of the output
EXECUTION_ONLY = frozenset({"threads"})


def render(report: dict, fmt: str) -> str:
    """report = {command, config, result, [rows, columns]}; csv needs rows and columns."""
    report = dict(report, config={k: v for k, v in report["config"].items() if k not in EXECUTION_ONLY})
    if fmt == "json":
        payload = {k: report[k] for k in ("command", "config", "result") if k in report}
        if "rows" in report:
            payload["rows"] = [dict(zip(report["columns"], r)) for r in report["rows"]]
        payload["version"] = versions()
        return json.dumps(_plain(payload), sort_keys=True, indent=2) + "\n"
    if fmt == "csv":
        if "rows" not in report:
            raise ValueError(f"{report['command']} has no tabular output; use --format json")
        buf = io.StringIO()
        buf.write(f"# command={report['command']}\n")
        for k, v in sorted(_plain(report["config"]).items()):
            buf.write(f"# {k}={json.dumps(v)}\n")
        for k, v in sorted(versions().items()):
            buf.write(f"# version.{k}={v}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(report["columns"])
        for row in report["rows"]:
            w.writerow(["" if v is None else _plain(v) for v in row])
        return buf.getvalue()
    raise ValueError(f"unknown format {fmt!r}")


def emit(report: dict, fmt: str, path=None) -> None:
    text = render(report, fmt)
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def write_plot_data(path, series: dict[str, list[tuple]]) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["series", "x", "y"])
    for name in sorted(series):
        for x, y in series[name]:
            w.writerow([name, _plain(x), _plain(y)])
    Path(path).write_text(buf.getvalue())


# -- config ------------------------------------------------------------------


def _fraction(text) -> Fraction:
    try:
        return Fraction(str(text))
    except (ValueError, ZeroDivisionError):
        raise ValueError(f"not a number: {text!r}") from None


def resolve_config(command: str, flags: dict, config_path: str | None) -> dict:
    """flags > --config JSON > defaults."""
    cfg = dict(COMMON_DEFAULTS)
    cfg.update(DEFAULTS[command])
    if config_path:
        try:
            data = json.loads(Path(config_path).read_text())
        except json.JSONDecodeError as exc:
            raise ValueError(f"config file {config_path} is not valid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise ValueError("config file must hold a JSON object")
        unknown = set(data) - set(cfg)
        if unknown:
            raise ValueError(f"unknown config keys for {command}: {sorted(unknown)}")
        cfg.update(data)
    for k, v in flags.items():
        if v is not None:
            cfg[k] = v
    for k in REQUIRED.get(command, ()):
        if cfg.get(k) is None:
            raise ValueError(f"{command} needs --{k.replace('_', '-')}")
    if cfg["format"] not in ("json", "csv"):
        raise ValueError("format must be json or csv")
    return cfg


def _params(cfg, p=None) -> ModelParams:
    return ModelParams(int(cfg["n"]), int(cfg["l"]), float(_fraction(cfg["p"] if p is None else p)),
                       None if cfg.get("m") is None else int(cfg["m"]))


def _backends(cfg) -> Backends:
    return Backends(int(cfg["sparse_max_l"]), int(cfg["poly_max_n"]))


# -- subcommands -------------------------------------------------------------


def _memo_path(g) -> Path | None:
    root = os.environ.get("MATCHSTAT_CACHE_DIR")
    if not root:
        return None
    digest = hashlib.sha256(f"{g.n}:{g.bits:x}".encode()).hexdigest()[:32]
    return Path(root) / f"memo-{digest}.json"


def cmd_count(cfg):
    if cfg["graph"]:
        g = read_graph(cfg["graph"])
    elif cfg["n"] is not None and (cfg["p"] is not None or cfg["m"] is not None):
        n = int(cfg["n"])
        spec = SeedSpec(int(cfg["seed"]))
        g = gnm_sample(n, int(cfg["m"]), spec) if cfg["m"] is not None else gnp_sample(n, float(_fraction(cfg["p"])), spec)
    else:
        raise ValueError("count needs --graph FILE or --n with --p or --m")
    if cfg["save_graph"]:
        write_graph(g, cfg["save_graph"])
    result: dict = {"n": g.n, "edges": g.num_edges}
    if cfg["l"] is not None and int(cfg["l"]) <= 4 and g.n > int(cfg["cap"]):
        result["counts"] = {str(cfg["l"]): count_l_matchings_sparse(g, int(cfg["l"]))}
    else:
        memo_file = _memo_path(g)
        cache = MemoCache()
        if memo_file is not None and memo_file.exists():
            cache.table = {int(k): tuple(v) for k, v in json.loads(memo_file.read_text()).items()}
        cv = count_matchings(g, cap=int(cfg["cap"]), cache=cache)
        if memo_file is not None:
            memo_file.parent.mkdir(parents=True, exist_ok=True)
            memo_file.write_text(json.dumps({str(k): list(v) for k, v in sorted(cache.table.items())}))
        result["counts"] = cv.as_list()
    rows = None
    if isinstance(result["counts"], list):
        rows = [(k, c) for k, c in enumerate(result["counts"])]
    out = {"command": "count", "config": cfg, "result": result}
    if rows is not None:
        out.update(columns=["k", "count"], rows=rows)
    return out


def cmd_formulas(cfg):
    params = _params(cfg)
    delta = _fraction(cfg["delta"])
    res = {
        "s": params.s,
        "lambda": float(lam(params)),
        "log_lambda": lam(params).log,
        "sigma_bar": float(sigma_bar(params)),
        "log_sigma_bar": sigma_bar(params).log,
        "beta": beta(params),
    }
    if params.m is not None:
        exact = mu_n(params, params.s, params.ell)
        approx = mu_n_approx(params, params.s, params.ell) if params.m else None
        res["mu"] = {"exact": float(exact), "log_exact": exact.log,
                     "approx": None if approx is None else float(approx),
                     "log_approx": None if approx is None else approx.log}
    z = []
    i = 0
    while i <= delta * params.ell and 2 * i < params.n:
        z.append({"i": i, "z": z_of_i(params.n, params.ell, i)})
        i += 1
    res["z"] = z
    rep = regime_classify(params, float(cfg["c"]), float(cfg["tol"]))
    res["regime"] = {"ratio": rep.ratio, "classification": rep.classification, "c": rep.c, "tol": rep.tol}
    return {"command": "formulas", "config": cfg, "result": res}


def cmd_pairs(cfg):
    t = pair_census(int(cfg["n"]), int(cfg["l"]), cap=int(cfg["cap"]))
    return {
        "command": "pairs",
        "config": cfg,
        "result": {"marginals": t.marginals, "total": t.total},
        "columns": ["i", "n2", "count"],
        "rows": t.rows(),
    }


def cmd_tuples(cfg):
    n, ell, k = int(cfg["n"]), int(cfg["l"]), int(cfg["k"])
    p = _fraction(cfg["p"])
    ts = tuple_sums(n, ell, k, cap=int(cfg["cap"]))
    res = {
        "count_K": ts.count_K,
        "count_K_prime": ts.count_K_prime,
        "central_moment": ts.moment(p),
        "central_moment_float": float(ts.moment(p)),
        "check_p_sum_K": float(sum(c * p**e for e, c in ts.check_p_K.items())),
        "check_p_sum_K_prime": float(sum(c * p**e for e, c in ts.check_p_K_prime.items())),
    }
    if k % 2:
        res["count_K_prime_flower"] = ts.count_K_prime_0
        res["count_K_prime_chained"] = ts.count_K_prime_1
    return {"command": "tuples", "config": cfg, "result": res}


def cmd_verify_switching(cfg):
    n, ell = int(cfg["n"]), int(cfg["l"])
    if cfg["transition"] == "all":
        wanted = all_transitions(n, ell)
    else:
        wanted = [Transition.parse(cfg["transition"])]
    census = switching_census(n, ell, int(cfg["cap"]))
    checks = []
    for t in wanted:
        lhs, rhs = census.lhs.get(t, 0), census.rhs.get(t, 0)
        checks.append({
            "transition": t.label(),
            "lhs": lhs,
            "rhs": rhs,
            "equal": lhs == rhs,
            "source_pairs": census.class_sizes.get(t, 0),
            "fwd_histogram": {str(c): v for c, v in sorted(census.fwd_hist.get(t, {}).items())},
            "inv_histogram": {str(c): v for c, v in sorted(census.inv_hist.get(t, {}).items())},
        })
    res = {"checks": checks, "equal": all(c["equal"] for c in checks)}
    rows = [(c["transition"], c["lhs"], c["rhs"], c["equal"]) for c in checks]
    return {"command": "verify-switching", "config": cfg, "result": res,
            "columns": ["transition", "lhs", "rhs", "equal"], "rows": rows}


def _ecdf(values):
    xs = sorted(values)
    m = len(xs)
    return [(x, (j + 1) / m) for j, x in enumerate(xs)]


def cmd_mc_dist(cfg):
    n, ell = int(cfg["n"]), int(cfg["l"])
    model = cfg["model"]
    p = None if cfg["p"] is None else float(_fraction(cfg["p"]))
    m = None if cfg["m"] is None else int(cfg["m"])
    ss = mc_sample(model, n, ell, int(cfg["trials"]), int(cfg["seed"]), p=p, m=m, threads=int(cfg["threads"]),
                   backends=_backends(cfg), max_p=float(cfg["max_p"]))
    x = np.array(ss.counts, dtype=float)
    res: dict = {
        "trials": ss.trials,
        "backend": ss.backend,
        "zero_count": ss.zero_count,
        "mean": float(x.mean()) if x.size else None,
        "std": float(x.std(ddof=1)) if x.size > 1 else None,
    }
    series = {"counts_ecdf": _ecdf(ss.counts)}
    if model == "gnm" and ss.trials > 1:
        ratio, se = gnm_mean_ratio(ss)
        res["mean_over_mu"] = ratio
        res["mean_over_mu_se"] = se
    if model == "gnp" and ss.trials >= 20:
        params = ModelParams(n, ell, p)
        lin = linear_statistics(ss.counts, params)
        logs = log_statistics(ss.counts, params)
        res["ks_normal"] = ks_vs_normal(lin).D
        res["ks_lognormal"] = ks_vs_normal(logs).D if logs.size >= 20 else None
        res["regime"] = regime_classify(params, float(cfg["c"]), float(cfg["tol"])).classification
        series["linear_ecdf"] = _ecdf(lin.tolist())
        series["log_ecdf"] = _ecdf(logs.tolist())
    if cfg["plot_data"]:
        write_plot_data(cfg["plot_data"], series)
    return {"command": "mc-dist", "config": cfg, "result": res, "columns": ["trial", "count"],
            "rows": list(enumerate(ss.counts))}


def cmd_moments(cfg):
    rep = moment_report(int(cfg["n"]), int(cfg["l"]), _fraction(cfg["p"]), int(cfg["k_max"]), cfg["source"],
                        trials=int(cfg["trials"]), seed=int(cfg["seed"]), threads=int(cfg["threads"]),
                        max_p=float(cfg["max_p"]), backends=_backends(cfg))
    rows = [(r.k, r.measured, r.theory, r.ratio, r.std_error, r.exact) for r in rep.rows]
    if cfg["plot_data"]:
        write_plot_data(cfg["plot_data"], {"ratio": [(r.k, r.ratio) for r in rep.rows]})
    return {"command": "moments", "config": cfg, "result": {"source": rep.source},
            "columns": ["k", "measured", "theory", "ratio", "std_error", "exact"], "rows": rows}


def cmd_transition_scan(cfg):
    n = int(cfg["n"])
    l_max = n // 2 if cfg["l_max"] is None else int(cfg["l_max"])
    ells = range(int(cfg["l_min"]), l_max + 1)
    rows = transition_scan(n, float(_fraction(cfg["p"])), ells, int(cfg["trials"]), int(cfg["seed"]),
                           threads=int(cfg["threads"]), backends=_backends(cfg), max_p=float(cfg["max_p"]),
                           regime_c=float(cfg["c"]), regime_tol=float(cfg["tol"]))
    table = [(r.ell, r.ratio, r.regime, r.skewness, r.ks_normal, r.ks_lognormal, r.zero_fraction) for r in rows]
    if cfg["plot_data"]:
        write_plot_data(cfg["plot_data"], {
            "ks_normal": [(r.ell, r.ks_normal) for r in rows],
            "ks_lognormal": [(r.ell, r.ks_lognormal) for r in rows if r.ks_lognormal is not None],
            "skewness": [(r.ell, r.skewness) for r in rows],
        })
    return {"command": "transition-scan", "config": cfg, "result": {"rows": len(rows)},
            "columns": ["l", "ratio", "regime", "skewness", "ks_normal", "ks_lognormal", "zero_fraction"],
            "rows": table}


def cmd_exact_dist(cfg):
    d = exact_distribution(int(cfg["n"]), int(cfg["l"]), _fraction(cfg["p"]))
    rows = [(x, q, float(q)) for x, q in sorted(d.support.items())]
    res = {"mean": d.mean(), "variance": d.central_moment(2), "total": d.total()}
    return {"command": "exact-dist", "config": cfg, "result": res,
            "columns": ["x", "probability", "probability_float"], "rows": rows}


COMMANDS = {
    "count": cmd_count,
    "formulas": cmd_formulas,
    "pairs": cmd_pairs,
    "tuples": cmd_tuples,
    "verify-switching": cmd_verify_switching,
    "mc-dist": cmd_mc_dist,
    "moments": cmd_moments,
    "transition-scan": cmd_transition_scan,
    "exact-dist": cmd_exact_dist,
}


# -- argument parsing ---------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="matchstat", description=__doc__)
    ap.add_argument("--version", action="version", version=f"matchstat {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON file with option values (flags override it)")
        sp.add_argument("--format", choices=["json", "csv"])
        sp.add_argument("--out", help="write output here instead of stdout")
        sp.add_argument("--plot-data", dest="plot_data", help="write (series, x, y) CSV for plotting")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--threads", type=int)
        return sp

    def nl(sp):
        sp.add_argument("--n", type=int)
        sp.add_argument("--l", type=int)

    sp = common(sub.add_parser("count", help="matching counts of a graph file or a sampled graph"))
    nl(sp)
    sp.add_argument("--graph")
    sp.add_argument("--p")
    sp.add_argument("--m", type=int)
    sp.add_argument("--cap", type=int)
    sp.add_argument("--save-graph", dest="save_graph")

    sp = common(sub.add_parser("formulas", help="closed-form quantities for (n, l, p[, m])"))
    nl(sp)
    sp.add_argument("--p")
    sp.add_argument("--m", type=int)
    sp.add_argument("--delta")
    sp.add_argument("--c", type=float)
    sp.add_argument("--tol", type=float)

    sp = common(sub.add_parser("pairs", help="exact f(i, n2) census"))
    nl(sp)
    sp.add_argument("--cap", type=int)

    sp = common(sub.add_parser("tuples", help="K / K' counts and exact central moment by tuple sums"))
    nl(sp)
    sp.add_argument("--k", type=int)
    sp.add_argument("--p")
    sp.add_argument("--cap", type=int)

    sp = common(sub.add_parser("verify-switching", help="double-counting identities of the switchings"))
    nl(sp)
    sp.add_argument("--transition", help="'i:A-B', 'n2:I:A-B' or 'all'")
    sp.add_argument("--cap", type=int)

    def mc_opts(sp):
        sp.add_argument("--trials", type=int)
        sp.add_argument("--max-p", dest="max_p", type=float)
        sp.add_argument("--sparse-max-l", dest="sparse_max_l", type=int)
        sp.add_argument("--poly-max-n", dest="poly_max_n", type=int)

    sp = common(sub.add_parser("mc-dist", help="Monte Carlo sample of the count"))
    nl(sp)
    sp.add_argument("--model", choices=["gnp", "gnm"])
    sp.add_argument("--p")
    sp.add_argument("--m", type=int)
    sp.add_argument("--c", type=float)
    sp.add_argument("--tol", type=float)
    mc_opts(sp)

    sp = common(sub.add_parser("moments", help="central moments against the normal-limit prediction"))
    nl(sp)
    sp.add_argument("--p")
    sp.add_argument("--k-max", dest="k_max", type=int)
    sp.add_argument("--source", choices=["exact", "mc", "identity"])
    mc_opts(sp)

    sp = common(sub.add_parser("transition-scan", help="skewness and KS distances across l"))
    sp.add_argument("--n", type=int)
    sp.add_argument("--p")
    sp.add_argument("--l-min", dest="l_min", type=int)
    sp.add_argument("--l-max", dest="l_max", type=int)
    sp.add_argument("--c", type=float)
    sp.add_argument("--tol", type=float)
    mc_opts(sp)

    sp = common(sub.add_parser("exact-dist", help="exact law by enumerating every graph (n <= 7)"))
    nl(sp)
    sp.add_argument("--p")
    return ap


def run(argv=None) -> int:
    ap = build_parser()
    try:
        ns = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    flags = {k: v for k, v in vars(ns).items() if k not in ("command", "config")}
    try:
        cfg = resolve_config(ns.command, flags, ns.config)
        report = COMMANDS[ns.command](cfg)
        emit(report, cfg["format"], cfg["out"])
    except CapExceeded as exc:
        print(f"matchstat: cap exceeded: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (ValueError, TypeError) as exc:
        print(f"matchstat: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"matchstat: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
