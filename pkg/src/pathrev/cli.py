"""Command-line entry point: ``pathrev <command> ...``.

Exit codes: 0 success, 1 replay mismatch, 2 usage, 3 invariant violation,
4 liveness failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence

from . import __version__
from . import analysis, combinat, queueing, reproduce
from .protocol.node import ProtocolViolation
from .protocol.simulator import SimConfig, batch_means, run_arbitrary_network, run_simulation
from .protocol.topology import TopologyError, parse_topology

log = logging.getLogger("pathrev")

EXIT_OK, EXIT_MISMATCH, EXIT_USAGE, EXIT_INVARIANT, EXIT_LIVENESS = 0, 1, 2, 3, 4
ENV_PREFIX = "PATHREV_"


class UsageError(Exception):
    pass


class Result:
    """What a command produced: a JSON-able object plus a CSV rendering."""

    def __init__(self, data, header: Sequence[str], rows, text: Optional[str] = None,
                 status: int = EXIT_OK):
        self.data = data
        self.header = list(header)
        self.rows = [list(r) for r in rows]
        self.text = text
        self.status = status

    def render(self, fmt: str) -> str:
        if fmt == "json":
            return json.dumps(self.data, sort_keys=True, indent=2) + "\n"
        if fmt == "csv":
            buf = io.StringIO()
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(self.header)
            w.writerows(self.rows)
            return buf.getvalue()
        if self.text is not None:
            return self.text + "\n"
        # text falls back to an aligned table of the csv rows
        cells = [self.header] + [[str(c) for c in r] for r in self.rows]
        widths = [max(len(str(r[i])) for r in cells) for i in range(len(self.header))]
        return "\n".join("  ".join(str(c).rjust(w) for c, w in zip(r, widths))
                         for r in cells) + "\n"


def _float_list(text: str) -> List[float]:
    return [float(x) for x in text.split(",") if x]


def _int_list(text: str) -> List[int]:
    return [int(x) for x in text.split(",") if x]


# ---------------------------------------------------------------------------
# analyze

def cmd_analyze_dist(a) -> Result:
    if a.method == "recurrence":
        dist = analysis.cost_distribution_recurrence(a.n)
    else:
        dist = analysis.cost_distribution_pgf(a.n, n1_convention=a.convention)
    rows = list(dist.rows())
    data = {"n": a.n, "method": a.method,
            "probs": {str(k): str(p) for k, p in sorted(dist.probs.items())},
            "mean": str(dist.mean()), "variance": str(dist.variance())}
    return Result(data, ("n", "k", "p_num", "p_den"), rows)


def cmd_analyze_moments(a) -> Result:
    m = analysis.moments(a.n)
    approx_mean, approx_var = analysis.asymptotic_moments(a.n)
    d = m.as_dict()
    data = dict(d, asymptotic_mean=approx_mean, asymptotic_var=approx_var)
    keys = ("n", "mean", "variance", "mean_float", "var_float")
    return Result(data, keys, [[d[k] for k in keys]])


def cmd_analyze_stirling(a) -> Result:
    rows = []
    for n in range(1, a.n + 1):
        count = analysis.cycle_distribution(n).get(2, 0)
        expected = math.factorial(n - 1) * analysis.harmonic(n - 1).h
        rows.append([n, count, str(expected), analysis.stirling_cycle_check(n, a.limit)])
    data = [dict(zip(("n", "count", "expected", "ok"), r)) for r in rows]
    status = EXIT_OK if all(r[3] for r in rows) else EXIT_INVARIANT
    return Result(data, ("n", "count", "expected", "ok"), rows, status=status)


def cmd_analyze_normality(a) -> Result:
    zmean, zvar = analysis.normality_diagnostic(a.n, a.samples, a.seed)
    skew = analysis.cost_distribution_pgf(a.n).skewness()
    data = {"n": a.n, "samples": a.samples, "seed": a.seed,
            "standardized_mean": zmean, "standardized_var": zvar, "exact_skewness": skew}
    keys = ("n", "samples", "seed", "standardized_mean", "standardized_var", "exact_skewness")
    return Result(data, keys, [[data[k] for k in keys]])


# ---------------------------------------------------------------------------
# simulate

def _sim_config(a, seed: int) -> SimConfig:
    topo = None
    if a.topology != "complete":
        topo = parse_topology(a.topology, a.n, seed)
    return SimConfig(n=a.n, mode=a.mode, lam=a.lam, sigma=a.sigma,
                     delay=tuple(a.delta) if len(a.delta) == 2 else a.delta[0],
                     requests=a.requests,
                     max_time=math.inf if a.max_time is None else a.max_time,
                     seed=seed, topology=topo)


def _run_one(args_and_seed):
    a, seed = args_and_seed
    cfg = _sim_config(a, seed)
    rep = run_arbitrary_network(cfg) if cfg.topology is not None else run_simulation(cfg)
    return rep


def _sim_status(rep, strict_bounds: bool) -> int:
    if rep.safety_violations or rep.order_violations:
        return EXIT_INVARIANT
    if rep.ungranted:
        return EXIT_LIVENESS
    if strict_bounds and (rep.bound_violations or rep.diameter_violations):
        return EXIT_INVARIANT
    return EXIT_OK


def cmd_simulate(a) -> Result:
    if len(a.delta) not in (1, 2):
        raise UsageError("--delta takes one value or a min,max pair")
    if a.replications <= 1:
        rep = _run_one((a, a.seed))
        data = rep.to_dict()
        return Result(data, rep.CSV_HEADER, rep.csv_rows(),
                      status=_sim_status(rep, a.strict_bounds))
    seeds = [a.seed + i for i in range(a.replications)]
    jobs = [(a, s) for s in seeds]
    if a.jobs > 1:
        with ProcessPoolExecutor(max_workers=a.jobs) as pool:
            reports = list(pool.map(_run_one, jobs))
    else:
        reports = [_run_one(j) for j in jobs]
    # reduce in seed order so the result does not depend on scheduling
    pairs = sorted(zip(seeds, reports), key=lambda p: p[0])
    summaries = []
    status = EXIT_OK
    for s, rep in pairs:
        summ = dict(rep.summary(), seed=s)
        summaries.append(summ)
        status = max(status, _sim_status(rep, a.strict_bounds))
    means = [x["mean_messages"] for x in summaries]
    waits = [x["mean_wait"] for x in summaries]
    pooled = {"replications": len(summaries),
              "mean_messages": batch_means(means, len(means))[0],
              "se_messages_between": batch_means(means, len(means))[1],
              "mean_wait": batch_means(waits, len(waits))[0],
              "se_wait_between": batch_means(waits, len(waits))[1]}
    keys = ("seed", "requests", "granted", "mean_messages", "se_messages", "max_messages",
            "mean_wait", "se_wait", "safety_violations", "ungranted")
    data = {"config": reports[0].config, "replications": summaries, "pooled": pooled}
    return Result(data, keys, [[x[k] for k in keys] for x in summaries], status=status)


# ---------------------------------------------------------------------------
# queue / bijection

def _num(text: str, exact: bool):
    return Fraction(text) if exact else float(text)


def cmd_queue_eval(a) -> Result:
    m = queueing.QueueModel(a.n, _num(a.lam, a.exact), _num(a.sigma, a.exact),
                            _num(a.delta, a.exact))
    data = queueing.evaluate(m)
    rows = [[k, p] for k, p in enumerate(data["P"])]
    return Result(data, ("k", "P_k"), rows)


def cmd_bijection_check(a) -> Result:
    if a.n > 8:
        raise UsageError("exhaustive check is limited to n <= 8")
    rows = []
    results = [combinat.exhaustive_roundtrip(n) for n in range(1, a.n + 1)]
    for r in results:
        rows.append([r.n, r.cases, r.gamma_ok, r.tau_distinct, r.alpha_ok, r.alpha_distinct, r.ok])
    last = results[-1]
    ok = all(r.ok for r in results)
    text = (f"{'OK' if ok else 'FAIL'}: {min(last.gamma_ok, last.alpha_ok)}/{last.cases} roundtrips")
    header = ("n", "cases", "gamma_ok", "tau_distinct", "alpha_ok", "alpha_distinct", "ok")
    data = [dict(zip(header, r)) for r in rows]
    return Result(data, header, rows, text=text, status=EXIT_OK if ok else EXIT_INVARIANT)


# ---------------------------------------------------------------------------
# reproduce

def _figures(a, fn: Callable[[], List[str]]) -> List[str]:
    if not a.figures:
        return []
    return [os.path.relpath(p, a.figures) for p in fn()]


def cmd_reproduce(a) -> Result:
    if a.target == "theorem31":
        ns = a.n or [16]
        rows = reproduce.theorem31(ns, a.requests or 200000, a.seed)
        figs = []
        if a.figures:
            from . import plotting
            n_hist = ns[-1]
            hist = reproduce.message_histogram(n_hist, min(a.requests or 200000, 50000), a.seed)
            figs = _figures(a, lambda: plotting.theorem31_figure(rows, hist, n_hist, a.figures))
        status = EXIT_OK if all(r["within_3se"] for r in rows) else EXIT_INVARIANT
        return Result({"rows": rows, "figures": figs}, list(rows[0]),
                      [list(r.values()) for r in rows], status=status)
    if a.target == "theorem41":
        ns = a.n or [5, 10, 20, 30, 40, 50]
        rhos = a.rho or [0.1, 0.3, 0.5, 0.7, 0.9]
        rows = reproduce.theorem41(ns, rhos, a.sigma, a.delta_q, simulate=a.simulate,
                                   requests=a.requests or 20000, seed=a.seed)
        figs = []
        if a.figures:
            from . import plotting
            figs = _figures(a, lambda: plotting.theorem41_figure(rows, a.figures))
        header = sorted({k for r in rows for k in r})
        return Result({"rows": rows, "figures": figs}, header,
                      [[r.get(k) for k in header] for r in rows])
    if a.target == "lemma51":
        ns = a.n or [64, 128, 256]
        rows = reproduce.lemma51(ns, a.runs, a.requests or 2000, a.seed)
        fit = reproduce.log_fit(rows)
        figs = []
        if a.figures:
            from . import plotting
            figs = _figures(a, lambda: plotting.lemma51_figure(rows, fit, a.figures))
        header = list(rows[0])
        return Result({"rows": rows, "fit": fit, "figures": figs}, header,
                      [list(r.values()) for r in rows])
    raise UsageError(f"unknown reproduce target {a.target!r}")


# ---------------------------------------------------------------------------
# parser

def _env_default(name: str, fallback, conv=str):
    raw = os.environ.get(ENV_PREFIX + name.upper())
    return fallback if raw is None else conv(raw)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pathrev", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, formats=("json", "csv", "text"), default="json"):
        sp.add_argument("--format", choices=formats, default=default)
        sp.add_argument("--out", help="write output here instead of stdout")
        sp.add_argument("--manifest", help="write the run manifest here "
                        "(default: <out>.manifest.json when --out is given)")

    an = sub.add_parser("analyze", help="exact cost law, moments, Stirling check")
    an_sub = an.add_subparsers(dest="what", required=True)
    sp = an_sub.add_parser("dist")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--method", choices=("pgf", "recurrence"), default="pgf")
    sp.add_argument("--convention", choices=("empty-product", "literal"), default="empty-product")
    common(sp)
    sp.set_defaults(func=cmd_analyze_dist)
    sp = an_sub.add_parser("moments")
    sp.add_argument("--n", type=int, required=True)
    common(sp)
    sp.set_defaults(func=cmd_analyze_moments)
    sp = an_sub.add_parser("stirling")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--limit", type=int, default=8)
    common(sp)
    sp.set_defaults(func=cmd_analyze_stirling)
    sp = an_sub.add_parser("normality")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--samples", type=int, default=100000)
    sp.add_argument("--seed", type=int, required=True)
    common(sp)
    sp.set_defaults(func=cmd_analyze_normality)

    sp = sub.add_parser("simulate", help="run the token algorithm")
    sp.add_argument("--config", help="JSON file with flag defaults")
    sp.add_argument("--n", type=int, default=_env_default("n", None, int))
    sp.add_argument("--topology", default=_env_default("topology", "complete"))
    sp.add_argument("--lambda", dest="lam", type=float, default=_env_default("lambda", 0.1, float))
    sp.add_argument("--sigma", type=float, default=_env_default("sigma", 1.0, float))
    sp.add_argument("--delta", type=_float_list, default=_env_default("delta", [0.1], _float_list),
                    help="constant delay, or min,max for uniform delays")
    sp.add_argument("--requests", type=int, default=_env_default("requests", 1000, int))
    sp.add_argument("--max-time", type=float, default=_env_default("max_time", None, float))
    sp.add_argument("--seed", type=int, default=_env_default("seed", None, int))
    sp.add_argument("--mode", choices=("sequential", "poisson"),
                    default=_env_default("mode", "sequential"))
    sp.add_argument("--replications", type=int, default=1)
    sp.add_argument("--jobs", type=int, default=1)
    sp.add_argument("--strict-bounds", action="store_true",
                    help="exit 3 when a message-count bound is exceeded")
    common(sp)
    sp.set_defaults(func=cmd_simulate)

    q = sub.add_parser("queue", help="birth-death waiting-time model")
    q_sub = q.add_subparsers(dest="what", required=True)
    sp = q_sub.add_parser("eval")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--lambda", dest="lam", required=True)
    sp.add_argument("--sigma", required=True)
    sp.add_argument("--delta", required=True)
    sp.add_argument("--exact", action="store_true", help="rational arithmetic")
    common(sp)
    sp.set_defaults(func=cmd_queue_eval)

    b = sub.add_parser("bijection", help="exhaustive bijection roundtrips")
    b_sub = b.add_subparsers(dest="what", required=True)
    sp = b_sub.add_parser("check")
    sp.add_argument("--n", type=int, required=True)
    common(sp, default="text")
    sp.set_defaults(func=cmd_bijection_check)

    sp = sub.add_parser("reproduce", help="regenerate headline tables and figures")
    sp.add_argument("target", choices=("theorem31", "theorem41", "lemma51"))
    sp.add_argument("--n", type=_int_list)
    sp.add_argument("--rho", type=_float_list)
    sp.add_argument("--sigma", type=float, default=1.0)
    sp.add_argument("--delta", dest="delta_q", type=float, default=1.0)
    sp.add_argument("--requests", type=int)
    sp.add_argument("--runs", type=int, default=5)
    sp.add_argument("--simulate", action="store_true")
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--figures", help="directory for PNG figures")
    common(sp)
    sp.set_defaults(func=cmd_reproduce)

    sp = sub.add_parser("replay", help="rerun a manifest and compare checksums")
    sp.add_argument("manifest")
    sp.set_defaults(func=None)
    return p


def _apply_config_file(parser: argparse.ArgumentParser, argv: Sequence[str]) -> None:
    """Load ``--config`` JSON for ``simulate`` as defaults; flags still win."""
    if "simulate" not in argv or "--config" not in argv:
        return
    path = argv[list(argv).index("--config") + 1]
    with open(path) as fh:
        conf = json.load(fh)
    sim = parser._subparsers._group_actions[0].choices["simulate"]
    renames = {"lambda": "lam", "max-time": "max_time"}
    defaults = {}
    for k, v in conf.items():
        key = renames.get(k, k.replace("-", "_"))
        if key == "delta" and not isinstance(v, list):
            v = [float(v)]
        defaults[key] = v
    sim.set_defaults(**defaults)


MANIFEST_SKIP = {"func", "out", "manifest", "figures", "verbose", "config", "jobs"}


def _params(a) -> dict:
    return {k: v for k, v in sorted(vars(a).items()) if k not in MANIFEST_SKIP}


def _execute(a):
    if a.func is cmd_simulate and a.seed is None:
        raise UsageError("simulate needs --seed (or PATHREV_SEED / config)")
    if a.func is cmd_simulate and a.n is None:
        raise UsageError("simulate needs --n")
    return a.func(a)


def _write(text: str, path: Optional[str]) -> None:
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def replay(path: str) -> int:
    with open(path) as fh:
        man = json.load(fh)
    params = dict(man["params"])
    parser = build_parser()
    # rebuild the namespace: parse the command words, then overlay params
    words = man["subcommand"]
    base = parser.parse_known_args(words + _required_stub(words))[0]
    ns = vars(base)
    ns.update(params)
    ns.update(out=None, manifest=None, figures=None, jobs=1)
    a = argparse.Namespace(**ns)
    res = _execute(a)
    text = res.render(a.format)
    digest = hashlib.sha256(text.encode()).hexdigest()
    same = digest == man["output_sha256"]
    sys.stdout.write(json.dumps({"manifest": path, "output_sha256": digest,
                                 "expected": man["output_sha256"], "identical": same},
                                sort_keys=True) + "\n")
    return EXIT_OK if same else EXIT_MISMATCH


def _required_stub(words: List[str]) -> List[str]:
    # values overwritten from the manifest right after parsing
    stub = {"analyze": ["--n", "2"], "queue": ["--n", "1", "--lambda", "1", "--sigma", "1",
                                               "--delta", "1"],
            "bijection": ["--n", "1"], "reproduce": ["--seed", "0"],
            "simulate": []}
    extra = list(stub.get(words[0], []))
    if words[:2] == ["analyze", "normality"]:
        extra += ["--seed", "0"]
    return extra


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config_file(parser, argv)
        a = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code not in (0, None) else EXIT_OK
    except (OSError, ValueError) as e:
        print(f"pathrev: {e}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if a.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if a.command == "replay":
        return replay(a.manifest)
    try:
        res = _execute(a)
    except UsageError as e:
        print(f"pathrev: {e}", file=sys.stderr)
        return EXIT_USAGE
    except ProtocolViolation as e:
        print(f"pathrev: invariant violation: {e}", file=sys.stderr)
        return EXIT_INVARIANT
    except (ValueError, TopologyError) as e:
        print(f"pathrev: {e}", file=sys.stderr)
        return EXIT_USAGE
    text = res.render(a.format)
    _write(text, a.out)
    manifest_path = a.manifest or (a.out + ".manifest.json" if a.out else None)
    if manifest_path:
        command = [a.command] + ([a.what] if hasattr(a, "what") else []) \
            + ([a.target] if a.command == "reproduce" else [])
        man = {
            "tool": "pathrev", "version": __version__, "subcommand": command,
            "params": _params(a), "seed": getattr(a, "seed", None),
            "output_sha256": hashlib.sha256(text.encode()).hexdigest(),
        }
        with open(manifest_path, "w") as fh:
            json.dump(man, fh, sort_keys=True, indent=2)
            fh.write("\n")
    if res.status != EXIT_OK:
        log.warning("finished with status %d", res.status)
    return res.status


if __name__ == "__main__":
    sys.exit(main())
