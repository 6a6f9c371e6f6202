"""Experiment drivers behind ``pathrev reproduce``.

Each driver returns a list of flat row dicts (the machine-readable result);
figures are rendered from those rows by :mod:`pathrev.plotting`.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Iterable, List, Optional, Sequence

from .analysis import harmonic
from .protocol.simulator import SimConfig, run_arbitrary_network, run_simulation
from .protocol.topology import generate_topology
from .queueing import (QueueModel, asymptotic_waiting_bound, compare_with_simulation,
                       expected_waiting, expected_waiting_direct, state_probabilities)


def theorem31(ns: Sequence[int], requests: int, seed: int, delay: float = 0.1,
              sigma: float = 1.0) -> List[dict]:
    """Sequential runs: empirical messages per CS entry against H_{n-1}."""
    rows = []
    for i, n in enumerate(ns):
        rep = run_simulation(SimConfig(n=n, mode="sequential", requests=requests,
                                       seed=seed + i, delay=delay, sigma=sigma))
        s = rep.summary()
        h = float(harmonic(n - 1).h)
        se = s["se_messages"]
        z = (s["mean_messages"] - h) / se if se else math.nan
        rows.append({
            "n": n, "requests": requests, "seed": seed + i,
            "mean_messages": s["mean_messages"], "se_messages": s["se_messages"],
            "H_n_minus_1": h, "z": z,
            "within_3se": abs(z) <= 3 if se else s["mean_messages"] == h,
            "mean_request_messages": s["mean_request_messages"],
            # forwarded requests alone: the token hop is missing when the root asks
            "expected_request_messages": float(harmonic(n).h) - 1,
            "max_messages": s["max_messages"],
        })
    return rows


def message_histogram(n: int, requests: int, seed: int) -> dict:
    rep = run_simulation(SimConfig(n=n, mode="sequential", requests=requests, seed=seed))
    hist = {}
    for r in rep.records:
        hist[r.messages] = hist.get(r.messages, 0) + 1
    return dict(sorted(hist.items()))


def theorem41(ns: Sequence[int], rhos: Sequence[float], sigma: float = 1.0,
              delta: float = 1.0, simulate: bool = False, requests: int = 20000,
              seed: int = 0) -> List[dict]:
    """Closed-form expected wait, direct sum, worst case and large-n bound."""
    rows = []
    for i, n in enumerate(ns):
        for j, rho in enumerate(rhos):
            r = Fraction(rho).limit_denominator(10**6)
            s, d = Fraction(sigma).limit_denominator(10**6), Fraction(delta).limit_denominator(10**6)
            exact = QueueModel(n, r / s, s, d)
            dist = state_probabilities(exact)
            w = expected_waiting(exact, dist)
            wd = expected_waiting_direct(exact, dist)
            row = {"n": n, "rho": float(r), "sigma": float(s), "delta": float(d),
                   "nbar": float(dist.nbar), "wbar": float(w), "wbar_direct_sum": float(wd),
                   "identity_exact": w == wd,
                   "worst_case": float((n - 1) * (s + d) + s / 2)}
            if r < 1:
                b, o = asymptotic_waiting_bound(exact)
                row.update(bound=b, o_term=o, bound_holds=b >= float(w))
            else:
                row.update(bound=None, o_term=None, bound_holds=None)
            if simulate:
                cfg = SimConfig(n=n, mode="poisson", lam=float(r / s), sigma=float(s),
                                delay=float(d), requests=requests, seed=seed + 1000 * i + j)
                cmp = compare_with_simulation(QueueModel(n, float(r / s), float(s), float(d)),
                                              run_simulation(cfg))
                row.update(sim_mean_wait=cmp.empirical, sim_se=cmp.stderr, sim_z=cmp.z)
            rows.append(row)
    return rows


def sparse_edge_count(n: int) -> int:
    """Edges for the sparse family: just above the G(n, M) connectivity
    threshold n ln(n) / 2, so the connected-resampling loop terminates."""
    return max(n - 1, math.ceil(n * (math.log(n) + 2) / 2))


def lemma51(ns: Sequence[int], runs: int, requests: int, seed: int,
            density: Optional[float] = None, degree: int = 3, mode: str = "sequential",
            kinds: Iterable[str] = ("sparse", "regular")) -> List[dict]:
    """Per-request hop counts on random sparse and r-regular graphs.

    ``density`` (mean degree) overrides the default edge count.
    """
    rows = []
    k = 0
    for kind in kinds:
        for n in ns:
            for run in range(runs):
                gseed = seed + k
                k += 1
                if kind == "sparse":
                    m = sparse_edge_count(n) if density is None else int(round(density * n / 2))
                    g = generate_topology("sparse", n, gseed, m=m)
                else:
                    g = generate_topology("regular", n, gseed, r=degree)
                rep = run_arbitrary_network(SimConfig(
                    n=n, mode=mode, requests=requests, seed=gseed, topology=g,
                    lam=0.05, sigma=1.0, delay=0.1))
                s = rep.summary()
                rows.append({
                    "family": kind, "topology": g.kind, "n": n, "run": run, "seed": gseed,
                    "diameter": g.diameter, "max_hops": s["max_hops"],
                    "mean_hops": s["mean_hops"], "two_d": 2 * g.diameter,
                    "violations": s["diameter_violations"], "requests": s["requests"],
                })
    return rows


def log_fit(rows: List[dict], key: str = "max_hops") -> dict:
    """Fit max-hops ~ c * ln n (least squares through the origin) and the
    log-log slope, per topology family."""
    out = {}
    fams = sorted({r["family"] for r in rows})
    for fam in fams:
        by_n = {}
        for r in rows:
            if r["family"] == fam:
                by_n[r["n"]] = max(by_n.get(r["n"], 0), r[key])
        ns = sorted(by_n)
        xs = [math.log(n) for n in ns]
        ys = [by_n[n] for n in ns]
        c = sum(x * y for x, y in zip(xs, ys)) / sum(x * x for x in xs)
        slope = math.nan
        if len(ns) >= 2 and all(y > 0 for y in ys):
            ly = [math.log(y) for y in ys]
            mx, my = sum(xs) / len(xs), sum(ly) / len(ly)
            slope = (sum((x - mx) * (y - my) for x, y in zip(xs, ly))
                     / sum((x - mx) ** 2 for x in xs))
        out[fam] = {"n": ns, "max": ys, "c_log": c, "loglog_slope": slope,
                    "sublinear": slope < 1}
    return out
