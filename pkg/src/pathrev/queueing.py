"""Finite-source birth-death model of the waiting queue.

State k counts the sites waiting for the token plus the one in its critical
section.  Arrivals happen at rate (n - k) * lam, service at mu = 1 / sigma.
Pass Fractions (or ints) for exact arithmetic; floats otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, List, Optional, Tuple, Union

Number = Union[int, float, Fraction]


class QueueError(ValueError):
    pass


@dataclass(frozen=True)
class QueueModel:
    n: int
    lam: Number
    sigma: Number
    delta: Number

    def __post_init__(self):
        if not isinstance(self.n, int) or self.n < 1:
            raise QueueError(f"n must be a positive integer, got {self.n!r}")
        if not (self.lam > 0 and self.sigma > 0 and self.delta >= 0):
            raise QueueError("lam and sigma must be > 0, delta >= 0")

    @classmethod
    def from_rho(cls, n: int, rho: Number, sigma: Number = 1, delta: Number = 1):
        return cls(n, rho / sigma, sigma, delta)

    @property
    def exact(self) -> bool:
        return all(isinstance(v, (int, Fraction)) for v in (self.lam, self.sigma, self.delta))

    def _num(self, v):
        return Fraction(v) if self.exact else float(v)

    @property
    def mu(self):
        return 1 / self._num(self.sigma)

    @property
    def rho(self):
        return self._num(self.lam) * self._num(self.sigma)


@dataclass(frozen=True)
class StateDistribution:
    probs: Tuple[Number, ...]
    nbar: Number

    @property
    def p0(self):
        return self.probs[0]

    @property
    def pn(self):
        return self.probs[-1]


def falling(n: int, k: int) -> int:
    return math.perm(n, k)


def state_probabilities(m: QueueModel) -> StateDistribution:
    """P_k = n^(k falling) rho^k P_0 normalised over k = 0..n."""
    n, rho = m.n, m.rho
    if m.exact:
        w = [falling(n, k) * rho ** k for k in range(n + 1)]
        z = sum(w)
        probs = tuple(x / z for x in w)
    else:
        # log weights keep large n from overflowing
        logw = [math.lgamma(n + 1) - math.lgamma(n - k + 1) + k * math.log(rho)
                for k in range(n + 1)]
        top = max(logw)
        w = [math.exp(x - top) for x in logw]
        z = math.fsum(w)
        probs = tuple(x / z for x in w)
    nbar = sum(k * p for k, p in enumerate(probs))
    return StateDistribution(probs, nbar)


def waiting_time_k(m: QueueModel, k: int):
    """2 delta for an empty queue, else (k - 1)(sigma + delta) + sigma / 2."""
    if not isinstance(k, int) or not (0 <= k <= m.n - 1):
        raise QueueError(f"k must be in [0, {m.n - 1}], got {k!r}")
    s, d = m._num(m.sigma), m._num(m.delta)
    if k == 0:
        return 2 * d
    return (k - 1) * (s + d) + s / 2


def expected_waiting(m: QueueModel, dist: Optional[StateDistribution] = None):
    """Closed form (s+d)(nbar - n P_n) - (d + s/2)(1 - P_0 - P_n) + 2 d P_0."""
    dist = dist or state_probabilities(m)
    s, d = m._num(m.sigma), m._num(m.delta)
    p0, pn = dist.p0, dist.pn
    return (s + d) * (dist.nbar - m.n * pn) - (d + s / 2) * (1 - p0 - pn) + 2 * d * p0


def expected_waiting_direct(m: QueueModel, dist: Optional[StateDistribution] = None):
    """sum_{k=0}^{n-1} w_k P_k."""
    dist = dist or state_probabilities(m)
    return sum(waiting_time_k(m, k) * dist.probs[k] for k in range(m.n))


def worst_case_waiting(m: QueueModel):
    """(n - 1)(sigma + delta) + sigma / 2; at n = 1 this is just sigma / 2."""
    s, d = m._num(m.sigma), m._num(m.delta)
    return (m.n - 1) * (s + d) + s / 2


def asymptotic_waiting_bound(m: QueueModel) -> Tuple[float, float]:
    """Large-n bound for rho < 1 and the magnitude of its dropped O-term.

    bound = (s+d) n (1 - 2 e^{-1/rho}) - (d + s/2)(1 - e^{-1/rho})
    o_term = (s/2 + 3 d) e^{-1/rho} rho^{-n} / n!
    """
    rho = float(m.rho)
    if rho >= 1:
        raise QueueError(f"bound needs rho < 1, got {rho}")
    s, d, n = float(m.sigma), float(m.delta), m.n
    e = math.exp(-1 / rho)
    bound = (s + d) * n * (1 - 2 * e) - (d + s / 2) * (1 - e)
    log_o = math.log(s / 2 + 3 * d) - 1 / rho - n * math.log(rho) - math.lgamma(n + 1)
    return bound, math.exp(log_o)


@dataclass
class IdentityCheck:
    n: int
    rho: Fraction
    sigma: Fraction
    delta: Fraction
    closed: Fraction
    direct: Fraction

    @property
    def equal(self) -> bool:
        return self.closed == self.direct

    @property
    def discrepancy(self) -> Fraction:
        return self.closed - self.direct


def closed_form_identity(points: Iterable[Tuple[int, Number, Number, Number]]) -> List[IdentityCheck]:
    """Compare the closed form with the direct sum in exact arithmetic at
    each (n, rho, sigma, delta)."""
    out = []
    for n, rho, s, d in points:
        rho, s, d = Fraction(rho), Fraction(s), Fraction(d)
        m = QueueModel(n, rho / s, s, d)
        dist = state_probabilities(m)
        out.append(IdentityCheck(n, rho, s, d, expected_waiting(m, dist),
                                 expected_waiting_direct(m, dist)))
    return out


def evaluate(m: QueueModel) -> dict:
    """Everything the ``queue eval`` command prints."""
    dist = state_probabilities(m)
    fmt = str if m.exact else float
    out = {
        "n": m.n,
        "lambda": fmt(m.lam), "sigma": fmt(m.sigma), "delta": fmt(m.delta),
        "rho": fmt(m.rho),
        "P": [fmt(p) for p in dist.probs],
        "nbar": fmt(dist.nbar),
        "wbar": fmt(expected_waiting(m, dist)),
        "wbar_direct_sum": fmt(expected_waiting_direct(m, dist)),
        "worst_case": fmt(worst_case_waiting(m)),
    }
    if m.rho < 1:
        bound, o_term = asymptotic_waiting_bound(m)
        out["asymptotic_bound"] = bound
        out["asymptotic_o_term"] = o_term
    else:
        out["asymptotic_bound"] = None
        out["asymptotic_o_term"] = None
    return out


@dataclass
class SimComparison:
    analytic: float
    empirical: float
    stderr: float
    samples: int

    @property
    def gap(self) -> float:
        return self.empirical - self.analytic

    @property
    def relative_error(self) -> float:
        return self.gap / self.analytic if self.analytic else math.inf

    @property
    def z(self) -> float:
        return self.gap / self.stderr if self.stderr else math.inf

    @property
    def within_3se(self) -> bool:
        return abs(self.z) <= 3

    def as_dict(self):
        return {"analytic": self.analytic, "empirical": self.empirical,
                "stderr": self.stderr, "samples": self.samples, "gap": self.gap,
                "relative_error": self.relative_error, "z": self.z,
                "within_3se": self.within_3se}


def compare_with_simulation(m: QueueModel, sim) -> SimComparison:
    """Empirical mean waiting time of a Poisson-mode run against the model."""
    cfg = sim.config
    problems = []
    if cfg["mode"] != "poisson":
        problems.append("simulation is not in poisson mode")
    if cfg["topology"] != "complete":
        problems.append("simulation is not on a complete network")
    if cfg["n"] != m.n:
        problems.append(f"n differs ({cfg['n']} vs {m.n})")
    for key, want in (("lambda", m.lam), ("sigma", m.sigma)):
        if not math.isclose(cfg[key], float(want), rel_tol=1e-12):
            problems.append(f"{key} differs ({cfg[key]} vs {float(want)})")
    lo, hi = cfg["delay"]
    if lo != hi or not math.isclose(lo, float(m.delta), rel_tol=1e-12):
        problems.append(f"delay {cfg['delay']} is not the constant {float(m.delta)}")
    if problems:
        raise QueueError("; ".join(problems))
    s = sim.summary()
    return SimComparison(float(expected_waiting(m)), s["mean_wait"], s["se_wait"], s["granted"])
