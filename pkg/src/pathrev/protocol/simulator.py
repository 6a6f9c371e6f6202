"""Deterministic discrete-event simulation of the token algorithm.

Events live in a heap keyed by (time, sequence number), so a seed fixes the
whole run.  Two request regimes are supported:

``sequential``
    one request at a time, the requester drawn uniformly from all n sites;
    the next request is issued once the previous one has left its critical
    section and the network is quiet.  This is the regime in which message
    counts coincide with path-reversal costs on the Last-link tree.
``poisson``
    every site outside the critical state asks for the critical section at
    rate ``lam``; a site in its critical section stays there ``sigma`` time
    units.

On an explicit graph each logical message is routed along a shortest path
and costs one hop-message per edge.
"""

from __future__ import annotations

import heapq
import json
import math
import random
from collections import deque
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from ..tree_core import path_reversal, star
from .node import (Message, ProtocolNodeState, ProtocolViolation, ReleaseCS, Request,
                   Token, WantCS, step_node)
from .topology import Graph, TopologyError

MODES = ("sequential", "poisson")

_WANT, _DELIVER, _RELEASE = 0, 1, 2


@dataclass
class SimConfig:
    n: int
    mode: str = "sequential"
    lam: float = 0.1
    sigma: float = 1.0
    delay: Tuple[float, float] = (0.1, 0.1)
    requests: int = 1000
    max_time: float = math.inf
    seed: int = 0
    topology: Optional[Graph] = None
    record_trace: bool = False

    def __post_init__(self):
        if isinstance(self.delay, (int, float)):
            self.delay = (float(self.delay), float(self.delay))
        self.delay = tuple(float(d) for d in self.delay)
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if not (self.lam > 0 and self.sigma > 0):
            raise ValueError("lam and sigma must be > 0")
        lo, hi = self.delay
        if not (0 < lo <= hi):
            raise ValueError("delays must satisfy 0 < min <= max")
        if self.requests < 0:
            raise ValueError("requests must be >= 0")
        if self.topology is not None and self.topology.n != self.n:
            raise ValueError("topology size differs from n")

    @property
    def constant_delay(self) -> bool:
        return self.delay[0] == self.delay[1]

    @property
    def max_delay(self) -> float:
        """Largest end-to-end delay of one logical message (Delta)."""
        hops = 1 if self.topology is None else max(self.topology.diameter, 1)
        return hops * self.delay[1]

    @property
    def q(self) -> int:
        return math.ceil(self.max_delay / self.sigma)

    @property
    def message_bound(self) -> int:
        """(n - 1)(q + 1), the worst-case messages per request."""
        return (self.n - 1) * (self.q + 1)

    def describe(self) -> dict:
        d = {
            "n": self.n, "mode": self.mode, "lambda": self.lam, "sigma": self.sigma,
            "delay": list(self.delay), "requests": self.requests,
            "max_time": None if math.isinf(self.max_time) else self.max_time,
            "seed": self.seed,
            "topology": "complete" if self.topology is None else self.topology.kind,
        }
        if self.topology is not None:
            d["diameter"] = self.topology.diameter
        return d


@dataclass
class RequestRecord:
    request_id: int
    origin: int
    issued_at: float
    granted_at: Optional[float] = None
    request_messages: int = 0
    token_messages: int = 0
    hops: int = 0

    @property
    def messages(self) -> int:
        return self.request_messages + self.token_messages

    @property
    def wait_time(self) -> Optional[float]:
        if self.granted_at is None:
            return None
        return self.granted_at - self.issued_at


def batch_means(values: Sequence[float], batches: int = 50) -> Tuple[float, float]:
    """Mean and batch-means standard error of a correlated series."""
    n = len(values)
    if n == 0:
        return math.nan, math.nan
    mean = math.fsum(values) / n
    b = min(batches, n)
    size = n // b
    if b < 2 or size < 1:
        return mean, math.nan
    bm = [math.fsum(values[i * size:(i + 1) * size]) / size for i in range(b)]
    m = math.fsum(bm) / b
    var = math.fsum((x - m) ** 2 for x in bm) / (b - 1)
    return mean, math.sqrt(var / b)


@dataclass
class SimReport:
    config: dict
    records: List[RequestRecord]
    cs_order: List[int]
    safety_violations: List[str] = field(default_factory=list)
    order_violations: List[str] = field(default_factory=list)
    bound_violations: List[int] = field(default_factory=list)
    diameter_violations: List[int] = field(default_factory=list)
    ungranted: List[int] = field(default_factory=list)
    events: int = 0
    end_time: float = 0.0
    message_bound: int = 0
    diameter: Optional[int] = None
    last_trace: Optional[List[Tuple[Optional[int], ...]]] = None

    @property
    def granted(self) -> List[RequestRecord]:
        return [r for r in self.records if r.granted_at is not None]

    @property
    def ok(self) -> bool:
        return not (self.safety_violations or self.order_violations or self.ungranted
                    or self.bound_violations or self.diameter_violations)

    def summary(self) -> dict:
        recs = self.granted
        msgs = [float(r.messages) for r in recs]
        reqs = [float(r.request_messages) for r in recs]
        waits = [r.wait_time for r in recs]
        hops = [float(r.hops) for r in recs]
        m_mean, m_se = batch_means(msgs)
        r_mean, r_se = batch_means(reqs)
        w_mean, w_se = batch_means(waits)
        out = {
            "requests": len(self.records),
            "granted": len(recs),
            "events": self.events,
            "end_time": self.end_time,
            "mean_messages": m_mean,
            "se_messages": m_se,
            "var_messages": _var(msgs),
            "mean_request_messages": r_mean,
            "se_request_messages": r_se,
            "max_messages": int(max(msgs, default=0)),
            "message_bound": self.message_bound,
            "mean_wait": w_mean,
            "se_wait": w_se,
            "var_wait": _var(waits),
            "max_wait": max(waits, default=0.0),
            "safety_violations": len(self.safety_violations),
            "order_violations": len(self.order_violations),
            "bound_violations": len(self.bound_violations),
            "ungranted": len(self.ungranted),
        }
        if self.diameter is not None:
            out["diameter"] = self.diameter
            out["max_hops"] = int(max(hops, default=0))
            out["mean_hops"] = math.fsum(hops) / len(hops) if hops else math.nan
            out["diameter_violations"] = len(self.diameter_violations)
        return out

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "summary": self.summary(),
            "requests": [
                {"request_id": r.request_id, "origin": r.origin, "messages": r.messages,
                 "request_messages": r.request_messages, "hops": r.hops,
                 "issued_at": r.issued_at, "wait_time": r.wait_time,
                 "granted_at": r.granted_at}
                for r in self.records
            ],
            "safety_violations": self.safety_violations,
            "order_violations": self.order_violations,
            "bound_violations": self.bound_violations,
            "diameter_violations": self.diameter_violations,
            "ungranted": self.ungranted,
        }

    def to_json(self, include_requests: bool = True) -> str:
        d = self.to_dict()
        if not include_requests:
            d.pop("requests")
        return json.dumps(d, sort_keys=True, indent=2)

    CSV_HEADER = ("request_id", "origin", "messages", "wait_time", "granted_at")

    def csv_rows(self):
        for r in self.records:
            yield (r.request_id, r.origin, r.messages,
                   "" if r.wait_time is None else repr(r.wait_time),
                   "" if r.granted_at is None else repr(r.granted_at))


def _var(xs):
    if len(xs) < 2:
        return 0.0
    m = math.fsum(xs) / len(xs)
    return math.fsum((x - m) ** 2 for x in xs) / (len(xs) - 1)


class _Engine:
    def __init__(self, cfg: SimConfig):
        self.cfg = cfg
        n = cfg.n
        self.rng = random.Random(cfg.seed)
        self.states = [ProtocolNodeState.initial(i) for i in range(n)]
        self.dist = None if cfg.topology is None else cfg.topology.distances
        self.heap: list = []
        self.seq = 0
        self.now = 0.0
        self.records: List[RequestRecord] = []
        self.open: List[Optional[int]] = [None] * n
        self.occupant: Optional[int] = None
        self.tokens = 1
        self.expected: deque = deque()
        self.cs_order: List[int] = []
        self.safety: List[str] = []
        self.order: List[str] = []
        self.events = 0
        self.generating = True
        self.last_trace = [] if cfg.record_trace else None

    # -- scheduling ------------------------------------------------------
    def push(self, t: float, kind: int, payload):
        self.seq += 1
        heapq.heappush(self.heap, (t, self.seq, kind, payload))

    def hops(self, u: int, v: int) -> int:
        return 1 if self.dist is None else self.dist[u][v]

    def draw_delay(self, hops: int) -> float:
        lo, hi = self.cfg.delay
        if lo == hi:
            return hops * lo
        return sum(self.rng.uniform(lo, hi) for _ in range(hops))

    # -- node interaction ------------------------------------------------
    def apply(self, node: int, event) -> None:
        old = self.states[node]
        new, out = step_node(old, event)
        self.states[node] = new
        if isinstance(event, Message) and isinstance(event.kind, Token):
            self.tokens -= 1
        self.tokens += int(new.has_token) - int(old.has_token)
        for msg in out:
            self.send(msg)
        if self.tokens != 1:
            raise ProtocolViolation(f"{self.tokens} tokens exist at t={self.now}")
        if new.in_cs and not old.in_cs:
            self.enter(node, via_token=isinstance(event, Message))

    def chain_from(self, node: int) -> Tuple[int, ...]:
        out = [node]
        seen = {node}
        x = self.states[node].next
        while x is not None:
            if x in seen:
                raise ProtocolViolation(f"Next links loop through {x}")
            out.append(x)
            seen.add(x)
            x = self.states[x].next
        return tuple(out)

    def send(self, msg: Message) -> None:
        h = self.hops(msg.src, msg.dst)
        if isinstance(msg.kind, Request):
            rec = self.records[self.open[msg.kind.origin]]
            rec.request_messages += 1
            rec.hops += h
        else:
            rid = self.open[msg.dst]
            if rid is None:
                raise ProtocolViolation(f"token sent to {msg.dst} with no open request")
            rec = self.records[rid]
            rec.token_messages += 1
            rec.hops += h
            self.tokens += 1
            queue = self.chain_from(msg.dst)
            exp = tuple(self.expected)
            if queue[:len(exp)] != exp:
                self.order.append(f"t={self.now!r}: token queue {queue} drops expected {exp}")
            self.expected = deque(queue)
            msg = Message(Token(queue), msg.src, msg.dst)
        t = self.now + self.draw_delay(h)
        self.push(t, _DELIVER, Message(msg.kind, msg.src, msg.dst, t))

    def enter(self, node: int, via_token: bool) -> None:
        if self.occupant is not None:
            self.safety.append(f"t={self.now!r}: {node} entered while {self.occupant} in CS")
        self.occupant = node
        if via_token:
            if not self.expected or self.expected[0] != node:
                self.order.append(f"t={self.now!r}: {node} served out of queue order")
            else:
                self.expected.popleft()
        elif self.expected:
            self.order.append(f"t={self.now!r}: {node} entered ahead of queue {tuple(self.expected)}")
        rid = self.open[node]
        self.records[rid].granted_at = self.now
        self.cs_order.append(rid)
        self.push(self.now + self.cfg.sigma, _RELEASE, node)

    def issue(self, node: int) -> None:
        rid = len(self.records)
        self.records.append(RequestRecord(rid, node, self.now))
        self.open[node] = rid
        self.apply(node, WantCS())

    def release(self, node: int) -> None:
        if self.occupant == node:
            self.occupant = None
        self.apply(node, ReleaseCS())
        self.open[node] = None
        if self.cfg.mode == "poisson":
            self.maybe_schedule(node)

    # -- request generation ---------------------------------------------
    def horizon_reached(self) -> bool:
        return len(self.records) >= self.cfg.requests or self.now >= self.cfg.max_time

    def maybe_schedule(self, node: int) -> None:
        if self.generating and not self.horizon_reached():
            self.push(self.now + self.rng.expovariate(self.cfg.lam), _WANT, node)

    # -- main loop -------------------------------------------------------
    def run(self) -> None:
        cfg = self.cfg
        if cfg.mode == "poisson":
            for i in range(cfg.n):
                self.maybe_schedule(i)
        drain_budget = None
        while True:
            if not self.heap:
                if cfg.mode == "sequential" and not self.horizon_reached():
                    if self.last_trace is not None and self.records:
                        self.last_trace.append(tuple(s.last for s in self.states))
                    self.push(self.now, _WANT, self.rng.randrange(cfg.n))
                    continue
                break
            t, _, kind, payload = heapq.heappop(self.heap)
            if cfg.mode == "poisson" and t > cfg.max_time and kind == _WANT:
                self.generating = False
                continue
            self.now = t
            self.events += 1
            if kind == _WANT:
                if self.horizon_reached():
                    self.generating = False
                    continue
                self.issue(payload)
            elif kind == _DELIVER:
                self.apply(payload.dst, payload)
            else:
                self.release(payload)
            if self.generating and self.horizon_reached():
                self.generating = False
            if not self.generating:
                if drain_budget is None:
                    pending = sum(1 for r in self.records if r.granted_at is None)
                    drain_budget = 50 * cfg.n * (pending + 1) * (cfg.q + 2) + 1000
                drain_budget -= 1
                if drain_budget < 0:
                    break
        if self.last_trace is not None and self.records:
            self.last_trace.append(tuple(s.last for s in self.states))

    def report(self) -> SimReport:
        cfg = self.cfg
        bound = cfg.message_bound
        diameter = None if cfg.topology is None else cfg.topology.diameter
        bound_v = [r.request_id for r in self.records if r.messages > bound]
        diam_v = [] if diameter is None else [
            r.request_id for r in self.records if not (0 <= r.hops <= 2 * diameter)]
        return SimReport(
            config=cfg.describe(),
            records=self.records,
            cs_order=self.cs_order,
            safety_violations=self.safety,
            order_violations=self.order,
            bound_violations=bound_v,
            diameter_violations=diam_v,
            ungranted=[r.request_id for r in self.records if r.granted_at is None],
            events=self.events,
            end_time=self.now,
            message_bound=bound,
            diameter=diameter,
            last_trace=self.last_trace,
        )


def run_simulation(cfg: SimConfig) -> SimReport:
    """Run the algorithm on a complete network (or cfg.topology if given)."""
    eng = _Engine(cfg)
    eng.run()
    return eng.report()


def run_arbitrary_network(cfg: SimConfig) -> SimReport:
    """Variant for arbitrary connected networks: hop-level message accounting
    and the per-request check hops in [0, 2D]."""
    if cfg.topology is None:
        raise TopologyError("run_arbitrary_network needs an explicit topology")
    if not cfg.topology.is_connected():
        raise TopologyError("graph is disconnected")
    return run_simulation(cfg)


def shadow_tree_check(report: SimReport) -> bool:
    """Replay a sequential run on star(n) with path reversals.

    True iff every request's forwarded-request count equals the reversal
    cost, the token moved exactly when the cost was positive, and (when the
    run recorded them) the Last links match the tree's parent links.
    """
    n = report.config["n"]
    tree = star(n)
    trace = report.last_trace
    for i, rec in enumerate(report.records):
        cost = path_reversal(tree, rec.origin)
        if rec.request_messages != cost:
            return False
        if rec.token_messages != (1 if cost else 0):
            return False
        if trace is not None and (i >= len(trace) or tuple(tree.parent) != trace[i]):
            return False
    return True
