"""Per-site state machine of the token algorithm (first variant).

Each site keeps ``last`` (where to send requests; ``None`` when the site is
the current tail / tree root) and ``next`` (who gets the token after our own
critical section).  A site stores at most one pending request.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import List, Optional, Tuple, Union


class ProtocolViolation(RuntimeError):
    """A protocol invariant broke; this is an implementation bug."""


@dataclass(frozen=True)
class Request:
    origin: int


@dataclass(frozen=True)
class Token:
    queue: Tuple[int, ...] = ()


@dataclass(frozen=True)
class Message:
    kind: Union[Request, Token]
    src: int
    dst: int
    deliver_at: Optional[float] = None


# local events
@dataclass(frozen=True)
class WantCS:
    pass


@dataclass(frozen=True)
class ReleaseCS:
    pass


Event = Union[WantCS, ReleaseCS, Message]


@dataclass(frozen=True)
class ProtocolNodeState:
    id: int
    last: Optional[int]
    next: Optional[int] = None
    requesting: bool = False
    has_token: bool = False
    in_cs: bool = False

    @classmethod
    def initial(cls, node: int, root: int = 0) -> "ProtocolNodeState":
        """Star start: the root holds the token, everyone else points at it."""
        if node == root:
            return cls(node, None, has_token=True)
        return cls(node, root)


def step_node(state: ProtocolNodeState, event: Event) -> Tuple[ProtocolNodeState, List[Message]]:
    """Apply one event to a site and return its new state and outgoing messages.

    Entering the critical section is signalled by ``in_cs`` turning true;
    the caller schedules the matching :class:`ReleaseCS`.
    """
    me = state.id
    if isinstance(event, WantCS):
        if state.requesting:
            raise ProtocolViolation(f"node {me} requested twice")
        if state.last is None:
            # we are the tail; an idle tail always holds the token
            if not state.has_token:
                raise ProtocolViolation(f"idle tail {me} has no token")
            return replace(state, requesting=True, in_cs=True), []
        out = [Message(Request(me), me, state.last)]
        return replace(state, requesting=True, last=None), out

    if isinstance(event, ReleaseCS):
        if not state.in_cs:
            raise ProtocolViolation(f"node {me} released without being in CS")
        if state.next is not None:
            out = [Message(Token(), me, state.next)]
            return replace(state, requesting=False, in_cs=False, has_token=False, next=None), out
        return replace(state, requesting=False, in_cs=False), []

    if not isinstance(event, Message) or event.dst != me:
        raise ProtocolViolation(f"event {event!r} not addressed to node {me}")

    kind = event.kind
    if isinstance(kind, Request):
        origin = kind.origin
        if origin == me:
            raise ProtocolViolation(f"node {me} received its own request")
        if state.last is not None:
            return replace(state, last=origin), [Message(Request(origin), me, state.last)]
        if state.requesting:
            if state.next is not None:
                raise ProtocolViolation(f"node {me} already stores request of {state.next}")
            return replace(state, next=origin, last=origin), []
        if not state.has_token:
            raise ProtocolViolation(f"idle tail {me} has no token")
        return replace(state, has_token=False, last=origin), [Message(Token(), me, origin)]

    if isinstance(kind, Token):
        if state.has_token:
            raise ProtocolViolation(f"node {me} received a second token")
        if not state.requesting:
            raise ProtocolViolation(f"node {me} got the token without asking")
        return replace(state, has_token=True, in_cs=True), []

    raise ProtocolViolation(f"unknown message kind {kind!r}")
