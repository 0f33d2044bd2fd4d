"""Countdown and the two flooding baselines."""

from __future__ import annotations

import enum
from typing import NamedTuple, Optional

from .core import AlgorithmSpec, InvariantViolation, MessageBag, Role

IDLE = -1


class CountdownState(NamedTuple):
    current: int
    maximum: int


class CountdownMessage(NamedTuple):
    current: int
    maximum: int


class AttemptValues(NamedTuple):
    c: int
    m: int


def _signed_width(value: int) -> int:
    # two's complement width; -1 fits in a single bit
    return value.bit_length() + 1 if value >= 0 else (~value).bit_length() + 1


_orbit: list[AttemptValues] = [AttemptValues(0, 1)]


def expected_attempt_values(t: int) -> AttemptValues:
    """Shared ``(current, maximum)`` of every non-idle Countdown node at round ``t``."""
    if t < 0:
        raise ValueError("round index must be non-negative")
    while len(_orbit) <= t:
        c, m = _orbit[-1]
        _orbit.append(AttemptValues(2 * m, 2 * m) if c == 0 else AttemptValues(c - 1, m))
    return _orbit[t]


class Countdown(AlgorithmSpec):
    """Broadcast attempts of doubling duration until one reaches every node.

    A non-idle node sends ``(current, maximum)`` and decrements ``current``;
    it ignores whatever it receives. An idle node that hears ``(c, m)`` joins
    the running attempt with ``(c - 1, m)``, or opens a new one of length
    ``2m`` when ``c == 0``.
    """

    name = "countdown"

    def init(self, role: Role) -> CountdownState:
        if role is Role.BROADCASTER:
            return CountdownState(0, 1)
        return CountdownState(IDLE, IDLE)

    def emit(self, state: CountdownState) -> Optional[CountdownMessage]:
        if state.current != IDLE:
            return CountdownMessage(state.current, state.maximum)
        return None

    def step(self, state: CountdownState, bag: MessageBag) -> CountdownState:
        if state.current != IDLE:
            return CountdownState(state.current - 1, state.maximum)
        if not bag:
            return state
        # reachable bags hold a single distinct message; max() only makes this total
        c, m = bag.max_message()
        if c == 0:
            return CountdownState(2 * m, 2 * m)
        if c > 0:
            return CountdownState(c - 1, m)
        return state

    def bits(self, state: CountdownState) -> int:
        return _signed_width(state.current) + _signed_width(state.maximum)

    def counter_value(self, state: CountdownState) -> int:
        return state.maximum

    def state_to_json(self, state: CountdownState) -> dict:
        return {"current": state.current, "maximum": state.maximum}

    def check_round(self, t: int, states: tuple, n: int) -> None:
        check_countdown_round(t, states, n)


def check_countdown_round(t: int, states, n: int) -> None:
    """Raise :class:`InvariantViolation` unless every non-idle node holds
    ``expected_attempt_values(t)`` and the counters respect their bounds."""
    shared = None
    for v, s in enumerate(states):
        if s.current == IDLE:
            if s.maximum < IDLE:
                raise InvariantViolation(f"node {v} has maximum {s.maximum} < -1", t)
            continue
        if shared is None:
            shared = s
        elif s != shared:
            raise InvariantViolation(
                f"non-idle nodes disagree: {tuple(shared)} vs node {v} {tuple(s)}", t
            )
    if shared is None:
        return
    want = expected_attempt_values(t)
    if tuple(shared) != tuple(want):
        raise InvariantViolation(f"shared pair {tuple(shared)} != expected {tuple(want)}", t)
    if not 0 <= shared.current <= shared.maximum:
        raise InvariantViolation(f"current outside [0, maximum]: {tuple(shared)}", t)
    if n >= 2 and shared.maximum > 2 * (n - 1):
        raise InvariantViolation(f"maximum {shared.maximum} > 2(n-1) = {2 * (n - 1)}", t)


def progress_violations(configs) -> list[str]:
    """Attempts that break the progress guarantee in a Countdown run.

    ``configs`` is the sequence of configurations (anything with ``states``)
    at times ``0, 1, ...``. For every time ``t`` at which an attempt of
    length ``k = c_t = m_t > 0`` starts, either every node is non-idle at
    ``t + k`` and every node idle at ``t + k + 1``, or at least ``k + 1``
    nodes are non-idle at ``t + k`` and the next attempt has length ``2k``.
    Attempts running past the end of ``configs`` are skipped.
    """
    active = [sum(s.current != IDLE for s in c.states) for c in configs]
    out = []
    for t, busy in enumerate(active):
        c, m = expected_attempt_values(t)
        if not busy or c != m or c <= 0:
            continue
        k, end = c, t + c
        if end + 1 >= len(configs):
            continue
        n = len(configs[t].states)
        if active[end] == n and active[end + 1] == 0:
            continue
        if active[end] >= k + 1 and tuple(expected_attempt_values(end + 1)) == (2 * k, 2 * k) and active[end + 1] > 0:
            continue
        out.append(f"attempt of length {k} from t={t}: {active[end]} non-idle at t={end}, {active[end + 1]} at t={end + 1}")
    return out


class FloodState(enum.IntEnum):
    UNINFORMED = 0
    INFORMED = 1


TOKEN = "token"


class FloodForever(AlgorithmSpec):
    """Every informed node sends a token in every round, forever."""

    name = "flood-forever"

    def init(self, role: Role) -> FloodState:
        return FloodState.INFORMED if role is Role.BROADCASTER else FloodState.UNINFORMED

    def emit(self, state: FloodState) -> Optional[str]:
        return TOKEN if state is FloodState.INFORMED else None

    def step(self, state: FloodState, bag: MessageBag) -> FloodState:
        if state is FloodState.INFORMED or bag:
            return FloodState.INFORMED
        return state

    def bits(self, state: FloodState) -> int:
        return 1

    def state_to_json(self, state: FloodState) -> str:
        return state.name.lower()


class BoundedFlood(AlgorithmSpec):
    """Idle-start flooding with a constant-size countdown of ``k`` sends.

    Counter ``-1`` is idle. A node at ``c >= 1`` sends a token and moves to
    ``c - 1``; at ``0`` it falls back to idle without sending. An idle node
    hearing anything restarts at ``k``.
    """

    def __init__(self, k: int):
        if not isinstance(k, int) or k < 1:
            raise ValueError(f"bounded flood needs K >= 1, got {k!r}")
        self.k = k
        self.name = f"bounded-flood:{k}"

    def init(self, role: Role) -> int:
        return self.k if role is Role.BROADCASTER else IDLE

    def emit(self, state: int) -> Optional[str]:
        return TOKEN if state >= 1 else None

    def step(self, state: int, bag: MessageBag) -> int:
        if state >= 1:
            return state - 1
        if state == 0:
            return IDLE
        return self.k if bag else IDLE

    def bits(self, state: int) -> int:
        return (self.k + 1).bit_length()  # ceil(log2(k + 2))


def countdown_spec() -> Countdown:
    return Countdown()


def flood_forever_spec() -> FloodForever:
    return FloodForever()


def bounded_flood_spec(k: int) -> BoundedFlood:
    return BoundedFlood(k)


def algorithm_from_name(name: str) -> AlgorithmSpec:
    """Resolve ``countdown``, ``flood-forever`` or ``bounded-flood:K``."""
    if name == "countdown":
        return Countdown()
    if name == "flood-forever":
        return FloodForever()
    head, _, arg = name.partition(":")
    if head == "bounded-flood":
        try:
            k = int(arg)
        except ValueError:
            raise ValueError(f"bad bounded-flood parameter in {name!r}") from None
        return BoundedFlood(k)
    raise ValueError(f"unknown algorithm {name!r}")
