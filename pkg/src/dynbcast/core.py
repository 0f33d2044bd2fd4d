"""Execution-model contracts shared by algorithms, adversaries and the engine.

A node is anonymous: it sees only its own state and the multiset of messages
delivered to it in a round. Everything an algorithm may do is expressed by
the three pure functions of :class:`AlgorithmSpec`.
"""

from __future__ import annotations

import abc
import enum
from collections import Counter
from typing import Any, Hashable, Iterable, Iterator, Optional


class Role(enum.Enum):
    BROADCASTER = "broadcaster"
    ORDINARY = "ordinary"


class ModelViolation(RuntimeError):
    """A snapshot or configuration broke the execution model (fatal)."""


class InvariantViolation(AssertionError):
    """An algorithm-level invariant failed during a run."""

    def __init__(self, message: str, t: Optional[int] = None):
        super().__init__(message if t is None else f"round {t}: {message}")
        self.t = t


class MessageBag:
    """Canonical multiset of messages, stored as sorted ``(message, count)`` pairs."""

    __slots__ = ("_entries", "_hash")

    def __init__(self, entries: Iterable[tuple[Any, int]] = ()):
        merged: Counter = Counter()
        for msg, count in entries:
            if count < 0:
                raise ValueError("negative multiplicity")
            if count:
                merged[msg] += count
        self._entries = tuple(sorted(merged.items()))
        self._hash = hash(self._entries)

    @classmethod
    def from_messages(cls, messages: Iterable[Any]) -> "MessageBag":
        return cls(Counter(messages).items())

    @property
    def entries(self) -> tuple[tuple[Any, int], ...]:
        return self._entries

    def total(self) -> int:
        return sum(c for _, c in self._entries)

    def distinct(self) -> tuple[Any, ...]:
        return tuple(m for m, _ in self._entries)

    def max_message(self) -> Any:
        if not self._entries:
            raise ValueError("empty bag has no maximum")
        return self._entries[-1][0]

    def __bool__(self) -> bool:
        return bool(self._entries)

    def __len__(self) -> int:
        return self.total()

    def __iter__(self) -> Iterator[Any]:
        for msg, count in self._entries:
            for _ in range(count):
                yield msg

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MessageBag):
            return NotImplemented
        return self._entries == other._entries

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        inner = ", ".join(f"{m!r}: {c}" for m, c in self._entries)
        return f"MessageBag({{{inner}}})"


EMPTY_BAG = MessageBag()


def canonical_bag(messages: Iterable[Any]) -> MessageBag:
    """Order-independent multiset of ``messages``."""
    return MessageBag.from_messages(messages)


class AlgorithmSpec(abc.ABC):
    """A deterministic anonymous protocol.

    States and messages must be hashable, immutable and totally ordered
    among themselves; the engine compares them structurally and never looks
    inside them except through the methods below.
    """

    name: str = "algorithm"

    @abc.abstractmethod
    def init(self, role: Role) -> Hashable: ...

    @abc.abstractmethod
    def emit(self, state) -> Optional[Hashable]:
        """Message broadcast to every current neighbour, or ``None``."""

    @abc.abstractmethod
    def step(self, state, bag: MessageBag) -> Hashable: ...

    @abc.abstractmethod
    def bits(self, state) -> int:
        """Bits needed to store ``state`` between rounds."""

    def counter_value(self, state) -> Optional[int]:
        """Largest counter held in ``state``, for algorithms that keep one."""
        return None

    def state_to_json(self, state) -> Any:
        return state

    def check_round(self, t: int, states: tuple, n: int) -> None:
        """Per-round invariant hook; raise :class:`InvariantViolation` on failure."""


def is_idle(spec: AlgorithmSpec, state) -> bool:
    """True iff ``state`` sends nothing and is a fixed point on an empty bag."""
    return spec.emit(state) is None and spec.step(state, EMPTY_BAG) == state
