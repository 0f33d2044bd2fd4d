"""Broadcast in anonymous, synchronous, 1-interval-connected dynamic networks."""

from .adversaries import Snapshot, adversary_from_name, is_connected
from .algorithms import Countdown, algorithm_from_name, expected_attempt_values
from .core import AlgorithmSpec, MessageBag, Role, canonical_bag, is_idle
from .engine import Configuration, execute_round, run, stabilization_bound

__all__ = [
    "AlgorithmSpec",
    "Configuration",
    "Countdown",
    "MessageBag",
    "Role",
    "Snapshot",
    "adversary_from_name",
    "algorithm_from_name",
    "canonical_bag",
    "execute_round",
    "expected_attempt_values",
    "is_connected",
    "is_idle",
    "run",
    "stabilization_bound",
]
