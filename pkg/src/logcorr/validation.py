"""Input validation helpers shared by the estimator-style stages."""

from __future__ import annotations

from typing import Iterable, Sequence

from .errors import UnsortedEventsError
from .events import Event


def as_event_sequence(X) -> Sequence[Event]:
    """Materialize X as a sequence of Event records."""
    if isinstance(X, (list, tuple)):
        events = X
    else:
        events = list(X)
    for ev in events[:1]:
        if not isinstance(ev, Event):
            raise TypeError(f"expected Event records, got {type(ev).__name__}")
    return events


def check_sorted(events: Iterable[Event], what: str = "events") -> None:
    """Raise unless timestamps are non-decreasing (ties allowed)."""
    last = None
    for ev in events:
        if last is not None and ev.timestamp < last:
            raise UnsortedEventsError(
                f"{what} are not sorted by timestamp ({ev.timestamp} after {last})"
            )
        last = ev.timestamp


def check_fraction(value: float, name: str) -> None:
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must be in [0, 1], got {value!r}")


def check_positive(value, name: str) -> None:
    if value <= 0:
        raise ValueError(f"{name} must be positive, got {value!r}")
