"""Injectable clocks. Harness scenarios and TTL tests need a hand-driven one."""

from __future__ import annotations

from datetime import datetime, timedelta, timezone
from typing import Protocol


class Clock(Protocol):
    def now(self) -> datetime:
        """Current UTC time, seconds precision."""
        ...


class SystemClock:
    def now(self) -> datetime:
        return datetime.now(timezone.utc).replace(microsecond=0)


class ManualClock:
    """Clock that only moves when told to."""

    def __init__(self, start: datetime | None = None) -> None:
        if start is None:
            start = datetime(2020, 1, 1, tzinfo=timezone.utc)
        if start.tzinfo is None:
            raise ValueError("manual clock start must be timezone-aware")
        self._now = start.astimezone(timezone.utc).replace(microsecond=0)

    def now(self) -> datetime:
        return self._now

    def advance(self, seconds: float) -> datetime:
        self._now += timedelta(seconds=seconds)
        self._now = self._now.replace(microsecond=0)
        return self._now


SYSTEM_CLOCK = SystemClock()
