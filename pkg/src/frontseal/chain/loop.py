"""Discrete-event core: simulated clock, fixed-delay bus and event trace."""

from __future__ import annotations

import heapq
import io
import json
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional

from ..wire import Record


class EventLoop:
    """Single-threaded scheduler ordered by (time, insertion sequence)."""

    def __init__(self):
        self.now_ms = 0.0
        self._queue: list = []
        self._seq = 0

    def schedule(self, at_ms: float, callback: Callable, *args) -> None:
        if at_ms < self.now_ms:
            raise ValueError(f"cannot schedule in the past ({at_ms} < {self.now_ms})")
        heapq.heappush(self._queue, (at_ms, self._seq, callback, args))
        self._seq += 1

    def schedule_in(self, delay_ms: float, callback: Callable, *args) -> None:
        self.schedule(self.now_ms + delay_ms, callback, *args)

    def pending(self) -> int:
        return len(self._queue)

    def step(self) -> bool:
        if not self._queue:
            return False
        at, _, callback, args = heapq.heappop(self._queue)
        self.now_ms = at
        callback(*args)
        return True

    def run_until(self, t_ms: float) -> None:
        while self._queue and self._queue[0][0] <= t_ms:
            self.step()
        self.now_ms = max(self.now_ms, t_ms)

    def run(self, max_events: Optional[int] = None) -> None:
        count = 0
        while self.step():
            count += 1
            if max_events is not None and count >= max_events:
                break


BusTap = Callable[[str, str, Record, float], None]


class Bus:
    """Point-to-point delivery after a fixed per-hop delay.

    Records travel as bytes and are re-parsed on delivery.  Taps observe
    every record at send time; the confidentiality monitor is one.
    """

    def __init__(self, loop: EventLoop, delay_ms: float = 100.0):
        self.loop = loop
        self.delay_ms = delay_ms
        self.endpoints: Dict[str, Callable[[str, Record], None]] = {}
        self.taps: List[BusTap] = []
        self.messages = 0
        self.bytes_sent = 0

    def register(self, name: str, handler: Callable[[str, Record], None]) -> None:
        self.endpoints[name] = handler

    def send(self, sender: str, recipient: str, record: Record) -> None:
        raw = record.to_bytes()
        self.messages += 1
        self.bytes_sent += len(raw)
        for tap in self.taps:
            tap(sender, recipient, record, self.loop.now_ms)
        if recipient in self.endpoints:
            self.loop.schedule_in(self.delay_ms, self._deliver, sender, recipient, raw)

    def _deliver(self, sender: str, recipient: str, raw: bytes) -> None:
        self.endpoints[recipient](sender, Record.from_bytes(raw))


#: trace fields carrying measured wall-clock time; excluded from determinism checks
WALLCLOCK_SUFFIX = "_wall_ms"


@dataclass
class Trace:
    records: List[Dict[str, Any]] = field(default_factory=list)

    def emit(self, tx_id: Optional[str], event: str, sim_time_ms: float, block_height: int, **extra):
        rec = {
            "tx_id": tx_id,
            "event": event,
            "sim_time_ms": sim_time_ms,
            "block_height": block_height,
        }
        rec.update(extra)
        self.records.append(rec)

    def for_tx(self, tx_id: str) -> List[Dict[str, Any]]:
        return [r for r in self.records if r["tx_id"] == tx_id]

    def first(self, tx_id: str, event: str) -> Optional[Dict[str, Any]]:
        for r in self.records:
            if r["tx_id"] == tx_id and r["event"] == event:
                return r
        return None

    def events(self, event: str) -> List[Dict[str, Any]]:
        return [r for r in self.records if r["event"] == event]

    def deterministic_view(self) -> List[Dict[str, Any]]:
        return [
            {k: v for k, v in r.items() if not k.endswith(WALLCLOCK_SUFFIX)} for r in self.records
        ]

    def to_ndjson(self, include_wallclock: bool = True) -> str:
        rows = self.records if include_wallclock else self.deterministic_view()
        buf = io.StringIO()
        for r in rows:
            buf.write(json.dumps(r, sort_keys=True))
            buf.write("\n")
        return buf.getvalue()
