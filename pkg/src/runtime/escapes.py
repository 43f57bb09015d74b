"""Bounded, de-duplicating buffer of escape records awaiting commit."""

from typing import List, Set

from runtime.span import EscapeRecord

DEFAULT_CACHE_CAP = 64


class EscapeCache:
    def __init__(self, capacity: int = DEFAULT_CACHE_CAP):
        if capacity < 1:
            raise ValueError(f"escape cache capacity must be positive, got {capacity}")
        self.capacity = capacity
        self.entries: List[EscapeRecord] = []
        self._seen: Set[EscapeRecord] = set()

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, record: EscapeRecord) -> bool:
        return record in self._seen

    @property
    def is_full(self) -> bool:
        return len(self.entries) >= self.capacity

    def add(self, record: EscapeRecord) -> bool:
        """Append unless an identical record is buffered. Caller flushes when full."""
        if record in self._seen:
            return False
        self.entries.append(record)
        self._seen.add(record)
        return True

    def drain(self) -> List[EscapeRecord]:
        entries = self.entries
        self.entries = []
        self._seen = set()
        return entries
