"""Span metadata: a run of pages carved into equal objects of one size class."""

from dataclasses import dataclass, field
from typing import Dict, List, Set, Tuple

from runtime.sizeclass import PAGE_SHIFT, PAGE_SIZE


@dataclass(frozen=True)
class EscapeRecord:
    """``location`` holds (or held) a pointer into object ``pointee_idx``."""

    location: int
    pointee_span: int  # start page of the pointee's span
    pointee_idx: int


@dataclass
class Span:
    page_base: int
    num_pages: int
    object_size: int
    free_list: List[int] = field(default_factory=list)
    live: Dict[int, int] = field(default_factory=dict)  # idx -> requested bytes
    next_unused: int = 0
    escape_table: Dict[int, Dict[int, EscapeRecord]] = field(default_factory=dict)

    @property
    def start_page(self) -> int:
        return self.page_base >> PAGE_SHIFT

    @property
    def capacity(self) -> int:
        return self.num_pages * PAGE_SIZE // self.object_size

    @property
    def free_set(self) -> Set[int]:
        return set(self.free_list)

    def has_room(self) -> bool:
        return bool(self.free_list) or self.next_unused < self.capacity

    def take_index(self) -> int:
        """Recycle the most recently freed index first."""
        if self.free_list:
            return self.free_list.pop()
        idx = self.next_unused
        self.next_unused += 1
        return idx

    def release(self, idx: int) -> None:
        del self.live[idx]
        self.free_list.append(idx)

    def address_of(self, idx: int) -> int:
        return self.page_base + idx * self.object_size

    def bounds(self, idx: int) -> Tuple[int, int]:
        lower = self.page_base + idx * self.object_size
        return lower, lower + self.object_size

    def escape_count(self) -> int:
        return sum(len(records) for records in self.escape_table.values())
