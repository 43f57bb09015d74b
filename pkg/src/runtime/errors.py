"""Heap misuse detected by the runtime. The VM turns these into verdicts."""

from typing import Optional, Tuple


class HeapViolation(RuntimeError):
    kind = "violation"

    def __init__(self, message: str, address: int = 0):
        self.address = address
        super().__init__(message)

    def details(self) -> dict:
        return {"address": hex(self.address)}


class OutOfBoundsError(HeapViolation):
    kind = "oob"

    def __init__(self, src: int, dst: int, size: int, bounds: Tuple[int, int]):
        self.src = src
        self.dst = dst
        self.size = size
        self.bounds = bounds
        super().__init__(
            f"[{dst:#x}, {dst + size:#x}) escapes object [{bounds[0]:#x}, {bounds[1]:#x})",
            dst,
        )

    def details(self) -> dict:
        return {
            "src": hex(self.src),
            "dst": hex(self.dst),
            "size": self.size,
            "bounds": [hex(self.bounds[0]), hex(self.bounds[1])],
        }


class StaleObjectError(HeapViolation):
    """Range query on an object that is not live."""

    kind = "uaf"

    def __init__(self, address: int, bounds: Optional[Tuple[int, int]] = None):
        self.bounds = bounds
        super().__init__(f"object at {address:#x} is not live", address)


class UnmappedAccessError(HeapViolation):
    """Load or store through a neutralized or otherwise unmapped address."""

    kind = "uaf"

    def __init__(self, address: int):
        super().__init__(f"access to unmapped address {address:#x}", address)


class DoubleFreeError(HeapViolation):
    kind = "double-free"

    def __init__(self, address: int):
        super().__init__(f"object at {address:#x} freed twice", address)


class InvalidFreeError(HeapViolation):
    kind = "invalid-free"

    def __init__(self, address: int, reason: str = "not the start of a live object"):
        super().__init__(f"free({address:#x}): {reason}", address)
