"""Calibrated CPU burner.

One work unit is one microsecond of busy work on an otherwise idle core.
Hashing large buffers releases the GIL, so burners on different threads do
run concurrently.
"""

import hashlib
import time

_BUFFER = bytes(range(256)) * 4096  # 1 MiB
_rate: float | None = None  # bytes hashed per microsecond


def calibrate(samples: int = 5) -> float:
    global _rate
    best = float("inf")
    view = memoryview(_BUFFER)
    for _ in range(samples):
        t0 = time.perf_counter()
        hashlib.sha256(view).digest()
        best = min(best, time.perf_counter() - t0)
    _rate = len(_BUFFER) / max(best * 1e6, 1e-3)
    return _rate


def bytes_per_us() -> float:
    if _rate is None:
        calibrate()
    return _rate


def burn(work_units: float) -> None:
    if work_units <= 0:
        return
    remaining = int(work_units * bytes_per_us())
    view = memoryview(_BUFFER)
    size = len(_BUFFER)
    while remaining > 0:
        chunk = min(remaining, size)
        hashlib.sha256(view[:chunk]).digest()
        remaining -= chunk
