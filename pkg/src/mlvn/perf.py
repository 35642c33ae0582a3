"""Process-level performance knobs.

The evaluator allocates multi-megabyte scratch buffers per forward pass;
glibc's default mmap threshold turns each one into an mmap/munmap round
trip, which costs more than the matmuls. Raising the threshold keeps those
buffers in the arena. Safe no-op on non-glibc platforms.
"""

from __future__ import annotations

import ctypes
import os

_M_MMAP_THRESHOLD = -3
_M_TRIM_THRESHOLD = -1

_done = False


def tune_allocator(threshold: int = 256 * 1024 * 1024) -> bool:
    """Raise the malloc mmap/trim thresholds once per process."""
    global _done
    if _done or os.environ.get("MLVN_NO_MALLOC_TUNING"):
        return _done
    try:
        libc = ctypes.CDLL("libc.so.6", use_errno=True)
        libc.mallopt(_M_MMAP_THRESHOLD, threshold)
        libc.mallopt(_M_TRIM_THRESHOLD, threshold)
        _done = True
    except OSError:
        pass
    return _done
