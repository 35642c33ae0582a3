"""Half-integer komi grid backing the per-komi value head."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GridMismatch, InvalidConfig


def _is_half_integer(k: float) -> bool:
    return abs(k * 2 - round(k * 2)) < 1e-9 and round(k * 2) % 2 != 0


@dataclass(frozen=True)
class KomiGrid:
    """Komi axis k_min, k_min+1, ..., k_max (all half-integers, step 1).

    The grid width equals the value-head width; ``center`` is the komi the
    engine treats as the nominal game komi.
    """

    k_min: float = -20.5
    k_max: float = 20.5
    center: float = 7.5

    def __post_init__(self):
        for k in (self.k_min, self.k_max, self.center):
            if not _is_half_integer(k):
                raise InvalidConfig(f"komi grid entries must be half-integers, got {k}")
        if not (self.k_min <= self.center <= self.k_max):
            raise InvalidConfig(
                f"center komi {self.center} outside grid [{self.k_min}, {self.k_max}]"
            )
        if abs((self.k_max - self.k_min) - round(self.k_max - self.k_min)) > 1e-9:
            raise InvalidConfig("grid endpoints must differ by an integer")

    @property
    def count(self) -> int:
        return int(round(self.k_max - self.k_min)) + 1

    def values(self) -> np.ndarray:
        return self.k_min + np.arange(self.count, dtype=np.float64)

    def contains(self, komi: float) -> bool:
        if komi < self.k_min - 1e-9 or komi > self.k_max + 1e-9:
            return False
        return abs((komi - self.k_min) - round(komi - self.k_min)) < 1e-9

    def index(self, komi: float) -> int:
        if not self.contains(komi):
            raise GridMismatch(f"komi {komi} is not on the grid [{self.k_min}, {self.k_max}]")
        return int(round(komi - self.k_min))


# 9x9 default: score spreads are wide relative to board area
GRID_9 = KomiGrid(-20.5, 20.5, 7.5)
# the 41-output 19x19 grid
GRID_19 = KomiGrid(-12.5, 27.5, 7.5)


def default_grid(size: int) -> KomiGrid:
    return GRID_19 if size >= 13 else GRID_9
