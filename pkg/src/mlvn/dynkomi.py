"""Dynamic komi: the score-based (SS-R/SS-B/SS-M) and value-based (VS-M)
methods plus the multi-label procedure (ML-DK), applied once per move
between searches.

All komi arithmetic is from black's perspective; outputs are clamped to the
half-open band around the value grid so downstream win-rate lookups stay
defined (rollout rates are exact at any real komi, values interpolate).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .errors import GridMismatch, InvalidConfig
from .komi import KomiGrid
from .mcts import RootStats, mixed_winrate
from .valuenet import bv_territory

METHODS = ("none", "ss-r", "ss-b", "ss-m", "vs-m", "ml-dk")


@dataclass(frozen=True)
class DynKomiConfig:
    method: str = "none"
    c: float = 8.0  # komi-rate slope
    s: float = 0.45  # komi-rate phase offset
    lower: float = 0.45  # contending interval (l, u)
    upper: float = 0.55
    lam: float = 0.5  # shared with the search mixing weight

    def __post_init__(self):
        if self.method not in METHODS:
            raise InvalidConfig(f"unknown dynamic komi method {self.method!r}")
        if not (0.0 <= self.lower < self.upper <= 1.0):
            raise InvalidConfig(f"need 0 <= l < u <= 1, got ({self.lower}, {self.upper})")
        if self.c <= 0:
            raise InvalidConfig("komi-rate slope c must be positive")
        if not (0.0 <= self.s <= 1.0):
            raise InvalidConfig("phase offset s must be in [0, 1]")


def komi_rate(i: int, board_points: int, c: float = 8.0, s: float = 0.45) -> float:
    """Logistic schedule alpha = 1 / (1 + exp(c * (i/B - s))).

    Close to 1 early in the game, decaying toward 0 as move ordinal i
    approaches the board size B."""
    phase = i / board_points - s
    return 1.0 / (1.0 + math.exp(c * phase))


def ss_adjust(score_estimate: float, k0: float, rate: float) -> float:
    """Score-based adjustment: k0 + rate * E[score].

    The estimate is black's expected score at the real komi k0; the variants
    differ only in where it comes from (rollout mean, BV territory, or their
    0.5/0.5 mix)."""
    return k0 + rate * score_estimate


def vs_adjust(
    w: float,
    komi: float,
    lower: float = 0.45,
    upper: float = 0.55,
    grid: Optional[KomiGrid] = None,
) -> float:
    """Value-based step: +1 when w > u, -1 when w < l, otherwise unchanged;
    clamped to the grid band when a grid is given."""
    out = komi
    if w > upper:
        out = komi + 1.0
    elif w < lower:
        out = komi - 1.0
    if grid is not None:
        out = min(max(out, grid.k_min - 0.5), grid.k_max + 0.5)
    return out


def _monotone_from_high(w: np.ndarray) -> np.ndarray:
    # running max from the high-komi end makes the curve nonincreasing in k
    return np.maximum.accumulate(w[::-1])[::-1]


def _locate_target_komi(
    w: np.ndarray, k0: float, lower: float, upper: float, grid: KomiGrid
) -> tuple:
    """Regularise the win-rate curve and locate the target komi.

    Returns (Value, located komi): Value is w at the real komi k0; inside
    [l, u] the target stays k0; above u it is the smallest grid komi >= k0
    with w_k <= u (clamped to k_max); below l the largest grid komi <= k0
    with w_k >= l (clamped to k_min).
    """
    w = np.asarray(w, dtype=np.float64)
    if len(w) != grid.count:
        raise GridMismatch(f"w has {len(w)} entries for a {grid.count}-komi grid")
    idx0 = grid.index(k0)
    wm = _monotone_from_high(w)
    value = float(wm[idx0])
    if lower <= value <= upper:
        located = k0
    elif value > upper:
        below = np.nonzero(wm[idx0:] <= upper)[0]
        located = float(grid.values()[idx0 + below[0]]) if len(below) else grid.k_max
    else:
        above = np.nonzero(wm[: idx0 + 1] >= lower)[0]
        located = float(grid.values()[above[-1]]) if len(above) else grid.k_min
    return value, located


def ml_dk(
    i: int,
    board_points: int,
    w: np.ndarray,
    k0: float,
    c: float = 8.0,
    s: float = 0.45,
    lower: float = 0.45,
    upper: float = 0.55,
    grid: Optional[KomiGrid] = None,
) -> float:
    """Multi-label dynamic komi: k0 + (located - k0) * alpha.

    The located komi comes from the contending-interval crossing of the
    (monotone-regularised) mixed win-rate curve, alpha from the komi-rate
    schedule.
    """
    if grid is None:
        grid = KomiGrid(k0 - (len(w) - 1) / 2.0, k0 + (len(w) - 1) / 2.0, k0)
    _, located = _locate_target_komi(w, k0, lower, upper, grid)
    alpha = komi_rate(i, board_points, c, s)
    return k0 + (located - k0) * alpha


@dataclass
class AdjustmentLog:
    move_index: int
    method: str
    value: float  # win rate or score estimate driving the decision
    located: float  # target komi before the rate is applied
    alpha: float
    komi_out: float

    def csv_row(self) -> str:
        return (
            f"{self.move_index},{self.method},{self.value:.6f},"
            f"{self.located:.3f},{self.alpha:.6f},{self.komi_out:.3f}"
        )


LOG_HEADER = "move_index,method,value,located_komi,alpha,komi_out"


@dataclass
class DynKomiState:
    """Per-game dynamic komi state: the real komi k0 and the komi fed to the
    next search."""

    k0: float
    current: float = field(default=None)  # type: ignore[assignment]
    log: List[AdjustmentLog] = field(default_factory=list)

    def __post_init__(self):
        if self.current is None:
            self.current = self.k0

    def reset(self, k0: Optional[float] = None) -> None:
        if k0 is not None:
            self.k0 = k0
        self.current = self.k0
        self.log.clear()


def next_komi(
    cfg: DynKomiConfig,
    state: DynKomiState,
    move_index: int,
    board_points: int,
    stats: RootStats,
) -> float:
    """Compute the dynamic komi for the next search from the latest root
    statistics, record it in the state log, and return it."""
    grid = stats.grid
    k0 = state.k0
    alpha = komi_rate(move_index, board_points, cfg.c, cfg.s)
    method = cfg.method
    if method == "none":
        value, located, out = 0.0, k0, k0
        alpha = 0.0
    elif method in ("ss-r", "ss-b", "ss-m"):
        est_r = stats.mean_rollout_score() - k0
        est_b = bv_territory(stats.root_eval) - k0
        if method == "ss-r":
            est = est_r
        elif method == "ss-b":
            est = est_b
        else:
            est = 0.5 * est_r + 0.5 * est_b
        value = est
        located = k0 + est
        out = ss_adjust(est, k0, alpha)
    elif method == "vs-m":
        value = mixed_winrate(stats, state.current)
        located = vs_adjust(value, state.current, cfg.lower, cfg.upper, grid)
        out = located
        alpha = 1.0
    else:  # ml-dk
        value, located = _locate_target_komi(stats.w, k0, cfg.lower, cfg.upper, grid)
        out = k0 + (located - k0) * alpha
    out = min(max(out, grid.k_min - 0.5), grid.k_max + 0.5)
    state.log.append(
        AdjustmentLog(
            move_index=move_index,
            method=method,
            value=value,
            located=located,
            alpha=alpha,
            komi_out=out,
        )
    )
    state.current = out
    return out


def write_log_csv(entries: List[AdjustmentLog], path) -> None:
    with open(path, "w") as f:
        f.write(LOG_HEADER + "\n")
        for e in entries:
            f.write(e.csv_row() + "\n")
