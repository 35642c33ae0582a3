"""Evaluation metrics: MSE(j) curves, d-prediction rates, BV/VN scatter,
and the binomial confidence interval used by the match tables.

Game corpora are lists of selfplay.GameRecord; positions are replayed and
batch-evaluated. An evaluator argument may instead be a callable
GameRecord -> evaluator, which lets oracle evaluators answer per game.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import EmptyDataset
from .features import encode_features
from .komi import KomiGrid
from .selfplay import GameRecord
from .valuenet import evaluation_from_winrates, predicted_score

DEFAULT_J_CAP = 100  # 9x9 move-index bucket ceiling


def _evaluator_for(evaluator, game: GameRecord):
    if callable(evaluator) and not hasattr(evaluator, "evaluate_planes"):
        return evaluator(game)
    return evaluator


def _game_positions_planes(game: GameRecord) -> np.ndarray:
    feats = []
    for _, board in game.positions(range(len(game.moves))):
        feats.append(encode_features(board))
    return np.stack(feats)


@dataclass
class MseCurve:
    """MSE(j) over a game set; positions at j >= j_cap pool into the last
    bucket."""

    values: np.ndarray  # (j_cap + 1,)
    counts: np.ndarray  # positions per bucket
    j_cap: int
    games: int

    def mean(self) -> float:
        total = self.counts.sum()
        return float((self.values * self.counts).sum() / total) if total else float("nan")


def mse_curve(
    games: Sequence[GameRecord],
    evaluator,
    komi: float,
    j_cap: int = DEFAULT_J_CAP,
    value_komi: Optional[float] = None,
) -> MseCurve:
    """Per-move-index MSE of the value output against game outcomes at komi.

    The outcome z_i is +/-1 from the final territory difference at ``komi``;
    the prediction is the raw tanh at ``value_komi`` (default: same komi),
    which must be on the evaluator grid. MSE(j) = sum (z - t)^2 / (2 n_j).
    """
    if not games:
        raise EmptyDataset("no games to evaluate")
    sums = np.zeros(j_cap + 1)
    counts = np.zeros(j_cap + 1, dtype=np.int64)
    for game in games:
        ev = _evaluator_for(evaluator, game)
        k_idx = ev.grid.index(komi if value_komi is None else value_komi)
        z = 1.0 if game.territory_diff > komi else -1.0
        planes = _game_positions_planes(game)
        v, _ = ev.evaluate_planes(planes)
        t = 2.0 * np.asarray(v[:, k_idx], dtype=np.float64) - 1.0
        buckets = np.minimum(np.arange(len(t)), j_cap)
        np.add.at(sums, buckets, (z - t) ** 2)
        np.add.at(counts, buckets, 1)
    values = np.divide(sums, 2.0 * counts, out=np.zeros_like(sums), where=counts > 0)
    return MseCurve(values=values, counts=counts, j_cap=j_cap, games=len(games))


@dataclass
class PredictionReport:
    """d-prediction rates per move index, one row per d."""

    d_values: Tuple[int, ...]
    rates: Dict[int, np.ndarray]  # d -> (j_cap + 1,)
    counts: np.ndarray
    j_cap: int
    games_used: int
    games_skipped: int
    filter_desc: str


def d_prediction_rates(
    games: Sequence[GameRecord],
    evaluator,
    d_values: Sequence[int] = (0, 1, 2, 3, 4, 5, 6, 7),
    j_cap: int = DEFAULT_J_CAP,
) -> PredictionReport:
    """Fraction of positions whose predicted final lead is within d of the
    real one, per move index.

    Games whose final lead falls outside the evaluator grid span are
    excluded (their crossing komi cannot be located).
    """
    if not games:
        raise EmptyDataset("no games to evaluate")
    d_values = tuple(sorted(d_values))
    within: Dict[int, np.ndarray] = {d: np.zeros(j_cap + 1) for d in d_values}
    counts = np.zeros(j_cap + 1, dtype=np.int64)
    used = skipped = 0
    grid_desc = ""
    for game in games:
        ev = _evaluator_for(evaluator, game)
        grid: KomiGrid = ev.grid
        grid_desc = f"{grid.k_min}..{grid.k_max}"
        n = game.territory_diff
        if not (grid.k_min < n < grid.k_max + 1):
            skipped += 1
            continue
        used += 1
        planes = _game_positions_planes(game)
        v, own = ev.evaluate_planes(planes)
        for j in range(len(planes)):
            e = evaluation_from_winrates(v[j], own[j])
            dist = abs(predicted_score(e, grid) - n)
            bucket = min(j, j_cap)
            counts[bucket] += 1
            for d in d_values:
                if dist <= d:
                    within[d][bucket] += 1
    if used == 0:
        raise EmptyDataset("no games with final leads inside the grid span")
    rates = {
        d: np.divide(w, counts, out=np.zeros_like(w), where=counts > 0)
        for d, w in within.items()
    }
    return PredictionReport(
        d_values=d_values,
        rates=rates,
        counts=counts,
        j_cap=j_cap,
        games_used=used,
        games_skipped=skipped,
        filter_desc=f"final lead within grid span ({grid_desc}), no resignations",
    )


@dataclass
class ScatterResult:
    points: List[Tuple[float, float]]  # (bv territory, v at komi)
    komi: float
    lower_right: float  # fraction with territory > komi but value < 0.5
    upper_left: float  # fraction with territory < komi but value > 0.5

    @property
    def discordant(self) -> float:
        return self.lower_right + self.upper_left


def correlation_scatter(boards: Sequence, evaluator, komi: float) -> ScatterResult:
    """BV-implied territory vs value win rate for a sample of positions.

    Quadrants are split by the vertical line x = komi and the horizontal
    line y = 0.5; the off-diagonal quadrants measure BV/VN disagreement.
    """
    if not len(boards):
        raise EmptyDataset("no positions to evaluate")
    k_idx = evaluator.grid.index(komi)
    planes = np.stack([encode_features(b) for b in boards])
    v, own = evaluator.evaluate_planes(planes)
    points = []
    lr = ul = 0
    for i in range(len(boards)):
        x = float(np.sum(2.0 * own[i] - 1.0))
        y = float(v[i, k_idx])
        points.append((x, y))
        if x > komi and y < 0.5:
            lr += 1
        elif x < komi and y > 0.5:
            ul += 1
    n = len(points)
    return ScatterResult(
        points=points, komi=komi, lower_right=lr / n, upper_left=ul / n
    )


def ci95(wins: int, games: int) -> Tuple[float, float]:
    """Win rate and 95% half-width under the normal approximation."""
    if games < 1:
        raise ValueError("need at least one game")
    p = wins / games
    return p, 1.96 * math.sqrt(p * (1.0 - p) / games)
