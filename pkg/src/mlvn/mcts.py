"""PUCT tree search with per-komi statistics.

Every backup records one rollout score and one network evaluation, so each
node carries a histogram of rollout territory differences (win rates
recoverable at any komi, exactly) alongside per-komi value sums. Leaf
evaluations are batched through the evaluator (default batch 16) with a
one-visit virtual loss applied to in-flight paths so batch members diverge.
Single search thread; statistics updates are serialized.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

import numpy as np

from .board import BLACK, WHITE, Board, Move, territory_ownership
from .errors import EmptyHistogram, GameOver, OutOfRange
from .features import encode_features
from .komi import KomiGrid
from .valuenet import Evaluation, evaluation_from_winrates


@dataclass
class SearchConfig:
    playouts: int = 400
    c_puct: float = 1.5
    lam: float = 0.5  # rollout/value mixing weight
    batch_size: int = 16
    rollout_cap: Optional[int] = None  # None -> 3 * size^2
    expansion_threshold: int = 1
    seed: int = 0


# ------------------------------------------------------------ light policy


def _play_light_move(board: Board, rng: random.Random) -> Optional[int]:
    """Play one uniformly random legal move, never filling an own true eye;
    passes when no such move exists. Returns the flat point or None."""
    cands = board._empties[:]
    n = len(cands)
    me = board.to_move
    while n:
        j = rng.randrange(n)
        p = cands[j]
        n -= 1
        cands[j] = cands[n]
        if board._is_true_eye(p, me):
            continue
        if board._try_play(p):
            return p
    board.play(None)
    return None


def light_policy(board: Board, rng: random.Random) -> Move:
    """Move-selection form of the light playout policy (no board mutation)."""
    cands = board._empties[:]
    n = len(cands)
    me = board.to_move
    while n:
        j = rng.randrange(n)
        p = cands[j]
        n -= 1
        cands[j] = cands[n]
        if board._is_true_eye(p, me):
            continue
        if board._probe_legal(p):
            return board.coords(p)
    return None


def rollout(board: Board, rng: random.Random, move_cap: Optional[int] = None) -> int:
    """Light playout from the position; returns the final territory
    difference. A terminal board scores as-is; so does one that hits the
    move cap. The input board is left untouched."""
    b = board.copy()
    cap = 3 * b.size * b.size if move_cap is None else move_cap
    made = 0
    while not b.is_game_over() and made < cap:
        _play_light_move(b, rng)
        made += 1
    return territory_ownership(b)[1]


# -------------------------------------------------------------- statistics


def rollout_winrate(histogram: np.ndarray, komi: float) -> float:
    """Fraction of recorded territory differences strictly above komi.

    The histogram is indexed by n + size^2; exact for any real komi."""
    total = int(histogram.sum())
    if total == 0:
        raise EmptyHistogram("no rollout scores recorded")
    offset = (len(histogram) - 1) // 2
    lo = math.floor(komi) + 1  # smallest integer n with n > komi
    idx = lo + offset
    if idx <= 0:
        return 1.0
    if idx >= len(histogram):
        return 0.0
    return float(histogram[idx:].sum()) / total


@dataclass
class RootStats:
    """Per-komi root statistics after a search: rollout win rates r_k, mean
    network values vbar_k and mixed rates w_k = (1-lam)*r_k + lam*vbar_k."""

    grid: KomiGrid
    lam: float
    N: int
    hist: np.ndarray  # rollout score histogram, index n + size^2
    r: np.ndarray  # (G,)
    vbar: np.ndarray  # (G,)
    w: np.ndarray  # (G,)
    root_eval: Evaluation
    children: List[Tuple[Move, int, float]] = field(default_factory=list)
    root_node: Optional["_Node"] = field(default=None, repr=False)

    def mean_rollout_score(self) -> float:
        offset = (len(self.hist) - 1) // 2
        ns = np.arange(len(self.hist)) - offset
        return float((ns * self.hist).sum() / self.hist.sum())

    def value_winrate(self, komi: float) -> float:
        return float(np.interp(komi, self.grid.values(), self.vbar))

    def trace_json(self) -> str:
        """Root children as a JSON line (move, visits, mixed win rate)."""
        return json.dumps(
            [{"move": m, "n": n, "w": round(q, 6)} for m, n, q in self.children]
        )


def mixed_winrate(stats: RootStats, komi: float) -> float:
    """w at an arbitrary komi: exact rollout rate from the histogram, value
    interpolated between adjacent grid komi (clamped at the ends)."""
    g = stats.grid
    if komi < g.k_min - 1.0 - 1e-9 or komi > g.k_max + 1.0 + 1e-9:
        raise OutOfRange(f"komi {komi} outside [{g.k_min - 1}, {g.k_max + 1}]")
    r = rollout_winrate(stats.hist, komi)
    return (1.0 - stats.lam) * r + stats.lam * stats.value_winrate(komi)


# ------------------------------------------------------------------- nodes


class _Node:
    __slots__ = (
        "move",
        "prior",
        "to_move",
        "N",
        "n_total",
        "q_sum",
        "hist",
        "value_sum",
        "children",
        "child_N",
        "child_W",
        "child_prior",
        "terminal_n",
    )

    def __init__(self, move: Optional[int], prior: float, to_move: int):
        self.move = move  # flat point, or None for pass; root uses None too
        self.prior = prior
        self.to_move = to_move
        self.N = 0
        self.n_total = 0  # N plus in-flight virtual visits
        self.q_sum = 0.0  # mixed win rate at the search komi, black's view
        self.hist: Optional[np.ndarray] = None
        self.value_sum: Optional[np.ndarray] = None
        self.children: Optional[List["_Node"]] = None
        self.child_N: Optional[np.ndarray] = None
        self.child_W: Optional[np.ndarray] = None
        self.child_prior: Optional[np.ndarray] = None
        self.terminal_n: Optional[int] = None


def _expand(node: _Node, board: Board, rng: random.Random) -> None:
    me = board.to_move
    opp = BLACK + WHITE - me
    moves: List[Optional[int]] = []
    for p in board._empties:
        if board._is_true_eye(p, me):
            continue  # own-eye fills are never searched
        if board._probe_legal(p):
            moves.append(p)
    rng.shuffle(moves)
    moves.append(None)  # pass
    prior = 1.0 / len(moves)
    node.children = [_Node(m, prior, opp) for m in moves]
    node.child_N = np.zeros(len(moves))
    node.child_W = np.zeros(len(moves))
    node.child_prior = np.full(len(moves), prior)


def _select_index(node: _Node, c_puct: float) -> int:
    n = node.child_N
    fpu = node.q_sum / node.N if node.N > 0 else 0.5
    q = np.where(n > 0, node.child_W / np.maximum(n, 1.0), fpu)
    if node.to_move == WHITE:
        q = 1.0 - q
    u = node.child_prior * (c_puct * math.sqrt(node.n_total) / (1.0 + n))
    return int(np.argmax(q + u))


def search(
    board: Board,
    config: SearchConfig,
    evaluator,
    dynamic_komi: float,
    rollout_fn: Optional[Callable[[Board, random.Random], int]] = None,
) -> Tuple[Move, RootStats]:
    """Run config.playouts select/expand/evaluate/rollout/backup iterations
    and return (most-visited root move, per-komi root statistics).

    Q during selection is the child's mixed win rate at dynamic_komi, from
    black's perspective, negated for white-to-move parents; unvisited
    children inherit the parent's mixed rate.
    """
    if board.is_game_over():
        raise GameOver("cannot search a finished game")
    grid: KomiGrid = evaluator.grid
    gvals = grid.values()
    G = grid.count
    B2 = board.size * board.size
    lam = config.lam
    rng = random.Random(config.seed)
    cap = 3 * B2 if config.rollout_cap is None else config.rollout_cap
    if rollout_fn is None:
        rollout_fn = lambda b, r: rollout(b, r, cap)
    komi = float(dynamic_komi)

    # interpolation weights for the value curve at the search komi
    if komi <= gvals[0]:
        i_lo = i_hi = 0
        frac = 0.0
    elif komi >= gvals[-1]:
        i_lo = i_hi = G - 1
        frac = 0.0
    else:
        i_lo = int(math.floor(komi - gvals[0]))
        i_hi = i_lo + 1
        frac = komi - gvals[i_lo]

    root = _Node(None, 1.0, board.to_move)
    root_eval: Optional[Evaluation] = None
    done = 0
    while done < config.playouts:
        wave = min(config.batch_size, config.playouts - done)
        pending = []  # (path, edges, feat_index or None, rollout n or exact n)
        feats: List[np.ndarray] = []
        for _ in range(wave):
            b = board.copy()
            node = root
            node.n_total += 1
            path = [root]
            edges: List[Tuple[_Node, int]] = []
            while node.children is not None:
                i = _select_index(node, config.c_puct)
                # one-visit virtual loss so later selections in the wave diverge
                node.child_N[i] += 1.0
                node.child_W[i] += 0.0 if node.to_move == BLACK else 1.0
                edges.append((node, i))
                child = node.children[i]
                child.n_total += 1
                if child.move is None:
                    b.play(None)
                elif not b._try_play(child.move):
                    raise AssertionError("tree move became illegal on replay")
                node = child
                path.append(node)
            if node.terminal_n is not None or b.is_game_over():
                if node.terminal_n is None:
                    node.terminal_n = territory_ownership(b)[1]
                pending.append((path, edges, None, node.terminal_n))
            else:
                if node is root or node.n_total >= config.expansion_threshold:
                    _expand(node, b, rng)
                f = encode_features(b)
                n_roll = rollout_fn(b, rng)
                pending.append((path, edges, len(feats), n_roll))
                feats.append(f)
        if feats:
            v_all, own_all = evaluator.evaluate_planes(np.stack(feats))
        for path, edges, fidx, n_result in pending:
            if fidx is None:
                vvec = (gvals < n_result).astype(np.float64)
                own = None
            else:
                vvec = np.asarray(v_all[fidx], dtype=np.float64)
                own = own_all[fidx]
            if root_eval is None and len(path) == 1 and fidx is not None:
                root_eval = evaluation_from_winrates(vvec, own)
            v_at = vvec[i_lo] * (1.0 - frac) + vvec[i_hi] * frac
            q = (1.0 - lam) * (1.0 if n_result > komi else 0.0) + lam * v_at
            hidx = n_result + B2
            for node in path:
                node.N += 1
                node.q_sum += q
                if node.hist is None:
                    node.hist = np.zeros(2 * B2 + 1, dtype=np.int64)
                    node.value_sum = np.zeros(G)
                node.hist[hidx] += 1
                node.value_sum += vvec
            for parent, i in edges:
                vl = 0.0 if parent.to_move == BLACK else 1.0
                parent.child_W[i] += q - vl
        done += wave

    best_idx = int(np.argmax(root.child_N)) if root.children else 0
    best: Move = None
    if root.children:
        m = root.children[best_idx].move
        best = None if m is None else board.coords(m)

    n_root = root.N
    tail = np.concatenate([np.cumsum(root.hist[::-1])[::-1], [0]])
    idxs = (gvals + 0.5).astype(int) + B2
    r = tail[np.clip(idxs, 0, len(tail) - 1)] / n_root
    vbar = root.value_sum / n_root
    w = (1.0 - lam) * r + lam * vbar
    if root_eval is None:
        # root was terminal-adjacent enough that no leaf eval landed at it;
        # fall back to the root's running means
        root_eval = evaluation_from_winrates(vbar, np.full(B2, 0.5))
    children_summary = []
    for i, child in enumerate(root.children or []):
        nk = int(root.child_N[i])
        qk = float(root.child_W[i] / root.child_N[i]) if nk else 0.0
        mv = None if child.move is None else board.coords(child.move)
        children_summary.append((mv, nk, qk))
    stats = RootStats(
        grid=grid,
        lam=lam,
        N=n_root,
        hist=root.hist.copy(),
        r=r,
        vbar=vbar,
        w=w,
        root_eval=root_eval,
        children=children_summary,
        root_node=root,
    )
    return best, stats
