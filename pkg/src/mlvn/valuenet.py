"""Two-headed evaluator: shared conv trunk, per-komi value head (tanh),
per-point ownership head (sigmoid).

Forward and backward passes are written directly against numpy; weights are
stored channels-last (conv kernels as (3, 3, C_in, F)) so the im2col matmul
needs no transposes. Win rates are exposed as (tanh + 1) / 2; losses are
computed against the raw tanh outputs and +/-1 labels.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import DimMismatch, FormatError, InvalidConfig
from .features import NUM_PLANES, encode_features
from .komi import GRID_9, KomiGrid

CHECKPOINT_MAGIC = b"MLVW"
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class ArchConfig:
    board_size: int = 9
    input_planes: int = NUM_PLANES
    trunk_layers: int = 5
    trunk_filters: int = 32
    value_filters: int = 2
    value_hidden: int = 64
    grid: KomiGrid = GRID_9

    def __post_init__(self):
        if self.trunk_layers < 1:
            raise InvalidConfig("need at least one trunk layer")
        for name in ("board_size", "input_planes", "trunk_filters", "value_filters", "value_hidden"):
            if getattr(self, name) < 1:
                raise InvalidConfig(f"{name} must be positive")

    @property
    def points(self) -> int:
        return self.board_size * self.board_size


@dataclass
class NetworkParams:
    arch: ArchConfig
    trunk_w: List[np.ndarray]  # (3, 3, C_in, F) each
    trunk_b: List[np.ndarray]  # (F,)
    value_w: np.ndarray  # (F, Fv) 1x1 conv
    value_b: np.ndarray  # (Fv,)
    fc1_w: np.ndarray  # (P*Fv, H)
    fc1_b: np.ndarray  # (H,)
    fc2_w: np.ndarray  # (H, G)
    fc2_b: np.ndarray  # (G,)
    bv_w: np.ndarray  # (F, 1) 1x1 conv
    bv_b: np.ndarray  # (1,)

    def named_arrays(self) -> List[Tuple[str, np.ndarray]]:
        items = []
        for i, (w, b) in enumerate(zip(self.trunk_w, self.trunk_b)):
            items.append((f"trunk{i}.w", w))
            items.append((f"trunk{i}.b", b))
        items += [
            ("value_conv.w", self.value_w),
            ("value_conv.b", self.value_b),
            ("fc1.w", self.fc1_w),
            ("fc1.b", self.fc1_b),
            ("fc2.w", self.fc2_w),
            ("fc2.b", self.fc2_b),
            ("bv_conv.w", self.bv_w),
            ("bv_conv.b", self.bv_b),
        ]
        return items

    def map_arrays(self, fn) -> "NetworkParams":
        return NetworkParams(
            arch=self.arch,
            trunk_w=[fn(w) for w in self.trunk_w],
            trunk_b=[fn(b) for b in self.trunk_b],
            value_w=fn(self.value_w),
            value_b=fn(self.value_b),
            fc1_w=fn(self.fc1_w),
            fc1_b=fn(self.fc1_b),
            fc2_w=fn(self.fc2_w),
            fc2_b=fn(self.fc2_b),
            bv_w=fn(self.bv_w),
            bv_b=fn(self.bv_b),
        )

    def copy(self) -> "NetworkParams":
        return self.map_arrays(np.copy)


def init_params(arch: ArchConfig, seed: int = 0, dtype=np.float32) -> NetworkParams:
    """Fan-in-scaled random initialisation, deterministic for a given seed.

    The per-komi output rows start identical: the win-rate curve's ordering
    then comes from the ordered labels rather than initial per-unit noise,
    which keeps the trained curve monotone at desk-scale data volumes.
    """
    rng = np.random.default_rng(seed)
    P, F, Fv, H, G = arch.points, arch.trunk_filters, arch.value_filters, arch.value_hidden, arch.grid.count

    def he(shape, fan_in, scale=2.0):
        return (rng.standard_normal(shape) * np.sqrt(scale / fan_in)).astype(dtype)

    trunk_w, trunk_b = [], []
    c_in = arch.input_planes
    for _ in range(arch.trunk_layers):
        trunk_w.append(he((3, 3, c_in, F), c_in * 9))
        trunk_b.append(np.zeros(F, dtype=dtype))
        c_in = F
    fc2_w = np.tile(he((H, 1), H, scale=1.0), (1, G))
    return NetworkParams(
        arch=arch,
        trunk_w=trunk_w,
        trunk_b=trunk_b,
        value_w=he((F, Fv), F),
        value_b=np.zeros(Fv, dtype=dtype),
        fc1_w=he((P * Fv, H), P * Fv),
        fc1_b=np.zeros(H, dtype=dtype),
        fc2_w=np.ascontiguousarray(fc2_w),
        fc2_b=np.zeros(G, dtype=dtype),
        bv_w=he((F, 1), F, scale=1.0),
        bv_b=np.zeros(1, dtype=dtype),
    )


def zero_params(arch: ArchConfig, dtype=np.float32) -> NetworkParams:
    return init_params(arch, seed=0, dtype=dtype).map_arrays(np.zeros_like)


# ----------------------------------------------------------------- forward


def _im2col(x: np.ndarray) -> np.ndarray:
    """Column matrix of 3x3 windows, same padding, channels-last.

    x (B, S, S, C) -> (B*S*S, 9*C), window index order (dy, dx, c).
    Built with nine strided copies, which beats gathering the 6-d view.
    """
    B, S, _, C = x.shape
    xp = np.zeros((B, S + 2, S + 2, C), dtype=x.dtype)
    xp[:, 1 : S + 1, 1 : S + 1, :] = x
    buf = np.empty((B, S, S, 3, 3, C), dtype=x.dtype)
    for dy in range(3):
        for dx in range(3):
            buf[:, :, :, dy, dx, :] = xp[:, dy : dy + S, dx : dx + S, :]
    return buf.reshape(B * S * S, 9 * C)


def _conv3x3_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray):
    """Same-padding 3x3 convolution in channels-last layout.

    x (B, S, S, C), w (3, 3, C, F). Returns (pre-activation (B,S,S,F), cols);
    the column matrix feeds the backward pass.
    """
    B, S, _, C = x.shape
    F = w.shape[-1]
    cols = _im2col(x)
    z = cols @ w.reshape(9 * C, F)
    z += b
    return z.reshape(B, S, S, F), cols


def _conv3x3_backward(dz_flat, cols, w, x_shape):
    """Gradients of the 3x3 conv: returns (dw, db, dx)."""
    B, S, _, C = x_shape
    F = w.shape[-1]
    dw = (cols.T @ dz_flat).reshape(3, 3, C, F)
    db = dz_flat.sum(axis=0)
    dcols = dz_flat @ w.reshape(9 * C, F).T
    d6 = dcols.reshape(B, S, S, 3, 3, C)
    dxp = np.zeros((B, S + 2, S + 2, C), dtype=dz_flat.dtype)
    for dy in range(3):
        for dx in range(3):
            dxp[:, dy : dy + S, dx : dx + S, :] += d6[:, :, :, dy, dx, :]
    return dw, db, dxp[:, 1 : S + 1, 1 : S + 1, :]


def _forward_arrays(params: NetworkParams, x: np.ndarray, keep_cache: bool = False):
    """x (B, S, S, C) -> (tanh (B, G), ownership (B, P), cache)."""
    arch = params.arch
    B, S = x.shape[0], arch.board_size
    caches = []
    out = x
    for w, b in zip(params.trunk_w, params.trunk_b):
        z, cols = _conv3x3_forward(out, w, b)
        out = np.maximum(z, 0.0)
        if keep_cache:
            caches.append((cols, out))
    flat = out.reshape(B * S * S, arch.trunk_filters)
    v1 = flat @ params.value_w + params.value_b  # (BSS, Fv)
    x1 = v1.reshape(B, S * S * arch.value_filters)
    z1 = x1 @ params.fc1_w + params.fc1_b
    h = np.maximum(z1, 0.0)
    z2 = h @ params.fc2_w + params.fc2_b
    t = np.tanh(z2)
    zb = flat @ params.bv_w + params.bv_b  # (BSS, 1)
    # sigmoid via tanh for overflow-free evaluation
    o = 0.5 * (1.0 + np.tanh(0.5 * zb.reshape(B, S * S)))
    cache = None
    if keep_cache:
        cache = {"x": x, "trunk": caches, "flat": flat, "x1": x1, "h": h, "t": t, "o": o}
    return t, o.astype(t.dtype, copy=False), cache


def _check_features(arch: ArchConfig, feats: np.ndarray, batched: bool) -> None:
    want = (arch.input_planes, arch.board_size, arch.board_size)
    shape = feats.shape[1:] if batched else feats.shape
    if tuple(shape) != want:
        raise DimMismatch(f"feature shape {tuple(shape)} does not match network {want}")


def _to_channels_last(feats: np.ndarray, dtype) -> np.ndarray:
    return np.ascontiguousarray(np.transpose(feats, (0, 2, 3, 1)), dtype=dtype)


@dataclass
class Evaluation:
    """Network output for one position: per-komi values plus ownership."""

    raw_tanh: np.ndarray  # (G,) in [-1, 1]
    ownership: np.ndarray  # (P,) in [0, 1]

    @property
    def v(self) -> np.ndarray:
        """Per-komi win rates in [0, 1]."""
        return (self.raw_tanh + 1.0) / 2.0


def evaluation_from_winrates(v: np.ndarray, ownership: np.ndarray) -> Evaluation:
    return Evaluation(raw_tanh=2.0 * np.asarray(v, dtype=np.float64) - 1.0, ownership=np.asarray(ownership, dtype=np.float64))


def forward(params: NetworkParams, features: np.ndarray) -> Evaluation:
    """Evaluate a single position given its (8, size, size) planes."""
    feats = np.asarray(features)
    _check_features(params.arch, feats, batched=False)
    dtype = params.fc2_w.dtype
    x = _to_channels_last(feats[None], dtype)
    t, o, _ = _forward_arrays(params, x)
    return Evaluation(raw_tanh=t[0].astype(np.float64), ownership=o[0].astype(np.float64))


# -------------------------------------------------------------------- loss


@dataclass(frozen=True)
class LossBreakdown:
    value_mse: float
    bv_mse: float

    @property
    def total(self) -> float:
        # BV and value losses weighted 1:1
        return self.value_mse + self.bv_mse


def _loss_grad_arrays(params: NetworkParams, x, y, tau):
    """Loss and full gradient for a batch in array form.

    x (B,S,S,C) features, y (B,G) +/-1 labels, tau (B,P) ownership targets.
    """
    arch = params.arch
    B, S = x.shape[0], arch.board_size
    G, P, F, Fv = arch.grid.count, arch.points, arch.trunk_filters, arch.value_filters
    t, o, cache = _forward_arrays(params, x, keep_cache=True)

    diff_v = t - y
    value_mse = float(np.mean(diff_v**2) / 2.0)
    diff_o = o - tau
    bv_mse = float(np.mean(diff_o**2))

    dt = diff_v / (B * G)
    dz2 = dt * (1.0 - t**2)
    h = cache["h"]
    g_fc2_w = h.T @ dz2
    g_fc2_b = dz2.sum(axis=0)
    dh = dz2 @ params.fc2_w.T
    dz1 = dh * (h > 0)
    x1 = cache["x1"]
    g_fc1_w = x1.T @ dz1
    g_fc1_b = dz1.sum(axis=0)
    dx1 = dz1 @ params.fc1_w.T
    dv1 = dx1.reshape(B * S * S, Fv)
    flat = cache["flat"]
    g_value_w = flat.T @ dv1
    g_value_b = dv1.sum(axis=0)
    dflat = dv1 @ params.value_w.T  # (BSS, F)

    do = 2.0 * diff_o / (B * P)
    dzb = (do * o * (1.0 - o)).reshape(B * S * S, 1)
    g_bv_w = flat.T @ dzb
    g_bv_b = dzb.sum(axis=0)
    dflat += dzb @ params.bv_w.T

    dout = dflat.reshape(B, S, S, F)
    g_trunk_w: List[np.ndarray] = [None] * arch.trunk_layers  # type: ignore
    g_trunk_b: List[np.ndarray] = [None] * arch.trunk_layers  # type: ignore
    for i in range(arch.trunk_layers - 1, -1, -1):
        cols, out = cache["trunk"][i]
        dz = (dout * (out > 0)).reshape(B * S * S, -1)
        below_shape = cache["x"].shape if i == 0 else (B, S, S, F)
        dw, db, dout = _conv3x3_backward(dz, cols, params.trunk_w[i], below_shape)
        g_trunk_w[i] = dw
        g_trunk_b[i] = db

    grads = NetworkParams(
        arch=arch,
        trunk_w=g_trunk_w,
        trunk_b=g_trunk_b,
        value_w=g_value_w,
        value_b=g_value_b,
        fc1_w=g_fc1_w,
        fc1_b=g_fc1_b,
        fc2_w=g_fc2_w,
        fc2_b=g_fc2_b,
        bv_w=g_bv_w,
        bv_b=g_bv_b,
    )
    return LossBreakdown(value_mse=value_mse, bv_mse=bv_mse), grads


def records_to_arrays(records: Sequence, dtype=np.float32):
    """Stack TrainingRecords into (planes, labels, ownership) arrays."""
    if not records:
        raise DimMismatch("empty record batch")
    x = np.stack([r.features for r in records]).astype(dtype)
    y = np.stack([r.value_labels for r in records]).astype(dtype)
    tau = np.stack([r.ownership for r in records]).astype(dtype)
    return x, y, tau


def loss_and_grad(params: NetworkParams, records: Sequence) -> Tuple[LossBreakdown, NetworkParams]:
    """Two-headed loss and its gradient for a batch of TrainingRecords."""
    x, y, tau = records_to_arrays(records, dtype=params.fc2_w.dtype)
    _check_features(params.arch, x, batched=True)
    if y.shape[1] != params.arch.grid.count:
        raise DimMismatch(f"label width {y.shape[1]} vs grid {params.arch.grid.count}")
    xb = _to_channels_last(x, params.fc2_w.dtype)
    return _loss_grad_arrays(params, xb, y, tau)


def evaluate_loss(params: NetworkParams, x, y, tau, batch_size: int = 256) -> LossBreakdown:
    """Mean loss over a dataset already in array form (channels-first x)."""
    dtype = params.fc2_w.dtype
    v_sum = b_sum = 0.0
    n = len(x)
    for i in range(0, n, batch_size):
        xb = _to_channels_last(np.asarray(x[i : i + batch_size], dtype=dtype), dtype)
        t, o, _ = _forward_arrays(params, xb)
        m = len(xb)
        v_sum += float(np.mean((t - y[i : i + m]) ** 2) / 2.0) * m
        b_sum += float(np.mean((o - tau[i : i + m]) ** 2)) * m
    return LossBreakdown(value_mse=v_sum / n, bv_mse=b_sum / n)


# ------------------------------------------------------------------- train


@dataclass
class TrainConfig:
    epochs: int = 40
    batch_size: int = 32
    lr: float = 0.02
    momentum: float = 0.9
    lr_decay: float = 0.1
    # epochs (as fractions of the total) at which lr is multiplied by lr_decay
    lr_milestones: Tuple[float, ...] = (0.6, 0.85)
    augment: bool = True
    seed: int = 0


def _dihedral(x: np.ndarray, idx: int) -> np.ndarray:
    """One of the 8 board symmetries applied to the last two spatial axes."""
    rot = idx % 4
    out = np.rot90(x, rot, axes=(-2, -1))
    if idx >= 4:
        out = np.flip(out, axis=-1)
    return out


def train(
    params: NetworkParams,
    records: Sequence,
    config: TrainConfig,
    eval_records: Optional[Sequence] = None,
    log=None,
) -> Tuple[NetworkParams, List[dict]]:
    """SGD with momentum over the record set; returns params and a per-epoch
    loss history. Deterministic for a given seed and batch size."""
    from .perf import tune_allocator

    tune_allocator()
    arch = params.arch
    x, y, tau = records_to_arrays(records)
    _check_features(arch, x, batched=True)
    if y.shape[1] != arch.grid.count:
        raise DimMismatch(f"label width {y.shape[1]} vs grid width {arch.grid.count}")
    eval_arrays = None
    if eval_records:
        eval_arrays = records_to_arrays(eval_records)
    S = arch.board_size
    params = params.copy()
    velocity = params.map_arrays(np.zeros_like)
    rng = np.random.default_rng(config.seed)
    milestones = {max(1, int(config.epochs * f)) for f in config.lr_milestones}
    lr = config.lr
    history: List[dict] = []
    n = len(records)
    for epoch in range(1, config.epochs + 1):
        if epoch in milestones:
            lr *= config.lr_decay
        order = rng.permutation(n)
        run_v = run_b = 0.0
        batches = 0
        for i in range(0, n, config.batch_size):
            take = order[i : i + config.batch_size]
            xb, yb, taub = x[take], y[take], tau[take]
            if config.augment:
                sym = int(rng.integers(8))
                if sym:
                    xb = _dihedral(xb, sym)
                    taub = _dihedral(taub.reshape(-1, S, S), sym).reshape(len(taub), -1)
            xb = _to_channels_last(xb, params.fc2_w.dtype)
            loss, grads = _loss_grad_arrays(params, xb, yb, np.ascontiguousarray(taub))
            for (_, v), (_, g), (_, w) in zip(
                velocity.named_arrays(), grads.named_arrays(), params.named_arrays()
            ):
                v *= config.momentum
                v -= lr * g.astype(w.dtype, copy=False)
                w += v
            run_v += loss.value_mse
            run_b += loss.bv_mse
            batches += 1
        row = {
            "epoch": epoch,
            "lr": lr,
            "train_value_mse": run_v / batches,
            "train_bv_mse": run_b / batches,
            "train_total": (run_v + run_b) / batches,
        }
        if eval_arrays is not None:
            ev = evaluate_loss(params, *eval_arrays)
            row.update(
                eval_value_mse=ev.value_mse, eval_bv_mse=ev.bv_mse, eval_total=ev.total
            )
        history.append(row)
        if log:
            log(row)
    return params, history


# ------------------------------------------------------------ derived heads


def predicted_score(ev: Evaluation, grid: KomiGrid) -> int:
    """Integer black lead implied by the value curve.

    Locates the first komi k (scanning from the low end) with v_k >= 0.5 and
    v_{k+1} < 0.5 and returns k + 0.5. Returns the clamped markers
    k_min - 0.5 / k_max + 0.5 when the curve never crosses 50%.
    """
    v = ev.v
    vals = grid.values()
    for j in range(len(v) - 1):
        if v[j] >= 0.5 and v[j + 1] < 0.5:
            return int(round(vals[j] + 0.5))
    if v[0] < 0.5:
        return int(round(vals[0] - 0.5))
    return int(round(vals[-1] + 0.5))


def bv_territory(ev: Evaluation) -> float:
    """Expected territory difference implied by the ownership head:
    sum over points of (2*O_P - 1)."""
    return float(np.sum(2.0 * ev.ownership - 1.0))


# -------------------------------------------------------------- evaluators


class NetworkEvaluator:
    """Batched evaluation service around a fixed parameter set.

    Callers submit feature batches; requests are processed in chunks of at
    most ``batch_size`` (default 16) and answers are returned in request
    order. Params are treated as read-only.
    """

    def __init__(self, params: NetworkParams, batch_size: int = 16):
        from .perf import tune_allocator

        tune_allocator()
        self.params = params
        self.batch_size = batch_size
        self.grid = params.arch.grid
        self.board_size = params.arch.board_size

    def evaluate_planes(self, feats: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """(n, 8, S, S) -> per-komi win rates (n, G) and ownership (n, P)."""
        feats = np.asarray(feats)
        _check_features(self.params.arch, feats, batched=True)
        dtype = self.params.fc2_w.dtype
        vs, os_ = [], []
        for i in range(0, len(feats), self.batch_size):
            x = _to_channels_last(feats[i : i + self.batch_size], dtype)
            t, o, _ = _forward_arrays(self.params, x)
            vs.append((t + 1.0) / 2.0)
            os_.append(o)
        return np.concatenate(vs), np.concatenate(os_)

    def evaluate(self, features: np.ndarray) -> Evaluation:
        v, o = self.evaluate_planes(np.asarray(features)[None])
        return evaluation_from_winrates(v[0], o[0])

    def evaluate_board(self, board) -> Evaluation:
        return self.evaluate(encode_features(board))


class ConstantEvaluator:
    """Fixed-output evaluator; the uniform (v=0.5) flavour is the fallback
    when no checkpoint is available, other values serve as test stubs."""

    def __init__(self, grid: KomiGrid, board_size: int, v=0.5, ownership: float = 0.5):
        self.grid = grid
        self.board_size = board_size
        vv = np.asarray(v, dtype=np.float64)
        self._v = np.full(grid.count, float(v)) if vv.ndim == 0 else vv.astype(np.float64)
        self._own = np.full(board_size * board_size, ownership)

    def evaluate_planes(self, feats: np.ndarray):
        n = len(feats)
        return np.tile(self._v, (n, 1)), np.tile(self._own, (n, 1))

    def evaluate(self, features) -> Evaluation:
        return evaluation_from_winrates(self._v.copy(), self._own.copy())

    def evaluate_board(self, board) -> Evaluation:
        return self.evaluate(None)


class LabelEvaluator:
    """Oracle that answers with the exact labels of a known final score:
    v_k = 1 for k < n, 0 for k > n, plus the true ownership if given."""

    def __init__(self, n: int, grid: KomiGrid, board_size: int, ownership=None):
        self.grid = grid
        self.board_size = board_size
        self._v = (grid.values() < n).astype(np.float64)
        if ownership is None:
            self._own = np.full(board_size * board_size, 0.5)
        else:
            self._own = np.asarray(ownership, dtype=np.float64)

    def evaluate_planes(self, feats: np.ndarray):
        n = len(feats)
        return np.tile(self._v, (n, 1)), np.tile(self._own, (n, 1))

    def evaluate(self, features) -> Evaluation:
        return evaluation_from_winrates(self._v.copy(), self._own.copy())

    def evaluate_board(self, board) -> Evaluation:
        return self.evaluate(None)


# --------------------------------------------------------------- checkpoint


def save_checkpoint(params: NetworkParams, path) -> None:
    arch = params.arch
    header = struct.pack(
        "<4sHBBBHBH3h",
        CHECKPOINT_MAGIC,
        CHECKPOINT_VERSION,
        arch.board_size,
        arch.input_planes,
        arch.trunk_layers,
        arch.trunk_filters,
        arch.value_filters,
        arch.value_hidden,
        int(round(arch.grid.k_min * 10)),
        int(round(arch.grid.k_max * 10)),
        int(round(arch.grid.center * 10)),
    )
    with open(path, "wb") as f:
        f.write(header)
        for _, arr in params.named_arrays():
            f.write(np.ascontiguousarray(arr, dtype="<f4").tobytes())


def load_checkpoint(path) -> NetworkParams:
    head_size = struct.calcsize("<4sHBBBHBH3h")
    with open(path, "rb") as f:
        head = f.read(head_size)
        if len(head) < head_size:
            raise FormatError("checkpoint truncated in header")
        magic, version, size, planes, layers, filters, vf, hidden, kmin10, kmax10, kc10 = struct.unpack(
            "<4sHBBBHBH3h", head
        )
        if magic != CHECKPOINT_MAGIC:
            raise FormatError(f"bad checkpoint magic {magic!r}")
        if version != CHECKPOINT_VERSION:
            raise FormatError(f"unsupported checkpoint version {version}")
        arch = ArchConfig(
            board_size=size,
            input_planes=planes,
            trunk_layers=layers,
            trunk_filters=filters,
            value_filters=vf,
            value_hidden=hidden,
            grid=KomiGrid(kmin10 / 10.0, kmax10 / 10.0, kc10 / 10.0),
        )
        params = zero_params(arch)
        for _, arr in params.named_arrays():
            raw = f.read(arr.size * 4)
            if len(raw) != arr.size * 4:
                raise FormatError("checkpoint truncated in weights")
            arr[...] = np.frombuffer(raw, dtype="<f4").reshape(arr.shape)
        if f.read(1):
            raise FormatError("trailing bytes after weights")
    return params
