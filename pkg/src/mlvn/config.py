"""Declarative run configuration: INI-style sections of flat key/value
pairs, validated into dataclasses on load.

Every default matches the source-material value where one exists: mixing
weight 0.5, evaluation batch 16, komi-rate parameters c=8 and s=0.45,
contending interval (0.45, 0.55).
"""

from __future__ import annotations

import configparser
import hashlib
import io
import os
from dataclasses import dataclass, field
from typing import Optional

from .dynkomi import DynKomiConfig
from .errors import InvalidConfig
from .komi import KomiGrid, default_grid
from .mcts import SearchConfig
from .valuenet import ArchConfig, TrainConfig

ENV_CONFIG_PATH = "MLVN_CONFIG"


@dataclass
class SelfplayConfig:
    games: int = 1000
    positions_per_game: int = 1  # overfitting guard: one position per game
    seed: int = 1


@dataclass
class RunConfig:
    board_size: int = 9
    komi: float = 7.5
    grid: KomiGrid = field(default_factory=KomiGrid)
    arch: ArchConfig = field(default_factory=ArchConfig)
    search: SearchConfig = field(default_factory=SearchConfig)
    dynkomi: DynKomiConfig = field(default_factory=DynKomiConfig)
    selfplay: SelfplayConfig = field(default_factory=SelfplayConfig)
    training: TrainConfig = field(default_factory=TrainConfig)

    def __post_init__(self):
        if self.board_size % 2 == 0 or not (5 <= self.board_size <= 19):
            raise InvalidConfig(f"board size {self.board_size} not an odd size in [5, 19]")
        if self.arch.board_size != self.board_size or self.arch.grid != self.grid:
            # keep the network architecture coherent with board and grid
            from dataclasses import replace

            self.arch = replace(self.arch, board_size=self.board_size, grid=self.grid)

    def config_hash(self) -> str:
        return hashlib.sha256(serialize_config(self).encode()).hexdigest()[:12]


_SECTION_FIELDS = {
    "board": ("board_size", "komi"),
    "grid": None,
    "arch": ("trunk_layers", "trunk_filters", "value_filters", "value_hidden"),
    "search": ("playouts", "c_puct", "lam", "batch_size", "expansion_threshold", "seed"),
    "dynkomi": ("method", "c", "s", "lower", "upper", "lam"),
    "selfplay": ("games", "positions_per_game", "seed"),
    "training": ("epochs", "batch_size", "lr", "momentum", "lr_decay", "augment", "seed"),
}


def serialize_config(cfg: RunConfig) -> str:
    out = io.StringIO()
    out.write("[board]\n")
    out.write(f"size = {cfg.board_size}\n")
    out.write(f"komi = {cfg.komi:g}\n")
    out.write("\n[grid]\n")
    out.write(f"k_min = {cfg.grid.k_min:g}\nk_max = {cfg.grid.k_max:g}\ncenter = {cfg.grid.center:g}\n")
    out.write("\n[arch]\n")
    for name in _SECTION_FIELDS["arch"]:
        out.write(f"{name} = {getattr(cfg.arch, name)}\n")
    out.write("\n[search]\n")
    for name in _SECTION_FIELDS["search"]:
        out.write(f"{name} = {getattr(cfg.search, name)}\n")
    out.write("\n[dynkomi]\n")
    for name in _SECTION_FIELDS["dynkomi"]:
        out.write(f"{name} = {getattr(cfg.dynkomi, name)}\n")
    out.write("\n[selfplay]\n")
    for name in _SECTION_FIELDS["selfplay"]:
        out.write(f"{name} = {getattr(cfg.selfplay, name)}\n")
    out.write("\n[training]\n")
    for name in _SECTION_FIELDS["training"]:
        out.write(f"{name} = {getattr(cfg.training, name)}\n")
    return out.getvalue()


def _coerce(current, raw: str):
    if isinstance(current, bool):
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise InvalidConfig(f"bad boolean {raw!r}")
    if isinstance(current, int):
        return int(raw)
    if isinstance(current, float):
        return float(raw)
    return raw


def _load_section(parser, section: str, obj, names) -> dict:
    if not parser.has_section(section):
        return {}
    updates = {}
    for key, raw in parser.items(section):
        if names is not None and key not in names:
            raise InvalidConfig(f"unknown key {key!r} in [{section}]")
        updates[key] = _coerce(getattr(obj, key), raw)
    return updates


def parse_config(text: str) -> RunConfig:
    parser = configparser.ConfigParser()
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise InvalidConfig(str(exc)) from exc
    for section in parser.sections():
        if section not in _SECTION_FIELDS:
            raise InvalidConfig(f"unknown section [{section}]")
    size = 9
    komi = 7.5
    if parser.has_section("board"):
        for key, raw in parser.items("board"):
            if key == "size":
                size = int(raw)
            elif key == "komi":
                komi = float(raw)
            else:
                raise InvalidConfig(f"unknown key {key!r} in [board]")
    if parser.has_section("grid"):
        g = dict(parser.items("grid"))
        extra = set(g) - {"k_min", "k_max", "center"}
        if extra:
            raise InvalidConfig(f"unknown keys in [grid]: {sorted(extra)}")
        grid = KomiGrid(
            float(g.get("k_min", -20.5)), float(g.get("k_max", 20.5)), float(g.get("center", 7.5))
        )
    else:
        grid = default_grid(size)
    arch_updates = _load_section(parser, "arch", ArchConfig(), _SECTION_FIELDS["arch"])
    cfg = RunConfig(
        board_size=size,
        komi=komi,
        grid=grid,
        arch=ArchConfig(board_size=size, grid=grid, **arch_updates),
        search=SearchConfig(
            **_load_section(parser, "search", SearchConfig(), _SECTION_FIELDS["search"])
        ),
        dynkomi=DynKomiConfig(
            **_load_section(parser, "dynkomi", DynKomiConfig(), _SECTION_FIELDS["dynkomi"])
        ),
        selfplay=SelfplayConfig(
            **_load_section(parser, "selfplay", SelfplayConfig(), _SECTION_FIELDS["selfplay"])
        ),
        training=TrainConfig(
            **_load_section(parser, "training", TrainConfig(), _SECTION_FIELDS["training"])
        ),
    )
    return cfg


def load_config(path: Optional[str] = None) -> RunConfig:
    """Load a config file; falls back to $MLVN_CONFIG, then to defaults."""
    if path is None:
        path = os.environ.get(ENV_CONFIG_PATH)
    if path is None:
        return RunConfig()
    with open(path) as f:
        return parse_config(f.read())
