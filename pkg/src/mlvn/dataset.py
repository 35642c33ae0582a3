"""Binary training-record files.

Little-endian throughout. Header: magic "MLVN", version u16, board size u8,
grid k_min/k_max as i16 tenths. Each record is u32-length-prefixed and packs
the 8 bit-planes, the label sign bits, ownership targets as u8 (0/128/255),
the move index (u16) and game id (u32).
"""

from __future__ import annotations

import struct
from typing import List, Tuple

import numpy as np

from .errors import FormatError
from .features import NUM_PLANES
from .komi import KomiGrid
from .selfplay import TrainingRecord

MAGIC = b"MLVN"
VERSION = 1

_OWN_CODES = {0.0: 0, 0.5: 128, 1.0: 255}
_OWN_VALUES = {0: 0.0, 128: 0.5, 255: 1.0}


def _encode_record(rec: TrainingRecord, size: int, grid: KomiGrid) -> bytes:
    planes = np.asarray(rec.features, dtype=np.uint8).reshape(-1)
    if planes.size != NUM_PLANES * size * size:
        raise FormatError("record feature shape does not match dataset size")
    plane_bytes = np.packbits(planes).tobytes()
    labels = np.asarray(rec.value_labels)
    if labels.size != grid.count:
        raise FormatError("record label width does not match dataset grid")
    label_bytes = np.packbits((labels > 0).astype(np.uint8)).tobytes()
    own = np.asarray(rec.ownership, dtype=np.float32)
    codes = np.empty(own.size, dtype=np.uint8)
    codes[own <= 0.25] = 0
    codes[(own > 0.25) & (own < 0.75)] = 128
    codes[own >= 0.75] = 255
    body = (
        plane_bytes
        + label_bytes
        + codes.tobytes()
        + struct.pack("<HI", rec.move_index, rec.game_id)
    )
    return struct.pack("<I", len(body)) + body


def write_dataset(records: List[TrainingRecord], path, size: int, grid: KomiGrid) -> None:
    header = struct.pack(
        "<4sHB2h",
        MAGIC,
        VERSION,
        size,
        int(round(grid.k_min * 10)),
        int(round(grid.k_max * 10)),
    )
    with open(path, "wb") as f:
        f.write(header)
        for rec in records:
            f.write(_encode_record(rec, size, grid))


def read_dataset(path) -> Tuple[List[TrainingRecord], int, KomiGrid]:
    head_fmt = "<4sHB2h"
    head_size = struct.calcsize(head_fmt)
    with open(path, "rb") as f:
        data = f.read()
    if len(data) < head_size:
        raise FormatError("dataset truncated in header")
    magic, version, size, kmin10, kmax10 = struct.unpack_from(head_fmt, data)
    if magic != MAGIC:
        raise FormatError(f"bad dataset magic {magic!r}")
    if version != VERSION:
        raise FormatError(f"unsupported dataset version {version}")
    grid = KomiGrid(kmin10 / 10.0, kmax10 / 10.0, max(min(7.5, kmax10 / 10.0), kmin10 / 10.0))
    points = size * size
    plane_len = (NUM_PLANES * points + 7) // 8
    label_len = (grid.count + 7) // 8
    body_len = plane_len + label_len + points + 6
    records: List[TrainingRecord] = []
    pos = head_size
    while pos < len(data):
        if pos + 4 > len(data):
            raise FormatError("dataset truncated at record length")
        (length,) = struct.unpack_from("<I", data, pos)
        pos += 4
        if length != body_len:
            raise FormatError(f"record length {length}, expected {body_len}")
        if pos + length > len(data):
            raise FormatError("dataset truncated inside a record")
        body = data[pos : pos + length]
        pos += length
        planes = np.unpackbits(
            np.frombuffer(body[:plane_len], dtype=np.uint8), count=NUM_PLANES * points
        ).astype(np.float32)
        off = plane_len
        bits = np.unpackbits(
            np.frombuffer(body[off : off + label_len], dtype=np.uint8), count=grid.count
        )
        labels = np.where(bits > 0, 1, -1).astype(np.int8)
        off += label_len
        codes = np.frombuffer(body[off : off + points], dtype=np.uint8)
        try:
            own = np.array([_OWN_VALUES[int(c)] for c in codes], dtype=np.float32)
        except KeyError as exc:
            raise FormatError(f"bad ownership code {exc}") from None
        off += points
        move_index, game_id = struct.unpack_from("<HI", body, off)
        feats = planes.reshape(NUM_PLANES, size, size)
        to_move = 1 if feats[4].any() else 2  # plane 4 is black-to-move
        records.append(
            TrainingRecord(
                features=feats,
                value_labels=labels,
                ownership=own,
                to_move=to_move,
                game_id=game_id,
                move_index=move_index,
            )
        )
    return records, size, grid
