"""GTP (Go Text Protocol, version 2) front end.

Standard command set plus engine extensions prefixed ``mlvn-``:
value grid, ownership grid, current dynamic komi, and score prediction.
Strictly sequential: one command in, one full response out; malformed input
gets a "? message" reply and never kills the process.
"""

from __future__ import annotations

import sys
from typing import Optional, TextIO

from . import __version__
from .board import BLACK, WHITE, Move, final_ownership
from .engine import EngineSession
from .errors import MlvnError
from .sgf import result_string
from .valuenet import predicted_score

COLUMN_LETTERS = "ABCDEFGHJKLMNOPQRST"  # no I


def format_vertex(move: Move) -> str:
    if move is None:
        return "pass"
    col, row = move
    return f"{COLUMN_LETTERS[col]}{row + 1}"


def parse_vertex(text: str, size: int) -> Move:
    t = text.strip().upper()
    if t == "PASS":
        return None
    if len(t) < 2 or t[0] not in COLUMN_LETTERS:
        raise ValueError(f"bad vertex {text!r}")
    col = COLUMN_LETTERS.index(t[0])
    row = int(t[1:]) - 1
    if not (0 <= col < size and 0 <= row < size):
        raise ValueError(f"vertex {text!r} outside a {size}x{size} board")
    return col, row


def _parse_color(text: str) -> int:
    t = text.strip().lower()
    if t in ("b", "black"):
        return BLACK
    if t in ("w", "white"):
        return WHITE
    raise ValueError(f"bad color {text!r}")


class GtpServer:
    """Command loop around one EngineSession."""

    def __init__(self, session: EngineSession, name: str = "mlvn"):
        self.session = session
        self.name = name
        self._quit = False
        self.commands = {
            "protocol_version": self._cmd_protocol_version,
            "name": self._cmd_name,
            "version": self._cmd_version,
            "known_command": self._cmd_known_command,
            "list_commands": self._cmd_list_commands,
            "boardsize": self._cmd_boardsize,
            "clear_board": self._cmd_clear_board,
            "komi": self._cmd_komi,
            "fixed_handicap": self._cmd_fixed_handicap,
            "play": self._cmd_play,
            "genmove": self._cmd_genmove,
            "final_score": self._cmd_final_score,
            "showboard": self._cmd_showboard,
            "quit": self._cmd_quit,
            "mlvn-values": self._cmd_values,
            "mlvn-ownership": self._cmd_ownership,
            "mlvn-dynkomi": self._cmd_dynkomi,
            "mlvn-score-prediction": self._cmd_score_prediction,
        }

    # ------------------------------------------------------------- protocol

    def handle_line(self, line: str) -> Optional[str]:
        """Process one command line; returns the full response (with its
        trailing blank line) or None for empty/comment input."""
        line = line.split("#", 1)[0].strip()
        if not line:
            return None
        parts = line.split()
        cmd_id = ""
        if parts[0].isdigit():
            cmd_id = parts[0]
            parts = parts[1:]
            if not parts:
                return f"?{' ' + cmd_id if cmd_id else ''} missing command\n\n"
        cmd, args = parts[0], parts[1:]
        handler = self.commands.get(cmd)
        ok = f"={cmd_id}" if cmd_id else "="
        err = f"?{cmd_id}" if cmd_id else "?"
        if handler is None:
            return f"{err} unknown command\n\n"
        try:
            payload = handler(args)
        except (MlvnError, ValueError, IndexError) as exc:
            return f"{err} {exc}\n\n"
        return f"{ok} {payload}".rstrip() + "\n\n"

    def serve(self, infile: TextIO = None, outfile: TextIO = None) -> None:
        infile = infile or sys.stdin
        outfile = outfile or sys.stdout
        for line in infile:
            response = self.handle_line(line)
            if response is not None:
                outfile.write(response)
                outfile.flush()
            if self._quit:
                break

    # ------------------------------------------------------------- commands

    def _cmd_protocol_version(self, args) -> str:
        return "2"

    def _cmd_name(self, args) -> str:
        return self.name

    def _cmd_version(self, args) -> str:
        return __version__

    def _cmd_known_command(self, args) -> str:
        return "true" if args and args[0] in self.commands else "false"

    def _cmd_list_commands(self, args) -> str:
        return "\n".join(sorted(self.commands))

    def _cmd_boardsize(self, args) -> str:
        size = int(args[0])
        self.session.reset_board(size)
        return ""

    def _cmd_clear_board(self, args) -> str:
        self.session.reset_board()
        return ""

    def _cmd_komi(self, args) -> str:
        self.session.set_komi(float(args[0]))
        return ""

    def _cmd_fixed_handicap(self, args) -> str:
        h = int(args[0])
        points = self.session.place_handicap(h)
        return " ".join(format_vertex(p) for p in points)

    def _cmd_play(self, args) -> str:
        color = _parse_color(args[0])
        move = parse_vertex(args[1], self.session.board.size)
        if self.session.board.to_move != color:
            self.session.board.set_to_move(color)
        self.session.observe(move)
        return ""

    def _cmd_genmove(self, args) -> str:
        color = _parse_color(args[0])
        if self.session.board.to_move != color:
            self.session.board.set_to_move(color)
        move = self.session.genmove()
        return format_vertex(move)

    def _cmd_final_score(self, args) -> str:
        _, score = final_ownership(self.session.board)
        return result_string(score.territory_diff, self.session.board.komi)

    def _cmd_showboard(self, args) -> str:
        from .board import board_diagram

        return "\n" + board_diagram(self.session.board)

    def _cmd_quit(self, args) -> str:
        self._quit = True
        return ""

    # ----------------------------------------------------------- extensions

    def _cmd_values(self, args) -> str:
        """Per-komi win rates of the current position, one "komi winrate"
        pair per line."""
        ev = self.session.evaluator.evaluate_board(self.session.board)
        grid = self.session.evaluator.grid
        lines = [f"{k:g} {v:.6f}" for k, v in zip(grid.values(), ev.v)]
        return "\n".join(lines)

    def _cmd_ownership(self, args) -> str:
        """Ownership probabilities, one row per line from the top row down."""
        ev = self.session.evaluator.evaluate_board(self.session.board)
        size = self.session.board.size
        own = ev.ownership.reshape(size, size)
        rows = []
        for r in range(size - 1, -1, -1):
            rows.append(" ".join(f"{own[r, c]:.4f}" for c in range(size)))
        return "\n".join(rows)

    def _cmd_dynkomi(self, args) -> str:
        st = self.session.dyn_state
        return f"{self.session.dynkomi_config.method} {st.current:g}"

    def _cmd_score_prediction(self, args) -> str:
        ev = self.session.evaluator.evaluate_board(self.session.board)
        return str(predicted_score(ev, self.session.evaluator.grid))


def serve_stdio(session: EngineSession, name: str = "mlvn") -> None:
    GtpServer(session, name).serve()
