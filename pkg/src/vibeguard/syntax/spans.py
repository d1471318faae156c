"""Byte-offset spans and position bookkeeping for parsed source files.

Byte offsets are authoritative; line/col are advisory 1-based positions
derived from the file's newline positions. Columns count characters
(a tab is one column).
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass

from vibeguard.errors import SpanOutOfBounds


@dataclass(frozen=True, order=True)
class Span:
    file_id: str
    start: int  # byte offset, inclusive
    end: int    # byte offset, exclusive

    def __post_init__(self) -> None:
        if self.start > self.end:
            raise ValueError(f"span start {self.start} > end {self.end}")

    def contains(self, other: "Span") -> bool:
        return (
            self.file_id == other.file_id
            and self.start <= other.start
            and other.end <= self.end
        )

    def contains_offset(self, offset: int) -> bool:
        return self.start <= offset < max(self.end, self.start + 1)


class SourceText:
    """A decoded source file with char<->byte offset conversion.

    The lexer works on the decoded string; all published offsets are byte
    offsets into the original UTF-8 input.
    """

    def __init__(self, file_id: str, data: bytes) -> None:
        self.file_id = file_id
        self.data = data
        self.text = data.decode("utf-8")  # caller validates; may raise
        self._ascii = len(self.text) == len(data)
        if not self._ascii:
            # c2b[i] = byte offset of character i; length len(text)+1
            offs = [0] * (len(self.text) + 1)
            pos = 0
            for i, ch in enumerate(self.text):
                offs[i] = pos
                pos += len(ch.encode("utf-8"))
            offs[len(self.text)] = pos
            self._c2b = offs
        else:
            self._c2b = None
        # newline byte offsets, for line/col derivation
        self._line_starts = [0]
        for i, b in enumerate(data):
            if b == 0x0A:
                self._line_starts.append(i + 1)

    def byte_len(self) -> int:
        return len(self.data)

    def c2b(self, char_index: int) -> int:
        if self._c2b is None:
            return char_index
        return self._c2b[char_index]

    def b2c(self, byte_offset: int) -> int:
        if self._c2b is None:
            return byte_offset
        return bisect.bisect_right(self._c2b, byte_offset) - 1

    def span(self, char_start: int, char_end: int) -> Span:
        return Span(self.file_id, self.c2b(char_start), self.c2b(char_end))

    def line_col(self, byte_offset: int) -> tuple[int, int]:
        """1-based (line, col) for a byte offset; col counts characters."""
        line = bisect.bisect_right(self._line_starts, byte_offset)
        line_start = self._line_starts[line - 1]
        col = self.b2c(byte_offset) - self.b2c(line_start) + 1
        return line, col

    def offset_of(self, line: int, col: int) -> int:
        """Byte offset of a 1-based (line, col) position."""
        if line < 1 or line > len(self._line_starts):
            raise SpanOutOfBounds(f"line {line} outside {self.file_id}")
        start_c = self.b2c(self._line_starts[line - 1])
        return self.c2b(start_c + col - 1)

    def slice_bytes(self, span: Span) -> bytes:
        if span.start < 0 or span.end > len(self.data):
            raise SpanOutOfBounds(
                f"span [{span.start},{span.end}) outside {self.file_id} "
                f"of length {len(self.data)}"
            )
        return self.data[span.start:span.end]

    def slice(self, span: Span) -> str:
        return self.slice_bytes(span).decode("utf-8")
