"""Lossless subset parser for agent-generated TypeScript."""

from vibeguard.syntax.nodes import SourceAst, ParseWarning
from vibeguard.syntax.parser import (
    MAX_FILE_BYTES,
    canonical_path,
    node_text,
    parse_file,
    source_of,
)
from vibeguard.syntax.spans import SourceText, Span

__all__ = [
    "MAX_FILE_BYTES",
    "ParseWarning",
    "SourceAst",
    "SourceText",
    "Span",
    "canonical_path",
    "node_text",
    "parse_file",
    "source_of",
]
