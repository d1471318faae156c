"""Tokenizer for the analyzed TypeScript subset.

Tokens and trivia (whitespace + comments) together tile the input
exactly, so the original file is always reproducible from spans. The
lexer never fails: anything unrecognizable becomes a BAD token.
"""

from __future__ import annotations

from dataclasses import dataclass

NAME = "name"
STRING = "string"
TEMPLATE = "template"
NUMBER = "number"
PUNCT = "punct"
BAD = "bad"
EOF = "eof"

WS = "whitespace"
LINE_COMMENT = "line_comment"
BLOCK_COMMENT = "block_comment"

# longest-match first
_PUNCTS = [
    "...", "===", "!==", "**=", "<<=", ">>=", "&&=", "||=", "??=",
    "=>", "==", "!=", "<=", ">=", "&&", "||", "??", "?.", "++", "--",
    "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "**", "<<", ">>",
    "(", ")", "[", "]", "{", "}", ";", ":", ",", ".", "<", ">", "+",
    "-", "*", "/", "%", "&", "|", "^", "!", "?", "=", "~", "@",
]

_ESCAPES = {"n": "\n", "t": "\t", "r": "\r", "b": "\b", "f": "\f",
            "v": "\v", "0": "\0", "'": "'", '"': '"', "`": "`", "\\": "\\"}


@dataclass(frozen=True)
class Token:
    kind: str
    start: int  # char offset
    end: int    # char offset, exclusive
    text: str
    value: str = ""  # decoded value for STRING tokens


@dataclass(frozen=True)
class Trivia:
    kind: str
    start: int
    end: int


def _is_name_start(ch: str) -> bool:
    return ch.isalpha() or ch in "_$"


def _is_name_part(ch: str) -> bool:
    return ch.isalnum() or ch in "_$"


def _decode_string(raw: str) -> str:
    out: list[str] = []
    i = 0
    while i < len(raw):
        ch = raw[i]
        if ch == "\\" and i + 1 < len(raw):
            nxt = raw[i + 1]
            if nxt in _ESCAPES:
                out.append(_ESCAPES[nxt])
                i += 2
                continue
            if nxt == "u" and i + 5 < len(raw):
                hexpart = raw[i + 2:i + 6]
                try:
                    out.append(chr(int(hexpart, 16)))
                    i += 6
                    continue
                except ValueError:
                    pass
            out.append(nxt)
            i += 2
            continue
        out.append(ch)
        i += 1
    return "".join(out)


class LexResult:
    def __init__(self, tokens: list[Token], trivia: list[Trivia],
                 warnings: list[tuple[int, str]]) -> None:
        self.tokens = tokens
        self.trivia = trivia
        self.warnings = warnings  # (char offset, message)


def skip_string(text: str, i: int) -> int:
    """Advance past a quoted string starting at text[i]; returns end index.

    Unterminated strings end at the newline (or EOF)."""
    quote = text[i]
    i += 1
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\\" and i + 1 < n:
            i += 2
            continue
        if ch == quote:
            return i + 1
        if ch == "\n":
            return i
        i += 1
    return n


def skip_template(text: str, i: int) -> int:
    """Advance past a template literal starting at text[i] (a backtick)."""
    i += 1
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\\" and i + 1 < n:
            i += 2
            continue
        if ch == "`":
            return i + 1
        if ch == "$" and i + 1 < n and text[i + 1] == "{":
            i = skip_balanced_braces(text, i + 1)
            continue
        i += 1
    return n


def skip_balanced_braces(text: str, i: int) -> int:
    """Advance past a `{ ... }` region starting at text[i], respecting
    nested strings, templates and comments."""
    n = len(text)
    depth = 0
    while i < n:
        ch = text[i]
        if ch in "'\"":
            i = skip_string(text, i)
            continue
        if ch == "`":
            i = skip_template(text, i)
            continue
        if ch == "/" and i + 1 < n and text[i + 1] == "/":
            while i < n and text[i] != "\n":
                i += 1
            continue
        if ch == "/" and i + 1 < n and text[i + 1] == "*":
            j = text.find("*/", i + 2)
            i = n if j < 0 else j + 2
            continue
        if ch == "{":
            depth += 1
        elif ch == "}":
            depth -= 1
            if depth == 0:
                return i + 1
        i += 1
    return n


def tokenize(text: str) -> LexResult:
    tokens: list[Token] = []
    trivia: list[Trivia] = []
    warnings: list[tuple[int, str]] = []
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            j = i
            while j < n and text[j].isspace():
                j += 1
            trivia.append(Trivia(WS, i, j))
            i = j
            continue
        if ch == "/" and i + 1 < n and text[i + 1] == "/":
            j = text.find("\n", i)
            j = n if j < 0 else j
            trivia.append(Trivia(LINE_COMMENT, i, j))
            i = j
            continue
        if ch == "/" and i + 1 < n and text[i + 1] == "*":
            j = text.find("*/", i + 2)
            if j < 0:
                warnings.append((i, "unterminated block comment"))
                j = n
            else:
                j += 2
            trivia.append(Trivia(BLOCK_COMMENT, i, j))
            i = j
            continue
        if _is_name_start(ch):
            j = i + 1
            while j < n and _is_name_part(text[j]):
                j += 1
            tokens.append(Token(NAME, i, j, text[i:j]))
            i = j
            continue
        if ch.isdigit():
            j = i + 1
            while j < n and (text[j].isalnum() or text[j] in "._"):
                j += 1
            tokens.append(Token(NUMBER, i, j, text[i:j]))
            i = j
            continue
        if ch in "'\"":
            j = skip_string(text, i)
            raw = text[i:j]
            if len(raw) < 2 or raw[-1] != ch:
                warnings.append((i, "unterminated string literal"))
                value = _decode_string(raw[1:])
            else:
                value = _decode_string(raw[1:-1])
            tokens.append(Token(STRING, i, j, raw, value))
            i = j
            continue
        if ch == "`":
            j = skip_template(text, i)
            raw = text[i:j]
            if len(raw) < 2 or raw[-1] != "`":
                warnings.append((i, "unterminated template literal"))
            tokens.append(Token(TEMPLATE, i, j, raw))
            i = j
            continue
        for p in _PUNCTS:
            if text.startswith(p, i):
                tokens.append(Token(PUNCT, i, i + len(p), p))
                i += len(p)
                break
        else:
            tokens.append(Token(BAD, i, i + 1, ch))
            warnings.append((i, f"unrecognized character {ch!r}"))
            i += 1
    return LexResult(tokens, trivia, warnings)
