"""Tokenizer for programs and standalone type expressions.

Line comments start with `--`. Newlines are not emitted as tokens; each token
records its line and column so the parser can recover line structure where it
needs it (declaration starts, branch boundaries).
"""

from __future__ import annotations

from dataclasses import dataclass

from .diagnostics import Diagnostic, DiagnosticError

KEYWORDS = {
    "type", "data", "rec", "forall", "let", "in", "case", "of", "match",
    "with", "if", "then", "else", "fork", "new", "send", "receive", "select",
}

# Longest symbols first so maximal munch is a simple prefix scan.
SYMBOLS = [
    "==", "<=", ">=", "&&", "||", "->", "=>",
    "(", ")", "[", "]", "{", "}", ";", ",", ":", "=", "+", "-", "*",
    "!", "?", "&", "|", "<", ">", "\\", ".", "_",
]


@dataclass(frozen=True)
class Token:
    kind: str  # 'lident' | 'uident' | 'int' | 'char' | 'kw' | 'sym' | 'eof'
    text: str
    line: int
    col: int

    def __repr__(self) -> str:
        return f"{self.kind}({self.text!r})@{self.line}:{self.col}"


def lex(source: str) -> list[Token]:
    tokens: list[Token] = []
    line, col, i = 1, 1, 0
    n = len(source)

    def err(msg: str) -> DiagnosticError:
        return DiagnosticError(Diagnostic(line, col, msg))

    while i < n:
        c = source[i]
        if c == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if source.startswith("--", i):
            while i < n and source[i] != "\n":
                i += 1
            continue
        start_line, start_col = line, col
        if c.isdigit():
            j = i
            while j < n and source[j].isdigit():
                j += 1
            tokens.append(Token("int", source[i:j], start_line, start_col))
            col += j - i
            i = j
            continue
        if c.isalpha():
            j = i
            while j < n and (source[j].isalnum() or source[j] in "_'"):
                j += 1
            text = source[i:j]
            if text in KEYWORDS:
                kind = "kw"
            elif text[0].isupper():
                kind = "uident"
            else:
                kind = "lident"
            tokens.append(Token(kind, text, start_line, start_col))
            col += j - i
            i = j
            continue
        if c == "'":
            # character literal with the usual escapes
            if i + 1 >= n:
                raise err("unterminated character literal")
            if source[i + 1] == "\\":
                if i + 3 >= n or source[i + 3] != "'":
                    raise err("bad character escape")
                esc = source[i + 2]
                table = {"n": "\n", "t": "\t", "\\": "\\", "'": "'", "0": "\0"}
                if esc not in table:
                    raise err(f"unknown escape \\{esc}")
                tokens.append(Token("char", table[esc], start_line, start_col))
                i += 4
                col += 4
                continue
            if i + 2 >= n or source[i + 2] != "'":
                raise err("unterminated character literal")
            tokens.append(Token("char", source[i + 1], start_line, start_col))
            i += 3
            col += 3
            continue
        # '-o' is the linear arrow unless it runs into a longer identifier
        if source.startswith("-o", i) and (i + 2 >= n or not (source[i + 2].isalnum() or source[i + 2] in "_'")):
            tokens.append(Token("sym", "-o", start_line, start_col))
            i += 2
            col += 2
            continue
        for sym in SYMBOLS:
            if source.startswith(sym, i):
                tokens.append(Token("sym", sym, start_line, start_col))
                i += len(sym)
                col += len(sym)
                break
        else:
            raise err(f"unexpected character {c!r}")
    tokens.append(Token("eof", "", line, col))
    return tokens
