"""Positioned diagnostics shared by the parser, checker, and CLI."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Diagnostic:
    line: int
    col: int
    message: str
    severity: str = "error"

    def render(self, filename: str = "<input>") -> str:
        return f"{filename}:{self.line}:{self.col}: {self.severity}: {self.message}"


class DiagnosticError(Exception):
    """Raised by phases that abort on their first diagnostic (type parsing, kinding)."""

    def __init__(self, diag: Diagnostic):
        super().__init__(diag.message)
        self.diag = diag


def error(message: str, line: int = 0, col: int = 0) -> Diagnostic:
    return Diagnostic(line, col, message)
