"""Plain-text fixtures: demand matrices ("N K" + 0/1 rows) and erasure patterns ("N SLOTS" + X/O rows)."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .feedback import StateFeedbackMatrix


def _lines(text: str) -> list[str]:
    return [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]


def _header(line: str, what: str) -> tuple[int, int]:
    parts = line.split()
    if len(parts) != 2:
        raise ValueError(f"{what} header must be two integers, got {line!r}")
    return int(parts[0]), int(parts[1])


def parse_sfm(text: str) -> StateFeedbackMatrix:
    lines = _lines(text)
    if not lines:
        raise ValueError("empty SFM file")
    n, k = _header(lines[0], "SFM")
    if k == 0 and len(lines) == 1:  # nothing wanted: the row lines are blank
        return StateFeedbackMatrix.from_rows(np.zeros((n, 0), dtype=np.uint8))
    rows = [ln.split() for ln in lines[1:]]
    if len(rows) != n:
        raise ValueError(f"expected {n} receiver rows, got {len(rows)}")
    for i, r in enumerate(rows):
        if len(r) != k or any(x not in ("0", "1") for x in r):
            raise ValueError(f"row {i + 1} must hold {k} digits 0/1")
    a = np.array([[int(x) for x in r] for r in rows], dtype=np.uint8).reshape(n, k)
    return StateFeedbackMatrix.from_rows(a)


def format_sfm(sfm: StateFeedbackMatrix) -> str:
    a = sfm.entries
    out = [f"{a.shape[0]} {a.shape[1]}"]
    out += [" ".join(str(int(x)) for x in row) for row in a]
    return "\n".join(out) + "\n"


def parse_schedule(text: str) -> np.ndarray:
    """Erasure pattern as a bool array (True = erased)."""
    lines = _lines(text)
    if not lines:
        raise ValueError("empty schedule file")
    n, slots = _header(lines[0], "schedule")
    rows = ["".join(ln.split()).upper() for ln in lines[1:]]
    if len(rows) != n:
        raise ValueError(f"expected {n} receiver rows, got {len(rows)}")
    for i, r in enumerate(rows):
        if len(r) != slots or set(r) - {"X", "O"}:
            raise ValueError(f"row {i + 1} must hold {slots} characters X/O")
    return np.array([[c == "X" for c in r] for r in rows], dtype=bool).reshape(n, slots)


def format_schedule(pattern: np.ndarray) -> str:
    p = np.asarray(pattern, dtype=bool)
    out = [f"{p.shape[0]} {p.shape[1]}"]
    out += [" ".join("X" if e else "O" for e in row) for row in p]
    return "\n".join(out) + "\n"


def load_sfm(path: str | Path) -> StateFeedbackMatrix:
    return parse_sfm(Path(path).read_text())


def load_schedule(path: str | Path) -> np.ndarray:
    return parse_schedule(Path(path).read_text())
