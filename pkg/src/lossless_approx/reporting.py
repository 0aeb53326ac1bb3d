"""Run reports, delimited tables, and round-trippable matrix files.

Every table column carries a bracketed unit in its header; floats are written
with ``repr`` (shortest round-trip form), so a rerun with the same config and
seed reproduces each CSV byte for byte.  Matrices use a dense row-major layout
with a ``rows cols`` header and 17 significant digits.
"""

from __future__ import annotations

import csv
import os
import subprocess
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "RunReport",
    "format_value",
    "output_lock",
    "version_string",
    "write_csv",
    "write_matrix",
]


def format_value(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_csv(path: Path, columns: list[str], rows) -> Path:
    """RFC-4180 CSV with one unit-annotated header line."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_value(v) for v in row])
    return path


def write_matrix(path: Path, matrix: np.ndarray) -> Path:
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    with open(Path(path), "w") as fh:
        fh.write(f"{matrix.shape[0]} {matrix.shape[1]}\n")
        for row in matrix:
            fh.write(" ".join(f"{v:.17g}" for v in row) + "\n")
    return Path(path)


def version_string() -> str:
    here = Path(__file__).resolve().parent
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty", "--tags"],
            cwd=here, capture_output=True, text=True, check=False, timeout=5,
        )
        if out.returncode == 0 and out.stdout.strip():
            return f"lossless-approx {out.stdout.strip()}"
    except OSError:
        pass
    from . import __version__

    return f"lossless-approx {__version__}"


@contextmanager
def output_lock(outdir: Path):
    """Exclusive lock file guarding an output directory against concurrent runs."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    lock = outdir / ".lock"
    try:
        fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise RuntimeError(
            f"output directory {outdir} is locked by another run (remove {lock} if stale)"
        ) from None
    try:
        os.close(fd)
        yield outdir
    finally:
        lock.unlink(missing_ok=True)


@dataclass
class RunReport:
    """Plain-text run summary: config echo, per-check verdicts, tables, timing."""

    command: str
    config: dict
    checks: list = field(default_factory=list)
    tables: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    started: float = field(default_factory=time.perf_counter)

    def check(self, name: str, passed: bool, detail: str = "") -> bool:
        self.checks.append((name, bool(passed), detail))
        return bool(passed)

    def note(self, text: str) -> None:
        self.notes.append(text)

    def table(self, title: str, columns: list[str], rows) -> None:
        self.tables.append((title, columns, [list(r) for r in rows]))

    @property
    def all_passed(self) -> bool:
        return all(p for _, p, _ in self.checks)

    def render(self) -> str:
        lines = [
            f"command: {self.command}",
            f"version: {version_string()}",
            "config:",
        ]
        for key in sorted(self.config):
            lines.append(f"  {key} = {self.config[key]}")
        lines.append("")
        for name, passed, detail in self.checks:
            tag = "PASS" if passed else "FAIL"
            lines.append(f"[{tag}] {name}" + (f": {detail}" if detail else ""))
        for text in self.notes:
            lines.append(f"note: {text}")
        for title, columns, rows in self.tables:
            lines.append("")
            lines.append(f"table: {title}")
            widths = [
                max(len(c), *(len(format_value(r[i])) for r in rows)) if rows else len(c)
                for i, c in enumerate(columns)
            ]
            lines.append("  " + "  ".join(c.ljust(w) for c, w in zip(columns, widths)))
            for r in rows:
                lines.append(
                    "  " + "  ".join(format_value(v).ljust(w) for v, w in zip(r, widths))
                )
        lines.append("")
        lines.append(f"wall-clock [s]: {time.perf_counter() - self.started:.3f}")
        lines.append(f"overall: {'PASS' if self.all_passed else 'FAIL'}")
        return "\n".join(lines) + "\n"

    def write(self, path: Path) -> Path:
        Path(path).write_text(self.render())
        return Path(path)
