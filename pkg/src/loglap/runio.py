"""Persistence: delimited outputs, matrix exports, manifests, run locking.

Every output file starts with comment lines recording the library version
and the configuration hash; all numbers are written with 12 significant
digits, locale-independent.  Files are written atomically (tmp + rename)
and a run holds an exclusive lock file in its output directory.
"""

from __future__ import annotations

import hashlib
import os
import struct
from dataclasses import dataclass, field

import numpy as np

from . import __version__

MAGIC = b"LLAP"
DTYPE_FLOAT64 = 1


def fmt12(x) -> str:
    return f"{float(x):.12g}"


def atomic_write_text(path: str, text: str) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    os.replace(tmp, path)


def atomic_write_bytes(path: str, blob: bytes) -> None:
    tmp = path + ".tmp"
    with open(tmp, "wb") as fh:
        fh.write(blob)
    os.replace(tmp, path)


def sha256_file(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def header_lines(cfg_hash: str, extra: dict | None = None) -> list[str]:
    lines = [f"# loglap {__version__}", f"# config {cfg_hash}"]
    for key, val in (extra or {}).items():
        lines.append(f"# {key} {val}")
    return lines


def write_delimited(path: str, columns, rows, cfg_hash: str,
                    extra: dict | None = None) -> None:
    """Comma-delimited text with a documented header and comment preamble."""
    out = header_lines(cfg_hash, extra)
    out.append(",".join(columns))
    for row in rows:
        cells = [cell if isinstance(cell, str) else fmt12(cell) for cell in row]
        out.append(",".join(cells))
    atomic_write_text(path, "\n".join(out) + "\n")


def export_matrix_triplet(path: str, A: np.ndarray, cfg_hash: str,
                          name: str = "matrix") -> None:
    """Plain-text (row, col, value) triplets, row-major order."""
    lines = header_lines(cfg_hash, {"matrix": name, "n": A.shape[0]})
    n, m = A.shape
    for i in range(n):
        for j in range(m):
            lines.append(f"{i} {j} {fmt12(A[i, j])}")
    atomic_write_text(path, "\n".join(lines) + "\n")


def export_matrix_dense(path: str, A: np.ndarray) -> None:
    """Dense binary: 16-byte header (magic, n, dtype tag, padding) + row-major data."""
    A = np.ascontiguousarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("dense export expects a square matrix")
    header = struct.pack("<4sII4x", MAGIC, A.shape[0], DTYPE_FLOAT64)
    atomic_write_bytes(path, header + A.tobytes())


def read_matrix_dense(path: str) -> np.ndarray:
    with open(path, "rb") as fh:
        header = fh.read(16)
        magic, n, tag = struct.unpack("<4sII4x", header)
        if magic != MAGIC:
            raise ValueError(f"bad magic {magic!r}")
        if tag != DTYPE_FLOAT64:
            raise ValueError(f"unsupported dtype tag {tag}")
        data = np.frombuffer(fh.read(8 * n * n), dtype=np.float64)
    return data.reshape(n, n).copy()


def export_node_list(path: str, nodes: np.ndarray, cfg_hash: str) -> None:
    lines = header_lines(cfg_hash, {"nodes": len(nodes)})
    lines.extend(fmt12(x) for x in nodes)
    atomic_write_text(path, "\n".join(lines) + "\n")


class OutputLock:
    """Exclusive lock file guarding an output directory for one run."""

    def __init__(self, directory: str):
        self.path = os.path.join(directory, ".loglap.lock")
        self._fd = None

    def __enter__(self):
        try:
            self._fd = os.open(self.path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise RuntimeError(
                f"output directory is locked by another run: {self.path}") from None
        os.write(self._fd, str(os.getpid()).encode())
        return self

    def __exit__(self, *exc):
        if self._fd is not None:
            os.close(self._fd)
            os.unlink(self.path)
        return False


@dataclass(eq=False)
class ResultManifest:
    """Per-run record: config echo, outputs with checksums, statuses, timings."""

    cfg_hash: str
    config_text: str
    version: str = __version__
    outputs: list = field(default_factory=list)     # (task, filename, sha256)
    statuses: dict = field(default_factory=dict)    # task -> converged|failed|done
    timings: dict = field(default_factory=dict)     # task -> seconds

    def add_output(self, task: str, path: str) -> None:
        self.outputs.append((task, os.path.basename(path), sha256_file(path)))

    def all_converged(self) -> bool:
        return all(s in ("converged", "done") for s in self.statuses.values())

    def render(self) -> str:
        lines = [f"manifest.version = {self.version}",
                 f"manifest.config_hash = {self.cfg_hash}"]
        for task, name, digest in self.outputs:
            lines.append(f"output.{task}.{name} = sha256:{digest}")
        for task, status in sorted(self.statuses.items()):
            lines.append(f"status.{task} = {status}")
        for task, secs in sorted(self.timings.items()):
            lines.append(f"timing.{task} = {secs:.3f}")
        lines.append("config.begin")
        lines.extend("  " + ln for ln in self.config_text.rstrip("\n").splitlines())
        lines.append("config.end")
        return "\n".join(lines) + "\n"

    def write(self, directory: str) -> str:
        path = os.path.join(directory, "manifest.txt")
        atomic_write_text(path, self.render())
        return path


def write_status(directory: str, statuses: dict) -> str:
    """Machine-readable status file, written on success and failure alike."""
    lines = [f"status.{task} = {val}" for task, val in sorted(statuses.items())]
    overall = "converged" if all(v in ("converged", "done")
                                 for v in statuses.values()) else "failed"
    lines.append(f"status.overall = {overall}")
    path = os.path.join(directory, "status.txt")
    atomic_write_text(path, "\n".join(lines) + "\n")
    return path
