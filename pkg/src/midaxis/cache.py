"""On-disk spectrum cache.

Flat binary records, one file per (kind, j, geometry, window).  Layout is
fixed little-endian (see docs/formats.md), headed by magic bytes and a
format version, and closed by a CRC32 so corruption is detected on load.
Writes are atomic (write to a temp file, then rename).
"""

from __future__ import annotations

import hashlib
import os
import struct
import tempfile
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import CacheError
from .rotor import RotorGeometry

MAGIC = b"MAXC"
VERSION = 1
#: geometry constants are matched after rounding to this many significant digits
GEOM_DIGITS = 12

_HEADER = struct.Struct("<4sIQ8s5dQ")  # magic, version, j, kind, A1..A3, lo, hi, count


def _round_sig(x: float, digits: int = GEOM_DIGITS) -> float:
    return float(f"%.{digits - 1}e" % x)


def _key_name(kind: str, j: int, geom: RotorGeometry, window) -> str:
    a = tuple(_round_sig(v) for v in (geom.A1, geom.A2, geom.A3))
    lo, hi = float(window[0]), float(window[1])
    key = f"{kind}|{j}|{a[0]!r}|{a[1]!r}|{a[2]!r}|{lo.hex()}|{hi.hex()}"
    return f"j{j}_{kind}_{hashlib.sha256(key.encode()).hexdigest()[:20]}.bin"


@dataclass
class SpectrumCache:
    """Directory-backed store of windowed eigenvalue arrays."""

    directory: Path

    def __post_init__(self):
        self.directory = Path(self.directory)
        self.directory.mkdir(parents=True, exist_ok=True)

    def _path(self, kind, j, geom, window) -> Path:
        return self.directory / _key_name(kind, j, geom, window)

    def store(self, kind: str, j: int, geom: RotorGeometry, window, values: np.ndarray) -> Path:
        values = np.ascontiguousarray(values, dtype="<f8")
        kind_b = kind.encode()[:8].ljust(8, b"\0")
        header = _HEADER.pack(
            MAGIC,
            VERSION,
            j,
            kind_b,
            _round_sig(geom.A1),
            _round_sig(geom.A2),
            _round_sig(geom.A3),
            float(window[0]),
            float(window[1]),
            len(values),
        )
        payload = header + values.tobytes()
        crc = struct.pack("<I", zlib.crc32(payload))
        target = self._path(kind, j, geom, window)
        fd, tmp = tempfile.mkstemp(dir=self.directory, suffix=".tmp")
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(payload)
                fh.write(crc)
            os.replace(tmp, target)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
        return target

    def load(self, kind: str, j: int, geom: RotorGeometry, window) -> np.ndarray | None:
        """Cached eigenvalues, or None on a miss.  Raises CacheError on corruption."""
        path = self._path(kind, j, geom, window)
        if not path.exists():
            return None
        blob = path.read_bytes()
        if len(blob) < _HEADER.size + 4:
            raise CacheError(f"{path.name}: truncated record")
        crc_stored = struct.unpack("<I", blob[-4:])[0]
        if zlib.crc32(blob[:-4]) != crc_stored:
            raise CacheError(f"{path.name}: checksum mismatch")
        magic, version, j_rec, kind_b, a1, a2, a3, lo, hi, count = _HEADER.unpack(
            blob[: _HEADER.size]
        )
        if magic != MAGIC:
            raise CacheError(f"{path.name}: bad magic bytes")
        if version != VERSION:
            raise CacheError(f"{path.name}: unsupported format version {version}")
        values = np.frombuffer(blob[_HEADER.size : -4], dtype="<f8")
        if len(values) != count:
            raise CacheError(f"{path.name}: payload length mismatch")
        return values.copy()
