"""NSF1 field dump format.

Layout: one ASCII header line ``NSF1 n=<n> layout=row-major dtype=f64le``
followed by 2*n*n little-endian 64-bit floats, u1 then u2, row-major.
Writer and reader round-trip bit-exactly.
"""

from __future__ import annotations

import os

import numpy as np

from .spectral import GridSpec, PhysicalField

_MAGIC = "NSF1"


def write_nsf1(path: str | os.PathLike, f: PhysicalField) -> None:
    if not (np.all(np.isfinite(f.u1)) and np.all(np.isfinite(f.u2))):
        raise ValueError("refusing to dump a field with non-finite entries")
    n = f.grid.n
    header = f"{_MAGIC} n={n} layout=row-major dtype=f64le\n"
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(np.ascontiguousarray(f.u1, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(f.u2, dtype="<f8").tobytes())


def read_nsf1(path: str | os.PathLike) -> PhysicalField:
    with open(path, "rb") as fh:
        header = fh.readline().decode("ascii").strip()
        parts = header.split()
        if len(parts) != 4 or parts[0] != _MAGIC:
            raise ValueError(f"not an NSF1 file: bad header {header!r}")
        fields = dict(p.split("=", 1) for p in parts[1:])
        if fields.get("layout") != "row-major" or fields.get("dtype") != "f64le":
            raise ValueError(f"unsupported NSF1 variant: {header!r}")
        n = int(fields["n"])
        raw = fh.read(2 * n * n * 8)
    if len(raw) != 2 * n * n * 8:
        raise ValueError("truncated NSF1 payload")
    data = np.frombuffer(raw, dtype="<f8").astype(np.float64)
    g = GridSpec(n)
    u1 = data[: n * n].reshape(n, n)
    u2 = data[n * n:].reshape(n, n)
    return PhysicalField(u1, u2, g)
