"""Serialization of matrices and phase-space fields.

Binary grid format (version 1), used for operators and fields alike:

    line 1:   ``NHGRID 1``            (ascii magic + format version)
    lines:    ``key=value``           (ascii metadata; must include rows, cols)
    line:     ``end``                 (terminates the header)
    payload:  rows*cols complex values, row-major, each stored as two
              little-endian float64 (real part then imaginary part)

Real-valued grids are stored with a zero imaginary part so that one payload
layout covers everything; round trips are bit exact either way.
"""

from __future__ import annotations

import numpy as np

MAGIC = b"NHGRID 1\n"

_RESERVED = ("rows", "cols")


def save_grid(path, array, meta=None):
    """Write a 2-d real or complex array plus metadata to the binary format."""
    a = np.ascontiguousarray(np.asarray(array, dtype=np.complex128))
    if a.ndim != 2:
        raise ValueError("save_grid expects a 2-d array")
    lines = [f"rows={a.shape[0]}", f"cols={a.shape[1]}"]
    for key, val in (meta or {}).items():
        key = str(key)
        if key in _RESERVED:
            continue
        if "=" in key or "\n" in key or "\n" in str(val):
            raise ValueError(f"metadata key/value not representable: {key!r}")
        lines.append(f"{key}={val}")
    payload = np.empty((a.shape[0], a.shape[1], 2), dtype="<f8")
    payload[..., 0] = a.real
    payload[..., 1] = a.imag
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(("\n".join(lines) + "\nend\n").encode("ascii"))
        fh.write(payload.tobytes())


def load_grid(path):
    """Read back a grid written by :func:`save_grid`.

    Returns ``(array, meta)`` where ``array`` is complex128 and ``meta`` maps
    metadata keys to their string values.
    """
    with open(path, "rb") as fh:
        if fh.readline() != MAGIC:
            raise ValueError(f"{path}: not a NHGRID-1 file")
        meta = {}
        while True:
            line = fh.readline()
            if not line:
                raise ValueError(f"{path}: truncated header")
            text = line.decode("ascii").rstrip("\n")
            if text == "end":
                break
            key, _, val = text.partition("=")
            meta[key] = val
        rows, cols = int(meta.pop("rows")), int(meta.pop("cols"))
        payload = np.frombuffer(fh.read(rows * cols * 16), dtype="<f8")
    if payload.size != rows * cols * 2:
        raise ValueError(f"{path}: truncated payload")
    payload = payload.reshape(rows, cols, 2)
    return payload[..., 0] + 1j * payload[..., 1], meta


def format_float(x):
    """17-significant-digit decimal form, round-trip exact for float64."""
    return f"{float(x):.17g}"


def field_to_csv(field, path, meta=None):
    """Write a field as ``q,p,value`` rows preceded by ``# key=value`` comments."""
    grid = field.grid
    qs, ps = grid.q_centers(), grid.p_centers()
    merged = dict(field.meta or {})
    merged.update(meta or {})
    with open(path, "w", encoding="ascii") as fh:
        for key, val in merged.items():
            fh.write(f"# {key}={val}\n")
        fh.write("q,p,value\n")
        for j, p in enumerate(ps):
            row = field.values[j]
            for i, q in enumerate(qs):
                fh.write(f"{format_float(q)},{format_float(p)},{format_float(row[i])}\n")


def field_to_grid_file(field, path, meta=None):
    merged = dict(field.meta or {})
    merged.update(meta or {})
    merged.setdefault("kind", "field")
    merged.setdefault("nq", field.grid.nq)
    merged.setdefault("np", field.grid.np)
    save_grid(path, field.values, merged)


def field_to_raster(field, path, cmap="viridis"):
    """Convenience raster view of a field (not a test surface)."""
    import matplotlib

    matplotlib.use("Agg", force=False)
    import matplotlib.pyplot as plt

    plt.imsave(path, field.values, cmap=cmap, origin="lower")
