"""Versioned binary container for solved cell maps.

Layout (little endian):

    8 bytes   magic  b"HYPMAP01"
    u32       header length n
    n bytes   JSON header: delta, cells, signature names, iteration count,
              residual, convergence flag, point count m
    m * 2 i32 grid indices (i, j) in row-major order (ascending j, then i)
    m * 2 f64 image positions (re, im) in the same order
    u32       CRC-32 of everything above

Round trips are lossless; the grid and ghost rules are rebuilt
deterministically from the stored cells and spacing on load.
"""

from __future__ import annotations

import json
import struct
import zlib
from dataclasses import dataclass

import numpy as np

from .geometry import CellSpec
from .solver import GridError, SolverState, build_ghost_rules, build_grid
from .symmetry import reflection_group

__all__ = ["MapFileError", "MapHeader", "save_map", "load_map"]

_MAGIC = b"HYPMAP01"


class MapFileError(ValueError):
    pass


@dataclass(frozen=True)
class MapHeader:
    delta: float
    iterations: int
    residual: float
    converged: bool
    source_signature: str
    supergroup_signature: str
    target_orders: tuple[int, ...]
    m: int


def save_map(
    path,
    state: SolverState,
    converged: bool,
    source_signature: str = "",
    supergroup_signature: str = "",
    target_orders=(),
) -> None:
    if state.cell_euc is None:
        raise MapFileError("state has no target cell")
    header = {
        "version": 1,
        "delta": state.delta,
        "iterations": state.iteration_count,
        "residual": state.residual,
        "converged": bool(converged),
        "source_signature": source_signature,
        "supergroup_signature": supergroup_signature,
        "target_orders": [int(o) for o in target_orders],
        "m": state.size,
        "order": "row-major ascending (j, i)",
        "cell_hyperbolic": state.cell_hyp.to_json(),
        "cell_euclidean": state.cell_euc.to_json(),
    }
    hbytes = json.dumps(header, sort_keys=True).encode("utf-8")
    idx = np.ascontiguousarray(state.index.astype("<i4"))
    vals = np.empty((state.size, 2), dtype="<f8")
    vals[:, 0] = state.p.real
    vals[:, 1] = state.p.imag
    body = _MAGIC + struct.pack("<I", len(hbytes)) + hbytes + idx.tobytes() + vals.tobytes()
    crc = zlib.crc32(body) & 0xFFFFFFFF
    with open(path, "wb") as fh:
        fh.write(body)
        fh.write(struct.pack("<I", crc))


def load_map(path) -> tuple[SolverState, MapHeader]:
    """Read a map file, rebuild the solver state (grid, ghost rules) and
    attach the stored image vector."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < len(_MAGIC) + 8 or blob[: len(_MAGIC)] != _MAGIC:
        raise MapFileError("not a map file")
    body, (crc_stored,) = blob[:-4], struct.unpack("<I", blob[-4:])
    if zlib.crc32(body) & 0xFFFFFFFF != crc_stored:
        raise MapFileError("checksum failure")
    off = len(_MAGIC)
    (hlen,) = struct.unpack_from("<I", body, off)
    off += 4
    try:
        header = json.loads(body[off : off + hlen].decode("utf-8"))
    except Exception as exc:
        raise MapFileError("malformed header") from exc
    off += hlen
    if header.get("version") != 1:
        raise MapFileError("unsupported map file version")
    m = int(header["m"])
    idx = np.frombuffer(body, dtype="<i4", count=2 * m, offset=off).reshape(m, 2)
    off += 8 * m
    vals = np.frombuffer(body, dtype="<f8", count=2 * m, offset=off).reshape(m, 2)
    off += 16 * m
    if off != len(body):
        raise MapFileError("trailing bytes in map file")

    cell_h = CellSpec.from_json(header["cell_hyperbolic"])
    cell_e = CellSpec.from_json(header["cell_euclidean"])
    state = build_grid(cell_h, float(header["delta"]))
    state = build_ghost_rules(state, reflection_group(cell_h), reflection_group(cell_e))
    if state.size != m or not np.array_equal(state.index, idx.astype(np.int64)):
        raise MapFileError("stored grid does not match the rebuilt grid")
    state.cell_euc = cell_e
    state.p = np.ascontiguousarray(vals[:, 0] + 1j * vals[:, 1])
    state.iteration_count = int(header["iterations"])
    state.residual = float(header["residual"])
    meta = MapHeader(
        delta=float(header["delta"]),
        iterations=int(header["iterations"]),
        residual=float(header["residual"]),
        converged=bool(header["converged"]),
        source_signature=str(header.get("source_signature", "")),
        supergroup_signature=str(header.get("supergroup_signature", "")),
        target_orders=tuple(int(o) for o in header.get("target_orders", [])),
        m=m,
    )
    return state, meta
