"""
Binary container for tabulated integrands.

Layout, little-endian throughout::

    magic     4 bytes  b"HGLF"
    version   u32      1
    d         u32      spatial dimension (the table has 2d axes)
    flags     u32      bit 0: self-dual claim, bit 1: trust mask follows the values
    Lambda    f64
    K0        f64
    bounds    2d × (f64 lower, f64 upper)
    shape     2d × u32
    values    prod(shape) × f64, row-major
    trusted   prod(shape) × u8, only when flag bit 1 is set
"""
import struct
from pathlib import Path
from typing import Union

import numpy as np

from varhom.exceptions import InvalidInput
from varhom.utils.utils import log
from varhom.varrep.table import TabulatedIntegrand

MAGIC = b"HGLF"
VERSION = 1
_HEAD = struct.Struct("<4sIII dd")

FLAG_SELFDUAL = 1
FLAG_TRUST = 2


def dumps_table(table: TabulatedIntegrand) -> bytes:
    k = len(table.axes)
    flags = (FLAG_SELFDUAL if table.selfdual else 0) | (0 if table.trusted.all() else FLAG_TRUST)
    parts = [_HEAD.pack(MAGIC, VERSION, table.dim, flags, table.Lambda, table.K0)]
    parts.append(struct.pack(f"<{2 * k}d", *[v for ax in table.axes for v in (ax[0], ax[-1])]))
    parts.append(struct.pack(f"<{k}I", *table.shape))
    parts.append(np.ascontiguousarray(table.values, dtype="<f8").tobytes())
    if flags & FLAG_TRUST:
        parts.append(np.ascontiguousarray(table.trusted, dtype=np.uint8).tobytes())
    return b"".join(parts)


def _need(blob: bytes, offset: int, size: int, block: str) -> None:
    if len(blob) < offset + size:
        raise InvalidInput(f"truncated HGLF {block} block: need {offset + size} bytes, got {len(blob)}")


def loads_table(blob: bytes) -> TabulatedIntegrand:
    _need(blob, 0, _HEAD.size, "header")
    magic, version, d, flags, Lambda, K0 = _HEAD.unpack_from(blob, 0)
    if magic != MAGIC:
        raise InvalidInput(f"not an HGLF container (magic {magic!r})")
    if version != VERSION:
        raise InvalidInput(f"unsupported HGLF version {version}")
    k = 2 * d
    offset = _HEAD.size
    _need(blob, offset, 16 * k + 4 * k, "bounds and shape")
    bounds = struct.unpack_from(f"<{2 * k}d", blob, offset)
    offset += 16 * k
    shape = struct.unpack_from(f"<{k}I", blob, offset)
    offset += 4 * k
    count = int(np.prod(shape))
    _need(blob, offset, 8 * count, "value")
    values = np.frombuffer(blob, dtype="<f8", count=count, offset=offset).reshape(shape)
    offset += 8 * count
    trusted = None
    if flags & FLAG_TRUST:
        _need(blob, offset, count, "trust")
        trusted = np.frombuffer(blob, dtype=np.uint8, count=count, offset=offset).reshape(shape).astype(bool)
    axes = [np.linspace(bounds[2 * i], bounds[2 * i + 1], n) for i, n in enumerate(shape)]
    return TabulatedIntegrand(axes, values, Lambda, K0, bool(flags & FLAG_SELFDUAL), trusted)


def save_table(path: Union[str, Path], table: TabulatedIntegrand) -> None:
    path = Path(path)
    path.write_bytes(dumps_table(table))
    log.info(f"wrote {path} ({'x'.join(map(str, table.shape))} table)")


def load_table(path: Union[str, Path]) -> TabulatedIntegrand:
    return loads_table(Path(path).read_bytes())
