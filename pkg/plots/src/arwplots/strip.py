"""Metadata stripping, for byte-level determinism comparisons.

PNG: drop ancillary text/time chunks (tEXt, zTXt, iTXt, tIME).
SVG: drop the <metadata>...</metadata> block.
"""

from __future__ import annotations

import re
import struct

_PNG_MAGIC = b"\x89PNG\r\n\x1a\n"
_DROP_CHUNKS = {b"tEXt", b"zTXt", b"iTXt", b"tIME"}


def stripped_bytes(path: str) -> bytes:
    with open(path, "rb") as fh:
        data = fh.read()
    if data.startswith(_PNG_MAGIC):
        return _strip_png(data)
    return _strip_svg(data)


def _strip_png(data: bytes) -> bytes:
    out = bytearray(_PNG_MAGIC)
    pos = len(_PNG_MAGIC)
    while pos < len(data):
        length = struct.unpack_from(">I", data, pos)[0]
        kind = data[pos + 4:pos + 8]
        end = pos + 12 + length  # length + type + payload + crc
        if kind not in _DROP_CHUNKS:
            out += data[pos:end]
        pos = end
    return bytes(out)


def _strip_svg(data: bytes) -> bytes:
    return re.sub(rb"<metadata>.*?</metadata>", b"", data, flags=re.S)
