"""Packet formats.

All multi-byte integers are big-endian.

    sync_fine     MDI(counter u32, packet u32) | C(1) | OI(waf u16, bpa 3 x u8)     14 bytes
    sync_coarse   MDI(8) | n u16 | n x C(1) | n x OI(5)
    async_fine    stuff(C(1) | OI(5)) | EPM
    async_coarse  stuff(n u16 | n x C(1) | n x OI(5)) | EPM

EPM is 0xC0.  Inside async payloads 0xC0 is sent as DB DC and 0xDB as DB DD.
A stream on any transport starts with a 7-byte preamble:
``b"C3DC" | version | format | L``.
"""

from __future__ import annotations

import enum
import struct
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

from .codec import Bpa, MangledSymbol
from .errors import CodecError, FramingError, PreambleError

EPM = 0xC0
ESC = 0xDB
ESC_EPM = 0xDC
ESC_ESC = 0xDD

MAGIC = b"C3DC"
VERSION = 0x01
PREAMBLE_SIZE = 7

MDI_SIZE = 8
COUNT_SIZE = 2
OI_SIZE = 5
MAX_COUNT = 0xFFFF
MAX_WAF = 0xFFFF
U32_MAX = 0xFFFFFFFF

_MDI = struct.Struct(">II")
_OI = struct.Struct(">HBBB")
_COUNT = struct.Struct(">H")


class PacketFormat(enum.IntEnum):
    SYNC_FINE = 1
    SYNC_COARSE = 2
    ASYNC_FINE = 3
    ASYNC_COARSE = 4

    @property
    def is_sync(self) -> bool:
        return self in (PacketFormat.SYNC_FINE, PacketFormat.SYNC_COARSE)

    @property
    def is_fine(self) -> bool:
        return self in (PacketFormat.SYNC_FINE, PacketFormat.ASYNC_FINE)

    @property
    def cli_name(self) -> str:
        return self.name.lower().replace("_", "-")

    @classmethod
    def parse(cls, value) -> "PacketFormat":
        if isinstance(value, cls):
            return value
        if isinstance(value, int):
            return cls(value)
        return cls[str(value).upper().replace("-", "_")]


@dataclass(frozen=True)
class Mdi:
    counter: int
    packet_number: int

    def __post_init__(self):
        for name in ("counter", "packet_number"):
            if not 0 <= getattr(self, name) <= U32_MAX:
                raise FramingError(f"MDI {name} {getattr(self, name)} does not fit u32")


@dataclass(frozen=True)
class Oi:
    waf: int
    bpa: Bpa

    def pack(self) -> bytes:
        if not 0 <= self.waf <= MAX_WAF:
            raise FramingError(f"wrap-around factor {self.waf} does not fit the u16 wire field")
        if max(self.bpa) > 0xFF:
            raise FramingError(f"bits-per-axis {tuple(self.bpa)} does not fit u8 fields")
        return _OI.pack(self.waf, *self.bpa)

    @classmethod
    def unpack(cls, data, offset=0) -> "Oi":
        waf, t_r, t_g, t_b = _OI.unpack_from(data, offset)
        return cls(waf, Bpa(t_r, t_g, t_b))


@dataclass(frozen=True)
class Packet:
    format: PacketFormat
    records: tuple[MangledSymbol, ...]
    mdi: Mdi | None = None

    def __post_init__(self):
        fmt = PacketFormat.parse(self.format)
        object.__setattr__(self, "format", fmt)
        object.__setattr__(self, "records", tuple(self.records))
        if fmt.is_sync and self.mdi is None:
            raise FramingError(f"{fmt.cli_name} packets need an MDI")
        if not fmt.is_sync and self.mdi is not None:
            raise FramingError(f"{fmt.cli_name} packets carry no MDI")
        if fmt.is_fine and len(self.records) != 1:
            raise FramingError(f"{fmt.cli_name} packets carry exactly one record")
        if len(self.records) > MAX_COUNT:
            raise FramingError(f"{len(self.records)} records exceed the u16 count field")


def _record(residue, oi) -> MangledSymbol:
    try:
        return MangledSymbol(residue, oi.waf, oi.bpa)
    except CodecError as exc:
        raise FramingError(str(exc)) from None


# -- byte stuffing ------------------------------------------------------------


def stuff(payload: bytes) -> bytes:
    return bytes(payload).replace(b"\xdb", b"\xdb\xdd").replace(b"\xc0", b"\xdb\xdc")


def unstuff(data: bytes, base_offset: int = 0) -> bytes:
    """Reverse :func:`stuff`.  ``data`` must not contain the EPM byte."""
    data = bytes(data)
    if EPM in data:
        raise FramingError("unescaped end-of-packet marker inside payload", base_offset + data.index(EPM))
    parts = data.split(b"\xdb")
    out = [parts[0]]
    pos = base_offset + len(parts[0])
    for part in parts[1:]:
        if not part:
            raise FramingError("dangling escape byte", pos)
        if part[0] == ESC_EPM:
            out.append(b"\xc0")
        elif part[0] == ESC_ESC:
            out.append(b"\xdb")
        else:
            raise FramingError(f"invalid escape successor 0x{part[0]:02X}", pos + 1)
        out.append(part[1:])
        pos += 1 + len(part)
    return b"".join(out)


# -- payload bodies -----------------------------------------------------------


def _body(records) -> bytes:
    residues = bytes(r.residue for r in records)
    return residues + b"".join(Oi(r.waf, r.bpa).pack() for r in records)


def _parse_body(data, offset, n, base) -> tuple[MangledSymbol, ...]:
    need = offset + n * (1 + OI_SIZE)
    if len(data) < need:
        raise FramingError("truncated packet", base + len(data))
    oi_start = offset + n
    return tuple(
        _record(data[offset + i], Oi.unpack(data, oi_start + i * OI_SIZE)) for i in range(n)
    )


def _unstuffed_bytes(packet: Packet) -> bytes:
    fmt = packet.format
    if fmt.is_sync:
        head = _MDI.pack(packet.mdi.counter, packet.mdi.packet_number)
        if fmt is PacketFormat.SYNC_COARSE:
            head += _COUNT.pack(len(packet.records))
        return head + _body(packet.records)
    if fmt is PacketFormat.ASYNC_FINE:
        return _body(packet.records)
    return _COUNT.pack(len(packet.records)) + _body(packet.records)


def encode_packet(packet: Packet) -> bytes:
    raw = _unstuffed_bytes(packet)
    if packet.format.is_sync:
        return raw
    return stuff(raw) + bytes([EPM])


def build_packet(fmt, mdi: Mdi | None, records: Iterable[MangledSymbol]) -> bytes:
    """Serialise ``records`` in ``fmt``; async formats come back stuffed and EPM-terminated."""
    return encode_packet(Packet(PacketFormat.parse(fmt), tuple(records), mdi))


def decode_payload(fmt, raw, base) -> Packet:
    """Parse an unstuffed async payload (without the EPM)."""
    if fmt is PacketFormat.ASYNC_FINE:
        if len(raw) != 1 + OI_SIZE:
            if len(raw) < 1 + OI_SIZE:
                raise FramingError("truncated packet", base + len(raw))
            raise FramingError("trailing bytes before end-of-packet marker", base + 1 + OI_SIZE)
        return Packet(fmt, _parse_body(raw, 0, 1, base))
    if len(raw) < COUNT_SIZE:
        raise FramingError("truncated packet", base + len(raw))
    (n,) = _COUNT.unpack_from(raw)
    records = _parse_body(raw, COUNT_SIZE, n, base)
    end = COUNT_SIZE + n * (1 + OI_SIZE)
    if len(raw) != end:
        raise FramingError("trailing bytes before end-of-packet marker", base + end)
    return Packet(fmt, records)


def decode_one(fmt, data: bytes, offset: int = 0) -> tuple[Packet, int]:
    """Parse one packet starting at ``offset``; return it and the offset just past it.

    Never reads past the packet's own frame.
    """
    fmt = PacketFormat.parse(fmt)
    data = bytes(data)
    if fmt.is_sync:
        if len(data) - offset < MDI_SIZE:
            raise FramingError("truncated packet", len(data))
        mdi = Mdi(*_MDI.unpack_from(data, offset))
        pos = offset + MDI_SIZE
        if fmt is PacketFormat.SYNC_FINE:
            n = 1
        else:
            if len(data) - pos < COUNT_SIZE:
                raise FramingError("truncated packet", len(data))
            (n,) = _COUNT.unpack_from(data, pos)
            pos += COUNT_SIZE
        records = _parse_body(data, pos, n, 0)
        return Packet(fmt, records, mdi), pos + n * (1 + OI_SIZE)
    end = data.find(EPM, offset)
    if end < 0:
        raise FramingError("missing end-of-packet marker", len(data))
    raw = unstuff(data[offset:end], offset)
    return decode_payload(fmt, raw, offset), end + 1


def parse_packet(fmt, data: bytes) -> Packet:
    """Parse exactly one packet; trailing bytes are an error."""
    packet, end = decode_one(fmt, data)
    if end != len(data):
        raise FramingError("trailing bytes after packet", end)
    return packet


# -- information-to-packet ratio ------------------------------------------------


@dataclass(frozen=True)
class Ipr:
    """Color bytes over packet bytes, both unstuffed and as sent on the wire."""

    color_bytes: int
    packet_bytes: int
    wire_bytes: int

    @property
    def ratio(self) -> Fraction:
        return Fraction(self.color_bytes, self.packet_bytes)

    @property
    def wire_ratio(self) -> Fraction:
        return Fraction(self.color_bytes, self.wire_bytes)

    @property
    def value(self) -> float:
        return float(self.ratio)

    def __add__(self, other: "Ipr") -> "Ipr":
        return Ipr(
            self.color_bytes + other.color_bytes,
            self.packet_bytes + other.packet_bytes,
            self.wire_bytes + other.wire_bytes,
        )


def packet_ipr(packet: Packet, wire_bytes: int | None = None) -> Ipr:
    size = len(_unstuffed_bytes(packet))
    if not packet.format.is_sync:
        size += 1  # EPM
    return Ipr(len(packet.records), size, size if wire_bytes is None else wire_bytes)


def ipr(packet_bytes: bytes, fmt) -> Ipr:
    return packet_ipr(parse_packet(fmt, packet_bytes), len(packet_bytes))


# -- preamble and incremental deframing ----------------------------------------


def build_preamble(fmt, L: int = 8) -> bytes:
    return MAGIC + bytes([VERSION, int(PacketFormat.parse(fmt)), L])


def parse_preamble(data: bytes) -> tuple[PacketFormat, int]:
    if len(data) < PREAMBLE_SIZE or data[:4] != MAGIC:
        raise PreambleError("bad preamble: magic bytes missing")
    version, fmt, L = data[4], data[5], data[6]
    if version != VERSION:
        raise PreambleError(f"bad preamble: unsupported version {version}")
    try:
        fmt = PacketFormat(fmt)
    except ValueError:
        raise PreambleError(f"bad preamble: unknown packet format {fmt}") from None
    if L != 8:
        raise PreambleError(f"bad preamble: unsupported bit-width {L}")
    return fmt, L


class Deframer:
    """Split an async byte stream into unstuffed payloads, chunk by chunk.

    Feed arbitrary chunks to :meth:`push`; it returns each completed frame's
    payload (EPM removed, escapes resolved) in stream order.
    """

    def __init__(self, offset: int = 0):
        self._buf = bytearray()
        self._offset = offset  # stream offset of _buf[0]

    def push(self, chunk: bytes) -> list[bytes]:
        self._buf += chunk
        frames = []
        start = 0
        while True:
            end = self._buf.find(EPM, start)
            if end < 0:
                break
            frames.append(unstuff(self._buf[start:end], self._offset + start))
            start = end + 1
        if start:
            del self._buf[:start]
            self._offset += start
        return frames

    @property
    def pending(self) -> int:
        """Bytes received but not yet terminated by an EPM."""
        return len(self._buf)

    @property
    def offset(self) -> int:
        return self._offset
